#include <stdio.h>
#include <string.h>
#include "motifcount.h"

int main(int argc, char **argv) {
    if (argc < 2) return 10;
    uint32_t edges[] = {0, 1, 1, 2, 2, 0, 2, 3};
    McGraph *g = NULL;
    if (mc_graph_from_edges(4, edges, 4, &g) != MC_STATUS_OK) return 11;
    if (mc_graph_edge_count(g) != 4) return 12;
    McTables *t = NULL;
    if (mc_build(g, 17, 1, 0.0, argv[1], 1, &t) != MC_STATUS_INVALID_ARGUMENT) return 13;
    if (strlen(mc_last_error_message()) == 0) return 14;
    if (mc_build(g, 3, 1, 0.0, argv[1], 1, &t) != MC_STATUS_OK) return 15;
    char buf[80];
    if (mc_tables_total(t, buf, sizeof buf) != MC_STATUS_OK) return 16;
    printf("total %s\n", buf);
    mc_tables_free(t);
    mc_graph_free(g);
    return 0;
}
