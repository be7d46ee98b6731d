fn main() {
    std::process::exit(motifcount::cli::run(std::env::args_os()));
}
