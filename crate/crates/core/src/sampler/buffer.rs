//! Pre-drawn neighbor choices for high-degree nodes.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::count::{self, Count};

pub const DEFAULT_DELTA0: usize = 4096;
pub const DEFAULT_BUFFER: usize = 1024;
const MAX_BUFFERS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BufferConfig {
    /// Degree from which draws are buffered.
    pub delta0: usize,
    /// Draws per refill.
    pub size: usize,
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig {
            delta0: DEFAULT_DELTA0,
            size: DEFAULT_BUFFER,
        }
    }
}

impl BufferConfig {
    pub fn disabled() -> BufferConfig {
        BufferConfig {
            delta0: usize::MAX,
            size: 1,
        }
    }
}

/// Per-worker store of independent weighted draws, keyed by `(node, treelet key)`.
/// Each refill takes `size` i.i.d. draws from the exact weighted distribution in
/// one sweep over the neighborhood and shuffles them, so consuming the buffer
/// is equivalent to drawing one at a time.
#[derive(Debug, Default)]
pub struct NeighborBuffer {
    pending: HashMap<(u32, u64), Vec<(u32, u16)>>,
}

impl NeighborBuffer {
    pub fn new() -> NeighborBuffer {
        NeighborBuffer::default()
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Next buffered draw for `(node, key)`, refilling through `sweep` when
    /// empty. `sweep(targets, out)` receives sorted uniform targets in
    /// `[0, total)` and must push one choice per target in order.
    pub fn next<R: Rng + ?Sized>(
        &mut self,
        node: u32,
        key: u64,
        total: &Count,
        size: usize,
        rng: &mut R,
        sweep: impl FnOnce(&[Count], &mut Vec<(u32, u16)>),
    ) -> (u32, u16) {
        if let Some(buf) = self.pending.get_mut(&(node, key)) {
            if let Some(x) = buf.pop() {
                return x;
            }
        }
        if self.pending.len() >= MAX_BUFFERS {
            self.pending.clear();
        }
        let mut targets: Vec<Count> = (0..size.max(1)).map(|_| count::random_below(rng, total)).collect();
        targets.sort_unstable();
        let mut out = Vec::with_capacity(targets.len());
        sweep(&targets, &mut out);
        out.shuffle(rng);
        let x = out.pop().expect("at least one draw");
        self.pending.insert((node, key), out);
        x
    }
}
