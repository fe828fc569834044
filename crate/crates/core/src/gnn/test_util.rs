use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{RoadGraph, RoadNode, SegmentAttrs};
use crate::nn::Dense;

/// Graph with `n` roads and up to `edges` random directed links.
pub(crate) fn random_graph(n: usize, edges: usize, seed: u64) -> RoadGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..n)
        .map(|i| RoadNode {
            id: format!("n{i}-m{i}-0"),
            tail: format!("n{i}"),
            head: format!("m{i}"),
            key: 0,
            tail_lonlat: [0.0, 0.0],
            head_lonlat: [0.0, 1e-3],
            attrs: SegmentAttrs::default(),
        })
        .collect();
    let mut list = Vec::new();
    for _ in 0..edges {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            list.push((a, b));
        }
    }
    let classes = (0..8).map(|c| format!("c{c}")).collect();
    RoadGraph::from_parts(nodes, &list, classes).unwrap()
}

pub(crate) fn random_dense(rows: usize, cols: usize, seed: u64) -> Dense {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dense::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}
