use std::collections::{HashMap, HashSet};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Direction, RoadGraph};

/// How to treat nodes whose degree is below the fan-out.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallDegree {
    /// Keep the full neighbor list once.
    #[default]
    TakeAll,
    /// Draw exactly `fan-out` neighbors uniformly with replacement.
    Resample,
}

/// One layer's computation graph: for each target, the sampled neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayer {
    pub targets: Vec<usize>,
    pub neighbors: Vec<Vec<usize>>,
    /// Row of each target in the previous level's representation.
    pub(crate) self_rows: Vec<usize>,
    /// Rows of each target's neighbors in the previous level.
    pub(crate) neighbor_rows: Vec<Vec<usize>>,
}

/// Sampled K-hop neighborhood of a set of target nodes.
///
/// `layers[k]` computes depth-(k+1) representations; the last layer's targets
/// are the requested targets. `input_nodes` are the nodes whose features feed
/// the first layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBlock {
    pub fanouts: Vec<usize>,
    pub input_nodes: Vec<usize>,
    pub layers: Vec<BlockLayer>,
}

impl SampledBlock {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn targets(&self) -> &[usize] {
        &self.layers.last().expect("non-empty block").targets
    }
}

/// GraphSAGE-style uniform neighborhood sampling. `fanouts[0]` caps the
/// neighbors of the targets themselves, `fanouts[1]` the next hop, and so on.
/// Nodes with more neighbors than the fan-out are sampled without
/// replacement; smaller neighborhoods are kept whole.
pub fn sample_neighborhood(
    graph: &RoadGraph,
    targets: &[usize],
    fanouts: &[usize],
    direction: Direction,
    rng: &mut impl Rng,
) -> Result<SampledBlock> {
    sample_neighborhood_with(graph, targets, fanouts, direction, SmallDegree::TakeAll, rng)
}

pub fn sample_neighborhood_with(
    graph: &RoadGraph,
    targets: &[usize],
    fanouts: &[usize],
    direction: Direction,
    small_degree: SmallDegree,
    rng: &mut impl Rng,
) -> Result<SampledBlock> {
    if fanouts.is_empty() {
        return Err(Error::InvalidInput("at least one fan-out is required".into()));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= graph.len()) {
        return Err(Error::UnknownNode(format!("index {bad}")));
    }
    let adjacency = graph.adjacency(direction);

    // frontier[h] holds the nodes whose depth-(K-h) representation is needed
    let mut frontier = dedup_preserving(targets);
    let mut hops: Vec<(Vec<usize>, Vec<Vec<usize>>)> = Vec::with_capacity(fanouts.len());
    for &fanout in fanouts {
        let sampled: Vec<Vec<usize>> = frontier
            .iter()
            .map(|&v| pick(&adjacency[v], fanout, small_degree, rng))
            .collect();
        let mut next = frontier.clone();
        let mut seen: HashSet<usize> = next.iter().copied().collect();
        for &n in sampled.iter().flatten() {
            if seen.insert(n) {
                next.push(n);
            }
        }
        hops.push((frontier, sampled));
        frontier = next;
    }
    let input_nodes = frontier;

    // hops are ordered outermost-target first; layers run the other way
    let mut layers = Vec::with_capacity(hops.len());
    let mut previous: &[usize] = &input_nodes;
    for (targets, neighbors) in hops.iter().rev() {
        let position: HashMap<usize, usize> = previous.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        layers.push(BlockLayer {
            self_rows: targets.iter().map(|v| position[v]).collect(),
            neighbor_rows: neighbors
                .iter()
                .map(|list| list.iter().map(|n| position[n]).collect())
                .collect(),
            targets: targets.clone(),
            neighbors: neighbors.clone(),
        });
        previous = targets;
    }
    Ok(SampledBlock {
        fanouts: fanouts.to_vec(),
        input_nodes,
        layers,
    })
}

/// Block with every neighbor at every depth, i.e. the dense computation.
pub fn full_block(graph: &RoadGraph, targets: &[usize], depth: usize, direction: Direction) -> Result<SampledBlock> {
    // never consumed: no neighborhood exceeds an unbounded fan-out
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    sample_neighborhood(graph, targets, &vec![usize::MAX; depth], direction, &mut rng)
}

fn pick(neighbors: &[usize], fanout: usize, small_degree: SmallDegree, rng: &mut impl Rng) -> Vec<usize> {
    let degree = neighbors.len();
    if degree == 0 || fanout == 0 {
        return Vec::new();
    }
    if degree > fanout {
        let mut idx: Vec<usize> = sample(rng, degree, fanout).into_iter().collect();
        idx.sort_unstable();
        return idx.into_iter().map(|i| neighbors[i]).collect();
    }
    match small_degree {
        SmallDegree::TakeAll => neighbors.to_vec(),
        SmallDegree::Resample if degree == fanout => neighbors.to_vec(),
        SmallDegree::Resample => (0..fanout)
            .map(|_| neighbors[rng.random_range(0..degree)])
            .collect(),
    }
}

fn dedup_preserving(nodes: &[usize]) -> Vec<usize> {
    let mut seen = HashSet::with_capacity(nodes.len());
    nodes.iter().copied().filter(|v| seen.insert(*v)).collect()
}
