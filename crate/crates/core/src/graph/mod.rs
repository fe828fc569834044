//! Primal road networks, their dual (roads-as-nodes) graph, and node splits.

mod dual;
mod primal;

pub use dual::{to_dual, to_dual_with_classes, Direction, RoadGraph, RoadNode, UturnPolicy};
pub use primal::{Intersection, PrimalGraph, Segment, SegmentAttrs, ENDPOINT_TOLERANCE_DEG};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// OSM highway values used as class labels, in label-index order.
pub const DEFAULT_CLASSES: [&str; 8] = [
    "motorway",
    "trunk",
    "primary",
    "secondary",
    "tertiary",
    "unclassified",
    "residential",
    "living_street",
];

/// Maps a highway tag to a class index. `*_link` tags count as their parent
/// road type.
pub fn class_index(classes: &[String], highway: &str) -> Option<usize> {
    let base = highway.strip_suffix("_link").unwrap_or(highway);
    classes.iter().position(|c| c == base)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Either an absolute node count or a fraction of labeled nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SplitSize {
    Count(usize),
    Fraction(f64),
}

impl SplitSize {
    fn resolve(self, labeled: usize) -> Result<usize> {
        match self {
            SplitSize::Count(n) => Ok(n),
            SplitSize::Fraction(f) if (0.0..=1.0).contains(&f) => {
                Ok((f * labeled as f64).round() as usize)
            }
            SplitSize::Fraction(f) => Err(Error::InvalidInput(format!(
                "split fraction {f} outside [0, 1]"
            ))),
        }
    }
}

impl Default for SplitSize {
    fn default() -> Self {
        SplitSize::Count(0)
    }
}

/// Validation and test sizes; every other labeled node trains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    #[serde(default)]
    pub val: SplitSize,
    #[serde(default)]
    pub test: SplitSize,
}

impl SplitSpec {
    pub fn counts(seed: u64, val: usize, test: usize) -> Self {
        Self {
            seed,
            val: SplitSize::Count(val),
            test: SplitSize::Count(test),
        }
    }
}

/// Randomly assigns labeled nodes to validation and test, the rest to train.
/// Unlabeled nodes stay in the graph but are never part of a split.
pub fn split_nodes(mut graph: RoadGraph, spec: &SplitSpec) -> Result<RoadGraph> {
    let mut labeled = graph.labeled_nodes();
    let val = spec.val.resolve(labeled.len())?;
    let test = spec.test.resolve(labeled.len())?;
    if val + test > labeled.len() {
        return Err(Error::InvalidInput(format!(
            "requested {val} validation + {test} test nodes but only {} are labeled",
            labeled.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    labeled.shuffle(&mut rng);

    let mut splits = vec![None; graph.len()];
    for (rank, &v) in labeled.iter().enumerate() {
        splits[v] = Some(if rank < val {
            Split::Val
        } else if rank < val + test {
            Split::Test
        } else {
            Split::Train
        });
    }
    graph.set_splits(splits)?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled_graph(n: usize, unlabeled_every: usize) -> RoadGraph {
        let nodes = (0..n)
            .map(|i| RoadNode {
                id: format!("{i}-{}-0", i + 1),
                tail: i.to_string(),
                head: (i + 1).to_string(),
                key: 0,
                tail_lonlat: [0.0, i as f64 * 1e-3],
                head_lonlat: [0.0, (i + 1) as f64 * 1e-3],
                attrs: SegmentAttrs {
                    highway: (unlabeled_every == 0 || i % unlabeled_every != 0)
                        .then(|| DEFAULT_CLASSES[i % 8].to_string()),
                    ..Default::default()
                },
            })
            .collect();
        let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        let classes = DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect();
        RoadGraph::from_parts(nodes, &edges, classes).unwrap()
    }

    #[test]
    fn chengdu_split_sizes() {
        let g = split_nodes(labeled_graph(22041, 0), &SplitSpec::counts(0, 1842, 1981)).unwrap();
        assert_eq!(g.split_nodes(Split::Train).len(), 18218);
        assert_eq!(g.split_nodes(Split::Val).len(), 1842);
        assert_eq!(g.split_nodes(Split::Test).len(), 1981);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = split_nodes(labeled_graph(300, 7), &SplitSpec::counts(42, 30, 40)).unwrap();
        let b = split_nodes(labeled_graph(300, 7), &SplitSpec::counts(42, 30, 40)).unwrap();
        assert_eq!(a.splits(), b.splits());
        let c = split_nodes(labeled_graph(300, 7), &SplitSpec::counts(43, 30, 40)).unwrap();
        assert_ne!(a.splits(), c.splits());
    }

    #[test]
    fn empty_val_test_all_train() {
        let g = split_nodes(labeled_graph(50, 5), &SplitSpec::counts(1, 0, 0)).unwrap();
        assert_eq!(g.split_nodes(Split::Train), g.labeled_nodes());
    }

    #[test]
    fn unlabeled_nodes_never_split() {
        let g = split_nodes(labeled_graph(100, 3), &SplitSpec::counts(9, 10, 10)).unwrap();
        for v in 0..g.len() {
            assert_eq!(g.split(v).is_some(), g.label(v).is_some());
        }
    }

    #[test]
    fn oversized_request_errors() {
        let err = split_nodes(labeled_graph(10, 0), &SplitSpec::counts(0, 6, 5)).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn fractions_resolve() {
        let spec = SplitSpec {
            seed: 3,
            val: SplitSize::Fraction(0.1),
            test: SplitSize::Fraction(0.2),
        };
        let g = split_nodes(labeled_graph(100, 0), &spec).unwrap();
        assert_eq!(g.split_nodes(Split::Val).len(), 10);
        assert_eq!(g.split_nodes(Split::Test).len(), 20);
    }

    #[test]
    fn link_tags_map_to_parent() {
        let classes: Vec<String> = DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect();
        assert_eq!(class_index(&classes, "primary_link"), Some(2));
        assert_eq!(class_index(&classes, "cycleway"), None);
    }
}
