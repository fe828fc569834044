use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::primal::{PrimalGraph, SegmentAttrs};
use super::{class_index, Split, DEFAULT_CLASSES};
use crate::error::{Error, Result};
use crate::hash::node_hash;

/// Whether a road may connect to its own reverse segment (a U-turn).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UturnPolicy {
    #[default]
    Include,
    Exclude,
}

impl std::str::FromStr for UturnPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "include" => Ok(Self::Include),
            "exclude" => Ok(Self::Exclude),
            other => Err(Error::InvalidInput(format!("unknown u-turn policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
    #[default]
    Both,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" => Ok(Self::In),
            "out" => Ok(Self::Out),
            "both" => Ok(Self::Both),
            other => Err(Error::InvalidInput(format!("unknown direction {other:?}"))),
        }
    }
}

/// A road in the dual graph. Carries the source segment's attributes
/// unchanged plus the coordinates of its two intersections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: String,
    #[serde(rename = "u")]
    pub tail: String,
    #[serde(rename = "v")]
    pub head: String,
    pub key: i64,
    pub tail_lonlat: [f64; 2],
    pub head_lonlat: [f64; 2],
    #[serde(flatten)]
    pub attrs: SegmentAttrs,
}

impl RoadNode {
    pub fn hash(&self) -> u64 {
        node_hash(&self.id)
    }

    /// Polyline in (lon, lat); falls back to the straight tail→head line when
    /// the segment carries no geometry.
    pub fn polyline(&self) -> Vec<[f64; 2]> {
        match &self.attrs.geometry {
            Some(g) => g.clone(),
            None => vec![self.tail_lonlat, self.head_lonlat],
        }
    }
}

/// Dual road graph: roads are nodes, and a directed edge a→b exists when road
/// `a` ends where road `b` starts.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    nodes: Vec<RoadNode>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    both_adj: Vec<Vec<usize>>,
    labels: Vec<Option<usize>>,
    splits: Vec<Option<Split>>,
    classes: Vec<String>,
    index: HashMap<String, usize>,
}

impl RoadGraph {
    /// Assembles a graph from nodes and a directed edge list. Labels are
    /// derived from the `highway` attribute against `classes`.
    pub fn from_parts(
        nodes: Vec<RoadNode>,
        edges: &[(usize, usize)],
        classes: Vec<String>,
    ) -> Result<Self> {
        let n = nodes.len();
        let mut index = HashMap::with_capacity(n);
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate road id {:?}", node.id)));
            }
        }
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Integrity(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::Integrity(format!("self-loop on road {:?}", nodes[a].id)));
            }
            out_adj[a].push(b);
            in_adj[b].push(a);
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        let both_adj = out_adj
            .iter()
            .zip(&in_adj)
            .map(|(o, i)| {
                let mut both: Vec<usize> = o.iter().chain(i).copied().collect();
                both.sort_unstable();
                both.dedup();
                both
            })
            .collect();
        let labels = nodes
            .iter()
            .map(|node| node.attrs.highway.as_deref().and_then(|h| class_index(&classes, h)))
            .collect();
        Ok(Self {
            splits: vec![None; n],
            nodes,
            out_adj,
            in_adj,
            both_adj,
            labels,
            classes,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn node(&self, v: usize) -> &RoadNode {
        &self.nodes[v]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    pub fn splits(&self) -> &[Option<Split>] {
        &self.splits
    }

    pub fn split(&self, v: usize) -> Option<Split> {
        self.splits[v]
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    /// Directed edges in (source, target) order, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().map(move |&b| (a, b)))
    }

    /// Neighbor list of `v`, sorted by node index.
    pub fn neighbors(&self, v: usize, direction: Direction) -> Result<&[usize]> {
        if v >= self.nodes.len() {
            return Err(Error::UnknownNode(format!("index {v}")));
        }
        Ok(self.adjacency(direction)[v].as_slice())
    }

    pub fn neighbors_by_id(&self, id: &str, direction: Direction) -> Result<Vec<&str>> {
        let v = self
            .node_index(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))?;
        Ok(self.adjacency(direction)[v]
            .iter()
            .map(|&n| self.nodes[n].id.as_str())
            .collect())
    }

    /// Full adjacency lists for one direction.
    pub fn adjacency(&self, direction: Direction) -> &[Vec<usize>] {
        match direction {
            Direction::In => &self.in_adj,
            Direction::Out => &self.out_adj,
            Direction::Both => &self.both_adj,
        }
    }

    pub fn max_degree(&self, direction: Direction) -> usize {
        self.adjacency(direction).iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.labels[v].is_some()).collect()
    }

    /// Nodes assigned to `split`, in index order.
    pub fn split_nodes(&self, split: Split) -> Vec<usize> {
        (0..self.len())
            .filter(|&v| self.splits[v] == Some(split))
            .collect()
    }

    pub fn split_mask(&self, split: Split) -> Vec<bool> {
        self.splits.iter().map(|s| *s == Some(split)).collect()
    }

    pub(crate) fn set_splits(&mut self, splits: Vec<Option<Split>>) -> Result<()> {
        if splits.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} split entries for {} nodes",
                splits.len(),
                self.len()
            )));
        }
        for (v, s) in splits.iter().enumerate() {
            if s.is_some() && self.labels[v].is_none() {
                return Err(Error::InvalidInput(format!(
                    "unlabeled road {:?} assigned to a split",
                    self.nodes[v].id
                )));
            }
        }
        self.splits = splits;
        Ok(())
    }

    /// Overrides labels, e.g. for synthetic datasets whose labels do not come
    /// from highway tags. Clears any split assignment that no longer refers to
    /// a labeled node.
    pub fn set_labels(&mut self, labels: Vec<Option<usize>>) -> Result<()> {
        if labels.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.len()
            )));
        }
        if let Some(bad) = labels.iter().flatten().find(|&&c| c >= self.num_classes()) {
            return Err(Error::InvalidInput(format!(
                "label {bad} outside [0, {})",
                self.num_classes()
            )));
        }
        for (s, l) in self.splits.iter_mut().zip(&labels) {
            if l.is_none() {
                *s = None;
            }
        }
        self.labels = labels;
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        let file = DualFile {
            dual: true,
            classes: self.classes.clone(),
            nodes: self
                .nodes
                .iter()
                .zip(&self.splits)
                .zip(&self.labels)
                .map(|((node, split), label)| DualNodeRecord {
                    node: node.clone(),
                    split: *split,
                    label: *label,
                })
                .collect(),
            edges: self
                .edges()
                .map(|(a, b)| DualEdgeRecord {
                    u: self.nodes[a].id.clone(),
                    v: self.nodes[b].id.clone(),
                    key: 0,
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("road graph serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: DualFile = serde_json::from_str(text)?;
        if !file.dual {
            return Err(Error::Format("expected a dual graph (\"dual\": true)".into()));
        }
        let index: HashMap<&str, usize> = file
            .nodes
            .iter()
            .enumerate()
            .map(|(i, r)| (r.node.id.as_str(), i))
            .collect();
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::Integrity(format!("edge references unknown road {id:?}")))
        };
        let edges = file
            .edges
            .iter()
            .map(|e| Ok((lookup(&e.u)?, lookup(&e.v)?)))
            .collect::<Result<Vec<_>>>()?;
        let splits: Vec<Option<Split>> = file.nodes.iter().map(|r| r.split).collect();
        let labels: Vec<Option<usize>> = file.nodes.iter().map(|r| r.label).collect();
        let nodes = file.nodes.into_iter().map(|r| r.node).collect();
        let mut graph = Self::from_parts(nodes, &edges, file.classes)?;
        graph.set_labels(labels)?;
        graph.set_splits(splits)?;
        Ok(graph)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn write_json_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Serialize, Deserialize)]
struct DualFile {
    dual: bool,
    #[serde(default = "default_classes")]
    classes: Vec<String>,
    nodes: Vec<DualNodeRecord>,
    edges: Vec<DualEdgeRecord>,
}

fn default_classes() -> Vec<String> {
    DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect()
}

#[derive(Serialize, Deserialize)]
struct DualNodeRecord {
    #[serde(flatten)]
    node: RoadNode,
    split: Option<Split>,
    #[serde(default)]
    label: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct DualEdgeRecord {
    u: String,
    v: String,
    key: i64,
}

/// Builds the dual graph with the default 8 highway classes.
pub fn to_dual(primal: &PrimalGraph, uturn: UturnPolicy) -> RoadGraph {
    to_dual_with_classes(primal, uturn, default_classes())
}

pub fn to_dual_with_classes(
    primal: &PrimalGraph,
    uturn: UturnPolicy,
    classes: Vec<String>,
) -> RoadGraph {
    let segments = primal.segments();
    let mut by_tail: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, s) in segments.iter().enumerate() {
        by_tail.entry(s.tail.as_str()).or_default().push(i);
    }

    let mut edges = Vec::new();
    for (a, sa) in segments.iter().enumerate() {
        let Some(successors) = by_tail.get(sa.head.as_str()) else {
            continue;
        };
        for &b in successors {
            if a == b {
                continue;
            }
            let reverse = segments[b].head == sa.tail;
            if reverse && uturn == UturnPolicy::Exclude {
                continue;
            }
            edges.push((a, b));
        }
    }

    let coord = |id: &str| {
        let n = primal.intersection(id).expect("validated primal graph");
        [n.lon, n.lat]
    };
    let nodes = segments
        .iter()
        .map(|s| RoadNode {
            id: s.node_id(),
            tail: s.tail.clone(),
            head: s.head.clone(),
            key: s.key,
            tail_lonlat: coord(&s.tail),
            head_lonlat: coord(&s.head),
            attrs: s.attrs.clone(),
        })
        .collect();
    RoadGraph::from_parts(nodes, &edges, classes).expect("dual construction is consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::primal::{Intersection, Segment};

    fn seg(u: &str, v: &str) -> Segment {
        Segment {
            tail: u.into(),
            head: v.into(),
            key: 0,
            attrs: SegmentAttrs::default(),
        }
    }

    fn inter(id: &str, lon: f64, lat: f64) -> Intersection {
        Intersection {
            id: id.into(),
            lon,
            lat,
        }
    }

    fn abc() -> PrimalGraph {
        PrimalGraph::new(
            vec![inter("A", 0.0, 0.0), inter("B", 0.001, 0.0), inter("C", 0.002, 0.0)],
            vec![seg("A", "B"), seg("B", "C")],
        )
        .unwrap()
    }

    #[test]
    fn path_has_single_dual_edge() {
        let g = to_dual(&abc(), UturnPolicy::Include);
        assert_eq!(g.len(), 2);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        assert_eq!(g.node(0).id, "A-B-0");
        assert_eq!(g.neighbors(0, Direction::Out).unwrap(), &[1]);
        assert!(g.neighbors(0, Direction::In).unwrap().is_empty());
        assert_eq!(g.neighbors_by_id("A-B-0", Direction::Out).unwrap(), vec!["B-C-0"]);
    }

    #[test]
    fn unknown_node_errors() {
        let g = to_dual(&abc(), UturnPolicy::Include);
        assert!(matches!(g.neighbors(5, Direction::Both), Err(Error::UnknownNode(_))));
        assert!(g.neighbors_by_id("X-Y-0", Direction::Both).is_err());
    }

    #[test]
    fn uturn_policy() {
        let primal = PrimalGraph::new(
            vec![inter("A", 0.0, 0.0), inter("B", 0.001, 0.0)],
            vec![seg("A", "B"), seg("B", "A")],
        )
        .unwrap();
        let inc = to_dual(&primal, UturnPolicy::Include);
        assert_eq!(inc.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
        let exc = to_dual(&primal, UturnPolicy::Exclude);
        assert_eq!(exc.edge_count(), 0);
    }

    #[test]
    fn primal_self_loop_never_links_to_itself() {
        let primal = PrimalGraph::new(vec![inter("A", 0.0, 0.0)], vec![seg("A", "A")]).unwrap();
        let g = to_dual(&primal, UturnPolicy::Include);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn labels_follow_highway_tags() {
        let mut a = seg("A", "B");
        a.attrs.highway = Some("residential".into());
        let mut b = seg("B", "C");
        b.attrs.highway = Some("footway".into());
        let primal = PrimalGraph::new(
            vec![inter("A", 0.0, 0.0), inter("B", 0.001, 0.0), inter("C", 0.002, 0.0)],
            vec![a, b],
        )
        .unwrap();
        let g = to_dual(&primal, UturnPolicy::Include);
        let residential = DEFAULT_CLASSES.iter().position(|c| *c == "residential");
        assert_eq!(g.label(0), residential);
        assert_eq!(g.label(1), None);
    }

    #[test]
    fn json_round_trip() {
        let mut g = to_dual(&abc(), UturnPolicy::Include);
        g.set_labels(vec![Some(1), None]).unwrap();
        g.set_splits(vec![Some(Split::Val), None]).unwrap();
        let again = RoadGraph::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(g, again);
    }
}
