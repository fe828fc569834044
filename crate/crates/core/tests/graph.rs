use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roadgnn::graph::{
    split_nodes, to_dual, Direction, Intersection, PrimalGraph, RoadGraph, RoadNode, Segment, SegmentAttrs, SplitSpec,
    UturnPolicy, DEFAULT_CLASSES,
};
use roadgnn::Split;

fn segment(u: &str, v: &str, highway: Option<&str>) -> Segment {
    Segment {
        tail: u.into(),
        head: v.into(),
        key: 0,
        attrs: SegmentAttrs {
            highway: highway.map(Into::into),
            ..Default::default()
        },
    }
}

/// 4x4 intersections joined by two-way streets.
fn grid4() -> PrimalGraph {
    let id = |r: usize, c: usize| format!("n{r}{c}");
    let mut nodes = Vec::new();
    let mut segs = Vec::new();
    for r in 0..4 {
        for c in 0..4 {
            nodes.push(Intersection {
                id: id(r, c),
                lon: 104.0 + c as f64 * 1e-3,
                lat: 30.6 + r as f64 * 1e-3,
            });
            let tag = DEFAULT_CLASSES[(r + c) % 8];
            if c + 1 < 4 {
                segs.push(segment(&id(r, c), &id(r, c + 1), Some(tag)));
                segs.push(segment(&id(r, c + 1), &id(r, c), Some(tag)));
            }
            if r + 1 < 4 {
                segs.push(segment(&id(r, c), &id(r + 1, c), Some(tag)));
                segs.push(segment(&id(r + 1, c), &id(r, c), None));
            }
        }
    }
    PrimalGraph::new(nodes, segs).unwrap()
}

fn edge_ids(g: &RoadGraph) -> BTreeSet<(String, String)> {
    g.edges().map(|(a, b)| (g.node(a).id.clone(), g.node(b).id.clone())).collect()
}

#[test]
fn grid_dual_matches_brute_force() {
    let primal = grid4();
    assert_eq!(primal.segments().len(), 48);
    for policy in [UturnPolicy::Include, UturnPolicy::Exclude] {
        let dual = to_dual(&primal, policy);
        assert_eq!(dual.len(), 48);
        let mut expected = BTreeSet::new();
        for a in primal.segments() {
            for b in primal.segments() {
                let uturn = b.tail == a.head && b.head == a.tail;
                if a.node_id() != b.node_id() && a.head == b.tail && !(uturn && policy == UturnPolicy::Exclude) {
                    expected.insert((a.node_id(), b.node_id()));
                }
            }
        }
        assert_eq!(edge_ids(&dual), expected, "{policy:?}");
        // every street is two-way, so each road has exactly one U-turn successor
        let uturns = if policy == UturnPolicy::Include { 48 } else { 0 };
        let grid_turns: usize = primal
            .segments()
            .iter()
            .map(|a| primal.segments().iter().filter(|b| a.head == b.tail && b.head != a.tail).count())
            .sum();
        assert_eq!(dual.edge_count(), grid_turns + uturns);
    }
}

#[test]
fn dual_nodes_carry_labels_and_attributes() {
    let dual = to_dual(&grid4(), UturnPolicy::Include);
    for (v, node) in dual.nodes().iter().enumerate() {
        let expected = node
            .attrs
            .highway
            .as_deref()
            .and_then(|h| DEFAULT_CLASSES.iter().position(|c| *c == h));
        assert_eq!(dual.label(v), expected);
        assert_eq!(node.id, format!("{}-{}-0", node.tail, node.head));
    }
    assert_eq!(dual.labeled_nodes().len(), 36);
}

#[test]
fn neighbors_match_brute_force_on_random_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let n = 50;
    let nodes: Vec<RoadNode> = (0..n)
        .map(|i| RoadNode {
            id: format!("r{i}"),
            tail: format!("t{i}"),
            head: format!("h{i}"),
            key: 0,
            tail_lonlat: [0.0, 0.0],
            head_lonlat: [0.0, 0.0],
            attrs: SegmentAttrs::default(),
        })
        .collect();
    let mut edges = Vec::new();
    while edges.len() < 180 {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            edges.push((a, b));
        }
    }
    // duplicates are deliberate
    edges.extend_from_within(..10);
    let classes = DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect();
    let g = RoadGraph::from_parts(nodes, &edges, classes).unwrap();

    for v in 0..n {
        let out: BTreeSet<usize> = edges.iter().filter(|e| e.0 == v).map(|e| e.1).collect();
        let inc: BTreeSet<usize> = edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect();
        let both: BTreeSet<usize> = out.union(&inc).copied().collect();
        for (dir, want) in [(Direction::Out, &out), (Direction::In, &inc), (Direction::Both, &both)] {
            let got = g.neighbors(v, dir).unwrap();
            assert_eq!(got, want.iter().copied().collect::<Vec<_>>().as_slice(), "node {v} {dir:?}");
        }
    }
    let distinct: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
    assert_eq!(g.edge_count(), distinct.len());
    assert!(g.neighbors(n, Direction::Out).is_err());
}

#[test]
fn city_scale_split_and_round_trip() {
    // a long chain of labeled roads the size of a mid-sized city network
    let roads = 22_041;
    let nodes: Vec<Intersection> = (0..=roads)
        .map(|i| Intersection {
            id: i.to_string(),
            lon: 104.0 + (i % 150) as f64 * 1e-3,
            lat: 30.6 + (i / 150) as f64 * 1e-3,
        })
        .collect();
    let segs: Vec<Segment> = (0..roads)
        .map(|i| segment(&i.to_string(), &(i + 1).to_string(), Some(DEFAULT_CLASSES[i % 8])))
        .collect();
    let primal = PrimalGraph::new(nodes, segs).unwrap();
    let reparsed = PrimalGraph::from_json_str(&primal.to_json_string()).unwrap();
    assert_eq!(reparsed, primal);

    let dual = split_nodes(to_dual(&primal, UturnPolicy::Include), &SplitSpec::counts(0, 1842, 1981)).unwrap();
    assert_eq!(dual.len(), roads);
    assert_eq!(dual.edge_count(), roads - 1);
    assert_eq!(dual.split_nodes(Split::Train).len(), 18_218);
    assert_eq!(dual.split_nodes(Split::Val).len(), 1842);
    assert_eq!(dual.split_nodes(Split::Test).len(), 1981);

    let back = RoadGraph::from_json_str(&dual.to_json_string()).unwrap();
    assert_eq!(back.nodes(), dual.nodes());
    assert_eq!(back.labels(), dual.labels());
    assert_eq!(back.splits(), dual.splits());
    assert_eq!(edge_ids(&back), edge_ids(&dual));
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(PrimalGraph::from_json_str("{").is_err());
    let dangling = r#"{"nodes": [{"id": "a", "lon": 0, "lat": 0}], "edges": [{"u": "a", "v": "b", "key": 0}]}"#;
    assert!(PrimalGraph::from_json_str(dangling).is_err());
    let primal_as_dual = r#"{"dual": false, "nodes": [], "edges": []}"#;
    assert!(RoadGraph::from_json_str(primal_as_dual).is_err());
}
