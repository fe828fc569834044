use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance, in degrees, for geometry endpoints to coincide with the
/// segment's intersections.
pub const ENDPOINT_TOLERANCE_DEG: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
}

/// Optional per-road attributes. Absent values stay `None`; nothing is
/// defaulted at parse time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentAttrs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highway: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oneway: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tunnel: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(rename = "u")]
    pub tail: String,
    #[serde(rename = "v")]
    pub head: String,
    pub key: i64,
    #[serde(flatten)]
    pub attrs: SegmentAttrs,
}

impl Segment {
    /// Stable dual-node id, `"tail-head-key"`.
    pub fn node_id(&self) -> String {
        format!("{}-{}-{}", self.tail, self.head, self.key)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PrimalFile {
    nodes: Vec<Intersection>,
    edges: Vec<Segment>,
}

/// Conventional road network: intersections as nodes, road segments as
/// directed edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalGraph {
    intersections: Vec<Intersection>,
    index: HashMap<String, usize>,
    segments: Vec<Segment>,
}

impl PrimalGraph {
    /// Builds and validates a primal graph.
    pub fn new(intersections: Vec<Intersection>, segments: Vec<Segment>) -> Result<Self> {
        let mut index = HashMap::with_capacity(intersections.len());
        for (i, n) in intersections.iter().enumerate() {
            if !(n.lon.is_finite() && n.lat.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "intersection {:?} has non-finite coordinates",
                    n.id
                )));
            }
            if index.insert(n.id.clone(), i).is_some() {
                return Err(Error::Integrity(format!(
                    "duplicate intersection id {:?}",
                    n.id
                )));
            }
        }

        let mut triples = HashSet::with_capacity(segments.len());
        for s in &segments {
            let tail = index.get(&s.tail).ok_or_else(|| {
                Error::Integrity(format!(
                    "segment {} references unknown intersection {:?}",
                    s.node_id(),
                    s.tail
                ))
            })?;
            let head = index.get(&s.head).ok_or_else(|| {
                Error::Integrity(format!(
                    "segment {} references unknown intersection {:?}",
                    s.node_id(),
                    s.head
                ))
            })?;
            if !triples.insert((s.tail.as_str(), s.head.as_str(), s.key)) {
                return Err(Error::Integrity(format!(
                    "duplicate segment {}",
                    s.node_id()
                )));
            }
            if let Some(length) = s.attrs.length {
                if !length.is_finite() || length < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "segment {} has invalid length {length}",
                        s.node_id()
                    )));
                }
            }
            if let Some(geom) = &s.attrs.geometry {
                check_geometry(s, geom, &intersections[*tail], &intersections[*head])?;
            }
        }

        Ok(Self {
            intersections,
            index,
            segments,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: PrimalFile = serde_json::from_str(text)?;
        Self::new(file.nodes, file.edges)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let file = PrimalFile {
            nodes: self.intersections.clone(),
            edges: self.segments.clone(),
        };
        serde_json::to_string(&file).expect("primal graph serializes")
    }

    pub fn intersections(&self) -> &[Intersection] {
        &self.intersections
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn intersection(&self, id: &str) -> Option<&Intersection> {
        self.index.get(id).map(|&i| &self.intersections[i])
    }
}

fn check_geometry(
    s: &Segment,
    geom: &[[f64; 2]],
    tail: &Intersection,
    head: &Intersection,
) -> Result<()> {
    if geom.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "segment {} geometry has fewer than 2 points",
            s.node_id()
        )));
    }
    if geom.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "segment {} geometry has non-finite coordinates",
            s.node_id()
        )));
    }
    let near = |p: &[f64; 2], n: &Intersection| {
        (p[0] - n.lon).abs() <= ENDPOINT_TOLERANCE_DEG && (p[1] - n.lat).abs() <= ENDPOINT_TOLERANCE_DEG
    };
    if !near(&geom[0], tail) || !near(&geom[geom.len() - 1], head) {
        return Err(Error::Integrity(format!(
            "segment {} geometry does not start at {:?} and end at {:?}",
            s.node_id(),
            tail.id,
            head.id
        )));
    }
    Ok(())
}
