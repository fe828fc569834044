use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hash::node_hash;

pub const VFE1_MAGIC: &[u8; 4] = b"VFE1";

/// Precomputed per-node vectors keyed by node-id hash, all of one dimension.
/// Used for visual-feature-encoder outputs and for persisted feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    keys: Vec<u64>,
    values: Vec<f32>,
    index: HashMap<u64, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dimension must be >= 1".into()));
        }
        Ok(Self {
            dim,
            keys: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn insert(&mut self, key: u64, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector of length {} in a table of dim {}",
                vector.len(),
                self.dim
            )));
        }
        if self.index.contains_key(&key) {
            return Err(Error::InvalidInput(format!("duplicate node id hash {key:#018x}")));
        }
        self.index.insert(key, self.keys.len());
        self.keys.push(key);
        self.values.extend_from_slice(vector);
        Ok(())
    }

    pub fn insert_id(&mut self, id: &str, vector: &[f32]) -> Result<()> {
        self.insert(node_hash(id), vector)
            .map_err(|e| match e {
                Error::InvalidInput(_) => Error::InvalidInput(format!("duplicate node id {id:?}")),
                other => other,
            })
    }

    pub fn get(&self, key: u64) -> Option<&[f32]> {
        self.index
            .get(&key)
            .map(|&i| &self.values[i * self.dim..(i + 1) * self.dim])
    }

    pub fn get_id(&self, id: &str) -> Option<&[f32]> {
        self.get(node_hash(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[f32])> {
        self.keys.iter().copied().zip(self.values.chunks_exact(self.dim))
    }

    /// Checks the dimension against an expected value.
    pub fn expect_dim(self, expected: Option<usize>) -> Result<Self> {
        match expected {
            Some(d) if d != self.dim => Err(Error::Shape(format!(
                "embedding dim {} does not match expected {d}",
                self.dim
            ))),
            _ => Ok(self),
        }
    }

    /// Loads a CSV (`node_id,dim=<d>` header) or VFE1 binary table, sniffing
    /// the format from the first bytes.
    pub fn load(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let table = if bytes.starts_with(VFE1_MAGIC) {
            Self::read_vfe1(&mut bytes.as_slice())?
        } else {
            Self::read_csv(bytes.as_slice())?
        };
        table.expect_dim(expected_dim)
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::Format(e.to_string()))?
            .ok_or_else(|| Error::Format("empty embedding CSV".into()))?;
        let dim = parse_csv_header(&header)?;
        let mut table = Self::new(dim)?;
        let mut row = Vec::with_capacity(dim);
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Format(e.to_string()))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let id = fields.next().unwrap_or_default().trim();
            row.clear();
            for f in fields {
                row.push(f.trim().parse::<f32>().map_err(|_| {
                    Error::Format(format!("line {}: cannot parse {f:?}", lineno + 2))
                })?);
            }
            if row.len() != dim {
                return Err(Error::Shape(format!(
                    "ragged row at line {}: {} values, expected {dim}",
                    lineno + 2,
                    row.len()
                )));
            }
            table.insert_id(id, &row)?;
        }
        Ok(table)
    }

    /// Writes CSV rows keyed by the given node ids (the table itself only
    /// stores hashes).
    pub fn write_csv<'a>(&self, mut out: impl Write, ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let io = |e: std::io::Error| Error::Format(e.to_string());
        writeln!(out, "node_id,dim={}", self.dim).map_err(io)?;
        for id in ids {
            if let Some(v) = self.get_id(id) {
                write!(out, "{id}").map_err(io)?;
                for x in v {
                    write!(out, ",{x}").map_err(io)?;
                }
                writeln!(out).map_err(io)?;
            }
        }
        Ok(())
    }

    pub fn read_vfe1(reader: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact(reader, &mut magic)?;
        if &magic != VFE1_MAGIC {
            return Err(Error::Format("missing VFE1 magic".into()));
        }
        let dim = read_u32(reader)? as usize;
        let count = read_u32(reader)? as usize;
        let mut table = Self::new(dim)?;
        let mut record = vec![0u8; 8 + 4 * dim];
        let mut vector = vec![0f32; dim];
        for _ in 0..count {
            read_exact(reader, &mut record)?;
            let key = u64::from_le_bytes(record[..8].try_into().expect("8 bytes"));
            for (v, b) in vector.iter_mut().zip(record[8..].chunks_exact(4)) {
                *v = f32::from_le_bytes(b.try_into().expect("4 bytes"));
            }
            table.insert(key, &vector)?;
        }
        Ok(table)
    }

    pub fn write_vfe1(&self, out: &mut impl Write) -> Result<()> {
        let io = |e: std::io::Error| Error::Format(e.to_string());
        out.write_all(VFE1_MAGIC).map_err(io)?;
        out.write_all(&(self.dim as u32).to_le_bytes()).map_err(io)?;
        out.write_all(&(self.len() as u32).to_le_bytes()).map_err(io)?;
        for (key, v) in self.iter() {
            out.write_all(&key.to_le_bytes()).map_err(io)?;
            for x in v {
                out.write_all(&x.to_le_bytes()).map_err(io)?;
            }
        }
        Ok(())
    }

    pub fn to_vfe1_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(12 + self.len() * (8 + 4 * self.dim));
        self.write_vfe1(&mut buf).expect("write to vec");
        buf
    }

    pub fn save_vfe1(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_vfe1_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn parse_csv_header(header: &str) -> Result<usize> {
    let header = header.trim().trim_start_matches('\u{feff}');
    let mut parts = header.split(',');
    let (Some("node_id"), Some(dim_field), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::Format(format!(
            "embedding CSV header must be \"node_id,dim=<d>\", got {header:?}"
        )));
    };
    dim_field
        .strip_prefix("dim=")
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad dim field {dim_field:?}")))
}

fn read_exact(reader: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    reader
        .read_exact(buf)
        .map_err(|_| Error::Format("VFE1 data truncated".into()))
}

fn read_u32(reader: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(reader, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn csv(rows: usize, dim: usize) -> String {
        let mut s = format!("node_id,dim={dim}\n");
        for r in 0..rows {
            s.push_str(&format!("{r}-{}-0", r + 1));
            for c in 0..dim {
                s.push_str(&format!(",{}", (r * dim + c) as f32 * 0.001));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn csv_512() {
        let t = EmbeddingTable::read_csv(csv(10, 512).as_bytes()).unwrap();
        assert_eq!(t.dim(), 512);
        assert_eq!(t.len(), 10);
        assert_eq!(t.get_id("3-4-0").unwrap()[1], (3 * 512 + 1) as f32 * 0.001);
        assert!(t.clone().expect_dim(Some(512)).is_ok());
        assert!(matches!(t.expect_dim(Some(2048)), Err(Error::Shape(_))));
    }

    #[test]
    fn ragged_rows() {
        let text = "node_id,dim=3\na,1,2,3\nb,1,2\n";
        let err = EmbeddingTable::read_csv(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Shape(ref m) if m.contains("ragged")), "{err}");
    }

    #[test]
    fn duplicate_ids() {
        let text = "node_id,dim=1\na,1\na,2\n";
        assert!(matches!(
            EmbeddingTable::read_csv(text.as_bytes()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn bad_header() {
        assert!(EmbeddingTable::read_csv("id,v1\n".as_bytes()).is_err());
        assert!(EmbeddingTable::read_csv("node_id,dim=0\n".as_bytes()).is_err());
    }

    #[test]
    fn truncated_binary() {
        let t = EmbeddingTable::read_csv(csv(3, 4).as_bytes()).unwrap();
        let bytes = t.to_vfe1_bytes();
        assert!(EmbeddingTable::read_vfe1(&mut &bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn csv_written_and_read_back() {
        let t = EmbeddingTable::read_csv(csv(4, 3).as_bytes()).unwrap();
        let ids: Vec<String> = (0..4).map(|r| format!("{r}-{}-0", r + 1)).collect();
        let mut out = Vec::new();
        t.write_csv(&mut out, ids.iter().map(String::as_str)).unwrap();
        assert_eq!(EmbeddingTable::read_csv(out.as_slice()).unwrap(), t);
    }

    proptest! {
        #[test]
        fn vfe1_round_trip_is_bit_exact(
            dim in 1usize..16,
            rows in proptest::collection::vec(proptest::collection::vec(any::<u32>(), 16), 0..20),
        ) {
            let mut t = EmbeddingTable::new(dim).unwrap();
            for (i, bits) in rows.iter().enumerate() {
                let v: Vec<f32> = bits[..dim].iter().map(|&b| f32::from_bits(b)).collect();
                t.insert(i as u64 * 7919, &v).unwrap();
            }
            let bytes = t.to_vfe1_bytes();
            let back = EmbeddingTable::read_vfe1(&mut bytes.as_slice()).unwrap();
            prop_assert_eq!(back.keys(), t.keys());
            let a: Vec<u32> = t.iter().flat_map(|(_, v)| v.iter().map(|x| x.to_bits())).collect();
            let b: Vec<u32> = back.iter().flat_map(|(_, v)| v.iter().map(|x| x.to_bits())).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(back.to_vfe1_bytes(), bytes);
        }
    }
}
