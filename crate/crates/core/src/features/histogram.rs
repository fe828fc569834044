use super::tile::ImageTile;
use crate::error::{Error, Result};

pub const BINS_PER_CHANNEL: usize = 32;
const BIN_WIDTH: usize = 256 / BINS_PER_CHANNEL;

/// Raw per-channel pixel counts, 32 bins of width 8 over [0, 256).
pub fn channel_counts(tile: &ImageTile) -> Vec<[u32; BINS_PER_CHANNEL]> {
    let channels = tile.channels();
    let mut counts = vec![[0u32; BINS_PER_CHANNEL]; channels];
    for px in tile.pixels().chunks_exact(channels) {
        for (c, &v) in px.iter().enumerate() {
            counts[c][usize::from(v) / BIN_WIDTH] += 1;
        }
    }
    counts
}

/// Normalized intensity histograms: 32 bins per channel, each channel summing
/// to 1. Channels are concatenated R, G, B, then the optional DSM channel.
pub fn histogram_features(tile: &ImageTile, dsm: Option<&ImageTile>) -> Result<Vec<f64>> {
    if let Some(d) = dsm {
        if d.size() != tile.size() {
            return Err(Error::Shape(format!(
                "DSM tile is {0}x{0}, image tile is {1}x{1}",
                d.size(),
                tile.size()
            )));
        }
        if d.channels() != 1 {
            return Err(Error::Shape(format!("DSM tile has {} channels, expected 1", d.channels())));
        }
    }
    let pixel_count = (tile.size() * tile.size()) as f64;
    let mut out = Vec::with_capacity(BINS_PER_CHANNEL * (tile.channels() + 1));
    for t in std::iter::once(tile).chain(dsm) {
        for bins in channel_counts(t) {
            out.extend(bins.iter().map(|&c| f64::from(c) / pixel_count));
        }
    }
    Ok(out)
}
