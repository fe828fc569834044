use super::raster::{encode_pnm, Raster};
use crate::error::{Error, Result};

/// Edge length, in pixels, of the road-aligned tiles.
pub const TILE_SIZE: usize = 120;

/// Sample positions this close to an integer pixel coordinate are snapped to
/// it, so axis-aligned extraction reproduces source pixels exactly.
const SNAP_EPS: f64 = 1e-9;

/// A square image patch centered on a road and rotated so the road runs
/// along the tile's vertical axis (direction of travel pointing up).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTile {
    size: usize,
    channels: usize,
    pixels: Vec<u8>,
    pub center: (f64, f64),
    pub heading: f64,
    pub out_of_bounds_fraction: f64,
}

impl ImageTile {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixel(&self, col: usize, row: usize, channel: usize) -> u8 {
        self.pixels[(row * self.size + col) * self.channels + channel]
    }

    pub fn to_pnm_bytes(&self) -> Vec<u8> {
        encode_pnm(self.channels, self.size, self.size, &self.pixels)
    }

    /// Builds a tile from raw pixels, e.g. for tests or externally produced
    /// patches.
    pub fn from_pixels(size: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != size * size * channels {
            return Err(Error::Shape(format!(
                "{size}x{size}x{channels} tile needs {} bytes, got {}",
                size * size * channels,
                pixels.len()
            )));
        }
        Ok(Self {
            size,
            channels,
            pixels,
            center: (0.0, 0.0),
            heading: 0.0,
            out_of_bounds_fraction: 0.0,
        })
    }
}

/// Extracts a `size`×`size` tile around `center` (planar meters), rotated by
/// `heading` degrees clockwise from north.
///
/// Tile pixel (row, col) samples the raster at
/// `center + right·(col − size/2)·pitch − forward·(row − size/2)·pitch`, where
/// `forward = (sin h, cos h)` and `right = (cos h, −sin h)` in (east, north).
/// Samples use bilinear interpolation; those falling outside the raster are
/// zero and counted in `out_of_bounds_fraction`.
pub fn extract_tile(raster: &Raster, center: (f64, f64), heading: f64, size: usize) -> Result<ImageTile> {
    if !(0.0..360.0).contains(&heading) {
        return Err(Error::InvalidInput(format!("heading {heading} outside [0, 360)")));
    }
    if size == 0 {
        return Err(Error::InvalidInput("tile size must be positive".into()));
    }
    let pitch = raster.transform().pixel_pitch()?;
    let (sin, cos) = heading.to_radians().sin_cos();
    let channels = raster.channels();
    let half = (size / 2) as f64;

    let mut pixels = vec![0u8; size * size * channels];
    let mut outside = 0usize;
    let mut sample = vec![0.0f64; channels];
    for row in 0..size {
        let down = (row as f64 - half) * pitch;
        for col in 0..size {
            let right = (col as f64 - half) * pitch;
            let x = center.0 + right * cos - down * sin;
            let y = center.1 - right * sin - down * cos;
            let (pc, pr) = raster.world_to_pixel(x, y);
            if bilinear(raster, snap(pc), snap(pr), &mut sample) {
                let base = (row * size + col) * channels;
                for (dst, v) in pixels[base..base + channels].iter_mut().zip(&sample) {
                    *dst = v.round().clamp(0.0, 255.0) as u8;
                }
            } else {
                outside += 1;
            }
        }
    }

    Ok(ImageTile {
        size,
        channels,
        pixels,
        center,
        heading,
        out_of_bounds_fraction: outside as f64 / (size * size) as f64,
    })
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < SNAP_EPS {
        r
    } else {
        v
    }
}

/// Bilinear sample at fractional pixel-center coordinates. Returns false when
/// the point lies outside the hull of pixel centers.
fn bilinear(raster: &Raster, col: f64, row: f64, out: &mut [f64]) -> bool {
    let (w, h) = (raster.width(), raster.height());
    if !(col >= 0.0 && row >= 0.0 && col <= (w - 1) as f64 && row <= (h - 1) as f64) {
        return false;
    }
    let c0 = col.floor() as usize;
    let r0 = row.floor() as usize;
    let c1 = (c0 + 1).min(w - 1);
    let r1 = (r0 + 1).min(h - 1);
    let fc = col - c0 as f64;
    let fr = row - r0 as f64;
    for (ch, o) in out.iter_mut().enumerate() {
        let p00 = f64::from(raster.pixel(c0, r0, ch));
        let p01 = f64::from(raster.pixel(c1, r0, ch));
        let p10 = f64::from(raster.pixel(c0, r1, ch));
        let p11 = f64::from(raster.pixel(c1, r1, ch));
        let top = p00 + (p01 - p00) * fc;
        let bottom = p10 + (p11 - p10) * fc;
        *o = top + (bottom - top) * fr;
    }
    true
}
