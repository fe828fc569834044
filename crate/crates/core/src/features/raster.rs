use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// World-file affine transform. Maps pixel-center coordinates (col, row) to
/// planar meters:
///
/// ```text
/// x = a·col + b·row + c
/// y = d·col + e·row + f
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    pub a: f64,
    pub d: f64,
    pub b: f64,
    pub e: f64,
    pub c: f64,
    pub f: f64,
}

impl GeoTransform {
    /// Coefficients in world-file order A, D, B, E, C, F.
    pub fn from_world_file_values(v: [f64; 6]) -> Result<Self> {
        let t = Self {
            a: v[0],
            d: v[1],
            b: v[2],
            e: v[3],
            c: v[4],
            f: v[5],
        };
        let det = t.determinant();
        if !v.iter().all(|x| x.is_finite()) || det == 0.0 || !det.is_finite() {
            return Err(Error::NonInvertible(det));
        }
        Ok(t)
    }

    pub fn parse_world_file(text: &str) -> Result<Self> {
        let values: Vec<f64> = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::Format(format!("world file: cannot parse {tok:?}")))
            })
            .collect::<Result<_>>()?;
        let values: [f64; 6] = values.try_into().map_err(|v: Vec<f64>| {
            Error::Format(format!("world file: expected 6 numbers, found {}", v.len()))
        })?;
        Self::from_world_file_values(values)
    }

    pub fn read_world_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_world_file(&text)
    }

    pub fn to_world_file_string(&self) -> String {
        [self.a, self.d, self.b, self.e, self.c, self.f]
            .iter()
            .map(|v| format!("{v:.12}\n"))
            .collect()
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.d * self.b
    }

    pub fn pixel_to_world(&self, col: f64, row: f64) -> (f64, f64) {
        (
            self.a * col + self.b * row + self.c,
            self.d * col + self.e * row + self.f,
        )
    }

    /// Inverse of [`pixel_to_world`](Self::pixel_to_world). The result may lie
    /// outside the raster.
    pub fn world_to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        let det = self.determinant();
        let dx = x - self.c;
        let dy = y - self.f;
        (
            (self.e * dx - self.b * dy) / det,
            (self.a * dy - self.d * dx) / det,
        )
    }

    /// Ground size of one pixel in meters. Requires square pixels.
    pub fn pixel_pitch(&self) -> Result<f64> {
        let sx = self.a.hypot(self.d);
        let sy = self.b.hypot(self.e);
        if sx == 0.0 || sy == 0.0 {
            return Err(Error::InvalidInput("degenerate pixel pitch 0".into()));
        }
        if (sx - sy).abs() > 1e-9 * sx.max(sy) {
            return Err(Error::InvalidInput(format!(
                "non-square pixels ({sx} x {sy} m) are not supported"
            )));
        }
        Ok(sx)
    }
}

/// 8-bit raster with 1 (DSM) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
    transform: GeoTransform,
}

impl Raster {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<u8>,
        transform: GeoTransform,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("raster has zero size".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!(
                "rasters have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "raster {width}x{height}x{channels} needs {} bytes, got {}",
                width * height * channels,
                data.len()
            )));
        }
        GeoTransform::from_world_file_values([
            transform.a,
            transform.d,
            transform.b,
            transform.e,
            transform.c,
            transform.f,
        ])?;
        Ok(Self {
            width,
            height,
            channels,
            data,
            transform,
        })
    }

    /// Reads a binary PPM (P6) or PGM (P5) image and its world file.
    pub fn load(image: impl AsRef<Path>, world_file: impl AsRef<Path>) -> Result<Self> {
        let image = image.as_ref();
        let bytes = std::fs::read(image).map_err(|e| Error::io(image, e))?;
        let transform = GeoTransform::read_world_file(world_file)?;
        Self::from_pnm_bytes(&bytes, transform)
    }

    pub fn from_pnm_bytes(bytes: &[u8], transform: GeoTransform) -> Result<Self> {
        let (channels, width, height, data) = decode_pnm(bytes)?;
        Self::new(width, height, channels, data, transform)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn transform(&self) -> &GeoTransform {
        &self.transform
    }

    #[inline]
    pub fn pixel(&self, col: usize, row: usize, channel: usize) -> u8 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    pub fn pixel_to_world(&self, col: f64, row: f64) -> (f64, f64) {
        self.transform.pixel_to_world(col, row)
    }

    pub fn world_to_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        self.transform.world_to_pixel(x, y)
    }

    pub fn to_pnm_bytes(&self) -> Vec<u8> {
        encode_pnm(self.channels, self.width, self.height, &self.data)
    }

    /// Writes the image and its world file side by side.
    pub fn save(&self, image: impl AsRef<Path>, world_file: impl AsRef<Path>) -> Result<()> {
        let image = image.as_ref();
        let world_file = world_file.as_ref();
        std::fs::write(image, self.to_pnm_bytes()).map_err(|e| Error::io(image, e))?;
        std::fs::write(world_file, self.transform.to_world_file_string())
            .map_err(|e| Error::io(world_file, e))
    }
}

pub(crate) fn encode_pnm(channels: usize, width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    let magic = if channels == 3 { "P6" } else { "P5" };
    let mut out = Vec::with_capacity(data.len() + 20);
    write!(out, "{magic}\n{width} {height}\n255\n").expect("write to vec");
    out.extend_from_slice(data);
    out
}

fn decode_pnm(bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    let channels = match bytes.get(..2) {
        Some(b"P6") => 3,
        Some(b"P5") => 1,
        _ => return Err(Error::Format("not a binary PPM (P6) or PGM (P5) image".into())),
    };
    let mut pos = 2;
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        *slot = next_header_number(bytes, &mut pos)?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("PNM header not terminated by whitespace".into()));
    }
    pos += 1;
    let [width, height, maxval] = header;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("invalid maxval {maxval}")));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedDepth(maxval as u32));
    }
    let expected = width * height * channels;
    let body = &bytes[pos..];
    if body.len() < expected {
        return Err(Error::Format(format!(
            "PNM body truncated: expected {expected} bytes, found {}",
            body.len()
        )));
    }
    Ok((channels, width, height, body[..expected].to_vec()))
}

fn next_header_number(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::Format("PNM header truncated".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("malformed PNM header".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn world(v: [f64; 6]) -> GeoTransform {
        GeoTransform::from_world_file_values(v).unwrap()
    }

    #[test]
    fn pixel_zero_maps_to_c_f() {
        let bytes = encode_pnm(3, 2, 2, &[0u8; 12]);
        let r = Raster::from_pnm_bytes(&bytes, world([0.5, 0.0, 0.0, -0.5, 100.25, 200.75])).unwrap();
        assert_eq!(r.pixel_to_world(0.0, 0.0), (100.25, 200.75));
        assert_eq!(r.world_to_pixel(100.25, 200.75), (0.0, 0.0));
        assert_eq!((r.width(), r.height(), r.channels()), (2, 2, 3));
    }

    #[test]
    fn non_invertible_rejected() {
        let err = GeoTransform::parse_world_file("1\n0\n0\n0\n0\n0\n").unwrap_err();
        assert!(matches!(err, Error::NonInvertible(_)));
    }

    #[test]
    fn world_file_needs_six_numbers() {
        assert!(matches!(
            GeoTransform::parse_world_file("1 0 0 -1 0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            GeoTransform::parse_world_file("1 0 0 -1 0 x"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn identity_like_inverse() {
        let t = world([1.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        assert_eq!(t.world_to_pixel(3.0, -4.0), (3.0, 4.0));
    }

    #[test]
    fn sixteen_bit_unsupported() {
        let mut bytes = b"P5\n2 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0; 4]);
        let err = Raster::from_pnm_bytes(&bytes, world([1.0, 0.0, 0.0, -1.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::UnsupportedDepth(65535)));
    }

    #[test]
    fn header_comments_and_bad_magic() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 9]);
        let r = Raster::from_pnm_bytes(&bytes, world([1.0, 0.0, 0.0, -1.0, 0.0, 0.0])).unwrap();
        assert_eq!(r.pixel(1, 0, 0), 9);
        assert!(Raster::from_pnm_bytes(b"P3\n1 1\n255\n0 0 0", r.transform).is_err());
    }

    #[test]
    fn checkerboard_round_trip() {
        let n = 1000;
        let data: Vec<u8> = (0..n * n)
            .flat_map(|i| {
                let v = if ((i / n) / 8 + (i % n) / 8) % 2 == 0 { 255 } else { 0 };
                [v, v, v]
            })
            .collect();
        let t = world([0.5, 0.0, 0.0, -0.5, 500_000.25, 3_300_000.75]);
        let r = Raster::from_pnm_bytes(&encode_pnm(3, n, n, &data), t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (c, w) = (rng.random_range(0..n), rng.random_range(0..n));
            let (x, y) = r.pixel_to_world(c as f64, w as f64);
            let (c2, w2) = r.world_to_pixel(x, y);
            assert_eq!((c2.round() as usize, w2.round() as usize), (c, w));
            assert!((c2 - c as f64).abs() < 1e-6 && (w2 - w as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn rotated_affine_round_trip() {
        let t = world([0.4, 0.3, 0.3, -0.4, 1234.5, -987.25]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = rng.random_range(-5000.0..5000.0);
            let y = rng.random_range(-5000.0..5000.0);
            let (c, r) = t.world_to_pixel(x, y);
            let (x2, y2) = t.pixel_to_world(c, r);
            assert!((x2 - x).abs() < 1e-9 && (y2 - y).abs() < 1e-9);
        }
    }

    #[test]
    fn pixel_pitch_rejects_non_square() {
        assert_eq!(world([0.5, 0.0, 0.0, -0.5, 0.0, 0.0]).pixel_pitch().unwrap(), 0.5);
        assert!(world([0.5, 0.0, 0.0, -0.25, 0.0, 0.0]).pixel_pitch().is_err());
    }
}
