use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const METERS_PER_DEGREE_LAT: f64 = 111_320.0;

/// Equirectangular projection about a reference point. Longitude is scaled by
/// cos(reference latitude). Over a city-sized extent (±20 km) the distance
/// error stays below about 0.1%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProjection {
    pub ref_lon: f64,
    pub ref_lat: f64,
}

impl Default for LocalProjection {
    fn default() -> Self {
        Self {
            ref_lon: 0.0,
            ref_lat: 0.0,
        }
    }
}

impl LocalProjection {
    pub fn new(ref_lon: f64, ref_lat: f64) -> Self {
        Self { ref_lon, ref_lat }
    }

    /// Projection centered on the mean of the given (lon, lat) points.
    pub fn centered_on<'a>(points: impl IntoIterator<Item = &'a [f64; 2]>) -> Self {
        let (mut lon, mut lat, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            lon += p[0];
            lat += p[1];
            n += 1;
        }
        if n == 0 {
            return Self::default();
        }
        Self::new(lon / n as f64, lat / n as f64)
    }

    fn lon_scale(&self) -> f64 {
        METERS_PER_DEGREE_LAT * self.ref_lat.to_radians().cos()
    }

    /// (lon, lat) degrees to (easting, northing) meters.
    pub fn project(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.ref_lon) * self.lon_scale(),
            (p[1] - self.ref_lat) * METERS_PER_DEGREE_LAT,
        ]
    }

    pub fn unproject(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0] / self.lon_scale() + self.ref_lon,
            p[1] / METERS_PER_DEGREE_LAT + self.ref_lat,
        ]
    }
}

/// Polyline length in projected meters.
pub fn planar_length(points: &[[f64; 2]]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum()
}

/// Result of resampling a road polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    /// Equally spaced points relative to `centroid`, (easting, northing) meters.
    pub offsets: Vec<[f64; 2]>,
    /// Centroid of the resampled points in the projection frame.
    pub centroid: [f64; 2],
    /// Arc length of the projected polyline.
    pub length: f64,
}

/// Projects a (lon, lat) polyline, resamples it to `n` points equally spaced
/// by arc length, and translates the points by their centroid.
pub fn resample_geometry(points: &[[f64; 2]], n: usize, projection: &LocalProjection) -> Result<Resampled> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("geometry needs at least 2 points".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput("resampling needs n >= 2".into()));
    }
    let planar: Vec<[f64; 2]> = points.iter().map(|&p| projection.project(p)).collect();
    let mut cumulative = Vec::with_capacity(planar.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in planar.windows(2) {
        acc += (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        cumulative.push(acc);
    }
    let length = acc;
    if length <= 0.0 {
        return Err(Error::InvalidInput("zero-length geometry".into()));
    }

    let mut resampled = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let target = length * i as f64 / (n - 1) as f64;
        while seg + 2 < cumulative.len() && cumulative[seg + 1] < target {
            seg += 1;
        }
        let span = cumulative[seg + 1] - cumulative[seg];
        let t = if span > 0.0 {
            ((target - cumulative[seg]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (a, b) = (planar[seg], planar[seg + 1]);
        resampled.push([a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]);
    }
    // pin the last sample to the exact endpoint
    resampled[n - 1] = planar[planar.len() - 1];

    let cx = resampled.iter().map(|p| p[0]).sum::<f64>() / n as f64;
    let cy = resampled.iter().map(|p| p[1]).sum::<f64>() / n as f64;
    let offsets = resampled.iter().map(|p| [p[0] - cx, p[1] - cy]).collect();
    Ok(Resampled {
        offsets,
        centroid: [cx, cy],
        length,
    })
}

/// Compass bearing in degrees from the first to the last point: 0 = north,
/// clockwise, in [0, 360). Longitude differences are scaled by the cosine of
/// the mean latitude, which agrees with the great-circle initial bearing to
/// well under 0.01° over road-length distances.
pub fn bearing(points: &[[f64; 2]]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("bearing needs at least 2 points".into()));
    }
    let (a, b) = (points[0], points[points.len() - 1]);
    if a == b {
        return Err(Error::InvalidInput("bearing of identical endpoints is undefined".into()));
    }
    let mid_lat = 0.5 * (a[1] + b[1]);
    let dx = (b[0] - a[0]) * mid_lat.to_radians().cos();
    let dy = b[1] - a[1];
    let deg = dx.atan2(dy).to_degrees();
    let wrapped = deg.rem_euclid(360.0);
    Ok(if wrapped >= 360.0 { 0.0 } else { wrapped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Great-circle initial bearing, the spherical-trigonometry reference.
    fn initial_bearing(a: [f64; 2], b: [f64; 2]) -> f64 {
        let (l1, p1) = (a[0].to_radians(), a[1].to_radians());
        let (l2, p2) = (b[0].to_radians(), b[1].to_radians());
        let dl = l2 - l1;
        let y = dl.sin() * p2.cos();
        let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
        y.atan2(x).to_degrees().rem_euclid(360.0)
    }

    fn angle_diff(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(360.0);
        d.min(360.0 - d)
    }

    #[test]
    fn cardinal_bearings() {
        assert_eq!(bearing(&[[0.0, 0.0], [0.0, 1e-3]]).unwrap(), 0.0);
        assert!((bearing(&[[0.0, 0.0], [1e-3, 0.0]]).unwrap() - 90.0).abs() < 1e-12);
        assert!((bearing(&[[0.0, 0.0], [0.0, -1e-3]]).unwrap() - 180.0).abs() < 1e-12);
        assert!((bearing(&[[0.0, 0.0], [-1e-3, 0.0]]).unwrap() - 270.0).abs() < 1e-12);
    }

    #[test]
    fn identical_endpoints_error() {
        assert!(bearing(&[[1.0, 1.0], [2.0, 2.0], [1.0, 1.0]]).is_err());
        assert!(bearing(&[[1.0, 1.0]]).is_err());
    }

    #[test]
    fn matches_great_circle_bearing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let a = [rng.random_range(103.9..104.2), rng.random_range(30.5..30.8)];
            let b = [
                a[0] + rng.random_range(-0.01..0.01),
                a[1] + rng.random_range(-0.01..0.01),
            ];
            let got = bearing(&[a, b]).unwrap();
            let want = initial_bearing(a, b);
            assert!(angle_diff(got, want) < 0.01, "{got} vs {want}");
            assert!((0.0..360.0).contains(&got));
        }
    }

    #[test]
    fn straight_line_resampling() {
        let proj = LocalProjection::new(0.0, 0.0);
        let end = proj.unproject([100.0, 0.0]);
        let r = resample_geometry(&[[0.0, 0.0], end], 5, &proj).unwrap();
        assert!((r.length - 100.0).abs() < 1e-9);
        let xs: Vec<f64> = r.offsets.iter().map(|p| p[0]).collect();
        for (x, want) in xs.iter().zip([-50.0, -25.0, 0.0, 25.0, 50.0]) {
            assert!((x - want).abs() < 1e-9, "{xs:?}");
        }
        assert!((r.centroid[0] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn two_points_are_endpoints_about_midpoint() {
        let proj = LocalProjection::new(104.0, 30.0);
        let a = proj.unproject([10.0, 20.0]);
        let b = proj.unproject([30.0, -20.0]);
        let r = resample_geometry(&[a, b], 2, &proj).unwrap();
        assert!((r.centroid[0] - 20.0).abs() < 1e-9 && r.centroid[1].abs() < 1e-9);
        assert!((r.offsets[0][0] + 10.0).abs() < 1e-9 && (r.offsets[0][1] - 20.0).abs() < 1e-9);
        assert!((r.offsets[1][0] - 10.0).abs() < 1e-9 && (r.offsets[1][1] + 20.0).abs() < 1e-9);
    }

    /// Length of the straight piece a→b integrated with `steps` small chords.
    fn integrate(a: [f64; 2], b: [f64; 2], steps: usize) -> f64 {
        (0..steps)
            .map(|j| {
                let (t0, t1) = (j as f64 / steps as f64, (j + 1) as f64 / steps as f64);
                let p0 = [a[0] + (b[0] - a[0]) * t0, a[1] + (b[1] - a[1]) * t0];
                let p1 = [a[0] + (b[0] - a[0]) * t1, a[1] + (b[1] - a[1]) * t1];
                (p1[0] - p0[0]).hypot(p1[1] - p0[1])
            })
            .sum()
    }

    #[test]
    fn l_shape_matches_dense_subdivision() {
        let proj = LocalProjection::new(104.0, 30.0);
        let corners = [[0.0, 0.0], [60.0, 0.0], [60.0, 40.0]];
        let lonlat: Vec<[f64; 2]> = corners.iter().map(|&p| proj.unproject(p)).collect();
        let planar: Vec<[f64; 2]> = lonlat.iter().map(|&p| proj.project(p)).collect();
        let n = 11;
        let r = resample_geometry(&lonlat, n, &proj).unwrap();
        let total: f64 = planar.windows(2).map(|w| integrate(w[0], w[1], 10_000)).sum();
        assert!((total - r.length).abs() < 1e-6);

        for (i, off) in r.offsets.iter().enumerate() {
            let p = [off[0] + r.centroid[0], off[1] + r.centroid[1]];
            // arc position: integrate along the polyline up to the piece containing p
            let mut arc = 0.0;
            for w in planar.windows(2) {
                let (a, b) = (w[0], w[1]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / (len * len);
                let foot = [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
                if (0.0..=1.0).contains(&t) && (foot[0] - p[0]).hypot(foot[1] - p[1]) < 1e-9 {
                    arc += integrate(a, p, 10_000);
                    break;
                }
                arc += integrate(a, b, 10_000);
            }
            let want = total * i as f64 / (n - 1) as f64;
            assert!((arc - want).abs() < 1e-6, "point {i}: arc {arc} vs {want}");
        }
    }

    #[test]
    fn zero_length_errors() {
        let proj = LocalProjection::default();
        assert!(resample_geometry(&[[1.0, 1.0], [1.0, 1.0]], 4, &proj).is_err());
        assert!(resample_geometry(&[[1.0, 1.0], [1.0, 2.0]], 1, &proj).is_err());
    }

    #[test]
    fn centroid_is_origin() {
        let proj = LocalProjection::new(104.0, 30.6);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let pts: Vec<[f64; 2]> = (0..rng.random_range(2..8))
                .map(|_| [104.0 + rng.random_range(-0.01..0.01), 30.6 + rng.random_range(-0.01..0.01)])
                .collect();
            let n = rng.random_range(2..20);
            let r = resample_geometry(&pts, n, &proj).unwrap();
            let cx: f64 = r.offsets.iter().map(|p| p[0]).sum::<f64>() / n as f64;
            let cy: f64 = r.offsets.iter().map(|p| p[1]).sum::<f64>() / n as f64;
            assert!(cx.abs() < 1e-9 && cy.abs() < 1e-9);
        }
    }
}
