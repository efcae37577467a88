//! Geodesic distance on the WGS-84 ellipsoid and per-point kinematic features.
//!
//! The kinematic channels use backward differences: the value at index `i`
//! is computed from points `i - 1` and `i`, and index 0 is held at zero so
//! that every trip starts from stillness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WGS-84 semi-major axis (m).
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// WGS-84 semi-minor axis (m).
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);
/// Mean Earth radius used by the spherical fallback (m).
pub const MEAN_EARTH_RADIUS: f64 = 6_371_008.8;

const VINCENTY_MAX_ITER: usize = 200;
const VINCENTY_TOL: f64 = 1e-12;

/// Default outlier thresholds.
pub const MAX_SPEED: f64 = 80.0;
pub const MAX_ACCEL: f64 = 10.0;

/// A timestamped geographic fix. `t` is seconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsPoint {
    pub t: f64,
    pub lat: f64,
    pub lng: f64,
}

impl GpsPoint {
    /// Validated constructor.
    pub fn new(t: f64, lat: f64, lng: f64) -> Result<Self> {
        let p = GpsPoint { t, lat, lng };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(Error::InvalidPoint { t, lat, lng })
        }
    }

    pub fn is_valid(&self) -> bool {
        self.t.is_finite()
            && self.lat.is_finite()
            && self.lng.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lng)
    }
}

/// Result of the inverse geodesic problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geodesic {
    pub meters: f64,
    /// `false` when Vincenty's iteration failed to converge and the
    /// spherical fallback was used.
    pub converged: bool,
}

/// Inverse Vincenty solution. The pair is put in a canonical order first so
/// the result is bitwise symmetric in its arguments.
pub fn vincenty_inverse(a: &GpsPoint, b: &GpsPoint) -> Geodesic {
    let (p, q) = if (a.lat, a.lng) <= (b.lat, b.lng) {
        (a, b)
    } else {
        (b, a)
    };
    if p.lat == q.lat && p.lng == q.lng {
        return Geodesic {
            meters: 0.0,
            converged: true,
        };
    }
    match vincenty_iterate(p.lat, p.lng, q.lat, q.lng) {
        Some(m) => Geodesic {
            meters: m,
            converged: true,
        },
        None => Geodesic {
            meters: spherical_distance(p, q),
            converged: false,
        },
    }
}

/// Geodesic distance in meters (see [`vincenty_inverse`]).
pub fn vincenty_distance(a: &GpsPoint, b: &GpsPoint) -> f64 {
    vincenty_inverse(a, b).meters
}

fn vincenty_iterate(lat1: f64, lng1: f64, lat2: f64, lng2: f64) -> Option<f64> {
    let f = WGS84_F;
    let l = (lng2 - lng1).to_radians();
    let u1 = ((1.0 - f) * lat1.to_radians().tan()).atan();
    let u2 = ((1.0 - f) * lat2.to_radians().tan()).atan();
    let (sin_u1, cos_u1) = u1.sin_cos();
    let (sin_u2, cos_u2) = u2.sin_cos();

    let mut lambda = l;
    for _ in 0..VINCENTY_MAX_ITER {
        let (sin_lambda, cos_lambda) = lambda.sin_cos();
        let t1 = cos_u2 * sin_lambda;
        let t2 = cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lambda;
        let sin_sigma = (t1 * t1 + t2 * t2).sqrt();
        if sin_sigma == 0.0 {
            return Some(0.0);
        }
        let cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_lambda;
        let sigma = sin_sigma.atan2(cos_sigma);
        let sin_alpha = cos_u1 * cos_u2 * sin_lambda / sin_sigma;
        let cos_sq_alpha = 1.0 - sin_alpha * sin_alpha;
        // equatorial line: cos_sq_alpha = 0
        let cos_2sigma_m = if cos_sq_alpha == 0.0 {
            0.0
        } else {
            cos_sigma - 2.0 * sin_u1 * sin_u2 / cos_sq_alpha
        };
        let c = f / 16.0 * cos_sq_alpha * (4.0 + f * (4.0 - 3.0 * cos_sq_alpha));
        let prev = lambda;
        lambda = l
            + (1.0 - c)
                * f
                * sin_alpha
                * (sigma
                    + c * sin_sigma
                        * (cos_2sigma_m + c * cos_sigma * (-1.0 + 2.0 * cos_2sigma_m * cos_2sigma_m)));

        if (lambda - prev).abs() <= VINCENTY_TOL {
            let u_sq = cos_sq_alpha * (WGS84_A * WGS84_A - WGS84_B * WGS84_B) / (WGS84_B * WGS84_B);
            let big_a =
                1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
            let big_b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
            let delta_sigma = big_b
                * sin_sigma
                * (cos_2sigma_m
                    + big_b / 4.0
                        * (cos_sigma * (-1.0 + 2.0 * cos_2sigma_m * cos_2sigma_m)
                            - big_b / 6.0
                                * cos_2sigma_m
                                * (-3.0 + 4.0 * sin_sigma * sin_sigma)
                                * (-3.0 + 4.0 * cos_2sigma_m * cos_2sigma_m)));
            return Some(WGS84_B * big_a * (sigma - delta_sigma));
        }
    }
    None
}

/// Spherical law-of-cosines distance with the mean Earth radius.
pub fn spherical_distance(a: &GpsPoint, b: &GpsPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dl = (b.lng - a.lng).to_radians();
    let c = phi1.sin() * phi2.sin() + phi1.cos() * phi2.cos() * dl.cos();
    MEAN_EARTH_RADIUS * c.clamp(-1.0, 1.0).acos()
}

/// Speed, acceleration and jerk channels, one value per source point.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicSeries {
    pub speed: Vec<f64>,
    pub accel: Vec<f64>,
    pub jerk: Vec<f64>,
}

impl KinematicSeries {
    pub fn len(&self) -> usize {
        self.speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speed.is_empty()
    }

    /// Row-major `N x 3` view: `[speed, accel, jerk]` per point.
    pub fn rows(&self) -> Vec<[f64; 3]> {
        (0..self.len())
            .map(|i| [self.speed[i], self.accel[i], self.jerk[i]])
            .collect()
    }
}

/// Backward-difference kinematics. Requires strictly increasing timestamps.
pub fn compute_kinematics(points: &[GpsPoint]) -> Result<KinematicSeries> {
    if points.is_empty() {
        return Err(Error::Precondition("kinematics need at least one point".into()));
    }
    let n = points.len();
    let mut speed = vec![0.0; n];
    let mut accel = vec![0.0; n];
    let mut jerk = vec![0.0; n];
    for i in 1..n {
        let dt = points[i].t - points[i - 1].t;
        if !(dt > 0.0) {
            return Err(Error::NonIncreasingTime { index: i, dt });
        }
        speed[i] = vincenty_distance(&points[i - 1], &points[i]) / dt;
        accel[i] = (speed[i] - speed[i - 1]) / dt;
        jerk[i] = (accel[i] - accel[i - 1]) / dt;
    }
    Ok(KinematicSeries { speed, accel, jerk })
}

/// Thresholds used by [`remove_outliers_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierThresholds {
    pub max_speed: f64,
    pub max_accel: f64,
}

impl Default for OutlierThresholds {
    fn default() -> Self {
        OutlierThresholds {
            max_speed: MAX_SPEED,
            max_accel: MAX_ACCEL,
        }
    }
}

/// Indices of the points kept by a single forward sweep.
///
/// A point is kept when, relative to the last kept point, its timestamp is
/// strictly later, the implied speed is within bounds and the implied
/// acceleration magnitude (against the last kept speed) is within bounds.
/// The first point is always kept with speed 0.
pub fn outlier_mask(points: &[GpsPoint], th: OutlierThresholds) -> Vec<usize> {
    let mut kept = Vec::with_capacity(points.len());
    let mut last: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        match last {
            None => {
                kept.push(i);
                last = Some((i, 0.0));
            }
            Some((j, v_prev)) => {
                let dt = p.t - points[j].t;
                if !(dt > 0.0) {
                    continue;
                }
                let v = vincenty_distance(&points[j], p) / dt;
                let a = (v - v_prev) / dt;
                if v <= th.max_speed && a.abs() <= th.max_accel {
                    kept.push(i);
                    last = Some((i, v));
                }
            }
        }
    }
    kept
}

/// Drop erroneous and outlying fixes with the default 80 m/s / 10 m/s² bounds.
pub fn remove_outliers(points: &[GpsPoint]) -> Vec<GpsPoint> {
    remove_outliers_with(points, OutlierThresholds::default())
}

pub fn remove_outliers_with(points: &[GpsPoint], th: OutlierThresholds) -> Vec<GpsPoint> {
    outlier_mask(points, th).into_iter().map(|i| points[i]).collect()
}

/// Five-point cubic (Savitzky-Golay) smoothing with one-sided cubic fits at
/// the two leading and trailing samples. Series shorter than five samples
/// are returned unchanged.
pub fn smooth_five_spot_triple(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    if n < 5 {
        return y.to_vec();
    }
    let mut out = vec![0.0; n];
    out[0] = (69.0 * y[0] + 4.0 * y[1] - 6.0 * y[2] + 4.0 * y[3] - y[4]) / 70.0;
    out[1] = (2.0 * y[0] + 27.0 * y[1] + 12.0 * y[2] - 8.0 * y[3] + 2.0 * y[4]) / 35.0;
    for i in 2..n - 2 {
        out[i] = (-3.0 * y[i - 2] + 12.0 * y[i - 1] + 17.0 * y[i] + 12.0 * y[i + 1] - 3.0 * y[i + 2])
            / 35.0;
    }
    out[n - 2] = (2.0 * y[n - 5] - 8.0 * y[n - 4] + 12.0 * y[n - 3] + 27.0 * y[n - 2]
        + 2.0 * y[n - 1])
        / 35.0;
    out[n - 1] = (-y[n - 5] + 4.0 * y[n - 4] - 6.0 * y[n - 3] + 4.0 * y[n - 2] + 69.0 * y[n - 1])
        / 70.0;
    out
}

/// Smooth every channel of a kinematic series independently.
pub fn smooth_series(series: &KinematicSeries) -> KinematicSeries {
    KinematicSeries {
        speed: smooth_five_spot_triple(&series.speed),
        accel: smooth_five_spot_triple(&series.accel),
        jerk: smooth_five_spot_triple(&series.jerk),
    }
}

/// Local meridional and prime-vertical radii of curvature at `lat_deg`.
pub fn local_radii(lat_deg: f64) -> (f64, f64) {
    let e2 = WGS84_F * (2.0 - WGS84_F);
    let s = lat_deg.to_radians().sin();
    let w = (1.0 - e2 * s * s).sqrt();
    let meridional = WGS84_A * (1.0 - e2) / (w * w * w);
    let prime_vertical = WGS84_A / w;
    (meridional, prime_vertical)
}

/// Move `distance` meters from `p` along `heading` (radians, clockwise from
/// north) using the local tangent plane.
pub fn offset_point(p: &GpsPoint, distance: f64, heading: f64, dt: f64) -> GpsPoint {
    let (m, n) = local_radii(p.lat);
    let dlat = distance * heading.cos() / m;
    let dlng = distance * heading.sin() / (n * p.lat.to_radians().cos());
    GpsPoint {
        t: p.t + dt,
        lat: p.lat + dlat.to_degrees(),
        lng: p.lng + dlng.to_degrees(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(t: f64, lat: f64, lng: f64) -> GpsPoint {
        GpsPoint { t, lat, lng }
    }

    #[test]
    fn identical_points_are_zero() {
        let a = pt(0.0, 39.9, 116.4);
        assert_eq!(vincenty_distance(&a, &a), 0.0);
    }

    #[test]
    fn equator_degree() {
        // Reference values from Karney's geodesic algorithm (geographiclib).
        let d = vincenty_distance(&pt(0.0, 0.0, 0.0), &pt(0.0, 0.0, 1.0));
        assert!((d - 111_319.490_793_273_6).abs() < 1e-3, "{d}");
        let d = vincenty_distance(&pt(0.0, 0.0, 0.0), &pt(0.0, 1.0, 0.0));
        assert!((d - 110_574.388_557_799_9).abs() < 1e-3, "{d}");
    }

    #[test]
    fn near_antipodal_falls_back() {
        let g = vincenty_inverse(&pt(0.0, 0.0, 0.0), &pt(0.0, 0.5, 179.7));
        assert!(!g.converged);
        assert!(g.meters.is_finite() && g.meters > 19_000_000.0);
        let again = vincenty_inverse(&pt(0.0, 0.0, 0.0), &pt(0.0, 0.5, 179.7));
        assert_eq!(g, again);
    }

    #[test]
    fn invalid_points_rejected() {
        assert!(GpsPoint::new(0.0, 91.0, 0.0).is_err());
        assert!(GpsPoint::new(0.0, 0.0, -180.5).is_err());
        assert!(GpsPoint::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(GpsPoint::new(1.0, -90.0, 180.0).is_ok());
    }

    #[test]
    fn single_point_kinematics() {
        let k = compute_kinematics(&[pt(5.0, 39.9, 116.4)]).unwrap();
        assert_eq!(k.speed, vec![0.0]);
        assert_eq!(k.accel, vec![0.0]);
        assert_eq!(k.jerk, vec![0.0]);
    }

    #[test]
    fn two_points_speed() {
        let a = pt(0.0, 39.9, 116.4);
        let b = offset_point(&a, 100.0, 0.3, 10.0);
        let d = vincenty_distance(&a, &b);
        let k = compute_kinematics(&[a, b]).unwrap();
        assert_eq!(k.speed[0], 0.0);
        assert!((k.speed[1] - d / 10.0).abs() < 1e-12);
        assert!((k.speed[1] - 10.0).abs() < 1e-4);
    }

    #[test]
    fn constant_speed_accel() {
        let p0 = pt(0.0, 0.0, 0.0);
        let p1 = pt(2.0, 0.0, 0.001);
        let p2 = pt(4.0, 0.0, 0.002);
        let k = compute_kinematics(&[p0, p1, p2]).unwrap();
        let v = k.speed[1];
        assert!((k.speed[2] - v).abs() < 1e-9);
        assert!((k.accel[1] - v / 2.0).abs() < 1e-12);
        assert!(k.accel[2].abs() < 1e-9);
        assert!((k.jerk[1] - v / 4.0).abs() < 1e-12);
    }

    #[test]
    fn kinematics_reject_bad_dt() {
        let a = pt(0.0, 0.0, 0.0);
        assert!(matches!(
            compute_kinematics(&[a, a]),
            Err(Error::NonIncreasingTime { index: 1, .. })
        ));
        assert!(compute_kinematics(&[]).is_err());
    }

    #[test]
    fn outliers_time_and_speed() {
        let a = pt(0.0, 39.9, 116.4);
        let b = offset_point(&a, 2.0, 0.0, 2.0);
        let mut back = offset_point(&b, 2.0, 0.0, 2.0);
        back.t = 1.0;
        let c = offset_point(&b, 4.0, 0.0, 4.0);
        let cleaned = remove_outliers(&[a, b, back, c]);
        assert_eq!(cleaned, vec![a, b, c]);

        // 100 m/s from its predecessor
        let fast = offset_point(&c, 200.0, 0.0, 2.0);
        let d = offset_point(&c, 2.0, 0.0, 2.5);
        let cleaned = remove_outliers(&[a, b, c, fast, d]);
        assert_eq!(cleaned, vec![a, b, c, d]);
    }

    #[test]
    fn outliers_accel_magnitude() {
        let a = pt(0.0, 10.0, 10.0);
        // speed 1 m/s then 30 m/s within 2 s: |a| = 14.5
        let b = offset_point(&a, 1.0, 0.0, 1.0);
        let c = offset_point(&b, 60.0, 0.0, 2.0);
        assert_eq!(remove_outliers(&[a, b, c]), vec![a, b]);
        // duplicate timestamp
        let mut dup = b;
        dup.lat += 1e-6;
        assert_eq!(remove_outliers(&[a, b, dup]), vec![a, b]);
    }

    #[test]
    fn smoothing_short_and_constant() {
        let short = [1.0, 5.0, -2.0, 3.0];
        assert_eq!(smooth_five_spot_triple(&short), short.to_vec());
        let c = [2.5; 6];
        for v in smooth_five_spot_triple(&c) {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_reproduces_cubic() {
        let y: Vec<f64> = (0..10).map(|x| {
            let x = x as f64;
            x * x * x - 2.0 * x
        }).collect();
        let s = smooth_five_spot_triple(&y);
        for (a, b) in y.iter().zip(&s) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn smoothing_attenuates_spike() {
        let mut y = vec![0.0; 9];
        y[4] = 35.0;
        let s = smooth_five_spot_triple(&y);
        assert!((s[4] - 17.0).abs() < 1e-12);
        assert!((s[3] - 12.0).abs() < 1e-12);
        assert!((s[2] + 3.0).abs() < 1e-12);
    }
}
