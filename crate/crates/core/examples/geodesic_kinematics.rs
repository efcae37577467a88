//! Vincenty distances and the smoothed speed/accel/jerk series of a short track.
//!
//! `cargo run --example geodesic_kinematics`

use trajseg::geo::{compute_kinematics, offset_point, smooth_series, spherical_distance, vincenty_inverse, GpsPoint};

fn main() -> trajseg::Result<()> {
    let a = GpsPoint::new(0.0, 39.984702, 116.318417)?;
    let b = GpsPoint::new(0.0, 40.1, 116.6)?;
    let g = vincenty_inverse(&a, &b);
    println!(
        "vincenty {:.3} m (converged {}), sphere {:.3} m",
        g.meters,
        g.converged,
        spherical_distance(&a, &b)
    );

    // accelerate from rest, cruise, brake
    let mut pts = vec![a];
    let mut v: f64 = 0.0;
    for i in 0..40 {
        v = match i {
            0..=9 => v + 1.0,
            10..=29 => v,
            _ => (v - 1.0).max(0.0),
        };
        let last = *pts.last().unwrap();
        pts.push(offset_point(&last, v * 2.0, 0.3, 2.0));
    }
    let raw = compute_kinematics(&pts)?;
    let smooth = smooth_series(&raw);
    println!("{:>3} {:>8} {:>8} {:>8}", "i", "speed", "accel", "jerk");
    for (i, r) in smooth.rows().iter().enumerate().step_by(5) {
        println!("{i:>3} {:>8.3} {:>8.3} {:>8.3}", r[0], r[1], r[2]);
    }
    Ok(())
}
