#![allow(dead_code)]

use carageo::geodesics::{lens_margin, Lens, LensPoint};
use carageo::C;
use rand::Rng;

/// `(a, b)` with `|a - b| < 1 < a + b`, kept `margin` away from the walls.
pub fn interesting_ab<R: Rng>(r: &mut R, margin: f64) -> (f64, f64) {
    loop {
        let a: f64 = r.gen_range(0.05..3.0);
        let b = r.gen_range(0.05..3.0);
        if (a - b).abs() < 1.0 - margin && a + b > 1.0 + margin {
            return (a, b);
        }
    }
}

/// `(a, b)` with `a + b < 1`.
pub fn retract_ab<R: Rng>(r: &mut R) -> (f64, f64) {
    loop {
        let a: f64 = r.gen_range(0.01..1.0);
        let b = r.gen_range(0.01..1.0);
        if a + b < 1.0 - 1e-6 {
            return (a, b);
        }
    }
}

/// Uniform lens point with `lens_margin > margin`, by rejection in the
/// bounding box.
pub fn lens_point<R: Rng>(r: &mut R, l: &Lens, margin: f64) -> Option<LensPoint> {
    let lo = (-1.0_f64).max((-1.0 - l.b) / l.a);
    let hi = 1.0_f64.min((l.b - 1.0) / l.a);
    if hi <= lo {
        return None;
    }
    for _ in 0..100_000 {
        let g = C::new(r.gen_range(lo..hi), r.gen_range(-1.0..1.0));
        if lens_margin(l, g) > margin {
            return Some(LensPoint { gamma1: g });
        }
    }
    None
}

/// A random interesting lens and a point in it.
pub fn lens_sample<R: Rng>(r: &mut R, margin: f64) -> (Lens, LensPoint) {
    loop {
        let (a, b) = interesting_ab(r, 0.02);
        let l = Lens::new(a, b).unwrap();
        if let Some(p) = lens_point(r, &l, margin) {
            return (l, p);
        }
    }
}

pub fn unit_disc_params(count: usize) -> Vec<C> {
    (0..count)
        .map(|k| C::from_polar(0.98 * ((k % 8) as f64 + 1.0) / 8.0, 0.7 * k as f64))
        .collect()
}
