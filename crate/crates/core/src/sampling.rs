//! Counter-based deterministic sampling keyed by `(seed, index)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::discgeom::C;

/// Independent stream for sample `index` under `seed`.
pub fn rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Uniform point of the disc of radius `radius`.
pub fn disc_point<R: Rng>(r: &mut R, radius: f64) -> C {
    C::from_polar(radius * r.gen::<f64>().sqrt(), TAU * r.gen::<f64>())
}

pub fn circle_point<R: Rng>(r: &mut R) -> C {
    C::from_polar(1.0, TAU * r.gen::<f64>())
}

/// Standard complex Gaussian vector.
pub fn gaussian_vec<R: Rng>(r: &mut R, n: usize) -> Vec<C> {
    (0..n)
        .map(|_| {
            let (u, v): (f64, f64) = (r.gen::<f64>().max(f64::MIN_POSITIVE), r.gen());
            C::from_polar((-2.0 * u.ln()).sqrt(), TAU * v)
        })
        .collect()
}

/// Uniform point of the open unit ball of `ℂⁿ` scaled by `radius`.
pub fn ball_point<R: Rng>(r: &mut R, n: usize, radius: f64) -> Vec<C> {
    let g = gaussian_vec(r, n);
    let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let s = radius * r.gen::<f64>().powf(1.0 / (2.0 * n as f64)) / norm;
    g.into_iter().map(|c| c * s).collect()
}

/// Uniform point of the unit sphere of `ℂⁿ`.
pub fn sphere_point<R: Rng>(r: &mut R, n: usize) -> Vec<C> {
    let g = gaussian_vec(r, n);
    let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    g.into_iter().map(|c| c / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = rng(7, 3).gen();
        let b: f64 = rng(7, 3).gen();
        let c: f64 = rng(7, 4).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ball_points_inside() {
        let mut r = rng(1, 0);
        for _ in 0..1000 {
            let p = ball_point(&mut r, 3, 1.0);
            assert!(p.iter().map(|c| c.norm_sqr()).sum::<f64>() < 1.0);
            let s = sphere_point(&mut r, 2);
            assert!((s.iter().map(|c| c.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }
}
