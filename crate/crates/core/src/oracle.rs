//! Brute-force cross-checks. Nothing here calls the formulas it is meant to
//! check: roots, hyperbolic distances and disc evaluation are recomputed
//! from raw coefficients.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discgeom::{Quadratic, C};
use crate::geodesics::{AnalyticDisc, RationalMap};
use crate::metrics::DomainTag;
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("family member {0} leaves the unit disc")]
    MemberOutOfDisc(usize),
    #[error("point is outside the domain")]
    OutsideDomain,
    #[error("disc misses a prescribed point by {0:e}")]
    NotThrough(f64),
    #[error("disc leaves the domain at a sampled parameter")]
    DiscLeavesDomain,
    #[error("finite-difference step must be positive")]
    InvalidStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum Region {
    Lens { a: f64, b: f64 },
    Polydisc { n: usize },
    Ball { n: usize },
    Circle,
}

/// Deterministic sample sequence; point `i` depends only on `(seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub seed: u64,
    pub count: usize,
    pub region: Region,
}

impl SampleGrid {
    pub fn point(&self, i: usize) -> Vec<C> {
        let mut r = sampling::rng(self.seed, i as u64);
        match self.region {
            Region::Lens { a, b } => loop {
                let g = C::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                if g.norm() < 1.0 && (a * g + 1.0).norm() < b {
                    return vec![g];
                }
            },
            Region::Polydisc { n } => (0..n).map(|_| sampling::disc_point(&mut r, 1.0)).collect(),
            Region::Ball { n } => sampling::ball_point(&mut r, n, 1.0),
            Region::Circle => vec![sampling::circle_point(&mut r)],
        }
    }

    pub fn points(&self) -> Vec<Vec<C>> {
        (0..self.count).map(|i| self.point(i)).collect()
    }
}

/// All roots, by the cancellation-free form of the quadratic formula.
pub fn quadratic_roots(q: &Quadratic) -> Result<Vec<C>, OracleError> {
    let (a, b, c) = (q.a, q.b, q.c0);
    let zero = C::new(0.0, 0.0);
    if a == zero {
        if b == zero {
            return if c == zero {
                Err(OracleError::ZeroPolynomial)
            } else {
                Ok(vec![])
            };
        }
        return Ok(vec![-c / b]);
    }
    let s = (b * b - 4.0 * a * c).sqrt();
    // pick the sign that adds magnitudes
    let s = if (b.conj() * s).re >= 0.0 { s } else { -s };
    let t = -(b + s) / 2.0;
    if t == zero {
        return Ok(vec![zero, zero]);
    }
    Ok(vec![t / a, c / t])
}

/// Hyperbolic distance from `1 - p² = (1-|z|²)(1-|w|²)/|1-w̄z|²`.
pub fn rho_oracle(z: C, w: C) -> f64 {
    let q = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr()) / (C::new(1.0, 0.0) - w.conj() * z).norm_sqr();
    let p = (1.0 - q).max(0.0).sqrt();
    0.5 * ((1.0 + p) / (1.0 - p)).ln()
}

pub type ScalarMap<'a> = dyn Fn(&[C]) -> C + Sync + 'a;

/// `max_F ρ(F(z), F(w))` over the family: a lower bound for `c_D(z, w)`.
pub fn caratheodory_lower_bound(
    domain: &DomainTag,
    z: &[C],
    w: &[C],
    family: &[&ScalarMap<'_>],
) -> Result<f64, OracleError> {
    if !domain.contains(z) || !domain.contains(w) {
        return Err(OracleError::OutsideDomain);
    }
    let mut best = 0.0_f64;
    for (k, f) in family.iter().enumerate() {
        let (fz, fw) = (f(z), f(w));
        if !(fz.norm() < 1.0 && fw.norm() < 1.0) {
            return Err(OracleError::MemberOutOfDisc(k));
        }
        best = best.max(rho_oracle(fz, fw));
    }
    Ok(best)
}

fn eval_component(r: &RationalMap, l: C) -> C {
    let poly = |q: &Quadratic| q.c0 + q.b * l + q.a * l.powi(2);
    l.powi(r.lambda_power as i32) * poly(&r.num) / poly(&r.den)
}

fn eval_disc(d: &AnalyticDisc, l: C) -> Vec<C> {
    d.components.iter().map(|c| eval_component(c, l)).collect()
}

fn miss(d: &AnalyticDisc, l: C, p: &[C]) -> f64 {
    eval_disc(d, l).iter().zip(p).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Roots of `Σ c_k λ^k` (ascending coefficients) as companion-matrix
/// eigenvalues.
pub fn polynomial_roots(ascending: &[C]) -> Vec<C> {
    let scale = ascending.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let Some(top) = ascending.iter().rposition(|c| c.norm() > 1e-14 * scale) else {
        return vec![];
    };
    if top == 0 {
        return vec![];
    }
    let lead = ascending[top];
    let companion = DMatrix::from_fn(top, top, |i, j| {
        if j == top - 1 {
            -ascending[i] / lead
        } else if i == j + 1 {
            C::new(1.0, 0.0)
        } else {
            C::new(0.0, 0.0)
        }
    });
    companion.schur().eigenvalues().map(|e| e.iter().copied().collect()).unwrap_or_default()
}

/// Solutions in the open disc of `component(λ) = target`.
fn component_preimages(r: &RationalMap, target: C) -> Vec<C> {
    let zero = C::new(0.0, 0.0);
    let mut lhs = vec![zero; r.lambda_power as usize];
    lhs.extend([r.num.c0, r.num.b, r.num.a]);
    let rhs = [r.den.c0, r.den.b, r.den.a];
    let mut poly = lhs;
    for (k, c) in rhs.iter().enumerate() {
        poly[k] -= target * c;
    }
    polynomial_roots(&poly).into_iter().filter(|l| l.norm() < 1.0).collect()
}

/// Parameter of the disc closest to `p`: exact preimages of each component
/// and a polar grid as starts, each polished by damped Gauss–Newton with
/// difference derivatives.
pub fn locate_parameter(d: &AnalyticDisc, p: &[C]) -> (C, f64) {
    let polish = |starts: Vec<C>| {
        starts
            .into_iter()
            .map(|l| refine(d, p, l))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    };
    let exact: Vec<C> = d
        .components
        .iter()
        .zip(p)
        .flat_map(|(r, &q)| component_preimages(r, q))
        .collect();
    let found = polish(exact);
    if let Some(f) = found.filter(|f| f.1 < 1e-12) {
        return f;
    }
    let mut grid: Vec<(C, f64)> = vec![];
    for i in 0..40 {
        let rad = 0.999 * (i as f64 / 40.0).sqrt();
        for j in 0..96 {
            let l = C::from_polar(rad, std::f64::consts::TAU * j as f64 / 96.0);
            grid.push((l, miss(d, l, p)));
        }
    }
    grid.sort_by(|a, b| a.1.total_cmp(&b.1));
    let fallback = polish(grid.iter().take(4).map(|g| g.0).collect());
    [found, fallback]
        .into_iter()
        .flatten()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((C::new(0.0, 0.0), f64::INFINITY))
}

fn refine(d: &AnalyticDisc, p: &[C], start: C) -> (C, f64) {
    let mut l = start;
    let mut cur = miss(d, l, p);
    for _ in 0..100 {
        let h = 1e-7 * (1.0 - l.norm()).clamp(1e-6, 1.0);
        let (fp, fm, f0) = (eval_disc(d, l + h), eval_disc(d, l - h), eval_disc(d, l));
        let num: C = fp.iter().zip(&fm).zip(f0.iter().zip(p)).map(|((a, b), (f, q))| ((a - b) / (2.0 * h)).conj() * (f - q)).sum();
        let den: f64 = fp.iter().zip(&fm).map(|(a, b)| ((a - b) / (2.0 * h)).norm_sqr()).sum();
        if den == 0.0 {
            break;
        }
        let mut step = num / den;
        let mut moved = false;
        for _ in 0..40 {
            let next = l - step;
            if next.norm() < 1.0 {
                let m = miss(d, next, p);
                if m < cur {
                    l = next;
                    cur = m;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved || cur < 1e-15 {
            break;
        }
    }
    (l, cur)
}

/// `ρ(λ_z, λ_w)` for parameters with `disc(λ_z) = z`, `disc(λ_w) = w`: an
/// upper bound for the Lempert function when the disc lies in the domain.
pub fn lempert_upper_bound(
    disc: &AnalyticDisc,
    z: &[C],
    w: &[C],
    inside: &dyn Fn(&[C]) -> bool,
) -> Result<f64, OracleError> {
    for k in 0..64 {
        let l = C::from_polar(0.99 * ((k % 8) as f64 + 1.0) / 8.0, 0.37 * k as f64);
        if !inside(&eval_disc(disc, l)) {
            return Err(OracleError::DiscLeavesDomain);
        }
    }
    let (lz, mz) = locate_parameter(disc, z);
    let (lw, mw) = locate_parameter(disc, w);
    let m = mz.max(mw);
    if m > 1e-9 {
        return Err(OracleError::NotThrough(m));
    }
    Ok(rho_oracle(lz, lw))
}

/// `(f(z + h e) - f(z - h e)) / 2h`.
pub fn finite_diff_derivative(
    f: &dyn Fn(&[C]) -> C,
    z: &[C],
    direction: &[C],
    h: f64,
) -> Result<C, OracleError> {
    if !(h > 0.0) {
        return Err(OracleError::InvalidStep);
    }
    let shift = |s: f64| -> Vec<C> { z.iter().zip(direction).map(|(a, e)| a + s * h * e).collect() };
    Ok((f(&shift(1.0)) - f(&shift(-1.0))) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn roots_examples() {
        let r = quadratic_roots(&Quadratic::new(c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))).unwrap();
        assert!(r.iter().any(|x| (x - 1.0).norm() < 1e-15) && r.iter().any(|x| (x + 1.0).norm() < 1e-15));
        let r = quadratic_roots(&Quadratic::new(c(0.8, 0.0), c(-1.0, 0.0), c(0.8, 0.0))).unwrap();
        let y = 0.609_375_f64.sqrt();
        assert!(r.iter().any(|x| (x - c(0.625, y)).norm() < 1e-15));
        assert!(r.iter().any(|x| (x - c(0.625, -y)).norm() < 1e-15));
        assert_eq!(quadratic_roots(&Quadratic::new(c(0.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0))).unwrap(), vec![c(2.0, 0.0)]);
        assert_eq!(quadratic_roots(&Quadratic::constant(c(0.0, 0.0))), Err(OracleError::ZeroPolynomial));
    }

    #[test]
    fn lower_bound_examples() {
        let dom = DomainTag::Polydisc { n: 2 };
        let (z, w) = ([c(0.1, 0.0), c(0.2, 0.3)], [c(-0.4, 0.1), c(0.0, 0.0)]);
        assert_eq!(caratheodory_lower_bound(&dom, &z, &w, &[]).unwrap(), 0.0);
        let p0 = |v: &[C]| v[0];
        let p1 = |v: &[C]| v[1];
        let lb = caratheodory_lower_bound(&dom, &z, &w, &[&p0, &p1]).unwrap();
        let want = crate::metrics::c_polydisc(&z, &w).unwrap();
        assert!((lb - want).abs() < 1e-14);
        let big = |v: &[C]| v[0] * 20.0;
        assert_eq!(caratheodory_lower_bound(&dom, &z, &w, &[&big]), Err(OracleError::MemberOutOfDisc(0)));
    }

    #[test]
    fn upper_bound_flat_disc() {
        let id = RationalMap::identity();
        let zero = RationalMap::zero();
        let disc = AnalyticDisc::new(vec![id, zero, zero], crate::geodesics::DiscTag::Flat, serde_json::Value::Null).unwrap();
        let t = c(0.3, 0.4);
        let inside = |v: &[C]| v.iter().all(|x| x.norm() < 1.0);
        let ub = lempert_upper_bound(&disc, &[c(0.0, 0.0); 3], &[t, c(0.0, 0.0), c(0.0, 0.0)], &inside).unwrap();
        assert!((ub - 0.5f64.atanh()).abs() < 1e-12);
        assert!(matches!(
            lempert_upper_bound(&disc, &[c(0.0, 0.0); 3], &[t, t, t], &inside),
            Err(OracleError::NotThrough(_))
        ));
    }

    #[test]
    fn finite_difference_examples() {
        let f = |v: &[C]| v[0];
        let d = finite_diff_derivative(&f, &[c(0.1, 0.2), c(0.0, 0.0)], &[c(0.3, -0.1), c(1.0, 0.0)], 1e-6).unwrap();
        assert!((d - c(0.3, -0.1)).norm() < 1e-10);
        assert_eq!(finite_diff_derivative(&f, &[c(0.0, 0.0)], &[c(1.0, 0.0)], 0.0), Err(OracleError::InvalidStep));
    }

    #[test]
    fn grid_is_deterministic() {
        let g = SampleGrid { seed: 5, count: 20, region: Region::Lens { a: 0.8, b: 0.8 } };
        assert_eq!(g.points(), g.points());
        for p in g.points() {
            assert!(p[0].norm() < 1.0 && (0.8 * p[0] + 1.0).norm() < 0.8);
        }
    }
}
