//! Hyperbolic geometry of the unit disc and one-variable Blaschke/Schur tools.
//!
//! All distances here are expressed through the Möbius pseudodistance
//! `p(z, w) = |(z - w) / (1 - w̄ z)|`; the Poincaré distance is
//! `ρ = artanh p`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tol;

/// Complex scalar used throughout the crate.
pub type C = Complex64;

pub(crate) const ZERO: C = C::new(0.0, 0.0);
pub(crate) const ONE: C = C::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point {0} is not in the open unit disc")]
    OutsideDisc(C),
    #[error("non-finite complex value {0}")]
    NonFinite(C),
    #[error("rotation {0} is not unimodular")]
    NotUnimodular(C),
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("denominator has a root in the closed unit disc")]
    PoleInClosedDisc,
}

pub(crate) fn check_finite(z: C) -> Result<C, GeomError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(GeomError::NonFinite(z))
    }
}

pub(crate) fn check_disc(z: C) -> Result<C, GeomError> {
    check_finite(z)?;
    if z.norm_sqr() < 1.0 {
        Ok(z)
    } else {
        Err(GeomError::OutsideDisc(z))
    }
}

/// A point of the open unit disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "C", into = "C")]
pub struct DiscPoint(C);

impl DiscPoint {
    pub fn new(value: C) -> Result<Self, GeomError> {
        check_disc(value).map(Self)
    }

    pub fn origin() -> Self {
        Self(ZERO)
    }

    pub fn value(self) -> C {
        self.0
    }
}

impl TryFrom<C> for DiscPoint {
    type Error = GeomError;
    fn try_from(value: C) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<DiscPoint> for C {
    fn from(p: DiscPoint) -> C {
        p.0
    }
}

/// `λ ↦ rotation · (ν - λ) / (1 - ν̄ λ)`.
///
/// With `rotation = 1` this is the involution `m_ν` exchanging `ν` and `0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    nu: C,
    rotation: C,
}

impl MobiusMap {
    pub fn new(nu: C, rotation: C) -> Result<Self, GeomError> {
        check_disc(nu)?;
        check_finite(rotation)?;
        if (rotation.norm() - 1.0).abs() > tol::UNIMODULAR {
            return Err(GeomError::NotUnimodular(rotation));
        }
        Ok(Self { nu, rotation })
    }

    /// The involution `m_ν`.
    pub fn involution(nu: C) -> Result<Self, GeomError> {
        Self::new(nu, ONE)
    }

    /// `λ ↦ rotation · λ`, written as `rotation · (0 - (-λ))`.
    pub fn rotation(rotation: C) -> Result<Self, GeomError> {
        Self::new(ZERO, -rotation)
    }

    pub fn identity() -> Self {
        Self {
            nu: ZERO,
            rotation: -ONE,
        }
    }

    pub fn nu(&self) -> C {
        self.nu
    }

    pub fn rotation_factor(&self) -> C {
        self.rotation
    }

    /// Raw evaluation; no domain check on `lambda`.
    pub fn apply(&self, lambda: C) -> C {
        self.rotation * (self.nu - lambda) / (ONE - self.nu.conj() * lambda)
    }

    /// Derivative of [`Self::apply`].
    pub fn derivative(&self, lambda: C) -> C {
        let d = ONE - self.nu.conj() * lambda;
        -self.rotation * (1.0 - self.nu.norm_sqr()) / (d * d)
    }

    pub fn inverse(&self) -> Self {
        Self {
            nu: self.rotation * self.nu,
            rotation: self.rotation.conj(),
        }
    }

    /// Coefficients as a rational map `num / den` of degree one.
    pub fn as_rational(&self) -> (Quadratic, Quadratic) {
        (
            Quadratic::new(ZERO, -self.rotation, self.rotation * self.nu),
            Quadratic::new(ZERO, -self.nu.conj(), ONE),
        )
    }
}

/// `A λ² + B λ + C0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[C; 3]", into = "[C; 3]")]
pub struct Quadratic {
    pub a: C,
    pub b: C,
    pub c0: C,
}

impl From<[C; 3]> for Quadratic {
    fn from(c: [C; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }
}

impl From<Quadratic> for [C; 3] {
    fn from(q: Quadratic) -> Self {
        [q.a, q.b, q.c0]
    }
}

impl Quadratic {
    pub const fn new(a: C, b: C, c0: C) -> Self {
        Self { a, b, c0 }
    }

    pub const fn constant(c0: C) -> Self {
        Self::new(ZERO, ZERO, c0)
    }

    pub fn eval(&self, lambda: C) -> C {
        (self.a * lambda + self.b) * lambda + self.c0
    }

    pub fn derivative(&self, lambda: C) -> C {
        2.0 * self.a * lambda + self.b
    }

    pub fn coeffs(&self) -> [C; 3] {
        [self.a, self.b, self.c0]
    }

    pub fn max_abs(&self) -> f64 {
        self.a.norm().max(self.b.norm()).max(self.c0.norm())
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0.0
    }

    pub fn scale(&self, k: C) -> Self {
        Self::new(self.a * k, self.b * k, self.c0 * k)
    }

    /// Highest power with a nonzero coefficient, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.a != ZERO {
            Some(2)
        } else if self.b != ZERO {
            Some(1)
        } else if self.c0 != ZERO {
            Some(0)
        } else {
            None
        }
    }

    /// `λ^d · conj(q(1/λ̄))` for a formal degree `d ≥ deg q`.
    pub fn reciprocal(&self, formal_degree: usize) -> Self {
        let c = [self.c0, self.b, self.a];
        let mut out = [ZERO; 3];
        for k in 0..=formal_degree.min(2) {
            out[formal_degree - k] = c[k].conj();
        }
        Self::new(out[2], out[1], out[0])
    }

    /// Roots by the textbook formula; the linear/constant cases are handled
    /// separately.
    pub(crate) fn roots(&self) -> Vec<C> {
        match self.degree() {
            None | Some(0) => vec![],
            Some(1) => vec![-self.c0 / self.b],
            Some(_) => {
                let disc = (self.b * self.b - 4.0 * self.a * self.c0).sqrt();
                let two_a = 2.0 * self.a;
                vec![(-self.b + disc) / two_a, (-self.b - disc) / two_a]
            }
        }
    }
}

/// Möbius pseudodistance `|(z - w) / (1 - w̄ z)|`.
pub fn mobius_dist(z: C, w: C) -> Result<f64, GeomError> {
    check_disc(z)?;
    check_disc(w)?;
    let p = ((z - w) / (ONE - w.conj() * z)).norm();
    Ok(p.min(1.0 - f64::EPSILON))
}

/// `1 - |z|²` with fused multiply-adds.
fn one_minus_abs2(z: C) -> f64 {
    (-z.im).mul_add(z.im, (-z.re).mul_add(z.re, 1.0))
}

/// Poincaré distance `ρ(z, w) = artanh p(z, w)`. Far apart points use
/// `ρ = ln((|1-w̄z| + |z-w|) / √s)` with `s = (1-|z|²)(1-|w|²)` and
/// `|1-w̄z|² = |z-w|² + s`, which keeps full accuracy near the circle.
pub fn rho(z: C, w: C) -> Result<f64, GeomError> {
    check_disc(z)?;
    check_disc(w)?;
    let b = (z - w).norm();
    let s = one_minus_abs2(z) * one_minus_abs2(w);
    let a = b.hypot(s.sqrt());
    let p = b / a;
    if p < 0.5 {
        return Ok(p.atanh());
    }
    Ok(((a + b) / s.sqrt()).ln())
}

/// Infinitesimal Poincaré metric `|X| / (1 - |w|²)`.
pub fn gamma_disc(w: C, x: C) -> Result<f64, GeomError> {
    check_disc(w)?;
    check_finite(x)?;
    Ok(x.norm() / (1.0 - w.norm_sqr()))
}

pub fn mobius_eval(m: &MobiusMap, lambda: DiscPoint) -> DiscPoint {
    let v = m.apply(lambda.value());
    // m preserves 𝔻; clamp rounding on the boundary side
    if v.norm_sqr() < 1.0 {
        DiscPoint(v)
    } else {
        DiscPoint(v / v.norm() * (1.0 - f64::EPSILON))
    }
}

/// Schur test: every root of `A λ² + B λ + C0` lies strictly outside the
/// closed unit disc. Default decision tolerance [`tol::INEQUALITY`].
pub fn schur_roots_outside(q: &Quadratic) -> Result<bool, GeomError> {
    schur_roots_outside_with(q, tol::INEQUALITY)
}

/// Schur test with an explicit tolerance, applied to the coefficients
/// scaled to unit max-modulus. `|C| > |A|` and `|C|² - |A|² > |B C̄ - A B̄|`.
/// For `A = 0` the same two inequalities reduce to `|C0| > |B|`.
pub fn schur_roots_outside_with(q: &Quadratic, tol: f64) -> Result<bool, GeomError> {
    for c in q.coeffs() {
        check_finite(c)?;
    }
    let s = q.max_abs();
    if s == 0.0 {
        return Err(GeomError::ZeroPolynomial);
    }
    let (a, b, c) = (q.a / s, q.b / s, q.c0 / s);
    let (na, nc) = (a.norm(), c.norm());
    let first = nc - na > tol;
    let second = (nc * nc - na * na) - (b * c.conj() - a * b.conj()).norm() > tol;
    Ok(first && second)
}

/// Result of [`blaschke_degree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlaschkeDegree {
    Degree(u8),
    NotBlaschke,
}

const BLASCHKE_SAMPLES: usize = 64;

/// Decides whether `num / den` is a finite Blaschke product and returns its
/// degree.
///
/// First tries the coefficient identity `num = ε · den*` with `den*` the
/// reciprocal polynomial at formal degree 0, 1 or 2 and `|ε| = 1`; then falls
/// back to checking `|num/den| = 1` at 64 unit-circle points. The degree is
/// the number of zeros of `num` in the open disc.
pub fn blaschke_degree(num: &Quadratic, den: &Quadratic) -> Result<BlaschkeDegree, GeomError> {
    if !schur_roots_outside(den)? {
        return Err(GeomError::PoleInClosedDisc);
    }
    if num.is_zero() {
        return Ok(BlaschkeDegree::NotBlaschke);
    }
    let dd = den.degree().unwrap_or(0);
    for formal in dd..=2 {
        let rec = den.reciprocal(formal);
        if let Some(eps) = proportional(num, &rec) {
            if (eps.norm() - 1.0).abs() < tol::UNIMODULAR * 1e3 {
                return Ok(BlaschkeDegree::Degree(formal as u8));
            }
        }
    }
    let unimodular = (0..BLASCHKE_SAMPLES).all(|k| {
        let t = std::f64::consts::TAU * k as f64 / BLASCHKE_SAMPLES as f64;
        let l = C::from_polar(1.0, t);
        ((num.eval(l) / den.eval(l)).norm() - 1.0).abs() < tol::BLASCHKE_SAMPLING
    });
    if !unimodular {
        return Ok(BlaschkeDegree::NotBlaschke);
    }
    let inside = num.roots().iter().filter(|r| r.norm() < 1.0).count();
    Ok(BlaschkeDegree::Degree(inside as u8))
}

/// `Some(ε)` with `p = ε q` coefficientwise (relative tolerance 1e-12).
fn proportional(p: &Quadratic, q: &Quadratic) -> Option<C> {
    let (pc, qc) = (p.coeffs(), q.coeffs());
    let k = (0..3).max_by(|&i, &j| qc[i].norm().total_cmp(&qc[j].norm()))?;
    if qc[k] == ZERO {
        return None;
    }
    let eps = pc[k] / qc[k];
    let scale = p.max_abs().max(q.max_abs() * eps.norm());
    let ok = (0..3).all(|i| (pc[i] - eps * qc[i]).norm() <= 1e-12 * scale);
    ok.then_some(eps)
}
