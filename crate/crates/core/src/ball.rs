//! The Euclidean ball `𝔹ₙ`: automorphisms, extremals for complex lines, the
//! universal family for `𝔹₂`, the left inverse `F` and its geodesics `f_t`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discgeom::{C, ONE, ZERO};
use crate::metrics::Member;
use crate::tol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BallError {
    #[error("point is not in the open unit ball")]
    OutsideBall,
    #[error("line does not meet the open ball (foot norm {0})")]
    NoIntersection(f64),
    #[error("numerator and denominator of F both vanish")]
    Indeterminate,
    #[error("point is not on the unit sphere (norm {0})")]
    NotOnSphere(f64),
    #[error("invalid parameters")]
    InvalidParameters,
    #[error("dimension mismatch")]
    DimensionMismatch,
}

/// `⟨z, w⟩ = Σ z_j w̄_j`.
pub fn inner(z: &[C], w: &[C]) -> C {
    z.iter().zip(w).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm_sqr(z: &[C]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C>", into = "Vec<C>")]
pub struct BallPoint(Vec<C>);

impl BallPoint {
    pub fn new(coords: Vec<C>) -> Result<Self, BallError> {
        let finite = coords.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        if coords.is_empty() || !finite || norm_sqr(&coords) >= 1.0 {
            return Err(BallError::OutsideBall);
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[C] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<C>> for BallPoint {
    type Error = BallError;
    fn try_from(v: Vec<C>) -> Result<Self, BallError> {
        Self::new(v)
    }
}

impl From<BallPoint> for Vec<C> {
    fn from(p: BallPoint) -> Self {
        p.0
    }
}

/// `{base + λ·direction}` with a unit direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexLine {
    pub base: Vec<C>,
    pub direction: Vec<C>,
}

impl ComplexLine {
    /// Normalizes `direction`.
    pub fn new(base: Vec<C>, direction: Vec<C>) -> Result<Self, BallError> {
        if base.len() != direction.len() || base.is_empty() {
            return Err(BallError::DimensionMismatch);
        }
        let n = norm_sqr(&direction).sqrt();
        if !(n > 0.0 && n.is_finite()) || base.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(BallError::InvalidParameters);
        }
        Ok(Self {
            base,
            direction: direction.into_iter().map(|c| c / n).collect(),
        })
    }

    pub fn point(&self, lambda: C) -> Vec<C> {
        self.base
            .iter()
            .zip(&self.direction)
            .map(|(b, d)| b + lambda * d)
            .collect()
    }
}

/// `Φ_a(z) = (√(1-‖a‖²)(⟨z,a⟩a - ‖a‖²z) - ⟨z,a⟩a + ‖a‖²a) / (‖a‖²(1 - ⟨z,a⟩))`,
/// `Φ₀ = id`. No domain check.
pub fn ball_automorphism_raw(a: &[C], z: &[C]) -> Vec<C> {
    let na2 = norm_sqr(a);
    if na2 == 0.0 {
        return z.to_vec();
    }
    let t = inner(z, a);
    let s = (1.0 - na2).sqrt();
    let den = na2 * (ONE - t);
    a.iter()
        .zip(z)
        .map(|(aj, zj)| (s * (t * aj - na2 * zj) - t * aj + na2 * aj) / den)
        .collect()
}

pub fn ball_automorphism(a: &BallPoint, z: &BallPoint) -> Result<BallPoint, BallError> {
    if a.dim() != z.dim() {
        return Err(BallError::DimensionMismatch);
    }
    BallPoint::new(ball_automorphism_raw(a.coords(), z.coords()))
}

/// Holomorphic Jacobian of `Φ_a`: `jac[j][k] = ∂Φ_j/∂z_k`.
pub fn ball_automorphism_jacobian(a: &[C], z: &[C]) -> Vec<Vec<C>> {
    let n = a.len();
    let na2 = norm_sqr(a);
    if na2 == 0.0 {
        return (0..n)
            .map(|j| (0..n).map(|k| if j == k { ONE } else { ZERO }).collect())
            .collect();
    }
    let t = inner(z, a);
    let s = (1.0 - na2).sqrt();
    let den = na2 * (ONE - t);
    let num: Vec<C> = a
        .iter()
        .zip(z)
        .map(|(aj, zj)| s * (t * aj - na2 * zj) - t * aj + na2 * aj)
        .collect();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    let ak = a[k].conj();
                    let dnum = s * (ak * a[j] - if j == k { C::new(na2, 0.0) } else { ZERO }) - ak * a[j];
                    let dden = -na2 * ak;
                    (dnum * den - num[j] * dden) / (den * den)
                })
                .collect()
        })
        .collect()
}

/// Orthogonal foot of the origin on the line.
pub fn minimal_norm_point(l: &ComplexLine) -> Result<BallPoint, BallError> {
    let p = inner(&l.base, &l.direction);
    let foot: Vec<C> = l.base.iter().zip(&l.direction).map(|(b, d)| b - p * d).collect();
    let n = norm_sqr(&foot);
    if n >= 1.0 {
        return Err(BallError::NoIntersection(n.sqrt()));
    }
    BallPoint::new(foot)
}

/// `Ψ_l = U₁ ∘ Φ_a` for a line `l` with minimal point `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallExtremal {
    pub minimal_point: BallPoint,
    pub direction: Vec<C>,
    /// Rows form an orthonormal basis; `U z = (⟨z, row_k⟩)_k`.
    pub unitary: Vec<Vec<C>>,
}

impl BallExtremal {
    pub fn eval(&self, z: &[C]) -> C {
        inner(&ball_automorphism_raw(self.minimal_point.coords(), z), &self.unitary[0])
    }

    pub fn gradient(&self, z: &[C]) -> Vec<C> {
        let jac = ball_automorphism_jacobian(self.minimal_point.coords(), z);
        let u = &self.unitary[0];
        (0..z.len())
            .map(|k| (0..z.len()).map(|j| jac[j][k] * u[j].conj()).sum())
            .collect()
    }

    /// `U Φ_a(z)`.
    pub fn apply_full(&self, z: &[C]) -> Vec<C> {
        let w = ball_automorphism_raw(self.minimal_point.coords(), z);
        self.unitary.iter().map(|row| inner(&w, row)).collect()
    }

    /// Parameter on the line mapped to `λ`: `Ψ_l(a + μ d) = μ / √(1-‖a‖²)`.
    pub fn line_scale(&self) -> f64 {
        (1.0 - norm_sqr(self.minimal_point.coords())).sqrt()
    }
}

/// Gram–Schmidt completion of `first` against the standard basis.
fn orthonormal_completion(first: &[C]) -> Vec<Vec<C>> {
    let n = first.len();
    let mut basis = vec![first.to_vec()];
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v: Vec<C> = (0..n).map(|k| if k == e { ONE } else { ZERO }).collect();
        for b in &basis {
            let p = inner(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
        let nv = norm_sqr(&v).sqrt();
        if nv > 1e-8 {
            basis.push(v.into_iter().map(|c| c / nv).collect());
        }
    }
    basis
}

pub fn psi_l(l: &ComplexLine) -> Result<BallExtremal, BallError> {
    let a = minimal_norm_point(l)?;
    let first: Vec<C> = if norm_sqr(a.coords()) == 0.0 {
        l.direction.clone()
    } else {
        l.direction.iter().map(|d| -d).collect()
    };
    Ok(BallExtremal {
        minimal_point: a,
        direction: l.direction.clone(),
        unitary: orthonormal_completion(&first),
    })
}

/// `√(1-‖a‖²)(a₁z₂ - a₂z₁) / (‖a‖(1 - ā₁z₁ - ā₂z₂))`.
pub fn universal_member_b2(a: [C; 2]) -> Result<Member, BallError> {
    let n = norm_sqr(&a);
    if !(n > 0.0 && n < 1.0) {
        return Err(BallError::InvalidParameters);
    }
    Ok(Member::BallB2 { a })
}

/// `z ↦ a₁z₁ + a₂z₂` with `a₁ ≥ 0`, `a₁² + |a₂|² = 1`.
pub fn universal_member_linear(a1: f64, a2: C) -> Result<Member, BallError> {
    if !(a1 >= 0.0) || (a1 * a1 + a2.norm_sqr() - 1.0).abs() > tol::UNIMODULAR {
        return Err(BallError::InvalidParameters);
    }
    Ok(Member::Linear {
        coeffs: vec![C::new(a1, 0.0), a2],
    })
}

pub(crate) fn b2_member_eval(a: &[C; 2], z: &[C]) -> C {
    let n = norm_sqr(a);
    let k = (1.0 - n).sqrt() / n.sqrt();
    k * (a[0] * z[1] - a[1] * z[0]) / (ONE - a[0].conj() * z[0] - a[1].conj() * z[1])
}

pub(crate) fn b2_member_gradient(a: &[C; 2], z: &[C]) -> Vec<C> {
    let n = norm_sqr(a);
    let k = (1.0 - n).sqrt() / n.sqrt();
    let num = a[0] * z[1] - a[1] * z[0];
    let den = ONE - a[0].conj() * z[0] - a[1].conj() * z[1];
    let d2 = den * den;
    vec![
        k * (-a[1] * den + num * a[0].conj()) / d2,
        k * (a[0] * den + num * a[1].conj()) / d2,
    ]
}

/// Numerator and denominator of `F(z) = (2z₁(1-z₁) - z₂²) / (2(1-z₁) - z₂²)`.
pub fn f_parts(z: [C; 2]) -> (C, C) {
    (
        2.0 * z[0] * (ONE - z[0]) - z[1] * z[1],
        2.0 * (ONE - z[0]) - z[1] * z[1],
    )
}

/// `F(z)`, with `Indeterminate` when the denominator is below the pole floor.
pub fn f_left_inverse(z: [C; 2]) -> Result<C, BallError> {
    let (n, d) = f_parts(z);
    if d.norm() < tol::POLE_FLOOR {
        return Err(BallError::Indeterminate);
    }
    Ok(n / d)
}

pub(crate) fn f_gradient(z: [C; 2]) -> Vec<C> {
    let (n, d) = f_parts(z);
    let d2 = d * d;
    vec![
        ((2.0 - 4.0 * z[0]) * d + 2.0 * n) / d2,
        2.0 * z[1] * (n - d) / d2,
    ]
}

/// `f_t(λ) = ((t² + λ)/(1 + t²), t(λ - 1)/(1 + t²))`.
pub fn f_t_geodesic(t: f64, lambda: C) -> [C; 2] {
    let s = 1.0 + t * t;
    [(t * t + lambda) / s, t * (lambda - 1.0) / s]
}

/// `√(1 - (1-‖w‖²)(1-‖z‖²)/|1-⟨w,z⟩|²)`.
pub fn c_star_ball(w: &[C], z: &[C]) -> f64 {
    let q = (1.0 - norm_sqr(w)) * (1.0 - norm_sqr(z)) / (ONE - inner(w, z)).norm_sqr();
    (1.0 - q).max(0.0).sqrt()
}

/// `c_{𝔹ₙ}(w, z) = artanh c*(w, z)`.
pub fn c_ball(w: &[C], z: &[C]) -> f64 {
    c_star_ball(w, z).atanh()
}

/// `Im(z₂(1 - z̄₁))`; zero exactly on the part of the sphere where `|F| = 1`.
pub fn locus_condition(z: [C; 2]) -> f64 {
    (z[1] * (ONE - z[0].conj())).im
}

/// Whether `|F(z)| = 1` at a sphere point, read off the locus condition.
pub fn boundary_modulus_locus(z: [C; 2]) -> Result<bool, BallError> {
    boundary_modulus_locus_with(z, 1e-12)
}

pub fn boundary_modulus_locus_with(z: [C; 2], slack: f64) -> Result<bool, BallError> {
    let n = norm_sqr(&z).sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(BallError::NotOnSphere(n));
    }
    Ok(locus_condition(z).abs() <= slack)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusCheck {
    pub condition: f64,
    pub on_locus: bool,
    /// `|F(z)|`, absent at the indeterminacy point.
    pub modulus: Option<f64>,
}

/// Locus condition together with the direct `|F|` evaluation.
pub fn boundary_locus_check(z: [C; 2]) -> Result<LocusCheck, BallError> {
    let on_locus = boundary_modulus_locus(z)?;
    let modulus = match f_left_inverse(z) {
        Ok(v) => Some(v.norm()),
        Err(BallError::Indeterminate) => None,
        Err(e) => return Err(e),
    };
    Ok(LocusCheck {
        condition: locus_condition(z),
        on_locus,
        modulus,
    })
}
