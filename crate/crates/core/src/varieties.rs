//! The tridisc varieties `M_α` and the planar-pair domains `D_{a,b}`.
//!
//! `M_α = {z ∈ 𝔻³ : α₁z₁ + α₂z₂ + α₃z₃ = ᾱ₃z₁z₂ + ᾱ₂z₁z₃ + ᾱ₁z₂z₃}`.
//! The defining equation is invariant under a simultaneous permutation of
//! `α` and `z`, which is what [`Permutation`] relies on.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discgeom::{check_disc, check_finite, GeomError, MobiusMap, C, ONE, ZERO};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VarietyError {
    #[error("alpha must not be the zero triple")]
    ZeroAlpha,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("graph denominator vanishes at ({0}, {1})")]
    Pole(C, C),
    #[error("operation needs alpha_3 != 0; permute coordinates first")]
    Unsupported,
    #[error("automorphism does not send a point of M_alpha to the origin (residual {0:e})")]
    InvalidAutomorphism(f64),
    #[error("image variety is degenerate: {0}")]
    DegenerateImage(String),
    #[error("transported variety misses sampled points (residual {0:e})")]
    TransportMismatch(f64),
    #[error("point is not in the domain")]
    NotInDomain,
    #[error("domain parameters must be positive and finite")]
    InvalidParameters,
}

/// Nonzero coefficient triple of `M_α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub alpha: [C; 3],
}

impl Alpha {
    pub fn new(a1: C, a2: C, a3: C) -> Result<Self, VarietyError> {
        for c in [a1, a2, a3] {
            check_finite(c)?;
        }
        if a1 == ZERO && a2 == ZERO && a3 == ZERO {
            return Err(VarietyError::ZeroAlpha);
        }
        Ok(Self { alpha: [a1, a2, a3] })
    }

    pub fn real(a1: f64, a2: f64, a3: f64) -> Result<Self, VarietyError> {
        Self::new(C::new(a1, 0.0), C::new(a2, 0.0), C::new(a3, 0.0))
    }

    pub fn validate(&self) -> Result<(), VarietyError> {
        Self::new(self.alpha[0], self.alpha[1], self.alpha[2]).map(|_| ())
    }

    pub fn moduli(&self) -> [f64; 3] {
        self.alpha.map(|a| a.norm())
    }

    pub fn max_abs(&self) -> f64 {
        self.moduli().into_iter().fold(0.0, f64::max)
    }

    pub fn permuted(&self, p: &Permutation) -> Self {
        Self {
            alpha: p.apply(self.alpha),
        }
    }

    pub fn scaled(&self, k: C) -> Self {
        Self {
            alpha: self.alpha.map(|a| a * k),
        }
    }
}

/// Which side of the triangle-inequality classification a triple falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum TriClass {
    /// `M_α` is a graph over the two coordinates other than `axis` (1-based).
    RetractGraph { axis: u8 },
    NonRetract,
}

/// Rotations `r` with `z ∈ M_α ⇔ (r₁z₁, r₂z₂, r₃z₃)` on the variety
/// `z₃ = (a z₁ + b z₂ - z₁z₂) / (b z₁ + a z₂ - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalForm {
    pub a: f64,
    pub b: f64,
    pub rotations: [C; 3],
}

impl NormalForm {
    pub fn variety(&self) -> NormalVariety {
        NormalVariety {
            a: self.a,
            b: self.b,
        }
    }

    pub fn rotate(&self, z: &TriPoint) -> TriPoint {
        TriPoint {
            z: [
                self.rotations[0] * z.z[0],
                self.rotations[1] * z.z[1],
                self.rotations[2] * z.z[2],
            ],
        }
    }

    pub fn unrotate(&self, z: &TriPoint) -> TriPoint {
        TriPoint {
            z: [
                self.rotations[0].conj() * z.z[0],
                self.rotations[1].conj() * z.z[1],
                self.rotations[2].conj() * z.z[2],
            ],
        }
    }
}

/// The normalized variety `M = {z₃ = F_{a,b}(z₁, z₂)}`, i.e. `M_α` with
/// `α = (a, b, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalVariety {
    pub a: f64,
    pub b: f64,
}

impl NormalVariety {
    pub fn new(a: f64, b: f64) -> Result<Self, VarietyError> {
        if a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 {
            Ok(Self { a, b })
        } else {
            Err(VarietyError::InvalidParameters)
        }
    }

    pub fn alpha(&self) -> Alpha {
        Alpha {
            alpha: [C::new(self.a, 0.0), C::new(self.b, 0.0), ONE],
        }
    }

    pub fn residual(&self, z: &TriPoint) -> C {
        membership_residual(&self.alpha(), z)
    }

    /// `F_{a,b}(z₁, z₂)` without any domain check.
    pub fn f(&self, z1: C, z2: C) -> Result<C, VarietyError> {
        let den = self.b * z1 + self.a * z2 - ONE;
        if den.norm() < tol::POLE_FLOOR {
            return Err(VarietyError::Pole(z1, z2));
        }
        Ok((self.a * z1 + self.b * z2 - z1 * z2) / den)
    }

    /// Triangle-inequality regime for `{a, b, 1}`.
    pub fn is_interesting(&self) -> bool {
        (self.a - self.b).abs() < 1.0 && 1.0 < self.a + self.b
    }

    /// Relabels coordinates so that `dominant` (0-based) becomes the third
    /// one. Returns the normalized variety in the new coordinates and the
    /// permutation taking old points to new points.
    pub fn with_dominant_third(&self, dominant: usize) -> (NormalVariety, Permutation) {
        let p = Permutation::moving_to_third(dominant);
        let al = p.apply([self.a, self.b, 1.0]);
        (
            NormalVariety {
                a: al[0] / al[2],
                b: al[1] / al[2],
            },
            p,
        )
    }
}

/// The planar-pair domain `D_{a,b} = {z ∈ 𝔻² : |F_{a,b}(z)| < 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainDab {
    pub a: f64,
    pub b: f64,
}

impl DomainDab {
    pub fn new(a: f64, b: f64) -> Result<Self, VarietyError> {
        NormalVariety::new(a, b).map(|v| Self { a: v.a, b: v.b })
    }

    pub fn variety(&self) -> NormalVariety {
        NormalVariety {
            a: self.a,
            b: self.b,
        }
    }

    /// `|a - b| < 1 < a + b`.
    pub fn is_interesting(&self) -> bool {
        self.variety().is_interesting()
    }

    pub fn f(&self, z: [C; 2]) -> Result<C, VarietyError> {
        self.variety().f(z[0], z[1])
    }
}

/// A point of the tridisc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriPoint {
    pub z: [C; 3],
}

impl TriPoint {
    pub fn new(z1: C, z2: C, z3: C) -> Result<Self, VarietyError> {
        for z in [z1, z2, z3] {
            check_disc(z)?;
        }
        Ok(Self { z: [z1, z2, z3] })
    }

    pub fn origin() -> Self {
        Self { z: [ZERO; 3] }
    }

    /// Index of the coordinate of largest modulus; ties go to the larger index.
    pub fn dominant(&self) -> usize {
        let m = self.z.map(|c| c.norm());
        let mut best = 0;
        for k in 1..3 {
            if m[k] >= m[best] {
                best = k;
            }
        }
        best
    }
}

/// Coordinate relabeling `(σz)_k = z_{p[k]}` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation(pub [usize; 3]);

impl Permutation {
    pub const IDENTITY: Self = Self([0, 1, 2]);

    pub fn new(p: [usize; 3]) -> Option<Self> {
        let mut seen = [false; 3];
        for &i in &p {
            if i > 2 || seen[i] {
                return None;
            }
            seen[i] = true;
        }
        Some(Self(p))
    }

    /// Transposition of `k` with the third slot.
    pub fn moving_to_third(k: usize) -> Self {
        match k {
            0 => Self([2, 1, 0]),
            1 => Self([0, 2, 1]),
            _ => Self::IDENTITY,
        }
    }

    pub fn apply<T: Copy>(&self, v: [T; 3]) -> [T; 3] {
        [v[self.0[0]], v[self.0[1]], v[self.0[2]]]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = [0; 3];
        for (k, &i) in self.0.iter().enumerate() {
            inv[i] = k;
        }
        Self(inv)
    }

    pub fn all() -> [Self; 6] {
        [
            Self([0, 1, 2]),
            Self([0, 2, 1]),
            Self([1, 0, 2]),
            Self([1, 2, 0]),
            Self([2, 0, 1]),
            Self([2, 1, 0]),
        ]
    }
}

/// `m(z)_k = maps[k](z_{perm[k]})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TridiscAutomorphism {
    pub perm: Permutation,
    pub maps: [MobiusMap; 3],
}

impl TridiscAutomorphism {
    pub fn identity() -> Self {
        Self {
            perm: Permutation::IDENTITY,
            maps: [MobiusMap::identity(); 3],
        }
    }

    pub fn permutation(perm: Permutation) -> Self {
        Self {
            perm,
            maps: [MobiusMap::identity(); 3],
        }
    }

    /// Coordinatewise involutions `m_{p_j}` sending `p` to the origin.
    pub fn to_origin(p: &TriPoint) -> Result<Self, VarietyError> {
        Ok(Self {
            perm: Permutation::IDENTITY,
            maps: [
                MobiusMap::involution(p.z[0])?,
                MobiusMap::involution(p.z[1])?,
                MobiusMap::involution(p.z[2])?,
            ],
        })
    }

    pub fn apply(&self, z: &[C; 3]) -> [C; 3] {
        let s = self.perm.apply(*z);
        [
            self.maps[0].apply(s[0]),
            self.maps[1].apply(s[1]),
            self.maps[2].apply(s[2]),
        ]
    }

    pub fn inverse(&self) -> Self {
        let inv = self.perm.inverse();
        let maps = inv.apply(self.maps.map(|m| m.inverse()));
        Self { perm: inv, maps }
    }

    pub fn preimage_of_origin(&self) -> [C; 3] {
        self.inverse().apply(&[ZERO; 3])
    }
}

/// `(α₁z₁+α₂z₂+α₃z₃) - (ᾱ₃z₁z₂+ᾱ₂z₁z₃+ᾱ₁z₂z₃)`.
pub fn membership_residual(alpha: &Alpha, z: &TriPoint) -> C {
    residual_raw(alpha, &z.z)
}

pub(crate) fn residual_raw(alpha: &Alpha, z: &[C; 3]) -> C {
    let [a1, a2, a3] = alpha.alpha;
    let [z1, z2, z3] = *z;
    (a1 * z1 + a2 * z2 + a3 * z3) - (a3.conj() * z1 * z2 + a2.conj() * z1 * z3 + a1.conj() * z2 * z3)
}

/// Solves the defining equation for coordinate `k` (0-based) given the
/// other two, in increasing index order.
pub fn solve_coordinate(alpha: &Alpha, k: usize, others: [C; 2]) -> Result<C, VarietyError> {
    let (i, j) = match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let al = alpha.alpha;
    let (zi, zj) = (others[0], others[1]);
    let lin = al[k] - al[j].conj() * zi - al[i].conj() * zj;
    let cst = al[i] * zi + al[j] * zj - al[k].conj() * zi * zj;
    if lin.norm() < tol::POLE_FLOOR * alpha.max_abs() {
        return Err(VarietyError::Pole(zi, zj));
    }
    Ok(-cst / lin)
}

/// `z₃ = ω (a z₁ + b z₂ - z₁z₂) / (b̄ z₁ + ā z₂ - 1)` with `a = α₁/ᾱ₃`,
/// `b = α₂/ᾱ₃`, `ω = ᾱ₃/α₃`.
pub fn graph_value(alpha: &Alpha, z1: C, z2: C) -> Result<C, VarietyError> {
    let [a1, a2, a3] = alpha.alpha;
    if a3 == ZERO {
        return Err(VarietyError::Unsupported);
    }
    let a = a1 / a3.conj();
    let b = a2 / a3.conj();
    let omega = a3.conj() / a3;
    let den = b.conj() * z1 + a.conj() * z2 - ONE;
    if den.norm() < tol::POLE_FLOOR {
        return Err(VarietyError::Pole(z1, z2));
    }
    Ok(omega * (a * z1 + b * z2 - z1 * z2) / den)
}

/// Triangle-inequality classification. Ties count as retract.
pub fn classify(alpha: &Alpha) -> TriClass {
    let m = alpha.moduli();
    let slack = 1e-12 * alpha.max_abs();
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        if m[i] + m[j] <= m[k] + slack {
            // smallest index on ties: scan in order
            return TriClass::RetractGraph { axis: k as u8 + 1 };
        }
    }
    TriClass::NonRetract
}

fn phase(c: C) -> C {
    if c == ZERO {
        ONE
    } else {
        c / c.norm()
    }
}

/// Normal form with `a, b ≥ 0` and unimodular diagonal rotations.
pub fn normalize(alpha: &Alpha) -> Result<NormalForm, VarietyError> {
    let [a1, a2, a3] = alpha.alpha;
    if a3 == ZERO {
        return Err(VarietyError::Unsupported);
    }
    let total = phase(a1) * phase(a2) * phase(a3);
    Ok(NormalForm {
        a: a1.norm() / a3.norm(),
        b: a2.norm() / a3.norm(),
        rotations: alpha.alpha.map(|c| phase(c) * total.conj()),
    })
}

const TRANSPORT_FIT_POINTS: usize = 6;
const TRANSPORT_CHECK_POINTS: usize = 24;

/// `β` with `m(M_α) = M_β`.
///
/// The image is fitted as `z₃ = (A z₁ + B z₂ + C z₁z₂) / (D z₁ + E z₂ + F)`
/// from six evaluations of the composed map, normalized to `F = 1`, and read
/// off as `β = (c Ē, c D̄, -c̄)` with `c² = C`, `Re c ≥ 0`.
pub fn transport(alpha: &Alpha, m: &TridiscAutomorphism) -> Result<Alpha, VarietyError> {
    alpha.validate()?;
    let base = m.preimage_of_origin();
    let res = residual_raw(alpha, &base).norm() / alpha.max_abs();
    if res > 1e-10 || base.iter().any(|z| z.norm() >= 1.0) {
        return Err(VarietyError::InvalidAutomorphism(res));
    }

    // third source coordinate, solved from the other two
    let src = m.perm.0;
    let inv = m.maps.map(|mm| mm.inverse());
    let image_third = |u1: C, u2: C| -> Result<C, VarietyError> {
        let mut z = [ZERO; 3];
        z[src[0]] = inv[0].apply(u1);
        z[src[1]] = inv[1].apply(u2);
        let mut others = [ZERO; 2];
        let mut n = 0;
        for (idx, v) in z.iter().enumerate() {
            if idx != src[2] {
                others[n] = *v;
                n += 1;
            }
        }
        let zk = solve_coordinate(alpha, src[2], others)?;
        Ok(m.maps[2].apply(zk))
    };

    let mut rows = DMatrix::<C>::zeros(TRANSPORT_FIT_POINTS, 6);
    for r in 0..TRANSPORT_FIT_POINTS {
        let t = r as f64;
        let u1 = C::from_polar(0.35 + 0.05 * t, 0.9 + 1.7 * t);
        let u2 = C::from_polar(0.55 - 0.04 * t, -0.4 + 2.3 * t);
        let u3 = image_third(u1, u2)?;
        let vals = [u1, u2, u1 * u2, -u3 * u1, -u3 * u2, -u3];
        for (c, v) in vals.into_iter().enumerate() {
            rows[(r, c)] = v;
        }
    }
    let svd = rows.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| VarietyError::DegenerateImage("svd failed".into()))?;
    let sv = &svd.singular_values;
    let (imin, smin) = sv
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, s)| (i, *s))
        .unwrap();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let second = sv
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != imin)
        .map(|(_, s)| *s)
        .fold(f64::INFINITY, f64::min);
    if second < 1e-8 * smax || smin > 1e-8 * smax {
        return Err(VarietyError::DegenerateImage(
            "image is not a graph z3 = phi(z1, z2) of the expected form".into(),
        ));
    }
    let null: Vec<C> = (0..6).map(|c| v_t[(imin, c)].conj()).collect();
    let f = null[5];
    let scale = null.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if f.norm() < 1e-10 * scale {
        return Err(VarietyError::DegenerateImage("F = 0".into()));
    }
    let [a_, b_, c_, d_, e_] = [null[0] / f, null[1] / f, null[2] / f, null[3] / f, null[4] / f];
    let small = 1e-9 * (1.0 + a_.norm() + b_.norm());
    if c_.norm() < small && d_.norm() < small && e_.norm() < small {
        let which = if b_.norm() < small { "z3 = A z1" } else { "z3 = B z2" };
        return Err(VarietyError::DegenerateImage(which.into()));
    }
    if (c_.norm() - 1.0).abs() > 1e-8
        || (a_ - c_ * e_.conj()).norm() > 1e-8 * (1.0 + a_.norm())
        || (b_ - c_ * d_.conj()).norm() > 1e-8 * (1.0 + b_.norm())
    {
        return Err(VarietyError::DegenerateImage(
            "fitted image is not inner of the form C(Ē z1 + D̄ z2 + z1 z2)/(D z1 + E z2 + 1)".into(),
        ));
    }
    let mut c = c_.sqrt();
    if c.re < 0.0 || (c.re == 0.0 && c.im < 0.0) {
        c = -c;
    }
    let beta = Alpha::new(c * e_.conj(), c * d_.conj(), -c.conj())?;

    let worst = sample_variety(alpha, TRANSPORT_CHECK_POINTS, 0.6)
        .iter()
        .map(|z| residual_raw(&beta, &m.apply(z)).norm())
        .fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(VarietyError::TransportMismatch(worst));
    }
    Ok(beta)
}

/// Transported triple with the sampled membership check behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportReport {
    pub beta: Alpha,
    pub samples: usize,
    /// Largest `|membership_residual(β, m(z))| / max|β|` over the samples.
    pub max_residual: f64,
    pub class_alpha: TriClass,
    pub class_beta: TriClass,
}

pub fn transport_report(
    alpha: &Alpha,
    m: &TridiscAutomorphism,
    samples: usize,
) -> Result<TransportReport, VarietyError> {
    let beta = transport(alpha, m)?;
    let pts = sample_variety(alpha, samples, 0.95);
    let scale = beta.max_abs();
    let max_residual = pts
        .iter()
        .map(|z| membership_residual(&beta, &TriPoint { z: m.apply(z) }).norm() / scale)
        .fold(0.0, f64::max);
    Ok(TransportReport {
        samples: pts.len(),
        max_residual,
        class_alpha: classify(alpha),
        class_beta: classify(&beta),
        beta,
    })
}

/// Deterministic points of `M_α` obtained by solving for each coordinate
/// in turn on a spiral of the other two; points outside the tridisc are
/// skipped.
pub fn sample_variety(alpha: &Alpha, count: usize, radius: f64) -> Vec<[C; 3]> {
    let mut out = Vec::with_capacity(count);
    let mut i = 0usize;
    while out.len() < count && i < 40 * count {
        let t = i as f64;
        let k = i % 3;
        let r1 = radius * (0.15 + 0.85 * ((t * 0.618_033_988_7).fract()));
        let r2 = radius * (0.15 + 0.85 * ((t * 0.414_213_562_4).fract()));
        let o = [C::from_polar(r1, 2.1 * t + 0.3), C::from_polar(r2, -1.3 * t + 1.1)];
        if let Ok(zk) = solve_coordinate(alpha, k, o) {
            if zk.norm() < 1.0 {
                let mut z = [ZERO; 3];
                let mut n = 0;
                for (idx, slot) in z.iter_mut().enumerate() {
                    if idx == k {
                        *slot = zk;
                    } else {
                        *slot = o[n];
                        n += 1;
                    }
                }
                out.push(z);
            }
        }
        i += 1;
    }
    out
}

/// `|z₁| < 1`, `|z₂| < 1` and `|F_{a,b}(z)| < 1`.
pub fn dab_contains(d: &DomainDab, z: [C; 2]) -> bool {
    if z.iter().any(|c| !(c.re.is_finite() && c.im.is_finite()) || c.norm_sqr() >= 1.0) {
        return false;
    }
    matches!(d.f(z), Ok(v) if v.norm_sqr() < 1.0)
}

/// `(z₁, z₂, F_{a,b}(z))`, a point of the normalized variety.
pub fn lift_to_m(d: &DomainDab, z: [C; 2]) -> Result<TriPoint, VarietyError> {
    if !dab_contains(d, z) {
        return Err(VarietyError::NotInDomain);
    }
    Ok(TriPoint {
        z: [z[0], z[1], d.f(z)?],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn residual_examples() {
        let al = Alpha::real(1.0, 1.0, 1.0).unwrap();
        assert_eq!(membership_residual(&al, &TriPoint::origin()), ZERO);
        let z = TriPoint::new(c(0.5, 0.0), c(0.5, 0.0), ZERO).unwrap();
        assert!((membership_residual(&al, &z) - c(0.75, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn graph_value_examples() {
        let al = Alpha::real(0.8, 0.8, 1.0).unwrap();
        assert_eq!(graph_value(&al, ZERO, ZERO).unwrap(), ZERO);
        let v = graph_value(&al, c(0.5, 0.0), ZERO).unwrap();
        assert!((v - c(-2.0 / 3.0, 0.0)).norm() < 1e-15);
        let z = TriPoint { z: [c(0.5, 0.0), ZERO, v] };
        assert!(membership_residual(&al, &z).norm() < 1e-14);
        assert_eq!(
            graph_value(&Alpha::real(1.0, 1.0, 0.0).unwrap(), ZERO, ZERO),
            Err(VarietyError::Unsupported)
        );
        // b̄ z1 + ā z2 = 1
        assert!(matches!(
            graph_value(&Alpha::real(0.5, 0.5, 1.0).unwrap(), c(1.0, 0.0), c(1.0, 0.0)),
            Err(VarietyError::Pole(..))
        ));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&Alpha::real(3.0, 4.0, 5.0).unwrap()), TriClass::NonRetract);
        assert_eq!(
            classify(&Alpha::real(1.0, 1.0, 3.0).unwrap()),
            TriClass::RetractGraph { axis: 3 }
        );
        assert_eq!(
            classify(&Alpha::real(1.0, 0.0, 0.0).unwrap()),
            TriClass::RetractGraph { axis: 1 }
        );
        // tie
        assert_eq!(
            classify(&Alpha::real(1.0, 2.0, 3.0).unwrap()),
            TriClass::RetractGraph { axis: 3 }
        );
        assert_eq!(Alpha::real(0.0, 0.0, 0.0), Err(VarietyError::ZeroAlpha));
    }

    #[test]
    fn triclass_json() {
        let s = serde_json::to_string(&TriClass::NonRetract).unwrap();
        assert_eq!(s, r#"{"class":"NonRetract"}"#);
        let s = serde_json::to_string(&TriClass::RetractGraph { axis: 3 }).unwrap();
        assert_eq!(s, r#"{"class":"RetractGraph","axis":3}"#);
        let a: Alpha = serde_json::from_str(r#"{"alpha":[[3,0],[4,0],[5,0]]}"#).unwrap();
        assert_eq!(a, Alpha::real(3.0, 4.0, 5.0).unwrap());
    }

    #[test]
    fn normalize_examples() {
        let nf = normalize(&Alpha::real(0.8, 0.8, 1.0).unwrap()).unwrap();
        assert_eq!((nf.a, nf.b), (0.8, 0.8));
        assert!(nf.rotations.iter().all(|r| (r - ONE).norm() < 1e-15));

        let al = Alpha::new(c(0.0, 0.8), c(0.8, 0.0), ONE).unwrap();
        let nf = normalize(&al).unwrap();
        assert!((nf.a - 0.8).abs() < 1e-15 && (nf.b - 0.8).abs() < 1e-15);
        assert!(nf.rotations.iter().any(|r| (r - ONE).norm() > 0.5));
        let v = nf.variety();
        for z in sample_variety(&al, 100, 0.7) {
            let u = nf.rotate(&TriPoint { z });
            assert!(v.residual(&u).norm() < 1e-14);
        }
        assert_eq!(normalize(&Alpha::real(1.0, 1.0, 0.0).unwrap()), Err(VarietyError::Unsupported));
    }

    #[test]
    fn transport_identity_and_permutation() {
        let al = Alpha::real(3.0, 4.0, 5.0).unwrap();
        let beta = transport(&al, &TridiscAutomorphism::identity()).unwrap();
        assert_proportional(&beta, &al);

        let p = Permutation([1, 2, 0]);
        let beta = transport(&al, &TridiscAutomorphism::permutation(p)).unwrap();
        assert_proportional(&beta, &al.permuted(&p));
    }

    #[test]
    fn transport_rejects_wrong_base() {
        let al = Alpha::real(3.0, 4.0, 5.0).unwrap();
        let p = TriPoint::new(c(0.3, 0.0), c(0.3, 0.0), c(0.3, 0.0)).unwrap();
        let m = TridiscAutomorphism::to_origin(&p).unwrap();
        assert!(matches!(transport(&al, &m), Err(VarietyError::InvalidAutomorphism(_))));
    }

    #[test]
    fn transport_flags_degenerate_image() {
        // (z1 + z3)(1 - z2) = 0 inside the tridisc, i.e. z3 = -z1
        let al = Alpha::real(1.0, 0.0, 1.0).unwrap();
        let r = transport(&al, &TridiscAutomorphism::identity());
        assert!(matches!(r, Err(VarietyError::DegenerateImage(_))), "{r:?}");
    }

    #[test]
    fn transport_moves_point_to_origin() {
        let al = Alpha::new(c(0.7, 0.2), c(-0.5, 0.6), c(0.9, -0.1)).unwrap();
        let pts = sample_variety(&al, 200, 0.8);
        let p = TriPoint { z: pts[17] };
        let m = TridiscAutomorphism::to_origin(&p).unwrap();
        let beta = transport(&al, &m).unwrap();
        let worst = pts
            .iter()
            .map(|z| residual_raw(&beta, &m.apply(z)).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
        assert_eq!(classify(&beta), classify(&al));
    }

    fn assert_proportional(x: &Alpha, y: &Alpha) {
        let k = (0..3).max_by(|&i, &j| y.alpha[i].norm().total_cmp(&y.alpha[j].norm())).unwrap();
        let s = x.alpha[k] / y.alpha[k];
        for i in 0..3 {
            assert!((x.alpha[i] - s * y.alpha[i]).norm() < 1e-10, "{x:?} vs {y:?}");
        }
    }

    #[test]
    fn dab_examples() {
        let d = DomainDab::new(0.8, 0.8).unwrap();
        assert!(dab_contains(&d, [ZERO, ZERO]));
        assert!(dab_contains(&d, [c(0.5, 0.0), ZERO]));
        assert!(!dab_contains(&d, [c(1.0, 0.0), ZERO]));
        assert!(!dab_contains(&d, [c(0.0, 1.2), ZERO]));
        assert_eq!(lift_to_m(&d, [ZERO, ZERO]).unwrap(), TriPoint::origin());
        let l = lift_to_m(&d, [c(0.5, 0.0), ZERO]).unwrap();
        assert!((l.z[2] - c(-2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!(d.variety().residual(&l).norm() < 1e-14);
        assert_eq!(lift_to_m(&d, [c(0.9, 0.0), c(0.9, 0.0)]), Err(VarietyError::NotInDomain));
        assert!(DomainDab::new(-1.0, 0.5).is_err());
    }

    #[test]
    fn dominant_permutation_preserves_membership() {
        let v = NormalVariety::new(0.8, 0.7).unwrap();
        let z = lift_to_m(&DomainDab::new(0.8, 0.7).unwrap(), [c(0.5, 0.1), c(-0.2, 0.3)]).unwrap();
        for k in 0..3 {
            let (w, p) = v.with_dominant_third(k);
            let zz = TriPoint { z: p.apply(z.z) };
            assert!(w.residual(&zz).norm() < 1e-14);
            assert_eq!(p.inverse().apply(zz.z), z.z);
        }
    }

    #[test]
    fn automorphism_inverse() {
        let m = TridiscAutomorphism {
            perm: Permutation([2, 0, 1]),
            maps: [
                MobiusMap::new(c(0.1, 0.2), C::from_polar(1.0, 0.3)).unwrap(),
                MobiusMap::new(c(-0.4, 0.2), C::from_polar(1.0, 1.3)).unwrap(),
                MobiusMap::new(c(0.0, 0.5), C::from_polar(1.0, -2.0)).unwrap(),
            ],
        };
        let z = [c(0.1, 0.4), c(-0.3, 0.3), c(0.6, -0.1)];
        let back = m.inverse().apply(&m.apply(&z));
        for k in 0..3 {
            assert!((back[k] - z[k]).norm() < 1e-14);
        }
    }
}
