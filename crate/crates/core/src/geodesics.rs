//! Explicit complex geodesics.
//!
//! * `Φ_γ(λ) = (λ m_{γ₁}(ωλ), λ m_{γ₂}(ηλ), λ)` through the origin of the
//!   normalized variety, one for each lens direction `γ` and each of the two
//!   unimodular solutions `(ω, η)`;
//! * the Blaschke family `φ_{ω,γ}` whose middle component is solved from the
//!   variety equation and certified by the Schur test;
//! * geodesics of the bidisc through balanced pairs.
//!
//! Discs are stored as coefficient lists, never closures, so they can be
//! serialized and compared.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::discgeom::{
    check_disc, rho, schur_roots_outside, GeomError, MobiusMap, Quadratic, C, ONE, ZERO,
};
use crate::tol;
use crate::varieties::{NormalVariety, TriPoint, VarietyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesicError {
    #[error("lens is empty: {{a, b, 1}} violates the strict triangle inequality")]
    EmptyLens,
    #[error("lens degenerates to the single corner {0}")]
    Tangency(C),
    #[error("lens point is outside the lens")]
    OutsideLens,
    #[error("no unimodular (omega, eta): |r1 - r2| = {lower:e}, |q| = {q:e}, r1 + r2 = {upper:e}")]
    Infeasible { lower: f64, q: f64, upper: f64 },
    #[error("(omega, eta) solutions coincide: |q| is within relative tolerance of a bound")]
    Tangent,
    #[error("branch collision at path step {0}")]
    BranchCollision(usize),
    #[error("direction is undefined for coincident points")]
    DegenerateDirection,
    #[error("denominator of component {0} vanishes in the closed disc")]
    PoleInDisc(usize),
    #[error("disc leaves the variety (residual {0:e})")]
    OffVariety(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Variety(#[from] VarietyError),
}

/// `𝒳 = {γ : aγ₁ + bγ₂ + 1 = 0, |γ₁| < 1, |γ₂| < 1}`, parametrized by `γ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lens {
    pub a: f64,
    pub b: f64,
}

impl Lens {
    pub fn new(a: f64, b: f64) -> Result<Self, GeodesicError> {
        let v = NormalVariety::new(a, b)?;
        Ok(Self { a: v.a, b: v.b })
    }

    pub fn variety(&self) -> NormalVariety {
        NormalVariety {
            a: self.a,
            b: self.b,
        }
    }

    pub fn is_nonempty(&self) -> bool {
        self.variety().is_interesting()
    }

    /// `γ₂ = -(aγ₁ + 1) / b`.
    pub fn gamma2(&self, gamma1: C) -> C {
        -(self.a * gamma1 + 1.0) / self.b
    }

    pub fn point(&self, gamma1: C) -> LensPoint {
        LensPoint { gamma1 }
    }

    /// Center of the lens between its two corners (inside whenever the lens
    /// is nonempty).
    pub fn center(&self) -> C {
        // midpoint of the chord on the real axis: the real segment of the lens
        let lo = (-1.0_f64).max((-1.0 - self.b) / self.a);
        let hi = 1.0_f64.min((-1.0 + self.b) / self.a);
        C::new(0.5 * (lo + hi), 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensPoint {
    pub gamma1: C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn other(self) -> Self {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

/// A unimodular solution of `aω(1-|γ₁|²) + bη(1-|γ₂|²) + aγ₂ + bγ₁ + γ₁γ₂ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaEta {
    pub omega: C,
    pub eta: C,
    pub branch: Branch,
}

impl OmegaEta {
    /// Arc distance on `𝕋²` (max of the two angular gaps).
    pub fn torus_distance(&self, other: &OmegaEta) -> f64 {
        (self.omega * other.omega.conj())
            .arg()
            .abs()
            .max((self.eta * other.eta.conj()).arg().abs())
    }
}

/// `λ^k · num(λ) / den(λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalMap {
    pub num: Quadratic,
    pub den: Quadratic,
    #[serde(default, skip_serializing_if = "is_zero_u8")]
    pub lambda_power: u8,
}

fn is_zero_u8(k: &u8) -> bool {
    *k == 0
}

impl RationalMap {
    pub fn new(num: Quadratic, den: Quadratic) -> Self {
        Self {
            num,
            den,
            lambda_power: 0,
        }
    }

    pub fn identity() -> Self {
        Self::new(Quadratic::new(ZERO, ONE, ZERO), Quadratic::constant(ONE))
    }

    pub fn zero() -> Self {
        Self::new(Quadratic::constant(ZERO), Quadratic::constant(ONE))
    }

    pub fn from_mobius(m: &MobiusMap) -> Self {
        let (num, den) = m.as_rational();
        Self::new(num, den)
    }

    pub fn eval(&self, lambda: C) -> C {
        lambda.powu(self.lambda_power as u32) * self.num.eval(lambda) / self.den.eval(lambda)
    }

    pub fn derivative(&self, lambda: C) -> C {
        let (n, d) = (self.num.eval(lambda), self.den.eval(lambda));
        let q = (self.num.derivative(lambda) * d - n * self.den.derivative(lambda)) / (d * d);
        let k = self.lambda_power as i32;
        let head = if k == 0 {
            ZERO
        } else {
            k as f64 * lambda.powi(k - 1) * n / d
        };
        head + lambda.powi(k) * q
    }

    /// The map as a plain quadratic-over-quadratic, when the λ-power fits.
    pub fn folded(&self) -> Option<(Quadratic, Quadratic)> {
        let mut c = [self.num.c0, self.num.b, self.num.a, ZERO, ZERO];
        c.rotate_right(self.lambda_power as usize);
        if c[3] != ZERO || c[4] != ZERO {
            return None;
        }
        Some((Quadratic::new(c[2], c[1], c[0]), self.den))
    }

    /// `m ∘ self` for a disc automorphism `m`, if the degree stays ≤ 2.
    pub fn post_compose(&self, m: &MobiusMap) -> Option<Self> {
        let (n, d) = self.folded()?;
        let (r, nu) = (m.rotation_factor(), m.nu());
        // r (ν d - n) / (d - ν̄ n)
        let num = Quadratic::new(
            r * (nu * d.a - n.a),
            r * (nu * d.b - n.b),
            r * (nu * d.c0 - n.c0),
        );
        let den = Quadratic::new(
            d.a - nu.conj() * n.a,
            d.b - nu.conj() * n.b,
            d.c0 - nu.conj() * n.c0,
        );
        Some(Self::new(num, den))
    }

    pub fn scaled(&self, k: C) -> Self {
        Self {
            num: self.num.scale(k),
            ..*self
        }
    }

    /// Divides numerator and denominator by the leading denominator
    /// coefficient so that equal maps have equal coefficients.
    pub fn normalized(&self) -> Self {
        let lead = [self.den.a, self.den.b, self.den.c0]
            .into_iter()
            .find(|c| *c != ZERO)
            .unwrap_or(ONE);
        Self {
            num: self.num.scale(lead.inv()),
            den: self.den.scale(lead.inv()),
            lambda_power: self.lambda_power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscTag {
    PhiGamma,
    BlaschkeFamily,
    Balanced,
    Flat,
    /// A disc through the origin carried to another base point.
    Relocated,
}

/// A holomorphic map `𝔻 → 𝔻ⁿ` with rational components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticDisc {
    pub components: Vec<RationalMap>,
    pub tag: DiscTag,
    #[serde(default)]
    pub params: serde_json::Value,
}

const CONSTRUCTION_SAMPLES: usize = 32;

impl AnalyticDisc {
    /// Checks that every denominator is zero-free on the closed disc.
    pub fn new(
        components: Vec<RationalMap>,
        tag: DiscTag,
        params: serde_json::Value,
    ) -> Result<Self, GeodesicError> {
        for (k, c) in components.iter().enumerate() {
            if !schur_roots_outside(&c.den)? {
                return Err(GeodesicError::PoleInDisc(k));
            }
        }
        Ok(Self {
            components,
            tag,
            params,
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, lambda: C) -> Vec<C> {
        self.components.iter().map(|c| c.eval(lambda)).collect()
    }

    pub fn eval3(&self, lambda: C) -> [C; 3] {
        [
            self.components[0].eval(lambda),
            self.components[1].eval(lambda),
            self.components[2].eval(lambda),
        ]
    }

    pub fn derivative(&self, lambda: C) -> Vec<C> {
        self.components.iter().map(|c| c.derivative(lambda)).collect()
    }

    /// Deterministic parameters used for construction-time checks.
    pub fn sample_params(count: usize) -> impl Iterator<Item = C> {
        (0..count).map(move |k| {
            let r = 0.95 * ((k % 4) as f64 + 1.0) / 4.0;
            C::from_polar(r, TAU * k as f64 / count as f64 + 0.1)
        })
    }

    /// Largest membership residual over `count` sampled parameters, divided
    /// by `max(a, b, 1)` so that it does not depend on how the defining
    /// equation is scaled.
    pub fn variety_residual(&self, v: &NormalVariety, count: usize) -> f64 {
        let scale = v.a.max(v.b).max(1.0);
        Self::sample_params(count)
            .map(|l| v.residual(&TriPoint { z: self.eval3(l) }).norm())
            .fold(0.0, f64::max)
            / scale
    }

    fn check_on(self, v: &NormalVariety) -> Result<Self, GeodesicError> {
        let r = self.variety_residual(v, CONSTRUCTION_SAMPLES);
        if r > tol::RESIDUAL {
            return Err(GeodesicError::OffVariety(r));
        }
        Ok(self)
    }

    /// Coefficientwise comparison after normalization.
    pub fn same_as(&self, other: &AnalyticDisc, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.components.iter().zip(&other.components).all(|(x, y)| {
                let (x, y) = (x.normalized(), y.normalized());
                x.lambda_power == y.lambda_power
                    && x.num
                        .coeffs()
                        .iter()
                        .chain(x.den.coeffs().iter())
                        .zip(y.num.coeffs().iter().chain(y.den.coeffs().iter()))
                        .all(|(p, q)| (p - q).norm() <= tol)
            })
    }
}

/// `|γ₁| < 1` and `|aγ₁ + 1| < b`, both with [`tol::INEQUALITY`] slack.
pub fn lens_contains(l: &Lens, p: &LensPoint) -> bool {
    lens_contains_with(l, p, tol::INEQUALITY)
}

pub fn lens_contains_with(l: &Lens, p: &LensPoint, slack: f64) -> bool {
    let g = p.gamma1;
    g.re.is_finite()
        && g.im.is_finite()
        && g.norm() < 1.0 - slack
        && l.gamma2(g).norm() < 1.0 - slack
}

/// Distance to the lens boundary in the sense of `min(1-|γ₁|, 1-|γ₂|)`.
pub fn lens_margin(l: &Lens, gamma1: C) -> f64 {
    (1.0 - gamma1.norm()).min(1.0 - l.gamma2(gamma1).norm())
}

/// Real extent of the lens and its half-height above a real abscissa.
fn lens_profile(l: &Lens) -> (f64, f64, impl Fn(f64) -> f64) {
    let (a, b) = (l.a, l.b);
    let lo = (-1.0_f64).max((-1.0 - b) / a);
    let hi = 1.0_f64.min((b - 1.0) / a);
    let height = move |x: f64| {
        let r = b / a;
        let c = x + 1.0 / a;
        (1.0 - x * x).max(0.0).sqrt().min((r * r - c * c).max(0.0).sqrt())
    };
    (lo, hi, height)
}

/// `rows × cols` grid of interior lens points: abscissae at cell midpoints of
/// the real extent, heights at cell midpoints of the vertical chord.
pub fn lens_grid(l: &Lens, rows: usize, cols: usize) -> Vec<LensPoint> {
    let (lo, hi, height) = lens_profile(l);
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let x = lo + (hi - lo) * (i as f64 + 0.5) / rows as f64;
        let h = height(x);
        for j in 0..cols {
            let t = -1.0 + 2.0 * (j as f64 + 0.5) / cols as f64;
            out.push(LensPoint {
                gamma1: C::new(x, t * h),
            });
        }
    }
    out
}

/// The two points of the closed lens lying in `𝕋²`: intersections of
/// `|γ₁| = 1` with `|γ₁ + 1/a| = b/a`. Upper half-plane corner first.
pub fn lens_corners(l: &Lens) -> Result<(C, C), GeodesicError> {
    let x = (l.b * l.b - 1.0 - l.a * l.a) / (2.0 * l.a);
    if x.abs() > 1.0 + tol::INEQUALITY {
        return Err(GeodesicError::EmptyLens);
    }
    let h2 = (1.0 - x) * (1.0 + x);
    if h2 <= tol::INEQUALITY {
        return Err(GeodesicError::Tangency(C::new(x.signum(), 0.0)));
    }
    let y = h2.sqrt();
    Ok((C::new(x, y), C::new(x, -y)))
}

/// Radii and right-hand side of the (ω, η) equation: `r₁ω + r₂η = -q`.
pub fn omega_eta_data(l: &Lens, p: &LensPoint) -> (f64, f64, C) {
    let g1 = p.gamma1;
    let g2 = l.gamma2(g1);
    let r1 = l.a * (1.0 - g1.norm_sqr());
    let r2 = l.b * (1.0 - g2.norm_sqr());
    let q = l.a * g2 + l.b * g1 + g1 * g2;
    (r1, r2, q)
}

/// Both unimodular `(ω, η)` pairs, `(Plus, Minus)`.
///
/// `u = r₁ω` and `v = r₂η` are the two links of a planar chain from `0` to
/// `-q`; `u` is found by the law of cosines with the height computed from
/// Heron's product so it stays accurate near the tangent configurations.
/// `Plus` is the solution with `u` counter-clockwise from `-q`.
pub fn solve_omega_eta(l: &Lens, p: &LensPoint) -> Result<(OmegaEta, OmegaEta), GeodesicError> {
    solve_omega_eta_with(l, p, tol::INEQUALITY)
}

pub fn solve_omega_eta_with(
    l: &Lens,
    p: &LensPoint,
    slack: f64,
) -> Result<(OmegaEta, OmegaEta), GeodesicError> {
    if !lens_contains_with(l, p, 0.0) {
        return Err(GeodesicError::OutsideLens);
    }
    let (r1, r2, q) = omega_eta_data(l, p);
    let target = -q;
    let d = target.norm();
    let (lower, upper) = ((r1 - r2).abs(), r1 + r2);
    let slack = slack * upper;
    if d < lower - slack || d > upper + slack {
        return Err(GeodesicError::Infeasible { lower, q: d, upper });
    }
    if d <= lower + slack || d >= upper - slack {
        return Err(GeodesicError::Tangent);
    }
    let along = (r1 * r1 + d * d - r2 * r2) / (2.0 * d);
    let heron = (r1 + r2 + d) * (-r1 + r2 + d) * (r1 - r2 + d) * (r1 + r2 - d);
    let height = heron.max(0.0).sqrt() / (2.0 * d);
    let dir = target / d;
    let make = |sign: f64, branch| {
        let u = C::new(along, sign * height) * dir;
        let v = target - u;
        OmegaEta {
            omega: u / u.norm(),
            eta: v / v.norm(),
            branch,
        }
    };
    Ok((make(1.0, Branch::Plus), make(-1.0, Branch::Minus)))
}

pub fn select_branch(pair: (OmegaEta, OmegaEta), branch: Branch) -> OmegaEta {
    match branch {
        Branch::Plus => pair.0,
        Branch::Minus => pair.1,
    }
}

/// `Φ_γ(λ) = (λ m_{γ₁}(ωλ), λ m_{γ₂}(ηλ), λ)`.
pub fn phi_gamma(l: &Lens, p: &LensPoint, branch: Branch) -> Result<AnalyticDisc, GeodesicError> {
    let oe = select_branch(solve_omega_eta(l, p)?, branch);
    phi_gamma_from(l, p, &oe)
}

/// `Φ_γ` for an already solved `(ω, η)`.
pub fn phi_gamma_from(
    l: &Lens,
    p: &LensPoint,
    oe: &OmegaEta,
) -> Result<AnalyticDisc, GeodesicError> {
    let g1 = p.gamma1;
    let g2 = l.gamma2(g1);
    let comp = |g: C, w: C| {
        RationalMap::new(
            Quadratic::new(-w, g, ZERO),
            Quadratic::new(ZERO, -g.conj() * w, ONE),
        )
    };
    let params = serde_json::json!({
        "a": l.a,
        "b": l.b,
        "gamma1": [g1.re, g1.im],
        "gamma2": [g2.re, g2.im],
        "omega": [oe.omega.re, oe.omega.im],
        "eta": [oe.eta.re, oe.eta.im],
        "branch": oe.branch,
    });
    AnalyticDisc::new(
        vec![comp(g1, oe.omega), comp(g2, oe.eta), RationalMap::identity()],
        DiscTag::PhiGamma,
        params,
    )?
    .check_on(&l.variety())
}

/// Follows one continuous branch of `(ω, η)` along a path in the lens by
/// picking at each step the solution nearest to the previous one.
///
/// Fails with `BranchCollision` when the two solutions come within
/// `collision` of each other (on `𝕋²`) or when the nearest solution is not
/// clearly separated from the other one.
pub fn branch_track(l: &Lens, path: &[LensPoint]) -> Result<Vec<OmegaEta>, GeodesicError> {
    branch_track_with(l, path, Branch::Plus, 1e-6)
}

pub fn branch_track_with(
    l: &Lens,
    path: &[LensPoint],
    start: Branch,
    collision: f64,
) -> Result<Vec<OmegaEta>, GeodesicError> {
    let mut out: Vec<OmegaEta> = Vec::with_capacity(path.len());
    for (step, p) in path.iter().enumerate() {
        let pair = match solve_omega_eta(l, p) {
            Ok(pair) => pair,
            Err(GeodesicError::Tangent) => return Err(GeodesicError::BranchCollision(step)),
            Err(e) => return Err(e),
        };
        if pair.0.torus_distance(&pair.1) < collision {
            return Err(GeodesicError::BranchCollision(step));
        }
        let next = match out.last() {
            None => select_branch(pair, start),
            Some(prev) => {
                let (d0, d1) = (prev.torus_distance(&pair.0), prev.torus_distance(&pair.1));
                let (near, far, pick) = if d0 <= d1 {
                    (d0, d1, pair.0)
                } else {
                    (d1, d0, pair.1)
                };
                if near > 0.5 * far {
                    return Err(GeodesicError::BranchCollision(step));
                }
                pick
            }
        };
        out.push(next);
    }
    Ok(out)
}

/// `P̄(γ) = aγ̄² + (a² - b² + 1)γ̄ + a`.
fn arc_vector(l: &Lens, gamma: C) -> C {
    let gc = gamma.conj();
    l.a * gc * gc + (l.a * l.a - l.b * l.b + 1.0) * gc + l.a
}

/// `b² - |aγ+1|² - |-ab(1-|γ|²) + ω(aγ̄² + (a²-b²+1)γ̄ + a)|`; the Blaschke
/// family member `φ_{ω,γ}` is admissible when this is positive.
pub fn admissibility_margin(l: &Lens, gamma: C, omega: C) -> f64 {
    let lhs = l.b * l.b - (l.a * gamma + 1.0).norm_sqr();
    let w0 = -l.a * l.b * (1.0 - gamma.norm_sqr());
    lhs - (w0 + omega * arc_vector(l, gamma)).norm()
}

/// The same condition written in lens coordinates `γ₁ = γ`,
/// `γ₂ = -(aγ₁+1)/b`: `b(1-|γ₂|²) - |a(1-|γ₁|²) + ω̄(aγ₂ + bγ₁ + γ₁γ₂)|`.
/// Equals [`admissibility_margin`] divided by `b`.
pub fn admissibility_margin_lens(l: &Lens, gamma: C, omega: C) -> f64 {
    let (r1, r2, q) = omega_eta_data(l, &LensPoint { gamma1: gamma });
    r2 - (r1 + omega.conj() * q).norm()
}

/// Outcome of [`blaschke_family`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BlaschkeOutcome {
    Admissible(AnalyticDisc),
    Inadmissible,
}

/// `φ_{ω,γ}(λ) = (λψ(λ), G(λ), λ)` with `ψ(λ) = (γ - ωλ)/(1 - γ̄ωλ)` and
/// `G` the middle coordinate solved from the variety equation,
/// `G = (aλψ + λ - bλ²ψ) / (aλ + λψ - b)`. After clearing `1 - γ̄ωλ`,
/// `G = -ωλ · den*(λ) / den(λ)` with
/// `den = -ω(aγ̄+1)λ² + (a + γ + bγ̄ω)λ - b`; the Schur test on `den` is the
/// admissibility inequality.
pub fn blaschke_family(l: &Lens, gamma: C, omega: C) -> Result<BlaschkeOutcome, GeodesicError> {
    if check_disc(gamma).is_err()
        || !omega.re.is_finite()
        || (omega.norm() - 1.0).abs() > tol::UNIMODULAR
        || admissibility_margin(l, gamma, omega) <= tol::INEQUALITY
    {
        return Ok(BlaschkeOutcome::Inadmissible);
    }
    let (a, b) = (l.a, l.b);
    let gc = gamma.conj();
    let den = Quadratic::new(-omega * (a * gc + 1.0), a + gamma + b * gc * omega, C::new(-b, 0.0));
    if !schur_roots_outside(&den)? {
        return Ok(BlaschkeOutcome::Inadmissible);
    }
    let num = Quadratic::new(b * omega, -(a * omega + gc * omega + b * gamma), a * gamma + 1.0);
    let first = RationalMap::new(
        Quadratic::new(-omega, gamma, ZERO),
        Quadratic::new(ZERO, -gc * omega, ONE),
    );
    let second = RationalMap {
        num,
        den,
        lambda_power: 1,
    };
    let params = serde_json::json!({
        "a": a,
        "b": b,
        "gamma": [gamma.re, gamma.im],
        "omega": [omega.re, omega.im],
    });
    let disc = AnalyticDisc::new(
        vec![first, second, RationalMap::identity()],
        DiscTag::BlaschkeFamily,
        params,
    )?
    .check_on(&l.variety())?;
    Ok(BlaschkeOutcome::Admissible(disc))
}

/// An open arc of angles `(start, start + width)`; `width = 2π` is the full
/// circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    pub start: f64,
    pub width: f64,
}

impl AngleInterval {
    pub fn end(&self) -> f64 {
        self.start + self.width
    }

    pub fn contains(&self, theta: f64) -> bool {
        if self.width >= TAU {
            return true;
        }
        let d = (theta - self.start).rem_euclid(TAU);
        d > 0.0 && d < self.width
    }

    pub fn midpoint(&self) -> f64 {
        (self.start + 0.5 * self.width).rem_euclid(TAU)
    }
}

/// The set of `θ` for which `ω = e^{iθ}` satisfies the admissibility
/// inequality (without tolerance), in closed form: writing
/// `|w₀ + ω v| < R`, it is `cos(θ + arg(v w̄₀)) < (R² - |v|² - |w₀|²)/(2|v||w₀|)`.
pub fn admissible_arc(l: &Lens, gamma: C) -> Vec<AngleInterval> {
    let r = l.b * l.b - (l.a * gamma + 1.0).norm_sqr();
    if r <= 0.0 {
        return vec![];
    }
    let w0 = C::new(-l.a * l.b * (1.0 - gamma.norm_sqr()), 0.0);
    let v = arc_vector(l, gamma);
    let (nv, nw) = (v.norm(), w0.norm());
    if nv * nw == 0.0 {
        return if nv * nv + nw * nw < r * r {
            vec![AngleInterval {
                start: 0.0,
                width: TAU,
            }]
        } else {
            vec![]
        };
    }
    let kappa = (r * r - nv * nv - nw * nw) / (2.0 * nv * nw);
    if kappa <= -1.0 {
        return vec![];
    }
    if kappa >= 1.0 {
        return vec![AngleInterval {
            start: 0.0,
            width: TAU,
        }];
    }
    let phi0 = (v * w0.conj()).arg();
    let half = PI - kappa.acos();
    let center = PI - phi0;
    vec![AngleInterval {
        start: (center - half).rem_euclid(TAU),
        width: 2.0 * half,
    }]
}

/// Outcome of [`balanced_pair`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BalancedOutcome {
    Balanced {
        geodesic: AnalyticDisc,
        lambda_z: C,
        lambda_w: C,
    },
    NotBalanced,
}

/// For `ρ(z₁, w₁) = ρ(z₂, w₂)` returns the bidisc geodesic
/// `λ ↦ (m_{z₁}(λ), m_{z₂}(ωλ))` with `ω` read from the relocated `w`.
pub fn balanced_pair(z: [C; 2], w: [C; 2]) -> Result<BalancedOutcome, GeodesicError> {
    let (d1, d2) = (rho(z[0], w[0])?, rho(z[1], w[1])?);
    if (d1 - d2).abs() > tol::INEQUALITY * (1.0 + d1.max(d2)) {
        return Ok(BalancedOutcome::NotBalanced);
    }
    let m1 = MobiusMap::involution(z[0])?;
    let m2 = MobiusMap::involution(z[1])?;
    let (w1, w2) = (m1.apply(w[0]), m2.apply(w[1]));
    if w1.norm() < tol::POLE_FLOOR || w2.norm() < tol::POLE_FLOOR {
        return Err(GeodesicError::DegenerateDirection);
    }
    let omega = w2 / w1;
    let omega = omega / omega.norm();
    let first = RationalMap::from_mobius(&m1);
    // m_{z₂}(ωλ) = (z₂ - ωλ)/(1 - z̄₂ωλ)
    let second = RationalMap::new(
        Quadratic::new(ZERO, -omega, z[1]),
        Quadratic::new(ZERO, -z[1].conj() * omega, ONE),
    );
    let params = serde_json::json!({ "omega": [omega.re, omega.im] });
    let geodesic = AnalyticDisc::new(vec![first, second], DiscTag::Balanced, params)?;
    Ok(BalancedOutcome::Balanced {
        geodesic,
        lambda_z: ZERO,
        lambda_w: w1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discgeom::{blaschke_degree, BlaschkeDegree};

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn lens08() -> Lens {
        Lens::new(0.8, 0.8).unwrap()
    }

    #[test]
    fn lens_membership_examples() {
        let l = lens08();
        assert!(lens_contains(&l, &l.point(c(-0.625, 0.0))));
        assert!(!lens_contains(&l, &l.point(ZERO)));
        let thin = Lens::new(0.3, 0.4).unwrap();
        assert!(!thin.is_nonempty());
        for k in 0..200 {
            let g = C::from_polar(0.999 * (k as f64 / 200.0), k as f64);
            assert!(!lens_contains(&thin, &thin.point(g)));
        }
    }

    #[test]
    fn lens_corner_examples() {
        let l = lens08();
        let (p, m) = lens_corners(&l).unwrap();
        let y = 0.609_375_f64.sqrt();
        assert!((p - c(-0.625, y)).norm() < 1e-15);
        assert!((m - c(-0.625, -y)).norm() < 1e-15);
        for g in [p, m] {
            assert!((g.norm() - 1.0).abs() < 1e-12);
            assert!(((0.8 * g + 1.0).norm() - 0.8).abs() < 1e-12);
        }
        assert_eq!(p, m.conj());
        assert!(matches!(lens_corners(&Lens::new(0.4, 0.6).unwrap()), Err(GeodesicError::Tangency(_))));
        assert_eq!(lens_corners(&Lens::new(0.2, 0.3).unwrap()), Err(GeodesicError::EmptyLens));
    }

    #[test]
    fn omega_eta_worked_example() {
        let l = lens08();
        let p = l.point(c(-0.625, 0.0));
        let (r1, r2, q) = omega_eta_data(&l, &p);
        assert!((r1 - 0.4875).abs() < 1e-15 && (r2 - 0.4875).abs() < 1e-15);
        assert!((q - c(-0.609_375, 0.0)).norm() < 1e-15);
        // strict inequality chain 0 < 0.609375 < 0.975
        assert!((r1 - r2).abs() < q.norm() && q.norm() < r1 + r2);
        let (plus, minus) = solve_omega_eta(&l, &p).unwrap();
        let y = 0.609_375_f64.sqrt();
        for s in [plus, minus] {
            assert!((s.omega + s.eta - c(1.25, 0.0)).norm() < 1e-14);
            assert!((s.eta - s.omega.conj()).norm() < 1e-14);
            assert!((s.omega.re - 0.625).abs() < 1e-14 && (s.omega.im.abs() - y).abs() < 1e-14);
            assert!(s.omega != s.eta);
        }
        assert!((plus.omega - minus.omega).norm() > 1.0);
        // swapping the branch swaps the pairs
        assert_eq!(plus.omega, minus.eta);
    }

    #[test]
    fn omega_eta_outside() {
        let l = lens08();
        assert_eq!(solve_omega_eta(&l, &l.point(ZERO)), Err(GeodesicError::OutsideLens));
    }

    #[test]
    fn phi_gamma_properties() {
        let l = lens08();
        let p = l.point(c(-0.625, 0.0));
        for br in [Branch::Plus, Branch::Minus] {
            let d = phi_gamma(&l, &p, br).unwrap();
            assert_eq!(d.eval3(ZERO), [ZERO; 3]);
            let dv = d.derivative(ZERO);
            assert!((dv[0] - c(-0.625, 0.0)).norm() < 1e-15);
            assert!((dv[1] - l.gamma2(p.gamma1)).norm() < 1e-15);
            assert_eq!(dv[2], ONE);
            assert!(d.variety_residual(&l.variety(), 64) < 1e-11);
            for comp in &d.components[..2] {
                assert_eq!(blaschke_degree(&comp.num, &comp.den).unwrap(), BlaschkeDegree::Degree(2));
            }
        }
    }

    #[test]
    fn branch_track_constant_and_collision() {
        let l = lens08();
        let p = l.point(c(-0.6, 0.1));
        let out = branch_track(&l, &[p; 5]).unwrap();
        assert!(out.windows(2).all(|w| w[0] == w[1]));

        let (corner, _) = lens_corners(&l).unwrap();
        let center = l.center();
        let path: Vec<_> = (0..2000)
            .map(|k| l.point(center + (corner - center) * (1.0 - 0.5f64.powi(k / 40))))
            .collect();
        let tracked = branch_track(&l, &path).unwrap();
        assert!(tracked.iter().all(|s| s.branch == Branch::Plus));
        let mut closing = path.clone();
        closing.push(l.point(corner));
        assert_eq!(branch_track(&l, &closing), Err(GeodesicError::OutsideLens));
        assert!(matches!(
            branch_track_with(&l, &path, Branch::Plus, 2.0),
            Err(GeodesicError::BranchCollision(0))
        ));
    }

    #[test]
    fn branch_track_closed_loop() {
        let l = Lens::new(0.8, 0.9).unwrap();
        let center = l.center();
        let path: Vec<_> = (0..=400)
            .map(|k| l.point(center + C::from_polar(0.08, TAU * k as f64 / 400.0)))
            .collect();
        for start in [Branch::Plus, Branch::Minus] {
            let out = branch_track_with(&l, &path, start, 1e-6).unwrap();
            assert!(out[0].torus_distance(out.last().unwrap()) < 1e-12);
        }
    }

    #[test]
    fn blaschke_family_admissible_member() {
        let l = Lens::new(0.8, 0.9).unwrap();
        let gamma = c(-0.55, 0.15);
        assert!(lens_contains(&l, &l.point(gamma)));
        let arcs = admissible_arc(&l, gamma);
        assert_eq!(arcs.len(), 1);
        let omega = C::from_polar(1.0, arcs[0].midpoint());
        let BlaschkeOutcome::Admissible(d) = blaschke_family(&l, gamma, omega).unwrap() else {
            panic!("midpoint of the arc must be admissible");
        };
        let second = d.components[1];
        assert_eq!(blaschke_degree(&second.num, &second.den).unwrap(), BlaschkeDegree::Degree(2));
        assert!(d.variety_residual(&l.variety(), 64) < 1e-11);
        // third coordinate is the parameter
        assert_eq!(d.components[2], RationalMap::identity());
        let outside = C::from_polar(1.0, arcs[0].midpoint() + PI);
        if !arcs[0].contains(arcs[0].midpoint() + PI) {
            assert_eq!(blaschke_family(&l, gamma, outside).unwrap(), BlaschkeOutcome::Inadmissible);
        }
    }

    #[test]
    fn balanced_examples() {
        let t = c(0.4, 0.0);
        let BalancedOutcome::Balanced { geodesic, lambda_w, .. } = balanced_pair([ZERO; 2], [t, t]).unwrap()
        else {
            panic!()
        };
        for k in 0..8 {
            let l = C::from_polar(0.5, k as f64);
            let v = geodesic.eval(l);
            assert!((v[0] - v[1]).norm() < 1e-15);
        }
        assert!((geodesic.eval(lambda_w)[0] - t).norm() < 1e-15);

        let BalancedOutcome::Balanced { geodesic, .. } =
            balanced_pair([ZERO; 2], [c(0.3, 0.0), c(0.0, 0.3)]).unwrap()
        else {
            panic!()
        };
        let v = geodesic.eval(c(0.2, 0.1));
        // λ ↦ (-λ, -iλ) in the m_0 convention, i.e. second = i·first
        assert!((v[1] - c(0.0, 1.0) * v[0]).norm() < 1e-15);

        assert_eq!(
            balanced_pair([ZERO; 2], [c(0.5, 0.0), c(0.2, 0.0)]).unwrap(),
            BalancedOutcome::NotBalanced
        );
        assert_eq!(
            balanced_pair([c(0.1, 0.0); 2], [c(0.1, 0.0); 2]),
            Err(GeodesicError::DegenerateDirection)
        );
    }

    #[test]
    fn rational_fold_and_compose() {
        let r = RationalMap {
            num: Quadratic::new(ZERO, c(2.0, 0.0), ONE),
            den: Quadratic::constant(c(3.0, 0.0)),
            lambda_power: 1,
        };
        let (n, d) = r.folded().unwrap();
        let l = c(0.3, -0.2);
        assert!((n.eval(l) / d.eval(l) - r.eval(l)).norm() < 1e-15);
        let m = MobiusMap::new(c(0.2, 0.1), C::from_polar(1.0, 0.4)).unwrap();
        let comp = r.post_compose(&m).unwrap();
        assert!((comp.eval(l) - m.apply(r.eval(l))).norm() < 1e-14);
        let cubic = RationalMap { lambda_power: 1, ..RationalMap::new(Quadratic::new(ONE, ZERO, ZERO), Quadratic::constant(ONE)) };
        assert!(cubic.folded().is_none());
    }

    #[test]
    fn disc_json_shape() {
        let l = lens08();
        let d = phi_gamma(&l, &l.point(c(-0.625, 0.0)), Branch::Plus).unwrap();
        let v = serde_json::to_value(&d).unwrap();
        assert_eq!(v["components"].as_array().unwrap().len(), 3);
        assert_eq!(v["components"][0]["num"].as_array().unwrap().len(), 3);
        assert_eq!(v["tag"], "PhiGamma");
        let back: AnalyticDisc = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
    }
}
