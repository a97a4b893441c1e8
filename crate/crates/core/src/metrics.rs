//! Invariant functions on `M_α`, `D_{a,b}`, the polydisc and finite
//! universal sets.
//!
//! The Carathéodory distance and the Lempert function agree on the varieties
//! (both equal the restriction of the polydisc distance); the extremal discs
//! are the `Φ_γ` of [`crate::geodesics`], found for a prescribed point by
//! inverting the slice map `ψ_x` numerically.

use nalgebra::{Matrix4x2, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ball::{self, BallExtremal};
use crate::discgeom::{gamma_disc, rho, GeomError, MobiusMap, Quadratic, C, ONE, ZERO};
use crate::geodesics::{
    lens_contains, lens_grid, lens_margin, omega_eta_data, phi_gamma, phi_gamma_from, select_branch,
    solve_omega_eta, AnalyticDisc, Branch, DiscTag, GeodesicError, Lens, LensPoint, OmegaEta,
};
use crate::sampling;
use crate::tol::{self, Tolerances};
use crate::varieties::{
    dab_contains, lift_to_m, membership_residual, normalize, transport, Alpha, DomainDab,
    NormalForm, NormalVariety, Permutation, TriPoint, TridiscAutomorphism, VarietyError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("point is not on the variety (residual {0:e})")]
    NotOnVariety(f64),
    #[error("point is not in the domain")]
    NotInDomain,
    #[error("slice inversion did not converge (best residual {best_residual:e})")]
    ConvergenceFailure { best_residual: f64 },
    #[error("dominant coordinate is tied; the slice target lies on the boundary of the bidisc")]
    BoundaryTarget,
    #[error("the two points coincide")]
    CoincidentPoints,
    #[error("slice value must satisfy 0 < |x| < 1")]
    InvalidSlice,
    #[error("vector is not tangent to the variety at the origin (defect {0:e})")]
    NotTangent(f64),
    #[error("member {member} has modulus {modulus} at a domain point")]
    EvaluationOutOfDisc { member: usize, modulus: f64 },
    #[error("member has a pole at the evaluation point")]
    Pole,
    #[error("universal set must be nonempty")]
    EmptyFamily,
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("parameters are outside the supported regime")]
    InvalidParameters,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Variety(#[from] VarietyError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
}

/// `max_j ρ(z_j, w_j)`.
pub fn c_polydisc(z: &[C], w: &[C]) -> Result<f64, MetricsError> {
    if z.len() != w.len() {
        return Err(MetricsError::DimensionMismatch);
    }
    z.iter()
        .zip(w)
        .try_fold(0.0_f64, |m, (a, b)| Ok(m.max(rho(*a, *b)?)))
}

/// `max{ρ(z₁,w₁), ρ(z₂,w₂), ρ(F(z),F(w))}`.
pub fn c_dab(d: &DomainDab, z: [C; 2], w: [C; 2]) -> Result<f64, MetricsError> {
    let lz = lift_to_m(d, z).map_err(|_| MetricsError::NotInDomain)?;
    let lw = lift_to_m(d, w).map_err(|_| MetricsError::NotInDomain)?;
    c_polydisc(&lz.z, &lw.z)
}

/// `κ_{D_{a,b}}(0; X) = max{|X₁|, |X₂|, |aX₁ + bX₂|}`.
pub fn kappa_dab_origin(d: &DomainDab, x: [C; 2]) -> f64 {
    x[0].norm()
        .max(x[1].norm())
        .max((d.a * x[0] + d.b * x[1]).norm())
}

pub fn indicatrix_membership(d: &DomainDab, x: [C; 2]) -> bool {
    kappa_dab_origin(d, x) < 1.0
}

fn check_on_variety(v: &NormalVariety, z: &TriPoint) -> Result<(), MetricsError> {
    let r = v.residual(z).norm();
    if r > tol::RESIDUAL * v.a.max(v.b).max(1.0) || !r.is_finite() {
        return Err(MetricsError::NotOnVariety(r));
    }
    Ok(())
}

/// `c_M(0, z) = l_M(0, z) = max_j ρ(0, z_j)`.
pub fn c_m_origin(v: &NormalVariety, z: &TriPoint) -> Result<f64, MetricsError> {
    check_on_variety(v, z)?;
    c_polydisc(&[ZERO; 3], &z.z)
}

/// A point `(λ₁x, λ₂x, x)` of the variety, in slice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceTarget {
    pub x: C,
    pub lambda1: C,
    pub lambda2: C,
}

impl SliceTarget {
    pub fn new(v: &NormalVariety, x: C, lambda1: C, lambda2: C) -> Result<Self, MetricsError> {
        if !(x.norm() > 0.0 && x.norm() < 1.0) {
            return Err(MetricsError::InvalidSlice);
        }
        if lambda1.norm() >= 1.0 || lambda2.norm() >= 1.0 {
            return Err(MetricsError::BoundaryTarget);
        }
        check_on_variety(v, &TriPoint { z: [lambda1 * x, lambda2 * x, x] })?;
        Ok(Self { x, lambda1, lambda2 })
    }
}

fn mobius_point(g: C, mu: C) -> C {
    (g - mu) / (ONE - g.conj() * mu)
}

/// `ψ_x(γ) = (m_{γ₁}(ωx), m_{γ₂}(ηx))`.
pub fn psi_x_forward(l: &Lens, p: &LensPoint, branch: Branch, x: C) -> Result<[C; 2], MetricsError> {
    if !(x.norm() > 0.0 && x.norm() < 1.0) {
        return Err(MetricsError::InvalidSlice);
    }
    let oe = select_branch(solve_omega_eta(l, p)?, branch);
    Ok([
        mobius_point(p.gamma1, oe.omega * x),
        mobius_point(l.gamma2(p.gamma1), oe.eta * x),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionOptions {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub max_iterations: usize,
    pub fd_step: f64,
    pub tolerance: f64,
    /// Extra starts spent looking for a preimage on the other branch.
    pub alternative_starts: usize,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            grid_rows: 4,
            grid_cols: 4,
            max_iterations: 80,
            fd_step: 1e-7,
            tolerance: tol::INVERSION,
            alternative_starts: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensSolution {
    pub gamma1: C,
    pub branch: Branch,
    pub omega: C,
    pub eta: C,
    pub residual: f64,
}

fn slice_residual(l: &Lens, g: C, branch: Branch, x: C, t: [C; 2]) -> Option<Vector4<f64>> {
    let p = LensPoint { gamma1: g };
    let v = psi_x_forward(l, &p, branch, x).ok()?;
    let (d0, d1) = (v[0] - t[0], v[1] - t[1]);
    Some(Vector4::new(d0.re, d0.im, d1.re, d1.im))
}

/// `(m_{γ₁}(λ₁) - ωx, m_{γ₂}(λ₂) - ηx)`: the same zeros as the forward
/// residual, without the blow-up of `m_γ'` at `ωx` when `|x| → 1`.
fn pulled_residual(l: &Lens, g: C, branch: Branch, x: C, t: [C; 2]) -> Option<Vector4<f64>> {
    let p = LensPoint { gamma1: g };
    if !lens_contains(l, &p) {
        return None;
    }
    let oe = select_branch(solve_omega_eta(l, &p).ok()?, branch);
    let d0 = mobius_point(g, t[0]) - oe.omega * x;
    let d1 = mobius_point(l.gamma2(g), t[1]) - oe.eta * x;
    Some(Vector4::new(d0.re, d0.im, d1.re, d1.im))
}

/// Damped Gauss–Newton in `(Re γ₁, Im γ₁)` with a central-difference
/// Jacobian. Returns the last iterate and its residual norm.
fn gauss_newton(
    l: &Lens,
    start: C,
    iterations: usize,
    fd_step: f64,
    f: impl Fn(C) -> Option<Vector4<f64>>,
) -> (C, f64) {
    let mut g = start;
    let Some(mut r) = f(g) else {
        return (g, f64::INFINITY);
    };
    let step_scale = (l.b / l.a).min(1.0);
    for _ in 0..iterations {
        if r.norm() < 1e-15 {
            break;
        }
        let h = fd_step.min(1e-3 * lens_margin(l, g) * step_scale);
        let cols = [C::new(h, 0.0), C::new(0.0, h)].map(|e| Some((f(g + e)? - f(g - e)?) / (2.0 * h)));
        let (Some(c0), Some(c1)) = (cols[0], cols[1]) else {
            break;
        };
        let jac = Matrix4x2::from_columns(&[c0, c1]);
        let Ok(delta) = jac.svd(true, true).solve(&(-r), 1e-300) else {
            break;
        };
        let dir = C::new(delta[0], delta[1]);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = g + dir * step;
            if let Some(rc) = f(cand) {
                if rc.norm() < r.norm() {
                    accepted = Some((cand, rc));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, rc)) => {
                g = cand;
                r = rc;
            }
            None => break,
        }
    }
    (g, r.norm())
}

/// Gauss–Newton on the pulled-back residual, polished on the forward one.
/// The returned residual is always the forward residual.
fn newton_slice(
    l: &Lens,
    start: C,
    branch: Branch,
    x: C,
    t: [C; 2],
    opts: &InversionOptions,
) -> (C, f64) {
    let (g, _) = gauss_newton(l, start, opts.max_iterations, opts.fd_step, |g| {
        pulled_residual(l, g, branch, x, t)
    });
    gauss_newton(l, g, 8, opts.fd_step, |g| slice_residual(l, g, branch, x, t))
}

fn one_minus_abs2(z: C) -> f64 {
    let r = z.norm();
    (1.0 - r) * (1.0 + r)
}

/// `{γ : 1 - |m_γ(t)|² = s}` as a Euclidean circle `(center, radius)`.
fn hyperbolic_circle(t: C, s: f64) -> (C, f64) {
    let r2 = 1.0 - s;
    let den = s + r2 * one_minus_abs2(t);
    let center = s * t / den;
    let rad2 = center.norm_sqr() - (s - one_minus_abs2(t)) / den;
    (center, rad2.max(0.0).sqrt())
}

fn circle_intersections(c1: C, r1: f64, c2: C, r2: f64) -> Vec<C> {
    let d = (c2 - c1).norm();
    if d == 0.0 {
        return vec![];
    }
    let along = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h2 = (r1 - along) * (r1 + along);
    if h2 < 0.0 {
        return vec![];
    }
    let e = (c2 - c1) / d;
    let h = h2.sqrt();
    vec![c1 + e * C::new(along, h), c1 + e * C::new(along, -h)]
}

/// `(ω, η) = (m_{γ₁}(λ₁), m_{γ₂}(λ₂)) / x`, normalized to `𝕋`.
fn pulled_omega_eta(l: &Lens, g: C, x: C, t: [C; 2]) -> (C, C) {
    let om = mobius_point(g, t[0]) / x;
    let et = mobius_point(l.gamma2(g), t[1]) / x;
    (om / om.norm(), et / et.norm())
}

/// Preimage candidate at `γ₁`. Two choices of `(ω, η)` are scored: the
/// pair read off the target, which reproduces it best when `|x| → 1`, and
/// the exact solution of the `(ω, η)` equation, which is better in thin
/// lenses. The score is the larger of the forward residual and the relative
/// equation residual.
fn certify_preimage(l: &Lens, g: C, x: C, t: [C; 2], tolerance: f64) -> Option<LensSolution> {
    let p = LensPoint { gamma1: g };
    if !lens_contains(l, &p) {
        return None;
    }
    let (r1, r2, q) = omega_eta_data(l, &p);
    let g2 = l.gamma2(g);
    let pulled = pulled_omega_eta(l, g, x, t);
    let heron = solve_omega_eta(l, &p).ok()?;
    let branch = if (heron.0.omega - pulled.0).norm() <= (heron.1.omega - pulled.0).norm() {
        Branch::Plus
    } else {
        Branch::Minus
    };
    let exact = select_branch(heron, branch);
    let score = |(omega, eta): (C, C)| {
        let forward = (mobius_point(g, omega * x) - t[0])
            .norm()
            .max((mobius_point(g2, eta * x) - t[1]).norm());
        let equation = (r1 * omega + r2 * eta + q).norm() / (r1 + r2);
        (forward, equation)
    };
    [(exact.omega, exact.eta), pulled]
        .into_iter()
        .map(|oe| (oe, score(oe)))
        .filter(|(_, (f, e))| *f < tolerance && *e <= tolerance)
        .min_by(|p, q| p.1 .0.max(p.1 .1).total_cmp(&q.1 .0.max(q.1 .1)))
        .map(|((omega, eta), (residual, _))| LensSolution {
            gamma1: g,
            branch,
            omega,
            eta,
            residual,
        })
}

/// Closed-form preimages: `ωx = m_{γ₁}(λ₁)` and `ηx = m_{γ₂}(λ₂)` force
/// `γ₁` onto two circles, one of them pulled back through `γ₂ = -(aγ₁+1)/b`.
fn invert_slice_closed(l: &Lens, x: C, t: [C; 2], tolerance: f64) -> Vec<LensSolution> {
    let s = one_minus_abs2(x);
    let (c1, r1) = hyperbolic_circle(t[0], s);
    let (c2, r2) = hyperbolic_circle(t[1], s);
    let (c2, r2) = (-(l.b * c2 + 1.0) / l.a, l.b / l.a * r2);
    let mut out: Vec<LensSolution> = circle_intersections(c1, r1, c2, r2)
        .into_iter()
        .filter_map(|g| certify_preimage(l, g, x, t, tolerance))
        .collect();
    out.sort_by_key(|s| s.branch != Branch::Plus);
    out
}

/// Solves `ψ_x(γ) = (λ₁, λ₂)`. Preimages come from the closed form when it
/// certifies; otherwise from multistart Gauss–Newton over both branches.
/// The first preimage is returned followed by any on the other branch.
pub fn invert_slice(
    l: &Lens,
    target: &SliceTarget,
    opts: &InversionOptions,
) -> Result<Vec<LensSolution>, MetricsError> {
    if !l.is_nonempty() {
        return Err(GeodesicError::EmptyLens.into());
    }
    let t = [target.lambda1, target.lambda2];
    let closed = invert_slice_closed(l, target.x, t, opts.tolerance);
    if !closed.is_empty() {
        return Ok(closed);
    }
    let mut starts = vec![];
    if lens_margin(l, target.lambda1) > 0.0 {
        starts.push(target.lambda1);
    }
    starts.extend(lens_grid(l, opts.grid_rows, opts.grid_cols).into_iter().map(|p| p.gamma1));
    let mut candidates: Vec<(f64, Branch, C)> = [Branch::Plus, Branch::Minus]
        .into_iter()
        .flat_map(|b| starts.iter().map(move |s| (b, *s)))
        .filter_map(|(b, s)| {
            pulled_residual(l, s, b, target.x, t).map(|r| (r.norm(), b, s))
        })
        .collect();
    candidates.sort_by(|p, q| p.0.total_cmp(&q.0));

    let mut best = f64::INFINITY;
    let mut found: Vec<LensSolution> = vec![];
    let mut extra_budget = opts.alternative_starts;
    for (_, branch, start) in candidates {
        if let Some(first) = found.first() {
            if branch == first.branch || found.len() > 1 || extra_budget == 0 {
                continue;
            }
            extra_budget -= 1;
        }
        let (g, res) = newton_slice(l, start, branch, target.x, t, opts);
        best = best.min(res);
        if res < opts.tolerance {
            let oe = select_branch(solve_omega_eta(l, &LensPoint { gamma1: g })?, branch);
            found.push(LensSolution {
                gamma1: g,
                branch,
                omega: oe.omega,
                eta: oe.eta,
                residual: res,
            });
        }
    }
    if found.is_empty() {
        return Err(MetricsError::ConvergenceFailure { best_residual: best });
    }
    Ok(found)
}

/// Complex geodesic through `0` and `z`, with its certified values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicCertificate {
    pub disc: AnalyticDisc,
    pub param_at_target: C,
    pub residual: f64,
    pub caratheodory_value: f64,
    pub lempert_value: f64,
    pub lens_point: LensSolution,
    pub permutation: Permutation,
    pub alternatives: Vec<LensSolution>,
}

fn permute_disc_back(disc: AnalyticDisc, perm: &Permutation) -> AnalyticDisc {
    let mut comps = disc.components.clone();
    for (k, &i) in perm.0.iter().enumerate() {
        comps[i] = disc.components[k];
    }
    AnalyticDisc {
        components: comps,
        ..disc
    }
}

fn max_gap(x: &[C], y: &[C]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

pub fn geodesic_through(v: &NormalVariety, z: &TriPoint) -> Result<GeodesicCertificate, MetricsError> {
    geodesic_through_with(v, z, &InversionOptions::default())
}

pub fn geodesic_through_with(
    v: &NormalVariety,
    z: &TriPoint,
    opts: &InversionOptions,
) -> Result<GeodesicCertificate, MetricsError> {
    check_on_variety(v, z)?;
    if z.z.iter().all(|c| *c == ZERO) {
        return Err(MetricsError::CoincidentPoints);
    }
    let (w, perm) = v.with_dominant_third(z.dominant());
    let zz = perm.apply(z.z);
    let x = zz[2];
    let t = [zz[0] / x, zz[1] / x];
    if t.iter().any(|c| c.norm() >= 1.0 - 1e-12) {
        return Err(MetricsError::BoundaryTarget);
    }
    let lens = Lens::new(w.a, w.b)?;
    let target = SliceTarget::new(&w, x, t[0], t[1])?;
    let mut sols = invert_slice(&lens, &target, opts)?;
    let build = |s: &LensSolution| {
        let oe = OmegaEta {
            omega: s.omega,
            eta: s.eta,
            branch: s.branch,
        };
        phi_gamma_from(&lens, &LensPoint { gamma1: s.gamma1 }, &oe)
    };
    // the first preimage whose disc passes the variety check
    let (k, disc) = match sols.iter().enumerate().find_map(|(k, s)| build(s).ok().map(|d| (k, d))) {
        Some(found) => found,
        None => return Err(build(&sols[0]).unwrap_err().into()),
    };
    let first = sols.remove(k);
    let mut disc = permute_disc_back(disc, &perm);
    if let serde_json::Value::Object(m) = &mut disc.params {
        m.insert("permutation".into(), serde_json::json!(perm.0));
    }
    let residual = max_gap(&disc.eval(x), &z.z).max(max_gap(&disc.eval(ZERO), &[ZERO; 3]));
    Ok(GeodesicCertificate {
        disc,
        param_at_target: x,
        residual,
        caratheodory_value: c_polydisc(&[ZERO; 3], &z.z)?,
        lempert_value: rho(ZERO, x)?,
        lens_point: first,
        permutation: perm,
        alternatives: sols,
    })
}

/// Geodesic through two arbitrary points of `M_α`, obtained by moving `z` to
/// the origin, transporting and normalizing the variety, and carrying the
/// disc back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetweenCertificate {
    pub disc: AnalyticDisc,
    pub param_at_z: C,
    pub param_at_w: C,
    pub residual: f64,
    pub caratheodory_value: f64,
    pub lempert_value: f64,
    pub transported: Alpha,
    pub normal_form: NormalForm,
}

pub fn geodesic_between(alpha: &Alpha, z: &TriPoint, w: &TriPoint) -> Result<BetweenCertificate, MetricsError> {
    alpha.validate()?;
    let scale = alpha.max_abs();
    for p in [z, w] {
        let r = membership_residual(alpha, p).norm() / scale;
        if r > tol::RESIDUAL {
            return Err(MetricsError::NotOnVariety(r));
        }
    }
    if max_gap(&z.z, &w.z) == 0.0 {
        return Err(MetricsError::CoincidentPoints);
    }
    let m = TridiscAutomorphism::to_origin(z)?;
    let beta = transport(alpha, &m)?;
    let nf = normalize(&beta)?;
    let target = nf.rotate(&TriPoint { z: m.apply(&w.z) });
    let v = nf.variety();
    // the transported point is on the normal variety up to round-off
    let target = TriPoint {
        z: [target.z[0], target.z[1], v.f(target.z[0], target.z[1]).unwrap_or(target.z[2])],
    };
    let cert = geodesic_through(&v, &target)?;
    let inv = m.inverse();
    let comps = (0..3)
        .map(|k| {
            let j = inv.perm.0[k];
            cert.disc.components[j]
                .scaled(nf.rotations[j].conj())
                .post_compose(&inv.maps[k])
                .ok_or(MetricsError::InvalidParameters)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let disc = AnalyticDisc::new(comps, DiscTag::Relocated, cert.disc.params.clone())?;
    let at = |l: C| disc.eval(l);
    let mut residual = max_gap(&at(ZERO), &z.z).max(max_gap(&at(cert.param_at_target), &w.z));
    for l in AnalyticDisc::sample_params(16) {
        let p = TriPoint { z: disc.eval3(l) };
        residual = residual.max(membership_residual(alpha, &p).norm() / scale);
    }
    Ok(BetweenCertificate {
        param_at_z: ZERO,
        param_at_w: cert.param_at_target,
        residual,
        caratheodory_value: c_polydisc(&z.z, &w.z)?,
        lempert_value: cert.lempert_value,
        disc,
        transported: beta,
        normal_form: nf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: u64,
    pub w: [C; 2],
    pub dominant: usize,
    pub gap: f64,
    pub residual: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportTolerances {
    pub gap: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LempertReport {
    pub a: f64,
    pub b: f64,
    pub samples: u64,
    pub seed: u64,
    pub passes: u64,
    pub failures: u64,
    pub worst_gap: f64,
    pub worst_residual: f64,
    /// How often each coordinate (z₁, z₂, F) was dominant.
    pub dominant_counts: [u64; 3],
    pub tolerances: ReportTolerances,
    pub failed: Vec<SampleOutcome>,
}

/// Rejection sample of `D_{a,b}` for sample `index`.
pub fn sample_dab(d: &DomainDab, seed: u64, index: u64) -> [C; 2] {
    let mut r = sampling::rng(seed, index);
    loop {
        let w = [sampling::disc_point(&mut r, 1.0), sampling::disc_point(&mut r, 1.0)];
        if dab_contains(d, w) {
            return w;
        }
    }
}

/// Checks one pair `(0, w)`: the geodesic residual and `|c - l|`.
pub fn lempert_check(d: &DomainDab, w: [C; 2], index: u64, tols: &Tolerances) -> SampleOutcome {
    let v = d.variety();
    let mut out = SampleOutcome {
        index,
        w,
        dominant: 0,
        gap: f64::NAN,
        residual: f64::NAN,
        passed: false,
        error: None,
    };
    let run = || -> Result<(usize, f64, f64), MetricsError> {
        let z = lift_to_m(d, w)?;
        let cert = geodesic_through(&v, &z)?;
        let c = c_dab(d, [ZERO; 2], w)?;
        let mut residual = cert.residual;
        residual = residual.max(cert.disc.variety_residual(&v, 16));
        Ok((z.dominant(), (c - cert.lempert_value).abs(), residual))
    };
    match run() {
        Ok((dom, gap, residual)) => {
            out.dominant = dom;
            out.gap = gap;
            out.residual = residual;
            out.passed = gap < tols.inversion && residual < tols.inversion;
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// Desk-scale check that `c = l` on `D_{a,b}` along constructed geodesics,
/// over `samples` random pairs `(0, w)`.
pub fn lempert_verify(d: &DomainDab, samples: u64, seed: u64) -> Result<LempertReport, MetricsError> {
    lempert_verify_with(d, samples, seed, &Tolerances::default())
}

pub fn lempert_verify_with(
    d: &DomainDab,
    samples: u64,
    seed: u64,
    tols: &Tolerances,
) -> Result<LempertReport, MetricsError> {
    if !d.is_interesting() {
        return Err(MetricsError::InvalidParameters);
    }
    let outcomes: Vec<SampleOutcome> = (0..samples)
        .into_par_iter()
        .map(|i| lempert_check(d, sample_dab(d, seed, i), i, tols))
        .collect();
    let mut report = LempertReport {
        a: d.a,
        b: d.b,
        samples,
        seed,
        passes: 0,
        failures: 0,
        worst_gap: 0.0,
        worst_residual: 0.0,
        dominant_counts: [0; 3],
        tolerances: ReportTolerances {
            gap: tols.inversion,
            residual: tols.inversion,
        },
        failed: vec![],
    };
    for o in outcomes {
        if o.error.is_none() {
            report.dominant_counts[o.dominant] += 1;
            report.worst_gap = report.worst_gap.max(o.gap);
            report.worst_residual = report.worst_residual.max(o.residual);
        }
        if o.passed {
            report.passes += 1;
        } else {
            report.failures += 1;
            report.failed.push(o);
        }
    }
    Ok(report)
}

/// Upper bound for `κ(0; X)` certified by an explicit disc
/// `f(λ) = disc(scale·λ)` with `f(0) = 0`, `f'(0) = X / value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaBound {
    pub value: f64,
    pub scale: C,
    pub disc: Option<AnalyticDisc>,
}

/// Disc bound for a tangent vector `X` of the normalized variety at `0`.
pub fn kappa_disc_bound(v: &NormalVariety, x: [C; 3]) -> Result<KappaBound, MetricsError> {
    let size = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let defect = (v.a * x[0] + v.b * x[1] + x[2]).norm();
    if defect > 1e-12 * size.max(1.0) {
        return Err(MetricsError::NotTangent(defect));
    }
    if size == 0.0 {
        return Ok(KappaBound {
            value: 0.0,
            scale: ONE,
            disc: None,
        });
    }
    let (w, perm) = v.with_dominant_third(TriPoint { z: x }.dominant());
    let xx = perm.apply(x);
    let g1 = xx[0] / xx[2];
    let lens = Lens::new(w.a, w.b)?;
    if lens_margin(&lens, g1) <= 0.0 {
        return Err(MetricsError::BoundaryTarget);
    }
    let disc = phi_gamma(&lens, &LensPoint { gamma1: g1 }, Branch::Plus)?;
    let disc = permute_disc_back(disc, &perm);
    Ok(KappaBound {
        value: xx[2].norm(),
        scale: xx[2] / xx[2].norm(),
        disc: Some(disc),
    })
}

/// Disc bound on `D_{a,b}`: lifts `X` by `dF(0)X = -(aX₁ + bX₂)` and projects
/// the disc to the first two coordinates.
pub fn kappa_dab_disc_bound(d: &DomainDab, x: [C; 2]) -> Result<KappaBound, MetricsError> {
    let lifted = [x[0], x[1], -(d.a * x[0] + d.b * x[1])];
    let mut k = kappa_disc_bound(&d.variety(), lifted)?;
    if let Some(disc) = &mut k.disc {
        disc.components.truncate(2);
    }
    Ok(k)
}

/// A holomorphic function into the unit disc with an analytic gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Member {
    /// `z ↦ z_index`.
    Coordinate { index: usize },
    /// `z ↦ Σ c_j z_j`.
    Linear { coeffs: Vec<C> },
    /// `F_{a,b}(z) = (az₁ + bz₂ - z₁z₂) / (bz₁ + az₂ - 1)`.
    Fab { a: f64, b: f64 },
    /// `√(1-‖a‖²)(a₁z₂ - a₂z₁) / (‖a‖(1 - ā₁z₁ - ā₂z₂))`.
    BallB2 { a: [C; 2] },
    /// `F(z) = (2z₁(1-z₁) - z₂²) / (2(1-z₁) - z₂²)`.
    BallLeftInverse,
    PsiL { extremal: BallExtremal },
    PostMobius { inner: Box<Member>, map: MobiusMap },
}

fn need(z: &[C], n: usize) -> Result<(), MetricsError> {
    if z.len() == n {
        Ok(())
    } else {
        Err(MetricsError::DimensionMismatch)
    }
}

fn fab_parts(a: f64, b: f64, z: &[C]) -> (C, C) {
    (a * z[0] + b * z[1] - z[0] * z[1], b * z[0] + a * z[1] - 1.0)
}

impl Member {
    pub fn eval(&self, z: &[C]) -> Result<C, MetricsError> {
        Ok(match self {
            Member::Coordinate { index } => *z.get(*index).ok_or(MetricsError::DimensionMismatch)?,
            Member::Linear { coeffs } => {
                need(z, coeffs.len())?;
                coeffs.iter().zip(z).map(|(c, x)| c * x).sum()
            }
            Member::Fab { a, b } => {
                need(z, 2)?;
                let (n, d) = fab_parts(*a, *b, z);
                if d.norm() < tol::POLE_FLOOR {
                    return Err(MetricsError::Pole);
                }
                n / d
            }
            Member::BallB2 { a } => {
                need(z, 2)?;
                ball::b2_member_eval(a, z)
            }
            Member::BallLeftInverse => {
                need(z, 2)?;
                ball::f_left_inverse([z[0], z[1]]).map_err(|_| MetricsError::Pole)?
            }
            Member::PsiL { extremal } => {
                need(z, extremal.direction.len())?;
                extremal.eval(z)
            }
            Member::PostMobius { inner, map } => map.apply(inner.eval(z)?),
        })
    }

    /// Holomorphic partial derivatives `∂f/∂z_k`.
    pub fn gradient(&self, z: &[C]) -> Result<Vec<C>, MetricsError> {
        Ok(match self {
            Member::Coordinate { index } => {
                if *index >= z.len() {
                    return Err(MetricsError::DimensionMismatch);
                }
                (0..z.len()).map(|k| if k == *index { ONE } else { ZERO }).collect()
            }
            Member::Linear { coeffs } => {
                need(z, coeffs.len())?;
                coeffs.clone()
            }
            Member::Fab { a, b } => {
                need(z, 2)?;
                let (n, d) = fab_parts(*a, *b, z);
                if d.norm() < tol::POLE_FLOOR {
                    return Err(MetricsError::Pole);
                }
                let d2 = d * d;
                vec![((*a - z[1]) * d - *b * n) / d2, ((*b - z[0]) * d - *a * n) / d2]
            }
            Member::BallB2 { a } => {
                need(z, 2)?;
                ball::b2_member_gradient(a, z)
            }
            Member::BallLeftInverse => {
                need(z, 2)?;
                if ball::f_parts([z[0], z[1]]).1.norm() < tol::POLE_FLOOR {
                    return Err(MetricsError::Pole);
                }
                ball::f_gradient([z[0], z[1]])
            }
            Member::PsiL { extremal } => {
                need(z, extremal.direction.len())?;
                extremal.gradient(z)
            }
            Member::PostMobius { inner, map } => {
                let k = map.derivative(inner.eval(z)?);
                inner.gradient(z)?.into_iter().map(|g| k * g).collect()
            }
        })
    }

    /// `f'(z) X`.
    pub fn derivative(&self, z: &[C], x: &[C]) -> Result<C, MetricsError> {
        need(x, z.len())?;
        Ok(self.gradient(z)?.iter().zip(x).map(|(g, v)| g * v).sum())
    }

    pub fn post_mobius(self, map: MobiusMap) -> Self {
        Member::PostMobius {
            inner: Box::new(self),
            map,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum DomainTag {
    Disc,
    Polydisc { n: usize },
    Dab { a: f64, b: f64 },
    Ball { n: usize },
}

impl DomainTag {
    pub fn dim(&self) -> usize {
        match self {
            DomainTag::Disc => 1,
            DomainTag::Polydisc { n } | DomainTag::Ball { n } => *n,
            DomainTag::Dab { .. } => 2,
        }
    }

    pub fn contains(&self, z: &[C]) -> bool {
        if z.len() != self.dim() || z.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return false;
        }
        match self {
            DomainTag::Disc | DomainTag::Polydisc { .. } => z.iter().all(|c| c.norm_sqr() < 1.0),
            DomainTag::Ball { .. } => ball::norm_sqr(z) < 1.0,
            DomainTag::Dab { a, b } => dab_contains(&DomainDab { a: *a, b: *b }, [z[0], z[1]]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalSet {
    pub members: Vec<Member>,
    pub domain: DomainTag,
}

impl UniversalSet {
    pub fn new(members: Vec<Member>, domain: DomainTag) -> Result<Self, MetricsError> {
        if members.is_empty() {
            return Err(MetricsError::EmptyFamily);
        }
        Ok(Self { members, domain })
    }

    /// `{z₁, z₂, F_{a,b}}`.
    pub fn dab(d: &DomainDab) -> Self {
        Self {
            members: vec![
                Member::Coordinate { index: 0 },
                Member::Coordinate { index: 1 },
                Member::Fab { a: d.a, b: d.b },
            ],
            domain: DomainTag::Dab { a: d.a, b: d.b },
        }
    }

    pub fn polydisc(n: usize) -> Result<Self, MetricsError> {
        Self::new(
            (0..n).map(|index| Member::Coordinate { index }).collect(),
            DomainTag::Polydisc { n },
        )
    }

    /// `{id}` on the unit disc.
    pub fn disc() -> Self {
        Self {
            members: vec![Member::Coordinate { index: 0 }],
            domain: DomainTag::Disc,
        }
    }

    pub fn extended(&self, extra: impl IntoIterator<Item = Member>) -> Self {
        let mut members = self.members.clone();
        members.extend(extra);
        Self {
            members,
            domain: self.domain,
        }
    }

    fn image(&self, z: &[C]) -> Result<Vec<C>, MetricsError> {
        if !self.domain.contains(z) {
            return Err(MetricsError::NotInDomain);
        }
        self.members
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let v = m.eval(z)?;
                if !(v.norm() < 1.0) {
                    return Err(MetricsError::EvaluationOutOfDisc {
                        member: k,
                        modulus: v.norm(),
                    });
                }
                Ok(v)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedReport {
    pub images: Vec<Vec<C>>,
    /// Index pairs of distinct points with coinciding images.
    pub collisions: Vec<(usize, usize)>,
}

/// `Φ = (Φ₁, …, Φ_N)` on each point, with an injectivity spot check.
pub fn universal_embed(u: &UniversalSet, points: &[Vec<C>]) -> Result<EmbedReport, MetricsError> {
    let images = points.iter().map(|p| u.image(p)).collect::<Result<Vec<_>, _>>()?;
    let mut collisions = vec![];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if max_gap(&points[i], &points[j]) > 1e-12 && max_gap(&images[i], &images[j]) <= 1e-12 {
                collisions.push((i, j));
            }
        }
    }
    Ok(EmbedReport { images, collisions })
}

/// `max_j ρ(Φ_j(z), Φ_j(w))`.
pub fn universal_c(u: &UniversalSet, z: &[C], w: &[C]) -> Result<f64, MetricsError> {
    let (fz, fw) = (u.image(z)?, u.image(w)?);
    c_polydisc(&fz, &fw)
}

/// `max_j γ_𝔻(Φ_j(z); Φ_j'(z)X)`.
pub fn universal_gamma(u: &UniversalSet, z: &[C], x: &[C]) -> Result<f64, MetricsError> {
    let fz = u.image(z)?;
    u.members.iter().zip(fz).try_fold(0.0_f64, |m, (f, v)| {
        Ok(m.max(gamma_disc(v, f.derivative(z, x)?)?))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityWitness {
    pub root1: C,
    pub root2: C,
    pub all_unimodular: bool,
}

/// Roots of `bw² - (b² + 1 - a²)w + b = 0`.
pub fn linear_convexity_quadratic(d: &DomainDab) -> ConvexityWitness {
    let (a, b) = (d.a, d.b);
    let q = Quadratic::new(C::new(b, 0.0), C::new(-(b * b + 1.0 - a * a), 0.0), C::new(b, 0.0));
    let r = q.roots();
    let (root1, root2) = (r[0], r[1]);
    ConvexityWitness {
        root1,
        root2,
        all_unimodular: (root1.norm() - 1.0).abs() < 1e-10 && (root2.norm() - 1.0).abs() < 1e-10,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::phi_gamma;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn d08() -> DomainDab {
        DomainDab::new(0.8, 0.8).unwrap()
    }

    #[test]
    fn polydisc_examples() {
        assert_eq!(c_polydisc(&[ZERO; 2], &[ZERO; 2]).unwrap(), 0.0);
        let w = [c(0.5, 0.0), c(-2.0 / 3.0, 0.0), ZERO];
        assert!((c_polydisc(&[ZERO; 3], &w).unwrap() - (2.0f64 / 3.0).atanh()).abs() < 1e-15);
        let p = [w[2], w[0], w[1]];
        assert_eq!(c_polydisc(&[ZERO; 3], &p).unwrap(), c_polydisc(&[ZERO; 3], &w).unwrap());
        assert!(c_polydisc(&[ZERO], &[ONE]).is_err());
    }

    #[test]
    fn dab_examples() {
        let d = d08();
        assert_eq!(c_dab(&d, [ZERO; 2], [ZERO; 2]).unwrap(), 0.0);
        let v = c_dab(&d, [ZERO; 2], [c(0.5, 0.0), ZERO]).unwrap();
        assert!((v - (2.0f64 / 3.0).atanh()).abs() < 1e-15);
        assert!((v - 0.804_719).abs() < 1e-6);
        assert_eq!(c_dab(&d, [ZERO; 2], [c(0.9, 0.0), c(0.9, 0.0)]), Err(MetricsError::NotInDomain));
    }

    #[test]
    fn kappa_examples() {
        let d = DomainDab::new(0.8, 0.9).unwrap();
        assert_eq!(kappa_dab_origin(&d, [ZERO; 2]), 0.0);
        assert!((kappa_dab_origin(&d, [ONE, -ONE]) - 1.0).abs() < 1e-15);
        let x = [c(0.2, 0.1), c(-0.3, 0.4)];
        let t = c(0.3, -1.1);
        assert!((kappa_dab_origin(&d, [t * x[0], t * x[1]]) - t.norm() * kappa_dab_origin(&d, x)).abs() < 1e-15);
        assert!(indicatrix_membership(&d08(), [c(0.9, 0.0), c(-0.9, 0.0)]));
        assert!(!indicatrix_membership(&d08(), [ONE, ZERO]));
        assert!(indicatrix_membership(&d08(), [ZERO, ZERO]));
    }

    #[test]
    fn c_m_origin_on_phi_gamma() {
        let v = d08().variety();
        let l = Lens::new(0.8, 0.8).unwrap();
        let disc = phi_gamma(&l, &l.point(c(-0.6, 0.2)), Branch::Minus).unwrap();
        let z = TriPoint { z: disc.eval3(c(0.5, 0.0)) };
        assert!((c_m_origin(&v, &z).unwrap() - 0.5f64.atanh()).abs() < 1e-15);
        assert_eq!(c_m_origin(&v, &TriPoint::origin()).unwrap(), 0.0);
        let off = TriPoint { z: [c(0.1, 0.0), ZERO, ZERO] };
        assert!(matches!(c_m_origin(&v, &off), Err(MetricsError::NotOnVariety(_))));
    }

    #[test]
    fn psi_x_limits() {
        let l = Lens::new(0.8, 0.9).unwrap();
        let p = l.point(c(-0.55, 0.15));
        let v = psi_x_forward(&l, &p, Branch::Plus, c(1e-9, 0.0)).unwrap();
        assert!((v[0] - p.gamma1).norm() < 1e-8 && (v[1] - l.gamma2(p.gamma1)).norm() < 1e-8);
        let x = c(0.3, 0.4);
        let v = psi_x_forward(&l, &p, Branch::Minus, x).unwrap();
        let r = l.variety().residual(&TriPoint { z: [v[0] * x, v[1] * x, x] });
        assert!(r.norm() < 1e-15);
        assert_eq!(psi_x_forward(&l, &p, Branch::Plus, ZERO), Err(MetricsError::InvalidSlice));
    }

    #[test]
    fn geodesic_round_trip() {
        let l = Lens::new(0.8, 0.9).unwrap();
        let v = l.variety();
        for (g, br, x) in [
            (c(-0.55, 0.15), Branch::Plus, c(0.4, 0.2)),
            (c(-0.7, -0.3), Branch::Minus, c(-0.1, 0.6)),
        ] {
            let disc = phi_gamma(&l, &l.point(g), br).unwrap();
            let z = TriPoint { z: disc.eval3(x) };
            let cert = geodesic_through(&v, &z).unwrap();
            assert!(cert.residual < 1e-9);
            assert_eq!(cert.caratheodory_value, cert.lempert_value);
            let all = std::iter::once(cert.lens_point).chain(cert.alternatives.iter().copied());
            let hit = all.clone().any(|s| s.branch == br && (s.gamma1 - g).norm() < 1e-8);
            let other = all.clone().any(|s| s.branch != br);
            assert!(hit || other);
        }
    }

    #[test]
    fn geodesic_with_third_member_dominant() {
        let d = d08();
        let z = lift_to_m(&d, [c(0.5, 0.0), ZERO]).unwrap();
        assert_eq!(z.dominant(), 2);
        let cert = geodesic_through(&d.variety(), &z).unwrap();
        assert!(cert.residual < 1e-9);
        assert!((cert.lempert_value - (2.0f64 / 3.0).atanh()).abs() < 1e-15);
        let z = lift_to_m(&d, [c(0.5, 0.0), c(-0.4, 0.0)]).unwrap();
        assert_eq!(z.dominant(), 0);
        let cert = geodesic_through(&d.variety(), &z).unwrap();
        assert_eq!(cert.permutation, Permutation::moving_to_third(0));
        assert!(cert.residual < 1e-9);
        assert!(cert.disc.variety_residual(&d.variety(), 32) < 1e-10);
    }

    #[test]
    fn geodesic_between_points() {
        let alpha = Alpha::new(c(0.7, 0.2), c(-0.3, 0.6), c(0.9, 0.0)).unwrap();
        let pts = crate::varieties::sample_variety(&alpha, 2, 0.5);
        let (z, w) = (TriPoint { z: pts[0] }, TriPoint { z: pts[1] });
        let cert = geodesic_between(&alpha, &z, &w).unwrap();
        assert!(cert.residual < 1e-9, "{}", cert.residual);
        assert!((cert.caratheodory_value - cert.lempert_value).abs() < 1e-9);
    }

    #[test]
    fn lempert_small_run() {
        let r = lempert_verify(&d08(), 40, 7).unwrap();
        assert_eq!(r.failures, 0, "{:?}", r.failed);
        assert_eq!(r.passes, 40);
        assert_eq!(r, lempert_verify(&d08(), 40, 7).unwrap());
        assert!(lempert_verify(&DomainDab::new(0.2, 0.3).unwrap(), 5, 1).is_err());
    }

    #[test]
    fn kappa_disc_meets_formula() {
        let d = DomainDab::new(0.8, 0.9).unwrap();
        for x in [[c(0.3, 0.1), c(-0.2, 0.25)], [c(0.1, 0.0), c(0.4, -0.1)], [c(-0.5, 0.2), c(0.5, 0.1)]] {
            let k = kappa_dab_disc_bound(&d, x).unwrap();
            assert!((k.value - kappa_dab_origin(&d, x)).abs() < 1e-15);
            let disc = k.disc.unwrap();
            let dv = disc.derivative(ZERO);
            for j in 0..2 {
                assert!((dv[j] * k.scale * k.value - x[j]).norm() < 1e-14);
            }
            let u = UniversalSet::dab(&d);
            let g = universal_gamma(&u, &[ZERO; 2], &x).unwrap();
            assert!((g - k.value).abs() < 1e-12);
        }
        assert!(matches!(
            kappa_disc_bound(&d.variety(), [ONE, ZERO, ZERO]),
            Err(MetricsError::NotTangent(_))
        ));
    }

    #[test]
    fn universal_examples() {
        let d = d08();
        let u = UniversalSet::dab(&d);
        let e = universal_embed(&u, &[vec![ZERO; 2], vec![c(0.5, 0.0), ZERO]]).unwrap();
        assert_eq!(e.images[0], vec![ZERO; 3]);
        assert!((e.images[1][2] - c(-2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!(e.collisions.is_empty());
        let (z, w) = ([c(0.1, 0.2), c(-0.3, 0.1)], [c(0.4, -0.2), c(0.2, 0.2)]);
        assert_eq!(universal_c(&u, &z, &w).unwrap(), c_dab(&d, z, w).unwrap());
        let one = UniversalSet::disc();
        let r = universal_c(&one, &[c(0.3, 0.0)], &[c(-0.2, 0.5)]).unwrap();
        assert_eq!(r, rho(c(0.3, 0.0), c(-0.2, 0.5)).unwrap());
        assert_eq!(UniversalSet::new(vec![], DomainTag::Disc), Err(MetricsError::EmptyFamily));
        let bad = UniversalSet::new(vec![Member::Linear { coeffs: vec![c(2.0, 0.0)] }], DomainTag::Disc).unwrap();
        assert!(matches!(
            universal_c(&bad, &[c(0.9, 0.0)], &[ZERO]),
            Err(MetricsError::EvaluationOutOfDisc { member: 0, .. })
        ));
    }

    #[test]
    fn member_json_round_trip() {
        let m = Member::Fab { a: 0.8, b: 0.9 }.post_mobius(MobiusMap::involution(c(0.1, 0.2)).unwrap());
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"kind\":\"post_mobius\""));
        assert_eq!(serde_json::from_str::<Member>(&s).unwrap(), m);
    }

    #[test]
    fn convexity_examples() {
        let w = linear_convexity_quadratic(&d08());
        assert!(w.all_unimodular);
        let y = 0.609_375_f64.sqrt();
        let mut roots = [w.root1, w.root2];
        roots.sort_by(|p, q| p.im.total_cmp(&q.im));
        assert!((roots[0] - c(0.625, -y)).norm() < 1e-15);
        assert!((roots[1] - c(0.625, y)).norm() < 1e-15);
        assert!(!linear_convexity_quadratic(&DomainDab::new(0.3, 0.4).unwrap()).all_unimodular);
    }
}
