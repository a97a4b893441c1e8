//! `carageo`: command-line front end for the carageo library.
//!
//! Exit codes: 0 on success, 2 on invalid input, 1 when a computation fails
//! or a verification reports failures.

mod schema;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use carageo::ball::{
    ball_automorphism, boundary_locus_check, c_ball, c_star_ball, f_left_inverse, f_t_geodesic,
    psi_l, universal_member_b2, BallError, BallPoint, ComplexLine,
};
use carageo::discgeom::{DiscPoint, GeomError, MobiusMap};
use carageo::geodesics::{
    admissible_arc, balanced_pair, blaschke_family, lens_contains, lens_corners, phi_gamma,
    solve_omega_eta, Branch, GeodesicError, Lens,
};
use carageo::metrics::{
    c_dab, c_polydisc, geodesic_between, geodesic_through, kappa_dab_origin, lempert_verify_with,
    linear_convexity_quadratic, universal_c, universal_embed, universal_gamma, DomainTag,
    MetricsError, UniversalSet,
};
use carageo::plotdata::{arc_samples, indicatrix_profile, lens_polyline, locus_grid, PlotTable};
use carageo::sweep::{any_failed, sweep_with, write_csv, SweepError, SweepSpec};
use carageo::tol::Tolerances;
use carageo::varieties::{
    classify, lift_to_m, normalize, transport_report, Alpha, DomainDab, NormalVariety,
    Permutation, TriPoint, TridiscAutomorphism, VarietyError,
};
use carageo::C;

#[derive(Parser, Debug)]
#[command(name = "carageo", version, about = "Complex geodesics and invariant metrics on tridisc varieties, planar-pair domains and the ball")]
struct Cli {
    /// Output format; tabular commands default to csv, the rest to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for parallel commands.
    #[arg(long, global = true, env = "CARAGEO_THREADS")]
    threads: Option<usize>,
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct TolArgs {
    /// Slack for strict inequalities (lens membership, Schur tests)
    #[arg(value_parser = parse_f, long = "tol-inequality", global = true)]
    inequality: Option<f64>,
    /// Variety and equation residual bound
    #[arg(value_parser = parse_f, long = "tol-residual", global = true)]
    residual: Option<f64>,
    /// Allowed ||z|-1| for points on the circle
    #[arg(value_parser = parse_f, long = "tol-unimodular", global = true)]
    unimodular: Option<f64>,
    /// Slice inversion residual and |c-l| gap bound
    #[arg(value_parser = parse_f, long = "tol-inversion", global = true)]
    inversion: Option<f64>,
}

impl TolArgs {
    fn resolve(&self) -> Result<Tolerances, CliError> {
        let d = Tolerances::default();
        let pick = |v: Option<f64>, dflt: f64, name: &str| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Validation(format!("--tol-{name} must be positive"))),
            Some(x) => Ok(x),
            None => Ok(dflt),
        };
        Ok(Tolerances {
            inequality: pick(self.inequality, d.inequality, "inequality")?,
            residual: pick(self.residual, d.residual, "residual")?,
            unimodular: pick(self.unimodular, d.unimodular, "unimodular")?,
            inversion: pick(self.inversion, d.inversion, "inversion")?,
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BranchArg {
    Plus,
    Minus,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Plus => Branch::Plus,
            BranchArg::Minus => Branch::Minus,
        }
    }
}

fn parse_f(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("`{}` is not a finite number", s.trim())),
    }
}

fn parse_c(s: &str) -> Result<C, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a complex number `re,im`"));
    let z = match parts.as_slice() {
        [re] => C::new(num(re)?, 0.0),
        [re, im] => C::new(num(re)?, num(im)?),
        _ => return Err(format!("`{s}` is not a complex number `re,im`")),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(z)
}

#[derive(Args, Debug)]
struct AlphaArg {
    /// Three complex coefficients `re,im`.
    #[arg(long, num_args = 3, value_parser = parse_c, required = true)]
    alpha: Vec<C>,
}

impl AlphaArg {
    fn get(&self) -> Result<Alpha, CliError> {
        Ok(Alpha::new(self.alpha[0], self.alpha[1], self.alpha[2])?)
    }
}

#[derive(Args, Debug)]
struct AbArg {
    #[arg(value_parser = parse_f, long)]
    a: f64,
    #[arg(value_parser = parse_f, long)]
    b: f64,
}

impl AbArg {
    fn domain(&self) -> Result<DomainDab, CliError> {
        Ok(DomainDab::new(self.a, self.b)?)
    }
    fn lens(&self) -> Result<Lens, CliError> {
        Ok(Lens::new(self.a, self.b)?)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Retract/non-retract classification of M_α.
    Classify(AlphaArg),
    /// Normal form (a, b, rotations) of M_α.
    Normalize(AlphaArg),
    /// Image of M_α under the tridisc automorphism moving a point to 0.
    Transport {
        #[command(flatten)]
        alpha: AlphaArg,
        /// Point of M_α sent to the origin.
        #[arg(long = "to-origin", num_args = 3, value_parser = parse_c, required = true)]
        to_origin: Vec<C>,
        /// Coordinate permutation applied first, 0-based: (σz)_k = z_{p[k]}.
        #[arg(long, num_args = 3)]
        perm: Option<Vec<usize>>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Carathéodory distance.
    #[command(subcommand)]
    Distance(DistanceCmd),
    /// Complex geodesics.
    #[command(subcommand)]
    Geodesic(GeodesicCmd),
    /// Lens corners and, for a lens point, both (ω, η) solutions and the admissible arc.
    Lens {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, value_parser = parse_c)]
        gamma: Option<C>,
    },
    /// Desk-scale verification of c = l on D_{a,b}.
    VerifyLempert {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, default_value_t = 500)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Roots of the non-linear-convexity quadratic.
    Convexity {
        #[command(flatten)]
        ab: AbArg,
    },
    /// Constructions on the unit ball.
    #[command(subcommand)]
    Ball(BallCmd),
    /// Finite universal sets.
    #[command(subcommand)]
    Universal(UniversalCmd),
    /// Lempert verification over an (a, b) grid.
    Sweep {
        #[arg(value_parser = parse_f, long = "a-min", default_value_t = 0.6)]
        a_min: f64,
        #[arg(value_parser = parse_f, long = "a-max", default_value_t = 0.95)]
        a_max: f64,
        #[arg(long = "a-steps", default_value_t = 5)]
        a_steps: usize,
        #[arg(value_parser = parse_f, long = "b-min", default_value_t = 0.6)]
        b_min: f64,
        #[arg(value_parser = parse_f, long = "b-max", default_value_t = 0.95)]
        b_max: f64,
        #[arg(long = "b-steps", default_value_t = 5)]
        b_steps: usize,
        #[arg(long, default_value_t = 50)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "allow-degenerate")]
        allow_degenerate: bool,
        /// Add a wall-clock column (output is then not reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Point clouds for plotting.
    #[command(subcommand)]
    Plotdata(PlotCmd),
    /// JSON Schema of an output document.
    Schema {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(schema::NAMES))]
        name: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum DistanceCmd {
    /// c on D_{a,b}.
    Dab {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, num_args = 2, value_parser = parse_c, required = true)]
        z: Vec<C>,
        #[arg(long, num_args = 2, value_parser = parse_c, required = true)]
        w: Vec<C>,
    },
    /// c on the polydisc.
    Polydisc {
        #[arg(long, num_args = 1.., value_parser = parse_c, required = true)]
        z: Vec<C>,
        #[arg(long, num_args = 1.., value_parser = parse_c, required = true)]
        w: Vec<C>,
    },
    /// c = l on M_α, with the geodesic through both points.
    Variety {
        #[command(flatten)]
        alpha: AlphaArg,
        #[arg(long, num_args = 3, value_parser = parse_c, required = true)]
        z: Vec<C>,
        #[arg(long, num_args = 3, value_parser = parse_c, required = true)]
        w: Vec<C>,
    },
    /// c on the ball.
    Ball {
        #[arg(long, num_args = 1.., value_parser = parse_c, required = true)]
        z: Vec<C>,
        #[arg(long, num_args = 1.., value_parser = parse_c, required = true)]
        w: Vec<C>,
    },
}

#[derive(Subcommand, Debug)]
enum GeodesicCmd {
    /// Geodesic through 0 and z on the normalized variety.
    Through {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, num_args = 3, value_parser = parse_c, required = true)]
        z: Vec<C>,
    },
    /// Geodesic through 0 and w ∈ D_{a,b}, lifted to the variety.
    Dab {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, num_args = 2, value_parser = parse_c, required = true)]
        w: Vec<C>,
    },
    /// Geodesic through two points of M_α.
    Between {
        #[command(flatten)]
        alpha: AlphaArg,
        #[arg(long, num_args = 3, value_parser = parse_c, required = true)]
        z: Vec<C>,
        #[arg(long, num_args = 3, value_parser = parse_c, required = true)]
        w: Vec<C>,
    },
    /// The disc Φ_γ for a lens point.
    Phi {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, value_parser = parse_c)]
        gamma: C,
        #[arg(long, value_enum, default_value = "plus")]
        branch: BranchArg,
    },
    /// A member of the Blaschke family.
    Blaschke {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, value_parser = parse_c)]
        gamma: C,
        #[arg(long, value_parser = parse_c)]
        omega: C,
    },
    /// Bidisc geodesic through a balanced pair.
    Balanced {
        #[arg(long, num_args = 2, value_parser = parse_c, required = true)]
        z: Vec<C>,
        #[arg(long, num_args = 2, value_parser = parse_c, required = true)]
        w: Vec<C>,
    },
}

#[derive(Subcommand, Debug)]
enum BallCmd {
    /// Φ_a(z).
    Automorphism {
        #[arg(long, num_args = 1.., value_parser = parse_c, required = true)]
        a: Vec<C>,
        #[arg(long, num_args = 1.., value_parser = parse_c, required = true)]
        z: Vec<C>,
    },
    /// The extremal Ψ_l of a complex line, optionally evaluated at z.
    PsiL {
        #[arg(long, num_args = 1.., value_parser = parse_c, required = true)]
        base: Vec<C>,
        #[arg(long, num_args = 1.., value_parser = parse_c, required = true)]
        direction: Vec<C>,
        #[arg(long, num_args = 1.., value_parser = parse_c)]
        z: Option<Vec<C>>,
    },
    /// c*(w, z).
    CStar {
        #[arg(long, num_args = 1.., value_parser = parse_c, required = true)]
        w: Vec<C>,
        #[arg(long, num_args = 1.., value_parser = parse_c, required = true)]
        z: Vec<C>,
    },
    /// The left inverse F at a point of the closed ball of C².
    F {
        #[arg(long, num_args = 2, value_parser = parse_c, required = true)]
        z: Vec<C>,
    },
    /// f_t(λ).
    Ft {
        #[arg(value_parser = parse_f, long)]
        t: f64,
        #[arg(long, value_parser = parse_c)]
        lambda: C,
    },
    /// Locus condition and |F| at a unit-sphere point of C².
    Locus {
        #[arg(long, num_args = 2, value_parser = parse_c, required = true)]
        z: Vec<C>,
    },
}

#[derive(Subcommand, Debug)]
enum UniversalCmd {
    /// The three-member set {z₁, z₂, F_{a,b}} on D_{a,b}.
    Dab {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, num_args = 2, value_parser = parse_c, required = true)]
        z: Vec<C>,
        #[arg(long, num_args = 2, value_parser = parse_c)]
        w: Option<Vec<C>>,
        /// Tangent vector at z for the γ value.
        #[arg(long, num_args = 2, value_parser = parse_c)]
        x: Option<Vec<C>>,
    },
    /// One member of the family for the ball of C², evaluated at z.
    B2 {
        #[arg(long, num_args = 2, value_parser = parse_c, required = true)]
        a: Vec<C>,
        #[arg(long, num_args = 2, value_parser = parse_c, required = true)]
        z: Vec<C>,
    },
}

#[derive(Subcommand, Debug)]
enum PlotCmd {
    /// Lens boundary polyline.
    Lens {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, default_value_t = 64)]
        points: usize,
    },
    /// Admissibility margin on the circle for fixed γ.
    Arc {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, value_parser = parse_c)]
        gamma: C,
        #[arg(long, default_value_t = 360)]
        points: usize,
    },
    /// Indicatrix of D_{a,b} at 0.
    Indicatrix {
        #[command(flatten)]
        ab: AbArg,
        #[arg(long, default_value_t = 360)]
        directions: usize,
        #[arg(value_parser = parse_f, long, default_value_t = 0.0)]
        phase: f64,
    },
    /// Boundary locus of |F| = 1 on the sphere of C².
    Locus {
        #[arg(long, default_value_t = 16)]
        n: usize,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{message}")]
    Compute { kind: String, message: String },
    #[error("{0} verification failure(s)")]
    Failures(u64),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn compute(kind: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Compute {
        kind: kind.into(),
        message: e.to_string(),
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::OutsideDisc(_) | GeomError::NonFinite(_) | GeomError::NotUnimodular(_) => {
                CliError::Validation(e.to_string())
            }
            _ => compute("geometry", e),
        }
    }
}

impl From<VarietyError> for CliError {
    fn from(e: VarietyError) -> Self {
        match e {
            VarietyError::Geom(g) => g.into(),
            VarietyError::ZeroAlpha
            | VarietyError::NotInDomain
            | VarietyError::InvalidParameters
            | VarietyError::Unsupported
            | VarietyError::InvalidAutomorphism(_) => CliError::Validation(e.to_string()),
            _ => compute("variety", e),
        }
    }
}

impl From<GeodesicError> for CliError {
    fn from(e: GeodesicError) -> Self {
        match e {
            GeodesicError::Geom(g) => g.into(),
            GeodesicError::Variety(v) => v.into(),
            GeodesicError::OutsideLens | GeodesicError::EmptyLens => CliError::Validation(e.to_string()),
            _ => compute("geodesic", e),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Geom(g) => g.into(),
            MetricsError::Variety(v) => v.into(),
            MetricsError::Geodesic(g) => g.into(),
            MetricsError::NotOnVariety(_)
            | MetricsError::NotInDomain
            | MetricsError::InvalidSlice
            | MetricsError::NotTangent(_)
            | MetricsError::DimensionMismatch
            | MetricsError::InvalidParameters
            | MetricsError::CoincidentPoints => CliError::Validation(e.to_string()),
            MetricsError::ConvergenceFailure { .. } => compute("ConvergenceFailure", e),
            _ => compute("metrics", e),
        }
    }
}

impl From<BallError> for CliError {
    fn from(e: BallError) -> Self {
        match e {
            BallError::Indeterminate => compute("Indeterminate", e),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Degenerate { .. } | SweepError::InvalidGrid(_) => CliError::Validation(e.to_string()),
            SweepError::Io(e) => CliError::Io(e),
            SweepError::Csv(e) => csv_io(e),
        }
    }
}

/// A command's result: a JSON document, or a table when csv is natural.
enum Output {
    Doc(Value),
    Table(PlotTable),
    Sweep(Vec<carageo::sweep::SweepRow>),
}

fn doc<T: Serialize>(v: &T) -> Output {
    Output::Doc(serde_json::to_value(v).expect("serializable output"))
}

fn tri(v: &[C]) -> [C; 3] {
    [v[0], v[1], v[2]]
}

fn pair(v: &[C]) -> [C; 2] {
    [v[0], v[1]]
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let tols = cli.tol.resolve()?;
    Ok(match &cli.command {
        Command::Classify(a) => doc(&classify(&a.get()?)),
        Command::Normalize(a) => doc(&normalize(&a.get()?)?),
        Command::Transport { alpha, to_origin, perm, samples } => {
            let alpha = alpha.get()?;
            let perm = match perm {
                None => Permutation::IDENTITY,
                Some(p) => Permutation::new([p[0], p[1], p[2]])
                    .ok_or_else(|| CliError::Validation("--perm must be a permutation of 0 1 2".into()))?,
            };
            let p = perm.apply(tri(to_origin));
            let maps = [
                MobiusMap::involution(p[0])?,
                MobiusMap::involution(p[1])?,
                MobiusMap::involution(p[2])?,
            ];
            let m = TridiscAutomorphism { perm, maps };
            doc(&transport_report(&alpha, &m, *samples)?)
        }
        Command::Distance(d) => distance(d)?,
        Command::Geodesic(g) => geodesic(g)?,
        Command::Lens { ab, gamma } => {
            let l = ab.lens()?;
            let corners = lens_corners(&l).ok();
            let mut out = json!({
                "a": l.a,
                "b": l.b,
                "nonempty": l.is_nonempty(),
                "corners": corners.map(|(p, m)| [p, m]),
            });
            if let Some(g) = gamma {
                let p = l.point(*g);
                let inside = lens_contains(&l, &p);
                out["gamma"] = json!(g);
                out["contains"] = json!(inside);
                if inside {
                    let (plus, minus) = solve_omega_eta(&l, &p)?;
                    out["gamma2"] = json!(l.gamma2(*g));
                    out["omega_eta"] = json!([plus, minus]);
                    out["admissible_arc"] = json!(admissible_arc(&l, *g));
                }
            }
            Output::Doc(out)
        }
        Command::VerifyLempert { ab, samples, seed } => {
            let d = ab.domain()?;
            if !d.is_interesting() {
                return Err(CliError::Validation("(a, b) is in the retract regime: {a, b, 1} violates the strict triangle inequality".into()));
            }
            let report = lempert_verify_with(&d, *samples, *seed, &tols)?;
            let failures = report.failures;
            let out = doc(&report);
            if failures > 0 {
                emit(&out, cli.format)?;
                return Err(CliError::Failures(failures));
            }
            out
        }
        Command::Convexity { ab } => doc(&linear_convexity_quadratic(&ab.domain()?)),
        Command::Ball(b) => ball(b)?,
        Command::Universal(u) => universal(u)?,
        Command::Sweep {
            a_min,
            a_max,
            a_steps,
            b_min,
            b_max,
            b_steps,
            samples,
            seed,
            allow_degenerate,
            timing,
        } => {
            let spec = SweepSpec {
                a_min: *a_min,
                a_max: *a_max,
                a_steps: *a_steps,
                b_min: *b_min,
                b_max: *b_max,
                b_steps: *b_steps,
                samples: *samples,
                seed: *seed,
                allow_degenerate: *allow_degenerate,
            };
            let rows = sweep_with(&spec, *timing, &tols)?;
            if any_failed(&rows) {
                let n = rows.iter().map(|r| r.failures).sum();
                emit(&Output::Sweep(rows), cli.format)?;
                return Err(CliError::Failures(n));
            }
            Output::Sweep(rows)
        }
        Command::Plotdata(p) => Output::Table(match p {
            PlotCmd::Lens { ab, points } => lens_polyline(&ab.lens()?, *points)?,
            PlotCmd::Arc { ab, gamma, points } => arc_samples(&ab.lens()?, *gamma, *points),
            PlotCmd::Indicatrix { ab, directions, phase } => indicatrix_profile(&ab.domain()?, *directions, *phase),
            PlotCmd::Locus { n } => locus_grid(*n),
        }),
        Command::Schema { name } => match name {
            None => Output::Doc(json!(schema::NAMES)),
            Some(n) => Output::Doc(serde_json::from_str(schema::get(n)).expect("shipped schemas are valid JSON")),
        },
    })
}

fn distance(d: &DistanceCmd) -> Result<Output, CliError> {
    Ok(match d {
        DistanceCmd::Dab { ab, z, w } => {
            let dom = ab.domain()?;
            Output::Doc(json!({ "c": c_dab(&dom, pair(z), pair(w))? }))
        }
        DistanceCmd::Polydisc { z, w } => {
            for p in [z, w] {
                for c in p.iter() {
                    DiscPoint::new(*c)?;
                }
            }
            Output::Doc(json!({ "c": c_polydisc(z, w)? }))
        }
        DistanceCmd::Variety { alpha, z, w } => {
            let cert = geodesic_between(&alpha.get()?, &TriPoint::new(z[0], z[1], z[2])?, &TriPoint::new(w[0], w[1], w[2])?)?;
            Output::Doc(json!({
                "c": cert.caratheodory_value,
                "l": cert.lempert_value,
                "residual": cert.residual,
            }))
        }
        DistanceCmd::Ball { z, w } => {
            let (z, w) = (BallPoint::new(z.clone())?, BallPoint::new(w.clone())?);
            if z.dim() != w.dim() {
                return Err(CliError::Validation("points must have equal dimension".into()));
            }
            Output::Doc(json!({
                "c_star": c_star_ball(w.coords(), z.coords()),
                "c": c_ball(w.coords(), z.coords()),
            }))
        }
    })
}

fn geodesic(g: &GeodesicCmd) -> Result<Output, CliError> {
    Ok(match g {
        GeodesicCmd::Through { ab, z } => {
            let v = NormalVariety::new(ab.a, ab.b)?;
            doc(&geodesic_through(&v, &TriPoint::new(z[0], z[1], z[2])?)?)
        }
        GeodesicCmd::Dab { ab, w } => {
            let d = ab.domain()?;
            let z = lift_to_m(&d, pair(w))?;
            doc(&geodesic_through(&d.variety(), &z)?)
        }
        GeodesicCmd::Between { alpha, z, w } => doc(&geodesic_between(
            &alpha.get()?,
            &TriPoint::new(z[0], z[1], z[2])?,
            &TriPoint::new(w[0], w[1], w[2])?,
        )?),
        GeodesicCmd::Phi { ab, gamma, branch } => {
            let l = ab.lens()?;
            doc(&phi_gamma(&l, &l.point(*gamma), (*branch).into())?)
        }
        GeodesicCmd::Blaschke { ab, gamma, omega } => doc(&blaschke_family(&ab.lens()?, *gamma, *omega)?),
        GeodesicCmd::Balanced { z, w } => doc(&balanced_pair(pair(z), pair(w))?),
    })
}

fn ball(b: &BallCmd) -> Result<Output, CliError> {
    Ok(match b {
        BallCmd::Automorphism { a, z } => {
            let r = ball_automorphism(&BallPoint::new(a.clone())?, &BallPoint::new(z.clone())?)?;
            Output::Doc(json!({ "image": r }))
        }
        BallCmd::PsiL { base, direction, z } => {
            let e = psi_l(&ComplexLine::new(base.clone(), direction.clone())?)?;
            let mut out = json!({ "extremal": e });
            if let Some(z) = z {
                let p = BallPoint::new(z.clone())?;
                if p.dim() != e.direction.len() {
                    return Err(CliError::Validation("point dimension differs from the line".into()));
                }
                out["value"] = json!(e.eval(p.coords()));
            }
            Output::Doc(out)
        }
        BallCmd::CStar { w, z } => {
            let (w, z) = (BallPoint::new(w.clone())?, BallPoint::new(z.clone())?);
            if w.dim() != z.dim() {
                return Err(CliError::Validation("points must have equal dimension".into()));
            }
            Output::Doc(json!({ "c_star": c_star_ball(w.coords(), z.coords()) }))
        }
        BallCmd::F { z } => Output::Doc(json!({ "value": f_left_inverse(pair(z))? })),
        BallCmd::Ft { t, lambda } => {
            DiscPoint::new(*lambda)?;
            Output::Doc(json!({ "point": f_t_geodesic(*t, *lambda) }))
        }
        BallCmd::Locus { z } => doc(&boundary_locus_check(pair(z))?),
    })
}

fn universal(u: &UniversalCmd) -> Result<Output, CliError> {
    Ok(match u {
        UniversalCmd::Dab { ab, z, w, x } => {
            let set = UniversalSet::dab(&ab.domain()?);
            let mut pts = vec![z.clone()];
            if let Some(w) = w {
                pts.push(w.clone());
            }
            let e = universal_embed(&set, &pts)?;
            let mut out = json!({ "images": e.images });
            if let Some(w) = w {
                out["c"] = json!(universal_c(&set, z, w)?);
            }
            if let Some(x) = x {
                out["gamma"] = json!(universal_gamma(&set, z, x)?);
                out["kappa_origin_formula"] = json!(kappa_dab_origin(&ab.domain()?, pair(x)));
            }
            Output::Doc(out)
        }
        UniversalCmd::B2 { a, z } => {
            let m = universal_member_b2(pair(a))?;
            let set = UniversalSet::new(vec![m], DomainTag::Ball { n: 2 })?;
            let e = universal_embed(&set, &[z.clone()])?;
            Output::Doc(json!({ "value": e.images[0][0] }))
        }
    })
}

/// Flattens a JSON object into a one-row CSV with dotted column names.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn emit(out: &Output, format: Option<Format>) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match (out, format) {
        (Output::Doc(v), None | Some(Format::Json)) => {
            serde_json::to_writer_pretty(&mut lock, v).map_err(io::Error::from)?;
            writeln!(lock)?;
        }
        (Output::Doc(v), Some(Format::Csv)) => {
            let mut cells = vec![];
            flatten("", v, &mut cells);
            if cells.len() == 1 && cells[0].0.is_empty() {
                cells[0].0 = "value".into();
            }
            let mut w = csv::Writer::from_writer(&mut lock);
            w.write_record(cells.iter().map(|c| c.0.as_str())).map_err(csv_io)?;
            w.write_record(cells.iter().map(|c| c.1.as_str())).map_err(csv_io)?;
            w.flush()?;
        }
        (Output::Table(t), None | Some(Format::Csv)) => t.write_csv(&mut lock).map_err(csv_io)?,
        (Output::Table(t), Some(Format::Json)) => {
            let rows: Vec<Value> = t
                .rows
                .iter()
                .map(|r| Value::Object(t.header.iter().zip(r).map(|(h, c)| (h.to_string(), cell_json(c))).collect()))
                .collect();
            serde_json::to_writer_pretty(&mut lock, &rows).map_err(io::Error::from)?;
            writeln!(lock)?;
        }
        (Output::Sweep(rows), None | Some(Format::Csv)) => write_csv(rows, &mut lock)?,
        (Output::Sweep(rows), Some(Format::Json)) => {
            serde_json::to_writer_pretty(&mut lock, rows).map_err(io::Error::from)?;
            writeln!(lock)?;
        }
    }
    Ok(())
}

fn csv_io(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::Io(e),
        other => compute("io", format!("{other:?}")),
    }
}

/// Table cells are numbers, booleans or text.
fn cell_json(c: &str) -> Value {
    if c.is_empty() {
        return Value::Null;
    }
    if let Ok(b) = c.parse::<bool>() {
        return Value::Bool(b);
    }
    if let Ok(i) = c.parse::<i64>() {
        return json!(i);
    }
    match c.parse::<f64>() {
        Ok(x) if x.is_finite() => json!(x),
        _ => Value::String(c.to_string()),
    }
}

fn error_doc(e: &CliError) -> Value {
    let (kind, code) = match e {
        CliError::Validation(_) => ("ValidationError".to_string(), 2),
        CliError::Compute { kind, .. } => (kind.clone(), 1),
        CliError::Failures(_) => ("VerificationFailure".to_string(), 1),
        CliError::Io(_) => ("IoError".to_string(), 1),
    };
    json!({ "error": { "kind": kind, "message": e.to_string(), "exit_code": code } })
}

/// Negative numbers such as `-0.2,0.1` would otherwise parse as short flags;
/// a leading space keeps them values and is trimmed by the parsers.
fn shield_negatives(args: impl Iterator<Item = String>) -> Vec<String> {
    args.map(|a| {
        let mut ch = a.chars();
        match (ch.next(), ch.next()) {
            (Some('-'), Some(d)) if d.is_ascii_digit() || d == '.' => format!(" {a}"),
            _ => a,
        }
    })
    .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(shield_negatives(std::env::args()));
    if let Some(n) = cli.threads {
        if n == 0 {
            let e = CliError::Validation("--threads must be positive".into());
            let _ = writeln!(io::stdout(), "{}", error_doc(&e));
            return ExitCode::from(2);
        }
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli).and_then(|out| emit(&out, cli.format)) {
        Ok(()) => ExitCode::SUCCESS,
        // the reader went away; nothing left to report to
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            let code = match e {
                CliError::Validation(_) => 2,
                _ => 1,
            };
            if !matches!(e, CliError::Failures(_)) {
                let _ = writeln!(io::stdout(), "{}", error_doc(&e));
            }
            eprintln!("carageo: {e}");
            ExitCode::from(code)
        }
    }
}
