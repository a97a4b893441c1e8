//! Point clouds for external plotting: the lens boundary, admissible
//! `ω`-arcs, the indicatrix of `D_{a,b}` at the origin and the boundary
//! locus of `|F| = 1` on the sphere of `ℂ²`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use crate::ball::{boundary_locus_check, locus_condition};
use crate::discgeom::C;
use crate::geodesics::{admissibility_margin, admissible_arc, lens_corners, GeodesicError, Lens};
use crate::metrics::kappa_dab_origin;
use crate::varieties::DomainDab;

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl PlotTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Closed boundary polyline of the lens: the corner in the upper half-plane,
/// the arc of `|γ₁| = 1`, the lower corner, the arc of `|aγ₁ + 1| = b`.
/// `points` interior samples per arc.
pub fn lens_polyline(l: &Lens, points: usize) -> Result<PlotTable, GeodesicError> {
    let (up, down) = lens_corners(l)?;
    let mut rows = vec![];
    let mut push = |part: &str, g: C| {
        let idx = rows.len();
        rows.push(vec![idx.to_string(), part.to_string(), num(g.re), num(g.im)]);
    };
    push("corner", up);
    // unit-circle arc through -1
    let t0 = up.arg();
    for k in 1..=points {
        let t = t0 + (TAU - 2.0 * t0) * k as f64 / (points + 1) as f64;
        push("unit-arc", C::from_polar(1.0, t));
    }
    push("corner", down);
    // second circle arc through (b-1)/a
    let center = C::new(-1.0 / l.a, 0.0);
    let r = l.b / l.a;
    let p0 = (up - center).arg();
    for k in 1..=points {
        let t = -p0 + 2.0 * p0 * k as f64 / (points + 1) as f64;
        push("b-arc", center + C::from_polar(r, t));
    }
    Ok(PlotTable {
        header: vec!["index", "part", "re", "im"],
        rows,
    })
}

/// `θ` samples of the admissibility margin for fixed `γ`, with the
/// closed-form arc membership alongside.
pub fn arc_samples(l: &Lens, gamma: C, points: usize) -> PlotTable {
    let arcs = admissible_arc(l, gamma);
    let rows = (0..points)
        .map(|k| {
            let theta = TAU * k as f64 / points as f64;
            let omega = C::from_polar(1.0, theta);
            let margin = admissibility_margin(l, gamma, omega);
            vec![
                num(theta),
                num(omega.re),
                num(omega.im),
                num(margin),
                (margin > 0.0).to_string(),
                arcs.iter().any(|a| a.contains(theta)).to_string(),
            ]
        })
        .collect();
    PlotTable {
        header: vec!["theta", "omega_re", "omega_im", "margin", "admissible", "in_arc"],
        rows,
    }
}

/// Boundary of the indicatrix along `X(θ) = (cos θ, e^{iφ} sin θ)`: the
/// radius is `1/κ(0; X(θ))`.
pub fn indicatrix_profile(d: &DomainDab, directions: usize, phase: f64) -> PlotTable {
    let rows = (0..directions)
        .map(|k| {
            let theta = TAU * k as f64 / directions as f64;
            let x = [C::new(theta.cos(), 0.0), C::from_polar(theta.sin(), phase)];
            let radius = 1.0 / kappa_dab_origin(d, x);
            vec![
                num(theta),
                num(radius),
                num(radius * x[0].re),
                num(radius * x[0].im),
                num(radius * x[1].re),
                num(radius * x[1].im),
            ]
        })
        .collect();
    PlotTable {
        header: vec!["theta", "radius", "x1_re", "x1_im", "x2_re", "x2_im"],
        rows,
    }
}

/// Grid `z = (cos s · e^{iθ₁}, sin s · e^{iθ₂})` on the unit sphere of `ℂ²`
/// with `n` values of each parameter, flagged by the sign of
/// `Im(z₂(1 - z̄₁))`.
pub fn locus_grid(n: usize) -> PlotTable {
    let mut rows = vec![];
    for i in 0..n {
        let s = if n > 1 { FRAC_PI_2 * i as f64 / (n - 1) as f64 } else { 0.0 };
        for j in 0..n {
            let t1 = TAU * j as f64 / n as f64;
            for k in 0..n {
                let t2 = TAU * k as f64 / n as f64;
                let z = [C::from_polar(s.cos(), t1), C::from_polar(s.sin(), t2)];
                let cond = locus_condition(z);
                let sign = if cond > 0.0 { 1 } else if cond < 0.0 { -1 } else { 0 };
                let (on, modulus) = match boundary_locus_check(z) {
                    Ok(chk) => (chk.on_locus.to_string(), chk.modulus.map(num).unwrap_or_default()),
                    Err(_) => (String::new(), String::new()),
                };
                rows.push(vec![
                    num(s),
                    num(t1),
                    num(t2),
                    num(cond),
                    sign.to_string(),
                    on,
                    modulus,
                ]);
            }
        }
    }
    PlotTable {
        header: vec!["s", "theta1", "theta2", "condition", "sign", "on_locus", "abs_f"],
        rows,
    }
}
