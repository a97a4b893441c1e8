use carageo::ball::{norm_sqr, psi_l, universal_member_b2, ComplexLine};
use carageo::discgeom::{Quadratic, MobiusMap};
use carageo::geodesics::{AnalyticDisc, DiscTag, RationalMap};
use carageo::metrics::{sample_dab, DomainTag, Member};
use carageo::oracle::{
    caratheodory_lower_bound, finite_diff_derivative, lempert_upper_bound, polynomial_roots,
    quadratic_roots, SampleGrid, Region,
};
use carageo::sampling::{ball_point, circle_point, disc_point, gaussian_vec, rng};
use carageo::varieties::DomainDab;
use carageo::C;
use proptest::prelude::*;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

fn check_member(m: &Member, z: &[C], x: &[C]) -> Result<(), TestCaseError> {
    let f = |p: &[C]| m.eval(p).unwrap();
    let fd = finite_diff_derivative(&f, z, x, 1e-6).unwrap();
    let exact = m.derivative(z, x).unwrap();
    prop_assert!((fd - exact).norm() < 1e-6 * exact.norm().max(1.0), "{m:?}: {fd} vs {exact}");
    Ok(())
}

proptest! {
    #[test]
    fn member_derivatives_match_differences(seed in any::<u64>()) {
        let mut r = rng(seed, 0);
        let d = DomainDab::new(0.5 + disc_point(&mut r, 1.0).norm(), 0.9).unwrap();
        let z = sample_dab(&d, seed, 1);
        let x = gaussian_vec(&mut r, 2);
        let mobius = MobiusMap::new(disc_point(&mut r, 0.9), circle_point(&mut r)).unwrap();
        for m in [
            Member::Coordinate { index: 0 },
            Member::Coordinate { index: 1 },
            Member::Fab { a: d.a, b: d.b },
            Member::Fab { a: d.a, b: d.b }.post_mobius(mobius),
        ] {
            check_member(&m, &z, &x)?;
        }
        let w = ball_point(&mut r, 2, 0.95);
        let a = ball_point(&mut r, 2, 0.95);
        prop_assume!(norm_sqr(&a) > 1e-6);
        let line = ComplexLine::new(ball_point(&mut r, 2, 0.9), gaussian_vec(&mut r, 2)).unwrap();
        for m in [
            Member::Linear { coeffs: gaussian_vec(&mut r, 2) },
            universal_member_b2([a[0], a[1]]).unwrap(),
            Member::BallLeftInverse,
            Member::PsiL { extremal: psi_l(&line).unwrap() },
        ] {
            check_member(&m, &w, &x)?;
        }
    }

    #[test]
    fn lower_bound_meets_upper_bound_on_ball_lines(seed in any::<u64>(), n in 2usize..=3) {
        let mut r = rng(seed, 2);
        let line = ComplexLine::new(ball_point(&mut r, n, 0.9), gaussian_vec(&mut r, n)).unwrap();
        let f = psi_l(&line).unwrap();
        let a = f.minimal_point.coords().to_vec();
        let s = f.line_scale();
        let comps: Vec<RationalMap> = (0..n)
            .map(|j| RationalMap::new(Quadratic::new(ZERO, s * line.direction[j], a[j]), Quadratic::constant(ONE)))
            .collect();
        let disc = AnalyticDisc::new(comps, DiscTag::Flat, serde_json::Value::Null).unwrap();
        let (mu, nu) = (disc_point(&mut r, 0.98 * s), disc_point(&mut r, 0.98 * s));
        let p: Vec<C> = a.iter().zip(&line.direction).map(|(x, d)| x + mu * d).collect();
        let q: Vec<C> = a.iter().zip(&line.direction).map(|(x, d)| x + nu * d).collect();
        let psi = |z: &[C]| f.eval(z);
        let lower = caratheodory_lower_bound(&DomainTag::Ball { n }, &p, &q, &[&psi]).unwrap();
        let upper = lempert_upper_bound(&disc, &p, &q, &|z: &[C]| norm_sqr(z) < 1.0).unwrap();
        prop_assert!(lower <= upper + 1e-9);
        prop_assert!((lower - upper).abs() < 1e-9 * upper.max(1.0), "{lower} vs {upper}");
    }

    #[test]
    fn companion_roots_agree_with_the_quadratic_formula(seed in any::<u64>()) {
        let mut r = rng(seed, 3);
        let c = gaussian_vec(&mut r, 3);
        let q = Quadratic::new(c[0], c[1], c[2]);
        let mut a = quadratic_roots(&q).unwrap();
        let mut b = polynomial_roots(&[c[2], c[1], c[0]]);
        prop_assert_eq!(a.len(), b.len());
        let key = |z: &C| (z.re, z.im);
        a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() < 1e-8 * x.norm().max(1.0));
        }
    }
}

#[test]
fn sample_grids_are_deterministic_and_in_region() {
    for region in [Region::Lens { a: 0.8, b: 0.8 }, Region::Polydisc { n: 3 }, Region::Ball { n: 2 }, Region::Circle] {
        let g = SampleGrid { seed: 11, count: 50, region };
        assert_eq!(g.points(), g.points());
        for p in g.points() {
            match region {
                Region::Lens { a, b } => assert!(p[0].norm() < 1.0 && (a * p[0] + 1.0).norm() < b),
                Region::Polydisc { .. } => assert!(p.iter().all(|c| c.norm() < 1.0)),
                Region::Ball { .. } => assert!(norm_sqr(&p) < 1.0),
                Region::Circle => assert!((p[0].norm() - 1.0).abs() < 1e-15),
            }
        }
    }
}
