use carageo::ball::{
    ball_automorphism_raw, boundary_modulus_locus, c_star_ball, f_left_inverse, f_t_geodesic,
    locus_condition, norm_sqr, psi_l, ComplexLine,
};
use carageo::discgeom::rho;
use carageo::sampling::{ball_point, disc_point, gaussian_vec, rng, sphere_point};
use carageo::C;
use proptest::prelude::*;
use rand::Rng;

fn dim() -> impl Strategy<Value = usize> {
    2usize..=3
}

proptest! {
    #[test]
    fn automorphism_is_an_involution(seed in any::<u64>(), n in dim()) {
        let mut r = rng(seed, 0);
        let (a, z) = (ball_point(&mut r, n, 0.99), ball_point(&mut r, n, 0.99));
        let back = ball_automorphism_raw(&a, &ball_automorphism_raw(&a, &z));
        for k in 0..n {
            prop_assert!((back[k] - z[k]).norm() < 1e-12);
        }
        let at_a = ball_automorphism_raw(&a, &a);
        prop_assert!(norm_sqr(&at_a) < 1e-24);
    }

    #[test]
    fn automorphism_is_an_isometry(seed in any::<u64>(), n in dim()) {
        let mut r = rng(seed, 1);
        let (a, z, w) = (ball_point(&mut r, n, 0.95), ball_point(&mut r, n, 0.95), ball_point(&mut r, n, 0.95));
        let before = c_star_ball(&w, &z);
        let after = c_star_ball(&ball_automorphism_raw(&a, &w), &ball_automorphism_raw(&a, &z));
        prop_assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn psi_l_is_extremal_along_its_line(seed in any::<u64>(), n in dim()) {
        let mut r = rng(seed, 2);
        let base = ball_point(&mut r, n, 0.9);
        let line = ComplexLine::new(base.clone(), gaussian_vec(&mut r, n)).unwrap();
        let f = psi_l(&line).unwrap();
        let mut on_line = || loop {
            let p = line.point(disc_point(&mut r, 2.0));
            if norm_sqr(&p) < 0.99 {
                return p;
            }
        };
        let (p, q) = (on_line(), on_line());
        let want = c_star_ball(&p, &q).atanh();
        let got = rho(f.eval(&p), f.eval(&q)).unwrap();
        prop_assert!((got - want).abs() < 1e-9 * want.max(1.0), "{got} vs {want}");
        let z = ball_point(&mut r, n, 0.999);
        prop_assert!(f.eval(&z).norm() < 1.0);
    }

    #[test]
    fn left_inverse_undoes_f_t_up_to_automorphism(
        t in prop::sample::select(vec![0.0, 0.5, 1.0, 2.0, 10.0]),
        l1 in (0.0..0.99f64, 0.0..std::f64::consts::TAU),
        l2 in (0.0..0.99f64, 0.0..std::f64::consts::TAU),
    ) {
        let (l1, l2) = (C::from_polar(l1.0, l1.1), C::from_polar(l2.0, l2.1));
        let (g1, g2) = (f_left_inverse(f_t_geodesic(t, l1)).unwrap(), f_left_inverse(f_t_geodesic(t, l2)).unwrap());
        let want = rho(l1, l2).unwrap();
        prop_assert!((rho(g1, g2).unwrap() - want).abs() < 1e-10 * want.max(1.0));
        if t == 0.0 {
            prop_assert!((g1 - l1).norm() < 1e-15);
        }
    }

    #[test]
    fn f_t_stays_inside_the_ball(t in 0.0..50.0f64, seed in any::<u64>()) {
        let lambda = disc_point(&mut rng(seed, 3), 1.0 - 1e-6);
        let z = f_t_geodesic(t, lambda);
        prop_assert!(norm_sqr(&z) < 1.0);
    }

    #[test]
    fn locus_agrees_with_boundary_modulus(seed in any::<u64>()) {
        let mut r = rng(seed, 4);
        let z = sphere_point(&mut r, 2);
        let z = [z[0], z[1]];
        prop_assume!((z[0] - 1.0).norm() > 1e-6);
        let on = boundary_modulus_locus(z).unwrap();
        let modulus = f_left_inverse(z).unwrap().norm();
        prop_assert!(modulus <= 1.0 + 1e-12);
        if on {
            prop_assert!((modulus - 1.0).abs() < 1e-8);
        }
        // 1 - |F| grows like the square of the locus condition
        if locus_condition(z).abs() > 1e-3 {
            prop_assert!(1.0 - modulus >= 1e-8, "{z:?}: |F| = {modulus}");
        }
    }

    #[test]
    fn locus_points_have_unimodular_image(seed in any::<u64>()) {
        let mut r = rng(seed, 5);
        let z1 = disc_point(&mut r, 1.0);
        prop_assume!((z1 - 1.0).norm() > 1e-3);
        let s = if r.gen::<bool>() { 1.0 } else { -1.0 };
        let z2 = s * (1.0 - z1.norm_sqr()).sqrt() * (1.0 - z1) / (1.0 - z1).norm();
        let z = [z1, z2];
        prop_assert!(boundary_modulus_locus(z).unwrap());
        prop_assert!((f_left_inverse(z).unwrap().norm() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn left_inverse_is_indeterminate_at_the_tangency() {
    assert!(f_left_inverse([C::new(1.0, 0.0), C::new(0.0, 0.0)]).is_err());
    assert_eq!(f_t_geodesic(3.0, C::new(1.0, 0.0)), [C::new(1.0, 0.0), C::new(0.0, 0.0)]);
}
