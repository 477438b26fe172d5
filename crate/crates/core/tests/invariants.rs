use proptest::prelude::*;

use vecgas::domain::{Configuration, InteractionMatrix, MassVector};
use vecgas::fekete::{log_vdm, scaling_check, VdmMode};
use vecgas::metric::{bl_distance, bl_distance_vector};
use vecgas::potential::{cross_energy, ComponentMeasure, DiscreteVectorMeasure};
use vecgas::Complex64;

fn points(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y)| Complex64::new(x, y)), n)
}

fn atoms(n: usize) -> impl Strategy<Value = ComponentMeasure> {
    (points(n), proptest::collection::vec(0.05f64..1.0, n)).prop_map(|(z, w)| {
        let total: f64 = w.iter().sum();
        ComponentMeasure::atoms(z, w.iter().map(|x| x / total).collect()).unwrap()
    })
}

fn collinear(n: usize) -> impl Strategy<Value = ComponentMeasure> {
    (proptest::collection::vec(-1.0f64..1.0, n), proptest::collection::vec(0.05f64..1.0, n)).prop_map(|(x, w)| {
        let total: f64 = w.iter().sum();
        ComponentMeasure::atoms(x.iter().map(|&t| Complex64::new(t, 0.0)).collect(), w.iter().map(|v| v / total).collect())
            .unwrap()
    })
}

fn matrix() -> impl Strategy<Value = InteractionMatrix> {
    (0.2f64..2.0, 0.2f64..2.0, -1.0f64..1.0).prop_map(|(a, b, t)| {
        let off = t * (a * b).sqrt();
        InteractionMatrix::new(vec![vec![a, off], vec![off, b]]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bl_is_a_metric_on_the_line(a in collinear(6), b in collinear(5), c in collinear(7)) {
        let ab = bl_distance(&a, &b).unwrap();
        let ba = bl_distance(&b, &a).unwrap();
        let bc = bl_distance(&b, &c).unwrap();
        let ac = bl_distance(&a, &c).unwrap();
        prop_assert!(bl_distance(&a, &a).unwrap().abs() < 1e-12);
        prop_assert!((ab - ba).abs() < 1e-10);
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!(ab <= 2.0 + 1e-12);
    }

    #[test]
    fn bl_is_a_metric_in_the_plane(a in atoms(5), b in atoms(4), c in atoms(6)) {
        let ab = bl_distance(&a, &b).unwrap();
        let bc = bl_distance(&b, &c).unwrap();
        let ac = bl_distance(&a, &c).unwrap();
        prop_assert!((ab - bl_distance(&b, &a).unwrap()).abs() < 1e-8);
        prop_assert!(ac <= ab + bc + 1e-8);
    }

    #[test]
    fn bl_is_invariant_under_common_translation(a in atoms(4), b in atoms(4), dx in -3.0f64..3.0, dy in -3.0f64..3.0) {
        let shift = Complex64::new(dx, dy);
        let before = bl_distance(&a, &b).unwrap();
        let after = bl_distance(&a.translated(shift), &b.translated(shift)).unwrap();
        prop_assert!((before - after).abs() < 1e-8);
    }

    #[test]
    fn cross_energy_is_bilinear_in_mass(a in atoms(4), b in atoms(5), c in matrix(), s in 0.1f64..3.0, t in 0.1f64..3.0) {
        let mu = DiscreteVectorMeasure::from_components(vec![a.clone(), b.clone()]);
        let nu = DiscreteVectorMeasure::from_components(vec![b.translated(Complex64::new(5.0, 0.0)), a.translated(Complex64::new(-5.0, 1.0))]);
        let base = cross_energy(&mu, &nu, &c).unwrap();
        let scaled_mu = DiscreteVectorMeasure::from_components(vec![a.scaled_mass(s), b.scaled_mass(s)]);
        let scaled_nu = DiscreteVectorMeasure::from_components(nu.components().iter().map(|m| m.scaled_mass(t)).collect());
        let scaled = cross_energy(&scaled_mu, &scaled_nu, &c).unwrap();
        prop_assert!((scaled - s * t * base).abs() <= 1e-10 * (1.0 + base.abs() * s * t));
    }

    #[test]
    fn vandermonde_is_translation_invariant(z1 in points(4), z2 in points(3), c in matrix(), dx in -2.0f64..2.0, dy in -2.0f64..2.0) {
        let z = Configuration::from_points(vec![z1, z2]);
        let r = MassVector::ones(2);
        let m = [4, 3];
        let shift = Complex64::new(dx, dy);
        let a = log_vdm(&z, &c, &m, &r, None, VdmMode::Strict).unwrap().log_vdm;
        let b = log_vdm(&z.translated(shift), &c, &m, &r, None, VdmMode::Strict).unwrap().log_vdm;
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn vandermonde_scales_with_the_pair_weight(z1 in points(3), z2 in points(5), c in matrix(), log_mod in -2.0f64..2.0, arg in 0.0f64..std::f64::consts::TAU) {
        let z = Configuration::from_points(vec![z1, z2]);
        let check = scaling_check(&z, Complex64::from_polar(log_mod.exp(), arg), &c, &[3, 5], &MassVector::ones(2)).unwrap();
        prop_assert!((check.lhs - check.rhs).abs() <= 1e-10 * (1.0 + check.rhs.abs()));
    }

    #[test]
    fn empirical_measures_carry_the_masses(z1 in points(3), z2 in points(6), r1 in 0.2f64..3.0, r2 in 0.2f64..3.0) {
        let z = Configuration::from_points(vec![z1, z2]);
        let r = MassVector::new(vec![r1, r2]).unwrap();
        let mu = DiscreteVectorMeasure::empirical(&z, &r).unwrap();
        prop_assert!((mu.component(0).mass() - r1).abs() < 1e-12);
        prop_assert!((mu.component(1).mass() - r2).abs() < 1e-12);
        prop_assert!(bl_distance_vector(&mu, &mu).unwrap().abs() < 1e-12);
    }
}
