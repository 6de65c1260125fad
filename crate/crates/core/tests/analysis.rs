use midpoint_langevin::analysis::{
    coupled_error_experiment, effective_diameter, gaussian_w2, stationary_error_study, CoupledConfig,
};
use midpoint_langevin::samplers::{Method, Schedule};
use midpoint_langevin::targets::{quadratic_target, QuadraticTarget};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn gaussian(d: usize) -> impl Strategy<Value = (DVector<f64>, DMatrix<f64>)> {
    (
        prop::collection::vec(-2.0f64..2.0, d),
        prop::collection::vec(-1.0f64..1.0, d * d),
    )
        .prop_map(move |(m, a)| {
            let a = DMatrix::from_vec(d, d, a);
            let cov = &a * a.transpose() + DMatrix::identity(d, d) * 0.01;
            (DVector::from_vec(m), cov)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w2_is_symmetric((m1, c1) in gaussian(3), (m2, c2) in gaussian(3)) {
        let ab = gaussian_w2(&m1, &c1, &m2, &c2).unwrap();
        let ba = gaussian_w2(&m2, &c2, &m1, &c1).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0), "{} vs {}", ab, ba);
    }

    #[test]
    fn w2_satisfies_the_triangle_inequality(a in gaussian(3), b in gaussian(3), c in gaussian(3)) {
        let ab = gaussian_w2(&a.0, &a.1, &b.0, &b.1).unwrap();
        let bc = gaussian_w2(&b.0, &b.1, &c.0, &c.1).unwrap();
        let ac = gaussian_w2(&a.0, &a.1, &c.0, &c.1).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn w2_of_commuting_covariances(s1 in prop::collection::vec(0.01f64..5.0, 4), s2 in prop::collection::vec(0.01f64..5.0, 4)) {
        let m = DVector::zeros(4);
        let c1 = DMatrix::from_diagonal(&DVector::from_vec(s1.clone()));
        let c2 = DMatrix::from_diagonal(&DVector::from_vec(s2.clone()));
        let want = s1.iter().zip(&s2).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum::<f64>().sqrt();
        let got = gaussian_w2(&m, &c1, &m, &c2).unwrap();
        prop_assert!((got - want).abs() <= 1e-7 * want.max(1.0), "{} vs {}", got, want);
    }
}

#[test]
fn outputting_the_mode_gives_unit_normalized_error() {
    let target = quadratic_target(&[2.0; 4], &[1.0, 0.0, -1.0, 0.5]).unwrap();
    let s = Schedule::explicit(0.05, 0, 2.0, 1, 2).unwrap();
    let r = stationary_error_study(&target, Method::Rmm, &s, 200, 0).unwrap();
    assert!((r.normalized - 1.0).abs() < 1e-12);
    assert!((effective_diameter(&target) - 2f64.sqrt()).abs() < 1e-15);
    assert!(!r.low_power);
}

#[test]
fn midpoint_slope_exceeds_exponential_euler_slope() {
    for (kappa, seed) in [(5.0, 1), (20.0, 2)] {
        let target = QuadraticTarget::with_condition_number(3, 1.0, kappa).unwrap();
        let mut cfg = CoupledConfig::new(vec![0.05, 0.1, 0.2], 5.0);
        cfg.chains = 8;
        cfg.seed = seed;
        cfg.reference_refinement = 32;
        let rep = coupled_error_experiment(&target, &cfg).unwrap();
        let a = rep.slope(Method::Rmm).unwrap();
        let b = rep.slope(Method::ExpEulerUld).unwrap();
        assert!(a > b, "κ={kappa}: {a} vs {b}");
    }
}

#[test]
fn coupled_experiment_is_reproducible_and_accepts_all_kinetic_methods() {
    let target = quadratic_target(&[1.0, 2.0], &[0.0, 0.0]).unwrap();
    let mut cfg = CoupledConfig::new(vec![0.1, 0.2], 2.0);
    cfg.chains = 3;
    cfg.reference_refinement = 32;
    cfg.methods = vec![Method::Rmm, Method::RmmParallel, Method::ExpEulerUld, Method::EulerUld];
    let a = coupled_error_experiment(&target, &cfg).unwrap();
    let b = coupled_error_experiment(&target, &cfg).unwrap();
    assert_eq!(a.rows.len(), 8);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.mean_error.to_bits(), y.mean_error.to_bits());
    }
    cfg.methods = vec![Method::Lmc];
    assert!(coupled_error_experiment(&target, &cfg).is_err());
}
