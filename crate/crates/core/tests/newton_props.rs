use nalgebra::DVector;
use proptest::prelude::*;

use polysphere::newton::{certify, newton_iterate, newton_step, CertConfig, CertMode, NewtonConfig};
use polysphere::polysys::{tangent_basis, PolynomialSystem, SpherePoint};
use polysphere::verify::planted_root_system;

fn point(raw: &[f64]) -> Option<SpherePoint> {
    SpherePoint::normalize(DVector::from_column_slice(raw)).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The Newton correction lies in the tangent space and solves the linearised system
    // with minimal norm.
    #[test]
    fn step_is_tangent_min_norm_solution(seed in 0u64..10_000, raw in prop::collection::vec(-1.0f64..1.0, 4)) {
        let x = match point(&raw) { Some(x) if raw.iter().map(|v| v * v).sum::<f64>() > 1e-2 => x, _ => return Ok(()) };
        let sys = PolynomialSystem::sample(4, &[2, 3], seed).unwrap();
        let r = newton_step(&sys, &x, &NewtonConfig::default()).unwrap();
        prop_assume!(!r.degenerate);
        prop_assert!(r.step.dot(x.coords()).abs() < 1e-10 * (1.0 + r.step.norm()));

        let (f, j) = sys.evaluate_with_jacobian(x.as_slice()).unwrap();
        let u = tangent_basis(&x).into_inner();
        let jt = &j * &u;
        let w = u.transpose() * &r.step;
        let lin = &jt * &w + &f;
        prop_assert!(lin.norm() < 1e-8 * (1.0 + f.norm()), "linearised residual {}", lin.norm());
        // Minimal norm: no component in the kernel of the tangent Jacobian.
        let svd = jt.clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        let in_row_space = vt.transpose() * (&vt * &w);
        prop_assert!((&in_row_space - &w).norm() < 1e-8 * (1.0 + w.norm()));
        prop_assert!((r.next.coords().norm() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn converges_to_planted_root_and_certifies() {
    let e4 = SpherePoint::from_slice(&[0.0, 0.0, 0.0, 1.0]).unwrap();
    for seed in 0..10 {
        let sys = planted_root_system(4, &[2, 3, 2], seed).unwrap();
        let x0 = point(&[1e-4, -2e-4, 1e-4, 1.0]).unwrap();
        let traj = newton_iterate(&sys, &x0, 12, &NewtonConfig::default()).unwrap();
        assert!(traj.last().distance(&e4) < 1e-12, "seed {seed}");
        let rep = certify(&sys, &x0, &CertConfig::default()).unwrap();
        assert!(rep.certified, "seed {seed}: {:?}", rep.reason);
        // The analytic bound is conservative; it needs a much closer start.
        let near = point(&[1e-7, -2e-7, 1e-7, 1.0]).unwrap();
        let rep = certify(&sys, &near, &CertConfig { mode: CertMode::Analytic, ..Default::default() }).unwrap();
        assert!(rep.certified, "seed {seed}: {:?}", rep.reason);
    }
}

#[test]
fn far_point_is_not_certified_analytically() {
    let sys = PolynomialSystem::sample(3, &[3, 3], 9).unwrap();
    let x = SpherePoint::north(3);
    let rep = certify(&sys, &x, &CertConfig { mode: CertMode::Analytic, ..Default::default() }).unwrap();
    if sys.energy(x.as_slice()).unwrap() > 1e-2 {
        assert!(!rep.certified);
    }
}
