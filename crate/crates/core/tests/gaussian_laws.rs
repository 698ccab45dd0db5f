use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use polysphere::polysys::{PolynomialSystem, SpherePoint};
use polysphere::verify::{ks_two_sample, tangent_jacobian_law};

// F(x) at a fixed unit x has the same law as at e1: the ensemble is rotation invariant.
#[test]
fn value_law_is_rotation_invariant() {
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    let (d, p) = (4, 3);
    let x = SpherePoint::normalize(DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng))).unwrap();
    let e1 = SpherePoint::north(d);
    let mut sys = PolynomialSystem::zeros(d, &[p]).unwrap();
    let (mut at_x, mut at_e1) = (Vec::new(), Vec::new());
    for _ in 0..4000 {
        sys.resample(&mut rng);
        at_x.push(sys.evaluate(x.as_slice()).unwrap()[0]);
        sys.resample(&mut rng);
        at_e1.push(sys.evaluate(e1.as_slice()).unwrap()[0]);
    }
    let ks = ks_two_sample(&at_x, &at_e1).unwrap();
    assert!(!ks.reject, "{ks:?}");
    let var = at_x.iter().map(|v| v * v).sum::<f64>() / at_x.len() as f64;
    assert!((var - 1.0).abs() < 0.1, "var {var}");
}

#[test]
fn tangent_jacobian_rows_scale_with_degree() {
    let x = SpherePoint::from_slice(&[0.6, 0.0, 0.8, 0.0]).unwrap();
    let rep = tangent_jacobian_law(4, &[2, 3, 5], &x, 20_000, 3).unwrap();
    for &(p, var, se) in &rep.rows {
        assert!((var - p as f64).abs() <= 4.0 * se, "p={p} var={var} se={se}");
    }
    assert!(rep.max_mean_z < 4.5, "{}", rep.max_mean_z);
}
