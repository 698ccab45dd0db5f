//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use polysphere::driver::{solve_generated, SolverConfig};
use polysphere::hessdesc::{hd_run, theorem_n, HDConfig, HDTermination};
use polysphere::mss::{mss_params, mss_run, MSSConfig};
use polysphere::newton::{contraction_exponents, newton_iterate, NewtonConfig};
use polysphere::polysys::{tangent_basis, PolynomialSystem, SpherePoint};
use polysphere::spectral::{find_descent_direction, s_max_sq, s_min, PowerIterConfig};
use polysphere::verify::{
    circle_roots, derive_seed, kac_rice_expected_roots, mc_covariance, positive_even_system, restricted_lambda_min,
    sphere_scan_roots,
};

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn random_unit(d: usize, rng: &mut ChaCha20Rng) -> SpherePoint {
    SpherePoint::normalize(DVector::from_fn(d, |_, _| rng.sample(StandardNormal))).unwrap()
}

/// `Σ_k |c_k x^k|`: the natural scale for rounding errors in `F_i(x)`.
fn term_scale(sys: &PolynomialSystem, i: usize, x: &[f64]) -> f64 {
    sys.polys()[i]
        .terms()
        .map(|(k, c)| (c * k.exponents().iter().zip(x).map(|(&e, &v)| v.powi(e as i32)).product::<f64>()).abs())
        .sum()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let d = rng.random_range(1..=10);
        let n = rng.random_range(1..=3);
        let degrees: Vec<u32> = (0..n).map(|_| rng.random_range(2..=6)).collect();
        let sys = PolynomialSystem::sample(d, &degrees, derive_seed(1, case)).unwrap();
        let x = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let (f, j) = sys.evaluate_with_jacobian(x.as_slice()).unwrap();
        let t = 2.0;
        let ft = sys.evaluate((&x * t).as_slice()).unwrap();
        for i in 0..n {
            let p = degrees[i] as f64;
            let scale = term_scale(&sys, i, x.as_slice()).max(f64::MIN_POSITIVE);
            let euler = (j.row(i).dot(&x.transpose()) - p * f[i]).abs() / (p * scale);
            let homog = (ft[i] - t.powi(degrees[i] as i32) * f[i]).abs() / (t.powi(degrees[i] as i32) * scale);
            worst = worst.max(euler).max(homog);
        }
    }
    Outcome { pass: worst <= 1e-9, detail: format!("worst relative error {worst:.2e} over 100 cases") }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(202);
    let (mut worst_g, mut worst_h): (f64, f64) = (0.0, 0.0);
    for case in 0..50 {
        let d = rng.random_range(2..=6);
        let n = rng.random_range(1..=3);
        let degrees: Vec<u32> = (0..n).map(|_| rng.random_range(2..=4)).collect();
        let sys = PolynomialSystem::sample(d, &degrees, derive_seed(2, case)).unwrap();
        let x = random_unit(d, &mut rng).into_inner();
        let h = |v: &DVector<f64>| sys.energy(v.as_slice()).unwrap();
        let grad = sys.energy_gradient(x.as_slice()).unwrap();
        let hess = sys.energy_hessian(x.as_slice()).unwrap();
        let e = |i: usize| DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 });

        let hg = 1e-5;
        let fd_g = DVector::from_fn(d, |i, _| (h(&(&x + e(i) * hg)) - h(&(&x - e(i) * hg))) / (2.0 * hg));
        worst_g = worst_g.max((&fd_g - &grad).amax() / grad.amax().max(1e-8));

        let hh = 1e-4;
        let fd_h = DMatrix::from_fn(d, d, |i, j| {
            let (ei, ej) = (e(i) * hh, e(j) * hh);
            (h(&(&x + &ei + &ej)) - h(&(&x + &ei - &ej)) - h(&(&x - &ei + &ej)) + h(&(&x - &ei - &ej)))
                / (4.0 * hh * hh)
        });
        worst_h = worst_h.max((&fd_h - &hess).amax() / hess.amax().max(1e-8));
    }
    Outcome {
        pass: worst_g <= 1e-5 && worst_h <= 1e-4,
        detail: format!("gradient {worst_g:.2e}, Hessian {worst_h:.2e} over 50 cases"),
    }
}

fn criterion_3() -> Outcome {
    let overlaps = [-1.0, 0.0, 0.5, 1.0];
    let rep = mc_covariance(3, 4, &overlaps, 100_000, 303).unwrap();
    let zs: Vec<String> = rep
        .entries
        .iter()
        .map(|e| format!("{:+.1}:{:.2}SE", e.overlap, (e.mean - e.target).abs() / e.std_err))
        .collect();
    let pass = rep.entries.iter().all(|e| (e.mean - e.target).abs() <= 3.0 * e.std_err);
    Outcome { pass, detail: format!("d=3 p=4 1e5 samples, deviations {}", zs.join(" ")) }
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [2u32, 3, 5] {
        let target = kac_rice_expected_roots(2, &[p]).unwrap();
        let mut total = 0usize;
        for t in 0..2000 {
            let sys = PolynomialSystem::sample(2, &[p], derive_seed(400 + p as u64, t)).unwrap();
            total += circle_roots(&sys, 100_000).unwrap().roots.len();
        }
        let mean = total as f64 / 2000.0;
        let rel = (mean - target).abs() / target;
        pass &= rel <= 0.05;
        parts.push(format!("p={p}: mean {mean:.3} vs {target:.3} ({:.1}%)", rel * 100.0));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn oracle_roots(count: usize) -> Vec<(PolynomialSystem, SpherePoint)> {
    let mut out = Vec::new();
    let mut s = 0;
    while out.len() < count {
        let (sys, set) = if s % 2 == 0 {
            let sys = PolynomialSystem::sample(2, &[2 + (s % 3) as u32], derive_seed(5, s)).unwrap();
            let set = circle_roots(&sys, 100_000).unwrap();
            (sys, set)
        } else {
            let sys = PolynomialSystem::sample(3, &[2, 3], derive_seed(5, s)).unwrap();
            let set = sphere_scan_roots(&sys, 120).unwrap();
            (sys, set)
        };
        if let Some(r) = set.roots.first() {
            out.push((sys, SpherePoint::from_slice(r).unwrap()));
        }
        s += 1;
    }
    out
}

fn perturb(x: &SpherePoint, eps: f64, rng: &mut ChaCha20Rng) -> SpherePoint {
    let u = tangent_basis(x).into_inner();
    let w = DVector::from_fn(u.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let t = &u * &w;
    SpherePoint::normalize(x.coords() + t * (eps / w.norm())).unwrap()
}

/// Residuals below this are at the rounding level; exponent ratios there are meaningless.
const PRECISION_FLOOR: f64 = 1e-13;

fn criterion_5() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(505);
    let (mut good, mut total, mut worst_final) = (0usize, 0usize, 0.0f64);
    for (sys, root) in oracle_roots(50) {
        let x0 = perturb(&root, 1e-3, &mut rng);
        let traj = newton_iterate(&sys, &x0, 10, &NewtonConfig::default()).unwrap();
        let res = &traj.residuals;
        for w in res.windows(2) {
            if w[1] > PRECISION_FLOOR && w[0] < 1.0 {
                total += 1;
                let r = contraction_exponents(w)[0];
                good += (1.7..=2.3).contains(&r) as usize;
            }
        }
        worst_final = worst_final.max(*res.last().unwrap());
    }
    let frac = good as f64 / total.max(1) as f64;
    Outcome {
        pass: frac >= 0.9 && worst_final <= 1e-12,
        detail: format!(
            "{good}/{total} ratios in [1.7, 2.3] ({:.0}%), worst final residual {worst_final:.1e}",
            frac * 100.0
        ),
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(606);
    let kappa = mss_params(3, 3, 1.1, 0.5, 1e3, 0.1, 2.0).unwrap().kappa;
    let mut ok = 0;
    for _ in 0..100 {
        let m = rng.random_range(1..=50);
        let l = rng.random_range(m..=60);
        let a = DMatrix::from_fn(m, l, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sv = a.clone().svd(false, false).singular_values;
        let (smax, smin_true) = (sv.max(), sv.min());
        let lmax = smax * smax;
        let sh = s_max_sq(&a).unwrap();
        let band_max = sh >= lmax / 2f64.sqrt() && sh <= lmax * (1.0 + 1e-8);
        let est = s_min(&a, kappa).unwrap();
        let excess = (2.0 * lmax * (1.0 - (m as f64).powf(-1.0 / (2.0 * kappa)))).sqrt();
        let band_min = est >= smin_true - 1e-8 * smax && est <= smin_true + excess + 1e-8 * smax;
        ok += (band_max && band_min) as usize;
    }
    Outcome { pass: ok == 100, detail: format!("{ok}/100 matrices inside both bands (kappa {kappa:.3e})") }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(707);
    let cfg = PowerIterConfig::default();
    let (mut ok, mut cases, mut s) = (0, 0, 0u64);
    while cases < 100 {
        s += 1;
        let d = rng.random_range(3..=12);
        let n = rng.random_range(1..d);
        let degrees: Vec<u32> = (0..n).map(|_| rng.random_range(2..=4)).collect();
        let sys = PolynomialSystem::sample(d, &degrees, derive_seed(7, s)).unwrap();
        let x = random_unit(d, &mut rng);
        let lmin = restricted_lambda_min(&sys, &x).unwrap();
        if lmin > -1e-6 {
            continue;
        }
        cases += 1;
        let dir = find_descent_direction(&sys, &x, HDConfig::default().c1, &cfg).unwrap();
        let unit = (dir.v.norm() - 1.0).abs() <= 1e-12 && dir.v.dot(x.coords()).abs() <= 1e-10;
        ok += (unit && dir.rayleigh <= 0.5 * lmin) as usize;
    }
    Outcome { pass: ok == 100, detail: format!("{ok}/100 directions with Rayleigh quotient ≤ ½ λ_min") }
}

fn criterion_8() -> Outcome {
    let d = 40;
    let n = theorem_n(d, SolverConfig::default().a).unwrap();
    let cfg = HDConfig { energy_floor: Some(1e-10), ..Default::default() };
    let (mut solved, mut steps, mut proj_ok, mut mono) = (0, 0usize, 0usize, 0usize);
    for seed in 0..20 {
        let sys = PolynomialSystem::sample(d, &vec![3; n], derive_seed(8, seed)).unwrap();
        let r = hd_run(&sys, &cfg).unwrap();
        if r.termination == HDTermination::EnergyFloor && r.certified() {
            solved += 1;
        }
        steps += r.steps.len();
        proj_ok += r.steps.iter().filter(|s| s.energy_next <= s.energy_y).count();
        mono += r.energy_trace.windows(2).filter(|w| w[1] <= w[0]).count();
    }
    Outcome {
        pass: solved >= 18 && proj_ok == steps,
        detail: format!(
            "d=40 n={n} p=3: {solved}/20 reached H ≤ 1e-10 and certified; H(x_next) ≤ H(y) on {proj_ok}/{steps} steps; monotone on {:.1}%",
            100.0 * mono as f64 / steps.max(1) as f64
        ),
    }
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let c0 = SolverConfig::default().c0_mss;
    for (d, degrees) in [(2usize, vec![4u32]), (3, vec![2, 3])] {
        let pmax = *degrees.iter().max().unwrap();
        let params = mss_params(d, pmax, 1.1, 0.5, 1e3, 0.1, c0).unwrap();
        let (mut agree, mut certified, mut found) = (0, 0, 0);
        for s in 0..50 {
            let sys = PolynomialSystem::sample(d, &degrees, derive_seed(900 + d as u64, s)).unwrap();
            let oracle = if d == 2 { circle_roots(&sys, 100_000) } else { sphere_scan_roots(&sys, 120) }.unwrap();
            let r = mss_run(&sys, &params, &MSSConfig::default()).unwrap();
            agree += (oracle.has_root() == r.point.is_some()) as usize;
            if r.point.is_some() {
                found += 1;
                certified += r.certification.as_ref().is_some_and(|c| c.certified) as usize;
            }
        }
        let even: Vec<u32> = degrees.iter().map(|p| p + p % 2).collect();
        let mut positive_false = 0;
        for s in 0..10 {
            let sys = positive_even_system(d, &even, derive_seed(990 + d as u64, s)).unwrap();
            let params = mss_params(d, *even.iter().max().unwrap(), 1.1, 0.5, 1e3, 0.1, c0).unwrap();
            positive_false += mss_run(&sys, &params, &MSSConfig::default()).unwrap().point.is_none() as usize;
        }
        pass &= agree >= 48 && certified == found && positive_false == 10;
        parts.push(format!(
            "d={d}: agree {agree}/50, certified {certified}/{found}, positive FALSE {positive_false}/10"
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn criterion_10() -> Outcome {
    let cfg = SolverConfig::default();
    let mut same = 0;
    let cases = [(3usize, 3u32, 11u64), (2, 4, 12), (12, 3, 13)];
    for &(d, p, seed) in &cases {
        let a = solve_generated(d, p, seed, &cfg).unwrap().to_json_without_timings().unwrap();
        let b = solve_generated(d, p, seed, &cfg).unwrap().to_json_without_timings().unwrap();
        same += (a == b) as usize;
    }
    Outcome {
        pass: same == cases.len(),
        detail: format!("{same}/{} repeated solves produced identical reports", cases.len()),
    }
}

fn main() {
    // Reference semantics are single-threaded.
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().ok();

    let criteria: [Criterion; 10] = [
        ("algebraic identities", criterion_1, Some(Duration::from_secs(5))),
        ("derivative consistency", criterion_2, Some(Duration::from_secs(30))),
        ("covariance law", criterion_3, Some(Duration::from_secs(60))),
        ("expected root count", criterion_4, Some(Duration::from_secs(120))),
        ("Newton quadratic convergence", criterion_5, None),
        ("spectral estimators vs dense", criterion_6, None),
        ("descent direction guarantee", criterion_7, None),
        ("Hessian descent end-to-end", criterion_8, Some(Duration::from_secs(600))),
        ("multi-scale search end-to-end", criterion_9, Some(Duration::from_secs(600))),
        ("determinism", criterion_10, None),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = f();
        let el = t.elapsed();
        let in_time = limit.is_none_or(|l| el <= l);
        let pass = out.pass && in_time;
        failed += !pass as usize;
        let budget = limit.map_or(String::new(), |l| format!(" / limit {}s", l.as_secs()));
        println!(
            "[{}] criterion {:>2} {name}: {} ({:.1}s{budget})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            el.as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
