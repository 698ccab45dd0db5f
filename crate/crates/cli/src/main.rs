use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};

use polysphere::driver::{solve_generated, solve_given, Mode, SolverConfig};
use polysphere::newton::{certify, CertMode};
use polysphere::polysys::{PolynomialSystem, SpherePoint};
use polysphere::spectral::{find_descent_direction, s_max_sq, s_min};
use polysphere::verify::{
    circle_root_count_stats, dense_svd, derive_seed, mc_covariance, mc_lipschitz, restricted_lambda_min,
};

#[derive(Parser)]
#[command(name = "polysphere", version, about = "Find real roots of random polynomial systems on the unit sphere")]
struct Cli {
    /// Worker threads; more than one also enables parallel multi-scale search.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a Gaussian system and write it as JSON.
    Gen {
        #[command(flatten)]
        shape: Shape,
        #[arg(long, env = "POLYSPHERE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a given or freshly sampled system.
    Solve {
        #[arg(value_enum, default_value_t = SolveMode::Auto)]
        mode: SolveMode,
        /// System JSON; when absent, a system is sampled from --dim/--degree.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        degree: Option<u32>,
        #[arg(long, env = "POLYSPHERE_SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tune: Tuning,
        /// Leave wall-clock timings out of the report.
        #[arg(long)]
        no_timings: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check whether a point is an approximate root of a system.
    Certify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated coordinates; normalized onto the sphere.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
        #[arg(long, value_enum, default_value_t = CertArg::Empirical)]
        cert: CertArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one spectral estimator against its dense reference.
    Probe {
        #[command(subcommand)]
        what: Probe,
    },
    /// Solve several sampled systems and summarize.
    Bench {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        degree: u32,
        #[arg(long, default_value_t = 5)]
        runs: u64,
        #[arg(long, value_enum, default_value_t = SolveMode::Auto)]
        mode: SolveMode,
        #[arg(long, env = "POLYSPHERE_SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        tune: Tuning,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo checks of the Gaussian ensemble.
    Stats {
        #[command(subcommand)]
        what: Stats,
    },
}

#[derive(Args)]
struct Shape {
    #[arg(long)]
    dim: usize,
    /// Degree of every equation (with --n), or a comma-separated list of degrees.
    #[arg(long, value_delimiter = ',', required = true)]
    degree: Vec<u32>,
    /// Number of equations when a single degree is given; defaults to dim − 1.
    #[arg(long)]
    n: Option<usize>,
}

impl Shape {
    fn degrees(&self) -> Result<Vec<u32>> {
        match (self.degree.as_slice(), self.n) {
            ([p], n) => Ok(vec![*p; n.unwrap_or(self.dim.saturating_sub(1)).max(1)]),
            (list, None) => Ok(list.to_vec()),
            (_, Some(_)) => bail!("--n only applies with a single --degree"),
        }
    }
}

#[derive(Args)]
struct Tuning {
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c0_mss: Option<f64>,
    #[arg(long)]
    energy_floor: Option<f64>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    u1: Option<f64>,
    #[arg(long)]
    u2: Option<f64>,
    #[arg(long)]
    u3: Option<f64>,
    #[arg(long)]
    k0: Option<u32>,
    #[arg(long)]
    visit_budget: Option<u64>,
    #[arg(long, value_enum)]
    cert: Option<CertArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMode {
    Auto,
    Hd,
    Mss,
}

#[derive(Clone, Copy, ValueEnum)]
enum CertArg {
    Empirical,
    Analytic,
}

impl From<CertArg> for CertMode {
    fn from(c: CertArg) -> Self {
        match c {
            CertArg::Empirical => CertMode::Empirical,
            CertArg::Analytic => CertMode::Analytic,
        }
    }
}

#[derive(Subcommand)]
enum Probe {
    /// Smallest singular value of a random Gaussian rows×cols matrix (rows ≤ cols).
    Smin {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 1e3)]
        kappa: f64,
        #[arg(long, env = "POLYSPHERE_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Squared largest singular value of a random Gaussian matrix.
    Smax {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, env = "POLYSPHERE_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Descent direction of the energy at a point.
    Direction {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
        #[arg(long)]
        c1: Option<f64>,
    },
}

#[derive(Subcommand)]
enum Stats {
    /// Mean number of roots on the circle of one degree-p equation.
    Rootcount {
        #[arg(long)]
        degree: u32,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 100_000)]
        grid: usize,
        #[arg(long, env = "POLYSPHERE_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Empirical covariance E[F(x)F(y)] against ⟨x,y⟩^p.
    Covariance {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        degree: u32,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-1,0,0.5,1")]
        overlaps: Vec<f64>,
        #[arg(long, env = "POLYSPHERE_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Sampled sup-norms and Lipschitz constants of F and DF on the sphere.
    Lipschitz {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, env = "POLYSPHERE_SEED", default_value_t = 0)]
        seed: u64,
    },
}

fn config(tune: &Tuning, mode: SolveMode, threads: usize) -> SolverConfig {
    let mut cfg = SolverConfig {
        mode: match mode {
            SolveMode::Auto => Mode::Auto,
            SolveMode::Hd => Mode::Hd,
            SolveMode::Mss => Mode::Mss,
        },
        mss_parallel: threads > 1,
        ..Default::default()
    };
    if let Some(v) = tune.delta {
        cfg.delta = v;
    }
    if let Some(v) = tune.c1 {
        cfg.c1 = v;
    }
    if let Some(v) = tune.c0_mss {
        cfg.c0_mss = v;
    }
    if let Some(c) = tune.cert {
        cfg.cert.mode = c.into();
    }
    cfg.energy_floor = tune.energy_floor;
    cfg.hd_max_iters = tune.max_iters;
    cfg.u_overrides.u1 = tune.u1;
    cfg.u_overrides.u2 = tune.u2;
    cfg.u_overrides.u3 = tune.u3;
    cfg.k0_override = tune.k0;
    cfg.mss_visit_budget = tune.visit_budget;
    cfg
}

fn load(path: &Path) -> Result<PolynomialSystem> {
    PolynomialSystem::load(path).with_context(|| format!("reading system from {}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_value(v: &Value, out: Option<&Path>) -> Result<()> {
    emit(&serde_json::to_string_pretty(v)?, out)
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.threads == 0 {
        bail!("--threads must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().context("starting thread pool")?;

    match cli.cmd {
        Cmd::Gen { shape, seed, out } => {
            let sys = PolynomialSystem::sample(shape.dim, &shape.degrees()?, seed)?;
            emit(&sys.to_json()?, out.as_deref())
        }
        Cmd::Solve { mode, input, dim, degree, seed, tune, no_timings, out } => {
            let cfg = config(&tune, mode, cli.threads);
            let report = match (input, dim, degree) {
                (Some(path), None, None) => {
                    let sys = load(&path)?;
                    solve_given(&sys, Some(path.display().to_string()), seed, &cfg)?
                }
                (None, Some(d), Some(p)) => solve_generated(d, p, seed, &cfg)?,
                _ => bail!("give either --in FILE or both --dim and --degree"),
            };
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let text = if no_timings { report.to_json_without_timings()? } else { report.to_json_pretty()? };
            emit(&text, out.as_deref())
        }
        Cmd::Certify { input, point, cert, out } => {
            let sys = load(&input)?;
            let x = SpherePoint::normalize(point.into()).context("point must be nonzero")?;
            let mut cfg = SolverConfig::default().cert;
            cfg.mode = cert.into();
            let rep = certify(&sys, &x, &cfg)?;
            emit_value(&json!({ "point": x.as_slice(), "report": rep }), out.as_deref())
        }
        Cmd::Probe { what } => {
            let v = match what {
                Probe::Smin { rows, cols, kappa, seed } => {
                    let a = gaussian_matrix(rows, cols, seed);
                    let (_, s, _) = dense_svd(&a)?;
                    json!({ "rows": rows, "cols": cols, "kappa": kappa, "estimate": s_min(&a, kappa)?, "dense": s[s.len() - 1] })
                }
                Probe::Smax { rows, cols, seed } => {
                    let a = gaussian_matrix(rows, cols, seed);
                    let (_, s, _) = dense_svd(&a)?;
                    json!({ "rows": rows, "cols": cols, "estimate": s_max_sq(&a)?, "dense": s[0] * s[0] })
                }
                Probe::Direction { input, point, c1 } => {
                    let sys = load(&input)?;
                    let x = SpherePoint::normalize(point.into()).context("point must be nonzero")?;
                    let c1 = c1.unwrap_or(SolverConfig::default().c1);
                    let dir = find_descent_direction(&sys, &x, c1, &SolverConfig::default().power)?;
                    json!({
                        "direction": dir.v.as_slice(),
                        "rayleigh": dir.rayleigh,
                        "lambda_min": restricted_lambda_min(&sys, &x)?,
                        "mu": dir.mu,
                        "squarings": dir.squarings,
                        "extrapolated": dir.extrapolated,
                    })
                }
            };
            emit_value(&v, None)
        }
        Cmd::Bench { dim, degree, runs, mode, seed, tune, out } => {
            let cfg = config(&tune, mode, cli.threads);
            let start = Instant::now();
            let mut rows = Vec::new();
            let (mut found, mut certified) = (0, 0);
            for i in 0..runs {
                let s = derive_seed(seed, i);
                let rep = solve_generated(dim, degree, s, &cfg)?;
                let v: Value = serde_json::from_str(&rep.to_json_pretty()?)?;
                found += (v["outcome"] != "false") as usize;
                certified += rep.certified as usize;
                rows.push(json!({ "seed": s, "algorithm": v["algorithm"], "certified": rep.certified, "total_ms": v["timings"]["total_ms"] }));
            }
            let v = json!({
                "dim": dim, "degree": degree, "runs": runs,
                "found": found, "certified": certified,
                "wall_ms": start.elapsed().as_secs_f64() * 1e3,
                "runs_detail": rows,
            });
            emit_value(&v, out.as_deref())
        }
        Cmd::Stats { what } => {
            let v = match what {
                Stats::Rootcount { degree, trials, grid, seed } => {
                    serde_json::to_value(circle_root_count_stats(degree, trials, seed, grid)?)?
                }
                Stats::Covariance { dim, degree, samples, overlaps, seed } => {
                    serde_json::to_value(mc_covariance(dim, degree, &overlaps, samples, seed)?)?
                }
                Stats::Lipschitz { input, samples, seed } => {
                    serde_json::to_value(mc_lipschitz(&load(&input)?, samples, seed)?)?
                }
            };
            emit_value(&v, None)
        }
    }
}
