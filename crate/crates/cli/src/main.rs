use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use mallows_lcs::coupling::{census, CouplingParams};
use mallows_lcs::density::u;
use mallows_lcs::experiment::{
    records_csv, report_json, run_experiment, sub_permutation_band_check, CloudKind, ExperimentConfig,
    SubBandConfig, DEFAULT_EPSILON,
};
use mallows_lcs::variational::{jbar_report, DEFAULT_K, DEFAULT_L};
use mallows_lcs::{lcs, lis, sample, DensityField, MallowsParams, Permutation, ScalingParams};

#[derive(Parser)]
#[command(name = "mallows-lcs", version, about = "LIS/LCS of Mallows permutations and their limit shapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the coupled chains and report ordering violations and mixing.
    Couple {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: f64,
        #[arg(long = "q-prime")]
        q_prime: f64,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// LIS, LCS and inversion numbers of two permutations.
    Stats {
        #[arg(long)]
        pi: Permutation,
        #[arg(long)]
        tau: Permutation,
    },
    /// Tabulate u and rho on a grid as CSV.
    Density {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bracket the variational constant.
    Jbar {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long = "K", default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long = "L", default_value_t = DEFAULT_L)]
        l: usize,
    },
    /// Monte Carlo trials of LCS and rectangle statistics.
    Experiment(ExperimentArgs),
    /// Draw one Mallows permutation.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true, conflicts_with = "q", required_unless_present = "q")]
        beta: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// LIS of random sub-permutations against its limiting band.
    Band {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON configuration; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `x1,x2,y1,y2`; repeatable.
    #[arg(long = "rect")]
    rects: Vec<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Allow band checks on rectangles with dx*|beta| >= ln 2.
    #[arg(long)]
    no_guard: bool,
    /// Take rectangle statistics on z(pi, tau) instead of z(pi^-1, tau^-1).
    #[arg(long)]
    direct_cloud: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    verify_oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_rect(s: &str) -> Result<[f64; 4]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        bail!("rectangle {s:?} needs four comma-separated numbers x1,x2,y1,y2");
    }
    let mut r = [0.0; 4];
    for (slot, p) in r.iter_mut().zip(&parts) {
        *slot = p.parse().with_context(|| format!("bad number {p:?} in rectangle {s:?}"))?;
    }
    Ok(r)
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => {
                let missing = |name: &str| anyhow::anyhow!("--{name} is required without --config");
                ExperimentConfig::new(
                    self.n.ok_or_else(|| missing("n"))?,
                    self.beta.ok_or_else(|| missing("beta"))?,
                    self.gamma.ok_or_else(|| missing("gamma"))?,
                    self.trials.ok_or_else(|| missing("trials"))?,
                    self.seed.ok_or_else(|| missing("seed"))?,
                )
            }
        };
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if !self.rects.is_empty() {
            cfg.rectangles = self.rects.iter().map(|s| parse_rect(s)).collect::<Result<_>>()?;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if self.no_guard {
            cfg.delta_x_guard = false;
        }
        if self.direct_cloud {
            cfg.cloud = CloudKind::Direct;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.verify_oracle |= self.verify_oracle;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Couple { n, q, q_prime, steps, seed } => {
            let params = CouplingParams::new(q, q_prime)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report = census(n, &params, steps, &mut rng)?;
            print!("{}", pretty(&report)?);
        }
        Command::Stats { pi, tau } => {
            let out = json!({
                "lis_pi": lis(&pi),
                "lis_tau": lis(&tau),
                "lcs": lcs(&pi, &tau)?,
                "l_pi": pi.inversion_number(),
                "l_tau": tau.inversion_number(),
            });
            print!("{}", pretty(&out)?);
        }
        Command::Density { beta, gamma, grid, out } => {
            if grid < 2 {
                bail!("--grid must be at least 2");
            }
            let field = DensityField::new(beta, gamma)?;
            let mut csv = String::from("x,y,u_beta,rho\n");
            for i in 0..grid {
                for j in 0..grid {
                    let (x, y) = (i as f64 / (grid - 1) as f64, j as f64 / (grid - 1) as f64);
                    csv.push_str(&format!("{x},{y},{},{}\n", u(x, y, beta)?, field.rho(x, y)?));
                }
            }
            emit(&out, &csv)?;
        }
        Command::Jbar { beta, gamma, k, l } => {
            let field = DensityField::new(beta, gamma)?;
            print!("{}", pretty(&jbar_report(&field, k, l)?)?);
        }
        Command::Experiment(args) => {
            let cfg = args.config()?;
            let (records, report) = run_experiment(&cfg)?;
            if let Some(path) = &args.csv {
                fs::write(path, records_csv(&cfg, &records)).with_context(|| format!("writing {}", path.display()))?;
            }
            emit(&args.out, &report_json(&report))?;
        }
        Command::Sample { n, beta, q, seed } => {
            let params = match (beta, q) {
                (Some(b), None) => ScalingParams::new(n, b)?.mallows(),
                (None, Some(q)) => MallowsParams::new(n, q)?,
                _ => bail!("give exactly one of --beta and --q"),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            println!("{}", sample(&params, &mut rng));
        }
        Command::Band { n, beta, k, samples, epsilon, seed } => {
            let report = sub_permutation_band_check(&SubBandConfig { n, beta, k, samples, epsilon, seed })?;
            print!("{}", pretty(&report)?);
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    run(Cli::parse())
}
