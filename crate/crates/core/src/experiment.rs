//! Monte Carlo harness: samples pairs of Mallows permutations in the scaling
//! regime `q = 1 − β/n`, `q' = 1 − γ/n` and compares their statistics with
//! the limit objects.
//!
//! Trial `i` draws from `ChaCha8Rng::seed_from_u64(derive_seed(seed, i))`,
//! so each trial is reproducible on its own and results do not depend on
//! the thread count. Aggregation folds records in trial order.

use std::fmt::Write as _;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{DensityField, BETA_EPS};
use crate::mallows::{sample, MallowsError, MallowsParams, ScalingParams};
use crate::perm::{IndexVector, Permutation};
use crate::scalar::{rational_from_f64, Rational};
use crate::sequence_stats::{
    lcs, lcs_dp_oracle, lis, lis_in_rectangle, PointCloud, Rectangle, StatsError,
};
use crate::variational::{jbar_closed, jbar_grid, VariationalError, DEFAULT_K, DEFAULT_L};

pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9) seeded per trial with splitmix64(seed, trial)";
/// `--verify-oracle` only runs the quadratic DP up to this size.
pub const ORACLE_MAX_N: usize = 1000;
pub const DEFAULT_EPSILON: f64 = 0.3;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("rectangle {index}: dx*|beta| = {dx_beta} is not below ln 2")]
    Guard { index: usize, dx_beta: f64 },
    #[error("trial {trial}: fast LCS {fast} disagrees with the DP oracle {oracle}")]
    OracleMismatch { trial: usize, fast: usize, oracle: usize },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Mallows(#[from] MallowsError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
}

/// Which planar cloud the rectangle statistics are taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudKind {
    /// `z(π⁻¹, τ⁻¹)`, whose longest chain is `LCS(π, τ)`.
    #[default]
    Inverse,
    /// `z(π, τ)`.
    Direct,
}

impl CloudKind {
    pub fn build(self, p: &Permutation, t: &Permutation) -> Result<PointCloud<Rational>, StatsError> {
        match self {
            CloudKind::Inverse => PointCloud::from_inverses(p, t),
            CloudKind::Direct => PointCloud::from_permutations(p, t),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub trials: usize,
    pub seed: u64,
    /// `[x1, x2, y1, y2]`, read as the exact decimals they print as.
    #[serde(default)]
    pub rectangles: Vec<[f64; 4]>,
    /// Reject band checks on rectangles with `Δx|β| ≥ ln 2`.
    #[serde(default = "default_true")]
    pub delta_x_guard: bool,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub cloud: CloudKind,
    #[serde(default)]
    pub verify_oracle: bool,
    /// Worker threads; does not affect results.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(n: usize, beta: f64, gamma: f64, trials: usize, seed: u64) -> Self {
        Self {
            n,
            beta,
            gamma,
            trials,
            seed,
            rectangles: Vec::new(),
            delta_x_guard: true,
            epsilon: DEFAULT_EPSILON,
            cloud: CloudKind::default(),
            verify_oracle: false,
            threads: None,
        }
    }

    pub fn with_rectangle(mut self, r: [f64; 4]) -> Self {
        self.rectangles.push(r);
        self
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if !self.beta.is_finite() || !self.gamma.is_finite() {
            return bad("beta and gamma must be finite".into());
        }
        if self.n as f64 <= self.beta.abs().max(self.gamma.abs()) {
            return bad(format!("n={} must exceed max(|beta|, |gamma|)", self.n));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return bad("epsilon must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        self.exact_rectangles()?;
        Ok(())
    }

    pub fn exact_rectangles(&self) -> Result<Vec<Rectangle<Rational>>, ExperimentError> {
        self.rectangles
            .iter()
            .map(|r| {
                let mut c = [Rational::default(); 4];
                for (slot, &v) in c.iter_mut().zip(r) {
                    *slot = rational_from_f64(v)
                        .ok_or_else(|| ExperimentError::Config(format!("rectangle bound {v} is not exact")))?;
                }
                Ok(Rectangle::new(c[0], c[1], c[2], c[3])?)
            })
            .collect()
    }

    pub fn mallows_pair(&self) -> Result<(MallowsParams, MallowsParams), ExperimentError> {
        Ok((
            ScalingParams::new(self.n, self.beta)?.mallows(),
            ScalingParams::new(self.n, self.gamma)?.mallows(),
        ))
    }

    /// Checks that the configuration is valid and parses it from JSON.
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// SplitMix64 finaliser.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under master seed `seed`.
pub fn derive_seed(seed: u64, index: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ (index as u64).wrapping_mul(0xd1b5_4a32_d192_ed03))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub seed_used: u64,
    pub lcs_value: usize,
    pub lcs_scaled: f64,
    pub rect_counts: Vec<usize>,
    pub rect_lis: Vec<usize>,
}

fn run_in_pool<R: Send>(threads: Option<usize>, job: impl FnOnce() -> R + Send) -> Result<R, ExperimentError> {
    match threads {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| ExperimentError::Pool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>, ExperimentError> {
    cfg.validate()?;
    let rects = cfg.exact_rectangles()?;
    let (pq, pq_prime) = cfg.mallows_pair()?;
    let one = |i: usize| -> Result<TrialRecord, ExperimentError> {
        let seed_used = derive_seed(cfg.seed, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed_used);
        let p = sample(&pq, &mut rng);
        let t = sample(&pq_prime, &mut rng);
        let lcs_value = lcs(&p, &t)?;
        if cfg.verify_oracle && cfg.n <= ORACLE_MAX_N {
            let oracle = lcs_dp_oracle(&p, &t)?;
            if oracle != lcs_value {
                return Err(ExperimentError::OracleMismatch { trial: i, fast: lcs_value, oracle });
            }
        }
        let cloud = cfg.cloud.build(&p, &t)?;
        let rect_counts = rects.iter().map(|r| cloud.count_in(r)).collect();
        let rect_lis = rects.iter().map(|r| lis_in_rectangle(&cloud, r)).collect::<Result<_, _>>()?;
        Ok(TrialRecord {
            trial_index: i,
            seed_used,
            lcs_value,
            lcs_scaled: lcs_value as f64 / (cfg.n as f64).sqrt(),
            rect_counts,
            rect_lis,
        })
    };
    run_in_pool(cfg.threads, || (0..cfg.trials).into_par_iter().map(one).collect())?
}

/// `(1/n) #{i : (p(i)/n, t(i)/n) ∈ R}`, with exact membership.
pub fn empirical_rectangle_fraction(
    p: &Permutation,
    t: &Permutation,
    r: &Rectangle<Rational>,
) -> Result<f64, ExperimentError> {
    let cloud = PointCloud::from_permutations(p, t)?;
    Ok(cloud.count_in(r) as f64 / p.len() as f64)
}

/// `(2e^{−Δx|β|/2} − ε, 2e^{Δx|β|/2} + ε)`.
pub fn band(dx: f64, beta: f64, epsilon: f64) -> (f64, f64) {
    let h = dx * beta.abs() / 2.0;
    (2.0 * (-h).exp() - epsilon, 2.0 * h.exp() + epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRate {
    pub rect: [f64; 4],
    pub lower: f64,
    pub upper: f64,
    pub rho_mass: f64,
    pub pass_rate: f64,
    /// `Δx|β| ≥ ln 2`, outside the band's hypothesis.
    pub guard_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RectFractionError {
    pub rect: [f64; 4],
    pub rho_mass: f64,
    pub mean_fraction: f64,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
}

fn rho_masses(cfg: &ExperimentConfig, rects: &[Rectangle<Rational>]) -> Result<Vec<f64>, ExperimentError> {
    let field = DensityField::new(cfg.beta, cfg.gamma).map_err(VariationalError::from)?;
    Ok(rects.iter().map(|r| field.rho_rect(&r.to_f64())).collect())
}

/// Per-rectangle frequency of `l_R / √(n ρ(R))` falling in the band.
pub fn lis_band_check(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Result<Vec<BandRate>, ExperimentError> {
    let rects = cfg.exact_rectangles()?;
    let masses = rho_masses(cfg, &rects)?;
    let mut out = Vec::with_capacity(rects.len());
    for (i, (r, &mass)) in rects.iter().zip(&masses).enumerate() {
        let dx = r.width();
        let dx_beta = dx * cfg.beta.abs();
        let guard_violated = dx_beta >= std::f64::consts::LN_2;
        if guard_violated && cfg.delta_x_guard {
            return Err(ExperimentError::Guard { index: i, dx_beta });
        }
        let (lower, upper) = band(dx, cfg.beta, cfg.epsilon);
        let scale = (cfg.n as f64 * mass).sqrt();
        let hits = records
            .iter()
            .filter(|rec| {
                let v = rec.rect_lis[i] as f64 / scale;
                lower < v && v < upper
            })
            .count();
        out.push(BandRate {
            rect: cfg.rectangles[i],
            lower,
            upper,
            rho_mass: mass,
            pass_rate: if records.is_empty() { 0.0 } else { hits as f64 / records.len() as f64 },
            guard_violated,
        });
    }
    Ok(out)
}

/// Where the LCS target `2J̄` came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Target {
    /// `β = γ`: twice the closed-form `J̄`.
    ClosedForm { value: f64 },
    /// Twice a grid bracket; `value` is its midpoint.
    Bracket { value: f64, lower: f64, upper: f64 },
}

impl Target {
    pub fn value(&self) -> f64 {
        match *self {
            Target::ClosedForm { value } | Target::Bracket { value, .. } => value,
        }
    }

    pub fn for_config(cfg: &ExperimentConfig) -> Result<Self, ExperimentError> {
        if (cfg.beta - cfg.gamma).abs() < BETA_EPS {
            return Ok(Target::ClosedForm { value: 2.0 * jbar_closed(cfg.beta) });
        }
        let field = DensityField::new(cfg.beta, cfg.gamma).map_err(VariationalError::from)?;
        let b = jbar_grid(&field, DEFAULT_K, DEFAULT_L)?;
        Ok(Target::Bracket { value: b.lower + b.upper, lower: 2.0 * b.lower, upper: 2.0 * b.upper })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub generator: String,
    pub config: ExperimentConfig,
    pub mean_scaled: f64,
    pub stderr: f64,
    pub target: Target,
    pub rect_fraction_errors: Vec<RectFractionError>,
    pub band_pass_rates: Vec<BandRate>,
}

/// Aggregates records in trial order.
pub fn convergence_report(
    cfg: &ExperimentConfig,
    records: &[TrialRecord],
    target: Target,
) -> Result<ConvergenceReport, ExperimentError> {
    if records.is_empty() {
        return Err(ExperimentError::Config("no records to aggregate".into()));
    }
    let m = records.len() as f64;
    let mean = records.iter().map(|r| r.lcs_scaled).sum::<f64>() / m;
    let stderr = if records.len() > 1 {
        let var = records.iter().map(|r| (r.lcs_scaled - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    let rects = cfg.exact_rectangles()?;
    let masses = rho_masses(cfg, &rects)?;
    let n = cfg.n as f64;
    let rect_fraction_errors = masses
        .iter()
        .enumerate()
        .map(|(i, &mass)| {
            let fractions: Vec<f64> = records.iter().map(|r| r.rect_counts[i] as f64 / n).collect();
            let errors: Vec<f64> = fractions.iter().map(|f| (f - mass).abs()).collect();
            RectFractionError {
                rect: cfg.rectangles[i],
                rho_mass: mass,
                mean_fraction: fractions.iter().sum::<f64>() / m,
                mean_abs_error: errors.iter().sum::<f64>() / m,
                max_abs_error: errors.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(ConvergenceReport {
        generator: GENERATOR.to_string(),
        config: cfg.clone(),
        mean_scaled: mean,
        stderr,
        target,
        rect_fraction_errors,
        band_pass_rates: lis_band_check(cfg, records)?,
    })
}

/// Runs the trials and builds the report.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<TrialRecord>, ConvergenceReport), ExperimentError> {
    let records = run_trials(cfg)?;
    let report = convergence_report(cfg, &records, Target::for_config(cfg)?)?;
    Ok((records, report))
}

pub fn records_csv(cfg: &ExperimentConfig, records: &[TrialRecord]) -> String {
    let mut out = String::from("trial,seed,n,beta,gamma,lcs,lcs_scaled");
    for i in 1..=cfg.rectangles.len() {
        write!(out, ",rect{i}_count,rect{i}_lis").expect("writing to a String");
    }
    out.push('\n');
    for r in records {
        write!(out, "{},{},{},{},{},{},{}", r.trial_index, r.seed_used, cfg.n, cfg.beta, cfg.gamma, r.lcs_value, r.lcs_scaled)
            .expect("writing to a String");
        for (c, l) in r.rect_counts.iter().zip(&r.rect_lis) {
            write!(out, ",{c},{l}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn report_json(report: &ConvergenceReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Sub-permutation LIS check for a single Mallows permutation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubBandConfig {
    pub n: usize,
    /// `q = 1 − β/n`; `β ≥ 0` means `q ≤ 1`.
    pub beta: f64,
    /// Length of the index vector.
    pub k: usize,
    pub samples: usize,
    pub epsilon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubBandReport {
    pub n: usize,
    pub k: usize,
    pub q: f64,
    pub lower: f64,
    pub upper: f64,
    pub mean_scaled: f64,
    /// Fraction of samples with `LIS(π_b)/√k` outside `(lower, upper)`.
    pub outside_frequency: f64,
}

/// For `q ≤ 1` the band is `(2 − ε, 2e^{β/2} + ε)` and needs `β < ln 2`;
/// for `q ≥ 1` it is `(2e^{β/2} − ε, 2 + ε)`. Each sample draws `π` and a
/// uniform `b` with `k` strictly increasing entries.
pub fn sub_permutation_band_check(cfg: &SubBandConfig) -> Result<SubBandReport, ExperimentError> {
    let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
    if cfg.k == 0 || cfg.k > cfg.n {
        return bad("need 1 <= k <= n");
    }
    if cfg.samples == 0 {
        return bad("samples must be positive");
    }
    if cfg.epsilon.is_nan() || cfg.epsilon <= 0.0 {
        return bad("epsilon must be positive");
    }
    if cfg.beta >= std::f64::consts::LN_2 {
        return bad("q <= 1 needs beta < ln 2");
    }
    let params = ScalingParams::new(cfg.n, cfg.beta)?.mallows();
    let edge = 2.0 * (cfg.beta / 2.0).exp();
    let (lower, upper) = if cfg.beta >= 0.0 {
        (2.0 - cfg.epsilon, edge + cfg.epsilon)
    } else {
        (edge - cfg.epsilon, 2.0 + cfg.epsilon)
    };
    let root_k = (cfg.k as f64).sqrt();
    let values: Vec<f64> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, i));
            let p = sample(&params, &mut rng);
            let mut b: Vec<usize> = index::sample(&mut rng, cfg.n, cfg.k).into_iter().map(|j| j + 1).collect();
            b.sort_unstable();
            let iv = IndexVector::new(b, cfg.n).expect("sorted distinct indices");
            lis(&p.induced(&iv).expect("index vector matches n")) as f64 / root_k
        })
        .collect();
    let outside = values.iter().filter(|&&v| !(lower < v && v < upper)).count();
    Ok(SubBandReport {
        n: cfg.n,
        k: cfg.k,
        q: params.q,
        lower,
        upper,
        mean_scaled: values.iter().sum::<f64>() / values.len() as f64,
        outside_frequency: outside as f64 / values.len() as f64,
    })
}
