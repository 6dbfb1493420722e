//! Seeded Monte-Carlo harness: single trials, parameter sweeps, the
//! `m^{-1/2}` rate study, and expectation checks on the measurement model.
//!
//! Each trial draws its signal, design and noise from its own substream
//! `(master_seed, point, trial)`, so results do not depend on scheduling.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::init::{
    initialize, marginal_signals, norm_estimate, restricted_second_moment, InitConfig,
};
use crate::linalg::{spectral_norm, symmetric_spectral_norm, DenseMatrix};
use crate::model::{
    generate_instance_with_seed, generate_signal, relative_error, NoiseFamily, NoiseSpec,
    ProblemInstance, SparseSignal,
};
use crate::rng::SeedRecord;
use crate::thresholding::ThresholdOperator;
use crate::twf::{self, TwfConfig};

/// Everything one trial needs. `nsr` sets the noise scale to
/// `nsr * |x|^2` once the signal has been drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub p: usize,
    pub m: usize,
    pub k: usize,
    pub nsr: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub iterations: usize,
    pub operator: ThresholdOperator,
    pub noise: NoiseFamily,
}

impl Default for TrialParams {
    fn default() -> Self {
        Self::paper()
    }
}

impl TrialParams {
    /// p = 1000, m = 7000, k = 100, NSR = 1, alpha = 0.1, beta = 1,
    /// mu = 0.01, T = 1000, Gaussian noise.
    ///
    /// Uses hard thresholding. At these settings soft thresholding shrinks
    /// the surviving coordinates too much: its error against beta bottoms out
    /// near beta = 0.25 and roughly triples by beta = 3, while with hard
    /// thresholding it rises only slowly past a minimum near beta = 0.75.
    pub fn paper() -> Self {
        Self {
            p: 1000,
            m: 7000,
            k: 100,
            nsr: 1.0,
            alpha: 0.1,
            beta: 1.0,
            mu: 0.01,
            iterations: 1000,
            operator: ThresholdOperator::Hard,
            noise: NoiseFamily::Gaussian,
        }
    }

    /// Desk-scale variant: p = 200, m = 2000, k = 20.
    pub fn quick() -> Self {
        Self {
            p: 200,
            m: 2000,
            k: 20,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.m == 0 {
            return Err(invalid("p and m must be at least 1"));
        }
        if self.k == 0 || self.k > self.p {
            return Err(invalid(format!(
                "need 1 <= k <= p, got k = {}, p = {}",
                self.k, self.p
            )));
        }
        if !(self.nsr >= 0.0) || !self.nsr.is_finite() {
            return Err(invalid("nsr must be finite and >= 0"));
        }
        if self.nsr > 0.0 && self.noise == NoiseFamily::None {
            return Err(invalid("nsr > 0 needs a noise family other than none"));
        }
        InitConfig::with_alpha(self.alpha).validate()?;
        let mut cfg = TwfConfig::new(1.0);
        cfg.mu = self.mu;
        cfg.beta = self.beta;
        cfg.validate()
    }

    pub fn with_axis(mut self, axis: Axis, value: f64) -> Result<Self> {
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as usize)
            } else {
                Err(invalid(format!(
                    "{axis} grid values must be positive integers, got {value}"
                )))
            }
        };
        match axis {
            Axis::Beta => self.beta = value,
            Axis::Nsr => self.nsr = value,
            Axis::Alpha => self.alpha = value,
            Axis::Mu => self.mu = value,
            Axis::M => self.m = count(value)?,
            Axis::K => self.k = count(value)?,
        }
        Ok(self)
    }

    pub fn twf_config(&self, phi_sq: f64) -> TwfConfig {
        TwfConfig {
            mu: self.mu,
            beta: self.beta,
            iterations: self.iterations,
            operator: self.operator,
            record_trajectory: false,
            phi_sq,
        }
    }

    fn noise_spec(&self, signal: &SparseSignal) -> Result<NoiseSpec> {
        if self.nsr == 0.0 {
            Ok(NoiseSpec::none())
        } else {
            NoiseSpec::new(self.noise, self.nsr * signal.two_norm().powi(2))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Beta,
    Nsr,
    M,
    K,
    Alpha,
    Mu,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::Nsr => "nsr",
            Self::M => "m",
            Self::K => "k",
            Self::Alpha => "alpha",
            Self::Mu => "mu",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "beta" => Ok(Self::Beta),
            "nsr" => Ok(Self::Nsr),
            "m" => Ok(Self::M),
            "k" => Ok(Self::K),
            "alpha" => Ok(Self::Alpha),
            "mu" => Ok(Self::Mu),
            other => Err(format!("unknown sweep axis {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Held constant; the field named by `axis` is overridden per grid point.
    pub fixed: TrialParams,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(invalid("sweep grid is empty"));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("sweep grid must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        for &v in &self.grid {
            self.fixed.with_axis(self.axis, v)?.validate()?;
        }
        Ok(())
    }

    pub fn point_params(&self, point: usize) -> Result<TrialParams> {
        self.fixed.with_axis(self.axis, self.grid[point])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepOptions {
    pub workers: usize,
    /// Keep wall-clock times in the result. Off by default so that result
    /// files are reproducible byte for byte.
    pub record_timings: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            record_timings: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: SeedRecord,
    pub error: Option<f64>,
    pub failure: Option<String>,
    pub selected: usize,
    pub fallback: bool,
    pub wallclock_ms: Option<f64>,
}

/// Generates one instance, initializes, iterates, and scores.
pub fn run_trial(params: &TrialParams, seed: SeedRecord) -> TrialOutcome {
    let start = Instant::now();
    let mut outcome = TrialOutcome {
        trial: (seed.stream & 0xffff_ffff) as usize,
        seed,
        error: None,
        failure: None,
        selected: 0,
        fallback: false,
        wallclock_ms: None,
    };
    match trial_error(params, seed, &mut outcome) {
        Ok(e) => outcome.error = Some(e),
        Err(e) => outcome.failure = Some(e.to_string()),
    }
    outcome.wallclock_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    outcome
}

/// The instance a trial with these parameters and seed works on.
pub fn trial_instance(params: &TrialParams, seed: SeedRecord) -> Result<ProblemInstance> {
    params.validate()?;
    let mut rng = seed.rng();
    let signal = generate_signal(params.p, params.k, &mut rng)?;
    let noise = params.noise_spec(&signal)?;
    generate_instance_with_seed(&signal, params.m, noise, &mut rng, Some(seed))
}

fn trial_error(params: &TrialParams, seed: SeedRecord, outcome: &mut TrialOutcome) -> Result<f64> {
    let instance = trial_instance(params, seed)?;
    let init = initialize(&instance, &InitConfig::with_alpha(params.alpha))?;
    outcome.selected = init.selected.len();
    outcome.fallback = init.fallback;
    let trace = twf::run(&init.x0, &instance, &params.twf_config(init.phi_sq))?;
    let signal = instance
        .signal()
        .expect("synthetic instances carry their signal");
    relative_error(&trace.final_estimate, signal)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    /// Mean over successful trials; `None` when every trial failed.
    pub mean_error: Option<f64>,
    pub failures: usize,
    /// More than 20% of trials failed.
    pub invalid: bool,
    pub trials: Vec<TrialOutcome>,
}

impl SweepPoint {
    fn from_trials(axis_value: f64, trials: Vec<TrialOutcome>) -> Self {
        let failures = trials.iter().filter(|t| t.error.is_none()).count();
        Self {
            axis_value,
            mean_error: mean_of_successes(&trials),
            failures,
            invalid: failures * 5 > trials.len(),
            trials,
        }
    }
}

/// Arithmetic mean of the successful trial errors, summed in trial order.
pub fn mean_of_successes(trials: &[TrialOutcome]) -> Option<f64> {
    let ok: Vec<f64> = trials.iter().filter_map(|t| t.error).collect();
    if ok.is_empty() {
        None
    } else {
        Some(ok.iter().sum::<f64>() / ok.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub points: Vec<SweepPoint>,
    pub notes: Vec<String>,
}

impl SweepResult {
    pub fn means(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.mean_error).collect()
    }
}

/// Runs every `(point, trial)` pair of the sweep on `options.workers` threads.
pub fn run_sweep(spec: &SweepSpec, options: SweepOptions) -> Result<SweepResult> {
    spec.validate()?;
    let params: Vec<TrialParams> = (0..spec.grid.len())
        .map(|i| spec.point_params(i))
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|pt| (0..spec.trials).map(move |t| (pt, t)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    // par_iter().collect() keeps task order regardless of completion order.
    let mut outcomes: Vec<TrialOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(pt, t)| {
                let seed = SeedRecord::for_trial(spec.master_seed, pt as u32, t as u32);
                run_trial(&params[pt], seed)
            })
            .collect()
    });
    if !options.record_timings {
        outcomes.iter_mut().for_each(|o| o.wallclock_ms = None);
    }

    let mut iter = outcomes.into_iter();
    let points = spec
        .grid
        .iter()
        .map(|&v| SweepPoint::from_trials(v, iter.by_ref().take(spec.trials).collect()))
        .collect();

    let mut notes = Vec::new();
    if spec.axis != Axis::M && spec.fixed.m == 7000 && spec.fixed.p == 1000 {
        notes.push(
            "m = 7000 follows the simulation text; the figure captions print m = 1000".to_string(),
        );
    }
    Ok(SweepResult {
        spec: spec.clone(),
        points,
        notes,
    })
}

/// Grids of the four standard sweeps (beta, NSR, m, k), scaled to the preset.
pub mod presets {
    use super::*;

    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub enum Preset {
        Paper,
        Quick,
    }

    impl FromStr for Preset {
        type Err = String;

        fn from_str(s: &str) -> std::result::Result<Self, String> {
            match s {
                "paper" => Ok(Self::Paper),
                "quick" => Ok(Self::Quick),
                other => Err(format!(
                    "unknown preset {other:?} (expected paper or quick)"
                )),
            }
        }
    }

    impl Preset {
        pub fn params(self) -> TrialParams {
            match self {
                Self::Paper => TrialParams::paper(),
                Self::Quick => TrialParams::quick(),
            }
        }

        pub fn as_str(self) -> &'static str {
            match self {
                Self::Paper => "paper",
                Self::Quick => "quick",
            }
        }
    }

    fn steps(from: f64, step: f64, count: usize) -> Vec<f64> {
        // integer multiples keep the grid free of accumulated rounding
        (0..count).map(|i| from + step * i as f64).collect()
    }

    /// beta = 0, 0.25, ..., 3 with 10 trials (5 on the quick preset).
    pub fn beta_sweep(preset: Preset, master_seed: u64) -> SweepSpec {
        SweepSpec {
            fixed: preset.params(),
            axis: Axis::Beta,
            grid: steps(0.0, 0.25, 13),
            trials: trials(preset, 10),
            master_seed,
        }
    }

    /// NSR = 0, 0.1, ..., 1 with 5 trials.
    pub fn nsr_sweep(preset: Preset, master_seed: u64) -> SweepSpec {
        SweepSpec {
            fixed: preset.params(),
            axis: Axis::Nsr,
            grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            trials: 5,
            master_seed,
        }
    }

    /// m = 2p, 3p, ..., 11p with 5 trials.
    pub fn m_sweep(preset: Preset, master_seed: u64) -> SweepSpec {
        let p = preset.params().p as f64;
        SweepSpec {
            fixed: preset.params(),
            axis: Axis::M,
            grid: (2..=11).map(|i| p * i as f64).collect(),
            trials: 5,
            master_seed,
        }
    }

    /// k = p/40, 2p/40, ..., 8p/40 with 10 trials (5 on the quick preset).
    pub fn k_sweep(preset: Preset, master_seed: u64) -> SweepSpec {
        let unit = (preset.params().p / 40) as f64;
        SweepSpec {
            fixed: preset.params(),
            axis: Axis::K,
            grid: (1..=8).map(|i| unit * i as f64).collect(),
            trials: trials(preset, 10),
            master_seed,
        }
    }

    fn trials(preset: Preset, paper: usize) -> usize {
        match preset {
            Preset::Paper => paper,
            Preset::Quick => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub m: usize,
    pub mean_error: Option<f64>,
    /// `mean_error * sqrt(m)`; flat when the error decays like `m^{-1/2}`.
    pub scaled: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRatio {
    pub m_from: usize,
    pub m_to: usize,
    pub observed: f64,
    pub expected: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSide {
    pub m: usize,
    pub k: usize,
    pub scaled_k: f64,
    pub scaled_2k: f64,
    /// Expected near `sqrt(2)`.
    pub growth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub params: TrialParams,
    pub rows: Vec<RateRow>,
    pub ratios: Vec<RateRatio>,
    pub k_side: Option<KSide>,
    pub verdict: String,
}

impl RateStudy {
    pub fn consistent(&self) -> bool {
        !self.ratios.is_empty() && self.ratios.iter().all(|r| r.accepted)
    }
}

/// Accepted band for an observed error ratio, relative to `sqrt(m_from/m_to)`.
/// For a quadrupling this is `[0.35, 0.65]`.
pub const RATE_BAND: (f64, f64) = (0.7, 1.3);

/// Checks that the mean error scales like `m^{-1/2}` over `m_grid`, and
/// optionally like `sqrt(k)` when k doubles at the largest m.
pub fn rate_scaling_study(
    base: &TrialParams,
    m_grid: &[usize],
    trials: usize,
    master_seed: u64,
    k_side: bool,
    options: SweepOptions,
) -> Result<RateStudy> {
    if base.nsr == 0.0 {
        return Ok(RateStudy {
            params: *base,
            rows: Vec::new(),
            ratios: Vec::new(),
            k_side: None,
            verdict: "noiseless regime, rate check skipped".into(),
        });
    }
    let spec = SweepSpec {
        fixed: *base,
        axis: Axis::M,
        grid: m_grid.iter().map(|&m| m as f64).collect(),
        trials,
        master_seed,
    };
    let sweep = run_sweep(&spec, options)?;
    let rows: Vec<RateRow> = sweep
        .points
        .iter()
        .map(|pt| RateRow {
            m: pt.axis_value as usize,
            mean_error: pt.mean_error,
            scaled: pt.mean_error.map(|e| e * pt.axis_value.sqrt()),
        })
        .collect();
    let ratios: Vec<RateRatio> = rows
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (w[0].mean_error?, w[1].mean_error?);
            let observed = b / a;
            let expected = (w[0].m as f64 / w[1].m as f64).sqrt();
            Some(RateRatio {
                m_from: w[0].m,
                m_to: w[1].m,
                observed,
                expected,
                accepted: observed >= RATE_BAND.0 * expected && observed <= RATE_BAND.1 * expected,
            })
        })
        .collect();

    let k_side = if k_side {
        let m = *m_grid.last().ok_or_else(|| invalid("empty m grid"))?;
        let spec = SweepSpec {
            fixed: TrialParams { m, ..*base },
            axis: Axis::K,
            grid: vec![base.k as f64, 2.0 * base.k as f64],
            trials,
            master_seed: master_seed ^ 0x6b5f_7369_6465,
        };
        let side = run_sweep(&spec, options)?;
        match (side.points[0].mean_error, side.points[1].mean_error) {
            (Some(a), Some(b)) => {
                let s = (m as f64).sqrt();
                Some(KSide {
                    m,
                    k: base.k,
                    scaled_k: a * s,
                    scaled_2k: b * s,
                    growth: b / a,
                })
            }
            _ => None,
        }
    } else {
        None
    };

    let study = RateStudy {
        params: *base,
        verdict: String::new(),
        rows,
        ratios,
        k_side,
    };
    let verdict = if study.consistent() {
        "error decays like m^-1/2 within the accepted band".to_string()
    } else {
        "error decay departs from m^-1/2".to_string()
    };
    Ok(RateStudy { verdict, ..study })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub seed: u64,
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Monte-Carlo checks of the moment identities behind the initializer, at
/// m = 1e5, p = 10, k = 3:
///
/// * `E y = |x|^2`
/// * `E W = |x|^2 I + 2 x x'` in spectral norm, within `0.05 |x|^2`
/// * `E y a_l^2 = |x|^2 + 2 x_l^2` for every l, within 3 standard errors
/// * `|A_S| <= sqrt(m) + sqrt(k) + 6` on at least 99% of Gaussian draws
/// * zero signals and negative noise scales are rejected
pub fn oracle_checks(seed: u64) -> Result<OracleReport> {
    let (p, m, k) = (10, 100_000, 3);
    let rec = SeedRecord::new(seed, 0);
    let mut rng = rec.rng();
    let x = generate_signal(p, k, &mut rng)?;
    let inst = generate_instance_with_seed(&x, m, NoiseSpec::none(), &mut rng, Some(rec))?;
    let xd = x.to_dense();
    let n2 = x.two_norm().powi(2);
    let mut checks = Vec::new();

    let y = inst.measurements();
    let phi_sq = norm_estimate(&inst);
    let se = sample_sd(y.iter().copied(), phi_sq) / (m as f64).sqrt();
    let z = (phi_sq - n2).abs() / se;
    checks.push(OracleCheck {
        name: "mean-measurement".into(),
        measured: z,
        tolerance: 3.0,
        passed: z <= 3.0,
        detail: format!("mean(y) = {phi_sq:.5}, |x|^2 = {n2:.5}, {z:.2} standard errors"),
    });

    let all: Vec<usize> = (0..p).collect();
    let w = restricted_second_moment(&inst, &all)?;
    let mut dev = DenseMatrix::zeros(p, p);
    for r in 0..p {
        for c in 0..p {
            let e = if r == c { n2 } else { 0.0 } + 2.0 * xd[r] * xd[c];
            dev.set(r, c, w.get(r, c) - e);
        }
    }
    let rel = symmetric_spectral_norm(&dev) / n2;
    checks.push(OracleCheck {
        name: "expected-second-moment".into(),
        measured: rel,
        tolerance: 0.05,
        passed: rel <= 0.05,
        detail: format!("|W - E W| / |x|^2 = {rel:.4}"),
    });

    let marg = marginal_signals(&inst);
    let mut worst_on: f64 = 0.0;
    let mut worst_off: f64 = 0.0;
    for l in 0..p {
        let expect = n2 + 2.0 * xd[l] * xd[l];
        let col = (0..m).map(|j| y[j] * inst.design().get(j, l).powi(2));
        let se = sample_sd(col, marg[l]) / (m as f64).sqrt();
        let z = (marg[l] - expect).abs() / se;
        if xd[l] != 0.0 {
            worst_on = worst_on.max(z);
        } else {
            worst_off = worst_off.max(z);
        }
    }
    checks.push(OracleCheck {
        name: "marginal-identity-support".into(),
        measured: worst_on,
        tolerance: 3.0,
        passed: worst_on <= 3.0,
        detail: format!("max deviation on the support: {worst_on:.2} standard errors"),
    });
    checks.push(OracleCheck {
        name: "marginal-identity-off-support".into(),
        measured: worst_off,
        tolerance: 3.0,
        passed: worst_off <= 3.0,
        detail: format!("max deviation off the support: {worst_off:.2} standard errors"),
    });

    let (rows, cols, draws) = (1000, 10, 200);
    let bound = (rows as f64).sqrt() + (cols as f64).sqrt() + 6.0;
    let mut norm_rng = SeedRecord::new(seed, 1).rng();
    let within = (0..draws)
        .filter(|_| {
            let data = (0..rows * cols)
                .map(|_| norm_rng.sample(StandardNormal))
                .collect();
            let a = DenseMatrix::from_row_major(rows, cols, data).expect("sized");
            spectral_norm(&a) <= bound
        })
        .count();
    let frac = within as f64 / draws as f64;
    checks.push(OracleCheck {
        name: "support-spectral-norm".into(),
        measured: frac,
        tolerance: 0.99,
        passed: frac >= 0.99,
        detail: format!(
            "{within}/{draws} draws of a {rows}x{cols} design within sqrt(m)+sqrt(k)+6"
        ),
    });

    let zero_rejected = SparseSignal::new(p, vec![0], vec![0.0]).is_err()
        && NoiseSpec::new(NoiseFamily::Gaussian, -1.0).is_err();
    checks.push(OracleCheck {
        name: "degenerate-guards".into(),
        measured: if zero_rejected { 1.0 } else { 0.0 },
        tolerance: 1.0,
        passed: zero_rejected,
        detail: "zero signal and negative noise scale rejected".into(),
    });

    Ok(OracleReport { seed, checks })
}

fn sample_sd(values: impl Iterator<Item = f64>, mean: f64) -> f64 {
    let (mut n, mut ss) = (0usize, 0.0);
    for v in values {
        n += 1;
        ss += (v - mean).powi(2);
    }
    (ss / (n.max(2) - 1) as f64).sqrt()
}
