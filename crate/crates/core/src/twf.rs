//! Thresholded Wirtinger flow.
//!
//! Each step moves along the gradient of the quartic risk
//! `f(z) = 1/(4m) sum_j ((a_j' z)^2 - y_j)^2`, scaled by `mu / phi^2`, then
//! applies the threshold operator at level `(mu / phi^2) tau(z)` where
//! `tau(z)^2 = beta log(mp) / m^2 * sum_j ((a_j' z)^2 - y_j)^2 (a_j' z)^2`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TwfError};
use crate::linalg::norm2;
use crate::model::ProblemInstance;
use crate::thresholding::ThresholdOperator;

/// Iterates whose norm exceeds this multiple of `phi` count as diverged.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwfConfig {
    pub mu: f64,
    pub beta: f64,
    pub iterations: usize,
    pub operator: ThresholdOperator,
    pub record_trajectory: bool,
    /// Norm estimate from initialization; frozen for the whole run.
    pub phi_sq: f64,
}

impl TwfConfig {
    /// Defaults `mu = 0.01`, `beta = 1`, `T = 1000`, soft thresholding.
    pub fn new(phi_sq: f64) -> Self {
        Self {
            mu: 0.01,
            beta: 1.0,
            iterations: 1000,
            operator: ThresholdOperator::Soft,
            record_trajectory: false,
            phi_sq,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(invalid("mu must be positive"));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(invalid("beta must be finite and >= 0"));
        }
        if !(self.phi_sq > 0.0) || !self.phi_sq.is_finite() {
            return Err(invalid("phi_sq must be positive"));
        }
        Ok(())
    }

    fn step_scale(&self) -> f64 {
        self.mu / self.phi_sq
    }
}

/// Diagnostics for iterate `iter`. `tau` and `risk` are evaluated at that
/// iterate; `step_norm` is its distance from the previous one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub risk: f64,
    pub tau: f64,
    pub step_norm: f64,
    pub support_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwfTrace {
    #[serde(rename = "final")]
    pub final_estimate: Vec<f64>,
    pub iterations_run: usize,
    pub records: Vec<IterRecord>,
}

impl TwfTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,risk,tau,step_norm,support_size\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iter, r.risk, r.tau, r.step_norm, r.support_size
            ));
        }
        out
    }
}

/// Residuals `(a_j'z)^2 - y_j` together with `a_j'z`.
struct Residuals {
    proj: Vec<f64>,
    resid: Vec<f64>,
}

impl Residuals {
    fn new(z: &[f64], instance: &ProblemInstance) -> Self {
        let proj = instance.design().matvec(z);
        let resid = proj
            .iter()
            .zip(instance.measurements())
            .map(|(w, y)| w * w - y)
            .collect();
        Self { proj, resid }
    }

    fn risk(&self) -> f64 {
        self.resid.iter().map(|r| r * r).sum::<f64>() / (4.0 * self.resid.len() as f64)
    }

    fn gradient(&self, instance: &ProblemInstance) -> Vec<f64> {
        let m = self.resid.len() as f64;
        let coef: Vec<f64> = self
            .resid
            .iter()
            .zip(&self.proj)
            .map(|(r, w)| r * w / m)
            .collect();
        instance.design().t_matvec(&coef)
    }

    fn threshold_level(&self, beta: f64, p: usize) -> f64 {
        let m = self.resid.len() as f64;
        let s: f64 = self
            .resid
            .iter()
            .zip(&self.proj)
            .map(|(r, w)| (r * w).powi(2))
            .sum();
        (beta * (m * p as f64).ln() / (m * m) * s).sqrt()
    }
}

fn check_dim(z: &[f64], instance: &ProblemInstance) {
    assert_eq!(
        z.len(),
        instance.p(),
        "iterate dimension differs from design"
    );
}

pub fn empirical_risk(z: &[f64], instance: &ProblemInstance) -> f64 {
    check_dim(z, instance);
    Residuals::new(z, instance).risk()
}

pub fn gradient(z: &[f64], instance: &ProblemInstance) -> Vec<f64> {
    check_dim(z, instance);
    Residuals::new(z, instance).gradient(instance)
}

pub fn threshold_level(z: &[f64], instance: &ProblemInstance, beta: f64) -> f64 {
    check_dim(z, instance);
    Residuals::new(z, instance).threshold_level(beta, instance.p())
}

/// One update. Fails with [`TwfError::Divergence`] (iteration 1, empty
/// trace) if the result is non-finite or blows past the divergence guard.
pub fn twf_step(z: &[f64], instance: &ProblemInstance, config: &TwfConfig) -> Result<Vec<f64>> {
    config.validate()?;
    check_dim(z, instance);
    let res = Residuals::new(z, instance);
    let (next, _) =
        step_from(z, &res, instance, config).map_err(|reason| TwfError::Divergence {
            iteration: 1,
            reason,
            partial: Box::new(TwfTrace {
                final_estimate: z.to_vec(),
                iterations_run: 0,
                records: Vec::new(),
            }),
        })?;
    Ok(next)
}

fn step_from(
    z: &[f64],
    res: &Residuals,
    instance: &ProblemInstance,
    config: &TwfConfig,
) -> std::result::Result<(Vec<f64>, f64), String> {
    let c = config.step_scale();
    let tau = res.threshold_level(config.beta, instance.p());
    let grad = res.gradient(instance);
    let mut next: Vec<f64> = z.iter().zip(&grad).map(|(a, g)| a - c * g).collect();
    let level = c * tau;
    if !level.is_finite() {
        return Err(format!("threshold level is {level}"));
    }
    config
        .operator
        .apply_in_place(&mut next, level)
        .map_err(|e| e.to_string())?;
    let n = norm2(&next);
    if !n.is_finite() {
        return Err("iterate is not finite".into());
    }
    if n > DIVERGENCE_FACTOR * config.phi_sq.sqrt() {
        return Err(format!("iterate norm {n:e} exceeds the divergence guard"));
    }
    Ok((next, tau))
}

/// Runs `config.iterations` steps from `init`.
pub fn run(init: &[f64], instance: &ProblemInstance, config: &TwfConfig) -> Result<TwfTrace> {
    run_observed(init, instance, config, |_, _| {})
}

/// Like [`run`], calling `observe(t, z)` for every iterate `t = 0..=T`.
pub fn run_observed<F>(
    init: &[f64],
    instance: &ProblemInstance,
    config: &TwfConfig,
    mut observe: F,
) -> Result<TwfTrace>
where
    F: FnMut(usize, &[f64]),
{
    config.validate()?;
    check_dim(init, instance);
    if init.iter().any(|v| !v.is_finite()) {
        return Err(invalid("initial estimate must be finite"));
    }

    let mut z = init.to_vec();
    let mut records = Vec::new();
    let mut prev_step = 0.0;
    observe(0, &z);

    for t in 0..config.iterations {
        let res = Residuals::new(&z, instance);
        match step_from(&z, &res, instance, config) {
            Ok((next, tau)) => {
                if config.record_trajectory {
                    records.push(record(t, &z, &res, tau, prev_step));
                }
                prev_step = z
                    .iter()
                    .zip(&next)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                z = next;
                observe(t + 1, &z);
            }
            Err(reason) => {
                return Err(TwfError::Divergence {
                    iteration: t + 1,
                    reason,
                    partial: Box::new(TwfTrace {
                        final_estimate: z,
                        iterations_run: t,
                        records,
                    }),
                });
            }
        }
    }

    if config.record_trajectory {
        let res = Residuals::new(&z, instance);
        let tau = res.threshold_level(config.beta, instance.p());
        records.push(record(config.iterations, &z, &res, tau, prev_step));
    }

    Ok(TwfTrace {
        final_estimate: z,
        iterations_run: config.iterations,
        records,
    })
}

fn record(iter: usize, z: &[f64], res: &Residuals, tau: f64, step_norm: f64) -> IterRecord {
    IterRecord {
        iter,
        risk: res.risk(),
        tau,
        step_norm,
        support_size: z.iter().filter(|v| **v != 0.0).count(),
    }
}

/// Sample size `k^2 log(mp) (1 + sigma^2/|x|^4)` at which the recovery
/// guarantee kicks in, with the unknown absolute constant set to 1. Advisory.
pub fn advisory_sample_size(k: usize, p: usize, m: usize, nsr: f64) -> f64 {
    (1.0 + nsr * nsr) * (k * k) as f64 * ((m * p) as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{initialize, InitConfig};
    use crate::linalg::DenseMatrix;
    use crate::model::{generate_instance, generate_signal, relative_error, NoiseSpec};
    use crate::rng::SeedRecord;

    fn desk(seed: u64, p: usize, m: usize, k: usize, sd: f64) -> ProblemInstance {
        let mut rng = SeedRecord::new(seed, 0).rng();
        let x = generate_signal(p, k, &mut rng).unwrap();
        let noise = if sd == 0.0 {
            NoiseSpec::none()
        } else {
            NoiseSpec::gaussian(sd).unwrap()
        };
        generate_instance(&x, m, noise, &mut rng).unwrap()
    }

    #[test]
    fn risk_by_hand() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let i = ProblemInstance::from_measurements(a, vec![1.0]).unwrap();
        assert_eq!(empirical_risk(&[2.0, 0.0], &i), 2.25);
        assert_eq!(empirical_risk(&[-2.0, 0.0], &i), 2.25);
    }

    #[test]
    fn threshold_level_by_hand() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let i = ProblemInstance::from_measurements(a, vec![0.0]).unwrap();
        let tau = threshold_level(&[1.0, 0.0, 0.0], &i, 4.0);
        assert!((tau - 2.0 * 3f64.ln().sqrt()).abs() < 1e-14);
        assert!((tau - 2.096_29).abs() < 1e-5);
        assert_eq!(threshold_level(&[1.0, 0.0, 0.0], &i, 0.0), 0.0);
    }

    #[test]
    fn truth_is_stationary_without_noise() {
        let i = desk(1, 30, 200, 3, 0.0);
        let x = i.signal().unwrap().to_dense();
        assert_eq!(empirical_risk(&x, &i), 0.0);
        assert!(gradient(&x, &i).iter().all(|g| *g == 0.0));
        assert_eq!(threshold_level(&x, &i, 1.0), 0.0);
        assert!(gradient(&vec![0.0; 30], &i).iter().all(|g| *g == 0.0));
        let next = twf_step(&x, &i, &TwfConfig::new(1.0)).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn zero_beta_is_plain_gradient_step() {
        let i = desk(2, 20, 100, 3, 0.1);
        let mut cfg = TwfConfig::new(2.0);
        cfg.beta = 0.0;
        let z: Vec<f64> = (0..20).map(|l| (l as f64 * 0.37).sin()).collect();
        let g = gradient(&z, &i);
        let c = cfg.mu / cfg.phi_sq;
        let expect: Vec<f64> = z.iter().zip(&g).map(|(a, b)| a - c * b).collect();
        assert_eq!(twf_step(&z, &i, &cfg).unwrap(), expect);
    }

    #[test]
    fn step_is_odd() {
        let i = desk(3, 25, 120, 4, 0.5);
        let cfg = TwfConfig::new(1.3);
        for s in 0..10 {
            let z: Vec<f64> = (0..25).map(|l| ((l * 7 + s) as f64).cos()).collect();
            let nz: Vec<f64> = z.iter().map(|v| -v).collect();
            let a = twf_step(&z, &i, &cfg).unwrap();
            let b = twf_step(&nz, &i, &cfg).unwrap();
            assert!(a.iter().zip(&b).all(|(u, v)| *u == -*v));
        }
    }

    #[test]
    fn zero_iterations_returns_init() {
        let i = desk(4, 10, 30, 2, 0.0);
        let mut cfg = TwfConfig::new(1.0);
        cfg.iterations = 0;
        cfg.record_trajectory = true;
        let init = vec![0.5; 10];
        let tr = run(&init, &i, &cfg).unwrap();
        assert_eq!(tr.final_estimate, init);
        assert_eq!(tr.records.len(), 1);
    }

    #[test]
    fn trajectory_has_t_plus_one_records() {
        let i = desk(5, 10, 60, 2, 0.1);
        let mut cfg = TwfConfig::new(1.0);
        cfg.iterations = 7;
        cfg.record_trajectory = true;
        let tr = run(&[0.1; 10], &i, &cfg).unwrap();
        assert_eq!(tr.records.len(), 8);
        assert_eq!(tr.records[0].step_norm, 0.0);
        assert!(tr
            .to_csv()
            .starts_with("iter,risk,tau,step_norm,support_size\n"));
        assert_eq!(tr.to_csv().lines().count(), 9);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TwfConfig::new(1.0);
        cfg.mu = -1.0;
        assert_eq!(
            cfg.validate().unwrap_err().to_string(),
            "invalid argument: mu must be positive"
        );
        let mut cfg = TwfConfig::new(1.0);
        cfg.beta = -0.1;
        assert!(cfg.validate().is_err());
        assert!(TwfConfig::new(0.0).validate().is_err());
    }

    #[test]
    fn huge_step_diverges_with_partial_trace() {
        let i = desk(6, 10, 50, 2, 0.0);
        let mut cfg = TwfConfig::new(1e-6);
        cfg.mu = 1e3;
        cfg.iterations = 100;
        match run(&[1.0; 10], &i, &cfg) {
            Err(TwfError::Divergence {
                iteration, partial, ..
            }) => {
                assert!(iteration >= 1);
                assert_eq!(partial.iterations_run, iteration - 1);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn noiseless_desk_recovery() {
        let i = desk(7, 200, 2000, 10, 0.0);
        let x = i.signal().unwrap();
        let init = initialize(&i, &InitConfig::default()).unwrap();
        let cfg = TwfConfig::new(init.phi_sq);
        let tr = run(&init.x0, &i, &cfg).unwrap();
        let err = relative_error(&tr.final_estimate, x).unwrap();
        assert!(err <= 1e-3, "{err}");
    }

    #[test]
    fn threshold_scale_covariance() {
        // z -> c z, y -> c^2 y multiplies tau by c^3
        let i = desk(8, 15, 80, 3, 0.2);
        let c = 2.0;
        let scaled = i.with_scaled_measurements(c * c);
        let z: Vec<f64> = (0..15).map(|l| (l as f64).sin()).collect();
        let cz: Vec<f64> = z.iter().map(|v| c * v).collect();
        assert_eq!(
            threshold_level(&cz, &scaled, 1.0),
            c.powi(3) * threshold_level(&z, &i, 1.0)
        );
    }

    #[test]
    fn advisory_formula() {
        let s = advisory_sample_size(10, 100, 1000, 0.0);
        assert!((s - 100.0 * (1e5f64).ln()).abs() < 1e-9);
    }
}
