//! Browser bindings for the demo page in `www/`.
//!
//! The plain functions do the work and are testable natively; the
//! `#[wasm_bindgen]` wrappers only convert errors into JS exceptions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::Serialize;
use wasm_bindgen::prelude::*;

use twf_core::init::{marginal_signals, norm_estimate, screening_cutoff, select_support};
use twf_core::twf;
use twf_core::{
    generate_instance, generate_signal, initialize, relative_error, InitConfig, NoiseSpec,
    ProblemInstance, SeedRecord, SparseSignal, ThresholdOperator,
};

/// Largest `m * p` the page will attempt, to keep the tab responsive.
pub const MAX_CELLS: usize = 4_000_000;

fn synthetic(
    p: usize,
    m: usize,
    k: usize,
    nsr: f64,
    seed: u64,
) -> Result<(SparseSignal, ProblemInstance), String> {
    if m.saturating_mul(p) > MAX_CELLS {
        return Err(format!("m * p must stay below {MAX_CELLS} in the browser"));
    }
    let mut rng = SeedRecord::new(seed, 0).rng();
    let x = generate_signal(p, k, &mut rng).map_err(|e| e.to_string())?;
    let noise = if nsr == 0.0 {
        NoiseSpec::none()
    } else {
        NoiseSpec::gaussian(nsr * x.two_norm().powi(2)).map_err(|e| e.to_string())?
    };
    let inst = generate_instance(&x, m, noise, &mut rng).map_err(|e| e.to_string())?;
    Ok((x, inst))
}

/// `T_tau(x)` on `n` evenly spaced points of `[-xmax, xmax]`.
pub fn threshold_values(kind: &str, tau: f64, xmax: f64, n: usize) -> Result<Vec<f64>, String> {
    let op: ThresholdOperator = kind.parse()?;
    if n < 2 || !(xmax > 0.0) {
        return Err("need n >= 2 and xmax > 0".into());
    }
    let xs: Vec<f64> = (0..n)
        .map(|i| -xmax + 2.0 * xmax * i as f64 / (n - 1) as f64)
        .collect();
    op.apply(&xs, tau).map_err(|e| e.to_string())
}

/// Relative error after each iteration, starting with the initializer.
#[allow(clippy::too_many_arguments)]
pub fn error_trajectory(
    p: usize,
    m: usize,
    k: usize,
    nsr: f64,
    beta: f64,
    mu: f64,
    iterations: usize,
    kind: &str,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let operator: ThresholdOperator = kind.parse()?;
    let (x, inst) = synthetic(p, m, k, nsr, seed)?;
    let init = initialize(&inst, &InitConfig::default()).map_err(|e| e.to_string())?;
    let mut cfg = twf::TwfConfig::new(init.phi_sq);
    cfg.beta = beta;
    cfg.mu = mu;
    cfg.iterations = iterations;
    cfg.operator = operator;
    let mut errors = Vec::with_capacity(iterations + 1);
    twf::run_observed(&init.x0, &inst, &cfg, |_, z| {
        errors.push(relative_error(z, &x).unwrap_or(f64::NAN));
    })
    .map_err(|e| e.to_string())?;
    Ok(errors)
}

#[derive(Serialize)]
pub struct Screening {
    pub phi_sq: f64,
    pub cutoff: f64,
    pub marginals: Vec<f64>,
    /// 0-based.
    pub selected: Vec<usize>,
    /// 0-based.
    pub support: Vec<usize>,
}

pub fn screening_report(
    p: usize,
    m: usize,
    k: usize,
    nsr: f64,
    alpha: f64,
    seed: u64,
) -> Result<Screening, String> {
    InitConfig::with_alpha(alpha)
        .validate()
        .map_err(|e| e.to_string())?;
    let (x, inst) = synthetic(p, m, k, nsr, seed)?;
    let phi_sq = norm_estimate(&inst);
    let marginals = marginal_signals(&inst);
    Ok(Screening {
        phi_sq,
        cutoff: screening_cutoff(phi_sq, alpha, m, p),
        selected: select_support(&marginals, phi_sq, alpha, m, p),
        marginals,
        support: x.support().to_vec(),
    })
}

#[wasm_bindgen]
pub fn threshold_curve(kind: &str, tau: f64, xmax: f64, n: usize) -> Result<Vec<f64>, JsError> {
    threshold_values(kind, tau, xmax, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn recover_trajectory(
    p: usize,
    m: usize,
    k: usize,
    nsr: f64,
    beta: f64,
    mu: f64,
    iterations: usize,
    kind: &str,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    error_trajectory(p, m, k, nsr, beta, mu, iterations, kind, seed as u64)
        .map_err(|e| JsError::new(&e))
}

/// JSON with `phi_sq`, `cutoff`, `marginals`, `selected` and `support`.
#[wasm_bindgen]
pub fn screening(
    p: usize,
    m: usize,
    k: usize,
    nsr: f64,
    alpha: f64,
    seed: u32,
) -> Result<String, JsError> {
    let report =
        screening_report(p, m, k, nsr, alpha, seed as u64).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&report).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn version() -> String {
    twf_core::VERSION.to_string()
}
