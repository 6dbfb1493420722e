//! Diagonal-thresholding initialization.
//!
//! Screens coordinates by their marginal statistic `I_l = mean(y_j a_jl^2)`,
//! keeps those above `(1 + alpha sqrt(log(mp)/m)) phi^2`, and returns `phi`
//! times the leading eigenvector of `mean(y_j a_jS a_jS')` on the kept set.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Result, TwfError};
use crate::linalg::{leading_eigenvector, DenseMatrix, EigenPair};
use crate::model::ProblemInstance;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub alpha: f64,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            eig_tol: 1e-8,
            eig_max_iter: 1000,
        }
    }
}

impl InitConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(invalid("alpha must be finite and >= 0"));
        }
        if !(self.eig_tol > 0.0) {
            return Err(invalid("eigensolver tolerance must be positive"));
        }
        if self.eig_max_iter == 0 {
            return Err(invalid("eigensolver needs at least one iteration"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InitResult {
    pub phi_sq: f64,
    pub marginals: Vec<f64>,
    /// Kept coordinates, 0-based in memory and 1-based when serialized.
    #[serde(serialize_with = "one_based")]
    pub selected: Vec<usize>,
    pub x0: Vec<f64>,
    pub eigenvalue: f64,
    pub eigen_iterations: usize,
    pub eigen_residual: f64,
    /// Screening kept nothing; `selected` holds the single largest marginal.
    pub fallback: bool,
    /// The eigensolver hit its budget; `x0` uses its best iterate.
    pub eigen_converged: bool,
}

fn one_based<S: Serializer>(v: &[usize], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|i| i + 1))
}

/// `phi^2 = mean(y)`.
pub fn norm_estimate(instance: &ProblemInstance) -> f64 {
    let y = instance.measurements();
    y.iter().sum::<f64>() / y.len() as f64
}

/// `I_l = mean_j(y_j a_jl^2)` for every coordinate.
pub fn marginal_signals(instance: &ProblemInstance) -> Vec<f64> {
    let a = instance.design();
    let mut acc = vec![0.0; instance.p()];
    for (j, &y) in instance.measurements().iter().enumerate() {
        for (s, &v) in acc.iter_mut().zip(a.row(j)) {
            *s += y * v * v;
        }
    }
    let m = instance.m() as f64;
    acc.iter_mut().for_each(|s| *s /= m);
    acc
}

/// Screening level `(1 + alpha sqrt(log(mp)/m)) phi^2`.
pub fn screening_cutoff(phi_sq: f64, alpha: f64, m: usize, p: usize) -> f64 {
    let (m, p) = (m as f64, p as f64);
    (1.0 + alpha * ((m * p).ln() / m).sqrt()) * phi_sq
}

/// Coordinates whose marginal strictly exceeds the screening cutoff.
pub fn select_support(
    marginals: &[f64],
    phi_sq: f64,
    alpha: f64,
    m: usize,
    p: usize,
) -> Vec<usize> {
    let cutoff = screening_cutoff(phi_sq, alpha, m, p);
    marginals
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v > cutoff)
        .map(|(l, _)| l)
        .collect()
}

/// `W_SS = mean_j(y_j a_jS a_jS')` on the selected coordinates; rows and
/// columns follow the order of `selected`.
pub fn restricted_second_moment(
    instance: &ProblemInstance,
    selected: &[usize],
) -> Result<DenseMatrix> {
    if selected.is_empty() {
        return Err(invalid(
            "restricted second moment needs a nonempty coordinate set",
        ));
    }
    if selected.iter().any(|&l| l >= instance.p()) {
        return Err(invalid("selected coordinate out of range"));
    }
    let d = selected.len();
    let mut w = DenseMatrix::zeros(d, d);
    let mut sub = vec![0.0; d];
    let a = instance.design();
    for (j, &y) in instance.measurements().iter().enumerate() {
        if y == 0.0 {
            continue;
        }
        let row = a.row(j);
        for (s, &l) in sub.iter_mut().zip(selected) {
            *s = row[l];
        }
        for r in 0..d {
            let yr = y * sub[r];
            let out = w.row_mut(r);
            for c in r..d {
                out[c] += yr * sub[c];
            }
        }
    }
    let m = instance.m() as f64;
    for r in 0..d {
        for c in r..d {
            let v = w.get(r, c) / m;
            w.set(r, c, v);
            w.set(c, r, v);
        }
    }
    Ok(w)
}

/// Runs the full initializer.
pub fn initialize(instance: &ProblemInstance, config: &InitConfig) -> Result<InitResult> {
    config.validate()?;
    let phi_sq = norm_estimate(instance);
    if !(phi_sq > 0.0) {
        return Err(TwfError::DegenerateInstance(format!(
            "norm estimate phi^2 = {phi_sq} is not positive"
        )));
    }
    let marginals = marginal_signals(instance);
    let mut selected = select_support(&marginals, phi_sq, config.alpha, instance.m(), instance.p());
    let fallback = selected.is_empty();
    if fallback {
        let best = marginals
            .iter()
            .enumerate()
            .fold(0, |b, (l, &v)| if v > marginals[b] { l } else { b });
        selected.push(best);
    }

    let w = restricted_second_moment(instance, &selected)?;
    let (pair, converged) = match leading_eigenvector(&w, config.eig_tol, config.eig_max_iter) {
        Ok(pair) => (pair, true),
        Err(TwfError::Convergence {
            vector,
            value,
            iterations,
            residual,
        }) => (
            EigenPair {
                vector,
                value,
                iterations,
                residual,
            },
            false,
        ),
        Err(e) => return Err(e),
    };

    let phi = phi_sq.sqrt();
    let mut x0 = vec![0.0; instance.p()];
    for (&l, &v) in selected.iter().zip(&pair.vector) {
        x0[l] = phi * v;
    }

    Ok(InitResult {
        phi_sq,
        marginals,
        selected,
        x0,
        eigenvalue: pair.value,
        eigen_iterations: pair.iterations,
        eigen_residual: pair.residual,
        fallback,
        eigen_converged: converged,
    })
}
