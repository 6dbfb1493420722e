//! Property suites behind `twf selftest`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::experiments::oracle_checks;
use crate::linalg::{dot, leading_eigenvector, norm2, DenseMatrix};
use crate::model::{generate_instance, generate_signal, NoiseSpec};
use crate::rng::SeedRecord;
use crate::thresholding::ThresholdOperator;
use crate::twf::{self, empirical_risk, gradient, TwfConfig};

pub const SUITES: [&str; 7] = [
    "threshold-contract",
    "threshold-symmetry",
    "gradient",
    "eigensolver",
    "fixed-point",
    "equivariance",
    "oracles",
];

/// Deliberate defects for checking that the suites can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Threshold operator that leaks values inside `[-tau, tau]`.
    Threshold,
}

#[derive(Clone, Debug, Default)]
pub struct SelfTestOptions {
    pub suite: Option<String>,
    pub fault: Option<Fault>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn run(options: &SelfTestOptions) -> Result<Vec<SuiteOutcome>, String> {
    if let Some(s) = &options.suite {
        if !SUITES.contains(&s.as_str()) {
            return Err(format!(
                "unknown suite {s:?}; available: {}",
                SUITES.join(", ")
            ));
        }
    }
    let wanted = |name: &str| options.suite.as_deref().is_none_or(|s| s == name);
    let eval: fn(ThresholdOperator, f64, f64) -> f64 = match options.fault {
        Some(Fault::Threshold) => leaky_threshold,
        None => ThresholdOperator::eval,
    };
    let seed = options.seed;
    let mut out = Vec::new();
    for &name in &SUITES {
        if !wanted(name) {
            continue;
        }
        let (passed, detail) = match name {
            "threshold-contract" => threshold_contract(eval, 1_000_000, seed),
            "threshold-symmetry" => threshold_symmetry(eval, 100_000, seed),
            "gradient" => gradient_check(100, seed),
            "eigensolver" => eigensolver_check(100, seed),
            "fixed-point" => fixed_point(seed),
            "equivariance" => equivariance(seed),
            "oracles" => match oracle_checks(seed) {
                Ok(r) => {
                    let failed: Vec<&str> = r
                        .checks
                        .iter()
                        .filter(|c| !c.passed)
                        .map(|c| c.name.as_str())
                        .collect();
                    let detail = if failed.is_empty() {
                        format!("{} checks passed", r.checks.len())
                    } else {
                        format!("failed: {}", failed.join(", "))
                    };
                    (r.passed(), detail)
                }
                Err(e) => (false, e.to_string()),
            },
            _ => unreachable!(),
        };
        out.push(SuiteOutcome {
            name,
            passed,
            detail,
        });
    }
    Ok(out)
}

fn leaky_threshold(op: ThresholdOperator, x: f64, tau: f64) -> f64 {
    if x.abs() <= tau {
        0.5 * x
    } else {
        op.eval(x, tau)
    }
}

/// Random `(x, tau)` pairs spread over several magnitudes, plus the boundary
/// `|x| = tau`.
fn sample_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let scale = 10f64.powi(rng.random_range(-6..=6));
    let tau = rng.random::<f64>() * scale;
    let x = match rng.random_range(0..8) {
        0 => tau,
        1 => -tau,
        _ => rng.sample::<f64, _>(StandardNormal) * 2.0 * scale,
    };
    (x, tau)
}

pub fn threshold_contract(
    eval: fn(ThresholdOperator, f64, f64) -> f64,
    pairs: usize,
    seed: u64,
) -> (bool, String) {
    let mut rng = SeedRecord::new(seed, 0x7468).rng();
    let mut violations = 0usize;
    for _ in 0..pairs {
        let (x, tau) = sample_pair(&mut rng);
        for op in [ThresholdOperator::Soft, ThresholdOperator::Hard] {
            let t = eval(op, x, tau);
            if (x.abs() <= tau && t != 0.0) || !((t - x).abs() <= tau) {
                violations += 1;
            }
        }
    }
    (
        violations == 0,
        format!("{violations} violations over {pairs} pairs x 2 operators"),
    )
}

pub fn threshold_symmetry(
    eval: fn(ThresholdOperator, f64, f64) -> f64,
    pairs: usize,
    seed: u64,
) -> (bool, String) {
    let mut rng = SeedRecord::new(seed, 0x7379).rng();
    let mut bad = 0usize;
    for _ in 0..pairs {
        let (x, tau) = sample_pair(&mut rng);
        let y = x + rng.random::<f64>() * tau.max(1e-3);
        for op in [ThresholdOperator::Soft, ThresholdOperator::Hard] {
            if eval(op, -x, tau) != -eval(op, x, tau) {
                bad += 1;
            }
            let tie = x.abs() == tau || y.abs() == tau;
            if !(op == ThresholdOperator::Hard && tie) && eval(op, x, tau) > eval(op, y, tau) {
                bad += 1;
            }
        }
    }
    (
        bad == 0,
        format!("{bad} odd-symmetry or monotonicity failures"),
    )
}

pub fn gradient_check(instances: usize, seed: u64) -> (bool, String) {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = SeedRecord::new(seed, 0x6772_0000 + i as u64).rng();
        let p = rng.random_range(1..=20);
        let m = rng.random_range(1..=50);
        let k = rng.random_range(1..=p);
        let x = generate_signal(p, k, &mut rng).expect("valid k");
        let inst = generate_instance(&x, m, NoiseSpec::gaussian(0.5).expect("valid"), &mut rng)
            .expect("valid m");
        let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let g = gradient(&z, &inst);
        let fd: Vec<f64> = (0..p)
            .map(|l| {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[l] += h;
                zm[l] -= h;
                (empirical_risk(&zp, &inst) - empirical_risk(&zm, &inst)) / (2.0 * h)
            })
            .collect();
        let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = norm2(&diff) / norm2(&g).max(1e-12);
        worst = worst.max(rel);
    }
    (
        worst <= 1e-5,
        format!("worst relative error {worst:.2e} over {instances} instances"),
    )
}

/// Compares power iteration with a full symmetric eigendecomposition on
/// random symmetric matrices whose top eigen-gap is at least 1e-3.
pub fn eigensolver_check(matrices: usize, seed: u64) -> (bool, String) {
    let mut rng = SeedRecord::new(seed, 0x6569).rng();
    let (mut worst_val, mut worst_vec) = (0.0f64, 0.0f64);
    let mut done = 0;
    while done < matrices {
        let d = rng.random_range(1..=20);
        let mut a = DenseMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..=r {
                let v: f64 = rng.sample(StandardNormal);
                a.set(r, c, v);
                a.set(c, r, v);
            }
        }
        let eig = DMatrix::from_row_slice(d, d, a.as_slice()).symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        if d > 1 && eig.eigenvalues[order[0]] - eig.eigenvalues[order[1]] < 1e-3 {
            continue;
        }
        let lead = order[0];
        let oracle: Vec<f64> = eig.eigenvectors.column(lead).iter().copied().collect();
        let Ok(pair) = leading_eigenvector(&a, 1e-12, 5_000_000) else {
            return (
                false,
                format!("power iteration did not converge on a {d}x{d} matrix"),
            );
        };
        let sign = dot(&oracle, &pair.vector).signum();
        let vec_err = oracle
            .iter()
            .zip(&pair.vector)
            .map(|(o, v)| (sign * o - v).abs())
            .fold(0.0, f64::max);
        worst_val = worst_val.max((pair.value - eig.eigenvalues[lead]).abs());
        worst_vec = worst_vec.max(vec_err);
        done += 1;
    }
    (
        worst_val <= 1e-8 && worst_vec <= 1e-6,
        format!("worst eigenvalue error {worst_val:.2e}, eigenvector error {worst_vec:.2e}"),
    )
}

pub fn fixed_point(seed: u64) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let mut rng = SeedRecord::new(seed, 0x6670_0000 + i).rng();
        let x = generate_signal(50, 5, &mut rng).expect("valid k");
        let inst = generate_instance(&x, 300, NoiseSpec::none(), &mut rng).expect("valid m");
        let xd = x.to_dense();
        let step = match twf::twf_step(&xd, &inst, &TwfConfig::new(x.two_norm().powi(2))) {
            Ok(s) => s,
            Err(e) => return (false, e.to_string()),
        };
        let diff: Vec<f64> = step.iter().zip(&xd).map(|(a, b)| a - b).collect();
        worst = worst.max(norm2(&diff) / x.two_norm());
    }
    (
        worst <= 1e-12,
        format!("worst relative move from the truth {worst:.2e}"),
    )
}

pub fn equivariance(seed: u64) -> (bool, String) {
    let mut rng = SeedRecord::new(seed, 0x6571).rng();
    let x = generate_signal(60, 4, &mut rng).expect("valid k");
    let inst = generate_instance(
        &x,
        400,
        NoiseSpec::gaussian(0.5 * x.two_norm().powi(2)).expect("valid"),
        &mut rng,
    )
    .expect("valid m");
    let init: Vec<f64> = (0..60).map(|_| rng.sample(StandardNormal)).collect();
    let neg: Vec<f64> = init.iter().map(|v| -v).collect();
    let mut cfg = TwfConfig::new(x.two_norm().powi(2));
    cfg.iterations = 200;
    match (twf::run(&init, &inst, &cfg), twf::run(&neg, &inst, &cfg)) {
        (Ok(a), Ok(b)) => {
            let exact = a
                .final_estimate
                .iter()
                .zip(&b.final_estimate)
                .all(|(u, v)| *u == -v);
            (
                exact,
                format!(
                    "run(-z0) {} -run(z0) exactly",
                    if exact { "equals" } else { "differs from" }
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => (false, e.to_string()),
    }
}
