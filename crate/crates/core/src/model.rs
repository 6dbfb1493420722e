//! Ground-truth signals, Gaussian designs, noise, and quadratic measurements
//! `y_j = (a_j' x)^2 + e_j`.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::rng::SeedRecord;

/// A k-sparse vector in R^p. Support indices are 0-based and sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr", into = "SignalRepr")]
pub struct SparseSignal {
    p: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSignal {
    pub fn new(p: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(invalid("p must be at least 1"));
        }
        if support.len() != values.len() {
            return Err(invalid("support and values differ in length"));
        }
        if support.is_empty() {
            return Err(invalid("signal support is empty"));
        }
        let mut pairs: Vec<(usize, f64)> = support.into_iter().zip(values).collect();
        pairs.sort_by_key(|&(i, _)| i);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("support indices must be distinct"));
        }
        if pairs.last().is_some_and(|&(i, _)| i >= p) {
            return Err(invalid("support index out of range"));
        }
        if pairs.iter().any(|&(_, v)| !v.is_finite()) {
            return Err(invalid("signal values must be finite"));
        }
        let (support, values): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let signal = Self { p, support, values };
        if signal.two_norm() == 0.0 {
            return Err(invalid("signal must be nonzero"));
        }
        Ok(signal)
    }

    /// Builds a signal from a dense vector, taking its nonzeros as support.
    pub fn from_dense(x: &[f64]) -> Result<Self> {
        let (support, values) = x
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .unzip();
        Self::new(x.len(), support, values)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn two_norm(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.p];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            x[i] = v;
        }
        x
    }

    /// `a' x` touching only the support.
    pub fn project(&self, a: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| a[i] * v)
            .sum()
    }
}

/// On-disk form: 1-based support indices.
#[derive(Serialize, Deserialize)]
struct SignalRepr {
    p: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl From<SparseSignal> for SignalRepr {
    fn from(s: SparseSignal) -> Self {
        Self {
            p: s.p,
            support: s.support.iter().map(|i| i + 1).collect(),
            values: s.values,
        }
    }
}

impl TryFrom<SignalRepr> for SparseSignal {
    type Error = crate::error::TwfError;

    fn try_from(r: SignalRepr) -> Result<Self> {
        if r.support.contains(&0) {
            return Err(invalid("support indices are 1-based"));
        }
        Self::new(r.p, r.support.iter().map(|i| i - 1).collect(), r.values)
    }
}

/// Draws a signal with a uniformly random k-subset support and i.i.d.
/// standard normal amplitudes.
pub fn generate_signal<R: Rng + ?Sized>(p: usize, k: usize, rng: &mut R) -> Result<SparseSignal> {
    if k == 0 || k > p {
        return Err(invalid(format!("need 1 <= k <= p, got k = {k}, p = {p}")));
    }
    let support = index::sample(rng, p, k).into_vec();
    loop {
        let values: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        if values.iter().any(|&v| v != 0.0) {
            return SparseSignal::new(p, support, values);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    None,
    /// Normal with standard deviation `scale`.
    Gaussian,
    /// Laplace with scale parameter `scale` (variance `2 scale^2`).
    Laplace,
    /// `Exp(mean = scale) - scale`.
    CenteredExponential,
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Gaussian => "gaussian",
            Self::Laplace => "laplace",
            Self::CenteredExponential => "centered_exponential",
        })
    }
}

impl FromStr for NoiseFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "gaussian" => Ok(Self::Gaussian),
            "laplace" => Ok(Self::Laplace),
            "centered_exponential" => Ok(Self::CenteredExponential),
            other => Err(format!(
                "unknown noise family {other:?} (expected none, gaussian, laplace, centered_exponential)"
            )),
        }
    }
}

/// Noise law for the additive term. `scale` is each family's natural scale
/// parameter; the psi_1 norm is a family-dependent constant times it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    family: NoiseFamily,
    scale: f64,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, scale: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(invalid(format!(
                "noise scale must be finite and >= 0, got {scale}"
            )));
        }
        if family == NoiseFamily::None && scale != 0.0 {
            return Err(invalid("noise family none requires scale 0"));
        }
        Ok(Self { family, scale })
    }

    pub fn none() -> Self {
        Self {
            family: NoiseFamily::None,
            scale: 0.0,
        }
    }

    pub fn gaussian(sd: f64) -> Result<Self> {
        Self::new(NoiseFamily::Gaussian, sd)
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        match self.family {
            NoiseFamily::None => 0.0,
            NoiseFamily::Gaussian => self.scale * rng.sample::<f64, _>(StandardNormal),
            NoiseFamily::Laplace => {
                let e: f64 = rng.sample(Exp::new(1.0).expect("unit rate"));
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * self.scale * e
            }
            NoiseFamily::CenteredExponential => {
                let e: f64 = Exp::new(1.0).expect("unit rate").sample(rng);
                self.scale * (e - 1.0)
            }
        }
    }
}

/// A design, its noise, and the measurements it produced.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    design: DenseMatrix,
    noise: Vec<f64>,
    measurements: Vec<f64>,
    noise_spec: NoiseSpec,
    seed: Option<SeedRecord>,
    signal: Option<SparseSignal>,
}

impl ProblemInstance {
    /// Assembles an instance from a known design, signal and noise vector.
    pub fn from_parts(
        design: DenseMatrix,
        signal: SparseSignal,
        noise: Vec<f64>,
        noise_spec: NoiseSpec,
        seed: Option<SeedRecord>,
    ) -> Result<Self> {
        let m = design.rows();
        if m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        if design.cols() != signal.p() {
            return Err(invalid(format!(
                "design has {} columns but signal has dimension {}",
                design.cols(),
                signal.p()
            )));
        }
        if noise.len() != m {
            return Err(invalid("noise length differs from the number of rows"));
        }
        let measurements = (0..m)
            .map(|j| signal.project(design.row(j)).powi(2) + noise[j])
            .collect();
        Ok(Self {
            design,
            noise,
            measurements,
            noise_spec,
            seed,
            signal: Some(signal),
        })
    }

    /// Wraps observed data with no known truth; noise is unknown and stored as zeros.
    pub fn from_measurements(design: DenseMatrix, measurements: Vec<f64>) -> Result<Self> {
        if design.rows() == 0 || design.cols() == 0 {
            return Err(invalid("design must be at least 1x1"));
        }
        if measurements.len() != design.rows() {
            return Err(invalid("measurement count differs from the number of rows"));
        }
        if measurements.iter().any(|v| !v.is_finite()) {
            return Err(invalid("measurements must be finite"));
        }
        Ok(Self {
            noise: vec![0.0; measurements.len()],
            design,
            measurements,
            noise_spec: NoiseSpec::none(),
            seed: None,
            signal: None,
        })
    }

    /// Reassembles a stored instance, checking `y` against the stored pieces
    /// when the truth is present.
    #[cfg_attr(not(feature = "harness"), allow(dead_code))]
    pub(crate) fn from_stored(
        design: DenseMatrix,
        noise: Vec<f64>,
        measurements: Vec<f64>,
        noise_spec: NoiseSpec,
        seed: Option<SeedRecord>,
        signal: Option<SparseSignal>,
    ) -> Result<Self> {
        let inst = match signal {
            Some(s) => {
                let rebuilt = Self::from_parts(design, s, noise, noise_spec, seed)?;
                if rebuilt.measurements != measurements {
                    return Err(invalid(
                        "stored measurements disagree with design, signal and noise",
                    ));
                }
                rebuilt
            }
            None => {
                let mut inst = Self::from_measurements(design, measurements)?;
                if noise.len() != inst.m() {
                    return Err(invalid("noise length differs from the number of rows"));
                }
                inst.noise = noise;
                inst.noise_spec = noise_spec;
                inst.seed = seed;
                inst
            }
        };
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.design.rows()
    }

    pub fn p(&self) -> usize {
        self.design.cols()
    }

    pub fn design(&self) -> &DenseMatrix {
        &self.design
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn measurements(&self) -> &[f64] {
        &self.measurements
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        self.noise_spec
    }

    pub fn seed(&self) -> Option<SeedRecord> {
        self.seed
    }

    pub fn signal(&self) -> Option<&SparseSignal> {
        self.signal.as_ref()
    }

    /// Same design and truth with every measurement multiplied by `c`.
    pub fn with_scaled_measurements(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.measurements.iter_mut().for_each(|y| *y *= c);
        out
    }
}

/// Draws an `m x p` standard Gaussian design and noise, then measures `signal`.
pub fn generate_instance<R: Rng + ?Sized>(
    signal: &SparseSignal,
    m: usize,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<ProblemInstance> {
    generate_instance_with_seed(signal, m, noise, rng, None)
}

pub fn generate_instance_with_seed<R: Rng + ?Sized>(
    signal: &SparseSignal,
    m: usize,
    noise: NoiseSpec,
    rng: &mut R,
    seed: Option<SeedRecord>,
) -> Result<ProblemInstance> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let p = signal.p();
    let data: Vec<f64> = (0..m * p).map(|_| rng.sample(StandardNormal)).collect();
    let design = DenseMatrix::from_row_major(m, p, data)?;
    let eps: Vec<f64> = (0..m).map(|_| noise.sample(rng)).collect();
    ProblemInstance::from_parts(design, signal.clone(), eps, noise, seed)
}

/// `min(|est - x|, |est + x|) / |x|`.
pub fn relative_error(estimate: &[f64], truth: &SparseSignal) -> Result<f64> {
    if estimate.len() != truth.p() {
        return Err(invalid(format!(
            "estimate has length {}, truth has dimension {}",
            estimate.len(),
            truth.p()
        )));
    }
    let xn = truth.two_norm();
    if xn == 0.0 {
        return Err(invalid("truth must be nonzero"));
    }
    let (mut minus, mut plus) = (0.0, 0.0);
    let x = truth.to_dense();
    for (e, t) in estimate.iter().zip(&x) {
        minus += (e - t).powi(2);
        plus += (e + t).powi(2);
    }
    Ok(minus.min(plus).sqrt() / xn)
}

/// Recomputes `(a_j' x)^2 + e_j` from stored pieces.
pub fn reconstruct_measurements(inst: &ProblemInstance) -> Option<Vec<f64>> {
    let x = inst.signal()?;
    Some(
        (0..inst.m())
            .map(|j| x.project(inst.design().row(j)).powi(2) + inst.noise()[j])
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedRecord;
    use proptest::prelude::*;
    use rand::Rng;

    fn rng(s: u64) -> crate::rng::TrialRng {
        SeedRecord::new(s, 0).rng()
    }

    #[test]
    fn full_support_when_k_equals_p() {
        let s = generate_signal(5, 5, &mut rng(3)).unwrap();
        assert_eq!(s.support(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn generate_signal_rejects_bad_k() {
        assert!(generate_signal(5, 0, &mut rng(0)).is_err());
        assert!(generate_signal(5, 6, &mut rng(0)).is_err());
    }

    #[test]
    fn signal_is_reproducible() {
        let a = generate_signal(1000, 100, &mut rng(11)).unwrap();
        let b = generate_signal(1000, 100, &mut rng(11)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_dense().iter().filter(|v| **v != 0.0).count(), 100);
    }

    #[test]
    fn support_inclusion_frequency() {
        let hits = (0..10_000u64)
            .filter(|&s| {
                let sig = generate_signal(1000, 100, &mut SeedRecord::new(s, 1).rng()).unwrap();
                sig.support().contains(&0)
            })
            .count();
        let freq = hits as f64 / 1e4;
        assert!((freq - 0.1).abs() <= 0.01, "{freq}");
    }

    #[test]
    fn rejects_bad_signals() {
        assert!(SparseSignal::new(3, vec![0, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseSignal::new(3, vec![3], vec![1.0]).is_err());
        assert!(SparseSignal::new(3, vec![1], vec![0.0]).is_err());
        assert!(SparseSignal::new(0, vec![], vec![]).is_err());
    }

    #[test]
    fn forced_design_row() {
        let x = SparseSignal::new(3, vec![0], vec![2.0]).unwrap();
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let inst = ProblemInstance::from_parts(a, x, vec![0.0], NoiseSpec::none(), None).unwrap();
        assert_eq!(inst.measurements(), &[4.0]);
    }

    #[test]
    fn noiseless_measurements_nonnegative_with_unit_mean() {
        let x = SparseSignal::new(10, vec![2, 7], vec![0.6, -0.8]).unwrap();
        let inst = generate_instance(&x, 100_000, NoiseSpec::none(), &mut rng(5)).unwrap();
        let y = inst.measurements();
        assert!(y.iter().all(|v| *v >= 0.0));
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((mean - 1.0).abs() <= 0.02, "{mean}");
    }

    #[test]
    fn measurement_consistency_within_four_ulps() {
        let x = generate_signal(50, 5, &mut rng(9)).unwrap();
        let inst =
            generate_instance(&x, 300, NoiseSpec::gaussian(0.3).unwrap(), &mut rng(10)).unwrap();
        let rebuilt = reconstruct_measurements(&inst).unwrap();
        for (a, b) in rebuilt.iter().zip(inst.measurements()) {
            let ulp = f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            assert!((a - b).abs() <= 4.0 * ulp, "{a} vs {b}");
        }
    }

    #[test]
    fn instances_are_deterministic() {
        let x = generate_signal(30, 3, &mut rng(1)).unwrap();
        let spec = NoiseSpec::new(NoiseFamily::Laplace, 0.5).unwrap();
        let a = generate_instance(&x, 40, spec, &mut rng(2)).unwrap();
        let b = generate_instance(&x, 40, spec, &mut rng(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_guards() {
        assert!(NoiseSpec::new(NoiseFamily::Gaussian, -1.0).is_err());
        assert!(NoiseSpec::new(NoiseFamily::None, 1.0).is_err());
        let x = SparseSignal::new(2, vec![0], vec![1.0]).unwrap();
        assert!(generate_instance(&x, 0, NoiseSpec::none(), &mut rng(0)).is_err());
    }

    #[test]
    fn noise_families_are_centered() {
        for family in [
            NoiseFamily::Gaussian,
            NoiseFamily::Laplace,
            NoiseFamily::CenteredExponential,
        ] {
            let spec = NoiseSpec::new(family, 2.0).unwrap();
            let mut r = rng(17);
            let n = 200_000;
            let mean = (0..n).map(|_| spec.sample(&mut r)).sum::<f64>() / n as f64;
            // every family here has sd <= 2 * sqrt(2)
            assert!(
                mean.abs() < 5.0 * 2.0 * 2f64.sqrt() / (n as f64).sqrt(),
                "{family}: {mean}"
            );
        }
    }

    #[test]
    fn relative_error_basics() {
        let x = SparseSignal::new(3, vec![0, 2], vec![1.0, -2.0]).unwrap();
        let d = x.to_dense();
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        assert_eq!(relative_error(&d, &x).unwrap(), 0.0);
        assert_eq!(relative_error(&neg, &x).unwrap(), 0.0);
        assert_eq!(relative_error(&[0.0; 3], &x).unwrap(), 1.0);
        assert!(relative_error(&[0.0; 2], &x).is_err());
    }

    #[test]
    fn support_spectral_norm_bound() {
        // |A_S| <= sqrt(m) + sqrt(k) + 6 on at least 99% of draws
        let (m, k) = (1000, 50);
        let draws = 1000;
        let ok = (0..draws)
            .filter(|&s| {
                let mut r = SeedRecord::new(s, 2).rng();
                let data = (0..m * k).map(|_| r.sample(StandardNormal)).collect();
                let a = DenseMatrix::from_row_major(m, k, data).unwrap();
                crate::linalg::spectral_norm(&a) <= (m as f64).sqrt() + (k as f64).sqrt() + 6.0
            })
            .count();
        assert!(ok as f64 >= 0.99 * draws as f64, "{ok}/{draws}");
    }

    #[test]
    fn signal_json_uses_one_based_support() {
        let x = SparseSignal::new(4, vec![3, 0], vec![2.0, 1.0]).unwrap();
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, r#"{"p":4,"support":[1,4],"values":[1.0,2.0]}"#);
        let back: SparseSignal = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
    }

    proptest! {
        #[test]
        fn relative_error_is_sign_symmetric(v in prop::collection::vec(-10.0f64..10.0, 6)) {
            let x = SparseSignal::new(6, vec![1, 4], vec![0.5, -1.5]).unwrap();
            let neg: Vec<f64> = v.iter().map(|a| -a).collect();
            prop_assert_eq!(relative_error(&v, &x).unwrap(), relative_error(&neg, &x).unwrap());
        }
    }
}
