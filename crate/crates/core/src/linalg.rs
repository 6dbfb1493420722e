//! Dense row-major matrices and the symmetric eigen routines the initializer
//! needs.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, TwfError};

/// Row-major `rows x cols` matrix of f64.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged rows"));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// `A z`.
    pub fn matvec(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.cols, "matvec dimension mismatch");
        // Iterates are sparse after thresholding; only visit nonzero columns.
        let nz: Vec<(usize, f64)> = z
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, v)| v != 0.0)
            .collect();
        if nz.len() * 2 < self.cols {
            (0..self.rows)
                .map(|i| {
                    let row = self.row(i);
                    nz.iter().map(|&(j, v)| row[j] * v).sum()
                })
                .collect()
        } else {
            (0..self.rows).map(|i| dot(self.row(i), z)).collect()
        }
    }

    /// `A' w`.
    pub fn t_matvec(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.rows, "t_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += wi * a;
            }
        }
        out
    }

    /// Columns `cols` as a new `rows x cols.len()` matrix.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        Self {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.data.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        (0..self.rows)
            .all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol * scale))
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn symmetric_spectral_norm(m: &DenseMatrix) -> f64 {
    m.to_nalgebra()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest singular value of an arbitrary matrix.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    let a = m.to_nalgebra();
    let gram = a.transpose() * &a;
    gram.symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(*v))
        .sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub vector: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Leading (largest algebraic) eigenpair of a symmetric matrix by power
/// iteration.
///
/// The matrix is shifted by its Gershgorin lower bound so the shifted operator
/// is positive semidefinite and its dominant eigenvector is the one with the
/// largest algebraic eigenvalue. Iteration starts from the normalized all-ones
/// vector; if the residual has not halved by `max_iter / 2`, it restarts once
/// from a fixed pseudo-random direction. Stops when
/// `|W v - lambda v| <= tol * max(|lambda|, 1)`. The returned vector has its
/// largest-magnitude entry positive (lowest index wins ties).
pub fn leading_eigenvector(matrix: &DenseMatrix, tol: f64, max_iter: usize) -> Result<EigenPair> {
    let d = matrix.rows();
    if d == 0 {
        return Err(invalid("eigensolver needs a nonempty matrix"));
    }
    if !matrix.is_symmetric(1e-8) {
        return Err(invalid("eigensolver input is not symmetric"));
    }
    if !(tol > 0.0) {
        return Err(invalid("eigensolver tolerance must be positive"));
    }

    let shift = (0..d)
        .map(|i| {
            let off: f64 = (0..d)
                .filter(|&j| j != i)
                .map(|j| matrix.get(i, j).abs())
                .sum();
            matrix.get(i, i) - off
        })
        .fold(f64::INFINITY, f64::min);

    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let (v0, r0) = evaluate(matrix, &v);
    let first_residual = r0;
    let mut best = (v0, r0, v.clone());
    let mut restarted = false;

    for it in 1..=max_iter {
        let mut w = matrix.matvec(&v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= shift * vi;
        }
        let n = norm2(&w);
        if n == 0.0 {
            if restarted {
                // W = shift * I on everything reachable: v is as good as any.
                let (value, residual) = evaluate(matrix, &v);
                return Ok(finish(v, value, it, residual));
            }
            restarted = true;
            v = random_unit(d);
            continue;
        }
        v = w.into_iter().map(|x| x / n).collect();

        let (value, residual) = evaluate(matrix, &v);
        if residual < best.1 {
            best = (value, residual, v.clone());
        }
        if residual <= tol * value.abs().max(1.0) {
            return Ok(finish(v, value, it, residual));
        }
        if !restarted && it == max_iter / 2 && best.1 > 0.5 * first_residual {
            restarted = true;
            v = random_unit(d);
        }
    }

    let (value, residual, vector) = best;
    let pair = finish(vector, value, max_iter, residual);
    Err(TwfError::Convergence {
        vector: pair.vector,
        value: pair.value,
        iterations: pair.iterations,
        residual: pair.residual,
    })
}

/// Fixed pseudo-random restart direction.
fn random_unit(d: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_0000 + d as u64);
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Rayleigh quotient and residual norm for a unit vector.
fn evaluate(matrix: &DenseMatrix, v: &[f64]) -> (f64, f64) {
    let wv = matrix.matvec(v);
    let value = dot(v, &wv);
    let residual = wv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - value * b).powi(2))
        .sum::<f64>()
        .sqrt();
    (value, residual)
}

fn finish(mut vector: Vec<f64>, value: f64, iterations: usize, residual: f64) -> EigenPair {
    normalize_sign(&mut vector);
    EigenPair {
        vector,
        value,
        iterations,
        residual,
    }
}

/// Flips `v` so its largest-magnitude entry is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let mut arg = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[arg].abs() {
            arg = i;
        }
    }
    if v.get(arg).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = leading_eigenvector(&m, 1e-8, 1000).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
        assert!((e.vector[0] - 1.0).abs() < 1e-12 && e.vector[1].abs() < 1e-12);
    }

    #[test]
    fn rank_one() {
        let u = [0.6, 0.8];
        let rows: Vec<Vec<f64>> = u
            .iter()
            .map(|a| u.iter().map(|b| a * b).collect())
            .collect();
        let m = DenseMatrix::from_rows(&rows).unwrap();
        let e = leading_eigenvector(&m, 1e-10, 1000).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
        assert!((e.vector[0] - 0.6).abs() < 1e-10);
        assert!((e.vector[1] - 0.8).abs() < 1e-10);
    }

    #[test]
    fn negative_definite_picks_largest_algebraic() {
        let m = DenseMatrix::from_rows(&[vec![-5.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let e = leading_eigenvector(&m, 1e-10, 1000).unwrap();
        assert!((e.value + 1.0).abs() < 1e-10);
        assert!((e.vector[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn start_orthogonal_to_leading_direction() {
        // all-ones is exactly an eigenvector of the smaller eigenvalue here
        let m = DenseMatrix::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).unwrap();
        let e = leading_eigenvector(&m, 1e-10, 1000).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10, "{e:?}");
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vector[0] - s).abs() < 1e-8 && (e.vector[1] + s).abs() < 1e-8);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            leading_eigenvector(&m, 1e-8, 10),
            Err(TwfError::InvalidArgument(_))
        ));
    }

    #[test]
    fn reports_best_iterate_on_budget_exhaustion() {
        let m = DenseMatrix::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 4.0],
        ])
        .unwrap();
        match leading_eigenvector(&m, 1e-15, 3) {
            Err(TwfError::Convergence {
                vector, iterations, ..
            }) => {
                assert_eq!(vector.len(), 3);
                assert_eq!(iterations, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sparse_and_dense_matvec_agree() {
        let a =
            DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0, 4.0], vec![-1.0, 0.5, 0.0, 2.0]]).unwrap();
        assert_eq!(a.matvec(&[0.0, 0.0, 2.0, 0.0]), vec![6.0, 0.0]);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0, 1.0]), vec![10.0, 1.5]);
        assert_eq!(a.t_matvec(&[1.0, 2.0]), vec![-1.0, 3.0, 3.0, 8.0]);
    }
}
