//! Dense symmetric factorizations and subspace helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// `P A Pᵀ = L D Lᵀ` with symmetric diagonal pivoting (largest remaining
/// diagonal first). Intended for positive definite systems; indefinite or
/// numerically singular input is reported as an error.
#[derive(Clone, Debug)]
pub struct Ldlt {
    l: DMatrix<f64>,
    d: DVector<f64>,
    perm: Vec<usize>,
}

impl Ldlt {
    /// Pivots below `rel_tol` times the largest diagonal entry count as singular.
    pub fn factor(a: &DMatrix<f64>, rel_tol: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Solver(format!("matrix is {}x{}, not square", n, a.ncols())));
        }
        let mut w = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].abs()));
        let tol = rel_tol * scale;
        for k in 0..n {
            let (piv, best) = (k..n)
                .map(|i| (i, w[(i, i)]))
                .fold((k, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !best.is_finite() {
                return Err(Error::Solver("non-finite entry in matrix".into()));
            }
            if best <= tol {
                let most_negative = (k..n).map(|i| w[(i, i)]).fold(f64::INFINITY, f64::min);
                if most_negative < -tol {
                    return Err(Error::Solver(format!(
                        "matrix is indefinite (pivot {most_negative:e} at step {k} of {n})"
                    )));
                }
                return Err(Error::Solver(format!(
                    "matrix is numerically singular (pivot {best:e} at step {k} of {n}, tolerance {tol:e})"
                )));
            }
            if piv != k {
                w.swap_rows(k, piv);
                w.swap_columns(k, piv);
                perm.swap(k, piv);
            }
            let dk = w[(k, k)];
            for i in k + 1..n {
                w[(i, k)] /= dk;
            }
            for j in k + 1..n {
                let ljk = w[(j, k)] * dk;
                for i in j..n {
                    let v = w[(i, k)] * ljk;
                    w[(i, j)] -= v;
                }
                for i in j..n {
                    w[(j, i)] = w[(i, j)];
                }
            }
        }
        let d = DVector::from_fn(n, |i, _| w[(i, i)]);
        let l = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => w[(i, j)],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => 0.0,
        });
        Ok(Self { l, d, perm })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn pivots(&self) -> &DVector<f64> {
        &self.d
    }

    /// Ratio of largest to smallest pivot.
    pub fn condition_estimate(&self) -> f64 {
        if self.d.is_empty() {
            return 1.0;
        }
        self.d.max() / self.d.min()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut y = DVector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s;
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s;
        }
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[self.perm[i]] = y[i];
        }
        x
    }
}

/// Eigen-split of a symmetric positive semidefinite matrix into range and null space.
#[derive(Clone, Debug)]
pub struct SymmetricSplit {
    range: DMatrix<f64>,
    values: DVector<f64>,
    null: DMatrix<f64>,
}

impl SymmetricSplit {
    /// Eigenvalues at most `rel_tol` times the largest count as zero.
    pub fn new(a: &DMatrix<f64>, rel_tol: f64) -> Self {
        let n = a.nrows();
        if n == 0 {
            return Self {
                range: DMatrix::zeros(0, 0),
                values: DVector::zeros(0),
                null: DMatrix::zeros(0, 0),
            };
        }
        let sym = (a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let max = eig.eigenvalues.amax();
        let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > rel_tol * max).collect();
        let drop: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] <= rel_tol * max).collect();
        let range = eig.eigenvectors.select_columns(&keep);
        let null = eig.eigenvectors.select_columns(&drop);
        let values = DVector::from_fn(keep.len(), |i, _| eig.eigenvalues[keep[i]]);
        Self { range, values, null }
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn null_basis(&self) -> &DMatrix<f64> {
        &self.null
    }

    /// Minimum-norm `x` with `A x = b` in the least-squares sense.
    pub fn min_norm_solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let c = self.range.tr_mul(b);
        let scaled = c.component_div(&self.values);
        &self.range * scaled
    }

    pub fn condition(&self) -> f64 {
        if self.values.is_empty() {
            return 1.0;
        }
        self.values.max() / self.values.min()
    }
}

/// Orthonormal basis of the column span of `a`, dropping directions with
/// singular value at most `rel_tol` times the largest.
pub fn orthonormal_span(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let max = svd.singular_values.amax();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * max && max > 0.0)
        .collect();
    u.select_columns(&keep)
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q` in `R^n`.
pub fn orthonormal_complement(q: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if q.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    let proj = DMatrix::identity(n, n) - q * q.transpose();
    let eig = SymmetricEigen::new(proj);
    let mut keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    keep.sort_unstable();
    eig.eigenvectors.select_columns(&keep)
}

/// Orthonormal basis of `ker A`.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let rows = orthonormal_span(&a.transpose(), rel_tol);
    orthonormal_complement(&rows, a.ncols())
}
