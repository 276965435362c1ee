//! Sparse symmetric matrices and their LDLᵀ factorization.
//!
//! Thin layer over `faer`: matrices are stored in full (both triangles) so
//! they can be multiplied and inspected, and only the upper triangle is fed
//! to the fill-reducing (AMD) supernodal factorization.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMat, SymbolicSparseColMat, Triplet};
use faer::{Conj, Mat, Par, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative residual above which a direct solve is declared singular.
const SOLVE_RESIDUAL_TOL: f64 = 1e-6;

/// Accumulates `(row, col, value)` contributions; duplicates are summed in
/// insertion order when the matrix is built.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push(Triplet::new(row, col, value));
    }

    pub fn build(self) -> SymmetricMatrix {
        let mat = SparseColMat::try_new_from_triplets(self.n, self.n, &self.entries)
            .expect("triplet indices are in range by construction");
        SymmetricMatrix { mat }
    }
}

/// Square sparse matrix, symmetric by construction of the caller.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    mat: SparseColMat<usize, f64>,
}

impl SymmetricMatrix {
    /// Builds from compressed sparse columns with sorted, unique row indices
    /// in each column.
    pub fn from_csc(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>, values: Vec<f64>) -> Self {
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        Self {
            mat: SparseColMat::new(symbolic, values),
        }
    }

    pub fn nrows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.mat.val().len()
    }

    /// Entry `(i, j)`; zero when structurally absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.as_ref().get(i, j).copied().unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows());
        let m = self.mat.as_ref();
        let col_ptr = m.col_ptr();
        let row_idx = m.row_idx();
        let val = m.val();
        let mut y = vec![0.0; self.nrows()];
        for j in 0..self.nrows() {
            let xj = x[j];
            for k in col_ptr[j]..col_ptr[j + 1] {
                y[row_idx[k]] += val[k] * xj;
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.nrows();
        let m = self.mat.as_ref();
        let mut d = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in m.col_ptr()[j]..m.col_ptr()[j + 1] {
                d[(m.row_idx()[k], j)] += m.val()[k];
            }
        }
        d
    }

    /// max |a_ij − a_ji| / max |a_ij|.
    pub fn symmetry_error(&self) -> f64 {
        let m = self.mat.as_ref();
        let mut max_abs = 0.0f64;
        let mut max_diff = 0.0f64;
        for j in 0..self.nrows() {
            for k in m.col_ptr()[j]..m.col_ptr()[j + 1] {
                let i = m.row_idx()[k];
                let v = m.val()[k];
                max_abs = max_abs.max(v.abs());
                max_diff = max_diff.max((v - self.get(j, i)).abs());
            }
        }
        if max_abs == 0.0 {
            0.0
        } else {
            max_diff / max_abs
        }
    }

    /// LDLᵀ factorization (no pivoting) of the upper triangle.
    ///
    /// The error string describes the failure; callers wrap it in the error
    /// variant that fits their context.
    pub fn factorize(&self) -> std::result::Result<LdltFactor, String> {
        let n = self.nrows();
        let symbolic = factorize_symbolic_cholesky(
            self.mat.symbolic(),
            Side::Upper,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams::default(),
        )
        .map_err(|e| format!("symbolic factorization failed: {e:?}"))?;
        let mut values = vec![0.0f64; symbolic.len_val()];
        let par = Par::Seq;
        let mut buf = MemBuffer::new(
            symbolic.factorize_numeric_ldlt_scratch::<f64>(par, Default::default()),
        );
        symbolic
            .factorize_numeric_ldlt(
                &mut values,
                self.mat.as_ref(),
                Side::Upper,
                Default::default(),
                par,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| format!("LDLT factorization of {n}x{n} system failed: {e:?}"))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(format!("non-finite LDLT factor of {n}x{n} system"));
        }
        Ok(LdltFactor {
            symbolic,
            values,
            matrix: self.clone(),
        })
    }
}

/// Numeric LDLᵀ factor together with the matrix it came from (kept for
/// residual checks and one step of iterative refinement).
pub struct LdltFactor {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    matrix: SymmetricMatrix,
}

impl LdltFactor {
    fn raw_solve(&self, rhs: &mut Mat<f64>) {
        let par = Par::Seq;
        let ldlt = faer::sparse::linalg::cholesky::LdltRef::new(&self.symbolic, &self.values);
        let mut buf = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(rhs.ncols(), par));
        ldlt.solve_in_place_with_conj(Conj::No, rhs.as_mut(), par, MemStack::new(&mut buf));
    }

    /// Solves `A x = b` for each right-hand side, with one refinement step.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> std::result::Result<Vec<Vec<f64>>, String> {
        let n = self.matrix.nrows();
        if rhs.is_empty() {
            return Ok(Vec::new());
        }
        let k = rhs.len();
        let mut x = Mat::<f64>::from_fn(n, k, |i, j| rhs[j][i]);
        self.raw_solve(&mut x);
        let mut out: Vec<Vec<f64>> = (0..k).map(|j| (0..n).map(|i| x[(i, j)]).collect()).collect();

        // one step of refinement, then check the residual
        let mut corr = Mat::<f64>::zeros(n, k);
        for (j, xj) in out.iter().enumerate() {
            let ax = self.matrix.mul_vec(xj);
            for i in 0..n {
                corr[(i, j)] = rhs[j][i] - ax[i];
            }
        }
        self.raw_solve(&mut corr);
        for (j, xj) in out.iter_mut().enumerate() {
            for i in 0..n {
                xj[i] += corr[(i, j)];
            }
        }
        for (j, xj) in out.iter().enumerate() {
            if xj.iter().any(|v| !v.is_finite()) {
                return Err("non-finite solution".into());
            }
            let ax = self.matrix.mul_vec(xj);
            let bnorm = norm2(&rhs[j]);
            let rnorm = ax
                .iter()
                .zip(&rhs[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if bnorm > 0.0 && rnorm > SOLVE_RESIDUAL_TOL * bnorm {
                return Err(format!(
                    "relative solve residual {:.3e} exceeds {SOLVE_RESIDUAL_TOL:.0e}",
                    rnorm / bnorm
                ));
            }
        }
        Ok(out)
    }

    pub fn solve(&self, rhs: &[f64]) -> std::result::Result<Vec<f64>, String> {
        Ok(self.solve_many(std::slice::from_ref(&rhs.to_vec()))?.remove(0))
    }
}

/// Factorizes and solves in one go, mapping failures to `SingularTangent`.
pub fn solve_tangent(k: &SymmetricMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let f = k.factorize().map_err(Error::SingularTangent)?;
    f.solve(rhs).map_err(Error::SingularTangent)
}

#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
