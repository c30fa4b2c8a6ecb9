//! Sparse assembly and direct solves on top of `faer`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LdltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par, Side};

use crate::error::{Error, Result};

pub type SparseMatrix = SparseColMat<usize, f64>;

/// Coordinate-format accumulator; duplicate entries are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        TripletBuilder {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        if value != 0.0 {
            self.entries.push(Triplet::new(row, col, value));
        }
    }

    pub fn build(&self) -> Result<SparseMatrix> {
        SparseMatrix::try_new_from_triplets(self.rows, self.cols, &self.entries)
            .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))
    }
}

fn column(rhs: &[f64]) -> Mat<f64> {
    Mat::from_fn(rhs.len(), 1, |i, _| rhs[i])
}

fn unpack(x: Mat<f64>) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[(i, 0)]).collect()
}

/// `y = A x`.
pub fn mat_vec(a: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    let sym = a.symbolic();
    let (ptr, idx, val) = (sym.col_ptr(), sym.row_idx(), a.val());
    for (j, xj) in x.iter().enumerate() {
        for p in ptr[j]..ptr[j + 1] {
            y[idx[p]] += val[p] * xj;
        }
    }
    y
}

/// `yᵀ = xᵀ A`.
pub fn vec_mat(a: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    let sym = a.symbolic();
    let (ptr, idx, val) = (sym.col_ptr(), sym.row_idx(), a.val());
    (0..a.ncols())
        .map(|j| (ptr[j]..ptr[j + 1]).map(|p| val[p] * x[idx[p]]).sum())
        .collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `‖A x − b‖ / ‖b‖`, or the absolute residual when `b = 0`.
pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = mat_vec(a, x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm(b);
    if nb > 0.0 {
        norm(&r) / nb
    } else {
        norm(&r)
    }
}

/// Sparse Cholesky factorization of a symmetric positive definite matrix.
pub struct SpdSolver {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    n: usize,
}

impl SpdSolver {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let llt = a.sp_cholesky(Side::Lower).map_err(|e| {
            Error::Solver(format!(
                "Cholesky factorization failed ({e:?}) on a {}x{} matrix with {} nonzeros",
                a.nrows(),
                a.ncols(),
                a.compute_nnz()
            ))
        })?;
        Ok(SpdSolver { llt, n: a.nrows() })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        unpack(self.llt.solve(column(rhs)))
    }
}

/// Sparse LU factorization for general (here: symmetric indefinite) matrices.
pub struct LuSolver {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl LuSolver {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let lu = a.sp_lu().map_err(|e| {
            Error::Solver(format!(
                "LU factorization failed ({e:?}) on a {}x{} matrix with {} nonzeros",
                a.nrows(),
                a.ncols(),
                a.compute_nnz()
            ))
        })?;
        Ok(LuSolver { lu, n: a.nrows() })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        unpack(self.lu.solve(column(rhs)))
    }

    pub fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        unpack(self.lu.solve_transpose(column(rhs)))
    }
}

/// Sparse `LDLᵀ` for symmetric saddle-point systems whose second diagonal
/// block is zero.
///
/// The factored matrix carries a tiny negative shift on the constraint block,
/// which makes it quasi-definite and factorizable under any fill-reducing
/// ordering. Solves refine against the unshifted matrix.
pub struct KktSolver {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    matrix: SparseMatrix,
}

impl KktSolver {
    const SHIFT: f64 = 1e-10;
    const MAX_REFINEMENTS: usize = 40;

    /// `positive[i]` marks the unknowns of the positive definite block.
    pub fn new(a: &SparseMatrix, positive: &[bool]) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(positive.len(), n);
        let fail = |what: &str| Error::Solver(format!("LDLT {what} failed on a {n}x{n} saddle-point matrix"));
        let scale = (0..n)
            .map(|i| diagonal(a, i).abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut shifted = TripletBuilder::new(n, n);
        let sym = a.symbolic();
        for (j, &pos) in positive.iter().enumerate() {
            for p in sym.col_ptr()[j]..sym.col_ptr()[j + 1] {
                shifted.add(sym.row_idx()[p], j, a.val()[p]);
            }
            if !pos {
                shifted.entries.push(Triplet::new(j, j, -Self::SHIFT * scale));
            }
        }
        let shifted = shifted.build()?;
        let symbolic = factorize_symbolic_cholesky(
            shifted.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|_| fail("symbolic analysis"))?;
        let signs: Vec<i8> = positive.iter().map(|&p| if p { 1 } else { -1 }).collect();
        let mut values = vec![0.0; symbolic.len_val()];
        let par = Par::Seq;
        let mut buf = MemBuffer::try_new(symbolic.factorize_numeric_ldlt_scratch::<f64>(par, Default::default()))
            .map_err(|_| fail("workspace allocation"))?;
        symbolic
            .factorize_numeric_ldlt(
                &mut values,
                shifted.as_ref(),
                Side::Lower,
                LdltRegularization {
                    dynamic_regularization_signs: Some(&signs),
                    dynamic_regularization_delta: Self::SHIFT * scale,
                    dynamic_regularization_epsilon: f64::EPSILON * scale,
                },
                par,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|_| fail("numeric factorization"))?;
        Ok(KktSolver {
            symbolic,
            values,
            matrix: a.clone(),
        })
    }

    fn apply_inverse(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = column(rhs);
        let par = Par::Seq;
        let mut buf = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, par));
        LdltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            Conj::No,
            x.as_mut(),
            par,
            MemStack::new(&mut buf),
        );
        unpack(x)
    }

    /// Solves `A x = b`, refining until the relative residual stops improving.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.apply_inverse(rhs);
        let mut best = relative_residual(&self.matrix, &x, rhs);
        for _ in 0..Self::MAX_REFINEMENTS {
            if best <= 1e-14 {
                break;
            }
            let ax = mat_vec(&self.matrix, &x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
            let dx = self.apply_inverse(&r);
            let next: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let res = relative_residual(&self.matrix, &next, rhs);
            if !(res < best) {
                break;
            }
            x = next;
            best = res;
        }
        x
    }
}

fn diagonal(a: &SparseMatrix, i: usize) -> f64 {
    let sym = a.symbolic();
    (sym.col_ptr()[i]..sym.col_ptr()[i + 1])
        .find(|&p| sym.row_idx()[p] == i)
        .map_or(0.0, |p| a.val()[p])
}

/// One-norm of a sparse matrix.
pub fn norm_one(a: &SparseMatrix) -> f64 {
    let sym = a.symbolic();
    let ptr = sym.col_ptr();
    (0..a.ncols())
        .map(|j| a.val()[ptr[j]..ptr[j + 1]].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Hager's estimate of `‖A⁻¹‖₁ ‖A‖₁` from an existing factorization.
pub fn condition_estimate(a: &SparseMatrix, lu: &LuSolver) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 1.0;
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    for _ in 0..5 {
        let y = lu.solve(&x);
        let y_norm: f64 = y.iter().map(|v| v.abs()).sum();
        if !y_norm.is_finite() {
            return f64::INFINITY;
        }
        let xi: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = lu.solve_transpose(&xi);
        let (j, zmax) = z.iter().enumerate().fold(
            (0, 0.0),
            |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) },
        );
        let zx = dot(&z, &x);
        if y_norm <= est || zmax <= zx {
            est = est.max(y_norm);
            break;
        }
        est = y_norm;
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    est * norm_one(a)
}
