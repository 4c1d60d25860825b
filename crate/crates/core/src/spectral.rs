//! Symmetric eigen-solvers.
//!
//! Power iteration serves the large alignment operators; dense symmetric
//! matrices go through nalgebra's tridiagonal QR (`SymmetricEigen`).
//! Every returned eigenvector is oriented so that its entry of largest
//! magnitude is positive.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::randgen::rng;

/// A symmetric linear map `x ↦ A·x` on `R^dim`.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let y = self * DVector::from_column_slice(x);
        out.copy_from_slice(y.as_slice());
    }
}

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Tolerance on `max |M − Mᵀ|` accepted as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Added on top of `−λmin` by [`psd_shift`].
pub const PSD_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Eigenpairs with eigenvalues in descending order; column `i` of
/// `eigenvectors` belongs to `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Flips `v` so its largest-magnitude entry is positive (first one on ties).
pub fn orient<'a, I>(v: I)
where
    I: IntoIterator<Item = &'a mut f64>,
{
    let mut entries: Vec<&mut f64> = v.into_iter().collect();
    let mut best = 0usize;
    for (i, x) in entries.iter().enumerate() {
        if x.abs() > entries[best].abs() {
            best = i;
        }
    }
    if entries.get(best).is_some_and(|x| **x < 0.0) {
        for x in entries.iter_mut() {
            **x = -**x;
        }
    }
}

/// Leading eigenpair by power iteration from a strictly positive start.
///
/// Stops once `‖A v − λ v‖ ≤ tol·|λ|` with `λ = vᵀ A v`. For operators with
/// strictly positive entries the returned vector is entrywise positive.
pub fn leading_eigenvector<O: SymmetricOperator + ?Sized>(op: &O, opts: PowerOptions) -> Result<EigenPair> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::InvalidParameter("operator has dimension 0".into()));
    }
    let mut r = rng(opts.seed);
    let mut x: Vec<f64> = (0..dim).map(|_| 1.0 + 0.1 * r.gen::<f64>()).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);

    let mut y = vec![0.0; dim];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        op.apply(&x, &mut y);
        let lambda = dot(&x, &y);
        residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - lambda * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= opts.tol * lambda.abs() || residual == 0.0 {
            orient(x.iter_mut());
            return Ok(EigenPair {
                value: lambda,
                vector: x,
                iterations: it,
                residual,
            });
        }
        let ny = norm(&y);
        if ny == 0.0 {
            break;
        }
        for (a, b) in x.iter_mut().zip(&y) {
            *a = b / ny;
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Largest `max |M(i,j) − M(j,i)|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let a = asymmetry(m);
    if a > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(a));
    }
    Ok(())
}

/// The `k` largest eigenpairs of a dense symmetric matrix, descending.
pub fn top_k_eigs(m: &DMatrix<f64>, k: usize) -> Result<SpectralDecomposition> {
    check_symmetric(m)?;
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..={n}")));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order.truncate(k);
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, k);
    for (c, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        orient(col.iter_mut());
        eigenvectors.set_column(c, &col);
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Full eigendecomposition, descending.
pub fn full_eigs(m: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    top_k_eigs(m, m.nrows())
}

/// Singular values of a symmetric matrix (`|λ|`), descending.
pub fn symmetric_singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Shifts `m` to `m + δI` with `δ = max(0, −λmin) + 1e-9`.
pub fn psd_shift(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    check_symmetric(m)?;
    let n = m.nrows();
    let lambda_min = SymmetricEigen::new((m + m.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let delta = (-lambda_min).max(0.0) + PSD_MARGIN;
    Ok((m + DMatrix::identity(n, n) * delta, delta))
}

/// `k` algebraically largest eigenpairs of an operator by shifted power
/// iteration with orthogonal deflation.
///
/// The operator is first shifted by the magnitude of its dominant
/// eigenvalue so that the spectrum is non-negative; each further pair is
/// found on the orthogonal complement of the ones already converged.
pub fn deflated_eigenpairs<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    opts: PowerOptions,
) -> Result<SpectralDecomposition> {
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..={dim}")));
    }
    let dominant = leading_eigenvector(op, opts)?;
    let shift = dominant.value.abs();

    struct Deflated<'a, O: ?Sized> {
        op: &'a O,
        shift: f64,
        basis: &'a [Vec<f64>],
    }
    impl<O: SymmetricOperator + ?Sized> SymmetricOperator for Deflated<'_, O> {
        fn dim(&self) -> usize {
            self.op.dim()
        }
        fn apply(&self, x: &[f64], out: &mut [f64]) {
            let mut z = x.to_vec();
            project_out(&mut z, self.basis);
            self.op.apply(&z, out);
            for (o, zi) in out.iter_mut().zip(&z) {
                *o += self.shift * zi;
            }
            project_out(out, self.basis);
        }
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for idx in 0..k {
        let deflated = Deflated {
            op,
            shift,
            basis: &basis,
        };
        let pair = leading_eigenvector(
            &deflated,
            PowerOptions {
                seed: opts.seed.wrapping_add(idx as u64 + 1),
                ..opts
            },
        )?;
        let mut v = pair.vector;
        project_out(&mut v, &basis);
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        orient(v.iter_mut());
        values.push(pair.value - shift);
        basis.push(v);
    }
    let mut eigenvectors = DMatrix::zeros(dim, k);
    for (c, v) in basis.iter().enumerate() {
        eigenvectors.set_column(c, &DVector::from_column_slice(v));
    }
    Ok(SpectralDecomposition {
        eigenvalues: values,
        eigenvectors,
    })
}

fn project_out(x: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(x, b);
        for (xi, bi) in x.iter_mut().zip(b) {
            *xi -= c * bi;
        }
    }
}
