//! Symmetric eigensolvers for a few extreme eigenpairs.
//!
//! Small problems are materialised and handed to a dense symmetric solver.
//! Larger ones go through thick-restart Lanczos with full
//! reorthogonalization, driven only by matrix-vector products.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::rng::substream;

/// A real symmetric linear operator.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Dense copy, built column by column from `apply`.
    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            e[j] = 0.0;
            m.column_mut(j).copy_from_slice(&col);
        }
        m
    }
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        par::for_each_row_mut(y, ROW_CHUNK, |c, out| {
            for (r, yi) in out.iter_mut().enumerate() {
                let i = c * ROW_CHUNK + r;
                // column-major storage; the matrix is symmetric so row i = column i
                let col = self.column(i);
                *yi = col.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        });
        debug_assert_eq!(y.len(), n);
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

pub(crate) const ROW_CHUNK: usize = 64;

/// Which end of the spectrum to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    /// Largest `|lambda|`; ties go to the larger signed value.
    LargestMagnitude,
    /// Largest signed `lambda`.
    LargestAlgebraic,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Problems up to this dimension use the dense solver.
    pub dense_limit: usize,
    /// Lanczos basis size per restart cycle (raised to at least `2k + 8`).
    pub basis_size: usize,
    pub max_restarts: usize,
    /// Convergence: Ritz residual `<= tol * |lambda_max|`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_limit: 512,
            basis_size: 48,
            max_restarts: 400,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

/// Leading eigenpairs in the requested order; `vectors` is `n x k` with
/// orthonormal columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub converged: bool,
    /// Largest Ritz residual estimate over the returned pairs.
    pub max_residual: f64,
    pub matvecs: usize,
}

pub fn top_k<O: SymmetricOperator + ?Sized>(op: &O, k: usize, which: Which, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = op.dim();
    if k == 0 {
        return Err(invalid("requested zero eigenpairs"));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("requested {k} eigenpairs of a {n}-dimensional operator")));
    }
    let mut out = if n <= opts.dense_limit || n <= 2 * k + 8 {
        dense_top_k(&op.to_dense(), k, which)
    } else {
        lanczos_top_k(op, k, which, opts)
    };
    canonicalize(&mut out, which);
    Ok(out)
}

/// Full dense decomposition, then selection.
pub fn dense_top_k(m: &DMatrix<f64>, k: usize, which: Which) -> EigenPairs {
    let sym = symmetrize(m);
    let eig = SymmetricEigen::new(sym);
    let order = order_indices(eig.eigenvalues.as_slice(), which);
    let sel = &order[..k];
    let values = sel.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), k, |r, c| eig.eigenvectors[(r, sel[c])]);
    EigenPairs {
        values,
        vectors,
        converged: true,
        max_residual: 0.0,
        matvecs: m.nrows(),
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Indices of `values` sorted by the requested order.
pub fn order_indices(values: &[f64], which: Which) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| compare(values[a], values[b], which));
    idx
}

fn compare(a: f64, b: f64, which: Which) -> Ordering {
    match which {
        Which::LargestAlgebraic => b.partial_cmp(&a).unwrap_or(Ordering::Equal),
        Which::LargestMagnitude => {
            let (fa, fb) = (a.abs(), b.abs());
            let scale = fa.max(fb).max(f64::MIN_POSITIVE);
            if (fa - fb).abs() <= 1e-12 * scale {
                b.partial_cmp(&a).unwrap_or(Ordering::Equal)
            } else {
                fb.partial_cmp(&fa).unwrap_or(Ordering::Equal)
            }
        }
    }
}

/// Re-sorts pairs and fixes each vector's sign so its first entry of
/// non-negligible magnitude is positive.
fn canonicalize(pairs: &mut EigenPairs, which: Which) {
    let order = order_indices(&pairs.values, which);
    let n = pairs.vectors.nrows();
    let values: Vec<f64> = order.iter().map(|&i| pairs.values[i]).collect();
    let mut vectors = DMatrix::from_fn(n, order.len(), |r, c| pairs.vectors[(r, order[c])]);
    for mut col in vectors.column_iter_mut() {
        let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-8 * peak).copied() {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
    pairs.values = values;
    pairs.vectors = vectors;
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Orthogonalizes `w` against `basis` twice (classical Gram-Schmidt) and
/// returns the accumulated coefficients.
fn reorthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        let c: Vec<f64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, &ci) in basis.iter().zip(&c) {
            axpy(-ci, v, w);
        }
        coeffs.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
    }
    coeffs
}

fn random_unit_orthogonal<R: Rng>(n: usize, basis: &[Vec<f64>], rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        reorthogonalize(basis, &mut v);
        if normalize(&mut v) > 1e-10 {
            return v;
        }
    }
}

/// Thick-restart Lanczos.
///
/// Keeps `A V = V H + beta r e_last^T` with `V` orthonormal. On restart the
/// best Ritz vectors become the new leading basis vectors, `H` becomes their
/// Ritz values on the diagonal coupled to `r` in one extra row and column.
fn lanczos_top_k<O: SymmetricOperator + ?Sized>(op: &O, k: usize, which: Which, opts: &EigenOptions) -> EigenPairs {
    let n = op.dim();
    let m = opts.basis_size.max(2 * k + 8).min(n - 1);
    let keep = (k + (m - k) / 2).min(m - 1);
    let mut rng = substream(opts.seed, "lanczos-start", n as u64);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(random_unit_orthogonal(n, &[], &mut rng));
    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut w = vec![0.0; n];
    let mut matvecs = 0;
    let mut scale = 0.0f64;
    let mut start = 0;

    for cycle in 0..=opts.max_restarts {
        let mut beta = 0.0;
        let mut size = m;
        for j in start..m {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let coeffs = reorthogonalize(&basis, &mut w);
            for (i, &c) in coeffs.iter().enumerate() {
                h[(i, j)] = c;
                h[(j, i)] = c;
            }
            beta = dot(&w, &w).sqrt();
            let last = j + 1 == m;
            if beta <= 1e-12 * scale.max(h[(j, j)].abs()).max(f64::MIN_POSITIVE) {
                // invariant subspace: continue from a fresh direction
                beta = 0.0;
                basis.push(random_unit_orthogonal(n, &basis, &mut rng));
            } else {
                let inv = 1.0 / beta;
                let next: Vec<f64> = w.iter().map(|x| x * inv).collect();
                if !last {
                    h[(j + 1, j)] = beta;
                    h[(j, j + 1)] = beta;
                }
                basis.push(next);
            }
            let dim = j + 1;
            if !last && dim >= k && dim % 8 == 0 {
                let (vals, vecs) = ritz(&h, dim);
                scale = scale.max(vals.iter().fold(0.0f64, |a, v| a.max(v.abs())));
                let order = order_indices(&vals, which);
                if converged(&order[..k], &vecs, dim, beta, scale, opts.tol).0 {
                    size = dim;
                    break;
                }
            }
        }

        let (vals, vecs) = ritz(&h, size);
        scale = scale.max(vals.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        let order = order_indices(&vals, which);
        let (done, max_res) = converged(&order[..k], &vecs, size, beta, scale, opts.tol);
        if done || cycle == opts.max_restarts {
            if !done {
                log::warn!("lanczos stopped after {cycle} restarts with residual {max_res:.3e}");
            }
            log::debug!("lanczos: {matvecs} products, {cycle} restarts, residual {max_res:.3e}");
            let vectors = ritz_vectors(&basis[..size], &vecs, &order[..k]);
            return EigenPairs {
                values: order[..k].iter().map(|&i| vals[i]).collect(),
                vectors,
                converged: done,
                max_residual: max_res,
                matvecs,
            };
        }

        let residual = basis.pop().expect("residual direction");
        let sel = &order[..keep];
        let kept = ritz_columns(&basis[..size], &vecs, sel);
        h.fill(0.0);
        for (c, &i) in sel.iter().enumerate() {
            h[(c, c)] = vals[i];
            let coupling = beta * vecs[(size - 1, i)];
            h[(c, keep)] = coupling;
            h[(keep, c)] = coupling;
        }
        basis = kept;
        basis.push(residual);
        start = keep;
    }
    unreachable!("loop returns on the final cycle")
}

fn ritz(h: &DMatrix<f64>, dim: usize) -> (Vec<f64>, DMatrix<f64>) {
    let sub = symmetrize(&h.view((0, 0), (dim, dim)).into_owned());
    let eig = SymmetricEigen::new(sub);
    (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
}

fn converged(sel: &[usize], vecs: &DMatrix<f64>, dim: usize, beta: f64, scale: f64, tol: f64) -> (bool, f64) {
    let max_res = sel.iter().map(|&i| (beta * vecs[(dim - 1, i)]).abs()).fold(0.0f64, f64::max);
    (max_res <= tol * scale.max(f64::MIN_POSITIVE), max_res)
}

fn ritz_columns(basis: &[Vec<f64>], vecs: &DMatrix<f64>, sel: &[usize]) -> Vec<Vec<f64>> {
    let n = basis[0].len();
    sel.iter()
        .map(|&i| {
            let mut y = vec![0.0; n];
            for (j, v) in basis.iter().enumerate() {
                axpy(vecs[(j, i)], v, &mut y);
            }
            normalize(&mut y);
            y
        })
        .collect()
}

fn ritz_vectors(basis: &[Vec<f64>], vecs: &DMatrix<f64>, sel: &[usize]) -> DMatrix<f64> {
    let cols = ritz_columns(basis, vecs, sel);
    let n = basis[0].len();
    DMatrix::from_fn(n, sel.len(), |r, c| cols[c][r])
}

/// `min_R ||W R - W'||_F` over orthogonal `R`, via the SVD of `W^T W'`.
pub fn procrustes_distance(w: &DMatrix<f64>, w_prime: &DMatrix<f64>) -> f64 {
    let cross = w.transpose() * w_prime;
    let svd = cross.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let r = u * vt;
    (w * r - w_prime).norm()
}

/// `||A v - lambda v||_2`.
pub fn residual_norm<O: SymmetricOperator + ?Sized>(op: &O, lambda: f64, v: &[f64]) -> f64 {
    let mut av = vec![0.0; v.len()];
    op.apply(v, &mut av);
    av.iter().zip(v).map(|(a, x)| (a - lambda * x).powi(2)).sum::<f64>().sqrt()
}

/// Eigenvalues of a dense symmetric matrix sorted descending.
pub fn eigenvalues_descending(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    v
}

pub fn column(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
    m.column(j).iter().copied().collect()
}

pub fn dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
