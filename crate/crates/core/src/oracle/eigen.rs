//! Real symmetric sparse matrices and their lowest eigenpairs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Compressed-row real matrix, both triangles stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSym {
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// Builds row by row; `row(i, push)` calls `push(col, value)` for each
    /// entry of row `i`. Duplicate columns are summed.
    pub fn from_rows(dim: usize, mut row: impl FnMut(usize, &mut dyn FnMut(usize, f64))) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            scratch.clear();
            row(i, &mut |c, v| scratch.push((c, v)));
            scratch.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut v = 0.0;
                while k < scratch.len() && scratch[k].0 == c {
                    v += scratch[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseSym {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.cols[a..b]
                .iter()
                .zip(&self.vals[a..b])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(k) => self.vals[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    /// Largest `|H_ij − H_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                worst = worst.max((self.vals[k] - self.get(self.cols[k], i)).abs());
            }
        }
        worst / scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    /// Matrices up to this size are diagonalized densely.
    pub dense_limit: usize,
    /// Krylov subspace size before a restart.
    pub subspace: usize,
    /// Residual `‖Hy − θy‖` accepted, relative to `max(1, |θ|)`.
    pub tol: f64,
    pub max_restarts: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            dense_limit: 1500,
            subspace: 64,
            tol: 1e-10,
            max_restarts: 400,
        }
    }
}

/// Lowest `k` eigenvalues in ascending order, with eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn all_eigenvalues(h: &SparseSym) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(h.to_dense()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn dense_lowest(h: &SparseSym, k: usize) -> Eigenpairs {
    let eig = SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..h.dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let take = &order[..k.min(h.dim)];
    Eigenpairs {
        values: take.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: take.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Deterministic start vector with every component non-zero.
fn start_vector(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let h = (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11;
            0.5 + (h as f64) / (1u64 << 53) as f64
        })
        .collect();
    let norm = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Removes the components along `basis` (twice, for stability) and normalizes.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Lowest `k` eigenpairs by thick-restart Lanczos with full
/// reorthogonalization; dense diagonalization for small matrices.
pub fn lowest_eigenpairs(h: &SparseSym, k: usize, opts: &EigenOptions) -> Result<Eigenpairs> {
    if k == 0 {
        return Ok(Eigenpairs {
            values: vec![],
            vectors: vec![],
        });
    }
    if h.dim <= opts.dense_limit.max(k) {
        return Ok(dense_lowest(h, k));
    }
    let n = h.dim;
    let m = opts.subspace.max(2 * k + 8).min(n);
    let keep = (k + 8).min(m - 2);
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut w: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut next = start_vector(n);
    let mut salt = 1usize;

    for _ in 0..opts.max_restarts {
        while v.len() < m {
            let mut cand = std::mem::take(&mut next);
            if orthonormalize(&mut cand, &v) < 1e-12 {
                // Invariant subspace reached; continue from a fresh direction.
                cand = start_vector(n);
                cand.rotate_left(salt % n);
                salt += 7;
                if orthonormalize(&mut cand, &v) < 1e-12 {
                    break;
                }
            }
            let mut hw = vec![0.0; n];
            h.matvec(&cand, &mut hw);
            let j = v.len();
            for (i, vi) in v.iter().enumerate() {
                let x = dot(vi, &hw);
                t[(i, j)] = x;
                t[(j, i)] = x;
            }
            t[(j, j)] = dot(&cand, &hw);
            next = hw.clone();
            v.push(cand);
            w.push(hw);
        }
        let size = v.len();
        let eig = SymmetricEigen::new(t.view((0, 0), (size, size)).into_owned());
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let ritz = |cols: &[Vec<f64>], s: &DVector<f64>| {
            let mut y = vec![0.0; n];
            for (c, &coef) in cols.iter().zip(s.iter()) {
                axpy(coef, c, &mut y);
            }
            y
        };
        let keep_now = keep.min(size);
        let mut ys = Vec::with_capacity(keep_now);
        let mut hys = Vec::with_capacity(keep_now);
        let mut thetas = Vec::with_capacity(keep_now);
        let mut converged = true;
        for (rank, &idx) in order.iter().take(keep_now).enumerate() {
            let s = eig.eigenvectors.column(idx).into_owned();
            let y = ritz(&v, &s);
            let hy = ritz(&w, &s);
            let theta = eig.eigenvalues[idx];
            if rank < k {
                let res: f64 = y.iter().zip(&hy).map(|(a, b)| (b - theta * a).powi(2)).sum::<f64>().sqrt();
                if res > opts.tol * theta.abs().max(1.0) {
                    converged = false;
                }
            }
            ys.push(y);
            hys.push(hy);
            thetas.push(theta);
        }
        if converged || size == n {
            return Ok(Eigenpairs {
                values: thetas[..k.min(size)].to_vec(),
                vectors: ys.into_iter().take(k).collect(),
            });
        }
        // The last Krylov direction is orthogonal to the kept Ritz vectors
        // once projected off the old basis.
        orthonormalize(&mut next, &v);
        v = ys;
        w = hys;
        t.fill(0.0);
        for (i, th) in thetas.iter().enumerate() {
            t[(i, i)] = *th;
        }
    }
    Err(Error::NonConvergent(format!(
        "Lanczos did not reach residual {:e} for the lowest {k} eigenpairs",
        opts.tol
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SparseSym {
        SparseSym::from_rows(n, |i, push| {
            push(i, 2.0 + 1e-3 * i as f64);
            if i > 0 {
                push(i - 1, -1.0);
            }
            if i + 1 < n {
                push(i + 1, -1.0);
            }
        })
    }

    #[test]
    fn lanczos_matches_dense() {
        let h = laplacian(600);
        let dense = dense_lowest(&h, 5);
        let opts = EigenOptions {
            dense_limit: 0,
            subspace: 40,
            ..Default::default()
        };
        let lz = lowest_eigenpairs(&h, 5, &opts).unwrap();
        for (a, b) in dense.values.iter().zip(&lz.values) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn sparse_round_trip() {
        let h = laplacian(5);
        assert_eq!(h.nnz(), 13);
        assert_eq!(h.asymmetry(), 0.0);
        let d = h.to_dense();
        assert_eq!(d[(1, 2)], -1.0);
        let mut y = vec![0.0; 5];
        h.matvec(&[1.0; 5], &mut y);
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[2] - 2e-3).abs() < 1e-15);
    }
}
