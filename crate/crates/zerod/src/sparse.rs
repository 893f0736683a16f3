//! Compressed sparse column matrices and a direct LU solver with partial
//! pivoting (left-looking Gilbert–Peierls factorization).
//!
//! Network tangent matrices are small but must be factorized every Newton
//! iteration; the workspace is reusable so repeated factorizations allocate
//! nothing after warm-up.

use thiserror::Error;

/// Square sparse matrix in compressed sparse column form.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    /// Builds from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut entries: Vec<(usize, usize, f64)> =
            triplets.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries.sort_by_key(|&(c, r, _)| (c, r));

        let mut counts = vec![0usize; n];
        let mut row_idx: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(c, r, v) in &entries {
            debug_assert!(r < n && c < n, "triplet ({r}, {c}) out of bounds for n = {n}");
            if last == Some((c, r)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                counts[c] += 1;
                last = Some((c, r));
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for c in 0..n {
            col_ptr[c + 1] = col_ptr[c] + counts[c];
        }
        CscMatrix { n, col_ptr, row_idx, values }
    }

    /// Row indices of one column.
    pub fn col_rows(&self, j: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    /// Values of one column.
    pub fn col_values(&self, j: usize) -> &[f64] {
        &self.values[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    /// y = A·x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for (&r, &v) in self.col_rows(j).iter().zip(self.col_values(j)) {
                    y[r] += v * xj;
                }
            }
        }
        y
    }

    /// Dense copy, row-major. Intended for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for j in 0..self.n {
            for (&r, &v) in self.col_rows(j).iter().zip(self.col_values(j)) {
                dense[r][j] += v;
            }
        }
        dense
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearSolveError {
    #[error("matrix is singular at column {column}")]
    Singular { column: usize },
    #[error("matrix contains non-finite entries at column {column}")]
    NonFinite { column: usize },
    #[error("dimension mismatch: matrix is {n}×{n}, right-hand side has length {rhs}")]
    DimensionMismatch { n: usize, rhs: usize },
}

const UNSET: usize = usize::MAX;

/// Reusable LU factorization (PA = LU) with partial pivoting.
#[derive(Debug, Default)]
pub struct SparseLu {
    n: usize,
    l_cols: Vec<Vec<(usize, f64)>>,
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    pinv: Vec<usize>,
    // scratch
    x: Vec<f64>,
    mark: Vec<u64>,
    stamp: u64,
    topo: Vec<usize>,
    dfs_stack: Vec<(usize, usize)>,
    solve_buf: Vec<f64>,
}

impl SparseLu {
    pub fn new() -> Self {
        Self::default()
    }

    /// Factorizes `a`, replacing any previous factorization.
    pub fn factor(&mut self, a: &CscMatrix) -> Result<(), LinearSolveError> {
        let n = a.n;
        self.n = n;
        self.l_cols.resize_with(n, Vec::new);
        self.u_cols.resize_with(n, Vec::new);
        self.l_cols.truncate(n);
        self.u_cols.truncate(n);
        for col in &mut self.l_cols {
            col.clear();
        }
        for col in &mut self.u_cols {
            col.clear();
        }
        self.u_diag.clear();
        self.u_diag.resize(n, 0.0);
        self.pinv.clear();
        self.pinv.resize(n, UNSET);
        self.x.clear();
        self.x.resize(n, 0.0);
        if self.mark.len() < n {
            self.mark.resize(n, 0);
        }
        self.solve_buf.resize(n, 0.0);

        for j in 0..n {
            self.reach(a, j);

            // Numeric sparse triangular solve: x = L \ A(:, j).
            for (&r, &v) in a.col_rows(j).iter().zip(a.col_values(j)) {
                self.x[r] += v;
            }
            for k in (0..self.topo.len()).rev() {
                let node = self.topo[k];
                let p = self.pinv[node];
                if p != UNSET {
                    let xk = self.x[node];
                    if xk != 0.0 {
                        for idx in 0..self.l_cols[p].len() {
                            let (r, v) = self.l_cols[p][idx];
                            self.x[r] -= v * xk;
                        }
                    }
                }
            }

            // Partial pivoting over rows not yet pivotal.
            let mut pivot_row = UNSET;
            let mut pivot_abs = 0.0f64;
            for &node in &self.topo {
                let xv = self.x[node];
                if !xv.is_finite() {
                    self.clear_x();
                    return Err(LinearSolveError::NonFinite { column: j });
                }
                if self.pinv[node] == UNSET && xv.abs() > pivot_abs {
                    pivot_abs = xv.abs();
                    pivot_row = node;
                }
            }
            if pivot_row == UNSET || pivot_abs == 0.0 {
                self.clear_x();
                return Err(LinearSolveError::Singular { column: j });
            }
            let pivot_val = self.x[pivot_row];

            for k in 0..self.topo.len() {
                let node = self.topo[k];
                let p = self.pinv[node];
                let v = self.x[node];
                if p != UNSET {
                    if v != 0.0 {
                        self.u_cols[j].push((p, v));
                    }
                } else if node != pivot_row && v != 0.0 {
                    self.l_cols[j].push((node, v / pivot_val));
                }
            }
            self.u_diag[j] = pivot_val;
            self.pinv[pivot_row] = j;
            self.clear_x();
        }

        // Remap L row indices from original rows to pivot positions, now that
        // every row has one.
        for col in &mut self.l_cols {
            for entry in col.iter_mut() {
                entry.0 = self.pinv[entry.0];
            }
        }
        Ok(())
    }

    fn clear_x(&mut self) {
        for &node in &self.topo {
            self.x[node] = 0.0;
        }
    }

    /// Depth-first search computing the pattern of L \ A(:, j) over original
    /// row indices. Result lands in `self.topo` in postorder; processing it
    /// in reverse visits nodes in topological order.
    fn reach(&mut self, a: &CscMatrix, j: usize) {
        self.topo.clear();
        self.stamp += 1;
        let stamp = self.stamp;
        for &seed in a.col_rows(j) {
            if self.mark[seed] == stamp {
                continue;
            }
            self.mark[seed] = stamp;
            self.dfs_stack.push((seed, 0));
            while let Some(&mut (node, ref mut child)) = self.dfs_stack.last_mut() {
                let p = self.pinv[node];
                let mut advanced = false;
                if p != UNSET {
                    while *child < self.l_cols[p].len() {
                        let next = self.l_cols[p][*child].0;
                        *child += 1;
                        if self.mark[next] != stamp {
                            self.mark[next] = stamp;
                            self.dfs_stack.push((next, 0));
                            advanced = true;
                            break;
                        }
                    }
                }
                if !advanced {
                    self.dfs_stack.pop();
                    self.topo.push(node);
                }
            }
        }
    }

    /// Solves A·x = b in place, overwriting `b` with `x`.
    pub fn solve_in_place(&mut self, b: &mut [f64]) -> Result<(), LinearSolveError> {
        let n = self.n;
        if b.len() != n {
            return Err(LinearSolveError::DimensionMismatch { n, rhs: b.len() });
        }
        let x = &mut self.solve_buf;
        for i in 0..n {
            x[self.pinv[i]] = b[i];
        }
        // Forward substitution with unit-diagonal L.
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for &(r, v) in &self.l_cols[j] {
                    x[r] -= v * xj;
                }
            }
        }
        // Backward substitution with U.
        for j in (0..n).rev() {
            x[j] /= self.u_diag[j];
            let xj = x[j];
            if xj != 0.0 {
                for &(r, v) in &self.u_cols[j] {
                    x[r] -= v * xj;
                }
            }
        }
        b.copy_from_slice(x);
        Ok(())
    }
}

/// One-shot sparse direct solve of `A·x = rhs`.
pub fn solve_linear(a: &CscMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
    if rhs.len() != a.n {
        return Err(LinearSolveError::DimensionMismatch { n: a.n, rhs: rhs.len() });
    }
    let mut lu = SparseLu::new();
    lu.factor(a)?;
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x)?;
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn identity(n: usize) -> CscMatrix {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        CscMatrix::from_triplets(n, &triplets)
    }

    #[test]
    fn identity_solve() {
        let a = identity(5);
        let rhs = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(solve_linear(&a, &rhs).unwrap(), rhs);
    }

    #[test]
    fn diagonal_solve() {
        let a = CscMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 4.0)]);
        assert_eq!(solve_linear(&a, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let a = CscMatrix::from_triplets(2, &[(0, 0, 1.5), (0, 0, 0.5), (1, 1, 1.0)]);
        assert_eq!(a.to_dense(), vec![vec![2.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn empty_columns_have_consistent_pointers() {
        let a = CscMatrix::from_triplets(4, &[(0, 0, 1.0), (3, 3, 2.0)]);
        assert_eq!(a.col_ptr, vec![0, 1, 1, 1, 2]);
        assert!(a.col_rows(1).is_empty());
        assert!(a.col_rows(2).is_empty());
    }

    #[test]
    fn random_diagonally_dominant_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 50;
        let mut triplets = Vec::new();
        for i in 0..n {
            let mut row_sum = 0.0;
            for _ in 0..4 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    triplets.push((i, j, v));
                    row_sum += v.abs();
                }
            }
            triplets.push((i, i, row_sum + 1.0 + rng.gen_range(0.0..1.0)));
        }
        let a = CscMatrix::from_triplets(n, &triplets);
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let x = solve_linear(&a, &rhs).unwrap();
        let ax = a.matvec(&x);
        let num: f64 = ax.iter().zip(&rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(num / den < 1e-12, "relative residual {}", num / den);
    }

    #[test]
    fn agrees_with_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 3, 5, 8, 13, 21, 34] {
            for _ in 0..8 {
                let mut triplets = Vec::new();
                let mut dense = DMatrix::<f64>::zeros(n, n);
                for i in 0..n {
                    for _ in 0..3 {
                        let j = rng.gen_range(0..n);
                        let v: f64 = rng.gen_range(-2.0..2.0);
                        triplets.push((i, j, v));
                        dense[(i, j)] += v;
                    }
                    let v: f64 = rng.gen_range(1.0..3.0);
                    triplets.push((i, i, v));
                    dense[(i, i)] += v;
                }
                let a = CscMatrix::from_triplets(n, &triplets);
                let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let x = solve_linear(&a, &rhs).unwrap();
                let reference =
                    dense.lu().solve(&DVector::from_vec(rhs.clone())).expect("dense solve");
                for i in 0..n {
                    assert!(
                        (x[i] - reference[i]).abs() <= 1e-9 * reference[i].abs().max(1.0),
                        "n = {n}, x[{i}] = {} vs {}",
                        x[i],
                        reference[i]
                    );
                }
            }
        }
    }

    #[test]
    fn workspace_is_reusable() {
        let mut lu = SparseLu::new();
        let a = CscMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 4.0)]);
        lu.factor(&a).unwrap();
        let mut b = vec![4.0, 8.0];
        lu.solve_in_place(&mut b).unwrap();
        assert_eq!(b, vec![1.0, 2.0]);
        let a2 = CscMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        lu.factor(&a2).unwrap();
        let mut b2 = vec![3.0, 5.0];
        lu.solve_in_place(&mut b2).unwrap();
        assert_eq!(b2, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrices_are_detected() {
        // Numerically rank-deficient.
        let a = CscMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(solve_linear(&a, &[1.0, 1.0]), Err(LinearSolveError::Singular { .. })));
        // Structurally empty column.
        let b = CscMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 0, 1.0)]);
        assert!(matches!(solve_linear(&b, &[1.0, 1.0]), Err(LinearSolveError::Singular { .. })));
    }

    #[test]
    fn permutation_heavy_matrix() {
        // Anti-diagonal forces a nontrivial row permutation.
        let n = 6;
        let triplets: Vec<_> = (0..n).map(|i| (i, n - 1 - i, (i + 1) as f64)).collect();
        let a = CscMatrix::from_triplets(n, &triplets);
        let rhs: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
        let x = solve_linear(&a, &rhs).unwrap();
        let ax = a.matvec(&x);
        for (l, r) in ax.iter().zip(&rhs) {
            assert!((l - r).abs() < 1e-12);
        }
    }
}
