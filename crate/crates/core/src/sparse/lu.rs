use alloc::vec;
use alloc::vec::Vec;

use super::{reverse_cuthill_mckee, ColumnOrdering, CsrMatrix};
use crate::error::{Error, Result};

const UNASSIGNED: usize = usize::MAX;

/// Pivots smaller than this fraction of the largest entry in the original
/// column are treated as zero.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// A diagonal candidate is accepted over the column maximum when it is at
/// least this fraction of it; keeps the symmetric ordering effective.
const DIAGONAL_PREFERENCE: f64 = 0.1;

/// Sparse LU factorization `P A Q = L U` (left-looking, Gilbert-Peierls),
/// with `L` unit lower triangular. Built once, reusable for any number of
/// forward and transposed solves.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    n: usize,
    /// `col_perm[k]`: original column eliminated at step `k`.
    col_perm: Vec<usize>,
    /// `row_perm[k]`: original row chosen as pivot at step `k`.
    row_perm: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
}

impl LuFactorization {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Self::with_ordering(a, ColumnOrdering::default())
    }

    pub fn with_ordering(a: &CsrMatrix, ordering: ColumnOrdering) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
                context: "LU requires a square matrix",
            });
        }
        let n = a.nrows();
        let col_perm = match ordering {
            ColumnOrdering::Natural => (0..n).collect(),
            ColumnOrdering::ReverseCuthillMcKee => reverse_cuthill_mckee(a),
        };
        // columns of A are the rows of Aᵀ
        let at = a.transpose();

        let mut pinv = vec![UNASSIGNED; n];
        let mut row_perm = Vec::with_capacity(n);
        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut l_idx: Vec<usize> = Vec::with_capacity(4 * a.nnz());
        let mut l_val: Vec<f64> = Vec::with_capacity(4 * a.nnz());
        let mut u_ptr = Vec::with_capacity(n + 1);
        let mut u_idx: Vec<usize> = Vec::with_capacity(4 * a.nnz());
        let mut u_val: Vec<f64> = Vec::with_capacity(4 * a.nnz());
        let mut u_diag = Vec::with_capacity(n);
        l_ptr.push(0);
        u_ptr.push(0);

        let mut x = vec![0.0; n];
        let mut mark = vec![UNASSIGNED; n];
        let mut topo: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for k in 0..n {
            let col = col_perm[k];
            let (rows, vals) = at.row(col);
            let col_max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));

            // symbolic: nodes reachable from the column pattern through L,
            // collected in reverse topological order
            topo.clear();
            for &start in rows {
                if mark[start] == k {
                    continue;
                }
                mark[start] = k;
                stack.push((start, 0));
                while let Some(&mut (node, ref mut child)) = stack.last_mut() {
                    let p = pinv[node];
                    let mut pushed = false;
                    if p != UNASSIGNED {
                        let (lo, hi) = (l_ptr[p], l_ptr[p + 1]);
                        while lo + *child < hi {
                            let next = l_idx[lo + *child];
                            *child += 1;
                            if mark[next] != k {
                                mark[next] = k;
                                stack.push((next, 0));
                                pushed = true;
                                break;
                            }
                        }
                    }
                    if !pushed {
                        stack.pop();
                        topo.push(node);
                    }
                }
            }

            // numeric: sparse triangular solve L x = A[:, col]
            for (&r, &v) in rows.iter().zip(vals) {
                x[r] = v;
            }
            for &node in topo.iter().rev() {
                let p = pinv[node];
                if p == UNASSIGNED {
                    continue;
                }
                let xj = x[node];
                if xj != 0.0 {
                    for idx in l_ptr[p]..l_ptr[p + 1] {
                        x[l_idx[idx]] -= l_val[idx] * xj;
                    }
                }
            }

            // pivot selection among rows not yet pivotal
            let mut best = UNASSIGNED;
            let mut best_abs = -1.0;
            for &node in topo.iter().rev() {
                if pinv[node] == UNASSIGNED {
                    let v = x[node].abs();
                    if v > best_abs {
                        best_abs = v;
                        best = node;
                    }
                }
            }
            if best == UNASSIGNED || !(best_abs > SINGULAR_TOLERANCE * col_max) || col_max == 0.0 {
                return Err(Error::SingularMatrix {
                    column: col,
                    pivot: best_abs.max(0.0),
                });
            }
            if pinv[col] == UNASSIGNED
                && mark[col] == k
                && x[col].abs() >= DIAGONAL_PREFERENCE * best_abs
            {
                best = col;
            }
            let pivot = x[best];
            pinv[best] = k;
            row_perm.push(best);
            u_diag.push(pivot);

            for &node in topo.iter().rev() {
                let p = pinv[node];
                let v = x[node];
                x[node] = 0.0;
                if node == best {
                    continue;
                }
                if p == UNASSIGNED {
                    l_idx.push(node);
                    l_val.push(v / pivot);
                } else {
                    u_idx.push(p);
                    u_val.push(v);
                }
            }
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());
        }

        // L row indices from original rows to pivot positions
        for r in &mut l_idx {
            *r = pinv[*r];
        }

        Ok(Self {
            n,
            col_perm,
            row_perm,
            l_ptr,
            l_idx,
            l_val,
            u_ptr,
            u_idx,
            u_val,
            u_diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries in `L` and `U` (including the diagonal of `U`).
    pub fn fill(&self) -> usize {
        self.l_val.len() + self.u_val.len() + self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check(b)?;
        let mut y: Vec<f64> = self.row_perm.iter().map(|&r| b[r]).collect();
        for k in 0..self.n {
            let yk = y[k];
            if yk != 0.0 {
                for idx in self.l_ptr[k]..self.l_ptr[k + 1] {
                    y[self.l_idx[idx]] -= self.l_val[idx] * yk;
                }
            }
        }
        for k in (0..self.n).rev() {
            y[k] /= self.u_diag[k];
            let yk = y[k];
            if yk != 0.0 {
                for idx in self.u_ptr[k]..self.u_ptr[k + 1] {
                    y[self.u_idx[idx]] -= self.u_val[idx] * yk;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for (k, &c) in self.col_perm.iter().enumerate() {
            x[c] = y[k];
        }
        Ok(x)
    }

    /// Solves `Aᵀ x = b` with the same factors.
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check(b)?;
        let mut w: Vec<f64> = self.col_perm.iter().map(|&c| b[c]).collect();
        for k in 0..self.n {
            let mut s = w[k];
            for idx in self.u_ptr[k]..self.u_ptr[k + 1] {
                s -= self.u_val[idx] * w[self.u_idx[idx]];
            }
            w[k] = s / self.u_diag[k];
        }
        for k in (0..self.n).rev() {
            let mut s = w[k];
            for idx in self.l_ptr[k]..self.l_ptr[k + 1] {
                s -= self.l_val[idx] * w[self.l_idx[idx]];
            }
            w[k] = s;
        }
        let mut x = vec![0.0; self.n];
        for (k, &r) in self.row_perm.iter().enumerate() {
            x[r] = w[k];
        }
        Ok(x)
    }

    fn check(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: b.len(),
                context: "right-hand side",
            });
        }
        Ok(())
    }
}

/// One-shot factorize and solve.
pub fn lu_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    LuFactorization::new(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Triplets;

    fn from_dense(d: &[&[f64]]) -> CsrMatrix {
        let mut t = Triplets::new(d.len(), d[0].len());
        for (i, row) in d.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        t.to_csr().unwrap()
    }

    #[test]
    fn identity_solve() {
        let x = lu_solve(&CsrMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two() {
        let a = from_dense(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let x = lu_solve(&a, &[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_diagonal_needs_row_exchange() {
        let a = from_dense(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let x = lu_solve(&a, &[2.0, 5.0]).unwrap();
        assert_eq!(x, vec![5.0, 2.0]);
        let xt = LuFactorization::new(&a).unwrap().solve_transpose(&[2.0, 5.0]).unwrap();
        assert_eq!(xt, vec![5.0, 2.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = from_dense(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(lu_solve(&a, &[1.0, 1.0]), Err(Error::SingularMatrix { .. })));
        let empty_col = from_dense(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(lu_solve(&empty_col, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn transpose_solve_matches_explicit_transpose() {
        let a = from_dense(&[
            &[4.0, 1.0, 0.0, 2.0],
            &[0.0, 3.0, 1.0, 0.0],
            &[1.0, 0.0, 5.0, 1.0],
            &[0.0, 2.0, 0.0, 6.0],
        ]);
        let b = [1.0, -2.0, 0.5, 3.0];
        let lu = LuFactorization::new(&a).unwrap();
        let x1 = lu.solve_transpose(&b).unwrap();
        let x2 = lu_solve(&a.transpose(), &b).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(LuFactorization::new(&CsrMatrix::zeros(2, 3)).is_err());
    }
}
