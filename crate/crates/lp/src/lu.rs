//! LU factors of a simplex basis.
//!
//! Column and row singletons are peeled off first; what remains (the nucleus)
//! is factored densely with partial pivoting. After permutation the basis is
//!
//! ```text
//! [ U1  X  Y  ]
//! [ 0   N  Z  ]
//! [ 0   0  L3 ]
//! ```
//!
//! with `U1` upper triangular (column singletons in discovery order) and `L3`
//! lower triangular (row singletons in discovery order). The nucleus `N` gets
//! a sparse Markowitz LU with threshold pivoting.

const SINGLETON_TOL: f64 = 1e-11;
const NUCLEUS_TOL: f64 = 1e-11;
/// A nucleus pivot must be at least this fraction of its column's largest entry.
const THRESHOLD: f64 = 0.1;

/// Basis positions that could not be pivoted, paired with rows left uncovered.
#[derive(Debug)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct BasisLu {
    cols: Vec<Vec<(usize, f64)>>,
    upper: Vec<(usize, usize, f64)>,
    lower: Vec<(usize, usize, f64)>,
    nuc_rows: Vec<usize>,
    nuc_cols: Vec<usize>,
    nuc_of_row: Vec<usize>,
    nucleus: Nucleus,
}

/// One elimination step of the nucleus, in local row/column indices.
#[derive(Clone, Debug)]
struct Step {
    row: usize,
    col: usize,
    pivot: f64,
    /// Remaining entries of the pivot row (columns pivoted later).
    u: Vec<(usize, f64)>,
    /// Multipliers for rows pivoted later.
    l: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Default)]
struct Nucleus {
    k: usize,
    steps: Vec<Step>,
}

impl Nucleus {
    /// Factors the dense row-major k x k matrix `a`. On failure returns the
    /// local columns that found no pivot and the rows left over.
    fn factor(k: usize, mut a: Vec<f64>) -> Result<Self, (Vec<usize>, Vec<usize>)> {
        let mut row_on = vec![true; k];
        let mut col_on = vec![true; k];
        let mut row_cnt = vec![0usize; k];
        let mut col_cnt = vec![0usize; k];
        for i in 0..k {
            for j in 0..k {
                if a[i * k + j] != 0.0 {
                    row_cnt[i] += 1;
                    col_cnt[j] += 1;
                }
            }
        }
        let mut steps = Vec::with_capacity(k);
        let mut deficient = Vec::new();
        for _ in 0..k {
            // Sparsest active column, then the sparsest acceptable row in it.
            let Some(pc) = (0..k).filter(|&j| col_on[j]).min_by_key(|&j| col_cnt[j]) else {
                break;
            };
            let cmax = (0..k)
                .filter(|&i| row_on[i])
                .map(|i| a[i * k + pc].abs())
                .fold(0.0, f64::max);
            if cmax <= NUCLEUS_TOL {
                col_on[pc] = false;
                deficient.push(pc);
                continue;
            }
            let pr = (0..k)
                .filter(|&i| row_on[i] && a[i * k + pc].abs() >= THRESHOLD * cmax)
                .min_by(|&x, &y| {
                    row_cnt[x]
                        .cmp(&row_cnt[y])
                        .then(a[y * k + pc].abs().total_cmp(&a[x * k + pc].abs()))
                })
                .expect("the column maximum qualifies");
            let pivot = a[pr * k + pc];
            let u: Vec<(usize, f64)> = (0..k)
                .filter(|&j| j != pc && col_on[j] && a[pr * k + j] != 0.0)
                .map(|j| (j, a[pr * k + j]))
                .collect();
            let mut l = Vec::new();
            for i in 0..k {
                if i == pr || !row_on[i] || a[i * k + pc] == 0.0 {
                    continue;
                }
                let f = a[i * k + pc] / pivot;
                a[i * k + pc] = 0.0;
                row_cnt[i] -= 1;
                for &(j, v) in &u {
                    let old = a[i * k + j];
                    let new = old - f * v;
                    if old == 0.0 && new != 0.0 {
                        row_cnt[i] += 1;
                        col_cnt[j] += 1;
                    } else if old != 0.0 && new == 0.0 {
                        row_cnt[i] -= 1;
                        col_cnt[j] -= 1;
                    }
                    a[i * k + j] = new;
                }
                l.push((i, f));
            }
            for &(j, _) in &u {
                col_cnt[j] -= 1;
            }
            row_on[pr] = false;
            col_on[pc] = false;
            steps.push(Step {
                row: pr,
                col: pc,
                pivot,
                u,
                l,
            });
        }
        if deficient.is_empty() {
            Ok(Self { k, steps })
        } else {
            Err((deficient, (0..k).filter(|&i| row_on[i]).collect()))
        }
    }

    /// `N x = b`; `b` by local row, result by local column.
    fn solve(&self, mut b: Vec<f64>) -> Vec<f64> {
        for s in &self.steps {
            let bp = b[s.row];
            if bp != 0.0 {
                for &(i, f) in &s.l {
                    b[i] -= f * bp;
                }
            }
        }
        let mut x = vec![0.0; self.k];
        for s in self.steps.iter().rev() {
            let mut v = b[s.row];
            for &(j, u) in &s.u {
                v -= u * x[j];
            }
            x[s.col] = v / s.pivot;
        }
        x
    }

    /// `N^T y = c`; `c` by local column, result by local row.
    fn solve_transposed(&self, mut c: Vec<f64>) -> Vec<f64> {
        let mut w = vec![0.0; self.k];
        for s in &self.steps {
            let ws = c[s.col] / s.pivot;
            w[s.row] = ws;
            if ws != 0.0 {
                for &(j, u) in &s.u {
                    c[j] -= u * ws;
                }
            }
        }
        for s in self.steps.iter().rev() {
            let mut v = w[s.row];
            for &(i, f) in &s.l {
                v -= f * w[i];
            }
            w[s.row] = v;
        }
        w
    }
}

impl BasisLu {
    /// Factors the m x m matrix whose column `p` is `cols[p]` (row, value).
    pub(crate) fn new(m: usize, cols: Vec<Vec<(usize, f64)>>) -> Result<Self, Singular> {
        assert_eq!(cols.len(), m);
        let mut row_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (p, c) in cols.iter().enumerate() {
            for &(i, _) in c {
                row_adj[i].push(p);
            }
        }
        let mut row_on = vec![true; m];
        let mut col_on = vec![true; m];
        let mut col_count: Vec<usize> = cols.iter().map(|c| c.len()).collect();
        let mut row_count: Vec<usize> = row_adj.iter().map(|r| r.len()).collect();

        // Column and row singletons interleave freely: a pivot found later never
        // has entries in rows (columns) that an earlier pivot left active.
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        let mut col_stack: Vec<usize> = (0..m).filter(|&p| col_count[p] == 1).collect();
        let mut row_stack: Vec<usize> = (0..m).filter(|&i| row_count[i] == 1).collect();
        loop {
            if let Some(p) = col_stack.pop() {
                if !col_on[p] || col_count[p] != 1 {
                    continue;
                }
                let Some(&(r, v)) = cols[p].iter().find(|&&(i, _)| row_on[i]) else {
                    continue;
                };
                if v.abs() < SINGLETON_TOL {
                    continue;
                }
                col_on[p] = false;
                row_on[r] = false;
                for &q in &row_adj[r] {
                    if col_on[q] {
                        col_count[q] -= 1;
                        if col_count[q] == 1 {
                            col_stack.push(q);
                        }
                    }
                }
                upper.push((r, p, v));
            } else if let Some(r) = row_stack.pop() {
                if !row_on[r] || row_count[r] != 1 {
                    continue;
                }
                let Some(&p) = row_adj[r].iter().find(|&&p| col_on[p]) else {
                    continue;
                };
                let v = cols[p].iter().find(|&&(i, _)| i == r).map_or(0.0, |e| e.1);
                if v.abs() < SINGLETON_TOL {
                    continue;
                }
                row_on[r] = false;
                col_on[p] = false;
                for &(i, _) in &cols[p] {
                    if row_on[i] {
                        row_count[i] -= 1;
                        if row_count[i] == 1 {
                            row_stack.push(i);
                        }
                    }
                }
                lower.push((r, p, v));
            } else {
                break;
            }
        }

        let nuc_rows: Vec<usize> = (0..m).filter(|&i| row_on[i]).collect();
        let nuc_cols: Vec<usize> = (0..m).filter(|&p| col_on[p]).collect();
        let k = nuc_rows.len();
        debug_assert_eq!(k, nuc_cols.len());
        let mut nuc_of_row = vec![usize::MAX; m];
        for (a, &i) in nuc_rows.iter().enumerate() {
            nuc_of_row[i] = a;
        }
        let mut dense = vec![0.0; k * k];
        for (c, &p) in nuc_cols.iter().enumerate() {
            for &(i, v) in &cols[p] {
                let a = nuc_of_row[i];
                if a != usize::MAX {
                    dense[a * k + c] = v;
                }
            }
        }
        let nucleus = match Nucleus::factor(k, dense) {
            Ok(n) => n,
            Err((dcols, drows)) => {
                return Err(Singular {
                    positions: dcols.into_iter().map(|c| nuc_cols[c]).collect(),
                    rows: drows.into_iter().map(|a| nuc_rows[a]).collect(),
                })
            }
        };
        Ok(Self {
            cols,
            upper,
            lower,
            nuc_rows,
            nuc_cols,
            nuc_of_row,
            nucleus,
        })
    }

    #[cfg(test)]
    pub(crate) fn nucleus_size(&self) -> usize {
        self.nuc_rows.len()
    }

    /// Solves `B x = b`; `b` is indexed by row, the result by basis position.
    pub(crate) fn ftran(&self, mut w: Vec<f64>) -> Vec<f64> {
        let m = w.len();
        let mut x = vec![0.0; m];
        for &(r, p, v) in &self.lower {
            let xp = w[r] / v;
            if xp != 0.0 {
                x[p] = xp;
                for &(i, a) in &self.cols[p] {
                    if i != r {
                        w[i] -= a * xp;
                    }
                }
            }
        }
        if !self.nuc_rows.is_empty() {
            let xn = self.nucleus.solve(self.nuc_rows.iter().map(|&i| w[i]).collect());
            for (c, &p) in self.nuc_cols.iter().enumerate() {
                let xp = xn[c];
                if xp != 0.0 {
                    x[p] = xp;
                    for &(i, a) in &self.cols[p] {
                        if self.nuc_of_row[i] == usize::MAX {
                            w[i] -= a * xp;
                        }
                    }
                }
            }
        }
        for &(r, p, v) in self.upper.iter().rev() {
            let xp = w[r] / v;
            if xp != 0.0 {
                x[p] = xp;
                for &(i, a) in &self.cols[p] {
                    if i != r {
                        w[i] -= a * xp;
                    }
                }
            }
        }
        x
    }

    /// Solves `B^T y = c`; `c` is indexed by basis position, the result by row.
    pub(crate) fn btran(&self, c: &[f64]) -> Vec<f64> {
        let m = c.len();
        let mut y = vec![0.0; m];
        let dot = |y: &[f64], p: usize, skip: usize| -> f64 {
            self.cols[p]
                .iter()
                .filter(|&&(i, _)| i != skip)
                .map(|&(i, a)| a * y[i])
                .sum()
        };
        for &(r, p, v) in &self.upper {
            y[r] = (c[p] - dot(&y, p, r)) / v;
        }
        if !self.nuc_rows.is_empty() {
            let rhs: Vec<f64> = self.nuc_cols.iter().map(|&p| c[p] - dot(&y, p, usize::MAX)).collect();
            for (a, v) in self.nucleus.solve_transposed(rhs).into_iter().enumerate() {
                y[self.nuc_rows[a]] = v;
            }
        }
        for &(r, p, v) in self.lower.iter().rev() {
            y[r] = (c[p] - dot(&y, p, r)) / v;
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matvec(cols: &[Vec<(usize, f64)>], x: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; cols.len()];
        for (p, c) in cols.iter().enumerate() {
            for &(i, a) in c {
                b[i] += a * x[p];
            }
        }
        b
    }

    fn random_basis(rng: &mut ChaCha8Rng, m: usize) -> Vec<Vec<(usize, f64)>> {
        // Diagonally dominant core plus random sparse fill, columns shuffled.
        let mut cols: Vec<Vec<(usize, f64)>> = (0..m)
            .map(|p| {
                let mut c = vec![(p, 5.0 + rng.gen::<f64>())];
                for i in 0..m {
                    if i != p && rng.gen_bool(0.1) {
                        c.push((i, rng.gen_range(-1.0..1.0)));
                    }
                }
                c
            })
            .collect();
        for p in (1..m).rev() {
            let q = rng.gen_range(0..=p);
            cols.swap(p, q);
        }
        cols
    }

    #[test]
    fn ftran_and_btran_invert_the_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = rng.gen_range(1..40);
            let cols = random_basis(&mut rng, m);
            let lu = BasisLu::new(m, cols.clone()).unwrap();
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let x = lu.ftran(b.clone());
            let bx = matvec(&cols, &x);
            for i in 0..m {
                assert!((bx[i] - b[i]).abs() < 1e-10);
            }
            let y = lu.btran(&b);
            for (p, c) in cols.iter().enumerate() {
                let v: f64 = c.iter().map(|&(i, a)| a * y[i]).sum();
                assert!((v - b[p]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn triangular_bases_have_empty_nucleus() {
        // Upper bidiagonal: every column is a singleton once later rows go.
        let m = 6;
        let cols: Vec<_> = (0..m)
            .map(|p| if p == 0 { vec![(0, 2.0)] } else { vec![(p - 1, 1.0), (p, 2.0)] })
            .collect();
        let lu = BasisLu::new(m, cols.clone()).unwrap();
        assert_eq!(lu.nucleus_size(), 0);
        let x = lu.ftran(vec![1.0; m]);
        let bx = matvec(&cols, &x);
        assert!(bx.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn singular_basis_reports_uncovered_rows() {
        let cols = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)], vec![(2, 1.0)]];
        let err = BasisLu::new(3, cols).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }
}
