//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! The basis `B` (m x m, columns indexed by basis position) is reduced by
//! right-looking Gaussian elimination with Markowitz pivot selection and a
//! column threshold test. The factorization stores the elimination steps
//! `L_1 .. L_T` and the pivot rows of `U`, so that `B = L_1 ... L_T U` up to
//! row and column permutations. Basis changes between refactorizations are
//! appended as eta columns.

const DROP_TOL: f64 = 1e-14;
const PIVOT_THRESHOLD: f64 = 0.01;
const ABS_PIVOT_TOL: f64 = 1e-11;
const MARKOWITZ_CANDIDATES: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct Singular {
    /// Basis positions that could not be pivoted.
    pub positions: Vec<usize>,
    /// Rows that were left without a pivot.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Step {
    row: usize,
    col: usize,
    pivot: f64,
    /// Multipliers `(row, l)`: `row -= l * pivot_row`.
    lower: Vec<(usize, f64)>,
    /// Off-pivot entries of the pivot row, `(basis position, value)`.
    upper: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    m: usize,
    steps: Vec<Step>,
    etas: Vec<Eta>,
}

impl BasisFactor {
    /// Factorizes the basis given as sparse columns `(row, value)`.
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (c, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                if v.abs() > DROP_TOL {
                    rows[r].push((c, v));
                    col_rows[c].push(r);
                }
            }
        }
        let mut col_count: Vec<usize> = col_rows.iter().map(|c| c.len()).collect();
        let mut row_active = vec![true; m];
        let mut col_active = vec![true; m];
        let mut steps = Vec::with_capacity(m);
        // Scatter workspace: position of a column inside the row being updated.
        let mut slot = vec![usize::MAX; m];

        for _ in 0..m {
            let Some((pr, pc)) =
                choose_pivot(&rows, &col_rows, &col_count, &row_active, &col_active)
            else {
                break;
            };
            let pivot_row = std::mem::take(&mut rows[pr]);
            let pivot = pivot_row
                .iter()
                .find(|(c, _)| *c == pc)
                .map(|(_, v)| *v)
                .unwrap_or(0.0);
            row_active[pr] = false;
            col_active[pc] = false;
            for &(c, _) in &pivot_row {
                col_count[c] = col_count[c].saturating_sub(1);
            }

            let mut lower = Vec::new();
            let targets: Vec<usize> = col_rows[pc]
                .iter()
                .copied()
                .filter(|&r| row_active[r])
                .collect();
            for r in targets {
                let Some(idx) = rows[r].iter().position(|(c, _)| *c == pc) else {
                    continue;
                };
                let a = rows[r].swap_remove(idx).1;
                let l = a / pivot;
                if l.abs() <= DROP_TOL {
                    continue;
                }
                lower.push((r, l));
                let row = &mut rows[r];
                for (k, &(c, _)) in row.iter().enumerate() {
                    slot[c] = k;
                }
                for &(c, v) in &pivot_row {
                    if c == pc {
                        continue;
                    }
                    if slot[c] != usize::MAX {
                        row[slot[c]].1 -= l * v;
                    } else {
                        slot[c] = row.len();
                        row.push((c, -l * v));
                        col_rows[c].push(r);
                        col_count[c] += 1;
                    }
                }
                for &(c, _) in row.iter() {
                    slot[c] = usize::MAX;
                }
                let before = row.len();
                row.retain(|&(c, v)| {
                    let keep = v.abs() > DROP_TOL;
                    if !keep {
                        col_count[c] = col_count[c].saturating_sub(1);
                    }
                    keep
                });
                debug_assert!(row.len() <= before);
            }
            let upper = pivot_row.into_iter().filter(|(c, _)| *c != pc).collect();
            steps.push(Step {
                row: pr,
                col: pc,
                pivot,
                lower,
                upper,
            });
        }

        if steps.len() < m {
            let positions = (0..m).filter(|&c| col_active[c]).collect();
            let rows = (0..m).filter(|&r| row_active[r]).collect();
            return Err(Singular { positions, rows });
        }
        Ok(Self {
            m,
            steps,
            etas: Vec::new(),
        })
    }

    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B x = rhs`; `rhs` is indexed by row, the result by basis position.
    pub fn ftran(&self, rhs: &mut Vec<f64>) {
        let z = rhs;
        for step in &self.steps {
            let zp = z[step.row];
            if zp != 0.0 {
                for &(r, l) in &step.lower {
                    z[r] -= l * zp;
                }
            }
        }
        let mut x = vec![0.0; self.m];
        for step in self.steps.iter().rev() {
            let mut acc = z[step.row];
            for &(c, v) in &step.upper {
                acc -= v * x[c];
            }
            x[step.col] = acc / step.pivot;
        }
        for eta in &self.etas {
            let xp = x[eta.pos] / eta.pivot;
            x[eta.pos] = xp;
            if xp != 0.0 {
                for &(i, d) in &eta.entries {
                    x[i] -= d * xp;
                }
            }
        }
        *z = x;
    }

    /// Solves `y^T B = c^T`; `c` is indexed by basis position, the result by row.
    pub fn btran(&self, c: &mut Vec<f64>) {
        let u = c;
        for eta in self.etas.iter().rev() {
            let mut acc = u[eta.pos];
            for &(i, d) in &eta.entries {
                acc -= d * u[i];
            }
            u[eta.pos] = acc / eta.pivot;
        }
        let mut v = vec![0.0; self.m];
        let mut acc = vec![0.0; self.m];
        for step in &self.steps {
            let val = (u[step.col] - acc[step.col]) / step.pivot;
            v[step.row] = val;
            if val != 0.0 {
                for &(c, w) in &step.upper {
                    acc[c] += val * w;
                }
            }
        }
        for step in self.steps.iter().rev() {
            let mut s = 0.0;
            for &(r, l) in &step.lower {
                s += l * v[r];
            }
            v[step.row] -= s;
        }
        *u = v;
    }

    /// Records the replacement of basis position `pos` by a column whose
    /// FTRAN image is `alpha`.
    pub fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, v)| i != pos && v.abs() > DROP_TOL)
            .map(|(i, v)| (i, *v))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}

fn choose_pivot(
    rows: &[Vec<(usize, f64)>],
    col_rows: &[Vec<usize>],
    col_count: &[usize],
    row_active: &[bool],
    col_active: &[bool],
) -> Option<(usize, usize)> {
    // Keep the few sparsest active columns; singletons end the scan early.
    let mut candidates: Vec<(usize, usize)> = Vec::with_capacity(MARKOWITZ_CANDIDATES + 1);
    for (c, &active) in col_active.iter().enumerate() {
        if !active || col_count[c] == 0 {
            continue;
        }
        let key = (col_count[c], c);
        if candidates.len() < MARKOWITZ_CANDIDATES || key < candidates[candidates.len() - 1] {
            let at = candidates.partition_point(|k| *k < key);
            candidates.insert(at, key);
            candidates.truncate(MARKOWITZ_CANDIDATES);
        }
        if candidates[0].0 == 1 {
            break;
        }
    }
    if candidates.is_empty() {
        // Remaining active columns may still hold stale counts of zero.
        return None;
    }

    let entry = |r: usize, c: usize| rows[r].iter().find(|(cc, _)| *cc == c).map(|(_, v)| *v);

    let mut best: Option<(usize, f64, usize, usize)> = None;
    for &(count, c) in candidates.iter().take(MARKOWITZ_CANDIDATES) {
        let mut col_max: f64 = 0.0;
        let mut entries = Vec::new();
        for &r in &col_rows[c] {
            if !row_active[r] {
                continue;
            }
            if let Some(v) = entry(r, c) {
                col_max = col_max.max(v.abs());
                entries.push((r, v));
            }
        }
        if col_max <= ABS_PIVOT_TOL {
            continue;
        }
        entries.sort_unstable_by_key(|e| e.0);
        for (r, v) in entries {
            if v.abs() < PIVOT_THRESHOLD * col_max || v.abs() <= ABS_PIVOT_TOL {
                continue;
            }
            let merit = (rows[r].len() - 1) * (count - 1);
            let better = match best {
                None => true,
                Some((bm, bv, _, _)) => merit < bm || (merit == bm && v.abs() > bv),
            };
            if better {
                best = Some((merit, v.abs(), r, c));
            }
        }
        if matches!(best, Some((0, _, _, _))) {
            break;
        }
    }
    if best.is_none() {
        // Fall back to the largest remaining entry anywhere.
        for c in (0..col_active.len()).filter(|&c| col_active[c]) {
            for &r in &col_rows[c] {
                if !row_active[r] {
                    continue;
                }
                if let Some(v) = entry(r, c) {
                    if v.abs() > ABS_PIVOT_TOL && best.is_none_or(|(_, bv, _, _)| v.abs() > bv) {
                        best = Some((usize::MAX, v.abs(), r, c));
                    }
                }
            }
        }
    }
    best.map(|(_, _, r, c)| (r, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|c| {
                (0..m)
                    .filter(|&r| a[r][c] != 0.0)
                    .map(|r| (r, a[r][c]))
                    .collect()
            })
            .collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
            .collect()
    }

    #[test]
    fn ftran_and_btran_invert_a_small_basis() {
        let a = vec![
            vec![4.0, 0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0, 2.0],
            vec![1.0, 0.0, 3.0, 0.0],
            vec![0.0, 5.0, 0.0, 1.0],
        ];
        let f = BasisFactor::factorize(4, &dense_to_cols(&a)).unwrap();
        let x_true = vec![1.0, -2.0, 0.5, 3.0];
        let mut rhs = matvec(&a, &x_true);
        f.ftran(&mut rhs);
        for (p, q) in rhs.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-12);
        }
        // y^T A = c^T  <=>  A^T y = c
        let y_true = vec![0.3, -1.0, 2.0, 0.25];
        let mut c: Vec<f64> = (0..4)
            .map(|j| (0..4).map(|i| a[i][j] * y_true[i]).sum())
            .collect();
        f.btran(&mut c);
        for (p, q) in c.iter().zip(&y_true) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_updates_track_column_replacement() {
        let mut a = vec![
            vec![2.0, 1.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 3.0],
        ];
        let mut f = BasisFactor::factorize(3, &dense_to_cols(&a)).unwrap();
        let new_col = vec![1.0, -1.0, 2.0];
        let mut alpha = new_col.clone();
        f.ftran(&mut alpha);
        f.push_eta(1, &alpha);
        for r in 0..3 {
            a[r][1] = new_col[r];
        }
        let x_true = vec![0.5, 1.5, -1.0];
        let mut rhs = matvec(&a, &x_true);
        f.ftran(&mut rhs);
        for (p, q) in rhs.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-12, "{rhs:?}");
        }
        let y_true = vec![1.0, 2.0, -0.5];
        let mut c: Vec<f64> = (0..3)
            .map(|j| (0..3).map(|i| a[i][j] * y_true[i]).sum())
            .collect();
        f.btran(&mut c);
        for (p, q) in c.iter().zip(&y_true) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_basis_reports_unpivoted_positions() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let err = BasisFactor::factorize(2, &dense_to_cols(&a)).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }
}
