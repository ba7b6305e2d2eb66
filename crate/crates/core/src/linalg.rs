//! Sparse assembly and factorisation helpers.

use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use std::collections::HashMap;

/// Square sparse matrix in compressed-row form together with its LU factors.
pub struct Factorized {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for Factorized {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorized")
            .field("n", &self.n)
            .field("nnz", &self.vals.len())
            .finish()
    }
}

impl Factorized {
    /// Builds and factors the matrix; duplicate entries are summed.
    pub fn new(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> =
            triplets.iter().copied().filter(|e| e.2 != 0.0).collect();
        t.sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &t {
            if r >= n || c >= n {
                return Err(Error::ShapeMismatch(format!(
                    "entry ({r}, {c}) outside {n}x{n}"
                )));
            }
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        let trip: Vec<Triplet<usize, usize, f64>> = (0..n)
            .flat_map(|r| (row_ptr[r]..row_ptr[r + 1]).map(move |k| (r, k)))
            .map(|(r, k)| Triplet::new(r, cols[k], vals[k]))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::Singular(format!("sparse build: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::Singular(format!("sparse LU: {e:?}")))?;
        let out = Self {
            n,
            row_ptr,
            cols,
            vals,
            lu,
        };
        // cheap singularity probe: solve against a fixed vector and check it
        let b: Vec<f64> = (0..n).map(|k| 1.0 + (k % 7) as f64 * 0.1).collect();
        let x = out.raw_solve(&b, false);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular(
                "factorisation produced non-finite values".into(),
            ));
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.vals[k] * x[self.cols[k]])
                    .sum()
            })
            .collect()
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.cols[k]] += self.vals[k] * x[r];
            }
        }
        out
    }

    /// Entry lookup, for tests and diagnostics.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        (self.row_ptr[r]..self.row_ptr[r + 1])
            .find(|&k| self.cols[k] == c)
            .map_or(0.0, |k| self.vals[k])
    }

    fn raw_solve(&self, b: &[f64], transpose: bool) -> Vec<f64> {
        let mut m = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        if transpose {
            self.lu.solve_transpose_in_place(m.as_mut());
        } else {
            self.lu.solve_in_place(m.as_mut());
        }
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }

    fn refined(&self, b: &[f64], transpose: bool) -> Vec<f64> {
        let mut x = self.raw_solve(b, transpose);
        for _ in 0..2 {
            let ax = if transpose {
                self.matvec_transpose(&x)
            } else {
                self.matvec(&x)
            };
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let d = self.raw_solve(&r, transpose);
            x.iter_mut().zip(&d).for_each(|(x, d)| *x += d);
        }
        x
    }

    /// Solves `A x = b` with two steps of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.refined(b, false)
    }

    /// Solves `A^T x = b` with the same factors.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        self.refined(b, true)
    }
}

/// Location tag of an unknown, used to recover sparsity by probing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DofTag {
    pub kind: u8,
    pub i: usize,
    pub j: usize,
}

const STRIDE: usize = 5;

/// Recovers the matrix of a local linear map from `STRIDE^2` probes per
/// unknown kind. Every output entry must depend only on unknowns whose grid
/// indices differ from its own by at most two.
pub fn probe_matrix(
    tags: &[DofTag],
    apply: impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<(usize, usize, f64)> {
    let n = tags.len();
    let index: HashMap<DofTag, usize> = tags.iter().enumerate().map(|(k, t)| (*t, k)).collect();
    let mut groups: HashMap<(u8, usize, usize), Vec<usize>> = HashMap::new();
    for (k, t) in tags.iter().enumerate() {
        groups
            .entry((t.kind, t.i % STRIDE, t.j % STRIDE))
            .or_default()
            .push(k);
    }
    let mut keys: Vec<_> = groups.keys().copied().collect();
    keys.sort_unstable();
    let mut out = Vec::new();
    let pick = |r: usize, c: usize| -> Option<usize> {
        // the index congruent to c mod STRIDE within [r - 2, r + 2]
        let d = (c + STRIDE - r % STRIDE) % STRIDE;
        let cand = if d <= 2 {
            r + d
        } else {
            r.checked_sub(STRIDE - d)?
        };
        Some(cand)
    };
    for key in keys {
        let mut x = vec![0.0; n];
        for &k in &groups[&key] {
            x[k] = 1.0;
        }
        let y = apply(&x);
        debug_assert_eq!(y.len(), n);
        for (r, &val) in y.iter().enumerate() {
            if val == 0.0 {
                continue;
            }
            let tr = tags[r];
            let (Some(ci), Some(cj)) = (pick(tr.i, key.1), pick(tr.j, key.2)) else {
                continue;
            };
            if let Some(&c) = index.get(&DofTag {
                kind: key.0,
                i: ci,
                j: cj,
            }) {
                out.push((r, c, val));
            } else {
                debug_assert!(val.abs() < 1e-300, "probe hit a missing unknown");
            }
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorized_solves_and_transposes() {
        let t = vec![
            (0, 0, 2.0),
            (0, 1, 1.0),
            (0, 2, 1.0),
            (1, 1, 3.0),
            (2, 0, 1.0),
            (0, 0, 0.0),
        ];
        let f = Factorized::new(3, &t).unwrap();
        let x = f.solve(&[1.0, 2.0, 3.0]);
        let ax = f.matvec(&x);
        for (a, b) in ax.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let y = f.solve_transpose(&[1.0, 0.0, 0.0]);
        let aty = f.matvec_transpose(&y);
        assert!((aty[0] - 1.0).abs() < 1e-14 && aty[1].abs() < 1e-14 && aty[2].abs() < 1e-14);
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let f = Factorized::new(2, &[(0, 0, 1.0), (0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(f.entry(0, 0), 2.0);
    }

    #[test]
    fn probing_recovers_a_banded_stencil() {
        // 1D second difference on 12 points, two kinds interleaved
        let n = 12;
        let tags: Vec<DofTag> = (0..n).map(|i| DofTag { kind: 0, i, j: 0 }).collect();
        let apply = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let l = if i > 0 { x[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                    l - 2.0 * x[i] + 0.5 * r + if i + 2 < n { 0.25 * x[i + 2] } else { 0.0 }
                })
                .collect()
        };
        let t = probe_matrix(&tags, apply);
        let f = Factorized::new(n, &t).unwrap();
        for i in 0..n {
            assert_eq!(f.entry(i, i), -2.0);
            if i > 0 {
                assert_eq!(f.entry(i, i - 1), 1.0);
            }
            if i + 2 < n {
                assert_eq!(f.entry(i, i + 2), 0.25);
            }
        }
    }
}
