//! Maximum-weight bipartite matching.
//!
//! [`hungarian_max_weight`] is the shortest-augmenting-path Hungarian method
//! with vertex potentials, O(n²m) for an n×m matrix with n ≤ m. Disallowed
//! cells are never relaxed, so no sentinel weights enter the arithmetic.
//!
//! Tie-breaking: when several assignments share the optimal weight the
//! solver deterministically prefers the lowest free column at each
//! augmentation step. This is stable across runs but is not a full
//! lexicographic minimum over all optimal assignments.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::score::MappingSet;

/// Allowed cells of an n1×n2 weight matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    n1: usize,
    n2: usize,
    allowed: Vec<bool>,
}

impl Mask {
    pub fn full(n1: usize, n2: usize) -> Self {
        Self {
            n1,
            n2,
            allowed: vec![true; n1 * n2],
        }
    }

    pub fn none(n1: usize, n2: usize) -> Self {
        Self {
            n1,
            n2,
            allowed: vec![false; n1 * n2],
        }
    }

    pub fn from_mapping_set(set: &MappingSet) -> Self {
        let mut m = Self::none(set.n1(), set.n2());
        for &(i, j) in set.pairs() {
            m.allow(i, j);
        }
        m
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn allow(&mut self, i: usize, j: usize) {
        self.allowed[i * self.n2 + j] = true;
    }

    pub fn forbid(&mut self, i: usize, j: usize) {
        self.allowed[i * self.n2 + j] = false;
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.n2 + j]
    }

    /// Pads to a larger shape; new cells are allowed.
    pub fn padded(&self, n1: usize, n2: usize) -> Self {
        let mut m = Self::full(n1, n2);
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                if !self.allows(i, j) {
                    m.forbid(i, j);
                }
            }
        }
        m
    }

    fn transposed(&self) -> Self {
        let mut t = Self::none(self.n2, self.n1);
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                if self.allows(i, j) {
                    t.allow(j, i);
                }
            }
        }
        t
    }
}

/// A one-to-one set of `(i, j′)` pairs, sorted by `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total_weight: f64,
}

impl Assignment {
    /// Sorts `pairs` and sums their weights in `w`.
    pub fn from_pairs(mut pairs: Vec<(usize, usize)>, w: &DMatrix<f64>) -> Self {
        pairs.sort_unstable();
        let total_weight = pairs.iter().map(|&(i, j)| w[(i, j)]).sum();
        Self { pairs, total_weight }
    }

    /// Pairs without a weight (e.g. read from a mapping file).
    pub fn unweighted(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        Self {
            pairs,
            total_weight: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Fails if any node repeats on either side or lies outside n1×n2.
    pub fn validate(&self, n1: usize, n2: usize) -> Result<()> {
        let mut left = vec![false; n1];
        let mut right = vec![false; n2];
        for &(i, j) in &self.pairs {
            if i >= n1 {
                return Err(Error::DimensionMismatch { expected: n1, got: i + 1 });
            }
            if j >= n2 {
                return Err(Error::DimensionMismatch { expected: n2, got: j + 1 });
            }
            if std::mem::replace(&mut left[i], true) {
                return Err(Error::NotOneToOne { side: 1, node: i });
            }
            if std::mem::replace(&mut right[j], true) {
                return Err(Error::NotOneToOne { side: 2, node: j });
            }
        }
        Ok(())
    }

    /// `forward[i] = Some(j′)` for mapped `i`.
    pub fn forward(&self, n1: usize) -> Vec<Option<usize>> {
        let mut f = vec![None; n1];
        for &(i, j) in &self.pairs {
            f[i] = Some(j);
        }
        f
    }
}

fn check_shape(w: &DMatrix<f64>, mask: Option<&Mask>) -> Result<()> {
    if let Some(m) = mask {
        if m.n1 != w.nrows() {
            return Err(Error::DimensionMismatch {
                expected: w.nrows(),
                got: m.n1,
            });
        }
        if m.n2 != w.ncols() {
            return Err(Error::DimensionMismatch {
                expected: w.ncols(),
                got: m.n2,
            });
        }
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("weight matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Maximum-weight matching saturating the smaller side, restricted to
/// `mask` cells when given.
pub fn hungarian_max_weight(w: &DMatrix<f64>, mask: Option<&Mask>) -> Result<Assignment> {
    check_shape(w, mask)?;
    if w.nrows() == 0 || w.ncols() == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            total_weight: 0.0,
        });
    }
    if w.nrows() > w.ncols() {
        let t = w.transpose();
        let tm = mask.map(Mask::transposed);
        let pairs = solve(&t, tm.as_ref()).map_err(|e| match e {
            Error::InfeasibleMatching {
                vertices, neighbours, ..
            } => Error::InfeasibleMatching {
                side: "G2",
                vertices,
                neighbours,
            },
            other => other,
        })?;
        return Ok(Assignment::from_pairs(
            pairs.into_iter().map(|(j, i)| (i, j)).collect(),
            w,
        ));
    }
    let pairs = solve(w, mask)?;
    Ok(Assignment::from_pairs(pairs, w))
}

/// Rows ≤ columns. Minimises `−w` with 1-based potentials.
fn solve(w: &DMatrix<f64>, mask: Option<&Mask>) -> Result<Vec<(usize, usize)>> {
    let (n, m) = (w.nrows(), w.ncols());
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let allowed = |i: usize, j: usize| mask.is_none_or(|mk| mk.allows(i, j));

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                if allowed(i0 - 1, j - 1) {
                    let cur = -w[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if delta == inf {
                let mut rows: Vec<usize> = (0..=m).filter(|&j| used[j]).map(|j| p[j] - 1).collect();
                rows.sort_unstable();
                let neighbours = rows.len() - 1;
                return Err(Error::InfeasibleMatching {
                    side: "G1",
                    vertices: rows,
                    neighbours,
                });
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    Ok((1..=m).filter(|&j| p[j] != 0).map(|j| (p[j] - 1, j - 1)).collect())
}

/// Greedy matching: heaviest allowed free cell first, ties to the lowest
/// `(i, j′)`. At least half the optimum for non-negative weights.
pub fn greedy_matching(w: &DMatrix<f64>, mask: Option<&Mask>) -> Result<Assignment> {
    check_shape(w, mask)?;
    let (n1, n2) = (w.nrows(), w.ncols());
    let mut cells: Vec<(usize, usize)> = (0..n1)
        .flat_map(|i| (0..n2).map(move |j| (i, j)))
        .filter(|&(i, j)| mask.is_none_or(|m| m.allows(i, j)))
        .collect();
    cells.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let mut row_used = vec![false; n1];
    let mut col_used = vec![false; n2];
    let mut pairs = Vec::with_capacity(n1.min(n2));
    for (i, j) in cells {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            pairs.push((i, j));
        }
    }
    Ok(Assignment::from_pairs(pairs, w))
}
