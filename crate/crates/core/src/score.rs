//! Match / neutral / mismatch scoring and the alignment graph `A`.
//!
//! `A` is indexed by mapping pairs `(i, j')`. For the full mapping set the
//! linear index of `(i, j')` is `i + j'·n1` (column-major unfolding of the
//! `n1 × n2` mapping matrix), which is also the layout expected by
//! [`AlignmentOperator`].

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::SymmetricOperator;

/// Scores for matched, neutral and mismatched node pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreScheme {
    s1: f64,
    s2: f64,
    s3: f64,
}

impl ScoreScheme {
    /// Requires `s1 > s2 > s3 > 0`.
    pub fn new(s1: f64, s2: f64, s3: f64) -> Result<Self> {
        if !(s1 > s2 && s2 > s3 && s3 > 0.0) || !s1.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scores must satisfy s1 > s2 > s3 > 0, got ({s1}, {s2}, {s3})"
            )));
        }
        Ok(Self { s1, s2, s3 })
    }

    /// `(α + ε, 1 + ε, ε)`, whose regularisation parameter is `1 / (1 + α)`.
    pub fn from_alpha(alpha: f64, eps: f64) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        Self::new(alpha + eps, 1.0 + eps, eps)
    }

    /// The `(α, ε)` scheme with regularisation parameter `gamma`, i.e. `α = 1/γ − 1`.
    pub fn from_gamma(gamma: f64, eps: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "a positive score scheme needs 0 < gamma < 1/2, got {gamma}"
            )));
        }
        Self::from_alpha(1.0 / gamma - 1.0, eps)
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }
    pub fn s2(&self) -> f64 {
        self.s2
    }
    pub fn s3(&self) -> f64 {
        self.s3
    }

    /// `(s2 − s3) / (s1 + s2 − 2·s3)`, always in `[0, 1/2)`.
    pub fn gamma(&self) -> f64 {
        (self.s2 - self.s3) / self.curvature()
    }

    /// `s1 + s2 − 2·s3`, the coefficient of the `G1(i,r)·G2(j',s')` term.
    #[inline]
    pub fn curvature(&self) -> f64 {
        self.s1 + self.s2 - 2.0 * self.s3
    }
}

/// Score of one pair of mappings from the two adjacency entries.
#[inline]
pub fn alignment_entry(s: &ScoreScheme, e1: bool, e2: bool) -> f64 {
    let (x, y) = (e1 as u8 as f64, e2 as u8 as f64);
    s.curvature() * x * y + (s.s3 - s.s2) * (x + y) + s.s2
}

/// Directed variant: the pair is scored by its strongest category over the
/// two directions; a match in one direction with a mismatch in the other
/// scores `(s1 + s3) / 2`.
pub fn directed_alignment_entry(
    s: &ScoreScheme,
    g1_forward: bool,
    g1_backward: bool,
    g2_forward: bool,
    g2_backward: bool,
) -> f64 {
    let matched = |a: bool, b: bool| a && b;
    let mismatched = |a: bool, b: bool| a != b;
    let any_match = matched(g1_forward, g2_forward) || matched(g1_backward, g2_backward);
    let any_mismatch = mismatched(g1_forward, g2_forward) || mismatched(g1_backward, g2_backward);
    match (any_match, any_mismatch) {
        (true, true) => 0.5 * (s.s1 + s.s3),
        (true, false) => s.s1,
        (false, true) => s.s3,
        (false, false) => s.s2,
    }
}

/// The set `R` of allowed mapping pairs, with a dense index.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingSet {
    n1: usize,
    n2: usize,
    pairs: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
}

impl MappingSet {
    /// All `n1·n2` pairs, indexed `i + j'·n1`.
    pub fn full(n1: usize, n2: usize) -> Self {
        let pairs: Vec<_> = (0..n2).flat_map(|j| (0..n1).map(move |i| (i, j))).collect();
        Self::from_pairs(n1, n2, pairs).expect("full mapping set is valid")
    }

    /// Pairs keep the given order as their index.
    pub fn from_pairs(n1: usize, n2: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(pairs.len());
        for (t, &(i, j)) in pairs.iter().enumerate() {
            if i >= n1 || j >= n2 {
                return Err(Error::InvalidParameter(format!(
                    "mapping pair ({i}, {j}) out of range for {n1} x {n2}"
                )));
            }
            if index.insert((i, j), t).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate mapping pair ({i}, {j})")));
            }
        }
        Ok(Self { n1, n2, pairs, index })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }
    pub fn n2(&self) -> usize {
        self.n2
    }
    pub fn len(&self) -> usize {
        self.pairs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
    pub fn pair(&self, t: usize) -> (usize, usize) {
        self.pairs[t]
    }
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        self.index.get(&(i, j)).copied()
    }
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.index.contains_key(&(i, j))
    }
    pub fn is_full(&self) -> bool {
        self.pairs.len() == self.n1 * self.n2
    }
    /// True when the index is the column-major layout `i + j'·n1`.
    pub fn is_canonical_full(&self) -> bool {
        self.is_full()
            && self
                .pairs
                .iter()
                .enumerate()
                .all(|(t, &(i, j))| t == i + j * self.n1)
    }
}

/// Default cap on dense alignment-matrix entries (about 400 MB of `f64`).
pub const DEFAULT_DENSE_CAP: usize = 50_000_000;

/// Explicit `|R| × |R|` alignment matrix.
///
/// Entry `[(i,j'),(r,s')]` is the score of `G1(i,r)` against `G2(j',s')`;
/// the diagonal is `s2`. If either graph is directed the directed entry
/// rule is used.
pub fn build_alignment_matrix(
    g1: &Graph,
    g2: &Graph,
    s: &ScoreScheme,
    r: &MappingSet,
    cap: usize,
) -> Result<DMatrix<f64>> {
    if r.n1() != g1.n() || r.n2() != g2.n() {
        return Err(Error::DimensionMismatch {
            expected: g1.n() * g2.n(),
            got: r.n1() * r.n2(),
        });
    }
    let m = r.len();
    let entries = m.saturating_mul(m);
    if entries > cap {
        return Err(Error::TooLarge { entries, cap });
    }
    let directed = g1.is_directed() || g2.is_directed();
    let mut a = DMatrix::zeros(m, m);
    for t1 in 0..m {
        let (i, j) = r.pair(t1);
        a[(t1, t1)] = s.s2;
        for t2 in t1 + 1..m {
            let (k, l) = r.pair(t2);
            let v = if directed {
                directed_alignment_entry(s, g1.has_edge(i, k), g1.has_edge(k, i), g2.has_edge(j, l), g2.has_edge(l, j))
            } else {
                alignment_entry(s, g1.has_edge(i, k), g2.has_edge(j, l))
            };
            a[(t1, t2)] = v;
            a[(t2, t1)] = v;
        }
    }
    Ok(a)
}

/// Matrix-free alignment operator over the full mapping set of two
/// undirected graphs.
///
/// With `Y` the `n1 × n2` unfolding of `y` (`Y(i,j') = y[i + j'·n1]`):
///
/// `A·y = c·G1 Y G2ᵀ + (s3 − s2)·(G1 Y 1 1ᵀ + 1 1ᵀ Y G2ᵀ) + s2·(1ᵀ Y 1)·1 1ᵀ`
///
/// with `c = s1 + s2 − 2·s3`, at `O(n1·n2·(n1 + n2))` per product.
#[derive(Debug, Clone)]
pub struct AlignmentOperator {
    g1: DMatrix<f64>,
    g2: DMatrix<f64>,
    scheme: ScoreScheme,
}

impl AlignmentOperator {
    pub fn new(g1: &Graph, g2: &Graph, scheme: ScoreScheme) -> Result<Self> {
        if g1.is_directed() || g2.is_directed() {
            return Err(Error::InvalidParameter(
                "the implicit alignment operator is for undirected graphs".into(),
            ));
        }
        Ok(Self {
            g1: g1.to_matrix(),
            g2: g2.to_matrix(),
            scheme,
        })
    }

    pub fn n1(&self) -> usize {
        self.g1.nrows()
    }
    pub fn n2(&self) -> usize {
        self.g2.nrows()
    }

    /// `A·y`, checking dimensions.
    pub fn matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        let dim = self.n1() * self.n2();
        if y.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: y.len(),
            });
        }
        let mut out = vec![0.0; dim];
        self.apply(y, &mut out);
        Ok(out)
    }
}

impl SymmetricOperator for AlignmentOperator {
    fn dim(&self) -> usize {
        self.n1() * self.n2()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (n1, n2) = (self.n1(), self.n2());
        let s = &self.scheme;
        let y = DMatrix::from_column_slice(n1, n2, x);
        let sandwich = &self.g1 * &y * self.g2.transpose();
        let row_part = &self.g1 * y.column_sum();
        let col_part = &self.g2 * y.row_sum().transpose();
        let total = y.sum();
        let d = s.s3 - s.s2;
        let c = s.curvature();
        for j in 0..n2 {
            for i in 0..n1 {
                out[i + j * n1] = c * sandwich[(i, j)] + d * (row_part[i] + col_part[j]) + s.s2 * total;
            }
        }
    }
}

/// `A` restricted to a mapping set, evaluated through the full implicit
/// operator by scatter / gather on the index of `R`.
#[derive(Debug, Clone)]
pub struct RestrictedOperator<'a> {
    full: &'a AlignmentOperator,
    set: &'a MappingSet,
}

impl<'a> RestrictedOperator<'a> {
    pub fn new(full: &'a AlignmentOperator, set: &'a MappingSet) -> Result<Self> {
        if set.n1() != full.n1() || set.n2() != full.n2() {
            return Err(Error::DimensionMismatch {
                expected: full.dim(),
                got: set.n1() * set.n2(),
            });
        }
        Ok(Self { full, set })
    }
}

impl SymmetricOperator for RestrictedOperator<'_> {
    fn dim(&self) -> usize {
        self.set.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n1 = self.full.n1();
        let mut wide = vec![0.0; self.full.dim()];
        for (t, &(i, j)) in self.set.pairs().iter().enumerate() {
            wide[i + j * n1] = x[t];
        }
        let mut image = vec![0.0; wide.len()];
        self.full.apply(&wide, &mut image);
        for (t, &(i, j)) in self.set.pairs().iter().enumerate() {
            out[t] = image[i + j * n1];
        }
    }
}

/// Dense matrix as CSV text, one row per line.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
