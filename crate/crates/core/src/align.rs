//! End-to-end aligners and exact small-instance oracles.
//!
//! * [`eigen_align`]: leading eigenvector of the alignment matrix, rounded by
//!   bipartite matching over the allowed mapping pairs.
//! * [`low_rank_align`]: orthogonal relaxation of the QAP on `G − γ𝟙`,
//!   rounded through a rank-k eigen-affinity with a search over eigenvector
//!   signs; candidates are ranked by the generalized objective.
//! * [`brute_force_qap`] and [`brute_force_trace`]: factorial enumeration,
//!   guarded at `n ≤ 10`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pad_to, Graph, Permutation};
use crate::matching::{greedy_matching, hungarian_max_weight, Assignment, Mask};
use crate::metrics::{count_alignment, generalized_objective, AlignmentCounts, MetricsRecord};
use crate::score::{build_alignment_matrix, AlignmentOperator, MappingSet, RestrictedOperator, ScoreScheme, DEFAULT_DENSE_CAP};
use crate::spectral::{full_eigs, leading_eigenvector, psd_shift, symmetric_singular_values, top_k_eigs, PowerOptions, SpectralDecomposition};

pub use crate::metrics::expected_objective_gap;

/// Largest `n` accepted by the factorial oracles.
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Largest rank for which all `2^k` sign vectors are enumerated.
pub const EXHAUSTIVE_SIGN_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[serde(rename = "ea")]
    EigenAlign,
    #[serde(rename = "lra")]
    LowRankAlign,
    #[serde(rename = "brute")]
    BruteForce,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::EigenAlign => "ea",
            Method::LowRankAlign => "lra",
            Method::BruteForce => "brute",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchingMethod {
    #[default]
    Exact,
    Greedy,
}

impl MatchingMethod {
    pub fn solve(&self, w: &DMatrix<f64>, mask: Option<&Mask>) -> Result<Assignment> {
        match self {
            MatchingMethod::Exact => hungarian_max_weight(w, mask),
            MatchingMethod::Greedy => greedy_matching(w, mask),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub mapping: Assignment,
    pub counts: AlignmentCounts,
    /// Generalized objective at `gamma`.
    pub objective: f64,
    pub method: Method,
    pub gamma: f64,
    pub rank: Option<usize>,
    pub seed: u64,
}

impl AlignmentResult {
    fn new(
        g1: &Graph,
        g2: &Graph,
        mapping: Assignment,
        method: Method,
        gamma: f64,
        rank: Option<usize>,
        seed: u64,
    ) -> Result<Self> {
        let counts = count_alignment(g1, g2, &mapping)?;
        let objective = generalized_objective(g1, g2, &mapping, gamma)?;
        Ok(Self {
            mapping,
            counts,
            objective,
            method,
            gamma,
            rank,
            seed,
        })
    }

    pub fn to_record(&self, accuracy: Option<f64>, wall_ms: f64) -> MetricsRecord {
        MetricsRecord {
            method: self.method.as_str().to_string(),
            gamma: self.gamma,
            seed: self.seed,
            matches: self.counts.matches,
            mismatches: self.counts.mismatches,
            neutrals: self.counts.neutrals,
            objective: self.objective,
            accuracy,
            wall_ms,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenAlignOptions {
    pub power: PowerOptions,
    pub matching: MatchingMethod,
    /// Entry cap for the dense restricted matrix; above it the restricted
    /// product goes through the implicit operator.
    pub dense_cap: usize,
}

impl Default for EigenAlignOptions {
    fn default() -> Self {
        Self {
            power: PowerOptions::default(),
            matching: MatchingMethod::Exact,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

/// EigenAlign over the mapping set `r` (all pairs when `None`).
pub fn eigen_align(
    g1: &Graph,
    g2: &Graph,
    s: &ScoreScheme,
    r: Option<&MappingSet>,
    opts: EigenAlignOptions,
) -> Result<AlignmentResult> {
    let (n1, n2) = (g1.n(), g2.n());
    let full;
    let set = match r {
        Some(set) => {
            if set.n1() != n1 || set.n2() != n2 {
                return Err(Error::DimensionMismatch {
                    expected: n1 * n2,
                    got: set.n1() * set.n2(),
                });
            }
            set
        }
        None => {
            full = MappingSet::full(n1, n2);
            &full
        }
    };
    if set.is_empty() {
        return Err(Error::InvalidParameter("mapping set is empty".into()));
    }
    let directed = g1.is_directed() || g2.is_directed();

    let v = if directed {
        let a = build_alignment_matrix(g1, g2, s, set, opts.dense_cap)?;
        leading_eigenvector(&a, opts.power)?.vector
    } else if set.is_canonical_full() {
        let op = AlignmentOperator::new(g1, g2, *s)?;
        leading_eigenvector(&op, opts.power)?.vector
    } else {
        match build_alignment_matrix(g1, g2, s, set, opts.dense_cap) {
            Ok(a) => leading_eigenvector(&a, opts.power)?.vector,
            Err(Error::TooLarge { .. }) => {
                let op = AlignmentOperator::new(g1, g2, *s)?;
                let restricted = RestrictedOperator::new(&op, set)?;
                leading_eigenvector(&restricted, opts.power)?.vector
            }
            Err(e) => return Err(e),
        }
    };

    let mut w = DMatrix::zeros(n1, n2);
    for (t, &(i, j)) in set.pairs().iter().enumerate() {
        w[(i, j)] = v[t];
    }
    let mapping = if set.is_full() {
        opts.matching.solve(&w, None)?
    } else {
        opts.matching.solve(&w, Some(&Mask::from_mapping_set(set)))?
    };
    AlignmentResult::new(g1, g2, mapping, Method::EigenAlign, s.gamma(), None, opts.power.seed)
}

/// Orthogonal relaxation of `max Tr(M1 X M2 Xᵀ)` and its eigen-data.
#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    /// `V·Uᵀ` with all signs `+1`.
    pub x0: DMatrix<f64>,
    pub signs: Vec<f64>,
    pub spectrum1: SpectralDecomposition,
    pub spectrum2: SpectralDecomposition,
}

impl RelaxationSolution {
    /// `Σ sᵢ vᵢ uᵢᵀ`.
    pub fn with_signs(&self, signs: &[f64]) -> DMatrix<f64> {
        let v = &self.spectrum1.eigenvectors;
        let u = &self.spectrum2.eigenvectors;
        v * DMatrix::from_diagonal(&DVector::from_column_slice(signs)) * u.transpose()
    }

    /// Relaxed optimum `Σ λᵢ(M1)·λᵢ(M2)`.
    pub fn value(&self) -> f64 {
        self.spectrum1
            .eigenvalues
            .iter()
            .zip(&self.spectrum2.eigenvalues)
            .map(|(a, b)| a * b)
            .sum()
    }
}

pub fn orthogonal_relaxation(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> Result<RelaxationSolution> {
    if m1.shape() != m2.shape() {
        return Err(Error::DimensionMismatch {
            expected: m1.nrows(),
            got: m2.nrows(),
        });
    }
    let spectrum1 = full_eigs(m1)?;
    let spectrum2 = full_eigs(m2)?;
    let signs = vec![1.0; m1.nrows()];
    let x0 = &spectrum1.eigenvectors * spectrum2.eigenvectors.transpose();
    Ok(RelaxationSolution {
        x0,
        signs,
        spectrum1,
        spectrum2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignMode {
    /// Exhaustive up to [`EXHAUSTIVE_SIGN_LIMIT`], local search above.
    #[default]
    Auto,
    Exhaustive,
    /// Single-flip hill climbing from all `+1`.
    LocalSearch,
    /// Only the all-`+1` vector.
    AllPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    /// Matching on `Σ sᵢ λᵢ μᵢ vᵢ uᵢᵀ`.
    #[default]
    Scaled,
    /// Matching on `Σ sᵢ vᵢ uᵢᵀ` (projection of the truncated relaxed
    /// solution onto permutations).
    Projection,
}

#[derive(Debug, Clone)]
pub struct LowRankOptions {
    pub rank: usize,
    pub matching: MatchingMethod,
    pub signs: SignMode,
    pub rounding: Rounding,
    /// Allowed `(i, j′)` cells on the original `n1 × n2` shape.
    pub mask: Option<Mask>,
    pub seed: u64,
}

impl Default for LowRankOptions {
    fn default() -> Self {
        Self {
            rank: 3,
            matching: MatchingMethod::Exact,
            signs: SignMode::Auto,
            rounding: Rounding::Scaled,
            mask: None,
            seed: 0,
        }
    }
}

/// `G − γ𝟙` on the padded dimension, shifted to be positive definite.
pub fn transformed_matrix(g: &Graph, gamma: f64) -> Result<DMatrix<f64>> {
    let n = g.n();
    let m = g.to_matrix() - DMatrix::from_element(n, n, gamma);
    Ok(psd_shift(&m)?.0)
}

struct Candidate {
    mapping: Assignment,
    objective: f64,
}

/// LowRankAlign.
pub fn low_rank_align(g1: &Graph, g2: &Graph, gamma: f64, opts: &LowRankOptions) -> Result<AlignmentResult> {
    if g1.is_directed() || g2.is_directed() {
        return Err(Error::InvalidParameter("low-rank alignment needs undirected graphs".into()));
    }
    if !(0.0..0.5).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma must lie in [0, 1/2), got {gamma}")));
    }
    let (n1, n2) = (g1.n(), g2.n());
    let n = n1.max(n2);
    if opts.rank == 0 || opts.rank > n {
        return Err(Error::InvalidParameter(format!("rank {} outside 1..={n}", opts.rank)));
    }
    let mask = match &opts.mask {
        Some(m) if m.n1() != n1 || m.n2() != n2 => {
            return Err(Error::DimensionMismatch {
                expected: n1 * n2,
                got: m.n1() * m.n2(),
            })
        }
        Some(m) => Some(m.padded(n, n)),
        None => None,
    };
    let m1 = transformed_matrix(&pad_to(g1, n)?, gamma)?;
    let m2 = transformed_matrix(&pad_to(g2, n)?, gamma)?;
    let e1 = top_k_eigs(&m1, opts.rank)?;
    let e2 = top_k_eigs(&m2, opts.rank)?;
    let k = opts.rank;
    let scale: Vec<f64> = match opts.rounding {
        Rounding::Scaled => (0..k).map(|i| e1.eigenvalues[i] * e2.eigenvalues[i]).collect(),
        Rounding::Projection => vec![1.0; k],
    };

    let evaluate = |signs: &[f64]| -> Result<Candidate> {
        let c = DVector::from_iterator(k, (0..k).map(|i| signs[i] * scale[i]));
        let w = &e1.eigenvectors * DMatrix::from_diagonal(&c) * e2.eigenvectors.transpose();
        let full = opts.matching.solve(&w, mask.as_ref())?;
        let pairs: Vec<_> = full.pairs.into_iter().filter(|&(i, j)| i < n1 && j < n2).collect();
        let mapping = Assignment::from_pairs(pairs, &w);
        let objective = generalized_objective(g1, g2, &mapping, gamma)?;
        Ok(Candidate { mapping, objective })
    };

    let mode = match opts.signs {
        SignMode::Auto if k <= EXHAUSTIVE_SIGN_LIMIT => SignMode::Exhaustive,
        SignMode::Auto => SignMode::LocalSearch,
        m => m,
    };
    let best = match mode {
        SignMode::AllPositive => evaluate(&vec![1.0; k])?,
        SignMode::Exhaustive => {
            if k > 30 {
                return Err(Error::InvalidParameter(format!("exhaustive sign search at rank {k}")));
            }
            let mut best: Option<Candidate> = None;
            for t in 0u64..(1u64 << k) {
                let signs: Vec<f64> = (0..k).map(|b| if t >> b & 1 == 0 { 1.0 } else { -1.0 }).collect();
                let cand = evaluate(&signs)?;
                if best.as_ref().is_none_or(|b| cand.objective > b.objective) {
                    best = Some(cand);
                }
            }
            best.expect("at least one sign vector")
        }
        SignMode::LocalSearch | SignMode::Auto => {
            let mut signs = vec![1.0; k];
            let mut best = evaluate(&signs)?;
            let mut improved = true;
            while improved {
                improved = false;
                for i in 0..k {
                    signs[i] = -signs[i];
                    let cand = evaluate(&signs)?;
                    if cand.objective > best.objective {
                        best = cand;
                        improved = true;
                    } else {
                        signs[i] = -signs[i];
                    }
                }
            }
            best
        }
    };
    AlignmentResult::new(g1, g2, best.mapping, Method::LowRankAlign, gamma, Some(k), opts.seed)
}

/// `ε² · Σᵢ σᵢ(M1)·σᵢ(M2)`.
pub fn rounding_gap_bound(m1: &DMatrix<f64>, m2: &DMatrix<f64>, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be non-negative, got {eps}")));
    }
    let s1 = symmetric_singular_values(m1)?;
    let s2 = symmetric_singular_values(m2)?;
    Ok(eps * eps * s1.iter().zip(&s2).map(|(a, b)| a * b).sum::<f64>())
}

/// Calls `f` on every permutation of `0..n` in lexicographic order.
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        f(&p);
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Maximiser of `Σ_{i,r} M1(i,r)·M2(π(i),π(r))` over permutations `π`,
/// the first in lexicographic order on ties.
pub fn brute_force_trace(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> Result<(Permutation, f64)> {
    let n = m1.nrows();
    if !m1.is_square() || m1.shape() != m2.shape() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m2.nrows(),
        });
    }
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::BruteForceLimit {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let a: Vec<f64> = (0..n * n).map(|t| m1[(t / n, t % n)]).collect();
    let b: Vec<f64> = (0..n * n).map(|t| m2[(t / n, t % n)]).collect();
    let mut best = f64::NEG_INFINITY;
    let mut arg = (0..n).collect::<Vec<_>>();
    for_each_permutation(n, |p| {
        let mut v = 0.0;
        for i in 0..n {
            let row = &a[i * n..(i + 1) * n];
            let brow = &b[p[i] * n..(p[i] + 1) * n];
            for r in 0..n {
                v += row[r] * brow[p[r]];
            }
        }
        if v > best {
            best = v;
            arg.copy_from_slice(p);
        }
    });
    Ok((Permutation::new(arg)?, best))
}

/// Exact maximiser of the generalized objective for equal-size graphs.
pub fn brute_force_qap(g1: &Graph, g2: &Graph, gamma: f64) -> Result<AlignmentResult> {
    if g1.n() != g2.n() {
        return Err(Error::DimensionMismatch {
            expected: g1.n(),
            got: g2.n(),
        });
    }
    let n = g1.n();
    let shift = DMatrix::from_element(n, n, gamma);
    let (perm, _) = brute_force_trace(&(g1.to_matrix() - &shift), &(g2.to_matrix() - &shift))?;
    let mapping = Assignment::unweighted(perm.pairs());
    AlignmentResult::new(g1, g2, mapping, Method::BruteForce, gamma, None, 0)
}

/// Both sides of the rounding-gap inequality on one instance.
#[derive(Debug, Clone)]
pub struct RoundingGapReport {
    /// `f(X*)`, the permutation optimum.
    pub f_opt: f64,
    /// `f̃(X*_lin)` around the chosen `X0`.
    pub f_tilde_lin: f64,
    /// `min_s ‖X* − X0(s)‖_op`.
    pub eps: f64,
    /// `ε² Σ σᵢ(M1)σᵢ(M2)`.
    pub bound: f64,
    /// Sign vector of the closest `X0`.
    pub signs: Vec<f64>,
    /// `Σ λᵢ(M1)λᵢ(M2)`.
    pub relaxed_value: f64,
}

impl RoundingGapReport {
    pub fn gap(&self) -> f64 {
        (self.f_opt - self.f_tilde_lin).abs()
    }
}

fn perm_matrix(p: &Permutation) -> DMatrix<f64> {
    let n = p.len();
    let mut x = DMatrix::zeros(n, n);
    for (i, j) in p.pairs() {
        x[(i, j)] = 1.0;
    }
    x
}

fn op_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

/// Evaluates the linearised rounding guarantee on symmetric `M1`, `M2`
/// with `n ≤ 10` by full enumeration of permutations and sign vectors.
pub fn rounding_gap_check(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> Result<RoundingGapReport> {
    let relax = orthogonal_relaxation(m1, m2)?;
    let (x_star_perm, f_opt) = brute_force_trace(m1, m2)?;
    let x_star = perm_matrix(&x_star_perm);
    let n = m1.nrows();

    let mut eps = f64::INFINITY;
    let mut best_signs = vec![1.0; n];
    for t in 0u64..(1u64 << n) {
        let signs: Vec<f64> = (0..n).map(|b| if t >> b & 1 == 0 { 1.0 } else { -1.0 }).collect();
        let d = op_norm(&(&x_star - relax.with_signs(&signs)));
        if d < eps {
            eps = d;
            best_signs = signs;
        }
    }
    let x0 = relax.with_signs(&best_signs);
    let w = m1 * &x0 * m2;
    let lin = hungarian_max_weight(&w, None)?;
    let mut x_lin = DMatrix::zeros(n, n);
    for &(i, j) in &lin.pairs {
        x_lin[(i, j)] = 1.0;
    }
    let base = (m1 * &x0 * m2 * x0.transpose()).trace();
    let f_tilde_lin = base + 2.0 * (m1 * &x0 * m2 * (&x_lin - &x0).transpose()).trace();
    Ok(RoundingGapReport {
        f_opt,
        f_tilde_lin,
        eps,
        bound: rounding_gap_bound(m1, m2, eps)?,
        signs: best_signs,
        relaxed_value: relax.value(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::apply_permutation;
    use crate::metrics::regularized_objective;
    use crate::randgen::{erdos_renyi, random_permutation, rng};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn path3() -> Graph {
        Graph::from_edges(3, false, &[(0, 1), (1, 2)]).unwrap()
    }

    fn cycle4() -> Graph {
        Graph::from_edges(4, false, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn permutations_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_permutation(3, |p| seen.push(p.to_vec()));
        assert_eq!(
            seen,
            vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]]
        );
        let mut count = 0;
        for_each_permutation(1, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn ea_on_path() {
        let s = ScoreScheme::new(4.0, 2.0, 1.0).unwrap();
        let g = path3();
        let r = eigen_align(&g, &g, &s, None, EigenAlignOptions::default()).unwrap();
        assert_eq!((r.counts.matches, r.counts.mismatches), (2, 0));
        let brute = brute_force_qap(&g, &g, s.gamma()).unwrap();
        assert_eq!(brute.counts.matches, 2);
        assert_abs_diff_eq!(r.objective, brute.objective, epsilon = 1e-12);
    }

    #[test]
    fn ea_on_edgeless() {
        let s = ScoreScheme::from_alpha(3.0, 0.01).unwrap();
        let g = Graph::empty(4, false);
        let r = eigen_align(&g, &g, &s, None, EigenAlignOptions::default()).unwrap();
        assert_eq!(r.mapping.len(), 4);
        assert_eq!((r.counts.matches, r.counts.mismatches, r.counts.neutrals), (0, 0, 6));
    }

    #[test]
    fn ea_restricted_and_directed() {
        let s = ScoreScheme::from_alpha(10.0, 1e-3).unwrap();
        let g1 = erdos_renyi(12, 0.3, 4).unwrap();
        let truth = random_permutation(12, 5);
        let g2 = apply_permutation(&g1, &truth).unwrap();
        let set = crate::randgen::sample_mapping_set(12, &truth, 3, 6).unwrap();
        let r = eigen_align(&g1, &g2, &s, Some(&set), EigenAlignOptions::default()).unwrap();
        assert!(r.mapping.pairs.iter().all(|&(i, j)| set.contains(i, j)));
        assert_eq!(r.mapping.len(), 12);

        // same answer through the implicit restricted operator
        let opts = EigenAlignOptions {
            dense_cap: 10,
            ..Default::default()
        };
        let r2 = eigen_align(&g1, &g2, &s, Some(&set), opts).unwrap();
        assert_eq!(r.mapping.pairs, r2.mapping.pairs);

        let d1 = Graph::from_edges(3, true, &[(0, 1), (1, 2)]).unwrap();
        let r = eigen_align(&d1, &d1, &s, None, EigenAlignOptions::default()).unwrap();
        assert!(r.counts.directed);
        assert_eq!(r.counts.total(), 6);
    }

    #[test]
    fn ea_reports_infeasible_restriction() {
        let s = ScoreScheme::from_alpha(3.0, 0.01).unwrap();
        let g = path3();
        let set = MappingSet::from_pairs(3, 3, vec![(0, 0), (1, 0), (2, 2)]).unwrap();
        assert!(matches!(
            eigen_align(&g, &g, &s, Some(&set), EigenAlignOptions::default()),
            Err(Error::InfeasibleMatching { .. })
        ));
    }

    #[test]
    fn lra_on_four_cycle() {
        let g = cycle4();
        let opts = LowRankOptions {
            rank: 3,
            ..Default::default()
        };
        let r = low_rank_align(&g, &g, 0.0, &opts).unwrap();
        assert_eq!((r.counts.matches, r.counts.mismatches), (4, 0));
        assert_eq!(brute_force_qap(&g, &g, 0.0).unwrap().counts.matches, 4);
    }

    #[test]
    fn lra_unequal_sizes_drops_padding() {
        let g1 = path3();
        let g2 = cycle4();
        let r = low_rank_align(&g1, &g2, 0.2, &LowRankOptions::default()).unwrap();
        assert_eq!(r.mapping.len(), 3);
        r.mapping.validate(3, 4).unwrap();
        assert_eq!(r.counts.matches, 2);
        let r = low_rank_align(&g2, &g1, 0.2, &LowRankOptions::default()).unwrap();
        assert_eq!(r.mapping.len(), 3);
        r.mapping.validate(4, 3).unwrap();
    }

    #[test]
    fn lra_parameter_errors() {
        let g = cycle4();
        let too_big = LowRankOptions {
            rank: 5,
            ..Default::default()
        };
        assert!(low_rank_align(&g, &g, 0.0, &too_big).is_err());
        assert!(low_rank_align(&g, &g, 0.5, &LowRankOptions::default()).is_err());
        let d = Graph::from_edges(2, true, &[(0, 1)]).unwrap();
        assert!(low_rank_align(&d, &d, 0.0, &LowRankOptions::default()).is_err());
    }

    #[test]
    fn lra_respects_mask() {
        let g = cycle4();
        let mut mask = Mask::full(4, 4);
        for j in 0..4 {
            if j != 2 {
                mask.forbid(0, j);
            }
        }
        let opts = LowRankOptions {
            mask: Some(mask),
            ..Default::default()
        };
        let r = low_rank_align(&g, &g, 0.0, &opts).unwrap();
        assert!(r.mapping.pairs.contains(&(0, 2)));
        assert_eq!(r.counts.matches, 4);
    }

    #[test]
    fn sign_modes_agree_on_small_rank() {
        let g1 = erdos_renyi(9, 0.4, 11).unwrap();
        let g2 = apply_permutation(&g1, &random_permutation(9, 12)).unwrap();
        let mk = |signs| LowRankOptions {
            rank: 3,
            signs,
            ..Default::default()
        };
        let ex = low_rank_align(&g1, &g2, 0.2, &mk(SignMode::Exhaustive)).unwrap();
        let ls = low_rank_align(&g1, &g2, 0.2, &mk(SignMode::LocalSearch)).unwrap();
        let ap = low_rank_align(&g1, &g2, 0.2, &mk(SignMode::AllPositive)).unwrap();
        assert!(ex.objective >= ls.objective);
        assert!(ex.objective >= ap.objective);
        let proj = LowRankOptions {
            rounding: Rounding::Projection,
            ..mk(SignMode::Exhaustive)
        };
        low_rank_align(&g1, &g2, 0.2, &proj).unwrap().mapping.validate(9, 9).unwrap();
    }

    #[test]
    fn relaxation_of_equal_matrices() {
        let g = erdos_renyi(6, 0.5, 2).unwrap();
        let m = transformed_matrix(&g, 0.1).unwrap();
        let relax = orthogonal_relaxation(&m, &m).unwrap();
        let eye = DMatrix::<f64>::identity(6, 6);
        assert!((&relax.x0 - &eye).amax() < 1e-8);
        let value = (&m * &relax.x0 * &m * relax.x0.transpose()).trace();
        let sum_sq: f64 = relax.spectrum1.eigenvalues.iter().map(|l| l * l).sum();
        assert_abs_diff_eq!(value, sum_sq, epsilon = 1e-8);
        let (_, best) = brute_force_trace(&m, &m).unwrap();
        assert_abs_diff_eq!(best, (&m * &m).trace(), epsilon = 1e-9);
        assert!(value >= best - 1e-9);
    }

    #[test]
    fn relaxation_of_diagonal_pair() {
        let m1 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let m2 = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        let r = orthogonal_relaxation(&m1, &m2).unwrap();
        assert!((r.x0 - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert_eq!(r.signs, vec![1.0, 1.0]);
    }

    #[test]
    fn relaxation_bounds_permutations() {
        let mut r = rng(8);
        let random_psd = |r: &mut crate::randgen::Rng| {
            let a = DMatrix::from_fn(5, 5, |_, _| r.gen_range(-1.0..1.0));
            &a * a.transpose()
        };
        for _ in 0..10 {
            let m1 = random_psd(&mut r);
            let m2 = random_psd(&mut r);
            let relax = orthogonal_relaxation(&m1, &m2).unwrap();
            let x0 = &relax.x0;
            assert!((x0 * x0.transpose() - DMatrix::identity(5, 5)).amax() < 1e-6);
            let value = (&m1 * x0 * &m2 * x0.transpose()).trace();
            assert_abs_diff_eq!(value, relax.value(), epsilon = 1e-8);
            let mut count = 0;
            for_each_permutation(5, |p| {
                count += 1;
                let x = perm_matrix(&Permutation::new(p.to_vec()).unwrap());
                assert!(value >= (&m1 * &x * &m2 * x.transpose()).trace() - 1e-9);
            });
            assert_eq!(count, 120);
        }
    }

    #[test]
    fn gap_bound_examples() {
        let eye = DMatrix::<f64>::identity(3, 3);
        assert_eq!(rounding_gap_bound(&eye, &eye, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(rounding_gap_bound(&eye, &eye, 0.5).unwrap(), 0.75, epsilon = 1e-12);
        assert!(rounding_gap_bound(&eye, &eye, -1.0).is_err());
    }

    #[test]
    fn gap_check_on_small_graphs() {
        for seed in 0..8 {
            let g1 = erdos_renyi(4, 0.5, seed).unwrap();
            let g2 = erdos_renyi(4, 0.5, seed + 100).unwrap();
            let m1 = transformed_matrix(&g1, 0.2).unwrap();
            let m2 = transformed_matrix(&g2, 0.2).unwrap();
            let rep = rounding_gap_check(&m1, &m2).unwrap();
            assert!(rep.gap() <= rep.bound * (1.0 + 1e-9) + 1e-9, "{rep:?}");
            assert!(rep.relaxed_value >= rep.f_opt - 1e-9);
        }
    }

    #[test]
    fn brute_force_examples() {
        let g = cycle4();
        let r = brute_force_qap(&g, &g, 0.0).unwrap();
        assert_abs_diff_eq!(r.objective, 2.0 * g.edge_count() as f64, epsilon = 1e-12);
        let one = Graph::empty(1, false);
        let r = brute_force_qap(&one, &one, 0.3).unwrap();
        assert_eq!(r.mapping.pairs, vec![(0, 0)]);
        let e = Graph::empty(4, false);
        let r = brute_force_qap(&e, &e, 0.2).unwrap();
        assert_eq!(r.mapping.pairs, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        let big = Graph::empty(11, false);
        assert!(matches!(brute_force_qap(&big, &big, 0.0), Err(Error::BruteForceLimit { n: 11, .. })));
        assert!(brute_force_qap(&g, &path3(), 0.0).is_err());
    }

    #[test]
    fn gap_closed_form_value() {
        let s = ScoreScheme::new(2.0, 1.0, 0.5).unwrap();
        let g = expected_objective_gap(0.1, 0.05, &s, crate::metrics::NoiseModel::One).unwrap();
        assert_abs_diff_eq!(g, 0.182, epsilon = 1e-12);
    }

    #[test]
    fn record_carries_method() {
        let g = cycle4();
        let r = brute_force_qap(&g, &g, 0.1).unwrap();
        let rec = r.to_record(Some(1.0), 0.5);
        assert_eq!(rec.method, "brute");
        assert_eq!(rec.matches, 4);
        assert_eq!(rec.gamma, 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn outputs_are_bijective_and_recount(seed in any::<u64>(), n in 2usize..=7, p in 0.1f64..0.9, gamma in 0.0f64..0.49) {
            let g1 = erdos_renyi(n, p, seed).unwrap();
            let g2 = erdos_renyi(n, p, seed ^ 0xff).unwrap();
            let lra = low_rank_align(&g1, &g2, gamma, &LowRankOptions { rank: 2, ..Default::default() }).unwrap();
            let s = ScoreScheme::from_alpha(4.0, 0.01).unwrap();
            let ea = eigen_align(&g1, &g2, &s, None, EigenAlignOptions::default()).unwrap();
            for r in [&lra, &ea] {
                r.mapping.validate(n, n).unwrap();
                prop_assert_eq!(r.mapping.len(), n);
                prop_assert_eq!(count_alignment(&g1, &g2, &r.mapping).unwrap(), r.counts);
            }
        }

        #[test]
        fn regularized_objective_non_increasing_in_gamma(seed in any::<u64>(), n1 in 2usize..=6, extra in 1usize..=3, lo in 0.0f64..0.49, step in 0.0f64..0.2) {
            let n2 = n1 + extra;
            let g1 = erdos_renyi(n1, 0.5, seed).unwrap();
            let g2 = erdos_renyi(n2, 0.5, seed ^ 3).unwrap();
            let cols = random_permutation(n2, seed ^ 4);
            let mapping = Assignment::unweighted((0..n1).map(|i| (i, cols.apply(i))).collect());
            let hi = (lo + step).min(0.499);
            let a = regularized_objective(&g1, &g2, &mapping, lo).unwrap();
            let b = regularized_objective(&g1, &g2, &mapping, hi).unwrap();
            prop_assert!(b <= a + 1e-12);
        }
    }
}
