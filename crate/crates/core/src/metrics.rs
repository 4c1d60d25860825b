//! Alignment counts, objectives, accuracy, and the closed-form quantities of
//! the expected alignment matrix on Erdős–Rényi inputs.
//!
//! Undirected counts are over unordered node pairs; directed counts are over
//! ordered pairs, so an inconsistent pair contributes one match and one
//! mismatch.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Permutation};
use crate::matching::Assignment;
use crate::score::ScoreScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignmentCounts {
    pub matches: u64,
    pub mismatches: u64,
    pub neutrals: u64,
    pub directed: bool,
}

impl AlignmentCounts {
    pub fn total(&self) -> u64 {
        self.matches + self.mismatches + self.neutrals
    }

    /// `(matches, mismatches, neutrals)` as ordered-pair trace values.
    pub fn trace_values(&self) -> (u64, u64, u64) {
        let f = if self.directed { 1 } else { 2 };
        (self.matches * f, self.mismatches * f, self.neutrals * f)
    }
}

fn mapped_pairs(g1: &Graph, g2: &Graph, mapping: &Assignment) -> Result<Vec<(usize, usize)>> {
    mapping.validate(g1.n(), g2.n())?;
    Ok(mapping.pairs.clone())
}

/// Match / mismatch / neutral counts of `mapping`.
pub fn count_alignment(g1: &Graph, g2: &Graph, mapping: &Assignment) -> Result<AlignmentCounts> {
    let pairs = mapped_pairs(g1, g2, mapping)?;
    let directed = g1.is_directed() || g2.is_directed();
    let mut c = AlignmentCounts {
        directed,
        ..Default::default()
    };
    for (a, &(i, j)) in pairs.iter().enumerate() {
        let others = if directed { &pairs[..] } else { &pairs[a + 1..] };
        for &(r, s) in others {
            if r == i {
                continue;
            }
            match (g1.has_edge(i, r), g2.has_edge(j, s)) {
                (true, true) => c.matches += 1,
                (false, false) => c.neutrals += 1,
                _ => c.mismatches += 1,
            }
        }
    }
    Ok(c)
}

/// `Σ (G1(i,r) − γ)(G2(π(i),π(r)) − γ)` over mapped `i, r`, diagonal
/// included. For undirected graphs this is `Tr((G1−γ𝟙) X (G2−γ𝟙) Xᵀ)`.
pub fn generalized_objective(g1: &Graph, g2: &Graph, mapping: &Assignment, gamma: f64) -> Result<f64> {
    let pairs = mapped_pairs(g1, g2, mapping)?;
    let mut t = 0.0;
    for &(i, j) in &pairs {
        for &(r, s) in &pairs {
            t += (g1.entry(i, r) - gamma) * (g2.entry(j, s) - gamma);
        }
    }
    Ok(t)
}

/// `Tr(G1XG2Xᵀ) − γ(Tr(G1X𝟙Xᵀ) + Tr(𝟙XG2Xᵀ))`: the generalized objective
/// minus its mapping-size constant `γ²m²`.
pub fn regularized_objective(g1: &Graph, g2: &Graph, mapping: &Assignment, gamma: f64) -> Result<f64> {
    let pairs = mapped_pairs(g1, g2, mapping)?;
    let mut t = 0.0;
    for &(i, j) in &pairs {
        for &(r, s) in &pairs {
            let (x, y) = (g1.entry(i, r), g2.entry(j, s));
            t += x * y - gamma * (x + y);
        }
    }
    Ok(t)
}

/// Sum of the alignment-matrix scores over ordered pairs of distinct mapped
/// pairs.
pub fn score_objective(g1: &Graph, g2: &Graph, mapping: &Assignment, s: &ScoreScheme) -> Result<f64> {
    let c = count_alignment(g1, g2, mapping)?;
    let (m, mm, n) = c.trace_values();
    Ok(s.s1() * m as f64 + s.s3() * mm as f64 + s.s2() * n as f64)
}

/// Fraction of mapped nodes `i` with `mapping(i) = truth(i)`; 0 for an empty
/// mapping.
pub fn node_accuracy(mapping: &Assignment, truth: &Permutation) -> f64 {
    if mapping.is_empty() {
        return 0.0;
    }
    let hits = mapping
        .pairs
        .iter()
        .filter(|&&(i, j)| i < truth.len() && truth.apply(i) == j)
        .count();
    hits as f64 / mapping.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    None,
    #[serde(rename = "I")]
    One,
    #[serde(rename = "II")]
    Two,
}

fn check_range(name: &str, v: f64, lo: f64, hi: f64, lo_open: bool) -> Result<()> {
    let lo_ok = if lo_open { v > lo } else { v >= lo };
    if !(lo_ok && v < hi) {
        let l = if lo_open { '(' } else { '[' };
        return Err(Error::InvalidParameter(format!("{name} = {v} outside {l}{lo}, {hi})")));
    }
    Ok(())
}

fn model_one_coefficients(p: f64, q: f64, s1: f64, s2: f64, s3: f64) -> (f64, f64) {
    let a = p * (1.0 - q) * s1 + (1.0 - p) * (1.0 - q) * s2 + q * s3;
    let b = (p * p * (1.0 - q) + p * q * (1.0 - p)) * s1
        + ((1.0 - p).powi(2) * (1.0 - q) + p * q * (1.0 - p)) * s2
        + (2.0 * p * (1.0 - p) * (1.0 - q) + 2.0 * p * p * q) * s3;
    (a, b)
}

fn model_two_coefficients(p: f64, p_e: f64, alpha: f64) -> (f64, f64) {
    let a = 1.0 - p * (1.0 + alpha * (p_e - 1.0) + p_e);
    let b = 1.0 - p * (2.0 + p_e) + p * p * (1.0 + alpha + 2.0 * p_e);
    (a, b)
}

/// Two-level `kn × kn` matrix: `a` between distinct true mappings, `b` for
/// any other off-diagonal pair, `diag` on the diagonal. True mappings are
/// the first `n` indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedAlignmentMatrix {
    pub a: f64,
    pub b: f64,
    pub diag: f64,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
}

impl ExpectedAlignmentMatrix {
    pub fn dim(&self) -> usize {
        self.n * self.k
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            if r == c {
                self.diag
            } else if r < n && c < n {
                self.a
            } else {
                self.b
            }
        })
    }

    pub fn mean_field(&self) -> Result<MeanFieldModel> {
        mean_field_ratio(self.a, self.b, self.n, self.k, self.eps)
    }
}

/// Expected alignment matrix of a restricted problem (`|R| = kn`) on
/// `G(n, p)` inputs under the `(α + ε, 1 + ε, ε)` scheme.
///
/// Model II drops `ε` from the off-diagonal classes.
#[allow(clippy::too_many_arguments)]
pub fn expected_alignment_matrix(
    alpha: f64,
    eps: f64,
    p: f64,
    p_e: f64,
    n: usize,
    k: usize,
    model: NoiseModel,
) -> Result<ExpectedAlignmentMatrix> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be non-negative, got {eps}")));
    }
    check_range("p", p, 0.0, 0.5, true)?;
    check_range("p_e", p_e, 0.0, 0.5, false)?;
    if n < 2 || k < 2 {
        return Err(Error::InvalidParameter(format!("need n ≥ 2 and k ≥ 2, got n={n}, k={k}")));
    }
    let (a, b) = match model {
        NoiseModel::None => ((alpha - 1.0) * p + 1.0 + eps, (alpha + 1.0) * p * p - 2.0 * p + 1.0 + eps),
        NoiseModel::One => model_one_coefficients(p, p_e, alpha + eps, 1.0 + eps, eps),
        NoiseModel::Two => model_two_coefficients(p, p_e, alpha),
    };
    Ok(ExpectedAlignmentMatrix {
        a,
        b,
        diag: 1.0 + eps,
        n,
        k,
        eps,
    })
}

/// Closed-form eigen-structure of an [`ExpectedAlignmentMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFieldModel {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    /// Largest root of `(λ − λa)(λ − λb) = b²(k−1)n²`.
    pub lambda: f64,
    /// `v1/v2 = (λ − λb) / (bn)`, exact at this `n`.
    pub ratio: f64,
    /// `λ/(bn) − k + 1`; differs from `ratio` by `(b − 1 − ε)/(bn)`.
    pub ratio_large_n: f64,
    /// Limit of `ratio` as `n → ∞`.
    pub ratio_asymptotic: f64,
}

pub fn mean_field_ratio(a: f64, b: f64, n: usize, k: usize, eps: f64) -> Result<MeanFieldModel> {
    if !(b > 0.0 && a > b) {
        return Err(Error::InvalidParameter(format!("need a > b > 0, got a={a}, b={b}")));
    }
    if k < 2 || n < 1 {
        return Err(Error::InvalidParameter(format!("need k ≥ 2 and n ≥ 1, got k={k}, n={n}")));
    }
    let (nf, kf) = (n as f64, k as f64);
    let lambda_a = (nf - 1.0) * a + 1.0 + eps;
    let lambda_b = ((kf - 1.0) * nf - 1.0) * b + 1.0 + eps;
    let disc = (lambda_a - lambda_b).powi(2) + 4.0 * (kf - 1.0) * b * b * nf * nf;
    let lambda = 0.5 * (lambda_a + lambda_b + disc.sqrt());
    let ratio = (lambda - lambda_b) / (b * nf);
    let ratio_large_n = lambda / (b * nf) - kf + 1.0;
    let r = a / b - kf + 1.0;
    let ratio_asymptotic = 0.5 * (r + (r * r + 4.0 * kf - 4.0).sqrt());
    Ok(MeanFieldModel {
        a,
        b,
        n,
        k,
        eps,
        lambda_a,
        lambda_b,
        lambda,
        ratio,
        ratio_large_n,
        ratio_asymptotic,
    })
}

/// Per-pair expected objective advantage of the true mapping: `a′ − b′`
/// (model I, flip probability `p_e`) or `a″ − b″` (model II).
///
/// Model II is expressed through `α = (s1 − s3)/(s2 − s3)` and scaled by
/// `s2 − s3`, which is 1 on the `(α + ε, 1 + ε, ε)` scheme.
pub fn expected_objective_gap(p: f64, p_e: f64, s: &ScoreScheme, model: NoiseModel) -> Result<f64> {
    check_range("p", p, 0.0, 0.5, true)?;
    check_range("p_e", p_e, 0.0, 0.5, false)?;
    match model {
        NoiseModel::One => Ok(p * (1.0 - p) * (1.0 - 2.0 * p_e) * s.curvature() + p_e * (1.0 - 2.0 * p) * s.s3()),
        NoiseModel::Two => {
            let alpha = (s.s1() - s.s3()) / (s.s2() - s.s3());
            let gap = p * ((1.0 - p - p_e) * (1.0 + alpha) + p_e * (1.0 - 2.0 * p));
            Ok((s.s2() - s.s3()) * gap)
        }
        NoiseModel::None => Ok(p * (1.0 - p) * s.curvature()),
    }
}

/// Flat per-run record shared by the CLI outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub method: String,
    pub gamma: f64,
    pub seed: u64,
    pub matches: u64,
    pub mismatches: u64,
    pub neutrals: u64,
    pub objective: f64,
    pub accuracy: Option<f64>,
    pub wall_ms: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randgen::{erdos_renyi, random_permutation};
    use crate::spectral::{leading_eigenvector, PowerOptions};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, false, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn identity(n: usize) -> Assignment {
        Assignment::unweighted((0..n).map(|i| (i, i)).collect())
    }

    #[test]
    fn counts_examples() {
        let t = triangle();
        let c = count_alignment(&t, &t, &identity(3)).unwrap();
        assert_eq!((c.matches, c.mismatches, c.neutrals), (3, 0, 0));

        let e = Graph::from_edges(3, false, &[(0, 1)]).unwrap();
        let z = Graph::empty(3, false);
        let c = count_alignment(&e, &z, &identity(3)).unwrap();
        assert_eq!((c.matches, c.mismatches, c.neutrals), (0, 1, 2));

        let c = count_alignment(&Graph::empty(6, false), &Graph::empty(6, false), &identity(6)).unwrap();
        assert_eq!((c.matches, c.mismatches, c.neutrals), (0, 0, 15));
        assert_eq!(c.trace_values(), (0, 0, 30));
    }

    #[test]
    fn counts_reject_non_injective() {
        let t = triangle();
        let bad = Assignment::unweighted(vec![(0, 0), (1, 0)]);
        assert!(matches!(count_alignment(&t, &t, &bad), Err(Error::NotOneToOne { .. })));
    }

    #[test]
    fn directed_inconsistent_pair_counts_twice() {
        let g1 = Graph::from_edges(2, true, &[(0, 1)]).unwrap();
        let g2 = Graph::from_edges(2, true, &[(0, 1), (1, 0)]).unwrap();
        let c = count_alignment(&g1, &g2, &identity(2)).unwrap();
        assert_eq!((c.matches, c.mismatches, c.neutrals), (1, 1, 0));
        assert_eq!(c.total(), 2);
    }

    #[test]
    fn objective_examples() {
        let t = triangle();
        assert_abs_diff_eq!(generalized_objective(&t, &t, &identity(3), 0.0).unwrap(), 6.0);
        let z = Graph::empty(3, false);
        assert_eq!(generalized_objective(&t, &z, &identity(3), 0.0).unwrap(), 0.0);
        // 6 ordered edge pairs at 0.75² plus 3 diagonal terms at 0.25²
        assert_abs_diff_eq!(
            generalized_objective(&t, &t, &identity(3), 0.25).unwrap(),
            6.0 * 0.5625 + 3.0 * 0.0625,
            epsilon = 1e-12
        );
    }

    #[test]
    fn objective_equals_trace_form() {
        let g1 = erdos_renyi(7, 0.4, 1).unwrap();
        let g2 = erdos_renyi(7, 0.4, 2).unwrap();
        let p = random_permutation(7, 3);
        let mapping = Assignment::unweighted(p.pairs());
        let gamma = 0.3;
        let mut x = DMatrix::zeros(7, 7);
        for &(i, j) in &mapping.pairs {
            x[(i, j)] = 1.0;
        }
        let ones = DMatrix::from_element(7, 7, gamma);
        let m1 = g1.to_matrix() - &ones;
        let m2 = g2.to_matrix() - &ones;
        let trace = (&m1 * &x * &m2 * x.transpose()).trace();
        assert_abs_diff_eq!(generalized_objective(&g1, &g2, &mapping, gamma).unwrap(), trace, epsilon = 1e-10);
    }

    #[test]
    fn accuracy_examples() {
        let truth = Permutation::new(vec![1, 0, 3, 2]).unwrap();
        assert_eq!(node_accuracy(&Assignment::unweighted(truth.pairs()), &truth), 1.0);
        let disjoint = Assignment::unweighted(vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert_eq!(node_accuracy(&disjoint, &truth), 0.0);
        let half = Assignment::unweighted(vec![(0, 1), (1, 0), (2, 2), (3, 3)]);
        assert_eq!(node_accuracy(&half, &truth), 0.5);
        assert_eq!(node_accuracy(&Assignment::unweighted(vec![]), &truth), 0.0);
    }

    #[test]
    fn model_none_coefficients() {
        let m = expected_alignment_matrix(3.0, 0.0, 0.1, 0.0, 10, 2, NoiseModel::None).unwrap();
        assert_abs_diff_eq!(m.a, 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(m.b, 0.84, epsilon = 1e-12);
    }

    #[test]
    fn model_one_without_noise_is_model_none() {
        for &(alpha, eps, p) in &[(3.0, 0.0, 0.1), (10.0, 0.01, 0.3), (2.0, 0.5, 0.45)] {
            let none = expected_alignment_matrix(alpha, eps, p, 0.0, 10, 3, NoiseModel::None).unwrap();
            let one = expected_alignment_matrix(alpha, eps, p, 0.0, 10, 3, NoiseModel::One).unwrap();
            assert_abs_diff_eq!(none.a, one.a, epsilon = 1e-12);
            assert_abs_diff_eq!(none.b, one.b, epsilon = 1e-12);
        }
    }

    #[test]
    fn model_two_coefficients_example() {
        let m = expected_alignment_matrix(3.0, 0.0, 0.1, 0.05, 10, 2, NoiseModel::Two).unwrap();
        assert_abs_diff_eq!(m.a, 1.18, epsilon = 1e-12);
        assert_abs_diff_eq!(m.b, 0.836, epsilon = 1e-12);
        // a″ − b″ closed form agrees with the two coefficients
        let s = ScoreScheme::from_alpha(3.0, 1e-12).unwrap();
        let gap = expected_objective_gap(0.1, 0.05, &s, NoiseModel::Two).unwrap();
        assert_abs_diff_eq!(gap, m.a - m.b, epsilon = 1e-9);
    }

    #[test]
    fn model_two_true_block_from_probabilities() {
        // a″ as an expectation over edge states, with p_e2 = p·p_e/(1−p)
        for &(alpha, p, pe) in &[(3.0, 0.1, 0.05), (10.0, 0.3, 0.2), (2.0, 0.45, 0.4)] {
            let pe2 = p * pe / (1.0 - p);
            let a = p * (1.0 - pe) * alpha + (1.0 - p) * (1.0 - pe2);
            let m = expected_alignment_matrix(alpha, 0.0, p, pe, 10, 2, NoiseModel::Two).unwrap();
            assert_abs_diff_eq!(m.a, a, epsilon = 1e-12);
        }
    }

    #[test]
    fn expected_matrix_range_checks() {
        assert!(expected_alignment_matrix(3.0, 0.0, 0.6, 0.0, 10, 2, NoiseModel::None).is_err());
        assert!(expected_alignment_matrix(3.0, 0.0, 0.1, 0.5, 10, 2, NoiseModel::One).is_err());
        assert!(expected_alignment_matrix(1.0, 0.0, 0.1, 0.0, 10, 2, NoiseModel::None).is_err());
        assert!(expected_alignment_matrix(3.0, 0.0, 0.1, 0.0, 10, 1, NoiseModel::None).is_err());
    }

    #[test]
    fn gap_examples() {
        let s = ScoreScheme::new(2.0, 1.0, 0.5).unwrap();
        let g = expected_objective_gap(0.1, 0.05, &s, NoiseModel::One).unwrap();
        assert_abs_diff_eq!(g, 0.182, epsilon = 1e-12);
        let g0 = expected_objective_gap(0.2, 0.0, &s, NoiseModel::One).unwrap();
        assert_abs_diff_eq!(g0, 0.2 * 0.8 * 2.0, epsilon = 1e-12);
        assert!(expected_objective_gap(0.5, 0.0, &s, NoiseModel::One).is_err());
        assert!(expected_objective_gap(0.1, -0.1, &s, NoiseModel::Two).is_err());
    }

    #[test]
    fn gap_matches_coefficient_difference() {
        let s = ScoreScheme::new(3.0, 1.2, 0.4).unwrap();
        for &(p, q) in &[(0.1, 0.05), (0.3, 0.2), (0.45, 0.49)] {
            let (a, b) = model_one_coefficients(p, q, s.s1(), s.s2(), s.s3());
            let g = expected_objective_gap(p, q, &s, NoiseModel::One).unwrap();
            assert_abs_diff_eq!(g, a - b, epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_field_asymptotic_example() {
        let m = mean_field_ratio(1.2, 0.84, 200, 2, 0.0).unwrap();
        let r: f64 = 1.2 / 0.84 - 1.0;
        let expected = 0.5 * (r + (r * r + 4.0).sqrt());
        assert_abs_diff_eq!(m.ratio_asymptotic, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(m.ratio_asymptotic, 1.23699, epsilon = 1e-5);
        assert!(m.lambda > m.lambda_a.max(m.lambda_b));
        assert!(m.ratio > 1.0);
        assert!((m.ratio - m.ratio_asymptotic).abs() / m.ratio_asymptotic < 0.02);
        assert_abs_diff_eq!(m.ratio - m.ratio_large_n, (0.84 - 1.0) / (0.84 * 200.0), epsilon = 1e-12);
        assert!(mean_field_ratio(0.84, 0.84, 200, 2, 0.0).is_err());
    }

    #[test]
    fn mean_field_ratio_tends_to_one_at_boundary() {
        let b = 1.0;
        let mut last = f64::INFINITY;
        for delta in [1e-1, 1e-2, 1e-3, 1e-4] {
            let m = mean_field_ratio(b * (1.0 + delta * 3.0), b, 100, 3, 0.0).unwrap();
            assert!(m.ratio_asymptotic > 1.0 && m.ratio_asymptotic < last);
            last = m.ratio_asymptotic;
        }
        assert!(last - 1.0 < 1e-3);
    }

    #[test]
    fn leading_eigenvalue_of_expected_matrix() {
        let e = ExpectedAlignmentMatrix {
            a: 1.2,
            b: 0.84,
            diag: 1.0,
            n: 20,
            k: 2,
            eps: 0.0,
        };
        let pair = leading_eigenvector(&e.to_dense(), PowerOptions { tol: 1e-13, ..Default::default() }).unwrap();
        let mf = e.mean_field().unwrap();
        assert_abs_diff_eq!(pair.value, mf.lambda, epsilon = 1e-8);
        let v1 = pair.vector[0];
        let v2 = pair.vector[20];
        assert_abs_diff_eq!(v1 / v2, mf.ratio, epsilon = 1e-8);
    }

    #[test]
    fn true_block_dominates_on_grid() {
        for &p in &[0.05, 0.2, 0.4] {
            for &alpha in &[2.0, 5.0] {
                for &pe in &[0.0, 0.2] {
                    for model in [NoiseModel::None, NoiseModel::One, NoiseModel::Two] {
                        let e = expected_alignment_matrix(alpha, 1e-3, p, pe, 15, 3, model).unwrap();
                        let v = leading_eigenvector(&e.to_dense(), PowerOptions::default()).unwrap().vector;
                        let min_true = v[..15].iter().copied().fold(f64::INFINITY, f64::min);
                        let max_false = v[15..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        assert!(min_true > max_false, "p={p} alpha={alpha} pe={pe} {model:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn a_exceeds_b_noiseless() {
        for i in 1..50 {
            let p = i as f64 / 100.0;
            for alpha in [1.001, 1.5, 2.0, 10.0, 100.0] {
                let e = expected_alignment_matrix(alpha, 0.0, p, 0.0, 2, 2, NoiseModel::None).unwrap();
                assert!(e.a > e.b);
            }
        }
    }

    #[test]
    fn record_serializes_flat() {
        let r = MetricsRecord {
            method: "lra".into(),
            gamma: 0.2,
            seed: 3,
            matches: 10,
            mismatches: 1,
            neutrals: 5,
            objective: 1.5,
            accuracy: Some(1.0),
            wall_ms: 2.0,
        };
        let text = serde_json::to_string(&r).unwrap();
        let keys = ["method", "gamma", "seed", "matches", "mismatches", "neutrals", "objective", "accuracy", "wall_ms"];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
        let back: MetricsRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    fn arb_instance() -> impl Strategy<Value = (u64, usize, usize, usize, f64)> {
        (any::<u64>(), 1usize..=7, 1usize..=7, 0usize..=7, 0.05f64..0.95)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn categories_sum_to_pairs((seed, n1, n2, m, p) in arb_instance()) {
            let g1 = erdos_renyi(n1, p, seed).unwrap();
            let g2 = erdos_renyi(n2, p, seed ^ 1).unwrap();
            let m = m.min(n1).min(n2);
            let cols = random_permutation(n2, seed ^ 2);
            let rows = random_permutation(n1, seed ^ 3);
            let mapping = Assignment::unweighted((0..m).map(|t| (rows.apply(t), cols.apply(t))).collect());
            let c = count_alignment(&g1, &g2, &mapping).unwrap();
            prop_assert_eq!(c.total() as usize, m * m.saturating_sub(1) / 2);
        }

        #[test]
        fn objective_matches_score_form((seed, n1, n2, m, p) in arb_instance(), s2 in 0.2f64..1.0, d1 in 0.01f64..2.0, d3 in 0.01f64..0.19) {
            let s = ScoreScheme::new(s2 + d1, s2, s2 - d3).unwrap();
            let g1 = erdos_renyi(n1, p, seed).unwrap();
            let g2 = erdos_renyi(n2, p, seed ^ 7).unwrap();
            let m = m.min(n1).min(n2);
            let cols = random_permutation(n2, seed ^ 5);
            let mapping = Assignment::unweighted((0..m).map(|t| (t, cols.apply(t))).collect());
            let gamma = s.gamma();
            let t = generalized_objective(&g1, &g2, &mapping, gamma).unwrap();
            let score = score_objective(&g1, &g2, &mapping, &s).unwrap();
            let mf = m as f64;
            let via_scores = (score - s.s2() * mf * (mf - 1.0)) / s.curvature() + mf * mf * gamma * gamma;
            prop_assert!((t - via_scores).abs() <= 1e-9 * t.abs().max(1.0));
        }

        #[test]
        fn regularized_is_generalized_minus_constant((seed, n1, n2, m, p) in arb_instance(), gamma in 0.0f64..0.5) {
            let g1 = erdos_renyi(n1, p, seed).unwrap();
            let g2 = erdos_renyi(n2, p, seed ^ 9).unwrap();
            let m = m.min(n1).min(n2);
            let mapping = Assignment::unweighted((0..m).map(|t| (t, t)).collect());
            let t = generalized_objective(&g1, &g2, &mapping, gamma).unwrap();
            let r = regularized_objective(&g1, &g2, &mapping, gamma).unwrap();
            prop_assert!((t - r - gamma * gamma * (m * m) as f64).abs() < 1e-9);
        }

        #[test]
        fn gap_positive_on_valid_range(p in 0.001f64..0.499, q in 0.0f64..0.499, alpha in 1.01f64..50.0) {
            let s = ScoreScheme::from_alpha(alpha, 1e-3).unwrap();
            prop_assert!(expected_objective_gap(p, q, &s, NoiseModel::One).unwrap() > 0.0);
            prop_assert!(expected_objective_gap(p, q, &s, NoiseModel::Two).unwrap() > 0.0);
        }
    }
}
