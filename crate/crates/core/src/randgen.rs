//! Seeded random graph generators and edge-noise models.
//!
//! Every function takes a `u64` seed and builds its own [`Rng`]
//! (`ChaCha8Rng::seed_from_u64`, rand_chacha 0.3). Pairs are visited in
//! row-major `i < j` order with exactly one uniform draw per pair, so the
//! output is a pure function of the arguments.

use std::collections::HashSet;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Permutation};
use crate::score::MappingSet;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent sub-seed for a named stream (splitmix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {p} is not a probability"
        )));
    }
    Ok(())
}

/// Noise parameters for the two perturbation models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Density of the clean graph.
    pub p: f64,
    /// Flip (model I) or deletion (model II) probability.
    pub p_e: f64,
    /// Insertion probability for non-edges under model II.
    pub p_e2: f64,
}

impl NoiseParams {
    /// Model II parameters: `p_e2 = p·p_e / (1 − p)` keeps the expected density at `p`.
    pub fn model_two(p: f64, p_e: f64) -> Result<Self> {
        check_prob("p", p)?;
        check_prob("p_e", p_e)?;
        if p >= 1.0 {
            return Err(Error::InvalidParameter(
                "model II needs p < 1".to_string(),
            ));
        }
        let p_e2 = p * p_e / (1.0 - p);
        if p_e2 > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "insertion probability p_e2 = {p_e2} exceeds 1"
            )));
        }
        Ok(Self { p, p_e, p_e2 })
    }
}

/// G(n, p): each unordered pair independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    check_prob("p", p)?;
    let mut rng = rng(seed);
    let mut g = Graph::empty(n, false);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                g.set(i, j, true);
            }
        }
    }
    Ok(g)
}

/// Block index of every node for contiguous blocks of the given sizes.
pub fn block_labels(block_sizes: &[usize]) -> Vec<usize> {
    block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect()
}

/// Stochastic block model with contiguous blocks.
///
/// With a single block this draws exactly the same graph as
/// [`erdos_renyi`] for the same seed.
pub fn stochastic_block_model(
    block_sizes: &[usize],
    density: &[Vec<f64>],
    seed: u64,
) -> Result<Graph> {
    let b = block_sizes.len();
    if density.len() != b || density.iter().any(|row| row.len() != b) {
        return Err(Error::InvalidParameter(format!(
            "density matrix must be {b}x{b}"
        )));
    }
    for (i, row) in density.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            check_prob("density", d)?;
            if d != density[j][i] {
                return Err(Error::InvalidParameter(format!(
                    "density matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let labels = block_labels(block_sizes);
    let n = labels.len();
    let mut rng = rng(seed);
    let mut g = Graph::empty(n, false);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < density[labels[i]][labels[j]] {
                g.set(i, j, true);
            }
        }
    }
    Ok(g)
}

const REGULAR_RESTARTS: usize = 100_000;

/// Random `d`-regular simple graph from the pairing model.
///
/// Stubs are shuffled and paired; pairs that would form a loop or a
/// repeated edge go back into the pool for the next round. When no
/// admissible pair is left in the pool the attempt restarts from scratch.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if (n * d) % 2 == 1 || (d > 0 && d >= n) {
        return Err(Error::InvalidParameter(format!(
            "no simple {d}-regular graph on {n} nodes"
        )));
    }
    let mut rng = rng(seed);
    if d == 0 {
        return Ok(Graph::empty(n, false));
    }
    'attempt: for _ in 0..REGULAR_RESTARTS {
        let mut g = Graph::empty(n, false);
        let mut stubs: Vec<usize> = (0..n).flat_map(|u| std::iter::repeat_n(u, d)).collect();
        while !stubs.is_empty() {
            stubs.shuffle(&mut rng);
            let mut leftover = Vec::new();
            for pair in stubs.chunks_exact(2) {
                let (u, v) = (pair[0], pair[1]);
                if u != v && !g.has_edge(u, v) {
                    g.set(u, v, true);
                } else {
                    leftover.extend_from_slice(pair);
                }
            }
            if leftover.len() == stubs.len() && !has_admissible_pair(&g, &leftover) {
                continue 'attempt;
            }
            stubs = leftover;
        }
        return Ok(g);
    }
    Err(Error::InvalidParameter(format!(
        "pairing model failed for n = {n}, d = {d}"
    )))
}

fn has_admissible_pair(g: &Graph, stubs: &[usize]) -> bool {
    let nodes: HashSet<usize> = stubs.iter().copied().collect();
    nodes
        .iter()
        .any(|&u| nodes.iter().any(|&v| u != v && !g.has_edge(u, v)))
}

/// Preferential attachment.
///
/// Starts from a G(n0, 1/2) seed graph, then adds nodes one at a time, each
/// joined to `m` distinct existing nodes drawn without replacement with
/// probability proportional to their degree at the start of the step
/// (uniform over the remaining candidates when their degrees are all zero).
pub fn power_law(n: usize, m: usize, n0: usize, seed: u64) -> Result<Graph> {
    if m == 0 || n0 < m || n < n0 {
        return Err(Error::InvalidParameter(format!(
            "power law needs n >= n0 >= m >= 1 (n = {n}, n0 = {n0}, m = {m})"
        )));
    }
    let mut rng = rng(seed);
    let mut g = Graph::empty(n, false);
    let mut degree = vec![0usize; n];
    for i in 0..n0 {
        for j in i + 1..n0 {
            if rng.gen::<f64>() < 0.5 {
                g.set(i, j, true);
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }
    for new in n0..n {
        if m > new {
            return Err(Error::InvalidParameter(format!(
                "cannot attach {m} edges with only {new} existing nodes"
            )));
        }
        let mut candidates: Vec<usize> = (0..new).collect();
        let mut targets = Vec::with_capacity(m);
        for _ in 0..m {
            let total: usize = candidates.iter().map(|&c| degree[c]).sum();
            let pick = if total == 0 {
                rng.gen_range(0..candidates.len())
            } else {
                let mut r = rng.gen_range(0..total);
                let mut chosen = candidates.len() - 1;
                for (idx, &c) in candidates.iter().enumerate() {
                    if r < degree[c] {
                        chosen = idx;
                        break;
                    }
                    r -= degree[c];
                }
                chosen
            };
            targets.push(candidates.remove(pick));
        }
        for t in targets {
            g.set(new, t, true);
            degree[new] += 1;
            degree[t] += 1;
        }
    }
    Ok(g)
}

fn require_undirected(g: &Graph) -> Result<()> {
    if g.is_directed() {
        return Err(Error::InvalidParameter(
            "noise models are defined for undirected graphs".into(),
        ));
    }
    Ok(())
}

/// Model I: every unordered pair flips independently with probability `p_e`.
pub fn noise_model_one(g: &Graph, p_e: f64, seed: u64) -> Result<Graph> {
    require_undirected(g)?;
    check_prob("p_e", p_e)?;
    let mut rng = rng(seed);
    let mut out = g.clone();
    let n = g.n();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p_e {
                out.set(i, j, !g.has_edge(i, j));
            }
        }
    }
    Ok(out)
}

/// Model II: edges are deleted with probability `p_e`, non-edges inserted
/// with probability `p·p_e / (1 − p)`.
pub fn noise_model_two(g: &Graph, p_e: f64, p: f64, seed: u64) -> Result<Graph> {
    require_undirected(g)?;
    let params = NoiseParams::model_two(p, p_e)?;
    let mut rng = rng(seed);
    let mut out = g.clone();
    let n = g.n();
    for i in 0..n {
        for j in i + 1..n {
            let u = rng.gen::<f64>();
            if g.has_edge(i, j) {
                if u < params.p_e {
                    out.set(i, j, false);
                }
            } else if u < params.p_e2 {
                out.set(i, j, true);
            }
        }
    }
    Ok(out)
}

/// Uniformly random permutation (Fisher–Yates).
pub fn random_permutation(n: usize, seed: u64) -> Permutation {
    let mut rng = rng(seed);
    let mut map: Vec<usize> = (0..n).collect();
    map.shuffle(&mut rng);
    Permutation::new(map).expect("shuffle yields a permutation")
}

/// Restricted mapping set of size `k·n` containing every true pair
/// `(i, truth(i))`; the other `(k − 1)·n` pairs are drawn uniformly without
/// replacement from the false pairs.
pub fn sample_mapping_set(n: usize, truth: &Permutation, k: usize, seed: u64) -> Result<MappingSet> {
    if truth.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: truth.len(),
        });
    }
    if k == 0 || (k - 1) * n > n * n - n {
        return Err(Error::InvalidParameter(format!(
            "expansion factor k = {k} infeasible for n = {n}"
        )));
    }
    let mut rng = rng(seed);
    let extra = (k - 1) * n;
    let false_count = n * n - n;
    let mut pairs: Vec<(usize, usize)> = truth.pairs();
    if extra > 0 {
        // false pair number f: row f / (n-1), skipping the true column
        for f in index::sample(&mut rng, false_count, extra).into_iter() {
            let i = f / (n - 1);
            let mut j = f % (n - 1);
            if j >= truth.apply(i) {
                j += 1;
            }
            pairs.push((i, j));
        }
    }
    pairs.sort_by_key(|&(i, j)| (j, i));
    MappingSet::from_pairs(n, n, pairs)
}
