//! Experiment configuration, instance generation and parameter sweeps.

use std::collections::HashSet;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use specalign::align::{
    brute_force_qap, eigen_align, low_rank_align, AlignmentResult, EigenAlignOptions, LowRankOptions,
    MatchingMethod, SignMode,
};
use specalign::graph::apply_permutation;
use specalign::metrics::{count_alignment, node_accuracy, AlignmentCounts, MetricsRecord};
use specalign::randgen::{
    derive_seed, erdos_renyi, noise_model_one, noise_model_two, power_law, random_permutation, random_regular,
    sample_mapping_set, stochastic_block_model,
};
use specalign::spectral::PowerOptions;
use specalign::{Assignment, Graph, Permutation, ScoreScheme};

/// Environment variable replacing the configured seed list.
pub const SEED_ENV: &str = "SPECALIGN_SEED";

pub const DEFAULT_EPS: f64 = 1e-3;

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_rank() -> usize {
    3
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Er { n: usize, p: f64 },
    /// Contiguous blocks; `density[a][b]` is the edge probability between
    /// blocks `a` and `b`.
    Sbm { sizes: Vec<usize>, density: Vec<Vec<f64>> },
    Regular { n: usize, d: usize },
    Powerlaw { n: usize, m: usize, n0: usize },
}

impl GraphSpec {
    pub fn generate(&self, seed: u64) -> Result<Graph> {
        Ok(match self {
            GraphSpec::Er { n, p } => erdos_renyi(*n, *p, seed)?,
            GraphSpec::Sbm { sizes, density } => stochastic_block_model(sizes, density, seed)?,
            GraphSpec::Regular { n, d } => random_regular(*n, *d, seed)?,
            GraphSpec::Powerlaw { n, m, n0 } => power_law(*n, *m, *n0, seed)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    None,
    /// Every pair flips with probability `pe`.
    Model1 { pe: f64 },
    /// Edges deleted with probability `pe`, non-edges inserted so the
    /// expected density stays at `p` (the density of `G1` when absent).
    Model2 {
        pe: f64,
        #[serde(default)]
        p: Option<f64>,
    },
}

impl NoiseSpec {
    pub fn apply(&self, g: &Graph, seed: u64) -> Result<Graph> {
        Ok(match *self {
            NoiseSpec::None => g.clone(),
            NoiseSpec::Model1 { pe } => noise_model_one(g, pe, seed)?,
            NoiseSpec::Model2 { pe, p } => noise_model_two(g, pe, p.unwrap_or_else(|| g.density()), seed)?,
        })
    }
}

/// How `(G1, G2)` is drawn for a seed.
///
/// With `g2` absent, `G2 = P·noise(G1)·Pᵀ` for a random permutation `P`
/// (identity when `permute` is false) and `P` is the ground truth.
/// With `g2` present both graphs are drawn independently and there is no
/// ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub g1: GraphSpec,
    #[serde(default)]
    pub g2: Option<GraphSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_true")]
    pub permute: bool,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub g1: Graph,
    pub g2: Graph,
    pub truth: Option<Permutation>,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn build(&self, seed: u64) -> Result<Instance> {
        let g1 = self.g1.generate(derive_seed(seed, 0))?;
        if let Some(spec) = &self.g2 {
            if self.noise != NoiseSpec::None {
                bail!("noise applies only when G2 is derived from G1");
            }
            let g2 = spec.generate(derive_seed(seed, 1))?;
            return Ok(Instance {
                g1,
                g2,
                truth: None,
                seed,
            });
        }
        let noisy = self.noise.apply(&g1, derive_seed(seed, 1))?;
        let truth = if self.permute {
            random_permutation(g1.n(), derive_seed(seed, 2))
        } else {
            Permutation::identity(g1.n())
        };
        let g2 = apply_permutation(&noisy, &truth)?;
        Ok(Instance {
            g1,
            g2,
            truth: Some(truth),
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum MethodSpec {
    /// EigenAlign with the `(α + ε, 1 + ε, ε)` scheme, one cell per entry of
    /// `gammas` (`α = 1/γ − 1`) and of `alphas`.
    Ea {
        #[serde(default)]
        gammas: Vec<f64>,
        #[serde(default)]
        alphas: Vec<f64>,
        #[serde(default = "default_eps")]
        eps: f64,
        /// Restrict to `k·n` mapping pairs containing the truth.
        #[serde(default)]
        restrict_k: Option<usize>,
        #[serde(default)]
        matching: MatchingMethod,
    },
    Lra {
        gammas: Vec<f64>,
        #[serde(default = "default_rank")]
        rank: usize,
        #[serde(default)]
        matching: MatchingMethod,
        #[serde(default)]
        signs: SignMode,
    },
    Brute { gammas: Vec<f64> },
}

/// One parameter point of a method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Gamma(f64),
    Alpha(f64),
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Ea { .. } => "ea",
            MethodSpec::Lra { .. } => "lra",
            MethodSpec::Brute { .. } => "brute",
        }
    }

    pub fn params(&self) -> Vec<Param> {
        match self {
            MethodSpec::Ea { gammas, alphas, .. } => gammas
                .iter()
                .map(|&g| Param::Gamma(g))
                .chain(alphas.iter().map(|&a| Param::Alpha(a)))
                .collect(),
            MethodSpec::Lra { gammas, .. } | MethodSpec::Brute { gammas } => {
                gammas.iter().map(|&g| Param::Gamma(g)).collect()
            }
        }
    }

    /// Runs on one instance.
    pub fn run(&self, inst: &Instance, param: Param) -> Result<AlignmentResult> {
        match self {
            MethodSpec::Ea {
                eps,
                restrict_k,
                matching,
                ..
            } => {
                let s = match param {
                    Param::Gamma(g) => ScoreScheme::from_gamma(g, *eps)?,
                    Param::Alpha(a) => ScoreScheme::from_alpha(a, *eps)?,
                };
                let set = match restrict_k {
                    Some(k) => {
                        let truth = inst
                            .truth
                            .as_ref()
                            .context("restricted alignment needs a ground-truth permutation")?;
                        if inst.g1.n() != inst.g2.n() {
                            bail!("restricted alignment needs equal graph sizes");
                        }
                        Some(sample_mapping_set(inst.g1.n(), truth, *k, derive_seed(inst.seed, 3))?)
                    }
                    None => None,
                };
                let opts = EigenAlignOptions {
                    power: PowerOptions {
                        seed: inst.seed,
                        ..Default::default()
                    },
                    matching: *matching,
                    ..Default::default()
                };
                Ok(eigen_align(&inst.g1, &inst.g2, &s, set.as_ref(), opts)?)
            }
            MethodSpec::Lra {
                rank, matching, signs, ..
            } => {
                let Param::Gamma(gamma) = param else {
                    bail!("lra takes gamma values");
                };
                let opts = LowRankOptions {
                    rank: *rank,
                    matching: *matching,
                    signs: *signs,
                    seed: inst.seed,
                    ..Default::default()
                };
                Ok(low_rank_align(&inst.g1, &inst.g2, gamma, &opts)?)
            }
            MethodSpec::Brute { .. } => {
                let Param::Gamma(gamma) = param else {
                    bail!("brute takes gamma values");
                };
                let mut r = brute_force_qap(&inst.g1, &inst.g2, gamma)?;
                r.seed = inst.seed;
                Ok(r)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub instance: InstanceSpec,
    pub methods: Vec<MethodSpec>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("invalid experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            bail!("config lists no methods");
        }
        if self.seeds.is_empty() {
            bail!("config lists no seeds");
        }
        let mut seen = HashSet::new();
        for s in &self.seeds {
            if !seen.insert(s) {
                bail!("seed {s} listed twice");
            }
        }
        for m in &self.methods {
            let params = m.params();
            if params.is_empty() {
                bail!("method {} has no parameter values", m.name());
            }
            for p in params {
                match p {
                    Param::Gamma(g) if !(0.0..0.5).contains(&g) => {
                        bail!("gamma {g} for {} outside [0, 0.5)", m.name())
                    }
                    Param::Alpha(a) if !(a > 1.0) => bail!("alpha {a} for {} must exceed 1", m.name()),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Replaces the seeds with a comma-separated list, e.g. `"1,2,3"`.
    pub fn override_seeds(&mut self, spec: &str) -> Result<()> {
        let seeds = spec
            .split(',')
            .map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed {s:?} in {SEED_ENV}")))
            .collect::<Result<Vec<_>>>()?;
        self.seeds = seeds;
        self.validate()
    }
}

/// One `(method, parameter, seed)` cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub method: String,
    pub gamma: f64,
    pub seed: u64,
    pub record: Option<MetricsRecord>,
    pub mapping: Option<Assignment>,
    pub error: Option<String>,
}

pub fn run_cell(method: &MethodSpec, param: Param, inst: &Instance) -> CellOutcome {
    let nominal_gamma = match param {
        Param::Gamma(g) => g,
        Param::Alpha(a) => 1.0 / (1.0 + a),
    };
    let start = Instant::now();
    match method.run(inst, param) {
        Ok(res) => {
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let accuracy = inst.truth.as_ref().map(|t| node_accuracy(&res.mapping, t));
            let mut record = res.to_record(accuracy, wall_ms);
            record.seed = inst.seed;
            record.gamma = nominal_gamma;
            CellOutcome {
                method: method.name().to_string(),
                gamma: nominal_gamma,
                seed: inst.seed,
                record: Some(record),
                mapping: Some(res.mapping),
                error: None,
            }
        }
        Err(e) => CellOutcome {
            method: method.name().to_string(),
            gamma: nominal_gamma,
            seed: inst.seed,
            record: None,
            mapping: None,
            error: Some(format!("{e:#}")),
        },
    }
}

/// Runs every cell on a pool of `jobs` threads; results come back in
/// method, parameter, seed order.
pub fn run_sweep(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<CellOutcome>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building thread pool")?;
    pool.install(|| {
        let instances: Vec<Instance> = cfg
            .seeds
            .par_iter()
            .map(|&s| cfg.instance.build(s))
            .collect::<Result<_>>()?;
        let cells: Vec<(&MethodSpec, Param, &Instance)> = cfg
            .methods
            .iter()
            .flat_map(|m| {
                let instances = &instances;
                m.params()
                    .into_iter()
                    .flat_map(move |p| instances.iter().map(move |inst| (m, p, inst)))
            })
            .collect();
        Ok(cells.par_iter().map(|&(m, p, inst)| run_cell(m, p, inst)).collect())
    })
}

pub const CSV_HEADER: [&str; 10] = [
    "method",
    "gamma",
    "seed",
    "matches",
    "mismatches",
    "neutrals",
    "objective",
    "accuracy",
    "wall_ms",
    "error",
];

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// CSV with one row per cell, then `mean` and `std` rows (in the `seed`
/// column) for each `(method, gamma)` over its successful cells.
pub fn sweep_csv(cells: &[CellOutcome]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for c in cells {
        match &c.record {
            Some(r) => w.write_record([
                c.method.clone(),
                c.gamma.to_string(),
                c.seed.to_string(),
                r.matches.to_string(),
                r.mismatches.to_string(),
                r.neutrals.to_string(),
                r.objective.to_string(),
                r.accuracy.map(|a| a.to_string()).unwrap_or_default(),
                format!("{:.3}", r.wall_ms),
                String::new(),
            ])?,
            None => w.write_record([
                c.method.clone(),
                c.gamma.to_string(),
                c.seed.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                c.error.clone().unwrap_or_default(),
            ])?,
        }
    }

    let mut groups: Vec<(String, f64)> = Vec::new();
    for c in cells {
        let key = (c.method.clone(), c.gamma);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    for (method, gamma) in groups {
        let ok: Vec<&MetricsRecord> = cells
            .iter()
            .filter(|c| c.method == method && c.gamma == gamma)
            .filter_map(|c| c.record.as_ref())
            .collect();
        if ok.is_empty() {
            continue;
        }
        let column = |f: &dyn Fn(&MetricsRecord) -> f64| mean_std(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
        let stats = [
            column(&|r| r.matches as f64),
            column(&|r| r.mismatches as f64),
            column(&|r| r.neutrals as f64),
            column(&|r| r.objective),
        ];
        let acc: Vec<f64> = ok.iter().filter_map(|r| r.accuracy).collect();
        let acc_stats = (!acc.is_empty()).then(|| mean_std(&acc));
        let wall = column(&|r| r.wall_ms);
        for (label, pick) in [("mean", 0usize), ("std", 1usize)] {
            let get = |t: (f64, f64)| if pick == 0 { t.0 } else { t.1 };
            w.write_record([
                method.clone(),
                gamma.to_string(),
                label.to_string(),
                get(stats[0]).to_string(),
                get(stats[1]).to_string(),
                get(stats[2]).to_string(),
                get(stats[3]).to_string(),
                acc_stats.map(|t| get(t).to_string()).unwrap_or_default(),
                format!("{:.3}", get(wall)),
                String::new(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(String::from_utf8(bytes)?)
}

/// The CSV with the timing column blanked, for determinism comparisons.
pub fn strip_timing(csv_text: &str) -> String {
    let col = CSV_HEADER.iter().position(|&h| h == "wall_ms").expect("wall_ms column");
    csv_text
        .lines()
        .map(|line| {
            let mut fields: Vec<&str> = line.split(',').collect();
            if fields.len() > col && line != csv_text.lines().next().unwrap_or("") {
                fields[col] = "";
            }
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// File name under which a cell's mapping is retained.
pub fn mapping_file_name(cell: &CellOutcome) -> String {
    format!("{}_g{}_s{}.tsv", cell.method, cell.gamma, cell.seed)
}

/// Rebuilds the instance for `seed` and recounts `mapping` on it.
pub fn recount(cfg: &ExperimentConfig, seed: u64, mapping: &Assignment) -> Result<AlignmentCounts> {
    let inst = cfg.instance.build(seed)?;
    Ok(count_alignment(&inst.g1, &inst.g2, mapping)?)
}
