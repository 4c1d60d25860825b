//! Argument parsing and subcommand handlers.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use specalign::align::{
    brute_force_qap, eigen_align, low_rank_align, EigenAlignOptions, LowRankOptions, MatchingMethod, SignMode,
};
use specalign::metrics::{count_alignment, generalized_objective, node_accuracy, MetricsRecord};
use specalign::score::{build_alignment_matrix, matrix_to_csv, DEFAULT_DENSE_CAP};
use specalign::spectral::PowerOptions;
use specalign::{Assignment, MappingSet, Permutation, ScoreScheme};

use crate::experiment::{
    mapping_file_name, run_sweep, sweep_csv, ExperimentConfig, GraphSpec, InstanceSpec, NoiseSpec, DEFAULT_EPS,
    SEED_ENV,
};
use crate::io::{read_graph, read_pairs, write_graph, write_mapping};

/// Bad flag combinations detected after parsing; exits with status 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "specalign", version, about = "Spectral graph alignment experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic graph or an aligned pair.
    Generate(GenerateArgs),
    /// Align two graphs and print a metrics record as JSON.
    Align(AlignArgs),
    /// Run an experiment config and write a CSV.
    Sweep(SweepArgs),
    /// Recount a mapping TSV against two graphs.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Er,
    Sbm,
    Regular,
    Powerlaw,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Er,
    Sbm,
    Regular,
    Powerlaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKind {
    None,
    Model1,
    Model2,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub kind: Kind,
    /// Graph family of a pair.
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Edge probability (er); density override for model2 noise.
    #[arg(long)]
    pub p: Option<f64>,
    /// Degree (regular).
    #[arg(long)]
    pub d: Option<usize>,
    /// Edges per new node (powerlaw).
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Seed graph size (powerlaw).
    #[arg(long, default_value_t = 5)]
    pub n0: usize,
    /// Block sizes (sbm), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Within-block density, one value or one per block (sbm).
    #[arg(long, value_delimiter = ',')]
    pub p_in: Vec<f64>,
    /// Across-block density (sbm).
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    pub noise: NoiseKind,
    #[arg(long)]
    pub pe: Option<f64>,
    /// Keep the identity as the ground truth.
    #[arg(long)]
    pub no_permute: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix.
    #[arg(long, default_value = "graph")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignMethod {
    Ea,
    Lra,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatchingArg {
    Exact,
    Greedy,
}

impl From<MatchingArg> for MatchingMethod {
    fn from(m: MatchingArg) -> Self {
        match m {
            MatchingArg::Exact => MatchingMethod::Exact,
            MatchingArg::Greedy => MatchingMethod::Greedy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Auto,
    Exhaustive,
    LocalSearch,
    AllPositive,
}

impl From<SignArg> for SignMode {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Auto => SignMode::Auto,
            SignArg::Exhaustive => SignMode::Exhaustive,
            SignArg::LocalSearch => SignMode::LocalSearch,
            SignArg::AllPositive => SignMode::AllPositive,
        }
    }
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    pub method: AlignMethod,
    pub g1: PathBuf,
    pub g2: PathBuf,
    /// Match-to-mismatch ratio for ea, with scores (α + ε, 1 + ε, ε).
    #[arg(long, conflicts_with = "scores")]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    /// Mismatch weight; for ea it selects α = 1/γ − 1.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Explicit scores s1,s2,s3 for ea.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub scores: Option<Vec<f64>>,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub signs: SignArg,
    /// Pair list restricting the candidate mappings (ea).
    #[arg(long)]
    pub restrict: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "exact")]
    pub matching: MatchingArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ground-truth pair list; adds node accuracy to the record.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Mapping TSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the explicit alignment matrix as CSV (ea).
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub config: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// CSV output; defaults to the config's `output`, else stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory receiving one mapping TSV per successful cell.
    #[arg(long)]
    pub mappings: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub g1: PathBuf,
    pub g2: PathBuf,
    pub mapping: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Align(a) => cmd_align(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Eval(a) => cmd_eval(&a),
    }
}

fn need<T>(v: Option<T>, flag: &str, what: &str) -> Result<T> {
    v.ok_or_else(|| usage(format!("{what} needs --{flag}")))
}

fn graph_spec(family: Family, a: &GenerateArgs) -> Result<GraphSpec> {
    Ok(match family {
        Family::Er => GraphSpec::Er {
            n: need(a.n, "n", "er")?,
            p: need(a.p, "p", "er")?,
        },
        Family::Regular => GraphSpec::Regular {
            n: need(a.n, "n", "regular")?,
            d: need(a.d, "d", "regular")?,
        },
        Family::Powerlaw => GraphSpec::Powerlaw {
            n: need(a.n, "n", "powerlaw")?,
            m: a.m,
            n0: a.n0,
        },
        Family::Sbm => {
            if a.sizes.is_empty() {
                return Err(usage("sbm needs --sizes"));
            }
            let k = a.sizes.len();
            let p_in = match a.p_in.len() {
                1 => vec![a.p_in[0]; k],
                l if l == k => a.p_in.clone(),
                _ => return Err(usage("sbm needs one --p-in value or one per block")),
            };
            let p_out = need(a.p_out, "p-out", "sbm")?;
            let density = (0..k)
                .map(|x| (0..k).map(|y| if x == y { p_in[x] } else { p_out }).collect())
                .collect();
            GraphSpec::Sbm {
                sizes: a.sizes.clone(),
                density,
            }
        }
    })
}

fn noise_spec(a: &GenerateArgs) -> Result<NoiseSpec> {
    Ok(match a.noise {
        NoiseKind::None => NoiseSpec::None,
        NoiseKind::Model1 => NoiseSpec::Model1 {
            pe: need(a.pe, "pe", "model1 noise")?,
        },
        NoiseKind::Model2 => NoiseSpec::Model2 {
            pe: need(a.pe, "pe", "model2 noise")?,
            p: a.p.filter(|_| a.family != Some(Family::Er)),
        },
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    kind: &'static str,
    seed: u64,
    graph: &'a GraphSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseSpec>,
    files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<&'a [usize]>,
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let (family, kind) = match a.kind {
        Kind::Er => (Family::Er, "graph"),
        Kind::Sbm => (Family::Sbm, "graph"),
        Kind::Regular => (Family::Regular, "graph"),
        Kind::Powerlaw => (Family::Powerlaw, "graph"),
        Kind::Pair => (need(a.family, "family", "pair")?, "pair"),
    };
    let spec = graph_spec(family, a)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let sidecar_path = with_suffix(&a.out, ".json");
    let display = |p: &Path| p.display().to_string();

    let sidecar_json = if a.kind == Kind::Pair {
        let noise = noise_spec(a)?;
        let inst = InstanceSpec {
            g1: spec.clone(),
            g2: None,
            noise,
            permute: !a.no_permute,
        }
        .build(a.seed)?;
        let truth = inst.truth.expect("derived pair has a truth");
        let p1 = with_suffix(&a.out, "_g1.el");
        let p2 = with_suffix(&a.out, "_g2.el");
        let pt = with_suffix(&a.out, "_truth.tsv");
        write_graph(&p1, &inst.g1)?;
        write_graph(&p2, &inst.g2)?;
        write_mapping(&pt, &Assignment::unweighted(truth.pairs()))?;
        serde_json::to_string_pretty(&Sidecar {
            kind,
            seed: a.seed,
            graph: &spec,
            noise: Some(noise),
            files: vec![display(&p1), display(&p2), display(&pt)],
            truth: Some(truth.as_slice()),
        })?
    } else {
        if a.noise != NoiseKind::None {
            return Err(usage("--noise applies only to pairs"));
        }
        let g = InstanceSpec {
            g1: spec.clone(),
            g2: None,
            noise: NoiseSpec::None,
            permute: false,
        }
        .build(a.seed)?
        .g1;
        let p = with_suffix(&a.out, ".el");
        write_graph(&p, &g)?;
        serde_json::to_string_pretty(&Sidecar {
            kind,
            seed: a.seed,
            graph: &spec,
            noise: None,
            files: vec![display(&p)],
            truth: None,
        })?
    };
    fs::write(&sidecar_path, sidecar_json + "\n").with_context(|| format!("writing {}", sidecar_path.display()))?;
    println!("{}", sidecar_path.display());
    Ok(())
}

fn read_truth(path: &Path) -> Result<Permutation> {
    let mut pairs = read_pairs(path)?;
    pairs.sort_unstable();
    if pairs.iter().enumerate().any(|(t, &(i, _))| t != i) {
        bail!("{}: truth must list every node of G1 exactly once", path.display());
    }
    Ok(Permutation::new(pairs.into_iter().map(|(_, j)| j).collect())?)
}

fn ea_scheme(a: &AlignArgs) -> Result<ScoreScheme> {
    if let Some(s) = &a.scores {
        if a.gamma.is_some() {
            return Err(usage("--scores and --gamma are exclusive"));
        }
        return Ok(ScoreScheme::new(s[0], s[1], s[2])?);
    }
    match (a.alpha, a.gamma) {
        (Some(alpha), None) => Ok(ScoreScheme::from_alpha(alpha, a.eps)?),
        (None, Some(gamma)) => Ok(ScoreScheme::from_gamma(gamma, a.eps)?),
        (Some(_), Some(_)) => Err(usage("--alpha and --gamma are exclusive")),
        (None, None) => Err(usage("ea needs one of --alpha, --gamma or --scores")),
    }
}

fn cmd_align(a: &AlignArgs) -> Result<()> {
    let g1 = read_graph(&a.g1)?;
    let g2 = read_graph(&a.g2)?;
    let truth = a.truth.as_deref().map(read_truth).transpose()?;
    if a.method != AlignMethod::Ea && (a.restrict.is_some() || a.dump_matrix.is_some()) {
        return Err(usage("--restrict and --dump-matrix apply to ea"));
    }
    let start = Instant::now();
    let result = match a.method {
        AlignMethod::Ea => {
            let s = ea_scheme(a)?;
            let set = match &a.restrict {
                Some(p) => Some(MappingSet::from_pairs(g1.n(), g2.n(), read_pairs(p)?)?),
                None => None,
            };
            if let Some(path) = &a.dump_matrix {
                let full;
                let r = match &set {
                    Some(r) => r,
                    None => {
                        full = MappingSet::full(g1.n(), g2.n());
                        &full
                    }
                };
                let m = build_alignment_matrix(&g1, &g2, &s, r, DEFAULT_DENSE_CAP)?;
                fs::write(path, matrix_to_csv(&m)).with_context(|| format!("writing {}", path.display()))?;
            }
            let opts = EigenAlignOptions {
                power: PowerOptions {
                    seed: a.seed,
                    ..Default::default()
                },
                matching: a.matching.into(),
                ..Default::default()
            };
            eigen_align(&g1, &g2, &s, set.as_ref(), opts)?
        }
        AlignMethod::Lra => {
            let gamma = need(a.gamma, "gamma", "lra")?;
            let opts = LowRankOptions {
                rank: a.rank,
                matching: a.matching.into(),
                signs: a.signs.into(),
                seed: a.seed,
                ..Default::default()
            };
            low_rank_align(&g1, &g2, gamma, &opts)?
        }
        AlignMethod::Brute => {
            let gamma = need(a.gamma, "gamma", "brute")?;
            let mut r = brute_force_qap(&g1, &g2, gamma)?;
            r.seed = a.seed;
            r
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let accuracy = truth.as_ref().map(|t| node_accuracy(&result.mapping, t));
    if let Some(path) = &a.out {
        write_mapping(path, &result.mapping)?;
    }
    println!("{}", serde_json::to_string(&result.to_record(accuracy, wall_ms))?);
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Ok(seeds) = std::env::var(SEED_ENV) {
        cfg.override_seeds(&seeds)?;
    }
    let cells = run_sweep(&cfg, a.jobs)?;
    let csv_text = sweep_csv(&cells)?;
    match a.out.as_ref().or(cfg.output.as_ref()) {
        Some(path) => fs::write(path, &csv_text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv_text}"),
    }
    if let Some(dir) = &a.mappings {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for c in &cells {
            if let Some(m) = &c.mapping {
                write_mapping(&dir.join(mapping_file_name(c)), m)?;
            }
        }
    }
    let failed: Vec<_> = cells.iter().filter(|c| c.error.is_some()).collect();
    for c in &failed {
        eprintln!(
            "warning: {} gamma={} seed={}: {}",
            c.method,
            c.gamma,
            c.seed,
            c.error.as_deref().unwrap_or("")
        );
    }
    if failed.len() == cells.len() {
        bail!("all {} cells failed", cells.len());
    }
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let g1 = read_graph(&a.g1)?;
    let g2 = read_graph(&a.g2)?;
    let mapping = Assignment::unweighted(read_pairs(&a.mapping)?);
    mapping.validate(g1.n(), g2.n())?;
    let truth = a.truth.as_deref().map(read_truth).transpose()?;
    let counts = count_alignment(&g1, &g2, &mapping)?;
    let objective = generalized_objective(&g1, &g2, &mapping, a.gamma)?;
    let record = MetricsRecord {
        method: "eval".into(),
        gamma: a.gamma,
        seed: 0,
        matches: counts.matches,
        mismatches: counts.mismatches,
        neutrals: counts.neutrals,
        objective,
        accuracy: truth.as_ref().map(|t| node_accuracy(&mapping, t)),
        wall_ms: 0.0,
    };
    println!("{}", serde_json::to_string(&record)?);
    Ok(())
}
