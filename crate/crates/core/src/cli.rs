//! The `wikinav` command line. Every run resolves its settings from flags,
//! then the `--config` file, then defaults, and writes the resolved settings
//! next to its outputs as `<output>.config`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::agents::{
    evaluate, write_report_csv, write_trace, AgentKind, TaskKind, TaskSpec, DEFAULT_BUDGET,
};
use crate::config::RunConfig;
use crate::embed::{embed_graph, EmbedderConfig, EmbeddingTable, DEFAULT_DIM};
use crate::error::{Error, Result};
use crate::graph::{self, Direction, Graph};
use crate::ingest::{build_graph, read_corpus, synth_graph, BuildOptions, SynthSpec};
use crate::policy::{
    load_params, reinforce_train, save_params, train_bc, GoalMode, NavContext, PolicyParams,
    RlConfig, TrainConfig,
};
use crate::retrieval::{
    finetune_target_encoder, mean_metrics, read_claims, run_claims, synth_claims, write_claims,
    Bm25Index, ClaimSpec, FinetuneConfig, PipelineConfig, TargetEncoderParams,
};
use crate::stats::{degree_histogram, estimate_spl, graph_diff};
use crate::trajectories::SamplerKind;

pub const AGENTS: &str = "policy, random, greedy, random_dfs, greedy_dfs, oracle";

#[derive(Parser, Debug)]
#[command(
    name = "wikinav",
    version,
    about = "Goal-conditioned navigation on text graphs"
)]
pub struct Cli {
    /// Worker threads for sampling, evaluation and retrieval (0: one per
    /// core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    /// `key = value` file; flags take precedence over its entries. Keys are
    /// the long flag names with `-` replaced by `_`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a graph file from a JSON-lines corpus or a synthetic spec.
    Build(BuildArgs),
    /// Train a policy and write a checkpoint and a per-step log CSV.
    Train(TrainArgs),
    /// Evaluate agents on a navigation task and write a report CSV.
    Eval(EvalArgs),
    /// Generate a synthetic claims file over a graph.
    Claims(ClaimsArgs),
    /// Fit the claim encoder against a frozen policy.
    Finetune(FinetuneArgs),
    /// Run the evidence pipeline over a claims file.
    Retrieve(RetrieveArgs),
    /// Degree and path-length histograms, and snapshot diffs.
    Stats(StatsArgs),
}

#[derive(Args, Debug, Default)]
pub struct EmbedArgs {
    /// Embedding dimension [default: 256]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Hashing seed of the embedder [default: 0]
    #[arg(long)]
    pub embed_seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// JSON-lines corpus with doc_id, title, body and links fields.
    #[arg(long, conflicts_with = "synth")]
    pub corpus: Option<PathBuf>,
    /// Generate a synthetic graph instead of reading a corpus.
    #[arg(long)]
    pub synth: bool,
    /// Synthetic generator seed [default: 17]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synthetic article count [default: 450]
    #[arg(long)]
    pub articles: Option<usize>,
    /// Synthetic topic count [default: 20]
    #[arg(long)]
    pub topics: Option<usize>,
    /// Paragraph block size in words [default: 100]
    #[arg(long)]
    pub target_words: Option<usize>,
    /// Skip mention edges.
    #[arg(long)]
    pub no_mentions: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Log CSV [default: <out>.log.csv]
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// bc or reinforce [default: bc]
    #[arg(long)]
    pub method: Option<String>,
    /// Start from this checkpoint.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// forward, reverse or shortest [default: forward]
    #[arg(long)]
    pub sampler: Option<String>,
    /// Trajectory length T [default: 5]
    #[arg(long)]
    pub traj_steps: Option<usize>,
    /// Draw trajectory lengths uniformly from 1..=T [default: false]
    #[arg(long)]
    pub multistep: Option<bool>,
    /// node or sentence [default: node]
    #[arg(long)]
    pub goal: Option<String>,
    /// Update steps [default: 20000]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Trajectories per update [default: 64]
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Probability of hiding each non-gold edge [default: 0.5]
    #[arg(long)]
    pub edge_dropout: Option<f64>,
    /// Environment moves for reinforce [default: steps * batch]
    #[arg(long)]
    pub env_steps: Option<usize>,
    /// Step budget per reinforce episode [default: 50]
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Comma-separated agents: policy, random, greedy, random_dfs,
    /// greedy_dfs, oracle [default: policy]
    #[arg(long)]
    pub agents: Option<String>,
    /// Policy checkpoint, required for the policy agent.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// nav, multistep or sentence [default: nav]
    #[arg(long)]
    pub task: Option<String>,
    /// Task length T [default: 5]
    #[arg(long)]
    pub traj_steps: Option<usize>,
    /// Step budget B [default: 100]
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// DFS depth limit; 0 means T [default: 0]
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-episode trace of visited nodes, one file per agent.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

#[derive(Args, Debug)]
pub struct ClaimsArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub n_claims: Option<usize>,
    /// Distance from the named article to the gold node [default: 4]
    #[arg(long)]
    pub hops: Option<usize>,
    /// Share of gold-sentence words kept [default: 0.6]
    #[arg(long)]
    pub keep: Option<f64>,
    /// Leave out words found in fewer than this share of nodes
    #[arg(long)]
    pub min_df: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub claims: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Weight of the distance to the gold node's vector [default: 0.1]
    #[arg(long)]
    pub aux_weight: Option<f64>,
    #[arg(long)]
    pub k_start: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Encoder JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

#[derive(Args, Debug)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Policy checkpoint; not needed with --nav-steps 0.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Claim encoder JSON [default: identity]
    #[arg(long)]
    pub target_encoder: Option<PathBuf>,
    #[arg(long)]
    pub claims: Option<PathBuf>,
    /// BM25 start nodes per claim [default: 5]
    #[arg(long)]
    pub k_start: Option<usize>,
    /// Moves per walk; 0 keeps only the start nodes [default: 20]
    #[arg(long)]
    pub nav_steps: Option<usize>,
    /// Sentences returned per claim [default: 5]
    #[arg(long)]
    pub k_out: Option<usize>,
    /// Per-claim results, JSON lines.
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics CSV [default: <out>.metrics.csv]
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[command(flatten)]
    pub embed: EmbedArgs,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Second snapshot to diff against.
    #[arg(long)]
    pub against: Option<PathBuf>,
    /// Path-length sources, highest in-degree first [default: min(1000, nodes)]
    #[arg(long)]
    pub sources: Option<usize>,
    /// Path-length cap in hops [default: 64]
    #[arg(long)]
    pub cap: Option<u32>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Parses `args` (program name first), runs the command and maps the
/// outcome to an exit code: 0 success, 2 usage or input error, 1 internal.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_)
        | Error::Json(_)
        | Error::Corrupt { .. }
        | Error::Version { .. }
        | Error::Invalid(_)
        | Error::NoTokens
        | Error::UnknownNode(_)
        | Error::NoStartNodes
        | Error::EmbedderMismatch { .. }
        | Error::SinkHeavy { .. } => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let workers = cfg.resolve("workers", (cli.workers != 0).then_some(cli.workers), 0usize)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Build(a) => cmd_build(a, cfg),
        Command::Train(a) => cmd_train(a, cfg),
        Command::Eval(a) => cmd_eval(a, cfg),
        Command::Claims(a) => cmd_claims(a, cfg),
        Command::Finetune(a) => cmd_finetune(a, cfg),
        Command::Retrieve(a) => cmd_retrieve(a, cfg),
        Command::Stats(a) => cmd_stats(a, cfg),
    })
}

/// `path` with `suffix` appended to its file name.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn required_path(cfg: &mut RunConfig, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
    let p = match flag {
        Some(p) => p,
        None => cfg
            .get_str(key)
            .map(PathBuf::from)
            .ok_or_else(|| Error::invalid(format!("--{} is required", key.replace('_', "-"))))?,
    };
    cfg.set(key, p.display());
    Ok(p)
}

fn optional_path(cfg: &mut RunConfig, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
    let p = flag.or_else(|| cfg.get_str(key).map(PathBuf::from));
    if let Some(p) = &p {
        cfg.set(key, p.display());
    }
    p
}

fn embedder(cfg: &mut RunConfig, a: EmbedArgs) -> Result<EmbedderConfig> {
    let e = EmbedderConfig::hashed(
        cfg.resolve("dim", a.dim, DEFAULT_DIM)?,
        cfg.resolve("embed_seed", a.embed_seed, 0u64)?,
    );
    e.validate()?;
    Ok(e)
}

fn load_graph(cfg: &mut RunConfig, flag: Option<PathBuf>) -> Result<Graph> {
    graph::load(required_path(cfg, "graph", flag)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_build(a: BuildArgs, mut cfg: RunConfig) -> Result<()> {
    let synth = a.synth || cfg.get::<bool>("synth")?.unwrap_or(false);
    let (g, report) = if synth {
        cfg.set("synth", true);
        let spec = SynthSpec {
            n_articles: cfg.resolve("articles", a.articles, 450)?,
            n_topics: cfg.resolve("topics", a.topics, 20)?,
            seed: cfg.resolve("seed", a.seed, 17)?,
            ..SynthSpec::default()
        };
        let g = synth_graph(&spec)?;
        (g, None)
    } else {
        let corpus = required_path(&mut cfg, "corpus", a.corpus)?;
        let opts = BuildOptions {
            target_words: cfg.resolve("target_words", a.target_words, 100)?,
            mention_edges: !cfg.resolve("no_mentions", a.no_mentions.then_some(true), false)?,
            ..BuildOptions::default()
        };
        let docs = read_corpus(&corpus)?.collect::<Result<Vec<_>>>()?;
        let (g, report) = build_graph(docs, &opts)?;
        (g, Some(report))
    };
    graph::save(&g, &a.out)?;
    cfg.set("out", a.out.display());
    match report {
        Some(r) => {
            print!("{r}");
            serde_json::to_writer_pretty(create(&sidecar(&a.out, ".report.json"))?, &r)?;
        }
        None => println!("nodes {} edges {}", g.len(), g.edge_count()),
    }
    cfg.save(sidecar(&a.out, ".config"))
}

fn parse_goal(s: &str) -> Result<GoalMode> {
    match s {
        "node" => Ok(GoalMode::Node),
        "sentence" => Ok(GoalMode::Sentence),
        _ => Err(Error::invalid(format!(
            "unknown goal {s:?} (node, sentence)"
        ))),
    }
}

fn cmd_train(a: TrainArgs, mut cfg: RunConfig) -> Result<()> {
    let g = load_graph(&mut cfg, a.graph)?;
    let emb = embedder(&mut cfg, a.embed)?;
    let table = embed_graph(&emb, &g)?;
    let ctx = NavContext::new(&g, &table, &emb);
    let init = optional_path(&mut cfg, "init", a.init)
        .map(|p| load_params(p, emb.fingerprint()))
        .transpose()?;
    let d = TrainConfig::desk();
    let method = cfg.resolve("method", a.method, "bc".to_string())?;
    let sampler_name = cfg.resolve("sampler", a.sampler, "forward".to_string())?;
    let tc = TrainConfig {
        lr: cfg.resolve("lr", a.lr, d.lr)?,
        batch: cfg.resolve("batch", a.batch, d.batch)?,
        steps: cfg.resolve("steps", a.steps, d.steps)?,
        sampler: sampler_name.parse::<SamplerKind>()?,
        traj_steps: cfg.resolve("traj_steps", a.traj_steps, d.traj_steps)?,
        multistep: cfg.resolve("multistep", a.multistep, d.multistep)?,
        edge_dropout: cfg.resolve("edge_dropout", a.edge_dropout, d.edge_dropout)?,
        goal: parse_goal(&cfg.resolve("goal", a.goal, "node".to_string())?)?,
        seed: cfg.resolve("seed", a.seed, d.seed)?,
        ..d
    };
    let (params, log) = match method.as_str() {
        "bc" => {
            if init.is_some() {
                return Err(Error::invalid(
                    "--init is only used with --method reinforce",
                ));
            }
            train_bc(&ctx, &tc, None)?
        }
        "reinforce" => {
            let rc = RlConfig {
                lr: tc.lr,
                env_steps: cfg.resolve("env_steps", a.env_steps, tc.steps * tc.batch)?,
                task_steps: tc.traj_steps,
                budget: cfg.resolve("budget", a.budget, 50)?,
                seed: tc.seed,
                ..RlConfig::default()
            };
            reinforce_train(&ctx, &rc, init)?
        }
        m => {
            return Err(Error::invalid(format!(
                "unknown method {m:?} (bc, reinforce)"
            )))
        }
    };
    save_params(&params, emb.fingerprint(), &a.out)?;
    cfg.set("out", a.out.display());
    let log_path = a.log.unwrap_or_else(|| sidecar(&a.out, ".log.csv"));
    cfg.set("log", log_path.display());
    let mut out = create(&log_path)?;
    writeln!(
        out,
        "# method={method} sampler={sampler_name} traj_steps={} multistep={}",
        tc.traj_steps, tc.multistep
    )?;
    log.write_csv(&mut out)?;
    out.flush()?;
    let n = log.rows.len();
    println!(
        "{method} {} updates, mean loss {:.4} -> {:.4}",
        n,
        log.mean_loss(0, n.min(100)),
        log.mean_loss(n.saturating_sub(100), n)
    );
    cfg.save(sidecar(&a.out, ".config"))
}

fn parse_task(name: &str, steps: usize) -> Result<TaskKind> {
    match name {
        "nav" => Ok(TaskKind::NavT(steps)),
        "multistep" => Ok(TaskKind::Multistep(steps)),
        "sentence" => Ok(TaskKind::SentenceSearch(steps)),
        _ => Err(Error::invalid(format!(
            "unknown task {name:?} (nav, multistep, sentence)"
        ))),
    }
}

fn parse_agent<'a>(
    name: &str,
    policy: Option<&'a PolicyParams>,
    max_depth: usize,
) -> Result<AgentKind<'a>> {
    Ok(match name.replace('-', "_").as_str() {
        "policy" => AgentKind::Policy(
            policy.ok_or_else(|| Error::invalid("the policy agent needs --checkpoint"))?,
        ),
        "random" => AgentKind::Random,
        "greedy" => AgentKind::Greedy,
        "random_dfs" => AgentKind::RandomDfs { max_depth },
        "greedy_dfs" => AgentKind::GreedyDfs { max_depth },
        "oracle" => AgentKind::Oracle,
        _ => {
            return Err(Error::invalid(format!(
                "unknown agent {name:?}; valid agents: {AGENTS}"
            )))
        }
    })
}

fn cmd_eval(a: EvalArgs, mut cfg: RunConfig) -> Result<()> {
    let names = cfg.resolve("agents", a.agents, "policy".to_string())?;
    let max_depth = cfg.resolve("max_depth", a.max_depth, 0)?;
    for n in names.split(',') {
        parse_agent(n.trim(), Some(&PolicyParams::zeros(1, 1.0, false)), 0)?;
    }
    let g = load_graph(&mut cfg, a.graph)?;
    let emb = embedder(&mut cfg, a.embed)?;
    let table = embed_graph(&emb, &g)?;
    let ctx = NavContext::new(&g, &table, &emb);
    let policy = optional_path(&mut cfg, "checkpoint", a.checkpoint)
        .map(|p| load_params(p, emb.fingerprint()))
        .transpose()?;
    let kind = parse_task(
        &cfg.resolve("task", a.task, "nav".to_string())?,
        cfg.resolve("traj_steps", a.traj_steps, 5)?,
    )?;
    let task = TaskSpec::new(
        kind,
        cfg.resolve("budget", a.budget, DEFAULT_BUDGET)?,
        cfg.resolve("episodes", a.episodes, 1000)?,
        cfg.resolve("seed", a.seed, 0)?,
    );
    let mut rows = Vec::new();
    for n in names.split(',') {
        let agent = parse_agent(n.trim(), policy.as_ref(), max_depth)?;
        let e = evaluate(&task, &agent, &ctx)?;
        println!("{e}");
        if let Some(t) = &a.trace {
            let path = sidecar(t, &format!(".{}", e.agent));
            let mut out = create(&path)?;
            write_trace(&g, &e, &mut out)?;
            out.flush()?;
        }
        rows.push(e);
    }
    let mut out = create(&a.out)?;
    write_report_csv(&rows, &mut out)?;
    out.flush()?;
    cfg.set("out", a.out.display());
    cfg.save(sidecar(&a.out, ".config"))
}

fn cmd_claims(a: ClaimsArgs, mut cfg: RunConfig) -> Result<()> {
    let g = load_graph(&mut cfg, a.graph)?;
    let d = ClaimSpec::default();
    let spec = ClaimSpec {
        n_claims: cfg.resolve("n_claims", a.n_claims, d.n_claims)?,
        hops: cfg.resolve("hops", a.hops, d.hops)?,
        keep: cfg.resolve("keep", a.keep, d.keep)?,
        min_df: cfg.resolve("min_df", a.min_df, d.min_df)?,
        seed: cfg.resolve("seed", a.seed, d.seed)?,
    };
    let claims = synth_claims(&g, &spec)?;
    let mut out = create(&a.out)?;
    write_claims(&claims, &mut out)?;
    out.flush()?;
    println!("{} claims", claims.len());
    cfg.set("out", a.out.display());
    cfg.save(sidecar(&a.out, ".config"))
}

fn cmd_finetune(a: FinetuneArgs, mut cfg: RunConfig) -> Result<()> {
    let g = load_graph(&mut cfg, a.graph)?;
    let emb = embedder(&mut cfg, a.embed)?;
    let policy = load_params(
        required_path(&mut cfg, "checkpoint", a.checkpoint)?,
        emb.fingerprint(),
    )?;
    let claims = read_claims(required_path(&mut cfg, "claims", a.claims)?)?;
    let table = embed_graph(&emb, &g)?;
    let ctx = NavContext::new(&g, &table, &emb);
    let index = Bm25Index::build(&g)?;
    let d = FinetuneConfig::default();
    let fc = FinetuneConfig {
        steps: cfg.resolve("steps", a.steps, d.steps)?,
        batch: cfg.resolve("batch", a.batch, d.batch)?,
        lr: cfg.resolve("lr", a.lr, d.lr)?,
        aux_weight: cfg.resolve("aux_weight", a.aux_weight, d.aux_weight)?,
        k_start: cfg.resolve("k_start", a.k_start, d.k_start)?,
        seed: cfg.resolve("seed", a.seed, d.seed)?,
        ..d
    };
    let (enc, report) = finetune_target_encoder(
        &TargetEncoderParams::identity(emb.dim),
        &claims,
        &policy,
        &ctx,
        &index,
        &fc,
    )?;
    enc.save(&a.out)?;
    let n = report.losses.len();
    println!(
        "{} transitions, {} claims skipped, loss {:.4} -> {:.4}",
        report.transitions,
        report.skipped,
        report.losses.first().copied().unwrap_or(f64::NAN),
        report
            .losses
            .get(n.wrapping_sub(1))
            .copied()
            .unwrap_or(f64::NAN)
    );
    cfg.set("out", a.out.display());
    cfg.save(sidecar(&a.out, ".config"))
}

fn cmd_retrieve(a: RetrieveArgs, mut cfg: RunConfig) -> Result<()> {
    let g = load_graph(&mut cfg, a.graph)?;
    let emb = embedder(&mut cfg, a.embed)?;
    let claims = read_claims(required_path(&mut cfg, "claims", a.claims)?)?;
    let d = PipelineConfig::default();
    let pc = PipelineConfig {
        k_start: cfg.resolve("k_start", a.k_start, d.k_start)?,
        nav_steps: cfg.resolve("nav_steps", a.nav_steps, d.nav_steps)?,
        k_out: cfg.resolve("k_out", a.k_out, d.k_out)?,
    };
    let policy = match optional_path(&mut cfg, "checkpoint", a.checkpoint) {
        Some(p) => load_params(p, emb.fingerprint())?,
        None if pc.nav_steps == 0 => PolicyParams::zeros(emb.dim, 1.0, false),
        None => {
            return Err(Error::invalid(
                "--checkpoint is required unless --nav-steps is 0",
            ))
        }
    };
    let encoder = match optional_path(&mut cfg, "target_encoder", a.target_encoder) {
        Some(p) => TargetEncoderParams::load(p)?,
        None => TargetEncoderParams::identity(emb.dim),
    };
    let table: EmbeddingTable = embed_graph(&emb, &g)?;
    let ctx = NavContext::new(&g, &table, &emb);
    let index = Bm25Index::build(&g)?;
    let results = run_claims(&claims, &index, &policy, &encoder, &ctx, &pc)?;

    let mut out = create(&a.out)?;
    for r in &results {
        let paths: Vec<Vec<String>> = r
            .evidence
            .iter()
            .map(|e| e.path.iter().map(|&n| g.label(n)).collect())
            .collect();
        let mut v = serde_json::to_value(r)?;
        v["paths"] = serde_json::to_value(paths)?;
        serde_json::to_writer(&mut out, &v)?;
        writeln!(out)?;
    }
    out.flush()?;

    let (m, at) = mean_metrics(&results);
    let metrics = a.metrics.unwrap_or_else(|| sidecar(&a.out, ".metrics.csv"));
    let mut out = create(&metrics)?;
    let k = pc.k_out;
    let mut header = vec![format!("P@{k}"), format!("R@{k}"), format!("F1@{k}")];
    header.extend((1..=at.len()).map(|i| format!("Recall@{i}")));
    writeln!(out, "claims,{}", header.join(","))?;
    let mut vals = vec![m.precision, m.recall, m.f1];
    vals.extend(&at);
    let vals: Vec<String> = vals.iter().map(|v| format!("{v:.6}")).collect();
    writeln!(out, "{},{}", results.len(), vals.join(","))?;
    out.flush()?;
    println!(
        "{} claims: P@{k} {:.3} R@{k} {:.3} F1@{k} {:.3}",
        results.len(),
        m.precision,
        m.recall,
        m.f1
    );
    cfg.set("out", a.out.display());
    cfg.set("metrics", metrics.display());
    cfg.save(sidecar(&a.out, ".config"))
}

fn cmd_stats(a: StatsArgs, mut cfg: RunConfig) -> Result<()> {
    let g = load_graph(&mut cfg, a.graph)?;
    fs::create_dir_all(&a.out_dir)?;
    let show = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
    let dir = &a.out_dir;
    for (dir_name, d) in [("out", Direction::Forward), ("in", Direction::Reverse)] {
        let h = degree_histogram(&g, d);
        h.write_csv(create(&dir.join(format!("degree_{dir_name}.csv")))?)?;
        h.log_binned()
            .write_csv(create(&dir.join(format!("degree_{dir_name}_log.csv")))?)?;
        println!(
            "{dir_name}-degree median {} max {}",
            show(h.median()),
            show(h.max_value())
        );
    }
    let sources = cfg.resolve("sources", a.sources, g.len().min(1000))?;
    let cap = cfg.resolve("cap", a.cap, 64)?;
    let spl = estimate_spl(&g, sources, cap)?;
    spl.histogram.write_csv(create(&dir.join("spl.csv"))?)?;
    println!(
        "shortest-path median {} over {} sources",
        show(spl.median),
        sources
    );
    if let Some(other) = optional_path(&mut cfg, "against", a.against) {
        let diff = graph_diff(&g, &graph::load(other)?);
        serde_json::to_writer_pretty(create(&dir.join("diff.json"))?, &diff)?;
        println!(
            "diff: {} nodes added, {} removed, {} changed",
            diff.nodes_added, diff.nodes_removed, diff.nodes_changed
        );
    }
    cfg.set("out_dir", dir.display());
    cfg.save(dir.join("run.config"))
}
