//! `icdetect`: generate datasets, train and score inconsistent-cluster
//! detectors, evaluate them and run the synthetic comparison grid.
//!
//! Exit status is 0 on success, 1 when inputs fail validation and 2 on
//! usage errors. Every output records the invocation that produced it:
//! JSON and markdown outputs embed it, CSV outputs get a `<file>.meta.json`
//! sidecar.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use icdetect_core::bench::{run_bench_with_progress, BenchConfig};
use icdetect_core::classical::{select_k, ForestConfig, KCoreScorer, SuperPartModel, TcScorer};
use icdetect_core::eval::{evaluate_scores, f1_at, pr_curve, score_dataset, ScoredGraph};
use icdetect_core::gnn::{self, GnnConfig, GnnVariant};
use icdetect_core::io::{
    load_checkpoint, load_dataset, load_ic_stratified, read_scores_csv, save_checkpoint, save_dataset, write_json,
    write_pr_csv, write_scores_csv, Checkpoint, GnnCheckpoint, SuperPartCheckpoint,
};
use icdetect_core::synthetic::generate_dataset;
use icdetect_core::{BetaParams, Dataset, GraphScorer, MethodSettings, Split, SyntheticSpec};

#[derive(Parser, Debug)]
#[command(name = "icdetect", version, about = "Inconsistent-cluster detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Generate a synthetic weighted stochastic block model dataset.
    Gen(GenArgs),
    /// Convert IC-Stratified JSONL files into the dataset format.
    Import(ImportArgs),
    /// Train a MAG-GCN, GCN-E or SuperPart model.
    Train(TrainArgs),
    /// Score every graph of a dataset, writing `id,score,label` CSV.
    Score(ScoreArgs),
    /// Choose a threshold on validation and report test F1 and PR-AUC.
    Eval(EvalArgs),
    /// Write the precision-recall curve of a score file.
    Pr(PrArgs),
    /// Run the synthetic comparison grid and print a markdown table.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    /// Within-family Beta shape parameters, `alpha,beta`.
    #[arg(long, default_value = "4,1")]
    beta_within: BetaParams,
    /// Between-family Beta shape parameters, `alpha,beta`.
    #[arg(long, default_value = "1,4")]
    beta_between: BetaParams,
    /// Number of graphs.
    #[arg(long = "n", default_value_t = 1000)]
    n_graphs: usize,
    #[arg(long, default_value_t = 5)]
    size_min: usize,
    #[arg(long, default_value_t = 15)]
    size_max: usize,
    /// Probability that a node joins the second family.
    #[arg(long, default_value_t = 0.03)]
    p_second: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ImportArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Seeds the 80/20 train/validation split of the training file.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TrainMethod {
    #[value(alias = "mag")]
    MagGcn,
    #[value(alias = "mean_only")]
    GcnE,
    Superpart,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "mag-gcn")]
    method: TrainMethod,
    /// JSON hyperparameters (`{"gnn": {...}, "forest": {...}}`); flags below
    /// override individual fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Baseline {
    Tc,
    Kcore,
}

/// Where scores come from: a trained checkpoint or an untrained baseline.
#[derive(Args, Debug, Serialize)]
#[group(required = true, multiple = false)]
struct ScorerSource {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
}

#[derive(Args, Debug, Serialize)]
struct ScoreArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    source: ScorerSource,
    /// Core order for `--baseline kcore`; selected on validation when omitted.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[group(required = true, multiple = false)]
struct EvalSource {
    /// Score CSV produced by `score`, joined to the dataset by id.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    source: EvalSource,
    #[arg(long)]
    k: Option<usize>,
    /// Fixed decision threshold instead of the validation-optimal one.
    /// Values outside [0, 1] are clamped.
    #[arg(long)]
    threshold: Option<f64>,
    /// Recorded in the report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct PrArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Restrict to one split of this dataset, taking labels from it.
    #[arg(long, requires = "split")]
    data: Option<PathBuf>,
    #[arg(long, value_enum, requires = "data")]
    split: Option<SplitArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    /// Grid configuration JSON; the six-row default grid when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds overriding the configuration.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Graphs per dataset, overriding the configuration.
    #[arg(long = "n")]
    n_graphs: Option<usize>,
    /// Markdown table path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full per-seed results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Stamp written into every output.
#[derive(Serialize)]
struct Invocation<'a> {
    tool: &'static str,
    version: &'static str,
    #[serde(flatten)]
    command: &'a Command,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    invocation: &'a Invocation<'a>,
    #[serde(flatten)]
    body: T,
}

fn invocation(command: &Command) -> Invocation<'_> {
    Invocation {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
    }
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// CSV cannot carry the invocation inline, so it goes next to the file.
fn write_sidecar<T: Serialize>(csv_path: Option<&Path>, meta: &T) -> anyhow::Result<()> {
    if let Some(p) = csv_path {
        let mut name = p.as_os_str().to_owned();
        name.push(".meta.json");
        write_json(meta, sink(Some(Path::new(&name)))?)?;
    }
    Ok(())
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

fn load_settings(args: &TrainArgs) -> anyhow::Result<MethodSettings> {
    let mut s: MethodSettings = match &args.config {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            serde_json::from_reader(BufReader::new(f)).with_context(|| format!("invalid settings {}", p.display()))?
        }
        None => MethodSettings::default(),
    };
    let g = &mut s.gnn;
    g.hidden_dim = args.hidden_dim.unwrap_or(g.hidden_dim);
    g.steps = args.steps.unwrap_or(g.steps);
    g.learning_rate = args.learning_rate.unwrap_or(g.learning_rate);
    g.epochs = args.epochs.unwrap_or(g.epochs);
    g.batch_size = args.batch_size.unwrap_or(g.batch_size);
    g.early_stop_patience = args.patience.unwrap_or(g.early_stop_patience);
    g.seed = args.seed;
    let f = &mut s.forest;
    f.tree_count = args.trees.unwrap_or(f.tree_count);
    if args.max_depth.is_some() {
        f.max_depth = args.max_depth;
    }
    f.seed = args.seed;
    Ok(s)
}

fn baseline_scorer(
    baseline: Baseline,
    k: Option<usize>,
    data: &Dataset,
) -> anyhow::Result<(Box<dyn GraphScorer>, String)> {
    Ok(match baseline {
        Baseline::Tc => (Box::new(TcScorer), "TC".to_owned()),
        Baseline::Kcore => {
            let k = match k {
                Some(k) => k,
                None => {
                    let (k, f1) = select_k(data)?;
                    eprintln!("selected k = {k} (validation F1 {f1:.4})");
                    k
                }
            };
            (Box::new(KCoreScorer { k }), format!("K-Core (k = {k})"))
        }
    })
}

fn checkpoint_scorer(path: &Path) -> anyhow::Result<(Box<dyn GraphScorer>, String)> {
    let c = load_checkpoint(path)?;
    Ok((c.scorer(), c.name().to_owned()))
}

fn run_gen(args: &GenArgs) -> anyhow::Result<()> {
    let spec = SyntheticSpec {
        size_min: args.size_min,
        size_max: args.size_max,
        p_second: args.p_second,
        beta_within: args.beta_within,
        beta_between: args.beta_between,
        n_graphs: args.n_graphs,
        seed: args.seed,
    };
    // The dataset header records the full generating spec and RNG.
    let dataset = generate_dataset(&spec)?;
    match &args.out {
        Some(p) => save_dataset(&dataset, p)?,
        None => icdetect_core::io::write_dataset(&dataset, sink(None)?)?,
    }
    Ok(())
}

fn run_import(args: &ImportArgs) -> anyhow::Result<()> {
    let dataset = load_ic_stratified(&args.train, &args.test, args.seed)?;
    match &args.out {
        Some(p) => save_dataset(&dataset, p)?,
        None => icdetect_core::io::write_dataset(&dataset, sink(None)?)?,
    }
    Ok(())
}

fn run_train(args: &TrainArgs) -> anyhow::Result<()> {
    let data = load_dataset(&args.data)?;
    let settings = load_settings(args)?;
    let checkpoint = match args.method {
        TrainMethod::MagGcn | TrainMethod::GcnE => {
            let variant = if args.method == TrainMethod::MagGcn {
                GnnVariant::Mag
            } else {
                GnnVariant::MeanOnly
            };
            let config = GnnConfig {
                variant,
                ..settings.gnn
            };
            for w in config.validate()? {
                warn(&w);
            }
            let (parameters, history) = gnn::train(&data, &config)?;
            eprintln!(
                "trained {} for {} epochs, best epoch {}",
                variant.display_name(),
                history.epochs.len(),
                history.best_epoch
            );
            Checkpoint::Gnn(GnnCheckpoint::new(config, parameters, history))
        }
        TrainMethod::Superpart => {
            let train = data.labeled(Split::Train)?;
            let config: ForestConfig = settings.forest;
            Checkpoint::Superpart(SuperPartCheckpoint::new(SuperPartModel::fit(&train, &config)?))
        }
    };
    save_checkpoint(&checkpoint, &args.out)?;
    Ok(())
}

fn run_score(args: &ScoreArgs, inv: &Invocation) -> anyhow::Result<()> {
    let data = load_dataset(&args.data)?;
    let (scorer, name) = match (&args.source.checkpoint, args.source.baseline) {
        (Some(p), _) => checkpoint_scorer(p)?,
        (None, Some(b)) => baseline_scorer(b, args.k, &data)?,
        (None, None) => unreachable!("clap enforces one scorer source"),
    };
    let scores = score_dataset(scorer.as_ref(), &data)?;
    write_scores_csv(&scores, sink(args.out.as_deref())?)?;
    #[derive(Serialize)]
    struct Meta<'a> {
        scorer: &'a str,
        rows: usize,
    }
    write_sidecar(
        args.out.as_deref(),
        &Stamped {
            invocation: inv,
            body: Meta {
                scorer: &name,
                rows: scores.len(),
            },
        },
    )
}

/// Attaches splits and labels from the dataset to externally produced scores.
fn join_scores(path: &Path, data: &Dataset) -> anyhow::Result<Vec<ScoredGraph>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let rows = read_scores_csv(BufReader::new(f))?;
    let by_id: std::collections::HashMap<&str, f64> = rows.iter().map(|r| (r.id.as_str(), r.score)).collect();
    data.entries
        .iter()
        .map(|e| {
            let score = *by_id
                .get(e.id.as_str())
                .with_context(|| format!("no score for graph `{}` in {}", e.id, path.display()))?;
            Ok(ScoredGraph {
                id: e.id.clone(),
                split: e.split,
                score,
                label: e.label,
            })
        })
        .collect()
}

fn run_eval(args: &EvalArgs, inv: &Invocation) -> anyhow::Result<()> {
    let data = load_dataset(&args.data)?;
    let src = &args.source;
    let (scores, name) = if let Some(p) = &src.scores {
        (join_scores(p, &data)?, format!("scores from {}", p.display()))
    } else {
        let (scorer, name) = match (&src.checkpoint, src.baseline) {
            (Some(p), _) => checkpoint_scorer(p)?,
            (None, Some(b)) => baseline_scorer(b, args.k, &data)?,
            (None, None) => unreachable!("clap enforces one scorer source"),
        };
        (score_dataset(scorer.as_ref(), &data)?, name)
    };
    let mut report = evaluate_scores(&name, args.seed, scores)?;
    if let Some(t) = args.threshold {
        if !(t.is_finite()) {
            bail!("threshold must be finite");
        }
        let clamped = t.clamp(0.0, 1.0);
        if clamped != t {
            warn(&format!("threshold {t} clamped to {clamped}"));
        }
        let pick = |split: Split| -> (Vec<f64>, Vec<bool>) {
            report
                .scores
                .iter()
                .filter(|s| s.split == split)
                .map(|s| (s.score, s.label.unwrap_or(false)))
                .unzip()
        };
        let (vs, vy) = pick(Split::Val);
        let (ts, ty) = pick(Split::Test);
        report.chosen_threshold = clamped;
        report.validation_f1 = f1_at(&vs, &vy, clamped)?;
        report.test_f1 = f1_at(&ts, &ty, clamped)?;
    }
    eprintln!(
        "{}: threshold {:.4}, validation F1 {:.4}, test F1 {:.4}, test PR-AUC {:.4}",
        report.scorer, report.chosen_threshold, report.validation_f1, report.test_f1, report.test_pr_auc
    );
    write_json(
        &Stamped {
            invocation: inv,
            body: &report,
        },
        sink(args.out.as_deref())?,
    )?;
    Ok(())
}

fn run_pr(args: &PrArgs, inv: &Invocation) -> anyhow::Result<()> {
    let f = File::open(&args.scores).with_context(|| format!("cannot open {}", args.scores.display()))?;
    let rows = read_scores_csv(BufReader::new(f))?;
    let (scores, labels): (Vec<f64>, Vec<bool>) = match (&args.data, args.split) {
        (Some(d), Some(split)) => {
            let data = load_dataset(d)?;
            join_scores(&args.scores, &data)?
                .into_iter()
                .filter(|s| s.split == Split::from(split))
                .map(|s| {
                    let y = s.label.with_context(|| format!("graph `{}` has no label", s.id))?;
                    Ok((s.score, y))
                })
                .collect::<anyhow::Result<Vec<_>>>()?
                .into_iter()
                .unzip()
        }
        _ => rows
            .iter()
            .map(|r| {
                let y = r.label.with_context(|| format!("graph `{}` has no label", r.id))?;
                Ok((r.score, y == 1))
            })
            .collect::<anyhow::Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
    };
    let curve = pr_curve(&scores, &labels)?;
    eprintln!("PR-AUC {:.4} over {} graphs", curve.auc, scores.len());
    write_pr_csv(&curve, sink(args.out.as_deref())?)?;
    #[derive(Serialize)]
    struct Meta {
        graphs: usize,
        auc: f64,
    }
    write_sidecar(
        args.out.as_deref(),
        &Stamped {
            invocation: inv,
            body: Meta {
                graphs: scores.len(),
                auc: curve.auc,
            },
        },
    )
}

fn run_bench(args: &BenchArgs, inv: &Invocation) -> anyhow::Result<()> {
    let mut config = match &args.config {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot open {}", p.display()))?;
            serde_json::from_reader(BufReader::new(f))
                .with_context(|| format!("invalid bench config {}", p.display()))?
        }
        None => BenchConfig::table1(),
    };
    if let Some(seeds) = &args.seeds {
        config.seeds = seeds.clone();
    }
    if let Some(n) = args.n_graphs {
        config.synthetic.n_graphs = n;
    }
    for w in config.settings.gnn.validate()? {
        warn(&w);
    }
    let results = run_bench_with_progress(&config, |row, cell| {
        eprintln!("{} | {}: {}", row.label(), cell.method.display_name(), cell.test_f1);
    })?;
    let mut out = sink(args.out.as_deref())?;
    out.write_all(results.to_markdown().as_bytes())?;
    writeln!(out, "\n<!-- invocation: {} -->", serde_json::to_string(inv)?)?;
    writeln!(out, "<!-- config: {} -->", serde_json::to_string(&config)?)?;
    out.flush()?;
    if let Some(p) = &args.json {
        write_json(
            &Stamped {
                invocation: inv,
                body: &results,
            },
            sink(Some(p))?,
        )?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let inv = invocation(&cli.command);
    match &cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Import(a) => run_import(a),
        Command::Train(a) => run_train(a),
        Command::Score(a) => run_score(a, &inv),
        Command::Eval(a) => run_eval(a, &inv),
        Command::Pr(a) => run_pr(a, &inv),
        Command::Bench(a) => run_bench(a, &inv),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
