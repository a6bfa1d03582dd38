use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gossiplab::config::ExperimentConfig;
use gossiplab::experiment::{
    run_comparison, run_dissemination_experiment, run_model_experiment, run_occupancy_experiment,
};
use gossiplab::output::{
    comparison_coverage_csv, comparison_replication_csv, diff_csv, dissemination_csv, experiment_summary, fmt_g,
    matrix_table, occupancy_csv, occupancy_summary,
};
use gossiplab::pairwise::{build_matrix, ChannelParams, ModelProbabilities, ProtocolVariant};
use gossiplab::seed::{derive_seed, rng_from_seed, Stream};
use gossiplab::topology::TopologyKind;

/// Gossip protocol simulator and pairwise-model experiments.
#[derive(Debug, Parser)]
#[command(name = "gossiplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure P(11), P(10), P(01) after a lossless startup; report P_inx and P_drop.
    Occupancy(Experiment),
    /// Insert a fresh item and track replication and coverage with the protocol engine.
    Disseminate(Experiment),
    /// Track the observed item with the pairwise model.
    Model(Experiment),
    /// Run protocol and model ensembles and write their differences.
    Compare(Experiment),
    /// Print a 4x4 transition matrix with row sums.
    Matrix(MatrixArgs),
    /// Write a topology as an adjacency list.
    TopologyExport(TopologyArgs),
}

#[derive(Debug, Args)]
struct Experiment {
    /// key = value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Master seed (required here or in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for run-level parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct Overrides {
    /// paper or desk.
    #[arg(long)]
    profile: Option<String>,
    /// clique, grid or outdegree.
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    grid_side: Option<String>,
    #[arg(long)]
    outdegree: Option<String>,
    #[arg(long)]
    nodes: Option<String>,
    /// shuffle, newscast-pushpull, newscast-push, newscast-pull or cyclon.
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    p_loss: Option<String>,
    #[arg(long)]
    startup_rounds: Option<String>,
    #[arg(long)]
    measure_rounds: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    /// analytic or measured.
    #[arg(long)]
    p_drop_mode: Option<String>,
    #[arg(long)]
    p_inx: Option<String>,
    /// all or single.
    #[arg(long)]
    tracking: Option<String>,
    #[arg(long)]
    occupancy_runs: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(String, String)> {
        let fields = [
            ("profile", &self.profile),
            ("topology", &self.topology),
            ("grid_side", &self.grid_side),
            ("outdegree", &self.outdegree),
            ("nodes", &self.nodes),
            ("protocol", &self.protocol),
            ("n", &self.n),
            ("c", &self.c),
            ("s", &self.s),
            ("p_loss", &self.p_loss),
            ("startup_rounds", &self.startup_rounds),
            ("measure_rounds", &self.measure_rounds),
            ("runs", &self.runs),
            ("p_drop_mode", &self.p_drop_mode),
            ("p_inx", &self.p_inx),
            ("tracking", &self.tracking),
            ("occupancy_runs", &self.occupancy_runs),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_owned(), v.clone())))
            .collect()
    }
}

#[derive(Debug, Args)]
struct MatrixArgs {
    /// newscast-pushpull, newscast-push, newscast-pull, shuffle or shuffle-lossy.
    #[arg(long)]
    protocol: String,
    #[arg(long)]
    p_select: f64,
    #[arg(long)]
    p_drop: f64,
    #[arg(long, default_value_t = 0.0)]
    p_loss: f64,
}

#[derive(Debug, Args)]
struct TopologyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    overrides: Overrides,
}

fn load_config(path: Option<&Path>, seed: Option<u64>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?,
        None => String::new(),
    };
    let mut pairs = overrides.pairs();
    if let Some(seed) = seed {
        pairs.push(("seed".into(), seed.to_string()));
    }
    Ok(ExperimentConfig::parse(&text, &pairs)?)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn run_experiment(kind: &Command, args: &Experiment) -> Result<String> {
    let cfg = load_config(args.config.as_deref(), args.seed, &args.overrides)?;
    cfg.validate()?;
    cfg.master_seed()?;
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let out = &args.out;
    let head = format!("{} {} p_loss={}", cfg.topology_kind(), cfg.protocol, cfg.p_loss);
    Ok(match kind {
        Command::Occupancy(_) => {
            let report = run_occupancy_experiment(&cfg)?;
            let csv = write(out, "occupancy.csv", &occupancy_csv(&report.series))?;
            write(out, "report.txt", &occupancy_summary(&report))?;
            let p = &report.pooled;
            format!(
                "occupancy {head}: p11={} p10={} p01={}{} P_inx={} P_drop={} -> {}",
                fmt_g(p.p11),
                fmt_g(p.p10),
                fmt_g(p.p01),
                if p.low_confidence() { " (low confidence)" } else { "" },
                fmt_g(report.p_inx),
                fmt_g(report.p_drop),
                csv.display()
            )
        }
        Command::Disseminate(_) | Command::Model(_) => {
            let (report, name) = if matches!(kind, Command::Disseminate(_)) {
                (run_dissemination_experiment(&cfg)?, "dissemination.csv")
            } else {
                (run_model_experiment(&cfg)?, "model.csv")
            };
            let csv = write(out, name, &dissemination_csv(&report.ensemble))?;
            write(out, "report.txt", &experiment_summary(&report))?;
            let e = &report.ensemble;
            let tail = match (e.mean_replication.last(), e.mean_coverage.last()) {
                (Some(r), Some(c)) => format!("final mean replication {} coverage {}", fmt_g(*r), fmt_g(*c)),
                _ => "no successful runs".into(),
            };
            format!(
                "{} {head}: {}/{} runs successful, {tail} -> {}",
                report.engine.name(),
                e.successful_runs,
                e.total_runs,
                csv.display()
            )
        }
        Command::Compare(_) => {
            let report = run_comparison(&cfg)?;
            write(out, "replication.csv", &comparison_replication_csv(&report))?;
            write(out, "coverage.csv", &comparison_coverage_csv(&report))?;
            write(out, "diff.csv", &diff_csv(&report.comparison))?;
            let mut summary = experiment_summary(&report.protocol);
            let model = experiment_summary(&report.model);
            summary.extend(model.lines().filter(|l| l.starts_with('#')).map(|l| format!("{l}\n")));
            write(out, "report.txt", &summary)?;
            let (rep, cov) = report.comparison.within_std_fraction(10);
            format!(
                "compare {head}: {}/{} protocol and {}/{} model runs successful; rounds within 1 std: replication {:.1}%, coverage {:.1}% -> {}",
                report.protocol.ensemble.successful_runs,
                report.protocol.ensemble.total_runs,
                report.model.ensemble.successful_runs,
                report.model.ensemble.total_runs,
                100.0 * rep,
                100.0 * cov,
                out.display()
            )
        }
        Command::Matrix(_) | Command::TopologyExport(_) => unreachable!(),
    })
}

fn run_matrix(args: &MatrixArgs) -> Result<String> {
    let variant: ProtocolVariant = args.protocol.parse()?;
    let probs = ModelProbabilities::new(args.p_select, args.p_drop)?;
    let channel = ChannelParams::new(args.p_loss)?;
    if !variant.uses_channel() && args.p_loss > 0.0 {
        bail!("{variant} has no lossy channel; use shuffle-lossy or --p-loss 0");
    }
    let matrix = build_matrix(variant, probs, channel);
    Ok(format!(
        "{variant} p_select={} p_drop={} p_loss={}\n{}",
        fmt_g(args.p_select),
        fmt_g(args.p_drop),
        fmt_g(args.p_loss),
        matrix_table(&matrix).trim_end()
    ))
}

fn run_topology_export(args: &TopologyArgs) -> Result<String> {
    let cfg = load_config(args.config.as_deref(), args.seed, &args.overrides)?;
    let kind = cfg.topology_kind();
    if matches!(kind, TopologyKind::RandomOutdegree { .. }) && cfg.seed.is_none() {
        bail!("random topologies need a seed: pass --seed or set `seed` in the config");
    }
    let mut rng = rng_from_seed(derive_seed(cfg.seed.unwrap_or(0), Stream::Topology, 0));
    let text = kind.build(&mut rng)?.to_adjacency_text();
    match &args.out {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?;
            Ok(format!("{kind}: {} nodes -> {}", kind.node_count(), path.display()))
        }
        None => Ok(text.trim_end().to_owned()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Matrix(args) => run_matrix(args),
        Command::TopologyExport(args) => run_topology_export(args),
        Command::Occupancy(args) | Command::Disseminate(args) | Command::Model(args) | Command::Compare(args) => {
            run_experiment(&cli.command, args)
        }
    };
    match result {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
