use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use serde_json::json;

use referral_core::experiment::{
    run_passive_sweep, run_sweep, run_table, run_theory_grid, run_validate, stream_seed, write_ensemble_csv,
    write_sweep_csv, write_table_csv, write_validate_csv, ExperimentConfig, Mode, NetworkSource, DOMAIN_NETWORK,
};
use referral_core::theory::write_grid_csv;
use referral_core::{generate_bpa, load_edge_list, BpaParams, ExperimentError, LabelSpec};

const EXIT_CONFIG: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "referral", version, about = "Referral bias experiments on labeled networks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Args, Debug)]
struct Common {
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a BPA network and write its edge list, labels and alpha trace.
    Generate {
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Load an edge list and label table, then write the normalized network.
    Ingest {
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Label token of the minority (red) group.
        #[arg(long)]
        minority: Option<String>,
        /// Keep only this token besides the minority.
        #[arg(long)]
        majority: Option<String>,
        #[arg(long)]
        label_column: Option<usize>,
    },
    /// Replicated strategy simulations on one network.
    Table,
    /// Closed-form one- and two-hop shares over an (r, rho) sweep.
    Sweep,
    /// Passive gains over BPA ensembles.
    PassiveSweep,
    /// Full theory grid with fixed points and betas.
    TheoryGrid,
    /// Friendship paradox and glass-ceiling checks on BPA networks.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate { .. } => "generate",
            Command::Ingest { .. } => "ingest",
            Command::Table => "table",
            Command::Sweep => "sweep",
            Command::PassiveSweep => "passive-sweep",
            Command::TheoryGrid => "theory-grid",
            Command::Validate => "validate",
        }
    }

    fn mode(&self) -> Option<Mode> {
        match self {
            Command::Table => Some(Mode::Table),
            Command::Sweep => Some(Mode::Sweep),
            Command::PassiveSweep => Some(Mode::PassiveSweep),
            Command::TheoryGrid => Some(Mode::TheoryGrid),
            Command::Validate => Some(Mode::Validate),
            Command::Generate { .. } | Command::Ingest { .. } => None,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Run(ExperimentError),
    Validation,
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(msg) => Failure::Config(msg),
            ExperimentError::Bpa(e) => Failure::Config(e.to_string()),
            e => Failure::Run(e),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            error!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Run(e)) => {
            error!("{e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Validation) => {
            error!("validation failed");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let mut cfg = ExperimentConfig::from_path(path)?;
            if let Some(dir) = path.parent() {
                resolve_relative(&mut cfg, dir);
            }
            cfg
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(replicates) = common.replicates {
        cfg.replicates = replicates;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    Ok(cfg)
}

/// Network file paths in a config are relative to the config's directory.
fn resolve_relative(cfg: &mut ExperimentConfig, dir: &Path) {
    if let Some(NetworkSource::Files { edges, labels, .. }) = &mut cfg.network {
        for p in [edges, labels] {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
}

fn apply_command_flags(cfg: &mut ExperimentConfig, command: &Command) -> Result<(), Failure> {
    match command {
        Command::Generate { r, rho, n } => {
            let (cr, crho, cn, seed) = match &cfg.network {
                Some(NetworkSource::Bpa { r, rho, n, seed }) => (Some(*r), Some(*rho), Some(*n), *seed),
                _ => (None, None, None, None),
            };
            let pick = |flag: Option<f64>, from_cfg: Option<f64>, name: &str| {
                flag.or(from_cfg)
                    .ok_or_else(|| Failure::Config(format!("generate needs --{name} or a bpa [network]")))
            };
            cfg.network = Some(NetworkSource::Bpa {
                r: pick(*r, cr, "r")?,
                rho: pick(*rho, crho, "rho")?,
                n: n.or(cn)
                    .ok_or_else(|| Failure::Config("generate needs --n or a bpa [network]".into()))?,
                seed,
            });
        }
        Command::Ingest {
            edges,
            labels,
            minority,
            majority,
            label_column,
        } => {
            let current = match cfg.network.take() {
                Some(NetworkSource::Files {
                    edges,
                    labels,
                    minority,
                    majority,
                    label_column,
                }) => (Some(edges), Some(labels), Some(minority), majority, label_column),
                _ => (None, None, None, None, None),
            };
            let missing = |name: &str| Failure::Config(format!("ingest needs --{name} or a files [network]"));
            cfg.network = Some(NetworkSource::Files {
                edges: edges.clone().or(current.0).ok_or_else(|| missing("edges"))?,
                labels: labels.clone().or(current.1).ok_or_else(|| missing("labels"))?,
                minority: minority.clone().or(current.2).ok_or_else(|| missing("minority"))?,
                majority: majority.clone().or(current.3),
                label_column: label_column.or(current.4),
            });
        }
        _ => cfg.mode = command.mode(),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let started = Instant::now();
    let mut cfg = load_config(&cli.common)?;
    apply_command_flags(&mut cfg, &cli.command)?;
    cfg.validate()?;
    if let Some(threads) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            warn!("thread pool already initialized: {e}");
        }
    }
    let out = cfg.out_dir.clone();
    fs::create_dir_all(&out).map_err(|source| ExperimentError::Io {
        path: out.clone(),
        source,
    })?;
    info!("{} -> {}", cli.command.name(), out.display());

    let mut outputs = Vec::new();
    let mut passed = true;
    match &cli.command {
        Command::Generate { .. } => {
            let Some(NetworkSource::Bpa { r, rho, n, seed }) = cfg.network.clone() else {
                unreachable!()
            };
            let seed = seed.unwrap_or_else(|| stream_seed(cfg.seed, DOMAIN_NETWORK, 0));
            let (g, trace) = generate_bpa(&BpaParams::new(r, rho, n, seed).map_err(ExperimentError::from)?)
                .map_err(ExperimentError::from)?;
            outputs.push(write_with(&out, "edges.txt", |w| {
                g.write_edge_list(w).map_err(io_err("edges.txt"))
            })?);
            outputs.push(write_with(&out, "labels.csv", |w| {
                g.write_labels(w).map_err(io_err("labels.csv"))
            })?);
            outputs.push(write_with(&out, "alpha.csv", |w| {
                trace.write_csv(w).map_err(io_err("alpha.csv"))
            })?);
            info!(
                "{} nodes, seed {seed}, final alpha {:.6}",
                g.node_count(),
                trace.last().unwrap_or(f64::NAN)
            );
        }
        Command::Ingest { .. } => {
            let Some(NetworkSource::Files {
                edges,
                labels,
                minority,
                majority,
                label_column,
            }) = &cfg.network
            else {
                unreachable!()
            };
            let mut spec = LabelSpec::new(minority.clone());
            spec.majority = majority.clone();
            if let Some(col) = label_column {
                spec.label_column = *col;
            }
            let (g, report) = load_edge_list(edges, labels, &spec).map_err(ExperimentError::from)?;
            info!(
                "{} nodes, {} edges ({} duplicates, {} self loops, {} unlabeled-endpoint edges dropped)",
                report.nodes, report.edges, report.duplicates_dropped, report.self_loops_dropped, report.skipped_edges
            );
            outputs.push(write_with(&out, "edges.txt", |w| {
                g.write_edge_list(w).map_err(io_err("edges.txt"))
            })?);
            outputs.push(write_with(&out, "labels.csv", |w| {
                g.write_labels(w).map_err(io_err("labels.csv"))
            })?);
            let stats = g.group_stats().map_err(ExperimentError::from)?;
            outputs.push(write_with(&out, "stats.csv", |w| {
                writeln!(w, "nodes,edges,minority_ratio,cross_edge_fraction,rarefaction_index")
                    .and_then(|_| {
                        writeln!(
                            w,
                            "{},{},{},{},{}",
                            g.node_count(),
                            g.edge_count(),
                            stats.minority_ratio,
                            stats.cross_edge_fraction,
                            stats.rarefaction_index
                        )
                    })
                    .map_err(io_err("stats.csv"))
            })?);
        }
        Command::Table => {
            let report = run_table(&cfg)?;
            outputs.push(write_with(&out, "table.csv", |w| write_table_csv(w, &report))?);
        }
        Command::Sweep => {
            let rows = run_sweep(&cfg)?;
            outputs.push(write_with(&out, "sweep.csv", |w| write_sweep_csv(w, &rows))?);
        }
        Command::PassiveSweep => {
            let cells = run_passive_sweep(&cfg)?;
            outputs.push(write_with(&out, "passive_sweep.csv", |w| {
                write_ensemble_csv(w, &cells)
            })?);
        }
        Command::TheoryGrid => {
            let points = run_theory_grid(&cfg)?;
            outputs.push(write_with(&out, "theory_grid.csv", |w| {
                write_grid_csv(w, &points).map_err(ExperimentError::from)
            })?);
        }
        Command::Validate => {
            let report = run_validate(&cfg)?;
            for c in &report.paradox {
                info!(
                    "paradox {}->{}: edge mean {:.4}, node mean {:.4}, z {:.2}",
                    c.from.as_str(),
                    c.to.as_str(),
                    c.edge_mean,
                    c.node_mean,
                    c.z
                );
            }
            passed = report.passed();
            outputs.push(write_with(&out, "validate.csv", |w| write_validate_csv(w, &report))?);
        }
    }

    let manifest = json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "build": build_id(),
        "wall_time_secs": started.elapsed().as_secs_f64(),
        "passed": passed,
        "outputs": outputs,
        "config": cfg,
    });
    write_with(&out, "manifest.json", |mut w| {
        serde_json::to_writer_pretty(&mut w, &manifest)
            .map_err(std::io::Error::from)
            .and_then(|_| writeln!(w))
            .map_err(io_err("manifest.json"))
    })?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

fn build_id() -> String {
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    format!("{}-{} ({profile})", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

fn io_err(name: &'static str) -> impl Fn(std::io::Error) -> ExperimentError {
    move |source| ExperimentError::Io {
        path: PathBuf::from(name),
        source,
    }
}

/// Creates `dir/name`, hands a buffered writer to `f`, flushes, and returns the file name.
fn write_with(
    dir: &Path,
    name: &str,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<(), ExperimentError>,
) -> Result<String, Failure> {
    let path = dir.join(name);
    let io = |source| ExperimentError::Io {
        path: path.clone(),
        source,
    };
    let mut w = BufWriter::new(File::create(&path).map_err(io)?);
    f(&mut w)?;
    w.flush().map_err(io)?;
    info!("wrote {}", path.display());
    Ok(name.to_string())
}
