//! Replicated experiments and their reports.
//!
//! # Seed fan-out
//!
//! Every random stream is a ChaCha8 generator seeded with the master seed and
//! switched to stream `(domain << 32) | index` (see [`stream_rng`]). Domains
//! separate networks, attribute draws and per-strategy simulation choices, and
//! `index` is the replicate (or network) number, so any single replicate can
//! be rerun in isolation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bpa::{generate_bpa, BpaParams};
use crate::error::ExperimentError;
use crate::graph::{Color, GroupStats, LabeledGraph};
use crate::loader::{load_edge_list, LabelSpec};
use crate::referral::{gain_ratios, simulate, GainLedger, NodeAttributes, StrategyKind};
use crate::stats::Summary;
use crate::theory::{default_r_grid, default_rho_grid, theory_grid, TheoryPoint};

pub const DOMAIN_NETWORK: u32 = 1;
pub const DOMAIN_ATTRIBUTES: u32 = 2;
/// Simulation streams use `DOMAIN_SIMULATION + strategy position`.
pub const DOMAIN_SIMULATION: u32 = 16;

/// Mean-of-ratios and ratio-of-sums differing by more than this are flagged.
pub const DIVERGENCE_FLAG: f64 = 0.005;

pub fn stream_rng(master: u64, domain: u32, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((u64::from(domain) << 32) | u64::from(index));
    rng
}

/// A 64-bit seed drawn from stream `(domain, index)`.
pub fn stream_seed(master: u64, domain: u32, index: u32) -> u64 {
    stream_rng(master, domain, index).random()
}

fn strategy_domain(kind: StrategyKind) -> u32 {
    let pos = StrategyKind::ALL
        .iter()
        .position(|&k| k == kind)
        .expect("listed strategy");
    DOMAIN_SIMULATION + pos as u32
}

fn replicate_index(i: usize) -> Result<u32, ExperimentError> {
    u32::try_from(i).map_err(|_| ExperimentError::Config(format!("index {i} exceeds the stream space")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Table,
    Sweep,
    PassiveSweep,
    TheoryGrid,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NetworkSource {
    Bpa {
        r: f64,
        rho: f64,
        n: usize,
        /// Defaults to a seed derived from the master seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    Files {
        edges: PathBuf,
        labels: PathBuf,
        minority: String,
        #[serde(default)]
        majority: Option<String>,
        #[serde(default)]
        label_column: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub r_values: Vec<f64>,
    /// Explicit rho values; when empty, `rho_step, 2 rho_step, ..., 1`.
    pub rho_values: Vec<f64>,
    pub rho_step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            r_values: vec![0.1, 0.2, 0.3, 0.4],
            rho_values: Vec::new(),
            rho_step: 0.01,
        }
    }
}

impl SweepConfig {
    pub fn rho_grid(&self) -> Result<Vec<f64>, ExperimentError> {
        if !self.rho_values.is_empty() {
            return Ok(self.rho_values.clone());
        }
        if !(self.rho_step > 0.0 && self.rho_step <= 1.0) {
            return Err(ExperimentError::Config(format!(
                "rho_step {} outside (0, 1]",
                self.rho_step
            )));
        }
        let steps = (1.0 / self.rho_step).round() as usize;
        Ok((1..=steps).map(|i| i as f64 / steps as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub r_values: Vec<f64>,
    pub rho_values: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            r_values: default_r_grid(),
            rho_values: default_rho_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub r_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    /// BPA networks per grid point.
    pub networks: usize,
    /// Nodes per network.
    pub n: usize,
    pub strategies: Vec<StrategyKind>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            r_values: vec![0.2],
            rho_values: (0..10).map(|i| (2 * i + 1) as f64 / 20.0).collect(),
            networks: 100,
            n: 10_000,
            strategies: StrategyKind::CONSTRAINED.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub r: f64,
    pub rho: f64,
    pub n: usize,
    pub networks: usize,
    pub top_k: Vec<usize>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            r: 0.2,
            rho: 0.3,
            n: 100_000,
            networks: 1,
            top_k: vec![10, 50, 100, 500],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    /// Report label; defaults to a description of the network source.
    pub name: Option<String>,
    pub seed: u64,
    pub replicates: usize,
    pub strategies: Vec<StrategyKind>,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub network: Option<NetworkSource>,
    pub sweep: SweepConfig,
    pub grid: GridConfig,
    pub passive: EnsembleConfig,
    pub validate: ValidateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: None,
            name: None,
            seed: 0,
            replicates: 100,
            strategies: StrategyKind::ALL.to_vec(),
            out_dir: PathBuf::from("out"),
            threads: None,
            network: None,
            sweep: SweepConfig::default(),
            grid: GridConfig::default(),
            passive: EnsembleConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ExperimentError> {
        toml::from_str(s).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.replicates == 0 {
            return Err(ExperimentError::Config("replicates must be at least 1".into()));
        }
        if self.mode == Some(Mode::Table) {
            if self.strategies.is_empty() {
                return Err(ExperimentError::Config("table mode needs at least one strategy".into()));
            }
            if self.network.is_none() {
                return Err(ExperimentError::Config("table mode needs a [network] section".into()));
            }
        }
        if let Some(NetworkSource::Bpa { r, rho, n, .. }) = &self.network {
            BpaParams::new(*r, *rho, *n, 0)?;
        }
        if self.mode == Some(Mode::PassiveSweep) {
            let p = &self.passive;
            if p.networks == 0 || p.strategies.is_empty() {
                return Err(ExperimentError::Config(
                    "passive sweep needs networks >= 1 and a strategy".into(),
                ));
            }
            for &r in &p.r_values {
                for &rho in &p.rho_values {
                    BpaParams::new(r, rho, p.n, 0)?;
                }
            }
        }
        if self.mode == Some(Mode::Validate) {
            let v = &self.validate;
            BpaParams::new(v.r, v.rho, v.n, 0)?;
            if v.networks == 0 {
                return Err(ExperimentError::Config("validate needs networks >= 1".into()));
            }
        }
        if self.threads == Some(0) {
            return Err(ExperimentError::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// Generates or loads the configured network; returns it with its label.
    pub fn load_network(&self) -> Result<(LabeledGraph, String), ExperimentError> {
        let source = self
            .network
            .as_ref()
            .ok_or_else(|| ExperimentError::Config("no [network] section".into()))?;
        let (graph, default_name) = match source {
            NetworkSource::Bpa { r, rho, n, seed } => {
                let seed = seed.unwrap_or_else(|| stream_seed(self.seed, DOMAIN_NETWORK, 0));
                let (g, _) = generate_bpa(&BpaParams::new(*r, *rho, *n, seed)?)?;
                (g, format!("bpa_r{r}_rho{rho}_n{n}"))
            }
            NetworkSource::Files {
                edges,
                labels,
                minority,
                majority,
                label_column,
            } => {
                let mut spec = LabelSpec::new(minority.clone());
                spec.majority = majority.clone();
                if let Some(col) = label_column {
                    spec.label_column = *col;
                }
                let (g, _) = load_edge_list(edges, labels, &spec)?;
                let stem = edges.file_stem().map(|s| s.to_string_lossy().into_owned());
                (g, stem.unwrap_or_else(|| "network".into()))
            }
        };
        Ok((graph, self.name.clone().unwrap_or(default_name)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainKind {
    Active,
    Passive,
}

impl GainKind {
    pub const BOTH: [GainKind; 2] = [GainKind::Active, GainKind::Passive];

    pub fn as_str(self) -> &'static str {
        match self {
            GainKind::Active => "active",
            GainKind::Passive => "passive",
        }
    }

    /// Red share of this gain kind at `hop`.
    pub fn share(self, ledger: &GainLedger, hop: usize) -> Option<f64> {
        let s = gain_ratios(ledger).hop(hop);
        match self {
            GainKind::Active => s.active,
            GainKind::Passive => s.passive,
        }
    }

    fn counts(self, ledger: &GainLedger, hop: usize) -> (u64, u64) {
        match self {
            GainKind::Active => (ledger.active(hop, Color::Red), ledger.active_total(hop)),
            GainKind::Passive => (ledger.passive(hop, Color::Red), ledger.passive_total(hop)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Annotation {
    Alleviates,
    Amplifies,
    Unchanged,
}

impl Annotation {
    /// Compares the distance of each hop's share to `baseline`.
    pub fn classify(hop1: f64, hop2: f64, baseline: f64) -> Self {
        let (d1, d2) = ((hop1 - baseline).abs(), (hop2 - baseline).abs());
        if d2 < d1 {
            Annotation::Alleviates
        } else if d2 > d1 {
            Annotation::Amplifies
        } else {
            Annotation::Unchanged
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Annotation::Alleviates => "alleviates",
            Annotation::Amplifies => "amplifies",
            Annotation::Unchanged => "unchanged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub dataset: String,
    pub strategy: StrategyKind,
    pub hop: usize,
    pub gain: GainKind,
    /// Mean over replicates of the per-replicate red share.
    pub mean: f64,
    pub se: f64,
    /// Replicates with a defined share at this hop.
    pub replicates: usize,
    /// Red count summed over replicates divided by the summed total.
    pub ratio_of_sums: f64,
    /// `|mean - ratio_of_sums| > DIVERGENCE_FLAG`.
    pub divergent: bool,
    /// Hop-2 rows only: relative to the hop-1 share and the population share.
    pub annotation: Option<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub dataset: String,
    pub stats: GroupStats,
    pub rows: Vec<ReportRow>,
}

impl TableReport {
    pub fn row(&self, strategy: StrategyKind, hop: usize, gain: GainKind) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy && r.hop == hop && r.gain == gain)
    }
}

/// Runs every strategy on `replicates` independent attribute draws.
///
/// Replicate `i` draws attributes from stream `(DOMAIN_ATTRIBUTES, i)`, shared
/// by all strategies, and simulation choices from the strategy's own domain.
pub fn simulate_replicates(
    g: &LabeledGraph,
    strategies: &[StrategyKind],
    replicates: usize,
    seed: u64,
) -> Result<Vec<Vec<GainLedger>>, ExperimentError> {
    let per_replicate: Vec<Vec<GainLedger>> = (0..replicates)
        .into_par_iter()
        .map(|i| -> Result<Vec<GainLedger>, ExperimentError> {
            let idx = replicate_index(i)?;
            let attrs = NodeAttributes::sample(g.node_count(), &mut stream_rng(seed, DOMAIN_ATTRIBUTES, idx));
            strategies
                .iter()
                .map(|&kind| {
                    let mut rng = stream_rng(seed, strategy_domain(kind), idx);
                    Ok(simulate(kind, g, &attrs, &mut rng)?)
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    // Transpose to strategy-major.
    Ok((0..strategies.len())
        .map(|s| per_replicate.iter().map(|r| r[s]).collect())
        .collect())
}

fn summarize(dataset: &str, strategy: StrategyKind, hop: usize, gain: GainKind, ledgers: &[GainLedger]) -> ReportRow {
    let shares: Vec<f64> = ledgers.iter().filter_map(|l| gain.share(l, hop)).collect();
    let s = Summary::of(&shares);
    let (red, total) = ledgers.iter().fold((0u64, 0u64), |(r, t), l| {
        let (a, b) = gain.counts(l, hop);
        (r + a, t + b)
    });
    let ratio_of_sums = if total > 0 { red as f64 / total as f64 } else { f64::NAN };
    ReportRow {
        dataset: dataset.to_string(),
        strategy,
        hop,
        gain,
        mean: s.mean,
        se: s.se,
        replicates: s.n,
        ratio_of_sums,
        divergent: (s.mean - ratio_of_sums).abs() > DIVERGENCE_FLAG,
        annotation: None,
    }
}

/// Table rows for one network.
pub fn table_report(
    g: &LabeledGraph,
    dataset: &str,
    strategies: &[StrategyKind],
    replicates: usize,
    seed: u64,
) -> Result<TableReport, ExperimentError> {
    let stats = g.group_stats()?;
    let ledgers = simulate_replicates(g, strategies, replicates, seed)?;
    let mut rows = Vec::new();
    for (&kind, runs) in strategies.iter().zip(&ledgers) {
        for gain in GainKind::BOTH {
            let hop1 = summarize(dataset, kind, 1, gain, runs);
            let mut hop2 = summarize(dataset, kind, 2, gain, runs);
            if hop1.replicates > 0 && hop2.replicates > 0 {
                hop2.annotation = Some(Annotation::classify(hop1.mean, hop2.mean, stats.minority_ratio));
            }
            rows.push(hop1);
            rows.push(hop2);
        }
    }
    Ok(TableReport {
        dataset: dataset.to_string(),
        stats,
        rows,
    })
}

pub fn run_table(cfg: &ExperimentConfig) -> Result<TableReport, ExperimentError> {
    cfg.validate()?;
    let (g, name) = cfg.load_network()?;
    table_report(&g, &name, &cfg.strategies, cfg.replicates, cfg.seed)
}

fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else {
        format!("{v:.6}")
    }
}

/// Group statistics as `#` comment lines, then one CSV row per
/// (strategy, gain, hop).
pub fn write_table_csv<W: Write>(mut w: W, report: &TableReport) -> Result<(), ExperimentError> {
    let io = |source| ExperimentError::Io {
        path: PathBuf::from("<table>"),
        source,
    };
    writeln!(w, "# dataset={}", report.dataset).map_err(io)?;
    writeln!(w, "# minority_ratio={}", fmt_f(report.stats.minority_ratio)).map_err(io)?;
    writeln!(w, "# cross_edge_fraction={}", fmt_f(report.stats.cross_edge_fraction)).map_err(io)?;
    writeln!(w, "# rarefaction_index={}", fmt_f(report.stats.rarefaction_index)).map_err(io)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "dataset",
        "strategy",
        "hop",
        "gain",
        "red_share_mean",
        "red_share_se",
        "replicates",
        "ratio_of_sums",
        "divergent",
        "annotation",
    ])?;
    for row in &report.rows {
        out.write_record([
            row.dataset.clone(),
            row.strategy.to_string(),
            row.hop.to_string(),
            row.gain.as_str().to_string(),
            fmt_f(row.mean),
            fmt_f(row.se),
            row.replicates.to_string(),
            fmt_f(row.ratio_of_sums),
            row.divergent.to_string(),
            row.annotation.map(|a| a.as_str().to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush().map_err(io)?;
    Ok(())
}

/// One point of the active-gain threshold curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub rho: f64,
    pub one_hop_share: f64,
    pub two_hop_share: f64,
    pub threshold: bool,
    pub margin: f64,
}

impl From<&TheoryPoint> for SweepRow {
    fn from(p: &TheoryPoint) -> Self {
        Self {
            r: p.r,
            rho: p.rho,
            one_hop_share: p.one_hop_share,
            two_hop_share: p.two_hop_share,
            threshold: p.threshold,
            margin: p.margin,
        }
    }
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    let rhos = cfg.sweep.rho_grid()?;
    Ok(theory_grid(&cfg.sweep.r_values, &rhos)?
        .iter()
        .map(SweepRow::from)
        .collect())
}

pub fn run_theory_grid(cfg: &ExperimentConfig) -> Result<Vec<TheoryPoint>, ExperimentError> {
    Ok(theory_grid(&cfg.grid.r_values, &cfg.grid.rho_values)?)
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["r", "rho", "one_hop_share", "two_hop_share", "threshold", "margin"])?;
    for row in rows {
        out.write_record([
            row.r.to_string(),
            row.rho.to_string(),
            row.one_hop_share.to_string(),
            row.two_hop_share.to_string(),
            row.threshold.to_string(),
            row.margin.to_string(),
        ])?;
    }
    out.flush().map_err(|source| ExperimentError::Io {
        path: PathBuf::from("<sweep>"),
        source,
    })?;
    Ok(())
}

/// Per-network results for one BPA grid point.
#[derive(Debug, Clone)]
pub struct EnsemblePoint {
    pub r: f64,
    pub rho: f64,
    pub strategies: Vec<StrategyKind>,
    /// `ledgers[s][i]`: strategy `s` on network `i`.
    pub ledgers: Vec<Vec<GainLedger>>,
    /// Realized minority fraction of each network.
    pub minority_fractions: Vec<f64>,
}

/// Red-share statistics across the networks of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleCell {
    pub r: f64,
    pub rho: f64,
    pub strategy: StrategyKind,
    pub gain: GainKind,
    pub hop1: Summary,
    pub hop2: Summary,
    /// Per network `|hop1 - p| - |hop2 - p|` with `p` the network's realized
    /// minority fraction; positive when hop 2 is closer to `p`.
    pub closer: Summary,
    /// Per network `hop2 - hop1`.
    pub shift: Summary,
    /// Per network red/blue gain ratio at hop 1 and hop 2.
    pub ratio1: Summary,
    pub ratio2: Summary,
}

impl EnsemblePoint {
    pub fn cell(&self, strategy: StrategyKind, gain: GainKind) -> Option<EnsembleCell> {
        let s = self.strategies.iter().position(|&k| k == strategy)?;
        let mut h1 = Vec::new();
        let mut h2 = Vec::new();
        let mut closer = Vec::new();
        let mut shift = Vec::new();
        for (l, &pop) in self.ledgers[s].iter().zip(&self.minority_fractions) {
            if let (Some(a), Some(b)) = (gain.share(l, 1), gain.share(l, 2)) {
                h1.push(a);
                h2.push(b);
                closer.push((a - pop).abs() - (b - pop).abs());
                shift.push(b - a);
            }
        }
        let ratio = |xs: &[f64]| Summary::of_iter(xs.iter().filter(|&&x| x < 1.0).map(|&x| x / (1.0 - x)));
        Some(EnsembleCell {
            r: self.r,
            rho: self.rho,
            strategy,
            gain,
            hop1: Summary::of(&h1),
            hop2: Summary::of(&h2),
            closer: Summary::of(&closer),
            shift: Summary::of(&shift),
            ratio1: ratio(&h1),
            ratio2: ratio(&h2),
        })
    }
}

/// Generates `networks` BPA graphs at `(r, rho)` and runs each strategy once on
/// each, with one attribute draw per network.
///
/// Network `i` of grid point `point` uses index `point * networks + i` in every
/// stream domain.
pub fn run_bpa_ensemble(
    r: f64,
    rho: f64,
    n: usize,
    networks: usize,
    strategies: &[StrategyKind],
    seed: u64,
    point: usize,
) -> Result<EnsemblePoint, ExperimentError> {
    let results: Vec<(f64, Vec<GainLedger>)> = (0..networks)
        .into_par_iter()
        .map(|i| -> Result<_, ExperimentError> {
            let idx = replicate_index(point * networks + i)?;
            let params = BpaParams::new(r, rho, n, stream_seed(seed, DOMAIN_NETWORK, idx))?;
            let (g, _) = generate_bpa(&params)?;
            let attrs = NodeAttributes::sample(n, &mut stream_rng(seed, DOMAIN_ATTRIBUTES, idx));
            let ledgers = strategies
                .iter()
                .map(|&kind| {
                    Ok(simulate(
                        kind,
                        &g,
                        &attrs,
                        &mut stream_rng(seed, strategy_domain(kind), idx),
                    )?)
                })
                .collect::<Result<Vec<_>, ExperimentError>>()?;
            let red = g.count_color(Color::Red) as f64 / n as f64;
            Ok((red, ledgers))
        })
        .collect::<Result<_, _>>()?;
    Ok(EnsemblePoint {
        r,
        rho,
        strategies: strategies.to_vec(),
        ledgers: (0..strategies.len())
            .map(|s| results.iter().map(|(_, l)| l[s]).collect())
            .collect(),
        minority_fractions: results.iter().map(|(f, _)| *f).collect(),
    })
}

/// Passive-gain cells for every `(r, rho, strategy)` of the configured grid.
pub fn run_passive_sweep(cfg: &ExperimentConfig) -> Result<Vec<EnsembleCell>, ExperimentError> {
    cfg.validate()?;
    let p = &cfg.passive;
    let mut cells = Vec::new();
    let mut point = 0;
    for &r in &p.r_values {
        for &rho in &p.rho_values {
            let ens = run_bpa_ensemble(r, rho, p.n, p.networks, &p.strategies, cfg.seed, point)?;
            point += 1;
            cells.extend(p.strategies.iter().filter_map(|&k| ens.cell(k, GainKind::Passive)));
        }
    }
    Ok(cells)
}

pub fn write_ensemble_csv<W: Write>(w: W, cells: &[EnsembleCell]) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "r",
        "rho",
        "strategy",
        "gain",
        "hop1_mean",
        "hop1_se",
        "hop2_mean",
        "hop2_se",
        "closer_mean",
        "closer_se",
        "networks",
    ])?;
    for c in cells {
        out.write_record([
            c.r.to_string(),
            c.rho.to_string(),
            c.strategy.to_string(),
            c.gain.as_str().to_string(),
            fmt_f(c.hop1.mean),
            fmt_f(c.hop1.se),
            fmt_f(c.hop2.mean),
            fmt_f(c.hop2.se),
            fmt_f(c.closer.mean),
            fmt_f(c.closer.se),
            c.hop1.n.to_string(),
        ])?;
    }
    out.flush().map_err(|source| ExperimentError::Io {
        path: PathBuf::from("<passive>"),
        source,
    })?;
    Ok(())
}

/// One color pair of the friendship-paradox check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParadoxCheck {
    /// Color of the near endpoint.
    pub from: Color,
    /// Color of the far endpoint whose degree is averaged.
    pub to: Color,
    /// Mean degree of the `to` endpoint over `(from, to)` edge ends.
    pub edge_mean: f64,
    /// Mean degree of a `to` node.
    pub node_mean: f64,
    pub diff: f64,
    pub se: f64,
    /// `diff / se`.
    pub z: f64,
    /// `diff >= -3 se`.
    pub holds: bool,
}

/// Pools every graph and compares edge-end and node degree means per color
/// pair. An edge `{u, v}` contributes the end `v` to pair
/// `(color(u), color(v))` and the end `u` to `(color(v), color(u))`.
pub fn friendship_paradox(graphs: &[LabeledGraph]) -> Vec<ParadoxCheck> {
    let mut checks = Vec::with_capacity(4);
    for from in Color::ALL {
        for to in Color::ALL {
            let mut ends = Vec::new();
            let mut nodes = Vec::new();
            for g in graphs {
                for (u, v) in g.edges() {
                    for (a, b) in [(u, v), (v, u)] {
                        if g.color(a) == from && g.color(b) == to {
                            ends.push(g.degree(b) as f64);
                        }
                    }
                }
                nodes.extend(g.nodes().filter(|&u| g.color(u) == to).map(|u| g.degree(u) as f64));
            }
            let (e, d) = (Summary::of(&ends), Summary::of(&nodes));
            let diff = e.mean - d.mean;
            let se = (e.se.powi(2) + d.se.powi(2)).sqrt();
            let z = if se > 0.0 {
                diff / se
            } else if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            };
            checks.push(ParadoxCheck {
                from,
                to,
                edge_mean: e.mean,
                node_mean: d.mean,
                diff,
                se,
                z,
                holds: diff >= -3.0 * se,
            });
        }
    }
    checks
}

/// Red-to-blue count among the `k` highest-degree nodes (ties by node id);
/// `None` when no blue node makes the cut.
pub fn glass_ceiling(g: &LabeledGraph, k: usize) -> Option<f64> {
    let mut order: Vec<_> = g.nodes().collect();
    order.sort_by_key(|&u| (std::cmp::Reverse(g.degree(u)), u));
    let top = &order[..k.min(order.len())];
    let red = top.iter().filter(|&&u| g.color(u) == Color::Red).count();
    let blue = top.len() - red;
    (blue > 0).then(|| red as f64 / blue as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateReport {
    pub r: f64,
    pub rho: f64,
    pub n: usize,
    pub networks: usize,
    pub paradox: Vec<ParadoxCheck>,
    /// `(k, top-k red/blue ratio)` for the first network.
    pub glass_ceiling: Vec<(usize, Option<f64>)>,
}

impl ValidateReport {
    pub fn passed(&self) -> bool {
        self.paradox.iter().all(|c| c.holds)
    }
}

pub fn run_validate(cfg: &ExperimentConfig) -> Result<ValidateReport, ExperimentError> {
    cfg.validate()?;
    let v = &cfg.validate;
    let graphs = (0..v.networks)
        .into_par_iter()
        .map(|i| -> Result<LabeledGraph, ExperimentError> {
            let seed = stream_seed(cfg.seed, DOMAIN_NETWORK, replicate_index(i)?);
            Ok(generate_bpa(&BpaParams::new(v.r, v.rho, v.n, seed)?)?.0)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ValidateReport {
        r: v.r,
        rho: v.rho,
        n: v.n,
        networks: v.networks,
        paradox: friendship_paradox(&graphs),
        glass_ceiling: v.top_k.iter().map(|&k| (k, glass_ceiling(&graphs[0], k))).collect(),
    })
}

pub fn write_validate_csv<W: Write>(w: W, report: &ValidateReport) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["check", "from", "to", "k", "lhs", "rhs", "diff", "se", "z", "pass"])?;
    for c in &report.paradox {
        out.write_record([
            "friendship_paradox".to_string(),
            c.from.to_string(),
            c.to.to_string(),
            String::new(),
            fmt_f(c.edge_mean),
            fmt_f(c.node_mean),
            fmt_f(c.diff),
            fmt_f(c.se),
            fmt_f(c.z),
            c.holds.to_string(),
        ])?;
    }
    for &(k, ratio) in &report.glass_ceiling {
        out.write_record([
            "glass_ceiling".to_string(),
            "red".into(),
            "blue".into(),
            k.to_string(),
            ratio.map(fmt_f).unwrap_or_else(|| "NA".into()),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    out.flush().map_err(|source| ExperimentError::Io {
        path: PathBuf::from("<validate>"),
        source,
    })?;
    Ok(())
}
