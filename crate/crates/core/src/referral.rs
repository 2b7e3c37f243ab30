//! Multi-hop referral strategies and gain accounting.
//!
//! Every node originates one referral chain per run. A success at hop `k`
//! credits an *active* gain to the originator's color and a *passive* gain to
//! the hop-`k` recipient's color. Chains never go past hop 2.
//!
//! * `Random`: forward to a uniformly chosen neighbor; on acceptance the
//!   recipient forwards once more the same way.
//! * `PopularityDriven`: as `Random`, but always pick a maximum-degree neighbor.
//! * `AcceptanceDriven`: pick the neighbor with the highest acceptance rate. An
//!   acceptance ends the chain at hop 1; a rejection makes that neighbor pass
//!   the referral on to a uniformly chosen neighbor of its own.
//! * `Linear`: unconstrained. `u` shares with every neighbor `v` with
//!   `t_u > a_v`, and each such `v` does the same with its own threshold.
//!
//! Ties in degree or acceptance rate are broken uniformly at random.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ReferralError;
use crate::graph::{Color, LabeledGraph, NodeId};

/// Simulated chains stop after this many hops.
pub const MAX_HOPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "popularity", alias = "popularity-driven")]
    PopularityDriven,
    #[serde(rename = "acceptance", alias = "acceptance-driven")]
    AcceptanceDriven,
    #[serde(rename = "linear")]
    Linear,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Random,
        StrategyKind::PopularityDriven,
        StrategyKind::AcceptanceDriven,
        StrategyKind::Linear,
    ];
    pub const CONSTRAINED: [StrategyKind; 3] = [
        StrategyKind::Random,
        StrategyKind::PopularityDriven,
        StrategyKind::AcceptanceDriven,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::PopularityDriven => "popularity",
            StrategyKind::AcceptanceDriven => "acceptance",
            StrategyKind::Linear => "linear",
        }
    }

    pub fn is_constrained(self) -> bool {
        self != StrategyKind::Linear
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = ReferralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(StrategyKind::Random),
            "popularity" | "popularity-driven" => Ok(StrategyKind::PopularityDriven),
            "acceptance" | "acceptance-driven" => Ok(StrategyKind::AcceptanceDriven),
            "linear" => Ok(StrategyKind::Linear),
            other => Err(ReferralError::UnknownStrategy(other.to_string())),
        }
    }
}

/// Per-node acceptance rate `a` and sharing threshold `t`, both in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAttributes {
    acceptance: Vec<f64>,
    threshold: Vec<f64>,
}

impl NodeAttributes {
    pub fn new(acceptance: Vec<f64>, threshold: Vec<f64>) -> Result<Self, ReferralError> {
        if acceptance.len() != threshold.len() {
            return Err(ReferralError::AttributeLength {
                expected: acceptance.len(),
                got: threshold.len(),
            });
        }
        for (name, values) in [("a", &acceptance), ("t", &threshold)] {
            if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(ReferralError::AttributeRange { name, node, value });
            }
        }
        Ok(Self { acceptance, threshold })
    }

    /// i.i.d. `Uniform(0, 1)` draws: all acceptance rates, then all thresholds.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let acceptance = (0..n).map(|_| rng.random::<f64>()).collect();
        let threshold = (0..n).map(|_| rng.random::<f64>()).collect();
        Self { acceptance, threshold }
    }

    #[inline]
    pub fn acceptance(&self, u: NodeId) -> f64 {
        self.acceptance[u as usize]
    }

    #[inline]
    pub fn threshold(&self, u: NodeId) -> f64 {
        self.threshold[u as usize]
    }

    pub fn acceptance_rates(&self) -> &[f64] {
        &self.acceptance
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.threshold
    }

    pub fn len(&self) -> usize {
        self.acceptance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acceptance.is_empty()
    }

    fn check(&self, g: &LabeledGraph) -> Result<(), ReferralError> {
        if self.len() != g.node_count() {
            return Err(ReferralError::AttributeLength {
                expected: g.node_count(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

pub fn sample_attributes(g: &LabeledGraph, seed: u64) -> NodeAttributes {
    NodeAttributes::sample(g.node_count(), &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Active and passive gain counts per hop and color.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GainLedger {
    active: [[u64; 2]; MAX_HOPS],
    passive: [[u64; 2]; MAX_HOPS],
    /// Originators skipped because they have no neighbors.
    pub skipped: u64,
}

impl GainLedger {
    /// `hop` is 1-based.
    pub fn active(&self, hop: usize, color: Color) -> u64 {
        self.active[hop - 1][color.index()]
    }

    pub fn passive(&self, hop: usize, color: Color) -> u64 {
        self.passive[hop - 1][color.index()]
    }

    pub fn active_total(&self, hop: usize) -> u64 {
        self.active[hop - 1].iter().sum()
    }

    pub fn passive_total(&self, hop: usize) -> u64 {
        self.passive[hop - 1].iter().sum()
    }

    /// Records one success at `hop`.
    #[inline]
    pub fn credit(&mut self, hop: usize, originator: Color, recipient: Color) {
        self.active[hop - 1][originator.index()] += 1;
        self.passive[hop - 1][recipient.index()] += 1;
    }

    pub fn merge(&mut self, other: &GainLedger) {
        for h in 0..MAX_HOPS {
            for c in 0..2 {
                self.active[h][c] += other.active[h][c];
                self.passive[h][c] += other.passive[h][c];
            }
        }
        self.skipped += other.skipped;
    }
}

/// Red shares at one hop; `None` when the hop has no gains at all.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HopShares {
    pub active: Option<f64>,
    pub passive: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GainShares {
    pub hops: [HopShares; MAX_HOPS],
}

impl GainShares {
    pub fn hop(&self, hop: usize) -> HopShares {
        self.hops[hop - 1]
    }
}

fn red_share(red: u64, blue: u64) -> Option<f64> {
    let total = red + blue;
    (total > 0).then(|| red as f64 / total as f64)
}

pub fn gain_ratios(ledger: &GainLedger) -> GainShares {
    let mut out = GainShares::default();
    for (h, slot) in out.hops.iter_mut().enumerate() {
        slot.active = red_share(ledger.active[h][0], ledger.active[h][1]);
        slot.passive = red_share(ledger.passive[h][0], ledger.passive[h][1]);
    }
    out
}

/// Neighbors attaining the maximum of a per-node key, in flat CSR layout.
struct ArgmaxNeighbors {
    offsets: Vec<usize>,
    flat: Vec<NodeId>,
}

impl ArgmaxNeighbors {
    fn build<K: PartialOrd + Copy>(g: &LabeledGraph, key: impl Fn(NodeId) -> K) -> Self {
        let mut offsets = Vec::with_capacity(g.node_count() + 1);
        let mut flat = Vec::with_capacity(g.node_count());
        offsets.push(0);
        for u in g.nodes() {
            let nbrs = g.neighbors(u);
            if let Some(best) = nbrs.iter().map(|&v| key(v)).reduce(|a, b| if b > a { b } else { a }) {
                flat.extend(nbrs.iter().copied().filter(|&v| key(v) == best));
            }
            offsets.push(flat.len());
        }
        Self { offsets, flat }
    }

    #[inline]
    fn pick<R: Rng + ?Sized>(&self, u: NodeId, rng: &mut R) -> Option<NodeId> {
        let set = &self.flat[self.offsets[u as usize]..self.offsets[u as usize + 1]];
        pick_uniform(set, rng)
    }
}

#[inline]
fn pick_uniform<R: Rng + ?Sized>(set: &[NodeId], rng: &mut R) -> Option<NodeId> {
    match set.len() {
        0 => None,
        1 => Some(set[0]),
        n => Some(set[rng.random_range(0..n)]),
    }
}

#[inline]
fn accepts<R: Rng + ?Sized>(attrs: &NodeAttributes, v: NodeId, rng: &mut R) -> bool {
    rng.random::<f64>() < attrs.acceptance(v)
}

/// Random and popularity-driven chains: select, accept, select again, accept.
fn forward_twice<R, S>(g: &LabeledGraph, attrs: &NodeAttributes, rng: &mut R, select: S) -> GainLedger
where
    R: Rng + ?Sized,
    S: Fn(NodeId, &mut R) -> Option<NodeId>,
{
    let mut ledger = GainLedger::default();
    for u in g.nodes() {
        let Some(v) = select(u, rng) else {
            ledger.skipped += 1;
            continue;
        };
        let origin = g.color(u);
        if !accepts(attrs, v, rng) {
            continue;
        }
        ledger.credit(1, origin, g.color(v));
        let Some(w) = select(v, rng) else { continue };
        if accepts(attrs, w, rng) {
            ledger.credit(2, origin, g.color(w));
        }
    }
    if ledger.skipped > 0 {
        debug!("skipped {} isolated originators", ledger.skipped);
    }
    ledger
}

pub fn simulate_random<R: Rng + ?Sized>(
    g: &LabeledGraph,
    attrs: &NodeAttributes,
    rng: &mut R,
) -> Result<GainLedger, ReferralError> {
    attrs.check(g)?;
    Ok(forward_twice(g, attrs, rng, |u, rng| pick_uniform(g.neighbors(u), rng)))
}

pub fn simulate_popularity<R: Rng + ?Sized>(
    g: &LabeledGraph,
    attrs: &NodeAttributes,
    rng: &mut R,
) -> Result<GainLedger, ReferralError> {
    attrs.check(g)?;
    let hubs = ArgmaxNeighbors::build(g, |v| g.degree(v));
    Ok(forward_twice(g, attrs, rng, |u, rng| hubs.pick(u, rng)))
}

pub fn simulate_acceptance<R: Rng + ?Sized>(
    g: &LabeledGraph,
    attrs: &NodeAttributes,
    rng: &mut R,
) -> Result<GainLedger, ReferralError> {
    attrs.check(g)?;
    let eager = ArgmaxNeighbors::build(g, |v| attrs.acceptance(v));
    let mut ledger = GainLedger::default();
    for u in g.nodes() {
        let Some(v) = eager.pick(u, rng) else {
            ledger.skipped += 1;
            continue;
        };
        let origin = g.color(u);
        if accepts(attrs, v, rng) {
            ledger.credit(1, origin, g.color(v));
            continue;
        }
        let Some(w) = pick_uniform(g.neighbors(v), rng) else {
            continue;
        };
        if accepts(attrs, w, rng) {
            ledger.credit(2, origin, g.color(w));
        }
    }
    Ok(ledger)
}

/// Linear strategy up to `hops` (1 or 2).
///
/// Hop-2 recipients are the nodes at distance exactly 2 from the originator
/// that get the referral from at least one hop-1 recipient; each is counted
/// once per originator. On a tree this is every length-2 share chain that does
/// not bounce back to the originator.
pub fn simulate_linear(g: &LabeledGraph, attrs: &NodeAttributes, hops: usize) -> Result<GainLedger, ReferralError> {
    attrs.check(g)?;
    if hops == 0 || hops > MAX_HOPS {
        return Err(ReferralError::Hops(hops));
    }
    let mut ledger = GainLedger::default();
    // mark[x] == 2e: originator or its neighbor; 2e + 1: already reached at hop 2.
    let mut mark = vec![0u64; g.node_count()];
    let mut epoch = 0u64;
    for u in g.nodes() {
        let origin = g.color(u);
        let t_u = attrs.threshold(u);
        for &v in g.neighbors(u) {
            if t_u > attrs.acceptance(v) {
                ledger.credit(1, origin, g.color(v));
            }
        }
        if hops < 2 {
            continue;
        }
        epoch += 1;
        let near = 2 * epoch;
        let reached = near + 1;
        mark[u as usize] = near;
        for &v in g.neighbors(u) {
            mark[v as usize] = near;
        }
        for &v in g.neighbors(u) {
            if t_u <= attrs.acceptance(v) {
                continue;
            }
            let t_v = attrs.threshold(v);
            for &w in g.neighbors(v) {
                let m = &mut mark[w as usize];
                if *m == near || *m == reached || t_v <= attrs.acceptance(w) {
                    continue;
                }
                *m = reached;
                ledger.credit(2, origin, g.color(w));
            }
        }
    }
    Ok(ledger)
}

/// Runs one strategy; the linear strategy ignores `rng` and covers two hops.
pub fn simulate<R: Rng + ?Sized>(
    kind: StrategyKind,
    g: &LabeledGraph,
    attrs: &NodeAttributes,
    rng: &mut R,
) -> Result<GainLedger, ReferralError> {
    match kind {
        StrategyKind::Random => simulate_random(g, attrs, rng),
        StrategyKind::PopularityDriven => simulate_popularity(g, attrs, rng),
        StrategyKind::AcceptanceDriven => simulate_acceptance(g, attrs, rng),
        StrategyKind::Linear => simulate_linear(g, attrs, MAX_HOPS),
    }
}

/// One ledger plus the run it came from, for CSV export.
#[derive(Debug, Clone, Copy)]
pub struct LedgerRecord {
    pub strategy: StrategyKind,
    pub replicate: usize,
    pub seed: u64,
    pub ledger: GainLedger,
}

/// CSV columns: `strategy,hop,color,active,passive,replicate,seed`.
pub fn write_ledger_csv<W: Write>(w: W, records: &[LedgerRecord]) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["strategy", "hop", "color", "active", "passive", "replicate", "seed"])?;
    for rec in records {
        for hop in 1..=MAX_HOPS {
            for color in Color::ALL {
                out.write_record([
                    rec.strategy.as_str().to_string(),
                    hop.to_string(),
                    color.to_string(),
                    rec.ledger.active(hop, color).to_string(),
                    rec.ledger.passive(hop, color).to_string(),
                    rec.replicate.to_string(),
                    rec.seed.to_string(),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
