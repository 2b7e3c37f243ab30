//! Biased preferential attachment (BPA) growth.
//!
//! The process starts from one red node joined to one blue node. Every step
//! adds one node, red with probability `r`, and exactly one edge. The target
//! is drawn with probability proportional to its degree; a same-color target
//! is always accepted, a cross-color one with probability `rho`, and rejected
//! draws are repeated until an edge forms.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::BpaError;
use crate::graph::{Color, LabeledGraph, NodeId};

/// Upper bound on rejected draws for a single arrival.
pub const REJECTION_LIMIT: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpaParams {
    /// Probability that an arriving node is red, in `(0, 0.5)`.
    pub r: f64,
    /// Probability of accepting a cross-color target, in `(0, 1]`.
    pub rho: f64,
    /// Final node count.
    pub n: usize,
    pub seed: u64,
}

impl BpaParams {
    pub fn new(r: f64, rho: f64, n: usize, seed: u64) -> Result<Self, BpaError> {
        let p = Self { r, rho, n, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), BpaError> {
        if !(self.r > 0.0 && self.r < 0.5) {
            return Err(BpaError::MinorityRatio(self.r));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(BpaError::Rho(self.rho));
        }
        if self.n < 2 {
            return Err(BpaError::TooFewNodes(self.n));
        }
        Ok(())
    }
}

/// Red share of the total degree after each step: `alpha(t) = D_R(t) / 2t`,
/// where `t` is the edge count. Entry `i` holds `alpha(i + 1)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlphaTrace(Vec<f64>);

impl AlphaTrace {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `alpha(t)` for `t >= 1`.
    pub fn at(&self, t: usize) -> Option<f64> {
        t.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    pub fn last(&self) -> Option<f64> {
        self.0.last().copied()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,alpha")?;
        for (i, a) in self.0.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, a)?;
        }
        Ok(())
    }
}

/// Degree-proportional sampler backed by an endpoint list: every edge
/// contributes both endpoints, so a uniform index is a degree-weighted node.
#[derive(Debug, Clone, Default)]
pub struct DegreeSampler {
    endpoints: Vec<NodeId>,
}

impl DegreeSampler {
    pub fn new(g: &LabeledGraph) -> Self {
        let mut endpoints = Vec::with_capacity(2 * g.edge_count());
        for (u, v) in g.edges() {
            endpoints.push(u);
            endpoints.push(v);
        }
        Self { endpoints }
    }

    pub fn with_capacity(edges: usize) -> Self {
        Self {
            endpoints: Vec::with_capacity(2 * edges),
        }
    }

    #[inline]
    pub fn push_edge(&mut self, u: NodeId, v: NodeId) {
        self.endpoints.push(u);
        self.endpoints.push(v);
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<NodeId> {
        if self.endpoints.is_empty() {
            None
        } else {
            Some(self.endpoints[rng.random_range(0..self.endpoints.len())])
        }
    }
}

/// One degree-proportional draw from `g`.
///
/// Builds a [`DegreeSampler`] on every call (`O(m)`); keep a sampler around
/// for repeated draws.
pub fn sample_degree_proportional<R: Rng + ?Sized>(g: &LabeledGraph, rng: &mut R) -> Result<NodeId, BpaError> {
    DegreeSampler::new(g).sample(rng).ok_or(BpaError::EmptyGraph)
}

pub fn generate_bpa(p: &BpaParams) -> Result<(LabeledGraph, AlphaTrace), BpaError> {
    generate_bpa_with_limit(p, REJECTION_LIMIT)
}

pub(crate) fn generate_bpa_with_limit(p: &BpaParams, limit: u64) -> Result<(LabeledGraph, AlphaTrace), BpaError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut g = LabeledGraph::with_capacity(p.n);
    let mut pool = DegreeSampler::with_capacity(p.n - 1);
    let mut trace = Vec::with_capacity(p.n - 1);

    let a = g.add_node(Color::Red)?;
    let b = g.add_node(Color::Blue)?;
    g.push_edge(a, b);
    pool.push_edge(a, b);
    let mut red_degree: u64 = 1;
    trace.push(0.5);

    for step in 2..p.n {
        let color = if rng.random::<f64>() < p.r {
            Color::Red
        } else {
            Color::Blue
        };
        let mut draws = 0u64;
        let target = loop {
            let cand = pool.sample(&mut rng).expect("pool is never empty after seeding");
            if g.color(cand) == color || rng.random::<f64>() < p.rho {
                break cand;
            }
            draws += 1;
            if draws >= limit {
                return Err(BpaError::RejectionLimit { step, limit });
            }
        };
        let node = g.add_node(color)?;
        g.push_edge(node, target);
        pool.push_edge(node, target);
        red_degree += u64::from(color == Color::Red) + u64::from(g.color(target) == Color::Red);
        let edges = g.edge_count() as f64;
        trace.push(red_degree as f64 / (2.0 * edges));
    }
    Ok((g, AlphaTrace(trace)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_nodes() {
        let (g, trace) = generate_bpa(&BpaParams::new(0.3, 0.5, 2, 1).unwrap()).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.count_color(Color::Red), 1);
        assert_eq!(trace.values(), &[0.5]);
        assert_eq!(trace.at(1), Some(0.5));
        assert_eq!(trace.at(0), None);
    }

    #[test]
    fn param_validation() {
        assert!(matches!(
            BpaParams::new(0.5, 0.5, 10, 0),
            Err(BpaError::MinorityRatio(_))
        ));
        assert!(matches!(
            BpaParams::new(0.0, 0.5, 10, 0),
            Err(BpaError::MinorityRatio(_))
        ));
        assert!(matches!(BpaParams::new(0.2, 0.0, 10, 0), Err(BpaError::Rho(_))));
        assert!(matches!(BpaParams::new(0.2, 1.5, 10, 0), Err(BpaError::Rho(_))));
        assert!(matches!(BpaParams::new(0.2, 0.5, 1, 0), Err(BpaError::TooFewNodes(1))));
    }

    #[test]
    fn tree_and_trace_shape() {
        let p = BpaParams::new(0.2, 0.3, 500, 9).unwrap();
        let (g, trace) = generate_bpa(&p).unwrap();
        assert!(g.is_tree());
        assert_eq!(trace.len(), 499);
        assert!(trace.values().iter().all(|a| (0.0..=1.0).contains(a)));
        let red_deg: usize = g
            .nodes()
            .filter(|&u| g.color(u) == Color::Red)
            .map(|u| g.degree(u))
            .sum();
        assert_eq!(trace.last().unwrap(), red_deg as f64 / (2.0 * g.edge_count() as f64));
    }

    #[test]
    fn deterministic_per_seed() {
        let p = BpaParams::new(0.25, 0.4, 2000, 77).unwrap();
        let (g1, t1) = generate_bpa(&p).unwrap();
        let (g2, t2) = generate_bpa(&p).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(t1, t2);
        let (g3, _) = generate_bpa(&BpaParams { seed: 78, ..p }).unwrap();
        assert_ne!(g1, g3);
    }

    #[test]
    fn rejection_limit_reported() {
        // With rho ~ 0 every cross-color draw is rejected; runs of 5 are common.
        let p = BpaParams::new(0.45, 1e-12, 2000, 3).unwrap();
        let res = generate_bpa_with_limit(&p, 5);
        assert!(matches!(res, Err(BpaError::RejectionLimit { limit: 5, .. })));
    }

    #[test]
    fn sampler_on_two_nodes() {
        let g = LabeledGraph::from_edges([Color::Red, Color::Blue], [(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut hits = [0u32; 2];
        for _ in 0..20_000 {
            hits[sample_degree_proportional(&g, &mut rng).unwrap() as usize] += 1;
        }
        assert!((hits[0] as f64 / 20_000.0 - 0.5).abs() < 0.02);
        let empty = LabeledGraph::from_edges([Color::Red], []).unwrap();
        assert!(matches!(
            sample_degree_proportional(&empty, &mut rng),
            Err(BpaError::EmptyGraph)
        ));
    }

    #[test]
    fn alpha_csv() {
        let (_, trace) = generate_bpa(&BpaParams::new(0.3, 0.5, 3, 1).unwrap()).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,alpha\n1,0.5\n2,"));
    }
}
