//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use referral_core::{Color, LabeledGraph, NodeAttributes, NodeId, StrategyKind};

use Color::{Blue, Red};

/// Expected gains: `[hop - 1][color index]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExpectedLedger {
    pub active: [[f64; 2]; 2],
    pub passive: [[f64; 2]; 2],
}

impl ExpectedLedger {
    fn add(&mut self, hop: usize, from: Color, to: Color, p: f64) {
        self.active[hop - 1][from.index()] += p;
        self.passive[hop - 1][to.index()] += p;
    }
}

/// A named fixture with pinned attributes.
pub struct Fixture {
    pub name: &'static str,
    pub graph: LabeledGraph,
    pub attrs: NodeAttributes,
}

type Shape = (&'static str, usize, &'static [(NodeId, NodeId)]);

/// The nine connected graphs on two to four nodes, up to isomorphism.
pub fn small_fixtures() -> Vec<Fixture> {
    let shapes: [Shape; 9] = [
        ("k2", 2, &[(0, 1)]),
        ("p3", 3, &[(0, 1), (1, 2)]),
        ("k3", 3, &[(0, 1), (1, 2), (0, 2)]),
        ("p4", 4, &[(0, 1), (1, 2), (2, 3)]),
        ("star", 4, &[(0, 1), (0, 2), (0, 3)]),
        ("c4", 4, &[(0, 1), (1, 2), (2, 3), (3, 0)]),
        ("paw", 4, &[(0, 1), (1, 2), (2, 0), (2, 3)]),
        ("diamond", 4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]),
        ("k4", 4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
    ];
    // Repeated acceptance rates exercise tie-breaking.
    let a = [0.3, 0.8, 0.8, 0.55];
    let t = [0.9, 0.2, 0.6, 0.85];
    let colors = [Red, Blue, Blue, Red];
    shapes
        .iter()
        .map(|&(name, n, edges)| Fixture {
            name,
            graph: LabeledGraph::from_edges(colors[..n].iter().copied(), edges.iter().copied()).unwrap(),
            attrs: NodeAttributes::new(a[..n].to_vec(), t[..n].to_vec()).unwrap(),
        })
        .collect()
}

fn argmax_set(g: &LabeledGraph, u: NodeId, key: impl Fn(NodeId) -> f64) -> Vec<NodeId> {
    let best = g.neighbors(u).iter().map(|&v| key(v)).fold(f64::NEG_INFINITY, f64::max);
    g.neighbors(u).iter().copied().filter(|&v| key(v) == best).collect()
}

/// Exact expected ledger, summing over every random choice with its probability.
pub fn enumerate_expected(kind: StrategyKind, g: &LabeledGraph, at: &NodeAttributes) -> ExpectedLedger {
    let mut e = ExpectedLedger::default();
    let uniform = |u: NodeId| g.neighbors(u).to_vec();
    let popular = |u: NodeId| argmax_set(g, u, |v| g.degree(v) as f64);
    let eager = |u: NodeId| argmax_set(g, u, |v| at.acceptance(v));
    for u in g.nodes() {
        let cu = g.color(u);
        match kind {
            StrategyKind::Random | StrategyKind::PopularityDriven => {
                let choose = |x: NodeId| {
                    if kind == StrategyKind::Random {
                        uniform(x)
                    } else {
                        popular(x)
                    }
                };
                let first = choose(u);
                for &v in &first {
                    let p1 = at.acceptance(v) / first.len() as f64;
                    e.add(1, cu, g.color(v), p1);
                    let second = choose(v);
                    for &w in &second {
                        e.add(2, cu, g.color(w), p1 * at.acceptance(w) / second.len() as f64);
                    }
                }
            }
            StrategyKind::AcceptanceDriven => {
                let first = eager(u);
                for &v in &first {
                    let pick = 1.0 / first.len() as f64;
                    e.add(1, cu, g.color(v), pick * at.acceptance(v));
                    let reject = pick * (1.0 - at.acceptance(v));
                    let nv = g.neighbors(v);
                    for &w in nv {
                        e.add(2, cu, g.color(w), reject * at.acceptance(w) / nv.len() as f64);
                    }
                }
            }
            StrategyKind::Linear => {
                let dist = bfs_distances(g, u);
                for &v in g.neighbors(u) {
                    if at.threshold(u) > at.acceptance(v) {
                        e.add(1, cu, g.color(v), 1.0);
                    }
                }
                for w in g.nodes().filter(|&w| dist[w as usize] == Some(2)) {
                    let reached = g.neighbors(u).iter().any(|&v| {
                        g.neighbors(v).contains(&w)
                            && at.threshold(u) > at.acceptance(v)
                            && at.threshold(v) > at.acceptance(w)
                    });
                    if reached {
                        e.add(2, cu, g.color(w), 1.0);
                    }
                }
            }
        }
    }
    e
}

/// Plain queue BFS: distance from `s` to every node, `None` when unreachable.
pub fn bfs_distances(g: &LabeledGraph, s: NodeId) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.node_count()];
    dist[s as usize] = Some(0);
    let mut queue = VecDeque::from([s]);
    while let Some(x) = queue.pop_front() {
        let d = dist[x as usize].unwrap();
        for &y in g.neighbors(x) {
            if dist[y as usize].is_none() {
                dist[y as usize] = Some(d + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Worst-case standard deviation of a replicate-averaged count: each of the
/// `nodes` originators contributes an independent 0/1 outcome per cell.
pub fn binomial_sigma(nodes: usize, replicates: usize) -> f64 {
    (nodes as f64 / (4.0 * replicates as f64)).sqrt()
}
