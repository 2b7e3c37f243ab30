//! Expectation recursions for k-hop degree sums, and the sequence-order
//! integrator.
//!
//! Notation for color `C` at time `t` (edge count):
//!
//! * `D^(k)_C = sum_{i in C} d^(k)_i`, the k-hop degree mass of color `C`;
//! * `M^(k)_{C,**} = sum_{i in C} d_i d^(k)_i`;
//! * `M^(k)_{C,*X} = sum_{i in C} d_i d^(k)_{i,X}`, where `d^(k)_{i,X}` counts
//!   color-`X` nodes at distance `k`.
//!
//! A new node of color `c` attaches to a given node `i` of color `c'` with
//! probability `beta(c, c') d_i / t`, with the limiting betas held constant.
//! Level-1 moments are tracked exactly. From level 2 on only the blue moment
//! `M_{B,**}` is carried and split by the asymptotic relations
//! `M_{B,*B} = beta3/(beta2+beta3) M_{B,**}` and `M_{B,*R} = beta2/(beta2+beta3) M_{B,**}`;
//! red moments are dropped as lower order. The D-recursions for every level
//! use the same closure, i.e. red moments never feed the k-hop sums. What the
//! closure leaves out is reported alongside the traces.

use serde::Serialize;

use crate::error::TheoryError;
use crate::theory::{Betas, TheoryPoint};

const R: usize = 0;
const B: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionConfig {
    pub r: f64,
    pub rho: f64,
    /// Highest hop level `K >= 2`.
    pub max_level: usize,
    /// Horizon `T >= 1000`.
    pub horizon: u64,
    /// Trace resolution: log-spaced samples per decade of `t`.
    pub samples_per_decade: usize,
    /// State is rescaled once any component exceeds this.
    pub rescale_above: f64,
}

impl RecursionConfig {
    pub fn new(r: f64, rho: f64, max_level: usize, horizon: u64) -> Self {
        Self {
            r,
            rho,
            max_level,
            horizon,
            samples_per_decade: 50,
            rescale_above: 1e300,
        }
    }

    fn validate(&self) -> Result<(), TheoryError> {
        if self.max_level < 2 {
            return Err(TheoryError::Recursion(format!("max_level {} < 2", self.max_level)));
        }
        if self.horizon < 1000 {
            return Err(TheoryError::Recursion(format!("horizon {} < 1000", self.horizon)));
        }
        if self.samples_per_decade == 0 {
            return Err(TheoryError::Recursion("samples_per_decade must be positive".into()));
        }
        if self.rescale_above.is_nan() || self.rescale_above <= 1.0 {
            return Err(TheoryError::Recursion(format!(
                "rescale threshold {} <= 1",
                self.rescale_above
            )));
        }
        Ok(())
    }
}

/// Output of [`recursion_oracle`].
#[derive(Debug, Clone, Serialize)]
pub struct RecursionTrace {
    pub betas: Betas,
    /// Sample times, ascending, ending at the horizon.
    pub times: Vec<u64>,
    /// `ratios[k - 1][j] = D^(k)_R / D^(k)_B` at `times[j]`.
    pub ratios: Vec<Vec<f64>>,
    /// `ln M^(1)_{B,**}` at `times[j]`.
    pub ln_m1_blue: Vec<f64>,
    /// Terminal `D^(2)_R / D^(2)_B` when the red level-1 moments are kept.
    pub unclosed_d2_ratio: f64,
    /// Terminal `M^(1)_{B,*B} / M^(1)_{B,**} - beta3/(beta2+beta3)`.
    pub split_residual: f64,
    /// Terminal fraction of the level-2 increment carried by red moments.
    pub dropped_red_weight: f64,
    /// Terminal `(D^(1)_R + D^(1)_B) / 2t`.
    pub degree_mass_ratio: f64,
    pub rescales: u32,
}

impl RecursionTrace {
    pub fn horizon(&self) -> u64 {
        *self.times.last().expect("trace is never empty")
    }

    pub fn terminal_ratio(&self, k: usize) -> f64 {
        *self.ratios[k - 1].last().expect("trace is never empty")
    }

    /// `(min, max)` of the level-`k` ratio over samples with `t >= T/10`.
    pub fn tail_range(&self, k: usize) -> (f64, f64) {
        let from = self.horizon() / 10;
        self.times
            .iter()
            .zip(&self.ratios[k - 1])
            .filter(|(&t, _)| t >= from)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &v)| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Least-squares slope of `ln M^(1)_{B,**}` against `ln t` over `[t_lo, t_hi]`.
    pub fn m1_blue_slope(&self, t_lo: u64, t_hi: u64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.ln_m1_blue)
            .filter(|(&t, _)| t >= t_lo && t <= t_hi)
            .map(|(&t, &m)| ((t as f64).ln(), m))
            .collect();
        least_squares_slope(&pts)
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Log-spaced integer sample times in `[1, horizon]`, always including `horizon`.
fn sample_times(horizon: u64, per_decade: usize) -> Vec<u64> {
    let decades = (horizon as f64).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let mut times: Vec<u64> = (0..=n)
        .map(|i| 10f64.powf(decades * i as f64 / n.max(1) as f64).round() as u64)
        .map(|t| t.clamp(1, horizon))
        .collect();
    times.push(horizon);
    times.dedup();
    times
}

/// Runs the recursions with default resolution and rescaling.
pub fn recursion_oracle(r: f64, rho: f64, max_level: usize, horizon: u64) -> Result<RecursionTrace, TheoryError> {
    recursion_oracle_with(&RecursionConfig::new(r, rho, max_level, horizon))
}

pub fn recursion_oracle_with(cfg: &RecursionConfig) -> Result<RecursionTrace, TheoryError> {
    cfg.validate()?;
    let betas = TheoryPoint::evaluate(cfg.r, cfg.rho)?.betas;
    let k_max = cfg.max_level;
    let b = [[betas.b1, betas.b2], [betas.b4, betas.b3]]; // b[arriving][target]
    let p_color = [cfg.r, 1.0 - cfg.r];
    let (b2, b3) = (betas.b2, betas.b3);
    let blue_split = [b2 / (b2 + b3), b3 / (b2 + b3)]; // M_{B,*R}, M_{B,*B} per M_{B,**}
    let blue_growth = 2.0 * (b2 + b3);

    // State at t = 1: a single red-blue edge.
    let mut d1 = [1.0f64, 1.0];
    let mut m_ss = [1.0f64, 1.0];
    let mut m_sx = [[0.0f64, 1.0], [1.0, 0.0]];
    let mut d = vec![[0.0f64; 2]; k_max + 1]; // d[k] for k >= 2
    let mut m_blue = vec![0.0f64; k_max + 1]; // closed M^(k)_{B,**} for k >= 2
    let mut d2_full = [0.0f64; 2];
    // One true unit in stored coordinates; stored = true * unit.
    let mut unit = 1.0f64;
    let mut ln_unit = 0.0f64;
    let mut rescales = 0u32;

    let times = sample_times(cfg.horizon, cfg.samples_per_decade);
    let mut ratios = vec![Vec::with_capacity(times.len()); k_max];
    let mut ln_m1_blue = Vec::with_capacity(times.len());
    let mut next_sample = 0usize;
    let mut last_level2 = (0.0f64, 0.0f64);

    let mut t = 1u64;
    loop {
        if times.get(next_sample) == Some(&t) {
            ratios[0].push(d1[R] / d1[B]);
            for k in 2..=k_max {
                ratios[k - 1].push(d[k][R] / d[k][B]);
            }
            ln_m1_blue.push(m_ss[B].ln() - ln_unit);
            next_sample += 1;
        }
        if t == cfg.horizon {
            break;
        }
        let tf = t as f64;

        // Level 1, exact in expectation.
        let mut nd1 = d1;
        let mut nm_ss = m_ss;
        let mut nm_sx = m_sx;
        for c in [R, B] {
            nd1[c] += p_color[c] * unit;
            for cp in [R, B] {
                let w = b[c][cp] / tf;
                nd1[cp] += w * d1[cp];
                nm_ss[cp] += w * (2.0 * m_ss[cp] + d1[cp]);
                nm_ss[c] += w * d1[cp];
                for x in [R, B] {
                    let own = if x == c { m_ss[cp] + d1[cp] } else { 0.0 };
                    nm_sx[cp][x] += w * (m_sx[cp][x] + own);
                }
                nm_sx[c][cp] += w * d1[cp];
            }
        }

        // Level 2 from the level-1 moments: full and closed.
        let mut full = [0.0f64; 2];
        let mut closed = [0.0f64; 2];
        for c in [R, B] {
            for cp in [R, B] {
                let w = b[c][cp] / tf;
                let inc_new = w * m_ss[cp];
                let inc_x = [w * m_sx[cp][R], w * m_sx[cp][B]];
                full[c] += inc_new;
                full[R] += inc_x[R];
                full[B] += inc_x[B];
                if cp == B {
                    closed[c] += inc_new;
                    closed[R] += inc_x[R];
                    closed[B] += inc_x[B];
                }
            }
        }
        last_level2 = (full[R] + full[B], closed[R] + closed[B]);
        for c in [R, B] {
            d2_full[c] += full[c];
            d[2][c] += closed[c];
        }

        // Levels >= 3 from closed blue moments; M^(k) for k >= 2.
        let mut nm_blue = m_blue.clone();
        for k in 2..=k_max {
            let (prev_all, prev_bb) = if k == 2 {
                (m_ss[B], m_sx[B][B])
            } else {
                (m_blue[k - 1], blue_split[B] * m_blue[k - 1])
            };
            nm_blue[k] += (blue_growth * m_blue[k] + b2 * prev_bb + b3 * (prev_bb + prev_all)) / tf;
            if k < k_max {
                d[k + 1][R] += 2.0 * b2 * m_blue[k] / tf;
                d[k + 1][B] += 2.0 * b3 * m_blue[k] / tf;
            }
        }

        d1 = nd1;
        m_ss = nm_ss;
        m_sx = nm_sx;
        m_blue = nm_blue;
        t += 1;

        let peak = d1
            .iter()
            .chain(&m_ss)
            .chain(m_sx.iter().flatten())
            .chain(&d2_full)
            .chain(d.iter().flatten())
            .chain(&m_blue)
            .fold(0.0f64, |acc, &v| acc.max(v));
        if !peak.is_finite() {
            return Err(TheoryError::Recursion(format!("non-finite state at t = {t}")));
        }
        if peak > cfg.rescale_above {
            let f = 1.0 / peak;
            for v in d1
                .iter_mut()
                .chain(m_ss.iter_mut())
                .chain(m_sx.iter_mut().flatten())
                .chain(d2_full.iter_mut())
                .chain(d.iter_mut().flatten())
                .chain(m_blue.iter_mut())
            {
                *v *= f;
            }
            unit *= f;
            ln_unit += f.ln();
            rescales += 1;
        }
    }

    let horizon = cfg.horizon as f64;
    Ok(RecursionTrace {
        betas,
        times,
        ratios,
        ln_m1_blue,
        unclosed_d2_ratio: d2_full[R] / d2_full[B],
        split_residual: m_sx[B][B] / m_ss[B] - blue_split[B],
        dropped_red_weight: 1.0 - last_level2.1 / last_level2.0,
        degree_mass_ratio: (d1[R] + d1[B]) / (2.0 * horizon * unit),
        rescales,
    })
}

/// Which asymptotic order applies to [`sequence_integrator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GrowthRegime {
    /// `c1 > c3`: `a_t ~ t^c1`.
    Homogeneous,
    /// `c1 = c3`: `a_t ~ (ln t)^(m+1) t^c3`.
    Critical,
    /// `c1 < c3`: `a_t ~ c2/(c3-c1) (ln t)^m t^c3`.
    Forced,
}

impl GrowthRegime {
    pub fn of(c1: f64, c3: f64) -> Self {
        if c1 > c3 {
            GrowthRegime::Homogeneous
        } else if c1 == c3 {
            GrowthRegime::Critical
        } else {
            GrowthRegime::Forced
        }
    }

    /// Natural log of the predicted order at time `t`.
    pub fn ln_order(self, c1: f64, c3: f64, m: u32, t: f64) -> f64 {
        let lt = t.ln();
        match self {
            GrowthRegime::Homogeneous => c1 * lt,
            GrowthRegime::Critical => (m + 1) as f64 * lt.ln() + c3 * lt,
            GrowthRegime::Forced => m as f64 * lt.ln() + c3 * lt,
        }
    }
}

/// Iterates `a_{t+1} = a_t + c1 a_t / t + c2 (ln t)^m t^(c3-1)` from `a_1 = 1`
/// and returns `a_t` divided by the predicted order at each requested time
/// (ascending, each in `[2, T]`).
pub fn sequence_trace(c1: f64, c2: f64, c3: f64, m: u32, checkpoints: &[u64]) -> Result<Vec<f64>, TheoryError> {
    if c3.is_nan() || c3 <= 0.0 {
        return Err(TheoryError::Recursion(format!("c3 = {c3} must be positive")));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints.first().is_some_and(|&t| t < 2) {
        return Err(TheoryError::Recursion("checkpoints must be ascending and >= 2".into()));
    }
    let regime = GrowthRegime::of(c1, c3);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut a = 1.0f64;
    let mut t = 1u64;
    for &stop in checkpoints {
        while t < stop {
            let tf = t as f64;
            let forcing = if m == 0 {
                tf.powf(c3 - 1.0)
            } else {
                tf.ln().powi(m as i32) * tf.powf(c3 - 1.0)
            };
            a += c1 * a / tf + c2 * forcing;
            t += 1;
        }
        let tf = t as f64;
        let normalized = if a > 0.0 {
            (a.ln() - regime.ln_order(c1, c3, m, tf)).exp()
        } else {
            a / regime.ln_order(c1, c3, m, tf).exp()
        };
        if !normalized.is_finite() {
            return Err(TheoryError::Recursion(format!("sequence overflowed at t = {t}")));
        }
        out.push(normalized);
    }
    Ok(out)
}

/// Terminal normalized value `a_T / order(T)`.
pub fn sequence_integrator(c1: f64, c2: f64, c3: f64, m: u32, horizon: u64) -> Result<f64, TheoryError> {
    if horizon < 1000 {
        return Err(TheoryError::Recursion(format!("horizon {horizon} < 1000")));
    }
    Ok(sequence_trace(c1, c2, c3, m, &[horizon])?[0])
}
