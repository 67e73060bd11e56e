use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::{DrawStream, Dynamics};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeMode {
    Discrete,
    Continuous,
}

/// Per-replica coalescence times of the extremal coupled pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub edges: usize,
    pub mode: TimeMode,
    /// Coalescence time per replica in replica order; `None` when the cap was
    /// reached first. Discrete mode counts steps, continuous mode elapsed time.
    pub times: Vec<Option<f64>>,
    pub cap: f64,
    /// Quantile level for the coupling time (`1 - threshold`).
    pub level: f64,
}

impl CouplingReport {
    /// Empirical quantile: the smallest observed time `t` with
    /// `#{times ≤ t} ≥ level·N`. Capped replicas count as +∞, so `None` means
    /// the quantile lies beyond the cap.
    pub fn quantile(&self, level: f64) -> Option<f64> {
        let mut sorted: Vec<f64> = self.times.iter().map(|t| t.unwrap_or(f64::INFINITY)).collect();
        sorted.sort_by(f64::total_cmp);
        let k = ((level * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        let v = sorted[k - 1];
        v.is_finite().then_some(v)
    }

    pub fn median(&self) -> Option<f64> {
        self.quantile(0.5)
    }

    pub fn quartiles(&self) -> (Option<f64>, Option<f64>, Option<f64>) {
        (self.quantile(0.25), self.quantile(0.5), self.quantile(0.75))
    }

    /// Estimate of T_coup: the first time at which the chains disagree with
    /// probability at most the threshold.
    pub fn t_coup(&self) -> Option<f64> {
        self.quantile(self.level)
    }

    pub fn capped(&self) -> usize {
        self.times.iter().filter(|t| t.is_none()).count()
    }

    /// `m ln m` for this instance.
    pub fn m_log_m(&self) -> f64 {
        let m = self.edges as f64;
        m * m.ln()
    }
}

/// 100·m·ln m, the default step cap for coupling runs.
pub fn default_step_cap(m: usize) -> u64 {
    let m = m as f64;
    (100.0 * m * m.ln().max(1.0)).ceil() as u64
}

/// Runs `replicas` identity-coupled pairs from the all-open and all-closed
/// states until they coincide. Replica `i` uses draw stream `(seed, i)`.
pub fn coupling_time(
    dynamics: &Dynamics,
    seed: u64,
    replicas: usize,
    threshold: f64,
    mode: TimeMode,
    cap: Option<f64>,
) -> Result<CouplingReport> {
    let m = dynamics.active().len();
    let cap = cap.unwrap_or_else(|| match mode {
        TimeMode::Discrete => default_step_cap(m) as f64,
        TimeMode::Continuous => default_step_cap(m) as f64 / m as f64,
    });
    let times = (0..replicas as u64)
        .into_par_iter()
        .map(|replica| match mode {
            TimeMode::Discrete => coalesce_discrete(dynamics, seed, replica, cap as u64).map(|t| t as f64),
            TimeMode::Continuous => coalesce_continuous(dynamics, seed, replica, cap),
        })
        .collect();
    Ok(CouplingReport {
        edges: m,
        mode,
        times,
        cap,
        level: 1.0 - threshold,
    })
}

fn coalesce_discrete(dynamics: &Dynamics, seed: u64, replica: u64, cap: u64) -> Option<u64> {
    let mut top = dynamics.top_chain();
    let mut bottom = dynamics.bottom_chain();
    let mut draws = DrawStream::new(seed, replica);
    let mut differ = top.config.hamming(&bottom.config);
    if differ == 0 {
        return Some(0);
    }
    for t in 1..=cap {
        let d = dynamics.next_draw(&mut draws);
        let before = top.config.is_open(d.edge) != bottom.config.is_open(d.edge);
        let a = dynamics.step(&mut top, d);
        let b = dynamics.step(&mut bottom, d);
        match (before, a != b) {
            (true, false) => differ -= 1,
            (false, true) => differ += 1,
            _ => {}
        }
        if differ == 0 {
            debug_assert_eq!(top.config, bottom.config);
            return Some(t);
        }
    }
    None
}

fn coalesce_continuous(dynamics: &Dynamics, seed: u64, replica: u64, cap: f64) -> Option<f64> {
    let m = dynamics.active().len();
    let mut top = dynamics.top_chain();
    let mut bottom = dynamics.bottom_chain();
    let mut draws = DrawStream::new(seed, replica);
    // event times come from a separate stream so marks match the discrete run
    let mut clock = ChaCha8Rng::seed_from_u64(seed ^ 0x636c_6f63_6b00_0000);
    clock.set_stream(replica);
    let gap = Exp::new(m as f64).expect("positive rate");
    let mut now = 0.0;
    let mut differ = top.config.hamming(&bottom.config);
    while differ > 0 {
        now += gap.sample(&mut clock);
        if now > cap {
            return None;
        }
        let d = dynamics.next_draw(&mut draws);
        let before = top.config.is_open(d.edge) != bottom.config.is_open(d.edge);
        let a = dynamics.step(&mut top, d);
        let b = dynamics.step(&mut bottom, d);
        match (before, a != b) {
            (true, false) => differ -= 1,
            (false, true) => differ += 1,
            _ => {}
        }
    }
    Some(now)
}
