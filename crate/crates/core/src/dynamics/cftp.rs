//! Monotone coupling from the past.
//!
//! The draw applied at time `-s` is draw `s - 1` of the stream, so extending
//! the horizon from `T` to `2T` reuses the draws of `[-T, -1]` exactly.

use super::{Chain, DrawStream, Dynamics, UpdateDraw};
use crate::config::RcConfig;
use crate::error::{Error, Result};

/// Largest horizon tried before giving up: 2^25 updates.
pub const CFTP_DEFAULT_CAP: u64 = 1 << 25;

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct CftpOutcome {
    pub config: RcConfig,
    /// Horizon `T` at which the extremal chains coalesced by time 0.
    pub horizon: u64,
}

/// Exact sample from the stationary law of `dynamics`.
pub fn cftp_sample(dynamics: &Dynamics, seed: u64, stream: u64, cap: u64) -> Result<CftpOutcome> {
    let mut out = cftp_coupled(&[dynamics], seed, stream, cap)?;
    let (config, horizon) = out.pop().expect("one system");
    Ok(CftpOutcome { config, horizon })
}

/// Runs CFTP for several systems sharing the same active edge list and the
/// same draws. Systems ordered by their clamps yield ordered samples.
///
/// Returns one `(sample, horizon)` per system; all share the final horizon.
pub fn cftp_coupled(systems: &[&Dynamics], seed: u64, stream: u64, cap: u64) -> Result<Vec<(RcConfig, u64)>> {
    let first = systems
        .first()
        .ok_or_else(|| Error::InvalidParams("no systems to sample".into()))?;
    if systems.iter().any(|s| s.active() != first.active()) {
        return Err(Error::InvalidParams(
            "coupled systems must share their active edges".into(),
        ));
    }
    let active = first.active();
    let mut draws = DrawStream::new(seed, stream);
    let mut buf: Vec<UpdateDraw> = Vec::with_capacity(CHUNK as usize);
    let mut chains: Vec<(Chain, Chain)> = systems.iter().map(|s| (s.top_chain(), s.bottom_chain())).collect();

    let mut horizon = (active.len() as u64).max(1);
    loop {
        for (sys, (top, bottom)) in systems.iter().zip(chains.iter_mut()) {
            top.config = sys.top_state();
            bottom.config = sys.bottom_state();
        }
        // times -horizon..=-1 in chunks; within a chunk draws are generated
        // forward and applied in reverse
        let mut hi = horizon;
        while hi > 0 {
            let lo = hi.saturating_sub(CHUNK) + 1;
            draws.seek(lo - 1);
            buf.clear();
            for _ in lo..=hi {
                buf.push(draws.next_draw(active));
            }
            for &d in buf.iter().rev() {
                for (sys, (top, bottom)) in systems.iter().zip(chains.iter_mut()) {
                    sys.step(top, d);
                    sys.step(bottom, d);
                }
            }
            hi = lo - 1;
        }
        if chains.iter().all(|(t, b)| t.config == b.config) {
            return Ok(chains.into_iter().map(|(t, _)| (t.config, horizon)).collect());
        }
        if horizon >= cap {
            return Err(Error::CftpCapExceeded { cap });
        }
        horizon = (horizon * 2).min(cap);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryCondition;
    use crate::dynamics::RcParams;
    use crate::lattice::Lattice;

    #[test]
    fn deterministic() {
        let lat = Lattice::new(4).unwrap();
        let d = Dynamics::new(&lat, &BoundaryCondition::free(&lat), RcParams::new(0.5, 2.0).unwrap()).unwrap();
        let a = cftp_sample(&d, 3, 17, CFTP_DEFAULT_CAP).unwrap();
        let b = cftp_sample(&d, 3, 17, CFTP_DEFAULT_CAP).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn percolation_marginals() {
        // q = 1: edges are iid Bernoulli(p)
        let lat = Lattice::new(3).unwrap();
        let p = 0.3;
        let d = Dynamics::new(&lat, &BoundaryCondition::free(&lat), RcParams::new(p, 1.0).unwrap()).unwrap();
        let n = 4000;
        let open: usize = (0..n)
            .map(|i| cftp_sample(&d, 5, i, CFTP_DEFAULT_CAP).unwrap().config.count_open())
            .sum();
        let trials = (n * 12) as f64;
        let sd = (trials * p * (1.0 - p)).sqrt();
        assert!((open as f64 - trials * p).abs() < 4.0 * sd);
    }

    #[test]
    fn cap_fails_loudly() {
        let lat = Lattice::new(6).unwrap();
        let d = Dynamics::new(&lat, &BoundaryCondition::free(&lat), RcParams::new(0.5, 2.0).unwrap()).unwrap();
        assert_eq!(cftp_sample(&d, 1, 0, 8), Err(Error::CftpCapExceeded { cap: 8 }));
    }

    #[test]
    fn coupled_clamps_are_ordered() {
        let lat = Lattice::new(8).unwrap();
        let b = lat.box_region(lat.horizontal_edge(3, 0), 2).unwrap();
        let base = Dynamics::new(&lat, &BoundaryCondition::free(&lat), RcParams::new(0.5, 3.0).unwrap()).unwrap();
        let plus = base
            .clone()
            .with_clamp(b.inner_edges.clone(), &RcConfig::full(lat.num_edges()))
            .unwrap();
        let minus = base
            .with_clamp(b.inner_edges.clone(), &RcConfig::empty(lat.num_edges()))
            .unwrap();
        for s in 0..50 {
            let out = cftp_coupled(&[&plus, &minus], 2, s, CFTP_DEFAULT_CAP).unwrap();
            assert!(out[1].0.is_subset(&out[0].0));
        }
    }
}
