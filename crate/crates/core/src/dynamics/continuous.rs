//! Continuous-time dynamics: each edge carries a rate-1 Poisson clock,
//! realized as one rate-m process with uniform edge marks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::{DrawStream, UpdateDraw};
use crate::error::{Error, Result};
use crate::lattice::EdgeId;

/// Iterator over `(time, draw)` events up to a horizon.
#[derive(Debug, Clone)]
pub struct ContinuousSchedule {
    edges: Vec<EdgeId>,
    marks: DrawStream,
    clock: ChaCha8Rng,
    gap: Exp<f64>,
    now: f64,
    horizon: f64,
}

impl ContinuousSchedule {
    pub fn new(edges: Vec<EdgeId>, horizon: f64, seed: u64, stream: u64) -> Result<Self> {
        if horizon.is_nan() || horizon <= 0.0 {
            return Err(Error::InvalidParams(format!("horizon must be positive, got {horizon}")));
        }
        if edges.is_empty() {
            return Err(Error::InvalidParams("no edges to schedule".into()));
        }
        let gap = Exp::new(edges.len() as f64).map_err(|e| Error::InvalidParams(e.to_string()))?;
        let mut clock = ChaCha8Rng::seed_from_u64(seed ^ 0x636c_6f63_6b00_0000);
        clock.set_stream(stream);
        Ok(ContinuousSchedule {
            marks: DrawStream::new(seed, stream),
            edges,
            clock,
            gap,
            now: 0.0,
            horizon,
        })
    }
}

impl Iterator for ContinuousSchedule {
    type Item = (f64, UpdateDraw);

    fn next(&mut self) -> Option<Self::Item> {
        self.now += self.gap.sample(&mut self.clock);
        if self.now > self.horizon {
            self.now = f64::INFINITY;
            return None;
        }
        Some((self.now, self.marks.next_draw(&self.edges)))
    }
}

/// All events on `edges` in `(0, horizon]`.
pub fn continuous_schedule(edges: &[EdgeId], horizon: f64, seed: u64, stream: u64) -> Result<Vec<(f64, UpdateDraw)>> {
    Ok(ContinuousSchedule::new(edges.to_vec(), horizon, seed, stream)?.collect())
}
