//! Heat-bath Glauber dynamics for the random-cluster model.
//!
//! A step picks an edge uniformly from the active set and a uniform `u`, then
//! sets the edge open iff `u` is below its open probability: `p` for a
//! non-cut edge, `p / (p + q(1-p))` for a cut edge. Coupled chains share the
//! same `(edge, u)` draw, which keeps them ordered by inclusion when `q ≥ 1`.

mod cftp;
mod continuous;
mod coupling;

pub use cftp::{cftp_coupled, cftp_sample, CftpOutcome, CFTP_DEFAULT_CAP};
pub use continuous::{continuous_schedule, ContinuousSchedule};
pub use coupling::{coupling_time, default_step_cap, CouplingReport, TimeMode};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::{BoundaryCondition, Wiring};
use crate::config::{CutSearch, RcConfig};
use crate::error::{Error, Result};
use crate::lattice::{EdgeGraph, EdgeId, Lattice};

/// Model parameters: edge weight `p ∈ (0,1)` and cluster weight `q ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcParams {
    p: f64,
    q: f64,
}

impl RcParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParams(format!("p must lie in (0,1), got {p}")));
        }
        if !(q >= 1.0 && q.is_finite()) {
            return Err(Error::InvalidParams(format!("q must be a finite value >= 1, got {q}")));
        }
        Ok(RcParams { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Open probability of a cut edge; non-cut edges open with `p`.
    pub fn cut_open_prob(&self) -> f64 {
        self.p / (self.p + self.q * (1.0 - self.p))
    }
}

/// One update: the chosen edge and the shared uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateDraw {
    pub edge: EdgeId,
    pub u: f64,
}

/// Counter-mode draw generator: draw `k` of stream `(seed, stream)` is a pure
/// function of its position, so any draw can be regenerated without storing
/// history.
#[derive(Debug, Clone)]
pub struct DrawStream {
    rng: ChaCha8Rng,
}

const WORDS_PER_DRAW: u128 = 4;

impl DrawStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        DrawStream { rng }
    }

    /// Positions the stream so the next draw is draw number `index`.
    pub fn seek(&mut self, index: u64) {
        self.rng.set_word_pos(index as u128 * WORDS_PER_DRAW);
    }

    pub fn position(&self) -> u64 {
        (self.rng.get_word_pos() / WORDS_PER_DRAW) as u64
    }

    /// Next draw over `edges`; the edge is `edges[⌊x·len / 2^64⌋]` and `u` has
    /// 53 random bits.
    #[inline]
    pub fn next_draw(&mut self, edges: &[EdgeId]) -> UpdateDraw {
        let x = self.rng.next_u64();
        let y = self.rng.next_u64();
        let idx = ((x as u128 * edges.len() as u128) >> 64) as usize;
        UpdateDraw {
            edge: edges[idx],
            u: (y >> 11) as f64 * (1.0 / (1u64 << 53) as f64),
        }
    }
}

/// A single chain: its configuration, search scratch and step counter.
#[derive(Debug, Clone)]
pub struct Chain {
    pub config: RcConfig,
    pub time: u64,
    search: CutSearch,
}

impl Chain {
    pub fn config(&self) -> &RcConfig {
        &self.config
    }
}

/// Heat-bath dynamics on a graph with wirings. Only `active` edges are ever
/// updated; the other edges keep the states they have in the chain.
#[derive(Debug, Clone)]
pub struct Dynamics {
    graph: EdgeGraph,
    wiring: Wiring,
    params: RcParams,
    active: Vec<EdgeId>,
    /// States of the edges outside `active` (their clamp).
    base: RcConfig,
    cut_prob: f64,
}

impl Dynamics {
    pub fn new(lat: &Lattice, bc: &BoundaryCondition, params: RcParams) -> Result<Self> {
        bc.check_lattice(lat)?;
        Ok(Self::on_graph(lat.graph().clone(), bc.wiring(), params))
    }

    pub fn on_graph(graph: EdgeGraph, wiring: Wiring, params: RcParams) -> Self {
        let m = graph.num_edges();
        Dynamics {
            graph,
            wiring,
            params,
            active: (0..m).collect(),
            base: RcConfig::empty(m),
            cut_prob: params.cut_open_prob(),
        }
    }

    /// Restricts updates to `active`; every other edge is held at its state in
    /// `clamp`.
    pub fn with_clamp(mut self, active: Vec<EdgeId>, clamp: &RcConfig) -> Result<Self> {
        let m = self.graph.num_edges();
        if clamp.len() != m {
            return Err(Error::InvalidParams("clamp length does not match the graph".into()));
        }
        if active.is_empty() {
            return Err(Error::InvalidParams("no active edges".into()));
        }
        let mut is_active = vec![false; m];
        for &e in &active {
            if e >= m {
                return Err(Error::InvalidEdge { edge: e, edge_count: m });
            }
            is_active[e] = true;
        }
        let mut base = clamp.clone();
        for (e, &a) in is_active.iter().enumerate() {
            if a {
                base.set(e, false);
            }
        }
        self.active = active;
        self.base = base;
        Ok(self)
    }

    pub fn graph(&self) -> &EdgeGraph {
        &self.graph
    }

    pub fn wiring(&self) -> &Wiring {
        &self.wiring
    }

    pub fn params(&self) -> RcParams {
        self.params
    }

    pub fn active(&self) -> &[EdgeId] {
        &self.active
    }

    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    /// The configuration with every active edge open (the maximal state).
    pub fn top_state(&self) -> RcConfig {
        let mut c = self.base.clone();
        for &e in &self.active {
            c.set(e, true);
        }
        c
    }

    /// The configuration with every active edge closed (the minimal state).
    pub fn bottom_state(&self) -> RcConfig {
        self.base.clone()
    }

    pub fn chain(&self, config: RcConfig) -> Result<Chain> {
        if config.len() != self.num_edges() {
            return Err(Error::InvalidParams(format!(
                "configuration has {} edges, dynamics has {}",
                config.len(),
                self.num_edges()
            )));
        }
        Ok(Chain {
            config,
            time: 0,
            search: CutSearch::new(&self.graph, &self.wiring),
        })
    }

    pub fn top_chain(&self) -> Chain {
        self.chain(self.top_state()).expect("state sized by construction")
    }

    pub fn bottom_chain(&self) -> Chain {
        self.chain(self.bottom_state()).expect("state sized by construction")
    }

    pub fn draws(&self, seed: u64, stream: u64) -> DrawStream {
        DrawStream::new(seed, stream)
    }

    #[inline]
    pub fn next_draw(&self, stream: &mut DrawStream) -> UpdateDraw {
        stream.next_draw(&self.active)
    }

    /// Whether `draw` leaves its edge open in `chain`'s current state. The cut
    /// probability never exceeds `p` when `q ≥ 1`, so the connectivity search
    /// only runs when `u` falls between the two thresholds.
    #[inline]
    fn decide(&self, chain: &mut Chain, draw: UpdateDraw) -> bool {
        if draw.u < self.cut_prob {
            true
        } else if draw.u >= self.params.p {
            false
        } else {
            // strictly-less comparison; ties are resolved as closed
            !chain
                .search
                .is_cut_edge(&self.graph, &self.wiring, &chain.config, draw.edge)
        }
    }

    /// Applies one heat-bath update; returns the new state of the edge.
    #[inline]
    pub fn step(&self, chain: &mut Chain, draw: UpdateDraw) -> bool {
        let open = self.decide(chain, draw);
        chain.config.set(draw.edge, open);
        chain.time += 1;
        open
    }

    /// Advances two chains with the same draw.
    pub fn coupled_step(&self, x: &mut Chain, y: &mut Chain, draw: UpdateDraw) -> Result<()> {
        if x.config.len() != self.num_edges() || y.config.len() != self.num_edges() {
            return Err(Error::InvalidParams("coupled chains live on different graphs".into()));
        }
        self.step(x, draw);
        self.step(y, draw);
        Ok(())
    }

    pub fn run(&self, chain: &mut Chain, draws: &mut DrawStream, steps: u64) {
        for _ in 0..steps {
            let d = self.next_draw(draws);
            self.step(chain, d);
        }
    }
}
