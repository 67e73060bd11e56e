//! Exact enumeration on small instances: partition functions, measures,
//! marginals, connectivity probabilities, the heat-bath transition matrix and
//! total-variation curves.
//!
//! Everything here works on an arbitrary multigraph with a wiring partition,
//! so boundary-contracted and dual graphs are first-class inputs. A measure
//! is indexed by bitmask over its free edges in increasing edge order; with
//! no clamped edges that is exactly the configuration bitmask.

use rayon::prelude::*;

use crate::boundary::{BoundaryCondition, Wiring};
use crate::config::{graph_components, RcConfig};
use crate::dsu::DisjointSets;
use crate::dynamics::RcParams;
use crate::error::{Error, Result};
use crate::lattice::{EdgeGraph, EdgeId, Lattice, VertexId};

pub const DEFAULT_ENUMERATION_CAP: usize = 24;
pub const DEFAULT_TRANSITION_CAP: usize = 14;

/// Edges held at fixed states while the others are enumerated.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Conditioning {
    pub fixed: Vec<(EdgeId, bool)>,
}

impl Conditioning {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn all(edges: &[EdgeId], open: bool) -> Self {
        Conditioning {
            fixed: edges.iter().map(|&e| (e, open)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactMeasure {
    graph: EdgeGraph,
    wiring: Wiring,
    params: RcParams,
    free_edges: Vec<EdgeId>,
    /// Clamped edges at their fixed states; free edges closed.
    base: RcConfig,
    /// ln Z over the free edges (clamped edges contribute no factor).
    log_partition: f64,
    probabilities: Vec<f64>,
    component_counts: Vec<u32>,
}

pub fn exact_measure(
    lat: &Lattice,
    bc: &BoundaryCondition,
    params: RcParams,
    condition: &Conditioning,
) -> Result<ExactMeasure> {
    bc.check_lattice(lat)?;
    exact_measure_on(lat.graph(), &bc.wiring(), params, condition, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_measure_on(
    graph: &EdgeGraph,
    wiring: &Wiring,
    params: RcParams,
    condition: &Conditioning,
    cap: usize,
) -> Result<ExactMeasure> {
    let m = graph.num_edges();
    let mut fixed = vec![None; m];
    for &(e, open) in &condition.fixed {
        if e >= m {
            return Err(Error::InvalidEdge { edge: e, edge_count: m });
        }
        fixed[e] = Some(open);
    }
    let free_edges: Vec<EdgeId> = (0..m).filter(|&e| fixed[e].is_none()).collect();
    let free = free_edges.len();
    if free > cap || free >= 63 {
        return Err(Error::EnumerationCap { free, cap });
    }
    let base = RcConfig::from_open_edges(m, (0..m).filter(|&e| fixed[e] == Some(true)));

    // Contract the clamped-open edges and wirings once; each mask then only
    // unions the compact endpoints of its open free edges.
    let base_view = graph_components(graph, wiring, &base);
    let base_count = base_view.component_count;
    let mut compact: Vec<usize> = Vec::new();
    let mut ends: Vec<(usize, usize)> = Vec::with_capacity(free);
    for &e in &free_edges {
        let (a, b) = graph.endpoints(e);
        let mut id = |v: VertexId| {
            let root = base_view.component_id[v];
            match compact.iter().position(|&r| r == root) {
                Some(i) => i,
                None => {
                    compact.push(root);
                    compact.len() - 1
                }
            }
        };
        let ia = id(a);
        let ib = id(b);
        ends.push((ia, ib));
    }
    let k = compact.len();

    let (lp, lq, lnp) = (params.p().ln(), params.q().ln(), (1.0 - params.p()).ln());
    let total = 1usize << free;
    let mut component_counts = vec![0u32; total];
    let mut log_w = vec![0f64; total];
    const CHUNK: usize = 1 << 12;
    component_counts
        .par_chunks_mut(CHUNK)
        .zip(log_w.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(chunk, (counts, logs))| {
            let mut dsu = DisjointSets::new(k);
            for (i, (c, lw)) in counts.iter_mut().zip(logs.iter_mut()).enumerate() {
                let mask = chunk * CHUNK + i;
                dsu.reset();
                let mut merges = 0;
                let mut bits = mask;
                while bits != 0 {
                    let j = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    if dsu.union(ends[j].0, ends[j].1) {
                        merges += 1;
                    }
                }
                let comps = base_count - merges;
                let open = mask.count_ones() as f64;
                *c = comps as u32;
                *lw = open * lp + (free as f64 - open) * lnp + comps as f64 * lq;
            }
        });

    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_w.iter().map(|l| (l - max).exp()).sum();
    let log_partition = max + sum.ln();
    let probabilities = log_w.into_iter().map(|l| (l - log_partition).exp()).collect();
    Ok(ExactMeasure {
        graph: graph.clone(),
        wiring: wiring.clone(),
        params,
        free_edges,
        base,
        log_partition,
        probabilities,
        component_counts,
    })
}

impl ExactMeasure {
    pub fn partition_function(&self) -> f64 {
        self.log_partition.exp()
    }

    pub fn log_partition_function(&self) -> f64 {
        self.log_partition
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn free_edges(&self) -> &[EdgeId] {
        &self.free_edges
    }

    pub fn params(&self) -> RcParams {
        self.params
    }

    pub fn graph(&self) -> &EdgeGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// c(A, η) for the configuration with the given free-edge mask.
    pub fn component_count(&self, index: usize) -> u32 {
        self.component_counts[index]
    }

    /// The full configuration for a free-edge mask.
    pub fn config_at(&self, index: usize) -> RcConfig {
        let mut c = self.base.clone();
        for (j, &e) in self.free_edges.iter().enumerate() {
            if index >> j & 1 == 1 {
                c.set(e, true);
            }
        }
        c
    }

    /// Free-edge mask of a full configuration; `None` if it disagrees with
    /// the clamp.
    pub fn index_of(&self, config: &RcConfig) -> Option<usize> {
        let mut idx = 0;
        for e in 0..self.graph.num_edges() {
            match self.free_edges.binary_search(&e) {
                Ok(j) => {
                    if config.is_open(e) {
                        idx |= 1 << j;
                    }
                }
                Err(_) => {
                    if config.is_open(e) != self.base.is_open(e) {
                        return None;
                    }
                }
            }
        }
        Some(idx)
    }

    pub fn probability(&self, config: &RcConfig) -> f64 {
        self.index_of(config).map_or(0.0, |i| self.probabilities[i])
    }

    /// μ(e = 1).
    pub fn edge_marginal(&self, e: EdgeId) -> f64 {
        match self.free_edges.binary_search(&e) {
            Ok(j) => self
                .probabilities
                .iter()
                .enumerate()
                .filter(|(i, _)| i >> j & 1 == 1)
                .map(|(_, p)| p)
                .sum(),
            Err(_) => f64::from(u8::from(self.base.is_open(e))),
        }
    }

    pub fn edge_marginals(&self) -> Vec<f64> {
        (0..self.graph.num_edges()).map(|e| self.edge_marginal(e)).collect()
    }

    /// Probability of an arbitrary event on configurations.
    pub fn event_prob(&self, event: impl Fn(&RcConfig) -> bool) -> f64 {
        (0..self.len())
            .filter(|&i| event(&self.config_at(i)))
            .map(|i| self.probabilities[i])
            .sum()
    }

    /// μ(u ↔ v), wired vertices identified.
    pub fn connectivity_prob(&self, u: VertexId, v: VertexId) -> f64 {
        self.event_prob(|c| graph_components(&self.graph, &self.wiring, c).connected(u, v))
    }

    /// Whether free edge `j` is a cut edge in the configuration `index`,
    /// decided by recounting components.
    fn is_cut(&self, index: usize, j: usize) -> bool {
        let with = index | 1 << j;
        let without = index & !(1 << j);
        self.component_counts[with] != self.component_counts[without]
    }
}

/// Sparse row-stochastic matrix of the heat-bath chain over free-edge masks.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

pub fn transition_matrix(
    lat: &Lattice,
    bc: &BoundaryCondition,
    params: RcParams,
) -> Result<(TransitionMatrix, ExactMeasure)> {
    bc.check_lattice(lat)?;
    transition_matrix_on(lat.graph(), &bc.wiring(), params, DEFAULT_TRANSITION_CAP)
}

/// Builds the transition matrix together with the exact measure it is checked
/// against. Open probabilities come from component recounts, not from the
/// simulation's connectivity search.
pub fn transition_matrix_on(
    graph: &EdgeGraph,
    wiring: &Wiring,
    params: RcParams,
    cap: usize,
) -> Result<(TransitionMatrix, ExactMeasure)> {
    let m = graph.num_edges();
    if m > cap {
        return Err(Error::EnumerationCap { free: m, cap });
    }
    let measure = exact_measure_on(graph, wiring, params, &Conditioning::none(), cap)?;
    Ok((TransitionMatrix::from_measure(&measure), measure))
}

impl TransitionMatrix {
    /// Heat-bath chain over the free edges of `measure`.
    pub fn from_measure(measure: &ExactMeasure) -> Self {
        let free = measure.free_edges.len();
        let states = measure.len();
        let p = measure.params.p();
        let q = measure.params.q();
        let pick = 1.0 / free as f64;
        let mut row_ptr = Vec::with_capacity(states + 1);
        let mut cols = Vec::with_capacity(states * (free + 1));
        let mut vals = Vec::with_capacity(states * (free + 1));
        row_ptr.push(0);
        for a in 0..states {
            let mut stay = 0.0;
            for j in 0..free {
                let open_prob = if measure.is_cut(a, j) {
                    p / (p + q * (1.0 - p))
                } else {
                    p
                };
                let (to_open, to_closed) = (a | 1 << j, a & !(1 << j));
                if to_open == a {
                    stay += pick * open_prob;
                    cols.push(to_closed);
                    vals.push(pick * (1.0 - open_prob));
                } else {
                    stay += pick * (1.0 - open_prob);
                    cols.push(to_open);
                    vals.push(pick * open_prob);
                }
            }
            cols.push(a);
            vals.push(stay);
            row_ptr.push(cols.len());
        }
        TransitionMatrix { row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row(&self, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[a]..self.row_ptr[a + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.row(a).filter(|&(c, _)| c == b).map(|(_, v)| v).sum()
    }

    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.dim())
            .map(|a| (self.row(a).map(|(_, v)| v).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// max |π(A)P(A,B) − π(B)P(B,A)| over all transitions.
    pub fn detailed_balance_error(&self, pi: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.dim() {
            for (b, v) in self.row(a) {
                if b != a {
                    worst = worst.max((pi[a] * v - pi[b] * self.entry(b, a)).abs());
                }
            }
        }
        worst
    }

    /// One step of a row distribution: `dist · P`.
    pub fn apply(&self, dist: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (a, &w) in dist.iter().enumerate() {
            if w != 0.0 {
                for (b, v) in self.row(a) {
                    out[b] += w * v;
                }
            }
        }
    }

    /// Stationary distribution by power iteration from the uniform vector,
    /// stopped when successive iterates differ by less than `tol` in L1.
    pub fn stationary(&self, tol: f64, max_iter: usize) -> (Vec<f64>, usize) {
        let n = self.dim();
        let mut cur = vec![1.0 / n as f64; n];
        let mut next = vec![0.0; n];
        for it in 1..=max_iter {
            self.apply(&cur, &mut next);
            let diff: f64 = cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut cur, &mut next);
            if diff < tol {
                return (cur, it);
            }
        }
        (cur, max_iter)
    }
}

pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvCurve {
    /// d(t) for t = 0..=t_max.
    pub distances: Vec<f64>,
    /// First t with d(t) ≤ 1/4, if reached.
    pub mixing_time: Option<usize>,
}

pub fn tv_curve(matrix: &TransitionMatrix, start: usize, measure: &ExactMeasure, t_max: usize) -> TvCurve {
    let pi = measure.probabilities();
    let mut dist = vec![0.0; matrix.dim()];
    dist[start] = 1.0;
    let mut next = vec![0.0; matrix.dim()];
    let mut distances = Vec::with_capacity(t_max + 1);
    distances.push(tv_distance(&dist, pi));
    for _ in 0..t_max {
        matrix.apply(&dist, &mut next);
        std::mem::swap(&mut dist, &mut next);
        distances.push(tv_distance(&dist, pi));
    }
    let mixing_time = distances.iter().position(|&d| d <= 0.25);
    TvCurve { distances, mixing_time }
}

/// Exact τ_mix(1/4): worst first-passage time below 1/4 over all starts.
/// Returns `(tau, worst_start)`, or `None` if some start does not mix by
/// `t_max`.
pub fn exact_mixing_time(matrix: &TransitionMatrix, measure: &ExactMeasure, t_max: usize) -> Option<(usize, usize)> {
    let mut worst = (0, 0);
    for start in 0..matrix.dim() {
        let t = tv_curve(matrix, start, measure, t_max).mixing_time?;
        if t > worst.0 {
            worst = (t, start);
        }
    }
    Some(worst)
}
