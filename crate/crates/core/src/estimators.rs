//! Monte Carlo estimators: connectivity decay, spatial mixing discrepancy,
//! sandwich traces and mixing-time scaling fits.

use rayon::prelude::*;

use crate::boundary::BoundaryCondition;
use crate::config::{graph_components, RcConfig};
use crate::duality::critical_point;
use crate::dynamics::{
    cftp_coupled, cftp_sample, Chain, CouplingReport, DrawStream, Dynamics, RcParams, CFTP_DEFAULT_CAP,
};
use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, EdgeId, Lattice, VertexId};
use crate::oracle::{exact_measure, Conditioning, DEFAULT_ENUMERATION_CAP};
use crate::stats::{self, LinearFit};

/// How stationary samples are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampler {
    /// Independent exact samples by coupling from the past.
    Cftp { cap: u64 },
    /// Long runs of the dynamics. Each replica is burned in and then read every
    /// `thin` steps; consecutive readings are grouped into batches of `batch`
    /// and standard errors come from the batch means.
    LongRun {
        replicas: usize,
        burn_in: u64,
        thin: u64,
        batch: usize,
    },
}

impl Sampler {
    pub fn cftp() -> Self {
        Sampler::Cftp { cap: CFTP_DEFAULT_CAP }
    }

    /// Long-run defaults for `m` edges: burn-in of `10·m·ln m` steps and one
    /// reading per sweep.
    pub fn long_run(m: usize, replicas: usize) -> Self {
        let mf = m as f64;
        Sampler::LongRun {
            replicas: replicas.max(1),
            burn_in: (10.0 * mf * mf.ln().max(1.0)).ceil() as u64,
            thin: m as u64,
            batch: 50,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Sampler::Cftp { .. } => "cftp",
            Sampler::LongRun { .. } => "long-run",
        }
    }
}

/// Means of `f` over roughly `samples` stationary configurations, grouped
/// into batches. Each batch is one vector of per-coordinate means; batches
/// are close to independent, so the spread of batch means gives the error.
pub fn batch_means<F>(dynamics: &Dynamics, sampler: Sampler, samples: usize, seed: u64, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&RcConfig) -> Vec<f64> + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidParams("samples must be positive".into()));
    }
    match sampler {
        Sampler::Cftp { cap } => (0..samples as u64)
            .into_par_iter()
            .map(|s| cftp_sample(dynamics, seed, s, cap).map(|out| f(&out.config)))
            .collect(),
        Sampler::LongRun {
            replicas,
            burn_in,
            thin,
            batch,
        } => {
            if replicas == 0 || thin == 0 || batch == 0 {
                return Err(Error::InvalidParams("replicas, thin and batch must be positive".into()));
            }
            let per_replica = samples.div_ceil(replicas);
            let batches: Vec<Vec<Vec<f64>>> = (0..replicas as u64)
                .into_par_iter()
                .map(|r| {
                    // half of the replicas start from each extremal state
                    let mut chain = if r % 2 == 0 {
                        dynamics.top_chain()
                    } else {
                        dynamics.bottom_chain()
                    };
                    let mut draws = DrawStream::new(seed, r);
                    dynamics.run(&mut chain, &mut draws, burn_in);
                    let mut out = Vec::new();
                    let mut acc: Vec<f64> = Vec::new();
                    let mut in_batch = 0;
                    for _ in 0..per_replica {
                        dynamics.run(&mut chain, &mut draws, thin);
                        let v = f(&chain.config);
                        if acc.is_empty() {
                            acc = vec![0.0; v.len()];
                        }
                        for (a, x) in acc.iter_mut().zip(&v) {
                            *a += x;
                        }
                        in_batch += 1;
                        if in_batch == batch {
                            out.push(acc.iter().map(|a| a / batch as f64).collect());
                            acc.iter_mut().for_each(|a| *a = 0.0);
                            in_batch = 0;
                        }
                    }
                    if in_batch > 0 {
                        out.push(acc.iter().map(|a| a / in_batch as f64).collect());
                    }
                    out
                })
                .collect();
            Ok(batches.into_iter().flatten().collect())
        }
    }
}

/// Mean and standard error per coordinate of a set of batch means.
fn summarize(batches: &[Vec<f64>], dim: usize) -> Vec<(f64, f64)> {
    (0..dim)
        .map(|k| {
            let xs: Vec<f64> = batches.iter().map(|b| b[k]).collect();
            (stats::mean(&xs), stats::std_error(&xs))
        })
        .collect()
}

/// Pairs of vertices at one separation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGroup {
    pub distance: f64,
    pub pairs: Vec<(VertexId, VertexId)>,
}

/// All axis-parallel pairs at distance `d` whose endpoints stay at least
/// `margin` from the boundary, horizontal and vertical.
pub fn axis_pairs(lat: &Lattice, d: usize, margin: usize) -> PairGroup {
    let n = lat.n();
    let mut pairs = Vec::new();
    if n > 2 * margin + d {
        let hi = n - 1 - margin;
        for y in margin..=hi {
            for x in margin..=hi - d {
                pairs.push((lat.vertex(x, y), lat.vertex(x + d, y)));
                pairs.push((lat.vertex(y, x), lat.vertex(y, x + d)));
            }
        }
    }
    PairGroup {
        distance: d as f64,
        pairs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayPoint {
    pub distance: f64,
    /// Pairs averaged at this distance (excluding trivially wired ones).
    pub pairs: usize,
    pub probability: f64,
    pub std_error: f64,
    /// Every pair at this distance sits in one wired block, so the
    /// probability is 1 regardless of the configuration.
    pub trivially_wired: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayEstimate {
    pub points: Vec<DecayPoint>,
    pub samples: usize,
    pub sampler: Sampler,
    /// Weighted least-squares fit of `ln P` against distance over the points
    /// with a positive estimate.
    pub fit: Option<LinearFit>,
    pub warnings: Vec<String>,
}

impl DecayEstimate {
    /// Whether each estimate exceeds the next by more than `z` combined
    /// standard errors.
    pub fn strictly_decreasing(&self, z: f64) -> bool {
        self.points.windows(2).all(|w| {
            let se = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
            w[0].probability - w[1].probability > z * se
        })
    }
}

/// Estimates `P(x ↔ y)` for each group, averaging over the pairs in the
/// group and over stationary samples.
pub fn estimate_decay(
    lat: &Lattice,
    bc: &BoundaryCondition,
    params: RcParams,
    groups: &[PairGroup],
    sampler: Sampler,
    samples: usize,
    seed: u64,
) -> Result<DecayEstimate> {
    let dynamics = Dynamics::new(lat, bc, params)?;
    let wiring = dynamics.wiring().clone();
    let mut warnings = Vec::new();
    if params.p() >= critical_point(params.q())? {
        warnings.push(format!(
            "p = {} is not below the self-dual point {:.6}; decay need not be exponential",
            params.p(),
            critical_point(params.q())?
        ));
    }
    let mut live: Vec<Vec<(VertexId, VertexId)>> = Vec::with_capacity(groups.len());
    for g in groups {
        for &(u, v) in &g.pairs {
            if u.max(v) >= lat.num_vertices() {
                return Err(Error::InvalidParams(format!("pair ({u}, {v}) is outside the lattice")));
            }
        }
        let kept: Vec<_> = g
            .pairs
            .iter()
            .copied()
            .filter(|&(u, v)| !wiring.same_block(u, v))
            .collect();
        if kept.len() < g.pairs.len() {
            warnings.push(format!(
                "{} pair(s) at distance {} lie in one wired block and were dropped",
                g.pairs.len() - kept.len(),
                g.distance
            ));
        }
        live.push(kept);
    }
    let graph = dynamics.graph().clone();
    let batches = batch_means(&dynamics, sampler, samples, seed, |cfg| {
        let view = graph_components(&graph, &wiring, cfg);
        live.iter()
            .map(|pairs| {
                if pairs.is_empty() {
                    return 1.0;
                }
                let hits = pairs.iter().filter(|&&(u, v)| view.connected(u, v)).count();
                hits as f64 / pairs.len() as f64
            })
            .collect()
    })?;
    let summary = summarize(&batches, groups.len());
    let points: Vec<DecayPoint> = groups
        .iter()
        .zip(&live)
        .zip(summary)
        .map(|((g, kept), (prob, se))| DecayPoint {
            distance: g.distance,
            pairs: kept.len(),
            probability: prob,
            std_error: se,
            trivially_wired: kept.is_empty() && !g.pairs.is_empty(),
        })
        .collect();
    for pt in &points {
        if pt.probability == 0.0 {
            warnings.push(format!(
                "no connection observed at distance {}; excluded from the fit",
                pt.distance
            ));
        }
    }
    let fit_points: Vec<&DecayPoint> = points
        .iter()
        .filter(|pt| pt.probability > 0.0 && !pt.trivially_wired)
        .collect();
    let xs: Vec<f64> = fit_points.iter().map(|pt| pt.distance).collect();
    let ys: Vec<f64> = fit_points.iter().map(|pt| pt.probability.ln()).collect();
    // delta method: var(ln P) ≈ (se/P)²
    let ws: Vec<f64> = fit_points
        .iter()
        .map(|pt| {
            let rel = pt.std_error / pt.probability;
            if rel > 0.0 {
                1.0 / (rel * rel)
            } else {
                1.0
            }
        })
        .collect();
    let fit = stats::weighted_fit(&xs, &ys, &ws);
    Ok(DecayEstimate {
        points,
        samples,
        sampler,
        fit,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialBackend {
    Oracle,
    CoupledCftp,
}

impl SpatialBackend {
    pub fn name(&self) -> &'static str {
        match self {
            SpatialBackend::Oracle => "oracle",
            SpatialBackend::CoupledCftp => "coupled-cftp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialOptions {
    pub samples: usize,
    pub seed: u64,
    /// Use exact enumeration when the box has at most this many edges.
    pub oracle_cap: usize,
    pub cftp_cap: u64,
}

impl SpatialOptions {
    pub fn new(samples: usize, seed: u64) -> Self {
        SpatialOptions {
            samples,
            seed,
            oracle_cap: 20.min(DEFAULT_ENUMERATION_CAP),
            cftp_cap: CFTP_DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialEstimate {
    pub edge: EdgeId,
    pub radius: usize,
    pub box_edges: usize,
    /// `μ(e open | outside = first clamp)`.
    pub marginal_a: f64,
    /// `μ(e open | outside = second clamp)`.
    pub marginal_b: f64,
    pub discrepancy: f64,
    pub std_error: f64,
    pub samples: usize,
    pub backend: SpatialBackend,
}

/// Discrepancy at `e` between the all-open and all-closed conditions outside
/// the box of radius `r`.
pub fn estimate_spatial_mixing(
    lat: &Lattice,
    bc: &BoundaryCondition,
    params: RcParams,
    e: EdgeId,
    r: usize,
    opts: &SpatialOptions,
) -> Result<SpatialEstimate> {
    let region = lat.box_region(e, r)?;
    let m = lat.num_edges();
    estimate_spatial_mixing_with(lat, bc, params, &region, &RcConfig::full(m), &RcConfig::empty(m), opts)
}

/// Discrepancy at the centre edge of `region` between two arbitrary
/// conditions on the edges outside it.
pub fn estimate_spatial_mixing_with(
    lat: &Lattice,
    bc: &BoundaryCondition,
    params: RcParams,
    region: &BoxRegion,
    clamp_a: &RcConfig,
    clamp_b: &RcConfig,
    opts: &SpatialOptions,
) -> Result<SpatialEstimate> {
    let m = lat.num_edges();
    if clamp_a.len() != m || clamp_b.len() != m {
        return Err(Error::InvalidParams("clamp length does not match the lattice".into()));
    }
    let e = region.center_edge;
    let box_edges = region.inner_edges.len();
    if box_edges <= opts.oracle_cap {
        let marginal = |clamp: &RcConfig| -> Result<f64> {
            let cond = Conditioning {
                fixed: region.outer_edges.iter().map(|&f| (f, clamp.is_open(f))).collect(),
            };
            Ok(exact_measure(lat, bc, params, &cond)?.edge_marginal(e))
        };
        let a = marginal(clamp_a)?;
        let b = marginal(clamp_b)?;
        return Ok(SpatialEstimate {
            edge: e,
            radius: region.radius,
            box_edges,
            marginal_a: a,
            marginal_b: b,
            discrepancy: (a - b).abs(),
            std_error: 0.0,
            samples: 0,
            backend: SpatialBackend::Oracle,
        });
    }
    if opts.samples == 0 {
        return Err(Error::InvalidParams("samples must be positive".into()));
    }
    let base = Dynamics::new(lat, bc, params)?;
    let sys_a = base.clone().with_clamp(region.inner_edges.clone(), clamp_a)?;
    let sys_b = base.with_clamp(region.inner_edges.clone(), clamp_b)?;
    let pairs: Vec<(bool, bool)> = (0..opts.samples as u64)
        .into_par_iter()
        .map(|s| {
            cftp_coupled(&[&sys_a, &sys_b], opts.seed, s, opts.cftp_cap)
                .map(|out| (out[0].0.is_open(e), out[1].0.is_open(e)))
        })
        .collect::<Result<_>>()?;
    let n = pairs.len() as f64;
    let a = pairs.iter().filter(|p| p.0).count() as f64 / n;
    let b = pairs.iter().filter(|p| p.1).count() as f64 / n;
    // the samples share draws, so the paired differences carry the error
    let diffs: Vec<f64> = pairs.iter().map(|&(x, y)| x as u8 as f64 - y as u8 as f64).collect();
    Ok(SpatialEstimate {
        edge: e,
        radius: region.radius,
        box_edges,
        marginal_a: a,
        marginal_b: b,
        discrepancy: (a - b).abs(),
        std_error: stats::std_error(&diffs),
        samples: pairs.len(),
        backend: SpatialBackend::CoupledCftp,
    })
}

/// Disagreement indicators at the centre edge, recorded every `every` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichTrace {
    pub times: Vec<u64>,
    /// `Z⁺_t(e) ≠ Z⁻_t(e)`.
    pub box_disagree: Vec<bool>,
    /// `X_t(e) ≠ Y_t(e)`.
    pub chain_disagree: Vec<bool>,
}

/// Runs the four-chain sandwich: `X` from all open and `Y` from all closed on
/// the whole lattice, and `Z⁺`, `Z⁻` from all open and all closed updating
/// only edges inside the box. All four see the same draws. The ordering
/// `Z⁻ ⊆ Y ⊆ X ⊆ Z⁺` is checked after every step.
#[allow(clippy::too_many_arguments)]
pub fn sandwich_run(
    lat: &Lattice,
    bc: &BoundaryCondition,
    params: RcParams,
    region: &BoxRegion,
    steps: u64,
    every: u64,
    seed: u64,
    stream: u64,
) -> Result<SandwichTrace> {
    if every == 0 {
        return Err(Error::InvalidParams("recording interval must be positive".into()));
    }
    let m = lat.num_edges();
    let full = Dynamics::new(lat, bc, params)?;
    let plus = full
        .clone()
        .with_clamp(region.inner_edges.clone(), &RcConfig::full(m))?;
    let minus = full
        .clone()
        .with_clamp(region.inner_edges.clone(), &RcConfig::empty(m))?;
    let mut in_box = vec![false; m];
    for &f in &region.inner_edges {
        in_box[f] = true;
    }
    let mut x = full.top_chain();
    let mut y = full.bottom_chain();
    let mut zp = plus.top_chain();
    let mut zm = minus.bottom_chain();
    let mut draws = DrawStream::new(seed, stream);
    let e = region.center_edge;
    let mut trace = SandwichTrace {
        times: Vec::new(),
        box_disagree: Vec::new(),
        chain_disagree: Vec::new(),
    };
    let mut record = |t: u64, x: &Chain, y: &Chain, zp: &Chain, zm: &Chain| {
        trace.times.push(t);
        trace.box_disagree.push(zp.config.is_open(e) != zm.config.is_open(e));
        trace.chain_disagree.push(x.config.is_open(e) != y.config.is_open(e));
    };
    record(0, &x, &y, &zp, &zm);
    for t in 1..=steps {
        let d = full.next_draw(&mut draws);
        full.step(&mut x, d);
        full.step(&mut y, d);
        if in_box[d.edge] {
            plus.step(&mut zp, d);
            minus.step(&mut zm, d);
        }
        if !(zm.config.is_subset(&y.config) && y.config.is_subset(&x.config) && x.config.is_subset(&zp.config)) {
            return Err(Error::ContainmentViolation {
                step: t,
                detail: format!("sandwich broken after updating edge {}", d.edge),
            });
        }
        if t % every == 0 {
            record(t, &x, &y, &zp, &zm);
        }
    }
    Ok(trace)
}

/// Fraction of replicas with `Z⁺_t(e) ≠ Z⁻_t(e)` and `X_t(e) ≠ Y_t(e)` at
/// each recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichSummary {
    pub times: Vec<u64>,
    pub box_disagree: Vec<f64>,
    pub chain_disagree: Vec<f64>,
    pub replicas: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn sandwich_replicas(
    lat: &Lattice,
    bc: &BoundaryCondition,
    params: RcParams,
    region: &BoxRegion,
    steps: u64,
    every: u64,
    seed: u64,
    replicas: usize,
) -> Result<SandwichSummary> {
    if replicas == 0 {
        return Err(Error::InvalidParams("replicas must be positive".into()));
    }
    let traces: Vec<SandwichTrace> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| sandwich_run(lat, bc, params, region, steps, every, seed, r))
        .collect::<Result<_>>()?;
    let len = traces[0].times.len();
    let frac = |pick: fn(&SandwichTrace) -> &Vec<bool>| -> Vec<f64> {
        (0..len)
            .map(|i| traces.iter().filter(|t| pick(t)[i]).count() as f64 / replicas as f64)
            .collect()
    };
    Ok(SandwichSummary {
        times: traces[0].times.clone(),
        box_disagree: frac(|t| &t.box_disagree),
        chain_disagree: frac(|t| &t.chain_disagree),
        replicas,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub edges: usize,
    pub replicas: usize,
    pub capped: usize,
    /// Median over the replicas that coalesced.
    pub median: f64,
    pub t_coup: Option<f64>,
    /// `median / (m ln m)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub rows: Vec<ScalingRow>,
    /// Slope of `ln median` against `ln m`.
    pub exponent: Option<LinearFit>,
    /// Largest over smallest ratio across sizes.
    pub ratio_spread: f64,
    pub warnings: Vec<String>,
}

/// Tabulates coupling times across sizes and fits a power law in `m`.
pub fn fit_mixing_scaling(reports: &[(usize, CouplingReport)]) -> Result<ScalingFit> {
    if reports.len() < 3 {
        return Err(Error::InvalidParams(format!(
            "a scaling fit needs at least 3 sizes, got {}",
            reports.len()
        )));
    }
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(reports.len());
    for (n, rep) in reports {
        let capped = rep.capped();
        if capped > 0 {
            warnings.push(format!("n = {n}: {capped} replica(s) hit the cap and were excluded"));
        }
        let done = CouplingReport {
            times: rep.times.iter().copied().filter(Option::is_some).collect(),
            ..rep.clone()
        };
        let median = done
            .median()
            .ok_or_else(|| Error::InvalidParams(format!("n = {n}: no replica coalesced")))?;
        rows.push(ScalingRow {
            n: *n,
            edges: rep.edges,
            replicas: rep.times.len(),
            capped,
            median,
            t_coup: rep.t_coup(),
            ratio: median / rep.m_log_m(),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.edges as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median.ln()).collect();
    let ratios = rows.iter().map(|r| r.ratio);
    let max = ratios.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.fold(f64::INFINITY, f64::min);
    Ok(ScalingFit {
        exponent: stats::ols_fit(&xs, &ys),
        rows,
        ratio_spread: max / min,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{coupling_time, TimeMode};
    use crate::lattice::Side;

    fn params(p: f64, q: f64) -> RcParams {
        RcParams::new(p, q).unwrap()
    }

    #[test]
    fn axis_pairs_count() {
        let lat = Lattice::new(10).unwrap();
        let g = axis_pairs(&lat, 3, 2);
        // 6 rows, 3 starts, two orientations
        assert_eq!(g.pairs.len(), 6 * 3 * 2);
        assert!(axis_pairs(&lat, 7, 2).pairs.is_empty());
    }

    #[test]
    fn decay_matches_oracle_on_small_lattice() {
        let lat = Lattice::new(3).unwrap();
        let bc = BoundaryCondition::free(&lat);
        let pr = params(0.5, 2.0);
        let groups = vec![
            PairGroup {
                distance: 1.0,
                pairs: vec![(lat.vertex(0, 0), lat.vertex(1, 0))],
            },
            PairGroup {
                distance: 2.0,
                pairs: vec![(lat.vertex(0, 0), lat.vertex(2, 0))],
            },
        ];
        let est = estimate_decay(&lat, &bc, pr, &groups, Sampler::cftp(), 20_000, 11).unwrap();
        let exact = exact_measure(&lat, &bc, pr, &Conditioning::none()).unwrap();
        for (pt, g) in est.points.iter().zip(&groups) {
            let (u, v) = g.pairs[0];
            let truth = exact.connectivity_prob(u, v);
            assert!((pt.probability - truth).abs() < 4.0 * pt.std_error, "{pt:?} vs {truth}");
        }
        assert!(est.points[0].probability > est.points[1].probability);
    }

    #[test]
    fn long_run_agrees_with_oracle() {
        let lat = Lattice::new(3).unwrap();
        let bc = BoundaryCondition::side_homogeneous(&lat, &[Side::Left, Side::Right]);
        let pr = params(0.4, 2.0);
        let groups = vec![PairGroup {
            distance: 1.0,
            pairs: vec![(lat.vertex(1, 1), lat.vertex(2, 1))],
        }];
        let sampler = Sampler::LongRun {
            replicas: 4,
            burn_in: 500,
            thin: 12,
            batch: 20,
        };
        let est = estimate_decay(&lat, &bc, pr, &groups, sampler, 40_000, 5).unwrap();
        let exact = exact_measure(&lat, &bc, pr, &Conditioning::none()).unwrap();
        let truth = exact.connectivity_prob(lat.vertex(1, 1), lat.vertex(2, 1));
        let pt = &est.points[0];
        assert!((pt.probability - truth).abs() < 4.0 * pt.std_error, "{pt:?} vs {truth}");
    }

    #[test]
    fn wired_boundary_pairs_are_flagged() {
        let lat = Lattice::new(6).unwrap();
        let bc = BoundaryCondition::wired(&lat);
        let groups = vec![PairGroup {
            distance: 5.0,
            pairs: vec![(lat.vertex(0, 0), lat.vertex(5, 0))],
        }];
        let est = estimate_decay(&lat, &bc, params(0.3, 2.0), &groups, Sampler::cftp(), 10, 1).unwrap();
        assert!(est.points[0].trivially_wired);
        assert_eq!(est.points[0].probability, 1.0);
        assert!(!est.warnings.is_empty());
    }

    #[test]
    fn supercritical_warns() {
        let lat = Lattice::new(4).unwrap();
        let bc = BoundaryCondition::free(&lat);
        let g = vec![axis_pairs(&lat, 1, 0)];
        let est = estimate_decay(&lat, &bc, params(0.7, 2.0), &g, Sampler::cftp(), 10, 1).unwrap();
        assert!(est.warnings.iter().any(|w| w.contains("self-dual")));
    }

    #[test]
    fn oracle_backend_matches_conditioned_measure() {
        let lat = Lattice::new(6).unwrap();
        let bc = BoundaryCondition::wired(&lat);
        let pr = params(0.5, 2.0);
        let e = lat.horizontal_edge(2, 2);
        let est = estimate_spatial_mixing(&lat, &bc, pr, e, 1, &SpatialOptions::new(0, 0)).unwrap();
        assert_eq!(est.backend, SpatialBackend::Oracle);
        let region = lat.box_region(e, 1).unwrap();
        let plus = exact_measure(&lat, &bc, pr, &Conditioning::all(&region.outer_edges, true)).unwrap();
        let minus = exact_measure(&lat, &bc, pr, &Conditioning::all(&region.outer_edges, false)).unwrap();
        assert!((est.marginal_a - plus.edge_marginal(e)).abs() < 1e-12);
        assert!((est.marginal_b - minus.edge_marginal(e)).abs() < 1e-12);
        assert!(est.discrepancy > 0.0);
    }

    #[test]
    fn cftp_backend_agrees_with_oracle() {
        let lat = Lattice::new(6).unwrap();
        let bc = BoundaryCondition::free(&lat);
        let pr = params(0.5, 2.0);
        let e = lat.horizontal_edge(2, 2);
        let mut opts = SpatialOptions::new(20_000, 3);
        let exact = estimate_spatial_mixing(&lat, &bc, pr, e, 1, &opts).unwrap();
        opts.oracle_cap = 0;
        let mc = estimate_spatial_mixing(&lat, &bc, pr, e, 1, &opts).unwrap();
        assert_eq!(mc.backend, SpatialBackend::CoupledCftp);
        assert!((mc.discrepancy - exact.discrepancy).abs() < 4.0 * mc.std_error + 1e-9);
        assert!(mc.marginal_a >= mc.marginal_b);
    }

    #[test]
    fn sandwich_holds_and_records() {
        let lat = Lattice::new(6).unwrap();
        let bc = BoundaryCondition::free(&lat);
        let region = lat.box_region(lat.horizontal_edge(2, 2), 1).unwrap();
        let s = sandwich_replicas(&lat, &bc, params(0.6, 2.0), &region, 5_000, 100, 9, 8).unwrap();
        assert_eq!(s.times.len(), 51);
        assert_eq!(s.box_disagree[0], 1.0);
        assert_eq!(s.chain_disagree[0], 1.0);
        // the pair of box chains dominates the pair of full chains
        for (b, c) in s.box_disagree.iter().zip(&s.chain_disagree) {
            assert!(b >= c);
        }
    }

    #[test]
    fn scaling_needs_three_sizes() {
        let lat = Lattice::new(4).unwrap();
        let d = Dynamics::new(&lat, &BoundaryCondition::free(&lat), params(0.4, 2.0)).unwrap();
        let rep = coupling_time(&d, 1, 5, 0.25, TimeMode::Discrete, None).unwrap();
        assert!(fit_mixing_scaling(&[(4, rep.clone()), (4, rep.clone())]).is_err());
        let fit = fit_mixing_scaling(&[(4, rep.clone()), (4, rep.clone()), (4, rep)]).unwrap();
        assert!((fit.ratio_spread - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_exponent_from_sizes() {
        let mut reports = Vec::new();
        for n in [4, 6, 8] {
            let lat = Lattice::new(n).unwrap();
            let d = Dynamics::new(&lat, &BoundaryCondition::free(&lat), params(0.4, 1.0)).unwrap();
            reports.push((n, coupling_time(&d, 2, 15, 0.25, TimeMode::Discrete, None).unwrap()));
        }
        let fit = fit_mixing_scaling(&reports).unwrap();
        let slope = fit.exponent.unwrap().slope;
        // coupon collector: m ln m growth
        assert!(slope > 0.9 && slope < 1.6, "{slope}");
    }
}
