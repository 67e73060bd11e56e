//! Acceptance checks with pinned seeds. Each check returns a report with the
//! measured quantities; nothing here panics on a failed check.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boundary::BoundaryCondition;
use crate::config::{components, is_cut_edge, RcConfig};
use crate::duality::{sample_via_dual, DualBox};
use crate::dynamics::{cftp_sample, coupling_time, Dynamics, RcParams, TimeMode, CFTP_DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::estimators::{
    axis_pairs, estimate_decay, estimate_spatial_mixing, estimate_spatial_mixing_with, fit_mixing_scaling,
    sandwich_run, Sampler, SpatialOptions,
};
use crate::lattice::{Lattice, Side};
use crate::oracle::{exact_measure, transition_matrix, Conditioning};
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.details.join("; ")
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Exact,
    Coupling,
    Duality,
    Decay,
    Spatial,
    Scaling,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Exact,
        Suite::Coupling,
        Suite::Duality,
        Suite::Decay,
        Suite::Spatial,
        Suite::Scaling,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Exact => "exact",
            Suite::Coupling => "coupling",
            Suite::Duality => "duality",
            Suite::Decay => "decay",
            Suite::Spatial => "spatial",
            Suite::Scaling => "scaling",
        }
    }

    pub fn run(&self) -> Result<Vec<CriterionReport>> {
        match self {
            Suite::Exact => Ok(vec![exact_stationarity()?, cut_edge_equivalence()?]),
            Suite::Coupling => Ok(vec![cftp_exactness()?, monotonicity()?]),
            Suite::Duality => Ok(vec![duality()?]),
            Suite::Spatial => Ok(vec![counterexample()?]),
            Suite::Scaling => Ok(vec![mixing_scaling()?]),
            Suite::Decay => Ok(vec![connectivity_decay()?]),
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| {
            let known: Vec<&str> = Suite::ALL.iter().map(Suite::name).collect();
            Error::InvalidParams(format!("unknown suite '{s}'; expected one of {}", known.join(", ")))
        })
    }
}

fn params(p: f64, q: f64) -> RcParams {
    RcParams::new(p, q).expect("fixed parameters are valid")
}

fn report(id: u8, name: &'static str, start: Instant, passed: bool, details: Vec<String>) -> CriterionReport {
    CriterionReport {
        id,
        name,
        passed,
        details,
        elapsed: start.elapsed(),
    }
}

/// Detailed balance and stationarity of the exact transition matrix on Λ_2
/// and Λ_3 for every side-homogeneous condition.
pub fn exact_stationarity() -> Result<CriterionReport> {
    let start = Instant::now();
    let cases: Vec<(usize, BoundaryCondition, RcParams)> = [2usize, 3]
        .into_iter()
        .flat_map(|n| {
            let lat = Lattice::new(n).expect("valid size");
            BoundaryCondition::all_side_homogeneous(&lat)
                .into_iter()
                .flat_map(move |(_, bc)| {
                    [(0.3, 1.5), (0.5, 2.0), (0.7, 3.0)]
                        .into_iter()
                        .map(move |(p, q)| (n, bc.clone(), params(p, q)))
                })
        })
        .collect();
    let errors: Vec<(f64, f64, f64)> = cases
        .par_iter()
        .map(|(n, bc, pr)| {
            let lat = Lattice::new(*n)?;
            let (matrix, measure) = transition_matrix(&lat, bc, *pr)?;
            let pi = measure.probabilities();
            let balance = matrix.detailed_balance_error(pi);
            let (stationary, _) = matrix.stationary(1e-15, 1_000_000);
            let dist = stationary
                .iter()
                .zip(pi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok((balance, dist, matrix.max_row_sum_error()))
        })
        .collect::<Result<_>>()?;
    let balance = errors.iter().map(|e| e.0).fold(0.0, f64::max);
    let stationary = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    let rows = errors.iter().map(|e| e.2).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let passed = balance <= 1e-12 && stationary <= 1e-10 && secs < 60.0;
    Ok(report(
        1,
        "exact stationarity",
        start,
        passed,
        vec![
            format!("{} cases", cases.len()),
            format!("max detailed-balance error {balance:.2e} (<= 1e-12)"),
            format!("max |stationary - mu| {stationary:.2e} (<= 1e-10)"),
            format!("max row-sum error {rows:.2e}"),
            format!("runtime {secs:.1}s (< 60s)"),
        ],
    ))
}

/// CFTP against the oracle: chi-square over Λ_2 and edge marginals on Λ_3.
pub fn cftp_exactness() -> Result<CriterionReport> {
    let start = Instant::now();
    let pr = params(0.5, 2.0);
    let lat2 = Lattice::new(2)?;
    let free2 = BoundaryCondition::free(&lat2);
    let exact2 = exact_measure(&lat2, &free2, pr, &Conditioning::none())?;
    let dyn2 = Dynamics::new(&lat2, &free2, pr)?;
    let samples2 = 1_000_000u64;
    let masks: Vec<u64> = (0..samples2)
        .into_par_iter()
        .map(|s| cftp_sample(&dyn2, 0x5eed_0002, s, CFTP_DEFAULT_CAP).map(|o| o.config.to_mask()))
        .collect::<Result<_>>()?;
    let mut counts = vec![0u64; 16];
    for m in masks {
        counts[m as usize] += 1;
    }
    let stat = stats::chi_square_statistic(&counts, exact2.probabilities());
    let p_value = stats::chi_square_p_value(stat, 15);
    let chi_ok = p_value > 1e-3;

    let lat3 = Lattice::new(3)?;
    let free3 = BoundaryCondition::free(&lat3);
    let exact3 = exact_measure(&lat3, &free3, pr, &Conditioning::none())?;
    let dyn3 = Dynamics::new(&lat3, &free3, pr)?;
    let samples3 = 100_000u64;
    let configs: Vec<RcConfig> = (0..samples3)
        .into_par_iter()
        .map(|s| cftp_sample(&dyn3, 0x5eed_0003, s, CFTP_DEFAULT_CAP).map(|o| o.config))
        .collect::<Result<_>>()?;
    let worst_z = marginal_z_scores(&configs, &exact3.edge_marginals())
        .into_iter()
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let passed = chi_ok && worst_z < 4.0 && secs < 600.0;
    Ok(report(
        2,
        "CFTP exactness",
        start,
        passed,
        vec![
            format!("L2 chi-square {stat:.2} on 15 df, p-value {p_value:.4} (> 1e-3)"),
            format!("L3 worst marginal deviation {worst_z:.2} sigma (< 4)"),
            format!("runtime {secs:.1}s (< 600s)"),
        ],
    ))
}

/// |empirical − exact| / binomial sd for every edge.
fn marginal_z_scores(configs: &[RcConfig], exact: &[f64]) -> Vec<f64> {
    let n = configs.len() as f64;
    exact
        .iter()
        .enumerate()
        .map(|(e, &p)| {
            let hits = configs.iter().filter(|c| c.is_open(e)).count() as f64;
            let sd = (p * (1.0 - p) / n).sqrt();
            (hits / n - p).abs() / sd
        })
        .collect()
}

/// Grand coupling of three chains and the four-chain sandwich, checked after
/// every step.
pub fn monotonicity() -> Result<CriterionReport> {
    let start = Instant::now();
    let lat = Lattice::new(8)?;
    let bc = BoundaryCondition::free(&lat);
    let steps = 1_000_000u64;
    let mut details = Vec::new();
    let mut passed = true;
    for p in [0.3, 0.7] {
        let pr = params(p, 2.0);
        let d = Dynamics::new(&lat, &bc, pr)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0030);
        let middle = RcConfig::from_open_edges(lat.num_edges(), (0..lat.num_edges()).filter(|_| rng.random_bool(0.5)));
        let mut top = d.top_chain();
        let mut mid = d.chain(middle)?;
        let mut bottom = d.bottom_chain();
        let mut draws = d.draws(0x5eed_0031, 0);
        let mut violation = None;
        for t in 1..=steps {
            let draw = d.next_draw(&mut draws);
            d.step(&mut top, draw);
            d.step(&mut mid, draw);
            d.step(&mut bottom, draw);
            if !(bottom.config.is_subset(&mid.config) && mid.config.is_subset(&top.config)) {
                violation = Some(t);
                break;
            }
        }
        match violation {
            None => details.push(format!("p={p}: coupled chains ordered for {steps} steps")),
            Some(t) => {
                passed = false;
                details.push(format!("p={p}: containment violated at step {t}"));
            }
        }
        let region = lat.box_region(lat.horizontal_edge(3, 4), 2)?;
        match sandwich_run(&lat, &bc, pr, &region, steps, steps, 0x5eed_0032, 0) {
            Ok(_) => details.push(format!("p={p}: sandwich held for {steps} steps")),
            Err(Error::ContainmentViolation { step, detail }) => {
                passed = false;
                details.push(format!("p={p}: sandwich violated at step {step} ({detail})"));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report(3, "monotonicity", start, passed, details))
}

/// The bidirectional cut search against a full recount on random instances.
pub fn cut_edge_equivalence() -> Result<CriterionReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let trials = 10_000;
    let mut mismatches = 0;
    let mut cuts = 0;
    for i in 0..trials {
        let n = rng.random_range(2..=6);
        let lat = Lattice::new(n)?;
        let bc = if i % 2 == 0 {
            let sides: Vec<Side> = Side::ALL.into_iter().filter(|_| rng.random_bool(0.5)).collect();
            BoundaryCondition::side_homogeneous(&lat, &sides)
        } else {
            random_partition(&lat, &mut rng)?
        };
        let density = rng.random_range(0.05..0.95);
        let config = RcConfig::from_open_edges(
            lat.num_edges(),
            (0..lat.num_edges()).filter(|_| rng.random_bool(density)),
        );
        let e = rng.random_range(0..lat.num_edges());
        let fast = is_cut_edge(&lat, &config, &bc, e)?;
        let mut with = config.clone();
        with.set(e, true);
        let mut without = config;
        without.set(e, false);
        let recount =
            components(&lat, &without, &bc)?.component_count == components(&lat, &with, &bc)?.component_count + 1;
        cuts += recount as usize;
        if fast != recount {
            mismatches += 1;
        }
    }
    Ok(report(
        4,
        "cut-edge oracle equivalence",
        start,
        mismatches == 0,
        vec![
            format!("{trials} triples, {cuts} cut edges"),
            format!("{mismatches} disagreements (must be 0)"),
        ],
    ))
}

/// A uniformly labelled partition of ∂Λ into at most four blocks.
fn random_partition(lat: &Lattice, rng: &mut ChaCha8Rng) -> Result<BoundaryCondition> {
    let k = rng.random_range(1..=4);
    let mut blocks = vec![Vec::new(); k];
    for &v in lat.boundary() {
        blocks[rng.random_range(0..k)].push(v);
    }
    blocks.retain(|b| !b.is_empty());
    BoundaryCondition::from_blocks(lat, &blocks)
}

/// Exact factorization through the dual box, and super-critical sampling via
/// the dual.
pub fn duality() -> Result<CriterionReport> {
    let start = Instant::now();
    let lat2 = Lattice::new(2)?;
    let pair = DualBox::new(&lat2);
    let mut worst: f64 = 0.0;
    for (p, q) in [(0.3, 1.5), (0.5, 2.0), (0.7, 3.0), (0.8, 2.0)] {
        worst = worst.max(pair.factorization_error(params(p, q))?);
    }
    let pr = params(0.8, 2.0);
    let lat3 = Lattice::new(3)?;
    let free3 = BoundaryCondition::free(&lat3);
    let exact = exact_measure(&lat3, &free3, pr, &Conditioning::none())?;
    let samples = 100_000u64;
    let configs: Vec<RcConfig> = (0..samples)
        .into_par_iter()
        .map(|s| sample_via_dual(&lat3, &free3, pr, 0x5eed_0005, s, CFTP_DEFAULT_CAP))
        .collect::<Result<_>>()?;
    let worst_z = marginal_z_scores(&configs, &exact.edge_marginals())
        .into_iter()
        .fold(0.0, f64::max);
    Ok(report(
        5,
        "duality",
        start,
        worst <= 1e-12 && worst_z < 4.0,
        vec![
            format!("n=2 factorization max error {worst:.2e} (<= 1e-12)"),
            format!("p=0.8 q=2 L3 via dual: worst marginal deviation {worst_z:.2} sigma (< 4)"),
        ],
    ))
}

/// The wired-pair boundary condition on Λ_10 that breaks spatial mixing at a
/// bottom edge, and the side-homogeneous conditions that do not.
pub fn counterexample() -> Result<CriterionReport> {
    let start = Instant::now();
    let lat = Lattice::new(10)?;
    let pr = params(0.5, 3.0);
    let e = lat.horizontal_edge(4, 0);
    let (u, v) = lat.graph().endpoints(e);
    let psi = BoundaryCondition::from_blocks(&lat, &[vec![u, lat.vertex(0, 0)], vec![v, lat.vertex(9, 0)]])?;
    let mut details = Vec::new();

    let region = lat.box_region(e, 1)?;
    let open = exact_measure(&lat, &psi, pr, &Conditioning::all(&region.outer_edges, true))?.edge_marginal(e);
    let closed = exact_measure(&lat, &psi, pr, &Conditioning::all(&region.outer_edges, false))?.edge_marginal(e);
    let mut psi_ok = (open - 0.5).abs() <= 1e-12 && closed <= 0.4;
    details.push(format!(
        "psi r=1 ({} box edges): mu(e|out open) = {open:.15}, mu(e|out closed) = {closed:.6} (<= 0.4)",
        region.inner_edges.len()
    ));
    // the gap persists at larger boxes
    for r in [2, 3] {
        let est = estimate_spatial_mixing(
            &lat,
            &psi,
            pr,
            e,
            r,
            &SpatialOptions::new(10_000, 0x5eed_0060 + r as u64),
        )?;
        psi_ok &= est.discrepancy + 3.0 * est.std_error >= 0.1;
        details.push(format!(
            "psi r={r}: discrepancy {:.4} +- {:.4} (>= 0.1)",
            est.discrepancy, est.std_error
        ));
    }

    let mut homogeneous_ok = true;
    let mut strictly = 0;
    for (sides, bc) in BoundaryCondition::all_side_homogeneous(&lat) {
        let mut row = Vec::new();
        for r in 1..=3 {
            let opts = SpatialOptions::new(10_000, 0x5eed_0066 + r as u64);
            let region = lat.box_region(e, r)?;
            let m = lat.num_edges();
            row.push(estimate_spatial_mixing_with(
                &lat,
                &bc,
                pr,
                &region,
                &RcConfig::full(m),
                &RcConfig::empty(m),
                &opts,
            )?);
        }
        // non-increasing up to 3 standard errors, and a significant overall
        // drop whenever the r=1 discrepancy is not zero
        let steps_ok = row.windows(2).all(|w| {
            let se = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
            w[1].discrepancy <= w[0].discrepancy + 3.0 * se
        });
        let (first, last) = (&row[0], &row[2]);
        let drop_ok = if first.discrepancy > 0.0 {
            first.discrepancy - last.discrepancy > 3.0 * (first.std_error.powi(2) + last.std_error.powi(2)).sqrt()
        } else {
            last.discrepancy == 0.0
        };
        strictly += (first.discrepancy > 0.0) as usize;
        homogeneous_ok &= steps_ok && drop_ok;
        let label: Vec<String> = sides.iter().map(|s| format!("L{}", s.label())).collect();
        let values: Vec<String> = row
            .iter()
            .map(|est| format!("{:.4}({})", est.discrepancy, est.backend.name()))
            .collect();
        if !(steps_ok && drop_ok) {
            details.push(format!(
                "side-homogeneous {{{}}} not decreasing: {}",
                label.join(","),
                values.join(" ")
            ));
        }
    }
    details.push(format!(
        "16 side-homogeneous conditions decreasing over r=1,2,3: {homogeneous_ok} ({strictly} with nonzero r=1 discrepancy)"
    ));
    Ok(report(
        6,
        "spatial-mixing counterexample",
        start,
        psi_ok && homogeneous_ok,
        details,
    ))
}

/// Coupling times at q = 2 across sizes, and the q = 1 coupon-collector
/// baseline.
pub fn mixing_scaling() -> Result<CriterionReport> {
    let start = Instant::now();
    let sizes = [8usize, 16, 32];
    let replicas = 21;
    let mut details = Vec::new();
    let mut reports = Vec::new();
    let mut baseline_ok = true;
    for &n in &sizes {
        let lat = Lattice::new(n)?;
        let bc = BoundaryCondition::free(&lat);
        let d = Dynamics::new(&lat, &bc, params(0.4, 2.0))?;
        reports.push((
            n,
            coupling_time(&d, 0x5eed_0070 + n as u64, replicas, 0.25, TimeMode::Discrete, None)?,
        ));
        let perc = Dynamics::new(&lat, &bc, params(0.4, 1.0))?;
        let base = coupling_time(&perc, 0x5eed_0071 + n as u64, replicas, 0.25, TimeMode::Discrete, None)?;
        let ratio = base.median().map_or(f64::INFINITY, |t| t / base.m_log_m());
        baseline_ok &= (0.5..=2.0).contains(&ratio);
        details.push(format!("q=1 n={n}: median/(m ln m) = {ratio:.3}"));
    }
    let fit = fit_mixing_scaling(&reports)?;
    for row in &fit.rows {
        details.push(format!(
            "q=2 n={}: median {:.0}, median/(m ln m) = {:.3}, capped {}",
            row.n, row.median, row.ratio, row.capped
        ));
    }
    if let Some(exp) = fit.exponent {
        details.push(format!("exponent of m: {:.3} +- {:.3}", exp.slope, exp.slope_se));
    }
    details.push(format!("ratio spread {:.3} (<= 3)", fit.ratio_spread));
    let secs = start.elapsed().as_secs_f64();
    let passed = fit.ratio_spread <= 3.0 && baseline_ok && fit.warnings.is_empty() && secs < 1800.0;
    Ok(report(7, "mixing scaling", start, passed, details))
}

/// Connectivity decay on Λ_64 below the self-dual point.
pub fn connectivity_decay() -> Result<CriterionReport> {
    let start = Instant::now();
    let lat = Lattice::new(64)?;
    let bc = BoundaryCondition::free(&lat);
    let groups: Vec<_> = [4, 8, 16].into_iter().map(|d| axis_pairs(&lat, d, 8)).collect();
    let sampler = Sampler::long_run(lat.num_edges(), 4);
    let samples = 20_000;
    let est = estimate_decay(&lat, &bc, params(0.42, 2.0), &groups, sampler, samples, 0x5eed_0008)?;
    let z = stats::z_one_sided(0.95);
    let decreasing = est.strictly_decreasing(z);
    let mut details: Vec<String> = est
        .points
        .iter()
        .map(|pt| {
            format!(
                "d={}: P = {:.3e} +- {:.1e} ({} pairs)",
                pt.distance, pt.probability, pt.std_error, pt.pairs
            )
        })
        .collect();
    let slope_ok = match est.fit {
        Some(fit) => {
            let (lo, hi) = fit.slope_interval(0.95);
            details.push(format!("slope {:.4}, 95% CI [{lo:.4}, {hi:.4}]", fit.slope));
            hi < 0.0
        }
        None => {
            details.push("no fit".into());
            false
        }
    };
    details.push(format!(
        "{samples} samples ({}), strictly decreasing: {decreasing}",
        sampler.name()
    ));
    Ok(report(8, "connectivity decay", start, decreasing && slope_ok, details))
}
