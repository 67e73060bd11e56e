//! Executes one experiment spec and writes its run directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use rc_glauber::duality::{dual_p, run_induced};
use rc_glauber::dynamics::default_step_cap;
use rc_glauber::oracle::exact_mixing_time;
use rc_glauber::{
    axis_pairs, cftp_sample, coupling_time, critical_point, estimate_decay, estimate_spatial_mixing, exact_measure,
    fit_mixing_scaling, sample_via_dual, sandwich_replicas, transition_matrix, tv_curve, BoundaryCondition,
    Conditioning, DualBox, Dynamics, Lattice, PairGroup, RcConfig, RcParams, Sampler, SpatialOptions, TimeMode,
    CFTP_DEFAULT_CAP,
};

use crate::error::CliError;
use crate::output::{run_dir, write_atomic, write_json, CsvTable};
use crate::spec::{ExperimentSpec, Kind, SamplerSpec, Start};

/// Columns shared by the estimator outputs.
pub const ESTIMATE_COLUMNS: [&str; 11] = [
    "experiment",
    "n",
    "p",
    "q",
    "bc",
    "r_or_d",
    "estimate",
    "stderr",
    "samples",
    "backend",
    "seed",
];

#[derive(Debug)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: Value,
}

/// Runs `spec` as an experiment of `kind` and writes `spec.json`,
/// `rows.csv`, `summary.json` and `timing.json` under the run directory.
pub fn run(kind: Kind, spec: &ExperimentSpec, out: &Path) -> Result<RunOutput, CliError> {
    if let Some(k) = spec.kind {
        if k != kind {
            return Err(CliError::spec(format!("spec is for '{k}' but '{kind}' was requested")));
        }
    }
    let mut spec = spec.clone();
    spec.kind = Some(kind);
    let params = spec.params()?;
    let started = Instant::now();
    let (table, body) = match kind {
        Kind::Sample => sample(&spec, params)?,
        Kind::Cftp => cftp(
            &spec,
            params,
            spec.via_dual() && params.p() > critical_point(params.q())?,
        )?,
        Kind::DualSample => cftp(&spec, params, true)?,
        Kind::Couple => couple(&spec, params)?,
        Kind::Oracle => oracle(&spec, params)?,
        Kind::Decay => decay(&spec, params)?,
        Kind::Spatial => spatial(&spec, params)?,
        Kind::Scaling => scaling(&spec, params)?,
        Kind::Sandwich => sandwich(&spec, params)?,
    };
    let elapsed = started.elapsed().as_secs_f64();

    let mut summary = json!({
        "kind": kind.name(),
        "spec_hash": spec.hash(),
        "p": spec.p,
        "q": spec.q,
        "bc": spec.bc.label(),
        "seed": spec.seed,
    });
    if let Some(n) = spec.n {
        summary["n"] = json!(n);
    }
    if let (Value::Object(dst), Value::Object(src)) = (&mut summary, body) {
        dst.extend(src);
    }

    let dir = run_dir(out, kind.name(), &spec.hash())?;
    let mut spec_text = spec.canonical_json();
    spec_text.push('\n');
    write_atomic(&dir.join("spec.json"), spec_text.as_bytes())?;
    table.write(&dir.join("rows.csv"))?;
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(&dir.join("timing.json"), &json!({ "wall_seconds": elapsed }))?;
    Ok(RunOutput { dir, summary })
}

type Outcome = (CsvTable, Value);

fn lattice_and_bc(spec: &ExperimentSpec) -> Result<(Lattice, BoundaryCondition), CliError> {
    let lat = spec.lattice()?;
    let bc = spec.bc.build(&lat)?;
    Ok((lat, bc))
}

fn default_steps(m: usize) -> u64 {
    default_step_cap(m) / 10
}

fn positive(name: &str, value: usize) -> Result<usize, CliError> {
    if value == 0 {
        Err(CliError::spec(format!("'{name}' must be positive")))
    } else {
        Ok(value)
    }
}

fn sample(spec: &ExperimentSpec, params: RcParams) -> Result<Outcome, CliError> {
    let (lat, bc) = lattice_and_bc(spec)?;
    let m = lat.num_edges();
    let steps = spec.steps.unwrap_or_else(|| default_steps(m));
    let replicas = positive("replicas", spec.replicas.unwrap_or(1))?;
    let start = spec.start.unwrap_or(Start::Empty);
    let via_dual = spec.via_dual() && params.p() > critical_point(params.q())?;
    let mut table = CsvTable::new(&["replica", "open_edges", "config"])?;
    let mut open_total = 0usize;
    if via_dual {
        if !spec.bc.is_free() {
            return Err(CliError::spec(
                "dual dynamics runs are available for the free boundary condition only",
            ));
        }
        let pair = DualBox::new(&lat);
        for r in 0..replicas {
            // the dual of the primal start state on the mapped edges
            let dual_start = match start {
                Start::Empty => RcConfig::full(pair.dual().num_edges()),
                Start::Full => RcConfig::empty(pair.dual().num_edges()),
            };
            let (_, primal, _) = run_induced(&pair, params, dual_start, spec.seed, r as u64, steps)?;
            open_total += primal.count_open();
            table.row([r.to_string(), primal.count_open().to_string(), primal.encode(lat.n())])?;
        }
    } else {
        let d = Dynamics::new(&lat, &bc, params)?;
        for r in 0..replicas {
            let mut chain = match start {
                Start::Empty => d.bottom_chain(),
                Start::Full => d.top_chain(),
            };
            let mut draws = d.draws(spec.seed, r as u64);
            d.run(&mut chain, &mut draws, steps);
            open_total += chain.config.count_open();
            table.row([
                r.to_string(),
                chain.config.count_open().to_string(),
                chain.config.encode(lat.n()),
            ])?;
        }
    }
    Ok((
        table,
        json!({
            "steps": steps,
            "replicas": replicas,
            "via_dual": via_dual,
            "mean_open_fraction": open_total as f64 / (replicas * m) as f64,
        }),
    ))
}

fn cftp(spec: &ExperimentSpec, params: RcParams, via_dual: bool) -> Result<Outcome, CliError> {
    let (lat, bc) = lattice_and_bc(spec)?;
    let m = lat.num_edges();
    let samples = positive("samples", spec.samples.unwrap_or(1000))?;
    let cap = spec.cftp_cap.unwrap_or(CFTP_DEFAULT_CAP);
    let mut table = CsvTable::new(&["sample", "horizon", "open_edges", "config"])?;
    let mut marginals = vec![0u64; m];
    let mut horizons = 0u64;
    let d = Dynamics::new(&lat, &bc, params)?;
    for s in 0..samples as u64 {
        let (config, horizon) = if via_dual {
            (sample_via_dual(&lat, &bc, params, spec.seed, s, cap)?, None)
        } else {
            let out = cftp_sample(&d, spec.seed, s, cap)?;
            (out.config, Some(out.horizon))
        };
        for e in config.open_edges() {
            marginals[e] += 1;
        }
        horizons += horizon.unwrap_or(0);
        table.row([
            s.to_string(),
            horizon.map(|h| h.to_string()).unwrap_or_default(),
            config.count_open().to_string(),
            config.encode(lat.n()),
        ])?;
    }
    let marginals: Vec<f64> = marginals.iter().map(|&c| c as f64 / samples as f64).collect();
    let mut body = json!({
        "samples": samples,
        "via_dual": via_dual,
        "edge_marginals": marginals,
    });
    if via_dual {
        body["p_star"] = json!(dual_p(params));
        body["p_c"] = json!(critical_point(params.q())?);
    } else {
        body["mean_horizon"] = json!(horizons as f64 / samples as f64);
    }
    Ok((table, body))
}

fn couple(spec: &ExperimentSpec, params: RcParams) -> Result<Outcome, CliError> {
    let (lat, bc) = lattice_and_bc(spec)?;
    let d = Dynamics::new(&lat, &bc, params)?;
    let replicas = positive("replicas", spec.replicas.unwrap_or(21))?;
    let threshold = spec.threshold.unwrap_or(0.25);
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(CliError::spec("'threshold' must lie in (0, 1)"));
    }
    let mode = spec.mode.unwrap_or(TimeMode::Discrete);
    let report = coupling_time(&d, spec.seed, replicas, threshold, mode, spec.cap)?;
    let mut table = CsvTable::new(&["replica", "coalescence", "capped"])?;
    for (r, t) in report.times.iter().enumerate() {
        table.row([
            r.to_string(),
            t.map(|t| t.to_string()).unwrap_or_default(),
            t.is_none().to_string(),
        ])?;
    }
    let (q1, med, q3) = report.quartiles();
    Ok((
        table,
        json!({
            "mode": mode,
            "replicas": replicas,
            "threshold": threshold,
            "cap": report.cap,
            "capped": report.capped(),
            "median": med,
            "quartiles": [q1, q3],
            "t_coup": report.t_coup(),
            "m_log_m": report.m_log_m(),
            "median_over_m_log_m": med.map(|t| t / report.m_log_m()),
        }),
    ))
}

fn oracle(spec: &ExperimentSpec, params: RcParams) -> Result<Outcome, CliError> {
    let (lat, bc) = lattice_and_bc(spec)?;
    let measure = exact_measure(&lat, &bc, params, &Conditioning::none())?;
    let marginals = measure.edge_marginals();
    let mut table = CsvTable::new(&["edge", "x0", "y0", "x1", "y1", "marginal"])?;
    for (e, p) in marginals.iter().enumerate() {
        let (u, v) = lat.graph().endpoints(e);
        let ((x0, y0), (x1, y1)) = (lat.coords(u), lat.coords(v));
        table.row([
            e.to_string(),
            x0.to_string(),
            y0.to_string(),
            x1.to_string(),
            y1.to_string(),
            p.to_string(),
        ])?;
    }
    let connectivity: Vec<Value> = spec
        .vertex_pairs(&lat)?
        .unwrap_or_default()
        .into_iter()
        .map(|(u, v)| {
            json!({
                "u": lat.coords(u),
                "v": lat.coords(v),
                "probability": measure.connectivity_prob(u, v),
            })
        })
        .collect();
    let mut body = json!({
        "partition_function": measure.partition_function(),
        "log_partition_function": measure.log_partition_function(),
        "edge_marginals": marginals,
        "connectivity": connectivity,
    });
    if spec.mixing.unwrap_or(false) {
        let (matrix, measure) = transition_matrix(&lat, &bc, params)?;
        let t_max = spec.t_max.unwrap_or(100_000);
        let per_start: Vec<Option<usize>> = (0..matrix.dim())
            .map(|s| tv_curve(&matrix, s, &measure, t_max).mixing_time)
            .collect();
        body["mixing_time_per_start"] = json!(per_start);
        body["mixing_time"] = json!(exact_mixing_time(&matrix, &measure, t_max).map(|(t, _)| t));
    }
    Ok((table, body))
}

#[allow(clippy::too_many_arguments)]
fn estimate_row(
    table: &mut CsvTable,
    spec: &ExperimentSpec,
    experiment: &str,
    r_or_d: f64,
    estimate: f64,
    stderr: f64,
    samples: usize,
    backend: &str,
) -> Result<(), CliError> {
    table.row([
        experiment.to_string(),
        spec.n.map(|n| n.to_string()).unwrap_or_default(),
        spec.p.to_string(),
        spec.q.to_string(),
        spec.bc.label(),
        r_or_d.to_string(),
        estimate.to_string(),
        stderr.to_string(),
        samples.to_string(),
        backend.to_string(),
        spec.seed.to_string(),
    ])
}

fn decay(spec: &ExperimentSpec, params: RcParams) -> Result<Outcome, CliError> {
    let (lat, bc) = lattice_and_bc(spec)?;
    let groups: Vec<PairGroup> = match spec.vertex_pairs(&lat)? {
        Some(pairs) => pairs
            .into_iter()
            .map(|(u, v)| PairGroup {
                distance: lat.dist(u, v),
                pairs: vec![(u, v)],
            })
            .collect(),
        None => {
            let margin = spec.margin.unwrap_or(lat.n() / 8);
            let distances = spec.distances.clone().unwrap_or_else(|| vec![4, 8, 16]);
            distances.into_iter().map(|d| axis_pairs(&lat, d, margin)).collect()
        }
    };
    if let Some(g) = groups.iter().find(|g| g.pairs.is_empty()) {
        return Err(CliError::spec(format!("no pairs fit at distance {}", g.distance)));
    }
    let m = lat.num_edges();
    let sampler = match spec.sampler.unwrap_or(if lat.n() <= 16 {
        SamplerSpec::Cftp
    } else {
        SamplerSpec::LongRun
    }) {
        SamplerSpec::Cftp => Sampler::Cftp {
            cap: spec.cftp_cap.unwrap_or(CFTP_DEFAULT_CAP),
        },
        SamplerSpec::LongRun => match Sampler::long_run(m, spec.replicas.unwrap_or(4)) {
            Sampler::LongRun {
                replicas,
                burn_in,
                thin,
                batch,
            } => Sampler::LongRun {
                replicas,
                burn_in: spec.burn_in.unwrap_or(burn_in),
                thin: spec.thin.unwrap_or(thin),
                batch,
            },
            other => other,
        },
    };
    let samples = positive("samples", spec.samples.unwrap_or(2000))?;
    let est = estimate_decay(&lat, &bc, params, &groups, sampler, samples, spec.seed)?;
    let mut table = CsvTable::new(&ESTIMATE_COLUMNS)?;
    for pt in &est.points {
        estimate_row(
            &mut table,
            spec,
            "decay",
            pt.distance,
            pt.probability,
            pt.std_error,
            samples,
            sampler.name(),
        )?;
    }
    let fit = est.fit.map(|f| {
        let (lo, hi) = f.slope_interval(0.95);
        json!({ "slope": f.slope, "intercept": f.intercept, "slope_se": f.slope_se, "slope_ci95": [lo, hi] })
    });
    let points: Vec<Value> = est
        .points
        .iter()
        .map(|pt| {
            json!({
                "distance": pt.distance,
                "pairs": pt.pairs,
                "probability": pt.probability,
                "stderr": pt.std_error,
                "trivially_wired": pt.trivially_wired,
            })
        })
        .collect();
    Ok((
        table,
        json!({
            "samples": samples,
            "backend": sampler.name(),
            "points": points,
            "fit": fit,
            "warnings": est.warnings,
        }),
    ))
}

fn spatial(spec: &ExperimentSpec, params: RcParams) -> Result<Outcome, CliError> {
    let (lat, bc) = lattice_and_bc(spec)?;
    let e = spec.edge_id(&lat)?;
    let radii = spec.radii.clone().unwrap_or_else(|| vec![1, 2, 3]);
    let mut opts = SpatialOptions::new(spec.samples.unwrap_or(10_000), spec.seed);
    if let Some(cap) = spec.cftp_cap {
        opts.cftp_cap = cap;
    }
    let mut table = CsvTable::new(&ESTIMATE_COLUMNS)?;
    let mut rows = Vec::new();
    for r in radii {
        let est = estimate_spatial_mixing(&lat, &bc, params, e, r, &opts)?;
        estimate_row(
            &mut table,
            spec,
            "spatial",
            r as f64,
            est.discrepancy,
            est.std_error,
            est.samples,
            est.backend.name(),
        )?;
        rows.push(json!({
            "r": r,
            "box_edges": est.box_edges,
            "marginal_outside_open": est.marginal_a,
            "marginal_outside_closed": est.marginal_b,
            "discrepancy": est.discrepancy,
            "stderr": est.std_error,
            "samples": est.samples,
            "backend": est.backend.name(),
        }));
    }
    let (u, v) = lat.graph().endpoints(e);
    Ok((table, json!({ "edge": [lat.coords(u), lat.coords(v)], "radii": rows })))
}

fn scaling(spec: &ExperimentSpec, params: RcParams) -> Result<Outcome, CliError> {
    let sizes = spec
        .sizes
        .clone()
        .ok_or_else(|| CliError::spec("'sizes' is required for scaling"))?;
    let replicas = positive("replicas", spec.replicas.unwrap_or(21))?;
    let threshold = spec.threshold.unwrap_or(0.25);
    let mode = spec.mode.unwrap_or(TimeMode::Discrete);
    let mut reports = Vec::new();
    let mut table = CsvTable::new(&["n", "replica", "coalescence", "capped"])?;
    for &n in &sizes {
        let lat = Lattice::new(n)?;
        let bc = spec.bc.build(&lat)?;
        let d = Dynamics::new(&lat, &bc, params)?;
        let rep = coupling_time(
            &d,
            spec.seed.wrapping_add(n as u64),
            replicas,
            threshold,
            mode,
            spec.cap,
        )?;
        for (r, t) in rep.times.iter().enumerate() {
            table.row([
                n.to_string(),
                r.to_string(),
                t.map(|t| t.to_string()).unwrap_or_default(),
                t.is_none().to_string(),
            ])?;
        }
        reports.push((n, rep));
    }
    let fit = fit_mixing_scaling(&reports)?;
    let rows: Vec<Value> = fit
        .rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "edges": r.edges,
                "median": r.median,
                "t_coup": r.t_coup,
                "median_over_m_log_m": r.ratio,
                "capped": r.capped,
            })
        })
        .collect();
    Ok((
        table,
        json!({
            "mode": mode,
            "replicas": replicas,
            "rows": rows,
            "exponent": fit.exponent.map(|f| json!({ "slope": f.slope, "slope_se": f.slope_se })),
            "ratio_spread": fit.ratio_spread,
            "warnings": fit.warnings,
        }),
    ))
}

fn sandwich(spec: &ExperimentSpec, params: RcParams) -> Result<Outcome, CliError> {
    let (lat, bc) = lattice_and_bc(spec)?;
    let e = spec.edge_id(&lat)?;
    let r = spec.radii.as_ref().and_then(|r| r.first().copied()).unwrap_or(2);
    let region = lat.box_region(e, r)?;
    let steps = spec.steps.unwrap_or_else(|| default_steps(lat.num_edges()));
    let every = spec.every.unwrap_or((steps / 100).max(1));
    let replicas = positive("replicas", spec.replicas.unwrap_or(8))?;
    let s = sandwich_replicas(&lat, &bc, params, &region, steps, every, spec.seed, replicas)?;
    let mut table = CsvTable::new(&["t", "box_disagree", "chain_disagree"])?;
    for i in 0..s.times.len() {
        table.row([
            s.times[i].to_string(),
            s.box_disagree[i].to_string(),
            s.chain_disagree[i].to_string(),
        ])?;
    }
    Ok((
        table,
        json!({
            "r": r,
            "box_edges": region.inner_edges.len(),
            "steps": steps,
            "replicas": replicas,
            "final_box_disagree": s.box_disagree.last(),
            "final_chain_disagree": s.chain_disagree.last(),
            "containment": "held",
        }),
    ))
}
