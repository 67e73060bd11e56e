//! Planar duality: the dual parameter, the critical point, dual
//! configurations, and the free-primal / wired-dual correspondence used to
//! sample the super-critical regime through sub-critical dynamics.
//!
//! Convention: a dual edge is open iff the primal edge it crosses is closed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::BoundaryCondition;
use crate::config::RcConfig;
use crate::dynamics::{cftp_sample, DrawStream, Dynamics, RcParams};
use crate::error::{Error, Result};
use crate::lattice::{DualGraph, EdgeId, Lattice};
use crate::oracle::{exact_measure, Conditioning};

/// p* = q(1−p) / (p + q(1−p)).
pub fn dual_p(params: RcParams) -> f64 {
    let (p, q) = (params.p(), params.q());
    q * (1.0 - p) / (p + q * (1.0 - p))
}

pub fn dual_params(params: RcParams) -> RcParams {
    RcParams::new(dual_p(params), params.q()).expect("p* lies in (0,1) whenever p does")
}

/// p_c(q) = √q / (√q + 1), the self-dual point.
pub fn critical_point(q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParams(format!("q must be a finite value >= 1, got {q}")));
    }
    let s = q.sqrt();
    Ok(s / (s + 1.0))
}

/// Dual configuration on the planar dual graph.
pub fn dual_config(dual: &DualGraph, config: &RcConfig) -> RcConfig {
    debug_assert_eq!(dual.graph().num_edges(), config.len());
    config.complement()
}

/// Λ_n paired with the wired box Λ' = Λ_{n+1}. Each edge of Λ' with at most
/// one endpoint on ∂Λ' crosses exactly one primal edge; the edges with both
/// endpoints on ∂Λ' (∂E_{n+1}) have no primal partner.
#[derive(Debug, Clone)]
pub struct DualBox {
    primal: Lattice,
    dual: Lattice,
    to_dual: Vec<EdgeId>,
    to_primal: Vec<Option<EdgeId>>,
    boundary_edges: Vec<EdgeId>,
}

impl DualBox {
    pub fn new(primal: &Lattice) -> Self {
        let n = primal.n();
        let dual = Lattice::new(n + 1).expect("n + 1 >= 3");
        let mut to_dual = vec![0; primal.num_edges()];
        let mut to_primal = vec![None; dual.num_edges()];
        for (e, slot) in to_dual.iter_mut().enumerate() {
            let (a, _) = primal.graph().endpoints(e);
            let (x, y) = primal.coords(a);
            // face (fx, fy) of Λ_n sits at vertex (fx+1, fy+1) of Λ'
            let d = if primal.is_horizontal(e) {
                dual.vertical_edge(x + 1, y)
            } else {
                dual.horizontal_edge(x, y + 1)
            };
            *slot = d;
            to_primal[d] = Some(e);
        }
        let boundary_edges = dual.boundary_edges();
        debug_assert!(boundary_edges.iter().all(|&d| to_primal[d].is_none()));
        debug_assert_eq!(boundary_edges.len() + primal.num_edges(), dual.num_edges());
        DualBox {
            primal: primal.clone(),
            dual,
            to_dual,
            to_primal,
            boundary_edges,
        }
    }

    pub fn primal(&self) -> &Lattice {
        &self.primal
    }

    pub fn dual(&self) -> &Lattice {
        &self.dual
    }

    pub fn dual_edge(&self, e: EdgeId) -> EdgeId {
        self.to_dual[e]
    }

    pub fn primal_edge(&self, d: EdgeId) -> Option<EdgeId> {
        self.to_primal[d]
    }

    /// ∂E_{n+1}.
    pub fn boundary_edges(&self) -> &[EdgeId] {
        &self.boundary_edges
    }

    /// The unique primal configuration compatible with `dual_config`.
    pub fn compatible_primal(&self, dual_config: &RcConfig) -> RcConfig {
        RcConfig::from_open_edges(
            self.primal.num_edges(),
            (0..self.primal.num_edges()).filter(|&e| !dual_config.is_open(self.to_dual[e])),
        )
    }

    /// A compatible configuration on Λ' with the given ∂E_{n+1} states.
    pub fn lift(&self, primal_config: &RcConfig, mut boundary_open: impl FnMut(EdgeId) -> bool) -> RcConfig {
        let mut out = RcConfig::empty(self.dual.num_edges());
        for e in 0..self.primal.num_edges() {
            out.set(self.to_dual[e], !primal_config.is_open(e));
        }
        for &d in &self.boundary_edges {
            out.set(d, boundary_open(d));
        }
        out
    }

    /// Primal move induced by the dual update of `dual_edge` to `dual_open`:
    /// boundary–boundary dual edges do nothing, otherwise the primal edge takes
    /// the complementary state. Returns whether the primal state changed.
    pub fn induced_primal_step(&self, dual_edge: EdgeId, dual_open: bool, primal: &mut RcConfig) -> bool {
        match self.to_primal[dual_edge] {
            None => false,
            Some(e) => {
                let before = primal.is_open(e);
                primal.set(e, !dual_open);
                before == dual_open
            }
        }
    }

    /// Glauber dynamics on the wired Λ' at parameter p*.
    pub fn dual_dynamics(&self, params: RcParams) -> Dynamics {
        Dynamics::new(&self.dual, &BoundaryCondition::wired(&self.dual), dual_params(params))
            .expect("wired condition built on the dual box")
    }

    /// max over A' of |μ¹_{Λ',p*,q}(A') − μ_{Λ,p,q}(A)·Π_{∂E} Bernoulli(p*)|,
    /// with A the configuration compatible with A'. Exact enumeration.
    pub fn factorization_error(&self, params: RcParams) -> Result<f64> {
        let ps = dual_p(params);
        let primal = exact_measure(
            &self.primal,
            &BoundaryCondition::free(&self.primal),
            params,
            &Conditioning::none(),
        )?;
        let wired_dual = exact_measure(
            &self.dual,
            &BoundaryCondition::wired(&self.dual),
            dual_params(params),
            &Conditioning::none(),
        )?;
        let m = self.primal.num_edges();
        let full = (1usize << m) - 1;
        let (lp, lnp) = (ps.ln(), (1.0 - ps).ln());
        let nb = self.boundary_edges.len() as f64;
        let mut worst: f64 = 0.0;
        for (idx, &lhs) in wired_dual.probabilities().iter().enumerate() {
            let mut primal_closed = 0usize;
            for e in 0..m {
                primal_closed |= (idx >> self.to_dual[e] & 1) << e;
            }
            let open_b = self.boundary_edges.iter().filter(|&&d| idx >> d & 1 == 1).count() as f64;
            let boundary = (open_b * lp + (nb - open_b) * lnp).exp();
            let rhs = primal.probabilities()[full & !primal_closed] * boundary;
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    }
}

/// Exact sample at parameters `params` obtained through the dual: a free
/// primal box is sampled by CFTP on the wired box one size larger at p*, a
/// wired primal box by CFTP on the free box one size smaller at p* plus
/// independent Bernoulli(p) boundary edges.
pub fn sample_via_dual(
    lat: &Lattice,
    bc: &BoundaryCondition,
    params: RcParams,
    seed: u64,
    stream: u64,
    cap: u64,
) -> Result<RcConfig> {
    bc.check_lattice(lat)?;
    if *bc == BoundaryCondition::free(lat) {
        let pair = DualBox::new(lat);
        let dual_sample = cftp_sample(&pair.dual_dynamics(params), seed, stream, cap)?;
        Ok(pair.compatible_primal(&dual_sample.config))
    } else if *bc == BoundaryCondition::wired(lat) {
        if lat.n() < 3 {
            return Err(Error::Unsupported("wired dual sampling needs n >= 3".into()));
        }
        let inner = Lattice::new(lat.n() - 1)?;
        let pair = DualBox::new(&inner);
        let free_dyn = Dynamics::new(&inner, &BoundaryCondition::free(&inner), dual_params(params))?;
        let inner_sample = cftp_sample(&free_dyn, seed, stream, cap)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6475_616c_0000_0000);
        rng.set_stream(stream);
        let boundary: Vec<bool> = (0..lat.num_edges()).map(|_| rng.random_bool(params.p())).collect();
        Ok(pair.lift(&inner_sample.config, |d| boundary[d]))
    } else {
        Err(Error::Unsupported(
            "dual sampling is implemented for free and wired boundary conditions".into(),
        ))
    }
}

/// Runs the dual Glauber dynamics on Λ' for `steps` updates from `dual_start`
/// and tracks the induced primal chain. Returns the final pair and the number
/// of steps on which the primal chain did not move because the chosen dual
/// edge had no primal partner.
pub fn run_induced(
    pair: &DualBox,
    params: RcParams,
    dual_start: RcConfig,
    seed: u64,
    stream: u64,
    steps: u64,
) -> Result<(RcConfig, RcConfig, u64)> {
    let dynamics = pair.dual_dynamics(params);
    let mut chain = dynamics.chain(dual_start)?;
    let mut primal = pair.compatible_primal(&chain.config);
    let mut draws = DrawStream::new(seed, stream);
    let mut idle = 0;
    for _ in 0..steps {
        let d = dynamics.next_draw(&mut draws);
        let open = dynamics.step(&mut chain, d);
        if pair.primal_edge(d.edge).is_none() {
            idle += 1;
        }
        pair.induced_primal_step(d.edge, open, &mut primal);
    }
    Ok((chain.config, primal, idle))
}
