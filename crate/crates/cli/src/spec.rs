//! Experiment specifications and their validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rc_glauber::{BoundaryCondition, EdgeId, Lattice, RcParams, Side, TimeMode, VertexId};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Sample,
    Cftp,
    Couple,
    Oracle,
    Decay,
    Spatial,
    Scaling,
    Sandwich,
    DualSample,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Sample => "sample",
            Kind::Cftp => "cftp",
            Kind::Couple => "couple",
            Kind::Oracle => "oracle",
            Kind::Decay => "decay",
            Kind::Spatial => "spatial",
            Kind::Scaling => "scaling",
            Kind::Sandwich => "sandwich",
            Kind::DualSample => "dual-sample",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `"free"`, `"wired"`, `{"sides": [1, 3]}` or `{"blocks": [[[x, y], ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BcSpec {
    Named(NamedBc),
    Sides { sides: Vec<u8> },
    Blocks { blocks: Vec<Vec<[i64; 2]>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedBc {
    Free,
    Wired,
}

impl Default for BcSpec {
    fn default() -> Self {
        BcSpec::Named(NamedBc::Free)
    }
}

impl BcSpec {
    pub fn build(&self, lat: &Lattice) -> Result<BoundaryCondition, CliError> {
        match self {
            BcSpec::Named(NamedBc::Free) => Ok(BoundaryCondition::free(lat)),
            BcSpec::Named(NamedBc::Wired) => Ok(BoundaryCondition::wired(lat)),
            BcSpec::Sides { sides } => {
                let sides = sides
                    .iter()
                    .map(|&l| {
                        Side::from_label(l).ok_or_else(|| CliError::spec(format!("side label {l} is not in 1..=4")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(BoundaryCondition::side_homogeneous(lat, &sides))
            }
            BcSpec::Blocks { blocks } => {
                let blocks = blocks
                    .iter()
                    .map(|b| {
                        b.iter()
                            .map(|&[x, y]| lat.checked_vertex(x, y))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(BoundaryCondition::from_blocks(lat, &blocks)?)
            }
        }
    }

    /// Short label used in CSV rows.
    pub fn label(&self) -> String {
        match self {
            BcSpec::Named(NamedBc::Free) => "free".into(),
            BcSpec::Named(NamedBc::Wired) => "wired".into(),
            BcSpec::Sides { sides } => {
                let mut s = sides.clone();
                s.sort_unstable();
                s.dedup();
                let parts: Vec<String> = s.iter().map(u8::to_string).collect();
                format!("sides-{}", parts.join("-"))
            }
            BcSpec::Blocks { blocks } => format!("blocks-{}", blocks.len()),
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, BcSpec::Named(NamedBc::Free))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    Empty,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerSpec {
    Cftp,
    LongRun,
}

/// A declarative experiment. Which fields apply depends on `kind`; the
/// defaults are filled in by the runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub bc: BcSpec,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Steps for `sample` and `sandwich`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    /// Coupling cap (steps, or time in continuous mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cftp_cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<TimeMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Start>,
    /// Target edge as its two endpoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<[[i64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub every: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<usize>,
    /// Explicit vertex pairs; for `decay` these replace `distances`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[[i64; 2]; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thin: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    /// Compute exact mixing times per start (`oracle` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via_dual: Option<bool>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| CliError::spec(e.to_string()))?;
        Ok(spec)
    }

    pub fn params(&self) -> Result<RcParams, CliError> {
        Ok(RcParams::new(self.p, self.q)?)
    }

    pub fn lattice(&self) -> Result<Lattice, CliError> {
        let n = self.n.ok_or_else(|| CliError::spec("field 'n' is required"))?;
        Ok(Lattice::new(n)?)
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn edge_id(&self, lat: &Lattice) -> Result<EdgeId, CliError> {
        match self.edge {
            Some([[x0, y0], [x1, y1]]) => {
                let u = lat.checked_vertex(x0, y0)?;
                let v = lat.checked_vertex(x1, y1)?;
                lat.edge_between(u, v)
                    .ok_or_else(|| CliError::spec(format!("({x0},{y0}) and ({x1},{y1}) are not adjacent")))
            }
            None => {
                // the horizontal edge closest to the centre
                let c = (lat.n() - 1) / 2;
                Ok(lat.horizontal_edge(c.min(lat.n() - 2), c))
            }
        }
    }

    pub fn vertex_pairs(&self, lat: &Lattice) -> Result<Option<Vec<(VertexId, VertexId)>>, CliError> {
        self.pairs
            .as_ref()
            .map(|pairs| {
                pairs
                    .iter()
                    .map(|&[[x0, y0], [x1, y1]]| Ok((lat.checked_vertex(x0, y0)?, lat.checked_vertex(x1, y1)?)))
                    .collect()
            })
            .transpose()
    }

    pub fn via_dual(&self) -> bool {
        self.via_dual.unwrap_or(false)
    }
}
