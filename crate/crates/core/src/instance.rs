//! Self-describing JSON instance files.
//!
//! ```json
//! {"version": 1, "n": 6, "k": 3, "clauses": [[0,1,2], …],
//!  "projectors": {"mode": "generic", "amplitudes": [[[re, im], …], …]},
//!  "rng": {"seed": 1, "stream": 0}}
//! ```
//!
//! Generic mode stores the `2^k` amplitudes of each `|φ_m⟩`; product mode
//! stores the `k` single-qubit factors of each clause back to back (`2k`
//! pairs). Floats are written in shortest round-trip form, so reading a file
//! back reproduces the amplitudes bit for bit.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QsatError, Result};
use crate::hypergraph::{InteractionGraph, ProjectorMode, ProjectorSet};
use crate::kcore::CoreDecomposition;
use crate::rng::RngSpec;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorRecord {
    pub mode: ProjectorMode,
    pub amplitudes: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreRecord {
    pub qubits: Vec<usize>,
    pub clauses: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: u32,
    pub n: usize,
    pub k: usize,
    pub clauses: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projectors: Option<ProjectorRecord>,
    pub rng: RngSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core: Option<CoreRecord>,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn complex(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// A graph with optional projectors, as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub graph: InteractionGraph,
    pub projectors: Option<ProjectorSet>,
    pub rng: RngSpec,
    pub core: Option<CoreRecord>,
}

impl Instance {
    pub fn new(graph: InteractionGraph, projectors: Option<ProjectorSet>, rng: RngSpec) -> Result<Self> {
        if let Some(p) = &projectors {
            p.check_against(&graph)?;
        }
        Ok(Self { graph, projectors, rng, core: None })
    }

    pub fn with_core(mut self, dec: &CoreDecomposition) -> Self {
        self.core = Some(CoreRecord { qubits: dec.core_qubits.clone(), clauses: dec.core_clauses.clone() });
        self
    }

    pub fn to_file(&self) -> InstanceFile {
        let projectors = self.projectors.as_ref().map(|p| {
            let amplitudes = match p.mode() {
                ProjectorMode::Generic => p.vectors().iter().map(|v| v.iter().copied().map(pair).collect()).collect(),
                ProjectorMode::Product => (0..p.len())
                    .map(|m| {
                        p.factors(m).expect("product mode").iter().flat_map(|u| [pair(u[0]), pair(u[1])]).collect()
                    })
                    .collect(),
            };
            ProjectorRecord { mode: p.mode(), amplitudes }
        });
        InstanceFile {
            version: FORMAT_VERSION,
            n: self.graph.n_qubits(),
            k: self.graph.k(),
            clauses: self.graph.clauses().to_vec(),
            projectors,
            rng: self.rng,
            core: self.core.clone(),
        }
    }

    pub fn from_file(f: InstanceFile) -> Result<Self> {
        if f.version != FORMAT_VERSION {
            return Err(QsatError::Unsupported(format!(
                "instance format version {} (expected {FORMAT_VERSION})",
                f.version
            )));
        }
        let graph = InteractionGraph::new(f.n, f.k, f.clauses)?;
        let projectors = match f.projectors {
            None => None,
            Some(rec) => Some(match rec.mode {
                ProjectorMode::Generic => ProjectorSet::generic(
                    rec.amplitudes.into_iter().map(|v| v.into_iter().map(complex).collect()).collect(),
                )?,
                ProjectorMode::Product => {
                    let mut factors = Vec::with_capacity(rec.amplitudes.len());
                    for (m, v) in rec.amplitudes.into_iter().enumerate() {
                        if v.len() != 2 * f.k {
                            return Err(QsatError::Contract(format!(
                                "product projector {m} has {} amplitudes, expected {}",
                                v.len(),
                                2 * f.k
                            )));
                        }
                        factors.push(v.chunks(2).map(|c| [complex(c[0]), complex(c[1])]).collect());
                    }
                    ProjectorSet::product(factors)?
                }
            }),
        };
        if let Some(p) = &projectors {
            p.check_against(&graph)?;
        }
        if let Some(core) = &f.core {
            if core.qubits.iter().any(|&q| q >= graph.n_qubits())
                || core.clauses.iter().any(|&c| c >= graph.n_clauses())
            {
                return Err(QsatError::Contract("core record references indices outside the graph".into()));
            }
        }
        Ok(Self { graph, projectors, rng: f.rng, core: f.core })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
