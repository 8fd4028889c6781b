//! Experiment configuration: a single TOML file of key = value sections,
//! with every field overridable from CLI flags (flags win).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::CorpusSpec;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::maximal::{make_dictionary, DictVariant, Dictionary};
use crate::weights::{HardyParams, Weight, WeightDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
    pub m: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n: 1, half_width: 8.0, m: 1 << 10 }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.n, self.half_width, self.m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub p: f64,
    /// "inf" or a number above q_omega.
    pub q: String,
    pub q_omega: f64,
    /// Defaults to the minimal admissible values when absent.
    pub s: Option<usize>,
    pub n_grand: Option<usize>,
}

impl Default for ParamSpec {
    fn default() -> Self {
        ParamSpec { p: 1.0, q: "inf".into(), q_omega: 1.0, s: None, n_grand: None }
    }
}

impl ParamSpec {
    pub fn build(&self, dim: usize) -> Result<HardyParams> {
        let q = if self.q == "inf" {
            f64::INFINITY
        } else {
            self.q
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad q value `{}`", self.q)))?
        };
        match (self.s, self.n_grand) {
            (None, None) => HardyParams::minimal(self.p, q, self.q_omega, dim),
            (s, n_grand) => {
                let min = HardyParams::minimal(self.p, q, self.q_omega, dim)?;
                HardyParams::new(
                    self.p,
                    q,
                    s.unwrap_or(min.s),
                    n_grand.unwrap_or(min.n_grand),
                    self.q_omega,
                    dim,
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DictSpec {
    /// Total member count (base + affine + translates).
    pub members: usize,
    pub scales: usize,
    pub t_max: f64,
}

impl Default for DictSpec {
    fn default() -> Self {
        DictSpec { members: 4, scales: 6, t_max: 0.5 }
    }
}

impl DictSpec {
    pub fn build(&self, order: usize, dim: usize, variant: DictVariant, half_width: f64) -> Result<Dictionary> {
        let translates = self.members.saturating_sub(2);
        make_dictionary(order.max(2), dim, self.scales, translates, variant, self.t_max, half_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    WeightsCheck,
    Maximal,
    Czd,
    Atomic,
    NormEquiv,
    OperatorBound,
    FiniteAtomic,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::WeightsCheck => "weights-check",
            ExperimentKind::Maximal => "maximal",
            ExperimentKind::Czd => "czd",
            ExperimentKind::Atomic => "atomic",
            ExperimentKind::NormEquiv => "norm-equiv",
            ExperimentKind::OperatorBound => "operator-bound",
            ExperimentKind::FiniteAtomic => "finite-atomic",
        }
    }
}

/// Operator-experiment details.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    /// identity | singular-t | commutator | psdo-multiplier | psdo-mixed
    pub kind: String,
    pub theta: f64,
    pub p: f64,
    /// strong | weak | hardy-to-l1 | hardy-to-hardy
    pub mode: String,
    pub bmo_symbol: String,
    /// Diagonal rule for the principal value: "cell" (exclude the diagonal
    /// cell) or "resolved" (exclude the oscillation-resolving radius and
    /// add the analytic near field; use for refinement comparisons).
    pub diagonal: String,
}

impl Default for OperatorSpec {
    fn default() -> Self {
        OperatorSpec {
            kind: "singular-t".into(),
            theta: 1.0,
            p: 2.0,
            mode: "strong".into(),
            bmo_symbol: "log".into(),
            diagonal: "cell".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsCheckSpec {
    pub p_list: Vec<f64>,
    pub side_cap: f64,
    pub phi_alpha: f64,
}

impl Default for WeightsCheckSpec {
    fn default() -> Self {
        WeightsCheckSpec { p_list: vec![1.5, 2.0, 4.0], side_cap: 1.0, phi_alpha: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzdSpec {
    /// Heights as fractions of the maximal-field sup.
    pub height_fractions: Vec<f64>,
}

impl Default for CzdSpec {
    fn default() -> Self {
        CzdSpec { height_fractions: vec![0.25, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpec {
    pub n_atoms: usize,
    pub truncation_k: usize,
}

impl Default for FiniteSpec {
    fn default() -> Self {
        FiniteSpec { n_atoms: 3, truncation_k: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub grid: GridSpec,
    pub weight: String,
    pub params: ParamSpec,
    pub dictionary: DictSpec,
    pub corpus: CorpusSpec,
    pub weights_check: WeightsCheckSpec,
    pub operator: OperatorSpec,
    pub czd: CzdSpec,
    pub finite: FiniteSpec,
    pub out_dir: String,
    pub baseline: Option<String>,
    pub update_baseline: bool,
    pub seed: u64,
    /// Write the decomposition manifest plus one CSV per atom.
    pub export_atoms: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: None,
            grid: GridSpec::default(),
            weight: "exp:1".into(),
            params: ParamSpec::default(),
            dictionary: DictSpec::default(),
            corpus: CorpusSpec::default(),
            weights_check: WeightsCheckSpec::default(),
            operator: OperatorSpec::default(),
            czd: CzdSpec::default(),
            finite: FiniteSpec::default(),
            out_dir: "out".into(),
            baseline: None,
            update_baseline: false,
            seed: 7,
            export_atoms: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &str) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
        Self::from_toml(&text)
    }

    pub fn build_weight(&self, grid: Grid) -> Result<Weight> {
        WeightDescriptor::parse(&self.weight)?.sample(grid)
    }

    /// Fingerprint over every numerically relevant field (output locations
    /// and baseline flags excluded).
    pub fn fingerprint(&self) -> String {
        let mut trimmed = self.clone();
        trimmed.out_dir = String::new();
        trimmed.baseline = None;
        trimmed.update_baseline = false;
        let canonical = serde_json::to_string(&trimmed).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        hex_string(&digest[..8])
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
