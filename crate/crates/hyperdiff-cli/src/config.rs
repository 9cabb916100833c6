//! Command configuration files.
//!
//! Every subcommand is driven by a single JSON config; command-line flags
//! only pick the command, the config path, the output directory, and an
//! optional seed override. Unknown keys are rejected so that typos fail
//! loudly instead of silently running defaults.

use serde::{Deserialize, Serialize};

use hyperdiff::checks::Fault;
use hyperdiff::model::Variant;
use hyperdiff::potentials::{EdgePotential, NodePotential};
use hyperdiff::solvers::{SolverConfig, SolverKind};
use hyperdiff::synth::{CsbmConfig, DiffusionPairConfig};
use hyperdiff::train::TrainConfig;
use hyperdiff::{Error, Result};

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenerateConfig {
    /// Two-class community hypergraph with planted minority counts, plus
    /// optional Gaussian node features and a train/val/test split.
    Csbm(CsbmGenerate),
    /// Uniform random hypergraph (fixed-size hyperedges, no labels).
    Uniform(UniformGenerate),
    /// One-step diffusion input/output pairs on a hypergraph.
    DiffusionPairs(PairsGenerate),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsbmGenerate {
    #[serde(default)]
    pub csbm: CsbmConfig,
    #[serde(default)]
    pub features: Option<FeatureSpec>,
    #[serde(default)]
    pub split: Option<SplitSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    #[serde(default = "default_feature_dim")]
    pub dim: usize,
    #[serde(default = "default_class_separation")]
    pub class_separation: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_feature_dim() -> usize {
    100
}

fn default_class_separation() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    #[serde(default = "default_fractions")]
    pub fractions: [f64; 3],
    #[serde(default)]
    pub seed: u64,
}

fn default_fractions() -> [f64; 3] {
    [0.5, 0.25, 0.25]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformGenerate {
    pub num_nodes: usize,
    pub num_hyperedges: usize,
    pub edge_size: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsGenerate {
    pub hypergraph: HypergraphSource,
    pub pairs: DiffusionPairConfig,
}

/// Where the hypergraph for a pairs run comes from: a dataset file on disk,
/// or a uniform random graph generated inline.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum HypergraphSource {
    Path {
        path: String,
    },
    Uniform {
        num_nodes: usize,
        num_hyperedges: usize,
        edge_size: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl GenerateConfig {
    pub fn override_seed(&mut self, seed: u64) {
        match self {
            GenerateConfig::Csbm(c) => {
                c.csbm.seed = seed;
                if let Some(f) = &mut c.features {
                    f.seed = seed;
                }
                if let Some(s) = &mut c.split {
                    s.seed = seed;
                }
            }
            GenerateConfig::Uniform(c) => c.seed = seed,
            GenerateConfig::DiffusionPairs(c) => {
                if let HypergraphSource::Uniform { seed: s, .. } = &mut c.hypergraph {
                    *s = seed;
                }
                c.pairs.seed = seed;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// diffuse
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffuseConfig {
    /// Dataset file providing the hypergraph (and, for
    /// `initial.source = "features"`, the attribute tensor `X`).
    pub dataset: String,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default = "default_node_potential")]
    pub node_potential: NodePotential,
    pub potential: EdgePotential,
    pub solver: SolverSpec,
}

fn default_node_potential() -> NodePotential {
    NodePotential::Quadratic
}

/// Initial/attribute tensor `X` for a diffusion run (the run starts at
/// `H = X`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum InitialState {
    /// Use the dataset's feature tensor.
    Features,
    /// Draw `X ~ N(0, sigma^2)` with the given number of channels.
    Gaussian {
        sigma: f64,
        #[serde(default = "default_channels")]
        channels: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_channels() -> usize {
    1
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Features
    }
}

/// Solver settings as written in config files. Identical to the library's
/// solver config except that `stop_tol` also accepts the string `"inf"`
/// (JSON has no literal for infinity).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub kind: SolverKind,
    pub eta: f64,
    pub max_iters: usize,
    #[serde(default)]
    pub stop_tol: Tolerance,
    #[serde(default = "default_true")]
    pub record_trajectory: bool,
}

fn default_true() -> bool {
    true
}

impl SolverSpec {
    pub fn solver_config(&self) -> Result<SolverConfig> {
        Ok(SolverConfig {
            eta: self.eta,
            max_iters: self.max_iters,
            stop_tol: self.stop_tol.value()?,
            record_trajectory: self.record_trajectory,
        })
    }
}

/// A non-negative tolerance that can be spelled as a number or as the
/// string `"inf"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tolerance {
    Number(f64),
    Text(String),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Number(0.0)
    }
}

impl Tolerance {
    pub fn value(&self) -> Result<f64> {
        match self {
            Tolerance::Number(v) => Ok(*v),
            Tolerance::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" => Ok(f64::INFINITY),
                other => Err(Error::Config(format!(
                    "stop_tol must be a number or \"inf\", got \"{other}\""
                ))),
            },
        }
    }
}

impl DiffuseConfig {
    pub fn override_seed(&mut self, seed: u64) {
        if let InitialState::Gaussian { seed: s, .. } = &mut self.initial {
            *s = seed;
        }
    }
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TrainCommandConfig {
    /// Node classification on a labeled dataset with train/val/test masks.
    Classification(ClassificationSpec),
    /// Regression of one diffusion step from input/output pairs.
    Regression(RegressionSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationSpec {
    pub dataset: String,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub seed: u64,
    /// When set, run once per depth `L` in the list (same parameter budget
    /// across depths) and write one metrics file per run.
    #[serde(default)]
    pub depth_sweep: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    /// Pairs file produced by `generate` with `kind = "diffusion_pairs"`.
    pub pairs: String,
    /// Dataset file with the hypergraph the pairs live on. Defaults to the
    /// `hypergraph_ref` recorded inside the pairs file, resolved relative to
    /// the pairs file's directory.
    #[serde(default)]
    pub dataset: Option<String>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_train_frac")]
    pub train_frac: f64,
    #[serde(default)]
    pub seed: u64,
    /// When set, run once per hidden width in the list and write one metrics
    /// file per run plus a width-vs-MAE summary CSV.
    #[serde(default)]
    pub hidden_sweep: Option<Vec<usize>>,
}

fn default_train_frac() -> f64 {
    0.8
}

/// Model architecture as written in config files: everything except the
/// input/attribute/output widths, which are derived from the data.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub variant: Variant,
    pub layers: usize,
    pub hidden: usize,
    pub phi_depth: usize,
    pub rho_depth: usize,
    pub update_depth: usize,
    pub head_depth: usize,
    pub head_hidden: usize,
    pub layer_norm: bool,
    pub input_dropout: f64,
    pub dropout: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            variant: Variant::EdHnn,
            layers: 2,
            hidden: 64,
            phi_depth: 2,
            rho_depth: 2,
            update_depth: 2,
            head_depth: 2,
            head_hidden: 64,
            layer_norm: true,
            input_dropout: 0.0,
            dropout: 0.0,
        }
    }
}

impl ModelSpec {
    pub fn model_config(
        &self,
        in_dim: usize,
        attr_dim: usize,
        out_dim: usize,
    ) -> hyperdiff::model::ModelConfig {
        hyperdiff::model::ModelConfig {
            variant: self.variant,
            layers: self.layers,
            hidden: self.hidden,
            phi_depth: self.phi_depth,
            rho_depth: self.rho_depth,
            update_depth: self.update_depth,
            head_depth: self.head_depth,
            head_hidden: self.head_hidden,
            in_dim,
            attr_dim,
            out_dim,
            layer_norm: self.layer_norm,
            input_dropout: self.input_dropout,
            dropout: self.dropout,
        }
    }
}

impl TrainCommandConfig {
    pub fn override_seed(&mut self, seed: u64) {
        match self {
            TrainCommandConfig::Classification(c) => c.seed = seed,
            TrainCommandConfig::Regression(c) => c.seed = seed,
        }
    }
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Suites to run; empty means all of them.
    pub suites: Vec<String>,
    /// Deliberately corrupt one computation to prove the suites can fail.
    pub inject_fault: Option<Fault>,
    pub seed: u64,
}

impl CheckConfig {
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

// ---------------------------------------------------------------------------
// loading
// ---------------------------------------------------------------------------

pub fn load_config<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generate_config_parses_all_kinds() {
        let csbm: GenerateConfig = serde_json::from_str(
            r#"{"kind": "csbm",
                "csbm": {"nodes_per_class": 10, "num_hyperedges": 5, "edge_size": 4, "alpha": 2, "seed": 7},
                "features": {"dim": 8},
                "split": {}}"#,
        )
        .unwrap();
        match &csbm {
            GenerateConfig::Csbm(c) => {
                assert_eq!(c.csbm.alpha, 2);
                assert_eq!(c.features.as_ref().unwrap().dim, 8);
                assert_eq!(c.features.as_ref().unwrap().class_separation, 1.0);
                assert_eq!(c.split.as_ref().unwrap().fractions, [0.5, 0.25, 0.25]);
            }
            _ => panic!("wrong kind"),
        }

        let uniform: GenerateConfig = serde_json::from_str(
            r#"{"kind": "uniform", "num_nodes": 30, "num_hyperedges": 10, "edge_size": 3}"#,
        )
        .unwrap();
        assert!(matches!(uniform, GenerateConfig::Uniform(_)));

        let pairs: GenerateConfig = serde_json::from_str(
            r#"{"kind": "diffusion_pairs",
                "hypergraph": {"source": "uniform", "num_nodes": 30, "num_hyperedges": 10, "edge_size": 3},
                "pairs": {"num_pairs": 4, "mode": "gd", "potential": {"kind": "ce"}}}"#,
        )
        .unwrap();
        assert!(matches!(pairs, GenerateConfig::DiffusionPairs(_)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = serde_json::from_str::<GenerateConfig>(
            r#"{"kind": "uniform", "num_nodes": 3, "num_hyperedges": 1, "edge_size": 2, "typo": 1}"#,
        );
        assert!(bad.is_err());
        let bad = serde_json::from_str::<CheckConfig>(r#"{"suite": ["powersum"]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn stop_tol_accepts_inf() {
        let spec: SolverSpec = serde_json::from_str(
            r#"{"kind": "gd", "eta": 0.1, "max_iters": 5, "stop_tol": "inf"}"#,
        )
        .unwrap();
        assert_eq!(spec.solver_config().unwrap().stop_tol, f64::INFINITY);
        let spec: SolverSpec =
            serde_json::from_str(r#"{"kind": "gd", "eta": 0.1, "max_iters": 5}"#).unwrap();
        assert_eq!(spec.solver_config().unwrap().stop_tol, 0.0);
        assert!(spec.record_trajectory);
        let spec: SolverSpec = serde_json::from_str(
            r#"{"kind": "gd", "eta": 0.1, "max_iters": 5, "stop_tol": "huge"}"#,
        )
        .unwrap();
        assert!(spec.solver_config().is_err());
    }

    #[test]
    fn seed_override_reaches_every_generator() {
        let mut cfg: GenerateConfig = serde_json::from_str(
            r#"{"kind": "csbm", "csbm": {"seed": 1}, "features": {"seed": 2}, "split": {"seed": 3}}"#,
        )
        .unwrap();
        cfg.override_seed(99);
        match cfg {
            GenerateConfig::Csbm(c) => {
                assert_eq!(c.csbm.seed, 99);
                assert_eq!(c.features.unwrap().seed, 99);
                assert_eq!(c.split.unwrap().seed, 99);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn model_spec_defaults_fill_missing_fields() {
        let spec: ModelSpec = serde_json::from_str(r#"{"layers": 4, "hidden": 16}"#).unwrap();
        assert_eq!(spec.layers, 4);
        assert_eq!(spec.hidden, 16);
        assert_eq!(spec.update_depth, 2);
        let cfg = spec.model_config(3, 3, 2);
        assert_eq!(cfg.in_dim, 3);
        assert_eq!(cfg.out_dim, 2);
        cfg.validate().unwrap();
    }
}
