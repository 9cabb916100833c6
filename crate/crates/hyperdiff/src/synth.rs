//! Synthetic data generators: a contextual hypergraph stochastic block
//! model, label-dependent Gaussian features, uniform random hypergraphs,
//! and diffusion-step regression pairs. All generators are pure functions
//! of (config, seed); independent seed labels keep the streams decoupled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::io::{Dataset, MaskIndices, Pair};
use crate::potentials::{validate_edge_spec, EdgePotential, NodePotential};
use crate::rng::{normal_vec, rng_for, standard_normal_vec, SeedRng};
use crate::solvers::{admm_step, gather_pairs, gd_step};
use crate::tensor::Tensor2D;
use rand::seq::SliceRandom;
use rand::Rng;

/// Two-class block model over hyperedges: every hyperedge draws `alpha`
/// nodes from one class and `edge_size - alpha` from the other, so `alpha`
/// controls homophily exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsbmConfig {
    pub nodes_per_class: usize,
    pub num_hyperedges: usize,
    pub edge_size: usize,
    /// Minority-class count per hyperedge; `1 <= alpha <= edge_size / 2`.
    pub alpha: usize,
    pub seed: u64,
}

impl Default for CsbmConfig {
    fn default() -> Self {
        CsbmConfig { nodes_per_class: 2500, num_hyperedges: 1000, edge_size: 15, alpha: 1, seed: 0 }
    }
}

impl CsbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_class == 0 || self.num_hyperedges == 0 {
            return Err(Error::Config("block model needs nodes and hyperedges".into()));
        }
        if self.alpha == 0 {
            return Err(Error::Config("alpha must be >= 1".into()));
        }
        if 2 * self.alpha > self.edge_size {
            return Err(Error::Config(format!(
                "alpha {} exceeds half the edge size {}",
                self.alpha, self.edge_size
            )));
        }
        if self.edge_size > self.nodes_per_class {
            return Err(Error::Config(format!(
                "edge size {} exceeds nodes per class {}",
                self.edge_size, self.nodes_per_class
            )));
        }
        Ok(())
    }
}

/// Generate a labeled two-class hypergraph. Which class supplies the
/// minority side is chosen uniformly per hyperedge, keeping the classes
/// symmetric. Nodes `0..nodes_per_class` are class 0, the rest class 1.
pub fn gen_csbm(cfg: &CsbmConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, "csbm");
    let npc = cfg.nodes_per_class;
    let mut edges = Vec::with_capacity(cfg.num_hyperedges);
    for _ in 0..cfg.num_hyperedges {
        let minority_class: usize = rng.random_range(0..2);
        let mut members = Vec::with_capacity(cfg.edge_size);
        for (class, count) in
            [(minority_class, cfg.alpha), (1 - minority_class, cfg.edge_size - cfg.alpha)]
        {
            let base = class * npc;
            for idx in rand::seq::index::sample(&mut rng, npc, count) {
                members.push(base + idx);
            }
        }
        edges.push(members);
    }
    let hypergraph = Hypergraph::build(2 * npc, edges)?;
    let labels = (0..2 * npc).map(|v| usize::from(v >= npc)).collect();
    Ok(Dataset { hypergraph, labels: Some(labels), features: None, masks: None })
}

/// Label-dependent Gaussian features: one fixed unit-norm mean direction per
/// class (drawn once from the seed), then
/// `feature = class_separation * mean_dir(label) + standard normal noise`.
pub fn gen_gaussian_features(
    labels: &[usize],
    dim: usize,
    class_separation: f64,
    seed: u64,
) -> Result<Tensor2D> {
    if labels.is_empty() {
        return Err(Error::Validation("no labels to generate features for".into()));
    }
    if dim == 0 {
        return Err(Error::Config("feature dimension must be >= 1".into()));
    }
    if !class_separation.is_finite() {
        return Err(Error::Config("class separation must be finite".into()));
    }
    let num_classes = labels.iter().max().unwrap() + 1;
    let mut rng = rng_for(seed, "gaussian_features");
    let means: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| {
            let v = standard_normal_vec(&mut rng, dim);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let mut out = Tensor2D::zeros(labels.len(), dim);
    for (v, &label) in labels.iter().enumerate() {
        let noise = standard_normal_vec(&mut rng, dim);
        let mean = &means[label];
        let row = out.row_mut(v);
        for j in 0..dim {
            row[j] = class_separation * mean[j] + noise[j];
        }
    }
    Ok(out)
}

/// Each hyperedge is `edge_size` nodes sampled uniformly without
/// replacement.
pub fn gen_uniform_hypergraph(
    num_nodes: usize,
    num_hyperedges: usize,
    edge_size: usize,
    seed: u64,
) -> Result<Hypergraph> {
    if edge_size == 0 || edge_size > num_nodes {
        return Err(Error::Config(format!(
            "edge size {edge_size} must be in 1..={num_nodes} (num_nodes)"
        )));
    }
    let mut rng = rng_for(seed, "uniform_hypergraph");
    let edges = (0..num_hyperedges)
        .map(|_| rand::seq::index::sample(&mut rng, num_nodes, edge_size).into_vec())
        .collect();
    Hypergraph::build(num_nodes, edges)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// One explicit gradient step.
    Gd,
    /// One operator-splitting step started from an auxiliary state equal to
    /// the input state.
    Admm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionPairConfig {
    #[serde(default = "default_num_pairs")]
    pub num_pairs: usize,
    /// Per-pair state scale: sigma is uniform in this range and the input
    /// state is N(0, sigma^2) per node.
    #[serde(default = "default_sigma_range")]
    pub sigma_range: [f64; 2],
    pub mode: PairMode,
    pub potential: EdgePotential,
    /// Step size; defaults per potential family when omitted.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_num_pairs() -> usize {
    1000
}

fn default_sigma_range() -> [f64; 2] {
    [1.0, 10.0]
}

impl DiffusionPairConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_pairs == 0 {
            return Err(Error::Config("num_pairs must be >= 1".into()));
        }
        let [lo, hi] = self.sigma_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return Err(Error::Config(format!("sigma range [{lo}, {hi}] must satisfy 0 < lo <= hi")));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::Config(format!("eta must be positive, got {eta}")));
            }
        }
        validate_edge_spec(&self.potential)
    }

    /// The configured step size, or the potential family's default.
    pub fn resolved_eta(&self) -> f64 {
        self.eta.unwrap_or(match (self.mode, &self.potential) {
            (PairMode::Admm, _) => 0.5,
            (PairMode::Gd, EdgePotential::Tv { .. }) => 0.02,
            (PairMode::Gd, EdgePotential::Lec { .. }) => 0.1,
            (PairMode::Gd, _) => 0.5,
        })
    }
}

/// Generate (state, next-state) pairs from single diffusion steps on `hg`.
/// The node potential is quadratic with the attribute pinned to the input
/// state, so the node term contributes no gradient to the first step.
pub fn gen_diffusion_pairs(hg: &Hypergraph, cfg: &DiffusionPairConfig) -> Result<Vec<Pair>> {
    cfg.validate()?;
    let exp = hg.star_expansion();
    let eta = cfg.resolved_eta();
    let node = NodePotential::Quadratic;
    let mut rng = rng_for(cfg.seed, "diffusion_pairs");
    let [lo, hi] = cfg.sigma_range;
    let mut pairs = Vec::with_capacity(cfg.num_pairs);
    for _ in 0..cfg.num_pairs {
        let sigma = lo + (hi - lo) * rng.random::<f64>();
        let h0 = normal_vec(&mut rng, hg.num_nodes(), 0.0, sigma);
        let t0 = Tensor2D::from_col(h0.clone());
        let h1 = match cfg.mode {
            PairMode::Gd => gd_step(&exp, &t0, &t0, &node, &cfg.potential, eta)?,
            PairMode::Admm => {
                let mut q = gather_pairs(&exp, &t0);
                admm_step(&exp, &t0, &t0, &mut q, &node, &cfg.potential, eta)?
            }
        };
        pairs.push(Pair { h0, h1: h1.data().to_vec() });
    }
    Ok(pairs)
}

/// Uniform random disjoint node split. Fractions must sum to 1; the first
/// two masks get `floor(n * fraction)` nodes and the third the remainder.
pub fn split_dataset(num_nodes: usize, fractions: [f64; 3], seed: u64) -> Result<MaskIndices> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(Error::Config(format!("split fractions {fractions:?} must lie in [0, 1]")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions {fractions:?} must sum to 1")));
    }
    let mut order: Vec<usize> = (0..num_nodes).collect();
    let mut rng: SeedRng = rng_for(seed, "split");
    order.shuffle(&mut rng);
    let n_train = (num_nodes as f64 * fractions[0]).floor() as usize;
    let n_val = (num_nodes as f64 * fractions[1]).floor() as usize;
    let (train, rest) = order.split_at(n_train.min(num_nodes));
    let (val, test) = rest.split_at(n_val.min(rest.len()));
    for (name, part) in [("train", train), ("val", val), ("test", test)] {
        if part.is_empty() {
            return Err(Error::Validation(format!(
                "{name} split is empty under fractions {fractions:?} on {num_nodes} nodes"
            )));
        }
    }
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Ok(MaskIndices { train: sorted(train), val: sorted(val), test: sorted(test) })
}
