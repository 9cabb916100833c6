//! Equivariant hypergraph message-passing networks.
//!
//! One layer runs over the node–hyperedge incidence structure:
//!
//! 1. node-to-edge messages `m_{u->e} = phi(h_u)` (the recurrent variant
//!    feeds the previous layer's incidence message back in:
//!    `m_{u->e} = phi([m_prev ; h_u])`),
//! 2. per-hyperedge sums `m_e = sum_{u in e} m_{u->e}`,
//! 3. edge-to-node messages `m_{e->v} = rho([h_v ; m_e])` — member-specific,
//!    which is what makes the layer hyperedge-permutation *equivariant*; the
//!    invariant baseline drops `h_v` and broadcasts `rho(m_e)` to all members,
//! 4. node update `h_v' = update([h_v ; sum_{e: v in e} m_{e->v} ; x_v ; d_v])`.
//!
//! Parameters are shared across all `L` layers, so the parameter count is
//! independent of depth. A readout head maps the final node state to logits
//! or regression outputs.
//!
//! The same traversal primitives also run hand-written (non-neural) operator
//! maps: [`ce_edge_gradients_via_messages`] reproduces the pairwise-squared
//! potential's gradient bit-for-bit, the constructive witness that this layer
//! family expresses the diffusion gradient step.
//!
//! Determinism: every reduction (edge sums, node sums) runs in incidence
//! order, so outputs are bit-identical across runs and commute bitwise with
//! node relabeling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::BipartiteExpansion;
use crate::nn::{mlp_backward, mlp_forward, DropoutPlan, LnPolicy, Mlp, MlpCache};
use crate::rng::SeedRng;
use crate::tensor::Tensor2D;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Member-specific edge-to-node messages (equivariant).
    EdHnn,
    /// As above, with recurrent node-to-edge messages across layers.
    EdHnnIi,
    /// Edge-to-node message ignores the receiving member (invariant).
    InvariantBaseline,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Message-passing iterations `L` (shared parameters).
    pub layers: usize,
    pub hidden: usize,
    /// MLP depths; 0 means the identity map where widths permit.
    pub phi_depth: usize,
    pub rho_depth: usize,
    pub update_depth: usize,
    pub head_depth: usize,
    pub head_hidden: usize,
    /// Width of the tensor embedded into the initial node state.
    pub in_dim: usize,
    /// Width of the attribute tensor concatenated into every update.
    pub attr_dim: usize,
    /// Classes (classification) or output channels (regression).
    pub out_dim: usize,
    pub layer_norm: bool,
    pub input_dropout: f64,
    pub dropout: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("model layers must be >= 1".into()));
        }
        if self.hidden == 0 || self.in_dim == 0 || self.attr_dim == 0 || self.out_dim == 0 {
            return Err(Error::Config("model dimensions must be >= 1".into()));
        }
        if self.update_depth == 0 {
            return Err(Error::Config(
                "update depth must be >= 1 (its input and output widths differ)".into(),
            ));
        }
        if self.head_depth == 0 {
            return Err(Error::Config("head depth must be >= 1".into()));
        }
        if self.rho_depth == 0 && self.variant != Variant::InvariantBaseline {
            return Err(Error::Config(
                "edge-to-node depth must be >= 1 for the equivariant variants \
                 (identity cannot map the concatenated input back to width hidden)"
                    .into(),
            ));
        }
        if self.phi_depth == 0 && self.variant == Variant::EdHnnIi {
            return Err(Error::Config(
                "node-to-edge depth must be >= 1 for the recurrent variant".into(),
            ));
        }
        for (name, rate) in [("input_dropout", self.input_dropout), ("dropout", self.dropout)] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} must be in [0, 1), got {rate}")));
            }
        }
        Ok(())
    }

    fn phi_in_dim(&self) -> usize {
        match self.variant {
            Variant::EdHnnIi => 2 * self.hidden,
            _ => self.hidden,
        }
    }

    fn rho_in_dim(&self) -> usize {
        match self.variant {
            Variant::InvariantBaseline => self.hidden,
            _ => 2 * self.hidden,
        }
    }

    fn update_in_dim(&self) -> usize {
        2 * self.hidden + self.attr_dim + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub embed: Mlp,
    pub phi: Mlp,
    pub rho: Mlp,
    pub update: Mlp,
    pub head: Mlp,
    /// Recurrent variant only: shared first-layer incidence message.
    pub init_msg: Option<Vec<f64>>,
}

impl ModelParams {
    pub fn init(cfg: &ModelConfig, rng: &mut SeedRng) -> Result<Self> {
        cfg.validate()?;
        let (internal, head_policy) = if cfg.layer_norm {
            (LnPolicy::All, LnPolicy::Hidden)
        } else {
            (LnPolicy::Off, LnPolicy::Off)
        };
        let h = cfg.hidden;
        let params = ModelParams {
            embed: Mlp::new(&[cfg.in_dim, h], LnPolicy::Off, rng),
            phi: Mlp::new(&Mlp::chain(cfg.phi_in_dim(), h, h, cfg.phi_depth), internal, rng),
            rho: Mlp::new(&Mlp::chain(cfg.rho_in_dim(), h, h, cfg.rho_depth), internal, rng),
            update: Mlp::new(
                &Mlp::chain(cfg.update_in_dim(), h, h, cfg.update_depth),
                internal,
                rng,
            ),
            head: Mlp::new(
                &Mlp::chain(h, cfg.head_hidden, cfg.out_dim, cfg.head_depth),
                head_policy,
                rng,
            ),
            init_msg: (cfg.variant == Variant::EdHnnIi).then(|| vec![0.0; h]),
        };
        params.check_shapes(cfg)?;
        Ok(params)
    }

    /// Verify all component shapes against the configuration.
    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<()> {
        let h = cfg.hidden;
        if self.embed.check_shapes(cfg.in_dim, "embed")? != h {
            return Err(Error::Validation("embed output width != hidden".into()));
        }
        if self.phi.check_shapes(cfg.phi_in_dim(), "node-to-edge map")? != h {
            return Err(Error::Validation("node-to-edge output width != hidden".into()));
        }
        if self.rho.check_shapes(cfg.rho_in_dim(), "edge-to-node map")? != h {
            return Err(Error::Validation("edge-to-node output width != hidden".into()));
        }
        if self.update.check_shapes(cfg.update_in_dim(), "update map")? != h {
            return Err(Error::Validation("update output width != hidden".into()));
        }
        if self.head.check_shapes(h, "head")? != cfg.out_dim {
            return Err(Error::Validation("head output width != out_dim".into()));
        }
        match (&self.init_msg, cfg.variant) {
            (Some(v), Variant::EdHnnIi) if v.len() == h => {}
            (None, Variant::EdHnn | Variant::InvariantBaseline) => {}
            _ => {
                return Err(Error::Validation(
                    "initial incidence message present/sized inconsistently with variant".into(),
                ))
            }
        }
        Ok(())
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            embed: self.embed.zeros_like(),
            phi: self.phi.zeros_like(),
            rho: self.rho.zeros_like(),
            update: self.update.zeros_like(),
            head: self.head.zeros_like(),
            init_msg: self.init_msg.as_ref().map(|v| vec![0.0; v.len()]),
        }
    }

    pub fn num_params(&self) -> usize {
        self.embed.num_params()
            + self.phi.num_params()
            + self.rho.num_params()
            + self.update.num_params()
            + self.head.num_params()
            + self.init_msg.as_ref().map_or(0, Vec::len)
    }

    /// `self += scale * other` over every parameter (shapes must match).
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        self.embed.add_scaled(&other.embed, scale);
        self.phi.add_scaled(&other.phi, scale);
        self.rho.add_scaled(&other.rho, scale);
        self.update.add_scaled(&other.update, scale);
        self.head.add_scaled(&other.head, scale);
        if let (Some(a), Some(b)) = (&mut self.init_msg, &other.init_msg) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.embed.param_slices_mut();
        out.extend(self.phi.param_slices_mut());
        out.extend(self.rho.param_slices_mut());
        out.extend(self.update.param_slices_mut());
        out.extend(self.head.param_slices_mut());
        if let Some(v) = &mut self.init_msg {
            out.push(v.as_mut_slice());
        }
        out
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = self.embed.param_slices();
        out.extend(self.phi.param_slices());
        out.extend(self.rho.param_slices());
        out.extend(self.update.param_slices());
        out.extend(self.head.param_slices());
        if let Some(v) = &self.init_msg {
            out.push(v.as_slice());
        }
        out
    }
}

// ---------- shared traversal primitives ----------

/// Copy node rows out to incidence pairs (`out[p] = t[node(p)]`).
pub fn gather_nodes_to_pairs(exp: &BipartiteExpansion, t: &Tensor2D) -> Tensor2D {
    t.gather_rows(exp.pair_nodes())
}

/// Copy hyperedge rows out to their incidence pairs (`out[p] = t[edge(p)]`).
pub fn gather_edges_to_pairs(exp: &BipartiteExpansion, t: &Tensor2D) -> Tensor2D {
    t.gather_rows(exp.pair_edges())
}

/// Sum incidence rows into their hyperedge, in pair order.
pub fn sum_pairs_to_edges(exp: &BipartiteExpansion, pairs: &Tensor2D) -> Tensor2D {
    let cols = pairs.cols();
    let mut out = Tensor2D::zeros(exp.num_edges(), cols);
    for e in 0..exp.num_edges() {
        let o = out.row_mut(e);
        for p in exp.edge_range(e) {
            for (acc, v) in o.iter_mut().zip(pairs.row(p)) {
                *acc += v;
            }
        }
    }
    out
}

/// Sum incidence rows into their node, in ascending pair order.
pub fn sum_pairs_to_nodes(exp: &BipartiteExpansion, pairs: &Tensor2D) -> Tensor2D {
    let cols = pairs.cols();
    let mut out = Tensor2D::zeros(exp.num_nodes(), cols);
    for v in 0..exp.num_nodes() {
        let o = out.row_mut(v);
        for &p in exp.node_pairs(v) {
            for (acc, val) in o.iter_mut().zip(pairs.row(p as usize)) {
                *acc += val;
            }
        }
    }
    out
}

// ---------- neural forward/backward ----------

struct LayerCache {
    phi: MlpCache,
    rho: MlpCache,
    update: MlpCache,
}

pub struct ModelCache {
    embed: MlpCache,
    layers: Vec<LayerCache>,
    head: MlpCache,
}

/// Run the network. `inputs` seeds the hidden state (via the embedding);
/// `attrs` is concatenated into every update step. For ordinary use both are
/// the node feature matrix; diffusion-operator witnesses pass a state and an
/// attribute tensor separately.
pub fn forward(
    cfg: &ModelConfig,
    params: &ModelParams,
    exp: &BipartiteExpansion,
    inputs: &Tensor2D,
    attrs: &Tensor2D,
    train: bool,
    rng: &mut SeedRng,
) -> Result<(Tensor2D, ModelCache)> {
    cfg.validate()?;
    params.check_shapes(cfg)?;
    let n = exp.num_nodes();
    if inputs.shape() != (n, cfg.in_dim) || attrs.shape() != (n, cfg.attr_dim) {
        return Err(Error::Validation(format!(
            "model inputs {:?} / attrs {:?} for {} nodes, in_dim {}, attr_dim {}",
            inputs.shape(),
            attrs.shape(),
            n,
            cfg.in_dim,
            cfg.attr_dim
        )));
    }
    let plan = DropoutPlan { rate: cfg.dropout, train };
    let mut x = inputs.clone();
    if train && cfg.input_dropout > 0.0 {
        let keep = 1.0 - cfg.input_dropout;
        for v in x.data_mut() {
            *v *= if rng.random::<f64>() < cfg.input_dropout { 0.0 } else { 1.0 / keep };
        }
    }
    let (mut h, embed_cache) = mlp_forward(&params.embed, &x, &plan, rng)?;
    let deg_col = Tensor2D::from_col(exp.degrees_f64());
    let mut layers = Vec::with_capacity(cfg.layers);
    // Recurrent variant: previous layer's incidence messages.
    let mut prev_msg: Option<Tensor2D> = match (&params.init_msg, cfg.variant) {
        (Some(v), Variant::EdHnnIi) => {
            let mut t = Tensor2D::zeros(exp.num_pairs(), cfg.hidden);
            for p in 0..exp.num_pairs() {
                t.row_mut(p).copy_from_slice(v);
            }
            Some(t)
        }
        _ => None,
    };
    for _ in 0..cfg.layers {
        // 1–2: node-to-edge messages and hyperedge sums.
        let (m_e, phi_cache, new_prev) = match cfg.variant {
            Variant::EdHnnIi => {
                let h_pairs = gather_nodes_to_pairs(exp, &h);
                let phi_in =
                    Tensor2D::concat_cols(&[prev_msg.as_ref().expect("recurrent state"), &h_pairs]);
                let (phi_out, cache) = mlp_forward(&params.phi, &phi_in, &plan, rng)?;
                let m_e = sum_pairs_to_edges(exp, &phi_out);
                (m_e, cache, Some(phi_out))
            }
            _ => {
                let (phi_out, cache) = mlp_forward(&params.phi, &h, &plan, rng)?;
                let phi_pairs = gather_nodes_to_pairs(exp, &phi_out);
                (sum_pairs_to_edges(exp, &phi_pairs), cache, None)
            }
        };
        prev_msg = new_prev;
        // 3: edge-to-node messages and per-node aggregation.
        let (agg, rho_cache) = match cfg.variant {
            Variant::InvariantBaseline => {
                let (rho_out, cache) = mlp_forward(&params.rho, &m_e, &plan, rng)?;
                let rho_pairs = gather_edges_to_pairs(exp, &rho_out);
                (sum_pairs_to_nodes(exp, &rho_pairs), cache)
            }
            _ => {
                let h_pairs = gather_nodes_to_pairs(exp, &h);
                let m_pairs = gather_edges_to_pairs(exp, &m_e);
                let rho_in = Tensor2D::concat_cols(&[&h_pairs, &m_pairs]);
                let (rho_out, cache) = mlp_forward(&params.rho, &rho_in, &plan, rng)?;
                (sum_pairs_to_nodes(exp, &rho_out), cache)
            }
        };
        // 4: node update.
        let upd_in = Tensor2D::concat_cols(&[&h, &agg, attrs, &deg_col]);
        let (new_h, update_cache) = mlp_forward(&params.update, &upd_in, &plan, rng)?;
        h = new_h;
        layers.push(LayerCache { phi: phi_cache, rho: rho_cache, update: update_cache });
    }
    let (out, head_cache) = mlp_forward(&params.head, &h, &plan, rng)?;
    out.ensure_finite("model output")?;
    Ok((out, ModelCache { embed: embed_cache, layers, head: head_cache }))
}

/// Convenience eval-mode forward.
pub fn eval_forward(
    cfg: &ModelConfig,
    params: &ModelParams,
    exp: &BipartiteExpansion,
    inputs: &Tensor2D,
    attrs: &Tensor2D,
) -> Result<Tensor2D> {
    let mut rng = crate::rng::rng_from_seed(0);
    Ok(forward(cfg, params, exp, inputs, attrs, false, &mut rng)?.0)
}

/// Reverse-mode gradients of [`forward`] with respect to every parameter;
/// layer contributions accumulate (parameters are shared across layers).
pub fn backward(
    cfg: &ModelConfig,
    params: &ModelParams,
    exp: &BipartiteExpansion,
    cache: &ModelCache,
    out_grad: &Tensor2D,
) -> Result<ModelParams> {
    if cache.layers.len() != cfg.layers {
        return Err(Error::Validation(format!(
            "stale cache: {} cached layers for configuration with {}",
            cache.layers.len(),
            cfg.layers
        )));
    }
    let hdim = cfg.hidden;
    let mut grads = params.zeros_like();
    let (mut d_h, head_g) = mlp_backward(&params.head, &cache.head, out_grad)?;
    grads.head.add_scaled(&head_g, 1.0);
    // Recurrent variant: gradient flowing into the previous layer's incidence
    // messages.
    let mut d_prev_msg: Option<Tensor2D> = None;
    for t in (0..cfg.layers).rev() {
        let step = &cache.layers[t];
        // 4: update backward.
        let (d_upd_in, upd_g) = mlp_backward(&params.update, &step.update, &d_h)?;
        grads.update.add_scaled(&upd_g, 1.0);
        let mut parts = d_upd_in.split_cols(&[hdim, hdim, cfg.attr_dim, 1]);
        let d_agg = parts.swap_remove(1);
        let d_h_direct = parts.swap_remove(0);
        // 3: aggregation and edge-to-node backward.
        let (d_m_e, d_h_from_rho) = match cfg.variant {
            Variant::InvariantBaseline => {
                let d_rho_pairs = gather_nodes_to_pairs(exp, &d_agg);
                let d_rho_out = sum_pairs_to_edges(exp, &d_rho_pairs);
                let (d_rho_in, rho_g) = mlp_backward(&params.rho, &step.rho, &d_rho_out)?;
                grads.rho.add_scaled(&rho_g, 1.0);
                (d_rho_in, None)
            }
            _ => {
                let d_rho_out = gather_nodes_to_pairs(exp, &d_agg);
                let (d_rho_in, rho_g) = mlp_backward(&params.rho, &step.rho, &d_rho_out)?;
                grads.rho.add_scaled(&rho_g, 1.0);
                let mut halves = d_rho_in.split_cols(&[hdim, hdim]);
                let d_m_pairs = halves.swap_remove(1);
                let d_h_pairs = halves.swap_remove(0);
                (sum_pairs_to_edges(exp, &d_m_pairs), Some(sum_pairs_to_nodes(exp, &d_h_pairs)))
            }
        };
        // 1–2: hyperedge sums and node-to-edge backward.
        let d_h_from_phi = match cfg.variant {
            Variant::EdHnnIi => {
                let mut d_phi_out = gather_edges_to_pairs(exp, &d_m_e);
                if let Some(later) = d_prev_msg.take() {
                    d_phi_out.add_assign(&later);
                }
                let (d_phi_in, phi_g) = mlp_backward(&params.phi, &step.phi, &d_phi_out)?;
                grads.phi.add_scaled(&phi_g, 1.0);
                let mut halves = d_phi_in.split_cols(&[hdim, hdim]);
                let d_h_pairs = halves.swap_remove(1);
                d_prev_msg = Some(halves.swap_remove(0));
                sum_pairs_to_nodes(exp, &d_h_pairs)
            }
            _ => {
                let d_phi_pairs = gather_edges_to_pairs(exp, &d_m_e);
                let d_phi_out = sum_pairs_to_nodes(exp, &d_phi_pairs);
                let (d_h_phi, phi_g) = mlp_backward(&params.phi, &step.phi, &d_phi_out)?;
                grads.phi.add_scaled(&phi_g, 1.0);
                d_h_phi
            }
        };
        d_h = d_h_direct;
        if let Some(t) = d_h_from_rho {
            d_h.add_assign(&t);
        }
        d_h.add_assign(&d_h_from_phi);
    }
    // Recurrent variant: the layer-0 "previous" message is the shared
    // learnable vector, repeated over all pairs.
    if let Some(d_prev) = d_prev_msg {
        let g = grads.init_msg.as_mut().expect("recurrent variant has the shared message");
        for p in 0..d_prev.rows() {
            for (acc, v) in g.iter_mut().zip(d_prev.row(p)) {
                *acc += v;
            }
        }
    }
    let (_, embed_g) = mlp_backward(&params.embed, &cache.embed, &d_h)?;
    grads.embed.add_scaled(&embed_g, 1.0);
    Ok(grads)
}

// ---------- analytic operator witnesses ----------

/// Per-incidence gradients of the pairwise-squared potential, computed
/// through the same traversal the network uses: node messages `(h_u, 1)`,
/// hyperedge sums `(S_e, n_e)`, member message `4 (n_e h_v - S_e)`.
/// Bit-identical to `edge_potential_grad` for the `ce` family.
pub fn ce_edge_gradients_via_messages(exp: &BipartiteExpansion, h: &Tensor2D) -> Result<Tensor2D> {
    if h.shape() != (exp.num_nodes(), 1) {
        return Err(Error::Validation(format!(
            "witness expects one channel over {} nodes, got {:?}",
            exp.num_nodes(),
            h.shape()
        )));
    }
    // phi(h) = (h, 1).
    let mut phi = Tensor2D::zeros(exp.num_nodes(), 2);
    for v in 0..exp.num_nodes() {
        let row = phi.row_mut(v);
        row[0] = h.get(v, 0);
        row[1] = 1.0;
    }
    let m_e = sum_pairs_to_edges(exp, &gather_nodes_to_pairs(exp, &phi));
    let mut out = Tensor2D::zeros(exp.num_pairs(), 1);
    for p in 0..exp.num_pairs() {
        let e = exp.pair_edges()[p] as usize;
        let v = exp.pair_nodes()[p] as usize;
        let s = m_e.get(e, 0);
        let n = m_e.get(e, 1);
        out.set(p, 0, 4.0 * (n * h.get(v, 0) - s));
    }
    Ok(out)
}

/// Full analytic diffusion step through the message-passing traversal:
/// `h_v - eta * (2 (h_v - x_v) + sum of incident member messages)`.
pub fn ce_diffusion_step_via_messages(
    exp: &BipartiteExpansion,
    h: &Tensor2D,
    x: &Tensor2D,
    eta: f64,
) -> Result<Tensor2D> {
    if x.shape() != h.shape() {
        return Err(Error::Validation("witness state/attribute shape mismatch".into()));
    }
    let rho = ce_edge_gradients_via_messages(exp, h)?;
    let agg = sum_pairs_to_nodes(exp, &rho);
    let mut out = Tensor2D::zeros(exp.num_nodes(), 1);
    for v in 0..exp.num_nodes() {
        let hv = h.get(v, 0);
        let xv = x.get(v, 0);
        out.set(v, 0, hv - eta * (2.0 * (hv - xv) + agg.get(v, 0)));
    }
    Ok(out)
}

/// Hand-set weights making one layer of the equivariant network compute the
/// gradient-descent diffusion step for the pairwise-squared potential
/// (hyperedges must share one cardinality so the affine edge-to-node map can
/// realize `4 (n h - S)` with `n` folded into the weights).
///
/// Arithmetic is arranged to mirror the solver's rounding sequence: the
/// update emits `(h_v, total_v)` with `total_v = 2 h_v + G_v - 2 x_v`, and
/// the readout head computes `h_v - eta * total_v` — one multiplication by
/// `eta`, then one subtraction, just like the solver. On instances whose
/// states, attributes, and intermediate sums are exactly representable
/// (e.g. integers), the result is bit-identical to the solver's.
pub fn hand_weighted_diffusion_params(edge_size: usize, eta: f64) -> (ModelConfig, ModelParams) {
    let cfg = ModelConfig {
        variant: Variant::EdHnn,
        layers: 1,
        hidden: 2,
        phi_depth: 0,
        rho_depth: 1,
        update_depth: 1,
        head_depth: 1,
        head_hidden: 2,
        in_dim: 1,
        attr_dim: 1,
        out_dim: 1,
        layer_norm: false,
        input_dropout: 0.0,
        dropout: 0.0,
    };
    let n = edge_size as f64;
    let embed = Mlp {
        layers: vec![crate::nn::Dense {
            w: Tensor2D::from_vec(1, 2, vec![1.0, 0.0]),
            b: vec![0.0, 1.0],
            ln: None,
        }],
    };
    // rho([a, c, S, n]) = (4 n a - 4 S, 0) for the fixed cardinality n.
    let rho = Mlp {
        layers: vec![crate::nn::Dense {
            w: Tensor2D::from_vec(4, 2, vec![4.0 * n, 0.0, 0.0, 0.0, -4.0, 0.0, 0.0, 0.0]),
            b: vec![0.0, 0.0],
            ln: None,
        }],
    };
    // update([a, c, G, z, x, d]) = (a, 2a + G - 2x): state and total gradient.
    let update = Mlp {
        layers: vec![crate::nn::Dense {
            w: Tensor2D::from_vec(
                6,
                2,
                vec![1.0, 2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0],
            ),
            b: vec![0.0, 0.0],
            ln: None,
        }],
    };
    // head([a, total]) = a - eta * total.
    let head = Mlp {
        layers: vec![crate::nn::Dense {
            w: Tensor2D::from_vec(2, 1, vec![1.0, -eta]),
            b: vec![0.0],
            ln: None,
        }],
    };
    let params =
        ModelParams { embed, phi: Mlp::identity(), rho, update, head, init_msg: None };
    (cfg, params)
}
