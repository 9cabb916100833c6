//! Hypergraph diffusion at desk scale.
//!
//! The crate is organized around one objective: minimize
//! `sum_v f(h_v; x_v) + sum_e g_e(H_e)` over node embeddings `H`, where each
//! hyperedge potential `g_e` is permutation-invariant in the member values
//! `H_e`. Everything else serves that objective:
//!
//! - [`hypergraph`]: canonical hypergraph storage, the node/hyperedge
//!   bipartite (star) expansion that all traversals run on, and a
//!   clique-expansion homophily score.
//! - [`potentials`]: hyperedge potential values, (sub)gradients, and proximal
//!   operators, plus the node attachment terms.
//! - [`powersum`]: power-sum multiset encoding and its decoder, the scalar
//!   channel construction behind equivariant set maps.
//! - [`solvers`]: gradient-descent and prox-splitting (ADMM) diffusion
//!   iterations with objective traces.
//! - [`tensor`] / [`nn`]: a minimal dense f64 tensor with hand-rolled MLP
//!   forward/backward, layer norm, dropout, Adam, and losses.
//! - [`model`]: equivariant message-passing networks whose layers mirror the
//!   diffusion step, including an analytic witness that one layer can
//!   reproduce the clique-expansion gradient step exactly.
//! - [`train`]: full-batch training loops for node classification and
//!   diffusion-operator regression.
//! - [`synth`]: synthetic data (contextual stochastic block model over
//!   hyperedges, Gaussian features, uniform hypergraphs, one-step diffusion
//!   pairs, split masks).
//! - [`checks`]: self-contained property suites (equivariance,
//!   non-expansiveness, prox cross-checks, gradient checks, ...) used by the
//!   CLI `check` command and the acceptance tests.
//!
//! All floating point work is `f64`. Every reduction runs in a fixed
//! deterministic order, so results are bit-identical across runs and across
//! the sequential/parallel execution paths (see [`par`]).

pub mod checks;
pub mod error;
pub mod hypergraph;
pub mod io;
pub mod model;
pub mod nn;
pub mod par;
pub mod potentials;
pub mod powersum;
pub mod rng;
pub mod solvers;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
