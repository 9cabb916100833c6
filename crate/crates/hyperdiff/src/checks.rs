//! Self-contained property-check suites: each verifies one contract of the
//! library (worked examples, gradient checks, equivariance, prox properties,
//! solver consistency, generator statistics) and reports its worst residual.
//! A deliberate fault can be injected to demonstrate that the checks have
//! teeth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{ce_homophily, Hypergraph};
use crate::model::{
    backward, ce_edge_gradients_via_messages, eval_forward, forward,
    hand_weighted_diffusion_params, ModelConfig, ModelParams, Variant,
};
use crate::nn::{mlp_backward, mlp_eval, mlp_forward, DropoutPlan, LnPolicy, Mlp};
use crate::potentials::{
    check_equivariance, edge_potential_grad, edge_potential_prox, edge_potential_value,
    numeric_prox, EdgeOp, EdgePotential, LecY, NodePotential,
};
use crate::powersum::{powersum_decode, powersum_encode};
use crate::rng::{rng_for, standard_normal_vec, SeedRng};
use crate::solvers::{gd_step, run_diffusion, SolverConfig, SolverKind};
use crate::synth::{gen_csbm, gen_uniform_hypergraph, CsbmConfig};
use crate::tensor::Tensor2D;
use rand::seq::SliceRandom;
use rand::Rng;

/// Deliberate defects for demonstrating that the suites catch real bugs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Flip the sign of every total-variation gradient.
    TvGradSign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub max_residual: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl SuiteReport {
    fn new(name: &str, cases: usize, max_residual: f64, threshold: f64, detail: String) -> Self {
        SuiteReport {
            name: name.to_string(),
            cases,
            max_residual,
            threshold,
            passed: max_residual <= threshold,
            detail,
        }
    }
}

pub const SUITE_NAMES: &[&str] = &[
    "worked_example",
    "potential_gradcheck",
    "equivariance",
    "nonexpansive",
    "prox_oracle",
    "powersum",
    "analytic_witness",
    "nn_gradcheck",
    "solver_consistency",
    "csbm_stats",
];

/// Run the named suites (all of them for an empty list). Unknown names are
/// configuration errors.
pub fn run_suites(names: &[String], fault: Option<Fault>, seed: u64) -> Result<Vec<SuiteReport>> {
    let selected: Vec<&str> = if names.is_empty() {
        SUITE_NAMES.to_vec()
    } else {
        names
            .iter()
            .map(|n| {
                SUITE_NAMES
                    .iter()
                    .find(|&&s| s == n)
                    .copied()
                    .ok_or_else(|| Error::Config(format!("unknown check suite '{n}'")))
            })
            .collect::<Result<_>>()?
    };
    selected
        .into_iter()
        .map(|name| match name {
            "worked_example" => Ok(suite_worked_example()),
            "potential_gradcheck" => suite_potential_gradcheck(fault, seed),
            "equivariance" => suite_equivariance(seed),
            "nonexpansive" => suite_nonexpansive(seed),
            "prox_oracle" => suite_prox_oracle(seed),
            "powersum" => suite_powersum(seed),
            "analytic_witness" => suite_analytic_witness(seed),
            "nn_gradcheck" => suite_nn_gradcheck(seed),
            "solver_consistency" => suite_solver_consistency(seed),
            "csbm_stats" => suite_csbm_stats(seed),
            _ => unreachable!("validated above"),
        })
        .collect()
}

fn apply_fault(fault: Option<Fault>, spec: &EdgePotential, grad: &mut [f64]) {
    if fault == Some(Fault::TvGradSign) && matches!(spec, EdgePotential::Tv { .. }) {
        for g in grad {
            *g = -*g;
        }
    }
}

fn grad_families() -> Vec<EdgePotential> {
    vec![
        EdgePotential::Ce,
        EdgePotential::CeNorm,
        EdgePotential::DivMean { p: 1.0 },
        EdgePotential::DivMean { p: 2.0 },
        EdgePotential::Tv { p: 1 },
        EdgePotential::Tv { p: 2 },
        EdgePotential::lec_cardinality(1),
        EdgePotential::lec_cardinality(2),
    ]
}

/// Convex families with exact proximal maps.
fn prox_families() -> Vec<EdgePotential> {
    vec![
        EdgePotential::Ce,
        EdgePotential::CeNorm,
        EdgePotential::Tv { p: 1 },
        EdgePotential::Tv { p: 2 },
        EdgePotential::lec_cardinality(1),
        EdgePotential::lec_cardinality(2),
    ]
}

fn random_degrees(rng: &mut SeedRng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(1..6) as f64).collect()
}

fn degrees_if_needed(spec: &EdgePotential, rng: &mut SeedRng, k: usize) -> Option<Vec<f64>> {
    spec.needs_degrees().then(|| random_degrees(rng, k))
}

/// Fixed worked example: the LEC potential with p=2, y=[1,-1,0] at
/// H_e=[0.7,0.5,0.3] has value 0.04 and gradient [0.4,-0.4,0].
fn suite_worked_example() -> SuiteReport {
    let spec = EdgePotential::Lec { p: 2, y: LecY::Fixed(vec![1.0, -1.0, 0.0]) };
    let h = [0.7, 0.5, 0.3];
    let mut residual = f64::INFINITY;
    let mut detail = String::new();
    match (edge_potential_value(&spec, &h, None), edge_potential_grad(&spec, &h, None)) {
        (Ok(value), Ok(grad)) => {
            residual = (value - 0.04).abs();
            for (g, want) in grad.iter().zip([0.4, -0.4, 0.0]) {
                residual = residual.max((g - want).abs());
            }
            detail = format!("value {value}, gradient {grad:?}");
        }
        (Err(e), _) | (_, Err(e)) => detail.push_str(&format!("evaluation failed: {e}")),
    }
    SuiteReport::new("worked_example", 1, residual, 1e-12, detail)
}

/// Analytic gradients match central finite differences of the potential
/// value at random (generic, hence smooth) points.
fn suite_potential_gradcheck(fault: Option<Fault>, seed: u64) -> Result<SuiteReport> {
    let mut rng = rng_for(seed, "potential_gradcheck");
    let mut residual: f64 = 0.0;
    let mut worst = String::new();
    let mut cases = 0;
    let fd_h = 1e-6;
    for spec in grad_families() {
        for trial in 0..6 {
            let k = 2 + (trial % 7);
            let mut h: Vec<f64> = standard_normal_vec(&mut rng, k).iter().map(|v| 2.0 * v).collect();
            let degrees = degrees_if_needed(&spec, &mut rng, k);
            let mut grad = edge_potential_grad(&spec, &h, degrees.as_deref())?;
            apply_fault(fault, &spec, &mut grad);
            for i in 0..k {
                let orig = h[i];
                h[i] = orig + fd_h;
                let fp = edge_potential_value(&spec, &h, degrees.as_deref())?;
                h[i] = orig - fd_h;
                let fm = edge_potential_value(&spec, &h, degrees.as_deref())?;
                h[i] = orig;
                let fd = (fp - fm) / (2.0 * fd_h);
                let rel = (grad[i] - fd).abs() / fd.abs().max(1.0);
                if rel > residual {
                    residual = rel;
                    worst = format!("{spec:?} size {k} coord {i}: analytic {} vs fd {fd}", grad[i]);
                }
            }
            cases += 1;
        }
    }
    Ok(SuiteReport::new("potential_gradcheck", cases, residual, 1e-5, worst))
}

/// Gradients and proximal maps commute with member permutations.
fn suite_equivariance(seed: u64) -> Result<SuiteReport> {
    let mut rng = rng_for(seed, "equivariance");
    let mut residual: f64 = 0.0;
    let mut cases = 0;
    let grads = grad_families();
    let proxes = prox_families();
    for trial in 0..120 {
        let k = rng.random_range(2..=10);
        let h = standard_normal_vec(&mut rng, k);
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        let eta = 0.05 + rng.random::<f64>();
        let gspec = &grads[trial % grads.len()];
        let gdeg = degrees_if_needed(gspec, &mut rng, k);
        let rep = check_equivariance(EdgeOp::Grad, gspec, &h, gdeg.as_deref(), &perm, 1e-9)?;
        residual = residual.max(rep.residual);
        let pspec = &proxes[trial % proxes.len()];
        let pdeg = degrees_if_needed(pspec, &mut rng, k);
        let rep =
            check_equivariance(EdgeOp::Prox { eta }, pspec, &h, pdeg.as_deref(), &perm, 1e-9)?;
        residual = residual.max(rep.residual);
        cases += 2;
    }
    Ok(SuiteReport::new("equivariance", cases, residual, 1e-9, String::new()))
}

/// Proximal maps of convex potentials are non-expansive:
/// `||prox(a) - prox(b)|| <= ||a - b||`.
fn suite_nonexpansive(seed: u64) -> Result<SuiteReport> {
    let mut rng = rng_for(seed, "nonexpansive");
    let mut residual: f64 = 0.0;
    let mut cases = 0;
    let etas = [0.05, 0.5, 2.0];
    for spec in prox_families() {
        for trial in 0..100 {
            let k = 2 + (trial % 7);
            let a = standard_normal_vec(&mut rng, k);
            let b = standard_normal_vec(&mut rng, k);
            let degrees = degrees_if_needed(&spec, &mut rng, k);
            let eta = etas[trial % etas.len()];
            let pa = edge_potential_prox(&spec, &a, eta, degrees.as_deref())?;
            let pb = edge_potential_prox(&spec, &b, eta, degrees.as_deref())?;
            let d_in: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let d_out: f64 =
                pa.iter().zip(&pb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            residual = residual.max(d_out - d_in);
            cases += 1;
        }
    }
    Ok(SuiteReport::new("nonexpansive", cases, residual.max(0.0), 1e-9, String::new()))
}

/// Brute-force minimization of the prox objective by nested grid refinement.
fn brute_force_prox(
    spec: &EdgePotential,
    v: &[f64],
    eta: f64,
    degrees: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let k = v.len();
    let objective = |z: &[f64]| -> Result<f64> {
        let g = edge_potential_value(spec, z, degrees)?;
        let quad: f64 = z.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(0.5 * quad + eta * g)
    };
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut center = vec![0.5 * (lo + hi); k];
    let mut halfwidth = 0.5 * (hi - lo) + 0.1;
    let steps = 8usize; // 9 points per coordinate
    let mut best = center.clone();
    for _round in 0..9 {
        let mut best_val = f64::INFINITY;
        let mut z = vec![0.0; k];
        let total = (steps + 1).pow(k as u32);
        for code in 0..total {
            let mut c = code;
            for (i, zi) in z.iter_mut().enumerate() {
                let idx = c % (steps + 1);
                c /= steps + 1;
                *zi = center[i] - halfwidth + 2.0 * halfwidth * idx as f64 / steps as f64;
            }
            let val = objective(&z)?;
            if val < best_val {
                best_val = val;
                best.copy_from_slice(&z);
            }
        }
        center.copy_from_slice(&best);
        halfwidth *= 0.3;
    }
    Ok(best)
}

/// Exact proximal maps agree with brute force on small edges; the
/// closed-form pairwise prox agrees with the iterative numeric one tightly.
fn suite_prox_oracle(seed: u64) -> Result<SuiteReport> {
    let mut rng = rng_for(seed, "prox_oracle");
    let mut residual: f64 = 0.0;
    let mut worst = String::new();
    let mut cases = 0;
    let brute_specs = [
        EdgePotential::Tv { p: 1 },
        EdgePotential::Tv { p: 2 },
        EdgePotential::lec_cardinality(1),
        EdgePotential::lec_cardinality(2),
    ];
    for spec in &brute_specs {
        for k in [2usize, 3] {
            for trial in 0..4 {
                let v = standard_normal_vec(&mut rng, k);
                let eta = [0.1, 0.5][trial % 2];
                let exact = edge_potential_prox(spec, &v, eta, None)?;
                let brute = brute_force_prox(spec, &v, eta, None)?;
                let diff = exact
                    .iter()
                    .zip(&brute)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if diff > residual {
                    residual = diff;
                    worst = format!("{spec:?} k={k} eta={eta}: exact {exact:?} brute {brute:?}");
                }
                cases += 1;
            }
        }
    }
    // Closed-form pairwise prox vs the iterative numeric prox (tight).
    let mut ce_residual: f64 = 0.0;
    for spec in [EdgePotential::Ce, EdgePotential::CeNorm] {
        for k in [2usize, 3] {
            for _ in 0..6 {
                let v = standard_normal_vec(&mut rng, k);
                let eta = 0.05 + 0.5 * rng.random::<f64>();
                let degrees = degrees_if_needed(&spec, &mut rng, k);
                let closed = edge_potential_prox(&spec, &v, eta, degrees.as_deref())?;
                let numeric = numeric_prox(&spec, &v, eta, degrees.as_deref())?;
                let diff = closed
                    .iter()
                    .zip(&numeric)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                ce_residual = ce_residual.max(diff);
                cases += 1;
            }
        }
    }
    let passed_ce = ce_residual <= 1e-6;
    let mut report = SuiteReport::new(
        "prox_oracle",
        cases,
        residual,
        1e-3,
        format!("closed-vs-numeric pairwise residual {ce_residual:.2e}; worst brute case: {worst}"),
    );
    report.passed = report.passed && passed_ce;
    if !passed_ce {
        report.max_residual = report.max_residual.max(ce_residual);
    }
    Ok(report)
}

/// Sorted multisets survive the power-sum encode/decode round trip.
fn suite_powersum(seed: u64) -> Result<SuiteReport> {
    let mut rng = rng_for(seed, "powersum");
    let mut residual: f64 = 0.0;
    let mut cases = 0;
    for k in 1..=5usize {
        for _ in 0..100 {
            let mut values: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let moments = powersum_encode(&values, k);
            let decoded = powersum_decode(&moments, k)?;
            for (a, b) in values.iter().zip(&decoded) {
                residual = residual.max((a - b).abs());
            }
            cases += 1;
        }
    }
    Ok(SuiteReport::new("powersum", cases, residual, 1e-6, String::new()))
}

/// The hand-written message-passing operators reproduce the pairwise
/// potential gradient and the solver's gradient step.
fn suite_analytic_witness(seed: u64) -> Result<SuiteReport> {
    let mut rng = rng_for(seed, "analytic_witness");
    let mut residual: f64 = 0.0;
    let mut cases = 0;
    for trial in 0..100 {
        let k = 2 + (trial % 9);
        let hg = Hypergraph::build(k, vec![(0..k).collect()])?;
        let exp = hg.star_expansion();
        let h = Tensor2D::from_vec(k, 1, standard_normal_vec(&mut rng, k));
        let via = ce_edge_gradients_via_messages(&exp, &h)?;
        let vals: Vec<f64> = (0..k).map(|v| h.get(v, 0)).collect();
        let direct = edge_potential_grad(&EdgePotential::Ce, &vals, None)?;
        for (p, want) in direct.iter().enumerate() {
            residual = residual.max((via.get(p, 0) - want).abs());
        }
        cases += 1;
    }
    // Hand-weighted layer: must equal the solver step bit-for-bit on the
    // all-integer two-node instance.
    let hg = Hypergraph::build(2, vec![vec![0, 1]])?;
    let exp = hg.star_expansion();
    let h0 = Tensor2D::from_col(vec![1.0, 0.0]);
    let x = Tensor2D::from_col(vec![0.0, 0.0]);
    let (cfg, params) = hand_weighted_diffusion_params(2, 0.1);
    let out = eval_forward(&cfg, &params, &exp, &h0, &x)?;
    let gd = gd_step(&exp, &h0, &x, &NodePotential::Quadratic, &EdgePotential::Ce, 0.1)?;
    let exact = out.data() == gd.data();
    if !exact {
        residual = f64::INFINITY;
    }
    cases += 1;
    let detail = format!(
        "hand-weighted layer output {:?}, solver step {:?}, bitwise equal: {exact}",
        out.data(),
        gd.data()
    );
    Ok(SuiteReport::new("analytic_witness", cases, residual, 1e-9, detail))
}

fn mlp_fd_residual(dims: &[usize], policy: LnPolicy, rng: &mut SeedRng) -> Result<f64> {
    let mut mlp = Mlp::new(dims, policy, rng);
    let rows = 5;
    let input = Tensor2D::from_vec(rows, dims[0], standard_normal_vec(rng, rows * dims[0]));
    let out_dim = *dims.last().unwrap();
    let probe = Tensor2D::from_vec(rows, out_dim, standard_normal_vec(rng, rows * out_dim));
    let plan = DropoutPlan { rate: 0.0, train: false };
    let mut scratch = rng_for(0, "unused");
    let (_, cache) = mlp_forward(&mlp, &input, &plan, &mut scratch)?;
    let (_, grads) = mlp_backward(&mlp, &cache, &probe)?;
    let flat: Vec<f64> = grads.param_slices().iter().flat_map(|s| s.iter().copied()).collect();
    let loss = |m: &Mlp| -> Result<f64> {
        let out = mlp_eval(m, &input)?;
        Ok(out.data().iter().zip(probe.data()).map(|(o, r)| o * r).sum())
    };
    let h = 1e-5;
    let mut residual: f64 = 0.0;
    let mut idx = 0;
    for s in 0..mlp.param_slices().len() {
        for j in 0..mlp.param_slices()[s].len() {
            let orig = mlp.param_slices()[s][j];
            mlp.param_slices_mut()[s][j] = orig + h;
            let fp = loss(&mlp)?;
            mlp.param_slices_mut()[s][j] = orig - h;
            let fm = loss(&mlp)?;
            mlp.param_slices_mut()[s][j] = orig;
            let fd = (fp - fm) / (2.0 * h);
            residual = residual.max((flat[idx] - fd).abs() / fd.abs().max(1e-5));
            idx += 1;
        }
    }
    Ok(residual)
}

fn model_fd_residual(cfg: &ModelConfig, seed: u64) -> Result<f64> {
    let hg =
        Hypergraph::build(6, vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5], vec![0, 5, 3]])?;
    let exp = hg.star_expansion();
    let mut rng = rng_for(seed, "model_fd");
    let x = Tensor2D::from_vec(6, cfg.in_dim, standard_normal_vec(&mut rng, 6 * cfg.in_dim));
    let probe = Tensor2D::from_vec(6, cfg.out_dim, standard_normal_vec(&mut rng, 6 * cfg.out_dim));
    let mut params = ModelParams::init(cfg, &mut rng)?;
    let (_, cache) = forward(cfg, &params, &exp, &x, &x, false, &mut rng_for(0, "unused"))?;
    let grads = backward(cfg, &params, &exp, &cache, &probe)?;
    let flat: Vec<f64> = grads.param_slices().iter().flat_map(|s| s.iter().copied()).collect();
    let loss = |p: &ModelParams| -> Result<f64> {
        let out = eval_forward(cfg, p, &exp, &x, &x)?;
        Ok(out.data().iter().zip(probe.data()).map(|(o, r)| o * r).sum())
    };
    let h = 1e-5;
    let mut residual: f64 = 0.0;
    let mut idx = 0;
    for s in 0..params.param_slices().len() {
        for j in 0..params.param_slices()[s].len() {
            let orig = params.param_slices()[s][j];
            params.param_slices_mut()[s][j] = orig + h;
            let fp = loss(&params)?;
            params.param_slices_mut()[s][j] = orig - h;
            let fm = loss(&params)?;
            params.param_slices_mut()[s][j] = orig;
            let fd = (fp - fm) / (2.0 * h);
            residual = residual.max((flat[idx] - fd).abs() / fd.abs().max(1e-5));
            idx += 1;
        }
    }
    Ok(residual)
}

/// Analytic gradients of MLPs and all model variants match central finite
/// differences across >= 20 small configurations.
fn suite_nn_gradcheck(seed: u64) -> Result<SuiteReport> {
    let mut rng = rng_for(seed, "nn_gradcheck");
    let mut residual: f64 = 0.0;
    let mut cases = 0;
    let dim_sets: [&[usize]; 4] = [&[3, 4, 2], &[5, 7, 3], &[4, 4], &[2, 6, 5, 3]];
    for dims in dim_sets {
        for policy in [LnPolicy::Off, LnPolicy::Hidden, LnPolicy::All] {
            residual = residual.max(mlp_fd_residual(dims, policy, &mut rng)?);
            cases += 1;
        }
    }
    let base = ModelConfig {
        variant: Variant::EdHnn,
        layers: 2,
        hidden: 4,
        phi_depth: 1,
        rho_depth: 1,
        update_depth: 1,
        head_depth: 1,
        head_hidden: 4,
        in_dim: 3,
        attr_dim: 3,
        out_dim: 2,
        layer_norm: false,
        input_dropout: 0.0,
        dropout: 0.0,
    };
    let model_cfgs = vec![
        base.clone(),
        ModelConfig { layer_norm: true, ..base.clone() },
        ModelConfig { variant: Variant::EdHnnIi, ..base.clone() },
        ModelConfig { variant: Variant::EdHnnIi, layer_norm: true, ..base.clone() },
        ModelConfig { variant: Variant::InvariantBaseline, ..base.clone() },
        ModelConfig { variant: Variant::InvariantBaseline, layer_norm: true, ..base.clone() },
        ModelConfig { phi_depth: 0, ..base.clone() },
        ModelConfig { variant: Variant::EdHnnIi, layers: 3, ..base },
    ];
    for (i, cfg) in model_cfgs.iter().enumerate() {
        residual = residual.max(model_fd_residual(cfg, seed.wrapping_add(i as u64))?);
        cases += 1;
    }
    Ok(SuiteReport::new("nn_gradcheck", cases, residual, 1e-4, String::new()))
}

/// Small-step gradient descent never increases the objective, and gradient
/// descent and the splitting solver converge to the same objective value.
fn suite_solver_consistency(seed: u64) -> Result<SuiteReport> {
    let mut rng = rng_for(seed, "solver_consistency");
    let hg = gen_uniform_hypergraph(50, 30, 4, seed.wrapping_add(17))?;
    let x = Tensor2D::from_vec(50, 1, standard_normal_vec(&mut rng, 50));
    let node = NodePotential::Quadratic;
    let edge = EdgePotential::Ce;
    let mono = run_diffusion(
        &hg,
        &x,
        &node,
        &edge,
        SolverKind::Gd,
        &SolverConfig { eta: 1e-3, max_iters: 50, stop_tol: 0.0, record_trajectory: true },
    )?;
    let mut max_increase: f64 = 0.0;
    for w in mono.objective.windows(2) {
        max_increase = max_increase.max(w[1] - w[0]);
    }
    let converged = SolverConfig { eta: 5e-3, max_iters: 200_000, stop_tol: 1e-13, record_trajectory: false };
    let gd = run_diffusion(&hg, &x, &node, &edge, SolverKind::Gd, &converged)?;
    let admm = run_diffusion(
        &hg,
        &x,
        &node,
        &edge,
        SolverKind::Admm,
        &SolverConfig { eta: 0.5, max_iters: 200_000, stop_tol: 1e-13, record_trajectory: false },
    )?;
    let exp = hg.star_expansion();
    let obj_gd = crate::potentials::objective_value(&exp, &gd.state.h, &x, &node, &edge)?;
    let obj_admm = crate::potentials::objective_value(&exp, &admm.state.h, &x, &node, &edge)?;
    let agree = (obj_gd - obj_admm).abs();
    let mut report = SuiteReport::new(
        "solver_consistency",
        52,
        max_increase.max(agree),
        1e-4,
        format!(
            "max objective increase {max_increase:.2e}; gd objective {obj_gd:.10}, splitting objective {obj_admm:.10}"
        ),
    );
    // Monotonicity must hold exactly, not merely within the threshold.
    report.passed = max_increase <= 0.0 && agree <= 1e-4;
    Ok(report)
}

/// Full-size block-model homophily statistics: five-seed means per alpha
/// match the reference values and decrease strictly in alpha.
fn suite_csbm_stats(seed: u64) -> Result<SuiteReport> {
    let alphas = [1usize, 2, 3, 4, 6, 7];
    let targets = [0.875, 0.765, 0.672, 0.596, 0.495, 0.474];
    let mut means = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let mut total = 0.0;
        for s in 0..5u64 {
            let cfg = CsbmConfig { alpha, seed: seed.wrapping_add(1000 * alpha as u64 + s), ..CsbmConfig::default() };
            let ds = gen_csbm(&cfg)?;
            total += ce_homophily(&ds.hypergraph, ds.labels.as_ref().unwrap())?;
        }
        means.push(total / 5.0);
    }
    let mut residual: f64 = 0.0;
    for (m, t) in means.iter().zip(targets) {
        residual = residual.max((m - t).abs());
    }
    let monotone = means.windows(2).all(|w| w[0] > w[1]);
    let mut report = SuiteReport::new(
        "csbm_stats",
        alphas.len() * 5,
        residual,
        0.03,
        format!("five-seed means {means:?} vs targets {targets:?}; strictly decreasing: {monotone}"),
    );
    report.passed = report.passed && monotone;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_without_fault() {
        let reports = run_suites(&[], None, 0).unwrap();
        assert_eq!(reports.len(), SUITE_NAMES.len());
        for r in &reports {
            eprintln!(
                "{}: residual {:.3e} (threshold {:.0e}) over {} cases",
                r.name, r.max_residual, r.threshold, r.cases
            );
            assert!(
                r.passed,
                "suite {} failed: residual {} > {} ({})",
                r.name, r.max_residual, r.threshold, r.detail
            );
        }
    }

    #[test]
    fn injected_fault_is_caught_by_the_gradcheck_suite() {
        let reports = run_suites(
            &["potential_gradcheck".to_string()],
            Some(Fault::TvGradSign),
            0,
        )
        .unwrap();
        assert!(!reports[0].passed, "sign-flipped gradient must fail: {:?}", reports[0]);
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        let err = run_suites(&["nonsense".to_string()], None, 0).unwrap_err();
        assert!(err.is_config(), "{err:?}");
    }

    #[test]
    fn suite_selection_respects_order_and_names() {
        let names = vec!["powersum".to_string(), "worked_example".to_string()];
        let reports = run_suites(&names, None, 3).unwrap();
        assert_eq!(reports[0].name, "powersum");
        assert_eq!(reports[1].name, "worked_example");
    }
}
