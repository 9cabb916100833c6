//! Hyperedge and node potentials: values, (sub)gradients, proximal operators.
//!
//! Every hyperedge potential is permutation-invariant in the member values
//! `H_e`; consequently gradients and proxes are permutation-equivariant,
//! which the check suites verify. The families:
//!
//! - `ce`: clique expansion, `sum over ordered pairs (u,v) of (h_v - h_u)^2`
//!   (each unordered pair counted twice).
//! - `ce_norm`: clique expansion of degree-scaled values `h_v / sqrt(d_v)`.
//! - `div_mean`: `sum_v (h_v - ||H_e / |e|||_p)^2`, the squared divergence
//!   from a scalar p-norm summary (note: the summary is the p-norm of the
//!   scaled member vector, not the arithmetic mean).
//! - `tv`: total variation `(max - min)^p`, p in {1, 2}.
//! - `lec`: Lovász-extension-style cut `<y, sort_desc(H_e)>^p`, p in {1, 2},
//!   with `y` either fixed or derived from the member count
//!   ([`lec_y_vector`]).
//!
//! Proximal operators solve `argmin_z eta*g(z) + 0.5*||z - H_e||^2`. `ce` and
//! `ce_norm` have closed forms. `tv`/`lec` are solved exactly by reduction to
//! the descending cone (sort, then isotonic regression via pool-adjacent
//! violators; for p=2 a scalar fixed point bracketed by bisection). `div_mean`
//! and the cross-check path use the generic [`numeric_prox`]. For non-convex
//! parameter choices (an `lec` `y` that is not non-increasing) the prox
//! routines return a stationary point of the prox objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::BipartiteExpansion;
use crate::tensor::Tensor2D;

/// Weight vector for the `lec` potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LecY {
    /// Derive weights from the hyperedge cardinality via [`lec_y_vector`].
    Rule(YRule),
    /// Explicit weights; length must equal the hyperedge size at use.
    Fixed(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YRule {
    Cardinality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EdgePotential {
    Ce,
    CeNorm,
    DivMean { p: f64 },
    Tv { p: u32 },
    Lec { p: u32, y: LecY },
}

impl EdgePotential {
    pub fn lec_cardinality(p: u32) -> Self {
        EdgePotential::Lec { p, y: LecY::Rule(YRule::Cardinality) }
    }

    /// True when the potential needs per-member node degrees.
    pub fn needs_degrees(&self) -> bool {
        matches!(self, EdgePotential::CeNorm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "node_kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NodePotential {
    /// `f(h; x) = (h - x)^2`
    Quadratic,
    /// `f(h; x) = -x * h`
    Linear,
}

pub fn validate_edge_spec(spec: &EdgePotential) -> Result<()> {
    match spec {
        EdgePotential::Ce | EdgePotential::CeNorm => Ok(()),
        EdgePotential::DivMean { p } => {
            if p.is_finite() && *p >= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("div_mean requires finite p >= 1, got {p}")))
            }
        }
        EdgePotential::Tv { p } | EdgePotential::Lec { p, .. } => {
            if *p == 1 || *p == 2 {
                Ok(())
            } else {
                Err(Error::Config(format!("tv/lec require p in {{1, 2}}, got {p}")))
            }
        }
    }
}

/// Cardinality-rule weights: an even split gets `+-2/|e|` on each half; an odd
/// split gets `+-2/(|e|-1)` with a zero in the middle. Weights always sum to 0
/// and are non-increasing, so the induced potential is convex.
pub fn lec_y_vector(k: usize) -> Vec<f64> {
    if k <= 1 {
        return vec![0.0; k];
    }
    let mut y = vec![0.0; k];
    if k % 2 == 0 {
        let w = 2.0 / k as f64;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = if i < k / 2 { w } else { -w };
        }
    } else {
        let w = 2.0 / (k as f64 - 1.0);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = match i.cmp(&(k / 2)) {
                std::cmp::Ordering::Less => w,
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => -w,
            };
        }
    }
    y
}

fn resolve_y(y: &LecY, k: usize) -> Result<Vec<f64>> {
    match y {
        LecY::Rule(YRule::Cardinality) => Ok(lec_y_vector(k)),
        LecY::Fixed(v) => {
            if v.len() != k {
                Err(Error::Validation(format!(
                    "lec y has length {}, hyperedge has {k} members",
                    v.len()
                )))
            } else {
                Ok(v.clone())
            }
        }
    }
}

fn degrees_for(spec: &EdgePotential, k: usize, degrees_e: Option<&[f64]>) -> Result<Option<Vec<f64>>> {
    if !spec.needs_degrees() {
        return Ok(None);
    }
    let d = degrees_e.ok_or_else(|| {
        Error::Validation("ce_norm requires per-member node degrees".into())
    })?;
    if d.len() != k {
        return Err(Error::Validation(format!(
            "degrees length {} does not match hyperedge size {k}",
            d.len()
        )));
    }
    if d.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Validation("ce_norm degrees must be positive".into()));
    }
    Ok(Some(d.to_vec()))
}

/// Stable argsort by descending value; ties broken by ascending position.
fn argsort_desc(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    idx
}

fn ce_value(h: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..h.len() {
        for j in (i + 1)..h.len() {
            let d = h[i] - h[j];
            acc += d * d;
        }
    }
    2.0 * acc
}

fn div_mean_summary(h: &[f64], p: f64) -> f64 {
    let k = h.len() as f64;
    let mut acc = 0.0;
    for &v in h {
        acc += (v / k).abs().powf(p);
    }
    acc.powf(1.0 / p)
}

pub fn edge_potential_value(
    spec: &EdgePotential,
    h_e: &[f64],
    degrees_e: Option<&[f64]>,
) -> Result<f64> {
    validate_edge_spec(spec)?;
    if h_e.is_empty() {
        return Err(Error::Validation("hyperedge values must be non-empty".into()));
    }
    let k = h_e.len();
    match spec {
        EdgePotential::Ce => Ok(ce_value(h_e)),
        EdgePotential::CeNorm => {
            let d = degrees_for(spec, k, degrees_e)?.unwrap();
            let scaled: Vec<f64> = h_e.iter().zip(&d).map(|(h, dv)| h / dv.sqrt()).collect();
            Ok(ce_value(&scaled))
        }
        EdgePotential::DivMean { p } => {
            let s = div_mean_summary(h_e, *p);
            Ok(h_e.iter().map(|&v| (v - s) * (v - s)).sum())
        }
        EdgePotential::Tv { p } => {
            let max = h_e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = h_e.iter().cloned().fold(f64::INFINITY, f64::min);
            Ok((max - min).powi(*p as i32))
        }
        EdgePotential::Lec { p, y } => {
            let y = resolve_y(y, k)?;
            let idx = argsort_desc(h_e);
            let inner: f64 = idx.iter().zip(&y).map(|(&i, yi)| h_e[i] * yi).sum();
            Ok(inner.powi(*p as i32))
        }
    }
}

/// A gradient where the potential is smooth; a deterministic subgradient at
/// kinks (ties resolved by stable index order for `lec`, lowest-index
/// argmax/argmin for `tv`).
pub fn edge_potential_grad(
    spec: &EdgePotential,
    h_e: &[f64],
    degrees_e: Option<&[f64]>,
) -> Result<Vec<f64>> {
    validate_edge_spec(spec)?;
    if h_e.is_empty() {
        return Err(Error::Validation("hyperedge values must be non-empty".into()));
    }
    let k = h_e.len();
    match spec {
        EdgePotential::Ce => {
            let kf = k as f64;
            let s: f64 = h_e.iter().sum();
            Ok(h_e.iter().map(|&v| 4.0 * (kf * v - s)).collect())
        }
        EdgePotential::CeNorm => {
            let d = degrees_for(spec, k, degrees_e)?.unwrap();
            let kf = k as f64;
            let scaled: Vec<f64> = h_e.iter().zip(&d).map(|(h, dv)| h / dv.sqrt()).collect();
            let s: f64 = scaled.iter().sum();
            Ok(scaled
                .iter()
                .zip(&d)
                .map(|(&a, dv)| 4.0 * (kf * a - s) / dv.sqrt())
                .collect())
        }
        EdgePotential::DivMean { p } => {
            let s = div_mean_summary(h_e, *p);
            let t: f64 = h_e.iter().map(|&v| v - s).sum();
            let kf = k as f64;
            let mut g = Vec::with_capacity(k);
            for &v in h_e {
                let ds = if s == 0.0 {
                    0.0
                } else {
                    (v / kf).abs().powf(p - 1.0) * v.signum() / (kf * s.powf(p - 1.0))
                };
                g.push(2.0 * (v - s) - 2.0 * t * ds);
            }
            Ok(g)
        }
        EdgePotential::Tv { p } => {
            let mut imax = 0;
            let mut imin = 0;
            for (i, &v) in h_e.iter().enumerate() {
                if v > h_e[imax] {
                    imax = i;
                }
                if v < h_e[imin] {
                    imin = i;
                }
            }
            let gap = h_e[imax] - h_e[imin];
            let mut g = vec![0.0; k];
            if gap > 0.0 {
                let c = *p as f64 * gap.powi(*p as i32 - 1);
                g[imax] = c;
                g[imin] = -c;
            }
            Ok(g)
        }
        EdgePotential::Lec { p, y } => {
            let y = resolve_y(y, k)?;
            let idx = argsort_desc(h_e);
            let inner: f64 = idx.iter().zip(&y).map(|(&i, yi)| h_e[i] * yi).sum();
            let c = *p as f64 * inner.powi(*p as i32 - 1);
            let mut g = vec![0.0; k];
            for (j, &i) in idx.iter().enumerate() {
                g[i] = c * y[j];
            }
            Ok(g)
        }
    }
}

/// `argmin_z eta*g(z) + 0.5*||z - H_e||^2` (channel of one hyperedge).
///
/// Exact for `ce`/`ce_norm` (closed form) and `tv`/`lec` (descending-cone
/// reduction); `div_mean` goes through [`numeric_prox`].
pub fn edge_potential_prox(
    spec: &EdgePotential,
    h_e: &[f64],
    eta: f64,
    degrees_e: Option<&[f64]>,
) -> Result<Vec<f64>> {
    validate_edge_spec(spec)?;
    if h_e.is_empty() {
        return Err(Error::Validation("hyperedge values must be non-empty".into()));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::Config(format!("prox step eta must be finite and >= 0, got {eta}")));
    }
    if eta == 0.0 {
        return Ok(h_e.to_vec());
    }
    let k = h_e.len();
    // Pairwise potentials vanish on singletons, so the prox is the identity;
    // returning early also keeps it exact in floating point.
    if k == 1 && !matches!(spec, EdgePotential::DivMean { .. }) {
        return Ok(h_e.to_vec());
    }
    match spec {
        EdgePotential::Ce => {
            let kf = k as f64;
            let s: f64 = h_e.iter().sum();
            let denom = 1.0 + 4.0 * eta * kf;
            Ok(h_e.iter().map(|&v| (v + 4.0 * eta * s) / denom).collect())
        }
        EdgePotential::CeNorm => {
            let d = degrees_for(spec, k, degrees_e)?.unwrap();
            let kf = k as f64;
            // Solve (I + 4*eta*(K*diag(a^2) - a a^T)) z = v with a_v = d_v^{-1/2}
            // via Sherman-Morrison on the rank-one part.
            let a: Vec<f64> = d.iter().map(|dv| 1.0 / dv.sqrt()).collect();
            let dhat: Vec<f64> = a.iter().map(|av| 1.0 + 4.0 * eta * kf * av * av).collect();
            let u: Vec<f64> = h_e.iter().zip(&dhat).map(|(v, dh)| v / dh).collect();
            let t: f64 = a.iter().zip(&u).map(|(av, uv)| av * uv).sum();
            let denom: f64 = 1.0 - 4.0 * eta * a.iter().zip(&dhat).map(|(av, dh)| av * av / dh).sum::<f64>();
            let c = 4.0 * eta * t / denom;
            Ok(u.iter().zip(&a).zip(&dhat).map(|((uv, av), dh)| uv + c * av / dh).collect())
        }
        EdgePotential::DivMean { .. } => numeric_prox(spec, h_e, eta, degrees_e),
        EdgePotential::Tv { p } => {
            let mut y = vec![0.0; k];
            if k > 1 {
                y[0] = 1.0;
                y[k - 1] = -1.0;
            }
            Ok(sorted_cone_prox(h_e, &y, *p, eta))
        }
        EdgePotential::Lec { p, y } => {
            let y = resolve_y(y, k)?;
            Ok(sorted_cone_prox(h_e, &y, *p, eta))
        }
    }
}

/// Projection onto the non-increasing cone (pool-adjacent-violators, exact).
fn isotonic_non_increasing(t: &[f64]) -> Vec<f64> {
    // (sum, count) blocks; merge while a later block mean exceeds an earlier one.
    let mut sums: Vec<f64> = Vec::with_capacity(t.len());
    let mut counts: Vec<usize> = Vec::with_capacity(t.len());
    for &x in t {
        sums.push(x);
        counts.push(1);
        while sums.len() > 1 {
            let n = sums.len();
            if sums[n - 1] / counts[n - 1] as f64 > sums[n - 2] / counts[n - 2] as f64 {
                let s = sums.pop().unwrap();
                let c = counts.pop().unwrap();
                *sums.last_mut().unwrap() += s;
                *counts.last_mut().unwrap() += c;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(t.len());
    for (s, c) in sums.iter().zip(&counts) {
        let mean = s / *c as f64;
        out.extend(std::iter::repeat(mean).take(*c));
    }
    out
}

/// Exact prox of `eta * <y, sort_desc(z)>^p` for p in {1, 2}.
///
/// The prox of a symmetric function preserves the input ordering, so the
/// problem reduces to the descending cone after sorting: for p=1 the cone
/// minimizer is the isotonic projection of `w - eta*y`; for p=2 it is
/// `P_cone(w - 2*eta*s*y)` where the scalar `s = <y, u>` solves a monotone
/// fixed-point equation bracketed by `[0, <y,w>]` (bisection).
fn sorted_cone_prox(v: &[f64], y: &[f64], p: u32, eta: f64) -> Vec<f64> {
    let idx = argsort_desc(v);
    let w: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
    let u = match p {
        1 => {
            let shifted: Vec<f64> = w.iter().zip(y).map(|(wi, yi)| wi - eta * yi).collect();
            isotonic_non_increasing(&shifted)
        }
        2 => {
            let proj = |s: f64| -> Vec<f64> {
                let shifted: Vec<f64> =
                    w.iter().zip(y).map(|(wi, yi)| wi - 2.0 * eta * s * yi).collect();
                isotonic_non_increasing(&shifted)
            };
            let inner = |u: &[f64]| -> f64 { u.iter().zip(y).map(|(ui, yi)| ui * yi).sum() };
            let t0 = inner(&w);
            let (mut lo, mut hi) = if t0 >= 0.0 { (0.0, t0) } else { (t0, 0.0) };
            // g(s) = s - <y, P(w - 2 eta s y)> is strictly increasing with
            // g(0) = -t0 and g(t0) >= 0, so the root lives in [lo, hi].
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                let g = mid - inner(&proj(mid));
                if g < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            proj(0.5 * (lo + hi))
        }
        _ => unreachable!("validated p"),
    };
    let mut out = vec![0.0; v.len()];
    for (j, &i) in idx.iter().enumerate() {
        out[i] = u[j];
    }
    out
}

/// Generic numeric prox: subgradient descent with step `1/(k + 1/eta)`
/// (cap 10000, stop when successive iterates move < 1e-8 in max-norm),
/// followed by a backtracking line-search polish. Returns the best iterate;
/// errors only if neither phase settles.
pub fn numeric_prox(
    spec: &EdgePotential,
    h_e: &[f64],
    eta: f64,
    degrees_e: Option<&[f64]>,
) -> Result<Vec<f64>> {
    validate_edge_spec(spec)?;
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::Config(format!("prox step eta must be finite and >= 0, got {eta}")));
    }
    if eta == 0.0 {
        return Ok(h_e.to_vec());
    }
    let objective = |z: &[f64]| -> Result<f64> {
        let g = edge_potential_value(spec, z, degrees_e)?;
        let q: f64 = z.iter().zip(h_e).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(eta * g + 0.5 * q)
    };
    let subgrad = |z: &[f64]| -> Result<Vec<f64>> {
        let gg = edge_potential_grad(spec, z, degrees_e)?;
        Ok(gg.iter().zip(z).zip(h_e).map(|((g, a), b)| eta * g + (a - b)).collect())
    };

    let mut z = h_e.to_vec();
    let mut settled = false;
    for k in 0..10_000 {
        let g = subgrad(&z)?;
        let step = 1.0 / (k as f64 + 1.0 / eta);
        let mut change: f64 = 0.0;
        for (zi, gi) in z.iter_mut().zip(&g) {
            let d = step * gi;
            *zi -= d;
            change = change.max(d.abs());
        }
        if change < 1e-8 {
            settled = true;
            break;
        }
    }

    let mut best = z.clone();
    let mut best_f = objective(&best)?;
    let mut last_change = f64::INFINITY;
    for _ in 0..500 {
        let g = subgrad(&z)?;
        let gnorm2: f64 = g.iter().map(|x| x * x).sum();
        if gnorm2 == 0.0 {
            last_change = 0.0;
            break;
        }
        let f0 = objective(&z)?;
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-18 {
            let cand: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - t * gi).collect();
            if objective(&cand)? <= f0 - 1e-4 * t * gnorm2 {
                last_change = g.iter().map(|gi| (t * gi).abs()).fold(0.0, f64::max);
                z = cand;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            last_change = 0.0;
            break;
        }
        let f = objective(&z)?;
        if f < best_f {
            best_f = f;
            best = z.clone();
        }
        if last_change < 1e-12 {
            break;
        }
    }
    if !settled && !(last_change < 1e-8) {
        return Err(Error::SolverStall { residual: last_change });
    }
    Ok(best)
}

pub fn node_potential_value(spec: &NodePotential, h: f64, x: f64) -> f64 {
    match spec {
        NodePotential::Quadratic => (h - x) * (h - x),
        NodePotential::Linear => -x * h,
    }
}

pub fn node_potential_grad(spec: &NodePotential, h: f64, x: f64) -> f64 {
    match spec {
        NodePotential::Quadratic => 2.0 * (h - x),
        NodePotential::Linear => -x,
    }
}

/// `argmin_h scale*f(h; x) + 0.5*(h - z)^2`, closed form per family.
pub fn node_potential_prox(spec: &NodePotential, z: f64, x: f64, scale: f64) -> Result<f64> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::Config(format!(
            "node prox scale must be finite and >= 0, got {scale}"
        )));
    }
    Ok(match spec {
        NodePotential::Quadratic => (z + 2.0 * scale * x) / (1.0 + 2.0 * scale),
        NodePotential::Linear => z + scale * x,
    })
}

/// Full objective `sum_v sum_c f(h_vc; x_vc) + sum_e sum_c g(H_e[:, c])`,
/// potentials applied independently per channel.
pub fn objective_value(
    exp: &BipartiteExpansion,
    h: &Tensor2D,
    x: &Tensor2D,
    node: &NodePotential,
    edge: &EdgePotential,
) -> Result<f64> {
    if h.shape() != x.shape() || h.rows() != exp.num_nodes() {
        return Err(Error::Validation(format!(
            "objective shapes: H {:?}, X {:?}, num_nodes {}",
            h.shape(),
            x.shape(),
            exp.num_nodes()
        )));
    }
    validate_edge_spec(edge)?;
    let mut total = 0.0;
    for (hv, xv) in h.data().iter().zip(x.data()) {
        total += node_potential_value(node, *hv, *xv);
    }
    let degrees = exp.degrees_f64();
    let channels = h.cols();
    // One value per hyperedge, reduced in hyperedge order.
    let per_edge = crate::par::map_collect(exp.num_edges(), |e| -> Result<f64> {
        let members = exp.edge_members(e);
        let deg: Option<Vec<f64>> = edge.needs_degrees().then(|| {
            members.iter().map(|&v| degrees[v as usize]).collect()
        });
        let mut acc = 0.0;
        let mut buf = vec![0.0; members.len()];
        for c in 0..channels {
            for (slot, &v) in buf.iter_mut().zip(members) {
                *slot = h.get(v as usize, c);
            }
            acc += edge_potential_value(edge, &buf, deg.as_deref())?;
        }
        Ok(acc)
    });
    for v in per_edge {
        total += v?;
    }
    Ok(total)
}

/// Which potential operator to subject to an equivariance check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeOp {
    Grad,
    Prox { eta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivarianceReport {
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Verify `op(P H_e) == P op(H_e)` for one permutation, in the max norm.
/// Degrees (when the potential uses them) are permuted alongside.
pub fn check_equivariance(
    op: EdgeOp,
    spec: &EdgePotential,
    h_e: &[f64],
    degrees_e: Option<&[f64]>,
    perm: &[usize],
    tolerance: f64,
) -> Result<EquivarianceReport> {
    let k = h_e.len();
    if perm.len() != k {
        return Err(Error::Validation("permutation length mismatch".into()));
    }
    let apply = |z: &[f64], d: Option<&[f64]>| -> Result<Vec<f64>> {
        match op {
            EdgeOp::Grad => edge_potential_grad(spec, z, d),
            EdgeOp::Prox { eta } => edge_potential_prox(spec, z, eta, d),
        }
    };
    // perm[j] = source position: permuted[j] = h_e[perm[j]].
    let ph: Vec<f64> = perm.iter().map(|&j| h_e[j]).collect();
    let pd: Option<Vec<f64>> = degrees_e.map(|d| perm.iter().map(|&j| d[j]).collect());
    let out_perm = apply(&ph, pd.as_deref())?;
    let out = apply(h_e, degrees_e)?;
    let mut residual: f64 = 0.0;
    for (j, &src) in perm.iter().enumerate() {
        residual = residual.max((out_perm[j] - out[src]).abs());
    }
    Ok(EquivarianceReport { residual, tolerance, passed: residual <= tolerance })
}
