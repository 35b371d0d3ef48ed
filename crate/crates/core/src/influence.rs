//! Influence of individual training nodes on utility, bias and risk
//! functionals, via damped conjugate-gradient inverse-Hessian solves.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::attack::PairSample;
use crate::error::{Error, Result};
use crate::fairness::bias_grad_outputs;
use crate::gcn::{backward_logits, backward_outputs, ce_logit_grad, GcnInput, GcnModel};
use crate::graph::SimilarityMatrix;

/// All model parameters as one vector: `w1` then `w2`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatParams(pub Vec<f64>);

impl FlatParams {
    pub fn from_model(model: &GcnModel) -> Self {
        FlatParams(model.to_flat())
    }

    pub fn to_model(&self, like: &GcnModel) -> Result<GcnModel> {
        like.with_flat(&self.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &FlatParams) -> f64 {
        dot(&self.0, &other.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn position_in_train(input: &GcnInput<'_>, v: usize) -> Result<usize> {
    input
        .graph
        .train_nodes()
        .iter()
        .position(|&u| u == v)
        .ok_or(Error::NotTrainNode(v))
}

/// Gradient of node `v`'s cross-entropy term.
pub fn per_node_loss_grad(model: &GcnModel, input: &GcnInput<'_>, v: usize) -> Result<FlatParams> {
    position_in_train(input, v)?;
    let cache = input.forward(model)?;
    let dz = ce_logit_grad(cache.predictions(), input.graph.labels(), &[v], None)?;
    Ok(FlatParams(
        backward_logits(model, input, &cache, &dz.view())?.to_flat(),
    ))
}

/// Gradient of the unweighted total train cross-entropy.
pub fn total_loss_grad(model: &GcnModel, input: &GcnInput<'_>) -> Result<FlatParams> {
    let cache = input.forward(model)?;
    let g = input.graph;
    let dz = ce_logit_grad(cache.predictions(), g.labels(), g.train_nodes(), None)?;
    Ok(FlatParams(
        backward_logits(model, input, &cache, &dz.view())?.to_flat(),
    ))
}

/// Default difference step `1e-4 (1 + ‖θ‖∞)`.
pub fn default_hvp_step(theta: &[f64]) -> f64 {
    1e-4 * (1.0 + theta.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

/// Central-difference Hessian-vector product of a gradient map, taken along
/// the unit direction `v/‖v‖` and rescaled by `‖v‖ · scale`.
pub fn central_difference_hvp(
    grad: impl Fn(&[f64]) -> Result<Vec<f64>>,
    theta: &[f64],
    v: &[f64],
    step: f64,
    scale: f64,
) -> Result<Vec<f64>> {
    let nv = norm(v);
    if nv == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let shifted = |sign: f64| -> Vec<f64> {
        theta
            .iter()
            .zip(v)
            .map(|(t, d)| t + sign * step * d / nv)
            .collect()
    };
    let gp = grad(&shifted(1.0))?;
    let gm = grad(&shifted(-1.0))?;
    let factor = scale * nv / (2.0 * step);
    let out: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) * factor).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            stage: "hessian-vector product",
            epoch: 0,
        });
    }
    Ok(out)
}

/// `H v` with `H = (1/|V_l|) Σ_v ∇²L_v`, by central differences of the
/// analytic total-loss gradient.
pub fn hvp(model: &GcnModel, input: &GcnInput<'_>, v: &[f64], step: Option<f64>) -> Result<FlatParams> {
    if v.len() != model.num_params() {
        return Err(Error::Shape(format!(
            "direction has {} entries, model has {} parameters",
            v.len(),
            model.num_params()
        )));
    }
    let theta = model.to_flat();
    let step = step.unwrap_or_else(|| default_hvp_step(&theta));
    let nl = input.graph.train_nodes().len();
    if nl == 0 {
        return Err(Error::InvalidArgument("no train nodes".into()));
    }
    let grad = |t: &[f64]| -> Result<Vec<f64>> {
        Ok(total_loss_grad(&model.with_flat(t)?, input)?.0)
    };
    Ok(FlatParams(central_difference_hvp(
        grad,
        &theta,
        v,
        step,
        1.0 / nl as f64,
    )?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgDiagnostics {
    pub iterations: usize,
    /// Final `‖(H + λI)x − b‖ / ‖b‖`.
    pub residual: f64,
    pub damping: f64,
    pub converged: bool,
    /// Stopped because `pᵀ(H + λI)p ≤ 0`.
    pub negative_curvature: bool,
}

/// Conjugate gradient on `(A + damping·I) x = b` for a symmetric operator `A`.
/// Non-convergence is reported in the diagnostics, not as an error.
pub fn conjugate_gradient(
    op: impl Fn(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgDiagnostics)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bn = norm(b);
    let mut diag = CgDiagnostics {
        iterations: 0,
        residual: 0.0,
        damping,
        converged: true,
        negative_curvature: false,
    };
    if bn == 0.0 {
        return Ok((x, diag));
    }
    let apply = |p: &[f64]| -> Result<Vec<f64>> {
        let mut ap = op(p)?;
        for (a, q) in ap.iter_mut().zip(p) {
            *a += damping * q;
        }
        Ok(ap)
    };
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    diag.converged = false;
    for it in 0..max_iter {
        if rr.sqrt() / bn <= tol {
            diag.converged = true;
            break;
        }
        let ap = apply(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            diag.negative_curvature = true;
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        diag.iterations = it + 1;
    }
    // Report the true residual rather than the recursively updated one.
    let ax = apply(&x)?;
    let res: f64 = ax
        .iter()
        .zip(b)
        .map(|(a, bb)| (a - bb) * (a - bb))
        .sum::<f64>()
        .sqrt();
    diag.residual = res / bn;
    diag.converged = diag.converged || (!diag.negative_curvature && diag.residual <= tol);
    Ok((x, diag))
}

/// Solves `(H + damping·I) x = b` for the model's loss Hessian.
pub fn inverse_hvp(
    model: &GcnModel,
    input: &GcnInput<'_>,
    b: &[f64],
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(FlatParams, CgDiagnostics)> {
    if !(damping > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "damping must be > 0, got {damping}"
        )));
    }
    let (x, d) = conjugate_gradient(
        |p| Ok(hvp(model, input, p, None)?.0),
        b,
        damping,
        tol,
        max_iter,
    )?;
    Ok((FlatParams(x), d))
}

/// Functional whose sensitivity to node weights is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Total train cross-entropy.
    Utility,
    /// `f_bias` against a similarity matrix.
    Bias,
    /// Normalized `f_risk` over sampled pairs with squared-Euclidean distance.
    Risk,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Utility => "utility",
            Target::Bias => "bias",
            Target::Risk => "risk",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "utility" => Ok(Target::Utility),
            "bias" => Ok(Target::Bias),
            "risk" => Ok(Target::Risk),
            _ => Err(Error::InvalidArgument(format!("unknown influence target {s:?}"))),
        }
    }
}

/// Inputs some targets need beyond the model and graph.
#[derive(Clone, Copy, Debug, Default)]
pub struct FunctionalAux<'a> {
    pub similarity: Option<&'a SimilarityMatrix>,
    pub pairs: Option<&'a PairSample>,
}

fn sq_dist(y: &Array2<f64>, i: usize, j: usize) -> f64 {
    y.row(i)
        .iter()
        .zip(y.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Normalized risk `2|d̄0 − d̄1| / (var0 + var1)` with squared-Euclidean
/// distances, and its gradient with respect to `Y`.
pub fn risk_value_and_output_grad(
    y: &Array2<f64>,
    pairs: &PairSample,
) -> Result<(f64, Array2<f64>)> {
    let (n0, n1) = (pairs.negatives.len(), pairs.positives.len());
    if n0 == 0 || n1 == 0 {
        return Err(Error::Degenerate("risk needs both pair classes".into()));
    }
    let d0: Vec<f64> = pairs.negatives.iter().map(|&(i, j)| sq_dist(y, i, j)).collect();
    let d1: Vec<f64> = pairs.positives.iter().map(|&(i, j)| sq_dist(y, i, j)).collect();
    let mv = |d: &[f64]| {
        let m = d.iter().sum::<f64>() / d.len() as f64;
        let v = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / d.len() as f64;
        (m, v)
    };
    let (m0, v0) = mv(&d0);
    let (m1, v1) = mv(&d1);
    let den = v0 + v1;
    if den == 0.0 {
        return Err(Error::Degenerate(
            "zero distance variance; normalized risk is not differentiable".into(),
        ));
    }
    let gap = m0 - m1;
    let num = gap.abs();
    let value = 2.0 * num / den;
    let sign = gap.signum() * (gap != 0.0) as i32 as f64;

    let mut dy = Array2::zeros(y.dim());
    let mut push = |(i, j): (usize, usize), dr_dd: f64| {
        let diff = &y.row(i) - &y.row(j);
        let g = &diff * (2.0 * dr_dd);
        dy.row_mut(i).scaled_add(1.0, &g);
        dy.row_mut(j).scaled_add(-1.0, &g);
    };
    // dR/dd = 2 (dN·D − N·dD) / D², per pair class.
    for (k, &p) in pairs.negatives.iter().enumerate() {
        let dn = sign / n0 as f64;
        let dd = 2.0 * (d0[k] - m0) / n0 as f64;
        push(p, 2.0 * (dn * den - num * dd) / (den * den));
    }
    for (k, &p) in pairs.positives.iter().enumerate() {
        let dn = -sign / n1 as f64;
        let dd = 2.0 * (d1[k] - m1) / n1 as f64;
        push(p, 2.0 * (dn * den - num * dd) / (den * den));
    }
    Ok((value, dy))
}

/// Value of a target functional at `model`.
pub fn functional_value(
    model: &GcnModel,
    input: &GcnInput<'_>,
    target: Target,
    aux: &FunctionalAux<'_>,
) -> Result<f64> {
    let cache = input.forward(model)?;
    let y = cache.predictions();
    match target {
        Target::Utility => crate::gcn::loss_weighted(y, input.graph.labels(), input.graph.train_nodes(), None),
        Target::Bias => {
            let s = aux.similarity.ok_or_else(|| missing_aux("bias", "similarity matrix"))?;
            Ok(crate::fairness::bias(&y.view(), s).value)
        }
        Target::Risk => {
            let p = aux.pairs.ok_or_else(|| missing_aux("risk", "pair sample"))?;
            Ok(risk_value_and_output_grad(y, p)?.0)
        }
    }
}

fn missing_aux(target: &str, what: &str) -> Error {
    Error::InvalidArgument(format!("{target} influence needs a {what}"))
}

/// `∇_θ f` for the chosen target, by backpropagation.
pub fn grad_functional(
    model: &GcnModel,
    input: &GcnInput<'_>,
    target: Target,
    aux: &FunctionalAux<'_>,
) -> Result<FlatParams> {
    let cache = input.forward(model)?;
    let y = cache.predictions();
    let g = match target {
        Target::Utility => {
            let dz = ce_logit_grad(y, input.graph.labels(), input.graph.train_nodes(), None)?;
            backward_logits(model, input, &cache, &dz.view())?
        }
        Target::Bias => {
            let s = aux.similarity.ok_or_else(|| missing_aux("bias", "similarity matrix"))?;
            let dy = bias_grad_outputs(&y.view(), s);
            backward_outputs(model, input, &cache, &dy.view())?
        }
        Target::Risk => {
            let p = aux.pairs.ok_or_else(|| missing_aux("risk", "pair sample"))?;
            let (_, dy) = risk_value_and_output_grad(y, p)?;
            backward_outputs(model, input, &cache, &dy.view())?
        }
    };
    Ok(FlatParams(g.to_flat()))
}

/// Directional derivative of the logits `Z2` along a parameter direction.
pub fn logit_jvp(model: &GcnModel, input: &GcnInput<'_>, direction: &[f64]) -> Result<Array2<f64>> {
    let d = model.with_flat(direction)?;
    let x = input.graph.features();
    let z1 = input.a_hat.mul_dense(&x.dot(model.w1()).view());
    let dz1 = input.a_hat.mul_dense(&x.dot(d.w1()).view());
    let h = z1.mapv(|v| v.max(0.0));
    let mut dh = dz1;
    dh.zip_mut_with(&z1, |g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
    let inner = dh.dot(model.w2()) + h.dot(d.w2());
    Ok(input.a_hat.mul_dense(&inner.view()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Times the damping may be multiplied by 10 after a failed solve.
    pub max_escalations: usize,
}

impl Default for InfluenceConfig {
    fn default() -> Self {
        InfluenceConfig {
            damping: 0.01,
            tol: 1e-6,
            max_iter: 500,
            max_escalations: 3,
        }
    }
}

/// Per-train-node leave-one-out influences `I_f(w_v) = −sᵀ ∇_θ L_v`
/// with `s = (H + λI)⁻¹ ∇_θ f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceVector {
    pub target: Target,
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
    pub diagnostics: CgDiagnostics,
    /// Solve attempts, including the successful one.
    pub attempts: usize,
}

impl InfluenceVector {
    pub fn get(&self, v: usize) -> Option<f64> {
        self.nodes.iter().position(|&u| u == v).map(|k| self.values[k])
    }
}

/// Solves `(H + λI) s = b`, raising `λ` tenfold after each failure.
pub fn solve_with_escalation(
    model: &GcnModel,
    input: &GcnInput<'_>,
    b: &[f64],
    config: &InfluenceConfig,
) -> Result<(FlatParams, CgDiagnostics, usize)> {
    let mut damping = config.damping;
    let mut last = None;
    for attempt in 0..=config.max_escalations {
        let (x, d) = inverse_hvp(model, input, b, damping, config.tol, config.max_iter)?;
        if d.converged {
            if attempt > 0 {
                log::info!("influence solve converged after raising damping to {damping}");
            }
            return Ok((x, d, attempt + 1));
        }
        log::warn!(
            "CG failed at damping {damping} (residual {:.3e}, negative curvature {})",
            d.residual,
            d.negative_curvature
        );
        last = Some(d);
        damping *= 10.0;
    }
    let d = last.expect("at least one attempt");
    Err(Error::Solver(format!(
        "no convergence up to damping {} (residual {:.3e})",
        d.damping, d.residual
    )))
}

/// Influence of removing each train node on the target functional: one
/// solve, then one Jacobian-vector product shared by all nodes.
pub fn influence_all(
    model: &GcnModel,
    input: &GcnInput<'_>,
    target: Target,
    aux: &FunctionalAux<'_>,
    config: &InfluenceConfig,
) -> Result<InfluenceVector> {
    let gf = grad_functional(model, input, target, aux)?;
    let (s, diagnostics, attempts) = solve_with_escalation(model, input, &gf.0, config)?;
    let values = influences_from_solution(model, input, &s.0)?;
    Ok(InfluenceVector {
        target,
        nodes: input.graph.train_nodes().to_vec(),
        values,
        diagnostics,
        attempts,
    })
}

/// `−sᵀ ∇_θ L_v` for every train node `v`.
///
/// `∇_θ L_v · s` is the derivative of `L_v` along `s`, which only needs the
/// logit directional derivative: `Σ_k (Y_vk − [k = y_v]) · dZ2_vk`.
pub fn influences_from_solution(
    model: &GcnModel,
    input: &GcnInput<'_>,
    s: &[f64],
) -> Result<Vec<f64>> {
    let cache = input.forward(model)?;
    let dz = logit_jvp(model, input, s)?;
    let g = input.graph;
    let resid = ce_logit_grad(cache.predictions(), g.labels(), g.train_nodes(), None)?;
    let per_row = (&resid * &dz).sum_axis(Axis(1));
    let out: Vec<f64> = g.train_nodes().iter().map(|&v| -per_row[v]).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            stage: "influence",
            epoch: 0,
        });
    }
    Ok(out)
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pearson needs equal lengths >= 2 (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("pearson with zero variance".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Writes `influences.csv` with columns `node_id, i_util, i_bias, i_risk`;
/// missing vectors leave their column empty.
pub fn write_influences(
    path: impl AsRef<Path>,
    util: Option<&InfluenceVector>,
    bias: Option<&InfluenceVector>,
    risk: Option<&InfluenceVector>,
) -> Result<()> {
    let vecs = [util, bias, risk];
    let nodes = vecs
        .iter()
        .flatten()
        .next()
        .map(|v| v.nodes.clone())
        .ok_or_else(|| Error::InvalidArgument("no influence vectors to write".into()))?;
    for v in vecs.iter().flatten() {
        if v.nodes != nodes {
            return Err(Error::InvalidArgument(
                "influence vectors cover different nodes".into(),
            ));
        }
    }
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["node_id", "i_util", "i_bias", "i_risk"])?;
    for (k, node) in nodes.iter().enumerate() {
        let mut rec = vec![node.to_string()];
        for v in vecs {
            rec.push(v.map(|v| format!("{:?}", v.values[k])).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}
