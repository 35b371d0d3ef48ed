//! Fairness-aware reweighting program
//!
//! ```text
//! min_w  Σ w_v c_bias_v
//! s.t.   Σ w_v² ≤ α n_l,   Σ w_v c_util_v ≤ β Σ max(c_util_v, 0),   −1 ≤ w_v ≤ 1
//! ```
//!
//! solved by projected gradient steps with Dykstra's alternating projection
//! onto the three constraint sets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::influence::InfluenceVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QclpProblem {
    pub nodes: Vec<usize>,
    pub c_bias: Vec<f64>,
    pub c_util: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// `β · Σ max(c_util, 0)`.
    pub util_budget: f64,
}

impl QclpProblem {
    pub const DEFAULT_ALPHA: f64 = 0.9;
    pub const DEFAULT_BETA: f64 = 0.1;

    pub fn new(
        nodes: Vec<usize>,
        c_bias: Vec<f64>,
        c_util: Vec<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if c_bias.len() != nodes.len() || c_util.len() != nodes.len() {
            return Err(Error::Shape(format!(
                "{} nodes, {} bias and {} utility coefficients",
                nodes.len(),
                c_bias.len(),
                c_util.len()
            )));
        }
        if !(alpha > 0.0) || !(beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need alpha > 0 and beta >= 0 (got {alpha}, {beta})"
            )));
        }
        if c_bias.iter().chain(&c_util).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite QCLP coefficient".into()));
        }
        let util_budget = beta * c_util.iter().map(|v| v.max(0.0)).sum::<f64>();
        if !util_budget.is_finite() {
            return Err(Error::InvalidArgument("utility budget overflow".into()));
        }
        Ok(QclpProblem {
            nodes,
            c_bias,
            c_util,
            alpha,
            beta,
            util_budget,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Squared ball radius `α n_l`.
    pub fn ball_radius_sq(&self) -> f64 {
        self.alpha * self.n() as f64
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        dot(&self.c_bias, w)
    }
}

/// Assembles the program from bias and utility influence vectors.
pub fn build_problem(
    i_bias: &InfluenceVector,
    i_util: &InfluenceVector,
    alpha: f64,
    beta: f64,
) -> Result<QclpProblem> {
    if i_bias.nodes != i_util.nodes {
        return Err(Error::InvalidArgument(
            "bias and utility influences cover different train nodes".into(),
        ));
    }
    QclpProblem::new(
        i_bias.nodes.clone(),
        i_bias.values.clone(),
        i_util.values.clone(),
        alpha,
        beta,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    /// `max(0, Σ w² − α n_l)`.
    pub ball_residual: f64,
    /// `max(0, Σ w c_util − budget)`.
    pub util_residual: f64,
    pub box_violations: usize,
}

impl Feasibility {
    pub fn within(&self, tol: f64) -> bool {
        self.ball_residual <= tol && self.util_residual <= tol && self.box_violations == 0
    }
}

pub fn check_feasible(problem: &QclpProblem, w: &[f64]) -> Feasibility {
    Feasibility {
        ball_residual: (dot(w, w) - problem.ball_radius_sq()).max(0.0),
        util_residual: (dot(w, &problem.c_util) - problem.util_budget).max(0.0),
        box_violations: w.iter().filter(|v| !(-1.0..=1.0).contains(*v)).count(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QclpSolution {
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
    pub objective: f64,
    pub feasibility: Feasibility,
    pub iterations: usize,
    /// Stopped on the tolerance test rather than `max_iter`.
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_ball(x: &mut [f64], r2: f64) {
    let n2 = dot(x, x);
    if n2 > r2 {
        let s = (r2 / n2).sqrt();
        x.iter_mut().for_each(|v| *v *= s);
    }
}

fn project_halfspace(x: &mut [f64], u: &[f64], u2: f64, budget: f64) {
    if u2 == 0.0 {
        return;
    }
    let excess = dot(u, x) - budget;
    if excess > 0.0 {
        let s = excess / u2;
        x.iter_mut().zip(u).for_each(|(v, a)| *v -= s * a);
    }
}

fn project_box(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
}

/// Dykstra's cyclic projection of `z` onto ball ∩ halfspace ∩ box.
fn dykstra(problem: &QclpProblem, z: &[f64], tol: f64, max_cycles: usize) -> Vec<f64> {
    let n = z.len();
    let r2 = problem.ball_radius_sq();
    let u = &problem.c_util;
    let u2 = dot(u, u);
    let mut x = z.to_vec();
    let mut corr = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut y = vec![0.0; n];
    for _ in 0..max_cycles {
        let mut moved: f64 = 0.0;
        for (set, p) in corr.iter_mut().enumerate() {
            for i in 0..n {
                y[i] = x[i] + p[i];
            }
            match set {
                0 => project_ball(&mut y, r2),
                1 => project_halfspace(&mut y, u, u2, problem.util_budget),
                _ => project_box(&mut y),
            }
            for i in 0..n {
                p[i] = x[i] + p[i] - y[i];
                moved = moved.max((y[i] - x[i]).abs());
                x[i] = y[i];
            }
        }
        if moved <= tol {
            break;
        }
    }
    x
}

/// Restores feasibility after an inexact projection: an exact halfspace
/// step, then the largest shrink toward 0 that fits ball and box. Shrinking
/// keeps the halfspace because the budget is non-negative.
fn pull_into_feasible(problem: &QclpProblem, w: &mut [f64]) {
    let u = &problem.c_util;
    project_halfspace(w, u, dot(u, u), problem.util_budget);
    let mut t: f64 = 1.0;
    let n2 = dot(w, w);
    if n2 > problem.ball_radius_sq() {
        t = t.min((problem.ball_radius_sq() / n2).sqrt());
    }
    let m = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 1.0 {
        t = t.min(1.0 / m);
    }
    if t < 1.0 {
        w.iter_mut().for_each(|v| *v *= t);
        project_box(w);
    }
}

/// Projected gradient from `w = 0` with a doubling step; returns the best
/// feasible iterate.
pub fn solve(problem: &QclpProblem, tol: f64, max_iter: usize) -> Result<QclpSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if problem.util_budget < 0.0 {
        return Err(Error::InvalidArgument("negative utility budget".into()));
    }
    let n = problem.n();
    let c = &problem.c_bias;
    let cmax = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut w = vec![0.0; n];
    let mut best = w.clone();
    let mut best_obj = 0.0;
    let mut iterations = 0;
    let mut converged = cmax == 0.0;
    if !converged {
        let mut eta = 1.0 / cmax;
        let proj_tol = (tol * 1e-3).max(1e-15);
        let mut prev_obj = 0.0;
        for it in 0..max_iter {
            iterations = it + 1;
            let z: Vec<f64> = w.iter().zip(c).map(|(x, g)| x - eta * g).collect();
            let mut next = dykstra(problem, &z, proj_tol, 100_000);
            pull_into_feasible(problem, &mut next);
            let obj = problem.objective(&next);
            let step: f64 = next
                .iter()
                .zip(&w)
                .fold(0.0, |a, (x, y)| a.max((x - y).abs()));
            if obj < best_obj {
                best_obj = obj;
                best.clone_from(&next);
            }
            w = next;
            if it > 0 && (prev_obj - obj).abs() <= tol * (1.0 + obj.abs()) && step <= tol {
                converged = true;
                break;
            }
            prev_obj = obj;
            eta = (eta * 2.0).min(1e8 / cmax);
        }
        if !converged {
            log::warn!("QCLP solver hit max_iter = {max_iter}; returning best feasible iterate");
        }
    }
    let feasibility = check_feasible(problem, &best);
    Ok(QclpSolution {
        nodes: problem.nodes.clone(),
        objective: problem.objective(&best),
        weights: best,
        feasibility,
        iterations,
        converged,
    })
}

/// Writes `weights.csv` (`node_id, w`).
pub fn write_weights(path: impl AsRef<Path>, nodes: &[usize], weights: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["node_id", "w"])?;
    for (n, v) in nodes.iter().zip(weights) {
        w.write_record([n.to_string(), format!("{v:?}")])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

/// Reads `weights.csv` and aligns it with `train`; absent nodes get weight 0.
pub fn read_weights(path: impl AsRef<Path>, train: &[usize]) -> Result<Vec<f64>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = vec![0.0; train.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse_err = |msg: String| Error::Parse {
            file: path.display().to_string(),
            line: line + 2,
            msg,
        };
        if rec.len() != 2 {
            return Err(parse_err(format!("expected 2 fields, found {}", rec.len())));
        }
        let node: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad node id {:?}", &rec[0])))?;
        let w: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad weight {:?}", &rec[1])))?;
        let pos = train
            .iter()
            .position(|&v| v == node)
            .ok_or(Error::NotTrainNode(node))?;
        out[pos] = w;
    }
    crate::gcn::check_weights_vector(&out, train.len())?;
    Ok(out)
}
