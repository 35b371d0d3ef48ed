//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so every line prints
//! under a plain `cargo test`.
//!
//! Criteria 8 to 10 read a Cora export from `$FAIRLEAK_CORA` or
//! `<workspace>/data/cora`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use fairleak_core::attack::{attack_auc, sample_pairs, AttackConfig};
use fairleak_core::gcn::{train, GcnInput, GcnModel, Objective, TrainConfig};
use fairleak_core::graph::{
    generate_sbm, jaccard_similarity, load_dataset, Graph, SbmParams, SimilarityMatrix,
};
use fairleak_core::influence::{
    functional_value, grad_functional, influence_all, pearson, FunctionalAux, InfluenceConfig,
    Target,
};
use fairleak_core::perturb::edge_rand;
use fairleak_core::pipeline::{
    evaluate, from_relative, risk_model_check, run_experiment_on, synth_tradeoff_study, Context,
    DataSource, ExperimentConfig, Method, RiskModelConfig, StudyConfig, Summary,
};
use fairleak_core::qclp::{check_feasible, solve, QclpProblem};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- helpers

fn small_instance(seed: u64) -> Graph {
    let mut p = SbmParams::new(20, 0.3, 0.05, 2);
    p.feature_dim = 5;
    p.train_fraction = 0.5;
    generate_sbm(&p, seed).unwrap()
}

/// Largest entrywise relative error of `analytic` against central
/// differences, with the denominator floored at 1% of the largest entry.
fn fd_error(f: impl Fn(&[f64]) -> f64, theta: &[f64], analytic: &[f64], h: f64) -> f64 {
    let floor = 1e-2 * analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let mut tp = theta.to_vec();
        tp[i] += h;
        let mut tm = theta.to_vec();
        tm[i] -= h;
        let fd = (f(&tp) - f(&tm)) / (2.0 * h);
        let denom = analytic[i].abs().max(fd.abs()).max(floor).max(1e-12);
        worst = worst.max((analytic[i] - fd).abs() / denom);
    }
    worst
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges, Array2::ones((n, 1)), vec![Some(0); n], 1, vec![0], vec![], vec![])
        .unwrap()
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, c), |_| rng.random_range(0.0..1.0))
}

fn cora_dir() -> PathBuf {
    std::env::var_os("FAIRLEAK_CORA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/cora"))
}

fn load_cora() -> Result<Graph, String> {
    let dir = cora_dir();
    if !dir.join("edges.tsv").exists() {
        return Err(format!("Cora dataset unavailable at {}", dir.display()));
    }
    load_dataset(&dir).map_err(|e| format!("Cora failed to load: {e}"))
}

fn cora_config(method: Method) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(DataSource::Dataset { path: cora_dir() }, method);
    c.seeds = vec![0, 1, 2];
    c
}

// --------------------------------------------------------------- criteria

fn c1_gradients() -> Outcome {
    let start = Instant::now();
    let (mut ce, mut fb, mut fr) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..10u64 {
        let g = small_instance(seed);
        let sim = jaccard_similarity(&g);
        let input = GcnInput::new(&g);
        let model = GcnModel::init(g.feature_dim(), 8, g.num_classes(), seed);
        let theta = model.to_flat();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = g.train_nodes().iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let obj = Objective {
            weights: Some(&w),
            lambda_fair: 0.7,
            similarity: Some(&sim),
        };
        let cache = input.forward(&model).unwrap();
        let analytic = obj.grad(&model, &input, &cache).unwrap().to_flat();
        let value = |t: &[f64]| {
            let m = model.with_flat(t).unwrap();
            obj.value(&input, &input.forward(&m).unwrap()).unwrap()
        };
        ce = ce.max(fd_error(value, &theta, &analytic, 1e-5));

        let pairs = sample_pairs(&g, seed, 1000).unwrap();
        let aux = FunctionalAux {
            similarity: Some(&sim),
            pairs: Some(&pairs),
        };
        for (target, worst) in [(Target::Bias, &mut fb), (Target::Risk, &mut fr)] {
            let analytic = grad_functional(&model, &input, target, &aux).unwrap().0;
            let f = |t: &[f64]| functional_value(&model.with_flat(t).unwrap(), &input, target, &aux).unwrap();
            *worst = worst.max(fd_error(f, &theta, &analytic, 1e-5));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = ce < 1e-6 && fb < 1e-5 && fr < 1e-4 && secs < 30.0;
    outcome(
        pass,
        format!("max rel err CE+bias {ce:.2e} (<1e-6), f_bias {fb:.2e} (<1e-5), f_risk {fr:.2e} (<1e-4); {secs:.1}s"),
    )
}

fn c2_two_hop_support() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let avg_deg = rng.random_range(0.5..4.0);
        let g = random_graph(&mut rng, n, (avg_deg / n as f64).min(1.0));
        let s = jaccard_similarity(&g);
        // Dense reachability oracle: adjacent or sharing a neighbor.
        let mut adj = vec![vec![false; n]; n];
        for (i, j) in g.edges() {
            adj[i][j] = true;
            adj[j][i] = true;
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let near = adj[i][j] || (0..n).any(|k| adj[i][k] && adj[k][j]);
                checked += 1;
                if (s.get(i, j) > 0.0) != near {
                    violations += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations over {checked} ordered pairs"))
}

fn c3_trace() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=60);
        let density = rng.random_range(0.02..0.3);
        let g = random_graph(&mut rng, n, density);
        let s: SimilarityMatrix = jaccard_similarity(&g);
        let c = rng.random_range(1..=5);
        let y = random_rows(&mut rng, n, c);
        let ly = s.laplacian_mul(&y.view());
        let trace: f64 = (&y * &ly).sum();
        let mut pairwise = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d: f64 = y.row(i).iter().zip(y.row(j).iter()).map(|(a, b)| (a - b).powi(2)).sum();
                pairwise += 0.5 * s.get(i, j) * d;
            }
        }
        worst = worst.max((trace - pairwise).abs());
    }
    outcome(worst <= 1e-10, format!("max |trace - pairwise| = {worst:.2e} (<= 1e-10)"))
}

fn c4_auc() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let n = if k == 0 { 2000 } else { rng.random_range(2..=2000) };
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        // Coarse grid forces ties.
        let d: Vec<f64> = (0..n).map(|_| (rng.random_range(0.0..1.0f64) * 50.0).floor() / 50.0).collect();
        let auc = attack_auc(&d, &labels).unwrap();
        let (mut wins, mut total) = (0.0, 0.0);
        for i in (0..n).filter(|&i| labels[i]) {
            for j in (0..n).filter(|&j| !labels[j]) {
                total += 1.0;
                wins += if d[i] < d[j] { 1.0 } else if d[i] == d[j] { 0.5 } else { 0.0 };
            }
        }
        worst = worst.max((auc - wins / total).abs());
    }
    outcome(worst <= 1e-12, format!("max |rank AUC - brute force| = {worst:.2e} (<= 1e-12)"))
}

fn c5_influence() -> Outcome {
    let start = Instant::now();
    let mut p = SbmParams::new(60, 0.2, 0.05, 2);
    p.feature_dim = 8;
    let g = generate_sbm(&p, 5).unwrap();
    let cfg = TrainConfig {
        hidden: 4,
        epochs: 3000,
        learning_rate: 0.01,
        ..TrainConfig::default()
    };
    let base = train(&g, &cfg, None).unwrap();
    let input = GcnInput::new(&g);
    let infl = influence_all(
        &base.model,
        &input,
        Target::Utility,
        &FunctionalAux::default(),
        &InfluenceConfig::default(),
    )
    .unwrap();
    let utility = |m: &GcnModel| functional_value(m, &input, Target::Utility, &FunctionalAux::default()).unwrap();
    let f0 = utility(&base.model);
    // Leave-one-out retraining from the same initialization.
    let train_nodes = g.train_nodes().to_vec();
    let mut loo = Vec::with_capacity(train_nodes.len());
    for k in 0..train_nodes.len() {
        let rest: Vec<usize> = train_nodes.iter().copied().filter(|&v| v != train_nodes[k]).collect();
        let g_minus = g.with_split(rest, g.val_nodes().to_vec(), g.test_nodes().to_vec()).unwrap();
        let m = train(&g_minus, &cfg, None).unwrap().model;
        loo.push(utility(&m) - f0);
    }
    let r = pearson(&infl.values, &loo).unwrap_or(f64::NAN);
    let agree = infl
        .values
        .iter()
        .zip(&loo)
        .filter(|(a, b)| a.signum() == b.signum())
        .count() as f64
        / loo.len() as f64;
    let r_neg = pearson(&infl.values.iter().map(|x| -x).collect::<Vec<_>>(), &loo).unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    let pass = r >= 0.8 && agree >= 0.8 && secs < 300.0;
    outcome(
        pass,
        format!(
            "pearson(I_util, LOO change) = {r:.3} (>= 0.8), sign agreement {:.0}% (>= 80%), {} train nodes, {secs:.1}s; \
             for reference pearson(-I_util, LOO change) = {r_neg:.3}",
            agree * 100.0,
            loo.len()
        ),
    )
}

fn random_feasible(rng: &mut ChaCha8Rng, p: &QclpProblem, w: &mut [f64]) {
    if rng.random_bool(0.5) {
        w.iter_mut().for_each(|v| *v = rng.random_range(-1.0..=1.0));
    } else {
        w.iter_mut().for_each(|v| *v = if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    }
    // Shrink toward the feasible origin.
    let n2: f64 = w.iter().map(|v| v * v).sum();
    let mut t: f64 = 1.0;
    if n2 > p.ball_radius_sq() {
        t = t.min((p.ball_radius_sq() / n2).sqrt());
    }
    let uw: f64 = w.iter().zip(&p.c_util).map(|(a, b)| a * b).sum();
    if uw > p.util_budget {
        t = t.min(p.util_budget / uw);
    }
    w.iter_mut().for_each(|v| *v *= t * (1.0 - 1e-12));
}

fn c6_qclp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_feas: f64 = 0.0;
    let mut beaten = 0;
    for k in 0..20 {
        let n = rng.random_range(2..=50);
        let cb: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cu: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = QclpProblem::new((0..n).collect(), cb, cu, rng.random_range(0.05..1.0), rng.random_range(0.0..0.5))
            .unwrap();
        let s = solve(&p, 1e-9, 5000).unwrap();
        let f = check_feasible(&p, &s.weights);
        worst_feas = worst_feas.max(f.ball_residual).max(f.util_residual);
        if f.box_violations > 0 {
            worst_feas = f64::INFINITY;
        }
        let mut sampler = ChaCha8Rng::seed_from_u64(1000 + k);
        let mut w = vec![0.0; n];
        let mut best = f64::INFINITY;
        for _ in 0..100_000 {
            random_feasible(&mut sampler, &p, &mut w);
            debug_assert!(check_feasible(&p, &w).within(1e-12));
            best = best.min(p.objective(&w));
        }
        if s.objective > best {
            beaten += 1;
        }
    }
    // min w0 + w1 with w0² + w1² <= 0.5: KKT point -(1/2, 1/2).
    let ball = QclpProblem::new(vec![0, 1], vec![1.0, 1.0], vec![0.0, 0.0], 0.25, 0.1).unwrap();
    let sb = solve(&ball, 1e-10, 5000).unwrap();
    let e1 = (sb.weights[0] + 0.5).abs().max((sb.weights[1] + 0.5).abs());
    // min -w1 with w0 + 3 w1 <= 0.4: KKT point (-1, 1.4/3).
    let half = QclpProblem::new(vec![0, 1], vec![0.0, -1.0], vec![1.0, 3.0], 0.9, 0.1).unwrap();
    let sh = solve(&half, 1e-10, 5000).unwrap();
    let e2 = (sh.weights[0] + 1.0).abs().max((sh.weights[1] - 1.4 / 3.0).abs());
    let pass = worst_feas <= 1e-6 && beaten == 0 && e1 <= 1e-3 && e2 <= 1e-3;
    outcome(
        pass,
        format!(
            "worst residual {worst_feas:.1e} (<= 1e-6), {beaten}/20 beaten by 1e5 feasible samples, \
             hand-KKT errors {e1:.1e} / {e2:.1e} (<= 1e-3)"
        ),
    )
}

fn c7_delta() -> Outcome {
    // (dataset, acc vanilla, acc reg, Δ_bias %, Δ_risk %, published Δ)
    let rows = [
        ("Cora", 86.12, 85.38, -35.51, 1.80, -0.744),
        ("Citeseer", 63.66, 63.11, -32.36, 1.91, -0.717),
        ("Pubmed", 85.37, 83.37, -84.70, 3.54, -1.280),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, a0, a1, db, dr, want) in rows {
        let d = from_relative((a1 - a0) / a0, db / 100.0, dr / 100.0).delta.unwrap();
        let got = (d * 1000.0).round() / 1000.0;
        let ok = (got - want).abs() < 1e-9;
        pass &= ok;
        parts.push(format!("{name} {got:.3} vs {want:.3} {}", if ok { "ok" } else { "MISMATCH" }));
    }
    outcome(pass, parts.join(", "))
}

fn seed_mean(summaries: &[&Summary]) -> Summary {
    Summary::mean(summaries)
}

fn c8_reg_direction() -> Outcome {
    let start = Instant::now();
    let g = match load_cora() {
        Ok(g) => g,
        Err(e) => return outcome(false, e),
    };
    let ctx = Context::new(g);
    let exp = match run_experiment_on(&ctx, &cora_config(Method::Reg)) {
        Ok(e) => e,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let r = &exp.report;
    let v = r.vanilla_mean.as_ref().unwrap();
    let bias_drop = (v.bias - r.mean.bias) / v.bias;
    let auc_up = r.mean.mean_auc - v.mean_auc;
    let acc_drop = (v.accuracy - r.mean.accuracy) * 100.0;
    let secs = start.elapsed().as_secs_f64();
    let pass = bias_drop >= 0.2 && auc_up > 0.0 && acc_drop <= 3.0 && secs < 900.0;
    outcome(
        pass,
        format!(
            "bias reduction {:.1}% (>= 20%), mean AUC change {auc_up:+.4} (> 0), accuracy drop {acc_drop:.2} points (<= 3); {secs:.0}s",
            bias_drop * 100.0
        ),
    )
}

fn c9_ppfr() -> Outcome {
    let start = Instant::now();
    let g = match load_cora() {
        Ok(g) => g,
        Err(e) => return outcome(false, e),
    };
    let ctx = Context::new(g);
    let exp = match run_experiment_on(&ctx, &cora_config(Method::Ppfr)) {
        Ok(e) => e,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let d = exp.report.delta.unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = d.delta_bias < 0.0 && d.delta_risk <= 0.0 && d.delta_acc.abs() <= 0.10 && secs < 1800.0;
    outcome(
        pass,
        format!(
            "Δ_bias {:+.2}% (< 0), Δ_risk {:+.2}% (<= 0), Δ_acc {:+.2}% (|.| <= 10%), Δ {:?}; {secs:.0}s",
            d.delta_bias * 100.0,
            d.delta_risk * 100.0,
            d.delta_acc * 100.0,
            d.delta
        ),
    )
}

fn c10_dp() -> Outcome {
    let g = match load_cora() {
        Ok(g) => g,
        Err(e) => return outcome(false, e),
    };
    let ctx = Context::new(g);
    let seeds = [0u64, 1, 2];
    let attack = AttackConfig::default();
    let mut vanilla = Vec::new();
    let mut noisy = Vec::new();
    for &seed in &seeds {
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        let run = || -> fairleak_core::Result<(Summary, Summary)> {
            let v = train(&ctx.graph, &cfg, Some(&ctx.similarity))?;
            let (vs, _) = evaluate(&ctx, &v.predictions, &attack, seed)?;
            let p = edge_rand(&ctx.graph, 1.0, seed)?;
            let dp = train(&p.apply(&ctx.graph)?, &cfg, Some(&ctx.similarity))?;
            let (ds, _) = evaluate(&ctx, &dp.predictions, &attack, seed)?;
            Ok((vs, ds))
        };
        match run() {
            Ok((a, b)) => {
                vanilla.push(a);
                noisy.push(b);
            }
            Err(e) => return outcome(false, format!("run failed: {e}")),
        }
    }
    let v = seed_mean(&vanilla.iter().collect::<Vec<_>>());
    let n = seed_mean(&noisy.iter().collect::<Vec<_>>());
    let auc_drop = (v.mean_auc - n.mean_auc) * 100.0;
    let dpreg = run_experiment_on(&ctx, &cora_config(Method::Dpreg));
    let ppfr = run_experiment_on(&ctx, &cora_config(Method::Ppfr));
    let (dpreg, ppfr) = match (dpreg, ppfr) {
        (Ok(a), Ok(b)) => (a.report, b.report),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("run failed: {e}")),
    };
    let cost = |r: &fairleak_core::pipeline::ExperimentReport| r.vanilla_mean.as_ref().unwrap().accuracy - r.mean.accuracy;
    let (c_dp, c_pp) = (cost(&dpreg), cost(&ppfr));
    let pass = auc_drop >= 5.0 && c_dp > c_pp;
    outcome(
        pass,
        format!(
            "EdgeRand mean AUC drop {auc_drop:.2} points (>= 5), accuracy cost DPReg {:.2} vs PPFR {:.2} points (DPReg > PPFR)",
            c_dp * 100.0,
            c_pp * 100.0
        ),
    )
}

fn c11_synthetic() -> Outcome {
    let p = SbmParams::new(2000, 0.01, 0.002, 2);
    let r = match synth_tradeoff_study(&p, &StudyConfig::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("study failed: {e}")),
    };
    let ratio_ok = r.two_hop_within_20pct;
    let trade_ok = r.tradeoff_holds == Some(true);
    outcome(
        ratio_ok && trade_ok,
        format!(
            "two-hop fraction {:.3e} vs formula {:.3e} (rel err {:.1}%, <= 20%: {}); \
             rel change d1 {:+.2}%, d0 {:+.2}%, ratio {:.1} (>= 5: {})",
            r.two_hop_empirical,
            r.two_hop_theoretical,
            r.two_hop_rel_error * 100.0,
            if ratio_ok { "yes" } else { "no" },
            r.mean_d1_rel_change * 100.0,
            r.mean_d0_rel_change * 100.0,
            r.change_ratio,
            if trade_ok { "yes" } else { "no" }
        ),
    )
}

fn c12_risk_model() -> Outcome {
    let mut p = SbmParams::new(300, 0.05, 0.02, 2);
    p.feature_dim = 2;
    let exact = risk_model_check(&p, 12, &RiskModelConfig { sigma: 0.0, ..RiskModelConfig::default() }).unwrap();
    let worst = exact.max_abs_deviation;
    let devs: Vec<f64> = [0.5, 0.1, 0.02]
        .iter()
        .map(|&sigma| {
            risk_model_check(&p, 12, &RiskModelConfig { sigma, ..RiskModelConfig::default() })
                .unwrap()
                .mean_abs_deviation
        })
        .collect();
    let monotone = devs[0] > devs[1] && devs[1] > devs[2];
    outcome(
        worst <= 1e-10 && monotone,
        format!(
            "sigma = 0: max deviation {worst:.1e} over {} pairs (<= 1e-10); mean deviation at sigma 0.5/0.1/0.02: {:.4}/{:.4}/{:.4}",
            exact.pairs.len(),
            devs[0],
            devs[1],
            devs[2]
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("gradient suite", c1_gradients),
        ("Jaccard support equals hop <= 2", c2_two_hop_support),
        ("trace identity", c3_trace),
        ("rank AUC equals brute force", c4_auc),
        ("influence fidelity", c5_influence),
        ("QCLP suite", c6_qclp),
        ("delta-metric cross-check", c7_delta),
        ("Reg trade-off direction on Cora", c8_reg_direction),
        ("PPFR effectiveness on Cora", c9_ppfr),
        ("DP sanity on Cora", c10_dp),
        ("synthetic SBM study", c11_synthetic),
        ("risk-model check", c12_risk_model),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} [{:.1}s] {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            Duration::as_secs_f64(&start.elapsed()),
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.0}s",
        criteria.len() - failed,
        criteria.len(),
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
