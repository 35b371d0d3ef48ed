use super::*;
use crate::graph::SbmParams;
use serde_json::Value;

fn small_params() -> SbmParams {
    let mut p = SbmParams::new(40, 0.3, 0.05, 2);
    p.feature_dim = 5;
    p
}

fn small_config(method: Method) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(DataSource::Sbm { params: small_params(), seed: 3 }, method);
    c.train.epochs = 30;
    c.seeds = vec![0, 1];
    c
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
        assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
    }
    assert!("fairgnn".parse::<Method>().is_err());
    assert_eq!("lapgraph".parse::<DpMechanism>().unwrap(), DpMechanism::Lapgraph);
}

#[test]
fn dp_routing_by_size() {
    assert_eq!(route_dp(2708, None), DpMechanism::Edgerand);
    assert_eq!(route_dp(10_000, None), DpMechanism::Edgerand);
    assert_eq!(route_dp(19_717, None), DpMechanism::Lapgraph);
    assert_eq!(route_dp(19_717, Some(DpMechanism::Edgerand)), DpMechanism::Edgerand);
}

#[test]
fn config_validation_and_epochs() {
    let c = small_config(Method::Ppfr);
    c.validate().unwrap();
    let mut d = ExperimentConfig::new(c.data.clone(), Method::Ppfr);
    assert_eq!(d.fine_tune_epochs(), 40);
    d.s = 1.5;
    assert!(d.validate().is_err());
    let mut r = small_config(Method::Reg);
    r.lambda_fair = 0.0;
    assert!(r.validate().is_err());
    let mut e = small_config(Method::Vanilla);
    e.seeds.clear();
    assert!(e.validate().is_err());
}

#[test]
fn config_hash_is_stable_hex() {
    let c = small_config(Method::Ppfr);
    let h = c.hash();
    assert_eq!(h.len(), 64);
    assert!(h.chars().all(|ch| ch.is_ascii_hexdigit() && !ch.is_ascii_uppercase()));
    assert_eq!(h, c.clone().hash());
    let mut d = c.clone();
    d.gamma = 0.25;
    assert_ne!(h, d.hash());
}

#[test]
fn degenerate_ppfr_equals_vanilla() {
    let mut v = small_config(Method::Vanilla);
    v.seeds = vec![4];
    let mut p = v.clone();
    p.method = Method::Ppfr;
    p.s = 0.0;
    p.gamma = 0.0;
    let rv = run_method(&v).unwrap();
    let rp = run_method(&p).unwrap();
    assert_eq!(rv.mean, rp.mean);
    assert_eq!(rp.vanilla_mean.as_ref().unwrap(), &rv.mean);
    assert!(rp.per_seed[0].perturbation.as_ref().unwrap().num_added == 0);
    assert!(rv.delta.is_none() && rv.per_seed[0].delta.is_none());
    // Accuracy unchanged, so Δ is flagged rather than divided by zero.
    assert!(rp.delta.unwrap().acc_unchanged);
}

fn stage_list(r: &SeedReport) -> Vec<(Stage, usize)> {
    r.stages.iter().map(|e| (e.stage.clone(), e.epoch)).collect()
}

#[test]
fn stage_logs_order_perturbation() {
    let c = small_config(Method::Dpreg);
    let e_va = c.train.epochs;
    let r = run_method(&c).unwrap();
    assert_eq!(
        stage_list(&r.per_seed[0]),
        vec![(Stage::Perturb, 0), (Stage::Train, 0), (Stage::Evaluate, e_va)]
    );
    let c = small_config(Method::Dpfr);
    let e_re = c.fine_tune_epochs();
    let r = run_method(&c).unwrap();
    assert_eq!(
        stage_list(&r.per_seed[0]),
        vec![
            (Stage::Train, 0),
            (Stage::Influence, e_va),
            (Stage::Reweight, e_va),
            (Stage::Perturb, e_va),
            (Stage::FineTune, e_va),
            (Stage::Evaluate, e_va + e_re),
        ]
    );
}

#[test]
fn ppfr_is_deterministic_and_attacks_original_edges() {
    let c = small_config(Method::Ppfr);
    let a = run_experiment(&c).unwrap();
    let b = run_experiment(&c).unwrap();
    for (x, y) in a.outcomes.iter().zip(&b.outcomes) {
        assert_eq!(x.report.summary, y.report.summary);
        assert_eq!(x.weights, y.weights);
        assert_eq!(x.predictions, y.predictions);
        assert_eq!(x.perturbation, y.perturbation);
    }
    let g = c.data.load().unwrap();
    for o in &a.outcomes {
        let p = o.perturbation.as_ref().unwrap();
        assert!(!p.added.is_empty());
        assert_eq!(o.report.attack.num_positives, g.num_edges());
        let (_, w) = o.weights.as_ref().unwrap();
        assert!(w.iter().all(|x| (-1.0..=1.0).contains(x)));
        assert!(o.report.qclp.as_ref().unwrap().feasibility.within(1e-6));
        assert_eq!(o.history.len(), c.train.epochs + c.fine_tune_epochs());
    }
}

#[test]
fn seed_average_delta_uses_mean_channels() {
    let r = run_method(&small_config(Method::Reg)).unwrap();
    let v = r.vanilla_mean.as_ref().unwrap();
    let want = delta_metric(&v.channels(), &r.mean.channels()).unwrap();
    assert_eq!(r.delta.unwrap(), want);
    let acc = (r.per_seed[0].summary.accuracy + r.per_seed[1].summary.accuracy) / 2.0;
    assert!((r.mean.accuracy - acc).abs() < 1e-15);
}

/// Checks `value` against the subset of JSON Schema used by the report
/// schema: `type`, `enum`, `required`, `properties`,
/// `additionalProperties`, `items`, `minItems`, `oneOf` and local `$ref`.
fn validate(schema: &Value, root: &Value, value: &Value, path: &str) -> std::result::Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/$defs/").ok_or(format!("unsupported ref {r}"))?;
        return validate(&root["$defs"][name], root, value, path);
    }
    if let Some(options) = schema.get("oneOf").and_then(Value::as_array) {
        let ok = options.iter().filter(|s| validate(s, root, value, path).is_ok()).count();
        return if ok == 1 { Ok(()) } else { Err(format!("{path}: {ok} oneOf branches match")) };
    }
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => return Err(format!("{path}: bad type keyword")),
        };
        let matches = |ty: &str| match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "number" => value.is_number(),
            "integer" => value.is_u64() || value.is_i64(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            _ => false,
        };
        if !types.iter().any(|ty| matches(ty)) {
            return Err(format!("{path}: expected {types:?}, found {value}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            return Err(format!("{path}: {value} not in enum"));
        }
    }
    if let Some(obj) = value.as_object() {
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("{path}: missing {key}"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (k, v) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => validate(s, root, v, &format!("{path}.{k}"))?,
                None => {
                    if let Some(extra) = schema.get("additionalProperties") {
                        validate(extra, root, v, &format!("{path}.{k}"))?;
                    }
                }
            }
        }
    }
    if let Some(items) = value.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < min {
                return Err(format!("{path}: fewer than {min} items"));
            }
        }
        if let Some(s) = schema.get("items") {
            for (i, v) in items.iter().enumerate() {
                validate(s, root, v, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}

#[test]
fn reports_match_published_schema() {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    for m in Method::ALL {
        let mut c = small_config(m);
        c.seeds = vec![1];
        c.correlation = m == Method::Ppfr;
        let r = run_method(&c).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        validate(&schema, &schema, &v, "$").unwrap_or_else(|e| panic!("{m}: {e}"));
        let back: ExperimentReport = serde_json::from_value(v).unwrap();
        assert_eq!(back.config_hash, r.config_hash);
    }
    let broken = serde_json::json!({ "method": "vanilla" });
    assert!(validate(&schema, &schema, &broken, "$").is_err());
}

#[test]
fn outputs_are_written() {
    let mut c = small_config(Method::Ppfr);
    c.correlation = true;
    let exp = run_experiment(&c).unwrap();
    assert!(exp.report.influence_r_mean.unwrap().abs() <= 1.0);
    let tmp = tempfile::tempdir().unwrap();
    write_outputs(tmp.path(), &exp).unwrap();
    assert!(tmp.path().join("report.json").exists());
    for f in ["history.csv", "weights.csv", "influences.csv", "perturbation.json", "model.bin"] {
        assert!(tmp.path().join(f).exists(), "{f}");
        assert!(tmp.path().join("seed_1").join(f).exists(), "seed_1/{f}");
    }
    let inf = std::fs::read_to_string(tmp.path().join("influences.csv")).unwrap();
    let first = inf.lines().nth(1).unwrap();
    assert_eq!(first.split(',').filter(|s| !s.is_empty()).count(), 4);
}

#[test]
fn correlation_of_identical_and_negated_functionals() {
    let g = c_graph();
    let sim = jaccard_similarity(&g);
    let tc = TrainConfig { epochs: 30, ..TrainConfig::default() };
    let model = train(&g, &tc, Some(&sim)).unwrap().model;
    let c = correlation_analysis(&model, &g, &sim, 1000, 0, &InfluenceConfig::default()).unwrap();
    assert!(c.r.abs() <= 1.0);
    assert_eq!(c.inconformity, c.r < INCONFORMITY_THRESHOLD);
    let b = &c.bias.values;
    assert!((crate::influence::pearson(b, b).unwrap() - 1.0).abs() < 1e-12);
    let neg: Vec<f64> = c.risk.values.iter().map(|x| -x).collect();
    assert!((crate::influence::pearson(b, &neg).unwrap() + c.r).abs() < 1e-12);
}

fn c_graph() -> Graph {
    generate_sbm(&small_params(), 3).unwrap()
}

#[test]
fn risk_model_exact_without_noise() {
    let mut p = SbmParams::new(200, 0.08, 0.03, 2);
    p.feature_dim = 2;
    let cfg = RiskModelConfig { sigma: 0.0, ..RiskModelConfig::default() };
    let r = risk_model_check(&p, 1, &cfg).unwrap();
    assert_eq!(r.pairs.len(), cfg.num_pairs);
    assert!(r.pairs.iter().any(|q| q.closed_form > 1e-3));
    for q in &r.pairs {
        assert!(q.abs_deviation <= 1e-10, "{q:?}");
    }
}

#[test]
fn risk_model_closed_form_collapses() {
    let mut p = SbmParams::new(100, 0.1, 0.03, 2);
    p.feature_dim = 2;
    let cfg = RiskModelConfig { mu1: vec![0.0, 0.0], sigma: 0.1, ..RiskModelConfig::default() };
    let r = risk_model_check(&p, 2, &cfg).unwrap();
    assert!(r.pairs.iter().all(|q| q.closed_form == 0.0));
    // Noise-only deviation stays at the scale of sigma.
    assert!(r.mean_empirical < cfg.sigma);
    let same: Vec<_> = r
        .pairs
        .iter()
        .filter(|q| q.d_i == q.d_j && q.d_i_other == q.d_j_other)
        .collect();
    assert!(same.iter().all(|q| q.delta == 0.0));
}

#[test]
fn risk_model_deviation_shrinks_with_sigma() {
    let mut p = SbmParams::new(200, 0.08, 0.03, 2);
    p.feature_dim = 2;
    let devs: Vec<f64> = [0.5, 0.1, 0.02]
        .iter()
        .map(|&sigma| {
            let cfg = RiskModelConfig { sigma, ..RiskModelConfig::default() };
            risk_model_check(&p, 1, &cfg).unwrap().mean_abs_deviation
        })
        .collect();
    assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
}

#[test]
fn risk_model_rejects_bad_graphs() {
    let mut p = SbmParams::new(30, 0.2, 0.05, 3);
    p.feature_dim = 3;
    assert!(risk_model_check(&p, 0, &RiskModelConfig::default()).is_err());
    let g = crate::graph::test_graphs::plain(4, &[(0, 1)]);
    let g = Graph::from_edges(
        4,
        &g.edges(),
        g.features().clone(),
        vec![Some(0); 4],
        2,
        vec![0],
        vec![],
        vec![],
    )
    .unwrap();
    assert!(matches!(
        risk_model_on_graph(&g, &RiskModelConfig::default()),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn study_flags_unmet_hypotheses() {
    let mut p = SbmParams::new(60, 0.1, 0.1, 2);
    p.feature_dim = 4;
    let cfg = StudyConfig {
        train: TrainConfig { epochs: 20, ..TrainConfig::default() },
        seeds: vec![0],
        ..StudyConfig::default()
    };
    let r = synth_tradeoff_study(&p, &cfg).unwrap();
    assert!(r.hypotheses_unmet && r.tradeoff_holds.is_none());
    assert_eq!(r.per_seed[0].hops[0].hop, "1");
    let hop_total: usize = r.per_seed[0].hops[1..].iter().map(|h| h.count).sum();
    assert_eq!(hop_total, r.per_seed[0].hops[0].count);

    let empty = SbmParams::new(20, 0.0, 0.0, 2);
    assert!(matches!(synth_tradeoff_study(&empty, &cfg), Err(Error::Degenerate(_))));
}

#[test]
fn study_on_homophilous_graph_reports_ratio() {
    let mut p = SbmParams::new(120, 0.15, 0.02, 2);
    p.feature_dim = 4;
    let cfg = StudyConfig {
        train: TrainConfig { epochs: 40, ..TrainConfig::default() },
        seeds: vec![0, 1],
        ..StudyConfig::default()
    };
    let r = synth_tradeoff_study(&p, &cfg).unwrap();
    assert!(!r.hypotheses_unmet && r.tradeoff_holds.is_some());
    assert_eq!(r.per_seed.len(), 2);
    let want = theoretical_ratio_check(&p);
    assert!((r.two_hop_theoretical - want).abs() < 1e-15);
    // Regularization pulls connected predictions together.
    assert!(r.mean_d1_rel_change < 0.0, "{}", r.mean_d1_rel_change);
}

fn theoretical_ratio_check(p: &SbmParams) -> f64 {
    let s = p.p + p.q;
    s * s / (1.0 - s)
}
