//! Hand-checked values: clique structure on the canonical small graphs,
//! exact hard-table encodings of the worked example models, fit behavior on
//! their distributions, and sampling against exact probabilities.

use std::collections::BTreeMap;

use graphs::Cdag;
use ncm::{
    build_ncm, encode_scm, fit, fit_representation, linear_probe_accuracy, ClusterData, FitMode,
    Ncm, NcmError, QueryReg, RepConfig, SampleOpts, TrainConfig,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scm_core::{
    parse_query, CausalDiagram, Domain, ExogenousBlock, MechanismSpec, Pmf, Scm, Value, Variable,
};

fn bit(name: &str) -> Variable {
    Variable {
        name: name.into(),
        domain: Domain::new(vec![0, 1]),
    }
}

fn block(name: &str, p1: f64) -> ExogenousBlock {
    ExogenousBlock {
        name: name.into(),
        domain: Domain::new(vec![0, 1]),
        pmf: vec![1.0 - p1, p1],
    }
}

fn binary_domains(names: &[&str]) -> BTreeMap<String, Domain> {
    names
        .iter()
        .map(|n| (n.to_string(), Domain::new(vec![0, 1])))
        .collect()
}

fn cdag(nodes: &[&str], directed: &[(&str, &str)], bidirected: &[(&str, &str)]) -> Cdag {
    Cdag {
        diagram: CausalDiagram::new(
            nodes.iter().map(|n| n.to_string()).collect(),
            directed
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect::<Vec<_>>(),
            bidirected
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect::<Vec<_>>(),
        )
        .unwrap(),
    }
}

/// Bow: confounded treatment→outcome, the smallest non-ID graph.
fn bow() -> Cdag {
    cdag(&["X", "Y"], &[("X", "Y")], &[("X", "Y")])
}

/// Confounded model whose observational joint is (0.594, 0.066, 0.05, 0.29)
/// over (X,Y) and whose do(X=1) recovery rate is 0.95.
fn m1() -> Scm {
    Scm::new(
        vec![bit("X"), bit("Y")],
        vec![
            block("U_XY", 0.34),
            block("U_Y0", 0.1),
            block("U_Y1", 29.0 / 34.0),
        ],
        vec![
            MechanismSpec::from_expr("X", &[], &["U_XY"], "U_XY"),
            MechanismSpec::from_expr(
                "Y",
                &["X"],
                &["U_XY", "U_Y0", "U_Y1"],
                "U_XY ? U_Y1 : (X | U_Y0)",
            ),
        ],
    )
    .unwrap()
}

/// Same observational joint as `m1`, opposite counterfactual: do(X=1)
/// recovery rate 0.29.
fn m2() -> Scm {
    Scm::new(
        vec![bit("X"), bit("Y")],
        vec![
            block("U_XY", 0.34),
            block("U_Y0", 0.1),
            block("U_Y1", 29.0 / 34.0),
        ],
        vec![
            MechanismSpec::from_expr("X", &[], &["U_XY"], "U_XY"),
            MechanismSpec::from_expr(
                "Y",
                &["X"],
                &["U_XY", "U_Y0", "U_Y1"],
                "U_XY ? U_Y1 : (!X & U_Y0)",
            ),
        ],
    )
    .unwrap()
}

/// R→X→Y with R↔Y: the query P(Y_{X=1}=1) is identified by adjusting on R
/// and equals 0.5.
fn backdoor() -> Scm {
    Scm::new(
        vec![bit("R"), bit("X"), bit("Y")],
        vec![
            block("U_RY", 0.5),
            block("U_X0", 0.04),
            block("U_X1", 0.64),
            block("U_Y0", 0.1),
            block("U_Y1", 0.1),
            block("U_Y2", 0.1),
            block("U_Y3", 0.9),
        ],
        vec![
            MechanismSpec::from_expr("R", &[], &["U_RY"], "U_RY"),
            MechanismSpec::from_expr("X", &["R"], &["U_X0", "U_X1"], "R ? U_X1 : U_X0"),
            MechanismSpec::from_expr(
                "Y",
                &["X"],
                &["U_RY", "U_Y0", "U_Y1", "U_Y2", "U_Y3"],
                "X ? (U_RY ? U_Y3 : U_Y2) : (U_RY ? U_Y1 : U_Y0)",
            ),
        ],
    )
    .unwrap()
}

fn fig6d_data() -> Pmf {
    let mut entries = BTreeMap::new();
    entries.insert(vec![0, 0], 0.594);
    entries.insert(vec![0, 1], 0.066);
    entries.insert(vec![1, 0], 0.05);
    entries.insert(vec![1, 1], 0.29);
    Pmf::new(vec!["X".into(), "Y".into()], entries).unwrap()
}

fn no_intervention() -> BTreeMap<String, Value> {
    BTreeMap::new()
}

fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got}, want {want} (tol {tol})"
    );
}

// ---------------------------------------------------------------- structure

#[test]
fn bow_graph_builds_one_shared_clique() {
    let model = build_ncm(&bow(), &binary_domains(&["X", "Y"]), &TrainConfig::default()).unwrap();
    assert_eq!(model.cliques().len(), 1);
    assert_eq!(model.cliques()[0].members, vec!["X".to_string(), "Y".to_string()]);
    // Response-function count: 2 X-functions × 4 Y-functions.
    assert_eq!(model.cliques()[0].states(), 8);
}

#[test]
fn markovian_chain_builds_singleton_cliques() {
    let model = build_ncm(
        &cdag(&["X", "Y"], &[("X", "Y")], &[]),
        &binary_domains(&["X", "Y"]),
        &TrainConfig::default(),
    )
    .unwrap();
    assert_eq!(model.cliques().len(), 2);
    assert_eq!(model.cliques()[0].members, vec!["X".to_string()]);
    assert_eq!(model.cliques()[1].members, vec!["Y".to_string()]);
    assert_eq!(model.cliques()[0].states(), 2);
    assert_eq!(model.cliques()[1].states(), 4);
}

#[test]
fn bidirected_path_builds_two_overlapping_cliques() {
    let model = build_ncm(
        &cdag(&["A", "B", "C"], &[], &[("A", "B"), ("B", "C")]),
        &binary_domains(&["A", "B", "C"]),
        &TrainConfig::default(),
    )
    .unwrap();
    let members: Vec<Vec<String>> = model.cliques().iter().map(|c| c.members.clone()).collect();
    assert_eq!(
        members,
        vec![
            vec!["A".to_string(), "B".to_string()],
            vec!["B".to_string(), "C".to_string()],
        ]
    );
    // B reads both categoricals; A and C read one each.
    assert_eq!(model.node("A").unwrap().cliques, vec![0]);
    assert_eq!(model.node("B").unwrap().cliques, vec![0, 1]);
    assert_eq!(model.node("C").unwrap().cliques, vec![1]);
}

#[test]
fn clique_state_cap_applies() {
    let config = TrainConfig {
        max_clique_states: 3,
        ..TrainConfig::default()
    };
    let model = build_ncm(&bow(), &binary_domains(&["X", "Y"]), &config).unwrap();
    assert_eq!(model.cliques()[0].states(), 3);
}

// --------------------------------------------------------------- evaluation

#[test]
fn uniform_logits_bow_induces_uniform_joint() {
    let mut model =
        build_ncm(&bow(), &binary_domains(&["X", "Y"]), &TrainConfig::default()).unwrap();
    model.set_flat_logits(&vec![0.0; model.logit_count()]).unwrap();
    let pmf = model.induced_pmf(&no_intervention()).unwrap();
    assert_eq!(pmf.support_len(), 4);
    for (_, p) in pmf.iter() {
        assert_close(p, 0.25, 1e-12, "uniform bow cell");
    }
}

#[test]
fn encoded_m1_reproduces_its_joint_and_query() {
    let model = encode_scm(&m1()).unwrap();
    assert_eq!(model.cliques().len(), 1);
    assert_eq!(model.cliques()[0].states(), 8);

    let pmf = model.induced_pmf(&no_intervention()).unwrap();
    assert_close(pmf.prob(&[0, 0]), 0.594, 1e-9, "P(0,0)");
    assert_close(pmf.prob(&[0, 1]), 0.066, 1e-9, "P(0,1)");
    assert_close(pmf.prob(&[1, 0]), 0.05, 1e-9, "P(1,0)");
    assert_close(pmf.prob(&[1, 1]), 0.29, 1e-9, "P(1,1)");

    let q = parse_query("P(Y_{X=1}=1)").unwrap();
    assert_close(model.ctf_pmf(&q).unwrap(), 0.95, 1e-9, "P(Y_{X=1}=1)");
}

#[test]
fn encoded_m2_matches_the_joint_but_not_the_counterfactual() {
    let model = encode_scm(&m2()).unwrap();
    let pmf = model.induced_pmf(&no_intervention()).unwrap();
    assert_close(pmf.prob(&[0, 0]), 0.594, 1e-9, "P(0,0)");
    assert_close(pmf.prob(&[1, 1]), 0.29, 1e-9, "P(1,1)");

    let q = parse_query("P(Y_{X=1}=1)").unwrap();
    assert_close(model.ctf_pmf(&q).unwrap(), 0.29, 1e-9, "P(Y_{X=1}=1)");
}

#[test]
fn encoded_backdoor_model_gives_query_half() {
    let model = encode_scm(&backdoor()).unwrap();
    let members: Vec<Vec<String>> = model.cliques().iter().map(|c| c.members.clone()).collect();
    assert_eq!(
        members,
        vec![
            vec!["R".to_string(), "Y".to_string()],
            vec!["X".to_string()],
        ]
    );

    // P(r)·P(x|r)·P(y|x,r) with P(X=1|R=0)=0.04, P(X=1|R=1)=0.64 and
    // P(Y=1|x,r) from the selected noise bit.
    let pmf = model.induced_pmf(&no_intervention()).unwrap();
    assert_close(pmf.prob(&[0, 0, 0]), 0.432, 1e-9, "P(0,0,0)");
    assert_close(pmf.prob(&[0, 0, 1]), 0.048, 1e-9, "P(0,0,1)");
    assert_close(pmf.prob(&[0, 1, 0]), 0.018, 1e-9, "P(0,1,0)");
    assert_close(pmf.prob(&[0, 1, 1]), 0.002, 1e-9, "P(0,1,1)");
    assert_close(pmf.prob(&[1, 0, 0]), 0.162, 1e-9, "P(1,0,0)");
    assert_close(pmf.prob(&[1, 0, 1]), 0.018, 1e-9, "P(1,0,1)");
    assert_close(pmf.prob(&[1, 1, 0]), 0.032, 1e-9, "P(1,1,0)");
    assert_close(pmf.prob(&[1, 1, 1]), 0.288, 1e-9, "P(1,1,1)");

    let q = parse_query("P(Y_{X=1}=1)").unwrap();
    assert_close(model.ctf_pmf(&q).unwrap(), 0.5, 1e-9, "P(Y_{X=1}=1)");
}

#[test]
fn single_world_query_equals_induced_marginal() {
    let model = encode_scm(&m1()).unwrap();
    let q = parse_query("P(Y=1)").unwrap();
    let direct = model.ctf_pmf(&q).unwrap();
    let marginal = model
        .induced_pmf(&no_intervention())
        .unwrap()
        .marginal(&["Y".to_string()])
        .unwrap()
        .prob(&[1]);
    assert_close(direct, marginal, 1e-12, "observational marginal");
}

#[test]
fn hard_tables_make_counterfactuals_indicator_sums() {
    let scm = m1();
    let model = encode_scm(&scm).unwrap();
    for text in [
        "P(Y_{X=1}=1, X=0)",
        "P(Y_{X=1}=1, Y=0)",
        "P(Y_{X=0}=0, Y_{X=1}=1)",
        "P(Y_{X=1}=1 | X=0)",
    ] {
        let q = parse_query(text).unwrap();
        let want = scm.ctf_prob(&q).unwrap();
        let got = model.ctf_pmf(&q).unwrap();
        assert_close(got, want, 1e-9, text);
    }
}

#[test]
fn conditioning_on_zero_probability_event_errors() {
    let model = encode_scm(&m1()).unwrap();
    // X never disagrees with itself.
    let q = parse_query("P(Y=1 | X=0, X=1)").unwrap();
    match model.ctf_pmf(&q) {
        Err(NcmError::ZeroProbabilityConditioning(_)) => {}
        other => panic!("expected zero-probability conditioning, got {other:?}"),
    }
}

// ------------------------------------------------------------------ fitting

#[test]
fn fit_point_mass_on_chain_reaches_entropy_floor() {
    let mut model = build_ncm(
        &cdag(&["X", "Y"], &[("X", "Y")], &[]),
        &binary_domains(&["X", "Y"]),
        &TrainConfig {
            seed: 3,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let data = Pmf::point(vec!["X".into(), "Y".into()], vec![1, 1]).unwrap();
    let config = TrainConfig {
        learning_rate: 0.5,
        iterations: 6000,
        ..TrainConfig::default()
    };
    let report = fit(&mut model, &[(no_intervention(), data)], None, &config).unwrap();
    assert_close(report.data_entropy, 0.0, 1e-12, "point-mass entropy");
    assert!(
        report.data_loss < 1e-3,
        "cross-entropy should approach 0, got {}",
        report.data_loss
    );
}

#[test]
fn fit_bow_recovers_query_extremes() {
    let q = parse_query("P(Y_{X=1}=1)").unwrap();
    let data = fig6d_data();
    let mut results = Vec::new();
    for sign in [1.0, -1.0] {
        let mut model = build_ncm(
            &bow(),
            &binary_domains(&["X", "Y"]),
            &TrainConfig {
                seed: 7,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        // Strong sustained pressure: motion along the data-consistent set is
        // free for the cross-entropy term, but the softmax parameterization
        // still needs many coordinated steps to traverse it.
        let config = TrainConfig {
            learning_rate: 0.3,
            iterations: 10_000,
            ..TrainConfig::default()
        };
        let reg = QueryReg {
            query: q.clone(),
            sign,
            lambda: Some((4.0, 0.02)),
        };
        let report = fit(
            &mut model,
            &[(no_intervention(), data.clone())],
            Some(&reg),
            &config,
        )
        .unwrap();
        assert!(
            report.data_loss < report.data_entropy + 0.02,
            "sign {sign}: data loss {} vs entropy {}",
            report.data_loss,
            report.data_entropy
        );
        results.push(report.query_value.unwrap());
    }
    assert_close(results[0], 0.95, 0.05, "maximized P(Y_{X=1}=1)");
    assert_close(results[1], 0.29, 0.05, "minimized P(Y_{X=1}=1)");
}

#[test]
fn fit_backdoor_graph_pins_identified_query() {
    let q = parse_query("P(Y_{X=1}=1)").unwrap();
    let data = encode_scm(&backdoor())
        .unwrap()
        .induced_pmf(&no_intervention())
        .unwrap();
    for sign in [1.0, -1.0] {
        let mut model = build_ncm(
            &cdag(&["R", "X", "Y"], &[("R", "X"), ("X", "Y")], &[("R", "Y")]),
            &binary_domains(&["R", "X", "Y"]),
            &TrainConfig {
                seed: 11,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        // Gentler pressure with a long decay tail: once λ fades the
        // cross-entropy term re-tightens the fit, and a fitted model on this
        // graph has no freedom left in the query.
        let config = TrainConfig {
            learning_rate: 0.3,
            iterations: 8000,
            ..TrainConfig::default()
        };
        let reg = QueryReg {
            query: q.clone(),
            sign,
            lambda: Some((0.5, 1e-5)),
        };
        let report = fit(
            &mut model,
            &[(no_intervention(), data.clone())],
            Some(&reg),
            &config,
        )
        .unwrap();
        assert!(
            report.data_loss < report.data_entropy + 0.01,
            "sign {sign}: data loss {} vs entropy {}",
            report.data_loss,
            report.data_entropy
        );
        let value = report.query_value.unwrap();
        assert_close(value, 0.5, 0.05, "identified query under pressure");
    }
}

#[test]
fn stochastic_mode_converges_too() {
    let mut model = build_ncm(
        &cdag(&["X", "Y"], &[("X", "Y")], &[]),
        &binary_domains(&["X", "Y"]),
        &TrainConfig {
            seed: 5,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    let data = Pmf::point(vec!["X".into(), "Y".into()], vec![1, 1]).unwrap();
    let config = TrainConfig {
        learning_rate: 0.5,
        iterations: 6000,
        mode: FitMode::Stochastic { batch_size: 16 },
        seed: 13,
        ..TrainConfig::default()
    };
    let report = fit(&mut model, &[(no_intervention(), data)], None, &config).unwrap();
    assert!(
        report.data_loss < 5e-3,
        "stochastic fit should converge, got {}",
        report.data_loss
    );
}

#[test]
fn runaway_learning_rate_reports_divergence() {
    let mut model =
        build_ncm(&bow(), &binary_domains(&["X", "Y"]), &TrainConfig::default()).unwrap();
    let config = TrainConfig {
        learning_rate: 1e9,
        iterations: 200,
        ..TrainConfig::default()
    };
    match fit(&mut model, &[(no_intervention(), fig6d_data())], None, &config) {
        Err(NcmError::Divergence { .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}

// ----------------------------------------------------------------- sampling

#[test]
fn sampling_under_do_matches_exact_probability() {
    let model = encode_scm(&backdoor()).unwrap();
    let q = parse_query("P(Y_{X=1}=1)").unwrap();
    let exact = model.ctf_pmf(&q).unwrap();

    let mut intervention = BTreeMap::new();
    intervention.insert("X".to_string(), 1);
    let n = 4000;
    let draws = model
        .sample(&[], &intervention, n, 0xA11CE, &SampleOpts::default())
        .unwrap();
    let hits = draws.iter().filter(|a| a["Y"] == 1).count();
    let freq = hits as f64 / n as f64;
    let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
    assert_close(freq, exact, 3.0 * sigma, "do(X=1) sampling frequency");
}

#[test]
fn conditioning_on_a_certain_event_never_rejects() {
    let model = encode_scm(&m1()).unwrap();
    // The context event holds in its own world by construction.
    let q = parse_query("P(X_{X=1}=1)").unwrap();
    let n = 500;
    let opts = SampleOpts {
        max_attempts: n, // any rejection would starve the run
        ..SampleOpts::default()
    };
    let draws = model
        .sample(&q.events, &no_intervention(), n, 17, &opts)
        .unwrap();
    assert_eq!(draws.len(), n);
}

#[test]
fn counterfactual_conditioning_matches_exact_ratio() {
    let model = encode_scm(&backdoor()).unwrap();
    // P(Y_{X=1}=1 | X=0) = 0.21/0.66 = 7/22.
    let q = parse_query("P(Y_{X=1}=1 | X=0)").unwrap();
    let exact = model.ctf_pmf(&q).unwrap();
    assert_close(exact, 7.0 / 22.0, 1e-9, "conditional counterfactual");

    let context = parse_query("P(X=0)").unwrap().events;
    let mut intervention = BTreeMap::new();
    intervention.insert("X".to_string(), 1);
    let n = 4000;
    let draws = model
        .sample(&context, &intervention, n, 0xBEEF, &SampleOpts::default())
        .unwrap();
    let freq = draws.iter().filter(|a| a["Y"] == 1).count() as f64 / n as f64;
    let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
    assert_close(freq, exact, 3.0 * sigma, "conditioned sampling frequency");
}

#[test]
fn impossible_context_errors_out() {
    let model = encode_scm(&m1()).unwrap();
    let context = parse_query("P(X=0, X=1)").unwrap().events;
    let opts = SampleOpts {
        max_attempts: 20_000,
        ..SampleOpts::default()
    };
    match model.sample(&context, &no_intervention(), 10, 1, &opts) {
        Err(NcmError::AcceptanceTooLow { accepted, .. }) => assert_eq!(accepted, 0),
        other => panic!("expected acceptance error, got {other:?}"),
    }
}

// -------------------------------------------------------------- checkpoints

#[test]
fn checkpoint_roundtrip_preserves_the_model() {
    let model = build_ncm(
        &cdag(&["R", "X", "Y"], &[("R", "X"), ("X", "Y")], &[("R", "Y")]),
        &binary_domains(&["R", "X", "Y"]),
        &TrainConfig {
            seed: 99,
            ..TrainConfig::default()
        },
    )
    .unwrap();

    let mut buf = Vec::new();
    model.save_checkpoint(&mut buf).unwrap();
    let restored = Ncm::load_checkpoint(buf.as_slice()).unwrap();

    assert_eq!(model.flat_logits(), restored.flat_logits());
    assert_eq!(model.config().seed, restored.config().seed);
    let a = model.induced_pmf(&no_intervention()).unwrap();
    let b = restored.induced_pmf(&no_intervention()).unwrap();
    assert!(a.max_abs_diff(&b).unwrap() == 0.0);
}

#[test]
fn checkpoint_rejects_unknown_format() {
    let model = build_ncm(&bow(), &binary_domains(&["X", "Y"]), &TrainConfig::default()).unwrap();
    let mut buf = Vec::new();
    model.save_checkpoint(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap().replace("ncm-checkpoint-v1", "bogus");
    assert!(Ncm::load_checkpoint(text.as_bytes()).is_err());
}

// ----------------------------------------------------------- representation

fn two_blob_data(seed: u64, n_per: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for i in 0..2 * n_per {
        let label = i % 2;
        let center = if label == 0 { -1.2 } else { 1.2 };
        let v: Vec<f64> = (0..dim)
            .map(|_| center + rng.random_range(-0.5..0.5))
            .collect();
        vectors.push(v);
        labels.push(label);
    }
    (vectors, labels)
}

#[test]
fn identity_capacity_autoencoder_roundtrips() {
    let (vectors, _) = two_blob_data(21, 20, 3);
    let config = RepConfig {
        rep_dim: 3,
        learning_rate: 0.05,
        iterations: 8000,
        lambda_r: 0.0,
        seed: 2,
    };
    let rep_map = fit_representation(
        &[ClusterData {
            cluster: "C".into(),
            vectors: vectors.clone(),
            labels: None,
        }],
        &config,
    )
    .unwrap();
    let rep = &rep_map.reps[0];
    assert!(
        rep.reconstruction_error < 1e-4,
        "full-capacity reconstruction should be near-exact, got {}",
        rep.reconstruction_error
    );
    let round = rep.decode(&rep.encode(&vectors[0]));
    for (a, b) in round.iter().zip(&vectors[0]) {
        assert!((a - b).abs() < 0.05);
    }
}

#[test]
fn auxiliary_head_keeps_probe_accuracy() {
    let (vectors, labels) = two_blob_data(33, 40, 4);
    let raw_acc = linear_probe_accuracy(&vectors, &labels).unwrap();
    assert!(raw_acc > 0.9, "raw probe accuracy {raw_acc}");

    let config = RepConfig {
        rep_dim: 2,
        learning_rate: 0.05,
        iterations: 8000,
        lambda_r: 0.1,
        seed: 4,
    };
    let rep_map = fit_representation(
        &[ClusterData {
            cluster: "C".into(),
            vectors: vectors.clone(),
            labels: Some(labels.clone()),
        }],
        &config,
    )
    .unwrap();
    let rep = &rep_map.reps[0];
    let encoded: Vec<Vec<f64>> = vectors.iter().map(|v| rep.encode(v)).collect();
    let rep_acc = linear_probe_accuracy(&encoded, &labels).unwrap();
    assert!(rep_acc > 0.9, "representation probe accuracy {rep_acc}");
    assert!(
        rep_acc >= raw_acc - 0.05,
        "representation degraded the probe: {rep_acc} vs raw {raw_acc}"
    );
}

#[test]
fn zero_aux_weight_reduces_to_pure_reconstruction() {
    let (vectors, labels) = two_blob_data(44, 20, 3);
    let config = RepConfig {
        rep_dim: 3,
        learning_rate: 0.05,
        iterations: 3000,
        lambda_r: 0.0,
        seed: 6,
    };
    let with_labels = fit_representation(
        &[ClusterData {
            cluster: "C".into(),
            vectors: vectors.clone(),
            labels: Some(labels),
        }],
        &config,
    )
    .unwrap();
    let without = fit_representation(
        &[ClusterData {
            cluster: "C".into(),
            vectors,
            labels: None,
        }],
        &config,
    )
    .unwrap();
    // λ_r = 0 must ignore labels entirely, draw for draw.
    assert_eq!(
        with_labels.reps[0].reconstruction_error,
        without.reps[0].reconstruction_error
    );
    assert!(with_labels.reps[0].aux_weight.is_none());
}

