//! Hand-checked end-to-end values for the running example models.

use std::collections::BTreeMap;

use scm_core::{parse_query, Domain, ExogenousBlock, MechanismSpec, Scm, Variable};

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

/// Drug trial: recovery depends on treatment and a side effect, confounded
/// with the patient's initial condition.
fn drug() -> Scm {
    Scm::new(
        vec![bit("R"), bit("A"), bit("B"), bit("Y")],
        vec![
            block("U_RY", 0.5),
            block("U_A", 0.2),
            block("U_B", 0.2),
            block("U_Y", 0.1),
        ],
        vec![
            MechanismSpec::from_expr("R", &[], &["U_RY"], "U_RY"),
            MechanismSpec::from_expr("A", &["R"], &["U_A"], "R ^ U_A"),
            MechanismSpec::from_expr("B", &["R", "A"], &["U_B"], "(R & A) ^ U_B"),
            MechanismSpec::from_expr("Y", &["A", "B"], &["U_RY", "U_Y"], "((A & B) & U_RY) ^ U_Y"),
        ],
    )
    .unwrap()
}

fn cholesterol() -> Scm {
    Scm::new(
        vec![bit("X"), bit("HDL"), bit("LDL"), bit("Y")],
        vec![
            block("U_X", 0.5),
            block("U_C1", 0.1),
            block("U_C2", 0.1),
            block("U_Y", 0.1),
        ],
        vec![
            MechanismSpec::from_expr("X", &[], &["U_X"], "U_X"),
            MechanismSpec::from_expr("HDL", &["X"], &["U_C1"], "X ^ U_C1"),
            MechanismSpec::from_expr("LDL", &["X"], &["U_C2"], "X ^ U_C2"),
            MechanismSpec::from_expr("Y", &["HDL", "LDL"], &["U_Y"], "(LDL & !HDL) ^ U_Y"),
        ],
    )
    .unwrap()
}

/// Two models over the bow graph that agree observationally but disagree on
/// the effect of treatment.
fn bow_pair() -> (Scm, Scm) {
    let build = |y_expr: &str| {
        Scm::new(
            vec![bit("X"), bit("Y")],
            vec![
                block("U_XY", 0.34),
                block("U_Y0", 0.1),
                block("U_Y1", 29.0 / 34.0),
            ],
            vec![
                MechanismSpec::from_expr("X", &[], &["U_XY"], "U_XY"),
                MechanismSpec::from_expr("Y", &["X"], &["U_XY", "U_Y0", "U_Y1"], y_expr),
            ],
        )
        .unwrap()
    };
    (
        build("U_XY ? U_Y1 : (X | U_Y0)"),
        build("U_XY ? U_Y1 : (!X & U_Y0)"),
    )
}

const UNIT_TABLE: [([i64; 4], [i64; 4], i64, i64, f64); 16] = [
    ([0, 0, 0, 0], [0, 0, 0, 0], 0, 0, 0.288),
    ([0, 0, 0, 1], [0, 0, 0, 1], 1, 1, 0.032),
    ([0, 0, 1, 0], [0, 0, 1, 0], 0, 0, 0.072),
    ([0, 0, 1, 1], [0, 0, 1, 1], 1, 1, 0.008),
    ([0, 1, 0, 0], [0, 1, 0, 0], 0, 0, 0.072),
    ([0, 1, 0, 1], [0, 1, 0, 1], 1, 1, 0.008),
    ([0, 1, 1, 0], [0, 1, 1, 0], 0, 0, 0.018),
    ([0, 1, 1, 1], [0, 1, 1, 1], 1, 1, 0.002),
    ([1, 0, 0, 0], [1, 1, 1, 1], 0, 1, 0.288),
    ([1, 0, 0, 1], [1, 1, 1, 0], 1, 0, 0.032),
    ([1, 0, 1, 0], [1, 1, 0, 0], 0, 1, 0.072),
    ([1, 0, 1, 1], [1, 1, 0, 1], 1, 0, 0.008),
    ([1, 1, 0, 0], [1, 0, 0, 0], 0, 1, 0.072),
    ([1, 1, 0, 1], [1, 0, 0, 1], 1, 0, 0.008),
    ([1, 1, 1, 0], [1, 0, 1, 0], 0, 1, 0.018),
    ([1, 1, 1, 1], [1, 0, 1, 1], 1, 0, 0.002),
];

#[test]
fn drug_unit_table() {
    let scm = drug();
    let no_drug: BTreeMap<String, i64> = [("A".to_string(), 0), ("B".to_string(), 0)].into();
    let all_drug: BTreeMap<String, i64> = [("A".to_string(), 1), ("B".to_string(), 1)].into();
    for (u_vals, expect, y00, y11, p) in UNIT_TABLE {
        let u: BTreeMap<String, i64> = [
            ("U_RY".to_string(), u_vals[0]),
            ("U_A".to_string(), u_vals[1]),
            ("U_B".to_string(), u_vals[2]),
            ("U_Y".to_string(), u_vals[3]),
        ]
        .into();
        let obs = scm.evaluate_unit(&u, &BTreeMap::new()).unwrap();
        assert_eq!(
            [obs["R"], obs["A"], obs["B"], obs["Y"]],
            expect,
            "observational solution for u={u_vals:?}"
        );
        assert_eq!(scm.evaluate_unit(&u, &no_drug).unwrap()["Y"], y00);
        assert_eq!(scm.evaluate_unit(&u, &all_drug).unwrap()["Y"], y11);

        let mut p_unit = 1.0;
        scm.for_each_exogenous(|cand, prob| {
            if *cand == u {
                p_unit = prob;
            }
        });
        assert!(
            (p_unit - p).abs() < 1e-12,
            "unit probability for u={u_vals:?}: {p_unit} vs {p}"
        );
    }
}

#[test]
fn drug_printed_query_values() {
    let scm = drug();
    let cond = scm
        .ctf_prob(&parse_query("P(Y=1 | A=1, B=1)").unwrap())
        .unwrap();
    assert!((cond - 0.852941).abs() < 1e-6);
    assert!((cond - 29.0 / 34.0).abs() < 1e-12);

    let effect = scm
        .ctf_prob(&parse_query("P(Y_{A=1,B=1}=1)").unwrap())
        .unwrap();
    assert!((effect - 0.5).abs() < 1e-12);
}

#[test]
fn drug_observational_joint() {
    let golden: [f64; 16] = [
        0.288, 0.032, 0.072, 0.008, 0.072, 0.008, 0.018, 0.002, 0.072, 0.008, 0.018, 0.002,
        0.072, 0.008, 0.032, 0.288,
    ];
    let pmf = drug()
        .layer_pmf(
            &["R".into(), "A".into(), "B".into(), "Y".into()],
            &BTreeMap::new(),
        )
        .unwrap();
    for (row, expect) in golden.iter().enumerate() {
        let key = [
            (row >> 3 & 1) as i64,
            (row >> 2 & 1) as i64,
            (row >> 1 & 1) as i64,
            (row & 1) as i64,
        ];
        assert!(
            (pmf.prob(&key) - expect).abs() < 1e-12,
            "P(R,A,B,Y = {key:?})"
        );
    }
}

#[test]
fn drug_induced_diagram() {
    let g = drug().induced_diagram();
    let dir: Vec<(&str, &str)> = g
        .directed()
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    assert_eq!(
        dir,
        vec![("A", "B"), ("A", "Y"), ("B", "Y"), ("R", "A"), ("R", "B")]
    );
    assert_eq!(g.bidirected().len(), 1);
    assert!(g.has_bidirected("R", "Y"));
}

#[test]
fn drug_response_marginal_is_even() {
    let pmf = drug().functional_ctf_pmf().unwrap();
    let m = pmf.marginal(&["Y[A=1,B=1]".into()]).unwrap();
    assert!((m.prob(&[0]) - 0.5).abs() < 1e-12);
    assert!((m.prob(&[1]) - 0.5).abs() < 1e-12);
}

#[test]
fn bow_pair_agrees_observationally_but_not_interventionally() {
    let (m1, m2) = bow_pair();
    for g in [m1.induced_diagram(), m2.induced_diagram()] {
        assert_eq!(g.directed().len(), 1);
        assert!(g.has_bidirected("X", "Y"));
    }

    let golden = [(0, 0, 0.594), (0, 1, 0.066), (1, 0, 0.05), (1, 1, 0.29)];
    for scm in [&m1, &m2] {
        let pmf = scm
            .layer_pmf(&["X".into(), "Y".into()], &BTreeMap::new())
            .unwrap();
        for (x, y, p) in golden {
            assert!((pmf.prob(&[x, y]) - p).abs() < 1e-9, "P(X={x},Y={y})");
        }
    }

    let q = parse_query("P(Y_{X=1}=1)").unwrap();
    assert!((m1.ctf_prob(&q).unwrap() - 0.95).abs() < 1e-9);
    assert!((m2.ctf_prob(&q).unwrap() - 0.29).abs() < 1e-9);
}

#[test]
fn cholesterol_fraction_effects() {
    let scm = cholesterol();
    let good: BTreeMap<String, i64> = [("HDL".to_string(), 0), ("LDL".to_string(), 1)].into();
    let bad: BTreeMap<String, i64> = [("HDL".to_string(), 1), ("LDL".to_string(), 0)].into();
    let p_good = scm.layer_pmf(&["Y".into()], &good).unwrap();
    let p_bad = scm.layer_pmf(&["Y".into()], &bad).unwrap();
    assert!((p_good.prob(&[1]) - 0.9).abs() < 1e-12);
    assert!((p_bad.prob(&[1]) - 0.1).abs() < 1e-12);
}

#[test]
fn model_json_round_trip_preserves_distributions() {
    let scm = drug();
    let back = Scm::from_json(&scm.to_json()).unwrap();
    let q = parse_query("P(Y_{A=1,B=1}=1, Y=0 | R=1)").unwrap();
    assert_eq!(scm.ctf_prob(&q).unwrap(), back.ctf_prob(&q).unwrap());
    assert_eq!(scm.induced_diagram(), back.induced_diagram());
}
