//! Hand-checked values for the running examples: the drug-trial model with
//! its treatment/side-effect clustering, the cholesterol model with the two
//! candidate composite scores, and the voting model's symmetry orbits.

use std::collections::BTreeMap;

use abstraction::{
    apply_tau, build_tau, check_aic, check_data_aic, check_l3_tau_consistency_functional,
    check_layer_tau_consistency, check_q_tau_consistency, construct_abstraction, lift_query,
    lower_query, orbit_intra_clustering, q_tau_values, AbstractionError, Cluster, ClusterBlocks,
    ConstructiveTau, DataAicMode, InterClustering, IntraBlock, IntraClustering, EXACT_TOL,
};
use scm_core::{
    parse_query, CtfEvent, Domain, ExogenousBlock, MechanismSpec, Pmf, Scm, Value, Variable,
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

/// Treatment cluster X = {A,B} collapsing to "took the full course" (both
/// one) vs "did not"; recovery cluster keeps Y's values. R is projected away.
fn drug_tau() -> ConstructiveTau {
    let inter = InterClustering::new(vec![
        Cluster { name: "X".into(), members: vec!["A".into(), "B".into()] },
        Cluster { name: "Y".into(), members: vec!["Y".into()] },
    ])
    .unwrap();
    let intra = IntraClustering::new(vec![
        ClusterBlocks {
            cluster: "X".into(),
            blocks: vec![
                IntraBlock { label: 0, values: vec![vec![0, 0], vec![0, 1], vec![1, 0]] },
                IntraBlock { label: 1, values: vec![vec![1, 1]] },
            ],
        },
        ClusterBlocks {
            cluster: "Y".into(),
            blocks: vec![
                IntraBlock { label: 0, values: vec![vec![0]] },
                IntraBlock { label: 1, values: vec![vec![1]] },
            ],
        },
    ])
    .unwrap();
    build_tau(&inter, &intra).unwrap()
}

/// The abstract drug model written down directly: X carries the observed
/// frequency of the full course, and Y responds to X with the observed
/// conditional frequencies. Observationally indistinguishable from the
/// low-level model, but wrong about interventions on X.
fn hand_high_model() -> Scm {
    Scm::new(
        vec![bit("X"), bit("Y")],
        vec![
            block("U_X", 0.34),
            block("U_Y0", 0.1),
            block("U_Y1", 29.0 / 34.0),
        ],
        vec![
            MechanismSpec::from_expr("X", &[], &["U_X"], "U_X"),
            MechanismSpec::from_expr("Y", &["X"], &["U_Y0", "U_Y1"], "X ? U_Y1 : U_Y0"),
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

fn cholesterol_inter(score: &str) -> InterClustering {
    InterClustering::new(vec![
        Cluster { name: "X".into(), members: vec!["X".into()] },
        Cluster { name: score.into(), members: vec!["HDL".into(), "LDL".into()] },
        Cluster { name: "Y".into(), members: vec!["Y".into()] },
    ])
    .unwrap()
}

fn bit_singleton_blocks(cluster: &str) -> ClusterBlocks {
    ClusterBlocks {
        cluster: cluster.into(),
        blocks: vec![
            IntraBlock { label: 0, values: vec![vec![0]] },
            IntraBlock { label: 1, values: vec![vec![1]] },
        ],
    }
}

/// TC = HDL + LDL: sums the two scores, merging (0,1) with (1,0).
fn cholesterol_tc_tau() -> ConstructiveTau {
    let intra = IntraClustering::new(vec![
        bit_singleton_blocks("X"),
        ClusterBlocks {
            cluster: "TC".into(),
            blocks: vec![
                IntraBlock { label: 0, values: vec![vec![0, 0]] },
                IntraBlock { label: 1, values: vec![vec![0, 1], vec![1, 0]] },
                IntraBlock { label: 2, values: vec![vec![1, 1]] },
            ],
        },
        bit_singleton_blocks("Y"),
    ])
    .unwrap();
    build_tau(&cholesterol_inter("TC"), &intra).unwrap()
}

/// Z = LDL − HDL: merging (0,0) with (1,1) instead, which the downstream
/// mechanism cannot distinguish.
fn cholesterol_z_tau() -> ConstructiveTau {
    let intra = IntraClustering::new(vec![
        bit_singleton_blocks("X"),
        ClusterBlocks {
            cluster: "Z".into(),
            blocks: vec![
                IntraBlock { label: -1, values: vec![vec![1, 0]] },
                IntraBlock { label: 0, values: vec![vec![0, 0], vec![1, 1]] },
                IntraBlock { label: 1, values: vec![vec![0, 1]] },
            ],
        },
        bit_singleton_blocks("Y"),
    ])
    .unwrap();
    build_tau(&cholesterol_inter("Z"), &intra).unwrap()
}

fn assign(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn drug_tau_maps_worked_assignments() {
    let tau = drug_tau();
    let v = assign(&[("R", 1), ("A", 0), ("B", 1), ("Y", 1)]);
    assert_eq!(apply_tau(&tau, &v).unwrap(), assign(&[("X", 0), ("Y", 1)]));
    let v = assign(&[("R", 1), ("A", 1), ("B", 1), ("Y", 0)]);
    assert_eq!(apply_tau(&tau, &v).unwrap(), assign(&[("X", 1), ("Y", 0)]));
}

#[test]
fn drug_query_lifts() {
    let tau = drug_tau();
    let q = parse_query("P(Y_{A=1,B=1}=1)").unwrap();
    let lifted = lift_query(&tau, &q).unwrap();
    assert_eq!(
        lifted.events,
        vec![CtfEvent {
            var: "Y".into(),
            intervention: vec![("X".into(), 1)],
            value: 1,
        }]
    );
    assert!(lifted.given.is_empty());

    let q = parse_query("P(Y=1,A=1,B=1)").unwrap();
    let lifted = lift_query(&tau, &q).unwrap();
    assert_eq!(
        lifted.events,
        vec![
            CtfEvent { var: "X".into(), intervention: vec![], value: 1 },
            CtfEvent { var: "Y".into(), intervention: vec![], value: 1 },
        ]
    );
}

#[test]
fn misaligned_query_is_rejected() {
    let tau = drug_tau();
    let q = parse_query("P(Y=1,A=1)").unwrap();
    match lift_query(&tau, &q) {
        Err(AbstractionError::MisalignedQuery(msg)) => {
            assert!(msg.contains("X"), "message should name the split cluster: {msg}");
        }
        other => panic!("expected misaligned-query error, got {other:?}"),
    }
}

#[test]
fn identity_tau_lifts_to_renamed_query() {
    let scm = drug();
    let names: Vec<String> = scm.variables().iter().map(|v| v.name.clone()).collect();
    let inter = InterClustering::singletons(&names);
    let intra = IntraClustering::singleton_blocks(
        &scm
            .variables()
            .iter()
            .map(|v| (v.name.clone(), vec![v.domain.clone()]))
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let tau = build_tau(&inter, &intra).unwrap();
    let q = parse_query("P(Y_{A=1,B=1}=1, R=0)").unwrap();
    assert_eq!(lift_query(&tau, &q).unwrap(), q);
    // Lowering the same high query recovers it as the single preimage term.
    let lowered = lower_query(&tau, &q, scm.variables()).unwrap();
    assert_eq!(lowered.numerator.len(), 1);
    assert!(lowered.denominator.is_empty());
    let value = scm.ctf_prob(&q).unwrap();
    let roundtrip = scm.ctf_prob(&lowered.numerator[0]).unwrap();
    assert!((value - roundtrip).abs() < 1e-12);
}

#[test]
fn hand_high_model_is_q_consistent_but_not_q_prime() {
    let m_l = drug();
    let m_h = hand_high_model();
    let tau = drug_tau();

    let q = parse_query("P(Y=1,A=1,B=1)").unwrap();
    let (low, high) = q_tau_values(&m_l, &m_h, &tau, &q).unwrap();
    assert!((low - 0.29).abs() < 1e-9, "low {low}");
    assert!((high - 0.29).abs() < 1e-9, "high {high}");
    assert!(check_q_tau_consistency(&m_l, &m_h, &tau, &q, EXACT_TOL).unwrap());

    let q_prime = parse_query("P(Y_{A=1,B=1}=1)").unwrap();
    let (low, high) = q_tau_values(&m_l, &m_h, &tau, &q_prime).unwrap();
    assert!((low - 0.5).abs() < 1e-9, "low {low}");
    assert!((high - 29.0 / 34.0).abs() < 1e-9, "high {high}");
    assert!(!check_q_tau_consistency(&m_l, &m_h, &tau, &q_prime, EXACT_TOL).unwrap());
}

#[test]
fn hand_high_model_is_layer_one_but_not_layer_two_consistent() {
    let m_l = drug();
    let m_h = hand_high_model();
    let tau = drug_tau();
    assert!(check_layer_tau_consistency(&m_l, &m_h, &tau, 1).unwrap());
    assert!(!check_layer_tau_consistency(&m_l, &m_h, &tau, 2).unwrap());
}

#[test]
fn aic_holds_for_drug_clusters() {
    let report = check_aic(&drug(), &drug_tau()).unwrap();
    assert!(report.holds);
    assert!(report.witness.is_none());
}

#[test]
fn aic_rejects_total_cholesterol() {
    let report = check_aic(&cholesterol(), &cholesterol_tc_tau()).unwrap();
    assert!(!report.holds);
    let w = report.witness.expect("violation must carry a witness");
    assert_eq!(w.v1["HDL"], 0);
    assert_eq!(w.v1["LDL"], 1);
    assert_eq!(w.v2["HDL"], 1);
    assert_eq!(w.v2["LDL"], 0);
    // The downstream cluster {Y} is where the merged scores disagree.
    assert_eq!(w.cluster, Some(2));
}

#[test]
fn aic_accepts_ldl_minus_hdl() {
    let report = check_aic(&cholesterol(), &cholesterol_z_tau()).unwrap();
    assert!(report.holds, "witness: {:?}", report.witness);
}

#[test]
fn constructed_drug_model_matches_worked_mechanisms() {
    let m_l = drug();
    let (tau, m_h) = construct_abstraction(
        &m_l,
        drug_tau().inter(),
        drug_tau().intra(),
    )
    .unwrap();

    // X: no high parents; reads the treatment-side exogenous blocks.
    let fx = m_h.mechanism("X").unwrap();
    assert!(fx.endo_parents.is_empty());
    assert_eq!(fx.exo_parents, vec!["U_RY", "U_A", "U_B"]);
    for u_ry in [0i64, 1] {
        for u_a in [0i64, 1] {
            for u_b in [0i64, 1] {
                let a = u_ry ^ u_a;
                let b = (u_ry & a) ^ u_b;
                let expect = i64::from(a == 1 && b == 1);
                let key = format!("{u_ry},{u_a},{u_b}");
                assert_eq!(fx.table[&key], expect, "f_X at {key}");
            }
        }
    }

    // Y: depends on the treatment cluster and the shared confounder block.
    let fy = m_h.mechanism("Y").unwrap();
    assert_eq!(fy.endo_parents, vec!["X"]);
    assert_eq!(fy.exo_parents, vec!["U_RY", "U_Y"]);
    for x in [0i64, 1] {
        for u_ry in [0i64, 1] {
            for u_y in [0i64, 1] {
                let key = format!("{x},{u_ry},{u_y}");
                assert_eq!(fy.table[&key], (x & u_ry) ^ u_y, "f_Y at {key}");
            }
        }
    }

    // Shared U_RY makes the abstract diagram a bow.
    let diagram = m_h.induced_diagram();
    assert!(diagram.directed().contains(&("X".into(), "Y".into())));
    assert!(diagram.has_bidirected("X", "Y"));

    // The abstract interventional value matches the low-level one.
    let high = m_h.ctf_prob(&parse_query("P(Y_{X=1}=1)").unwrap()).unwrap();
    let low = m_l.ctf_prob(&parse_query("P(Y_{A=1,B=1}=1)").unwrap()).unwrap();
    assert!((high - 0.5).abs() < 1e-9, "high {high}");
    assert!((high - low).abs() < 1e-9);

    // And the pair passes every layer check.
    assert!(check_layer_tau_consistency(&m_l, &m_h, &tau, 1).unwrap());
    assert!(check_layer_tau_consistency(&m_l, &m_h, &tau, 2).unwrap());
    assert!(check_layer_tau_consistency(&m_l, &m_h, &tau, 3).unwrap());
    assert!(check_l3_tau_consistency_functional(&m_l, &m_h, &tau, EXACT_TOL).unwrap());
}

#[test]
fn constructed_cholesterol_z_model_matches_direct_interventions() {
    let m_l = cholesterol();
    let tau_spec = cholesterol_z_tau();
    let (_, m_h) =
        construct_abstraction(&m_l, tau_spec.inter(), tau_spec.intra()).unwrap();

    let z1 = m_h.ctf_prob(&parse_query("P(Y_{Z=1}=1)").unwrap()).unwrap();
    let zm1 = m_h.ctf_prob(&parse_query("P(Y_{Z=-1}=1)").unwrap()).unwrap();
    assert!((z1 - 0.9).abs() < 1e-9, "P(Y | do Z=1) = {z1}");
    assert!((zm1 - 0.1).abs() < 1e-9, "P(Y | do Z=-1) = {zm1}");

    // Direct low-level check of the same interventions.
    let low_z1 = m_l.ctf_prob(&parse_query("P(Y_{HDL=0,LDL=1}=1)").unwrap()).unwrap();
    let low_zm1 = m_l.ctf_prob(&parse_query("P(Y_{HDL=1,LDL=0}=1)").unwrap()).unwrap();
    assert!((z1 - low_z1).abs() < 1e-9);
    assert!((zm1 - low_zm1).abs() < 1e-9);
}

#[test]
fn construct_abstraction_rejects_total_cholesterol() {
    let tau_spec = cholesterol_tc_tau();
    match construct_abstraction(&cholesterol(), tau_spec.inter(), tau_spec.intra()) {
        Err(AbstractionError::AicViolation(report)) => assert!(!report.holds),
        other => panic!("expected invariance violation, got {other:?}"),
    }
}

/// Interventional family over every union of clusters, straight from the
/// model.
fn interventional_family(
    scm: &Scm,
    tau: &ConstructiveTau,
) -> BTreeMap<BTreeMap<String, Value>, Pmf> {
    let over: Vec<String> = scm.variables().iter().map(|v| v.name.clone()).collect();
    let clusters = tau.inter().clusters();
    let mut dists = BTreeMap::new();
    dists.insert(BTreeMap::new(), scm.layer_pmf(&over, &BTreeMap::new()).unwrap());
    for mask in 1u64..(1 << clusters.len()) {
        let members: Vec<String> = (0..clusters.len())
            .filter(|i| mask & (1 << i) != 0)
            .flat_map(|i| clusters[i].members.iter().cloned())
            .collect();
        let domains: Vec<&Domain> = members
            .iter()
            .map(|m| &scm.variable(m).unwrap().domain)
            .collect();
        for values in scm_core::joint_assignments(&domains) {
            let x: BTreeMap<String, Value> =
                members.iter().cloned().zip(values).collect();
            let pmf = scm.layer_pmf(&over, &x).unwrap();
            dists.insert(x, pmf);
        }
    }
    dists
}

#[test]
fn data_aic_total_cholesterol_fails_interventionally() {
    let m_l = cholesterol();
    let tau = cholesterol_tc_tau();
    let dists = interventional_family(&m_l, &tau);

    // The two merged scores give opposite recovery rates under intervention.
    let d01 = &dists[&assign(&[("HDL", 0), ("LDL", 1)])];
    let d10 = &dists[&assign(&[("HDL", 1), ("LDL", 0)])];
    let y1 = assign(&[("Y", 1)]);
    assert!((d01.event_prob(&y1).unwrap() - 0.9).abs() < 1e-9);
    assert!((d10.event_prob(&y1).unwrap() - 0.1).abs() < 1e-9);

    let report = check_data_aic(&dists, &tau, DataAicMode::Interventional).unwrap();
    assert!(!report.holds);
    let w = report.witness.unwrap();
    assert_eq!(w.v1, assign(&[("HDL", 0), ("LDL", 1)]));
    assert_eq!(w.v2, assign(&[("HDL", 1), ("LDL", 0)]));
    assert!(w.high_value.is_some());
    assert!(w.cluster.is_none());
}

#[test]
fn data_aic_z_clustering_passes_interventionally_but_not_conditionally() {
    let m_l = cholesterol();
    let tau = cholesterol_z_tau();

    let dists = interventional_family(&m_l, &tau);
    let report = check_data_aic(&dists, &tau, DataAicMode::Interventional).unwrap();
    assert!(report.holds, "witness: {:?}", report.witness);

    // Conditioning is a different story: observing the two scores equal is
    // strong evidence about X, in opposite directions for (0,0) and (1,1),
    // even though interventions cannot tell them apart.
    let report = check_data_aic(&dists, &tau, DataAicMode::Conditional).unwrap();
    assert!(!report.holds);
    let w = report.witness.unwrap();
    assert_eq!(w.v1, assign(&[("HDL", 0), ("LDL", 0)]));
    assert_eq!(w.v2, assign(&[("HDL", 1), ("LDL", 1)]));
}

#[test]
fn data_aic_both_modes_pass_on_drug_clusters() {
    let m_l = drug();
    let tau = drug_tau();
    let dists = interventional_family(&m_l, &tau);
    for mode in [DataAicMode::Conditional, DataAicMode::Interventional] {
        let report = check_data_aic(&dists, &tau, mode).unwrap();
        assert!(report.holds, "{mode:?} witness: {:?}", report.witness);
    }
}

#[test]
fn data_aic_singleton_blocks_hold_trivially() {
    let m_l = cholesterol();
    let names: Vec<String> = m_l.variables().iter().map(|v| v.name.clone()).collect();
    let inter = InterClustering::singletons(&names);
    let intra = IntraClustering::singleton_blocks(
        &m_l
            .variables()
            .iter()
            .map(|v| (v.name.clone(), vec![v.domain.clone()]))
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let tau = build_tau(&inter, &intra).unwrap();
    let mut dists = BTreeMap::new();
    dists.insert(BTreeMap::new(), m_l.layer_pmf(&names, &BTreeMap::new()).unwrap());
    let report = check_data_aic(&dists, &tau, DataAicMode::Conditional).unwrap();
    assert!(report.holds);
}

#[test]
fn voting_orbits_satisfy_aic() {
    let m_l = Scm::new(
        vec![bit("X1"), bit("X2"), bit("Y")],
        vec![block("U_X1", 0.5), block("U_X2", 0.5), block("U_Y", 0.1)],
        vec![
            MechanismSpec::from_expr("X1", &[], &["U_X1"], "U_X1"),
            MechanismSpec::from_expr("X2", &[], &["U_X2"], "U_X2"),
            MechanismSpec::from_expr("Y", &["X1", "X2"], &["U_Y"], "(X1 & X2) ^ U_Y"),
        ],
    )
    .unwrap();

    // Swapping the two votes leaves the tally mechanism unchanged.
    let domains = vec![Domain::new(vec![0, 1]), Domain::new(vec![0, 1])];
    let swap: BTreeMap<Vec<Value>, Vec<Value>> = [
        (vec![0, 0], vec![0, 0]),
        (vec![0, 1], vec![1, 0]),
        (vec![1, 0], vec![0, 1]),
        (vec![1, 1], vec![1, 1]),
    ]
    .into_iter()
    .collect();
    let blocks = orbit_intra_clustering(&domains, &[swap]).unwrap();
    assert_eq!(
        blocks.iter().map(|b| b.values.clone()).collect::<Vec<_>>(),
        vec![
            vec![vec![0, 0]],
            vec![vec![0, 1], vec![1, 0]],
            vec![vec![1, 1]],
        ]
    );

    let inter = InterClustering::new(vec![
        Cluster { name: "V".into(), members: vec!["X1".into(), "X2".into()] },
        Cluster { name: "Y".into(), members: vec!["Y".into()] },
    ])
    .unwrap();
    let intra = IntraClustering::new(vec![
        ClusterBlocks { cluster: "V".into(), blocks },
        bit_singleton_blocks("Y"),
    ])
    .unwrap();
    let tau = build_tau(&inter, &intra).unwrap();
    let report = check_aic(&m_l, &tau).unwrap();
    assert!(report.holds, "witness: {:?}", report.witness);

    // And the constructed model answers the tally query like the low model.
    let (tau, m_h) = construct_abstraction(&m_l, tau.inter(), tau.intra()).unwrap();
    assert!(check_layer_tau_consistency(&m_l, &m_h, &tau, 2).unwrap());
}

#[test]
fn identity_clustering_reconstructs_equivalent_model() {
    let m_l = drug();
    let names: Vec<String> = m_l.variables().iter().map(|v| v.name.clone()).collect();
    let inter = InterClustering::singletons(&names);
    let intra = IntraClustering::singleton_blocks(
        &m_l
            .variables()
            .iter()
            .map(|v| (v.name.clone(), vec![v.domain.clone()]))
            .collect::<Vec<_>>(),
    )
    .unwrap();
    let (tau, m_h) = construct_abstraction(&m_l, &inter, &intra).unwrap();

    // Identical layer-2 behavior under every single intervention.
    for (x, v) in [("A", 0), ("A", 1), ("B", 1), ("R", 0)] {
        let mut intervention = BTreeMap::new();
        intervention.insert(x.to_string(), v);
        let low = m_l.layer_pmf(&names, &intervention).unwrap();
        let high = m_h.layer_pmf(&names, &intervention).unwrap();
        assert!(low.max_abs_diff(&high).unwrap() < 1e-12);
    }
    assert!(check_layer_tau_consistency(&m_l, &m_h, &tau, 3).unwrap());
    assert!(check_l3_tau_consistency_functional(&m_l, &m_h, &tau, EXACT_TOL).unwrap());
}

#[test]
fn aic_report_serializes_with_witness() {
    let report = check_aic(&cholesterol(), &cholesterol_tc_tau()).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: abstraction::AicReport = serde_json::from_str(&json).unwrap();
    assert_eq!(report, back);
    assert!(json.contains("\"holds\":false"));
}
