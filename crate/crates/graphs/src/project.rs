//! Latent projection: drop a set of variables from a diagram while keeping
//! every causal and confounding relationship among the rest.

use std::collections::BTreeSet;

use scm_core::CausalDiagram;

/// Project `g` onto `keep`. Dropped variables act as latents:
///
/// * `a → b` survives when a directed path runs from `a` to `b` entirely
///   through dropped intermediates;
/// * `a ↔ b` appears when a dropped variable is a common (latently mediated)
///   cause of both, or when an original bidirected edge connects two
///   variables that reach `a` and `b` through dropped directed paths.
///
/// A path with two or more bidirected edges does not confound: the dropped
/// variable between them is a collider.
pub fn latent_projection(g: &CausalDiagram, keep: &BTreeSet<String>) -> CausalDiagram {
    let nodes: Vec<String> = g
        .nodes()
        .iter()
        .filter(|n| keep.contains(*n))
        .cloned()
        .collect();
    let latent: BTreeSet<&str> = g
        .nodes()
        .iter()
        .filter(|n| !keep.contains(*n))
        .map(|n| n.as_str())
        .collect();

    // Kept nodes reachable from `start` along directed edges whose
    // intermediates are all latent.
    let reach = |start: &str| -> BTreeSet<String> {
        let mut found = BTreeSet::new();
        let mut visited: BTreeSet<&str> = BTreeSet::new();
        let mut stack: Vec<&str> = vec![start];
        while let Some(v) = stack.pop() {
            for c in g.children(v) {
                if keep.contains(c) {
                    found.insert(c.to_string());
                } else if visited.insert(c) {
                    stack.push(c);
                }
            }
        }
        found
    };

    let mut directed = BTreeSet::new();
    for a in &nodes {
        for b in reach(a) {
            if b != *a {
                directed.insert((a.clone(), b));
            }
        }
    }

    let mut bidirected: BTreeSet<(String, String)> = BTreeSet::new();
    let mut connect = |xs: &BTreeSet<String>, ys: &BTreeSet<String>| {
        for x in xs {
            for y in ys {
                if x != y {
                    let (a, b) = if x < y { (x, y) } else { (y, x) };
                    bidirected.insert((a.clone(), b.clone()));
                }
            }
        }
    };

    // Latent common causes.
    for &l in &latent {
        let r = reach(l);
        connect(&r, &r);
    }
    // Original bidirected edges, endpoints traced through latents.
    let endpoint_set = |v: &str| -> BTreeSet<String> {
        if keep.contains(v) {
            [v.to_string()].into()
        } else {
            reach(v)
        }
    };
    for (s, t) in g.bidirected() {
        connect(&endpoint_set(s), &endpoint_set(t));
    }

    CausalDiagram::new(nodes, directed, bidirected)
        .expect("projection of a valid diagram is valid")
}
