//! Maximal-clique enumeration for the bidirected part of a diagram.

use std::collections::BTreeSet;

/// All maximal cliques of the undirected graph given by `edges` over
/// `nodes`, as sorted member lists in lexicographic order. Vertices with no
/// edges come out as singleton cliques, so the result always covers every
/// node.
pub fn maximal_cliques(nodes: &[String], edges: &BTreeSet<(String, String)>) -> Vec<Vec<String>> {
    let index: std::collections::BTreeMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut adj = vec![BTreeSet::new(); nodes.len()];
    for (a, b) in edges {
        let (i, j) = (index[a.as_str()], index[b.as_str()]);
        adj[i].insert(j);
        adj[j].insert(i);
    }

    let mut found: Vec<Vec<usize>> = Vec::new();
    let p: BTreeSet<usize> = (0..nodes.len()).collect();
    bron_kerbosch(&adj, &mut Vec::new(), p, BTreeSet::new(), &mut found);

    let mut cliques: Vec<Vec<String>> = found
        .into_iter()
        .map(|mut c| {
            c.sort_unstable();
            c.into_iter().map(|i| nodes[i].clone()).collect::<Vec<_>>()
        })
        .collect();
    for c in &mut cliques {
        c.sort();
    }
    cliques.sort();
    cliques
}

// Pivoted Bron–Kerbosch; the pivot is the P∪X vertex covering the most of P
// (smallest index on ties), so recursion order is deterministic.
fn bron_kerbosch(
    adj: &[BTreeSet<usize>],
    r: &mut Vec<usize>,
    mut p: BTreeSet<usize>,
    mut x: BTreeSet<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() && x.is_empty() {
        out.push(r.clone());
        return;
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&v| (p.intersection(&adj[v]).count(), std::cmp::Reverse(v)))
        .expect("p or x nonempty");
    let candidates: Vec<usize> = p.difference(&adj[pivot]).copied().collect();
    for v in candidates {
        r.push(v);
        let p_next: BTreeSet<usize> = p.intersection(&adj[v]).copied().collect();
        let x_next: BTreeSet<usize> = x.intersection(&adj[v]).copied().collect();
        bron_kerbosch(adj, r, p_next, x_next, out);
        r.pop();
        p.remove(&v);
        x.insert(v);
    }
}
