//! Hypergraph storage and the bipartite (star) expansion.
//!
//! A [`Hypergraph`] stores hyperedges in canonical form: members strictly
//! increasing within each hyperedge, hyperedge order preserved as given.
//! Duplicate hyperedges are allowed (they act as multiplicity).
//!
//! All traversals — solvers, message passing, objective sums — run on the
//! [`BipartiteExpansion`], which lists (node, hyperedge) incidence pairs in a
//! fixed deterministic order and indexes them from both sides. Reductions
//! always walk these lists in storage order, which is what makes every
//! computation downstream bit-reproducible and lets
//! [`BipartiteExpansion::relabel_nodes`] commute with them exactly.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Hypergraph {
    num_nodes: usize,
    edges: Vec<Vec<u32>>,
    degrees: Vec<u32>,
}

impl Hypergraph {
    /// Build from raw member lists. Members are deduplicate-checked, bounds
    /// checked, and sorted into canonical (strictly increasing) order.
    pub fn build(num_nodes: usize, edges: Vec<Vec<usize>>) -> Result<Self> {
        let mut canon: Vec<Vec<u32>> = Vec::with_capacity(edges.len());
        let mut degrees = vec![0u32; num_nodes];
        for (e, members) in edges.into_iter().enumerate() {
            if members.is_empty() {
                return Err(Error::Validation(format!("hyperedge {e} is empty")));
            }
            let mut m: Vec<u32> = Vec::with_capacity(members.len());
            for v in members {
                if v >= num_nodes {
                    return Err(Error::Validation(format!(
                        "hyperedge {e} references node {v}, but num_nodes is {num_nodes}"
                    )));
                }
                m.push(v as u32);
            }
            m.sort_unstable();
            if m.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation(format!(
                    "hyperedge {e} contains a duplicate node"
                )));
            }
            for &v in &m {
                degrees[v as usize] += 1;
            }
            canon.push(m);
        }
        Ok(Hypergraph { num_nodes, edges: canon, degrees })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> &[u32] {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Vec<u32>] {
        &self.edges
    }

    /// Number of incident hyperedges per node.
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Total incidence count, `sum_e |e|` (= `sum_v d_v`).
    pub fn incidence_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn max_edge_size(&self) -> usize {
        self.edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn star_expansion(&self) -> BipartiteExpansion {
        BipartiteExpansion::from_edge_lists(self.num_nodes, &self.edges)
    }
}

/// Incidence structure of a hypergraph, indexed from both sides.
///
/// Pairs are stored hyperedge-major: all members of hyperedge 0 (in storage
/// order), then hyperedge 1, and so on. `pair_nodes[p]` / `pair_edges[p]`
/// give the endpoints of pair `p`. The node-side index lists each node's
/// pair positions in ascending pair order (so ascending hyperedge order).
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteExpansion {
    num_nodes: usize,
    num_edges: usize,
    pair_nodes: Vec<u32>,
    pair_edges: Vec<u32>,
    edge_offsets: Vec<usize>,
    node_offsets: Vec<usize>,
    node_pairs: Vec<u32>,
}

impl BipartiteExpansion {
    fn from_edge_lists(num_nodes: usize, edges: &[Vec<u32>]) -> Self {
        let pairs: usize = edges.iter().map(Vec::len).sum();
        let mut pair_nodes = Vec::with_capacity(pairs);
        let mut pair_edges = Vec::with_capacity(pairs);
        let mut edge_offsets = Vec::with_capacity(edges.len() + 1);
        edge_offsets.push(0usize);
        for (e, members) in edges.iter().enumerate() {
            for &v in members {
                pair_nodes.push(v);
                pair_edges.push(e as u32);
            }
            edge_offsets.push(pair_nodes.len());
        }
        let (node_offsets, node_pairs) = build_node_index(num_nodes, &pair_nodes);
        BipartiteExpansion {
            num_nodes,
            num_edges: edges.len(),
            pair_nodes,
            pair_edges,
            edge_offsets,
            node_offsets,
            node_pairs,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn num_pairs(&self) -> usize {
        self.pair_nodes.len()
    }

    /// Node endpoint of each pair, hyperedge-major order.
    pub fn pair_nodes(&self) -> &[u32] {
        &self.pair_nodes
    }

    /// Hyperedge endpoint of each pair.
    pub fn pair_edges(&self) -> &[u32] {
        &self.pair_edges
    }

    /// Pair positions belonging to hyperedge `e`.
    pub fn edge_range(&self, e: usize) -> std::ops::Range<usize> {
        self.edge_offsets[e]..self.edge_offsets[e + 1]
    }

    /// Member nodes of hyperedge `e`, in storage order.
    pub fn edge_members(&self, e: usize) -> &[u32] {
        &self.pair_nodes[self.edge_range(e)]
    }

    /// Pair positions incident to node `v`, ascending.
    pub fn node_pairs(&self, v: usize) -> &[u32] {
        &self.node_pairs[self.node_offsets[v]..self.node_offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.node_offsets[v + 1] - self.node_offsets[v]
    }

    pub fn degrees_f64(&self) -> Vec<f64> {
        (0..self.num_nodes).map(|v| self.degree(v) as f64).collect()
    }

    /// Rebuild the canonical hypergraph this expansion came from.
    pub fn to_hypergraph(&self) -> Hypergraph {
        let edges: Vec<Vec<usize>> = (0..self.num_edges)
            .map(|e| self.edge_members(e).iter().map(|&v| v as usize).collect())
            .collect();
        Hypergraph::build(self.num_nodes, edges).expect("expansion is always structurally valid")
    }

    /// Apply a node relabeling `perm[old] = new`.
    ///
    /// The pair sequence (and therefore every reduction order) is preserved,
    /// so any computation on the relabeled expansion is the bit-exact image of
    /// the original: this is the equivariance the solver and model tests rely
    /// on. `perm` must be a permutation of `0..num_nodes`.
    pub fn relabel_nodes(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.num_nodes {
            return Err(Error::Validation(format!(
                "permutation length {} does not match num_nodes {}",
                perm.len(),
                self.num_nodes
            )));
        }
        let mut seen = vec![false; self.num_nodes];
        for &p in perm {
            if p >= self.num_nodes || seen[p] {
                return Err(Error::Validation("not a permutation".into()));
            }
            seen[p] = true;
        }
        let pair_nodes: Vec<u32> = self.pair_nodes.iter().map(|&v| perm[v as usize] as u32).collect();
        let (node_offsets, node_pairs) = build_node_index(self.num_nodes, &pair_nodes);
        Ok(BipartiteExpansion {
            num_nodes: self.num_nodes,
            num_edges: self.num_edges,
            pair_nodes,
            pair_edges: self.pair_edges.clone(),
            edge_offsets: self.edge_offsets.clone(),
            node_offsets,
            node_pairs,
        })
    }
}

fn build_node_index(num_nodes: usize, pair_nodes: &[u32]) -> (Vec<usize>, Vec<u32>) {
    let mut counts = vec![0usize; num_nodes + 1];
    for &v in pair_nodes {
        counts[v as usize + 1] += 1;
    }
    for i in 0..num_nodes {
        counts[i + 1] += counts[i];
    }
    let node_offsets = counts.clone();
    let mut cursor = counts;
    let mut node_pairs = vec![0u32; pair_nodes.len()];
    for (p, &v) in pair_nodes.iter().enumerate() {
        node_pairs[cursor[v as usize]] = p as u32;
        cursor[v as usize] += 1;
    }
    (node_offsets, node_pairs)
}

/// Clique-expansion homophily of a labeled hypergraph.
///
/// A node's neighbors are all distinct co-members across its hyperedges
/// (itself excluded). The score is the mean, over nodes with at least one
/// neighbor, of the fraction of neighbors sharing the node's label. Nodes
/// without neighbors are skipped; if no node has a neighbor the score is
/// undefined.
pub fn ce_homophily(hg: &Hypergraph, labels: &[usize]) -> Result<f64> {
    if labels.len() != hg.num_nodes() {
        return Err(Error::Validation(format!(
            "labels length {} does not match num_nodes {}",
            labels.len(),
            hg.num_nodes()
        )));
    }
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); hg.num_nodes()];
    for e in 0..hg.num_edges() {
        let members = hg.edge(e);
        for &v in members {
            for &u in members {
                if u != v {
                    neighbors[v as usize].push(u);
                }
            }
        }
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for (v, nb) in neighbors.iter_mut().enumerate() {
        nb.sort_unstable();
        nb.dedup();
        if nb.is_empty() {
            continue;
        }
        let same = nb.iter().filter(|&&u| labels[u as usize] == labels[v]).count();
        total += same as f64 / nb.len() as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::Undefined(
            "homophily undefined: no node has any neighbor".into(),
        ));
    }
    Ok(total / counted as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Hypergraph {
        // Two triangles sharing node 2, plus a pendant pair.
        Hypergraph::build(6, vec![vec![2, 0, 1], vec![2, 3, 4], vec![4, 5]]).unwrap()
    }

    #[test]
    fn build_canonicalizes_and_counts_degrees() {
        let hg = toy();
        assert_eq!(hg.edge(0), &[0, 1, 2]);
        assert_eq!(hg.degrees(), &[1, 1, 2, 1, 2, 1]);
        assert_eq!(hg.incidence_count(), 8);
        assert_eq!(hg.max_edge_size(), 3);
        let total_degree: u32 = hg.degrees().iter().sum();
        assert_eq!(total_degree as usize, hg.incidence_count());
    }

    #[test]
    fn build_rejects_bad_edges() {
        assert!(matches!(
            Hypergraph::build(3, vec![vec![]]),
            Err(Error::Validation(_))
        ));
        let err = Hypergraph::build(3, vec![vec![0, 3]]).unwrap_err();
        assert!(err.to_string().contains("node 3"));
        let err = Hypergraph::build(3, vec![vec![0, 1], vec![1, 1]]).unwrap_err();
        assert!(err.to_string().contains("hyperedge 1"));
    }

    #[test]
    fn duplicate_hyperedges_are_allowed() {
        let hg = Hypergraph::build(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(hg.num_edges(), 2);
        assert_eq!(hg.degrees(), &[2, 2]);
    }

    #[test]
    fn expansion_indexes_both_sides() {
        let hg = toy();
        let ex = hg.star_expansion();
        assert_eq!(ex.num_pairs(), 8);
        assert_eq!(ex.edge_members(1), &[2, 3, 4]);
        // node 4 sits in hyperedges 1 and 2; its pairs are ascending.
        let pairs: Vec<u32> = ex.node_pairs(4).to_vec();
        assert_eq!(pairs.len(), 2);
        assert!(pairs[0] < pairs[1]);
        assert_eq!(ex.pair_edges()[pairs[0] as usize], 1);
        assert_eq!(ex.pair_edges()[pairs[1] as usize], 2);
        assert_eq!(ex.degree(2), 2);
    }

    #[test]
    fn expansion_roundtrips_to_canonical_hypergraph() {
        let hg = toy();
        assert_eq!(hg.star_expansion().to_hypergraph(), hg);
    }

    #[test]
    fn relabel_preserves_pair_order_and_roundtrips() {
        let hg = toy();
        let ex = hg.star_expansion();
        let perm = vec![5, 4, 3, 2, 1, 0];
        let rel = ex.relabel_nodes(&perm).unwrap();
        // Pair sequence order is preserved; only labels change.
        let expect: Vec<u32> = ex.pair_nodes().iter().map(|&v| perm[v as usize] as u32).collect();
        assert_eq!(rel.pair_nodes(), expect.as_slice());
        // Rebuilding gives the canonical relabeled hypergraph.
        let relabeled_edges: Vec<Vec<usize>> = hg
            .edges()
            .iter()
            .map(|e| e.iter().map(|&v| perm[v as usize]).collect())
            .collect();
        let want = Hypergraph::build(6, relabeled_edges).unwrap();
        assert_eq!(rel.to_hypergraph(), want);
        assert!(ex.relabel_nodes(&[0, 0, 1, 2, 3, 4]).is_err());
    }

    #[test]
    fn homophily_toy_values() {
        // Path-like: {0,1}, {1,2} with labels [0,0,1].
        let hg = Hypergraph::build(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        // node0: nb {1} same -> 1; node1: nb {0,2} -> 1/2; node2: nb {1} -> 0.
        let h = ce_homophily(&hg, &[0, 0, 1]).unwrap();
        assert!((h - 0.5).abs() < 1e-12);

        // All same label -> 1; alternating pair -> 0.
        assert_eq!(ce_homophily(&hg, &[1, 1, 1]).unwrap(), 1.0);
        let pair = Hypergraph::build(2, vec![vec![0, 1]]).unwrap();
        assert_eq!(ce_homophily(&pair, &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn homophily_skips_isolated_and_errors_when_empty() {
        // Node 3 is isolated: only nodes 0..=2 count.
        let hg = Hypergraph::build(4, vec![vec![0, 1, 2]]).unwrap();
        let h = ce_homophily(&hg, &[0, 0, 1, 1]).unwrap();
        // node0: 1/2, node1: 1/2, node2: 0 -> mean 1/3.
        assert!((h - 1.0 / 3.0).abs() < 1e-12);

        // Only singleton hyperedges: no neighbors anywhere.
        let lonely = Hypergraph::build(2, vec![vec![0], vec![1]]).unwrap();
        assert!(matches!(ce_homophily(&lonely, &[0, 1]), Err(Error::Undefined(_))));
    }

    #[test]
    fn homophily_invariant_under_label_bijection_and_relabeling() {
        let hg = Hypergraph::build(5, vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 0]]).unwrap();
        let labels = vec![0, 1, 0, 1, 0];
        let base = ce_homophily(&hg, &labels).unwrap();
        // Swap label names 0 <-> 1.
        let swapped: Vec<usize> = labels.iter().map(|&c| 1 - c).collect();
        assert_eq!(base, ce_homophily(&hg, &swapped).unwrap());
        // Relabel nodes with a permutation and permute labels accordingly.
        let perm = vec![3, 0, 4, 1, 2];
        let edges: Vec<Vec<usize>> = hg
            .edges()
            .iter()
            .map(|e| e.iter().map(|&v| perm[v as usize]).collect())
            .collect();
        let hg2 = Hypergraph::build(5, edges).unwrap();
        let mut labels2 = vec![0usize; 5];
        for (old, &new) in perm.iter().enumerate() {
            labels2[new] = labels[old];
        }
        let rel = ce_homophily(&hg2, &labels2).unwrap();
        assert!((base - rel).abs() < 1e-15);
    }
}
