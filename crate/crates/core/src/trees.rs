//! Rooted directed trees encoded as finite prefixes.
//!
//! An infinite, leafless, locally finite rooted tree of finite branching
//! index is stored as its truncation to depth `D` together with the
//! convention that every depth-`D` vertex continues as an infinite
//! single-child ray. Validation rejects any prefix in which that convention
//! could be unfaithful: all branching must happen at depth `<= D - 2`, so
//! the last represented level already exhibits the stabilized ray shape.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// On-disk tree document: the CLI ingestion format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub name: String,
    pub truncation_depth: usize,
    pub vertices: Vec<VertexSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub id: i64,
    pub parent: Option<i64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree {name:?} has more than one root (vertices {first} and {second})")]
    MultipleRoots { name: String, first: i64, second: i64 },
    #[error("tree {name:?} has no root vertex")]
    NoRoot { name: String },
    #[error("tree {name:?}: vertex {id} has unknown parent {parent}")]
    OrphanVertex { name: String, id: i64, parent: i64 },
    #[error("tree {name:?}: duplicate vertex id {id}")]
    DuplicateVertexId { name: String, id: i64 },
    #[error("tree {name:?}: parent chain of vertex {id} is cyclic")]
    CycleDetected { name: String, id: i64 },
    #[error("tree {name:?}: vertex {id} at depth {depth} < {truncation} has no child")]
    LeafBeforeTruncation { name: String, id: i64, depth: usize, truncation: usize },
    #[error(
        "tree {name:?}: vertex {id} at depth {depth} branches too close to the \
         truncation depth {truncation} for the ray extension to be faithful"
    )]
    BranchingBeyondIndexBound { name: String, id: i64, depth: usize, truncation: usize },
    #[error("tree {name:?}: vertex {id} has depth {depth} > truncation depth {truncation}")]
    DepthExceedsTruncation { name: String, id: i64, depth: usize, truncation: usize },
    #[error("invalid parameter for standard tree: {0}")]
    InvalidParameter(String),
}

/// Validated prefix of an infinite leafless rooted directed tree.
///
/// Vertices are re-indexed to dense ids `0..n` in BFS order (root = 0,
/// depths non-decreasing, parents before children); the original ids from
/// the input document are retained for round-tripping and reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTreePrefix {
    name: String,
    truncation_depth: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    branching_index: usize,
    original_ids: Vec<i64>,
    spec: TreeSpec,
}

impl RootedTreePrefix {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn truncation_depth(&self) -> usize {
        self.truncation_depth
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// Original (document) id of a dense vertex id.
    pub fn original_id(&self, v: usize) -> i64 {
        self.original_ids[v]
    }

    pub fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    /// The branching index: 0 when no vertex branches, otherwise one more
    /// than the largest depth of a vertex with at least two children.
    pub fn branching_index(&self) -> usize {
        self.branching_index
    }

    /// Dense ids of the vertices at depth `n` (empty for `n > D`).
    pub fn vertices_at_depth(&self, n: usize) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.depth[v] == n).collect()
    }

    /// Cardinality of the n-th generation of the *infinite* tree: beyond the
    /// truncation every vertex has exactly one child, so counts stabilize.
    pub fn generation_count(&self, n: usize) -> usize {
        let n = n.min(self.truncation_depth);
        self.vertices_at_depth(n).len()
    }

    /// Siblings of `v`: the full set of children of its parent (`{v}` has no
    /// meaning for the root, which has no siblings).
    pub fn siblings(&self, v: usize) -> Option<&[usize]> {
        self.parent[v].map(|p| self.children(p))
    }

    /// AHU-style canonical code of the prefix truncated at `depth`.
    pub fn canonical_code_at_depth(&self, depth: usize) -> String {
        fn code(t: &RootedTreePrefix, v: usize, depth: usize) -> String {
            if t.depth(v) == depth {
                return "()".to_string();
            }
            let mut parts: Vec<String> =
                t.children(v).iter().map(|&c| code(t, c, depth)).collect();
            parts.sort();
            format!("({})", parts.concat())
        }
        code(self, 0, depth.min(self.truncation_depth))
    }

    pub fn canonical_form(&self) -> CanonicalCode {
        CanonicalCode { code: self.canonical_code_at_depth(self.truncation_depth) }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.spec).expect("tree spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, String> {
        let spec: TreeSpec = serde_json::from_str(s).map_err(|e| e.to_string())?;
        validate_tree(spec).map_err(|e| e.to_string())
    }
}

/// Graph isomorphism of the rooted prefixes, compared at the deeper of the
/// two truncations both trees can faithfully reach.
pub fn graph_isomorphic(a: &RootedTreePrefix, b: &RootedTreePrefix) -> bool {
    let depth = a.truncation_depth.min(b.truncation_depth);
    a.canonical_code_at_depth(depth) == b.canonical_code_at_depth(depth)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalCode {
    pub code: String,
}

/// Validates a raw tree document and caches depths, children and the
/// branching index.
pub fn validate_tree(spec: TreeSpec) -> Result<RootedTreePrefix, TreeError> {
    let name = spec.name.clone();
    let n = spec.vertices.len();
    if n == 0 {
        return Err(TreeError::NoRoot { name });
    }

    let mut index: BTreeMap<i64, usize> = BTreeMap::new();
    for (i, v) in spec.vertices.iter().enumerate() {
        if index.insert(v.id, i).is_some() {
            return Err(TreeError::DuplicateVertexId { name, id: v.id });
        }
    }

    let mut root: Option<usize> = None;
    let mut raw_parent: Vec<Option<usize>> = vec![None; n];
    for (i, v) in spec.vertices.iter().enumerate() {
        match v.parent {
            None => match root {
                None => root = Some(i),
                Some(r) => {
                    return Err(TreeError::MultipleRoots {
                        name,
                        first: spec.vertices[r].id,
                        second: v.id,
                    })
                }
            },
            Some(p) => match index.get(&p) {
                Some(&pi) => raw_parent[i] = Some(pi),
                None => return Err(TreeError::OrphanVertex { name, id: v.id, parent: p }),
            },
        }
    }
    let root = root.ok_or(TreeError::NoRoot { name: name.clone() })?;

    // Depths via parent chains; a chain longer than n vertices is a cycle.
    let mut depth_raw: Vec<Option<usize>> = vec![None; n];
    depth_raw[root] = Some(0);
    for i in 0..n {
        if depth_raw[i].is_some() {
            continue;
        }
        let mut chain = vec![i];
        let mut cur = i;
        while let Some(p) = raw_parent[cur] {
            if depth_raw[p].is_some() {
                break;
            }
            if chain.len() > n {
                return Err(TreeError::CycleDetected { name, id: spec.vertices[i].id });
            }
            chain.push(p);
            cur = p;
        }
        // chain is child..ancestor; the ancestor's depth is known (or it is a root).
        let base = match raw_parent[cur] {
            Some(p) => depth_raw[p].unwrap() + 1,
            None => 0,
        };
        for (offset, &v) in chain.iter().rev().enumerate() {
            depth_raw[v] = Some(base + offset);
        }
    }
    let depth_raw: Vec<usize> = depth_raw.into_iter().map(|d| d.unwrap()).collect();

    for (i, v) in spec.vertices.iter().enumerate() {
        if depth_raw[i] > spec.truncation_depth {
            return Err(TreeError::DepthExceedsTruncation {
                name,
                id: v.id,
                depth: depth_raw[i],
                truncation: spec.truncation_depth,
            });
        }
    }

    // Re-index in BFS order: by (depth, position in document).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (depth_raw[i], i));
    let mut dense_of_raw = vec![0usize; n];
    for (dense, &raw) in order.iter().enumerate() {
        dense_of_raw[raw] = dense;
    }

    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut depth = vec![0usize; n];
    let mut original_ids = vec![0i64; n];
    for (dense, &raw) in order.iter().enumerate() {
        depth[dense] = depth_raw[raw];
        original_ids[dense] = spec.vertices[raw].id;
        if let Some(p) = raw_parent[raw] {
            let pd = dense_of_raw[p];
            parent[dense] = Some(pd);
            children[pd].push(dense);
        }
    }

    let d_trunc = spec.truncation_depth;
    for v in 0..n {
        if depth[v] < d_trunc && children[v].is_empty() {
            return Err(TreeError::LeafBeforeTruncation {
                name,
                id: original_ids[v],
                depth: depth[v],
                truncation: d_trunc,
            });
        }
        if children[v].len() >= 2 && depth[v] + 1 >= d_trunc {
            return Err(TreeError::BranchingBeyondIndexBound {
                name,
                id: original_ids[v],
                depth: depth[v],
                truncation: d_trunc,
            });
        }
    }

    let branching_index = children
        .iter()
        .enumerate()
        .filter(|(_, ch)| ch.len() >= 2)
        .map(|(v, _)| depth[v] + 1)
        .max()
        .unwrap_or(0);

    Ok(RootedTreePrefix {
        name: spec.name.clone(),
        truncation_depth: d_trunc,
        parent,
        children,
        depth,
        branching_index,
        original_ids,
        spec,
    })
}

/// The standard example trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StandardTree {
    /// Branchless tree (one infinite ray).
    Ray,
    /// Root with `n0` children, each continuing as a ray.
    Tn0 { n0: usize },
    /// Root with two children `u`, `v`; `card(Chi(u)) = 2k - j`,
    /// `card(Chi(v)) = j`, rays afterwards.
    T1j { k: usize, j: usize },
    /// Full binary tree to the given depth, rays afterwards.
    Binary { depth: usize },
}

pub fn make_standard(kind: StandardTree, truncation_depth: usize) -> Result<RootedTreePrefix, TreeError> {
    let bad = |msg: String| Err(TreeError::InvalidParameter(msg));
    let (name, required_index) = match &kind {
        StandardTree::Ray => ("ray".to_string(), 0),
        StandardTree::Tn0 { n0 } => {
            if *n0 == 0 {
                return bad("T_{n0,0} needs n0 >= 1".into());
            }
            (format!("T_{n0}_0"), if *n0 >= 2 { 1 } else { 0 })
        }
        StandardTree::T1j { k, j } => {
            if *k == 0 || *j == 0 {
                return bad("T_{1j} needs k, j >= 1".into());
            }
            if j > k {
                return bad(format!("T_{{1j}} needs j <= k, got j={j}, k={k}"));
            }
            let depth1_branches = 2 * k - j >= 2 || *j >= 2;
            (format!("T_1{j}_k{k}"), if depth1_branches { 2 } else { 1 })
        }
        StandardTree::Binary { depth } => {
            if *depth == 0 {
                return bad("binary tree needs depth >= 1".into());
            }
            (format!("B{depth}"), *depth)
        }
    };
    if truncation_depth < required_index + 1 {
        return bad(format!(
            "truncation depth {truncation_depth} too small for {name} (branching index {required_index})"
        ));
    }

    // Build by levels: `frontier` holds (id, how many children it gets next).
    let mut vertices = vec![VertexSpec { id: 0, parent: None }];
    let mut next_id = 1i64;
    let mut frontier: Vec<(i64, usize)> = match &kind {
        StandardTree::Ray => vec![(0, 1)],
        StandardTree::Tn0 { n0 } => vec![(0, *n0)],
        StandardTree::T1j { .. } => vec![(0, 2)],
        StandardTree::Binary { .. } => vec![(0, 2)],
    };
    for level in 1..=truncation_depth {
        let mut next_frontier = Vec::new();
        for (pos, (pid, fanout)) in frontier.iter().enumerate() {
            for child in 0..*fanout {
                let id = next_id;
                next_id += 1;
                vertices.push(VertexSpec { id, parent: Some(*pid) });
                let next_fanout = match &kind {
                    StandardTree::Ray | StandardTree::Tn0 { .. } => 1,
                    StandardTree::T1j { k, j } => {
                        if level == 1 {
                            if pos == 0 && child == 0 {
                                2 * k - j
                            } else {
                                *j
                            }
                        } else {
                            1
                        }
                    }
                    StandardTree::Binary { depth } => {
                        if level < *depth {
                            2
                        } else {
                            1
                        }
                    }
                };
                next_frontier.push((id, next_fanout));
            }
        }
        frontier = next_frontier;
    }

    validate_tree(TreeSpec { name, truncation_depth, vertices })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ray(d: usize) -> RootedTreePrefix {
        make_standard(StandardTree::Ray, d).unwrap()
    }

    fn t20(d: usize) -> RootedTreePrefix {
        make_standard(StandardTree::Tn0 { n0: 2 }, d).unwrap()
    }

    #[test]
    fn ray_is_valid_with_branching_index_zero() {
        let r = ray(4);
        assert_eq!(r.vertex_count(), 5);
        assert_eq!(r.branching_index(), 0);
        assert_eq!(r.generation_count(7), 1);
    }

    #[test]
    fn t20_shape_and_index() {
        let t = t20(4);
        assert_eq!(t.branching_index(), 1);
        assert_eq!(t.generation_count(0), 1);
        assert_eq!(t.generation_count(1), 2);
        assert_eq!(t.generation_count(5), 2);
    }

    #[test]
    fn leaf_before_truncation_is_rejected() {
        // Root -> a (a has no children), D = 3.
        let spec = TreeSpec {
            name: "leafy".into(),
            truncation_depth: 3,
            vertices: vec![
                VertexSpec { id: 0, parent: None },
                VertexSpec { id: 1, parent: Some(0) },
            ],
        };
        match validate_tree(spec) {
            Err(TreeError::LeafBeforeTruncation { id, depth, .. }) => {
                assert_eq!((id, depth), (1, 1));
            }
            other => panic!("expected LeafBeforeTruncation, got {other:?}"),
        }
    }

    #[test]
    fn branching_too_deep_is_rejected() {
        // Branching at depth D-1 makes the ray extension unfaithful.
        let spec = TreeSpec {
            name: "late-branch".into(),
            truncation_depth: 2,
            vertices: vec![
                VertexSpec { id: 0, parent: None },
                VertexSpec { id: 1, parent: Some(0) },
                VertexSpec { id: 2, parent: Some(1) },
                VertexSpec { id: 3, parent: Some(1) },
            ],
        };
        assert!(matches!(
            validate_tree(spec),
            Err(TreeError::BranchingBeyondIndexBound { id: 1, .. })
        ));
    }

    #[test]
    fn multiple_roots_and_orphans_are_rejected() {
        let two_roots = TreeSpec {
            name: "tr".into(),
            truncation_depth: 0,
            vertices: vec![
                VertexSpec { id: 0, parent: None },
                VertexSpec { id: 1, parent: None },
            ],
        };
        assert!(matches!(validate_tree(two_roots), Err(TreeError::MultipleRoots { .. })));

        let orphan = TreeSpec {
            name: "or".into(),
            truncation_depth: 1,
            vertices: vec![
                VertexSpec { id: 0, parent: None },
                VertexSpec { id: 1, parent: Some(99) },
            ],
        };
        assert!(matches!(validate_tree(orphan), Err(TreeError::OrphanVertex { parent: 99, .. })));

        let cyclic = TreeSpec {
            name: "cy".into(),
            truncation_depth: 1,
            vertices: vec![
                VertexSpec { id: 0, parent: None },
                VertexSpec { id: 1, parent: Some(2) },
                VertexSpec { id: 2, parent: Some(1) },
            ],
        };
        assert!(matches!(
            validate_tree(cyclic),
            Err(TreeError::CycleDetected { .. }) | Err(TreeError::DepthExceedsTruncation { .. })
        ));
    }

    #[test]
    fn tn0_generation_counts() {
        let t = make_standard(StandardTree::Tn0 { n0: 3 }, 3).unwrap();
        assert_eq!(
            (0..=3).map(|n| t.generation_count(n)).collect::<Vec<_>>(),
            vec![1, 3, 3, 3]
        );
        assert_eq!(t.branching_index(), 1);
    }

    #[test]
    fn t1j_generation_counts() {
        // card(Chi(u)) = 2k - j, card(Chi(v)) = j: generation 2 has 2k vertices.
        for (k, j) in [(2, 1), (2, 2), (3, 1), (3, 3)] {
            let t = make_standard(StandardTree::T1j { k, j }, 4).unwrap();
            assert_eq!(t.generation_count(0), 1);
            assert_eq!(t.generation_count(1), 2);
            assert_eq!(t.generation_count(2), 2 * k, "k={k} j={j}");
            assert_eq!(t.generation_count(4), 2 * k);
        }
    }

    #[test]
    fn binary_tree_counts_and_index() {
        let b2 = make_standard(StandardTree::Binary { depth: 2 }, 4).unwrap();
        assert_eq!(b2.branching_index(), 2);
        assert_eq!(
            (0..=4).map(|n| b2.generation_count(n)).collect::<Vec<_>>(),
            vec![1, 2, 4, 4, 4]
        );
    }

    #[test]
    fn standard_tree_parameter_errors() {
        assert!(matches!(
            make_standard(StandardTree::Tn0 { n0: 0 }, 3),
            Err(TreeError::InvalidParameter(_))
        ));
        assert!(matches!(
            make_standard(StandardTree::T1j { k: 2, j: 3 }, 4),
            Err(TreeError::InvalidParameter(_))
        ));
        assert!(matches!(
            make_standard(StandardTree::Binary { depth: 3 }, 3),
            Err(TreeError::InvalidParameter(_))
        ));
    }

    #[test]
    fn canonical_code_of_ray() {
        assert_eq!(ray(2).canonical_form().code, "((()))");
    }

    #[test]
    fn t11_and_t12_are_not_isomorphic() {
        let a = make_standard(StandardTree::T1j { k: 2, j: 1 }, 4).unwrap();
        let b = make_standard(StandardTree::T1j { k: 2, j: 2 }, 4).unwrap();
        assert_ne!(a.canonical_form().code, b.canonical_form().code);
        assert!(!graph_isomorphic(&a, &b));
        assert!(graph_isomorphic(&a, &a));
    }

    #[test]
    fn t20_vs_binary_not_isomorphic() {
        let a = t20(4);
        let b = make_standard(StandardTree::Binary { depth: 2 }, 4).unwrap();
        assert!(!graph_isomorphic(&a, &b));
    }

    #[test]
    fn generation_deltas_match_child_surplus() {
        for t in [t20(4), make_standard(StandardTree::Binary { depth: 2 }, 5).unwrap()] {
            for n in 0..t.truncation_depth() {
                let surplus: usize = t
                    .vertices_at_depth(n)
                    .iter()
                    .map(|&v| t.children(v).len() - 1)
                    .sum();
                assert_eq!(
                    t.generation_count(n + 1) - t.generation_count(n),
                    surplus,
                    "tree {} at depth {n}",
                    t.name()
                );
            }
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let t = t20(3);
        let s = t.to_json();
        let t2 = RootedTreePrefix::from_json(&s).unwrap();
        assert_eq!(t2.to_json(), s);
        assert_eq!(t, t2);
    }
}
