//! Module classification: the equivalent conditions on generation counts,
//! sibling surpluses and cokernel dimension sums, the isomorphism decision,
//! and a numerically verified intertwining unitary on truncations.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cokernel::{dim_l, enumerate_blocks, total_branching_bound, KernelBlock};
use crate::multishift::{Multishift, WeightSequence};
use crate::product::{build_product, coordinate_subsets, ProductTree};
use crate::rat::{rat_usize, to_f64};
use crate::trees::{graph_isomorphic, RootedTreePrefix};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("factor counts differ: {left} vs {right}")]
    FactorCountMismatch { left: usize, right: usize },
    #[error("the modules are not isomorphic; no intertwiner exists")]
    NotIsomorphic,
    #[error("truncation depth {have} too shallow for the intertwiner; need at least {needed}")]
    TruncationTooShallow { needed: usize, have: usize },
    #[error("the two products must be truncated at the same total depth ({left} vs {right})")]
    DepthMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Isomorphic,
    NotIsomorphic,
    /// `a = d = 1`: the generation-count criterion does not decide.
    UndecidedAdEqOne,
}

/// Generation-count tables `card(G_n(T_l))` per factor, with the first
/// mismatch if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationCondition {
    pub equal: bool,
    /// True when `n_max` reaches every factor's branching index, so the
    /// comparison decides all generations of the infinite trees.
    pub complete: bool,
    pub n_max: usize,
    pub left: Vec<Vec<usize>>,
    pub right: Vec<Vec<usize>>,
    pub witness: Option<(usize, usize)>,
}

fn check_factor_counts(
    t1: &[RootedTreePrefix],
    t2: &[RootedTreePrefix],
) -> Result<(), ClassifyError> {
    if t1.len() != t2.len() {
        return Err(ClassifyError::FactorCountMismatch { left: t1.len(), right: t2.len() });
    }
    Ok(())
}

pub fn stabilization_bound(t1: &[RootedTreePrefix], t2: &[RootedTreePrefix]) -> usize {
    t1.iter().chain(t2).map(|t| t.branching_index()).max().unwrap_or(0)
}

/// Condition on generation counts: `card(G_n(T_l^{(1)})) = card(G_n(T_l^{(2)}))`.
pub fn condition_iv(
    t1: &[RootedTreePrefix],
    t2: &[RootedTreePrefix],
    n_max: usize,
) -> Result<GenerationCondition, ClassifyError> {
    check_factor_counts(t1, t2)?;
    let table = |ts: &[RootedTreePrefix]| -> Vec<Vec<usize>> {
        ts.iter()
            .map(|t| (0..=n_max).map(|n| t.generation_count(n)).collect())
            .collect()
    };
    let left = table(t1);
    let right = table(t2);
    let mut witness = None;
    'outer: for l in 0..t1.len() {
        for n in 0..=n_max {
            if left[l][n] != right[l][n] {
                witness = Some((l, n));
                break 'outer;
            }
        }
    }
    Ok(GenerationCondition {
        equal: witness.is_none(),
        complete: n_max >= stabilization_bound(t1, t2),
        n_max,
        left,
        right,
        witness,
    })
}

/// Per-factor sibling surplus at depth `n >= 1`: the sum over sibling
/// classes at depth `n` of `(class size - 1)`. Computed by direct class
/// enumeration and cross-checked against the telescoping difference of
/// generation counts.
pub fn sibling_surplus(t: &RootedTreePrefix, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let direct: usize = if n <= t.truncation_depth() {
        t.vertices_at_depth(n - 1)
            .iter()
            .map(|&v| t.children(v).len() - 1)
            .sum()
    } else {
        0
    };
    let telescoped = t.generation_count(n) - t.generation_count(n - 1);
    assert_eq!(direct, telescoped, "surplus routes disagree on {}", t.name());
    direct
}

/// Condition on sibling surpluses per factor and depth.
pub fn condition_iii(
    t1: &[RootedTreePrefix],
    t2: &[RootedTreePrefix],
    n_max: usize,
) -> Result<GenerationCondition, ClassifyError> {
    check_factor_counts(t1, t2)?;
    let table = |ts: &[RootedTreePrefix]| -> Vec<Vec<usize>> {
        ts.iter()
            .map(|t| (0..=n_max).map(|n| sibling_surplus(t, n)).collect())
            .collect()
    };
    let left = table(t1);
    let right = table(t2);
    let mut witness = None;
    'outer: for l in 0..t1.len() {
        for n in 0..=n_max {
            if left[l][n] != right[l][n] {
                witness = Some((l, n));
                break 'outer;
            }
        }
    }
    Ok(GenerationCondition {
        equal: witness.is_none(),
        complete: n_max >= stabilization_bound(t1, t2),
        n_max,
        left,
        right,
        witness,
    })
}

/// One `(F, alpha)` entry of the cokernel-dimension condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimSumEntry {
    pub f: Vec<usize>,
    pub alpha: Vec<usize>,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimSumCondition {
    pub equal: bool,
    pub alpha_max: usize,
    pub entries: Vec<DimSumEntry>,
    pub witness: Option<(Vec<usize>, Vec<usize>)>,
}

/// Sum of block dimensions over representatives at depth tuple `alpha` for
/// the coordinate set `F`, by direct enumeration on the product.
fn dim_sum_direct(p: &ProductTree, f: &[usize], alpha: &[usize]) -> usize {
    p.omega_f(f, p.total_depth())
        .into_iter()
        .filter(|&u| p.depth_tuple(u) == alpha)
        .map(|u| dim_l(p, u, f))
        .sum()
}

/// The same sum through the per-coordinate factorization: the product over
/// `l in F` of the single-coordinate surplus sums.
fn dim_sum_factored(p: &ProductTree, f: &[usize], alpha: &[usize]) -> usize {
    f.iter().map(|&l| sibling_surplus(&p.factors()[l], alpha[l])).product()
}

/// Condition on per-`(F, alpha)` cokernel dimension sums. Both products must
/// be deep enough to enumerate every contributing representative.
pub fn condition_ii(
    p1: &ProductTree,
    p2: &ProductTree,
    alpha_max: usize,
) -> Result<DimSumCondition, ClassifyError> {
    if p1.dim() != p2.dim() {
        return Err(ClassifyError::FactorCountMismatch { left: p1.dim(), right: p2.dim() });
    }
    for p in [p1, p2] {
        let needed = total_branching_bound(p.factors());
        if p.total_depth() < needed {
            return Err(ClassifyError::TruncationTooShallow {
                needed,
                have: p.total_depth(),
            });
        }
    }
    let d = p1.dim();
    let mut entries = Vec::new();
    let mut witness = None;
    for f in coordinate_subsets(d).into_iter().filter(|f| !f.is_empty()) {
        for alpha in crate::multiindex::compositions_up_to(alpha_max, d) {
            // alpha must be supported exactly on F.
            if (0..d).any(|j| (alpha[j] != 0) != f.contains(&j)) {
                continue;
            }
            // Contributions die past the truncation only when alpha stays
            // within each factor's enumerated depth.
            if f.iter().any(|&j| alpha[j] > p1.factors()[j].truncation_depth())
                || f.iter().any(|&j| alpha[j] > p2.factors()[j].truncation_depth())
            {
                continue;
            }
            let left = if alpha.iter().sum::<usize>() <= p1.total_depth() {
                let v = dim_sum_direct(p1, &f, &alpha);
                assert_eq!(v, dim_sum_factored(p1, &f, &alpha), "factorization identity");
                v
            } else {
                dim_sum_factored(p1, &f, &alpha)
            };
            let right = if alpha.iter().sum::<usize>() <= p2.total_depth() {
                let v = dim_sum_direct(p2, &f, &alpha);
                assert_eq!(v, dim_sum_factored(p2, &f, &alpha), "factorization identity");
                v
            } else {
                dim_sum_factored(p2, &f, &alpha)
            };
            if left != right && witness.is_none() {
                witness = Some((f.clone(), alpha.clone()));
            }
            entries.push(DimSumEntry { f: f.clone(), alpha, left, right });
        }
    }
    Ok(DimSumCondition { equal: witness.is_none(), alpha_max, entries, witness })
}

/// The isomorphism decision. Complete for `ad != 1` by deciding the
/// generation-count condition at the stabilization bound; refuses to decide
/// when `a = d = 1`.
pub fn modules_isomorphic(
    t1: &[RootedTreePrefix],
    t2: &[RootedTreePrefix],
    a: usize,
) -> Result<Decision, ClassifyError> {
    check_factor_counts(t1, t2)?;
    let d = t1.len();
    if a * d == 1 {
        return Ok(Decision::UndecidedAdEqOne);
    }
    let n_max = stabilization_bound(t1, t2);
    let cond = condition_iv(t1, t2, n_max)?;
    Ok(if cond.equal { Decision::Isomorphic } else { Decision::NotIsomorphic })
}

/// Is the module the classical one (every factor branchless)?
pub fn classical_module_check(ts: &[RootedTreePrefix], a: usize) -> Result<bool, ClassifyError> {
    if a * ts.len() == 1 {
        return Ok(false);
    }
    Ok(ts.iter().all(|t| t.branching_index() == 0))
}

/// Coordinate-respecting graph isomorphism of the two products: every
/// factor pair is isomorphic as rooted trees.
pub fn factors_graph_isomorphic(t1: &[RootedTreePrefix], t2: &[RootedTreePrefix]) -> bool {
    t1.len() == t2.len()
        && t1.iter().zip(t2).all(|(a, b)| graph_isomorphic(a, b))
}

#[derive(Debug, Clone)]
pub struct BlockGroupInfo {
    pub f: Vec<usize>,
    pub alpha: Vec<usize>,
    pub dim: usize,
}

/// Numerical certificate for the intertwining unitary built block-by-block.
#[derive(Debug, Clone)]
pub struct IntertwinerCertificate {
    pub depth: usize,
    pub tol: f64,
    pub groups: Vec<BlockGroupInfo>,
    pub unitarity_residual: f64,
    pub intertwining_residual: f64,
    /// Number of paired vectors (the dimension they span).
    pub spanned_dim: usize,
    pub full_dim: (usize, usize),
    pub complete: bool,
    pub pass: bool,
}

fn gram_schmidt(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        // Two passes of re-orthogonalization.
        for _ in 0..2 {
            for q in &out {
                let proj: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, qx) in v.iter_mut().zip(q) {
                    *x -= proj * qx;
                }
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm > 1e-10, "block basis vectors must be independent");
        for x in &mut v {
            *x /= norm;
        }
        out.push(v);
    }
    out
}

fn apply_shift_dense(m: &Multishift, j: usize, x: &[f64]) -> Vec<f64> {
    let p = m.product();
    let mut out = vec![0.0; x.len()];
    for (v, &coeff) in x.iter().enumerate() {
        if coeff == 0.0 || p.total_depth_of(v) >= p.total_depth() {
            continue;
        }
        for w in p.chi_j_in(v, j).expect("coordinate in range") {
            out[w] += coeff * m.lambda(j, w);
        }
    }
    out
}

/// Blocks are grouped by `(F, depth tuple of u)`.
type GroupKey = (Vec<usize>, Vec<usize>);

/// Orthonormalized block bases per `(F, alpha)` group, in deterministic
/// lexicographic block order within the group; the root block forms its own
/// group.
fn grouped_onbs(p: &ProductTree, blocks: &[KernelBlock]) -> BTreeMap<GroupKey, Vec<Vec<f64>>> {
    let n = p.vertex_count();
    let mut groups: BTreeMap<GroupKey, Vec<Vec<f64>>> = BTreeMap::new();
    let mut root_vec = vec![0.0; n];
    root_vec[p.root()] = 1.0;
    groups.insert((Vec::new(), vec![0; p.dim()]), vec![root_vec]);
    for block in blocks.iter().filter(|b| b.dim_closed > 0) {
        let dense: Vec<Vec<f64>> = block
            .basis
            .iter()
            .map(|v| {
                let mut x = vec![0.0; n];
                for (i, &vert) in block.support.iter().enumerate() {
                    x[vert] = to_f64(&v[i]);
                }
                x
            })
            .collect();
        let onb = gram_schmidt(dense);
        groups
            .entry((block.f.clone(), block.depth.clone()))
            .or_default()
            .extend(onb);
    }
    groups
}

/// Builds the block-diagonal intertwiner between the two module truncations
/// and reports its numerical residuals.
pub fn build_intertwiner(
    p1: &ProductTree,
    p2: &ProductTree,
    a: usize,
    tol: f64,
) -> Result<IntertwinerCertificate, ClassifyError> {
    if p1.total_depth() != p2.total_depth() {
        return Err(ClassifyError::DepthMismatch {
            left: p1.total_depth(),
            right: p2.total_depth(),
        });
    }
    let depth = p1.total_depth();
    let needed = total_branching_bound(p1.factors())
        .max(total_branching_bound(p2.factors()))
        + 2;
    if depth < needed {
        return Err(ClassifyError::TruncationTooShallow { needed, have: depth });
    }
    match modules_isomorphic(p1.factors(), p2.factors(), a)? {
        Decision::Isomorphic => {}
        _ => return Err(ClassifyError::NotIsomorphic),
    }

    let c = WeightSequence::CA { a: rat_usize(a) };
    let m1 = Multishift::family(p1.clone(), c.clone());
    let m2 = Multishift::family(p2.clone(), c);

    let blocks1 = enumerate_blocks(p1).expect("depth covers the branching bound");
    let blocks2 = enumerate_blocks(p2).expect("depth covers the branching bound");
    let g1 = grouped_onbs(p1, &blocks1);
    let g2 = grouped_onbs(p2, &blocks2);

    assert_eq!(
        g1.keys().collect::<Vec<_>>(),
        g2.keys().collect::<Vec<_>>(),
        "isomorphic modules carry the same block group keys"
    );

    let n1 = p1.vertex_count();
    let n2 = p2.vertex_count();
    let mut groups = Vec::new();
    let mut cols1: Vec<Vec<f64>> = Vec::new();
    let mut cols2: Vec<Vec<f64>> = Vec::new();
    for ((f, alpha), onb1) in &g1 {
        let onb2 = &g2[&(f.clone(), alpha.clone())];
        assert_eq!(onb1.len(), onb2.len(), "group dimensions agree");
        groups.push(BlockGroupInfo { f: f.clone(), alpha: alpha.clone(), dim: onb1.len() });
        let du: usize = alpha.iter().sum();
        for (x0, y0) in onb1.iter().zip(onb2) {
            for beta in crate::multiindex::compositions_up_to(depth - du, p1.dim()) {
                let mut x = x0.clone();
                let mut y = y0.clone();
                for (j, &k) in beta.iter().enumerate() {
                    for _ in 0..k {
                        x = apply_shift_dense(&m1, j, &x);
                        y = apply_shift_dense(&m2, j, &y);
                    }
                }
                let nx: f64 = x.iter().map(|t| t * t).sum::<f64>().sqrt();
                let ny: f64 = y.iter().map(|t| t * t).sum::<f64>().sqrt();
                for t in &mut x {
                    *t /= nx;
                }
                for t in &mut y {
                    *t /= ny;
                }
                cols1.push(x);
                cols2.push(y);
            }
        }
    }

    let k = cols1.len();
    // U = Y X^T maps each x-column to its paired y-column.
    let mut u = vec![vec![0.0f64; n1]; n2];
    for (x, y) in cols1.iter().zip(&cols2) {
        for (r, &yv) in y.iter().enumerate() {
            if yv == 0.0 {
                continue;
            }
            for (cidx, &xv) in x.iter().enumerate() {
                if xv != 0.0 {
                    u[r][cidx] += yv * xv;
                }
            }
        }
    }

    // Unitarity: U^T U should be the identity on side 1.
    let mut unitarity_residual = 0.0f64;
    for i in 0..n1 {
        for j in i..n1 {
            let dot: f64 = (0..n2).map(|r| u[r][i] * u[r][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            unitarity_residual = unitarity_residual.max((dot - target).abs());
        }
    }

    // Intertwining on every basis vector that stays inside the truncation.
    let mut intertwining_residual = 0.0f64;
    for v in 0..n1 {
        if p1.total_depth_of(v) >= depth {
            continue;
        }
        let mut e = vec![0.0; n1];
        e[v] = 1.0;
        let ue: Vec<f64> = (0..n2).map(|r| u[r][v]).collect();
        for j in 0..p1.dim() {
            let s1e = apply_shift_dense(&m1, j, &e);
            let us1: Vec<f64> = (0..n2)
                .map(|r| (0..n1).map(|c| u[r][c] * s1e[c]).sum())
                .collect();
            let s2u = apply_shift_dense(&m2, j, &ue);
            let diff: f64 = us1
                .iter()
                .zip(&s2u)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            intertwining_residual = intertwining_residual.max(diff);
        }
    }

    let complete = k == n1 && k == n2;
    Ok(IntertwinerCertificate {
        depth,
        tol,
        groups,
        unitarity_residual,
        intertwining_residual,
        spanned_dim: k,
        full_dim: (n1, n2),
        complete,
        pass: complete && unitarity_residual < tol && intertwining_residual < tol,
    })
}

/// Decision plus all three condition tables for a pair of factor tuples.
#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub a: usize,
    pub d: usize,
    pub decision: Decision,
    pub graph_isomorphic: bool,
    pub condition_iv: GenerationCondition,
    pub condition_iii: GenerationCondition,
    pub condition_ii: DimSumCondition,
}

/// Builds both products to their branching bounds and evaluates the decision
/// together with all three conditions.
pub fn classify(
    t1: &[RootedTreePrefix],
    t2: &[RootedTreePrefix],
    a: usize,
) -> Result<ClassificationReport, ClassifyError> {
    check_factor_counts(t1, t2)?;
    let d = t1.len();
    let n_max = stabilization_bound(t1, t2);
    let decision = modules_isomorphic(t1, t2, a)?;
    let mut products = Vec::new();
    for ts in [t1, t2] {
        let needed = total_branching_bound(ts);
        let reach = ts.iter().map(|t| t.truncation_depth()).min().unwrap_or(0);
        if reach < needed {
            return Err(ClassifyError::TruncationTooShallow { needed, have: reach });
        }
        products.push(build_product(ts.to_vec(), needed).expect("depth within factors"));
    }
    Ok(ClassificationReport {
        a,
        d,
        decision,
        graph_isomorphic: factors_graph_isomorphic(t1, t2),
        condition_iv: condition_iv(t1, t2, n_max)?,
        condition_iii: condition_iii(t1, t2, n_max)?,
        condition_ii: condition_ii(&products[0], &products[1], n_max.max(1))?,
    })
}
