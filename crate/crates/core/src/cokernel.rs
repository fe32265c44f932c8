//! The joint cokernel `E = span{e_root} + sum of blocks L_{u,F}`.
//!
//! Each block is cut out of `l^2(sib_F(u))` by sibling-sum equations. Three
//! independent routes to its size are implemented: the closed-form product
//! of `card(sib(u_j)) - 1`, the exact null space of the sibling-sum system,
//! and a tensor-product basis of coordinate difference vectors. A
//! whole-space brute-force solver for the weighted adjoint equations closes
//! the loop against the block decomposition.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg::RatMatrix;
use crate::multishift::Multishift;
use crate::product::ProductTree;
use crate::rat::Rat;
use crate::trees::RootedTreePrefix;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CokernelError {
    #[error("the sibling-sum system is vacuous for F = {{}}; the block is span{{e_u}}")]
    EmptyF,
    #[error("total depth bound {have} is too shallow; need at least {needed}")]
    DepthTooShallow { needed: usize, have: usize },
}

/// One block `L_{u,F}` of the joint cokernel.
#[derive(Debug, Clone)]
pub struct KernelBlock {
    /// Sorted coordinate set `F` (non-empty).
    pub f: Vec<usize>,
    /// Canonical representative `u` (product vertex index).
    pub u: usize,
    /// Depth tuple of `u`.
    pub depth: Vec<usize>,
    /// Sorted support `sib_F(u)`; the basis order for block vectors.
    pub support: Vec<usize>,
    /// The sibling-sum system (`n_count x m_count`, entries 0 / 1).
    pub system: RatMatrix,
    /// Exact null-space basis of `system` (vectors over `support`).
    pub basis: Vec<Vec<Rat>>,
    /// Closed-form dimension: product of `card(sib(u_j)) - 1` over `F`.
    pub dim_closed: usize,
}

/// Sum of the factor branching indices; every non-root block representative
/// lives at total depth at most this bound.
pub fn total_branching_bound(factors: &[RootedTreePrefix]) -> usize {
    factors.iter().map(|t| t.branching_index()).sum()
}

/// The weight-free sibling-sum system for `u` in `Omega_F`: one row per
/// `(j in F, v_G in sib_{F,G}(u))` with `G = F \ {j}`, marking the
/// coordinate-j line through `v_G` inside `sib_F(u)`.
pub fn sibling_sum_system(
    p: &ProductTree,
    u: usize,
    f: &[usize],
) -> Result<RatMatrix, CokernelError> {
    if f.is_empty() {
        return Err(CokernelError::EmptyF);
    }
    let support = p.sib_f(u, f).expect("u lies in Phi_F");
    let col: BTreeMap<usize, usize> =
        support.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut rows = Vec::new();
    for &j in f {
        let g: Vec<usize> = f.iter().copied().filter(|&x| x != j).collect();
        for vg in p.sib_fg(u, f, &g).expect("G is a subset of F") {
            let anchor = p.with_coord(vg, j, u);
            let mut row = vec![Rat::zero(); support.len()];
            for w in p.sib_j(anchor, j).expect("anchor has a j-parent") {
                row[col[&w]] = Rat::one();
            }
            rows.push(row);
        }
    }
    Ok(RatMatrix::from_rows(rows))
}

/// Exact null-space basis of a sibling-sum system.
pub fn block_basis_bruteforce(system: &RatMatrix) -> Vec<Vec<Rat>> {
    system.nullspace()
}

/// Tensor-product basis: per coordinate `j in F` the difference vectors
/// `e_{u_j} - e_{eta}` span the kernel of the all-ones functional on
/// `sib(u_j)`; their elementary tensors, read as functions on `sib_F(u)`,
/// span the block.
pub fn block_basis_tensor(p: &ProductTree, u: usize, f: &[usize]) -> Vec<Vec<Rat>> {
    let support = p.sib_f(u, f).expect("u lies in Phi_F");
    let u_coords = p.coords(u).to_vec();

    // Per coordinate: the list of non-representative siblings of u_j.
    let mut others: Vec<Vec<usize>> = Vec::new();
    for &j in f {
        let sibs = p.factors()[j].siblings(u_coords[j]).expect("non-root coordinate");
        others.push(sibs.iter().copied().filter(|&s| s != u_coords[j]).collect());
    }

    let mut choices: Vec<Vec<usize>> = vec![Vec::new()];
    for opts in &others {
        let mut next = Vec::with_capacity(choices.len() * opts.len());
        for c in &choices {
            for &o in opts {
                let mut c = c.clone();
                c.push(o);
                next.push(c);
            }
        }
        choices = next;
    }

    let mut basis = Vec::with_capacity(choices.len());
    for choice in choices {
        let vec: Vec<Rat> = support
            .iter()
            .map(|&v| {
                let mut val = Rat::one();
                for (pos, &j) in f.iter().enumerate() {
                    let vj = p.coords(v)[j];
                    let factor = if vj == u_coords[j] {
                        Rat::one()
                    } else if vj == choice[pos] {
                        -Rat::one()
                    } else {
                        Rat::zero()
                    };
                    val *= factor;
                }
                val
            })
            .collect();
        basis.push(vec);
    }
    basis
}

/// Closed-form block dimension.
pub fn dim_l(p: &ProductTree, u: usize, f: &[usize]) -> usize {
    f.iter()
        .map(|&j| {
            p.factors()[j]
                .siblings(p.coords(u)[j])
                .map_or(0, |s| s.len().saturating_sub(1))
        })
        .product()
}

fn factor_rep_classes(t: &RootedTreePrefix) -> Vec<(usize, usize)> {
    // (depth of rep, class size) for every canonical representative with
    // depth at most the branching index; deeper classes are singletons.
    let k = t.branching_index();
    let mut out = Vec::new();
    for v in 0..t.vertex_count() {
        if t.depth(v) < k {
            out.push((t.depth(v) + 1, t.children(v).len()));
        }
    }
    out
}

/// `dim E` of the *infinite* product, by explicit enumeration of the
/// finitely many contributing blocks: representatives with per-coordinate
/// depth at most the factor branching index.
pub fn dim_e(factors: &[RootedTreePrefix]) -> usize {
    let per_factor: Vec<Vec<(usize, usize)>> =
        factors.iter().map(factor_rep_classes).collect();
    let d = factors.len();
    let mut total = 1usize; // the root block
    for mask in 1u32..(1 << d) {
        let f: Vec<usize> = (0..d).filter(|&j| mask & (1 << j) != 0).collect();
        // Sum over tuples of representatives, one per coordinate in F.
        let mut sum = 1usize;
        let mut empty = false;
        for &j in &f {
            let coord_sum: usize =
                per_factor[j].iter().map(|&(_, size)| size - 1).sum();
            if coord_sum == 0 {
                empty = true;
                break;
            }
            sum *= coord_sum;
        }
        if !empty {
            total += sum;
        }
    }
    total
}

/// All candidate blocks (representatives with per-coordinate depth at most
/// the factor branching index), including zero-dimensional ones. Requires
/// the truncation to reach every candidate.
pub fn enumerate_blocks(p: &ProductTree) -> Result<Vec<KernelBlock>, CokernelError> {
    let needed = total_branching_bound(p.factors());
    if p.total_depth() < needed {
        return Err(CokernelError::DepthTooShallow { needed, have: p.total_depth() });
    }
    let d = p.dim();
    let mut blocks = Vec::new();
    for f in crate::product::coordinate_subsets(d).into_iter().filter(|f| !f.is_empty()) {
        for u in p.omega_f(&f, p.total_depth()) {
            let depth = p.depth_tuple(u);
            if f.iter().any(|&j| depth[j] > p.factors()[j].branching_index()) {
                continue;
            }
            let system = sibling_sum_system(p, u, &f)?;
            let basis = block_basis_bruteforce(&system);
            blocks.push(KernelBlock {
                f: f.clone(),
                u,
                depth,
                support: p.sib_f(u, &f).expect("u in Phi_F"),
                dim_closed: dim_l(p, u, &f),
                system,
                basis,
            });
        }
    }
    Ok(blocks)
}

/// One connected component of the adjoint system, with its exact kernel.
#[derive(Debug, Clone)]
pub struct KernelComponent {
    /// Sorted vertex support of the component.
    pub vertices: Vec<usize>,
    /// Null-space basis over `vertices`.
    pub basis: Vec<Vec<Rat>>,
}

/// Brute-force joint kernel of the adjoint tuple on the truncation.
///
/// Solves `sum_{w in chi_j(v)} lambda_j(w) f(w) = 0` for all enumerated `v`
/// and all `j`, with rows scaled by the (positive) weight so that squared
/// weights appear as coefficients; for the row-constant weight systems
/// produced by a sequence family this has exactly the same solution set.
/// The system splits into connected components, which are solved
/// independently with exact elimination.
pub fn joint_kernel_bruteforce(m: &Multishift) -> Result<Vec<KernelComponent>, CokernelError> {
    let p = m.product();
    let needed = 1 + total_branching_bound(p.factors());
    if p.total_depth() < needed {
        return Err(CokernelError::DepthTooShallow { needed, have: p.total_depth() });
    }

    // Union-find over vertices; each row merges the vertices it touches.
    let n = p.vertex_count();
    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut Vec<usize>, x: usize) -> usize {
        if uf[x] != x {
            let r = find(uf, uf[x]);
            uf[x] = r;
        }
        uf[x]
    }
    let mut rows: Vec<(usize, usize, Vec<usize>)> = Vec::new(); // (v, j, support)
    for v in 0..n {
        if p.total_depth_of(v) >= p.total_depth() {
            continue;
        }
        for j in 0..p.dim() {
            let kids = p.chi_j_in(v, j).expect("children within bound");
            for w in kids.windows(2) {
                let a = find(&mut uf, w[0]);
                let b = find(&mut uf, w[1]);
                if a != b {
                    uf[a] = b;
                }
            }
            rows.push((v, j, kids));
        }
    }

    let mut comp_vertices: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        let r = find(&mut uf, v);
        comp_vertices.entry(r).or_default().push(v);
    }
    let mut comp_rows: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, (_, _, support)) in rows.iter().enumerate() {
        let r = find(&mut uf, support[0]);
        comp_rows.entry(r).or_default().push(i);
    }

    let mut out = Vec::new();
    for (root, vertices) in comp_vertices {
        let col: BTreeMap<usize, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let row_idx = comp_rows.remove(&root).unwrap_or_default();
        let basis = if row_idx.is_empty() {
            // Unconstrained component (the root): everything is kernel.
            (0..vertices.len())
                .map(|i| {
                    let mut e = vec![Rat::zero(); vertices.len()];
                    e[i] = Rat::one();
                    e
                })
                .collect()
        } else {
            let mat = RatMatrix::from_rows(
                row_idx
                    .iter()
                    .map(|&ri| {
                        let (_, j, support) = &rows[ri];
                        let mut r = vec![Rat::zero(); vertices.len()];
                        for &w in support {
                            r[col[&w]] = m.lambda_sq(*j, w).clone();
                        }
                        r
                    })
                    .collect(),
            );
            mat.nullspace()
        };
        if !basis.is_empty() {
            out.push(KernelComponent { vertices, basis });
        }
    }
    Ok(out)
}

pub fn kernel_dimension(components: &[KernelComponent]) -> usize {
    components.iter().map(|c| c.basis.len()).sum()
}
