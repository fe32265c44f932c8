//! Directed Cartesian products of rooted tree prefixes.
//!
//! Vertices of the product are d-tuples of factor vertices; the product is
//! materialized eagerly up to a total-depth bound so that all downstream
//! linear algebra works against a fixed basis ordering. Children one level
//! beyond the bound remain addressable as coordinate tuples but carry no
//! basis index.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::trees::RootedTreePrefix;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProductError {
    #[error("total depth bound {bound} exceeds truncation depth {depth} of factor {factor}")]
    DepthBoundExceedsFactor { factor: usize, depth: usize, bound: usize },
    #[error("coordinate {coord} of vertex {vertex} is the factor root and has no parent")]
    RootHasNoParent { vertex: usize, coord: usize },
    #[error("vertex {vertex} does not lie in Phi_F for F = {f:?}")]
    VertexNotInPhiF { vertex: usize, f: Vec<usize> },
    #[error("coordinate index {coord} out of range for a {d}-fold product")]
    BadCoordinate { coord: usize, d: usize },
    #[error("subset {g:?} is not contained in {f:?}")]
    NotASubset { f: Vec<usize>, g: Vec<usize> },
}

/// A product vertex as a tuple of factor vertex ids; `index` is present
/// exactly when the vertex lies inside the enumerated truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexRef {
    pub coords: Vec<usize>,
    pub index: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ProductTree {
    factors: Vec<RootedTreePrefix>,
    total_depth: usize,
    verts: Vec<Vec<usize>>,
    index: BTreeMap<Vec<usize>, usize>,
    total_depths: Vec<usize>,
    generations: Vec<Vec<usize>>,
}

pub fn build_product(
    factors: Vec<RootedTreePrefix>,
    total_depth: usize,
) -> Result<ProductTree, ProductError> {
    assert!(!factors.is_empty(), "a product needs at least one factor");
    for (j, t) in factors.iter().enumerate() {
        if total_depth > t.truncation_depth() {
            return Err(ProductError::DepthBoundExceedsFactor {
                factor: j,
                depth: t.truncation_depth(),
                bound: total_depth,
            });
        }
    }

    let mut verts: Vec<Vec<usize>> = Vec::new();
    let mut cur = vec![0usize; factors.len()];
    enumerate(&factors, total_depth, 0, 0, &mut cur, &mut verts);
    verts.sort_by(|a, b| {
        let da: usize = a.iter().enumerate().map(|(j, &v)| factors[j].depth(v)).sum();
        let db: usize = b.iter().enumerate().map(|(j, &v)| factors[j].depth(v)).sum();
        (da, a).cmp(&(db, b))
    });

    let index: BTreeMap<Vec<usize>, usize> =
        verts.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let total_depths: Vec<usize> = verts
        .iter()
        .map(|v| v.iter().enumerate().map(|(j, &x)| factors[j].depth(x)).sum())
        .collect();
    let mut generations = vec![Vec::new(); total_depth + 1];
    for (i, &d) in total_depths.iter().enumerate() {
        generations[d].push(i);
    }

    Ok(ProductTree { factors, total_depth, verts, index, total_depths, generations })
}

fn enumerate(
    factors: &[RootedTreePrefix],
    bound: usize,
    j: usize,
    used: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if j == factors.len() {
        out.push(cur.clone());
        return;
    }
    for v in 0..factors[j].vertex_count() {
        let d = factors[j].depth(v);
        if used + d > bound {
            continue;
        }
        cur[j] = v;
        enumerate(factors, bound, j + 1, used + d, cur, out);
    }
    cur[j] = 0;
}

impl ProductTree {
    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[RootedTreePrefix] {
        &self.factors
    }

    pub fn total_depth(&self) -> usize {
        self.total_depth
    }

    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    /// The root `(root_1, ..., root_d)`; always index 0.
    pub fn root(&self) -> usize {
        0
    }

    pub fn coords(&self, v: usize) -> &[usize] {
        &self.verts[v]
    }

    pub fn index_of(&self, coords: &[usize]) -> Option<usize> {
        self.index.get(coords).copied()
    }

    pub fn depth_tuple(&self, v: usize) -> Vec<usize> {
        self.verts[v]
            .iter()
            .enumerate()
            .map(|(j, &x)| self.factors[j].depth(x))
            .collect()
    }

    pub fn total_depth_of(&self, v: usize) -> usize {
        self.total_depths[v]
    }

    /// Vertices of the k-th generation (total depth k) of the truncation.
    pub fn generation(&self, k: usize) -> &[usize] {
        self.generations.get(k).map_or(&[], |g| g.as_slice())
    }

    pub fn vertices_with_depth(&self, beta: &[usize]) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.depth_tuple(v) == beta).collect()
    }

    fn check_coord(&self, j: usize) -> Result<(), ProductError> {
        if j >= self.dim() {
            Err(ProductError::BadCoordinate { coord: j, d: self.dim() })
        } else {
            Ok(())
        }
    }

    /// Children of `v` along coordinate `j`; children whose total depth
    /// exceeds the bound are returned without a basis index.
    pub fn chi_j(&self, v: usize, j: usize) -> Result<Vec<VertexRef>, ProductError> {
        self.check_coord(j)?;
        let mut out = Vec::new();
        for &c in self.factors[j].children(self.verts[v][j]) {
            let mut coords = self.verts[v].clone();
            coords[j] = c;
            let index = self.index.get(&coords).copied();
            out.push(VertexRef { coords, index });
        }
        Ok(out)
    }

    /// In-truncation children of `v` along coordinate `j`.
    pub fn chi_j_in(&self, v: usize, j: usize) -> Result<Vec<usize>, ProductError> {
        Ok(self.chi_j(v, j)?.into_iter().filter_map(|r| r.index).collect())
    }

    pub fn par_j(&self, v: usize, j: usize) -> Result<usize, ProductError> {
        self.check_coord(j)?;
        let vj = self.verts[v][j];
        let p = self.factors[j]
            .parent(vj)
            .ok_or(ProductError::RootHasNoParent { vertex: v, coord: j })?;
        let mut coords = self.verts[v].clone();
        coords[j] = p;
        Ok(self.index[&coords])
    }

    /// `sib_j(v) = chi_j(par_j(v))`: vary coordinate `j` over the siblings of
    /// `v_j` in its factor. Contains `v` itself.
    pub fn sib_j(&self, v: usize, j: usize) -> Result<Vec<usize>, ProductError> {
        let p = self.par_j(v, j)?;
        Ok(self.chi_j(p, j)?.into_iter().map(|r| r.index.expect("sibling in bound")).collect())
    }

    /// `Chi(v)`: union of the coordinate children.
    pub fn chi_all(&self, v: usize) -> Result<Vec<VertexRef>, ProductError> {
        let mut out = Vec::new();
        for j in 0..self.dim() {
            out.extend(self.chi_j(v, j)?);
        }
        Ok(out)
    }

    /// `Par(v)`: union of the coordinate parents (one per non-root coordinate).
    pub fn par_all(&self, v: usize) -> Vec<usize> {
        (0..self.dim()).filter_map(|j| self.par_j(v, j).ok()).collect()
    }

    /// Is `F` exactly the set of non-root coordinates of `v`?
    pub fn in_phi_f(&self, v: usize, f: &[usize]) -> bool {
        (0..self.dim()).all(|j| (self.verts[v][j] != 0) == f.contains(&j))
    }

    /// All enumerated vertices whose non-root coordinate set is exactly `F`.
    pub fn phi_f(&self, f: &[usize]) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.in_phi_f(v, f)).collect()
    }

    /// Is the factor vertex `x` of factor `j` the chosen representative of
    /// its sibling class (the minimum-id child of its parent)?
    fn is_rep(&self, j: usize, x: usize) -> bool {
        match self.factors[j].parent(x) {
            Some(p) => self.factors[j].children(p)[0] == x,
            None => false,
        }
    }

    /// Canonical indexing set for `Phi_F`, built from the per-coordinate
    /// minimum-id sibling representatives, restricted to total depth
    /// `<= max_total_depth`.
    pub fn omega_f(&self, f: &[usize], max_total_depth: usize) -> Vec<usize> {
        if f.is_empty() {
            return vec![self.root()];
        }
        (0..self.vertex_count())
            .filter(|&v| {
                self.total_depths[v] <= max_total_depth
                    && self.in_phi_f(v, f)
                    && f.iter().all(|&j| self.is_rep(j, self.verts[v][j]))
            })
            .collect()
    }

    /// Iterated sibling class `sib_F(u)` (equals `{u}` for empty `F`).
    pub fn sib_f(&self, u: usize, f: &[usize]) -> Result<Vec<usize>, ProductError> {
        if !self.in_phi_f(u, f) {
            return Err(ProductError::VertexNotInPhiF { vertex: u, f: f.to_vec() });
        }
        let mut acc: Vec<Vec<usize>> = vec![self.verts[u].clone()];
        for &j in f {
            let sibs = self.factors[j]
                .siblings(self.verts[u][j])
                .expect("non-root coordinate has siblings")
                .to_vec();
            let mut next = Vec::with_capacity(acc.len() * sibs.len());
            for coords in &acc {
                for &s in &sibs {
                    let mut c = coords.clone();
                    c[j] = s;
                    next.push(c);
                }
            }
            acc = next;
        }
        let mut out: Vec<usize> = acc.iter().map(|c| self.index[c]).collect();
        out.sort_unstable();
        Ok(out)
    }

    /// `sib_{F,G}(u) = { v_G : v in sib_F(u) }` for `G` a subset of `F`,
    /// where `v_G` keeps the `G`-coordinates and roots the rest.
    pub fn sib_fg(&self, u: usize, f: &[usize], g: &[usize]) -> Result<Vec<usize>, ProductError> {
        if !g.iter().all(|x| f.contains(x)) {
            return Err(ProductError::NotASubset { f: f.to_vec(), g: g.to_vec() });
        }
        let mut out: Vec<usize> = self
            .sib_f(u, f)?
            .into_iter()
            .map(|v| {
                let coords: Vec<usize> = (0..self.dim())
                    .map(|j| if g.contains(&j) { self.verts[v][j] } else { 0 })
                    .collect();
                self.index[&coords]
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// `v` with coordinate `j` replaced by the `j`-th coordinate of `u`.
    pub fn with_coord(&self, v: usize, j: usize, from: usize) -> usize {
        let mut coords = self.verts[v].clone();
        coords[j] = self.verts[from][j];
        self.index[&coords]
    }

    /// Number of variables of the sibling-sum system on `sib_F(u)`.
    pub fn m_count(&self, u: usize, f: &[usize]) -> usize {
        f.iter()
            .map(|&j| self.factors[j].siblings(self.verts[u][j]).map_or(1, |s| s.len()))
            .product()
    }

    /// Number of equations of the sibling-sum system on `sib_F(u)`.
    pub fn n_count(&self, u: usize, f: &[usize]) -> usize {
        f.iter()
            .map(|&j| {
                f.iter()
                    .filter(|&&i| i != j)
                    .map(|&i| self.factors[i].siblings(self.verts[u][i]).map_or(1, |s| s.len()))
                    .product::<usize>()
            })
            .sum()
    }
}

/// All subsets of `{0, .., d-1}` as sorted coordinate lists, ordered by
/// (cardinality, lexicographic).
pub fn coordinate_subsets(d: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..(1 << d))
        .map(|mask| (0..d).filter(|&j| mask & (1 << j) != 0).collect())
        .collect();
    out.sort_by_key(|s: &Vec<usize>| (s.len(), s.clone()));
    out
}
