//! Weight systems and the multishift tuple on the truncated product.
//!
//! Structural identities (commutation, balance, moments, duality) are all
//! algebraic in the *squared* weights and are checked over exact rationals;
//! applying a shift to a vector needs square roots and is done in floating
//! point.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::multiindex::{big_to_rat, rising_factorial_ratio, total};
use crate::product::ProductTree;
use crate::rat::{parse_rat, rat_usize, to_f64, Rat};

#[derive(Debug, Error, PartialEq)]
pub enum ShiftError {
    #[error("applying S_{j} would push support beyond the total depth bound {bound}")]
    TruncationOverflow { j: usize, bound: usize },
    #[error("operator application needs float mode; squared weights are rational but the weights themselves are not")]
    ExactApplicationUnsupported,
    #[error("weight table entry for (j={j}, w={w}) must be positive")]
    NonPositiveWeight { j: usize, w: usize },
    #[error("missing weight table entry for (j={j}, w={w})")]
    MissingWeight { j: usize, w: usize },
    #[error("the multishift is not joint left-invertible: inf of the spherical function is not positive")]
    NotLeftInvertible,
    #[error("operation requires family weights")]
    FamilyWeightsRequired,
}

/// Bounded positive sequence `c : N -> (0, inf)` driving a weight family.
///
/// `CA` is `c_a(t) = (t+d)/(t+a)` and depends on the product dimension `d`,
/// which is supplied at evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSequence {
    CA { a: Rat },
    ReciprocalCA { a: Rat },
    Table { values: Vec<Rat>, eventual: Rat },
    Constant(Rat),
}

impl WeightSequence {
    pub fn eval(&self, t: usize, d: usize) -> Rat {
        let t = rat_usize(t);
        match self {
            WeightSequence::CA { a } => (t.clone() + rat_usize(d)) / (t + a.clone()),
            WeightSequence::ReciprocalCA { a } => (t.clone() + a.clone()) / (t + rat_usize(d)),
            WeightSequence::Table { values, eventual } => {
                let idx = t.to_integer();
                values
                    .get(usize::try_from(idx).expect("index fits"))
                    .cloned()
                    .unwrap_or_else(|| eventual.clone())
            }
            WeightSequence::Constant(v) => v.clone(),
        }
    }

    /// Exact supremum over all of `N` (monotone tails make this closed-form).
    pub fn sup(&self, d: usize) -> Rat {
        match self {
            // (t+d)/(t+a) is monotone with limit 1; extremes are at t=0 or the limit.
            WeightSequence::CA { a } => (rat_usize(d) / a.clone()).max(Rat::one()),
            WeightSequence::ReciprocalCA { a } => (a.clone() / rat_usize(d)).max(Rat::one()),
            WeightSequence::Table { values, eventual } => values
                .iter()
                .chain(std::iter::once(eventual))
                .cloned()
                .max()
                .expect("non-empty"),
            WeightSequence::Constant(v) => v.clone(),
        }
    }

    pub fn inf(&self, d: usize) -> Rat {
        match self {
            WeightSequence::CA { a } => (rat_usize(d) / a.clone()).min(Rat::one()),
            WeightSequence::ReciprocalCA { a } => (a.clone() / rat_usize(d)).min(Rat::one()),
            WeightSequence::Table { values, eventual } => values
                .iter()
                .chain(std::iter::once(eventual))
                .cloned()
                .min()
                .expect("non-empty"),
            WeightSequence::Constant(v) => v.clone(),
        }
    }

    pub fn reciprocal(&self) -> WeightSequence {
        match self {
            WeightSequence::CA { a } => WeightSequence::ReciprocalCA { a: a.clone() },
            WeightSequence::ReciprocalCA { a } => WeightSequence::CA { a: a.clone() },
            WeightSequence::Table { values, eventual } => WeightSequence::Table {
                values: values.iter().map(|v| v.recip()).collect(),
                eventual: eventual.recip(),
            },
            WeightSequence::Constant(v) => WeightSequence::Constant(v.recip()),
        }
    }

    /// Products `a_n = prod_{j<n} c(j)` for `n = 0..=n_max`.
    pub fn moment_products(&self, d: usize, n_max: usize) -> Vec<Rat> {
        let mut out = Vec::with_capacity(n_max + 1);
        let mut acc = Rat::one();
        out.push(acc.clone());
        for j in 0..n_max {
            acc *= self.eval(j, d);
            out.push(acc.clone());
        }
        out
    }

    /// CLI syntax: `c_a:A`, `recip_c_a:A`, `table:V1,V2,..;eventual=E`,
    /// `const:V`, with rationals written `p/q`.
    pub fn parse(s: &str) -> Result<WeightSequence, String> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("weight sequence {s:?} must look like kind:args"))?;
        let positive = |r: Rat, what: &str| {
            if r > Rat::zero() {
                Ok(r)
            } else {
                Err(format!("{what} must be positive in {s:?}"))
            }
        };
        match kind {
            "c_a" => Ok(WeightSequence::CA { a: positive(parse_rat(rest)?, "a")? }),
            "recip_c_a" => Ok(WeightSequence::ReciprocalCA { a: positive(parse_rat(rest)?, "a")? }),
            "const" => Ok(WeightSequence::Constant(positive(parse_rat(rest)?, "value")?)),
            "table" => {
                let (vals, eventual) = match rest.split_once(';') {
                    Some((vals, ev)) => {
                        let ev = ev
                            .strip_prefix("eventual=")
                            .ok_or_else(|| format!("expected eventual=... in {s:?}"))?;
                        (vals, parse_rat(ev)?)
                    }
                    None => return Err(format!("table sequence {s:?} needs ;eventual=...")),
                };
                let values = vals
                    .split(',')
                    .map(|v| parse_rat(v).and_then(|r| positive(r, "table entry")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(WeightSequence::Table { values, eventual: positive(eventual, "eventual")? })
            }
            other => Err(format!("unknown weight sequence kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
enum Weights {
    Family(WeightSequence),
    Explicit,
}

/// The multishift `S = (S_1, ..., S_d)` on the truncated `l^2(V)`.
///
/// Squared weights `lambda_j(w)^2` are stored for every enumerated `w` whose
/// j-th coordinate is not the factor root.
#[derive(Debug, Clone)]
pub struct Multishift {
    product: ProductTree,
    weights: Weights,
    lambda_sq: Vec<BTreeMap<usize, Rat>>,
}

/// Finitely supported vector on the enumerated vertices, either exact or
/// floating point.
#[derive(Debug, Clone, PartialEq)]
pub enum Vec2 {
    Exact(BTreeMap<usize, Rat>),
    Float(BTreeMap<usize, f64>),
}

impl Vec2 {
    pub fn basis_float(v: usize) -> Vec2 {
        Vec2::Float(BTreeMap::from([(v, 1.0)]))
    }

    pub fn basis_exact(v: usize) -> Vec2 {
        Vec2::Exact(BTreeMap::from([(v, Rat::one())]))
    }

    pub fn norm_sq_float(&self) -> f64 {
        match self {
            Vec2::Float(m) => m.values().map(|x| x * x).sum(),
            Vec2::Exact(m) => m.values().map(|x| to_f64(x).powi(2)).sum(),
        }
    }

    fn float_entries(&self) -> Result<&BTreeMap<usize, f64>, ShiftError> {
        match self {
            Vec2::Float(m) => Ok(m),
            Vec2::Exact(_) => Err(ShiftError::ExactApplicationUnsupported),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutingViolation {
    pub i: usize,
    pub j: usize,
    pub u: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceViolation {
    pub generation: usize,
    pub v: usize,
    pub w: usize,
}

impl Multishift {
    /// The weight family attached to the sequence `c`:
    /// `lambda_j(w)^2 = c(|d_v|) / card(chi_j(v)) * (d_{v_j} + 1) / (|d_v| + d)`
    /// for `w` a j-child of `v`.
    pub fn family(product: ProductTree, c: WeightSequence) -> Multishift {
        let d = product.dim();
        let mut lambda_sq = vec![BTreeMap::new(); d];
        for v in 0..product.vertex_count() {
            let dv = product.total_depth_of(v);
            if dv >= product.total_depth() {
                // Children live beyond the bound and carry no basis index.
                continue;
            }
            let depth_tuple = product.depth_tuple(v);
            for j in 0..d {
                let kids = product.chi_j(v, j).expect("coordinate in range");
                let card = rat_usize(kids.len());
                let val = c.eval(dv, d) / card * rat_usize(depth_tuple[j] + 1)
                    / rat_usize(dv + d);
                for r in kids {
                    if let Some(w) = r.index {
                        lambda_sq[j].insert(w, val.clone());
                    }
                }
            }
        }
        Multishift { product, weights: Weights::Family(c), lambda_sq }
    }

    /// Explicit squared-weight table indexed by `(j, w)`.
    pub fn explicit(
        product: ProductTree,
        table: Vec<BTreeMap<usize, Rat>>,
    ) -> Result<Multishift, ShiftError> {
        assert_eq!(table.len(), product.dim());
        for v in 0..product.vertex_count() {
            for j in 0..product.dim() {
                let needs = product.coords(v)[j] != 0;
                match (needs, table[j].get(&v)) {
                    (true, Some(val)) if *val > Rat::zero() => {}
                    (true, Some(_)) => return Err(ShiftError::NonPositiveWeight { j, w: v }),
                    (true, None) => return Err(ShiftError::MissingWeight { j, w: v }),
                    (false, _) => {}
                }
            }
        }
        Ok(Multishift { product, weights: Weights::Explicit, lambda_sq: table })
    }

    pub fn product(&self) -> &ProductTree {
        &self.product
    }

    pub fn family_sequence(&self) -> Option<&WeightSequence> {
        match &self.weights {
            Weights::Family(c) => Some(c),
            Weights::Explicit => None,
        }
    }

    /// `lambda_j(w)^2` for an enumerated `w` with non-root j-th coordinate.
    pub fn lambda_sq(&self, j: usize, w: usize) -> &Rat {
        &self.lambda_sq[j][&w]
    }

    pub fn lambda(&self, j: usize, w: usize) -> f64 {
        to_f64(self.lambda_sq(j, w)).sqrt()
    }

    fn guard_children(&self, support: &BTreeMap<usize, f64>, j: usize) -> Result<(), ShiftError> {
        let bound = self.product.total_depth();
        for &v in support.keys() {
            if self.product.total_depth_of(v) >= bound {
                return Err(ShiftError::TruncationOverflow { j, bound });
            }
        }
        Ok(())
    }

    /// `S_j f` in float mode: `S_j e_v = sum_{w in chi_j(v)} lambda_j(w) e_w`.
    pub fn apply_sj(&self, j: usize, f: &Vec2) -> Result<Vec2, ShiftError> {
        let entries = f.float_entries()?;
        self.guard_children(entries, j)?;
        let mut out: BTreeMap<usize, f64> = BTreeMap::new();
        for (&v, &coeff) in entries {
            for r in self.product.chi_j(v, j).expect("coordinate in range") {
                let w = r.index.expect("guarded above");
                *out.entry(w).or_insert(0.0) += coeff * self.lambda(j, w);
            }
        }
        Ok(Vec2::Float(out))
    }

    /// `S_j^* f` in float mode: `S_j^* e_w = lambda_j(w) e_{par_j(w)}`.
    pub fn apply_sj_adjoint(&self, j: usize, f: &Vec2) -> Result<Vec2, ShiftError> {
        let entries = f.float_entries()?;
        let mut out: BTreeMap<usize, f64> = BTreeMap::new();
        for (&w, &coeff) in entries {
            if self.product.coords(w)[j] != 0 {
                let p = self.product.par_j(w, j).expect("non-root coordinate");
                *out.entry(p).or_insert(0.0) += coeff * self.lambda(j, w);
            }
        }
        Ok(Vec2::Float(out))
    }

    /// `S^alpha f` (coordinate powers in any order; the weights commute).
    pub fn apply_s_alpha(&self, alpha: &[usize], f: &Vec2) -> Result<Vec2, ShiftError> {
        let mut cur = f.clone();
        for (j, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                cur = self.apply_sj(j, &cur)?;
            }
        }
        Ok(cur)
    }

    /// Exact squared amplitudes of `S^alpha e_v`: each target vertex is hit
    /// along a unique tree path, so the squared coefficient is a product of
    /// squared weights.
    pub fn s_alpha_squared_amplitudes(
        &self,
        alpha: &[usize],
        v: usize,
    ) -> Result<BTreeMap<usize, Rat>, ShiftError> {
        let bound = self.product.total_depth();
        let mut amp: BTreeMap<usize, Rat> = BTreeMap::from([(v, Rat::one())]);
        for (j, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                let mut next: BTreeMap<usize, Rat> = BTreeMap::new();
                for (&x, a) in &amp {
                    if self.product.total_depth_of(x) >= bound {
                        return Err(ShiftError::TruncationOverflow { j, bound });
                    }
                    for r in self.product.chi_j(x, j).expect("coordinate in range") {
                        let w = r.index.expect("within bound");
                        next.insert(w, a.clone() * self.lambda_sq(j, w));
                    }
                }
                amp = next;
            }
        }
        Ok(amp)
    }

    /// `||S^alpha e_v||^2` computed operationally (the brute-force oracle).
    pub fn moment_norm_sq_oracle(&self, alpha: &[usize], v: usize) -> Result<Rat, ShiftError> {
        Ok(self.s_alpha_squared_amplitudes(alpha, v)?.values().sum())
    }

    /// Closed-form `||S^alpha e_v||^2` for family weights:
    /// `(d_v + alpha)!/d_v! * prod_{j<|alpha|} c(|d_v|+j)/(|d_v|+d+j)`.
    pub fn moment_norm_sq_closed(&self, alpha: &[usize], v: usize) -> Result<Rat, ShiftError> {
        let c = self.family_sequence().ok_or(ShiftError::FamilyWeightsRequired)?;
        let d = self.product.dim();
        let dv = self.product.depth_tuple(v);
        let base = self.product.total_depth_of(v);
        let mut acc = big_to_rat(rising_factorial_ratio(&dv, alpha));
        for j in 0..total(alpha) {
            acc *= c.eval(base + j, d) / rat_usize(base + d + j);
        }
        Ok(acc)
    }

    /// Squared-weight form of the commutation identity, checked on every
    /// grandchild within the truncation. `None` means commuting.
    pub fn check_commuting(&self) -> Option<CommutingViolation> {
        let p = &self.product;
        for v in 0..p.vertex_count() {
            if p.total_depth_of(v) + 2 > p.total_depth() {
                continue;
            }
            for i in 0..p.dim() {
                for j in (i + 1)..p.dim() {
                    for ci in p.chi_j_in(v, i).expect("in range") {
                        for u in p.chi_j_in(ci, j).expect("in range") {
                            let par_j = p.par_j(u, j).expect("has j-parent");
                            let par_i = p.par_j(u, i).expect("has i-parent");
                            let lhs = self.lambda_sq(j, u).clone()
                                * self.lambda_sq(i, par_j);
                            let rhs = self.lambda_sq(i, u).clone()
                                * self.lambda_sq(j, par_i);
                            if lhs != rhs {
                                return Some(CommutingViolation { i, j, u });
                            }
                        }
                    }
                }
            }
        }
        None
    }

    /// `C(v) = sum_j ||S_j e_v||^2`, exact. Defined for `|d_v| < Dtot`.
    pub fn spherical_c(&self, v: usize) -> Rat {
        let p = &self.product;
        assert!(p.total_depth_of(v) < p.total_depth(), "children must be enumerated");
        let mut acc = Rat::zero();
        for j in 0..p.dim() {
            for w in p.chi_j_in(v, j).expect("in range") {
                acc += self.lambda_sq(j, w).clone();
            }
        }
        acc
    }

    /// Spherically balanced iff `C` is constant on every generation with
    /// enumerated children. `None` means balanced.
    pub fn check_balanced(&self) -> Option<BalanceViolation> {
        let p = &self.product;
        for t in 0..p.total_depth() {
            let gen = p.generation(t);
            let Some((&first, rest)) = gen.split_first() else { continue };
            let c0 = self.spherical_c(first);
            for &w in rest {
                if self.spherical_c(w) != c0 {
                    return Some(BalanceViolation { generation: t, v: first, w });
                }
            }
        }
        None
    }

    /// Spherical Cauchy dual: weights divided by `C` at the parent. A family
    /// multishift dualizes to the family of the reciprocal sequence.
    pub fn cauchy_dual(&self) -> Result<Multishift, ShiftError> {
        match &self.weights {
            Weights::Family(c) => {
                if c.inf(self.product.dim()) <= Rat::zero() {
                    return Err(ShiftError::NotLeftInvertible);
                }
                Ok(Multishift::family(self.product.clone(), c.reciprocal()))
            }
            Weights::Explicit => {
                let p = &self.product;
                let mut table = vec![BTreeMap::new(); p.dim()];
                for v in 0..p.vertex_count() {
                    if p.total_depth_of(v) >= p.total_depth() {
                        continue;
                    }
                    let c = self.spherical_c(v);
                    if c <= Rat::zero() {
                        return Err(ShiftError::NotLeftInvertible);
                    }
                    let c2 = c.clone() * &c;
                    for j in 0..p.dim() {
                        for w in p.chi_j_in(v, j).expect("in range") {
                            table[j].insert(w, self.lambda_sq(j, w).clone() / c2.clone());
                        }
                    }
                }
                Multishift::explicit(p.clone(), table)
            }
        }
    }

    /// Full squared-weight table, for exact comparisons between shifts.
    pub fn lambda_sq_table(&self) -> &[BTreeMap<usize, Rat>] {
        &self.lambda_sq
    }
}

/// Predicates and report for the constant-on-parents rigidity statement.
pub mod rigidity {
    use super::*;

    /// First vertex whose parent set carries two different values, if any.
    pub fn constant_on_parents(p: &ProductTree, f: &[Rat]) -> Option<usize> {
        for v in 1..p.vertex_count() {
            let pars = p.par_all(v);
            if pars.windows(2).any(|w| f[w[0]] != f[w[1]]) {
                return Some(v);
            }
        }
        None
    }

    /// First vertex whose (fully enumerated) child set carries two values.
    pub fn constant_on_children(p: &ProductTree, f: &[Rat]) -> Option<usize> {
        for v in 0..p.vertex_count() {
            if p.total_depth_of(v) >= p.total_depth() {
                continue;
            }
            let kids: Vec<usize> = p
                .chi_all(v)
                .expect("in range")
                .into_iter()
                .map(|r| r.index.expect("within bound"))
                .collect();
            if kids.windows(2).any(|w| f[w[0]] != f[w[1]]) {
                return Some(v);
            }
        }
        None
    }

    /// First generation `t <= t_max` on which `f` is not constant.
    pub fn constant_on_generations(p: &ProductTree, f: &[Rat], t_max: usize) -> Option<usize> {
        for t in 0..=t_max.min(p.total_depth()) {
            let gen = p.generation(t);
            if gen.windows(2).any(|w| f[w[0]] != f[w[1]]) {
                return Some(t);
            }
        }
        None
    }

    /// Checks constancy on every depth-tuple slice `V_beta`, and that slices
    /// of equal total depth share their value.
    pub fn constant_on_depth_slices(p: &ProductTree, f: &[Rat], t_max: usize) -> bool {
        let t_max = t_max.min(p.total_depth());
        for t in 0..=t_max {
            let gen = p.generation(t);
            let mut per_beta: BTreeMap<Vec<usize>, &Rat> = BTreeMap::new();
            for &v in gen {
                let beta = p.depth_tuple(v);
                match per_beta.get(&beta) {
                    Some(&val) if *val != f[v] => return false,
                    Some(_) => {}
                    None => {
                        per_beta.insert(beta, &f[v]);
                    }
                }
            }
            if per_beta.values().collect::<Vec<_>>().windows(2).any(|w| w[0] != w[1]) {
                return false;
            }
        }
        true
    }

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct RigidityReport {
        pub d: usize,
        pub par_constant: bool,
        pub chi_constant: bool,
        pub depth_slice_constant: bool,
        /// Generations `t <= Dtot - 1`, where the truncation carries enough
        /// constraints for the rigidity argument to apply.
        pub generation_constant_interior: bool,
        /// All generations `t <= Dtot`; the top one is unconstrained by
        /// parent sets inside the truncation.
        pub generation_constant_full: bool,
        /// For `d >= 2`: parent-constancy and interior generation-constancy
        /// must agree. For `d = 1` they may differ.
        pub equivalent_on_interior: bool,
    }

    pub fn rigidity_report(p: &ProductTree, f: &[Rat]) -> RigidityReport {
        assert_eq!(f.len(), p.vertex_count());
        let interior = p.total_depth().saturating_sub(1);
        let par_constant = constant_on_parents(p, f).is_none();
        let generation_constant_interior = constant_on_generations(p, f, interior).is_none();
        RigidityReport {
            d: p.dim(),
            par_constant,
            chi_constant: constant_on_children(p, f).is_none(),
            depth_slice_constant: constant_on_depth_slices(p, f, interior),
            generation_constant_interior,
            generation_constant_full: constant_on_generations(p, f, p.total_depth()).is_none(),
            equivalent_on_interior: par_constant == generation_constant_interior,
        }
    }

    /// Union-find closure of the parent-constancy constraints: assigns one
    /// value per constraint class, producing the most general function that
    /// is constant on every parent set.
    pub fn par_closure_classes(p: &ProductTree) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..p.vertex_count()).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        for v in 1..p.vertex_count() {
            let pars = p.par_all(v);
            for w in pars.windows(2) {
                let a = find(&mut parent, w[0]);
                let b = find(&mut parent, w[1]);
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut roots: BTreeMap<usize, usize> = BTreeMap::new();
        (0..p.vertex_count())
            .map(|v| {
                let r = find(&mut parent, v);
                let next = roots.len();
                *roots.entry(r).or_insert(next)
            })
            .collect()
    }
}
