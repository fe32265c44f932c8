//! Randomized cross-module invariants on seeded corpora.

use proptest::prelude::*;

use treeshift::cokernel::{
    dim_e, enumerate_blocks, joint_kernel_bruteforce, kernel_dimension, total_branching_bound,
};
use treeshift::corpus::{random_tree, relabel_tree, rng};
use treeshift::linalg::{same_row_span, RatMatrix};
use treeshift::multiindex::{compositions, compositions_up_to};
use treeshift::multishift::{Multishift, Vec2, WeightSequence};
use treeshift::product::{build_product, coordinate_subsets};
use treeshift::rat::rat;
use treeshift::trees::graph_isomorphic;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn canonical_code_is_relabeling_invariant(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let t = random_tree(&mut r, "t", 2, 4, 2);
        let s = relabel_tree(&mut r, &t, "s");
        prop_assert_eq!(t.canonical_form().code, s.canonical_form().code);
        prop_assert!(graph_isomorphic(&t, &s));
    }

    #[test]
    fn generation_counts_monotone_and_stable(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let t = random_tree(&mut r, "t", 2, 4, 3);
        let k = t.branching_index();
        for n in 0..t.truncation_depth() + 3 {
            prop_assert!(t.generation_count(n + 1) >= t.generation_count(n));
            if n >= k {
                prop_assert_eq!(t.generation_count(n), t.generation_count(k));
            }
        }
    }

    #[test]
    fn phi_partition_and_sibling_counts(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let d = 1 + (seed as usize % 2);
        let factors: Vec<_> =
            (0..d).map(|i| random_tree(&mut r, &format!("f{i}"), 1, 3, 2)).collect();
        let depth = 2.min(factors.iter().map(|t| t.truncation_depth()).min().unwrap());
        let p = build_product(factors, depth).unwrap();

        let total: usize = coordinate_subsets(d).iter().map(|f| p.phi_f(f).len()).sum();
        prop_assert_eq!(total, p.vertex_count());

        for f in coordinate_subsets(d).into_iter().filter(|f| !f.is_empty()) {
            for u in p.omega_f(&f, depth) {
                let class = p.sib_f(u, &f).unwrap();
                prop_assert_eq!(class.len(), p.m_count(u, &f));
            }
        }

        // Product generation cards are convolutions of the factor cards.
        for k in 0..=depth {
            let expected: usize = compositions(k, d)
                .iter()
                .map(|beta| {
                    (0..d)
                        .map(|j| p.factors()[j].generation_count(beta[j]))
                        .product::<usize>()
                })
                .sum();
            prop_assert_eq!(p.generation(k).len(), expected);
        }
    }
}

/// Brute-force rooted-tree isomorphism by backtracking over child matchings;
/// deliberately independent of the canonical-code route it checks.
fn iso_backtrack(
    a: &treeshift::trees::RootedTreePrefix,
    va: usize,
    b: &treeshift::trees::RootedTreePrefix,
    vb: usize,
    depth: usize,
) -> bool {
    if a.depth(va) == depth || b.depth(vb) == depth {
        return a.depth(va) == b.depth(vb);
    }
    let ca = a.children(va);
    let cb = b.children(vb);
    if ca.len() != cb.len() {
        return false;
    }
    fn matching(
        a: &treeshift::trees::RootedTreePrefix,
        ca: &[usize],
        b: &treeshift::trees::RootedTreePrefix,
        cb: &[usize],
        used: &mut Vec<bool>,
        i: usize,
        depth: usize,
    ) -> bool {
        if i == ca.len() {
            return true;
        }
        for j in 0..cb.len() {
            if !used[j] && iso_backtrack(a, ca[i], b, cb[j], depth) {
                used[j] = true;
                if matching(a, ca, b, cb, used, i + 1, depth) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    matching(a, ca, b, cb, &mut vec![false; cb.len()], 0, depth)
}

#[test]
fn canonical_codes_agree_with_bijection_search() {
    let mut r = rng(1001);
    let mut trees: Vec<_> =
        (0..10).map(|i| random_tree(&mut r, &format!("t{i}"), 2, 3, 1)).collect();
    // Seed known positives.
    let extra = relabel_tree(&mut r, &trees[0], "clone");
    trees.push(extra);
    for a in &trees {
        for b in &trees {
            let depth = a.truncation_depth().min(b.truncation_depth());
            let brute = iso_backtrack(a, 0, b, 0, depth);
            assert_eq!(
                brute,
                graph_isomorphic(a, b),
                "codes and bijection search disagree on {} vs {}",
                a.name(),
                b.name()
            );
        }
    }
    // The named fixture pair: T_11 vs T_12 at k = 2 are non-isomorphic.
    use treeshift::trees::{make_standard, StandardTree};
    let t11 = make_standard(StandardTree::T1j { k: 2, j: 1 }, 4).unwrap();
    let t12 = make_standard(StandardTree::T1j { k: 2, j: 2 }, 4).unwrap();
    assert!(!iso_backtrack(&t11, 0, &t12, 0, 4));
    assert!(!graph_isomorphic(&t11, &t12));
}

#[test]
fn children_beyond_the_bound_are_flagged() {
    let mut r = rng(5);
    let t1 = random_tree(&mut r, "a", 1, 3, 3);
    let t2 = random_tree(&mut r, "b", 1, 2, 3);
    let p = build_product(vec![t1, t2], 3).unwrap();
    for &v in p.generation(p.total_depth()) {
        for j in 0..p.dim() {
            for r in p.chi_j(v, j).unwrap() {
                assert!(r.index.is_none(), "top-generation children have no basis index");
                assert_eq!(r.coords.len(), p.dim());
            }
        }
    }
}

#[test]
fn graph_isomorphism_is_an_equivalence_on_a_corpus() {
    let mut r = rng(42);
    let trees: Vec<_> = (0..8).map(|i| random_tree(&mut r, &format!("t{i}"), 2, 3, 2)).collect();
    for a in &trees {
        assert!(graph_isomorphic(a, a));
        for b in &trees {
            assert_eq!(graph_isomorphic(a, b), graph_isomorphic(b, a));
            for c in &trees {
                if graph_isomorphic(a, b) && graph_isomorphic(b, c) {
                    assert!(graph_isomorphic(a, c));
                }
            }
        }
    }
}

#[test]
fn float_shifts_commute_within_tolerance() {
    let mut r = rng(7);
    for seed in 0..6 {
        let t1 = random_tree(&mut r, &format!("a{seed}"), 1, 3, 2);
        let t2 = random_tree(&mut r, &format!("b{seed}"), 1, 3, 2);
        let depth = 3.min(t1.truncation_depth()).min(t2.truncation_depth());
        let p = build_product(vec![t1, t2], depth).unwrap();
        let m = Multishift::family(p, WeightSequence::CA { a: rat(2, 1) });
        let p = m.product();
        for v in 0..p.vertex_count() {
            if p.total_depth_of(v) + 2 > p.total_depth() {
                continue;
            }
            let e = Vec2::basis_float(v);
            let ab = m.apply_sj(1, &m.apply_sj(0, &e).unwrap()).unwrap();
            let ba = m.apply_sj(0, &m.apply_sj(1, &e).unwrap()).unwrap();
            let (Vec2::Float(x), Vec2::Float(y)) = (&ab, &ba) else { unreachable!() };
            for (k, xv) in x {
                let yv = y.get(k).copied().unwrap_or(0.0);
                assert!((xv - yv).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn random_products_dimension_formula_and_kernel() {
    let mut r = rng(2024);
    let mut checked = 0usize;
    for case in 0..12 {
        let d = 1 + case % 2;
        let factors: Vec<_> = (0..d)
            .map(|i| random_tree(&mut r, &format!("f{case}_{i}"), if i == 0 { 2 } else { 1 }, 3, 2))
            .collect();
        let bound = total_branching_bound(&factors);
        let depth = bound + 1;
        if factors.iter().any(|t| t.truncation_depth() < depth) {
            continue;
        }
        let p = build_product(factors.clone(), depth).unwrap();

        for block in enumerate_blocks(&p).unwrap() {
            assert_eq!(block.basis.len(), block.dim_closed);
            let tensor = treeshift::cokernel::block_basis_tensor(&p, block.u, &block.f);
            assert_eq!(tensor.len(), block.dim_closed);
            if block.dim_closed > 0 {
                assert!(same_row_span(
                    &RatMatrix::from_rows(block.basis.clone()),
                    &RatMatrix::from_rows(tensor),
                ));
            }
        }

        let m = Multishift::family(p, WeightSequence::CA { a: rat(1, 1) });
        let comps = joint_kernel_bruteforce(&m).unwrap();
        assert_eq!(kernel_dimension(&comps), dim_e(&factors));
        checked += 1;
    }
    assert!(checked >= 6, "corpus too small: {checked}");
}

#[test]
fn classification_invariant_under_relabeling() {
    use treeshift::classify::{classify, modules_isomorphic};
    let mut r = rng(314);
    for case in 0..10 {
        let d = 1 + case % 2;
        let t1: Vec<_> =
            (0..d).map(|j| random_tree(&mut r, &format!("x{case}{j}"), 2, 3, 4)).collect();
        let t2: Vec<_> =
            (0..d).map(|j| random_tree(&mut r, &format!("y{case}{j}"), 2, 3, 4)).collect();
        let t1r: Vec<_> = t1.iter().map(|t| relabel_tree(&mut r, t, "rl")).collect();
        let t2r: Vec<_> = t2.iter().map(|t| relabel_tree(&mut r, t, "rr")).collect();
        assert_eq!(
            modules_isomorphic(&t1, &t2, 2).unwrap(),
            modules_isomorphic(&t1r, &t2r, 2).unwrap()
        );
        let a = classify(&t1, &t2, 2).unwrap();
        let b = classify(&t1r, &t2r, 2).unwrap();
        assert_eq!(a.condition_ii.equal, b.condition_ii.equal);
        assert_eq!(a.condition_iii.equal, b.condition_iii.equal);
        assert_eq!(a.condition_iv.equal, b.condition_iv.equal);
    }
}

#[test]
fn moments_closed_vs_oracle_on_random_products() {
    let mut r = rng(99);
    for case in 0..5 {
        let t1 = random_tree(&mut r, &format!("m{case}a"), 2, 3, 2);
        let t2 = random_tree(&mut r, &format!("m{case}b"), 1, 2, 3);
        let depth = 4.min(t1.truncation_depth()).min(t2.truncation_depth());
        let p = build_product(vec![t1, t2], depth).unwrap();
        for c in [
            WeightSequence::CA { a: rat(1, 1) },
            WeightSequence::ReciprocalCA { a: rat(3, 1) },
            WeightSequence::parse("table:3/2,1;eventual=2").unwrap(),
        ] {
            let m = Multishift::family(p.clone(), c);
            assert!(m.check_commuting().is_none());
            assert!(m.check_balanced().is_none());
            for v in 0..p.vertex_count() {
                for alpha in compositions_up_to(2, 2) {
                    if p.total_depth_of(v) + alpha.iter().sum::<usize>() > p.total_depth() {
                        continue;
                    }
                    assert_eq!(
                        m.moment_norm_sq_closed(&alpha, v).unwrap(),
                        m.moment_norm_sq_oracle(&alpha, v).unwrap()
                    );
                }
            }
        }
    }
}
