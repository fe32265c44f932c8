//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Exact checks are rational equalities with no tolerance; the intertwiner
//! certificate uses the stated 1e-9 residual bound. Seeded corpora make
//! every run identical.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use num_traits::{One, Zero};

use treeshift::classify::{
    build_intertwiner, classify, factors_graph_isomorphic, modules_isomorphic, Decision,
};
use treeshift::cokernel::{
    block_basis_tensor, dim_e, enumerate_blocks, joint_kernel_bruteforce, kernel_dimension,
    total_branching_bound,
};
use treeshift::corpus::{random_tree, relabel_tree, rng};
use treeshift::linalg::{same_row_span, RatMatrix};
use treeshift::model::{
    classical_ball_coeff, density, hausdorff_check, integral_representation_check,
    kernel_coeff_closed, kernel_coeff_oracle, verify_density_moments, DensityKind,
    HausdorffOutcome, MomentSequence,
};
use treeshift::multiindex::{big_to_rat, compositions, compositions_up_to, multinomial, total};
use treeshift::multishift::{rigidity, Multishift, WeightSequence};
use treeshift::product::{build_product, ProductTree};
use treeshift::rat::{rat, Rat};
use treeshift::trees::{
    make_standard, validate_tree, RootedTreePrefix, StandardTree, TreeSpec, VertexSpec,
};
use rand_chacha::ChaCha8Rng;
use rand::Rng;

fn std_tree(kind: StandardTree, depth: usize) -> RootedTreePrefix {
    make_standard(kind, depth).unwrap()
}

fn fixture_products(depth: usize) -> Vec<ProductTree> {
    let t20 = std_tree(StandardTree::Tn0 { n0: 2 }, depth);
    let ray = std_tree(StandardTree::Ray, depth);
    let b2 = std_tree(StandardTree::Binary { depth: 2 }, depth);
    vec![
        build_product(vec![t20.clone(), ray], depth).unwrap(),
        build_product(vec![b2, t20], depth).unwrap(),
    ]
}

/// The randomized product corpus shared by criteria 1 and 2.
fn corpus_products() -> Vec<(Vec<RootedTreePrefix>, usize)> {
    let mut r = rng(0xC0FFEE);
    let mut out = Vec::new();
    for case in 0..54usize {
        let d = 1 + case % 3;
        let mut factors = Vec::new();
        for j in 0..d {
            // First factor may branch twice with up to four children; later
            // factors stay smaller to keep the products desk-sized.
            let (max_index, max_children) = match (d, j) {
                (_, 0) => (2, 4),
                (3, _) => (1, 2),
                _ => (1, 3),
            };
            // Deep enough for any bound this corpus can produce.
            factors.push(random_tree(&mut r, &format!("c{case}f{j}"), max_index, max_children, 6));
        }
        let bound = total_branching_bound(&factors);
        out.push((factors, bound));
    }
    out
}

#[test]
fn c01_dimension_formula() {
    let start = Instant::now();
    let corpus = corpus_products();
    assert!(corpus.len() >= 50);
    let mut blocks_checked = 0usize;
    for (factors, bound) in &corpus {
        let p = build_product(factors.clone(), bound + 1).unwrap();
        for block in enumerate_blocks(&p).unwrap() {
            assert_eq!(block.basis.len(), block.dim_closed, "null-space rank vs closed form");
            let tensor = block_basis_tensor(&p, block.u, &block.f);
            assert_eq!(tensor.len(), block.dim_closed);
            if block.dim_closed > 0 {
                assert!(same_row_span(
                    &RatMatrix::from_rows(block.basis.clone()),
                    &RatMatrix::from_rows(tensor),
                ));
            }
            blocks_checked += 1;
        }
        let m = Multishift::family(p, WeightSequence::CA { a: rat(1, 1) });
        let comps = joint_kernel_bruteforce(&m).unwrap();
        assert_eq!(kernel_dimension(&comps), dim_e(factors), "dim E vs brute force");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 1 exceeded 60 s: {elapsed:?}");
    println!(
        "ACCEPTANCE C1 dimension-formula: PASS ({} products, {} blocks, {:.1?})",
        corpus.len(),
        blocks_checked,
        elapsed
    );
}

#[test]
fn c02_weight_independence() {
    let corpus = corpus_products();
    let choices = [
        WeightSequence::CA { a: rat(1, 1) },
        WeightSequence::CA { a: rat(3, 1) },
        WeightSequence::parse("table:2,1;eventual=1").unwrap(),
    ];
    for (factors, bound) in &corpus {
        let p = build_product(factors.clone(), bound + 1).unwrap();
        let kernels: Vec<_> = choices
            .iter()
            .map(|c| {
                joint_kernel_bruteforce(&Multishift::family(p.clone(), c.clone())).unwrap()
            })
            .collect();
        for other in &kernels[1..] {
            assert_eq!(kernels[0].len(), other.len());
            for (x, y) in kernels[0].iter().zip(other) {
                assert_eq!(x.vertices, y.vertices);
                assert!(same_row_span(
                    &RatMatrix::from_rows(x.basis.clone()),
                    &RatMatrix::from_rows(y.basis.clone()),
                ));
            }
        }
    }
    println!("ACCEPTANCE C2 weight-independence: PASS ({} products x 3 sequences)", corpus.len());
}

#[test]
fn c03_moment_identities() {
    let mut moments = 0usize;
    for p in fixture_products(6) {
        let d = p.dim();
        for c in [
            WeightSequence::CA { a: rat(1, 1) },
            WeightSequence::CA { a: rat(3, 1) },
        ] {
            let m = Multishift::family(p.clone(), c.clone());
            for v in 0..p.vertex_count() {
                let dv = p.total_depth_of(v);
                for alpha in compositions_up_to(4, d) {
                    if dv + total(&alpha) > p.total_depth() {
                        continue;
                    }
                    assert_eq!(
                        m.moment_norm_sq_closed(&alpha, v).unwrap(),
                        m.moment_norm_sq_oracle(&alpha, v).unwrap(),
                    );
                    moments += 1;
                }
                // Spherical sums for n <= 5 wherever they fit.
                for n in 0..=5usize.min(p.total_depth() - dv) {
                    let mut sum = Rat::zero();
                    for alpha in compositions(n, d) {
                        sum += big_to_rat(multinomial(&alpha))
                            * m.moment_norm_sq_closed(&alpha, v).unwrap();
                    }
                    let mut expected = Rat::one();
                    for j in 0..n {
                        expected *= c.eval(dv + j, d);
                    }
                    assert_eq!(sum, expected);
                }
            }
        }
    }
    println!("ACCEPTANCE C3 moment-identities: PASS ({moments} exact moment equalities)");
}

#[test]
fn c04_kernel_coefficients() {
    let sequences = [
        WeightSequence::CA { a: rat(1, 1) },
        WeightSequence::CA { a: rat(2, 1) },
        WeightSequence::ReciprocalCA { a: rat(1, 1) },
    ];
    let mut coeffs = 0usize;
    for p in fixture_products(7) {
        let d = p.dim();
        let blocks = enumerate_blocks(&p).unwrap();
        for c in &sequences {
            let m = Multishift::family(p.clone(), c.clone());
            for block in blocks.iter().filter(|b| b.dim_closed > 0) {
                let du: usize = block.depth.iter().sum();
                for alpha in compositions_up_to(4, d) {
                    if du + total(&alpha) > p.total_depth() {
                        continue;
                    }
                    let closed = kernel_coeff_closed(c, d, &block.depth, &alpha);
                    let oracle = kernel_coeff_oracle(&m, block, &alpha).unwrap();
                    assert_eq!(closed, oracle);
                    coeffs += 1;
                }
            }
        }
    }
    // Classical specialization: Taylor coefficients of (1 - <z,w>)^{-a}.
    for a in 1..=3i64 {
        let c = WeightSequence::CA { a: rat(a, 1) };
        for d in 1..=3usize {
            for alpha in compositions_up_to(4, d) {
                assert_eq!(
                    kernel_coeff_closed(&c, d, &vec![0; d], &alpha),
                    classical_ball_coeff(&rat(a, 1), &alpha),
                );
            }
        }
    }
    println!("ACCEPTANCE C4 kernel-coefficients: PASS ({coeffs} oracle equalities + classical series)");
}

#[test]
fn c05_representing_measures() {
    for a in 1..=6usize {
        for d in 1..=6usize {
            if a == d {
                let rho = density(a, d, 2);
                assert_eq!(rho.kind, DensityKind::Delta1);
                for n in 0..=20 {
                    assert_eq!(rho.moment(n), Rat::one());
                }
                continue;
            }
            for l in 0..=4usize {
                let report = verify_density_moments(a, d, l, 20);
                assert!(report.all_ok, "density moments failed for a={a} d={d} l={l}");
            }
            // Hausdorff certificate at order 20 for the matching regime.
            let c = if a >= d {
                WeightSequence::CA { a: rat(a as i64, 1) }
            } else {
                WeightSequence::ReciprocalCA { a: rat(a as i64, 1) }
            };
            let seq = MomentSequence::new(c, d, 45);
            assert_eq!(hausdorff_check(&seq, 20), HausdorffOutcome::Pass { order: 20 });
        }
    }
    // Conclusive failure for the table sequence (2, 1; eventually 1).
    let table = WeightSequence::parse("table:2,1;eventual=1").unwrap();
    let seq = MomentSequence::new(table, 2, 30);
    assert!(matches!(hausdorff_check(&seq, 20), HausdorffOutcome::Fail { k: 2, .. }));
    println!("ACCEPTANCE C5 representing-measures: PASS (a,d <= 6, l <= 4, n <= 20 exact)");
}

#[test]
fn c06_integral_representation() {
    let mut checks = 0usize;
    for p in fixture_products(5) {
        let blocks = enumerate_blocks(&p).unwrap();
        let mut reps = vec![p.root()];
        reps.extend(blocks.iter().filter(|b| b.dim_closed > 0).map(|b| b.u));
        for a in [1usize, 2, 3] {
            for &u in &reps {
                for alpha in compositions_up_to(4, 2) {
                    let rep = integral_representation_check(&p, a, u, &alpha).unwrap();
                    assert!(rep.ok, "a={a} u={u} alpha={alpha:?}");
                    checks += 1;
                }
            }
        }
    }
    println!("ACCEPTANCE C6 integral-representation: PASS ({checks} exact three-factor identities)");
}

/// Random tree whose generation counts match `counts`, padded with rays.
fn tree_with_counts(r: &mut ChaCha8Rng, counts: &[usize], extra: usize, name: &str) -> RootedTreePrefix {
    assert_eq!(counts[0], 1);
    let truncation = counts.len() - 1 + extra.max(1);
    let mut vertices = vec![VertexSpec { id: 0, parent: None }];
    let mut next_id = 1i64;
    let mut frontier = vec![0i64];
    for level in 1..=truncation {
        let target = if level < counts.len() { counts[level] } else { *counts.last().unwrap() };
        assert!(target >= frontier.len());
        // Random composition of `target` into frontier.len() parts, each >= 1.
        let mut fanouts = vec![1usize; frontier.len()];
        for _ in 0..(target - frontier.len()) {
            let idx = r.gen_range(0..fanouts.len());
            fanouts[idx] += 1;
        }
        let mut next = Vec::with_capacity(target);
        for (&pid, &fan) in frontier.iter().zip(&fanouts) {
            for _ in 0..fan {
                vertices.push(VertexSpec { id: next_id, parent: Some(pid) });
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    validate_tree(TreeSpec { name: name.into(), truncation_depth: truncation, vertices })
        .expect("prescribed-count tree valid")
}

#[test]
fn c07_equivalence_of_conditions() {
    let mut r = rng(0xAB5EED);
    let mut agreements = 0usize;
    let mut positives = 0usize;

    let mut run_pair = |t1: Vec<RootedTreePrefix>, t2: Vec<RootedTreePrefix>| {
        let report = classify(&t1, &t2, 2).expect("classification runs");
        let (ii, iii, iv) = (
            report.condition_ii.equal,
            report.condition_iii.equal,
            report.condition_iv.equal,
        );
        assert_eq!(ii, iii, "conditions ii and iii disagree");
        assert_eq!(iii, iv, "conditions iii and iv disagree");
        assert_eq!(report.decision == Decision::Isomorphic, iv);
        agreements += 1;
        if iv {
            positives += 1;
        }
    };

    for case in 0..40usize {
        let d = 1 + case % 3;
        let make = |r: &mut ChaCha8Rng, tag: &str| -> Vec<RootedTreePrefix> {
            (0..d)
                .map(|j| {
                    let (k, ch) = if j == 0 { (2, 3) } else { (1, 2) };
                    random_tree(r, &format!("{tag}{j}"), k, ch, 5)
                })
                .collect()
        };
        run_pair(make(&mut r, &format!("p{case}L")), make(&mut r, &format!("p{case}R")));
    }

    for case in 0..40usize {
        // Same generation counts, different shapes: the pair is isomorphic
        // by the count criterion whatever the sibling layout.
        let d = 1 + case % 2;
        let mut t1 = Vec::new();
        let mut t2 = Vec::new();
        for j in 0..d {
            let base = random_tree(&mut r, &format!("q{case}b{j}"), 2, 3, 5);
            let counts: Vec<usize> =
                (0..=base.branching_index()).map(|n| base.generation_count(n)).collect();
            t1.push(base);
            t2.push(tree_with_counts(&mut r, &counts, 6, &format!("q{case}s{j}")));
        }
        run_pair(t1, t2);
    }

    for case in 0..30usize {
        let base = random_tree(&mut r, &format!("r{case}"), 2, 3, 5);
        let relabeled = relabel_tree(&mut r, &base, &format!("r{case}x"));
        run_pair(vec![base], vec![relabeled]);
    }

    assert!(agreements >= 100);
    assert!(positives >= 40, "corpus must include genuinely isomorphic pairs: {positives}");

    // Named families: distinct fan-outs never match; equal fan-out totals
    // always do, even for non-isomorphic trees.
    let ray = std_tree(StandardTree::Ray, 5);
    for k in 1..=4usize {
        for k2 in (k + 1)..=4 {
            let left = vec![std_tree(StandardTree::Tn0 { n0: k }, 5), ray.clone()];
            let right = vec![std_tree(StandardTree::Tn0 { n0: k2 }, 5), ray.clone()];
            assert_eq!(modules_isomorphic(&left, &right, 2).unwrap(), Decision::NotIsomorphic);
        }
    }
    for j in 1..=3usize {
        for j2 in (j + 1)..=3 {
            let left = vec![std_tree(StandardTree::T1j { k: 3, j }, 5), ray.clone()];
            let right = vec![std_tree(StandardTree::T1j { k: 3, j: j2 }, 5), ray.clone()];
            assert_eq!(modules_isomorphic(&left, &right, 2).unwrap(), Decision::Isomorphic);
            assert!(!factors_graph_isomorphic(&left, &right));
        }
    }

    println!(
        "ACCEPTANCE C7 condition-equivalence: PASS ({agreements} pairs, {positives} isomorphic)"
    );
}

#[test]
fn c08_intertwiner_certificate() {
    let start = Instant::now();
    let ray = std_tree(StandardTree::Ray, 5);
    let p1 = build_product(vec![std_tree(StandardTree::T1j { k: 3, j: 1 }, 5), ray.clone()], 5)
        .unwrap();
    let p2 = build_product(vec![std_tree(StandardTree::T1j { k: 3, j: 2 }, 5), ray], 5).unwrap();
    let cert = build_intertwiner(&p1, &p2, 2, 1e-9).unwrap();
    assert!(cert.unitarity_residual < 1e-9, "unitarity {}", cert.unitarity_residual);
    assert!(cert.intertwining_residual < 1e-9, "intertwining {}", cert.intertwining_residual);
    assert!(cert.complete);
    assert_eq!(cert.spanned_dim, p1.vertex_count());
    assert_eq!(cert.spanned_dim, p2.vertex_count());
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "criterion 8 exceeded 30 s: {elapsed:?}");
    println!(
        "ACCEPTANCE C8 intertwiner: PASS (residuals {:.2e}/{:.2e}, dim {}, {:.1?})",
        cert.unitarity_residual, cert.intertwining_residual, cert.spanned_dim, elapsed
    );
}

#[test]
fn c09_constant_on_parents_rigidity() {
    let mut r = rng(0x5EED5);
    let mut instances = 0usize;
    while instances < 50 {
        let d = 2 + instances % 2;
        let factors: Vec<_> = (0..d)
            .map(|j| {
                let (k, ch) = if j == 0 { (2, 3) } else { (1, 3) };
                random_tree(&mut r, &format!("g{instances}f{j}"), k, ch, 2)
            })
            .collect();
        let depth = 3.min(factors.iter().map(|t| t.truncation_depth()).min().unwrap());
        let p = build_product(factors, depth).unwrap();
        let classes = rigidity::par_closure_classes(&p);
        let f: Vec<Rat> = classes.iter().map(|&cl| rat(3 * cl as i64 + 1, 2)).collect();
        let report = rigidity::rigidity_report(&p, &f);
        assert!(report.par_constant, "closure functions are parent-constant by construction");
        assert!(report.generation_constant_interior, "instance {instances}");
        assert!(report.equivalent_on_interior);
        instances += 1;
    }

    // d = 1 counterexample: parent-constant but not generation-constant.
    let t = std_tree(StandardTree::Tn0 { n0: 2 }, 3);
    let p = build_product(vec![t], 2).unwrap();
    let mut f = vec![Rat::zero(); p.vertex_count()];
    for (i, &v) in p.generation(1).iter().enumerate() {
        f[v] = rat(i as i64 + 1, 1);
    }
    let report = rigidity::rigidity_report(&p, &f);
    assert!(report.par_constant && !report.generation_constant_interior);
    assert!(!report.equivalent_on_interior);

    println!("ACCEPTANCE C9 parents-rigidity: PASS ({instances} closures + d=1 counterexample)");
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run_cli(args: &[&str]) -> (Vec<u8>, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_treeshift"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.stdout, out.status.code())
}

#[test]
fn c10_cli_determinism() {
    let t20 = fixture("t20.json");
    let ray = fixture("ray.json");
    let b2 = fixture("b2.json");
    let t11 = fixture("t11_k3.json");
    let t12 = fixture("t12_k3.json");
    let pair1 = format!("{t11},{ray}");
    let pair2 = format!("{t12},{ray}");
    let prod = format!("{t20},{ray}");
    let prod2 = format!("{t20},{b2}");
    let invocations: Vec<(Vec<&str>, i32)> = vec![
        (vec!["validate", &t20], 0),
        (vec!["report", &prod, "--a", "1", "--max-alpha", "3"], 0),
        (
            vec![
                "classify", &pair1, &pair2, "--a", "2", "--intertwiner", "--depth", "5",
            ],
            0,
        ),
        (vec!["verify", &prod2, "--c", "c_a:2", "--max-alpha", "3"], 0),
        (vec!["measure", "--a", "4", "--d", "2", "--l", "1", "--max-n", "10"], 0),
    ];
    let mut seen: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    for (args, want_code) in &invocations {
        let mut outputs = Vec::new();
        for _ in 0..3 {
            let (stdout, code) = run_cli(args);
            assert_eq!(code, Some(*want_code), "exit code for {args:?}");
            assert!(!stdout.is_empty());
            serde_json::from_slice::<serde_json::Value>(&stdout).expect("valid JSON");
            outputs.push(stdout);
        }
        assert!(
            outputs.windows(2).all(|w| w[0] == w[1]),
            "output differs across runs for {args:?}"
        );
        seen.insert(args.join(" "), outputs.pop().unwrap());
    }
    println!("ACCEPTANCE C10 cli-determinism: PASS ({} commands x 3 runs)", seen.len());
}
