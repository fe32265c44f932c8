//! Implementations behind the CLI verbs. All rationals are serialized as
//! `p/q` strings; coordinates and factor indices are 1-based in output.

use serde_json::{json, Value};

use treeshift::classify::{
    build_intertwiner, classify as classify_trees, Decision, IntertwinerCertificate,
};
use treeshift::cokernel::{
    block_basis_tensor, dim_e, enumerate_blocks, joint_kernel_bruteforce, kernel_dimension,
    total_branching_bound, KernelBlock,
};
use treeshift::linalg::{same_row_span, RatMatrix};
use treeshift::model::{
    hausdorff_check, kernel_coeff_closed, kernel_coeff_oracle, verify_density_moments,
    DensityKind, HausdorffOutcome, MomentSequence,
};
use treeshift::multiindex::{big_to_rat, compositions, compositions_up_to, multinomial, total};
use treeshift::multishift::{Multishift, WeightSequence};
use treeshift::product::{build_product, ProductTree};
use treeshift::rat::{format_rat, parse_rat, Rat};
use treeshift::trees::RootedTreePrefix;

type Outcome = Result<(Value, i32), String>;

fn load_tree(path: &str) -> Result<RootedTreePrefix, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    RootedTreePrefix::from_json(&text).map_err(|e| format!("{path}: {e}"))
}

fn load_trees(files: &str) -> Result<Vec<RootedTreePrefix>, String> {
    files.split(',').map(|f| load_tree(f.trim())).collect()
}

fn pick_sequence(c: Option<&str>, a: Option<&str>) -> Result<WeightSequence, String> {
    match (c, a) {
        (Some(c), _) => WeightSequence::parse(c),
        (None, Some(a)) => {
            let a = parse_rat(a)?;
            if a <= Rat::from_integer(0.into()) {
                return Err("--a must be positive".into());
            }
            Ok(WeightSequence::CA { a })
        }
        (None, None) => Err("either --c or --a is required".into()),
    }
}

fn resolve_depth(
    factors: &[RootedTreePrefix],
    depth: Option<usize>,
) -> Result<usize, String> {
    let depth = depth.unwrap_or_else(|| total_branching_bound(factors) + 2);
    let reach = factors.iter().map(|t| t.truncation_depth()).min().unwrap_or(0);
    if depth > reach {
        return Err(format!(
            "depth {depth} exceeds the shallowest factor truncation ({reach}); \
             supply deeper tree prefixes or a smaller --depth"
        ));
    }
    Ok(depth)
}

fn coords_1based(f: &[usize]) -> Vec<u64> {
    f.iter().map(|&j| (j + 1) as u64).collect()
}

fn original_ids(p: &ProductTree, v: usize) -> Vec<i64> {
    p.coords(v)
        .iter()
        .enumerate()
        .map(|(j, &x)| p.factors()[j].original_id(x))
        .collect()
}

pub fn validate(file: &str) -> Outcome {
    let t = load_tree(file)?;
    let generations: Vec<usize> =
        (0..=t.truncation_depth()).map(|n| t.generation_count(n)).collect();
    let value = json!({
        "name": t.name(),
        "vertices": t.vertex_count(),
        "truncation_depth": t.truncation_depth(),
        "branching_index": t.branching_index(),
        "generations": generations,
        "canonical_code": t.canonical_form().code,
    });
    Ok((value, 0))
}

fn block_record(p: &ProductTree, b: &KernelBlock) -> Value {
    json!({
        "F": coords_1based(&b.f),
        "u": original_ids(p, b.u),
        "depth": b.depth,
        "M": b.system.cols,
        "N": b.system.rows,
        "dim": b.dim_closed,
    })
}

pub fn report(
    files: &str,
    c: Option<&str>,
    a: Option<&str>,
    depth: Option<usize>,
    max_alpha: usize,
) -> Outcome {
    let factors = load_trees(files)?;
    let c = pick_sequence(c, a)?;
    let depth = resolve_depth(&factors, depth)?;
    let d = factors.len();
    let p = build_product(factors.clone(), depth).map_err(|e| e.to_string())?;
    let blocks = enumerate_blocks(&p).map_err(|e| e.to_string())?;
    let m = Multishift::family(p.clone(), c.clone());

    // Closed-form moments against the operator oracle, everywhere they fit.
    let mut moment_checks = 0usize;
    let mut moment_ok = true;
    for v in 0..p.vertex_count() {
        for alpha in compositions_up_to(max_alpha, d) {
            if p.total_depth_of(v) + total(&alpha) > depth {
                continue;
            }
            let closed = m.moment_norm_sq_closed(&alpha, v).map_err(|e| e.to_string())?;
            let oracle = m.moment_norm_sq_oracle(&alpha, v).map_err(|e| e.to_string())?;
            moment_ok &= closed == oracle;
            moment_checks += 1;
        }
    }

    // Kernel coefficients per nonzero block (root block included).
    let mut coeff_specs: Vec<(Vec<usize>, Vec<usize>, usize, Option<&KernelBlock>)> =
        vec![(Vec::new(), vec![0; d], p.root(), None)];
    coeff_specs.extend(
        blocks
            .iter()
            .filter(|b| b.dim_closed > 0)
            .map(|b| (b.f.clone(), b.depth.clone(), b.u, Some(b))),
    );
    let mut coeff_blocks = Vec::new();
    for (f, depth_tuple, u, block) in coeff_specs {
        let du: usize = depth_tuple.iter().sum();
        let mut coeffs = Vec::new();
        let mut oracle_ok = true;
        for alpha in compositions_up_to(max_alpha, d) {
            if du + total(&alpha) > depth {
                continue;
            }
            let closed = kernel_coeff_closed(&c, d, &depth_tuple, &alpha);
            if let Some(b) = block {
                let orc = kernel_coeff_oracle(&m, b, &alpha).map_err(|e| e.to_string())?;
                oracle_ok &= orc == closed;
            }
            coeffs.push(json!({
                "alpha": alpha,
                "value": format_rat(&closed),
            }));
        }
        coeff_blocks.push(json!({
            "F": coords_1based(&f),
            "u": original_ids(&p, u),
            "depth": depth_tuple,
            "coefficients": coeffs,
            "oracle_ok": oracle_ok,
        }));
    }

    let kernel_dim = joint_kernel_bruteforce(&m)
        .map(|comps| Value::from(kernel_dimension(&comps)))
        .unwrap_or(Value::Null);

    let value = json!({
        "factors": factors.iter().map(|t| t.name()).collect::<Vec<_>>(),
        "d": d,
        "depth": depth,
        "dim_E": dim_e(&factors),
        "joint_kernel_dim": kernel_dim,
        "blocks": blocks.iter().map(|b| block_record(&p, b)).collect::<Vec<_>>(),
        "kernel_coefficients": coeff_blocks,
        "moment_check": {
            "max_alpha": max_alpha,
            "checked": moment_checks,
            "all_ok": moment_ok,
        },
    });
    Ok((value, 0))
}

fn decision_str(d: Decision) -> &'static str {
    match d {
        Decision::Isomorphic => "isomorphic",
        Decision::NotIsomorphic => "not_isomorphic",
        Decision::UndecidedAdEqOne => "undecided_ad_eq_1",
    }
}

fn certificate_json(cert: &IntertwinerCertificate) -> Value {
    json!({
        "depth": cert.depth,
        "tol": cert.tol,
        "groups": cert.groups.iter().map(|g| json!({
            "F": coords_1based(&g.f),
            "alpha": g.alpha,
            "dim": g.dim,
        })).collect::<Vec<_>>(),
        "unitarity_residual": cert.unitarity_residual,
        "intertwining_residual": cert.intertwining_residual,
        "spanned_dim": cert.spanned_dim,
        "full_dim": [cert.full_dim.0, cert.full_dim.1],
        "complete": cert.complete,
        "pass": cert.pass,
    })
}

pub fn classify(
    left: &str,
    right: &str,
    a: usize,
    intertwiner: bool,
    depth: Option<usize>,
    tol: f64,
) -> Outcome {
    if a == 0 {
        return Err("--a must be a positive integer".into());
    }
    let t1 = load_trees(left)?;
    let t2 = load_trees(right)?;
    let report = classify_trees(&t1, &t2, a).map_err(|e| e.to_string())?;

    let witness_json = |w: &Option<(usize, usize)>| match w {
        Some((l, n)) => json!({ "factor": l + 1, "n": n }),
        None => Value::Null,
    };

    let intertwiner_json = if intertwiner && report.decision == Decision::Isomorphic {
        let needed = total_branching_bound(&t1).max(total_branching_bound(&t2)) + 2;
        let depth = depth.unwrap_or(needed);
        resolve_depth(&t1, Some(depth))?;
        resolve_depth(&t2, Some(depth))?;
        let p1 = build_product(t1.clone(), depth).map_err(|e| e.to_string())?;
        let p2 = build_product(t2.clone(), depth).map_err(|e| e.to_string())?;
        let cert = build_intertwiner(&p1, &p2, a, tol).map_err(|e| e.to_string())?;
        certificate_json(&cert)
    } else {
        Value::Null
    };

    let cond_ii = &report.condition_ii;
    let value = json!({
        "a": a,
        "d": report.d,
        "decision": decision_str(report.decision),
        "graph_isomorphic": report.graph_isomorphic,
        "conditions": {
            "ii": {
                "equal": cond_ii.equal,
                "entries": cond_ii.entries.iter().map(|e| json!({
                    "F": coords_1based(&e.f),
                    "alpha": e.alpha,
                    "lhs": e.left,
                    "rhs": e.right,
                })).collect::<Vec<_>>(),
            },
            "iii": {
                "equal": report.condition_iii.equal,
                "complete": report.condition_iii.complete,
                "left": report.condition_iii.left,
                "right": report.condition_iii.right,
                "witness": witness_json(&report.condition_iii.witness),
            },
            "iv": {
                "equal": report.condition_iv.equal,
                "complete": report.condition_iv.complete,
                "left": report.condition_iv.left,
                "right": report.condition_iv.right,
                "witness": witness_json(&report.condition_iv.witness),
            },
        },
        "intertwiner": intertwiner_json,
    });
    let code = match report.decision {
        Decision::Isomorphic => 0,
        Decision::NotIsomorphic => 1,
        Decision::UndecidedAdEqOne => 2,
    };
    Ok((value, code))
}

struct Check {
    name: &'static str,
    pass: Option<bool>,
    detail: String,
}

impl Check {
    fn passed(name: &'static str, detail: String) -> Check {
        Check { name, pass: Some(true), detail }
    }
    fn failed(name: &'static str, detail: String) -> Check {
        Check { name, pass: Some(false), detail }
    }
    fn of(name: &'static str, ok: bool, detail: String) -> Check {
        Check { name, pass: Some(ok), detail }
    }
    fn skipped(name: &'static str, detail: String) -> Check {
        Check { name, pass: None, detail }
    }
}

pub fn verify(
    files: &str,
    c: Option<&str>,
    a: Option<&str>,
    depth: Option<usize>,
    max_alpha: usize,
) -> Outcome {
    let factors = load_trees(files)?;
    let c = pick_sequence(c, a)?;
    let depth = resolve_depth(&factors, depth)?;
    let d = factors.len();
    let p = build_product(factors.clone(), depth).map_err(|e| e.to_string())?;
    let m = Multishift::family(p.clone(), c.clone());
    let mut checks: Vec<Check> = Vec::new();

    checks.push(match m.check_commuting() {
        None => Check::passed("commuting", "squared commutation identity on all pairs".into()),
        Some(v) => Check::failed(
            "commuting",
            format!("violated at u={:?} (i={}, j={})", original_ids(&p, v.u), v.i + 1, v.j + 1),
        ),
    });

    checks.push(match m.check_balanced() {
        None => Check::passed("balanced", "spherical function constant on generations".into()),
        Some(v) => Check::failed("balanced", format!("generation {} splits", v.generation)),
    });

    {
        let mut ok = true;
        for v in 0..p.vertex_count() {
            if p.total_depth_of(v) < depth {
                ok &= m.spherical_c(v) == c.eval(p.total_depth_of(v), d);
            }
        }
        checks.push(Check::of(
            "spherical_matches_sequence",
            ok,
            "C(v) equals c(|d_v|) exactly".into(),
        ));
    }

    match enumerate_blocks(&p) {
        Err(e) => checks.push(Check::skipped("block_dims", e.to_string())),
        Ok(blocks) => {
            let mut ok = true;
            for b in &blocks {
                ok &= b.basis.len() == b.dim_closed;
                let tensor = block_basis_tensor(&p, b.u, &b.f);
                ok &= tensor.len() == b.dim_closed;
                if b.dim_closed > 0 {
                    ok &= same_row_span(
                        &RatMatrix::from_rows(b.basis.clone()),
                        &RatMatrix::from_rows(tensor),
                    );
                }
            }
            checks.push(Check::of(
                "block_dims",
                ok,
                format!("{} blocks: closed form = null space = tensor span", blocks.len()),
            ));

            // Kernel coefficient oracle per nonzero block.
            let mut ok = true;
            let mut count = 0usize;
            for b in blocks.iter().filter(|b| b.dim_closed > 0) {
                let du: usize = b.depth.iter().sum();
                for alpha in compositions_up_to(max_alpha, d) {
                    if du + total(&alpha) > depth {
                        continue;
                    }
                    let closed = kernel_coeff_closed(&c, d, &b.depth, &alpha);
                    match kernel_coeff_oracle(&m, b, &alpha) {
                        Ok(orc) => {
                            ok &= orc == closed;
                            count += 1;
                        }
                        Err(e) => return Err(e.to_string()),
                    }
                }
            }
            checks.push(Check::of(
                "kernel_coefficients",
                ok,
                format!("{count} coefficients: inversion oracle = closed form"),
            ));
        }
    }

    checks.push(match joint_kernel_bruteforce(&m) {
        Ok(comps) => {
            let brute = kernel_dimension(&comps);
            let closed = dim_e(&factors);
            Check::of(
                "dim_e_vs_bruteforce",
                brute == closed,
                format!("dim E = {closed}, brute-force kernel rank = {brute}"),
            )
        }
        Err(e) => Check::skipped("dim_e_vs_bruteforce", e.to_string()),
    });

    {
        let mut ok = true;
        let mut count = 0usize;
        for v in 0..p.vertex_count() {
            for alpha in compositions_up_to(max_alpha, d) {
                if p.total_depth_of(v) + total(&alpha) > depth {
                    continue;
                }
                let closed = m.moment_norm_sq_closed(&alpha, v).map_err(|e| e.to_string())?;
                let oracle = m.moment_norm_sq_oracle(&alpha, v).map_err(|e| e.to_string())?;
                ok &= closed == oracle;
                count += 1;
            }
        }
        checks.push(Check::of(
            "moments",
            ok,
            format!("{count} moments: closed form = operator oracle"),
        ));
    }

    {
        // Spherical sums: sum over |alpha| = n of (n!/alpha!) ||S^alpha e_v||^2.
        let mut ok = true;
        let mut count = 0usize;
        for v in 0..p.vertex_count() {
            let dv = p.total_depth_of(v);
            for n in 0..=(depth - dv).min(max_alpha + 1) {
                let mut sum = Rat::from_integer(0.into());
                for alpha in compositions(n, d) {
                    sum += big_to_rat(multinomial(&alpha))
                        * m.moment_norm_sq_closed(&alpha, v).map_err(|e| e.to_string())?;
                }
                let mut expected = Rat::from_integer(1.into());
                for j in 0..n {
                    expected *= c.eval(dv + j, d);
                }
                ok &= sum == expected;
                count += 1;
            }
        }
        checks.push(Check::of(
            "spherical_sums",
            ok,
            format!("{count} generation sums reproduce the sequence products"),
        ));
    }

    {
        // Joint kernel span is independent of the weight sequence.
        match joint_kernel_bruteforce(&m) {
            Err(e) => checks.push(Check::skipped("kernel_weight_independence", e.to_string())),
            Ok(here) => {
                let mut ok = true;
                for other_c in [
                    WeightSequence::CA { a: Rat::from_integer(1.into()) },
                    WeightSequence::CA { a: Rat::from_integer(3.into()) },
                    WeightSequence::parse("table:2,1;eventual=1").expect("valid"),
                ] {
                    let other = joint_kernel_bruteforce(&Multishift::family(
                        p.clone(),
                        other_c,
                    ))
                    .map_err(|e| e.to_string())?;
                    ok &= here.len() == other.len();
                    for (x, y) in here.iter().zip(&other) {
                        ok &= x.vertices == y.vertices
                            && same_row_span(
                                &RatMatrix::from_rows(x.basis.clone()),
                                &RatMatrix::from_rows(y.basis.clone()),
                            );
                    }
                }
                checks.push(Check::of(
                    "kernel_weight_independence",
                    ok,
                    "identical kernel span for c_1, c_3 and a table sequence".into(),
                ));
            }
        }
    }

    {
        // Density moments apply to integer c_a / 1/c_a regimes.
        let int_a = match &c {
            WeightSequence::CA { a } | WeightSequence::ReciprocalCA { a }
                if a.denom() == &1.into() =>
            {
                usize::try_from(i64::try_from(a.numer().clone()).unwrap_or(0)).ok()
            }
            _ => None,
        };
        match int_a {
            Some(a_int) if a_int >= 1 => {
                let mut ok = true;
                for l in 0..=2usize {
                    ok &= verify_density_moments(a_int, d, l, 12).all_ok;
                }
                checks.push(Check::of(
                    "density_moments",
                    ok,
                    format!("exact radial moments for a={a_int}, d={d}, l<=2, n<=12"),
                ));
            }
            _ => checks.push(Check::skipped(
                "density_moments",
                "sequence is not an integer c_a or its reciprocal".into(),
            )),
        }
    }

    let passed = checks.iter().filter(|c| c.pass == Some(true)).count();
    let failed = checks.iter().filter(|c| c.pass == Some(false)).count();
    let skipped = checks.iter().filter(|c| c.pass.is_none()).count();
    let value = json!({
        "depth": depth,
        "d": d,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "pass": c.pass,
            "detail": c.detail,
        })).collect::<Vec<_>>(),
        "passed": passed,
        "failed": failed,
        "skipped": skipped,
    });
    Ok((value, if failed == 0 { 0 } else { 1 }))
}

pub fn measure(a: usize, d: usize, l: usize, max_n: usize) -> Outcome {
    if a == 0 || d == 0 {
        return Err("--a and --d must be positive integers".into());
    }
    let report = verify_density_moments(a, d, l, max_n);
    let rho = &report.density;
    let kind = match rho.kind {
        DensityKind::W => "w",
        DensityKind::Omega => "omega",
        DensityKind::Delta1 => "delta_1",
    };
    let seq = rho.sequence();
    let hausdorff = match hausdorff_check(&MomentSequence::new(seq, d, max_n + 25), 20) {
        HausdorffOutcome::Pass { order } => json!({ "result": "pass", "order": order }),
        HausdorffOutcome::Fail { k, n } => json!({ "result": "fail", "k": k, "n": n }),
    };
    let value = json!({
        "a": a,
        "d": d,
        "l": l,
        "kind": kind,
        "coefficients": rho.coefficients.iter().map(format_rat).collect::<Vec<_>>(),
        "moment_check": report.checks.iter().map(|c| json!({
            "n": c.n,
            "lhs": format_rat(&c.lhs),
            "rhs": format_rat(&c.rhs),
            "ok": c.ok,
        })).collect::<Vec<_>>(),
        "all_ok": report.all_ok,
        "hausdorff": hausdorff,
    });
    Ok((value, 0))
}

