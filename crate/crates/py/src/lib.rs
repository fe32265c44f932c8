//! Python bindings: trees, products, cokernel dimensions, classification,
//! densities and moment checks, with rationals passed as `p/q` strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use treeshift::classify::{self, Decision};
use treeshift::cokernel::{
    dim_e, enumerate_blocks, joint_kernel_bruteforce, kernel_dimension,
};
use treeshift::model::{
    hausdorff_check, kernel_coeff_closed, verify_density_moments, DensityKind,
    HausdorffOutcome, MomentSequence,
};
use treeshift::multishift::{Multishift, WeightSequence};
use treeshift::product::{build_product, ProductTree};
use treeshift::rat::format_rat;
use treeshift::trees::{self, RootedTreePrefix, StandardTree};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A validated rooted tree prefix.
#[pyclass(name = "Tree", from_py_object)]
#[derive(Clone)]
struct Tree {
    inner: RootedTreePrefix,
}

#[pymethods]
impl Tree {
    /// Parse the JSON tree-spec document.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Tree> {
        RootedTreePrefix::from_json(text)
            .map(|inner| Tree { inner })
            .map_err(value_err)
    }

    /// Branchless tree (single ray).
    #[staticmethod]
    fn ray(depth: usize) -> PyResult<Tree> {
        trees::make_standard(StandardTree::Ray, depth)
            .map(|inner| Tree { inner })
            .map_err(value_err)
    }

    /// Root with `n0` children, rays afterwards.
    #[staticmethod]
    fn tn0(n0: usize, depth: usize) -> PyResult<Tree> {
        trees::make_standard(StandardTree::Tn0 { n0 }, depth)
            .map(|inner| Tree { inner })
            .map_err(value_err)
    }

    /// Root with children u, v; `2k - j` grandchildren under u and `j`
    /// under v, rays afterwards.
    #[staticmethod]
    fn t1j(k: usize, j: usize, depth: usize) -> PyResult<Tree> {
        trees::make_standard(StandardTree::T1j { k, j }, depth)
            .map(|inner| Tree { inner })
            .map_err(value_err)
    }

    /// Full binary tree to the given depth, rays afterwards.
    #[staticmethod]
    fn binary(b: usize, depth: usize) -> PyResult<Tree> {
        trees::make_standard(StandardTree::Binary { depth: b }, depth)
            .map(|inner| Tree { inner })
            .map_err(value_err)
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn truncation_depth(&self) -> usize {
        self.inner.truncation_depth()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    #[getter]
    fn branching_index(&self) -> usize {
        self.inner.branching_index()
    }

    fn generation_count(&self, n: usize) -> usize {
        self.inner.generation_count(n)
    }

    fn canonical_code(&self) -> String {
        self.inner.canonical_form().code
    }

    fn is_isomorphic(&self, other: &Tree) -> bool {
        trees::graph_isomorphic(&self.inner, &other.inner)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "Tree(name={:?}, depth={}, branching_index={})",
            self.inner.name(),
            self.inner.truncation_depth(),
            self.inner.branching_index()
        )
    }
}

/// A directed Cartesian product truncated at a total depth bound.
#[pyclass(name = "Product")]
struct Product {
    inner: ProductTree,
}

#[pymethods]
impl Product {
    #[new]
    fn new(factors: Vec<Tree>, depth: usize) -> PyResult<Product> {
        let factors: Vec<RootedTreePrefix> = factors.into_iter().map(|t| t.inner).collect();
        build_product(factors, depth)
            .map(|inner| Product { inner })
            .map_err(value_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn total_depth(&self) -> usize {
        self.inner.total_depth()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    fn generation_card(&self, k: usize) -> usize {
        self.inner.generation(k).len()
    }

    /// Dimension of the joint cokernel of the infinite product.
    fn dim_e(&self) -> usize {
        dim_e(self.inner.factors())
    }

    /// Per-block records of the cokernel decomposition.
    fn blocks<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let blocks = enumerate_blocks(&self.inner).map_err(value_err)?;
        let out = PyList::empty(py);
        for b in &blocks {
            let rec = PyDict::new(py);
            rec.set_item("F", b.f.iter().map(|&j| j + 1).collect::<Vec<_>>())?;
            rec.set_item("depth", b.depth.clone())?;
            rec.set_item("M", b.system.cols)?;
            rec.set_item("N", b.system.rows)?;
            rec.set_item("dim", b.dim_closed)?;
            out.append(rec)?;
        }
        Ok(out)
    }

    /// Rank of the brute-force joint kernel for the given weight sequence.
    fn joint_kernel_dim(&self, c: &str) -> PyResult<usize> {
        let c = WeightSequence::parse(c).map_err(value_err)?;
        let m = Multishift::family(self.inner.clone(), c);
        joint_kernel_bruteforce(&m)
            .map(|comps| kernel_dimension(&comps))
            .map_err(value_err)
    }

    /// Closed-form kernel coefficient at depth tuple `d_u` and multiindex
    /// `alpha`, as a `p/q` string.
    fn kernel_coefficient(&self, c: &str, d_u: Vec<usize>, alpha: Vec<usize>) -> PyResult<String> {
        let c = WeightSequence::parse(c).map_err(value_err)?;
        if d_u.len() != self.inner.dim() || alpha.len() != self.inner.dim() {
            return Err(PyValueError::new_err("d_u and alpha must have one entry per factor"));
        }
        Ok(format_rat(&kernel_coeff_closed(&c, self.inner.dim(), &d_u, &alpha)))
    }

    fn __repr__(&self) -> String {
        format!(
            "Product(d={}, depth={}, vertices={})",
            self.inner.dim(),
            self.inner.total_depth(),
            self.inner.vertex_count()
        )
    }
}

/// Decide module isomorphism and report the three equivalent conditions.
#[pyfunction]
fn classify_modules<'py>(
    py: Python<'py>,
    left: Vec<Tree>,
    right: Vec<Tree>,
    a: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let t1: Vec<RootedTreePrefix> = left.into_iter().map(|t| t.inner).collect();
    let t2: Vec<RootedTreePrefix> = right.into_iter().map(|t| t.inner).collect();
    let report = classify::classify(&t1, &t2, a).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item(
        "decision",
        match report.decision {
            Decision::Isomorphic => "isomorphic",
            Decision::NotIsomorphic => "not_isomorphic",
            Decision::UndecidedAdEqOne => "undecided_ad_eq_1",
        },
    )?;
    out.set_item("graph_isomorphic", report.graph_isomorphic)?;
    out.set_item("condition_ii", report.condition_ii.equal)?;
    out.set_item("condition_iii", report.condition_iii.equal)?;
    out.set_item("condition_iv", report.condition_iv.equal)?;
    out.set_item("generation_tables", (report.condition_iv.left, report.condition_iv.right))?;
    Ok(out)
}

/// Build the intertwining unitary on a truncation and report its residuals.
#[pyfunction]
#[pyo3(signature = (left, right, a, depth, tol = 1e-9))]
fn intertwiner_residuals<'py>(
    py: Python<'py>,
    left: Vec<Tree>,
    right: Vec<Tree>,
    a: usize,
    depth: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let t1: Vec<RootedTreePrefix> = left.into_iter().map(|t| t.inner).collect();
    let t2: Vec<RootedTreePrefix> = right.into_iter().map(|t| t.inner).collect();
    let p1 = build_product(t1, depth).map_err(value_err)?;
    let p2 = build_product(t2, depth).map_err(value_err)?;
    let cert = classify::build_intertwiner(&p1, &p2, a, tol).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("unitarity_residual", cert.unitarity_residual)?;
    out.set_item("intertwining_residual", cert.intertwining_residual)?;
    out.set_item("spanned_dim", cert.spanned_dim)?;
    out.set_item("full_dim", cert.full_dim)?;
    out.set_item("complete", cert.complete)?;
    out.set_item("pass", cert.pass)?;
    Ok(out)
}

/// Radial density of the representing measure and its exact moment checks.
#[pyfunction]
#[pyo3(signature = (a, d, l, max_n = 20))]
fn density_report<'py>(
    py: Python<'py>,
    a: usize,
    d: usize,
    l: usize,
    max_n: usize,
) -> PyResult<Bound<'py, PyDict>> {
    if a == 0 || d == 0 {
        return Err(PyValueError::new_err("a and d must be positive integers"));
    }
    let report = verify_density_moments(a, d, l, max_n);
    let out = PyDict::new(py);
    out.set_item(
        "kind",
        match report.density.kind {
            DensityKind::W => "w",
            DensityKind::Omega => "omega",
            DensityKind::Delta1 => "delta_1",
        },
    )?;
    out.set_item(
        "coefficients",
        report.density.coefficients.iter().map(format_rat).collect::<Vec<_>>(),
    )?;
    out.set_item("all_ok", report.all_ok)?;
    let checks = PyList::empty(py);
    for c in &report.checks {
        let rec = PyDict::new(py);
        rec.set_item("n", c.n)?;
        rec.set_item("lhs", format_rat(&c.lhs))?;
        rec.set_item("rhs", format_rat(&c.rhs))?;
        rec.set_item("ok", c.ok)?;
        checks.append(rec)?;
    }
    out.set_item("moment_check", checks)?;
    Ok(out)
}

/// Finite-order complete-monotonicity certificate for the rescaled moment
/// candidates of a weight sequence.
#[pyfunction]
#[pyo3(signature = (c, d, order = 20, n_max = 45))]
fn hausdorff<'py>(
    py: Python<'py>,
    c: &str,
    d: usize,
    order: usize,
    n_max: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let c = WeightSequence::parse(c).map_err(value_err)?;
    let seq = MomentSequence::new(c, d, n_max);
    let out = PyDict::new(py);
    match hausdorff_check(&seq, order) {
        HausdorffOutcome::Pass { order } => {
            out.set_item("result", "pass")?;
            out.set_item("order", order)?;
        }
        HausdorffOutcome::Fail { k, n } => {
            out.set_item("result", "fail")?;
            out.set_item("k", k)?;
            out.set_item("n", n)?;
        }
    }
    Ok(out)
}

#[pymodule]
fn treeshift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Tree>()?;
    m.add_class::<Product>()?;
    m.add_function(wrap_pyfunction!(classify_modules, m)?)?;
    m.add_function(wrap_pyfunction!(intertwiner_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(density_report, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    Ok(())
}
