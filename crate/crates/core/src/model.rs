//! The analytic model: reproducing-kernel coefficients, spherical moment
//! constants, Hausdorff moment testing, and representing-measure densities.
//!
//! The kernel of the model space is block diagonal over the cokernel
//! decomposition with scalar coefficient series per block; coefficients are
//! exact rationals. Densities on `[0,1]` are exact polynomials and all of
//! their moment identities are rational equalities with no tolerance.

use num_complex::Complex64;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::cokernel::KernelBlock;
use crate::multiindex::{big_to_rat, compositions, rising_factorial_ratio, total};
use crate::multishift::{Multishift, ShiftError, WeightSequence};
use crate::product::ProductTree;
use crate::rat::{rat_usize, to_f64, Rat};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error("evaluation point has norm {norm} outside the ball of radius {radius}")]
    PointOutsideDomain { norm: f64, radius: f64 },
    #[error("the {requested} density requires {constraint}, got a={a}, d={d}")]
    WrongRegime { a: usize, d: usize, requested: &'static str, constraint: &'static str },
    #[error("S*^a S^a does not act as a scalar on the block")]
    NotAScalarMultiple,
    #[error("the block has dimension zero")]
    ZeroBlock,
}

/// Closed-form kernel coefficient of the block at depth tuple `d_u`:
/// `d_u!/(d_u+alpha)! * prod_{j<|alpha|} (|d_u|+d+j)/c(|d_u|+j)`.
pub fn kernel_coeff_closed(c: &WeightSequence, d: usize, d_u: &[usize], alpha: &[usize]) -> Rat {
    let base: usize = d_u.iter().sum();
    let mut acc = big_to_rat(rising_factorial_ratio(d_u, alpha)).recip();
    for j in 0..total(alpha) {
        acc *= rat_usize(base + d + j) / c.eval(base + j, d);
    }
    acc
}

/// Taylor coefficient of `(1 - <z,w>)^{-a}` at `z^alpha conj(w)^alpha`:
/// `(1/alpha!) * prod_{j<|alpha|} (a+j)`.
pub fn classical_ball_coeff(a: &Rat, alpha: &[usize]) -> Rat {
    let zeros = vec![0usize; alpha.len()];
    let mut acc = big_to_rat(rising_factorial_ratio(&zeros, alpha)).recip();
    for j in 0..total(alpha) {
        acc *= a.clone() + rat_usize(j);
    }
    acc
}

/// Operational kernel coefficient: applies `S*^alpha S^alpha` to every basis
/// vector of the block through the exact squared-amplitude route, demands
/// that the block is mapped to a single scalar multiple of itself, and
/// returns the reciprocal scalar.
pub fn kernel_coeff_oracle(
    m: &Multishift,
    block: &KernelBlock,
    alpha: &[usize],
) -> Result<Rat, ModelError> {
    if block.basis.is_empty() {
        return Err(ModelError::ZeroBlock);
    }
    let mut scalar: Option<Rat> = None;
    for f in &block.basis {
        // S*^alpha S^alpha e_v has its only coefficient at v: the summed
        // squared amplitudes of the unique downward paths.
        let mut image: Vec<Rat> = Vec::with_capacity(f.len());
        for (i, &v) in block.support.iter().enumerate() {
            if f[i].is_zero() {
                image.push(Rat::zero());
            } else {
                image.push(f[i].clone() * m.moment_norm_sq_oracle(alpha, v)?);
            }
        }
        let pivot = f.iter().position(|x| !x.is_zero()).expect("basis vector nonzero");
        let s = image[pivot].clone() / &f[pivot];
        for (im, fi) in image.iter().zip(f) {
            if im.clone() != s.clone() * fi {
                return Err(ModelError::NotAScalarMultiple);
            }
        }
        match &scalar {
            Some(prev) if *prev != s => return Err(ModelError::NotAScalarMultiple),
            Some(_) => {}
            None => scalar = Some(s),
        }
    }
    Ok(scalar.expect("at least one basis vector").recip())
}

/// One block's partial kernel value together with bookkeeping for reports.
#[derive(Debug, Clone)]
pub struct KernelBlockValue {
    pub f: Vec<usize>,
    pub depth: Vec<usize>,
    pub dim: usize,
    pub value: Complex64,
}

#[derive(Debug, Clone)]
pub struct KernelEvaluation {
    pub radius: f64,
    pub max_order: usize,
    /// Per-block scalar values; the kernel is the block-diagonal operator
    /// with these scalars on the corresponding blocks (root block first).
    pub blocks: Vec<KernelBlockValue>,
    /// Rigorous bound on the discarded tail of each scalar series.
    pub tail_bound: f64,
}

fn pow_alpha(z: &[Complex64], alpha: &[usize]) -> Complex64 {
    z.iter()
        .zip(alpha)
        .map(|(zi, &k)| zi.powu(k as u32))
        .product()
}

/// Partial sums of the reproducing kernel at `(z, w)` in the ball of radius
/// `min(inf c, 1)`, as a block-diagonal operator on `E`.
pub fn kernel_eval(
    c: &WeightSequence,
    d: usize,
    blocks: &[KernelBlock],
    z: &[Complex64],
    w: &[Complex64],
    max_order: usize,
) -> Result<KernelEvaluation, ModelError> {
    assert_eq!(z.len(), d);
    assert_eq!(w.len(), d);
    let radius = to_f64(&c.inf(d)).min(1.0);
    for pt in [z, w] {
        let norm = pt.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm >= radius {
            return Err(ModelError::PointOutsideDomain { norm, radius });
        }
    }

    // Root block (F empty, depth 0, dimension 1) plus every nonzero block.
    let mut specs: Vec<(Vec<usize>, Vec<usize>, usize)> =
        vec![(Vec::new(), vec![0; d], 1)];
    specs.extend(
        blocks
            .iter()
            .filter(|b| b.dim_closed > 0)
            .map(|b| (b.f.clone(), b.depth.clone(), b.dim_closed)),
    );

    let s: f64 = z.iter().zip(w).map(|(a, b)| (a * b.conj()).norm()).sum();
    let c_min = to_f64(&c.inf(d));
    let q = s / c_min;

    let mut out = Vec::new();
    let mut tail = 0.0f64;
    for (f, depth, dim) in specs {
        let mut value = Complex64::zero();
        for n in 0..=max_order {
            for alpha in compositions(n, d) {
                let coeff = to_f64(&kernel_coeff_closed(c, d, &depth, &alpha));
                value += coeff * pow_alpha(z, &alpha) * pow_alpha(w, &alpha).conj();
            }
        }
        // Dominating series: B_n = q^n * C(|d_u|+d-1+n, n); geometric beyond
        // the point where the term ratio q*(|d_u|+d+n)/(n+1) drops below 1.
        let du_total: usize = depth.iter().sum();
        let k = max_order + 1;
        let mut b = 1.0f64;
        for j in 0..k {
            b *= q * (du_total + d + j) as f64 / (j + 1) as f64;
        }
        let ratio = q * (du_total + d + k) as f64 / (k + 1) as f64;
        let block_tail = if ratio < 1.0 { b / (1.0 - ratio) } else { f64::INFINITY };
        tail = tail.max(block_tail);
        out.push(KernelBlockValue { f, depth, dim, value });
    }
    Ok(KernelEvaluation { radius, max_order, blocks: out, tail_bound: tail })
}

/// Normalized sphere moment `Q(beta, alpha)`: the integral of
/// `|z^{alpha+beta}|^2 / ||z^beta||^2` against the normalized surface
/// measure, in closed form.
pub fn spherical_q(beta: &[usize], alpha: &[usize]) -> Rat {
    assert_eq!(beta.len(), alpha.len());
    let d = beta.len();
    let b: usize = beta.iter().sum();
    let mut acc = big_to_rat(rising_factorial_ratio(beta, alpha));
    for j in 0..total(alpha) {
        acc /= rat_usize(b + d + j);
    }
    acc
}

/// The moment candidates `a_n = prod_{j<n} c(j)` with their support bound.
#[derive(Debug, Clone)]
pub struct MomentSequence {
    pub c: WeightSequence,
    pub d: usize,
    pub values: Vec<Rat>,
    pub bound: Rat,
}

impl MomentSequence {
    pub fn new(c: WeightSequence, d: usize, n_max: usize) -> MomentSequence {
        let values = c.moment_products(d, n_max);
        let bound = c.sup(d);
        MomentSequence { c, d, values, bound }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HausdorffOutcome {
    /// Complete monotonicity verified for all differences up to the order; a
    /// certificate, not a proof for the full sequence.
    Pass { order: usize },
    /// A strictly negative difference: conclusively not a Hausdorff moment
    /// sequence on `[0, sup c]`.
    Fail { k: usize, n: usize },
}

/// Finite-order complete monotonicity of the rescaled sequence
/// `a_n / (sup c)^n`. The reported pass order is the largest difference
/// order the data actually supports, never more than requested.
pub fn hausdorff_check(seq: &MomentSequence, order: usize) -> HausdorffOutcome {
    let mut row: Vec<Rat> = Vec::with_capacity(seq.values.len());
    let mut scale = Rat::one();
    for a in &seq.values {
        row.push(a.clone() / scale.clone());
        scale *= seq.bound.clone();
    }
    let mut verified = 0usize;
    for k in 0..=order {
        if k > 0 {
            row = row.windows(2).map(|w| w[1].clone() - &w[0]).collect();
        }
        if row.is_empty() {
            break;
        }
        let sign_ok = |x: &Rat| if k % 2 == 0 { *x >= Rat::zero() } else { *x <= Rat::zero() };
        if let Some(n) = row.iter().position(|x| !sign_ok(x)) {
            return HausdorffOutcome::Fail { k, n };
        }
        verified = k;
    }
    HausdorffOutcome::Pass { order: verified }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// `w_l` density on `[0,1]` (integer `a > d`).
    W,
    /// `omega_l` density on `[0,1]` for the Cauchy-dual module (integer `a < d`).
    Omega,
    /// Point mass at 1 (`a = d`).
    Delta1,
}

/// Exact polynomial density of the radial representing measure slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPolynomial {
    pub kind: DensityKind,
    pub a: usize,
    pub d: usize,
    pub l: usize,
    /// Ascending coefficients from `s^0`; empty for the point mass.
    pub coefficients: Vec<Rat>,
}

fn lagrange_density(lo: usize, hi: usize, l: usize) -> Vec<Rat> {
    // prod_{m=l+lo}^{l+hi-1} m * sum_{i=lo}^{hi-1} s^{i+l-1} / prod_{j != i} (j - i)
    let mut prefactor = Rat::one();
    for m in (l + lo)..(l + hi) {
        prefactor *= rat_usize(m);
    }
    let mut coeffs = vec![Rat::zero(); l + hi - 1];
    for i in lo..hi {
        let mut denom = Rat::one();
        for j in lo..hi {
            if j != i {
                denom *= Rat::from_integer((j as i64 - i as i64).into());
            }
        }
        coeffs[i + l - 1] += prefactor.clone() / denom;
    }
    coeffs
}

/// Density of the depth-`l` radial slice, with the regime chosen from `a`
/// versus `d`.
pub fn density(a: usize, d: usize, l: usize) -> DensityPolynomial {
    assert!(a >= 1 && d >= 1, "a and d must be positive integers");
    use std::cmp::Ordering::*;
    match a.cmp(&d) {
        Equal => DensityPolynomial { kind: DensityKind::Delta1, a, d, l, coefficients: vec![] },
        Greater => DensityPolynomial {
            kind: DensityKind::W,
            a,
            d,
            l,
            coefficients: lagrange_density(d, a, l),
        },
        Less => DensityPolynomial {
            kind: DensityKind::Omega,
            a,
            d,
            l,
            coefficients: lagrange_density(a, d, l),
        },
    }
}

pub fn density_w(a: usize, d: usize, l: usize) -> Result<DensityPolynomial, ModelError> {
    if a <= d {
        return Err(ModelError::WrongRegime { a, d, requested: "w", constraint: "a > d" });
    }
    Ok(density(a, d, l))
}

pub fn density_omega(a: usize, d: usize, l: usize) -> Result<DensityPolynomial, ModelError> {
    if a >= d {
        return Err(ModelError::WrongRegime { a, d, requested: "omega", constraint: "a < d" });
    }
    Ok(density(a, d, l))
}

impl DensityPolynomial {
    /// Exact `integral_0^1 s^n rho(s) ds`.
    pub fn moment(&self, n: usize) -> Rat {
        match self.kind {
            DensityKind::Delta1 => Rat::one(),
            _ => self
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| c.clone() / rat_usize(n + k + 1))
                .sum(),
        }
    }

    pub fn eval_f64(&self, s: f64) -> f64 {
        match self.kind {
            DensityKind::Delta1 => {
                panic!("point mass has no density to evaluate")
            }
            _ => self
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| to_f64(c) * s.powi(k as i32))
                .sum(),
        }
    }

    /// Exact Horner evaluation; the coefficients alternate with large
    /// magnitudes, so float evaluation near `s = 1` is unreliable.
    pub fn eval_rat(&self, s: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coefficients.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    /// Weight sequence of the module this density represents.
    pub fn sequence(&self) -> WeightSequence {
        let a = rat_usize(self.a);
        match self.kind {
            DensityKind::Omega => WeightSequence::ReciprocalCA { a },
            _ => WeightSequence::CA { a },
        }
    }
}

#[derive(Debug, Clone)]
pub struct MomentCheck {
    pub n: usize,
    pub lhs: Rat,
    pub rhs: Rat,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct DensityMomentReport {
    pub density: DensityPolynomial,
    pub checks: Vec<MomentCheck>,
    pub all_ok: bool,
}

/// Exact verification that the depth-`l` density reproduces the moment
/// ratios of its weight sequence: `integral s^n rho_l = a_{n+l} / a_l`.
pub fn verify_density_moments(a: usize, d: usize, l: usize, max_n: usize) -> DensityMomentReport {
    let rho = density(a, d, l);
    let seq = rho.sequence();
    let products = seq.moment_products(d, max_n + l);
    let mut checks = Vec::with_capacity(max_n + 1);
    let mut all_ok = true;
    for n in 0..=max_n {
        let lhs = rho.moment(n);
        let rhs = products[n + l].clone() / &products[l];
        let ok = lhs == rhs;
        all_ok &= ok;
        checks.push(MomentCheck { n, lhs, rhs, ok });
    }
    DensityMomentReport { density: rho, checks, all_ok }
}

#[derive(Debug, Clone)]
pub struct IntegralRepReport {
    pub a: usize,
    pub d_u: Vec<usize>,
    pub alpha: Vec<usize>,
    /// `||S^alpha f||^2 / ||f||^2` from the closed moment form.
    pub moment: Rat,
    /// `a_{|alpha|+|d_u|} / a_{|d_u|}`.
    pub a_ratio: Rat,
    /// The same ratio recovered as `integral s^{|alpha|} rho_{|d_u|}(s) ds`.
    pub rho_moment: Rat,
    /// Sphere factor `Q(d_u, alpha)`.
    pub nu_moment: Rat,
    pub ok: bool,
}

/// Exact three-way identity behind the representing measure: the squared
/// module norm of `z^alpha` on a depth-`d_u` block equals the radial moment
/// times the sphere moment. Uses `c_a` when `a >= d` and the dual sequence
/// when `a < d`.
pub fn integral_representation_check(
    p: &ProductTree,
    a: usize,
    u: usize,
    alpha: &[usize],
) -> Result<IntegralRepReport, ModelError> {
    let d = p.dim();
    let c = if a >= d {
        WeightSequence::CA { a: rat_usize(a) }
    } else {
        WeightSequence::ReciprocalCA { a: rat_usize(a) }
    };
    let m = Multishift::family(p.clone(), c.clone());
    let moment = m.moment_norm_sq_closed(alpha, u)?;

    let d_u = p.depth_tuple(u);
    let l: usize = d_u.iter().sum();
    let n = total(alpha);
    let products = c.moment_products(d, n + l);
    let a_ratio = products[n + l].clone() / &products[l];
    let rho_moment = density(a, d, l).moment(n);
    let nu_moment = spherical_q(&d_u, alpha);

    let ok = moment == a_ratio.clone() * &nu_moment && a_ratio == rho_moment;
    Ok(IntegralRepReport { a, d_u, alpha: alpha.to_vec(), moment, a_ratio, rho_moment, nu_moment, ok })
}
