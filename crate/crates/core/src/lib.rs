//! Weighted multishifts on directed Cartesian products of rooted directed
//! trees, with exact rational arithmetic.
//!
//! The crate builds finite truncations of the infinite trees and products,
//! realizes the spherically balanced weight systems attached to a bounded
//! positive sequence, and computes the structures that classify the
//! associated Hilbert modules of vector-valued holomorphic functions on a
//! ball: joint-cokernel blocks and their dimensions, moment and kernel
//! coefficients, representing-measure densities, and the generation-count
//! invariants that decide module isomorphism. Every closed form has an
//! independent brute-force companion so the two can be checked against each
//! other on concrete instances.
//!
//! ```
//! use treeshift::trees::{make_standard, StandardTree};
//! use treeshift::product::build_product;
//! use treeshift::multishift::{Multishift, WeightSequence};
//! use treeshift::cokernel::{dim_e, joint_kernel_bruteforce, kernel_dimension};
//! use treeshift::classify::{modules_isomorphic, Decision};
//! use treeshift::rat::rat;
//!
//! let t20 = make_standard(StandardTree::Tn0 { n0: 2 }, 4).unwrap();
//! let ray = make_standard(StandardTree::Ray, 4).unwrap();
//! let product = build_product(vec![t20.clone(), ray.clone()], 4).unwrap();
//!
//! // The cokernel dimension, closed form against the brute-force solver.
//! let shift = Multishift::family(product, WeightSequence::CA { a: rat(1, 1) });
//! let kernel = joint_kernel_bruteforce(&shift).unwrap();
//! assert_eq!(kernel_dimension(&kernel), 2);
//! assert_eq!(dim_e(&[t20.clone(), ray.clone()]), 2);
//!
//! // Fan-out 2 and fan-out 3 over the same second factor never match.
//! let t30 = make_standard(StandardTree::Tn0 { n0: 3 }, 4).unwrap();
//! let decision = modules_isomorphic(&[t20, ray.clone()], &[t30, ray], 2).unwrap();
//! assert_eq!(decision, Decision::NotIsomorphic);
//! ```

pub mod classify;
pub mod cokernel;
pub mod corpus;
pub mod linalg;
pub mod model;
pub mod multiindex;
pub mod multishift;
pub mod product;
pub mod rat;
pub mod trees;

pub use rat::Rat;
