//! Parametric holomorphy of eigenpairs: α-sequences, admissible geometry,
//! affine coefficient fields, FEM eigensolvers, derivative estimation,
//! bound certification and QMC quadrature.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod certify;
pub mod cli;
pub mod combinatorics;
pub mod exec;
pub mod fields;
pub mod geometry;
pub mod pde;
pub mod qmc;
