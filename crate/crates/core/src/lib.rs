//! Symbolic engine for the approximate-symmetry analysis of perturbed
//! KPP-type reaction-diffusion equations: a small exact-arithmetic CAS
//! kernel, jet-space prolongation, determining-equation generation,
//! Lie-algebra classification, and numeric verification of closed-form
//! solutions.

pub mod catalog;
pub mod cli;
pub mod detsys;
pub mod expr;
pub mod jet;
pub mod liealg;
pub mod perturb;
pub mod solutions;
mod special;
