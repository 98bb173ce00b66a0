#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod curve;
pub mod error;
pub mod format;
pub mod interpolation;
pub mod measure;
pub mod pricing;
pub mod scenario;
pub mod simulation;
pub mod tenor;
pub mod vol;
