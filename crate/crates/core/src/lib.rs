#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod model;
pub mod solver;
pub mod geometry;
pub mod weiss;
pub mod oracle;
pub mod freeboundary;
pub mod blowup;
pub mod epiperimetric;
pub mod spectral;
pub mod cli;
