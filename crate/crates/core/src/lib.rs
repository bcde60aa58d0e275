//! Spectral feature-map augmentation operators and an analytical
//! verification engine for the spectra they produce.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod linalg;
pub mod ops;
pub mod special;
