//! Matrix-product-state tomography.
//!
//! Reconstructs MPS descriptions of one-dimensional many-body states from
//! window-local tomographic data and certifies them with parent-Hamiltonian
//! fidelity witnesses. Two reconstruction routes are provided:
//!
//! * [`disentangle`]: sequential disentangling unitaries built from the
//!   reductions of a κ-site sliding window, with post-selection error
//!   tracking and a certified norm bound.
//! * [`svt`]: singular value thresholding restricted to window-local
//!   Pauli operators, with the top eigenvector of each iterate found
//!   variationally by [`eigensolver`].
//!
//! [`certify`] turns an MPS estimate into a frustration-free parent
//! Hamiltonian, lower-bounds its gap and evaluates the fidelity witness
//! against measured window data.
//!
//! The crate is `no_std` (with `alloc`); file formats, the CLI and the
//! experiment harness live in the `mpstomo` companion crate.

#![no_std]
// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod certify;
pub mod disentangle;
pub mod eigensolver;
mod error;
pub mod linalg;
mod mpo;
pub mod mps;
pub mod pauli;
pub mod states;
pub mod svt;
pub mod tomography;

pub use error::{Error, Result};
pub use mps::{DensityMatrix, Gauge, Mps, SiteTensor};
pub use num_complex::Complex64 as C64;
pub use pauli::{Pauli, PauliLabel, PauliWord, WindowOperatorSum};
pub use states::DenseState;
pub use tomography::TomographyDataset;

use core::sync::atomic::{AtomicUsize, Ordering};

/// Default cap on the number of amplitudes in any dense window or state.
pub const DEFAULT_DENSE_LIMIT: usize = 1 << 12;

static DENSE_LIMIT: AtomicUsize = AtomicUsize::new(DEFAULT_DENSE_LIMIT);

/// Largest Hilbert-space dimension any operation will treat densely.
pub fn dense_limit() -> usize {
    DENSE_LIMIT.load(Ordering::Relaxed)
}

/// Overrides the dense limit process-wide. Values below 2 are clamped.
pub fn set_dense_limit(limit: usize) {
    DENSE_LIMIT.store(limit.max(2), Ordering::Relaxed);
}

pub(crate) fn check_dense(dim: usize) -> Result<()> {
    let limit = dense_limit();
    if dim > limit {
        Err(Error::DenseLimit { dim, limit })
    } else {
        Ok(())
    }
}
