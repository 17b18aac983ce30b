//! Hashing-based time–space trade-offs for approximate near neighbor search.
//!
//! * [`gaussian_caps`] — cap probabilities `F` and `G`.
//! * [`tradeoff`] — exact exponent curves and the parameters that realise them.
//! * [`instance`] — planted random and clustered instances.
//! * [`reductions`] — Johnson–Lindenstrauss, Hamming-to-sphere, shifted-grid lift.
//! * [`filter_tree`] — the data-independent Gaussian cap tree.
//! * [`dd_tree`] — the data-dependent cluster-carving tree.
//! * [`lower_bounds`] — lower-bound formulas and exact hypercube checks.
//! * [`bench`] / [`io`] — measurement harness and file formats.

pub mod error;
pub mod gaussian_caps;
pub mod instance;
pub mod points;
mod quad;
pub mod rng;
pub mod tradeoff;

pub use error::{Error, Result};
pub use points::{PointSet, Space};
pub mod dd_tree;
pub mod filter_tree;
pub mod reductions;
pub mod lower_bounds;
pub mod io;
pub mod bench;
