//! Exact-repair regenerating codes.
//!
//! - [`gf`]: GF(2^8) arithmetic and a systematic MDS codec.
//! - [`model`]: code parameters, stored instances, repair traces and
//!   exhaustive verification of reconstruction and exact repair.
//! - [`codes`]: MSR (`d = k`) and repair-by-transfer MBR (`d = n - 1`) base codes.
//! - [`lift`]: the permutation and cyclic lifts from `(n, k, d)` to
//!   `(n+1, k+1, d+1)`.
//! - [`analytics`]: functional-repair capacity, MSR/MBR points and the
//!   exact-repair lower bounds, all in exact rationals.
//! - [`harness`]: registered end-to-end scenarios and bandwidth audits.

pub mod analytics;
pub mod codes;
pub mod error;
pub mod gf;
pub mod harness;
pub mod lift;
pub mod model;

pub use error::{Error, Result};
pub use gf::Gf256;
pub use model::{CodeParams, RegeneratingCode, StorageInstance};
