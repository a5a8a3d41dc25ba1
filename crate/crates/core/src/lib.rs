//! Balanced color tables and the machinery around them.
//!
//! A table `E: [N] x [N1] -> [M]` is `(K, D, Δ)`-balanced when every row set
//! of size at least `K` and every color set of density at least `1/D` meet in
//! at most `Δ` times the expected number of cells. This crate builds such
//! tables (randomly, exhaustively, or from a toy Nisan-Wigderson generator),
//! verifies them exactly, and runs the extraction experiments that balance
//! makes possible: bad-row bounds, good seeds as advice, and smooth
//! min-entropy of outputs over flat sources.

pub mod balance;
pub mod bounds;
pub mod construct;
pub mod error;
pub mod extract;
pub mod nwgen;
pub mod params;
pub mod ratio;
pub mod rng;
pub mod soi;
pub mod table;

pub use balance::{BalanceReport, WorkBudget};
pub use error::{Error, Result};
pub use params::{Params, Shape, Thresholds2};
pub use table::{Table, Table2};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
