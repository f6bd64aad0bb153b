//! Exact verification of matrix and polynomial inequalities behind the
//! eccentricity monotonicity argument.
//!
//! * [`poly`]: sparse rational polynomials and a parser for the data file.
//! * [`bernstein`]: box subdivision with exact Bernstein coefficients.
//! * [`linalg`]: small dense matrices over `f64` or exact rationals,
//!   characteristic polynomials and exact inertia.
//! * [`blocks`]: the truncated Fourier matrix `A_N`, its comparison matrix `C`
//!   and the congruence to the block-diagonal matrix `H = diag(E, K, Ê)`.
//! * [`q4`]: the coefficients `C_n`, the transfer matrices `M_n`, `S_k` and the
//!   quadratic forms `Q4`, `Q4⁺`.
//! * [`ledger`]: the checked-in positivity ledger and transcription checks.

pub mod bernstein;
pub mod blocks;
pub mod ledger;
pub mod linalg;
pub mod poly;
pub mod q4;

use serde::{Deserialize, Serialize};

pub use bernstein::{certify_positive, CertifyOptions, IntervalBox};
pub use blocks::{build_blocks, build_blocks_exact, check_morse_bound, check_morse_bound_exact, Blocks};
pub use ledger::{appendix_ledger, appendix_polynomials, transcription_checks, SpotCheck};
pub use poly::{parse_poly, PolyQ, Q};
pub use q4::{certify_q4_box, check_q4, cleared_polynomial, eval_cn, q4_data, Q4Data};

/// Outcome of a verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    /// The claim holds; every leaf of the argument was settled rigorously.
    Proved,
    /// The claim fails at an explicit point (coordinates and value as exact rationals
    /// or, for floating checks, decimal strings).
    Refuted {
        /// Coordinates of the counterexample.
        witness: Vec<String>,
        /// Value (or count) observed there.
        value: String,
    },
    /// Neither proved nor refuted within the budget.
    Inconclusive {
        /// Depth (or budget) at which the search stopped.
        depth: usize,
        /// The unresolved region or the reason.
        region: String,
    },
}

/// A claim together with its verification status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    /// Statement being verified.
    pub claim: String,
    /// Result.
    pub status: Status,
    /// Number of leaf boxes (or elementary checks) used.
    pub boxes_used: usize,
}

impl Certificate {
    /// `true` when the status is [`Status::Proved`].
    pub fn is_proved(&self) -> bool {
        self.status == Status::Proved
    }

    /// `true` when the status is [`Status::Refuted`].
    pub fn is_refuted(&self) -> bool {
        matches!(self.status, Status::Refuted { .. })
    }
}
