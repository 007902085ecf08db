//! a-strong representations modulo non-prime-power composites.
//!
//! A polynomial `g` represents `f` modulo `m = q_1 q_2 ... q_r` (pairwise
//! coprime prime powers) when every coefficient of `g` agrees with the
//! matching coefficient of `f` modulo at least one `q_i`. The 1-a-strong
//! variant additionally demands that every nonzero coefficient of `f` is
//! reproduced exactly. Over `Z_6` such representations are dramatically
//! cheaper than the polynomials themselves:
//!
//! * [`gadget`] builds constant matrices `B, C` (both `n x t`) whose
//!   depth-3 circuit `sum_j (B_j . x)(C_j . y)` is a 1-a-strong
//!   representation of the dot product with `t < n` multiplications.
//! * [`sketch`] uses the same pair to squeeze an `n x n` matrix into a
//!   `t x t` sketch `B^T X B` from which `C (.) C^T` yields a 1-a-strong
//!   representation of `X`.
//! * [`bilinear`] evaluates a represented matrix product with exactly `t^3`
//!   counted multiplications, against `n^3` for the schoolbook product.
//! * [`repcheck`] classifies candidates against targets coefficient by
//!   coefficient and provides the probe oracles the other modules are
//!   checked against.
//!
//! Everything runs on machine-word residues; no floating point is involved.

pub mod bilinear;
pub mod error;
pub mod exec;
pub mod gadget;
pub mod repcheck;
pub mod sketch;
pub mod zmod;

pub use error::{Error, Result};
pub use exec::Exec;
pub use gadget::{DotGadget, GadgetTarget};
pub use repcheck::{Monomial, RepClassification, SparsePoly};
pub use zmod::{Modulus, ResidueMatrix};
