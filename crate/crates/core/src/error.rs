use thiserror::Error;

use crate::repcheck::Witness;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulus {0}: must be at least 2")]
    InvalidModulus(u64),
    #[error("modulus {0} exceeds the supported range (at most 2^32 - 1)")]
    ModulusTooLarge(u64),
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix dimensions must be positive")]
    EmptyMatrix,
    #[error("residue {value} out of range for modulus {m}")]
    ResidueOutOfRange { value: u64, m: u64 },
    #[error("expected {expected} residues, got {got}")]
    ResidueCountMismatch { expected: usize, got: usize },
    #[error("unsupported ring Z_{p}^{e}: elimination needs a prime field")]
    UnsupportedRing { p: u64, e: u32 },
    #[error("modulus {0} is not square-free")]
    NotSquareFree(u64),
    #[error(
        "modulus {0} is a prime power: alternative representations coincide with exact ones, \
         so no nontrivial gadget exists"
    )]
    PrimePowerModulus(u64),
    #[error("operation needs a modulus with exactly {needed} prime factors, {m} has {got}")]
    FactorCount { m: u64, needed: usize, got: usize },
    #[error("block size {s} does not divide {n}")]
    BlockSize { n: usize, s: usize },
    #[error("search space 2^{bits} exceeds the 2^{limit} guard")]
    SearchSpaceTooLarge { bits: usize, limit: usize },
    #[error("arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },
    #[error("entry ({row}, {col}) is not a linear form")]
    NonLinear { row: usize, col: usize },
    #[error("entry ({row}, {col}) is not bilinear in the x and y variables")]
    NonBilinear { row: usize, col: usize },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("invalid gadget target at ({row}, {col}): value {value} {reason}")]
    InvalidTarget {
        row: usize,
        col: usize,
        value: u64,
        reason: &'static str,
    },
    #[error("candidate is not a 0-a-strong representation of S_n^2: {0}")]
    NotZeroAStrong(Witness),
    #[error("sketch is {got:?}, gadget expects {expected:?}")]
    BundleMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("gadget file: {0}")]
    GadgetFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
