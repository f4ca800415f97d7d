//! Optimal unitary eavesdropping on BB84.
//!
//! The crate constructs Eve's optimal interaction vectors and post-interaction
//! joint states for arbitrary (possibly asymmetric) basis-wise error rates,
//! certifies optimality with several equivalent numeric criteria, synthesizes
//! 8×8 attack unitaries and transports them across initial ancilla states and
//! measurement bases, and exercises the attack through closed-form
//! information curves and seeded Monte Carlo simulation.
//!
//! Tensor ordering is Alice ⊗ E1 ⊗ E2 throughout, Alice being the most
//! significant factor.

#![forbid(unsafe_code)]

pub mod info;
pub mod linalg;
pub mod optimality;
pub mod sim;
pub mod states;
pub mod synth;

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("empty vector or matrix")]
    Empty,

    #[error("seed vectors are not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),

    #[error("too many seed vectors: {count} for dimension {dim}")]
    TooManySeeds { count: usize, dim: usize },

    #[error("basis completion failed")]
    CompletionFailed,

    #[error("{name} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("basis mismatch: expected {expected}, got {got}")]
    BasisMismatch {
        expected: states::Basis,
        got: states::Basis,
    },

    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),

    #[error("degenerate rate: {0}")]
    Degenerate(String),

    #[error("invalid measurement setup: {0}")]
    InvalidSetup(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("transform does not fix the anchor direction (defect {0:e})")]
    AnchorNotFixed(f64),

    #[error("anchor equations violated (defect {0:e})")]
    AnchorViolation(f64),

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            lo,
            hi,
        })
    }
}

/// Formats `x` with 12 significant digits, `%g` style, for CSV output.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_sig;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.1), "0.1");
        assert_eq!(fmt_sig(-0.5), "-0.5");
        assert_eq!(fmt_sig(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_sig(0.146446609406726), "0.146446609407");
        assert_eq!(fmt_sig(1.5e-9), "1.5e-9");
        assert_eq!(fmt_sig(2.0 * 2f64.sqrt()), "2.82842712475");
    }
}
