//! Closed-form information quantities of the optimal symmetric attack.
//!
//! All rates are in bits per sifted photon. `0·log₂0` is taken as 0.

use serde::{Deserialize, Serialize};

use crate::linalg::{gates, CMat};
use crate::states::{encode, Basis};
use crate::{check_range, Result};

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// `φ(z) = (1+z)log₂(1+z) + (1−z)log₂(1−z)` on `[0, 1]`.
pub fn phi(z: f64) -> Result<f64> {
    check_range("z", z, 0.0, 1.0)?;
    Ok(xlog2x(1.0 + z) + xlog2x(1.0 - z))
}

/// Shannon entropy of a Bernoulli(p) variable.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_range("p", p, 0.0, 1.0)?;
    Ok(-xlog2x(p) - xlog2x(1.0 - p))
}

/// Optimal information gain `2√(d(1−d))`.
pub fn ig_star(d: f64) -> Result<f64> {
    check_range("d", d, 0.0, 0.5)?;
    Ok(2.0 * (d * (1.0 - d)).sqrt())
}

/// Error rate of Eve's bit guesses, `D_E = ½ − √(d(1−d))`.
pub fn eve_error_rate(d: f64) -> Result<f64> {
    check_range("d", d, 0.0, 0.5)?;
    Ok((0.5 - (d * (1.0 - d)).sqrt()).max(0.0))
}

/// `(MI_AB, MI_AE) = (½φ(1−2d), ½φ(2√(d(1−d))))`.
pub fn mi_curves(d: f64) -> Result<(f64, f64)> {
    check_range("d", d, 0.0, 0.5)?;
    let ab = 0.5 * phi(1.0 - 2.0 * d)?;
    let ae = 0.5 * phi(ig_star(d)?.min(1.0))?;
    Ok((ab, ae))
}

/// One-way key rate `max(0, H(D_E) − H(d))`.
pub fn key_rate(d: f64) -> Result<f64> {
    let k = binary_entropy(eve_error_rate(d)?)? - binary_entropy(d)?;
    Ok(k.max(0.0))
}

/// QBER at which the one-way key rate vanishes, `½(1 − 1/√2)`.
pub fn qber_threshold() -> f64 {
    0.5 * (1.0 - std::f64::consts::FRAC_1_SQRT_2)
}

/// Eve's optimal bit-guess success `½ + √(d(1−d))`, where `d` is the rate of
/// the basis conjugate to the one Alice encodes in.
pub fn helstrom_fidelity(d_conjugate: f64) -> Result<f64> {
    check_range("d", d_conjugate, 0.0, 0.5)?;
    Ok(0.5 + (d_conjugate * (1.0 - d_conjugate)).sqrt())
}

/// Helstrom success probability for two pure states with overlap modulus `overlap`.
pub fn helstrom_from_overlap(overlap: f64) -> Result<f64> {
    check_range("overlap", overlap, 0.0, 1.0)?;
    Ok(0.5 * (1.0 + (1.0 - overlap * overlap).sqrt()))
}

/// CHSH sum under the optimal attack, `(1−2d)·2√2`.
pub fn chsh_sum(d: f64) -> Result<f64> {
    check_range("d", d, 0.0, 0.5)?;
    Ok((1.0 - 2.0 * d) * 2.0 * std::f64::consts::SQRT_2)
}

/// Bloch-vector contraction factor `η = 1 − 2d`.
pub fn bloch_shrink(d: f64) -> Result<f64> {
    check_range("d", d, 0.0, 0.5)?;
    Ok(1.0 - 2.0 * d)
}

/// Bob's density for Alice's state `|bit⟩^β`: `(1−d)ρ_a + dρ_ā`.
pub fn bob_density(bit: u8, basis: Basis, d: f64) -> Result<CMat> {
    check_range("d", d, 0.0, 0.5)?;
    let keep = encode(bit, basis);
    let flip = encode(1 - bit, basis);
    CMat::outer(&keep, &keep)
        .scale((1.0 - d).into())
        .add(&CMat::outer(&flip, &flip).scale(d.into()))
}

/// Bloch vector `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)` of a qubit density.
pub fn bloch_vector(rho: &CMat) -> [f64; 3] {
    [gates::sigma_x(), gates::sigma_y(), gates::sigma_z()].map(|s| (&s * rho).trace().re)
}

/// Lower bound on the secrecy capacity, `max(I_AB − I_AE, I_AB − I_EB)`.
/// May be negative.
pub fn secrecy_bound(i_ab: f64, i_ae: f64, i_eb: f64) -> Result<f64> {
    check_range("i_ab", i_ab, 0.0, 1.0)?;
    check_range("i_ae", i_ae, 0.0, 1.0)?;
    check_range("i_eb", i_eb, 0.0, 1.0)?;
    Ok((i_ab - i_ae).max(i_ab - i_eb))
}

/// All curves at one error rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCurvePoint {
    pub d: f64,
    pub ig_star: f64,
    pub mi_ab: f64,
    pub mi_ae: f64,
    pub key_rate: f64,
    pub chsh: f64,
    pub shrink: f64,
}

impl RateCurvePoint {
    pub fn at(d: f64) -> Result<Self> {
        let (mi_ab, mi_ae) = mi_curves(d)?;
        Ok(RateCurvePoint {
            d,
            ig_star: ig_star(d)?,
            mi_ab,
            mi_ae,
            key_rate: key_rate(d)?,
            chsh: chsh_sum(d)?,
            shrink: bloch_shrink(d)?,
        })
    }

    pub const CSV_HEADER: &'static str = "d,ig_star,mi_ab,mi_ae,key_rate,chsh,shrink";

    pub fn fields(&self) -> [f64; 7] {
        [
            self.d,
            self.ig_star,
            self.mi_ab,
            self.mi_ae,
            self.key_rate,
            self.chsh,
            self.shrink,
        ]
    }
}

/// Evenly spaced grid `start, start+step, …` up to `stop` inclusive.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !start.is_finite() || !stop.is_finite() || !step.is_finite() || step <= 0.0 || start > stop {
        return Err(crate::Error::OutOfRange {
            name: "grid",
            value: step,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

pub fn sweep(start: f64, stop: f64, step: f64) -> Result<Vec<RateCurvePoint>> {
    grid(start, stop, step)?
        .into_iter()
        .map(RateCurvePoint::at)
        .collect()
}
