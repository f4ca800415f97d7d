//! Encodings, amplitudes, measurement setups, interaction vectors and
//! post-interaction joint states.
//!
//! Amplitudes of everything constructed here are real; complex entries only
//! enter through user-supplied measurement directions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{
    complete_orthonormal_basis, gates, gram_defect, re, CMat, CVec, C64, TOL_NORM, TOL_UNITARY,
};
use crate::{check_range, Error, Result};

/// Prefactors below this are treated as exactly zero.
pub const DEGENERATE_EPS: f64 = 1e-12;

/// Alice's encoding basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// `{|0⟩, |1⟩}`, also written xy, +, Z.
    #[serde(rename = "xy", alias = "computational")]
    Computational,
    /// `{|+⟩, |−⟩}`, also written uv, ×, X.
    #[serde(rename = "uv", alias = "hadamard")]
    Hadamard,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Computational, Basis::Hadamard];

    pub fn conjugate(self) -> Basis {
        match self {
            Basis::Computational => Basis::Hadamard,
            Basis::Hadamard => Basis::Computational,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Basis::Computational => 0,
            Basis::Hadamard => 1,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Computational => "xy",
            Basis::Hadamard => "uv",
        })
    }
}

/// Basis-wise disturbance probabilities `(D_xy, D_uv)`, each in `[0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRates")]
pub struct ErrorRates {
    d_xy: f64,
    d_uv: f64,
}

#[derive(Deserialize)]
struct RawRates {
    d_xy: f64,
    d_uv: f64,
}

impl TryFrom<RawRates> for ErrorRates {
    type Error = Error;

    fn try_from(r: RawRates) -> Result<Self> {
        ErrorRates::new(r.d_xy, r.d_uv)
    }
}

impl ErrorRates {
    pub fn new(d_xy: f64, d_uv: f64) -> Result<Self> {
        check_range("d_xy", d_xy, 0.0, 0.5)?;
        check_range("d_uv", d_uv, 0.0, 0.5)?;
        Ok(ErrorRates { d_xy, d_uv })
    }

    pub fn symmetric(d: f64) -> Result<Self> {
        Self::new(d, d)
    }

    pub fn d_xy(&self) -> f64 {
        self.d_xy
    }

    pub fn d_uv(&self) -> f64 {
        self.d_uv
    }

    /// QBER `D_β` Bob sees for encoding basis `β`.
    pub fn rate(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Computational => self.d_xy,
            Basis::Hadamard => self.d_uv,
        }
    }

    /// `F_β = 1 − D_β`.
    pub fn fidelity(&self, basis: Basis) -> f64 {
        1.0 - self.rate(basis)
    }

    /// True when either rate sits at an endpoint where some states coincide
    /// or a Schmidt branch vanishes.
    pub fn is_degenerate(&self) -> bool {
        [self.d_xy, self.d_uv]
            .iter()
            .any(|&d| d < DEGENERATE_EPS || (0.5 - d).abs() < DEGENERATE_EPS)
    }
}

/// `|bit⟩^β = H^β |bit⟩`.
pub fn encode(bit: u8, basis: Basis) -> CVec {
    assert!(bit <= 1, "bit must be 0 or 1");
    let k = CVec::basis(2, bit as usize);
    match basis {
        Basis::Computational => k,
        Basis::Hadamard => &gates::hadamard() * &k,
    }
}

/// `(Δ⁺, Δ⁻) = ((√(1−d) + √d)/√2, (√(1−d) − √d)/√2)`.
pub fn delta_pm(d: f64) -> Result<(f64, f64)> {
    check_range("d", d, 0.0, 0.5)?;
    let (f, e) = ((1.0 - d).sqrt(), d.sqrt());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(((f + e) * s, (f - e) * s))
}

/// `(|Δ⟩, |Δ^H⟩) = (√(1−d)|0⟩ + √d|1⟩, Δ⁺|0⟩ + Δ⁻|1⟩)`.
pub fn delta_kets(d: f64) -> Result<(CVec, CVec)> {
    let (dp, dm) = delta_pm(d)?;
    Ok((
        CVec::from_real(&[(1.0 - d).sqrt(), d.sqrt()]),
        CVec::from_real(&[dp, dm]),
    ))
}

/// Eve's ordered orthonormal four-outcome measurement with outcome signs.
///
/// The bit guess for outcome `λ` is 0 when `ε_λ = +1` and 1 otherwise; with
/// the default signs `(+, −, +, −)` that is "0 for λ = 0, 2; 1 for λ = 1, 3".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSetup")]
pub struct MeasurementSetup {
    directions: [CVec; 4],
    signs: [i8; 4],
    basis: Basis,
}

#[derive(Deserialize)]
struct RawSetup {
    directions: Vec<CVec>,
    #[serde(default = "default_signs")]
    signs: [i8; 4],
    basis: Basis,
}

fn default_signs() -> [i8; 4] {
    MeasurementSetup::DEFAULT_SIGNS
}

impl TryFrom<RawSetup> for MeasurementSetup {
    type Error = Error;

    fn try_from(r: RawSetup) -> Result<Self> {
        let dirs: [CVec; 4] = r.directions.try_into().map_err(|v: Vec<CVec>| {
            Error::InvalidSetup(format!("{} directions, need 4", v.len()))
        })?;
        MeasurementSetup::with_signs(dirs, r.signs, r.basis)
    }
}

impl MeasurementSetup {
    pub const DEFAULT_SIGNS: [i8; 4] = [1, -1, 1, -1];

    pub fn new(directions: [CVec; 4], basis: Basis) -> Result<Self> {
        Self::with_signs(directions, Self::DEFAULT_SIGNS, basis)
    }

    pub fn with_signs(directions: [CVec; 4], signs: [i8; 4], basis: Basis) -> Result<Self> {
        if let Some(v) = directions.iter().find(|v| v.dim() != 4) {
            return Err(Error::InvalidSetup(format!(
                "direction of dimension {}",
                v.dim()
            )));
        }
        let defect = gram_defect(&directions);
        if defect > TOL_UNITARY {
            return Err(Error::InvalidSetup(format!(
                "directions not orthonormal (defect {defect:e})"
            )));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidSetup(format!("signs {signs:?} not all ±1")));
        }
        if signs.iter().filter(|&&s| s == 1).count() != 2 {
            return Err(Error::InvalidSetup(format!(
                "signs {signs:?} need exactly two +1 and two −1"
            )));
        }
        Ok(MeasurementSetup {
            directions,
            signs,
            basis,
        })
    }

    /// Directions are the columns of a 4×4 unitary.
    pub fn from_unitary(m: &CMat, basis: Basis) -> Result<Self> {
        if m.rows() != 4 || m.cols() != 4 {
            return Err(Error::InvalidSetup(format!(
                "{}x{} matrix",
                m.rows(),
                m.cols()
            )));
        }
        let cols = m.columns();
        Self::new(cols.try_into().expect("four columns"), basis)
    }

    pub fn directions(&self) -> &[CVec; 4] {
        &self.directions
    }

    pub fn direction(&self, lambda: usize) -> &CVec {
        &self.directions[lambda]
    }

    pub fn signs(&self) -> [i8; 4] {
        self.signs
    }

    pub fn sign(&self, lambda: usize) -> f64 {
        self.signs[lambda] as f64
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Eve's bet on Alice's bit after outcome `λ`.
    pub fn guess(&self, lambda: usize) -> u8 {
        if self.signs[lambda] > 0 {
            0
        } else {
            1
        }
    }

    /// `M = [|M_0⟩ |M_1⟩ |M_2⟩ |M_3⟩]`.
    pub fn matrix(&self) -> CMat {
        CMat::from_columns(&self.directions).expect("four dim-4 columns")
    }

    pub fn with_basis(&self, basis: Basis) -> Self {
        MeasurementSetup {
            basis,
            ..self.clone()
        }
    }

    /// Overlaps `⟨M_λ|v⟩` for all four outcomes.
    pub fn overlaps(&self, v: &CVec) -> [C64; 4] {
        std::array::from_fn(|l| self.directions[l].inner(v).expect("dim 4"))
    }
}

/// `{|00⟩, |01⟩, |10⟩, |11⟩}` for the computational encoding basis.
pub fn computational_setup() -> MeasurementSetup {
    MeasurementSetup::new(
        std::array::from_fn(|k| CVec::basis(4, k)),
        Basis::Computational,
    )
    .expect("standard basis")
}

/// `{|00⟩, |11⟩, |10⟩, |01⟩}` for the computational encoding basis.
pub fn fuchs_setup() -> MeasurementSetup {
    MeasurementSetup::new(
        [0, 3, 2, 1].map(|k| CVec::basis(4, k)),
        Basis::Computational,
    )
    .expect("permuted standard basis")
}

/// Coefficients of the map `{|E_λ⟩} ↦ {|F_λ⟩}` (row λ holds `2|F_λ⟩` in terms of `|E_μ⟩`).
const CONJUGATE_MAP: [[f64; 4]; 4] = [
    [1.0, 1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0, -1.0],
];

/// The optimal measurement for the conjugate encoding basis.
pub fn conjugate_setup(e: &MeasurementSetup) -> MeasurementSetup {
    let dirs: [CVec; 4] = std::array::from_fn(|l| {
        let coeffs: Vec<C64> = CONJUGATE_MAP[l].iter().map(|&k| re(0.5 * k)).collect();
        let refs: Vec<&CVec> = e.directions.iter().collect();
        CVec::combine(&coeffs, &refs)
    });
    MeasurementSetup::with_signs(dirs, e.signs, e.basis.conjugate())
        .expect("orthogonal transform of an orthonormal set")
}

/// Eve's four ancilla states for one encoding basis: fidelity states `ξ_a`
/// and disturbed states `ζ_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionVectors {
    pub basis: Basis,
    pub xi_0: CVec,
    pub xi_1: CVec,
    pub zeta_0: CVec,
    pub zeta_1: CVec,
}

impl InteractionVectors {
    pub fn xi(&self, bit: u8) -> &CVec {
        if bit == 0 {
            &self.xi_0
        } else {
            &self.xi_1
        }
    }

    pub fn zeta(&self, bit: u8) -> &CVec {
        if bit == 0 {
            &self.zeta_0
        } else {
            &self.zeta_1
        }
    }

    /// Applies the same operator to all four vectors.
    pub fn map(&self, f: impl Fn(&CVec) -> CVec) -> Self {
        InteractionVectors {
            basis: self.basis,
            xi_0: f(&self.xi_0),
            xi_1: f(&self.xi_1),
            zeta_0: f(&self.zeta_0),
            zeta_1: f(&self.zeta_1),
        }
    }

    /// Worst violation of: dimension 4, unit norms, fidelity set ⟂ disturbed set.
    pub fn invariant_defect(&self) -> f64 {
        let all = [&self.xi_0, &self.xi_1, &self.zeta_0, &self.zeta_1];
        if all.iter().any(|v| v.dim() != 4) {
            return f64::INFINITY;
        }
        let mut worst = all
            .iter()
            .map(|v| (v.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max);
        for x in [&self.xi_0, &self.xi_1] {
            for z in [&self.zeta_0, &self.zeta_1] {
                worst = worst.max(x.inner(z).expect("dim 4").norm());
            }
        }
        worst
    }
}

/// Optimal interaction vectors for `basis`, expanded in the directions of `m`.
///
/// For the computational basis with `(Δ⁺, Δ⁻) = delta_pm(D_uv)`:
/// `ξ_0 = Δ⁺M_0 + Δ⁻M_1`, `ξ_1 = Δ⁻M_0 + Δ⁺M_1`, and likewise `ζ` on
/// `M_2, M_3`. The Hadamard basis mirrors this with `D_xy`.
pub fn optimal_ivs(
    basis: Basis,
    rates: &ErrorRates,
    m: &MeasurementSetup,
) -> Result<InteractionVectors> {
    if m.basis != basis {
        return Err(Error::BasisMismatch {
            expected: basis,
            got: m.basis,
        });
    }
    let (dp, dm) = delta_pm(rates.rate(basis.conjugate()))?;
    let d = &m.directions;
    let mix = |a: f64, b: f64, u: &CVec, v: &CVec| CVec::combine(&[re(a), re(b)], &[u, v]);
    Ok(InteractionVectors {
        basis,
        xi_0: mix(dp, dm, &d[0], &d[1]),
        xi_1: mix(dm, dp, &d[0], &d[1]),
        zeta_0: mix(dp, dm, &d[2], &d[3]),
        zeta_1: mix(dm, dp, &d[2], &d[3]),
    })
}

/// Post-interaction joint states `|S_0⟩, |S_1⟩` of Alice ⊗ Eve for one basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pijs {
    pub basis: Basis,
    pub x_state: CVec,
    pub y_state: CVec,
    pub rates: ErrorRates,
    pub measurement: MeasurementSetup,
}

impl Pijs {
    pub fn state(&self, bit: u8) -> &CVec {
        if bit == 0 {
            &self.x_state
        } else {
            &self.y_state
        }
    }

    /// Worst violation of: unit norms and `⟨S_0|S_1⟩ = 0`.
    pub fn invariant_defect(&self) -> f64 {
        let n = (self.x_state.norm_sqr() - 1.0)
            .abs()
            .max((self.y_state.norm_sqr() - 1.0).abs());
        n.max(self.x_state.inner(&self.y_state).expect("dim 8").norm())
    }
}

/// `|S_a⟩ = √F_β |a⟩^β ⊗ |ξ_a⟩ + √D_β |ā⟩^β ⊗ |ζ_a⟩`.
pub fn pijs_from_ivs(
    basis: Basis,
    rates: &ErrorRates,
    ivs: &InteractionVectors,
    m: &MeasurementSetup,
) -> Result<Pijs> {
    if ivs.basis != basis {
        return Err(Error::BasisMismatch {
            expected: basis,
            got: ivs.basis,
        });
    }
    let (f, d) = (rates.fidelity(basis).sqrt(), rates.rate(basis).sqrt());
    let joint = |a: u8| {
        let keep = encode(a, basis).kron(ivs.xi(a)).scale_re(f);
        let flip = encode(1 - a, basis).kron(ivs.zeta(a)).scale_re(d);
        &keep + &flip
    };
    Ok(Pijs {
        basis,
        x_state: joint(0),
        y_state: joint(1),
        rates: *rates,
        measurement: m.clone(),
    })
}

/// Optimal joint states for `(basis, rates, m)`.
pub fn optimal_pijs(basis: Basis, rates: &ErrorRates, m: &MeasurementSetup) -> Result<Pijs> {
    let ivs = optimal_ivs(basis, rates, m)?;
    pijs_from_ivs(basis, rates, &ivs, m)
}

/// Interaction vectors where the disturbed pair may be undefined because its
/// Schmidt weight vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitIvs {
    pub basis: Basis,
    pub xi_0: CVec,
    pub xi_1: CVec,
    pub zeta: Option<(CVec, CVec)>,
}

impl SplitIvs {
    pub fn complete(self) -> Result<InteractionVectors> {
        let (zeta_0, zeta_1) = self.zeta.ok_or_else(|| {
            Error::Degenerate(format!(
                "disturbed states undefined in basis {}",
                self.basis
            ))
        })?;
        Ok(InteractionVectors {
            basis: self.basis,
            xi_0: self.xi_0,
            xi_1: self.xi_1,
            zeta_0,
            zeta_1,
        })
    }

    /// Substitutes zero vectors for an undefined disturbed pair.
    pub fn complete_or_zero(self) -> InteractionVectors {
        let (zeta_0, zeta_1) = self
            .zeta
            .unwrap_or_else(|| (CVec::zeros(4), CVec::zeros(4)));
        InteractionVectors {
            basis: self.basis,
            xi_0: self.xi_0,
            xi_1: self.xi_1,
            zeta_0,
            zeta_1,
        }
    }
}

/// Maps interaction vectors of one basis to those of the conjugate basis.
///
/// Writing `f, d` for the amplitudes of the source basis and `F, D` for the
/// target:
/// `2√F ξ_0' = f(ξ_0+ξ_1) + d(ζ_0+ζ_1)`, `2√F ξ_1' = f(ξ_0+ξ_1) − d(ζ_0+ζ_1)`,
/// `2√D ζ_0' = f(ξ_0−ξ_1) + d(ζ_1−ζ_0)`, `2√D ζ_1' = f(ξ_0−ξ_1) − d(ζ_1−ζ_0)`.
pub fn conjugate_ivs(ivs: &InteractionVectors, rates: &ErrorRates) -> SplitIvs {
    let src = ivs.basis;
    let dst = src.conjugate();
    let (f, d) = (rates.fidelity(src).sqrt(), rates.rate(src).sqrt());
    let (big_f, big_d) = (rates.fidelity(dst).sqrt(), rates.rate(dst).sqrt());

    let xi_sum = (&ivs.xi_0 + &ivs.xi_1).scale_re(f);
    let xi_diff = (&ivs.xi_0 - &ivs.xi_1).scale_re(f);
    let zeta_sum = (&ivs.zeta_0 + &ivs.zeta_1).scale_re(d);
    let zeta_rdiff = (&ivs.zeta_1 - &ivs.zeta_0).scale_re(d);

    let xi_0 = (&xi_sum + &zeta_sum).scale_re(0.5 / big_f);
    let xi_1 = (&xi_sum - &zeta_sum).scale_re(0.5 / big_f);
    let zeta = (big_d > DEGENERATE_EPS).then(|| {
        (
            (&xi_diff + &zeta_rdiff).scale_re(0.5 / big_d),
            (&xi_diff - &zeta_rdiff).scale_re(0.5 / big_d),
        )
    });
    SplitIvs {
        basis: dst,
        xi_0,
        xi_1,
        zeta,
    }
}

/// Hadamard-basis interaction vectors from computational-basis ones.
pub fn ivs_uv_from_xy(ivs_xy: &InteractionVectors, rates: &ErrorRates) -> Result<SplitIvs> {
    if ivs_xy.basis != Basis::Computational {
        return Err(Error::BasisMismatch {
            expected: Basis::Computational,
            got: ivs_xy.basis,
        });
    }
    Ok(conjugate_ivs(ivs_xy, rates))
}

/// Computational-basis interaction vectors from Hadamard-basis ones.
pub fn ivs_xy_from_uv(ivs_uv: &InteractionVectors, rates: &ErrorRates) -> Result<SplitIvs> {
    if ivs_uv.basis != Basis::Hadamard {
        return Err(Error::BasisMismatch {
            expected: Basis::Hadamard,
            got: ivs_uv.basis,
        });
    }
    Ok(conjugate_ivs(ivs_uv, rates))
}

/// Projects Bob's factor of `|S⟩` onto `|k⟩`, leaving Eve's unnormalized 4-vector.
pub fn project_bob(state: &CVec, k: &CVec) -> CVec {
    assert_eq!(state.dim(), 8);
    CVec::new(
        (0..4)
            .map(|e| k[0].conj() * state[e] + k[1].conj() * state[4 + e])
            .collect(),
    )
    .expect("dim 4")
}

/// Schmidt split of joint states back into interaction vectors:
/// `ξ_a = ⟨a|_B S_a / √F`, `ζ_a = ⟨ā|_B S_a / √D`.
pub fn schmidt_split(pijs: &Pijs) -> SplitIvs {
    let basis = pijs.basis;
    let f = pijs.rates.fidelity(basis).sqrt();
    let d = pijs.rates.rate(basis).sqrt();
    let part =
        |a: u8, k: u8, w: f64| project_bob(pijs.state(a), &encode(k, basis)).scale_re(1.0 / w);
    SplitIvs {
        basis,
        xi_0: part(0, 0, f),
        xi_1: part(1, 1, f),
        zeta: (d > DEGENERATE_EPS).then(|| (part(0, 1, d), part(1, 0, d))),
    }
}

/// Joint states obtained by re-expressing `(|S_0⟩, |S_1⟩)` of one basis in
/// the conjugate basis: `|S_0'⟩ = (|S_0⟩+|S_1⟩)/√2`, `|S_1'⟩ = (|S_0⟩−|S_1⟩)/√2`.
pub fn conjugate_pijs(pijs: &Pijs, measurement: &MeasurementSetup) -> Pijs {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Pijs {
        basis: pijs.basis.conjugate(),
        x_state: (&pijs.x_state + &pijs.y_state).scale_re(s),
        y_state: (&pijs.x_state - &pijs.y_state).scale_re(s),
        rates: pijs.rates,
        measurement: measurement.clone(),
    }
}

/// Deterministic orthonormal completion with `psi` first, as matrix columns.
pub fn completion_matrix(psi: &CVec) -> Result<CMat> {
    if !psi.is_normalized(TOL_NORM) {
        return Err(Error::NotOrthonormal((psi.norm_sqr() - 1.0).abs()));
    }
    let cols = complete_orthonormal_basis(std::slice::from_ref(psi), psi.dim())?;
    CMat::from_columns(&cols)
}
