//! Synthesis and transport of 8×8 attack unitaries.
//!
//! An attack unitary acts on Alice's qubit ⊗ Eve's 4-dim ancilla. It is
//! optimal when it maps `|a⟩ ⊗ ψ_0` to the optimal joint state of bit `a`.
//! Column layout: columns 0–3 act on `|0⟩ ⊗ e`, columns 4–7 on `|1⟩ ⊗ e`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::linalg::{complete_orthonormal_basis, gates, CMat, CVec, TOL_NORM, TOL_UNITARY};
use crate::optimality::{nsc_battery, NscReport};
use crate::states::{
    completion_matrix, computational_setup, conjugate_pijs, conjugate_setup, delta_kets, encode,
    optimal_pijs, Basis, ErrorRates, MeasurementSetup, Pijs,
};
use crate::{fmt_sig, Error, Result};

/// Tolerance for the two anchor equations.
pub const TOL_ANCHOR: f64 = 1e-9;

/// An 8×8 unitary together with the data it is optimal for.
///
/// Deserialization does not validate; call [`AttackUnitary::validate`] or
/// [`AttackUnitary::anchor_defect`] on imported data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackUnitary {
    pub u: CMat,
    pub initial_state: CVec,
    pub measurement: MeasurementSetup,
    pub rates: ErrorRates,
}

/// `u = u_xy · (I2 ⊗ w†)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub u_xy: CMat,
    pub w: CMat,
}

impl Factorization {
    pub fn recompose(&self) -> CMat {
        &self.u_xy * &CMat::identity(2).kron(&self.w.dagger())
    }
}

impl AttackUnitary {
    /// Builds and validates.
    pub fn new(
        u: CMat,
        initial_state: CVec,
        measurement: MeasurementSetup,
        rates: ErrorRates,
    ) -> Result<Self> {
        let a = AttackUnitary {
            u,
            initial_state,
            measurement,
            rates,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.u.rows() != 8 || self.u.cols() != 8 {
            return Err(Error::DimensionMismatch {
                expected: 8,
                got: self.u.rows().max(self.u.cols()),
            });
        }
        if self.initial_state.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                got: self.initial_state.dim(),
            });
        }
        if self.measurement.basis() != Basis::Computational {
            return Err(Error::BasisMismatch {
                expected: Basis::Computational,
                got: self.measurement.basis(),
            });
        }
        let defect = self.u.unitarity_defect()?;
        if defect > TOL_UNITARY {
            return Err(Error::NotUnitary(defect));
        }
        let anchor = self.anchor_defect()?;
        if anchor > TOL_ANCHOR {
            return Err(Error::AnchorViolation(anchor));
        }
        Ok(())
    }

    /// Image of `|bit⟩^basis ⊗ ψ_0`.
    pub fn image(&self, bit: u8, basis: Basis) -> CVec {
        &self.u * &encode(bit, basis).kron(&self.initial_state)
    }

    /// Target joint states for the stored rates and measurement.
    pub fn target_pijs(&self) -> Result<Pijs> {
        optimal_pijs(Basis::Computational, &self.rates, &self.measurement)
    }

    /// `max_a ‖U(|a⟩⊗ψ_0) − S*_a‖_max`.
    pub fn anchor_defect(&self) -> Result<f64> {
        let p = self.target_pijs()?;
        Ok((0..2u8)
            .map(|a| self.image(a, Basis::Computational).max_abs_diff(p.state(a)))
            .fold(0.0, f64::max))
    }

    /// Joint states produced by this unitary for `basis` encodings.
    pub fn pijs(&self, basis: Basis) -> Pijs {
        let measurement = match basis {
            Basis::Computational => self.measurement.clone(),
            Basis::Hadamard => conjugate_setup(&self.measurement),
        };
        Pijs {
            basis,
            x_state: self.image(0, basis),
            y_state: self.image(1, basis),
            rates: self.rates,
            measurement,
        }
    }

    /// Optimality battery in `basis`, using the measurement Eve applies there.
    pub fn certify(&self, basis: Basis, tol: f64) -> Result<NscReport> {
        let p = self.pijs(basis);
        nsc_battery(&p, &p.measurement, tol)
    }

    /// Plain matrix dump: 8 rows of 16 columns, re/im interleaved.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..8).map(|j| format!("re{j},im{j}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..8 {
            let row: Vec<String> = (0..8)
                .map(|j| {
                    let z = self.u.get(i, j);
                    format!("{},{}", fmt_sig(z.re), fmt_sig(z.im))
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

fn check_unitary(m: &CMat) -> Result<()> {
    let d = m.unitarity_defect()?;
    if d > TOL_UNITARY {
        Err(Error::NotUnitary(d))
    } else {
        Ok(())
    }
}

/// Initial state `|Δ_xy⟩ ⊗ |Δ^H_uv⟩` of the block construction.
pub fn delta_hadamard_state(rates: &ErrorRates) -> CVec {
    let (dxy, _) = delta_kets(rates.d_xy()).expect("validated rate");
    let (_, dh) = delta_kets(rates.d_uv()).expect("validated rate");
    dxy.kron(&dh)
}

/// `U = [U_x | U_y]` with `U_x = (|00⟩ |11⟩) ⊗ I2` and `U_y = (|10⟩ |01⟩) ⊗ σ_x`.
pub fn synth_delta_hadamard(rates: &ErrorRates) -> AttackUnitary {
    let ket = |bits: [usize; 2]| CVec::basis(4, 2 * bits[0] + bits[1]);
    let block = |a: CVec, b: CVec, local: &CMat| {
        let pair = CMat::from_columns(&[a, b]).expect("dim 4");
        pair.kron(local)
    };
    let ux = block(ket([0, 0]), ket([1, 1]), &gates::identity2());
    let uy = block(ket([1, 0]), ket([0, 1]), &gates::sigma_x());
    let u = CMat::hstack(&ux, &uy).expect("8 rows");
    AttackUnitary {
        u,
        initial_state: delta_hadamard_state(rates),
        measurement: computational_setup(),
        rates: *rates,
    }
}

/// `U = Σ_i (|X_i⟩⟨0| + |Y_i⟩⟨1|)⟨ψ_i|` with `X_0, Y_0` the target joint
/// states and the rest from deterministic completions.
pub fn synth_by_basis_completion(pijs: &Pijs, psi0: &CVec) -> Result<AttackUnitary> {
    if pijs.basis != Basis::Computational {
        return Err(Error::BasisMismatch {
            expected: Basis::Computational,
            got: pijs.basis,
        });
    }
    if psi0.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: psi0.dim(),
        });
    }
    let w = completion_matrix(psi0)?;
    let images = complete_orthonormal_basis(&[pijs.x_state.clone(), pijs.y_state.clone()], 8)?;
    // images are [X*, Y*, c2..c7]; X_i = c_{2i}, Y_i = c_{2i+1}
    let mut u = CMat::zeros(8, 8);
    for i in 0..4 {
        let psi = w.column(i);
        for (a, img) in [(0usize, &images[2 * i]), (1usize, &images[2 * i + 1])] {
            u = u.add(&CMat::outer(img, &CVec::basis(2, a).kron(&psi)))?;
        }
    }
    AttackUnitary::new(u, psi0.clone(), pijs.measurement.clone(), pijs.rates)
}

/// Splits `u = u_xy · (I2 ⊗ w†)` with `w` the completion of the initial state.
pub fn factorize(a: &AttackUnitary) -> Result<Factorization> {
    let w = completion_matrix(&a.initial_state)?;
    let u_xy = &a.u * &CMat::identity(2).kron(&w);
    Ok(Factorization { u_xy, w })
}

/// `Γ = W · diag(1, T†) · W†`, identity on the initial-state direction.
pub fn is_subspace_gamma(initial_state: &CVec, t_perp: &CMat) -> Result<CMat> {
    if t_perp.rows() != 3 || !t_perp.is_square() {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: t_perp.rows(),
        });
    }
    check_unitary(t_perp)?;
    let w = completion_matrix(initial_state)?;
    let inner = CMat::block_diag(&CMat::identity(1), &t_perp.dagger());
    Ok(&(&w * &inner) * &w.dagger())
}

/// Alternate optimal unitary `u · (I2 ⊗ Γ)`, free on the complement of ψ_0.
pub fn alternate_via_is_subspace(a: &AttackUnitary, t_perp: &CMat) -> Result<AttackUnitary> {
    let gamma = is_subspace_gamma(&a.initial_state, t_perp)?;
    let u = &a.u * &CMat::identity(2).kron(&gamma);
    AttackUnitary::new(u, a.initial_state.clone(), a.measurement.clone(), a.rates)
}

fn check_fixes_anchor(g: &CMat) -> Result<()> {
    if g.rows() != 4 || !g.is_square() {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: g.rows(),
        });
    }
    check_unitary(g)?;
    let e0 = CVec::basis(4, 0);
    let d = (g * &e0).max_abs_diff(&e0);
    if d > TOL_ANCHOR {
        return Err(Error::AnchorNotFixed(d));
    }
    Ok(())
}

/// Alternate optimal unitary `u_xy · diag(Γ_X, Γ_Y) · (I2 ⊗ w†)`; each Γ must
/// fix its block's anchor column.
pub fn alternate_via_pijs_subspace(
    f: &Factorization,
    gamma_x: &CMat,
    gamma_y: &CMat,
    pijs: &Pijs,
) -> Result<AttackUnitary> {
    check_fixes_anchor(gamma_x)?;
    check_fixes_anchor(gamma_y)?;
    let gamma = CMat::block_diag(gamma_x, gamma_y);
    let u = &(&f.u_xy * &gamma) * &CMat::identity(2).kron(&f.w.dagger());
    AttackUnitary::new(u, f.w.column(0), pijs.measurement.clone(), pijs.rates)
}

/// Transports to initial state `t_ef · ψ_0`: `U_f = U_e (I2 ⊗ T†)`.
pub fn change_initial_state(a: &AttackUnitary, t_ef: &CMat) -> Result<AttackUnitary> {
    if t_ef.rows() != 4 || !t_ef.is_square() {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: t_ef.rows(),
        });
    }
    check_unitary(t_ef)?;
    let u = &a.u * &CMat::identity(2).kron(&t_ef.dagger());
    AttackUnitary::new(u, t_ef * &a.initial_state, a.measurement.clone(), a.rates)
}

/// Transports to measurement `m_new`: `U' = (I2 ⊗ M_new M_old†) U`.
/// With the computational pivot this is `(I2 ⊗ M) U`.
pub fn change_measurement(a: &AttackUnitary, m_new: &MeasurementSetup) -> Result<AttackUnitary> {
    if m_new.basis() != Basis::Computational {
        return Err(Error::BasisMismatch {
            expected: Basis::Computational,
            got: m_new.basis(),
        });
    }
    let local = &m_new.matrix() * &a.measurement.matrix().dagger();
    let u = &CMat::identity(2).kron(&local) * &a.u;
    AttackUnitary::new(u, a.initial_state.clone(), m_new.clone(), a.rates)
}

/// `A_d = √(1−d) σ_z + √d σ_x`, mapping `|Δ_d⟩` to `|0⟩`.
pub fn delta_to_zero(d: f64) -> CMat {
    gates::sigma_z()
        .scale((1.0 - d).sqrt().into())
        .add(&gates::sigma_x().scale(d.sqrt().into()))
        .expect("2x2")
}

/// Maps `|00⟩` to `(|00⟩+|11⟩)/√2`: Hadamard on E1 then CNOT controlled by E1.
pub fn zero_to_bell() -> CMat {
    &gates::cnot() * &gates::hadamard().kron(&gates::identity2())
}

/// Initial-state selectors of the transport chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    DeltaHadamard,
    Delta,
    Zero,
    Bell,
}

/// Runs the chain `Δ^H → Δ → |00⟩ → |φ⁺⟩` up to `target` from the block construction.
pub fn synth_chain(rates: &ErrorRates, target: InitialState) -> Result<AttackUnitary> {
    let mut a = synth_delta_hadamard(rates);
    a.validate()?;
    if target == InitialState::DeltaHadamard {
        return Ok(a);
    }
    a = change_initial_state(&a, &gates::identity2().kron(&gates::hadamard()))?;
    if target == InitialState::Delta {
        return Ok(a);
    }
    let t = delta_to_zero(rates.d_xy()).kron(&delta_to_zero(rates.d_uv()));
    a = change_initial_state(&a, &t)?;
    if target == InitialState::Zero {
        return Ok(a);
    }
    change_initial_state(&a, &zero_to_bell())
}

/// Re-expresses `u` so it is optimal for an arbitrary normalized initial
/// state, via the unitary completion taking the current state to `psi`.
pub fn retarget_initial_state(a: &AttackUnitary, psi: &CVec) -> Result<AttackUnitary> {
    if !psi.is_normalized(TOL_NORM) {
        return Err(Error::NotOrthonormal((psi.norm_sqr() - 1.0).abs()));
    }
    let from = completion_matrix(&a.initial_state)?;
    let to = completion_matrix(psi)?;
    change_initial_state(a, &(&to * &from.dagger()))
}

/// Same joint states expressed for the conjugate encoding.
pub fn conjugate_view(a: &AttackUnitary) -> Pijs {
    conjugate_pijs(
        &a.pijs(Basis::Computational),
        &conjugate_setup(&a.measurement),
    )
}
