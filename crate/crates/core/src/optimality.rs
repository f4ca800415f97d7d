//! Numeric certificates of optimality.
//!
//! Every check is written for a *target* encoding basis β (the basis of the
//! supplied measurement setup). Interaction vectors or joint states of the
//! conjugate basis β̄ enter where the criterion needs them. With β = xy this
//! is the usual presentation; β = uv certifies the same attack in the
//! conjugate basis.
//!
//! Residuals are absolute and dimensionless. A sub-condition whose prefactor
//! falls below [`DEGENERATE_EPS`] reports residual 0 and is listed as vacuous.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{expi_hermitian, gram_defect, random_hermitian, re, CMat, CVec, C64};
use crate::states::{
    conjugate_ivs, conjugate_pijs, conjugate_setup, delta_pm, encode, pijs_from_ivs, project_bob,
    schmidt_split, Basis, ErrorRates, InteractionVectors, MeasurementSetup, Pijs, DEGENERATE_EPS,
};
use crate::{Error, Result};

/// Identifier of one optimality criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    FuchsU,
    FuchsV,
    Cond1,
    Cond2,
    Cond3,
    Corollary,
}

impl Condition {
    pub const ALL: [Condition; 6] = [
        Condition::FuchsU,
        Condition::FuchsV,
        Condition::Cond1,
        Condition::Cond2,
        Condition::Cond3,
        Condition::Corollary,
    ];
}

/// Outcome of one or more optimality checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NscReport {
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub per_condition: BTreeMap<Condition, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vacuous: Vec<Condition>,
}

impl NscReport {
    fn empty(tol: f64) -> Self {
        NscReport {
            passed: true,
            max_residual: 0.0,
            tolerance: tol,
            per_condition: BTreeMap::new(),
            vacuous: Vec::new(),
        }
    }

    fn record(&mut self, cond: Condition, residual: f64) {
        // NaN must never pass
        let r = if residual.is_nan() {
            f64::INFINITY
        } else {
            residual
        };
        let slot = self.per_condition.entry(cond).or_insert(0.0);
        *slot = slot.max(r);
        self.max_residual = self.max_residual.max(r);
        self.passed = self.max_residual <= self.tolerance;
    }

    fn mark_vacuous(&mut self, cond: Condition) {
        self.record(cond, 0.0);
        if !self.vacuous.contains(&cond) {
            self.vacuous.push(cond);
        }
    }

    /// Folds `other` into `self`, keeping the tighter tolerance.
    pub fn merge(mut self, other: NscReport) -> Self {
        self.tolerance = self.tolerance.min(other.tolerance);
        for (c, r) in other.per_condition {
            self.record(c, r);
        }
        for v in other.vacuous {
            if !self.vacuous.contains(&v) {
                self.vacuous.push(v);
            }
        }
        self.passed = self.max_residual <= self.tolerance;
        self
    }

    pub fn residual(&self, cond: Condition) -> Option<f64> {
        self.per_condition.get(&cond).copied()
    }

    /// Pass/fail of a single criterion.
    pub fn condition_passed(&self, cond: Condition) -> Option<bool> {
        self.residual(cond).map(|r| r <= self.tolerance)
    }
}

fn expect_basis(expected: Basis, got: Basis) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::BasisMismatch { expected, got })
    }
}

/// `|(1−D_β)⟨ξ_0|ξ_1⟩ + D_β⟨ζ_0|ζ_1⟩ − 2Δ⁺Δ⁻|` with amplitudes of the conjugate rate.
pub fn lemma1_residual(ivs: &InteractionVectors, rates: &ErrorRates) -> Result<f64> {
    let b = ivs.basis;
    let (dp, dm) = delta_pm(rates.rate(b.conjugate()))?;
    let xi = ivs.xi_0.inner(&ivs.xi_1)?;
    let zeta = ivs.zeta_0.inner(&ivs.zeta_1)?;
    let lhs = xi * rates.fidelity(b) + zeta * rates.rate(b);
    Ok((lhs - re(2.0 * dp * dm)).norm())
}

/// Joint-space criterion: with `|W_{λa}⟩ = (B_a ⊗ M_λ)|W⟩` built from the
/// conjugate-basis joint states `W ∈ {S_0, S_1}`, requires
/// `√D |S0_{λ,0}⟩ = ε_λ √(1−D) |S1_{λ,0}⟩` and
/// `√D |S1_{λ,1}⟩ = ε_λ √(1−D) |S0_{λ,1}⟩`, where `D` is the conjugate-basis rate,
/// plus real inner products `⟨S0_{λa}|S1_{λa}⟩` of sign `ε_λ`.
pub fn check_fuchs_nsc(
    pijs_conj: &Pijs,
    setup: &MeasurementSetup,
    rates: &ErrorRates,
    tol: f64,
) -> Result<NscReport> {
    let target = setup.basis();
    expect_basis(target.conjugate(), pijs_conj.basis)?;
    let d = rates.rate(pijs_conj.basis);
    let (sd, sf) = (d.sqrt(), (1.0 - d).sqrt());
    let mut report = NscReport::empty(tol);

    let component = |state: &CVec, a: u8, lambda: usize| -> CVec {
        let bob = encode(a, pijs_conj.basis);
        let eve = setup.direction(lambda);
        let amp = eve.inner(&project_bob(state, &bob)).expect("dim 4");
        bob.kron(eve).scale(amp)
    };

    for (cond, a) in [(Condition::FuchsU, 0u8), (Condition::FuchsV, 1u8)] {
        if sd < DEGENERATE_EPS {
            report.mark_vacuous(cond);
            continue;
        }
        // the bit-a state is scaled by √D, the other by ε√(1−D)
        let (lead, other) = if a == 0 {
            (&pijs_conj.x_state, &pijs_conj.y_state)
        } else {
            (&pijs_conj.y_state, &pijs_conj.x_state)
        };
        for lambda in 0..4 {
            let eps = setup.sign(lambda);
            let wl = component(lead, a, lambda);
            let wo = component(other, a, lambda);
            let lhs = wl.scale_re(sd);
            let rhs = wo.scale_re(eps * sf);
            report.record(cond, lhs.max_abs_diff(&rhs));

            let ov = wl.inner(&wo)?;
            report.record(cond, ov.im.abs());
            if ov.norm() > DEGENERATE_EPS && ov.re * eps < 0.0 {
                report.record(cond, ov.re.abs());
            }
        }
    }
    Ok(report)
}

/// Overlaps of the measurement directions with the conjugate-basis IVs:
/// `⟨M_λ|ξ_0⟩ = ε_λ⟨M_λ|ζ_1⟩` and `⟨M_λ|ξ_1⟩ = ε_λ⟨M_λ|ζ_0⟩`.
pub fn check_condition1(
    ivs_conj: &InteractionVectors,
    setup: &MeasurementSetup,
    tol: f64,
) -> Result<NscReport> {
    expect_basis(setup.basis().conjugate(), ivs_conj.basis)?;
    let mut report = NscReport::empty(tol);
    let xi0 = setup.overlaps(&ivs_conj.xi_0);
    let xi1 = setup.overlaps(&ivs_conj.xi_1);
    let z0 = setup.overlaps(&ivs_conj.zeta_0);
    let z1 = setup.overlaps(&ivs_conj.zeta_1);
    for l in 0..4 {
        let eps = setup.sign(l);
        report.record(Condition::Cond1, (xi0[l] - z1[l] * eps).norm());
        report.record(Condition::Cond1, (xi1[l] - z0[l] * eps).norm());
    }
    Ok(report)
}

/// Overlap law on Eve's space alone: `⟨ξ_0|ξ_1⟩ = ⟨ζ_0|ζ_1⟩ = 1 − 2D` with `D`
/// the conjugate-basis rate. Both overlaps must be real.
pub fn check_corollary_overlaps(
    ivs: &InteractionVectors,
    rates: &ErrorRates,
    tol: f64,
) -> Result<NscReport> {
    let target = re(1.0 - 2.0 * rates.rate(ivs.basis.conjugate()));
    let mut report = NscReport::empty(tol);
    report.record(
        Condition::Corollary,
        (ivs.xi_0.inner(&ivs.xi_1)? - target).norm(),
    );
    report.record(
        Condition::Corollary,
        (ivs.zeta_0.inner(&ivs.zeta_1)? - target).norm(),
    );
    Ok(report)
}

/// Ratio criterion `⟨M_λ|ξ_0⟩/⟨M_λ|ξ_1⟩ = ⟨M_λ|ζ_0⟩/⟨M_λ|ζ_1⟩ = (Δ⁺/Δ⁻)^{ε_λ}`,
/// evaluated in cross-multiplied form so vanishing overlaps stay well defined.
pub fn check_condition2(
    ivs: &InteractionVectors,
    setup: &MeasurementSetup,
    rates: &ErrorRates,
    tol: f64,
) -> Result<NscReport> {
    expect_basis(setup.basis(), ivs.basis)?;
    let (dp, dm) = delta_pm(rates.rate(ivs.basis.conjugate()))?;
    let mut report = NscReport::empty(tol);
    let a0 = setup.overlaps(&ivs.xi_0);
    let a1 = setup.overlaps(&ivs.xi_1);
    let b0 = setup.overlaps(&ivs.zeta_0);
    let b1 = setup.overlaps(&ivs.zeta_1);
    for l in 0..4 {
        // ratio num/den: for ε=+1 it is Δ⁺/Δ⁻, so num·Δ⁻ − den·Δ⁺ = 0
        let (num, den) = if setup.sign(l) > 0.0 {
            (dp, dm)
        } else {
            (dm, dp)
        };
        report.record(Condition::Cond2, (a0[l] * den - a1[l] * num).norm());
        report.record(Condition::Cond2, (b0[l] * den - b1[l] * num).norm());
        report.record(Condition::Cond2, (a0[l] * b1[l] - a1[l] * b0[l]).norm());
    }
    Ok(report)
}

/// Recovers `(|E⁺_ξ⟩, |E⁻_ξ⟩, |E⁺_ζ⟩, |E⁻_ζ⟩)` from
/// `ξ_0 = Δ⁺E⁺_ξ + Δ⁻E⁻_ξ`, `ξ_1 = Δ⁻E⁺_ξ + Δ⁺E⁻_ξ` (and the same for ζ);
/// the residual is the orthonormality defect of the recovered set.
pub fn decompose_condition3(
    ivs: &InteractionVectors,
    rates: &ErrorRates,
) -> Result<([CVec; 4], f64)> {
    let (dp, dm) = delta_pm(rates.rate(ivs.basis.conjugate()))?;
    let det = dp * dp - dm * dm;
    if det < DEGENERATE_EPS {
        return Err(Error::Degenerate(
            "Δ⁺ = Δ⁻: fidelity and disturbed pairs do not determine a basis".into(),
        ));
    }
    let solve = |v0: &CVec, v1: &CVec| {
        let plus = CVec::combine(&[re(dp / det), re(-dm / det)], &[v0, v1]);
        let minus = CVec::combine(&[re(-dm / det), re(dp / det)], &[v0, v1]);
        (plus, minus)
    };
    let (xp, xm) = solve(&ivs.xi_0, &ivs.xi_1);
    let (zp, zm) = solve(&ivs.zeta_0, &ivs.zeta_1);
    let basis = [xp, xm, zp, zm];
    let residual = gram_defect(&basis);
    Ok((basis, residual))
}

pub fn check_condition3(
    ivs: &InteractionVectors,
    rates: &ErrorRates,
    tol: f64,
) -> Result<NscReport> {
    let mut report = NscReport::empty(tol);
    match decompose_condition3(ivs, rates) {
        Ok((_, r)) => report.record(Condition::Cond3, r),
        Err(Error::Degenerate(_)) => report.mark_vacuous(Condition::Cond3),
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// The column swap `Π_1324`.
pub fn swap_matrix() -> CMat {
    CMat::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ])
}

/// Witness that the condition-3 basis of `ivs` is a block rotation of the
/// supplied setup: `M_new = M_old · S_w · R · S_w` with `R = diag(R⁺, R⁻)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence {
    pub r: CMat,
    pub r_plus: CMat,
    pub r_minus: CMat,
    /// Worst of: decomposition defect, off-diagonal blocks of `R`, block
    /// unitarity, and the reconstruction `‖M_new − M_old S_w R S_w‖_max`.
    pub residual: f64,
}

/// Recovers the block-diagonal `R` relating the condition-3 basis to `setup`.
pub fn old_new_equivalence(
    ivs: &InteractionVectors,
    setup: &MeasurementSetup,
    rates: &ErrorRates,
) -> Result<Equivalence> {
    expect_basis(setup.basis(), ivs.basis)?;
    let (new_basis, decomposition_defect) = decompose_condition3(ivs, rates)?;
    let m_new = CMat::from_columns(&new_basis)?;
    let m_old = setup.matrix();
    let sw = swap_matrix();
    let r = &(&(&sw * &m_old.dagger()) * &m_new) * &sw;

    let r_plus = r.block(0, 0, 2, 2);
    let r_minus = r.block(2, 2, 2, 2);
    let off = r
        .block(0, 2, 2, 2)
        .entries()
        .iter()
        .chain(r.block(2, 0, 2, 2).entries())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let rebuilt = &(&(&m_old * &sw) * &CMat::block_diag(&r_plus, &r_minus)) * &sw;
    let residual = decomposition_defect
        .max(off)
        .max(r_plus.unitarity_defect()?)
        .max(r_minus.unitarity_defect()?)
        .max(rebuilt.max_abs_diff(&m_new));
    Ok(Equivalence {
        r,
        r_plus,
        r_minus,
        residual,
    })
}

/// Runs every criterion against joint states `pijs` of the setup's basis.
///
/// Interaction vectors are recovered by Schmidt split; the conjugate-basis
/// objects are obtained by re-expressing the same joint states.
pub fn nsc_battery(pijs: &Pijs, setup: &MeasurementSetup, tol: f64) -> Result<NscReport> {
    expect_basis(setup.basis(), pijs.basis)?;
    let rates = pijs.rates;
    let conj = conjugate_pijs(pijs, &conjugate_setup(setup));
    let mut report = check_fuchs_nsc(&conj, setup, &rates, tol)?;

    let split = schmidt_split(pijs);
    let degenerate = split.zeta.is_none();
    let ivs = split.complete_or_zero();

    let conj_split = schmidt_split(&conj);
    if conj_split.zeta.is_some() {
        let ivs_conj = conj_split.complete_or_zero();
        report = report.merge(check_condition1(&ivs_conj, setup, tol)?);
    } else {
        let mut r = NscReport::empty(tol);
        r.mark_vacuous(Condition::Cond1);
        report = report.merge(r);
    }

    report = report.merge(check_condition2(&ivs, setup, &rates, tol)?);
    report = report.merge(check_condition3(&ivs, &rates, tol)?);
    if degenerate {
        // only the fidelity overlap is meaningful without a disturbed branch
        let target = re(1.0 - 2.0 * rates.rate(ivs.basis.conjugate()));
        let mut r = NscReport::empty(tol);
        r.record(
            Condition::Corollary,
            (ivs.xi_0.inner(&ivs.xi_1)? - target).norm(),
        );
        report = report.merge(r);
    } else {
        report = report.merge(check_corollary_overlaps(&ivs, &rates, tol)?);
    }
    Ok(report)
}

/// [`nsc_battery`] for interaction vectors of the setup's basis.
pub fn nsc_battery_ivs(
    ivs: &InteractionVectors,
    setup: &MeasurementSetup,
    rates: &ErrorRates,
    tol: f64,
) -> Result<NscReport> {
    let pijs = pijs_from_ivs(ivs.basis, rates, ivs, setup)?;
    nsc_battery(&pijs, setup, tol)
}

/// Conjugate-basis interaction vectors used by condition 1 when starting
/// from IVs directly rather than joint states.
pub fn conjugate_ivs_for_check(ivs: &InteractionVectors, rates: &ErrorRates) -> InteractionVectors {
    conjugate_ivs(ivs, rates).complete_or_zero()
}

/// Applies `exp(iθK)` with random Hermitian `K` to the bit-1 pair `(ξ_1, ζ_1)`.
///
/// Norms and `ξ_1 ⟂ ζ_1` survive; the cross-bit overlaps generally do not.
pub fn perturb_ivs<R: Rng + ?Sized>(
    ivs: &InteractionVectors,
    theta: f64,
    rng: &mut R,
) -> InteractionVectors {
    let k = random_hermitian(4, rng);
    perturb_ivs_with(ivs, &k, theta)
}

pub fn perturb_ivs_with(ivs: &InteractionVectors, k: &CMat, theta: f64) -> InteractionVectors {
    let v = expi_hermitian(k, theta).expect("square hermitian");
    InteractionVectors {
        xi_1: &v * &ivs.xi_1,
        zeta_1: &v * &ivs.zeta_1,
        ..ivs.clone()
    }
}

/// Like [`perturb_ivs`] but redraws `K` until the overlap law is violated by
/// more than `min_defect`.
pub fn perturb_breaking<R: Rng + ?Sized>(
    ivs: &InteractionVectors,
    rates: &ErrorRates,
    theta: f64,
    min_defect: f64,
    rng: &mut R,
) -> InteractionVectors {
    loop {
        let p = perturb_ivs(ivs, theta, rng);
        let r = check_corollary_overlaps(&p, rates, 0.0)
            .expect("dim 4")
            .max_residual;
        if r > min_defect {
            return p;
        }
    }
}

/// Convenience for fuzzing: complex unit scalar with random phase.
pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_random_unitary;
    use crate::states::{
        computational_setup, fuchs_setup, ivs_uv_from_xy, optimal_ivs, optimal_pijs,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xy(d_xy: f64, d_uv: f64, setup: &MeasurementSetup) -> (ErrorRates, InteractionVectors) {
        let r = ErrorRates::new(d_xy, d_uv).unwrap();
        (r, optimal_ivs(Basis::Computational, &r, setup).unwrap())
    }

    fn random_setup(seed: u64) -> MeasurementSetup {
        MeasurementSetup::from_unitary(&haar_random_unitary(4, seed), Basis::Computational).unwrap()
    }

    #[test]
    fn lemma1_examples() {
        let (r, ivs) = xy(0.1, 0.1, &computational_setup());
        assert!(lemma1_residual(&ivs, &r).unwrap() < 1e-12);

        // ξ_y replaced by a vector orthogonal to ξ_x: residual |0.9·(0 − 0.8)|
        let mut bad = ivs.clone();
        bad.xi_1 = CVec::basis(4, 2);
        assert!(bad.xi_0.inner(&bad.xi_1).unwrap().norm() < 1e-16);
        let res = lemma1_residual(&bad, &r).unwrap();
        assert!((res - 0.72).abs() < 1e-12, "{res}");

        let (r, ivs) = xy(0.2, 0.5, &fuchs_setup());
        assert!(lemma1_residual(&ivs, &r).unwrap() < 1e-12);
        assert!(ivs.xi_0.inner(&ivs.xi_1).unwrap().norm() < 1e-15);
    }

    #[test]
    fn fuchs_optimal_passes() {
        let r = ErrorRates::symmetric(0.15).unwrap();
        let c = computational_setup();
        let p = optimal_pijs(Basis::Computational, &r, &c).unwrap();
        let uv = conjugate_pijs(&p, &conjugate_setup(&c));
        let rep = check_fuchs_nsc(&uv, &c, &r, 1e-10).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.max_residual < 1e-10);
    }

    #[test]
    fn fuchs_random_state_fails() {
        let r = ErrorRates::symmetric(0.15).unwrap();
        let c = computational_setup();
        let p = optimal_pijs(Basis::Computational, &r, &c).unwrap();
        let mut uv = conjugate_pijs(&p, &conjugate_setup(&c));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        uv.y_state = crate::linalg::random_state(8, &mut rng);
        let rep = check_fuchs_nsc(&uv, &c, &r, 1e-9).unwrap();
        assert!(!rep.passed);
    }

    #[test]
    fn fuchs_vacuous_at_zero_conjugate_rate() {
        let r = ErrorRates::new(0.2, 0.0).unwrap();
        let c = computational_setup();
        let p = optimal_pijs(Basis::Computational, &r, &c).unwrap();
        let uv = conjugate_pijs(&p, &conjugate_setup(&c));
        let rep = check_fuchs_nsc(&uv, &c, &r, 1e-9).unwrap();
        assert!(rep.passed);
        assert!(rep.vacuous.contains(&Condition::FuchsU));
        assert!(rep.vacuous.contains(&Condition::FuchsV));
    }

    #[test]
    fn condition1_examples() {
        let (r, ivs) = xy(0.2, 0.2, &computational_setup());
        let uv = ivs_uv_from_xy(&ivs, &r).unwrap().complete().unwrap();
        let c = computational_setup();
        assert!(check_condition1(&uv, &c, 1e-10).unwrap().passed);

        let mut swapped = uv.clone();
        std::mem::swap(&mut swapped.zeta_0, &mut swapped.zeta_1);
        assert!(!check_condition1(&swapped, &c, 1e-9).unwrap().passed);

        // relabel: flip every sign and reorder directions to match
        let dirs = c.directions();
        let relabeled = MeasurementSetup::with_signs(
            [
                dirs[1].clone(),
                dirs[0].clone(),
                dirs[3].clone(),
                dirs[2].clone(),
            ],
            [-1, 1, -1, 1],
            Basis::Computational,
        )
        .unwrap();
        assert!(check_condition1(&uv, &relabeled, 1e-10).unwrap().passed);
    }

    #[test]
    fn corollary_examples() {
        for (dx, du) in [(0.1, 0.1), (0.3, 0.05), (0.0, 0.4)] {
            let (r, ivs) = xy(dx, du, &random_setup(11));
            assert!(check_corollary_overlaps(&ivs, &r, 1e-12).unwrap().passed);
        }
        let r = ErrorRates::symmetric(0.1).unwrap();
        let identity_attack = InteractionVectors {
            basis: Basis::Computational,
            xi_0: CVec::basis(4, 0),
            xi_1: CVec::basis(4, 0),
            zeta_0: CVec::basis(4, 2),
            zeta_1: CVec::basis(4, 2),
        };
        let rep = check_corollary_overlaps(&identity_attack, &r, 1e-9).unwrap();
        assert!(!rep.passed);
        assert!((rep.max_residual - 0.2).abs() < 1e-15);

        let (r, ivs) = xy(0.1, 0.5, &computational_setup());
        assert!(check_corollary_overlaps(&ivs, &r, 1e-12).unwrap().passed);
        assert!(ivs.zeta_0.inner(&ivs.zeta_1).unwrap().norm() < 1e-15);
    }

    #[test]
    fn condition2_examples() {
        let c = computational_setup();
        let (r, ivs) = xy(0.1, 0.1, &c);
        assert!(check_condition2(&ivs, &c, &r, 1e-12).unwrap().passed);

        let (_, ivs) = xy(0.1, 0.1464466, &c);
        let ratio = c.overlaps(&ivs.xi_0)[0] / c.overlaps(&ivs.xi_1)[0];
        assert!((ratio.re - 2.414214).abs() < 1e-5, "{ratio}");
        assert!((ratio.re - (1.0 + 2f64.sqrt())).abs() < 1e-5);
    }

    #[test]
    fn condition2_residual_linear_in_small_rotation() {
        let c = computational_setup();
        let (r, ivs) = xy(0.2, 0.3, &c);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k = random_hermitian(4, &mut rng);
        // rotate one measurement direction
        let rotate = |theta: f64| {
            let v = expi_hermitian(&k, theta).unwrap();
            let mut dirs = c.directions().clone();
            dirs = dirs.map(|d| &v * &d);
            MeasurementSetup::new(dirs, Basis::Computational).unwrap()
        };
        let r1 = check_condition2(&ivs, &rotate(1e-3), &r, 1e-9).unwrap();
        let r2 = check_condition2(&ivs, &rotate(5e-4), &r, 1e-9).unwrap();
        assert!(!r1.passed);
        let ratio = r1.max_residual / r2.max_residual;
        assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn condition3_examples() {
        let c = computational_setup();
        let (r, ivs) = xy(0.1, 0.2, &c);
        let (basis, res) = decompose_condition3(&ivs, &r).unwrap();
        assert!(res < 1e-10);
        for (k, v) in basis.iter().enumerate() {
            assert!(v.max_abs_diff(c.direction(k)) < 1e-12);
        }

        let m = random_setup(21);
        let (r, ivs) = xy(0.33, 0.07, &m);
        assert!(decompose_condition3(&ivs, &r).unwrap().1 < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let junk = InteractionVectors {
            basis: Basis::Computational,
            xi_0: crate::linalg::random_state(4, &mut rng),
            xi_1: crate::linalg::random_state(4, &mut rng),
            zeta_0: crate::linalg::random_state(4, &mut rng),
            zeta_1: crate::linalg::random_state(4, &mut rng),
        };
        assert!(!check_condition3(&junk, &r, 1e-9).unwrap().passed);

        let (r, ivs) = xy(0.1, 0.0, &c);
        assert!(matches!(
            decompose_condition3(&ivs, &r),
            Err(Error::Degenerate(_))
        ));
        assert!(check_condition3(&ivs, &r, 1e-9)
            .unwrap()
            .vacuous
            .contains(&Condition::Cond3));
    }

    #[test]
    fn equivalence_identity_witness() {
        let m = random_setup(31);
        let (r, ivs) = xy(0.12, 0.27, &m);
        let eq = old_new_equivalence(&ivs, &m, &r).unwrap();
        assert!(eq.r.max_abs_diff(&CMat::identity(4)) < 1e-10);
        assert!(eq.residual < 1e-10);
    }

    #[test]
    fn equivalence_recovers_planted_plus_rotation() {
        let m = computational_setup();
        let q = haar_random_unitary(2, 77);
        // rotate the +outcome directions (E_0, E_2) by Q
        let dirs = m.directions();
        let rotated = [
            CVec::combine(&[q.get(0, 0), q.get(1, 0)], &[&dirs[0], &dirs[2]]),
            dirs[1].clone(),
            CVec::combine(&[q.get(0, 1), q.get(1, 1)], &[&dirs[0], &dirs[2]]),
            dirs[3].clone(),
        ];
        let planted = MeasurementSetup::new(rotated, Basis::Computational).unwrap();
        let (r, ivs) = xy(0.2, 0.1, &planted);
        let eq = old_new_equivalence(&ivs, &m, &r).unwrap();
        assert!(eq.r_plus.max_abs_diff(&q) < 1e-9);
        assert!(eq.r_minus.max_abs_diff(&CMat::identity(2)) < 1e-9);
        assert!(eq.r.is_unitary(1e-9).unwrap());
    }

    #[test]
    fn battery_conjugate_basis() {
        let r = ErrorRates::new(0.3, 0.05).unwrap();
        let f = conjugate_setup(&random_setup(4));
        let p = optimal_pijs(Basis::Hadamard, &r, &f).unwrap();
        let rep = nsc_battery(&p, &f, 1e-9).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.per_condition.len(), 6);
    }

    #[test]
    fn report_json_shape() {
        let c = computational_setup();
        let (r, ivs) = xy(0.1, 0.1, &c);
        let rep = nsc_battery_ivs(&ivs, &c, &r, 1e-9).unwrap();
        let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
        for key in ["fuchs_u", "fuchs_v", "cond1", "cond2", "cond3", "corollary"] {
            assert!(v["per_condition"][key].is_number(), "{key}");
        }
        assert_eq!(v["passed"], serde_json::Value::Bool(true));
    }
}
