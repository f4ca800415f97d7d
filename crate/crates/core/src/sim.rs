//! Monte Carlo and exact-distribution simulation of the attacked protocol.
//!
//! Each round draws from its own ChaCha8 stream (`seed`, stream = round
//! index), so results do not depend on thread count or scheduling. Rounds
//! are tallied into integer histograms and summed, which keeps the parallel
//! reduction bit-identical to a sequential run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{haar_random_unitary_with, hermitian_eigen, CMat, CVec};
use crate::states::{
    conjugate_setup, encode, project_bob, Basis, ErrorRates, MeasurementSetup, Pijs,
};
use crate::synth::{synth_delta_hadamard, AttackUnitary};
use crate::{check_range, Error, Result};

const CHUNK: u64 = 1 << 14;
const DENSITY_TOL: f64 = 1e-10;

fn round_rng(base: &ChaCha8Rng, round: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(round);
    rng
}

/// Runs `n` rounds, each adding one count to cell `f(rng)` of a `cells`-sized histogram.
fn tally<F>(n: u64, seed: u64, cells: usize, f: F) -> Vec<u64>
where
    F: Fn(&mut ChaCha8Rng) -> usize + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let base = ChaCha8Rng::seed_from_u64(seed);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut h = vec![0u64; cells];
            for round in c * CHUNK..((c + 1) * CHUNK).min(n) {
                h[f(&mut round_rng(&base, round))] += 1;
            }
            h
        })
        .reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Exact `P(b, λ | a)` for one encoding basis, indexed `[a][b][λ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    pub basis: Basis,
    pub p: [[[f64; 4]; 2]; 2],
    pub guesses: [u8; 4],
}

impl JointTable {
    pub fn row_sum(&self, a: usize) -> f64 {
        self.p[a].iter().flatten().sum()
    }

    /// `P(b ≠ a | a)`.
    pub fn bob_error(&self, a: usize) -> f64 {
        self.p[a][1 - a].iter().sum()
    }

    /// Success of the sign strategy at equal priors.
    pub fn eve_success(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for l in 0..4 {
                    if self.guesses[l] as usize == a {
                        s += 0.5 * self.p[a][b][l];
                    }
                }
            }
        }
        s
    }
}

/// Born-rule table from projecting `U(|a⟩^β ⊗ ψ_0)` onto `|b⟩^β ⊗ |M_λ⟩`.
pub fn exact_joint_distribution(
    attack: &AttackUnitary,
    basis: Basis,
    eve_setup: &MeasurementSetup,
) -> JointTable {
    let mut p = [[[0.0; 4]; 2]; 2];
    for (a, row) in p.iter_mut().enumerate() {
        let s = attack.image(a as u8, basis);
        for (b, cell) in row.iter_mut().enumerate() {
            let eve = project_bob(&s, &encode(b as u8, basis));
            for (l, v) in cell.iter_mut().enumerate() {
                *v = eve_setup
                    .direction(l)
                    .inner(&eve)
                    .expect("dim 4")
                    .norm_sqr();
            }
        }
    }
    JointTable {
        basis,
        p,
        guesses: std::array::from_fn(|l| eve_setup.guess(l)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rates: ErrorRates,
    pub n_rounds: u64,
    pub seed: u64,
    pub attack: AttackUnitary,
    /// Eve's setups for xy and uv reconciliation, in that order.
    pub eve_setups: [MeasurementSetup; 2],
}

impl SimConfig {
    /// Validated config; Eve uses the attack's own setup and its conjugate.
    pub fn new(attack: AttackUnitary, n_rounds: u64, seed: u64) -> Result<Self> {
        attack.validate()?;
        if n_rounds == 0 {
            return Err(Error::OutOfRange {
                name: "n_rounds",
                value: 0.0,
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        let eve_setups = [
            attack.measurement.clone(),
            conjugate_setup(&attack.measurement),
        ];
        Ok(SimConfig {
            rates: attack.rates,
            n_rounds,
            seed,
            attack,
            eve_setups,
        })
    }

    /// Optimal attack from the block construction.
    pub fn optimal(rates: ErrorRates, n_rounds: u64, seed: u64) -> Result<Self> {
        Self::new(synth_delta_hadamard(&rates), n_rounds, seed)
    }

    pub fn tables(&self) -> [JointTable; 2] {
        [Basis::Computational, Basis::Hadamard]
            .map(|b| exact_joint_distribution(&self.attack, b, &self.eve_setups[b.index()]))
    }
}

/// A value per encoding basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerBasis {
    pub xy: f64,
    pub uv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub n_rounds: u64,
    pub sifted: u64,
    pub sift_rate: f64,
    pub qber: PerBasis,
    pub eve_accuracy: f64,
    pub eve_accuracy_per_basis: PerBasis,
    pub mi_ab_hat: f64,
    /// Plug-in `I(A; E)` with Eve's observation the pair (basis, λ).
    pub mi_ae_hat: f64,
    /// Plug-in `I(B; E)`, same observation.
    pub mi_eb_hat: f64,
    /// Bob's `⟨σ_z⟩` on sifted xy rounds where Alice sent 0.
    pub bob_sigma_z: f64,
    /// Sifted histogram indexed `[basis][a][b][λ]`.
    pub counts: [[[[u64; 4]; 2]; 2]; 2],
}

fn cell(basis: usize, a: usize, b: usize, l: usize) -> usize {
    ((basis * 2 + a) * 2 + b) * 4 + l
}

/// Index of the discarded-round bucket in the raw histogram.
const DISCARD: usize = 32;

fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u beyond rounding slack of the total: last positive cell
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Prepare-and-measure simulation with sifting and Eve's sign strategy.
pub fn run_pm(config: &SimConfig) -> SimStats {
    let tables = config.tables();
    let flat: Vec<[f64; 8]> = (0..4)
        .map(|k| {
            let (basis, a) = (k / 2, k % 2);
            let t = &tables[basis].p[a];
            std::array::from_fn(|i| t[i / 4][i % 4])
        })
        .collect();
    let raw = tally(config.n_rounds, config.seed, DISCARD + 1, |rng| {
        let a = rng.random_range(0..2usize);
        let basis = rng.random_range(0..2usize);
        let bob_basis = rng.random_range(0..2usize);
        if basis != bob_basis {
            return DISCARD;
        }
        let i = sample_index(&flat[basis * 2 + a], rng.random::<f64>());
        cell(basis, a, i / 4, i % 4)
    });
    stats_from_counts(config, &raw)
}

/// Plug-in mutual information of a 2×K contingency table.
fn mutual_information<const K: usize>(joint: &[[u64; K]; 2]) -> f64 {
    let n: u64 = joint.iter().flatten().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let row: [f64; 2] = std::array::from_fn(|i| joint[i].iter().sum::<u64>() as f64 / n);
    let col: [f64; K] = std::array::from_fn(|j| (joint[0][j] + joint[1][j]) as f64 / n);
    let mut mi = 0.0;
    for i in 0..2 {
        for j in 0..K {
            let p = joint[i][j] as f64 / n;
            if p > 0.0 {
                mi += p * (p / (row[i] * col[j])).log2();
            }
        }
    }
    mi.max(0.0)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn stats_from_counts(config: &SimConfig, raw: &[u64]) -> SimStats {
    let mut counts = [[[[0u64; 4]; 2]; 2]; 2];
    let mut ab = [[0u64; 2]; 2];
    // Eve observes (reconciled basis, λ)
    let mut ae = [[0u64; 8]; 2];
    let mut be = [[0u64; 8]; 2];
    let mut per = [(0u64, 0u64, 0u64); 2]; // (total, bob errors, eve hits)
    for basis in 0..2 {
        let guesses: [usize; 4] =
            std::array::from_fn(|l| config.eve_setups[basis].guess(l) as usize);
        for a in 0..2 {
            for b in 0..2 {
                for l in 0..4 {
                    let k = raw[cell(basis, a, b, l)];
                    counts[basis][a][b][l] = k;
                    let g = guesses[l];
                    ab[a][b] += k;
                    ae[a][basis * 4 + l] += k;
                    be[b][basis * 4 + l] += k;
                    per[basis].0 += k;
                    if a != b {
                        per[basis].1 += k;
                    }
                    if g == a {
                        per[basis].2 += k;
                    }
                }
            }
        }
    }
    let sifted = per[0].0 + per[1].0;
    let zero_xy = &counts[0][0];
    let plus: u64 = zero_xy[0].iter().sum();
    let minus: u64 = zero_xy[1].iter().sum();
    SimStats {
        n_rounds: config.n_rounds,
        sifted,
        sift_rate: ratio(sifted, config.n_rounds),
        qber: PerBasis {
            xy: ratio(per[0].1, per[0].0),
            uv: ratio(per[1].1, per[1].0),
        },
        eve_accuracy: ratio(per[0].2 + per[1].2, sifted),
        eve_accuracy_per_basis: PerBasis {
            xy: ratio(per[0].2, per[0].0),
            uv: ratio(per[1].2, per[1].0),
        },
        mi_ab_hat: mutual_information(&ab),
        mi_ae_hat: mutual_information(&ae),
        mi_eb_hat: mutual_information(&be),
        bob_sigma_z: if plus + minus == 0 {
            0.0
        } else {
            (plus as f64 - minus as f64) / (plus + minus) as f64
        },
        counts,
    }
}

/// One row of the exact-versus-empirical comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub basis: Basis,
    pub a: u8,
    pub b: u8,
    pub lambda: u8,
    pub exact: f64,
    pub empirical: f64,
    /// Binomial standard error of `empirical` around `exact`.
    pub sigma: f64,
}

impl CellRow {
    pub const CSV_HEADER: &'static str = "basis,a,b,lambda,exact,empirical,sigma";
}

/// Conditional `P(b, λ | a, β)` per cell, exact and observed.
pub fn compare_cells(config: &SimConfig, stats: &SimStats) -> Vec<CellRow> {
    let tables = config.tables();
    let mut rows = Vec::with_capacity(32);
    for (bi, basis) in [Basis::Computational, Basis::Hadamard]
        .into_iter()
        .enumerate()
    {
        for a in 0..2 {
            let n: u64 = stats.counts[bi][a].iter().flatten().sum();
            for b in 0..2 {
                for l in 0..4 {
                    let exact = tables[bi].p[a][b][l];
                    let sigma = if n == 0 {
                        0.0
                    } else {
                        (exact * (1.0 - exact) / n as f64).sqrt()
                    };
                    rows.push(CellRow {
                        basis,
                        a: a as u8,
                        b: b as u8,
                        lambda: l as u8,
                        exact,
                        empirical: ratio(stats.counts[bi][a][b][l], n),
                        sigma,
                    });
                }
            }
        }
    }
    rows
}

/// CHSH estimate from the entanglement-based test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub d: f64,
    pub n_rounds: u64,
    pub seed: u64,
    pub s: f64,
    /// Standard error of `s`.
    pub sigma: f64,
    /// Correlators `E(A_i, B_j)` indexed `[i][j]`.
    pub correlators: [[f64; 2]; 2],
}

/// Alice measures σ_z or σ_x, Bob `(σ_z ± σ_x)/√2` on `|φ⁺⟩`; Bob's Bloch
/// components are contracted by `1 − 2d`, so `P(s_B | s_A) = (1 + (1−2d) s_A s_B a·b)/2`.
/// `S = E00 + E01 + E10 − E11`.
pub fn run_eb_chsh(d: f64, n_rounds: u64, seed: u64) -> Result<ChshEstimate> {
    check_range("d", d, 0.0, 0.5)?;
    let eta = 1.0 - 2.0 * d;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // a·b in the x–z plane; a_0 = z, a_1 = x, b_0 = (z+x)/√2, b_1 = (z−x)/√2
    let dot = [[r, r], [r, -r]];
    let raw = tally(n_rounds, seed, 8, |rng| {
        let i = rng.random_range(0..2usize);
        let j = rng.random_range(0..2usize);
        let alice_plus = rng.random_bool(0.5);
        let s_a = if alice_plus { 1.0 } else { -1.0 };
        let p_plus = 0.5 * (1.0 + eta * s_a * dot[i][j]);
        let bob_plus = rng.random::<f64>() < p_plus;
        let agree = alice_plus == bob_plus;
        (i * 2 + j) * 2 + usize::from(agree)
    });
    let mut correlators = [[0.0; 2]; 2];
    let mut var = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let dis = raw[(i * 2 + j) * 2];
            let agr = raw[(i * 2 + j) * 2 + 1];
            let n = agr + dis;
            let e = if n == 0 {
                0.0
            } else {
                (agr as f64 - dis as f64) / n as f64
            };
            correlators[i][j] = e;
            if n > 0 {
                var += (1.0 - e * e) / n as f64;
            }
        }
    }
    let s = correlators[0][0] + correlators[0][1] + correlators[1][0] - correlators[1][1];
    Ok(ChshEstimate {
        d,
        n_rounds,
        seed,
        s,
        sigma: var.sqrt(),
        correlators,
    })
}

fn validate_density(rho: &CMat) -> Result<()> {
    if rho.rows() != 4 || !rho.is_square() {
        return Err(Error::InvalidDensity(format!(
            "{}x{}, expected 4x4",
            rho.rows(),
            rho.cols()
        )));
    }
    let h = rho.hermitian_defect();
    if h > DENSITY_TOL {
        return Err(Error::InvalidDensity(format!(
            "not Hermitian (defect {h:e})"
        )));
    }
    let t = rho.trace();
    if (t.re - 1.0).abs() > DENSITY_TOL || t.im.abs() > DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("trace {t}")));
    }
    let (vals, _) = hermitian_eigen(rho)?;
    if vals[0] < -DENSITY_TOL {
        return Err(Error::InvalidDensity(format!(
            "negative eigenvalue {:e}",
            vals[0]
        )));
    }
    Ok(())
}

fn born(rho: &CMat, v: &CVec) -> f64 {
    v.inner(&(rho * v)).expect("dim 4").re
}

/// Information gain `½ Σ_λ |p_0(λ) − p_1(λ)|` of a projective measurement.
pub fn information_gain(rho_0: &CMat, rho_1: &CMat, directions: &[CVec]) -> f64 {
    0.5 * directions
        .iter()
        .map(|v| (born(rho_0, v) - born(rho_1, v)).abs())
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_ig: f64,
    pub eigen_ig: f64,
    pub n_povms: u64,
}

/// Best IG over `n_povms` Haar-random orthonormal measurements, next to the
/// IG of the eigenbasis of `ρ_0 − ρ_1`.
pub fn brute_force_ig(rho_0: &CMat, rho_1: &CMat, n_povms: u64, seed: u64) -> Result<OracleResult> {
    validate_density(rho_0)?;
    validate_density(rho_1)?;
    let diff = rho_0.sub(rho_1)?;
    let (_, eig) = hermitian_eigen(&diff)?;
    let eigen_ig = information_gain(rho_0, rho_1, &eig);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_ig = 0.0f64;
    for _ in 0..n_povms {
        let u = haar_random_unitary_with(4, &mut rng);
        best_ig = best_ig.max(information_gain(rho_0, rho_1, &u.columns()));
    }
    Ok(OracleResult {
        best_ig,
        eigen_ig,
        n_povms,
    })
}

/// Eve's state given Alice's bit: Bob's qubit traced out of `|S_bit⟩⟨S_bit|`.
pub fn eve_reduced_density(pijs: &Pijs, bit: u8) -> CMat {
    let s = pijs.state(bit);
    let mut rho = CMat::zeros(4, 4);
    for k in 0..2 {
        let e = project_bob(s, &CVec::basis(2, k));
        rho = rho.add(&CMat::outer(&e, &e)).expect("4x4");
    }
    rho
}

/// Eve's two conditional densities for `basis` encodings under `attack`.
pub fn eve_densities(attack: &AttackUnitary, basis: Basis) -> [CMat; 2] {
    let p = attack.pijs(basis);
    [eve_reduced_density(&p, 0), eve_reduced_density(&p, 1)]
}

/// Oracle run on the optimal attack at symmetric rate `d`, xy encoding.
pub fn oracle_at(d: f64, n_povms: u64, seed: u64) -> Result<OracleResult> {
    let attack = synth_delta_hadamard(&ErrorRates::symmetric(d)?);
    let [r0, r1] = eve_densities(&attack, Basis::Computational);
    brute_force_ig(&r0, &r1, n_povms, seed)
}
