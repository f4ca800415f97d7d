//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Expected values are recomputed here from first principles rather than
//! read back from the library.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use eavesdrop_core::info;
use eavesdrop_core::linalg::{
    haar_random_unitary, haar_random_unitary_with, random_state, CMat, CVec,
};
use eavesdrop_core::optimality::{
    nsc_battery_ivs, old_new_equivalence, perturb_breaking, swap_matrix, Condition, NscReport,
};
use eavesdrop_core::sim::{exact_joint_distribution, oracle_at, run_eb_chsh, run_pm, SimConfig};
use eavesdrop_core::states::{
    computational_setup, fuchs_setup, optimal_ivs, optimal_pijs, Basis, ErrorRates,
    MeasurementSetup,
};
use eavesdrop_core::synth::{
    change_measurement, synth_by_basis_completion, synth_chain, synth_delta_hadamard,
    AttackUnitary, InitialState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn h2(p: f64) -> f64 {
    let t = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    t(p) + t(1.0 - p)
}

fn d_star() -> f64 {
    0.5 * (1.0 - FRAC_1_SQRT_2)
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    // signed margin H(D_E) − H(d), positive below the threshold
    let margin = |d: f64| h2(info::eve_error_rate(d).unwrap()) - h2(d);
    let (mut lo, mut hi) = (0.1, 0.2);
    assert!(margin(lo) > 0.0 && margin(hi) < 0.0);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if info::key_rate(mid).unwrap() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let err = (root - d_star()).abs();
    let el = t0.elapsed();
    Outcome {
        pass: err < 1e-9 && (root - 0.1464).abs() < 1e-4 && within(el, 1.0),
        detail: format!("root={root:.12} |root-D*|={err:.1e} t={el:.2?}"),
    }
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let pts = info::sweep(0.0, 0.25, 0.005).unwrap();
    let mut worst = 0.0f64;
    for p in &pts {
        let d = p.d;
        let s = (d * (1.0 - d)).sqrt();
        let ig = 2.0 * s;
        let mi_ab = 1.0 - h2(d);
        let mi_ae = 1.0 - h2(0.5 - s);
        let key = (mi_ab - mi_ae).max(0.0);
        for (got, want) in [
            (p.ig_star, ig),
            (p.mi_ab, mi_ab),
            (p.mi_ae, mi_ae),
            (p.key_rate, key),
        ] {
            worst = worst.max((got - want).abs());
        }
    }
    let spot = info::mi_curves(0.1).unwrap().1;
    let (ab, ae) = info::mi_curves(d_star()).unwrap();
    let el = t0.elapsed();
    let pass = pts.len() == 51
        && worst < 1e-12
        && (spot - 0.278072).abs() < 1e-6
        && (ab - ae).abs() < 1e-10
        && within(el, 1.0);
    Outcome {
        pass,
        detail: format!(
            "rows={} curve_err={worst:.1e} mi_ae(0.1)={spot:.7} |ab-ae|@D*={:.1e} t={el:.2?}",
            pts.len(),
            (ab - ae).abs()
        ),
    }
}

const FIVE: [&str; 5] = ["fuchs", "cond1", "cond2", "cond3", "corollary"];

fn five_checks(r: &NscReport) -> [bool; 5] {
    let ok = |c| r.condition_passed(c).unwrap_or(false);
    [
        ok(Condition::FuchsU) && ok(Condition::FuchsV),
        ok(Condition::Cond1),
        ok(Condition::Cond2),
        ok(Condition::Cond3),
        ok(Condition::Corollary),
    ]
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    let mut survivors = [0usize; 5];
    let mut cases = 0usize;
    for _ in 0..100 {
        let rates =
            ErrorRates::new(rng.random_range(0.01..0.49), rng.random_range(0.01..0.49)).unwrap();
        for _ in 0..20 {
            let m = MeasurementSetup::from_unitary(
                &haar_random_unitary_with(4, &mut rng),
                Basis::Computational,
            )
            .unwrap();
            let ivs = optimal_ivs(Basis::Computational, &rates, &m).unwrap();
            let rep = nsc_battery_ivs(&ivs, &m, &rates, 1e-9).unwrap();
            worst = worst.max(rep.max_residual);
            if !rep.passed || rep.per_condition.len() != 6 {
                failures += 1;
            }
            let theta = rng.random_range(0.05..std::f64::consts::PI);
            let bad = perturb_breaking(&ivs, &rates, theta, 1e-6, &mut rng);
            let rep = nsc_battery_ivs(&bad, &m, &rates, 1e-9).unwrap();
            for (k, passed) in five_checks(&rep).into_iter().enumerate() {
                if passed {
                    survivors[k] += 1;
                }
            }
            cases += 1;
        }
    }
    let el = t0.elapsed();
    let surv: Vec<String> = FIVE
        .iter()
        .zip(survivors)
        .filter(|(_, n)| *n > 0)
        .map(|(c, n)| format!("{c}:{n}"))
        .collect();
    Outcome {
        pass: failures == 0 && worst < 1e-9 && surv.is_empty() && within(el, 30.0),
        detail: format!(
            "cases={cases} optimal_failures={failures} max_residual={worst:.1e} perturbed_survivors=[{}] t={el:.2?}",
            surv.join(",")
        ),
    }
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_u = 0.0f64;
    let mut worst_anchor = 0.0f64;
    let mut nsc_fail = Vec::new();
    for rates in [(0.1, 0.1), (0.3, 0.05), (0.02, 0.45), (0.25, 0.25)] {
        let r = ErrorRates::new(rates.0, rates.1).unwrap();
        let c = computational_setup();
        let p = optimal_pijs(Basis::Computational, &r, &c).unwrap();
        let mut methods: Vec<(&str, AttackUnitary)> = vec![
            ("delta_hadamard", synth_delta_hadamard(&r)),
            (
                "completion",
                synth_by_basis_completion(&p, &random_state(4, &mut rng)).unwrap(),
            ),
            ("chain_zero", synth_chain(&r, InitialState::Zero).unwrap()),
            ("chain_bell", synth_chain(&r, InitialState::Bell).unwrap()),
        ];
        let bell = synth_chain(&r, InitialState::Bell).unwrap();
        methods.push(("fuchs", change_measurement(&bell, &fuchs_setup()).unwrap()));
        for (name, a) in methods {
            let id = CMat::identity(8);
            worst_u = worst_u.max((&a.u.dagger() * &a.u).max_abs_diff(&id));
            worst_anchor = worst_anchor.max(a.anchor_defect().unwrap());
            for basis in [Basis::Computational, Basis::Hadamard] {
                if !a.certify(basis, 1e-9).unwrap().passed {
                    nsc_fail.push(format!("{name}/{basis}@{rates:?}"));
                }
            }
        }
    }
    let el = t0.elapsed();
    Outcome {
        pass: worst_u < 1e-10 && worst_anchor < 1e-9 && nsc_fail.is_empty() && within(el, 5.0),
        detail: format!(
            "unitarity={worst_u:.1e} anchor={worst_anchor:.1e} nsc_failures={nsc_fail:?} t={el:.2?}"
        ),
    }
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let success = |d: f64| {
        let a = synth_delta_hadamard(&ErrorRates::symmetric(d).unwrap());
        exact_joint_distribution(&a, Basis::Computational, &a.measurement).eve_success()
    };
    let at_01 = success(0.1);
    let at_star = success(d_star());
    let want_star = 0.5 + 0.5 * FRAC_1_SQRT_2;

    let n = 1_000_000;
    let cfg = SimConfig::optimal(ErrorRates::symmetric(0.1).unwrap(), n, 7).unwrap();
    let mc = run_pm(&cfg);
    let sigma = (0.8f64 * 0.2 / mc.sifted as f64).sqrt();
    let z = (mc.eve_accuracy - 0.8) / sigma;
    let el = t0.elapsed();
    Outcome {
        pass: (at_01 - 0.8).abs() < 1e-12
            && (at_star - want_star).abs() < 1e-12
            && (at_star - 0.853553).abs() < 1e-6
            && z.abs() < 5.0
            && within(el, 30.0),
        detail: format!(
            "exact(0.1)={at_01:.12} exact(D*)={at_star:.12} mc={:.6} z={z:+.2} t={el:.2?}",
            mc.eve_accuracy
        ),
    }
}

fn criterion_6() -> Outcome {
    let t0 = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for (d, want) in [
        (0.0, 2.0 * SQRT_2),
        (d_star(), 2.0),
        (0.05, 0.9 * 2.0 * SQRT_2),
    ] {
        let e = run_eb_chsh(d, 1_000_000, 11).unwrap();
        let z = (e.s - want) / e.sigma;
        pass &= z.abs() < 5.0;
        parts.push(format!("S({d:.4})={:.4} z={z:+.2}", e.s));
    }
    pass &= (0.9 * 2.0 * SQRT_2 - 2.5456).abs() < 1e-4;
    let el = t0.elapsed();
    Outcome {
        pass: pass && within(el, 30.0),
        detail: format!("{} t={el:.2?}", parts.join(" ")),
    }
}

fn criterion_7() -> Outcome {
    let t0 = Instant::now();
    let o = oracle_at(0.1, 10_000, 77).unwrap();
    let el = t0.elapsed();
    Outcome {
        pass: o.best_ig <= 0.6 + 1e-9 && (o.eigen_ig - 0.6).abs() < 1e-10 && within(el, 60.0),
        detail: format!(
            "best_ig={:.9} eigen_ig={:.12} t={el:.2?}",
            o.best_ig, o.eigen_ig
        ),
    }
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let old = haar_random_unitary(4, 1000 + seed);
        let rp = haar_random_unitary(2, 2000 + seed);
        let rm = haar_random_unitary(2, 3000 + seed);
        let sw = swap_matrix();
        let new = &(&(&old * &sw) * &CMat::block_diag(&rp, &rm)) * &sw;
        let cols: Vec<CVec> = new.columns();
        let planted = MeasurementSetup::new(
            [
                cols[0].clone(),
                cols[1].clone(),
                cols[2].clone(),
                cols[3].clone(),
            ],
            Basis::Computational,
        )
        .unwrap();
        let rates =
            ErrorRates::new(rng.random_range(0.01..0.49), rng.random_range(0.01..0.49)).unwrap();
        let ivs = optimal_ivs(Basis::Computational, &rates, &planted).unwrap();
        let old_setup = MeasurementSetup::from_unitary(&old, Basis::Computational).unwrap();
        let eq = old_new_equivalence(&ivs, &old_setup, &rates).unwrap();
        worst = worst
            .max(eq.residual)
            .max(eq.r_plus.max_abs_diff(&rp))
            .max(eq.r_minus.max_abs_diff(&rm));
    }
    let el = t0.elapsed();
    Outcome {
        pass: worst < 1e-9,
        detail: format!("seeds=50 max_defect={worst:.1e} t={el:.2?}"),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("threshold QBER", criterion_1),
        ("rate curves", criterion_2),
        ("NSC battery", criterion_3),
        ("unitary synthesis", criterion_4),
        ("Eve accuracy", criterion_5),
        ("CHSH", criterion_6),
        ("POVM oracle", criterion_7),
        ("old/new equivalence", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {:<20} {}  {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {}/8 passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
