//! `eavesdrop`: sweeps, optimality checks, unitary synthesis and simulation.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use eavesdrop_core::fmt_sig;
use eavesdrop_core::info::{self, RateCurvePoint};
use eavesdrop_core::optimality::{nsc_battery_ivs, perturb_breaking, NscReport};
use eavesdrop_core::sim::{compare_cells, oracle_at, run_eb_chsh, run_pm, CellRow, SimConfig};
use eavesdrop_core::states::{optimal_ivs, Basis};
use eavesdrop_core::synth::{
    change_measurement, retarget_initial_state, synth_chain, synth_delta_hadamard, AttackUnitary,
};

use config::{Common, Format, Settings, Target};

#[derive(Parser)]
#[command(
    name = "eavesdrop",
    version,
    about = "Optimal unitary eavesdropping on BB84"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Information curves over a grid of error rates
    Sweep,
    /// Optimality battery for constructed (or imported) attacks
    Verify,
    /// Synthesize an attack unitary
    Synth,
    /// Monte Carlo run of the attacked protocol
    Simulate,
    /// Entanglement-based CHSH estimate
    Chsh,
    /// Random-measurement search against the eigenbasis measurement
    Oracle,
}

enum Status {
    Pass,
    Fail,
}

fn emit(s: &Settings, body: &str) -> Result<()> {
    match &s.raw.out {
        Some(path) => {
            std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn csv_table(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn sweep(s: &Settings) -> Result<Status> {
    let r = &s.raw;
    let pts = info::sweep(
        r.start.unwrap_or(0.0),
        r.stop.unwrap_or(0.25),
        r.step.unwrap_or(0.005),
    )?;
    let body = match s.format(Format::Csv) {
        Format::Json => json(&pts)?,
        Format::Csv => csv_table(
            RateCurvePoint::CSV_HEADER,
            pts.iter()
                .map(|p| p.fields().iter().map(|&x| fmt_sig(x)).collect()),
        ),
    };
    emit(s, &body)?;
    Ok(Status::Pass)
}

fn report_csv(reports: &[(&str, &NscReport)]) -> String {
    let mut rows = Vec::new();
    for (basis, rep) in reports {
        for (cond, res) in &rep.per_condition {
            let name = serde_json::to_value(cond).expect("unit variant");
            rows.push(vec![
                basis.to_string(),
                name.as_str().unwrap_or_default().to_string(),
                fmt_sig(*res),
                (*res <= rep.tolerance).to_string(),
                rep.vacuous.contains(cond).to_string(),
            ]);
        }
    }
    csv_table("basis,condition,residual,passed,vacuous", rows)
}

#[derive(Serialize)]
struct UnitaryCheck {
    passed: bool,
    unitarity_defect: f64,
    anchor_defect: f64,
    xy: NscReport,
    uv: NscReport,
}

fn verify(s: &Settings) -> Result<Status> {
    let tol = s.tol();
    if let Some(path) = &s.raw.unitary {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let a: AttackUnitary =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let unitarity_defect = a.u.unitarity_defect()?;
        let anchor_defect = a.anchor_defect()?;
        let xy = a.certify(Basis::Computational, tol)?;
        let uv = a.certify(Basis::Hadamard, tol)?;
        let passed = xy.passed && uv.passed && unitarity_defect <= tol && anchor_defect <= tol;
        let check = UnitaryCheck {
            passed,
            unitarity_defect,
            anchor_defect,
            xy,
            uv,
        };
        let body = match s.format(Format::Json) {
            Format::Json => json(&check)?,
            Format::Csv => report_csv(&[("xy", &check.xy), ("uv", &check.uv)]),
        };
        emit(s, &body)?;
        return Ok(if passed { Status::Pass } else { Status::Fail });
    }

    let m = s.measurement()?;
    let mut ivs = optimal_ivs(Basis::Computational, &s.rates, &m)?;
    if let Some(theta) = s.raw.perturb {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        ivs = perturb_breaking(&ivs, &s.rates, theta, 1e-6, &mut rng);
    }
    let rep = nsc_battery_ivs(&ivs, &m, &s.rates, tol)?;
    let body = match s.format(Format::Json) {
        Format::Json => json(&rep)?,
        Format::Csv => report_csv(&[("xy", &rep)]),
    };
    emit(s, &body)?;
    Ok(if rep.passed {
        Status::Pass
    } else {
        Status::Fail
    })
}

fn build_attack(s: &Settings) -> Result<AttackUnitary> {
    let a = match s.initial_state()? {
        Target::Named(t) => synth_chain(&s.rates, t)?,
        Target::Custom(psi) => retarget_initial_state(&synth_delta_hadamard(&s.rates), &psi)?,
    };
    let a = change_measurement(&a, &s.measurement()?)?;
    a.validate()?;
    Ok(a)
}

fn synth(s: &Settings) -> Result<Status> {
    let a = build_attack(s)?;
    let body = match s.format(Format::Json) {
        Format::Json => json(&a)?,
        Format::Csv => a.to_csv(),
    };
    emit(s, &body)?;
    Ok(Status::Pass)
}

fn cells_csv(rows: &[CellRow]) -> String {
    csv_table(
        CellRow::CSV_HEADER,
        rows.iter().map(|r| {
            vec![
                r.basis.to_string(),
                r.a.to_string(),
                r.b.to_string(),
                r.lambda.to_string(),
                fmt_sig(r.exact),
                fmt_sig(r.empirical),
                fmt_sig(r.sigma),
            ]
        }),
    )
}

fn simulate(s: &Settings) -> Result<Status> {
    let cfg = SimConfig::new(build_attack(s)?, s.n(1_000_000), s.seed)?;
    let stats = run_pm(&cfg);
    let cells = compare_cells(&cfg, &stats);
    if let Some(path) = &s.raw.cells {
        std::fs::write(path, cells_csv(&cells))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let body = match s.format(Format::Json) {
        Format::Json => json(&stats)?,
        Format::Csv => cells_csv(&cells),
    };
    emit(s, &body)?;
    Ok(Status::Pass)
}

fn chsh(s: &Settings) -> Result<Status> {
    let d = s.d();
    let e = run_eb_chsh(d, s.n(1_000_000), s.seed)?;
    let body = match s.format(Format::Json) {
        Format::Json => json(&e)?,
        Format::Csv => {
            let mut out = String::from("d,s,sigma,closed_form\n");
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_sig(d),
                fmt_sig(e.s),
                fmt_sig(e.sigma),
                fmt_sig(info::chsh_sum(d)?)
            );
            out
        }
    };
    emit(s, &body)?;
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct OracleReport {
    d: f64,
    best_ig: f64,
    eigen_ig: f64,
    ig_star: f64,
    n_povms: u64,
    bound_holds: bool,
}

fn oracle(s: &Settings) -> Result<Status> {
    let d = s.d();
    let o = oracle_at(d, s.raw.povms.unwrap_or(10_000), s.seed)?;
    let rep = OracleReport {
        d,
        best_ig: o.best_ig,
        eigen_ig: o.eigen_ig,
        ig_star: info::ig_star(d)?,
        n_povms: o.n_povms,
        bound_holds: o.best_ig <= o.eigen_ig + 1e-9,
    };
    let body = match s.format(Format::Json) {
        Format::Json => json(&rep)?,
        Format::Csv => format!(
            "d,best_ig,eigen_ig,ig_star,n_povms\n{},{},{},{},{}\n",
            fmt_sig(d),
            fmt_sig(rep.best_ig),
            fmt_sig(rep.eigen_ig),
            fmt_sig(rep.ig_star),
            rep.n_povms
        ),
    };
    emit(s, &body)?;
    Ok(if rep.bound_holds {
        Status::Pass
    } else {
        Status::Fail
    })
}

fn run(cli: Cli) -> Result<Status> {
    let s = cli.common.resolve()?;
    match cli.command {
        Command::Sweep => sweep(&s),
        Command::Verify => verify(&s),
        Command::Synth => synth(&s),
        Command::Simulate => simulate(&s),
        Command::Chsh => chsh(&s),
        Command::Oracle => oracle(&s),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
