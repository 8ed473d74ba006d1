//! Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed.
//!
//! Run with `cargo test -p boundstab --test acceptance`. The process exits
//! non-zero when any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use boundstab::sweep::{run_sweep, SweepPlan};
use boundstab_core::diagnostics::{bspline_field, check_linf_interp, check_poincare, DiscreteField};
use boundstab_core::evans::{evans, evans_at_zero_quadrature, stability_index, EvansOptions};
use boundstab_core::evolve::{evolve, fit_decay, perturb, EvolveOptions, NormSample};
use boundstab_core::spectrum::{build_contour, spectral_abscissa, winding_number, AbscissaOptions, SpectrumOptions};
use boundstab_core::steady::solve_steady;
use boundstab_core::{Complex64, FlowParams, PressureLaw, Sequential, SteadyOptions, SteadyProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LAW: PressureLaw = PressureLaw::DIATOMIC;

/// Increasing profile and decreasing profile used throughout.
const RISING: (f64, f64, f64, f64) = (1.0, 3.0, 2.0, 3.0);
const FALLING: (f64, f64, f64, f64) = (1.0, 2.0, 1.5, 1.0);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn params(t: (f64, f64, f64, f64)) -> FlowParams {
    FlowParams::new(t.0, t.1, t.2, t.3).unwrap()
}

fn solve(t: (f64, f64, f64, f64)) -> Result<SteadyProfile, String> {
    solve_steady(&params(t), &LAW, &SteadyOptions::default()).map_err(|e| format!("{t:?}: {e}"))
}

/// `nu` log-uniform on [0.1, 10]; `rho0`, `u0`, `u1` log-uniform on [1, 10].
fn random_tuples(seed: u64, n: usize) -> Vec<(f64, f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let nu = 10f64.powf(rng.gen_range(-1.0..=1.0));
            let mut unit = || 10f64.powf(rng.gen_range(0.0..=1.0));
            (nu, unit(), unit(), unit())
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for t in [RISING, FALLING] {
        let start = Instant::now();
        let prof = match solve(t) {
            Ok(p) => p,
            Err(e) => return outcome(false, e),
        };
        let elapsed = start.elapsed();
        let sign = (t.3 - t.2).signum();
        let monotone = prof.u_x().iter().all(|&ux| sign * ux > 0.0) && prof.rho_x().iter().all(|&rx| -sign * rx > 0.0);
        let ok = prof.outflow_defect() <= 1e-10
            && prof.flux_defect() <= 1e-8
            && monotone
            && elapsed < Duration::from_secs(1);
        pass &= ok;
        notes.push(format!(
            "u1={}: outflow {:.1e} flux {:.1e} monotone {monotone} {:.3}s",
            t.3,
            prof.outflow_defect(),
            prof.flux_defect(),
            elapsed.as_secs_f64()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_2() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for base in [RISING, FALLING] {
        let mut amps = Vec::new();
        for k in 1..=10 {
            let du = 2f64.powi(-k);
            match solve((base.0, base.1, base.2, base.2 + du)) {
                Ok(p) => amps.push((du, p.slope_amplitude())),
                Err(e) => return outcome(false, e),
            }
        }
        let c = amps[0].1 / amps[0].0;
        let decreasing = amps.windows(2).all(|w| w[1].1 < w[0].1);
        let bounded = amps.iter().all(|&(du, a)| a < 4.0 * du * c);
        let last = amps.last().unwrap();
        pass &= decreasing && bounded;
        notes.push(format!(
            "rho0={} u0={}: decreasing {decreasing}, bounded {bounded}, C={c:.3}, amplitude at 2^-10 {:.3e}",
            base.1, base.2, last.1
        ));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_3() -> Outcome {
    let mut tuples = vec![RISING, FALLING];
    tuples.extend(random_tuples(3, 20));
    let mut worst: f64 = 0.0;
    for t in &tuples {
        let prof = match solve(*t) {
            Ok(p) => p,
            Err(e) => return outcome(false, e),
        };
        let e = match evans(Complex64::new(0.0, 0.0), &prof, &EvansOptions::default()) {
            Ok(e) => e,
            Err(e) => return outcome(false, format!("{t:?}: {e}")),
        };
        let q = evans_at_zero_quadrature(&prof);
        let rel = (e.d_scaled * (e.log_scale - q.log_value).exp() - 1.0).norm();
        worst = worst.max(rel);
    }
    outcome(worst <= 1e-8, format!("{} profiles, worst relative mismatch {worst:.2e} (limit 1e-8)", tuples.len()))
}

fn criterion_4() -> Outcome {
    let opts = SpectrumOptions::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for nu in [1.0, 0.1] {
        let start = Instant::now();
        let prof = match solve((nu, 2.0, 1.5, 1.0)) {
            Ok(p) => p,
            Err(e) => return outcome(false, e),
        };
        let w10 =
            winding_number(&prof, &build_contour(10.0, 0.0, opts.initial_nodes).unwrap(), &opts, &Sequential).winding;
        let elapsed = start.elapsed();
        let w20 =
            winding_number(&prof, &build_contour(20.0, 0.0, opts.initial_nodes).unwrap(), &opts, &Sequential).winding;
        let ok = w10 == Some(0) && w20 == Some(0) && elapsed < Duration::from_secs(30);
        pass &= ok;
        notes.push(format!("nu={nu}: M=10 {w10:?}, M=20 {w20:?}, {:.2}s", elapsed.as_secs_f64()));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_5() -> Outcome {
    let mut tuples = vec![(1.0, 2.0, 1.5, 1.5), RISING, FALLING];
    tuples.extend(random_tuples(5, 50));
    let mut bad = Vec::new();
    let mut inconsistent = 0;
    for t in &tuples {
        let ix = solve(*t).and_then(|p| stability_index(&p, &EvansOptions::default()).map_err(|e| e.to_string()));
        match ix {
            Ok(ix) if ix.index == 1 => inconsistent += usize::from(!ix.consistent),
            Ok(ix) => bad.push(format!("{t:?}: index {}", ix.index)),
            Err(e) => bad.push(e),
        }
    }
    let detail = format!(
        "{} profiles, {} not +1, {inconsistent} with differing signs at large lambda{}",
        tuples.len(),
        bad.len(),
        bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
    );
    outcome(bad.is_empty(), detail)
}

/// Criteria 6 and 7 share one sweep.
fn criteria_6_7() -> (Outcome, Outcome) {
    let plan = SweepPlan {
        nu: (0.1, 10.0),
        rho0: (1.0, 10.0),
        u0: (1.0, 10.0),
        u1: (1.0, 10.0),
        steps: 4,
        law: LAW,
        steady: SteadyOptions::default(),
        spectrum: SpectrumOptions::default(),
        oracle_cells: vec![128, 256],
    };
    let start = Instant::now();
    let rows = match run_sweep(&plan, 4, &|_| {}) {
        Ok(rows) => rows,
        Err(e) => return (outcome(false, e.to_string()), outcome(false, "sweep failed")),
    };
    let elapsed = start.elapsed();
    let unstable: Vec<_> = rows.iter().filter(|r| !r.is_stable()).collect();
    let c6 = outcome(
        unstable.is_empty() && rows.len() == 256 && elapsed < Duration::from_secs(30 * 60),
        format!(
            "{}/{} SpectrallyStable in {:.1}s with 4 workers{}",
            rows.len() - unstable.len(),
            rows.len(),
            elapsed.as_secs_f64(),
            unstable
                .first()
                .map(|r| format!(" (first failure: {:?} {} {})", r.tuple, r.verdict, r.detail))
                .unwrap_or_default()
        ),
    );
    let disagree: Vec<_> = rows.iter().filter(|r| !r.oracle_agrees()).collect();
    let c7 = outcome(
        disagree.is_empty(),
        format!(
            "N=128 and N=256 agree with the Evans winding on {}/{} tuples{}",
            rows.len() - disagree.len(),
            rows.len(),
            disagree
                .first()
                .map(|r| format!(" (first: {:?} {:?} vs {:?})", r.tuple, r.winding, r.oracle))
                .unwrap_or_default()
        ),
    );
    (c6, c7)
}

fn run_evolve(prof: &SteadyProfile, eps: f64) -> Result<Vec<NormSample>, String> {
    let initial = perturb(prof, eps, 1, 1024).map_err(|e| e.to_string())?;
    evolve(&initial, prof, &EvolveOptions { t_final: 20.0, ..EvolveOptions::default() }).map_err(|e| e.to_string())
}

fn criterion_8() -> Outcome {
    let prof = match solve(FALLING) {
        Ok(p) => p,
        Err(e) => return outcome(false, e),
    };
    let (full, half) = match (run_evolve(&prof, 0.01), run_evolve(&prof, 0.005)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e),
    };
    // Transient: the first unit of time.
    let settled: Vec<f64> = full.iter().filter(|s| s.t >= 1.0).map(|s| s.l2).collect();
    let monotone = settled.windows(2).all(|w| w[1] <= w[0]);
    let decayed = full.last().unwrap().l2 < 1e-3 * full[0].l2;
    let history: Vec<(f64, f64)> = full.iter().map(|s| (s.t, s.l2)).collect();
    let fit = match fit_decay(&history, 0.5, 1e-12) {
        Ok(f) => f,
        Err(e) => return outcome(false, e.to_string()),
    };
    let abscissa = match spectral_abscissa(&prof, &AbscissaOptions::default(), &Sequential) {
        Ok(a) => a.value(),
        Err(e) => return outcome(false, e.to_string()),
    };
    let agreement = (fit.theta - abscissa.abs()).abs() / abscissa.abs();
    let linear = full
        .iter()
        .zip(&half)
        .filter(|(a, _)| a.l2 > 0.0)
        .map(|(a, b)| (a.l2 / b.l2 / 2.0 - 1.0).abs())
        .fold(0.0, f64::max);
    let pass = monotone && decayed && fit.theta > 0.0 && fit.residual < 0.05 && agreement <= 0.2 && linear <= 0.05;
    outcome(
        pass,
        format!(
            "monotone after t=1 {monotone}, theta {:.4} (residual {:.1e}) vs |abscissa| {:.4}: {:.1}% apart; eps/2 ratio off by {:.2}%",
            fit.theta,
            fit.residual,
            abscissa.abs(),
            100.0 * agreement,
            100.0 * linear
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = 0;
    let mut worst_poincare: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(4..12);
        let control: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let field = bspline_field(&control, 1024);
        let interp = check_linf_interp(&field).unwrap();
        let v0 = field.values[0];
        let pinned = DiscreteField::new(field.values.iter().map(|v| v - v0).collect());
        let p = check_poincare(&pinned).unwrap();
        worst_poincare = worst_poincare.max(p.ratio);
        if !(interp.sup_bound_holds && interp.derivative_bound_holds && p.holds) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "100 fields at h=1/1024, {failures} violations, largest |f|/|f_x| = {worst_poincare:.4} (bound 2(1+10h))"
        ),
    )
}

/// Runs the CLI pipeline into `dir` and returns stdout of every command.
fn pipeline(dir: &Path) -> Vec<u8> {
    let d = dir.to_str().unwrap();
    let profile = format!("{d}/profile.csv");
    let commands: Vec<Vec<String>> = [
        "steady --nu 1 --gamma 1.4 --rho0 2 --u0 1.5 --u1 1 --out-dir DIR",
        "contour --profile PROFILE --M 10 --oracle 128 --verify-radius --out-dir DIR",
        "spectrum --profile PROFILE --box 0:10:-10:10 --out-dir DIR --out box.json",
        "spectrum --profile PROFILE --abscissa --out-dir DIR",
        "evans --profile PROFILE --index",
        "evans --profile PROFILE --lambda-re 0.5 --lambda-im -2",
        "check --profile PROFILE --out-dir DIR",
        "evolve --profile PROFILE --eps 0.01 --T 1 --fit --out-dir DIR",
        "sweep --steps 2 --nu-range 0.5:2 --rho0-range 1:3 --u0-range 1:2 --u1-range 1:4 --oracle 128 --jobs 2 --out-dir DIR",
    ]
    .iter()
    .map(|c| c.replace("DIR", d).replace("PROFILE", &profile).split(' ').map(String::from).collect())
    .collect();
    let mut log = Vec::new();
    for args in commands {
        let mut err = Vec::new();
        let code =
            boundstab::run_with(std::iter::once("boundstab".to_string()).chain(args.clone()), &mut log, &mut err);
        log.extend_from_slice(format!("exit {code}\n").as_bytes());
        assert_eq!(code, 0, "{args:?}: {}", String::from_utf8_lossy(&err));
    }
    log
}

fn criterion_10() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (log_a, log_b) = (pipeline(a.path()), pipeline(b.path()));
    let files = |dir: &Path| {
        let mut names: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        names
    };
    let names = files(a.path());
    let same_names = names == files(b.path());
    let differing: Vec<_> =
        names.iter().filter(|n| std::fs::read(a.path().join(n)).ok() != std::fs::read(b.path().join(n)).ok()).collect();
    outcome(
        same_names && differing.is_empty() && log_a == log_b,
        format!(
            "{} artifacts ({}), {} differ, stdout identical {}",
            names.len(),
            names.iter().map(|n| n.to_string_lossy().into_owned()).collect::<Vec<_>>().join(" "),
            differing.len(),
            log_a == log_b
        ),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |n: u32| filter.is_empty() || filter.iter().any(|f| f == &n.to_string());
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut run = |n: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        if wanted(n) {
            let o = f();
            println!("{} {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            results.push((n, name, o));
        }
    };
    run(1, "steady-state correctness", &criterion_1);
    run(2, "amplitude continuity", &criterion_2);
    run(3, "Evans value at zero vs quadrature", &criterion_3);
    run(4, "winding on the standard contour", &criterion_4);
    run(5, "stability index", &criterion_5);
    if wanted(6) || wanted(7) {
        let (c6, c7) = criteria_6_7();
        run(6, "parameter sweep verdicts", &|| Outcome { pass: c6.pass, detail: c6.detail.clone() });
        run(7, "matrix oracle agreement", &|| Outcome { pass: c7.pass, detail: c7.detail.clone() });
    }
    run(8, "nonlinear decay", &criterion_8);
    run(9, "interpolation inequalities", &criterion_9);
    run(10, "determinism", &criterion_10);
    let failed = results.iter().filter(|(_, _, o)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
