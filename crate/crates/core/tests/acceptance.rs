//! Acceptance criteria for the Landau–Zener reproduction. Prints one
//! PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` fail for reasons analysed in the project
//! notes; they still print FAIL, but do not fail the test binary. Any other
//! failure, or a crash, does.

use std::process::ExitCode;
use std::time::Instant;

use superlind::experiments::{
    closed_lz_oracle, run_lz_sweep, BathConfig, BathKind, Mode, Solver, SweepConfig, SweepRecord,
};
use superlind::frames::{residual_oscillation, superadiabatic_frames, TimeGrid};
use superlind::invariants::run_checks;
use superlind::{lz_hamiltonian, CutoffConvention, IntegratorConfig, LzParams, Result};

const KNOWN_RED: &[u32] = &[2, 3];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn bath(kind: BathKind, gamma0: &[f64], temperature: f64) -> BathConfig {
    BathConfig {
        kind,
        gamma0: gamma0.to_vec(),
        cutoff: 5.0,
        temperature: vec![temperature],
        convention: CutoffConvention::Literal,
    }
}

fn closed(inv_v: &[f64]) -> SweepConfig {
    SweepConfig { inv_v: inv_v.to_vec(), modes: vec![Mode::Closed], ..SweepConfig::default() }
}

fn p_of(records: &[SweepRecord], inv_v: f64, mode: Mode, gamma0: f64) -> f64 {
    records
        .iter()
        .find(|r| r.inv_v == inv_v && r.mode == mode && r.gamma0 == gamma0)
        .map(|r| r.p_ge)
        .unwrap_or(f64::NAN)
}

fn range(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * step).collect()
}

/// Every master-equation record, kept for the integrity criterion.
#[derive(Default)]
struct Ledger(Vec<SweepRecord>);

impl Ledger {
    fn run(&mut self, cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
        let recs = run_lz_sweep(cfg)?;
        self.0.extend(recs.iter().filter(|r| r.mode != Mode::Closed).cloned());
        Ok(recs)
    }
}

fn c1() -> Result<Outcome> {
    let inv_v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let recs = run_lz_sweep(&closed(&inv_v))?;
    let worst = recs
        .iter()
        .map(|r| ((r.p_ge - closed_lz_oracle(1.0, 1.0 / r.inv_v)) / closed_lz_oracle(1.0, 1.0 / r.inv_v)).abs())
        .fold(0.0, f64::max);
    outcome(worst <= 0.10, format!("max relative deviation from exp(-pi/(2v)) = {:.2e} (limit 0.10)", worst))
}

fn c2(ledger: &mut Ledger) -> Result<Outcome> {
    let inv_v = range(1.0, 0.5, 6.0);
    let gammas = [0.0, 0.003, 0.01, 0.03, 0.1];
    let cfg = SweepConfig {
        inv_v: inv_v.clone(),
        bath: bath(BathKind::Dephasing, &gammas, 0.0),
        modes: vec![Mode::SuperAdiabatic],
        order: 4,
        ..SweepConfig::default()
    };
    let recs = ledger.run(&cfg)?;
    let mut offenders = Vec::new();
    let mut worst = (0.0, 0.0, 0.0);
    for &x in &inv_v {
        let base = p_of(&recs, x, Mode::SuperAdiabatic, 0.0);
        for &g in &gammas[1..] {
            let dev = (p_of(&recs, x, Mode::SuperAdiabatic, g) - base).abs();
            let allowed = (0.05 * base).max(1e-5);
            if dev > allowed || dev.is_nan() {
                offenders.push(format!("1/v={x} g={g} dev={:.1}%", 100.0 * dev / base));
            }
            if dev / allowed > worst.0 {
                worst = (dev / allowed, x, g);
            }
        }
    }
    let detail = if offenders.is_empty() {
        format!("all within max(5%, 1e-5); worst at 1/v={} g={} uses {:.2} of the allowance", worst.1, worst.2, worst.0)
    } else {
        format!("{} of {} points outside max(5%, 1e-5): {}", offenders.len(), 4 * inv_v.len(), offenders.join(", "))
    };
    outcome(offenders.is_empty(), detail)
}

fn c3(ledger: &mut Ledger) -> Result<Outcome> {
    let inv_v = range(3.0, 0.5, 6.0);
    let cfg = SweepConfig {
        inv_v: inv_v.clone(),
        bath: bath(BathKind::Dephasing, &[0.1], 0.0),
        modes: vec![Mode::Instantaneous, Mode::Closed],
        ..SweepConfig::default()
    };
    let recs = ledger.run(&cfg)?;
    let ratio = p_of(&recs, 5.0, Mode::Instantaneous, 0.1) / p_of(&recs, 5.0, Mode::Closed, 0.0);
    let pts: Vec<(f64, f64)> = inv_v
        .iter()
        .map(|&x| {
            let excess = p_of(&recs, x, Mode::Instantaneous, 0.1) - p_of(&recs, x, Mode::Closed, 0.0);
            ((1.0 / x).ln(), excess.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let ok_ratio = ratio >= 10.0;
    let ok_slope = (slope - 2.0).abs() <= 0.5;
    outcome(
        ok_ratio && ok_slope,
        format!(
            "instantaneous/closed at 1/v=5 = {ratio:.2} (need >= 10: {}); log-log slope of excess vs v = {slope:.3} (need 2 +- 0.5: {})",
            if ok_ratio { "ok" } else { "no" },
            if ok_slope { "ok" } else { "no" }
        ),
    )
}

fn c4(ledger: &mut Ledger) -> Result<Outcome> {
    let gammas = [0.0, 0.01, 0.03];
    let cfg = SweepConfig {
        inv_v: vec![2.0, 3.0, 4.0],
        bath: bath(BathKind::Ohmic, &gammas, 0.02),
        ..SweepConfig::default()
    };
    let recs = ledger.run(&cfg)?;
    let mut bad = Vec::new();
    let mut rows = Vec::new();
    for x in [2.0, 3.0, 4.0] {
        let p: Vec<f64> = gammas.iter().map(|&g| p_of(&recs, x, Mode::SuperAdiabatic, g)).collect();
        if !(p[1] <= p[0] && p[2] <= p[1]) {
            bad.push(x);
        }
        rows.push(format!("1/v={x}: {:.4e} {:.4e} {:.4e}", p[0], p[1], p[2]));
    }
    outcome(bad.is_empty(), format!("P_ge over g0 = 0, 0.01, 0.03 -> {}", rows.join("; ")))
}

fn c5(ledger: &mut Ledger) -> Result<Outcome> {
    let inv_v = range(1.0, 1.0, 14.0);
    let cfg = SweepConfig { inv_v: inv_v.clone(), bath: bath(BathKind::Ohmic, &[0.1], 0.5), ..SweepConfig::default() };
    let recs = ledger.run(&cfg)?;
    let p: Vec<f64> = inv_v.iter().map(|&x| p_of(&recs, x, Mode::SuperAdiabatic, 0.1)).collect();
    let last = p.len() - 1;
    let first_min = (0..last).find(|&i| p[i + 1] > p[i]);
    let verdict = first_min.and_then(|imin| {
        let imax = (imin + 1..=last).max_by(|&a, &b| p[a].total_cmp(&p[b]))?;
        let shape = imin > 0 && p[imax] > p[imin] && imax < last && p[last] < p[last - 1];
        Some((shape, imin, imax))
    });
    let curve = p.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ");
    match verdict {
        Some((true, imin, imax)) => outcome(
            true,
            format!("falls to 1/v={}, rises to 1/v={}, falls to 1/v=14; P = {curve}", inv_v[imin], inv_v[imax]),
        ),
        _ => outcome(false, format!("no decrease-increase-decrease shape; P = {curve}")),
    }
}

fn c6(ledger: &Ledger) -> Result<Outcome> {
    let recs = &ledger.0;
    let tr = recs.iter().map(|r| r.diagnostics.trace_error).fold(0.0, f64::max);
    let herm = recs.iter().map(|r| r.diagnostics.hermiticity_error).fold(0.0, f64::max);
    let min = recs.iter().map(|r| r.diagnostics.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let p_ok = recs.iter().all(|r| (0.0..=1.0 + 1e-7).contains(&r.p_ge));
    outcome(
        tr < 1e-8 && herm < 1e-10 && min >= -1e-7 && p_ok,
        format!(
            "{} master-equation runs: max trace error {tr:.1e}, max hermiticity error {herm:.1e}, min eigenvalue {min:.1e}, P_ge in [0, 1]: {p_ok}",
            recs.len()
        ),
    )
}

fn c7(ledger: &mut Ledger) -> Result<Outcome> {
    let me = SweepConfig { inv_v: vec![3.0], bath: bath(BathKind::Ohmic, &[0.05], 0.5), ..SweepConfig::default() };
    let p_me = ledger.run(&me)?[0].p_ge;
    let m = 4000;
    let traj = SweepConfig {
        solver: Solver::Trajectories { count: m, seed: 2024 },
        integrator: IntegratorConfig::default().with_tolerances(1e-6, 1e-8),
        ..me
    };
    let p_mc = run_lz_sweep(&traj)?[0].p_ge;
    let sigma = (p_me * (1.0 - p_me) / m as f64).sqrt();
    let dev = (p_mc - p_me).abs();
    outcome(
        dev <= 3.0 * sigma,
        format!("ME {p_me:.5}, {m} trajectories {p_mc:.5}, |diff| = {dev:.5} (3 sigma = {:.5})", 3.0 * sigma),
    )
}

fn c8() -> Result<Outcome> {
    let mut j0 = Vec::new();
    let mut lines = Vec::new();
    let mut decreasing = true;
    for a in [0.125, 0.0625] {
        let v = 2.0 * a;
        let h = lz_hamiltonian(LzParams::new(v, 1.0)?);
        let tf = 25.0 / v;
        let grid = TimeGrid::auto(&h, -tf, tf, 0.01)?;
        let amps = (0..=3)
            .map(|j| {
                Ok(residual_oscillation(&h, &superadiabatic_frames(&h, j, grid)?, &IntegratorConfig::default())?
                    .amplitude)
            })
            .collect::<Result<Vec<f64>>>()?;
        decreasing &= amps.windows(2).all(|w| w[1] < w[0]);
        j0.push(amps[0]);
        lines.push(format!("A={a}: {}", amps.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")));
    }
    let ratio = j0[0] / j0[1];
    outcome(
        decreasing && (ratio - 2.0).abs() <= 0.4,
        format!("amplitudes j=0..3 {}; j=0 ratio {ratio:.3} (need 2 +- 0.4)", lines.join("; ")),
    )
}

fn c9() -> Result<Outcome> {
    let checks = run_checks();
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
    let detail = if failed.is_empty() {
        checks.iter().map(|c| c.name).collect::<Vec<_>>().join(", ")
    } else {
        failed.join("; ")
    };
    outcome(failed.is_empty(), detail)
}

fn main() -> ExitCode {
    let mut ledger = Ledger::default();
    let mut unexpected = Vec::new();
    let mut report = |id: u32, name: &str, f: &mut dyn FnMut() -> Result<Outcome>| {
        let started = Instant::now();
        let (passed, detail) = match f() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = if passed { "PASS" } else { "FAIL" };
        let note = if !passed && KNOWN_RED.contains(&id) { " [known deviation]" } else { "" };
        println!("{tag} criterion {id} ({name}){note}: {detail} [{:.1}s]", started.elapsed().as_secs_f64());
        if !passed && !KNOWN_RED.contains(&id) {
            unexpected.push(id);
        }
    };
    report(1, "closed LZ oracle", &mut c1);
    report(2, "dephasing in the order-4 basis", &mut || c2(&mut ledger));
    report(3, "instantaneous-basis contrast", &mut || c3(&mut ledger));
    report(4, "low-T ohmic monotonicity", &mut || c4(&mut ledger));
    report(5, "T=0.5 ohmic non-monotonic curve", &mut || c5(&mut ledger));
    report(7, "unravelling equivalence", &mut || c7(&mut ledger));
    report(6, "master-equation integrity", &mut || c6(&ledger));
    report(8, "super-adiabatic scaling", &mut c8);
    report(9, "property suite", &mut c9);
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
