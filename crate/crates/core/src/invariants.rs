//! Self-checks run by `superlind check`: structural properties that must hold
//! for any valid model, independent of physical parameter values.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::experiments::{run_lz_sweep, write_sweep_csv, BathConfig, BathKind, Mode, Solver, SweepConfig};
use crate::frames::{instantaneous_frames, superadiabatic_frames, FrameTrajectory, TimeGrid};
use crate::generator::LindbladGenerator;
use crate::linalg::{c, hermiticity_error, max_abs, trace, unitarity_error, CMatrix, CVector, C64};
use crate::model::{lz_hamiltonian, ohmic_spectrum, ohmic_spectrum_with, CouplingOperator, CutoffConvention, LzParams};
use crate::propagation::bloch_vector_pure;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Random density matrix `GG†/Tr(GG†)` with Gaussian-ish entries.
pub fn random_density_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let rho = &g * g.adjoint();
    let tr = trace(&rho);
    rho / tr
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let norm = v.norm();
    v / c(norm, 0.0)
}

fn random_phase(rng: &mut impl Rng) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

fn lz_frames(inv_v: f64, order: usize) -> Result<FrameTrajectory> {
    let h = lz_hamiltonian(LzParams::new(1.0 / inv_v, 1.0)?);
    let tf = 10.0 * inv_v;
    let grid = TimeGrid::auto(&h, -tf, tf, 0.01)?;
    if order == 0 {
        instantaneous_frames(&h, grid)
    } else {
        superadiabatic_frames(&h, order, grid)
    }
}

fn lz_generator(order: usize) -> Result<LindbladGenerator> {
    LindbladGenerator::new(
        Arc::new(lz_frames(3.0, order)?),
        CouplingOperator::sigma_z(),
        ohmic_spectrum(0.1, 5.0, 0.5)?,
    )
}

/// Largest `|U†U - 1|` over frames of orders 0 to 4.
pub fn frame_unitarity() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for order in 0..=4 {
        let traj = lz_frames(4.0, order)?;
        for f in traj.frames() {
            worst = worst.max(unitarity_error(&f.basis));
        }
    }
    Ok((worst < 1e-10, format!("max |U†U - 1| = {worst:.2e} over orders 0..4")))
}

/// `Tr ρ̇ = 0` and `ρ̇ = ρ̇†` on random states and times.
pub fn trace_annihilation(samples: usize, seed: u64) -> Result<(bool, String)> {
    let gen = lz_generator(2)?;
    let grid = *gen.frames().grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut tr, mut herm): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let rho = random_density_matrix(&mut rng, 2);
        let t = rng.random_range(grid.start()..grid.end());
        let d = gen.me_rhs(&rho, t)?;
        tr = tr.max(trace(&d).norm());
        herm = herm.max(hermiticity_error(&d));
    }
    Ok((tr < 1e-12 && herm < 1e-12, format!("{samples} states: max |Tr ρ̇| = {tr:.2e}, max |ρ̇ - ρ̇†| = {herm:.2e}")))
}

/// `me_rhs` is unchanged when every frame vector picks up an arbitrary phase.
pub fn gauge_invariance(samples: usize, seed: u64) -> Result<(bool, String)> {
    let gen = lz_generator(3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<[C64; 2]> =
        (0..gen.frames().grid().len()).map(|_| [random_phase(&mut rng), random_phase(&mut rng)]).collect();
    let moved = gen.frames().regauged(|k, a| phases[k][a])?;
    let other = LindbladGenerator::new(Arc::new(moved), gen.coupling().clone(), gen.spectrum().clone())?;
    let grid = *gen.frames().grid();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let rho = random_density_matrix(&mut rng, 2);
        let t = rng.random_range(grid.start()..grid.end());
        worst = worst.max(max_abs(&(gen.me_rhs(&rho, t)? - other.me_rhs(&rho, t)?)));
    }
    Ok((worst < 1e-12, format!("{samples} states: max |Δρ̇| under regauging = {worst:.2e}")))
}

/// `γ(0) = γ₀T`, also approached from `ω → 0±`.
pub fn ohmic_zero_limit() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for &(g0, wc, t) in &[(0.01, 5.0, 0.5), (0.1, 5.0, 0.02), (0.3, 2.0, 3.0), (1.0, 10.0, 1e-3)] {
        for conv in [CutoffConvention::Literal, CutoffConvention::Symmetric] {
            let s = ohmic_spectrum_with(g0, wc, t, conv)?;
            for w in [0.0, 1e-13, -1e-13] {
                worst = worst.max((s.gamma(w) - g0 * t).abs());
            }
        }
    }
    Ok((worst < 1e-9, format!("max |γ(0) - γ₀T| = {worst:.2e}")))
}

/// The symmetric cutoff obeys `γ(-ω) = e^{-ω/T} γ(ω)`; the literal one does not.
pub fn detailed_balance_flag() -> Result<(bool, String)> {
    let (g0, wc, t) = (0.1, 5.0, 0.5);
    let sym = ohmic_spectrum_with(g0, wc, t, CutoffConvention::Symmetric)?;
    let lit = ohmic_spectrum_with(g0, wc, t, CutoffConvention::Literal)?;
    let kms = |s: &crate::model::BathSpectrum, w: f64| {
        let lhs = s.gamma(-w);
        let rhs = (-w / t).exp() * s.gamma(w);
        (lhs - rhs).abs() / rhs
    };
    let omegas = [0.1, 0.5, 1.0, 2.0, 5.0];
    let sym_err = omegas.iter().map(|&w| kms(&sym, w)).fold(0.0, f64::max);
    let lit_err = omegas.iter().map(|&w| kms(&lit, w)).fold(0.0, f64::max);
    Ok((sym_err < 1e-12 && lit_err > 1e-3, format!("KMS mismatch: symmetric {sym_err:.2e}, literal {lit_err:.2e}")))
}

/// Pure states sit on the Bloch sphere.
pub fn bloch_norm(samples: usize, seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (x, y, z) = bloch_vector_pure(&random_state(&mut rng, 2));
        worst = worst.max(((x * x + y * y + z * z).sqrt() - 1.0).abs());
    }
    Ok((worst < 1e-12, format!("{samples} states: max ||r| - 1| = {worst:.2e}")))
}

/// A small sweep run twice produces byte-identical CSV output.
pub fn deterministic_reruns() -> Result<(bool, String)> {
    let base = SweepConfig {
        inv_v: vec![1.0, 1.5],
        window: 10.0,
        modes: vec![Mode::Closed, Mode::SuperAdiabatic],
        order: 2,
        bath: BathConfig {
            kind: BathKind::Ohmic,
            gamma0: vec![0.05],
            cutoff: 5.0,
            temperature: vec![0.5],
            convention: CutoffConvention::Literal,
        },
        ..SweepConfig::default()
    };
    let traj = SweepConfig { solver: Solver::Trajectories { count: 40, seed: 7 }, ..base.clone() };
    let mut identical = true;
    for cfg in [&base, &traj] {
        let render = || -> Result<Vec<u8>> {
            let mut buf = Vec::new();
            write_sweep_csv(cfg, &run_lz_sweep(cfg)?, &mut buf)?;
            Ok(buf)
        };
        identical &= render()? == render()?;
    }
    Ok((identical, format!("master equation and trajectory sweeps {}", if identical { "identical" } else { "differ" })))
}

type Check = Box<dyn Fn() -> Result<(bool, String)>>;

/// Runs every check; errors count as failures.
pub fn run_checks() -> Vec<CheckOutcome> {
    let checks: Vec<(&'static str, Check)> = vec![
        ("frame unitarity", Box::new(frame_unitarity)),
        ("trace annihilation", Box::new(|| trace_annihilation(100, 11))),
        ("gauge invariance", Box::new(|| gauge_invariance(100, 12))),
        ("ohmic zero-frequency limit", Box::new(ohmic_zero_limit)),
        ("detailed balance flag", Box::new(detailed_balance_flag)),
        ("bloch norm", Box::new(|| bloch_norm(100, 13))),
        ("deterministic reruns", Box::new(deterministic_reruns)),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => CheckOutcome { name, passed, detail },
            Err(e) => CheckOutcome { name, passed: false, detail: format!("error: {e}") },
        })
        .collect()
}
