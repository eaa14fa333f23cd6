//! Landau–Zener sweeps, Bloch-path exports and spectrum tables.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use log::warn;

use crate::config::{ConfigFile, Reader};
use crate::error::{domain, Error, Result};
use crate::frames::{
    adiabatic_report, instantaneous_frames, superadiabatic_frames, FrameTrajectory, TimeGrid, MAX_ORDER,
};
use crate::generator::LindbladGenerator;
use crate::integrate::IntegratorConfig;
use crate::linalg::CVector;
use crate::model::{
    dephasing_spectrum, lz_hamiltonian, ohmic_spectrum_with, BathSpectrum, CouplingOperator, CutoffConvention,
    LzParams, TimeDependentHamiltonian,
};
use crate::propagation::{
    bloch_vector_pure, evolve_lindblad, evolve_trajectories, evolve_unitary, evolve_unitary_sampled, DensityMatrix,
    StateVector, TrajectoryConfig,
};

/// Probabilities may exceed one by this much before a record is flagged.
pub const PROBABILITY_SLACK: f64 = 1e-7;
pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_WINDOW: f64 = 25.0;
pub const MIN_WINDOW: f64 = 10.0;
/// Warn when the sweep is this far from adiabatic.
pub const ADIABATICITY_WARNING: f64 = 0.25;
/// Warn when the initial state already has this much excited population.
pub const INITIAL_EXCITATION_WARNING: f64 = 1e-6;

/// `P_{g→e} = exp(-πΔ²/(2v))`.
pub fn closed_lz_oracle(gap: f64, velocity: f64) -> f64 {
    (-std::f64::consts::PI * gap * gap / (2.0 * velocity)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Closed,
    SuperAdiabatic,
    Instantaneous,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Closed => "closed",
            Mode::SuperAdiabatic => "superadiabatic",
            Mode::Instantaneous => "instantaneous",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "closed" => Some(Mode::Closed),
            "superadiabatic" | "super-adiabatic" | "sa" => Some(Mode::SuperAdiabatic),
            "instantaneous" | "inst" => Some(Mode::Instantaneous),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathKind {
    None,
    Dephasing,
    Ohmic,
}

impl BathKind {
    pub fn label(self) -> &'static str {
        match self {
            BathKind::None => "none",
            BathKind::Dephasing => "dephasing",
            BathKind::Ohmic => "ohmic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathConfig {
    pub kind: BathKind,
    /// `γ₀` for Ohmic baths, `γ(0)` for pure dephasing; one curve per value.
    pub gamma0: Vec<f64>,
    pub cutoff: f64,
    /// One curve per temperature (Ohmic only).
    pub temperature: Vec<f64>,
    pub convention: CutoffConvention,
}

impl BathConfig {
    pub fn spectrum(&self, gamma0: f64, temperature: f64) -> Result<BathSpectrum> {
        match self.kind {
            BathKind::None => Ok(BathSpectrum::zero()),
            BathKind::Dephasing => dephasing_spectrum(gamma0),
            BathKind::Ohmic => ohmic_spectrum_with(gamma0, self.cutoff, temperature, self.convention),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    MasterEquation,
    Trajectories { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub gap: f64,
    pub inv_v: Vec<f64>,
    /// Window factor `w`; the sweep runs over `t ∈ [-wΔ/v, wΔ/v]`.
    pub window: f64,
    pub bath: BathConfig,
    pub modes: Vec<Mode>,
    pub order: usize,
    pub solver: Solver,
    pub integrator: IntegratorConfig,
    /// Largest allowed `‖H(t_{k+1}) - H(t_k)‖` as a fraction of the minimum gap.
    pub grid_tolerance: f64,
    pub output: Option<PathBuf>,
    pub dat: bool,
    pub threads: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gap: 1.0,
            inv_v: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            window: DEFAULT_WINDOW,
            bath: BathConfig {
                kind: BathKind::None,
                gamma0: vec![0.0],
                cutoff: 5.0,
                temperature: vec![0.0],
                convention: CutoffConvention::Literal,
            },
            modes: vec![Mode::SuperAdiabatic],
            order: DEFAULT_ORDER,
            solver: Solver::MasterEquation,
            integrator: IntegratorConfig::default(),
            grid_tolerance: 0.01,
            output: None,
            dat: false,
            threads: None,
        }
    }
}

impl SweepConfig {
    pub fn from_config(file: &ConfigFile) -> Result<Self> {
        let d = Self::default();
        let mut r = Reader::new(file);
        let gap = r.scalar("system.delta", d.gap);
        let inv_v = r.list("system.inv_v", &d.inv_v);
        let window = r.scalar("system.window", d.window);
        let coupling = r.text("system.coupling", "sigma_z");
        r.require("system.coupling", coupling == "sigma_z", "only sigma_z coupling is supported");

        let kind = match r.text("bath.kind", "none").as_str() {
            "none" => BathKind::None,
            "dephasing" => BathKind::Dephasing,
            "ohmic" => BathKind::Ohmic,
            other => {
                r.problem(format!("'bath.kind' = {other}: expected none, dephasing or ohmic"));
                BathKind::None
            }
        };
        let gamma0 = r.list("bath.gamma0", &d.bath.gamma0);
        let cutoff = r.scalar("bath.cutoff", d.bath.cutoff);
        let temperature = r.list("bath.temperature", &d.bath.temperature);
        let convention = match r.text("bath.convention", "literal").as_str() {
            "literal" => CutoffConvention::Literal,
            "symmetric" => CutoffConvention::Symmetric,
            other => {
                r.problem(format!("'bath.convention' = {other}: expected literal or symmetric"));
                CutoffConvention::Literal
            }
        };

        let mut modes = Vec::new();
        for word in r.words("basis.mode", "superadiabatic") {
            match Mode::parse(&word) {
                Some(m) if !modes.contains(&m) => modes.push(m),
                Some(_) => {}
                None => r.problem(format!("'basis.mode' = {word}: expected superadiabatic, instantaneous or closed")),
            }
        }
        let order = r.scalar("basis.order", d.order);

        let method = r.text("solver.method", "me");
        let count = r.scalar("solver.trajectories", 1000usize);
        let seed = r.scalar("solver.seed", 1u64);
        let solver = match method.as_str() {
            "me" => Solver::MasterEquation,
            "trajectories" => Solver::Trajectories { count, seed },
            other => {
                r.problem(format!("'solver.method' = {other}: expected me or trajectories"));
                Solver::MasterEquation
            }
        };
        let rel_tol = r.scalar("solver.rel_tol", d.integrator.rel_tol);
        let abs_tol = r.scalar("solver.abs_tol", d.integrator.abs_tol);
        let grid_tolerance = r.scalar("solver.grid_tolerance", d.grid_tolerance);
        let threads = r.optional::<usize>("solver.threads");
        let output = r.raw("output.path").map(PathBuf::from);
        let dat = r.scalar("output.dat", false);

        r.require("system.delta", gap.is_finite() && gap > 0.0, "must be positive");
        r.require("system.inv_v", inv_v.iter().all(|x| x.is_finite() && *x > 0.0), "all 1/v values must be positive");
        r.require("system.window", window.is_finite() && window >= MIN_WINDOW, "window factor must be at least 10");
        r.require("bath.gamma0", gamma0.iter().all(|g| *g >= 0.0), "coupling strengths must be non-negative");
        r.require("bath.cutoff", cutoff.is_finite() && cutoff > 0.0, "must be positive");
        r.require("bath.temperature", temperature.iter().all(|t| t.is_finite() && *t >= 0.0), "must be non-negative");
        r.require("basis.mode", !modes.is_empty(), "at least one mode is required");
        r.require("basis.order", order <= MAX_ORDER, "super-adiabatic order above the cap of 12");
        r.require("solver.trajectories", count >= 1, "at least one trajectory is required");
        r.require("solver.rel_tol", rel_tol > 0.0, "must be positive");
        r.require("solver.abs_tol", abs_tol > 0.0, "must be positive");
        r.require("solver.grid_tolerance", grid_tolerance > 0.0, "must be positive");
        r.require("solver.threads", threads != Some(0), "must be at least 1");
        r.finish()?;

        Ok(Self {
            gap,
            inv_v,
            window,
            bath: BathConfig { kind, gamma0, cutoff, temperature, convention },
            modes,
            order,
            solver,
            integrator: d.integrator.with_tolerances(rel_tol, abs_tol),
            grid_tolerance,
            output,
            dat,
            threads,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            problems.push(format!("delta = {} must be positive", self.gap));
        }
        if self.inv_v.is_empty() || self.inv_v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            problems.push("all 1/v values must be positive".to_string());
        }
        if !(self.window >= MIN_WINDOW) {
            problems.push(format!("window = {} must be at least {MIN_WINDOW}", self.window));
        }
        if self.order > MAX_ORDER {
            problems.push(format!("order = {} exceeds {MAX_ORDER}", self.order));
        }
        if self.modes.is_empty() {
            problems.push("no modes selected".to_string());
        }
        if self.bath.gamma0.iter().any(|g| !(*g >= 0.0)) {
            problems.push("coupling strengths must be non-negative".to_string());
        }
        if let Solver::Trajectories { count: 0, .. } = self.solver {
            problems.push("at least one trajectory is required".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// The parameter curves this configuration describes.
    pub fn curves(&self) -> Vec<Curve> {
        let mut out = Vec::new();
        for &mode in &self.modes {
            if mode == Mode::Closed || self.bath.kind == BathKind::None {
                let c = Curve { mode, gamma0: 0.0, temperature: 0.0 };
                if !out.contains(&c) {
                    out.push(c);
                }
                continue;
            }
            for &gamma0 in &self.bath.gamma0 {
                let temps: &[f64] = if self.bath.kind == BathKind::Ohmic { &self.bath.temperature } else { &[0.0] };
                for &temperature in temps {
                    let c = Curve { mode, gamma0, temperature };
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    fn order_for(&self, mode: Mode) -> usize {
        match mode {
            Mode::SuperAdiabatic => self.order,
            Mode::Instantaneous | Mode::Closed => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curve {
    pub mode: Mode,
    pub gamma0: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
    /// Largest adiabatic parameter over the sweep window.
    pub adiabatic_parameter: f64,
    /// Population of the instantaneous excited state in the initial state.
    pub initial_excited: f64,
    pub grid_step: f64,
    pub grid_points: usize,
    pub runtime: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub inv_v: f64,
    pub p_ge: f64,
    pub mode: Mode,
    pub bath: BathKind,
    pub gamma0: f64,
    pub temperature: f64,
    pub order: usize,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
}

/// Everything needed to propagate one Landau–Zener sweep.
pub struct LzSetup {
    pub params: LzParams,
    pub hamiltonian: TimeDependentHamiltonian,
    pub t_final: f64,
    pub grid: TimeGrid,
}

impl LzSetup {
    pub fn new(gap: f64, inv_v: f64, window: f64, grid_tolerance: f64) -> Result<Self> {
        let params = LzParams::new(1.0 / inv_v, gap)?;
        let hamiltonian = lz_hamiltonian(params);
        let t_final = window * gap / params.velocity();
        let grid = TimeGrid::auto(&hamiltonian, -t_final, t_final, grid_tolerance)?;
        Ok(Self { params, hamiltonian, t_final, grid })
    }

    /// Instantaneous eigenvectors of `H(t)`.
    pub fn eigenstates(&self, t: f64) -> Result<(CVector, CVector)> {
        let (_, vecs) = crate::linalg::hermitian_eigh(&self.hamiltonian.checked(t)?);
        Ok((vecs.column(0).into_owned(), vecs.column(1).into_owned()))
    }
}

/// Wall-clock timer; reads zero where the platform has no clock (wasm32).
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Self(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed();
        #[cfg(target_arch = "wasm32")]
        Duration::ZERO
    }
}

fn simulate(cfg: &SweepConfig, curve: Curve, inv_v: f64, job: usize) -> Result<SweepRecord> {
    let started = Stopwatch::start();
    let setup = LzSetup::new(cfg.gap, inv_v, cfg.window, cfg.grid_tolerance)?;
    let (tf, grid) = (setup.t_final, setup.grid);
    let instantaneous = instantaneous_frames(&setup.hamiltonian, grid)?;
    let report = adiabatic_report(&instantaneous, MAX_ORDER)?;
    let order = cfg.order_for(curve.mode);
    let frames = if order == 0 { instantaneous } else { superadiabatic_frames(&setup.hamiltonian, order, grid)? };
    let psi0 = StateVector::new(frames.frame(0).ground())?;
    let (_, excited_start) = setup.eigenstates(-tf)?;
    let (_, excited_end) = setup.eigenstates(tf)?;
    let initial_excited = psi0.population(&excited_start);
    let integrator = cfg.integrator.with_max_step(0.5 * grid.step());

    let mut trace_error = 0.0;
    let mut hermiticity_error = 0.0;
    let mut min_eigenvalue = 0.0;
    let p_ge = if curve.mode == Mode::Closed {
        evolve_unitary(&setup.hamiltonian, &psi0, -tf, tf, &integrator)?.population(&excited_end)
    } else {
        let spectrum = cfg.bath.spectrum(curve.gamma0, curve.temperature)?;
        let gen = LindbladGenerator::new(Arc::new(frames), CouplingOperator::sigma_z(), spectrum)?;
        match cfg.solver {
            Solver::MasterEquation => {
                let run = evolve_lindblad(&gen, &DensityMatrix::pure(&psi0), -tf, tf, &integrator, &[])?;
                trace_error = run.integrity.max_trace_error.max(run.state.trace_error());
                hermiticity_error = run.integrity.max_hermiticity_error;
                min_eigenvalue = run.integrity.min_eigenvalue;
                run.state.population(&excited_end)
            }
            Solver::Trajectories { count, seed } => {
                let tcfg = TrajectoryConfig {
                    trajectories: count,
                    seed: seed.wrapping_add((job as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                    record_jumps: false,
                };
                let ens = evolve_trajectories(&gen, &psi0, -tf, tf, &tcfg, &integrator)?;
                trace_error = ens.state.trace_error();
                hermiticity_error = ens.state.hermiticity_error();
                min_eigenvalue = ens.state.min_eigenvalue();
                ens.state.population(&excited_end)
            }
        }
    };

    let mut warnings = Vec::new();
    if report.global > ADIABATICITY_WARNING {
        warnings
            .push(format!("adiabatic parameter {:.3} exceeds {ADIABATICITY_WARNING} at 1/v = {inv_v}", report.global));
    }
    if initial_excited > INITIAL_EXCITATION_WARNING {
        warnings.push(format!(
            "initial excited population {initial_excited:.2e} exceeds {INITIAL_EXCITATION_WARNING:e}; widen the window"
        ));
    }
    for w in &warnings {
        warn!("{}: {w}", curve.mode);
    }
    Ok(SweepRecord {
        inv_v,
        p_ge,
        mode: curve.mode,
        bath: if curve.mode == Mode::Closed { BathKind::None } else { cfg.bath.kind },
        gamma0: curve.gamma0,
        temperature: curve.temperature,
        order,
        diagnostics: Diagnostics {
            trace_error,
            hermiticity_error,
            min_eigenvalue,
            adiabatic_parameter: report.global,
            initial_excited,
            grid_step: grid.step(),
            grid_points: grid.len(),
            runtime: started.elapsed(),
        },
        warnings,
    })
}

fn run_jobs<T, F>(jobs: usize, threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let go = || (0..jobs).into_par_iter().map(&f).collect::<Vec<T>>();
        match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
            Some(pool) => pool.install(go),
            None => go(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        (0..jobs).map(f).collect()
    }
}

/// Worker cap from `SUPERLIND_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("SUPERLIND_THREADS").ok()?.trim().parse().ok().filter(|n| *n > 0)
}

/// Runs every (curve, 1/v) point. Records come back sorted by 1/v, then by
/// mode, γ₀ and temperature.
pub fn run_lz_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let curves = cfg.curves();
    let jobs: Vec<(Curve, f64)> = curves.iter().flat_map(|c| cfg.inv_v.iter().map(move |&x| (*c, x))).collect();
    let results = run_jobs(jobs.len(), cfg.threads, |i| simulate(cfg, jobs[i].0, jobs[i].1, i));
    let mut records = results.into_iter().collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        a.inv_v
            .total_cmp(&b.inv_v)
            .then(a.mode.cmp(&b.mode))
            .then(a.gamma0.total_cmp(&b.gamma0))
            .then(a.temperature.total_cmp(&b.temperature))
    });
    Ok(records)
}

fn write_metadata<W: Write>(cfg: &SweepConfig, out: &mut W) -> Result<()> {
    let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    writeln!(out, "# superlind lz sweep")?;
    writeln!(out, "# delta = {}", cfg.gap)?;
    writeln!(out, "# inv_v = {}", list(&cfg.inv_v))?;
    writeln!(out, "# window = {}", cfg.window)?;
    writeln!(out, "# coupling = sigma_z")?;
    writeln!(out, "# mode = {}", cfg.modes.iter().map(|m| m.label()).collect::<Vec<_>>().join(", "))?;
    writeln!(out, "# order = {}", cfg.order)?;
    writeln!(out, "# bath = {}", cfg.bath.kind.label())?;
    writeln!(out, "# gamma0 = {}", list(&cfg.bath.gamma0))?;
    if cfg.bath.kind == BathKind::Ohmic {
        writeln!(out, "# cutoff = {}", cfg.bath.cutoff)?;
        writeln!(out, "# temperature = {}", list(&cfg.bath.temperature))?;
        let conv = match cfg.bath.convention {
            CutoffConvention::Literal => "literal",
            CutoffConvention::Symmetric => "symmetric",
        };
        writeln!(out, "# convention = {conv}")?;
    }
    match cfg.solver {
        Solver::MasterEquation => writeln!(out, "# solver = me")?,
        Solver::Trajectories { count, seed } => writeln!(out, "# solver = trajectories ({count}, seed {seed})")?,
    }
    writeln!(
        out,
        "# integrator = dormand-prince rel_tol {:e} abs_tol {:e}",
        cfg.integrator.rel_tol, cfg.integrator.abs_tol
    )?;
    writeln!(out, "# max_step = grid_step / 2")?;
    writeln!(out, "# grid_tolerance = {}", cfg.grid_tolerance)?;
    writeln!(out, "# readout = instantaneous excited state at t = +window*delta/v")?;
    Ok(())
}

/// CSV with a `# key = value` metadata block. The body depends only on the
/// configuration, so reruns are byte-identical.
pub fn write_sweep_csv<W: Write>(cfg: &SweepConfig, records: &[SweepRecord], mut out: W) -> Result<()> {
    write_metadata(cfg, &mut out)?;
    writeln!(
        out,
        "inv_v,mode,bath,gamma0,temperature,order,p_ge,trace_error,hermiticity_error,min_eigenvalue,adiabatic_parameter,initial_excited,grid_step,grid_points"
    )?;
    for r in records {
        let d = &r.diagnostics;
        writeln!(
            out,
            "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            r.inv_v,
            r.mode,
            r.bath.label(),
            r.gamma0,
            r.temperature,
            r.order,
            r.p_ge,
            d.trace_error,
            d.hermiticity_error,
            d.min_eigenvalue,
            d.adiabatic_parameter,
            d.initial_excited,
            d.grid_step,
            d.grid_points
        )?;
    }
    Ok(())
}

/// gnuplot-friendly blocks (`inv_v p_ge`), one index per curve.
pub fn write_sweep_dat<W: Write>(cfg: &SweepConfig, records: &[SweepRecord], mut out: W) -> Result<()> {
    write_metadata(cfg, &mut out)?;
    for (i, c) in cfg.curves().iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
            writeln!(out)?;
        }
        writeln!(out, "# mode = {} gamma0 = {} temperature = {}", c.mode, c.gamma0, c.temperature)?;
        let bath = if c.mode == Mode::Closed { BathKind::None } else { cfg.bath.kind };
        for r in records
            .iter()
            .filter(|r| r.mode == c.mode && r.gamma0 == c.gamma0 && r.temperature == c.temperature && r.bath == bath)
        {
            writeln!(out, "{} {:e}", r.inv_v, r.p_ge)?;
        }
    }
    Ok(())
}

/// Settings for the Bloch-path export.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Config {
    pub gap: f64,
    pub inv_v: f64,
    pub window: f64,
    pub order: usize,
    pub max_rows: usize,
    pub grid_tolerance: f64,
    pub integrator: IntegratorConfig,
    /// Output prefix; files are `<prefix>_{instantaneous,superadiabatic,evolved}.csv`.
    pub output: Option<PathBuf>,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Self {
            gap: 1.0,
            inv_v: 4.0,
            window: MIN_WINDOW,
            order: 3,
            max_rows: 2000,
            grid_tolerance: 0.01,
            integrator: IntegratorConfig::default(),
            output: None,
        }
    }
}

impl Fig1Config {
    pub fn from_config(file: &ConfigFile) -> Result<Self> {
        let d = Self::default();
        let mut r = Reader::new(file);
        let gap = r.scalar("system.delta", d.gap);
        let inv_v = r.scalar("system.inv_v", d.inv_v);
        let window = r.scalar("system.window", d.window);
        let order = r.scalar("basis.order", d.order);
        let max_rows = r.scalar("output.max_rows", d.max_rows);
        let grid_tolerance = r.scalar("solver.grid_tolerance", d.grid_tolerance);
        let rel_tol = r.scalar("solver.rel_tol", d.integrator.rel_tol);
        let abs_tol = r.scalar("solver.abs_tol", d.integrator.abs_tol);
        let output = r.raw("output.path").map(PathBuf::from);
        r.require("system.delta", gap > 0.0, "must be positive");
        r.require("system.inv_v", inv_v > 0.0 && inv_v.is_finite(), "must be positive");
        r.require("system.window", window >= MIN_WINDOW, "window factor must be at least 10");
        r.require("basis.order", order <= MAX_ORDER, "super-adiabatic order above the cap of 12");
        r.require("output.max_rows", max_rows >= 2, "must be at least 2");
        r.require("solver.rel_tol", rel_tol > 0.0, "must be positive");
        r.require("solver.abs_tol", abs_tol > 0.0, "must be positive");
        r.require("solver.grid_tolerance", grid_tolerance > 0.0, "must be positive");
        r.finish()?;
        Ok(Self {
            gap,
            inv_v,
            window,
            order,
            max_rows,
            grid_tolerance,
            integrator: d.integrator.with_tolerances(rel_tol, abs_tol),
            output,
        })
    }
}

pub type BlochPoint = [f64; 3];

/// Three Bloch-vector paths sampled on the same times.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Paths {
    pub times: Vec<f64>,
    pub instantaneous: Vec<BlochPoint>,
    pub superadiabatic: Vec<BlochPoint>,
    pub evolved: Vec<BlochPoint>,
    pub order: usize,
}

fn distance(a: &BlochPoint, b: &BlochPoint) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Largest Euclidean distance between two equally sampled Bloch paths.
pub fn max_deviation(a: &[BlochPoint], b: &[BlochPoint]) -> f64 {
    a.iter().zip(b).map(|(x, y)| distance(x, y)).fold(0.0, f64::max)
}

/// Bloch paths of the instantaneous ground state, the order-`j` super-adiabatic
/// ground state, and the exact evolution of the latter from `-T_f`.
pub fn run_fig1(cfg: &Fig1Config) -> Result<Fig1Paths> {
    if cfg.order > MAX_ORDER {
        return Err(Error::OrderCap { order: cfg.order, max: MAX_ORDER });
    }
    if !(cfg.window >= MIN_WINDOW) {
        return Err(domain(format!("window factor {} below {MIN_WINDOW}", cfg.window)));
    }
    let setup = LzSetup::new(cfg.gap, cfg.inv_v, cfg.window, cfg.grid_tolerance)?;
    let inst = instantaneous_frames(&setup.hamiltonian, setup.grid)?;
    let sa: FrameTrajectory = superadiabatic_frames(&setup.hamiltonian, cfg.order, setup.grid)?;
    let stride = setup.grid.len().div_ceil(cfg.max_rows.max(2)).max(1);
    let mut idx: Vec<usize> = (0..setup.grid.len()).step_by(stride).collect();
    if idx.last() != Some(&(setup.grid.len() - 1)) {
        idx.push(setup.grid.len() - 1);
    }
    let times: Vec<f64> = idx.iter().map(|&k| setup.grid.time(k)).collect();
    let bloch = |v: &CVector| {
        let (x, y, z) = bloch_vector_pure(v);
        [x, y, z]
    };
    let psi0 = StateVector::new(sa.frame(0).ground())?;
    let integrator = cfg.integrator.with_max_step(0.5 * setup.grid.step());
    let states = evolve_unitary_sampled(&setup.hamiltonian, &psi0, &times, &integrator)?;
    Ok(Fig1Paths {
        instantaneous: idx.iter().map(|&k| bloch(&inst.frame(k).ground())).collect(),
        superadiabatic: idx.iter().map(|&k| bloch(&sa.frame(k).ground())).collect(),
        evolved: states.iter().map(|s| bloch(s.vector())).collect(),
        times,
        order: cfg.order,
    })
}

pub fn write_bloch_csv<W: Write>(label: &str, times: &[f64], path: &[BlochPoint], mut out: W) -> Result<()> {
    writeln!(out, "# path = {label}")?;
    writeln!(out, "# bloch convention: x = 2 Re rho01, y = 2 Im rho10, z = rho00 - rho11")?;
    writeln!(out, "t,x,y,z")?;
    for (t, p) in times.iter().zip(path) {
        writeln!(out, "{t},{:e},{:e},{:e}", p[0], p[1], p[2])?;
    }
    Ok(())
}

/// Writes the three paths next to each other as `<prefix>_<label>.csv`.
pub fn write_fig1(paths: &Fig1Paths, prefix: &std::path::Path) -> Result<Vec<PathBuf>> {
    let stem = prefix.to_string_lossy().trim_end_matches(".csv").to_string();
    let mut written = Vec::new();
    for (label, data) in [
        ("instantaneous", &paths.instantaneous),
        ("superadiabatic", &paths.superadiabatic),
        ("evolved", &paths.evolved),
    ] {
        let file = PathBuf::from(format!("{stem}_{label}.csv"));
        let mut w = std::io::BufWriter::new(std::fs::File::create(&file)?);
        write_bloch_csv(label, &paths.times, data, &mut w)?;
        w.flush()?;
        written.push(file);
    }
    Ok(written)
}

/// `(ω, γ(ω), S(ω))` on `n` evenly spaced frequencies.
pub fn spectrum_table(spectrum: &BathSpectrum, wmin: f64, wmax: f64, n: usize) -> Result<Vec<(f64, f64, f64)>> {
    if n == 0 || !(wmin.is_finite() && wmax.is_finite()) || wmax < wmin || (n == 1 && wmax != wmin) {
        return Err(domain(format!("invalid frequency range [{wmin}, {wmax}] with {n} points")));
    }
    Ok((0..n)
        .map(|k| {
            let w = if n == 1 { wmin } else { (wmin * (n - 1 - k) as f64 + wmax * k as f64) / (n - 1) as f64 };
            (w, spectrum.gamma(w), spectrum.shift(w))
        })
        .collect())
}

pub fn write_spectrum_csv<W: Write>(rows: &[(f64, f64, f64)], header: &[(&str, String)], mut out: W) -> Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k} = {v}")?;
    }
    writeln!(out, "omega,gamma,shift")?;
    for (w, g, s) in rows {
        writeln!(out, "{w},{g:e},{s:e}")?;
    }
    Ok(())
}
