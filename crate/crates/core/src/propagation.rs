//! Closed-system propagation, master-equation integration and jump unravelling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::generator::LindbladGenerator;
use crate::integrate::{dopri_step, integrate, normalize, rk4_step, IntegratorConfig, Method, Stepper};
use crate::linalg::{c, hermitian_part, hermiticity_error, min_eigenvalue, trace, CMatrix, CVector, C64, I};
use crate::model::TimeDependentHamiltonian;

pub const NORM_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-7;
/// Integration aborts once the smallest eigenvalue of ρ drops below this.
pub const POSITIVITY_ABORT: f64 = -1e-5;

/// Normalised pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    pub fn new(v: CVector) -> Result<Self> {
        let n = v.norm();
        if !((n - 1.0).abs() <= NORM_TOL) {
            return Err(Error::StateIntegrity(format!("state vector norm {n} is not 1")));
        }
        Ok(Self(v))
    }

    /// Rescales `v` to unit norm.
    pub fn normalized(v: CVector) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::StateIntegrity("cannot normalise a zero or non-finite vector".into()));
        }
        Ok(Self(v / c(n, 0.0)))
    }

    pub fn vector(&self) -> &CVector {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix(&self.0 * self.0.adjoint())
    }

    /// `|⟨φ|ψ⟩|²`.
    pub fn population(&self, phi: &CVector) -> f64 {
        phi.dotc(&self.0).norm_sqr()
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension("density matrix is not square".into()));
        }
        let herm = hermiticity_error(&m);
        if !(herm <= HERMITICITY_TOL) {
            return Err(Error::StateIntegrity(format!("density matrix not Hermitian (|ρ - ρ†| = {herm:e})")));
        }
        let rho = Self(m);
        let tr = rho.trace_error();
        if !(tr <= TRACE_TOL) {
            return Err(Error::StateIntegrity(format!("density matrix trace deviates from 1 by {tr:e}")));
        }
        let min = rho.min_eigenvalue();
        if !(min >= -POSITIVITY_TOL) {
            return Err(Error::StateIntegrity(format!("density matrix has eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    pub fn pure(psi: &StateVector) -> Self {
        psi.projector()
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(CMatrix::identity(n, n) * c(1.0 / n as f64, 0.0))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `⟨φ|ρ|φ⟩`.
    pub fn population(&self, phi: &CVector) -> f64 {
        phi.dotc(&(&self.0 * phi)).re
    }

    pub fn trace_error(&self) -> f64 {
        (trace(&self.0) - c(1.0, 0.0)).norm()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&hermitian_part(&self.0))
    }
}

fn vector_to_column(v: &CVector) -> CMatrix {
    CMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn column_to_vector(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Integrates `i ψ̇ = H(t) ψ`, renormalising after every step.
pub fn evolve_unitary(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<StateVector> {
    if psi0.dim() != h.dim() {
        return Err(Error::Dimension(format!(
            "state has {} components, Hamiltonian is {}x{}",
            psi0.dim(),
            h.dim(),
            h.dim()
        )));
    }
    let rhs = |t: f64, y: &CMatrix| Ok(h.at(t) * y * (-I));
    let y = integrate(rhs, vector_to_column(psi0.vector()), t0, t1, cfg, |_, y| {
        normalize(y);
        Ok(())
    })?;
    Ok(StateVector(column_to_vector(&y)))
}

/// Runs [`evolve_unitary`] through an ascending list of times and returns the
/// state at each (the first entry is the initial time).
pub fn evolve_unitary_sampled(
    h: &TimeDependentHamiltonian,
    psi0: &StateVector,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<StateVector>> {
    let mut out = Vec::with_capacity(times.len());
    let Some(&first) = times.first() else {
        return Ok(out);
    };
    let mut psi = psi0.clone();
    let mut t = first;
    out.push(psi.clone());
    for &next in &times[1..] {
        psi = evolve_unitary(h, &psi, t, next, cfg)?;
        out.push(psi.clone());
        t = next;
    }
    Ok(out)
}

/// Worst-case integrity figures seen along an integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrityReport {
    /// Largest `|Tr ρ - 1|` produced by a single step before renormalisation.
    pub max_trace_error: f64,
    /// Largest `|ρ - ρ†|` produced by a single step before re-Hermitisation.
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub steps: usize,
}

impl Default for IntegrityReport {
    fn default() -> Self {
        Self { max_trace_error: 0.0, max_hermiticity_error: 0.0, min_eigenvalue: f64::INFINITY, steps: 0 }
    }
}

impl IntegrityReport {
    pub fn merge(&mut self, other: &IntegrityReport) {
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.max_hermiticity_error = self.max_hermiticity_error.max(other.max_hermiticity_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.steps += other.steps;
    }
}

#[derive(Debug, Clone)]
pub struct LindbladEvolution {
    pub state: DensityMatrix,
    /// `(t, ρ(t))` at each requested sample time.
    pub samples: Vec<(f64, DensityMatrix)>,
    pub integrity: IntegrityReport,
}

/// Integrates the master equation from `t0` to `t1`. After every accepted step
/// ρ is re-Hermitised and its trace reset to one; positivity is only monitored.
/// `sample_times` must lie in `[t0, t1]` and be ascending.
pub fn evolve_lindblad(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    sample_times: &[f64],
) -> Result<LindbladEvolution> {
    if rho0.dim() != gen.dim() {
        return Err(Error::Dimension(format!("state is {0}x{0}, generator is {1}x{1}", rho0.dim(), gen.dim())));
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.iter().any(|&s| s < t0 || s > t1) {
        return Err(domain(format!("sample times must be ascending within [{t0}, {t1}]")));
    }
    let cfg = cfg.with_max_step(0.5 * gen.frames().grid().step());
    let mut integrity = IntegrityReport { min_eigenvalue: rho0.min_eigenvalue(), ..Default::default() };
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut rho = rho0.matrix().clone();
    let mut t = t0;
    let stops = sample_times.iter().copied().chain(std::iter::once(t1));
    for stop in stops {
        rho = integrate(
            |s, y: &CMatrix| gen.rhs_unchecked(y, s),
            rho,
            t,
            stop,
            &cfg,
            |s, y| {
                let herm = hermiticity_error(y);
                *y = hermitian_part(y);
                let tr = trace(y);
                let drift = (tr - c(1.0, 0.0)).norm();
                *y /= tr;
                let min = min_eigenvalue(y);
                integrity.max_trace_error = integrity.max_trace_error.max(drift);
                integrity.max_hermiticity_error = integrity.max_hermiticity_error.max(herm);
                integrity.min_eigenvalue = integrity.min_eigenvalue.min(min);
                integrity.steps += 1;
                if !(min >= POSITIVITY_ABORT) {
                    return Err(Error::PositivityViolation { time: s, min_eigenvalue: min });
                }
                Ok(())
            },
        )?;
        t = stop;
        if samples.len() < sample_times.len() {
            samples.push((stop, DensityMatrix(rho.clone())));
        }
    }
    Ok(LindbladEvolution { state: DensityMatrix(rho), samples, integrity })
}

/// Settings for the Monte Carlo unravelling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub trajectories: usize,
    pub seed: u64,
    pub record_jumps: bool,
}

impl TrajectoryConfig {
    pub fn new(trajectories: usize, seed: u64) -> Result<Self> {
        if trajectories == 0 {
            return Err(domain("trajectory count must be at least 1"));
        }
        Ok(Self { trajectories, seed, record_jumps: true })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpChannel {
    Dephasing,
    /// `|φ_to⟩⟨φ_from|`.
    Transition {
        to: usize,
        from: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpRecord {
    pub time: f64,
    pub channel: JumpChannel,
}

#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    /// `(1/M) Σ |ψ_m⟩⟨ψ_m|`.
    pub state: DensityMatrix,
    pub final_states: Vec<StateVector>,
    /// Jump history per trajectory (empty lists when recording is off).
    pub jumps: Vec<Vec<JumpRecord>>,
}

/// Deterministic per-trajectory random stream.
fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws a uniform number in `(0, 1]` used as the norm threshold for the next jump.
fn draw_threshold(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

fn norm_sqr(y: &CMatrix) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum()
}

/// Applies a jump to `psi` (normalised) at time `t`; returns the chosen channel.
fn apply_jump(gen: &LindbladGenerator, t: f64, psi: &mut CMatrix, rng: &mut ChaCha8Rng) -> Result<JumpChannel> {
    let ch = gen.channels_at(t)?;
    let n = gen.dim();
    let coeffs = ch.basis.adjoint() * &*psi;
    let mut weights: Vec<(JumpChannel, f64)> = Vec::with_capacity(n * n);
    let deph: f64 = (0..n).map(|a| ch.dephasing[a].powi(2) * coeffs[(a, 0)].norm_sqr()).sum();
    weights.push((JumpChannel::Dephasing, deph));
    for a in 0..n {
        for b in 0..n {
            if a != b {
                weights.push((JumpChannel::Transition { to: a, from: b }, ch.rates[a][b] * coeffs[(b, 0)].norm_sqr()));
            }
        }
    }
    let total: f64 = weights.iter().map(|w| w.1).sum();
    if !(total > 0.0) {
        return Err(Error::StateIntegrity(format!("jump requested at t = {t} with zero total rate")));
    }
    let mut pick = rng.random::<f64>() * total;
    let mut chosen = weights.last().map(|w| w.0).unwrap_or(JumpChannel::Dephasing);
    for (channel, w) in &weights {
        if *w > 0.0 && pick < *w {
            chosen = *channel;
            break;
        }
        pick -= w;
    }
    let new_coeffs = match chosen {
        JumpChannel::Dephasing => CMatrix::from_fn(n, 1, |a, _| coeffs[(a, 0)] * ch.dephasing[a]),
        JumpChannel::Transition { to, from } => {
            let mut v = CMatrix::zeros(n, 1);
            v[(to, 0)] = coeffs[(from, 0)] * ch.elements[(to, from)];
            v
        }
    };
    *psi = &ch.basis * new_coeffs;
    normalize(psi);
    Ok(chosen)
}

fn run_trajectory(
    gen: &LindbladGenerator,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    rng: &mut ChaCha8Rng,
    record: bool,
) -> Result<(StateVector, Vec<JumpRecord>)> {
    let mut rhs = |t: f64, y: &CMatrix| -> Result<CMatrix> { Ok(gen.effective_hamiltonian(t)? * y * (-I)) };
    let mut psi = vector_to_column(psi0.vector());
    let mut jumps = Vec::new();
    let mut threshold = draw_threshold(rng);
    let mut t = t0;
    let mut stepper = Stepper::new(*cfg, t0, t1)?;
    // ψ is kept unnormalised between jumps; its squared norm is the no-jump probability.
    while t < t1 {
        let before = psi.clone();
        let t_before = t;
        t = stepper.advance(&mut rhs, t, &mut psi, t1)?;
        if norm_sqr(&psi) > threshold {
            continue;
        }
        // Bisect for the crossing within the step just taken.
        let step = t - t_before;
        let (mut lo, mut hi) = (0.0, step);
        let mut at_hi = psi.clone();
        while hi - lo > 1e-3 * step {
            let mid = 0.5 * (lo + hi);
            let trial = match cfg.method {
                Method::Rk4 { .. } => rk4_step(&mut rhs, t_before, &before, mid)?,
                Method::Adaptive => dopri_step(&mut rhs, t_before, &before, mid)?.0,
            };
            if norm_sqr(&trial) > threshold {
                lo = mid;
            } else {
                hi = mid;
                at_hi = trial;
            }
        }
        t = t_before + hi;
        psi = at_hi;
        normalize(&mut psi);
        let channel = apply_jump(gen, t, &mut psi, rng)?;
        if record {
            jumps.push(JumpRecord { time: t, channel });
        }
        threshold = draw_threshold(rng);
        stepper = Stepper::new(*cfg, t, t1)?;
    }
    normalize(&mut psi);
    Ok((StateVector(column_to_vector(&psi)), jumps))
}

/// Quantum-jump unravelling of the master equation. Each trajectory draws from
/// its own random stream keyed by `(seed, index)`, so results do not depend on
/// how the work is scheduled.
pub fn evolve_trajectories(
    gen: &LindbladGenerator,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    tcfg: &TrajectoryConfig,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryEnsemble> {
    if psi0.dim() != gen.dim() {
        return Err(Error::Dimension(format!(
            "state has {} components, generator is {}x{}",
            psi0.dim(),
            gen.dim(),
            gen.dim()
        )));
    }
    if tcfg.trajectories == 0 {
        return Err(domain("trajectory count must be at least 1"));
    }
    if t1 < t0 {
        return Err(domain(format!("integration interval reversed ({t0} > {t1})")));
    }
    let cfg = cfg.with_max_step(0.5 * gen.frames().grid().step());
    cfg.validate()?;
    let one = |m: usize| {
        let mut rng = trajectory_rng(tcfg.seed, m);
        run_trajectory(gen, psi0, t0, t1, &cfg, &mut rng, tcfg.record_jumps)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(StateVector, Vec<JumpRecord>)>> = {
        use rayon::prelude::*;
        (0..tcfg.trajectories).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(StateVector, Vec<JumpRecord>)>> = (0..tcfg.trajectories).map(one).collect();

    let n = gen.dim();
    let mut sum = CMatrix::zeros(n, n);
    let mut final_states = Vec::with_capacity(tcfg.trajectories);
    let mut jumps = Vec::with_capacity(tcfg.trajectories);
    for r in results {
        let (psi, j) = r?;
        sum += psi.vector() * psi.vector().adjoint();
        final_states.push(psi);
        jumps.push(j);
    }
    sum /= C64::new(tcfg.trajectories as f64, 0.0);
    Ok(TrajectoryEnsemble { state: DensityMatrix(hermitian_part(&sum)), final_states, jumps })
}

/// Bloch vector with `x = 2 Re ρ₀₁`, `y = 2 Im ρ₁₀`, `z = ρ₀₀ - ρ₁₁`.
pub fn bloch_vector(rho: &CMatrix) -> Result<(f64, f64, f64)> {
    if rho.nrows() != 2 || rho.ncols() != 2 {
        return Err(Error::Dimension(format!("Bloch vector needs a 2x2 matrix, got {}x{}", rho.nrows(), rho.ncols())));
    }
    Ok((2.0 * rho[(0, 1)].re, 2.0 * rho[(1, 0)].im, rho[(0, 0)].re - rho[(1, 1)].re))
}

/// Bloch vector of the pure state `|ψ⟩⟨ψ|` for a two-component `ψ`.
pub fn bloch_vector_pure(psi: &CVector) -> (f64, f64, f64) {
    let r01 = psi[0] * psi[1].conj();
    (2.0 * r01.re, -2.0 * r01.im, psi[0].norm_sqr() - psi[1].norm_sqr())
}

/// Writes `t,x,y,z` rows for 2x2 states and `t,re_ij,im_ij,...` (row-major) otherwise.
pub fn write_time_series<W: std::io::Write>(samples: &[(f64, DensityMatrix)], mut out: W) -> Result<()> {
    let Some(n) = samples.first().map(|(_, r)| r.dim()) else {
        return Ok(());
    };
    if n == 2 {
        writeln!(out, "t,x,y,z")?;
    } else {
        let cols: Vec<String> = (0..n).flat_map(|i| (0..n).map(move |j| format!("re_{i}{j},im_{i}{j}"))).collect();
        writeln!(out, "t,{}", cols.join(","))?;
    }
    for (t, rho) in samples {
        if rho.dim() != n {
            return Err(Error::Dimension(format!("sample at t = {t} is {}x{0}, expected {n}x{n}", rho.dim())));
        }
        if n == 2 {
            let (x, y, z) = bloch_vector(rho.matrix())?;
            writeln!(out, "{t},{x:e},{y:e},{z:e}")?;
        } else {
            let vals: Vec<String> = rho.matrix().transpose().iter().map(|z| format!("{:e},{:e}", z.re, z.im)).collect();
            writeln!(out, "{t},{}", vals.join(","))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {

    #[test]
    fn time_series_columns() {
        let rho = DensityMatrix::maximally_mixed(2);
        let mut buf = Vec::new();
        write_time_series(&[(0.0, rho.clone()), (1.0, rho)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("t,x,y,z"));
        assert_eq!(text.lines().count(), 3);
        let mut buf = Vec::new();
        write_time_series(&[(0.0, DensityMatrix::maximally_mixed(3))], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap().split(',').count(), 19);
    }

    use super::*;
    use crate::linalg::{max_abs, pauli_x};

    fn basis_state(n: usize, k: usize) -> StateVector {
        let mut v = CVector::zeros(n);
        v[k] = c(1.0, 0.0);
        StateVector::new(v).unwrap()
    }

    #[test]
    fn rabi_half_period() {
        let delta = 1.3;
        let h = TimeDependentHamiltonian::constant(pauli_x() * c(delta / 2.0, 0.)).unwrap();
        let psi =
            evolve_unitary(&h, &basis_state(2, 0), 0.0, std::f64::consts::PI / delta, &IntegratorConfig::default())
                .unwrap();
        // exp(-i π σx / 2) |0⟩ = -i |1⟩
        assert!(psi.vector()[0].norm() < 1e-8);
        assert!((psi.vector()[1] - c(0.0, -1.0)).norm() < 1e-8);
    }

    #[test]
    fn zero_hamiltonian_leaves_state() {
        let h = TimeDependentHamiltonian::constant(CMatrix::zeros(2, 2)).unwrap();
        let psi0 = StateVector::normalized(CVector::from_vec(vec![c(0.6, 0.1), c(0.2, -0.7)])).unwrap();
        let psi = evolve_unitary(&h, &psi0, -3.0, 4.0, &IntegratorConfig::default()).unwrap();
        assert!((psi.vector() - psi0.vector()).norm() < 1e-14);
    }

    #[test]
    fn state_validation() {
        assert!(StateVector::new(CVector::from_vec(vec![c(1.0, 0.), c(1.0, 0.)])).is_err());
        assert!(StateVector::normalized(CVector::zeros(2)).is_err());
        let not_psd = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.)]);
        assert!(matches!(DensityMatrix::new(not_psd), Err(Error::StateIntegrity(_))));
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(2, 2) * c(0.5, 0.)).is_ok());
    }

    #[test]
    fn bloch_vector_conventions() {
        let up = basis_state(2, 0).projector();
        assert_eq!(bloch_vector(up.matrix()).unwrap(), (0.0, 0.0, 1.0));
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(bloch_vector(mixed.matrix()).unwrap(), (0.0, 0.0, 0.0));
        assert!(matches!(bloch_vector(&CMatrix::identity(3, 3)), Err(Error::Dimension(_))));
        let psi = StateVector::normalized(CVector::from_vec(vec![c(0.3, 0.2), c(-0.5, 0.9)])).unwrap();
        let (x, y, z) = bloch_vector(psi.projector().matrix()).unwrap();
        let (xp, yp, zp) = bloch_vector_pure(psi.vector());
        assert!((x - xp).abs() < 1e-15 && (y - yp).abs() < 1e-15 && (z - zp).abs() < 1e-15);
    }

    #[test]
    fn threshold_streams_are_reproducible() {
        let a: Vec<f64> = (0..4).map(|_| draw_threshold(&mut trajectory_rng(9, 3))).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let mut r0 = trajectory_rng(9, 0);
        let mut r1 = trajectory_rng(9, 1);
        assert_ne!(draw_threshold(&mut r0), draw_threshold(&mut r1));
        assert!(max_abs(&CMatrix::zeros(1, 1)) == 0.0);
    }
}
