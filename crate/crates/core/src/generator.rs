//! Time-dependent secular Lindblad generator built on a frame trajectory.
//!
//! In the frame basis `{φ_α}` the operators are
//! `L₀ = √γ(0) Σ_α A_αα |φ_α⟩⟨φ_α|` and `L_αβ = √γ(ω_αβ) A_αβ |φ_α⟩⟨φ_β|`
//! with `ω_αβ = E_β - E_α`, so `|φ_g⟩⟨φ_e|` relaxes at `γ(+gap)` and the
//! reverse process excites at `γ(-gap)`.

use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::frames::{instantaneous_frames, FrameTrajectory};
use crate::linalg::{c, commutator, hermiticity_error, CMatrix, CVector, C64, I};
use crate::model::{BathSpectrum, CouplingOperator, TimeDependentHamiltonian};

/// Input states may deviate from Hermiticity by at most this much.
pub const STATE_HERMITIAN_TOL: f64 = 1e-8;

/// Rates and matrix elements of the dissipator at one grid frame.
#[derive(Debug, Clone)]
pub(crate) struct FrameChannels {
    pub basis: CMatrix,
    /// `⟨φ_α|A|φ_β⟩`.
    pub elements: CMatrix,
    /// `√γ(0) A_αα` (real).
    pub dephasing: Vec<f64>,
    /// `r_αβ = γ(ω_αβ) |A_αβ|²`, zero on the diagonal.
    pub rates: Vec<Vec<f64>>,
    /// `Σ_{α≠β} r_αβ`, the escape rate out of `β`.
    pub escape: Vec<f64>,
    /// Diagonal of `H_LS` in the frame basis.
    pub lamb: Vec<f64>,
    /// `H_LS - (i/2) Σ L†L` in the lab basis.
    pub non_hermitian: CMatrix,
}

impl FrameChannels {
    fn build(
        basis: &CMatrix,
        energies: &[f64],
        coupling: &CouplingOperator,
        spectrum: &BathSpectrum,
        lamb_shift: bool,
        time: f64,
    ) -> Result<Self> {
        let n = basis.ncols();
        let elements = basis.adjoint() * coupling.matrix() * basis;
        let gamma = |w: f64| -> Result<f64> {
            let g = spectrum.gamma(w);
            if !(g >= 0.0 && g.is_finite()) {
                return Err(domain(format!(
                    "bath rate γ({w}) = {g} at t = {time} is not a finite non-negative number"
                )));
            }
            Ok(g)
        };
        let g0 = gamma(0.0)?;
        let dephasing: Vec<f64> = (0..n).map(|a| g0.sqrt() * elements[(a, a)].re).collect();
        let mut rates = vec![vec![0.0; n]; n];
        let mut escape = vec![0.0; n];
        let mut lamb = vec![0.0; n];
        for a in 0..n {
            for b in 0..n {
                let omega = energies[b] - energies[a];
                let weight = elements[(a, b)].norm_sqr();
                if lamb_shift {
                    lamb[b] += spectrum.shift(omega) * weight;
                }
                if a != b && weight > 0.0 {
                    let r = gamma(omega)? * weight;
                    rates[a][b] = r;
                    escape[b] += r;
                }
            }
        }
        let diag =
            CVector::from_iterator(n, (0..n).map(|a| C64::new(lamb[a], -0.5 * (dephasing[a].powi(2) + escape[a]))));
        let non_hermitian = basis * CMatrix::from_diagonal(&diag) * basis.adjoint();
        Ok(Self { basis: basis.clone(), elements, dephasing, rates, escape, lamb, non_hermitian })
    }

    /// Dissipator plus Lamb-shift commutator, evaluated in the frame basis.
    fn dissipate(&self, rho: &CMatrix) -> CMatrix {
        let n = self.basis.ncols();
        let u = &self.basis;
        let r = u.adjoint() * rho * u;
        let mut d = CMatrix::zeros(n, n);
        for m in 0..n {
            for k in 0..n {
                let dl = self.dephasing[m] - self.dephasing[k];
                let decay = 0.5 * dl * dl + 0.5 * (self.escape[m] + self.escape[k]);
                let shift = self.lamb[m] - self.lamb[k];
                d[(m, k)] = r[(m, k)] * C64::new(-decay, -shift);
            }
            let gain: f64 = (0..n).filter(|&b| b != m).map(|b| self.rates[m][b] * r[(b, b)].re).sum();
            d[(m, m)] += gain;
        }
        u * d * u.adjoint()
    }
}

/// Explicit Lindblad operators at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladOps {
    pub dephasing: CMatrix,
    /// `((α, β), L_αβ)` for every ordered pair `α ≠ β`.
    pub transitions: Vec<((usize, usize), CMatrix)>,
    pub lamb_shift: CMatrix,
}

/// Which frames the dissipator acts in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMode {
    SuperAdiabatic(usize),
    Instantaneous,
}

/// Right-hand side of the secular master equation on a frame trajectory.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    hamiltonian: TimeDependentHamiltonian,
    frames: Arc<FrameTrajectory>,
    coupling: CouplingOperator,
    spectrum: BathSpectrum,
    lamb_shift: bool,
    channels: Arc<Vec<FrameChannels>>,
}

impl LindbladGenerator {
    /// Generator with the Lamb shift disabled.
    pub fn new(frames: Arc<FrameTrajectory>, coupling: CouplingOperator, spectrum: BathSpectrum) -> Result<Self> {
        Self::build(frames, coupling, spectrum, false)
    }

    fn build(
        frames: Arc<FrameTrajectory>,
        coupling: CouplingOperator,
        spectrum: BathSpectrum,
        lamb_shift: bool,
    ) -> Result<Self> {
        if coupling.dim() != frames.dim() {
            return Err(Error::Dimension(format!(
                "coupling operator is {0}x{0}, system is {1}x{1}",
                coupling.dim(),
                frames.dim()
            )));
        }
        let channels = frames
            .frames()
            .iter()
            .map(|f| FrameChannels::build(&f.basis, &f.quasi_energies, &coupling, &spectrum, lamb_shift, f.time))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            hamiltonian: frames.hamiltonian().clone(),
            frames,
            coupling,
            spectrum,
            lamb_shift,
            channels: Arc::new(channels),
        })
    }

    pub fn with_lamb_shift(self, enabled: bool) -> Result<Self> {
        if enabled == self.lamb_shift {
            return Ok(self);
        }
        Self::build(self.frames, self.coupling, self.spectrum, enabled)
    }

    /// The same bath acting in the instantaneous eigenbasis of `H(t)`.
    pub fn instantaneous_mode(&self) -> Result<Self> {
        if self.frames.order() == 0 {
            return Ok(self.clone());
        }
        let frames = instantaneous_frames(&self.hamiltonian, *self.frames.grid())?;
        Self::build(Arc::new(frames), self.coupling.clone(), self.spectrum.clone(), self.lamb_shift)
    }

    pub fn mode(&self) -> BasisMode {
        match self.frames.order() {
            0 => BasisMode::Instantaneous,
            j => BasisMode::SuperAdiabatic(j),
        }
    }

    pub fn hamiltonian(&self) -> &TimeDependentHamiltonian {
        &self.hamiltonian
    }

    pub fn frames(&self) -> &FrameTrajectory {
        &self.frames
    }

    pub fn spectrum(&self) -> &BathSpectrum {
        &self.spectrum
    }

    pub fn coupling(&self) -> &CouplingOperator {
        &self.coupling
    }

    pub fn lamb_shift_enabled(&self) -> bool {
        self.lamb_shift
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub(crate) fn channels_at(&self, t: f64) -> Result<&FrameChannels> {
        Ok(&self.channels[self.frames.grid().nearest(t)?])
    }

    pub fn lindblad_ops(&self, t: f64) -> Result<LindbladOps> {
        let ch = self.channels_at(t)?;
        let n = self.dim();
        let col = |a: usize| ch.basis.column(a).into_owned();
        let mut dephasing = CMatrix::zeros(n, n);
        let mut lamb_shift = CMatrix::zeros(n, n);
        for a in 0..n {
            let p = col(a) * col(a).adjoint();
            dephasing += &p * c(ch.dephasing[a], 0.0);
            lamb_shift += &p * c(ch.lamb[a], 0.0);
        }
        let frame = &self.frames.frames()[self.frames.grid().nearest(t)?];
        let mut transitions = Vec::with_capacity(n * (n - 1));
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let omega = frame.quasi_energies[b] - frame.quasi_energies[a];
                let amp = self.spectrum.gamma(omega).max(0.0).sqrt();
                transitions.push(((a, b), col(a) * col(b).adjoint() * (ch.elements[(a, b)] * amp)));
            }
        }
        Ok(LindbladOps { dephasing, transitions, lamb_shift })
    }

    /// `ρ̇` for a Hermitian `ρ` at time `t`.
    pub fn me_rhs(&self, rho: &CMatrix, t: f64) -> Result<CMatrix> {
        let err = hermiticity_error(rho);
        if !(err <= STATE_HERMITIAN_TOL) {
            return Err(Error::StateIntegrity(format!("density matrix not Hermitian (|ρ - ρ†| = {err:e})")));
        }
        self.rhs_unchecked(rho, t)
    }

    pub(crate) fn rhs_unchecked(&self, rho: &CMatrix, t: f64) -> Result<CMatrix> {
        let ch = self.channels_at(t)?;
        let h = self.hamiltonian.at(t);
        Ok(commutator(&h, rho) * (-I) + ch.dissipate(rho))
    }

    /// `H + H_LS - (i/2) Σ L†L` for jump unravelling.
    pub(crate) fn effective_hamiltonian(&self, t: f64) -> Result<CMatrix> {
        let ch = self.channels_at(t)?;
        Ok(self.hamiltonian.at(t) + &ch.non_hermitian)
    }
}
