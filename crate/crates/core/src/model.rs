//! System Hamiltonians, the system–bath coupling operator and bath spectra.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::linalg::{c, hermiticity_error, pauli_x, pauli_z, CMatrix};

/// Tolerance for Hermiticity of user-supplied operators.
pub const HERMITIAN_TOL: f64 = 1e-12;

type MatrixFn = dyn Fn(f64) -> CMatrix + Send + Sync;
type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// An `N×N` Hermitian matrix-valued function of time (ħ = 1).
#[derive(Clone)]
pub struct TimeDependentHamiltonian {
    dim: usize,
    eval: Arc<MatrixFn>,
}

impl TimeDependentHamiltonian {
    pub fn from_fn<F>(dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        if dim < 2 {
            return Err(domain(format!("Hamiltonian dimension must be at least 2, got {dim}")));
        }
        let h = Self { dim, eval: Arc::new(f) };
        // Probe one point so obviously malformed evaluators fail early.
        h.checked(0.0)?;
        Ok(h)
    }

    /// A time-independent Hamiltonian.
    pub fn constant(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!("{}x{} Hamiltonian is not square", m.nrows(), m.ncols())));
        }
        let dim = m.nrows();
        Self::from_fn(dim, move |_| m.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, t: f64) -> CMatrix {
        (self.eval)(t)
    }

    /// Evaluates `H(t)` and verifies shape and Hermiticity.
    pub fn checked(&self, t: f64) -> Result<CMatrix> {
        let m = self.at(t);
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::Dimension(format!(
                "H({t}) is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                self.dim,
                self.dim
            )));
        }
        let err = hermiticity_error(&m);
        if err >= HERMITIAN_TOL {
            return Err(domain(format!("H({t}) is not Hermitian (|H - H†| = {err:e})")));
        }
        Ok(m)
    }
}

impl fmt::Debug for TimeDependentHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDependentHamiltonian").field("dim", &self.dim).finish_non_exhaustive()
    }
}

/// Landau–Zener sweep parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzParams {
    velocity: f64,
    gap: f64,
}

impl LzParams {
    pub fn new(velocity: f64, gap: f64) -> Result<Self> {
        if !(velocity.is_finite() && velocity > 0.0) {
            return Err(domain(format!("sweep velocity must be positive and finite, got {velocity}")));
        }
        if !(gap.is_finite() && gap > 0.0) {
            return Err(domain(format!("gap must be positive and finite, got {gap}")));
        }
        Ok(Self { velocity, gap })
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Instantaneous level splitting `√(v²t² + Δ²)`.
    pub fn splitting(&self, t: f64) -> f64 {
        (self.velocity * t).hypot(self.gap)
    }

    /// Adiabatic parameter of the sweep at time `t`, `vΔ / (2 (v²t² + Δ²)^{3/2})`.
    pub fn adiabatic_parameter(&self, t: f64) -> f64 {
        self.velocity * self.gap / (2.0 * self.splitting(t).powi(3))
    }
}

/// `H(t) = ½ [[-vt, Δ], [Δ, vt]]`.
pub fn lz_hamiltonian(p: LzParams) -> TimeDependentHamiltonian {
    let sx = pauli_x() * c(0.5 * p.gap, 0.0);
    let sz = pauli_z();
    TimeDependentHamiltonian { dim: 2, eval: Arc::new(move |t| &sx - &sz * c(0.5 * p.velocity * t, 0.0)) }
}

/// The system operator `A` in the coupling `A ⊗ B`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOperator(CMatrix);

impl CouplingOperator {
    pub fn new(a: CMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension("coupling operator is not square".into()));
        }
        let err = hermiticity_error(&a);
        if err >= HERMITIAN_TOL {
            return Err(domain(format!("coupling operator is not Hermitian (|A - A†| = {err:e})")));
        }
        Ok(Self(a))
    }

    pub fn sigma_z() -> Self {
        Self(pauli_z())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

/// How the exponential cutoff of the Ohmic spectrum treats negative frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffConvention {
    /// `e^{-ω/ω_c}` for every ω; grows for ω < 0 and breaks detailed balance by `e^{2ω/ω_c}`.
    #[default]
    Literal,
    /// `e^{-|ω|/ω_c}`; satisfies `γ(-ω) = e^{-ω/T} γ(ω)` exactly.
    Symmetric,
}

#[derive(Clone)]
pub enum SpectrumKind {
    Ohmic { gamma0: f64, cutoff: f64, temperature: f64, convention: CutoffConvention },
    PureDephasing { gamma0: f64 },
    Custom(Arc<ScalarFn>),
}

impl fmt::Debug for SpectrumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumKind::Ohmic { gamma0, cutoff, temperature, convention } => f
                .debug_struct("Ohmic")
                .field("gamma0", gamma0)
                .field("cutoff", cutoff)
                .field("temperature", temperature)
                .field("convention", convention)
                .finish(),
            SpectrumKind::PureDephasing { gamma0 } => f.debug_struct("PureDephasing").field("gamma0", gamma0).finish(),
            SpectrumKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// One-sided bath correlation spectrum: relaxation rate `γ(ω)` and shift `S(ω)`.
#[derive(Clone, Debug)]
pub struct BathSpectrum {
    kind: SpectrumKind,
    shift: Option<ShiftFn>,
}

#[derive(Clone)]
struct ShiftFn(Arc<ScalarFn>);

impl fmt::Debug for ShiftFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ShiftFn")
    }
}

/// Ohmic spectrum `γ₀ ω e^{-ω/ω_c} / (1 - e^{-ω/T})` with the literal cutoff.
pub fn ohmic_spectrum(gamma0: f64, cutoff: f64, temperature: f64) -> Result<BathSpectrum> {
    ohmic_spectrum_with(gamma0, cutoff, temperature, CutoffConvention::Literal)
}

pub fn ohmic_spectrum_with(
    gamma0: f64,
    cutoff: f64,
    temperature: f64,
    convention: CutoffConvention,
) -> Result<BathSpectrum> {
    if !(gamma0.is_finite() && gamma0 >= 0.0) {
        return Err(domain(format!("gamma0 must be non-negative, got {gamma0}")));
    }
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(domain(format!("cutoff frequency must be positive, got {cutoff}")));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(domain(format!("temperature must be non-negative, got {temperature}")));
    }
    Ok(BathSpectrum { kind: SpectrumKind::Ohmic { gamma0, cutoff, temperature, convention }, shift: None })
}

/// Rate only at zero frequency: a slow environment that dephases without
/// exchanging energy.
pub fn dephasing_spectrum(gamma0: f64) -> Result<BathSpectrum> {
    if !(gamma0.is_finite() && gamma0 >= 0.0) {
        return Err(domain(format!("dephasing rate must be non-negative, got {gamma0}")));
    }
    Ok(BathSpectrum { kind: SpectrumKind::PureDephasing { gamma0 }, shift: None })
}

impl BathSpectrum {
    /// Arbitrary rate function. Generators reject negative rates when they
    /// evaluate it.
    pub fn custom<F>(gamma: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { kind: SpectrumKind::Custom(Arc::new(gamma)), shift: None }
    }

    /// Identically zero spectrum (closed dynamics).
    pub fn zero() -> Self {
        Self { kind: SpectrumKind::PureDephasing { gamma0: 0.0 }, shift: None }
    }

    /// Attaches a Lamb-shift function `S(ω)`.
    pub fn with_shift<F>(mut self, shift: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.shift = Some(ShiftFn(Arc::new(shift)));
        self
    }

    pub fn kind(&self) -> &SpectrumKind {
        &self.kind
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            SpectrumKind::Ohmic { .. } => "ohmic",
            SpectrumKind::PureDephasing { .. } => "dephasing",
            SpectrumKind::Custom(_) => "custom",
        }
    }

    pub fn gamma(&self, omega: f64) -> f64 {
        match &self.kind {
            SpectrumKind::Ohmic { gamma0, cutoff, temperature, convention } => {
                ohmic_rate(*gamma0, *cutoff, *temperature, *convention, omega)
            }
            SpectrumKind::PureDephasing { gamma0 } => {
                if omega == 0.0 {
                    *gamma0
                } else {
                    0.0
                }
            }
            SpectrumKind::Custom(f) => f(omega),
        }
    }

    pub fn shift(&self, omega: f64) -> f64 {
        self.shift.as_ref().map_or(0.0, |s| (s.0)(omega))
    }

    /// True when every rate is zero (the dissipator vanishes).
    pub fn is_zero(&self) -> bool {
        match &self.kind {
            SpectrumKind::Ohmic { gamma0, .. } | SpectrumKind::PureDephasing { gamma0 } => *gamma0 == 0.0,
            SpectrumKind::Custom(_) => false,
        }
    }
}

fn ohmic_rate(gamma0: f64, cutoff: f64, temperature: f64, convention: CutoffConvention, omega: f64) -> f64 {
    let damping = match convention {
        CutoffConvention::Literal => (-omega / cutoff).exp(),
        CutoffConvention::Symmetric => (-omega.abs() / cutoff).exp(),
    };
    if temperature == 0.0 {
        return if omega > 0.0 { gamma0 * omega * damping } else { 0.0 };
    }
    let x = omega / temperature;
    // ω / (1 - e^{-ω/T}) = T · x / (1 - e^{-x}); use expm1 and a series near 0.
    let bose = if x.abs() < 1e-8 { temperature * (1.0 + 0.5 * x) } else { -omega / (-x).exp_m1() };
    gamma0 * bose * damping
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigh, max_abs};

    #[test]
    fn lz_at_zero_time_is_half_sigma_x() {
        let h = lz_hamiltonian(LzParams::new(1.0, 1.0).unwrap());
        let m = h.checked(0.0).unwrap();
        assert!(max_abs(&(m.clone() - pauli_x() * c(0.5, 0.))) < 1e-15);
        let (vals, _) = hermitian_eigh(&m);
        assert!((vals[0] + 0.5).abs() < 1e-15 && (vals[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lz_at_t_two() {
        let h = lz_hamiltonian(LzParams::new(1.0, 1.0).unwrap());
        let expected = CMatrix::from_row_slice(2, 2, &[c(-1., 0.), c(0.5, 0.), c(0.5, 0.), c(1., 0.)]);
        assert!(max_abs(&(h.at(2.0) - expected)) < 1e-15);
    }

    #[test]
    fn lz_splitting_matches_eigenvalues() {
        let p = LzParams::new(0.37, 1.3).unwrap();
        let h = lz_hamiltonian(p);
        for &t in &[-50.0, -3.1, 0.0, 0.2, 7.7] {
            let (vals, _) = hermitian_eigh(&h.at(t));
            assert!(((vals[1] - vals[0]) - p.splitting(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn lz_rejects_bad_parameters() {
        assert!(matches!(LzParams::new(0.0, 1.0), Err(Error::ParameterDomain(_))));
        assert!(matches!(LzParams::new(1.0, -1.0), Err(Error::ParameterDomain(_))));
        assert!(LzParams::new(f64::NAN, 1.0).is_err());
        assert!(LzParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn hamiltonian_validation() {
        assert!(TimeDependentHamiltonian::constant(CMatrix::zeros(1, 1)).is_err());
        let bad = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(TimeDependentHamiltonian::constant(bad).is_err());
        assert!(CouplingOperator::new(CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 1.), c(0., 1.), c(0., 0.)]))
            .is_err());
    }

    #[test]
    fn ohmic_zero_frequency_limit() {
        let s = ohmic_spectrum(0.01, 5.0, 0.5).unwrap();
        assert!((s.gamma(0.0) - 0.005).abs() < 1e-15);
        assert!((s.gamma(1e-6) - 0.005).abs() < 1e-8);
        assert!((s.gamma(-1e-6) - 0.005).abs() < 1e-8);
    }

    #[test]
    fn ohmic_zero_temperature() {
        let s = ohmic_spectrum(1.0, 5.0, 0.0).unwrap();
        assert!((s.gamma(1.0) - (-0.2f64).exp()).abs() < 1e-15);
        assert!((s.gamma(1.0) - 0.8187).abs() < 1e-4);
        assert_eq!(s.gamma(-1.0), 0.0);
        assert_eq!(s.gamma(0.0), 0.0);
    }

    #[test]
    fn ohmic_rejects_negative_strength() {
        assert!(matches!(ohmic_spectrum(-0.1, 5.0, 0.5), Err(Error::ParameterDomain(_))));
        assert!(ohmic_spectrum(0.1, 0.0, 0.5).is_err());
        assert!(ohmic_spectrum(0.1, 5.0, -1.0).is_err());
    }

    #[test]
    fn ohmic_downward_rates_dominate() {
        let s = ohmic_spectrum(0.1, 5.0, 0.5).unwrap();
        for &w in &[0.01, 0.3, 1.0, 4.0, 20.0] {
            assert!(s.gamma(w) > 0.0);
            assert!(s.gamma(-w) < s.gamma(w));
            assert!(s.gamma(-w) >= 0.0);
        }
    }

    #[test]
    fn detailed_balance_depends_on_convention() {
        let (g0, wc, t) = (0.1, 5.0, 0.5);
        let sym = ohmic_spectrum_with(g0, wc, t, CutoffConvention::Symmetric).unwrap();
        let lit = ohmic_spectrum(g0, wc, t).unwrap();
        for &w in &[0.2, 1.0, 3.0] {
            let kms = (-w / t).exp();
            assert!((sym.gamma(-w) / sym.gamma(w) - kms).abs() < 1e-12 * kms.max(1e-300) + 1e-14);
            let lit_ratio = lit.gamma(-w) / lit.gamma(w);
            assert!((lit_ratio / kms - (2.0 * w / wc).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn dephasing_spectrum_values() {
        let s = dephasing_spectrum(0.003).unwrap();
        assert_eq!(s.gamma(0.0), 0.003);
        assert_eq!(s.gamma(1.0), 0.0);
        assert_eq!(s.shift(0.0), 0.0);
        assert!(dephasing_spectrum(0.0).unwrap().is_zero());
        assert!(matches!(dephasing_spectrum(-1.0), Err(Error::ParameterDomain(_))));
    }

    #[test]
    fn shift_is_user_supplied() {
        let s = dephasing_spectrum(0.0).unwrap().with_shift(|w| 0.5 * w);
        assert_eq!(s.shift(2.0), 1.0);
    }
}
