//! Gauge-fixed instantaneous and super-adiabatic frames on a uniform time grid.
//!
//! Level 0 diagonalises `H(t)`. Level `k + 1` diagonalises the Hamiltonian
//! seen in the moving level-`k` frame, `G_k = U_k† H U_k - i U_k† ∂_t U_k`,
//! and rotates the eigenvectors back to the lab basis. Time derivatives are
//! central finite differences on the grid.

use std::io::Write;

use crate::error::{domain, Error, Result};
use crate::integrate::IntegratorConfig;
use crate::linalg::{anti_hermitian_part, c, hermitian_eigh, hermitian_part, inner, CMatrix, CVector, C64, I};
use crate::model::TimeDependentHamiltonian;
use crate::propagation::{bloch_vector_pure, evolve_unitary, StateVector};

/// Highest super-adiabatic order accepted by [`superadiabatic_frames`].
pub const MAX_ORDER: usize = 12;
/// Relative spectral gap below which a frame counts as degenerate.
pub const GAP_TOLERANCE: f64 = 1e-9;
/// Adjacent frames whose overlap drops below this are rejected outright.
pub const MIN_OVERLAP: f64 = 0.5;

/// Uniform time grid `start + k·step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl TimeGrid {
    /// Grid from `start` to `end` inclusive with `points` samples.
    pub fn uniform(start: f64, end: f64, points: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || points < 2 || end <= start {
            return Err(domain(format!("invalid grid [{start}, {end}] with {points} points")));
        }
        Ok(Self { start, step: (end - start) / (points - 1) as f64, len: points })
    }

    /// Grid with spacing no larger than `max_step`.
    pub fn with_max_step(start: f64, end: f64, max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) {
            return Err(domain(format!("grid step must be positive, got {max_step}")));
        }
        let intervals = ((end - start) / max_step).ceil().max(1.0) as usize;
        Self::uniform(start, end, intervals + 1)
    }

    /// Picks a grid over `[start, end]` fine enough for `h`: successive
    /// Hamiltonians differ by at most `fraction` of the minimum gap (spectral
    /// norm) and adjacent eigenvectors overlap by more than 0.999. The grid is
    /// halved from 64 intervals until both hold.
    pub fn auto(h: &TimeDependentHamiltonian, start: f64, end: f64, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0) {
            return Err(domain(format!("grid tolerance must be positive, got {fraction}")));
        }
        let mut intervals = 64usize;
        loop {
            let grid = Self::uniform(start, end, intervals + 1)?;
            let mats: Vec<CMatrix> = grid.times().map(|t| h.at(t)).collect();
            let eigs: Vec<(Vec<f64>, CMatrix)> = mats.iter().map(hermitian_eigh).collect();
            let min_gap = eigs.iter().map(|(vals, _)| min_spacing(vals)).fold(f64::INFINITY, f64::min);
            let max_spread = eigs.iter().map(|(vals, _)| vals[vals.len() - 1] - vals[0]).fold(0.0, f64::max);
            if min_gap <= GAP_TOLERANCE * max_spread {
                let k = eigs.iter().position(|(v, _)| min_spacing(v) == min_gap).unwrap_or(0);
                return Err(Error::Degeneracy {
                    time: grid.time(k),
                    gap: min_gap,
                    tolerance: GAP_TOLERANCE * max_spread,
                });
            }
            let fine = mats.windows(2).all(|w| spectral_norm(&(&w[1] - &w[0])) <= fraction * min_gap)
                && eigs.windows(2).all(|w| {
                    (0..w[0].1.ncols()).all(|a| {
                        let o: C64 = w[0].1.column(a).dotc(&w[1].1.column(a));
                        o.norm_sqr() > 0.999
                    })
                });
            if fine {
                return Ok(grid);
            }
            intervals *= 2;
            if intervals > 1 << 22 {
                return Err(domain(format!("grid refinement over [{start}, {end}] did not converge")));
            }
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.time(self.len - 1)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.time(k))
    }

    /// Index of the grid point nearest to `t`.
    pub fn nearest(&self, t: f64) -> Result<usize> {
        let slack = 1e-9 * self.step;
        if !(t >= self.start - slack && t <= self.end() + slack) {
            return Err(Error::OutsideGrid { time: t, start: self.start, end: self.end() });
        }
        let k = ((t - self.start) / self.step).round();
        Ok((k.max(0.0) as usize).min(self.len - 1))
    }
}

fn min_spacing(vals: &[f64]) -> f64 {
    vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

fn spectral_norm(m: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigh(&hermitian_part(m));
    vals[0].abs().max(vals[vals.len() - 1].abs())
}

/// Orthonormal basis at one instant, columns sorted by quasi-energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub time: f64,
    pub order: usize,
    pub basis: CMatrix,
    pub quasi_energies: Vec<f64>,
}

impl Frame {
    fn new(time: f64, order: usize, basis: CMatrix, h: &CMatrix) -> Self {
        let quasi_energies = quasi_energies(&basis, h);
        Self { time, order, basis, quasi_energies }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn vector(&self, alpha: usize) -> CVector {
        self.basis.column(alpha).into_owned()
    }

    pub fn ground(&self) -> CVector {
        self.vector(0)
    }

    /// Multiplies column `alpha` by `phase`.
    pub fn rephase(&mut self, alpha: usize, phase: C64) {
        for z in self.basis.column_mut(alpha).iter_mut() {
            *z *= phase;
        }
    }
}

/// `E_α = ⟨φ_α|H|φ_α⟩` for every column of `basis`.
pub fn quasi_energies(basis: &CMatrix, h: &CMatrix) -> Vec<f64> {
    (0..basis.ncols())
        .map(|a| {
            let v = basis.column(a);
            v.dotc(&(h * v)).re
        })
        .collect()
}

/// Fixes the phase of each column of `cur` so that `⟨prev_α|cur_α⟩` is real and positive.
pub fn smooth_gauge(prev: &Frame, cur: Frame) -> Result<Frame> {
    if prev.dim() != cur.dim() {
        return Err(Error::Dimension(format!("frames of dimension {} and {}", prev.dim(), cur.dim())));
    }
    let mut out = cur;
    for a in 0..out.dim() {
        let o: C64 = prev.basis.column(a).dotc(&out.basis.column(a));
        let m = o.norm();
        if m < MIN_OVERLAP {
            return Err(Error::GridTooCoarse { time: out.time, level: a, overlap: m });
        }
        out.rephase(a, o.conj() / m);
    }
    Ok(out)
}

/// Phase convention for the first frame: the largest-magnitude component of
/// every column is real and positive.
fn anchor_gauge(frame: &mut Frame) {
    for a in 0..frame.dim() {
        let col = frame.basis.column(a);
        let (_, pivot) = col.iter().enumerate().fold((0usize, C64::new(0.0, 0.0)), |best, (i, z)| {
            if z.norm() > best.1.norm() + 1e-14 {
                (i, *z)
            } else {
                best
            }
        });
        if pivot.norm() > 0.0 {
            frame.rephase(a, pivot.conj() / pivot.norm());
        }
    }
}

/// A gauge-smooth sequence of frames of one super-adiabatic order.
#[derive(Debug, Clone)]
pub struct FrameTrajectory {
    grid: TimeGrid,
    order: usize,
    frames: Vec<Frame>,
    hamiltonian: TimeDependentHamiltonian,
}

impl FrameTrajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Copy with column `α` of frame `k` multiplied by `phase(k, α)`, which
    /// must have unit modulus. The result is generally not gauge-smooth.
    pub fn regauged(&self, phase: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let mut out = self.clone();
        for (k, f) in out.frames.iter_mut().enumerate() {
            for a in 0..f.dim() {
                let p = phase(k, a);
                if !((p.norm() - 1.0).abs() < 1e-12) {
                    return Err(domain(format!("phase {p} for frame {k}, level {a} is not unimodular")));
                }
                f.rephase(a, p);
            }
        }
        Ok(out)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &Frame {
        &self.frames[k]
    }

    pub fn hamiltonian(&self) -> &TimeDependentHamiltonian {
        &self.hamiltonian
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Frame at the grid point nearest to `t`.
    pub fn nearest(&self, t: f64) -> Result<&Frame> {
        Ok(&self.frames[self.grid.nearest(t)?])
    }

    /// Worst adjacent overlap `|⟨φ_α^k|φ_α^{k+1}⟩|²` and worst `|Im⟨φ_α^k|φ_α^{k+1}⟩|`,
    /// together with whether any overlap had a negative real part.
    pub fn smoothness(&self) -> GaugeSmoothness {
        let mut s = GaugeSmoothness { min_overlap: 1.0, max_imag: 0.0, negative_real: false };
        for w in self.frames.windows(2) {
            for a in 0..self.dim() {
                let o: C64 = w[0].basis.column(a).dotc(&w[1].basis.column(a));
                s.min_overlap = s.min_overlap.min(o.norm_sqr());
                s.max_imag = s.max_imag.max(o.im.abs());
                s.negative_real |= o.re < 0.0;
            }
        }
        s
    }

    /// Dumps `t, order, alpha, energy` (and the Bloch vector of each basis
    /// state when `N = 2`) as CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let two_level = self.dim() == 2;
        writeln!(out, "# bloch convention: x = 2 Re rho01, y = 2 Im rho10, z = rho00 - rho11")?;
        if two_level {
            writeln!(out, "t,order,alpha,energy,x,y,z")?;
        } else {
            writeln!(out, "t,order,alpha,energy")?;
        }
        for f in &self.frames {
            for a in 0..f.dim() {
                write!(out, "{},{},{},{}", f.time, f.order, a, f.quasi_energies[a])?;
                if two_level {
                    let (x, y, z) = bloch_vector_pure(&f.vector(a));
                    write!(out, ",{x},{y},{z}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeSmoothness {
    pub min_overlap: f64,
    pub max_imag: f64,
    pub negative_real: bool,
}

fn check_degeneracy(eigs: &[(Vec<f64>, CMatrix)], grid: &TimeGrid) -> Result<()> {
    let max_spread = eigs.iter().map(|(v, _)| v[v.len() - 1] - v[0]).fold(0.0, f64::max);
    let tol = GAP_TOLERANCE * max_spread;
    for (k, (vals, _)) in eigs.iter().enumerate() {
        let gap = min_spacing(vals);
        if !(gap > tol) {
            return Err(Error::Degeneracy { time: grid.time(k), gap, tolerance: tol });
        }
    }
    Ok(())
}

fn sweep_gauge(mut frames: Vec<Frame>) -> Result<Vec<Frame>> {
    if let Some(first) = frames.first_mut() {
        anchor_gauge(first);
    }
    let mut out: Vec<Frame> = Vec::with_capacity(frames.len());
    for f in frames {
        let f = match out.last() {
            Some(prev) => smooth_gauge(prev, f)?,
            None => f,
        };
        out.push(f);
    }
    Ok(out)
}

/// Order-0 frames: sorted eigenvectors of `H(t_k)` with a smooth gauge.
pub fn instantaneous_frames(h: &TimeDependentHamiltonian, grid: TimeGrid) -> Result<FrameTrajectory> {
    let mats = grid.times().map(|t| h.checked(t)).collect::<Result<Vec<_>>>()?;
    let eigs: Vec<_> = mats.iter().map(hermitian_eigh).collect();
    check_degeneracy(&eigs, &grid)?;
    let frames = eigs
        .into_iter()
        .zip(&mats)
        .enumerate()
        .map(|(k, ((_, vecs), m))| Frame::new(grid.time(k), 0, vecs, m))
        .collect();
    Ok(FrameTrajectory { grid, order: 0, frames: sweep_gauge(frames)?, hamiltonian: h.clone() })
}

/// Finite-difference `∂_t U` at grid index `k` for a sequence of bases.
fn basis_derivative(frames: &[Frame], step: f64, k: usize) -> CMatrix {
    let n = frames.len();
    let u = |i: usize| &frames[i].basis;
    match n {
        0 | 1 => CMatrix::zeros(frames[0].dim(), frames[0].dim()),
        2 => (u(1) - u(0)) / c(step, 0.0),
        _ => {
            if k >= 2 && k + 2 < n {
                (u(k - 2) - u(k + 2) + (u(k + 1) - u(k - 1)) * c(8.0, 0.0)) / c(12.0 * step, 0.0)
            } else if k >= 1 && k + 1 < n {
                (u(k + 1) - u(k - 1)) / c(2.0 * step, 0.0)
            } else if k == 0 {
                (u(1) * c(4.0, 0.0) - u(0) * c(3.0, 0.0) - u(2)) / c(2.0 * step, 0.0)
            } else {
                (u(k) * c(3.0, 0.0) - u(k - 1) * c(4.0, 0.0) + u(k - 2)) / c(2.0 * step, 0.0)
            }
        }
    }
}

/// `K_{αβ} = ⟨φ_α|∂_t φ_β⟩` at grid index `k`.
pub fn frame_couplings(traj: &FrameTrajectory, k: usize) -> CMatrix {
    traj.frames[k].basis.adjoint() * basis_derivative(&traj.frames, traj.grid.step, k)
}

/// `max_{α≠β} |K_{αβ}| / |E_α - E_β|` at grid index `k`.
pub fn adiabatic_parameter(traj: &FrameTrajectory, k: usize) -> Result<f64> {
    let kmat = frame_couplings(traj, k);
    let e = &traj.frames[k].quasi_energies;
    let scale = e.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for a in 0..e.len() {
        for b in 0..e.len() {
            if a == b {
                continue;
            }
            let gap = (e[a] - e[b]).abs();
            if gap <= GAP_TOLERANCE * scale {
                return Err(Error::Degeneracy { time: traj.grid.time(k), gap, tolerance: GAP_TOLERANCE * scale });
            }
            worst = worst.max(kmat[(a, b)].norm() / gap);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticReport {
    pub samples: Vec<f64>,
    pub global: f64,
    pub argmax_time: f64,
    pub recommended_order: usize,
}

/// Samples the adiabatic parameter over the whole trajectory (pass an
/// order-0 trajectory to get the textbook value) and recommends the
/// super-adiabatic order nearest to `1/𝒜`, clamped to `[0, max_order]`.
pub fn adiabatic_report(traj: &FrameTrajectory, max_order: usize) -> Result<AdiabaticReport> {
    let samples = (0..traj.grid.len()).map(|k| adiabatic_parameter(traj, k)).collect::<Result<Vec<_>>>()?;
    let (kmax, global) =
        samples.iter().copied().enumerate().fold((0, 0.0f64), |best, (k, a)| if a > best.1 { (k, a) } else { best });
    let recommended_order = if global <= 1e-12 { 0 } else { ((1.0 / global).round() as usize).min(max_order) };
    Ok(AdiabaticReport { samples, global, argmax_time: traj.grid.time(kmax), recommended_order })
}

/// Frames of super-adiabatic order `order` (order 0 is the instantaneous eigenbasis).
///
/// Each level differentiates the previous one, so the recursion runs on a grid
/// padded by `2·order + 2` points on either side and is then trimmed back to
/// `grid`; the returned frames never rely on one-sided stencils.
pub fn superadiabatic_frames(h: &TimeDependentHamiltonian, order: usize, grid: TimeGrid) -> Result<FrameTrajectory> {
    if order > MAX_ORDER {
        return Err(Error::OrderCap { order, max: MAX_ORDER });
    }
    if order == 0 {
        return instantaneous_frames(h, grid);
    }
    let pad = 2 * order + 2;
    let padded = TimeGrid { start: grid.start - pad as f64 * grid.step, step: grid.step, len: grid.len + 2 * pad };
    let mut traj = instantaneous_frames(h, padded)?;
    let mats: Vec<CMatrix> = padded.times().map(|t| h.at(t)).collect();
    for level in 1..=order {
        let mut eigs = Vec::with_capacity(padded.len());
        for (k, hk) in mats.iter().enumerate() {
            let u = &traj.frames[k].basis;
            let coupling = anti_hermitian_part(&frame_couplings(&traj, k));
            let moving = hermitian_part(&(u.adjoint() * hk * u - coupling * I));
            let (vals, w) = hermitian_eigh(&moving);
            eigs.push((vals, u * w));
        }
        check_degeneracy(&eigs[pad..pad + grid.len()], &grid)?;
        let frames = eigs
            .into_iter()
            .zip(&mats)
            .enumerate()
            .map(|(k, ((_, basis), m))| Frame::new(padded.time(k), level, basis, m))
            .collect();
        traj = FrameTrajectory { grid: padded, order: level, frames: sweep_gauge(frames)?, hamiltonian: h.clone() };
    }
    // Trim and re-anchor so the first kept frame follows the usual phase convention.
    let kept: Vec<Frame> = traj
        .frames
        .drain(pad..pad + grid.len())
        .enumerate()
        .map(|(k, mut f)| {
            f.time = grid.time(k);
            f
        })
        .collect();
    Ok(FrameTrajectory { grid, order, frames: sweep_gauge(kept)?, hamiltonian: h.clone() })
}

/// Leakage of the exact closed evolution out of a trajectory's ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOscillation {
    /// `max_k (1 - |⟨φ_0(t_k)|ψ(t_k)⟩|²)`.
    pub max_population: f64,
    /// Square root of `max_population`: the leaked amplitude.
    pub amplitude: f64,
    pub argmax_time: f64,
}

/// Starts in the ground state of `traj` at its first grid point, evolves it
/// unitarily under `h`, and records the largest population found outside the
/// trajectory's ground state on the grid.
pub fn residual_oscillation(
    h: &TimeDependentHamiltonian,
    traj: &FrameTrajectory,
    cfg: &IntegratorConfig,
) -> Result<ResidualOscillation> {
    let grid = traj.grid;
    let cfg = cfg.with_max_step(grid.step);
    let mut psi = StateVector::new(traj.frames[0].ground())?;
    let mut worst = (0.0f64, grid.start());
    for k in 1..grid.len() {
        psi = evolve_unitary(h, &psi, grid.time(k - 1), grid.time(k), &cfg)?;
        let overlap = inner(&traj.frames[k].ground(), psi.vector()).norm_sqr();
        let leaked = (1.0 - overlap).max(0.0);
        if leaked > worst.0 {
            worst = (leaked, grid.time(k));
        }
    }
    Ok(ResidualOscillation { max_population: worst.0, amplitude: worst.0.sqrt(), argmax_time: worst.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, pauli_x, pauli_z, unitarity_error};
    use crate::model::{lz_hamiltonian, LzParams};

    fn lz(v: f64) -> TimeDependentHamiltonian {
        lz_hamiltonian(LzParams::new(v, 1.0).unwrap())
    }

    fn sample_frame(seed: f64) -> Frame {
        let h = pauli_x() * c(0.4, 0.) + pauli_z() * c(seed, 0.) + crate::linalg::pauli_y() * c(0.2, 0.);
        let (_, vecs) = hermitian_eigh(&h);
        Frame::new(0.0, 0, vecs, &h)
    }

    #[test]
    fn lz_ground_state_at_origin() {
        let grid = TimeGrid::uniform(-1.0, 1.0, 201).unwrap();
        let traj = instantaneous_frames(&lz(1.0), grid).unwrap();
        let f = traj.nearest(0.0).unwrap();
        assert!((f.quasi_energies[0] + 0.5).abs() < 1e-12);
        let g = f.ground();
        let s = 1.0 / 2f64.sqrt();
        let expected = CVector::from_vec(vec![c(s, 0.), c(-s, 0.)]);
        // Fixed up to an overall phase by the smooth gauge.
        assert!((inner(&expected, &g).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lz_late_ground_state_is_diabatic() {
        let grid = TimeGrid::uniform(999.0, 1000.0, 11).unwrap();
        let traj = instantaneous_frames(&lz(1.0), grid).unwrap();
        let f = traj.frame(10);
        // -vt/2 sits on the first diabatic state for t > 0
        assert!(f.ground()[0].norm() > 1.0 - 1e-6);
        let early = instantaneous_frames(&lz(1.0), TimeGrid::uniform(-1000.0, -999.0, 11).unwrap()).unwrap();
        assert!(early.frame(0).ground()[1].norm() > 1.0 - 1e-6);
        assert!((f.quasi_energies[0] + 0.5 * 1000f64.hypot(1.0)).abs() < 1e-9);
    }

    #[test]
    fn constant_hamiltonian_frames_identical() {
        let h = TimeDependentHamiltonian::constant(pauli_x() + pauli_z() * c(0.3, 0.)).unwrap();
        let traj = instantaneous_frames(&h, TimeGrid::uniform(0.0, 5.0, 11).unwrap()).unwrap();
        for f in traj.frames() {
            assert!(max_abs(&(&f.basis - &traj.frame(0).basis)) < 1e-14);
        }
        assert!(max_abs(&frame_couplings(&traj, 4)) < 1e-12);
        let report = adiabatic_report(&traj, MAX_ORDER).unwrap();
        assert!(report.global < 1e-12);
        assert_eq!(report.recommended_order, 0);
    }

    #[test]
    fn degenerate_hamiltonian_rejected() {
        // H = t σ_z crosses at t = 0.
        let h = TimeDependentHamiltonian::from_fn(2, |t| pauli_z() * c(t, 0.)).unwrap();
        let err = instantaneous_frames(&h, TimeGrid::uniform(-1.0, 1.0, 3).unwrap()).unwrap_err();
        match err {
            Error::Degeneracy { time, .. } => assert_eq!(time, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn smooth_gauge_identity_and_phase_removal() {
        let prev = sample_frame(0.3);
        let same = smooth_gauge(&prev, prev.clone()).unwrap();
        assert!(max_abs(&(&same.basis - &prev.basis)) < 1e-15);
        let mut rotated = prev.clone();
        rotated.rephase(1, C64::from_polar(1.0, std::f64::consts::FRAC_PI_3));
        let fixed = smooth_gauge(&prev, rotated).unwrap();
        assert!(max_abs(&(&fixed.basis - &prev.basis)) < 1e-15);
    }

    #[test]
    fn smooth_gauge_rejects_large_jumps() {
        let prev = sample_frame(0.3);
        let mut swapped = prev.clone();
        swapped.basis.swap_columns(0, 1);
        assert!(matches!(smooth_gauge(&prev, swapped), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn lz_coupling_and_adiabatic_parameter_at_origin() {
        for &v in &[1.0, 0.25] {
            let grid = TimeGrid::uniform(-2.0, 2.0, 801).unwrap();
            let traj = instantaneous_frames(&lz(v), grid).unwrap();
            let k = grid.nearest(0.0).unwrap();
            let kmat = frame_couplings(&traj, k);
            assert!((kmat[(0, 1)].norm() - v / 2.0).abs() < 1e-8, "{}", kmat[(0, 1)].norm());
            assert!(kmat[(0, 0)].norm() < 1e-6);
            let a = adiabatic_parameter(&traj, k).unwrap();
            assert!((a - v / 2.0).abs() < 1e-8);
            let report = adiabatic_report(&traj, MAX_ORDER).unwrap();
            assert!(report.argmax_time.abs() < 1e-12);
        }
    }

    #[test]
    fn order_cap_enforced() {
        let grid = TimeGrid::uniform(-1.0, 1.0, 11).unwrap();
        assert!(matches!(superadiabatic_frames(&lz(1.0), MAX_ORDER + 1, grid), Err(Error::OrderCap { .. })));
    }

    #[test]
    fn order_zero_equals_instantaneous() {
        let grid = TimeGrid::uniform(-3.0, 3.0, 301).unwrap();
        let a = instantaneous_frames(&lz(0.5), grid).unwrap();
        let b = superadiabatic_frames(&lz(0.5), 0, grid).unwrap();
        for (x, y) in a.frames().iter().zip(b.frames()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn superadiabatic_frames_unitary_and_consistent() {
        let h = lz(0.2);
        let grid = TimeGrid::auto(&h, -60.0, 60.0, 0.01).unwrap();
        let traj = superadiabatic_frames(&h, 4, grid).unwrap();
        assert_eq!(traj.order(), 4);
        for f in traj.frames() {
            assert!(unitarity_error(&f.basis) < 1e-10);
            let e = quasi_energies(&f.basis, &h.at(f.time));
            for (a, b) in e.iter().zip(&f.quasi_energies) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!(f.quasi_energies[0] < f.quasi_energies[1]);
        }
        let s = traj.smoothness();
        assert!(s.min_overlap > 0.99 && s.max_imag < 0.1 && !s.negative_real);
    }

    #[test]
    fn constant_hamiltonian_superadiabatic_is_eigenbasis() {
        let m = pauli_x() * c(0.7, 0.) + pauli_z() * c(-0.2, 0.);
        let h = TimeDependentHamiltonian::constant(m.clone()).unwrap();
        let grid = TimeGrid::uniform(0.0, 2.0, 21).unwrap();
        let a = instantaneous_frames(&h, grid).unwrap();
        let b = superadiabatic_frames(&h, 3, grid).unwrap();
        for (x, y) in a.frames().iter().zip(b.frames()) {
            for al in 0..2 {
                assert!((inner(&x.vector(al), &y.vector(al)).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_nearest_and_bounds() {
        let g = TimeGrid::uniform(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.nearest(-1.0).unwrap(), 0);
        assert_eq!(g.nearest(0.24).unwrap(), 2);
        assert_eq!(g.nearest(1.0).unwrap(), 4);
        assert!(matches!(g.nearest(1.1), Err(Error::OutsideGrid { .. })));
        assert!(TimeGrid::uniform(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn auto_grid_meets_criteria() {
        let h = lz(0.5);
        let g = TimeGrid::auto(&h, -50.0, 50.0, 0.01).unwrap();
        // ‖ΔH‖ = v·h/2 must be at most 0.01·Δ.
        assert!(0.5 * g.step() / 2.0 <= 0.01 + 1e-12);
        assert!(0.5 * 2.0 * g.step() / 2.0 > 0.01);
    }
}
