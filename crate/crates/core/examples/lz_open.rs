use std::sync::Arc;

use superlind::*;

fn main() -> Result<()> {
    let h = lz_hamiltonian(LzParams::new(1.0 / 3.0, 1.0)?);
    let grid = TimeGrid::auto(&h, -75.0, 75.0, 0.01)?;
    let frames = Arc::new(superadiabatic_frames(&h, 4, grid)?);
    let psi0 = StateVector::new(frames.frame(0).ground())?;
    let gen = LindbladGenerator::new(frames, CouplingOperator::sigma_z(), ohmic_spectrum(0.05, 5.0, 0.5)?)?;
    let run = evolve_lindblad(&gen, &DensityMatrix::pure(&psi0), -75.0, 75.0, &IntegratorConfig::default(), &[])?;
    let (x, y, z) = bloch_vector(run.state.matrix())?;
    println!("final Bloch vector ({x:.4}, {y:.4}, {z:.4})");
    Ok(())
}
