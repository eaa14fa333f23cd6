//! Browser bindings: Bloch paths, Landau–Zener curves and the Ohmic rate.
//!
//! Every export returns a flat `Float64Array`; the `*_rows` helpers hold the
//! logic and are tested natively.

use superlind::experiments::{
    run_fig1, run_lz_sweep, spectrum_table, BathConfig, BathKind, Fig1Config, Mode, SweepConfig,
};
use superlind::{ohmic_spectrum_with, CutoffConvention};
use wasm_bindgen::prelude::*;

/// Largest number of 1/v points one call may request.
pub const MAX_CURVE_POINTS: usize = 40;

/// Rows of `t, inst(x,y,z), superadiabatic(x,y,z), evolved(x,y,z)`.
pub fn bloch_rows(inv_v: f64, order: usize, rows: usize) -> Result<Vec<f64>, String> {
    let cfg = Fig1Config { inv_v, order, max_rows: rows.max(2), ..Fig1Config::default() };
    let p = run_fig1(&cfg).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(p.times.len() * 10);
    for (k, t) in p.times.iter().enumerate() {
        out.push(*t);
        out.extend_from_slice(&p.instantaneous[k]);
        out.extend_from_slice(&p.superadiabatic[k]);
        out.extend_from_slice(&p.evolved[k]);
    }
    Ok(out)
}

/// `(1/v, P_ge)` pairs for an Ohmic bath. `mode` is `superadiabatic`,
/// `instantaneous` or `closed`.
pub fn curve_rows(
    mode: &str,
    gamma0: f64,
    temperature: f64,
    order: usize,
    inv_v_min: f64,
    inv_v_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    let mode = match mode {
        "superadiabatic" => Mode::SuperAdiabatic,
        "instantaneous" => Mode::Instantaneous,
        "closed" => Mode::Closed,
        other => return Err(format!("unknown mode '{other}'")),
    };
    if points == 0 || points > MAX_CURVE_POINTS {
        return Err(format!("points must be between 1 and {MAX_CURVE_POINTS}"));
    }
    let inv_v = if points == 1 {
        vec![inv_v_min]
    } else {
        (0..points).map(|k| inv_v_min + (inv_v_max - inv_v_min) * k as f64 / (points - 1) as f64).collect()
    };
    let cfg = SweepConfig {
        inv_v,
        window: 10.0,
        modes: vec![mode],
        order,
        bath: BathConfig {
            kind: if gamma0 > 0.0 { BathKind::Ohmic } else { BathKind::None },
            gamma0: vec![gamma0],
            cutoff: 5.0,
            temperature: vec![temperature],
            convention: CutoffConvention::Literal,
        },
        ..SweepConfig::default()
    };
    let records = run_lz_sweep(&cfg).map_err(|e| e.to_string())?;
    Ok(records.iter().flat_map(|r| [r.inv_v, r.p_ge]).collect())
}

/// `(ω, γ(ω))` pairs.
pub fn spectrum_rows(
    gamma0: f64,
    cutoff: f64,
    temperature: f64,
    wmin: f64,
    wmax: f64,
    n: usize,
) -> Result<Vec<f64>, String> {
    let s = ohmic_spectrum_with(gamma0, cutoff, temperature, CutoffConvention::Literal).map_err(|e| e.to_string())?;
    let rows = spectrum_table(&s, wmin, wmax, n).map_err(|e| e.to_string())?;
    Ok(rows.iter().flat_map(|r| [r.0, r.1]).collect())
}

#[wasm_bindgen]
pub fn bloch_paths(inv_v: f64, order: usize, rows: usize) -> Result<Vec<f64>, JsError> {
    bloch_rows(inv_v, order, rows).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn lz_curve(
    mode: &str,
    gamma0: f64,
    temperature: f64,
    order: usize,
    inv_v_min: f64,
    inv_v_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    curve_rows(mode, gamma0, temperature, order, inv_v_min, inv_v_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ohmic_rate(
    gamma0: f64,
    cutoff: f64,
    temperature: f64,
    wmin: f64,
    wmax: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    spectrum_rows(gamma0, cutoff, temperature, wmin, wmax, n).map_err(|e| JsError::new(&e))
}
