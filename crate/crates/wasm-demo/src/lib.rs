//! Browser front-end for the robust transceiver design. The exported
//! functions take plain numbers and return JSON strings; the Rust versions
//! underneath are ordinary functions so they can be tested natively.

use robust_mimo::config::Scheme;
use robust_mimo::link::{self, SweepPoint};
use robust_mimo::{Error, RicianFactor, SimConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// SNR grid of the BER curve.
pub const SNR_GRID_DB: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
/// Rician factors of the MSE sweep.
pub const W_GRID: [f64; 7] = [1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0];

fn base_config(n: usize, rho_tx: f64, seed: u64, trials: usize) -> SimConfig {
    SimConfig {
        n,
        rho_tx,
        seed,
        n_trials: trials,
        // lighter link simulation than the CLI defaults, to stay interactive
        n_real: 10,
        n_sym: 50,
        ..SimConfig::default()
    }
}

#[derive(Debug, Serialize)]
pub struct SchemeDesign {
    pub scheme: &'static str,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective the scheme itself minimizes, per user, after each iteration.
    pub trace: Vec<f64>,
    /// Closed-form average MSE per user under the true statistics.
    pub true_mse: f64,
    pub transmit_power: f64,
}

#[derive(Debug, Serialize)]
pub struct DesignSummary {
    pub w: String,
    pub snr_db: f64,
    pub n: usize,
    pub noise_var: f64,
    pub schemes: Vec<SchemeDesign>,
}

/// Designs both schemes for one random channel mean (trial 0 of `seed`).
pub fn design_summary(w: f64, snr_db: f64, n: usize, rho_tx: f64, seed: u64) -> Result<DesignSummary, Error> {
    let config = base_config(n, rho_tx, seed, 1);
    config.validate()?;
    let w = RicianFactor::new(w)?;
    let stats = link::trial_stats(&config, n, w, 0)?;
    let settings = link::solver_settings(&config, snr_db);
    let users = config.k as f64;
    let schemes = config
        .schemes
        .iter()
        .map(|&scheme| {
            let d = link::design_scheme(scheme, &stats, &settings, seed, 0)?;
            Ok(SchemeDesign {
                scheme: scheme.tag(),
                lambda: d.lambda,
                iterations: d.iterations,
                converged: d.converged,
                trace: d.tmse_trace.iter().map(|t| t / users).collect(),
                true_mse: d.tmse(&stats, settings.noise_var)? / users,
                transmit_power: d.transmit_power(),
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(DesignSummary {
        w: w.to_string(),
        snr_db,
        n,
        noise_var: settings.noise_var,
        schemes,
    })
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub scheme: &'static str,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Sweep {
    pub sweep_name: &'static str,
    pub x: Vec<f64>,
    pub curves: Vec<Curve>,
}

fn collect_curves(points: &[SweepPoint], schemes: &[Scheme]) -> Vec<Curve> {
    schemes
        .iter()
        .map(|&s| {
            let mine: Vec<&SweepPoint> = points.iter().filter(|p| p.scheme == s).collect();
            Curve {
                scheme: s.tag(),
                mean: mine.iter().map(|p| p.mean()).collect(),
                stderr: mine.iter().map(|p| p.stderr()).collect(),
            }
        })
        .collect()
}

/// Average BER of both schemes over the SNR grid.
pub fn ber_curve(w: f64, n: usize, trials: usize, seed: u64) -> Result<Sweep, Error> {
    let config = SimConfig {
        w_list: vec![RicianFactor::new(w)?],
        snr_db_list: SNR_GRID_DB.to_vec(),
        ..base_config(n, 0.9, seed, trials)
    };
    let points = link::experiment_ber_vs_snr(&config)?;
    Ok(Sweep {
        sweep_name: "snr_db",
        x: SNR_GRID_DB.to_vec(),
        curves: collect_curves(&points, &config.schemes),
    })
}

/// Simulated per-user MSE of both schemes over the Rician-factor grid.
pub fn mse_vs_w(snr_db: f64, trials: usize, seed: u64) -> Result<Sweep, Error> {
    let config = SimConfig {
        w_list: W_GRID.iter().map(|&w| RicianFactor::Finite(w)).collect(),
        fixed_snr_db: snr_db,
        ..base_config(2, 0.9, seed, trials)
    };
    let points = link::experiment_mse_vs_w(&config)?;
    Ok(Sweep {
        sweep_name: "w",
        x: W_GRID.to_vec(),
        curves: collect_curves(&points, &config.schemes),
    })
}

fn to_json<T: Serialize>(r: Result<T, Error>) -> Result<String, JsValue> {
    let value = r.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = designSummary)]
pub fn design_summary_js(w: f64, snr_db: f64, n: usize, rho_tx: f64, seed: u32) -> Result<String, JsValue> {
    to_json(design_summary(w, snr_db, n, rho_tx, u64::from(seed)))
}

#[wasm_bindgen(js_name = berCurve)]
pub fn ber_curve_js(w: f64, n: usize, trials: usize, seed: u32) -> Result<String, JsValue> {
    to_json(ber_curve(w, n, trials, u64::from(seed)))
}

#[wasm_bindgen(js_name = mseVsW)]
pub fn mse_vs_w_js(snr_db: f64, trials: usize, seed: u32) -> Result<String, JsValue> {
    to_json(mse_vs_w(snr_db, trials, u64::from(seed)))
}
