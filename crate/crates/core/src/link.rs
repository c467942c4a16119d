//! QPSK Monte Carlo link-level simulation of the designed transceivers.
//!
//! A trial draws one set of channel means, designs both schemes from the
//! statistics, then pushes `n_sym` symbol vectors through each of `n_real`
//! channel realizations. Both schemes see the same realizations, symbols and
//! noise (common random numbers), so their per-trial outcomes can be paired.

use std::ops::{Add, AddAssign};

use rand::Rng;

use crate::baseline;
use crate::channel::{exp_correlation, ChannelRealization, ChannelStats, ChannelStatsRaw, RicianFactor};
use crate::config::{Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::robust::{self, SolverSettings, TransceiverDesign};
use crate::streams::{trial_rng, Purpose};

/// Gray-mapped QPSK: `(b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`.
pub fn qpsk_modulate(bits: &[bool]) -> Result<Vec<C64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::invalid(
            "bits",
            format!("QPSK needs an even number of bits, got {}", bits.len()),
        ));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|pair| qpsk_symbol(pair[0], pair[1]))
        .collect())
}

fn qpsk_symbol(b0: bool, b1: bool) -> C64 {
    let level = |b: bool| if b { -1.0 } else { 1.0 };
    C64::new(level(b0), level(b1)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Per-component sign slicer.
pub fn qpsk_demodulate(symbols: &[C64]) -> Vec<bool> {
    symbols
        .iter()
        .flat_map(|s| [s.re < 0.0, s.im < 0.0])
        .collect()
}

/// Squared errors are accumulated in fixed point with this many fractional
/// bits so that merging results is exactly associative.
const SSE_FRACTION_BITS: i32 = 40;

/// Counts accumulated over a block of transmissions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TrialResult {
    pub bit_errors: u64,
    pub bits_sent: u64,
    /// Symbol-vector slots: each slot carries one `x_k` for every user.
    pub symbol_vectors: u64,
    sse_fixed: u128,
}

impl TrialResult {
    fn record_error(&mut self, squared_error: f64) {
        self.sse_fixed += (squared_error * 2f64.powi(SSE_FRACTION_BITS)).round() as u128;
    }

    /// `sum ||x_k - y_k||^2` over all users and slots.
    pub fn sum_squared_error(&self) -> f64 {
        self.sse_fixed as f64 * 2f64.powi(-SSE_FRACTION_BITS)
    }

    pub fn ber(&self) -> f64 {
        if self.bits_sent == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits_sent as f64
        }
    }

    /// Empirical total MSE per slot (summed over users).
    pub fn tmse_per_slot(&self) -> f64 {
        if self.symbol_vectors == 0 {
            0.0
        } else {
            self.sum_squared_error() / self.symbol_vectors as f64
        }
    }
}

impl AddAssign for TrialResult {
    fn add_assign(&mut self, rhs: Self) {
        self.bit_errors += rhs.bit_errors;
        self.bits_sent += rhs.bits_sent;
        self.symbol_vectors += rhs.symbol_vectors;
        self.sse_fixed += rhs.sse_fixed;
    }
}

impl Add for TrialResult {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl std::iter::Sum for TrialResult {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Sends `symbol_vectors` slots through one channel realization per user:
/// `y_i = A_i^H H_i sum_k B_k x_k + A_i^H n_i`, then slices each stream.
pub fn run_trial<R: Rng + ?Sized>(
    design: &TransceiverDesign,
    realizations: &[ChannelRealization],
    noise_var: f64,
    symbol_vectors: usize,
    rng: &mut R,
) -> Result<TrialResult> {
    let k = design.users();
    let l = design.streams();
    if realizations.len() != k || design.receivers.len() != k {
        return Err(Error::Shape(format!(
            "{} realizations for a {k}-user design",
            realizations.len()
        )));
    }
    let m = design.precoders[0].nrows();
    // stacked precoder [B_1 ... B_K], M x KL
    let stacked = CMat::from_fn(m, k * l, |r, c| design.precoders[c / l][(r, c % l)]);
    let mut effective = Vec::with_capacity(k);
    let mut filters = Vec::with_capacity(k);
    for (a, real) in design.receivers.iter().zip(realizations) {
        if real.h.nrows() != a.nrows() || real.h.ncols() != m {
            return Err(Error::Shape(format!(
                "channel is {}x{}, receiver expects {}x{m}",
                real.h.nrows(),
                real.h.ncols(),
                a.nrows()
            )));
        }
        let a_h = a.adjoint();
        effective.push(&a_h * &real.h * &stacked);
        filters.push(a_h);
    }

    let noise_std = noise_var.sqrt();
    let mut result = TrialResult::default();
    let mut bits = vec![false; 2 * k * l];
    let mut x = vec![C64::new(0.0, 0.0); k * l];
    let mut noise = Vec::new();
    for _ in 0..symbol_vectors {
        for b in bits.iter_mut() {
            *b = rng.random_bool(0.5);
        }
        for (s, pair) in x.iter_mut().zip(bits.chunks_exact(2)) {
            *s = qpsk_symbol(pair[0], pair[1]);
        }
        for user in 0..k {
            let n_rx = filters[user].ncols();
            noise.clear();
            noise.extend((0..n_rx).map(|_| linalg::complex_gaussian_scalar(rng) * noise_std));
            let mut squared_error = 0.0;
            for stream in 0..l {
                let mut y = C64::new(0.0, 0.0);
                for (c, xc) in x.iter().enumerate() {
                    y += effective[user][(stream, c)] * xc;
                }
                for (r, nr) in noise.iter().enumerate() {
                    y += filters[user][(stream, r)] * nr;
                }
                let idx = user * l + stream;
                squared_error += (x[idx] - y).norm_sqr();
                let (d0, d1) = (y.re < 0.0, y.im < 0.0);
                result.bit_errors += u64::from(d0 != bits[2 * idx]) + u64::from(d1 != bits[2 * idx + 1]);
            }
            result.record_error(squared_error);
        }
        result.bits_sent += (2 * k * l) as u64;
        result.symbol_vectors += 1;
    }
    Ok(result)
}

/// Mean and standard error of the mean.
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean and standard error of `a[i] - b[i]` for paired samples.
pub fn paired_difference(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_stderr(&diff)
}

/// One sweep point of one scheme, with the per-trial metric kept so that
/// schemes can be compared trial by trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub experiment: String,
    pub scheme: Scheme,
    pub sweep_name: &'static str,
    pub sweep_value: f64,
    pub samples: Vec<f64>,
}

impl SweepPoint {
    pub fn mean(&self) -> f64 {
        mean_stderr(&self.samples).0
    }

    pub fn stderr(&self) -> f64 {
        mean_stderr(&self.samples).1
    }
}

#[cfg(feature = "parallel")]
fn map_trials<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n as u64).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(u64) -> Result<T>,
{
    (0..n as u64).map(f).collect()
}

/// Channel statistics of one trial: i.i.d. `CN(0, 1)` normalized means, the
/// exponential correlation models of the config, and Rician factor `w`.
pub fn trial_stats(config: &SimConfig, n_rx: usize, w: RicianFactor, trial: u64) -> Result<Vec<ChannelStats>> {
    let mut rng = trial_rng(config.seed, trial, Purpose::ChannelMeans);
    let rx = exp_correlation(n_rx, config.rho_rx)?;
    let tx = exp_correlation(config.m, config.rho_tx)?;
    (0..config.k)
        .map(|_| {
            let mean0 = linalg::complex_gaussian(n_rx, config.m, &mut rng);
            Ok(ChannelStatsRaw::new(mean0, rx.clone(), tx.clone(), w)?.to_equivalent())
        })
        .collect()
}

pub fn solver_settings(config: &SimConfig, snr_db: f64) -> SolverSettings {
    let mut settings = SolverSettings::from_snr_db(config.power, snr_db, config.l);
    settings.epsilon = config.epsilon;
    settings.max_iterations = config.max_iterations;
    settings
}

/// Designs one scheme for one trial. Both schemes start from the same
/// random initial precoders.
pub fn design_scheme(
    scheme: Scheme,
    stats: &[ChannelStats],
    settings: &SolverSettings,
    master_seed: u64,
    trial: u64,
) -> Result<TransceiverDesign> {
    let mut rng = trial_rng(master_seed, trial, Purpose::DesignInit);
    match scheme {
        Scheme::Robust => robust::design(stats, settings, &mut rng),
        Scheme::Baseline => baseline::design_baseline(stats, settings, &mut rng),
    }
}

/// Link simulation of one design over `n_real` realizations of the true
/// channel statistics.
pub fn simulate_design(
    config: &SimConfig,
    stats: &[ChannelStats],
    design: &TransceiverDesign,
    noise_var: f64,
    trial: u64,
) -> Result<TrialResult> {
    let mut channel_rng = trial_rng(config.seed, trial, Purpose::Realizations);
    let mut symbol_rng = trial_rng(config.seed, trial, Purpose::Symbols);
    let mut total = TrialResult::default();
    for _ in 0..config.n_real {
        let realizations: Vec<ChannelRealization> =
            stats.iter().map(|s| s.sample(&mut channel_rng)).collect();
        total += run_trial(design, &realizations, noise_var, config.n_sym, &mut symbol_rng)?;
    }
    Ok(total)
}

fn link_trial(
    config: &SimConfig,
    n_rx: usize,
    w: RicianFactor,
    snr_db: f64,
    trial: u64,
) -> Result<Vec<TrialResult>> {
    let stats = trial_stats(config, n_rx, w, trial)?;
    let settings = solver_settings(config, snr_db);
    config
        .schemes
        .iter()
        .map(|&scheme| {
            let design = design_scheme(scheme, &stats, &settings, config.seed, trial)?;
            simulate_design(config, &stats, &design, settings.noise_var, trial)
        })
        .collect()
}

fn points_from_trials(
    config: &SimConfig,
    experiment: &str,
    sweep_name: &'static str,
    sweep_value: f64,
    per_trial: &[Vec<TrialResult>],
    metric: impl Fn(&TrialResult) -> f64,
) -> Vec<SweepPoint> {
    config
        .schemes
        .iter()
        .enumerate()
        .map(|(s, &scheme)| SweepPoint {
            experiment: experiment.to_string(),
            scheme,
            sweep_name,
            sweep_value,
            samples: per_trial.iter().map(|t| metric(&t[s])).collect(),
        })
        .collect()
}

pub fn ber_tag(w: RicianFactor) -> String {
    format!("ber-vs-snr:w={w}")
}

pub fn mse_tag(snr_db: f64) -> String {
    format!("mse-vs-w:snr_db={snr_db}")
}

pub fn convergence_tag(w: RicianFactor, snr_db: f64) -> String {
    format!("convergence:w={w},snr_db={snr_db}")
}

/// Average BER versus SNR, one curve per Rician factor and scheme.
pub fn experiment_ber_vs_snr(config: &SimConfig) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let mut points = Vec::new();
    for &w in &config.w_list {
        for &snr_db in &config.snr_db_list {
            let per_trial = map_trials(config.n_trials, |t| link_trial(config, config.n, w, snr_db, t))?;
            points.extend(points_from_trials(
                config,
                &ber_tag(w),
                "snr_db",
                snr_db,
                &per_trial,
                TrialResult::ber,
            ));
        }
    }
    Ok(points)
}

/// Simulated average MSE per user, `E ||x_k - y_k||^2`, versus the Rician
/// factor at `fixed_snr_db`.
pub fn experiment_mse_vs_w(config: &SimConfig) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let snr_db = config.fixed_snr_db;
    let users = config.k as f64;
    let mut points = Vec::new();
    for &w in &config.w_list {
        let per_trial = map_trials(config.n_trials, |t| link_trial(config, config.n, w, snr_db, t))?;
        points.extend(points_from_trials(
            config,
            &mse_tag(snr_db),
            "w",
            w.as_f64(),
            &per_trial,
            |r| r.tmse_per_slot() / users,
        ));
    }
    Ok(points)
}

/// Objective traces of one scheme at one `(w, snr)` over all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub w: RicianFactor,
    pub snr_db: f64,
    pub scheme: Scheme,
    /// `tmse_trace` of each trial's design.
    pub traces: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
}

impl ConvergenceRun {
    pub fn median_iterations(&self) -> f64 {
        let mut it = self.iterations.clone();
        it.sort_unstable();
        let n = it.len();
        match n {
            0 => 0.0,
            _ if n % 2 == 1 => it[n / 2] as f64,
            _ => 0.5 * (it[n / 2 - 1] + it[n / 2]) as f64,
        }
    }

    pub fn mean_iterations(&self) -> f64 {
        self.iterations.iter().sum::<usize>() as f64 / self.iterations.len().max(1) as f64
    }

    /// Per-iteration samples of the per-user objective; a trace that stopped
    /// early holds its final value.
    pub fn points(&self, users: usize) -> Vec<SweepPoint> {
        let depth = self.traces.iter().map(Vec::len).max().unwrap_or(0);
        (0..depth)
            .map(|i| SweepPoint {
                experiment: convergence_tag(self.w, self.snr_db),
                scheme: self.scheme,
                sweep_name: "iteration",
                sweep_value: (i + 1) as f64,
                samples: self
                    .traces
                    .iter()
                    .map(|t| t.get(i).or(t.last()).copied().unwrap_or(f64::NAN) / users as f64)
                    .collect(),
            })
            .collect()
    }
}

/// Convergence of the alternating design for every `(w, snr)` pair.
pub fn convergence_runs(config: &SimConfig) -> Result<Vec<ConvergenceRun>> {
    config.validate()?;
    let mut runs = Vec::new();
    for &w in &config.w_list {
        for &snr_db in &config.snr_db_list {
            let settings = solver_settings(config, snr_db);
            let per_trial = map_trials(config.n_trials, |t| {
                let stats = trial_stats(config, config.n, w, t)?;
                config
                    .schemes
                    .iter()
                    .map(|&s| design_scheme(s, &stats, &settings, config.seed, t))
                    .collect::<Result<Vec<_>>>()
            })?;
            for (s, &scheme) in config.schemes.iter().enumerate() {
                let designs = per_trial.iter().map(|d| &d[s]);
                runs.push(ConvergenceRun {
                    w,
                    snr_db,
                    scheme,
                    traces: designs.clone().map(|d| d.tmse_trace.clone()).collect(),
                    iterations: designs.clone().map(|d| d.iterations).collect(),
                    converged: designs.map(|d| d.converged).collect(),
                });
            }
        }
    }
    Ok(runs)
}

pub fn experiment_convergence(config: &SimConfig) -> Result<Vec<SweepPoint>> {
    Ok(convergence_runs(config)?
        .iter()
        .flat_map(|run| run.points(config.k))
        .collect())
}
