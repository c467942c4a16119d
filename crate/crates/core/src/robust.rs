//! Robust total-MMSE joint precoder/receiver design from statistical CSI.
//!
//! Each user `j` sees `y_j = A_j^H H_j sum_k B_k x_k + A_j^H n_j`. Averaging the
//! squared error over the channel uncertainty gives the closed form
//!
//! ```text
//! MSE_j = tr(A_j^H Hbar_j S Hbar_j^H A_j) + s2 tr(A_j^H A_j)
//!       - 2 Re tr(A_j^H Hbar_j B_j) + L
//!       + tr(A_j^H R_rj A_j) tr(S R_t),            S = sum_k B_k B_k^H
//! ```
//!
//! which is minimized under `tr(S) <= P` by alternating exact minimizations
//! over the receivers (unconstrained) and the precoders (Lagrangian with the
//! multiplier found by bisection on an eigen-reduced power equation).

use rand::Rng;

use crate::channel::ChannelStats;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, HermitianEigen, C64};

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;
pub const DEFAULT_BISECTION_TOL: f64 = 1e-10;
const MAX_BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Stop once `sum_k ||A_k' - A_k||_F^2 + ||B_k' - B_k||_F^2 < epsilon`.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Relative tolerance on the power mismatch of the multiplier root.
    pub bisection_tol: f64,
    /// Total transmit power budget `P`.
    pub power: f64,
    /// Per-antenna noise variance `sigma_n^2`.
    pub noise_var: f64,
    /// Streams per user `L`.
    pub streams: usize,
}

impl SolverSettings {
    pub fn new(power: f64, noise_var: f64, streams: usize) -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            bisection_tol: DEFAULT_BISECTION_TOL,
            power,
            noise_var,
            streams,
        }
    }

    /// `SNR = P / sigma_n^2`.
    pub fn from_snr_db(power: f64, snr_db: f64, streams: usize) -> Self {
        Self::new(power, noise_var_for_snr(power, snr_db), streams)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if !(self.bisection_tol > 0.0) {
            return Err(Error::invalid("bisection_tol", "must be positive"));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::invalid("power", "must be positive and finite"));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(Error::invalid("noise_var", "must be positive and finite"));
        }
        if self.streams == 0 {
            return Err(Error::invalid("streams", "must be at least 1"));
        }
        Ok(())
    }
}

pub fn noise_var_for_snr(power: f64, snr_db: f64) -> f64 {
    power * 10f64.powf(-snr_db / 10.0)
}

/// Output of the alternating design.
#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverDesign {
    /// `B_k`, each `M x L`.
    pub precoders: Vec<CMat>,
    /// `A_k`, each `N_k x L`.
    pub receivers: Vec<CMat>,
    /// Multiplier used for the final precoder step.
    pub lambda: f64,
    pub iterations: usize,
    /// Objective value after each full iteration.
    pub tmse_trace: Vec<f64>,
    /// False when `max_iterations` ran out before the stopping rule held.
    pub converged: bool,
}

impl TransceiverDesign {
    pub fn users(&self) -> usize {
        self.precoders.len()
    }

    pub fn streams(&self) -> usize {
        self.precoders.first().map_or(0, |b| b.ncols())
    }

    /// `tr(sum_k B_k B_k^H)`.
    pub fn transmit_power(&self) -> f64 {
        self.precoders.iter().map(linalg::frobenius_sq).sum()
    }

    pub fn tmse(&self, stats: &[ChannelStats], noise_var: f64) -> Result<f64> {
        tmse(&self.precoders, &self.receivers, stats, noise_var)
    }
}

fn check_shapes(precoders: &[CMat], receivers: &[CMat], stats: &[ChannelStats]) -> Result<()> {
    let k = stats.len();
    if k == 0 {
        return Err(Error::Shape("at least one user is required".into()));
    }
    if precoders.len() != k || receivers.len() != k {
        return Err(Error::Shape(format!(
            "{k} users but {} precoders and {} receivers",
            precoders.len(),
            receivers.len()
        )));
    }
    let l = precoders[0].ncols();
    for (i, ((b, a), s)) in precoders.iter().zip(receivers).zip(stats).enumerate() {
        if b.nrows() != s.tx_dim() || b.ncols() != l {
            return Err(Error::Shape(format!(
                "precoder {i} is {}x{}, expected {}x{l}",
                b.nrows(),
                b.ncols(),
                s.tx_dim()
            )));
        }
        if a.nrows() != s.rx_dim() || a.ncols() != l {
            return Err(Error::Shape(format!(
                "receiver {i} is {}x{}, expected {}x{l}",
                a.nrows(),
                a.ncols(),
                s.rx_dim()
            )));
        }
    }
    Ok(())
}

/// `S = sum_k B_k B_k^H`.
pub fn transmit_covariance(precoders: &[CMat]) -> CMat {
    let m = precoders[0].nrows();
    precoders
        .iter()
        .fold(linalg::zeros(m, m), |acc, b| acc + b * b.adjoint())
}

fn user_mse(
    s: &CMat,
    precoder: &CMat,
    receiver: &CMat,
    stats: &ChannelStats,
    noise_var: f64,
) -> f64 {
    let a_h = receiver.adjoint();
    let ah_hbar = &a_h * stats.mean();
    let signal = linalg::trace_re(&(&ah_hbar * s * ah_hbar.adjoint()));
    let noise = noise_var * linalg::frobenius_sq(receiver);
    let cross = linalg::trace_re(&(&ah_hbar * precoder));
    let uncertainty = linalg::trace_re(&(&a_h * stats.rx_corr() * receiver))
        * linalg::trace_re(&(s * stats.tx_corr()));
    signal + noise - 2.0 * cross + receiver.ncols() as f64 + uncertainty
}

/// Closed-form average MSE of user `j`.
pub fn per_user_mse(
    precoders: &[CMat],
    receivers: &[CMat],
    stats: &[ChannelStats],
    noise_var: f64,
    j: usize,
) -> Result<f64> {
    check_shapes(precoders, receivers, stats)?;
    if j >= stats.len() {
        return Err(Error::Shape(format!(
            "user index {j} out of range for {} users",
            stats.len()
        )));
    }
    let s = transmit_covariance(precoders);
    Ok(user_mse(&s, &precoders[j], &receivers[j], &stats[j], noise_var))
}

/// Closed-form total average MSE, `sum_j MSE_j`.
pub fn tmse(
    precoders: &[CMat],
    receivers: &[CMat],
    stats: &[ChannelStats],
    noise_var: f64,
) -> Result<f64> {
    check_shapes(precoders, receivers, stats)?;
    let s = transmit_covariance(precoders);
    Ok(precoders
        .iter()
        .zip(receivers)
        .zip(stats)
        .map(|((b, a), st)| user_mse(&s, b, a, st, noise_var))
        .sum())
}

/// `TMSE + lambda (tr(S) - P)`.
pub fn lagrangian(
    precoders: &[CMat],
    receivers: &[CMat],
    stats: &[ChannelStats],
    noise_var: f64,
    lambda: f64,
    power: f64,
) -> Result<f64> {
    let total = tmse(precoders, receivers, stats, noise_var)?;
    let used: f64 = precoders.iter().map(linalg::frobenius_sq).sum();
    Ok(total + lambda * (used - power))
}

/// Receiver of `user` for fixed precoders:
/// `A = (Hbar S Hbar^H + tr(S R_t) R_r + s2 I)^{-1} Hbar B_user`.
pub fn receiver_update(
    precoders: &[CMat],
    user: usize,
    stats: &ChannelStats,
    noise_var: f64,
) -> Result<CMat> {
    let b = precoders.get(user).ok_or_else(|| {
        Error::Shape(format!(
            "user index {user} out of range for {} precoders",
            precoders.len()
        ))
    })?;
    if precoders.iter().any(|p| p.nrows() != stats.tx_dim()) {
        return Err(Error::Shape("precoder rows must equal transmit antennas".into()));
    }
    let s = transmit_covariance(precoders);
    let hbar = stats.mean();
    let n = stats.rx_dim();
    let system = hbar * &s * hbar.adjoint()
        + stats.rx_corr() * C64::new(linalg::trace_re(&(&s * stats.tx_corr())), 0.0)
        + linalg::identity(n) * C64::new(noise_var, 0.0);
    linalg::solve_hpd(&system, &(hbar * b), "receiver update")
}

/// `X = sum_k Hbar_k^H A_k A_k^H Hbar_k` and
/// `Y = tr(sum_k A_k A_k^H R_rk) R_t`.
pub fn precoder_terms(receivers: &[CMat], stats: &[ChannelStats]) -> Result<(CMat, CMat)> {
    if receivers.len() != stats.len() || stats.is_empty() {
        return Err(Error::Shape(format!(
            "{} receivers for {} users",
            receivers.len(),
            stats.len()
        )));
    }
    let m = stats[0].tx_dim();
    let mut x = linalg::zeros(m, m);
    let mut coupling = 0.0;
    for (a, st) in receivers.iter().zip(stats) {
        if a.nrows() != st.rx_dim() || st.tx_dim() != m {
            return Err(Error::Shape(format!(
                "receiver is {}x{} for a {}x{} channel",
                a.nrows(),
                a.ncols(),
                st.rx_dim(),
                st.tx_dim()
            )));
        }
        let hh_a = st.mean().adjoint() * a;
        x += &hh_a * hh_a.adjoint();
        coupling += linalg::trace_re(&(a.adjoint() * st.rx_corr() * a));
    }
    let y = stats[0].tx_corr() * C64::new(coupling, 0.0);
    Ok((x, y))
}

fn precoder_rhs(receivers: &[CMat], stats: &[ChannelStats]) -> Vec<CMat> {
    receivers
        .iter()
        .zip(stats)
        .map(|(a, st)| st.mean().adjoint() * a)
        .collect()
}

/// Precoders for fixed receivers and multiplier:
/// `B_i = (X + Y + lambda I)^{-1} Hbar_i^H A_i`, one shared factorization.
pub fn precoder_update(receivers: &[CMat], stats: &[ChannelStats], lambda: f64) -> Result<Vec<CMat>> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda", format!("must be >= 0, got {lambda}")));
    }
    let (x, y) = precoder_terms(receivers, stats)?;
    let rhs = precoder_rhs(receivers, stats);
    if rhs.iter().all(|r| linalg::max_abs(r) == 0.0) && lambda > 0.0 {
        return Ok(rhs);
    }
    let m = x.nrows();
    let system = x + y + linalg::identity(m) * C64::new(lambda, 0.0);
    let l = rhs[0].ncols();
    // Stack all right-hand sides so the factorization is shared.
    let stacked = CMat::from_fn(m, l * rhs.len(), |r, c| rhs[c / l][(r, c % l)]);
    let solved = linalg::solve_hpd(&system, &stacked, "precoder update")?;
    Ok((0..rhs.len())
        .map(|k| solved.columns(k * l, l).into_owned())
        .collect())
}

/// Transmit power `Phi(lambda) = tr(X (X + Y + lambda I)^{-2})` in the
/// eigenbasis of `X + Y = U D U^H`:
/// `Phi(lambda) = sum_n [U^H X U]_nn / (d_n + lambda)^2`.
#[derive(Debug, Clone)]
pub struct PowerEquation {
    eig: HermitianEigen,
    /// `[U^H X U]_nn`.
    weights: Vec<f64>,
    trace_x: f64,
}

impl PowerEquation {
    pub fn new(x: &CMat, y: &CMat) -> Result<Self> {
        let eig = HermitianEigen::new(&(x + y))?.into_psd()?;
        let projected = eig.vectors.adjoint() * x * &eig.vectors;
        let weights = projected.diagonal().iter().map(|z| z.re.max(0.0)).collect();
        Ok(Self {
            eig,
            weights,
            trace_x: linalg::trace_re(x),
        })
    }

    pub fn from_receivers(receivers: &[CMat], stats: &[ChannelStats]) -> Result<Self> {
        let (x, y) = precoder_terms(receivers, stats)?;
        Self::new(&x, &y)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn trace_x(&self) -> f64 {
        self.trace_x
    }

    /// Power drawn by the precoders at multiplier `lambda`. At `lambda = 0`
    /// the null space of `X + Y` is dropped (pseudo-inverse), unless `X`
    /// has weight there, in which case the power is unbounded.
    pub fn power(&self, lambda: f64) -> f64 {
        let tol = self.eig.zero_tol();
        let mut total = 0.0;
        for (&d, &w) in self.eig.values.iter().zip(&self.weights) {
            let denom = d + lambda;
            if denom <= tol {
                if w > tol {
                    return f64::INFINITY;
                }
                continue;
            }
            total += w / (denom * denom);
        }
        total
    }

    /// `(lambda_lower, lambda_upper)` from replacing every `d_n` by
    /// `d_max` and `d_min` respectively.
    pub fn brackets(&self, power: f64) -> (f64, f64) {
        let s = (self.trace_x / power).sqrt();
        ((s - self.eig.max()).max(0.0), (s - self.eig.min()).max(0.0))
    }

    /// Smallest multiplier whose power does not exceed the budget, to
    /// relative accuracy `tol` on the power when the budget binds.
    pub fn solve(&self, power: f64, tol: f64) -> f64 {
        if self.trace_x <= 0.0 || self.power(0.0) <= power {
            return 0.0;
        }
        let (mut lo, mut hi) = self.brackets(power);
        let mut p_hi = self.power(hi);
        if p_hi > power * (1.0 + tol) {
            // no root in the bracket: constraint inactive
            return 0.0;
        }
        for _ in 0..MAX_BISECTION_STEPS {
            if (p_hi - power).abs() <= tol * power {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let p_mid = self.power(mid);
            if p_mid > power {
                lo = mid;
            } else {
                hi = mid;
                p_hi = p_mid;
            }
        }
        hi
    }

    /// `B_i = U (D + lambda)^+ U^H Hbar_i^H A_i`. Used when the multiplier is
    /// zero and `X + Y` is singular.
    fn pseudo_inverse_precoders(&self, rhs: &[CMat], lambda: f64) -> Vec<CMat> {
        let tol = self.eig.zero_tol();
        let inv = self
            .eig
            .map(|d| if d + lambda > tol { 1.0 / (d + lambda) } else { 0.0 });
        rhs.iter().map(|r| &inv * r).collect()
    }
}

/// Multiplier of the sum-power constraint for fixed receivers.
pub fn solve_lambda(receivers: &[CMat], stats: &[ChannelStats], power: f64, tol: f64) -> Result<f64> {
    if !(power > 0.0) {
        return Err(Error::invalid("power", "must be positive"));
    }
    Ok(PowerEquation::from_receivers(receivers, stats)?.solve(power, tol))
}

/// Direction shared by the robust and the mean-only designs: the latter
/// simply runs this on statistics with the uncertainty removed.
pub(crate) fn alternate<R: Rng + ?Sized>(
    stats: &[ChannelStats],
    settings: &SolverSettings,
    rng: &mut R,
) -> Result<TransceiverDesign> {
    settings.validate()?;
    if stats.is_empty() {
        return Err(Error::Shape("at least one user is required".into()));
    }
    let m = stats[0].tx_dim();
    if stats.iter().any(|s| s.tx_dim() != m) {
        return Err(Error::Shape("all users must share the transmit array".into()));
    }
    let l = settings.streams;
    let sigma2 = settings.noise_var;

    let mut precoders: Vec<CMat> = stats
        .iter()
        .map(|_| linalg::complex_gaussian(m, l, rng))
        .collect();
    let scale = (settings.power / precoders.iter().map(linalg::frobenius_sq).sum::<f64>()).sqrt();
    for b in &mut precoders {
        *b *= C64::new(scale, 0.0);
    }
    let mut receivers = stats
        .iter()
        .enumerate()
        .map(|(k, st)| receiver_update(&precoders, k, st, sigma2))
        .collect::<Result<Vec<_>>>()?;

    let mut design = TransceiverDesign {
        precoders: Vec::new(),
        receivers: Vec::new(),
        lambda: 0.0,
        iterations: 0,
        tmse_trace: Vec::with_capacity(settings.max_iterations),
        converged: false,
    };

    for iteration in 1..=settings.max_iterations {
        let equation = PowerEquation::from_receivers(&receivers, stats)?;
        let lambda = equation.solve(settings.power, settings.bisection_tol);
        let next_precoders = if equation.trace_x() <= 0.0 {
            precoders.iter().map(|b| linalg::zeros(b.nrows(), b.ncols())).collect()
        } else {
            match precoder_update(&receivers, stats, lambda) {
                Ok(b) => b,
                Err(Error::Singular { .. }) if lambda == 0.0 => {
                    equation.pseudo_inverse_precoders(&precoder_rhs(&receivers, stats), 0.0)
                }
                Err(e) => return Err(e),
            }
        };
        let next_receivers = stats
            .iter()
            .enumerate()
            .map(|(k, st)| receiver_update(&next_precoders, k, st, sigma2))
            .collect::<Result<Vec<_>>>()?;

        let change: f64 = next_receivers
            .iter()
            .zip(&receivers)
            .map(|(a1, a0)| linalg::frobenius_sq(&(a1 - a0)))
            .chain(
                next_precoders
                    .iter()
                    .zip(&precoders)
                    .map(|(b1, b0)| linalg::frobenius_sq(&(b1 - b0))),
            )
            .sum();

        precoders = next_precoders;
        receivers = next_receivers;
        design.lambda = lambda;
        design.iterations = iteration;
        design
            .tmse_trace
            .push(tmse(&precoders, &receivers, stats, sigma2)?);
        if change < settings.epsilon {
            design.converged = true;
            break;
        }
    }

    design.precoders = precoders;
    design.receivers = receivers;
    Ok(design)
}

/// Robust design: alternating minimization of the closed-form average MSE
/// under the sum-power constraint. The random initial precoders are drawn
/// from `rng`, so the seed fully determines the result.
pub fn design<R: Rng + ?Sized>(
    stats: &[ChannelStats],
    settings: &SolverSettings,
    rng: &mut R,
) -> Result<TransceiverDesign> {
    alternate(stats, settings, rng)
}
