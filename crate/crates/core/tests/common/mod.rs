//! Independent oracles shared by the integration tests. Nothing here calls
//! the solver internals it is meant to check.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_mimo::robust::lagrangian;
use robust_mimo::{
    exp_correlation, linalg, CMat, ChannelStats, ChannelStatsRaw, RicianFactor, C64,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `k` users with i.i.d. `CN(0,1)` raw means and exponential correlations.
pub fn random_stats(
    k: usize,
    n: usize,
    m: usize,
    w: RicianFactor,
    rho_rx: f64,
    rho_tx: f64,
    rng: &mut impl Rng,
) -> Vec<ChannelStats> {
    let rx = exp_correlation(n, rho_rx).unwrap();
    let tx = exp_correlation(m, rho_tx).unwrap();
    (0..k)
        .map(|_| {
            ChannelStatsRaw::new(linalg::complex_gaussian(n, m, rng), rx.clone(), tx.clone(), w)
                .unwrap()
                .to_equivalent()
        })
        .collect()
}

/// Log-uniform draw in `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// `X` and `Y` assembled entry by entry from their definitions.
pub fn direct_terms(receivers: &[CMat], stats: &[ChannelStats]) -> (CMat, CMat) {
    let m = stats[0].tx_dim();
    let mut x = CMat::zeros(m, m);
    let mut c = 0.0;
    for (a, st) in receivers.iter().zip(stats) {
        let aah = a * a.adjoint();
        x += st.mean().adjoint() * &aah * st.mean();
        c += (aah * st.rx_corr()).trace().re;
    }
    (x, stats[0].tx_corr() * re(c))
}

/// `tr(X (X + Y + lambda I)^{-2})` through a general LU inverse.
pub fn direct_power(x: &CMat, y: &CMat, lambda: f64) -> f64 {
    let m = x.nrows();
    let inv = (x + y + CMat::identity(m, m) * re(lambda))
        .try_inverse()
        .expect("invertible system");
    (x * &inv * &inv).trace().re
}

/// Root of `direct_power(lambda) = p` by the Illinois variant of regula
/// falsi, or 0 when the constraint is inactive.
pub fn oracle_lambda(x: &CMat, y: &CMat, p: f64) -> f64 {
    let g = |l: f64| direct_power(x, y, l) - p;
    let (mut a, mut fa) = (0.0, g(0.0));
    if fa <= 0.0 {
        return 0.0;
    }
    let mut b = 1.0;
    let mut fb = g(b);
    while fb > 0.0 {
        a = b;
        fa = fb;
        b *= 2.0;
        fb = g(b);
    }
    let mut side = 0i8;
    for _ in 0..500 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = g(c);
        if fc == 0.0 || (b - a).abs() < 1e-15 * (1.0 + c.abs()) {
            return c;
        }
        if fc > 0.0 {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    0.5 * (a + b)
}

/// Unit-energy QPSK symbol from two uniform bits.
pub fn random_qpsk(rng: &mut impl Rng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re_part = if rng.random_bool(0.5) { s } else { -s };
    let im_part = if rng.random_bool(0.5) { s } else { -s };
    C64::new(re_part, im_part)
}

/// Per-draw total squared error `sum_j ||x_j - y_j||^2`, each draw with a
/// fresh channel per user, fresh symbols and fresh noise.
pub fn mc_squared_errors(
    precoders: &[CMat],
    receivers: &[CMat],
    stats: &[ChannelStats],
    noise_var: f64,
    draws: usize,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let k = stats.len();
    let l = precoders[0].ncols();
    let noise_std = noise_var.sqrt();
    (0..draws)
        .map(|_| {
            let x: Vec<CMat> = (0..k)
                .map(|_| CMat::from_fn(l, 1, |_, _| random_qpsk(rng)))
                .collect();
            let mut tx = CMat::zeros(precoders[0].nrows(), 1);
            for (b, xk) in precoders.iter().zip(&x) {
                tx += b * xk;
            }
            let mut total = 0.0;
            for j in 0..k {
                let h = stats[j].sample(rng).h;
                let noise = linalg::complex_gaussian(h.nrows(), 1, rng) * re(noise_std);
                let y = receivers[j].adjoint() * (h * &tx + noise);
                total += (&x[j] - y).norm_squared();
            }
            total
        })
        .collect()
}

pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Central-difference gradient of `f` with respect to the real and
/// imaginary part of every entry of every matrix in `vars`.
pub fn fd_gradient(vars: &[CMat], h: f64, f: impl Fn(&[CMat]) -> f64) -> Vec<f64> {
    let mut grad = Vec::new();
    let mut work = vars.to_vec();
    for v in 0..vars.len() {
        for idx in 0..vars[v].len() {
            for step in [C64::new(h, 0.0), C64::new(0.0, h)] {
                let orig = work[v][idx];
                work[v][idx] = orig + step;
                let up = f(&work);
                work[v][idx] = orig - step;
                let down = f(&work);
                work[v][idx] = orig;
                grad.push((up - down) / (2.0 * h));
            }
        }
    }
    grad
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Stationarity residual of the Lagrangian at `(precoders, receivers,
/// lambda)`: the largest partial derivative, relative to the largest
/// partial derivative of the objective alone (floored at 1).
pub fn kkt_residual(
    precoders: &[CMat],
    receivers: &[CMat],
    stats: &[ChannelStats],
    noise_var: f64,
    lambda: f64,
    power: f64,
) -> f64 {
    let k = precoders.len();
    let mut vars = precoders.to_vec();
    vars.extend_from_slice(receivers);
    let split = |v: &[CMat]| (v[..k].to_vec(), v[k..].to_vec());
    let lag = fd_gradient(&vars, 1e-5, |v| {
        let (b, a) = split(v);
        lagrangian(&b, &a, stats, noise_var, lambda, power).unwrap()
    });
    let obj = fd_gradient(&vars, 1e-5, |v| {
        let (b, a) = split(v);
        lagrangian(&b, &a, stats, noise_var, 0.0, power).unwrap()
    });
    max_abs(&lag) / max_abs(&obj).max(1.0)
}

/// Smallest eigenvalue of a Hermitian matrix via a real symmetric embedding
/// `[[Re, -Im], [Im, Re]]`, whose spectrum is that of the input doubled.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    let n = m.nrows();
    let embed = DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, c| {
        let z: Complex64 = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let sym = (&embed + embed.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}
