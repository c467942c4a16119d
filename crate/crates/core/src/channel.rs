//! Statistical channel state information and channel sampling.
//!
//! The downlink channel to user `i` is a Kronecker-correlated Rician matrix
//!
//! ```text
//! H_i = sqrt(W/(W+1)) H0_i + sqrt(1/(W+1)) R0_r^{1/2} Delta R_t^{1/2}
//!     = Hbar_i + R_r^{1/2} Delta R_t^{1/2}
//! ```
//!
//! where `Delta` is `N_i x M` with i.i.d. `CN(0, 1)` entries. [`ChannelStatsRaw`]
//! holds the first form, [`ChannelStats`] the second (what the transceiver
//! design consumes).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

/// Power ratio between the mean and the scattered component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RicianFactor {
    Finite(f64),
    /// Mean-only channel: no scattered component at all.
    Infinite,
}

impl RicianFactor {
    pub fn new(w: f64) -> Result<Self> {
        if w.is_infinite() && w > 0.0 {
            Ok(RicianFactor::Infinite)
        } else if w.is_finite() && w >= 0.0 {
            Ok(RicianFactor::Finite(w))
        } else {
            Err(Error::invalid("w", format!("must be >= 0 or inf, got {w}")))
        }
    }

    /// `sqrt(W/(W+1))`, the amplitude of the mean component.
    pub fn mean_gain(self) -> f64 {
        match self {
            RicianFactor::Finite(w) => (w / (w + 1.0)).sqrt(),
            RicianFactor::Infinite => 1.0,
        }
    }

    /// `1/(W+1)`, the power of the scattered component.
    pub fn scatter_power(self) -> f64 {
        match self {
            RicianFactor::Finite(w) => 1.0 / (w + 1.0),
            RicianFactor::Infinite => 0.0,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            RicianFactor::Finite(w) => w,
            RicianFactor::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for RicianFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RicianFactor::Finite(w) => write!(f, "{w}"),
            RicianFactor::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for RicianFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(RicianFactor::Infinite),
            _ => {
                let w: f64 = s
                    .parse()
                    .map_err(|_| Error::invalid("w", format!("malformed number `{s}`")))?;
                RicianFactor::new(w)
            }
        }
    }
}

/// Hermitian PSD matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(CMat);

impl CorrelationMatrix {
    pub fn new(entries: CMat) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::Shape(format!(
                "correlation matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let asym = linalg::hermitian_asymmetry(&entries);
        if asym > 0.0 {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        if let Some(d) = entries
            .diagonal()
            .iter()
            .find(|d| (*d - C64::new(1.0, 0.0)).norm() > 1e-12)
        {
            return Err(Error::invalid(
                "correlation",
                format!("diagonal entries must be 1, found {d}"),
            ));
        }
        linalg::HermitianEigen::new(&entries)?.into_psd()?;
        Ok(Self(entries))
    }

    /// Exponential model `[R]_{ij} = rho^{|i-j|}`.
    pub fn exponential(dim: usize, rho: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::invalid("rho", format!("must lie in [0, 1), got {rho}")));
        }
        let entries = CMat::from_fn(dim, dim, |i, j| {
            C64::new(rho.powi(i.abs_diff(j) as i32), 0.0)
        });
        Self::new(entries)
    }

    pub fn identity(dim: usize) -> Self {
        Self(linalg::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }
}

/// Free-function form of [`CorrelationMatrix::exponential`].
pub fn exp_correlation(dim: usize, rho: f64) -> Result<CorrelationMatrix> {
    CorrelationMatrix::exponential(dim, rho)
}

/// Statistical CSI in the raw Rician parameterization.
#[derive(Debug, Clone)]
pub struct ChannelStatsRaw {
    pub mean0: CMat,
    pub rx_corr0: CorrelationMatrix,
    pub tx_corr: CorrelationMatrix,
    pub w: RicianFactor,
}

impl ChannelStatsRaw {
    pub fn new(
        mean0: CMat,
        rx_corr0: CorrelationMatrix,
        tx_corr: CorrelationMatrix,
        w: RicianFactor,
    ) -> Result<Self> {
        if mean0.nrows() != rx_corr0.dim() || mean0.ncols() != tx_corr.dim() {
            return Err(Error::Shape(format!(
                "mean is {}x{} but correlations are {}x{} (rx) and {}x{} (tx)",
                mean0.nrows(),
                mean0.ncols(),
                rx_corr0.dim(),
                rx_corr0.dim(),
                tx_corr.dim(),
                tx_corr.dim()
            )));
        }
        if mean0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("mean0", "entries must be finite"));
        }
        Ok(Self {
            mean0,
            rx_corr0,
            tx_corr,
            w,
        })
    }

    /// `E ||H||_F^2` under the raw parameterization.
    pub fn average_power(&self) -> f64 {
        let mean_part = match self.w {
            RicianFactor::Finite(w) => w / (w + 1.0) * linalg::frobenius_sq(&self.mean0),
            RicianFactor::Infinite => linalg::frobenius_sq(&self.mean0),
        };
        mean_part
            + self.w.scatter_power()
                * linalg::trace_re(self.rx_corr0.matrix())
                * linalg::trace_re(self.tx_corr.matrix())
    }

    pub fn to_equivalent(&self) -> ChannelStats {
        to_equivalent(self)
    }
}

/// Statistical CSI in the equivalent form `H = Hbar + R_r^{1/2} Delta R_t^{1/2}`.
#[derive(Debug, Clone)]
pub struct ChannelStats {
    mean: CMat,
    rx_corr: CMat,
    tx_corr: CorrelationMatrix,
    rx_sqrt: CMat,
    tx_sqrt: CMat,
}

impl ChannelStats {
    pub fn new(mean: CMat, rx_corr: CMat, tx_corr: CorrelationMatrix) -> Result<Self> {
        if !rx_corr.is_square()
            || mean.nrows() != rx_corr.nrows()
            || mean.ncols() != tx_corr.dim()
        {
            return Err(Error::Shape(format!(
                "mean is {}x{}, rx correlation {}x{}, tx correlation {}x{}",
                mean.nrows(),
                mean.ncols(),
                rx_corr.nrows(),
                rx_corr.ncols(),
                tx_corr.dim(),
                tx_corr.dim()
            )));
        }
        let rx_sqrt = linalg::psd_sqrt(&rx_corr)?;
        let tx_sqrt = linalg::psd_sqrt(tx_corr.matrix())?;
        Ok(Self {
            mean,
            rx_corr,
            tx_corr,
            rx_sqrt,
            tx_sqrt,
        })
    }

    /// Receive antennas `N_i`.
    pub fn rx_dim(&self) -> usize {
        self.mean.nrows()
    }

    /// Transmit antennas `M`.
    pub fn tx_dim(&self) -> usize {
        self.mean.ncols()
    }

    pub fn mean(&self) -> &CMat {
        &self.mean
    }

    pub fn rx_corr(&self) -> &CMat {
        &self.rx_corr
    }

    pub fn tx_corr(&self) -> &CMat {
        self.tx_corr.matrix()
    }

    /// The same channel mean with the uncertainty removed, i.e. what a
    /// design that trusts the mean as the true channel sees.
    pub fn mean_only(&self) -> Self {
        let n = self.rx_dim();
        Self {
            mean: self.mean.clone(),
            rx_corr: linalg::zeros(n, n),
            tx_corr: self.tx_corr.clone(),
            rx_sqrt: linalg::zeros(n, n),
            tx_sqrt: self.tx_sqrt.clone(),
        }
    }

    /// `E ||H||_F^2 = ||Hbar||_F^2 + tr(R_r) tr(R_t)`.
    pub fn average_power(&self) -> f64 {
        linalg::frobenius_sq(&self.mean)
            + linalg::trace_re(&self.rx_corr) * linalg::trace_re(self.tx_corr.matrix())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        sample_channel(self, rng)
    }
}

/// Maps the raw Rician parameterization onto the equivalent one:
/// `Hbar = sqrt(W/(W+1)) H0`, `R_r = R0_r / (W+1)`, `R_t` unchanged.
pub fn to_equivalent(raw: &ChannelStatsRaw) -> ChannelStats {
    let mean = &raw.mean0 * C64::new(raw.w.mean_gain(), 0.0);
    let rx_corr = raw.rx_corr0.matrix() * C64::new(raw.w.scatter_power(), 0.0);
    // Inputs were validated at construction, so only the square roots are
    // left to compute.
    ChannelStats::new(mean, rx_corr, raw.tx_corr.clone())
        .expect("validated raw statistics map to valid equivalent statistics")
}

/// One drawn channel matrix `H_i` (`N_i x M`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CMat,
}

/// Draws `H = Hbar + R_r^{1/2} Delta R_t^{1/2}`.
pub fn sample_channel<R: Rng + ?Sized>(stats: &ChannelStats, rng: &mut R) -> ChannelRealization {
    let delta = linalg::complex_gaussian(stats.rx_dim(), stats.tx_dim(), rng);
    let h = &stats.mean + &stats.rx_sqrt * delta * &stats.tx_sqrt;
    ChannelRealization { h }
}
