//! Traffic mix, block Rayleigh channel and discrete rate adaptation.
//!
//! Long (eMBB) packets see one SNR draw per transmission. The SNR is
//! exponentially distributed with mean `mean_snr` and selects one of `M`
//! rate regions; the region fixes the service rate of the whole packet.
//! Short (URLLC) packets are served at a fixed rate whose inverse is also
//! the slot length of the scheduler.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Converts a decibel value to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Block Rayleigh fading channel, described by its mean SNR alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    mean_snr: f64,
}

impl ChannelModel {
    pub fn new(mean_snr: f64) -> Result<Self> {
        if !(mean_snr > 0.0) || !mean_snr.is_finite() {
            return Err(Error::invalid(
                "mean_snr",
                format!("{mean_snr} is not a positive finite value"),
            ));
        }
        Ok(Self { mean_snr })
    }

    pub fn from_db(mean_snr_db: f64) -> Result<Self> {
        Self::new(db_to_linear(mean_snr_db))
    }

    /// Mean SNR, linear scale.
    pub fn mean_snr(&self) -> f64 {
        self.mean_snr
    }

    /// P(SNR > x), the complementary CDF of the exponential SNR.
    pub fn snr_ccdf(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            0.0
        } else {
            (-x / self.mean_snr).exp()
        }
    }

    /// Draws an instantaneous SNR.
    pub fn sample_snr(&self, rng: &mut RngStream) -> f64 {
        rng.exponential(self.mean_snr)
    }
}

/// SNR thresholds `0 = Γ_0 < Γ_1 < … < Γ_M = ∞` and one service rate per region.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAdaptationTable {
    thresholds: Vec<f64>,
    rates: Vec<f64>,
}

impl RateAdaptationTable {
    /// Builds a table from the full threshold list (including `0` and `∞`)
    /// and the per-region service rates.
    pub fn new(thresholds: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::invalid("rates", "at least one region is required"));
        }
        if thresholds.len() != rates.len() + 1 {
            return Err(Error::invalid(
                "thresholds",
                format!("{} thresholds for {} regions", thresholds.len(), rates.len()),
            ));
        }
        if thresholds[0] != 0.0 || *thresholds.last().unwrap() != f64::INFINITY {
            return Err(Error::invalid("thresholds", "must start at 0 and end at infinity"));
        }
        if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("thresholds", "must be strictly increasing"));
        }
        if rates.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::invalid("rates", "must be positive and finite"));
        }
        if rates.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("rates", "must not decrease with channel quality"));
        }
        Ok(Self { thresholds, rates })
    }

    /// Builds a table from the interior thresholds in dB and the transmission
    /// duration of each region (`M = inner_db.len() + 1` durations).
    pub fn from_db(inner_db: &[f64], durations: &[f64]) -> Result<Self> {
        let mut thresholds = Vec::with_capacity(inner_db.len() + 2);
        thresholds.push(0.0);
        thresholds.extend(inner_db.iter().map(|&db| db_to_linear(db)));
        thresholds.push(f64::INFINITY);
        if durations.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::invalid("long_ttis", "durations must be positive"));
        }
        Self::new(thresholds, durations.iter().map(|d| 1.0 / d).collect())
    }

    /// A single region served at `rate` regardless of the channel.
    pub fn single(rate: f64) -> Result<Self> {
        Self::new(vec![0.0, f64::INFINITY], vec![rate])
    }

    pub fn regions(&self) -> usize {
        self.rates.len()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Service duration `1/μ_i` of each region.
    pub fn durations(&self) -> impl Iterator<Item = f64> + '_ {
        self.rates.iter().map(|r| 1.0 / r)
    }

    /// Region index `i` with `Γ_i <= snr < Γ_{i+1}`.
    pub fn region_of(&self, snr: f64) -> usize {
        // thresholds[0] = 0 <= snr, so the partition point is at least 1.
        let upper = self.thresholds.partition_point(|&t| t <= snr);
        (upper - 1).min(self.regions() - 1)
    }
}

/// First and second moment of a service time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub second: f64,
}

impl Moments {
    pub fn deterministic(duration: f64) -> Self {
        Self {
            mean: duration,
            second: duration * duration,
        }
    }

    pub fn variance(&self) -> f64 {
        (self.second - self.mean * self.mean).max(0.0)
    }

    /// Squared coefficient of variation.
    pub fn scv(&self) -> f64 {
        self.variance() / (self.mean * self.mean)
    }
}

/// Probability of each rate region under Rayleigh fading.
pub fn region_probabilities(channel: &ChannelModel, table: &RateAdaptationTable) -> Vec<f64> {
    table
        .thresholds
        .windows(2)
        .map(|w| channel.snr_ccdf(w[0]) - channel.snr_ccdf(w[1]))
        .collect()
}

/// `(E[S_L], E[S_L²])` of the long-packet service time.
pub fn long_service_moments(channel: &ChannelModel, table: &RateAdaptationTable) -> Moments {
    let probs = region_probabilities(channel, table);
    let (mean, second) = probs
        .iter()
        .zip(&table.rates)
        .fold((0.0, 0.0), |(m, s), (p, mu)| (m + p / mu, s + p / (mu * mu)));
    Moments { mean, second }
}

/// `(E[S_S], E[S_S²])` of the fixed-rate short service.
pub fn short_service_moments(mu_short: f64) -> Moments {
    Moments::deterministic(1.0 / mu_short)
}

/// Draws the rate region of one long packet.
pub fn sample_long_region(channel: &ChannelModel, table: &RateAdaptationTable, rng: &mut RngStream) -> usize {
    table.region_of(channel.sample_snr(rng))
}

/// Draws the service duration of one long packet.
pub fn sample_long_service(channel: &ChannelModel, table: &RateAdaptationTable, rng: &mut RngStream) -> f64 {
    1.0 / table.rates[sample_long_region(channel, table, rng)]
}

/// Per-server utilization split by class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Utilization {
    pub total: f64,
    pub short: f64,
    pub long: f64,
}

impl Utilization {
    pub fn check_stable(&self) -> Result<()> {
        if self.total < 1.0 {
            Ok(())
        } else {
            Err(Error::Saturated { rho: self.total })
        }
    }
}

/// Arrival rates and service moments of the two classes. Carries no
/// validation, so the analytic formulas can report saturation themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassLoad {
    pub lambda_short: f64,
    pub lambda_long: f64,
    pub short: Moments,
    pub long: Moments,
}

impl ClassLoad {
    pub fn utilization(&self) -> Utilization {
        let short = self.lambda_short * self.short.mean;
        let long = self.lambda_long * self.long.mean;
        Utilization {
            total: short + long,
            short,
            long,
        }
    }

    /// `λ_L E[S_L²] + λ_S E[S_S²]`, twice the mean residual work.
    pub fn second_moment_load(&self) -> f64 {
        self.lambda_long * self.long.second + self.lambda_short * self.short.second
    }

    pub fn total_rate(&self) -> f64 {
        self.lambda_short + self.lambda_long
    }
}

/// A validated traffic mix for one server (the coupled baseline).
///
/// The decoupled topology doubles both arrival rates over two servers, so
/// the per-server utilization is the same and one stability check covers
/// both topologies.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    lambda_short: f64,
    lambda_long: f64,
    mu_short: f64,
    channel: ChannelModel,
    table: RateAdaptationTable,
    long_slots: Vec<u64>,
}

impl TrafficConfig {
    pub fn new(
        lambda_short: f64,
        lambda_long: f64,
        mu_short: f64,
        channel: ChannelModel,
        table: RateAdaptationTable,
    ) -> Result<Self> {
        if !(mu_short > 0.0) || !mu_short.is_finite() {
            return Err(Error::invalid("mu_short", "must be positive"));
        }
        for (name, v) in [("lambda_short", lambda_short), ("lambda_long", lambda_long)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("{v} is not a nonnegative rate")));
            }
        }
        let slot = 1.0 / mu_short;
        let long_slots = table
            .durations()
            .map(|d| slots_in(d, slot))
            .collect::<Result<Vec<_>>>()?;
        let config = Self {
            lambda_short,
            lambda_long,
            mu_short,
            channel,
            table,
            long_slots,
        };
        config.utilization().check_stable()?;
        Ok(config)
    }

    /// Builds the config whose arrival rates hit `target_rho` with
    /// `λ_L = ratio · λ_S`.
    pub fn at_utilization(
        target_rho: f64,
        ratio: f64,
        mu_short: f64,
        channel: ChannelModel,
        table: RateAdaptationTable,
    ) -> Result<Self> {
        let (ls, ll) = solve_arrival_rates(target_rho, ratio, &channel, &table, mu_short)?;
        Self::new(ls, ll, mu_short, channel, table)
    }

    pub fn lambda_short(&self) -> f64 {
        self.lambda_short
    }

    pub fn lambda_long(&self) -> f64 {
        self.lambda_long
    }

    pub fn mu_short(&self) -> f64 {
        self.mu_short
    }

    /// Slot length, equal to the short TTI.
    pub fn slot(&self) -> f64 {
        1.0 / self.mu_short
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn table(&self) -> &RateAdaptationTable {
        &self.table
    }

    /// Duration of each long region in whole slots.
    pub fn long_slots(&self) -> &[u64] {
        &self.long_slots
    }

    pub fn short_moments(&self) -> Moments {
        short_service_moments(self.mu_short)
    }

    pub fn long_moments(&self) -> Moments {
        long_service_moments(&self.channel, &self.table)
    }

    pub fn load(&self) -> ClassLoad {
        ClassLoad {
            lambda_short: self.lambda_short,
            lambda_long: self.lambda_long,
            short: self.short_moments(),
            long: self.long_moments(),
        }
    }

    pub fn utilization(&self) -> Utilization {
        self.load().utilization()
    }
}

fn slots_in(duration: f64, slot: f64) -> Result<u64> {
    let n = (duration / slot).round();
    if n < 1.0 || (n * slot - duration).abs() > 1e-9 * duration.max(1.0) {
        return Err(Error::SlotMisaligned { duration, slot });
    }
    Ok(n as u64)
}

/// Arrival rates `(λ_S, λ_L)` with `λ_L = ratio · λ_S` whose utilization
/// equals `target_rho`.
pub fn solve_arrival_rates(
    target_rho: f64,
    ratio: f64,
    channel: &ChannelModel,
    table: &RateAdaptationTable,
    mu_short: f64,
) -> Result<(f64, f64)> {
    if !(target_rho > 0.0 && target_rho < 1.0) {
        return Err(Error::invalid("rho", format!("{target_rho} is outside (0, 1)")));
    }
    if !(ratio >= 0.0) || !ratio.is_finite() {
        return Err(Error::invalid("lambda_ratio", "must be nonnegative"));
    }
    if !(mu_short > 0.0) {
        return Err(Error::invalid("mu_short", "must be positive"));
    }
    let long = long_service_moments(channel, table);
    let lambda_short = target_rho / (ratio * long.mean + 1.0 / mu_short);
    Ok((lambda_short, ratio * lambda_short))
}
