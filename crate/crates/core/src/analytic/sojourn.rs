//! Mean sojourn time of the two-class priority queue.
//!
//! Short packets have non-preemptive priority over long packets and each
//! class is served FIFO. Every prediction is split into queueing wait,
//! transmission time and the frame-alignment delay of half a slot.

use crate::error::{Error, Result};
use crate::traffic_channel::ClassLoad;

/// One class's mean sojourn, split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPrediction {
    pub wait: f64,
    pub transmission: f64,
    pub alignment: f64,
}

impl ClassPrediction {
    pub fn mean(&self) -> f64 {
        self.wait + self.transmission + self.alignment
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SojournPrediction {
    pub short: ClassPrediction,
    pub long: ClassPrediction,
}

impl SojournPrediction {
    pub fn mean_short(&self) -> f64 {
        self.short.mean()
    }

    pub fn mean_long(&self) -> f64 {
        self.long.mean()
    }

    fn from_waits(load: &ClassLoad, wait_short: f64, wait_long: f64) -> Self {
        let alignment = load.short.mean / 2.0;
        Self {
            short: ClassPrediction {
                wait: wait_short,
                transmission: load.short.mean,
                alignment,
            },
            long: ClassPrediction {
                wait: wait_long,
                transmission: load.long.mean,
                alignment,
            },
        }
    }
}

fn check_load(load: &ClassLoad) -> Result<(f64, f64)> {
    let u = load.utilization();
    if !(u.short < 1.0) {
        return Err(Error::Saturated { rho: u.short });
    }
    u.check_stable()?;
    Ok((u.total, u.short))
}

/// Single server (coupled access): two-class non-preemptive priority
/// Pollaczek-Khinchine waits plus service and frame alignment.
pub fn mg1_priority_sojourn(load: &ClassLoad) -> Result<SojournPrediction> {
    let (rho, rho_short) = check_load(load)?;
    let residual = load.second_moment_load() / 2.0;
    let wait_short = residual / (1.0 - rho_short);
    let wait_long = residual / ((1.0 - rho) * (1.0 - rho_short));
    Ok(SojournPrediction::from_waits(load, wait_short, wait_long))
}

/// Single server with service starts restricted to slot boundaries and
/// every service a whole number of slots, which is what the simulator runs.
///
/// Seen from the next boundary, a service in progress has `(S − S_S)/2`
/// left on average instead of `S/2`, and same-slot short arrivals queue
/// ahead of each other. Relative to [`mg1_priority_sojourn`] this moves the
/// short class by `−ρ_L S_S / (2(1−ρ_S))` and the long class by
/// `+ρ_S S_S / (2(1−ρ_S))`.
pub fn mg1_priority_sojourn_slotted(load: &ClassLoad) -> Result<SojournPrediction> {
    let mut p = mg1_priority_sojourn(load)?;
    let u = load.utilization();
    let slot = load.short.mean;
    p.short.wait -= u.long * slot / (2.0 * (1.0 - u.short));
    p.long.wait += u.short * slot / (2.0 * (1.0 - u.short));
    Ok(p)
}

/// Kimura's approximation of the mean wait in a GI/G/s queue.
///
/// `rho` is the per-server utilization, `mean_service` the mean service
/// time of one server and `scv` the squared coefficient of variation of
/// the service time.
pub fn kimura_wait(servers: u32, rho: f64, mean_service: f64, scv: f64) -> Result<f64> {
    if servers == 0 {
        return Err(Error::invalid("servers", "must be at least 1"));
    }
    if !(rho >= 0.0) {
        return Err(Error::invalid("rho", format!("{rho} is negative")));
    }
    if !(rho < 1.0) {
        return Err(Error::Saturated { rho });
    }
    if !(scv >= 0.0) || !(mean_service > 0.0) {
        return Err(Error::invalid("service", "needs positive mean and nonnegative scv"));
    }
    let s = f64::from(servers);
    let exponent = (2.0 * (s + 1.0)).sqrt() - 1.0;
    let mu = 1.0 / mean_service;
    Ok((1.0 + scv) / 2.0 * rho.powf(exponent) / (s * mu * (1.0 - rho)))
}

/// Exponent `√6 − 1` of the two-server Kimura term.
fn two_server_exponent() -> f64 {
    6f64.sqrt() - 1.0
}

/// Two servers (decoupled access), approximate.
///
/// `load` holds the per-server rates, i.e. the coupled baseline; the
/// decoupled system carries twice that traffic over two servers. The wait
/// is the two-server Kimura term scaled by the single-server
/// priority-to-FCFS ratio, with the long-packet rate `μ_L` as the service
/// rate and `E[S²]/E[S]²` of the class mixture as the variability factor:
///
/// `W_S = λE[S²]·λ/ρ² · ρ^(√6−1) / (4 μ_L (1−ρ_S))`, `W_L = W_S / (1−ρ)`.
///
/// With no traffic the waits are zero.
pub fn mg2_priority_sojourn(load: &ClassLoad) -> Result<SojournPrediction> {
    let (rho, rho_short) = check_load(load)?;
    if load.total_rate() == 0.0 {
        return Ok(SojournPrediction::from_waits(load, 0.0, 0.0));
    }
    let variability = load.second_moment_load() * load.total_rate() / (rho * rho);
    let mu_long = 1.0 / load.long.mean;
    let wait_short = variability * rho.powf(two_server_exponent()) / (4.0 * mu_long * (1.0 - rho_short));
    let wait_long = wait_short / (1.0 - rho);
    Ok(SojournPrediction::from_waits(load, wait_short, wait_long))
}

/// The two-server formula with the variability factor taken literally as
/// `λE[S²] / ρ²`, without the `λ` that makes it dimensionless. Kept for
/// comparison only; it overshoots the simulated waits by roughly `1/λ`.
pub fn mg2_priority_sojourn_literal(load: &ClassLoad) -> Result<SojournPrediction> {
    let (rho, rho_short) = check_load(load)?;
    if load.total_rate() == 0.0 {
        return Ok(SojournPrediction::from_waits(load, 0.0, 0.0));
    }
    let first = load.second_moment_load() / (rho * rho);
    let mu_long = 1.0 / load.long.mean;
    let wait_short = first * rho.powf(two_server_exponent()) / (4.0 * mu_long * (1.0 - rho_short));
    let wait_long = wait_short / (1.0 - rho);
    Ok(SojournPrediction::from_waits(load, wait_short, wait_long))
}

/// Two-server wait built directly from [`kimura_wait`] on the service-time
/// mixture of both classes, then scaled per class by the single-server
/// priority-to-FCFS ratio. Diagnostic alternative to
/// [`mg2_priority_sojourn`].
pub fn mg2_kimura_bondi_sojourn(load: &ClassLoad) -> Result<SojournPrediction> {
    let (rho, rho_short) = check_load(load)?;
    let lambda = load.total_rate();
    if lambda == 0.0 {
        return Ok(SojournPrediction::from_waits(load, 0.0, 0.0));
    }
    let mean = rho / lambda;
    let second = load.second_moment_load() / lambda;
    let scv = (second - mean * mean).max(0.0) / (mean * mean);
    let fcfs = kimura_wait(2, rho, mean, scv)?;
    // M/G/1 ratios: prio/FCFS = (1-ρ)/(1-ρ_S) for short, 1/(1-ρ_S) for long.
    let wait_short = fcfs * (1.0 - rho) / (1.0 - rho_short);
    let wait_long = fcfs / (1.0 - rho_short);
    Ok(SojournPrediction::from_waits(load, wait_short, wait_long))
}

/// Pollaczek-Khinchine mean wait of the single-server FCFS queue.
pub fn pk_fcfs_wait(load: &ClassLoad) -> Result<f64> {
    let (rho, _) = check_load(load)?;
    Ok(load.second_moment_load() / (2.0 * (1.0 - rho)))
}
