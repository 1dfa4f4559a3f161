use rayon::prelude::*;

use super::{run_with, NoopObserver, RunSpec, SojournSummary, Topology};
use crate::error::Result;
use crate::traffic_channel::{ChannelModel, RateAdaptationTable, TrafficConfig};

/// Everything about the traffic mix except the load level.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTemplate {
    pub mu_short: f64,
    /// `λ_L / λ_S`.
    pub lambda_ratio: f64,
    pub channel: ChannelModel,
    pub table: RateAdaptationTable,
}

impl SweepTemplate {
    pub fn at(&self, rho: f64) -> Result<TrafficConfig> {
        TrafficConfig::at_utilization(rho, self.lambda_ratio, self.mu_short, self.channel, self.table.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub rho: f64,
    pub seed: u64,
    pub result: Result<SojournSummary>,
}

/// Runs one simulation per load level. Point `i` uses seed `base.seed + i`;
/// points run in parallel and come back in input order. A failing point
/// does not stop the others.
pub fn sweep(template: &SweepTemplate, topology: Topology, rhos: &[f64], base: &RunSpec) -> Vec<SweepPoint> {
    rhos.par_iter()
        .enumerate()
        .map(|(i, &rho)| {
            let seed = base.seed.wrapping_add(i as u64);
            let spec = RunSpec { seed, ..base.clone() };
            let result = template
                .at(rho)
                .and_then(|config| run_with(&config, topology, &spec, &mut NoopObserver));
            SweepPoint { rho, seed, result }
        })
        .collect()
}
