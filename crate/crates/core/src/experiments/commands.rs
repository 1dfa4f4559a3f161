use std::io::Write;

use crate::analytic::{
    cycle_time_stats, ks_statistic, mg1_priority_sojourn, mg1_priority_sojourn_slotted, mg2_priority_sojourn,
    residual_cdf, CycleTimeModel, ResidualFamily, ResidualModel, SojournPrediction,
};
use crate::desim::{
    run_with, sweep, NoopObserver, PacketClass, RunSpec, ServiceLaw, SojournSummary, SweepTemplate, Topology,
};
use crate::error::Error;
use crate::rng::{RngStream, StreamId};
use crate::traffic_channel::{region_probabilities, ChannelModel, RateAdaptationTable, TrafficConfig};

use super::config::ExperimentConfig;
use super::format::{opt_sig9, sig9};
use super::CommandError;

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out)
}

// ---------------------------------------------------------------------------
// sojourn-sweep

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub template: SweepTemplate,
    pub rhos: Vec<f64>,
    pub run: RunSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub class: PacketClass,
    pub topology: Topology,
    pub analytic_mean: Option<f64>,
    pub sim_mean: Option<f64>,
    pub sim_ci95: Option<f64>,
    pub rel_err: Option<f64>,
    pub count: u64,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: [&str; 9] = [
    "rho",
    "class",
    "topology",
    "analytic_mean",
    "sim_mean",
    "sim_ci95",
    "rel_err",
    "count",
    "error",
];

fn analytic_for(config: &TrafficConfig, topology: Topology) -> Result<SojournPrediction, Error> {
    match topology {
        Topology::Coupled => mg1_priority_sojourn(&config.load()),
        Topology::Decoupled => mg2_priority_sojourn(&config.load()),
    }
}

fn sweep_rows(
    template: &SweepTemplate,
    rho: f64,
    topology: Topology,
    result: &Result<SojournSummary, Error>,
) -> Vec<SweepRow> {
    let classes = [PacketClass::Short, PacketClass::Long];
    let failed = |e: &Error| {
        classes
            .iter()
            .map(|&class| SweepRow {
                rho,
                class,
                topology,
                analytic_mean: None,
                sim_mean: None,
                sim_ci95: None,
                rel_err: None,
                count: 0,
                error: Some(e.to_string()),
            })
            .collect()
    };
    let summary = match result {
        Ok(s) => s,
        Err(e) => return failed(e),
    };
    let config = match template.at(rho) {
        Ok(c) => c,
        Err(e) => return failed(&e),
    };
    let prediction = analytic_for(&config, topology);
    classes
        .iter()
        .map(|&class| {
            let rate = match class {
                PacketClass::Short => config.lambda_short(),
                PacketClass::Long => config.lambda_long(),
            };
            let stats = summary.class(class);
            let analytic = match (&prediction, rate > 0.0) {
                (Ok(p), true) => Some(match class {
                    PacketClass::Short => p.mean_short(),
                    PacketClass::Long => p.mean_long(),
                }),
                _ => None,
            };
            let (sim_mean, sim_ci95) = if stats.is_empty() {
                (None, None)
            } else {
                (Some(stats.mean), Some(stats.ci95))
            };
            let rel_err = match (analytic, sim_mean) {
                (Some(a), Some(s)) => Some((s - a) / a),
                _ => None,
            };
            let error = match &prediction {
                Err(e) => Some(e.to_string()),
                Ok(_) if !stats.converged => Some("not converged: ci95 above 10% of mean".to_string()),
                Ok(_) => None,
            };
            SweepRow {
                rho,
                class,
                topology,
                analytic_mean: analytic,
                sim_mean,
                sim_ci95,
                rel_err,
                count: stats.count,
                error,
            }
        })
        .collect()
}

/// Simulates every load level for both topologies and writes one row per
/// (rho, class, topology).
pub fn cmd_sojourn_sweep(opts: &SweepOptions, out: &mut dyn Write) -> Result<Vec<SweepRow>, CommandError> {
    let coupled = sweep(&opts.template, Topology::Coupled, &opts.rhos, &opts.run);
    let decoupled = sweep(&opts.template, Topology::Decoupled, &opts.rhos, &opts.run);

    let mut rows = Vec::with_capacity(opts.rhos.len() * 4);
    for (c, d) in coupled.iter().zip(&decoupled) {
        let c_rows = sweep_rows(&opts.template, c.rho, Topology::Coupled, &c.result);
        let d_rows = sweep_rows(&opts.template, d.rho, Topology::Decoupled, &d.result);
        for (a, b) in c_rows.into_iter().zip(d_rows) {
            rows.push(a);
            rows.push(b);
        }
    }

    let mut w = csv_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in &rows {
        w.write_record([
            sig9(r.rho),
            r.class.as_str().to_string(),
            r.topology.as_str().to_string(),
            opt_sig9(r.analytic_mean),
            opt_sig9(r.sim_mean),
            opt_sig9(r.sim_ci95),
            opt_sig9(r.rel_err),
            r.count.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// residual-cdf

#[derive(Debug, Clone)]
pub struct ResidualOptions {
    pub model: ResidualModel,
    pub step: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub y: f64,
    pub cdf_coupled: f64,
    pub cdf_decoupled: f64,
    pub empirical_coupled: f64,
    pub empirical_decoupled: f64,
}

#[derive(Debug, Clone)]
pub struct ResidualOutput {
    pub rows: Vec<ResidualRow>,
    /// Kolmogorov-Smirnov distance of the Monte Carlo samples to the
    /// analytic CDFs.
    pub ks_coupled: f64,
    pub ks_decoupled: f64,
}

fn ecdf(sorted: &[f64], y: f64) -> f64 {
    sorted.partition_point(|&x| x <= y) as f64 / sorted.len() as f64
}

/// Analytic and Monte Carlo CDFs of the residual on `[0, S_L]`.
pub fn cmd_residual_cdf(opts: &ResidualOptions, out: &mut dyn Write) -> Result<ResidualOutput, CommandError> {
    if !(opts.step > 0.0) {
        return Err(Error::invalid("step", "must be positive").into());
    }
    if opts.samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1").into());
    }
    let model = &opts.model;
    let mut rng = RngStream::new(opts.seed, StreamId::Residual);
    let mut coupled: Vec<f64> = (0..opts.samples)
        .map(|_| model.sample_access(false, &mut rng))
        .collect();
    let mut decoupled: Vec<f64> = (0..opts.samples).map(|_| model.sample_access(true, &mut rng)).collect();
    coupled.sort_by(f64::total_cmp);
    decoupled.sort_by(f64::total_cmp);

    let points = (model.s_long_max() / opts.step + 1e-9).floor() as usize;
    let rows: Vec<ResidualRow> = (0..=points)
        .map(|k| {
            let y = k as f64 * opts.step;
            ResidualRow {
                y,
                cdf_coupled: residual_cdf(model, y, false),
                cdf_decoupled: residual_cdf(model, y, true),
                empirical_coupled: ecdf(&coupled, y),
                empirical_decoupled: ecdf(&decoupled, y),
            }
        })
        .collect();

    let mut w = csv_writer(out);
    w.write_record([
        "y",
        "cdf_coupled",
        "cdf_decoupled",
        "empirical_coupled",
        "empirical_decoupled",
    ])?;
    for r in &rows {
        w.write_record([
            sig9(r.y),
            sig9(r.cdf_coupled),
            sig9(r.cdf_decoupled),
            sig9(r.empirical_coupled),
            sig9(r.empirical_decoupled),
        ])?;
    }
    w.flush()?;
    Ok(ResidualOutput {
        rows,
        ks_coupled: ks_statistic(&coupled, |y| residual_cdf(model, y, false)),
        ks_decoupled: ks_statistic(&decoupled, |y| residual_cdf(model, y, true)),
    })
}

// ---------------------------------------------------------------------------
// cycle-time

#[derive(Debug, Clone)]
pub struct CycleOptions {
    pub model: ResidualModel,
    pub s_short: f64,
    pub t_proc: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRow {
    pub topology: Topology,
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub p999: f64,
}

/// Sampled cycle-time mean and quantiles, coupled then decoupled.
pub fn cmd_cycle_time(opts: &CycleOptions, out: &mut dyn Write) -> Result<Vec<CycleRow>, CommandError> {
    let mut rows = Vec::with_capacity(2);
    for topology in [Topology::Coupled, Topology::Decoupled] {
        let model = CycleTimeModel::new(
            opts.s_short,
            opts.t_proc,
            opts.model.clone(),
            topology == Topology::Decoupled,
        )?;
        let mut rng = RngStream::new(opts.seed, StreamId::Residual);
        let stats = cycle_time_stats(&model, opts.samples, &mut rng)?;
        rows.push(CycleRow {
            topology,
            mean: stats.mean,
            p50: stats.quantile(0.5),
            p90: stats.quantile(0.9),
            p99: stats.quantile(0.99),
            p999: stats.quantile(0.999),
        });
    }
    let mut w = csv_writer(out);
    w.write_record(["topology", "mean", "p50", "p90", "p99", "p999"])?;
    for r in &rows {
        w.write_record([
            r.topology.as_str().to_string(),
            sig9(r.mean),
            sig9(r.p50),
            sig9(r.p90),
            sig9(r.p99),
            sig9(r.p999),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// validate

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub config: ExperimentConfig,
    /// Measured departures per simulation check.
    pub departures: u64,
    pub seed: u64,
    /// Multiplies every tolerance; values below 1 tighten the checks.
    pub tolerance_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn within(&mut self, name: &str, value: f64, limit: f64) {
        self.record(name, value <= limit, format!("{} <= {}", sig9(value), sig9(limit)));
    }

    fn error(&mut self, name: &str, e: &Error) {
        self.record(name, false, e.to_string());
    }
}

/// Load level used for the conservation checks: the largest configured
/// value not above 0.9, or 0.7 when there is none.
fn check_rho(config: &ExperimentConfig) -> f64 {
    config
        .rho
        .iter()
        .copied()
        .filter(|&r| r > 0.0 && r <= 0.9)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))))
        .unwrap_or(0.7)
}

fn random_table(rng: &mut RngStream) -> (ChannelModel, RateAdaptationTable) {
    let regions = 1 + (rng.uniform() * 6.0) as usize;
    let mut cuts: Vec<f64> = (1..regions).map(|_| 100.0 * rng.uniform() + 1e-6).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut thresholds = vec![0.0];
    thresholds.extend(cuts);
    thresholds.push(f64::INFINITY);
    let mut rates: Vec<f64> = (1..thresholds.len()).map(|_| 0.01 + rng.uniform()).collect();
    rates.sort_by(f64::total_cmp);
    let snr = 10f64.powf(4.0 * rng.uniform() - 1.0);
    (
        ChannelModel::new(snr).expect("positive snr"),
        RateAdaptationTable::new(thresholds, rates).expect("valid random table"),
    )
}

pub fn cmd_validate(opts: &ValidateOptions, out: &mut dyn Write) -> Result<ValidationReport, CommandError> {
    let tol = opts.tolerance_scale;
    let mut report = ValidationReport::default();
    let cfg = &opts.config;

    // Configured load levels.
    let bad: Vec<f64> = cfg.rho.iter().copied().filter(|r| !(*r > 0.0 && *r < 1.0)).collect();
    if bad.is_empty() {
        report.record(
            "config: stable load levels",
            true,
            format!("{} levels below 1", cfg.rho.len()),
        );
    } else {
        let detail = match bad.iter().copied().find(|&r| r >= 1.0) {
            Some(r) => Error::Saturated { rho: r }.to_string(),
            None => format!("load levels outside (0, 1): {bad:?}"),
        };
        report.record("config: stable load levels", false, detail);
    }

    let template = match cfg.template() {
        Ok(t) => Some(t),
        Err(e) => {
            report.error("config: channel and rate table", &e);
            None
        }
    };

    // Region probabilities.
    let mut worst: f64 = 0.0;
    let mut rng = RngStream::new(opts.seed, StreamId::Test);
    for _ in 0..1000 {
        let (ch, table) = random_table(&mut rng);
        worst = worst.max((region_probabilities(&ch, &table).iter().sum::<f64>() - 1.0).abs());
    }
    if let Some(t) = &template {
        worst = worst.max((region_probabilities(&t.channel, &t.table).iter().sum::<f64>() - 1.0).abs());
    }
    report.within("sum of region probabilities (1001 tables)", worst, 1e-12 * tol);

    let run = RunSpec::measured(opts.departures, opts.seed);

    // M/M/1 and M/D/1 with unaligned starts.
    let single = TrafficConfig::new(
        0.5,
        0.0,
        1.0,
        ChannelModel::new(1.0)?,
        RateAdaptationTable::single(1.0)?,
    )?;
    for (name, spec, exact) in [
        ("M/M/1 mean sojourn (exact 2)", run.clone().sanity(), 2.0),
        (
            "M/D/1 mean sojourn (exact 1.5)",
            RunSpec {
                slot_aligned: false,
                service: ServiceLaw::Configured,
                ..run.clone()
            },
            1.5,
        ),
    ] {
        match run_with(&single, Topology::Coupled, &spec, &mut NoopObserver) {
            Ok(s) => report.within(name, (s.short.mean - exact).abs() / exact, 0.02 * tol),
            Err(e) => report.error(name, &e),
        }
    }

    // Conservation and agreement at the configured setting.
    if let Some(template) = &template {
        let rho = check_rho(cfg);
        match template.at(rho) {
            Err(e) => report.error("configured setting", &e),
            Ok(config) => {
                for topology in [Topology::Coupled, Topology::Decoupled] {
                    let tag = format!("{} rho={}", topology.as_str(), sig9(rho));
                    let s = match run_with(&config, topology, &run, &mut NoopObserver) {
                        Ok(s) => s,
                        Err(e) => {
                            report.error(&tag, &e);
                            continue;
                        }
                    };
                    report.within(&format!("{tag}: Little's law residual"), s.littles_residual, 0.01 * tol);
                    let busy = s.busy_fraction.iter().map(|b| (b - rho).abs()).fold(0.0, f64::max);
                    report.within(&format!("{tag}: busy fraction vs rho"), busy, 0.01 * tol);
                    report.within(
                        &format!("{tag}: idle server next to eligible packet"),
                        s.conservation_violations as f64,
                        0.0,
                    );
                    report.within(
                        &format!("{tag}: FIFO start-order violations"),
                        s.fifo_violations as f64,
                        0.0,
                    );
                    if s.alignment_delay.count > 0 {
                        let half = config.slot() / 2.0;
                        report.within(
                            &format!("{tag}: frame alignment delay vs half slot"),
                            (s.alignment_delay.mean - half).abs() / half,
                            0.02 * tol,
                        );
                    }
                    if topology == Topology::Coupled {
                        match mg1_priority_sojourn_slotted(&config.load()) {
                            Ok(p) => {
                                for (class, exact) in
                                    [(PacketClass::Short, p.mean_short()), (PacketClass::Long, p.mean_long())]
                                {
                                    let st = s.class(class);
                                    if st.count > 0 {
                                        // 2% of the exact mean plus the sampling half-width.
                                        report.within(
                                            &format!("{tag}: {} mean vs slotted P-K", class.as_str()),
                                            (st.mean - exact).abs() / exact,
                                            (0.02 + st.ci95 / exact) * tol,
                                        );
                                    }
                                }
                            }
                            Err(e) => report.error(&tag, &e),
                        }
                    }
                }
            }
        }
    }

    // Min-of-two dominance.
    let s_long = 15.0;
    let families = [
        ResidualFamily::Exponential { rate: 1.0 },
        ResidualFamily::TruncatedExponential { rate: 0.2 },
        ResidualFamily::Uniform,
    ];
    let mut dominated = true;
    for family in families {
        let m = ResidualModel::new(family, s_long)?;
        dominated &= (0..=1500)
            .map(|k| k as f64 * 0.01)
            .all(|y| residual_cdf(&m, y, true) >= residual_cdf(&m, y, false));
    }
    report.record(
        "decoupled residual CDF dominates coupled",
        dominated,
        "3 families on [0, 15]",
    );

    let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &report.checks {
        writeln!(
            out,
            "{}  {:width$}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )?;
    }
    writeln!(
        out,
        "{} of {} checks passed",
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len()
    )?;
    Ok(report)
}
