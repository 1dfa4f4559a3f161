//! Closed-form and approximate latency results.

pub mod residual;
pub mod sojourn;

pub use residual::{
    cycle_time_stats, ks_statistic, residual_cdf, CycleTimeModel, CycleTimeStats, ResidualFamily, ResidualModel,
};
pub use sojourn::{
    kimura_wait, mg1_priority_sojourn, mg1_priority_sojourn_slotted, mg2_kimura_bondi_sojourn, mg2_priority_sojourn,
    mg2_priority_sojourn_literal, pk_fcfs_wait, ClassPrediction, SojournPrediction,
};
