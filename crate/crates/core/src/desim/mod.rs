//! Discrete-event simulation of the coupled and decoupled systems.
//!
//! Scheduling rule: at each slot boundary every idle server takes the
//! head-of-line short packet if one is waiting, otherwise the head-of-line
//! long packet. Service is never preempted. A packet that arrives inside a
//! slot becomes eligible at the next boundary. When several servers are
//! idle, the one idle the longest goes first (ties by server index).

mod engine;
mod stats;
mod sweep;
mod trace;

pub use engine::{run, run_with};
pub use stats::{ClassStats, CONVERGENCE_LIMIT, DEFAULT_BATCHES};
pub use sweep::{sweep, SweepPoint, SweepTemplate};
pub use trace::{CsvTrace, NoopObserver, Observer, TraceEvent, TraceRow};

/// Server arrangement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    /// One server fed at the configured rates.
    Coupled,
    /// Two servers sharing both queues, fed at twice the configured rates.
    Decoupled,
}

impl Topology {
    pub fn servers(&self) -> usize {
        match self {
            Topology::Coupled => 1,
            Topology::Decoupled => 2,
        }
    }

    /// Factor applied to the configured arrival rates.
    pub fn traffic_scale(&self) -> f64 {
        self.servers() as f64
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Topology::Coupled => "coupled",
            Topology::Decoupled => "decoupled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketClass {
    Short,
    Long,
}

impl PacketClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            PacketClass::Short => "short",
            PacketClass::Long => "long",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Transmission direction. Metadata only; the scheduler ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Uplink,
    Downlink,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub class: PacketClass,
    pub direction: Option<Direction>,
    pub arrival_time: f64,
    /// First instant the packet may start service.
    pub eligible_time: f64,
    pub service_duration: f64,
    pub start_time: f64,
    pub departure_time: f64,
    pub server: Option<usize>,
}

impl Packet {
    pub fn sojourn(&self) -> f64 {
        self.departure_time - self.arrival_time
    }
}

/// Service-time law used by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceLaw {
    /// Fixed short TTI and fading-driven long TTIs.
    Configured,
    /// Exponential with the configured class means. Oracle checks only.
    Exponential,
}

/// Parameters of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    /// Total departures to simulate, warmup included.
    pub horizon: u64,
    /// Departures discarded before measuring.
    pub warmup: u64,
    pub seed: u64,
    pub slot_aligned: bool,
    pub service: ServiceLaw,
    pub batches: usize,
}

impl RunSpec {
    /// Slot-aligned run with the first 10% of departures as warmup.
    pub fn new(horizon: u64, seed: u64) -> Self {
        Self {
            horizon,
            warmup: horizon / 10,
            seed,
            slot_aligned: true,
            service: ServiceLaw::Configured,
            batches: DEFAULT_BATCHES,
        }
    }

    /// Unaligned starts with exponential service, for closed-form checks.
    pub fn sanity(mut self) -> Self {
        self.slot_aligned = false;
        self.service = ServiceLaw::Exponential;
        self
    }

    /// Run with `post_warmup` measured departures after a 10% warmup.
    pub fn measured(post_warmup: u64, seed: u64) -> Self {
        let warmup = post_warmup / 9;
        Self {
            horizon: post_warmup + warmup,
            warmup,
            ..Self::new(0, seed)
        }
    }
}

/// Count and mean of a measured quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStat {
    pub count: u64,
    pub mean: f64,
}

/// Per-class results of one run together with conservation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SojournSummary {
    pub topology: Topology,
    pub seed: u64,
    pub warmup: u64,
    /// Departures measured after warmup.
    pub departures: u64,
    pub short: ClassStats,
    pub long: ClassStats,
    pub uplink: MeanStat,
    pub downlink: MeanStat,
    /// Length of the measurement window.
    pub window: f64,
    pub busy_fraction: Vec<f64>,
    /// Time-average number of packets in the system.
    pub mean_in_system: f64,
    /// Arrivals per unit time observed in the window.
    pub arrival_rate: f64,
    /// Mean sojourn over all measured departures.
    pub mean_sojourn: f64,
    /// `|L − λW| / (λW)`.
    pub littles_residual: f64,
    /// Frame-alignment delay (eligible − arrival) over all measured packets.
    pub alignment_delay: MeanStat,
    /// Mean of start − arrival for short packets that arrived to empty
    /// queues with a free server; these wait for frame alignment only.
    /// Finding the queues empty favours arrivals early in a slot, so this
    /// sits about `λ S_S / 12` above `S_S / 2`.
    pub unblocked_wait: MeanStat,
    /// Slot boundaries where a server stayed idle next to an eligible packet.
    pub conservation_violations: u64,
    /// Same-class packets started out of arrival order.
    pub fifo_violations: u64,
}

impl SojournSummary {
    fn empty(topology: Topology, seed: u64, warmup: u64) -> Self {
        let none = MeanStat { count: 0, mean: 0.0 };
        Self {
            topology,
            seed,
            warmup,
            departures: 0,
            short: ClassStats::empty(),
            long: ClassStats::empty(),
            uplink: none,
            downlink: none,
            window: 0.0,
            busy_fraction: vec![0.0; topology.servers()],
            mean_in_system: 0.0,
            arrival_rate: 0.0,
            mean_sojourn: 0.0,
            littles_residual: 0.0,
            alignment_delay: none,
            unblocked_wait: none,
            conservation_violations: 0,
            fifo_violations: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.departures == 0
    }

    pub fn class(&self, class: PacketClass) -> &ClassStats {
        match class {
            PacketClass::Short => &self.short,
            PacketClass::Long => &self.long,
        }
    }

    /// False when a nonempty class has a CI wider than 10% of its mean.
    pub fn converged(&self) -> bool {
        self.short.converged && self.long.converged
    }
}
