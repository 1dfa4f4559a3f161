use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use super::stats::ClassStats;
use super::trace::{NoopObserver, Observer, TraceEvent, TraceRow};
use super::{Direction, MeanStat, Packet, PacketClass, RunSpec, ServiceLaw, SojournSummary, Topology};
use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamId};
use crate::traffic_channel::{sample_long_region, TrafficConfig};

/// Runs one slot-aligned simulation with the default batch count.
pub fn run(config: &TrafficConfig, topology: Topology, horizon: u64, warmup: u64, seed: u64) -> Result<SojournSummary> {
    let spec = RunSpec {
        warmup,
        ..RunSpec::new(horizon, seed)
    };
    run_with(config, topology, &spec, &mut NoopObserver)
}

pub fn run_with(
    config: &TrafficConfig,
    topology: Topology,
    spec: &RunSpec,
    observer: &mut dyn Observer,
) -> Result<SojournSummary> {
    config.utilization().check_stable()?;
    if spec.horizon <= spec.warmup {
        return Err(Error::invalid("horizon", "must exceed the warmup"));
    }
    if config.lambda_short() == 0.0 && config.lambda_long() == 0.0 {
        return Ok(SojournSummary::empty(topology, spec.seed, spec.warmup));
    }
    Ok(Engine::new(config, topology, spec, observer).execute())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Departure(usize),
    Arrival(PacketClass),
    Dispatch,
}

impl EventKind {
    // Same-instant order: free servers, admit arrivals, then schedule.
    fn rank(self) -> u8 {
        match self {
            EventKind::Departure(_) => 0,
            EventKind::Arrival(_) => 1,
            EventKind::Dispatch => 2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.rank().cmp(&other.kind.rank()))
            .then(self.seq.cmp(&other.seq))
    }
}

struct Queued {
    packet: Packet,
    /// Service length in slots when slot-aligned.
    slots: u64,
}

struct Server {
    busy: Option<(Packet, u64)>,
    idle_since: f64,
}

struct Engine<'a> {
    config: &'a TrafficConfig,
    topology: Topology,
    spec: &'a RunSpec,
    observer: &'a mut dyn Observer,

    slot: f64,
    rates: [f64; 2],
    arrivals: [RngStream; 2],
    short_service: RngStream,
    long_service: RngStream,
    direction: RngStream,

    now: f64,
    seq: u64,
    next_id: u64,
    events: BinaryHeap<Reverse<Event>>,
    last_dispatch: f64,
    queues: [VecDeque<Queued>; 2],
    servers: Vec<Server>,
    in_system: u64,
    last_started: [f64; 2],

    departed: u64,
    measuring: bool,
    window_start: f64,
    last_time: f64,
    area: f64,
    busy_time: Vec<f64>,
    window_arrivals: u64,
    sojourns: [Vec<f64>; 2],
    direction_sums: [(u64, f64); 2],
    alignment: (u64, f64),
    unblocked: (u64, f64),
    conservation_violations: u64,
    fifo_violations: u64,
}

impl<'a> Engine<'a> {
    fn new(config: &'a TrafficConfig, topology: Topology, spec: &'a RunSpec, observer: &'a mut dyn Observer) -> Self {
        let scale = topology.traffic_scale();
        let seed = spec.seed;
        let servers = (0..topology.servers())
            .map(|_| Server {
                busy: None,
                idle_since: 0.0,
            })
            .collect();
        Self {
            config,
            topology,
            spec,
            observer,
            slot: config.slot(),
            rates: [config.lambda_short() * scale, config.lambda_long() * scale],
            arrivals: [
                RngStream::new(seed, StreamId::ShortArrivals),
                RngStream::new(seed, StreamId::LongArrivals),
            ],
            short_service: RngStream::new(seed, StreamId::ShortService),
            long_service: RngStream::new(seed, StreamId::LongService),
            direction: RngStream::new(seed, StreamId::Direction),
            now: 0.0,
            seq: 0,
            next_id: 0,
            events: BinaryHeap::new(),
            last_dispatch: f64::NEG_INFINITY,
            queues: [VecDeque::new(), VecDeque::new()],
            servers,
            in_system: 0,
            last_started: [f64::NEG_INFINITY; 2],
            departed: 0,
            measuring: spec.warmup == 0,
            window_start: 0.0,
            last_time: 0.0,
            area: 0.0,
            busy_time: vec![0.0; topology.servers()],
            window_arrivals: 0,
            sojourns: [Vec::new(), Vec::new()],
            direction_sums: [(0, 0.0); 2],
            alignment: (0, 0.0),
            unblocked: (0, 0.0),
            conservation_violations: 0,
            fifo_violations: 0,
        }
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.events.push(Reverse(Event {
            time,
            seq: self.seq,
            kind,
        }));
    }

    fn schedule_arrival(&mut self, class: PacketClass) {
        let rate = self.rates[class.index()];
        if rate > 0.0 {
            let gap = self.arrivals[class.index()].exponential(1.0 / rate);
            self.push(self.now + gap, EventKind::Arrival(class));
        }
    }

    fn execute(mut self) -> SojournSummary {
        self.schedule_arrival(PacketClass::Short);
        self.schedule_arrival(PacketClass::Long);

        while let Some(Reverse(event)) = self.events.pop() {
            self.advance(event.time);
            match event.kind {
                EventKind::Arrival(class) => self.on_arrival(class),
                EventKind::Departure(server) => {
                    if self.on_departure(server) {
                        break;
                    }
                }
                EventKind::Dispatch => self.dispatch(),
            }
        }
        self.summarize()
    }

    fn advance(&mut self, time: f64) {
        if self.measuring {
            let dt = time - self.last_time;
            self.area += dt * self.in_system as f64;
            for (acc, s) in self.busy_time.iter_mut().zip(&self.servers) {
                if s.busy.is_some() {
                    *acc += dt;
                }
            }
        }
        self.last_time = time;
        self.now = time;
    }

    fn queue_lengths(&self) -> (usize, usize) {
        (self.queues[0].len(), self.queues[1].len())
    }

    fn trace(&mut self, event: TraceEvent, class: PacketClass, server: Option<usize>) {
        let (queue_len_short, queue_len_long) = self.queue_lengths();
        self.observer.event(&TraceRow {
            time: self.now,
            event,
            class,
            server,
            queue_len_short,
            queue_len_long,
        });
    }

    fn sample_service(&mut self, class: PacketClass) -> (f64, u64) {
        let slot = self.slot;
        match (class, self.spec.service) {
            (PacketClass::Short, ServiceLaw::Configured) => (slot, 1),
            (PacketClass::Short, ServiceLaw::Exponential) => (self.short_service.exponential(slot), 0),
            (PacketClass::Long, ServiceLaw::Configured) => {
                let region = sample_long_region(self.config.channel(), self.config.table(), &mut self.long_service);
                let n = self.config.long_slots()[region];
                (n as f64 * slot, n)
            }
            (PacketClass::Long, ServiceLaw::Exponential) => {
                let mean = self.config.long_moments().mean;
                (self.long_service.exponential(mean), 0)
            }
        }
    }

    fn on_arrival(&mut self, class: PacketClass) {
        let direction = match class {
            PacketClass::Long => Direction::Downlink,
            PacketClass::Short => {
                if self.direction.bernoulli(0.5) {
                    Direction::Uplink
                } else {
                    Direction::Downlink
                }
            }
        };
        let (service_duration, slots) = self.sample_service(class);
        let eligible_time = if self.spec.slot_aligned {
            (self.now / self.slot).ceil() * self.slot
        } else {
            self.now
        };
        self.next_id += 1;
        let packet = Packet {
            id: self.next_id,
            class,
            direction: Some(direction),
            arrival_time: self.now,
            eligible_time,
            service_duration,
            start_time: f64::NAN,
            departure_time: f64::NAN,
            server: None,
        };
        // Empty queues and a free server: only frame alignment delays it.
        let unblocked = self.queues.iter().all(VecDeque::is_empty) && self.servers.iter().any(|s| s.busy.is_none());
        if unblocked && class == PacketClass::Short && self.measuring {
            self.unblocked.0 += 1;
            self.unblocked.1 += eligible_time - self.now;
        }

        self.in_system += 1;
        if self.measuring {
            self.window_arrivals += 1;
        }
        self.queues[class.index()].push_back(Queued { packet, slots });
        self.trace(TraceEvent::Arrival, class, None);
        if eligible_time > self.last_dispatch {
            self.last_dispatch = eligible_time;
            self.push(eligible_time, EventKind::Dispatch);
        }
        self.schedule_arrival(class);
    }

    fn eligible_head(&self) -> Option<PacketClass> {
        [PacketClass::Short, PacketClass::Long].into_iter().find(|c| {
            self.queues[c.index()]
                .front()
                .is_some_and(|q| q.packet.eligible_time <= self.now)
        })
    }

    fn dispatch(&mut self) {
        let mut idle: Vec<usize> = (0..self.servers.len())
            .filter(|&i| self.servers[i].busy.is_none())
            .collect();
        idle.sort_by(|&a, &b| {
            self.servers[a]
                .idle_since
                .total_cmp(&self.servers[b].idle_since)
                .then(a.cmp(&b))
        });
        for server in idle {
            let Some(class) = self.eligible_head() else { break };
            let Queued { mut packet, slots } = self.queues[class.index()].pop_front().expect("eligible head");
            if packet.arrival_time < self.last_started[class.index()] {
                self.fifo_violations += 1;
            }
            self.last_started[class.index()] = packet.arrival_time;

            packet.start_time = self.now;
            packet.server = Some(server);
            packet.departure_time = if self.spec.slot_aligned {
                let start_slot = (self.now / self.slot).round() as u64;
                (start_slot + slots) as f64 * self.slot
            } else {
                self.now + packet.service_duration
            };
            let departure = packet.departure_time;
            self.servers[server].busy = Some((packet, slots));
            self.trace(TraceEvent::Start, class, Some(server));
            self.push(departure, EventKind::Departure(server));
        }
        if self.servers.iter().any(|s| s.busy.is_none()) && self.eligible_head().is_some() {
            self.conservation_violations += 1;
        }
    }

    /// Returns true once the horizon is reached.
    fn on_departure(&mut self, server: usize) -> bool {
        let (packet, _) = self.servers[server].busy.take().expect("departure from a busy server");
        self.servers[server].idle_since = self.now;
        self.in_system -= 1;
        self.departed += 1;
        self.trace(TraceEvent::Departure, packet.class, Some(server));
        self.observer.departure(&packet);

        if self.measuring {
            let sojourn = packet.sojourn();
            self.sojourns[packet.class.index()].push(sojourn);
            let d = match packet.direction {
                Some(Direction::Uplink) => 0,
                _ => 1,
            };
            self.direction_sums[d].0 += 1;
            self.direction_sums[d].1 += sojourn;
            self.alignment.0 += 1;
            self.alignment.1 += packet.eligible_time - packet.arrival_time;
        } else if self.departed == self.spec.warmup {
            self.measuring = true;
            self.window_start = self.now;
        }
        if self.departed >= self.spec.horizon {
            return true;
        }
        self.push(self.now, EventKind::Dispatch);
        false
    }

    fn summarize(self) -> SojournSummary {
        let window = self.now - self.window_start;
        let batches = self.spec.batches;
        let short = ClassStats::from_observations(&self.sojourns[0], batches);
        let long = ClassStats::from_observations(&self.sojourns[1], batches);
        let departures = short.count + long.count;
        let total: f64 = self.sojourns.iter().flatten().sum();
        let mean_sojourn = if departures > 0 { total / departures as f64 } else { 0.0 };
        let (mean_in_system, arrival_rate, busy_fraction) = if window > 0.0 {
            (
                self.area / window,
                self.window_arrivals as f64 / window,
                self.busy_time.iter().map(|b| b / window).collect(),
            )
        } else {
            (0.0, 0.0, vec![0.0; self.topology.servers()])
        };
        let little = arrival_rate * mean_sojourn;
        let littles_residual = if little > 0.0 {
            (mean_in_system - little).abs() / little
        } else {
            0.0
        };
        let dir = |(count, sum): (u64, f64)| MeanStat {
            count,
            mean: if count > 0 { sum / count as f64 } else { 0.0 },
        };
        SojournSummary {
            topology: self.topology,
            seed: self.spec.seed,
            warmup: self.spec.warmup,
            departures,
            short,
            long,
            uplink: dir(self.direction_sums[0]),
            downlink: dir(self.direction_sums[1]),
            window,
            busy_fraction,
            mean_in_system,
            arrival_rate,
            mean_sojourn,
            littles_residual,
            alignment_delay: dir(self.alignment),
            unblocked_wait: dir(self.unblocked),
            conservation_violations: self.conservation_violations,
            fifo_violations: self.fifo_violations,
        }
    }
}
