use tdd_queue::analytic::{mg1_priority_sojourn, mg1_priority_sojourn_slotted};
use tdd_queue::desim::{
    run, run_with, sweep, CsvTrace, NoopObserver, Observer, Packet, PacketClass, RunSpec, ServiceLaw, SweepTemplate,
    Topology,
};
use tdd_queue::traffic_channel::{ChannelModel, RateAdaptationTable, TrafficConfig};
use tdd_queue::Error;

fn mixed_tti() -> SweepTemplate {
    SweepTemplate {
        mu_short: 1.0,
        lambda_ratio: 4.0,
        channel: ChannelModel::from_db(5.0).unwrap(),
        table: RateAdaptationTable::from_db(&[0.0, 10.0], &[15.0, 10.0, 2.0]).unwrap(),
    }
}

fn short_only(lambda: f64) -> TrafficConfig {
    TrafficConfig::new(
        lambda,
        0.0,
        1.0,
        ChannelModel::new(1.0).unwrap(),
        RateAdaptationTable::single(1.0).unwrap(),
    )
    .unwrap()
}

#[derive(Default)]
struct Collect {
    packets: Vec<Packet>,
}

impl Observer for Collect {
    fn departure(&mut self, packet: &Packet) {
        self.packets.push(packet.clone());
    }
}

#[test]
fn mm1_sanity_mode() {
    let s = run_with(
        &short_only(0.5),
        Topology::Coupled,
        &RunSpec::measured(1_000_000, 3).sanity(),
        &mut NoopObserver,
    )
    .unwrap();
    // M/M/1: 1/(μ−λ) = 2
    assert!((s.short.mean - 2.0).abs() < 0.02 * 2.0, "{}", s.short.mean);
    assert_eq!(s.long.count, 0);
}

#[test]
fn md1_without_alignment() {
    let spec = RunSpec {
        slot_aligned: false,
        service: ServiceLaw::Configured,
        ..RunSpec::measured(500_000, 4)
    };
    let s = run_with(&short_only(0.5), Topology::Coupled, &spec, &mut NoopObserver).unwrap();
    // M/D/1: 1 + ρ/(2(1−ρ)) = 1.5
    assert!((s.short.mean - 1.5).abs() < 0.02 * 1.5, "{}", s.short.mean);
}

#[test]
fn slotted_md1_matches_pk_plus_alignment() {
    let c = short_only(0.5);
    let s = run(&c, Topology::Coupled, 550_000, 50_000, 8).unwrap();
    let p = mg1_priority_sojourn(&c.load()).unwrap();
    assert!((p.mean_short() - 2.0).abs() < 1e-12);
    assert!((s.short.mean - 2.0).abs() < 0.02 * 2.0, "{}", s.short.mean);
}

#[test]
fn empty_system() {
    let s = run(&short_only(0.0), Topology::Decoupled, 100, 10, 1).unwrap();
    assert!(s.is_empty());
    assert_eq!(s.short.count + s.long.count, 0);
    assert_eq!(s.busy_fraction, vec![0.0, 0.0]);
}

#[test]
fn rejects_bad_horizon() {
    let err = run(&short_only(0.5), Topology::Coupled, 10, 10, 1).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter { name: "horizon", .. }));
}

#[test]
fn coupled_matches_slot_exact_priority_formula() {
    let config = mixed_tti().at(0.5).unwrap();
    let s = run_with(
        &config,
        Topology::Coupled,
        &RunSpec::measured(1_000_000, 21),
        &mut NoopObserver,
    )
    .unwrap();
    let exact = mg1_priority_sojourn_slotted(&config.load()).unwrap();
    for (stats, want) in [(&s.short, exact.mean_short()), (&s.long, exact.mean_long())] {
        assert!(
            (stats.mean - want).abs() < 3.0 * stats.ci95 + 1e-3 * want,
            "{} vs {want}",
            stats.mean
        );
    }
    // Long class also agrees with the unslotted formula to within 5%.
    let pk = mg1_priority_sojourn(&config.load()).unwrap();
    assert!((s.long.mean - pk.mean_long()).abs() < 0.05 * pk.mean_long());
    assert!(s.converged());
}

#[test]
fn packet_invariants_and_fifo() {
    for topology in [Topology::Coupled, Topology::Decoupled] {
        let config = mixed_tti().at(0.8).unwrap();
        let mut obs = Collect::default();
        let s = run_with(&config, topology, &RunSpec::new(50_000, 5), &mut obs).unwrap();
        assert_eq!(s.conservation_violations, 0);
        assert_eq!(s.fifo_violations, 0);
        assert_eq!(obs.packets.len(), 50_000);
        for p in &obs.packets {
            assert!(p.start_time >= p.arrival_time);
            assert_eq!(p.start_time.fract(), 0.0, "start off the slot grid");
            assert_eq!(p.departure_time, p.start_time + p.service_duration);
            assert!(p.eligible_time - p.arrival_time < 1.0 && p.eligible_time >= p.arrival_time);
        }
        for class in [PacketClass::Short, PacketClass::Long] {
            let mut same: Vec<&Packet> = obs.packets.iter().filter(|p| p.class == class).collect();
            // Start order follows arrival order within a class.
            same.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time));
            assert!(same.windows(2).all(|w| w[0].start_time <= w[1].start_time));
            // Per server, departures follow arrival order.
            for server in 0..topology.servers() {
                let on: Vec<&&Packet> = same.iter().filter(|p| p.server == Some(server)).collect();
                assert!(on.windows(2).all(|w| w[0].departure_time <= w[1].departure_time));
            }
        }
    }
}

#[test]
fn short_class_faster_and_decoupling_helps() {
    let config = mixed_tti().at(0.7).unwrap();
    let spec = RunSpec::measured(300_000, 2);
    let c = run_with(&config, Topology::Coupled, &spec, &mut NoopObserver).unwrap();
    let d = run_with(&config, Topology::Decoupled, &spec, &mut NoopObserver).unwrap();
    assert!(c.short.mean < c.long.mean);
    assert!(d.short.mean < d.long.mean);
    assert!(d.short.mean < c.short.mean);
    assert!(d.long.mean < c.long.mean);
}

#[test]
fn conservation_laws() {
    for topology in [Topology::Coupled, Topology::Decoupled] {
        let config = mixed_tti().at(0.6).unwrap();
        let s = run_with(&config, topology, &RunSpec::measured(1_000_000, 30), &mut NoopObserver).unwrap();
        assert!(s.littles_residual < 0.01, "{}", s.littles_residual);
        for b in &s.busy_fraction {
            assert!((b - 0.6).abs() < 0.01, "{b}");
        }
        let expected_rate = topology.traffic_scale() * (config.lambda_short() + config.lambda_long());
        assert!((s.arrival_rate - expected_rate).abs() < 0.01 * expected_rate);
    }
}

#[test]
fn frame_alignment_is_half_a_slot() {
    let config = mixed_tti().at(0.3).unwrap();
    let s = run_with(
        &config,
        Topology::Coupled,
        &RunSpec::measured(1_000_000, 12),
        &mut NoopObserver,
    )
    .unwrap();
    assert!((s.alignment_delay.mean - 0.5).abs() < 0.01 * 0.5);
    assert!(s.unblocked_wait.count > 10_000);
    assert!(
        (s.unblocked_wait.mean - 0.5).abs() < 0.02 * 0.5,
        "{}",
        s.unblocked_wait.mean
    );
}

#[test]
fn direction_tags_do_not_change_totals() {
    let config = mixed_tti().at(0.5).unwrap();
    let s = run_with(&config, Topology::Coupled, &RunSpec::new(100_000, 3), &mut NoopObserver).unwrap();
    assert_eq!(s.uplink.count + s.downlink.count, s.departures);
    let total = s.uplink.mean * s.uplink.count as f64 + s.downlink.mean * s.downlink.count as f64;
    assert!((total / s.departures as f64 - s.mean_sojourn).abs() < 1e-9 * s.mean_sojourn);
}

#[test]
fn identical_inputs_identical_summaries() {
    let config = mixed_tti().at(0.7).unwrap();
    let spec = RunSpec::new(100_000, 99);
    let a = run_with(&config, Topology::Decoupled, &spec, &mut NoopObserver).unwrap();
    let b = run_with(&config, Topology::Decoupled, &spec, &mut NoopObserver).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.short.mean.to_bits(), b.short.mean.to_bits());
    let c = run_with(
        &config,
        Topology::Decoupled,
        &RunSpec::new(100_000, 100),
        &mut NoopObserver,
    )
    .unwrap();
    assert_ne!(a.short.mean, c.short.mean);
}

#[test]
fn sweep_seeds_and_errors() {
    let t = mixed_tti();
    let base = RunSpec::new(20_000, 10);
    let one = sweep(&t, Topology::Coupled, &[0.4], &base);
    let direct = run_with(&t.at(0.4).unwrap(), Topology::Coupled, &base, &mut NoopObserver).unwrap();
    assert_eq!(one[0].result.as_ref().unwrap(), &direct);

    let pts = sweep(&t, Topology::Coupled, &[0.4, 1.2, 0.4, 0.4], &base);
    assert_eq!(pts.iter().map(|p| p.seed).collect::<Vec<_>>(), vec![10, 11, 12, 13]);
    assert!(pts[1].result.is_err());
    assert!(pts[0].result.is_ok() && pts[2].result.is_ok());
    // Same point index and base seed reproduce the same summary.
    let again = sweep(&t, Topology::Coupled, &[0.4, 1.2, 0.4, 0.4], &base);
    assert_eq!(pts, again);
}

#[test]
fn event_trace_csv() {
    let config = mixed_tti().at(0.5).unwrap();
    let mut sink = CsvTrace::new(Vec::new()).unwrap();
    run_with(&config, Topology::Decoupled, &RunSpec::new(200, 0), &mut sink).unwrap();
    let text = String::from_utf8(sink.finish().unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("time,event,class,server,queue_len_short,queue_len_long")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 6));
    assert_eq!(rows.iter().filter(|r| r[1] == "departure").count(), 200);
    assert!(rows.iter().filter(|r| r[1] == "arrival").all(|r| r[3].is_empty()));
    assert!(rows
        .iter()
        .filter(|r| r[1] == "start")
        .all(|r| r[3] == "0" || r[3] == "1"));
}

#[test]
fn saturated_config_rejected_up_front() {
    assert!(matches!(mixed_tti().at(1.0), Err(Error::InvalidParameter { .. })));
    let err = TrafficConfig::new(
        0.6,
        0.3,
        1.0,
        ChannelModel::new(1.0).unwrap(),
        RateAdaptationTable::single(0.5).unwrap(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Saturated { .. }));
}
