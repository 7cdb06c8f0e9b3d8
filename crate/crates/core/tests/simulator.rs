use meshcog::fixtures::{mesh23, mesh23_sources};
use meshcog::rate::{balance_alpha, RateParams, DEFAULT_RATE_TOL};
use meshcog::scheduler::{best_periodic_schedule, Bounds};
use meshcog::simulator::{run, SimPolicy};
use meshcog::topology::{chain_topology, regular_topology, NodeId, Topology, TrafficSpec};
use meshcog::Mode;

fn gamma() -> f64 {
    balance_alpha(&RateParams::symmetric(10.0, 0.2).unwrap(), DEFAULT_RATE_TOL)
        .unwrap()
        .gamma
}

#[test]
fn chain_overlay_close_to_optimum() {
    let t = chain_topology(8).unwrap();
    let tr = TrafficSpec::for_sources(&t, &[NodeId(8)]).unwrap();
    let r = run(&t, &tr, &SimPolicy::new(Mode::Overlay, gamma()), 10_050, 50).unwrap();
    assert!(
        r.min_effective_rate() >= 0.95 * 2.0 / 7.0 - 0.005,
        "{}",
        r.min_effective_rate()
    );
    assert!(r.secondaries > 0);
}

#[test]
fn greedy_never_beats_exact_on_fixtures() {
    let mut cases: Vec<(Topology, Vec<NodeId>)> = vec![
        (chain_topology(8).unwrap(), vec![NodeId(8)]),
        (mesh23().unwrap(), mesh23_sources()),
    ];
    for b in [2, 4, 8] {
        let t = regular_topology(b, 5).unwrap();
        let s = t.nodes().filter(|n| n.0 > 32).collect();
        cases.push((t, s));
    }
    let (n_slots, warmup) = (4050, 50);
    for (t, sources) in cases {
        let tr = TrafficSpec::for_sources(&t, &sources).unwrap();
        for mode in [Mode::Baseline, Mode::Overlay] {
            let exact = best_periodic_schedule(&t, &tr, mode, &Bounds::default()).unwrap();
            let sim = run(&t, &tr, &SimPolicy::new(mode, 1.0), n_slots, warmup).unwrap();
            let slack = 1.0 / (n_slots - warmup) as f64;
            assert!(
                sim.min_packets_per_slot() <= exact.min_rate() + slack,
                "{sources:?} {mode}: {} > {}",
                sim.min_packets_per_slot(),
                exact.min_rate()
            );
        }
    }
}

#[test]
fn csv_report_shape() {
    let t = chain_topology(8).unwrap();
    let tr = TrafficSpec::for_sources(&t, &[NodeId(8)]).unwrap();
    let r = run(&t, &tr, &SimPolicy::new(Mode::Baseline, 1.0), 1050, 50).unwrap();
    assert_eq!(
        r.to_csv(),
        "source,mode,packets_per_slot,effective_rate_over_B\n8,baseline,0.200000,0.200000\n"
    );
}

#[test]
fn seeded_runs_repeat() {
    let t = regular_topology(4, 5).unwrap();
    let s: Vec<NodeId> = t.nodes().filter(|n| n.0 > 32).collect();
    let tr = TrafficSpec::for_sources(&t, &s).unwrap();
    let mut p = SimPolicy::new(Mode::Overlay, 1.0);
    p.seed = Some(11);
    let a = run(&t, &tr, &p, 600, 50).unwrap();
    let b = run(&t, &tr, &p, 600, 50).unwrap();
    assert_eq!(a.digest, b.digest);
}
