use meshcog::rate::{
    achievable_rates, balance_alpha, overlay_alpha_star, two_switch_capacity, RateParams,
    DEFAULT_RATE_TOL,
};
use meshcog::scheduler::{best_periodic_schedule, validate_slot, verify_schedule, Bounds};
use meshcog::simulator::{SimPolicy, SimState};
use meshcog::topology::{
    chain_topology, chain_topology_with_factor, random_geometric_topology, Link, NodeId, Topology,
    TrafficSpec,
};
use meshcog::Mode;
use proptest::prelude::*;

fn all_links(t: &Topology) -> Vec<Link> {
    let mut out = Vec::new();
    for a in t.nodes() {
        for &b in t.neighbors(a) {
            out.push(Link::new(a, b));
        }
    }
    out
}

fn dist(t: &Topology, a: NodeId, b: NodeId) -> f64 {
    let (pa, pb) = (t.coords(a).unwrap(), t.coords(b).unwrap());
    (pa.0 - pb.0).hypot(pa.1 - pb.1)
}

fn geometric_conflict(t: &Topology, l1: &Link, l2: &Link) -> bool {
    let f = t.interference_factor();
    [l1.tx, l1.rx].iter().any(|&a| {
        [l2.tx, l2.rx]
            .iter()
            .any(|&b| a == b || dist(t, a, b) <= f + 1e-9)
    })
}

fn brute_force_gamma(params: &RateParams) -> f64 {
    let base = 0.5 * (1.0 + params.p_primary).log2();
    let mut best = 0.0f64;
    let steps = 100_000;
    for i in 0..=steps {
        let r = achievable_rates(i as f64 / steps as f64, params).unwrap();
        best = best.max(r.min_rate());
    }
    best / base
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conflicts_symmetric_and_geometric(n in 2usize..12, factor in 1.0f64..4.0, seed in any::<u64>()) {
        let t = random_geometric_topology(n, factor, seed).unwrap();
        let links = all_links(&t);
        for l1 in &links {
            prop_assert!(t.conflicts(l1, l1).unwrap());
            for l2 in &links {
                let c = t.conflicts(l1, l2).unwrap();
                prop_assert_eq!(c, t.conflicts(l2, l1).unwrap());
                prop_assert_eq!(c, geometric_conflict(&t, l1, l2));
            }
        }
    }

    #[test]
    fn chain_conflict_is_separation_below_five(n in 2usize..=30, i in 1u32..30, j in 1u32..30) {
        prop_assume!(i as usize <= n && j as usize <= n);
        let t = chain_topology(n).unwrap();
        let li = Link::new(NodeId(i), NodeId(i - 1));
        let lj = Link::new(NodeId(j), NodeId(j - 1));
        prop_assert_eq!(t.conflicts(&li, &lj).unwrap(), i.abs_diff(j) < 5);
    }

    #[test]
    fn alpha_star_in_unit_interval(pp in 0.0f64..50.0, ps in 0.0f64..50.0, a in 0.0f64..1.0) {
        let params = RateParams::new(pp, ps, a).unwrap();
        let alpha = overlay_alpha_star(&params).unwrap();
        prop_assert!((0.0..=1.0).contains(&alpha));
    }

    #[test]
    fn rates_move_in_opposite_directions(p in 0.5f64..40.0, a in 0.01f64..1.0, x in 0.0f64..0.99) {
        let params = RateParams::symmetric(p, a).unwrap();
        let lo = achievable_rates(x, &params).unwrap();
        let hi = achievable_rates(x + 0.01, &params).unwrap();
        prop_assert!(hi.rate_primary >= lo.rate_primary - 1e-12);
        prop_assert!(hi.rate_secondary <= lo.rate_secondary + 1e-12);
    }

    #[test]
    fn two_switch_monotone(ps in 0.0f64..40.0, pr in 0.01f64..0.99) {
        let c = two_switch_capacity(ps, pr).unwrap();
        prop_assert!(two_switch_capacity(ps + 1.0, pr).unwrap() >= c);
        prop_assert!(two_switch_capacity(ps, pr + 0.01).unwrap() >= c - 1e-12);
    }

    #[test]
    fn gamma_trends(p in 1.0f64..40.0, a in 0.05f64..0.95) {
        let g = |p: f64, a: f64| balance_alpha(&RateParams::symmetric(p, a).unwrap(), DEFAULT_RATE_TOL).unwrap().gamma;
        let here = g(p, a);
        prop_assert!(here > 0.0 && here < 1.0);
        prop_assert!(g(p, a + 0.05) <= here + 1e-9);
        prop_assert!(g(p + 1.0, a) <= here + 1e-9);
    }

    #[test]
    fn simulated_slots_are_admissible(n in 2usize..=12, seed in any::<u64>(), overlay in any::<bool>()) {
        let t = random_geometric_topology(n, 3.0, seed).unwrap();
        let sources: Vec<NodeId> = t.nodes().filter(|&v| v != t.gateway()).rev().take(3).collect();
        let tr = TrafficSpec::for_sources(&t, &sources).unwrap();
        let mode = if overlay { Mode::Overlay } else { Mode::Baseline };
        let policy = SimPolicy::new(mode, 1.0);
        let mut state = SimState::new(&tr, None);
        let mut last_delivered = 0;
        for _ in 0..150 {
            let knowledge = state.knowledge.clone();
            let slot = state.step(&t, &tr, &policy);
            prop_assert!(validate_slot(&t, &slot, mode, &knowledge).is_ok());
            let delivered: u64 = state.delivered.values().sum();
            let created: u64 = tr.sources().map(|s| state.created(s)).sum();
            prop_assert!(delivered >= last_delivered);
            prop_assert_eq!(created, delivered + state.in_network() as u64);
            last_delivered = delivered;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn balanced_gamma_matches_grid(p in 1.0f64..40.0, a in 0.05f64..1.0) {
        let params = RateParams::symmetric(p, a).unwrap();
        let g = balance_alpha(&params, DEFAULT_RATE_TOL).unwrap().gamma;
        prop_assert!((g - brute_force_gamma(&params)).abs() < 1e-4);
    }

    #[test]
    fn exact_schedules_replay(n in 2usize..=8, seed in any::<u64>(), overlay in any::<bool>()) {
        let t = random_geometric_topology(n, 3.0, seed).unwrap();
        let src = t.nodes().last().unwrap();
        prop_assume!(src != t.gateway());
        let tr = TrafficSpec::for_sources(&t, &[src]).unwrap();
        let mode = if overlay { Mode::Overlay } else { Mode::Baseline };
        let s = best_periodic_schedule(&t, &tr, mode, &Bounds::default()).unwrap();
        prop_assert!(verify_schedule(&t, &s, 3).is_ok());
        let again = best_periodic_schedule(&t, &tr, mode, &Bounds::default()).unwrap();
        prop_assert_eq!(s.to_text(), again.to_text());
    }
}

#[test]
fn chain_baseline_closed_form() {
    for n in 6..=12 {
        let src = NodeId(n as u32);
        for (factor, expected) in [(3.0, 5), (1.0, 3)] {
            let t = chain_topology_with_factor(n, factor).unwrap();
            let tr = TrafficSpec::for_sources(&t, &[src]).unwrap();
            let s = best_periodic_schedule(&t, &tr, Mode::Baseline, &Bounds::default()).unwrap();
            assert_eq!(
                (s.deliveries_per_period[&src], s.period()),
                (1, expected),
                "n={n} factor={factor}"
            );
        }
    }
}

#[test]
fn overlay_never_below_baseline_on_chains() {
    for n in 2..=10 {
        let t = chain_topology(n).unwrap();
        let tr = TrafficSpec::for_sources(&t, &[NodeId(n as u32)]).unwrap();
        let b = best_periodic_schedule(&t, &tr, Mode::Baseline, &Bounds::default()).unwrap();
        let o = best_periodic_schedule(&t, &tr, Mode::Overlay, &Bounds::default()).unwrap();
        assert!(o.min_rate() >= b.min_rate(), "n={n}");
    }
}
