use std::fmt::Write as _;
use std::path::Path;

use meshcog::rate::{
    balance_alpha, gamma_csv, gamma_sweep, point_to_point_rate, RateParams, DEFAULT_RATE_TOL,
};
use meshcog::scheduler::{best_periodic_schedule, capacity_report, Bounds, CapacityReport};
use meshcog::simulator::{run, SimPolicy, SimReport};
use meshcog::topology::{
    chain_topology_with_factor, parse_topology, regular_topology_with_factor, NodeId, Topology,
    TrafficSpec, DEFAULT_INTERFERENCE_FACTOR, REGULAR_POSITIONS,
};
use meshcog::{Mode, Schedule};

use crate::grid::parse_grid;
use crate::{
    CapacityArgs, CliError, Engine, Format, GammaArgs, ModeArg, RateArgs, SimulateArgs,
    TopologyArgs,
};

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Failed(format!("cannot read {}: {e}", path.display())))
}

struct Loaded {
    label: String,
    topo: Topology,
    traffic: TrafficSpec,
}

fn load(args: &TopologyArgs) -> Result<Loaded> {
    if args.factor.is_some() && args.file.is_some() {
        return usage("--factor applies to --chain and --regular only");
    }
    let factor = args.factor.unwrap_or(DEFAULT_INTERFERENCE_FACTOR);
    let (label, topo, default_sources) = if let Some(n) = args.chain {
        let topo = chain_topology_with_factor(n, factor)?;
        (format!("chain {n}"), topo, vec![NodeId(n as u32)])
    } else if let Some(spec) = &args.regular {
        let parsed = spec.split_once(['x', 'X']).and_then(|(b, d)| {
            Some((
                b.trim().parse::<usize>().ok()?,
                d.trim().parse::<usize>().ok()?,
            ))
        });
        let Some((branches, depth)) = parsed else {
            return usage(format!("--regular expects BxD, got `{spec}`"));
        };
        let topo = regular_topology_with_factor(branches, depth, factor)?;
        let outer = (depth as u32 - 1) * REGULAR_POSITIONS;
        let sources = topo.nodes().filter(|n| n.0 > outer).collect();
        (format!("regular {branches}x{depth}"), topo, sources)
    } else if let Some(path) = &args.file {
        let doc = parse_topology(&read_file(path)?)?;
        let violations = doc.validate()?;
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(CliError::Failed(format!(
                "invalid topology {}: {}",
                path.display(),
                list.join("; ")
            )));
        }
        let topo = doc.build()?;
        let sources = topo.explicit_routes().keys().copied().collect();
        (format!("file {}", path.display()), topo, sources)
    } else {
        return usage("one of --chain, --regular or --file is required");
    };
    let sources = match &args.sources {
        Some(list) => list
            .iter()
            .map(|s| s.trim().parse::<NodeId>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::Usage(format!("--sources: {e}")))?,
        None => default_sources,
    };
    if sources.is_empty() {
        return usage("no traffic sources; pass --sources");
    }
    let traffic = TrafficSpec::for_sources(&topo, &sources)?;
    Ok(Loaded {
        label,
        topo,
        traffic,
    })
}

fn join_sources(traffic: &TrafficSpec) -> String {
    traffic
        .sources()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

struct Gamma {
    value: f64,
    note: String,
}

fn resolve_gamma(rate: &RateArgs) -> Result<Gamma> {
    if let Some(g) = rate.gamma {
        if !(g > 0.0 && g <= 1.0) {
            return usage(format!("--gamma must lie in (0,1], got {g}"));
        }
        return Ok(Gamma {
            value: g,
            note: "pinned".into(),
        });
    }
    let params = RateParams::new(rate.pp, rate.ps, rate.cross_gain)?;
    let g = balance_alpha(&params, DEFAULT_RATE_TOL)?;
    Ok(Gamma {
        value: g.gamma,
        note: format!("P_P={}, P_S={}, a={}", rate.pp, rate.ps, rate.cross_gain),
    })
}

fn greedy_pair(
    loaded: &Loaded,
    gamma: f64,
    slots: usize,
    warmup: usize,
) -> Result<(SimReport, SimReport)> {
    let sim = |mode| {
        run(
            &loaded.topo,
            &loaded.traffic,
            &SimPolicy::new(mode, gamma),
            slots,
            warmup,
        )
    };
    Ok((sim(Mode::Baseline)?, sim(Mode::Overlay)?))
}

struct GreedySummary {
    baseline: f64,
    overlay: f64,
    fell_back: bool,
    improvement: f64,
}

fn summarize_greedy(b: &SimReport, o: &SimReport) -> GreedySummary {
    let baseline = b.min_effective_rate();
    let (overlay, fell_back) = if o.min_effective_rate() < baseline {
        (baseline, true)
    } else {
        (o.min_effective_rate(), false)
    };
    GreedySummary {
        baseline,
        overlay,
        fell_back,
        improvement: overlay / baseline - 1.0,
    }
}

fn dump_text(schedules: [&Schedule; 2]) -> String {
    let mut out = String::new();
    for s in schedules {
        let k = s.deliveries_per_period.values().copied().min().unwrap_or(0);
        writeln!(out, "# {} k={} T={}", s.mode, k, s.period()).unwrap();
        let prefill: Vec<String> = s
            .prefill
            .iter()
            .map(|f| format!("{}@{}", f.packet, f.position))
            .collect();
        writeln!(out, "# prefill: {}", prefill.join(" ")).unwrap();
        out.push_str(&s.to_text());
    }
    out
}

fn bits_note(args: &CapacityArgs, capacity: f64) -> Result<String> {
    if !args.bits_per_use {
        return Ok(String::new());
    }
    let b = point_to_point_rate(args.rate.pp)?;
    Ok(format!(" = {:.4} bits/use", capacity * b))
}

pub fn capacity(args: &CapacityArgs) -> Result<String> {
    if args.dump_schedule.is_some() && args.engine == Engine::Greedy {
        return usage("--dump-schedule needs the exact engine");
    }
    let loaded = load(&args.topology)?;
    let gamma = resolve_gamma(&args.rate)?;
    let bounds = Bounds {
        t_max: args.t_max,
        k_max: args.k_max,
        inflight_max: args.inflight_max,
    };

    let exact = if args.engine != Engine::Greedy {
        let search = |mode| best_periodic_schedule(&loaded.topo, &loaded.traffic, mode, &bounds);
        let (b, o) = (search(Mode::Baseline)?, search(Mode::Overlay)?);
        let report = capacity_report(&b, &o, gamma.value)?;
        Some((b, o, report))
    } else {
        None
    };
    let greedy = if args.engine != Engine::Exact {
        Some(greedy_pair(&loaded, gamma.value, args.slots, args.warmup)?)
    } else {
        None
    };

    if let (Some((b, o, _)), Some((gb, go))) = (&exact, &greedy) {
        let slack = 1.0 / (args.slots - args.warmup) as f64;
        for (s, g) in [(b, gb), (o, go)] {
            if g.min_packets_per_slot() > s.min_rate() + slack {
                return Err(CliError::Failed(format!(
                    "greedy {} throughput {:.6} exceeds the exact optimum {:.6}",
                    s.mode,
                    g.min_packets_per_slot(),
                    s.min_rate()
                )));
            }
        }
    }
    if let (Some(path), Some((b, o, _))) = (&args.dump_schedule, &exact) {
        write_file(path, &dump_text([b, o]))?;
    }

    let mut out = String::new();
    match args.format {
        Format::Text => {
            writeln!(out, "topology: {}", loaded.label).unwrap();
            writeln!(out, "sources: {}", join_sources(&loaded.traffic)).unwrap();
            writeln!(out, "gamma: {:.4} ({})", gamma.value, gamma.note).unwrap();
            if let Some((_, _, r)) = &exact {
                capacity_text(&mut out, args, r)?;
            }
            if let Some((gb, go)) = &greedy {
                let g = summarize_greedy(gb, go);
                writeln!(
                    out,
                    "greedy baseline: {:.4} B per source{}",
                    g.baseline,
                    bits_note(args, g.baseline)?
                )
                .unwrap();
                writeln!(
                    out,
                    "greedy overlay:  {:.4} B per source{}{}",
                    g.overlay,
                    bits_note(args, g.overlay)?,
                    if g.fell_back {
                        " (baseline fallback)"
                    } else {
                        ""
                    }
                )
                .unwrap();
                writeln!(out, "greedy improvement: {:.2}%", g.improvement * 100.0).unwrap();
            }
        }
        Format::Csv => {
            out.push_str("engine,mode,source,deliveries,period,rate_factor,capacity_over_B,improvement_pct\n");
            if let Some((_, _, r)) = &exact {
                for m in [&r.baseline, &r.overlay] {
                    for (src, cap) in &m.capacity {
                        writeln!(
                            out,
                            "exact,{},{src},{},{},{:.6},{:.6},{:.3}",
                            m.mode,
                            m.deliveries[src],
                            m.period,
                            m.rate_factor,
                            cap,
                            r.improvement * 100.0
                        )
                        .unwrap();
                    }
                }
            }
            if let Some((gb, go)) = &greedy {
                let g = summarize_greedy(gb, go);
                for rep in [gb, go] {
                    for (src, s) in &rep.per_source {
                        writeln!(
                            out,
                            "greedy,{},{src},{},{},{:.6},{:.6},{:.3}",
                            rep.mode,
                            s.delivered,
                            rep.window,
                            rep.rate_factor,
                            s.effective_rate,
                            g.improvement * 100.0
                        )
                        .unwrap();
                    }
                }
            }
        }
    }
    Ok(out)
}

fn capacity_text(out: &mut String, args: &CapacityArgs, r: &CapacityReport) -> Result<()> {
    for (label, m) in [("baseline:", &r.baseline), ("overlay:", &r.overlay)] {
        let k = m.deliveries.values().copied().min().unwrap_or(0);
        let cap = m.min_capacity();
        writeln!(
            out,
            "exact {label:<9} k/T = {k}/{}, capacity {cap:.4} B per source{}, {} secondary transmissions per period",
            m.period,
            bits_note(args, cap)?,
            m.secondaries
        )
        .unwrap();
    }
    if r.overlay_fell_back {
        writeln!(out, "exact overlay falls back to the baseline schedule").unwrap();
    }
    writeln!(out, "exact improvement: {:.2}%", r.improvement * 100.0).unwrap();
    Ok(())
}

pub fn gamma(args: &GammaArgs) -> Result<String> {
    let a = parse_grid(&args.cross_gain).map_err(|e| CliError::Usage(format!("--a: {e}")))?;
    let p = parse_grid(&args.power).map_err(|e| CliError::Usage(format!("--power: {e}")))?;
    let rows = gamma_sweep(&a, &p)?;
    let highlight = rows.iter().find(|r| r.cross_gain == 0.2 && r.power == 10.0);
    match args.format {
        Format::Csv => {
            if let Some(r) = highlight {
                eprintln!("gamma(a=0.2, P=10) = {:.4}", r.gamma);
            }
            Ok(gamma_csv(&rows))
        }
        Format::Text => {
            let mut out = String::new();
            writeln!(
                out,
                "{:>8} {:>8} {:>10} {:>8}",
                "a", "power", "alpha_hat", "gamma"
            )
            .unwrap();
            for r in &rows {
                writeln!(
                    out,
                    "{:>8} {:>8} {:>10.6} {:>8.6}",
                    r.cross_gain, r.power, r.alpha_hat, r.gamma
                )
                .unwrap();
            }
            if let Some(r) = highlight {
                writeln!(out, "\ngamma(a=0.2, P=10) = {:.4}", r.gamma).unwrap();
            }
            Ok(out)
        }
    }
}

pub fn validate(path: &Path) -> Result<String> {
    let doc = parse_topology(&read_file(path)?)?;
    let violations = doc.validate()?;
    if !violations.is_empty() {
        let mut report = String::new();
        for v in &violations {
            writeln!(report, "{v}").unwrap();
        }
        return Err(CliError::Rejected {
            report,
            summary: format!("{} violation(s) in {}", violations.len(), path.display()),
        });
    }
    let topo = doc.build()?;
    let links: usize = topo.nodes().map(|n| topo.neighbors(n).len()).sum::<usize>() / 2;
    Ok(format!(
        "ok: {} nodes, {} links, {} routes\n",
        topo.node_count(),
        links,
        topo.explicit_routes().len()
    ))
}

pub fn simulate(args: &SimulateArgs) -> Result<String> {
    let loaded = load(&args.topology)?;
    let gamma = resolve_gamma(&args.rate)?;
    let modes: &[Mode] = match args.mode {
        ModeArg::Baseline => &[Mode::Baseline],
        ModeArg::Overlay => &[Mode::Overlay],
        ModeArg::Both => &[Mode::Baseline, Mode::Overlay],
    };
    let mut reports = Vec::new();
    for &mode in modes {
        let policy = SimPolicy {
            mode,
            seed: args.seed,
            gamma: gamma.value,
            record_trace: args.trace.is_some(),
        };
        reports.push(run(
            &loaded.topo,
            &loaded.traffic,
            &policy,
            args.slots,
            args.warmup,
        )?);
    }
    if let Some(path) = &args.trace {
        let mut text = String::new();
        for r in &reports {
            writeln!(text, "# {}", r.mode).unwrap();
            for line in r.trace.iter().flatten() {
                writeln!(text, "{line}").unwrap();
            }
        }
        write_file(path, &text)?;
    }
    let mut out = String::new();
    match args.format {
        Format::Csv => {
            for (i, r) in reports.iter().enumerate() {
                let csv = r.to_csv();
                out.push_str(if i == 0 {
                    &csv
                } else {
                    csv.split_once('\n').map_or("", |x| x.1)
                });
            }
        }
        Format::Text => {
            writeln!(out, "topology: {}", loaded.label).unwrap();
            writeln!(out, "sources: {}", join_sources(&loaded.traffic)).unwrap();
            writeln!(out, "gamma: {:.4} ({})", gamma.value, gamma.note).unwrap();
            writeln!(out, "window: slots {}..{}", args.warmup, args.slots).unwrap();
            for r in &reports {
                writeln!(
                    out,
                    "{}: min {:.4} packets/slot, {:.4} B effective, {} secondaries, digest {:016x}",
                    r.mode,
                    r.min_packets_per_slot(),
                    r.min_effective_rate(),
                    r.secondaries,
                    r.digest
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}
