//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use uavnet_core::model::UserDevice;
use uavnet_core::placement::initial_placement_with_counts;
use uavnet_core::routing::dijkstra_tree;
use uavnet_core::sectorization::{assign_users_to_sectors, compute_sector_count, required_uavs};
use uavnet_core::sim::TickEvents;
use uavnet_core::{
    run, ClassRates, ControllerPos, MaxUavs, Role, RunFlags, RunReport, SimConfig, Simulation,
    TickMetrics, Traffic, UavGraph,
};

type Outcome = Result<String, String>;

/// Error message with its whole source chain.
fn describe(e: impl std::error::Error) -> String {
    let mut msg = e.to_string();
    let mut cause = e.source();
    while let Some(c) = cause {
        msg.push_str(&format!(": {c}"));
        cause = c.source();
    }
    msg
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Flow accounting for one run: offered = served + drops, and the controller
/// receives total intake minus relay drops.
fn conservation(
    label: &str,
    metrics: &[TickMetrics],
    events: &[TickEvents],
) -> Result<usize, String> {
    check(metrics.len() == events.len(), || {
        format!("{label}: metrics/events length mismatch")
    })?;
    for (m, e) in metrics.iter().zip(events) {
        check(
            m.offered == m.served + m.dropped_access + m.dropped_relay,
            || {
                format!(
                    "{label} tick {}: offered {} != served {} + drops {} + {}",
                    m.tick, m.offered, m.served, m.dropped_access, m.dropped_relay
                )
            },
        )?;
        check(e.delivered == e.total_intake - m.dropped_relay, || {
            format!(
                "{label} tick {}: delivered {} != intake {} - relay drops {}",
                m.tick, e.delivered, e.total_intake, m.dropped_relay
            )
        })?;
        check(m.served == e.delivered, || {
            format!("{label} tick {}: served != delivered", m.tick)
        })?;
    }
    Ok(metrics.len())
}

fn criterion_coverage_band(sim: &Simulation, elapsed: Duration) -> Outcome {
    let cfg = &sim.cfg;
    let grid = sim.snr_grid();
    let serving: Vec<_> = sim.state.serving().collect();
    let (inner, outer) = (
        cfg.venue_radius - cfg.uav_range,
        cfg.venue_radius + cfg.uav_range,
    );
    let mut total = 0usize;
    let mut in_band = 0usize;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, y, snr) in grid.points() {
        let r = x.hypot(y);
        if r < inner || r > outer {
            continue;
        }
        if !serving
            .iter()
            .any(|u| u.horizontal_distance(x, y) <= cfg.uav_range)
        {
            continue;
        }
        total += 1;
        lo = lo.min(snr);
        hi = hi.max(snr);
        if (14.0..=41.0).contains(&snr) {
            in_band += 1;
        }
    }
    check(total > 0, || "no covered annulus points".into())?;
    let share = in_band as f64 / total as f64;
    check(share >= 0.95, || {
        format!(
            "{in_band}/{total} points in [14, 41] dB ({:.1}%)",
            share * 100.0
        )
    })?;
    check(elapsed < Duration::from_secs(60), || {
        format!("run took {elapsed:?}")
    })?;
    Ok(format!(
        "{in_band}/{total} covered points in band, range {lo:.2}..{hi:.2} dB, run {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn criterion_corners(sim: &Simulation) -> Outcome {
    let corners = sim.snr_grid().corners();
    check(corners.iter().all(|&c| c < 14.0), || {
        format!("corner SNR {corners:?}")
    })?;
    Ok(format!(
        "corners {:.2} {:.2} {:.2} {:.2} dB",
        corners[0], corners[1], corners[2], corners[3]
    ))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

fn criterion_drop_curve() -> Outcome {
    let cfg = SimConfig {
        surge_factor: 2.0,
        surge_tick: 11,
        ticks: 31,
        max_uavs: MaxUavs::Unlimited,
        ..SimConfig::default()
    };
    let report = run(cfg, &RunFlags::default()).map_err(describe)?;
    conservation("drop curve", &report.ticks, &report.events)?;
    let m = &report.ticks;
    let detected = report
        .events
        .iter()
        .find(|e| !e.surge_sectors.is_empty())
        .map(|e| e.tick as usize)
        .ok_or("no surge detected")?;
    check(detected >= 1, || "surge detected at tick 0".into())?;
    let before = m[detected - 1].active_uavs;
    let grew = (detected..=(detected + 1).min(m.len() - 1)).any(|t| m[t].active_uavs > before);
    check(grew, || {
        format!(
            "active_uavs {before} at tick {} did not grow by tick {}",
            detected - 1,
            detected + 1
        )
    })?;

    let avg: Vec<f64> = m.iter().map(|t| t.avg_dropped_per_uav.as_units()).collect();
    let surge_window = mean(&avg[11..=14]);
    let settled = mean(&avg[15..=30]);
    check(settled < surge_window, || {
        format!(
            "mean avg_dropped ticks 15-30 = {settled:.6} not below ticks 11-14 = {surge_window:.6}"
        )
    })?;
    let peak = avg[11..].iter().copied().fold(0.0, f64::max);
    let tail_var = variance(&avg[avg.len() - 5..]);
    check(tail_var < 0.05 * peak, || {
        format!("final-5 variance {tail_var:.6} not below 5% of peak {peak:.6}")
    })?;
    Ok(format!(
        "surge seen tick {detected}, active {before} -> {}, mean 11-14 {surge_window:.3} > 15-30 {settled:.3}, tail var {tail_var:.4} vs peak {peak:.3}",
        m[(detected + 1).min(m.len() - 1)].active_uavs
    ))
}

/// One user per sector, directly under the sector's single UAV.
fn capped_scenario(cfg: &SimConfig, rates: ClassRates) -> Result<Simulation, String> {
    let count = compute_sector_count(cfg.venue_radius, cfg.uav_range);
    let width = TAU / count as f64;
    let mut users: Vec<UserDevice> = (0..count)
        .map(|n| UserDevice {
            id: n,
            radius: cfg.venue_radius,
            angle: (n as f64 + 0.5) * width,
            sector_id: 0,
            serving_uav: None,
            gen_rate: rates,
            base_gen_rate: rates,
        })
        .collect();
    let sectors = assign_users_to_sectors(&mut users, count);
    let controller = ControllerPos::for_config(cfg);
    let state = initial_placement_with_counts(&sectors, &vec![1; count], &controller, cfg)
        .map_err(describe)?;
    Simulation::from_parts(cfg.clone(), users, controller, sectors, state).map_err(describe)
}

fn criterion_congestion() -> Outcome {
    let base = SimConfig::default();
    let count = compute_sector_count(base.venue_radius, base.uav_range);
    let cfg = SimConfig {
        max_uavs: MaxUavs::Limited(count + 1),
        surge_tick: 1_000,
        ticks: 8,
        ..base
    };
    let b = cfg.buffer_access_traffic();
    let demand = b.scale_ratio(14, 10);
    let bound = ((1.0f64 / 1.4).ln() / 0.9f64.ln()).ceil() as usize;

    let mut sim = capped_scenario(&cfg, ClassRates::new(Traffic::ZERO, demand, Traffic::ZERO))?;
    check(
        sim.state.uavs.iter().all(|u| u.served_users.len() <= 1),
        || "a UAV serves more than one user".into(),
    )?;
    let mut congested_ticks = 0;
    let mut cleared_at = None;
    for _ in 0..cfg.ticks {
        let m = *sim.step().map_err(describe)?;
        if m.dropped_access.is_zero() {
            cleared_at = Some(m.tick);
            break;
        }
        congested_ticks += 1;
    }
    conservation("congestion", &sim.metrics, &sim.events)?;
    let cleared = cleared_at.ok_or("dropped_access never reached 0")?;
    check(congested_ticks <= bound, || {
        format!("{congested_ticks} congested ticks, bound {bound}")
    })?;

    let control = Traffic::from_units_int(7);
    let mixed_rt = demand - control;
    let mut mixed = capped_scenario(&cfg, ClassRates::new(control, mixed_rt, Traffic::ZERO))?;
    let aggregate = |s: &Simulation| s.users.iter().map(|u| u.gen_rate.control).sum::<Traffic>();
    let initial = aggregate(&mixed);
    for _ in 0..cfg.ticks {
        mixed.step().map_err(describe)?;
        let now = aggregate(&mixed);
        check(now == initial, || {
            format!(
                "control aggregate {now} != {initial} at tick {}",
                mixed.tick - 1
            )
        })?;
    }
    conservation("congestion mixed", &mixed.metrics, &mixed.events)?;
    check(mixed.events.iter().any(|e| !e.feedback.is_empty()), || {
        "mixed variant issued no feedback".into()
    })?;
    Ok(format!(
        "drops cleared at tick {cleared} after {congested_ticks} congested ticks (bound {bound}); control aggregate fixed at {initial}"
    ))
}

/// Cheapest simple path from `v` to the root, summed from the root side.
fn brute_force_cost(graph: &UavGraph, v: usize) -> f64 {
    fn extend(graph: &UavGraph, path: &mut Vec<usize>, cost: f64, target: usize, best: &mut f64) {
        let tail = *path.last().unwrap();
        if tail == target {
            *best = best.min(cost);
            return;
        }
        for &next in &graph.nodes {
            if path.contains(&next) {
                continue;
            }
            // `next` sends to `tail`, one hop further from the root.
            if let Some(w) = graph.weight(next, tail) {
                path.push(next);
                extend(graph, path, cost + w, target, best);
                path.pop();
            }
        }
    }
    let mut best = f64::INFINITY;
    extend(graph, &mut vec![graph.root], 0.0, v, &mut best);
    best
}

fn criterion_dijkstra_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1);
    let mut compared = 0;
    for g in 0..100 {
        let n = rng.random_range(1..=6usize);
        let matrix: Vec<Vec<Option<f64>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (i != j).then(|| loop {
                            let w: f64 = rng.random();
                            if w > 0.0 {
                                break w;
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        let root = rng.random_range(0..n);
        let graph = UavGraph::from_matrix((0..n).collect(), matrix, root);
        let tree = dijkstra_tree(&graph).map_err(|e| format!("graph {g}: {e}"))?;
        for v in 0..n {
            let expected = brute_force_cost(&graph, v);
            let got = tree.path_cost[&v];
            check(got.to_bits() == expected.to_bits(), || {
                format!("graph {g} node {v}: dijkstra {got:?} vs enumeration {expected:?}")
            })?;
            compared += 1;
        }
    }
    Ok(format!("100 graphs, {compared} path costs identical"))
}

fn ceil_by_counting(t: i64, b: i64) -> usize {
    let mut filled = 0i64;
    let mut count = 0;
    while filled < t {
        filled += b;
        count += 1;
    }
    count
}

fn criterion_sizing_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE1);
    for i in 0..1000 {
        let b = rng.random_range(1_000_000..=500_000_000i64);
        let t = match i % 4 {
            0 => b * rng.random_range(0..=20i64),
            _ => rng.random_range(0..=10_000_000_000i64),
        };
        let got = required_uavs(Traffic::from_micros(t), Traffic::from_micros(b));
        let expected = ceil_by_counting(t, b);
        check(got == expected, || {
            format!("T={t} B={b} (micro-units): {got} vs {expected}")
        })?;
    }
    for b in [1, 50, 1_000_000] {
        check(
            required_uavs(Traffic::ZERO, Traffic::from_units_int(b)) == 0,
            || format!("required_uavs(0, {b}) != 0"),
        )?;
    }
    Ok("1000 pairs match, zero traffic needs zero UAVs".into())
}

fn criterion_failover() -> Outcome {
    let cfg = SimConfig {
        heartbeat_timeout: 3,
        ticks: 12,
        ..SimConfig::default()
    };
    let mut sim = Simulation::new(cfg.clone()).map_err(describe)?;
    sim.kill_root_at = Some(5);
    let old_root = sim.state.root().ok_or("no initial root")?;
    let mut change = None;
    for _ in 0..cfg.ticks {
        sim.step().map_err(describe)?;
        let ev = sim.events.last().unwrap();
        if let Some(rc) = &ev.root_change {
            check(change.is_none(), || {
                format!("second root change at tick {}", ev.tick)
            })?;
            check(rc.old_root == Some(old_root), || {
                format!("replaced {:?}, expected {old_root}", rc.old_root)
            })?;
            let new_pos = &sim.state.uavs[rc.new_root];
            let d_new = new_pos.distance_to_ground(sim.controller.xb, sim.controller.yb);
            let nearer = sim
                .state
                .uavs
                .iter()
                .filter(|u| u.is_active() && !u.failed && u.id != rc.new_root)
                .find(|u| {
                    let d = u.distance_to_ground(sim.controller.xb, sim.controller.yb);
                    d < d_new || (d == d_new && u.id < rc.new_root)
                });
            check(nearer.is_none(), || {
                format!(
                    "UAV {:?} is nearer the controller than new root {}",
                    nearer.map(|u| u.id),
                    rc.new_root
                )
            })?;
            change = Some((ev.tick, rc.new_root));
        }
    }
    conservation("failover", &sim.metrics, &sim.events)?;
    let (tick, new_root) = change.ok_or("root never replaced")?;
    check(tick <= 8, || format!("new root installed at tick {tick}"))?;
    check(sim.state.uavs[new_root].role == Role::Root, || {
        "new root lost its role".into()
    })?;
    for ((t, tree), ev) in sim.trees.iter().zip(&sim.events) {
        if *t < tick {
            check(tree.root == old_root, || {
                format!("tick {t}: tree rooted at {}", tree.root)
            })?;
            continue;
        }
        check(
            tree.root == new_root && tree.parent[&new_root] == new_root,
            || {
                format!(
                    "tick {t}: tree rooted at {}, expected {new_root}",
                    tree.root
                )
            },
        )?;
        check(!tree.parent.contains_key(&old_root), || {
            format!("tick {t}: failed root still in tree")
        })?;
        check(ev.root_served_users == 0, || {
            format!("tick {t}: root serves {} users", ev.root_served_users)
        })?;
        check(
            sim.users.iter().all(|u| u.serving_uav != Some(new_root)),
            || format!("tick {t}: users still on root"),
        )?;
    }
    Ok(format!(
        "root {old_root} killed at tick 5, UAV {new_root} installed at tick {tick}, serves 0 users"
    ))
}

fn hash_dir(dir: &Path) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(describe)? {
        let entry = entry.map_err(describe)?;
        let bytes = std::fs::read(entry.path()).map_err(describe)?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        out.insert(entry.file_name().to_string_lossy().into_owned(), hex);
    }
    Ok(out)
}

fn criterion_determinism() -> Outcome {
    let cfg = SimConfig {
        grid_step: 10.0,
        ..SimConfig::default()
    };
    let mut hashes = Vec::new();
    let mut reports: Vec<RunReport> = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(describe)?;
        let flags = RunFlags {
            kill_root_at: Some(5),
            out_dir: Some(dir.path().to_path_buf()),
            write_pgm: true,
        };
        reports.push(run(cfg.clone(), &flags).map_err(describe)?);
        hashes.push(hash_dir(dir.path())?);
    }
    for (i, r) in reports.iter().enumerate() {
        conservation(&format!("determinism run {i}"), &r.ticks, &r.events)?;
    }
    check(hashes[0].len() >= 6, || {
        format!("only {} files written", hashes[0].len())
    })?;
    check(hashes[0] == hashes[1], || {
        let differing: Vec<_> = hashes[0]
            .iter()
            .filter(|(k, v)| hashes[1].get(*k) != Some(*v))
            .map(|(k, _)| k.clone())
            .collect();
        format!("files differ: {differing:?}")
    })?;
    Ok(format!(
        "{} files byte-identical across runs",
        hashes[0].len()
    ))
}

fn criterion_conservation(runs: &[(&str, &[TickMetrics], &[TickEvents])]) -> Outcome {
    let mut ticks = 0;
    for &(label, m, e) in runs {
        ticks += conservation(label, m, e)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    for _ in 0..6 {
        let cfg = SimConfig {
            seed: rng.random(),
            num_users: rng.random_range(1..=400),
            max_uavs: if rng.random_bool(0.5) {
                MaxUavs::Limited(rng.random_range(30..=90))
            } else {
                MaxUavs::Unlimited
            },
            ticks: 20,
            grid_step: 40.0,
            ..SimConfig::default()
        };
        let label = format!(
            "seed {} users {} cap {:?}",
            cfg.seed, cfg.num_users, cfg.max_uavs
        );
        match run(
            cfg,
            &RunFlags {
                kill_root_at: Some(7),
                ..RunFlags::default()
            },
        ) {
            Ok(r) => ticks += conservation(&label, &r.ticks, &r.events)?,
            // A cap below the initial requirement is rejected at setup.
            Err(uavnet_core::SimError::Placement(_)) => {}
            Err(e) => return Err(format!("{label}: {}", describe(e))),
        }
    }
    Ok(format!("{ticks} ticks conserved exactly"))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();

    let cfg = SimConfig::default();
    let start = Instant::now();
    let coverage_run = Simulation::new(cfg.clone()).and_then(|mut sim| {
        for _ in 0..sim.cfg.ticks {
            sim.step()?;
        }
        Ok(sim)
    });
    let elapsed = start.elapsed();
    match &coverage_run {
        Ok(sim) => {
            results.push((1, "coverage band", criterion_coverage_band(sim, elapsed)));
            results.push((2, "corner attenuation", criterion_corners(sim)));
        }
        Err(e) => {
            results.push((1, "coverage band", Err(describe(e))));
            results.push((2, "corner attenuation", Err(describe(e))));
        }
    }
    results.push((3, "drop curve shape", criterion_drop_curve()));
    results.push((4, "congestion convergence", criterion_congestion()));
    results.push((5, "dijkstra oracle", criterion_dijkstra_oracle()));
    results.push((6, "sizing oracle", criterion_sizing_oracle()));
    let default_runs: Vec<(&str, &[TickMetrics], &[TickEvents])> = coverage_run
        .as_ref()
        .map(|s| vec![("default run", s.metrics.as_slice(), s.events.as_slice())])
        .unwrap_or_default();
    results.push((
        7,
        "flow conservation",
        criterion_conservation(&default_runs),
    ));
    results.push((8, "root failover", criterion_failover()));
    results.push((9, "determinism", criterion_determinism()));

    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({why})");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
