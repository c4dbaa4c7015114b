//! Acceptance suite. Runs every criterion in sequence, prints one
//! `PASS`/`FAIL` line per criterion and exits non-zero if any failed.
//!
//! Criteria run sequentially rather than as parallel test threads so the
//! wall-clock budgets are measured without interference.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use mwsn_core::clustering::{elect_fusion_head, reelection_check, score_precinct, CandidateScore, Reelection, Thresholds};
use mwsn_core::geom::Vec2;
use mwsn_core::mobility::relative_mobility;
use mwsn_core::phy::energy::tx_energy_per_bit;
use mwsn_core::phy::friis::{friis_max_range, rx_sensitivity_for_range};
use mwsn_core::routing::scripted::ScriptedNetwork;
use mwsn_core::routing::table::Acceptance;
use mwsn_core::trace::TraceEvent;
use mwsn_core::{NodeId, Protocol, RunReport, ScenarioConfig, Simulation};

const SWEEP_SPEEDS: [f64; 4] = [5.0, 10.0, 15.0, 20.0];
const SWEEP_SEEDS: u64 = 10;
const SWEEP_BUDGET_S: f64 = 600.0;
const DEFAULT_RUN_BUDGET_S: f64 = 60.0;
const CONSERVATION_TOL: f64 = 1e-12;
const FRIIS_RANGE_TOL: f64 = 0.01;
const FRIIS_ROUNDTRIP_TOL: f64 = 1e-9;
const TX_ENERGY_TOL: f64 = 1e-15;
const MOBILITY_TOL: f64 = 0.01;
const MOBILITY_DELTA: f64 = 0.01;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

// ---------------------------------------------------------------- sweep

struct Sweep {
    reports: Vec<RunReport>,
    seconds: f64,
}

fn run_sweep() -> Sweep {
    let mut cells = Vec::new();
    for protocol in [Protocol::E2rp, Protocol::Aodv] {
        for speed in SWEEP_SPEEDS {
            for seed in 1..=SWEEP_SEEDS {
                let cfg = ScenarioConfig { protocol, speed_max: speed, rng_seed: seed, ..ScenarioConfig::default() };
                cells.push(cfg);
            }
        }
    }
    let start = Instant::now();
    let reports = cells.into_par_iter().map(|cfg| mwsn_core::run(&cfg).expect("default scenario is valid")).collect();
    Sweep { reports, seconds: start.elapsed().as_secs_f64() }
}

fn cell_means(sweep: &Sweep, metric: impl Fn(&RunReport) -> f64) -> BTreeMap<(Protocol, u64), f64> {
    let mut sums: BTreeMap<(Protocol, u64), (f64, usize)> = BTreeMap::new();
    for r in &sweep.reports {
        let e = sums.entry((r.protocol, r.speed_max.to_bits())).or_default();
        e.0 += metric(r);
        e.1 += 1;
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn directional(sweep: &Sweep, what: &str, metric: impl Fn(&RunReport) -> f64) -> Verdict {
    let means = cell_means(sweep, metric);
    let mut pass = true;
    let mut parts = Vec::new();
    for speed in SWEEP_SPEEDS {
        let e = means[&(Protocol::E2rp, speed.to_bits())];
        let a = means[&(Protocol::Aodv, speed.to_bits())];
        pass &= e >= a;
        parts.push(format!("v={speed}: e2rp {e:.4} aodv {a:.4}"));
    }
    Verdict::new(pass, format!("mean {what} over {SWEEP_SEEDS} seeds; {}", parts.join("; ")))
}

fn criterion_1(sweep: &Sweep) -> Verdict {
    let mut v = directional(sweep, "PDF", |r| r.pdf.unwrap_or(0.0));
    let in_budget = sweep.seconds < SWEEP_BUDGET_S;
    v.pass &= in_budget;
    v.detail.push_str(&format!("; sweep of {} runs took {:.1} s (budget {SWEEP_BUDGET_S} s)", sweep.reports.len(), sweep.seconds));
    v
}

fn criterion_2(sweep: &Sweep) -> Verdict {
    directional(sweep, "network lifetime (s)", |r| r.network_lifetime)
}

fn criterion_3(sweep: &Sweep) -> Verdict {
    let mut worst = 0.0f64;
    let mut nodes = 0usize;
    for r in &sweep.reports {
        for n in &r.per_node {
            let consumed = n.consumed_tx + n.consumed_rx + n.consumed_sense + n.consumed_idle;
            worst = worst.max((n.initial - n.surplus_final - consumed).abs() / n.initial);
            nodes += 1;
        }
    }
    Verdict::new(
        worst <= CONSERVATION_TOL,
        format!("worst relative imbalance {worst:.3e} over {nodes} node ledgers (tolerance {CONSERVATION_TOL:e})"),
    )
}

// ---------------------------------------------------------- determinism

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD37E);
    let mut pass = true;
    let mut checked = 0;
    for _ in 0..5 {
        let cfg = ScenarioConfig {
            protocol: if rng.gen_bool(0.5) { Protocol::E2rp } else { Protocol::Aodv },
            rng_seed: rng.gen(),
            node_count: rng.gen_range(10..=100),
            speed_max: rng.gen_range(5.0..=20.0),
            sim_duration: rng.gen_range(50.0..=300.0),
            ..ScenarioConfig::default()
        };
        let digest = |cfg: &ScenarioConfig| Sha256::digest(mwsn_core::run(cfg).expect("valid").to_json().as_bytes());
        pass &= digest(&cfg) == digest(&cfg);
        checked += 1;
    }
    Verdict::new(pass, format!("{checked} random configs, each run twice, SHA-256 of the JSON reports compared"))
}

// ---------------------------------------------------------------- Friis

/// Received power at `d` from the free-space link budget.
fn received_power(pt: f64, gt_dbi: f64, gr_dbi: f64, gamma_sq: f64, freq: f64, d: f64) -> f64 {
    let lambda = 299_792_458.0 / freq;
    let gain = 10f64.powf((gt_dbi + gr_dbi) / 10.0);
    pt * gain * (1.0 - gamma_sq) * (lambda / (4.0 * std::f64::consts::PI * d)).powi(2)
}

fn criterion_5() -> Verdict {
    let range = friis_max_range(0.66, 9.0e-9, 1.2, 1.2, 0.3, 900e6).expect("valid parameters");
    let range_err = relative(range, 250.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0xF815);
    let mut worst_roundtrip = 0.0f64;
    let mut worst_power = 0.0f64;
    for _ in 0..100 {
        let pt = rng.gen_range(0.01..=2.0);
        let gt = rng.gen_range(-3.0..=6.0);
        let gr = rng.gen_range(-3.0..=6.0);
        let gamma_sq = rng.gen_range(0.0..0.9);
        let freq = rng.gen_range(100e6..=5e9);
        let sens = 10f64.powf(rng.gen_range(-12.0..=-6.0));
        let d = friis_max_range(pt, sens, gt, gr, gamma_sq, freq).expect("valid parameters");
        worst_roundtrip = worst_roundtrip.max(relative(rx_sensitivity_for_range(d, pt, gt, gr, gamma_sq, freq), sens));
        worst_power = worst_power.max(relative(received_power(pt, gt, gr, gamma_sq, freq, d), sens));
    }
    Verdict::new(
        range_err <= FRIIS_RANGE_TOL && worst_roundtrip <= FRIIS_ROUNDTRIP_TOL && worst_power <= FRIIS_ROUNDTRIP_TOL,
        format!(
            "range {range:.3} m (rel err {range_err:.2e}, tol {FRIIS_RANGE_TOL}); 100 draws: round trip {worst_roundtrip:.2e}, \
             link budget at range {worst_power:.2e} (tol {FRIIS_ROUNDTRIP_TOL:e})"
        ),
    )
}

// ------------------------------------------------------- transmit energy

fn criterion_6() -> Verdict {
    let (e_elec, e_amp) = (50e-9, 100e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(0xE2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let d = rng.gen_range(0.0..=250.0);
        let alpha = rng.gen_range(2.0..=4.0);
        let ours = tx_energy_per_bit(d, e_elec, e_amp, alpha).expect("non-negative distance");
        let oracle = e_elec + e_amp * libm::pow(d, alpha);
        worst = worst.max(relative(ours, oracle));
    }
    let anchor = tx_energy_per_bit(10.0, e_elec, e_amp, 2.0).expect("valid");
    let anchor_err = relative(anchor, 60e-9);
    Verdict::new(
        worst <= TX_ENERGY_TOL && anchor_err <= TX_ENERGY_TOL,
        format!("1000 draws worst rel err {worst:.2e}; d=10 alpha=2 gives {anchor:e} J/bit (rel err {anchor_err:.1e}, tol {TX_ENERGY_TOL:e})"),
    )
}

// ------------------------------------------------------------- mobility

/// Exact range rate of two constant-velocity nodes at time `t`.
fn range_rate(a: Vec2, u: Vec2, b: Vec2, w: Vec2, t: f64) -> f64 {
    let r = Vec2::new(a.x - b.x + (u.x - w.x) * t, a.y - b.y + (u.y - w.y) * t);
    let v = Vec2::new(u.x - w.x, u.y - w.y);
    (r.x * v.x + r.y * v.y) / r.length()
}

fn backward_difference(a: Vec2, u: Vec2, b: Vec2, w: Vec2, t: f64, delta: f64) -> f64 {
    let at = |p: Vec2, v: Vec2, s: f64| Vec2::new(p.x + v.x * s, p.y + v.y * s);
    let now = [at(a, u, t), at(b, w, t)];
    let prev = [at(a, u, t - delta), at(b, w, t - delta)];
    relative_mobility(0, &[0, 1], &now, &prev, delta).value
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x307);
    let mut worst = 0.0f64;
    let mut converging = true;
    for _ in 0..1000 {
        // Separation within radio range, speeds within the waypoint bounds.
        let sep = rng.gen_range(25.0..=250.0);
        let bearing = rng.gen_range(0.0..std::f64::consts::TAU);
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(sep * bearing.cos(), sep * bearing.sin());
        let velocity = |rng: &mut ChaCha8Rng| {
            let s = rng.gen_range(5.0..=20.0);
            let h = rng.gen_range(0.0..std::f64::consts::TAU);
            Vec2::new(s * h.cos(), s * h.sin())
        };
        let u = velocity(&mut rng);
        let w = velocity(&mut rng);
        let v_rel = Vec2::new(u.x - w.x, u.y - w.y).length();
        let exact = range_rate(a, u, b, w, 0.0).abs();
        let err = |delta: f64| (backward_difference(a, u, b, w, 0.0, delta) - exact).abs();
        let e = err(MOBILITY_DELTA);
        worst = worst.max(e / v_rel);
        converging &= err(MOBILITY_DELTA / 10.0) <= e + 1e-12;
    }
    let radial = backward_difference(Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), Vec2::new(5.0, 0.0), 1.0, MOBILITY_DELTA);
    let radial_err = relative(radial, 5.0);
    let mut static_zero = true;
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let pos: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.gen_range(0.0..25.0), rng.gen_range(0.0..25.0))).collect();
        let scope: Vec<usize> = (0..n).collect();
        static_zero &= (0..n).all(|i| relative_mobility(i, &scope, &pos, &pos, MOBILITY_DELTA).value == 0.0);
    }
    Verdict::new(
        worst < MOBILITY_TOL && radial_err < MOBILITY_TOL && converging && static_zero,
        format!(
            "1000 two-node scenes at delta {MOBILITY_DELTA} s: worst error {:.3}% of relative speed; radial 5 m/s scene rel err {radial_err:.1e}; \
             error shrinks with delta: {converging}; static scenes exactly 0: {static_zero}",
            worst * 100.0
        ),
    )
}

// ------------------------------------------------------------- election

/// Independent evaluation of the fusion probability of member `i`.
fn oracle_probability(i: usize, s: &[CandidateScore], th: &Thresholds) -> f64 {
    let eps = 1e-6;
    let e_pass: Vec<bool> = s.iter().map(|c| c.surplus > th.energy).collect();
    let r_pass: Vec<bool> = s.iter().map(|c| c.tx_range > th.range).collect();
    let m_pass: Vec<bool> = s.iter().map(|c| c.mobility < th.mobility).collect();
    let part = |pass: &[bool], w: &dyn Fn(&CandidateScore) -> f64| -> f64 {
        if !pass[i] {
            return 0.0;
        }
        let total: f64 = s.iter().zip(pass).filter(|(_, &p)| p).map(|(c, _)| w(c)).sum();
        w(&s[i]) / total
    };
    (part(&e_pass, &|c| c.surplus) + part(&r_pass, &|c| c.tx_range) + part(&m_pass, &|c| 1.0 / (c.mobility + eps))) / 3.0
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE1EC);
    let th = Thresholds { energy: 1.0, range: 5.0, mobility: 10.0 };
    let mut failures = Vec::new();
    let mut handovers = 0;
    for instance in 0..1000 {
        let n = rng.gen_range(2..=20);
        let mut scores: Vec<CandidateScore> = (0..n)
            .map(|k| {
                let surplus = rng.gen_range(0.0..=5.0);
                CandidateScore::new(
                    NodeId(k as u32 * 3 + 1),
                    surplus,
                    rng.gen_range(0.0..=30.0),
                    if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..=20.0) },
                    surplus / n as f64,
                )
            })
            .collect();
        score_precinct(&mut scores, &th);

        if let Some(bad) = scores.iter().find(|c| !(0.0..=1.0).contains(&c.p_fusion)) {
            failures.push(format!("instance {instance}: p_fusion {} out of range", bad.p_fusion));
        }
        for (i, c) in scores.iter().enumerate() {
            if (c.p_fusion - oracle_probability(i, &scores, &th)).abs() > 1e-12 {
                failures.push(format!("instance {instance}: node {} probability differs from oracle", c.node));
            }
        }

        // Brute force: a member wins iff no other member beats it on
        // (probability, VID, lower id).
        let beats = |a: &CandidateScore, b: &CandidateScore| {
            a.p_fusion > b.p_fusion
                || (a.p_fusion == b.p_fusion && (a.vid > b.vid || (a.vid == b.vid && a.node < b.node)))
        };
        let winners: Vec<NodeId> =
            scores.iter().filter(|c| scores.iter().all(|o| o.node == c.node || beats(c, o))).map(|c| c.node).collect();
        let elected = elect_fusion_head(&scores);
        if winners.len() != 1 || elected != Some(winners[0]) {
            failures.push(format!("instance {instance}: elected {elected:?}, brute force {winners:?}"));
        }

        let head = scores[rng.gen_range(0..n)];
        let fired = matches!(reelection_check(Some(head.node), &scores, 0.5), Reelection::Handover { .. });
        handovers += usize::from(fired);
        if fired != (head.p_fusion < 0.5) {
            failures.push(format!("instance {instance}: head p={} re-election fired={fired}", head.p_fusion));
        }
    }
    let detail = if failures.is_empty() {
        format!("1000 populations of 2-20 members; {handovers} handovers, each exactly when the head fell below 0.5")
    } else {
        format!("{} violations, first: {}", failures.len(), failures[0])
    };
    Verdict::new(failures.is_empty(), detail)
}

// -------------------------------------------------------- loop freedom

fn loop_scenario(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        node_count: 30,
        field_side: 100.0,
        radio_range: 30.0,
        precinct_grid_dim: 4,
        sim_duration: 200.0,
        protocol: if seed.is_multiple_of(2) { Protocol::E2rp } else { Protocol::Aodv },
        rng_seed: seed,
        ..ScenarioConfig::default()
    }
}

#[derive(Default)]
struct LoopAudit {
    hop_revisits: usize,
    rule_violations: usize,
    advertised_drift: usize,
    multi_hop_packets: usize,
    longest_walk: usize,
    equal_seq_additions: usize,
    guard_drops: usize,
}

fn audit_run(seed: u64) -> LoopAudit {
    let cfg = loop_scenario(seed);
    let multipath = cfg.protocol == Protocol::E2rp;
    let out = Simulation::new(cfg).expect("valid").with_trace(true).run();
    let mut audit = LoopAudit::default();
    let mut walks: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
    let mut advertised: BTreeMap<(NodeId, NodeId, u32), u32> = BTreeMap::new();
    for record in out.trace.expect("tracing on") {
        match record.event {
            TraceEvent::Hop { node, packet_id } => walks.entry(packet_id).or_default().push(node),
            TraceEvent::Drop { reason, .. } if reason == "loop" => audit.guard_drops += 1,
            TraceEvent::Route { node, destination, sequence, advertised_before, hop_count, outcome } => {
                if !outcome.accepted() {
                    continue;
                }
                if let Some(adv) = advertised_before.0 {
                    audit.equal_seq_additions += 1;
                    if hop_count >= adv {
                        audit.rule_violations += 1;
                    }
                    if multipath && advertised.get(&(node, destination, sequence)).is_some_and(|&a| a != adv) {
                        audit.advertised_drift += 1;
                    }
                }
                if matches!(outcome, Acceptance::Created | Acceptance::Renewed) || !multipath {
                    advertised.insert((node, destination, sequence), hop_count);
                }
            }
            _ => {}
        }
    }
    for walk in walks.values() {
        let distinct: BTreeSet<NodeId> = walk.iter().copied().collect();
        if distinct.len() != walk.len() {
            audit.hop_revisits += 1;
        }
        audit.multi_hop_packets += usize::from(walk.len() > 2);
        audit.longest_walk = audit.longest_walk.max(walk.len());
    }
    audit
}

fn criterion_9() -> Verdict {
    let audits: Vec<LoopAudit> = (1..=100u64).into_par_iter().map(audit_run).collect();
    let sum = |f: fn(&LoopAudit) -> usize| audits.iter().map(f).sum::<usize>();
    let revisits = sum(|a| a.hop_revisits);
    let violations = sum(|a| a.rule_violations);
    let drift = sum(|a| a.advertised_drift);
    let multi = sum(|a| a.multi_hop_packets);
    let additions = sum(|a| a.equal_seq_additions);
    let guarded = sum(|a| a.guard_drops);
    let longest = audits.iter().map(|a| a.longest_walk).max().unwrap_or(0);
    Verdict::new(
        revisits == 0 && violations == 0 && drift == 0 && multi > 0,
        format!(
            "100 traced multi-hop runs: {multi} packets crossed >1 relay (longest walk {longest} nodes); revisits {revisits}; \
             {additions} equal-sequence insertions, {violations} without strictly lower hop count; advertised-count drift {drift}; \
             {guarded} packets discarded for re-entering their own trail"
        ),
    )
}

// ---------------------------------------------------------- max surplus

/// Every simple path from `from` to `to`.
fn simple_paths(adj: &[Vec<usize>], from: usize, to: usize) -> Vec<Vec<usize>> {
    fn walk(adj: &[Vec<usize>], at: usize, to: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if at == to {
            out.push(path.clone());
            return;
        }
        for &n in &adj[at] {
            if !path.contains(&n) {
                path.push(n);
                walk(adj, n, to, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(adj, from, to, &mut vec![from], &mut out);
    out
}

fn connected(n: usize, adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn criterion_10() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5A5);
    let mut topologies = 0usize;
    let mut copies = 0usize;
    let mut routes = 0usize;
    let mut failures = Vec::new();
    for n in 2..=6usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let mut adj = vec![Vec::new(); n];
            for (k, &(a, b)) in pairs.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
            if !connected(n, &adj) {
                continue;
            }
            topologies += 1;
            let surplus: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
            let mut net = ScriptedNetwork::new(Protocol::E2rp, &surplus);
            for (k, &(a, b)) in pairs.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    net.connect(NodeId(a as u32), NodeId(b as u32), rng.gen_range(0.01..0.1));
                }
            }
            let dest = n - 1;
            if !net.discover(NodeId(0), NodeId(dest as u32)) {
                failures.push(format!("n={n} mask={mask:#x}: connected but no route"));
                continue;
            }
            let truth: Vec<f64> = simple_paths(&adj, 0, dest)
                .iter()
                .map(|p| p.iter().map(|&v| surplus[v]).fold(f64::NEG_INFINITY, f64::max))
                .collect();
            for copy in &net.log().copies {
                copies += 1;
                let path: Vec<usize> = copy.path.iter().map(|v| v.index()).collect();
                let simple = path.iter().collect::<BTreeSet<_>>().len() == path.len();
                let linked = path.windows(2).all(|w| adj[w[0]].contains(&w[1]));
                let max = path.iter().map(|&v| surplus[v]).fold(f64::NEG_INFINITY, f64::max);
                if path[0] != 0 || !simple || !linked || copy.max_surplus != max {
                    failures.push(format!("n={n} mask={mask:#x}: copy at {} over {path:?} carried {} (path max {max})", copy.node, copy.max_surplus));
                }
            }
            let entry = net.router(NodeId(0)).table().entry(NodeId(dest as u32)).expect("route installed");
            for route in &entry.route_list {
                routes += 1;
                if !truth.contains(&route.max_surplus_energy) {
                    failures.push(format!("n={n} mask={mask:#x}: route surplus {} matches no simple path", route.max_surplus_energy));
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{topologies} connected labelled topologies of 2-6 nodes; {copies} request copies and {routes} installed routes match brute-force path maxima")
    } else {
        format!("{} mismatches, first: {}", failures.len(), failures[0])
    };
    Verdict::new(failures.is_empty(), detail)
}

// ------------------------------------------------------------- failover

fn n(i: u32) -> NodeId {
    NodeId(i)
}

/// Three disjoint paths from 0 to 9. Longer paths are faster, so each
/// later, shorter copy carries more surplus and is kept alongside.
fn three_paths(protocol: Protocol) -> ScriptedNetwork {
    let surplus = [0.5, 1.0, 1.0, 1.0, 2.0, 2.0, 3.0, 0.0, 0.0, 0.5];
    let mut net = ScriptedNetwork::new(protocol, &surplus);
    for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 9)] {
        net.connect(n(a), n(b), 0.01);
    }
    for (a, b) in [(0, 4), (4, 5), (5, 9)] {
        net.connect(n(a), n(b), 0.03);
    }
    for (a, b) in [(0, 6), (6, 9)] {
        net.connect(n(a), n(b), 0.07);
    }
    net
}

fn criterion_11() -> Verdict {
    let mut e2rp = three_paths(Protocol::E2rp);
    e2rp.discover(n(0), n(9));
    let initial_routes = e2rp.router(n(0)).table().route_count(n(9));
    let mut pass = initial_routes >= 2;
    let mut notes = vec![format!("e2rp discovered {initial_routes} routes")];
    let mut breaks = 0;
    while e2rp.router(n(0)).table().route_count(n(9)) > 1 {
        let used = e2rp.router(n(0)).table().select(n(9), e2rp.now()).expect("route").next_hop;
        let before = e2rp.floods();
        e2rp.disconnect(n(0), used);
        let walk = e2rp.send(n(0), n(9));
        breaks += 1;
        let new_floods = e2rp.floods() - before;
        pass &= walk.delivered && new_floods == 0;
        notes.push(format!("break via {used}: delivered {} with {new_floods} new floods", walk.delivered));
    }

    let mut aodv = three_paths(Protocol::Aodv);
    aodv.discover(n(0), n(9));
    let used = aodv.router(n(0)).table().select(n(9), aodv.now()).expect("route").next_hop;
    let before = aodv.floods();
    aodv.disconnect(n(0), used);
    let walk = aodv.send(n(0), n(9));
    let aodv_floods = aodv.floods() - before;
    pass &= breaks >= 1 && aodv_floods >= 1 && walk.delivered;
    notes.push(format!("aodv break via {used}: {aodv_floods} new floods, delivered {}", walk.delivered));
    Verdict::new(pass, notes.join("; "))
}

// -------------------------------------------------------------- runtime

fn criterion_12() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for protocol in [Protocol::E2rp, Protocol::Aodv] {
        let cfg = ScenarioConfig { protocol, ..ScenarioConfig::default() };
        let start = Instant::now();
        let report = mwsn_core::run(&cfg).expect("default scenario is valid");
        let secs = start.elapsed().as_secs_f64();
        pass &= secs < DEFAULT_RUN_BUDGET_S && report.config_echo.node_count == 100 && report.config_echo.sim_duration == 500.0;
        parts.push(format!("{protocol} {secs:.2} s"));
    }
    Verdict::new(pass, format!("default 100-node 500 s run: {} (budget {DEFAULT_RUN_BUDGET_S} s)", parts.join(", ")))
}

fn main() -> ExitCode {
    let mut verdicts: Vec<(u8, &str, Verdict)> = Vec::new();
    let sweep = run_sweep();
    verdicts.push((1, "packet delivery: e2rp >= aodv at every speed", criterion_1(&sweep)));
    verdicts.push((2, "network lifetime: e2rp >= aodv at every speed", criterion_2(&sweep)));
    verdicts.push((3, "energy conservation per node", criterion_3(&sweep)));
    drop(sweep);
    verdicts.push((4, "determinism of JSON reports", criterion_4()));
    verdicts.push((5, "free-space range oracle", criterion_5()));
    verdicts.push((6, "transmit energy per bit oracle", criterion_6()));
    verdicts.push((7, "relative mobility oracle", criterion_7()));
    verdicts.push((8, "fusion head election properties", criterion_8()));
    verdicts.push((9, "loop freedom", criterion_9()));
    verdicts.push((10, "max surplus along discovered paths", criterion_10()));
    verdicts.push((11, "failover without rediscovery", criterion_11()));
    verdicts.push((12, "default run wall-clock budget", criterion_12()));

    let mut failed = 0;
    for (id, name, v) in &verdicts {
        println!("{} criterion {id:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
