//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any failure.
//!
//! The curve-ordering criteria run the full desk-scale experiment
//! (12 nodes, 8 sectors, 3 users, 5000 intervals, 10 seeds), which takes a
//! while on a single core.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::{PI, TAU};
use std::process::{Command, ExitCode, Stdio};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use swarm_nd::geometry::{gain_db, received_power, RadioParams, Sector, SectorLayout, Vec2};
use swarm_nd::harness::{SimConfig, Simulation};
use swarm_nd::neural::Mlp;
use swarm_nd::objective::{cv_norm, ewma_reward, weighted_objective};
use swarm_nd::policy::Algorithm;
use swarm_nd::protocol::{overhearing, resolve_probes, LinkTable, Outcome};

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(name: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { name, pass, detail }
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(got.abs())
    }
}

// ---- formula oracles ----------------------------------------------------

fn oracle_gain_db(dev: f64, fov: f64) -> Option<f64> {
    let dev_deg = dev.to_degrees();
    let fov_deg = fov.to_degrees();
    if dev_deg > fov_deg / 2.0 {
        return None;
    }
    let hpbw_deg = fov_deg / 2.6;
    let g0 = 20.0 * (1.6162 / (hpbw_deg / 2.0).to_radians().sin()).log10();
    Some(g0 - 3.01 * 4.0 * dev_deg * dev_deg / (hpbw_deg * hpbw_deg))
}

fn oracle_power(
    tx: (f64, f64),
    s_t: usize,
    rx: (f64, f64),
    s_r: usize,
    k: usize,
    p: &RadioParams<f64>,
) -> Option<f64> {
    let fov = TAU / k as f64;
    let dev = |from: (f64, f64), to: (f64, f64), sector: usize| {
        let b = (to.1 - from.1).atan2(to.0 - from.0);
        let boresight = (sector as f64 - 0.5) * fov;
        // smallest angle between two directions via unit vectors
        let c = b.cos() * boresight.cos() + b.sin() * boresight.sin();
        c.clamp(-1.0, 1.0).acos()
    };
    let g_t = oracle_gain_db(dev(tx, rx, s_t), fov)?;
    let g_r = oracle_gain_db(dev(rx, tx, s_r), fov)?;
    let d = ((tx.0 - rx.0).powi(2) + (tx.1 - rx.1).powi(2)).sqrt();
    let k0 = (p.lambda_m / (4.0 * PI)).powi(2);
    let db = 10.0 * p.p_t.log10() + 10.0 * k0.log10() + g_t + g_r - 10.0 * p.eta * d.log10();
    Some(10f64.powf(db / 10.0))
}

fn oracle_cv(counts: &[usize]) -> f64 {
    let k = counts.len() as f64;
    let w: usize = counts.iter().sum();
    if w == 0 {
        return 0.0;
    }
    let mean = w as f64 / k;
    let sd = |xs: &[f64]| (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / k).sqrt();
    let actual: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let mut worst = vec![0.0; counts.len()];
    worst[0] = w as f64;
    (sd(&actual) / sd(&worst)).min(1.0)
}

fn formula_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let trials = 2000;
    let mut worst = BTreeMap::<&str, f64>::new();
    let mut mismatched = 0usize;
    let mut bump = |name: &'static str, e: f64| {
        let slot = worst.entry(name).or_insert(0.0);
        *slot = slot.max(e);
    };
    let mut checked = BTreeMap::<&str, usize>::new();
    for _ in 0..trials {
        let k = rng.random_range(2..=16usize);
        let fov = TAU / k as f64;
        let dev = rng.random_range(0.0..fov * 0.75);
        match (gain_db(dev, fov), oracle_gain_db(dev, fov)) {
            (Some(a), Some(b)) => {
                bump("gain_db", rel_err(a, b));
                *checked.entry("gain_db").or_default() += 1;
            }
            (None, None) => *checked.entry("gain_db").or_default() += 1,
            _ => mismatched += 1,
        }

        let layout = SectorLayout::<f64>::new(k).unwrap();
        let params = RadioParams {
            eta: rng.random_range(1.5..4.0),
            p_t: rng.random_range(1e-3..1.0),
            ..RadioParams::defaults(&layout)
        };
        let tx = (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
        let rx = (rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
        // aim both ends at each other most of the time so the gain path is exercised
        let aim = |from: (f64, f64), to: (f64, f64)| {
            layout.sector_of(swarm_nd::geometry::wrap_angle(
                (to.1 - from.1).atan2(to.0 - from.0),
            ))
        };
        let (s_t, s_r) = if rng.random_bool(0.8) {
            (aim(tx, rx), aim(rx, tx))
        } else {
            (
                Sector::new(rng.random_range(1..=k)),
                Sector::new(rng.random_range(1..=k)),
            )
        };
        let got = received_power(
            Vec2::new(tx.0, tx.1),
            s_t,
            Vec2::new(rx.0, rx.1),
            s_r,
            &params,
            &layout,
        )
        .unwrap();
        match (
            got,
            oracle_power(tx, s_t.number(), rx, s_r.number(), k, &params),
        ) {
            (Some(a), Some(b)) => {
                bump("received_power", rel_err(a, b));
                *checked.entry("received_power").or_default() += 1;
            }
            (None, None) => *checked.entry("received_power").or_default() += 1,
            _ => mismatched += 1,
        }

        let window = rng.random_range(1..=30usize);
        let mut counts = vec![0usize; k];
        for _ in 0..window {
            counts[rng.random_range(0..k)] += 1;
        }
        bump(
            "cv_norm",
            rel_err(cv_norm::<f64>(&counts, k).unwrap(), oracle_cv(&counts)),
        );
        *checked.entry("cv_norm").or_default() += 1;

        let (pe, cv, w) = (
            rng.random::<f64>(),
            rng.random::<f64>(),
            rng.random::<f64>(),
        );
        bump(
            "weighted_objective",
            rel_err(weighted_objective(pe, cv, w), cv + w * (pe - cv)),
        );
        *checked.entry("weighted_objective").or_default() += 1;

        let (prev, o, alpha) = (
            rng.random::<f64>(),
            rng.random::<f64>(),
            rng.random_range(0.01..1.0),
        );
        let (next, reward) = ewma_reward(Some(prev), o, alpha);
        let want = prev + alpha * (o - prev);
        bump("ewma", rel_err(next, want));
        let want_reward = if (want - prev).abs() < 1e-12 {
            0
        } else {
            (want - prev).signum() as i8
        };
        if reward != want_reward {
            mismatched += 1;
        }
        *checked.entry("ewma").or_default() += 1;
    }
    let max = worst.values().cloned().fold(0.0, f64::max);
    let few = checked.values().any(|&c| c < 1000);
    verdict(
        "formula oracles",
        max < 1e-9 && mismatched == 0 && !few,
        format!("max rel err {max:.2e} over {checked:?}, {mismatched} domain/sign mismatches; per formula {worst:?}"),
    )
}

// ---- gradient gate ------------------------------------------------------

fn gradient_gate() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let nets = 25;
    let h = 1e-4;
    let mut max_err: f64 = 0.0;
    let mut params_checked = 0usize;
    for _ in 0..nets {
        let depth = rng.random_range(1..=4usize);
        let mut sizes = vec![rng.random_range(1..=10usize)];
        for _ in 0..depth {
            sizes.push(rng.random_range(1..=10usize));
        }
        let mut net = Mlp::<f64>::new(&sizes, &mut rng).unwrap();
        for p in net.parameters_mut() {
            *p += rng.random_range(-0.1..0.1);
        }
        let batch = rng.random_range(1..=6usize);
        let x: Vec<f64> = (0..batch * sizes[0])
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let target: Vec<f64> = (0..batch * net.output_size())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let loss = |net: &Mlp<f64>| {
            let tape = net.forward_batch(&x, batch);
            tape.output()
                .iter()
                .zip(&target)
                .map(|(y, t)| 0.5 * (y - t) * (y - t))
                .sum::<f64>()
        };
        let tape = net.forward_batch(&x, batch);
        let grad_out: Vec<f64> = tape
            .output()
            .iter()
            .zip(&target)
            .map(|(y, t)| y - t)
            .collect();
        let analytic: Vec<f64> = net.backward(&tape, &grad_out).iter().copied().collect();
        for (idx, &a) in analytic.iter().enumerate() {
            let orig = *net.parameters().nth(idx).unwrap();
            *net.parameters_mut().nth(idx).unwrap() = orig + h;
            let up = loss(&net);
            *net.parameters_mut().nth(idx).unwrap() = orig - h;
            let down = loss(&net);
            *net.parameters_mut().nth(idx).unwrap() = orig;
            let numeric = (up - down) / (2.0 * h);
            max_err = max_err.max(rel_err(a, numeric));
            params_checked += 1;
        }
    }
    verdict(
        "gradient gate",
        max_err < 1e-5,
        format!("{nets} nets, {params_checked} parameters, max rel err {max_err:.2e}"),
    )
}

// ---- reachability oracle ------------------------------------------------

fn reachability_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut wrong = 0;
    for _ in 0..500 {
        let n = rng.random_range(2..=12usize);
        let p = rng.random::<f64>() * 0.5;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        let mut table = LinkTable::new();
        table.update(&edges, 5);
        let got = table.reachability(n).unwrap();
        for (s, &r) in got.iter().enumerate() {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([s]);
            seen[s] = true;
            while let Some(u) = queue.pop_front() {
                for &(a, b) in &edges {
                    let v = if a == u {
                        b
                    } else if b == u {
                        a
                    } else {
                        continue;
                    };
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            let want = (seen.iter().filter(|&&x| x).count() - 1) as f64 / (n - 1) as f64;
            if r != want {
                wrong += 1;
            }
        }
    }
    verdict(
        "reachability oracle",
        wrong == 0,
        format!("500 graphs, {wrong} mismatched nodes"),
    )
}

// ---- protocol invariants ------------------------------------------------

fn protocol_invariants() -> Verdict {
    let cfg = SimConfig {
        algorithm: Algorithm::Random,
        intervals: 10_000,
        ..SimConfig::default()
    };
    let mut sim = Simulation::<f64>::new(&cfg, 2024).unwrap();
    let layout = cfg.layout::<f64>().unwrap();
    let radio = cfg.radio(&layout);
    let mut violations = BTreeMap::<&str, usize>::new();
    let mut discoveries = 0usize;
    let mut collisions = 0usize;
    let mut flag = |name: &'static str, bad: bool| {
        *violations.entry(name).or_default() += usize::from(bad);
    };
    for _ in 0..cfg.intervals {
        let (_, d) = sim.step_detailed();
        let swarm = sim.swarm();
        let resolved = resolve_probes(&d.actions, &swarm.positions, &layout, &radio);
        flag("outcomes reproducible", resolved.outcomes != d.outcomes);

        for (i, o) in d.outcomes.iter().enumerate() {
            match *o {
                Outcome::Discovery(j) => {
                    discoveries += 1;
                    flag(
                        "handshake mutuality",
                        d.outcomes[j] != Outcome::Discovery(i) || i == j,
                    );
                    flag("collision exclusivity", resolved.arrivals[i].len() >= 2);
                }
                Outcome::Collision => {
                    collisions += 1;
                    flag("collision exclusivity", resolved.arrivals[i].len() < 2);
                }
                Outcome::None => flag("collision exclusivity", resolved.arrivals[i].len() >= 2),
            }
        }

        flag("detection cap", d.overheard.len() > cfg.m);
        let heard = overhearing(
            &d.actions,
            &swarm.positions,
            &swarm.user_positions,
            &layout,
            cfg.r_d,
        );
        flag(
            "detection cap",
            heard.iter().copied().collect::<Vec<_>>() != d.overheard,
        );

        let before: BTreeMap<_, _> = d.links_before.iter().copied().collect();
        let after: BTreeMap<_, _> = d.links_after.iter().copied().collect();
        let fresh: Vec<(usize, usize)> = d
            .outcomes
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.peer().filter(|&j| i < j).map(|j| (i, j)))
            .collect();
        for (key, &c) in &after {
            let ok = if fresh.contains(key) {
                c == 0
            } else {
                before
                    .get(key)
                    .is_some_and(|&b| c == b + 1 && c <= cfg.link_timeout)
            };
            flag("monotone expiry", !ok);
        }
        for (key, &b) in &before {
            let kept = after.contains_key(key);
            flag(
                "monotone expiry",
                !fresh.contains(key) && kept != (b < cfg.link_timeout),
            );
        }
        flag(
            "monotone expiry",
            fresh.iter().any(|k| !after.contains_key(k)),
        );

        let slack = 1e-9;
        for (p, c) in swarm.positions.iter().zip(&swarm.roam_centers) {
            let inside_area = (-slack..=cfg.area + slack).contains(&p.x)
                && (-slack..=cfg.area + slack).contains(&p.y);
            flag(
                "containment",
                !inside_area || p.dist(*c) > cfg.r_roam + slack,
            );
        }
        for u in &swarm.user_positions {
            flag(
                "containment",
                !((-slack..=cfg.area + slack).contains(&u.x)
                    && (-slack..=cfg.area + slack).contains(&u.y)),
            );
        }
    }
    let total: usize = violations.values().sum();
    verdict(
        "protocol invariants",
        total == 0 && discoveries > 0 && collisions > 0,
        format!("10000 intervals, {discoveries} discoveries, {collisions} collisions, violations {violations:?}"),
    )
}

// ---- curve orderings ----------------------------------------------------

const SEEDS: u64 = 10;
const INTERVALS: usize = 5000;
const TAIL: usize = 1000;

#[derive(Debug, Clone, Copy, Default)]
struct Tail {
    reach: f64,
    overheard: f64,
    cv: f64,
    objective: f64,
}

fn tail_means(algorithm: Algorithm, w: f64, seed: u64) -> Tail {
    let cfg = SimConfig {
        algorithm,
        w,
        intervals: INTERVALS,
        ..SimConfig::default()
    };
    let mut acc = Tail::default();
    for row in Simulation::<f64>::new(&cfg, seed)
        .unwrap()
        .skip(INTERVALS - TAIL)
    {
        acc.reach += row.reachability_mean;
        acc.overheard += row.overheard_frac;
        acc.cv += row.cv_mean;
        acc.objective += row.objective_mean;
    }
    let n = TAIL as f64;
    Tail {
        reach: acc.reach / n,
        overheard: acc.overheard / n,
        cv: acc.cv / n,
        objective: acc.objective / n,
    }
}

type Experiment = BTreeMap<(Algorithm, &'static str), Tail>;

fn experiment() -> Experiment {
    let groups = [
        (Algorithm::Random, 0.5, "0.5"),
        (Algorithm::QLearning, 0.5, "0.5"),
        (Algorithm::Dqn, 0.1, "0.1"),
        (Algorithm::Dqn, 0.5, "0.5"),
        (Algorithm::Dqn, 0.9, "0.9"),
    ];
    let jobs: Vec<_> = groups
        .iter()
        .flat_map(|&g| (1..=SEEDS).map(move |s| (g, s)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&((alg, w, label), seed)| ((alg, label), tail_means(alg, w, seed)))
        .collect();
    let mut out = Experiment::new();
    for (key, t) in results {
        let e = out.entry(key).or_default();
        e.reach += t.reach / SEEDS as f64;
        e.overheard += t.overheard / SEEDS as f64;
        e.cv += t.cv / SEEDS as f64;
        e.objective += t.objective / SEEDS as f64;
    }
    out
}

fn algorithm_ordering(x: &Experiment) -> Verdict {
    let dqn = x[&(Algorithm::Dqn, "0.5")];
    let ql = x[&(Algorithm::QLearning, "0.5")];
    let rnd = x[&(Algorithm::Random, "0.5")];
    let pass = dqn.reach >= ql.reach + 0.03
        && dqn.reach >= rnd.reach + 0.03
        && dqn.overheard <= rnd.overheard;
    verdict(
        "algorithm ordering at w=0.5",
        pass,
        format!(
            "reachability dqn {:.4} qlearning {:.4} random {:.4}; overheard dqn {:.4} random {:.4}",
            dqn.reach, ql.reach, rnd.reach, dqn.overheard, rnd.overheard
        ),
    )
}

fn weight_trends(x: &Experiment) -> Verdict {
    let lo = x[&(Algorithm::Dqn, "0.1")];
    let hi = x[&(Algorithm::Dqn, "0.9")];
    let pass =
        hi.reach > lo.reach + 0.03 && hi.overheard > lo.overheard + 0.03 && lo.cv > hi.cv + 0.05;
    verdict(
        "weight trends",
        pass,
        format!(
            "reachability w0.9 {:.4} w0.1 {:.4}; overheard w0.9 {:.4} w0.1 {:.4}; cv w0.1 {:.4} w0.9 {:.4}",
            hi.reach, lo.reach, hi.overheard, lo.overheard, lo.cv, hi.cv
        ),
    )
}

fn objective_ordering(x: &Experiment) -> Verdict {
    let o = |w| x[&(Algorithm::Dqn, w)].objective;
    verdict(
        "objective ordering",
        o("0.1") > o("0.5") && o("0.1") > o("0.9"),
        format!(
            "objective w0.1 {:.4} w0.5 {:.4} w0.9 {:.4}",
            o("0.1"),
            o("0.5"),
            o("0.9")
        ),
    )
}

// ---- determinism --------------------------------------------------------

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_swarm-nd"))
            .args(["run", "--seed", "3", "--intervals", "400", "--out-dir"])
            .arg(&out_dir)
            .stderr(Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(out_dir.join("dqn_w0.5_s3.csv")).unwrap());
    }
    verdict(
        "determinism",
        outputs[0] == outputs[1] && !outputs[0].is_empty(),
        format!("two `run` executions, {} bytes each", outputs[0].len()),
    )
}

fn main() -> ExitCode {
    let mut verdicts = Vec::new();
    let mut report = |v: Verdict, started: Instant| {
        println!(
            "{} {}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail,
            started.elapsed().as_secs_f64()
        );
        verdicts.push(v.pass);
    };
    let light: [fn() -> Verdict; 5] = [
        formula_oracles,
        gradient_gate,
        reachability_oracle,
        protocol_invariants,
        determinism,
    ];
    for check in light {
        let t = Instant::now();
        report(check(), t);
    }
    let t = Instant::now();
    let x = experiment();
    report(algorithm_ordering(&x), t);
    report(weight_trends(&x), t);
    report(objective_ordering(&x), t);

    if verdicts.iter().all(|&p| p) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
