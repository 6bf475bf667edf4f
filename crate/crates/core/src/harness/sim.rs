//! The per-interval loop that binds mobility, protocol, objective and agents.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Precision, SimConfig};
use super::metrics::{MetricsRow, TraceRow};
use crate::error::Result;
use crate::geometry::{RadioParams, Sector, SectorLayout};
use crate::mobility::{self, MobilityConfig, SwarmState};
use crate::objective::AgentMemory;
use crate::policy::{Algorithm, DqnAgent, Policy, QLearningAgent, RandomAgent};
use crate::protocol::{overhearing, resolve_probes, LinkTable, Outcome};
use crate::scalar::Scalar;

/// Independent random stream `stream` under the run's master `seed`.
///
/// Stream 0 drives the environment; stream `1 + i` belongs to node `i`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Node<T: Scalar> {
    memory: AgentMemory<T>,
    policy: Box<dyn Policy<T>>,
    rng: ChaCha8Rng,
}

/// Everything the loop learned in one interval, beyond the swarm means.
#[derive(Debug, Clone)]
pub struct IntervalDetail {
    pub actions: Vec<Sector>,
    pub outcomes: Vec<Outcome>,
    pub overheard: Vec<usize>,
    pub reachability: Vec<f64>,
    pub rewards: Vec<i8>,
    /// Counters of links alive before this interval's update.
    pub links_before: Vec<((usize, usize), u32)>,
    pub links_after: Vec<((usize, usize), u32)>,
}

/// One seeded simulation.
pub struct Simulation<T: Scalar> {
    cfg: SimConfig,
    seed: u64,
    run_id: String,
    layout: SectorLayout<T>,
    radio: RadioParams<T>,
    mobility: MobilityConfig<T>,
    swarm: SwarmState<T>,
    links: LinkTable,
    nodes: Vec<Node<T>>,
    env_rng: ChaCha8Rng,
    t: usize,
}

impl<T: Scalar> Simulation<T> {
    pub fn new(cfg: &SimConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let layout = cfg.layout::<T>()?;
        let radio = cfg.radio(&layout);
        radio.validate(&layout)?;
        let mobility = cfg.mobility::<T>();
        let mut env_rng = rng_stream(seed, 0);
        let swarm = mobility::init_grid(cfg.n, cfg.m, &mobility, &mut env_rng)?;
        let nodes = (0..cfg.n)
            .map(|i| {
                let mut rng = rng_stream(seed, 1 + i as u64);
                let policy: Box<dyn Policy<T>> = match cfg.algorithm {
                    Algorithm::Random => Box::new(RandomAgent::new(cfg.k)),
                    Algorithm::QLearning => Box::new(QLearningAgent::new(
                        cfg.k,
                        cfg.schedule(),
                        T::lit(cfg.gamma),
                        T::lit(cfg.lr),
                    )),
                    Algorithm::Dqn => {
                        Box::new(DqnAgent::new(cfg.window, cfg.k, cfg.dqn(), &mut rng)?)
                    }
                };
                Ok(Node {
                    memory: AgentMemory::new(
                        cfg.window,
                        cfg.k,
                        T::lit(cfg.alpha_ewma),
                        T::lit(cfg.w),
                    )?,
                    policy,
                    rng,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Simulation {
            cfg: cfg.clone(),
            seed,
            run_id: cfg.run_id(seed),
            layout,
            radio,
            mobility,
            swarm,
            links: LinkTable::new(),
            nodes,
            env_rng,
            t: 0,
        })
    }

    pub fn interval(&self) -> usize {
        self.t
    }

    pub fn swarm(&self) -> &SwarmState<T> {
        &self.swarm
    }

    pub fn links(&self) -> &LinkTable {
        &self.links
    }

    /// Runs one NDM interval and returns its swarm-mean metrics.
    pub fn step(&mut self) -> MetricsRow {
        self.step_detailed().0
    }

    pub fn step_detailed(&mut self) -> (MetricsRow, IntervalDetail) {
        let n = self.nodes.len();
        let actions: Vec<Sector> = self
            .nodes
            .iter_mut()
            .map(|node| node.policy.select(&node.memory, &mut node.rng))
            .collect();

        mobility::step(&mut self.swarm, &self.mobility, &mut self.env_rng);

        let resolution = resolve_probes(&actions, &self.swarm.positions, &self.layout, &self.radio);
        let overheard = overhearing(
            &actions,
            &self.swarm.positions,
            &self.swarm.user_positions,
            &self.layout,
            T::lit(self.cfg.r_d),
        );

        let (mut pe, mut cv, mut obj, mut rew) = (0.0, 0.0, 0.0, 0.0);
        let mut rewards = Vec::with_capacity(n);
        for ((node, &action), &outcome) in self
            .nodes
            .iter_mut()
            .zip(&actions)
            .zip(&resolution.outcomes)
        {
            let before = node.memory.clone();
            let eval = node.memory.observe(action, outcome);
            node.policy
                .learn(&before, action, eval.reward, &node.memory, &mut node.rng);
            pe += eval.pe.as_f64();
            cv += eval.cv.as_f64();
            obj += eval.objective.as_f64();
            rew += eval.reward as f64;
            rewards.push(eval.reward);
        }

        let links_before: Vec<_> = self.links.iter().collect();
        self.links.update(&resolution.pairs, self.cfg.link_timeout);
        let reachability = self.links.reachability(n).expect("n validated ≥ 2");

        let nf = n as f64;
        let row = MetricsRow {
            run_id: self.run_id.clone(),
            seed: self.seed,
            algorithm: self.cfg.algorithm,
            w: self.cfg.w,
            interval: self.t,
            reachability_mean: reachability.iter().sum::<f64>() / nf,
            overheard_frac: overheard.len() as f64 / nf,
            pe_mean: pe / nf,
            cv_mean: cv / nf,
            objective_mean: obj / nf,
            reward_mean: rew / nf,
        };
        self.t += 1;
        let detail = IntervalDetail {
            actions,
            outcomes: resolution.outcomes,
            overheard: overheard.into_iter().collect(),
            reachability,
            rewards,
            links_before,
            links_after: self.links.iter().collect(),
        };
        (row, detail)
    }

    /// Per-node and per-user rows describing the interval just simulated.
    pub fn trace_rows(&self, detail: &IntervalDetail) -> Vec<TraceRow> {
        let t = self.t.saturating_sub(1);
        let mut rows: Vec<TraceRow> = self
            .swarm
            .positions
            .iter()
            .enumerate()
            .map(|(i, p)| TraceRow {
                interval: t,
                kind: "node",
                id: i,
                x: p.x.as_f64(),
                y: p.y.as_f64(),
                sector: Some(detail.actions[i].number()),
                outcome: Some(detail.outcomes[i].code()),
                reward: Some(detail.rewards[i]),
                reachability: Some(detail.reachability[i]),
                overheard: Some(detail.overheard.contains(&i)),
            })
            .collect();
        rows.extend(
            self.swarm
                .user_positions
                .iter()
                .enumerate()
                .map(|(u, p)| TraceRow {
                    interval: t,
                    kind: "user",
                    id: u,
                    x: p.x.as_f64(),
                    y: p.y.as_f64(),
                    sector: None,
                    outcome: None,
                    reward: None,
                    reachability: None,
                    overheard: None,
                }),
        );
        rows
    }
}

impl<T: Scalar> Iterator for Simulation<T> {
    type Item = MetricsRow;

    fn next(&mut self) -> Option<MetricsRow> {
        (self.t < self.cfg.intervals).then(|| self.step())
    }
}

/// All metric rows of one `(config, seed)` run, at the configured precision.
pub fn run(cfg: &SimConfig, seed: u64) -> Result<Vec<MetricsRow>> {
    match cfg.precision {
        Precision::F64 => Ok(Simulation::<f64>::new(cfg, seed)?.collect()),
        Precision::F32 => Ok(Simulation::<f32>::new(cfg, seed)?.collect()),
    }
}

/// Runs and streams the metric rows as CSV, plus an optional per-node trace.
pub fn run_to_writer<W: Write, V: Write>(
    cfg: &SimConfig,
    seed: u64,
    out: W,
    trace: Option<V>,
) -> Result<()> {
    match cfg.precision {
        Precision::F64 => run_streaming::<f64, W, V>(cfg, seed, out, trace),
        Precision::F32 => run_streaming::<f32, W, V>(cfg, seed, out, trace),
    }
}

fn run_streaming<T: Scalar, W: Write, V: Write>(
    cfg: &SimConfig,
    seed: u64,
    out: W,
    trace: Option<V>,
) -> Result<()> {
    let mut sim = Simulation::<T>::new(cfg, seed)?;
    let mut writer = csv::Writer::from_writer(out);
    let mut trace = trace.map(csv::Writer::from_writer);
    let to_err = |e: csv::Error| crate::error::Error::csv("<stream>", e);
    // header even for zero intervals
    if cfg.intervals == 0 {
        writer.write_record(MetricsRow::HEADER).map_err(to_err)?;
    }
    while sim.interval() < cfg.intervals {
        let (row, detail) = sim.step_detailed();
        writer.serialize(&row).map_err(to_err)?;
        if let Some(tw) = trace.as_mut() {
            for r in sim.trace_rows(&detail) {
                tw.serialize(r).map_err(to_err)?;
            }
        }
    }
    writer
        .flush()
        .map_err(|e| crate::error::Error::io("<stream>", e))?;
    if let Some(mut tw) = trace {
        tw.flush()
            .map_err(|e| crate::error::Error::io("<trace>", e))?;
    }
    Ok(())
}
