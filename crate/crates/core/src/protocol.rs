//! One NDM interval: probe delivery, handshakes, collisions, overhearing,
//! link upkeep and reachability.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::geometry::{bearing, link_feasible, RadioParams, Sector, SectorLayout, Vec2};
use crate::scalar::Scalar;

pub type NodeId = usize;

/// What a node observed at the end of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    None,
    Collision,
    Discovery(NodeId),
}

impl Outcome {
    /// Numeric code fed to the agent: 0, 0.5 or 1.
    pub fn code(self) -> f64 {
        match self {
            Outcome::None => 0.0,
            Outcome::Collision => 0.5,
            Outcome::Discovery(_) => 1.0,
        }
    }

    pub fn peer(self) -> Option<NodeId> {
        match self {
            Outcome::Discovery(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResolution {
    /// Indexed by node id.
    pub outcomes: Vec<Outcome>,
    /// Completed handshakes as `(lo, hi)` pairs.
    pub pairs: Vec<(NodeId, NodeId)>,
    /// Probes that physically reached each node.
    pub arrivals: Vec<Vec<NodeId>>,
}

/// Sector of `at` that faces `toward`; `None` if the points coincide.
fn facing<T: Scalar>(at: Vec2<T>, toward: Vec2<T>, layout: &SectorLayout<T>) -> Option<Sector> {
    bearing(at, toward).ok().map(|b| layout.sector_of(b))
}

/// Whether `from`'s probe on `sector` reaches `to`, which listens on every sector.
pub fn probe_reaches<T: Scalar>(
    from: Vec2<T>,
    sector: Sector,
    to: Vec2<T>,
    params: &RadioParams<T>,
    layout: &SectorLayout<T>,
) -> bool {
    match facing(to, from, layout) {
        Some(rx_sector) => link_feasible(from, sector, to, rx_sector, params, layout),
        None => false,
    }
}

/// Delivers every node's probe and settles handshakes.
///
/// A receiver hit by two or more probes is in collision and answers nobody.
/// A receiver hit by exactly one probe replies on its facing sector; the
/// handshake completes if the reply is feasible and the prober is not itself
/// in collision. Each node pairs at most once; competing handshakes are
/// granted in order of prober id.
pub fn resolve_probes<T: Scalar>(
    actions: &[Sector],
    positions: &[Vec2<T>],
    layout: &SectorLayout<T>,
    params: &RadioParams<T>,
) -> ProbeResolution {
    assert_eq!(actions.len(), positions.len(), "one action per node");
    let n = actions.len();
    let mut arrivals: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (i, (&sector, &from)) in actions.iter().zip(positions).enumerate() {
        for (j, &to) in positions.iter().enumerate() {
            if i != j && probe_reaches(from, sector, to, params, layout) {
                arrivals[j].push(i);
            }
        }
    }
    let collided: Vec<bool> = arrivals.iter().map(|a| a.len() >= 2).collect();

    let mut candidates: Vec<(NodeId, NodeId)> = arrivals
        .iter()
        .enumerate()
        .filter_map(|(j, a)| match a.as_slice() {
            &[i] if !collided[i] => {
                let reply = facing(positions[j], positions[i], layout)
                    .is_some_and(|s| probe_reaches(positions[j], s, positions[i], params, layout));
                reply.then_some((i, j))
            }
            _ => None,
        })
        .collect();
    candidates.sort_unstable();

    let mut outcomes = vec![Outcome::None; n];
    let mut pairs = Vec::new();
    for (i, j) in candidates {
        if outcomes[i].peer().is_none() && outcomes[j].peer().is_none() {
            outcomes[i] = Outcome::Discovery(j);
            outcomes[j] = Outcome::Discovery(i);
            pairs.push((i.min(j), i.max(j)));
        }
    }
    for (o, &c) in outcomes.iter_mut().zip(&collided) {
        if c && o.peer().is_none() {
            *o = Outcome::Collision;
        }
    }
    ProbeResolution {
        outcomes,
        pairs,
        arrivals,
    }
}

/// Nodes detected by undesired users this interval.
///
/// Each user detects at most one node: among nodes within `r_d` whose probe
/// sector covers the user, the nearest (then lowest id).
pub fn overhearing<T: Scalar>(
    actions: &[Sector],
    positions: &[Vec2<T>],
    user_positions: &[Vec2<T>],
    layout: &SectorLayout<T>,
    r_d: T,
) -> BTreeSet<NodeId> {
    let mut heard = BTreeSet::new();
    for &user in user_positions {
        let mut best: Option<(T, NodeId)> = None;
        for (i, (&sector, &pos)) in actions.iter().zip(positions).enumerate() {
            let Ok(b) = bearing(pos, user) else { continue };
            let d = pos.dist(user);
            if d > r_d || layout.sector_of(b) != sector {
                continue;
            }
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        if let Some((_, i)) = best {
            heard.insert(i);
        }
    }
    heard
}

/// Live links keyed by `(lo, hi)` with their alive counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkTable {
    links: BTreeMap<(NodeId, NodeId), u32>,
}

impl LinkTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn counter(&self, a: NodeId, b: NodeId) -> Option<u32> {
        self.links.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((NodeId, NodeId), u32)> + '_ {
        self.links.iter().map(|(&k, &v)| (k, v))
    }

    /// Reaffirmed pairs reset to 0, others age by one, and anything older
    /// than `timeout` expires.
    pub fn update(&mut self, discovered: &[(NodeId, NodeId)], timeout: u32) {
        let fresh: BTreeSet<(NodeId, NodeId)> = discovered
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        for (key, counter) in self.links.iter_mut() {
            if !fresh.contains(key) {
                *counter += 1;
            }
        }
        for key in fresh {
            self.links.insert(key, 0);
        }
        self.links.retain(|_, c| *c <= timeout);
    }

    /// Symmetric adjacency matrix with an empty diagonal.
    pub fn adjacency(&self, n: usize) -> Vec<Vec<bool>> {
        let mut a = vec![vec![false; n]; n];
        for &(i, j) in self.links.keys() {
            a[i][j] = true;
            a[j][i] = true;
        }
        a
    }

    /// Fraction of the other `n − 1` nodes each node reaches over live links.
    pub fn reachability(&self, n: usize) -> Result<Vec<f64>> {
        if n < 2 {
            return Err(Error::config("n", "reachability needs at least two nodes"));
        }
        let mut sets = DisjointSets::new(n);
        for &(i, j) in self.links.keys() {
            sets.union(i, j);
        }
        let mut sizes = vec![0usize; n];
        for i in 0..n {
            sizes[sets.find(i)] += 1;
        }
        let denom = (n - 1) as f64;
        Ok((0..n)
            .map(|i| (sizes[sets.find(i)] - 1) as f64 / denom)
            .collect())
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Everything observable about one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReport {
    pub outcomes: Vec<Outcome>,
    pub overheard: BTreeSet<NodeId>,
    pub adjacency: Vec<Vec<bool>>,
    pub reachability: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (SectorLayout<f64>, RadioParams<f64>) {
        let l = SectorLayout::new(8).unwrap();
        let p = RadioParams::defaults(&l);
        (l, p)
    }

    fn toward(l: &SectorLayout<f64>, from: Vec2<f64>, to: Vec2<f64>) -> Sector {
        l.sector_of(bearing(from, to).unwrap())
    }

    #[test]
    fn isolated_nodes_discover_nothing() {
        let (l, p) = setup();
        let pos = [Vec2::new(10.0, 10.0), Vec2::new(20.0, 10.0)];
        // both probe away from each other
        let acts = [Sector::new(5), Sector::new(1)];
        let r = resolve_probes(&acts, &pos, &l, &p);
        assert_eq!(r.outcomes, vec![Outcome::None, Outcome::None]);
        assert!(r.pairs.is_empty());
    }

    #[test]
    fn unique_probe_completes_handshake() {
        let (l, p) = setup();
        let pos = [Vec2::new(10.0, 10.0), Vec2::new(20.0, 11.0)];
        let acts = [toward(&l, pos[0], pos[1]), Sector::new(3)];
        let r = resolve_probes(&acts, &pos, &l, &p);
        assert_eq!(
            r.outcomes,
            vec![Outcome::Discovery(1), Outcome::Discovery(0)]
        );
        assert_eq!(r.pairs, vec![(0, 1)]);
    }

    #[test]
    fn two_probes_collide_at_receiver() {
        let (l, p) = setup();
        let j = Vec2::new(50.0, 50.0);
        let pos = [Vec2::new(40.0, 50.5), j, Vec2::new(50.5, 60.0)];
        let acts = [toward(&l, pos[0], j), Sector::new(7), toward(&l, pos[2], j)];
        // j's probe (sector 7, down-right) reaches nobody
        let r = resolve_probes(&acts, &pos, &l, &p);
        assert_eq!(
            r.outcomes,
            vec![Outcome::None, Outcome::Collision, Outcome::None]
        );
        // brute-force arrival count
        let hits: Vec<usize> = (0..3)
            .map(|t| {
                (0..3)
                    .filter(|&s| s != t && probe_reaches(pos[s], acts[s], pos[t], &p, &l))
                    .count()
            })
            .collect();
        assert_eq!(hits, vec![0, 2, 0]);
    }

    #[test]
    fn mutual_probes_pair_once() {
        let (l, p) = setup();
        let pos = [Vec2::new(10.0, 10.0), Vec2::new(20.0, 11.0)];
        let acts = [toward(&l, pos[0], pos[1]), toward(&l, pos[1], pos[0])];
        let r = resolve_probes(&acts, &pos, &l, &p);
        assert_eq!(r.pairs, vec![(0, 1)]);
        assert_eq!(r.outcomes[0], Outcome::Discovery(1));
    }

    #[test]
    fn a_node_pairs_at_most_once() {
        let (l, p) = setup();
        // 0 → 1 and 2 → 0 both unique; 0 may only keep one partner
        let pos = [
            Vec2::new(50.0, 50.0),
            Vec2::new(60.0, 50.5),
            Vec2::new(50.5, 40.0),
        ];
        let acts = [
            toward(&l, pos[0], pos[1]),
            Sector::new(3),
            toward(&l, pos[2], pos[0]),
        ];
        let r = resolve_probes(&acts, &pos, &l, &p);
        assert_eq!(r.pairs, vec![(0, 1)]);
        assert_eq!(r.outcomes[2], Outcome::None);
    }

    #[test]
    fn prober_in_collision_cannot_pair() {
        let (l, p) = setup();
        let i = Vec2::new(50.0, 50.0);
        let pos = [
            i,
            Vec2::new(60.0, 50.5),
            Vec2::new(40.0, 50.5),
            Vec2::new(50.5, 60.0),
        ];
        let acts = [
            toward(&l, i, pos[1]),
            Sector::new(3),
            toward(&l, pos[2], i),
            toward(&l, pos[3], i),
        ];
        let r = resolve_probes(&acts, &pos, &l, &p);
        assert_eq!(r.outcomes[0], Outcome::Collision);
        assert_eq!(r.outcomes[1], Outcome::None);
        assert!(r.pairs.is_empty());
    }

    #[test]
    fn overhearing_rules() {
        let (l, _) = setup();
        let user = Vec2::new(50.0, 50.0);
        let pos = [
            Vec2::new(40.0, 50.0),
            Vec2::new(70.0, 50.0),
            Vec2::new(50.0, 20.0),
        ];
        let away = [Sector::new(5), Sector::new(1), Sector::new(7)];
        assert!(overhearing(&away, &pos, &[user], &l, 30.0).is_empty());

        let at = [
            toward(&l, pos[0], user),
            toward(&l, pos[1], user),
            Sector::new(7),
        ];
        let heard = overhearing(&at, &pos, &[user], &l, 30.0);
        assert_eq!(heard.into_iter().collect::<Vec<_>>(), vec![0]);

        let only_far = [Sector::new(5), toward(&l, pos[1], user), Sector::new(7)];
        assert_eq!(overhearing(&only_far, &pos, &[user], &l, 30.0).len(), 1);
        assert!(overhearing(&only_far, &pos, &[user], &l, 19.0).is_empty());
    }

    #[test]
    fn link_lifecycle() {
        let mut t = LinkTable::new();
        t.update(&[(3, 1)], 5);
        assert_eq!(t.counter(1, 3), Some(0));
        for k in 1..=5 {
            t.update(&[], 5);
            assert_eq!(t.counter(1, 3), Some(k));
        }
        t.update(&[], 5);
        assert_eq!(t.counter(1, 3), None);

        let mut t = LinkTable::new();
        t.update(&[(0, 1)], 5);
        t.update(&[], 5);
        t.update(&[], 5);
        t.update(&[(1, 0)], 5);
        assert_eq!(t.counter(0, 1), Some(0));
        for _ in 0..5 {
            t.update(&[], 5);
        }
        assert_eq!(t.counter(0, 1), Some(5));
    }

    #[test]
    fn reachability_cases() {
        let t = LinkTable::new();
        assert_eq!(t.reachability(12).unwrap(), vec![0.0; 12]);
        assert!(t.reachability(1).is_err());

        let mut chain = LinkTable::new();
        chain.update(&(0..11).map(|i| (i, i + 1)).collect::<Vec<_>>(), 5);
        assert_eq!(chain.reachability(12).unwrap(), vec![1.0; 12]);

        let mut two = LinkTable::new();
        let mut pairs: Vec<_> = (0..3).map(|i| (i, i + 1)).collect();
        pairs.extend((4..11).map(|i| (i, i + 1)));
        two.update(&pairs, 5);
        let r = two.reachability(12).unwrap();
        assert!(r[..4].iter().all(|&x| x == 3.0 / 11.0));
        assert!(r[4..].iter().all(|&x| x == 7.0 / 11.0));
    }

    #[test]
    fn adjacency_symmetric() {
        let mut t = LinkTable::new();
        t.update(&[(2, 0), (1, 2)], 5);
        let a = t.adjacency(3);
        for i in 0..3 {
            assert!(!a[i][i]);
            for j in 0..3 {
                assert_eq!(a[i][j], a[j][i]);
            }
        }
        assert!(a[0][2] && a[1][2] && !a[0][1]);
    }
}
