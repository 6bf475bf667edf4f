//! Swarm-coordinated node mobility and random-walk undesired users.
//!
//! Each node wanders inside a circular roaming zone whose centre travels with
//! a swarm-wide drift. Zones never leave the area: the drift flips on the axis
//! where a zone would cross a wall. Undesired users walk independently and
//! bounce off the walls.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityConfig<T> {
    /// Side of the square area, m.
    pub area_m: T,
    /// Node roaming speed, m/s.
    pub v_mps: T,
    /// Radius of each node's roaming zone, m.
    pub r_roam_m: T,
    /// Magnitude of the swarm drift, m/s.
    pub drift_speed_mps: T,
    /// Undesired-user speed, m/s.
    pub user_speed_mps: T,
    /// Per-step probability that a user picks a fresh heading.
    pub user_turn_prob: f64,
    /// Seconds per NDM interval.
    pub dt_s: T,
}

impl<T: Scalar> MobilityConfig<T> {
    pub fn defaults() -> Self {
        MobilityConfig {
            area_m: T::lit(100.0),
            v_mps: T::lit(1.0),
            r_roam_m: T::lit(10.0),
            drift_speed_mps: T::lit(1.0),
            user_speed_mps: T::lit(1.0),
            user_turn_prob: 0.05,
            dt_s: T::lit(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area_m > T::zero()) {
            return Err(Error::config("area_m", "must be positive"));
        }
        if !(self.r_roam_m > T::zero() && self.r_roam_m < self.area_m / T::lit(2.0)) {
            return Err(Error::config("r_roam_m", "must lie in (0, area/2)"));
        }
        if !(self.v_mps >= T::zero()) {
            return Err(Error::config("v_mps", "must be non-negative"));
        }
        if !(self.drift_speed_mps >= T::zero()) {
            return Err(Error::config("drift_speed_mps", "must be non-negative"));
        }
        if !(self.user_speed_mps >= T::zero()) {
            return Err(Error::config("user_speed_mps", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.user_turn_prob) {
            return Err(Error::config("user_turn_prob", "must be a probability"));
        }
        if !(self.dt_s > T::zero()) {
            return Err(Error::config("dt_s", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState<T> {
    /// Swarm drift velocity, m/s.
    pub drift: Vec2<T>,
    pub roam_centers: Vec<Vec2<T>>,
    pub positions: Vec<Vec2<T>>,
    pub user_positions: Vec<Vec2<T>>,
    pub user_velocities: Vec<Vec2<T>>,
}

fn random_heading<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Vec2<T> {
    let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Vec2::from_angle(T::lit(a))
}

/// Places `n` roaming centres on a `⌈√n⌉`-wide square grid (row-major,
/// occupied rows centred vertically) and scatters `m` users uniformly.
pub fn init_grid<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    m: usize,
    cfg: &MobilityConfig<T>,
    rng: &mut R,
) -> Result<SwarmState<T>> {
    if n == 0 {
        return Err(Error::config("n", "need at least one node"));
    }
    cfg.validate()?;
    let side = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(side);
    let area = cfg.area_m;
    let half = T::lit(0.5);
    let margin = (area / T::lit(side as f64) * half).max(cfg.r_roam_m);
    let spacing = if side > 1 {
        (area - margin * T::lit(2.0)) / T::lit((side - 1) as f64)
    } else {
        T::zero()
    };
    if side > 1 && spacing < cfg.r_roam_m * T::lit(2.0) {
        return Err(Error::config(
            "n",
            format!(
                "{n} roaming zones of radius {} do not fit the area",
                cfg.r_roam_m
            ),
        ));
    }
    let mid = area * half;
    let mut centers = Vec::with_capacity(n);
    for idx in 0..n {
        let (r, c) = (idx / side, idx % side);
        let x = if side > 1 {
            margin + spacing * T::lit(c as f64)
        } else {
            mid
        };
        let y = mid + spacing * (T::lit(r as f64) - T::lit((rows - 1) as f64) * half);
        centers.push(Vec2::new(x, y));
    }
    let drift = random_heading(rng) * cfg.drift_speed_mps;
    let area_f = area.as_f64();
    let user_positions = (0..m)
        .map(|_| {
            Vec2::new(
                T::lit(rng.random_range(0.0..area_f)),
                T::lit(rng.random_range(0.0..area_f)),
            )
        })
        .collect();
    let user_velocities = (0..m)
        .map(|_| random_heading(rng) * cfg.user_speed_mps)
        .collect();
    Ok(SwarmState {
        drift,
        positions: centers.clone(),
        roam_centers: centers,
        user_positions,
        user_velocities,
    })
}

/// Reflects `x` into `[0, hi]`; returns whether a wall was hit.
fn reflect_axis<T: Scalar>(x: &mut T, hi: T) -> bool {
    let mut hit = false;
    if *x < T::zero() {
        *x = -*x;
        hit = true;
    }
    if *x > hi {
        *x = hi + hi - *x;
        hit = true;
    }
    *x = x.max(T::zero()).min(hi);
    hit
}

/// Specular reflection of the move `from → to` off a circle of radius `r`
/// centred at the origin. `from` must lie inside the circle.
fn reflect_in_circle<T: Scalar>(from: Vec2<T>, to: Vec2<T>, r: T) -> Vec2<T> {
    if to.norm() <= r {
        return to;
    }
    // first crossing: |from + s·d| = r, s in (0, 1]
    let d = to - from;
    let a = d.dot(d);
    let b = T::lit(2.0) * from.dot(d);
    let c = from.dot(from) - r * r;
    let disc = (b * b - T::lit(4.0) * a * c).max(T::zero());
    let s = ((-b + disc.sqrt()) / (T::lit(2.0) * a))
        .max(T::zero())
        .min(T::one());
    let hit = from + d * s;
    let normal = hit * (T::one() / hit.norm().max(T::min_positive_value()));
    let rest = to - hit;
    let mut out = hit + (rest - normal * (T::lit(2.0) * rest.dot(normal)));
    // a second crossing within one short step only happens through rounding
    let n = out.norm();
    if n > r {
        out = out * (r / n);
        while out.norm() > r {
            out = out * (T::one() - T::epsilon());
        }
    }
    out
}

/// Advances every node and user by one NDM interval.
pub fn step<T: Scalar, R: Rng + ?Sized>(
    state: &mut SwarmState<T>,
    cfg: &MobilityConfig<T>,
    rng: &mut R,
) {
    let area = cfg.area_m;
    let r = cfg.r_roam_m;

    // global drift with boundary inversion
    let mut delta = state.drift * cfg.dt_s;
    let crosses = |shift: T, axis: fn(&Vec2<T>) -> T, centers: &[Vec2<T>]| {
        centers.iter().any(|c| {
            let p = axis(c) + shift;
            p - r < T::zero() || p + r > area
        })
    };
    let axes: [(fn(&Vec2<T>) -> T, bool); 2] = [(|v| v.x, true), (|v| v.y, false)];
    for (axis, is_x) in axes {
        let shift = if is_x { delta.x } else { delta.y };
        if shift != T::zero() && crosses(shift, axis, &state.roam_centers) {
            if is_x {
                state.drift.x = -state.drift.x;
                delta.x = -delta.x;
                if crosses(delta.x, axis, &state.roam_centers) {
                    delta.x = T::zero();
                }
            } else {
                state.drift.y = -state.drift.y;
                delta.y = -delta.y;
                if crosses(delta.y, axis, &state.roam_centers) {
                    delta.y = T::zero();
                }
            }
        }
    }

    // local roaming, reflected off the zone circle then the area walls
    let hop = cfg.v_mps * cfg.dt_s;
    for (pos, center) in state
        .positions
        .iter_mut()
        .zip(state.roam_centers.iter_mut())
    {
        let offset = *pos - *center;
        let moved = if hop > T::zero() {
            reflect_in_circle(offset, offset + random_heading(rng) * hop, r)
        } else {
            offset
        };
        *center += delta;
        let mut p = *center + moved;
        reflect_axis(&mut p.x, area);
        reflect_axis(&mut p.y, area);
        *pos = p;
    }

    for (pos, vel) in state
        .user_positions
        .iter_mut()
        .zip(state.user_velocities.iter_mut())
    {
        if rng.random_bool(cfg.user_turn_prob) {
            *vel = random_heading(rng) * cfg.user_speed_mps;
        }
        let mut p = *pos + *vel * cfg.dt_s;
        if reflect_axis(&mut p.x, area) {
            vel.x = -vel.x;
        }
        if reflect_axis(&mut p.y, area) {
            vel.y = -vel.y;
        }
        *pos = p;
    }
}
