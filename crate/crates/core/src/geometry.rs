//! Planar geometry, sector layout and the directional link budget.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point or displacement in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        debug_assert!(x.is_finite() && y.is_finite(), "non-finite Vec2");
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2::new(T::zero(), T::zero())
    }

    /// Unit vector at `angle` radians from the +x axis.
    pub fn from_angle(angle: T) -> Self {
        Vec2::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Self) -> T {
        (other - self).norm()
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// One of the `K` transceiver sectors, numbered `1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sector(u16);

impl Sector {
    /// Panics on `0`; sectors are one-based.
    pub fn new(number: usize) -> Self {
        assert!(
            number >= 1 && number <= u16::MAX as usize,
            "sector numbers start at 1"
        );
        Sector(number as u16)
    }

    pub fn from_index(index: usize) -> Self {
        Sector::new(index + 1)
    }

    /// One-based sector number.
    pub fn number(self) -> usize {
        self.0 as usize
    }

    /// Zero-based index, for array addressing.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `K` equal sectors tiling the circle; sector 1 starts at global angle 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorLayout<T> {
    k: usize,
    fov: T,
}

impl<T: Scalar> SectorLayout<T> {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::config("k", "need at least 2 sectors"));
        }
        Ok(SectorLayout {
            k,
            fov: T::TAU() / T::lit(k as f64),
        })
    }

    pub fn count(&self) -> usize {
        self.k
    }

    pub fn fov(&self) -> T {
        self.fov
    }

    pub fn sectors(&self) -> impl Iterator<Item = Sector> {
        (0..self.k).map(Sector::from_index)
    }

    /// Centre direction of `sector`: `(k − ½)·fov`.
    pub fn boresight(&self, sector: Sector) -> T {
        (T::lit(sector.index() as f64) + T::lit(0.5)) * self.fov
    }

    /// Sector whose half-open range `[(k−1)·fov, k·fov)` holds `bearing`.
    pub fn sector_of(&self, bearing: T) -> Sector {
        debug_assert!(bearing >= T::zero() && bearing < T::TAU());
        let idx = (bearing / self.fov).floor().to_usize().unwrap_or(0);
        Sector::from_index(idx.min(self.k - 1))
    }

    /// Absolute angular deviation of `bearing` from the sector's boresight, in `[0, π]`.
    pub fn deviation(&self, sector: Sector, bearing: T) -> T {
        angular_distance(bearing, self.boresight(sector))
    }
}

/// Wraps any finite angle to `[0, 2π)`.
pub fn wrap_angle<T: Scalar>(angle: T) -> T {
    let tau = T::TAU();
    let mut a = angle % tau;
    if a < T::zero() {
        a = a + tau;
    }
    // -tiny + 2π rounds to exactly 2π
    if a >= tau {
        a = T::zero();
    }
    a
}

/// Smallest unsigned angle between two directions.
pub fn angular_distance<T: Scalar>(a: T, b: T) -> T {
    let d = wrap_angle(a - b);
    if d > T::PI() {
        T::TAU() - d
    } else {
        d
    }
}

/// Direction from `from` to `to`, in `[0, 2π)`.
pub fn bearing<T: Scalar>(from: Vec2<T>, to: Vec2<T>) -> Result<T> {
    let d = to - from;
    if d.x == T::zero() && d.y == T::zero() {
        return Err(Error::DegenerateBearing);
    }
    Ok(wrap_angle(d.y.atan2(d.x)))
}

/// Half-power beamwidth `fov / 2.6`.
pub fn hpbw<T: Scalar>(fov: T) -> T {
    fov / T::lit(2.6)
}

/// Peak gain `G0 = 10·log10((1.6162 / sin(hpbw/2))²)` in dB.
pub fn peak_gain_db<T: Scalar>(fov: T) -> T {
    let s = T::lit(1.6162) / (hpbw(fov) / T::lit(2.0)).sin();
    T::lit(10.0) * (s * s).log10()
}

/// Main-lobe gain in dB at `dev` radians off boresight.
///
/// Returns `None` once `dev` exceeds `fov/2`: the peer is outside the sector.
/// Panics on negative deviation.
pub fn gain_db<T: Scalar>(dev: T, fov: T) -> Option<T> {
    assert!(dev >= T::zero(), "negative boresight deviation");
    if dev > fov / T::lit(2.0) {
        return None;
    }
    let ratio = T::lit(2.0) * dev / hpbw(fov);
    Some(peak_gain_db(fov) - T::lit(3.01) * ratio * ratio)
}

pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// Link-budget constants of the radios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams<T> {
    /// Transmit power, W.
    pub p_t: T,
    /// Path-loss exponent.
    pub eta: T,
    /// Carrier wavelength, m.
    pub lambda_m: T,
    /// Minimum usable received power, W.
    pub p_o: T,
    /// Replaces `(λ/4π)²` when set.
    pub k0_override: Option<T>,
    /// Transmission range, m.
    pub range_m: T,
    /// Beam divergence half-angle; always `fov/2`.
    pub theta_half_rad: T,
    /// Apply the `p_o` threshold in [`link_feasible`]. Off by default: with
    /// optical wavelengths the received power never reaches `p_o`.
    pub power_check: bool,
}

impl<T: Scalar> RadioParams<T> {
    pub fn defaults(layout: &SectorLayout<T>) -> Self {
        RadioParams {
            p_t: T::lit(10e-3),
            eta: T::lit(2.0),
            lambda_m: T::lit(850e-9),
            p_o: T::lit(0.5e-3),
            k0_override: None,
            range_m: T::lit(30.0),
            theta_half_rad: layout.fov() / T::lit(2.0),
            power_check: false,
        }
    }

    pub fn validate(&self, layout: &SectorLayout<T>) -> Result<()> {
        if !(self.p_t > T::zero()) {
            return Err(Error::config("p_t", "must be positive"));
        }
        if !(self.p_o > T::zero()) {
            return Err(Error::config("p_o", "must be positive"));
        }
        if !(self.eta >= T::one()) {
            return Err(Error::config("eta", "must be at least 1"));
        }
        if !(self.range_m > T::zero()) {
            return Err(Error::config("range_m", "must be positive"));
        }
        if self.theta_half_rad != layout.fov() / T::lit(2.0) {
            return Err(Error::config("theta_half_rad", "must equal fov/2"));
        }
        Ok(())
    }

    /// Free-space factor `(λ/4π)²` unless overridden.
    pub fn k0(&self) -> T {
        self.k0_override.unwrap_or_else(|| {
            let f = self.lambda_m / (T::lit(4.0) * T::PI());
            f * f
        })
    }
}

/// Received power at `rx` from `tx`, or `None` when either end points away.
pub fn received_power<T: Scalar>(
    tx: Vec2<T>,
    tx_sector: Sector,
    rx: Vec2<T>,
    rx_sector: Sector,
    params: &RadioParams<T>,
    layout: &SectorLayout<T>,
) -> Result<Option<T>> {
    let out = bearing(tx, rx)?;
    let back = bearing(rx, tx)?;
    let fov = layout.fov();
    let (Some(g_t), Some(g_r)) = (
        gain_db(layout.deviation(tx_sector, out), fov),
        gain_db(layout.deviation(rx_sector, back), fov),
    ) else {
        return Ok(None);
    };
    let l = tx.dist(rx);
    Ok(Some(
        params.p_t * params.k0() * db_to_linear(g_t) * db_to_linear(g_r) * l.powf(-params.eta),
    ))
}

/// Whether `i` transmitting on `i_sector` and `j` listening on `j_sector`
/// can close a line-of-sight link in both directions.
pub fn link_feasible<T: Scalar>(
    i_pos: Vec2<T>,
    i_sector: Sector,
    j_pos: Vec2<T>,
    j_sector: Sector,
    params: &RadioParams<T>,
    layout: &SectorLayout<T>,
) -> bool {
    let (Ok(ij), Ok(ji)) = (bearing(i_pos, j_pos), bearing(j_pos, i_pos)) else {
        return false;
    };
    if i_pos.dist(j_pos) > params.range_m {
        return false;
    }
    if layout.sector_of(ij) != i_sector || layout.sector_of(ji) != j_sector {
        return false;
    }
    if params.power_check {
        let forward = received_power(i_pos, i_sector, j_pos, j_sector, params, layout);
        let reverse = received_power(j_pos, j_sector, i_pos, i_sector, params, layout);
        return matches!((forward, reverse), (Ok(Some(a)), Ok(Some(b))) if a >= params.p_o && b >= params.p_o);
    }
    true
}
