//! Walker constellation geometry and closed-form circular-orbit propagation.
//!
//! Satellite positions are always evaluated from the orbital elements and the
//! absolute epoch, never integrated step by step, so splitting a propagation
//! interval never accumulates drift.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Vec3;

/// Standard gravitational parameter of the Earth, m³/s².
pub const MU_EARTH: f64 = 3.986004418e14;
/// Mean spherical Earth radius, m.
pub const EARTH_RADIUS: f64 = 6_371_000.0;
/// Sidereal rotation rate of the Earth, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.2921159e-5;

const DEFAULT_GATEWAYS: &str = include_str!("../data/gateways.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkerKind {
    /// Ascending nodes spread over half a revolution.
    Star,
    /// Ascending nodes spread over a full revolution.
    Delta,
}

impl WalkerKind {
    fn raan_span(self) -> f64 {
        match self {
            WalkerKind::Star => PI,
            WalkerKind::Delta => 2.0 * PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationSpec {
    pub num_planes: usize,
    pub sats_per_plane: usize,
    /// Altitude above the spherical Earth, meters.
    pub altitude: f64,
    /// Radians.
    pub inclination: f64,
    pub walker_kind: WalkerKind,
    /// In-plane anomaly offset between adjacent planes, radians.
    pub phasing_offset: f64,
}

impl ConstellationSpec {
    /// Builds a spec with the conventional phasing for its Walker kind:
    /// zero for star, `π/(O·N)` for delta.
    pub fn walker(
        walker_kind: WalkerKind,
        num_planes: usize,
        sats_per_plane: usize,
        altitude: f64,
        inclination: f64,
    ) -> Self {
        let phasing_offset = match walker_kind {
            WalkerKind::Star => 0.0,
            WalkerKind::Delta => PI / (num_planes.max(1) * sats_per_plane.max(1)) as f64,
        };
        ConstellationSpec {
            num_planes,
            sats_per_plane,
            altitude,
            inclination,
            walker_kind,
            phasing_offset,
        }
    }

    pub fn num_satellites(&self) -> usize {
        self.num_planes * self.sats_per_plane
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_planes < 1 {
            return Err(Error::config("constellation.num_planes", "must be at least 1"));
        }
        if self.sats_per_plane < 1 {
            return Err(Error::config("constellation.sats_per_plane", "must be at least 1"));
        }
        if !(self.altitude.is_finite() && self.altitude > 0.0) {
            return Err(Error::config(
                "constellation.altitude_km",
                "must be a positive finite number",
            ));
        }
        if !(self.inclination.is_finite() && (0.0..=PI).contains(&self.inclination)) {
            return Err(Error::config(
                "constellation.inclination_deg",
                "must lie in [0, 180] degrees",
            ));
        }
        if !self.phasing_offset.is_finite() {
            return Err(Error::config("constellation.phasing_offset_deg", "must be finite"));
        }
        Ok(())
    }

    /// Right ascension of the ascending node of plane `p`.
    pub fn raan(&self, plane: usize) -> f64 {
        plane as f64 * self.walker_kind.raan_span() / self.num_planes as f64
    }

    /// Argument of latitude of satellite `(p, k)` at epoch 0.
    pub fn initial_anomaly(&self, plane: usize, index: usize) -> f64 {
        2.0 * PI * index as f64 / self.sats_per_plane as f64 + plane as f64 * self.phasing_offset
    }
}

/// Named constellations. Inclinations are public nominal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Kepler,
    IridiumNext,
    Oneweb,
    Starlink,
    /// Two planes of four satellites at 4000 km, for fast learning tests.
    TestSmall,
    /// Four planes of six satellites at 2000 km.
    TestMedium,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Kepler,
        Preset::IridiumNext,
        Preset::Oneweb,
        Preset::Starlink,
        Preset::TestSmall,
        Preset::TestMedium,
    ];

    pub fn spec(self) -> ConstellationSpec {
        let deg = PI / 180.0;
        match self {
            Preset::Kepler => ConstellationSpec::walker(WalkerKind::Star, 7, 20, 600e3, 98.6 * deg),
            Preset::IridiumNext => ConstellationSpec::walker(WalkerKind::Star, 6, 11, 780e3, 86.4 * deg),
            Preset::Oneweb => ConstellationSpec::walker(WalkerKind::Star, 36, 18, 1200e3, 87.9 * deg),
            Preset::Starlink => ConstellationSpec::walker(WalkerKind::Delta, 72, 22, 550e3, 53.0 * deg),
            Preset::TestSmall => {
                let mut spec = ConstellationSpec::walker(WalkerKind::Star, 2, 4, 4000e3, 60.0 * deg);
                spec.phasing_offset = PI / 4.0;
                spec
            }
            Preset::TestMedium => {
                let mut spec = ConstellationSpec::walker(WalkerKind::Star, 4, 6, 2000e3, 80.0 * deg);
                spec.phasing_offset = PI / 6.0;
                spec
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Kepler => "kepler",
            Preset::IridiumNext => "iridium-next",
            Preset::Oneweb => "oneweb",
            Preset::Starlink => "starlink",
            Preset::TestSmall => "test-small",
            Preset::TestMedium => "test-medium",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "constellation.preset",
                    format!("unknown preset `{s}` (expected one of kepler, iridium-next, oneweb, starlink, test-small, test-medium)"),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SatId {
    pub plane: usize,
    pub index: usize,
}

/// Fixed circular-orbit elements of one satellite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalElements {
    pub radius: f64,
    pub inclination: f64,
    pub raan: f64,
    /// Argument of latitude at epoch 0.
    pub anomaly0: f64,
    /// Angular rate along the orbit, rad/s.
    pub mean_motion: f64,
    /// Rotation rate of the Earth-fixed frame, rad/s. Zero gives an inertial frame.
    pub earth_rate: f64,
}

impl OrbitalElements {
    pub fn anomaly_at(&self, epoch: f64) -> f64 {
        self.anomaly0 + self.mean_motion * epoch
    }

    /// Position in the Earth-fixed frame at absolute `epoch` seconds.
    pub fn position_at(&self, epoch: f64) -> Vec3 {
        let u = self.anomaly_at(epoch);
        let (su, cu) = u.sin_cos();
        let (so, co) = self.raan.sin_cos();
        let (si, ci) = self.inclination.sin_cos();
        let inertial = Vec3::new(
            self.radius * (co * cu - so * su * ci),
            self.radius * (so * cu + co * su * ci),
            self.radius * su * si,
        );
        inertial.rotate_z(-self.earth_rate * epoch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteState {
    pub sat_id: SatId,
    pub position: Vec3,
    pub epoch: f64,
    pub elements: OrbitalElements,
}

/// Orbital period of a circular orbit at `altitude` meters.
pub fn orbital_period(altitude: f64) -> f64 {
    let a = EARTH_RADIUS + altitude;
    2.0 * PI * (a.powi(3) / MU_EARTH).sqrt()
}

pub fn build_constellation(spec: &ConstellationSpec) -> Result<Vec<SatelliteState>> {
    build_constellation_in_frame(spec, EARTH_ROTATION_RATE)
}

/// Like [`build_constellation`] but with an explicit Earth-frame rotation rate.
pub fn build_constellation_in_frame(spec: &ConstellationSpec, earth_rate: f64) -> Result<Vec<SatelliteState>> {
    spec.validate()?;
    let radius = EARTH_RADIUS + spec.altitude;
    let mean_motion = 2.0 * PI / orbital_period(spec.altitude);
    let mut out = Vec::with_capacity(spec.num_satellites());
    for plane in 0..spec.num_planes {
        for index in 0..spec.sats_per_plane {
            let elements = OrbitalElements {
                radius,
                inclination: spec.inclination,
                raan: spec.raan(plane),
                anomaly0: spec.initial_anomaly(plane, index),
                mean_motion,
                earth_rate,
            };
            out.push(SatelliteState {
                sat_id: SatId { plane, index },
                position: elements.position_at(0.0),
                epoch: 0.0,
                elements,
            });
        }
    }
    Ok(out)
}

pub fn propagate(states: &[SatelliteState], dt: f64) -> Vec<SatelliteState> {
    debug_assert!(dt >= 0.0);
    states
        .iter()
        .map(|s| {
            let epoch = s.epoch + dt;
            SatelliteState {
                sat_id: s.sat_id,
                position: s.elements.position_at(epoch),
                epoch,
                elements: s.elements,
            }
        })
        .collect()
}

/// Positions at an absolute epoch, independent of the states' current epoch.
pub fn positions_at(states: &[SatelliteState], epoch: f64) -> Vec<SatelliteState> {
    states
        .iter()
        .map(|s| SatelliteState {
            sat_id: s.sat_id,
            position: s.elements.position_at(epoch),
            epoch,
            elements: s.elements,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewaySite {
    pub gw_id: usize,
    /// Radians.
    pub latitude: f64,
    /// Radians, in [-π, π).
    pub longitude: f64,
    pub name: String,
}

impl GatewaySite {
    pub fn new(gw_id: usize, name: impl Into<String>, latitude_deg: f64, longitude_deg: f64) -> Result<Self> {
        let site = GatewaySite {
            gw_id,
            latitude: latitude_deg.to_radians(),
            longitude: wrap_longitude(longitude_deg.to_radians()),
            name: name.into(),
        };
        if !(site.latitude.is_finite() && site.latitude.abs() <= PI / 2.0 + 1e-12) {
            return Err(Error::config(
                "ground.gateways",
                format!("gateway `{}` latitude {latitude_deg} out of range", site.name),
            ));
        }
        if !site.longitude.is_finite() {
            return Err(Error::config(
                "ground.gateways",
                format!("gateway `{}` longitude is not finite", site.name),
            ));
        }
        Ok(site)
    }
}

fn wrap_longitude(lon: f64) -> f64 {
    let wrapped = (lon + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Earth-fixed position of a gateway on the spherical Earth surface.
pub fn gateway_position(site: &GatewaySite) -> Vec3 {
    let (sl, cl) = site.latitude.sin_cos();
    let (so, co) = site.longitude.sin_cos();
    Vec3::new(EARTH_RADIUS * cl * co, EARTH_RADIUS * cl * so, EARTH_RADIUS * sl)
}

#[derive(Debug, Deserialize)]
struct GatewayRow {
    name: String,
    latitude_deg: f64,
    longitude_deg: f64,
}

/// Parses a gateway list (`name,latitude_deg,longitude_deg`).
pub fn parse_gateways(csv_text: &str) -> Result<Vec<GatewaySite>> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<GatewayRow>().enumerate() {
        let row = row?;
        out.push(GatewaySite::new(i, row.name, row.latitude_deg, row.longitude_deg)?);
    }
    Ok(out)
}

pub fn load_gateways(path: &Path) -> Result<Vec<GatewaySite>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gateways(&text)
}

/// The bundled 18-site ground segment.
pub fn default_gateways() -> Vec<GatewaySite> {
    parse_gateways(DEFAULT_GATEWAYS).expect("bundled gateway table is valid")
}
