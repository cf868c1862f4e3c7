//! Scenario configuration: a TOML document with documented defaults.
//!
//! Any key can be overridden from the environment as
//! `LEOSIM__<SECTION>__<KEY>=<value>` (e.g. `LEOSIM__TRAFFIC__LOAD_FRACTION=0.3`)
//! or on the command line as `--set section.key=value`. Values are parsed as
//! TOML literals and fall back to plain strings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, LinkBudget, ModcodTable, RadioParams};
use crate::engine::{EngineConfig, Scenario, TrafficSpec};
use crate::error::{Error, Result};
use crate::orbit::{build_constellation, default_gateways, load_gateways, ConstellationSpec, Preset, WalkerKind};
use crate::routing::{DqnConfig, EpsilonSchedule, MadrlPhase, QRoutingConfig, RewardSpec, WeightScheme};
use crate::topology::TopologyParams;

pub const ENV_PREFIX: &str = "LEOSIM__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration_s: f64,
    pub constellation: ConstellationSection,
    pub ground: GroundSection,
    pub traffic: TrafficSection,
    pub engine: EngineSection,
    pub routing: RoutingSection,
    pub learning: LearningSection,
    pub radio: RadioSection,
    pub output: OutputSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            duration_s: 60.0,
            constellation: Default::default(),
            ground: Default::default(),
            traffic: Default::default(),
            engine: Default::default(),
            routing: Default::default(),
            learning: Default::default(),
            radio: Default::default(),
            output: Default::default(),
        }
    }
}

/// A preset, optionally with individual parameters replaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstellationSection {
    pub preset: String,
    pub walker_kind: Option<WalkerKind>,
    pub num_planes: Option<usize>,
    pub sats_per_plane: Option<usize>,
    pub altitude_km: Option<f64>,
    pub inclination_deg: Option<f64>,
    pub phasing_offset_deg: Option<f64>,
}

impl Default for ConstellationSection {
    fn default() -> Self {
        ConstellationSection {
            preset: "kepler".into(),
            walker_kind: None,
            num_planes: None,
            sats_per_plane: None,
            altitude_km: None,
            inclination_deg: None,
            phasing_offset_deg: None,
        }
    }
}

impl ConstellationSection {
    pub fn spec(&self) -> Result<ConstellationSpec> {
        let mut spec = self.preset.parse::<Preset>()?.spec();
        let custom_kind = self.walker_kind.is_some() || self.num_planes.is_some() || self.sats_per_plane.is_some();
        if let Some(k) = self.walker_kind {
            spec.walker_kind = k;
        }
        if let Some(o) = self.num_planes {
            spec.num_planes = o;
        }
        if let Some(n) = self.sats_per_plane {
            spec.sats_per_plane = n;
        }
        if custom_kind && self.phasing_offset_deg.is_none() {
            let fresh = ConstellationSpec::walker(spec.walker_kind, spec.num_planes, spec.sats_per_plane, 1.0, 0.0);
            spec.phasing_offset = fresh.phasing_offset;
        }
        if let Some(h) = self.altitude_km {
            spec.altitude = h * 1e3;
        }
        if let Some(i) = self.inclination_deg {
            spec.inclination = i.to_radians();
        }
        if let Some(p) = self.phasing_offset_deg {
            spec.phasing_offset = p.to_radians();
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundSection {
    /// Number of gateways taken from the start of the list.
    pub gateways: usize,
    /// Optional CSV (`name,latitude_deg,longitude_deg`); the bundled list otherwise.
    pub file: Option<PathBuf>,
    pub min_elevation_deg: f64,
}

impl Default for GroundSection {
    fn default() -> Self {
        GroundSection {
            gateways: 8,
            file: None,
            min_elevation_deg: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficSection {
    pub load_fraction: f64,
    pub packet_bits: u64,
}

impl Default for TrafficSection {
    fn default() -> Self {
        TrafficSection {
            load_fraction: 0.5,
            packet_bits: 64_800,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub queue_capacity: usize,
    /// Seconds between topology rebuilds; 0 freezes the first snapshot.
    pub update_interval_s: f64,
    pub time_scale: f64,
    pub ttl_hops: usize,
    pub queue_sample_interval_s: Option<f64>,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection {
            queue_capacity: 100,
            update_interval_s: 15.0,
            time_scale: 1.0,
            ttl_hops: 250,
            queue_sample_interval_s: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Dijkstra,
    QRouting,
    Madrl,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Dijkstra => "dijkstra",
            PolicyKind::QRouting => "q_routing",
            PolicyKind::Madrl => "madrl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingSection {
    pub policy: PolicyKind,
    pub weight: WeightScheme,
    pub phase: MadrlPhase,
    /// Pre-trained state: a Q-table CSV, a model file, or a directory of agent models.
    pub import: Option<PathBuf>,
}

impl Default for RoutingSection {
    fn default() -> Self {
        RoutingSection {
            policy: PolicyKind::Dijkstra,
            weight: WeightScheme::Hop,
            phase: MadrlPhase::Offline,
            import: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearningSection {
    pub alpha: f64,
    /// Defaults to 1.0 for Q-Routing and 0.99 for MA-DRL.
    pub gamma: Option<f64>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub target_sync: u64,
    pub train_every: u64,
    pub double_dqn: bool,
    pub hidden: Vec<usize>,
    pub max_grad_norm: f64,
    pub probe_count: usize,
    pub epsilon: EpsilonSchedule,
    pub reward: RewardSpec,
}

impl Default for LearningSection {
    fn default() -> Self {
        let d = DqnConfig::default();
        LearningSection {
            alpha: QRoutingConfig::default().alpha,
            gamma: None,
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            buffer_capacity: d.buffer_capacity,
            target_sync: d.target_sync,
            train_every: d.train_every,
            double_dqn: d.double_dqn,
            hidden: d.hidden,
            max_grad_norm: d.max_grad_norm,
            probe_count: d.probe_count,
            epsilon: d.epsilon,
            reward: d.reward,
        }
    }
}

impl LearningSection {
    pub fn qrouting(&self) -> QRoutingConfig {
        QRoutingConfig {
            alpha: self.alpha,
            gamma: self.gamma.unwrap_or(QRoutingConfig::default().gamma),
            epsilon: self.epsilon,
            reward: self.reward,
        }
    }

    pub fn dqn(&self) -> DqnConfig {
        DqnConfig {
            hidden: self.hidden.clone(),
            learning_rate: self.learning_rate,
            gamma: self.gamma.unwrap_or(DqnConfig::default().gamma),
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
            target_sync: self.target_sync,
            train_every: self.train_every,
            double_dqn: self.double_dqn,
            max_grad_norm: self.max_grad_norm,
            epsilon: self.epsilon,
            reward: self.reward,
            probe_count: self.probe_count,
        }
    }
}

/// Partial radio parameters layered over the defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioOverride {
    pub eirp_dbw: Option<f64>,
    pub gt_dbk: Option<f64>,
    pub carrier_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
}

impl RadioOverride {
    fn apply(&self, base: RadioParams) -> RadioParams {
        RadioParams {
            eirp_dbw: self.eirp_dbw.unwrap_or(base.eirp_dbw),
            gt_dbk: self.gt_dbk.unwrap_or(base.gt_dbk),
            carrier_hz: self.carrier_hz.unwrap_or(base.carrier_hz),
            bandwidth_hz: self.bandwidth_hz.unwrap_or(base.bandwidth_hz),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioSection {
    pub isl: RadioOverride,
    pub gsl_up: RadioOverride,
    pub gsl_down: RadioOverride,
    /// Optional CSV (`name,min_snr_db,spectral_efficiency`).
    pub modcod_file: Option<PathBuf>,
}

impl RadioSection {
    pub fn budget(&self) -> LinkBudget {
        let d = LinkBudget::default();
        LinkBudget {
            isl: self.isl.apply(d.isl),
            gsl_up: self.gsl_up.apply(d.gsl_up),
            gsl_down: self.gsl_down.apply(d.gsl_down),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotMode {
    All,
    First,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub charts: bool,
    pub snapshots: SnapshotMode,
    /// Also write every packet's node sequence to `paths.csv`.
    pub paths: bool,
    pub save_models: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("runs/latest"),
            charts: true,
            snapshots: SnapshotMode::All,
            paths: false,
            save_models: true,
        }
    }
}

/// Scenario identity used to decide whether two runs can be compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub constellation: String,
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub gateways: Vec<String>,
    pub duration_s: f64,
}

impl Fingerprint {
    /// Names and values of differing fields, empty when compatible.
    pub fn diff(&self, other: &Fingerprint) -> Vec<String> {
        let mut out = Vec::new();
        let mut cmp = |name: &str, a: String, b: String| {
            if a != b {
                out.push(format!("{name}: {a} != {b}"));
            }
        };
        cmp("constellation", self.constellation.clone(), other.constellation.clone());
        cmp("num_planes", self.num_planes.to_string(), other.num_planes.to_string());
        cmp(
            "sats_per_plane",
            self.sats_per_plane.to_string(),
            other.sats_per_plane.to_string(),
        );
        cmp(
            "altitude_km",
            self.altitude_km.to_string(),
            other.altitude_km.to_string(),
        );
        cmp(
            "inclination_deg",
            self.inclination_deg.to_string(),
            other.inclination_deg.to_string(),
        );
        cmp("gateways", self.gateways.join("|"), other.gateways.join("|"));
        cmp("duration_s", self.duration_s.to_string(), other.duration_s.to_string());
        out
    }
}

impl ScenarioConfig {
    /// Parses TOML text, layering `overrides` (dotted key, raw value) on top.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string().trim_end().to_string()))?;
        for (key, raw) in overrides {
            set_dotted(&mut table, key, raw)?;
        }
        let cfg: ScenarioConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (if given), then environment overrides, then `sets`.
    pub fn load(path: Option<&Path>, sets: &[(String, String)]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::ConfigParse(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut overrides = env_overrides(std::env::vars());
        overrides.extend_from_slice(sets);
        Self::from_toml_str(&text, &overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(Error::config("duration_s", "must be a non-negative finite number"));
        }
        self.constellation.spec()?;
        if self.ground.gateways < 2 {
            return Err(Error::config("ground.gateways", "need at least 2 gateways"));
        }
        if !(0.0..90.0).contains(&self.ground.min_elevation_deg) {
            return Err(Error::config("ground.min_elevation_deg", "must lie in [0, 90)"));
        }
        self.traffic_spec().validate()?;
        let e = &self.engine;
        if e.queue_capacity == 0 {
            return Err(Error::config("engine.queue_capacity", "must be positive"));
        }
        if !(e.update_interval_s.is_finite() && e.update_interval_s >= 0.0) {
            return Err(Error::config("engine.update_interval_s", "must be non-negative"));
        }
        if !(e.time_scale.is_finite() && e.time_scale > 0.0) {
            return Err(Error::config("engine.time_scale", "must be positive"));
        }
        if e.ttl_hops == 0 {
            return Err(Error::config("engine.ttl_hops", "must be positive"));
        }
        if let Some(q) = e.queue_sample_interval_s {
            if !(q.is_finite() && q > 0.0) {
                return Err(Error::config("engine.queue_sample_interval_s", "must be positive"));
            }
        }
        match self.routing.policy {
            PolicyKind::Dijkstra => {}
            PolicyKind::QRouting => self.learning.qrouting().validate()?,
            PolicyKind::Madrl => self.learning.dqn().validate()?,
        }
        self.radio.budget().validate()?;
        Ok(())
    }

    pub fn traffic_spec(&self) -> TrafficSpec {
        TrafficSpec {
            load_fraction: self.traffic.load_fraction,
            packet_bits: self.traffic.packet_bits,
            active_gateways: (0..self.ground.gateways).collect(),
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        let e = &self.engine;
        EngineConfig {
            duration: self.duration_s,
            queue_capacity: e.queue_capacity,
            update_interval: (e.update_interval_s > 0.0).then_some(e.update_interval_s),
            time_scale: e.time_scale,
            ttl_hops: e.ttl_hops,
            queue_sample_interval: e.queue_sample_interval_s,
            seed: self.seed,
        }
    }

    pub fn channel(&self) -> Result<ChannelModel> {
        let table = match &self.radio.modcod_file {
            Some(p) => ModcodTable::load(p)?,
            None => ModcodTable::dvb_s2_default(),
        };
        Ok(ChannelModel {
            table,
            budget: self.radio.budget(),
        })
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let spec = self.constellation.spec()?;
        let all = match &self.ground.file {
            Some(p) => load_gateways(p)?,
            None => default_gateways(),
        };
        if all.len() < self.ground.gateways {
            return Err(Error::config(
                "ground.gateways",
                format!("{} requested but only {} available", self.ground.gateways, all.len()),
            ));
        }
        let gateways = all.into_iter().take(self.ground.gateways).collect();
        Ok(Scenario {
            constellation: build_constellation(&spec)?,
            num_planes: spec.num_planes,
            sats_per_plane: spec.sats_per_plane,
            gateways,
            topology: TopologyParams {
                walker_kind: spec.walker_kind,
                min_elevation: self.ground.min_elevation_deg.to_radians(),
            },
            channel: self.channel()?,
            traffic: self.traffic_spec(),
        })
    }

    pub fn fingerprint(&self) -> Result<Fingerprint> {
        let spec = self.constellation.spec()?;
        let scen_gw = match &self.ground.file {
            Some(p) => load_gateways(p)?,
            None => default_gateways(),
        };
        Ok(Fingerprint {
            constellation: self.constellation.preset.clone(),
            num_planes: spec.num_planes,
            sats_per_plane: spec.sats_per_plane,
            altitude_km: spec.altitude / 1e3,
            inclination_deg: spec.inclination.to_degrees(),
            gateways: scen_gw.into_iter().take(self.ground.gateways).map(|g| g.name).collect(),
            duration_s: self.duration_s,
        })
    }
}

/// Collects `LEOSIM__A__B=v` pairs as (`a.b`, `v`), sorted by key.
pub fn env_overrides(vars: impl IntoIterator<Item = (String, String)>) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vars
        .into_iter()
        .filter_map(|(k, v)| {
            let rest = k.strip_prefix(ENV_PREFIX)?;
            let key = rest.split("__").map(str::to_lowercase).collect::<Vec<_>>().join(".");
            (!key.is_empty()).then_some((key, v))
        })
        .collect();
    out.sort();
    out
}

/// Splits `key=value`.
pub fn parse_set(arg: &str) -> Result<(String, String)> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| Error::ConfigParse(format!("override `{arg}` is not of the form key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_literal(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_dotted(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::ConfigParse(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::ConfigParse(format!("override `{key}`: `{p}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_literal(raw));
    Ok(())
}
