//! Free-space link budget, DVB-S2 MODCOD selection and per-hop latency terms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{EdgeKind, TopologySnapshot};

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
pub const BOLTZMANN: f64 = 1.380_649e-23;

const DEFAULT_MODCOD: &str = include_str!("../data/modcod.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioParams {
    pub eirp_dbw: f64,
    /// Receiver figure of merit G/T, dB/K.
    pub gt_dbk: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
}

impl RadioParams {
    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::config(format!("{field}.bandwidth_hz"), "must be positive"));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(Error::config(format!("{field}.carrier_hz"), "must be positive"));
        }
        if !(self.eirp_dbw.is_finite() && self.gt_dbk.is_finite()) {
            return Err(Error::config(field, "eirp_dbw and gt_dbk must be finite"));
        }
        Ok(())
    }
}

/// Radio parameters per link kind.
///
/// The defaults put nearest-neighbour Kepler ISLs (≈2 200 km) in 16APSK 2/3
/// and adjacent-plane ISLs in QPSK 3/4 – 8PSK 2/3 at epoch 0, with every
/// ground link above the top threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    pub isl: RadioParams,
    pub gsl_up: RadioParams,
    pub gsl_down: RadioParams,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            isl: RadioParams {
                eirp_dbw: 30.0,
                gt_dbk: 14.0,
                carrier_hz: 26e9,
                bandwidth_hz: 40e6,
            },
            gsl_up: RadioParams {
                eirp_dbw: 50.0,
                gt_dbk: 5.0,
                carrier_hz: 30e9,
                bandwidth_hz: 10e6,
            },
            gsl_down: RadioParams {
                eirp_dbw: 30.0,
                gt_dbk: 20.0,
                carrier_hz: 20e9,
                bandwidth_hz: 10e6,
            },
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        self.isl.validate("radio.isl")?;
        self.gsl_up.validate("radio.gsl_up")?;
        self.gsl_down.validate("radio.gsl_down")
    }
}

pub fn free_space_path_loss_db(distance: f64, carrier_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance * carrier_hz / SPEED_OF_LIGHT).log10()
}

/// Signal-to-noise ratio in dB over a free-space link of `distance` meters.
pub fn snr(distance: f64, params: &RadioParams) -> f64 {
    params.eirp_dbw + params.gt_dbk
        - free_space_path_loss_db(distance, params.carrier_hz)
        - 10.0 * (BOLTZMANN * params.bandwidth_hz).log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModcodRow {
    pub name: String,
    pub min_snr_db: f64,
    pub spectral_efficiency: f64,
}

/// MODCOD rows, strictly increasing in threshold and efficiency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModcodTable {
    rows: Vec<ModcodRow>,
}

impl ModcodTable {
    pub fn new(rows: Vec<ModcodRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::config("radio.modcod_file", "table has no rows"));
        }
        for w in rows.windows(2) {
            if !(w[1].min_snr_db > w[0].min_snr_db && w[1].spectral_efficiency > w[0].spectral_efficiency) {
                return Err(Error::config(
                    "radio.modcod_file",
                    format!("rows `{}` and `{}` are not strictly increasing", w[0].name, w[1].name),
                ));
            }
        }
        if rows
            .iter()
            .any(|r| !(r.min_snr_db.is_finite() && r.spectral_efficiency > 0.0))
        {
            return Err(Error::config(
                "radio.modcod_file",
                "thresholds must be finite and efficiencies positive",
            ));
        }
        Ok(ModcodTable { rows })
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ModcodRow>, _>>()?;
        Self::new(rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn dvb_s2_default() -> Self {
        Self::parse_csv(DEFAULT_MODCOD).expect("bundled MODCOD table is valid")
    }

    pub fn rows(&self) -> &[ModcodRow] {
        &self.rows
    }

    /// Highest row whose threshold is at or below `snr_db`.
    pub fn select(&self, snr_db: f64) -> Option<&ModcodRow> {
        let n = self.rows.partition_point(|r| r.min_snr_db <= snr_db);
        n.checked_sub(1).map(|i| &self.rows[i])
    }

    /// Data rate in bits/s; zero below the lowest threshold.
    pub fn data_rate(&self, snr_db: f64, bandwidth_hz: f64) -> f64 {
        self.select(snr_db)
            .map_or(0.0, |row| bandwidth_hz * row.spectral_efficiency)
    }
}

pub fn propagation_time(distance: f64) -> f64 {
    distance / SPEED_OF_LIGHT
}

/// Seconds to serialize `packet_bits` at `rate`; a zero rate is a dead link.
pub fn transmission_time(packet_bits: f64, rate: f64) -> Result<f64> {
    if rate > 0.0 {
        Ok(packet_bits / rate)
    } else {
        Err(Error::DeadLink)
    }
}

#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub table: ModcodTable,
    pub budget: LinkBudget,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            table: ModcodTable::dvb_s2_default(),
            budget: LinkBudget::default(),
        }
    }
}

impl ChannelModel {
    pub fn rate(&self, distance: f64, params: &RadioParams) -> f64 {
        self.table.data_rate(snr(distance, params), params.bandwidth_hz)
    }

    /// Fills in both directional rates of every edge.
    pub fn assign_rates(&self, snapshot: &mut TopologySnapshot) {
        for e in &mut snapshot.edges {
            match e.kind {
                EdgeKind::IslIntra | EdgeKind::IslInter => {
                    let r = self.rate(e.distance, &self.budget.isl);
                    e.rate = r;
                    e.rate_reverse = r;
                }
                EdgeKind::Gsl => {
                    // a is the satellite, b the gateway
                    e.rate = self.rate(e.distance, &self.budget.gsl_down);
                    e.rate_reverse = self.rate(e.distance, &self.budget.gsl_up);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fspl_reference_value() {
        // 20·log10(4π · 2.181e6 · 2.6e10 / c)
        let fspl = free_space_path_loss_db(2_181e3, 26e9);
        assert!((fspl - 187.52).abs() < 0.05, "{fspl}");
    }

    #[test]
    fn doubling_distance_costs_six_db() {
        let p = LinkBudget::default().isl;
        let d = snr(1_000e3, &p) - snr(2_000e3, &p);
        assert!((d - 20.0 * 2f64.log10()).abs() < 1e-9);
        assert!((d - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn rate_boundaries() {
        let t = ModcodTable::dvb_s2_default();
        assert_eq!(t.rows().len(), 8);
        assert_eq!(t.data_rate(-10.0, 1e6), 0.0);
        assert_eq!(t.data_rate(-2.35, 1e6), 1e6 * 0.490243);
        assert_eq!(t.data_rate(f64::INFINITY, 1e6), 1e6 * 4.453027);
        assert_eq!(t.data_rate(f64::NEG_INFINITY, 1e6), 0.0);
    }

    #[test]
    fn table_must_increase() {
        let rows = vec![
            ModcodRow {
                name: "a".into(),
                min_snr_db: 1.0,
                spectral_efficiency: 1.0,
            },
            ModcodRow {
                name: "b".into(),
                min_snr_db: 0.5,
                spectral_efficiency: 2.0,
            },
        ];
        assert!(ModcodTable::new(rows).is_err());
        assert!(ModcodTable::new(vec![]).is_err());
    }

    #[test]
    fn latency_terms() {
        assert_eq!(propagation_time(0.0), 0.0);
        assert!((propagation_time(2_181e3) - 7.275e-3).abs() < 1e-6);
        assert!((propagation_time(600e3) - 2.001e-3).abs() < 1e-6);
        assert!((transmission_time(64_800.0, 100e6).unwrap() - 0.648e-3).abs() < 1e-12);
        assert!(matches!(transmission_time(64_800.0, 0.0), Err(Error::DeadLink)));
    }

    #[test]
    fn kepler_neighbour_isl_lands_mid_table() {
        let ch = ChannelModel::default();
        let s = snr(2_181e3, &ch.budget.isl);
        let row = ch.table.select(s).unwrap();
        assert_eq!(row.name, "16APSK 2/3");
    }

    proptest! {
        #[test]
        fn rate_is_monotone_in_snr(a in -20.0f64..30.0, b in -20.0f64..30.0) {
            let t = ModcodTable::dvb_s2_default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(t.data_rate(lo, 1e6) <= t.data_rate(hi, 1e6));
        }

        #[test]
        fn snr_strictly_decreasing(d in 1.0f64..1e8, k in 1.0001f64..10.0) {
            let p = LinkBudget::default().isl;
            prop_assert!(snr(d * k, &p) < snr(d, &p));
        }

        #[test]
        fn tx_time_linear_in_bits(bits in 1.0f64..1e7, rate in 1.0f64..1e10) {
            let one = transmission_time(bits, rate).unwrap();
            let two = transmission_time(2.0 * bits, rate).unwrap();
            prop_assert!((two - 2.0 * one).abs() <= 1e-12 * two);
        }
    }

    #[test]
    fn step_function_has_len_plus_one_levels() {
        let t = ModcodTable::dvb_s2_default();
        let mut levels: Vec<f64> = (-400..=400)
            .map(|i| t.data_rate(i as f64 * 0.05, 1e6))
            .chain([t.data_rate(f64::NEG_INFINITY, 1e6), t.data_rate(f64::INFINITY, 1e6)])
            .collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        assert_eq!(levels.len(), t.rows().len() + 1);
    }
}
