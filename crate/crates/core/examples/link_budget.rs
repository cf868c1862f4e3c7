//! SNR and adaptive coding and modulation rate against slant range.
//!
//! ```bash
//! cargo run --release --example link_budget
//! ```

use leosim::channel::{free_space_path_loss_db, propagation_time, snr, ChannelModel};

fn main() {
    let model = ChannelModel::default();
    let isl = model.budget.isl;
    println!(
        "ISL: EIRP {} dBW, G/T {} dB/K, {} GHz, {} MHz",
        isl.eirp_dbw,
        isl.gt_dbk,
        isl.carrier_hz / 1e9,
        isl.bandwidth_hz / 1e6
    );
    println!(
        "{:>9} {:>9} {:>8} {:>14} {:>11} {:>10}",
        "range km", "FSPL dB", "SNR dB", "MODCOD", "rate Mb/s", "delay ms"
    );
    for km in [500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 4000.0, 5000.0, 6000.0] {
        let d = km * 1e3;
        let snr_db = snr(d, &isl);
        let modcod = model.table.select(snr_db).map_or("none", |r| r.name.as_str());
        println!(
            "{km:>9.0} {:>9.2} {snr_db:>8.2} {modcod:>14} {:>11.2} {:>10.3}",
            free_space_path_loss_db(d, isl.carrier_hz),
            model.rate(d, &isl) / 1e6,
            propagation_time(d) * 1e3
        );
    }
}
