//! Walker constellation geometry: periods, presets and a short ground track.
//!
//! ```bash
//! cargo run --release --example orbit_walker
//! ```

use leosim::orbit::{build_constellation, orbital_period, positions_at, Preset};

fn main() -> leosim::Result<()> {
    println!(
        "{:<14} {:>6} {:>6} {:>9} {:>10}",
        "preset", "planes", "sats", "alt (km)", "period"
    );
    for preset in Preset::ALL {
        let spec = preset.spec();
        println!(
            "{:<14} {:>6} {:>6} {:>9.0} {:>7.2} min",
            preset.name(),
            spec.num_planes,
            spec.num_satellites(),
            spec.altitude / 1e3,
            orbital_period(spec.altitude) / 60.0
        );
    }

    let kepler = build_constellation(&Preset::Kepler.spec())?;
    println!("\nground track of satellite (0, 0), Earth-fixed frame:");
    for minute in (0..=100).step_by(10) {
        let states = positions_at(&kepler, minute as f64 * 60.0);
        let (lat, lon) = states[0].position.lat_lon();
        println!(
            "  t = {minute:>3} min  lat {:>7.2}  lon {:>8.2}",
            lat.to_degrees(),
            lon.to_degrees()
        );
    }
    Ok(())
}
