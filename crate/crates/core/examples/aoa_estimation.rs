//! Static-beacon AoA error statistics in open space, off-plane and beside a
//! wall, with the unsmoothed estimator alongside for comparison.
//!
//! cargo run --release --example aoa_estimation

use leash::cli_runner::{run_aoa_trial, AoaTrialConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let open = AoaTrialConfig::default();
    let raised = AoaTrialConfig { elevation: 0.4, ..open.clone() };
    let wall = AoaTrialConfig {
        wall_offset: Some(0.5),
        bearings: (0..12).map(|k| (15.0 + k as f64 * 150.0 / 11.0).to_radians()).collect(),
        ..open.clone()
    };
    println!("{:<12} {:>8} {:>8} {:>14} {:>12}", "case", "mean", "std", "mean(no smooth)", "std(no smooth)");
    for (name, cfg) in [("open", open), ("off-plane", raised), ("near wall", wall)] {
        let r = run_aoa_trial(&cfg)?;
        println!(
            "{:<12} {:>7.2}° {:>7.2}° {:>14.2}° {:>11.2}°",
            name, r.mean_abs_deg, r.std_deg, r.unsmoothed_mean_abs_deg, r.unsmoothed_std_deg
        );
    }
    Ok(())
}
