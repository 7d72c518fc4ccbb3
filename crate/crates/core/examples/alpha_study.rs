//! How the bias weight α changes what GOM picks.

use multileave::simulator::{alpha_sensitivity, SimConfig};

fn main() -> multileave::Result<()> {
    let base = SimConfig { runs: 10, ..SimConfig::default() };
    let (table, _) = alpha_sensitivity(&base, &[0.0, 0.1, 1.0, 1000.0])?;
    println!("{:>8} {:>9} {:>11} {:>9}", "alpha", "accuracy", "sigma2/mu2", "bias_std");
    for r in table {
        println!("{:>8} {:>9.4} {:>11.5} {:>9.5}", r.alpha, r.accuracy, r.insensitivity, r.bias_std);
    }
    Ok(())
}
