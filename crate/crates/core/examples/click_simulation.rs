//! Simulated accuracy of each method for one setting, plus a single round's trace.

use multileave::simulator::{simulate_accuracy, simulate_round, SimConfig, Variant};

fn main() -> multileave::Result<()> {
    let base = SimConfig { rankers: 6, length: 10, runs: 10, ..SimConfig::default() };
    for variant in Variant::DEFAULT_SET {
        let cfg = variant.apply(&base);
        let res = simulate_accuracy(&cfg)?;
        println!(
            "{:<6} accuracy {:.3} (sd {:.3})  sigma2/mu2 {:.4}  bias {:.4} +/- {:.4}",
            variant.label(),
            res.accuracy,
            res.accuracy_std(),
            res.insensitivity,
            res.bias_mean,
            res.bias_std
        );
    }

    let round = simulate_round(&SimConfig { numclick: 5, ..base }, 2, 0, 0)?;
    println!("one round, ranker 2 preferred: credits {:?}", round.credits.as_slice());
    for c in &round.clicks {
        println!("  click at position {:>2} on item {}", c.position, c.item);
    }
    Ok(())
}
