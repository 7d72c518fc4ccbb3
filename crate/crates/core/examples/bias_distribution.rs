//! Histogram of the bias statistic over repeated GOM-P constructions.

use multileave::simulator::{measure_bias_distribution, SimConfig};

fn main() -> multileave::Result<()> {
    let cfg = SimConfig::default();
    let d = measure_bias_distribution(&cfg, 5_000)?;
    println!(
        "n={} l={}  mean {:.4}  median {:.4}  std {:.4}  bell-shaped {}",
        cfg.rankers,
        cfg.length,
        d.mean,
        d.median,
        d.std,
        d.bell_shaped()
    );

    let (lo, hi) = d.samples.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let bins = 12;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in &d.samples {
        counts[(((s - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let peak = *counts.iter().max().unwrap_or(&1);
    for (i, c) in counts.iter().enumerate() {
        println!("{:.4} {}", lo + width * i as f64, "#".repeat(c * 50 / peak));
    }
    Ok(())
}
