//! A reduced accuracy-versus-rankers sweep written as CSV to stdout.
//!
//! The `sweep-rankers` command runs the full version.

use multileave::simulator::{summarize, sweep_rankers, SimConfig, Variant};

fn main() -> multileave::Result<()> {
    let base = SimConfig { runs: 4, numeval: 20, numclick: 50, ..SimConfig::default() };
    let rows = sweep_rankers(&base, &Variant::DEFAULT_SET, &[2, 5, 10, 20])?;
    let mut out = csv::Writer::from_writer(std::io::stdout());
    for row in summarize(&rows) {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}
