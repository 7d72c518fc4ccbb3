//! Paired multileaving versus unpaired A/B testing on a synthetic population.

use multileave::simulator::population::{compare_pvalues, PopulationConfig};
use multileave::stats::{paired_t_test, unpaired_t_test, BootstrapConfig, TestMode};

fn main() -> multileave::Result<()> {
    let paired = paired_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5])?;
    println!("paired t = {:.4}, df = {}, p = {:.4}", paired.t, paired.df, paired.p_value);
    let welch = unpaired_t_test(&[5.1, 4.9, 5.6, 5.8, 6.0], &[4.2, 4.8, 4.1, 4.4])?;
    println!("welch  t = {:.4}, df = {:.2}, p = {:.4}", welch.t, welch.df, welch.p_value);

    let population = PopulationConfig { users: 10_000, rng_seed: 1, ..PopulationConfig::default() };
    let counts = [50, 100, 200, 500, 1000, 2000, 3000];
    let cmp = compare_pvalues(&population, &counts, &BootstrapConfig { replicates: 20, rng_seed: 1 })?;
    println!("{:>6} {:>13} {:>8}", "users", "multileaving", "A/B");
    for (m, a) in cmp.multileaving.iter().zip(&cmp.ab_test) {
        println!("{:>6} {:>13.4} {:>8.4}", m.users, m.mean_p, a.mean_p);
    }
    println!(
        "first N below 0.05: multileaving {:?}, A/B {:?}",
        cmp.crossing(TestMode::Paired, 0.05),
        cmp.crossing(TestMode::Unpaired, 0.05)
    );
    Ok(())
}
