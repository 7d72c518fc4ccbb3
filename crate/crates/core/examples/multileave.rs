//! Build a multileaved ranking with team draft and with greedy optimization.

use multileave::multileaver::{bias_profile, normalized_insensitivity};
use multileave::{
    gom_multileave, tdm_multileave, CreditFunction, GomConfig, InputRankingSet, PositionWeight,
};

fn main() -> multileave::Result<()> {
    let inputs = InputRankingSet::from_ids([
        vec![1, 2, 3, 4, 5, 6],
        vec![2, 1, 4, 3, 6, 5],
        vec![6, 5, 4, 3, 2, 1],
    ])?;

    let tdm = tdm_multileave(&inputs, 6, 42)?;
    println!("TDM output {:?}", ids(&tdm.output));
    println!("TDM teams  {:?}", tdm.teams.as_deref().unwrap_or_default());

    for credit in [CreditFunction::Inverse, CreditFunction::Personalization] {
        let cfg = GomConfig { output_length: 6, credit, rng_seed: 42, ..GomConfig::default() };
        let gom = gom_multileave(&inputs, &cfg)?;
        let ins = normalized_insensitivity(&gom.output, &inputs, credit, &PositionWeight::Reciprocal);
        println!(
            "GOM-{} output {:?}  objective {:.4}  sigma2/mu2 {:.4}  candidates {}",
            credit.tag(),
            ids(&gom.output),
            gom.objective_value.unwrap_or_default(),
            ins,
            gom.candidates_evaluated.unwrap_or_default(),
        );
        println!("      bias profile {:?}", bias_profile(&gom.output, &inputs, credit));
    }
    Ok(())
}

fn ids(r: &multileave::Ranking) -> Vec<u64> {
    r.items().iter().map(|i| i.0).collect()
}
