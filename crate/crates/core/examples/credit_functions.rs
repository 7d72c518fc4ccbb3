//! Credit a click on item 101 under each credit function.
//!
//! Three rankers agree on the first 99 items and order the last three
//! differently, so only the tail decides the credit.

use multileave::{CreditFunction, InputRankingSet, ItemId};

fn main() -> multileave::Result<()> {
    let with = |tail: [u64; 3]| (1..=99).chain(tail).collect::<Vec<u64>>();
    let inputs = InputRankingSet::from_ids([with([100, 101, 102]), with([101, 102, 100]), with([102, 100, 101])])?;
    let clicked = ItemId(101);

    for credit in CreditFunction::ALL {
        let deltas: Vec<String> =
            (0..inputs.len()).map(|j| format!("{:.6}", credit.credit(clicked, j, &inputs))).collect();
        println!("{:<16} {}", credit.name(), deltas.join("  "));
    }

    // An item no ranker returned gets the absent-item credit.
    let missing = ItemId(500);
    println!("absent item, inverse credit: {:.6}", CreditFunction::Inverse.credit(missing, 0, &inputs));
    Ok(())
}
