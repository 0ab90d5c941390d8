//! Rank-biased precision across patience values: the same ranking read by
//! increasingly patient users.
//!
//! Run with: `cargo run --example rbp_patience`

use std::collections::BTreeMap;

use bibfuse::metrics::rbp;
use bibfuse::trec::{DocId, RankedList};

fn main() -> bibfuse::Result<()> {
    // Two rankings of 50 documents with 5 relevant each. "front" puts all
    // relevant documents at ranks 1-5; "spread" scatters them at ranks
    // 1, 10, 20, 30, 40.
    let front_relevant = [0usize, 1, 2, 3, 4];
    let spread_relevant = [0usize, 9, 19, 29, 39];

    let build = |relevant: &[usize]| -> bibfuse::Result<(RankedList, BTreeMap<DocId, u32>)> {
        let mut entries = Vec::new();
        let mut judgments = BTreeMap::new();
        for i in 0..50usize {
            let doc = DocId::new(format!("d{i:02}"))?;
            entries.push((doc.clone(), (50 - i) as f64));
            judgments.insert(doc, u32::from(relevant.contains(&i)));
        }
        Ok((RankedList::from_scores(entries)?, judgments))
    };
    let (front, front_j) = build(&front_relevant)?;
    let (spread, spread_j) = build(&spread_relevant)?;

    // RBP(p) = (1 - p) * sum_i rel_i * p^(i-1): the expected precision seen
    // by a user who moves to the next rank with probability p. Small p is
    // dominated by the first ranks; p near 1 approaches uniform attention
    // down the list, which is where deep re-ranking gains show up.
    println!("p      front   spread  (front - spread)");
    for p in [0.5, 0.8, 0.9, 0.95, 0.99, 0.995] {
        let f = rbp(&front, &front_j, p, 1000);
        let s = rbp(&spread, &spread_j, p, 1000);
        println!("{p:<5}  {f:.4}  {s:.4}  {:+.4}", f - s);
    }

    // The geometric identity: a ranking whose top k are all relevant has
    // RBP exactly 1 - p^k, whatever lies deeper.
    let p = 0.8;
    let k = front_relevant.len() as i32;
    let f = rbp(&front, &front_j, p, 1000);
    println!(
        "\nall-relevant top-{k} at p={p}: rbp={f:.6}, 1-p^{k}={:.6}",
        1.0 - p.powi(k)
    );
    Ok(())
}
