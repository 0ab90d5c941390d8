//! Train a rank-bin log-likelihood model on runs where relevance
//! concentrates near the top, inspect the learned ratios, and round-trip
//! the model through its text form.
//!
//! Run with: `cargo run --example bayes_training`

use std::collections::BTreeMap;

use bibfuse::fusion::{BayesModel, BayesTrainer, BinSpec};
use bibfuse::trec::{DocId, Qrels, RankedList, Run};

fn main() -> bibfuse::Result<()> {
    // Synthetic training data: 20 topics, 100 documents each. Each topic
    // has 10 relevant documents, placed mostly in the top 20 ranks, so the
    // model should learn positive log ratios for early bins and negative
    // ones deeper down.
    let mut topics = BTreeMap::new();
    let mut judgments: BTreeMap<String, BTreeMap<DocId, u32>> = BTreeMap::new();
    for t in 0..20 {
        let topic = format!("{t:02}");
        let mut entries = Vec::new();
        let mut graded = BTreeMap::new();
        for i in 0..100usize {
            let doc = DocId::new(format!("{topic}-d{i:03}"))?;
            entries.push((doc.clone(), (100 - i) as f64));
            // Ranks 1..=8 and every 11th rank after 20 are relevant; the
            // rest are judged non-relevant.
            let relevant = i < 8 || (i >= 20 && i % 11 == 0);
            graded.insert(doc, u32::from(relevant));
        }
        topics.insert(topic.clone(), RankedList::from_scores(entries)?);
        judgments.insert(topic, graded);
    }
    let run = Run::new("seed-run", topics);
    let qrels = Qrels::from_map(judgments);

    // Bins: exact ranks 1..=10, then decades. The trainer counts judged
    // documents per (bin, class) and smooths each class histogram before
    // taking log ratios; documents a run never ranked land in a dedicated
    // "unranked" bin that gets its own ratio.
    let bins = BinSpec::default_for_depth(100);
    let mut trainer = BayesTrainer::new(bins);
    trainer.observe(&[run], &qrels);
    let model = trainer.train()?;

    println!("rank bin -> log likelihood ratio");
    for (edge, llr) in model.bins().edges().iter().zip(model.bin_llr()) {
        println!("  ..{edge:>4}  {llr:+.3}");
    }
    println!("  unranked {:+.3}", model.unranked_llr());

    // Models serialize to a small text file so a study can archive exactly
    // what it fused with, and reload it later.
    let text = model.to_text();
    let reloaded = BayesModel::from_text(&text)?;
    assert_eq!(model.bin_llr(), reloaded.bin_llr());
    println!("\nmodel text round-trips ({} bytes):\n{text}", text.len());
    Ok(())
}
