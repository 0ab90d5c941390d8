//! Fuse two ranked lists with each available method and compare the
//! resulting orderings.
//!
//! Run with: `cargo run --example fusion_methods`

use std::collections::BTreeMap;

use bibfuse::fusion::{fuse, train_bayes, BinSpec, FusionInput, FusionMethod};
use bibfuse::trec::{DocId, Qrels, RankedList, Run};

fn list(pairs: &[(&str, f64)]) -> bibfuse::Result<RankedList> {
    RankedList::from_scores(
        pairs
            .iter()
            .map(|(d, s)| Ok((DocId::new(*d)?, *s)))
            .collect::<bibfuse::Result<_>>()?,
    )
}

fn main() -> bibfuse::Result<()> {
    // Two retrieval lists over an overlapping document set. Scores are on
    // different scales on purpose: rank-based methods ignore that, while
    // score-based methods rely on min-max normalization to bridge it.
    let lexical = list(&[("d1", 14.2), ("d2", 11.0), ("d3", 10.1), ("d4", 2.4)])?;
    let semantic = list(&[("d3", 0.93), ("d5", 0.90), ("d1", 0.72), ("d2", 0.11)])?;

    // The log-likelihood method needs a trained model relating rank position
    // to relevance. Train one on a toy run where the top ranks are relevant
    // and two judged non-relevant documents were never ranked at all — that
    // teaches the model a negative ratio for the "unranked" bin too.
    let training_run = Run::new(
        "train",
        BTreeMap::from([("t1".to_string(), list(&[
            ("r1", 5.0), // relevant
            ("r2", 4.0), // relevant
            ("n1", 3.0),
        ])?)]),
    );
    let mut judgments = BTreeMap::new();
    judgments.insert(
        "t1".to_string(),
        BTreeMap::from([
            (DocId::new("r1")?, 2u32),
            (DocId::new("r2")?, 1),
            (DocId::new("n1")?, 0),
            (DocId::new("n2")?, 0), // judged, never ranked
            (DocId::new("n3")?, 0), // judged, never ranked
        ]),
    );
    let model = train_bayes(
        &[training_run],
        &Qrels::from_map(judgments),
        BinSpec::new(vec![2, 5])?,
    )?;

    let methods = [
        FusionMethod::Rrf { k: 60.0 },
        FusionMethod::Borda,
        FusionMethod::Bayes { model },
        FusionMethod::Wmnz { normalize: true },
        FusionMethod::CombMnz { normalize: true },
    ];

    let input = FusionInput::new(vec![lexical.clone(), semantic.clone()])?;
    println!("lexical : {}", order(&lexical));
    println!("semantic: {}", order(&semantic));
    println!();
    for method in &methods {
        let fused = fuse(method, &input)?;
        println!("{:8}: {}", method.name(), order(&fused));
    }

    // Weighted variant: weights follow the list order. Doubling the weight
    // of the semantic list pulls its favorites up under wmnz; rank-based
    // methods are unaffected by weights.
    let weighted = FusionInput::with_weights(vec![lexical, semantic], vec![1.0, 2.0])?;
    let fused = fuse(&FusionMethod::Wmnz { normalize: true }, &weighted)?;
    println!("\nwmnz with semantic weight 2: {}", order(&fused));
    Ok(())
}

fn order(l: &RankedList) -> String {
    l.docs()
        .map(|d| d.as_str())
        .collect::<Vec<_>>()
        .join(" > ")
}
