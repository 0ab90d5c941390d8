//! Paired Fisher randomization on per-topic scores: exact enumeration for
//! small topic sets, Monte-Carlo beyond, and the improvement summary used
//! for whole-collection studies.
//!
//! Run with: `cargo run --example significance_testing`

use bibfuse::stats::{
    fisher_randomization, fisher_randomization_exact, fisher_randomization_mc,
    summarize_improvements, PairedScores, SystemOutcome,
};

fn main() -> bibfuse::Result<()> {
    // Per-topic nDCG for a baseline and a re-ranked variant of the same
    // system. The treatment wins on most topics, but with 12 topics the
    // evidence is worth testing, not assuming.
    let topics: Vec<String> = (1..=12).map(|t| t.to_string()).collect();
    let baseline = vec![
        0.42, 0.55, 0.31, 0.64, 0.50, 0.47, 0.38, 0.61, 0.45, 0.52, 0.33, 0.58,
    ];
    let treatment = vec![
        0.49, 0.60, 0.30, 0.69, 0.55, 0.52, 0.37, 0.66, 0.50, 0.57, 0.39, 0.63,
    ];
    let pair = PairedScores::new(topics, baseline, treatment)?;
    println!("mean delta = {:+.4}", pair.mean_delta());

    // 12 topics -> 2^12 sign patterns, cheap to enumerate exactly. The
    // automatic front door does exactly that below the enumeration limit.
    let p_auto = fisher_randomization(&pair, 10_000, 42)?;
    let p_exact = fisher_randomization_exact(&pair.diffs())?;
    println!("p (auto)  = {p_auto:.6}");
    println!("p (exact) = {p_exact:.6}");
    assert_eq!(p_auto, p_exact);

    // Monte-Carlo with the add-one estimate (hits+1)/(iterations+1)
    // converges to the exact answer as iterations grow.
    for iterations in [100, 10_000, 1_000_000] {
        let p_mc = fisher_randomization_mc(&pair.diffs(), iterations, 42);
        println!("p (mc, {iterations:>9} iter) = {p_mc:.6}");
    }

    // Study-level view: one outcome per system, summarized at alpha = 0.05.
    // "improved" counts strictly positive deltas; "significant" counts
    // p <= alpha regardless of direction.
    let outcomes = vec![
        SystemOutcome { tag: "sysA".into(), delta: 0.041, p_value: 0.002 },
        SystemOutcome { tag: "sysB".into(), delta: 0.013, p_value: 0.210 },
        SystemOutcome { tag: "sysC".into(), delta: -0.008, p_value: 0.470 },
        SystemOutcome { tag: "sysD".into(), delta: 0.068, p_value: 0.001 },
    ];
    let summary = summarize_improvements(&outcomes, 0.05);
    println!(
        "\n{}/{} improved, {} significant, avg significant improvement {:+.4}, overall {:+.4}",
        summary.n_improved,
        summary.n_systems,
        summary.n_significant,
        summary.avg_improvement_significant,
        summary.overall_change
    );
    Ok(())
}
