//! Parse a run and judgments from text, evaluate the standard battery, and
//! print per-topic and averaged scores.
//!
//! Run with: `cargo run --example parse_and_evaluate`

use bibfuse::metrics::{evaluate_run, Gain, Metric};
use bibfuse::trec::{parse_qrels, parse_run};

fn main() -> bibfuse::Result<()> {
    // A run file: `topic Q0 doc rank score tag`. Ordering is defined by the
    // scores (ties broken by ascending doc id); the rank column is ignored
    // and renumbered on output.
    let run_text = "\
1 Q0 doc-c 1 9.5 demo
1 Q0 doc-a 2 8.0 demo
1 Q0 doc-x 3 4.2 demo
1 Q0 doc-b 4 2.0 demo
2 Q0 doc-k 1 3.3 demo
2 Q0 doc-a 2 2.1 demo
2 Q0 doc-m 3 0.7 demo
";
    // Judgments: `topic 0 doc grade`, graded 0..=2 and binarized at
    // grade >= 1 for the binary metrics.
    let qrels_text = "\
1 0 doc-a 2
1 0 doc-b 1
1 0 doc-c 0
1 0 doc-x 0
2 0 doc-a 1
2 0 doc-k 2
2 0 doc-z 1
";

    let run = parse_run(run_text.as_bytes(), 1000)?;
    let qrels = parse_qrels(qrels_text.as_bytes())?;
    println!(
        "run {:?}: {} topics; qrels: {} topics, {} judgments\n",
        run.tag(),
        run.n_topics(),
        qrels.n_topics(),
        qrels.n_judgments()
    );

    let battery = [
        Metric::Recall { cutoff: 1000 },
        Metric::Ndcg { cutoff: 1000, gain: Gain::Linear },
        Metric::AveragePrecision { cutoff: 1000 },
        Metric::Precision { cutoff: 10 },
        Metric::Bpref { cutoff: 1000 },
        Metric::Rbp { p: 0.8, depth: 1000 },
    ];
    let report = evaluate_run(&run, &qrels, &battery)?;

    // Per-topic values. Topic 2 never retrieved doc-z, which caps its
    // recall at 2/3 and feeds the average-precision denominator.
    for topic in report.topics() {
        print!("topic {topic}:");
        for metric in &battery {
            if let Some(v) = report.topic_value(topic, &metric.label()) {
                print!("  {}={v:.4}", metric.label());
            }
        }
        println!();
    }

    // Macro averages over the evaluated topics. Topics without any relevant
    // document would be excluded from every average rather than scored 0.
    println!();
    for (label, value) in report.aggregates() {
        println!("mean {label} = {value:.4}");
    }
    Ok(())
}
