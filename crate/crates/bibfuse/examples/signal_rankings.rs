//! Load a per-document signal table, check signal coverage over the judged
//! documents, and rank one topic's judged pool by each signal.
//!
//! Run with: `cargo run --example signal_rankings`

use bibfuse::biblio::{
    candidate_pool, load_biblio_table, signal_coverage, signal_ranking, ColumnMap, PoolPolicy,
    Signal,
};
use bibfuse::trec::parse_qrels;

fn main() -> bibfuse::Result<()> {
    // The table is delimited text with one row per document. Empty cells
    // mean "value unknown" — unknown values are omitted from rankings, never
    // imputed. research_level runs 1..=4 with 4 ranked first (basic research
    // before clinical observation).
    let table_text = "\
pmid,citations,altmetric,pub_year,research_level,impact_factor
p1,210,55.0,2015,2,11.2
p2,40,,2019,1,3.5
p3,40,12.5,2018,4,
p4,7,1.0,2011,3,0.9
p5,,8.8,2020,,28.1
";
    let qrels_text = "\
301 0 p1 2
301 0 p2 0
301 0 p3 1
301 0 p4 0
301 0 p5 1
";

    let table = load_biblio_table(table_text.as_bytes(), &ColumnMap::default(), b',')?;
    let qrels = parse_qrels(qrels_text.as_bytes())?;

    // Coverage: how many judged documents actually carry each signal. On
    // real collections this is the first thing to check — a signal that
    // covers half the pool can only ever rank half the pool.
    println!("coverage over {} judged documents:", 5);
    for row in signal_coverage(&qrels, &table) {
        println!(
            "  {}  {}/{}  ({:.0}%)",
            row.signal.letter(),
            row.count,
            5,
            row.fraction * 100.0
        );
    }

    // The judged pool for topic 301 is its judged documents; the run pool
    // policy would instead take the documents some baseline run retrieved.
    let pool = candidate_pool(PoolPolicy::Judged, "301", &qrels, None)?;
    println!("\nper-signal rankings of topic 301 (missing values drop out):");
    for signal in Signal::ALL {
        let ranking = signal_ranking(signal, &pool, &table)?;
        let order: Vec<String> = ranking
            .iter()
            .map(|(doc, score)| format!("{doc}({score})"))
            .collect();
        println!("  {}  {}", signal.letter(), order.join(" > "));
    }
    Ok(())
}
