//! Enumerate signal subsets, fuse each subset's rankings with RRF over the
//! judged pool, and tabulate which combinations help which metric.
//!
//! Run with: `cargo run --example subset_sweep`

use std::collections::BTreeMap;

use bibfuse::biblio::{
    candidate_pool, load_biblio_table, signal_ranking, ColumnMap, PoolPolicy, SignalSet,
};
use bibfuse::fusion::{fuse, FusionInput, FusionMethod};
use bibfuse::metrics::{evaluate_run, Gain, Metric};
use bibfuse::trec::{parse_qrels, RankedList, Run};

fn main() -> bibfuse::Result<()> {
    // Eight judged documents on one topic. Citations roughly track
    // relevance, publication year is mildly informative, altmetric is
    // noise — so subsets containing C should do well, and adding P should
    // help more than adding A.
    let table_text = "\
pmid,citations,altmetric,pub_year,research_level,impact_factor
d1,95,2.0,2019,2,4.0
d2,80,9.0,2018,1,3.0
d3,70,1.0,2019,3,6.0
d4,40,8.0,2012,2,2.0
d5,30,7.5,2013,4,1.0
d6,20,0.5,2011,1,5.0
d7,10,6.0,2010,3,0.5
d8,5,3.0,2009,2,0.2
";
    let qrels_text = "\
7 0 d1 2
7 0 d2 1
7 0 d3 1
7 0 d4 0
7 0 d5 0
7 0 d6 0
7 0 d7 0
7 0 d8 0
";
    let table = load_biblio_table(table_text.as_bytes(), &ColumnMap::default(), b',')?;
    let qrels = parse_qrels(qrels_text.as_bytes())?;
    let pool = candidate_pool(PoolPolicy::Judged, "7", &qrels, None)?;

    let battery = [
        Metric::Recall { cutoff: 1000 },
        Metric::Ndcg { cutoff: 1000, gain: Gain::Linear },
        Metric::Precision { cutoff: 3 },
    ];
    let method = FusionMethod::Rrf { k: 60.0 };

    // Subsets of three signals: C, A, CA, P, CP, AP, CAP — the binary
    // counter order the full five-signal sweep also uses.
    let signals: SignalSet = "CAP".parse()?;
    println!("subset  recall  ndcg    p@3");
    for subset in signals.subsets() {
        let lists: Vec<RankedList> = subset
            .members()
            .iter()
            .map(|&s| signal_ranking(s, &pool, &table))
            .collect::<bibfuse::Result<_>>()?;
        let fused = fuse(&method, &FusionInput::new(lists)?)?;
        let run = Run::new(
            subset.to_string(),
            BTreeMap::from([("7".to_string(), fused)]),
        );
        let report = evaluate_run(&run, &qrels, &battery)?;
        println!(
            "{:6}  {:.4}  {:.4}  {:.4}",
            subset.to_string(),
            report.aggregate("recall@1000").unwrap(),
            report.aggregate("ndcg@1000").unwrap(),
            report.aggregate("p@3").unwrap(),
        );
    }
    Ok(())
}
