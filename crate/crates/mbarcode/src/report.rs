//! CSV output. Every real number is printed with six decimals so that
//! outputs diff cleanly.

use std::io::{self, Write};

use mbarcode_core::retrieval::{Evaluation, SweepParameter, SweepRow};
use mbarcode_core::RankedResult;

/// `query_id,rank,clip_id,score,is_relevant`, ranks starting at 1.
pub fn write_results(out: &mut (impl Write + ?Sized), results: &[RankedResult]) -> io::Result<()> {
    writeln!(out, "query_id,rank,clip_id,score,is_relevant")?;
    for r in results {
        for (rank, (clip, score)) in r.ranking.iter().enumerate() {
            let relevant = r.relevant_ids.contains(clip) as u8;
            writeln!(
                out,
                "{},{},{clip},{score:.6},{relevant}",
                r.query_id,
                rank + 1
            )?;
        }
    }
    Ok(())
}

/// A single ranking without ground truth: `query_id,rank,clip_id,score`.
pub fn write_ranking(
    out: &mut (impl Write + ?Sized),
    query_id: &str,
    ranking: &[(String, f64)],
) -> io::Result<()> {
    writeln!(out, "query_id,rank,clip_id,score")?;
    for (rank, (clip, score)) in ranking.iter().enumerate() {
        writeln!(out, "{query_id},{},{clip},{score:.6}", rank + 1)?;
    }
    Ok(())
}

/// `query_id,ap` per query, closed by `mean_ap,<value>`.
pub fn write_summary(out: &mut (impl Write + ?Sized), eval: &Evaluation) -> io::Result<()> {
    writeln!(out, "query_id,ap")?;
    for r in &eval.results {
        writeln!(out, "{},{:.6}", r.query_id, r.average_precision)?;
    }
    writeln!(out, "mean_ap,{:.6}", eval.mean_ap)
}

pub fn write_sweep(
    out: &mut (impl Write + ?Sized),
    parameter: SweepParameter,
    rows: &[SweepRow],
) -> io::Result<()> {
    writeln!(out, "{parameter},mean_ap")?;
    for row in rows {
        writeln!(out, "{:.6},{:.6}", row.value, row.mean_ap)?;
    }
    Ok(())
}
