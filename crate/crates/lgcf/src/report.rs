//! Metric report rendering: a human-readable table plus machine-readable
//! `key=value` lines with keys `recall@{K}` and `ndcg@{K}`.

use lgcf_core::eval::EvalReport;
use std::fmt::Write;

/// One `metric@K=value` line per cutoff and metric, fixed six-decimal
/// formatting so identical runs emit identical bytes.
pub fn machine_lines(report: &EvalReport) -> String {
    let mut out = String::new();
    for (slot, k) in report.cutoffs.iter().enumerate() {
        writeln!(out, "recall@{k}={:.6}", report.recall[slot]).unwrap();
    }
    for (slot, k) in report.cutoffs.iter().enumerate() {
        writeln!(out, "ndcg@{k}={:.6}", report.ndcg[slot]).unwrap();
    }
    out
}

pub fn human_table(report: &EvalReport) -> String {
    let mut out = String::new();
    writeln!(out, "{:<10} {:>10} {:>10}", "cutoff", "recall", "ndcg").unwrap();
    for (slot, k) in report.cutoffs.iter().enumerate() {
        writeln!(
            out,
            "{:<10} {:>10.6} {:>10.6}",
            format!("@{k}"),
            report.recall[slot],
            report.ndcg[slot]
        )
        .unwrap();
    }
    writeln!(out, "evaluable users: {}", report.evaluable_users).unwrap();
    out
}

/// CSV header + rows for a dimensionality sweep: `dim` column followed by
/// one column per metric key.
pub fn sweep_csv(cutoffs: &[usize], rows: &[(usize, EvalReport)]) -> String {
    let mut out = String::from("dim");
    for k in cutoffs {
        write!(out, ",recall@{k}").unwrap();
    }
    for k in cutoffs {
        write!(out, ",ndcg@{k}").unwrap();
    }
    out.push('\n');
    for (dim, report) in rows {
        write!(out, "{dim}").unwrap();
        let slot = |k: &usize| report.cutoffs.iter().position(|c| c == k).unwrap();
        for k in cutoffs {
            write!(out, ",{:.6}", report.recall[slot(k)]).unwrap();
        }
        for k in cutoffs {
            write!(out, ",{:.6}", report.ndcg[slot(k)]).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> EvalReport {
        EvalReport {
            cutoffs: vec![10, 20],
            recall: vec![0.25, 0.5],
            ndcg: vec![0.125, 0.1875],
            evaluable_users: 4,
            per_user: Vec::new(),
        }
    }

    #[test]
    fn machine_lines_emit_one_key_per_metric() {
        let lines = machine_lines(&report());
        assert_eq!(
            lines,
            "recall@10=0.250000\nrecall@20=0.500000\nndcg@10=0.125000\nndcg@20=0.187500\n"
        );
    }

    #[test]
    fn sweep_csv_has_dim_then_metric_columns() {
        let csv = sweep_csv(&[10], &[(8, report()), (16, report())]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "dim,recall@10,ndcg@10");
        assert_eq!(lines.next().unwrap(), "8,0.250000,0.125000");
        assert_eq!(lines.next().unwrap(), "16,0.250000,0.125000");
    }
}
