use std::fmt::Write as _;

use crate::metrics::{ConsistencyReport, FidelityReport};

/// Fixed-width table of `mean ± std` fidelity, one row per labelled report.
pub fn fidelity_table(rows: &[(String, FidelityReport)]) -> String {
    let width = rows
        .iter()
        .map(|(l, _)| l.len())
        .max()
        .unwrap_or(0)
        .max("dataset".len());
    let mut out = String::new();
    writeln!(out, "{:<width$}  {:>13}  runs", "dataset", "fidelity").unwrap();
    for (label, r) in rows {
        writeln!(
            out,
            "{label:<width$}  {:>6.2} ± {:<4.2}  {}",
            r.mean,
            r.std,
            r.per_run.len()
        )
        .unwrap();
    }
    out
}

/// Fixed-width table of consistency, mean APL and fidelity per labelled report.
pub fn consistency_table(rows: &[(String, ConsistencyReport)]) -> String {
    let width = rows
        .iter()
        .map(|(l, _)| l.len())
        .max()
        .unwrap_or(0)
        .max("dataset".len());
    let mut out = String::new();
    writeln!(
        out,
        "{:<width$}  {:>11}  {:>6}  {:>13}  sessions",
        "dataset", "consistency", "apl", "fidelity"
    )
    .unwrap();
    for (label, r) in rows {
        writeln!(
            out,
            "{label:<width$}  {:>11.2}  {:>6.2}  {:>6.2} ± {:<4.2}  {}",
            r.consistency, r.apl_mean, r.fidelity.mean, r.fidelity.std, r.n_sessions
        )
        .unwrap();
    }
    out
}
