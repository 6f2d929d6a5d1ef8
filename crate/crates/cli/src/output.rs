//! CSV and summary rendering.

use std::io::Write;

use freeutil::verify::SuiteReport;

use crate::error::CliError;
use crate::runner::ResultRow;

pub const CSV_COLUMNS: [&str; 7] = ["experiment_id", "kind", "alpha", "seed", "metric", "value", "wall_ms"];

/// Shortest round-tripping decimal; infinities as `inf` / `-inf`.
pub fn format_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

/// Writes the result rows. Without `timing`, `wall_ms` is written as 0 so repeated
/// runs produce identical bytes.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W, timing: bool) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        let seed = r.seed.to_string();
        let alpha = r.alpha.map(format_float).unwrap_or_default();
        let value = format_float(r.value);
        let wall = if timing { format!("{:.3}", r.wall_ms) } else { "0".into() };
        w.write_record([
            r.experiment_id.as_str(),
            r.kind.as_str(),
            &alpha,
            &seed,
            &r.metric,
            &value,
            &wall,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = line(header.to_vec());
    s += &line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for row in rows {
        s += &line(row.iter().map(String::as_str).collect());
    }
    s
}

/// Aligned table of the rows, one line per (alpha, seed) cell and one column per metric.
pub fn summary(rows: &[ResultRow]) -> String {
    let mut metrics: Vec<&str> = rows.iter().map(|r| r.metric.as_str()).collect();
    metrics.sort_unstable();
    metrics.dedup();
    let mut header = vec!["experiment_id", "alpha", "seed"];
    header.extend(&metrics);
    let mut lines: Vec<Vec<String>> = Vec::new();
    let mut key = None;
    for r in rows {
        let k = (r.experiment_id.clone(), r.alpha.map(f64::to_bits), r.seed);
        if key.as_ref() != Some(&k) {
            let mut line = vec![
                r.experiment_id.clone(),
                r.alpha.map(format_float).unwrap_or_else(|| "-".into()),
                r.seed.to_string(),
            ];
            line.resize(3 + metrics.len(), String::new());
            lines.push(line);
            key = Some(k);
        }
        let col = 3 + metrics.iter().position(|m| *m == r.metric).expect("metric listed");
        lines.last_mut().expect("line pushed")[col] = format!("{:.6}", r.value);
    }
    table(&header, &lines)
}

/// Per-suite verification report with tolerances and runtimes.
pub fn verify_report(reports: &[SuiteReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.suite.name().to_string(),
                format!("{:.3e}", r.max_violation),
                format!("{:.1e}", r.tolerance),
                format!("{:.1}", r.runtime.as_secs_f64() * 1e3),
                if r.passed() { "PASS" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let mut s = table(&["suite", "max_violation", "tolerance", "runtime_ms", "status"], &rows);
    s += &format!("{} suite runs, {failed} failed\n", reports.len());
    s
}
