//! Markdown report over one or more evaluated runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use timereise_core::dataio::load_metric_summary;
use timereise_core::metrics::{
    critical_difference, friedman_ranks, rank_report, Metric, MetricSummary,
};

use crate::error::{CliError, CliResult};
use crate::layout::{read_text, remove_if_exists, write_text, RunDir};

/// Concatenates the summaries of several runs; each run contributes its own dataset.
pub fn merge_summaries(runs: &[PathBuf]) -> CliResult<MetricSummary> {
    let mut merged: Option<MetricSummary> = None;
    for run in runs {
        let s = load_metric_summary(RunDir::new(run).eval("summary.trs"))?;
        match &mut merged {
            None => merged = Some(s),
            Some(m) => {
                if m.curve_basis != s.curve_basis {
                    return Err(CliError::Config(format!(
                        "{} uses {} curves, earlier runs use {}",
                        run.display(),
                        s.curve_basis,
                        m.curve_basis
                    )));
                }
                m.subset_size = m.subset_size.min(s.subset_size);
                for cell in s.cells {
                    m.push(cell).map_err(|e| {
                        CliError::Config(format!("cannot merge {}: {e}", run.display()))
                    })?;
                }
            }
        }
    }
    merged.ok_or_else(|| CliError::Config("no runs to report on".into()))
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Renders the report; the second value is the rank table when one exists.
pub fn render_report(
    summary: &MetricSummary,
    alpha: f64,
    notes: &[String],
) -> CliResult<(String, Option<String>)> {
    let datasets = summary.datasets();
    let methods = summary.methods();
    let mut md = String::from("# Attribution report\n\n");
    let _ = writeln!(
        md,
        "{} dataset(s), {} method(s), up to {} samples each, causal AUCs on {} curves.\n",
        datasets.len(),
        methods.len(),
        summary.subset_size,
        summary.curve_basis
    );

    for metric in Metric::ALL {
        if summary.cells.iter().all(|c| c.metric != metric) {
            continue;
        }
        let better = match metric.direction() {
            timereise_core::metrics::Direction::LowerBetter => "lower is better",
            timereise_core::metrics::Direction::HigherBetter => "higher is better",
        };
        let _ = writeln!(md, "## {metric} ({better})\n");
        let _ = writeln!(md, "| dataset | {} |", methods.join(" | "));
        let _ = writeln!(md, "|---|{}", "---|".repeat(methods.len()));
        for d in &datasets {
            let values: Vec<String> = methods
                .iter()
                .map(|m| fmt_value(summary.get(d, m, metric).map(|c| c.value)))
                .collect();
            let _ = writeln!(md, "| {d} | {} |", values.join(" | "));
        }
        md.push('\n');
    }

    let ranks = rank_report(summary, alpha)?;
    if ranks.is_some() {
        let cd = critical_difference(methods.len(), datasets.len(), alpha)?;
        let _ = writeln!(md, "## Average ranks\n");
        let _ = writeln!(
            md,
            "Critical difference at alpha {alpha}: {cd:.4} over {} datasets.\n",
            datasets.len()
        );
        let _ = writeln!(md, "| metric | {} |", methods.join(" | "));
        let _ = writeln!(md, "|---|{}", "---|".repeat(methods.len()));
        for metric in Metric::ALL {
            if summary.cells.iter().all(|c| c.metric != metric) {
                continue;
            }
            let r = friedman_ranks(summary, metric, metric.direction())?;
            let cells: Vec<String> = r.iter().map(|(_, v)| format!("{v:.3}")).collect();
            let _ = writeln!(md, "| {metric} | {} |", cells.join(" | "));
        }
        md.push('\n');
    } else {
        md.push_str("Average ranks need at least two datasets and two methods.\n\n");
    }

    if !notes.is_empty() {
        md.push_str("## Notes\n\n");
        for n in notes {
            let _ = writeln!(md, "- {n}");
        }
    }
    Ok((md, ranks))
}

/// Lines of each run's evaluation log that mention spike localization.
fn localization_notes(runs: &[PathBuf]) -> Vec<String> {
    let mut notes = Vec::new();
    for run in runs {
        let path = RunDir::new(run).log("evaluate");
        if let Ok(text) = read_text(&path) {
            notes.extend(
                text.lines()
                    .filter(|l| l.contains("spike localization"))
                    .map(|l| format!("{}: {l}", run.display())),
            );
        }
    }
    notes
}

/// Writes `report.md`, and `ranks.tsv` when at least two datasets are present,
/// into `out_dir`.
pub fn cmd_report(runs: &[PathBuf], out_dir: &Path, alpha: f64) -> CliResult<String> {
    let summary = merge_summaries(runs)?;
    let (md, ranks) = render_report(&summary, alpha, &localization_notes(runs))?;
    let dir = RunDir::new(out_dir);
    write_text(&dir.report(), &md)?;
    match ranks {
        Some(r) => write_text(&dir.ranks(), &r)?,
        None => remove_if_exists(&dir.ranks())?,
    }
    Ok(md)
}
