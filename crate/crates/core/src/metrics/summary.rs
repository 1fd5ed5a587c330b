use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ranking::{average_ranks, critical_difference};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    DelAuc,
    InsAuc,
    Infidelity,
    Sensitivity,
    Continuity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::DelAuc,
        Metric::InsAuc,
        Metric::Infidelity,
        Metric::Sensitivity,
        Metric::Continuity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::DelAuc => "del_auc",
            Metric::InsAuc => "ins_auc",
            Metric::Infidelity => "infidelity",
            Metric::Sensitivity => "sensitivity",
            Metric::Continuity => "continuity",
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            Metric::InsAuc => Direction::HigherBetter,
            _ => Direction::LowerBetter,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown metric '{s}'")))
    }
}

/// One (dataset, method, metric) value with the draw that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub dataset: String,
    pub method: String,
    pub metric: Metric,
    pub value: f64,
    pub seed: u64,
    pub sample_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub subset_size: usize,
    /// What the causal AUCs are computed on, e.g. `probability` or `accuracy`.
    pub curve_basis: String,
    pub cells: Vec<MetricCell>,
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

impl MetricSummary {
    pub fn new(subset_size: usize, curve_basis: impl Into<String>) -> Self {
        MetricSummary {
            subset_size,
            curve_basis: curve_basis.into(),
            cells: Vec::new(),
        }
    }

    pub fn push(&mut self, cell: MetricCell) -> Result<()> {
        if self.get(&cell.dataset, &cell.method, cell.metric).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate cell {}/{}/{}",
                cell.dataset, cell.method, cell.metric
            )));
        }
        self.cells.push(cell);
        Ok(())
    }

    pub fn get(&self, dataset: &str, method: &str, metric: Metric) -> Option<&MetricCell> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.method == method && c.metric == metric)
    }

    /// Datasets in order of first appearance.
    pub fn datasets(&self) -> Vec<String> {
        first_seen(self.cells.iter().map(|c| c.dataset.as_str()))
    }

    /// Methods in order of first appearance.
    pub fn methods(&self) -> Vec<String> {
        first_seen(self.cells.iter().map(|c| c.method.as_str()))
    }

    /// Every (dataset, method) pair lacking `metric`.
    pub fn missing(&self, metric: Metric) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for d in self.datasets() {
            for m in self.methods() {
                if self.get(&d, &m, metric).is_none() {
                    out.push((d.clone(), m));
                }
            }
        }
        out
    }

    /// Dataset-by-method value table for `metric`.
    pub fn table(&self, metric: Metric) -> Result<Vec<Vec<f64>>> {
        let missing = self.missing(metric);
        if !missing.is_empty() {
            let list: Vec<String> = missing.iter().map(|(d, m)| format!("{d}/{m}")).collect();
            return Err(Error::InvalidInput(format!(
                "missing {metric} for {}",
                list.join(", ")
            )));
        }
        let methods = self.methods();
        Ok(self
            .datasets()
            .iter()
            .map(|d| {
                methods
                    .iter()
                    .map(|m| self.get(d, m, metric).map(|c| c.value).unwrap_or(f64::NAN))
                    .collect()
            })
            .collect())
    }

    /// Long-form table, one cell per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("dataset\tmethod\tmetric\tvalue\tseed\tn_samples\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                c.dataset,
                c.method,
                c.metric,
                c.value,
                c.seed,
                c.sample_ids.len()
            ));
        }
        out
    }

    /// One row per dataset with a deletion and insertion column per method.
    pub fn causal_table_tsv(&self) -> String {
        let methods = self.methods();
        let mut out = String::from("dataset");
        for m in &methods {
            out.push_str(&format!("\t{m}_del\t{m}_ins"));
        }
        out.push('\n');
        for d in self.datasets() {
            out.push_str(&d);
            for m in &methods {
                for metric in [Metric::DelAuc, Metric::InsAuc] {
                    match self.get(&d, m, metric) {
                        Some(c) => out.push_str(&format!("\t{}", c.value)),
                        None => out.push_str("\t-"),
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Average rank of each method for one metric, in first-appearance order.
pub fn friedman_ranks(
    summary: &MetricSummary,
    metric: Metric,
    direction: Direction,
) -> Result<Vec<(String, f64)>> {
    let table = summary.table(metric)?;
    let ranks = average_ranks(&table, direction)?;
    Ok(summary.methods().into_iter().zip(ranks).collect())
}

/// Rank table for every metric with the critical difference, or `None`
/// when fewer than two datasets are present.
pub fn rank_report(summary: &MetricSummary, alpha: f64) -> Result<Option<String>> {
    let n = summary.datasets().len();
    let k = summary.methods().len();
    if n < 2 || k < 2 {
        return Ok(None);
    }
    let cd = critical_difference(k, n, alpha)?;
    let mut out = String::from("metric\tmethod\tavg_rank\n");
    for metric in Metric::ALL {
        if summary.cells.iter().all(|c| c.metric != metric) {
            continue;
        }
        for (method, rank) in friedman_ranks(summary, metric, metric.direction())? {
            out.push_str(&format!("{metric}\t{method}\t{rank}\n"));
        }
    }
    out.push_str(&format!("# critical_difference\talpha={alpha}\t{cd}\n"));
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(d: &str, m: &str, metric: Metric, value: f64) -> MetricCell {
        MetricCell {
            dataset: d.into(),
            method: m.into(),
            metric,
            value,
            seed: 1,
            sample_ids: vec![0, 1, 2],
        }
    }

    #[test]
    fn ranks_follow_metric_direction() {
        let mut s = MetricSummary::new(3, "probability");
        for (d, a, b) in [("x", 0.1, 0.2), ("y", 0.1, 0.3), ("z", 0.5, 0.5), ("w", 0.4, 0.2)] {
            s.push(cell(d, "a", Metric::DelAuc, a)).unwrap();
            s.push(cell(d, "b", Metric::DelAuc, b)).unwrap();
            s.push(cell(d, "a", Metric::InsAuc, a)).unwrap();
            s.push(cell(d, "b", Metric::InsAuc, b)).unwrap();
        }
        let del = friedman_ranks(&s, Metric::DelAuc, Metric::DelAuc.direction()).unwrap();
        assert_eq!(del, vec![("a".to_string(), 1.375), ("b".to_string(), 1.625)]);
        let ins = friedman_ranks(&s, Metric::InsAuc, Metric::InsAuc.direction()).unwrap();
        assert_eq!(ins[0].1, 1.625);
        let report = rank_report(&s, 0.05).unwrap().unwrap();
        assert!(report.contains("del_auc\ta\t1.375"));
        assert!(report.contains("critical_difference"));
    }

    #[test]
    fn missing_cells_are_listed() {
        let mut s = MetricSummary::new(1, "probability");
        s.push(cell("x", "a", Metric::Continuity, 0.1)).unwrap();
        s.push(cell("y", "b", Metric::Continuity, 0.2)).unwrap();
        let err = friedman_ranks(&s, Metric::Continuity, Direction::LowerBetter)
            .unwrap_err()
            .to_string();
        assert!(err.contains("x/b") && err.contains("y/a"), "{err}");
        assert!(s.push(cell("x", "a", Metric::Continuity, 0.3)).is_err());
    }

    #[test]
    fn single_dataset_has_no_rank_report() {
        let mut s = MetricSummary::new(1, "probability");
        s.push(cell("x", "a", Metric::DelAuc, 0.1)).unwrap();
        s.push(cell("x", "b", Metric::DelAuc, 0.2)).unwrap();
        assert!(rank_report(&s, 0.05).unwrap().is_none());
    }

    #[test]
    fn causal_table_layout() {
        let mut s = MetricSummary::new(1, "probability");
        s.push(cell("anomaly", "timereise", Metric::DelAuc, 0.25)).unwrap();
        s.push(cell("anomaly", "timereise", Metric::InsAuc, 0.75)).unwrap();
        s.push(cell("anomaly", "occlusion", Metric::DelAuc, 0.5)).unwrap();
        assert_eq!(
            s.causal_table_tsv(),
            "dataset\ttimereise_del\ttimereise_ins\tocclusion_del\tocclusion_ins\n\
             anomaly\t0.25\t0.75\t0.5\t-\n"
        );
        assert_eq!("ins_auc".parse::<Metric>().unwrap(), Metric::InsAuc);
    }
}
