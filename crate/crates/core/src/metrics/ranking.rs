use crate::error::{Error, Result};

use super::Direction;

/// Two-tailed Nemenyi critical values q_alpha for k = 2..=10 methods
/// (studentized range quantile divided by sqrt 2).
const Q_005: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const Q_010: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

/// Ranks one row of scores, 1 = best, ties share their average rank.
pub fn rank_row(values: &[f64], direction: Direction) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| match direction {
        Direction::LowerBetter => values[a].total_cmp(&values[b]),
        Direction::HigherBetter => values[b].total_cmp(&values[a]),
    });
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j are tied; ranks are 1-based.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Average rank of each method (column) across datasets (rows).
pub fn average_ranks(table: &[Vec<f64>], direction: Direction) -> Result<Vec<f64>> {
    let k = table
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidInput("rank table has no datasets".into()))?;
    if k == 0 || table.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidInput("rank table rows must have equal, non-zero length".into()));
    }
    if table.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("rank table contains NaN".into()));
    }
    let mut sums = vec![0.0; k];
    for row in table {
        for (s, r) in sums.iter_mut().zip(rank_row(row, direction)) {
            *s += r;
        }
    }
    let n = table.len() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// Friedman chi-square statistic from average ranks over `n` datasets.
pub fn friedman_statistic(avg_ranks: &[f64], n: usize) -> f64 {
    let k = avg_ranks.len() as f64;
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    12.0 * n as f64 / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0).powi(2) / 4.0)
}

/// Nemenyi q value; `alpha` must be 0.05 or 0.10.
pub fn nemenyi_q(k: usize, alpha: f64) -> Result<f64> {
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &Q_005
    } else if (alpha - 0.10).abs() < 1e-12 {
        &Q_010
    } else {
        return Err(Error::Unsupported(format!("no Nemenyi table for alpha {alpha}")));
    };
    if !(2..=10).contains(&k) {
        return Err(Error::InvalidInput(format!(
            "Nemenyi table covers 2 to 10 methods, got {k}"
        )));
    }
    Ok(table[k - 2])
}

/// Critical difference between average ranks of `k` methods over `n` datasets.
pub fn critical_difference(k: usize, n: usize, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 datasets, got {n}")));
    }
    let q = nemenyi_q(k, alpha)?;
    let k = k as f64;
    Ok(q * (k * (k + 1.0) / (6.0 * n as f64)).sqrt())
}
