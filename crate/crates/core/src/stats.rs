//! Run aggregation and rank correlation.
//!
//! Metrics are averaged per (relation, embedding kind) across repeated
//! sub-sampling runs; accuracy scalars are then correlated against
//! graph-level descriptors with Spearman's rho (Pearson on midranks).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::descriptors::DescriptorReport;
use crate::graph::RelationId;
use crate::link_eval::EvalRecord;
use crate::{Error, Result};

/// Average 1-based ranks; tied values share their midrank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut index: Vec<usize> = (0..n).collect();
    index.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("no NaNs in ranks"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[index[j + 1]] == values[index[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average of ranks i+1..=j+1
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &index[i..=j] {
            ranks[idx] = midrank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over midranks. `None` when either
/// variable has no rank variance (undefined, reported as missing).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::DimMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::EmptyInput("spearman needs at least 3 points"));
    }
    let rx = midranks(x);
    let ry = midranks(y);
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mean) * (b - mean);
        var_x += (a - mean) * (a - mean);
        var_y += (b - mean) * (b - mean);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Ok(None);
    }
    Ok(Some(cov / (var_x * var_y).sqrt()))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> MeanSd {
        let (mean, sd) = crate::descriptors::mean_sd(values);
        MeanSd { mean, sd }
    }
}

/// Per-relation averages across runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationAggregate {
    pub rel: RelationId,
    pub n_runs: usize,
    pub f1: MeanSd,
    pub roc_auc: MeanSd,
    pub missing_train_ratio: MeanSd,
    pub missing_test_ratio: MeanSd,
}

/// Aggregates for one embedding kind: per-relation rows plus overall
/// statistics over the per-relation means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    pub per_relation: Vec<RelationAggregate>,
    pub f1: MeanSd,
    pub roc_auc: MeanSd,
    pub missing_train_ratio: MeanSd,
    pub missing_test_ratio: MeanSd,
}

/// Group records by relation, average across runs, then summarize the
/// per-relation means. Order-independent.
pub fn aggregate_runs(records: &[EvalRecord]) -> Aggregate {
    let mut grouped: BTreeMap<RelationId, Vec<&EvalRecord>> = BTreeMap::new();
    for rec in records {
        grouped.entry(rec.rel).or_default().push(rec);
    }
    let mut per_relation = Vec::with_capacity(grouped.len());
    for (rel, recs) in grouped {
        let pull = |f: fn(&EvalRecord) -> f64| -> Vec<f64> { recs.iter().map(|r| f(r)).collect() };
        per_relation.push(RelationAggregate {
            rel,
            n_runs: recs.len(),
            f1: MeanSd::of(&pull(|r| r.f1)),
            roc_auc: MeanSd::of(&pull(|r| r.roc_auc)),
            missing_train_ratio: MeanSd::of(&pull(|r| r.missing_train_ratio)),
            missing_test_ratio: MeanSd::of(&pull(|r| r.missing_test_ratio)),
        });
    }
    let over = |f: fn(&RelationAggregate) -> f64| -> MeanSd {
        MeanSd::of(&per_relation.iter().map(|r| f(r)).collect::<Vec<f64>>())
    };
    Aggregate {
        f1: over(|r| r.f1.mean),
        roc_auc: over(|r| r.roc_auc.mean),
        missing_train_ratio: over(|r| r.missing_train_ratio.mean),
        missing_test_ratio: over(|r| r.missing_test_ratio.mean),
        per_relation,
    }
}

/// The five graph-level descriptor scalars used as correlation columns.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DescriptorVector {
    pub frob_s: f64,
    pub frob_s_prime: f64,
    pub total_positives: f64,
    pub mu_mean: f64,
    pub z_mean: f64,
}

impl DescriptorVector {
    pub fn from_report(report: &DescriptorReport) -> DescriptorVector {
        DescriptorVector {
            frob_s: report.frob_s,
            frob_s_prime: report.frob_s_prime,
            total_positives: report.triples as f64,
            mu_mean: report.mu_mean,
            z_mean: report.z_mean,
        }
    }

    pub const COLUMNS: [&'static str; 5] = [
        "frob_s",
        "frob_s_prime",
        "total_positives",
        "mu_mean",
        "z_mean",
    ];

    fn column(&self, i: usize) -> f64 {
        match i {
            0 => self.frob_s,
            1 => self.frob_s_prime,
            2 => self.total_positives,
            3 => self.mu_mean,
            _ => self.z_mean,
        }
    }
}

/// One accuracy observation attached to its graph's descriptors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub metric: String,
    pub value: f64,
    pub descriptors: DescriptorVector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub metric: String,
    pub n_points: usize,
    /// Spearman rho per descriptor column; missing when undefined.
    pub rho: Vec<Option<f64>>,
}

/// Spearman of each metric against each descriptor column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub descriptors: Vec<String>,
    pub rows: Vec<CorrelationRow>,
}

pub fn correlation_report(points: &[CorrelationPoint]) -> CorrelationReport {
    let mut grouped: BTreeMap<&str, Vec<&CorrelationPoint>> = BTreeMap::new();
    for p in points {
        grouped.entry(&p.metric).or_default().push(p);
    }
    let mut rows = Vec::with_capacity(grouped.len());
    for (metric, pts) in grouped {
        let values: Vec<f64> = pts.iter().map(|p| p.value).collect();
        let rho = (0..DescriptorVector::COLUMNS.len())
            .map(|col| {
                let xs: Vec<f64> = pts.iter().map(|p| p.descriptors.column(col)).collect();
                match spearman(&xs, &values) {
                    Ok(r) => r,
                    Err(_) => None,
                }
            })
            .collect();
        rows.push(CorrelationRow {
            metric: metric.to_owned(),
            n_points: pts.len(),
            rho,
        });
    }
    CorrelationReport {
        descriptors: DescriptorVector::COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

impl CorrelationReport {
    /// Wide CSV: one row per metric, one column per descriptor; undefined
    /// correlations stay empty.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["metric".to_owned(), "n_points".to_owned()];
        header.extend(self.descriptors.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.metric.clone(), row.n_points.to_string()];
            for rho in &row.rho {
                record.push(rho.map(|v| format!("{v}")).unwrap_or_default());
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}
