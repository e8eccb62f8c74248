//! Prediction quality metrics (Wasserstein / F1 / Jaccard) and the held-out
//! evaluation harness.
//!
//! F1 and Jaccard count exact item matches; the Wasserstein column credits
//! near-misses between substitutable items through the embedding space. For
//! each test customer the last basket is held out as the gold standard and
//! the model predicts from the remaining prefix.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::embeddings::EmbeddingTable;
use crate::types::{Basket, ItemId, PurchaseHistory};
use crate::wasserstein::{exact_wasserstein, PointCloud};
use crate::{Error, Result};

/// Harmonic mean of set precision and recall; 0 when the prediction is empty
/// or disjoint from the truth.
pub fn f1_score(pred: &Basket, truth: &Basket) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    let hits = pred.intersection_size(truth) as f64;
    if pred.is_empty() || hits == 0.0 {
        return Ok(0.0);
    }
    let precision = hits / pred.len() as f64;
    let recall = hits / truth.len() as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Intersection over union of the two baskets.
pub fn jaccard(pred: &Basket, truth: &Basket) -> Result<f64> {
    let union = pred.union_size(truth);
    if union == 0 {
        return Err(Error::BothEmpty);
    }
    Ok(pred.intersection_size(truth) as f64 / union as f64)
}

/// Exact Wasserstein distance between the embedded baskets.
pub fn wasserstein_metric(
    pred: &Basket,
    truth: &Basket,
    table: &EmbeddingTable,
    p: f64,
) -> Result<f64> {
    exact_wasserstein(
        &PointCloud::from_basket(pred, table),
        &PointCloud::from_basket(truth, table),
        p,
    )
}

/// One scored prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub customer: String,
    pub wasserstein: f64,
    pub f1: f64,
    pub jaccard: f64,
    pub pred: Basket,
    pub truth: Basket,
}

/// Per-prediction rows (sorted by customer key) plus their means.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub rows: Vec<EvalRow>,
    pub mean_wasserstein: f64,
    pub mean_f1: f64,
    pub mean_jaccard: f64,
    /// Test histories skipped because they were too short to hold out.
    pub skipped: usize,
}

impl EvalReport {
    /// `customer,wasserstein,f1,jaccard` rows followed by a MEAN row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "customer,wasserstein,f1,jaccard")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                row.customer, row.wasserstein, row.f1, row.jaccard
            )?;
        }
        writeln!(
            w,
            "MEAN,{},{},{}",
            self.mean_wasserstein, self.mean_f1, self.mean_jaccard
        )
    }
}

/// Evaluates `model` on every test history: predict from the prefix, score
/// against the held-out last basket. Histories with fewer than two baskets
/// are skipped (and counted).
pub fn evaluate_model<M>(
    label: &str,
    model: M,
    test: &[PurchaseHistory],
    table: &EmbeddingTable,
    p: f64,
) -> Result<EvalReport>
where
    M: Fn(&PurchaseHistory) -> Result<Basket> + Sync,
{
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let eligible: Vec<&PurchaseHistory> = test.iter().filter(|h| h.len() >= 2).collect();
    let skipped = test.len() - eligible.len();
    if skipped > 0 {
        log::warn!("{label}: skipped {skipped} test histories shorter than 2 baskets");
    }
    if eligible.is_empty() {
        return Err(Error::EmptyTestSet);
    }

    let mut rows = eligible
        .par_iter()
        .map(|history| {
            let query = PurchaseHistory::new(
                history.customer.clone(),
                history.baskets[..history.len() - 1].to_vec(),
            );
            let truth = history.last_basket().expect("len >= 2").clone();
            let pred = model(&query)?;
            Ok(EvalRow {
                customer: history.customer.clone(),
                wasserstein: wasserstein_metric(&pred, &truth, table, p)?,
                f1: f1_score(&pred, &truth)?,
                jaccard: jaccard(&pred, &truth)?,
                pred,
                truth,
            })
        })
        .collect::<Result<Vec<EvalRow>>>()?;
    rows.sort_by(|a, b| a.customer.cmp(&b.customer));

    let n = rows.len() as f64;
    Ok(EvalReport {
        model: label.to_string(),
        mean_wasserstein: rows.iter().map(|r| r.wasserstein).sum::<f64>() / n,
        mean_f1: rows.iter().map(|r| r.f1).sum::<f64>() / n,
        mean_jaccard: rows.iter().map(|r| r.jaccard).sum::<f64>() / n,
        skipped,
        rows,
    })
}

/// Per-category metric means, for reports grouped by a `item -> category`
/// map. Each row restricts both baskets to one category's items; rows whose
/// truth has no item in the category are skipped, and the Wasserstein column
/// additionally requires a non-empty restricted prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryBreakdown {
    pub category: String,
    pub predictions: usize,
    pub mean_wasserstein: Option<f64>,
    pub mean_f1: f64,
    pub mean_jaccard: f64,
}

pub fn category_breakdown(
    rows: &[EvalRow],
    categories: &BTreeMap<ItemId, String>,
    table: &EmbeddingTable,
    p: f64,
) -> Result<Vec<CategoryBreakdown>> {
    let mut names: Vec<&String> = categories.values().collect();
    names.sort();
    names.dedup();

    let mut out = Vec::new();
    for name in names {
        let in_category = |b: &Basket| -> Basket {
            Basket::new(
                b.items()
                    .iter()
                    .copied()
                    .filter(|i| categories.get(i) == Some(name)),
            )
        };
        let mut f1_sum = 0.0;
        let mut jac_sum = 0.0;
        let mut count = 0usize;
        let mut w_sum = 0.0;
        let mut w_count = 0usize;
        for row in rows {
            let truth = in_category(&row.truth);
            if truth.is_empty() {
                continue;
            }
            let pred = in_category(&row.pred);
            f1_sum += f1_score(&pred, &truth)?;
            jac_sum += jaccard(&pred, &truth)?;
            count += 1;
            if !pred.is_empty() {
                w_sum += wasserstein_metric(&pred, &truth, table, p)?;
                w_count += 1;
            }
        }
        if count == 0 {
            continue;
        }
        out.push(CategoryBreakdown {
            category: name.clone(),
            predictions: count,
            mean_wasserstein: (w_count > 0).then(|| w_sum / w_count as f64),
            mean_f1: f1_sum / count as f64,
            mean_jaccard: jac_sum / count as f64,
        });
    }
    Ok(out)
}
