//! kNN-SDTW neighbor search over the customer base, assembly of the
//! predicted basket from successor baskets, and the tau-gated fallback.
//!
//! Every candidate history is matched over its prefix `B_d[0..m_d-1]` so the
//! basket after the matched subsequence always exists. The scan keeps the k
//! best matches; two optimizations accelerate it without changing any result:
//!
//! - candidate-level early abandoning: a candidate whose partial DTW rows
//!   already exceed the current k-th best distance is dropped;
//! - cell-level lower-bound pruning: before solving the exact transport
//!   problem for a basket pair, the cheap `LB*` bound is compared against the
//!   largest cost any winning warping path could still afford.

use std::sync::Mutex;

use rayon::prelude::*;

use crate::baselines::FrequencyTable;
use crate::embeddings::EmbeddingTable;
use crate::sdtw::{sdtw_match_with, BasketCosts, CellCost};
use crate::types::{Basket, ItemId, PredictionConfig, PurchaseHistory};
use crate::wasserstein::{lower_bound_star_from_costs, solve_from_costs};
use crate::{Error, Result};

/// One matched neighbor: a customer, the matched subsequence of their
/// history (0-based, inclusive), and its SDTW distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborMatch {
    pub customer_index: usize,
    pub start: usize,
    pub end: usize,
    pub distance: f64,
}

/// How a prediction was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionSource {
    Neighbors,
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub basket: Basket,
    pub source: PredictionSource,
    pub mean_neighbor_distance: f64,
}

/// Search-time switches; pruning defaults on and never changes results.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub prune: bool,
    pub parallel: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            prune: true,
            parallel: true,
        }
    }
}

/// Counters describing how much work the lower bounds saved.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchStats {
    /// Candidate histories scanned.
    pub candidates: u64,
    /// Candidates dropped by early abandoning before their last DP row.
    pub abandoned: u64,
    /// Basket-pair cost evaluations requested by the DP.
    pub cells: u64,
    /// Cells where `LB*` alone ruled the pair out (no exact solve).
    pub lb_pruned: u64,
    /// Cells where the exact transport problem was solved.
    pub exact_solves: u64,
}

impl SearchStats {
    fn merge(&mut self, other: &SearchStats) {
        self.candidates += other.candidates;
        self.abandoned += other.abandoned;
        self.cells += other.cells;
        self.lb_pruned += other.lb_pruned;
        self.exact_solves += other.exact_solves;
    }

    /// Fraction of requested cost evaluations answered by the lower bound.
    pub fn hitrate(&self) -> f64 {
        let total = self.lb_pruned + self.exact_solves;
        if total == 0 {
            0.0
        } else {
            self.lb_pruned as f64 / total as f64
        }
    }
}

/// Ascending top-k accumulator ordered by (distance, customer index).
struct TopK {
    k: usize,
    matches: Vec<NeighborMatch>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            matches: Vec::with_capacity(k + 1),
        }
    }

    /// Current k-th best distance, or infinity while not yet full.
    fn bound(&self) -> f64 {
        if self.matches.len() < self.k {
            f64::INFINITY
        } else {
            self.matches.last().map_or(f64::INFINITY, |m| m.distance)
        }
    }

    fn offer(&mut self, m: NeighborMatch) {
        let pos = self
            .matches
            .partition_point(|x| (x.distance, x.customer_index) <= (m.distance, m.customer_index));
        self.matches.insert(pos, m);
        self.matches.truncate(self.k);
    }
}

/// Finds the k nearest (sub)histories to `query` across the database.
///
/// Candidates shorter than two baskets are skipped (the match needs a
/// successor basket), as is any history with the query's customer key.
/// Results are sorted ascending by distance; ties break on the smaller
/// database index.
pub fn find_neighbors(
    query: &PurchaseHistory,
    database: &[PurchaseHistory],
    table: &EmbeddingTable,
    k: usize,
    p: f64,
    opts: SearchOptions,
) -> Result<Vec<NeighborMatch>> {
    find_neighbors_with_stats(query, database, table, k, p, opts).map(|(m, _)| m)
}

/// [`find_neighbors`] plus pruning counters.
pub fn find_neighbors_with_stats(
    query: &PurchaseHistory,
    database: &[PurchaseHistory],
    table: &EmbeddingTable,
    k: usize,
    p: f64,
    opts: SearchOptions,
) -> Result<(Vec<NeighborMatch>, SearchStats)> {
    if query.is_empty() {
        return Err(Error::EmptyHistory);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidOrder(p));
    }
    let eligible: Vec<usize> = (0..database.len())
        .filter(|&i| database[i].customer != query.customer && database[i].len() >= 2)
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleNeighbors);
    }

    let top = Mutex::new(TopK::new(k));
    let stats = Mutex::new(SearchStats::default());

    let process = |&idx: &usize| {
        let candidate = &database[idx];
        let prefix = &candidate.baskets[..candidate.len() - 1];
        let mut local = SearchStats {
            candidates: 1,
            ..Default::default()
        };
        let bound = if opts.prune {
            top.lock().unwrap().bound()
        } else {
            f64::INFINITY
        };
        let costs = BasketCosts::new(&query.baskets, prefix, table, p)
            .expect("order validated above");
        let (qc, cc) = costs.clouds();
        let result = sdtw_match_with(
            query.len(),
            prefix.len(),
            |i, j, budget| {
                local.cells += 1;
                let powered = costs.powered(i, j);
                if opts.prune
                    && lower_bound_star_from_costs(&powered, qc[i].len(), cc[j].len(), p) > budget
                {
                    local.lb_pruned += 1;
                    return CellCost::PrunedAbove;
                }
                local.exact_solves += 1;
                CellCost::Exact(solve_from_costs(&powered, qc[i].len(), cc[j].len(), p).0)
            },
            bound,
        );
        match result {
            Some(m) => top.lock().unwrap().offer(NeighborMatch {
                customer_index: idx,
                start: m.start,
                end: m.end,
                distance: m.distance,
            }),
            None => local.abandoned += 1,
        }
        stats.lock().unwrap().merge(&local);
    };

    if opts.parallel {
        eligible.par_iter().for_each(process);
    } else {
        eligible.iter().for_each(process);
    }

    let matches = top.into_inner().unwrap().matches;
    let stats = stats.into_inner().unwrap();
    Ok((matches, stats))
}

/// Builds the predicted basket from the neighbors' successor baskets.
///
/// With one neighbor the successor is returned verbatim. With several, items
/// are ranked by how many successor baskets contain them; the predicted size
/// is the nearest neighbor's successor size. Ties break by higher global
/// purchase frequency, then smaller item id.
pub fn assemble_basket(
    neighbors: &[NeighborMatch],
    database: &[PurchaseHistory],
    global_freq: &FrequencyTable,
) -> Basket {
    assert!(!neighbors.is_empty(), "assemble_basket needs neighbors");
    let successor =
        |m: &NeighborMatch| -> &Basket { &database[m.customer_index].baskets[m.end + 1] };
    if neighbors.len() == 1 {
        return successor(&neighbors[0]).clone();
    }
    let size = successor(&neighbors[0]).len();
    let mut counts: Vec<(ItemId, u32)> = Vec::new();
    for m in neighbors {
        for &item in successor(m).items() {
            match counts.iter_mut().find(|(i, _)| *i == item) {
                Some((_, c)) => *c += 1,
                None => counts.push((item, 1)),
            }
        }
    }
    counts.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| global_freq.count(b.0).cmp(&global_freq.count(a.0)))
            .then_with(|| a.0.cmp(&b.0))
    });
    Basket::new(counts.into_iter().take(size).map(|(item, _)| item))
}

/// Predicts the next basket for `query`.
///
/// If the k nearest neighbors have a mean SDTW distance below `tau`, the
/// prediction is assembled from their successor baskets; otherwise (and when
/// no eligible neighbor exists at all) it falls back to the query's own
/// most frequent items, sized like their most recent basket.
pub fn predict_next(
    query: &PurchaseHistory,
    database: &[PurchaseHistory],
    table: &EmbeddingTable,
    config: &PredictionConfig,
    global_freq: &FrequencyTable,
    opts: SearchOptions,
) -> Result<Prediction> {
    config.validate()?;
    if query.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let neighbors = match find_neighbors(query, database, table, config.k, config.p, opts) {
        Ok(n) => n,
        Err(Error::NoEligibleNeighbors) => Vec::new(),
        Err(e) => return Err(e),
    };
    let mean = if neighbors.is_empty() {
        f64::INFINITY
    } else {
        let total: f64 = neighbors
            .iter()
            .map(|m| {
                if config.normalize {
                    m.distance / (m.end - m.start + 1) as f64
                } else {
                    m.distance
                }
            })
            .sum();
        total / neighbors.len() as f64
    };
    if mean < config.tau {
        Ok(Prediction {
            basket: assemble_basket(&neighbors, database, global_freq),
            source: PredictionSource::Neighbors,
            mean_neighbor_distance: mean,
        })
    } else {
        Ok(Prediction {
            basket: personal_fallback(query, global_freq),
            source: PredictionSource::Fallback,
            mean_neighbor_distance: mean,
        })
    }
}

/// Fallback heuristic: the query's most frequent items, sized like the last
/// basket. Frequency ties break by global frequency, then smaller item id.
pub fn personal_fallback(query: &PurchaseHistory, global_freq: &FrequencyTable) -> Basket {
    let size = query.last_basket().map_or(0, Basket::len);
    let mut counts: Vec<(ItemId, u32)> = Vec::new();
    for basket in &query.baskets {
        for &item in basket.items() {
            match counts.iter_mut().find(|(i, _)| *i == item) {
                Some((_, c)) => *c += 1,
                None => counts.push((item, 1)),
            }
        }
    }
    counts.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| global_freq.count(b.0).cmp(&global_freq.count(a.0)))
            .then_with(|| a.0.cmp(&b.0))
    });
    Basket::new(counts.into_iter().take(size).map(|(item, _)| item))
}
