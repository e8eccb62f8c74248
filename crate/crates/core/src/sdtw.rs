//! Dynamic time warping between purchase histories, plus the star-padded
//! subsequence variant used by the neighbor search.
//!
//! The pairwise ground cost between baskets is their Wasserstein distance.
//! Subsequence DTW gives the candidate history a free start and a free end:
//! the boundary row along the candidate axis costs zero, and the result is
//! the minimum over candidate positions in the query's last row. That finds
//! the best-matching contiguous subsequence in one `(n+1) x m` pass instead
//! of scanning all `O(m^2)` windows.
//!
//! The DP core is generic over a cell-cost oracle so the neighbor search can
//! plug in lower-bound pruning: the oracle receives a budget and may answer
//! `Pruned` when it can certify the cell cost exceeds it, which poisons every
//! path through that cell without solving the exact transport problem.

use crate::embeddings::EmbeddingTable;
use crate::types::Basket;
use crate::wasserstein::{exact_wasserstein, PointCloud};
use crate::{Error, Result};

/// Answer of a cell-cost oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellCost {
    Exact(f64),
    /// The oracle certifies the cost exceeds the budget it was given.
    PrunedAbove,
}

/// Best-matching contiguous subsequence of the candidate history.
///
/// `start..=end` are 0-based basket indices into the candidate; `distance`
/// equals the plain DTW distance between the query and that window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsequenceMatch {
    pub distance: f64,
    pub start: usize,
    pub end: usize,
}

/// Classic DTW over a cost closure; both endpoints are anchored.
pub fn dtw_distance_with<F>(n: usize, m: usize, mut cost: F) -> f64
where
    F: FnMut(usize, usize) -> f64,
{
    assert!(n > 0 && m > 0, "DTW needs non-empty sequences");
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let best = cur[j - 1].min(prev[j]).min(prev[j - 1]);
            cur[j] = cost(i - 1, j - 1) + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// DTW distance between two purchase histories with Wasserstein ground costs.
pub fn dtw_distance(
    query: &[Basket],
    candidate: &[Basket],
    table: &EmbeddingTable,
    p: f64,
) -> Result<f64> {
    if query.is_empty() || candidate.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let costs = BasketCosts::new(query, candidate, table, p)?;
    Ok(dtw_distance_with(query.len(), candidate.len(), |i, j| {
        costs.exact(i, j)
    }))
}

/// Star-padded subsequence DTW over a pruning-aware cost oracle.
///
/// `oracle(i, j, budget)` returns the ground cost of aligning query basket
/// `i` with candidate basket `j`, or `PrunedAbove` if it can prove the cost
/// exceeds `budget` (any path through such a cell would exceed
/// `abandon_above`). Returns `None` when every alignment provably exceeds
/// `abandon_above`. With `abandon_above = +inf` the oracle always receives an
/// infinite budget and the exact minimum is returned.
///
/// Ties on the final distance break toward the smallest end index, then the
/// smallest start index.
pub fn sdtw_match_with<F>(
    n: usize,
    m: usize,
    mut oracle: F,
    abandon_above: f64,
) -> Option<SubsequenceMatch>
where
    F: FnMut(usize, usize, f64) -> CellCost,
{
    assert!(n > 0 && m > 0, "SDTW needs non-empty sequences");
    const NO_START: usize = usize::MAX;

    // Row 0 is the star-padding boundary: zero cost everywhere along the
    // candidate, so a match may start at any position.
    let mut prev = vec![0.0f64; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    let mut prev_start = vec![NO_START; m + 1];
    let mut cur_start = vec![NO_START; m + 1];

    for i in 1..=n {
        cur[0] = f64::INFINITY;
        cur_start[0] = NO_START;
        let mut row_min = f64::INFINITY;
        for j in 1..=m {
            let left = cur[j - 1];
            let up = prev[j];
            let diag = prev[j - 1];
            let best = left.min(up).min(diag);
            if !best.is_finite() {
                // Every predecessor is already poisoned; the cell is
                // unreachable and its ground cost is irrelevant.
                cur[j] = f64::INFINITY;
                cur_start[j] = NO_START;
                continue;
            }
            let c = match oracle(i - 1, j - 1, abandon_above - best) {
                CellCost::Exact(c) => {
                    debug_assert!(c >= 0.0, "ground costs must be non-negative");
                    c
                }
                CellCost::PrunedAbove => {
                    cur[j] = f64::INFINITY;
                    cur_start[j] = NO_START;
                    continue;
                }
            };
            cur[j] = c + best;
            // Smallest start index among predecessors achieving `best`.
            let mut start = NO_START;
            if i == 1 {
                // Entering from the zero boundary starts the window here.
                if up == best || diag == best {
                    start = j - 1;
                }
                if left == best {
                    start = start.min(cur_start[j - 1]);
                }
            } else {
                if left == best {
                    start = start.min(cur_start[j - 1]);
                }
                if up == best {
                    start = start.min(prev_start[j]);
                }
                if diag == best {
                    start = start.min(prev_start[j - 1]);
                }
            }
            debug_assert!(start != NO_START);
            cur_start[j] = start;
            row_min = row_min.min(cur[j]);
        }
        // Costs only accumulate, so a row whose minimum already exceeds the
        // abandon threshold can never recover.
        if row_min > abandon_above {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut prev_start, &mut cur_start);
    }

    // Free end: minimum over candidate positions in the query's last row;
    // the strict `<` keeps the first (smallest) end index on ties.
    let mut best = f64::INFINITY;
    let mut end = 0usize;
    for j in 1..=m {
        if prev[j] < best {
            best = prev[j];
            end = j - 1;
        }
    }
    if best > abandon_above {
        return None;
    }
    Some(SubsequenceMatch {
        distance: best,
        start: prev_start[end + 1],
        end,
    })
}

/// Subsequence match between two histories with exact Wasserstein costs.
pub fn sdtw_match(
    query: &[Basket],
    candidate: &[Basket],
    table: &EmbeddingTable,
    p: f64,
) -> Result<SubsequenceMatch> {
    if query.is_empty() || candidate.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let costs = BasketCosts::new(query, candidate, table, p)?;
    Ok(sdtw_match_with(
        query.len(),
        candidate.len(),
        |i, j, _budget| CellCost::Exact(costs.exact(i, j)),
        f64::INFINITY,
    )
    .expect("no abandon threshold was set"))
}

/// Embeds both histories once and serves exact cell costs.
///
/// Each `(i, j)` pair is only requested once per DP pass, so no memo table is
/// kept; the embedded clouds are the shared expensive part.
pub(crate) struct BasketCosts {
    query: Vec<PointCloud>,
    candidate: Vec<PointCloud>,
    p: f64,
}

impl BasketCosts {
    pub(crate) fn new(
        query: &[Basket],
        candidate: &[Basket],
        table: &EmbeddingTable,
        p: f64,
    ) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidOrder(p));
        }
        let embed = |baskets: &[Basket]| -> Vec<PointCloud> {
            baskets
                .iter()
                .map(|b| PointCloud::from_basket(b, table))
                .collect()
        };
        Ok(BasketCosts {
            query: embed(query),
            candidate: embed(candidate),
            p,
        })
    }

    pub(crate) fn clouds(&self) -> (&[PointCloud], &[PointCloud]) {
        (&self.query, &self.candidate)
    }

    pub(crate) fn exact(&self, i: usize, j: usize) -> f64 {
        exact_wasserstein(&self.query[i], &self.candidate[j], self.p)
            .expect("order and dimensions validated at construction")
    }

    /// Powered ground-cost matrix of pair `(i, j)`, shared between the lower
    /// bound and the exact solve.
    pub(crate) fn powered(&self, i: usize, j: usize) -> Vec<f64> {
        crate::wasserstein::powered_cost_matrix(&self.query[i], &self.candidate[j], self.p)
            .expect("order and dimensions validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ItemId;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force DTW: enumerate every monotone warping path recursively.
    fn dtw_path_oracle(costs: &[Vec<f64>]) -> f64 {
        fn walk(costs: &[Vec<f64>], i: usize, j: usize) -> f64 {
            let c = costs[i][j];
            if i == 0 && j == 0 {
                return c;
            }
            let mut best = f64::INFINITY;
            if i > 0 {
                best = best.min(walk(costs, i - 1, j));
            }
            if j > 0 {
                best = best.min(walk(costs, i, j - 1));
            }
            if i > 0 && j > 0 {
                best = best.min(walk(costs, i - 1, j - 1));
            }
            c + best
        }
        walk(costs, costs.len() - 1, costs[0].len() - 1)
    }

    /// "Consider all possible subsequences": DTW against every window.
    fn sdtw_oracle(costs: &[Vec<f64>]) -> SubsequenceMatch {
        let n = costs.len();
        let m = costs[0].len();
        let mut best = SubsequenceMatch {
            distance: f64::INFINITY,
            start: 0,
            end: 0,
        };
        for end in 0..m {
            for start in 0..=end {
                let d = dtw_distance_with(n, end - start + 1, |i, j| costs[i][start + j]);
                // Tie rule: smallest end, then smallest start; iterating
                // end-major/start-minor with strict `<` implements it.
                if d < best.distance {
                    best = SubsequenceMatch {
                        distance: d,
                        start,
                        end,
                    };
                }
            }
        }
        best
    }

    fn random_costs(rng: &mut ChaCha8Rng, n: usize, m: usize, zero_prob: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        if rng.gen_bool(zero_prob) {
                            0.0
                        } else {
                            rng.gen_range(0.0..3.0)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn identical_sequences_have_zero_dtw() {
        let table = EmbeddingTable::from_rows(3, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let history = vec![
            Basket::new([ItemId(0), ItemId(1)]),
            Basket::new([ItemId(2)]),
        ];
        assert_eq!(dtw_distance(&history, &history, &table, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn single_cell_dtw_is_the_ground_cost() {
        let table = EmbeddingTable::from_rows(2, 1, vec![0.0, 3.0]);
        let a = vec![Basket::new([ItemId(0)])];
        let b = vec![Basket::new([ItemId(1)])];
        assert_eq!(dtw_distance(&a, &b, &table, 1.0).unwrap(), 3.0);
        assert!(matches!(
            dtw_distance(&[], &b, &table, 1.0),
            Err(Error::EmptyHistory)
        ));
    }

    #[test]
    fn dtw_matches_path_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=4);
            let costs = random_costs(&mut rng, n, m, 0.2);
            let dp = dtw_distance_with(n, m, |i, j| costs[i][j]);
            assert_eq!(dp, dtw_path_oracle(&costs));
        }
    }

    #[test]
    fn planted_window_matches_exactly() {
        // Query of length 2 appears verbatim at candidate positions 2..=3.
        let dim = 2;
        let table = EmbeddingTable::from_rows(
            4,
            dim,
            vec![0.0, 0.0, 5.0, 0.0, 0.0, 5.0, 5.0, 5.0],
        );
        let q = vec![Basket::new([ItemId(0)]), Basket::new([ItemId(1)])];
        let cand = vec![
            Basket::new([ItemId(2)]),
            Basket::new([ItemId(3)]),
            Basket::new([ItemId(0)]),
            Basket::new([ItemId(1)]),
            Basket::new([ItemId(2)]),
        ];
        let m = sdtw_match(&q, &cand, &table, 1.0).unwrap();
        assert_eq!(m.distance, 0.0);
        assert_eq!((m.start, m.end), (2, 3));
    }

    #[test]
    fn length_one_query_reduces_to_row_minimum() {
        let costs = vec![vec![2.0, 0.5, 0.5, 1.0]];
        let m = sdtw_match_with(1, 4, |i, j, _| CellCost::Exact(costs[i][j]), f64::INFINITY)
            .unwrap();
        assert_eq!(m.distance, 0.5);
        // Smallest index on ties.
        assert_eq!((m.start, m.end), (1, 1));
    }

    #[test]
    fn sdtw_matches_all_subsequences_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for trial in 0..300 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=8);
            // A healthy dose of zeros and duplicates exercises tie-breaking.
            let costs = random_costs(&mut rng, n, m, 0.3);
            let got = sdtw_match_with(n, m, |i, j, _| CellCost::Exact(costs[i][j]), f64::INFINITY)
                .unwrap();
            let want = sdtw_oracle(&costs);
            assert_eq!(got.distance, want.distance, "trial {trial}");
            assert_eq!(
                (got.start, got.end),
                (want.start, want.end),
                "trial {trial}: endpoints for distance {}",
                got.distance
            );
        }
    }

    #[test]
    fn subsequence_match_never_exceeds_full_dtw() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(n..=8);
            let costs = random_costs(&mut rng, n, m, 0.1);
            let full = dtw_distance_with(n, m, |i, j| costs[i][j]);
            let sub = sdtw_match_with(n, m, |i, j, _| CellCost::Exact(costs[i][j]), f64::INFINITY)
                .unwrap();
            assert!(sub.distance <= full);
        }
    }

    #[test]
    fn every_cell_evaluated_exactly_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let n = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=8);
            let costs = random_costs(&mut rng, n, m, 0.2);
            let mut seen = vec![0u32; n * m];
            let _ = sdtw_match_with(
                n,
                m,
                |i, j, _| {
                    seen[i * m + j] += 1;
                    CellCost::Exact(costs[i][j])
                },
                f64::INFINITY,
            );
            assert!(seen.iter().all(|&c| c == 1), "each cell exactly once");
        }
    }

    #[test]
    fn abandoning_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut abandoned = 0;
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=8);
            let costs = random_costs(&mut rng, n, m, 0.2);
            let bound = rng.gen_range(0.0..2.0);
            let unbounded =
                sdtw_match_with(n, m, |i, j, _| CellCost::Exact(costs[i][j]), f64::INFINITY)
                    .unwrap();
            let bounded = sdtw_match_with(n, m, |i, j, _| CellCost::Exact(costs[i][j]), bound);
            if unbounded.distance > bound {
                assert_eq!(bounded, None);
                abandoned += 1;
            } else {
                assert_eq!(bounded, Some(unbounded));
            }
        }
        assert!(abandoned > 0);
    }

    #[test]
    fn cell_pruning_preserves_surviving_results() {
        // Oracle prunes whenever the true cost exceeds the budget; surviving
        // matches must be identical to the exact run.
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=8);
            let costs = random_costs(&mut rng, n, m, 0.2);
            let bound = rng.gen_range(0.5..3.0);
            let unbounded =
                sdtw_match_with(n, m, |i, j, _| CellCost::Exact(costs[i][j]), f64::INFINITY)
                    .unwrap();
            let pruned = sdtw_match_with(
                n,
                m,
                |i, j, budget| {
                    if costs[i][j] > budget {
                        CellCost::PrunedAbove
                    } else {
                        CellCost::Exact(costs[i][j])
                    }
                },
                bound,
            );
            if unbounded.distance > bound {
                assert_eq!(pruned, None);
            } else {
                assert_eq!(pruned, Some(unbounded));
            }
        }
    }
}
