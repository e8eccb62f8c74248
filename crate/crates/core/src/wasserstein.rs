//! Exact p-Wasserstein distance between baskets of embedded items, plus the
//! cheap lower bounds used to prune nearest-neighbor searches.
//!
//! A basket is treated as a uniform probability distribution over its items'
//! embedding vectors. The exact distance scales both marginals by
//! `lcm(m, n)` into integer supplies/demands and solves the resulting
//! transportation problem with exact min-cost flow; basket-sized instances
//! keep the scale factor small, so no LP tolerances are involved.
//!
//! The lower bounds relax one marginal constraint each: every source point
//! ships all of its mass to its nearest sink (`LB1`), or symmetrically for
//! sinks (`LB2`). `LB*` is their maximum. Whenever `LB*` already exceeds the
//! best candidate distance seen so far, the exact solve is skipped.

use crate::embeddings::EmbeddingTable;
use crate::flow::MinCostFlow;
use crate::types::Basket;
use crate::{Error, Result};

/// Embedded items of one basket: one point per distinct item.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        PointCloud { points }
    }

    /// Embeds each item of the basket as one point.
    pub fn from_basket(basket: &Basket, table: &EmbeddingTable) -> Self {
        PointCloud {
            points: basket
                .items()
                .iter()
                .map(|&item| table.row(item).to_vec())
                .collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }
}

/// Optimal transport plan between two uniform basket distributions.
///
/// Row sums equal `1/m`, column sums equal `1/n`, entries are non-negative;
/// [`TransportPlan::check_marginals`] verifies all three at 1e-9 absolute.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub m: usize,
    pub n: usize,
    mass: Vec<f64>,
}

impl TransportPlan {
    #[inline]
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.n + j]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.mass[i * self.n..(i + 1) * self.n].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.m).map(|i| self.mass(i, j)).sum()
    }

    /// Verifies non-negativity and both marginal constraints.
    pub fn check_marginals(&self, tol: f64) -> bool {
        if self.mass.iter().any(|&c| c < -tol) {
            return false;
        }
        let row_target = 1.0 / self.m as f64;
        let col_target = 1.0 / self.n as f64;
        (0..self.m).all(|i| (self.row_sum(i) - row_target).abs() <= tol)
            && (0..self.n).all(|j| (self.col_sum(j) - col_target).abs() <= tol)
    }
}

/// Outcome of a lower-bound-gated distance computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrunedResult {
    /// The lower bound already exceeds the cutoff; the exact distance was
    /// not computed but is guaranteed to exceed the cutoff as well.
    Pruned,
    Exact(f64),
}

/// Euclidean ground distance between two embedding vectors.
pub fn ground_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(euclidean(x, y))
}

#[inline]
fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = a - b;
        sum += d * d;
    }
    sum.sqrt()
}

#[inline]
fn pow_p(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d
    } else if p == 2.0 {
        d * d
    } else {
        d.powf(p)
    }
}

#[inline]
fn root_p(v: f64, p: f64) -> f64 {
    if p == 1.0 {
        v
    } else {
        v.powf(1.0 / p)
    }
}

fn check_order(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(Error::InvalidOrder(p));
    }
    Ok(())
}

/// Pairwise ground distances raised to the p-th power, row-major `m x n`.
///
/// Shared by the exact solver and the lower bounds so a pruned search can
/// compute the matrix once per basket pair.
pub fn powered_cost_matrix(x: &PointCloud, y: &PointCloud, p: f64) -> Result<Vec<f64>> {
    let mut costs = Vec::with_capacity(x.len() * y.len());
    for i in 0..x.len() {
        for j in 0..y.len() {
            let d = ground_distance(x.point(i), y.point(j))?;
            if !d.is_finite() {
                return Err(Error::NonFiniteDistance);
            }
            costs.push(pow_p(d, p));
        }
    }
    Ok(costs)
}

fn lcm(a: u64, b: u64) -> u64 {
    fn gcd(mut a: u64, mut b: u64) -> u64 {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    a / gcd(a, b) * b
}

/// Exact p-Wasserstein distance between two basket point clouds.
///
/// Returns `+inf` when either cloud is empty (the empty-basket convention;
/// preprocessing prevents it in practice).
pub fn exact_wasserstein(x: &PointCloud, y: &PointCloud, p: f64) -> Result<f64> {
    check_order(p)?;
    if x.is_empty() || y.is_empty() {
        return Ok(f64::INFINITY);
    }
    let costs = powered_cost_matrix(x, y, p)?;
    Ok(solve_from_costs(&costs, x.len(), y.len(), p).0)
}

/// Exact distance plus the minimizing transport plan.
pub fn exact_wasserstein_with_plan(
    x: &PointCloud,
    y: &PointCloud,
    p: f64,
) -> Result<(f64, TransportPlan)> {
    check_order(p)?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    let costs = powered_cost_matrix(x, y, p)?;
    let (dist, plan) = solve_from_costs(&costs, x.len(), y.len(), p);
    Ok((dist, plan))
}

/// Solves the transportation problem on a precomputed `m x n` powered cost
/// matrix. Masses `1/m` and `1/n` are scaled by `s = lcm(m, n)` into integer
/// supplies `s/m` and demands `s/n`.
pub fn solve_from_costs(costs: &[f64], m: usize, n: usize, p: f64) -> (f64, TransportPlan) {
    debug_assert_eq!(costs.len(), m * n);
    let scale = lcm(m as u64, n as u64) as i64;
    let supply = scale / m as i64;
    let demand = scale / n as i64;

    // Node layout: sources 0..m, sinks m..m+n, super-source m+n, super-sink m+n+1.
    let source = m + n;
    let sink = m + n + 1;
    let mut mcf = MinCostFlow::new(m + n + 2);
    for i in 0..m {
        mcf.add_arc(source, i, supply, 0.0);
    }
    for j in 0..n {
        mcf.add_arc(m + j, sink, demand, 0.0);
    }
    // Reverse arcs share the adjacency lists, so record each transport arc's
    // slot explicitly for the plan readback.
    let mut arc_index = vec![0usize; m * n];
    for i in 0..m {
        for j in 0..n {
            arc_index[i * n + j] = mcf.arc_count(i);
            mcf.add_arc(i, m + j, supply.min(demand), costs[i * n + j]);
        }
    }

    let total_cost = mcf.solve(source, sink, scale);

    let mut mass = vec![0.0f64; m * n];
    for i in 0..m {
        for j in 0..n {
            let sent = mcf.flow_on(i, arc_index[i * n + j], supply.min(demand));
            mass[i * n + j] = sent as f64 / scale as f64;
        }
    }
    let plan = TransportPlan { m, n, mass };
    (root_p(total_cost / scale as f64, p), plan)
}

/// First lower bound: each source point ships its full `1/m` mass to the
/// nearest sink (the column marginal is dropped).
pub fn lower_bound_one(x: &PointCloud, y: &PointCloud, p: f64) -> Result<f64> {
    check_order(p)?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyPointCloud);
    }
    let mut sum = 0.0;
    for i in 0..x.len() {
        let mut best = f64::INFINITY;
        for j in 0..y.len() {
            let d = ground_distance(x.point(i), y.point(j))?;
            let c = pow_p(d, p);
            if c < best {
                best = c;
            }
        }
        sum += best;
    }
    Ok(root_p(sum / x.len() as f64, p))
}

/// Second lower bound: mirror of [`lower_bound_one`] with the roles swapped.
pub fn lower_bound_two(x: &PointCloud, y: &PointCloud, p: f64) -> Result<f64> {
    lower_bound_one(y, x, p)
}

/// Max of the two lower bounds; still never exceeds the exact distance.
pub fn lower_bound_star(x: &PointCloud, y: &PointCloud, p: f64) -> Result<f64> {
    Ok(lower_bound_one(x, y, p)?.max(lower_bound_two(x, y, p)?))
}

/// `LB*` computed from a precomputed powered cost matrix.
pub fn lower_bound_star_from_costs(costs: &[f64], m: usize, n: usize, p: f64) -> f64 {
    debug_assert_eq!(costs.len(), m * n);
    let mut lb1 = 0.0;
    for i in 0..m {
        let row = &costs[i * n..(i + 1) * n];
        lb1 += row.iter().copied().fold(f64::INFINITY, f64::min);
    }
    lb1 = root_p(lb1 / m as f64, p);
    let mut lb2 = 0.0;
    for j in 0..n {
        let mut best = f64::INFINITY;
        for i in 0..m {
            best = best.min(costs[i * n + j]);
        }
        lb2 += best;
    }
    lb2 = root_p(lb2 / n as f64, p);
    lb1.max(lb2)
}

/// Computes the exact distance only when `LB*` does not rule it out.
///
/// Never prunes a pair whose exact distance is <= `cutoff`: pruning requires
/// `LB* > cutoff`, and `exact >= LB*`.
pub fn pruned_wasserstein(
    x: &PointCloud,
    y: &PointCloud,
    p: f64,
    cutoff: f64,
) -> Result<PrunedResult> {
    check_order(p)?;
    if x.is_empty() || y.is_empty() {
        return Ok(PrunedResult::Exact(f64::INFINITY));
    }
    let costs = powered_cost_matrix(x, y, p)?;
    if lower_bound_star_from_costs(&costs, x.len(), y.len(), p) > cutoff {
        return Ok(PrunedResult::Pruned);
    }
    Ok(PrunedResult::Exact(
        solve_from_costs(&costs, x.len(), y.len(), p).0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(rng: &mut ChaCha8Rng, size: usize, dim: usize) -> PointCloud {
        PointCloud::new(
            (0..size)
                .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect(),
        )
    }

    /// Min over all assignments of (sum d^p / n)^(1/p); valid oracle for
    /// uniform equal-mass transport (Birkhoff).
    fn permutation_oracle(x: &PointCloud, y: &PointCloud, p: f64) -> f64 {
        assert_eq!(x.len(), y.len());
        let n = x.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |perm| {
            let total: f64 = (0..n)
                .map(|i| pow_p(euclidean(x.point(i), y.point(perm[i])), p))
                .sum();
            best = best.min(total / n as f64);
        });
        root_p(best, p)
    }

    fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == perm.len() {
            visit(perm);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(perm, k + 1, visit);
            perm.swap(k, i);
        }
    }

    #[test]
    fn ground_distance_examples() {
        assert_eq!(ground_distance(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ground_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!(matches!(
            ground_distance(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ground_distance_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..8).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let oracle = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!((ground_distance(&x, &y).unwrap() - oracle).abs() <= 1e-12);
        }
    }

    #[test]
    fn identical_clouds_have_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_cloud(&mut rng, 4, 3);
        assert_eq!(exact_wasserstein(&x, &x, 1.0).unwrap(), 0.0);
        assert_eq!(exact_wasserstein(&x, &x, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn singleton_pair_equals_ground_distance() {
        let x = PointCloud::new(vec![vec![0.0, 0.0]]);
        let y = PointCloud::new(vec![vec![3.0, 4.0]]);
        for p in [1.0, 2.0, 3.5] {
            let d = exact_wasserstein(&x, &y, p).unwrap();
            assert!((d - 5.0).abs() <= 1e-12, "p={p}: {d}");
        }
    }

    #[test]
    fn one_to_two_split_averages_for_p1() {
        let x = PointCloud::new(vec![vec![0.0]]);
        let y = PointCloud::new(vec![vec![1.0], vec![3.0]]);
        // Unique feasible plan ships 1/2 to each: (1 + 3) / 2.
        let d = exact_wasserstein(&x, &y, 1.0).unwrap();
        assert!((d - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn empty_cloud_is_infinite() {
        let x = PointCloud::new(vec![]);
        let y = PointCloud::new(vec![vec![1.0]]);
        assert_eq!(exact_wasserstein(&x, &y, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(exact_wasserstein(&y, &x, 2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rejects_p_below_one() {
        let x = PointCloud::new(vec![vec![0.0]]);
        assert!(matches!(
            exact_wasserstein(&x, &x, 0.5),
            Err(Error::InvalidOrder(_))
        ));
        assert!(matches!(
            lower_bound_one(&x, &x, f64::NAN),
            Err(Error::InvalidOrder(_))
        ));
    }

    #[test]
    fn matches_permutation_oracle_on_square_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..40 {
            let n = rng.gen_range(1..=6);
            let x = random_cloud(&mut rng, n, 5);
            let y = random_cloud(&mut rng, n, 5);
            for p in [1.0, 2.0] {
                let exact = exact_wasserstein(&x, &y, p).unwrap();
                let oracle = permutation_oracle(&x, &y, p);
                assert!(
                    (exact - oracle).abs() <= 1e-9,
                    "trial {trial} p={p}: exact {exact} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn optimal_plan_satisfies_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..40 {
            let m = rng.gen_range(1..=7);
            let n = rng.gen_range(1..=7);
            let x = random_cloud(&mut rng, m, 4);
            let y = random_cloud(&mut rng, n, 4);
            let (d, plan) = exact_wasserstein_with_plan(&x, &y, 1.0).unwrap();
            assert!(plan.check_marginals(1e-9), "m={m} n={n} d={d}");
        }
    }

    #[test]
    fn metric_properties_spot_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let (sa, sb, sc) = (rng.gen_range(1..=5), rng.gen_range(1..=5), rng.gen_range(1..=5));
            let a = random_cloud(&mut rng, sa, 4);
            let b = random_cloud(&mut rng, sb, 4);
            let c = random_cloud(&mut rng, sc, 4);
            for p in [1.0, 2.0] {
                let dab = exact_wasserstein(&a, &b, p).unwrap();
                let dba = exact_wasserstein(&b, &a, p).unwrap();
                assert!((dab - dba).abs() <= 1e-9, "symmetry");
                assert_eq!(exact_wasserstein(&a, &a, p).unwrap(), 0.0);
                let dac = exact_wasserstein(&a, &c, p).unwrap();
                let dcb = exact_wasserstein(&c, &b, p).unwrap();
                assert!(dab <= dac + dcb + 1e-7, "triangle: {dab} > {dac} + {dcb}");
            }
        }
    }

    #[test]
    fn lower_bounds_never_exceed_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (sx, sy) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
            let x = random_cloud(&mut rng, sx, 5);
            let y = random_cloud(&mut rng, sy, 5);
            for p in [1.0, 2.0] {
                let exact = exact_wasserstein(&x, &y, p).unwrap();
                let lb1 = lower_bound_one(&x, &y, p).unwrap();
                let lb2 = lower_bound_two(&x, &y, p).unwrap();
                let lbs = lower_bound_star(&x, &y, p).unwrap();
                assert!(lb1 <= exact + 1e-9);
                assert!(lb2 <= exact + 1e-9);
                assert!(lbs <= exact + 1e-9);
                assert!(lbs >= lb1.max(lb2) - 1e-15);
            }
        }
    }

    #[test]
    fn lower_bound_symmetry_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = random_cloud(&mut rng, 4, 3);
        let y = random_cloud(&mut rng, 6, 3);
        for p in [1.0, 2.0] {
            assert_eq!(
                lower_bound_two(&x, &y, p).unwrap(),
                lower_bound_one(&y, &x, p).unwrap()
            );
            assert_eq!(lower_bound_one(&x, &x, p).unwrap(), 0.0);
            assert_eq!(lower_bound_star(&x, &x, p).unwrap(), 0.0);
        }
        assert!(matches!(
            lower_bound_one(&PointCloud::new(vec![]), &y, 1.0),
            Err(Error::EmptyPointCloud)
        ));
    }

    #[test]
    fn singleton_bounds_are_tight() {
        let x = PointCloud::new(vec![vec![1.0, -2.0, 0.5]]);
        let y = PointCloud::new(vec![vec![-0.5, 3.0, 2.0]]);
        for p in [1.0, 2.0, 3.0] {
            let exact = exact_wasserstein(&x, &y, p).unwrap();
            assert_eq!(lower_bound_one(&x, &y, p).unwrap(), exact);
            assert_eq!(lower_bound_two(&x, &y, p).unwrap(), exact);
            assert_eq!(lower_bound_star(&x, &y, p).unwrap(), exact);
        }
    }

    #[test]
    fn pruned_cutoff_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = random_cloud(&mut rng, 3, 4);
        let y = random_cloud(&mut rng, 5, 4);
        // Nothing exceeds an infinite cutoff.
        assert!(matches!(
            pruned_wasserstein(&x, &y, 1.0, f64::INFINITY).unwrap(),
            PrunedResult::Exact(_)
        ));
        // Any positive lower bound exceeds a zero cutoff.
        assert!(lower_bound_star(&x, &y, 1.0).unwrap() > 0.0);
        assert_eq!(
            pruned_wasserstein(&x, &y, 1.0, 0.0).unwrap(),
            PrunedResult::Pruned
        );
    }

    #[test]
    fn pruning_is_sound_over_random_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut pruned = 0;
        for _ in 0..500 {
            let (sx, sy) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
            let x = random_cloud(&mut rng, sx, 4);
            let y = random_cloud(&mut rng, sy, 4);
            let cutoff = rng.gen_range(0.0..4.0);
            match pruned_wasserstein(&x, &y, 1.0, cutoff).unwrap() {
                PrunedResult::Pruned => {
                    pruned += 1;
                    let exact = exact_wasserstein(&x, &y, 1.0).unwrap();
                    assert!(exact > cutoff, "pruned a pair with exact {exact} <= cutoff {cutoff}");
                }
                PrunedResult::Exact(d) => {
                    assert!((d - exact_wasserstein(&x, &y, 1.0).unwrap()).abs() <= 1e-12);
                }
            }
        }
        assert!(pruned > 0, "trial mix should exercise the pruned branch");
    }
}
