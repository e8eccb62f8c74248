//! Exact min-cost flow on tiny transportation networks.
//!
//! Successive shortest paths with Johnson potentials. Baskets have at most a
//! few dozen items, so the bipartite networks here stay under ~30 nodes and a
//! dense Dijkstra scan is both exact and fast.

const UNREACHED: f64 = f64::INFINITY;

#[derive(Clone, Copy)]
struct Arc {
    to: usize,
    rev: usize,
    cap: i64,
    cost: f64,
}

pub(crate) struct MinCostFlow {
    graph: Vec<Vec<Arc>>,
}

impl MinCostFlow {
    pub(crate) fn new(n: usize) -> Self {
        MinCostFlow {
            graph: vec![Vec::new(); n],
        }
    }

    /// Number of outgoing arcs (forward and reverse) currently at `node`.
    pub(crate) fn arc_count(&self, node: usize) -> usize {
        self.graph[node].len()
    }

    pub(crate) fn add_arc(&mut self, from: usize, to: usize, cap: i64, cost: f64) {
        let fwd = self.graph[from].len();
        let rev = self.graph[to].len();
        self.graph[from].push(Arc {
            to,
            rev,
            cap,
            cost,
        });
        self.graph[to].push(Arc {
            to: from,
            rev: fwd,
            cap: 0,
            cost: -cost,
        });
    }

    /// Sends `amount` units from source to sink, returning the total cost.
    /// Panics if the network cannot carry the requested amount; the
    /// transportation instances built by the caller are always feasible.
    pub(crate) fn solve(&mut self, source: usize, sink: usize, amount: i64) -> f64 {
        let n = self.graph.len();
        let mut potential = vec![0.0f64; n];
        let mut dist = vec![UNREACHED; n];
        let mut visited = vec![false; n];
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];

        let mut remaining = amount;
        let mut total_cost = 0.0f64;

        while remaining > 0 {
            dist.fill(UNREACHED);
            visited.fill(false);
            parent.fill(None);
            dist[source] = 0.0;

            // Dense Dijkstra: node counts are tiny, no heap needed.
            loop {
                let mut u = usize::MAX;
                let mut best = UNREACHED;
                for v in 0..n {
                    if !visited[v] && dist[v] < best {
                        best = dist[v];
                        u = v;
                    }
                }
                if u == usize::MAX {
                    break;
                }
                visited[u] = true;
                for (idx, arc) in self.graph[u].iter().enumerate() {
                    if arc.cap <= 0 {
                        continue;
                    }
                    // Reduced costs are non-negative up to float noise; clamp.
                    let reduced = (arc.cost + potential[u] - potential[arc.to]).max(0.0);
                    let candidate = dist[u] + reduced;
                    if candidate < dist[arc.to] {
                        dist[arc.to] = candidate;
                        parent[arc.to] = Some((u, idx));
                    }
                }
            }

            assert!(
                dist[sink].is_finite(),
                "transportation network must stay feasible"
            );

            for v in 0..n {
                if dist[v].is_finite() {
                    potential[v] += dist[v];
                }
            }

            // Bottleneck along the shortest path.
            let mut bottleneck = remaining;
            let mut v = sink;
            while let Some((u, idx)) = parent[v] {
                bottleneck = bottleneck.min(self.graph[u][idx].cap);
                v = u;
            }

            let mut v = sink;
            while let Some((u, idx)) = parent[v] {
                let rev = self.graph[u][idx].rev;
                self.graph[u][idx].cap -= bottleneck;
                self.graph[v][rev].cap += bottleneck;
                total_cost += bottleneck as f64 * self.graph[u][idx].cost;
                v = u;
            }
            remaining -= bottleneck;
        }

        total_cost
    }

    /// Flow currently on the `arc_idx`-th outgoing arc of `from` (sent units).
    pub(crate) fn flow_on(&self, from: usize, arc_idx: usize, original_cap: i64) -> i64 {
        original_cap - self.graph[from][arc_idx].cap
    }
}
