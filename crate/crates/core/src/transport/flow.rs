//! Successive-shortest-path min-cost flow on the dense bipartite
//! transportation graph. Supplies and demands are integers; arc costs are
//! nonnegative floats. Node potentials are maintained so every Dijkstra runs
//! on nonnegative reduced costs, and at termination they certify optimality.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub(crate) struct FlowSolution {
    /// Positive flows as (source, sink, amount).
    pub flows: Vec<(usize, usize, u64)>,
    /// Source-side node potentials.
    pub potential_source: Vec<f64>,
    /// Sink-side node potentials.
    pub potential_sink: Vec<f64>,
}

pub(crate) fn min_cost_transport<C>(
    supplies: &[u64],
    demands: &[u64],
    cost: C,
) -> Result<FlowSolution>
where
    C: Fn(usize, usize) -> f64,
{
    let n = supplies.len();
    let m = demands.len();
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput("transport marginals"));
    }
    let total_supply: u64 = supplies.iter().sum();
    let total_demand: u64 = demands.iter().sum();
    if total_supply != total_demand {
        return Err(Error::SolverFailure(format!(
            "unbalanced marginals: supply {total_supply} vs demand {total_demand}"
        )));
    }

    let nodes = n + m; // sources 0..n, sinks n..n+m
    let mut potential = vec![0.0_f64; nodes];
    let mut remaining_supply = supplies.to_vec();
    let mut remaining_demand = demands.to_vec();
    let mut flow: HashMap<(usize, usize), u64> = HashMap::new();
    // sinks -> sources currently carrying flow, for residual back arcs
    let mut inflow_sources: Vec<Vec<usize>> = vec![Vec::new(); m];

    let mut outstanding: u64 = total_supply;
    let max_rounds = 64 * nodes + 1024;
    let mut rounds = 0usize;

    let mut dist = vec![f64::INFINITY; nodes];
    let mut settled = vec![false; nodes];
    let mut parent = vec![usize::MAX; nodes];

    while outstanding > 0 {
        rounds += 1;
        if rounds > max_rounds {
            return Err(Error::SolverFailure(format!(
                "augmentation budget exceeded after {rounds} rounds"
            )));
        }

        dist.fill(f64::INFINITY);
        settled.fill(false);
        parent.fill(usize::MAX);
        for i in 0..n {
            if remaining_supply[i] > 0 {
                dist[i] = 0.0;
            }
        }

        // Dense Dijkstra over reduced costs.
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !settled[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            settled[u] = true;
            if u < n {
                // forward arcs to every sink
                for j in 0..m {
                    let v = n + j;
                    if settled[v] {
                        continue;
                    }
                    let rc = (cost(u, j) + potential[u] - potential[v]).max(0.0);
                    let nd = dist[u] + rc;
                    if nd < dist[v] {
                        dist[v] = nd;
                        parent[v] = u;
                    }
                }
            } else {
                // residual back arcs to sources feeding this sink
                let j = u - n;
                inflow_sources[j].retain(|&i| flow.get(&(i, j)).copied().unwrap_or(0) > 0);
                for &i in &inflow_sources[j] {
                    if settled[i] {
                        continue;
                    }
                    let rc = (-cost(i, j) + potential[u] - potential[i]).max(0.0);
                    let nd = dist[u] + rc;
                    if nd < dist[i] {
                        dist[i] = nd;
                        parent[i] = u;
                    }
                }
            }
        }

        // Closest sink with unmet demand.
        let mut target = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..m {
            if remaining_demand[j] > 0 && dist[n + j] < best {
                best = dist[n + j];
                target = n + j;
            }
        }
        if target == usize::MAX {
            return Err(Error::SolverFailure(
                "no augmenting path to an unmet sink".into(),
            ));
        }

        let cap = dist[target];
        for v in 0..nodes {
            potential[v] += dist[v].min(cap);
        }

        // Bottleneck along the augmenting path.
        let mut bottleneck = remaining_demand[target - n];
        let mut v = target;
        loop {
            let u = parent[v];
            if v >= n && u == usize::MAX {
                // v is unreachable only if the path construction is broken
                return Err(Error::SolverFailure("broken augmenting path".into()));
            }
            if u == usize::MAX {
                bottleneck = bottleneck.min(remaining_supply[v]);
                break;
            }
            if u < n && v >= n {
                // forward arc: unlimited capacity
            } else {
                // back arc sink u -> source v carries flow (v, u - n)
                let f = flow.get(&(v, u - n)).copied().unwrap_or(0);
                bottleneck = bottleneck.min(f);
            }
            v = u;
            if v < n && parent[v] == usize::MAX {
                bottleneck = bottleneck.min(remaining_supply[v]);
                break;
            }
        }
        if bottleneck == 0 {
            return Err(Error::SolverFailure("zero bottleneck on path".into()));
        }

        // Apply the augmentation.
        let mut v = target;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u < n && v >= n {
                let j = v - n;
                let entry = flow.entry((u, j)).or_insert(0);
                if *entry == 0 {
                    inflow_sources[j].push(u);
                }
                *entry += bottleneck;
            } else {
                let j = u - n;
                let entry = flow.get_mut(&(v, j)).expect("back arc has flow");
                *entry -= bottleneck;
            }
            v = u;
        }
        remaining_supply[v] -= bottleneck;
        remaining_demand[target - n] -= bottleneck;
        outstanding -= bottleneck;
    }

    let mut flows: Vec<(usize, usize, u64)> = flow
        .into_iter()
        .filter(|&(_, f)| f > 0)
        .map(|((i, j), f)| (i, j, f))
        .collect();
    flows.sort_unstable_by_key(|&(i, j, _)| (i, j));

    Ok(FlowSolution {
        flows,
        potential_source: potential[..n].to_vec(),
        potential_sink: potential[n..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ships_everything_on_balanced_instance() {
        let sol = min_cost_transport(&[2, 3], &[1, 4], |i, j| ((i + 1) * (j + 1)) as f64).unwrap();
        let shipped: u64 = sol.flows.iter().map(|&(_, _, f)| f).sum();
        assert_eq!(shipped, 5);
        let mut row = [0u64; 2];
        let mut col = [0u64; 2];
        for &(i, j, f) in &sol.flows {
            row[i] += f;
            col[j] += f;
        }
        assert_eq!(row, [2, 3]);
        assert_eq!(col, [1, 4]);
    }

    #[test]
    fn rejects_unbalanced_marginals() {
        assert!(min_cost_transport(&[2], &[1], |_, _| 1.0).is_err());
    }

    #[test]
    fn picks_cheap_arcs() {
        // source 0 should serve sink 1 and source 1 sink 0
        let cost = |i: usize, j: usize| if i == j { 10.0 } else { 1.0 };
        let sol = min_cost_transport(&[5, 5], &[5, 5], cost).unwrap();
        let total: f64 = sol
            .flows
            .iter()
            .map(|&(i, j, f)| cost(i, j) * f as f64)
            .sum();
        assert_eq!(total, 10.0);
    }
}
