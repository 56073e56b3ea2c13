//! Exact linear assignment via shortest augmenting paths (the O(n^3)
//! Hungarian scheme with row/column potentials).

/// Returns the minimum total cost and the assignment `sigma` with
/// `sigma[row] = col` for a square cost matrix.
pub(crate) fn solve(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let inf = f64::INFINITY;
    // 1-based arrays; p[j] is the row matched to column j, p[0] the row
    // currently being inserted.
    let mut u = vec![0.0_f64; n + 1];
    let mut v = vec![0.0_f64; n + 1];
    let mut p = vec![0_usize; n + 1];
    let mut way = vec![0_usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0_usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0_usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut sigma = vec![0_usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        sigma[p[j] - 1] = j - 1;
        total += cost[p[j] - 1][j - 1];
    }
    (total, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut [bool]) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn matches_brute_force_on_small_instances() {
        let cases = [
            vec![
                vec![4.0, 1.0, 3.0],
                vec![2.0, 0.0, 5.0],
                vec![3.0, 2.0, 2.0],
            ],
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            vec![vec![5.0]],
            vec![
                vec![0.5, 9.0, 1.0, 2.0],
                vec![3.0, 0.25, 7.0, 2.0],
                vec![8.0, 2.0, 0.125, 4.0],
                vec![1.0, 6.0, 3.0, 0.0625],
            ],
        ];
        for cost in &cases {
            let (got, sigma) = solve(cost);
            assert!((got - brute_force(cost)).abs() <= 1e-12);
            // sigma is a permutation realizing the cost
            let mut seen = vec![false; cost.len()];
            let mut realized = 0.0;
            for (i, &j) in sigma.iter().enumerate() {
                assert!(!seen[j]);
                seen[j] = true;
                realized += cost[i][j];
            }
            assert!((realized - got).abs() <= 1e-12);
        }
    }
}
