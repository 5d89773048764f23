//! Bipartite matching primitives backing the diagram metrics: maximum
//! matching for bottleneck feasibility tests and a shortest-augmenting-
//! path assignment solver for Wasserstein costs.

use std::collections::VecDeque;

use crate::Scalar;

const NIL: u32 = u32::MAX;

/// Maximum bipartite matching (Hopcroft-Karp). `adj[l]` lists the right
/// vertices reachable from left vertex `l`. Returns the matching size.
pub(crate) fn max_bipartite_matching(adj: &[Vec<u32>], n_right: usize) -> usize {
    let n_left = adj.len();
    let mut match_l = vec![NIL; n_left];
    let mut match_r = vec![NIL; n_right];
    let mut dist = vec![0u32; n_left];
    let mut total = 0usize;
    loop {
        // BFS layers from unmatched left vertices.
        let mut queue: VecDeque<u32> = VecDeque::new();
        for l in 0..n_left {
            if match_l[l] == NIL {
                dist[l] = 0;
                queue.push_back(l as u32);
            } else {
                dist[l] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l as usize] {
                let owner = match_r[r as usize];
                if owner == NIL {
                    found = true;
                } else if dist[owner as usize] == u32::MAX {
                    dist[owner as usize] = dist[l as usize] + 1;
                    queue.push_back(owner);
                }
            }
        }
        if !found {
            return total;
        }
        // DFS augmentation along layered paths.
        fn try_augment(
            l: usize,
            adj: &[Vec<u32>],
            match_l: &mut [u32],
            match_r: &mut [u32],
            dist: &mut [u32],
        ) -> bool {
            for i in 0..adj[l].len() {
                let r = adj[l][i] as usize;
                let owner = match_r[r];
                if owner == NIL
                    || (dist[owner as usize] == dist[l] + 1
                        && try_augment(owner as usize, adj, match_l, match_r, dist))
                {
                    match_l[l] = r as u32;
                    match_r[r] = l as u32;
                    return true;
                }
            }
            dist[l] = u32::MAX;
            false
        }
        for l in 0..n_left {
            if match_l[l] == NIL && try_augment(l, adj, &mut match_l, &mut match_r, &mut dist) {
                total += 1;
            }
        }
    }
}

/// Minimum-cost perfect assignment on an `n x n` matrix (row-major),
/// by shortest augmenting paths with potentials. Costs must be finite.
/// Returns the column assigned to each row and the total cost.
pub(crate) fn min_cost_assignment<F: Scalar>(cost: &[F], n: usize) -> (Vec<usize>, F) {
    if n == 0 {
        return (Vec::new(), F::zero());
    }
    let inf = F::infinity();
    // 1-indexed potentials; p[col] = row matched to col, col 0 is a
    // virtual staging column.
    let mut u = vec![F::zero(); n + 1];
    let mut v = vec![F::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
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
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
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
    let mut row_to_col = vec![0usize; n];
    let mut total = F::zero();
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
            total = total + cost[(p[j] - 1) * n + (j - 1)];
        }
    }
    (row_to_col, total)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn matching_saturates_when_possible() {
        // Perfect matching exists: 0-0, 1-1, 2-2.
        let adj = vec![vec![0, 1], vec![0, 2], vec![2]];
        assert_eq!(max_bipartite_matching(&adj, 3), 3);
        // Two left vertices share a single right vertex.
        let adj = vec![vec![0], vec![0]];
        assert_eq!(max_bipartite_matching(&adj, 1), 1);
        let adj: Vec<Vec<u32>> = vec![vec![], vec![0]];
        assert_eq!(max_bipartite_matching(&adj, 1), 1);
    }

    #[test]
    fn matching_agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let nl = rng.random_range(0..6usize);
            let nr = rng.random_range(0..6usize);
            let adj: Vec<Vec<u32>> = (0..nl)
                .map(|_| (0..nr as u32).filter(|_| rng.random::<f64>() < 0.4).collect())
                .collect();
            let fast = max_bipartite_matching(&adj, nr);
            assert_eq!(fast, brute_force_matching(&adj, nr));
        }
    }

    fn brute_force_matching(adj: &[Vec<u32>], nr: usize) -> usize {
        fn go(l: usize, adj: &[Vec<u32>], used: &mut Vec<bool>) -> usize {
            if l == adj.len() {
                return 0;
            }
            let mut best = go(l + 1, adj, used);
            for &r in &adj[l] {
                if !used[r as usize] {
                    used[r as usize] = true;
                    best = best.max(1 + go(l + 1, adj, used));
                    used[r as usize] = false;
                }
            }
            best
        }
        go(0, adj, &mut vec![false; nr])
    }

    #[test]
    fn assignment_agrees_with_permutation_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.random_range(1..7usize);
            let cost: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() * 10.0).collect();
            let (assign, total) = min_cost_assignment(&cost, n);
            // Assignment must be a permutation.
            let mut seen = vec![false; n];
            for &c in &assign {
                assert!(!seen[c]);
                seen[c] = true;
            }
            let direct: f64 = assign.iter().enumerate().map(|(r, &c)| cost[r * n + c]).sum();
            assert!((direct - total).abs() < 1e-9);
            assert!(total <= brute_force_assignment(&cost, n) + 1e-9);
        }
    }

    fn brute_force_assignment(cost: &[f64], n: usize) -> f64 {
        fn go(r: usize, cost: &[f64], n: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if r == n {
                *best = best.min(acc);
                return;
            }
            for c in 0..n {
                if !used[c] {
                    used[c] = true;
                    go(r + 1, cost, n, used, acc + cost[r * n + c], best);
                    used[c] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        go(0, cost, n, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn assignment_zero_and_identity_cases() {
        let (assign, total) = min_cost_assignment::<f64>(&[], 0);
        assert!(assign.is_empty());
        assert_eq!(total, 0.0);
        // Identity is optimal on a diagonal-dominant matrix.
        let cost = vec![0.0, 9.0, 9.0, 9.0, 0.0, 9.0, 9.0, 9.0, 0.0];
        let (assign, total) = min_cost_assignment(&cost, 3);
        assert_eq!(assign, vec![0, 1, 2]);
        assert_eq!(total, 0.0);
    }
}
