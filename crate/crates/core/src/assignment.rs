//! Minimum-cost assignment (Hungarian algorithm with potentials, O(n^3)).

use ndarray::Array2;

/// Assigns each row to a distinct column minimizing total cost; requires
/// `rows <= cols`. Returns the column chosen for each row.
pub fn solve_assignment(cost: &Array2<f64>) -> Vec<usize> {
    let (n, m) = cost.dim();
    assert!(n <= m, "assignment needs at least as many columns as rows");
    assert!(cost.iter().all(|v| v.is_finite()), "costs must be finite");
    // 1-based arrays; p[j] is the row matched to column j, p[0] the row
    // currently seeking a column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
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
        // Augment along the alternating path back to the virtual column 0.
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![usize::MAX; n];
    for j in 1..=m {
        if p[j] != 0 {
            result[p[j] - 1] = j - 1;
        }
    }
    debug_assert!(result.iter().all(|&c| c != usize::MAX));
    result
}

/// Total cost of an assignment.
pub fn assignment_cost(cost: &Array2<f64>, cols: &[usize]) -> f64 {
    cols.iter()
        .enumerate()
        .map(|(r, &c)| cost[[r, c]])
        .sum()
}
