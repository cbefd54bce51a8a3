//! Min-cost rectangular assignment (Kuhn-Munkres with potentials, O(n²m)).

/// Solves the assignment problem for `cost` with `rows <= cols`.
///
/// Returns, for every row, the column assigned to it. Ties are resolved
/// towards lower column indices.
fn solve_rows_le_cols(cost: &[Vec<f64>], rows: usize, cols: usize) -> Vec<usize> {
    // 1-based arrays, index 0 is the virtual source.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=cols {
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
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut result = vec![usize::MAX; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            result[owner[j] - 1] = j - 1;
        }
    }
    result
}

/// Optimal one-to-one assignment under a cost cap.
///
/// `cost[r][c]` values greater than `cap` (or non-finite) are forbidden.
/// Among all matchings using only allowed pairs, the result has the largest
/// number of matched pairs and, among those, the smallest total cost.
/// Returns `assignment[r] = Some(c)` for matched rows.
pub fn capped_assignment(cost: &[Vec<f64>], cap: f64) -> Vec<Option<usize>> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let allowed = |c: f64| c.is_finite() && c <= cap;
    // Any single forbidden pair costs more than every allowed matching.
    let n = rows.min(cols) as f64;
    let forbidden = (cap.max(0.0) + 1.0) * (n + 1.0) * 2.0;
    let clamp = |c: f64| if allowed(c) { c } else { forbidden };

    let pairs: Vec<(usize, usize)> = if rows <= cols {
        let m: Vec<Vec<f64>> = cost.iter().map(|r| r.iter().map(|&c| clamp(c)).collect()).collect();
        solve_rows_le_cols(&m, rows, cols).into_iter().enumerate().collect()
    } else {
        let m: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| clamp(cost[r][c])).collect()).collect();
        solve_rows_le_cols(&m, cols, rows)
            .into_iter()
            .enumerate()
            .map(|(c, r)| (r, c))
            .collect()
    };

    let mut out = vec![None; rows];
    for (r, c) in pairs {
        if c != usize::MAX && allowed(cost[r][c]) {
            out[r] = Some(c);
        }
    }
    out
}
