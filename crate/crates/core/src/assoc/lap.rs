//! Rectangular linear assignment.
//!
//! Shortest-augmenting-path Hungarian method on the matrix padded to square
//! with zero-cost dummy rows/columns. Among all optimal assignments the one
//! with the lexicographically smallest `(row, col)` pair list is returned:
//! after solving, every optimal assignment is a perfect matching on the
//! zero-reduced-cost edges, so rows are fixed greedily in index order to the
//! smallest tight column that still admits a perfect matching.

use std::collections::VecDeque;

use super::CostMatrix;

/// Reduced costs within this many units (scaled by the largest |cost|) count as tight.
const TIGHT_EPS: f64 = 1e-12;

/// Minimum-cost assignment of `min(rows, cols)` pairs.
///
/// Returns, for every row, the column it is assigned to (`None` for rows left
/// over when there are more rows than columns). Sentinel costs are treated as
/// ordinary large numbers here; filtering happens in
/// [`solve_assignment`](super::solve_assignment).
pub fn solve_raw(costs: &CostMatrix) -> Vec<Option<usize>> {
    let (rows, cols) = (costs.rows(), costs.cols());
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    let n = rows.max(cols);
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            costs.get(i, j)
        } else {
            0.0
        }
    };

    // 1-based arrays; index 0 is the virtual root of each search.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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

    // Switch to 0-based row -> col.
    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[owner[j] - 1] = j - 1;
    }
    let scale = 1.0
        + (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| costs.get(i, j).abs())
            .fold(0.0, f64::max);
    let eps = TIGHT_EPS * scale;
    let tight: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| cost(i, j) - u[i + 1] - v[j + 1] <= eps).collect())
        .collect();
    lexicographic_refine(&tight, &mut col_of, rows);

    col_of
        .into_iter()
        .take(rows)
        .map(|j| if j < cols { Some(j) } else { None })
        .collect()
}

/// Rewrites `col_of` (a perfect matching on `tight`) into the lexicographically
/// smallest perfect matching on `tight`, fixing the first `real_rows` rows in order.
fn lexicographic_refine(tight: &[Vec<bool>], col_of: &mut [usize], real_rows: usize) {
    let n = col_of.len();
    let mut row_of = vec![0usize; n];
    for (i, &j) in col_of.iter().enumerate() {
        row_of[j] = i;
    }
    for i in 0..real_rows {
        let current = col_of[i];
        for j in 0..current {
            if !tight[i][j] || row_of[j] < i {
                continue;
            }
            if let Some(path) = reroute(tight, col_of, &row_of, i, row_of[j], j, current) {
                // `path` lists (row, new col) reassignments along the alternating path.
                for &(r, c) in &path {
                    col_of[r] = c;
                    row_of[c] = r;
                }
                col_of[i] = j;
                row_of[j] = i;
                break;
            }
        }
    }
}

/// Searches for an alternating path that moves `start_row` off column `taken`
/// and eventually lands some row on `freed`, using only unfixed rows (index
/// greater than `fixing`).
fn reroute(
    tight: &[Vec<bool>],
    col_of: &[usize],
    row_of: &[usize],
    fixing: usize,
    start_row: usize,
    taken: usize,
    freed: usize,
) -> Option<Vec<(usize, usize)>> {
    let n = col_of.len();
    // parent[col] = row that reached this column during the search
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen_row = vec![false; n];
    let mut queue = VecDeque::from([start_row]);
    seen_row[start_row] = true;
    while let Some(r) = queue.pop_front() {
        for c in 0..n {
            if c == taken || c == col_of[r] || parent[c].is_some() || !tight[r][c] {
                continue;
            }
            parent[c] = Some(r);
            if c == freed {
                let mut path = Vec::new();
                let mut col = c;
                loop {
                    let row = parent[col].expect("column on path has a parent");
                    path.push((row, col));
                    if row == start_row {
                        return Some(path);
                    }
                    col = col_of[row];
                }
            }
            let next = row_of[c];
            if next > fixing && !seen_row[next] {
                seen_row[next] = true;
                queue.push_back(next);
            }
        }
    }
    None
}
