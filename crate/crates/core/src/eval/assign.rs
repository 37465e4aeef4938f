//! Maximum-total-quality one-to-one assignment (Hungarian method).

/// Rows and columns of a rectangular matrix, row-major.
fn dims(matrix: &[Vec<f64>]) -> (usize, usize) {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    debug_assert!(matrix.iter().all(|r| r.len() == cols), "ragged matrix");
    (rows, cols)
}

/// Minimum-cost assignment of every row to a distinct column, `rows <= cols`.
///
/// Shortest augmenting path formulation with row/column potentials; runs in
/// O(rows² · cols). Returns `col_of_row`.
fn hungarian_min(cost: &[Vec<f64>]) -> Vec<usize> {
    let (n, m) = dims(cost);
    debug_assert!(n <= m);
    // 1-based arrays with index 0 as the virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut row_of_col = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for row in 1..=n {
        row_of_col[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[col0] = true;
            let row0 = row_of_col[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for col in 1..=m {
                if used[col] {
                    continue;
                }
                let reduced = cost[row0 - 1][col - 1] - u[row0] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=m {
                if used[col] {
                    u[row_of_col[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if row_of_col[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            row_of_col[col0] = row_of_col[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for col in 1..=m {
        if row_of_col[col] != 0 {
            col_of_row[row_of_col[col] - 1] = col - 1;
        }
    }
    col_of_row
}

/// Maximum-total-quality matching between proposals (rows) and ground-truth
/// objects (columns).
///
/// Rectangular inputs behave as if padded with zero-quality dummies. Pairs
/// whose quality is zero are dropped, so the result only contains real
/// matches. Pairs are returned sorted by row.
pub fn assign(quality: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let (rows, cols) = dims(quality);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut pairs: Vec<(usize, usize)> = if rows <= cols {
        let cost: Vec<Vec<f64>> = quality.iter().map(|r| r.iter().map(|q| -q).collect()).collect();
        hungarian_min(&cost).into_iter().enumerate().collect()
    } else {
        let cost: Vec<Vec<f64>> = (0..cols)
            .map(|c| (0..rows).map(|r| -quality[r][c]).collect())
            .collect();
        hungarian_min(&cost)
            .into_iter()
            .enumerate()
            .map(|(c, r)| (r, c))
            .collect()
    };
    pairs.retain(|&(r, c)| quality[r][c] > 0.0);
    pairs.sort_unstable();
    pairs
}

/// Sum of qualities over `pairs`, accumulated in pair order.
pub fn total_quality(quality: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().fold(0.0, |acc, &(r, c)| acc + quality[r][c])
}
