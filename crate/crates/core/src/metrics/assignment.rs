/// Maximum-weight assignment on a rectangular `rows x cols` weight matrix
/// (row-major). Returns, for each row, the matched column or `None`.
///
/// Entries that are not admissible should carry weight 0; they never raise
/// the optimum, so a matched pair with weight 0 is equivalent to no match.
/// Uses the O(n^3) shortest augmenting path method with potentials on the
/// zero-padded square matrix.
pub fn max_weight_assignment(weights: &[f64], rows: usize, cols: usize) -> Vec<Option<usize>> {
    assert_eq!(weights.len(), rows * cols, "weight matrix shape");
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let max_w = weights.iter().copied().fold(0.0, f64::max);
    // Costs are non-negative: cost = max_w - w, padding costs max_w.
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            max_w - weights[i * cols + j]
        } else {
            max_w
        }
    };
    // 1-based arrays; p[j] is the row matched to column j.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
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
    let mut out = vec![None; rows];
    for (j, &i) in p.iter().enumerate().skip(1) {
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}
