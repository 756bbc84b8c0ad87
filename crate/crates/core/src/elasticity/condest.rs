use faer::sparse::SparseColMat;

/// Exact 1-norm (max column sum) of a sparse matrix.
pub fn one_norm(a: &SparseColMat<usize, f64>) -> f64 {
    let s = a.symbolic();
    let v = a.val();
    (0..a.ncols())
        .map(|j| s.col_range(j).map(|i| v[i].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Hager's estimate of `||A^-1||_1` for symmetric `A`, given the action of the
/// inverse, with Higham's alternating test vector as a safeguard.
pub fn hager_higham(n: usize, solve: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    let mut last = usize::MAX;
    for _ in 0..5 {
        let y = solve(&x);
        est = l1(&y);
        let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        // symmetric, so the transpose solve is the same solve
        let z = solve(&xi);
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.abs()))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= ztx || j == last {
            break;
        }
        last = j;
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    let alt: Vec<f64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        })
        .collect();
    let alt_est = 2.0 * l1(&solve(&alt)) / (3.0 * n as f64);
    est.max(alt_est)
}
