//! Least-squares slope fitting for decay and scaling reports.

/// Ordinary least squares fit y = slope * x + intercept.
/// Returns None with fewer than two points or a degenerate x spread.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of log2(y) against log2(x); points with y <= 0 are skipped.
pub fn log2_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(ys.len());
    for (x, y) in xs.iter().zip(ys) {
        if *x > 0.0 && *y > 0.0 {
            lx.push(x.log2());
            ly.push(y.log2());
        }
    }
    least_squares(&lx, &ly).map(|(s, _)| s)
}
