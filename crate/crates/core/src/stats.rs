//! Small fitting helpers shared by the experiments.

/// Least-squares slope of y against x.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Slope of log y against log x, skipping nonpositive entries.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    fit_slope(&lx, &ly)
}

/// max(a/b, b/a) - 1, the relative spread used for refinement stability.
pub fn relative_spread(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if lo <= 0.0 {
        return f64::INFINITY;
    }
    hi / lo - 1.0
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// sup over lambda of lambda |{|v| > lambda}| / l1, each entry carrying
/// measure `cell_volume`.
pub fn weak_type_ratio(values: &[f64], cell_volume: f64, l1: f64) -> f64 {
    if l1 <= 0.0 {
        return 0.0;
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let mut best = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        best = best.max(x * (i + 1) as f64);
    }
    best * cell_volume / l1
}

/// Empirical q-quantile (nearest rank) of finite values.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().cloned().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slopes() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-2.0)).collect();
        assert!((loglog_slope(&xs, &ys) + 2.0).abs() < 1e-12);
        assert!((fit_slope(&[0.0, 1.0], &[1.0, 3.0]) - 2.0).abs() < 1e-15);
        assert!((relative_spread(1.0, 1.2) - 0.2).abs() < 1e-12);
        assert_eq!(quantile(&[3.0, 1.0, 2.0, 4.0], 0.5), 2.0);
        // a single unit spike: lambda |{v > lambda}| peaks at lambda -> 1
        assert_eq!(weak_type_ratio(&[1.0, 0.0, 0.0], 1.0, 1.0), 1.0);
    }
}
