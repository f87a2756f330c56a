//! Small estimators shared by the experiments.

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Nearest-rank quantile of a sample; `+inf` entries are allowed and sort
/// last.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

/// Distribution-free 95% confidence interval for the `q`-quantile from
/// order statistics (normal approximation to the binomial).
pub fn quantile_ci(xs: &[f64], q: f64) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let half = 1.96 * (n * q * (1.0 - q)).sqrt();
    let lo = ((n * q - half).floor() as isize).clamp(1, v.len() as isize) as usize;
    let hi = ((n * q + half).ceil() as isize).clamp(1, v.len() as isize) as usize;
    (v[lo - 1], v[hi - 1])
}

/// Jackknife estimate and standard error of `stat` over `groups`.
pub fn jackknife<T>(groups: &[T], stat: impl Fn(&[&T]) -> f64) -> (f64, f64) {
    let all: Vec<&T> = groups.iter().collect();
    let full = stat(&all);
    let n = groups.len();
    if n < 2 {
        return (full, f64::INFINITY);
    }
    let loo: Vec<f64> = (0..n)
        .map(|i| {
            let sub: Vec<&T> = all.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| *g).collect();
            stat(&sub)
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() * (n as f64 - 1.0) / n as f64;
    (full, var.sqrt())
}

/// Standard error of a proportion estimated from `n` trials.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
