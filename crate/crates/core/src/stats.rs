//! Order-fixed reductions. Inputs are always indexed by path, so the same
//! values reduce to the same bits regardless of thread count.

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Mean and standard error `s/√n` (sample standard deviation `s`).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return (m, if n == 1 { 0.0 } else { f64::NAN });
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Least-squares slope of `ys` against `ts`.
pub fn ls_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let tm = mean(ts);
    let ym = mean(ys);
    let num: Vec<f64> = ts.iter().zip(ys).map(|(t, y)| (t - tm) * (y - ym)).collect();
    let den: Vec<f64> = ts.iter().map(|t| (t - tm) * (t - tm)).collect();
    pairwise_sum(&num) / pairwise_sum(&den)
}

/// Total-variation distance between two histograms of equal length.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn slope_of_line() {
        let ts = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = ts.iter().map(|t| 2.5 - 0.75 * t).collect();
        assert!((ls_slope(&ts, &ys) + 0.75).abs() < 1e-14);
    }

    #[test]
    fn se_of_constant_is_zero() {
        assert_eq!(mean_se(&[4.0; 10]), (4.0, 0.0));
    }

    proptest! {
        #[test]
        fn pairwise_matches_naive(xs in proptest::collection::vec(-1e3f64..1e3, 0..200)) {
            let naive: f64 = xs.iter().sum();
            prop_assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
        }
    }
}
