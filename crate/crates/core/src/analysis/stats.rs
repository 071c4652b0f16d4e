//! Small descriptive statistics used by the depth aggregations.

/// Type-7 (linear interpolation) quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Five-number summary with Tukey whiskers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Smallest observation within `q1 - 1.5 IQR`.
    pub whisker_lo: f64,
    /// Largest observation within `q3 + 1.5 IQR`.
    pub whisker_hi: f64,
    pub min: f64,
    pub max: f64,
    pub outlier_count: usize,
}

impl BoxStats {
    pub fn from_values(values: &[f64]) -> Option<BoxStats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&v, 0.25);
        let median = quantile_sorted(&v, 0.5);
        let q3 = quantile_sorted(&v, 0.75);
        let iqr = q3 - q1;
        let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
        let inside = || v.iter().copied().filter(|x| (lo_fence..=hi_fence).contains(x));
        Some(BoxStats {
            n: v.len(),
            mean: mean(&v),
            median,
            q1,
            q3,
            // Interpolated quartiles can lie beyond the last in-fence sample;
            // whiskers never end inside the box.
            whisker_lo: inside().next().map_or(q1, |x| x.min(q1)),
            whisker_hi: inside().next_back().map_or(q3, |x| x.max(q3)),
            min: v[0],
            max: v[v.len() - 1],
            outlier_count: v.len() - inside().count(),
        })
    }
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; zero when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Least-squares slope of `y` on `x`; zero when `x` is constant.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx <= 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.25), 1.75);
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.75), 3.25);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn box_with_outlier() {
        let b = BoxStats::from_values(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        // q1 = 2, q3 = 4, fences at -1 and 7.
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert_eq!((b.whisker_lo, b.whisker_hi), (1.0, 4.0));
        assert_eq!(b.outlier_count, 1);
        assert_eq!((b.min, b.max), (1.0, 100.0));
        assert_eq!(b.mean, 22.0);
        assert!(BoxStats::from_values(&[]).is_none());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
        // Rank by counting, independently of the sort-based ranker.
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|a| {
                    let less = v.iter().filter(|b| *b < a).count() as f64;
                    let eq = v.iter().filter(|b| *b == a).count() as f64;
                    less + (eq + 1.0) / 2.0
                })
                .collect()
        };
        let (rx, ry) = (rank(x), rank(y));
        let n = x.len() as f64;
        let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        if vx == 0.0 || vy == 0.0 {
            0.0
        } else {
            cov / (vx * vy).sqrt()
        }
    }

    #[test]
    fn whisker_never_inside_box() {
        let b = BoxStats::from_values(&[0.0, 0.0, 0.0, 100.0]).unwrap();
        assert_eq!((b.q3, b.whisker_hi, b.outlier_count), (25.0, 25.0, 1));
    }

    proptest! {
        #[test]
        fn box_invariants(v in prop::collection::vec(-1e6f64..1e6, 1..200)) {
            let b = BoxStats::from_values(&v).unwrap();
            prop_assert!(b.min <= b.whisker_lo && b.whisker_lo <= b.q1 + 1e-9);
            prop_assert!(b.q1 <= b.median && b.median <= b.q3);
            prop_assert!(b.q3 <= b.whisker_hi + 1e-9 && b.whisker_hi <= b.max);
            let iqr = b.q3 - b.q1;
            prop_assert!(b.whisker_lo >= b.q1 - 1.5 * iqr - 1e-9);
            prop_assert!(b.whisker_hi <= b.q3 + 1.5 * iqr + 1e-9);
        }

        #[test]
        fn spearman_matches_brute_force(y in prop::collection::vec(0u8..6, 3..30)) {
            let x: Vec<f64> = (0..y.len()).map(|i| i as f64).collect();
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            prop_assert!((spearman(&x, &y) - brute_spearman(&x, &y)).abs() < 1e-9);
        }

        #[test]
        fn slope_recovers_lines(a in -10f64..10.0, b in -10f64..10.0, n in 2usize..20) {
            let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let y: Vec<f64> = x.iter().map(|x| a * x + b).collect();
            prop_assert!((ols_slope(&x, &y) - a).abs() < 1e-6);
        }
    }
}
