//! Small statistics helpers shared by the comparison reports and tests.

use crate::scalar::Real;

/// Sample mean and standard error.
pub fn mean_se<S: Real>(xs: &[S]) -> (S, S) {
    let n = S::from_usize(xs.len()).unwrap();
    let mean = xs.iter().copied().sum::<S>() / n;
    if xs.len() < 2 {
        return (mean, S::zero());
    }
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<S>()
        / S::from_usize(xs.len() - 1).unwrap();
    (mean, (var / n).sqrt())
}

pub fn median<S: Real>(xs: &[S]) -> S {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / S::from_usize(2).unwrap()
    }
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample<S: Real>(a: &[S], b: &[S]) -> S {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    xb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = S::zero();
    while i < na && j < nb {
        // consume every entry tied at the current smallest value before
        // comparing the empirical CDFs
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        let fa = S::from_usize(i).unwrap() / S::from_usize(na).unwrap();
        let fb = S::from_usize(j).unwrap() / S::from_usize(nb).unwrap();
        d = d.max((fa - fb).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF.
pub fn ks_one_sample<S: Real>(xs: &[S], cdf: impl Fn(S) -> S) -> S {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = S::from_usize(v.len()).unwrap();
    let mut d = S::zero();
    for (i, x) in v.iter().enumerate() {
        let f = cdf(*x);
        let lo = S::from_usize(i).unwrap() / n;
        let hi = S::from_usize(i + 1).unwrap() / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ks_two_sample_of_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(ks_two_sample::<f64>(&a, &a), 0.0);
    }

    #[test]
    fn ks_two_sample_disjoint_is_one() {
        let a = [1.0, 2.0];
        let b = [10.0, 11.0];
        assert_abs_diff_eq!(ks_two_sample::<f64>(&a, &b), 1.0);
    }

    #[test]
    fn median_and_mean() {
        assert_abs_diff_eq!(median::<f64>(&[3.0, 1.0, 2.0]), 2.0);
        assert_abs_diff_eq!(median::<f64>(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let (m, se) = mean_se::<f64>(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(m, 2.0);
        assert_abs_diff_eq!(se, (1.0f64 / 3.0).sqrt());
    }
}
