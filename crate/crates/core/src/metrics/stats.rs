//! Scalar statistics: Student-t tails, paired t-test, Pearson correlation and
//! interpolated quantiles.

use statrs::function::beta::checked_beta_reg;

use super::MetricsError;

/// Two-sided tail probability `P(|T| >= |t|)` for Student's t with `df`
/// degrees of freedom, via the regularized incomplete beta function:
/// `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    checked_beta_reg(df / 2.0, 0.5, x)
        .unwrap_or(f64::NAN)
        .clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedT {
    pub n: usize,
    pub mean_difference: f64,
    pub t: f64,
    pub df: usize,
    pub p: f64,
}

/// Paired t-test on differences `a[i] - b[i]`; sample standard deviation
/// with an `n - 1` denominator.
pub fn paired_t(differences: &[f64]) -> Result<PairedT, MetricsError> {
    let n = differences.len();
    if n < 2 {
        return Err(MetricsError::InsufficientPairs(n));
    }
    let nf = n as f64;
    let mean = differences.iter().sum::<f64>() / nf;
    let var = differences.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    let t = if sd == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        }
    } else {
        mean / (sd / nf.sqrt())
    };
    let df = n - 1;
    Ok(PairedT {
        n,
        mean_difference: mean,
        t,
        df,
        p: student_t_two_sided_p(t, df as f64),
    })
}

/// Product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::DegenerateInput(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Err(MetricsError::DegenerateInput(format!(
            "need at least 2 points, got {n}"
        )));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::DegenerateInput("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Quantile with linear interpolation between order statistics at
/// zero-based position `(n - 1) * p`. `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn iqr(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn worked_paired_example() {
        let r = paired_t(&[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(r.t, 12f64.sqrt(), epsilon = 1e-12);
        assert_eq!(r.df, 2);
        // df = 2 closed form: p = 1 - t / sqrt(2 + t^2)
        let expected = 1.0 - r.t / (2.0 + r.t * r.t).sqrt();
        assert_abs_diff_eq!(r.p, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p, 0.0742, epsilon = 1e-4);
    }

    #[test]
    fn zero_differences() {
        let r = paired_t(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
        let r = paired_t(&[1.0, 1.0]).unwrap();
        assert!(r.t.is_infinite());
        assert_eq!(r.p, 0.0);
    }

    #[test]
    fn too_few_pairs() {
        assert!(matches!(
            paired_t(&[1.0]),
            Err(MetricsError::InsufficientPairs(1))
        ));
    }

    #[test]
    fn cauchy_tail() {
        // df = 1: p = 1 - 2 atan(t) / pi
        for t in [0.1, 1.0, 3.0, 30.0] {
            let expected = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            assert_abs_diff_eq!(student_t_two_sided_p(t, 1.0), expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn pearson_cases() {
        assert_abs_diff_eq!(
            pearson(&[1., 2., 3.], &[2., 4., 6.]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            pearson(&[1., 2., 3.], &[6., 4., 2.]).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            pearson(&[1., 2., 3.], &[1., 3., 2.]).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(pearson(&[1., 1., 1.], &[1., 2., 3.]).is_err());
        assert!(pearson(&[1.], &[1.]).is_err());
        assert!(pearson(&[1., 2.], &[1.]).is_err());
    }

    #[test]
    fn iqr_interpolates() {
        assert_abs_diff_eq!(
            quantile_sorted(&[1., 2., 3., 4.], 0.25),
            1.75,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            quantile_sorted(&[1., 2., 3., 4.], 0.75),
            3.25,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(iqr(&[4., 1., 3., 2.]), 1.5, epsilon = 1e-15);
        assert_eq!(iqr(&[2.5]), 0.0);
        assert_eq!(iqr(&[3., 3., 3.]), 0.0);
    }
}
