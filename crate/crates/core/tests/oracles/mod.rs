//! Reference computations kept independent of the library's code paths.
#![allow(dead_code, clippy::needless_range_loop)]

/// Alpha by direct pair counting: observed disagreement is the fraction of
/// disagreeing annotator pairs within units; expected disagreement is the
/// fraction of disagreeing pairs among all pooled values.
pub fn alpha_pairwise(rows: &[Vec<bool>]) -> Option<f64> {
    let m = rows.len();
    if m < 2 {
        return None;
    }
    let units = rows[0].len();
    let (mut within_pairs, mut within_disagree) = (0u64, 0u64);
    for u in 0..units {
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    within_pairs += 1;
                    if rows[i][u] != rows[j][u] {
                        within_disagree += 1;
                    }
                }
            }
        }
    }
    let pooled: Vec<bool> = rows.iter().flatten().copied().collect();
    let (mut all_pairs, mut all_disagree) = (0u64, 0u64);
    for i in 0..pooled.len() {
        for j in 0..pooled.len() {
            if i != j {
                all_pairs += 1;
                if pooled[i] != pooled[j] {
                    all_disagree += 1;
                }
            }
        }
    }
    if all_disagree == 0 {
        return Some(1.0);
    }
    let d_o = within_disagree as f64 / within_pairs as f64;
    let d_e = all_disagree as f64 / all_pairs as f64;
    Some(1.0 - d_o / d_e)
}

/// Two-sided Student-t tail `P(|T| >= t)` for integer `df`, from the
/// finite trigonometric series for `A(t | df)`.
pub fn t_two_sided_series(t: f64, df: u32) -> f64 {
    let theta = (t.abs() / f64::from(df).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let a = if df % 2 == 1 {
        let mut sum = 0.0;
        if df > 1 {
            let mut term = c;
            sum = term;
            let mut k = 3;
            while k < df {
                // term_k = term_{k-2} * (k - 1) / k * cos^2
                term *= f64::from(k - 1) / f64::from(k) * c * c;
                sum += term;
                k += 2;
            }
        }
        2.0 / std::f64::consts::PI * (theta + s * sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 2;
        while k < df {
            term *= f64::from(k - 1) / f64::from(k) * c * c;
            sum += term;
            k += 2;
        }
        s * sum
    };
    1.0 - a
}

pub fn pearson_direct(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Binomial pmf table for `n` trials.
fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    let mut coeff = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            coeff *= (n - k + 1) as f64 / k as f64;
        }
        pmf[k] = coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
    }
    pmf
}

/// For independent per-token mark counts `X_j ~ Bin(n, p_j)`, returns
/// `(P(argmax in target and max >= 1), P(max >= 1))` where argmax breaks
/// ties to the lowest index.
pub fn argmax_probabilities(n: usize, probs: &[f64], target: &[bool]) -> (f64, f64) {
    let pmfs: Vec<Vec<f64>> = probs.iter().map(|&p| binomial_pmf(n, p)).collect();
    let cdf = |j: usize, c: usize| -> f64 { pmfs[j][..=c].iter().sum() };
    let mut hit = 0.0;
    let mut any = 0.0;
    for j in 0..probs.len() {
        for c in 1..=n {
            let mut p = pmfs[j][c];
            for i in 0..probs.len() {
                if i < j {
                    p *= cdf(i, c - 1);
                } else if i > j {
                    p *= cdf(i, c);
                }
            }
            any += p;
            if target[j] {
                hit += p;
            }
        }
    }
    (hit, any)
}
