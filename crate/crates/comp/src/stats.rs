//! Scalar statistics: log-gamma, regularized incomplete gamma, the
//! chi-squared survival function, and sample moment statistics.

const MAX_ITER: usize = 300;
const EPS: f64 = 1e-15;

/// Lanczos approximation of ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEF {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Regularized lower incomplete gamma P(a, x) by series expansion
/// (for x < a + 1) or continued fraction (otherwise).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Lentz's method for the continued-fraction form of Q(a, x).
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Upper tail of the chi-squared distribution: P(X >= stat) with `dof`
/// degrees of freedom, via Q(dof/2, stat/2).
pub fn chi2_sf(stat: f64, dof: usize) -> f64 {
    debug_assert!(dof >= 1);
    if stat <= 0.0 {
        return 1.0;
    }
    gamma_q(dof as f64 / 2.0, stat / 2.0)
}

/// Sample skewness g1, excess kurtosis g2, and the Jarque-Bera statistic
/// n (g1^2/6 + g2^2/24) for one sample. Returns None when the sample
/// variance is zero (degenerate direction).
pub fn jarque_bera(xs: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 4 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return None;
    }
    let g1 = m3 / m2.powf(1.5);
    let g2 = m4 / (m2 * m2) - 3.0;
    let jb = n * (g1 * g1 / 6.0 + g2 * g2 / 24.0);
    Some((g1, g2, jb))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Standard error of the mean.
pub fn stderr_mean(xs: &[f64]) -> f64 {
    std_dev(xs) / (xs.len() as f64).sqrt()
}

/// Median by full sort (ties and NaN-free input assumed).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_sf_at_zero_is_one() {
        assert_eq!(chi2_sf(0.0, 1), 1.0);
        assert_eq!(chi2_sf(0.0, 7), 1.0);
    }

    #[test]
    fn chi2_sf_dof1_95th_percentile() {
        // 0.95 quantile of chi-squared with 1 dof
        let p = chi2_sf(3.841459, 1);
        assert!((p - 0.05).abs() < 1e-4, "p = {p}");
    }

    #[test]
    fn chi2_sf_dof2_closed_form() {
        // with 2 dof the tail is exp(-s/2) exactly
        for s in [0.1, 1.0, 2.5, 7.0, 20.0] {
            let p = chi2_sf(s, 2);
            assert!((p - (-s / 2.0).exp()).abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn gamma_p_q_complementary() {
        for (a, x) in [(0.5, 0.3), (2.0, 1.0), (5.0, 9.0), (10.0, 3.0)] {
            let p = gamma_p(a, x);
            let q = gamma_q(a, x);
            assert!((p + q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_p_of_one_is_exponential() {
        // P(1, x) = 1 - e^{-x}
        for x in [0.2, 1.0, 3.0] {
            assert!((gamma_p(1.0, x) - (1.0 - (-x).exp())).abs() < 1e-13);
        }
    }

    #[test]
    fn jarque_bera_degenerate_sample() {
        assert!(jarque_bera(&[2.0; 100]).is_none());
    }

    #[test]
    fn ln_gamma_factorials() {
        // Γ(n) = (n-1)!
        assert!((ln_gamma(5.0) - (24.0f64).ln()).abs() < 1e-10);
        assert!((ln_gamma(1.0)).abs() < 1e-10);
    }
}
