use serde::{Deserialize, Serialize};

use super::AnalyticsError;

const EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;
const BISECTION_TOL: f64 = 1e-10;

/// Natural log of the gamma function (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta, modified Lentz.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Smallest x with I_x(a, b) >= p, by bisection.
pub fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if regularized_incomplete_beta(mid, a, b) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact binomial interval from beta quantiles.
pub fn clopper_pearson_ci(successes: u64, trials: u64, level: f64) -> Result<(f64, f64), AnalyticsError> {
    if trials == 0 || successes > trials {
        return Err(AnalyticsError::InvalidCounts { successes, trials });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(AnalyticsError::InvalidLevel(level));
    }
    let alpha = 1.0 - level;
    let (s, n) = (successes as f64, trials as f64);
    let lower = if successes == 0 {
        0.0
    } else {
        beta_quantile(alpha / 2.0, s, n - s + 1.0)
    };
    let upper = if successes == trials {
        1.0
    } else {
        beta_quantile(1.0 - alpha / 2.0, s + 1.0, n - s)
    };
    Ok((lower, upper))
}

/// Standard normal CDF, Hart's double-precision rational approximation.
pub fn normal_cdf(z: f64) -> f64 {
    let x = z.abs();
    let c = if x > 37.0 {
        0.0
    } else {
        let e = (-x * x / 2.0).exp();
        if x < 7.071_067_811_865_47 {
            let mut n = 3.526_249_659_989_11e-2 * x + 0.700_383_064_443_688;
            n = n * x + 6.373_962_203_531_65;
            n = n * x + 33.912_866_078_383;
            n = n * x + 112.079_291_497_871;
            n = n * x + 221.213_596_169_931;
            n = n * x + 220.206_867_912_376;
            let mut d = 8.838_834_764_831_84e-2 * x + 1.755_667_163_182_64;
            d = d * x + 16.064_177_579_207;
            d = d * x + 86.780_732_202_946_1;
            d = d * x + 296.564_248_779_674;
            d = d * x + 637.333_633_378_831;
            d = d * x + 793.826_512_519_948;
            d = d * x + 440.413_735_824_752;
            e * n / d
        } else {
            let mut b = x + 0.65;
            b = x + 4.0 / b;
            b = x + 3.0 / b;
            b = x + 2.0 / b;
            b = x + 1.0 / b;
            e / b / 2.506_628_274_631
        }
    };
    if z > 0.0 {
        1.0 - c
    } else {
        c
    }
}

/// Student t CDF with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let t2 = t * t;
    // near zero df / (df + t^2) rounds to 1, so use the complement there
    let tail = if t2 < df {
        0.5 * (1.0 - regularized_incomplete_beta(t2 / (df + t2), 0.5, df / 2.0))
    } else {
        0.5 * regularized_incomplete_beta(df / (df + t2), df / 2.0, 0.5)
    };
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Quantile of the Student t distribution, by bisection.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    let (mut lo, mut hi) = (-1e3f64, 1e3f64);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZTestResult {
    pub z: f64,
    /// P(Z >= z): evidence that group 1 exceeds group 2.
    pub p_one_tailed: f64,
    pub p_two_tailed: f64,
    pub pooled: f64,
}

/// Pooled two-proportion z-test of group 1 against group 2.
pub fn two_proportion_ztest(s1: u64, n1: u64, s2: u64, n2: u64) -> Result<ZTestResult, AnalyticsError> {
    if n1 == 0 || s1 > n1 {
        return Err(AnalyticsError::InvalidCounts {
            successes: s1,
            trials: n1,
        });
    }
    if n2 == 0 || s2 > n2 {
        return Err(AnalyticsError::InvalidCounts {
            successes: s2,
            trials: n2,
        });
    }
    let pooled = (s1 + s2) as f64 / (n1 + n2) as f64;
    let var = pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64);
    if var <= 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    let z = (s1 as f64 / n1 as f64 - s2 as f64 / n2 as f64) / var.sqrt();
    let p_one_tailed = 1.0 - normal_cdf(z);
    let p_two_tailed = (2.0 * p_one_tailed.min(1.0 - p_one_tailed)).min(1.0);
    Ok(ZTestResult {
        z,
        p_one_tailed,
        p_two_tailed,
        pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_of_integers() {
        for (n, fact) in [(1.0, 1.0f64), (5.0, 24.0), (10.0, 362_880.0)] {
            assert!((ln_gamma(n) - fact.ln()).abs() < 1e-10);
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-10);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x and I_x(a, 1) = x^a
        assert!((regularized_incomplete_beta(0.3, 1.0, 1.0) - 0.3).abs() < 1e-12);
        assert!((regularized_incomplete_beta(0.3, 3.0, 1.0) - 0.027).abs() < 1e-12);
        assert!(
            (regularized_incomplete_beta(0.4, 2.0, 3.0) + regularized_incomplete_beta(0.6, 3.0, 2.0) - 1.0).abs()
                < 1e-12
        );
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-12);
    }

    #[test]
    fn t_quantiles() {
        assert!((student_t_quantile(0.975, 1.0) - 12.706_204_736).abs() < 1e-6);
        assert!((student_t_quantile(0.975, 49.0) - 2.009_575_237).abs() < 1e-6);
        assert!(
            student_t_quantile(0.5, 7.0).abs() < 1e-9,
            "{}",
            student_t_quantile(0.5, 7.0)
        );
    }

    #[test]
    fn boundaries() {
        assert_eq!(clopper_pearson_ci(0, 10, 0.95).unwrap().0, 0.0);
        assert_eq!(clopper_pearson_ci(10, 10, 0.95).unwrap().1, 1.0);
        // 0/10 upper is 1 - 0.025^(1/10)
        let up = clopper_pearson_ci(0, 10, 0.95).unwrap().1;
        assert!((up - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
        assert!(clopper_pearson_ci(11, 10, 0.95).is_err());
        assert!(clopper_pearson_ci(0, 0, 0.95).is_err());
    }

    #[test]
    fn ztest_by_hand() {
        let r = two_proportion_ztest(9, 10, 1, 10).unwrap();
        let z = 0.8 / (0.25f64 * 0.2).sqrt();
        assert!((r.z - z).abs() < 1e-12);
        assert!((r.z - 3.578).abs() < 1e-3);
        let eq = two_proportion_ztest(3, 10, 3, 10).unwrap();
        assert_eq!((eq.z, eq.p_one_tailed), (0.0, 0.5));
        assert_eq!(two_proportion_ztest(0, 5, 0, 7), Err(AnalyticsError::ZeroVariance));
    }

    #[test]
    fn ztest_antisymmetry() {
        let a = two_proportion_ztest(26, 43, 11, 29).unwrap();
        let b = two_proportion_ztest(11, 29, 26, 43).unwrap();
        assert!((a.z + b.z).abs() < 1e-12);
        assert!((a.p_one_tailed - (1.0 - b.p_one_tailed)).abs() < 1e-12);
        assert!((a.p_two_tailed - b.p_two_tailed).abs() < 1e-12);
    }
}
