use serde::{Deserialize, Serialize};

use super::fit::FitResult;
use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const CF_EPS: f64 = 1e-12;
const CF_MAX_ITER: usize = 500;
const CF_TINY: f64 = 1e-300;

/// Continued fraction of `I_x(a, b)` evaluated by the modified Lentz method.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("incomplete beta needs a, b > 0 and 0 <= x <= 1, got ({a}, {b}, {x})")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b)
    } else {
        Ok(front * beta_continued_fraction(a, b, x) / a)
    }
}

/// CDF of the Fisher–Snedecor distribution with `(d1, d2)` degrees of freedom.
pub fn f_distribution_cdf(x: f64, d1: usize, d2: usize) -> Result<f64> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidArgument(format!("degrees of freedom must be >= 1, got ({d1}, {d2})")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("F quantile must be >= 0, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let (a, b) = (d1 as f64, d2 as f64);
    regularized_incomplete_beta(a / 2.0, b / 2.0, a * x / (a * x + b))
}

/// Overall Fisher test of all non-intercept coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FTest {
    /// Infinite for an exact fit.
    pub f: f64,
    pub p_value: f64,
    pub df1: usize,
    pub df2: usize,
    /// SSE vanished relative to the total variation.
    pub exact_fit: bool,
}

/// Relative size below which the centered variation of Y counts as zero.
const CONSTANT_TOL: f64 = 1e-24;
/// Relative size of SSE below which the fit counts as exact.
const EXACT_FIT_TOL: f64 = 1e-20;

pub fn overall_f_test(fit: &FitResult) -> Result<FTest> {
    let (n, m) = (fit.n, fit.m());
    if n <= m || m < 2 {
        return Err(Error::TooFewObservations { n, m });
    }
    let (df1, df2) = (m - 1, n - m);
    if fit.sst <= CONSTANT_TOL * fit.sum_y2 {
        return Ok(FTest { f: 0.0, p_value: 1.0, df1, df2, exact_fit: false });
    }
    if fit.sse <= EXACT_FIT_TOL * fit.sst {
        return Ok(FTest { f: f64::INFINITY, p_value: 0.0, df1, df2, exact_fit: true });
    }
    let ssr = (fit.sst - fit.sse).max(0.0);
    let f = (ssr / df1 as f64) / (fit.sse / df2 as f64);
    // upper tail directly, so small p-values keep their relative accuracy
    let (a, b) = (df1 as f64, df2 as f64);
    let p_value = regularized_incomplete_beta(b / 2.0, a / 2.0, b / (b + a * f))?.clamp(0.0, 1.0);
    Ok(FTest { f, p_value, df1, df2, exact_fit: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::{full_factorial_2, MultivariateDesign};
    use crate::rng::{standard_normal, StreamKey};
    use crate::surface::{design_matrix, fit_least_squares, ModelOrder};
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, FisherSnedecor};
    use statrs::function::gamma::ln_gamma as statrs_ln_gamma;

    #[test]
    fn symmetric_case_is_one_half() {
        assert!((f_distribution_cdf(1.0, 7, 7).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn two_numerator_degrees_closed_form() {
        for k in 1..=100 {
            let x = k as f64 * 0.1;
            let exact = 1.0 - (1.0 + 0.2 * x).powf(-5.0);
            assert!((f_distribution_cdf(x, 2, 10).unwrap() - exact).abs() < 1e-10, "x={x}");
        }
        assert!((f_distribution_cdf(1.0, 2, 10).unwrap() - 0.598_122).abs() < 1e-6);
    }

    #[test]
    fn domain() {
        assert_eq!(f_distribution_cdf(0.0, 3, 4).unwrap(), 0.0);
        assert_eq!(f_distribution_cdf(f64::INFINITY, 3, 4).unwrap(), 1.0);
        assert!(f_distribution_cdf(-1.0, 3, 4).is_err());
        assert!(f_distribution_cdf(1.0, 0, 4).is_err());
        assert!(f_distribution_cdf(f64::NAN, 3, 4).is_err());
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cdf_matches_reference(x in 0.0f64..50.0, d1 in 1usize..60, d2 in 1usize..300) {
            let reference = FisherSnedecor::new(d1 as f64, d2 as f64).unwrap().cdf(x);
            let ours = f_distribution_cdf(x, d1, d2).unwrap();
            prop_assert!((ours - reference).abs() < 1e-10, "{ours} vs {reference}");
        }

        #[test]
        fn ln_gamma_matches_reference(x in 0.01f64..200.0) {
            let r = statrs_ln_gamma(x);
            prop_assert!((ln_gamma(x) - r).abs() < 1e-12 * r.abs().max(1.0));
        }

        #[test]
        fn p_value_is_a_probability(seed in any::<u64>(), slope in -3.0f64..3.0) {
            let design = full_factorial_2(3).unwrap();
            let xv = design_matrix(&design, ModelOrder::First);
            let mut rng = StreamKey::new(seed).rng();
            let y: Vec<f64> = (0..8).map(|i| slope * design.point(i)[0] + standard_normal(&mut rng)).collect();
            let t = overall_f_test(&fit_least_squares(&xv, &y).unwrap()).unwrap();
            prop_assert!((0.0..=1.0).contains(&t.p_value));
        }
    }

    #[test]
    fn constant_response() {
        let xv = design_matrix(&full_factorial_2(3).unwrap(), ModelOrder::First);
        let t = overall_f_test(&fit_least_squares(&xv, &[4.2; 8]).unwrap()).unwrap();
        assert_eq!((t.f, t.p_value), (0.0, 1.0));
    }

    #[test]
    fn exact_fit_is_flagged() {
        let design = full_factorial_2(3).unwrap();
        let xv = design_matrix(&design, ModelOrder::First);
        let y: Vec<f64> = (0..8).map(|i| 1.0 + 2.0 * design.point(i)[1]).collect();
        let t = overall_f_test(&fit_least_squares(&xv, &y).unwrap()).unwrap();
        assert!(t.exact_fit);
        assert_eq!(t.p_value, 0.0);
    }

    #[test]
    fn strong_signal_against_closed_form() {
        let design = full_factorial_2(8).unwrap();
        let xv = design_matrix(&design, ModelOrder::First);
        let mut rng = StreamKey::new(3).rng();
        let y: Vec<f64> = (0..256)
            .map(|i| design.point(i).iter().sum::<f64>() + 0.1 * standard_normal(&mut rng))
            .collect();
        let fit = fit_least_squares(&xv, &y).unwrap();
        let t = overall_f_test(&fit).unwrap();
        let by_hand = ((fit.sst - fit.sse) / 8.0) / (fit.sse / 247.0);
        assert!((t.f - by_hand).abs() < 1e-9 * by_hand);
        assert_eq!((t.df1, t.df2), (8, 247));
        assert!(t.p_value < 1e-10);
    }

    #[test]
    fn null_p_values_are_uniform() {
        // slopes exactly zero, noise only: P(p > 0.8) = 0.2
        let design = full_factorial_2(4).unwrap();
        let xv = design_matrix(&design, ModelOrder::First);
        let runs = 4000;
        let mut above = 0;
        for s in 0..runs {
            let mut rng = StreamKey::new(s).rng();
            let y: Vec<f64> = (0..16).map(|_| 0.1 * standard_normal(&mut rng)).collect();
            if overall_f_test(&fit_least_squares(&xv, &y).unwrap()).unwrap().p_value > 0.8 {
                above += 1;
            }
        }
        let rate = above as f64 / runs as f64;
        // binomial sd is about 0.0063
        assert!((rate - 0.2).abs() < 0.03, "{rate}");
    }

    #[test]
    fn saturated_fit_has_no_test() {
        let xv = design_matrix(&full_factorial_2(2).unwrap(), ModelOrder::First);
        let fit = fit_least_squares(&xv, &[1.0, 2.0, 4.0, 3.0]).unwrap();
        assert!(overall_f_test(&fit).is_ok());
        let tiny = MultivariateDesign::from_points(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let fit = fit_least_squares(&design_matrix(&tiny, ModelOrder::First), &[1.0, 2.0, 4.0]).unwrap();
        assert!(matches!(overall_f_test(&fit), Err(Error::TooFewObservations { n: 3, m: 3 })));
    }
}
