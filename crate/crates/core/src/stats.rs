//! Small statistical helpers for the simulation harness.

use serde::{Deserialize, Serialize};

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standard error of the mean (sample standard deviation over `sqrt(n)`).
pub fn std_error(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> LogLogFit {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LogLogFit {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_stderr = if n > 2.0 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LogLogFit {
        slope,
        intercept,
        slope_stderr,
    }
}

/// One-sided sign test: `P(X >= wins)` for `X ~ Binomial(trials, 1/2)`.
pub fn sign_test_p_value(wins: usize, trials: usize) -> f64 {
    if wins > trials {
        return 0.0;
    }
    let mut total = 0.0;
    let mut coef = 1.0f64; // C(trials, 0)
    for k in 0..=trials {
        if k >= wins {
            total += coef;
        }
        coef = coef * (trials - k) as f64 / (k + 1) as f64;
    }
    total / 2f64.powi(trials as i32)
}
