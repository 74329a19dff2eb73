//! Studentized range quantiles by numerical quadrature of the CDF plus
//! bisection, so any (k, df) pair works without embedded tables.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use super::StatsError;

const GAUSS_POINTS: usize = 128;
const BISECT_TOL: f64 = 1e-5;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on
/// the Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn quadrature_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_POINTS))
}

/// P(range of k standard normals <= w).
fn range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let normal = Normal::standard();
    let (nodes, weights) = quadrature_rule();
    // phi(z) kills the integrand beyond |z| ~ 8.5.
    let (lo, hi) = (-8.5f64, 8.5f64);
    let half = (hi - lo) / 2.0;
    let mid = (hi + lo) / 2.0;
    let mut acc = 0.0;
    for (&t, &gw) in nodes.iter().zip(weights) {
        let z = mid + half * t;
        let inner = normal.cdf(z) - normal.cdf(z - w);
        acc += gw * normal.pdf(z) * inner.powi(k as i32 - 1);
    }
    (k as f64 * half * acc).clamp(0.0, 1.0)
}

/// Log-density of S = sqrt(chi2_df / df), the pooled scale factor.
fn ln_scale_density(s: f64, df: f64) -> f64 {
    std::f64::consts::LN_2 + (df / 2.0) * (df.ln() - std::f64::consts::LN_2)
        - ln_gamma(df / 2.0)
        + (df - 1.0) * s.ln()
        - df * s * s / 2.0
}

/// CDF of the studentized range with k groups and df error degrees of
/// freedom.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let (nodes, weights) = quadrature_rule();
    // S concentrates around 1 with spread ~ 1/sqrt(2 df).
    let spread = 1.0 / (2.0 * df).sqrt();
    let lo = (1.0 - 12.0 * spread).max(0.0);
    let hi = 1.0 + 12.0 * spread;
    let half = (hi - lo) / 2.0;
    let mid = (hi + lo) / 2.0;
    let mut acc = 0.0;
    for (&t, &gw) in nodes.iter().zip(weights) {
        let s = mid + half * t;
        if s <= 0.0 {
            continue;
        }
        acc += gw * ln_scale_density(s, df).exp() * range_cdf(q * s, k);
    }
    (half * acc).clamp(0.0, 1.0)
}

/// Upper quantile: q such that P(Q <= q) = 1 - alpha, to within 1e-4
/// absolute. Results are memoized per (alpha, k, df).
pub fn studentized_range_quantile(alpha: f64, k: usize, df: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::BadAlpha(alpha));
    }
    if k < 2 {
        return Err(StatsError::TooFewGroups(k));
    }
    if !(df >= 1.0) || !df.is_finite() {
        return Err(StatsError::BadDegreesOfFreedom(df));
    }

    static MEMO: OnceLock<Mutex<HashMap<(u64, usize, u64), f64>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (alpha.to_bits(), k, df.to_bits());
    if let Some(&q) = memo.lock().expect("memo poisoned").get(&key) {
        return Ok(q);
    }

    let target = 1.0 - alpha;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut expansions = 0;
    while studentized_range_cdf(hi, k, df) < target {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 24 {
            return Err(StatsError::NonConvergence(format!(
                "quantile bracket exceeded {hi} for alpha={alpha}, k={k}, df={df}"
            )));
        }
    }
    while hi - lo > BISECT_TOL {
        let mid = (lo + hi) / 2.0;
        if studentized_range_cdf(mid, k, df) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = (lo + hi) / 2.0;
    memo.lock().expect("memo poisoned").insert(key, q);
    Ok(q)
}
