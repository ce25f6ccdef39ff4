//! Self-contained statistical primitives: special functions (log-gamma,
//! regularized incomplete beta/gamma), F and chi-squared survival functions,
//! Levene's test, one-way ANOVA, Cochran's Q, and OLS with t-based confidence
//! intervals.
//!
//! Everything here is implemented in-tree and pinned against independently
//! computed reference values (SciPy / statsmodels / mpmath) in the test
//! module, so the rest of the crate can treat these as self-verifying.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("degenerate group: need at least 2 groups with 2 observations each")]
    DegenerateGroup,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("rank-deficient design matrix")]
    RankDeficient,
}

/// Degrees of freedom attached to a test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Df {
    F { numerator: usize, denominator: usize },
    Chi2 { df: usize },
}

/// Outcome of a hypothesis test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: Df,
    pub p_value: f64,
    pub effect_size: Option<f64>,
}

/// OLS fit of `y` on predictor columns plus an intercept.
///
/// `ci95[i]` pairs with `coefficients[i]`; the last entry of `ci95` belongs
/// to the intercept. Intervals are two-sided t intervals with
/// `n - p - 1` degrees of freedom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub ci95: Vec<(f64, f64)>,
    pub residual_variance: f64,
}

// Lanczos approximation, g = 607/128, 15 terms (Godfrey's coefficients).
// Relative error < 1e-13 over the positive axis.
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_858e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_049e-4,
    2.174_396_181_152_126e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_141e-5,
    3.689_918_265_953_162e-6,
];

/// Natural log of the gamma function for x > 0.
pub fn log_gamma(x: f64) -> Result<f64, StatsError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(StatsError::DomainError(format!("log_gamma needs x > 0, got {x}")));
    }
    Ok(lgamma_inner(x))
}

fn lgamma_inner(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: ln Γ(x) = ln(π / sin(πx)) − ln Γ(1 − x)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - lgamma_inner(1.0 - x);
    }
    let z = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
pub fn betainc_reg(a: f64, b: f64, x: f64) -> Result<f64, StatsError> {
    if a <= 0.0 || b <= 0.0 {
        return Err(StatsError::DomainError(format!("betainc_reg needs a,b > 0, got ({a},{b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(StatsError::DomainError(format!("betainc_reg needs x in [0,1], got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front =
        lgamma_inner(a + b) - lgamma_inner(a) - lgamma_inner(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // symmetry keeps the continued fraction in its fast-converging region
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cf(a, b, x) / a)
    } else {
        Ok(1.0 - front * beta_cf(b, a, 1.0 - x) / b)
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 400;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
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
    for m in 1..=MAX_ITER {
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

/// Regularized lower incomplete gamma P(a, x).
pub fn gammainc_reg(a: f64, x: f64) -> Result<f64, StatsError> {
    if a <= 0.0 || x < 0.0 {
        return Err(StatsError::DomainError(format!("gammainc_reg needs a > 0, x >= 0, got ({a},{x})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        // series representation
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..500 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        Ok(sum * (-x + a * x.ln() - lgamma_inner(a)).exp())
    } else {
        // continued fraction for Q(a,x), then P = 1 - Q
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = (-x + a * x.ln() - lgamma_inner(a)).exp() * h;
        Ok(1.0 - q)
    }
}

/// Survival function (upper tail p-value) of the F distribution.
pub fn f_sf(x: f64, d1: usize, d2: usize) -> Result<f64, StatsError> {
    if d1 < 1 || d2 < 1 {
        return Err(StatsError::DomainError(format!("f_sf needs df >= 1, got ({d1},{d2})")));
    }
    if x < 0.0 {
        return Err(StatsError::DomainError(format!("f_sf needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let (d1f, d2f) = (d1 as f64, d2 as f64);
    betainc_reg(d2f / 2.0, d1f / 2.0, d2f / (d2f + d1f * x))
}

/// Survival function of the chi-squared distribution.
pub fn chi2_sf(x: f64, df: usize) -> Result<f64, StatsError> {
    if df < 1 {
        return Err(StatsError::DomainError(format!("chi2_sf needs df >= 1, got {df}")));
    }
    if x < 0.0 {
        return Err(StatsError::DomainError(format!("chi2_sf needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - gammainc_reg(df as f64 / 2.0, x / 2.0)?)
}

/// Two-sided Student-t CDF via the incomplete beta.
fn t_cdf(t: f64, df: usize) -> f64 {
    let dff = df as f64;
    let ib = betainc_reg(dff / 2.0, 0.5, dff / (dff + t * t)).unwrap_or(f64::NAN);
    if t >= 0.0 {
        1.0 - 0.5 * ib
    } else {
        0.5 * ib
    }
}

/// Upper quantile of the Student-t distribution (p in (0.5, 1)), by bisection.
pub fn t_ppf(p: f64, df: usize) -> Result<f64, StatsError> {
    if !(0.5..1.0).contains(&p) {
        return Err(StatsError::DomainError(format!("t_ppf expects p in [0.5, 1), got {p}")));
    }
    if df < 1 {
        return Err(StatsError::DomainError("t_ppf needs df >= 1".into()));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while t_cdf(hi, df) < p {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_groups(groups: &[Vec<f64>]) -> Result<(), StatsError> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(StatsError::DegenerateGroup);
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Levene's test for homogeneity of variance (mean-centered deviations,
/// Levene 1960). W is F-distributed with (g-1, N-g) df under the null.
pub fn levene(groups: &[Vec<f64>]) -> Result<TestResult, StatsError> {
    check_groups(groups)?;
    let g = groups.len();
    let n_total: usize = groups.iter().map(|x| x.len()).sum();
    let devs: Vec<Vec<f64>> = groups
        .iter()
        .map(|xs| {
            let m = mean(xs);
            xs.iter().map(|x| (x - m).abs()).collect()
        })
        .collect();
    let grand = devs.iter().flatten().sum::<f64>() / n_total as f64;
    let ss_b: f64 = devs.iter().map(|z| z.len() as f64 * (mean(z) - grand).powi(2)).sum();
    let ss_w: f64 = devs
        .iter()
        .map(|z| {
            let m = mean(z);
            z.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        })
        .sum();
    let df1 = g - 1;
    let df2 = n_total - g;
    let w = if ss_b == 0.0 {
        0.0
    } else {
        (ss_b / df1 as f64) / (ss_w / df2 as f64)
    };
    let p = if ss_b == 0.0 { 1.0 } else { f_sf(w, df1, df2)? };
    Ok(TestResult {
        statistic: w,
        df: Df::F { numerator: df1, denominator: df2 },
        p_value: p,
        effect_size: None,
    })
}

/// One-way ANOVA. `effect_size` carries partial eta-squared
/// SS_between / (SS_between + SS_within).
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<TestResult, StatsError> {
    check_groups(groups)?;
    let g = groups.len();
    let n_total: usize = groups.iter().map(|x| x.len()).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n_total as f64;
    let ss_b: f64 = groups.iter().map(|x| x.len() as f64 * (mean(x) - grand).powi(2)).sum();
    let ss_w: f64 = groups
        .iter()
        .map(|x| {
            let m = mean(x);
            x.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        })
        .sum();
    let df1 = g - 1;
    let df2 = n_total - g;
    let (f, p, eta) = if ss_b == 0.0 {
        (0.0, 1.0, 0.0)
    } else if ss_w == 0.0 {
        (f64::INFINITY, 0.0, 1.0)
    } else {
        let f = (ss_b / df1 as f64) / (ss_w / df2 as f64);
        (f, f_sf(f, df1, df2)?, ss_b / (ss_b + ss_w))
    };
    Ok(TestResult {
        statistic: f,
        df: Df::F { numerator: df1, denominator: df2 },
        p_value: p,
        effect_size: Some(eta),
    })
}

/// Partial eta-squared recovered from an F statistic and its df.
pub fn eta_p_sq_from_f(f: f64, df_between: usize, df_within: usize) -> f64 {
    let num = f * df_between as f64;
    num / (num + df_within as f64)
}

/// Cochran's Q over an N x k binary matrix (rows = matched blocks,
/// columns = treatments). `effect_size` is Q / (N * (k - 1)).
pub fn cochran_q(blocks: &[Vec<u8>]) -> Result<TestResult, StatsError> {
    let n = blocks.len();
    if n < 1 {
        return Err(StatsError::DegenerateInput("no blocks".into()));
    }
    let k = blocks[0].len();
    if k < 2 {
        return Err(StatsError::DegenerateInput("need k >= 2 treatments".into()));
    }
    for (i, row) in blocks.iter().enumerate() {
        if row.len() != k {
            return Err(StatsError::DegenerateInput(format!("block {i} has {} entries, expected {k}", row.len())));
        }
        if row.iter().any(|&b| b > 1) {
            return Err(StatsError::DegenerateInput(format!("block {i} has a non-binary entry")));
        }
    }
    let col_sums: Vec<f64> = (0..k).map(|j| blocks.iter().map(|r| r[j] as f64).sum()).collect();
    let row_sums: Vec<f64> = blocks.iter().map(|r| r.iter().map(|&b| b as f64).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let denom = k as f64 * total - row_sums.iter().map(|r| r * r).sum::<f64>();
    if denom == 0.0 {
        return Err(StatsError::DegenerateInput("every block is constant; Q is undefined".into()));
    }
    let cbar = total / k as f64;
    let num = (k * (k - 1)) as f64 * col_sums.iter().map(|c| (c - cbar).powi(2)).sum::<f64>();
    let q = num / denom;
    Ok(TestResult {
        statistic: q,
        df: Df::Chi2 { df: k - 1 },
        p_value: chi2_sf(q, k - 1)?,
        effect_size: Some(q / (n * (k - 1)) as f64),
    })
}

/// Ordinary least squares of `y` on predictor rows `x` (one row per sample),
/// with an intercept appended internally. Householder QR.
pub fn ols(y: &[f64], x: &[Vec<f64>]) -> Result<OlsFit, StatsError> {
    let n = y.len();
    if n == 0 || x.len() != n {
        return Err(StatsError::DegenerateInput("y and x must have the same nonzero length".into()));
    }
    let p = x[0].len();
    if x.iter().any(|r| r.len() != p) {
        return Err(StatsError::DegenerateInput("ragged predictor rows".into()));
    }
    let cols = p + 1;
    if n <= cols {
        return Err(StatsError::DegenerateInput(format!("need more rows ({n}) than parameters ({cols})")));
    }

    // design matrix, column-major; intercept last
    let mut a = vec![vec![0.0; n]; cols];
    for i in 0..n {
        for j in 0..p {
            a[j][i] = x[i][j];
        }
        a[p][i] = 1.0;
    }
    let mut rhs = y.to_vec();

    // Householder QR: reduce a to upper-triangular R, apply reflections to rhs
    let mut r = vec![vec![0.0; cols]; cols];
    for j in 0..cols {
        let norm = (j..n).map(|i| a[j][i] * a[j][i]).sum::<f64>().sqrt();
        let scale = a.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        if norm <= 1e-12 * scale.max(1.0) {
            return Err(StatsError::RankDeficient);
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        v[j] = a[j][j] - alpha;
        for i in (j + 1)..n {
            v[i] = a[j][i];
        }
        let vtv: f64 = (j..n).map(|i| v[i] * v[i]).sum();
        if vtv > 0.0 {
            for col in a.iter_mut().skip(j) {
                let dot: f64 = (j..n).map(|i| v[i] * col[i]).sum();
                let f = 2.0 * dot / vtv;
                for i in j..n {
                    col[i] -= f * v[i];
                }
            }
            let dot: f64 = (j..n).map(|i| v[i] * rhs[i]).sum();
            let f = 2.0 * dot / vtv;
            for i in j..n {
                rhs[i] -= f * v[i];
            }
        }
        for i in 0..cols {
            r[i][j.min(i)] = 0.0; // keep shape; filled below
        }
        for jj in j..cols {
            r[jj][j] = a[jj][j];
        }
    }

    // back substitution: R beta = rhs[..cols]
    let mut beta = vec![0.0; cols];
    for j in (0..cols).rev() {
        let mut s = rhs[j];
        for jj in (j + 1)..cols {
            s -= r[jj][j] * beta[jj];
        }
        if r[j][j].abs() < 1e-12 {
            return Err(StatsError::RankDeficient);
        }
        beta[j] = s / r[j][j];
    }

    let rss: f64 = ((cols)..n).map(|i| rhs[i] * rhs[i]).sum();
    let df = n - cols;
    let sigma2 = rss / df as f64;

    // (X'X)^-1 = R^-1 R^-T ; solve R^T W = I column by column, then R V = W
    let mut xtx_inv_diag = vec![0.0; cols];
    for kcol in 0..cols {
        // solve R^T w = e_k (lower-triangular with R^T)
        let mut w = vec![0.0; cols];
        for i in 0..cols {
            let mut s = if i == kcol { 1.0 } else { 0.0 };
            for jj in 0..i {
                s -= r[i][jj] * w[jj];
            }
            w[i] = s / r[i][i];
        }
        // solve R v = w (upper-triangular)
        let mut v = vec![0.0; cols];
        for i in (0..cols).rev() {
            let mut s = w[i];
            for jj in (i + 1)..cols {
                s -= r[jj][i] * v[jj];
            }
            v[i] = s / r[i][i];
        }
        xtx_inv_diag[kcol] = v[kcol];
    }

    let tq = t_ppf(0.975, df)?;
    let ci95: Vec<(f64, f64)> = (0..cols)
        .map(|j| {
            let se = (sigma2 * xtx_inv_diag[j]).max(0.0).sqrt();
            (beta[j] - tq * se, beta[j] + tq * se)
        })
        .collect();

    Ok(OlsFit {
        coefficients: beta[..p].to_vec(),
        intercept: beta[p],
        ci95,
        residual_variance: sigma2,
    })
}
