//! Rank probabilities and their effort derivatives at the symmetric equilibrium.
//!
//! All integrals are taken over `u = F(t)` in `(0, 1)`, with the density entering
//! through `g(u) = f(F^{-1}(u))`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{check_rank_range, Noise};
use crate::quadrature::integrate_pieces;
use crate::special::ln_binomial;

/// Values within this band of zero are classified as non-positive.
pub const ZERO_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMethod {
    Quadrature,
    ClosedForm,
    MonteCarlo,
}

/// Per-rank marginal probabilities `beta_r`, their partial sums `B_r` and the
/// per-prize values `B_r / r`. Vectors are 0-based: `beta[0]` is `beta_1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankCoefficients {
    n: usize,
    beta: Vec<f64>,
    cumulative: Vec<f64>,
    bar_beta: Vec<f64>,
    method: CoefficientMethod,
}

impl RankCoefficients {
    /// Builds the coefficient set from `beta_1..beta_n`.
    pub fn from_beta(beta: Vec<f64>, method: CoefficientMethod) -> Result<Self> {
        let n = beta.len();
        if n < 2 {
            return Err(Error::Domain(format!("need n >= 2 ranks, got {n}")));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Validation("beta contains a non-finite value".into()));
        }
        let cumulative: Vec<f64> = beta
            .iter()
            .scan(0.0, |acc, b| {
                *acc += b;
                Some(*acc)
            })
            .collect();
        Ok(Self::assemble(beta, cumulative, method))
    }

    /// Builds the coefficient set from `B_1..B_{n-1}`; `B_n = 0`.
    pub fn from_cumulative(b: &[f64], method: CoefficientMethod) -> Result<Self> {
        let n = b.len() + 1;
        if n < 2 {
            return Err(Error::Domain(
                "need at least one cumulative coefficient".into(),
            ));
        }
        let mut cumulative = b.to_vec();
        cumulative.push(0.0);
        let beta = (0..n)
            .map(|i| cumulative[i] - if i == 0 { 0.0 } else { cumulative[i - 1] })
            .collect();
        Ok(Self::assemble(beta, cumulative, method))
    }

    fn assemble(beta: Vec<f64>, cumulative: Vec<f64>, method: CoefficientMethod) -> Self {
        let n = beta.len();
        let bar_beta = cumulative[..n - 1]
            .iter()
            .enumerate()
            .map(|(i, b)| b / (i + 1) as f64)
            .collect();
        Self {
            n,
            beta,
            cumulative,
            bar_beta,
            method,
        }
    }

    /// Coefficients from the family's catalogued closed form, if any.
    pub fn closed_form<D: Noise + ?Sized>(dist: &D, n: usize) -> Result<Option<Self>> {
        if n < 2 {
            return Err(Error::Domain(format!("need n >= 2, got {n}")));
        }
        let mut b = Vec::with_capacity(n - 1);
        for r in 1..n {
            match dist.closed_form_b(n, r)? {
                Some(v) => b.push(v),
                None => return Ok(None),
            }
        }
        Self::from_cumulative(&b, CoefficientMethod::ClosedForm).map(Some)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn method(&self) -> CoefficientMethod {
        self.method
    }

    /// `beta_1..beta_n`.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `B_1..B_n`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// `B_r / r` for `r = 1..n-1`.
    pub fn bar_beta(&self) -> &[f64] {
        &self.bar_beta
    }

    /// `B_r` with 1-based `r`, and `B_0 = 0`.
    pub fn b(&self, r: usize) -> f64 {
        if r == 0 {
            0.0
        } else {
            self.cumulative[r - 1]
        }
    }

    /// Checks the structural invariants: `sum beta = 0`, `beta_1 > 0`,
    /// `beta_n < 0` and `B_r > 0` for `r < n`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let total: f64 = self.beta.iter().sum();
        if total.abs() > tol {
            return Err(Error::Validation(format!("sum of beta is {total}, not 0")));
        }
        if self.beta[0] <= 0.0 || self.beta[self.n - 1] >= 0.0 {
            return Err(Error::Validation("need beta_1 > 0 and beta_n < 0".into()));
        }
        if let Some(r) = self.cumulative[..self.n - 1].iter().position(|&b| b <= 0.0) {
            return Err(Error::Validation(format!("B_{} is not positive", r + 1)));
        }
        Ok(())
    }
}

/// `k ln x`, with `0 ln 0 = 0`.
fn k_ln(x: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

/// `exp(ln_c) u^a (1-u)^b`, evaluated in log space so that huge binomials
/// and tiny powers do not overflow or underflow separately.
fn kernel(ln_c: f64, a: usize, b: usize, u: f64) -> f64 {
    (ln_c + k_ln(u, a) + k_ln(1.0 - u, b)).exp()
}

/// Break points around the bulk of the kernel `u^a (1-u)^b`, which is too
/// narrow for a single starting panel once `a + b` is large. Offsets from the
/// mean grow geometrically so the heavy tails are covered as well.
fn kernel_breaks(a: usize, b: usize) -> Vec<f64> {
    let (a, b) = (a as f64, b as f64);
    let mean = (a + 1.0) / (a + b + 2.0);
    let sd = (mean * (1.0 - mean) / (a + b + 3.0)).sqrt();
    let mut breaks = vec![mean];
    let mut step = sd;
    while mean - step > 0.0 || mean + step < 1.0 {
        breaks.extend([mean - step, mean + step]);
        step *= 2.0;
    }
    breaks.retain(|&u| u > 0.0 && u < 1.0);
    breaks
}

/// Probability that an agent with effort advantage `delta = x - x*` finishes rank `r`.
pub fn rank_probability<D: Noise + ?Sized>(
    dist: &D,
    n: usize,
    r: usize,
    delta: f64,
) -> Result<f64> {
    if n < 2 || r == 0 || r > n {
        return Err(Error::Domain(format!("rank r = {r} outside 1..={n}")));
    }
    if !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be finite, got {delta}")));
    }
    let (above, below) = (n - r, r - 1);
    let ln_c = ln_binomial((n - 1) as u64, (r - 1) as u64);
    let integrand = |u: f64| {
        let t = delta + dist.quantile(u);
        (ln_c + k_ln(dist.cdf(t), above) + k_ln(dist.sf(t), below)).exp()
    };
    // u values where delta + F^{-1}(u) crosses a support edge
    let (lo, hi) = dist.support();
    let mut breaks: Vec<f64> = [lo - delta, hi - delta]
        .into_iter()
        .filter(|t| t.is_finite())
        .map(|t| dist.cdf(t))
        .collect();
    breaks.extend(kernel_breaks(above, below));
    let value = integrate_pieces(integrand, 0.0, 1.0, &breaks)?.value;
    Ok(value.clamp(0.0, 1.0))
}

/// `p_1..p_n` at effort advantage `delta`.
pub fn rank_probabilities<D: Noise + ?Sized>(dist: &D, n: usize, delta: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    (1..=n)
        .into_par_iter()
        .map(|r| rank_probability(dist, n, r, delta))
        .collect()
}

fn beta_r<D: Noise + ?Sized>(dist: &D, n: usize, r: usize) -> Result<f64> {
    let m = (n - 1) as f64;
    let g = |u: f64| dist.density_at_quantile(u);
    let value = if r == 1 {
        // [n-1 - (n-1)u] (1-u)^{-1} = n-1
        m * integrate_pieces(
            |u| kernel(0.0, n - 2, 0, u) * g(u),
            0.0,
            1.0,
            &kernel_breaks(n - 2, 0),
        )?
        .value
    } else if r == n {
        // u^{-1} [-(n-1)u] = -(n-1)
        -m * integrate_pieces(
            |u| kernel(0.0, 0, n - 2, u) * g(u),
            0.0,
            1.0,
            &kernel_breaks(0, n - 2),
        )?
        .value
    } else {
        let nr = (n - r) as f64;
        let ln_c = ln_binomial((n - 1) as u64, (r - 1) as u64);
        integrate_pieces(
            |u| kernel(ln_c, n - r - 1, r - 2, u) * (nr - m * u) * g(u),
            0.0,
            1.0,
            &kernel_breaks(n - r - 1, r - 2),
        )?
        .value
    };
    Ok(value)
}

/// `beta_r` for every rank by quadrature of the derivative formula.
pub fn compute_beta<D: Noise + ?Sized>(dist: &D, n: usize) -> Result<RankCoefficients> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    let beta = (1..=n)
        .into_par_iter()
        .map(|r| beta_r(dist, n, r))
        .collect::<Result<Vec<_>>>()?;
    RankCoefficients::from_beta(beta, CoefficientMethod::Quadrature)
}

/// `B_1..B_n` by direct quadrature, with `B_n = 0`.
pub fn compute_b<D: Noise + ?Sized>(dist: &D, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    let mut b = (1..n)
        .into_par_iter()
        .map(|r| {
            let ln_c = (r as f64).ln() + ln_binomial((n - 1) as u64, r as u64);
            let value = integrate_pieces(
                |u| kernel(ln_c, n - 1 - r, r - 1, u) * dist.density_at_quantile(u),
                0.0,
                1.0,
                &kernel_breaks(n - 1 - r, r - 1),
            )?
            .value;
            Ok(value)
        })
        .collect::<Result<Vec<_>>>()?;
    b.push(0.0);
    Ok(b)
}

/// `(1/n) E[h(X_{(n-r:n)})]`, integrated over the order-statistic density.
pub fn bar_beta_hazard<D: Noise + ?Sized>(dist: &D, n: usize, r: usize) -> Result<f64> {
    check_rank_range(n, r)?;
    let k = n - r;
    // density of the k-th smallest of n uniforms: n C(n-1, k-1) u^{k-1} (1-u)^{n-k}
    let ln_c = ln_binomial((n - 1) as u64, (k - 1) as u64);
    let integrand =
        |u: f64| kernel(ln_c, k - 1, n - k, u) * dist.hazard_unchecked(dist.quantile(u));
    Ok(integrate_pieces(integrand, 0.0, 1.0, &kernel_breaks(k - 1, n - k))?.value)
}

/// Largest rank with `beta_r > ZERO_BAND`.
pub fn r_hat(coeffs: &RankCoefficients) -> usize {
    coeffs
        .beta()
        .iter()
        .rposition(|&b| b > ZERO_BAND)
        .map_or(1, |i| i + 1)
}
