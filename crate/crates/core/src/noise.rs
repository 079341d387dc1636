//! Noise laws for the additive output shocks.
//!
//! Every law exposes its cdf, survival function, density, quantile and hazard
//! rate. Rank integrals are evaluated in probability space, so each law also
//! provides the density-quantile function `g(u) = f(F^{-1}(u))`, in closed form
//! where one is available.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::special::{binomial_exact, harmonic_difference, ln_binomial};

/// Function selector for [`Noise::eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFunction {
    Cdf,
    Pdf,
    Quantile,
    Hazard,
}

/// Structural shape flags of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FamilyCatalogEntry {
    pub family: &'static str,
    pub has_closed_form_b: bool,
    /// Increasing failure rate.
    pub ifr: bool,
    /// Decreasing failure rate.
    pub dfr: bool,
    /// Failure rate first increasing, then decreasing (IFR and DFR are special cases).
    pub unimodal_failure_rate: bool,
    pub unimodal_density: bool,
}

/// A continuous noise law. Implementors must be immutable after construction.
pub trait Noise: Send + Sync + fmt::Debug {
    /// Closure of the support, possibly infinite.
    fn support(&self) -> (f64, f64);

    fn cdf(&self, t: f64) -> f64;

    fn pdf(&self, t: f64) -> f64;

    /// Inverse cdf for `u` in `(0, 1)`; callers guarantee the range.
    fn quantile(&self, u: f64) -> f64;

    fn sf(&self, t: f64) -> f64 {
        1.0 - self.cdf(t)
    }

    /// `f(t) / (1 - F(t))`; only meaningful where `sf(t) > 0`.
    fn hazard_unchecked(&self, t: f64) -> f64 {
        self.pdf(t) / self.sf(t)
    }

    /// `f(F^{-1}(u))` for `u` in `(0, 1)`.
    fn density_at_quantile(&self, u: f64) -> f64 {
        self.pdf(self.quantile(u))
    }

    /// Catalogued closed form of `B_r` for `1 <= r <= n - 1`, if the family has one.
    fn closed_form_b(&self, n: usize, r: usize) -> Result<Option<f64>> {
        check_rank_range(n, r)?;
        Ok(None)
    }

    fn catalog(&self) -> FamilyCatalogEntry {
        FamilyCatalogEntry {
            family: "custom",
            has_closed_form_b: false,
            ifr: false,
            dfr: false,
            unimodal_failure_rate: false,
            unimodal_density: false,
        }
    }

    /// Checked evaluation of one of the law's functions.
    fn eval(&self, which: NoiseFunction, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::Domain("argument is NaN".into()));
        }
        match which {
            NoiseFunction::Cdf => Ok(self.cdf(t)),
            NoiseFunction::Pdf => Ok(self.pdf(t)),
            NoiseFunction::Quantile => {
                if t > 0.0 && t < 1.0 {
                    Ok(self.quantile(t))
                } else {
                    Err(Error::Domain(format!(
                        "quantile needs u in (0, 1), got {t}"
                    )))
                }
            }
            NoiseFunction::Hazard => {
                if self.sf(t) <= 0.0 {
                    Err(Error::Singularity { t })
                } else {
                    Ok(self.hazard_unchecked(t))
                }
            }
        }
    }
}

pub(crate) fn check_rank_range(n: usize, r: usize) -> Result<()> {
    if n < 2 || r == 0 || r >= n {
        return Err(Error::Domain(format!(
            "rank r = {r} outside 1..={} for n = {n}",
            n.saturating_sub(1)
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Uniform,
    Gumbel,
    Pareto,
    Burr,
    Normal,
}

/// The built-in families.
///
/// * `Uniform { width: b }` on `[-b/2, b/2]`.
/// * `Gumbel`: `F(t) = exp(-e^{-t})` on the real line.
/// * `Pareto`: `F(t) = 1 - 1/t` on `[1, inf)`.
/// * `Burr`: `F(t) = 1 - 1/(1 + t^2)` on `[0, inf)`.
/// * `Normal { sigma }`: centred normal; no closed-form `B_r`.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseDistribution {
    Uniform { width: f64 },
    Gumbel,
    Pareto,
    Burr,
    Normal { sigma: f64, law: Normal },
}

impl NoiseDistribution {
    pub fn uniform(width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::Domain(format!(
                "uniform width must be > 0, got {width}"
            )));
        }
        Ok(Self::Uniform { width })
    }

    pub fn normal(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Domain(format!(
                "normal sigma must be > 0, got {sigma}"
            )));
        }
        let law = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(Self::Normal { sigma, law })
    }

    pub fn gumbel() -> Self {
        Self::Gumbel
    }

    pub fn pareto() -> Self {
        Self::Pareto
    }

    pub fn burr() -> Self {
        Self::Burr
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Uniform { .. } => Family::Uniform,
            Self::Gumbel => Family::Gumbel,
            Self::Pareto => Family::Pareto,
            Self::Burr => Family::Burr,
            Self::Normal { .. } => Family::Normal,
        }
    }

    /// Copy of the law with its scale multiplied by `factor`, for the families
    /// that carry a scale parameter.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        match self {
            Self::Uniform { width } => Self::uniform(width * factor),
            Self::Normal { sigma, .. } => Self::normal(sigma * factor),
            other => Err(Error::Domain(format!(
                "{} has no scale parameter",
                other.family().name()
            ))),
        }
    }

    /// All built-in families at unit scale.
    pub fn builtin() -> Vec<Self> {
        vec![
            Self::Uniform { width: 1.0 },
            Self::Gumbel,
            Self::Pareto,
            Self::Burr,
            Self::normal(1.0).expect("unit normal"),
        ]
    }
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Gumbel => "gumbel",
            Family::Pareto => "pareto",
            Family::Burr => "burr",
            Family::Normal => "normal",
        }
    }
}

impl Noise for NoiseDistribution {
    fn support(&self) -> (f64, f64) {
        match self {
            Self::Uniform { width } => (-0.5 * width, 0.5 * width),
            Self::Gumbel | Self::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Pareto => (1.0, f64::INFINITY),
            Self::Burr => (0.0, f64::INFINITY),
        }
    }

    fn cdf(&self, t: f64) -> f64 {
        match self {
            Self::Uniform { width } => ((t + 0.5 * width) / width).clamp(0.0, 1.0),
            Self::Gumbel => (-(-t).exp()).exp(),
            Self::Pareto => {
                if t <= 1.0 {
                    0.0
                } else {
                    1.0 - 1.0 / t
                }
            }
            Self::Burr => {
                if t <= 0.0 {
                    0.0
                } else {
                    let t2 = t * t;
                    t2 / (1.0 + t2)
                }
            }
            Self::Normal { law, .. } => law.cdf(t),
        }
    }

    fn sf(&self, t: f64) -> f64 {
        match self {
            Self::Uniform { width } => ((0.5 * width - t) / width).clamp(0.0, 1.0),
            Self::Gumbel => -(-(-t).exp()).exp_m1(),
            Self::Pareto => {
                if t <= 1.0 {
                    1.0
                } else {
                    1.0 / t
                }
            }
            Self::Burr => {
                if t <= 0.0 {
                    1.0
                } else {
                    1.0 / (1.0 + t * t)
                }
            }
            Self::Normal { law, .. } => law.sf(t),
        }
    }

    fn pdf(&self, t: f64) -> f64 {
        match self {
            Self::Uniform { width } => {
                if t.abs() <= 0.5 * width {
                    1.0 / width
                } else {
                    0.0
                }
            }
            Self::Gumbel => (-t - (-t).exp()).exp(),
            Self::Pareto => {
                if t < 1.0 {
                    0.0
                } else {
                    1.0 / (t * t)
                }
            }
            Self::Burr => {
                if t < 0.0 {
                    0.0
                } else {
                    let d = 1.0 + t * t;
                    2.0 * t / (d * d)
                }
            }
            Self::Normal { law, .. } => law.pdf(t),
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        match self {
            Self::Uniform { width } => width * (u - 0.5),
            Self::Gumbel => -(-u.ln()).ln(),
            Self::Pareto => 1.0 / (1.0 - u),
            Self::Burr => (u / (1.0 - u)).sqrt(),
            Self::Normal { law, .. } => law.inverse_cdf(u),
        }
    }

    fn hazard_unchecked(&self, t: f64) -> f64 {
        match self {
            Self::Uniform { width } => {
                if t < -0.5 * width {
                    0.0
                } else {
                    1.0 / (0.5 * width - t)
                }
            }
            Self::Gumbel => {
                let e = (-t).exp();
                e / e.exp_m1()
            }
            Self::Pareto => {
                if t < 1.0 {
                    0.0
                } else {
                    1.0 / t
                }
            }
            Self::Burr => {
                if t < 0.0 {
                    0.0
                } else {
                    2.0 * t / (1.0 + t * t)
                }
            }
            Self::Normal { law, .. } => law.pdf(t) / law.sf(t),
        }
    }

    fn density_at_quantile(&self, u: f64) -> f64 {
        match self {
            Self::Uniform { width } => 1.0 / width,
            Self::Gumbel => -u * u.ln(),
            Self::Pareto => (1.0 - u) * (1.0 - u),
            Self::Burr => 2.0 * u.sqrt() * (1.0 - u).powf(1.5),
            Self::Normal { law, .. } => law.pdf(law.inverse_cdf(u)),
        }
    }

    fn closed_form_b(&self, n: usize, r: usize) -> Result<Option<f64>> {
        check_rank_range(n, r)?;
        let (nf, rf) = (n as f64, r as f64);
        let value = match self {
            Self::Uniform { width } => Some(1.0 / width),
            Self::Gumbel => Some((1.0 - rf / nf) * harmonic_difference(n as u64, (n - r) as u64)),
            Self::Pareto => Some(rf * (rf + 1.0) / (nf * (nf + 1.0))),
            Self::Burr => Some(burr_b(n as u64, r as u64)),
            Self::Normal { .. } => None,
        };
        Ok(value)
    }

    fn catalog(&self) -> FamilyCatalogEntry {
        let family = self.family().name();
        match self {
            Self::Uniform { .. } | Self::Gumbel => FamilyCatalogEntry {
                family,
                has_closed_form_b: true,
                ifr: true,
                dfr: false,
                unimodal_failure_rate: true,
                unimodal_density: true,
            },
            Self::Pareto => FamilyCatalogEntry {
                family,
                has_closed_form_b: true,
                ifr: false,
                dfr: true,
                unimodal_failure_rate: true,
                unimodal_density: true,
            },
            Self::Burr => FamilyCatalogEntry {
                family,
                has_closed_form_b: true,
                ifr: false,
                dfr: false,
                unimodal_failure_rate: true,
                unimodal_density: true,
            },
            Self::Normal { .. } => FamilyCatalogEntry {
                family,
                has_closed_form_b: false,
                ifr: true,
                dfr: false,
                unimodal_failure_rate: true,
                unimodal_density: true,
            },
        }
    }
}

/// `pi (n-r) r (r+1) / (2^{2n-1} n (n+1)) * C(2n-2r-1, n-r) * C(2r+1, r)`.
fn burr_b(n: u64, r: u64) -> f64 {
    let (nf, rf) = (n as f64, r as f64);
    let prefactor = PI * (nf - rf) * rf * (rf + 1.0) / (nf * (nf + 1.0));
    let upper = (2 * n - 2 * r - 1, n - r);
    let lower = (2 * r + 1, r);
    match (
        binomial_exact(upper.0, upper.1),
        binomial_exact(lower.0, lower.1),
    ) {
        (Some(a), Some(b)) if n < 500 => {
            prefactor * (a as f64) * (b as f64) * 2f64.powi(-(2 * n as i32 - 1))
        }
        _ => (prefactor.ln() + ln_binomial(upper.0, upper.1) + ln_binomial(lower.0, lower.1)
            - (2.0 * nf - 1.0) * LN_2)
            .exp(),
    }
}

impl fmt::Display for NoiseDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { width } => write!(f, "uniform:b={width}"),
            Self::Normal { sigma, .. } => write!(f, "normal:sigma={sigma}"),
            other => f.write_str(other.family().name()),
        }
    }
}

impl FromStr for NoiseDistribution {
    type Err = Error;

    /// Parses `uniform:b=<real>`, `gumbel`, `pareto`, `burr`, `normal:sigma=<real>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = match s.split_once(':') {
            Some((name, params)) => (name, Some(params)),
            None => (s, None),
        };
        let param = |key: &str| -> Result<f64> {
            let params = params.ok_or_else(|| {
                Error::parse("dist", format!("{name} requires parameter {key}=<real>"))
            })?;
            let (k, v) = params.split_once('=').ok_or_else(|| {
                Error::parse("dist", format!("expected {key}=<real>, got {params:?}"))
            })?;
            if k.trim() != key {
                return Err(Error::parse(
                    "dist",
                    format!("unknown parameter {k:?} for {name}"),
                ));
            }
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::parse("dist", format!("{key}: {e}")))
        };
        let no_params = |d: NoiseDistribution| -> Result<NoiseDistribution> {
            match params {
                Some(p) => Err(Error::parse(
                    "dist",
                    format!("{name} takes no parameters, got {p:?}"),
                )),
                None => Ok(d),
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "uniform" => {
                Self::uniform(param("b")?).map_err(|e| Error::parse("dist", e.to_string()))
            }
            "normal" => {
                Self::normal(param("sigma")?).map_err(|e| Error::parse("dist", e.to_string()))
            }
            "gumbel" => no_params(Self::Gumbel),
            "pareto" => no_params(Self::Pareto),
            "burr" => no_params(Self::Burr),
            other => Err(Error::parse("dist", format!("unknown family {other:?}"))),
        }
    }
}
