//! Prize schedules: a unit budget split over ranks, non-negative and non-increasing.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Comparison tolerance for the schedule invariants.
pub const SCHEDULE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrizeSchedule {
    v: Vec<f64>,
}

/// `d_r = v_r - v_{r+1}` for `r = 1..n-1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrizeDifferentials {
    d: Vec<f64>,
}

impl PrizeSchedule {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let n = v.len();
        if n < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 prizes, got {n}"
            )));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::Validation(format!("prize {x} is not finite")));
        }
        if let Some(r) = v.iter().position(|&x| x < -SCHEDULE_TOL) {
            return Err(Error::Validation(format!(
                "prize v_{} = {} is negative",
                r + 1,
                v[r]
            )));
        }
        if let Some(r) = v.windows(2).position(|w| w[1] > w[0] + SCHEDULE_TOL) {
            return Err(Error::Validation(format!(
                "prizes must be non-increasing: v_{} = {} < v_{} = {}",
                r + 1,
                v[r],
                r + 2,
                v[r + 1]
            )));
        }
        let total: f64 = v.iter().sum();
        if (total - 1.0).abs() > SCHEDULE_TOL {
            return Err(Error::Validation(format!("prizes sum to {total}, not 1")));
        }
        Ok(Self { v })
    }

    /// `s` equal prizes of `1/s` at the top.
    pub fn top(n: usize, s: usize) -> Result<Self> {
        if n < 2 || s == 0 || s >= n {
            return Err(Error::Domain(format!(
                "top-s schedule needs 1 <= s <= n - 1, got s = {s}, n = {n}"
            )));
        }
        let mut v = vec![0.0; n];
        v[..s].fill(1.0 / s as f64);
        Ok(Self { v })
    }

    pub fn winner_take_all(n: usize) -> Result<Self> {
        Self::top(n, 1)
    }

    /// `v_r = 2 (n - r) / (n (n - 1))`.
    pub fn equidistant(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("need n >= 2, got {n}")));
        }
        let denom = (n * (n - 1)) as f64;
        Self::new((1..=n).map(|r| 2.0 * (n - r) as f64 / denom).collect())
    }

    /// `1/n` to every rank; carries no incentive.
    pub fn flat(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("need n >= 2, got {n}")));
        }
        Ok(Self {
            v: vec![1.0 / n as f64; n],
        })
    }

    /// Rebuilds `v` from differentials with `v_n = 0`.
    pub fn from_differentials(d: &[f64], n: usize) -> Result<Self> {
        if d.len() + 1 != n {
            return Err(Error::Domain(format!(
                "{} differentials do not describe {n} prizes",
                d.len()
            )));
        }
        if let Some(r) = d.iter().position(|&x| x.is_nan() || x < -SCHEDULE_TOL) {
            return Err(Error::Validation(format!(
                "differential d_{} = {} is negative",
                r + 1,
                d[r]
            )));
        }
        let mut v = vec![0.0; n];
        for r in (0..n - 1).rev() {
            v[r] = v[r + 1] + d[r].max(0.0);
        }
        Self::new(v)
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn differentials(&self) -> PrizeDifferentials {
        PrizeDifferentials {
            d: self.v.windows(2).map(|w| w[0] - w[1]).collect(),
        }
    }

    pub fn positive_count(&self) -> usize {
        self.v.iter().filter(|&&x| x > SCHEDULE_TOL).count()
    }

    /// Number of ranks sharing the top prize.
    pub fn top_tie_count(&self) -> usize {
        let top = self.v[0];
        self.v
            .iter()
            .take_while(|&&x| (top - x).abs() <= SCHEDULE_TOL)
            .count()
    }
}

impl PrizeDifferentials {
    pub fn values(&self) -> &[f64] {
        &self.d
    }

    /// `sum_r r d_r`, equal to the budget when `v_n = 0`.
    pub fn weighted_sum(&self) -> f64 {
        self.d
            .iter()
            .enumerate()
            .map(|(i, d)| (i + 1) as f64 * d)
            .sum()
    }
}

/// Textual prize specification: `wta`, `topk:<s>`, `equidistant`, `flat`, or a
/// path to a JSON array of reals.
#[derive(Debug, Clone, PartialEq)]
pub enum PrizeSpec {
    WinnerTakeAll,
    Top(usize),
    Equidistant,
    Flat,
    Explicit(Vec<f64>),
}

impl PrizeSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "wta" => Ok(Self::WinnerTakeAll),
            "equidistant" => Ok(Self::Equidistant),
            "flat" => Ok(Self::Flat),
            _ => {
                if let Some(k) = s.strip_prefix("topk:") {
                    let k = k
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| Error::parse("prizes", format!("topk count: {e}")))?;
                    return Ok(Self::Top(k));
                }
                let path = Path::new(s);
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::parse(
                        "prizes",
                        format!("{s:?} is not a known spec or readable file: {e}"),
                    )
                })?;
                Self::from_json(&text)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Vec<f64> = serde_json::from_str(text).map_err(|e| {
            Error::parse("prizes", format!("expected a JSON array of numbers: {e}"))
        })?;
        Ok(Self::Explicit(v))
    }

    pub fn build(&self, n: usize) -> Result<PrizeSchedule> {
        match self {
            Self::WinnerTakeAll => PrizeSchedule::winner_take_all(n),
            Self::Top(s) => PrizeSchedule::top(n, *s),
            Self::Equidistant => PrizeSchedule::equidistant(n),
            Self::Flat => PrizeSchedule::flat(n),
            Self::Explicit(v) => {
                if v.len() != n {
                    return Err(Error::Validation(format!(
                        "prize file has {} entries but n = {n}",
                        v.len()
                    )));
                }
                PrizeSchedule::new(v.clone())
            }
        }
    }
}
