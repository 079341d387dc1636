//! Marginal benefit of effort, optimal prize sharing and equilibrium effort.
//!
//! With rank coefficients `beta_r`, `B_r` and a schedule `v`, the symmetric
//! equilibrium effort solves `c'(x*) = M(v, theta) = R(v) + theta L(v)`, where
//! `R` is the monetary and `theta L` the gain-loss part of the marginal benefit.
//! Only `theta = eta (lambda - 1)` matters; `eta` and `lambda` are kept for the
//! unreduced utility.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::NoiseDistribution;
use crate::prizes::{PrizeSchedule, SCHEDULE_TOL};
use crate::rank_stats::{compute_beta, rank_probabilities, RankCoefficients};

/// Zero band for the sign of `L(v)`.
pub const SIGN_BAND: f64 = 1e-10;

/// Relative band within which two `A_r` values count as tied.
pub const TIE_BAND: f64 = 1e-9;

/// Number of effort levels at which the concavity diagnostic samples `u_xx`.
pub const CONCAVITY_SAMPLES: usize = 21;

/// Tolerance when checking `theta = eta (lambda - 1)`.
const THETA_MATCH_TOL: f64 = 1e-12;

pub fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Domain(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    Ok(())
}

/// Loss-aversion preferences. `theta` is canonical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossAversionParams {
    eta: f64,
    lambda: f64,
    theta: f64,
}

impl LossAversionParams {
    /// From `theta` alone, represented as `eta = 1`, `lambda = 1 + theta`.
    pub fn from_theta(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self {
            eta: 1.0,
            lambda: 1.0 + theta,
            theta,
        })
    }

    pub fn from_eta_lambda(eta: f64, lambda: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Domain(format!("eta must be > 0, got {eta}")));
        }
        if !(lambda.is_finite() && lambda >= 1.0) {
            return Err(Error::Domain(format!("lambda must be >= 1, got {lambda}")));
        }
        let theta = eta * (lambda - 1.0);
        check_theta(theta)?;
        Ok(Self { eta, lambda, theta })
    }

    /// All three given; `theta` must equal `eta (lambda - 1)`.
    pub fn new(eta: f64, lambda: f64, theta: f64) -> Result<Self> {
        let p = Self::from_eta_lambda(eta, lambda)?;
        if (p.theta - theta).abs() > THETA_MATCH_TOL {
            return Err(Error::Validation(format!(
                "theta = {theta} does not match eta (lambda - 1) = {}",
                p.theta
            )));
        }
        Ok(p)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Effort cost with `c(0) = c'(0) = 0`, strictly convex, normalised by the
/// effort `x_bar` at which the cost uses up the unit budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostFunction {
    /// `c(x) = c0 x^2 / 2`.
    Quadratic { c0: f64 },
    /// `c(x) = k x^p` with `p > 1`.
    Power { k: f64, p: f64 },
}

impl CostFunction {
    pub fn quadratic(c0: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::Domain(format!("c0 must be > 0, got {c0}")));
        }
        Ok(Self::Quadratic { c0 })
    }

    pub fn power(k: f64, p: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Domain(format!("k must be > 0, got {k}")));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::Domain(format!("exponent p must be > 1, got {p}")));
        }
        Ok(Self::Power { k, p })
    }

    pub fn cost(&self, x: f64) -> f64 {
        match *self {
            Self::Quadratic { c0 } => 0.5 * c0 * x * x,
            Self::Power { k, p } => k * x.powf(p),
        }
    }

    pub fn marginal(&self, x: f64) -> f64 {
        match *self {
            Self::Quadratic { c0 } => c0 * x,
            Self::Power { k, p } => k * p * x.powf(p - 1.0),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Quadratic { c0 } => c0,
            Self::Power { k, p } => k * p * (p - 1.0) * x.powf(p - 2.0),
        }
    }

    /// `c^{-1}(1)`.
    pub fn x_bar(&self) -> f64 {
        match *self {
            Self::Quadratic { c0 } => (2.0 / c0).sqrt(),
            Self::Power { k, p } => k.recip().powf(p.recip()),
        }
    }

    pub fn max_marginal(&self) -> f64 {
        self.marginal(self.x_bar())
    }

    /// Solves `c'(x) = m` on `[0, x_bar]`.
    pub fn inverse_marginal(&self, m: f64) -> Result<f64> {
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::Domain(format!(
                "marginal benefit must be finite and >= 0, got {m}"
            )));
        }
        let max_marginal = self.max_marginal();
        if m > max_marginal * (1.0 + 1e-12) {
            return Err(Error::Range {
                marginal: m,
                max_marginal,
            });
        }
        let x = match *self {
            Self::Quadratic { c0 } => m / c0,
            Self::Power { k, p } => (m / (k * p)).powf((p - 1.0).recip()),
        };
        Ok(x.min(self.x_bar()))
    }
}

impl fmt::Display for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic { c0 } => write!(f, "quadratic:c0={c0}"),
            Self::Power { k, p } => write!(f, "power:k={k},p={p}"),
        }
    }
}

impl FromStr for CostFunction {
    type Err = Error;

    /// Parses `quadratic:c0=<real>` or `power:k=<real>,p=<real>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let mut values = Vec::new();
        for item in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::parse("cost", format!("expected key=value, got {item:?}")))?;
            let v = v
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse("cost", format!("{}: {e}", k.trim())))?;
            values.push((k.trim().to_string(), v));
        }
        let take = |key: &str| -> Result<f64> {
            values
                .iter()
                .find(|(k, _)| k == key)
                .map(|&(_, v)| v)
                .ok_or_else(|| Error::parse("cost", format!("{name} requires {key}=<real>")))
        };
        let allowed: &[&str] = match name {
            "quadratic" => &["c0"],
            "power" => &["k", "p"],
            other => return Err(Error::parse("cost", format!("unknown cost kind {other:?}"))),
        };
        if let Some((k, _)) = values.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::parse(
                "cost",
                format!("unknown parameter {k:?} for {name}"),
            ));
        }
        let built = match name {
            "quadratic" => Self::quadratic(take("c0")?),
            _ => Self::power(take("k")?, take("p")?),
        };
        built.map_err(|e| Error::parse("cost", e.to_string()))
    }
}

/// A complete problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TournamentDesign {
    n: usize,
    dist: NoiseDistribution,
    loss: LossAversionParams,
    cost: CostFunction,
}

impl TournamentDesign {
    pub fn new(
        n: usize,
        dist: NoiseDistribution,
        loss: LossAversionParams,
        cost: CostFunction,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("need n >= 2 agents, got {n}")));
        }
        Ok(Self {
            n,
            dist,
            loss,
            cost,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dist(&self) -> &NoiseDistribution {
        &self.dist
    }

    pub fn loss(&self) -> LossAversionParams {
        self.loss
    }

    pub fn theta(&self) -> f64 {
        self.loss.theta
    }

    pub fn cost(&self) -> CostFunction {
        self.cost
    }

    /// Same design with a different `theta`.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Ok(Self {
            loss: LossAversionParams::from_theta(theta)?,
            ..self.clone()
        })
    }
}

fn check_n(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::Domain(format!(
            "{what} has {got} ranks but the schedule has {expected}"
        )));
    }
    Ok(())
}

/// Gain-loss value: identity on gains, slope `lambda` on losses.
pub fn mu(value: f64, lambda: f64) -> f64 {
    if value < 0.0 {
        lambda * value
    } else {
        value
    }
}

/// Reduced utility `sum p_r v_r - theta sum_r sum_{s<r} p_r p_s (v_s - v_r) - c`.
pub fn utility_from_probabilities(
    p: &[f64],
    v: &PrizeSchedule,
    theta: f64,
    cost: f64,
) -> Result<f64> {
    check_n(v.n(), p.len(), "probability vector")?;
    let v = v.values();
    let money: f64 = p.iter().zip(v).map(|(p, v)| p * v).sum();
    let mut loss = 0.0;
    for r in 1..p.len() {
        for s in 0..r {
            loss += p[r] * p[s] * (v[s] - v[r]);
        }
    }
    Ok(money - theta * loss - cost)
}

/// Unreduced utility: expected prize minus cost plus `eta` times the gain-loss
/// value of every ordered pair of outcomes.
pub fn utility_reference_form(
    p: &[f64],
    v: &PrizeSchedule,
    eta: f64,
    lambda: f64,
    cost: f64,
) -> Result<f64> {
    check_n(v.n(), p.len(), "probability vector")?;
    let v = v.values();
    let money: f64 = p.iter().zip(v).map(|(p, v)| p * v).sum();
    let mut gain_loss = 0.0;
    for r in 0..p.len() {
        for s in (0..p.len()).filter(|&s| s != r) {
            gain_loss += p[r] * p[s] * mu(v[r] - v[s], lambda);
        }
    }
    Ok(money - cost + eta * gain_loss)
}

/// `sum_r p_r sum_{s != r} p_s (v_r - v_s)`; zero for any `p`, as anticipated
/// gains and losses of equal size cancel.
pub fn gain_loss_balance(p: &[f64], v: &PrizeSchedule) -> Result<f64> {
    check_n(v.n(), p.len(), "probability vector")?;
    let v = v.values();
    let mut total = 0.0;
    for r in 0..p.len() {
        for s in (0..p.len()).filter(|&s| s != r) {
            total += p[r] * p[s] * (v[r] - v[s]);
        }
    }
    Ok(total)
}

fn check_effort(design: &TournamentDesign, x: f64, name: &str) -> Result<()> {
    let x_bar = design.cost.x_bar();
    if !(0.0..=x_bar).contains(&x) {
        return Err(Error::Domain(format!("{name} = {x} outside [0, {x_bar}]")));
    }
    Ok(())
}

/// Utility of effort `x` when every rival exerts `x_star`.
pub fn utility(design: &TournamentDesign, v: &PrizeSchedule, x: f64, x_star: f64) -> Result<f64> {
    check_n(v.n(), design.n, "design")?;
    check_effort(design, x, "x")?;
    check_effort(design, x_star, "x_star")?;
    let p = rank_probabilities(&design.dist, design.n, x - x_star)?;
    utility_from_probabilities(&p, v, design.theta(), design.cost.cost(x))
}

/// [`utility`] evaluated through the unreduced gain-loss form.
pub fn utility_reference(
    design: &TournamentDesign,
    v: &PrizeSchedule,
    x: f64,
    x_star: f64,
) -> Result<f64> {
    check_n(v.n(), design.n, "design")?;
    check_effort(design, x, "x")?;
    check_effort(design, x_star, "x_star")?;
    let p = rank_probabilities(&design.dist, design.n, x - x_star)?;
    utility_reference_form(
        &p,
        v,
        design.loss.eta,
        design.loss.lambda,
        design.cost.cost(x),
    )
}

/// Both representations of the monetary marginal benefit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonetaryForms {
    /// `sum_r beta_r v_r`.
    pub beta_form: f64,
    /// `sum_r B_r d_r`.
    pub differential_form: f64,
}

pub fn monetary_marginal_forms(
    coeffs: &RankCoefficients,
    v: &PrizeSchedule,
) -> Result<MonetaryForms> {
    check_n(v.n(), coeffs.n(), "coefficient set")?;
    let beta_form = coeffs
        .beta()
        .iter()
        .zip(v.values())
        .map(|(b, v)| b * v)
        .sum();
    let differential_form = v
        .differentials()
        .values()
        .iter()
        .zip(coeffs.cumulative())
        .map(|(d, b)| b * d)
        .sum();
    Ok(MonetaryForms {
        beta_form,
        differential_form,
    })
}

/// `R(v) = sum_r beta_r v_r`.
pub fn monetary_marginal_r(coeffs: &RankCoefficients, v: &PrizeSchedule) -> Result<f64> {
    Ok(monetary_marginal_forms(coeffs, v)?.beta_form)
}

/// The three representations of the gain-loss marginal benefit `L(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsychologicalForms {
    /// `sum_r (2r/n - 1) B_r d_r`.
    pub differential_form: f64,
    /// `-(1/n) sum_r sum_{s<r} (beta_r + beta_s)(v_s - v_r)`.
    pub double_sum: f64,
    /// `(1/n) sum_r [2 B_{r-1} - (n - 2r) beta_r] v_r`.
    pub per_prize: f64,
}

pub fn psychological_marginal_forms(
    coeffs: &RankCoefficients,
    v: &PrizeSchedule,
) -> Result<PsychologicalForms> {
    check_n(v.n(), coeffs.n(), "coefficient set")?;
    let n = coeffs.n();
    let nf = n as f64;
    let beta = coeffs.beta();
    let vals = v.values();

    let differential_form = v
        .differentials()
        .values()
        .iter()
        .enumerate()
        .map(|(i, d)| (2.0 * (i + 1) as f64 / nf - 1.0) * coeffs.b(i + 1) * d)
        .sum();

    let mut pairs = 0.0;
    for r in 1..n {
        for s in 0..r {
            pairs += (beta[r] + beta[s]) * (vals[s] - vals[r]);
        }
    }
    let double_sum = -pairs / nf;

    let per_prize = (1..=n)
        .map(|r| (2.0 * coeffs.b(r - 1) - (nf - 2.0 * r as f64) * beta[r - 1]) * vals[r - 1])
        .sum::<f64>()
        / nf;

    Ok(PsychologicalForms {
        differential_form,
        double_sum,
        per_prize,
    })
}

/// `L(v) = sum_r (2r/n - 1) B_r d_r`.
pub fn psychological_marginal_l(coeffs: &RankCoefficients, v: &PrizeSchedule) -> Result<f64> {
    Ok(psychological_marginal_forms(coeffs, v)?.differential_form)
}

/// `M(v, theta) = R(v) + theta L(v)`.
pub fn marginal_benefit_m(coeffs: &RankCoefficients, v: &PrizeSchedule, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(monetary_marginal_r(coeffs, v)? + theta * psychological_marginal_l(coeffs, v)?)
}

/// `A_r(theta) = intercept + slope * theta` for `r = 1..n-1`.
fn a_lines(coeffs: &RankCoefficients) -> Vec<(f64, f64)> {
    let nf = coeffs.n() as f64;
    coeffs
        .bar_beta()
        .iter()
        .enumerate()
        .map(|(i, &bb)| (bb, (2.0 * (i + 1) as f64 / nf - 1.0) * bb))
        .collect()
}

/// `A_r(theta) = [1 + theta (2r/n - 1)] B_r / r` for `r = 1..n-1`, the marginal
/// benefit of the schedule with `r` equal top prizes.
pub fn a_r(coeffs: &RankCoefficients, theta: f64) -> Result<Vec<f64>> {
    check_theta(theta)?;
    Ok(a_lines(coeffs)
        .into_iter()
        .map(|(a, b)| a + b * theta)
        .collect())
}

fn tie_set(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let band = TIE_BAND * best.abs();
    values
        .iter()
        .enumerate()
        .filter(|(_, &a)| best - a <= band)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Optimal number of equal top prizes at one `theta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalPrizes {
    pub theta: f64,
    /// Smallest maximiser of `A_r(theta)`.
    pub r_star: usize,
    /// Every `r` whose `A_r` lies within [`TIE_BAND`] of the maximum.
    pub tie_set: Vec<usize>,
    /// `A_r(theta)` for `r = 1..n-1`.
    pub a: Vec<f64>,
    /// `M* = A_{r*}(theta)`, the marginal benefit under optimal prizes.
    pub m_star: f64,
}

pub fn optimal_r_star(coeffs: &RankCoefficients, theta: f64) -> Result<OptimalPrizes> {
    let a = a_r(coeffs, theta)?;
    let tie_set = tie_set(&a);
    let r_star = tie_set[0];
    Ok(OptimalPrizes {
        theta,
        r_star,
        m_star: a[r_star - 1],
        tie_set,
        a,
    })
}

/// `r*` switches from `from` to `to` just after `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub theta: f64,
    pub from: usize,
    pub to: usize,
}

/// `r*(theta)` on `[0, 1]` as a step function. At a jump point the two
/// maximisers tie and the smaller one is reported, so the function is
/// continuous from the left.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction {
    pub initial: usize,
    pub jumps: Vec<Jump>,
}

impl StepFunction {
    pub fn value_at(&self, theta: f64) -> usize {
        self.jumps
            .iter()
            .take_while(|j| theta > j.theta)
            .last()
            .map_or(self.initial, |j| j.to)
    }

    /// Distinct values taken, in order.
    pub fn values(&self) -> Vec<usize> {
        std::iter::once(self.initial)
            .chain(self.jumps.iter().map(|j| j.to))
            .collect()
    }
}

/// Among `candidates` pick the steepest line, ties to the smallest `r`.
fn steepest(lines: &[(f64, f64)], candidates: &[usize]) -> usize {
    let mut best = candidates[0];
    for &r in &candidates[1..] {
        if lines[r - 1].1 > lines[best - 1].1 {
            best = r;
        }
    }
    best
}

/// Exact `theta` values where `r*` changes.
///
/// Each `A_r` is linear in `theta`, so `max_r A_r` is the upper envelope of
/// `n - 1` lines. Starting from the maximiser at `theta = 0`, the next switch is
/// the earliest crossing of the active line by any steeper line (all pairs are
/// considered, not only neighbours). Crossings within [`TIE_BAND`] of
/// `theta = 1` are treated as endpoint ties and dropped. Each resulting
/// interval is verified against a direct maximisation at its midpoint.
pub fn r_star_breakpoints(coeffs: &RankCoefficients) -> Result<StepFunction> {
    let lines = a_lines(coeffs);
    let at = |r: usize, theta: f64| lines[r - 1].0 + lines[r - 1].1 * theta;

    let start = optimal_r_star(coeffs, 0.0)?;
    let initial = start.r_star;
    let mut active = steepest(&lines, &start.tie_set);
    let mut jumps = Vec::new();
    if active != initial {
        jumps.push(Jump {
            theta: 0.0,
            from: initial,
            to: active,
        });
    }
    let mut theta = 0.0;
    loop {
        let (a0, b0) = lines[active - 1];
        let next = lines
            .iter()
            .filter(|&&(_, b)| b > b0)
            .map(|&(a, b)| (a0 - a) / (b - b0))
            .filter(|&t| t > theta)
            .fold(f64::INFINITY, f64::min);
        if next >= 1.0 - TIE_BAND {
            break;
        }
        let values: Vec<f64> = (1..=lines.len()).map(|r| at(r, next)).collect();
        let tied = tie_set(&values);
        let to = steepest(&lines, &tied);
        if lines[to - 1].1 <= b0 {
            // the crossing line fell outside the tie band; cannot happen for finite lines
            return Err(Error::Validation(format!(
                "breakpoint search stalled at theta = {next}"
            )));
        }
        jumps.push(Jump {
            theta: next,
            from: active,
            to,
        });
        active = to;
        theta = next;
    }

    let steps = StepFunction { initial, jumps };
    let mut edges = vec![0.0];
    edges.extend(steps.jumps.iter().map(|j| j.theta));
    edges.push(1.0);
    for w in edges.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let r = steps.value_at(mid);
        let best = optimal_r_star(coeffs, mid)?.m_star;
        if best - at(r, mid) > TIE_BAND * best.abs() {
            return Err(Error::Validation(format!(
                "breakpoint verification failed at theta = {mid}: r = {r} is not optimal"
            )));
        }
    }
    Ok(steps)
}

/// `max_r A_r(theta)`.
pub fn m_star(coeffs: &RankCoefficients, theta: f64) -> Result<f64> {
    Ok(optimal_r_star(coeffs, theta)?.m_star)
}

/// Sampled curvature of `x -> u(x; x*)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityDiagnostic {
    /// `(x, u_xx(x; x*))` at equally spaced points of `[0, x_bar]`.
    pub samples: Vec<(f64, f64)>,
    /// Every sampled second derivative is negative.
    pub concave: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub theta: f64,
    #[serde(rename = "R")]
    pub monetary: f64,
    #[serde(rename = "L")]
    pub psychological: f64,
    #[serde(rename = "M")]
    pub marginal_benefit: f64,
    pub x_star: f64,
    /// `M < -SIGN_BAND`: zero effort is the best response and `x* = 0` is
    /// reported. A rounding-level `M` counts as zero, not as a corner.
    pub corner: bool,
    /// Optimal number of equal top prizes at this `theta`.
    pub r_star: usize,
    pub tie_set: Vec<usize>,
    /// `A_r(theta)` for `r = 1..n-1`.
    pub a: Vec<f64>,
    pub concavity: Option<ConcavityDiagnostic>,
    /// `|best-response argmax - x*|` from simulation, when requested.
    pub foc_residual: Option<f64>,
}

/// Equilibrium effort with coefficients computed by quadrature, including the
/// concavity diagnostic.
pub fn equilibrium_effort(
    design: &TournamentDesign,
    v: &PrizeSchedule,
) -> Result<EquilibriumReport> {
    let coeffs = compute_beta(&design.dist, design.n)?;
    equilibrium_effort_with(design, &coeffs, v, true)
}

pub fn equilibrium_effort_with(
    design: &TournamentDesign,
    coeffs: &RankCoefficients,
    v: &PrizeSchedule,
    with_concavity: bool,
) -> Result<EquilibriumReport> {
    check_n(v.n(), design.n, "design")?;
    check_n(v.n(), coeffs.n(), "coefficient set")?;
    let theta = design.theta();
    let monetary = monetary_marginal_r(coeffs, v)?;
    let psychological = psychological_marginal_l(coeffs, v)?;
    let marginal_benefit = monetary + theta * psychological;
    let (x_star, corner) = if marginal_benefit <= 0.0 {
        (0.0, marginal_benefit < -SIGN_BAND)
    } else {
        (design.cost.inverse_marginal(marginal_benefit)?, false)
    };
    let optimal = optimal_r_star(coeffs, theta)?;
    let concavity = if with_concavity {
        Some(concavity_diagnostic(design, v, x_star)?)
    } else {
        None
    };
    Ok(EquilibriumReport {
        theta,
        monetary,
        psychological,
        marginal_benefit,
        x_star,
        corner,
        r_star: optimal.r_star,
        tie_set: optimal.tie_set,
        a: optimal.a,
        concavity,
        foc_residual: None,
    })
}

/// Second differences of `u(x; x_star)` at [`CONCAVITY_SAMPLES`] points of
/// `[0, x_bar]`; stencils are shifted inwards at the ends.
pub fn concavity_diagnostic(
    design: &TournamentDesign,
    v: &PrizeSchedule,
    x_star: f64,
) -> Result<ConcavityDiagnostic> {
    let x_bar = design.cost.x_bar();
    let h = 0.01 * x_bar;
    let mut samples = Vec::with_capacity(CONCAVITY_SAMPLES);
    for i in 0..CONCAVITY_SAMPLES {
        let x = x_bar * i as f64 / (CONCAVITY_SAMPLES - 1) as f64;
        let c = x.clamp(h, x_bar - h);
        let u = |y: f64| utility(design, v, y, x_star);
        let uxx = (u(c + h)? - 2.0 * u(c)? + u(c - h)?) / (h * h);
        samples.push((x, uxx));
    }
    let concave = samples.iter().all(|&(_, uxx)| uxx < 0.0);
    Ok(ConcavityDiagnostic { samples, concave })
}

/// Direction in which equilibrium effort moves with loss aversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffortSensitivity {
    Increasing,
    Decreasing,
    Zero,
    /// The numeric sign of `L(v)` contradicts the structural guarantee.
    AmbiguousNumeric,
}

impl fmt::Display for EffortSensitivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Increasing => "increasing",
            Self::Decreasing => "decreasing",
            Self::Zero => "zero",
            Self::AmbiguousNumeric => "ambiguous-numeric",
        })
    }
}

/// Sign of `L(v)` implied by the schedule's shape alone, when the shape decides it.
///
/// Differentials above the median rank carry positive weight, those below
/// negative weight, and `d_{n/2}` none. At most `floor(n/2)` positive prizes
/// leaves only non-positive weights; at least `ceil(n/2)` equal top prizes
/// leaves only non-negative ones.
pub fn structural_sensitivity(v: &PrizeSchedule) -> Option<EffortSensitivity> {
    let n = v.n();
    let d = v.differentials();
    let active = |keep: fn(usize, usize) -> bool| {
        d.values()
            .iter()
            .enumerate()
            .any(|(i, &d)| d > SCHEDULE_TOL && keep(2 * (i + 1), n))
    };
    if v.positive_count() <= n / 2 {
        Some(if active(|two_r, n| two_r < n) {
            EffortSensitivity::Decreasing
        } else {
            EffortSensitivity::Zero
        })
    } else if v.top_tie_count() >= n.div_ceil(2) {
        Some(if active(|two_r, n| two_r > n) {
            EffortSensitivity::Increasing
        } else {
            EffortSensitivity::Zero
        })
    } else {
        None
    }
}

/// Sign of `dx*/dtheta`, i.e. of `L(v)`, checked against the structural rule.
pub fn effort_sensitivity_sign(
    coeffs: &RankCoefficients,
    v: &PrizeSchedule,
) -> Result<EffortSensitivity> {
    let l = psychological_marginal_l(coeffs, v)?;
    let numeric = if l > SIGN_BAND {
        EffortSensitivity::Increasing
    } else if l < -SIGN_BAND {
        EffortSensitivity::Decreasing
    } else {
        EffortSensitivity::Zero
    };
    match structural_sensitivity(v) {
        Some(s) if s != numeric => Ok(EffortSensitivity::AmbiguousNumeric),
        _ => Ok(numeric),
    }
}

/// Coefficient on `v_n` in `M(v, theta)`, `(1 + theta (n-2)/n) beta_n`; negative,
/// so optimal schedules give the last rank nothing.
pub fn vn_coefficient(coeffs: &RankCoefficients, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let n = coeffs.n() as f64;
    Ok((1.0 + theta * (n - 2.0) / n) * coeffs.beta()[coeffs.n() - 1])
}
