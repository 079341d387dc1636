//! Seeded Monte Carlo oracle for rank probabilities, `beta_r` and best responses.
//!
//! Every replication draws `n` shocks by inverse-cdf sampling from a ChaCha8
//! stream. Replication `i` reads the stream from word `2 n i` (one `u64` per
//! shock), so any replication can be regenerated on its own. The replications
//! are processed in parallel chunks, and chunks only add integer counts. This
//! makes estimates bitwise identical for every chunk size and thread count.
//!
//! The focal agent is agent 1 with output `delta + eps_1`. Its rank is one plus
//! the number of rivals with strictly larger output, so ties go to the focal agent.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::incentives::{equilibrium_effort_with, utility_from_probabilities, TournamentDesign};
use crate::noise::Noise;
use crate::prizes::PrizeSchedule;
use crate::rank_stats::{CoefficientMethod, RankCoefficients};

pub const MIN_SAMPLES: u64 = 1_000;

/// Largest `n` for which the dense rank-transition table is kept.
pub const MAX_MC_RANKS: usize = 2_048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub samples: u64,
    pub seed: u64,
    /// Half-width `h` of the central difference `(p(h) - p(-h)) / 2h`.
    pub fd_step: f64,
    /// Replications per parallel work unit; does not affect results.
    pub chunk_size: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0,
            fd_step: 1e-3,
            chunk_size: 1 << 14,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::Domain(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                self.samples
            )));
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(Error::Domain(format!(
                "fd_step must be > 0, got {}",
                self.fd_step
            )));
        }
        if self.chunk_size == 0 {
            return Err(Error::Domain("chunk_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    /// `(reference - value) / std_error`; zero when both the difference and the
    /// standard error vanish.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = reference - self.value;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

fn unit_open(bits: u64) -> f64 {
    // 52 random bits at the cell midpoints: strictly inside (0, 1), and
    // 1 - 2^-53 is still representable
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Runs all replications. For each one, `record` receives the focal agent's
/// 0-based rank at every entry of `deltas` and adds to a chunk-local integer
/// tally of length `width`. Tallies are summed at the end.
fn tally<D, F>(
    dist: &D,
    n: usize,
    deltas: &[f64],
    cfg: &SimulationConfig,
    width: usize,
    record: F,
) -> Result<Vec<u64>>
where
    D: Noise + ?Sized,
    F: Fn(&mut [u64], &[usize]) + Sync,
{
    cfg.validate()?;
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got {n}")));
    }
    if n > MAX_MC_RANKS {
        return Err(Error::Domain(format!(
            "simulation supports n <= {MAX_MC_RANKS}, got {n}"
        )));
    }
    if let Some(d) = deltas.iter().find(|d| !d.is_finite()) {
        return Err(Error::Domain(format!("delta must be finite, got {d}")));
    }
    let chunks = cfg.samples.div_ceil(cfg.chunk_size);
    let partials: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * cfg.chunk_size;
            let end = (start + cfg.chunk_size).min(cfg.samples);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_word_pos(u128::from(start) * 2 * n as u128);
            let mut counts = vec![0u64; width];
            let mut rivals = vec![0.0; n - 1];
            let mut ranks = vec![0usize; deltas.len()];
            for _ in start..end {
                let focal = dist.quantile(unit_open(rng.next_u64()));
                for r in rivals.iter_mut() {
                    *r = dist.quantile(unit_open(rng.next_u64()));
                }
                rivals.sort_unstable_by(f64::total_cmp);
                for (rank, &delta) in ranks.iter_mut().zip(deltas) {
                    let out = delta + focal;
                    *rank = rivals.len() - rivals.partition_point(|&e| e <= out);
                }
                record(&mut counts, &ranks);
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; width];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    Ok(total)
}

fn proportion(count: u64, samples: u64) -> McEstimate {
    let nf = samples as f64;
    let p = count as f64 / nf;
    McEstimate {
        value: p,
        std_error: (p * (1.0 - p) / nf).sqrt(),
        samples,
    }
}

/// Rank frequencies of the focal agent at every `delta` from one set of draws.
/// Entry `[g][r]` is rank `r + 1` at `deltas[g]`.
pub fn mc_rank_probabilities_grid<D: Noise + ?Sized>(
    dist: &D,
    n: usize,
    deltas: &[f64],
    cfg: &SimulationConfig,
) -> Result<Vec<Vec<McEstimate>>> {
    let counts = tally(dist, n, deltas, cfg, deltas.len() * n, |c, ranks| {
        for (g, &r) in ranks.iter().enumerate() {
            c[g * n + r] += 1;
        }
    })?;
    Ok(counts
        .chunks(n)
        .map(|row| row.iter().map(|&k| proportion(k, cfg.samples)).collect())
        .collect())
}

pub fn mc_rank_probabilities<D: Noise + ?Sized>(
    dist: &D,
    n: usize,
    delta: f64,
    cfg: &SimulationConfig,
) -> Result<Vec<McEstimate>> {
    Ok(mc_rank_probabilities_grid(dist, n, &[delta], cfg)?.remove(0))
}

/// Central-difference estimate of `beta` with common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McBeta {
    pub n: usize,
    pub fd_step: f64,
    pub samples: u64,
    pub estimates: Vec<McEstimate>,
    /// Standard errors the same difference would have if `p(h)` and `p(-h)`
    /// came from independent runs.
    pub naive_std_errors: Vec<f64>,
    /// `transitions[a * n + b]`: replications ranked `a + 1` at `+h` and `b + 1` at `-h`.
    #[serde(skip)]
    transitions: Vec<u64>,
}

impl McBeta {
    /// `sum_k w_k beta_k` with the standard error of the paired differences.
    pub fn combination(&self, w: &[f64]) -> Result<McEstimate> {
        if w.len() != self.n {
            return Err(Error::Domain(format!(
                "need {} weights, got {}",
                self.n,
                w.len()
            )));
        }
        let nf = self.samples as f64;
        let scale = 2.0 * self.fd_step;
        let (mut mean, mut second) = (0.0, 0.0);
        for a in 0..self.n {
            for b in 0..self.n {
                let k = self.transitions[a * self.n + b];
                if k > 0 {
                    let y = (w[a] - w[b]) / scale;
                    mean += k as f64 * y;
                    second += k as f64 * y * y;
                }
            }
        }
        mean /= nf;
        let var = (second / nf - mean * mean).max(0.0);
        Ok(McEstimate {
            value: mean,
            std_error: (var / nf).sqrt(),
            samples: self.samples,
        })
    }

    pub fn coefficients(&self) -> Result<RankCoefficients> {
        RankCoefficients::from_beta(
            self.estimates.iter().map(|e| e.value).collect(),
            CoefficientMethod::MonteCarlo,
        )
    }
}

pub fn mc_beta<D: Noise + ?Sized>(dist: &D, n: usize, cfg: &SimulationConfig) -> Result<McBeta> {
    mc_beta_at(dist, n, 0.0, cfg)
}

/// [`mc_beta`] centred at `delta` instead of the symmetric point.
pub fn mc_beta_at<D: Noise + ?Sized>(
    dist: &D,
    n: usize,
    delta: f64,
    cfg: &SimulationConfig,
) -> Result<McBeta> {
    let h = cfg.fd_step;
    let transitions = tally(dist, n, &[delta + h, delta - h], cfg, n * n, |c, ranks| {
        c[ranks[0] * n + ranks[1]] += 1;
    })?;
    let nf = cfg.samples as f64;
    let mut estimates = Vec::with_capacity(n);
    let mut naive = Vec::with_capacity(n);
    for r in 0..n {
        let plus: u64 = (0..n).map(|b| transitions[r * n + b]).sum();
        let minus: u64 = (0..n).map(|a| transitions[a * n + r]).sum();
        let stay = transitions[r * n + r];
        let mean = (plus as f64 - minus as f64) / (2.0 * h * nf);
        // E[X^2] with X = (1{rank(+h) = r} - 1{rank(-h) = r}) / 2h
        let second = (plus + minus - 2 * stay) as f64 / (4.0 * h * h * nf);
        let var = (second - mean * mean).max(0.0);
        estimates.push(McEstimate {
            value: mean,
            std_error: (var / nf).sqrt(),
            samples: cfg.samples,
        });
        let (pp, pm) = (plus as f64 / nf, minus as f64 / nf);
        naive.push(((pp * (1.0 - pp) + pm * (1.0 - pm)) / nf).sqrt() / (2.0 * h));
    }
    Ok(McBeta {
        n,
        fd_step: h,
        samples: cfg.samples,
        estimates,
        naive_std_errors: naive,
        transitions,
    })
}

/// Weights `w_k` with `M(v, theta) = sum_k w_k beta_k`.
pub fn marginal_weights(v: &PrizeSchedule, theta: f64) -> Vec<f64> {
    let vals = v.values();
    let n = vals.len();
    let nf = n as f64;
    let mut below = 0.0;
    let mut w = vec![0.0; n];
    for k in (0..n).rev() {
        let rank = (k + 1) as f64;
        w[k] = vals[k] + theta * (2.0 * below - (nf - 2.0 * rank) * vals[k]) / nf;
        below += vals[k];
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponse {
    /// Grid point with the largest estimated utility (first one on ties).
    pub argmax: f64,
    /// `(x, u(x; x*))` along the grid.
    pub curve: Vec<(f64, f64)>,
    /// Largest gap between neighbouring grid points.
    pub grid_step: f64,
    /// Standard error of the simulated marginal benefit over one grid step.
    pub marginal_std_error: f64,
}

/// Utility of each grid effort against rivals at `x_star`, using simulated rank
/// probabilities (common draws across the grid) in the reduced utility.
pub fn mc_best_response(
    design: &TournamentDesign,
    v: &PrizeSchedule,
    x_star: f64,
    cfg: &SimulationConfig,
    grid: &[f64],
) -> Result<BestResponse> {
    let n = design.n();
    if v.n() != n {
        return Err(Error::Domain(format!(
            "schedule has {} ranks but the design has {n}",
            v.n()
        )));
    }
    let x_bar = design.cost().x_bar();
    if grid.is_empty() || grid.iter().any(|x| !(0.0..=x_bar).contains(x)) {
        return Err(Error::Domain(format!(
            "grid must be a non-empty subset of [0, {x_bar}]"
        )));
    }
    if !(0.0..=x_bar).contains(&x_star) {
        return Err(Error::Domain(format!(
            "x_star = {x_star} outside [0, {x_bar}]"
        )));
    }
    let deltas: Vec<f64> = grid.iter().map(|x| x - x_star).collect();
    let probs = mc_rank_probabilities_grid(design.dist(), n, &deltas, cfg)?;
    let theta = design.theta();
    let mut curve = Vec::with_capacity(grid.len());
    for (&x, row) in grid.iter().zip(&probs) {
        let p: Vec<f64> = row.iter().map(|e| e.value).collect();
        curve.push((
            x,
            utility_from_probabilities(&p, v, theta, design.cost().cost(x))?,
        ));
    }
    let argmax = curve
        .iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, &(x, u)| {
            if u > best.1 {
                (x, u)
            } else {
                best
            }
        })
        .0;

    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let grid_step = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let marginal_std_error = if grid_step > 0.0 {
        let step_cfg = SimulationConfig {
            fd_step: 0.5 * grid_step,
            ..*cfg
        };
        mc_beta(design.dist(), n, &step_cfg)?
            .combination(&marginal_weights(v, theta))?
            .std_error
    } else {
        0.0
    };
    Ok(BestResponse {
        argmax,
        curve,
        grid_step,
        marginal_std_error,
    })
}

/// `points` equally spaced efforts on `[x_star - half_width, x_star + half_width]`
/// clipped to `[0, x_bar]`.
pub fn local_grid(x_star: f64, half_width: f64, points: usize, x_bar: f64) -> Vec<f64> {
    let lo = (x_star - half_width).max(0.0);
    let hi = (x_star + half_width).min(x_bar);
    if points < 2 || hi <= lo {
        return vec![x_star.clamp(0.0, x_bar)];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResidual {
    pub x_star: f64,
    pub argmax: f64,
    /// `|argmax - x*|`.
    pub residual: f64,
    /// Grid step plus three standard errors of the argmax, `3 se(M) / c''(x*)`.
    pub tolerance: f64,
    pub grid_step: f64,
    pub marginal_std_error: f64,
}

impl EquilibriumResidual {
    pub fn within_tolerance(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Analytic `x*` against the simulated best response to `x*` on `grid`.
pub fn equilibrium_residual(
    design: &TournamentDesign,
    coeffs: &RankCoefficients,
    v: &PrizeSchedule,
    cfg: &SimulationConfig,
    grid: &[f64],
) -> Result<EquilibriumResidual> {
    let x_star = equilibrium_effort_with(design, coeffs, v, false)?.x_star;
    let br = mc_best_response(design, v, x_star, cfg, grid)?;
    let curvature = design.cost().second_derivative(x_star);
    let spread = if curvature > 0.0 && curvature.is_finite() {
        3.0 * br.marginal_std_error / curvature
    } else {
        0.0
    };
    Ok(EquilibriumResidual {
        x_star,
        argmax: br.argmax,
        residual: (br.argmax - x_star).abs(),
        tolerance: br.grid_step + spread,
        grid_step: br.grid_step,
        marginal_std_error: br.marginal_std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incentives::{CostFunction, LossAversionParams};
    use crate::noise::NoiseDistribution;

    fn cfg(samples: u64) -> SimulationConfig {
        SimulationConfig {
            samples,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn open_unit_interval() {
        assert!(unit_open(0) > 0.0);
        assert!(unit_open(u64::MAX) < 1.0);
    }

    #[test]
    fn chunking_does_not_change_results() {
        let d = NoiseDistribution::Gumbel;
        let a = mc_rank_probabilities(&d, 5, 0.1, &cfg(10_000)).unwrap();
        let small = SimulationConfig {
            chunk_size: 333,
            ..cfg(10_000)
        };
        let b = mc_rank_probabilities(&d, 5, 0.1, &small).unwrap();
        assert_eq!(a, b);
        let again = mc_rank_probabilities(&d, 5, 0.1, &cfg(10_000)).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn equal_split_at_zero() {
        let est = mc_rank_probabilities(&NoiseDistribution::Burr, 5, 0.0, &cfg(200_000)).unwrap();
        let total: f64 = est.iter().map(|e| e.value).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for e in est {
            assert!(e.z_score(0.2).abs() < 4.0, "{e:?}");
        }
    }

    #[test]
    fn beta_sums_to_zero_and_crn_helps() {
        let d = NoiseDistribution::uniform(1.0).unwrap();
        let b = mc_beta(&d, 4, &cfg(200_000)).unwrap();
        let total: f64 = b.estimates.iter().map(|e| e.value).sum();
        assert!(total.abs() < 1e-9);
        assert!(b.estimates[1].std_error < b.naive_std_errors[1]);
        // combination with unit weight on one rank reproduces that rank
        let w = [1.0, 0.0, 0.0, 0.0];
        let c = b.combination(&w).unwrap();
        assert!((c.value - b.estimates[0].value).abs() < 1e-12);
        assert!((c.std_error - b.estimates[0].std_error).abs() < 1e-12);
    }

    #[test]
    fn weights_match_marginal_benefit() {
        let c = crate::rank_stats::compute_beta(&NoiseDistribution::Burr, 7).unwrap();
        let v = PrizeSchedule::new(vec![0.4, 0.3, 0.2, 0.1, 0.0, 0.0, 0.0]).unwrap();
        for theta in [0.0, 0.4, 1.0] {
            let w = marginal_weights(&v, theta);
            let via_w: f64 = w.iter().zip(c.beta()).map(|(w, b)| w * b).sum();
            let m = crate::incentives::marginal_benefit_m(&c, &v, theta).unwrap();
            assert!((via_w - m).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_schedule_best_response_is_zero() {
        let design = TournamentDesign::new(
            4,
            NoiseDistribution::Gumbel,
            LossAversionParams::from_theta(0.0).unwrap(),
            CostFunction::quadratic(1.0).unwrap(),
        )
        .unwrap();
        let coeffs = crate::rank_stats::compute_beta(design.dist(), 4).unwrap();
        let v = PrizeSchedule::flat(4).unwrap();
        let grid = local_grid(0.0, 0.5, 11, design.cost().x_bar());
        let r = equilibrium_residual(&design, &coeffs, &v, &cfg(2_000), &grid).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn rejects_bad_config() {
        let d = NoiseDistribution::Gumbel;
        assert!(mc_rank_probabilities(&d, 3, 0.0, &cfg(10)).is_err());
        let bad = SimulationConfig {
            fd_step: 0.0,
            ..cfg(10_000)
        };
        assert!(mc_beta(&d, 3, &bad).is_err());
    }
}
