//! Composite Gauss–Legendre quadrature with dyadic refinement.
//!
//! The integration interval is bisected repeatedly. Each subinterval carries a
//! coarse estimate (one Gauss–Legendre panel over the whole subinterval) and a
//! fine estimate (one panel on each half); their difference is the local error
//! estimate. The subinterval with the largest error is refined until the summed
//! error drops below `max(abs_tol, rel_tol * |integral|)`. Nodes are strictly
//! interior, so integrands that vanish or blow up at the endpoints are never
//! evaluated there.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const GL_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum bisection depth; a subinterval at this level is never split.
    pub max_level: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_level: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

/// Nodes and weights of the `GL_POINTS`-point rule on [-1, 1].
fn gauss_legendre_rule() -> &'static [(f64, f64); GL_POINTS] {
    static RULE: OnceLock<[(f64, f64); GL_POINTS]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut rule = [(0.0, 0.0); GL_POINTS];
        for (i, slot) in rule.iter_mut().enumerate() {
            // Chebyshev initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre_rule()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    level: u32,
    left: f64,
    right: f64,
    error: f64,
}

impl Segment {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, level: u32, coarse: f64) -> Self {
        let m = 0.5 * (a + b);
        let left = panel(f, a, m);
        let right = panel(f, m, b);
        Self {
            a,
            b,
            level,
            left,
            right,
            error: (coarse - (left + right)).abs(),
        }
    }

    fn fine(&self) -> f64 {
        self.left + self.right
    }
}

/// Integrates `f` over `(a, b)` with the default options.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<QuadratureResult> {
    integrate_with(f, a, b, QuadratureOptions::default())
}

pub fn integrate_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadratureOptions,
) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Domain(format!(
            "quadrature needs a finite interval with a < b, got ({a}, {b})"
        )));
    }

    let coarse = panel(&f, a, b);
    let mut segments = vec![Segment::new(&f, a, b, 0, coarse)];

    loop {
        let value: f64 = segments.iter().map(Segment::fine).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::NonConvergence {
                estimate: value,
                error_estimate: error,
            });
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            segments.sort_by(|x, y| x.a.total_cmp(&y.a));
            let value = segments.iter().map(Segment::fine).sum();
            return Ok(QuadratureResult {
                value,
                error_estimate: error,
                intervals: segments.len(),
            });
        }

        let worst = segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.level < opts.max_level)
            .max_by(|(_, x), (_, y)| x.error.total_cmp(&y.error))
            .map(|(i, _)| i);
        let Some(idx) = worst else {
            return Err(Error::NonConvergence {
                estimate: value,
                error_estimate: error,
            });
        };
        let frozen: f64 = segments
            .iter()
            .filter(|s| s.level >= opts.max_level)
            .map(|s| s.error)
            .sum();
        if frozen > target {
            return Err(Error::NonConvergence {
                estimate: value,
                error_estimate: error,
            });
        }

        let parent = segments.swap_remove(idx);
        let m = 0.5 * (parent.a + parent.b);
        segments.push(Segment::new(&f, parent.a, m, parent.level + 1, parent.left));
        segments.push(Segment::new(
            &f,
            m,
            parent.b,
            parent.level + 1,
            parent.right,
        ));
    }
}

/// Integrates over `(a, b)` split at the interior `breaks`, where the integrand
/// may have a kink the error estimate could otherwise miss.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
) -> Result<QuadratureResult> {
    let mut points: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    points.insert(0, a);
    points.push(b);
    let mut total = QuadratureResult {
        value: 0.0,
        error_estimate: 0.0,
        intervals: 0,
    };
    for w in points.windows(2) {
        let piece = integrate_with(&f, w[0], w[1], QuadratureOptions::default())?;
        total.value += piece.value;
        total.error_estimate += piece.error_estimate;
        total.intervals += piece.intervals;
    }
    Ok(total)
}
