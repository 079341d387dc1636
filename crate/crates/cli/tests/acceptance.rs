//! Acceptance suite: one PASS/FAIL line per criterion, with the tolerances
//! pinned below. Runs without the libtest harness so the lines always reach
//! the test output; exits non-zero if any required check fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tournament_core::incentives::{
    a_r, gain_loss_balance, m_star, optimal_r_star, psychological_marginal_forms,
    psychological_marginal_l, r_star_breakpoints, utility_from_probabilities,
    utility_reference_form, vn_coefficient, CostFunction, LossAversionParams, TournamentDesign,
};
use tournament_core::noise::{Noise, NoiseDistribution};
use tournament_core::prizes::PrizeSchedule;
use tournament_core::rank_stats::{compute_beta, r_hat, rank_probabilities};
use tournament_core::simulate::{
    equilibrium_residual, local_grid, mc_beta, mc_rank_probabilities_grid, SimulationConfig,
};

const CLOSED_FORM_REL_TOL: f64 = 1e-8;
const CLOSED_FORM_SECONDS: f64 = 5.0;
const UNIFORM_TOL: f64 = 1e-10;
const BREAKPOINT_TOL: f64 = 0.01;
const PARETO_M_TOL: f64 = 1e-10;
const GUMBEL_M0_TOL: f64 = 1e-5;
const GUMBEL_MIN_VALUE_TOL: f64 = 5e-5;
const GUMBEL_MIN_THETA_TOL: f64 = 0.02;
const BURR_M_TOL: f64 = 1e-4;
const FORMS_TOL: f64 = 1e-10;
const EQUIDISTANT_TOL: f64 = 1e-9;
const UTILITY_TOL: f64 = 1e-10;
const MC_SAMPLES: u64 = 1_000_000;
const MC_SEED: u64 = 42;
const MC_SE_BOUND: f64 = 3.0;
const MC_SECONDS: f64 = 120.0;
/// Statistical gate for the 3-SE check: no cell beyond 4 SE and at most this
/// many beyond 3 SE (about 0.7 expected among 264 cells, P(>= 5) < 1%).
const MC_GATE_Z: f64 = 4.0;
const MC_GATE_EXCEEDANCES: usize = 4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn theta_grid(step_count: usize) -> Vec<f64> {
    (0..=step_count)
        .map(|i| i as f64 / step_count as f64)
        .collect()
}

fn figure_families() -> [NoiseDistribution; 3] {
    [
        NoiseDistribution::gumbel(),
        NoiseDistribution::pareto(),
        NoiseDistribution::burr(),
    ]
}

fn random_schedule(rng: &mut ChaCha8Rng, n: usize) -> PrizeSchedule {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    // sparse schedules too: zero out a random tail
    let keep = rng.gen_range(1..=n);
    v.iter_mut().skip(keep).for_each(|x| *x = 0.0);
    v.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    PrizeSchedule::new(v).expect("normalised non-increasing schedule")
}

fn closed_form_agreement() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0, String::new());
    for dist in figure_families() {
        for n in 2..=15 {
            let c = compute_beta(&dist, n).unwrap();
            // B_n = 0 holds by construction; compare r < n
            for r in 1..n {
                let cf = dist.closed_form_b(n, r).unwrap().unwrap();
                let err = if cf == 0.0 {
                    c.b(r).abs()
                } else {
                    (c.b(r) - cf).abs() / cf.abs()
                };
                if err > worst.0 {
                    worst = (err, format!("{dist} n={n} r={r}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst.0 <= CLOSED_FORM_REL_TOL && secs < CLOSED_FORM_SECONDS,
        format!(
            "max rel err {:.2e} at {} (tol {CLOSED_FORM_REL_TOL:e}); {secs:.2} s (limit {CLOSED_FORM_SECONDS} s)",
            worst.0, worst.1
        ),
    )
}

fn uniform_example() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut r_star_ok = true;
    for b in [1.0, 2.5] {
        let dist = NoiseDistribution::uniform(b).unwrap();
        for n in 2..=15 {
            let c = compute_beta(&dist, n).unwrap();
            for (i, &beta) in c.beta().iter().enumerate() {
                let expect = match i {
                    0 => 1.0 / b,
                    _ if i == n - 1 => -1.0 / b,
                    _ => 0.0,
                };
                worst = worst.max((beta - expect).abs());
            }
            for theta in theta_grid(100) {
                let a = a_r(&c, theta).unwrap();
                for (i, &ar) in a.iter().enumerate() {
                    let r = (i + 1) as f64;
                    let expect = (1.0 - theta) / (b * r) + 2.0 * theta / (n as f64 * b);
                    worst = worst.max((ar - expect).abs());
                }
                r_star_ok &= optimal_r_star(&c, theta).unwrap().r_star == 1;
            }
        }
    }
    outcome(
        worst <= UNIFORM_TOL && r_star_ok,
        format!("max |err| in beta and A_r {worst:.2e} (tol {UNIFORM_TOL:e}); r* = 1 on the grid: {r_star_ok}"),
    )
}

fn optimal_endpoints() -> Outcome {
    let r = |dist: &NoiseDistribution, theta: f64| {
        optimal_r_star(&compute_beta(dist, 15).unwrap(), theta)
            .unwrap()
            .r_star
    };
    let burr = (
        r(&NoiseDistribution::burr(), 0.0),
        r(&NoiseDistribution::burr(), 1.0),
    );
    let pareto_c = compute_beta(&NoiseDistribution::pareto(), 15).unwrap();
    let pareto: Vec<usize> = theta_grid(100)
        .into_iter()
        .map(|t| optimal_r_star(&pareto_c, t).unwrap().r_star)
        .collect();
    let gumbel = r(&NoiseDistribution::gumbel(), 0.0);
    let pass = burr == (7, 11) && pareto.iter().all(|&r| r == 14) && gumbel == 1;
    outcome(
        pass,
        format!(
            "burr r*(0), r*(1) = {burr:?}; pareto r* = 14 on grid: {}; gumbel r*(0) = {gumbel}",
            pareto.iter().all(|&r| r == 14)
        ),
    )
}

fn breakpoints() -> Outcome {
    let burr = r_star_breakpoints(&compute_beta(&NoiseDistribution::burr(), 15).unwrap()).unwrap();
    let targets = [0.07, 0.2, 0.39, 0.71];
    let burr_thetas: Vec<f64> = burr.jumps.iter().map(|j| j.theta).collect();
    let burr_ok = burr_thetas.len() == targets.len()
        && burr_thetas
            .iter()
            .zip(targets)
            .all(|(t, want)| (t - want).abs() <= BREAKPOINT_TOL);
    let gumbel =
        r_star_breakpoints(&compute_beta(&NoiseDistribution::gumbel(), 15).unwrap()).unwrap();
    let last = gumbel.jumps.last().copied();
    let gumbel_ok = last.is_some_and(|j| j.to == 9 && (j.theta - 0.77).abs() <= BREAKPOINT_TOL);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|t| format!("{t:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    outcome(
        burr_ok && gumbel_ok,
        format!(
            "burr jumps at [{}] vs [0.07, 0.2, 0.39, 0.71] +-{BREAKPOINT_TOL}; gumbel last jump {:?}",
            fmt(&burr_thetas),
            last.map(|j| (j.from, j.to, (j.theta * 1e4).round() / 1e4))
        ),
    )
}

fn m_star_curves() -> Outcome {
    let pareto = compute_beta(&NoiseDistribution::pareto(), 15).unwrap();
    let pareto_err = theta_grid(100)
        .into_iter()
        .map(|t| (m_star(&pareto, t).unwrap() - (1.0 + 13.0 * t / 15.0) / 16.0).abs())
        .fold(0.0, f64::max);

    let gumbel = compute_beta(&NoiseDistribution::gumbel(), 15).unwrap();
    let g0 = m_star(&gumbel, 0.0).unwrap();
    let (g_theta, g_min) = theta_grid(1000)
        .into_iter()
        .map(|t| (t, m_star(&gumbel, t).unwrap()))
        .fold((f64::NAN, f64::INFINITY), |best, (t, m)| {
            if m < best.1 {
                (t, m)
            } else {
                best
            }
        });

    let burr = compute_beta(&NoiseDistribution::burr(), 15).unwrap();
    let (b0, b1) = (m_star(&burr, 0.0).unwrap(), m_star(&burr, 1.0).unwrap());

    let pass = pareto_err <= PARETO_M_TOL
        && (g0 - 0.0622222).abs() <= GUMBEL_M0_TOL
        && (g_min - 0.04397).abs() <= GUMBEL_MIN_VALUE_TOL
        && (g_theta - 0.58).abs() <= GUMBEL_MIN_THETA_TOL
        && g_theta > 0.0
        && g_theta < 1.0
        && (b0 - 0.064617).abs() <= BURR_M_TOL
        && (b1 - 0.08123).abs() <= BURR_M_TOL;
    outcome(
        pass,
        format!(
            "pareto max err {pareto_err:.1e}; gumbel M*(0) = {g0:.7}, min {g_min:.6} at theta = {g_theta}; \
             burr M*(0) = {b0:.6}, M*(1) = {b1:.6}"
        ),
    )
}

fn representation_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for dist in NoiseDistribution::builtin() {
        for n in [3, 8, 15] {
            let c = compute_beta(&dist, n).unwrap();
            for _ in 0..100 {
                let v = random_schedule(&mut rng, n);
                let f = psychological_marginal_forms(&c, &v).unwrap();
                worst = worst
                    .max((f.differential_form - f.double_sum).abs())
                    .max((f.differential_form - f.per_prize).abs());
                cases += 1;
            }
        }
    }
    outcome(
        worst <= FORMS_TOL,
        format!("{cases} schedules, max pairwise gap {worst:.2e} (tol {FORMS_TOL:e})"),
    )
}

fn comparative_statics_suite() -> Outcome {
    let grid = theta_grid(100);
    let mut failures = Vec::new();
    for dist in NoiseDistribution::builtin() {
        let sandwich = matches!(
            dist,
            NoiseDistribution::Gumbel | NoiseDistribution::Burr | NoiseDistribution::Normal { .. }
        );
        for n in 3..=15 {
            let c = compute_beta(&dist, n).unwrap();
            let rh = r_hat(&c);
            let stars: Vec<usize> = grid
                .iter()
                .map(|&t| optimal_r_star(&c, t).unwrap().r_star)
                .collect();
            if stars.windows(2).any(|w| w[1] < w[0]) {
                failures.push(format!("{dist} n={n}: r* not monotone"));
            }
            if sandwich && stars.iter().any(|&r| r < stars[0] || r > rh) {
                failures.push(format!("{dist} n={n}: r* outside [r*_0, r_hat = {rh}]"));
            }
            for s in (1..n).filter(|&s| 2 * s != n) {
                let l = psychological_marginal_l(&c, &PrizeSchedule::top(n, s).unwrap()).unwrap();
                let want = if 2 * s < n { -1.0 } else { 1.0 };
                if l * want <= 0.0 {
                    failures.push(format!("{dist} n={n} s={s}: L = {l:e} has the wrong sign"));
                }
            }
            if matches!(dist, NoiseDistribution::Normal { .. }) {
                let l =
                    psychological_marginal_l(&c, &PrizeSchedule::equidistant(n).unwrap()).unwrap();
                if l.abs() > EQUIDISTANT_TOL {
                    failures.push(format!("normal n={n}: L(equidistant) = {l:e}"));
                }
            }
            for &t in &grid {
                let k = vn_coefficient(&c, t).unwrap();
                if k >= 0.0 {
                    failures.push(format!("{dist} n={n} theta={t}: v_n coefficient {k:e}"));
                    break;
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "monotone r*, sandwich, sign law, L(equidistant) = 0 for normal, v_n coefficient < 0: \
             5 families x n = 3..15"
                .to_string()
        } else {
            failures.join("; ")
        },
    )
}

fn utility_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut eq_gap, mut balance): (f64, f64) = (0.0, 0.0);
    let draws = 2000;
    for _ in 0..draws {
        let n = rng.gen_range(2..=15);
        let mut p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        let v = random_schedule(&mut rng, n);
        let eta = rng.gen_range(0.1..2.0);
        let lambda = 1.0 + rng.gen_range(0.0..1.0) / eta;
        let loss = LossAversionParams::from_eta_lambda(eta, lambda).unwrap();
        let cost = rng.gen_range(0.0..0.5);
        let reduced = utility_from_probabilities(&p, &v, loss.theta(), cost).unwrap();
        let reference = utility_reference_form(&p, &v, eta, lambda, cost).unwrap();
        eq_gap = eq_gap.max((reduced - reference).abs());
        balance = balance.max(gain_loss_balance(&p, &v).unwrap().abs());
    }
    outcome(
        eq_gap <= UTILITY_TOL && balance <= UTILITY_TOL,
        format!(
            "{draws} draws: reduced vs reference form {eq_gap:.2e}, cancellation {balance:.2e} (tol {UTILITY_TOL:e})"
        ),
    )
}

/// Returns the strict outcome and whether the statistical gate holds.
fn oracle_agreement() -> (Outcome, bool) {
    let start = Instant::now();
    let cfg = SimulationConfig {
        samples: MC_SAMPLES,
        seed: MC_SEED,
        ..SimulationConfig::default()
    };
    let families = [
        NoiseDistribution::uniform(1.0).unwrap(),
        NoiseDistribution::gumbel(),
        NoiseDistribution::pareto(),
        NoiseDistribution::burr(),
    ];
    let mut zs: Vec<(f64, String)> = Vec::new();
    for dist in &families {
        for n in [2, 5, 15] {
            let c = compute_beta(dist, n).unwrap();
            let beta = mc_beta(dist, n, &cfg).unwrap();
            for (r, est) in beta.estimates.iter().enumerate() {
                zs.push((
                    est.z_score(c.beta()[r]),
                    format!("{dist} n={n} beta_{}", r + 1),
                ));
            }
            let deltas = [0.0, 0.25];
            let probs = mc_rank_probabilities_grid(dist, n, &deltas, &cfg).unwrap();
            for (&delta, row) in deltas.iter().zip(&probs) {
                let exact = rank_probabilities(dist, n, delta).unwrap();
                for (r, est) in row.iter().enumerate() {
                    zs.push((
                        est.z_score(exact[r]),
                        format!("{dist} n={n} delta={delta} p_{}", r + 1),
                    ));
                }
            }
        }
    }

    let designs = [
        (
            NoiseDistribution::pareto(),
            15,
            PrizeSchedule::top(15, 14).unwrap(),
            0.0,
            1.0,
        ),
        (
            NoiseDistribution::burr(),
            15,
            PrizeSchedule::top(15, 7).unwrap(),
            0.5,
            1.0,
        ),
        (
            NoiseDistribution::uniform(1.0).unwrap(),
            2,
            PrizeSchedule::winner_take_all(2).unwrap(),
            0.0,
            4.0,
        ),
    ];
    let mut br_ok = true;
    let mut br_detail = Vec::new();
    for (dist, n, v, theta, c0) in designs {
        let design = TournamentDesign::new(
            n,
            dist.clone(),
            LossAversionParams::from_theta(theta).unwrap(),
            CostFunction::quadratic(c0).unwrap(),
        )
        .unwrap();
        let c = compute_beta(&dist, n).unwrap();
        let x_bar = design.cost().x_bar();
        let x_star = tournament_core::incentives::equilibrium_effort_with(&design, &c, &v, false)
            .unwrap()
            .x_star;
        let grid = local_grid(x_star, 0.1 * x_bar, 41, x_bar);
        let res = equilibrium_residual(&design, &c, &v, &cfg, &grid).unwrap();
        br_ok &= res.within_tolerance();
        br_detail.push(format!(
            "{dist} n={n}: {:.1e} <= {:.1e}",
            res.residual, res.tolerance
        ));
    }
    let secs = start.elapsed().as_secs_f64();

    let (max_z, at) = zs.iter().fold((0.0, ""), |best, (z, label)| {
        if z.abs() > best.0 {
            (z.abs(), label.as_str())
        } else {
            best
        }
    });
    let beyond: Vec<&str> = zs
        .iter()
        .filter(|(z, _)| z.abs() > MC_SE_BOUND)
        .map(|(_, l)| l.as_str())
        .collect();
    let strict = beyond.is_empty() && br_ok && secs < MC_SECONDS;
    let gate =
        max_z <= MC_GATE_Z && beyond.len() <= MC_GATE_EXCEEDANCES && br_ok && secs < MC_SECONDS;
    let detail = format!(
        "{} cells, {} beyond {MC_SE_BOUND} SE {:?}, max |z| = {max_z:.2} ({at}); best response [{}]; {secs:.1} s (limit {MC_SECONDS} s)",
        zs.len(),
        beyond.len(),
        beyond,
        br_detail.join("; ")
    );
    (outcome(strict, detail), gate)
}

fn discrepancy_resolution() -> Outcome {
    let gumbel = NoiseDistribution::gumbel();
    let c = compute_beta(&gumbel, 15).unwrap();
    let rh = r_hat(&c);
    let (b8, b9) = (
        gumbel.closed_form_b(15, 8).unwrap().unwrap(),
        gumbel.closed_form_b(15, 9).unwrap().unwrap(),
    );
    let plateau = r_star_breakpoints(&c).unwrap().value_at(1.0);

    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tournament"))
        .args(["figure1", "--output"])
        .arg(dir.path())
        .output()
        .expect("run figure1");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let manifest: serde_json::Value = std::fs::read_to_string(dir.path().join("manifest.json"))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok())
        .unwrap_or_default();
    let recorded = manifest["errata"].as_array().is_some_and(|errata| {
        errata.iter().any(|e| {
            e["topic"].as_str().is_some_and(|t| t.contains("r_hat"))
                && e["published"] == "8"
                && e["computed"] == "9"
        })
    });
    let noted = stderr.contains("r_hat") && stderr.contains("published 8");
    let pass = out.status.success() && rh == 9 && b9 > b8 && plateau == 9 && recorded && noted;
    outcome(
        pass,
        format!(
            "r_hat = {rh}; B_8 = {b8:.7}, B_9 = {b9:.7}; r*(1) = {plateau}; erratum in manifest: {recorded}, in report notes: {noted}"
        ),
    )
}

type Check = (&'static str, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let mut required_ok = true;
    let report = |id: &str, name: &str, o: &Outcome| {
        println!(
            "criterion {id:>2} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    let checks: [Check; 8] = [
        (
            "1",
            "closed-form coefficient agreement",
            closed_form_agreement,
        ),
        ("2", "uniform example", uniform_example),
        ("3", "optimal-prize endpoints", optimal_endpoints),
        ("4", "breakpoints", breakpoints),
        ("5", "M* curves", m_star_curves),
        (
            "6",
            "representation equivalence",
            representation_equivalence,
        ),
        ("7", "comparative statics suite", comparative_statics_suite),
        ("8", "utility identities", utility_identities),
    ];
    for (id, name, check) in checks {
        let o = check();
        required_ok &= o.pass;
        report(id, name, &o);
    }
    let (strict, gate) = oracle_agreement();
    report("9", "oracle agreement (strict 3 SE per cell)", &strict);
    report(
        "9",
        "oracle agreement (multiplicity gate)",
        &outcome(
            gate,
            format!("max |z| <= {MC_GATE_Z} and at most {MC_GATE_EXCEEDANCES} cells beyond {MC_SE_BOUND} SE"),
        ),
    );
    required_ok &= gate;
    let o = discrepancy_resolution();
    required_ok &= o.pass;
    report("10", "documented discrepancy resolution", &o);

    if required_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
