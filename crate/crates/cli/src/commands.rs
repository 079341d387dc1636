//! The six subcommands. Each builds a [`Report`]; `figure1` also writes files.

use std::path::{Path, PathBuf};

use serde_json::json;
use tournament_core::figure::{self, FIGURE_N};
use tournament_core::incentives::{
    effort_sensitivity_sign, equilibrium_effort_with, marginal_benefit_m, optimal_r_star,
    r_star_breakpoints, LossAversionParams, TournamentDesign,
};
use tournament_core::noise::NoiseDistribution;
use tournament_core::prizes::{PrizeSchedule, PrizeSpec};
use tournament_core::rank_stats::{compute_beta, r_hat, rank_probabilities, RankCoefficients};
use tournament_core::simulate::{
    equilibrium_residual, local_grid, mc_beta, mc_rank_probabilities_grid,
};

use crate::config::{PrizeChoice, RunConfig, OUTPUT_DIR_ENV};
use crate::error::CliError;
use crate::output::{Cell, Report, Table};

/// `|z|` above which `simulate` exits with code 3.
pub const Z_THRESHOLD: f64 = 4.0;

/// Efforts in the best-response grid and its half-width as a fraction of `x_bar`.
const BR_POINTS: usize = 41;
const BR_HALF_WIDTH: f64 = 0.1;

fn design(cfg: &RunConfig, theta: f64) -> Result<TournamentDesign, CliError> {
    Ok(TournamentDesign::new(
        cfg.n()?,
        cfg.dist()?.clone(),
        LossAversionParams::from_theta(theta)?,
        cfg.cost,
    )?)
}

pub fn coeffs(cfg: &RunConfig) -> Result<Report, CliError> {
    let (dist, n) = (cfg.dist()?, cfg.n()?);
    let c = compute_beta(dist, n)?;
    let closed = RankCoefficients::closed_form(dist, n)?;
    let mut table = Table::new(&["r", "beta", "B", "bar_beta", "closed_form_B", "abs_diff"]);
    let mut max_diff: Option<f64> = None;
    for r in 1..=n {
        let b = c.b(r);
        let cf = closed.as_ref().map(|k| k.b(r));
        let diff = cf.map(|x| (x - b).abs());
        if let Some(d) = diff {
            max_diff = Some(max_diff.map_or(d, |m: f64| m.max(d)));
        }
        table.push(vec![
            r.into(),
            c.beta()[r - 1].into(),
            b.into(),
            (r < n).then(|| c.bar_beta()[r - 1]).into(),
            cf.into(),
            diff.into(),
        ]);
    }
    let rh = r_hat(&c);
    let mut report = Report::new("coeffs", table);
    report.meta("dist", dist.to_string());
    report.meta("n", n);
    report.meta("r_hat", rh);
    report.meta("max_abs_diff", max_diff);
    report
        .notes
        .push(format!("r_hat = {rh} (last rank with beta_r > 0)"));
    match max_diff {
        Some(d) => report
            .notes
            .push(format!("max |quadrature B - closed form B| = {d:e}")),
        None => report
            .notes
            .push(format!("no closed form for {dist}; quadrature only")),
    }
    Ok(report)
}

pub fn optimal(cfg: &RunConfig) -> Result<Report, CliError> {
    let (dist, n) = (cfg.dist()?, cfg.n()?);
    let c = compute_beta(dist, n)?;
    let opt = optimal_r_star(&c, cfg.theta)?;
    let mut table = Table::new(&["r", "A", "is_r_star", "in_tie_set"]);
    for (i, &a) in opt.a.iter().enumerate() {
        let r = i + 1;
        table.push(vec![
            r.into(),
            a.into(),
            (r == opt.r_star).into(),
            opt.tie_set.contains(&r).into(),
        ]);
    }
    let mut report = Report::new("optimal", table);
    report.meta("dist", dist.to_string());
    report.meta("n", n);
    report.meta("theta", cfg.theta);
    report.meta("r_star", opt.r_star);
    report.meta("tie_set", &opt.tie_set);
    report.meta("m_star", opt.m_star);
    report.notes.push(format!(
        "r* = {} at theta = {} (tie set {:?}), M* = {}",
        opt.r_star, cfg.theta, opt.tie_set, opt.m_star
    ));
    Ok(report)
}

pub fn breakpoints(cfg: &RunConfig) -> Result<Report, CliError> {
    let (dist, n) = (cfg.dist()?, cfg.n()?);
    let c = compute_beta(dist, n)?;
    let steps = r_star_breakpoints(&c)?;
    let mut table = Table::new(&["theta_from", "theta_to", "r_star"]);
    let mut from = 0.0;
    let mut value = steps.initial;
    for j in &steps.jumps {
        table.push(vec![from.into(), j.theta.into(), value.into()]);
        from = j.theta;
        value = j.to;
    }
    table.push(vec![from.into(), 1.0.into(), value.into()]);
    let mut report = Report::new("breakpoints", table);
    report.meta("dist", dist.to_string());
    report.meta("n", n);
    report.meta("r_hat", r_hat(&c));
    report.meta("initial", steps.initial);
    report.meta("jumps", &steps.jumps);
    if steps.jumps.is_empty() {
        report
            .notes
            .push(format!("r*(theta) = {} on all of [0, 1]", steps.initial));
    }
    for j in &steps.jumps {
        report.notes.push(format!(
            "r* jumps {} -> {} after theta = {}",
            j.from, j.to, j.theta
        ));
    }
    Ok(report)
}

pub fn effort(cfg: &RunConfig) -> Result<Report, CliError> {
    let (dist, n) = (cfg.dist()?, cfg.n()?);
    let c = compute_beta(dist, n)?;
    let choice = cfg.prizes.clone().unwrap_or(PrizeChoice::Optimal);
    let fixed = match &choice {
        PrizeChoice::Optimal => None,
        PrizeChoice::Fixed(spec) => Some(spec.build(n)?),
    };
    let mut table = Table::new(&["theta", "r_star", "R", "L", "M", "x_star", "corner"]);
    let mut min_m: Option<(f64, f64)> = None;
    for &theta in &cfg.theta_grid {
        let d = design(cfg, theta)?;
        let (v, r_cell) = match &fixed {
            Some(v) => (v.clone(), Cell::Empty),
            None => {
                let r = optimal_r_star(&c, theta)?.r_star;
                (PrizeSchedule::top(n, r)?, Cell::from(r))
            }
        };
        let rep = equilibrium_effort_with(&d, &c, &v, false)?;
        if min_m.is_none_or(|(_, m)| rep.marginal_benefit < m) {
            min_m = Some((theta, rep.marginal_benefit));
        }
        table.push(vec![
            theta.into(),
            r_cell,
            rep.monetary.into(),
            rep.psychological.into(),
            rep.marginal_benefit.into(),
            rep.x_star.into(),
            rep.corner.into(),
        ]);
    }
    let mut report = Report::new("effort", table);
    report.meta("dist", dist.to_string());
    report.meta("n", n);
    report.meta("cost", cfg.cost.to_string());
    report.meta(
        "prizes",
        match &fixed {
            None => json!("optimal"),
            Some(v) => json!(v.values()),
        },
    );
    if let Some(v) = &fixed {
        let sign = effort_sensitivity_sign(&c, v)?;
        report.meta("sensitivity", sign.to_string());
        report
            .notes
            .push(format!("dx*/dtheta is {sign} for this schedule"));
    }
    if let Some((theta, m)) = min_m {
        report.meta("min_M", json!({"theta": theta, "M": m}));
        report
            .notes
            .push(format!("smallest M on the grid: {m} at theta = {theta}"));
    }
    Ok(report)
}

fn write_table(dir: &Path, name: &str, table: &Table) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    crate::output::write_bytes(Some(&path), &table.to_csv()?)?;
    Ok(path)
}

fn family_slug(dist: &NoiseDistribution) -> String {
    dist.family().name().to_lowercase()
}

/// Writes nine CSV files (per family: M under the two fixed schedules, the
/// `r*` step data and `M*`) plus `manifest.json` into the output directory.
pub fn figure1(cfg: &RunConfig) -> Result<Report, CliError> {
    let dir = cfg
        .output
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("figure1"));
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let v1 = figure::v_prime()?;
    let v2 = figure::v_double_prime()?;
    let mut files = Table::new(&["file", "rows"]);
    let mut families = serde_json::Map::new();
    for dist in figure::figure_families() {
        let slug = family_slug(&dist);
        let c = compute_beta(&dist, FIGURE_N)?;
        let steps = r_star_breakpoints(&c)?;

        let mut schedules = Table::new(&["theta", "M_v_prime", "M_v_double_prime"]);
        let mut r_star = Table::new(&["theta", "r_star"]);
        let mut m_star = Table::new(&["theta", "r_star", "M_star"]);
        let mut min = (f64::NAN, f64::INFINITY);
        for &theta in &cfg.theta_grid {
            schedules.push(vec![
                theta.into(),
                marginal_benefit_m(&c, &v1, theta)?.into(),
                marginal_benefit_m(&c, &v2, theta)?.into(),
            ]);
            let opt = optimal_r_star(&c, theta)?;
            r_star.push(vec![theta.into(), opt.r_star.into()]);
            m_star.push(vec![theta.into(), opt.r_star.into(), opt.m_star.into()]);
            if opt.m_star < min.1 {
                min = (theta, opt.m_star);
            }
        }
        for (suffix, table) in [
            ("m_schedules", &schedules),
            ("r_star", &r_star),
            ("m_star", &m_star),
        ] {
            let name = format!("{slug}_{suffix}.csv");
            write_table(&dir, &name, table)?;
            files.push(vec![Cell::Text(name), table.rows.len().into()]);
        }
        families.insert(
            slug,
            json!({
                "r_hat": r_hat(&c),
                "r_star_initial": steps.initial,
                "jumps": steps.jumps,
                "m_star_min_on_grid": {"theta": min.0, "M_star": min.1},
            }),
        );
    }
    let errata = figure::errata()?;
    let manifest = json!({
        "n": FIGURE_N,
        "theta_grid": cfg.theta_grid,
        "schedules": {
            "v_prime": v1.values(),
            "v_prime_as_published": figure::v_prime_as_published(),
            "v_double_prime": v2.values(),
        },
        "families": families,
        "errata": errata,
        "files": files.rows.iter().map(|r| match &r[0] { Cell::Text(s) => s.clone(), _ => String::new() }).collect::<Vec<_>>(),
    });
    let manifest_path = dir.join("manifest.json");
    let mut bytes =
        serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Output(e.to_string()))?;
    bytes.push(b'\n');
    crate::output::write_bytes(Some(&manifest_path), &bytes)?;

    let mut report = Report::new("figure1", files);
    report.meta("directory", dir.display().to_string());
    report.meta("errata", &errata);
    report.notes.push(format!(
        "wrote 9 tables and manifest.json to {}",
        dir.display()
    ));
    for e in &errata {
        report.notes.push(format!(
            "erratum, {}: published {}, computed {} ({})",
            e.topic, e.published, e.computed, e.note
        ));
    }
    Ok(report)
}

pub fn simulate(cfg: &RunConfig) -> Result<Report, CliError> {
    let (dist, n) = (cfg.dist()?, cfg.n()?);
    let c = compute_beta(dist, n)?;
    let sim = cfg.sim;
    let mut table = Table::new(&[
        "quantity",
        "delta",
        "r",
        "quadrature",
        "mc",
        "std_error",
        "z",
    ]);
    let mut zs = Vec::new();
    let mut push = |table: &mut Table,
                    what: &str,
                    delta: f64,
                    r: usize,
                    exact: f64,
                    est: tournament_core::simulate::McEstimate| {
        let z = est.z_score(exact);
        zs.push(z);
        table.push(vec![
            what.into(),
            delta.into(),
            r.into(),
            exact.into(),
            est.value.into(),
            est.std_error.into(),
            z.into(),
        ]);
    };

    let beta = mc_beta(dist, n, &sim)?;
    for (r, est) in (1..=n).zip(&beta.estimates) {
        push(&mut table, "beta", 0.0, r, c.beta()[r - 1], *est);
    }
    let deltas = if cfg.delta == 0.0 {
        vec![0.0]
    } else {
        vec![0.0, cfg.delta]
    };
    let probs = mc_rank_probabilities_grid(dist, n, &deltas, &sim)?;
    for (&delta, row) in deltas.iter().zip(&probs) {
        let exact = rank_probabilities(dist, n, delta)?;
        for (r, est) in (1..=n).zip(row) {
            push(&mut table, "p", delta, r, exact[r - 1], *est);
        }
    }

    let d = design(cfg, cfg.theta)?;
    let v = match cfg
        .prizes
        .clone()
        .unwrap_or(PrizeChoice::Fixed(PrizeSpec::WinnerTakeAll))
    {
        PrizeChoice::Optimal => PrizeSchedule::top(n, optimal_r_star(&c, cfg.theta)?.r_star)?,
        PrizeChoice::Fixed(spec) => spec.build(n)?,
    };
    let x_star = equilibrium_effort_with(&d, &c, &v, false)?.x_star;
    let x_bar = cfg.cost.x_bar();
    let grid = local_grid(x_star, BR_HALF_WIDTH * x_bar, BR_POINTS, x_bar);
    let residual = equilibrium_residual(&d, &c, &v, &sim, &grid)?;

    let checks = zs.len();
    let failures = zs.iter().filter(|z| z.abs() > Z_THRESHOLD).count();
    let max_z = zs.iter().map(|z| z.abs()).fold(0.0, f64::max);
    let mut report = Report::new("simulate", table);
    report.meta("dist", dist.to_string());
    report.meta("n", n);
    report.meta("theta", cfg.theta);
    report.meta("simulation", sim);
    report.meta("max_abs_z", max_z);
    report.meta("z_threshold", Z_THRESHOLD);
    report.meta("z_failures", failures);
    report.meta("prizes", v.values());
    report.meta("equilibrium", &residual);
    report.meta("equilibrium_within_tolerance", residual.within_tolerance());
    report.notes.push(format!(
        "{checks} comparisons, max |z| = {max_z:.3}, {failures} above {Z_THRESHOLD}"
    ));
    report.notes.push(format!(
        "best response to x* = {}: argmax {} (|diff| = {:.3e}, tolerance {:.3e}, {})",
        residual.x_star,
        residual.argmax,
        residual.residual,
        residual.tolerance,
        if residual.within_tolerance() {
            "ok"
        } else {
            "outside tolerance"
        }
    ));
    if failures > 0 {
        report.failure = Some(CliError::OracleFailure {
            failures,
            checks,
            threshold: Z_THRESHOLD,
            max_z,
        });
    }
    Ok(report)
}
