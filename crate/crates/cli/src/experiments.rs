//! One runner per command. Each returns the tables, seeds and criteria of
//! a [`Report`]; nothing here touches the filesystem.

use htrl::empirical_process::{
    empirical_majorant, monotone_sup_mc, multiplier_bound, multiplier_sup_mc, rademacher_sup_table, IntervalConstraint,
};
use htrl::estimators::{fit_interval_lse, PiecewiseConstant, RegressionData};
use htrl::rate_lab::{
    counterexample_dependent, default_burn_in, fit_rate_exponent, fn_en_profile, lasso_experiment, phase_cell_spec,
    phase_diagram, profile_argmax, run_risk_curve, CounterexampleNoise, ExperimentSpec, LassoExperiment, PhaseTemplate,
    RateFit, Regime, RiskCurve, RiskRow,
};
use htrl::rng::{derive_seed, stream_rng};
use htrl::McEstimate;
use rand::Rng;

use crate::config::{
    BoundCheckSpec, CounterexampleSpec, FnEnSpec, LassoSpec, LseRateSpec, MepGrowthSpec, PhaseSpec, ProcessClass,
    RunConfig, Spec,
};
use crate::output::{Cell, Criterion, Report, Table, Tolerance};

type Res<T> = htrl::Result<T>;

pub fn run_experiment(cfg: &RunConfig) -> Res<Report> {
    let seed = cfg.seed;
    let mut report = Report::default();
    report.seed("master", seed);
    match &cfg.spec {
        Spec::MepGrowth(s) => mep_growth(s, seed, &mut report)?,
        Spec::LseRate(s) => lse_rate(s, seed, &mut report)?,
        Spec::PhaseDiagram(s) => phase(s, seed, &mut report)?,
        Spec::Lasso(s) => lasso(s, seed, &mut report)?,
        Spec::Counterexample(s) => counterexample(s, seed, &mut report)?,
        Spec::BoundCheck(s) => bound_check(s, seed, &mut report)?,
        Spec::FnEn(s) => fn_en(s, seed, &mut report)?,
    }
    Ok(report)
}

fn fit_table(fit: &RateFit) -> Table {
    let mut t = Table::new("fit", &["slope", "slope_stderr", "intercept", "r2", "n_min", "n_max"]);
    t.push(vec![
        fit.slope.into(),
        fit.slope_stderr.into(),
        fit.intercept.into(),
        fit.r2.into(),
        fit.n_used.first().copied().unwrap_or(0).into(),
        fit.n_used.last().copied().unwrap_or(0).into(),
    ]);
    t
}

fn curve_table(curve: &RiskCurve) -> Table {
    let mut t = Table::new("curve", &["n", "mean_risk", "stderr", "reps", "failures"]);
    for r in &curve.rows {
        t.push(vec![r.n.into(), r.mean_risk.into(), r.stderr.into(), r.reps.into(), r.failures.into()]);
    }
    t
}

fn failures_criterion(curve: &RiskCurve) -> Criterion {
    let failed: usize = curve.rows.iter().map(|r| r.failures).sum();
    Criterion::at_most("solver_failures", 0.0, failed as f64)
}

fn mep_growth(s: &MepGrowthSpec, seed: u64, report: &mut Report) -> Res<()> {
    let mut t = Table::new("growth", &["n", "mc_mean", "mc_stderr", "radius"]);
    let mut rows = Vec::with_capacity(s.n_grid.len());
    for &n in &s.n_grid {
        let (est, radius): (McEstimate, f64) = match &s.process {
            ProcessClass::Interval { min_len, max_len } => {
                let c = IntervalConstraint::new(min_len.at(n), max_len.at(n))?;
                (multiplier_sup_mc(&s.multipliers, n, &c, s.reps, seed)?, max_len.at(n).sqrt())
            }
            ProcessClass::Monotone { center, delta } => {
                s.multipliers.validate()?;
                let law = &s.multipliers;
                let c = *center;
                let d = delta.at(n);
                (monotone_sup_mc(n, d, s.reps, seed, move |x| c.at(x), |rng, w| law.fill(rng, w))?, d)
            }
        };
        t.push(vec![n.into(), est.mean.into(), est.stderr.into(), radius.into()]);
        rows.push(RiskRow { n, mean_risk: est.mean, stderr: est.stderr, reps: s.reps, failures: 0 });
    }
    let fit = fit_rate_exponent(&RiskCurve { rows }, 0)?;
    report.criteria.push(Criterion::band("growth_slope", &s.slope, fit.slope));
    report.tables.push(t);
    report.tables.push(fit_table(&fit));
    Ok(())
}

fn lse_rate(s: &LseRateSpec, seed: u64, report: &mut Report) -> Res<()> {
    let spec = ExperimentSpec {
        class: s.class.clone(),
        truth: s.truth.clone(),
        noise: s.noise.clone(),
        n_grid: s.n_grid.clone(),
        reps: s.reps,
        master_seed: seed,
    };
    let curve = run_risk_curve(&spec)?;
    let fit = match fit_rate_exponent(&curve, s.burn_in.unwrap_or_else(|| default_burn_in(&curve))) {
        Ok(fit) => Some(fit),
        // Rows where every replication failed carry no risk; report, don't abort.
        Err(htrl::Error::NonPositiveRisk { .. }) => None,
        Err(e) => return Err(e),
    };
    match &fit {
        Some(fit) => report.criteria.push(Criterion::band("risk_exponent", &s.exponent, fit.exponent())),
        None => report.criteria.push(Criterion {
            name: "risk_exponent".into(),
            target: Some(s.exponent.target),
            measured: None,
            tolerance: Some(Tolerance { below: s.exponent.below, above: s.exponent.above }),
            pass: false,
        }),
    }
    report.criteria.push(failures_criterion(&curve));
    report.tables.push(curve_table(&curve));
    if let Some(fit) = &fit {
        report.tables.push(fit_table(fit));
    }
    Ok(())
}

fn regime_code(r: Option<Regime>) -> Cell {
    match r {
        Some(Regime::Noise) => Cell::Int(0),
        Some(Regime::Boundary) => Cell::Int(1),
        Some(Regime::Entropy) => Cell::Int(2),
        None => Cell::Float(f64::NAN),
    }
}

fn phase(s: &PhaseSpec, seed: u64, report: &mut Report) -> Res<()> {
    let template = PhaseTemplate {
        n_grid: s.n_grid.clone(),
        reps: s.reps,
        master_seed: seed,
        tolerance: s.tolerance,
        margin: s.margin,
        staircase_steps: s.staircase_steps,
    };
    let cells = phase_diagram(&s.alphas, &s.ps, &template)?;
    // regime: 0 noise, 1 boundary, 2 entropy.
    let mut t =
        Table::new("cells", &["alpha", "p", "regime", "e_theory", "e_measured", "one_sided", "pass", "skipped"]);
    for c in &cells {
        let label = format!("alpha={} p={}", c.alpha, c.p);
        if let Ok((spec, ..)) = phase_cell_spec(c.alpha, c.p, &template) {
            report.seed(label.clone(), spec.master_seed);
        }
        t.push(vec![
            c.alpha.into(),
            c.p.into(),
            regime_code(c.regime),
            c.e_theory.into(),
            c.e_measured.into(),
            c.one_sided.into(),
            c.pass.unwrap_or(false).into(),
            c.skipped.is_some().into(),
        ]);
        // A skipped cell has nothing to check.
        report.criteria.push(Criterion {
            name: label,
            target: c.e_theory,
            measured: c.e_measured,
            tolerance: Some(Tolerance { below: c.tolerance, above: (!c.one_sided).then_some(c.tolerance) }),
            pass: c.pass.unwrap_or(c.skipped.is_some()),
        });
    }
    report.tables.push(t);
    Ok(())
}

fn lasso(s: &LassoSpec, seed: u64, report: &mut Report) -> Res<()> {
    let cfg = LassoExperiment {
        d: s.d,
        s: s.s,
        n_grid: s.n_grid.clone(),
        design: s.design.clone(),
        noise: s.noise.clone(),
        l: s.l,
        alpha: s.alpha,
        reps: s.reps,
        seed,
        compat_rows: s.compat_rows,
        compat_budget: s.compat_budget,
    };
    let r = lasso_experiment(&cfg)?;
    let mut t = Table::new("curve", &["n", "mean_risk", "stderr", "reps", "failures", "scaled_error", "theorem_ratio"]);
    for (k, row) in r.curve.rows.iter().enumerate() {
        t.push(vec![
            row.n.into(),
            row.mean_risk.into(),
            row.stderr.into(),
            row.reps.into(),
            row.failures.into(),
            r.scaled_error[k].into(),
            r.theorem_ratio[k].into(),
        ]);
    }
    if let Some(b) = &s.slope {
        report.criteria.push(Criterion::band("error_slope", b, r.fit.slope));
    }
    if let Some(f) = s.band_factor {
        let hi = r.scaled_error.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = r.scaled_error.iter().copied().fold(f64::INFINITY, f64::min);
        report.criteria.push(Criterion::at_most("scaled_error_spread", f, hi / lo));
    }
    report.criteria.push(failures_criterion(&r.curve));
    let mut fit = fit_table(&r.fit);
    fit.columns.push("c0_hat".into());
    fit.rows[0].push(r.c0_hat.into());
    report.tables.push(t);
    report.tables.push(fit);
    Ok(())
}

fn counterexample(s: &CounterexampleSpec, seed: u64, report: &mut Report) -> Res<()> {
    let r = counterexample_dependent(&s.n_grid, s.reps, seed, s.delta, s.alpha0, s.noise)?;
    let mut t = Table::new("curve", &["n", "mean_abs_error", "stderr", "reps"]);
    for row in &r.curve.rows {
        t.push(vec![row.n.into(), row.mean_risk.into(), row.stderr.into(), row.reps.into()]);
    }
    let theory = match s.noise {
        CounterexampleNoise::Dependent => -s.delta / (2.0 + s.delta),
        CounterexampleNoise::IndependentGaussian => r.reference_slope,
    };
    let mut fit = fit_table(&r.fit);
    fit.columns.push("theory_slope".into());
    fit.rows[0].push(theory.into());
    report.criteria.push(Criterion::band("error_slope", &s.slope, r.fit.slope));
    report.tables.push(t);
    report.tables.push(fit);
    Ok(())
}

fn bound_check(s: &BoundCheckSpec, seed: u64, report: &mut Report) -> Res<()> {
    let c = IntervalConstraint::new(s.min_len, s.max_len)?;
    let k_max = s.n_grid.iter().copied().max().unwrap_or(0);
    if k_max == 0 || s.multipliers.is_empty() {
        return Err(htrl::Error::InvalidArgument("bound-check needs a nonempty n_grid and multiplier list".into()));
    }
    let table_seed = derive_seed(seed, &[1]);
    report.seed("rademacher_table", table_seed);
    let rad = rademacher_sup_table(k_max, &c, s.table_reps, table_seed)?;
    let psi = empirical_majorant(&rad, s.inflate)?;
    let mut psi_t = Table::new("majorant", &["k", "rademacher_mean", "rademacher_stderr", "psi"]);
    for (idx, e) in rad.iter().enumerate() {
        let k = idx + 1;
        psi_t.push(vec![k.into(), e.mean.into(), e.stderr.into(), psi.value(k as f64).into()]);
    }
    for (i, law) in s.multipliers.iter().enumerate() {
        let mc_seed = derive_seed(seed, &[2, i as u64]);
        report.seed(format!("multipliers_{i}"), mc_seed);
        let mut t = Table::new(format!("law{i}"), &["n", "mc_mean", "mc_stderr", "theorem_bound", "satisfied"]);
        let mut violations = 0usize;
        for &n in &s.n_grid {
            let mc = multiplier_sup_mc(law, n, &c, s.reps, mc_seed)?;
            let bound = multiplier_bound(&psi, law, n)?;
            let ok = mc.mean <= bound + s.slack * mc.stderr;
            violations += usize::from(!ok);
            t.push(vec![n.into(), mc.mean.into(), mc.stderr.into(), bound.into(), ok.into()]);
        }
        report.criteria.push(Criterion::at_most(format!("violations_law{i}"), 0.0, violations as f64));
        report.tables.push(t);
    }
    report.tables.push(psi_t);
    Ok(())
}

fn fn_en(s: &FnEnSpec, seed: u64, report: &mut Report) -> Res<()> {
    if s.n_min == 0 || s.n_min > s.n_max || s.grid == 0 || !(s.delta_max > 0.0) {
        return Err(htrl::Error::InvalidArgument("fn-en needs 1 <= n_min <= n_max, grid >= 1, delta_max > 0".into()));
    }
    s.noise.validate()?;
    let step = s.delta_max / s.grid as f64;
    let deltas: Vec<f64> = (0..=s.grid).map(|k| k as f64 * step).collect();
    let mut t = Table::new("instances", &["instance", "n", "delta_argmax", "lse_norm", "f_n_max", "m_hat", "matched"]);
    let mut mismatches = 0usize;
    for i in 0..s.instances {
        let mut rng = stream_rng(derive_seed(seed, &[i as u64]), 0);
        let n = rng.random_range(s.n_min..=s.n_max);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut y = vec![0.0; n];
        s.noise.fill(&mut rng, &mut y);
        let data = RegressionData::new(x, y)?;
        let fit = fit_interval_lse(&data, s.min_len)?;
        let norm = fit.function.l2_distance(&PiecewiseConstant::zero());
        let total: f64 = data.y().iter().map(|v| v * v).sum();
        let m_hat = (total - fit.rss) / n as f64;
        let rows = fn_en_profile(&data, &deltas, s.min_len)?;
        let arg = profile_argmax(&rows).expect("nonempty delta grid");
        let gap = (arg.delta - norm).abs();
        let matched = gap <= step * (1.0 + 1e-9);
        mismatches += usize::from(!matched);
        t.push(vec![i.into(), n.into(), arg.delta.into(), norm.into(), arg.f_n.into(), m_hat.into(), matched.into()]);
    }
    report.criteria.push(Criterion::at_most("argmax_mismatches", 0.0, mismatches as f64));
    report.tables.push(t);
    Ok(())
}
