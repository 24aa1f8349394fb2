use fracosc::nonlinearity::oscillation_diagnostics;
use fracosc::report::{
    breakdown_table, bump_table, constants_records, diagnostics_table, field_table, fmt17, records_table,
    summary_table, Record, Table,
};
use fracosc::solver::{
    estimate_phi, multistart_sequence, nested_ball_search, phi_chain_bound, search_in_balls, SolutionRecord,
};
use fracosc::testfn::{
    first_persistent_negative, j4_exact_1d, seminorm_estimate, unboundedness_probe, ConeFunction, SeminormOptions,
};
use fracosc::{ConstantSet, LambdaInterval, Reaction};
use serde::Serialize;

use crate::config::{Resolved, RunConfig, SolveMode};
use crate::error::CliError;
use crate::output::OutDir;

/// Outcome of a subcommand that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Results were written but carry a numerical caveat.
    Warning,
}

impl Status {
    fn warn_if(cond: bool) -> Self {
        if cond {
            Status::Warning
        } else {
            Status::Ok
        }
    }
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

/// λ₁ does not involve K, so any positive K gives it.
fn lambda1_only(r: &Resolved) -> Result<LambdaInterval, CliError> {
    r.interval(1.0)
}

fn fix_lambda(cfg: &mut RunConfig, r: &mut Resolved, iv: &LambdaInterval) -> Result<f64, CliError> {
    let lambda = r.set_lambda(cfg, iv)?;
    cfg.problem.lambda = Some(lambda);
    cfg.problem.lambda_factor = None;
    Ok(lambda)
}

pub fn constants(cfg: &mut RunConfig, out: &mut OutDir) -> Result<Status, CliError> {
    let mut r = Resolved::new(cfg, false)?;
    for &s in &cfg.constants.s_sweep {
        fracosc::problem::check_exponents(cfg.problem.p, cfg.problem.dim, s)
            .map_err(|e| CliError::Validation(format!("s_sweep value {s}: {e}")))?;
    }
    let (k, k_n, k_converged) = r.embedding(cfg)?;
    let iv = r.interval(k)?;
    let lambda = fix_lambda(cfg, &mut r, &iv)?;
    let set = ConstantSet::compute(&r.params, r.a_l, r.b_l, k, k_n)?;
    let mut recs = constants_records(&set);
    recs.push(Record::new("A_L", fmt17(r.a_l), "", r.limits_source));
    recs.push(Record::new("B_L", r.b_l.to_string(), "", r.limits_source));
    recs.push(Record::new("lambda", fmt17(lambda), "", "config"));
    recs.push(Record::new("lambda_in_interval", iv.contains(lambda).to_string(), "", "lambda1 < lambda < lambda2"));
    out.table("constants.csv", &records_table(&recs))?;
    for rec in &recs {
        say!("{:<20} {}", rec.key, rec.value);
    }
    if !cfg.constants.s_sweep.is_empty() {
        let mut t = Table::new(&["s", "kappa", "C", "K_est", "lambda1", "lambda2", "nonempty"]);
        for &s in &cfg.constants.s_sweep {
            let mut c = cfg.clone();
            c.problem.s = s;
            let rs = Resolved::new(&c, false)?;
            let (ks, ks_n, _) = rs.embedding(&c)?;
            let cs = ConstantSet::compute(&rs.params, rs.a_l, rs.b_l, ks, ks_n)?;
            t.push(vec![
                fmt17(s),
                fmt17(cs.kappa),
                fmt17(cs.c),
                fmt17(ks),
                cs.interval.lambda1.to_string(),
                cs.interval.lambda2.to_string(),
                cs.interval.nonempty.to_string(),
            ]);
        }
        out.table("constants_sweep.csv", &t)?;
    }
    if !set.interval.nonempty {
        warn("the λ-interval is empty: A_L ≥ C·B_L");
    }
    if !k_converged {
        warn("the embedding-constant ascent hit its iteration cap; K is a lower estimate");
    }
    out.resolved_config(cfg)?;
    Ok(Status::warn_if(!k_converged))
}

pub fn verify_lemma(cfg: &mut RunConfig, out: &mut OutDir) -> Result<Status, CliError> {
    let r = Resolved::new(cfg, false)?;
    let cone = ConeFunction::for_params(&r.params)?;
    let opts = SeminormOptions {
        budget: cfg.lemma.budget,
        seed: cfg.lemma.seed,
        rel_tol: cfg.lemma.rel_tol,
        order: cfg.lemma.order,
    };
    let b = seminorm_estimate(&cone, &r.params, &opts)?;
    out.table("breakdown.csv", &breakdown_table(&b))?;
    let verdict = if b.within_bound { "PASS" } else { "FAIL" };
    let mut recs = vec![
        Record::new("tau", fmt17(cone.tau), "length", "inradius"),
        Record::new("total", fmt17(b.total), "", "Monte Carlo"),
        Record::new("total_std_error", fmt17(b.total_std_error), "", "Monte Carlo"),
        Record::new("bound", fmt17(b.bound), "", "kappa omega_N^2 tau^(N-ps)"),
        Record::new("check", verdict.into(), "", "total <= bound + 3 sigma"),
        Record::new("low_confidence", b.low_confidence.to_string(), "", "std_error > rel_tol * total"),
        Record::new("partition_z", fmt17(b.partition_z()), "", "pieces vs direct estimate"),
    ];
    if r.params.dim == 1 {
        recs.push(Record::new("J4_exact", fmt17(j4_exact_1d(cone.tau, r.params.ps())), "", "closed form, N = 1"));
    }
    out.table("lemma.csv", &records_table(&recs))?;
    say!("{verdict}: total {} ± {} against bound {}", fmt17(b.total), fmt17(b.total_std_error), fmt17(b.bound));
    let mut dilation_ok = true;
    if !cfg.lemma.tau_sweep.is_empty() {
        let n = r.params.dim as f64;
        let mut t = Table::new(&["tau", "total", "std_error", "predicted", "z"]);
        for &tau in &cfg.lemma.tau_sweep {
            let c = ConeFunction::new(cone.center.clone(), tau)?;
            let bt = seminorm_estimate(&c, &r.params, &opts)?;
            let factor = (tau / cone.tau).powf(n - r.params.ps());
            let predicted = factor * b.total;
            let se = bt.total_std_error.hypot(factor * b.total_std_error);
            let z = if se > 0.0 { (bt.total - predicted) / se } else { 0.0 };
            dilation_ok &= z.abs() < 3.0;
            t.push(vec![fmt17(tau), fmt17(bt.total), fmt17(bt.total_std_error), fmt17(predicted), fmt17(z)]);
        }
        out.table("dilation.csv", &t)?;
    }
    if b.low_confidence {
        warn(&format!(
            "standard error {} exceeds {} of the total; raise --budget",
            fmt17(b.total_std_error),
            cfg.lemma.rel_tol
        ));
    }
    if !dilation_ok {
        warn("the dilation law is off by more than 3σ for some τ");
    }
    out.resolved_config(cfg)?;
    Ok(Status::warn_if(b.low_confidence || !b.within_bound || !dilation_ok))
}

pub fn nonlinearity(cfg: &mut RunConfig, out: &mut OutDir) -> Result<Status, CliError> {
    let r = Resolved::new(cfg, false)?;
    let p = r.params.p;
    out.table("bumps.csv", &bump_table(&r.nl, p))?;
    if r.nl.len() >= 3 {
        let d = oscillation_diagnostics(&r.nl, p, r.nl.toward)?;
        out.table("diagnostics.csv", &diagnostics_table(&d))?;
        say!("A_L estimate {}  B_L estimate {}", fmt17(d.a_l_estimate), fmt17(d.b_l_estimate));
    } else {
        warn("fewer than three bumps: no oscillation diagnostics");
    }
    // plot-ready profile: each bump and the gaps on either side
    let mut prof = Table::new(&["t", "f", "F"]);
    let mut ts = Vec::new();
    for b in r.nl.bumps() {
        let (lo, hi) = (b.lo(), b.hi());
        let gap = hi - lo;
        ts.push(lo - 0.5 * gap);
        ts.extend((0..=64).map(|i| lo + gap * i as f64 / 64.0));
        ts.push(hi + 0.5 * gap);
    }
    ts.sort_by(f64::total_cmp);
    for t in ts {
        prof.push(vec![fmt17(t), fmt17(r.nl.f(t)), fmt17(r.nl.primitive(t))]);
    }
    out.table("profile.csv", &prof)?;
    let recs = vec![
        Record::new("label", r.nl.label.clone(), "", "preset"),
        Record::new("bumps", r.nl.len().to_string(), "", "preset"),
        Record::new("A_L", fmt17(r.a_l), "", r.limits_source),
        Record::new("B_L", r.b_l.to_string(), "", r.limits_source),
    ];
    out.table("limits.csv", &records_table(&recs))?;
    say!("{}: {} bumps, A_L = {}, B_L = {} ({})", r.nl.label, r.nl.len(), fmt17(r.a_l), r.b_l, r.limits_source);
    out.resolved_config(cfg)?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct RunInfo {
    command: String,
    lambda: f64,
    lambda1: String,
    lambda2: String,
    interval_nonempty: bool,
    in_interval: bool,
    forced: bool,
    k: f64,
    a_l: f64,
    b_l: String,
    limits_source: String,
}

#[derive(Serialize)]
struct SolutionEntry {
    j: usize,
    norm: f64,
    sup_norm: f64,
    energy: f64,
    residual: f64,
    converged: bool,
    nonnegative: bool,
    ball: Option<usize>,
    field: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: RunInfo,
    config: &'a RunConfig,
    solution: Vec<SolutionEntry>,
}

fn flagged_summary(records: &[SolutionRecord], in_interval: bool) -> Table {
    let mut t = summary_table(records);
    t.header.push("in_interval".into());
    for row in &mut t.rows {
        row.push(in_interval.to_string());
    }
    t
}

pub fn solve(cfg: &mut RunConfig, out: &mut OutDir, force: bool) -> Result<Status, CliError> {
    let mut r = Resolved::new(cfg, true)?;
    let sc = &cfg.solver;
    match sc.mode {
        SolveMode::Multistart if sc.config.ball_radii.is_some() => {
            return Err(CliError::Validation("solver.ball_radii needs solver.mode = \"balls\"".into()))
        }
        SolveMode::Balls if sc.c_seq.is_empty() && sc.config.ball_radii.is_none() => {
            return Err(CliError::Validation("solver.mode = \"balls\" needs solver.c_seq or solver.ball_radii".into()))
        }
        _ => {}
    }
    sc.config.validate()?;
    let (k, _, _) = r.embedding(cfg)?;
    let iv = r.interval(k)?;
    if !iv.nonempty && !force {
        return Err(CliError::Validation(format!(
            "empty λ-interval: A_L < C·B_L fails (λ₁ = {}, λ₂ = {}); pass --force to run anyway",
            iv.lambda1, iv.lambda2
        )));
    }
    let lambda = fix_lambda(cfg, &mut r, &iv)?;
    let inside = iv.contains(lambda);
    if !inside {
        warn(&format!("λ = {lambda} lies outside ({}, {})", iv.lambda1, iv.lambda2));
    }
    let grid = r.grid.clone().expect("grid requested");
    let sc = &cfg.solver;
    let (records, distinct, status) = match sc.mode {
        SolveMode::Multistart => {
            let o = multistart_sequence(&sc.config, &r.nl, &r.params, &grid)?;
            say!(
                "{} of {} starts converged; {} distinct; sequence of {} (norms increasing: {}, energies decreasing: {})",
                o.converged,
                o.attempts,
                o.distinct.len(),
                o.sequence.len(),
                o.norms_increasing,
                o.energies_decreasing
            );
            let st = Status::warn_if(o.sequence.is_empty());
            (o.sequence, Some(o.distinct), st)
        }
        SolveMode::Balls => {
            let recs = if sc.c_seq.is_empty() {
                search_in_balls(
                    sc.config.ball_radii.as_deref().unwrap_or_default(),
                    &sc.config,
                    &r.nl,
                    &r.params,
                    &grid,
                )?
            } else {
                nested_ball_search(&sc.c_seq, k, &sc.config, &r.nl, &r.params, &grid)?
            };
            let st = Status::warn_if(recs.iter().any(|x| !x.converged));
            (recs, None, st)
        }
    };
    out.table("summary.csv", &flagged_summary(&records, inside))?;
    if let Some(d) = &distinct {
        out.table("distinct.csv", &flagged_summary(d, inside))?;
    }
    let mut entries = Vec::new();
    for (j, rec) in records.iter().enumerate() {
        let name = format!("fields/u_{j}.csv");
        out.table(&name, &field_table(&grid, rec.field.values()))?;
        entries.push(SolutionEntry {
            j,
            norm: rec.norm,
            sup_norm: rec.sup_norm,
            energy: rec.energy.j,
            residual: rec.residual,
            converged: rec.converged,
            nonnegative: rec.nonnegative,
            ball: rec.ball_index,
            field: name,
        });
        say!(
            "u_{j}: ‖u‖ = {}  ‖u‖_∞ = {}  J = {}  residual = {}  converged = {}  nonnegative = {}",
            fmt17(rec.norm),
            fmt17(rec.sup_norm),
            fmt17(rec.energy.j),
            fmt17(rec.residual),
            rec.converged,
            rec.nonnegative
        );
    }
    let manifest = Manifest {
        run: RunInfo {
            command: "solve".into(),
            lambda,
            lambda1: iv.lambda1.to_string(),
            lambda2: iv.lambda2.to_string(),
            interval_nonempty: iv.nonempty,
            in_interval: inside,
            forced: force,
            k,
            a_l: r.a_l,
            b_l: r.b_l.to_string(),
            limits_source: r.limits_source.into(),
        },
        config: cfg,
        solution: entries,
    };
    let body = toml::to_string(&manifest).map_err(|e| CliError::Validation(format!("manifest: {e}")))?;
    out.text("manifest.toml", &body)?;
    out.resolved_config(cfg)?;
    if status == Status::Warning {
        warn("some runs did not reach the residual tolerance");
    }
    Ok(status)
}

pub fn phi_estimate(cfg: &mut RunConfig, out: &mut OutDir) -> Result<Status, CliError> {
    let mut r = Resolved::new(cfg, true)?;
    if cfg.phi.radii.is_empty() {
        return Err(CliError::Validation("phi.radii is empty".into()));
    }
    if let Some(bad) = cfg.phi.radii.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(CliError::Validation(format!("φ(r) needs r > 0, got {bad}")));
    }
    cfg.solver.config.validate()?;
    let (k, _, _) = r.embedding(cfg)?;
    let iv = r.interval(k)?;
    fix_lambda(cfg, &mut r, &iv)?;
    let grid = r.grid.clone().expect("grid requested");
    let mut t = Table::new(&[
        "r",
        "sup_psi",
        "phi",
        "sup_psi_over_r",
        "chain_bound",
        "within_chain",
        "samples",
        "low_confidence",
    ]);
    let mut low = false;
    for &rad in &cfg.phi.radii {
        let e = estimate_phi(rad, &cfg.solver.config, &r.nl, &r.params, &grid)?;
        let chain = phi_chain_bound(rad, k, &r.nl, &r.params);
        low |= e.low_confidence;
        t.push(vec![
            fmt17(rad),
            fmt17(e.sup_psi),
            fmt17(e.phi),
            fmt17(e.sup_psi / rad),
            fmt17(chain),
            (e.phi <= chain * (1.0 + 1e-9)).to_string(),
            e.samples.to_string(),
            e.low_confidence.to_string(),
        ]);
        say!("r = {}  φ = {}  chain bound = {}", fmt17(rad), fmt17(e.phi), fmt17(chain));
    }
    out.table("phi.csv", &t)?;
    out.resolved_config(cfg)?;
    if low {
        warn("some φ(r) estimates are low-confidence");
    }
    Ok(Status::warn_if(low))
}

pub fn probe(cfg: &mut RunConfig, out: &mut OutDir) -> Result<Status, CliError> {
    let mut r = Resolved::new(cfg, false)?;
    let iv = lambda1_only(&r)?;
    let lambda = fix_lambda(cfg, &mut r, &iv)?;
    let cone = ConeFunction::for_params(&r.params)?;
    let (ks, zetas): (Vec<Option<usize>>, Vec<f64>) = if cfg.probe.zetas.is_empty() {
        r.nl.bumps().iter().map(|b| (Some(b.index), b.hi())).unzip()
    } else {
        cfg.probe.zetas.iter().map(|&z| (None, z)).unzip()
    };
    if zetas.is_empty() {
        return Err(CliError::Validation(
            "no probe amplitudes: the preset has no bumps and probe.zetas is empty".into(),
        ));
    }
    let bounds = unboundedness_probe(&cone, &r.nl, &r.params, &zetas)?;
    let mut t = Table::new(&["k", "zeta", "F_zeta", "bound"]);
    for (k, b) in ks.iter().zip(&bounds) {
        t.push(vec![
            k.map(|v| v.to_string()).unwrap_or_default(),
            fmt17(b.zeta),
            fmt17(r.nl.primitive(b.zeta)),
            fmt17(b.bound),
        ]);
    }
    out.table("probe.csv", &t)?;
    let k_star = first_persistent_negative(&bounds);
    let recs = vec![
        Record::new("lambda", fmt17(lambda), "", "config"),
        Record::new("lambda1", iv.lambda1.to_string(), "", "closed form"),
        Record::new(
            "first_persistent_negative",
            k_star.map(|i| (i + 1).to_string()).unwrap_or_default(),
            "",
            "1-based position from which bounds are negative and decreasing",
        ),
    ];
    out.table("probe_summary.csv", &records_table(&recs))?;
    match k_star {
        Some(i) => say!("bounds negative and decreasing from position {} on", i + 1),
        None => say!("no persistent negative tail"),
    }
    out.resolved_config(cfg)?;
    Ok(Status::Ok)
}
