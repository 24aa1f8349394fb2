//! Local minimization of J_λ on the grid, multi-start and nested-ball
//! searches for distinct critical points, the φ(r) estimator and the
//! nonnegativity check.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::{sup_abs, DiscreteField, DiscreteProblem, EnergyReport, Grid};
use crate::error::{Error, Result};
use crate::nonlinearity::{BumpNonlinearity, Reaction};
use crate::problem::ProblemParams;
use crate::testfn::ConeFunction;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentMethod {
    /// Newton direction on Φ's Hessian plus the stabilizing part of the
    /// reaction curvature.
    #[default]
    Newton,
    /// Steepest descent.
    Gradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    pub min_step: f64,
    /// Sublevel radii r_j for a ball search; `None` runs the free multistart.
    pub ball_radii: Option<Vec<f64>>,
    /// Relative separation in norm and in energy for two records to count
    /// as distinct.
    pub distinctness_tol: f64,
    pub seed: u64,
    pub method: DescentMethod,
    /// Share of restarts launched from cones b_k θ; the rest are randomized cones.
    pub cone_fraction: f64,
    /// Relative nodal noise added to randomized starts.
    pub noise: f64,
    /// Tolerance on ‖u⁻‖_∞ relative to ‖u‖_∞.
    pub nonnegativity_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            restarts: 24,
            max_iters: 400,
            grad_tol: 1e-6,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            min_step: 1e-12,
            ball_radii: None,
            distinctness_tol: 1e-3,
            seed: 0,
            method: DescentMethod::Newton,
            cone_fraction: 0.5,
            noise: 1e-3,
            nonnegativity_tol: 1e-8,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::Invalid(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.restarts < 1 {
            return Err(Error::Invalid("restarts must be at least 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Invalid(format!("shrink must lie in (0,1), got {}", self.shrink)));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::Invalid(format!("armijo constant must lie in (0,1), got {}", self.armijo)));
        }
        if !(self.initial_step > 0.0 && self.min_step > 0.0) {
            return Err(Error::Invalid("step sizes must be positive".into()));
        }
        if !(self.distinctness_tol >= 0.0) {
            return Err(Error::Invalid("distinctness_tol must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.cone_fraction) {
            return Err(Error::Invalid("cone_fraction must lie in [0,1]".into()));
        }
        if let Some(r) = &self.ball_radii {
            if let Some(bad) = r.iter().find(|r| !(**r > 0.0)) {
                return Err(Error::Invalid(format!("ball radius must be positive, got {bad}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub field: DiscreteField,
    /// Discrete ‖u‖ = (pΦ)^{1/p}.
    pub norm: f64,
    pub sup_norm: f64,
    pub energy: EnergyReport,
    pub residual: f64,
    pub converged: bool,
    pub nonnegative: bool,
    pub ball_index: Option<usize>,
    pub iterations: usize,
    pub start: String,
}

/// Outcome of one descent run.
#[derive(Clone, Debug)]
pub struct Descent {
    pub record: SolutionRecord,
    /// J(u_{k+1}) − J(u_k) for each accepted step.
    pub accepted_deltas: Vec<f64>,
    pub line_search_failed: bool,
}

fn make_record<R: Reaction + ?Sized>(
    prob: &DiscreteProblem<'_, R>,
    u: Vec<f64>,
    cfg: &SolveConfig,
    iterations: usize,
    start: &str,
) -> SolutionRecord {
    let energy = prob.energy(&u);
    let p = prob.p();
    let sup = sup_abs(&u);
    let neg = u.iter().fold(0.0f64, |m, &v| m.max(-v));
    SolutionRecord {
        norm: (p * energy.phi).max(0.0).powf(1.0 / p),
        sup_norm: sup,
        residual: energy.grad_sup,
        converged: energy.grad_sup <= cfg.grad_tol,
        nonnegative: neg <= cfg.nonnegativity_tol * sup,
        energy,
        field: DiscreteField(u),
        ball_index: None,
        iterations,
        start: start.to_string(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rescale u radially so that Φ(u) ≤ r(1 − 1e-9).
fn project<R: Reaction + ?Sized>(prob: &DiscreteProblem<'_, R>, u: &mut [f64], r: f64) {
    let target = r * (1.0 - 1e-9);
    let phi = prob.phi(u);
    if phi > target {
        let c = (target / phi).powf(1.0 / prob.p());
        u.iter_mut().for_each(|v| *v *= c);
    }
}

fn direction<R: Reaction + ?Sized>(
    prob: &DiscreteProblem<'_, R>,
    u: &[f64],
    g: &[f64],
    method: DescentMethod,
) -> Vec<f64> {
    if method == DescentMethod::Newton {
        let mut h = prob.model_hessian(u);
        let n = h.nrows();
        let dmax = (0..n).map(|i| h[(i, i)]).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
        for i in 0..n {
            h[(i, i)] += 1e-14 * dmax;
        }
        if let Some(ch) = h.cholesky() {
            let d = ch.solve(&DVector::from_iterator(n, g.iter().map(|v| -v)));
            if d.iter().all(|v| v.is_finite()) {
                return d.as_slice().to_vec();
            }
        }
    }
    g.iter().map(|v| -v).collect()
}

/// Armijo-backtracked descent from `u0`, optionally kept inside {Φ < r}.
pub fn descend<R: Reaction + ?Sized>(
    prob: &DiscreteProblem<'_, R>,
    u0: &[f64],
    cfg: &SolveConfig,
    ball: Option<f64>,
    start: &str,
) -> Descent {
    let n = prob.n();
    let mut u = u0.to_vec();
    if let Some(r) = ball {
        project(prob, &mut u, r);
    }
    let mut g = vec![0.0; n];
    let mut deltas = Vec::new();
    let mut failed = false;
    let mut step = cfg.initial_step;
    let mut it = 0;
    while it < cfg.max_iters {
        prob.gradient_into(&u, &mut g);
        if sup_abs(&g) <= cfg.grad_tol {
            break;
        }
        let d = direction(prob, &u, &g, cfg.method);
        let mut t = match cfg.method {
            DescentMethod::Newton => cfg.initial_step,
            DescentMethod::Gradient => step,
        };
        let mut accepted = None;
        while t >= cfg.min_step {
            let mut trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            if let Some(r) = ball {
                project(prob, &mut trial, r);
            }
            let s: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
            let slope = dot(&g, &s);
            let dj = prob.energy_delta(&u, &trial);
            if dj < 0.0 && dj <= cfg.armijo * slope.min(0.0) {
                accepted = Some((trial, dj));
                break;
            }
            t *= cfg.shrink;
        }
        match accepted {
            Some((trial, dj)) => {
                u = trial;
                deltas.push(dj);
                if cfg.method == DescentMethod::Gradient {
                    step = (2.0 * t).min(1e12);
                }
            }
            None => {
                failed = true;
                break;
            }
        }
        it += 1;
    }
    let record = make_record(prob, u, cfg, it, start);
    Descent { record, accepted_deltas: deltas, line_search_failed: failed }
}

/// Local minimization from `u0` on the grid problem described by `params`.
pub fn minimize_local<R: Reaction + ?Sized>(
    u0: &DiscreteField,
    cfg: &SolveConfig,
    nl: &R,
    params: &ProblemParams,
    grid: &Grid,
) -> Result<SolutionRecord> {
    check_solvable(cfg, params, grid, u0.len())?;
    let prob = DiscreteProblem::new(grid, params, nl)?;
    Ok(descend(&prob, u0.values(), cfg, None, "given").record)
}

fn check_solvable(cfg: &SolveConfig, params: &ProblemParams, grid: &Grid, len: usize) -> Result<()> {
    cfg.validate()?;
    if params.p < 2.0 {
        return Err(Error::Invalid(format!("descent requires p ≥ 2 (p = {})", params.p)));
    }
    if len != grid.n {
        return Err(Error::Invalid(format!("start has {len} values but the grid has {} interior nodes", grid.n)));
    }
    Ok(())
}

/// A labelled starting field.
#[derive(Clone, Debug, PartialEq)]
pub struct Start {
    pub label: String,
    pub field: DiscreteField,
}

/// Amplitude just inside b_k on the falling flank of bump k; at b_k itself f
/// has a vertical tangent that the Newton model cannot see.
pub fn cone_amplitude(b: &crate::nonlinearity::Bump) -> f64 {
    b.center + 0.5 * b.half_width
}

/// Zero, cones b_k θ over the bump sequence, and randomized cones.
pub fn start_portfolio(
    cfg: &SolveConfig,
    nl: &BumpNonlinearity,
    params: &ProblemParams,
    grid: &Grid,
) -> Result<Vec<Start>> {
    let cone = ConeFunction::for_params(params)?;
    let mut starts = vec![Start { label: "zero".into(), field: DiscreteField::zeros(grid.n) }];
    let bumps = nl.bumps();
    if bumps.is_empty() {
        return Ok(starts);
    }
    let n_cone = ((cfg.restarts as f64) * cfg.cone_fraction).round() as usize;
    for i in 0..n_cone {
        let b = bumps[i % bumps.len()];
        let round = i / bumps.len();
        // repeated passes shrink the cone toward the centre
        let tau = cone.tau / (1u32 << round.min(20)) as f64;
        let c = ConeFunction { center: cone.center.clone(), tau };
        starts.push(Start { label: format!("cone b_{}", b.index), field: c.sample_on_grid(grid, cone_amplitude(b)) });
    }
    let (a, b) = (grid.a, grid.b);
    for i in n_cone..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let tau = (0.25 + 0.75 * rng.random::<f64>()) * 0.5 * (b - a);
        let center = a + tau + rng.random::<f64>() * ((b - a) - 2.0 * tau);
        let bump = bumps[rng.random_range(0..bumps.len())];
        let amp = bump.center + (0.2 + 0.8 * rng.random::<f64>()) * bump.half_width;
        let c = ConeFunction { center: vec![center], tau };
        let mut f = c.sample_on_grid(grid, amp);
        for v in f.0.iter_mut() {
            // the plateau stays on the bump; the flanks are perturbed
            if *v < amp {
                *v *= 1.0 + cfg.noise * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
        starts.push(Start { label: format!("random #{i}"), field: f });
    }
    Ok(starts)
}

/// Relative separation above magnitude 1, absolute below.
fn separated(x: f64, y: f64, tol: f64) -> bool {
    let scale = x.abs().max(y.abs()).max(1.0);
    (x - y).abs() > tol * scale
}

/// Two records are distinct when both their norms and energies separate.
pub fn distinct(a: &SolutionRecord, b: &SolutionRecord, tol: f64) -> bool {
    separated(a.norm, b.norm, tol) && separated(a.energy.j, b.energy.j, tol)
}

/// Keeps the first of each group of indistinct records.
pub fn deduplicate(records: Vec<SolutionRecord>, tol: f64) -> Vec<SolutionRecord> {
    let mut out: Vec<SolutionRecord> = Vec::new();
    for r in records {
        if out.iter().all(|q| distinct(q, &r, tol)) {
            out.push(r);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultistartOutcome {
    /// Records in norm order whose energy undercuts every record of smaller
    /// norm: the minimizers of J over growing sublevel sets of Φ.
    pub sequence: Vec<SolutionRecord>,
    /// All distinct converged records, sorted by norm.
    pub distinct: Vec<SolutionRecord>,
    pub attempts: usize,
    pub converged: usize,
    pub norms_increasing: bool,
    pub energies_decreasing: bool,
}

fn strictly(v: &[f64], increasing: bool) -> bool {
    v.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

fn run_starts<R: Reaction + ?Sized>(
    prob: &DiscreteProblem<'_, R>,
    starts: &[Start],
    cfg: &SolveConfig,
    ball: Option<f64>,
) -> Vec<SolutionRecord> {
    let job = |s: &Start| descend(prob, s.field.values(), cfg, ball, &s.label).record;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        starts.par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        starts.iter().map(job).collect()
    }
}

/// Runs every start of the portfolio and condenses the converged results.
pub fn multistart_sequence(
    cfg: &SolveConfig,
    nl: &BumpNonlinearity,
    params: &ProblemParams,
    grid: &Grid,
) -> Result<MultistartOutcome> {
    check_solvable(cfg, params, grid, grid.n)?;
    let prob = DiscreteProblem::new(grid, params, nl)?;
    let starts = start_portfolio(cfg, nl, params, grid)?;
    let all = run_starts(&prob, &starts, cfg, None);
    let attempts = all.len();
    let conv: Vec<SolutionRecord> = all.into_iter().filter(|r| r.converged).collect();
    let converged = conv.len();
    let mut distinct = deduplicate(conv, cfg.distinctness_tol);
    distinct.sort_by(|a, b| a.norm.total_cmp(&b.norm));
    let mut sequence: Vec<SolutionRecord> = Vec::new();
    for r in &distinct {
        if sequence.last().is_none_or(|q| r.energy.j < q.energy.j) {
            sequence.push(r.clone());
        }
    }
    let norms: Vec<f64> = sequence.iter().map(|r| r.norm).collect();
    let energies: Vec<f64> = sequence.iter().map(|r| r.energy.j).collect();
    Ok(MultistartOutcome {
        norms_increasing: strictly(&norms, true),
        energies_decreasing: strictly(&energies, false),
        sequence,
        distinct,
        attempts,
        converged,
    })
}

/// r_j = c_j^p/(K^p p): Φ(u) < r_j forces ‖u‖_∞ < c_j.
pub fn ball_radius(c: f64, k: f64, p: f64) -> f64 {
    (c / k).powf(p) / p
}

/// For each c_j, the lowest-energy point found in {Φ < r_j}.
pub fn nested_ball_search(
    c_seq: &[f64],
    k: f64,
    cfg: &SolveConfig,
    nl: &BumpNonlinearity,
    params: &ProblemParams,
    grid: &Grid,
) -> Result<Vec<SolutionRecord>> {
    if c_seq.is_empty() {
        return Err(Error::Invalid("the c_j sequence is empty".into()));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Invalid(format!("embedding constant must be positive, got {k}")));
    }
    if let Some(c) = c_seq.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(Error::Invalid(format!("infeasible ball: c_j = {c} gives r_j ≤ 0")));
    }
    let radii: Vec<f64> = c_seq.iter().map(|&c| ball_radius(c, k, params.p)).collect();
    ball_search(&radii, Some(c_seq), cfg, nl, params, grid)
}

/// Lowest-energy point found in each sublevel set {Φ < r_j}.
pub fn search_in_balls(
    radii: &[f64],
    cfg: &SolveConfig,
    nl: &BumpNonlinearity,
    params: &ProblemParams,
    grid: &Grid,
) -> Result<Vec<SolutionRecord>> {
    if radii.is_empty() {
        return Err(Error::Invalid("no ball radii given".into()));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::Invalid(format!("infeasible ball radius r_j = {r}")));
    }
    ball_search(radii, None, cfg, nl, params, grid)
}

fn ball_search(
    radii: &[f64],
    caps: Option<&[f64]>,
    cfg: &SolveConfig,
    nl: &BumpNonlinearity,
    params: &ProblemParams,
    grid: &Grid,
) -> Result<Vec<SolutionRecord>> {
    check_solvable(cfg, params, grid, grid.n)?;
    if radii.len() > 1 && !strictly(radii, true) && !strictly(radii, false) {
        return Err(Error::Invalid("the ball sequence must be strictly monotone".into()));
    }
    let prob = DiscreteProblem::new(grid, params, nl)?;
    let base = start_portfolio(cfg, nl, params, grid)?;
    let cone = ConeFunction::for_params(params)?;
    let mut out = Vec::with_capacity(radii.len());
    for (j, &r) in radii.iter().enumerate() {
        let mut starts = base.clone();
        // cones whose amplitude fits the ball's sup-norm bound
        for b in nl.bumps() {
            let field = cone.sample_on_grid(grid, cone_amplitude(b));
            let fits = match caps {
                Some(c) => b.hi() < c[j],
                None => prob.phi(field.values()) < r,
            };
            if fits {
                starts.push(Start { label: format!("ball cone b_{}", b.index), field });
            }
        }
        let recs = run_starts(&prob, &starts, cfg, Some(r));
        let mut best = recs
            .into_iter()
            .min_by(|a, b| {
                // converged interior points first, then energy
                b.converged.cmp(&a.converged).then(a.energy.j.total_cmp(&b.energy.j))
            })
            .expect("portfolio is never empty");
        best.ball_index = Some(j);
        out.push(best);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiEstimate {
    pub r: f64,
    pub sup_psi: f64,
    pub phi: f64,
    /// Candidate fields evaluated.
    pub samples: usize,
    pub low_confidence: bool,
}

/// Best Ψ on the sphere Φ = r reached from `u` by projected ascent.
fn ascend_psi<R: Reaction + ?Sized>(
    prob: &DiscreteProblem<'_, R>,
    u0: &[f64],
    r: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let p = prob.p();
    let scale_to = |u: &mut Vec<f64>| {
        let phi = prob.phi(u);
        if phi > 0.0 {
            let c = (r * (1.0 - 1e-12) / phi).powf(1.0 / p);
            u.iter_mut().for_each(|v| *v *= c);
        }
    };
    let mut u = u0.to_vec();
    scale_to(&mut u);
    let mut best = prob.psi(&u);
    let mut step = 1.0;
    for _ in 0..iters {
        let g: Vec<f64> = u.iter().zip(&prob.weight).map(|(&v, &w)| w * prob.reaction.f(v)).collect();
        let gs = sup_abs(&g);
        if gs == 0.0 {
            break;
        }
        let us = sup_abs(&u).max(f64::MIN_POSITIVE);
        let mut improved = false;
        while step > 1e-10 {
            let mut trial: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a + step * us * b / gs).collect();
            scale_to(&mut trial);
            let val = prob.psi(&trial);
            if val > best {
                u = trial;
                best = val;
                improved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (u, best)
}

/// φ(r) with u = 0 and constrained minimizers as infimum candidates.
pub fn estimate_phi(
    r: f64,
    cfg: &SolveConfig,
    nl: &BumpNonlinearity,
    params: &ProblemParams,
    grid: &Grid,
) -> Result<PhiEstimate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Invalid(format!("φ(r) needs r > 0, got {r}")));
    }
    check_solvable(cfg, params, grid, grid.n)?;
    let prob = DiscreteProblem::new(grid, params, nl)?;
    let cone = ConeFunction::for_params(params)?;

    // shapes for sup Ψ: cones of several radii and plateau widths
    let mut shapes: Vec<Vec<f64>> = Vec::new();
    for &frac in &[1.0, 0.75, 0.5, 0.25, 0.125] {
        let c = ConeFunction { center: cone.center.clone(), tau: cone.tau * frac };
        shapes.push(c.sample_on_grid(grid, 1.0).0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (a, b) = (grid.a, grid.b);
    for _ in 0..cfg.restarts {
        let tau = (0.1 + 0.9 * rng.random::<f64>()) * 0.5 * (b - a);
        let center = a + tau + rng.random::<f64>() * ((b - a) - 2.0 * tau);
        let c = ConeFunction { center: vec![center], tau };
        shapes.push(c.sample_on_grid(grid, 1.0).0);
    }
    let mut samples = 0;
    let mut sup_psi = 0.0f64;
    for s in &shapes {
        let (_, val) = ascend_psi(&prob, s, r, 50);
        sup_psi = sup_psi.max(val);
        samples += 1;
    }

    // infimum candidates: 0 and minimizers inside the ball
    let mut cands: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let starts = start_portfolio(cfg, nl, params, grid)?;
    for rec in run_starts(&prob, &starts, cfg, Some(r)) {
        samples += 1;
        cands.push((rec.energy.phi, rec.energy.psi));
        sup_psi = sup_psi.max(rec.energy.psi);
    }
    let phi = cands
        .iter()
        .filter(|(ph, _)| *ph < r)
        .map(|(ph, ps)| (sup_psi - ps) / (r - ph))
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    Ok(PhiEstimate { r, sup_psi, phi, samples, low_confidence: !phi.is_finite() })
}

/// p‖α‖_∞|Ω|K^p max_{|t|≤c} F(t)/c^p with c = K(pr)^{1/p}.
pub fn phi_chain_bound(r: f64, k: f64, nl: &BumpNonlinearity, params: &ProblemParams) -> f64 {
    let p = params.p;
    let c = k * (p * r).powf(1.0 / p);
    // F is nondecreasing and vanishes on t ≤ 0
    p * params.alpha.alpha_inf * params.measure() * k.powf(p) * nl.evaluate_big_f(c) / c.powf(p)
}

/// (|ξ⁻ − η⁻|^p, |ξ−η|^{p−2}(ξ−η)(η⁻ − ξ⁻)); the first never exceeds the second.
pub fn negative_part_pair(xi: f64, eta: f64, p: f64) -> (f64, f64) {
    let (xm, em) = ((-xi).max(0.0), (-eta).max(0.0));
    let d = xi - eta;
    let lhs = (xm - em).abs().powf(p);
    let rhs = if d == 0.0 { 0.0 } else { d.abs().powf(p - 2.0) * d * (em - xm) };
    (lhs, rhs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonnegativityReport {
    pub nonnegative: bool,
    /// ‖u⁻‖_∞
    pub negative_sup: f64,
    /// ⟨G′(u), −u⁻⟩
    pub pairing: f64,
    /// p · G(u⁻)
    pub negative_energy: f64,
    /// pairing ≥ p G(u⁻) up to rounding.
    pub chain_holds: bool,
}

pub fn nonnegativity_report(
    rec: &SolutionRecord,
    grid: &Grid,
    params: &ProblemParams,
    tol: f64,
) -> Result<NonnegativityReport> {
    let u = rec.field.values();
    if u.len() != grid.n {
        return Err(Error::Invalid("record does not match the grid".into()));
    }
    let form = crate::discretization::GagliardoForm::new(grid, params)?;
    let neg: Vec<f64> = u.iter().map(|v| (-v).max(0.0)).collect();
    let mut g = vec![0.0; u.len()];
    form.gradient_into(u, &mut g);
    let pairing = -dot(&g, &neg);
    let negative_energy = params.p * form.value(&neg);
    let scale = dot(&g.iter().map(|v| v.abs()).collect::<Vec<_>>(), &neg.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let negative_sup = sup_abs(&neg);
    Ok(NonnegativityReport {
        nonnegative: negative_sup <= tol * sup_abs(u),
        negative_sup,
        pairing,
        negative_energy,
        chain_holds: pairing >= negative_energy - 1e-12 * scale.max(negative_energy),
    })
}

/// True when ‖u⁻‖_∞ ≤ 10⁻⁸ ‖u‖_∞.
pub fn verify_nonnegativity(rec: &SolutionRecord, grid: &Grid, params: &ProblemParams) -> Result<bool> {
    Ok(nonnegativity_report(rec, grid, params, 1e-8)?.nonnegative)
}
