//! Browser bindings for three small experiments on (−1, 1) with α ≡ 1:
//! the factorial-bump reaction, the lower threshold λ₁ as s varies, and a
//! multistart solve on a coarse grid.
//!
//! The `*_native` functions carry the logic and are plain Rust so they can
//! be tested off the browser; the exported wrappers only convert errors.

use fracosc::constants::{estimate_embedding_constant, kappa, lambda_interval};
use fracosc::solver::{multistart_sequence, SolveConfig};
use fracosc::{BumpNonlinearity, Extended, Grid, ProblemParams, Reaction};
use wasm_bindgen::prelude::*;

/// Largest grid the page may ask for; the dense Hessian is n².
pub const MAX_NODES: usize = 255;

#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct Profile {
    t: Vec<f64>,
    f: Vec<f64>,
    big_f: Vec<f64>,
}

#[wasm_bindgen]
impl Profile {
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    pub fn f(&self) -> Vec<f64> {
        self.f.clone()
    }
    /// The primitive F(t).
    pub fn big_f(&self) -> Vec<f64> {
        self.big_f.clone()
    }
}

#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct ThresholdCurve {
    s: Vec<f64>,
    kappa: Vec<f64>,
    k: Vec<f64>,
    lambda1: Vec<f64>,
}

#[wasm_bindgen]
impl ThresholdCurve {
    pub fn s(&self) -> Vec<f64> {
        self.s.clone()
    }
    pub fn kappa(&self) -> Vec<f64> {
        self.kappa.clone()
    }
    /// Discrete embedding constant on the grid used for each s.
    pub fn k(&self) -> Vec<f64> {
        self.k.clone()
    }
    pub fn lambda1(&self) -> Vec<f64> {
        self.lambda1.clone()
    }
}

#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct Solutions {
    lambda: f64,
    x: Vec<f64>,
    norms: Vec<f64>,
    energies: Vec<f64>,
    fields: Vec<Vec<f64>>,
}

#[wasm_bindgen]
impl Solutions {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn count(&self) -> usize {
        self.fields.len()
    }
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    pub fn norms(&self) -> Vec<f64> {
        self.norms.clone()
    }
    pub fn energies(&self) -> Vec<f64> {
        self.energies.clone()
    }
    /// Nodal values of the j-th solution; empty past the end.
    pub fn field(&self, j: usize) -> Vec<f64> {
        self.fields.get(j).cloned().unwrap_or_default()
    }
}

/// B_L of the factorial preset, from its closed-form limits.
fn factorial_b_l(p: f64) -> Result<Extended, String> {
    let nl = BumpNonlinearity::factorial(p, 1).map_err(|e| e.to_string())?;
    nl.analytic.map(|a| a.b_l).ok_or_else(|| "the factorial preset lost its analytic limits".to_string())
}

fn interval_params(s: f64, p: f64, lambda: f64) -> Result<ProblemParams, String> {
    ProblemParams::interval(-1.0, 1.0, s, p, lambda).map_err(|e| e.to_string())
}

/// f and F on `per_bump` points across each bump, plus one point in each gap.
pub fn nonlinearity_profile_native(p: f64, k_max: usize, per_bump: usize) -> Result<Profile, String> {
    if !(1..=12).contains(&k_max) {
        return Err(format!("k_max must lie in 1..=12, got {k_max}"));
    }
    if per_bump < 2 {
        return Err("need at least two points per bump".into());
    }
    let nl = BumpNonlinearity::factorial(p, k_max).map_err(|e| e.to_string())?;
    let mut t = vec![0.0];
    for b in nl.bumps() {
        let (lo, hi) = (b.lo(), b.hi());
        t.push(0.5 * lo);
        t.extend((0..per_bump).map(|i| lo + (hi - lo) * i as f64 / (per_bump - 1) as f64));
    }
    t.sort_by(f64::total_cmp);
    t.dedup();
    let f = t.iter().map(|&x| nl.f(x)).collect();
    let big_f = t.iter().map(|&x| nl.primitive(x)).collect();
    Ok(Profile { t, f, big_f })
}

/// κ, the grid estimate of K and λ₁ of the factorial preset for each s.
pub fn threshold_curve_native(p: f64, s_values: &[f64], n: usize) -> Result<ThresholdCurve, String> {
    if s_values.is_empty() {
        return Err("no s values".into());
    }
    if !(3..=MAX_NODES).contains(&n) {
        return Err(format!("grid size must lie in 3..={MAX_NODES}, got {n}"));
    }
    let b_l = factorial_b_l(p)?;
    let mut out = ThresholdCurve { s: Vec::new(), kappa: Vec::new(), k: Vec::new(), lambda1: Vec::new() };
    for &s in s_values {
        let params = interval_params(s, p, 0.0)?;
        let grid = Grid::for_params(&params, n).map_err(|e| e.to_string())?;
        let k = estimate_embedding_constant(&grid, &params).map_err(|e| e.to_string())?.k_est;
        let iv = lambda_interval(&params, 0.0, b_l, k).map_err(|e| e.to_string())?;
        out.s.push(s);
        out.kappa.push(kappa(p, 1, s).map_err(|e| e.to_string())?);
        out.k.push(k);
        out.lambda1.push(iv.lambda1.as_f64());
    }
    Ok(out)
}

/// Multistart on n nodes at λ = factor·λ₁; returns the energy envelope.
pub fn solve_native(
    s: f64,
    p: f64,
    lambda_factor: f64,
    k_max: usize,
    n: usize,
    seed: u64,
) -> Result<Solutions, String> {
    if !(3..=MAX_NODES).contains(&n) {
        return Err(format!("grid size must lie in 3..={MAX_NODES}, got {n}"));
    }
    if !(lambda_factor >= 0.0 && lambda_factor.is_finite()) {
        return Err(format!("λ factor must be finite and nonnegative, got {lambda_factor}"));
    }
    if !(1..=8).contains(&k_max) {
        return Err(format!("k_max must lie in 1..=8, got {k_max}"));
    }
    let nl = BumpNonlinearity::factorial(p, k_max).map_err(|e| e.to_string())?;
    let base = interval_params(s, p, 0.0)?;
    // K does not enter λ₁
    let lambda1 = lambda_interval(&base, 0.0, factorial_b_l(p)?, 1.0).map_err(|e| e.to_string())?.lambda1.as_f64();
    let lambda = lambda_factor * lambda1;
    let params = base.with_lambda(lambda);
    let grid = Grid::for_params(&params, n).map_err(|e| e.to_string())?;
    let cfg = SolveConfig { restarts: 8, seed, ..Default::default() };
    let o = multistart_sequence(&cfg, &nl, &params, &grid).map_err(|e| e.to_string())?;
    Ok(Solutions {
        lambda,
        x: grid.nodes(),
        norms: o.sequence.iter().map(|r| r.norm).collect(),
        energies: o.sequence.iter().map(|r| r.energy.j).collect(),
        fields: o.sequence.iter().map(|r| r.field.values().to_vec()).collect(),
    })
}

#[wasm_bindgen]
pub fn nonlinearity_profile(p: f64, k_max: usize, per_bump: usize) -> Result<Profile, JsError> {
    nonlinearity_profile_native(p, k_max, per_bump).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn threshold_curve(p: f64, s_values: Vec<f64>, n: usize) -> Result<ThresholdCurve, JsError> {
    threshold_curve_native(p, &s_values, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve(s: f64, p: f64, lambda_factor: f64, k_max: usize, n: usize, seed: u64) -> Result<Solutions, JsError> {
    solve_native(s, p, lambda_factor, k_max, n, seed).map_err(|e| JsError::new(&e))
}
