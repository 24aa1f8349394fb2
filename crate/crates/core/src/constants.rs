//! Closed-form constants of the existence theory and the admissible λ-interval.
//!
//! Everything here is a pure function of its inputs. The embedding constant
//! `K = sup ‖u‖_∞/‖u‖` has no closed form; [`estimate_embedding_constant`]
//! computes its exact value on the discrete subspace of a [`Grid`], which is
//! what every λ-interval in this crate is labelled with.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::discretization::{GagliardoForm, Grid};
use crate::error::{Error, Result};
use crate::problem::{check_exponents, ProblemParams};

/// A nonnegative quantity that may be +∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// Lossy view for plotting and comparisons.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn lt(&self, other: &Extended) -> bool {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a < b,
            (Extended::Finite(_), Extended::Infinite) => true,
            (Extended::Infinite, _) => false,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v:.16e}"),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

/// The three terms of κ_{p,N,s}, in display order.
pub fn kappa_terms(p: f64, dim: usize, s: f64) -> Result<[f64; 3]> {
    check_exponents(p, dim, s)?;
    let n = dim as f64;
    let ps = p * s;
    let t1 = (p * (3.0 - s) - n).exp2() / p * (1.0 - (-n).exp2()).powi(2);
    let t2 = (2.0 + ps - n).exp2() / (ps * (n + p * (1.0 - s)));
    // 1 − 2^{−(N−ps)} through expm1: both factors vanish together as ps → N
    let gap = n - ps;
    let t3 = 2.0 * -(-gap * LN_2).exp_m1() / (gap * ps);
    Ok([t1, t2, t3])
}

/// κ_{p,N,s}; strictly positive whenever ps > N.
pub fn kappa(p: f64, dim: usize, s: f64) -> Result<f64> {
    let [a, b, c] = kappa_terms(p, dim, s)?;
    Ok(a + b + c)
}

/// ω_N = π^{N/2} / Γ(N/2 + 1).
pub fn unit_ball_volume(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    PI.powf(half) / gamma(half + 1.0)
}

/// C = τ^{sp} α₀ / (2^N κ K^p |Ω| ω_N ‖α‖_∞).
pub fn constant_c(params: &ProblemParams, k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Invalid(format!("embedding constant K must be positive, got {k}")));
    }
    let n = params.dim;
    let kap = kappa(params.p, n, params.s)?;
    let num = params.tau().powf(params.ps());
    let den = (n as f64).exp2() * kap * k.powf(params.p) * params.measure() * unit_ball_volume(n);
    Ok(num / den * params.alpha.alpha0 / params.alpha.alpha_inf)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaInterval {
    pub lambda1: Extended,
    pub lambda2: Extended,
    /// λ₁ < λ₂, equivalently A_L < C·B_L.
    pub nonempty: bool,
    /// Embedding constant the interval was computed with.
    pub k_used: f64,
}

impl LambdaInterval {
    pub fn contains(&self, lambda: f64) -> bool {
        Extended::Finite(lambda).lt(&self.lambda2) && self.lambda1.lt(&Extended::Finite(lambda))
    }
}

/// λ₁ = κ ω_N 2^N / (p τ^{sp} α₀ B_L) and λ₂ = 1 / (p ‖α‖_∞ |Ω| K^p A_L).
pub fn lambda_interval(params: &ProblemParams, a_l: f64, b_l: Extended, k: f64) -> Result<LambdaInterval> {
    if !(a_l >= 0.0) {
        return Err(Error::Invalid(format!("A_L must be nonnegative, got {a_l}")));
    }
    if let Extended::Finite(b) = b_l {
        if !(b >= 0.0) {
            return Err(Error::Invalid(format!("B_L must be nonnegative, got {b}")));
        }
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Invalid(format!("embedding constant K must be positive, got {k}")));
    }
    let n = params.dim;
    let p = params.p;
    let kap = kappa(p, n, params.s)?;
    let lambda1 = match b_l {
        Extended::Infinite => Extended::Finite(0.0),
        Extended::Finite(0.0) => Extended::Infinite,
        Extended::Finite(b) => Extended::Finite(
            kap * unit_ball_volume(n) * (n as f64).exp2()
                / (p * params.tau().powf(params.ps()) * params.alpha.alpha0 * b),
        ),
    };
    let lambda2 = if a_l == 0.0 {
        Extended::Infinite
    } else {
        Extended::Finite(1.0 / (p * params.alpha.alpha_inf * params.measure() * k.powf(p) * a_l))
    };
    Ok(LambdaInterval { nonempty: lambda1.lt(&lambda2), lambda1, lambda2, k_used: k })
}

/// Result of the discrete embedding-constant search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingEstimate {
    pub k_est: f64,
    /// Node index attaining the maximum.
    pub node: usize,
    /// max u_i over the discrete unit sphere, per node.
    pub per_node: Vec<f64>,
    pub grid_n: usize,
    pub converged: bool,
    pub max_iterations: usize,
}

const K_MAX_NEWTON: usize = 200;

/// Per-node problem: minimize the discrete Gagliardo energy G(u) subject to
/// u_i = 1. Then max{u_i : G(u) = 1} = G_min^{-1/p}. Returns (value, iterations, converged).
fn node_extremal(form: &GagliardoForm, grid: &Grid, i: usize) -> (f64, usize, bool) {
    let n = grid.n;
    let (a, b) = (grid.a, grid.b);
    let xi = grid.node(i);
    // tent through (x_i, 1) vanishing at both ends: every pair difference is nonzero
    let mut u: Vec<f64> = (0..n)
        .map(|j| {
            let x = grid.node(j);
            if j <= i {
                (x - a) / (xi - a)
            } else {
                (b - x) / (b - xi)
            }
        })
        .collect();
    if n == 1 {
        return (form.value(&u).powf(-1.0 / form.p), 0, true);
    }
    let free: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    let mut g = vec![0.0; n];
    let mut converged = false;
    let mut it = 0;
    while it < K_MAX_NEWTON {
        it += 1;
        form.gradient_into(&u, &mut g);
        let h = form.hessian(&u);
        let m = free.len();
        let mut hr = DMatrix::<f64>::zeros(m, m);
        let mut gr = DVector::<f64>::zeros(m);
        let mut diag_max = 0.0f64;
        for (r, &jr) in free.iter().enumerate() {
            gr[r] = g[jr];
            for (c, &jc) in free.iter().enumerate() {
                hr[(r, c)] = h[(jr, jc)];
            }
            diag_max = diag_max.max(h[(jr, jr)]);
        }
        for r in 0..m {
            hr[(r, r)] += 1e-14 * diag_max;
        }
        let Some(chol) = hr.clone().cholesky() else { break };
        let step = chol.solve(&(-&gr));
        let decrement = -gr.dot(&step);
        let gval = form.value(&u);
        if decrement <= 1e-26 * gval.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        let mut trial = u.clone();
        for _ in 0..60 {
            for (r, &j) in free.iter().enumerate() {
                trial[j] = u[j] + t * step[r];
            }
            let dg = form.delta(&u, &trial);
            if dg <= -1e-4 * t * decrement {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no measurable decrease left: at the floating-point floor
            converged = decrement <= 1e-12 * gval;
            break;
        }
        u.copy_from_slice(&trial);
    }
    (form.value(&u).powf(-1.0 / form.p), it, converged)
}

/// Lower bound for K from the discrete subspace: max over nodes of the largest
/// value a field of unit discrete norm can take there.
pub fn estimate_embedding_constant(grid: &Grid, params: &ProblemParams) -> Result<EmbeddingEstimate> {
    if grid.n == 0 {
        return Err(Error::Invalid("grid has no interior nodes".into()));
    }
    let form = GagliardoForm::new(grid, params)?;
    // the uniform grid is mirror symmetric: K_i = K_{n-1-i}
    let half: Vec<usize> = (0..grid.n.div_ceil(2)).collect();
    #[cfg(feature = "parallel")]
    let solved: Vec<(f64, usize, bool)> = {
        use rayon::prelude::*;
        half.par_iter().map(|&i| node_extremal(&form, grid, i)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let solved: Vec<(f64, usize, bool)> = half.iter().map(|&i| node_extremal(&form, grid, i)).collect();

    let mut per_node = vec![0.0; grid.n];
    for (&i, &(v, _, _)) in half.iter().zip(&solved) {
        per_node[i] = v;
        per_node[grid.n - 1 - i] = v;
    }
    let (node, k_est) =
        per_node
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let converged = solved.iter().all(|s| s.2);
    let max_iterations = solved.iter().map(|s| s.1).max().unwrap_or(0);
    if !k_est.is_finite() || k_est <= 0.0 {
        return Err(Error::Numerical(format!("embedding search produced K = {k_est}")));
    }
    Ok(EmbeddingEstimate { k_est, node, per_node, grid_n: grid.n, converged, max_iterations })
}

/// Every explicit constant for a parameter set, labelled with the K it used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantSet {
    pub kappa: f64,
    pub kappa_terms: [f64; 3],
    pub omega_n: f64,
    pub tau: f64,
    pub measure: f64,
    pub alpha0: f64,
    pub alpha_inf: f64,
    pub c: f64,
    pub k_est: f64,
    /// Interior node count of the grid K was estimated on, if any.
    pub k_grid_n: Option<usize>,
    pub interval: LambdaInterval,
}

impl ConstantSet {
    pub fn compute(
        params: &ProblemParams,
        a_l: f64,
        b_l: Extended,
        k_est: f64,
        k_grid_n: Option<usize>,
    ) -> Result<Self> {
        Ok(ConstantSet {
            kappa: kappa(params.p, params.dim, params.s)?,
            kappa_terms: kappa_terms(params.p, params.dim, params.s)?,
            omega_n: unit_ball_volume(params.dim),
            tau: params.tau(),
            measure: params.measure(),
            alpha0: params.alpha.alpha0,
            alpha_inf: params.alpha.alpha_inf,
            c: constant_c(params, k_est)?,
            k_est,
            k_grid_n,
            interval: lambda_interval(params, a_l, b_l, k_est)?,
        })
    }
}
