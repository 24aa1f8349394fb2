//! Uniform-grid discretization of X₀^{s,p}(Ω) for Ω = (a, b) ⊂ ℝ.
//!
//! Nodes x_i = a + (i+1)h, i = 0..n, h = (b−a)/(n+1); fields vanish at and
//! beyond the boundary. The p-th power of the norm is approximated by the
//! node-pair Riemann sum
//!
//! ```text
//! G(u) = Σ_{i≠j} |u_i − u_j|^p h² / |x_i − x_j|^{1+ps}  +  2h Σ_i |u_i|^p E(x_i)
//! E(x) = ∫_{ℝ∖(a,b)} |x − y|^{−1−ps} dy = ((x−a)^{−ps} + (b−x)^{−ps}) / ps
//! ```
//!
//! so that Φ = G/p is exactly differentiable. The diagonal contributes nothing;
//! the missing near-diagonal mass is O(h^{p(1−s)}) for Lipschitz fields.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::Reaction;
use crate::problem::{DomainSpec, ProblemParams};

/// Default interior node count.
pub const DEFAULT_NODES: usize = 255;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    /// Interior node count.
    pub n: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("grid needs at least one interior node".into()));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Invalid(format!("grid interval ({a}, {b}) is empty")));
        }
        Ok(Grid { a, b, n })
    }

    pub fn for_params(params: &ProblemParams, n: usize) -> Result<Self> {
        match params.domain {
            DomainSpec::Interval { a, b } if params.dim == 1 => Grid::new(a, b, n),
            _ => Err(Error::Invalid("grid discretization is implemented for N = 1 intervals only".into())),
        }
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.n + 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.a + (i + 1) as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// E(x) for an interior point.
    pub fn exterior_kernel(&self, x: f64, ps: f64) -> Result<f64> {
        let (l, r) = (x - self.a, self.b - x);
        if !(l > 0.0 && r > 0.0) {
            return Err(Error::Invalid(format!("exterior kernel is singular at x = {x}")));
        }
        Ok((l.powf(-ps) + r.powf(-ps)) / ps)
    }

    /// Grid with n → 2n + 1 interior nodes; every old node is kept.
    pub fn refined(&self) -> Grid {
        Grid { n: 2 * self.n + 1, ..self.clone() }
    }
}

/// Nodal values at the interior nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField(pub Vec<f64>);

impl DiscreteField {
    pub fn zeros(n: usize) -> Self {
        DiscreteField(vec![0.0; n])
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64) -> f64) -> Self {
        DiscreteField(grid.nodes().into_iter().map(&mut f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        DiscreteField(self.0.iter().map(|v| c * v).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 3.0 {
        let a = x.abs();
        a * a * a
    } else {
        x.abs().powf(p)
    }
}

/// |d|^{p−2} d
#[inline]
fn signed_pow(d: f64, p: f64) -> f64 {
    if p == 2.0 {
        d
    } else if p == 3.0 {
        d.abs() * d
    } else if d == 0.0 {
        0.0
    } else {
        d.abs().powf(p - 2.0) * d
    }
}

/// |d|^{p−2}, with the p < 2 singularity at 0 capped by `floor`.
#[inline]
fn curvature_pow(d: f64, p: f64, floor: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if p == 3.0 {
        d.abs()
    } else {
        d.abs().max(floor).powf(p - 2.0)
    }
}

/// |b + δ|^p − |b|^p from the base b and the increment δ.
#[inline]
pub(crate) fn pow_step(b: f64, delta: f64, p: f64) -> f64 {
    if p == 2.0 {
        return delta * (2.0 * b + delta);
    }
    if b != 0.0 && delta.abs() < 0.5 * b.abs() {
        abs_pow(b, p) * (p * (delta / b).ln_1p()).exp_m1()
    } else {
        abs_pow(b + delta, p) - abs_pow(b, p)
    }
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn map_rows<F>(n: usize, row: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= 128 {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(row).collect();
        }
    }
    (0..n).map(row).collect()
}

/// The quadratic-in-structure part of the energy: G(u) and its derivatives.
#[derive(Clone, Debug)]
pub struct GagliardoForm {
    pub p: f64,
    pub n: usize,
    /// h² / (d h)^{1+ps}, indexed by d = |i − j| (entry 0 unused).
    pair: Vec<f64>,
    /// 2h E(x_i).
    exterior: Vec<f64>,
}

impl GagliardoForm {
    pub fn new(grid: &Grid, params: &ProblemParams) -> Result<Self> {
        if params.dim != 1 {
            return Err(Error::Invalid("discrete Gagliardo form requires N = 1".into()));
        }
        let ps = params.ps();
        if !(ps > 1.0) {
            return Err(Error::Hypothesis(format!("p > N/s required (p·s = {ps})")));
        }
        let h = grid.h();
        let scale = h.powf(1.0 - ps);
        let mut pair = vec![0.0; grid.n];
        for (d, w) in pair.iter_mut().enumerate().skip(1) {
            *w = scale * (d as f64).powf(-1.0 - ps);
        }
        let exterior = (0..grid.n)
            .map(|i| grid.exterior_kernel(grid.node(i), ps).map(|e| 2.0 * h * e))
            .collect::<Result<Vec<_>>>()?;
        Ok(GagliardoForm { p: params.p, n: grid.n, pair, exterior })
    }

    fn row_value(&self, u: &[f64], i: usize) -> f64 {
        let p = self.p;
        let ui = u[i];
        let mut acc = 0.0;
        for (j, &uj) in u.iter().enumerate() {
            if j != i {
                acc += abs_pow(ui - uj, p) * self.pair[i.abs_diff(j)];
            }
        }
        acc + self.exterior[i] * abs_pow(ui, p)
    }

    /// G(u), the p-th power of the discrete norm.
    pub fn value(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.n);
        compensated_sum(map_rows(self.n, |i| self.row_value(u, i)))
    }

    /// ∇G(u).
    pub fn gradient_into(&self, u: &[f64], out: &mut [f64]) {
        let p = self.p;
        let rows = map_rows(self.n, |i| {
            let ui = u[i];
            let mut acc = 0.0;
            for (j, &uj) in u.iter().enumerate() {
                if j != i {
                    acc += signed_pow(ui - uj, p) * self.pair[i.abs_diff(j)];
                }
            }
            p * (2.0 * acc + self.exterior[i] * signed_pow(ui, p))
        });
        out.copy_from_slice(&rows);
    }

    /// ∇²G(u); for p < 2 the singular weights at coincident values are capped.
    pub fn hessian(&self, u: &[f64]) -> DMatrix<f64> {
        let p = self.p;
        let n = self.n;
        let floor = 1e-9 * u.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        let c = p * (p - 1.0);
        let mut h = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut diag = c * self.exterior[i] * curvature_pow(u[i], p, floor);
            for j in 0..n {
                if j != i {
                    let w = 2.0 * c * curvature_pow(u[i] - u[j], p, floor) * self.pair[i.abs_diff(j)];
                    h[(i, j)] = -w;
                    diag += w;
                }
            }
            h[(i, i)] = diag;
        }
        h
    }

    /// G(v) − G(u), accurate when v is close to u.
    pub fn delta(&self, u: &[f64], v: &[f64]) -> f64 {
        let p = self.p;
        let step: Vec<f64> = v.iter().zip(u).map(|(a, b)| a - b).collect();
        let rows = map_rows(self.n, |i| {
            let mut acc = 0.0;
            for j in 0..self.n {
                if j != i {
                    acc += pow_step(u[i] - u[j], step[i] - step[j], p) * self.pair[i.abs_diff(j)];
                }
            }
            acc + self.exterior[i] * pow_step(u[i], step[i], p)
        });
        compensated_sum(rows)
    }

    /// Pair weight h²/|x_i − x_j|^{1+ps}.
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.pair[i.abs_diff(j)]
        }
    }

    /// 2h E(x_i).
    pub fn exterior_weight(&self, i: usize) -> f64 {
        self.exterior[i]
    }
}

/// p-th power of the discrete Gagliardo norm.
pub fn discrete_gagliardo(u: &DiscreteField, grid: &Grid, params: &ProblemParams) -> Result<f64> {
    check_len(u, grid)?;
    Ok(GagliardoForm::new(grid, params)?.value(u.values()))
}

fn check_len(u: &DiscreteField, grid: &Grid) -> Result<()> {
    if u.len() != grid.n {
        return Err(Error::Invalid(format!("field has {} values but the grid has {} interior nodes", u.len(), grid.n)));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Φ(u) = G(u)/p.
    pub phi: f64,
    /// Ψ(u) = Σ h α(x_i) F(u_i).
    pub psi: f64,
    /// J = Φ − λΨ.
    pub j: f64,
    pub grad_sup: f64,
    pub lambda: f64,
}

/// Energy J_λ = Φ − λΨ on a grid, with its exact gradient.
pub struct DiscreteProblem<'a, R: Reaction + ?Sized> {
    pub grid: Grid,
    pub form: GagliardoForm,
    /// h α(x_i)
    pub weight: Vec<f64>,
    pub lambda: f64,
    pub reaction: &'a R,
}

impl<'a, R: Reaction + ?Sized> DiscreteProblem<'a, R> {
    pub fn new(grid: &Grid, params: &ProblemParams, reaction: &'a R) -> Result<Self> {
        let form = GagliardoForm::new(grid, params)?;
        let h = grid.h();
        let weight = grid.nodes().iter().map(|&x| h * params.alpha.eval(&[x])).collect();
        Ok(DiscreteProblem { grid: grid.clone(), form, weight, lambda: params.lambda, reaction })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn p(&self) -> f64 {
        self.form.p
    }

    pub fn phi(&self, u: &[f64]) -> f64 {
        self.form.value(u) / self.form.p
    }

    pub fn psi(&self, u: &[f64]) -> f64 {
        compensated_sum(u.iter().zip(&self.weight).map(|(&v, &w)| w * self.reaction.primitive(v)))
    }

    pub fn energy_value(&self, u: &[f64]) -> f64 {
        self.phi(u) - self.lambda * self.psi(u)
    }

    pub fn gradient_into(&self, u: &[f64], out: &mut [f64]) {
        self.form.gradient_into(u, out);
        let inv_p = 1.0 / self.form.p;
        for ((g, &v), &w) in out.iter_mut().zip(u).zip(&self.weight) {
            *g = *g * inv_p - self.lambda * w * self.reaction.f(v);
        }
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n()];
        self.gradient_into(u, &mut g);
        g
    }

    /// sup_i |⟨J′(u), e_i⟩|.
    pub fn residual(&self, u: &[f64]) -> f64 {
        sup_abs(&self.gradient(u))
    }

    pub fn energy(&self, u: &[f64]) -> EnergyReport {
        let phi = self.phi(u);
        let psi = self.psi(u);
        EnergyReport { phi, psi, j: phi - self.lambda * psi, grad_sup: self.residual(u), lambda: self.lambda }
    }

    /// J(v) − J(u), accurate when v is close to u.
    pub fn energy_delta(&self, u: &[f64], v: &[f64]) -> f64 {
        let dphi = self.form.delta(u, v) / self.form.p;
        let dpsi = compensated_sum(
            u.iter().zip(v).zip(&self.weight).map(|((&a, &b), &w)| w * self.reaction.primitive_diff(a, b)),
        );
        dphi - self.lambda * dpsi
    }

    /// Hessian of Φ plus the positive part of the reaction's diagonal
    /// curvature −λ h α f′(u_i); positive semidefinite for p ≥ 2.
    pub fn model_hessian(&self, u: &[f64]) -> DMatrix<f64> {
        let mut h = self.form.hessian(u);
        h /= self.form.p;
        for (i, (&v, &w)) in u.iter().zip(&self.weight).enumerate() {
            let c = -self.lambda * w * self.reaction.derivative(v);
            if c > 0.0 && c.is_finite() {
                h[(i, i)] += c;
            }
        }
        h
    }
}

pub(crate) fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Energy report for `u` at the multiplier in `params`.
pub fn energy<R: Reaction + ?Sized>(
    u: &DiscreteField,
    nl: &R,
    params: &ProblemParams,
    grid: &Grid,
) -> Result<EnergyReport> {
    check_len(u, grid)?;
    Ok(DiscreteProblem::new(grid, params, nl)?.energy(u.values()))
}

/// ∂J/∂u_i for every interior node.
pub fn gradient<R: Reaction + ?Sized>(
    u: &DiscreteField,
    nl: &R,
    params: &ProblemParams,
    grid: &Grid,
) -> Result<DiscreteField> {
    check_len(u, grid)?;
    if params.p < 2.0 {
        return Err(Error::Invalid(format!("gradients are supported for p ≥ 2 only (p = {})", params.p)));
    }
    Ok(DiscreteField(DiscreteProblem::new(grid, params, nl)?.gradient(u.values())))
}

/// sup over nodal test fields e_i of |⟨J′(u), e_i⟩|.
pub fn weak_residual<R: Reaction + ?Sized>(
    u: &DiscreteField,
    nl: &R,
    params: &ProblemParams,
    grid: &Grid,
) -> Result<f64> {
    let g = gradient(u, nl, params, grid)?;
    Ok(sup_abs(g.values()))
}
