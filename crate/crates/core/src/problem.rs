//! Problem data: dimension, fractional order, exponent, domain, weight and multiplier.

use serde::{Deserialize, Serialize};

use crate::constants::unit_ball_volume;
use crate::error::{Error, Result};

/// Number of sample points used to bound a non-constant weight.
pub const DEFAULT_WEIGHT_SAMPLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl DomainSpec {
    pub fn interval(a: f64, b: f64) -> Self {
        DomainSpec::Interval { a, b }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Ball { center, .. } => center.len(),
            DomainSpec::Box { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            DomainSpec::Interval { a, b } => a.is_finite() && b.is_finite() && a < b,
            DomainSpec::Ball { center, radius } => {
                !center.is_empty() && center.iter().all(|c| c.is_finite()) && *radius > 0.0
            }
            DomainSpec::Box { lo, hi } => {
                !lo.is_empty()
                    && lo.len() == hi.len()
                    && lo.iter().zip(hi).all(|(l, h)| l.is_finite() && h.is_finite() && l < h)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!("domain must have |Ω| > 0 and inradius τ > 0, got {self:?}")))
        }
    }

    /// Lebesgue measure |Ω|.
    pub fn measure(&self) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
            DomainSpec::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).product(),
        }
    }

    /// Inradius τ = sup dist(x, ∂Ω).
    pub fn inradius(&self) -> f64 {
        match self {
            DomainSpec::Interval { a, b } => 0.5 * (b - a),
            DomainSpec::Ball { radius, .. } => *radius,
            DomainSpec::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (h - l)).fold(f64::INFINITY, f64::min),
        }
    }

    /// A point realizing the inradius.
    pub fn chebyshev_center(&self) -> Vec<f64> {
        match self {
            DomainSpec::Interval { a, b } => vec![0.5 * (a + b)],
            DomainSpec::Ball { center, .. } => center.clone(),
            DomainSpec::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainSpec::Interval { a, b } => x[0] > *a && x[0] < *b,
            DomainSpec::Ball { center, radius } => {
                center.iter().zip(x).map(|(c, v)| (v - c).powi(2)).sum::<f64>() < radius * radius
            }
            DomainSpec::Box { lo, hi } => lo.iter().zip(hi).zip(x).all(|((l, h), v)| v > l && v < h),
        }
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            DomainSpec::Interval { a, b } => (vec![*a], vec![*b]),
            DomainSpec::Ball { center, radius } => {
                (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
            }
            DomainSpec::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }
}

/// Shape of the weight α. Coordinates refer to the first axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightProfile {
    Constant {
        value: f64,
    },
    /// α(x) = base + slope · x₁
    Linear {
        base: f64,
        slope: f64,
    },
    /// α(x) = base + amplitude · cos(frequency · x₁)
    Cosine {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
}

impl WeightProfile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            WeightProfile::Constant { value } => value,
            WeightProfile::Linear { base, slope } => base + slope * x[0],
            WeightProfile::Cosine { base, amplitude, frequency } => base + amplitude * (frequency * x[0]).cos(),
        }
    }
}

/// How α₀ and ‖α‖_∞ were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightBounds {
    Exact,
    Sampled { points: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub profile: WeightProfile,
    /// Essential infimum over Ω.
    pub alpha0: f64,
    /// Essential supremum over Ω.
    pub alpha_inf: f64,
    pub bounds: WeightBounds,
}

impl WeightSpec {
    pub fn constant(value: f64) -> Result<Self> {
        let w = WeightSpec {
            profile: WeightProfile::Constant { value },
            alpha0: value,
            alpha_inf: value,
            bounds: WeightBounds::Exact,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn unit() -> Self {
        Self::constant(1.0).expect("unit weight is admissible")
    }

    /// Bounds a weight profile over `domain`, sampling it on a lattice of
    /// roughly `points` points unless the profile is constant.
    pub fn sampled(profile: WeightProfile, domain: &DomainSpec, points: usize) -> Result<Self> {
        if let WeightProfile::Constant { value } = profile {
            return Self::constant(value);
        }
        if points == 0 {
            return Err(Error::Invalid("weight sampling needs at least one point".into()));
        }
        let dim = domain.dim();
        let (lo, hi) = domain.bounding_box();
        let per_axis = ((points as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        let (mut amin, mut amax) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut taken = 0usize;
        'outer: loop {
            for d in 0..dim {
                // cell midpoints keep samples strictly inside the box
                x[d] = lo[d] + (hi[d] - lo[d]) * (idx[d] as f64 + 0.5) / per_axis as f64;
            }
            if domain.contains(&x) {
                let v = profile.eval(&x);
                amin = amin.min(v);
                amax = amax.max(v);
                taken += 1;
            }
            for i in idx.iter_mut() {
                *i += 1;
                if *i < per_axis {
                    continue 'outer;
                }
                *i = 0;
            }
            break;
        }
        let w = WeightSpec { profile, alpha0: amin, alpha_inf: amax, bounds: WeightBounds::Sampled { points: taken } };
        w.validate()?;
        Ok(w)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.profile.eval(x)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.profile, WeightProfile::Constant { .. })
    }

    fn validate(&self) -> Result<()> {
        if self.alpha0 > 0.0 && self.alpha0 <= self.alpha_inf && self.alpha_inf.is_finite() {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!(
                "weight must satisfy 0 < α₀ ≤ ‖α‖_∞ < ∞ (α₀ = {}, ‖α‖_∞ = {})",
                self.alpha0, self.alpha_inf
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub dim: usize,
    pub s: f64,
    pub p: f64,
    pub domain: DomainSpec,
    pub alpha: WeightSpec,
    pub lambda: f64,
}

/// Checks s ∈ (0,1), p > 1 and the standing hypothesis p > N/s.
pub fn check_exponents(p: f64, dim: usize, s: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::Invalid("dimension N must be at least 1".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Hypothesis(format!("s ∈ (0,1) required, got s = {s}")));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Hypothesis(format!("p > 1 required, got p = {p}")));
    }
    if !(p * s > dim as f64) {
        return Err(Error::Hypothesis(format!("p > N/s required (p·s = {} ≤ N = {dim})", p * s)));
    }
    Ok(())
}

impl ProblemParams {
    pub fn new(dim: usize, s: f64, p: f64, domain: DomainSpec, alpha: WeightSpec, lambda: f64) -> Result<Self> {
        check_exponents(p, dim, s)?;
        domain.validate()?;
        if domain.dim() != dim {
            return Err(Error::Invalid(format!("domain has dimension {} but N = {dim}", domain.dim())));
        }
        alpha.validate()?;
        if !lambda.is_finite() {
            return Err(Error::Invalid("λ must be finite".into()));
        }
        Ok(ProblemParams { dim, s, p, domain, alpha, lambda })
    }

    /// One-dimensional problem on (a, b) with α ≡ 1.
    pub fn interval(a: f64, b: f64, s: f64, p: f64, lambda: f64) -> Result<Self> {
        Self::new(1, s, p, DomainSpec::interval(a, b), WeightSpec::unit(), lambda)
    }

    pub fn ps(&self) -> f64 {
        self.p * self.s
    }

    pub fn tau(&self) -> f64 {
        self.domain.inradius()
    }

    pub fn measure(&self) -> f64 {
        self.domain.measure()
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ProblemParams { lambda, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.dim, self.s, self.p, self.domain.clone(), self.alpha.clone(), self.lambda).map(|_| ())
    }
}
