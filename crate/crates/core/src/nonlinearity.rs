//! Oscillating reaction terms built from disjoint bumps.
//!
//! On each interval [a_k, b_k] the reaction is a circular-arc profile scaled
//! to carry mass m_k; it vanishes elsewhere. The primitive F is therefore a
//! staircase: constant between bumps, rising by m_k across bump k. Masses and
//! cumulative sums are also carried as logarithms so that the growth ratios
//! F(t)/t^p can be formed far beyond the double-precision range.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::constants::Extended;
use crate::error::{Error, Result};

/// A scalar reaction f with primitive F(t) = ∫₀^t f.
pub trait Reaction: Sync {
    fn f(&self, t: f64) -> f64;
    fn primitive(&self, t: f64) -> f64;
    /// f′(t); may be infinite at profile endpoints.
    fn derivative(&self, t: f64) -> f64;
    /// F(t1) − F(t0).
    fn primitive_diff(&self, t0: f64, t1: f64) -> f64 {
        self.primitive(t1) - self.primitive(t0)
    }
}

/// Where the bumps accumulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oscillation {
    Infinity,
    Origin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    /// 1-based index in the oscillating sequence.
    pub index: usize,
    pub center: f64,
    pub half_width: f64,
    pub mass: f64,
    pub ln_mass: f64,
    /// Radius of the circular arc; equal to `half_width` for the
    /// endpoint-vanishing semicircle, larger for a truncated cap.
    pub arc_radius: f64,
    pub ln_lo: f64,
    pub ln_hi: f64,
}

/// v √(1 − v²) + asin v, twice the area under the unit arc from 0 to v.
fn arc_area(v: f64) -> f64 {
    let v = v.clamp(-1.0, 1.0);
    v * (1.0 - v * v).max(0.0).sqrt() + v.asin()
}

/// ρ² − z² without cancellation near the ends of the arc.
#[inline]
fn arc_height_sq(z: f64, rho: f64) -> f64 {
    ((rho - z) * (rho + z)).max(0.0)
}

/// 2 ∫_0^z √(ρ² − w²) dw measured from the nearer end: returns
/// (z √(ρ²−z²), acos(|z|/ρ)) so differences near ±ρ keep full precision.
#[inline]
fn arc_parts(z: f64, rho: f64) -> (f64, f64) {
    let a = z.abs().min(rho);
    let tail = 2.0 * ((rho - a) / (2.0 * rho)).max(0.0).sqrt().asin();
    (z * arc_height_sq(z, rho).sqrt(), tail)
}

/// ∫_{z0}^{z1} √(ρ² − w²) dw.
fn arc_integral(z0: f64, z1: f64, rho: f64) -> f64 {
    let (z0, z1) = (z0.clamp(-rho, rho), z1.clamp(-rho, rho));
    if z0 >= 0.0 && z1 >= 0.0 || z0 <= 0.0 && z1 <= 0.0 {
        // same side: asin(|z|/ρ) = π/2 − tail, so the π/2 parts cancel exactly
        let sign = if z0 >= 0.0 && z1 >= 0.0 { 1.0 } else { -1.0 };
        let (p0, t0) = arc_parts(z0, rho);
        let (p1, t1) = arc_parts(z1, rho);
        0.5 * (p1 - p0) + sign * 0.5 * rho * rho * (t0 - t1)
    } else {
        let s = |z: f64| 0.5 * (z * arc_height_sq(z, rho).sqrt() + rho * rho * (z / rho).clamp(-1.0, 1.0).asin());
        s(z1) - s(z0)
    }
}

impl Bump {
    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    fn ratio(&self) -> f64 {
        self.half_width / self.arc_radius
    }

    /// ∫ over the whole bump of √(ρ² − z²).
    fn arc_total(&self) -> f64 {
        self.arc_radius * self.arc_radius * arc_area(self.ratio())
    }

    /// Fraction of the bump mass lying below t, for t inside the bump.
    fn mass_fraction(&self, t: f64) -> f64 {
        let z = t - self.center;
        (arc_integral(-self.half_width, z, self.arc_radius) / self.arc_total()).clamp(0.0, 1.0)
    }

    /// Mass between t0 and t1, both inside the bump.
    fn mass_between(&self, t0: f64, t1: f64) -> f64 {
        let (z0, z1) = (t0 - self.center, t1 - self.center);
        self.mass * arc_integral(z0, z1, self.arc_radius) / self.arc_total()
    }

    fn density(&self, t: f64) -> f64 {
        if self.arc_radius == self.half_width && (t <= self.lo() || t >= self.hi()) {
            return 0.0;
        }
        let z = t - self.center;
        self.mass * arc_height_sq(z, self.arc_radius).sqrt() / self.arc_total()
    }

    fn slope(&self, t: f64) -> f64 {
        let z = t - self.center;
        let q = arc_height_sq(z, self.arc_radius);
        if q <= 0.0 {
            // vertical tangent at the arc's ends
            if z > 0.0 {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else {
            -self.mass * z / (self.arc_total() * q.sqrt())
        }
    }

    /// Peak value of the profile.
    pub fn peak(&self) -> f64 {
        self.density(self.center)
    }
}

/// Closed-form limits known for a preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticLimits {
    pub a_l: f64,
    pub b_l: Extended,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpNonlinearity {
    /// Sorted by position.
    bumps: Vec<Bump>,
    /// Σ of masses strictly below bump i (ascending order).
    cum_before: Vec<f64>,
    /// ln Σ_{j ≤ i} m_j (ascending order).
    ln_cum_through: Vec<f64>,
    pub toward: Oscillation,
    pub log_domain: bool,
    pub analytic: Option<AnalyticLimits>,
    pub label: String,
}

/// Options for the oscillating-at-infinity preset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FactorialOptions {
    /// Use the arc of squared radius 1/(16 (k+1)!) instead of the
    /// endpoint-vanishing semicircle. The resulting f jumps at a_k and b_k.
    pub literal_profile: bool,
    /// Allow magnitudes beyond double precision; pointwise evaluation is then
    /// meaningless for unresolvable bumps but ratios remain exact.
    pub log_domain: bool,
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl BumpNonlinearity {
    fn assemble(
        mut bumps: Vec<Bump>,
        toward: Oscillation,
        log_domain: bool,
        analytic: Option<AnalyticLimits>,
        label: String,
    ) -> Self {
        bumps.sort_by(|x, y| x.center.total_cmp(&y.center));
        let mut cum_before = Vec::with_capacity(bumps.len());
        let mut ln_cum_through = Vec::with_capacity(bumps.len());
        let (mut acc, mut comp, mut ln_acc) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
        for b in &bumps {
            cum_before.push(acc + comp);
            let t = acc + b.mass;
            comp += if acc.abs() >= b.mass.abs() { (acc - t) + b.mass } else { (b.mass - t) + acc };
            acc = t;
            ln_acc = ln_add(ln_acc, b.ln_mass);
            ln_cum_through.push(ln_acc);
        }
        BumpNonlinearity { bumps, cum_before, ln_cum_through, toward, log_domain, analytic, label }
    }

    /// f ≡ 0.
    pub fn zero() -> Self {
        Self::assemble(Vec::new(), Oscillation::Infinity, false, None, "zero".into())
    }

    /// The oscillating-at-infinity preset: bumps centred at k!(k+2)/2 with
    /// half-width 1/(4(k+1)!) and mass (k+1)!^p − k!^p, so F(b_k) = (k+1)!^p − 1.
    pub fn factorial(p: f64, k_max: usize) -> Result<Self> {
        Self::factorial_with(p, k_max, FactorialOptions::default())
    }

    pub fn factorial_with(p: f64, k_max: usize, opts: FactorialOptions) -> Result<Self> {
        if k_max < 1 {
            return Err(Error::Invalid("k_max must be at least 1".into()));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Hypothesis(format!("p > 1 required, got {p}")));
        }
        let ln_top = p * ln_factorial(k_max as u64 + 1);
        if !opts.log_domain && ln_top >= f64::MAX.ln() {
            return Err(Error::Overflow(format!(
                "(k_max+1)!^p = exp({ln_top:.1}) exceeds the double range at k_max = {k_max}"
            )));
        }
        let mut bumps = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let kf = k as f64;
            let ln_kfact = ln_factorial(k as u64);
            let ln_k1fact = ln_factorial(k as u64 + 1);
            let (center, half_width) = if k < 22 {
                let kfact = ln_kfact.exp().round();
                (kfact * (kf + 2.0) / 2.0, 0.25 / (kfact * (kf + 1.0)))
            } else {
                ((ln_kfact + (kf + 2.0).ln() - LN_2).exp(), 0.25 * (-ln_k1fact).exp())
            };
            if !opts.log_domain && half_width < 8.0 * f64::EPSILON * center {
                return Err(Error::Overflow(format!(
                    "bump {k} (width {:.3e} at {center:.3e}) is narrower than double-precision spacing",
                    2.0 * half_width
                )));
            }
            // m_k = (k+1)!^p (1 − (k+1)^{−p})
            let ln_mass = p * ln_k1fact + (-(-p * (kf + 1.0).ln()).exp_m1()).ln();
            let mass = if k < 22 {
                // factorials are exact in f64 up to 22!
                let kfact = (ln_kfact.exp()).round();
                let k1fact = kfact * (kf + 1.0);
                k1fact.powf(p) - kfact.powf(p)
            } else {
                ln_mass.exp()
            };
            let arc_radius = if opts.literal_profile { 0.25 * (-0.5 * ln_k1fact).exp() } else { half_width };
            let ln_center = ln_kfact + (kf + 2.0).ln() - LN_2;
            let rel = half_width / center;
            bumps.push(Bump {
                index: k,
                center,
                half_width,
                mass,
                ln_mass,
                arc_radius,
                ln_lo: ln_center + (-rel).ln_1p(),
                ln_hi: ln_center + rel.ln_1p(),
            });
        }
        let label = format!("factorial(p={p}, k_max={k_max}{})", if opts.literal_profile { ", literal" } else { "" });
        Ok(Self::assemble(
            bumps,
            Oscillation::Infinity,
            opts.log_domain,
            Some(AnalyticLimits { a_l: 0.0, b_l: Extended::Finite(2f64.powf(p)) }),
            label,
        ))
    }

    /// General bump family with semicircle profiles. `intervals` are listed in
    /// sequence order: increasing for oscillation at infinity, decreasing
    /// toward 0 for oscillation at the origin.
    pub fn from_intervals(intervals: &[(f64, f64)], masses: &[f64], toward: Oscillation) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Invalid("bump family is empty".into()));
        }
        if intervals.len() != masses.len() {
            return Err(Error::Invalid(format!("{} intervals but {} masses", intervals.len(), masses.len())));
        }
        for (k, (&(a, b), &m)) in intervals.iter().zip(masses).enumerate() {
            if !(a > 0.0 && a < b && b.is_finite()) {
                return Err(Error::Invalid(format!("bump {} = ({a}, {b}) is not a positive interval", k + 1)));
            }
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Invalid(format!("bump {} has non-positive mass {m}", k + 1)));
            }
        }
        for (k, w) in intervals.windows(2).enumerate() {
            let ((a0, b0), (a1, b1)) = (w[0], w[1]);
            let ordered = match toward {
                Oscillation::Infinity => a1 > b0,
                Oscillation::Origin => b1 < a0,
            };
            if !ordered {
                return Err(Error::Invalid(format!(
                    "bumps {} = ({a0}, {b0}) and {} = ({a1}, {b1}) overlap or are out of order",
                    k + 1,
                    k + 2
                )));
            }
        }
        let bumps = intervals
            .iter()
            .zip(masses)
            .enumerate()
            .map(|(k, (&(a, b), &m))| Bump {
                index: k + 1,
                center: 0.5 * (a + b),
                half_width: 0.5 * (b - a),
                mass: m,
                ln_mass: m.ln(),
                arc_radius: 0.5 * (b - a),
                ln_lo: a.ln(),
                ln_hi: b.ln(),
            })
            .collect();
        Ok(Self::assemble(bumps, toward, false, None, "bumps".into()))
    }

    /// Bumps accumulating at 0⁺.
    pub fn build_origin_oscillator(intervals: &[(f64, f64)], masses: &[f64]) -> Result<Self> {
        Self::from_intervals(intervals, masses, Oscillation::Origin)
    }

    /// a_k = ratio^{−k}, b_k = (1 + width) a_k, m_k = scale · base^{−kp}.
    pub fn geometric_origin(
        p: f64,
        k_max: usize,
        ratio: f64,
        width: f64,
        mass_base: f64,
        mass_scale: f64,
    ) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Invalid("geometric family needs k_max ≥ 1".into()));
        }
        let intervals: Vec<(f64, f64)> = (1..=k_max)
            .map(|k| {
                let a = ratio.powi(-(k as i32));
                (a, a * (1.0 + width))
            })
            .collect();
        let masses: Vec<f64> = (1..=k_max).map(|k| mass_scale * mass_base.powf(-(k as f64) * p)).collect();
        let mut nl = Self::build_origin_oscillator(&intervals, &masses)?;
        // With base = ratio the tail sums make F(t)/t^p self-similar: its
        // extremes sit at a_k (just before bump k) and b_k.
        if mass_base == ratio {
            let tail = mass_scale / -(-p * ratio.ln()).exp_m1();
            nl.analytic = Some(AnalyticLimits {
                a_l: tail * ratio.powf(-p),
                b_l: Extended::Finite(tail / (1.0 + width).powf(p)),
            });
        }
        nl.label = format!(
            "geometric_origin(p={p}, k_max={k_max}, ratio={ratio}, width={width}, base={mass_base}, scale={mass_scale})"
        );
        Ok(nl)
    }

    /// Bumps in sequence order (toward L).
    pub fn bumps(&self) -> Vec<&Bump> {
        let mut v: Vec<&Bump> = self.bumps.iter().collect();
        v.sort_by_key(|b| b.index);
        v
    }

    pub fn len(&self) -> usize {
        self.bumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bumps.is_empty()
    }

    /// Bump with sequence index k.
    pub fn bump(&self, k: usize) -> Option<&Bump> {
        self.bumps.iter().find(|b| b.index == k)
    }

    /// Position in ascending order of the bump containing or preceding t.
    fn locate(&self, t: f64) -> Option<(usize, bool)> {
        let idx = self.bumps.partition_point(|b| b.lo() <= t);
        if idx == 0 {
            return None;
        }
        let i = idx - 1;
        Some((i, t < self.bumps[i].hi()))
    }

    pub fn evaluate_f(&self, t: f64) -> f64 {
        match self.locate(t) {
            Some((i, true)) => self.bumps[i].density(t),
            _ => 0.0,
        }
    }

    /// F(t) = ∫₀^t f; zero for t ≤ 0.
    pub fn evaluate_big_f(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.locate(t) {
            None => 0.0,
            Some((i, inside)) => {
                let b = &self.bumps[i];
                if inside {
                    self.cum_before[i] + b.mass * b.mass_fraction(t)
                } else {
                    self.cum_before[i] + b.mass
                }
            }
        }
    }

    /// ln F at the right end of the ascending-position bump i.
    fn ln_f_through(&self, i: usize) -> f64 {
        self.ln_cum_through[i]
    }

    /// Rows of the bump table in sequence order.
    pub fn table(&self, p: f64) -> Vec<BumpRow> {
        let ordered = self.bumps();
        ordered
            .iter()
            .enumerate()
            .map(|(pos, b)| {
                let i = self.ascending_position(b.index);
                let ln_fb = self.ln_f_through(i);
                let next = ordered.get(pos + 1).map(|nb| {
                    let j = self.ascending_position(nb.index);
                    if j == 0 {
                        0.0
                    } else {
                        (self.ln_f_through(j - 1) - p * nb.ln_lo).exp()
                    }
                });
                BumpRow {
                    k: b.index,
                    a: b.lo(),
                    b: b.hi(),
                    mass: b.mass,
                    f_at_b: self.cum_before[i] + b.mass,
                    ratio_at_b: (ln_fb - p * b.ln_hi).exp(),
                    ratio_at_next_a: next,
                }
            })
            .collect()
    }

    fn ascending_position(&self, index: usize) -> usize {
        self.bumps.iter().position(|b| b.index == index).expect("index exists")
    }
}

impl Reaction for BumpNonlinearity {
    fn f(&self, t: f64) -> f64 {
        self.evaluate_f(t)
    }

    fn primitive(&self, t: f64) -> f64 {
        self.evaluate_big_f(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        match self.locate(t) {
            Some((i, true)) => self.bumps[i].slope(t),
            _ => 0.0,
        }
    }

    fn primitive_diff(&self, t0: f64, t1: f64) -> f64 {
        if t0 == t1 {
            return 0.0;
        }
        let l0 = if t0 <= 0.0 { None } else { self.locate(t0) };
        let l1 = if t1 <= 0.0 { None } else { self.locate(t1) };
        match (l0, l1) {
            (None, None) => 0.0,
            (Some((i, false)), Some((j, false))) if i == j => 0.0,
            (Some((i, true)), Some((j, true))) if i == j => self.bumps[i].mass_between(t0, t1),
            _ => self.evaluate_big_f(t1) - self.evaluate_big_f(t0),
        }
    }
}

/// One row of the exported bump table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpRow {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub mass: f64,
    /// F(b_k)
    pub f_at_b: f64,
    /// F(b_k)/b_k^p
    pub ratio_at_b: f64,
    /// F(a_{k+1})/a_{k+1}^p, absent for the last bump.
    pub ratio_at_next_a: Option<f64>,
}

/// f⁺(t) = f(t) for t > 0 and 0 otherwise.
#[derive(Clone, Copy, Debug)]
pub struct PositivePart<F> {
    f: F,
}

pub fn positive_part<F: Fn(f64) -> f64>(f: F) -> PositivePart<F> {
    PositivePart { f }
}

impl<F: Fn(f64) -> f64> PositivePart<F> {
    pub fn eval(&self, t: f64) -> f64 {
        if t > 0.0 {
            (self.f)(t)
        } else {
            0.0
        }
    }

    /// Warns when f(0) ≠ 0, in which case f⁺ is discontinuous at 0.
    pub fn continuity_warning(&self) -> Option<String> {
        let f0 = (self.f)(0.0);
        (f0 != 0.0).then(|| format!("f(0) = {f0} ≠ 0: the positive part is discontinuous at 0"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// Right end of a bump, where F(t)/t^p peaks on the adjacent gap.
    Limsup,
    /// Left end of a bump (left limit), where F(t)/t^p bottoms out.
    Liminf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    /// Index of the bump whose endpoint is probed.
    pub k: usize,
    pub t: f64,
    pub kind: ProbeKind,
    /// F(t)/t^p
    pub ratio: f64,
    /// max_{|ζ|≤t} F(ζ)/t^p; equal to `ratio` since F is nondecreasing and
    /// vanishes on the negative axis.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationDiagnostics {
    pub a_l_estimate: f64,
    pub b_l_estimate: f64,
    pub probe_points: Vec<ProbePoint>,
    pub toward: Oscillation,
}

impl OscillationDiagnostics {
    /// Probe ratios of one kind, in sequence order toward L.
    pub fn trend(&self, kind: ProbeKind) -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> =
            self.probe_points.iter().filter(|q| q.kind == kind).map(|q| (q.k, q.ratio)).collect();
        v.sort_by_key(|x| x.0);
        v
    }
}

/// Finite proxies for A_L and B_L from the structural points of F.
pub fn oscillation_diagnostics(nl: &BumpNonlinearity, p: f64, toward: Oscillation) -> Result<OscillationDiagnostics> {
    if nl.is_empty() {
        return Ok(OscillationDiagnostics { a_l_estimate: 0.0, b_l_estimate: 0.0, probe_points: Vec::new(), toward });
    }
    if nl.toward != toward {
        return Err(Error::Invalid(format!("bumps accumulate toward {:?}, not {toward:?}", nl.toward)));
    }
    if nl.len() < 3 {
        return Err(Error::Invalid(format!("need at least 3 bumps to report a trend, got {}", nl.len())));
    }
    let mut probes = Vec::new();
    for (i, b) in nl.bumps.iter().enumerate() {
        let r = (nl.ln_f_through(i) - p * b.ln_hi).exp();
        probes.push(ProbePoint { k: b.index, t: b.hi(), kind: ProbeKind::Limsup, ratio: r, max_ratio: r });
        if i > 0 {
            let r = (nl.ln_f_through(i - 1) - p * b.ln_lo).exp();
            probes.push(ProbePoint { k: b.index, t: b.lo(), kind: ProbeKind::Liminf, ratio: r, max_ratio: r });
        }
    }
    let pick = |kind: ProbeKind| probes.iter().filter(move |q| q.kind == kind).map(|q| q.ratio);
    let a = pick(ProbeKind::Liminf).fold(f64::INFINITY, f64::min);
    let b = pick(ProbeKind::Limsup).fold(f64::NEG_INFINITY, f64::max);
    Ok(OscillationDiagnostics { a_l_estimate: a, b_l_estimate: b, probe_points: probes, toward })
}

/// ∫_a^b f by adaptive Simpson; used to cross-check bump masses.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}
