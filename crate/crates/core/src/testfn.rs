//! The cone θ centred at x₀ with radius τ, and Monte-Carlo evaluation of its
//! Gagliardo seminorm split over inner ball I = B_{τ/2}, annulus A and
//! exterior E = ℝᴺ∖B_τ.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constants::{kappa_terms, unit_ball_volume};
use crate::discretization::{DiscreteField, Grid};
use crate::error::{Error, Result};
use crate::nonlinearity::BumpNonlinearity;
use crate::problem::ProblemParams;

pub const DEFAULT_BUDGET: u64 = 1_000_000;
const CHUNK: u64 = 1 << 14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeFunction {
    pub center: Vec<f64>,
    pub tau: f64,
}

impl ConeFunction {
    pub fn new(center: Vec<f64>, tau: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::Invalid("cone centre needs at least one coordinate".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Invalid(format!("cone radius must be positive, got {tau}")));
        }
        Ok(ConeFunction { center, tau })
    }

    /// The largest cone inside the domain.
    pub fn for_params(params: &ProblemParams) -> Result<Self> {
        Self::new(params.domain.chebyshev_center(), params.tau())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn radial(&self, r: f64) -> f64 {
        if r <= 0.5 * self.tau {
            1.0
        } else if r < self.tau {
            2.0 * (self.tau - r) / self.tau
        } else {
            0.0
        }
    }

    /// ζθ restricted to the grid nodes.
    pub fn sample_on_grid(&self, grid: &Grid, zeta: f64) -> DiscreteField {
        let c = self.center[0];
        DiscreteField::from_fn(grid, |x| zeta * self.radial((x - c).abs()))
    }
}

pub fn evaluate_theta(cone: &ConeFunction, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().zip(&cone.center).map(|(a, b)| (a - b) * (a - b)).sum();
    cone.radial(r2.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    /// A × A
    J1,
    /// 2 × (A × E)
    J2,
    /// 2 × (I × A)
    J3,
    /// 2 × (I × E)
    J4,
    /// The whole double integral sampled directly.
    Direct,
}

impl Piece {
    pub const TERMS: [Piece; 4] = [Piece::J1, Piece::J2, Piece::J3, Piece::J4];

    pub fn name(self) -> &'static str {
        match self {
            Piece::J1 => "J1",
            Piece::J2 => "J2",
            Piece::J3 => "J3",
            Piece::J4 => "J4",
            Piece::Direct => "direct",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Piece::J1 => 1,
            Piece::J2 => 2,
            Piece::J3 => 3,
            Piece::J4 => 4,
            Piece::Direct => 5,
        }
    }

    /// Shell of |x − x₀| the first point is drawn from, in units of τ.
    fn x_shell(self) -> (f64, f64) {
        match self {
            Piece::J1 | Piece::J2 => (0.5, 1.0),
            Piece::J3 | Piece::J4 => (0.0, 0.5),
            Piece::Direct => (0.0, 1.0),
        }
    }

    /// Multiplicity of a sample whose second point is at radius ry/τ.
    fn weight(self, ry: f64) -> f64 {
        let in_a = (0.5..1.0).contains(&ry);
        let in_e = ry >= 1.0;
        match self {
            Piece::J1 => f64::from(u8::from(in_a)),
            Piece::J2 | Piece::J4 => 2.0 * f64::from(u8::from(in_e)),
            Piece::J3 => 2.0 * f64::from(u8::from(in_a)),
            Piece::Direct => {
                if in_e {
                    2.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Which point of the pair is drawn from the bounded region. The integrand is
/// symmetric, so the two orders differ only in their random streams.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingOrder {
    #[default]
    XFirst,
    YFirst,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormOptions {
    /// Samples per piece.
    pub budget: u64,
    pub seed: u64,
    /// Target relative standard error of the total.
    pub rel_tol: f64,
    pub order: SamplingOrder,
}

impl Default for SeminormOptions {
    fn default() -> Self {
        SeminormOptions { budget: DEFAULT_BUDGET, seed: 0, rel_tol: 1e-2, order: SamplingOrder::XFirst }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceEstimate {
    pub piece: Piece,
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// End-expressions of the four chains: J₁ and J₃ are upper bounds, J₂ and J₄
/// are stated as equalities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JTerms {
    pub j1_bound: f64,
    pub j2_closed: f64,
    pub j3_bound: f64,
    pub j4_closed: f64,
}

impl JTerms {
    pub fn sum(&self) -> f64 {
        self.j1_bound + self.j2_closed + self.j3_bound + self.j4_closed
    }

    pub fn get(&self, piece: Piece) -> Option<f64> {
        match piece {
            Piece::J1 => Some(self.j1_bound),
            Piece::J2 => Some(self.j2_closed),
            Piece::J3 => Some(self.j3_bound),
            Piece::J4 => Some(self.j4_closed),
            Piece::Direct => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormBreakdown {
    pub pieces: Vec<PieceEstimate>,
    pub total: f64,
    pub total_std_error: f64,
    /// κ ω_N² τ^{N−ps}
    pub bound: f64,
    pub within_bound: bool,
    pub low_confidence: bool,
    /// Independent estimate of the whole integral for the partition check.
    pub direct: PieceEstimate,
    pub closed_form: JTerms,
}

impl SeminormBreakdown {
    pub fn piece(&self, piece: Piece) -> &PieceEstimate {
        self.pieces.iter().find(|e| e.piece == piece).expect("all four pieces present")
    }

    /// |Σ J_i − direct| in combined standard errors.
    pub fn partition_z(&self) -> f64 {
        let se = (self.total_std_error.powi(2) + self.direct.std_error.powi(2)).sqrt();
        (self.total - self.direct.estimate).abs() / se
    }
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize, out: &mut [f64]) {
    if dim == 1 {
        out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut n2 = 0.0;
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
            n2 += *v * *v;
        }
        if n2 > 1e-24 {
            let inv = n2.sqrt().recip();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// Radial proposal: ∝ ρ^{p−ps−1} on (0, ρ₀] with weight w, and the tail
/// ∝ ρ^{−1−ps} beyond.
struct Radial {
    rho0: f64,
    near: f64,
    w: f64,
    ps: f64,
}

impl Radial {
    fn new(tau: f64, p: f64, ps: f64) -> Self {
        Radial { rho0: 2.0 * tau, near: p - ps, w: 0.8, ps }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        if rng.random::<f64>() < self.w {
            self.rho0 * u.powf(1.0 / self.near)
        } else {
            self.rho0 * u.powf(-1.0 / self.ps)
        }
    }

    /// ρ^{−1−ps}/q(ρ)
    fn ratio(&self, rho: f64) -> f64 {
        let t = rho / self.rho0;
        if rho <= self.rho0 {
            t.powf(-self.ps - self.near) * self.rho0.powf(-self.ps) / (self.w * self.near)
        } else {
            self.rho0.powf(-self.ps) / ((1.0 - self.w) * self.ps)
        }
    }
}

struct Moments {
    sum: f64,
    comp: f64,
    sumsq: f64,
    n: u64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        let t = self.sum + v;
        self.comp += if self.sum.abs() >= v.abs() { (self.sum - t) + v } else { (v - t) + self.sum };
        self.sum = t;
        self.sumsq += v * v;
        self.n += 1;
    }

    fn merge(mut self, o: Moments) -> Moments {
        self.push_total(o.sum + o.comp);
        self.sumsq += o.sumsq;
        self.n += o.n;
        self
    }

    fn push_total(&mut self, v: f64) {
        let t = self.sum + v;
        self.comp += if self.sum.abs() >= v.abs() { (self.sum - t) + v } else { (v - t) + self.sum };
        self.sum = t;
    }

    fn empty() -> Moments {
        Moments { sum: 0.0, comp: 0.0, sumsq: 0.0, n: 0 }
    }
}

fn run_chunk(cone: &ConeFunction, params: &ProblemParams, piece: Piece, seed: u64, chunk: u64, count: u64) -> Moments {
    let dim = cone.dim();
    let tau = cone.tau;
    let p = params.p;
    let radial = Radial::new(tau, p, params.ps());
    let (lo, hi) = piece.x_shell();
    let (lo_n, hi_n) = ((lo * tau).powi(dim as i32), (hi * tau).powi(dim as i32));
    let vol = unit_ball_volume(dim) * (hi_n - lo_n);
    let surface = dim as f64 * unit_ball_volume(dim);
    let scale = vol * surface;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((piece.tag() << 40) | chunk);
    let mut dir = vec![0.0; dim];
    let mut off = vec![0.0; dim];
    let mut m = Moments::empty();
    for _ in 0..count {
        let r = (lo_n + rng.random::<f64>() * (hi_n - lo_n)).powf(1.0 / dim as f64);
        unit_direction(&mut rng, dim, &mut dir);
        let rho = radial.draw(&mut rng);
        unit_direction(&mut rng, dim, &mut off);
        // offsets of the bounded point and its partner from x₀
        let mut r2 = 0.0;
        for k in 0..dim {
            let z = r * dir[k] + rho * off[k];
            r2 += z * z;
        }
        let r_partner = r2.sqrt();
        let w = piece.weight(r_partner / tau);
        if w == 0.0 {
            m.push(0.0);
            continue;
        }
        let diff = (cone.radial(r) - cone.radial(r_partner)).abs();
        m.push(scale * w * diff.powf(p) * radial.ratio(rho));
    }
    m
}

fn estimate_piece(cone: &ConeFunction, params: &ProblemParams, piece: Piece, opts: &SeminormOptions) -> PieceEstimate {
    let n_chunks = opts.budget.div_ceil(CHUNK);
    let seed = match opts.order {
        SamplingOrder::XFirst => opts.seed,
        SamplingOrder::YFirst => opts.seed ^ 0x9E37_79B9_7F4A_7C15,
    };
    let job = |c: u64| {
        let count = CHUNK.min(opts.budget - c * CHUNK);
        run_chunk(cone, params, piece, seed, c, count)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Moments> = {
        use rayon::prelude::*;
        (0..n_chunks).into_par_iter().map(job).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Moments> = (0..n_chunks).map(job).collect();
    let m = parts.into_iter().fold(Moments::empty(), Moments::merge);
    let n = m.n.max(1) as f64;
    let mean = (m.sum + m.comp) / n;
    let var = (m.sumsq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    PieceEstimate { piece, estimate: mean, std_error: (var / n).sqrt(), samples: m.n }
}

/// Closed-form end-expressions of the four chains.
pub fn j_terms_closed_form(cone: &ConeFunction, params: &ProblemParams) -> Result<JTerms> {
    let [t1, t2, t3] = kappa_terms(params.p, cone.dim(), params.s)?;
    let w = unit_ball_volume(cone.dim());
    let scale = w * w * cone.tau.powf(cone.dim() as f64 - params.ps());
    Ok(JTerms { j1_bound: t1 * scale, j2_closed: 0.5 * t2 * scale, j3_bound: 0.5 * t2 * scale, j4_closed: t3 * scale })
}

/// Exact value of 2∬_{I×E} |x−y|^{−1−ps} in one dimension.
pub fn j4_exact_1d(tau: f64, ps: f64) -> f64 {
    let e = 1.0 - ps;
    4.0 / (ps * e) * ((1.5 * tau).powf(e) - (0.5 * tau).powf(e))
}

pub fn seminorm_estimate(
    cone: &ConeFunction,
    params: &ProblemParams,
    opts: &SeminormOptions,
) -> Result<SeminormBreakdown> {
    if cone.dim() != params.dim {
        return Err(Error::Invalid(format!("cone lives in dimension {} but N = {}", cone.dim(), params.dim)));
    }
    if opts.budget < 2 {
        return Err(Error::Invalid("Monte-Carlo budget must be at least 2 samples".into()));
    }
    let closed = j_terms_closed_form(cone, params)?;
    let pieces: Vec<PieceEstimate> = Piece::TERMS.iter().map(|&pc| estimate_piece(cone, params, pc, opts)).collect();
    let direct = estimate_piece(cone, params, Piece::Direct, opts);
    let total: f64 = pieces.iter().map(|e| e.estimate).sum();
    let total_std_error = pieces.iter().map(|e| e.std_error.powi(2)).sum::<f64>().sqrt();
    let bound = closed.sum();
    Ok(SeminormBreakdown {
        within_bound: total <= bound + 3.0 * total_std_error,
        low_confidence: total_std_error > opts.rel_tol * total.abs(),
        pieces,
        total,
        total_std_error,
        bound,
        direct,
        closed_form: closed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeBound {
    pub zeta: f64,
    pub bound: f64,
}

/// κ ω_N² τ^{N−ps} ζ^p/p − λ α₀ (τ/2)^N ω_N F(ζ) for each ζ.
pub fn unboundedness_probe(
    cone: &ConeFunction,
    nl: &BumpNonlinearity,
    params: &ProblemParams,
    zetas: &[f64],
) -> Result<Vec<ProbeBound>> {
    if let Some(z) = zetas.iter().find(|z| !(**z > 0.0)) {
        return Err(Error::Invalid(format!("probe amplitudes must be positive, got {z}")));
    }
    let n = cone.dim() as f64;
    let w = unit_ball_volume(cone.dim());
    let kappa: f64 = kappa_terms(params.p, cone.dim(), params.s)?.iter().sum();
    let lead = kappa * w * w * cone.tau.powf(n - params.ps()) / params.p;
    let react = params.lambda * params.alpha.alpha0 * (0.5 * cone.tau).powf(n) * w;
    Ok(zetas
        .iter()
        .map(|&z| ProbeBound { zeta: z, bound: lead * z.powf(params.p) - react * nl.evaluate_big_f(z) })
        .collect())
}

/// First position from which every bound is negative and strictly decreasing.
pub fn first_persistent_negative(bounds: &[ProbeBound]) -> Option<usize> {
    let mut start = None;
    for (i, b) in bounds.iter().enumerate() {
        let ok = b.bound < 0.0 && (i == 0 || start.is_none() || b.bound < bounds[i - 1].bound);
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, _) => start = None,
            _ => {}
        }
    }
    start
}
