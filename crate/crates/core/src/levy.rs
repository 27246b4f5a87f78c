//! Brownian motion, subordinators and subordinated Brownian motion sampled on
//! grids from exact increment laws, plus closed-form transforms used as
//! reference values.
//!
//! A subordinator with Laplace exponent `Φ` and deterministic clock `ℓ` has
//! `E e^{-u (A(t) - A(s))} = exp(-(ℓ(t) - ℓ(s)) Φ(u))`. Without a clock,
//! `ℓ(t) = t`. The positive stable law is normalized so that
//! `E e^{-u S} = e^{-u^α}`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::convtest::ks_two_sample;
use crate::error::{domain, Result};
use crate::path::{floor_index, CadlagPath, TimeGrid};
use crate::rng::{replicate, RngStream};
use crate::stats::{integrate, Complex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SubordinatorKind {
    /// Increments over clock time `h` are `Gamma(shape_rate · h, scale)`.
    Gamma { shape_rate: f64, scale: f64 },
    /// Increments over clock time `h` are inverse Gaussian with mean `mu · h`
    /// and shape `lambda · h²`.
    InverseGaussian { mu: f64, lambda: f64 },
    /// Laplace exponent `scale · u^alpha`, `0 < alpha < 1`.
    Stable { alpha: f64, scale: f64 },
    /// Poisson(`rate`) arrivals of exponential jumps with mean `jump_mean`.
    CompoundPoisson { rate: f64, jump_mean: f64 },
    Drift { slope: f64 },
    /// Independent sum of the components.
    Sum { components: Vec<SubordinatorKind> },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        domain(format!("{name} must be positive and finite, got {v}"))
    }
}

impl SubordinatorKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            SubordinatorKind::Gamma { shape_rate, scale } => {
                positive("shape_rate", *shape_rate)?;
                positive("scale", *scale)
            }
            SubordinatorKind::InverseGaussian { mu, lambda } => {
                positive("mu", *mu)?;
                positive("lambda", *lambda)
            }
            SubordinatorKind::Stable { alpha, scale } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return domain(format!("stable index must lie in (0, 1), got {alpha}"));
                }
                positive("scale", *scale)
            }
            SubordinatorKind::CompoundPoisson { rate, jump_mean } => {
                positive("rate", *rate)?;
                positive("jump_mean", *jump_mean)
            }
            SubordinatorKind::Drift { slope } => {
                if slope.is_finite() && *slope >= 0.0 {
                    Ok(())
                } else {
                    domain(format!("drift slope must be finite and non-negative, got {slope}"))
                }
            }
            SubordinatorKind::Sum { components } => {
                if components.is_empty() {
                    return domain("a sum needs at least one component");
                }
                components.iter().try_for_each(SubordinatorKind::validate)
            }
        }
    }

    /// `Φ(u)` with `E e^{-u A(1)} = e^{-Φ(u)}` on the unit clock.
    pub fn laplace_exponent(&self, u: f64) -> f64 {
        match self {
            SubordinatorKind::Gamma { shape_rate, scale } => shape_rate * (scale * u).ln_1p(),
            SubordinatorKind::InverseGaussian { mu, lambda } => {
                lambda / mu * ((1.0 + 2.0 * mu * mu * u / lambda).sqrt() - 1.0)
            }
            SubordinatorKind::Stable { alpha, scale } => scale * u.powf(*alpha),
            SubordinatorKind::CompoundPoisson { rate, jump_mean } => rate * jump_mean * u / (1.0 + jump_mean * u),
            SubordinatorKind::Drift { slope } => slope * u,
            SubordinatorKind::Sum { components } => components.iter().map(|c| c.laplace_exponent(u)).sum(),
        }
    }

    /// `E A(1)` on the unit clock; infinite for stable components.
    pub fn mean_rate(&self) -> f64 {
        match self {
            SubordinatorKind::Gamma { shape_rate, scale } => shape_rate * scale,
            SubordinatorKind::InverseGaussian { mu, .. } => *mu,
            SubordinatorKind::Stable { .. } => f64::INFINITY,
            SubordinatorKind::CompoundPoisson { rate, jump_mean } => rate * jump_mean,
            SubordinatorKind::Drift { slope } => *slope,
            SubordinatorKind::Sum { components } => components.iter().map(|c| c.mean_rate()).sum(),
        }
    }

    /// Total drift slope (deterministic linear part).
    pub fn drift(&self) -> f64 {
        match self {
            SubordinatorKind::Drift { slope } => *slope,
            SubordinatorKind::Sum { components } => components.iter().map(|c| c.drift()).sum(),
            _ => 0.0,
        }
    }

    /// Random (pure-jump) part of an increment over clock time `h`.
    pub fn jump_increment<R: Rng + ?Sized>(&self, h: f64, rng: &mut R) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        match self {
            SubordinatorKind::Gamma { shape_rate, scale } => Gamma::new(shape_rate * h, *scale)
                .expect("validated gamma parameters")
                .sample(rng),
            SubordinatorKind::InverseGaussian { mu, lambda } => InverseGaussian::new(mu * h, lambda * h * h)
                .expect("validated inverse Gaussian parameters")
                .sample(rng),
            SubordinatorKind::Stable { alpha, scale } => (scale * h).powf(1.0 / alpha) * positive_stable(*alpha, rng),
            SubordinatorKind::CompoundPoisson { rate, jump_mean } => {
                let count: f64 = Poisson::new(rate * h).expect("validated Poisson rate").sample(rng);
                if count > 0.0 {
                    Gamma::new(count, *jump_mean).expect("positive count").sample(rng)
                } else {
                    0.0
                }
            }
            SubordinatorKind::Drift { .. } => 0.0,
            SubordinatorKind::Sum { components } => components.iter().map(|c| c.jump_increment(h, rng)).sum(),
        }
    }

    /// Full increment over clock time `h`.
    pub fn increment<R: Rng + ?Sized>(&self, h: f64, rng: &mut R) -> f64 {
        self.jump_increment(h, rng) + self.drift() * h.max(0.0)
    }
}

/// Kanter's representation of the positive stable law with
/// `E e^{-u S} = e^{-u^α}`.
pub fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = PI * (1.0 - rng.random::<f64>());
    let w = loop {
        let w = -(1.0 - rng.random::<f64>()).ln();
        if w > 0.0 {
            break w;
        }
    };
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = ((1.0 - alpha) * u).sin() / w;
    a * b.powf((1.0 - alpha) / alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSpec {
    pub kind: SubordinatorKind,
    /// Deterministic non-decreasing clock `ℓ`; the identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_change: Option<CadlagPath>,
}

impl From<SubordinatorKind> for SubordinatorSpec {
    fn from(kind: SubordinatorKind) -> Self {
        SubordinatorSpec { kind, time_change: None }
    }
}

impl SubordinatorSpec {
    pub fn gamma(shape_rate: f64, scale: f64) -> Self {
        SubordinatorKind::Gamma { shape_rate, scale }.into()
    }

    pub fn stable(alpha: f64, scale: f64) -> Self {
        SubordinatorKind::Stable { alpha, scale }.into()
    }

    pub fn drift(slope: f64) -> Self {
        SubordinatorKind::Drift { slope }.into()
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if let Some(ell) = &self.time_change {
            if !ell.is_nondecreasing() {
                return domain("the deterministic clock must be non-decreasing");
            }
            if ell.eval_unchecked(0.0) < 0.0 {
                return domain("the deterministic clock must start non-negative");
            }
        }
        Ok(())
    }

    /// `ℓ(t)`.
    pub fn clock(&self, t: f64) -> Result<f64> {
        match &self.time_change {
            None => {
                if t < 0.0 {
                    return domain(format!("negative time {t}"));
                }
                Ok(t)
            }
            Some(ell) => ell.eval(t),
        }
    }

    /// `E A(t)`.
    pub fn mean(&self, t: f64) -> Result<f64> {
        Ok(self.kind.mean_rate() * (self.clock(t)? - self.clock(0.0)?))
    }

    /// `E e^{-u (A(t) - A(s))}`.
    pub fn laplace_transform(&self, s: f64, t: f64, u: f64) -> Result<f64> {
        Ok((-(self.clock(t)? - self.clock(s)?) * self.kind.laplace_exponent(u)).exp())
    }

    /// `E e^{iλ W(A(t))}` for a Brownian motion independent of `A`.
    pub fn subordinated_cf(&self, t: f64, lambda: f64) -> Result<Complex> {
        Ok(Complex::real(self.laplace_transform(0.0, t, 0.5 * lambda * lambda)?))
    }

    fn grid_clock(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        (0..=grid.cells()).map(|k| self.clock(grid.point(k))).collect()
    }
}

/// Grid increments `A(k/n) - A((k-1)/n)`, `k = 1..=⌊nT⌋`.
fn grid_increments<R: Rng + ?Sized>(spec: &SubordinatorSpec, grid: &TimeGrid, rng: &mut R, with_drift: bool) -> Result<Vec<f64>> {
    spec.validate()?;
    let clock = spec.grid_clock(grid)?;
    Ok(clock
        .windows(2)
        .map(|w| {
            let h = w[1] - w[0];
            if with_drift {
                spec.kind.increment(h, rng)
            } else {
                spec.kind.jump_increment(h, rng)
            }
        })
        .collect())
}

/// Non-decreasing path with independent exact grid increments. The random
/// part jumps at grid points; a drift enters as `slope · (ℓ(t) - ℓ(0))`.
pub fn sample_subordinator(spec: &SubordinatorSpec, grid: &TimeGrid, stream: RngStream) -> Result<CadlagPath> {
    let mut rng = stream.rng();
    let incs = grid_increments(spec, grid, &mut rng, false)?;
    let jumps = CadlagPath::from_grid_increments(grid, &incs)?;
    let slope = spec.kind.drift();
    if slope == 0.0 {
        return Ok(jumps);
    }
    let clock = match &spec.time_change {
        None => CadlagPath::identity(grid.horizon)?,
        Some(ell) => {
            let ell = ell.truncate(grid.horizon)?;
            let start = CadlagPath::constant(grid.horizon, ell.eval_unchecked(0.0))?;
            ell.sub(&start)?
        }
    };
    jumps.add(&clock.scale(slope))
}

/// Piecewise-linear Brownian path through exact Gaussian values at `k/n`
/// (and at the horizon when it is off the grid).
pub fn sample_brownian(grid: &TimeGrid, stream: RngStream) -> Result<CadlagPath> {
    let mut rng = stream.rng();
    let cells = grid.cells();
    let mut times = Vec::with_capacity(cells + 2);
    let mut values = Vec::with_capacity(cells + 2);
    times.push(0.0);
    values.push(0.0);
    let sd = (1.0 / grid.n as f64).sqrt();
    let mut w = 0.0;
    for k in 1..=cells {
        let z: f64 = rng.sample(StandardNormal);
        w += sd * z;
        times.push(grid.point(k));
        values.push(w);
    }
    let last = *times.last().unwrap();
    if grid.horizon > last {
        let z: f64 = rng.sample(StandardNormal);
        w += (grid.horizon - last).sqrt() * z;
        times.push(grid.horizon);
        values.push(w);
    }
    if times.len() == 1 {
        return CadlagPath::constant(grid.horizon, 0.0);
    }
    CadlagPath::polyline(&times, &values)
}

/// Samples a subordinator `A` and `M` with conditionally independent
/// `N(0, ΔA)` increments, the grid law of `W ∘ A`. Both are staircases.
pub fn subordinate(spec: &SubordinatorSpec, grid: &TimeGrid, stream: RngStream) -> Result<(CadlagPath, CadlagPath)> {
    let mut rng = stream.rng();
    let clock = {
        spec.validate()?;
        spec.grid_clock(grid)?
    };
    let mut da = Vec::with_capacity(clock.len());
    let mut dm = Vec::with_capacity(clock.len());
    for w in clock.windows(2) {
        let inc = spec.kind.increment(w[1] - w[0], &mut rng);
        let z: f64 = rng.sample(StandardNormal);
        da.push(inc);
        dm.push(inc.sqrt() * z);
    }
    Ok((
        CadlagPath::from_grid_increments(grid, &da)?,
        CadlagPath::from_grid_increments(grid, &dm)?,
    ))
}

/// `(A(t_i), W(A(t_i)))` at non-decreasing times, from exact increments.
pub fn subordinate_at<R: Rng + ?Sized>(spec: &SubordinatorSpec, times: &[f64], rng: &mut R) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(times.len());
    let (mut a, mut m) = (0.0, 0.0);
    let mut prev = spec.clock(0.0)?;
    for &t in times {
        let c = spec.clock(t)?;
        if c < prev {
            return domain("times must be non-decreasing");
        }
        let inc = spec.kind.increment(c - prev, rng);
        let z: f64 = rng.sample(StandardNormal);
        a += inc;
        m += inc.sqrt() * z;
        out.push((a, m));
        prev = c;
    }
    Ok(out)
}

/// Deterministic weight `u ↦ Q(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightFunction {
    Constant { c: f64 },
    /// `offset + amplitude · cos(2π · frequency · u)`.
    Cosine { offset: f64, amplitude: f64, frequency: f64 },
    /// A path, held constant beyond its horizon.
    Path { path: CadlagPath },
}

impl WeightFunction {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            WeightFunction::Constant { c } => *c,
            WeightFunction::Cosine {
                offset,
                amplitude,
                frequency,
            } => offset + amplitude * (2.0 * PI * frequency * u).cos(),
            WeightFunction::Path { path } => path.eval_unchecked(u.clamp(0.0, path.horizon())),
        }
    }

    /// `(inf |Q|, sup |Q|)` over the whole real line.
    pub fn abs_bounds(&self) -> (f64, f64) {
        match self {
            WeightFunction::Constant { c } => (c.abs(), c.abs()),
            WeightFunction::Cosine { offset, amplitude, .. } => {
                let (o, a) = (offset.abs(), amplitude.abs());
                ((o - a).max(0.0), o + a)
            }
            WeightFunction::Path { path } => {
                let (lo, hi) = path.range();
                let inf = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
                (inf, lo.abs().max(hi.abs()))
            }
        }
    }

    /// Points in `(a, b)` where the weight may be non-smooth.
    fn kinks(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            WeightFunction::Path { path } => path
                .breakpoints()
                .iter()
                .chain(std::iter::once(&path.horizon()))
                .copied()
                .filter(|&t| t > a && t < b)
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (inf, sup) = self.abs_bounds();
        if !(inf > 0.0) || !sup.is_finite() {
            return domain(format!("weight must be bounded away from zero and infinity, got |Q| in [{inf}, {sup}]"));
        }
        Ok(())
    }
}

/// Models with closed-form characteristic functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CfModel {
    /// `(1 + λ²/2)^{-t}`.
    Linnik { t: f64 },
    /// `W ∘ A` with `A` a Gamma subordinator.
    GammaSubordinatedBm { t: f64, shape_rate: f64, scale: f64 },
    /// `∫ Q dW ∘ A` with `A` a Gamma subordinator and deterministic `Q`.
    WeightedGammaSubordinatedBm {
        t: f64,
        shape_rate: f64,
        scale: f64,
        weight: WeightFunction,
    },
}

/// Absolute tolerance of the quadrature in the weighted model.
pub const QUADRATURE_TOL: f64 = 1e-10;

pub fn cf_oracle(model: &CfModel, lambda: f64) -> Complex {
    let l2 = lambda * lambda;
    match model {
        CfModel::Linnik { t } => Complex::real((1.0 + 0.5 * l2).powf(-t)),
        CfModel::GammaSubordinatedBm { t, shape_rate, scale } => Complex::real((1.0 + 0.5 * scale * l2).powf(-shape_rate * t)),
        CfModel::WeightedGammaSubordinatedBm {
            t,
            shape_rate,
            scale,
            weight,
        } => {
            let f = |u: f64| {
                let q = weight.eval(u);
                (0.5 * scale * l2 * q * q).ln_1p()
            };
            let mut cuts = vec![0.0];
            cuts.extend(weight.kinks(0.0, *t));
            cuts.push(*t);
            let pieces = (cuts.len() - 1) as f64;
            let integral: f64 = cuts
                .windows(2)
                .map(|w| integrate(&f, w[0], w[1], QUADRATURE_TOL / pieces))
                .sum();
            Complex::real((-shape_rate * integral).exp())
        }
    }
}

/// Number of grid cells per unit time used to build `W ∘ A` path-wise.
const RESCALING_CELLS_PER_UNIT: f64 = 64.0;

/// Two-sample KS distance between `W∘A(t) - W∘A(s)`, built from a fine grid
/// of conditionally Gaussian increments, and
/// `(W_t - W_s) · sqrt((A_t - A_s)/(t - s))` with independent `W` and `A`.
pub fn rescaling_check(spec: &SubordinatorSpec, s: f64, t: f64, samples: usize, stream: RngStream) -> Result<f64> {
    spec.validate()?;
    if !(0.0 <= s && s < t) {
        return domain(format!("need 0 <= s < t, got s={s}, t={t}"));
    }
    if samples == 0 {
        return domain("samples must be at least 1");
    }
    let cells = floor_index(RESCALING_CELLS_PER_UNIT as u64, t).max(1);
    let mut times: Vec<f64> = (1..=cells).map(|k| k as f64 / RESCALING_CELLS_PER_UNIT).filter(|&u| u < t).collect();
    times.push(s);
    times.push(t);
    times.retain(|&u| u > 0.0);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let s_idx = times.iter().position(|&u| u == s);
    let t_idx = times.len() - 1;

    let left = replicate(stream.substream(0), samples, |_, rng| {
        let path = subordinate_at(spec, &times, rng).expect("validated spec and times");
        let at_s = s_idx.map_or(0.0, |i| path[i].1);
        path[t_idx].1 - at_s
    });
    let h = spec.clock(t)? - spec.clock(s)?;
    let right = replicate(stream.substream(1), samples, |_, rng| {
        let z: f64 = rng.sample(StandardNormal);
        let dw = (t - s).sqrt() * z;
        let da = spec.kind.increment(h, rng);
        dw * (da / (t - s)).sqrt()
    });
    ks_two_sample(&left, &right)
}
