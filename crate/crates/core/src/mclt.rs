//! Martingale arrays on the grid `k/n`, their compensators and quadratic
//! variations in closed form, and numerical checks of the conditions under
//! which they converge to time-changed Brownian motion.
//!
//! Every array is sampled cell by cell from a single generator, so a longer
//! horizon reproduces the shorter one as a prefix.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::levy::{SubordinatorSpec, WeightFunction};
use crate::path::{floor_index, CadlagPath, TimeGrid};
use crate::rng::{try_replicate, RngStream};
use crate::stats::Estimate;
use crate::timechange::inverse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ArrayKind {
    /// `ΔM = ξ^{1/2} Z` with `ξ ~ Gamma(1/n, 1)` and `Z ~ N(0, 1)`.
    Linnik { n: u64 },
    /// `ΔM_k = Y_k Z_{k-1} / √n` with random signs `Y` and
    /// `Z_k = Σ_{j ≤ k} Y_j / j`, `Z_0 = 1`. The limiting clock `t Z_∞²` is random.
    Polya { n: u64 },
    /// Independent `ξ_k = ±k^{α/2}` with probability `1/(2k^β)` each, scaled by
    /// `a_n² = n^δ` (`δ = α - β + 1 > 0`) or `log n` (`δ = 0`).
    Lindeberg { n: u64, alpha: f64, beta: f64 },
    /// `ξ_{n,k} = L(k/n) - L((k-1)/n)` for a subordinator `L`.
    Subordinator { n: u64, spec: SubordinatorSpec },
    /// Predictably weighted transform `Σ Q_{n,k} X_{n,k}` of a base array.
    Transform { base: Box<ArrayKind>, weight: WeightSpec },
    /// Base array plus the drift `μ A`.
    Drifted { base: Box<ArrayKind>, mu: f64 },
}

/// Weights of a martingale transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `Q_{n,k} = Q((k-1)/n)`.
    Deterministic { q: WeightFunction },
    /// `Q_{n,k} = Q(σ Σ_{i<k} φ_i / √n)` with iid standard normal `φ_i`.
    RandomWalk { q: WeightFunction, sigma: f64 },
}

impl WeightSpec {
    pub fn function(&self) -> &WeightFunction {
        match self {
            WeightSpec::Deterministic { q } | WeightSpec::RandomWalk { q, .. } => q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.function().validate()?;
        if let WeightSpec::RandomWalk { sigma, .. } = self {
            if !(sigma.is_finite() && *sigma >= 0.0) {
                return domain(format!("sigma must be finite and non-negative, got {sigma}"));
            }
        }
        Ok(())
    }
}

impl ArrayKind {
    /// Grid resolution, carried by the innermost array.
    pub fn n(&self) -> u64 {
        match self {
            ArrayKind::Linnik { n } | ArrayKind::Polya { n } => *n,
            ArrayKind::Lindeberg { n, .. } | ArrayKind::Subordinator { n, .. } => *n,
            ArrayKind::Transform { base, .. } | ArrayKind::Drifted { base, .. } => base.n(),
        }
    }

    /// Same array at another resolution.
    pub fn with_n(&self, n: u64) -> ArrayKind {
        let mut k = self.clone();
        k.set_n(n);
        k
    }

    fn set_n(&mut self, m: u64) {
        match self {
            ArrayKind::Linnik { n } | ArrayKind::Polya { n } => *n = m,
            ArrayKind::Lindeberg { n, .. } | ArrayKind::Subordinator { n, .. } => *n = m,
            ArrayKind::Transform { base, .. } | ArrayKind::Drifted { base, .. } => base.set_n(m),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n() == 0 {
            return domain("n must be at least 1");
        }
        match self {
            ArrayKind::Linnik { .. } | ArrayKind::Polya { .. } => Ok(()),
            ArrayKind::Lindeberg { n, alpha, beta } => {
                let (delta, _) = lindeberg_scaling(*n, *alpha, *beta)?;
                if delta == 0.0 {
                    log::warn!("a zero-exponent Lindeberg array uses log scaling and has no proper limit");
                }
                Ok(())
            }
            ArrayKind::Subordinator { spec, .. } => spec.validate(),
            ArrayKind::Transform { base, weight } => {
                base.validate()?;
                weight.validate()
            }
            ArrayKind::Drifted { base, mu } => {
                if !mu.is_finite() {
                    return domain("drift coefficient must be finite");
                }
                base.validate()
            }
        }
    }

    /// True when `A` is a deterministic function of time.
    pub fn deterministic_compensator(&self) -> bool {
        match self {
            ArrayKind::Lindeberg { .. } => true,
            ArrayKind::Subordinator { spec, .. } => matches!(spec.kind, crate::levy::SubordinatorKind::Drift { .. }),
            ArrayKind::Transform { base, weight } => {
                matches!(weight, WeightSpec::Deterministic { .. }) && base.deterministic_compensator()
            }
            ArrayKind::Drifted { base, .. } => base.deterministic_compensator(),
            _ => false,
        }
    }
}

/// `(δ, a_n²)` for the Lindeberg family.
pub fn lindeberg_scaling(n: u64, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    if !alpha.is_finite() || !beta.is_finite() || beta < 0.0 {
        return domain(format!("need finite alpha and beta >= 0, got alpha={alpha}, beta={beta}"));
    }
    let delta = alpha - beta + 1.0;
    if delta < 0.0 {
        return domain(format!("need alpha - beta + 1 >= 0, got {delta}"));
    }
    let a2 = if delta > 0.0 {
        (n as f64).powf(delta)
    } else {
        if n < 2 {
            return domain("log scaling needs n >= 2");
        }
        (n as f64).ln()
    };
    Ok((delta, a2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArraySpec {
    pub kind: ArrayKind,
    pub horizon: f64,
}

impl ArraySpec {
    pub fn new(kind: ArrayKind, horizon: f64) -> Self {
        ArraySpec { kind, horizon }
    }

    pub fn linnik(n: u64, horizon: f64) -> Self {
        ArraySpec::new(ArrayKind::Linnik { n }, horizon)
    }

    pub fn polya(n: u64, horizon: f64) -> Self {
        ArraySpec::new(ArrayKind::Polya { n }, horizon)
    }

    pub fn lindeberg(n: u64, alpha: f64, beta: f64, horizon: f64) -> Self {
        ArraySpec::new(ArrayKind::Lindeberg { n, alpha, beta }, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return domain(format!("horizon must be finite and non-negative, got {}", self.horizon));
        }
        self.kind.validate()
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid {
            n: self.kind.n(),
            horizon: self.horizon,
        }
    }

    pub fn with_n(&self, n: u64) -> ArraySpec {
        ArraySpec::new(self.kind.with_n(n), self.horizon)
    }

    pub fn with_horizon(&self, horizon: f64) -> ArraySpec {
        ArraySpec::new(self.kind.clone(), horizon)
    }
}

/// Per-cell increments of the martingale, its compensator, its quadratic
/// variation and the predictable drift.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Cell {
    pub martingale: f64,
    pub compensator: f64,
    pub quadratic_variation: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Increments {
    pub martingale: Vec<f64>,
    pub compensator: Vec<f64>,
    pub quadratic_variation: Vec<f64>,
    pub drift: Vec<f64>,
}

impl Increments {
    fn with_capacity(c: usize) -> Self {
        Increments {
            martingale: Vec::with_capacity(c),
            compensator: Vec::with_capacity(c),
            quadratic_variation: Vec::with_capacity(c),
            drift: Vec::with_capacity(c),
        }
    }

    fn push(&mut self, c: Cell) {
        self.martingale.push(c.martingale);
        self.compensator.push(c.compensator);
        self.quadratic_variation.push(c.quadratic_variation);
        self.drift.push(c.drift);
    }

    pub fn len(&self) -> usize {
        self.martingale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.martingale.is_empty()
    }

    /// Sums over the first `cells` cells.
    pub fn totals(&self, cells: usize) -> Cell {
        let c = cells.min(self.len());
        Cell {
            martingale: self.martingale[..c].iter().sum(),
            compensator: self.compensator[..c].iter().sum(),
            quadratic_variation: self.quadratic_variation[..c].iter().sum(),
            drift: self.drift[..c].iter().sum(),
        }
    }
}

#[derive(Debug, Clone)]
struct LindebergTable {
    amplitude: Vec<f64>,
    probability: Vec<f64>,
    compensator: Vec<f64>,
    inv_scale: f64,
}

/// Gamma draws with shape `1/n` underflow to zero with positive probability;
/// they are lifted to the smallest subnormal so every cell moves the clock.
const SMALLEST_INCREMENT: f64 = f64::from_bits(1);

/// Sequential sampler holding the per-realization state.
#[derive(Debug, Clone)]
enum Sampler {
    Linnik {
        gamma: Gamma<f64>,
    },
    Polya {
        inv_sqrt_n: f64,
        inv_n: f64,
        sum: f64,
        prev: f64,
    },
    Lindeberg(Arc<LindebergTable>),
    Subordinator {
        spec: Arc<SubordinatorSpec>,
        clock: Arc<Vec<f64>>,
    },
    Transform {
        base: Box<Sampler>,
        q: Arc<WeightFunction>,
        walk_sigma: Option<f64>,
        walk: f64,
        n: f64,
    },
    Drifted {
        base: Box<Sampler>,
        mu: f64,
    },
}

impl Sampler {
    fn new(kind: &ArrayKind, cells: usize) -> Result<Sampler> {
        Ok(match kind {
            ArrayKind::Linnik { n } => Sampler::Linnik {
                gamma: Gamma::new(1.0 / *n as f64, 1.0).map_err(|e| Error::Domain(e.to_string()))?,
            },
            ArrayKind::Polya { n } => Sampler::Polya {
                inv_sqrt_n: 1.0 / (*n as f64).sqrt(),
                inv_n: 1.0 / *n as f64,
                sum: 0.0,
                prev: 1.0,
            },
            ArrayKind::Lindeberg { n, alpha, beta } => {
                let (delta, a2) = lindeberg_scaling(*n, *alpha, *beta)?;
                let ks = 1..=cells;
                Sampler::Lindeberg(Arc::new(LindebergTable {
                    amplitude: ks.clone().map(|k| (k as f64).powf(0.5 * alpha)).collect(),
                    probability: ks.clone().map(|k| (k as f64).powf(-beta)).collect(),
                    compensator: ks.map(|k| (k as f64).powf(delta - 1.0) / a2).collect(),
                    inv_scale: 1.0 / a2.sqrt(),
                }))
            }
            ArrayKind::Subordinator { n, spec } => {
                let grid = TimeGrid { n: *n, horizon: cells as f64 / *n as f64 };
                let clock = (0..=cells).map(|k| spec.clock(grid.point(k))).collect::<Result<Vec<_>>>()?;
                Sampler::Subordinator {
                    spec: Arc::new(spec.clone()),
                    clock: Arc::new(clock),
                }
            }
            ArrayKind::Transform { base, weight } => Sampler::Transform {
                base: Box::new(Sampler::new(base, cells)?),
                q: Arc::new(weight.function().clone()),
                walk_sigma: match weight {
                    WeightSpec::Deterministic { .. } => None,
                    WeightSpec::RandomWalk { sigma, .. } => Some(*sigma),
                },
                walk: 0.0,
                n: base.n() as f64,
            },
            ArrayKind::Drifted { base, mu } => Sampler::Drifted {
                base: Box::new(Sampler::new(base, cells)?),
                mu: *mu,
            },
        })
    }

    /// Increments of cell `k` (1-based).
    fn next<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Cell {
        match self {
            Sampler::Linnik { gamma } => {
                let xi = gamma.sample(rng).max(SMALLEST_INCREMENT);
                let z: f64 = rng.sample(StandardNormal);
                Cell {
                    martingale: xi.sqrt() * z,
                    compensator: xi,
                    quadratic_variation: xi * z * z,
                    drift: 0.0,
                }
            }
            Sampler::Polya {
                inv_sqrt_n,
                inv_n,
                sum,
                prev,
            } => {
                let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let a = *prev * *prev * *inv_n;
                let cell = Cell {
                    martingale: y * *prev * *inv_sqrt_n,
                    compensator: a,
                    quadratic_variation: a,
                    drift: 0.0,
                };
                *sum += y / k as f64;
                *prev = *sum;
                cell
            }
            Sampler::Lindeberg(tab) => {
                let u: f64 = rng.random();
                let p = tab.probability[k - 1];
                let xi = if u < 0.5 * p {
                    tab.amplitude[k - 1]
                } else if u < p {
                    -tab.amplitude[k - 1]
                } else {
                    0.0
                };
                let x = xi * tab.inv_scale;
                Cell {
                    martingale: x,
                    compensator: tab.compensator[k - 1],
                    quadratic_variation: x * x,
                    drift: 0.0,
                }
            }
            Sampler::Subordinator { spec, clock } => {
                let xi = spec.kind.increment(clock[k] - clock[k - 1], rng);
                let z: f64 = rng.sample(StandardNormal);
                Cell {
                    martingale: xi.sqrt() * z,
                    compensator: xi,
                    quadratic_variation: xi * z * z,
                    drift: 0.0,
                }
            }
            Sampler::Transform {
                base,
                q,
                walk_sigma,
                walk,
                n,
            } => {
                let arg = match walk_sigma {
                    None => (k - 1) as f64 / *n,
                    Some(sigma) => {
                        let phi: f64 = rng.sample(StandardNormal);
                        *walk += *sigma * phi / n.sqrt();
                        *walk
                    }
                };
                let w = q.eval(arg);
                let c = base.next(k, rng);
                Cell {
                    martingale: w * c.martingale,
                    compensator: w * w * c.compensator,
                    quadratic_variation: w * w * c.quadratic_variation,
                    drift: w * c.drift,
                }
            }
            Sampler::Drifted { base, mu } => {
                let c = base.next(k, rng);
                Cell {
                    drift: c.drift + *mu * c.compensator,
                    ..c
                }
            }
        }
    }
}

/// Increments over the first `cells` cells.
pub fn sample_increments<R: Rng + ?Sized>(kind: &ArrayKind, cells: usize, rng: &mut R) -> Result<Increments> {
    let mut sampler = Sampler::new(kind, cells)?;
    let mut out = Increments::with_capacity(cells);
    for k in 1..=cells {
        out.push(sampler.next(k, rng));
    }
    Ok(out)
}

/// Staircase trajectories of one realization on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayRealization {
    pub martingale: CadlagPath,
    pub compensator: CadlagPath,
    pub quadratic_variation: CadlagPath,
    pub drift: CadlagPath,
    /// `martingale + drift`.
    pub observed: CadlagPath,
}

impl ArrayRealization {
    pub fn from_increments(grid: &TimeGrid, incs: &Increments) -> Result<Self> {
        let martingale = CadlagPath::from_grid_increments(grid, &incs.martingale)?;
        let drift = CadlagPath::from_grid_increments(grid, &incs.drift)?;
        Ok(ArrayRealization {
            observed: martingale.add(&drift)?,
            compensator: CadlagPath::from_grid_increments(grid, &incs.compensator)?,
            quadratic_variation: CadlagPath::from_grid_increments(grid, &incs.quadratic_variation)?,
            martingale,
            drift,
        })
    }
}

pub fn realize_with<R: Rng + ?Sized>(spec: &ArraySpec, rng: &mut R) -> Result<ArrayRealization> {
    spec.validate()?;
    let grid = spec.grid();
    let incs = sample_increments(&spec.kind, grid.cells(), rng)?;
    ArrayRealization::from_increments(&grid, &incs)
}

pub fn realize(spec: &ArraySpec, stream: RngStream) -> Result<ArrayRealization> {
    realize_with(spec, &mut stream.rng())
}

/// `(M(t), A(t), [M](t), O(t))` for `samples` independent realizations.
pub fn sample_terminal(spec: &ArraySpec, t: f64, samples: usize, stream: RngStream) -> Result<Vec<Cell>> {
    spec.validate()?;
    let cells = floor_index(spec.kind.n(), t);
    try_replicate(stream, samples, |_, rng| Ok(sample_increments(&spec.kind, cells, rng)?.totals(cells)))
}

/// `|[M](T) - Σ_{0<s≤T} ΔM(s)²| ≤ 1e-10 · max(1, [M](T))` for a staircase
/// realization, whose continuous martingale part vanishes.
pub fn check_jump_decomposition(r: &ArrayRealization) -> bool {
    jump_decomposition_gap(&r.martingale, &r.quadratic_variation) <= 1e-10 * r.quadratic_variation.terminal_value().abs().max(1.0)
}

/// `|[M](T) - Σ ΔM²|`.
pub fn jump_decomposition_gap(martingale: &CadlagPath, quadratic_variation: &CadlagPath) -> f64 {
    let squares: f64 = martingale.jumps().map(|(_, j)| j * j).sum();
    (quadratic_variation.terminal_value() - squares).abs()
}

fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return domain("samples must be at least 1");
    }
    Ok(())
}

/// Monte Carlo estimate of `E{A ∘ τ ∘ A(t) - A(t)}`, the size of the first
/// compensator increment after `t`.
///
/// The gap depends only on increments after `t`, so it is evaluated on the
/// compensator restarted at `⌊nt⌋/n`. Increments far below the float spacing
/// of `A(t)` then still register as passage.
pub fn check_hyp_c(spec: &ArraySpec, t: f64, samples: usize, stream: RngStream) -> Result<Estimate> {
    spec.validate()?;
    check_samples(samples)?;
    if !(t >= 0.0 && t < spec.horizon) {
        return domain(format!("need 0 <= t < horizon, got t={t}"));
    }
    let n = spec.kind.n();
    let start = floor_index(n, t);
    let cells = spec.grid().cells();
    if cells <= start {
        return Err(Error::InsufficientHorizon(format!("no grid cell after t={t}; extend the horizon")));
    }
    let rest = TimeGrid {
        n,
        horizon: (cells - start) as f64 / n as f64,
    };
    let gaps = try_replicate(stream, samples, |_, rng| {
        let incs = sample_increments(&spec.kind, cells, rng)?;
        let restarted = CadlagPath::from_grid_increments(&rest, &incs.compensator[start..])?;
        let pair = inverse(&restarted, 0.0)?;
        restarted.eval(pair.tau.terminal_value())
    })?;
    Ok(Estimate::from_samples(&gaps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypDEstimate {
    /// `E A(τ(t))`.
    pub value: Estimate,
    /// `E{A(τ(t)) - t}`.
    pub exceedance: Estimate,
    /// Largest horizon needed by any replicate.
    pub horizon_used: f64,
}

/// Maximum number of horizon doublings before giving up.
const MAX_DOUBLINGS: u32 = 10;

/// Monte Carlo estimate of `E A(τ(t))`, the first compensator value above
/// `t`. Replicates whose compensator does not pass `t` within the horizon are
/// re-simulated on doubled horizons from the same stream.
pub fn check_hyp_d(spec: &ArraySpec, t: f64, samples: usize, stream: RngStream) -> Result<HypDEstimate> {
    spec.validate()?;
    check_samples(samples)?;
    if !(t >= 0.0) {
        return domain(format!("level must be non-negative, got {t}"));
    }
    let n = spec.kind.n() as f64;
    let rows = try_replicate(stream, samples, |r, _| {
        let mut horizon = spec.horizon.max(1.0 / n);
        for _ in 0..=MAX_DOUBLINGS {
            let mut rng = stream.substream(r).rng();
            let cells = floor_index(spec.kind.n(), horizon);
            let incs = sample_increments(&spec.kind, cells, &mut rng)?;
            let mut level = 0.0;
            for da in &incs.compensator {
                level += da;
                if level > t {
                    return Ok((level, horizon));
                }
            }
            horizon *= 2.0;
        }
        Err(Error::InsufficientHorizon(format!(
            "compensator stayed below {t} up to horizon {}; use a larger horizon",
            horizon / 2.0
        )))
    })?;
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let excess: Vec<f64> = values.iter().map(|v| v - t).collect();
    Ok(HypDEstimate {
        value: Estimate::from_samples(&values),
        exceedance: Estimate::from_samples(&excess),
        horizon_used: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindebergRow {
    pub n: u64,
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LindebergReport {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub rows: Vec<LindebergRow>,
    pub holds_in_limit: bool,
}

/// Final value below which the Lindeberg statistic counts as vanished.
pub const LINDEBERG_VANISH: f64 = 1e-3;

/// `a_n^{-2} Σ_{k ≤ n} E{ξ_k² 1(|ξ_k| > a_n ε)}` in closed form.
pub fn lindeberg_statistic(n: u64, alpha: f64, beta: f64, epsilon: f64) -> Result<f64> {
    let (delta, a2) = lindeberg_scaling(n, alpha, beta)?;
    let cutoff = a2.sqrt() * epsilon;
    let mut sum = 0.0;
    for k in 1..=n {
        let kf = k as f64;
        if kf.powf(0.5 * alpha) > cutoff {
            sum += kf.powf(delta - 1.0);
        }
    }
    Ok(sum / a2)
}

/// Lindeberg statistic along an `n` ladder. The condition is reported to
/// hold when the statistic never increases and ends below
/// [`LINDEBERG_VANISH`].
pub fn check_lindeberg(alpha: f64, beta: f64, epsilon: f64, n_ladder: &[u64]) -> Result<LindebergReport> {
    if !(epsilon > 0.0) {
        return domain("epsilon must be positive");
    }
    if n_ladder.is_empty() {
        return Err(Error::Empty("n ladder"));
    }
    let rows = n_ladder
        .iter()
        .map(|&n| {
            Ok(LindebergRow {
                n,
                statistic: lindeberg_statistic(n, alpha, beta, epsilon)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decreasing = rows.windows(2).all(|w| w[1].statistic <= w[0].statistic * (1.0 + 1e-12));
    let vanished = rows.last().unwrap().statistic <= LINDEBERG_VANISH;
    Ok(LindebergReport {
        alpha,
        beta,
        epsilon,
        rows,
        holds_in_limit: decreasing && vanished,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McLeishRow {
    pub epsilon: f64,
    pub fraction: Estimate,
}

/// Estimates `P{sup_{s ≤ t} |[M]_s - A_s| > ε}` for each `ε`; the supremum is
/// exact over grid points.
pub fn check_mcleish(spec: &ArraySpec, t: f64, epsilons: &[f64], samples: usize, stream: RngStream) -> Result<Vec<McLeishRow>> {
    spec.validate()?;
    check_samples(samples)?;
    let cells = floor_index(spec.kind.n(), t);
    let sups = try_replicate(stream, samples, |_, rng| {
        let incs = sample_increments(&spec.kind, cells, rng)?;
        let (mut gap, mut sup) = (0.0_f64, 0.0_f64);
        for (q, a) in incs.quadratic_variation.iter().zip(&incs.compensator) {
            gap += q - a;
            sup = sup.max(gap.abs());
        }
        Ok(sup)
    })?;
    Ok(epsilons
        .iter()
        .map(|&epsilon| McLeishRow {
            epsilon,
            fraction: Estimate::proportion(sups.iter().filter(|&&s| s > epsilon).count(), samples),
        })
        .collect())
}

/// Fraction of realizations whose quadratic variation over cells
/// `first..=⌊nt⌋` vanishes.
pub fn zero_qv_fraction(spec: &ArraySpec, first: usize, samples: usize, stream: RngStream) -> Result<Estimate> {
    spec.validate()?;
    check_samples(samples)?;
    let cells = spec.grid().cells();
    let hits = try_replicate(stream, samples, |_, rng| {
        let incs = sample_increments(&spec.kind, cells, rng)?;
        Ok(incs.quadratic_variation[first.saturating_sub(1).min(cells)..].iter().all(|&q| q == 0.0))
    })?;
    Ok(Estimate::proportion(hits.iter().filter(|&&h| h).count(), samples))
}

/// `Π_{k=first}^{n} (1 - k^{-β})`, the probability that all `ξ_k` with
/// `first ≤ k ≤ n` vanish.
pub fn zero_qv_probability(n: u64, beta: f64, first: u64) -> f64 {
    (first.max(1)..=n).map(|k| 1.0 - (k as f64).powf(-beta)).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_layout() {
        let spec = ArraySpec::new(
            ArrayKind::Transform {
                base: Box::new(ArrayKind::Linnik { n: 8 }),
                weight: WeightSpec::Deterministic {
                    q: WeightFunction::Constant { c: 2.0 },
                },
            },
            1.0,
        );
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"type\":\"transform\""));
        let back: ArraySpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.kind.n(), 8);
    }

    #[test]
    fn lindeberg_parameters() {
        assert!(lindeberg_scaling(10, 1.0, 3.0).is_err());
        let (d, a2) = lindeberg_scaling(100, 1.0, 0.5).unwrap();
        assert_eq!(d, 1.5);
        assert!((a2 - 1000.0).abs() < 1e-9);
        let (d, a2) = lindeberg_scaling(100, 1.0, 2.0).unwrap();
        assert_eq!(d, 0.0);
        assert!((a2 - 100f64.ln()).abs() < 1e-12);
        assert!(lindeberg_scaling(1, 1.0, 2.0).is_err());
    }

    #[test]
    fn lindeberg_compensator_is_deterministic() {
        let spec = ArraySpec::lindeberg(1000, 1.0, 0.5, 1.0);
        let a = realize(&spec, RngStream::new(1, 0)).unwrap().compensator;
        let b = realize(&spec, RngStream::new(2, 0)).unwrap().compensator;
        assert_eq!(a, b);
        let exact: f64 = (1..=1000).map(|k| (k as f64).sqrt()).sum::<f64>() / 1000f64.powf(1.5);
        assert!((a.terminal_value() - exact).abs() < 1e-12);
        assert!((a.terminal_value() - 1.0 / 1.5).abs() <= 0.01);
    }

    #[test]
    fn polya_quadratic_variation_equals_compensator() {
        let r = realize(&ArraySpec::polya(200, 1.0), RngStream::new(3, 0)).unwrap();
        assert_eq!(r.quadratic_variation, r.compensator);
        assert!(check_jump_decomposition(&r));
        assert_eq!(r.compensator.eval(1.0 / 200.0).unwrap(), 1.0 / 200.0);
    }

    #[test]
    fn hand_path_jump_decomposition() {
        let m = CadlagPath::staircase(2.0, &[0.0, 0.5, 1.0], &[0.0, 1.0, -1.0]).unwrap();
        let qv = CadlagPath::staircase(2.0, &[0.0, 0.5, 1.0], &[0.0, 1.0, 5.0]).unwrap();
        assert_eq!(jump_decomposition_gap(&m, &qv), 0.0);
    }

    #[test]
    fn prefix_consistency() {
        let spec = ArraySpec::linnik(16, 1.0);
        let short = realize(&spec, RngStream::new(9, 4)).unwrap();
        let long = realize(&spec.with_horizon(2.0), RngStream::new(9, 4)).unwrap();
        for k in 0..=16 {
            let t = k as f64 / 16.0;
            assert_eq!(short.martingale.eval(t).unwrap(), long.martingale.eval(t).unwrap());
        }
    }

    #[test]
    fn drifted_array() {
        let spec = ArraySpec::new(
            ArrayKind::Drifted {
                base: Box::new(ArrayKind::Linnik { n: 32 }),
                mu: 0.5,
            },
            1.0,
        );
        let r = realize(&spec, RngStream::new(5, 0)).unwrap();
        for k in 0..=32 {
            let t = k as f64 / 32.0;
            let want = r.martingale.eval(t).unwrap() + 0.5 * r.compensator.eval(t).unwrap();
            assert!((r.observed.eval(t).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn lindeberg_matrix() {
        let ladder: Vec<u64> = (10..=18).map(|p| 1u64 << p).collect();
        for (alpha, beta, holds) in [
            (1.0, 0.5, true),
            (2.0, 0.5, true),
            (1.0, 1.0, false),
            (2.0, 1.0, false),
            (1.0, 2.0, false),
            (2.0, 2.0, false),
        ] {
            let r = check_lindeberg(alpha, beta, 0.1, &ladder).unwrap();
            assert_eq!(r.holds_in_limit, holds, "alpha={alpha} beta={beta}");
        }
        let bounded = check_lindeberg(-0.5, 0.5, 1.0, &ladder).unwrap();
        assert!(bounded.rows.iter().all(|r| r.statistic == 0.0));
    }

    #[test]
    fn zero_qv_product() {
        assert_eq!(zero_qv_probability(100, 2.0, 1), 0.0);
        assert!((zero_qv_probability(100, 2.0, 2) - 101.0 / 200.0).abs() < 1e-12);
    }

    #[test]
    fn hyp_c_for_lindeberg_is_exact() {
        let (n, t) = (64u64, 0.7);
        let spec = ArraySpec::lindeberg(n, 1.0, 0.5, 1.0);
        let e = check_hyp_c(&spec, t, 4, RngStream::new(1, 0)).unwrap();
        let k = floor_index(n, t) as f64 + 1.0;
        let want = k.powf(0.5) / (n as f64).powf(1.5);
        assert!((e.mean - want).abs() < 1e-12);
    }

    #[test]
    fn hyp_c_and_d_for_drift() {
        let n = 10u64;
        let spec = ArraySpec::new(
            ArrayKind::Subordinator {
                n,
                spec: SubordinatorSpec::drift(1.0),
            },
            2.0,
        );
        let c = check_hyp_c(&spec, 0.55, 3, RngStream::new(1, 0)).unwrap();
        assert!((c.mean - 0.1).abs() < 1e-12);
        let d = check_hyp_d(&spec, 0.55, 3, RngStream::new(1, 0)).unwrap();
        assert!((d.value.mean - 0.6).abs() < 1e-12);
    }

    #[test]
    fn hyp_d_extends_the_horizon() {
        let spec = ArraySpec::linnik(8, 0.5);
        let d = check_hyp_d(&spec, 3.0, 20, RngStream::new(2, 0)).unwrap();
        assert!(d.horizon_used > 0.5);
        assert!(d.exceedance.mean >= 0.0);
    }
}
