//! Statistical checks: empirical characteristic functions, two-sample
//! Kolmogorov–Smirnov statistics, finite-dimensional distribution tests via
//! linear combinations, standardization and Lenglart checks, and report
//! assembly.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::levy::{cf_oracle, subordinate_at, CfModel, SubordinatorSpec, WeightFunction};
use crate::mclt::{sample_increments, sample_terminal, ArrayKind, ArraySpec, WeightSpec};
use crate::path::floor_index;
use crate::rng::{replicate, try_replicate, RngStream};
use crate::stats::{Complex, Estimate};

/// `sqrt(-ln(0.005) / 2)`, the asymptotic two-sample KS quantile at level 1%.
pub const KS_C_01: f64 = 1.6276;

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Empirical characteristic function at `λ`. Samples are summed in sorted
/// order, so the result does not depend on their order.
pub fn ecf(samples: &[f64], lambda: f64) -> Complex {
    ecf_sorted(&sorted(samples), lambda).0
}

/// ECF with the sample variances of its real and imaginary parts.
fn ecf_sorted(xs: &[f64], lambda: f64) -> (Complex, f64) {
    let n = xs.len() as f64;
    let (mut c, mut s, mut c2, mut s2) = (0.0, 0.0, 0.0, 0.0);
    for &x in xs {
        let (si, co) = (lambda * x).sin_cos();
        c += co;
        s += si;
        c2 += co * co;
        s2 += si * si;
    }
    let (c, s) = (c / n, s / n);
    let var = (c2 / n - c * c).max(0.0) + (s2 / n - s * s).max(0.0);
    (Complex::new(c, s), var)
}

/// `λ` grid from `lo` to `hi` inclusive in steps of `step`.
pub fn lambda_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step + 1e-9).floor() as i64;
    (0..=k).map(|i| lo + i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcfDistance {
    /// `sup_λ |φ̂(λ) - φ(λ)|` over the grid.
    pub distance: f64,
    /// Standard error of the ECF at the maximizing `λ`.
    pub se: f64,
    pub argmax: f64,
}

pub fn ecf_distance<F: Fn(f64) -> Complex>(samples: &[f64], model: F, grid: &[f64]) -> Result<EcfDistance> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    if grid.is_empty() {
        return Err(Error::Empty("lambda grid"));
    }
    let xs = sorted(samples);
    let mut best = EcfDistance {
        distance: -1.0,
        se: 0.0,
        argmax: grid[0],
    };
    for &lambda in grid {
        let (e, var) = ecf_sorted(&xs, lambda);
        let d = e.sub(model(lambda)).abs();
        if d > best.distance {
            best = EcfDistance {
                distance: d,
                se: (var / xs.len() as f64).sqrt(),
                argmax: lambda,
            };
        }
    }
    Ok(best)
}

pub fn ecf_distance_model(samples: &[f64], model: &CfModel, grid: &[f64]) -> Result<EcfDistance> {
    ecf_distance(samples, |l| cf_oracle(model, l), grid)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS sample"));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return domain("KS samples must not contain NaN");
    }
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0_f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// 1% critical value of the two-sample KS statistic for sizes `n` and `m`.
pub fn ks_critical_value(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_C_01 * ((n + m) / (n * m)).sqrt()
}

/// One row of a [`ConvergenceReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub check_name: String,
    pub n: u64,
    /// Times, `λ` grid or other parameters of the check.
    pub param: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub standard_error: Option<f64>,
    pub seed: u64,
    pub samples: usize,
}

impl ReportEntry {
    /// `pass` is `statistic ≤ threshold`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        check_name: impl Into<String>,
        n: u64,
        param: impl Into<String>,
        statistic: f64,
        threshold: f64,
        standard_error: Option<f64>,
        seed: u64,
        samples: usize,
    ) -> Self {
        ReportEntry {
            check_name: check_name.into(),
            n,
            param: param.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
            standard_error,
            seed,
            samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub experiment_id: String,
    pub seed: u64,
    pub samples: usize,
    pub entries: Vec<ReportEntry>,
}

impl ConvergenceReport {
    pub fn new(experiment_id: impl Into<String>, seed: u64, samples: usize) -> Self {
        ConvergenceReport {
            experiment_id: experiment_id.into(),
            seed,
            samples,
            entries: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check_name", "n", "param", "statistic", "threshold", "pass", "se", "seed", "samples"])
            .expect("in-memory write");
        for e in &self.entries {
            w.write_record([
                e.check_name.clone(),
                e.n.to_string(),
                e.param.clone(),
                e.statistic.to_string(),
                e.threshold.to_string(),
                e.pass.to_string(),
                e.standard_error.map_or_else(String::new, |s| s.to_string()),
                e.seed.to_string(),
                e.samples.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// `d_{i+1} ≤ d_i + k · sqrt(se_i² + se_{i+1}²)` along a ladder.
pub fn weakly_decreasing(stats: &[(f64, f64)], k: f64) -> bool {
    stats
        .windows(2)
        .all(|w| w[1].0 <= w[0].0 + k * (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt())
}

/// Which coordinate of the pair `(A, M)` a finite-dimensional test uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Compensator,
    Martingale,
}

impl Component {
    fn pick(self, pair: (f64, f64)) -> f64 {
        match self {
            Component::Compensator => pair.0,
            Component::Martingale => pair.1,
        }
    }
}

/// Sampler of the limit law `(A(t_i), M(t_i))` at non-decreasing times.
pub trait FddTarget: Sync {
    fn sample(&self, times: &[f64], rng: &mut rand_chacha::ChaCha8Rng) -> Result<Vec<(f64, f64)>>;
}

/// `(A, W ∘ A)` for a subordinator `A` and independent Brownian motion `W`.
#[derive(Debug, Clone)]
pub struct SubordinatedTarget(pub SubordinatorSpec);

impl FddTarget for SubordinatedTarget {
    fn sample(&self, times: &[f64], rng: &mut rand_chacha::ChaCha8Rng) -> Result<Vec<(f64, f64)>> {
        subordinate_at(&self.0, times, rng)
    }
}

/// The point mass at zero.
#[derive(Debug, Clone, Copy)]
pub struct ZeroTarget;

impl FddTarget for ZeroTarget {
    fn sample(&self, times: &[f64], _: &mut rand_chacha::ChaCha8Rng) -> Result<Vec<(f64, f64)>> {
        Ok(vec![(0.0, 0.0); times.len()])
    }
}

/// `Σ_j ω_j {X(s_j) - X(s_{j-1})}` with `s_0 = 0` and `X(0) = 0`.
fn combine(values: &[f64], weights: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut out = 0.0;
    for (v, w) in values.iter().zip(weights) {
        out += w * (v - prev);
        prev = *v;
    }
    out
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(" "))
}

/// Two-sample KS test of a weighted combination of increments of the array
/// against the same combination under the target law.
pub fn fdd_test(
    spec: &ArraySpec,
    times: &[f64],
    weights: &[f64],
    component: Component,
    target: &dyn FddTarget,
    samples: usize,
    stream: RngStream,
) -> Result<ReportEntry> {
    spec.validate()?;
    if times.is_empty() {
        return Err(Error::Empty("times"));
    }
    if times.len() != weights.len() {
        return domain("need one weight per time");
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times[0] < 0.0 {
        return domain("times must be non-negative and non-decreasing");
    }
    if samples == 0 {
        return domain("samples must be at least 1");
    }
    let n = spec.kind.n();
    let idx: Vec<usize> = times.iter().map(|&t| floor_index(n, t)).collect();
    let cells = *idx.last().unwrap();
    let array = try_replicate(stream.substream(0), samples, |_, rng| {
        let incs = sample_increments(&spec.kind, cells, rng)?;
        let values: Vec<f64> = idx
            .iter()
            .map(|&k| {
                let c = incs.totals(k);
                component.pick((c.compensator, c.martingale))
            })
            .collect();
        Ok(combine(&values, weights))
    })?;
    let limit = try_replicate(stream.substream(1), samples, |_, rng| {
        let values: Vec<f64> = target.sample(times, rng)?.into_iter().map(|p| component.pick(p)).collect();
        Ok(combine(&values, weights))
    })?;
    let name = match component {
        Component::Compensator => "fdd_compensator",
        Component::Martingale => "fdd_martingale",
    };
    Ok(ReportEntry::new(
        name,
        n,
        format!("times={};weights={}", fmt_list(times), fmt_list(weights)),
        ks_two_sample(&array, &limit)?,
        ks_critical_value(samples, samples),
        None,
        stream.master_seed,
        samples,
    ))
}

/// `m / sqrt(a)` with `0/0 = 0`.
pub fn standardize(m: f64, a: f64) -> f64 {
    if a == 0.0 && m == 0.0 {
        0.0
    } else {
        m / a.sqrt()
    }
}

/// KS distance between standardized pairs `(M, A)` and as many standard
/// normal draws.
pub fn standardization_statistic(pairs: &[(f64, f64)], stream: RngStream) -> Result<f64> {
    let ratios: Vec<f64> = pairs.iter().map(|&(m, a)| standardize(m, a)).collect();
    let normal = replicate(stream, pairs.len(), |_, rng| rng.sample::<f64, _>(StandardNormal));
    ks_two_sample(&ratios, &normal)
}

/// KS test of `M(t)/sqrt(A(t))` against the standard normal law.
pub fn standardization_test(spec: &ArraySpec, t: f64, samples: usize, stream: RngStream) -> Result<ReportEntry> {
    if !(t > 0.0) {
        return domain("t must be positive");
    }
    let cells = sample_terminal(spec, t, samples, stream.substream(0))?;
    let pairs: Vec<(f64, f64)> = cells.iter().map(|c| (c.martingale, c.compensator)).collect();
    Ok(ReportEntry::new(
        "standardization",
        spec.kind.n(),
        format!("t={t}"),
        standardization_statistic(&pairs, stream.substream(1))?,
        ks_critical_value(samples, samples),
        None,
        stream.master_seed,
        samples,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LenglartResult {
    /// `P(sup_{s ≤ t} M(s)² ≥ ε)`.
    pub lhs: Estimate,
    /// `η/ε + P(A(t) ≥ η)`.
    pub rhs: Estimate,
    pub holds: bool,
}

/// Monte Carlo of both sides of Lenglart's inequality for `X = M²`
/// dominated by `Y = A`. Holds when `lhs ≤ rhs + 3` joint standard errors.
pub fn lenglart_check(spec: &ArraySpec, epsilon: f64, eta: f64, t: f64, samples: usize, stream: RngStream) -> Result<LenglartResult> {
    if !(epsilon > 0.0 && eta > 0.0) {
        return domain("epsilon and eta must be positive");
    }
    spec.validate()?;
    if samples == 0 {
        return domain("samples must be at least 1");
    }
    let cells = floor_index(spec.kind.n(), t);
    let rows = try_replicate(stream, samples, |_, rng| {
        let incs = sample_increments(&spec.kind, cells, rng)?;
        let (mut m, mut sup) = (0.0_f64, 0.0_f64);
        for dm in &incs.martingale {
            m += dm;
            sup = sup.max(m * m);
        }
        let a: f64 = incs.compensator.iter().sum();
        Ok((sup >= epsilon, a >= eta))
    })?;
    let lhs = Estimate::proportion(rows.iter().filter(|r| r.0).count(), samples);
    let tail = Estimate::proportion(rows.iter().filter(|r| r.1).count(), samples);
    let rhs = Estimate {
        mean: eta / epsilon + tail.mean,
        ..tail
    };
    let joint = (lhs.se * lhs.se + rhs.se * rhs.se).sqrt();
    Ok(LenglartResult {
        lhs,
        rhs,
        holds: lhs.mean <= rhs.mean + 3.0 * joint,
    })
}

/// Report row for [`lenglart_check`]: statistic `lhs - rhs` against three
/// joint standard errors.
pub fn lenglart_entry(spec: &ArraySpec, epsilon: f64, eta: f64, t: f64, samples: usize, stream: RngStream) -> Result<ReportEntry> {
    let r = lenglart_check(spec, epsilon, eta, t, samples, stream)?;
    let joint = (r.lhs.se * r.lhs.se + r.rhs.se * r.rhs.se).sqrt();
    Ok(ReportEntry::new(
        "lenglart",
        spec.kind.n(),
        format!("epsilon={epsilon};eta={eta};t={t}"),
        r.lhs.mean - r.rhs.mean,
        3.0 * joint,
        Some(joint),
        stream.master_seed,
        samples,
    ))
}

/// ECF distance between `M(t)` of the array and a closed-form model.
#[allow(clippy::too_many_arguments)]
pub fn ecf_test(
    check_name: &str,
    spec: &ArraySpec,
    t: f64,
    model: &CfModel,
    grid: &[f64],
    threshold: f64,
    samples: usize,
    stream: RngStream,
) -> Result<ReportEntry> {
    let xs: Vec<f64> = sample_terminal(spec, t, samples, stream)?.iter().map(|c| c.martingale).collect();
    let d = ecf_distance_model(&xs, model, grid)?;
    Ok(ReportEntry::new(
        check_name,
        spec.kind.n(),
        format!("t={t};lambda={}..{}", grid[0], grid[grid.len() - 1]),
        d.distance,
        threshold,
        Some(d.se),
        stream.master_seed,
        samples,
    ))
}

/// ECF distance between the transform `Σ Q((k-1)/n) X_{n,k}` of a Linnik
/// array at `t` and the Gamma-subordinated weighted limit.
#[allow(clippy::too_many_arguments)]
pub fn transform_cf_test(
    n: u64,
    q: &WeightFunction,
    t: f64,
    grid: &[f64],
    threshold: f64,
    samples: usize,
    stream: RngStream,
) -> Result<ReportEntry> {
    let spec = ArraySpec::new(
        ArrayKind::Transform {
            base: Box::new(ArrayKind::Linnik { n }),
            weight: WeightSpec::Deterministic { q: q.clone() },
        },
        t,
    );
    let model = CfModel::WeightedGammaSubordinatedBm {
        t,
        shape_rate: 1.0,
        scale: 1.0,
        weight: q.clone(),
    };
    ecf_test("transform_cf", &spec, t, &model, grid, threshold, samples, stream)
}
