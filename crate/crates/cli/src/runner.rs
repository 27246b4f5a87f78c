//! Executes the checks of an experiment and writes its report files.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use mclt_core::convtest::{
    ecf_test, fdd_test, ks_critical_value, lenglart_entry, standardization_test, transform_cf_test, Component, ConvergenceReport,
    FddTarget, ReportEntry, SubordinatedTarget, ZeroTarget,
};
use mclt_core::counterexample;
use mclt_core::levy::{rescaling_check, CfModel, SubordinatorSpec};
use mclt_core::mclt::{
    check_hyp_c, check_hyp_d, check_jump_decomposition, check_lindeberg, check_mcleish, realize, zero_qv_fraction,
    zero_qv_probability, ArraySpec,
};
use mclt_core::skorohod::{composition_condition, empirical_tightness, modulus, CompositionVerdict, TripleKind};
use mclt_core::RngStream;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CheckSpec, ExperimentConfig, PathSource, TargetKind};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub jobs: usize,
    pub samples_scale: f64,
    pub output_dir: Option<PathBuf>,
    pub seed_override: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: 1,
            samples_scale: 1.0,
            output_dir: None,
            seed_override: None,
        }
    }
}

/// A report plus auxiliary CSV tables keyed by file name.
pub struct Outcome {
    pub report: ConvergenceReport,
    pub tables: Vec<(String, String)>,
}

pub struct Written {
    pub outcome: Outcome,
    pub dir: PathBuf,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    seed: u64,
    scale: f64,
}

impl Ctx<'_> {
    fn samples(&self, own: Option<usize>) -> usize {
        scaled(own.unwrap_or(self.cfg.samples), self.scale)
    }

    fn array(&self, check: &str, n: u64, horizon: f64) -> anyhow::Result<ArraySpec> {
        let base = self
            .cfg
            .array
            .as_ref()
            .ok_or_else(|| anyhow!("check {check} needs an `array` in the config"))?;
        Ok(ArraySpec::new(base.kind.with_n(n), base.horizon.max(horizon)))
    }

    fn subordinator(&self, check: &str) -> anyhow::Result<SubordinatorSpec> {
        self.cfg
            .subordinator
            .clone()
            .ok_or_else(|| anyhow!("check {check} needs a `subordinator` in the config"))
    }
}

fn scaled(samples: usize, scale: f64) -> usize {
    ((samples as f64 * scale).round() as usize).max(1)
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(" "))
}

/// Row asserting that a ladder of `(distance, se)` never rises by more than
/// two joint standard errors.
fn trend_entry(name: &str, ladder: &[u64], rows: &[ReportEntry], seed: u64, samples: usize) -> Option<ReportEntry> {
    if rows.len() < 2 {
        return None;
    }
    let excess = rows
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].standard_error.unwrap_or(0.0), w[1].standard_error.unwrap_or(0.0));
            w[1].statistic - w[0].statistic - 2.0 * (a * a + b * b).sqrt()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let ns: Vec<f64> = ladder.iter().map(|&n| n as f64).collect();
    Some(ReportEntry::new(
        format!("{name}_trend"),
        *ladder.last().unwrap(),
        format!("n={}", fmt_list(&ns)),
        excess,
        0.0,
        None,
        seed,
        samples,
    ))
}

fn renamed(mut e: ReportEntry, name: &str) -> ReportEntry {
    e.check_name = name.to_string();
    e
}

/// Stream label of the check at `index`: its name, suffixed with `#k` for
/// the k-th repeat of that name, so a check's draws do not depend on the
/// other checks in the config.
fn stream_label(checks: &[CheckSpec], index: usize) -> String {
    let name = checks[index].name();
    match checks[..index].iter().filter(|c| c.name() == name).count() {
        0 => name.to_string(),
        k => format!("{name}#{k}"),
    }
}

type CheckOutput = (Vec<ReportEntry>, Vec<(String, String)>);

fn run_check(ctx: &Ctx, index: usize, check: &CheckSpec) -> anyhow::Result<CheckOutput> {
    let name = check.name();
    let stream = RngStream::labeled(ctx.seed, &ctx.cfg.experiment_id, &stream_label(&ctx.cfg.checks, index));
    let mut out = Vec::new();
    let mut tables = Vec::new();
    match check {
        CheckSpec::CounterexampleM1 { n_list, delta, t_end } => {
            for &n in n_list {
                let w = modulus(&counterexample::composed(n)?, TripleKind::M, *delta, *t_end)?;
                out.push(ReportEntry::new(
                    name,
                    n as u64,
                    format!("delta={delta};T={t_end};modulus={w}"),
                    (w - 1.0).abs(),
                    0.0,
                    None,
                    ctx.seed,
                    0,
                ));
            }
            let verdict = composition_condition(&counterexample::tent(), &counterexample::limit_time_change())?;
            let (stat, label) = match verdict {
                CompositionVerdict::FailsAt(t) => ((t - 2.0).abs(), format!("fails_at {t}")),
                CompositionVerdict::Holds => (1.0, "holds".to_string()),
            };
            out.push(ReportEntry::new("composition_condition", 0, format!("verdict={label}"), stat, 0.0, None, ctx.seed, 0));
        }
        CheckSpec::EcfLinnik {
            n_ladder,
            t,
            lambda,
            threshold,
            samples,
        } => {
            let s = ctx.samples(*samples);
            let grid = lambda.points();
            for &n in n_ladder {
                let spec = ArraySpec::linnik(n, *t);
                out.push(ecf_test(name, &spec, *t, &CfModel::Linnik { t: *t }, &grid, *threshold, s, stream.substream(n))?);
            }
            out.extend(trend_entry(name, n_ladder, &out.clone(), stream.master_seed, s));
        }
        CheckSpec::KsCompensator { n_ladder, t, samples } => {
            let target = SubordinatedTarget(ctx.subordinator(name)?);
            let s = ctx.samples(*samples);
            for &n in n_ladder {
                let spec = ctx.array(name, n, *t)?;
                let e = fdd_test(&spec, &[*t], &[1.0], Component::Compensator, &target, s, stream.substream(n))?;
                out.push(renamed(e, name));
            }
        }
        CheckSpec::Fdd {
            n_ladder,
            times,
            weights,
            component,
            target,
            samples,
        } => {
            let target: Box<dyn FddTarget> = match target {
                TargetKind::Subordinated => Box::new(SubordinatedTarget(ctx.subordinator(name)?)),
                TargetKind::Zero => Box::new(ZeroTarget),
            };
            let s = ctx.samples(*samples);
            let last = times.iter().copied().fold(0.0, f64::max);
            for &n in n_ladder {
                let spec = ctx.array(name, n, last)?;
                out.push(fdd_test(&spec, times, weights, *component, target.as_ref(), s, stream.substream(n))?);
            }
        }
        CheckSpec::HypC {
            n_ladder,
            t,
            reference,
            samples,
        } => {
            let s = ctx.samples(*samples);
            for &n in n_ladder {
                let spec = ctx.array(name, n, t + 1.0)?;
                let e = check_hyp_c(&spec, *t, s, stream.substream(n))?;
                let r = reference.value(n);
                out.push(ReportEntry::new(
                    name,
                    n,
                    format!("t={t};reference={r};mean={}", e.mean),
                    (e.mean - r).abs(),
                    4.0 * e.se,
                    Some(e.se),
                    stream.master_seed,
                    s,
                ));
            }
        }
        CheckSpec::HypD { n_ladder, t, samples } => {
            let s = ctx.samples(*samples);
            for &n in n_ladder {
                let spec = ctx.array(name, n, *t)?;
                let d = check_hyp_d(&spec, *t, s, stream.substream(n))?;
                let hi = t + 1.0 / n as f64;
                let outside = (t - d.value.mean).max(d.value.mean - hi).max(0.0);
                out.push(ReportEntry::new(
                    name,
                    n,
                    format!(
                        "t={t};bracket=[{t} {hi}];mean={};exceedance={}",
                        d.value.mean, d.exceedance.mean
                    ),
                    outside,
                    4.0 * d.value.se,
                    Some(d.value.se),
                    stream.master_seed,
                    s,
                ));
            }
        }
        CheckSpec::Lindeberg {
            cases,
            epsilon,
            n_ladder,
        } => {
            for case in cases {
                let r = check_lindeberg(case.alpha, case.beta, *epsilon, n_ladder)?;
                let stats: Vec<f64> = r.rows.iter().map(|row| row.statistic).collect();
                out.push(ReportEntry::new(
                    name,
                    *n_ladder.last().unwrap(),
                    format!(
                        "alpha={};beta={};epsilon={epsilon};holds={};expected={};statistics={}",
                        case.alpha,
                        case.beta,
                        r.holds_in_limit,
                        case.expect_holds,
                        fmt_list(&stats)
                    ),
                    if r.holds_in_limit == case.expect_holds { 0.0 } else { 1.0 },
                    0.0,
                    None,
                    ctx.seed,
                    0,
                ));
            }
        }
        CheckSpec::Mcleish {
            n_ladder,
            t,
            epsilons,
            bound,
            samples,
        } => {
            let s = ctx.samples(*samples);
            for &n in n_ladder {
                let spec = ctx.array(name, n, *t)?;
                for row in check_mcleish(&spec, *t, epsilons, s, stream.substream(n))? {
                    out.push(ReportEntry::new(
                        name,
                        n,
                        format!("t={t};epsilon={}", row.epsilon),
                        row.fraction.mean,
                        *bound,
                        Some(row.fraction.se),
                        stream.master_seed,
                        s,
                    ));
                }
            }
        }
        CheckSpec::ZeroQv {
            n,
            alpha,
            beta,
            first,
            samples,
        } => {
            let s = ctx.samples(*samples);
            let spec = ArraySpec::lindeberg(*n, *alpha, *beta, 1.0);
            let e = zero_qv_fraction(&spec, *first, s, stream)?;
            let p = zero_qv_probability(*n, *beta, *first as u64);
            out.push(ReportEntry::new(
                name,
                *n,
                format!("alpha={alpha};beta={beta};first={first};product={p};fraction={}", e.mean),
                (e.mean - p).abs(),
                4.0 * e.se,
                Some(e.se),
                stream.master_seed,
                s,
            ));
        }
        CheckSpec::TransformCf {
            n_ladder,
            t,
            weight,
            lambda,
            threshold,
            samples,
        } => {
            let s = ctx.samples(*samples);
            let grid = lambda.points();
            for &n in n_ladder {
                out.push(transform_cf_test(n, weight, *t, &grid, *threshold, s, stream.substream(n))?);
            }
            out.extend(trend_entry(name, n_ladder, &out.clone(), stream.master_seed, s));
        }
        CheckSpec::Rescaling { specs, intervals, samples } => {
            let s = ctx.samples(*samples);
            let specs = match specs {
                Some(v) => v.clone(),
                None => vec![ctx.subordinator(name)?],
            };
            for (j, spec) in specs.iter().enumerate() {
                let label = serde_json::to_string(&spec.kind)?;
                for (k, &[lo, hi]) in intervals.iter().enumerate() {
                    let sub = stream.substream((j * intervals.len() + k) as u64);
                    out.push(ReportEntry::new(
                        name,
                        0,
                        format!("spec={label};s={lo};t={hi}"),
                        rescaling_check(spec, lo, hi, s, sub)?,
                        ks_critical_value(s, s),
                        None,
                        sub.master_seed,
                        s,
                    ));
                }
            }
        }
        CheckSpec::Standardization { n_ladder, t, samples } => {
            let s = ctx.samples(*samples);
            for &n in n_ladder {
                let spec = ctx.array(name, n, *t)?;
                out.push(standardization_test(&spec, *t, s, stream.substream(n))?);
            }
        }
        CheckSpec::Lenglart {
            n_ladder,
            epsilon,
            eta,
            t,
            samples,
        } => {
            let s = ctx.samples(*samples);
            for &n in n_ladder {
                let spec = ctx.array(name, n, *t)?;
                out.push(lenglart_entry(&spec, *epsilon, *eta, *t, s, stream.substream(n))?);
            }
        }
        CheckSpec::Tightness {
            source,
            kind,
            n_list,
            delta_list,
            t_end,
            epsilon,
            samples,
        } => {
            let s = match source {
                PathSource::Counterexample => 1,
                PathSource::Array => ctx.samples(*samples),
            };
            let report = match source {
                PathSource::Counterexample => empirical_tightness(
                    |n, _| counterexample::composed(n as u32),
                    *kind,
                    n_list,
                    delta_list,
                    *t_end,
                    *epsilon,
                    s,
                )?,
                PathSource::Array => {
                    let base = ctx.array(name, 1, *t_end)?;
                    empirical_tightness(
                        |n, r| Ok(realize(&base.with_n(n), stream.substream(n).substream(r))?.martingale),
                        *kind,
                        n_list,
                        delta_list,
                        *t_end,
                        *epsilon,
                        s,
                    )?
                }
            };
            let mut deltas = delta_list.clone();
            deltas.sort_by(f64::total_cmp);
            for &n in n_list {
                let fr: Vec<f64> = deltas.iter().map(|&d| report.fraction(n, d).unwrap_or(f64::NAN)).collect();
                let rise = fr.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
                out.push(ReportEntry::new(
                    name,
                    n,
                    format!("kind={kind};T={t_end};epsilon={epsilon};deltas={};fractions={}", fmt_list(&deltas), fmt_list(&fr)),
                    rise,
                    0.0,
                    None,
                    stream.master_seed,
                    s,
                ));
            }
            tables.push((format!("tightness_{index}.csv"), report.to_csv()));
        }
        CheckSpec::JumpDecomposition { n_ladder, samples } => {
            let s = ctx.samples(*samples);
            for &n in n_ladder {
                let spec = ctx.array(name, n, 0.0)?;
                let sub = stream.substream(n);
                let bad = (0..s as u64)
                    .into_par_iter()
                    .map(|r| realize(&spec, sub.substream(r)).map(|real| !check_jump_decomposition(&real)))
                    .collect::<mclt_core::Result<Vec<bool>>>()?
                    .into_iter()
                    .filter(|&b| b)
                    .count();
                out.push(ReportEntry::new(name, n, "tolerance=1e-10", bad as f64, 0.0, None, sub.master_seed, s));
            }
        }
    }
    Ok((out, tables))
}

/// Runs every check, at most `jobs` at a time, and assembles the report in
/// config order.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> anyhow::Result<Outcome> {
    let seed = opts.seed_override.unwrap_or(cfg.seed);
    if !(opts.samples_scale > 0.0 && opts.samples_scale.is_finite()) {
        anyhow::bail!("samples scale must be positive");
    }
    let ctx = Ctx {
        cfg,
        seed,
        scale: opts.samples_scale,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build()?;
    let results = pool.install(|| {
        cfg.checks
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                log::info!("running check {i} ({})", c.name());
                run_check(&ctx, i, c).with_context(|| format!("check {i} ({})", c.name()))
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    let mut report = ConvergenceReport::new(&cfg.experiment_id, seed, scaled(cfg.samples, opts.samples_scale));
    let mut tables = Vec::new();
    for (entries, t) in results {
        report.entries.extend(entries);
        tables.extend(t);
    }
    Ok(Outcome { report, tables })
}

#[derive(Serialize)]
struct Metadata<'a> {
    experiment_id: &'a str,
    config: String,
    started_unix: f64,
    elapsed_seconds: f64,
    jobs: usize,
    samples_scale: f64,
    seed: u64,
    seed_overridden: bool,
    version: &'static str,
    all_pass: bool,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Runs a config file and writes `report.json`, `report.csv`, auxiliary
/// tables and a `metadata.json` sidecar holding everything time-dependent.
pub fn run_file(path: &Path, opts: &RunOptions) -> anyhow::Result<Written> {
    let cfg = ExperimentConfig::load(path)?;
    let started = unix_now();
    let clock = Instant::now();
    let outcome = execute(&cfg, opts)?;
    let root = opts
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("reports"));
    let dir = root.join(&cfg.experiment_id);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("report.json"), outcome.report.to_json() + "\n")?;
    std::fs::write(dir.join("report.csv"), outcome.report.to_csv())?;
    for (name, body) in &outcome.tables {
        std::fs::write(dir.join(name), body)?;
    }
    let meta = Metadata {
        experiment_id: &cfg.experiment_id,
        config: path.display().to_string(),
        started_unix: started,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        jobs: opts.jobs,
        samples_scale: opts.samples_scale,
        seed: outcome.report.seed,
        seed_overridden: opts.seed_override.is_some(),
        version: env!("CARGO_PKG_VERSION"),
        all_pass: outcome.report.all_pass(),
    };
    std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(Written { outcome, dir })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeated_checks_get_distinct_labels() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment_id": "x", "seed": 1, "samples": 1, "checks": [
                {"check": "zero_qv", "n": 8, "alpha": 1.0, "beta": 2.0},
                {"check": "counterexample_m1", "n_list": [3], "delta": 0.5, "t_end": 2.0},
                {"check": "zero_qv", "n": 8, "alpha": 1.0, "beta": 2.0, "first": 2}]}"#,
        )
        .unwrap();
        let labels: Vec<String> = (0..3).map(|i| stream_label(&cfg.checks, i)).collect();
        assert_eq!(labels, ["zero_qv", "counterexample_m1", "zero_qv#1"]);
    }

    #[test]
    fn scaling_keeps_at_least_one_sample() {
        assert_eq!(scaled(1000, 0.1), 100);
        assert_eq!(scaled(3, 0.01), 1);
    }
}
