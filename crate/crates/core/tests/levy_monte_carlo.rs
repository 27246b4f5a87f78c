//! Monte Carlo checks of the subordinator and Brownian samplers against
//! closed-form laws computed here independently.

use mclt_core::convtest::{ecf_distance, ks_critical_value, ks_two_sample, lambda_grid};
use mclt_core::levy::{
    cf_oracle, rescaling_check, sample_brownian, sample_subordinator, subordinate, CfModel, SubordinatorKind, SubordinatorSpec,
    WeightFunction,
};
use mclt_core::rng::replicate;
use mclt_core::stats::{correlation, Complex, Estimate};
use mclt_core::{RngStream, TimeGrid};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

const N: usize = 100_000;

fn terminal_values(spec: &SubordinatorSpec, grid: &TimeGrid, seed: u64, count: usize) -> Vec<f64> {
    let stream = RngStream::new(seed, 0);
    replicate(stream, count, |r, _| {
        sample_subordinator(spec, grid, stream.substream(r)).unwrap().terminal_value()
    })
}

#[test]
fn gamma_mean() {
    let grid = TimeGrid::new(16, 1.0).unwrap();
    let spec = SubordinatorSpec::gamma(1.0, 1.0);
    let e = Estimate::from_samples(&terminal_values(&spec, &grid, 1, N));
    assert!((e.mean - 1.0).abs() <= 0.02, "{e:?}");

    let spec = SubordinatorSpec::gamma(2.0, 0.5);
    let grid = TimeGrid::new(8, 1.5).unwrap();
    let e = Estimate::from_samples(&terminal_values(&spec, &grid, 2, N));
    assert!(e.within(2.0 * 0.5 * 1.5, 4.0), "{e:?}");
}

#[test]
fn stable_laplace_transform() {
    let grid = TimeGrid::new(4, 1.0).unwrap();
    let xs = terminal_values(&SubordinatorSpec::stable(0.5, 1.0), &grid, 3, N);
    for u in [0.5f64, 1.0, 2.0] {
        let e = Estimate::from_samples(&xs.iter().map(|a| (-u * a).exp()).collect::<Vec<_>>());
        let want = (-u.sqrt()).exp();
        assert!(e.within(want, 3.0), "u={u}: {e:?} vs {want}");
    }
}

#[test]
fn inverse_gaussian_and_compound_poisson_means() {
    let grid = TimeGrid::new(10, 1.0).unwrap();
    for (kind, mean) in [
        (SubordinatorKind::InverseGaussian { mu: 1.5, lambda: 2.0 }, 1.5),
        (SubordinatorKind::CompoundPoisson { rate: 3.0, jump_mean: 0.5 }, 1.5),
    ] {
        let e = Estimate::from_samples(&terminal_values(&kind.into(), &grid, 4, N));
        assert!(e.within(mean, 4.0), "{e:?}");
    }
}

#[test]
fn brownian_moments() {
    let grid = TimeGrid::new(8, 1.0).unwrap();
    let stream = RngStream::new(5, 0);
    let rows = replicate(stream, N, |r, _| {
        let w = sample_brownian(&grid, stream.substream(r)).unwrap();
        let (a, b, c) = (w.eval(0.25).unwrap(), w.eval(0.5).unwrap(), w.eval(1.0).unwrap());
        (a, b, c)
    });
    let w1: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let v = mclt_core::stats::variance(&w1);
    assert!((v - 1.0).abs() <= 0.02, "{v}");
    let half = Estimate::from_samples(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    assert!(half.mean.abs() <= 0.01, "{half:?}");
    let first: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let last: Vec<f64> = rows.iter().map(|r| r.2 - r.1).collect();
    assert!(correlation(&first, &last).abs() <= 0.02);
}

#[test]
fn brownian_off_grid_horizon() {
    let grid = TimeGrid::new(4, 1.1).unwrap();
    let w = sample_brownian(&grid, RngStream::new(1, 0)).unwrap();
    assert_eq!(w.horizon(), 1.1);
    assert_eq!(w.eval(0.0).unwrap(), 0.0);
}

fn subordinated_terminal(spec: &SubordinatorSpec, seed: u64) -> Vec<f64> {
    let grid = TimeGrid::new(16, 1.0).unwrap();
    let stream = RngStream::new(seed, 0);
    replicate(stream, N, |r, _| subordinate(spec, &grid, stream.substream(r)).unwrap().1.terminal_value())
}

/// Laplace law with scale `1/√2`, whose characteristic function is
/// `1 / (1 + λ²/2)`.
fn laplace_draws(seed: u64) -> Vec<f64> {
    replicate(RngStream::new(seed, 0), N, |_, rng| {
        let a: f64 = Exp1.sample(rng);
        let b: f64 = Exp1.sample(rng);
        (a - b) / 2f64.sqrt()
    })
}

#[test]
fn gamma_subordinated_is_laplace() {
    let m = subordinated_terminal(&SubordinatorSpec::gamma(1.0, 1.0), 6);
    let d = ks_two_sample(&m, &laplace_draws(7)).unwrap();
    assert!(d <= 2.0 * ks_critical_value(N, N), "{d}");
    let lap = |l: f64| Complex::real(1.0 / (1.0 + 0.5 * l * l));
    let e = ecf_distance(&m, lap, &lambda_grid(-3.0, 3.0, 0.25)).unwrap();
    assert!(e.distance <= 0.015, "{e:?}");
}

#[test]
fn drift_subordinated_is_normal() {
    let m = subordinated_terminal(&SubordinatorSpec::drift(1.0), 8);
    let z = replicate(RngStream::new(9, 0), N, |_, rng| rng.sample::<f64, _>(StandardNormal));
    let d = ks_two_sample(&m, &z).unwrap();
    assert!(d < ks_critical_value(N, N), "{d}");
}

#[test]
fn oracle_identities() {
    let grid = lambda_grid(-3.0, 3.0, 0.5);
    let one = WeightFunction::Constant { c: 1.0 };
    let cos = WeightFunction::Cosine {
        offset: 2.0,
        amplitude: 1.0,
        frequency: 1.0,
    };
    for &l in &grid {
        let g = cf_oracle(&CfModel::GammaSubordinatedBm { t: 1.3, shape_rate: 1.0, scale: 1.0 }, l);
        let w = cf_oracle(
            &CfModel::WeightedGammaSubordinatedBm {
                t: 1.3,
                shape_rate: 1.0,
                scale: 1.0,
                weight: one.clone(),
            },
            l,
        );
        assert!((g.re - w.re).abs() <= 1e-9);
        let c = cf_oracle(
            &CfModel::WeightedGammaSubordinatedBm {
                t: 0.7,
                shape_rate: 1.0,
                scale: 1.0,
                weight: WeightFunction::Constant { c: 1.5 },
            },
            l,
        );
        assert!((c.re - (1.0 + 1.5 * 1.5 * l * l / 2.0).powf(-0.7)).abs() <= 1e-9);
        for m in [
            CfModel::Linnik { t: 0.4 },
            CfModel::WeightedGammaSubordinatedBm {
                t: 1.0,
                shape_rate: 2.0,
                scale: 0.5,
                weight: cos.clone(),
            },
        ] {
            assert!(cf_oracle(&m, l).abs() <= 1.0);
            assert_eq!(cf_oracle(&m, 0.0).re, 1.0);
        }
    }
    assert!((cf_oracle(&CfModel::Linnik { t: 1.0 }, 2f64.sqrt()).re - 0.5).abs() <= 1e-15);
}

/// `∫ Q dW∘A` has the law of `sqrt(∫ Q² dA) · Z`; here `∫ Q² dA` is summed
/// over a fine grid of Gamma increments.
#[test]
fn weighted_oracle_against_brute_force() {
    let q = WeightFunction::Cosine {
        offset: 2.0,
        amplitude: 1.0,
        frequency: 1.0,
    };
    let cells = 2048usize;
    let h = 1.0 / cells as f64;
    let gamma = Gamma::new(h, 1.0).unwrap();
    let xs = replicate(RngStream::new(10, 0), N, |_, rng| {
        let mut acc = 0.0;
        for k in 0..cells {
            let w = q.eval((k as f64 + 0.5) * h);
            acc += w * w * gamma.sample(rng);
        }
        acc.sqrt() * rng.sample::<f64, _>(StandardNormal)
    });
    let model = CfModel::WeightedGammaSubordinatedBm {
        t: 1.0,
        shape_rate: 1.0,
        scale: 1.0,
        weight: q,
    };
    let d = ecf_distance(&xs, |l| cf_oracle(&model, l), &lambda_grid(-3.0, 3.0, 0.25)).unwrap();
    assert!(d.distance <= 0.01, "{d:?}");
}

#[test]
fn rescaling_for_drift_and_gamma() {
    let k = 20_000;
    let crit = ks_critical_value(k, k);
    let d = rescaling_check(&SubordinatorSpec::drift(1.0), 0.25, 1.0, k, RngStream::new(11, 0)).unwrap();
    assert!(d < crit, "{d}");
    let d = rescaling_check(&SubordinatorSpec::gamma(1.0, 1.0), 0.0, 1.0, k, RngStream::new(12, 0)).unwrap();
    assert!(d < crit, "{d}");
}
