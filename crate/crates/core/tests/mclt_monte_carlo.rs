//! Monte Carlo properties of the martingale arrays.

use mclt_core::levy::{SubordinatorKind, SubordinatorSpec, WeightFunction};
use mclt_core::mclt::{
    check_hyp_c, check_hyp_d, check_jump_decomposition, check_mcleish, realize, sample_increments, sample_terminal,
    zero_qv_fraction, zero_qv_probability, ArrayKind, ArraySpec, WeightSpec,
};
use mclt_core::rng::{replicate, try_replicate};
use mclt_core::stats::Estimate;
use mclt_core::RngStream;

fn cosine() -> WeightFunction {
    WeightFunction::Cosine {
        offset: 2.0,
        amplitude: 1.0,
        frequency: 1.0,
    }
}

fn all_kinds() -> Vec<ArraySpec> {
    let linnik = ArrayKind::Linnik { n: 64 };
    vec![
        ArraySpec::linnik(64, 1.0),
        ArraySpec::polya(256, 1.0),
        ArraySpec::lindeberg(256, 1.0, 0.5, 1.0),
        ArraySpec::lindeberg(256, 2.0, 2.0, 1.0),
        ArraySpec::new(
            ArrayKind::Subordinator {
                n: 64,
                spec: SubordinatorSpec::gamma(1.0, 1.0),
            },
            1.0,
        ),
        ArraySpec::new(
            ArrayKind::Subordinator {
                n: 64,
                spec: SubordinatorKind::InverseGaussian { mu: 1.0, lambda: 2.0 }.into(),
            },
            1.0,
        ),
        ArraySpec::new(
            ArrayKind::Transform {
                base: Box::new(linnik.clone()),
                weight: WeightSpec::Deterministic { q: cosine() },
            },
            1.0,
        ),
        ArraySpec::new(
            ArrayKind::Transform {
                base: Box::new(ArrayKind::Polya { n: 128 }),
                weight: WeightSpec::RandomWalk { q: cosine(), sigma: 1.0 },
            },
            1.0,
        ),
        ArraySpec::new(
            ArrayKind::Drifted {
                base: Box::new(linnik),
                mu: 0.5,
            },
            1.0,
        ),
    ]
}

#[test]
fn martingales_have_mean_zero() {
    for (i, spec) in all_kinds().iter().enumerate() {
        for (j, t) in [0.25, 0.5, 1.0].into_iter().enumerate() {
            let cells = sample_terminal(spec, t, 20_000, RngStream::new(100 + i as u64, j as u64)).unwrap();
            let e = Estimate::from_samples(&cells.iter().map(|c| c.martingale).collect::<Vec<_>>());
            assert!(e.within(0.0, 4.0), "{:?} t={t}: {e:?}", spec.kind);
        }
    }
}

#[test]
fn compensator_compensates_quadratic_variation() {
    for (i, spec) in all_kinds().iter().enumerate() {
        let cells = sample_terminal(spec, 1.0, 20_000, RngStream::new(200 + i as u64, 0)).unwrap();
        let e = Estimate::from_samples(&cells.iter().map(|c| c.quadratic_variation - c.compensator).collect::<Vec<_>>());
        assert!(e.within(0.0, 4.0), "{:?}: {e:?}", spec.kind);
    }
}

#[test]
fn drift_part_is_mu_times_compensator() {
    let spec = &all_kinds()[8];
    for c in sample_terminal(spec, 1.0, 100, RngStream::new(3, 0)).unwrap() {
        assert!((c.drift - 0.5 * c.compensator).abs() <= 1e-12);
    }
}

#[test]
fn linnik_compensator_mean() {
    let (n, t) = (64u64, 0.7);
    let cells = sample_terminal(&ArraySpec::linnik(n, 1.0), t, 50_000, RngStream::new(4, 0)).unwrap();
    let e = Estimate::from_samples(&cells.iter().map(|c| c.compensator).collect::<Vec<_>>());
    assert!(e.within((n as f64 * t).floor() / n as f64, 4.0), "{e:?}");
}

#[test]
fn polya_compensator_mean() {
    let n = 10_000u64;
    let cells = sample_terminal(&ArraySpec::polya(n, 1.0), 1.0, 2_000, RngStream::new(5, 0)).unwrap();
    let e = Estimate::from_samples(&cells.iter().map(|c| c.compensator).collect::<Vec<_>>());
    // E Z_0² = 1 and E Z_i² = Σ_{j ≤ i} j^{-2}.
    let mut partial = 0.0;
    let mut total = 1.0;
    for i in 1..n {
        partial += 1.0 / (i as f64 * i as f64);
        total += partial;
    }
    let exact = total / n as f64;
    assert!(e.within(exact, 4.0), "{e:?} vs {exact}");
    let limit = std::f64::consts::PI.powi(2) / 6.0;
    assert!((exact - limit).abs() <= (1.0 + (n as f64).ln()) / n as f64);
}

#[test]
fn transform_compensator_identity() {
    let n = 128u64;
    let base = ArrayKind::Linnik { n };
    let q = cosine();
    let kind = ArrayKind::Transform {
        base: Box::new(base.clone()),
        weight: WeightSpec::Deterministic { q: q.clone() },
    };
    for seed in 0..20 {
        let stream = RngStream::new(seed, 0);
        let plain = sample_increments(&base, n as usize, &mut stream.rng()).unwrap();
        let weighted = sample_increments(&kind, n as usize, &mut stream.rng()).unwrap();
        let (mut want, mut got) = (0.0, 0.0);
        for k in 0..n as usize {
            let w = q.eval(k as f64 / n as f64);
            want += w * w * plain.compensator[k];
            got += weighted.compensator[k];
            assert!((got - want).abs() <= 1e-12 * want.max(1.0));
            assert!((weighted.martingale[k] - w * plain.martingale[k]).abs() <= 1e-15 * plain.martingale[k].abs().max(1.0));
        }
    }
}

#[test]
fn jump_decomposition_on_realized_paths() {
    for (i, spec) in all_kinds().iter().enumerate() {
        let ok = try_replicate(RngStream::new(300 + i as u64, 0), 100, |r, _| {
            let real = realize(spec, RngStream::new(300 + i as u64, 1).substream(r))?;
            Ok::<_, mclt_core::Error>(check_jump_decomposition(&real))
        })
        .unwrap();
        assert!(ok.iter().all(|&b| b), "{:?}", spec.kind);
    }
}

#[test]
fn zero_quadratic_variation_fraction() {
    let n = 1u64 << 12;
    let samples = 10_000;
    for alpha in [1.0, 2.0] {
        let spec = ArraySpec::lindeberg(n, alpha, 2.0, 1.0);
        let all = zero_qv_fraction(&spec, 1, samples, RngStream::new(6, 0)).unwrap();
        assert_eq!(all.mean, zero_qv_probability(n, 2.0, 1));
        let tail = zero_qv_fraction(&spec, 2, samples, RngStream::new(7, 0)).unwrap();
        let want = (n as f64 + 1.0) / (2.0 * n as f64);
        assert!((zero_qv_probability(n, 2.0, 2) - want).abs() <= 1e-12);
        assert!(tail.within(want, 4.0), "{tail:?} vs {want}");
    }
}

#[test]
fn mcleish_fractions() {
    let polya = check_mcleish(&ArraySpec::polya(1000, 1.0), 1.0, &[0.1, 0.01], 200, RngStream::new(8, 0)).unwrap();
    assert!(polya.iter().all(|r| r.fraction.mean == 0.0));

    let good = ArraySpec::lindeberg(1 << 18, 1.0, 0.5, 1.0);
    let rows = check_mcleish(&good, 1.0, &[0.1], 400, RngStream::new(9, 0)).unwrap();
    assert!(rows[0].fraction.mean < 0.05, "{rows:?}");

    let bad = ArraySpec::lindeberg(1 << 12, 2.0, 2.0, 1.0);
    let rows = check_mcleish(&bad, 1.0, &[0.1], 1000, RngStream::new(10, 0)).unwrap();
    assert!(rows[0].fraction.mean > 0.9, "{rows:?}");
}

#[test]
fn hyp_d_drift_and_polya() {
    let n = 10u64;
    let drift = ArraySpec::new(
        ArrayKind::Subordinator {
            n,
            spec: SubordinatorSpec::drift(1.0),
        },
        2.0,
    );
    for t in [0.0, 0.25, 0.55, 1.0] {
        let d = check_hyp_d(&drift, t, 2, RngStream::new(1, 0)).unwrap();
        let grid_ceiling = ((n as f64 * t).floor() + 1.0) / n as f64;
        assert!((d.value.mean - grid_ceiling).abs() <= 1e-12, "t={t}: {d:?}");
    }
    let n = 10_000u64;
    let d = check_hyp_d(&ArraySpec::polya(n, 2.0), 1.0, 40, RngStream::new(11, 0)).unwrap();
    let bound = (1.0 + (n as f64).ln()).powi(2) / n as f64;
    assert!(d.exceedance.mean >= 0.0 && d.exceedance.mean <= bound, "{d:?}");
}

#[test]
fn hyp_c_subordinator_drift_bound() {
    let n = 16u64;
    let spec = ArraySpec::new(
        ArrayKind::Subordinator {
            n,
            spec: SubordinatorSpec::drift(2.0),
        },
        1.0,
    );
    let e = check_hyp_c(&spec, 0.3, 3, RngStream::new(1, 0)).unwrap();
    assert!(e.mean <= 2.0 / n as f64 + 1e-12);
}

#[test]
fn worker_count_does_not_change_results() {
    let spec = ArraySpec::linnik(64, 1.0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| check_hyp_c(&spec, 0.7, 500, RngStream::new(12, 0)).unwrap())
    };
    assert_eq!(run(1), run(4));
}

/// Cells of a Linnik array converge to the jumps of a Gamma process, so the
/// largest squared jump of `M_n` on `[0, 1]` stays of order one.
#[test]
fn linnik_largest_jump_does_not_vanish() {
    let means: Vec<f64> = [16u64, 64, 256, 1024]
        .iter()
        .map(|&n| {
            let xs = replicate(RngStream::new(13, n), 4_000, |_, rng| {
                let incs = sample_increments(&ArrayKind::Linnik { n }, n as usize, rng).unwrap();
                incs.martingale.iter().map(|m| m * m).fold(0.0, f64::max)
            });
            Estimate::from_samples(&xs).mean
        })
        .collect();
    eprintln!("E max squared jump by n = 16, 64, 256, 1024: {means:?}");
    assert!(means.iter().all(|&m| m > 0.2), "{means:?}");
    assert!(means[3] >= 0.5 * means[0], "{means:?}");
}
