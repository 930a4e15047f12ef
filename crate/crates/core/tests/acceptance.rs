//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line; run
//! with `cargo test -p rpnn --test acceptance -- --nocapture` to see them.

use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rpnn::dataset::generate_mackey_glass;
use rpnn::harness::{
    prepare_data, random_network, run_experiment, seed_wins, synthetic_sequence, ExperimentConfig,
};
use rpnn::metrics::{evaluate_after_warmup, rmse};
use rpnn::trainer::{constructive_fit_observed, gradient_check, rtrl_step, EpochStats, RtrlState};
use rpnn::{FeedbackMode, GradientMode, MgParams, NormParams, RidgePolyNet, TrainerConfig};

fn verdict(n: usize, name: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {n} ({name}): {detail}");
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn gradient_case(order: usize, gradient: GradientMode) -> (f64, f64, Duration) {
    let start = Instant::now();
    let cfg = TrainerConfig {
        gradient_mode: gradient,
        ..TrainerConfig::default()
    };
    let net = random_network(FeedbackMode::ErrorOutput, 2, order, cfg.init_range, 11).unwrap();
    let seq = synthetic_sequence(2, 30, 12);
    let report = gradient_check(&net, &seq, &cfg, 1e-6).unwrap();
    let other = match gradient {
        GradientMode::PaperRecursion => GradientMode::ExactRecursion,
        GradientMode::ExactRecursion => GradientMode::PaperRecursion,
    };
    (
        report.for_mode(gradient).max_relative_error,
        report.for_mode(other).max_relative_error,
        start.elapsed(),
    )
}

#[test]
fn criterion_1_order_one_gradient_fidelity() {
    let (err, _, elapsed) = gradient_case(1, GradientMode::PaperRecursion);
    verdict(
        1,
        "order-1 sensitivity vs finite differences",
        err <= 1e-4 && elapsed < Duration::from_secs(1),
        &format!("max rel err {err:.3e} (<= 1e-4), {elapsed:.2?} (< 1 s)"),
    );
}

#[test]
fn criterion_2_exact_recursion_order_three() {
    let (err, paper_err, elapsed) = gradient_case(3, GradientMode::ExactRecursion);
    verdict(
        2,
        "order-3 exact recursion vs finite differences",
        err <= 1e-4 && elapsed < Duration::from_secs(5),
        &format!(
            "exact max rel err {err:.3e} (<= 1e-4), paper recursion deviates by {paper_err:.3e}, {elapsed:.2?} (< 5 s)"
        ),
    );
}

#[test]
fn criterion_3_error_sensitivity_is_negated_output_sensitivity() {
    let data = prepare_data(&ExperimentConfig::default()).unwrap();
    let cfg = TrainerConfig::default();
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for gradient in [GradientMode::PaperRecursion, GradientMode::ExactRecursion] {
        let cfg = TrainerConfig {
            gradient_mode: gradient,
            ..cfg.clone()
        };
        let mut net =
            RidgePolyNet::new(FeedbackMode::ErrorOutput, 4, cfg.init_range, &mut rng).unwrap();
        let mut state = RtrlState::new(&net);
        for epoch in 0..6 {
            if epoch == 3 {
                net.add_block(5, cfg.init_range, &mut rng).unwrap();
                state.reset_for_growth(&net);
            }
            for p in &data.train {
                rtrl_step(&mut net, &mut state, p, &cfg).unwrap();
                let de = state.error_sensitivity();
                assert_eq!(de.len(), state.dy.len());
                for (e, y) in de.iter().zip(&state.dy) {
                    checked += 1;
                    if e.to_bits() != (-y).to_bits() {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    verdict(
        3,
        "error sensitivity equals -output sensitivity bitwise",
        mismatches == 0,
        &format!("{mismatches} mismatches over {checked} logged values"),
    );
}

#[test]
fn criterion_4_generator_correctness() {
    let start = Instant::now();
    let eq = generate_mackey_glass(&MgParams {
        x0: 1.0,
        ..MgParams::default()
    })
    .unwrap();
    let eq_dev = eq
        .values
        .iter()
        .map(|x| (x - 1.0).abs())
        .fold(0.0, f64::max);

    let decay_params = MgParams {
        alpha: 0.0,
        ..MgParams::default()
    };
    let decay = generate_mackey_glass(&decay_params).unwrap();
    let spacing = decay_params.dt * decay_params.sample_every as f64;
    let decay_rel = decay
        .values
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let exact = 1.2 * (-0.1 * i as f64 * spacing).exp();
            ((x - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    verdict(
        4,
        "Mackey-Glass generator",
        eq.values.len() == 1000
            && eq_dev <= 1e-9
            && decay_rel <= 1e-6
            && elapsed < Duration::from_secs(1),
        &format!(
            "equilibrium max dev {eq_dev:.2e} (<= 1e-9), decay max rel err {decay_rel:.2e} (<= 1e-6), {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_5_normalization_and_rmse_rescaling() {
    let series = generate_mackey_glass(&MgParams::default()).unwrap();
    let np = NormParams::fit(&series.values, 0.2, 0.8).unwrap();
    let endpoints_exact = np.normalize_value(np.min1) == 0.2 && np.normalize_value(np.max1) == 0.8;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let round_trip = (0..1000)
        .map(|_| {
            let x: f64 = rng.random_range(np.min1..=np.max1);
            (np.denormalize_value(np.normalize_value(x)) - x).abs()
        })
        .fold(0.0, f64::max);

    // identity checked both through the evaluator and through the bare rmse
    let cfg = ExperimentConfig::default();
    let data = prepare_data(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let net = RidgePolyNet::new(
        FeedbackMode::ErrorOutput,
        4,
        cfg.trainer.init_range,
        &mut rng,
    )
    .unwrap();
    let eval = evaluate_after_warmup(&net, &data.train, &data.test, &data.norm).unwrap();
    let scale = (data.norm.max1 - data.norm.min1) / (data.norm.max2 - data.norm.min2);
    let identity_eval = (eval.rmse_denormalized - eval.rmse_normalized * scale).abs();
    let recomputed = rmse(
        &data.norm.denormalize(&eval.targets),
        &data.norm.denormalize(&eval.forecasts),
    )
    .unwrap();
    let identity_raw = (recomputed - rmse(&eval.targets, &eval.forecasts).unwrap() * scale).abs();
    let identity = identity_eval.max(identity_raw);

    verdict(
        5,
        "normalization and RMSE rescaling",
        endpoints_exact && round_trip <= 1e-12 && identity <= 1e-12,
        &format!(
            "endpoints exact: {endpoints_exact}, round-trip max err {round_trip:.2e} (<= 1e-12), rescaling identity err {identity:.2e} (<= 1e-12)"
        ),
    );
}

#[test]
fn criterion_6_growth_protocol() {
    let data = prepare_data(&ExperimentConfig::default()).unwrap();
    let cfg = TrainerConfig {
        r_threshold: 1e3,
        r_decay: 1e-9,
        ..TrainerConfig::default()
    };

    let mut log: Vec<(EpochStats, RidgePolyNet)> = Vec::new();
    let fit = constructive_fit_observed(&data.train, &cfg, FeedbackMode::ErrorOutput, |s, net| {
        log.push((s.clone(), net.clone()))
    })
    .unwrap();
    let h = &fit.history;

    let mut problems = Vec::new();
    let mut eta = cfg.eta;
    let mut r = cfg.r_threshold;
    for (i, e) in h.epochs.iter().enumerate() {
        if e.eta_used.to_bits() != eta.to_bits() || e.r_used.to_bits() != r.to_bits() {
            problems.push(format!(
                "epoch {}: schedule eta {} r {}",
                e.epoch, e.eta_used, e.r_used
            ));
        }
        let stalled = e.improvement.is_some_and(|imp| imp < e.r_used);
        let should_add = stalled && e.block_count < cfg.max_blocks;
        if e.block_added != should_add {
            problems.push(format!(
                "epoch {}: addition {} vs rule {should_add}",
                e.epoch, e.block_added
            ));
        }
        if stalled && e.block_count == cfg.max_blocks && i + 1 != h.epochs.len() {
            problems.push(format!(
                "epoch {}: kept training after the last block stalled",
                e.epoch
            ));
        }
        if e.block_added {
            eta *= 0.8;
            r *= cfg.r_decay;
        }
    }
    for a in &h.additions {
        let want = cfg.eta * 0.8f64.powi(a.new_order as i32 - 1);
        if (a.eta_after - want).abs() > 1e-15 {
            problems.push(format!(
                "addition at {}: eta {} != {want}",
                a.epoch, a.eta_after
            ));
        }
    }

    // every block frozen at an addition must keep its exact weights from then on
    let mut frozen_checks = 0usize;
    // the observer runs before growth, so the history says which epochs grew
    for (i, ((_, net), stats)) in log.iter().zip(&h.epochs).enumerate() {
        if !stats.block_added {
            continue;
        }
        let frozen = &net.blocks()[..stats.block_count];
        for (_, later) in &log[i + 1..] {
            frozen_checks += 1;
            if &later.blocks()[..stats.block_count] != frozen {
                problems.push(format!("frozen blocks changed after epoch {}", stats.epoch));
                break;
            }
        }
    }

    let k = log.last().map(|(_, n)| n.block_count()).unwrap_or(0);
    let epochs = h.epochs.len();
    verdict(
        6,
        "constructive growth protocol",
        problems.is_empty() && !h.additions.is_empty() && k <= 5 && epochs <= 3000,
        &format!(
            "{} additions at epochs {:?}, final k {k}, {epochs} epochs, {frozen_checks} frozen-block comparisons, problems: {problems:?}",
            h.additions.len(),
            h.additions.iter().map(|a| a.epoch).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_7_benchmark_and_8_determinism() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        sweep: 3,
        ..ExperimentConfig::default()
    };
    assert_eq!(cfg.mode, FeedbackMode::ErrorOutput);
    let eof = run_experiment(&cfg).unwrap();
    let base = run_experiment(&ExperimentConfig {
        mode: FeedbackMode::None,
        ..cfg.clone()
    })
    .unwrap();
    let elapsed = start.elapsed();
    let best = eof.best_rmse();
    let wins = seed_wins(&eof, &base);
    verdict(
        7,
        "end-to-end Mackey-Glass benchmark",
        eof.seeds.len() == 10
            && best <= 0.01
            && wins >= 8
            && elapsed <= Duration::from_secs(300),
        &format!(
            "best de-normalized RMSE {best:.6} (<= 0.01; mean {:.6}, std {:.6}), beats feedforward baseline on {wins}/10 seeds (>= 8), {elapsed:.2?} for both runs",
            eof.mean_rmse(),
            eof.std_rmse()
        ),
    );

    let first = eof.report_csv();
    let again = run_experiment(&cfg).unwrap().report_csv();
    let dir = std::env::temp_dir().join(format!("rpnn-acceptance-{}", std::process::id()));
    eof.write_outputs(&dir).unwrap();
    let on_disk = std::fs::read(dir.join("report.csv")).unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    verdict(
        8,
        "determinism of report.csv",
        first == again && on_disk == first.as_bytes(),
        &format!(
            "re-run identical: {}, written file identical: {}",
            first == again,
            on_disk == first.as_bytes()
        ),
    );
}
