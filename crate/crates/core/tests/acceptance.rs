//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use turntrack::evolution::{
    build_increments, curvature_center, solve_evolution, CenterMode, ObservationWindow,
};
use turntrack::model::{f_dynamics, jacobian_a, InputVector, TargetState, TurnDirection};
use turntrack::pipeline::{run_scenario, write_predictions, write_track, RunArtifacts, RunConfig};
use turntrack::predictor::{predict_horizon, PredictionConfig};
use turntrack::{Mat2, Vec2};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn circle_window(center: Vec2, r: f64, delta: f64, dt: f64, n: usize) -> ObservationWindow {
    ObservationWindow::from_samples(
        n,
        (0..n).map(|k| {
            (
                k as f64 * dt,
                center + Vec2::from_angle(0.3 + delta * k as f64).scale(r),
            )
        }),
    )
    .unwrap()
}

fn config(json: &str) -> RunConfig {
    RunConfig::from_json(json).unwrap()
}

fn run(json: &str, seed: u64) -> RunArtifacts {
    let mut cfg = config(json);
    cfg.set_seed(seed);
    run_scenario(&cfg).unwrap()
}

const NOISELESS: &str = r#"{"scenario":{"kind":"circle","radius":10,"speed":5,"dt":0.1,"noise_sigma":0,"steps":100},
    "filter":{"q":[[0,0],[0,0]],"r":[[1e-12,0],[0,1e-12]]}}"#;
const NOISY: &str = r#"{"scenario":{"kind":"circle","radius":10,"speed":5,"dt":0.1,"noise_sigma":0.5,"steps":600}}"#;
const DROPOUT: &str = r#"{"scenario":{"kind":"circle","radius":10,"speed":5,"dt":0.1,"noise_sigma":0.5,"steps":600,"dropout_prob":0.2}}"#;
const FIGURE_EIGHT: &str = r#"{"scenario":{"kind":"lemniscate","halfwidth":10,"param_rate":0.25,"dt":0.1,"noise_sigma":0.25,"steps":800}}"#;

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    o.detail = format!(
        "{}; {:.3} s (limit {} s)",
        o.detail,
        took.as_secs_f64(),
        limit.as_secs_f64()
    );
    o.pass &= took < limit;
    o
}

fn c1_evolution_exactness() -> Outcome {
    timed(Duration::from_secs(1), || {
        let w = circle_window(Vec2::new(3.0, 4.0), 10.0, 0.05, 0.1, 20);
        let ev = solve_evolution(&build_increments(&w).unwrap()).unwrap();
        let err = (ev.delta - 0.05).abs();
        let unit = (ev.c * ev.c + ev.s * ev.s - 1.0).abs();
        outcome(
            err < 1e-9 && unit < 1e-12,
            format!("|δ−0.05| = {err:.3e}, |c²+s²−1| = {unit:.3e}"),
        )
    })
}

fn c2_center_recovery() -> Outcome {
    let truth = Vec2::new(3.0, 4.0);
    let w = circle_window(truth, 10.0, 0.05, 0.1, 20);
    let ev = solve_evolution(&build_increments(&w).unwrap()).unwrap();
    let mid = curvature_center(&w, &ev, CenterMode::MidpointCorrected)
        .unwrap()
        .center
        .unwrap();
    let raw = curvature_center(&w, &ev, CenterMode::Raw)
        .unwrap()
        .center
        .unwrap();
    let (em, er) = (mid.distance(truth), raw.distance(truth));
    outcome(
        em < 1e-9 && er < 0.5,
        format!("midpoint-corrected {em:.3e} m, raw {er:.4} m"),
    )
}

fn uniform(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn c3_jacobian() -> Outcome {
    timed(Duration::from_secs(1), || {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut worst = 0.0_f64;
        for _ in 0..1000 {
            let center = Vec2::new(
                200.0 * uniform(&mut rng) - 100.0,
                200.0 * uniform(&mut rng) - 100.0,
            );
            let rho = 1.0 + 99.0 * uniform(&mut rng);
            let pos = center + Vec2::from_angle(2.0 * PI * uniform(&mut rng)).scale(rho);
            let speed = 0.1 + 49.9 * uniform(&mut rng);
            let turn = if uniform(&mut rng) < 0.5 {
                TurnDirection::CounterClockwise
            } else {
                TurnDirection::Clockwise
            };
            let u = InputVector::with_turn(speed, center, turn).unwrap();
            let a = jacobian_a(&TargetState::from(pos), &u).unwrap();
            let h = 1e-6 * rho;
            let mut fd = Mat2::ZERO;
            for (j, dir) in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]
                .into_iter()
                .enumerate()
            {
                let fp = f_dynamics(&TargetState::from(pos + dir.scale(h)), &u).unwrap();
                let fm = f_dynamics(&TargetState::from(pos - dir.scale(h)), &u).unwrap();
                let col = (fp - fm).scale(0.5 / h);
                fd.m[0][j] = col.e;
                fd.m[1][j] = col.n;
            }
            worst = worst.max((a - fd).max_abs() / a.max_abs().max(f64::MIN_POSITIVE));
        }
        outcome(
            worst < 1e-5,
            format!("worst relative error {worst:.3e} over 1000 states"),
        )
    })
}

fn c4_noiseless_tracking(runs: &mut Vec<RunArtifacts>) -> Outcome {
    let r = run(NOISELESS, 0);
    let rmse = r.metrics.rmse_filtered.unwrap();
    runs.push(r);
    outcome(rmse < 1e-3, format!("filtered RMSE {rmse:.3e} m"))
}

fn c5_noise_reduction(runs: &mut Vec<RunArtifacts>) -> Outcome {
    timed(Duration::from_secs(5), || {
        let mut wins = 0;
        let mut worst: f64 = 0.0;
        for seed in 0..10 {
            let r = run(NOISY, seed);
            let (raw, filt) = (
                r.metrics.rmse_raw.unwrap(),
                r.metrics.rmse_filtered.unwrap(),
            );
            wins += usize::from(filt < raw);
            worst = worst.max(filt / raw);
            runs.push(r);
        }
        outcome(
            wins >= 9,
            format!("{wins}/10 seeds improve, worst filtered/raw ratio {worst:.3}"),
        )
    })
}

fn c6_prediction_exactness() -> Outcome {
    let (center, r, delta, dt) = (Vec2::new(3.0, 4.0), 10.0, 0.05, 0.1);
    let w = circle_window(center, r, delta, dt, 20);
    let cfg = PredictionConfig {
        window_len: 20,
        horizon_steps: 20,
        ..Default::default()
    };
    let pred = predict_horizon(&w, &cfg).unwrap();
    let expect = center + Vec2::from_angle(0.3 + delta * 39.0).scale(r);
    let end_err = pred.points.last().unwrap().1.distance(expect);

    let delta = 2.0 * PI / 100.0;
    let w = circle_window(center, r, delta, dt, 20);
    let cfg = PredictionConfig {
        window_len: 20,
        horizon_steps: 100,
        ..Default::default()
    };
    let pred = predict_horizon(&w, &cfg).unwrap();
    let closure = pred.points.last().unwrap().1.distance(w.last().unwrap().1);
    outcome(
        end_err < 1e-6 && closure < 1e-6,
        format!("horizon-20 endpoint {end_err:.3e} m, full-revolution closure {closure:.3e} m"),
    )
}

fn min_eig_ok(p: &Mat2) -> bool {
    let (lo, _) = p.sym_eigenvalues();
    lo >= -1e-12 * p.trace().abs()
}

fn c7_covariance_health(runs: &[RunArtifacts]) -> Outcome {
    let (mut checked, mut updates) = (0usize, 0usize);
    let mut asym: f64 = 0.0;
    let mut failures = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        for step in &run.steps {
            let Some(p) = step.covariance else { continue };
            checked += 1;
            let a = p.asymmetry();
            asym = asym.max(a);
            if a > 1e-12 || !min_eig_ok(&p) {
                failures.push(format!("run {i} t={} P not symmetric PSD", step.t));
            }
            if let Some(rep) = &step.report {
                if let Some(post) = rep.posterior_cov {
                    updates += 1;
                    let drop = (rep.prior_cov - post).symmetrized();
                    if !min_eig_ok(&drop) {
                        failures.push(format!("run {i} t={} P_before − P_after not PSD", step.t));
                    }
                }
            }
        }
    }
    let detail = format!("{checked} covariances, {updates} updates, max asymmetry {asym:.2e}");
    match failures.first() {
        None => outcome(true, detail),
        Some(f) => outcome(
            false,
            format!("{detail}; {} failures, first: {f}", failures.len()),
        ),
    }
}

/// Every row after the first measurement carries a finite filtered position.
fn filtered_finite(r: &RunArtifacts) -> bool {
    r.rows
        .iter()
        .skip_while(|row| row.measurement.is_none())
        .all(|row| row.filtered.is_some_and(|f| f.is_finite()))
}

fn c8_dropout() -> Outcome {
    let mut wins = 0;
    let mut finite = true;
    for seed in 0..10 {
        let r = run(DROPOUT, seed);
        finite &= filtered_finite(&r);
        let (raw, filt) = (
            r.metrics.rmse_raw.unwrap(),
            r.metrics.rmse_filtered.unwrap(),
        );
        wins += usize::from(filt < raw);
    }
    outcome(
        finite && wins >= 8,
        format!("{wins}/10 seeds improve, all outputs finite: {finite}"),
    )
}

fn c9_figure_eight() -> Outcome {
    let (mut h5, mut h20) = (0.0, 0.0);
    let mut finite = true;
    for seed in 0..20 {
        let r = run(FIGURE_EIGHT, seed);
        finite &= filtered_finite(&r);
        finite &= r
            .predictions
            .iter()
            .all(|p| p.points.iter().all(|(t, q)| t.is_finite() && q.is_finite()));
        h5 += r.metrics.horizon(5).unwrap().mean_error / 20.0;
        h20 += r.metrics.horizon(20).unwrap().mean_error / 20.0;
    }
    outcome(
        finite && h5 < h20,
        format!("mean error h5 {h5:.4} m < h20 {h20:.4} m, all outputs finite: {finite}"),
    )
}

fn csv_bytes(json: &str, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    let r = run(json, seed);
    let track = std::fs::read(write_track(dir.path(), &r).unwrap()).unwrap();
    let preds = std::fs::read(write_predictions(dir.path(), &r).unwrap()).unwrap();
    (track, preds)
}

fn c10_determinism() -> Outcome {
    let cases = [(NOISELESS, 0), (NOISY, 7), (DROPOUT, 3), (FIGURE_EIGHT, 11)];
    let same = cases
        .iter()
        .all(|&(json, seed)| csv_bytes(json, seed) == csv_bytes(json, seed));
    outcome(
        same,
        format!("{} configurations compared byte for byte", cases.len()),
    )
}

fn main() {
    let mut runs = Vec::new();
    let results = [
        ("1 evolution-matrix exactness", c1_evolution_exactness()),
        ("2 curvature-center recovery", c2_center_recovery()),
        ("3 Jacobian consistency", c3_jacobian()),
        ("4 EKF noiseless tracking", c4_noiseless_tracking(&mut runs)),
        ("5 noise reduction", c5_noise_reduction(&mut runs)),
        ("6 prediction exactness", c6_prediction_exactness()),
        ("7 covariance health", c7_covariance_health(&runs)),
        ("8 dropout robustness", c8_dropout()),
        ("9 figure-eight stress", c9_figure_eight()),
        ("10 determinism", c10_determinism()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
