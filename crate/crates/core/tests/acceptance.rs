//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use gateservo::config::ScenarioFile;
use gateservo::geometry::{corners_in_camera, CameraModel, FeatureVec, GateSpec, Pose};
use gateservo::perception::{
    decode_featuremaps, dummy_mean_predictions, encode_featuremaps, perceive, rmse_eval,
    synthetic_truths, write_dataset, EvalSample, PerceptionConfig, SimRng, CNN_SIGMA_PX,
    FCNN_SIGMA_PX,
};
use gateservo::report::{cmd_eval_rmse, cmd_run, Overrides};
use gateservo::scenario::{orientation_start, run_scenario, Scenario, ScenarioRun};
use gateservo::servoing::IbvsOutput;
use gateservo::servoing::{
    desired_features, ibvs_step, interaction_matrix, point_rows, pseudo_inverse, IbvsConfig,
    VelocityCommand,
};
use gateservo::vehicle::{
    is_legal_transition, nav_update, DroneState, NavParams, NavPhase, NavState, PhaseKind,
};
use gateservo::vehicle::{NavConfig, VehicleConfig};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

// 1. Interaction matrix against finite differences of the true projection.
fn jacobian_fd() -> Check {
    let cam = CameraModel::default();
    let mut rng = SimRng::seed_from_u64(101);
    let dt = 1e-5;
    let mut worst: f64 = 0.0;
    let mut configs = 0;
    let mut corners_checked = 0;
    while configs < 1000 {
        let gate = GateSpec::new(Pose::at(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.5..1.5),
            rng.random_range(-PI..PI),
        ));
        let bearing = gate.pose.yaw + rng.random_range(-0.8..0.8);
        let dist = rng.random_range(0.8..4.0);
        let pos = gate.pose.position - Vector3::new(bearing.cos(), bearing.sin(), 0.0) * dist
            + Vector3::new(0.0, 0.0, rng.random_range(-0.5..0.5));
        let drone = Pose::new(pos, bearing + rng.random_range(-0.4..0.4));

        let now = corners_in_camera(&drone, &gate, 0.0);
        let visible: Vec<usize> = (0..4)
            .filter(|&i| {
                let p = now[i];
                let (u, v) = cam.project(&p);
                p.z > cam.min_depth
                    && (0.0..=cam.max_u()).contains(&u)
                    && (0.0..=cam.max_v()).contains(&v)
            })
            .collect();
        if visible.is_empty() {
            continue;
        }
        configs += 1;

        let cmd = VelocityCommand::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let twist = cmd.to_camera_twist();
        let moved = |sign: f64| {
            let h = sign * dt;
            let world_v = gateservo::geometry::rotate_yaw(&cmd.v_body, drone.yaw);
            Pose::new(drone.position + world_v * h, drone.yaw + cmd.yaw_rate * h)
        };
        let plus = corners_in_camera(&moved(1.0), &gate, 0.0);
        let minus = corners_in_camera(&moved(-1.0), &gate, 0.0);
        let norm = |p: &Vector3<f64>| (p.x / p.z, p.y / p.z);

        let mut fd = Vec::new();
        let mut analytic = Vec::new();
        for &i in &visible {
            let (xp, yp) = norm(&plus[i]);
            let (xm, ym) = norm(&minus[i]);
            fd.push((xp - xm) / (2.0 * dt));
            fd.push((yp - ym) / (2.0 * dt));
            let (x, y) = norm(&now[i]);
            for row in point_rows(x, y, now[i].z) {
                analytic.push(row.iter().zip(twist).map(|(a, b)| a * b).sum::<f64>());
            }
            corners_checked += 1;
        }
        let diff: f64 = fd
            .iter()
            .zip(&analytic)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rel = diff / scale.max(1e-12);
        worst = worst.max(rel);
        ensure(rel < 1e-3, || {
            format!("config {configs}: relative error {rel:.3e}")
        })?;
    }

    // The assembled matrix uses the same rows at the assumed depth.
    let fv = desired_features(1.0, 1.3, &cam);
    let l = interaction_matrix(&fv, &cam, 0.5, 2).map_err(|e| e.to_string())?;
    for (r, &i) in l.corners.iter().enumerate() {
        let (u, v) = fv.corner(i);
        let (x, y) = cam.normalize(u, v);
        let rows = point_rows(x, y, 0.5);
        for k in 0..2 {
            for c in 0..4 {
                ensure(l.matrix[(2 * r + k, c)] == rows[k][c], || {
                    "assembled matrix differs".into()
                })?;
            }
        }
    }
    Ok(format!(
        "{configs} configs, {corners_checked} corners, worst rel err {worst:.2e}"
    ))
}

/// Largest of the four identity residuals. The first two are measured
/// relative to the size of the matrix they reproduce.
fn moore_penrose_residual(a: &DMatrix<f64>) -> f64 {
    let p = pseudo_inverse(a);
    let r1 = (a * &p * a - a).amax() / a.amax().max(1.0);
    let r2 = (&p * a * &p - &p).amax() / p.amax().max(1.0);
    let ap = a * &p;
    let pa = &p * a;
    let r3 = (&ap - ap.transpose()).amax();
    let r4 = (&pa - pa.transpose()).amax();
    r1.max(r2).max(r3).max(r4)
}

// 2. Moore-Penrose identities.
fn pinv_identities() -> Check {
    let mut rng = SimRng::seed_from_u64(202);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let a = DMatrix::from_fn(8, 4, |_, _| normal.sample(&mut rng));
        let r = moore_penrose_residual(&a);
        worst = worst.max(r);
        ensure(r < 1e-8, || format!("random matrix {k}: residual {r:.3e}"))?;
    }
    for k in 0..1000 {
        let rank = rng.random_range(0..4);
        let b = DMatrix::from_fn(8, rank, |_, _| normal.sample(&mut rng));
        let c = DMatrix::from_fn(rank, 4, |_, _| normal.sample(&mut rng));
        let a = b * c;
        let r = moore_penrose_residual(&a);
        worst = worst.max(r);
        ensure(r < 1e-8, || {
            format!("rank-{rank} matrix {k}: residual {r:.3e}")
        })?;
    }
    Ok(format!(
        "2000 matrices (1000 rank-deficient), worst residual {worst:.2e}"
    ))
}

// 3. Zero at goal, linear in lambda.
fn zero_and_linearity() -> Check {
    let cam = CameraModel::default();
    let cfg = IbvsConfig::default();
    let desired = desired_features(1.0, cfg.desired_distance, &cam);
    let out = ibvs_step(&desired, &desired, &cfg, &cam);
    ensure(
        out.command == VelocityCommand::zero() && out.error_px == 0.0,
        || format!("command at goal {:?}", out.command),
    )?;

    let mut rng = SimRng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut measured = desired;
        for c in measured.coords.iter_mut() {
            *c += rng.random_range(-40.0..40.0);
        }
        let base = ibvs_step(
            &measured,
            &desired,
            &IbvsConfig { lambda: 1.0, ..cfg },
            &cam,
        )
        .unclamped;
        let lambda = rng.random_range(0.01..5.0);
        let scaled = ibvs_step(&measured, &desired, &IbvsConfig { lambda, ..cfg }, &cam).unclamped;
        let a = [base.v_body.x, base.v_body.y, base.v_body.z, base.yaw_rate];
        let b = [
            scaled.v_body.x,
            scaled.v_body.y,
            scaled.v_body.z,
            scaled.yaw_rate,
        ];
        let norm = a.iter().map(|x| (lambda * x).powi(2)).sum::<f64>().sqrt();
        let diff = a
            .iter()
            .zip(b)
            .map(|(x, y)| (lambda * x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let rel = diff / norm;
        worst = worst.max(rel);
        ensure(rel <= 1e-12, || {
            format!("lambda {lambda}: relative deviation {rel:.3e}")
        })?;
    }
    Ok(format!(
        "exact zero at goal, worst linearity deviation {worst:.2e}"
    ))
}

fn first_threshold_hit(run: &ScenarioRun, threshold: f64) -> Option<f64> {
    run.log
        .rows
        .iter()
        .find(|r| r.err_px <= threshold)
        .map(|r| r.t)
}

// 4. Noise-free convergence from frontal and oblique starts.
fn noise_free_convergence() -> Check {
    let mut lines = Vec::new();
    let mut starts: Vec<(String, Scenario)> = [2.0, 2.5, 3.0]
        .iter()
        .map(|&d| (format!("frontal {d} m"), Scenario::frontal(d, 15.0)))
        .collect();
    for bearing in [-45.0, 45.0] {
        let mut sc = Scenario::frontal(2.0, 15.0);
        sc.start_pose = orientation_start(&sc, bearing, 2.0);
        starts.push((format!("{bearing:+} deg"), sc));
    }
    for (label, mut sc) in starts {
        sc.perception = PerceptionConfig::oracle();
        let t0 = Instant::now();
        let run = run_scenario(&sc).map_err(|e| e.to_string())?;
        let wall = t0.elapsed().as_secs_f64();
        let hit = first_threshold_hit(&run, 8.0);
        let passed = run.metrics.traversal_times.first().copied();
        ensure(!run.metrics.crashed, || {
            format!("{label}: crashed {:?}", run.crash)
        })?;
        ensure(hit.is_some(), || {
            format!("{label}: error never reached 8 px")
        })?;
        ensure(passed.is_some_and(|t| t <= 15.0), || {
            format!("{label}: no traversal within 15 s")
        })?;
        ensure(wall < 2.0, || format!("{label}: runtime {wall:.2} s"))?;
        lines.push(format!(
            "{label}: <=8px at {:.2}s, through at {:.2}s",
            hit.unwrap(),
            passed.unwrap()
        ));
    }
    Ok(lines.join("; "))
}

// 5. Two-gate endurance circuit.
fn endurance() -> Check {
    let sc = Scenario::two_gate_circuit(4.0, 240.0);
    let t0 = Instant::now();
    let a = run_scenario(&sc).map_err(|e| e.to_string())?;
    let wall = t0.elapsed().as_secs_f64();
    let b = run_scenario(&sc).map_err(|e| e.to_string())?;
    let m = &a.metrics;
    ensure(m.gates_passed >= 8, || {
        format!("only {} traversals", m.gates_passed)
    })?;
    ensure(!m.crashed, || format!("crashed: {:?}", a.crash))?;
    ensure(
        a.log.to_csv() == b.log.to_csv() && a.metrics == b.metrics,
        || "runs differ".into(),
    )?;
    ensure(m.peak_speed <= 2.0 + 1e-9, || {
        format!("peak speed {}", m.peak_speed)
    })?;
    ensure(wall < 10.0, || format!("runtime {wall:.2} s"))?;
    Ok(format!(
        "{} traversals in 240 s, distance {:.1} m, peak speed {:.3} m/s, runtime {wall:.2} s",
        m.gates_passed, m.distance, m.peak_speed
    ))
}

fn noisy_frontal(sigma: f64, bearing: f64, seed: u64) -> Result<ScenarioRun, String> {
    let mut sc = Scenario::frontal(2.0, 15.0);
    sc.start_pose = orientation_start(&sc, bearing, 2.0);
    sc.perception = PerceptionConfig::gaussian(sigma);
    sc.seed = seed;
    sc.stop_after_gates = Some(1);
    run_scenario(&sc).map_err(|e| e.to_string())
}

fn traversed(run: &ScenarioRun) -> bool {
    !run.metrics.crashed && run.metrics.gates_passed >= 1
}

// 6. Robustness to detector noise.
fn noise_robustness() -> Check {
    let mut ok = 0;
    for seed in 0..5 {
        ok += traversed(&noisy_frontal(CNN_SIGMA_PX, 0.0, seed)?) as usize;
    }
    ensure(ok >= 4, || {
        format!("sigma {CNN_SIGMA_PX}: {ok}/5 traversed")
    })?;
    let mut report = Vec::new();
    for bearing in [-45.0, 0.0, 45.0] {
        let mut n = 0;
        for seed in 0..5 {
            n += traversed(&noisy_frontal(FCNN_SIGMA_PX, bearing, seed)?) as usize;
        }
        report.push(format!("{bearing:+}deg {n}/5"));
    }
    Ok(format!(
        "sigma {CNN_SIGMA_PX}: {ok}/5 at 0deg; sigma {FCNN_SIGMA_PX} (report only): {}",
        report.join(", ")
    ))
}

// 7. Feature-map quantization.
fn featuremap_codec() -> Check {
    let mut rng = SimRng::seed_from_u64(707);
    let mut sq = 0.0;
    let mut n = 0usize;
    let mut worst: f64 = 0.0;
    for _ in 0..25_000 {
        let coords: [f64; 8] = std::array::from_fn(|_| rng.random_range(0.0..=159.0));
        let fv = FeatureVec::all_visible(coords);
        let back = decode_featuremaps(&encode_featuremaps(&fv, 20, 1.0));
        for k in 0..8 {
            let e = back.coords[k] - coords[k];
            worst = worst.max(e.abs());
            sq += e * e;
            n += 1;
        }
    }
    let rmse = (sq / n as f64).sqrt();
    let expected = 8.0 / 12f64.sqrt();
    ensure(worst <= 4.0, || format!("max error {worst}"))?;
    ensure((rmse - expected).abs() <= 0.05, || {
        format!("rmse {rmse:.4}, expected {expected:.4}")
    })?;
    Ok(format!(
        "{} corners, max error {worst:.3} px, rmse {rmse:.4} px",
        n / 2
    ))
}

// 8. Offline RMSE harness, end to end through the dataset file.
fn rmse_harness() -> Check {
    let cam = CameraModel::default();
    let mut rng = SimRng::seed_from_u64(808);
    let truths = synthetic_truths(100_000, &cam, &mut rng);
    let noise = PerceptionConfig::gaussian(CNN_SIGMA_PX);
    let samples: Vec<EvalSample> = truths
        .iter()
        .map(|t| EvalSample {
            truth: *t,
            prediction: perceive(t, &noise, &cam, &mut rng),
        })
        .collect();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("noisy.csv");
    write_dataset(&path, &samples).map_err(|e| e.to_string())?;
    let report = cmd_eval_rmse(&path).map_err(|e| e.to_string())?;
    ensure((report.overall - CNN_SIGMA_PX).abs() <= 0.02, || {
        format!("noisy rmse {}", report.overall)
    })?;

    let dummy = dummy_mean_predictions(&truths);
    let got = rmse_eval(&dummy, &truths).map_err(|e| e.to_string())?;
    // Pooled std: per-coordinate deviations from that coordinate's mean over
    // the samples where it is visible, pooled over all such coordinates.
    let mut ss = 0.0;
    let mut count = 0usize;
    for k in 0..8 {
        let vals: Vec<f64> = truths
            .iter()
            .filter(|t| t.visible[k / 2])
            .map(|t| t.coords[k])
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        ss += vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        count += vals.len();
    }
    let pooled = (ss / count as f64).sqrt();
    ensure((got - pooled).abs() <= 1e-9 * pooled, || {
        format!("dummy rmse {got}, pooled std {pooled}")
    })?;
    Ok(format!(
        "noisy rmse {:.4} px over {} coordinates; dummy-mean {got:.4} = pooled std",
        report.overall, report.coordinates
    ))
}

// 9. Byte-identical trajectories for every shipped config.
fn determinism() -> Check {
    let mut names = Vec::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    ensure(!paths.is_empty(), || "no configs found".into())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for path in &paths {
        let file = ScenarioFile::load(path).map_err(|e| e.to_string())?;
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let mut bytes = Vec::new();
        for pass in 0..2 {
            let out = dir.path().join(format!("{stem}_{pass}"));
            let (report, _) =
                cmd_run(&file, Overrides::default(), &out).map_err(|e| e.to_string())?;
            bytes.push(std::fs::read(&report.trajectory_csv).map_err(|e| e.to_string())?);
        }
        ensure(bytes[0] == bytes[1], || {
            format!("{stem}: trajectories differ")
        })?;
        names.push(stem);
    }
    Ok(format!("{} configs: {}", names.len(), names.join(", ")))
}

// 10. State-machine fuzz.
fn state_machine_fuzz() -> Check {
    let params = NavParams::new(
        &NavConfig::default(),
        &IbvsConfig::default(),
        &VehicleConfig::default(),
    );
    let tc = params.control_period;
    let fwd_tol = params.nav.forward_speed * tc + 1e-9;
    let yaw_tol = params.nav.turn_rate * tc + 1e-9;
    let cam = CameraModel::default();
    let mut rng = SimRng::seed_from_u64(1010);
    let mut legs = 0usize;
    let mut steps = 0usize;

    let random_input = |rng: &mut SimRng| {
        let mut seen = FeatureVec::none(&cam);
        for v in seen.visible.iter_mut() {
            *v = rng.random_bool(0.8);
        }
        let error_px = if seen.n_visible() < 2 || rng.random_bool(0.05) {
            f64::INFINITY
        } else {
            rng.random_range(0.0..60.0)
        };
        let cmd = if error_px.is_infinite() {
            VelocityCommand::search(0.5)
        } else {
            VelocityCommand::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-1.5..1.5),
            )
        };
        let drone = DroneState::at_rest(Pose::at(0.0, 0.0, rng.random_range(0.0..2.0), 0.0));
        let out = IbvsOutput {
            command: cmd,
            unclamped: cmd,
            error_px,
            corners_used: seen.n_visible(),
        };
        (drone, seen, out)
    };

    for seq in 0..1_000_000u32 {
        let mut p = params;
        p.nav.gate_budget = rng.random_bool(0.2).then(|| rng.random_range(1..4));
        let mut nav = NavState::new(rng.random_range(1..4));
        nav.phase = match rng.random_range(0..4) {
            0 => NavPhase::Takeoff,
            1 => NavPhase::GateNavigation,
            2 => NavPhase::Search,
            _ => NavPhase::ForwardAndTurn {
                traveled: rng.random_range(0.0..1.0),
                turned: 0.0,
            },
        };
        // (forward, yaw) accumulated since the current leg started at zero.
        let mut leg: Option<(f64, f64)> = None;
        let len = rng.random_range(1..16);
        let mut i = 0;
        while i < len || leg.is_some() {
            let (drone, seen, out) = random_input(&mut rng);
            let (next, cmd) = nav_update(&nav, &drone, &seen, &out, &p);
            steps += 1;
            let (from, to) = (nav.phase.kind(), next.phase.kind());
            ensure(is_legal_transition(from, to), || {
                format!("sequence {seq}: {from:?} -> {to:?}")
            })?;
            ensure(cmd.is_finite(), || {
                format!("sequence {seq}: non-finite command")
            })?;
            ensure(next.target_gate < next.gate_count, || {
                format!("sequence {seq}: bad target")
            })?;

            if from == PhaseKind::GateNavigation && to == PhaseKind::ForwardAndTurn {
                leg = Some((0.0, 0.0));
            }
            if let Some((fwd, yaw)) = leg.as_mut() {
                if to == PhaseKind::ForwardAndTurn {
                    *fwd += cmd.v_body.x * tc;
                    *yaw += cmd.yaw_rate * tc;
                    ensure(cmd.v_body.y == 0.0 && cmd.v_body.z == 0.0, || {
                        format!("sequence {seq}: lateral motion in leg")
                    })?;
                } else {
                    let (fwd, yaw) = (*fwd, *yaw);
                    let f_ok = fwd >= params.nav.forward_distance - 1e-9
                        && fwd <= params.nav.forward_distance + fwd_tol;
                    let y_ok = yaw >= PI - 1e-9 && yaw <= PI + yaw_tol;
                    ensure(f_ok && y_ok, || {
                        format!("sequence {seq}: leg ended at forward {fwd}, yaw {yaw}")
                    })?;
                    legs += 1;
                    leg = None;
                }
            }
            nav = next;
            i += 1;
            if i > 10_000 {
                return Err(format!("sequence {seq}: open-loop leg never ended"));
            }
        }
    }
    ensure(legs > 100_000, || {
        format!("only {legs} complete legs exercised")
    })?;
    Ok(format!(
        "1000000 sequences, {steps} updates, {legs} complete open-loop legs"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("AC1 interaction matrix vs finite differences", jacobian_fd),
        ("AC2 pseudo-inverse identities", pinv_identities),
        ("AC3 zero at goal, lambda linearity", zero_and_linearity),
        ("AC4 noise-free convergence", noise_free_convergence),
        ("AC5 two-gate endurance", endurance),
        ("AC6 noise robustness", noise_robustness),
        ("AC7 feature-map codec", featuremap_codec),
        ("AC8 rmse harness", rmse_harness),
        ("AC9 determinism of shipped configs", determinism),
        ("AC10 state-machine fuzz", state_machine_fuzz),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t0 = Instant::now();
        let result = check();
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.2}s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
