use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use trolleypose::filter::{FilterParams, FilterState, HeadingStats, PoseObservation};
use trolleypose::geometry::{estimate_center, CameraModel, CenterMode, ImageKeypoint, Point3, TrolleyModel};
use trolleypose::pipeline::{process_frame, PipelineConfig};
use trolleypose::simulator::{generate_frame, place_keypoints, run_scenario, Occluder, ScenarioConfig, Waypoint};

fn camera() -> CameraModel {
    CameraModel::level(500.0, 500.0, 320.0, 240.0, 1.2, 640.0, 480.0)
}

fn tilted(pitch: f64, roll: f64, height: f64) -> CameraModel {
    CameraModel {
        camera_height: height,
        ..camera()
    }
    .with_tilt(pitch, roll)
}

proptest! {
    #[test]
    fn project_backproject_round_trip(
        pitch in -0.3..0.5f64, roll in -0.2..0.2f64, lambda in 0.4..3.0f64,
        frac in 0.0..0.95f64, z in 0.5..15.0f64, lateral in -0.5..0.5f64,
    ) {
        let cam = tilted(pitch, roll, lambda);
        let height = frac * lambda;
        let n = cam.ground_normal;
        let x = lateral * z;
        let y = (-(lambda - height) - n.x * x - n.z * z) / n.y;
        let p = Point3::new(x, y, z);
        let mut kp = cam.project(0, p).unwrap();
        kp.visible = true;
        if let Ok(back) = cam.backproject(&kp, height) {
            prop_assert!(back.distance(p) < 1e-9);
            // n·P = -(λ - ζ) for points below the camera
            prop_assert!((n.dot(back) + (lambda - height)).abs() <= 1e-9);
        }
    }

    #[test]
    fn orientation_corrected_subsets_agree(
        x in -1.5..1.5f64, y in 3.0..9.0f64, theta in 0.0..360.0f64,
        mask in 1u8..64, pitch in 0.0..0.3f64,
    ) {
        let cam = tilted(pitch, 0.0, 1.2);
        let model = TrolleyModel::default();
        let truth = PoseObservation::new(x, y, theta);
        let kps: Vec<ImageKeypoint> = place_keypoints(&cam, &model, &truth)
            .iter()
            .enumerate()
            .map(|(i, p)| cam.project(i, *p).unwrap())
            .collect();
        prop_assume!(kps.iter().all(|k| k.visible));
        let subset: Vec<ImageKeypoint> = kps
            .iter()
            .map(|k| if mask & (1 << k.index) != 0 { *k } else { ImageKeypoint::hidden(k.index) })
            .collect();
        let full = estimate_center(&cam, &model, &kps, CenterMode::OrientationCorrected, Some(truth.theta.radians())).unwrap();
        let part = estimate_center(&cam, &model, &subset, CenterMode::OrientationCorrected, Some(truth.theta.radians())).unwrap();
        prop_assert!(full.center.distance(part.center) < 1e-9);
        prop_assert!(full.center.distance(cam.from_ground(x, y, 0.0)) < 1e-9);
    }

    #[test]
    fn enlarging_an_occluder_never_reveals_keypoints(
        u0 in 0.0..600.0f64, v0 in 0.0..440.0f64, w in 1.0..200.0f64, h in 1.0..200.0f64,
        grow in 0.0..100.0f64, frame in 0u64..50,
    ) {
        let mut s = ScenarioConfig::stationary(camera(), 0.3, 5.0, 40.0, 50);
        s.trajectory.push(Waypoint { t: 5.0, x: -0.5, y: 7.0, theta: 100.0 });
        s.pixel_noise_sigma = 0.5;
        let rect = Occluder { u_min: u0, v_min: v0, u_max: u0 + w, v_max: v0 + h, start_frame: 0, end_frame: None, velocity: [0.0, 0.0] };
        s.occluders = vec![rect];
        let small = generate_frame(&s, frame).unwrap().1;
        s.occluders = vec![Occluder { u_min: u0 - grow, v_min: v0 - grow, u_max: u0 + w + grow, v_max: v0 + h + grow, ..rect }];
        let big = generate_frame(&s, frame).unwrap().1;
        for (a, b) in small.keypoints.iter().zip(&big.keypoints) {
            prop_assert!(a.visible || !b.visible);
        }
    }
}

#[test]
fn noiseless_keypoints_back_project_to_the_world() {
    let mut s = ScenarioConfig::stationary(tilted(0.1, 0.05, 1.3), -0.5, 4.0, 15.0, 40);
    s.trajectory.push(Waypoint {
        t: 3.9,
        x: 1.0,
        y: 8.0,
        theta: 300.0,
    });
    for k in 0..s.frame_count {
        let (truth, frame) = generate_frame(&s, k).unwrap();
        let world = place_keypoints(&s.camera, &s.model, &truth);
        for kp in frame.keypoints.iter().filter(|k| k.visible) {
            let back = s.camera.backproject(kp, s.model.keypoints[kp.index].height).unwrap();
            assert!(back.distance(world[kp.index]) < 1e-9);
        }
    }
}

#[test]
fn constant_scene_keeps_single_frame_estimate() {
    let s = ScenarioConfig::stationary(camera(), 0.7, 5.5, 250.0, 30);
    let p = PipelineConfig::new(s.camera.clone(), s.model.clone(), s.bin_count);
    let mut state = p.initial_state();
    let (_, frame) = generate_frame(&s, 0).unwrap();
    let first = process_frame(&p, &mut state, &frame).unwrap();
    for k in 1..s.frame_count {
        let (_, frame) = generate_frame(&s, k).unwrap();
        let est = process_frame(&p, &mut state, &frame).unwrap();
        assert_eq!((est.x, est.y, est.theta), (first.x, first.y, first.theta));
    }
}

#[test]
fn runs_are_bitwise_repeatable() {
    let mut s = ScenarioConfig::stationary(camera(), 0.0, 6.0, 10.0, 120);
    s.trajectory.push(Waypoint {
        t: 12.0,
        x: 0.5,
        y: 3.0,
        theta: 80.0,
    });
    s.pixel_noise_sigma = 1.5;
    s.orientation_noise.mu_jitter_sigma = 3.0;
    s.orientation_noise.uniform_floor = 0.3;
    s.outliers.rate = 0.05;
    s.outliers.magnitude = 50.0;
    s.rng_seed = 11;
    let p = PipelineConfig::new(s.camera.clone(), s.model.clone(), s.bin_count);
    let a = run_scenario(&s, &p, false).unwrap();
    let b = run_scenario(&s, &p, false).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_frame_after_the_first_has_output() {
    let mut s = ScenarioConfig::stationary(camera(), 0.0, 5.0, 0.0, 80);
    s.pixel_noise_sigma = 1.0;
    for start in [10, 30, 55] {
        s.occluders.push(Occluder {
            u_min: 0.0,
            v_min: 0.0,
            u_max: 640.0,
            v_max: 480.0,
            start_frame: start,
            end_frame: Some(start + 12),
            velocity: [0.0, 0.0],
        });
    }
    let p = PipelineConfig::new(s.camera.clone(), s.model.clone(), s.bin_count);
    let run = run_scenario(&s, &p, true).unwrap();
    assert!(run.records.iter().all(|r| r.estimate.is_some()));
    assert_eq!(run.summary.degraded_frames, 39);
    assert_eq!(run.summary.lost_frames, 0);
}

#[test]
fn filter_suppresses_sparse_outliers() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let params = FilterParams::default();
    let noise = 0.05;
    let spike = params.z_threshold * noise * 3.0 + 0.2;
    let mut state = FilterState::new(params, HeadingStats::Circular);
    let (mut raw, mut filtered) = (Vec::new(), Vec::new());
    for _ in 0..200 {
        let n: f64 = rng.sample(StandardNormal);
        let mut x = 2.0 + noise * n;
        if rng.random_bool(0.05) {
            x += if rng.random_bool(0.5) { spike } else { -spike };
        }
        raw.push(x - 2.0);
        filtered.push(state.update(PoseObservation::new(x, 0.0, 0.0)).pose.x - 2.0);
    }
    let sd = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / v.len() as f64).sqrt()
    };
    assert!(sd(&filtered) < sd(&raw), "{} vs {}", sd(&filtered), sd(&raw));
}

#[test]
fn component_wise_agrees_with_corrected_for_zero_offsets() {
    // with every offset zero there is nothing to rotate
    let cam = camera();
    let mut model = TrolleyModel::default();
    for k in model.keypoints.iter_mut() {
        k.offset_x = 0.0;
        k.offset_y = 0.0;
        k.height = 0.0;
    }
    let truth = PoseObservation::new(0.2, 4.0, 0.0);
    let kps: Vec<ImageKeypoint> = place_keypoints(&cam, &model, &truth)
        .iter()
        .enumerate()
        .map(|(i, p)| cam.project(i, *p).unwrap())
        .collect();
    let lit = estimate_center(&cam, &model, &kps, CenterMode::ComponentWise, None).unwrap();
    let cor = estimate_center(&cam, &model, &kps, CenterMode::OrientationCorrected, Some(0.0)).unwrap();
    assert!(lit.center.distance(cor.center) < 1e-12);
}
