use std::fs;

use qvr_core::foveation::DisplayConfig;
use qvr_core::liwc::MotionSample;
use qvr_harness::presets;
use qvr_harness::trace::{
    generate_trace, CustomScene, MotionModel, SceneModel, TraceKind, TraceSpec, CSV_TRACE_HEADER,
};
use qvr_harness::HarnessError;

fn display() -> DisplayConfig {
    DisplayConfig::default()
}

#[test]
fn still_trace_holds_the_head_and_gaze() {
    let trace = generate_trace(&TraceSpec::synthetic("viking", MotionModel::Still, 20, 1), &display()).unwrap();
    assert_eq!(trace.len(), 20);
    for (i, frame) in trace.iter().enumerate() {
        assert_eq!(frame.motion, MotionSample::STILL);
        assert_eq!(frame.gaze_px, display().center());
        assert_eq!(frame.scene.frame_id, i as u64);
        assert_eq!(frame.scene.triangles, 2_800_000);
        let (lo, hi) = presets::find("viking").unwrap().f_range;
        assert!((lo..=hi).contains(&frame.scene.interactive_fraction_f));
        frame.scene.density.check_normalized().unwrap();
    }
}

#[test]
fn synthetic_traces_are_seeded() {
    let spec = TraceSpec::synthetic("grid", MotionModel::SaccadeMix, 200, 9);
    let a = generate_trace(&spec, &display()).unwrap();
    let b = generate_trace(&spec, &display()).unwrap();
    assert_eq!(a, b);
    let c = generate_trace(&TraceSpec { seed: 10, ..spec }, &display()).unwrap();
    assert_ne!(a, c);
    // Saccades move the gaze; it always stays on the display.
    assert!(a.iter().any(|f| f.motion.gaze_delta != (0.0, 0.0)));
    for f in &a {
        assert!((0.0..=1920.0).contains(&f.gaze_px.0) && (0.0..=2160.0).contains(&f.gaze_px.1));
    }
}

#[test]
fn pan_trace_moves_the_head() {
    let trace = generate_trace(&TraceSpec::synthetic("sponza", MotionModel::Pan, 30, 2), &display()).unwrap();
    assert!(trace.iter().skip(1).all(|f| f.motion.d6 != [0.0; 6]));
}

#[test]
fn custom_scene_overrides_the_preset() {
    let spec = TraceSpec {
        scene_model: SceneModel::Custom(CustomScene {
            triangles: 1234,
            f_range: (0.3, 0.3),
            density_core_deg: 1.0,
            density_power: 0.0,
        }),
        ..TraceSpec::synthetic("grid", MotionModel::Still, 3, 0)
    };
    let trace = generate_trace(&spec, &display()).unwrap();
    assert!(trace
        .iter()
        .all(|f| f.scene.triangles == 1234 && f.scene.interactive_fraction_f == 0.3));
}

#[test]
fn invalid_specs_are_rejected() {
    let base = TraceSpec::synthetic("grid", MotionModel::Still, 10, 0);
    let zero = TraceSpec {
        frames: 0,
        ..base.clone()
    };
    assert!(matches!(generate_trace(&zero, &display()), Err(HarnessError::Spec(_))));
    let unknown = TraceSpec::synthetic("quake", MotionModel::Still, 10, 0);
    assert!(matches!(
        generate_trace(&unknown, &display()),
        Err(HarnessError::UnknownPreset(_))
    ));
    let csv_without_path = TraceSpec {
        kind: TraceKind::Csv,
        ..base.clone()
    };
    assert!(generate_trace(&csv_without_path, &display()).is_err());
    let csv_motion = TraceSpec {
        motion_model: MotionModel::Csv,
        ..base
    };
    assert!(generate_trace(&csv_motion, &display()).is_err());
}

fn csv_spec(path: std::path::PathBuf, frames: usize) -> TraceSpec {
    TraceSpec {
        kind: TraceKind::Csv,
        motion_model: MotionModel::Csv,
        path: Some(path),
        ..TraceSpec::synthetic("grid", MotionModel::Still, frames, 0)
    }
}

#[test]
fn csv_trace_derives_gaze_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let rows = [
        "0,1000,0,0,0,0,0,0,960,1080,,",
        "1,2000,0.02,0,0,0,0,1.5,970,1070,,",
        "2,3000,0,0,0,0,0,0,970,1070,100,200",
    ];
    fs::write(
        &path,
        format!("# recorded\n{}\n{}\n", CSV_TRACE_HEADER.join(","), rows.join("\n")),
    )
    .unwrap();
    let trace = generate_trace(&csv_spec(path.clone(), 10), &display()).unwrap();
    assert_eq!(trace.len(), 3);
    assert_eq!(
        trace.iter().map(|f| f.scene.triangles).collect::<Vec<_>>(),
        [1000, 2000, 3000]
    );
    assert_eq!(trace[0].motion.gaze_delta, (0.0, 0.0));
    assert_eq!(trace[1].motion.gaze_delta, (10.0, -10.0));
    assert_eq!(trace[1].motion.d6, [0.02, 0.0, 0.0, 0.0, 0.0, 1.5]);
    assert_eq!(trace[2].gaze_px, (970.0, 1070.0));
    // Frame limit truncates.
    assert_eq!(generate_trace(&csv_spec(path, 2), &display()).unwrap().len(), 2);
}

#[test]
fn csv_errors_name_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let body = "0,1000,0,0,0,0,0,0,960,1080,,\n1,lots,0,0,0,0,0,0,960,1080,,\n";
    fs::write(&path, format!("{}\n{body}", CSV_TRACE_HEADER.join(","))).unwrap();
    match generate_trace(&csv_spec(path, 10), &display()) {
        Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, CSV_TRACE_HEADER.join(",") + "\n").unwrap();
    assert!(generate_trace(&csv_spec(empty, 10), &display()).is_err());
}
