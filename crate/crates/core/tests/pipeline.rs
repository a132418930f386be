use signfit::keypoints::load_keypoint_sequence;
use signfit::kinematics::Skeleton;
use signfit::linguistic::{group_of_class, RpsFile, SignClass};
use signfit::metrics_synth::{evaluate_sequence, synth_sequence, SynthSpec};
use signfit::optimizer::{fit_sequence, ClassChoice, PoseFile, SequenceConfig, SequenceInputs};
use signfit::par::Execution;

fn short(class: SignClass) -> SynthSpec {
    SynthSpec {
        class,
        frames: 32,
        noise_px: 1.0,
        seed: 3,
        ..SynthSpec::default()
    }
}

#[test]
fn synthetic_sequence_survives_disk() {
    let skel = Skeleton::default_upper_body();
    let synth = synth_sequence(&skel, &short(SignClass::C2b)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    synth.save(&skel, dir.path()).unwrap();
    let back = load_keypoint_sequence(dir.path().join("keypoints"), synth.spec.fps).unwrap();
    assert_eq!(back.len(), synth.keypoints.len());
    assert_eq!(back.frames(), synth.keypoints.frames());
}

#[test]
fn fit_with_known_class_and_saved_references() {
    let skel = Skeleton::default_upper_body();
    let synth = synth_sequence(&skel, &short(SignClass::C3a)).unwrap();
    let cfg = SequenceConfig::default();
    let inputs = SequenceInputs {
        class: ClassChoice::Class(SignClass::C3a),
        ..SequenceInputs::default()
    };
    let fit = fit_sequence(&skel, &synth.keypoints, &cfg, &inputs, Execution::Parallel).unwrap();
    assert_eq!(fit.group, Some(group_of_class(SignClass::C3a)));
    assert_eq!(fit.states.len(), fit.frames.len());

    let pred: Vec<_> = fit.frames.iter().copied().zip(fit.states.iter().cloned()).collect();
    let m = evaluate_sequence(&skel, &pred, &synth.ground_truth_indexed()).unwrap();
    assert!(m.upper_body_mm < 30.0, "{m:?}");

    let dir = tempfile::tempdir().unwrap();
    let rps_path = dir.path().join("rps.json");
    fit.rps.save(&rps_path).unwrap();
    let rps = RpsFile::load(&rps_path).unwrap();
    assert_eq!(rps, fit.rps);

    // Reusing the references skips the preliminary fits and reproduces the run.
    let again = fit_sequence(
        &skel,
        &synth.keypoints,
        &cfg,
        &SequenceInputs {
            rps: Some(&rps),
            ..inputs
        },
        Execution::Sequential,
    )
    .unwrap();
    assert_eq!(again.states, fit.states);

    let pose_path = dir.path().join("poses.json");
    let file = PoseFile::from_fit(&skel, &fit, serde_json::json!({"test": true}));
    file.save(&pose_path).unwrap();
    let loaded = PoseFile::load(&pose_path).unwrap();
    loaded.check_against(&skel).unwrap();
    assert_eq!(loaded.states(), pred);
}
