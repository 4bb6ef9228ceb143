mod alp_tracking {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/alp_tracking.rs"));
}

mod gmm_selection {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/gmm_selection.rs"));
}

mod alpgmm_teacher {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/alpgmm_teacher.rs"));
}

mod distill_curriculum {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/distill_curriculum.rs"));
}

mod in_teachers {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/in_teachers.rs"));
}

mod again_pipeline {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/again_pipeline.rs"));
}

mod surrogate_student {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/surrogate_student.rs"));
}

mod sweep_and_report {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/sweep_and_report.rs"));
}

mod external_student {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/external_student.rs"));
}

#[test]
fn alp_tracking_runs() {
    alp_tracking::run_example().expect("alp_tracking example should run");
}

#[test]
fn gmm_selection_runs() {
    gmm_selection::run_example().expect("gmm_selection example should run");
}

#[test]
fn alpgmm_teacher_runs() {
    alpgmm_teacher::run_example().expect("alpgmm_teacher example should run");
}

#[test]
fn distill_curriculum_runs() {
    distill_curriculum::run_example().expect("distill_curriculum example should run");
}

#[test]
fn in_teachers_runs() {
    in_teachers::run_example().expect("in_teachers example should run");
}

#[test]
fn again_pipeline_runs() {
    again_pipeline::run_example().expect("again_pipeline example should run");
}

#[test]
fn surrogate_student_runs() {
    surrogate_student::run_example().expect("surrogate_student example should run");
}

#[test]
fn sweep_and_report_runs() {
    sweep_and_report::run_example().expect("sweep_and_report example should run");
}

#[test]
fn external_student_runs() {
    let spec = again_core::student::ExternalSpec::new(env!("CARGO_BIN_EXE_again"), ["serve-student", "--profile", "weak"]);
    external_student::run_example_with(spec).expect("external student example should run");
}

#[test]
fn external_student_example_serves_its_own_learner() {
    let requests = "{\"cmd\":\"train\",\"params\":[0.2,5.8]}\n{\"cmd\":\"eval\",\"params\":[2.9,0.1]}\n";
    let mut out = Vec::new();
    let mut student = external_student::Tabular::default();
    again_core::student::protocol::serve(&mut student, requests.as_bytes(), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.starts_with("{\"reward\":")));
}
