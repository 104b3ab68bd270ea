use std::path::Path;
use std::process::Command;

#[test]
fn header_declares_the_whole_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/glss.h")).unwrap();
    for name in [
        "glss_model_from_json",
        "glss_model_to_json",
        "glss_string_free",
        "glss_model_free",
        "glss_model_dims",
        "glss_model_stability_radius",
        "glss_model_validate",
        "glss_simulate",
        "glss_trajectory_len",
        "glss_trajectory_rows",
        "glss_trajectory_copy",
        "glss_trajectory_free",
        "glss_innovation_form",
        "glss_check_minimality",
        "glss_find_isomorphism",
        "glss_last_error_message",
        "glss_version",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct GlssModel GlssModel;"));
    assert!(header.contains("GLSS_STATUS_UNSTABLE = 4"));
}

#[test]
fn c_program_compiles_against_the_header() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .output()
        .expect("a C compiler on PATH");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
