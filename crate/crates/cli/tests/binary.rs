use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gwa")).args(args).output().expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8(out.stdout).expect("utf-8 output"))
}

fn run_config(command: &str, name: &str, extra: &[&str]) -> (i32, Value) {
    let path = configs().join(name);
    let mut args = vec![command, "-i", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let (code, text) = run(&args);
    (code, serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}")))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gwa-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn weyl_classification() {
    let (code, v) = run_config("classify", "weyl.json", &[]);
    assert_eq!(code, 0);
    let r = &v["result"];
    assert_eq!(r["good"], serde_json::json!([1]));
    assert_eq!(r["dim"], 1);
    assert_eq!(r["rho"], "+");
    assert_eq!(v["command"], "classify");
}

#[test]
fn real_root_of_the_numerator_is_negative() {
    let (code, v) = run_config("certify", "negative_root.json", &[]);
    assert_eq!(code, 0);
    let r = &v["result"];
    assert_eq!(r["verdict"], "NEGATIVE");
    assert!(r["witness"].is_object());
    assert!(r["gram_witness"]["min_eigenvalue"].as_f64().unwrap() < 0.0);
}

#[test]
fn shipped_configs_pass_selfcheck() {
    for name in ["weyl.json", "window.json", "negative_root.json", "matrix.json", "q_circle.json"] {
        let (code, v) = run_config("selfcheck", name, &[]);
        assert_eq!(code, 0, "{name}: {v}");
        assert_eq!(v["result"]["all_passed"], true, "{name}");
    }
}

#[test]
fn trace_of_an_expression() {
    let (code, v) = run_config("trace", "weyl.json", &["--poly", "(z-0.5)*(z+0.5)"]);
    assert_eq!(code, 0);
    let d = v["result"]["line_discrepancy"].as_f64().unwrap();
    assert!(d < 1e-10, "{d}");
    let (code, v) = run_config("trace", "q_circle.json", &["--poly", "Z^2 + 2 + Z^-2"]);
    assert_eq!(code, 0);
    assert!(v["result"]["circle_discrepancy"].as_f64().unwrap() < 1e-10);
}

#[test]
fn gram_at_a_single_weight() {
    let (code, v) = run_config("gram", "weyl.json", &["--j", "-1", "--deg", "2"]);
    assert_eq!(code, 0);
    let reports = v["result"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["j"], -1);
    assert_eq!(reports[0]["verdict"], "PD");
}

#[test]
fn matrix_star_context() {
    let (code, v) = run_config("star", "matrix.json", &[]);
    assert_eq!(code, 0);
    let r = &v["result"];
    assert_eq!(r["context"], "matrix");
    assert_eq!(r["short"], true);
    assert!(r["forward_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn parse_errors_exit_with_one() {
    let (code, text) = run(&["trace", "-i", configs().join("weyl.json").to_str().unwrap(), "--poly", "z^-1"]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["error"]["kind"], "ParseError");
    assert_eq!(v["error"]["detail"]["position"], 2);
}

#[test]
fn invalid_configs_exit_with_one() {
    let path = scratch("bad.json");
    std::fs::write(&path, r#"{"variant":"filtered","c":[[0.5,0]],"rho":{"epsilon":2,"tau":0.25},"weight":{"g":[[1,0]]}}"#).unwrap();
    let (code, text) = run(&["classify", "-i", path.to_str().unwrap()]);
    assert_eq!(code, 1, "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["error"]["kind"].is_string());

    std::fs::write(&path, r#"{"variant":"filtered","c":[[0.5,0]],"rho":{"epsilon":1,"tau":0.25},"weight":{"g":[[1,0]]},"extra":1}"#).unwrap();
    let (code, text) = run(&["classify", "-i", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(text.contains("\"Config\""), "{text}");

    let (code, _) = run(&["classify"]);
    assert_eq!(code, 1);
}

#[test]
fn out_flag_writes_the_report() {
    let path = scratch("report.json");
    let (code, text) = run(&["classify", "-i", configs().join("weyl.json").to_str().unwrap(), "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(text.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["dim"], 1);
}

#[test]
fn echoed_config_reproduces_the_report() {
    let (_, first) = run(&["certify", "-i", configs().join("window.json").to_str().unwrap()]);
    let v: Value = serde_json::from_str(&first).unwrap();
    let path = scratch("echo.json");
    std::fs::write(&path, serde_json::to_string(&v["config"]).unwrap()).unwrap();
    let (_, second) = run(&["certify", "-i", path.to_str().unwrap()]);
    let diverge = first.lines().zip(second.lines()).position(|(a, b)| a != b);
    assert!(diverge.is_none() && first.len() == second.len(), "reports diverge at line {diverge:?}: {:?}", diverge.map(|k| (first.lines().nth(k), second.lines().nth(k))));
}

#[test]
fn floats_carry_seventeen_digits() {
    let (_, text) = run(&["classify", "-i", configs().join("weyl.json").to_str().unwrap()]);
    assert!(text.contains("2.5000000000000000e-1"), "{text}");
}

#[test]
fn large_q_is_relabeled() {
    let path = scratch("inverse_q.json");
    std::fs::write(
        &path,
        r#"{"variant":"q","q":2.0,"c":[[0.5,0.3],[0.5,-0.3]],"rho":{"abs_a":1.0,"s":0.0},
            "weight":{"theta":{"scalar":[1,0],"exponent2":0,"zeros":[],"poles":[]}}}"#,
    )
    .unwrap();
    let (code, text) = run(&["classify", "-i", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["relabeling"]["input_q"].as_f64(), Some(2.0));
    assert_eq!(v["relabeling"]["q"].as_f64(), Some(0.5));
    assert_eq!(v["relabeling"]["c"][0][1].as_f64(), Some(-0.3));
    assert_eq!(v["relabeling"]["c"][0][0].as_f64(), Some(0.5));
    assert_eq!(v["result"]["variant"], "q");

    std::fs::write(&path, r#"{"variant":"q","q":1.0,"c":[[0.5,0]],"rho":{"abs_a":1,"s":0},"weight":{"theta":{"scalar":[1,0],"exponent2":0,"zeros":[],"poles":[]}}}"#).unwrap();
    let (code, _) = run(&["classify", "-i", path.to_str().unwrap()]);
    assert_eq!(code, 1);
}
