//! The binary's contract: JSON on stdout, exit status 0 / 1 / 2.

use std::process::{Command, Output};

use serde_json::Value;

fn stiffopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stiffopt")).args(args).env_remove("STIFFOPT_OUT_DIR").output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn optimize_report_quadratic() {
    let v = json(&stiffopt(&["optimize", "--form", "laplacian", "--degree", "2", "--dim", "2", "--report"]));
    assert_eq!(v["entries"], 21);
    assert_eq!(v["base_maps"], 84);
    assert!(v["ferari_maps"].as_u64().unwrap() <= 23);
    for key in ["zero", "eq", "eq_t", "one_entry", "col", "ed1", "ed2", "lc", "default"] {
        assert!(v["histogram"][key].is_u64(), "{key}");
    }
}

#[test]
fn optimize_graph_lists_every_node() {
    let v = json(&stiffopt(&["optimize", "--degree", "1"]));
    assert_eq!(v["nodes"].as_array().unwrap().len(), 6);
    assert_eq!(v["order"].as_array().unwrap().len(), 6);
    let total: u64 = v["nodes"].as_array().unwrap().iter().map(|n| n["maps"].as_u64().unwrap()).sum();
    assert_eq!(v["report"]["ferari_maps"].as_u64().unwrap(), total);
}

#[test]
fn advection_report_has_the_same_schema() {
    let v = json(&stiffopt(&["optimize", "--form", "advection", "--degree", "1", "--dim", "3", "--report"]));
    assert_eq!(v["entries"], 16);
    assert_eq!(v["base_maps"], 192);
    assert!(v["histogram"].is_object());
}

#[test]
fn verify_cubic_with_seed() {
    let v = json(&stiffopt(&["verify", "--form", "laplacian", "--degree", "3", "--dim", "2", "--seed", "42"]));
    assert_eq!(v["passed"], true);
    assert!(v["max_rel_dev"].as_f64().unwrap() <= 1e-12);
    assert_eq!(v["seed"], 42);
}

#[test]
fn verify_is_deterministic() {
    let a = stiffopt(&["verify", "--degree", "2", "--elements", "30"]);
    let b = stiffopt(&["verify", "--degree", "2", "--elements", "30"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["seed"], stiffopt_cli::DEFAULT_SEED);
}

#[test]
fn verify_failure_reports_the_entry() {
    let out = stiffopt(&["verify", "--degree", "3", "--elements", "20", "--tolerance", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(lambda, mu) = ("), "{err}");
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert!(v["checks"][0]["worst"]["input"].is_array());
}

#[test]
fn tabulate_advection_scaled_entries() {
    let v = json(&stiffopt(&["tabulate", "--form", "advection", "--degree", "1", "--dim", "3"]));
    assert_eq!(v["kind"], "advection");
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4 * 4 * 4 * 3);
    // every entry of 120·N is an integer
    for e in entries {
        let (n, d) = (e[0].as_i64().unwrap(), e[1].as_i64().unwrap());
        assert_eq!((120 * n) % d, 0);
    }
}

#[test]
fn codegen_backends() {
    let out = stiffopt(&["codegen", "--degree", "2", "--backend", "portable-curly"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("void k_laplacian_p2_2d(const double *g, double *out)"));
    let v = json(&stiffopt(&["codegen", "--degree", "1", "--backend", "ir-json"]));
    assert_eq!(v["format"], "stiffopt-ir/1");
    let hand = stiffopt(&["codegen", "--form", "advection", "--degree", "1", "--dim", "3", "--hand", "--fold-scale"]);
    assert!(hand.status.success());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["codegen", "--degree", "7"][..],
        &["codegen", "--degree", "2", "--backend", "fortran"],
        &["codegen", "--degree", "2", "--fold-scale"],
        &["codegen", "--degree", "3", "--hand"],
        &["verify", "--degree", "1", "--dim", "4"],
        &["bench", "--kernels", "abacus", "--sizes", "2"],
        &["frobnicate"],
    ] {
        assert_eq!(stiffopt(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bench_emits_json_lines() {
    let out = stiffopt(&["bench", "--degree", "1", "--sizes", "2,4", "--kernels", "quadrature,native", "--threads", "2"]);
    let rows: Vec<Value> = String::from_utf8(json_ok(out)).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        for key in ["kernel", "cells", "local_time", "insert_time", "checksum"] {
            assert!(!r[key].is_null(), "{key}");
        }
    }
    assert_eq!(rows[1]["kernel"], "native");
    let (a, b) = (rows[0]["checksum"].as_f64().unwrap(), rows[1]["checksum"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-12 * a.abs());
}

fn json_ok(out: Output) -> Vec<u8> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

#[test]
fn output_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_stiffopt"))
        .args(["tabulate", "--degree", "1"])
        .env("STIFFOPT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&json_ok(out)).unwrap();
    let path = dir.path().join("laplacian_p1_2d.tensor.json");
    assert_eq!(v["written"], path.display().to_string());
    let tensor: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(tensor["degree"], 1);

    let explicit = dir.path().join("sub/k.c");
    let out = stiffopt(&["codegen", "--degree", "1", "--backend", "c", "-o", explicit.to_str().unwrap()]);
    json_ok(out);
    assert!(std::fs::read_to_string(explicit).unwrap().contains("k_laplacian_p1_2d"));
}
