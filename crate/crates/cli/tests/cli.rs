use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use psuper::io::read_raw;

fn psuper(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psuper")).args(args).current_dir(cwd).output().expect("spawn psuper")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let Ok(rd) = std::fs::read_dir(dir) else { return Vec::new() };
    let mut v: Vec<PathBuf> =
        rd.map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|e| e == ext)).collect();
    v.sort();
    v
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const RATE: &str = r#"
seed = 3
[[experiment]]
kind = "rate"
n = 2
p = 3.0
nodes = 129
eps = [0.32, 0.16, 0.08, 0.04]
"#;

// [TRIVIAL]
#[test]
fn empty_experiment_list_is_a_noop() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\n");
    let out = dir.path().join("out");
    let o = psuper(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!out.exists());
}

// [DERIVED] p must exceed 2; the message names the constraint
#[test]
fn small_exponent_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[[experiment]]\nkind = \"rate\"\np = 1.5\n");
    let o = psuper(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p > 2"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

// [TRIVIAL]
#[test]
fn unknown_key_and_missing_file_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\nbogus = 2\n");
    assert_eq!(psuper(&["run", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(psuper(&["run", "--config", "missing.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(psuper(&["run"], dir.path()).status.code(), Some(2));
    let o = psuper(&["solve-elliptic", "--p", "3", "--data", "missing.raw"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

// [TRIVIAL] an unwritable output directory has its own exit code
#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let target = blocker.join("sub");
    let o = psuper(
        &["tabulate", "--solution", "barenblatt", "--dim", "1", "--p", "3", "--out-dir", target.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

// [PAPER] the gradient error decays at least like the square root of the dual gap
#[test]
fn rate_run_writes_report_with_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RATE);
    let out = dir.path().join("out");
    let o = psuper(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("rate: PASS"));

    let csv = files_with_ext(&out, "csv");
    assert_eq!(csv.len(), 1);
    let name = csv[0].file_name().unwrap().to_str().unwrap().to_string();
    assert!(name.starts_with("rate-2-3-"), "{name}");
    let text = std::fs::read_to_string(&csv[0]).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("level,eps,grad_lp,dual_gap,leaked_mass,slope"));
    assert!(lines.count() >= 4);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&files_with_ext(&out, "json")[0]).unwrap()).unwrap();
    let slope = json["slopes"]["fit"].as_f64().unwrap();
    assert!(slope >= 0.45, "fit slope {slope}");
    assert_eq!(json["slopes"]["predicted"].as_f64(), Some(0.5));
    assert!(json["parameters"]["fit"].is_object());
    assert_eq!(json["parameters"]["seed"].as_u64(), Some(3));
}

// [TRIVIAL] same config and seed give the same CSV body
#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 99\n[[experiment]]\nkind = \"mollification\"\np = 4.0\nmeasure = \"random\"\nnodes = 257\n",
    );
    let bodies: Vec<Vec<u8>> = ["a", "b"]
        .iter()
        .map(|sub| {
            let out = dir.path().join(sub);
            let threads = if *sub == "a" { "1" } else { "3" };
            let o = psuper(
                &["run", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--threads", threads],
                dir.path(),
            );
            assert!(o.status.success(), "{}", stderr(&o));
            std::fs::read(&files_with_ext(&out, "csv")[0]).unwrap()
        })
        .collect();
    assert_eq!(bodies[0], bodies[1]);

    // a different seed draws a different measure
    let out = dir.path().join("c");
    let o = psuper(
        &["run", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--seed", "100"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_ne!(std::fs::read(&files_with_ext(&out, "csv")[0]).unwrap(), bodies[0]);
}

// [DERIVED] tabulated values equal the closed form bit for bit
#[test]
fn tabulate_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.raw");
    let o = psuper(
        &["tabulate", "--solution", "barenblatt", "--dim", "1", "--nodes", "33", "--lo", "-2", "--hi", "2", "--p", "3",
          "--t", "0.5", "--c", "1.5", "--out", path.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, values) = read_raw(&path).unwrap();
    assert_eq!(header.dim, 1);
    assert_eq!(values.len(), 33);
    let params = psuper::PParams::new(3.0).unwrap();
    for (j, v) in values.iter().enumerate() {
        let x = -2.0 + 4.0 * j as f64 / 32.0;
        let want = psuper::exact::barenblatt(&[x], 0.5, 1, &params, 1.5);
        assert_eq!(v.to_bits(), want.to_bits(), "node {j}");
    }
    // raw layout: one JSON line, then little-endian f64
    let bytes = std::fs::read(&path).unwrap();
    let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
    assert_eq!(bytes.len() - nl - 1, 33 * 8);
    let first = f64::from_le_bytes(bytes[nl + 1..nl + 9].try_into().unwrap());
    assert_eq!(first.to_bits(), values[0].to_bits());
}

// [DERIVED] the Barenblatt profile vanishes before time zero
#[test]
fn barenblatt_before_zero_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.raw");
    let o = psuper(
        &["tabulate", "--solution", "barenblatt", "--dim", "2", "--nodes", "17", "--p", "3", "--t", "-1", "--out",
          path.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, values) = read_raw(&path).unwrap();
    assert!(values.iter().all(|&v| v == 0.0));
}

// [DERIVED] p = n gives the logarithm; the pole holds its limit
#[test]
fn fundamental_at_p_equal_n_is_logarithmic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.raw");
    let o = psuper(
        &["tabulate", "--solution", "fundamental", "--dim", "3", "--nodes", "5", "--p", "3", "--out",
          path.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, values) = read_raw(&path).unwrap();
    // node (0,0,0.5) and the corner (1,1,1)
    let at = |i: usize, j: usize, k: usize| values[i * 25 + j * 5 + k];
    assert!((at(2, 2, 3) - 0.5f64.ln()).abs() < 1e-15);
    assert!((at(4, 4, 4) - 3f64.sqrt().ln()).abs() < 1e-15);
    assert_eq!(at(2, 2, 2), f64::NEG_INFINITY);
}

// [DERIVED] solving with a density, then taking norms, stays consistent
#[test]
fn solve_and_norms_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("b.raw");
    let u = dir.path().join("u.raw");
    let run = |args: &[&str]| {
        let o = psuper(args, dir.path());
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        o
    };
    run(&["tabulate", "--solution", "barenblatt", "--dim", "1", "--nodes", "65", "--lo", "-3", "--hi", "3", "--p",
          "3", "--out", data.to_str().unwrap()]);
    run(&["solve-elliptic", "--p", "3", "--data", data.to_str().unwrap(), "--scheme", "edge", "--out",
          u.to_str().unwrap()]);
    let (_, vals) = read_raw(&u).unwrap();
    // nonnegative data and zero boundary values give a nonnegative solution
    assert!(vals.iter().all(|&v| v >= -1e-12));
    assert!(vals.iter().any(|&v| v > 0.0));

    let o = run(&["norms", "--input", u.to_str().unwrap(), "--q", "2,4"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "quantity,exponent,value");
    assert_eq!(rows.len(), 7);
    let value = |r: &str| r.rsplit(',').next().unwrap().parse::<f64>().unwrap();
    assert!((value(rows[1]) + value(rows[2]) - value(rows[3])).abs() < 1e-12);

    let par = dir.path().join("par");
    let o = run(&["solve-parabolic", "--p", "3", "--initial", data.to_str().unwrap(), "--t1", "0.25", "--steps",
                  "5", "--out-dir", par.to_str().unwrap()]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 6);
    assert_eq!(files_with_ext(&par, "raw").len(), 6);
}
