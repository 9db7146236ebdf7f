use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pch::dgp::{generate_raw, Case, SimConfig};
use pch::io::{self, ColumnRoles};
use pch::oracle::{identify, PopulationSpec};

fn pch_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pch"))
        .args(args)
        .env_remove("PCH_THREADS")
        .output()
        .unwrap()
}

fn synthetic(path: &Path, seed: u64) {
    let cfg = Case::B.configure(
        &SimConfig {
            n: 3000,
            p: 30,
            seed,
            replications: 1,
            ..SimConfig::default()
        },
        0.6,
    );
    let raw = generate_raw(&cfg, 0).unwrap();
    io::write_dataset(path, &raw.x, &raw.y, &raw.z).unwrap();
}

#[test]
fn analyze_writes_tsv_to_file_and_table_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let out = dir.path().join("r.tsv");
    synthetic(&data, 1);
    let o = pch_cmd(&[
        "analyze",
        "--data",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.starts_with("Method"));
    let records = io::records_from_tsv(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].method.as_str(), "PCH");
}

#[test]
fn analyze_matches_library_call() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    synthetic(&data, 2);
    let o = pch_cmd(&[
        "analyze",
        "--data",
        data.to_str().unwrap(),
        "--alpha",
        "0.1",
    ]);
    assert!(o.status.success());
    let rec = io::records_from_tsv(&String::from_utf8(o.stdout).unwrap())
        .unwrap()
        .remove(0);

    let ds = io::load_dataset(&data, &ColumnRoles::default()).unwrap();
    let design = pch::Design::new(&ds.z).unwrap();
    let both = pch::pch_both(&design, &ds.x, &ds.y, pch::PchOptions::default()).unwrap();
    let r = pch::infer(&both.xy, &both.yx, ds.n(), 0.1, pch::SignPrior::XyPosYxNeg).unwrap();
    assert_eq!(rec, io::ReportRecord::from_pch(&r, &both));
    assert!((rec.level - 0.9).abs() < 1e-12);
}

#[test]
fn column_roles_select_and_reorder() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    synthetic(&data, 3);
    let plain = pch_cmd(&["analyze", "--data", data.to_str().unwrap()]);
    let swapped = pch_cmd(&[
        "analyze",
        "--data",
        data.to_str().unwrap(),
        "--x",
        "Y",
        "--y",
        "X",
    ]);
    assert!(plain.status.success() && swapped.status.success());
    let a = io::records_from_tsv(&String::from_utf8(plain.stdout).unwrap()).unwrap();
    let b = io::records_from_tsv(&String::from_utf8(swapped.stdout).unwrap()).unwrap();
    assert_eq!(
        (a[0].valid_xy, a[0].valid_yx),
        (b[0].valid_yx, b[0].valid_xy)
    );

    let subset = pch_cmd(&[
        "analyze",
        "--data",
        data.to_str().unwrap(),
        "--z",
        "Z1,Z2,Z3,Z4,Z5",
    ]);
    assert!(subset.status.success());
}

#[test]
fn analyze_reports_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "X,Y,Z1\n1,2,3\n4,oops,6\n").unwrap();
    let o = pch_cmd(&["analyze", "--data", data.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("oops") && err.contains('3'), "{err}");

    let o = pch_cmd(&["analyze", "--data", data.to_str().unwrap(), "--x", "W"]);
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains('W'));

    let o = pch_cmd(&["analyze", "--data", "/nonexistent/file.csv"]);
    assert!(!o.status.success());
}

#[test]
fn simulate_writes_three_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.toml");
    fs::write(
        &config,
        "cases = [\"b\"]\ngrid = [0.6]\nmethods = [\"PCH\", \"IVW\"]\n\n[base]\nn = 1500\np = 30\nreplications = 2\nseed = 5\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = pch_cmd(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.tsv")).unwrap();
    assert_eq!(report.lines().count(), 3);
    let plot = fs::read_to_string(out.join("plot.tsv")).unwrap();
    assert_eq!(plot.lines().count(), 1 + 2 * 5);
    assert!(fs::read_to_string(out.join("summary.txt"))
        .unwrap()
        .contains("case b"));
}

#[test]
fn simulate_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.toml");
    fs::write(
        &config,
        "grid = [0.6]\nrepeats = 3\n[base]\nsample_size = 10\n",
    )
    .unwrap();
    let o = pch_cmd(&["simulate", "--config", config.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("repeats"), "{err}");
}

#[test]
fn oracle_subcommand_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.toml");
    let spec = PopulationSpec {
        beta_xy: 0.4,
        beta_yx: -0.3,
        pi_x: vec![1.0, 0.8, 0.5, 0.0, 0.0, 0.7],
        pi_y: vec![0.0, 0.0, 0.0, 0.9, 0.6, 0.4],
        sigma: (0..6)
            .map(|i| (0..6).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
        zeta_moment: vec![0.5, -0.2, 0.0, 0.3, 0.1, 0.0],
        eta_moment: vec![0.2, 0.0, 0.4, -0.1, 0.0, 0.3],
    };
    fs::write(&path, toml::to_string(&spec).unwrap()).unwrap();
    let o = pch_cmd(&["oracle", "--spec", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text, io::oracle_tsv(&identify(&spec).unwrap()));
    assert!(text.lines().any(|l| l == "direction\t2\tNA\t-"), "{text}");
}

#[test]
fn dataset_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let cfg = SimConfig {
        n: 200,
        p: 30,
        replications: 1,
        ..SimConfig::default()
    };
    let raw = generate_raw(&cfg, 0).unwrap();
    io::write_dataset(&path, &raw.x, &raw.y, &raw.z).unwrap();
    let t = io::read_table(&path, &ColumnRoles::default()).unwrap();
    assert_eq!(t.x, raw.x);
    assert_eq!(t.y, raw.y);
    assert_eq!(t.z, raw.z);
    assert_eq!(t.z_names.first().map(String::as_str), Some("Z1"));
}
