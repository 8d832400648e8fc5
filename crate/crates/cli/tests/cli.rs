use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use edm::edm::{edm_basis, select_rank, ModeSide, RankSpec};
use edm::modal::{build_database, ModeDatabase, ModeSample, ModeSelection};
use edm::numerics::{CMat, MassMatrix, RMat, C64};
use edm::systems::{HeatRod, SpringChain, SystemSpec};
use edm_cli::store::{load_database, load_edm, save_database, save_edm, StoreError};
use tempfile::tempdir;

fn edm_bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edm"))
        .args(args)
        .current_dir(cwd)
        .env_remove("EDM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn rod_spec() -> SystemSpec {
    SystemSpec::HeatRod {
        rod: HeatRod {
            nodes: 20,
            ..HeatRod::default()
        },
        domain: (0.0, 28.0),
    }
}

fn rod_db() -> ModeDatabase {
    let sys = rod_spec().build().unwrap();
    build_database(
        &sys,
        &[0.0, 7.0, 14.0, 21.0, 28.0],
        4,
        ModeSelection::LeadingRealPart,
    )
    .unwrap()
}

fn chain_db() -> (ModeDatabase, SystemSpec) {
    let spec = SystemSpec::SpringChain {
        chain: SpringChain {
            masses: 8,
            ..SpringChain::default()
        },
    };
    let sys = spec.build().unwrap();
    let db = build_database(&sys, &[0.2, 0.5, 0.8], 3, ModeSelection::LowestFrequency).unwrap();
    (db, spec)
}

fn bits(db: &ModeDatabase) -> Vec<u64> {
    let mut out = Vec::new();
    for s in &db.samples {
        out.push(s.mu.to_bits());
        for z in s
            .eigenvalues
            .iter()
            .chain(s.right.iter())
            .chain(s.adjoint().iter())
        {
            out.push(z.re.to_bits());
            out.push(z.im.to_bits());
        }
    }
    out
}

#[test]
fn database_round_trip_is_bit_exact() {
    let dir = tempdir().unwrap();
    let db = rod_db();
    let spec = rod_spec();
    save_database(&db, Some(&spec), &dir.path().join("db")).unwrap();
    let back = load_database(&dir.path().join("db")).unwrap();
    assert_eq!(bits(&back.db), bits(&db));
    assert_eq!(back.db, db);
    assert_eq!(back.system, Some(spec));

    let (db, spec) = chain_db();
    assert!(db.is_complex() && db.has_left());
    save_database(&db, Some(&spec), &dir.path().join("chain")).unwrap();
    let back = load_database(&dir.path().join("chain")).unwrap();
    assert_eq!(bits(&back.db), bits(&db));
    assert_eq!(back.db, db);
}

#[test]
fn dense_mass_survives_round_trip() {
    let e = RMat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
    let mass = MassMatrix::Dense(e);
    let sample = |mu: f64| ModeSample {
        mu,
        eigenvalues: vec![C64::new(-1.0 - mu, 0.0)],
        right: CMat::from_column_slice(
            2,
            1,
            &[C64::new(0.1 / 3f64.sqrt(), 0.0), C64::new(0.5, 0.0)],
        ),
        left: None,
    };
    let db = ModeDatabase::new(
        vec![sample(0.0), sample(1.0)],
        mass,
        ModeSelection::LeadingRealPart,
    )
    .unwrap();
    let dir = tempdir().unwrap();
    save_database(&db, None, &dir.path().join("db")).unwrap();
    let back = load_database(&dir.path().join("db")).unwrap();
    assert!(matches!(back.db.mass, MassMatrix::Dense(_)));
    assert_eq!(back.db, db);
    assert_eq!(back.system, None);
}

#[test]
fn tampered_file_is_named() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("db");
    save_database(&rod_db(), None, &path).unwrap();
    let file = path.join("right.bin");
    let mut bytes = fs::read(&file).unwrap();
    bytes[17] ^= 0x01;
    fs::write(&file, bytes).unwrap();
    let err = load_database(&path).unwrap_err();
    assert!(
        matches!(&err, StoreError::Checksum { file } if file == "right.bin"),
        "{err}"
    );
    assert!(err.to_string().contains("right.bin"));
}

#[test]
fn manifest_shape_disagreement_is_rejected() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("db");
    save_database(&rod_db(), None, &path).unwrap();
    let manifest = path.join("manifest.json");
    let mut json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    json["p"] = serde_json::json!(6);
    fs::write(&manifest, serde_json::to_string(&json).unwrap()).unwrap();
    assert!(matches!(
        load_database(&path),
        Err(StoreError::Shape { .. })
    ));

    // consistent p but arrays listed with the old shape
    let params: Vec<f64> = (0..6).map(|k| k as f64).collect();
    json["parameters"] = serde_json::json!(params);
    fs::write(&manifest, serde_json::to_string(&json).unwrap()).unwrap();
    assert!(matches!(
        load_database(&path),
        Err(StoreError::Shape { .. })
    ));
}

#[test]
fn missing_and_foreign_files_are_errors() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("db");
    save_database(&rod_db(), None, &path).unwrap();
    fs::remove_file(path.join("E.coo")).unwrap();
    assert!(matches!(load_database(&path), Err(StoreError::Io { .. })));
    assert!(matches!(load_edm(&path), Err(StoreError::Kind { .. })));
    assert!(load_database(&dir.path().join("nowhere")).is_err());
}

#[test]
fn edm_round_trip() {
    let db = rod_db();
    let basis = edm_basis(&db, 1, ModeSide::Right, RankSpec::Energy(0.999)).unwrap();
    let dir = tempdir().unwrap();
    save_edm(&basis, Some(0.999), &dir.path().join("e")).unwrap();
    let (back, manifest) = load_edm(&dir.path().join("e")).unwrap();
    assert_eq!(back, basis);
    assert_eq!(manifest.mode, 2);
    assert_eq!(manifest.rank, basis.rank());
}

#[test]
fn saving_over_an_existing_directory_replaces_it() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("db");
    save_database(&rod_db(), None, &path).unwrap();
    fs::write(path.join("stale.txt"), "x").unwrap();
    save_database(&rod_db(), None, &path).unwrap();
    assert!(!path.join("stale.txt").exists());
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(leftovers.len(), 1, "{leftovers:?}");
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempdir().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["generate", "heat-rod", "--mu-grid", "0:1"],
        vec!["generate", "heat-rod", "--mu-grid", "0:1:3", "--bogus"],
        vec![
            "edm", "--db", "x", "--mode", "1", "--energy", "0.9", "--rank", "2",
        ],
    ] {
        let out = edm_bin(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = edm_bin(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn runtime_errors_are_one_line() {
    let dir = tempdir().unwrap();
    let out = edm_bin(&["pair", "--db", "missing"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "));
}

#[test]
fn generate_edm_and_error_sweep() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(&edm_bin(
        &[
            "generate",
            "heat-rod",
            "--n",
            "40",
            "--mu-grid",
            "0:28:8",
            "--out",
            "db",
        ],
        d,
    ));
    let stored = load_database(&d.join("db")).unwrap();
    assert_eq!(stored.db.p(), 8);
    assert_eq!(stored.db.n(), 40);
    assert!(stored.db.paired && stored.db.aligned);

    ok(&edm_bin(
        &[
            "edm", "--db", "db", "--mode", "1", "--energy", "0.999", "--out", "edm1",
        ],
        d,
    ));
    let (basis, manifest) = load_edm(&d.join("edm1")).unwrap();
    let full = edm_basis(&stored.db, 0, ModeSide::Right, RankSpec::Full).unwrap();
    assert_eq!(manifest.rank, select_rank(&full.singular_values, 0.999));
    assert_eq!(basis.rank(), manifest.rank);
    assert!(manifest.energy_fraction.unwrap() >= 0.999);

    ok(&edm_bin(
        &[
            "report",
            "error-sweep",
            "--db",
            "db",
            "--edm",
            "edm1",
            "--grid",
            "10",
            "--out",
            "errors.csv",
        ],
        d,
    ));
    let csv = fs::read_to_string(d.join("errors.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "mu [-],r [EDMs],strategy,error [-]");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // per point: direct plus ranks {0, 1, 2, 4, 8} and the selected rank
    let mut ranks: Vec<usize> = vec![0, 1, 2, 4, 8, manifest.rank];
    ranks.sort_unstable();
    ranks.dedup();
    assert_eq!(rows.len(), 10 * (1 + ranks.len()));
    assert!(rows
        .iter()
        .all(|r| r.len() == 4 && r[3].parse::<f64>().unwrap() >= 0.0));
    // at the first sample both interpolants reproduce the stored mode
    assert_eq!(rows[0][2], "direct");
    assert!(rows[0][3].parse::<f64>().unwrap() < 1e-12);
}

#[test]
fn step_by_step_pipeline_and_reports() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("rod.json"),
        serde_json::to_string(&rod_spec()).unwrap(),
    )
    .unwrap();
    ok(&edm_bin(
        &[
            "modes",
            "--system",
            "rod.json",
            "--mu-grid",
            "0:28:4",
            "--m",
            "4",
            "--scramble",
            "--seed",
            "5",
            "--out",
            "raw",
        ],
        d,
    ));
    assert!(!load_database(&d.join("raw")).unwrap().db.paired);
    ok(&edm_bin(&["pair", "--db", "raw", "--out", "paired"], d));
    ok(&edm_bin(&["align", "--db", "paired", "--out", "db"], d));
    let db = load_database(&d.join("db")).unwrap().db;
    assert!(db.paired && db.aligned);
    assert!(matches!(
        edm::edm::build_data_matrix(&load_database(&d.join("paired")).unwrap().db, 0),
        Err(edm::Error::DatabaseState("aligned"))
    ));

    ok(&edm_bin(
        &[
            "interp", "--db", "db", "--mode", "2", "--mu", "3.5", "--out", "mode.csv",
        ],
        d,
    ));
    let csv = fs::read_to_string(d.join("mode.csv")).unwrap();
    assert!(csv.starts_with("index,re [-],im [-]\n"));
    assert_eq!(csv.lines().count(), 21);

    let out = edm_bin(
        &[
            "rom",
            "--db",
            "db",
            "--mu",
            "10",
            "--x0-mu",
            "300",
            "--steps",
            "20",
            "--reference",
            "--out",
            "traj.csv",
        ],
        d,
    );
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("time-integrated error"));
    let traj = fs::read_to_string(d.join("traj.csv")).unwrap();
    assert!(traj.starts_with("t [time],x0 [state],"));
    assert_eq!(traj.lines().count(), 21);

    ok(&edm_bin(
        &[
            "report",
            "benchmark",
            "--db",
            "db",
            "--x0-mu",
            "300",
            "--reps",
            "1",
            "--steps",
            "20",
            "--validation",
            "2:26:3",
            "--out",
            "bench.csv",
        ],
        d,
    ));
    let bench = fs::read_to_string(d.join("bench.csv")).unwrap();
    assert!(bench.starts_with("mu [-],strategy,error [-],seconds [s]\n"));
    assert_eq!(bench.lines().count(), 1 + 3 * 3);

    ok(&edm_bin(
        &["report", "energy", "--db", "db", "--out", "energy.csv"],
        d,
    ));
    let energy = fs::read_to_string(d.join("energy.csv")).unwrap();
    assert!(energy.starts_with("mode,r [EDMs],sigma [-],energy_fraction [-]\n"));
}

#[test]
fn identical_commands_give_identical_files() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    for out in ["a", "b"] {
        ok(&edm_bin(
            &[
                "generate",
                "spring-chain",
                "--n",
                "6",
                "--mu-grid",
                "0.2:0.8:4",
                "--m",
                "3",
                "--scramble",
                "--seed",
                "11",
                "--out",
                out,
            ],
            d,
        ));
    }
    for entry in fs::read_dir(d.join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(d.join("a").join(&name)).unwrap(),
            fs::read(d.join("b").join(&name)).unwrap(),
            "{name:?}"
        );
    }
    ok(&edm_bin(
        &[
            "generate",
            "spring-chain",
            "--n",
            "6",
            "--mu-grid",
            "0.2:0.8:4",
            "--m",
            "3",
            "--scramble",
            "--seed",
            "12",
            "--raw",
            "--out",
            "c",
        ],
        d,
    ));
    ok(&edm_bin(
        &[
            "generate",
            "spring-chain",
            "--n",
            "6",
            "--mu-grid",
            "0.2:0.8:4",
            "--m",
            "3",
            "--scramble",
            "--seed",
            "11",
            "--raw",
            "--out",
            "d",
        ],
        d,
    ));
    assert_ne!(
        fs::read(d.join("c/right.bin")).unwrap(),
        fs::read(d.join("d/right.bin")).unwrap()
    );
}

#[test]
fn out_dir_environment_variable() {
    let dir = tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_edm"))
        .args([
            "generate",
            "bump",
            "--n",
            "30",
            "--mu-grid",
            "0.2:0.8:3",
            "--m",
            "2",
        ])
        .current_dir(dir.path())
        .env("EDM_OUT_DIR", dir.path().join("outputs"))
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.path().join("outputs/db/manifest.json").exists());
}

#[cfg(feature = "ingest")]
#[test]
fn exported_tables_ingest_back() {
    let dir = tempdir().unwrap();
    let (db, _) = chain_db();
    edm_cli::ingest::export_directory(&db, &dir.path().join("tables")).unwrap();
    ok(&edm_bin(
        &["ingest", "--from", "tables", "--out", "db"],
        dir.path(),
    ));
    let back = load_database(&dir.path().join("db")).unwrap().db;
    assert_eq!((back.n(), back.p(), back.m()), (db.n(), db.p(), db.m()));
    // unit masses make E the identity, so the tables carry E-normalized modes
    for i in 0..db.m() {
        let a = edm_basis(&back, i, ModeSide::Right, RankSpec::Full).unwrap();
        let b = edm_basis(&db, i, ModeSide::Right, RankSpec::Full).unwrap();
        for (x, y) in a.singular_values.iter().zip(&b.singular_values) {
            assert!((x - y).abs() <= 1e-12, "mode {i}: {x} vs {y}");
        }
    }
}
