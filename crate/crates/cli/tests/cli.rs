use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nmdep::numeric::stats::pearson;

fn nmdep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmdep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = nmdep(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn read_csv(path: &Path) -> Vec<(f64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

fn path(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bounds_of_second_legendre_pair() {
    let v = ok_json(&["bounds", "--basis", "legendre", "--j", "2", "--k", "2"]);
    assert_eq!(v["schema_version"], 1);
    assert!((v["min"].as_f64().unwrap() + 0.875).abs() < 1e-6);
    assert!((v["max"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn bounds_matrix_is_square() {
    let v = ok_json(&["bounds", "--order", "3"]);
    assert_eq!(v["max"].as_array().unwrap().len(), 3);
    assert!((v["min"][0][0].as_f64().unwrap() + 1.0).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = path(&dir, "empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(
        nmdep(&["estimate", "--input", s(&empty)]).status.code(),
        Some(2)
    );

    let bad = path(&dir, "bad.csv");
    fs::write(&bad, "1,2\n3,abc\n").unwrap();
    assert_eq!(
        nmdep(&["estimate", "--input", s(&bad)]).status.code(),
        Some(3)
    );

    let one = path(&dir, "one.csv");
    fs::write(&one, "1,2\n").unwrap();
    assert_eq!(
        nmdep(&["estimate", "--input", s(&one)]).status.code(),
        Some(3)
    );

    let tied = path(&dir, "tied.csv");
    fs::write(&tied, "1,2\n1,3\n2,4\n").unwrap();
    assert_eq!(
        nmdep(&["estimate", "--input", s(&tied), "--ties", "reject"])
            .status
            .code(),
        Some(3)
    );
    assert!(nmdep(&["estimate", "--input", s(&tied)]).status.success());

    assert_eq!(nmdep(&["bounds", "--j", "2"]).status.code(), Some(2));
    assert_eq!(nmdep(&["bounds", "--order", "99"]).status.code(), Some(2));
    assert_eq!(
        nmdep(&["matrix", "--model", "frank:2", "--method", "mc"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        nmdep(&["sample", "--model", "frank:2", "--n", "5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(nmdep(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn comonotone_file_gives_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(&dir, "co.csv");
    let rows: String = (1..=500)
        .map(|i| format!("{i},{}\n", (i as f64).ln()))
        .collect();
    fs::write(&f, rows).unwrap();
    let v = ok_json(&["estimate", "--input", s(&f), "--order", "3", "--type", "t3"]);
    for j in 0..3 {
        assert!((v["matrix"][j][j].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    assert!(v["matrix"][0][1].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn demo_models() {
    let dir = tempfile::tempdir().unwrap();
    let d1 = path(&dir, "d1.csv");
    assert!(nmdep(&[
        "demo-data",
        "--model",
        "1",
        "--n",
        "200",
        "--seed",
        "5",
        "--output",
        s(&d1)
    ])
    .status
    .success());
    let rows = read_csv(&d1);
    assert_eq!(rows.len(), 200);
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
    assert!(pearson(&x, &y).abs() < 0.3);
    let v = ok_json(&[
        "estimate",
        "--input",
        s(&d1),
        "--header",
        "--j",
        "2",
        "--k",
        "1",
    ]);
    assert!(v["value"].as_f64().unwrap() > 0.5);

    let d3 = path(&dir, "d3.csv");
    nmdep(&[
        "demo-data",
        "--model",
        "3",
        "--n",
        "200",
        "--seed",
        "5",
        "--output",
        s(&d3),
    ]);
    let rows = read_csv(&d3);
    let dev: f64 = rows
        .iter()
        .map(|(x, y)| ((x * x + y * y).sqrt() - 1.0).abs())
        .sum::<f64>()
        / 200.0;
    assert!(dev < 0.15);

    let out = nmdep(&["demo-data", "--model", "2", "--n", "0", "--seed", "5"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "x,y\n");
}

#[test]
fn heatmap_has_dominant_angularity() {
    let dir = tempfile::tempdir().unwrap();
    let d1 = path(&dir, "d1.csv");
    let svg = path(&dir, "d1.svg");
    nmdep(&[
        "demo-data",
        "--model",
        "1",
        "--n",
        "1000",
        "--seed",
        "8",
        "--output",
        s(&d1),
    ]);
    let v = ok_json(&[
        "estimate",
        "--input",
        s(&d1),
        "--header",
        "--order",
        "8",
        "--svg",
        s(&svg),
    ]);
    let m: Vec<Vec<f64>> = serde_json::from_value(v["matrix"].clone()).unwrap();
    let (mut best, mut at) = (0.0, (0, 0));
    for (j, row) in m.iter().enumerate() {
        for (k, x) in row.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                at = (j + 1, k + 1);
            }
        }
    }
    assert_eq!(at, (2, 1));
    assert_eq!(
        fs::read_to_string(&svg).unwrap().matches("<rect").count(),
        64
    );
}

#[test]
fn jointly_symmetric_sample_lies_on_support() {
    let out = nmdep(&[
        "sample",
        "--model",
        "jointly_symmetric_44",
        "--n",
        "1000",
        "--seed",
        "7",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 1000);
    for (u, v) in rows {
        let circle = ((u - 0.5).powi(2) + (v - 0.5).powi(2) - 3.0 / 14.0).abs();
        let diag = (u - v).abs().min((u + v - 1.0).abs());
        assert!(circle.min(diag) < 1e-8, "({u}, {v})");
    }
}

#[test]
fn outputs_are_deterministic_and_protected() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(&dir, "a.csv");
    let b = path(&dir, "b.csv");
    for p in [&a, &b] {
        assert!(nmdep(&[
            "sample",
            "--model",
            "clayton:2,90",
            "--n",
            "300",
            "--seed",
            "1",
            "--output",
            s(p)
        ])
        .status
        .success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let again = nmdep(&[
        "sample",
        "--model",
        "frank:1",
        "--n",
        "3",
        "--seed",
        "1",
        "--output",
        s(&a),
    ]);
    assert_eq!(again.status.code(), Some(2));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let forced = nmdep(&[
        "sample",
        "--model",
        "frank:1",
        "--n",
        "3",
        "--seed",
        "1",
        "--output",
        s(&a),
        "--force",
    ]);
    assert!(forced.status.success());
    assert_eq!(read_csv(&a).len(), 3);
}

#[test]
fn sample_round_trips_through_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(&dir, "g.csv");
    nmdep(&[
        "sample",
        "--model",
        "gaussian:0.5",
        "--n",
        "20000",
        "--seed",
        "2",
        "--output",
        s(&f),
    ]);
    let v = ok_json(&["estimate", "--input", s(&f), "--header", "--order", "2"]);
    let p = ok_json(&["matrix", "--model", "gaussian:0.5", "--order", "2"]);
    for j in 0..2 {
        for k in 0..2 {
            let d = v["matrix"][j][k].as_f64().unwrap() - p["matrix"][j][k].as_f64().unwrap();
            assert!(d.abs() < 0.03, "{j} {k} {d}");
        }
    }
}

#[test]
fn maximize_recovers_matching_u_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let d2 = path(&dir, "d2.csv");
    nmdep(&[
        "demo-data",
        "--model",
        "2",
        "--n",
        "1000",
        "--seed",
        "3",
        "--output",
        s(&d2),
    ]);
    let v = ok_json(&["maximize", "--input", s(&d2), "--header", "--order", "6"]);
    let curve =
        |name: &str| -> Vec<f64> { serde_json::from_value(v["curves"][name].clone()).unwrap() };
    let (g, h) = (curve("g"), curve("h"));
    // Positive for u-shapes, negative for inverted u-shapes.
    let bend = |c: &[f64]| c[0] + c[c.len() - 1] - 2.0 * c[c.len() / 2];
    assert!(bend(&g) * bend(&h) > 0.0);
    assert!(bend(&g).abs() > 1.0 && bend(&h).abs() > 1.0);
    assert!(v["rho"].as_f64().unwrap() > 0.5);
}

#[test]
fn fit_recovers_model_from_sample() {
    let dir = tempfile::tempdir().unwrap();
    let spec = path(&dir, "model.json");
    fs::write(
        &spec,
        r#"{"base":{"family":"frank","theta":10.0},
            "t1":{"kind":"vtransform","delta":0.5,"kappa":1.0},
            "t2":{"kind":"vtransform","delta":0.5,"kappa":1.0}}"#,
    )
    .unwrap();
    let data = path(&dir, "data.csv");
    assert!(nmdep(&[
        "sample",
        "--model-spec",
        s(&spec),
        "--n",
        "2000",
        "--seed",
        "4",
        "--output",
        s(&data)
    ])
    .status
    .success());
    let v = ok_json(&[
        "fit",
        "--input",
        s(&data),
        "--header",
        "--model-spec",
        s(&spec),
    ]);
    assert_eq!(v["command"], "fit");
    assert!((v["base"]["theta"].as_f64().unwrap() - 10.0).abs() < 1.5);
    assert!((v["t1"]["delta"].as_f64().unwrap() - 0.5).abs() < 0.05);
    assert_eq!(v["converged"], true);
    assert_eq!(v["n"], 2000);
}

#[test]
fn support_and_small_study() {
    let v = ok_json(&["support", "--j", "3", "--k", "3", "--resolution", "40"]);
    for p in v["points"].as_array().unwrap() {
        let (u, w) = (p["u"].as_f64().unwrap(), p["v"].as_f64().unwrap());
        let e = 20.0 * w * w + 20.0 * u * w + 20.0 * u * u - 30.0 * w - 30.0 * u + 12.0;
        assert!(e.abs() < 1e-8 || (u - w).abs() < 1e-8);
    }

    let dir = tempfile::tempdir().unwrap();
    let cfg = path(&dir, "study.json");
    fs::write(
        &cfg,
        r#"{"families":["gauss"],"targets":[0.5],"sizes":[20],"reps":10,"order":3,
            "estimators":["t1","t3"],"seed":0}"#,
    )
    .unwrap();
    let csv = path(&dir, "table.csv");
    let v = ok_json(&[
        "study",
        "--config",
        s(&cfg),
        "--seed",
        "9",
        "--table-csv",
        s(&csv),
    ]);
    assert_eq!(v["cells"].as_array().unwrap().len(), 2);
    assert_eq!(v["config"]["seed"], 9);
    let table = fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("copula,n,rho0.5_T1,rho0.5_T3\nGauss,20,"));
}
