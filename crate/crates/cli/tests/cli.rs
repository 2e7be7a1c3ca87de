use std::path::Path;
use std::process::{Command, Output};

use cpmap::io::{choi_from_json, density_from_json, target_from_json};
use cpmap::{analytic_r, apply, bloch_state, DensityMatrix, ModelSpec};

fn cpmap(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpmap"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_summary_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = cpmap(
        &[
            "solve", "--model", "unot", "--copies", "1", "--out", "chi.json",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(
        line.starts_with("F = 0.6666666667  bound = 0.6666666667  iters = "),
        "{line}"
    );
    assert!(line.trim_end().ends_with("converged = true"));
    assert!(dir.path().join("chi.json").exists());
}

#[test]
fn solve_then_apply_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (model, extra) in [
        ("unot", None),
        ("entangler-b", None),
        ("shifter", Some("2.1")),
    ] {
        let mut args = vec!["solve", "--model", model, "--out", "chi.json"];
        if let Some(a) = extra {
            args.extend(["--alpha", a]);
        }
        assert!(cpmap(&args, dir.path()).status.success());
        let o = cpmap(
            &[
                "apply", "--chi", "chi.json", "--state", "0.7,1.2", "--out", "rho.json",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));

        let chi =
            choi_from_json(&std::fs::read_to_string(dir.path().join("chi.json")).unwrap()).unwrap();
        let rho = DensityMatrix::pure(&bloch_state(0.7, 1.2)).unwrap();
        let expected = apply(&chi, &rho).unwrap();
        let got = density_from_json(&std::fs::read_to_string(dir.path().join("rho.json")).unwrap())
            .unwrap();
        assert!(
            got.matrix().max_abs_diff(expected.matrix()) < 1e-12,
            "{model}"
        );
    }
}

#[test]
fn apply_accepts_a_density_file() {
    let dir = tempfile::tempdir().unwrap();
    cpmap(
        &["solve", "--model", "entangler-b", "--out", "chi.json"],
        dir.path(),
    );
    std::fs::write(
        dir.path().join("in.json"),
        r#"{"rows":2,"cols":2,"data":[[0.5,0],[0,0],[0,0],[0.5,0]]}"#,
    )
    .unwrap();
    let o = cpmap(
        &["apply", "--chi", "chi.json", "--rho", "in.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = density_from_json(&stdout(&o)).unwrap();
    assert!((out.matrix()[(0, 0)].re - 1.0 / 3.0).abs() < 1e-8);
}

#[test]
fn quadrature_matches_analytic_target() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], ModelSpec); 6] = [
        (
            &["--model", "unot", "--copies", "3"],
            ModelSpec::unot(3).unwrap(),
        ),
        (
            &["--model", "cloner", "--copies", "2"],
            ModelSpec::cloner(2).unwrap(),
        ),
        (&["--model", "entangler-a"], ModelSpec::EntanglerA),
        (&["--model", "entangler-b"], ModelSpec::EntanglerB),
        (
            &["--model", "shifter", "--alpha", "2.5"],
            ModelSpec::shifter(2.5).unwrap(),
        ),
        (&["--model", "identity"], ModelSpec::Identity),
    ];
    for (flags, spec) in cases {
        let mut quad = vec!["rmatrix", "--quadrature"];
        quad.extend_from_slice(flags);
        let mut exact = vec!["rmatrix"];
        exact.extend_from_slice(flags);
        let rq = target_from_json(&stdout(&cpmap(&quad, dir.path()))).unwrap();
        let ra = target_from_json(&stdout(&cpmap(&exact, dir.path()))).unwrap();
        assert!(rq.matrix().max_abs_diff(ra.matrix()) < 1e-10, "{spec}");
        assert!(ra.matrix().max_abs_diff(analytic_r(&spec).matrix()) == 0.0);
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let runs: [&[&str]; 3] = [
        &[
            "solve", "--model", "cloner", "--copies", "3", "--init", "random:7", "--out", "OUT",
        ],
        &[
            "rmatrix",
            "--model",
            "entangler-a",
            "--samples",
            "20000",
            "--seed",
            "5",
            "--out",
            "OUT",
        ],
        &[
            "validate",
            "--chi",
            "chi.json",
            "--model",
            "unot",
            "--samples",
            "5000",
            "--seed",
            "9",
        ],
    ];
    cpmap(&["solve", "--model", "unot", "--out", "chi.json"], p);
    for args in runs {
        let mut outputs = Vec::new();
        for tag in ["a", "b"] {
            let name = format!("{tag}.json");
            let args: Vec<&str> = args
                .iter()
                .map(|a| if *a == "OUT" { name.as_str() } else { a })
                .collect();
            let o = cpmap(&args, p);
            assert!(o.status.success(), "{}", stderr(&o));
            let file = std::fs::read(p.join(&name)).unwrap_or_default();
            outputs.push((o.stdout, file));
        }
        assert_eq!(outputs[0], outputs[1], "{args:?}");
    }
}

#[test]
fn scan_csv_is_independent_of_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let base = [
        "scan",
        "--model",
        "shifter",
        "--from",
        "0",
        "--to",
        "3.14159265",
        "--steps",
        "101",
    ];
    let mut one = base.to_vec();
    one.extend(["--jobs", "1", "--csv", "one.csv"]);
    let mut four = base.to_vec();
    four.extend(["--jobs", "4", "--csv", "four.csv"]);
    assert!(cpmap(&one, p).status.success());
    assert!(cpmap(&four, p).status.success());
    let a = std::fs::read_to_string(p.join("one.csv")).unwrap();
    let b = std::fs::read_to_string(p.join("four.csv")).unwrap();
    assert_eq!(a, b);

    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "alpha,beta_opt,F_solver,F_closed,F_bound");
    assert_eq!(lines.len(), 102);
    let mid: Vec<f64> = lines[51].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((mid[0] - 1.570796325).abs() < 1e-9);
    assert!((mid[2] - 0.892699).abs() < 1e-6);
    for field in lines[51].split(',') {
        let digits = field.chars().filter(char::is_ascii_digit).count();
        assert!(digits >= 12, "{field}");
    }
}

#[test]
fn bound_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let o = cpmap(&["bound", "--model", "cloner", "--copies", "3"], dir.path());
    assert_eq!(stdout(&o).trim(), "bound = 0.5");
    let o = cpmap(&["bound", "--model", "entangler-b"], dir.path());
    assert_eq!(stdout(&o).trim(), "bound = 0.3333333333");

    cpmap(
        &[
            "rmatrix", "--model", "unot", "--copies", "2", "--out", "r.json",
        ],
        dir.path(),
    );
    let o = cpmap(&["bound", "--r", "r.json"], dir.path());
    assert_eq!(stdout(&o).trim(), "bound = 0.75");
}

#[test]
fn curve_for_entangler_a() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    cpmap(&["solve", "--model", "entangler-a", "--out", "chi.json"], p);
    let o = cpmap(
        &[
            "curve",
            "--model",
            "entangler-a",
            "--chi",
            "chi.json",
            "--steps",
            "5",
            "--csv",
            "c.csv",
        ],
        p,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(p.join("c.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "theta,F");
    assert_eq!(lines.len(), 6);
}

#[test]
fn kraus_and_dilate_write_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    cpmap(&["solve", "--model", "unot", "--out", "chi.json"], p);
    let o = cpmap(&["kraus", "--chi", "chi.json", "--out", "k.json"], p);
    assert!(
        stdout(&o).starts_with("3 Kraus operators"),
        "{}",
        stdout(&o)
    );
    let k: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("k.json")).unwrap()).unwrap();
    assert_eq!(k["operators"].as_array().unwrap().len(), 3);

    let o = cpmap(&["dilate", "--chi", "chi.json"], p);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["rows"].as_u64(), v["cols"].as_u64()), (Some(6), Some(2)));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();

    let o = cpmap(&["solve", "--model", "cloner", "--copies", "0"], p);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.starts_with("error: ") && err.lines().count() == 1,
        "{err}"
    );

    assert_eq!(cpmap(&["solve"], p).status.code(), Some(2));
    assert_eq!(cpmap(&["frobnicate"], p).status.code(), Some(2));
    assert_eq!(cpmap(&["--help"], p).status.code(), Some(0));

    let o = cpmap(
        &[
            "solve",
            "--model",
            "shifter",
            "--alpha",
            "1.0",
            "--max-iters",
            "2",
            "--strict",
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(4));
    let o = cpmap(
        &[
            "solve",
            "--model",
            "shifter",
            "--alpha",
            "1.0",
            "--max-iters",
            "2",
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(0));

    // diag(1, 1, 1, 0): not trace preserving
    std::fs::write(
        p.join("bad.json"),
        r#"{"kind":"choi","dim_in":2,"dim_out":2,"ordering":"in_tensor_out","rows":4,"cols":4,
           "data":[[1,0],[0,0],[0,0],[0,0],[0,0],[1,0],[0,0],[0,0],
                   [0,0],[0,0],[1,0],[0,0],[0,0],[0,0],[0,0],[0,0]]}"#,
    )
    .unwrap();
    let o = cpmap(&["kraus", "--chi", "bad.json"], p);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: "));
}

#[test]
fn init_from_file_and_random() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    cpmap(&["solve", "--model", "unot", "--out", "opt.json"], p);
    let o = cpmap(&["solve", "--model", "unot", "--init", "opt.json"], p);
    assert!(stdout(&o).starts_with("F = 0.6666666667"), "{}", stdout(&o));
    let o = cpmap(&["solve", "--model", "unot", "--init", "random:3"], p);
    assert!(stdout(&o).starts_with("F = 0.6666666667"), "{}", stdout(&o));
    let o = cpmap(&["solve", "--model", "unot", "--init", "random:x"], p);
    assert_eq!(o.status.code(), Some(2));
}
