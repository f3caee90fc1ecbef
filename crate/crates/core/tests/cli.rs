use std::path::{Path, PathBuf};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jetprolong"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn points(pts: &[[f64; 8]]) -> String {
    let rows: Vec<String> = pts.iter().map(|p| format!("[{}]", p.map(|v| format!("{v:?}")).join(", "))).collect();
    format!("points = [{}]\n", rows.join(", "))
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out = bin().args(args).output().unwrap();
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn random_points(seed: u64, n: usize, fix: impl Fn(&mut [f64; 8])) -> Vec<[f64; 8]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut v: [f64; 8] = std::array::from_fn(|_| (rng.gen_range(-1.0f64..1.0) * 8.0).round() / 8.0);
            fix(&mut v);
            v
        })
        .collect()
}

#[test]
fn classify_wave_batch() {
    let dir = tempfile::tempdir().unwrap();
    let pde = write(dir.path(), "pde.toml", "equation = \"s\"\n");
    let pts = write(dir.path(), "pts.toml", &points(&random_points(1, 10, |v| v[6] = 0.0)));
    let (code, v, _) = run(&["classify", pde.to_str().unwrap(), pts.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["schema_version"], 1);
    let p = v["result"]["points"].as_array().unwrap();
    assert_eq!(p.len(), 10);
    for e in p {
        assert_eq!(e["class"], "Hyperbolic");
        assert_eq!(e["delta_exact"], "-1/4");
        assert_eq!(e["delta"], -0.25);
    }
}

#[test]
fn classify_mixed_equation() {
    // on rt - s^2 = x the discriminant equals x
    let dir = tempfile::tempdir().unwrap();
    let pde = write(dir.path(), "pde.toml", "equation = \"r*t - s^2 - x\"\n");
    let pts = random_points(2, 12, |v| v[5] = 1.0 + v[5].abs());
    let file = write(dir.path(), "pts.toml", &points(&pts));
    let (code, v, err) = run(&["classify", pde.to_str().unwrap(), file.to_str().unwrap(), "--project", "t"]);
    assert_eq!(code, 0, "{err}");
    for (e, p) in v["result"]["points"].as_array().unwrap().iter().zip(&pts) {
        let want = if p[0] < 0.0 {
            "Hyperbolic"
        } else if p[0] > 0.0 {
            "Elliptic"
        } else {
            "Parabolic"
        };
        assert_eq!(e["class"], want, "{p:?}");
    }
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let pde = write(dir.path(), "pde.toml", "equation = \"r + * t\"\n");
    let pts = write(dir.path(), "pts.toml", &points(&[[0.0; 8]]));
    let (code, _, err) = run(&["classify", pde.to_str().unwrap(), pts.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("position 4"), "{err}");

    let pde = write(dir.path(), "wave.toml", "equation = \"s\"\n");
    let off = write(dir.path(), "off.toml", &points(&[[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]]));
    let (code, _, err) = run(&["fiber", pde.to_str().unwrap(), off.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("off the surface"));
}

#[test]
fn non_regular_point_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let pde = write(dir.path(), "pde.toml", "equation = \"r*t - s^2\"\n");
    let pts = write(dir.path(), "pts.toml", &points(&[[0.0; 8]]));
    let (code, v, _) = run(&["classify", pde.to_str().unwrap(), pts.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(v["status"], "rejected");
    assert_eq!(v["result"]["points"][0]["class"], "NonRegular");
}

#[test]
fn fiber_topologies_of_the_models() {
    let dir = tempfile::tempdir().unwrap();
    for (eq, fix, label, sing) in [
        ("s", 6usize, "Torus", 0usize),
        ("r + t", 7, "Sphere", 0),
        ("r", 5, "PinchedTorus", 1),
    ] {
        let pde = write(dir.path(), "pde.toml", &format!("equation = \"{eq}\"\n"));
        let pts = random_points(3, 2, |v| v[fix] = if eq == "r + t" { -v[5] } else { 0.0 });
        let file = write(dir.path(), "pts.toml", &points(&pts));
        let (code, v, err) =
            run(&["fiber", pde.to_str().unwrap(), file.to_str().unwrap(), "--oracle", "--oracle-samples", "20000"]);
        assert_eq!(code, 0, "{err}");
        for e in v["result"]["points"].as_array().unwrap() {
            assert_eq!(e["topology"]["label"], label);
            assert_eq!(e["topology"]["singular_points"].as_array().unwrap().len(), sing);
            assert_eq!(e["oracle"]["singular_points"], sing);
        }
    }
}

#[test]
fn symbol_of_hyperbolic_generic_point() {
    let dir = tempfile::tempdir().unwrap();
    let pde = write(dir.path(), "pde.toml", "equation = \"s\"\n");
    let pts = write(dir.path(), "pts.toml", &points(&random_points(4, 3, |v| v[6] = 0.0)));
    let (code, v, err) = run(&["symbol", pde.to_str().unwrap(), pts.to_str().unwrap(), "--free", "0.3,-0.6"]);
    assert_eq!(code, 0, "{err}");
    for e in v["result"]["points"].as_array().unwrap() {
        assert_eq!(e["at"]["stratum"], 0);
        assert_eq!(e["graded_dims"], serde_json::json!([4, 2, 2, 1]));
        assert_eq!(e["reference_match"]["reference"], "hyp-m0");
        assert_eq!(e["reference_match"]["matched"], true);
    }
}

#[test]
fn derived_flag_stalls_on_the_deepest_stratum() {
    let dir = tempfile::tempdir().unwrap();
    let pde = write(dir.path(), "pde.toml", "equation = \"r + t\"\n");
    let pts = write(dir.path(), "pts.toml", &points(&random_points(5, 2, |v| v[7] = -v[5])));
    let (code, v, err) = run(&["derived", pde.to_str().unwrap(), pts.to_str().unwrap(), "--chart", "VI", "--free", "0,0"]);
    assert_eq!(code, 0, "{err}");
    for e in v["result"]["points"].as_array().unwrap() {
        assert_eq!(e["at"]["stratum"], 2);
        assert_eq!(e["flag"]["weak_ranks"], serde_json::json!([8, 8]));
    }
}

#[test]
fn elliptic_tower_keeps_its_type() {
    let dir = tempfile::tempdir().unwrap();
    let pde = write(dir.path(), "pde.toml", "equation = \"r + t\"\n");
    let pts = write(dir.path(), "pts.toml", &points(&random_points(6, 2, |v| v[7] = -v[5])));
    let (code, v, err) = run(&["prolong", pde.to_str().unwrap(), pts.to_str().unwrap(), "-k", "2"]);
    assert_eq!(code, 0, "{err}");
    for e in v["result"]["points"].as_array().unwrap() {
        let levels = e["levels"].as_array().unwrap();
        let dims: Vec<u64> = levels.iter().map(|l| l["ambient_dim"].as_u64().unwrap()).collect();
        assert_eq!(dims, [7, 9, 11]);
        assert!(levels.iter().all(|l| l["kind"] == "EllipticType"));
    }
}

#[test]
fn rank4_type_agrees_with_classification() {
    let dir = tempfile::tempdir().unwrap();
    let pde = write(dir.path(), "pde.toml", "equation = \"r*t - s^2 - x\"\n");
    let pts = write(dir.path(), "pts.toml", &points(&random_points(7, 6, |v| v[5] = 1.0 + v[5].abs())));
    let (code, v, err) = run(&["rank4-type", pde.to_str().unwrap(), pts.to_str().unwrap(), "--project", "t"]);
    assert_eq!(code, 0, "{err}");
    for e in v["result"]["points"].as_array().unwrap() {
        assert_eq!(e["agrees"], true, "{e}");
    }
}

#[test]
fn solve_wave_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "solve.toml",
        "model = \"wave\"\nparams = \"xt\"\ndesignated = [0.3, 0.0]\n[functions]\ny = \"t^2\"\nz0 = \"x^3\"\n",
    );
    let (code, v, err) = run(&["solve", input.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let rep = &v["result"]["verification"];
    assert_eq!(rep["pass"], true);
    assert_eq!(rep["corank_at_designated"], 1);
    assert_eq!(v["result"]["components"]["B"], "2*t");

    let (code, v, _) = run(&["verify-solution", input.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["verification"]["pass"], true);
}

#[test]
fn corrupted_surface_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    // y = t, z0 = x^2 with q shifted by 1/100
    let input = write(
        dir.path(),
        "bad.toml",
        "model = \"wave\"\nchart = \"B\"\nvariables = [\"x\", \"t\"]\n[components]\n\
         x = \"x\"\ny = \"t\"\nz = \"t^3/6 + x^2\"\np = \"2*x\"\nq = \"t^2/2 + 1/100\"\nr = \"2\"\nt = \"t\"\nB = \"1\"\nc = \"0\"\n",
    );
    let (code, v, _) = run(&["verify-solution", input.to_str().unwrap()]);
    assert_eq!(code, 2);
    let rep = &v["result"]["verification"];
    assert_eq!(rep["pass"], false);
    assert!((rep["max_residual"].as_f64().unwrap() - 0.01).abs() < 1e-9, "{rep}");
}

#[test]
fn holomorphic_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "l.toml", "model = \"laplace\"\n[functions]\ny = \"r^2\"\nx = \"s\"\n");
    let (code, v, _) = run(&["solve", input.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(v["result"]["error"].as_str().unwrap().contains("Cauchy-Riemann"));
}

#[test]
fn chart_tables_dump() {
    let (code, v, _) = run(&["charts"]);
    assert_eq!(code, 0);
    let g = &v["result"]["grassmann_charts"];
    let mut total = 0;
    let mut empty = 0;
    for k in ["hyperbolic", "parabolic", "elliptic"] {
        for c in g[k].as_array().unwrap() {
            total += 1;
            empty += c["empty"].as_bool().unwrap() as usize;
        }
    }
    assert_eq!((total, empty), (18, 3));
    assert_eq!(v["result"]["atlas"].as_array().unwrap().len(), 6);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let pde = write(dir.path(), "pde.toml", "equation = \"r\"\n");
    let pts = write(dir.path(), "pts.toml", &points(&random_points(8, 4, |v| v[5] = 0.0)));
    let mut outs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("o{i}.json"));
        let (code, _, err) = run(&[
            "prolong",
            pde.to_str().unwrap(),
            pts.to_str().unwrap(),
            "-k",
            "2",
            "--seed",
            "9",
            "--json-out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        outs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}
