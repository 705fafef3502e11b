use serde_json::Value;
use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dhopf-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn dhopf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dhopf")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn hashes(dir: &Path) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        let mut h = DefaultHasher::new();
        std::fs::read(e.path()).unwrap().hash(&mut h);
        out.insert(e.file_name().to_string_lossy().into_owned(), h.finish());
    }
    out
}

/// Sweep values where two branch CSVs change order.
fn crossings(a: &Path, b: &Path) -> Vec<f64> {
    let load = |p: &Path| -> BTreeMap<String, f64> {
        csv_rows(p).into_iter().map(|row| (row[0].clone(), row[1].parse().unwrap())).collect()
    };
    let (x, y) = (load(a), load(b));
    let keys: Vec<&String> = x.keys().filter(|k| y.contains_key(*k)).collect();
    let mut keys: Vec<(f64, f64)> = keys.iter().map(|k| (k.parse().unwrap(), x[*k] - y[*k])).collect();
    keys.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    keys.windows(2).filter(|w| w[0].1 * w[1].1 < 0.0).map(|w| 0.5 * (w[0].0 + w[1].0)).collect()
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn epidemic_branches_cross_at_the_double_hopf_points() {
    let dir = scratch("hopf");
    let o = dhopf(&["hopf", "--model", "epidemic", "--sweep", "d2:0.5:40:400", "--waves", "0:3", "--branches", "0", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let f = |n: u32| dir.join(format!("hopf_n{n}_r0_j0.csv"));
    for (a, b, at) in [(2, 3, 1.62), (1, 2, 5.23), (0, 1, 35.2)] {
        let x = crossings(&f(a), &f(b));
        assert!(x.iter().any(|v| (v - at).abs() < 0.15), "branches {a},{b}: {x:?}");
    }
    assert!(std::fs::read_to_string(dir.join("hopf.gp")).unwrap().contains("hopf_n1_r0_j0.csv"));
}

#[test]
fn empty_frequency_set_warns_and_writes_an_empty_file() {
    let dir = scratch("hopf-empty");
    let o = dhopf(&["hopf", "--model", "predprey", "--sweep", "r1:0.5:0.9:10", "--waves", "6:8", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(std::fs::read_to_string(dir.join("hopf_empty.csv")).unwrap().lines().count(), 1);
}

#[test]
fn predprey_double_hopf_point_and_hypotheses() {
    let dir = scratch("dh");
    let d = dir.to_str().unwrap();
    let o = dhopf(&["doublehopf", "--model", "predprey", "--pair", "0:0:1,0:1:0", "--sweep", "r1:0.5:0.9:40", "--out", d]);
    assert_eq!(code(&o), 3, "near-axis slice m = 1 roots fall inside the default strip");
    let v = read_json(&dir.join("doublehopf.json"));
    let mu = &v["points"][0]["mu0"];
    assert!((mu[0].as_f64().unwrap() - 10.4238045).abs() < 1e-6);
    assert!((mu[1].as_f64().unwrap() - 0.6739271475).abs() < 1e-9);

    let o = dhopf(&["doublehopf", "--model", "predprey", "--pair", "0:0:1,0:1:0", "--sweep", "r1:0.5:0.9:80", "--tol.delta", "1e-3", "--out", d]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let w = read_json(&dir.join("doublehopf.json"));
    for k in 0..2 {
        let (a, b) = (mu[k].as_f64().unwrap(), w["points"][0]["mu0"][k].as_f64().unwrap());
        assert!((a - b).abs() < 1e-8, "refined sweep moved the point: {a} vs {b}");
    }
}

#[test]
fn sweep_without_intersection_gives_an_empty_list() {
    let dir = scratch("dh-empty");
    let o = dhopf(&["doublehopf", "--model", "predprey", "--pair", "0:0:1,0:1:0", "--sweep", "r1:0.8:0.9:10", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&dir.join("doublehopf.json"))["points"].as_array().unwrap().len(), 0);
}

#[test]
fn epidemic_normal_form_is_ib() {
    let dir = scratch("nf");
    let o = dhopf(&[
        "normalform", "--model", "epidemic", "--pair", "1:0:0,2:0:0", "--point", "0.53,5.23", "--offset", "0.001,0.0116", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let u = read_json(&dir.join("unfolding.json"));
    assert_eq!(u["label"], "Ib");
    assert_eq!(read_json(&dir.join("region.json"))["label"], "D4");
    let n = read_json(&dir.join("normalform.json"));
    assert_eq!(n["coeffs"]["n"], serde_json::json!([1, 2]));
    assert!(csv_rows(&dir.join("bifurcation_set.csv")).len() >= 4);
    assert!(std::fs::read_to_string(dir.join("bifurcation_set.gp")).unwrap().contains("bifurcation_set.csv"));
}

#[test]
fn predprey_normal_form_is_via() {
    let dir = scratch("nf-pp");
    let o = dhopf(&[
        "normalform", "--model", "predprey", "--pair", "0:0:1,0:1:0", "--sweep", "r1:0.5:0.9:40", "--tol.delta", "1e-3", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&dir.join("unfolding.json"))["label"], "VIa");
}

#[test]
fn zero_nonlinearity_is_a_degenerate_cubic() {
    let dir = scratch("nf-linear");
    let o = dhopf(&[
        "normalform", "--model", &fixture("linear_predprey.json"), "--pair", "0:0:1,0:1:0", "--sweep", "r1:0.5:0.9:40", "--force",
        "--out", dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate cubic"));
}

#[test]
fn usage_errors_exit_with_two() {
    let o = dhopf(&["hopf", "--model", "predprey", "--sweep", "tau:0:1:3"]);
    assert_eq!(code(&o), 2);
    let o = dhopf(&["hopf", "--sweep", "r1:0:1:3"]);
    assert_eq!(code(&o), 2);
    let o = dhopf(&["hopf", "--model", "epidemic", "--params", "zeta=1", "--sweep", "d2:1:2:3"]);
    assert_eq!(code(&o), 2);
    let o = dhopf(&["simulate", "--model", "predprey", "--point", "10.8,0.69", "--dt", "5", "--horizon", "10"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn equilibrium_start_stays_at_equilibrium() {
    let dir = scratch("sim-eq");
    let o = dhopf(&[
        "simulate", "--model", "predprey", "--point", "10.8,0.69", "--init", "n=0;amp=0,0", "--grid", "20", "--horizon", "60", "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.join("simulation.json"));
    assert_eq!(v["runs"][0]["attractor"]["kind"], "Equilibrium");
    for f in ["trajectory.csv", "modes.csv", "crossings.csv", "heatmap.gp", "section.gp"] {
        assert!(dir.join(f).exists(), "{f}");
    }
}

#[test]
fn identical_configurations_give_identical_outputs() {
    let args = |d: &str| {
        vec![
            "simulate".to_string(),
            "--model".into(),
            "epidemic".into(),
            "--point".into(),
            "0.53,5.23".into(),
            "--init".into(),
            "n=1;base=1.2,5.8,4.2;amp=0.01,-0.06,-0.05".into(),
            "--init".into(),
            "n=2;base=1.2,5.8,4.2;amp=0.01,-0.06,-0.05".into(),
            "--grid".into(),
            "12".into(),
            "--horizon".into(),
            "40".into(),
            "--out".into(),
            d.into(),
        ]
    };
    let (a, b) = (scratch("repro-a"), scratch("repro-b"));
    for d in [&a, &b] {
        let o = Command::new(env!("CARGO_BIN_EXE_dhopf")).args(args(d.to_str().unwrap())).output().unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ha, hb) = (hashes(&a), hashes(&b));
    assert_eq!(ha, hb);
    assert!(ha.contains_key("trajectory_1.csv"));
    let v = read_json(&a.join("simulation.json"));
    assert_eq!(v["profile_distances"].as_array().unwrap().len(), 1);

    let (c, d) = (scratch("repro-c"), scratch("repro-d"));
    for dir in [&c, &d] {
        let o = dhopf(&["normalform", "--model", "epidemic", "--pair", "1:0:0,2:0:0", "--point", "0.53,5.23", "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(hashes(&c), hashes(&d));
}
