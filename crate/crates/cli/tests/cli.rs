use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twophoton"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (i32, String) {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let path_str = path.to_str().unwrap().to_string();
    full.extend(["--out", &path_str]);
    let out = run(&full);
    let text = fs::read_to_string(&path).unwrap_or_default();
    (out.status.code().unwrap(), text)
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gcurve_layout() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "g.csv", &["gcurve", "--g", "0.25", "--e-steps", "11"]);
    assert_eq!(code, 0);
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# twophoton "));
    assert!(meta.contains("config-sha256="));
    assert_eq!(lines.next().unwrap(), "g,q,E,G_plus,G_minus,nearest_pole,converged");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 22);
    assert!(rows.iter().all(|r| r.len() == 7));
    // 17 significant digits
    assert_eq!(rows[0][2], "-2.0000000000000000e0");
}

#[test]
fn empty_window_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "g.csv", &["gcurve", "--g", "0.3", "--e-min", "2", "--e-max", "1"]);
    assert_eq!(code, 0);
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["spectrum", "--g-min", "0.1", "--g-max", "0.45", "--g-steps", "4", "--e-max", "3"];
    let (c1, a) = run_to(dir.path(), "a.csv", &args);
    let (c2, b) = run_to(dir.path(), "b.csv", &args);
    assert_eq!((c1, c2), (0, 0));
    assert!(!data_rows(&a).is_empty());
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["spectrum", "--g", "0.5"]).status.code(), Some(1));
    assert_eq!(run(&["spectrum", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    // the G-function is undefined at g = 0: numerical failure, header kept
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "s.csv", &["spectrum", "--g", "0"]);
    assert_eq!(code, 2);
    assert!(text.lines().nth(1).unwrap().starts_with("g,q,parity,level_index,energy"));
}

#[test]
fn json_embeds_round_trippable_config() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(
        dir.path(),
        "v.json",
        &["variational", "--g-min", "0.1", "--g-max", "0.4", "--g-steps", "4", "--format", "json"],
    );
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
    let config: twophoton_cli::config::RunConfig = serde_json::from_value(doc["config"].clone()).unwrap();
    assert_eq!(config.hash(), doc["config_sha256"].as_str().unwrap());
    assert_eq!(config.coupling_grid_or(&[]).len(), 4);
}

#[test]
fn spectrum_and_oracle_agree() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--g", "0.3", "--omega", "3", "--e-min", "-2", "--e-max", "4"];
    let spec: Vec<&str> = ["spectrum"].iter().chain(common.iter()).copied().collect();
    let orac: Vec<&str> = ["oracle"].iter().chain(common.iter()).copied().collect();
    let (c1, s) = run_to(dir.path(), "s.csv", &spec);
    let (c2, o) = run_to(dir.path(), "o.csv", &orac);
    assert_eq!((c1, c2), (0, 0));
    let energies = |text: &str| -> Vec<(String, String, f64)> {
        let mut v: Vec<_> = data_rows(text)
            .into_iter()
            .map(|r| (r[1].clone(), r[2].clone(), r[4].parse::<f64>().unwrap()))
            .collect();
        v.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)).then(a.2.total_cmp(&b.2)));
        v
    };
    let (a, b) = (energies(&s), energies(&o));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((&x.0, &x.1), (&y.0, &y.1));
        assert!((x.2 - y.2).abs() < 1e-8, "{x:?} vs {y:?}");
    }
}

#[test]
fn compare_columns_line_up() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "c.csv", &["compare", "--g", "0.3", "--order", "0,1,8"]);
    assert_eq!(code, 0);
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "g,gfunction,oracle,oracle_fock_cutoff,approx-0,approx-1,approx-8,variational,variational_r"
    );
    let row = &data_rows(&text)[0];
    let num = |i: usize| row[i].parse::<f64>().unwrap();
    assert!((num(1) - num(2)).abs() < 1e-9);
    // oracle ≤ variational ≤ first order
    assert!(num(2) <= num(7) + 1e-9 && num(7) <= num(5) + 1e-9);
}

#[test]
fn gap_report_keeps_a_gap() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "gap.csv", &["gap-report"]);
    assert_eq!(code, 0);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!(r[3].parse::<f64>().unwrap() < -0.5 - 0.1);
        assert!(r[7].parse::<f64>().unwrap() > 0.1);
    }
}
