use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_pecthresh");

const MINIMAL_SWEEP: &str = r#"
engine = "replica"
topology = "all-to-all"
disorder = "spacetime"
p = 0.5
q_bar = 0.2
ratios = [0.5]
sizes = [4]
realizations = 10
probe = "renyi2"
"#;

fn run(sub: &str, config: &str, dir: &Path, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{sub}.toml"));
    fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn minimal_sweep_has_one_row_with_count_ten() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("sweep", MINIMAL_SWEEP, dir.path(), &["--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/sweep.csv"));
    assert_eq!(h, ["n", "ratio", "depth", "mean", "std", "stderr", "count", "non_finite"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][col(&h, "count")], "10");
    assert_eq!(rows[0][col(&h, "depth")], "4");

    let manifest: toml::Table = fs::read_to_string(dir.path().join("out/manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["subcommand"].as_str(), Some("sweep"));
    assert_eq!(manifest["seed"].as_integer(), Some(7));
    assert!(manifest.contains_key("wall_time_seconds"));
    assert_eq!(manifest["config"]["seed"].as_integer(), Some(7));
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("sweep", MINIMAL_SWEEP, dir.path(), &[]).status.success());
    let (h, rows) = read_csv(&dir.path().join("out/sweep.csv"));
    let mean = &rows[0][col(&h, "mean")];
    let mantissa = mean.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{mean}");
}

#[test]
fn missing_key_exits_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = MINIMAL_SWEEP.replace("realizations = 10\n", "");
    let out = run("sweep", &config, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("realizations"));
    assert!(!dir.path().join("out/sweep.csv").exists());
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("sweep", &format!("{MINIMAL_SWEEP}colour = 3\n"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn invalid_value_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("sweep", &MINIMAL_SWEEP.replace("q_bar = 0.2", "q_bar = 1.5"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rerun_is_byte_identical_and_worker_count_is_irrelevant() {
    let config = MINIMAL_SWEEP.replace("sizes = [4]", "sizes = [4, 6]").replace("ratios = [0.5]", "ratios = [0.0, 0.5, 0.9]");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run("sweep", &config, a.path(), &["--workers", "1"]).status.success());
    assert!(run("sweep", &config, b.path(), &["--workers", "3"]).status.success());
    let x = fs::read(a.path().join("out/sweep.csv")).unwrap();
    let y = fs::read(b.path().join("out/sweep.csv")).unwrap();
    assert_eq!(x, y);
    assert!(run("sweep", &config, a.path(), &["--workers", "2"]).status.success());
    assert_eq!(fs::read(a.path().join("out/sweep.csv")).unwrap(), x);
}

#[test]
fn meanfield_threshold_trajectories_and_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let config = "j = 1.0\np = 0.5\ngamma_a = 10.0\ndelta1 = [0.0, 2.0, 4.0]\nt_end = 20.0\nseed = 3\n";
    let out = run("meanfield", config, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let (h, rows) = read_csv(&dir.path().join("out/threshold.csv"));
    let thr: f64 = rows[0][col(&h, "threshold")].parse().unwrap();
    assert!((thr - 3.0).abs() < 1e-6, "{thr}");

    let (h, rows) = read_csv(&dir.path().join("out/trajectories.csv"));
    let (d, norm, div) = (col(&h, "delta1"), col(&h, "norm"), col(&h, "diverged"));
    let still: Vec<f64> = rows.iter().filter(|r| r[d].parse::<f64>().unwrap() == 0.0).map(|r| r[norm].parse().unwrap()).collect();
    assert!(still.len() > 10);
    assert!(still.windows(2).all(|w| w[1] <= w[0]));
    let flag = |delta: f64| rows.iter().find(|r| r[d].parse::<f64>().unwrap() == delta).unwrap()[div].clone();
    assert_eq!(flag(2.0), "false");
    assert_eq!(flag(4.0), "true");

    let (h, rows) = read_csv(&dir.path().join("out/fixed_points.csv"));
    assert_eq!(rows.len(), 9);
    assert!(h.contains(&"eig1_re".to_string()));
}

#[test]
fn instability_at_zero_disorder_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let config = "sizes = [8]\np = 0.5\nq1 = 0.1\nq2 = 0.1\nd_max = 16\nseed = 1\n";
    let out = run("instability", config, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/instability.csv"));
    let slope: f64 = rows[0][col(&h, "slope")].parse().unwrap();
    assert!(slope.abs() < 1e-9, "{slope}");
    let (_, traces) = read_csv(&dir.path().join("out/traces.csv"));
    assert_eq!(traces.len(), 16);
}

#[test]
fn xeb_perfect_mitigation_gives_zero_log_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let config = "sizes = [2, 4]\ndepths = [1, 2, 4]\nratios = [0.0]\np = 0.5\nq_bar = 0.1\nrealizations = 5\nexact = true\n";
    let out = run("xeb", config, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/fidelity.csv"));
    assert_eq!(rows.len(), 6);
    for r in &rows {
        let v: f64 = r[col(&h, "neg_log_f_m_per_n")].parse().unwrap();
        assert!(v.abs() < 1e-9, "{v}");
        let u: f64 = r[col(&h, "neg_log_f_per_n")].parse().unwrap();
        assert!(u > 0.0);
    }
    assert!(dir.path().join("out/beta.csv").exists());
}

#[test]
fn collapse_reads_sweep_data_and_scans() {
    let dir = tempfile::tempdir().unwrap();
    let config = MINIMAL_SWEEP.replace("sizes = [4]", "sizes = [4, 6, 8]").replace("ratios = [0.5]", "ratios = [0.2, 0.5, 0.8, 1.0]");
    assert!(run("sweep", &config, dir.path(), &[]).status.success());
    let data = dir.path().join("out/sweep.csv");
    let collapse = format!(
        "data = {:?}\nsigma_grid = {{ start = 0.3, stop = 0.7, step = 0.1 }}\nmu_grid = {{ start = 0.5, stop = 1.5, step = 0.5 }}\n",
        data.to_str().unwrap()
    );
    let out = run("collapse", &collapse, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, surface) = read_csv(&dir.path().join("out/surface.csv"));
    assert_eq!(surface.len(), 15);
    let (_, crossing) = read_csv(&dir.path().join("out/crossing.csv"));
    assert_eq!(crossing.len(), 3);

    let single = format!("data = {:?}\n", data.to_str().unwrap());
    let out = run("collapse", &single, dir.path(), &["--sigma-c", "0.65", "--mu", "1.0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = read_csv(&dir.path().join("out/collapse.csv"));
    assert_eq!(rows[0][col(&h, "sigma_c")].parse::<f64>().unwrap(), 0.65);

    let out = run("collapse", &single, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_columns() {
    let out = Command::new(BIN).args(["sweep", "--help"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("non_finite"));
    assert!(text.contains("--workers"));
}
