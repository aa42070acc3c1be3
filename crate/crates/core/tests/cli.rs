use std::fs;
use std::path::Path;

use bdnk_lab::cli::{self, Command, RunConfig, EXIT_CLAIM, EXIT_PASS, EXIT_USAGE};
use bdnk_lab::fluid::{Domain, Eos, MasslessIdeal, Mode, PressureJet};
use bdnk_lab::shock;

/// Massless ideal pressure with a number density that is off by 1%.
#[derive(Debug)]
struct WrongDensity(MasslessIdeal);

impl Eos for WrongDensity {
    fn name(&self) -> &str {
        "wrong-density"
    }
    fn mode(&self) -> Mode {
        Mode::Full
    }
    fn domain(&self) -> &Domain {
        self.0.domain()
    }
    fn pressure(&self, theta: f64, psi: f64) -> PressureJet {
        self.0.pressure(theta, psi)
    }
    fn energy_density(&self, theta: f64, psi: f64) -> f64 {
        self.0.energy_density(theta, psi)
    }
    fn number_density(&self, theta: f64, psi: f64) -> f64 {
        1.01 * self.0.number_density(theta, psi)
    }
}

fn cfg_in(dir: &Path) -> RunConfig {
    RunConfig { out: dir.to_path_buf(), quiet: true, ..Default::default() }
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn default_eos_check_passes() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    assert_eq!(cli::run(["bdnk-lab", "eos-check", "--quiet", "--out", out]), EXIT_PASS);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("eos_check.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert!(report["wall_clock_seconds"].as_f64().is_some());
    assert!(report["artifact_version"].as_u64().is_some());
}

#[test]
fn inconsistent_eos_fails_with_claim_code() {
    let d = tempfile::tempdir().unwrap();
    let eos = WrongDensity(MasslessIdeal::new(1.0).unwrap());
    let o = cli::execute(Command::EosCheck, &cfg_in(d.path()), &eos).unwrap();
    assert_eq!(o.code, EXIT_CLAIM);
    let claims = o.report["report"]["claims"].as_array().unwrap();
    let bad: Vec<_> = claims.iter().filter(|c| c["passed"] == false).collect();
    assert!(bad.iter().any(|c| c["name"].as_str().unwrap().starts_with("n = p_psi")), "{bad:?}");
    assert!(claims.iter().any(|c| c["name"].as_str().unwrap().starts_with("rho + p") && c["passed"] == true));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    for (name, text) in [
        ("unknown.toml", "samples = 10\nfrobnicate = true\n"),
        ("syntax.toml", "samples = = 3\n"),
        ("bad.json", "{\"eos\": {\"name\": \"no-such-eos\"}}"),
        ("range.toml", "alphas = []\n"),
    ] {
        let p = d.path().join(name);
        fs::write(&p, text).unwrap();
        let code = cli::run(["bdnk-lab", "eos-check", "--quiet", "--out", out, "--config", p.to_str().unwrap()]);
        assert_eq!(code, EXIT_USAGE, "{name}");
    }
    assert_eq!(cli::run(["bdnk-lab", "--seed", "x", "eos-check"]), EXIT_USAGE);
    assert_eq!(cli::run(["bdnk-lab", "no-such-command"]), EXIT_USAGE);
}

#[test]
fn toml_and_json_configs_agree() {
    let toml_text = "seed = 9\nalphas = [0.04, 0.02]\n[eos]\nname = \"barotropic-radiation\"\na = 2.0\n[coeffs]\nnu = 0.5\n";
    let json_text =
        r#"{"seed": 9, "alphas": [0.04, 0.02], "eos": {"name": "barotropic-radiation", "a": 2.0}, "coeffs": {"nu": 0.5}}"#;
    let a = RunConfig::parse(toml_text).unwrap();
    let b = RunConfig::parse(json_text).unwrap();
    assert_eq!(a, b);
    assert_eq!(cli::config_hash(&a), cli::config_hash(&b));
    assert_ne!(cli::config_hash(&a), cli::config_hash(&RunConfig::default()));
}

#[test]
fn scan_grid_has_one_row_per_point() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(d.path());
    cfg.scan.points = 5;
    cfg.scan.directions = vec![[1.0, 0.0, 0.0]];
    let eos = MasslessIdeal::new(1.0).unwrap();
    let o = cli::execute(Command::CausalityScan, &cfg, &eos).unwrap();
    assert_eq!(o.code, EXIT_PASS);
    let (header, rows) = read_csv(&d.path().join("causality_scan.csv"));
    assert_eq!(header, ["lambda", "mu", "nu", "direction_id", "max_abs_speed", "all_real", "causal"]);
    assert_eq!(rows.len(), 125);
}

#[test]
fn profile_csv_has_monotone_acoustic_coordinate() {
    let d = tempfile::tempdir().unwrap();
    let cfg = cfg_in(d.path());
    assert_eq!(cfg.shock.alpha, 0.05);
    let eos = MasslessIdeal::new(1.0).unwrap();
    let o = cli::execute(Command::Profile, &cfg, &eos).unwrap();
    assert_eq!(o.code, EXIT_PASS, "{}", o.report);
    let (header, rows) = read_csv(&d.path().join("profile.csv"));
    assert_eq!(header, ["s", "psi_0", "psi_1", "psi_2", "psi_3", "psi_4", "residual_norm"]);
    let r = shock::sonic_base_state(&eos, cfg.shock.theta, cfg.shock.psi).unwrap().r;
    let coord: Vec<f64> = rows
        .iter()
        .map(|row| (0..5).map(|k| r[k] * row[k + 1].parse::<f64>().unwrap()).sum())
        .collect();
    assert!(rows.len() > 100);
    assert!(coord.windows(2).all(|w| w[1] < w[0]) || coord.windows(2).all(|w| w[1] > w[0]));
    let s: Vec<f64> = rows.iter().map(|row| row[0].parse().unwrap()).collect();
    assert!(s.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sweep_emits_hausdorff_trend() {
    let d = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(d.path());
    cfg.eos = cfg.eos.barotropic();
    cfg.alphas = vec![0.08, 0.04, 0.02];
    let eos = cfg.eos.build().unwrap();
    let o = cli::execute(Command::Sweep, &cfg, eos.as_ref()).unwrap();
    assert_eq!(o.code, EXIT_PASS, "{}", o.report);
    let (header, rows) = read_csv(&d.path().join("sweep.csv"));
    assert_eq!(rows.len(), 3);
    let col = header.iter().position(|h| h == "hausdorff").unwrap();
    let h: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
    assert!(h[1] < h[0] && h[2] < h[1], "{h:?}");
    let ratio = header.iter().position(|h| h == "ratio").unwrap();
    assert!(rows[0][ratio].is_empty() && !rows[1][ratio].is_empty());
}
