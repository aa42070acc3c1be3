//! Acceptance criteria 1-9. Runs without the test harness so the
//! PASS/FAIL line for each criterion is always printed; exits 1 if any fails.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use bdnk_lab::cli::{self, Command, RunConfig};
use bdnk_lab::dissipation::DissipationCoeffs;
use bdnk_lab::fluid::{BarotropicRadiation, Eos, MasslessIdeal};
use bdnk_lab::shock::{HugoniotOptions, ProfileOptions};
use bdnk_lab::suites::{self, Claim, ShockSetup, SuiteReport, EPS_LIST};

const SEED: u64 = 20_241_016;
const ALPHAS: [f64; 3] = [0.08, 0.04, 0.02];

struct Verdict {
    passed: bool,
    detail: String,
}

fn summarize(claims: &[&Claim]) -> String {
    claims
        .iter()
        .map(|c| match c.target {
            Some(t) if c.tolerance > 0.0 => format!("{} = {:.4} (want {t} ± {})", c.name, c.measured, c.tolerance),
            Some(_) => format!("{} {}", c.name, if c.passed { "holds" } else { "FAILS" }),
            None => format!("{} = {:.2e} (< {:.0e})", c.name, c.measured, c.tolerance),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn from_reports(reports: &[&SuiteReport]) -> Verdict {
    let claims: Vec<&Claim> = reports.iter().flat_map(|r| &r.claims).collect();
    Verdict { passed: claims.iter().all(|c| c.passed), detail: summarize(&claims) }
}

fn failed(e: impl std::fmt::Display) -> Verdict {
    Verdict { passed: false, detail: format!("error: {e}") }
}

/// Runs `f`, adds the runtime bound and prints the criterion line.
fn criterion(n: usize, limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> bool {
    let t0 = Instant::now();
    let mut v = f();
    let dt = t0.elapsed();
    if let Some(l) = limit {
        v.passed &= dt < l;
        v.detail.push_str(&format!("; runtime {:.2}s (< {}s)", dt.as_secs_f64(), l.as_secs()));
    }
    println!("criterion {n}: {} {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
    v.passed
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn shock_claims<'a>(rep: &'a SuiteReport, names: &[&str]) -> Vec<&'a Claim> {
    rep.claims.iter().filter(|c| names.iter().any(|n| c.name.starts_with(n))).collect()
}

/// Claims of criterion 7 (a)-(c).
const RH_PROFILE_ORIENTATION: [&str; 5] =
    ["Rankine-Hugoniot", "endpoint residual", "end states reached", "max ODE residual", "psi_minus"];

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn reproducible_run(cfg: &RunConfig, eos: &dyn Eos) -> Result<Vec<(String, Vec<u8>)>, String> {
    for c in [Command::Verify, Command::CausalityScan, Command::Profile] {
        cli::execute(c, cfg, eos).map_err(|e| e.to_string())?;
    }
    Ok(csv_bytes(&cfg.out))
}

fn main() {
    let massless = MasslessIdeal::new(1.0).unwrap();
    let baro = BarotropicRadiation::new(1.0).unwrap();
    let coeffs = DissipationCoeffs::default();
    let (hopts, popts, setup) = (HugoniotOptions::default(), ProfileOptions::default(), ShockSetup::default());
    let mut all = true;

    all &= criterion(1, secs(5), || from_reports(&[&suites::eos_suite(&massless, 1000, SEED)]));

    all &= criterion(2, secs(5), || match suites::equilibrium_suite(&massless, &coeffs, 100, SEED) {
        Ok(r) => from_reports(&[&r]),
        Err(e) => failed(e),
    });

    all &= criterion(3, secs(10), || match suites::excess_entropy_suite(&massless, &coeffs, 100, SEED, &EPS_LIST) {
        Ok((r, _)) => from_reports(&[&r]),
        Err(e) => failed(e),
    });

    all &= criterion(4, secs(5), || match suites::equivalence_suite(&massless, &coeffs, 1000, SEED, &EPS_LIST) {
        Ok((r, _)) => from_reports(&[&r]),
        Err(e) => failed(e),
    });

    all &= criterion(5, secs(5), || match suites::explicit_tensor_suite(&massless, &coeffs, 1000, SEED) {
        Ok(r) => from_reports(&[&r]),
        Err(e) => failed(e),
    });

    all &= criterion(6, secs(5), || match suites::symbol_suite(&massless, &coeffs, 100, SEED) {
        Ok(r) => from_reports(&[&r]),
        Err(e) => failed(e),
    });

    all &= criterion(7, secs(120), || match suites::shock_suite(&massless, &coeffs, &setup, &ALPHAS, &hopts, &popts) {
        Ok((r, rows)) => {
            let mut v = from_reports(&[&r]);
            let d: Vec<String> = rows.iter().map(|x| format!("{:.3e}", x.hausdorff)).collect();
            v.detail.push_str(&format!("; Hausdorff by alpha [{}]", d.join(", ")));
            v
        }
        Err(e) => failed(e),
    });

    all &= criterion(8, secs(60), || {
        let eq = match suites::equilibrium_suite(&baro, &coeffs, 100, SEED) {
            Ok(r) => r,
            Err(e) => return failed(e),
        };
        let ent = match suites::excess_entropy_suite(&baro, &coeffs, 100, SEED, &EPS_LIST) {
            Ok((r, _)) => r,
            Err(e) => return failed(e),
        };
        let sh = match suites::shock_suite(&baro, &coeffs, &setup, &ALPHAS, &hopts, &popts) {
            Ok((r, _)) => r,
            Err(e) => return failed(e),
        };
        let mut claims: Vec<&Claim> = eq.claims.iter().chain(&ent.claims).collect();
        claims.extend(shock_claims(&sh, &RH_PROFILE_ORIENTATION));
        Verdict { passed: claims.iter().all(|c| c.passed), detail: summarize(&claims) }
    });

    all &= criterion(9, None, || {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let mut outputs = Vec::new();
        for d in &dirs {
            let mut cfg = RunConfig { seed: 7, samples: 200, quiet: true, out: d.path().to_path_buf(), ..Default::default() };
            cfg.scan.points = 3;
            match reproducible_run(&cfg, &massless) {
                Ok(o) => outputs.push(o),
                Err(e) => return failed(e),
            }
        }
        let names: Vec<&str> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
        let same = outputs[0] == outputs[1];
        Verdict {
            passed: same && names.len() >= 5,
            detail: format!("{} CSV files byte-identical across two runs: {same} ({})", names.len(), names.join(", ")),
        }
    });

    if !all {
        eprintln!("at least one acceptance criterion failed");
        std::process::exit(1);
    }
}
