//! Command-line front end. Every command reads one config file (TOML, or
//! JSON when the file starts with `{`), writes its artifacts under the
//! output directory and maps the outcome to an exit code.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{RunConfig, ScanConfig};

use crate::analysis::ScalingTable;
use crate::characteristics::{self, CausalityPoint};
use crate::error::Error;
use crate::fluid::{Eos, GodunovState, LocalFluid};
use crate::shock::{self, ProfileReport, ProfileSolution, TrendRow};
use crate::suites::{self, SuiteReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CLAIM: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INTERNAL: i32 = 70;

/// Version of the artifact layout written by this crate.
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "bdnk-lab", version, about = "Shifted Landau-Lifshitz fluid theories: checks, scans and shock profiles")]
pub struct Cli {
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Use the four-field barotropic counterpart of the configured EOS.
    #[arg(long, global = true)]
    pub barotropic: bool,
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Thermodynamic consistency and flux-Jacobian checks.
    EosCheck,
    /// Equilibria, equivalence, excess entropy, explicit tensors, symbol symmetry.
    Verify,
    /// Characteristic speeds over a (λ, μ, ν) grid.
    CausalityScan,
    /// One shock profile and its validation report.
    Profile,
    /// Profiles over the configured amplitudes and the Landau-distance trend.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::EosCheck => "eos-check",
            Command::Verify => "verify",
            Command::CausalityScan => "causality-scan",
            Command::Profile => "profile",
            Command::Sweep => "sweep",
        }
    }
}

/// Result of a command: exit code plus the JSON report that was written.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: serde_json::Value,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    crate_version: &'a str,
    artifact_version: u32,
    config_hash: String,
    seed: u64,
    started_unix: u64,
    wall_clock_seconds: f64,
    passed: bool,
    report: T,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("config serialises");
    hex::encode(Sha256::digest(&canonical))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Numerical(format!("writing {}: {e}", path.display()))
}

struct Run<'a> {
    cfg: &'a RunConfig,
    command: Command,
    started: Instant,
    started_unix: u64,
    files: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a RunConfig, command: Command) -> Result<Self, Error> {
        fs::create_dir_all(&cfg.out).map_err(|e| io_err(&cfg.out, e))?;
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Ok(Self { cfg, command, started: Instant::now(), started_unix, files: Vec::new() })
    }

    fn csv(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), Error> {
        let path = self.cfg.out.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for r in rows {
            w.write_record(&r).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn finish<T: Serialize>(mut self, passed: bool, report: T) -> Result<Outcome, Error> {
        let env = Envelope {
            command: self.command.name(),
            crate_version: env!("CARGO_PKG_VERSION"),
            artifact_version: ARTIFACT_VERSION,
            config_hash: config_hash(self.cfg),
            seed: self.cfg.seed,
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            passed,
            report,
        };
        let value = serde_json::to_value(&env).map_err(|e| Error::Numerical(e.to_string()))?;
        let path = self.cfg.out.join(format!("{}.json", self.command.name().replace('-', "_")));
        let mut f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        serde_json::to_writer_pretty(&mut f, &value)
            .map_err(|e| io_err(&path, e))
            .and_then(|_| writeln!(f).map_err(|e| io_err(&path, e)))?;
        self.files.push(path);
        Ok(Outcome { code: if passed { EXIT_PASS } else { EXIT_CLAIM }, report: value, files: self.files })
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn print_claims(reports: &[&SuiteReport], quiet: bool) {
    if quiet {
        return;
    }
    for r in reports {
        for c in &r.claims {
            let mark = if c.passed { "pass" } else { "FAIL" };
            match c.target {
                Some(t) if c.tolerance > 0.0 => {
                    println!("[{mark}] {}: {}: {:.6} (target {t} ± {})", r.suite, c.name, c.measured, c.tolerance)
                }
                Some(_) => println!("[{mark}] {}: {}", r.suite, c.name),
                None => println!("[{mark}] {}: {}: {:e} (< {:e})", r.suite, c.name, c.measured, c.tolerance),
            }
        }
    }
}

pub fn eos_check(cfg: &RunConfig, eos: &dyn Eos) -> Result<Outcome, Error> {
    let run = Run::new(cfg, Command::EosCheck)?;
    let rep = suites::eos_suite(eos, cfg.samples, cfg.seed);
    print_claims(&[&rep], cfg.quiet);
    run.finish(rep.passed(), rep)
}

fn scaling_rows(t: &ScalingTable) -> Vec<Vec<String>> {
    t.rows
        .iter()
        .map(|r| vec![num(r.eps), num(r.q_tilde), num(r.dpsi_norm), num(r.slope_running)])
        .collect()
}

pub fn verify(cfg: &RunConfig, eos: &dyn Eos) -> Result<Outcome, Error> {
    let mut run = Run::new(cfg, Command::Verify)?;
    let (n, seed, c) = (cfg.samples, cfg.seed, &cfg.coeffs);
    let eq = suites::equilibrium_suite(eos, c, cfg.samples.min(100), seed)?;
    let (ent, ent_tables) = suites::excess_entropy_suite(eos, c, cfg.samples.min(100), seed, &cfg.eps_list)?;
    let (equiv, equiv_tables) = suites::equivalence_suite(eos, c, n, seed, &cfg.eps_list)?;
    let expl = suites::explicit_tensor_suite(eos, c, n, seed)?;
    let sym = suites::symbol_suite(eos, c, cfg.samples.min(100), seed)?;
    let header: Vec<String> = ["eps", "Q_tilde", "dpsi_norm", "slope_running"].map(String::from).to_vec();
    for t in ent_tables.iter().chain(&equiv_tables) {
        run.csv(&format!("scaling_{}.csv", t.family), &header, scaling_rows(t))?;
    }
    let reports = vec![eq, ent, equiv, expl, sym];
    print_claims(&reports.iter().collect::<Vec<_>>(), cfg.quiet);
    let passed = reports.iter().all(|r| r.passed());
    #[derive(Serialize)]
    struct V {
        suites: Vec<SuiteReport>,
        scaling: Vec<ScalingTable>,
    }
    run.finish(passed, V { suites: reports, scaling: ent_tables.into_iter().chain(equiv_tables).collect() })
}

pub fn causality_scan(cfg: &RunConfig, eos: &dyn Eos) -> Result<Outcome, Error> {
    let mut run = Run::new(cfg, Command::CausalityScan)?;
    let s = &cfg.scan;
    let fluid = LocalFluid::new(&GodunovState::moving(s.theta, &s.velocity, s.psi, eos.mode())?, eos)?;
    let grid = characteristics::uniform_grid(s.lo, s.hi, s.points);
    let pts = characteristics::causality_scan(&fluid, &cfg.coeffs, &grid, &s.directions);
    let header: Vec<String> = ["lambda", "mu", "nu", "direction_id", "max_abs_speed", "all_real", "causal"]
        .map(String::from)
        .to_vec();
    run.csv(
        "causality_scan.csv",
        &header,
        pts.iter().map(|p| {
            vec![
                num(p.lambda),
                num(p.mu),
                num(p.nu),
                p.direction_id.to_string(),
                num(p.max_abs_speed),
                p.all_real.to_string(),
                p.causal.to_string(),
            ]
        }),
    )?;
    #[derive(Serialize)]
    struct S<'a> {
        grid_points: usize,
        directions: usize,
        rows: usize,
        causal_rows: usize,
        degenerate_rows: usize,
        indeterminate_rows: usize,
        points: &'a [CausalityPoint],
    }
    let causal_rows = pts.iter().filter(|p| p.causal).count();
    let indeterminate = pts.iter().filter(|p| p.indeterminate).count();
    if !cfg.quiet {
        println!("{} of {} (grid point, direction) pairs causal", causal_rows, pts.len());
    }
    // a scan maps a region; only failed root finding is a failure
    run.finish(
        indeterminate == 0,
        S {
            grid_points: grid.len(),
            directions: s.directions.len(),
            rows: pts.len(),
            causal_rows,
            degenerate_rows: pts.iter().filter(|p| p.degenerate).count(),
            indeterminate_rows: indeterminate,
            points: &pts,
        },
    )
}

fn profile_rows(p: &ProfileSolution) -> Vec<Vec<String>> {
    p.s.iter()
        .zip(&p.states)
        .zip(&p.residuals)
        .map(|((s, y), r)| {
            let mut row = vec![num(*s)];
            row.extend(y.iter().map(|v| num(*v)));
            row.push(num(*r));
            row
        })
        .collect()
}

fn profile_header(p: &ProfileSolution) -> Vec<String> {
    let mut h = vec!["s".to_string()];
    h.extend((0..p.mode.fields()).map(|k| format!("psi_{k}")));
    h.push("residual_norm".into());
    h
}

pub fn profile(cfg: &RunConfig, eos: &dyn Eos) -> Result<Outcome, Error> {
    let mut run = Run::new(cfg, Command::Profile)?;
    let sonic = shock::sonic_base_state(eos, cfg.shock.theta, cfg.shock.psi)?;
    let sh = shock::hugoniot_continuation(&sonic, eos, cfg.shock.alpha, &cfg.hugoniot)?;
    let sol = shock::profile_solve(&sh, eos, &cfg.coeffs, &cfg.profile)?;
    let rep = shock::profile_validate(&sol, &sh, eos, &cfg.coeffs, &cfg.coeffs.landau_only(), &cfg.profile)?;
    run.csv("profile.csv", &profile_header(&sol), profile_rows(&sol))?;
    let passed = rep.passed(1e-8) && rep.acoustic_monotone && sh.rh_residual < 1e-10;
    if !cfg.quiet {
        println!(
            "alpha {}: {} samples, max ODE residual {:e}, endpoint residual {:e}, Landau distance {:e}, {}",
            cfg.shock.alpha,
            sol.s.len(),
            rep.max_ode_residual,
            rep.endpoint_rhs[0].max(rep.endpoint_rhs[1]),
            rep.landau_hausdorff,
            if passed { "pass" } else { "FAIL" }
        );
    }
    #[derive(Serialize)]
    struct P<'a> {
        alpha: f64,
        shock: &'a shock::ShockData,
        validation: &'a ProfileReport,
        left_spectrum: &'a [f64],
        right_spectrum: &'a [f64],
        domain: [f64; 2],
        anomalies: &'a [f64],
    }
    run.finish(
        passed,
        P {
            alpha: cfg.shock.alpha,
            shock: &sh,
            validation: &rep,
            left_spectrum: &sol.left_spectrum,
            right_spectrum: &sol.right_spectrum,
            domain: sol.domain,
            anomalies: &sol.anomalies,
        },
    )
}

pub fn sweep(cfg: &RunConfig, eos: &dyn Eos) -> Result<Outcome, Error> {
    let mut run = Run::new(cfg, Command::Sweep)?;
    let (rep, rows) = suites::shock_suite(eos, &cfg.coeffs, &cfg.shock, &cfg.alphas, &cfg.hugoniot, &cfg.profile)?;
    let header: Vec<String> = [
        "alpha",
        "rh_residual",
        "hausdorff",
        "hausdorff_normalized",
        "ratio",
        "max_ode_residual",
        "endpoint_residual",
        "orientation_ok",
        "entropy_integral",
    ]
    .map(String::from)
    .to_vec();
    run.csv(
        "sweep.csv",
        &header,
        rows.iter().map(|r: &TrendRow| {
            vec![
                num(r.alpha),
                num(r.rh_residual),
                num(r.hausdorff),
                num(r.hausdorff_normalized),
                r.ratio.map(num).unwrap_or_default(),
                num(r.max_ode_residual),
                num(r.endpoint_rhs),
                r.orientation_ok.to_string(),
                num(r.entropy_integral),
            ]
        }),
    )?;
    print_claims(&[&rep], cfg.quiet);
    #[derive(Serialize)]
    struct W<'a> {
        suite: &'a SuiteReport,
        rows: &'a [TrendRow],
    }
    run.finish(rep.passed(), W { suite: &rep, rows: &rows })
}

/// Runs `command` against an explicit EOS; used by `run` and by tests
/// that supply their own EOS.
pub fn execute(command: Command, cfg: &RunConfig, eos: &dyn Eos) -> Result<Outcome, Error> {
    match command {
        Command::EosCheck => eos_check(cfg, eos),
        Command::Verify => verify(cfg, eos),
        Command::CausalityScan => causality_scan(cfg, eos),
        Command::Profile => profile(cfg, eos),
        Command::Sweep => sweep(cfg, eos),
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("BDNK_LAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    init_threads();
    let cfg = match RunConfig::load(cli.config.as_deref()).map(|c| c.with_overrides(&cli)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("bdnk-lab: {e}");
            return EXIT_USAGE;
        }
    };
    let eos = match cfg.eos.build() {
        Ok(e) => e,
        Err(e) => {
            eprintln!("bdnk-lab: invalid eos: {e}");
            return EXIT_USAGE;
        }
    };
    match execute(cli.command, &cfg, eos.as_ref()) {
        Ok(o) => {
            if !cfg.quiet {
                for f in &o.files {
                    println!("wrote {}", f.display());
                }
            }
            o.code
        }
        Err(e @ (Error::InvalidInput(_) | Error::Domain(_))) => {
            eprintln!("bdnk-lab: {e}");
            EXIT_USAGE
        }
        Err(e @ (Error::NoConnection { .. } | Error::SingularSymbol { .. } | Error::Precondition(_))) => {
            eprintln!("bdnk-lab: {e}");
            EXIT_CLAIM
        }
        Err(e) => {
            eprintln!("bdnk-lab: internal error: {e}");
            EXIT_INTERNAL
        }
    }
}
