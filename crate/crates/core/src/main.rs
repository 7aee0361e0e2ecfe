//! Command-line driver for the decay laboratory: spectral scans, Lyapunov
//! parameter search, kernel-norm bounds, nonlinear simulation runs, weight
//! quadrature checks, and report merging.

use clap::{Parser, Subcommand};
use serde_json::json;
use std::path::{Path, PathBuf};

use decaylab::config::load_run_config;
use decaylab::decay::{
    high_freq_weight_integral, log_times, loglog_fit, predict, verify_lpqlr, EtaProfile,
    NormSpec,
};
use decaylab::energy::{pointwise_check, search_params};
use decaylab::error::Error;
use decaylab::grid::GridField;
use decaylab::report::{
    lpqlr_csv, lyapunov_json, merge_reports, monitors_csv, spectrum_csv,
    write_json_value,
};
use decaylab::solver::{decay_report, gn_check, simulate};
use decaylab::system::{
    build_euler_maxwell, check_structure, direction_set, log_radii, spectrum_scan,
    system_from_spec, EulerMaxwellParams, HyperbolicSystem,
};

#[derive(Parser)]
#[command(name = "decaylab", version, about = "numerical laboratory for decay \
estimates of dissipative hyperbolic systems")]
struct Cli {
    /// JSON configuration file (schema depends on the subcommand).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the RNG seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the constrained spectral decay margin against the rate profile.
    Spectrum,
    /// Search the Lyapunov functional weights and certify the dissipation
    /// constant, then fit the pointwise Green-matrix decay.
    Lyapunov,
    /// Verify the two-sided kernel norm bound on a Gaussian reference field.
    Lpqlr,
    /// Run the nonlinear (or linearized) solver from a run configuration.
    Simulate,
    /// Check the high-frequency weight quadrature against its closed-form
    /// power law.
    Appendix,
    /// Merge JSON reports from an output directory into one document.
    Report,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            std::process::exit(1);
        }
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory: {e}");
        std::process::exit(1);
    }
    let result = match cli.command {
        Command::Spectrum => cmd_spectrum(&cli, &out_dir),
        Command::Lyapunov => cmd_lyapunov(&cli, &out_dir),
        Command::Lpqlr => cmd_lpqlr(&cli, &out_dir),
        Command::Simulate => cmd_simulate(&cli, &out_dir),
        Command::Appendix => cmd_appendix(&out_dir),
        Command::Report => cmd_report(&out_dir),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

/// Exit 1 for configuration/validation problems, 2 for failed numerical
/// checks on a structurally valid input.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CheckFailed(_)
        | Error::FitRejected(_)
        | Error::SearchInfeasible { .. }
        | Error::InvarianceViolation { .. }
        | Error::SimulationAborted(_)
        | Error::Linalg(_) => 2,
        _ => 1,
    }
}

/// The system under study: a builtin or explicit system from --config, or
/// the default plasma system.
fn load_system(cli: &Cli) -> Result<(HyperbolicSystem, Option<EulerMaxwellParams>), Error> {
    match &cli.config {
        None => {
            let params = EulerMaxwellParams::default();
            Ok((build_euler_maxwell(&params)?, Some(params)))
        }
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let params = if value.get("builtin").is_some() {
                value
                    .get("params")
                    .map(|p| serde_json::from_value::<EulerMaxwellParams>(p.clone()))
                    .transpose()?
                    .or(Some(EulerMaxwellParams::default()))
            } else {
                None
            };
            let spec = serde_json::from_value(value)?;
            Ok((system_from_spec(&spec)?, params))
        }
    }
}

fn cmd_spectrum(cli: &Cli, out_dir: &Path) -> Result<(), Error> {
    let (sys, _) = load_system(cli)?;
    let profile = EtaProfile::standard();
    let radii = log_radii(1e-2, 1e2, 48);
    let dirs = direction_set(sys.n.min(3), 8, cli.seed.unwrap_or(0));
    let scan = spectrum_scan(&sys, &radii, &dirs, &profile, 0.1, 10.0)?;
    spectrum_csv(&out_dir.join("spectrum.csv"), &scan)?;
    let structure = check_structure(&sys)?;
    write_json_value(
        &out_dir.join("spectrum.json"),
        &json!({
            "anchor": "constrained spectral decay margin",
            "c0": scan.c0,
            "low_exponent": scan.low_exponent,
            "low_r2": scan.low_r2,
            "high_exponent": scan.high_exponent,
            "high_r2": scan.high_r2,
            "structure": serde_json::to_value(&structure)?,
        }),
    )?;
    println!(
        "spectrum: c0 = {:.4}, low exponent {:.3}, high exponent {:.3}",
        scan.c0, scan.low_exponent, scan.high_exponent
    );
    if scan.c0 <= 0.0 {
        return Err(Error::CheckFailed(
            "no positive uniform decay margin found".into(),
        ));
    }
    Ok(())
}

fn cmd_lyapunov(cli: &Cli, out_dir: &Path) -> Result<(), Error> {
    let (_, params) = load_system(cli)?;
    let params = params.ok_or_else(|| {
        Error::Config("lyapunov search requires the builtin plasma system".into())
    })?;
    let profile = EtaProfile::standard();
    let radii = log_radii(1e-2, 1e2, 24);
    let dirs = direction_set(3, 8, cli.seed.unwrap_or(0));
    let mut grid: Vec<Vec<f64>> = Vec::new();
    for &r in &radii {
        for d in &dirs {
            grid.push(d.iter().map(|w| w * r).collect());
        }
    }
    grid.push(vec![0.0, 0.0, 0.0]);
    let search = search_params(&params, &grid, &profile)?;
    let taus: Vec<f64> = (1..=9).map(|i| i as f64).collect();
    let pointwise = pointwise_check(&params, &radii, &dirs, &taus, &profile, 0.1, 10.0)?;
    lyapunov_json(
        &out_dir.join("lyapunov.json"),
        &search,
        Some(&pointwise),
        &json!({"radii": [1e-2, 1e2], "count": radii.len(), "directions": dirs.len()}),
    )?;
    println!(
        "lyapunov: alpha = ({}, {}), c1 = {:.4}, equivalence [{:.3}, {:.3}], \
         pointwise c0 = {:.4}",
        search.params.alpha1,
        search.params.alpha2,
        search.params.c1,
        search.equiv_min,
        search.equiv_max,
        pointwise.c0
    );
    Ok(())
}

#[derive(serde::Deserialize)]
struct LpqlrConfig {
    #[serde(default = "default_lpqlr_n")]
    n: usize,
    #[serde(default = "default_lpqlr_l")]
    l: f64,
    #[serde(default = "default_dims")]
    dims: u32,
    #[serde(default = "default_r0")]
    r0: f64,
}

fn default_lpqlr_n() -> usize {
    128
}
fn default_lpqlr_l() -> f64 {
    64.0 * std::f64::consts::PI
}
fn default_dims() -> u32 {
    3
}
fn default_r0() -> f64 {
    1.0
}

fn cmd_lpqlr(cli: &Cli, out_dir: &Path) -> Result<(), Error> {
    let cfg: LpqlrConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => LpqlrConfig {
            n: default_lpqlr_n(),
            l: default_lpqlr_l(),
            dims: default_dims(),
            r0: default_r0(),
        },
    };
    let dims = vec![cfg.n; cfg.dims as usize];
    let lens = vec![cfg.l; cfg.dims as usize];
    let phi = GridField::sample_scalar(&dims, &lens, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-r2 / 8.0).exp()
    })?;
    let profile = EtaProfile::standard();
    let times = log_times(10.0, 1000.0, 24);
    // the reference exponent table: (q, r, k, j, l) at p = 2
    let tuples = [
        (1.0, 2.0, 0u32, 0u32, 2.0),
        (1.0, 2.0, 1, 0, 2.0),
        (1.0, 1.0, 1, 0, 2.0),
        (1.0, 1.0, 0, 0, 2.0),
        (1.0, 2.0, 1, 1, 2.0),
        (2.0, 2.0, 1, 0, 2.0),
    ];
    let mut summaries = Vec::new();
    for (i, &(q, r, k, j, l)) in tuples.iter().enumerate() {
        let spec = NormSpec::new(2.0, q, r, k, j, l, cfg.dims)?;
        let report = verify_lpqlr(&phi, &spec, &profile, &times, cfg.r0)?;
        lpqlr_csv(&out_dir.join(format!("lpqlr_{i}.csv")), &report)?;
        let pred = predict(&spec, &profile)?;
        println!(
            "lpqlr tuple {i} (q={q}, r={r}, k={k}, j={j}, l={l}): \
             low fit {:.3} (predicted {:.3}), high fit {:.3} (predicted {:.3}), \
             C* = {:.3e}",
            report.low_fit,
            pred.low_f64(),
            report.high_fit,
            pred.high_f64(),
            report.c_star
        );
        summaries.push(json!({
            "tuple": {"q": q, "r": r, "k": k, "j": j, "l": l},
            "low_fit": report.low_fit,
            "high_fit": report.high_fit,
            "predicted_low": pred.low_f64(),
            "predicted_high": pred.high_f64(),
            "c_star": report.c_star,
            "c_star_min": report.c_star_min,
        }));
    }
    write_json_value(
        &out_dir.join("lpqlr.json"),
        &json!({
            "anchor": "two-sided kernel norm bounds",
            "grid": {"N": cfg.n, "L": cfg.l, "dims": cfg.dims},
            "r0": cfg.r0,
            "tuples": summaries,
        }),
    )?;
    Ok(())
}

fn cmd_simulate(cli: &Cli, out_dir: &Path) -> Result<(), Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("simulate requires --config".into()))?;
    let mut cfg = load_run_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.init.seed = seed;
    }
    let solver_cfg = cfg.solver_config()?;
    let output = simulate(&solver_cfg)?;
    let csv_path = cfg
        .outputs
        .csv_path
        .clone()
        .map(|p| out_dir.join(p))
        .unwrap_or_else(|| out_dir.join("monitors.csv"));
    monitors_csv(&csv_path, &output.monitors)?;
    if output.wrap_warning {
        eprintln!("warning: the solution no longer vanishes near the box boundary; \
                   late-time norms include wrap-around artifacts");
    }
    let window = (0.2 * solver_cfg.t_end, solver_cfg.t_end);
    let decay = decay_report(&output.monitors, window)?;
    let gn = gn_check(&[&output.state])?;
    let json_path = cfg
        .outputs
        .json_path
        .clone()
        .map(|p| out_dir.join(p))
        .unwrap_or_else(|| out_dir.join("simulate.json"));
    write_json_value(
        &json_path,
        &json!({
            "anchor": "global-in-time decay of small perturbations",
            "config": serde_json::to_value(&cfg)?,
            "decay": serde_json::to_value(&decay)?,
            "interpolation_ratios": gn.max_ratios,
            "wrap_warning": output.wrap_warning,
            "duhamel_records": serde_json::to_value(&output.records)?,
        }),
    )?;
    println!(
        "simulate: slope {:.4} (r^2 {:.4}), band ratio {:.3}, pass = {}",
        decay.slope, decay.r_squared, decay.band_ratio, decay.pass
    );
    Ok(())
}

fn cmd_appendix(out_dir: &Path) -> Result<(), Error> {
    let profile = EtaProfile::standard();
    // (l, s2) with l * s2 > n = 3: the integral decays like t^{(n - l s2)/sigma2}
    let triples = [(4.0f64, 1.0f64), (2.0, 2.0), (3.0, 1.5)];
    let times = log_times(10.0, 1e4, 20);
    let sigma2 = 2.0;
    let n = 3u32;
    let mut entries = Vec::new();
    for &(l, s2) in &triples {
        let series: Vec<(f64, f64)> = times
            .iter()
            .map(|&t| {
                high_freq_weight_integral(&profile, l, s2, n, 1.0, 0.25, t).map(|v| (t, v))
            })
            .collect::<Result<_, _>>()?;
        let (slope, r2) = loglog_fit(&series)?;
        let predicted = (n as f64 - l * s2) / sigma2;
        println!(
            "appendix (l = {l}, s2 = {s2}): slope {slope:.4}, predicted {predicted:.4}, \
             r^2 {r2:.5}"
        );
        if (slope - predicted).abs() > 0.05 {
            return Err(Error::CheckFailed(format!(
                "quadrature exponent {slope:.4} deviates from {predicted:.4}"
            )));
        }
        entries.push(json!({
            "l": l, "s2": s2, "slope": slope, "predicted": predicted, "r2": r2,
        }));
    }
    write_json_value(
        &out_dir.join("appendix.json"),
        &json!({
            "anchor": "high-frequency weight integral power law",
            "triples": entries,
        }),
    )?;
    Ok(())
}

fn cmd_report(out_dir: &Path) -> Result<(), Error> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(out_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension().map(|x| x == "json").unwrap_or(false)
                && p.file_stem().map(|s| s != "combined").unwrap_or(true)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!(
            "no JSON reports found in {}",
            out_dir.display()
        )));
    }
    let out = out_dir.join("combined.json");
    merge_reports(&paths, &out)?;
    println!("report: merged {} files into {}", paths.len(), out.display());
    Ok(())
}
