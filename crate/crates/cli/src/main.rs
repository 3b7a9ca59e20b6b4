//! `pstchain`: simulate, reconstruct and optimize spin chains from the
//! command line.
//!
//! Exit codes: 0 on success, 2 for bad input (unreadable or malformed files,
//! invalid parameters), 3 when a numerical routine fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use pst_core::analogue::analyze;
use pst_core::dynamics::{default_samples, trace};
use pst_core::ga::{evolve, GaConfig};
use pst_core::inverse::reconstruct_full;
use pst_core::spectra::{check_pst_condition, pinched_spectrum, snap_to_pst, PST_TOL};
use pst_core::sweep::{deviation_sweep, sweep_csv};
use pst_core::{build_hamiltonian, eigendecompose, ChainSpec, Execution, PinchSpec, SignConvention, Spectrum};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "pstchain", version, about = "Spin-chain state transfer toolkit")]
struct Cli {
    /// Directory for all output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Fidelity trace and peaks of a chain.
    Simulate(SimulateArgs),
    /// Persymmetric chain with a given spectrum.
    Reconstruct(ReconstructArgs),
    /// Project a spectrum onto the nearest pinched PST spectrum.
    Snap(SnapArgs),
    /// Genetic search for on-site energies of a uniformly coupled chain.
    Optimize(OptimizeArgs),
    /// Oscillator-analogue diagnostics of a chain.
    Analyze(AnalyzeArgs),
    /// Coupling spread of reconstructed pinched chains over N and p.
    Sweep(SweepArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// Chain JSON: {"n", "onsite", "couplings", "sign_convention"}.
    chain: PathBuf,
    /// Window length in units of t·J_max.
    #[arg(long, default_value_t = 50.0)]
    window: f64,
    /// Grid points; defaults to 10000 per 50 time units.
    #[arg(long)]
    samples: Option<usize>,
    /// Report raw times t instead of t·J_max.
    #[arg(long)]
    raw_time: bool,
}

#[derive(Args, Debug, Serialize)]
struct ReconstructArgs {
    /// Spectrum JSON: {"values": [...]}.
    #[arg(required_unless_present = "pinched", conflicts_with = "pinched")]
    spectrum: Option<PathBuf>,
    /// Use the pinched spectrum with N levels, pinch p and spacing 2·alpha.
    #[arg(long, num_args = 3, value_names = ["N", "P", "ALPHA"])]
    pinched: Option<Vec<String>>,
    /// Lowest eigenvalue of the pinched spectrum.
    #[arg(long, default_value_t = 1.0, requires = "pinched")]
    ground: f64,
    /// Emit +J on the co-diagonal instead of -J.
    #[arg(long)]
    positive: bool,
}

#[derive(Args, Debug, Serialize)]
struct SnapArgs {
    spectrum: PathBuf,
    /// Odd pinch factor of the target spectrum.
    #[arg(long)]
    p: u32,
}

#[derive(Args, Debug, Serialize)]
struct OptimizeArgs {
    /// GA configuration JSON; missing fields take their defaults.
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate the population on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug, Serialize)]
struct AnalyzeArgs {
    chain: PathBuf,
    /// Pinch factor; inferred from the spectrum when omitted.
    #[arg(long, requires = "gamma")]
    p: Option<u32>,
    /// Level spacing γ; inferred from the spectrum when omitted.
    #[arg(long, requires = "p")]
    gamma: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long, default_value_t = 4)]
    n_min: usize,
    #[arg(long, default_value_t = 40)]
    n_max: usize,
    /// Comma-separated odd pinch factors.
    #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7, 9, 11, 13])]
    p_list: Vec<u32>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Run the sweep on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug, Serialize)]
struct ReplayArgs {
    manifest: PathBuf,
}

/// Written next to every output so a run can be reproduced.
#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    tool: String,
    version: String,
    subcommand: String,
    inputs: Vec<PathBuf>,
    params: serde_json::Value,
    seed: Option<u64>,
    output_dir: PathBuf,
    /// Arguments after the program name, as given.
    argv: Vec<String>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid {}", path.display()))
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(dir, name, text)
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn simulate(a: &SimulateArgs, out: &Path) -> Result<()> {
    let chain: ChainSpec = read_json(&a.chain)?;
    let es = eigendecompose(&build_hamiltonian(&chain))?;
    let samples = a.samples.unwrap_or_else(|| default_samples(a.window));
    let tr = trace(&es, chain.j_max(), a.window, samples)?;
    write(out, "trace.csv", tr.to_csv(a.raw_time))?;
    write_json(out, "peaks.json", &tr.peaks_json(a.raw_time))?;
    match tr.max_peak() {
        Some(p) => {
            let t = if a.raw_time { p.t / chain.j_max() } else { p.t };
            eprintln!("max F = {:.6} at {} = {t:.4}", p.f, if a.raw_time { "t" } else { "t·J_max" });
        }
        None => eprintln!("no peaks above the reporting floor"),
    }
    Ok(())
}

fn parse_pinch(raw: &[String], ground: f64) -> Result<Spectrum> {
    let n: usize = raw[0].parse().with_context(|| format!("N must be an integer, got {:?}", raw[0]))?;
    let p: u32 = raw[1].parse().with_context(|| format!("p must be an integer, got {:?}", raw[1]))?;
    let alpha: f64 = raw[2].parse().with_context(|| format!("alpha must be a number, got {:?}", raw[2]))?;
    let s = pinched_spectrum(PinchSpec { n, p, alpha })?;
    let shift = ground - s.values()[0];
    let t_m = s.t_m().expect("pinched spectra carry t_m");
    Ok(s.shifted(shift).with_metadata(p, t_m))
}

fn reconstruct_cmd(a: &ReconstructArgs, out: &Path) -> Result<()> {
    let spectrum = match (&a.spectrum, &a.pinched) {
        (Some(path), None) => read_json(path)?,
        (None, Some(raw)) => parse_pinch(raw, a.ground)?,
        _ => bail!("give either a spectrum file or --pinched"),
    };
    let convention = if a.positive { SignConvention::Positive } else { SignConvention::Negative };
    let rec = reconstruct_full(&spectrum, convention)?;
    let es = eigendecompose(&build_hamiltonian(&rec.chain))?;
    let roundtrip = spectrum.values().iter().zip(es.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    write_json(out, "chain.json", &rec.chain)?;
    eprintln!("roundtrip error {roundtrip:.3e}, half-chain cross-check {:.3e}", rec.cross_check);
    Ok(())
}

fn snap(a: &SnapArgs, out: &Path) -> Result<()> {
    let input: Spectrum = read_json(&a.spectrum)?;
    let snapped = snap_to_pst(&input, a.p)?;
    let shifts: Vec<f64> = snapped.values().iter().zip(input.values()).map(|(s, x)| s - x).collect();
    let max_shift = shifts.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let check = check_pst_condition(&snapped, PST_TOL);
    write_json(out, "snapped.json", &snapped)?;
    write_json(out, "snap_report.json", &json!({ "max_shift": max_shift, "shifts": shifts, "pst": check }))?;
    eprintln!("max shift {max_shift:.3e}, t_m = {:.6}", snapped.t_m().unwrap_or(f64::NAN));
    Ok(())
}

fn optimize(a: &OptimizeArgs, out: &Path) -> Result<Option<u64>> {
    let mut cfg: GaConfig = read_json(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if a.sequential {
        cfg.execution = Execution::Sequential;
    }
    let report = evolve(&cfg)?;
    write_json(out, "best_chain.json", &report.best_chain)?;
    write(out, "history.csv", report.history_csv())?;
    write_json(
        out,
        "report.json",
        &json!({
            "config": cfg,
            "best": report.best.report,
            "genome": report.best.genome,
            "final_population": report.final_population,
        }),
    )?;
    eprintln!(
        "best fitness {:.6}, F_max {:.6} at t·J_max = {:.4}",
        report.best.report.fitness, report.best.report.f_max, report.best.report.best_time
    );
    Ok(Some(cfg.seed))
}

fn analyze_cmd(a: &AnalyzeArgs, out: &Path) -> Result<()> {
    let chain: ChainSpec = read_json(&a.chain)?;
    let report = analyze(&chain, a.p.zip(a.gamma))?;
    write_json(out, "analysis.json", &report)?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn sweep(a: &SweepArgs, out: &Path) -> Result<()> {
    if a.n_min > a.n_max {
        bail!("--n-min {} exceeds --n-max {}", a.n_min, a.n_max);
    }
    let points = deviation_sweep(a.n_min..=a.n_max, &a.p_list, a.alpha, execution(a.sequential))?;
    write(out, "sweep.csv", sweep_csv(&points))?;
    for pt in points.iter().filter(|pt| pt.error.is_some()) {
        eprintln!("N={} p={}: {}", pt.n, pt.p, pt.error.as_deref().unwrap_or_default());
    }
    Ok(())
}

fn inputs(cmd: &Command) -> Vec<PathBuf> {
    match cmd {
        Command::Simulate(a) => vec![a.chain.clone()],
        Command::Reconstruct(a) => a.spectrum.iter().cloned().collect(),
        Command::Snap(a) => vec![a.spectrum.clone()],
        Command::Optimize(a) => vec![a.config.clone()],
        Command::Analyze(a) => vec![a.chain.clone()],
        Command::Sweep(_) => vec![],
        Command::Replay(a) => vec![a.manifest.clone()],
    }
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Simulate(_) => "simulate",
        Command::Reconstruct(_) => "reconstruct",
        Command::Snap(_) => "snap",
        Command::Optimize(_) => "optimize",
        Command::Analyze(_) => "analyze",
        Command::Sweep(_) => "sweep",
        Command::Replay(_) => "replay",
    }
}

fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    if let Command::Replay(r) = &cli.command {
        let manifest: RunManifest = read_json(&r.manifest)?;
        let mut replayed = Cli::try_parse_from(std::iter::once("pstchain".to_string()).chain(manifest.argv.clone()))
            .context("manifest argv does not parse")?;
        if matches!(replayed.command, Command::Replay(_)) {
            bail!("a manifest cannot replay another replay");
        }
        replayed.out = cli.out;
        return run(replayed, manifest.argv);
    }

    let out = cli.out.as_path();
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let seed = match &cli.command {
        Command::Simulate(a) => simulate(a, out).map(|_| None),
        Command::Reconstruct(a) => reconstruct_cmd(a, out).map(|_| None),
        Command::Snap(a) => snap(a, out).map(|_| None),
        Command::Optimize(a) => optimize(a, out),
        Command::Analyze(a) => analyze_cmd(a, out).map(|_| None),
        Command::Sweep(a) => sweep(a, out).map(|_| None),
        Command::Replay(_) => unreachable!("handled above"),
    }?;
    let manifest = RunManifest {
        tool: "pstchain".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand_name(&cli.command).into(),
        inputs: inputs(&cli.command),
        params: serde_json::to_value(&cli.command)?,
        seed,
        output_dir: cli.out.clone(),
        argv,
    };
    write_json(out, "manifest.json", &manifest)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().filter_map(|e| e.downcast_ref::<pst_core::Error>()).any(|e| e.is_numerical());
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
