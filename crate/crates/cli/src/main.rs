//! `cumulus`: analyze, simulate and sweep the warm-cloud reaction-diffusion
//! model from typed TOML configurations.
//!
//! Exit codes: 0 success, 2 configuration error, 3 no admissible
//! equilibrium, 4 blow-up during integration, 1 other failures.

mod config;
mod manifest;
mod writers;

use clap::{Args, Parser, Subcommand};
use config::{resolve, OutputFormat, Resolved};
use cumulus::analysis::{self, LITERATURE_B2, LITERATURE_MODES_1D};
use cumulus::model::{self};
use cumulus::sim::{self, RunResult};
use cumulus::stability::{self, B2Definition};
use cumulus::{presets, Dims, Error as CoreError};
use manifest::ManifestBuilder;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cumulus",
    version,
    about = "Warm-cloud reaction-diffusion analysis and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the seed from the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Field file format
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibria, stability classification and rain-flux thresholds
    Analyze {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Integrate the configured trajectory and write snapshots
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat the run over a range of rain-flux values
    Sweep {
        config: PathBuf,
        #[arg(long)]
        b_min: f64,
        #[arg(long)]
        b_max: f64,
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Per-integer-mode dispersion table
    Modes {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(1, format!("io error: {e}"))
    }
}

fn core_failure(e: CoreError) -> Failure {
    let code = match &e {
        CoreError::NoAdmissibleEquilibrium(_) => 3,
        CoreError::BlowUp { .. } => 4,
        CoreError::InvalidConfig(_) | CoreError::InvalidParameter { .. } => 2,
        _ => 1,
    };
    Failure::new(code, e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze { config, common } => cmd_analyze(&config, &common),
        Command::Simulate { config, common } => cmd_simulate(&config, &common),
        Command::Sweep {
            config,
            b_min,
            b_max,
            steps,
            common,
        } => cmd_sweep(&config, b_min, b_max, steps, &common),
        Command::Modes { config, common } => cmd_modes(&config, &common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(config_path: &Path, common: &Common) -> Result<Resolved, Failure> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Failure::new(2, format!("cannot read {}: {e}", config_path.display())))?;
    resolve(&text, common.seed, common.format)
        .map_err(|e| Failure::new(2, format!("{}: {e}", config_path.display())))
}

fn cmd_analyze(config_path: &Path, common: &Common) -> Result<(), Failure> {
    let resolved = load(config_path, common)?;
    let rep = analysis::analyze(&resolved.sim.params, &resolved.sim.diff, &resolved.domain)
        .map_err(core_failure)?;

    let mut mb = ManifestBuilder::new(
        &common.out_dir,
        "analyze",
        resolved.sim.seed,
        resolved.to_toml(),
    )?;
    let json = serde_json::to_vec_pretty(&rep).expect("report serializes");
    mb.write("analysis.json", &json)?;
    let text = writers::analysis_text(&rep);
    mb.write("analysis.txt", text.as_bytes())?;
    mb.finish()?;

    print!("{text}");
    println!("wrote {}", common.out_dir.join("analysis.json").display());
    Ok(())
}

fn write_snapshots(
    mb: &mut ManifestBuilder,
    resolved: &Resolved,
    result: &RunResult<f64>,
) -> Result<(), Failure> {
    let grid = &resolved.sim.grid;
    for snap in &result.snapshots {
        let tag = writers::time_tag(snap.time);
        for (species, byte, data) in [("qc", 0u8, &snap.fields.qc), ("qr", 1u8, &snap.fields.qr)] {
            if matches!(resolved.format, OutputFormat::Text | OutputFormat::Both) {
                let name = format!("{species}_t{tag}.txt");
                mb.write(
                    &name,
                    writers::field_text(grid, snap.actual_time, species, data).as_bytes(),
                )?;
            }
            if matches!(resolved.format, OutputFormat::Binary | OutputFormat::Both) {
                let name = format!("{species}_t{tag}.bin");
                mb.write(
                    &name,
                    &writers::field_binary(grid, snap.actual_time, byte, data),
                )?;
            }
            if grid.dims == Dims::Two {
                let name = format!("{species}_t{tag}.pgm");
                let (bytes, lo, hi) = writers::field_pgm(grid, data);
                mb.write(&name, &bytes)?;
                mb.record_image(&name, lo, hi);
            }
        }
    }
    mb.write(
        "diagnostics.csv",
        writers::diagnostics_csv(&result.series).as_bytes(),
    )?;
    Ok(())
}

fn cmd_simulate(config_path: &Path, common: &Common) -> Result<(), Failure> {
    let resolved = load(config_path, common)?;
    let outcome = sim::run_with_partials(&resolved.sim);

    let mut mb = ManifestBuilder::new(
        &common.out_dir,
        "simulate",
        resolved.sim.seed,
        resolved.to_toml(),
    )?;
    mb.set_clamp_count(outcome.result.metadata.clamp_count);
    if let Some((time, mode)) = outcome.result.metadata.blow_up {
        mb.set_blow_up(time, mode);
    }
    // Partial outputs are retained on failure and flagged in the manifest.
    write_snapshots(&mut mb, &resolved, &outcome.result)?;
    mb.finish()?;

    match outcome.error {
        Some(e) => Err(core_failure(e)),
        None => {
            let last = outcome.result.snapshots.last().expect("final snapshot");
            println!(
                "{} snapshots, final t = {}: qc in [{}, {}], qr in [{}, {}]",
                outcome.result.snapshots.len(),
                writers::time_tag(last.time),
                writers::sig6(last.summary.qc.min),
                writers::sig6(last.summary.qc.max),
                writers::sig6(last.summary.qr.min),
                writers::sig6(last.summary.qr.max),
            );
            println!("wrote {}", common.out_dir.join("manifest.json").display());
            Ok(())
        }
    }
}

fn cmd_sweep(
    config_path: &Path,
    b_min: f64,
    b_max: f64,
    steps: usize,
    common: &Common,
) -> Result<(), Failure> {
    if steps < 2 || !(b_min < b_max) {
        return Err(Failure::new(
            2,
            "sweep needs --steps >= 2 and --b-min < --b-max",
        ));
    }
    let resolved = load(config_path, common)?;
    let b_values: Vec<f64> = (0..steps)
        .map(|i| b_min + (b_max - b_min) * i as f64 / (steps - 1) as f64)
        .collect();
    let sweep = sim::sweep_b(&resolved.sim, &b_values).map_err(core_failure)?;

    let dom = resolved.domain;
    let candidates = [
        ("a22-sign", B2Definition::A22Sign),
        ("criterion-fail", B2Definition::CriterionFail),
        ("last-discrete-mode", B2Definition::LastDiscreteMode),
    ]
    .map(|(name, def)| {
        (
            name,
            stability::threshold_b2(&resolved.sim.params, &resolved.sim.diff, &dom, def).ok(),
        )
    });

    let mut mb = ManifestBuilder::new(
        &common.out_dir,
        "sweep",
        resolved.sim.seed,
        resolved.to_toml(),
    )?;
    mb.write("sweep.csv", writers::sweep_csv(&sweep).as_bytes())?;
    #[derive(serde::Serialize)]
    struct SweepSummary<'a> {
        transition: Option<f64>,
        transition_count: usize,
        analytic_b2_candidates: Vec<(&'a str, Option<f64>)>,
        literature_b2: f64,
    }
    let summary = SweepSummary {
        transition: sweep.transition,
        transition_count: sweep.transition_count,
        analytic_b2_candidates: candidates.to_vec(),
        literature_b2: LITERATURE_B2,
    };
    mb.write(
        "sweep.json",
        &serde_json::to_vec_pretty(&summary).expect("summary serializes"),
    )?;
    mb.finish()?;

    for e in &sweep.entries {
        println!(
            "B = {:<8} patterned = {:<5} {}",
            e.b,
            e.patterned
                .map(|p| p.to_string())
                .unwrap_or_else(|| "error".into()),
            e.error.clone().unwrap_or_default()
        );
    }
    match sweep.transition {
        Some(b) => println!("empirical transition B* = {}", writers::sig6(b)),
        None => println!(
            "no single transition found ({} sign changes)",
            sweep.transition_count
        ),
    }
    for (name, v) in &candidates {
        println!(
            "analytic B2 candidate {name}: {}",
            v.map(|x| writers::sig6(x).to_string())
                .unwrap_or_else(|| "n/a".into())
        );
    }
    println!("literature B2 for the reference setup: {LITERATURE_B2}");
    Ok(())
}

fn cmd_modes(config_path: &Path, common: &Common) -> Result<(), Failure> {
    let resolved = load(config_path, common)?;
    let params = resolved.sim.params;
    let eq = model::nontrivial_equilibrium(&params).map_err(core_failure)?;
    let jac = model::jacobian(&params, &eq.state).map_err(core_failure)?;

    // Cover the unstable band with margin.
    let unit = resolved.domain.k2_unit();
    let max_index = match stability::unstable_band(&jac, &resolved.sim.diff) {
        Some((_, hi)) => ((hi / unit).sqrt().ceil() as u32 + 3).max(10),
        None => 10,
    };
    let rows = analysis::mode_table(&jac, &resolved.sim.diff, &resolved.domain, max_index);

    let reference = presets::pattern_1d::<f64>();
    let is_reference = resolved.domain.dims == Dims::One
        && params == reference.0
        && resolved.sim.diff == reference.1
        && resolved.domain.length == 50.0;
    let note = is_reference.then(|| {
        format!(
            "published analysis of this parameter set reports unstable modes n in {{{}, ..., {}}}",
            LITERATURE_MODES_1D.0, LITERATURE_MODES_1D.1
        )
    });
    let text = writers::modes_text(&rows, resolved.domain.dims, note.as_deref());

    let mut mb = ManifestBuilder::new(
        &common.out_dir,
        "modes",
        resolved.sim.seed,
        resolved.to_toml(),
    )?;
    mb.write("modes.txt", text.as_bytes())?;
    mb.finish()?;

    print!("{text}");
    Ok(())
}
