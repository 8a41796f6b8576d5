use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dce_core::sweep::{
    self, figure_preset, validate_with, Axis, Engine, Level, Observable, Parameter, ScanResult, ScanSpec,
};
use dce_core::SystemConfig;

/// Photon-pair emission from frequency-modulated qubits in a waveguide.
/// All frequencies are in units of gamma_1D.
#[derive(Parser, Debug)]
#[command(name = "dce", version)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// SystemConfig JSON (unknown keys are rejected).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; `.json` writes JSON, anything else CSV. Default: CSV on stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid resolution, e.g. `101x101`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// master | diagrams | analytic | all
    #[arg(long)]
    engine: Option<Engine>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emission spectrum S(ω) of p₋ (of a for one qubit).
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Emission detuning range ω − ω₀ as `lo:hi` (default: −10 : U+10).
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        omega: Option<(f64, f64)>,
    },
    /// Two-dimensional scan over any two parameters.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Complete ScanSpec JSON; the other scan options are then ignored.
        #[arg(long, conflicts_with_all = ["axis1", "axis2"])]
        spec: Option<PathBuf>,
        /// `name:lo:hi` with name in Omega, qd, phi_<j>, U, omega_scan.
        /// Omega and omega_scan take detunings from 2ω₀ and ω₀.
        #[arg(long, allow_hyphen_values = true, required_unless_present = "spec")]
        axis1: Option<String>,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "spec")]
        axis2: Option<String>,
        /// Comma-separated: I1, I_minus, I_plus, G2mm, spectrum, directivity.
        #[arg(long, value_delimiter = ',', default_value = "I_minus")]
        observables: Vec<Observable>,
        /// Cap on the total excitation number of the master basis.
        #[arg(long)]
        total_cutoff: Option<usize>,
    },
    /// Parameter grid of one of the figures (fig2 … fig6b).
    Figure {
        id: String,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the acceptance criteria; nonzero exit status on any failure.
    Validate {
        #[arg(long, default_value = "quick")]
        level: Level,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected N1xN2, got '{s}'"))?;
    let n1 = a.trim().parse().map_err(|_| format!("bad grid size '{a}'"))?;
    let n2 = b.trim().parse().map_err(|_| format!("bad grid size '{b}'"))?;
    if n1 == 0 || n2 == 0 {
        return Err("grid sizes must be positive".into());
    }
    Ok((n1, n2))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    Ok((lo, hi))
}

fn parse_axis(s: &str, base: &SystemConfig, n: usize) -> Result<Axis> {
    let mut parts = s.splitn(3, ':');
    let (Some(name), Some(lo), Some(hi)) = (parts.next(), parts.next(), parts.next()) else {
        bail!("axis must look like name:lo:hi, got '{s}'");
    };
    let p: Parameter = name.parse()?;
    let (mut lo, mut hi): (f64, f64) = (lo.parse()?, hi.parse()?);
    let offset = match p {
        Parameter::Omega => 2.0 * base.omega0,
        Parameter::OmegaScan => base.omega0,
        _ => 0.0,
    };
    lo += offset;
    hi += offset;
    Ok(Axis::linspace(p, lo, hi, n))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(f).with_context(|| format!("parsing {}", path.display()))
}

fn load_config(common: &Common) -> Result<Option<SystemConfig>> {
    let Some(path) = &common.config else {
        return Ok(None);
    };
    let c: SystemConfig = load_json(path)?;
    c.validate().with_context(|| format!("invalid config {}", path.display()))?;
    Ok(Some(c))
}

fn emit(result: &ScanResult, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            sweep::write_result(result, path).with_context(|| format!("writing {}", path.display()))?;
            log::info!("wrote {}", path.display());
        }
        None => sweep::write_csv(result, io::stdout().lock())?,
    }
    if !result.failures.is_empty() {
        log::warn!("{} grid points were masked", result.failures.len());
    }
    Ok(())
}

fn spectrum_spec(common: &Common, omega: Option<(f64, f64)>) -> Result<ScanSpec> {
    let base = load_config(common)?.unwrap_or_else(|| {
        let mut c = SystemConfig::single(0.1, 10.0, 0.0);
        c.drive_freq = 2.0 * c.omega0 + c.anharmonicity;
        c
    });
    let (n1, n2) = common.grid.unwrap_or((1, 201));
    let (lo, hi) = omega.unwrap_or((-10.0, base.anharmonicity + 10.0));
    let axis1 = if n1 == 1 {
        Axis::new(Parameter::Omega, vec![base.drive_freq])
    } else {
        let w = 2.0 * base.omega0;
        Axis::linspace(Parameter::Omega, w - 10.0, w + base.anharmonicity + 10.0, n1)
    };
    let axis2 = Axis::linspace(Parameter::OmegaScan, base.omega0 + lo, base.omega0 + hi, n2);
    Ok(ScanSpec::new(
        base,
        axis1,
        axis2,
        vec![Observable::Spectrum],
        common.engine.unwrap_or(Engine::Master),
    ))
}

/// Replaces a preset's base config, keeping frequency axes at the same detunings.
fn rebase(spec: &mut ScanSpec, base: SystemConfig) {
    let shift = base.omega0 - spec.base.omega0;
    for axis in [&mut spec.axis1, &mut spec.axis2] {
        let k = match axis.parameter {
            Parameter::Omega => 2.0,
            Parameter::OmegaScan => 1.0,
            _ => continue,
        };
        axis.values.iter_mut().for_each(|v| *v += k * shift);
    }
    spec.base = base;
}

fn run(cli: Cli) -> Result<ExitCode> {
    let common = match &cli.command {
        Command::Spectrum { common, .. }
        | Command::Scan { common, .. }
        | Command::Figure { common, .. }
        | Command::Validate { common, .. } => common.clone(),
    };
    if let Some(k) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the worker pool")?;
    }

    let spec = match cli.command {
        Command::Spectrum { omega, .. } => spectrum_spec(&common, omega)?,
        Command::Scan {
            spec: Some(path), ..
        } => {
            let mut s: ScanSpec = load_json(&path)?;
            if let Some(c) = load_config(&common)? {
                s.base = c;
            }
            if let Some((n1, n2)) = common.grid {
                s.regrid(n1, n2);
            }
            if let Some(e) = common.engine {
                s.engine = e;
            }
            s
        }
        Command::Scan {
            axis1,
            axis2,
            observables,
            total_cutoff,
            ..
        } => {
            let base = load_config(&common)?.context("scan needs --config or --spec")?;
            let (n1, n2) = common.grid.unwrap_or((51, 51));
            let a1 = parse_axis(axis1.as_deref().expect("required by clap"), &base, n1)?;
            let a2 = parse_axis(axis2.as_deref().expect("required by clap"), &base, n2)?;
            let mut s = ScanSpec::new(base, a1, a2, observables, common.engine.unwrap_or(Engine::Master));
            s.total_cutoff = total_cutoff;
            s
        }
        Command::Figure { id, .. } => {
            let mut s = figure_preset(&id, common.grid)?;
            if let Some(c) = load_config(&common)? {
                rebase(&mut s, c);
            }
            if let Some(e) = common.engine {
                s.engine = e;
            }
            s
        }
        Command::Validate { level, .. } => {
            if common.config.is_some() || common.grid.is_some() || common.engine.is_some() {
                log::warn!("validate runs fixed configurations; --config, --grid and --engine are ignored");
            }
            let report = validate_with(level, |c| eprintln!("{c}"));
            let json = serde_json::to_string_pretty(&report)?;
            match &common.out {
                Some(path) => std::fs::write(path, json + "\n")
                    .with_context(|| format!("writing {}", path.display()))?,
                None => writeln!(io::stdout().lock(), "{json}")?,
            }
            return Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    };

    spec.validate().context("invalid scan")?;
    log::info!(
        "scanning {} x {} = {} points ({})",
        spec.axis1.len(),
        spec.axis2.len(),
        spec.axis1.len() * spec.axis2.len(),
        spec.engine.name()
    );
    let result = sweep::run_scan(&spec)?;
    log::info!("done in {:.2} s", result.provenance.elapsed_seconds);
    emit(&result, common.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
