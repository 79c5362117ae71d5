use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stokes_manifolds::fock::{ExcessReading, SqueezeAxis};
use stokes_manifolds::pipeline::{self, format_float, ConfigOverrides, EmitFlags};
use stokes_manifolds::Spin;

#[derive(Parser, Debug)]
#[command(
    name = "stokes-manifolds",
    version,
    about = "Polarization squeezing of two-mode light, manifold by manifold"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an amplitude sweep and write tables, dumps and images.
    Run(RunArgs),
    /// Run the built-in invariant suite.
    Check,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExcessArg {
    Absolute,
    AbovePure,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    Phase,
    Amplitude,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated displacement amplitudes of the H mode.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    alpha: Option<Vec<f64>>,
    /// Quadrature squeezing in dB.
    #[arg(long = "sq-db", allow_hyphen_values = true)]
    sq_db: Option<f64>,
    /// Anti-squeezing figure in dB, read according to --excess-reference.
    #[arg(long = "anti-db", allow_hyphen_values = true)]
    anti_db: Option<f64>,
    /// Detection efficiency.
    #[arg(long)]
    eta: Option<f64>,
    /// Whether --anti-db is the total anti-squeezing or excess above the pure level.
    #[arg(long, value_enum)]
    excess_reference: Option<ExcessArg>,
    /// Apply the detection efficiency as a loss channel.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    apply_loss: Option<bool>,
    /// Quadrature squeezed relative to the (real) displacement.
    #[arg(long, value_enum)]
    squeeze_axis: Option<AxisArg>,
    /// Fock cutoff per mode.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Exactness degree of the sphere quadrature.
    #[arg(long = "grid-l")]
    grid_l: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated outputs: squeezing_csv, photon_csv, multipole_csv,
    /// sector_json, q_csv, heatmaps, or none / all.
    #[arg(long)]
    emit: Option<String>,
    /// Also write each polarization sector as JSON.
    #[arg(long)]
    dump_sector: bool,
}

impl RunArgs {
    fn overrides(&self) -> stokes_manifolds::Result<ConfigOverrides> {
        Ok(ConfigOverrides {
            alphas: self.alpha.clone(),
            squeezing_db: self.sq_db,
            antisqueezing_db: self.anti_db,
            excess_reference: self.excess_reference.map(|e| match e {
                ExcessArg::Absolute => ExcessReading::Absolute,
                ExcessArg::AbovePure => ExcessReading::AbovePure,
            }),
            efficiency: self.eta,
            apply_loss: self.apply_loss,
            squeeze_axis: self.squeeze_axis.map(|a| match a {
                AxisArg::Phase => SqueezeAxis::Phase,
                AxisArg::Amplitude => SqueezeAxis::Amplitude,
            }),
            cutoff: self.cutoff,
            grid_l: self.grid_l,
            out: self.out.clone(),
            emit: self.emit.as_deref().map(EmitFlags::parse_list).transpose()?,
            dump_sector: self.dump_sector,
        })
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_else(|| "-".into())
}

fn run(args: &RunArgs) -> stokes_manifolds::Result<()> {
    let cfg = pipeline::parse_config(args.config.as_deref(), &args.overrides()?)?;
    let (report, manifest) = pipeline::run_sweep(&cfg)?;
    println!(
        "r = {}  nbar = {}  loss {}",
        format_float(report.model.squeeze),
        format_float(report.model.thermal_nbar),
        if cfg.apply_loss { "applied" } else { "not applied" }
    );
    println!(
        "{:>8} {:>10} {:>14} {:>14} {:>14} {:>14}",
        "alpha", "<N>", "xi2_dB(total)", "xi2_dB(S=1)", "W_1", "W_2"
    );
    for a in &report.alphas {
        let s1 = a
            .manifolds
            .iter()
            .find(|m| m.spin == Spin::ONE && !m.negligible)
            .and_then(|m| m.summary.xi2_db());
        println!(
            "{:>8} {:>10.4} {:>14} {:>14} {:>14} {:>14}",
            format_float(a.alpha),
            a.mean_photons,
            opt(a.total.xi2_db()),
            opt(s1),
            format_float(a.multipoles.total(1)),
            format_float(a.multipoles.total(2)),
        );
    }
    match &manifest.manifest_path {
        Some(p) => println!("wrote {} files, manifest {}", manifest.files.len() + 1, p.display()),
        None => println!("no outputs requested"),
    }
    for (k, v) in &report.timings {
        log::info!("{k} = {v:.3}");
    }
    Ok(())
}

fn check() -> ExitCode {
    let results = pipeline::run_checks();
    let mut ok = true;
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        ok &= r.passed;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Check => check(),
        Command::Run(args) => match run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
