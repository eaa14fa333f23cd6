use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use superlind::config::ConfigFile;
use superlind::experiments::{
    run_fig1, run_lz_sweep, spectrum_table, threads_from_env, write_fig1, write_spectrum_csv, write_sweep_csv,
    write_sweep_dat, Fig1Config, SweepConfig,
};
use superlind::invariants::run_checks;
use superlind::{ohmic_spectrum_with, CutoffConvention, Error, Result};

/// Exit status when `check` finds a failing invariant.
const CHECK_FAILED: u8 = 1;

#[derive(Parser)]
#[command(name = "superlind", version, about = "Super-adiabatic Lindblad dynamics and Landau-Zener sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Landau-Zener sweep described by a config file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Overrides,
        /// Also write a gnuplot `.dat` next to the CSV.
        #[arg(long)]
        dat: bool,
        /// Worker cap (overrides SUPERLIND_THREADS).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export instantaneous, super-adiabatic and evolved Bloch paths.
    Fig1 {
        config: PathBuf,
        #[command(flatten)]
        common: Overrides,
    },
    /// Tabulate the Ohmic rate γ(ω).
    Spectrum {
        #[arg(long, allow_hyphen_values = true)]
        gamma0: f64,
        #[arg(long, allow_hyphen_values = true)]
        wc: f64,
        #[arg(long = "T", allow_hyphen_values = true)]
        temperature: f64,
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        wmin: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        wmax: f64,
        #[arg(long, default_value_t = 101)]
        n: usize,
        /// Cutoff convention: literal or symmetric.
        #[arg(long, default_value = "literal")]
        convention: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Check,
}

#[derive(Args)]
struct Overrides {
    /// Override a config key, e.g. `--set bath.gamma0=0.1`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    window: Option<f64>,
}

impl Overrides {
    fn apply(&self, file: &mut ConfigFile) -> Result<()> {
        for s in &self.set {
            file.set_override(s)?;
        }
        if let Some(p) = &self.output {
            file.set("output.path", &p.to_string_lossy());
        }
        if let Some(j) = self.order {
            file.set("basis.order", &j.to_string());
        }
        if let Some(w) = self.window {
            file.set("system.window", &w.to_string());
        }
        Ok(())
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sweep(config: &Path, common: &Overrides, dat: bool, threads: Option<usize>, seed: Option<u64>) -> Result<()> {
    let mut file = ConfigFile::load(config)?;
    common.apply(&mut file)?;
    if dat {
        file.set("output.dat", "true");
    }
    if let Some(n) = threads {
        file.set("solver.threads", &n.to_string());
    }
    if let Some(s) = seed {
        file.set("solver.seed", &s.to_string());
    }
    let mut cfg = SweepConfig::from_config(&file)?;
    if cfg.threads.is_none() {
        cfg.threads = threads_from_env();
    }
    let records = run_lz_sweep(&cfg)?;
    for r in &records {
        info!(
            "1/v = {} {} γ = {} T = {}: P = {:.6e} ({:.2?})",
            r.inv_v, r.mode, r.gamma0, r.temperature, r.p_ge, r.diagnostics.runtime
        );
    }
    let mut out = open_output(cfg.output.as_deref())?;
    write_sweep_csv(&cfg, &records, &mut out)?;
    out.flush()?;
    if cfg.dat {
        let Some(path) = &cfg.output else {
            return Err(Error::Usage("output.dat needs output.path".into()));
        };
        let mut w = BufWriter::new(File::create(path.with_extension("dat"))?);
        write_sweep_dat(&cfg, &records, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn fig1(config: &Path, common: &Overrides) -> Result<()> {
    let mut file = ConfigFile::load(config)?;
    common.apply(&mut file)?;
    let cfg = Fig1Config::from_config(&file)?;
    let paths = run_fig1(&cfg)?;
    let prefix = cfg.output.clone().unwrap_or_else(|| PathBuf::from("fig1"));
    for p in write_fig1(&paths, &prefix)? {
        println!("{}", p.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn spectrum(
    gamma0: f64,
    wc: f64,
    temperature: f64,
    wmin: f64,
    wmax: f64,
    n: usize,
    convention: &str,
    output: Option<&Path>,
) -> Result<()> {
    let conv = match convention {
        "literal" => CutoffConvention::Literal,
        "symmetric" => CutoffConvention::Symmetric,
        other => return Err(Error::Usage(format!("unknown convention '{other}'"))),
    };
    let s = ohmic_spectrum_with(gamma0, wc, temperature, conv)?;
    let rows = spectrum_table(&s, wmin, wmax, n)?;
    let header = [
        ("spectrum", "ohmic".to_string()),
        ("gamma0", gamma0.to_string()),
        ("cutoff", wc.to_string()),
        ("temperature", temperature.to_string()),
        ("convention", convention.to_string()),
    ];
    let mut out = open_output(output)?;
    write_spectrum_csv(&rows, &header, &mut out)?;
    out.flush()?;
    Ok(())
}

fn check() -> Result<bool> {
    let mut ok = true;
    for outcome in run_checks() {
        println!("{outcome}");
        ok &= outcome.passed;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep { config, common, dat, threads, seed } => {
            sweep(config, common, *dat, *threads, *seed).map(|_| true)
        }
        Command::Fig1 { config, common } => fig1(config, common).map(|_| true),
        Command::Spectrum { gamma0, wc, temperature, wmin, wmax, n, convention, output } => {
            spectrum(*gamma0, *wc, *temperature, *wmin, *wmax, *n, convention, output.as_deref()).map(|_| true)
        }
        Command::Check => check(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
