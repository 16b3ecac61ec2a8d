//! spatcon: outage-probability simulation and asymptotics for
//! interference-limited networks.
//!
//! Exit codes: 0 success, 2 config/usage parse error, 3 validation error,
//! 4 runtime (estimation/numerical) failure.

mod config;

use clap::{Parser, Subcommand};
use config::{parse_config, RunConfig};
use spatcon_core::asymptotics::{conjecture_envelope, eta_max, gamma_kappa_for};
use spatcon_core::csvio::{self, fmt_g9};
use spatcon_core::error::Error as CoreError;
use spatcon_core::harness::{classify, conditions_for, reproduce_figure, sweep, FigureId};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

/// Simulation and asymptotics of link outage in interference-limited
/// wireless networks.
#[derive(Parser)]
#[command(name = "spatcon", version, about)]
struct Cli {
    /// Worker threads (0 = auto). Results are identical for every value.
    #[arg(long, global = true, default_value_t = 0, env = "SPATCON_THREADS")]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an eta sweep from a config file and write the estimate CSV.
    Simulate {
        /// Path to the INI-style run configuration.
        #[arg(long, env = "SPATCON_CONFIG")]
        config: PathBuf,
        /// Override the seed from the config.
        #[arg(long, env = "SPATCON_SEED")]
        seed: Option<u64>,
        /// Override the output directory from the config.
        #[arg(long, env = "SPATCON_OUT")]
        out: Option<PathBuf>,
        /// Override replications per sweep point.
        #[arg(long, env = "SPATCON_REPS")]
        reps: Option<u64>,
    },
    /// Analytic (gamma, kappa), eta_max and envelope curves for a config.
    Asymptotic {
        #[arg(long, env = "SPATCON_CONFIG")]
        config: PathBuf,
        #[arg(long, env = "SPATCON_OUT")]
        out: Option<PathBuf>,
    },
    /// Reproduce a figure dataset: 3 4 5 6 7 8 swap5 swap6 linkR 2-demo.
    Figure {
        id: String,
        #[arg(long, default_value = "out", env = "SPATCON_OUT")]
        out: PathBuf,
        #[arg(long, default_value_t = 1, env = "SPATCON_SEED")]
        seed: u64,
        /// Override replications per sweep point.
        #[arg(long, env = "SPATCON_REPS")]
        reps: Option<u64>,
    },
    /// Sweep, then place the configuration in the MAC taxonomy.
    Classify {
        #[arg(long, env = "SPATCON_CONFIG")]
        config: PathBuf,
        #[arg(long, env = "SPATCON_SEED")]
        seed: Option<u64>,
        #[arg(long, env = "SPATCON_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "SPATCON_REPS")]
        reps: Option<u64>,
    },
    /// Empirical check of the two scheduling regularity conditions.
    Conditions {
        #[arg(long, env = "SPATCON_CONFIG")]
        config: PathBuf,
        #[arg(long, env = "SPATCON_SEED")]
        seed: Option<u64>,
        /// Realizations per eta grid point.
        #[arg(long, default_value_t = 40, env = "SPATCON_REPS")]
        reps: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("spatcon: thread pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let result = match cli.command {
        Command::Simulate { config, seed, out, reps } => cmd_simulate(&config, seed, out, reps),
        Command::Asymptotic { config, out } => cmd_asymptotic(&config, out),
        Command::Figure { id, out, seed, reps } => cmd_figure(&id, &out, seed, reps),
        Command::Classify { config, seed, out, reps } => cmd_classify(&config, seed, out, reps),
        Command::Conditions { config, seed, reps } => cmd_conditions(&config, seed, reps),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("spatcon: cannot read {}: {e}", path.display());
        EXIT_PARSE
    })?;
    match parse_config(&text) {
        Err(e) => {
            eprintln!("spatcon: {e}");
            Err(EXIT_PARSE)
        }
        Ok(Err(e)) => {
            eprintln!("spatcon: {e}");
            Err(EXIT_VALIDATION)
        }
        Ok(Ok(rc)) => Ok(rc),
    }
}

fn runtime_code(e: &CoreError) -> u8 {
    match e {
        CoreError::Parameter(_) | CoreError::Usage(_) | CoreError::NotImplemented(_) => {
            EXIT_VALIDATION
        }
        CoreError::Estimation(_) | CoreError::Numerical(_) => EXIT_RUNTIME,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), u8> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| {
            eprintln!("spatcon: cannot create {}: {e}", parent.display());
            EXIT_RUNTIME
        })?;
    }
    std::fs::write(path, contents).map_err(|e| {
        eprintln!("spatcon: cannot write {}: {e}", path.display());
        EXIT_RUNTIME
    })
}

fn cmd_simulate(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    reps: Option<u64>,
) -> Result<(), u8> {
    let mut rc = load_config(config)?;
    if let Some(s) = seed {
        rc.sweep.seed = s;
    }
    if let Some(r) = reps {
        rc.sweep.n_reps = r;
    }
    let outdir = out.unwrap_or(rc.outdir.clone());
    let sw = sweep(&rc.sweep).map_err(|e| {
        eprintln!("spatcon: {e}");
        runtime_code(&e)
    })?;

    let mut body = String::from(csvio::ESTIMATE_HEADER);
    body.push('\n');
    for pt in &sw.points {
        body.push_str(&csvio::estimate_row(
            pt,
            &sw.scheme,
            sw.pathloss.alpha(),
            sw.theta,
            sw.seed,
        ));
        body.push('\n');
    }
    let path = outdir.join("sweep.csv");
    write_file(&path, &body)?;
    println!("wrote {}", path.display());
    if let Some(a) = &sw.analytic {
        let mut s = String::from(csvio::ASYMPTOTIC_HEADER);
        s.push('\n');
        s.push_str(&csvio::asymptotic_row(a, sw.pathloss.alpha(), sw.theta));
        s.push('\n');
        let path = outdir.join("asymptotic.csv");
        write_file(&path, &s)?;
        println!("wrote {}", path.display());
    }
    for pt in &sw.points {
        println!(
            "eta={} p={} se={}",
            fmt_g9(pt.eta),
            fmt_g9(pt.p_success),
            fmt_g9(pt.std_err)
        );
    }
    Ok(())
}

fn cmd_asymptotic(config: &Path, out: Option<PathBuf>) -> Result<(), u8> {
    let rc = load_config(config)?;
    let outdir = out.unwrap_or(rc.outdir.clone());
    let cfg = &rc.sweep;
    let eta0 = cfg.eta_grid[0];
    let scheme = cfg.mac.scheme_for(eta0, cfg.dim).map_err(|e| {
        eprintln!("spatcon: {e}");
        EXIT_VALIDATION
    })?;
    let res = gamma_kappa_for(&scheme, &cfg.model, cfg.link.theta, &cfg.pathloss).map_err(|e| {
        eprintln!("spatcon: {e}");
        runtime_code(&e)
    })?;

    let mut s = String::from(csvio::ASYMPTOTIC_HEADER);
    s.push('\n');
    s.push_str(&csvio::asymptotic_row(&res, cfg.pathloss.alpha(), cfg.link.theta));
    s.push('\n');
    let path = outdir.join("asymptotic.csv");
    write_file(&path, &s)?;
    println!("wrote {}", path.display());

    if res.gamma.is_finite() && res.gamma > 0.0 && res.kappa >= 1.0 {
        let emax = eta_max(res.gamma, res.kappa).map_err(|e| {
            eprintln!("spatcon: {e}");
            runtime_code(&e)
        })?;
        let mut env = String::from("eta,envelope_lower,envelope_upper\n");
        for &eta in &cfg.eta_grid {
            let (lo, hi) = conjecture_envelope(res.gamma, res.kappa, eta).map_err(|e| {
                eprintln!("spatcon: {e}");
                runtime_code(&e)
            })?;
            env.push_str(&format!("{},{},{}\n", fmt_g9(eta), fmt_g9(lo), fmt_g9(hi)));
        }
        let path = outdir.join("envelope.csv");
        write_file(&path, &env)?;
        println!("wrote {}", path.display());
        println!(
            "{}: gamma={} kappa={} eta_max={} ({})",
            res.scheme,
            fmt_g9(res.gamma),
            fmt_g9(res.kappa),
            fmt_g9(emax),
            res.validity
        );
    } else {
        println!("{}: {} (gamma/kappa not defined)", res.scheme, res.validity);
    }
    Ok(())
}

fn cmd_figure(id: &str, out: &Path, seed: u64, reps: Option<u64>) -> Result<(), u8> {
    let fig = FigureId::parse(id).map_err(|e| {
        eprintln!("spatcon: {e}");
        EXIT_PARSE
    })?;
    let summary = reproduce_figure(fig, out, seed, reps).map_err(|e| {
        eprintln!("spatcon: {e}");
        runtime_code(&e)
    })?;
    for line in &summary.lines {
        println!("{line}");
    }
    println!(
        "wrote {} files under {}",
        summary.files.len(),
        out.join(fig.dir_name()).display()
    );
    Ok(())
}

fn cmd_classify(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    reps: Option<u64>,
) -> Result<(), u8> {
    let mut rc = load_config(config)?;
    if let Some(s) = seed {
        rc.sweep.seed = s;
    }
    if let Some(r) = reps {
        rc.sweep.n_reps = r;
    }
    let sw = sweep(&rc.sweep).map_err(|e| {
        eprintln!("spatcon: {e}");
        runtime_code(&e)
    })?;
    let label = classify(&sw, None).map_err(|e| {
        eprintln!("spatcon: {e}");
        runtime_code(&e)
    })?;
    println!(
        "class={} p0={} kappa={} gamma={} :: {}",
        label.class.tag(),
        fmt_g9(label.p0),
        label.kappa.map(fmt_g9).unwrap_or_else(|| "-".to_string()),
        label.gamma.map(fmt_g9).unwrap_or_else(|| "-".to_string()),
        label.diagnostics
    );
    if let Some(outdir) = out.or(Some(rc.outdir.clone())) {
        let mut s = String::from("class,p0,p0_se,kappa,gamma\n");
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            label.class.tag(),
            fmt_g9(label.p0),
            fmt_g9(label.p0_se),
            label.kappa.map(fmt_g9).unwrap_or_else(|| "nan".to_string()),
            label.gamma.map(fmt_g9).unwrap_or_else(|| "nan".to_string()),
        ));
        let path = outdir.join("classification.csv");
        write_file(&path, &s)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_conditions(config: &Path, seed: Option<u64>, reps: u64) -> Result<(), u8> {
    let mut rc = load_config(config)?;
    if let Some(s) = seed {
        rc.sweep.seed = s;
    }
    let mut grid = rc.sweep.eta_grid.clone();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    if grid.len() < 4 {
        eprintln!("spatcon: conditions need >= 4 decreasing eta values");
        return Err(EXIT_VALIDATION);
    }
    let report = conditions_for(&rc.sweep, &grid, reps).map_err(|e| {
        eprintln!("spatcon: {e}");
        runtime_code(&e)
    })?;
    println!("eta,unit_square_measure,se,near_scale,se");
    for (i, &eta) in report.eta_grid.iter().enumerate() {
        let (k1, s1) = report.unit_square[i];
        let (k2, s2) = report.near_scale[i];
        println!(
            "{},{},{},{},{}",
            fmt_g9(eta),
            fmt_g9(k1),
            fmt_g9(s1),
            fmt_g9(k2),
            fmt_g9(s2)
        );
    }
    println!(
        "bounded-second-moment: {} (log-log slope {}), near-transmitter: {} (min {}), verdict: {}",
        if report.c1_holds { "holds" } else { "violated" },
        fmt_g9(report.c1_slope),
        if report.c2_holds { "holds" } else { "violated" },
        fmt_g9(report.c2_min),
        if report.reasonable() { "reasonable" } else { "unreasonable" }
    );
    Ok(())
}
