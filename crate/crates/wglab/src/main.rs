//! Thin command-line front end over the check harness: run a config, list
//! the built-in scenarios, or validate a config without running anything.
//!
//! Exit codes: 0 all checks passed, 1 at least one check failed, 2 the
//! config or invocation was unusable.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wglab::harness::{build_scenario, resolve_t_grid, run_config, selected_checks, RunConfig};

const BUILTINS: [(&str, &str, &str); 7] = [
    (
        "translation",
        include_str!("../scenarios/translation.json"),
        "rigid shift of a uniform box; every identity resolves in closed form",
    ),
    (
        "dilation",
        include_str!("../scenarios/dilation.json"),
        "self-similar shrink of a uniform annulus at rate 1/2",
    ),
    (
        "radial-to-point",
        include_str!("../scenarios/radial-to-point.json"),
        "full collapse of an annulus onto a point; the grid stops short of the collapse time",
    ),
    (
        "interval-sin-power",
        include_str!("../scenarios/interval-sin-power.json"),
        "monotone rearrangement on a sine-weighted segment, tight at its design calibration",
    ),
    (
        "interval-cone",
        include_str!("../scenarios/interval-cone.json"),
        "monotone rearrangement on a power-weighted segment with a flat calibration",
    ),
    (
        "crossed-levels",
        include_str!("../scenarios/crossed-levels.json"),
        "deliberately broken assigned-level plan; the structural checks must fail",
    ),
    (
        "sharpness-probe",
        include_str!("../scenarios/sharpness-probe.json"),
        "sine-weighted rearrangement probed above its design curvature; convexity checks must fail",
    ),
];

#[derive(Parser)]
#[command(name = "wglab", version, about = "Verification runs over model transport flows")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every selected check of a config and emit a report
    Run {
        /// Path to a config file, or the name of a built-in scenario
        config: String,
        /// Report format
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's root seed
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 picks a default. Falls back to WGLAB_JOBS.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the built-in scenario configs
    ListScenarios,
    /// Parse a config and resolve its scenario without running checks
    Validate {
        /// Path to a config file, or the name of a built-in scenario
        config: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn load_config(arg: &str) -> Result<RunConfig, String> {
    if Path::new(arg).is_file() {
        let text = std::fs::read_to_string(arg).map_err(|e| format!("reading {arg}: {e}"))?;
        return RunConfig::from_json(&text).map_err(|e| format!("parsing {arg}: {e}"));
    }
    if let Some((_, text, _)) = BUILTINS.iter().find(|(name, _, _)| *name == arg) {
        return RunConfig::from_json(text).map_err(|e| format!("built-in {arg}: {e}"));
    }
    Err(format!(
        "{arg} is neither a config file nor a built-in scenario; \
         `wglab list-scenarios` shows the built-ins"
    ))
}

fn resolve_jobs(flag: Option<usize>) -> Result<usize, String> {
    if let Some(j) = flag {
        return Ok(j);
    }
    match std::env::var("WGLAB_JOBS") {
        Ok(v) => v
            .parse::<usize>()
            .map_err(|_| format!("WGLAB_JOBS={v} is not a thread count")),
        Err(_) => Ok(0),
    }
}

fn cmd_run(
    config: &str,
    format: Format,
    out: Option<&Path>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<ExitCode, String> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.grids.seed = s;
    }
    let jobs = resolve_jobs(jobs)?;
    let report = run_config(&cfg, jobs).map_err(|e| e.to_string())?;
    eprint!("{}", report.summary_lines());
    let text = match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| format!("writing {}: {e}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_validate(config: &str) -> Result<ExitCode, String> {
    let cfg = load_config(config)?;
    let sc = build_scenario(&cfg).map_err(|e| e.to_string())?;
    let grid = resolve_t_grid(&cfg, &sc).map_err(|e| e.to_string())?;
    let checks = selected_checks(&cfg).map_err(|e| e.to_string())?;
    println!(
        "ok: {} -> scenario {} ({} rays), {} grid times, {} checks",
        cfg.name,
        sc.name,
        sc.plan.rays.len(),
        grid.len(),
        checks.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_list() -> ExitCode {
    for (name, _, blurb) in BUILTINS {
        println!("{name:<20} {blurb}");
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run {
            config,
            format,
            out,
            seed,
            jobs,
        } => cmd_run(config, *format, out.as_deref(), *seed, *jobs),
        Cmd::Validate { config } => cmd_validate(config),
        Cmd::ListScenarios => Ok(cmd_list()),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
