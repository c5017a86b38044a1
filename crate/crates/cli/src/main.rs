use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use warpbench_cli::config::parse_assignment;
use warpbench_cli::report::{EXIT_CONFIG, EXIT_PASS};
use warpbench_cli::{run_with_threads, Command, ConfigFile, Overrides, Scenario};

#[derive(Parser, Debug)]
#[command(name = "warpbench", version, about = "Verification scenarios on rotationally symmetric model manifolds")]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// Scenario file with [manifold], [tail], [scenario] and [calibration] sections.
    #[arg(long)]
    config: PathBuf,

    /// Directory for the CSV table and JSON summary.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Worker threads for sweeps and per-radius work.
    #[arg(long, default_value_t = 1)]
    parallel: usize,

    /// Overrides the scenario tolerance.
    #[arg(long)]
    tol: Option<f64>,

    /// Calibration override, `key=val`; repeatable.
    #[arg(long, value_parser = parse_assignment, num_args = 1..)]
    calibration: Vec<(String, f64)>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            return ExitCode::from(code as u8);
        }
    };
    let ov = Overrides { tol: args.tol, calibration: args.calibration };
    let scenario = match ConfigFile::load(&args.config).and_then(|c| Scenario::new(c, args.command, &ov, args.out.clone())) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("warpbench: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let report = run_with_threads(&scenario, args.parallel);
    match report.write(&scenario.out_dir) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("warpbench: writing report: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let s = &report.summary;
    match &s.error {
        Some(err) => eprintln!("{}: {} ({}: {})", s.scenario, s.status, err.kind, err.message),
        None => eprintln!("{}: {} ({}/{} checks)", s.scenario, s.status, s.checks.iter().filter(|c| c.pass).count(), s.checks.len()),
    }
    ExitCode::from(s.exit_code as u8)
}
