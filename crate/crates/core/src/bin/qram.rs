use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qram::cli::{parse_config_with, run, Mode, Overrides, CONFIG_HELP};
use qram::Error;

/// Flux-qubit to condensate-memory state-transfer simulator.
#[derive(Parser, Debug)]
#[command(name = "qram", version, after_long_help = CONFIG_HELP)]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    mode: Mode,
    /// TOML run configuration (see --help for keys).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "qram-out")]
    out: PathBuf,
    /// Worker threads for independent trajectories.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Treat tabulated GHz figures as 2*pi*f.
    #[arg(long)]
    angular: bool,
}

fn fail(kind: &str, code: u8, msg: &str) -> ExitCode {
    let msg = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error[{kind}]: {msg}");
    ExitCode::from(code)
}

fn report(e: &Error) -> ExitCode {
    fail(e.kind(), e.exit_code() as u8, &e.to_string())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let head: Vec<&str> = rendered.lines().take_while(|l| !l.trim().is_empty()).collect();
            return fail("usage", 1, head.join(" ").trim_start_matches("error: "));
        }
    };
    if args.threads == 0 {
        return fail("usage", 1, "--threads must be >= 1");
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return fail("io", 3, &format!("{}: {e}", args.config.display())),
    };
    let overrides = Overrides { mode: Some(args.mode), angular: args.angular };
    let config = match parse_config_with(&text, overrides) {
        Ok(c) => c,
        Err(e) => return report(&e),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads).build() {
        Ok(p) => p,
        Err(e) => return fail("usage", 1, &e.to_string()),
    };
    match pool.install(|| run(&config, &args.out)) {
        Ok(summary) => {
            println!("mode: {}", summary.mode.name());
            for (name, value) in [
                ("f_final", summary.f_final),
                ("f_avg_final", summary.f_avg_final),
                ("measured_ramp_time", summary.measured_ramp_time),
                ("t_hold", summary.t_hold),
                ("unitarity_defect", summary.unitarity_defect),
            ] {
                if let Some(v) = value {
                    println!("{name}: {v:.6}");
                }
            }
            if let Some(e) = summary.estimate {
                println!("transfer_time_ns: {:.3}", e.transfer_time * 1e9);
                println!("squid_splitting_ghz: {:.3}", e.squid_splitting_hz * 1e-9);
                println!("magnetic_rabi_rad_s: {:.4e}", e.magnetic_rabi);
            }
            println!("output: {}", args.out.display());
            eprintln!("wall clock: {:.2} s", summary.wall_clock);
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}
