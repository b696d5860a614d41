use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fpme_cli::config::ExperimentKind;

#[derive(Debug, Parser)]
#[command(name = "fpme", version, about = "Weighted fractional porous medium experiments")]
struct Args {
    kind: ExperimentKind,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the `out` key of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `section.key=value`, applied before defaults are filled in.
    #[arg(long = "override", value_name = "K=V")]
    overrides: Vec<String>,
}

fn threads() -> Result<usize, String> {
    match std::env::var("FPME_THREADS") {
        Err(_) => Ok(rayon::current_num_threads()),
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or(format!("FPME_THREADS must be a positive integer, got `{v}`"))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())?;
            Ok(n)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let threads = match threads() {
        Ok(n) => n,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let summary = fpme_cli::execute(args.kind, &text, args.out, &args.overrides, threads);
    let (ok, rest) = summary
        .lines
        .split_at(if summary.exit_code == 0 { summary.lines.len() } else { 0 });
    ok.iter().for_each(|l| println!("{l}"));
    rest.iter().for_each(|l| eprintln!("{l}"));
    ExitCode::from(summary.exit_code as u8)
}
