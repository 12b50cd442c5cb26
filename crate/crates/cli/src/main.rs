use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use emoshot::data::{extract_manifest, parse_manifest, synth_generate, write_feature_csv, Dataset, SyntheticConfig};
use emoshot::features::FrameConfig;
use emoshot::harness::{build_report, run_experiment, write_report, ExperimentSpec};
use emoshot::{Error, Result};

/// Few-shot speech emotion transfer with siamese metric learning.
#[derive(Debug, Parser)]
#[command(name = "emoshot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// WAV manifest (`path,speaker,emotion,domain` lines) -> feature CSV.
    Extract {
        manifest: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Frame length in milliseconds.
        #[arg(long, default_value_t = 25.0)]
        frame_ms: f64,
        /// Frame step in milliseconds.
        #[arg(long, default_value_t = 10.0)]
        step_ms: f64,
    },
    /// Synthetic config -> `synthetic_source.csv` and `synthetic_target.csv`.
    Synth {
        /// `key = value` config; defaults are used when omitted.
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Experiment spec -> report directory.
    Run {
        spec: PathBuf,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Report directory -> summary table and plot-ready CSVs.
    Report { dir: PathBuf },
}

fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    write_feature_csv(BufWriter::new(file), ds)
}

fn execute(cmd: Command) -> Result<Vec<PathBuf>> {
    match cmd {
        Command::Extract {
            manifest,
            out,
            frame_ms,
            step_ms,
        } => {
            let text = std::fs::read_to_string(&manifest).map_err(|e| Error::Io {
                path: manifest.clone(),
                source: e,
            })?;
            let entries = parse_manifest(&manifest, &text)?;
            if entries.is_empty() {
                return Err(Error::Input(format!("{} lists no utterances", manifest.display())));
            }
            let name = out
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "features".into());
            let cfg = FrameConfig { frame_ms, step_ms };
            info!("extracting {} utterances", entries.len());
            let ds = extract_manifest(&name, &entries, &cfg)?;
            write_dataset(&out, &ds)?;
            Ok(vec![out])
        }
        Command::Synth { config, out_dir } => {
            let cfg = match config {
                Some(p) => SyntheticConfig::load(&p)?,
                None => SyntheticConfig::default(),
            };
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            let (src, tgt) = synth_generate(&cfg)?;
            let mut out = Vec::new();
            for ds in [&src, &tgt] {
                let p = out_dir.join(format!("{}.csv", ds.name));
                write_dataset(&p, ds)?;
                out.push(p);
            }
            Ok(out)
        }
        Command::Run { spec, out_dir } => {
            let spec = ExperimentSpec::load(&spec)?;
            let report = run_experiment(&spec)?;
            write_report(&out_dir, &report)
        }
        Command::Report { dir } => build_report(&dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.message().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            ExitCode::FAILURE
        }
    }
}
