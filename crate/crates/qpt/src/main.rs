//! `qpt` command-line tool: generate channels, simulate tomography data,
//! fit, evaluate, and run the scripted studies.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qpt::channel::KrausChannel;
use qpt::error::QptError;
use qpt::experiments::{
    oscillator_study, pauli_noise_demo, qnd_study, random_channel_study, retraction_benchmark,
    OscillatorConfig, PauliNoiseConfig, QndConfig, RandomChannelConfig, RetractionConfig,
};
use qpt::io;
use qpt::optimizer::{fit, FitConfig, OptimizerKind};
use qpt::tomography::{evaluate, pauli_eigenstate_set, simulate_dataset, subsample};

#[derive(Parser)]
#[command(name = "qpt", version, about = "Quantum process tomography via Riemannian optimization")]
struct Cli {
    /// Worker threads for study grids (env fallback: QPT_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OptimizerArg {
    Adam,
    Sgd,
}

impl From<OptimizerArg> for OptimizerKind {
    fn from(value: OptimizerArg) -> Self {
        match value {
            OptimizerArg::Adam => OptimizerKind::Adam,
            OptimizerArg::Sgd => OptimizerKind::Sgd,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random CPTP channel and write it to a file.
    GenChannel {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate Pauli-basis tomography records for a stored channel.
    Simulate {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        qubits: usize,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Fraction of the probe/measurement product to keep.
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a fixed-rank channel to a stored dataset.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, value_enum, default_value = "adam")]
        optimizer: OptimizerArg,
        #[arg(long, default_value_t = 20_000)]
        max_iters: usize,
        /// Minibatch size; default min(64, record count).
        #[arg(long)]
        batch_size: Option<usize>,
        /// Learning rate; default 1e-2.
        #[arg(long)]
        alpha: Option<f64>,
        /// Inner fixed-point Cayley iterations; default 2.
        #[arg(long)]
        cayley_iters: Option<usize>,
        /// Record the full-data loss every this many iterations.
        #[arg(long, default_value_t = 10)]
        record_every: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a fit report against a reference channel.
    Eval {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Append "fidelity,choi_distance" to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a named study and write its tables into a directory.
    Study {
        #[arg(long)]
        name: String,
        /// JSON config; defaults are used when omitted (requires --seed).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("QPT_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                QptError::Io(_) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn print_config<T: Serialize>(label: &str, value: &T) {
    println!("resolved {label} config: {}", serde_json::to_string(value).unwrap_or_default());
}

fn run(command: Command) -> qpt::Result<()> {
    match command {
        Command::GenChannel { dim, rank, seed, out } => {
            print_config("gen-channel", &serde_json::json!({"dim": dim, "rank": rank, "seed": seed}));
            let channel = KrausChannel::random(dim, rank, seed)?;
            io::write_channel(&out, &channel)?;
            println!("wrote {} (TP defect {:e})", out.display(), channel.tp_defect());
            Ok(())
        }
        Command::Simulate { channel, qubits, epsilon, nu, seed, out } => {
            print_config(
                "simulate",
                &serde_json::json!({
                    "channel": channel.display().to_string(), "qubits": qubits,
                    "epsilon": epsilon, "nu": nu, "seed": seed
                }),
            );
            let ch = io::read_channel(&channel)?;
            if ch.dim() != 1 << qubits {
                return Err(QptError::Dimension(format!(
                    "channel dim {} does not match {qubits} qubit(s)",
                    ch.dim()
                )));
            }
            let (probes, meas) = pauli_eigenstate_set(qubits)?;
            let mut data = simulate_dataset(&ch, &probes, &meas, epsilon, seed)?;
            if nu < 1.0 {
                data = subsample(&data, nu, seed.wrapping_add(1))?;
            }
            io::write_dataset(&out, &data)?;
            println!("wrote {} ({} records)", out.display(), data.len());
            Ok(())
        }
        Command::Fit {
            data, rank, optimizer, max_iters, batch_size, alpha, cayley_iters, record_every, seed, out,
        } => {
            let dataset = io::read_dataset(&data)?;
            let mut config = FitConfig::new(rank, seed);
            config.optimizer = optimizer.into();
            config.max_iters = max_iters;
            config.batch_size = batch_size;
            config.record_every = record_every;
            if let Some(a) = alpha {
                config.hyper.alpha = a;
            }
            if let Some(s) = cayley_iters {
                config.hyper.cayley_iters = s;
            }
            print_config("fit", &config);
            let report = fit(&dataset, &config)?;
            io::write_report(&out, &report)?;
            println!(
                "final loss {:e} after {} iterations in {:.3} s (max TP defect {:e})",
                report.final_loss(),
                report.iterations_run,
                report.wall_time_seconds,
                report.max_stiefel_defect
            );
            Ok(())
        }
        Command::Eval { fit, truth, csv } => {
            let report = io::read_report(&fit)?;
            let reference = io::read_channel(&truth)?;
            let ev = evaluate(&report.final_channel, &reference)?;
            println!("fidelity {:.6}", ev.fidelity);
            println!("choi_distance {:.6}", ev.choi_distance);
            if let Some(path) = csv {
                append_csv_line(&path, &format!("{:.6},{:.6}", ev.fidelity, ev.choi_distance))?;
            }
            Ok(())
        }
        Command::Study { name, config, out, seed } => run_study(&name, config.as_deref(), &out, seed),
    }
}

fn append_csv_line(path: &Path, line: &str) -> qpt::Result<()> {
    use std::io::Write;
    let fresh = !path.exists();
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(file, "fidelity,choi_distance")?;
    }
    writeln!(file, "{line}")?;
    Ok(())
}

fn seed_or_err(seed: Option<u64>) -> qpt::Result<u64> {
    seed.ok_or_else(|| QptError::Invalid("--seed is required when --config is omitted".into()))
}

fn load_config<T: serde::de::DeserializeOwned>(
    path: Option<&Path>,
    fallback: impl FnOnce() -> qpt::Result<T>,
) -> qpt::Result<T> {
    match path {
        Some(p) => io::read_json(p),
        None => fallback(),
    }
}

fn matrix_csv_rows(m: &nalgebra::DMatrix<f64>, row_labels: &[String]) -> Vec<Vec<String>> {
    row_labels
        .iter()
        .enumerate()
        .map(|(r, label)| {
            let mut row = vec![label.clone()];
            row.extend((0..m.ncols()).map(|c| format!("{:e}", m[(r, c)])));
            row
        })
        .collect()
}

fn run_study(name: &str, config: Option<&Path>, out: &Path, seed: Option<u64>) -> qpt::Result<()> {
    std::fs::create_dir_all(out)?;
    match name {
        "random" => {
            let cfg: RandomChannelConfig =
                load_config(config, || Ok(RandomChannelConfig::new(1, seed_or_err(seed)?)))?;
            print_config("random", &cfg);
            io::write_json(&out.join("metadata.json"), &cfg)?;
            let rows = random_channel_study(&cfg)?;
            let table: Vec<Vec<String>> = rows.iter().map(|r| r.csv_fields()).collect();
            io::write_csv(
                &out.join("random.csv"),
                qpt::experiments::RandomChannelRow::csv_header(),
                &table,
            )?;
            println!("wrote {} rows to {}", rows.len(), out.join("random.csv").display());
        }
        "retraction" => {
            let cfg: RetractionConfig =
                load_config(config, || Ok(RetractionConfig::new(seed_or_err(seed)?)))?;
            print_config("retraction", &cfg);
            io::write_json(&out.join("metadata.json"), &cfg)?;
            let rows = retraction_benchmark(&cfg)?;
            let table: Vec<Vec<String>> = rows.iter().map(|r| r.csv_fields()).collect();
            io::write_csv(
                &out.join("retraction.csv"),
                qpt::experiments::RetractionRow::csv_header(),
                &table,
            )?;
            println!("wrote {} rows to {}", rows.len(), out.join("retraction.csv").display());
        }
        "pauli-noise" => {
            let cfg: PauliNoiseConfig =
                load_config(config, || Ok(PauliNoiseConfig::new(seed_or_err(seed)?)))?;
            print_config("pauli-noise", &cfg);
            io::write_json(&out.join("metadata.json"), &cfg)?;
            let result = pauli_noise_demo(cfg.p, cfg.epsilon, cfg.seed)?;
            let labels: Vec<String> = (0..16).map(|k| k.to_string()).collect();
            let mut header = vec!["pauli"];
            let owned: Vec<String> = labels.clone();
            header.extend(owned.iter().map(|s| s.as_str()));
            io::write_csv(
                &out.join("noise_part.csv"),
                &header,
                &matrix_csv_rows(&result.noise_part, &labels),
            )?;
            io::write_csv(
                &out.join("fitted_ptm.csv"),
                &header,
                &matrix_csv_rows(&result.fitted_ptm, &labels),
            )?;
            io::write_csv(
                &out.join("summary.csv"),
                &["p", "epsilon", "fidelity", "final_loss"],
                &[vec![
                    cfg.p.to_string(),
                    format!("{:e}", cfg.epsilon),
                    format!("{:.6}", result.fidelity),
                    format!("{:e}", result.final_loss),
                ]],
            )?;
            println!("fidelity {:.6}, wrote tables to {}", result.fidelity, out.display());
        }
        "oscillator" => {
            let cfg: OscillatorConfig =
                load_config(config, || Ok(OscillatorConfig::new(seed_or_err(seed)?)))?;
            print_config("oscillator", &cfg);
            io::write_json(&out.join("metadata.json"), &cfg)?;
            let result = oscillator_study(&cfg)?;
            let table: Vec<Vec<String>> = result.rows.iter().map(|r| r.csv_fields()).collect();
            io::write_csv(
                &out.join("oscillator.csv"),
                qpt::experiments::oscillator::OscillatorRow::csv_header(),
                &table,
            )?;
            let col_labels: Vec<String> =
                result.grid.beta_re.iter().map(|v| format!("{v:.3}")).collect();
            let row_labels: Vec<String> =
                result.grid.beta_im.iter().map(|v| format!("{v:.3}")).collect();
            let mut header = vec!["im_re".to_string()];
            header.extend(col_labels);
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            io::write_csv(
                &out.join("parity_truth.csv"),
                &header_refs,
                &matrix_csv_rows(&result.grid.truth, &row_labels),
            )?;
            io::write_csv(
                &out.join("parity_fitted.csv"),
                &header_refs,
                &matrix_csv_rows(&result.grid.fitted, &row_labels),
            )?;
            println!("wrote oscillator tables to {}", out.display());
        }
        "qnd" => {
            let cfg: QndConfig =
                load_config(config, || Ok(QndConfig::new(0.0, seed_or_err(seed)?)))?;
            print_config("qnd", &cfg);
            io::write_json(&out.join("metadata.json"), &cfg)?;
            let result = qnd_study(&cfg)?;
            let table: Vec<Vec<String>> = result.rows.iter().map(|r| r.csv_fields()).collect();
            io::write_csv(&out.join("qnd.csv"), qpt::experiments::QndRow::csv_header(), &table)?;
            let summary: Vec<Vec<String>> = result
                .summary
                .iter()
                .map(|&(rank, train, test)| {
                    vec![rank.to_string(), format!("{train:e}"), format!("{test:e}")]
                })
                .collect();
            io::write_csv(
                &out.join("qnd_summary.csv"),
                &["rank", "mean_train_loss", "mean_test_loss"],
                &summary,
            )?;
            println!("wrote qnd tables to {}", out.display());
        }
        other => {
            return Err(QptError::Invalid(format!(
                "unknown study '{other}'; valid names: random, retraction, pauli-noise, oscillator, qnd"
            )));
        }
    }
    Ok(())
}
