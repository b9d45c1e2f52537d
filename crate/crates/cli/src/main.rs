use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fairscale::data::{save_csv, write_jsonl, TabularSchema};
use fairscale::harness::{
    compare, load_predictions, run_experiment, sweep, DataSource, ExperimentConfig, Method,
    MethodSpec, Selection, SweepParam,
};
use fairscale::metrics::{full_report, EvalSet};
use fairscale::{Architecture, Result};

#[derive(Parser)]
#[command(
    name = "fairscale",
    version,
    about = "Fairness-aware loss scaling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured synthetic dataset to a file.
    Gen {
        #[command(flatten)]
        common: CommonArgs,
        /// Output file; `.jsonl` selects JSON lines, anything else CSV.
        #[arg(long)]
        file: PathBuf,
    },
    /// Train one method over every seed.
    Train(CommonArgs),
    /// ERM against FIS on the same data and seeds.
    Compare(CommonArgs),
    /// FIS with one parameter varied over a grid.
    Sweep {
        #[arg(value_enum)]
        param: SweepArg,
        /// Comma-separated grid; defaults to 0,0.25,0.5,0.75,1 for c and 0.1,0.5,1,2,5 for tau.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Recompute metrics from a predictions CSV (`id,label,group,p0..` or `id,label,group,score`).
    Report {
        predictions: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Number of groups; defaults to the largest group index plus one.
        #[arg(long)]
        groups: Option<usize>,
        /// Also write the report as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    C,
    Tau,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Erm,
    Fis,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Linear,
    Hidden,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    BestVal,
    Last,
}

/// Flags override values from `--config`, which override built-in defaults.
#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV or JSONL dataset instead of the synthetic testbed.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "group")]
    group_column: String,
    #[arg(long)]
    id_column: Option<String>,
    /// Synthetic dataset size.
    #[arg(long)]
    n_samples: Option<usize>,
    /// Synthetic dataset seed.
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    arch: Option<ArchArg>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_enum)]
    selection: Option<SelectionArg>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    beta_lr: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.data {
            cfg.data = if path.extension().is_some_and(|e| e == "jsonl") {
                DataSource::Jsonl { path: path.clone() }
            } else {
                let mut schema = TabularSchema::new(&self.label_column, &self.group_column);
                schema.id_column = self.id_column.clone();
                DataSource::Csv {
                    path: path.clone(),
                    schema,
                }
            };
        }
        if let DataSource::Synthetic(s) = &mut cfg.data {
            if let Some(n) = self.n_samples {
                s.n_samples = n;
            }
            if let Some(seed) = self.data_seed {
                s.seed = seed;
            }
        }
        if let Some(m) = self.method {
            cfg.method = match m {
                MethodArg::Erm => Method::Erm,
                MethodArg::Fis => Method::Fis,
            };
        }
        let width = self.width.or(match cfg.model {
            Architecture::OneHidden { width } => Some(width),
            Architecture::Linear => None,
        });
        match self.arch {
            Some(ArchArg::Linear) => cfg.model = Architecture::Linear,
            Some(ArchArg::Hidden) => {
                cfg.model = Architecture::OneHidden {
                    width: width.unwrap_or(32),
                }
            }
            None => {
                if let (Architecture::OneHidden { .. }, Some(w)) = (cfg.model, self.width) {
                    cfg.model = Architecture::OneHidden { width: w };
                }
            }
        }
        if let Some(e) = self.epochs {
            cfg.training.epochs = e;
        }
        if let Some(b) = self.batch_size {
            cfg.training.batch_size = b;
        }
        if let Some(s) = self.selection {
            cfg.training.selection = match s {
                SelectionArg::BestVal => Selection::BestValAuc,
                SelectionArg::Last => Selection::LastEpoch,
            };
        }
        if let Some(lr) = self.lr {
            cfg.optimizer.lr = lr;
        }
        if let Some(wd) = self.weight_decay {
            cfg.optimizer.weight_decay = wd;
        }
        if let Some(c) = self.c {
            cfg.fis.c = c;
        }
        if let Some(t) = self.tau {
            cfg.fis.tau = t;
        }
        if let Some(b) = self.beta_lr {
            cfg.fis.beta_lr = b;
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(t) = self.threshold {
            cfg.threshold = t;
        }
        if self.out.is_some() {
            cfg.output_dir = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn out_dir(cfg: &ExperimentConfig, fallback: &str) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(fallback))
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common, file } => {
            let cfg = common.config()?;
            let ds = fairscale::harness::load_data(&cfg.data)?;
            if file.extension().is_some_and(|e| e == "jsonl") {
                write_jsonl(&ds, std::io::BufWriter::new(fs::File::create(&file)?))?;
            } else {
                save_csv(&ds, &file)?;
            }
            eprintln!("wrote {} samples to {}", ds.len(), file.display());
        }
        Command::Train(common) => {
            let cfg = common.config()?;
            let record = run_experiment(&cfg, cfg.method.name())?;
            let dir = out_dir(&cfg, "runs/train");
            record.write_to(&dir)?;
            fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
            print_json(&serde_json::to_value(&record.aggregate_test)?)?;
        }
        Command::Compare(common) => {
            let cfg = common.config()?;
            let methods = [MethodSpec::erm(), MethodSpec::fis("fis", cfg.fis)];
            let table = compare(&cfg, &methods)?;
            let dir = out_dir(&cfg, "runs/compare");
            table.write_to(&dir)?;
            fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
            print!("{}", table.to_csv());
        }
        Command::Sweep {
            param,
            values,
            common,
        } => {
            let cfg = common.config()?;
            let param = match param {
                SweepArg::C => SweepParam::C,
                SweepArg::Tau => SweepParam::Tau,
            };
            let values = if !values.is_empty() {
                values
            } else if param == SweepParam::C {
                vec![0.0, 0.25, 0.5, 0.75, 1.0]
            } else {
                vec![0.1, 0.5, 1.0, 2.0, 5.0]
            };
            let table = sweep(&cfg, param, &values)?;
            let dir = out_dir(&cfg, "runs/sweep");
            table.write_to(&dir)?;
            print!("{}", table.to_csv());
        }
        Command::Report {
            predictions,
            threshold,
            groups,
            out,
        } => report(&predictions, threshold, groups, out.as_deref())?,
    }
    Ok(())
}

fn report(path: &Path, threshold: f64, groups: Option<usize>, out: Option<&Path>) -> Result<()> {
    let preds = load_predictions(path)?;
    let classes = preds[0].probs.len();
    let groups = groups.unwrap_or_else(|| preds.iter().map(|p| p.group).max().unwrap_or(0) + 1);
    let eval = EvalSet::new(preds, classes, groups, threshold)?;
    let report = full_report(&eval).to_flat_json();
    if let Some(out) = out {
        fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    print_json(&report)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e
                .to_string()
                .replace('\\', "\\\\")
                .replace('"', "\\\"")
                .replace('\n', " ");
            eprintln!("error kind={} message=\"{message}\"", e.kind());
            ExitCode::from(2)
        }
    }
}
