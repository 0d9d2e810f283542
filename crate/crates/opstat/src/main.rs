use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opstat::commands::{self, MomentSource, SeriesOptions, TestInput};
use opstat::config::{parse_kv, GridConfig, McConfig, PRESETS};
use opstat::input::{read_histogram, InputFormat, MissingPolicy};
use opstat::{CliError, Format, Report, ReportSpec};
use opstat_core::{PrecisionConfig, ProbabilityVector, Scenario, TiePolicy};

#[derive(Parser)]
#[command(name = "opstat", version, about = "Ordinal-pattern entropy statistics")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    format: Format,

    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SeriesArgs {
    /// Layout of the input files.
    #[arg(long, value_enum, default_value_t = InputFormat::Plain)]
    input_format: InputFormat,

    /// Column holding the values (default: TMAX for ghcn, else `value` or the first column).
    #[arg(long)]
    column: Option<String>,

    /// Column holding ISO dates, used to report gaps.
    #[arg(long)]
    date_column: Option<String>,

    /// What to do with rows that have no value.
    #[arg(long, value_enum, default_value_t = MissingPolicy::Drop)]
    missing: MissingPolicy,

    /// Tie handling: reject, stable (earlier sample ranks lower) or jitter:SEED.
    #[arg(long, default_value = "stable")]
    ties: TiePolicy,
}

impl SeriesArgs {
    fn options(&self) -> SeriesOptions {
        SeriesOptions {
            format: self.input_format,
            value_column: self.column.clone(),
            date_column: self.date_column.clone(),
            missing: self.missing,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ordinal-pattern histogram (and optionally the pattern sequence) of a series.
    Symbolize {
        file: PathBuf,
        #[arg(short = 'D', long = "embedding")]
        dimension: usize,
        /// Also list the pattern of every window.
        #[arg(long)]
        sequence: bool,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Permutation entropy of one or more series.
    Entropy {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(short = 'D', long = "embedding", value_delimiter = ',', required = true)]
        dimensions: Vec<usize>,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Mean and variance of the plug-in entropy under each approximation.
    Moments {
        /// Series file (or histogram file with --histogram).
        file: Option<PathBuf>,
        #[arg(short = 'D', long = "embedding")]
        dimension: Option<usize>,
        /// Treat FILE as a list of pattern counts.
        #[arg(long)]
        histogram: bool,
        /// Use a named law instead of a file.
        #[arg(long, conflicts_with_all = ["file", "probs"])]
        scenario: Option<Scenario>,
        /// Explicit probability vector.
        #[arg(long, value_delimiter = ',', conflicts_with = "file")]
        probs: Option<Vec<f64>>,
        #[arg(short = 'k', long)]
        k: Option<usize>,
        #[arg(short = 'n', long)]
        n: Option<u64>,
        #[arg(long)]
        normalized: bool,
        /// Also evaluate the exact moments in arbitrary precision.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 256)]
        precision_bits: usize,
        #[arg(long, default_value_t = 2000)]
        max_n: u64,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Test whether two series (or histograms) have equal entropy.
    Test {
        x: PathBuf,
        y: PathBuf,
        /// Embedding dimension of x (and of y unless --dy is given); a list with --matrix.
        #[arg(short = 'D', long = "embedding", value_delimiter = ',')]
        dimensions: Vec<usize>,
        #[arg(long)]
        dy: Option<usize>,
        /// Test every pair of dimensions from -D.
        #[arg(long)]
        matrix: bool,
        /// Inputs are histogram files.
        #[arg(long)]
        histograms: bool,
        #[arg(long)]
        normalized: bool,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Bonferroni correction for M comparisons.
        #[arg(long, value_name = "M")]
        bonferroni: Option<u64>,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Monte Carlo replicates of the plug-in entropy.
    Mc {
        #[arg(long)]
        preset: Option<String>,
        /// key = value configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<Scenario>,
        #[arg(short = 'k', long)]
        k: Option<usize>,
        #[arg(short = 'n', long)]
        n: Option<u64>,
        #[arg(long)]
        replicates: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        normalized: Option<bool>,
        #[arg(long)]
        threads: Option<usize>,
        /// Write every replicate value here, one per line.
        #[arg(long)]
        samples_out: Option<PathBuf>,
        /// Emit one sampled histogram instead of replicate statistics.
        #[arg(long)]
        histogram: bool,
    },
    /// Accuracy of approximate means against certified values.
    Grid {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        scenarios: Option<Vec<String>>,
        #[arg(short = 'k', long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(short = 'n', long, value_delimiter = ',')]
        n: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long)]
        precision_bits: Option<usize>,
        #[arg(long)]
        max_n: Option<u64>,
        /// Replicates for cells whose exact mean cannot be certified.
        #[arg(long)]
        fallback_replicates: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Normalized entropy with confidence intervals per file and dimension.
    ReportHc {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(short = 'D', long = "embedding", value_delimiter = ',', required = true)]
        dimensions: Vec<usize>,
        #[arg(long, default_value_t = 0.999)]
        level: f64,
        #[command(flatten)]
        series: SeriesArgs,
    },
}

fn read_config(path: &PathBuf) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    parse_kv(&text)
}

fn unknown_preset(name: &str) -> CliError {
    CliError::config("preset", format!("unknown preset {name:?}; available: {}", PRESETS.join(", ")))
}

fn push<T: ToString>(pairs: &mut Vec<(String, String)>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        pairs.push((key.to_string(), v.to_string()));
    }
}

fn join<T: ToString>(v: Option<Vec<T>>) -> Option<String> {
    v.map(|v| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
}

fn run(cli: Cli) -> Result<Report, CliError> {
    match cli.command {
        Command::Symbolize { file, dimension, sequence, series } => {
            commands::cmd_symbolize(&file, &series.options(), dimension, series.ties, sequence)
        }
        Command::Entropy { files, dimensions, series } => {
            commands::cmd_entropy(&files, &series.options(), &dimensions, series.ties)
        }
        Command::Moments {
            file, dimension, histogram, scenario, probs, k, n, normalized, exact, precision_bits, max_n, series,
        } => {
            let precision = PrecisionConfig::new(precision_bits, max_n)
                .map_err(|e| CliError::config("precision-bits", e.to_string()))?;
            let source = match (file, scenario, probs) {
                (Some(path), _, _) if histogram => MomentSource::Histogram {
                    label: path.display().to_string(),
                    histogram: read_histogram(&path, dimension)?,
                },
                (Some(path), _, _) => {
                    let d = dimension.ok_or_else(|| CliError::Usage("-D is required for series input".into()))?;
                    let s = commands::load_symbolized(&path, &series.options(), d, series.ties)?;
                    MomentSource::Histogram {
                        label: path.display().to_string(),
                        histogram: s.histogram,
                    }
                }
                (None, Some(sc), _) => {
                    let k = k.ok_or_else(|| CliError::Usage("-k is required with --scenario".into()))?;
                    let p = sc.probabilities(k).map_err(|e| CliError::config("scenario", e.to_string()))?;
                    MomentSource::Law {
                        label: sc.to_string(),
                        p,
                        n: n.ok_or_else(|| CliError::Usage("-n is required with --scenario".into()))?,
                    }
                }
                (None, None, Some(probs)) => MomentSource::Law {
                    label: "explicit".into(),
                    p: ProbabilityVector::new(probs).map_err(|e| CliError::config("probs", e.to_string()))?,
                    n: n.ok_or_else(|| CliError::Usage("-n is required with --probs".into()))?,
                },
                (None, None, None) => {
                    return Err(CliError::Usage("give a file, --scenario or --probs".into()))
                }
            };
            commands::cmd_moments(&source, normalized, precision, exact)
        }
        Command::Test {
            x, y, dimensions, dy, matrix, histograms, normalized, alpha, bonferroni, series,
        } => {
            let spec = ReportSpec {
                format: cli.format,
                normalized,
                alpha,
                bonferroni,
            };
            if matrix {
                if histograms {
                    return Err(CliError::Usage("--matrix needs series inputs".into()));
                }
                return commands::cmd_test_matrix(&x, &y, &dimensions, &series.options(), series.ties, &spec);
            }
            if dimensions.len() > 1 {
                return Err(CliError::Usage("give one -D value, or use --matrix".into()));
            }
            let dx = dimensions.first().copied();
            let dy = dy.or(dx);
            let (ix, iy) = if histograms {
                (TestInput::Histogram(x), TestInput::Histogram(y))
            } else {
                (TestInput::Series(x), TestInput::Series(y))
            };
            commands::cmd_test(&ix, dx, &iy, dy, &series.options(), series.ties, &spec).map(|(r, _)| r)
        }
        Command::Mc {
            preset, config, scenario, k, n, replicates, seed, normalized, threads, samples_out, histogram,
        } => {
            let mut cfg = match &preset {
                Some(name) => McConfig::preset(name).ok_or_else(|| unknown_preset(name))?,
                None => McConfig::default(),
            };
            if let Some(path) = &config {
                cfg = cfg.apply(&read_config(path)?)?;
            }
            let mut pairs = Vec::new();
            push(&mut pairs, "scenario", scenario);
            push(&mut pairs, "k", k);
            push(&mut pairs, "n", n);
            push(&mut pairs, "replicates", replicates);
            push(&mut pairs, "seed", seed);
            push(&mut pairs, "normalized", normalized);
            let cfg = cfg.apply(&pairs)?;
            if histogram {
                return commands::cmd_sample_histogram(cfg.scenario, cfg.k, cfg.n, cfg.seed);
            }
            let out = commands::cmd_mc(&cfg, threads)?;
            if let Some(path) = samples_out {
                let mut text = String::with_capacity(out.samples.len() * 24);
                for v in &out.samples {
                    text.push_str(&opstat::report::tsv_float(*v));
                    text.push('\n');
                }
                std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
            }
            Ok(out.report)
        }
        Command::Grid {
            preset, config, scenarios, k, n, methods, precision_bits, max_n, fallback_replicates, seed, threads,
        } => {
            let mut cfg = match &preset {
                Some(name) => GridConfig::preset(name).ok_or_else(|| unknown_preset(name))?,
                None => GridConfig::default(),
            };
            if let Some(path) = &config {
                cfg = cfg.apply(&read_config(path)?)?;
            }
            let mut pairs = Vec::new();
            push(&mut pairs, "scenarios", scenarios.map(|s| s.join(",")));
            push(&mut pairs, "k", join(k));
            push(&mut pairs, "n", join(n));
            push(&mut pairs, "methods", methods.map(|s| s.join(",")));
            push(&mut pairs, "precision_bits", precision_bits);
            push(&mut pairs, "max_n", max_n);
            push(&mut pairs, "fallback_replicates", fallback_replicates);
            push(&mut pairs, "fallback_seed", seed);
            let cfg = cfg.apply(&pairs)?;
            commands::cmd_grid(&cfg, threads)
        }
        Command::ReportHc { files, dimensions, level, series } => {
            commands::cmd_report_hc(&files, &series.options(), &dimensions, level, series.ties)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let output = cli.output.clone();
    match run(cli) {
        Ok(report) => {
            for n in &report.notices {
                eprintln!("notice: {n}");
            }
            let text = report.render(format);
            let written = match &output {
                Some(path) => std::fs::write(path, text),
                None => std::io::stdout().lock().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
