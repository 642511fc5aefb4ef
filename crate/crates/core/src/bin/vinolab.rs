use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vinolab_core::harness::{self, ConfigBuilder, Format, Report};
use vinolab_core::Error;

#[derive(Parser)]
#[command(name = "vinolab", version, about = "Experiments on the twisted cubic: geometry, incidences, decoupling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frame, shear and dual-box checks.
    Geometry(RunArgs),
    /// Layer decomposition of the union of frequency planks.
    Partition(RunArgs),
    /// Box families, rich cubes, L4 sums and union statements.
    Incidence(RunArgs),
    /// Exponential sums, decoupling ratios, exponents and pigeonholing.
    Decoupling(RunArgs),
    /// List experiments, merge reports or re-render one.
    Report {
        #[command(subcommand)]
        action: ReportAction,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment id (see `vinolab report list`).
    #[arg(long)]
    experiment: Option<String>,
    /// Key-value config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for the JSON and CSV files.
    #[arg(long, env = harness::OUT_ENV)]
    out: Option<PathBuf>,
    /// Rendering printed to stdout.
    #[arg(long, value_parser = ["json", "csv"])]
    format: Option<String>,
    /// Extra `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum ReportAction {
    /// The experiment catalogue.
    List,
    /// Concatenate reports of one experiment and recompute the summary.
    Merge {
        paths: Vec<PathBuf>,
        #[arg(long, env = harness::OUT_ENV)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
        format: String,
    },
    /// Print a stored report.
    Show {
        path: PathBuf,
        #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
        format: String,
    },
}

fn emit(report: &Report, format: Format) {
    match format {
        Format::Json => println!("{}", report.to_json()),
        Format::Csv => print!("{}", report.to_csv()),
    }
}

/// Prints failed assertions and maps the outcome to an exit status.
fn finish(report: &Report) -> ExitCode {
    for line in report.failures() {
        eprintln!("FAIL {}: {line}", report.experiment);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(module: &str, args: RunArgs) -> Result<ExitCode, Error> {
    let mut b = match &args.config {
        Some(path) => ConfigBuilder::from_file(path)?,
        None => ConfigBuilder::new(),
    };
    if let Some(e) = args.experiment {
        b = b.set("experiment", e);
    }
    if b.get("experiment").is_none() {
        let first = harness::EXPERIMENTS.iter().find(|e| e.module.name() == module).expect("every module has experiments");
        b = b.set("experiment", first.id);
    }
    for (key, value) in [
        ("seed", args.seed.map(|v| v.to_string())),
        ("trials", args.trials.map(|v| v.to_string())),
        ("threads", args.threads.map(|v| v.to_string())),
        ("out", args.out.map(|v| v.display().to_string())),
        ("format", args.format),
    ] {
        if let Some(v) = value {
            b = b.set(key, v);
        }
    }
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config {
            field: kv.clone(),
            message: "expected KEY=VALUE".into(),
        })?;
        b = b.set(k.trim(), v.trim());
    }
    let config = b.build()?;
    let exp = harness::find(&config.experiment)?;
    if exp.module.name() != module {
        return Err(Error::Config {
            field: "experiment".into(),
            message: format!("`{}` belongs to `{}`, not `{module}`", exp.id, exp.module.name()),
        });
    }
    let report = harness::run(&config)?;
    let (json, csv) = report.write(&harness::out_dir(&config))?;
    emit(&report, config.format);
    eprintln!("wrote {} and {}", json.display(), csv.display());
    Ok(finish(&report))
}

fn report(action: ReportAction) -> Result<ExitCode, Error> {
    match action {
        ReportAction::List => {
            for (id, module, description) in harness::list_experiments() {
                println!("{id:<20} {module:<11} {description}");
            }
            Ok(ExitCode::SUCCESS)
        }
        ReportAction::Merge { paths, out, format } => {
            let merged = harness::merge_reports(&paths)?;
            let dir = out
                .or_else(|| std::env::var_os(harness::OUT_ENV).map(Into::into))
                .unwrap_or_else(|| harness::DEFAULT_OUT.into());
            let (json, csv) = merged.write(&dir.join("merged"))?;
            emit(&merged, format.parse()?);
            eprintln!("wrote {} and {}", json.display(), csv.display());
            Ok(finish(&merged))
        }
        ReportAction::Show { path, format } => {
            let r = Report::read(&path)?;
            emit(&r, format.parse()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Geometry(a) => run("geometry", a),
        Command::Partition(a) => run("partition", a),
        Command::Incidence(a) => run("incidence", a),
        Command::Decoupling(a) => run("decoupling", a),
        Command::Report { action } => report(action),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::UnknownExperiment(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
