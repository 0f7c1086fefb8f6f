//! `tempogran` command-line front end.

mod config;
mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tempogran::calendar::Calendar;
use tempogran::cyclic::CyclicDescriptor;
use tempogran::distill::{emit_plot_spec, recommend, summarize_cells, Geometry, LevelBounds, PlotOptions};
use tempogran::fixtures;
use tempogran::harmony::{
    classify_pair, cross_tab_observed, harmony_table, CountMode, HarmonyOptions, HarmonySource,
};
use tempogran::table::{ingest, GranularTable, IngestionSchema};

use config::SessionConfig;
use error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "tempogran", version, about = "Cyclic time granularities: enumeration, harmony screening and distribution summaries")]
struct Cli {
    /// Session config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Calendar definition file.
    #[arg(long, global = true)]
    calendar: Option<PathBuf>,
    /// Delimited dataset.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Ingestion schema (TOML).
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// Output directory [env: TEMPOGRAN_OUT_DIR].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calendar definitions.
    #[command(subcommand)]
    Calendar(CalendarCmd),
    /// Cyclic granularities.
    #[command(subcommand)]
    Granularity(GranularityCmd),
    /// Screen descriptor pairs and write harmony.csv.
    Harmony(HarmonyArgs),
    /// Summarize a measurement over (facet, x) cells.
    Summarize(SummarizeArgs),
    /// Write a declarative plot specification.
    PlotSpec(PlotSpecArgs),
    /// Bundled fixtures.
    #[command(subcommand)]
    Fixtures(FixturesCmd),
}

#[derive(Debug, Subcommand)]
enum CalendarCmd {
    /// Parse and validate a calendar file, echoing its rungs.
    Validate { file: PathBuf },
}

#[derive(Debug, Subcommand)]
enum GranularityCmd {
    /// Enumerate span, derived and event granularities as TSV.
    List {
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
    },
    /// Add granularity columns to the dataset and export it.
    Compute {
        #[arg(required = true)]
        names: Vec<String>,
        /// Write labels instead of level numbers.
        #[arg(long)]
        labels: bool,
        /// Output file (default: <out-dir>/granularities.csv).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Observed,
    Structural,
}

#[derive(Debug, Args)]
struct HarmonyArgs {
    /// Descriptor names, comma separated (default: enumerate the calendar).
    #[arg(long, value_delimiter = ',')]
    granularities: Option<Vec<String>>,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    max_levels: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Keep near-clash pairs.
    #[arg(long)]
    keep_near: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CellArgs {
    #[arg(long)]
    x: String,
    #[arg(long)]
    facet: String,
    #[arg(long)]
    response: String,
    /// Quantile probabilities, comma separated.
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    #[command(flatten)]
    cells: CellArgs,
    /// Output file (default: <out-dir>/summaries.csv).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotSpecArgs {
    #[command(flatten)]
    cells: CellArgs,
    /// quantile-area, box, violin-like-density or letter-value-counts (default: recommended).
    #[arg(long)]
    geometry: Option<Geometry>,
    /// Emit even when the pair clashes.
    #[arg(long)]
    force: bool,
    /// Output file (default: <out-dir>/plot_spec.json).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum FixturesCmd {
    /// Write the bundled calendars, seeded datasets and session configs.
    Generate {
        #[arg(long, default_value_t = fixtures::DEFAULT_SEED)]
        seed: u64,
    },
}

struct Session {
    cfg: SessionConfig,
    out_dir: PathBuf,
}

impl Session {
    fn new(cli: &Cli) -> Result<Self, CliError> {
        let mut cfg = match &cli.config {
            Some(p) => SessionConfig::load(p)?,
            None => SessionConfig::default(),
        };
        if let Some(c) = &cli.calendar {
            cfg.calendar = Some(c.clone());
        }
        if let Some(d) = &cli.data {
            cfg.data = Some(d.clone());
        }
        if let Some(s) = &cli.schema {
            let text = std::fs::read_to_string(s).map_err(|e| CliError::io(s, e))?;
            cfg.schema = Some(
                toml::from_str::<IngestionSchema>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", s.display())))?,
            );
        }
        let out_dir = cfg.output_dir(cli.out_dir.as_deref());
        Ok(Session { cfg, out_dir })
    }

    fn calendar(&self) -> Result<Calendar, CliError> {
        self.cfg.validate()?;
        Ok(Calendar::load(self.cfg.calendar_path()?)?)
    }

    fn table(&self, cal: &Calendar) -> Result<GranularTable, CliError> {
        let path = self.cfg.data_path()?;
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        Ok(ingest(std::io::BufReader::new(file), self.cfg.schema()?, &cal.hierarchy)?)
    }

    fn output(&self, explicit: Option<&Path>, default: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = explicit.map(Path::to_path_buf).unwrap_or_else(|| self.out_dir.join(default));
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok((path, BufWriter::new(f)))
    }
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn validate_calendar(file: &Path) -> Result<(), CliError> {
    let cal = Calendar::load(file)?;
    let h = &cal.hierarchy;
    let mut out = std::io::stdout().lock();
    let mut line = |s: String| writeln!(out, "{s}").map_err(|e| CliError::io(Path::new("<stdout>"), e));
    line(format!("calendar\t{}", cal.name))?;
    if !h.origin().description.is_empty() {
        line(format!("origin\t{}", h.origin().description))?;
    }
    line("rung\tperiod\tphase".to_string())?;
    for i in 0..h.len() {
        line(format!("{}\t{}\t{}", h.name(i), h.operator_label(i), h.rung(i).phase))?;
    }
    for d in &cal.derived {
        line(format!("derived\t{}\t{}", d.name, d.base))?;
    }
    for e in &cal.events {
        line(format!("event\t{}\t{} categories", e.name(), e.categories().len()))?;
    }
    line("ok".to_string())
}

fn list_granularities(s: &Session, from: Option<&str>, to: Option<&str>) -> Result<(), CliError> {
    let cal = s.calendar()?;
    let mut out = std::io::stdout().lock();
    let io = |e| CliError::io(Path::new("<stdout>"), e);
    writeln!(out, "name\tkind\tlevels").map_err(io)?;
    for d in cal.granularities(from, to)? {
        writeln!(out, "{}\t{}\t{}", d.name(), d.kind(), d.level_count()).map_err(io)?;
    }
    Ok(())
}

fn descriptors(cal: &Calendar, names: &[String]) -> Result<Vec<CyclicDescriptor>, CliError> {
    names.iter().map(|n| Ok(cal.descriptor(n)?)).collect()
}

fn compute(s: &Session, names: &[String], labels: bool, output: Option<&Path>) -> Result<(), CliError> {
    let cal = s.calendar()?;
    let t = s.table(&cal)?.augment(&cal.hierarchy, &descriptors(&cal, names)?)?;
    let delimiter = s.cfg.schema()?.delimiter as u8;
    let (path, mut w) = s.output(output, "granularities.csv")?;
    t.write_csv(&mut w, delimiter, labels)?;
    finish(&path, w)
}

fn harmony(s: &Session, a: &HarmonyArgs) -> Result<(), CliError> {
    let cal = s.calendar()?;
    let names = a.granularities.clone().or_else(|| s.cfg.granularities.clone());
    let ds = match names {
        Some(n) => descriptors(&cal, &n)?,
        None => {
            let from = a.from.as_deref().or(s.cfg.from.as_deref());
            let to = a.to.as_deref().or(s.cfg.to.as_deref());
            cal.granularities(from, to)?
        }
    };
    let opts = HarmonyOptions {
        max_levels: a.max_levels.unwrap_or(s.cfg.max_levels),
        threshold: a.threshold.unwrap_or(s.cfg.near_threshold),
        keep_near: a.keep_near,
    };
    let mode = match a.mode {
        Some(ModeArg::Observed) => CountMode::Observed,
        Some(ModeArg::Structural) => CountMode::Structural,
        None => s.cfg.mode,
    };
    let table = match mode {
        CountMode::Observed => harmony_table(
            &ds,
            HarmonySource::Observed { hierarchy: &cal.hierarchy, table: &s.table(&cal)? },
            opts,
        )?,
        CountMode::Structural => {
            harmony_table(&ds, HarmonySource::Structural { hierarchy: &cal.hierarchy, span: None }, opts)?
        }
    };
    let (path, mut w) = s.output(a.output.as_deref(), "harmony.csv")?;
    table.write_csv(&mut w)?;
    finish(&path, w)
}

struct Prepared {
    table: GranularTable,
    x: CyclicDescriptor,
    facet: CyclicDescriptor,
    probs: Vec<f64>,
}

fn prepare(s: &Session, a: &CellArgs) -> Result<Prepared, CliError> {
    let cal = s.calendar()?;
    let x = cal.descriptor(&a.x)?;
    let facet = cal.descriptor(&a.facet)?;
    let table = s.table(&cal)?.augment(&cal.hierarchy, &[x.clone(), facet.clone()])?;
    let probs = a.probs.clone().unwrap_or_else(|| s.cfg.probs.clone());
    Ok(Prepared { table, x, facet, probs })
}

fn summarize(s: &Session, a: &SummarizeArgs) -> Result<(), CliError> {
    let p = prepare(s, &a.cells)?;
    let sums = summarize_cells(&p.table, p.x.name(), p.facet.name(), &a.cells.response, &p.probs)?;
    let (path, mut w) = s.output(a.output.as_deref(), "summaries.csv")?;
    sums.write_csv(&mut w)?;
    finish(&path, w)?;

    let c = classify_pair(&cross_tab_observed(&p.table, p.facet.name(), p.x.name())?, s.cfg.near_threshold);
    let r = recommend(&p.x, &p.facet, &c, LevelBounds::default());
    let rpath = path.with_file_name("recommendation.json");
    let (rpath, mut w) = s.output(Some(&rpath), "recommendation.json")?;
    let text = serde_json::to_string_pretty(&r).map_err(tempogran::distill::DistillError::from)?;
    writeln!(w, "{text}").map_err(|e| CliError::io(&rpath, e))?;
    finish(&rpath, w)
}

fn plot_spec(s: &Session, a: &PlotSpecArgs) -> Result<(), CliError> {
    let p = prepare(s, &a.cells)?;
    let sums = summarize_cells(&p.table, p.x.name(), p.facet.name(), &a.cells.response, &p.probs)?;
    let c = classify_pair(&cross_tab_observed(&p.table, p.facet.name(), p.x.name())?, s.cfg.near_threshold);
    let geometry = a
        .geometry
        .or_else(|| recommend(&p.x, &p.facet, &c, LevelBounds::default()).geometry)
        .unwrap_or(Geometry::QuantileArea);
    let opts = PlotOptions {
        source: s.cfg.data.as_ref().map(|d| d.display().to_string()),
        classification: Some(&c),
        force: a.force,
    };
    let spec = emit_plot_spec(&sums, &p.x, &p.facet, &a.cells.response, geometry, &opts)?;
    let (path, mut w) = s.output(a.output.as_deref(), "plot_spec.json")?;
    w.write_all(spec.to_json()?.as_bytes()).map_err(|e| CliError::io(&path, e))?;
    finish(&path, w)
}

fn session_toml(calendar: &str, data: &str, schema: IngestionSchema, from: &str, to: &str) -> Result<String, CliError> {
    let cfg = SessionConfig {
        calendar: Some(calendar.into()),
        data: Some(data.into()),
        schema: Some(schema),
        from: Some(from.into()),
        to: Some(to.into()),
        ..SessionConfig::default()
    };
    toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))
}

fn generate(s: &Session, seed: u64) -> Result<(), CliError> {
    let dir = &s.out_dir;
    for p in fixtures::write_all(dir, seed).map_err(|e| CliError::io(dir, e))? {
        println!("wrote {}", p.display());
    }
    let configs = [
        (
            "smart_meter.toml",
            session_toml("smart_meter.cal", "synthetic_smart_meter.csv", fixtures::smart_meter_schema(), "hour", "month")?,
        ),
        ("cricket.toml", session_toml("cricket.cal", "cricket_sample.csv", fixtures::cricket_schema(), "over", "season")?),
    ];
    for (name, text) in configs {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let s = Session::new(&cli)?;
    match &cli.command {
        Command::Calendar(CalendarCmd::Validate { file }) => validate_calendar(file),
        Command::Granularity(GranularityCmd::List { from, to }) => list_granularities(&s, from.as_deref(), to.as_deref()),
        Command::Granularity(GranularityCmd::Compute { names, labels, output }) => {
            compute(&s, names, *labels, output.as_deref())
        }
        Command::Harmony(a) => harmony(&s, a),
        Command::Summarize(a) => summarize(&s, a),
        Command::PlotSpec(a) => plot_spec(&s, a),
        Command::Fixtures(FixturesCmd::Generate { seed }) => generate(&s, *seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().lines().next().unwrap_or("invalid arguments").to_string());
            eprintln!("{}", err.json_line());
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
