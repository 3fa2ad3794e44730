//! `widder`: batch front end writing JSON reports and CSV tables.
//!
//! Exit codes: 0 when every check passes, 2 when a check fails, 3 on a
//! configuration error.

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use widder_core::catalog::Catalog;
use widder_core::Method;

use commands::{Outcome, Table};
use config::{cfg_err, CommandKind, ConfigError, FunctionSpec, RunConfig};

const EXIT_FAILED: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "widder", version, about = "Laplace transform lab: Widder bounds, Post-Widder inversion, representations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Forward transform on a lambda grid, compared with the closed form.
    Transform(RunArgs),
    /// Mixed derivatives checked against weighted transforms.
    Derivative(RunArgs),
    /// Certify or refute the Widder bound on a grid of points and orders.
    WidderCheck(RunArgs),
    /// Post-Widder inversion with extrapolation on a time grid.
    Invert(RunArgs),
    /// Build and verify the integrated representations.
    Represent(RunArgs),
    /// Invert and compare with the known density.
    Roundtrip(RunArgs),
    /// Run the command named in a config file.
    Run(RunArgs),
    /// Inspect the built-in catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogCmd,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    List,
    Show { name: String },
}

#[derive(Args, Default)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    entry: Option<String>,
    /// Inline function as JSON: {"n":1,"terms":[{"coef":[1],"atoms":[{"rate":-1}]}]}.
    #[arg(long)]
    function: Option<String>,
    /// Primary grid, `start:stop:step` per coordinate joined by `x`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    omega: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    vmax: Option<Vec<u32>>,
    #[arg(long)]
    kmax: Option<u32>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    /// Derivative order tuple, comma separated; repeatable.
    #[arg(long = "order")]
    orders: Vec<String>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Seminorm weights, comma separated; repeatable.
    #[arg(long = "seminorm", allow_hyphen_values = true)]
    seminorms: Vec<String>,
    /// JSON report destination (stdout by default).
    #[arg(long)]
    output: Option<PathBuf>,
    /// CSV table destination; `-` for stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown method {s:?} (closed-form, cauchy, finite-difference, auto)"))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, ConfigError> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| ConfigError(format!("{what}: cannot parse {x:?}"))))
        .collect()
}

impl RunArgs {
    fn to_config(&self) -> Result<RunConfig, ConfigError> {
        let function = match &self.function {
            Some(text) => {
                let de = &mut serde_json::Deserializer::from_str(text);
                let spec: FunctionSpec = serde_path_to_error::deserialize(de)
                    .map_err(|e| ConfigError(format!("config error at $.function.{}: {}", e.path(), e.inner())))?;
                Some(spec)
            }
            None => None,
        };
        let orders = if self.orders.is_empty() {
            None
        } else {
            Some(self.orders.iter().map(|o| parse_list(o, "order")).collect::<Result<_, _>>()?)
        };
        let seminorms = if self.seminorms.is_empty() {
            None
        } else {
            Some(self.seminorms.iter().map(|o| parse_list(o, "seminorm")).collect::<Result<_, _>>()?)
        };
        Ok(RunConfig {
            command: None,
            entry: self.entry.clone(),
            function,
            grid: self.grid.clone(),
            lambda: self.lambda.clone(),
            t: self.t.clone(),
            omega: self.omega.clone(),
            vmax: self.vmax.clone(),
            kmax: self.kmax,
            tol: self.tol,
            r: self.r.clone(),
            orders,
            method: self.method,
            seminorms,
            output: self.output.clone(),
            csv: self.csv.clone(),
        })
    }

    fn resolve(&self, kind: Option<CommandKind>) -> Result<(CommandKind, RunConfig), ConfigError> {
        let base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        let mut cfg = base.overlay(self.to_config()?);
        let kind = match (kind, cfg.command) {
            (Some(k), Some(c)) if k != c => return cfg_err(format!("config is for `{c}` but `{k}` was invoked")),
            (Some(k), _) => k,
            (None, Some(c)) => c,
            (None, None) => return cfg_err("the config does not name a command"),
        };
        cfg.command = Some(kind);
        cfg.validate()?;
        Ok((kind, cfg))
    }
}

fn write_table(table: &Table, dest: &PathBuf) -> Result<(), ConfigError> {
    let io = |e: csv::Error| ConfigError(format!("cannot write CSV: {e}"));
    let sink: Box<dyn Write> = if dest.as_os_str() == "-" {
        Box::new(std::io::stdout())
    } else {
        Box::new(fs::File::create(dest).map_err(|e| ConfigError(format!("cannot create {}: {e}", dest.display())))?)
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush().map_err(|e| ConfigError(format!("cannot write CSV: {e}")))
}

fn execute(args: &RunArgs, kind: Option<CommandKind>) -> Result<bool, ConfigError> {
    let (kind, cfg) = args.resolve(kind)?;
    let Outcome {
        result,
        passed,
        tolerances,
        table,
    } = commands::run(kind, &cfg)?;
    let report = json!({
        "tool": "widder",
        "version": env!("CARGO_PKG_VERSION"),
        "command": kind,
        "config_hash": cfg.hash(),
        "config": cfg,
        "tolerances": tolerances,
        "passed": passed,
        "result": result,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let csv_to_stdout = cfg.csv.as_ref().is_some_and(|p| p.as_os_str() == "-");
    match &cfg.output {
        Some(path) => fs::write(path, &text).map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))?,
        None if !csv_to_stdout => print!("{text}"),
        None => {}
    }
    if let (Some(dest), Some(table)) = (&cfg.csv, &table) {
        write_table(table, dest)?;
    }
    Ok(passed)
}

fn catalog(action: &CatalogCmd) -> Result<bool, ConfigError> {
    let cat = Catalog::builtin();
    match action {
        CatalogCmd::List => {
            for name in cat.list() {
                println!("{name}");
            }
        }
        CatalogCmd::Show { name } => {
            let e = cat.get(name)?;
            let out = json!({
                "name": e.name,
                "description": e.description,
                "n": e.n,
                "d": e.d,
                "flags": e.flags,
                "envelope": e.envelope(),
                "closed_form": e.pair,
                "halfplane": e.oracle.halfplane(),
                "sample_lambdas": e.sample_lambdas,
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("entry serializes"));
        }
    }
    Ok(true)
}

fn configure_threads() -> Result<(), ConfigError> {
    if let Ok(v) = std::env::var("WIDDER_THREADS") {
        let n: usize = v.parse().map_err(|_| ConfigError(format!("WIDDER_THREADS={v:?} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = configure_threads().and_then(|_| match &cli.command {
        Cmd::Transform(a) => execute(a, Some(CommandKind::Transform)),
        Cmd::Derivative(a) => execute(a, Some(CommandKind::Derivative)),
        Cmd::WidderCheck(a) => execute(a, Some(CommandKind::WidderCheck)),
        Cmd::Invert(a) => execute(a, Some(CommandKind::Invert)),
        Cmd::Represent(a) => execute(a, Some(CommandKind::Represent)),
        Cmd::Roundtrip(a) => execute(a, Some(CommandKind::Roundtrip)),
        Cmd::Run(a) => execute(a, None),
        Cmd::Catalog { action } => catalog(action),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
