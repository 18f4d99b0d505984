use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use thz_noma::absorption::{load_catalog, Catalog, MediumConditions, REFERENCE_FREQUENCIES_HZ};
use thz_noma::channel::{PowerSplit, User};
use thz_noma::montecarlo::{estimate_pairing_benefit, TrialConfig};
use thz_noma::outage::Method;
use thz_noma::pairing::{PairingScheme, Thresholds};
use thz_noma::scenario::{
    csv_string, render_rows, run_sweep, validate, Evaluators, Preset, ScenarioConfig, ScenarioError,
};

const EXIT_CONFIG: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "thz-noma", version, about = "Outage analysis for THz-NOMA downlinks with user pairing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Source {
    /// Scenario JSON document.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped experiment preset.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Override the Monte Carlo master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Monte Carlo trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Output file (defaults to the scenario's output path, then stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy)]
enum PresetArg {
    Fig2,
    Fig3,
    Fig4,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Fig2 => Preset::Fig2,
            PresetArg::Fig3 => Preset::Fig3,
            PresetArg::Fig4 => Preset::Fig4,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the absorption coefficient k(f) of a line catalog.
    Absorb {
        /// Line catalog CSV (defaults to the shipped single-line catalog).
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Comma-separated frequencies in Hz (defaults to the six reference
        /// subcarriers; an empty string gives an empty table).
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the pairing thresholds R_th1 and R_th2.
    Thresholds {
        #[command(flatten)]
        source: Source,
        /// Near-user power fraction (overrides the scenario).
        #[arg(long)]
        a1: Option<f64>,
        /// Absorption coefficient in 1/m (overrides the scenario).
        #[arg(long)]
        k: Option<f64>,
    },
    /// Evaluate the scenario's base point (the sweep is ignored).
    Outage {
        #[command(flatten)]
        source: Source,
        /// Restrict to one method.
        #[arg(long)]
        method: Option<String>,
    },
    /// Run the scenario's sweep and write CSV.
    Sweep {
        #[command(flatten)]
        source: Source,
    },
    /// Compare analytic evaluators against each other and Monte Carlo.
    Validate {
        #[command(flatten)]
        source: Source,
        /// Format printed on stdout; --out always receives JSON.
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Monte Carlo outage and NOMA-over-OMA rates at the base point.
    Mc {
        #[command(flatten)]
        source: Source,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Io(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io(m) => Failure::Io(m),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn load(source: &Source) -> Result<ScenarioConfig, Failure> {
    let mut config = match (&source.config, source.preset) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(p)) => Preset::from(p).config(),
        (None, None) => return Err(Failure::Config("either --config or --preset is required".into())),
    };
    if let Some(seed) = source.seed {
        config.seed = seed;
    }
    if let Some(trials) = source.trials {
        config.trials = trials;
    }
    config.validate()?;
    Ok(config)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn absorb(catalog: Option<&Path>, grid: Option<&str>, out: Option<&Path>) -> Result<u8, Failure> {
    let catalog = match catalog {
        Some(p) => load_catalog(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => Catalog::table_preset(),
    };
    if catalog.lines.is_empty() {
        log::warn!("catalog has no lines; k(f) is zero everywhere");
    }
    let grid = match grid {
        None => REFERENCE_FREQUENCIES_HZ.to_vec(),
        Some(text) => text
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| Failure::Config(format!("'{t}' is not a frequency"))))
            .collect::<Result<_, _>>()?,
    };
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for f in grid {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Failure::Config(format!("frequencies must be positive, got {f}")));
        }
        if !seen.insert(f.to_bits()) {
            log::warn!("duplicate frequency {f} Hz dropped");
            continue;
        }
        rows.push(f);
    }
    let medium = MediumConditions::default();
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(["frequency_hz", "k_per_m"]).map_err(io)?;
    for f in rows {
        w.write_record([format!("{f}"), format!("{}", catalog.absorption_coefficient(&medium, f))]).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    emit(&String::from_utf8(bytes).expect("CSV is UTF-8"), out)?;
    Ok(0)
}

fn thresholds(source: &Source, a1: Option<f64>, k: Option<f64>) -> Result<u8, Failure> {
    let config = if source.config.is_some() || source.preset.is_some() { Some(load(source)?) } else { None };
    let a1 =
        a1.or(config.as_ref().map(|c| c.a1)).ok_or_else(|| Failure::Config("--a1 or a scenario is required".into()))?;
    let mut text = String::new();
    let multi = config.as_ref().filter(|c| c.multicarrier() && k.is_none());
    if let Some(c) = multi {
        let points = c.points()?;
        for p in points {
            let mut point = p;
            point.a1 = a1;
            let t = point.thresholds().map_err(|e| Failure::Config(e.to_string()))?;
            let n = point.plan.as_ref().map_or(1, |pl| pl.len());
            text.push_str(&format!("N={n} a1={a1} R_th1={:.6} R_th2={:.6}\n", t.near, t.far));
        }
    } else {
        let k = k
            .or(config.as_ref().map(|c| c.absorption_per_m))
            .ok_or_else(|| Failure::Config("--k or a scenario is required".into()))?;
        let t = Thresholds::single(a1, k).map_err(|e| Failure::Config(e.to_string()))?;
        text.push_str(&format!("a1={a1} k={k} R_th1={:.6} R_th2={:.6}\n", t.near, t.far));
        if let Some(c) = &config {
            if t.far >= c.radius_m {
                text.push_str(&format!("warning: R_th2 exceeds the disc radius {} m\n", c.radius_m));
            }
        }
    }
    emit(&text, source.out.as_deref())?;
    Ok(0)
}

fn outage(source: &Source, method: Option<&str>) -> Result<u8, Failure> {
    let mut config = load(source)?;
    config.sweep = None;
    if let Some(m) = method {
        let m: Method = serde_json::from_value(serde_json::Value::String(m.to_string()))
            .map_err(|_| Failure::Config(format!("unknown method '{m}'")))?;
        config.methods = vec![m];
    }
    config.validate()?;
    let rows = run_sweep(&config, &Evaluators::default())?;
    emit(&render_rows(&rows), source.out.as_deref())?;
    Ok(if rows.iter().any(|r| r.is_numeric_flag()) { EXIT_NUMERIC } else { 0 })
}

fn sweep(source: &Source) -> Result<u8, Failure> {
    let config = load(source)?;
    let rows = run_sweep(&config, &Evaluators::default())?;
    let out = source.out.clone().or(config.output.clone());
    emit(&csv_string(&rows)?, out.as_deref())?;
    let flagged = rows.iter().filter(|r| r.is_numeric_flag()).count();
    if flagged > 0 {
        eprintln!("{flagged} rows flagged not_converged/not_decayed");
        return Ok(EXIT_NUMERIC);
    }
    Ok(0)
}

fn run_validate(source: &Source, format: ReportFormat) -> Result<u8, Failure> {
    let config = load(source)?;
    let (report, _) = validate(&config, &Evaluators::default())?;
    let shown = match format {
        ReportFormat::Text => report.render_text(),
        ReportFormat::Json => report.to_json() + "\n",
    };
    emit(&shown, None)?;
    if let Some(path) = &source.out {
        emit(&(report.to_json() + "\n"), Some(path))?;
    }
    Ok(report.exit_code() as u8)
}

fn mc(source: &Source) -> Result<u8, Failure> {
    let mut config = load(source)?;
    config.sweep = None;
    config.methods = vec![Method::MonteCarlo];
    let rows = run_sweep(&config, &Evaluators::default())?;
    let mut text = render_rows(&rows);
    let point = &config.points()?[0];
    let budget = config.budget(point).map_err(|e| Failure::Config(e.to_string()))?;
    text.push_str("\nNOMA-over-OMA rate (mean SE gap, bps/Hz)\n");
    for scheme in &config.schemes {
        let trial = TrialConfig {
            trials: config.trials,
            seed: config.seed,
            scheme: PairingScheme::new(*scheme, point.radius).map_err(|e| Failure::Config(e.to_string()))?,
            thresholds: point.thresholds().ok(),
            budget,
            split: PowerSplit::new(point.a1).map_err(|e| Failure::Config(e.to_string()))?,
            fading: config.fading,
            plan: point.plan.clone(),
            targets: point.targets,
            ordered: config.ordered_pairs,
        };
        let label = thz_noma::scenario::scheme_label(scheme);
        match estimate_pairing_benefit(&trial) {
            Ok((near, far)) => text.push_str(&format!(
                "{label:<22} {}={:.6} ({:+.4}) {}={:.6} ({:+.4})\n",
                User::Near.as_str(),
                near.rate.mean,
                near.mean_gap,
                User::Far.as_str(),
                far.rate.mean,
                far.mean_gap
            )),
            Err(e) => text.push_str(&format!("{label:<22} {e}\n")),
        }
    }
    emit(&text, source.out.as_deref())?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Absorb { catalog, grid, out } => absorb(catalog.as_deref(), grid.as_deref(), out.as_deref()),
        Command::Thresholds { source, a1, k } => thresholds(source, *a1, *k),
        Command::Outage { source, method } => outage(source, method.as_deref()),
        Command::Sweep { source } => sweep(source),
        Command::Validate { source, format } => run_validate(source, *format),
        Command::Mc { source } => mc(source),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
