//! Command implementations behind the `quadswitch` binary.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use quadswitch_core::controller::ControllerMode;
use quadswitch_core::sim::{simulate, SimError, SimTrace};
use quadswitch_core::switching::{adt_threshold_for_modes, AdtThreshold, AdtWitness};
use quadswitch_core::Error;

use crate::config::{ConfigFile, ScenarioSpec, SchemaError};
use crate::output::{self, sig6};
use crate::report;

/// A failed command. Each kind maps to one exit code.
#[derive(Debug)]
pub enum CliError {
    Schema(SchemaError),
    Adt(AdtWitness),
    Sim(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Schema(_) => 2,
            CliError::Adt(_) => 3,
            CliError::Sim(_) => 4,
        }
    }
}

/// One line of `key=value` pairs.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(e) => write!(f, "error=schema path={} reason={:?}", e.path, e.message),
            CliError::Adt(w) => write!(
                f,
                "error=adt window=[{},{}] switches={} allowed={}",
                w.t1, w.t2, w.count, w.allowed
            ),
            CliError::Sim(msg) => write!(f, "error=sim reason={msg:?}"),
            CliError::Io(msg) => write!(f, "error=io reason={msg:?}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Schema(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn core_error(e: Error) -> CliError {
    match e {
        Error::AdtViolation(w) => CliError::Adt(w),
        other => CliError::Sim(other.to_string()),
    }
}

/// Where a scenario comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File(PathBuf),
    Preset(String),
}

impl Source {
    pub fn label(&self) -> String {
        match self {
            Source::File(p) => p.display().to_string(),
            Source::Preset(name) => format!("preset {name}"),
        }
    }

    pub fn load(&self) -> Result<ConfigFile, CliError> {
        match self {
            Source::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                Ok(ConfigFile::from_toml_str(&text)?)
            }
            Source::Preset(name) => Ok(ConfigFile::preset(name)?),
        }
    }
}

/// Step/horizon overrides from the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub step: Option<f64>,
    pub horizon: Option<f64>,
}

pub fn load_spec(source: &Source, overrides: Overrides) -> Result<ScenarioSpec, CliError> {
    let cfg = source.load()?.with_overrides(overrides.step, overrides.horizon);
    cfg.scenario()?.map_err(core_error)
}

fn synthesize(spec: &ScenarioSpec) -> Result<Vec<ControllerMode>, CliError> {
    spec.scenario
        .modes
        .iter()
        .enumerate()
        .map(|(i, cfg)| {
            let mode = ControllerMode::synthesize(*cfg).map_err(|e| CliError::Sim(format!("mode {}: {e}", i + 1)))?;
            mode.check_leakage(i).map_err(core_error)?;
            Ok(mode)
        })
        .collect()
}

/// ADT threshold for the configured gains.
pub fn adt(source: &Source) -> Result<AdtThreshold, CliError> {
    let spec = load_spec(source, Overrides::default())?;
    let modes = synthesize(&spec)?;
    adt_threshold_for_modes(&modes, spec.kappa_fraction).map_err(core_error)
}

pub fn format_adt(th: &AdtThreshold) -> String {
    let mut s = format!(
        "mu = {}\nrate = {}\nkappa = {}\nvartheta* = {}\ntight mu = {}\ntight vartheta* = {}\n",
        sig6(th.mu),
        sig6(th.rate),
        sig6(th.kappa),
        sig6(th.vartheta_star),
        sig6(th.tight_mu),
        sig6(th.tight_vartheta_star)
    );
    for (i, (lo, hi)) in th.p_min_eigenvalues.iter().zip(&th.p_max_eigenvalues).enumerate() {
        s.push_str(&format!(
            "mode {}: lambda_min(P) = {}, lambda_max(P) = {}\n",
            i + 1,
            sig6(*lo),
            sig6(*hi)
        ));
    }
    s
}

/// Certifies the configured schedule; the `Ok` text describes the pass.
pub fn certify(source: &Source) -> Result<String, CliError> {
    let spec = load_spec(source, Overrides::default())?;
    let adt = spec.adt();
    let cert = spec.scenario.schedule.certify().map_err(core_error)?;
    let margin = if cert.switches == 0 {
        "inf".to_string()
    } else {
        sig6(cert.min_margin)
    };
    Ok(format!(
        "ADT certified: yes (switches={}, vartheta={}, N0={}, min margin={margin})\n",
        cert.switches, adt.vartheta, adt.chatter_bound
    ))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_plots(dir: &Path, trace: &SimTrace) -> Result<Vec<String>, CliError> {
    let mut files = vec!["trace.csv".to_string()];
    let mut w = create(dir, "trace.csv")?;
    output::write_trace_csv(&mut w, trace)?;
    w.flush()?;
    let mut w = create(dir, "plot_errors.csv")?;
    output::write_errors_csv(&mut w, trace)?;
    w.flush()?;
    files.push("plot_errors.csv".into());
    for m in 0..trace.modes.len() {
        let name = format!("plot_gains_mode{}.csv", m + 1);
        let mut w = create(dir, &name)?;
        output::write_gains_csv(&mut w, trace, m)?;
        w.flush()?;
        files.push(name);
    }
    let mut w = create(dir, "plot_switching.csv")?;
    output::write_switching_csv(&mut w, trace)?;
    w.flush()?;
    files.push("plot_switching.csv".into());
    let mut w = create(dir, "plot_disturbance.csv")?;
    output::write_disturbance_csv(&mut w, trace)?;
    w.flush()?;
    files.push("plot_disturbance.csv".into());
    Ok(files)
}

/// Result of `run`: the summary text and the files written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: String,
    pub files: Vec<String>,
    pub all_pass: bool,
}

/// Simulates, analyses and writes every artefact into `out`.
///
/// An aborted run still writes the trace prefix before failing.
pub fn run(source: &Source, out: &Path, overrides: Overrides, seed: Option<u64>) -> Result<RunOutput, CliError> {
    let spec = load_spec(source, overrides)?;
    synthesize(&spec)?;
    spec.scenario.schedule.certify().map_err(core_error)?;
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let trace = match simulate(&spec.scenario) {
        Ok(trace) => trace,
        Err(SimError::Setup(e)) => return Err(core_error(e)),
        Err(SimError::Abort { time, cause, trace }) => {
            let mut w = create(out, "trace.csv")?;
            output::write_trace_csv(&mut w, &trace)?;
            w.flush()?;
            return Err(CliError::Sim(format!("aborted at t={time}: {cause}")));
        }
    };
    let report = report::analyse(&spec.scenario, spec.kappa_fraction, &trace).map_err(core_error)?;
    let files = write_plots(out, &trace)?;
    let mut summary = output::summary(&source.label(), &trace, &report);
    if let Some(seed) = seed {
        summary.push_str(&format!("seed: {seed} (unused; the models are deterministic)\n"));
    }
    fs::write(out.join("summary.txt"), &summary)?;
    Ok(RunOutput {
        summary,
        files,
        all_pass: report.all_pass(),
    })
}

/// The configuration as TOML, after overrides.
pub fn dump_config(source: &Source, overrides: Overrides) -> Result<String, CliError> {
    let cfg = source.load()?.with_overrides(overrides.step, overrides.horizon);
    cfg.scenario()?.map_err(core_error)?;
    Ok(cfg.to_toml())
}
