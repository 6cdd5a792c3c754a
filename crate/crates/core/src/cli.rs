//! Batch front end behind the `pulsebath` binary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::analysis;
use crate::ensemble::{ensemble_spectrum, EnsembleSpec};
use crate::error::{invalid, Error, Result};
use crate::heisenberg::{discretization_error_bound, free_spectrum, spectrum_heisenberg, SpectrumRequest};
use crate::master::{spectrum_closed_form, spectrum_numeric};
use crate::model::{
    discretize_bath, make_cp, make_pdd, make_udd, EmitterParams, EngineTag, FrequencyGrid, PhotonBathSpec,
    PulseSequence, Spectrum,
};
use crate::oracle::{self, DEFAULT_CAP};
use crate::tpi::{g2_numeric, g2_single, g34, g34_no_pulses, g34_numeric, g34_time_average_numeric, g34_time_averaged, TPIPair};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
const EXIT_IO: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "pulsebath", version, about = "Emission spectra and two-photon interference under pulse control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration given by flags and/or a key=value file.
    Run(RunArgs),
    /// Run a stored parameter set.
    Recipe {
        name: String,
        /// Directory receiving the outputs.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

macro_rules! config_keys {
    ($($field:ident => $key:literal),* $(,)?) => {
        /// Every key accepted in config files and as `--key value` flags.
        pub const KEYS: &[&str] = &[$($key),*];

        #[derive(Debug, Default, Args)]
        pub struct RunArgs {
            /// Flat `key = value` file; flags take precedence.
            #[arg(long)]
            pub config: Option<PathBuf>,
            $(
                #[arg(long = $key, value_name = "VALUE", allow_hyphen_values = true)]
                pub $field: Option<String>,
            )*
        }

        impl RunArgs {
            fn flags(&self) -> Vec<(&'static str, &String)> {
                let mut out = Vec::new();
                $(if let Some(v) = &self.$field { out.push(($key, v)); })*
                out
            }
        }
    };
}

config_keys! {
    mode => "mode",
    engine => "engine",
    engines => "engines",
    delta => "delta",
    delta2 => "delta2",
    gamma => "gamma",
    tau => "tau",
    n_pulses => "n_pulses",
    pulse_width => "pulse_width",
    rotation_deg => "rotation_deg",
    sequence => "sequence",
    total_time => "total_time",
    omega_min => "omega_min",
    omega_max => "omega_max",
    omega_points => "omega_points",
    n_modes => "L",
    half_bandwidth => "D",
    n_max => "n_max",
    state_cap => "state_cap",
    delta_std => "delta_std",
    delta_mean => "delta_mean",
    quad_order => "quad_order",
    t_final => "t_final",
    t_start => "t_start",
    theta_max => "theta_max",
    theta_points => "theta_points",
    normalization => "normalization",
    output => "output",
}

fn key(name: &str) -> Result<&'static str> {
    KEYS.iter()
        .copied()
        .find(|k| *k == name)
        .ok_or_else(|| invalid("config", format!("unknown key `{name}`; valid keys: {}", KEYS.join(", "))))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<&'static str, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid("config", format!("line {}: expected key = value", n + 1)))?;
        out.insert(key(k.trim())?, v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Spectrum,
    Tpi,
    Ensemble,
    Oracle,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceChoice {
    None,
    Pdd,
    Cp,
    Udd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Raw,
    UnitPeak,
}

fn parse_engine(param: &'static str, v: &str) -> Result<EngineTag> {
    match v {
        "heisenberg" => Ok(EngineTag::Heisenberg),
        "master-numeric" => Ok(EngineTag::MasterNumeric),
        "master-closed" => Ok(EngineTag::MasterClosed),
        "oracle" => Ok(EngineTag::Oracle),
        _ => Err(invalid(param, format!("unknown engine `{v}`"))),
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub engine: EngineTag,
    pub engines: Vec<EngineTag>,
    pub delta: f64,
    pub delta2: f64,
    pub gamma: f64,
    pub tau: f64,
    pub n_pulses: usize,
    pub pulse_width: f64,
    pub rotation_deg: f64,
    pub sequence: SequenceChoice,
    pub total_time: Option<f64>,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_points: usize,
    #[serde(rename = "L")]
    pub n_modes: usize,
    #[serde(rename = "D")]
    pub half_bandwidth: f64,
    pub n_max: Option<usize>,
    pub state_cap: usize,
    pub delta_std: f64,
    pub delta_mean: f64,
    pub quad_order: usize,
    pub t_final: Option<f64>,
    pub t_start: f64,
    pub theta_max: f64,
    pub theta_points: usize,
    pub normalization: Normalization,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Spectrum,
            engine: EngineTag::Heisenberg,
            engines: vec![EngineTag::Heisenberg, EngineTag::MasterNumeric, EngineTag::MasterClosed],
            delta: 3.0,
            delta2: 0.0,
            gamma: EmitterParams::DEFAULT_GAMMA,
            tau: 0.2,
            n_pulses: 8,
            pulse_width: 0.0,
            rotation_deg: 180.0,
            sequence: SequenceChoice::Pdd,
            total_time: None,
            omega_min: -15.0,
            omega_max: 15.0,
            omega_points: 301,
            n_modes: 151,
            half_bandwidth: 20.0,
            n_max: None,
            state_cap: DEFAULT_CAP,
            delta_std: 0.0,
            delta_mean: 0.0,
            quad_order: EnsembleSpec::DEFAULT_ORDER,
            t_final: None,
            t_start: 5.0,
            theta_max: 1.0,
            theta_points: 201,
            normalization: Normalization::Raw,
            output: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(param: &'static str, v: &str) -> Result<T> {
    v.parse().map_err(|_| invalid(param, format!("cannot parse `{v}`")))
}

impl RunConfig {
    pub fn from_pairs(pairs: &BTreeMap<&'static str, String>) -> Result<Self> {
        let mut c = RunConfig::default();
        for (&k, v) in pairs {
            let v = v.as_str();
            match k {
                "mode" => {
                    c.mode = match v {
                        "spectrum" => Mode::Spectrum,
                        "tpi" => Mode::Tpi,
                        "ensemble" => Mode::Ensemble,
                        "oracle" => Mode::Oracle,
                        "compare" => Mode::Compare,
                        _ => return Err(invalid("mode", format!("unknown mode `{v}`"))),
                    }
                }
                "engine" => c.engine = parse_engine("engine", v)?,
                "engines" => {
                    c.engines = v
                        .split(',')
                        .map(|e| parse_engine("engines", e.trim()))
                        .collect::<Result<_>>()?
                }
                "delta" => c.delta = parse_num(k, v)?,
                "delta2" => c.delta2 = parse_num(k, v)?,
                "gamma" => c.gamma = parse_num(k, v)?,
                "tau" => c.tau = parse_num(k, v)?,
                "n_pulses" => c.n_pulses = parse_num(k, v)?,
                "pulse_width" => c.pulse_width = parse_num(k, v)?,
                "rotation_deg" => c.rotation_deg = parse_num(k, v)?,
                "sequence" => {
                    c.sequence = match v {
                        "none" => SequenceChoice::None,
                        "pdd" => SequenceChoice::Pdd,
                        "cp" => SequenceChoice::Cp,
                        "udd" => SequenceChoice::Udd,
                        _ => return Err(invalid("sequence", format!("unknown sequence `{v}`"))),
                    }
                }
                "total_time" => c.total_time = Some(parse_num(k, v)?),
                "omega_min" => c.omega_min = parse_num(k, v)?,
                "omega_max" => c.omega_max = parse_num(k, v)?,
                "omega_points" => c.omega_points = parse_num(k, v)?,
                "L" => c.n_modes = parse_num(k, v)?,
                "D" => c.half_bandwidth = parse_num(k, v)?,
                "n_max" => c.n_max = Some(parse_num(k, v)?),
                "state_cap" => c.state_cap = parse_num(k, v)?,
                "delta_std" => c.delta_std = parse_num(k, v)?,
                "delta_mean" => c.delta_mean = parse_num(k, v)?,
                "quad_order" => c.quad_order = parse_num(k, v)?,
                "t_final" => c.t_final = Some(parse_num(k, v)?),
                "t_start" => c.t_start = parse_num(k, v)?,
                "theta_max" => c.theta_max = parse_num(k, v)?,
                "theta_points" => c.theta_points = parse_num(k, v)?,
                "normalization" => {
                    c.normalization = match v {
                        "raw" => Normalization::Raw,
                        "unit-peak" => Normalization::UnitPeak,
                        _ => return Err(invalid("normalization", format!("expected raw or unit-peak, got `{v}`"))),
                    }
                }
                "output" => c.output = PathBuf::from(v),
                _ => unreachable!("key table and parser disagree on `{k}`"),
            }
        }
        c.validate()?;
        c.t_final = Some(c.t_final()?);
        Ok(c)
    }

    /// Checks every physical parameter through the owning constructors.
    pub fn validate(&self) -> Result<()> {
        self.emitter(self.delta)?;
        TPIPair::new(self.delta, self.delta2, self.gamma)?;
        self.sequence()?;
        if self.uses_bath() {
            self.bath()?;
        }
        if self.uses_omega_grid() {
            self.omega_grid()?;
        }
        if self.mode == Mode::Ensemble {
            EnsembleSpec::new(self.delta_std, self.quad_order)?.with_mean(self.delta_mean)?;
        }
        let t = self.t_final()?;
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid("t_final", format!("must be positive, got {t}")));
        }
        if self.mode == Mode::Tpi && (self.theta_points < 2 || !(self.theta_max > 0.0)) {
            return Err(invalid("theta_max", "need theta_max > 0 and theta_points >= 2"));
        }
        Ok(())
    }

    fn active_engines(&self) -> Vec<EngineTag> {
        match self.mode {
            Mode::Compare => self.engines.clone(),
            Mode::Oracle => vec![EngineTag::Oracle],
            Mode::Tpi => Vec::new(),
            _ => vec![self.engine],
        }
    }

    fn uses_bath(&self) -> bool {
        self.active_engines()
            .iter()
            .any(|e| matches!(e, EngineTag::Heisenberg | EngineTag::Oracle))
    }

    fn uses_omega_grid(&self) -> bool {
        !self.uses_bath() && self.mode != Mode::Tpi
    }

    pub fn emitter(&self, delta: f64) -> Result<EmitterParams> {
        EmitterParams::new(delta, self.gamma)
    }

    pub fn bath(&self) -> Result<PhotonBathSpec> {
        discretize_bath(self.n_modes, self.half_bandwidth, self.gamma)
    }

    pub fn omega_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::uniform(self.omega_min, self.omega_max, self.omega_points)
    }

    /// Grid shared by every engine of the run.
    pub fn grid(&self) -> Result<FrequencyGrid> {
        if self.uses_bath() {
            Ok(self.bath()?.grid())
        } else {
            self.omega_grid()
        }
    }

    pub fn sequence(&self) -> Result<PulseSequence> {
        let base = match self.sequence {
            SequenceChoice::None => return Ok(PulseSequence::none()),
            SequenceChoice::Pdd => make_pdd(self.tau, self.n_pulses)?,
            SequenceChoice::Cp => make_cp(self.tau, self.n_pulses)?,
            SequenceChoice::Udd => make_udd(self.total_time.unwrap_or(self.n_pulses as f64 * self.tau), self.n_pulses)?,
        };
        let seq = base.with_rotation(self.rotation_deg.to_radians())?;
        if self.pulse_width > 0.0 {
            seq.with_width(self.pulse_width)
        } else if self.pulse_width == 0.0 {
            Ok(seq)
        } else {
            Err(invalid("pulse_width", format!("must be non-negative, got {}", self.pulse_width)))
        }
    }

    /// Observation time: explicit `t_final`, else `total_time`, else one period past the last PDD pulse.
    pub fn t_final(&self) -> Result<f64> {
        Ok(match (self.t_final, self.total_time, self.sequence) {
            (Some(t), _, _) => t,
            (None, Some(t), _) => t,
            (None, None, SequenceChoice::Pdd | SequenceChoice::None) => (self.n_pulses as f64 + 1.0) * self.tau,
            (None, None, _) => self.n_pulses as f64 * self.tau,
        })
    }
}

/// One engine's output with its diagnostics.
#[derive(Debug, Clone)]
pub struct EngineOutput {
    pub spectrum: Spectrum,
    pub error_bound: Option<f64>,
    pub diagnostics: serde_json::Value,
}

/// Runs `engine` at detuning `delta` on `grid`.
pub fn compute_spectrum(cfg: &RunConfig, engine: EngineTag, delta: f64, grid: &FrequencyGrid) -> Result<EngineOutput> {
    let em = cfg.emitter(delta)?;
    let seq = cfg.sequence()?;
    let t = cfg.t_final()?;
    match engine {
        EngineTag::Heisenberg => {
            let bath = cfg.bath()?;
            let spectrum = if seq.is_empty() {
                free_spectrum(&em, &bath, t)?
            } else {
                if !seq.is_ideal_pdd() {
                    return Err(Error::UnsupportedSequence(
                        "the heisenberg engine needs ideal instantaneous pi pulses on a PDD lattice".into(),
                    ));
                }
                let offset = t - seq.len() as f64 * cfg.tau;
                let req = SpectrumRequest::new(em, bath.clone(), cfg.tau, seq.len())?
                    .with_offset(offset)
                    .map_err(|_| invalid("t_final", format!("must lie within one period after the last pulse, got {t}")))?;
                spectrum_heisenberg(&req)?
            };
            Ok(EngineOutput {
                spectrum,
                error_bound: Some(discretization_error_bound(&bath, delta, t)?),
                diagnostics: json!({}),
            })
        }
        EngineTag::MasterNumeric => Ok(EngineOutput {
            spectrum: spectrum_numeric(grid, t, &seq, &em)?,
            error_bound: None,
            diagnostics: json!({}),
        }),
        EngineTag::MasterClosed => {
            if !seq.is_ideal_pdd() {
                return Err(Error::UnsupportedSequence(
                    "the closed form needs ideal instantaneous pi pulses on a PDD lattice".into(),
                ));
            }
            let k = (t / (2.0 * cfg.tau) + 1e-9).floor() as usize;
            Ok(EngineOutput {
                spectrum: spectrum_closed_form(grid, k, cfg.tau, &em, 1.0)?,
                error_bound: None,
                diagnostics: json!({ "K": k }),
            })
        }
        EngineTag::Oracle => {
            let bath = cfg.bath()?;
            let run = oracle::simulate(&em, &bath, &seq, t, cfg.n_max, cfg.state_cap)?;
            Ok(EngineOutput {
                spectrum: run.spectrum,
                error_bound: discretization_error_bound(&bath, delta, t).ok(),
                diagnostics: json!({
                    "dimension": run.dimension,
                    "n_max": run.max_excitations,
                    "norm": run.norm,
                    "leakage": run.leakage,
                    "excited_population": run.excited_population,
                }),
            })
        }
    }
}

fn normalize(s: &Spectrum, how: Normalization) -> Spectrum {
    match how {
        Normalization::Raw => s.clone(),
        Normalization::UnitPeak => s.unit_peak(),
    }
}

/// `omega,intensity` rows with 12 significant digits.
pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("omega,intensity\n");
    for (w, v) in s.omegas().iter().zip(&s.intensity) {
        let _ = writeln!(out, "{w:.11e},{v:.11e}");
    }
    out
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(Error::NumericFailure(_)) => EXIT_NUMERIC,
            CliError::Model(_) => EXIT_INVALID,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn write(path: PathBuf, contents: String) -> std::result::Result<PathBuf, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Executes a resolved configuration and returns the files written.
pub fn execute(cfg: &RunConfig) -> std::result::Result<Vec<PathBuf>, CliError> {
    let started = Instant::now();
    let mut files = Vec::new();
    let mut meta = json!({ "config": cfg });
    match cfg.mode {
        Mode::Spectrum | Mode::Oracle => {
            let engine = if cfg.mode == Mode::Oracle { EngineTag::Oracle } else { cfg.engine };
            let out = compute_spectrum(cfg, engine, cfg.delta, &cfg.grid()?)?;
            files.push(write(with_suffix(&cfg.output, ".csv"), spectrum_csv(&normalize(&out.spectrum, cfg.normalization)))?);
            meta["engine"] = json!(engine.as_str());
            meta["discretization_error_bound"] = json!(out.error_bound);
            meta["diagnostics"] = out.diagnostics;
        }
        Mode::Compare => {
            let grid = cfg.grid()?;
            let mut outputs = Vec::new();
            let mut bounds = serde_json::Map::new();
            for &engine in &cfg.engines {
                let out = compute_spectrum(cfg, engine, cfg.delta, &grid)?;
                let path = with_suffix(&cfg.output, &format!(".{}.csv", engine.as_str()));
                files.push(write(path, spectrum_csv(&normalize(&out.spectrum, cfg.normalization)))?);
                bounds.insert(engine.as_str().into(), json!(out.error_bound));
                outputs.push((engine, out.spectrum.unit_peak()));
            }
            let (first_tag, first) = &outputs[0];
            let mut csv = String::from("omega");
            for (tag, _) in &outputs[1..] {
                let _ = write!(csv, ",{}_minus_{}", tag.as_str(), first_tag.as_str());
            }
            csv.push('\n');
            let diffs = outputs[1..]
                .iter()
                .map(|(_, s)| analysis::difference(s, first))
                .collect::<Result<Vec<_>>>()?;
            for (i, w) in grid.points().iter().enumerate() {
                let _ = write!(csv, "{w:.11e}");
                for d in &diffs {
                    let _ = write!(csv, ",{:.11e}", d[i]);
                }
                csv.push('\n');
            }
            files.push(write(with_suffix(&cfg.output, ".delta.csv"), csv)?);
            meta["engines"] = json!(cfg.engines.iter().map(|e| e.as_str()).collect::<Vec<_>>());
            meta["discretization_error_bound"] = serde_json::Value::Object(bounds);
        }
        Mode::Ensemble => {
            let grid = cfg.grid()?;
            let ens = EnsembleSpec::new(cfg.delta_std, cfg.quad_order)?.with_mean(cfg.delta_mean)?;
            let result = ensemble_spectrum(|d| Ok(compute_spectrum(cfg, cfg.engine, d, &grid)?.spectrum), &ens)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            files.push(write(with_suffix(&cfg.output, ".csv"), spectrum_csv(&normalize(&result.spectrum, cfg.normalization)))?);
            meta["engine"] = json!(cfg.engine.as_str());
            meta["warnings"] = json!(result.warnings);
            if matches!(cfg.engine, EngineTag::Heisenberg | EngineTag::Oracle) {
                let bath = cfg.bath()?;
                let worst = ens
                    .nodes()?
                    .iter()
                    .map(|&(d, _)| discretization_error_bound(&bath, d, cfg.t_final()?))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                meta["discretization_error_bound"] = json!(worst);
            }
        }
        Mode::Tpi => {
            files.push(write(with_suffix(&cfg.output, ".csv"), tpi_csv(cfg)?)?);
            meta["engine"] = json!(cfg.engine.as_str());
        }
    }
    meta["wall_time_s"] = json!(started.elapsed().as_secs_f64());
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    files.push(write(with_suffix(&cfg.output, ".meta.json"), text + "\n")?);
    Ok(files)
}

/// Delay scan at `t_start`: closed forms, or regression with `engine = master-numeric`.
fn tpi_csv(cfg: &RunConfig) -> Result<String> {
    let seq = cfg.sequence()?;
    let pair = TPIPair::new(cfg.delta, cfg.delta2, cfg.gamma)?;
    let em = cfg.emitter(cfg.delta)?;
    let numeric = cfg.engine == EngineTag::MasterNumeric;
    let mut out = String::from("theta,g34,g34_time_averaged,g34_no_pulses,g2\n");
    for i in 0..cfg.theta_points {
        let theta = cfg.theta_max * i as f64 / (cfg.theta_points - 1) as f64;
        let (g, avg, g2) = if numeric {
            (
                g34_numeric(cfg.t_start, theta, &seq, &pair)?,
                g34_time_average_numeric(theta, cfg.t_start, &seq, &pair, 64)?,
                g2_numeric(cfg.t_start, theta, &seq, &em)?,
            )
        } else {
            (
                g34(cfg.t_start, theta, &seq, &pair)?,
                g34_time_averaged(theta, cfg.tau),
                g2_single(theta, &seq, cfg.gamma)?,
            )
        };
        let _ = writeln!(out, "{theta:.11e},{g:.11e},{avg:.11e},{:.11e},{g2:.11e}", g34_no_pulses(theta, &pair));
    }
    Ok(out)
}

/// Names accepted by `recipe`.
pub const RECIPES: &[&str] = &["fig2", "fig3", "fig4a", "fig4b", "robustness", "ddcompare", "ensemble", "totaltime"];

pub type Overrides = Vec<(&'static str, String)>;

/// Stored parameter sets as `(output stem, key/value overrides)`.
pub fn recipe(name: &str) -> Result<Vec<(String, Overrides)>> {
    let kv = |pairs: &[(&'static str, &str)]| pairs.iter().map(|(k, v)| (*k, v.to_string())).collect::<Vec<_>>();
    let compare = "heisenberg,master-numeric";
    let runs = match name {
        "fig2" => vec![
            ("fig2_4".to_string(), kv(&[("mode", "compare"), ("engines", compare), ("tau", "0.2"), ("delta", "5"), ("n_pulses", "4")])),
            ("fig2_8".to_string(), kv(&[("mode", "compare"), ("engines", compare), ("tau", "0.2"), ("delta", "5"), ("n_pulses", "8")])),
        ],
        "fig3" => vec![(
            "fig3".to_string(),
            kv(&[
                ("mode", "compare"),
                ("engines", "heisenberg,master-numeric,master-closed"),
                ("tau", "0.2"),
                ("delta", "3"),
                ("n_pulses", "8"),
            ]),
        )],
        "fig4a" => vec![("fig4a".to_string(), kv(&[("mode", "compare"), ("engines", compare), ("tau", "0.4"), ("delta", "3"), ("n_pulses", "12")]))],
        "fig4b" => vec![("fig4b".to_string(), kv(&[("mode", "compare"), ("engines", compare), ("tau", "0.4"), ("delta", "5"), ("n_pulses", "12")]))],
        "robustness" => {
            let base = [("engine", "master-numeric"), ("tau", "0.2"), ("delta", "3"), ("n_pulses", "6")];
            vec![
                ("robustness_ideal".to_string(), kv(&base)),
                ("robustness_175deg".to_string(), kv(&[&base[..], &[("rotation_deg", "175")]].concat())),
                ("robustness_width".to_string(), kv(&[&base[..], &[("pulse_width", "0.05")]].concat())),
            ]
        }
        "ddcompare" => ["pdd", "cp", "udd"]
            .iter()
            .map(|s| {
                (
                    format!("ddcompare_{s}"),
                    kv(&[
                        ("engine", "master-numeric"),
                        ("sequence", s),
                        ("tau", "0.2"),
                        ("n_pulses", "8"),
                        ("total_time", "1.6"),
                        ("delta", "3"),
                    ]),
                )
            })
            .collect(),
        "ensemble" => vec![
            (
                "ensemble".to_string(),
                kv(&[("mode", "ensemble"), ("engine", "master-numeric"), ("delta_std", "3"), ("tau", "0.2"), ("n_pulses", "8")]),
            ),
            ("ensemble_single".to_string(), kv(&[("engine", "master-numeric"), ("delta", "3"), ("tau", "0.2"), ("n_pulses", "8")])),
        ],
        "totaltime" => vec![
            (
                "totaltime_tau0.2".to_string(),
                kv(&[("engine", "master-numeric"), ("tau", "0.2"), ("n_pulses", "15"), ("total_time", "3.0")]),
            ),
            (
                "totaltime_tau0.3".to_string(),
                kv(&[("engine", "master-numeric"), ("tau", "0.3"), ("n_pulses", "10"), ("total_time", "3.0")]),
            ),
        ],
        _ => {
            return Err(invalid(
                "recipe",
                format!("unknown recipe `{name}`; valid recipes: {}", RECIPES.join(", ")),
            ))
        }
    };
    Ok(runs)
}

/// Parses arguments, runs, prints written files or an error, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(&args),
        Command::Recipe { name, out_dir } => recipe_command(&name, &out_dir),
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_command(args: &RunArgs) -> std::result::Result<Vec<PathBuf>, CliError> {
    let mut pairs = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in args.flags() {
        pairs.insert(k, v.clone());
    }
    execute(&RunConfig::from_pairs(&pairs)?)
}

fn recipe_command(name: &str, out_dir: &Path) -> std::result::Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for (stem, overrides) in recipe(name)? {
        let mut pairs: BTreeMap<&'static str, String> = overrides.into_iter().collect();
        pairs.insert("output", out_dir.join(&stem).to_string_lossy().into_owned());
        files.extend(execute(&RunConfig::from_pairs(&pairs)?)?);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_parsing() {
        let m = parse_config_text("# comment\nmode = compare\n\ntau=0.3 # trailing\nL = 21\n").unwrap();
        assert_eq!(m["mode"], "compare");
        assert_eq!(m["tau"], "0.3");
        assert_eq!(m["L"], "21");
        assert!(parse_config_text("bogus = 1").is_err());
        assert!(parse_config_text("tau 0.3").is_err());
    }

    #[test]
    fn invalid_tau_names_the_key() {
        let pairs: BTreeMap<_, _> = [("tau", "-1".to_string())].into_iter().collect();
        match RunConfig::from_pairs(&pairs) {
            Err(Error::InvalidArgument { param, .. }) => assert_eq!(param, "tau"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_observation_time() {
        let c = RunConfig::default();
        assert!((c.t_final().unwrap() - 1.8).abs() < 1e-12);
    }

    #[test]
    fn unknown_recipe_lists_names() {
        let err = recipe("fig9").unwrap_err().to_string();
        assert!(err.contains("fig4a") && err.contains("totaltime"));
        for name in RECIPES {
            for (_, pairs) in recipe(name).unwrap() {
                RunConfig::from_pairs(&pairs.into_iter().collect()).unwrap();
            }
        }
    }

    #[test]
    fn csv_format() {
        let grid = FrequencyGrid::uniform(-1.0, 1.0, 3).unwrap();
        let s = Spectrum::new(grid, vec![0.5, 1.0, 1.0 / 3.0], 1.0, EngineTag::MasterClosed).unwrap();
        let csv = spectrum_csv(&s);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "omega,intensity");
        assert_eq!(lines[1], "-1.00000000000e0,5.00000000000e-1");
        assert_eq!(lines[3], "1.00000000000e0,3.33333333333e-1");
    }
}
