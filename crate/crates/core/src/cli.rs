//! Run configurations and output files for the `qram` command-line tool.
//!
//! A run is described by a TOML document. Every section is optional; missing
//! keys fall back to the selected parameter profile. The resolved
//! configuration is echoed next to the data so that a run can be repeated
//! exactly from its own output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{measured_ramp_time, window_clamped};
use crate::model::{estimate, Estimate, PhysicalInputs, RampSchedule, SystemParams};
use crate::propagator::IntegratorConfig;
use crate::protocol::{
    align_memory_phase, averaged_fidelity, calibrate, fidelity_trace, optimize_hold, ramp_sweep, BlochAngles,
    PhaseReference, QuadratureSpec, SweepPoint,
};

/// Key reference printed by `qram --help`.
pub const CONFIG_HELP: &str = "\
CONFIGURATION (TOML; every key optional unless noted)
  mode     = transfer | avg-fidelity | ramp-sweep | estimate-params
             (the positional <MODE> argument takes precedence)
  profile  = table1 (default, units of E_hfs) | rb87-ghz (GHz column)
  angular  = false      read GHz figures as 2*pi*f (also --angular)

  [params]      w_e_minus_down = 100   w_up_minus_down = 1   omega_bs = 0.15
                omega_ex = 0.15   ex_phase = 0   delta1 = 1.5   delta2 = 0
                epsilon = 0   laser = full | co-rotating
                squid_coupling = co-rotating | full
  [schedule]    w_off = 0.25   t_ramp = 1.5   t_hold = pi/(2 Omega)
                t_pre = 0   t_post = 0.1 t_hold(default)
  [integrator]  dt_max = 0.01   steps_per_fast_period = 1024
                tolerance = 1e-8   report_samples = 2000
  [quad]        n_theta = 33 (odd)   n_phi = 64   measure = flat | haar
  [protocol]    phase_reference = lab | aligned
                optimize_hold = false   (transfer, avg-fidelity)
  [angles]      theta = pi   phi = 0     (transfer)
  [sweep]       t_ramp_min, t_ramp_max  (required for ramp-sweep)
                points = 16   spacing = geometric | linear
                calibrate_hold = true   hold optimised at the shortest ramp
  [physical]    n_up = 5e5   n_down = 5e5   omega_single_bs = 1e3 [Hz]
                omega_single_ex = 1e6 [Hz]   loop_current = 1e-6 [A]
                loop_radius = 1e-6 [m]   separation = 25e-6 [m]
                e_hfs_hz = 6.8e9   detuning_ratio = 10
                resonance_detuning_hz = 10.2e9

OUTPUT (in --out, default ./qram-out)
  transfer         trace.csv       t,F,P0,P1,P2,P3,P4,P5,W
  avg-fidelity     avg_trace.csv   t,F_avg,W
  ramp-sweep       sweep.csv       measured_ramp_time,f_avg_final,t_ramp_nominal,f_final,unitarity_defect,status
  estimate-params  estimate.csv    quantity,value,unit
  all modes        summary.json, config.toml (resolved configuration)

EXIT STATUS
  0 success, 1 configuration or usage error, 2 integration failure, 3 I/O failure";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Transfer,
    AvgFidelity,
    RampSweep,
    EstimateParams,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Transfer => "transfer",
            Mode::AvgFidelity => "avg-fidelity",
            Mode::RampSweep => "ramp-sweep",
            Mode::EstimateParams => "estimate-params",
        }
    }
}

/// Named default parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Dimensionless reference set, `E_hfs = 1`.
    #[default]
    Table1,
    /// The same set in GHz for rubidium-87.
    Rb87Ghz,
}

impl Profile {
    pub fn params(self, angular: bool) -> SystemParams {
        match self {
            Profile::Table1 => SystemParams::table1(),
            Profile::Rb87Ghz => SystemParams::rb87_ghz(angular),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolOptions {
    pub phase_reference: PhaseReference,
    /// Tune the plateau before a transfer or averaged run.
    pub optimize_hold: bool,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions { phase_reference: PhaseReference::Lab, optimize_hold: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Geometric,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_ramp_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_ramp_max: Option<f64>,
    pub points: usize,
    pub spacing: Spacing,
    pub calibrate_hold: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { t_ramp_min: None, t_ramp_max: None, points: 16, spacing: Spacing::Geometric, calibrate_hold: true }
    }
}

impl SweepSpec {
    /// Nominal ramp times, strictly increasing.
    pub fn ramps(&self) -> Result<Vec<f64>> {
        let lo = self.t_ramp_min.ok_or_else(|| Error::config("sweep.t_ramp_min", "missing required key for ramp-sweep"))?;
        let hi = self.t_ramp_max.ok_or_else(|| Error::config("sweep.t_ramp_max", "missing required key for ramp-sweep"))?;
        if self.points == 1 {
            return Ok(vec![lo]);
        }
        let n = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                let x = i as f64 / n;
                match self.spacing {
                    Spacing::Geometric => lo * (hi / lo).powf(x),
                    Spacing::Linear => lo + (hi - lo) * x,
                }
            })
            .collect())
    }

    fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::config("sweep.points", "must be >= 1"));
        }
        if let Some(lo) = self.t_ramp_min {
            if !(lo.is_finite() && lo > 0.0) {
                return Err(Error::config("sweep.t_ramp_min", format!("must be finite and > 0, got {lo}")));
            }
        }
        if let (Some(lo), Some(hi)) = (self.t_ramp_min, self.t_ramp_max) {
            let ok = if self.points == 1 { hi >= lo } else { hi > lo };
            if !(ok && hi.is_finite()) {
                return Err(Error::config(
                    "sweep.t_ramp_max",
                    format!("must be finite and exceed t_ramp_min = {lo}, got {hi}"),
                ));
            }
        }
        Ok(())
    }
}

/// Fully resolved description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub profile: Profile,
    pub angular: bool,
    pub params: SystemParams,
    pub schedule: RampSchedule,
    pub integrator: IntegratorConfig,
    pub quad: QuadratureSpec,
    pub protocol: ProtocolOptions,
    pub angles: BlochAngles,
    pub sweep: SweepSpec,
    pub physical: PhysicalInputs,
}

/// Command-line settings that take precedence over the document.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    /// Forces `angular = true` when set.
    pub angular: bool,
}

const SECTIONS: [&str; 8] = ["params", "schedule", "integrator", "quad", "protocol", "angles", "sweep", "physical"];
const TOP_LEVEL: [&str; 3] = ["mode", "profile", "angular"];

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: Overrides) -> Result<RunConfig> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config("<document>", one_line(e.message())))?;
    for key in doc.keys() {
        if !TOP_LEVEL.contains(&key.as_str()) && !SECTIONS.contains(&key.as_str()) {
            return Err(Error::config(
                key.clone(),
                format!("unknown key; expected one of {}", [&TOP_LEVEL[..], &SECTIONS[..]].concat().join(", ")),
            ));
        }
    }

    let mode: Option<Mode> = scalar(&doc, "mode")?;
    let mode = overrides.mode.or(mode).ok_or_else(|| Error::config("mode", "missing required key"))?;
    let profile: Profile = scalar(&doc, "profile")?.unwrap_or_default();
    let angular = overrides.angular || scalar(&doc, "angular")?.unwrap_or(false);

    let params = overlay("params", profile.params(angular), doc.get("params"))?;
    checked("params", params.validate())?;
    let base = RampSchedule::for_params(&params, RampSchedule::DEFAULT_T_RAMP);
    let schedule = overlay("schedule", base, doc.get("schedule"))?;
    checked("schedule", schedule.validate())?;
    let integrator = overlay("integrator", IntegratorConfig::default(), doc.get("integrator"))?;
    checked("integrator", integrator.validate())?;
    let quad = overlay("quad", QuadratureSpec::default(), doc.get("quad"))?;
    checked("quad", quad.validate())?;
    let protocol = overlay("protocol", ProtocolOptions::default(), doc.get("protocol"))?;
    let angles = overlay("angles", BlochAngles::default(), doc.get("angles"))?;
    checked("angles", angles.validate())?;
    let sweep: SweepSpec = overlay("sweep", SweepSpec::default(), doc.get("sweep"))?;
    sweep.validate()?;
    if mode == Mode::RampSweep {
        sweep.ramps()?;
    }
    let physical = overlay("physical", PhysicalInputs::default(), doc.get("physical"))?;
    checked("physical", physical.validate())?;

    Ok(RunConfig { mode, profile, angular, params, schedule, integrator, quad, protocol, angles, sweep, physical })
}

impl RunConfig {
    /// The resolved configuration as a TOML document.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serialises")
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn scalar<T: DeserializeOwned>(doc: &toml::Table, key: &str) -> Result<Option<T>> {
    doc.get(key)
        .map(|v| v.clone().try_into().map_err(|e: toml::de::Error| Error::config(key, one_line(e.message()))))
        .transpose()
}

fn checked(section: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Domain { field, reason } => Error::config(format!("{section}.{field}"), reason),
        other => other,
    })
}

/// Lays the keys of `user` over the serialised `base`, rejecting keys that
/// `base` does not have.
fn overlay<T: Serialize + DeserializeOwned>(section: &str, base: T, user: Option<&toml::Value>) -> Result<T> {
    let Some(user) = user else { return Ok(base) };
    let user = user.as_table().ok_or_else(|| Error::config(section, "expected a table"))?;
    let defaults = toml::Table::try_from(&base).expect("section serialises");
    let known: Vec<&str> = defaults.keys().map(String::as_str).chain(optional_keys(section).iter().copied()).collect();
    let mut merged = defaults.clone();
    for (key, value) in user {
        if !known.contains(&key.as_str()) {
            return Err(Error::config(
                format!("{section}.{key}"),
                format!("unknown key; expected one of {}", known.join(", ")),
            ));
        }
        let mut single = defaults.clone();
        single.insert(key.clone(), value.clone());
        if let Err(e) = toml::Value::Table(single).try_into::<T>() {
            return Err(Error::config(format!("{section}.{key}"), one_line(e.message())));
        }
        merged.insert(key.clone(), value.clone());
    }
    toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| Error::config(section, one_line(e.message())))
}

/// Keys that are absent from a section's defaults but still accepted.
fn optional_keys(section: &str) -> &'static [&'static str] {
    match section {
        "sweep" => &["t_ramp_min", "t_ramp_max"],
        _ => &[],
    }
}

/// Best point of a ramp sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepBest {
    pub t_ramp_nominal: f64,
    pub measured_ramp_time: f64,
    pub f_avg_final: f64,
    pub f_final: f64,
}

/// Scalar results of a run, written as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_avg_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_ramp_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_hold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unitarity_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_norm_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_shift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best: Option<SweepBest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<Estimate>,
    pub files: Vec<String>,
    pub config: RunConfig,
    /// Elapsed time [s]; kept out of the files so that they are reproducible.
    #[serde(skip)]
    pub wall_clock: f64,
}

impl RunSummary {
    fn new(config: &RunConfig) -> Self {
        RunSummary {
            mode: config.mode,
            f_final: None,
            f_avg_final: None,
            measured_ramp_time: None,
            t_hold: None,
            unitarity_defect: None,
            max_norm_drift: None,
            phase_shift: None,
            best: None,
            failed_points: None,
            estimate: None,
            files: Vec::new(),
            config: config.clone(),
            wall_clock: 0.0,
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Executes the run and writes its files into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    let start = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let mut out = Output { dir: out_dir.to_path_buf(), files: Vec::new() };
    let mut summary = RunSummary::new(config);
    match config.mode {
        Mode::Transfer => run_transfer(config, &mut out, &mut summary)?,
        Mode::AvgFidelity => run_average(config, &mut out, &mut summary)?,
        Mode::RampSweep => run_sweep(config, &mut out, &mut summary)?,
        Mode::EstimateParams => run_estimate(config, &mut out, &mut summary)?,
    }
    out.write("config.toml", &config.to_toml())?;
    summary.files = out.files;
    summary.files.push("summary.json".to_string());
    let json = serde_json::to_string_pretty(&summary).expect("summary serialises");
    let path = out.dir.join("summary.json");
    fs::write(&path, json + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    summary.wall_clock = start.elapsed().as_secs_f64();
    Ok(summary)
}

fn tuned_schedule(config: &RunConfig, summary: &mut RunSummary) -> Result<RampSchedule> {
    let schedule = if config.protocol.optimize_hold {
        let best = optimize_hold(&config.params, &config.schedule, &config.integrator)?;
        config.schedule.with_hold(best.t_hold)
    } else {
        config.schedule
    };
    summary.t_hold = Some(schedule.t_hold);
    Ok(schedule)
}

fn run_transfer(config: &RunConfig, out: &mut Output, summary: &mut RunSummary) -> Result<()> {
    let schedule = tuned_schedule(config, summary)?;
    let params = match config.protocol.phase_reference {
        PhaseReference::Lab => config.params,
        PhaseReference::Aligned => align_memory_phase(&config.params, &schedule, &config.integrator)?,
    };
    let result = fidelity_trace(&config.angles, &params, &schedule, &config.integrator)?;
    let mut csv = String::from("t,F,P0,P1,P2,P3,P4,P5,W\n");
    for (i, &t) in result.times.iter().enumerate() {
        let p = &result.populations[i];
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            num(t),
            num(result.fidelity[i]),
            num(p[0]),
            num(p[1]),
            num(p[2]),
            num(p[3]),
            num(p[4]),
            num(p[5]),
            num(result.window[i])
        );
    }
    out.write("trace.csv", &csv)?;
    summary.f_final = Some(result.f_final);
    summary.measured_ramp_time = Some(result.measured_ramp_time);
    summary.max_norm_drift = Some(result.max_norm_drift);
    summary.phase_shift = Some(params.ex_phase - config.params.ex_phase);
    Ok(())
}

fn run_average(config: &RunConfig, out: &mut Output, summary: &mut RunSummary) -> Result<()> {
    let schedule = tuned_schedule(config, summary)?;
    let avg = averaged_fidelity(
        &config.params,
        &schedule,
        &config.integrator,
        &config.quad,
        config.protocol.phase_reference,
    )?;
    let mut csv = String::from("t,F_avg,W\n");
    for (&t, &f) in avg.times.iter().zip(&avg.f_avg) {
        let _ = writeln!(csv, "{},{},{}", num(t), num(f), num(window_clamped(t, &schedule)));
    }
    out.write("avg_trace.csv", &csv)?;
    summary.f_final = Some(avg.f_final);
    summary.f_avg_final = Some(avg.f_avg_final);
    summary.measured_ramp_time = Some(avg.measured_ramp_time);
    summary.unitarity_defect = Some(avg.unitarity_defect);
    summary.phase_shift = Some(avg.phase_shift);
    Ok(())
}

fn run_sweep(config: &RunConfig, out: &mut Output, summary: &mut RunSummary) -> Result<()> {
    let ramps = config.sweep.ramps()?;
    let reference = config.protocol.phase_reference;
    let (points, t_hold): (Vec<SweepPoint>, f64) = if config.sweep.calibrate_hold {
        let cal = calibrate(&config.params, &config.schedule, &ramps, &config.integrator, &config.quad, reference)?;
        (cal.sweep, cal.hold.t_hold)
    } else {
        let pts = ramp_sweep(&config.params, &config.schedule, &ramps, &config.integrator, &config.quad, reference)?;
        (pts, config.schedule.t_hold)
    };

    let mut csv = String::from("measured_ramp_time,f_avg_final,t_ramp_nominal,f_final,unitarity_defect,status\n");
    let mut best: Option<SweepBest> = None;
    let mut failed = 0;
    let mut defect: f64 = 0.0;
    for p in &points {
        match &p.outcome {
            Ok(o) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},ok",
                    num(o.measured_ramp_time),
                    num(o.f_avg_final),
                    num(p.t_ramp),
                    num(o.f_final),
                    num(o.unitarity_defect)
                );
                defect = defect.max(o.unitarity_defect);
                if best.is_none_or(|b| o.f_avg_final > b.f_avg_final) {
                    best = Some(SweepBest {
                        t_ramp_nominal: p.t_ramp,
                        measured_ramp_time: o.measured_ramp_time,
                        f_avg_final: o.f_avg_final,
                        f_final: o.f_final,
                    });
                }
            }
            Err(e) => {
                failed += 1;
                let measured = measured_ramp_time(&config.schedule.with_ramp(p.t_ramp)).unwrap_or(f64::NAN);
                let _ = writeln!(csv, "{},NaN,{},NaN,NaN,{}", num(measured), num(p.t_ramp), e.kind());
            }
        }
    }
    out.write("sweep.csv", &csv)?;
    summary.t_hold = Some(t_hold);
    summary.failed_points = Some(failed);
    summary.unitarity_defect = best.map(|_| defect);
    if let Some(b) = best {
        summary.f_final = Some(b.f_final);
        summary.f_avg_final = Some(b.f_avg_final);
        summary.measured_ramp_time = Some(b.measured_ramp_time);
    }
    summary.best = best;
    Ok(())
}

fn run_estimate(config: &RunConfig, out: &mut Output, summary: &mut RunSummary) -> Result<()> {
    let e = estimate(&config.physical, config.angular)?;
    let rate = if e.angular { "rad/s" } else { "1/s" };
    let rows = [
        ("omega_bs", e.omega_bs, rate),
        ("omega_ex", e.omega_ex, rate),
        ("delta1", e.delta1, rate),
        ("omega_two_photon", e.omega_two_photon, rate),
        ("transfer_time", e.transfer_time, "s"),
        ("squid_splitting", e.squid_splitting_hz, "Hz"),
        ("loop_field", e.loop_field, "T"),
        ("magnetic_rabi", e.magnetic_rabi, "rad/s"),
    ];
    let mut csv = String::from("quantity,value,unit\n");
    for (name, value, unit) in rows {
        let _ = writeln!(csv, "{name},{},{unit}", num(value));
    }
    out.write("estimate.csv", &csv)?;
    summary.estimate = Some(e);
    Ok(())
}
