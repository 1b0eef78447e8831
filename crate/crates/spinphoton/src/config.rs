//! TOML configuration format for devices and schedules.
//!
//! Config files quote linear frequencies (GHz/MHz/kHz) and times in ns;
//! loading converts to internal angular units (rad/ns) by a factor 2π.
//! Unknown keys are rejected. Modes and spin ensembles are tables keyed by
//! label and are ordered by label everywhere (lexicographic), which also
//! fixes the qubit order of two-qubit devices.

use crate::device::{
    CpbCoupling, CpbParams, CpbSpec, DeviceSpec, HoppingLink, ModeSpec, SpinEnsembleSpec,
};
use crate::pulses::{Pulse, PulseSchedule, PulseShape, Stage, StageKind};
use crate::units::{ghz, khz, mhz, to_ghz, to_khz, to_mhz};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const FORMAT_VERSION: u32 = 1;

fn default_format_version() -> u32 {
    FORMAT_VERSION
}

fn default_tuning_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceMeta {
    #[serde(default)]
    name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeCfg {
    fundamental_ghz: f64,
    harmonic: u32,
    #[serde(default = "default_tuning_fraction")]
    tuning_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpinCfg {
    gap_ghz: f64,
    gbar_mhz: f64,
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spin_count: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_single_mhz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingCfg {
    mode: String,
    g0_mhz: f64,
    g1_mhz: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CpbCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gap01_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gap12_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ec_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ej_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ng: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_max: Option<u32>,
    #[serde(default)]
    couplings: Vec<CouplingCfg>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HopCfg {
    modes: (String, String),
    kappa_mhz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseCfg {
    mode: String,
    delta_ghz: f64,
    center_ns: f64,
    duration_ns: f64,
    /// "step" or "ramp".
    #[serde(default = "default_shape")]
    shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ramp_time_ns: Option<f64>,
}

fn default_shape() -> String {
    "step".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageCfg {
    start_ns: f64,
    end_ns: f64,
    /// "free", "hop-swap", "cpb-swap", "cpb-round", "spin-turn".
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modes: Option<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleCfg {
    duration_ns: f64,
    #[serde(default)]
    pulses: Vec<PulseCfg>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    stages: Vec<StageCfg>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

/// Top-level config file: device sections plus an optional `[schedule]`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default = "default_format_version")]
    format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    device: Option<DeviceMeta>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    modes: BTreeMap<String, ModeCfg>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    spins: BTreeMap<String, SpinCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cpb: Option<CpbCfg>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    hops: Vec<HopCfg>,
    /// Per-mode loss rate, linear kHz.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    loss: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schedule: Option<ScheduleCfg>,
}

fn parse_file(text: &str) -> Result<ConfigFile> {
    let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if cfg.format_version != FORMAT_VERSION {
        return Err(Error::Config(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            cfg.format_version
        )));
    }
    Ok(cfg)
}

fn device_from_cfg(cfg: &ConfigFile) -> Result<DeviceSpec> {
    if cfg.modes.is_empty() {
        return Err(Error::Config("no modes defined".into()));
    }
    let meta = cfg.device.clone().unwrap_or_default();
    let modes = cfg
        .modes
        .iter()
        .map(|(label, m)| ModeSpec {
            label: label.clone(),
            fundamental: ghz(m.fundamental_ghz),
            harmonic: m.harmonic,
            tuning_fraction: m.tuning_fraction,
        })
        .collect();
    let spins = cfg
        .spins
        .iter()
        .map(|(label, s)| SpinEnsembleSpec {
            label: label.clone(),
            gap: ghz(s.gap_ghz),
            gbar: mhz(s.gbar_mhz),
            spin_count: s.spin_count,
            g_single: s.g_single_mhz.map(mhz),
            mode: s.mode.clone(),
        })
        .collect();
    let cpb = match &cfg.cpb {
        None => None,
        Some(c) => {
            let params = match (c.gap01_ghz, c.gap12_ghz, c.ec_ghz, c.ej_ghz) {
                (Some(g01), Some(g12), None, None) => {
                    if c.ng.is_some() || c.n_max.is_some() {
                        return Err(Error::Config(
                            "cpb: ng/n_max only apply to the charge-basis form".into(),
                        ));
                    }
                    CpbParams::Gaps { gap01: ghz(g01), gap12: ghz(g12) }
                }
                (None, None, Some(ec), Some(ej)) => CpbParams::Raw {
                    ec: ghz(ec),
                    ej: ghz(ej),
                    ng: c.ng.unwrap_or(0.5),
                    n_max: c.n_max.unwrap_or(20),
                },
                _ => {
                    return Err(Error::Config(
                        "cpb: give either gap01_ghz + gap12_ghz or ec_ghz + ej_ghz".into(),
                    ))
                }
            };
            Some(CpbSpec {
                params,
                couplings: c
                    .couplings
                    .iter()
                    .map(|cc| CpbCoupling {
                        mode: cc.mode.clone(),
                        g0: mhz(cc.g0_mhz),
                        g1: mhz(cc.g1_mhz),
                    })
                    .collect(),
            })
        }
    };
    let hops = cfg
        .hops
        .iter()
        .map(|h| HoppingLink { modes: h.modes.clone(), kappa: mhz(h.kappa_mhz) })
        .collect();
    let loss = cfg.loss.iter().map(|(k, &v)| (k.clone(), khz(v))).collect();
    Ok(DeviceSpec {
        name: meta.name,
        description: meta.description,
        modes,
        spins,
        cpb,
        hops,
        loss,
    })
}

fn device_to_cfg(dev: &DeviceSpec) -> ConfigFile {
    let mut cfg = ConfigFile { format_version: FORMAT_VERSION, ..Default::default() };
    if !dev.name.is_empty() || !dev.description.is_empty() {
        cfg.device = Some(DeviceMeta { name: dev.name.clone(), description: dev.description.clone() });
    }
    for m in &dev.modes {
        cfg.modes.insert(
            m.label.clone(),
            ModeCfg {
                fundamental_ghz: to_ghz(m.fundamental),
                harmonic: m.harmonic,
                tuning_fraction: m.tuning_fraction,
            },
        );
    }
    for s in &dev.spins {
        cfg.spins.insert(
            s.label.clone(),
            SpinCfg {
                gap_ghz: to_ghz(s.gap),
                gbar_mhz: to_mhz(s.gbar),
                mode: s.mode.clone(),
                spin_count: s.spin_count,
                g_single_mhz: s.g_single.map(to_mhz),
            },
        );
    }
    if let Some(c) = &dev.cpb {
        let mut cc = CpbCfg::default();
        match c.params {
            CpbParams::Gaps { gap01, gap12 } => {
                cc.gap01_ghz = Some(to_ghz(gap01));
                cc.gap12_ghz = Some(to_ghz(gap12));
            }
            CpbParams::Raw { ec, ej, ng, n_max } => {
                cc.ec_ghz = Some(to_ghz(ec));
                cc.ej_ghz = Some(to_ghz(ej));
                cc.ng = Some(ng);
                cc.n_max = Some(n_max);
            }
        }
        cc.couplings = c
            .couplings
            .iter()
            .map(|x| CouplingCfg { mode: x.mode.clone(), g0_mhz: to_mhz(x.g0), g1_mhz: to_mhz(x.g1) })
            .collect();
        cfg.cpb = Some(cc);
    }
    cfg.hops = dev
        .hops
        .iter()
        .map(|h| HopCfg { modes: h.modes.clone(), kappa_mhz: to_mhz(h.kappa) })
        .collect();
    cfg.loss = dev.loss.iter().map(|(k, &v)| (k.clone(), to_khz(v))).collect();
    cfg
}

fn schedule_from_cfg(s: &ScheduleCfg) -> Result<PulseSchedule> {
    let mut pulses = Vec::with_capacity(s.pulses.len());
    for p in &s.pulses {
        let shape = match (p.shape.as_str(), p.ramp_time_ns) {
            ("step", None) => PulseShape::Step,
            ("ramp", Some(r)) => PulseShape::Ramp { ramp_time: r },
            ("ramp", None) => {
                return Err(Error::Config("ramp pulse needs ramp_time_ns".into()))
            }
            ("step", Some(_)) => {
                return Err(Error::Config("step pulse must not set ramp_time_ns".into()))
            }
            (other, _) => return Err(Error::Config(format!("unknown pulse shape `{other}`"))),
        };
        pulses.push(Pulse {
            mode: p.mode.clone(),
            delta: ghz(p.delta_ghz),
            center: p.center_ns,
            duration: p.duration_ns,
            shape,
        });
    }
    let mut stages = Vec::with_capacity(s.stages.len());
    for st in &s.stages {
        let kind = match st.kind.as_str() {
            "free" => StageKind::Free,
            "hop-swap" => StageKind::HopSwap {
                modes: st
                    .modes
                    .clone()
                    .ok_or_else(|| Error::Config("hop-swap stage needs `modes`".into()))?,
            },
            "cpb-swap" => StageKind::CpbSwap {
                mode: st
                    .mode
                    .clone()
                    .ok_or_else(|| Error::Config("cpb-swap stage needs `mode`".into()))?,
            },
            "cpb-round" => StageKind::CpbRound {
                mode: st
                    .mode
                    .clone()
                    .ok_or_else(|| Error::Config("cpb-round stage needs `mode`".into()))?,
            },
            "spin-turn" => StageKind::SpinTurn {
                spin: st
                    .spin
                    .clone()
                    .ok_or_else(|| Error::Config("spin-turn stage needs `spin`".into()))?,
                angle: st
                    .angle
                    .ok_or_else(|| Error::Config("spin-turn stage needs `angle`".into()))?,
            },
            other => return Err(Error::Config(format!("unknown stage kind `{other}`"))),
        };
        stages.push(Stage { start: st.start_ns, end: st.end_ns, kind });
    }
    Ok(PulseSchedule {
        pulses,
        stages,
        duration: s.duration_ns,
        warnings: s.warnings.clone(),
    })
}

fn schedule_to_cfg(sched: &PulseSchedule) -> ScheduleCfg {
    let pulses = sched
        .pulses
        .iter()
        .map(|p| {
            let (shape, ramp_time_ns) = match p.shape {
                PulseShape::Step => ("step".to_string(), None),
                PulseShape::Ramp { ramp_time } => ("ramp".to_string(), Some(ramp_time)),
            };
            PulseCfg {
                mode: p.mode.clone(),
                delta_ghz: to_ghz(p.delta),
                center_ns: p.center,
                duration_ns: p.duration,
                shape,
                ramp_time_ns,
            }
        })
        .collect();
    let stages = sched
        .stages
        .iter()
        .map(|s| {
            let mut cfg = StageCfg {
                start_ns: s.start,
                end_ns: s.end,
                kind: String::new(),
                modes: None,
                mode: None,
                spin: None,
                angle: None,
            };
            match &s.kind {
                StageKind::Free => cfg.kind = "free".into(),
                StageKind::HopSwap { modes } => {
                    cfg.kind = "hop-swap".into();
                    cfg.modes = Some(modes.clone());
                }
                StageKind::CpbSwap { mode } => {
                    cfg.kind = "cpb-swap".into();
                    cfg.mode = Some(mode.clone());
                }
                StageKind::CpbRound { mode } => {
                    cfg.kind = "cpb-round".into();
                    cfg.mode = Some(mode.clone());
                }
                StageKind::SpinTurn { spin, angle } => {
                    cfg.kind = "spin-turn".into();
                    cfg.spin = Some(spin.clone());
                    cfg.angle = Some(*angle);
                }
            }
            cfg
        })
        .collect();
    ScheduleCfg {
        duration_ns: sched.duration,
        pulses,
        stages,
        warnings: sched.warnings.clone(),
    }
}

/// Parse a device from config text.
pub fn load_device(text: &str) -> Result<DeviceSpec> {
    device_from_cfg(&parse_file(text)?)
}

/// Serialize a device to config text.
pub fn device_to_toml(dev: &DeviceSpec) -> Result<String> {
    toml::to_string_pretty(&device_to_cfg(dev)).map_err(|e| Error::Config(e.to_string()))
}

/// Parse a `[schedule]` section from config text.
pub fn load_schedule(text: &str) -> Result<PulseSchedule> {
    let cfg = parse_file(text)?;
    let s = cfg
        .schedule
        .as_ref()
        .ok_or_else(|| Error::Config("no [schedule] section".into()))?;
    schedule_from_cfg(s)
}

/// Serialize a schedule to config text (a file with only `[schedule]`).
pub fn schedule_to_toml(sched: &PulseSchedule) -> Result<String> {
    let cfg = ConfigFile {
        format_version: FORMAT_VERSION,
        schedule: Some(schedule_to_cfg(sched)),
        ..Default::default()
    };
    toml::to_string_pretty(&cfg).map_err(|e| Error::Config(e.to_string()))
}

/// Serialize a device together with a schedule.
pub fn device_and_schedule_to_toml(dev: &DeviceSpec, sched: &PulseSchedule) -> Result<String> {
    let mut cfg = device_to_cfg(dev);
    cfg.schedule = Some(schedule_to_cfg(sched));
    toml::to_string_pretty(&cfg).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SAMPLE: &str = r#"
format_version = 1

[device]
name = "sample"

[modes.A]
fundamental_ghz = 22.0
harmonic = 1

[modes.B]
fundamental_ghz = 12.5
harmonic = 2

[spins.A]
gap_ghz = 19.85
gbar_mhz = 60.0
mode = "A"

[cpb]
gap01_ghz = 27.5
gap12_ghz = 40.25

[[cpb.couplings]]
mode = "B"
g0_mhz = 60.0
g1_mhz = 60.0

[[hops]]
modes = ["A", "B"]
kappa_mhz = 25.0

[loss]
A = 10.0
"#;

    #[test]
    fn loads_and_converts_units() {
        let dev = load_device(SAMPLE).unwrap();
        assert_eq!(dev.name, "sample");
        assert_relative_eq!(dev.mode("A").unwrap().idle_freq(), ghz(22.0), max_relative = 1e-15);
        assert_relative_eq!(dev.mode("B").unwrap().idle_freq(), ghz(25.0), max_relative = 1e-15);
        assert_relative_eq!(dev.mode("A").unwrap().tuning_fraction, 0.1, max_relative = 1e-15);
        assert_relative_eq!(dev.spin("A").unwrap().gbar, mhz(60.0), max_relative = 1e-15);
        assert_relative_eq!(dev.hops[0].kappa, mhz(25.0), max_relative = 1e-15);
        assert_relative_eq!(dev.loss_rate("A"), khz(10.0), max_relative = 1e-15);
        let (g01, g12) = dev.cpb.as_ref().unwrap().gaps().unwrap();
        assert_relative_eq!(g01, ghz(27.5), max_relative = 1e-15);
        assert_relative_eq!(g12, ghz(40.25), max_relative = 1e-15);
    }

    #[test]
    fn round_trip_preserves_numbers() {
        let dev = load_device(SAMPLE).unwrap();
        let text = device_to_toml(&dev).unwrap();
        let dev2 = load_device(&text).unwrap();
        assert_relative_eq!(dev2.mode("A").unwrap().fundamental, dev.mode("A").unwrap().fundamental, max_relative = 1e-12);
        assert_relative_eq!(dev2.spin("A").unwrap().gap, dev.spin("A").unwrap().gap, max_relative = 1e-12);
        assert_relative_eq!(dev2.spin("A").unwrap().gbar, dev.spin("A").unwrap().gbar, max_relative = 1e-12);
        assert_relative_eq!(dev2.hops[0].kappa, dev.hops[0].kappa, max_relative = 1e-12);
        assert_relative_eq!(dev2.loss_rate("A"), dev.loss_rate("A"), max_relative = 1e-12);
        assert_eq!(dev2.modes.len(), dev.modes.len());
    }

    #[test]
    fn empty_device_is_an_error() {
        let err = load_device("format_version = 1\n").unwrap_err();
        assert!(err.to_string().contains("no modes defined"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{SAMPLE}\n[extra]\nx = 1\n");
        assert!(load_device(&text).is_err());
        let bad_field = SAMPLE.replace("kappa_mhz", "kapa_mhz");
        assert!(load_device(&bad_field).is_err());
    }

    #[test]
    fn cpb_parameter_forms_are_exclusive() {
        let both = SAMPLE.replace("gap01_ghz = 27.5", "gap01_ghz = 27.5\nec_ghz = 4.9");
        assert!(load_device(&both).is_err());
        let raw = SAMPLE
            .replace("gap01_ghz = 27.5", "ec_ghz = 4.9")
            .replace("gap12_ghz = 40.25", "ej_ghz = 30.38");
        let dev = load_device(&raw).unwrap();
        let (g01, _) = dev.cpb.as_ref().unwrap().gaps().unwrap();
        assert!(g01 > 0.0);
    }

    #[test]
    fn schedule_round_trip() {
        let sched = PulseSchedule {
            pulses: vec![
                Pulse::step("A", ghz(1.5), 0.0, 10.0),
                Pulse {
                    mode: "B".into(),
                    delta: ghz(-0.7),
                    center: 20.0,
                    duration: 8.0,
                    shape: PulseShape::Ramp { ramp_time: 0.4 },
                },
            ],
            stages: vec![
                Stage { start: 0.0, end: 10.0, kind: StageKind::HopSwap { modes: ("A".into(), "B".into()) } },
                Stage { start: 16.0, end: 24.0, kind: StageKind::Free },
            ],
            duration: 30.0,
            warnings: vec!["example warning".into()],
        };
        let text = schedule_to_toml(&sched).unwrap();
        let back = load_schedule(&text).unwrap();
        assert_eq!(back.pulses.len(), 2);
        assert_eq!(back.stages, sched.stages);
        assert_relative_eq!(back.pulses[0].delta, sched.pulses[0].delta, max_relative = 1e-12);
        assert_relative_eq!(back.pulses[1].delta, sched.pulses[1].delta, max_relative = 1e-12);
        assert_relative_eq!(back.duration, 30.0, max_relative = 1e-15);
        assert_eq!(back.warnings, sched.warnings);
    }
}
