//! Detuning pulses, schedules, the analytic phase ledger, and the gate
//! compilers.
//!
//! All gates are driven by shifting resonator frequencies for a while and
//! shifting them back. A schedule is a list of such pulses plus stage
//! annotations that record which two-level transfer each window implements;
//! the annotations are what lets the ledger track phases analytically.

use crate::device::DeviceSpec;
use crate::hilbert::{logical_basis_state, BasisState};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

/// Pulses switch either instantaneously or along a linear ramp of the given
/// duration at each edge (trapezoid profile inside the window).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PulseShape {
    Step,
    Ramp { ramp_time: f64 },
}

/// One detuning pulse on one mode. `delta` is the plateau amplitude in
/// rad/ns, times are ns; the window is `[center − duration/2, center +
/// duration/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub mode: String,
    pub delta: f64,
    pub center: f64,
    pub duration: f64,
    pub shape: PulseShape,
}

impl Pulse {
    /// Step pulse covering `[t0, t1]`.
    pub fn step(mode: &str, delta: f64, t0: f64, t1: f64) -> Pulse {
        Pulse {
            mode: mode.to_string(),
            delta,
            center: 0.5 * (t0 + t1),
            duration: t1 - t0,
            shape: PulseShape::Step,
        }
    }

    pub fn start(&self) -> f64 {
        self.center - 0.5 * self.duration
    }

    pub fn end(&self) -> f64 {
        self.center + 0.5 * self.duration
    }

    /// Detuning contribution at time `t` (rad/ns).
    pub fn value_at(&self, t: f64) -> f64 {
        let (a, b) = (self.start(), self.end());
        if t < a || t >= b {
            return 0.0;
        }
        match self.shape {
            PulseShape::Step => self.delta,
            PulseShape::Ramp { ramp_time } => {
                let r = ramp_time.min(0.5 * self.duration);
                if t < a + r {
                    self.delta * (t - a) / r
                } else if t > b - r {
                    self.delta * (b - t) / r
                } else {
                    self.delta
                }
            }
        }
    }

    /// Time points where the profile changes character (window and plateau
    /// edges).
    fn breakpoints(&self) -> Vec<f64> {
        match self.shape {
            PulseShape::Step => vec![self.start(), self.end()],
            PulseShape::Ramp { ramp_time } => {
                let r = ramp_time.min(0.5 * self.duration);
                vec![self.start(), self.start() + r, self.end() - r, self.end()]
            }
        }
    }
}

/// What a stage window implements, for analytic phase tracking.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StageKind {
    /// Pure off-resonant phase accumulation (Rz and delays).
    Free,
    /// Photon π-transfer between two hop-coupled modes.
    HopSwap { modes: (String, String) },
    /// CPB π-pulse: photon in `mode` ↔ CPB level 1.
    CpbSwap { mode: String },
    /// CPB 2π-pulse on `mode` driving level 1 ↔ 2 (phase −1, no transfer).
    CpbRound { mode: String },
    /// Resonant spin-photon rotation by `angle` on one qubit.
    SpinTurn { spin: String, angle: f64 },
}

/// Annotated time window of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub start: f64,
    pub end: f64,
    pub kind: StageKind,
}

/// A timed set of detuning pulses; the sole control knob of the device.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSchedule {
    pub pulses: Vec<Pulse>,
    pub stages: Vec<Stage>,
    /// Total duration, >= end of the last pulse.
    pub duration: f64,
    /// Recorded compile-time warnings (e.g. tuning-bound violations).
    pub warnings: Vec<String>,
}

impl PulseSchedule {
    pub fn empty() -> PulseSchedule {
        PulseSchedule::default()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    /// All pulses are step-shaped (analytic ledger / piecewise-exact valid).
    pub fn is_step(&self) -> bool {
        self.pulses.iter().all(|p| p.shape == PulseShape::Step)
    }

    /// Total detuning on a mode at time `t` (overlapping pulses sum).
    pub fn detuning_at(&self, mode: &str, t: f64) -> f64 {
        self.pulses.iter().filter(|p| p.mode == mode).map(|p| p.value_at(t)).sum()
    }

    /// Detunings of all pulsed modes at time `t`.
    pub fn detunings_at(&self, t: f64) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for p in &self.pulses {
            *out.entry(p.mode.clone()).or_insert(0.0) += p.value_at(t);
        }
        out.retain(|_, v| *v != 0.0);
        out
    }

    /// Sorted unique time points at which H(t) changes character, including
    /// 0 and the total duration.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = vec![0.0, self.duration];
        for p in &self.pulses {
            ts.extend(p.breakpoints());
        }
        for s in &self.stages {
            ts.push(s.start);
            ts.push(s.end);
        }
        ts.retain(|t| *t >= -1e-12 && *t <= self.duration + 1e-12);
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        ts
    }

    /// Append another schedule after `gap` ns of free evolution.
    pub fn append(&mut self, other: &PulseSchedule, gap: f64) {
        let shift = self.duration + gap;
        for p in &other.pulses {
            let mut p = p.clone();
            p.center += shift;
            self.pulses.push(p);
        }
        for s in &other.stages {
            let mut s = s.clone();
            s.start += shift;
            s.end += shift;
            self.stages.push(s);
        }
        self.duration = shift + other.duration;
        self.warnings.extend(other.warnings.iter().cloned());
    }

    /// Check every pulse against the device tuning bounds and ramp-speed
    /// limits; violations are returned (and should be recorded as warnings).
    pub fn tuning_warnings(&self, dev: &DeviceSpec) -> Vec<String> {
        let mut out = Vec::new();
        for p in &self.pulses {
            match dev.mode(&p.mode) {
                Err(_) => out.push(format!("pulse targets unknown mode `{}`", p.mode)),
                Ok(m) => {
                    if p.delta.abs() > m.tuning_bound() * (1.0 + 1e-12) {
                        out.push(format!(
                            "pulse on `{}` exceeds tuning bound: |δ| = {:.4} > {:.4} rad/ns",
                            p.mode,
                            p.delta.abs(),
                            m.tuning_bound()
                        ));
                    }
                    if let PulseShape::Ramp { ramp_time } = p.shape {
                        if ramp_time * m.idle_freq() < 50.0 {
                            out.push(format!(
                                "ramp on `{}` too fast: t_r·ω_c(0) = {:.1} < 50",
                                p.mode,
                                ramp_time * m.idle_freq()
                            ));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Reduce an angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

// ---------------------------------------------------------------------------
// Analytic phase ledger
// ---------------------------------------------------------------------------

/// Accumulated interaction-picture phases of named states under a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLedger {
    pub phases: BTreeMap<String, f64>,
}

impl PhaseLedger {
    /// Phase of a labeled state, reduced to (−π, π].
    pub fn phase(&self, label: &str) -> Result<f64> {
        self.phases
            .get(label)
            .map(|&p| wrap_angle(p))
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }
}

/// Diagonal energy of a product state at given detunings (rad/ns).
fn state_energy(
    dev: &DeviceSpec,
    cpb_gaps: Option<(f64, f64)>,
    s: &BasisState,
    det: &BTreeMap<String, f64>,
) -> f64 {
    let mut e = 0.0;
    for (mi, m) in dev.modes.iter().enumerate() {
        if s.photons[mi] > 0 {
            e += s.photons[mi] as f64 * (m.idle_freq() + det.get(&m.label).copied().unwrap_or(0.0));
        }
    }
    for (si, sp) in dev.spins.iter().enumerate() {
        e += s.spins[si] as f64 * sp.gap;
    }
    if let Some((g01, g12)) = cpb_gaps {
        e += match s.cpb {
            0 => 0.0,
            1 => g01,
            _ => g01 + g12,
        };
    }
    e
}

/// Analytic interaction-picture phase of one product state under a step
/// schedule: piecewise free-evolution phases from the diagonal energies,
/// plus the exact two-level transfer phase at the end of each annotated
/// stage. Errors if the state does not return to itself, or if a stage is
/// not a clean two-level process for this state.
pub fn ledger_phase(dev: &DeviceSpec, sched: &PulseSchedule, initial: &BasisState) -> Result<f64> {
    if !sched.is_step() {
        return Err(Error::InvalidArgument(
            "analytic phase ledger requires step-shaped pulses".into(),
        ));
    }
    let cpb_gaps = match &dev.cpb {
        Some(c) => Some(c.gaps()?),
        None => None,
    };
    let mode_pos = |label: &str| -> Result<usize> {
        dev.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    };
    let events = sched.breakpoints();
    let mut cur = initial.clone();
    let mut phase = 0.0;
    for w in events.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-12 {
            continue;
        }
        let det = sched.detunings_at(0.5 * (a + b));
        phase -= state_energy(dev, cpb_gaps, &cur, &det) * (b - a);
        // Apply transfers of stages ending exactly at b, in annotation order.
        for st in &sched.stages {
            if (st.end - b).abs() > 1e-9 {
                continue;
            }
            match &st.kind {
                StageKind::Free => {}
                StageKind::HopSwap { modes } => {
                    let (i1, i2) = (mode_pos(&modes.0)?, mode_pos(&modes.1)?);
                    match (cur.photons[i1], cur.photons[i2]) {
                        (1, 0) => {
                            cur.photons[i1] = 0;
                            cur.photons[i2] = 1;
                            phase += PI / 2.0;
                        }
                        (0, 1) => {
                            cur.photons[i2] = 0;
                            cur.photons[i1] = 1;
                            phase += PI / 2.0;
                        }
                        (0, 0) => {}
                        _ => {
                            return Err(Error::Compile(format!(
                                "hop stage {}–{} is not a two-level process for this state",
                                modes.0, modes.1
                            )))
                        }
                    }
                }
                StageKind::CpbSwap { mode } => {
                    let i = mode_pos(mode)?;
                    match (cur.photons[i], cur.cpb) {
                        (1, 0) => {
                            cur.photons[i] = 0;
                            cur.cpb = 1;
                            phase -= PI / 2.0;
                        }
                        (0, 1) => {
                            cur.photons[i] = 1;
                            cur.cpb = 0;
                            phase -= PI / 2.0;
                        }
                        (0, 0) | (0, 2) => {}
                        _ => {
                            return Err(Error::Compile(format!(
                                "CPB π-stage on `{mode}` is not a two-level process for this state"
                            )))
                        }
                    }
                }
                StageKind::CpbRound { mode } => {
                    let i = mode_pos(mode)?;
                    if (cur.photons[i] == 1 && cur.cpb == 1) || (cur.photons[i] == 0 && cur.cpb == 2)
                    {
                        phase += PI;
                    }
                }
                StageKind::SpinTurn { spin, angle } => {
                    let si = dev
                        .spins
                        .iter()
                        .position(|s| &s.label == spin)
                        .ok_or_else(|| Error::UnknownLabel(spin.clone()))?;
                    let mi = mode_pos(&dev.spins[si].mode)?;
                    let half_turns = angle / PI;
                    if (half_turns - half_turns.round()).abs() > 1e-9 {
                        return Err(Error::Compile(
                            "ledger supports spin rotations only in multiples of π".into(),
                        ));
                    }
                    let n = half_turns.round() as i64;
                    if n.rem_euclid(2) == 1 {
                        match (cur.photons[mi], cur.spins[si]) {
                            (1, 0) => {
                                cur.photons[mi] = 0;
                                cur.spins[si] = 1;
                                phase -= PI / 2.0;
                            }
                            (0, 1) => {
                                cur.photons[mi] = 1;
                                cur.spins[si] = 0;
                                phase -= PI / 2.0;
                            }
                            (0, 0) => {}
                            _ => {
                                return Err(Error::Compile(format!(
                                    "spin π-stage on `{spin}` is not a two-level process"
                                )))
                            }
                        }
                    } else if n.rem_euclid(4) == 2
                        && (cur.photons[mi] + cur.spins[si]) == 1
                    {
                        phase += PI; // full Rabi loop
                    }
                }
            }
        }
    }
    if cur != *initial {
        return Err(Error::Compile(format!(
            "state does not return to itself under the schedule ({cur:?} vs {initial:?})"
        )));
    }
    // Interaction-picture convention: remove the idle free-evolution phase.
    phase += state_energy(dev, cpb_gaps, initial, &BTreeMap::new()) * sched.duration;
    Ok(phase)
}

/// Ledger over a set of named states (see [`logical_basis_state`] for the
/// label forms).
pub fn phase_ledger(dev: &DeviceSpec, sched: &PulseSchedule, labels: &[&str]) -> Result<PhaseLedger> {
    let mut phases = BTreeMap::new();
    for &label in labels {
        let s = logical_basis_state(dev, label)?;
        phases.insert(label.to_string(), ledger_phase(dev, sched, &s)?);
    }
    Ok(PhaseLedger { phases })
}

// ---------------------------------------------------------------------------
// Gate compilers
// ---------------------------------------------------------------------------

fn qubit_mode<'d>(dev: &'d DeviceSpec, qubit: &str) -> Result<(&'d crate::device::SpinEnsembleSpec, &'d crate::device::ModeSpec)> {
    let spin = dev.spin(qubit)?;
    let mode = dev.mode(&spin.mode)?;
    Ok((spin, mode))
}

/// Record proximity of the shifted mode frequency to any transition it
/// couples to (a nominally off-resonant pulse drifting onto a resonance).
fn resonance_warnings(dev: &DeviceSpec, mode_label: &str, delta: f64) -> Vec<String> {
    let mut out = Vec::new();
    let Ok(mode) = dev.mode(mode_label) else { return out };
    let shifted = mode.idle_freq() + delta;
    if let Some(sp) = dev.spin_on_mode(mode_label) {
        if (shifted - sp.gap).abs() < 10.0 * sp.gbar {
            out.push(format!(
                "pulse on `{mode_label}` comes within 10·Ḡ of the spin gap of `{}`",
                sp.label
            ));
        }
    }
    if let Some(cpb) = &dev.cpb {
        if let Some(c) = cpb.couplings.iter().find(|c| c.mode == mode_label) {
            if let Ok((g01, g12)) = cpb.gaps() {
                if c.g0 > 0.0 && (shifted - g01).abs() < 10.0 * c.g0 {
                    out.push(format!("pulse on `{mode_label}` comes within 10·G of the CPB 0↔1 gap"));
                }
                if c.g1 > 0.0 && (shifted - g12).abs() < 10.0 * c.g1 {
                    out.push(format!("pulse on `{mode_label}` comes within 10·G of the CPB 1↔2 gap"));
                }
            }
        }
    }
    out
}

/// Compile a phase gate diag(1, e^{iφ}) on one qubit (|1⟩ = photon in the
/// qubit's mode): a single off-resonant step pulse of area δτ = −φ, since a
/// detuning δ adds energy δ to the photon level and hence phase e^{−iδτ}.
/// `delta` fixes the pulse magnitude; default is half the tuning bound.
pub fn compile_rz(dev: &DeviceSpec, qubit: &str, phi: f64, delta: Option<f64>) -> Result<PulseSchedule> {
    let (_, mode) = qubit_mode(dev, qubit)?;
    let phi = phi.rem_euclid(TAU);
    if phi == 0.0 {
        return Ok(PulseSchedule::empty());
    }
    let bound = mode.tuning_bound();
    let mag = match delta {
        Some(d) => d.abs(),
        None => 0.5 * bound,
    };
    if mag <= 0.0 || mag > bound * (1.0 + 1e-12) {
        return Err(Error::Compile(format!(
            "phase-gate detuning {:.4} rad/ns outside feasible interval (0, {:.4}] for mode `{}`",
            mag, bound, mode.label
        )));
    }
    let tau = phi / mag;
    let mut sched = PulseSchedule {
        pulses: vec![Pulse::step(&mode.label, -mag, 0.0, tau)],
        stages: vec![Stage { start: 0.0, end: tau, kind: StageKind::Free }],
        duration: tau,
        warnings: Vec::new(),
    };
    sched.warnings.extend(resonance_warnings(dev, &mode.label, -mag));
    Ok(sched)
}

/// Compile a resonant rotation of angle φ on one qubit: shift the mode onto
/// the spin gap for τ = φ/Ḡ, then compensate the photon's explicit detuning
/// phase with a phase gate so the result is the bare Rabi rotation.
pub fn compile_ry(dev: &DeviceSpec, qubit: &str, phi: f64) -> Result<PulseSchedule> {
    let (spin, mode) = qubit_mode(dev, qubit)?;
    if !(0.0..=TAU + 1e-12).contains(&phi) {
        return Err(Error::InvalidArgument(format!("rotation angle {phi} outside [0, 2π]")));
    }
    if phi == 0.0 {
        return Ok(PulseSchedule::empty());
    }
    let delta = spin.gap - mode.idle_freq();
    if delta.abs() > mode.tuning_bound() * (1.0 + 1e-12) {
        return Err(Error::Compile(format!(
            "resonance with spin `{}` needs |δ| = {:.4} rad/ns, beyond the tuning bound {:.4} of mode `{}`",
            spin.label,
            delta.abs(),
            mode.tuning_bound(),
            mode.label
        )));
    }
    let tau = phi / spin.gbar;
    let mut sched = PulseSchedule {
        pulses: vec![Pulse::step(&mode.label, delta, 0.0, tau)],
        stages: vec![Stage {
            start: 0.0,
            end: tau,
            kind: StageKind::SpinTurn { spin: spin.label.clone(), angle: phi },
        }],
        duration: tau,
        warnings: Vec::new(),
    };
    // The explicit diagonal contributes e^{−iδτ} on the photon level; undo
    // it with diag(1, e^{+iδτ}).
    let correction = (delta * tau).rem_euclid(TAU);
    if correction != 0.0 {
        let rz = compile_rz(dev, qubit, correction, None)?;
        sched.append(&rz, 0.0);
    }
    Ok(sched)
}

/// Which controlled-phase construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CzVariant {
    /// Photons hop into a shared coupler cavity holding the CPB (five
    /// stages).
    Scalable,
    /// Qubit modes couple to the CPB directly (three stages).
    SingleCavity,
}

impl CzVariant {
    pub fn infer(dev: &DeviceSpec) -> CzVariant {
        if dev.hops.is_empty() {
            CzVariant::SingleCavity
        } else {
            CzVariant::Scalable
        }
    }
}

/// Detunings bringing two modes into mutual resonance: shift the first mode
/// the whole way if its bound allows, otherwise split the shift evenly so
/// both meet in the middle.
fn bridge_pair(dev: &DeviceSpec, m1: &str, m2: &str, stage: &str) -> Result<(f64, f64)> {
    let a = dev.mode(m1)?;
    let b = dev.mode(m2)?;
    let d = b.idle_freq() - a.idle_freq();
    if d.abs() <= a.tuning_bound() * (1.0 + 1e-12) {
        return Ok((d, 0.0));
    }
    let half = 0.5 * d;
    if half.abs() <= a.tuning_bound() * (1.0 + 1e-12) && half.abs() <= b.tuning_bound() * (1.0 + 1e-12) {
        return Ok((half, -half));
    }
    Err(Error::Compile(format!(
        "{stage}: resonance {m1}–{m2} needs a shift of {:.4} rad/ns, infeasible even split symmetrically",
        d.abs()
    )))
}

/// Detuning moving one mode onto an absolute target frequency.
fn bridge_to(dev: &DeviceSpec, m: &str, target: f64, stage: &str) -> Result<f64> {
    let a = dev.mode(m)?;
    let d = target - a.idle_freq();
    if d.abs() <= a.tuning_bound() * (1.0 + 1e-12) {
        Ok(d)
    } else {
        Err(Error::Compile(format!(
            "{stage}: moving `{m}` by {:.4} rad/ns exceeds its tuning bound {:.4}",
            d.abs(),
            a.tuning_bound()
        )))
    }
}

/// Structural roles in a CZ compilation.
pub(crate) struct CzLayout {
    /// Qubit-side mode of each qubit, in spin declaration order.
    qubit_modes: [String; 2],
    /// CPB-coupled mode used for the π-stages (0↔1) and its rate G⁰.
    pi_mode: String,
    g_pi: f64,
    /// CPB-coupled mode used for the 2π-stage (1↔2) and its rate G¹.
    round_mode: String,
    g_round: f64,
    /// CPB gaps (ω01, ω12).
    gaps: (f64, f64),
    /// Hop rate per qubit (scalable only).
    kappas: Option<[f64; 2]>,
}

pub(crate) fn cz_layout(dev: &DeviceSpec, variant: CzVariant) -> Result<CzLayout> {
    if dev.spins.len() != 2 {
        return Err(Error::Compile("controlled-phase gate needs exactly two qubits".into()));
    }
    let cpb = dev
        .cpb
        .as_ref()
        .ok_or_else(|| Error::Compile("controlled-phase gate needs a CPB".into()))?;
    let gaps = cpb.gaps()?;
    let qubit_modes = [dev.spins[0].mode.clone(), dev.spins[1].mode.clone()];
    match variant {
        CzVariant::Scalable => {
            // Each qubit mode hops into a CPB-coupled coupler mode.
            let mut coupler = Vec::new();
            let mut kappas = Vec::new();
            for qm in &qubit_modes {
                let hop = dev
                    .hops
                    .iter()
                    .find(|h| h.modes.0 == *qm || h.modes.1 == *qm)
                    .ok_or_else(|| {
                        Error::Compile(format!("qubit mode `{qm}` has no hopping link"))
                    })?;
                let other = if hop.modes.0 == *qm { &hop.modes.1 } else { &hop.modes.0 };
                coupler.push(other.clone());
                kappas.push(hop.kappa);
            }
            let find = |mode: &str| {
                cpb.couplings
                    .iter()
                    .find(|c| c.mode == mode)
                    .ok_or_else(|| Error::Compile(format!("mode `{mode}` is not CPB-coupled")))
            };
            let c0 = find(&coupler[0])?;
            let c1 = find(&coupler[1])?;
            if c0.g0 <= 0.0 || c1.g1 <= 0.0 {
                return Err(Error::Compile(
                    "CZ needs G⁰ > 0 on the first coupler and G¹ > 0 on the second".into(),
                ));
            }
            Ok(CzLayout {
                qubit_modes,
                pi_mode: coupler[0].clone(),
                g_pi: c0.g0,
                round_mode: coupler[1].clone(),
                g_round: c1.g1,
                gaps,
                kappas: Some([kappas[0], kappas[1]]),
            })
        }
        CzVariant::SingleCavity => {
            let find = |mode: &str| {
                cpb.couplings
                    .iter()
                    .find(|c| c.mode == mode)
                    .ok_or_else(|| Error::Compile(format!("mode `{mode}` is not CPB-coupled")))
            };
            let c0 = find(&qubit_modes[0])?;
            let c1 = find(&qubit_modes[1])?;
            if c0.g0 <= 0.0 || c1.g1 <= 0.0 {
                return Err(Error::Compile(
                    "CZ needs G⁰ > 0 on the first qubit mode and G¹ > 0 on the second".into(),
                ));
            }
            Ok(CzLayout {
                qubit_modes: qubit_modes.clone(),
                pi_mode: qubit_modes[0].clone(),
                g_pi: c0.g0,
                round_mode: qubit_modes[1].clone(),
                g_round: c1.g1,
                gaps,
                kappas: None,
            })
        }
    }
}

/// Assemble the scalable five-stage schedule for given inter-stage delays.
pub(crate) fn scalable_schedule(
    dev: &DeviceSpec,
    lay: &CzLayout,
    gaps: &[f64; 4],
) -> Result<PulseSchedule> {
    let kap = lay.kappas.expect("scalable layout has hop rates");
    // Simultaneous hop transfers: stage duration is set per pair, the
    // window ends when the slower pair finishes.
    let t_hop = [PI / (2.0 * kap[0]), PI / (2.0 * kap[1])];
    if (t_hop[0] - t_hop[1]).abs() > 1e-9 {
        return Err(Error::Compile(
            "hop rates of the two qubit pairs must match for simultaneous transfer".into(),
        ));
    }
    let t_hop = t_hop[0];
    let t_pi = PI / lay.g_pi;
    let t_round = TAU / lay.g_round;
    let (da1, db1) = bridge_pair(dev, &lay.qubit_modes[0], &lay.pi_mode, "hop stage (first pair)")?;
    let (da2, db2) =
        bridge_pair(dev, &lay.qubit_modes[1], &lay.round_mode, "hop stage (second pair)")?;
    let d_pi = bridge_to(dev, &lay.pi_mode, lay.gaps.0, "CPB π-stage")?;
    let d_round = bridge_to(dev, &lay.round_mode, lay.gaps.1, "CPB 2π-stage")?;

    let mut pulses = Vec::new();
    let mut stages = Vec::new();
    let mut t = 0.0;
    let hop_stage = |t0: f64, pulses: &mut Vec<Pulse>, stages: &mut Vec<Stage>| {
        let t1 = t0 + t_hop;
        for (mode, d) in [
            (&lay.qubit_modes[0], da1),
            (&lay.pi_mode, db1),
            (&lay.qubit_modes[1], da2),
            (&lay.round_mode, db2),
        ] {
            if d != 0.0 {
                pulses.push(Pulse::step(mode, d, t0, t1));
            }
        }
        stages.push(Stage {
            start: t0,
            end: t1,
            kind: StageKind::HopSwap {
                modes: (lay.qubit_modes[0].clone(), lay.pi_mode.clone()),
            },
        });
        stages.push(Stage {
            start: t0,
            end: t1,
            kind: StageKind::HopSwap {
                modes: (lay.qubit_modes[1].clone(), lay.round_mode.clone()),
            },
        });
        t1
    };
    let pi_stage = |t0: f64, pulses: &mut Vec<Pulse>, stages: &mut Vec<Stage>| {
        let t1 = t0 + t_pi;
        pulses.push(Pulse::step(&lay.pi_mode, d_pi, t0, t1));
        stages.push(Stage { start: t0, end: t1, kind: StageKind::CpbSwap { mode: lay.pi_mode.clone() } });
        t1
    };
    t = hop_stage(t, &mut pulses, &mut stages) + gaps[0];
    t = pi_stage(t, &mut pulses, &mut stages) + gaps[1];
    {
        let t1 = t + t_round;
        pulses.push(Pulse::step(&lay.round_mode, d_round, t, t1));
        stages.push(Stage {
            start: t,
            end: t1,
            kind: StageKind::CpbRound { mode: lay.round_mode.clone() },
        });
        t = t1 + gaps[2];
    }
    t = pi_stage(t, &mut pulses, &mut stages) + gaps[3];
    t = hop_stage(t, &mut pulses, &mut stages);
    let mut sched = PulseSchedule { pulses, stages, duration: t, warnings: Vec::new() };
    let w = sched.tuning_warnings(dev);
    sched.warnings = w;
    Ok(sched)
}

/// Assemble the single-cavity three-stage schedule for given delays.
pub(crate) fn single_cavity_schedule(
    dev: &DeviceSpec,
    lay: &CzLayout,
    gaps: &[f64; 2],
) -> Result<PulseSchedule> {
    let t_pi = PI / lay.g_pi;
    let t_round = TAU / lay.g_round;
    let d_pi = bridge_to(dev, &lay.pi_mode, lay.gaps.0, "CPB π-stage")?;
    let d_round = bridge_to(dev, &lay.round_mode, lay.gaps.1, "CPB 2π-stage")?;
    let mut pulses = Vec::new();
    let mut stages = Vec::new();
    let mut t = 0.0;
    let pi_stage = |t0: f64, pulses: &mut Vec<Pulse>, stages: &mut Vec<Stage>| {
        let t1 = t0 + t_pi;
        pulses.push(Pulse::step(&lay.pi_mode, d_pi, t0, t1));
        stages.push(Stage { start: t0, end: t1, kind: StageKind::CpbSwap { mode: lay.pi_mode.clone() } });
        t1
    };
    t = pi_stage(t, &mut pulses, &mut stages) + gaps[0];
    {
        let t1 = t + t_round;
        pulses.push(Pulse::step(&lay.round_mode, d_round, t, t1));
        stages.push(Stage {
            start: t,
            end: t1,
            kind: StageKind::CpbRound { mode: lay.round_mode.clone() },
        });
        t = t1 + gaps[1];
    }
    t = pi_stage(t, &mut pulses, &mut stages);
    let mut sched = PulseSchedule { pulses, stages, duration: t, warnings: Vec::new() };
    let w = sched.tuning_warnings(dev);
    sched.warnings = w;
    Ok(sched)
}

const LOGICAL: [&str; 4] = ["00", "01", "10", "11"];

/// Relative ledger phases (φ01, φ10, φ11) of a schedule, with φ00 as the
/// reference.
pub(crate) fn relative_phases(dev: &DeviceSpec, sched: &PulseSchedule) -> Result<[f64; 3]> {
    let mut raw = [0.0; 4];
    for (i, lab) in LOGICAL.iter().enumerate() {
        raw[i] = ledger_phase(dev, sched, &logical_basis_state(dev, lab)?)?;
    }
    Ok([raw[1] - raw[0], raw[2] - raw[0], raw[3] - raw[0]])
}

/// Find non-negative (u, v) with c_u·u + c_v·v ≡ rhs (mod 2π) row-wise for
/// the first two rows, minimizing u + v over integer wrap counts.
pub(crate) fn solve_two_delays(cu: [f64; 2], cv: [f64; 2], rhs: [f64; 2]) -> Result<(f64, f64)> {
    let det = cu[0] * cv[1] - cu[1] * cv[0];
    if det.abs() < 1e-9 {
        return Err(Error::Compile("delay equations are degenerate".into()));
    }
    let mut best: Option<(f64, f64, f64)> = None;
    const W: i64 = 80;
    for m0 in -W..=W {
        for m1 in -W..=W {
            let r0 = rhs[0] + TAU * m0 as f64;
            let r1 = rhs[1] + TAU * m1 as f64;
            let u = (r0 * cv[1] - r1 * cv[0]) / det;
            let v = (cu[0] * r1 - cu[1] * r0) / det;
            if u >= -1e-12 && v >= -1e-12 {
                let tot = u + v;
                if best.map_or(true, |(t, _, _)| tot < t) {
                    best = Some((tot, u.max(0.0), v.max(0.0)));
                }
            }
        }
    }
    best.map(|(_, u, v)| (u, v))
        .ok_or_else(|| Error::Compile("no non-negative delay solution found".into()))
}

/// Compile a controlled-phase gate: the photon-number-dependent Rabi cycle
/// of the CPB gives |11⟩ the conditional π, and inter-stage free-evolution
/// delays zero the single-photon phases.
pub fn compile_cz(dev: &DeviceSpec, variant: CzVariant) -> Result<PulseSchedule> {
    compile_cz_with_delays(dev, variant).map(|(s, _)| s)
}

/// As [`compile_cz`], also returning the solved delay sums (scalable: the
/// outer and inner delay sums; single-cavity: the total delay).
pub(crate) fn compile_cz_with_delays(
    dev: &DeviceSpec,
    variant: CzVariant,
) -> Result<(PulseSchedule, Vec<f64>)> {
    let lay = cz_layout(dev, variant)?;
    match variant {
        CzVariant::Scalable => {
            let base = scalable_schedule(dev, &lay, &[0.0; 4])?;
            let phi0 = relative_phases(dev, &base)?;
            // Phases are affine in the delays; by symmetry of the sequence
            // the first and last delays act identically, as do the middle
            // two, so the unknowns are the two sums.
            let col = |k: usize| -> Result<[f64; 3]> {
                let mut g = [0.0; 4];
                g[k] = 1.0;
                let p = relative_phases(dev, &scalable_schedule(dev, &lay, &g)?)?;
                Ok([p[0] - phi0[0], p[1] - phi0[1], p[2] - phi0[2]])
            };
            let cu = col(0)?;
            let cv = col(1)?;
            let rhs = [(-phi0[0]).rem_euclid(TAU), (-phi0[1]).rem_euclid(TAU)];
            let (u, v) = solve_two_delays([cu[0], cu[1]], [cv[0], cv[1]], rhs)?;
            let sched = scalable_schedule(dev, &lay, &[u / 2.0, v / 2.0, v / 2.0, u / 2.0])?;
            // The conditional phase is delay-invariant (the 2π Rabi loop
            // fixes it); confirm the ledger delivers (0, 0, π).
            let p = relative_phases(dev, &sched)?;
            for (got, want) in p.iter().zip([0.0, 0.0, PI]) {
                if wrap_angle(got - want).abs() > 1e-6 {
                    return Err(Error::Compile(format!(
                        "delay solver failed to zero phases: residual {:.3e} rad",
                        wrap_angle(got - want).abs()
                    )));
                }
            }
            Ok((sched, vec![u, v]))
        }
        CzVariant::SingleCavity => {
            let base = single_cavity_schedule(dev, &lay, &[0.0; 2])?;
            let phi0 = relative_phases(dev, &base)?;
            // Only the second qubit's idle photon carries φ01, and no delay
            // touches it: the device frequencies must already satisfy
            // φ01 ≡ 0 (the 2π-stage detuning an integer multiple of G¹).
            if wrap_angle(phi0[0]).abs() > 1e-6 {
                return Err(Error::Compile(format!(
                    "single-cavity CZ: idle-photon phase φ01 = {:.4} rad is not zero and no delay can cancel it; \
                     choose the 2π-stage detuning as an integer multiple of the 1↔2 coupling",
                    wrap_angle(phi0[0])
                )));
            }
            // Both delays shift φ10 and φ11 at the same rate, and the Rabi
            // loop keeps φ11 − φ10 = π, leaving one scalar equation.
            let col = {
                let p = relative_phases(dev, &single_cavity_schedule(dev, &lay, &[1.0, 0.0])?)?;
                p[1] - phi0[1]
            };
            if col.abs() < 1e-9 {
                return Err(Error::Compile("delay equation is degenerate".into()));
            }
            let rhs = (-phi0[1]).rem_euclid(TAU);
            // Smallest non-negative total delay s with col·s ≡ rhs (mod 2π).
            let mut best: Option<f64> = None;
            for m in -80i64..=80 {
                let s = (rhs + TAU * m as f64) / col;
                if s >= 0.0 && best.map_or(true, |b| s < b) {
                    best = Some(s);
                }
            }
            let s = best.ok_or_else(|| Error::Compile("no non-negative delay solution".into()))?;
            let sched = single_cavity_schedule(dev, &lay, &[s / 2.0, s / 2.0])?;
            let p = relative_phases(dev, &sched)?;
            for (got, want) in p.iter().zip([0.0, 0.0, PI]) {
                if wrap_angle(got - want).abs() > 1e-6 {
                    return Err(Error::Compile(format!(
                        "delay solver failed to zero phases: residual {:.3e} rad",
                        wrap_angle(got - want).abs()
                    )));
                }
            }
            Ok((sched, vec![s]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{ModeSpec, SpinEnsembleSpec};
    use crate::units::{ghz, mhz};
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn toy_device() -> DeviceSpec {
        DeviceSpec {
            name: "toy".into(),
            description: String::new(),
            modes: vec![ModeSpec { label: "A".into(), fundamental: ghz(22.0), harmonic: 1, tuning_fraction: 0.1 }],
            spins: vec![SpinEnsembleSpec {
                label: "A".into(),
                gap: ghz(20.0),
                gbar: mhz(60.0),
                spin_count: None,
                g_single: None,
                mode: "A".into(),
            }],
            cpb: None,
            hops: vec![],
            loss: BTreeMap::new(),
        }
    }

    #[test]
    fn step_pulse_profile() {
        let p = Pulse::step("A", ghz(0.1), 2.0, 7.0);
        assert_eq!(p.value_at(1.9), 0.0);
        assert_relative_eq!(p.value_at(4.0), ghz(0.1), max_relative = 1e-15);
        assert_eq!(p.value_at(7.0), 0.0);
    }

    #[test]
    fn trapezoid_midpoint_of_edge_is_half() {
        let p = Pulse {
            mode: "A".into(),
            delta: ghz(0.1),
            center: 5.0,
            duration: 10.0,
            shape: PulseShape::Ramp { ramp_time: 2.0 },
        };
        assert_relative_eq!(p.value_at(1.0), ghz(0.05), max_relative = 1e-12);
        assert_relative_eq!(p.value_at(5.0), ghz(0.1), max_relative = 1e-12);
        assert_relative_eq!(p.value_at(9.0), ghz(0.05), max_relative = 1e-12);
    }

    #[test]
    fn overlapping_pulses_sum() {
        let sched = PulseSchedule {
            pulses: vec![Pulse::step("A", ghz(0.1), 0.0, 4.0), Pulse::step("A", ghz(0.2), 2.0, 6.0)],
            stages: vec![],
            duration: 6.0,
            warnings: vec![],
        };
        assert_relative_eq!(sched.detuning_at("A", 3.0), ghz(0.3), max_relative = 1e-12);
        assert_relative_eq!(sched.detuning_at("A", 1.0), ghz(0.1), max_relative = 1e-12);
        assert_eq!(sched.detuning_at("B", 3.0), 0.0);
    }

    #[test]
    fn phase_gate_duration_example() {
        // φ = π at |δ|/2π = 0.1 GHz gives τ = π/(2π·0.1) = 5 ns.
        let dev = toy_device();
        let sched = compile_rz(&dev, "A", PI, Some(ghz(0.1))).unwrap();
        assert_eq!(sched.pulses.len(), 1);
        assert_relative_eq!(sched.duration, 5.0, max_relative = 1e-12);
        assert_relative_eq!(sched.pulses[0].delta, -ghz(0.1), max_relative = 1e-12);
    }

    #[test]
    fn zero_angle_compiles_to_empty() {
        let dev = toy_device();
        assert!(compile_rz(&dev, "A", 0.0, None).unwrap().is_empty());
        assert!(compile_ry(&dev, "A", 0.0).unwrap().is_empty());
    }

    #[test]
    fn infeasible_detuning_is_an_error() {
        let dev = toy_device();
        let err = compile_rz(&dev, "A", PI, Some(ghz(5.0))).unwrap_err();
        assert!(err.to_string().contains("feasible interval"));
    }

    #[test]
    fn resonant_rotation_duration() {
        // τ = π/Ḡ ≈ 8.33 ns at Ḡ/2π = 60 MHz.
        let dev = toy_device();
        let sched = compile_ry(&dev, "A", PI).unwrap();
        let seg = &sched.pulses[0];
        assert_relative_eq!(seg.duration, PI / mhz(60.0), max_relative = 1e-12);
        assert_relative_eq!(seg.duration, 8.3333, max_relative = 1e-4);
        assert_relative_eq!(seg.delta, ghz(-2.0), max_relative = 1e-12);
    }

    #[test]
    fn compilers_are_idempotent() {
        let dev = toy_device();
        assert_eq!(compile_rz(&dev, "A", 1.0, None).unwrap(), compile_rz(&dev, "A", 1.0, None).unwrap());
        assert_eq!(compile_ry(&dev, "A", PI).unwrap(), compile_ry(&dev, "A", PI).unwrap());
    }

    #[test]
    fn ledger_matches_pulse_area_on_photon_state() {
        // A pure detuning pulse gives the photon state phase −δτ and the
        // spin state phase 0 in the interaction picture.
        let dev = toy_device();
        let delta = ghz(0.5);
        let sched = PulseSchedule {
            pulses: vec![Pulse::step("A", delta, 1.0, 4.0)],
            stages: vec![],
            duration: 6.0,
            warnings: vec![],
        };
        let photon = BasisState { photons: vec![1], spins: vec![0], cpb: 0 };
        let spin = BasisState { photons: vec![0], spins: vec![1], cpb: 0 };
        let diff = wrap_angle(ledger_phase(&dev, &sched, &photon).unwrap() - (-delta * 3.0));
        assert_relative_eq!(diff, 0.0, epsilon = 1e-12);
        assert_relative_eq!(ledger_phase(&dev, &sched, &spin).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ledger_requires_step_pulses() {
        let dev = toy_device();
        let sched = PulseSchedule {
            pulses: vec![Pulse {
                mode: "A".into(),
                delta: ghz(0.1),
                center: 5.0,
                duration: 10.0,
                shape: PulseShape::Ramp { ramp_time: 3.0 },
            }],
            stages: vec![],
            duration: 10.0,
            warnings: vec![],
        };
        let photon = BasisState { photons: vec![1], spins: vec![0], cpb: 0 };
        assert!(ledger_phase(&dev, &sched, &photon).is_err());
    }

    #[test]
    fn tuning_violation_is_warned() {
        let dev = toy_device();
        let sched = PulseSchedule {
            pulses: vec![Pulse::step("A", ghz(5.0), 0.0, 1.0)],
            stages: vec![],
            duration: 1.0,
            warnings: vec![],
        };
        let w = sched.tuning_warnings(&dev);
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("tuning bound"));
    }

    #[test]
    fn append_shifts_times() {
        let dev = toy_device();
        let mut a = compile_rz(&dev, "A", 1.0, None).unwrap();
        let b = compile_rz(&dev, "A", 2.0, None).unwrap();
        let d0 = a.duration;
        a.append(&b, 0.5);
        assert_relative_eq!(a.pulses[1].start(), d0 + 0.5, max_relative = 1e-12);
        assert_relative_eq!(a.duration, d0 + 0.5 + b.duration, max_relative = 1e-12);
    }
}
