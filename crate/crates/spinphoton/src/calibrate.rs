//! Numeric refinement of compiled schedules.
//!
//! The analytic phase ledger treats every stage as an ideal two-level
//! process. The real dynamics adds small dispersive shifts from the
//! off-resonant couplings, so the compiled controlled-phase schedule lands
//! within a few hundredths of a radian of the target phases rather than
//! exactly on them. The refiners here measure the residuals by full
//! propagation and cancel them with the same knobs the compiler uses.
//!
//! One residual is out of reach of any delay or single-qubit phase: the
//! entangling combination φ11 − φ10 − φ01 is invariant under all of them
//! (it is set by the conditional Rabi loop alone). The refiners therefore
//! distribute that invariant part evenly as (−c/3, −c/3, +c/3) so the
//! worst single-state phase error is |c|/3.

use crate::device::DeviceSpec;
use crate::dynamics::{propagate_terms, to_interaction_picture, Integrator, PropagationOptions};
use crate::hilbert::{build_basis, build_hamiltonian, logical_state, BasisState, HamiltonianTerms, Picture};
use crate::metrics::LOGICAL_LABELS;
use crate::pulses::{
    self, compile_ry, wrap_angle, CzVariant, Pulse, PulseSchedule, PulseShape, Stage, StageKind,
};
use crate::{Error, Result};
use std::f64::consts::{PI, TAU};

/// Hamiltonian over the two-excitation sector of a two-qubit device.
pub fn logical_terms(dev: &DeviceSpec) -> Result<HamiltonianTerms> {
    let basis = build_basis(dev, 2)?;
    build_hamiltonian(dev, &basis)
}

/// Numerically measured interaction-picture phases (φ01, φ10, φ11) of the
/// logical states relative to |00⟩, each wrapped to (−π, π].
pub fn measure_relative_phases(
    dev: &DeviceSpec,
    terms: &HamiltonianTerms,
    sched: &PulseSchedule,
) -> Result<[f64; 3]> {
    let opts = PropagationOptions { grid: sched.duration.max(1.0), ..Default::default() };
    let mut args = [0.0; 4];
    for (i, label) in LOGICAL_LABELS.iter().enumerate() {
        let init = logical_state(dev, &terms.basis, label)?;
        let traj = propagate_terms(&init, terms, sched, (0.0, sched.duration), &opts)?;
        let fin = to_interaction_picture(terms, traj.final_state(), sched.duration);
        let amp = init.dotc(&fin);
        if amp.norm() < 1e-3 {
            return Err(Error::NonConvergence(
                "measure_relative_phases",
                format!("state |{label}⟩ barely returns (|amp| = {:.3e})", amp.norm()),
            ));
        }
        args[i] = amp.arg();
    }
    Ok([
        wrap_angle(args[1] - args[0]),
        wrap_angle(args[2] - args[0]),
        wrap_angle(args[3] - args[0]),
    ])
}

/// Worst phase error of a measured phase triple against (0, 0, π).
pub fn worst_phase_error(phases: &[f64; 3]) -> f64 {
    [phases[0], phases[1], wrap_angle(phases[2] - PI)]
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
}

/// Measured interaction-picture phase gained by one qubit's |1⟩ relative to
/// the joint ground label |00⟩ over a schedule.
fn measure_qubit_phase(
    dev: &DeviceSpec,
    terms: &HamiltonianTerms,
    sched: &PulseSchedule,
    one_label: &str,
) -> Result<f64> {
    let opts = PropagationOptions { grid: sched.duration.max(1.0), ..Default::default() };
    let mut args = [0.0; 2];
    for (i, label) in ["00", one_label].iter().enumerate() {
        let init = logical_state(dev, &terms.basis, label)?;
        let traj = propagate_terms(&init, terms, sched, (0.0, sched.duration), &opts)?;
        let fin = to_interaction_picture(terms, traj.final_state(), sched.duration);
        let amp = init.dotc(&fin);
        if amp.norm() < 0.5 {
            return Err(Error::NonConvergence(
                "measure_qubit_phase",
                format!("state |{label}⟩ barely returns (|amp| = {:.3e})", amp.norm()),
            ));
        }
        args[i] = amp.arg();
    }
    Ok(wrap_angle(args[1] - args[0]))
}

/// Compile a phase gate and correct its duration against full propagation:
/// the off-resonant spin coupling Stark-shifts the photon level, so the
/// naive area τ = φ/|δ| misses the target phase by ~10⁻³ rad. Iterating the
/// commanded angle against the measured one reaches 10⁻⁹ in a few rounds.
pub fn compile_rz_refined(dev: &DeviceSpec, qubit: &str, phi: f64) -> Result<PulseSchedule> {
    let phi = phi.rem_euclid(TAU);
    let mut sched = pulses::compile_rz(dev, qubit, phi, None)?;
    if sched.is_empty() {
        return Ok(sched);
    }
    let terms = logical_terms(dev)?;
    let q = dev
        .spins
        .iter()
        .position(|s| s.label == qubit)
        .ok_or_else(|| Error::UnknownLabel(qubit.to_string()))?;
    let one_label = if q == 0 { "10" } else { "01" };
    let mut phi_eff = phi;
    for _ in 0..12 {
        let err = wrap_angle(measure_qubit_phase(dev, &terms, &sched, one_label)? - phi);
        if err.abs() < 1e-9 {
            break;
        }
        phi_eff = (phi_eff - err).rem_euclid(TAU);
        sched = pulses::compile_rz(dev, qubit, phi_eff, None)?;
    }
    Ok(sched)
}

/// Single-qubit phase pulse diag(1, e^{iφ}) with the sign of the detuning
/// chosen to keep the pulse as short as possible (the refiner appends these
/// in small doses).
fn phase_pulse(dev: &DeviceSpec, qubit: &str, phase: f64) -> Result<PulseSchedule> {
    let spin = dev.spin(qubit)?;
    let mode = dev.mode(&spin.mode)?;
    let w = wrap_angle(phase);
    if w.abs() < 1e-12 {
        return Ok(PulseSchedule::empty());
    }
    let mag = 0.5 * mode.tuning_bound();
    // +δ accumulates phase −δτ on the photon, −δ accumulates +δτ.
    let delta = if w > 0.0 { -mag } else { mag };
    let tau = w.abs() / mag;
    Ok(PulseSchedule {
        pulses: vec![Pulse::step(&mode.label, delta, 0.0, tau)],
        stages: vec![Stage { start: 0.0, end: tau, kind: StageKind::Free }],
        duration: tau,
        warnings: Vec::new(),
    })
}

/// Correction targets for measured residuals r: reach the distributed-error
/// point (−c/3, −c/3, +c/3) with c the invariant combination.
fn correction(r: &[f64; 3]) -> (f64, [f64; 2]) {
    let c = wrap_angle(r[2] - r[1] - r[0]);
    (c, [wrap_angle(-c / 3.0 - r[0]), wrap_angle(-c / 3.0 - r[1])])
}

/// Compile a controlled-phase schedule and iterate the delay solution
/// against full numeric propagation until the phase errors reach the
/// invariant floor |c|/3 (a few 10⁻² rad for the reference devices).
pub fn compile_cz_refined(dev: &DeviceSpec, variant: CzVariant) -> Result<PulseSchedule> {
    let (sched0, delays) = pulses::compile_cz_with_delays(dev, variant)?;
    let terms = logical_terms(dev)?;
    match variant {
        CzVariant::Scalable => {
            let lay = pulses::cz_layout(dev, variant)?;
            // Ledger sensitivities of (φ01, φ10) to the two delay sums.
            let base = pulses::relative_phases(dev, &pulses::scalable_schedule(dev, &lay, &[0.0; 4])?)?;
            let col = |k: usize| -> Result<[f64; 2]> {
                let mut g = [0.0; 4];
                g[k] = 1.0;
                let p = pulses::relative_phases(dev, &pulses::scalable_schedule(dev, &lay, &g)?)?;
                Ok([p[0] - base[0], p[1] - base[1]])
            };
            let cu = col(0)?;
            let cv = col(1)?;
            let det = cu[0] * cv[1] - cu[1] * cv[0];
            if det.abs() < 1e-9 {
                return Err(Error::Compile("delay equations are degenerate".into()));
            }
            let (mut u, mut v) = (delays[0], delays[1]);
            let mut best: Option<(f64, PulseSchedule)> = None;
            for _ in 0..4 {
                let sched =
                    pulses::scalable_schedule(dev, &lay, &[u / 2.0, v / 2.0, v / 2.0, u / 2.0])?;
                let phi = measure_relative_phases(dev, &terms, &sched)?;
                let r = [phi[0], phi[1], wrap_angle(phi[2] - PI)];
                let score = worst_phase_error(&phi);
                if best.as_ref().map_or(true, |(s, _)| score < *s) {
                    best = Some((score, sched));
                }
                let (c, d) = correction(&r);
                if score <= c.abs() / 3.0 + 1e-4 {
                    break;
                }
                // Smallest non-negative updated delays hitting d mod 2π.
                let mut cand: Option<(f64, f64, f64)> = None;
                for m0 in -6i64..=6 {
                    for m1 in -6i64..=6 {
                        let r0 = d[0] + TAU * m0 as f64;
                        let r1 = d[1] + TAU * m1 as f64;
                        let du = (r0 * cv[1] - r1 * cv[0]) / det;
                        let dv = (cu[0] * r1 - cu[1] * r0) / det;
                        let (nu, nv) = (u + du, v + dv);
                        if nu >= -1e-12 && nv >= -1e-12 {
                            let tot = nu + nv;
                            if cand.map_or(true, |(t, _, _)| tot < t) {
                                cand = Some((tot, nu.max(0.0), nv.max(0.0)));
                            }
                        }
                    }
                }
                let Some((_, nu, nv)) = cand else {
                    break;
                };
                u = nu;
                v = nv;
            }
            Ok(best.expect("at least one iterate evaluated").1)
        }
        CzVariant::SingleCavity => {
            let _ = delays;
            let mut sched = sched0;
            let mut best: Option<(f64, PulseSchedule)> = None;
            for _ in 0..4 {
                let phi = measure_relative_phases(dev, &terms, &sched)?;
                let r = [phi[0], phi[1], wrap_angle(phi[2] - PI)];
                let score = worst_phase_error(&phi);
                if best.as_ref().map_or(true, |(s, _)| score < *s) {
                    best = Some((score, sched.clone()));
                }
                let (c, d) = correction(&r);
                if score <= c.abs() / 3.0 + 1e-4 {
                    break;
                }
                // φ01 rides on the second qubit's photon, φ10 on the
                // first's; trailing phase pulses address them separately.
                let q1 = dev.spins[0].label.clone();
                let q2 = dev.spins[1].label.clone();
                let p2 = phase_pulse(dev, &q2, d[0])?;
                let p1 = phase_pulse(dev, &q1, d[1])?;
                if p1.is_empty() && p2.is_empty() {
                    break;
                }
                sched.append(&p2, 0.0);
                sched.append(&p1, 0.0);
            }
            Ok(best.expect("at least one iterate evaluated").1)
        }
    }
}

/// Resonant-rotation schedule with linear-ramp pulses. The ramps both
/// steal effective on-resonance time and tilt the rotation axis (the
/// detuning sweeps through a partial avoided-crossing passage), so neither
/// the step-pulse formula τ = π/Ḡ nor a duration-only re-solve reaches a
/// clean transfer. Two knobs are re-solved numerically: the window duration
/// τ and a small plateau detuning offset ε, which together can null the
/// complex stay-amplitude exactly. π rotations only.
pub fn ry_pi_with_ramps(dev: &DeviceSpec, qubit: &str, ramp_time: f64) -> Result<PulseSchedule> {
    if dev.spins.len() != 2 {
        return Err(Error::InvalidArgument(
            "ramp re-solve works on the two-qubit logical devices".into(),
        ));
    }
    let q = dev
        .spins
        .iter()
        .position(|s| s.label == qubit)
        .ok_or_else(|| Error::UnknownLabel(qubit.to_string()))?;
    let spin = &dev.spins[q];
    let mode = dev.mode(&spin.mode)?;
    let delta = spin.gap - mode.idle_freq();
    if delta.abs() > mode.tuning_bound() * (1.0 + 1e-12) {
        return Err(Error::Compile(format!(
            "resonance with spin `{qubit}` is beyond the tuning bound"
        )));
    }
    if ramp_time <= 0.0 {
        return Err(Error::InvalidArgument("ramp time must be > 0".into()));
    }
    // Calibrate in the single-excitation sector: the transfer couples only
    // one photon/spin pair, and the smaller basis keeps the search cheap.
    let basis = build_basis(dev, 1)?;
    let terms = build_hamiltonian(dev, &basis)?;
    let m = basis.mode_pos(&spin.mode)?;
    let mut spin_state =
        BasisState { photons: vec![0; dev.modes.len()], spins: vec![0; dev.spins.len()], cpb: 0 };
    spin_state.spins[q] = 1;
    let mut photon_state = spin_state.clone();
    photon_state.spins[q] = 0;
    photon_state.photons[m] = 1;
    let init = basis.unit_vector(&spin_state)?;
    let target = basis.unit_vector(&photon_state)?;
    let mk = |tau: f64, eps: f64| -> PulseSchedule {
        PulseSchedule {
            pulses: vec![Pulse {
                mode: mode.label.clone(),
                delta: delta + eps,
                center: tau / 2.0,
                duration: tau,
                shape: PulseShape::Ramp { ramp_time },
            }],
            stages: vec![Stage {
                start: 0.0,
                end: tau,
                kind: StageKind::SpinTurn { spin: spin.label.clone(), angle: PI },
            }],
            duration: tau,
            warnings: Vec::new(),
        }
    };
    let opts = PropagationOptions {
        integrator: Integrator::AdaptiveRk,
        picture: Picture::Interaction,
        tolerance: 1e-9,
        grid: 1e3,
        ..Default::default()
    };
    let transfer = |tau: f64, eps: f64| -> Result<f64> {
        let sched = mk(tau, eps);
        let traj = propagate_terms(&init, &terms, &sched, (0.0, tau), &opts)?;
        Ok(target.dotc(traj.final_state()).norm_sqr())
    };
    let tau0 = PI / spin.gbar;
    let (mut tau, mut eps) = (tau0, 0.0);
    let mut tau_range = ((tau0 - ramp_time).max(0.1 * tau0), tau0 + 3.0 * ramp_time);
    let mut eps_range = (-0.2 * spin.gbar, 0.2 * spin.gbar);
    for round in 0..3 {
        // Ternary search in τ at fixed ε.
        let (mut lo, mut hi) = tau_range;
        for _ in 0..30 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if transfer(m1, eps)? < transfer(m2, eps)? {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        tau = 0.5 * (lo + hi);
        // Ternary search in ε at fixed τ.
        let (mut lo, mut hi) = eps_range;
        for _ in 0..30 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if transfer(tau, m1)? < transfer(tau, m2)? {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        eps = 0.5 * (lo + hi);
        // Shrink both windows around the current point for the next pass.
        if round < 2 {
            let w_t = (tau_range.1 - tau_range.0) / 8.0;
            tau_range = (tau - w_t, tau + w_t);
            let w_e = (eps_range.1 - eps_range.0) / 8.0;
            eps_range = (eps - w_e, eps + w_e);
        }
    }
    let mut sched = mk(tau, eps);
    // Trapezoid pulse area is δ(τ − t_r); compensate the photon's detuning
    // phase as in the step compiler, again with a ramped pulse.
    let correction = ((delta + eps) * (tau - ramp_time)).rem_euclid(TAU);
    if correction > 1e-12 {
        let mag = 0.5 * mode.tuning_bound();
        let tau_rz = correction / mag + ramp_time;
        let rz = PulseSchedule {
            pulses: vec![Pulse {
                mode: mode.label.clone(),
                delta: -mag,
                center: tau_rz / 2.0,
                duration: tau_rz,
                shape: PulseShape::Ramp { ramp_time },
            }],
            stages: vec![Stage { start: 0.0, end: tau_rz, kind: StageKind::Free }],
            duration: tau_rz,
            warnings: Vec::new(),
        };
        sched.append(&rz, 0.0);
    }
    sched.warnings = sched.tuning_warnings(dev);
    Ok(sched)
}

/// Step-pulse reference for the ramp comparison: the compiled rotation with
/// the same qubit and angle π.
pub fn ry_pi_step(dev: &DeviceSpec, qubit: &str) -> Result<PulseSchedule> {
    compile_ry(dev, qubit, PI)
}
