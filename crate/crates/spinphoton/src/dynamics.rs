//! Time propagation of the state vector under a pulse schedule.
//!
//! Two production integrators: a piecewise-exact stepper for step-shaped
//! schedules in the Schrödinger picture (H is constant between pulse edges,
//! so each interval is a single matrix-function application) and an adaptive
//! Dormand–Prince RK45 for everything else. A separate dense oracle
//! (time-ordered exponentials with interval-doubling convergence) exists
//! purely for cross-checking and shares no stepping code with either.

use crate::device::DeviceSpec;
use crate::expm::expm;
use crate::hilbert::{build_basis, build_hamiltonian, HamiltonianTerms, Picture};
use crate::pulses::PulseSchedule;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Exact matrix-function application on each constant-H interval;
    /// step pulses and Schrödinger picture only.
    PiecewiseExact,
    /// Adaptive Dormand–Prince RK45, valid for any schedule and picture.
    AdaptiveRk,
}

impl std::str::FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "piecewise-exact" | "exact" => Ok(Integrator::PiecewiseExact),
            "adaptive-rk" | "rk" => Ok(Integrator::AdaptiveRk),
            other => Err(Error::InvalidArgument(format!("unknown integrator `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    pub picture: Picture,
    pub integrator: Integrator,
    /// Relative tolerance of the adaptive integrator.
    pub tolerance: f64,
    /// Output grid spacing, ns.
    pub grid: f64,
    /// Include the −iΓ a†a loss diagonal.
    pub loss: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            picture: Picture::Schrodinger,
            integrator: Integrator::PiecewiseExact,
            tolerance: 1e-10,
            grid: 0.05,
            loss: false,
        }
    }
}

/// Time series of the state under a schedule.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<C64>>,
    pub norms2: Vec<f64>,
    pub picture: Picture,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<C64> {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// Largest |norm² − 1| over the grid.
    pub fn norm_drift(&self) -> f64 {
        self.norms2.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Multiply by e^{+i H₀ t}: convert a Schrödinger-picture state to the
/// interaction picture at time t.
pub fn to_interaction_picture(terms: &HamiltonianTerms, psi: &DVector<C64>, t: f64) -> DVector<C64> {
    let mut out = psi.clone();
    for i in 0..out.len() {
        out[i] *= C64::new(0.0, terms.idle_energy[i] * t).exp();
    }
    out
}

/// Inverse of [`to_interaction_picture`].
pub fn to_schrodinger_picture(terms: &HamiltonianTerms, psi: &DVector<C64>, t: f64) -> DVector<C64> {
    let mut out = psi.clone();
    for i in 0..out.len() {
        out[i] *= C64::new(0.0, -terms.idle_energy[i] * t).exp();
    }
    out
}

/// Find the excitation cap whose basis matches the state dimension and
/// build the Hamiltonian for it.
pub fn terms_for_state(dev: &DeviceSpec, dim: usize) -> Result<HamiltonianTerms> {
    for cap in 0..=8u32 {
        let basis = build_basis(dev, cap)?;
        if basis.len() == dim {
            return build_hamiltonian(dev, &basis);
        }
        if basis.len() > dim {
            break;
        }
    }
    Err(Error::InvalidArgument(format!(
        "state dimension {dim} does not match any excitation-capped basis of this device"
    )))
}

fn validate_options(opts: &PropagationOptions, sched: &PulseSchedule) -> Result<()> {
    if !(opts.tolerance > 0.0 && opts.tolerance <= 1e-4) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {} outside (0, 1e-4]",
            opts.tolerance
        )));
    }
    if opts.grid <= 0.0 {
        return Err(Error::InvalidArgument("output grid spacing must be > 0".into()));
    }
    if opts.integrator == Integrator::PiecewiseExact {
        if !sched.is_step() {
            return Err(Error::InvalidArgument(
                "piecewise-exact integrator requires step-shaped pulses".into(),
            ));
        }
        if opts.picture != Picture::Schrodinger {
            return Err(Error::InvalidArgument(
                "piecewise-exact integrator runs in the Schrödinger picture only".into(),
            ));
        }
    }
    Ok(())
}

/// Union of schedule breakpoints and output grid over [t0, t1], sorted.
fn time_grid(sched: &PulseSchedule, t0: f64, t1: f64, grid: f64) -> Vec<f64> {
    let mut ts = vec![t0, t1];
    for b in sched.breakpoints() {
        if b > t0 + 1e-12 && b < t1 - 1e-12 {
            ts.push(b);
        }
    }
    let mut t = t0 + grid;
    while t < t1 - 1e-12 {
        ts.push(t);
        t += grid;
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    ts
}

/// Cache key for a constant detuning configuration.
fn config_key(det: &std::collections::BTreeMap<String, f64>, loss: bool) -> Vec<(String, u64)> {
    let mut k: Vec<(String, u64)> = det.iter().map(|(s, v)| (s.clone(), v.to_bits())).collect();
    k.push(("\0loss".into(), u64::from(loss)));
    k
}

enum IntervalOp {
    /// Hermitian: V, eigenvalues λ; apply V e^{−iλs} V†.
    Eigen(DMatrix<C64>, DVector<f64>),
    /// Non-Hermitian (lossy): constant H, exponentiated per interval.
    Dense(DMatrix<C64>),
}

fn piecewise_exact(
    terms: &HamiltonianTerms,
    sched: &PulseSchedule,
    psi0: &DVector<C64>,
    ts: &[f64],
    loss: bool,
) -> Trajectory {
    let mut cache: HashMap<Vec<(String, u64)>, IntervalOp> = HashMap::new();
    let mut psi = psi0.clone();
    let mut states = vec![psi.clone()];
    let mut norms2 = vec![psi.norm_squared()];
    for w in ts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dt = b - a;
        if dt > 1e-14 {
            let det = sched.detunings_at(0.5 * (a + b));
            let key = config_key(&det, loss);
            let op = cache.entry(key).or_insert_with(|| {
                let h = terms.assemble(&det, Picture::Schrodinger, 0.0, loss).to_dense();
                if loss && !terms.loss.is_empty() {
                    IntervalOp::Dense(h)
                } else {
                    let eig = h.symmetric_eigen();
                    IntervalOp::Eigen(eig.eigenvectors, eig.eigenvalues.map(|x| x))
                }
            });
            psi = match op {
                IntervalOp::Eigen(v, lam) => {
                    let mut y = v.adjoint() * &psi;
                    for i in 0..y.len() {
                        y[i] *= C64::new(0.0, -lam[i] * dt).exp();
                    }
                    v as &DMatrix<C64> * y
                }
                IntervalOp::Dense(h) => {
                    let u = expm(&(h.clone() * C64::new(0.0, -dt)));
                    u * &psi
                }
            };
        }
        states.push(psi.clone());
        norms2.push(psi.norm_squared());
    }
    Trajectory { times: ts.to_vec(), states, norms2, picture: Picture::Schrodinger }
}

/// Dormand–Prince 5(4) with PI-free standard step control.
#[allow(clippy::too_many_arguments)]
fn rk45_segment(
    deriv: &dyn Fn(f64, &DVector<C64>) -> DVector<C64>,
    mut t: f64,
    t_end: f64,
    psi: &mut DVector<C64>,
    tol: f64,
) -> Result<()> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    // 5th-order solution weights equal A[5]; error weights = b5 − b4.
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];
    let span = t_end - t;
    if span <= 0.0 {
        return Ok(());
    }
    let mut h = (span / 10.0).min(0.5).max(1e-6);
    let mut k: Vec<DVector<C64>> = Vec::with_capacity(7);
    let mut worst: f64 = 0.0;
    let mut steps = 0usize;
    while t < t_end - 1e-13 {
        h = h.min(t_end - t);
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::Tolerance { worst, tol });
        }
        k.clear();
        k.push(deriv(t, psi));
        for i in 0..6 {
            let mut y = psi.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[i][j] != 0.0 {
                    y += kj * C64::new(h * A[i][j], 0.0);
                }
            }
            k.push(deriv(t + C[i] * h, &y));
        }
        // 5th-order candidate.
        let mut y5 = psi.clone();
        for (j, w) in A[5].iter().enumerate() {
            if *w != 0.0 {
                y5 += &k[j] * C64::new(h * w, 0.0);
            }
        }
        // Embedded error estimate.
        let mut err_vec: DVector<C64> = DVector::zeros(psi.len());
        for (j, w) in E.iter().enumerate() {
            if *w != 0.0 {
                err_vec += &k[j] * C64::new(h * w, 0.0);
            }
        }
        let scale = 1.0f64.max(psi.norm()).max(y5.norm());
        let err = err_vec.norm() / (tol * scale);
        if err <= 1.0 {
            t += h;
            *psi = y5;
        } else {
            worst = worst.max(err * tol);
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        if h < 1e-12 {
            return Err(Error::Tolerance { worst: worst.max(err * tol), tol });
        }
    }
    Ok(())
}

fn adaptive_rk(
    terms: &HamiltonianTerms,
    sched: &PulseSchedule,
    psi0: &DVector<C64>,
    ts: &[f64],
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    let deriv = |t: f64, psi: &DVector<C64>| -> DVector<C64> {
        let det = sched.detunings_at(t);
        let h = terms.assemble(&det, opts.picture, t, opts.loss);
        h.mul_vec(psi).map(|v| v * C64::new(0.0, -1.0))
    };
    let mut psi = psi0.clone();
    let mut states = vec![psi.clone()];
    let mut norms2 = vec![psi.norm_squared()];
    for w in ts.windows(2) {
        rk45_segment(&deriv, w[0], w[1], &mut psi, opts.tolerance)?;
        states.push(psi.clone());
        norms2.push(psi.norm_squared());
    }
    Ok(Trajectory { times: ts.to_vec(), states, norms2, picture: opts.picture })
}

/// Solve i d|ψ⟩/dt = H(t)|ψ⟩ over `t_span` and sample on the output grid
/// (plus all schedule breakpoints). The state dimension selects the
/// excitation cap.
pub fn propagate(
    initial: &DVector<C64>,
    dev: &DeviceSpec,
    sched: &PulseSchedule,
    t_span: (f64, f64),
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    let terms = terms_for_state(dev, initial.len())?;
    propagate_terms(initial, &terms, sched, t_span, opts)
}

/// As [`propagate`] with a pre-built Hamiltonian.
pub fn propagate_terms(
    initial: &DVector<C64>,
    terms: &HamiltonianTerms,
    sched: &PulseSchedule,
    t_span: (f64, f64),
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    validate_options(opts, sched)?;
    if initial.len() != terms.dim() {
        return Err(Error::InvalidArgument(format!(
            "state dimension {} does not match basis dimension {}",
            initial.len(),
            terms.dim()
        )));
    }
    if opts.loss && opts.picture != Picture::Schrodinger {
        return Err(Error::InvalidArgument(
            "lossy propagation is defined in the Schrödinger picture".into(),
        ));
    }
    let (t0, t1) = t_span;
    if t1 < t0 {
        return Err(Error::InvalidArgument("time span must be forward".into()));
    }
    let ts = time_grid(sched, t0, t1, opts.grid);
    match opts.integrator {
        Integrator::PiecewiseExact => Ok(piecewise_exact(terms, sched, initial, &ts, opts.loss)),
        Integrator::AdaptiveRk => adaptive_rk(terms, sched, initial, &ts, opts),
    }
}

/// Propagate under H_eff = H(t) − iΣΓ_γ a†_γ a_γ (Schrödinger picture).
pub fn propagate_lossy(
    initial: &DVector<C64>,
    dev: &DeviceSpec,
    sched: &PulseSchedule,
    t_span: (f64, f64),
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    if !dev.has_loss() {
        return Err(Error::InvalidArgument("device has no positive loss rate".into()));
    }
    let mut opts = *opts;
    opts.loss = true;
    opts.picture = Picture::Schrodinger;
    propagate(initial, dev, sched, t_span, &opts)
}

/// Largest basis dimension for which the dense oracle is allowed.
pub const ORACLE_DIM_LIMIT: usize = 200;

/// Independent dense reference propagator (Schrödinger picture, no loss):
/// time-ordered product of midpoint-sampled interval exponentials over each
/// smooth segment, with global interval doubling until two refinements
/// differ by < 1e-12.
pub fn oracle_propagate(
    initial: &DVector<C64>,
    dev: &DeviceSpec,
    sched: &PulseSchedule,
    t_span: (f64, f64),
) -> Result<DVector<C64>> {
    if initial.len() > ORACLE_DIM_LIMIT {
        return Err(Error::DimensionLimit { dim: initial.len(), limit: ORACLE_DIM_LIMIT });
    }
    let terms = terms_for_state(dev, initial.len())?;
    let (t0, t1) = t_span;
    let mut segs = vec![t0, t1];
    for b in sched.breakpoints() {
        if b > t0 + 1e-12 && b < t1 - 1e-12 {
            segs.push(b);
        }
    }
    segs.sort_by(f64::total_cmp);
    segs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let run = |n_per_seg: usize| -> DVector<C64> {
        let mut psi = initial.clone();
        for w in segs.windows(2) {
            let dt = (w[1] - w[0]) / n_per_seg as f64;
            if dt <= 1e-15 {
                continue;
            }
            for i in 0..n_per_seg {
                let tm = w[0] + (i as f64 + 0.5) * dt;
                let det = sched.detunings_at(tm);
                let h = terms.assemble(&det, Picture::Schrodinger, tm, false).to_dense();
                let u = expm(&(h * C64::new(0.0, -dt)));
                psi = u * psi;
            }
        }
        psi
    };
    let mut n = 1usize;
    let mut prev = run(n);
    for _ in 0..24 {
        n *= 2;
        let next = run(n);
        let diff = (&next - &prev).norm();
        if diff < 1e-12 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence(
        "oracle_propagate",
        format!("refinement still changing after {n} intervals per segment"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{ModeSpec, SpinEnsembleSpec};
    use crate::pulses::{compile_ry, compile_rz, Pulse, PulseSchedule};
    use crate::units::{ghz, khz, mhz};
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

    fn unit(dev: &DeviceSpec, label: &str) -> DVector<C64> {
        let basis = build_basis(dev, 1).unwrap();
        basis.unit_vector(&logical_basis_state_1q(dev, label)).unwrap()
    }

    // Single-qubit device: "0" = spin excitation, "1" = photon.
    fn logical_basis_state_1q(dev: &DeviceSpec, label: &str) -> crate::hilbert::BasisState {
        let mut s = crate::hilbert::BasisState {
            photons: vec![0; dev.modes.len()],
            spins: vec![0; dev.spins.len()],
            cpb: 0,
        };
        match label {
            "0" => s.spins[0] = 1,
            "1" => s.photons[0] = 1,
            _ => panic!("unknown 1q label"),
        }
        s
    }

    #[test]
    fn empty_schedule_is_identity_in_interaction_picture() {
        // Decoupled ensemble: the interaction picture removes all dynamics.
        let mut dev = toy_device();
        dev.spins[0].gbar = 0.0;
        let psi0 = unit(&dev, "0");
        let opts = PropagationOptions {
            picture: Picture::Interaction,
            integrator: Integrator::AdaptiveRk,
            ..Default::default()
        };
        let traj = propagate(&psi0, &dev, &PulseSchedule::empty(), (0.0, 5.0), &opts).unwrap();
        assert!((traj.final_state() - &psi0).norm() < 1e-12);
    }

    #[test]
    fn resonant_rabi_matches_closed_form() {
        // On resonance the population transfers as sin²(Ḡt/2).
        let dev = toy_device();
        let psi0 = unit(&dev, "0");
        let sched = compile_ry(&dev, "A", std::f64::consts::PI).unwrap();
        let opts = PropagationOptions::default();
        let t_res = sched.stages[0].end;
        let traj = propagate(&psi0, &dev, &sched, (0.0, t_res), &opts).unwrap();
        let basis = build_basis(&dev, 1).unwrap();
        let photon_idx = basis.position(&logical_basis_state_1q(&dev, "1")).unwrap();
        let gbar = mhz(60.0);
        for (t, psi) in traj.times.iter().zip(&traj.states) {
            let expect = (gbar * t / 2.0).sin().powi(2);
            assert_relative_eq!(psi[photon_idx].norm_sqr(), expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn integrators_cross_validate() {
        let dev = toy_device();
        let psi0 = unit(&dev, "0");
        let sched = compile_ry(&dev, "A", std::f64::consts::PI).unwrap();
        let span = (0.0, sched.duration);
        let exact = propagate(&psi0, &dev, &sched, span, &PropagationOptions::default()).unwrap();
        let rk = propagate(
            &psi0,
            &dev,
            &sched,
            span,
            &PropagationOptions {
                integrator: Integrator::AdaptiveRk,
                tolerance: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        let diff = (exact.final_state() - rk.final_state()).norm();
        assert!(diff < 1e-8, "integrator mismatch {diff:.3e}");
        assert!(exact.norm_drift() < 1e-12);
        assert!(rk.norm_drift() < 1e-9);
    }

    #[test]
    fn oracle_agrees_with_production_integrator() {
        let dev = toy_device();
        let psi0 = unit(&dev, "0");
        let sched = compile_ry(&dev, "A", std::f64::consts::PI).unwrap();
        let span = (0.0, sched.duration);
        let exact = propagate(&psi0, &dev, &sched, span, &PropagationOptions::default()).unwrap();
        let oracle = oracle_propagate(&psi0, &dev, &sched, span).unwrap();
        let diff = (exact.final_state() - &oracle).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "max amplitude difference {diff:.3e}");
    }

    #[test]
    fn pictures_agree_on_populations() {
        let dev = toy_device();
        let psi0 = unit(&dev, "0");
        let sched = compile_rz(&dev, "A", 1.0, None).unwrap();
        let span = (0.0, sched.duration);
        let s = propagate(&psi0, &dev, &sched, span, &PropagationOptions::default()).unwrap();
        let i = propagate(
            &psi0,
            &dev,
            &sched,
            span,
            &PropagationOptions {
                picture: Picture::Interaction,
                integrator: Integrator::AdaptiveRk,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in s.states.iter().zip(&i.states) {
            for k in 0..a.len() {
                assert_relative_eq!(a[k].norm_sqr(), b[k].norm_sqr(), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn single_photon_decay_is_exponential() {
        // Decouple the ensemble so the photon state is an eigenstate and
        // the norm decay is exactly e^{−2Γt}.
        let mut dev = toy_device();
        dev.spins[0].gbar = 0.0;
        dev.loss.insert("A".into(), khz(10.0));
        let psi0 = unit(&dev, "1");
        let gamma = khz(10.0);
        let t_hold = 40.0;
        let traj = propagate_lossy(
            &psi0,
            &dev,
            &PulseSchedule { duration: t_hold, ..Default::default() },
            (0.0, t_hold),
            &PropagationOptions::default(),
        )
        .unwrap();
        for (t, n2) in traj.times.iter().zip(&traj.norms2) {
            assert_relative_eq!(*n2, (-2.0 * gamma * t).exp(), epsilon = 1e-9);
        }
        // No photons anywhere: no decay.
        let spin = unit(&dev, "0");
        let traj = propagate_lossy(
            &spin,
            &dev,
            &PulseSchedule { duration: t_hold, ..Default::default() },
            (0.0, t_hold),
            &PropagationOptions::default(),
        )
        .unwrap();
        assert!(traj.norm_drift() < 1e-12);
    }

    #[test]
    fn lossy_norm_is_monotone() {
        let mut dev = toy_device();
        dev.loss.insert("A".into(), khz(10.0));
        let psi0 = unit(&dev, "1");
        let sched = compile_ry(&dev, "A", std::f64::consts::PI).unwrap();
        let traj =
            propagate_lossy(&psi0, &dev, &sched, (0.0, sched.duration), &PropagationOptions::default())
                .unwrap();
        for w in traj.norms2.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn piecewise_exact_rejects_ramps() {
        let dev = toy_device();
        let psi0 = unit(&dev, "0");
        let sched = PulseSchedule {
            pulses: vec![Pulse {
                mode: "A".into(),
                delta: ghz(0.1),
                center: 5.0,
                duration: 10.0,
                shape: crate::pulses::PulseShape::Ramp { ramp_time: 2.0 },
            }],
            stages: vec![],
            duration: 10.0,
            warnings: vec![],
        };
        let err = propagate(&psi0, &dev, &sched, (0.0, 10.0), &PropagationOptions::default());
        assert!(err.is_err());
    }
}
