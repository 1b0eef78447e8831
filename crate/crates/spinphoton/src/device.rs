//! Static device description: tunable resonator modes, spin ensembles, an
//! optional Cooper-pair box, photon-hopping links, and per-mode loss rates.
//!
//! All frequencies stored here are angular (rad/ns); see [`crate::units`].

use crate::{Error, Result};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// Warn when a "far detuned" or "highly anharmonic" ratio drops below this.
pub const RATIO_WARN: f64 = 10.0;

/// One tunable resonator mode. The idle frequency is `harmonic * fundamental`
/// exactly; detunings are limited to `tuning_fraction` of the idle frequency
/// (the fundamental tunes by the stated fraction and the harmonics
/// proportionally).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub label: String,
    /// Parent-cavity fundamental, rad/ns.
    pub fundamental: f64,
    /// Harmonic index, >= 1.
    pub harmonic: u32,
    /// Max fractional tuning range, default 0.1.
    pub tuning_fraction: f64,
}

impl ModeSpec {
    /// Idle angular frequency ω_c(0).
    pub fn idle_freq(&self) -> f64 {
        self.harmonic as f64 * self.fundamental
    }

    /// Largest allowed |detuning|, rad/ns.
    pub fn tuning_bound(&self) -> f64 {
        self.tuning_fraction * self.idle_freq()
    }
}

/// A spin ensemble in the collective low-excitation (bosonic) limit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinEnsembleSpec {
    pub label: String,
    /// Spin gap ω, rad/ns.
    pub gap: f64,
    /// Collective coupling Ḡ = √N g, rad/ns.
    pub gbar: f64,
    /// Optional microscopic book-keeping; if both are set they must satisfy
    /// Ḡ = √N g.
    pub spin_count: Option<f64>,
    pub g_single: Option<f64>,
    /// Label of the coupled resonator mode.
    pub mode: String,
}

/// CPB parameters: either the charge-basis Hamiltonian inputs or the
/// three-level transition gaps directly.
#[derive(Debug, Clone, PartialEq)]
pub enum CpbParams {
    /// Direct three-level description: gaps ω01 (= E1−E0) and ω12 (= E2−E1).
    Gaps { gap01: f64, gap12: f64 },
    /// Charge-basis inputs; gaps come from [`cpb_spectrum`].
    Raw { ec: f64, ej: f64, ng: f64, n_max: u32 },
}

/// Per-mode CPB couplings: `g0` drives the 0↔1 transition, `g1` the 1↔2.
#[derive(Debug, Clone, PartialEq)]
pub struct CpbCoupling {
    pub mode: String,
    pub g0: f64,
    pub g1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpbSpec {
    pub params: CpbParams,
    pub couplings: Vec<CpbCoupling>,
}

impl CpbSpec {
    /// Transition gaps (ω01, ω12) in rad/ns, diagonalizing if necessary.
    pub fn gaps(&self) -> Result<(f64, f64)> {
        match self.params {
            CpbParams::Gaps { gap01, gap12 } => Ok((gap01, gap12)),
            CpbParams::Raw { ec, ej, ng, n_max } => {
                let lv = cpb_spectrum(ec, ej, ng, n_max)?;
                Ok((lv.gap01, lv.gap12))
            }
        }
    }

    pub fn max_coupling(&self) -> f64 {
        self.couplings
            .iter()
            .flat_map(|c| [c.g0, c.g1])
            .fold(0.0, f64::max)
    }
}

/// The three lowest CPB eigenstates in the charge basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CpbLevels {
    /// E0 <= E1 <= E2, rad/ns.
    pub energies: [f64; 3],
    pub gap01: f64,
    pub gap12: f64,
    /// |⟨ψ0|n̂|ψ1⟩| and |⟨ψ1|n̂|ψ2⟩| (dimensionless, for reference).
    pub charge_elem01: f64,
    pub charge_elem12: f64,
}

/// Evanescent photon hopping between two modes of neighboring cavities.
#[derive(Debug, Clone, PartialEq)]
pub struct HoppingLink {
    pub modes: (String, String),
    /// Hopping rate κ, rad/ns.
    pub kappa: f64,
}

/// Full static device description.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviceSpec {
    pub name: String,
    pub description: String,
    pub modes: Vec<ModeSpec>,
    pub spins: Vec<SpinEnsembleSpec>,
    pub cpb: Option<CpbSpec>,
    pub hops: Vec<HoppingLink>,
    /// Per-mode photon loss rate Γ, rad/ns (absent = 0).
    pub loss: BTreeMap<String, f64>,
}

impl DeviceSpec {
    pub fn mode(&self, label: &str) -> Result<&ModeSpec> {
        self.modes
            .iter()
            .find(|m| m.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn spin(&self, label: &str) -> Result<&SpinEnsembleSpec> {
        self.spins
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn loss_rate(&self, mode: &str) -> f64 {
        self.loss.get(mode).copied().unwrap_or(0.0)
    }

    pub fn has_loss(&self) -> bool {
        self.loss.values().any(|&g| g > 0.0)
    }

    /// Spin ensemble coupled to the given mode, if any.
    pub fn spin_on_mode(&self, mode: &str) -> Option<&SpinEnsembleSpec> {
        self.spins.iter().find(|s| s.mode == mode)
    }
}

fn sorted_low_eigenpairs(h: &DMatrix<f64>, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().take(k).map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .take(k)
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (vals, vecs)
}

fn cpb_levels_at(ec: f64, ej: f64, ng: f64, n_max: u32) -> CpbLevels {
    let dim = (2 * n_max + 1) as usize;
    let mut h = DMatrix::zeros(dim, dim);
    let charges: Vec<f64> = (0..dim).map(|i| i as f64 - n_max as f64).collect();
    for (i, &n) in charges.iter().enumerate() {
        h[(i, i)] = 4.0 * ec * (n - ng).powi(2);
        if i + 1 < dim {
            h[(i, i + 1)] = -ej / 2.0;
            h[(i + 1, i)] = -ej / 2.0;
        }
    }
    let (vals, vecs) = sorted_low_eigenpairs(&h, 3);
    let elem = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .zip(&charges)
            .map(|((x, y), n)| x * y * n)
            .sum::<f64>()
            .abs()
    };
    CpbLevels {
        energies: [vals[0], vals[1], vals[2]],
        gap01: vals[1] - vals[0],
        gap12: vals[2] - vals[1],
        charge_elem01: elem(&vecs[0], &vecs[1]),
        charge_elem12: elem(&vecs[1], &vecs[2]),
    }
}

/// Diagonalize the CPB charge-basis Hamiltonian
/// `H = Σ 4E_C (n − n_g)² |n⟩⟨n| − E_J/2 (|n⟩⟨n+1| + h.c.)`
/// over n ∈ [−n_max, n_max] and return the three lowest levels.
///
/// The result must be converged in the charge cutoff: doubling `n_max` may
/// change the gaps by at most 1e-10 relative, otherwise this is an error.
pub fn cpb_spectrum(ec: f64, ej: f64, ng: f64, n_max: u32) -> Result<CpbLevels> {
    if n_max < 3 {
        return Err(Error::InvalidArgument(format!("n_max = {n_max}, need >= 3")));
    }
    if ec <= 0.0 {
        return Err(Error::InvalidArgument(format!("E_C = {ec}, need > 0")));
    }
    if ej < 0.0 {
        return Err(Error::InvalidArgument(format!("E_J = {ej}, need >= 0")));
    }
    let lv = cpb_levels_at(ec, ej, ng, n_max);
    let check = cpb_levels_at(ec, ej, ng, 2 * n_max);
    let scale = (check.gap01.abs() + check.gap12.abs()).max(ec.abs());
    for (name, a, b) in [("gap01", lv.gap01, check.gap01), ("gap12", lv.gap12, check.gap12)] {
        if (a - b).abs() > 1e-10 * scale {
            return Err(Error::NonConvergence(
                "cpb_spectrum",
                format!("{name} changes by {:.3e} (rel) when doubling n_max = {n_max}", (a - b).abs() / scale),
            ));
        }
    }
    Ok(lv)
}

/// Findings from checking a [`DeviceSpec`]: `errors` are broken invariants,
/// `warnings` are idle-regime ratios below [`RATIO_WARN`]. Ordering is
/// deterministic (declaration order of the device lists).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    /// Error if any invariant is broken.
    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(self.errors.join("\n")))
        }
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Check all structural invariants and idle-regime conditions of a device.
pub fn validate_device(dev: &DeviceSpec) -> ValidationReport {
    let mut rep = ValidationReport::default();
    if dev.modes.is_empty() {
        rep.errors.push("no modes defined".into());
    }
    let mut seen = std::collections::BTreeSet::new();
    for m in &dev.modes {
        if !seen.insert(m.label.clone()) {
            rep.errors.push(format!("duplicate mode label `{}`", m.label));
        }
        if m.harmonic < 1 {
            rep.errors.push(format!("mode `{}`: harmonic must be >= 1", m.label));
        }
        if m.fundamental <= 0.0 {
            rep.errors.push(format!("mode `{}`: fundamental must be > 0", m.label));
        }
        if !(0.0..=1.0).contains(&m.tuning_fraction) {
            rep.errors.push(format!("mode `{}`: tuning fraction must lie in [0, 1]", m.label));
        }
    }
    let mut seen_spin = std::collections::BTreeSet::new();
    for s in &dev.spins {
        if !seen_spin.insert(s.label.clone()) {
            rep.errors.push(format!("duplicate spin label `{}`", s.label));
        }
        if s.gbar <= 0.0 {
            rep.errors.push(format!("spin `{}`: collective coupling must be > 0", s.label));
        }
        if let (Some(n), Some(g)) = (s.spin_count, s.g_single) {
            let implied = n.sqrt() * g;
            if (s.gbar - implied).abs() > 1e-12 * s.gbar.abs() {
                rep.errors.push(format!(
                    "spin `{}`: Ḡ = {:.6e} inconsistent with √N·g = {:.6e}",
                    s.label, s.gbar, implied
                ));
            }
        }
        match dev.mode(&s.mode) {
            Err(_) => rep.errors.push(format!("spin `{}` references unknown mode `{}`", s.label, s.mode)),
            Ok(m) => {
                let det = (m.idle_freq() - s.gap).abs();
                if s.gbar > 0.0 && det < RATIO_WARN * s.gbar {
                    rep.warnings.push(format!(
                        "spin `{}`: idle resonance risk, |ω_c(0) − ω| / Ḡ = {:.2} < {}",
                        s.label,
                        det / s.gbar,
                        RATIO_WARN
                    ));
                }
            }
        }
    }
    if let Some(cpb) = &dev.cpb {
        match cpb.gaps() {
            Err(e) => rep.errors.push(format!("cpb: {e}")),
            Ok((g01, g12)) => {
                if g01 <= 0.0 || g12 <= 0.0 {
                    rep.errors.push("cpb: transition gaps must be positive".into());
                }
                let gmax = cpb.max_coupling();
                if gmax > 0.0 && (g01 - g12).abs() < RATIO_WARN * gmax {
                    rep.warnings.push(format!(
                        "cpb: anharmonicity |ω01 − ω12| / max(G) = {:.2} < {}",
                        (g01 - g12).abs() / gmax,
                        RATIO_WARN
                    ));
                }
            }
        }
        for c in &cpb.couplings {
            if dev.mode(&c.mode).is_err() {
                rep.errors.push(format!("cpb coupling references unknown mode `{}`", c.mode));
            }
            if c.g0 < 0.0 || c.g1 < 0.0 {
                rep.errors.push(format!("cpb coupling to `{}`: rates must be >= 0", c.mode));
            }
        }
    }
    for h in &dev.hops {
        if h.kappa <= 0.0 {
            rep.errors.push(format!("hop {}–{}: κ must be > 0", h.modes.0, h.modes.1));
        }
        if h.modes.0 == h.modes.1 {
            rep.errors.push(format!("hop {}–{}: modes must differ", h.modes.0, h.modes.1));
        }
        match (dev.mode(&h.modes.0), dev.mode(&h.modes.1)) {
            (Ok(a), Ok(b)) => {
                let det = (a.idle_freq() - b.idle_freq()).abs();
                if h.kappa > 0.0 && det < RATIO_WARN * h.kappa {
                    rep.warnings.push(format!(
                        "hop {}–{}: idle detuning ratio |Δω| / κ = {:.2} < {}",
                        h.modes.0,
                        h.modes.1,
                        det / h.kappa,
                        RATIO_WARN
                    ));
                }
            }
            _ => rep.errors.push(format!("hop {}–{} references unknown mode", h.modes.0, h.modes.1)),
        }
    }
    for (label, &g) in &dev.loss {
        if dev.mode(label).is_err() {
            rep.errors.push(format!("loss entry references unknown mode `{}`", label));
        }
        if g < 0.0 {
            rep.errors.push(format!("loss rate for `{}` must be >= 0", label));
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::ghz;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_at_half_gate_charge_without_josephson() {
        // With E_J = 0 the charge-basis matrix is diagonal and symmetric
        // about n_g = 0.5: n = 0 and n = 1 are exactly degenerate at E_C.
        let lv = cpb_spectrum(ghz(1.0), 0.0, 0.5, 10).unwrap();
        assert!(lv.gap01.abs() < 1e-12);
        assert_relative_eq!(lv.energies[0], ghz(1.0), max_relative = 1e-12);
    }

    #[test]
    fn reference_spectrum_is_anharmonic() {
        // E_C = 4.9 GHz, E_J = 6.2 E_C, n_g = 0.5. Reference gaps computed
        // with an independent dense diagonalization (numpy, n_max 20 and 40).
        let ec = ghz(4.9);
        let lv = cpb_spectrum(ec, 6.2 * ec, 0.5, 20).unwrap();
        assert_relative_eq!(lv.gap01, ghz(26.66917956170866), max_relative = 1e-9);
        assert_relative_eq!(lv.gap12, ghz(32.909963016983696), max_relative = 1e-9);
        assert!(lv.gap01 != lv.gap12);
        assert_relative_eq!(lv.charge_elem01, 0.6097699238189977, max_relative = 1e-8);
        assert_relative_eq!(lv.charge_elem12, 0.5610482626361100, max_relative = 1e-8);
    }

    #[test]
    fn spectrum_scales_linearly() {
        let lv1 = cpb_spectrum(ghz(4.9), ghz(30.38), 0.5, 20).unwrap();
        let lv2 = cpb_spectrum(3.0 * ghz(4.9), 3.0 * ghz(30.38), 0.5, 20).unwrap();
        assert_relative_eq!(lv2.gap01, 3.0 * lv1.gap01, max_relative = 1e-12);
        assert_relative_eq!(lv2.gap12, 3.0 * lv1.gap12, max_relative = 1e-12);
    }

    #[test]
    fn cutoff_invariance() {
        let ec = ghz(4.9);
        let a = cpb_spectrum(ec, 6.2 * ec, 0.5, 20).unwrap();
        let b = cpb_spectrum(ec, 6.2 * ec, 0.5, 30).unwrap();
        assert_relative_eq!(a.gap01, b.gap01, max_relative = 1e-10);
        assert_relative_eq!(a.gap12, b.gap12, max_relative = 1e-10);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(cpb_spectrum(ghz(1.0), 0.0, 0.5, 2).is_err());
        assert!(cpb_spectrum(-1.0, 0.0, 0.5, 10).is_err());
        assert!(cpb_spectrum(ghz(1.0), -1.0, 0.5, 10).is_err());
    }

    fn toy_device() -> DeviceSpec {
        DeviceSpec {
            name: "toy".into(),
            description: String::new(),
            modes: vec![ModeSpec { label: "A".into(), fundamental: ghz(22.0), harmonic: 1, tuning_fraction: 0.1 }],
            spins: vec![SpinEnsembleSpec {
                label: "A".into(),
                gap: ghz(20.0),
                gbar: crate::units::mhz(60.0),
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
    fn clean_device_validates() {
        let rep = validate_device(&toy_device());
        assert!(rep.is_ok(), "{rep}");
        assert!(rep.warnings.is_empty(), "{rep}");
    }

    #[test]
    fn idle_resonance_warns() {
        let mut dev = toy_device();
        dev.spins[0].gap = ghz(22.0);
        let rep = validate_device(&dev);
        assert!(rep.is_ok());
        assert_eq!(rep.warnings.len(), 1);
        assert!(rep.warnings[0].contains("idle resonance"));
    }

    #[test]
    fn duplicate_mode_label_is_error() {
        let mut dev = toy_device();
        dev.modes.push(dev.modes[0].clone());
        let rep = validate_device(&dev);
        assert!(rep.errors.iter().any(|e| e.contains("duplicate mode label")));
    }

    #[test]
    fn inconsistent_collective_coupling_is_error() {
        let mut dev = toy_device();
        dev.spins[0].spin_count = Some(1e12);
        dev.spins[0].g_single = Some(1e-3);
        let rep = validate_device(&dev);
        assert!(rep.errors.iter().any(|e| e.contains("inconsistent")));
    }
}
