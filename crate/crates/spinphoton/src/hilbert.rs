//! Excitation-capped product basis and sparse operators.
//!
//! A basis state is a photon occupation per mode, a collective excitation
//! number per spin ensemble (bosonic low-excitation limit), and a CPB level
//! j ∈ {0, 1, 2}. Every interaction retained by the rotating-wave form
//! conserves the total excitation k = Σn + Σm + j, so truncating at the
//! initial excitation number is exact rather than approximate.

use crate::device::DeviceSpec;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

/// Occupation-number label of one basis vector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    /// Photon number per mode, in device mode order.
    pub photons: Vec<u8>,
    /// Collective spin excitations per ensemble, in device spin order.
    pub spins: Vec<u8>,
    /// CPB level j ∈ {0, 1, 2} (0 when the device has no CPB).
    pub cpb: u8,
}

impl BasisState {
    /// Total excitation number k.
    pub fn excitation(&self) -> u32 {
        self.photons.iter().map(|&n| n as u32).sum::<u32>()
            + self.spins.iter().map(|&m| m as u32).sum::<u32>()
            + self.cpb as u32
    }
}

/// Ordered basis of all states with k <= cap, plus the index map.
#[derive(Debug, Clone)]
pub struct BasisIndex {
    pub mode_labels: Vec<String>,
    pub spin_labels: Vec<String>,
    pub has_cpb: bool,
    pub cap: u32,
    states: Vec<BasisState>,
    index: BTreeMap<BasisState, usize>,
}

impl BasisIndex {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn position(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn mode_pos(&self, label: &str) -> Result<usize> {
        self.mode_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Unit basis vector for a state.
    pub fn unit_vector(&self, s: &BasisState) -> Result<DVector<C64>> {
        let i = self
            .position(s)
            .ok_or_else(|| Error::UnknownLabel(format!("{s:?} not in basis")))?;
        let mut v = DVector::zeros(self.len());
        v[i] = C64::new(1.0, 0.0);
        Ok(v)
    }
}

/// Largest basis dimension built without an explicit override.
pub const DEFAULT_DIM_LIMIT: usize = 200_000;

/// Enumerate all product states with total excitation <= `cap`, ordered
/// lexicographically in (k, photons, spins, cpb).
pub fn build_basis(dev: &DeviceSpec, cap: u32) -> Result<BasisIndex> {
    build_basis_limited(dev, cap, DEFAULT_DIM_LIMIT)
}

pub fn build_basis_limited(dev: &DeviceSpec, cap: u32, dim_limit: usize) -> Result<BasisIndex> {
    let n_modes = dev.modes.len();
    let n_spins = dev.spins.len();
    let has_cpb = dev.cpb.is_some();
    let mut states = Vec::new();
    let mut occ = vec![0u8; n_modes + n_spins];
    fn rec(
        occ: &mut Vec<u8>,
        slot: usize,
        remaining: u32,
        n_modes: usize,
        has_cpb: bool,
        cap: u32,
        states: &mut Vec<BasisState>,
        dim_limit: usize,
    ) -> Result<()> {
        if slot == occ.len() {
            let cpb_max = if has_cpb { remaining.min(2) } else { 0 };
            for j in 0..=cpb_max {
                states.push(BasisState {
                    photons: occ[..n_modes].to_vec(),
                    spins: occ[n_modes..].to_vec(),
                    cpb: j as u8,
                });
                if states.len() > dim_limit {
                    // Count the full dimension for the error message.
                    let _ = cap;
                    return Err(Error::DimensionLimit { dim: states.len(), limit: dim_limit });
                }
            }
            return Ok(());
        }
        for n in 0..=remaining {
            occ[slot] = n as u8;
            rec(occ, slot + 1, remaining - n, n_modes, has_cpb, cap, states, dim_limit)?;
            occ[slot] = 0;
        }
        Ok(())
    }
    rec(&mut occ, 0, cap, n_modes, has_cpb, cap, &mut states, dim_limit)?;
    states.sort_by(|a, b| {
        (a.excitation(), &a.photons, &a.spins, a.cpb).cmp(&(b.excitation(), &b.photons, &b.spins, b.cpb))
    });
    let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    Ok(BasisIndex {
        mode_labels: dev.modes.iter().map(|m| m.label.clone()).collect(),
        spin_labels: dev.spins.iter().map(|s| s.label.clone()).collect(),
        has_cpb,
        cap,
        states,
        index,
    })
}

/// Sparse ladder and projector operators over a [`BasisIndex`].
#[derive(Debug, Clone)]
pub struct OperatorSet {
    /// Photon annihilation a_γ per mode label.
    pub photon_lower: BTreeMap<String, CsrMatrix>,
    /// Collective spin annihilation b_γ per ensemble label.
    pub spin_lower: BTreeMap<String, CsrMatrix>,
    /// CPB lowering |ψ_j⟩⟨ψ_{j+1}| for j = 0, 1.
    pub cpb_lower: [CsrMatrix; 2],
    /// CPB level projectors |ψ_j⟩⟨ψ_j| for j = 0, 1, 2.
    pub cpb_proj: [CsrMatrix; 3],
    /// Diagonal photon-number vectors per mode label (a†a).
    pub photon_number: BTreeMap<String, DVector<f64>>,
    /// Diagonal spin-number vectors per ensemble label (b†b).
    pub spin_number: BTreeMap<String, DVector<f64>>,
    /// Total-excitation diagonal K = Σ a†a + Σ b†b + Σ_j j |ψ_j⟩⟨ψ_j|.
    pub excitation: DVector<f64>,
}

/// Build all ladder operators over the basis.
pub fn build_operators(dev: &DeviceSpec, basis: &BasisIndex) -> Result<OperatorSet> {
    let dim = basis.len();
    let mut photon_lower = BTreeMap::new();
    let mut photon_number = BTreeMap::new();
    for (mi, m) in dev.modes.iter().enumerate() {
        if basis.mode_labels.get(mi) != Some(&m.label) {
            return Err(Error::Config("basis was not built from this device".into()));
        }
        let mut trip = Vec::new();
        let mut num = DVector::zeros(dim);
        for (i, s) in basis.states().iter().enumerate() {
            let n = s.photons[mi];
            num[i] = n as f64;
            if n > 0 {
                let mut t = s.clone();
                t.photons[mi] -= 1;
                let j = basis.position(&t).expect("lowering stays in basis");
                trip.push((j, i, C64::new((n as f64).sqrt(), 0.0)));
            }
        }
        photon_lower.insert(m.label.clone(), CsrMatrix::from_triplets(dim, trip));
        photon_number.insert(m.label.clone(), num);
    }
    let mut spin_lower = BTreeMap::new();
    let mut spin_number = BTreeMap::new();
    for (si, sp) in dev.spins.iter().enumerate() {
        let mut trip = Vec::new();
        let mut num = DVector::zeros(dim);
        for (i, s) in basis.states().iter().enumerate() {
            let m = s.spins[si];
            num[i] = m as f64;
            if m > 0 {
                let mut t = s.clone();
                t.spins[si] -= 1;
                let j = basis.position(&t).expect("lowering stays in basis");
                trip.push((j, i, C64::new((m as f64).sqrt(), 0.0)));
            }
        }
        spin_lower.insert(sp.label.clone(), CsrMatrix::from_triplets(dim, trip));
        spin_number.insert(sp.label.clone(), num);
    }
    let mut cpb_lower = [CsrMatrix::zeros(dim), CsrMatrix::zeros(dim)];
    let mut cpb_proj = [CsrMatrix::zeros(dim), CsrMatrix::zeros(dim), CsrMatrix::zeros(dim)];
    if basis.has_cpb {
        for j in 0..2usize {
            let mut trip = Vec::new();
            for (i, s) in basis.states().iter().enumerate() {
                if s.cpb as usize == j + 1 {
                    let mut t = s.clone();
                    t.cpb = j as u8;
                    let k = basis.position(&t).expect("cpb lowering stays in basis");
                    trip.push((k, i, C64::new(1.0, 0.0)));
                }
            }
            cpb_lower[j] = CsrMatrix::from_triplets(dim, trip);
        }
        for j in 0..3usize {
            let trip = basis
                .states()
                .iter()
                .enumerate()
                .filter(|(_, s)| s.cpb as usize == j)
                .map(|(i, _)| (i, i, C64::new(1.0, 0.0)));
            cpb_proj[j] = CsrMatrix::from_triplets(dim, trip);
        }
    }
    let mut excitation = DVector::zeros(dim);
    for (i, s) in basis.states().iter().enumerate() {
        excitation[i] = s.excitation() as f64;
    }
    Ok(OperatorSet {
        photon_lower,
        spin_lower,
        cpb_lower,
        cpb_proj,
        photon_number,
        spin_number,
        excitation,
    })
}

/// Which frame the Hamiltonian is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Picture {
    /// Full H(t) including the static diagonal.
    Schrodinger,
    /// Static diagonal removed; couplings dressed with e^{i(E_r − E_c)t}
    /// phases from the idle frequencies, detunings kept as explicit
    /// diagonal terms.
    Interaction,
}

impl std::str::FromStr for Picture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "schrodinger" | "schrödinger" => Ok(Picture::Schrodinger),
            "interaction" => Ok(Picture::Interaction),
            other => Err(Error::InvalidArgument(format!("unknown picture `{other}`"))),
        }
    }
}

/// Pre-assembled pieces of the Hamiltonian of a device over a basis.
#[derive(Debug, Clone)]
pub struct HamiltonianTerms {
    pub basis: BasisIndex,
    /// Idle diagonal H0 = H_spin + H_CPB + H_ph(0), rad/ns per state.
    pub idle_energy: DVector<f64>,
    /// Static spin-photon and CPB-photon couplings (Hermitian, off-diagonal).
    pub interaction: CsrMatrix,
    /// Static photon-hopping terms (Hermitian, off-diagonal).
    pub hopping: CsrMatrix,
    /// Photon-number diagonals used by the time-dependent detuning part
    /// Σ_γ Δ_γ(t) a†_γ a_γ and by the loss diagonal.
    pub photon_number: BTreeMap<String, DVector<f64>>,
    /// Per-mode loss rates Γ_γ (rad/ns), zero entries omitted.
    pub loss: BTreeMap<String, f64>,
    /// Total-excitation diagonal.
    pub excitation: DVector<f64>,
}

impl HamiltonianTerms {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Static off-diagonal part (interaction + hopping).
    pub fn offdiag(&self) -> CsrMatrix {
        self.interaction.add_scaled(&self.hopping, C64::new(1.0, 0.0))
    }

    /// Diagonal of the Hamiltonian at given per-mode detunings: Schrödinger
    /// picture includes the idle diagonal, interaction picture does not.
    /// With `loss` on, each photon number contributes −iΓ_γ.
    pub fn diagonal(
        &self,
        detunings: &BTreeMap<String, f64>,
        picture: Picture,
        loss: bool,
    ) -> DVector<C64> {
        let dim = self.dim();
        let mut d: DVector<C64> = DVector::zeros(dim);
        if picture == Picture::Schrodinger {
            for i in 0..dim {
                d[i] = C64::new(self.idle_energy[i], 0.0);
            }
        }
        for (label, &delta) in detunings {
            if let Some(n) = self.photon_number.get(label) {
                for i in 0..dim {
                    d[i] += C64::new(delta * n[i], 0.0);
                }
            }
        }
        if loss {
            for (label, &gamma) in &self.loss {
                let n = &self.photon_number[label];
                for i in 0..dim {
                    d[i] += C64::new(0.0, -gamma * n[i]);
                }
            }
        }
        d
    }

    /// Full sparse Hamiltonian at time `t` for the given detunings.
    pub fn assemble(
        &self,
        detunings: &BTreeMap<String, f64>,
        picture: Picture,
        t: f64,
        loss: bool,
    ) -> CsrMatrix {
        let d = self.diagonal(detunings, picture, loss);
        let offdiag = self.offdiag();
        let mut trip: Vec<(usize, usize, C64)> = Vec::new();
        for i in 0..self.dim() {
            if d[i] != C64::new(0.0, 0.0) {
                trip.push((i, i, d[i]));
            }
        }
        for (r, c, v) in offdiag.iter() {
            let v = match picture {
                Picture::Schrodinger => v,
                Picture::Interaction => {
                    let delta = self.idle_energy[r] - self.idle_energy[c];
                    v * C64::new(0.0, delta * t).exp()
                }
            };
            trip.push((r, c, v));
        }
        CsrMatrix::from_triplets(self.dim(), trip)
    }
}

/// Assemble the static terms of the device Hamiltonian over a basis.
pub fn build_hamiltonian(dev: &DeviceSpec, basis: &BasisIndex) -> Result<HamiltonianTerms> {
    let ops = build_operators(dev, basis)?;
    let dim = basis.len();
    let cpb_gaps = match &dev.cpb {
        Some(c) => Some(c.gaps()?),
        None => None,
    };
    let mut idle = DVector::zeros(dim);
    for (i, s) in basis.states().iter().enumerate() {
        let mut e = 0.0;
        for (mi, m) in dev.modes.iter().enumerate() {
            e += s.photons[mi] as f64 * m.idle_freq();
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
        idle[i] = e;
    }
    // Couplings: (Ḡ/2) a† b and (G_j/2) a† |ψ_j⟩⟨ψ_{j+1}|, plus h.c.
    let one = C64::new(1.0, 0.0);
    let mut interaction = CsrMatrix::zeros(dim);
    for sp in &dev.spins {
        let a = &ops.photon_lower[&sp.mode];
        let b = &ops.spin_lower[&sp.label];
        let term = a.adjoint().matmul(b).scale(C64::new(sp.gbar / 2.0, 0.0));
        interaction = interaction.add_scaled(&term, one).add_scaled(&term.adjoint(), one);
    }
    if let Some(cpb) = &dev.cpb {
        for c in &cpb.couplings {
            let a = ops
                .photon_lower
                .get(&c.mode)
                .ok_or_else(|| Error::UnknownLabel(c.mode.clone()))?;
            for (j, g) in [(0usize, c.g0), (1usize, c.g1)] {
                if g == 0.0 {
                    continue;
                }
                let term = a.adjoint().matmul(&ops.cpb_lower[j]).scale(C64::new(g / 2.0, 0.0));
                interaction = interaction.add_scaled(&term, one).add_scaled(&term.adjoint(), one);
            }
        }
    }
    // Hopping: −κ a†_1 a_2 + h.c.
    let mut hopping = CsrMatrix::zeros(dim);
    for h in &dev.hops {
        let a1 = ops
            .photon_lower
            .get(&h.modes.0)
            .ok_or_else(|| Error::UnknownLabel(h.modes.0.clone()))?;
        let a2 = ops
            .photon_lower
            .get(&h.modes.1)
            .ok_or_else(|| Error::UnknownLabel(h.modes.1.clone()))?;
        let term = a1.adjoint().matmul(a2).scale(C64::new(-h.kappa, 0.0));
        hopping = hopping.add_scaled(&term, one).add_scaled(&term.adjoint(), one);
    }
    let loss: BTreeMap<String, f64> = dev
        .loss
        .iter()
        .filter(|(_, &g)| g != 0.0)
        .map(|(k, &g)| (k.clone(), g))
        .collect();
    Ok(HamiltonianTerms {
        basis: basis.clone(),
        idle_energy: idle,
        interaction,
        hopping,
        photon_number: ops.photon_number.clone(),
        loss,
        excitation: ops.excitation.clone(),
    })
}

/// Resolve a named state: the logical two-qubit labels `00`, `01`, `10`,
/// `11` (first digit = qubit of the first declared spin ensemble; digit 1 =
/// photon in its mode, digit 0 = collective spin excitation), or one of the
/// CZ auxiliary labels `eta`, `xi`, `zeta`.
pub fn logical_basis_state(dev: &DeviceSpec, label: &str) -> Result<BasisState> {
    let n_modes = dev.modes.len();
    let n_spins = dev.spins.len();
    let vac = BasisState { photons: vec![0; n_modes], spins: vec![0; n_spins], cpb: 0 };
    let qubit_modes: Vec<usize> = dev
        .spins
        .iter()
        .map(|s| dev.modes.iter().position(|m| m.label == s.mode).unwrap_or(usize::MAX))
        .collect();
    match label {
        "00" | "01" | "10" | "11" => {
            if n_spins != 2 || qubit_modes.iter().any(|&q| q == usize::MAX) {
                return Err(Error::UnknownLabel(format!(
                    "logical label `{label}` needs a two-qubit device"
                )));
            }
            let mut s = vac;
            for (q, ch) in label.chars().enumerate() {
                if ch == '1' {
                    s.photons[qubit_modes[q]] = 1;
                } else {
                    s.spins[q] = 1;
                }
            }
            Ok(s)
        }
        "eta" | "xi" | "zeta" => {
            let cpb = dev
                .cpb
                .as_ref()
                .ok_or_else(|| Error::UnknownLabel(format!("`{label}` needs a CPB")))?;
            let cpb_modes: Vec<usize> = cpb
                .couplings
                .iter()
                .map(|c| dev.modes.iter().position(|m| m.label == c.mode).unwrap_or(usize::MAX))
                .collect();
            if cpb_modes.len() < 2 || cpb_modes.iter().any(|&q| q == usize::MAX) {
                return Err(Error::UnknownLabel(format!("`{label}` needs two CPB-coupled modes")));
            }
            let mut s = vac;
            let scalable = !dev.hops.is_empty();
            match (label, scalable) {
                ("eta", true) => {
                    s.photons[cpb_modes[0]] = 1;
                    s.photons[cpb_modes[1]] = 1;
                }
                ("xi", true) => {
                    s.cpb = 1;
                    s.photons[cpb_modes[1]] = 1;
                }
                ("zeta", _) => s.cpb = 2,
                // Single-cavity variant: the CPB holds the first qubit's
                // excitation while the second photon is still in its mode.
                ("eta", false) => {
                    s.cpb = 1;
                    if n_spins != 2 || qubit_modes[1] == usize::MAX {
                        return Err(Error::UnknownLabel("`eta` needs a two-qubit device".into()));
                    }
                    s.photons[qubit_modes[1]] = 1;
                }
                ("xi", false) => s.cpb = 2,
                _ => unreachable!(),
            }
            Ok(s)
        }
        other => Err(Error::UnknownLabel(other.to_string())),
    }
}

/// Unit state vector for a named state; see [`logical_basis_state`].
pub fn logical_state(dev: &DeviceSpec, basis: &BasisIndex, label: &str) -> Result<DVector<C64>> {
    basis.unit_vector(&logical_basis_state(dev, label)?)
}
