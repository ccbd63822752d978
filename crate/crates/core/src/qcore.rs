//! Exact complex linear algebra for one- and two-qubit objects.
//!
//! Everything downstream — the protocol simulation, the unscrambling rule,
//! and both maximum-likelihood reconstructions — is built on the types here:
//! pure states, density matrices, Pauli operators, Bell states, and the four
//! branch-correction unitaries of the teleportation identity.
//!
//! Conventions fixed once for the whole crate:
//!
//! * computational basis |0⟩ = H, |1⟩ = V; two-qubit basis ordered
//!   |00⟩, |01⟩, |10⟩, |11⟩;
//! * fidelity against a pure target is F(ρ, |φ⟩) = ⟨φ|ρ|φ⟩ (no square root);
//! * invariant checks at 1e-10, state-vector norms at 1e-12.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Dense complex matrix used throughout the crate (dimensions are tiny).
pub type CMatrix = DMatrix<C64>;
/// Dense complex vector.
pub type CVector = DVector<C64>;

/// Entrywise tolerance for Hermiticity and trace checks.
pub const INVARIANT_TOL: f64 = 1e-10;
/// Tolerance on eigenvalue non-negativity of density matrices.
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance on state-vector normalization.
pub const NORM_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

// ───────────────────────────── labels and indices ───────────────────────────

/// The six canonical polarisation states prepared on the late photon.
///
/// D/A are the ±1 eigenstates of σ₁, R/L of σ₂, H/V of σ₃.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl StateLabel {
    pub const ALL: [StateLabel; 6] = [
        StateLabel::H,
        StateLabel::V,
        StateLabel::D,
        StateLabel::A,
        StateLabel::R,
        StateLabel::L,
    ];

    /// The canonical single-qubit state this label denotes.
    pub fn state(self) -> PureState {
        let amps = match self {
            StateLabel::H => vec![c(1.0, 0.0), c(0.0, 0.0)],
            StateLabel::V => vec![c(0.0, 0.0), c(1.0, 0.0)],
            StateLabel::D => vec![c(INV_SQRT2, 0.0), c(INV_SQRT2, 0.0)],
            StateLabel::A => vec![c(INV_SQRT2, 0.0), c(-INV_SQRT2, 0.0)],
            StateLabel::R => vec![c(INV_SQRT2, 0.0), c(0.0, INV_SQRT2)],
            StateLabel::L => vec![c(INV_SQRT2, 0.0), c(0.0, -INV_SQRT2)],
        };
        PureState::new(CVector::from_vec(amps)).expect("canonical states are normalized")
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::H => "H",
            StateLabel::V => "V",
            StateLabel::D => "D",
            StateLabel::A => "A",
            StateLabel::R => "R",
            StateLabel::L => "L",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownState(s.to_string()))
    }
}

impl std::fmt::Display for StateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StateLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Index m ∈ {0,1,2,3} into the set {σ₀=𝟙, σ₁, σ₂, σ₃}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliIndex {
    Identity = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl PauliIndex {
    pub const ALL: [PauliIndex; 4] = [
        PauliIndex::Identity,
        PauliIndex::X,
        PauliIndex::Y,
        PauliIndex::Z,
    ];
    /// The three measurement bases used for tomography (σ₀ carries no
    /// information and is excluded).
    pub const TOMOGRAPHIC: [PauliIndex; 3] = [PauliIndex::X, PauliIndex::Y, PauliIndex::Z];

    pub fn from_index(m: usize) -> Result<Self> {
        Self::ALL.get(m).copied().ok_or(Error::IndexOutOfRange {
            what: "Pauli index",
            index: m,
        })
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_tomographic(self) -> bool {
        self != PauliIndex::Identity
    }

    /// The 2×2 matrix of σ_m.
    pub fn matrix(self) -> CMatrix {
        let entries = match self {
            PauliIndex::Identity => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            PauliIndex::X => [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            PauliIndex::Y => [c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
            PauliIndex::Z => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        };
        CMatrix::from_row_slice(2, 2, &entries)
    }

    /// Projector onto the ±1 eigenspace: (𝟙 ± σ_m)/2.
    pub fn projector(self, sign: f64) -> CMatrix {
        let id = PauliIndex::Identity.matrix();
        (id + self.matrix() * c(sign, 0.0)) * c(0.5, 0.0)
    }
}

/// The exact matrix of σ_m.
pub fn pauli(m: PauliIndex) -> CMatrix {
    m.matrix()
}

/// Outcome of a Bell measurement, λ_i ↔ {Φ⁺, Ψ⁺, Ψ⁻, Φ⁻}.
///
/// The ordering matches the branch expansion of the teleportation identity:
/// outcome λ_i means the early qubit carries τ_i|ψ⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellOutcome {
    PhiPlus = 0,
    PsiPlus = 1,
    PsiMinus = 2,
    PhiMinus = 3,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
        BellOutcome::PhiMinus,
    ];

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL.get(i).copied().ok_or(Error::IndexOutOfRange {
            what: "Bell outcome",
            index: i,
        })
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// The two-qubit Bell state this outcome projects onto.
    pub fn state(self) -> PureState {
        let s = INV_SQRT2;
        let amps = match self {
            BellOutcome::PhiPlus => vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)],
            BellOutcome::PsiPlus => vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)],
            BellOutcome::PsiMinus => vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)],
            BellOutcome::PhiMinus => vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-s, 0.0)],
        };
        PureState::new(CVector::from_vec(amps)).expect("Bell states are normalized")
    }

    /// The branch unitary τ_i associated with this outcome.
    pub fn correction(self) -> CorrectionUnitary {
        CorrectionUnitary::new(self.index()).expect("Bell index is in range")
    }
}

/// One of the four branch unitaries τ_i ∈ {𝟙, σ₁, iσ₂, σ₃}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CorrectionUnitary(usize);

impl CorrectionUnitary {
    pub const ALL: [CorrectionUnitary; 4] = [
        CorrectionUnitary(0),
        CorrectionUnitary(1),
        CorrectionUnitary(2),
        CorrectionUnitary(3),
    ];

    pub fn new(i: usize) -> Result<Self> {
        if i < 4 {
            Ok(CorrectionUnitary(i))
        } else {
            Err(Error::IndexOutOfRange {
                what: "correction unitary",
                index: i,
            })
        }
    }

    pub fn index(self) -> usize {
        self.0
    }

    /// The exact 2×2 matrix: τ₀=𝟙, τ₁=σ₁, τ₂=iσ₂, τ₃=σ₃.
    pub fn matrix(self) -> CMatrix {
        match self.0 {
            0 => PauliIndex::Identity.matrix(),
            1 => PauliIndex::X.matrix(),
            2 => PauliIndex::Y.matrix() * c(0.0, 1.0),
            3 => PauliIndex::Z.matrix(),
            _ => unreachable!(),
        }
    }
}

// ──────────────────────────────── pure states ───────────────────────────────

/// A normalized pure state of one or two qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Wraps an amplitude vector, requiring unit norm within 1e-12.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let d = amplitudes.len();
        if d != 2 && d != 4 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: d,
            });
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "squared norm {norm_sq} differs from 1 by more than {NORM_TOL}"
            )));
        }
        Ok(PureState { amplitudes })
    }

    /// Normalizes an arbitrary nonzero vector into a state.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm_sq: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(v / c(norm_sq.sqrt(), 0.0))
    }

    /// Computational basis state |k⟩ of dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: dim,
            });
        }
        if k >= dim {
            return Err(Error::IndexOutOfRange {
                what: "basis state",
                index: k,
            });
        }
        let mut v = CVector::zeros(dim);
        v[k] = c(1.0, 0.0);
        Self::new(v)
    }

    /// A Haar-random single-qubit state.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = CVector::from_fn(2, |_, _| {
                c(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            if let Ok(s) = Self::normalized(v) {
                return s;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, k: usize) -> C64 {
        self.amplitudes[k]
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// The projector |ψ⟩⟨ψ|.
    pub fn projector(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n, |r, k| self.amplitudes[r] * self.amplitudes[k].conj())
    }

    /// ⟨ψ|M|ψ⟩ for an arbitrary matrix of matching dimension.
    pub fn quadratic_form(&self, m: &CMatrix) -> Result<C64> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: m.nrows(),
            });
        }
        Ok(self.amplitudes.dotc(&(m * &self.amplitudes)))
    }
}

// ─────────────────────────────── density matrices ───────────────────────────

/// A d×d complex Hermitian, positive-semidefinite, unit-trace matrix (d = 2 or 4).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity and trace at 1e-10 and eigenvalue
    /// non-negativity at −1e-10. Violations are errors, never clamped.
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_psd_tolerance(entries, PSD_TOL)
    }

    /// Like [`DensityMatrix::new`] but with an explicit eigenvalue slack.
    ///
    /// Reference matrices printed to two or three decimals can acquire
    /// slightly negative eigenvalues from rounding; they are loaded with a
    /// slack on the scale of the rounding instead of the strict 1e-10.
    pub fn with_psd_tolerance(entries: CMatrix, psd_tol: f64) -> Result<Self> {
        let d = entries.nrows();
        if entries.ncols() != d || (d != 2 && d != 4) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: entries.ncols(),
            });
        }
        let herm_dev = hermiticity_deviation(&entries);
        if herm_dev > INVARIANT_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian: max entry deviation {herm_dev:.3e}"
            )));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > INVARIANT_TOL || tr.im.abs() > INVARIANT_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let min_eig = hermitian_eigenvalues(&entries)
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -psd_tol {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig:.3e} below tolerance {psd_tol:.1e}"
            )));
        }
        Ok(DensityMatrix { entries })
    }

    /// Projects a nearly-valid matrix onto the physical set: Hermitizes,
    /// clamps negative eigenvalues to zero, and renormalizes the trace.
    ///
    /// This is the one sanctioned clamping path. The iterative
    /// reconstructions use it on their final iterate (which is positive up
    /// to rounding on the order of machine epsilon), and the reference
    /// source matrix uses it before driving the simulation, where genuinely
    /// non-negative probabilities are required.
    pub fn project_to_physical(m: &CMatrix) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d || (d != 2 && d != 4) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: m.ncols(),
            });
        }
        let herm = (m + m.adjoint()) * c(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let mut rebuilt = CMatrix::zeros(d, d);
        let mut total = 0.0;
        for (k, &ev) in eig.eigenvalues.iter().enumerate() {
            let ev = ev.max(0.0);
            total += ev;
            if ev > 0.0 {
                let col = eig.eigenvectors.column(k);
                for r in 0..d {
                    for s in 0..d {
                        rebuilt[(r, s)] += col[r] * col[s].conj() * c(ev, 0.0);
                    }
                }
            }
        }
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidDensityMatrix(
                "matrix has no positive spectral weight".into(),
            ));
        }
        rebuilt /= c(total, 0.0);
        Ok(DensityMatrix { entries: rebuilt })
    }

    /// |ψ⟩⟨ψ| as a density matrix.
    pub fn from_pure(psi: &PureState) -> Self {
        DensityMatrix {
            entries: psi.projector(),
        }
    }

    /// 𝟙/d.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: dim,
            });
        }
        Ok(DensityMatrix {
            entries: CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0),
        })
    }

    /// A random full-rank state from the Ginibre ensemble, ρ = GG†/Tr(GG†).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: dim,
            });
        }
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = &g * g.adjoint();
        Self::project_to_physical(&m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        0.5 * trace_norm(&(&self.entries - &other.entries))
    }
}

// ─────────────────────────────────── ops ────────────────────────────────────

/// Fidelity of a state against a pure target, F = ⟨φ|ρ|φ⟩.
///
/// This convention (no square root) is what the reference tables report.
pub fn fidelity_pure(rho: &DensityMatrix, target: &PureState) -> Result<f64> {
    if rho.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: target.dim(),
        });
    }
    Ok(target.quadratic_form(rho.matrix())?.re)
}

/// Applies a branch unitary: ψ ↦ τ_i|ψ⟩.
pub fn apply_correction(psi: &PureState, tau: CorrectionUnitary) -> Result<PureState> {
    if psi.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: psi.dim(),
        });
    }
    PureState::new(tau.matrix() * psi.amplitudes())
}

/// Tr(ρ σ_m) for a single-qubit state.
pub fn expectation(rho: &DensityMatrix, m: PauliIndex) -> f64 {
    assert_eq!(
        rho.dim(),
        2,
        "expectation is defined for single-qubit states"
    );
    (rho.matrix() * m.matrix()).trace().re
}

/// Kronecker product a ⊗ b.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Which tensor factor an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of a two-qubit state over one qubit.
pub fn partial_trace(rho: &DensityMatrix, traced: Subsystem) -> Result<DensityMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    let reduced = partial_trace_mat(rho.matrix(), (2, 2), traced)?;
    DensityMatrix::new(reduced)
}

/// Partial trace of a bipartite matrix with factor dimensions `dims`.
pub fn partial_trace_mat(m: &CMatrix, dims: (usize, usize), traced: Subsystem) -> Result<CMatrix> {
    let (da, db) = dims;
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(Error::DimensionMismatch {
            expected: da * db,
            actual: m.nrows(),
        });
    }
    match traced {
        Subsystem::Second => {
            let mut out = CMatrix::zeros(da, da);
            for a in 0..da {
                for ap in 0..da {
                    let mut s = c(0.0, 0.0);
                    for b in 0..db {
                        s += m[(a * db + b, ap * db + b)];
                    }
                    out[(a, ap)] = s;
                }
            }
            Ok(out)
        }
        Subsystem::First => {
            let mut out = CMatrix::zeros(db, db);
            for b in 0..db {
                for bp in 0..db {
                    let mut s = c(0.0, 0.0);
                    for a in 0..da {
                        s += m[(a * db + b, a * db + bp)];
                    }
                    out[(b, bp)] = s;
                }
            }
            Ok(out)
        }
    }
}

/// Embeds an operator acting on the qubits listed in `positions` (most
/// significant first) into the full `n_qubits` register, identity elsewhere.
pub fn embed_operator(op: &CMatrix, positions: &[usize], n_qubits: usize) -> Result<CMatrix> {
    let k = positions.len();
    let dk = 1usize << k;
    if op.nrows() != dk || op.ncols() != dk {
        return Err(Error::DimensionMismatch {
            expected: dk,
            actual: op.nrows(),
        });
    }
    if positions.iter().any(|&p| p >= n_qubits) {
        return Err(Error::IndexOutOfRange {
            what: "qubit position",
            index: *positions.iter().max().unwrap(),
        });
    }
    let d = 1usize << n_qubits;
    let rest: Vec<usize> = (0..n_qubits).filter(|q| !positions.contains(q)).collect();
    // bit q of a basis index, with qubit 0 the most significant
    let bit = |index: usize, q: usize| (index >> (n_qubits - 1 - q)) & 1;
    let mut out = CMatrix::zeros(d, d);
    for r in 0..d {
        for col in 0..d {
            if rest.iter().any(|&q| bit(r, q) != bit(col, q)) {
                continue;
            }
            let mut ri = 0;
            let mut ci = 0;
            for &p in positions {
                ri = (ri << 1) | bit(r, p);
                ci = (ci << 1) | bit(col, p);
            }
            out[(r, col)] = op[(ri, ci)];
        }
    }
    Ok(out)
}

/// Traces a multi-qubit matrix down to the qubits listed in `keep`
/// (most significant first in the output ordering).
pub fn partial_trace_keep(m: &CMatrix, n_qubits: usize, keep: &[usize]) -> Result<CMatrix> {
    let d = 1usize << n_qubits;
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: m.nrows(),
        });
    }
    if keep.iter().any(|&p| p >= n_qubits) {
        return Err(Error::IndexOutOfRange {
            what: "qubit position",
            index: *keep.iter().max().unwrap(),
        });
    }
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
    let dk = 1usize << keep.len();
    let dt = 1usize << traced.len();
    let bit = |index: usize, q: usize| (index >> (n_qubits - 1 - q)) & 1;
    let assemble = |kept_bits: usize, traced_bits: usize| -> usize {
        let mut idx = 0;
        for q in 0..n_qubits {
            let b = if let Some(pos) = keep.iter().position(|&p| p == q) {
                (kept_bits >> (keep.len() - 1 - pos)) & 1
            } else {
                let pos = traced.iter().position(|&p| p == q).unwrap();
                (traced_bits >> (traced.len() - 1 - pos)) & 1
            };
            idx = (idx << 1) | b;
        }
        idx
    };
    let _ = bit;
    let mut out = CMatrix::zeros(dk, dk);
    for r in 0..dk {
        for col in 0..dk {
            let mut s = c(0.0, 0.0);
            for t in 0..dt {
                s += m[(assemble(r, t), assemble(col, t))];
            }
            out[(r, col)] = s;
        }
    }
    Ok(out)
}

// ─────────────────────────────── linalg helpers ─────────────────────────────

/// Max entrywise deviation from Hermiticity.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..m.nrows() {
        for col in 0..m.ncols() {
            dev = dev.max((m[(r, col)] - m[(col, r)].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 2 {
        // closed form for the 2×2 case
        let half_tr = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
        let det = m[(0, 0)].re * m[(1, 1)].re - m[(0, 1)].norm_sqr();
        let disc = (half_tr * half_tr - det).max(0.0).sqrt();
        return vec![half_tr - disc, half_tr + disc];
    }
    let mut ev: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Trace norm ‖M‖₁ = Σ|λ| of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|e| e.abs()).sum()
}

/// ½‖A − B‖₁ for Hermitian A, B.
pub fn trace_distance_mat(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * trace_norm(&(a - b))
}

/// Largest |A_ij − B_ij|.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..a.nrows() {
        for col in 0..a.ncols() {
            dev = dev.max((a[(r, col)] - b[(r, col)]).norm());
        }
    }
    dev
}

// ───────────────────────────── JSON matrix format ───────────────────────────

/// A complex matrix serialized as nested row-major arrays of `[re, im]`
/// pairs — the interchange format used by every file this toolkit reads or
/// writes.
#[derive(Debug, Clone, PartialEq)]
pub struct JsonMatrix(pub CMatrix);

impl Serialize for JsonMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.0.nrows())
            .map(|r| {
                (0..self.0.ncols())
                    .map(|col| [self.0[(r, col)].re, self.0[(r, col)].im])
                    .collect()
            })
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for JsonMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let n = rows.len();
        if n == 0 {
            return Err(D::Error::custom("matrix has no rows"));
        }
        let m = rows[0].len();
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(D::Error::custom("matrix rows have inconsistent lengths"));
        }
        let mat = CMatrix::from_fn(n, m, |r, col| c(rows[r][col][0], rows[r][col][1]));
        Ok(JsonMatrix(mat))
    }
}

/// Serializes a matrix to the interchange JSON value.
pub fn matrix_to_json(m: &CMatrix) -> serde_json::Value {
    serde_json::to_value(JsonMatrix(m.clone())).expect("matrix serialization cannot fail")
}

/// Parses a matrix from the interchange JSON value.
pub fn matrix_from_json(v: &serde_json::Value) -> Result<CMatrix> {
    let jm: JsonMatrix =
        serde_json::from_value(v.clone()).map_err(|e| Error::MalformedMatrix(e.to_string()))?;
    Ok(jm.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn mat2(rows: [[C64; 2]; 2]) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[rows[0][0], rows[0][1], rows[1][0], rows[1][1]])
    }

    #[test]
    fn pauli_matrices_are_standard() {
        assert_eq!(pauli(PauliIndex::Identity), CMatrix::identity(2, 2));
        let z = pauli(PauliIndex::Z);
        assert_eq!(z[(0, 0)], c(1.0, 0.0));
        assert_eq!(z[(1, 1)], c(-1.0, 0.0));
        // Pauli involution
        let x = pauli(PauliIndex::X);
        assert!(max_abs_diff(&(&x * &x), &CMatrix::identity(2, 2)) < 1e-15);
        for m in PauliIndex::ALL {
            let p = m.matrix();
            assert!(
                hermiticity_deviation(&p) < 1e-15,
                "σ_{} Hermitian",
                m.index()
            );
            assert!(max_abs_diff(&(&p * p.adjoint()), &CMatrix::identity(2, 2)) < 1e-15);
        }
    }

    #[test]
    fn pauli_index_range_checked() {
        assert!(PauliIndex::from_index(4).is_err());
        assert_eq!(PauliIndex::from_index(2).unwrap(), PauliIndex::Y);
    }

    #[test]
    fn fidelity_of_pure_state_with_itself_is_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            let psi = PureState::random(&mut rng);
            let rho = DensityMatrix::from_pure(&psi);
            assert!((fidelity_pure(&rho, &psi).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_of_maximally_mixed_is_half() {
        let mm = DensityMatrix::maximally_mixed(2).unwrap();
        for label in StateLabel::ALL {
            assert!((fidelity_pure(&mm, &label.state()).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let mm = DensityMatrix::maximally_mixed(2).unwrap();
        let bell = BellOutcome::PhiPlus.state();
        assert!(fidelity_pure(&mm, &bell).is_err());
    }

    #[test]
    fn correction_matrices_are_the_stated_set() {
        let expected = [
            mat2([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]),
            mat2([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]),
            // iσ₂ is real
            mat2([[c(0.0, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 0.0)]]),
            mat2([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]),
        ];
        for (tau, want) in CorrectionUnitary::ALL.iter().zip(&expected) {
            assert_eq!(&tau.matrix(), want);
        }
        assert!(CorrectionUnitary::new(4).is_err());
    }

    #[test]
    fn corrections_map_canonical_states() {
        // identity branch leaves |D⟩ alone
        let d = StateLabel::D.state();
        let out = apply_correction(&d, CorrectionUnitary::new(0).unwrap()).unwrap();
        assert!((out.inner(&d).unwrap().norm() - 1.0).abs() < 1e-12);
        // σ₃ branch sends |D⟩ to |A⟩
        let out = apply_correction(&d, CorrectionUnitary::new(3).unwrap()).unwrap();
        assert!((out.inner(&StateLabel::A.state()).unwrap().norm() - 1.0).abs() < 1e-12);
        // σ₁ flips |0⟩ to |1⟩
        let h = StateLabel::H.state();
        let out = apply_correction(&h, CorrectionUnitary::new(1).unwrap()).unwrap();
        assert!((out.inner(&StateLabel::V.state()).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corrected_projector_has_unit_fidelity_with_corrected_state() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..25 {
            let psi = PureState::random(&mut rng);
            for tau in CorrectionUnitary::ALL {
                let mapped = apply_correction(&psi, tau).unwrap();
                let rho = DensityMatrix::from_pure(&mapped);
                assert!((fidelity_pure(&rho, &mapped).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expectation_on_eigenstates() {
        let h = DensityMatrix::from_pure(&StateLabel::H.state());
        assert!((expectation(&h, PauliIndex::Z) - 1.0).abs() < 1e-12);
        let d = DensityMatrix::from_pure(&StateLabel::D.state());
        assert!((expectation(&d, PauliIndex::X) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_matches_eigen_oracle_on_random_states() {
        // oracle: Σ_k p_k ⟨e_k|σ_m|e_k⟩ from an explicit eigendecomposition
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..20 {
            let rho = DensityMatrix::random(2, &mut rng).unwrap();
            let eig = rho.matrix().clone().symmetric_eigen();
            for m in PauliIndex::TOMOGRAPHIC {
                let sigma = m.matrix();
                let mut oracle = 0.0;
                for k in 0..2 {
                    let v: CVector = eig.eigenvectors.column(k).into_owned();
                    oracle += eig.eigenvalues[k] * v.dotc(&(&sigma * &v)).re;
                }
                assert!((expectation(&rho, m) - oracle).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tensor_and_partial_trace_basics() {
        let id2 = CMatrix::identity(2, 2);
        assert_eq!(tensor(&id2, &id2), CMatrix::identity(4, 4));

        // maximally entangled state reduces to 𝟙/2 on either side
        let bell = DensityMatrix::from_pure(&BellOutcome::PhiPlus.state());
        for side in [Subsystem::First, Subsystem::Second] {
            let red = partial_trace(&bell, side).unwrap();
            let mm = DensityMatrix::maximally_mixed(2).unwrap();
            assert!(red.trace_distance(&mm) < 1e-12);
        }

        // product state reduces to its factors
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let ra = DensityMatrix::random(2, &mut rng).unwrap();
        let rb = DensityMatrix::random(2, &mut rng).unwrap();
        let prod = DensityMatrix::new(tensor(ra.matrix(), rb.matrix())).unwrap();
        let left = partial_trace(&prod, Subsystem::Second).unwrap();
        assert!(left.trace_distance(&ra) < 1e-12);
        let right = partial_trace(&prod, Subsystem::First).unwrap();
        assert!(right.trace_distance(&rb) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_single_qubit_input() {
        let mm = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(partial_trace(&mm, Subsystem::First).is_err());
    }

    #[test]
    fn bell_states_resolve_identity() {
        let mut sum = CMatrix::zeros(4, 4);
        for b in BellOutcome::ALL {
            sum += b.state().projector();
        }
        assert!(max_abs_diff(&sum, &CMatrix::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn density_matrix_constructor_rejects_violations() {
        // non-Hermitian
        let m = mat2([[c(0.5, 0.0), c(0.3, 0.0)], [c(-0.3, 0.0), c(0.5, 0.0)]]);
        assert!(DensityMatrix::new(m).is_err());
        // wrong trace
        let m = mat2([[c(0.9, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.3, 0.0)]]);
        assert!(DensityMatrix::new(m).is_err());
        // negative eigenvalue
        let m = mat2([[c(0.5, 0.0), c(0.6, 0.0)], [c(0.6, 0.0), c(0.5, 0.0)]]);
        assert!(DensityMatrix::new(m.clone()).is_err());
        // same matrix passes through the documented projection
        let proj = DensityMatrix::project_to_physical(&m).unwrap();
        let evs = hermitian_eigenvalues(proj.matrix());
        assert!(evs[0] >= -1e-15);
        assert!((proj.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_state_norm_is_enforced() {
        let v = CVector::from_vec(vec![c(1.0, 0.0), c(0.5, 0.0)]);
        assert!(PureState::new(v.clone()).is_err());
        let s = PureState::normalized(v).unwrap();
        let norm: f64 = s.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn embed_and_keep_utilities_are_consistent() {
        // embedding an operator on (0,2) of three qubits, then tracing back
        // down to (0,2), recovers the operator times the traced-out dimension
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let op = {
            let g = CMatrix::from_fn(4, 4, |_, _| {
                c(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            &g + g.adjoint()
        };
        let full = embed_operator(&op, &[0, 2], 3).unwrap();
        let back = partial_trace_keep(&full, 3, &[0, 2]).unwrap();
        assert!(max_abs_diff(&back, &(&op * c(2.0, 0.0))) < 1e-12);

        // embedding on a single middle qubit matches an explicit kron
        let op2 = {
            let g = CMatrix::from_fn(2, 2, |_, _| {
                c(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            &g + g.adjoint()
        };
        let id2 = CMatrix::identity(2, 2);
        let expected = tensor(&tensor(&id2, &op2), &id2);
        let full = embed_operator(&op2, &[1], 3).unwrap();
        assert!(max_abs_diff(&full, &expected) < 1e-12);
    }

    #[test]
    fn json_matrix_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(404);
        let m = CMatrix::from_fn(4, 4, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let v = matrix_to_json(&m);
        let back = matrix_from_json(&v).unwrap();
        assert!(max_abs_diff(&m, &back) < 1e-15);
        // malformed input is rejected
        assert!(matrix_from_json(&serde_json::json!([[1.0, 2.0]])).is_err());
    }

    #[test]
    fn state_labels_round_trip() {
        for l in StateLabel::ALL {
            assert_eq!(StateLabel::parse(l.as_str()).unwrap(), l);
        }
        assert!(StateLabel::parse("Q").is_err());
    }
}
