//! Exact-probability and Monte Carlo simulation of the protocol hardware.
//!
//! The simulated apparatus is: a two-photon source emitting the entangled
//! pair (A, B); an early projective Pauli measurement on photon B; a lossless
//! memory holding photon A; preparation of photon 3 in one of the six
//! canonical states; and a partial Bell analyzer acting on (A, 3) that
//! deterministically resolves Φ⁺ and Φ⁻ with interference visibility V,
//! while Ψ±-type coincidences land in an unresolved bin and are discarded
//! from reconstruction.
//!
//! Exact statistics come from full three-qubit density-matrix propagation
//! (qubit order A, B, 3): ρ_AB ⊗ |ψ₃⟩⟨ψ₃|, the analyzer POVM embedded on
//! (A, 3), and Pauli projectors embedded on B. The Monte Carlo sampler draws
//! i.i.d. trials from those probabilities, one independently seeded stream
//! per prepared state, so runs are reproducible and trivially partitionable.
//!
//! The memory delay and finite collection efficiency of the real apparatus
//! only reduce the event rate; heralded post-selection makes them invisible
//! to the conditional statistics modeled here, so they are not parameters.

use serde::{Deserialize, Serialize};

use crate::qcore::{
    c, embed_operator, partial_trace_keep, tensor, BellOutcome, CMatrix, DensityMatrix, PauliIndex,
    PureState, StateLabel,
};
use crate::seeds;
use crate::{fixtures, Error, Result};
use rand::Rng;

/// Tolerance used when checking that probability tables are normalized.
pub const PROB_TOL: f64 = 1e-10;

// ─────────────────────────────── basic records ──────────────────────────────

/// A dichotomic measurement result β ∈ {−1, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// Slot index used by count tables: 0 for +, 1 for −.
    pub fn slot(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

/// Where a trial landed in the Bell analyzer: a resolved outcome λ_i or the
/// unresolved bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellBin {
    Resolved(BellOutcome),
    Unresolved,
}

impl BellBin {
    /// Canonical ordering: λ₀, λ₁, λ₂, λ₃, then the unresolved bin.
    pub fn order(self) -> usize {
        match self {
            BellBin::Resolved(b) => b.index(),
            BellBin::Unresolved => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BellBin::Resolved(BellOutcome::PhiPlus) => "phi+",
            BellBin::Resolved(BellOutcome::PsiPlus) => "psi+",
            BellBin::Resolved(BellOutcome::PsiMinus) => "psi-",
            BellBin::Resolved(BellOutcome::PhiMinus) => "phi-",
            BellBin::Unresolved => "U",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "phi+" => Ok(BellBin::Resolved(BellOutcome::PhiPlus)),
            "psi+" => Ok(BellBin::Resolved(BellOutcome::PsiPlus)),
            "psi-" => Ok(BellBin::Resolved(BellOutcome::PsiMinus)),
            "phi-" => Ok(BellBin::Resolved(BellOutcome::PhiMinus)),
            "U" => Ok(BellBin::Unresolved),
            other => Err(Error::InvalidParameter(format!(
                "unknown Bell bin {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for BellBin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for BellBin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for BellBin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BellBin::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// One protocol trial: which state was prepared late, which Pauli basis the
/// early station measured, the dichotomic result, and the Bell bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub state: StateLabel,
    pub basis: PauliIndex,
    pub result: Sign,
    pub bell: BellBin,
}

// ─────────────────────────────── counts tables ──────────────────────────────

/// One aggregated cell: counts of ± results for a (state, basis, bin) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub state: String,
    /// Pauli basis index j ∈ {1, 2, 3}.
    pub basis: usize,
    pub bell: BellBin,
    pub n_plus: f64,
    pub n_minus: f64,
}

impl CountRow {
    pub fn total(&self) -> f64 {
        self.n_plus + self.n_minus
    }
}

/// Aggregated (state, basis, Bell bin) → (n₊, n₋) counts; the tomography
/// input. Serializes as a plain JSON list of rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountsTable {
    pub rows: Vec<CountRow>,
}

impl CountsTable {
    pub fn get(&self, state: &str, basis: PauliIndex, bell: BellBin) -> Option<&CountRow> {
        self.rows
            .iter()
            .find(|r| r.state == state && r.basis == basis.index() && r.bell == bell)
    }

    /// Distinct state labels in first-appearance order.
    pub fn states(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.state) {
                out.push(r.state.clone());
            }
        }
        out
    }

    /// The table restricted to resolved rows.
    pub fn without_unresolved(&self) -> CountsTable {
        CountsTable {
            rows: self
                .rows
                .iter()
                .filter(|r| r.bell != BellBin::Unresolved)
                .cloned()
                .collect(),
        }
    }

    pub fn has_unresolved(&self) -> bool {
        self.rows.iter().any(|r| r.bell == BellBin::Unresolved)
    }

    /// Fraction of all counted events that landed in the unresolved bin.
    pub fn unresolved_fraction(&self) -> f64 {
        let total: f64 = self.rows.iter().map(CountRow::total).sum();
        if total == 0.0 {
            return 0.0;
        }
        let unres: f64 = self
            .rows
            .iter()
            .filter(|r| r.bell == BellBin::Unresolved)
            .map(CountRow::total)
            .sum();
        unres / total
    }

    /// Builds a table for one state directly from exact probabilities,
    /// scaling each probability by `scale` in place of observed counts.
    pub fn from_probabilities(state: &str, table: &ProbabilityTable, scale: f64) -> CountsTable {
        let mut rows = Vec::new();
        for bin in &table.bins {
            for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
                rows.push(CountRow {
                    state: state.to_string(),
                    basis: j.index(),
                    bell: bin.bin,
                    n_plus: bin.probs[jslot][0] * scale,
                    n_minus: bin.probs[jslot][1] * scale,
                });
            }
        }
        CountsTable { rows }
    }
}

// ────────────────────────────────── models ──────────────────────────────────

/// The two-photon source: the joint state of the entangled pair (A, B).
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    rho_ab: DensityMatrix,
}

impl SourceModel {
    /// Ideal source emitting |Φ⁺⟩⟨Φ⁺|.
    pub fn ideal() -> Self {
        SourceModel {
            rho_ab: DensityMatrix::from_pure(&BellOutcome::PhiPlus.state()),
        }
    }

    /// The experimentally reconstructed source state (see [`crate::fixtures`]),
    /// projected onto the physical set so it can drive sampling.
    pub fn reference_mle() -> Self {
        SourceModel {
            rho_ab: fixtures::source_rho_physical(),
        }
    }

    /// An arbitrary two-qubit source state.
    pub fn from_density(rho_ab: DensityMatrix) -> Result<Self> {
        if rho_ab.dim() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                actual: rho_ab.dim(),
            });
        }
        Ok(SourceModel { rho_ab })
    }

    pub fn rho_ab(&self) -> &DensityMatrix {
        &self.rho_ab
    }
}

/// The partial Bell analyzer: resolves Φ⁺ (λ₀) and Φ⁻ (λ₃) with
/// interference visibility V; Ψ±-type coincidences are unresolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellAnalyzerModel {
    visibility: f64,
}

/// The POVM elements resolved by the analyzer, fixed by its construction.
pub const RESOLVABLE: [BellOutcome; 2] = [BellOutcome::PhiPlus, BellOutcome::PhiMinus];

impl BellAnalyzerModel {
    pub fn new(visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) || !visibility.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "visibility {visibility} outside [0, 1]"
            )));
        }
        Ok(BellAnalyzerModel { visibility })
    }

    /// Perfect-interference analyzer (V = 1).
    pub fn ideal() -> Self {
        BellAnalyzerModel { visibility: 1.0 }
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    /// The three POVM elements with their bin labels:
    /// (λ₀, E₀), (λ₃, E₃), (unresolved, E_u).
    pub fn povm_elements(&self) -> Vec<(BellBin, CMatrix)> {
        let [e0, e3, eu] = analyzer_povm(self.visibility).expect("visibility validated");
        vec![
            (BellBin::Resolved(BellOutcome::PhiPlus), e0),
            (BellBin::Resolved(BellOutcome::PhiMinus), e3),
            (BellBin::Unresolved, eu),
        ]
    }
}

/// POVM of the partial analyzer at visibility V: (E₀, E₃, E_unres).
///
/// Reduced two-photon coherence scales only the |HH⟩⟨VV| cross terms of the
/// Φ± projectors by V, so the three elements sum to 𝟙₄ exactly for every V:
///
/// E₀ = ½(|HH⟩⟨HH| + |VV⟩⟨VV|) + (V/2)(|HH⟩⟨VV| + |VV⟩⟨HH|),
/// E₃ = the same with −V, and E_unres = |HV⟩⟨HV| + |VH⟩⟨VH|.
pub fn analyzer_povm(visibility: f64) -> Result<[CMatrix; 3]> {
    if !(0.0..=1.0).contains(&visibility) || !visibility.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "visibility {visibility} outside [0, 1]"
        )));
    }
    let v = visibility;
    let mut e0 = CMatrix::zeros(4, 4);
    e0[(0, 0)] = c(0.5, 0.0);
    e0[(3, 3)] = c(0.5, 0.0);
    e0[(0, 3)] = c(0.5 * v, 0.0);
    e0[(3, 0)] = c(0.5 * v, 0.0);
    let mut e3 = CMatrix::zeros(4, 4);
    e3[(0, 0)] = c(0.5, 0.0);
    e3[(3, 3)] = c(0.5, 0.0);
    e3[(0, 3)] = c(-0.5 * v, 0.0);
    e3[(3, 0)] = c(-0.5 * v, 0.0);
    let mut eu = CMatrix::zeros(4, 4);
    eu[(1, 1)] = c(1.0, 0.0);
    eu[(2, 2)] = c(1.0, 0.0);
    Ok([e0, e3, eu])
}

/// Full experiment description: source, analyzer, prepared states, the
/// number of trials collected per prepared state, and the base seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: SourceModel,
    pub analyzer: BellAnalyzerModel,
    pub prepared_states: Vec<StateLabel>,
    pub trials_per_setting: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_setting == 0 {
            return Err(Error::InvalidParameter(
                "trials_per_setting must be ≥ 1".into(),
            ));
        }
        if self.prepared_states.is_empty() {
            return Err(Error::EmptyInput("prepared_states"));
        }
        Ok(())
    }
}

// ─────────────────────────── exact statistics ───────────────────────────────

/// Exact joint probabilities for one prepared state: per Bell bin and Pauli
/// basis j, the row stores P(bin, β | j); the entries for a fixed j sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbBin {
    pub bin: BellBin,
    /// `probs[j-1][slot]` with slot 0 = +, 1 = −.
    pub probs: [[f64; 2]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    pub bins: Vec<ProbBin>,
}

impl ProbabilityTable {
    /// P(bin, β | j).
    pub fn prob(&self, bin: BellBin, j: PauliIndex, sign: Sign) -> f64 {
        self.bins
            .iter()
            .find(|b| b.bin == bin)
            .map(|b| b.probs[j.index() - 1][sign.slot()])
            .unwrap_or(0.0)
    }

    /// Marginal probability of a Bell bin (independent of j).
    pub fn bin_probability(&self, bin: BellBin) -> f64 {
        Sign::BOTH
            .iter()
            .map(|&s| self.prob(bin, PauliIndex::X, s))
            .sum()
    }

    /// P(β | bin, j).
    pub fn conditional(&self, bin: BellBin, j: PauliIndex, sign: Sign) -> f64 {
        let joint = self.prob(bin, j, sign);
        let marg: f64 = Sign::BOTH.iter().map(|&s| self.prob(bin, j, s)).sum();
        if marg == 0.0 {
            0.0
        } else {
            joint / marg
        }
    }
}

fn statistics_with_povm(
    source: &SourceModel,
    povm: &[(BellBin, CMatrix)],
    psi3: &PureState,
) -> Result<ProbabilityTable> {
    if psi3.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: psi3.dim(),
        });
    }
    // three-qubit register ordered (A, B, 3)
    let rho_tot = tensor(source.rho_ab().matrix(), &psi3.projector());
    let mut bins = Vec::with_capacity(povm.len());
    for (bin, element) in povm {
        let bell_full = embed_operator(element, &[0, 2], 3)?;
        let mut probs = [[0.0; 2]; 3];
        for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
            for sign in Sign::BOTH {
                let proj_full = embed_operator(&j.projector(sign.value()), &[1], 3)?;
                let p = (&bell_full * &proj_full * &rho_tot).trace().re;
                // tiny negatives from rounding are clipped at the tolerance
                if p < -PROB_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "negative probability {p:.3e} from non-physical model"
                    )));
                }
                probs[jslot][sign.slot()] = p.max(0.0);
            }
        }
        bins.push(ProbBin { bin: *bin, probs });
    }
    let table = ProbabilityTable { bins };
    for j in PauliIndex::TOMOGRAPHIC {
        let total: f64 = table
            .bins
            .iter()
            .map(|b| b.probs[j.index() - 1].iter().sum::<f64>())
            .sum();
        debug_assert!(
            (total - 1.0).abs() < PROB_TOL,
            "probabilities for basis {} sum to {total}",
            j.index()
        );
    }
    Ok(table)
}

/// Exact statistics of the configured experiment for one prepared state:
/// bins λ₀, λ₃, and unresolved.
pub fn exact_statistics(config: &ExperimentConfig, label: StateLabel) -> Result<ProbabilityTable> {
    exact_statistics_for_state(&config.source, &config.analyzer, &label.state())
}

/// Exact statistics for an arbitrary prepared pure state.
pub fn exact_statistics_for_state(
    source: &SourceModel,
    analyzer: &BellAnalyzerModel,
    psi3: &PureState,
) -> Result<ProbabilityTable> {
    statistics_with_povm(source, &analyzer.povm_elements(), psi3)
}

/// Exact statistics with a perfect analyzer resolving all four Bell
/// outcomes — the full-branch reference used to exercise the unscrambling
/// rule over every τ branch.
pub fn full_bell_statistics(source: &SourceModel, psi3: &PureState) -> Result<ProbabilityTable> {
    let povm: Vec<(BellBin, CMatrix)> = BellOutcome::ALL
        .iter()
        .map(|&b| (BellBin::Resolved(b), b.state().projector()))
        .collect();
    statistics_with_povm(source, &povm, psi3)
}

/// The state of photon B conditioned on the analyzer reporting `bin`.
pub fn conditional_state_of_b(
    source: &SourceModel,
    analyzer: &BellAnalyzerModel,
    psi3: &PureState,
    bin: BellBin,
) -> Result<DensityMatrix> {
    let (_, element) = analyzer
        .povm_elements()
        .into_iter()
        .find(|(b, _)| *b == bin)
        .ok_or(Error::InvalidParameter(
            "bin not produced by this analyzer".into(),
        ))?;
    conditional_state_for_element(source, &element, psi3)
}

/// The state of photon B conditioned on a perfect Bell projection outcome.
pub fn conditional_state_full_bell(
    source: &SourceModel,
    psi3: &PureState,
    outcome: BellOutcome,
) -> Result<DensityMatrix> {
    conditional_state_for_element(source, &outcome.state().projector(), psi3)
}

fn conditional_state_for_element(
    source: &SourceModel,
    element: &CMatrix,
    psi3: &PureState,
) -> Result<DensityMatrix> {
    let rho_tot = tensor(source.rho_ab().matrix(), &psi3.projector());
    let full = embed_operator(element, &[0, 2], 3)?;
    let unnorm = partial_trace_keep(&(&full * &rho_tot), 3, &[1])?;
    let p = unnorm.trace().re;
    if p <= 0.0 {
        return Err(Error::InvalidParameter(
            "conditioning on a zero-probability bin".into(),
        ));
    }
    DensityMatrix::project_to_physical(&unnorm)
}

/// The marginal state of photon B, summed over every analyzer bin.
///
/// By POVM completeness this is independent of the prepared state — the
/// no-signalling check of the protocol.
pub fn marginal_state_of_b(
    source: &SourceModel,
    analyzer: &BellAnalyzerModel,
    psi3: &PureState,
) -> Result<DensityMatrix> {
    let rho_tot = tensor(source.rho_ab().matrix(), &psi3.projector());
    let mut acc = CMatrix::zeros(2, 2);
    for (_, element) in analyzer.povm_elements() {
        let full = embed_operator(&element, &[0, 2], 3)?;
        acc += partial_trace_keep(&(&full * &rho_tot), 3, &[1])?;
    }
    DensityMatrix::new(acc)
}

// ────────────────────────────── Monte Carlo ─────────────────────────────────

/// Draws the configured number of i.i.d. trials for every prepared state.
///
/// Each trial picks its Pauli basis uniformly from {σ₁, σ₂, σ₃} and then a
/// (bin, β) cell from the exact joint distribution. The RNG stream is
/// derived per prepared state, so per-state blocks may be generated on
/// independent workers and concatenated in configured state order to
/// reproduce this function's output exactly.
pub fn sample_ensemble(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let mut records =
        Vec::with_capacity(config.prepared_states.len() * config.trials_per_setting as usize);
    for (state_index, &label) in config.prepared_states.iter().enumerate() {
        let table = exact_statistics(config, label)?;
        let mut rng = seeds::rng(config.seed, seeds::stage::SIMULATION, state_index as u64);
        // cell list and per-basis cumulative distributions, in table order
        let mut cells: Vec<(BellBin, Sign, [f64; 3])> = Vec::new();
        for bin in &table.bins {
            for sign in Sign::BOTH {
                let mut per_j = [0.0; 3];
                for (jslot, p) in per_j.iter_mut().enumerate() {
                    *p = bin.probs[jslot][sign.slot()];
                }
                cells.push((bin.bin, sign, per_j));
            }
        }
        for _ in 0..config.trials_per_setting {
            let jslot = rng.gen_range(0..3usize);
            let basis = PauliIndex::TOMOGRAPHIC[jslot];
            let norm: f64 = cells.iter().map(|(_, _, p)| p[jslot]).sum();
            let mut u = rng.gen::<f64>() * norm;
            let mut chosen = cells.len() - 1;
            for (k, (_, _, p)) in cells.iter().enumerate() {
                u -= p[jslot];
                if u <= 0.0 {
                    chosen = k;
                    break;
                }
            }
            let (bell, result, _) = cells[chosen];
            records.push(TrialRecord {
                state: label,
                basis,
                result,
                bell,
            });
        }
    }
    Ok(records)
}

/// Aggregates trial records into a counts table.
///
/// The output carries one row per (state, basis, bin) over the full grid of
/// bins observed anywhere in the input, so zero-count cells are explicit.
/// Unresolved rows are kept (labelled `"U"`) but carry no tomographic
/// weight downstream.
pub fn aggregate(records: &[TrialRecord]) -> CountsTable {
    let mut bins: Vec<BellBin> = Vec::new();
    let mut states: Vec<StateLabel> = Vec::new();
    for r in records {
        if !bins.contains(&r.bell) {
            bins.push(r.bell);
        }
        if !states.contains(&r.state) {
            states.push(r.state);
        }
    }
    bins.sort_by_key(|b| b.order());
    aggregate_with_grid(records, &states, &bins)
}

/// Aggregation over an explicit (states × bins) grid; rows are emitted for
/// every grid cell even when empty.
pub fn aggregate_with_grid(
    records: &[TrialRecord],
    states: &[StateLabel],
    bins: &[BellBin],
) -> CountsTable {
    let mut rows = Vec::new();
    for &state in states {
        for &bin in bins {
            for j in PauliIndex::TOMOGRAPHIC {
                rows.push(CountRow {
                    state: state.to_string(),
                    basis: j.index(),
                    bell: bin,
                    n_plus: 0.0,
                    n_minus: 0.0,
                });
            }
        }
    }
    let mut table = CountsTable { rows };
    for r in records {
        let row = table
            .rows
            .iter_mut()
            .find(|row| {
                row.state == r.state.as_str() && row.basis == r.basis.index() && row.bell == r.bell
            })
            .expect("grid covers every record");
        match r.result {
            Sign::Plus => row.n_plus += 1.0,
            Sign::Minus => row.n_minus += 1.0,
        }
    }
    table
}
