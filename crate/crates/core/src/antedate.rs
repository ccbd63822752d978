//! Classical post-processing core of the protocol.
//!
//! A Pauli-j result β recorded early is a valid measurement of the late
//! state once the Bell outcome λ_i is known: the branch unitary τ_i
//! conjugates σ_j to ±σ_j, so the record needs at most a sign flip,
//!
//! T(i, j) = +1  if i = j or i = 0,   −1 otherwise.
//!
//! Unscrambling is realized as count-label swapping — for cells with
//! T = −1 the (n₊, n₋) pair is swapped — which is equivalent to per-record
//! sign multiplication while keeping integer counts intact for the
//! Poissonian bootstrap.

use serde::{Deserialize, Serialize};

use crate::qcore::{BellOutcome, PauliIndex};
use crate::simproto::{BellBin, CountRow, CountsTable, Sign};
use crate::statetomo::PauliCounts;
use crate::{Error, Result};

/// A measurement direction on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    components: [f64; 3],
}

impl Direction {
    /// Requires unit norm within 1e-12.
    pub fn new(components: [f64; 3]) -> Result<Self> {
        let norm = components.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "direction norm {norm} differs from 1"
            )));
        }
        Ok(Direction { components })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(v: [f64; 3]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter(
                "cannot normalize zero direction".into(),
            ));
        }
        Self::new([v[0] / norm, v[1] / norm, v[2] / norm])
    }

    pub fn components(&self) -> [f64; 3] {
        self.components
    }
}

/// The sign correction T(i, j) applied to a Pauli-j record given Bell
/// outcome λ_i: +1 iff i = j or i = 0.
pub fn correction_sign(i: BellOutcome, j: PauliIndex) -> Result<f64> {
    if !j.is_tomographic() {
        return Err(Error::NotTomographic);
    }
    if i.index() == 0 || i.index() == j.index() {
        Ok(1.0)
    } else {
        Ok(-1.0)
    }
}

/// How a fixed measurement direction set for the early qubit transforms
/// into the direction actually measured on the late state, given λ_i:
/// componentwise b_j = T(i, j) · n_j.
pub fn transform_direction(n: &Direction, i: BellOutcome) -> Direction {
    let nc = n.components();
    let mut b = [0.0; 3];
    for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
        b[jslot] = correction_sign(i, *j).expect("j is tomographic") * nc[jslot];
    }
    Direction::new(b).expect("sign flips preserve the norm")
}

/// Which slice of the data a reconstruction uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellGroup {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "combined")]
    Combined,
}

impl BellGroup {
    pub const ALL: [BellGroup; 3] = [BellGroup::PhiPlus, BellGroup::PhiMinus, BellGroup::Combined];

    pub fn as_str(self) -> &'static str {
        match self {
            BellGroup::PhiPlus => "phi+",
            BellGroup::PhiMinus => "phi-",
            BellGroup::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown group {s:?}")))
    }
}

impl std::fmt::Display for BellGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Counts after applying the sign correction, in the same row schema as
/// [`CountsTable`] plus a `corrected` marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedCounts {
    pub corrected: bool,
    pub rows: Vec<CountRow>,
}

impl CorrectedCounts {
    /// The rows re-wrapped as a plain counts table (used to show the
    /// correction is an involution, and by tooling that re-reads output).
    pub fn as_table(&self) -> CountsTable {
        CountsTable {
            rows: self.rows.clone(),
        }
    }
}

/// Applies T(i, j) to every cell: cells with T = −1 get their (n₊, n₋)
/// labels swapped; total counts per cell are conserved exactly.
///
/// Unresolved rows are rejected — strip them first (they carry no branch
/// information and never enter reconstruction).
pub fn unscramble(counts: &CountsTable) -> Result<CorrectedCounts> {
    let mut rows = Vec::with_capacity(counts.rows.len());
    for row in &counts.rows {
        let outcome = match row.bell {
            BellBin::Resolved(b) => b,
            BellBin::Unresolved => return Err(Error::UnresolvedRows),
        };
        let basis = PauliIndex::from_index(row.basis)?;
        let sign = correction_sign(outcome, basis)?;
        let (n_plus, n_minus) = if sign > 0.0 {
            (row.n_plus, row.n_minus)
        } else {
            (row.n_minus, row.n_plus)
        };
        rows.push(CountRow {
            n_plus,
            n_minus,
            ..row.clone()
        });
    }
    Ok(CorrectedCounts {
        corrected: true,
        rows,
    })
}

/// Pooled corrected expectation values ⟨σ₁⟩, ⟨σ₂⟩, ⟨σ₃⟩ for one state,
/// combining every resolved bin with equal weight per event.
///
/// A basis with zero total counts is reported as missing, never as zero.
pub fn corrected_expectations(corrected: &CorrectedCounts, state: &str) -> Result<[f64; 3]> {
    let pooled = combined_pauli_counts(corrected, state)?;
    pooled.expectations()
}

/// Pools the corrected counts of every resolved bin into the six-cell input
/// of single-state tomography.
pub fn combined_pauli_counts(corrected: &CorrectedCounts, state: &str) -> Result<PauliCounts> {
    let mut cells = [[0.0f64; 2]; 3];
    let mut seen = false;
    for row in corrected.rows.iter().filter(|r| r.state == state) {
        seen = true;
        let basis = PauliIndex::from_index(row.basis)?;
        cells[basis.index() - 1][Sign::Plus.slot()] += row.n_plus;
        cells[basis.index() - 1][Sign::Minus.slot()] += row.n_minus;
    }
    if !seen {
        return Err(Error::UnknownState(state.to_string()));
    }
    PauliCounts::new(cells)
}

/// Extracts the six-cell tomography input for one state under a grouping
/// policy:
///
/// * `PhiPlus` / `PhiMinus` — the raw counts of that bin alone, uncorrected
///   (their reconstructions are later compared against the group's ideal
///   channel output);
/// * `Combined` — every resolved bin, unscrambled first, pooled with equal
///   weight per event.
pub fn pauli_counts_for_group(
    counts: &CountsTable,
    state: &str,
    group: BellGroup,
) -> Result<PauliCounts> {
    let resolved = counts.without_unresolved();
    match group {
        BellGroup::Combined => {
            let corrected = unscramble(&resolved)?;
            combined_pauli_counts(&corrected, state)
        }
        BellGroup::PhiPlus | BellGroup::PhiMinus => {
            let want = if group == BellGroup::PhiPlus {
                BellBin::Resolved(BellOutcome::PhiPlus)
            } else {
                BellBin::Resolved(BellOutcome::PhiMinus)
            };
            let mut cells = [[0.0f64; 2]; 3];
            let mut seen = false;
            for row in resolved
                .rows
                .iter()
                .filter(|r| r.state == state && r.bell == want)
            {
                seen = true;
                let basis = PauliIndex::from_index(row.basis)?;
                cells[basis.index() - 1][0] += row.n_plus;
                cells[basis.index() - 1][1] += row.n_minus;
            }
            if !seen {
                return Err(Error::UnknownState(state.to_string()));
            }
            PauliCounts::new(cells)
        }
    }
}

/// Assembles the per-input data for process tomography of one Bell branch:
/// every state label present in the table, paired with its raw counts from
/// that branch. `Combined` is rejected — the time channel is defined per
/// branch.
pub fn process_inputs_for_group(
    counts: &CountsTable,
    group: BellGroup,
) -> Result<Vec<(crate::qcore::PureState, PauliCounts)>> {
    if group == BellGroup::Combined {
        return Err(Error::InvalidParameter(
            "process tomography runs on a single Bell branch".into(),
        ));
    }
    let states = counts.states();
    if states.is_empty() {
        return Err(Error::EmptyInput("counts table"));
    }
    let mut out = Vec::with_capacity(states.len());
    for state in states {
        let label = crate::qcore::StateLabel::parse(&state)?;
        let cells = pauli_counts_for_group(counts, &state, group)?;
        out.push((label.state(), cells));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{
        apply_correction, max_abs_diff, pauli, CorrectionUnitary, PureState, StateLabel,
    };
    use crate::simproto::{full_bell_statistics, SourceModel};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn sign_rule_examples() {
        assert_eq!(
            correction_sign(BellOutcome::PhiPlus, PauliIndex::X).unwrap(),
            1.0
        );
        assert_eq!(
            correction_sign(BellOutcome::PhiMinus, PauliIndex::X).unwrap(),
            -1.0
        );
        assert_eq!(
            correction_sign(BellOutcome::PsiMinus, PauliIndex::Y).unwrap(),
            1.0
        );
        assert!(correction_sign(BellOutcome::PhiPlus, PauliIndex::Identity).is_err());
    }

    #[test]
    fn sign_rule_matches_conjugation_oracle() {
        // T(i, j)·σ_j must equal τ_i σ_j τ_i† for every pair
        for i in BellOutcome::ALL {
            let tau = CorrectionUnitary::new(i.index()).unwrap().matrix();
            for j in PauliIndex::TOMOGRAPHIC {
                let sigma = pauli(j);
                let conjugated = &tau * &sigma * tau.adjoint();
                let signed = &sigma * crate::qcore::c(correction_sign(i, j).unwrap(), 0.0);
                assert!(
                    max_abs_diff(&conjugated, &signed) < 1e-14,
                    "τ_{} σ_{} τ† mismatch",
                    i.index(),
                    j.index()
                );
            }
        }
    }

    #[test]
    fn direction_transform_examples() {
        let n = Direction::new([0.6, 0.0, 0.8]).unwrap();
        assert_eq!(transform_direction(&n, BellOutcome::PhiPlus), n);

        let x = Direction::new([1.0, 0.0, 0.0]).unwrap();
        let out = transform_direction(&x, BellOutcome::PhiMinus);
        assert_eq!(out.components(), [-1.0, 0.0, 0.0]);

        let s = 1.0 / 3f64.sqrt();
        let diag = Direction::new([s, s, s]).unwrap();
        let out = transform_direction(&diag, BellOutcome::PsiPlus);
        assert_eq!(out.components(), [s, -s, -s]);
    }

    #[test]
    fn direction_transform_is_consistent_with_sign_rule() {
        let n = Direction::normalized([0.3, -0.5, 0.9]).unwrap();
        for i in BellOutcome::ALL {
            let b = transform_direction(&n, i).components();
            for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
                let expected = correction_sign(i, *j).unwrap() * n.components()[jslot];
                assert!((b[jslot] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn branch_directions_span_three_dimensions() {
        // a direction with all components nonzero yields an informationally
        // complete set {τ_i (n·σ) τ_i†}: its four sign-flipped images span
        // the traceless Hermitian operators (rank 3)
        let n = Direction::normalized([0.5, 0.7, 0.4]).unwrap();
        let rows: Vec<[f64; 3]> = BellOutcome::ALL
            .iter()
            .map(|&i| transform_direction(&n, i).components())
            .collect();
        let m = DMatrix::from_fn(4, 3, |r, c| rows[r][c]);
        assert_eq!(m.rank(1e-9), 3);

        // a direction along a single axis does not
        let axis = Direction::new([0.0, 0.0, 1.0]).unwrap();
        let rows: Vec<[f64; 3]> = BellOutcome::ALL
            .iter()
            .map(|&i| transform_direction(&axis, i).components())
            .collect();
        let m = DMatrix::from_fn(4, 3, |r, c| rows[r][c]);
        assert_eq!(m.rank(1e-9), 1);
    }

    fn row(state: &str, basis: usize, bell: BellBin, n_plus: f64, n_minus: f64) -> CountRow {
        CountRow {
            state: state.into(),
            basis,
            bell,
            n_plus,
            n_minus,
        }
    }

    #[test]
    fn unscramble_examples() {
        let l0 = BellBin::Resolved(BellOutcome::PhiPlus);
        let l3 = BellBin::Resolved(BellOutcome::PhiMinus);
        let table = CountsTable {
            rows: vec![
                row("D", 1, l0, 7.0, 3.0),
                row("D", 1, l3, 7.0, 3.0),
                row("D", 3, l3, 7.0, 3.0),
            ],
        };
        let corrected = unscramble(&table).unwrap();
        assert_eq!(
            (corrected.rows[0].n_plus, corrected.rows[0].n_minus),
            (7.0, 3.0)
        );
        assert_eq!(
            (corrected.rows[1].n_plus, corrected.rows[1].n_minus),
            (3.0, 7.0)
        );
        assert_eq!(
            (corrected.rows[2].n_plus, corrected.rows[2].n_minus),
            (7.0, 3.0)
        );
        // counts conserved per cell
        for (before, after) in table.rows.iter().zip(&corrected.rows) {
            assert_eq!(before.total(), after.total());
        }
    }

    #[test]
    fn unscramble_rejects_unresolved_rows() {
        let table = CountsTable {
            rows: vec![row("D", 1, BellBin::Unresolved, 1.0, 0.0)],
        };
        assert!(matches!(unscramble(&table), Err(Error::UnresolvedRows)));
    }

    #[test]
    fn unscramble_is_an_involution() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        for _ in 0..20 {
            let mut rows = Vec::new();
            for label in StateLabel::ALL {
                for bell in BellOutcome::ALL {
                    for basis in 1..=3usize {
                        rows.push(row(
                            label.as_str(),
                            basis,
                            BellBin::Resolved(bell),
                            rng.gen_range(0..500) as f64,
                            rng.gen_range(0..500) as f64,
                        ));
                    }
                }
            }
            let table = CountsTable { rows };
            let twice = unscramble(&unscramble(&table).unwrap().as_table()).unwrap();
            assert_eq!(twice.rows, table.rows);
        }
    }

    #[test]
    fn expectations_of_eigenstates_from_exact_probabilities() {
        let source = SourceModel::ideal();
        for (label, expected) in [
            (StateLabel::H, [0.0, 0.0, 1.0]),
            (StateLabel::R, [0.0, 1.0, 0.0]),
        ] {
            let stats = full_bell_statistics(&source, &label.state()).unwrap();
            let table = CountsTable::from_probabilities(label.as_str(), &stats, 1.0);
            let corrected = unscramble(&table).unwrap();
            let exp = corrected_expectations(&corrected, label.as_str()).unwrap();
            for k in 0..3 {
                assert!((exp[k] - expected[k]).abs() < 1e-12, "{label}: {exp:?}");
            }
        }
    }

    #[test]
    fn expectations_of_sampled_eigenstate_data() {
        // finite-statistics version: noiseless hardware, sampled counts
        let config = crate::simproto::ExperimentConfig {
            source: SourceModel::ideal(),
            analyzer: crate::simproto::BellAnalyzerModel::ideal(),
            prepared_states: vec![StateLabel::H, StateLabel::R],
            trials_per_setting: 20_000,
            seed: 404,
        };
        let counts =
            crate::simproto::aggregate(&crate::simproto::sample_ensemble(&config).unwrap());
        for (label, expected) in [
            (StateLabel::H, [0.0, 0.0, 1.0]),
            (StateLabel::R, [0.0, 1.0, 0.0]),
        ] {
            let corrected = unscramble(&counts.without_unresolved()).unwrap();
            let exp = corrected_expectations(&corrected, label.as_str()).unwrap();
            for k in 0..3 {
                // ~3300 events per basis in the resolved bins: 4σ ≈ 0.07
                assert!((exp[k] - expected[k]).abs() < 0.07, "{label}: {exp:?}");
            }
        }
    }

    #[test]
    fn corrected_counts_serialize_with_marker() {
        let l3 = BellBin::Resolved(BellOutcome::PhiMinus);
        let table = CountsTable {
            rows: vec![row("D", 1, l3, 7.0, 3.0)],
        };
        let corrected = unscramble(&table).unwrap();
        let value = serde_json::to_value(&corrected).unwrap();
        assert_eq!(value["corrected"], serde_json::json!(true));
        assert_eq!(value["rows"][0]["n_plus"], serde_json::json!(3.0));
        assert_eq!(value["rows"][0]["bell"], serde_json::json!("phi-"));
        let back: CorrectedCounts = serde_json::from_value(value).unwrap();
        assert_eq!(back, corrected);
    }

    #[test]
    fn expectations_match_branch_amplitude_oracle() {
        // brute-force oracle over all 4 Bell branches × 3 bases × 2 outcomes:
        // P(λ_i, β | j) = ¼ |⟨e_{j,β}| τ_i |ψ⟩|², assembled directly from
        // branch amplitudes without the three-qubit propagation
        let eigenstates = |j: PauliIndex| -> [PureState; 2] {
            match j {
                PauliIndex::X => [StateLabel::D.state(), StateLabel::A.state()],
                PauliIndex::Y => [StateLabel::R.state(), StateLabel::L.state()],
                PauliIndex::Z => [StateLabel::H.state(), StateLabel::V.state()],
                PauliIndex::Identity => unreachable!(),
            }
        };
        let mut rng = ChaCha12Rng::seed_from_u64(314);
        for _ in 0..50 {
            let psi = PureState::random(&mut rng);
            let mut rows = Vec::new();
            for i in BellOutcome::ALL {
                let mapped = apply_correction(&psi, i.correction()).unwrap();
                for j in PauliIndex::TOMOGRAPHIC {
                    let [plus, minus] = eigenstates(j);
                    rows.push(row(
                        "psi",
                        j.index(),
                        BellBin::Resolved(i),
                        0.25 * plus.inner(&mapped).unwrap().norm_sqr(),
                        0.25 * minus.inner(&mapped).unwrap().norm_sqr(),
                    ));
                }
            }
            let corrected = unscramble(&CountsTable { rows }).unwrap();
            let exp = corrected_expectations(&corrected, "psi").unwrap();
            let rho = crate::qcore::DensityMatrix::from_pure(&psi);
            for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
                let direct = crate::qcore::expectation(&rho, *j);
                assert!(
                    (exp[jslot] - direct).abs() < 1e-9,
                    "σ_{}: corrected {} vs direct {}",
                    j.index(),
                    exp[jslot],
                    direct
                );
            }
        }
    }

    #[test]
    fn zero_count_basis_is_reported_missing() {
        let l0 = BellBin::Resolved(BellOutcome::PhiPlus);
        let table = CountsTable {
            rows: vec![
                row("H", 1, l0, 5.0, 5.0),
                row("H", 2, l0, 5.0, 5.0),
                row("H", 3, l0, 0.0, 0.0),
            ],
        };
        let corrected = unscramble(&table).unwrap();
        match corrected_expectations(&corrected, "H") {
            Err(Error::MissingBasis { basis }) => assert_eq!(basis, 3),
            other => panic!("expected missing basis, got {other:?}"),
        }
    }

    #[test]
    fn group_selection_policies() {
        let l0 = BellBin::Resolved(BellOutcome::PhiPlus);
        let l3 = BellBin::Resolved(BellOutcome::PhiMinus);
        let mut rows = Vec::new();
        for (basis, plus0, minus0, plus3, minus3) in [
            (1, 10.0, 2.0, 4.0, 8.0),
            (2, 6.0, 6.0, 3.0, 9.0),
            (3, 12.0, 0.0, 11.0, 1.0),
        ] {
            rows.push(row("H", basis, l0, plus0, minus0));
            rows.push(row("H", basis, l3, plus3, minus3));
            rows.push(row("H", basis, BellBin::Unresolved, 5.0, 5.0));
        }
        let table = CountsTable { rows };

        let plus = pauli_counts_for_group(&table, "H", BellGroup::PhiPlus).unwrap();
        assert_eq!(plus.get(PauliIndex::X, Sign::Plus), 10.0);

        let minus = pauli_counts_for_group(&table, "H", BellGroup::PhiMinus).unwrap();
        assert_eq!(minus.get(PauliIndex::X, Sign::Plus), 4.0);

        // combined: λ₃ σ₁/σ₂ cells swapped before pooling, σ₃ unchanged
        let combined = pauli_counts_for_group(&table, "H", BellGroup::Combined).unwrap();
        assert_eq!(combined.get(PauliIndex::X, Sign::Plus), 10.0 + 8.0);
        assert_eq!(combined.get(PauliIndex::X, Sign::Minus), 2.0 + 4.0);
        assert_eq!(combined.get(PauliIndex::Z, Sign::Plus), 12.0 + 11.0);

        assert!(pauli_counts_for_group(&table, "Q", BellGroup::Combined).is_err());
    }
}
