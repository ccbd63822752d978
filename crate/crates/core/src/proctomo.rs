//! Process tomography of the time channel.
//!
//! A channel is carried by a positive operator S on H ⊗ K (input space H
//! first, output space K second) acting as
//!
//!   ρ_out = Tr_H[ S (ρ_inᵀ ⊗ 𝟙_K) ],
//!
//! with the transpose taken in the computational basis. The identity channel
//! has S = Σ_ij |ii⟩⟨jj| (trace 2), and trace preservation reads
//! Tr_K S = 𝟙_H. The equivalent process matrix χ in the {σ₀..σ₃} operator
//! basis, ρ_out = Σ_mn χ_mn σ_m ρ_in σ_n, is reached by conjugation with two
//! fixed matrices,
//!
//!   χ = U₂† U₁† S U₁ U₂,
//!
//! where U₁ permutes the middle two basis vectors and U₂ has columns of
//! squared norm ½ (so the map is invertible but not unitary: the inverse
//! carries a factor 4). A unit-trace χ then corresponds to trace-2 S.
//!
//! The maximum-likelihood estimator is the expectation-maximization
//! iteration with a trace-preservation normalization each step:
//!
//!   K = Σ_l (f_l / p_l) E_l,   Λ = Tr_K[K S K],
//!   S ← (Λ^{-1/2} ⊗ 𝟙) K S K (Λ^{-1/2} ⊗ 𝟙),
//!
//! where E_l = ρ_lᵀ ⊗ Π_l ranges over (input state, Pauli projector) pairs.
//! The update keeps Tr_K S = 𝟙_H exactly, probabilities are floored at
//! 1e-12, and the log-likelihood is checked to be non-decreasing.

use crate::qcore::{
    c, hermitian_eigenvalues, hermiticity_deviation, max_abs_diff, partial_trace_mat, tensor,
    trace_norm, CMatrix, DensityMatrix, PauliIndex, PureState, Subsystem, INVARIANT_TOL,
};
use crate::simproto::Sign;
use crate::statetomo::PauliCounts;
use crate::{seeds, Error, Result};

/// Iteration cap for the fixed-point loop.
pub const MAX_ITERATIONS: usize = 10_000;
/// Trace-norm step size below which the iteration is declared converged.
pub const STEP_TOL: f64 = 1e-10;
/// Floor applied to cell probabilities inside the iteration.
pub const PROB_FLOOR: f64 = 1e-12;
/// PSD slack used when wrapping operators derived from printed process
/// matrices (rounded to two decimals).
pub const PRINTED_PSD_SLACK: f64 = 2e-2;

// ───────────────────────────── representations ──────────────────────────────

/// The channel operator S on H ⊗ K: Hermitian and positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiOperator {
    matrix: CMatrix,
}

impl ChoiOperator {
    /// Validates Hermiticity at 1e-10 and positivity at −1e-10.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_psd_tolerance(matrix, 1e-10)
    }

    /// Like [`ChoiOperator::new`] with an explicit eigenvalue slack, for
    /// operators reconstructed from rounded reference matrices.
    pub fn with_psd_tolerance(matrix: CMatrix, psd_tol: f64) -> Result<Self> {
        if matrix.nrows() != 4 || matrix.ncols() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                actual: matrix.nrows(),
            });
        }
        let dev = hermiticity_deviation(&matrix);
        if dev > INVARIANT_TOL {
            return Err(Error::InvalidOperator(format!(
                "channel operator not Hermitian: deviation {dev:.3e}"
            )));
        }
        let min_eig = hermitian_eigenvalues(&matrix)[0];
        if min_eig < -psd_tol {
            return Err(Error::InvalidOperator(format!(
                "channel operator has eigenvalue {min_eig:.3e} below −{psd_tol:.1e}"
            )));
        }
        Ok(ChoiOperator { matrix })
    }

    /// The identity channel, S = Σ_ij |ii⟩⟨jj| (trace 2).
    pub fn identity_channel() -> Self {
        let mut m = CMatrix::zeros(4, 4);
        for (r, col) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(r, col)] = c(1.0, 0.0);
        }
        ChoiOperator { matrix: m }
    }

    /// The channel ρ ↦ UρU† for a single-qubit unitary.
    pub fn unitary_channel(u: &CMatrix) -> Result<Self> {
        if u.nrows() != 2 || u.ncols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: u.nrows(),
            });
        }
        if max_abs_diff(&(u * u.adjoint()), &CMatrix::identity(2, 2)) > INVARIANT_TOL {
            return Err(Error::InvalidOperator("matrix is not unitary".into()));
        }
        let lift = tensor(&CMatrix::identity(2, 2), u);
        let m = &lift * Self::identity_channel().matrix * lift.adjoint();
        Ok(ChoiOperator { matrix: m })
    }

    /// The σ₃ (phase-flip) channel.
    pub fn sigma3_channel() -> Self {
        Self::unitary_channel(&PauliIndex::Z.matrix()).expect("σ₃ is unitary")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Largest entrywise deviation of Tr_K S from 𝟙_H; zero for a
    /// trace-preserving channel.
    pub fn tp_deviation(&self) -> f64 {
        let reduced =
            partial_trace_mat(&self.matrix, (2, 2), Subsystem::Second).expect("4×4 splits as 2⊗2");
        max_abs_diff(&reduced, &CMatrix::identity(2, 2))
    }
}

/// The process matrix χ in the {σ₀, σ₁, σ₂, σ₃} basis: Hermitian with
/// trace near 1 (printed references round to 0.99–1.00).
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    matrix: CMatrix,
}

/// Slack allowed on Tr χ = 1.
pub const CHI_TRACE_TOL: f64 = 2e-2;

impl ChiMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != 4 || matrix.ncols() != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                actual: matrix.nrows(),
            });
        }
        let dev = hermiticity_deviation(&matrix);
        if dev > INVARIANT_TOL {
            return Err(Error::InvalidOperator(format!(
                "process matrix not Hermitian: deviation {dev:.3e}"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > CHI_TRACE_TOL || tr.im.abs() > INVARIANT_TOL {
            return Err(Error::InvalidOperator(format!(
                "process matrix trace {tr} too far from 1"
            )));
        }
        Ok(ChiMatrix { matrix })
    }

    /// χ of the ideal identity channel: χ₀₀ = 1, all else 0.
    pub fn ideal_identity() -> Self {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        ChiMatrix { matrix: m }
    }

    /// χ of the ideal σ₃ channel: χ₃₃ = 1, all else 0.
    pub fn ideal_sigma3() -> Self {
        let mut m = CMatrix::zeros(4, 4);
        m[(3, 3)] = c(1.0, 0.0);
        ChiMatrix { matrix: m }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

/// The fixed permutation U₁ (swaps the middle two basis vectors).
pub fn basis_u1() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 2)] = c(1.0, 0.0);
    m[(2, 1)] = c(1.0, 0.0);
    m[(3, 3)] = c(1.0, 0.0);
    m
}

/// The fixed half-normalized basis change U₂ (columns of squared norm ½).
pub fn basis_u2() -> CMatrix {
    let h = 0.5;
    CMatrix::from_row_slice(
        4,
        4,
        &[
            c(h, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(h, 0.0),
            c(0.0, 0.0),
            c(h, 0.0),
            c(0.0, -h),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(h, 0.0),
            c(0.0, h),
            c(0.0, 0.0),
            c(h, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(-h, 0.0),
        ],
    )
}

/// The raw linear map S ↦ U₂†U₁† S U₁U₂ on arbitrary matrices.
pub fn chi_conjugation(s: &CMatrix) -> CMatrix {
    let w = basis_u1() * basis_u2();
    w.adjoint() * s * w
}

/// The inverse map χ ↦ 4·U₁U₂ χ U₂†U₁† (the factor 4 undoes the two
/// half-normalizations of U₂).
pub fn choi_conjugation(chi: &CMatrix) -> CMatrix {
    let w = basis_u1() * basis_u2();
    (&w * chi * w.adjoint()) * c(4.0, 0.0)
}

/// Converts a channel operator to its process matrix.
pub fn chi_from_s(s: &ChoiOperator) -> ChiMatrix {
    ChiMatrix {
        matrix: chi_conjugation(s.matrix()),
    }
}

/// Converts a process matrix back to its channel operator.
///
/// Printed reference matrices are rounded, so the result is validated with
/// a rounding-scale PSD slack rather than the strict tolerance.
pub fn s_from_chi(chi: &ChiMatrix) -> Result<ChoiOperator> {
    ChoiOperator::with_psd_tolerance(choi_conjugation(chi.matrix()), PRINTED_PSD_SLACK)
}

/// Applies the channel: ρ_out = Tr_H[S (ρ_inᵀ ⊗ 𝟙)].
///
/// The result is returned as a raw matrix: its trace equals 1 only up to
/// the trace-preservation defect of S (exact for ideal channels, small for
/// estimated ones).
pub fn apply_channel(s: &ChoiOperator, rho_in: &DensityMatrix) -> Result<CMatrix> {
    if rho_in.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: rho_in.dim(),
        });
    }
    let lifted = tensor(&rho_in.matrix().transpose(), &CMatrix::identity(2, 2));
    partial_trace_mat(&(s.matrix() * lifted), (2, 2), Subsystem::First)
}

// ───────────────────────────── MLE estimation ───────────────────────────────

/// Output of the channel reconstruction.
#[derive(Debug, Clone)]
pub struct ProcessEstimate {
    pub choi: ChoiOperator,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// False only when the iteration cap was hit before the step tolerance.
    pub converged: bool,
}

fn clamp_psd(m: &CMatrix) -> CMatrix {
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let d = m.nrows();
    let mut out = CMatrix::zeros(d, d);
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > 0.0 {
            let col = eig.eigenvectors.column(k);
            for r in 0..d {
                for s in 0..d {
                    out[(r, s)] += col[r] * col[s].conj() * c(ev, 0.0);
                }
            }
        }
    }
    out
}

fn input_rank(data: &[(PureState, PauliCounts)]) -> usize {
    use nalgebra::DMatrix;
    let rows: Vec<[f64; 4]> = data
        .iter()
        .map(|(psi, _)| {
            let rho = DensityMatrix::from_pure(psi);
            [
                1.0,
                crate::qcore::expectation(&rho, PauliIndex::X),
                crate::qcore::expectation(&rho, PauliIndex::Y),
                crate::qcore::expectation(&rho, PauliIndex::Z),
            ]
        })
        .collect();
    DMatrix::from_fn(rows.len(), 4, |r, col| rows[r][col]).rank(1e-9)
}

fn mle_process_iterate(
    data: &[(PureState, PauliCounts)],
    mut observer: impl FnMut(f64),
) -> Result<ProcessEstimate> {
    if data.is_empty() {
        return Err(Error::EmptyInput("process tomography inputs"));
    }
    for (_, counts) in data {
        counts.require_complete()?;
    }
    let rank = input_rank(data);
    if rank < 4 {
        return Err(Error::InputsNotInformationallyComplete { rank });
    }

    // effective measurement operators E_l = ρ_lᵀ ⊗ Π_l with their counts
    let mut elements: Vec<(CMatrix, f64)> = Vec::with_capacity(data.len() * 6);
    for (psi, counts) in data {
        let rho_t = psi.projector().transpose();
        for j in PauliIndex::TOMOGRAPHIC {
            for sign in Sign::BOTH {
                elements.push((
                    tensor(&rho_t, &j.projector(sign.value())),
                    counts.get(j, sign),
                ));
            }
        }
    }
    let total: f64 = elements.iter().map(|(_, n)| n).sum();
    let freqs: Vec<f64> = elements.iter().map(|(_, n)| n / total).collect();

    let mut s_op: CMatrix = CMatrix::identity(4, 4) * c(0.5, 0.0);
    let mut prev_ll = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    let trace_product = |a: &CMatrix, b: &CMatrix| -> f64 {
        let mut acc = c(0.0, 0.0);
        for r in 0..4 {
            for col in 0..4 {
                acc += a[(r, col)] * b[(col, r)];
            }
        }
        acc.re
    };

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let probs: Vec<f64> = elements
            .iter()
            .map(|(e, _)| trace_product(e, &s_op).max(PROB_FLOOR))
            .collect();
        let ll: f64 = elements
            .iter()
            .zip(&probs)
            .filter(|((_, n), _)| *n > 0.0)
            .map(|((_, n), p)| n * p.ln())
            .sum();
        observer(ll);
        let slack = 1e-9 * (1.0 + ll.abs());
        if ll + slack < prev_ll {
            return Err(Error::NonMonotoneLikelihood {
                iteration: iterations,
                delta: prev_ll - ll,
            });
        }
        prev_ll = ll;

        let mut k_op = CMatrix::zeros(4, 4);
        for ((e, _), (f, p)) in elements.iter().zip(freqs.iter().zip(&probs)) {
            if *f > 0.0 {
                k_op += e * c(f / p, 0.0);
            }
        }
        let ksk = &k_op * &s_op * &k_op;
        let lambda = partial_trace_mat(&ksk, (2, 2), Subsystem::Second)?;
        let inv_sqrt = {
            let eig = lambda.symmetric_eigen();
            let mut m = CMatrix::zeros(2, 2);
            for (k, &ev) in eig.eigenvalues.iter().enumerate() {
                let v = ev.max(1e-14).sqrt().recip();
                let col = eig.eigenvectors.column(k);
                for r in 0..2 {
                    for s in 0..2 {
                        m[(r, s)] += col[r] * col[s].conj() * c(v, 0.0);
                    }
                }
            }
            m
        };
        let lift = tensor(&inv_sqrt, &CMatrix::identity(2, 2));
        let next = &lift * ksk * &lift;
        let step = trace_norm(&(&next - &s_op));
        s_op = next;
        if step < STEP_TOL {
            converged = true;
            break;
        }
    }

    let probs: Vec<f64> = elements
        .iter()
        .map(|(e, _)| trace_product(e, &s_op).max(PROB_FLOOR))
        .collect();
    let log_likelihood: f64 = elements
        .iter()
        .zip(&probs)
        .filter(|((_, n), _)| *n > 0.0)
        .map(|((_, n), p)| n * p.ln())
        .sum();
    // shave off sub-epsilon negative eigenvalues from the final iterate
    let choi = ChoiOperator::new(clamp_psd(&s_op))?;
    Ok(ProcessEstimate {
        choi,
        iterations,
        log_likelihood,
        converged,
    })
}

/// Maximum-likelihood channel estimate from per-input Pauli counts.
///
/// Requires inputs spanning at least four operator directions (the six
/// canonical states qualify) and counts in all three bases for each input.
pub fn mle_process(data: &[(PureState, PauliCounts)]) -> Result<ProcessEstimate> {
    mle_process_iterate(data, |_| {})
}

/// Process fidelity of χ against a rank-1 ideal: F = Tr(χ_ideal · χ).
///
/// For a unitary ideal channel the χ-matrix is a rank-1 unit-trace
/// projector and F is the diagonal entry of χ at the ideal position.
pub fn process_fidelity(chi: &ChiMatrix, ideal: &ChiMatrix) -> Result<f64> {
    let evs = hermitian_eigenvalues(ideal.matrix());
    let rank_one =
        evs[3] > 1.0 - 1e-9 && evs[3] < 1.0 + 1e-9 && evs[..3].iter().all(|e| e.abs() < 1e-9);
    if !rank_one {
        return Err(Error::IdealNotRankOne);
    }
    let mut acc = c(0.0, 0.0);
    for r in 0..4 {
        for col in 0..4 {
            acc += ideal.matrix()[(r, col)] * chi.matrix()[(col, r)];
        }
    }
    Ok(acc.re)
}

/// Expected (noise-free) per-input counts produced by a channel measured
/// `per_basis` times in each Pauli basis for every input state.
pub fn expected_process_counts(
    s: &ChoiOperator,
    inputs: &[PureState],
    per_basis: f64,
) -> Result<Vec<(PureState, PauliCounts)>> {
    let mut out = Vec::with_capacity(inputs.len());
    for psi in inputs {
        let rho_out = apply_channel(s, &DensityMatrix::from_pure(psi))?;
        let norm = rho_out.trace().re;
        if norm <= 0.0 {
            return Err(Error::InvalidOperator(
                "channel annihilates an input".into(),
            ));
        }
        let mut cells = [[0.0; 2]; 3];
        for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
            for sign in Sign::BOTH {
                let p = (j.projector(sign.value()) * &rho_out).trace().re / norm;
                cells[jslot][sign.slot()] = p.max(0.0) * per_basis;
            }
        }
        out.push((psi.clone(), PauliCounts::new(cells)?));
    }
    Ok(out)
}

/// Standard deviation of the process fidelity under Poissonian resampling
/// of every cell of every input, over `n_resamples` resamples.
pub fn bootstrap_process_std(
    data: &[(PureState, PauliCounts)],
    ideal: &ChiMatrix,
    n_resamples: usize,
    seed: u64,
) -> Result<f64> {
    if n_resamples < 2 {
        return Err(Error::InvalidParameter(
            "bootstrap needs at least 2 resamples".into(),
        ));
    }
    let mut fidelities = Vec::with_capacity(n_resamples);
    for r in 0..n_resamples {
        let mut rng = seeds::rng(seed, seeds::stage::PROCESS_BOOTSTRAP, r as u64);
        let resampled: Vec<(PureState, PauliCounts)> = data
            .iter()
            .map(|(psi, counts)| (psi.clone(), counts.poisson_resampled(&mut rng)))
            .collect();
        let estimate = mle_process(&resampled)?;
        fidelities.push(process_fidelity(&chi_from_s(&estimate.choi), ideal)?);
    }
    let n = fidelities.len() as f64;
    let mean = fidelities.iter().sum::<f64>() / n;
    Ok((fidelities.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}
