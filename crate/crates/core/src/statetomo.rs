//! Single-qubit maximum-likelihood state reconstruction from Pauli counts,
//! with Poissonian bootstrap error bars.
//!
//! The estimator is the classic fixed-point iteration: with observed
//! frequencies f_k over the six projector cells Π_k = (𝟙 ± σ_j)/2 and
//! p_k(ρ) = Tr(Π_k ρ),
//!
//!   R(ρ) = Σ_k (f_k / p_k(ρ)) Π_k,   ρ ← R ρ R / Tr(R ρ R),
//!
//! started from 𝟙/2 (full rank, so every p_k > 0 at step one) and stopped
//! when the trace-norm step falls below 1e-10 or after 10⁴ iterations.
//! Probabilities are floored at 1e-12 inside R so rank-deficient data cannot
//! divide by zero, and the log-likelihood is checked to be non-decreasing at
//! every step.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::qcore::{c, fidelity_pure, trace_norm, CMatrix, DensityMatrix, PauliIndex, PureState};
use crate::simproto::Sign;
use crate::{seeds, Error, Result};

/// Iteration cap for the fixed-point loop.
pub const MAX_ITERATIONS: usize = 10_000;
/// Trace-norm step size below which the iteration is declared converged.
pub const STEP_TOL: f64 = 1e-10;
/// Floor applied to cell probabilities inside R.
pub const PROB_FLOOR: f64 = 1e-12;

/// Counts for one state: six cells indexed by tomographic basis and sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliCounts {
    /// `cells[j-1][slot]`, slot 0 = +, 1 = −.
    cells: [[f64; 2]; 3],
}

impl PauliCounts {
    pub fn new(cells: [[f64; 2]; 3]) -> Result<Self> {
        for row in &cells {
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "negative or non-finite count {v}"
                    )));
                }
            }
        }
        Ok(PauliCounts { cells })
    }

    pub fn get(&self, j: PauliIndex, sign: Sign) -> f64 {
        self.cells[j.index() - 1][sign.slot()]
    }

    pub fn basis_total(&self, j: PauliIndex) -> f64 {
        self.cells[j.index() - 1].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }

    /// Errors unless every basis carries at least one count.
    pub fn require_complete(&self) -> Result<()> {
        for j in PauliIndex::TOMOGRAPHIC {
            if self.basis_total(j) <= 0.0 {
                return Err(Error::MissingBasis { basis: j.index() });
            }
        }
        Ok(())
    }

    /// ⟨σ_j⟩ = (n₊ − n₋)/(n₊ + n₋) per basis; missing bases are errors.
    pub fn expectations(&self) -> Result<[f64; 3]> {
        self.require_complete()?;
        let mut out = [0.0; 3];
        for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
            out[jslot] =
                (self.get(*j, Sign::Plus) - self.get(*j, Sign::Minus)) / self.basis_total(*j);
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut cells = self.cells;
        for row in &mut cells {
            for v in row {
                *v *= factor;
            }
        }
        PauliCounts::new(cells)
    }

    /// Draws every cell from a Poisson law with mean equal to the observed
    /// count (cells at zero stay zero).
    pub fn poisson_resampled<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut cells = self.cells;
        for row in &mut cells {
            for v in row {
                if *v > 0.0 {
                    let pois = Poisson::new(*v).expect("positive finite mean");
                    *v = pois.sample(rng);
                }
            }
        }
        PauliCounts { cells }
    }

    /// Expected (noise-free) counts for a state measured `per_basis` times
    /// in each Pauli basis.
    pub fn expected_from_state(rho: &DensityMatrix, per_basis: f64) -> Self {
        let mut cells = [[0.0; 2]; 3];
        for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
            for sign in Sign::BOTH {
                let p = (j.projector(sign.value()) * rho.matrix()).trace().re;
                cells[jslot][sign.slot()] = p.max(0.0) * per_basis;
            }
        }
        PauliCounts { cells }
    }

    /// Samples binomial counts for a state measured `per_basis` times in
    /// each Pauli basis.
    pub fn sampled_from_state<R: Rng + ?Sized>(
        rho: &DensityMatrix,
        per_basis: u64,
        rng: &mut R,
    ) -> Self {
        let mut cells = [[0.0; 2]; 3];
        for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
            let p = (j.projector(1.0) * rho.matrix()).trace().re.clamp(0.0, 1.0);
            let plus = Binomial::new(per_basis, p)
                .expect("valid probability")
                .sample(rng);
            cells[jslot][0] = plus as f64;
            cells[jslot][1] = (per_basis - plus) as f64;
        }
        PauliCounts { cells }
    }
}

/// Output of the fixed-point reconstruction.
#[derive(Debug, Clone)]
pub struct StateEstimate {
    pub rho: DensityMatrix,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// False only when the iteration cap was hit before the step tolerance.
    pub converged: bool,
}

fn projector_cells() -> [(usize, CMatrix, Sign); 6] {
    let mut out: Vec<(usize, CMatrix, Sign)> = Vec::with_capacity(6);
    for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
        for sign in Sign::BOTH {
            out.push((jslot, j.projector(sign.value()), sign));
        }
    }
    out.try_into().expect("six cells")
}

fn log_likelihood(counts: &PauliCounts, probs: &[f64; 6]) -> f64 {
    let cells = projector_indices();
    let mut ll = 0.0;
    for (k, &(jslot, sign)) in cells.iter().enumerate() {
        let n = counts.cells[jslot][sign.slot()];
        if n > 0.0 {
            ll += n * probs[k].ln();
        }
    }
    ll
}

fn projector_indices() -> [(usize, Sign); 6] {
    [
        (0, Sign::Plus),
        (0, Sign::Minus),
        (1, Sign::Plus),
        (1, Sign::Minus),
        (2, Sign::Plus),
        (2, Sign::Minus),
    ]
}

fn mle_iterate(counts: &PauliCounts, mut observer: impl FnMut(f64)) -> Result<StateEstimate> {
    counts.require_complete()?;
    let total = counts.total();
    let cells = projector_cells();
    let freqs: Vec<f64> = cells
        .iter()
        .map(|(jslot, _, sign)| counts.cells[*jslot][sign.slot()] / total)
        .collect();

    let mut rho: CMatrix = CMatrix::identity(2, 2) * c(0.5, 0.0);
    let mut prev_ll = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut probs = [0.0f64; 6];

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        for (k, (_, proj, _)) in cells.iter().enumerate() {
            probs[k] = (proj * &rho).trace().re.max(PROB_FLOOR);
        }
        let ll = log_likelihood(counts, &probs);
        observer(ll);
        let slack = 1e-9 * (1.0 + ll.abs());
        if ll + slack < prev_ll {
            return Err(Error::NonMonotoneLikelihood {
                iteration: iterations,
                delta: prev_ll - ll,
            });
        }
        prev_ll = ll;

        let mut r_op = CMatrix::zeros(2, 2);
        for (k, (_, proj, _)) in cells.iter().enumerate() {
            if freqs[k] > 0.0 {
                r_op += proj * c(freqs[k] / probs[k], 0.0);
            }
        }
        let mut next = &r_op * &rho * &r_op;
        let tr = next.trace().re;
        next /= c(tr, 0.0);
        let step = trace_norm(&(&next - &rho));
        rho = next;
        if step < STEP_TOL {
            converged = true;
            break;
        }
    }

    for (k, (_, proj, _)) in cells.iter().enumerate() {
        probs[k] = (proj * &rho).trace().re.max(PROB_FLOOR);
    }
    let log_likelihood = log_likelihood(counts, &probs);
    // the iterate is positive by construction up to rounding at machine
    // precision; the projection only shaves that rounding off
    let rho = DensityMatrix::project_to_physical(&rho)?;
    Ok(StateEstimate {
        rho,
        iterations,
        log_likelihood,
        converged,
    })
}

/// Maximum-likelihood state estimate from six Pauli cells.
pub fn mle_reconstruct(counts: &PauliCounts) -> Result<StateEstimate> {
    mle_iterate(counts, |_| {})
}

/// ‖R(ρ)ρR(ρ) − ρ‖₁, the defect of the maximum-likelihood fixed-point
/// equation at ρ; an independent certificate that the iteration converged
/// to an extremum.
pub fn fixed_point_residual(counts: &PauliCounts, rho: &DensityMatrix) -> f64 {
    let cells = projector_cells();
    let total = counts.total();
    let mut r_op = CMatrix::zeros(2, 2);
    for (jslot, proj, sign) in &cells {
        let f = counts.cells[*jslot][sign.slot()] / total;
        if f > 0.0 {
            let p = (proj * rho.matrix()).trace().re.max(PROB_FLOOR);
            r_op += proj * c(f / p, 0.0);
        }
    }
    let fixed = &r_op * rho.matrix() * &r_op;
    trace_norm(&(&fixed - rho.matrix()))
}

/// Direct linear inversion ρ_lin = ½(𝟙 + Σ_j ⟨σ_j⟩ σ_j).
///
/// The result is Hermitian with unit trace but may be non-positive; it is
/// returned as a raw matrix, unclamped, for diagnostics and as the
/// agreement oracle for the interior of the state space.
pub fn linear_inversion(expectations: [f64; 3]) -> CMatrix {
    let mut m = CMatrix::identity(2, 2);
    for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
        m += j.matrix() * c(expectations[jslot], 0.0);
    }
    m * c(0.5, 0.0)
}

/// Standard deviation of the reconstructed fidelity under Poissonian
/// resampling of every cell, over `n_resamples` resamples.
///
/// Resample r uses the independently derived stream (`seed`, r), so the
/// result is reproducible and resamples may be evaluated in any order.
pub fn bootstrap_fidelity_std(
    counts: &PauliCounts,
    target: &PureState,
    n_resamples: usize,
    seed: u64,
) -> Result<f64> {
    if n_resamples < 2 {
        return Err(Error::InvalidParameter(
            "bootstrap needs at least 2 resamples".into(),
        ));
    }
    counts.require_complete()?;
    let mut fidelities = Vec::with_capacity(n_resamples);
    for r in 0..n_resamples {
        let mut rng = seeds::rng(seed, seeds::stage::STATE_BOOTSTRAP, r as u64);
        let resampled = counts.poisson_resampled(&mut rng);
        let estimate = mle_reconstruct(&resampled)?;
        fidelities.push(fidelity_pure(&estimate.rho, target)?);
    }
    Ok(sample_std(&fidelities))
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// A complete single-state tomography result.
#[derive(Debug, Clone)]
pub struct TomographyResult {
    pub rho_est: DensityMatrix,
    pub fidelity: f64,
    pub fidelity_std: f64,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub converged: bool,
}

/// Reconstructs a state and reports fidelity against `target` with a
/// bootstrapped error bar.
pub fn reconstruct_with_error(
    counts: &PauliCounts,
    target: &PureState,
    n_resamples: usize,
    seed: u64,
) -> Result<TomographyResult> {
    let estimate = mle_reconstruct(counts)?;
    let fidelity = fidelity_pure(&estimate.rho, target)?;
    let fidelity_std = bootstrap_fidelity_std(counts, target, n_resamples, seed)?;
    Ok(TomographyResult {
        rho_est: estimate.rho,
        fidelity,
        fidelity_std,
        iterations: estimate.iterations,
        log_likelihood: estimate.log_likelihood,
        converged: estimate.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antedate::BellGroup;
    use crate::fixtures;
    use crate::qcore::{hermitian_eigenvalues, max_abs_diff, StateLabel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn counts(cells: [[f64; 2]; 3]) -> PauliCounts {
        PauliCounts::new(cells).unwrap()
    }

    #[test]
    fn perfect_eigenstate_data_recovers_pure_state() {
        // σ₃ all +, σ₁/σ₂ balanced: the maximizer is |0⟩⟨0|
        let data = counts([[500.0, 500.0], [500.0, 500.0], [1000.0, 0.0]]);
        let est = mle_reconstruct(&data).unwrap();
        let target = DensityMatrix::from_pure(&StateLabel::H.state());
        assert!(
            est.rho.trace_distance(&target) < 1e-6,
            "distance {}",
            est.rho.trace_distance(&target)
        );
        assert!(est.converged);
    }

    #[test]
    fn balanced_data_recovers_maximally_mixed() {
        let data = counts([[250.0, 250.0], [250.0, 250.0], [250.0, 250.0]]);
        let est = mle_reconstruct(&data).unwrap();
        let mm = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(est.rho.trace_distance(&mm) < 1e-6);
    }

    #[test]
    fn reconstruction_matches_reference_forward_model() {
        // forward-model oracle: exact probabilities of the published |D⟩
        // Φ⁺ matrix at 10⁶ counts per basis, rounded to integers
        let fx = fixtures::state_fixture(BellGroup::PhiPlus, StateLabel::D);
        let mut expected = PauliCounts::expected_from_state(&fx.rho, 1e6);
        for jslot in 0..3 {
            for slot in 0..2 {
                expected.cells[jslot][slot] = expected.cells[jslot][slot].round();
            }
        }
        let est = mle_reconstruct(&expected).unwrap();
        assert!(
            max_abs_diff(est.rho.matrix(), fx.rho.matrix()) < 0.005,
            "entrywise deviation {}",
            max_abs_diff(est.rho.matrix(), fx.rho.matrix())
        );
    }

    #[test]
    fn missing_or_empty_bases_are_errors() {
        let data = counts([[10.0, 10.0], [0.0, 0.0], [10.0, 10.0]]);
        assert!(matches!(
            mle_reconstruct(&data),
            Err(Error::MissingBasis { basis: 2 })
        ));
        let zeros = counts([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]);
        assert!(mle_reconstruct(&zeros).is_err());
    }

    #[test]
    fn likelihood_is_monotone_along_the_iteration() {
        let mut rng = ChaCha12Rng::seed_from_u64(60);
        for _ in 0..10 {
            let rho = DensityMatrix::random(2, &mut rng).unwrap();
            let data = PauliCounts::sampled_from_state(&rho, 300, &mut rng);
            let mut history = Vec::new();
            let est = mle_iterate(&data, |ll| history.push(ll)).unwrap();
            assert!(est.converged);
            for w in history.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()),
                    "{} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn fixed_point_residual_is_small_at_convergence() {
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        for _ in 0..10 {
            let rho = DensityMatrix::random(2, &mut rng).unwrap();
            let data = PauliCounts::sampled_from_state(&rho, 1000, &mut rng);
            let est = mle_reconstruct(&data).unwrap();
            assert!(fixed_point_residual(&data, &est.rho) < 1e-8);
        }
    }

    #[test]
    fn estimates_tighten_with_more_data() {
        // median trace distance over 20 seeds must strictly decrease from
        // N = 10² to N = 10⁴ per basis
        let mut rng = ChaCha12Rng::seed_from_u64(62);
        let rho = DensityMatrix::random(2, &mut rng).unwrap();
        let mut medians = Vec::new();
        for n in [100u64, 10_000] {
            let mut distances: Vec<f64> = (0..20)
                .map(|k| {
                    let mut srng = ChaCha12Rng::seed_from_u64(1000 + k);
                    let data = PauliCounts::sampled_from_state(&rho, n, &mut srng);
                    let est = mle_reconstruct(&data).unwrap();
                    est.rho.trace_distance(&rho)
                })
                .collect();
            distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(0.5 * (distances[9] + distances[10]));
        }
        assert!(medians[1] < medians[0], "medians {medians:?}");
    }

    #[test]
    fn linear_inversion_closed_forms() {
        let z = linear_inversion([0.0, 0.0, 1.0]);
        assert!(max_abs_diff(&z, &StateLabel::H.state().projector()) < 1e-15);

        let mm = linear_inversion([0.0, 0.0, 0.0]);
        assert!(max_abs_diff(&mm, &(CMatrix::identity(2, 2) * c(0.5, 0.0))) < 1e-15);

        // non-positive case: minimum eigenvalue is (1 − √3)/2 exactly
        let m = linear_inversion([1.0, 1.0, 1.0]);
        let evs = hermitian_eigenvalues(&m);
        assert!((evs[0] - (1.0 - 3f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((m.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mle_agrees_with_linear_inversion_in_the_interior() {
        // at exact frequencies from a full-rank state the linear inversion
        // is already the maximizer
        let mut rng = ChaCha12Rng::seed_from_u64(63);
        for _ in 0..10 {
            let rho = DensityMatrix::random(2, &mut rng).unwrap();
            let data = PauliCounts::expected_from_state(&rho, 1e6);
            let inverted = linear_inversion(data.expectations().unwrap());
            let est = mle_reconstruct(&data).unwrap();
            if hermitian_eigenvalues(&inverted)[0] >= 0.0 {
                let li = DensityMatrix::new(inverted).unwrap();
                assert!(est.rho.trace_distance(&li) < 1e-4);
            }
        }
    }

    #[test]
    fn bootstrap_is_deterministic_and_scales() {
        let fx = fixtures::state_fixture(BellGroup::PhiPlus, StateLabel::D);
        // Table-scale statistics: a few hundred counts per cell
        let base = PauliCounts::expected_from_state(&fx.rho, 700.0);
        let target = StateLabel::D.state();

        let s1 = bootstrap_fidelity_std(&base, &target, 100, 5).unwrap();
        let s1_again = bootstrap_fidelity_std(&base, &target, 100, 5).unwrap();
        assert_eq!(s1, s1_again);

        // error bars at this scale sit where the reference tables put them
        assert!((0.01..=0.04).contains(&s1), "std {s1}");

        // ×100 counts shrink the error bar by ≈ ×10 (within a factor 1.5)
        let scaled = base.scaled(100.0).unwrap();
        let s2 = bootstrap_fidelity_std(&scaled, &target, 100, 5).unwrap();
        let ratio = s1 / s2;
        assert!(
            (10.0 / 1.5..=10.0 * 1.5).contains(&ratio),
            "scaling ratio {ratio} (std {s1} -> {s2})"
        );
    }

    #[test]
    fn full_result_assembly() {
        let fx = fixtures::state_fixture(BellGroup::PhiPlus, StateLabel::R);
        let data = PauliCounts::expected_from_state(&fx.rho, 500.0);
        let out = reconstruct_with_error(&data, &StateLabel::R.state(), 50, 9).unwrap();
        assert!((out.fidelity - fx.fidelity).abs() < 0.01);
        assert!(out.fidelity_std > 0.0);
        assert!(out.converged);
    }
}
