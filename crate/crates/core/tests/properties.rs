//! Property tests for the algebraic invariants of the toolkit.

use antetomo::antedate::{correction_sign, transform_direction, unscramble, Direction};
use antetomo::proctomo::{chi_conjugation, choi_conjugation};
use antetomo::qcore::{
    apply_correction, c, fidelity_pure, max_abs_diff, BellOutcome, CMatrix, CVector,
    CorrectionUnitary, DensityMatrix, PauliIndex, PureState, StateLabel,
};
use antetomo::simproto::{analyzer_povm, BellBin, CountRow, CountsTable};
use proptest::prelude::*;

fn pure_state_strategy() -> impl Strategy<Value = PureState> {
    proptest::collection::vec(-1.0f64..1.0, 4)
        .prop_filter("nonzero amplitude", |v| {
            v.iter().map(|x| x * x).sum::<f64>() > 1e-4
        })
        .prop_map(|v| {
            PureState::normalized(CVector::from_vec(vec![c(v[0], v[1]), c(v[2], v[3])]))
                .expect("filtered nonzero")
        })
}

fn hermitian_strategy() -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec(-1.0f64..1.0, 32).prop_map(|v| {
        let g = CMatrix::from_fn(4, 4, |r, col| {
            c(v[2 * (4 * r + col)], v[2 * (4 * r + col) + 1])
        });
        &g * g.adjoint()
    })
}

proptest! {
    #[test]
    fn povm_elements_complete_for_every_visibility(v in 0.0f64..=1.0) {
        let [e0, e3, eu] = analyzer_povm(v).unwrap();
        let sum = &e0 + &e3 + &eu;
        prop_assert!(max_abs_diff(&sum, &CMatrix::identity(4, 4)) < 1e-14);
    }

    #[test]
    fn corrected_states_keep_unit_fidelity(psi in pure_state_strategy()) {
        for tau in CorrectionUnitary::ALL {
            let mapped = apply_correction(&psi, tau).unwrap();
            let rho = DensityMatrix::from_pure(&mapped);
            prop_assert!((fidelity_pure(&rho, &mapped).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn representation_conversion_round_trips(m in hermitian_strategy()) {
        let back = choi_conjugation(&chi_conjugation(&m));
        prop_assert!(max_abs_diff(&back, &m) < 1e-12 * (1.0 + m.norm()));
    }

    #[test]
    fn unscrambling_twice_is_the_identity(
        cells in proptest::collection::vec((0u32..1000, 0u32..1000), 12)
    ) {
        let mut rows = Vec::new();
        let mut k = 0;
        for bell in BellOutcome::ALL {
            for basis in 1..=3usize {
                let (p, m) = cells[k];
                k += 1;
                rows.push(CountRow {
                    state: StateLabel::D.to_string(),
                    basis,
                    bell: BellBin::Resolved(bell),
                    n_plus: p as f64,
                    n_minus: m as f64,
                });
            }
        }
        let table = CountsTable { rows };
        let once = unscramble(&table).unwrap();
        // per-cell totals conserved
        for (a, b) in table.rows.iter().zip(&once.rows) {
            prop_assert_eq!(a.total(), b.total());
        }
        let twice = unscramble(&once.as_table()).unwrap();
        prop_assert_eq!(twice.rows, table.rows);
    }

    #[test]
    fn direction_transform_tracks_sign_rule(
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0
    ) {
        prop_assume!((x * x + y * y + z * z).sqrt() > 1e-3);
        let n = Direction::normalized([x, y, z]).unwrap();
        for i in BellOutcome::ALL {
            let b = transform_direction(&n, i).components();
            for (jslot, j) in PauliIndex::TOMOGRAPHIC.iter().enumerate() {
                let expected = correction_sign(i, *j).unwrap() * n.components()[jslot];
                prop_assert!((b[jslot] - expected).abs() < 1e-15);
            }
        }
    }
}
