use ebit_core::qcore::linalg::{kron, max_abs_diff, outer, re};
use ebit_core::qcore::random::{random_state, random_unitary};
use ebit_core::qcore::{
    entanglement_entropy, partial_trace, schmidt_decompose, werner_state, DensityMatrix,
    PureBipartiteState, Side, C64,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                #[allow(clippy::needless_range_loop)]
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

/// Eigenvalues of a Hermitian matrix via its real 2n×2n embedding (each appears twice).
fn hermitian_eigenvalues(h: &DMatrix<C64>) -> Vec<f64> {
    let n = h.nrows();
    let mut big = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            big[i][j] = h[(i, j)].re;
            big[i + n][j + n] = h[(i, j)].re;
            big[i][j + n] = -h[(i, j)].im;
            big[i + n][j] = h[(i, j)].im;
        }
    }
    jacobi_eigenvalues(big).into_iter().step_by(2).collect()
}

fn state_strategy() -> impl Strategy<Value = PureBipartiteState> {
    (1usize..=5, 1usize..=5, any::<u64>())
        .prop_map(|(a, b, seed)| random_state(a, b, &mut ChaCha8Rng::seed_from_u64(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn schmidt_reconstructs_the_state(state in state_strategy()) {
        let sf = schmidt_decompose(&state);
        prop_assert!(max_abs_diff(&sf.reconstruct(), state.amplitudes()) < 1e-10);
        let total: f64 = sf.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(sf.coefficients().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn singular_values_match_jacobi_oracle(state in state_strategy()) {
        let m = state.amplitudes();
        let aat = m * m.adjoint();
        let oracle = hermitian_eigenvalues(&aat);
        let weights = schmidt_decompose(&state).weights();
        for (i, w) in oracle.iter().enumerate() {
            let ours = weights.get(i).copied().unwrap_or(0.0);
            prop_assert!((ours - w.max(0.0)).abs() < 1e-10, "{ours} vs {w}");
        }
    }

    #[test]
    fn local_unitaries_preserve_coefficients(state in state_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ua = random_unitary(state.dim_a(), &mut rng);
        let ub = random_unitary(state.dim_b(), &mut rng);
        let moved = PureBipartiteState::new(&ua * state.amplitudes() * ub.transpose()).unwrap();
        let c0 = schmidt_decompose(&state).coefficients().to_vec();
        let c1 = schmidt_decompose(&moved).coefficients().to_vec();
        for (x, y) in c0.iter().zip(&c1) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!((entanglement_entropy(&state) - entanglement_entropy(&moved)).abs() < 1e-9);
    }

    #[test]
    fn both_marginals_have_equal_entropy(state in state_strategy()) {
        let sa = partial_trace(&state, Side::A).entropy();
        let sb = partial_trace(&state, Side::B).entropy();
        prop_assert!((sa - sb).abs() < 1e-9);
        prop_assert!((sa - entanglement_entropy(&state)).abs() < 1e-9);
    }

    #[test]
    fn partial_trace_matches_index_sum(state in state_strategy()) {
        let m = state.amplitudes();
        let (da, db) = (state.dim_a(), state.dim_b());
        let rho_a = DMatrix::from_fn(da, da, |i, k| (0..db).map(|j| m[(i, j)] * m[(k, j)].conj()).sum::<C64>());
        let rho_b = DMatrix::from_fn(db, db, |j, l| (0..da).map(|i| m[(i, j)] * m[(i, l)].conj()).sum::<C64>());
        prop_assert!(max_abs_diff(partial_trace(&state, Side::A).matrix(), &rho_a) < 1e-12);
        prop_assert!(max_abs_diff(partial_trace(&state, Side::B).matrix(), &rho_b) < 1e-12);
    }
}

#[test]
fn product_and_maximal_states() {
    let a = DVector::from_vec(vec![re(0.6), re(0.8)]);
    let b = DVector::from_vec(vec![re(1.0), re(0.0), re(0.0)]);
    let p = PureBipartiteState::product(&a, &b).unwrap();
    assert!(entanglement_entropy(&p).abs() < 1e-12);
    for d in 2..=6 {
        let e = entanglement_entropy(&PureBipartiteState::maximally_entangled(d));
        assert!((e - (d as f64).log2()).abs() < 1e-12);
    }
}

#[test]
fn werner_state_spectrum_and_mixture() {
    let w = werner_state();
    let ev = w.eigenvalues();
    for (x, y) in ev.iter().zip([0.625, 0.125, 0.125, 0.125]) {
        assert!((x - y).abs() < 1e-12, "{ev:?}");
    }
    let singlet = PureBipartiteState::singlet().to_vector();
    let pure = DensityMatrix::pure(&singlet).unwrap();
    let mixed = DensityMatrix::maximally_mixed(4);
    let mix = DensityMatrix::mixture(&[(0.5, &pure), (0.5, &mixed)]).unwrap();
    assert!(max_abs_diff(mix.matrix(), w.matrix()) < 1e-12);
    // the singlet vector in the |↑↓⟩, |↓↑⟩ convention is (|01⟩ − |10⟩)/√2
    let psi_minus = DVector::from_vec(vec![
        re(0.0),
        re(0.5f64.sqrt()),
        re(-0.5f64.sqrt()),
        re(0.0),
    ]);
    let direct =
        DMatrix::<C64>::identity(4, 4) * re(0.125) + outer(&psi_minus, &psi_minus) * re(0.5);
    assert!(max_abs_diff(&direct, w.matrix()) < 1e-12);
}

#[test]
fn tensor_groups_parties() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let s = random_state(2, 3, &mut rng);
    let t = random_state(3, 2, &mut rng);
    let st = s.tensor(&t);
    assert_eq!((st.dim_a(), st.dim_b()), (6, 6));
    assert!(max_abs_diff(st.amplitudes(), &kron(s.amplitudes(), t.amplitudes())) < 1e-15);
    let e = entanglement_entropy(&st);
    assert!((e - entanglement_entropy(&s) - entanglement_entropy(&t)).abs() < 1e-9);
}
