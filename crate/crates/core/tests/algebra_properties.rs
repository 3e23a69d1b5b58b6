use ndarray::Array2;
use proptest::prelude::*;
use qsim_core::analysis::{entropy_vn, fidelity, wigner};
use qsim_core::factories::*;
use qsim_core::linalg::dense;
use qsim_core::{ptrace, tensor, tensor_all, Kind, QuantumObject, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<C64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((rows, cols), || {
        let re: f64 = StandardNormal.sample(&mut r);
        let im: f64 = StandardNormal.sample(&mut r);
        C64::new(re, im)
    })
}

fn random_op(n: usize, seed: u64) -> QuantumObject {
    QuantumObject::operator(gaussian(n, n, seed)).unwrap()
}

fn random_hermitian(n: usize, seed: u64) -> QuantumObject {
    let g = gaussian(n, n, seed);
    QuantumObject::operator((&g + &dense::adjoint(&g)).mapv(|z| z * 0.5)).unwrap()
}

fn max_diff(a: &QuantumObject, b: &QuantumObject) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let (a, b) = (a.to_dense(), b.to_dense());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn with_dims(x: &QuantumObject, dims: Vec<usize>) -> QuantumObject {
    QuantumObject::from_dense(x.to_dense(), x.kind(), dims).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kronecker_product_is_associative(
        da in 1usize..4, db in 1usize..4, dc in 1usize..4, seed in any::<u64>()
    ) {
        let a = random_op(da, seed);
        let b = random_op(db, seed ^ 1);
        let c = random_op(dc, seed ^ 2);
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        prop_assert!(max_diff(&left, &right) < 1e-14);
        prop_assert_eq!(left.dims(), &[da, db, dc][..]);
    }

    #[test]
    fn tracing_out_everything_gives_the_trace(
        dims in prop::collection::vec(1usize..4, 1..4), seed in any::<u64>()
    ) {
        let d: usize = dims.iter().product();
        let x = with_dims(&random_op(d, seed), dims);
        let scalar = ptrace(&x, &[]).unwrap();
        prop_assert_eq!(scalar.shape(), (1, 1));
        prop_assert!((scalar.get(0, 0) - x.tr()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_keeps_reduced_expectations(
        d1 in 1usize..4, d2 in 1usize..4, seed in any::<u64>()
    ) {
        let rho = with_dims(&rand_dm(d1 * d2, seed).unwrap(), vec![d1, d2]);
        let a = random_hermitian(d1, seed ^ 3);
        let lifted = tensor(&a, &qeye(d2).unwrap()).unwrap();
        let reduced = ptrace(&rho, &[0]).unwrap();
        let full = lifted.expect(&rho).unwrap();
        prop_assert!((a.expect(&reduced).unwrap() - full).norm() < 1e-12);
    }

    #[test]
    fn adjoint_reverses_products(seed in any::<u64>()) {
        let a = random_op(8, seed);
        let b = random_op(8, seed ^ 5);
        let lhs = (&a * &b).dag();
        let rhs = &b.dag() * &a.dag();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn exponential_of_anti_hermitian_is_unitary(n in 1usize..=64, seed in any::<u64>()) {
        let h = random_hermitian(n, seed);
        let u = h.scale(C64::new(0.0, -1.0)).expm().unwrap();
        let id = QuantumObject::operator(dense::identity(n)).unwrap();
        prop_assert!(max_diff(&(&u.dag() * &u), &id) < 1e-10);
    }

    #[test]
    fn sparse_and_dense_paths_agree(seed in any::<u64>(), n in 2usize..6) {
        let a = random_op(n, seed);
        let b = random_op(n, seed ^ 9);
        let (sa, sb) = (a.clone().into_sparse(), b.clone().into_sparse());
        let (da, db) = (a.into_dense(), b.into_dense());
        prop_assert!(max_diff(&(&sa * &sb), &(&da * &db)) < 1e-13);
        prop_assert!(max_diff(&tensor(&sa, &sb).unwrap(), &tensor(&da, &db).unwrap()) < 1e-13);
        prop_assert!(max_diff(&sa.dag(), &da.dag()) < 1e-13);
        prop_assert!(max_diff(&(&sa + &db), &(&da + &sb)) < 1e-13);
        let sab = with_dims(&tensor(&sa, &sb).unwrap().into_sparse(), vec![n, n]).into_sparse();
        let dab = with_dims(&sab, vec![n, n]).into_dense();
        prop_assert!(max_diff(&ptrace(&sab, &[1]).unwrap(), &ptrace(&dab, &[1]).unwrap()) < 1e-13);
        prop_assert!(max_diff(&sa.expm().unwrap(), &da.expm().unwrap()) < 1e-11);
    }

    #[test]
    fn hermitian_factories(n in 2usize..20, nbar in 0.0f64..5.0) {
        for op in [num(n).unwrap(), position(n).unwrap(), momentum(n).unwrap(), thermal_dm(n, nbar).unwrap()] {
            prop_assert!(op.is_hermitian(1e-14));
        }
        for op in [sigmax(), sigmay(), sigmaz()] {
            prop_assert!(op.is_hermitian(1e-14));
        }
        prop_assert!((thermal_dm(n, nbar).unwrap().tr().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_overlap(
        ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, bi in -2.0f64..2.0
    ) {
        let (a, b) = (C64::new(ar, ai), C64::new(br, bi));
        let n = 60;
        let ov = coherent(n, a).unwrap().overlap(&coherent(n, b).unwrap()).unwrap();
        prop_assert!((ov.norm_sqr() - (-(a - b).norm_sqr()).exp()).abs() < 1e-6);
    }

    #[test]
    fn entropy_is_unitarily_invariant(n in 2usize..8, seed in any::<u64>()) {
        let rho = rand_dm(n, seed).unwrap();
        let u = rand_unitary(n, seed ^ 11).unwrap();
        let rotated = &(&u * &rho) * &u.dag();
        let (s0, s1) = (entropy_vn(&rho).unwrap(), entropy_vn(&rotated).unwrap());
        prop_assert!((s0 - s1).abs() < 1e-10);
        prop_assert!(s0 >= -1e-12 && s0 <= (n as f64).ln() + 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(n in 2usize..8, seed in any::<u64>()) {
        let rho = rand_dm(n, seed).unwrap();
        let sigma = rand_dm(n, seed ^ 13).unwrap();
        let f1 = fidelity(&rho, &sigma).unwrap();
        let f2 = fidelity(&sigma, &rho).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-10);
        prop_assert!(f1 > 0.0 && f1 <= 1.0 + 1e-10);
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn zero_temperature_thermal_state_is_the_vacuum() {
    for n in [2, 5, 17] {
        let diff = max_diff(&thermal_dm(n, 0.0).unwrap(), &fock_dm(n, 0).unwrap());
        assert_eq!(diff, 0.0);
    }
}

#[test]
fn tensor_all_matches_nested_tensors() {
    let parts = [sigmax(), destroy(3).unwrap(), sigmaz()];
    let nested = tensor(&tensor(&parts[0], &parts[1]).unwrap(), &parts[2]).unwrap();
    assert_eq!(max_diff(&tensor_all(&parts).unwrap(), &nested), 0.0);
    assert_eq!(nested.kind(), Kind::Operator);
}

fn hermite_function_sq(n: usize, x: f64) -> f64 {
    // normalized ψₙ(x) by the stable three-term recursion
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
    for k in 0..n {
        let next = (2.0 / (k + 1) as f64).sqrt() * x * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur * cur
}

#[test]
fn wigner_marginals_are_position_densities() {
    let np = 801;
    let ps: Vec<f64> = (0..np).map(|i| -8.0 + 16.0 * i as f64 / (np - 1) as f64).collect();
    let dp = ps[1] - ps[0];
    let xs: Vec<f64> = (0..21).map(|i| -2.5 + 0.25 * i as f64).collect();
    for n in 0..4 {
        let w = wigner(&fock(12, n).unwrap(), &xs, &ps).unwrap();
        for (j, &x) in xs.iter().enumerate() {
            let col = w.values.column(j);
            let marginal = dp * (col.sum() - 0.5 * (col[0] + col[np - 1]));
            assert!((marginal - hermite_function_sq(n, x)).abs() < 1e-4, "n = {n}, x = {x}");
        }
    }
}
