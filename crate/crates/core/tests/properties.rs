use proptest::prelude::*;

use curvlab::curvature::{kulkarni_nomizu, CurvatureOperator, SymmetricTwoTensor};
use curvlab::gluing::smooth_step;
use curvlab::lie::{bracket, c, phi, so_dim, CVec, SkewMatrix, C64, I};
use curvlab::rng::{complex_matrix, rotation, stream_rng, symmetric};

fn cvec(n: usize, seed: u64) -> CVec {
    let mut rng = stream_rng(seed, 1);
    curvlab::rng::complex_vector(&mut rng, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_is_antisymmetric_and_bilinear(n in 3usize..8, seed in any::<u64>(), s in -3.0f64..3.0) {
        let (u, v, w) = (cvec(n, seed), cvec(n, seed ^ 1), cvec(n, seed ^ 2));
        let a = phi(&u, &v).unwrap();
        prop_assert!(a.add(&phi(&v, &u).unwrap()).norm() < 1e-12);
        let lhs = phi(&(&u * C64::new(s, 1.0) + &w), &v).unwrap();
        let rhs = a.scale(C64::new(s, 1.0)).add(&phi(&w, &v).unwrap());
        prop_assert!(lhs.sub(&rhs).norm() < 1e-11);
    }

    #[test]
    fn bracket_is_antisymmetric(n in 3usize..7, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let a = SkewMatrix::new(complex_matrix(&mut rng, n, n));
        let b = SkewMatrix::new(complex_matrix(&mut rng, n, n));
        prop_assert!(bracket(&a, &b).add(&bracket(&b, &a)).norm() < 1e-12);
    }

    #[test]
    fn qform_is_rotation_invariant(n in 3usize..7, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let r = CurvatureOperator::new(n, symmetric(&mut rng, so_dim(n))).unwrap();
        let p = rotation(&mut rng, n);
        let x = SkewMatrix::new(complex_matrix(&mut rng, n, n));
        let pc = p.map(c);
        let y = SkewMatrix::new(pc.transpose() * x.matrix() * &pc);
        let lhs = r.conjugate_by(&p).unwrap().qform(&x).unwrap();
        prop_assert!((lhs - r.qform(&y).unwrap()).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn kn_products_satisfy_bianchi(n in 3usize..7, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let h = SymmetricTwoTensor::new(symmetric(&mut rng, n)).unwrap();
        let k = SymmetricTwoTensor::new(symmetric(&mut rng, n)).unwrap();
        let r = kulkarni_nomizu(&h, &k).unwrap();
        prop_assert!(r.bianchi_residual() < 1e-12);
        let s = kulkarni_nomizu(&k, &h).unwrap();
        prop_assert!((r.matrix() - s.matrix()).amax() < 1e-14);
    }

    #[test]
    fn form_ignores_global_phase(n in 3usize..7, seed in any::<u64>(), t in 0.0f64..6.3) {
        let mut rng = stream_rng(seed, 0);
        let r = CurvatureOperator::new(n, symmetric(&mut rng, so_dim(n))).unwrap();
        let x = SkewMatrix::new(complex_matrix(&mut rng, n, n));
        let y = x.scale(C64::new(t.cos(), 0.0) + I * t.sin());
        prop_assert!((r.qform(&x).unwrap() - r.qform(&y).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn smooth_step_is_monotone_and_symmetric(a in -0.5f64..1.5, b in -0.5f64..1.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(smooth_step(lo) <= smooth_step(hi));
        prop_assert!((smooth_step(a) + smooth_step(1.0 - a) - 1.0).abs() < 1e-14);
    }
}
