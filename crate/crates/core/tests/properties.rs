use proptest::prelude::*;

use modewise::decomposition::{multilinear_rank, truncate_rank};
use modewise::measurement::{make_gaussian, make_sors_with, RowSampling};
use modewise::rng::{rng_from_seed, standard_normals};
use modewise::tensor::{dot, kronecker, outer_product};
use modewise::{DenseTensor, Matrix, MeasurementOperator, RankVector, ReshapePlan};

fn tensor(shape: &[usize], seed: u64) -> DenseTensor {
    let len = shape.iter().product();
    DenseTensor::new(shape.to_vec(), standard_normals(&mut rng_from_seed(seed), len)).unwrap()
}

fn matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    Matrix::new(rows, cols, standard_normals(&mut rng_from_seed(seed), rows * cols)).unwrap()
}

fn close(a: &DenseTensor, b: &DenseTensor, tol: f64) -> bool {
    a.shape() == b.shape() && a.sub(b).unwrap().norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 2..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mode_products_on_distinct_modes_commute(shape in shape_strategy(), seed in 0u64..10_000, rows in 1usize..4) {
        let x = tensor(&shape, seed);
        let (i, j) = (0, shape.len() - 1);
        let a = matrix(rows, shape[i], seed + 1);
        let b = matrix(rows + 1, shape[j], seed + 2);
        let left = x.mode_product(&a, i).unwrap().mode_product(&b, j).unwrap();
        let right = x.mode_product(&b, j).unwrap().mode_product(&a, i).unwrap();
        prop_assert!(close(&left, &right, 1e-12));
    }

    #[test]
    fn same_mode_products_compose(shape in shape_strategy(), seed in 0u64..10_000, j in 0usize..4) {
        let j = j % shape.len();
        let x = tensor(&shape, seed);
        let a = matrix(3, shape[j], seed + 1);
        let b = matrix(2, 3, seed + 2);
        let twice = x.mode_product(&a, j).unwrap().mode_product(&b, j).unwrap();
        let once = x.mode_product(&b.matmul(&a).unwrap(), j).unwrap();
        prop_assert!(close(&twice, &once, 1e-12));
    }

    #[test]
    fn mode_product_is_linear(shape in shape_strategy(), seed in 0u64..10_000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let j = seed as usize % shape.len();
        let x = tensor(&shape, seed);
        let y = tensor(&shape, seed + 1);
        let u = matrix(2, shape[j], seed + 2);
        let lhs = x.scaled(alpha).add(&y.scaled(beta)).unwrap().mode_product(&u, j).unwrap();
        let rhs = x.mode_product(&u, j).unwrap().scaled(alpha)
            .add(&y.mode_product(&u, j).unwrap().scaled(beta)).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn unfold_fold_round_trip(shape in shape_strategy(), seed in 0u64..10_000) {
        let x = tensor(&shape, seed);
        for j in 0..shape.len() {
            let m = x.unfold(j).unwrap();
            prop_assert_eq!(m.rows(), shape[j]);
            prop_assert_eq!(DenseTensor::fold(&m, j, &shape).unwrap(), x.clone());
        }
    }

    #[test]
    fn reshape_is_an_isometry(seed in 0u64..10_000, n in 1usize..4, half in 1usize..3) {
        let shape = vec![n + 1; 2 * half];
        let x = tensor(&shape, seed);
        let y = tensor(&shape, seed + 7);
        for kappa in [1, 2, half * 2] {
            let plan = ReshapePlan::new(&shape, kappa).unwrap();
            let (fx, fy) = (plan.flatten(&x).unwrap(), plan.flatten(&y).unwrap());
            prop_assert_eq!(fx.inner(&fy).unwrap(), x.inner(&y).unwrap());
            prop_assert_eq!(plan.unflatten(&fx).unwrap(), x.clone());
        }
    }

    #[test]
    fn outer_product_vectorizes_to_kronecker(seed in 0u64..10_000, a in 1usize..6, b in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let u = standard_normals(&mut rng, a);
        let v = standard_normals(&mut rng, b);
        prop_assert_eq!(outer_product(&[&u, &v]).unwrap().into_data(), kronecker(&u, &v));
    }

    #[test]
    fn truncation_is_idempotent_and_rank_bounded(seed in 0u64..10_000, r in 1usize..3) {
        let shape = [4, 3, 5];
        let rank = RankVector::uniform(r, 3).unwrap();
        let z = tensor(&shape, seed);
        let h = truncate_rank(&z, &rank).unwrap();
        prop_assert!(close(&truncate_rank(&h, &rank).unwrap(), &h, 1e-10));
        let achieved = multilinear_rank(&h, 1e-10).unwrap();
        prop_assert!(achieved.iter().all(|&k| k <= r));
        prop_assert!(h.norm() <= z.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn adjoint_identity_small(seed in 0u64..10_000, m in 1usize..5, m0 in 1usize..10) {
        let shape = vec![2, 3, 2, 3];
        let plan = ReshapePlan::new(&shape, 2).unwrap();
        let op = MeasurementOperator::two_stage(
            plan,
            vec![make_gaussian(m, 6, seed), make_gaussian(m, 6, seed + 1)],
            make_gaussian(m0, m * m, seed + 2),
        ).unwrap();
        let x = tensor(&shape, seed + 3);
        let y = standard_normals(&mut rng_from_seed(seed + 4), m0);
        let lhs = dot(&op.apply(&x).unwrap(), &y);
        let rhs = x.inner(&op.adjoint(&y).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * x.norm() * dot(&y, &y).sqrt());
    }

    #[test]
    fn sors_draws_nest(seed in 0u64..10_000, n in 2usize..30, small in 1usize..10) {
        let small = small.min(n);
        for rule in [RowSampling::Iid, RowSampling::Distinct] {
            let a = make_sors_with(small, n, seed, rule).unwrap();
            let b = make_sors_with(n, n, seed, rule).unwrap();
            prop_assert_eq!(&b.row_sample[..small], a.row_sample.as_slice());
            prop_assert_eq!(&a.signs, &b.signs);
        }
    }
}
