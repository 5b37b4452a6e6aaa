mod common;

use common::fraction;
use nalgebra::DMatrix;
use ppd_core::random::{gaussian_matrix, haar_basis, rng_from_seed};
use ppd_core::sim::average_f_score;
use ppd_core::{
    decompose, decompose_multiview, generate, joint_rank, product_spectrum, subspace_distance,
    BootstrapConfig, DecomposeOptions, DenseMatrix, Error, OrthonormalBasis, ProductSpectrum,
    RankMode, RankSpec, SimConfig,
};

fn options(ranks: RankSpec, seed: u64) -> DecomposeOptions {
    DecomposeOptions {
        ranks,
        bootstrap: BootstrapConfig {
            replicates: 50,
            seed,
            ..BootstrapConfig::default()
        },
        pairwise_average: false,
    }
}

fn signal(basis: &DMatrix<f64>, p: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    DenseMatrix::new(basis * gaussian_matrix(basis.ncols(), p, 1.0, &mut rng)).unwrap()
}

fn check_structure(result: &ppd_core::DecompositionResult) {
    result.validate().unwrap();
    for (k, ind) in result.individuals.iter().enumerate() {
        let cross = result.joint.cross_gram(ind).unwrap();
        let overlap = if cross.is_empty() { 0.0 } else { cross.amax() };
        assert!(
            overlap <= 1e-6,
            "view {k}: joint/individual overlap {overlap}"
        );
        assert_eq!(result.joint_rank + ind.rank(), result.marginal_ranks[k]);
    }
}

#[test]
fn duplicated_view_is_entirely_joint() {
    let mut rng = rng_from_seed(1);
    let u = haar_basis(30, 3, &mut rng);
    let y = signal(u.columns(), 40, 2);
    let result = decompose(&y, &y, &options(RankSpec::Explicit(vec![3, 3]), 5)).unwrap();
    assert_eq!(result.joint_rank, 3);
    assert!(result.individuals.iter().all(|b| b.rank() == 0));
    assert!(subspace_distance(&result.joint, &u).unwrap() <= 1e-8);
    check_structure(&result);
}

#[test]
fn orthogonal_signals_share_nothing() {
    let mut rng = rng_from_seed(3);
    let u = haar_basis(30, 6, &mut rng);
    let y1 = signal(&u.columns().columns(0, 3).into_owned(), 40, 4);
    let y2 = signal(&u.columns().columns(3, 3).into_owned(), 45, 5);
    let result = decompose(&y1, &y2, &options(RankSpec::Explicit(vec![3, 3]), 6)).unwrap();
    assert_eq!(result.joint_rank, 0);
    assert_eq!(result.joint.rank(), 0);
    assert!(result.individuals.iter().all(|b| b.rank() == 3));
    check_structure(&result);
}

#[test]
fn product_spectrum_edge_cases_and_counting() {
    let u = OrthonormalBasis::coordinate(8, &[0, 1, 2]).unwrap();
    let v = OrthonormalBasis::coordinate(8, &[3, 4, 5]).unwrap();
    let same = product_spectrum(&u, &u, 0.1, 0.25).unwrap();
    assert!(same.values.iter().all(|s| (s - 1.0).abs() < 1e-14));
    assert_eq!(joint_rank(&same), 3);
    let none = product_spectrum(&u, &v, 0.1, 0.25).unwrap();
    assert!(none.values.iter().all(|&s| s == 0.0));
    assert_eq!(joint_rank(&none), 0);
    let spec = ProductSpectrum {
        values: vec![1.0, 1.0, 0.6, 0.1],
        bootstrap_threshold: 0.8,
        noise_threshold: 0.7,
    };
    assert_eq!(joint_rank(&spec), 2);
    assert!(product_spectrum(&u, &u, 0.1, 1.5).is_err());
}

#[test]
fn mismatched_rows_and_oversized_ranks_are_rejected() {
    let mut rng = rng_from_seed(9);
    let a = DenseMatrix::new(gaussian_matrix(10, 5, 1.0, &mut rng)).unwrap();
    let b = DenseMatrix::new(gaussian_matrix(11, 5, 1.0, &mut rng)).unwrap();
    let c = DenseMatrix::new(gaussian_matrix(10, 6, 1.0, &mut rng)).unwrap();
    assert!(matches!(
        decompose(&a, &b, &DecomposeOptions::default()),
        Err(Error::DimensionMismatch(_))
    ));
    assert!(matches!(
        decompose(&a, &c, &options(RankSpec::Explicit(vec![5, 6]), 1)),
        Err(Error::BootstrapInfeasible { .. })
    ));
}

#[test]
fn zero_rank_view_yields_empty_joint() {
    let mut rng = rng_from_seed(10);
    let a = DenseMatrix::new(gaussian_matrix(20, 8, 1.0, &mut rng)).unwrap();
    let b = DenseMatrix::new(gaussian_matrix(20, 9, 1.0, &mut rng)).unwrap();
    let result = decompose(&a, &b, &options(RankSpec::Explicit(vec![0, 3]), 2)).unwrap();
    assert_eq!(result.joint_rank, 0);
    assert_eq!(result.individuals[1].rank(), 3);
    check_structure(&result);
}

#[test]
fn view_order_does_not_matter() {
    for seed in 0..3 {
        let cfg = SimConfig::two_view(60.0, 1.0, RankMode::True, seed);
        let (views, _) = generate(&cfg).unwrap();
        let opts = options(RankSpec::Auto, 40 + seed);
        let a = decompose(&views[0], &views[1], &opts).unwrap();
        let b = decompose(&views[1], &views[0], &opts).unwrap();
        assert_eq!(a.joint_rank, b.joint_rank);
        assert!(subspace_distance(&a.joint, &b.joint).unwrap() <= 1e-8);
        check_structure(&a);
    }
}

#[test]
fn two_view_multiview_path_matches() {
    let cfg = SimConfig::two_view(45.0, 2.0, RankMode::True, 77);
    let (views, _) = generate(&cfg).unwrap();
    let opts = options(RankSpec::Auto, 8);
    let a = decompose(&views[0], &views[1], &opts).unwrap();
    let b = decompose_multiview(&views, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn three_views_take_the_smallest_pairwise_joint_rank() {
    let mut rng = rng_from_seed(12);
    let n = 40;
    let u = haar_basis(n, 9, &mut rng).into_columns();
    let cols = |idx: &[usize]| DMatrix::from_fn(n, idx.len(), |i, j| u[(i, idx[j])]);
    let y1 = signal(&cols(&[0, 1, 3, 4]), 30, 1);
    let y2 = signal(&cols(&[0, 1, 2, 5, 6]), 35, 2);
    let y3 = signal(&cols(&[0, 1, 2, 7, 8]), 32, 3);
    let result = decompose_multiview(
        &[y1, y2, y3],
        &options(RankSpec::Explicit(vec![4, 5, 5]), 4),
    )
    .unwrap();
    assert_eq!(result.pairs.len(), 3);
    assert_eq!(result.joint_rank, 2);
    assert!(
        subspace_distance(
            &result.joint,
            &OrthonormalBasis::new(cols(&[0, 1])).unwrap()
        )
        .unwrap()
            <= 1e-8
    );
    check_structure(&result);
}

#[test]
fn many_views_need_the_pairwise_average() {
    let mut rng = rng_from_seed(13);
    let u = haar_basis(30, 2, &mut rng);
    let views: Vec<DenseMatrix> = (0..6)
        .map(|k| signal(u.columns(), 20 + k, k as u64))
        .collect();
    let ranks = RankSpec::Explicit(vec![2; 6]);
    assert!(decompose_multiview(&views, &options(ranks.clone(), 1)).is_err());
    let opts = DecomposeOptions {
        pairwise_average: true,
        ..options(ranks, 1)
    };
    let result = decompose_multiview(&views, &opts).unwrap();
    assert_eq!(result.joint_rank, 2);
    assert!(subspace_distance(&result.joint, &u).unwrap() <= 1e-8);
}

#[test]
fn noiseless_structures_are_recovered_exactly() {
    for seed in 0..10 {
        let angle = [30.0, 50.0, 70.0, 90.0][seed as usize % 4];
        let cfg = SimConfig::two_view(angle, f64::INFINITY, RankMode::True, seed);
        let (views, truth) = generate(&cfg).unwrap();
        let result = decompose(
            &views[0],
            &views[1],
            &options(RankSpec::Explicit(cfg.true_ranks()), seed),
        )
        .unwrap();
        assert_eq!(result.joint_rank, 4, "seed {seed}");
        assert!(subspace_distance(&result.joint, &truth.joint).unwrap() <= 1e-8);
        for k in 0..2 {
            assert!(
                subspace_distance(&result.individuals[k], &truth.individuals[k]).unwrap() <= 1e-8
            );
        }
    }
}

#[test]
fn joint_rank_found_at_high_snr_with_true_ranks() {
    let hits = (0..50u64)
        .filter(|&seed| {
            let cfg = SimConfig::two_view(90.0, 2.0, RankMode::True, seed);
            let (views, _) = generate(&cfg).unwrap();
            let opts = options(RankSpec::Explicit(cfg.true_ranks()), 900 + seed);
            decompose(&views[0], &views[1], &opts).unwrap().joint_rank == 4
        })
        .count();
    assert!(fraction(hits, 50) >= 0.9, "joint rank 4 in {hits}/50 seeds");
}

fn mean_scaled_f(cfg_for: impl Fn(u64) -> SimConfig) -> f64 {
    let total: f64 = (0..50u64)
        .map(|seed| {
            let cfg = cfg_for(seed);
            let (views, truth) = generate(&cfg).unwrap();
            let opts = options(RankSpec::Auto, 700 + seed);
            let opts = DecomposeOptions {
                bootstrap: BootstrapConfig {
                    replicates: 100,
                    ..opts.bootstrap
                },
                ..opts
            };
            let result = decompose_multiview(&views, &opts).unwrap();
            average_f_score(&result, &truth).unwrap()
        })
        .sum();
    10.0 * total / 50.0
}

#[test]
fn two_view_estimated_ranks_at_thirty_degrees() {
    let f = mean_scaled_f(|seed| SimConfig::two_view(30.0, 2.0, RankMode::Estimated, seed));
    assert!(
        (f - 9.75).abs() <= 0.3,
        "scaled mean F {f:.3}, expected 9.75 ± 0.3"
    );
}

#[test]
fn three_view_estimated_ranks_at_ninety_degrees() {
    let f = mean_scaled_f(|seed| SimConfig::three_view(90.0, 2.0, RankMode::Estimated, seed));
    assert!(
        (f - 9.83).abs() <= 0.3,
        "scaled mean F {f:.3}, expected 9.83 ± 0.3"
    );
}
