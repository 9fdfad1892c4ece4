use std::sync::Arc;

use proptest::prelude::*;

use rtdepth::calibration::{estimate_k0, resemblance_curve, spearman_rho};
use rtdepth::data::Dataset;
use rtdepth::depth::{
    d1, exact_tukey_depth_2d, mahalanobis_depth_all, random_tukey_depth, random_tukey_depth_all,
};
use rtdepth::estimators::{
    coordinate_median, sample_covariance, EllipticalFit, LocationKind, ScatterKind,
};
use rtdepth::functional::{
    classify, functional_random_tukey, l2_inner, trimmed_mean, ClassifierSpec, Curve, CurveSample,
    Grid, Method,
};
use rtdepth::homogeneity::{rank_with_ties, TiePolicy};
use rtdepth::rng::{sample_sphere, DirectionSet, Seed};

fn cloud(p: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = Dataset> {
    prop::collection::vec(prop::collection::vec(-100.0..100.0f64, p), n)
        .prop_map(|rows| Dataset::from_rows(&rows).unwrap())
}

fn any_cloud() -> impl Strategy<Value = Dataset> {
    (1usize..6).prop_flat_map(|p| cloud(p, 1..40))
}

fn grid() -> impl Strategy<Value = Arc<Grid>> {
    prop::collection::vec(0.01..1.0f64, 2..12).prop_map(|steps| {
        let mut t = 0.0;
        let times: Vec<f64> = steps
            .iter()
            .map(|s| {
                t += s;
                t
            })
            .collect();
        Grid::new(&times).unwrap()
    })
}

fn curves(grid: &Arc<Grid>, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, grid.len()), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn directions_are_unit_nested_and_replayable(p in 1usize..30, k in 1usize..40, s in any::<u64>()) {
        let longer = sample_sphere(p, k + 1, Seed(s)).unwrap();
        let shorter = sample_sphere(p, k, Seed(s)).unwrap();
        let prefix = longer.prefix(k);
        prop_assert_eq!(shorter.as_slice(), prefix.as_slice());
        prop_assert_eq!(&shorter, &sample_sphere(p, k, Seed(s)).unwrap());
        for d in longer.iter() {
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn depths_lie_in_unit_interval_and_shrink_with_k(data in any_cloud(), s in any::<u64>()) {
        let p = data.dim();
        let all = sample_sphere(p, 30, Seed(s)).unwrap();
        let x = data.row(0).to_vec();
        let mut previous = 1.0;
        for k in 1..=30 {
            let d = random_tukey_depth(&x, &data, &all.prefix(k)).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert!(d <= previous);
            previous = d;
        }
        // the in-sample fast path agrees with the query path
        let fast = random_tukey_depth_all(&data, &all).unwrap();
        for (i, row) in data.rows().enumerate() {
            prop_assert_eq!(fast.values[i], random_tukey_depth(row, &data, &all).unwrap());
        }
    }

    #[test]
    fn mahalanobis_depth_in_half_open_unit_interval(data in (1usize..4).prop_flat_map(|p| cloud(p, 12..40))) {
        let fit = EllipticalFit::estimate(&data, LocationKind::Mean, ScatterKind::SampleCovariance).unwrap();
        if let Ok(depths) = mahalanobis_depth_all(&data, &fit) {
            prop_assert!(depths.values.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn d1_ignores_strictly_increasing_maps(sample in prop::collection::vec(-5.0..5.0f64, 1..50), x in -6.0..6.0f64) {
        let warp = |v: f64| v.powi(3) + 2.0 * v;
        let warped: Vec<f64> = sample.iter().map(|&v| warp(v)).collect();
        prop_assert_eq!(d1(x, &sample).unwrap(), d1(warp(x), &warped).unwrap());
        // sample points themselves hit the ties
        prop_assert_eq!(d1(sample[0], &sample).unwrap(), d1(warp(sample[0]), &warped).unwrap());
    }

    #[test]
    fn random_depth_dominates_exact_depth(data in cloud(2, 1..25), k in 1usize..60, s in any::<u64>()) {
        let dirs = sample_sphere(2, k, Seed(s)).unwrap();
        let random = random_tukey_depth_all(&data, &dirs).unwrap();
        for (i, row) in data.rows().enumerate() {
            prop_assert!(random.values[i] >= exact_tukey_depth_2d(row, &data).unwrap());
        }
    }

    #[test]
    fn rotating_data_and_directions_together(data in cloud(2, 2..30), angle in 0.0..std::f64::consts::TAU, s in any::<u64>()) {
        let (sin, cos) = angle.sin_cos();
        let rotate = |v: &[f64]| vec![cos * v[0] - sin * v[1], sin * v[0] + cos * v[1]];
        let dirs = sample_sphere(2, 20, Seed(s)).unwrap();
        let turned_dirs = DirectionSet::from_directions(2, &dirs.iter().map(rotate).collect::<Vec<_>>()).unwrap();
        let turned = Dataset::from_rows(&data.rows().map(rotate).collect::<Vec<_>>()).unwrap();
        let before = random_tukey_depth_all(&data, &dirs).unwrap();
        let after = random_tukey_depth_all(&turned, &turned_dirs).unwrap();
        prop_assert_eq!(before.values, after.values);
    }

    #[test]
    fn covariance_ignores_row_order_and_follows_affine_maps(
        data in cloud(2, 3..30),
        a in prop::array::uniform4(-3.0..3.0f64),
        b in prop::array::uniform2(-50.0..50.0f64),
    ) {
        let sigma = sample_covariance(&data).unwrap();
        let reversed: Vec<Vec<f64>> = {
            let mut rows: Vec<Vec<f64>> = data.rows().map(<[f64]>::to_vec).collect();
            rows.reverse();
            rows
        };
        let sigma_rev = sample_covariance(&Dataset::from_rows(&reversed).unwrap()).unwrap();
        prop_assert!((&sigma - &sigma_rev).norm() <= 1e-9 * (1.0 + sigma.norm()));

        let m = nalgebra::DMatrix::from_row_slice(2, 2, &a);
        let mapped: Vec<Vec<f64>> = data
            .rows()
            .map(|r| vec![a[0] * r[0] + a[1] * r[1] + b[0], a[2] * r[0] + a[3] * r[1] + b[1]])
            .collect();
        let sigma_mapped = sample_covariance(&Dataset::from_rows(&mapped).unwrap()).unwrap();
        let expected = &m * &sigma * m.transpose();
        prop_assert!((&sigma_mapped - &expected).norm() <= 1e-8 * (1.0 + expected.norm()));
    }

    #[test]
    fn coordinate_median_follows_increasing_maps(data in cloud(3, 1..30)) {
        // odd counts keep the median an order statistic, which any strictly
        // increasing map carries along
        let n = data.n() - (data.n() % 2 == 0) as usize;
        let rows: Vec<Vec<f64>> = data.rows().take(n).map(<[f64]>::to_vec).collect();
        let warp = [|v: f64| v.exp2(), |v: f64| v * v * v, |v: f64| -1.0 / (200.0 - v)];
        let warped: Vec<Vec<f64>> = rows.iter().map(|r| (0..3).map(|j| warp[j](r[j])).collect()).collect();
        let med = coordinate_median(&Dataset::from_rows(&rows).unwrap());
        let med_warped = coordinate_median(&Dataset::from_rows(&warped).unwrap());
        for j in 0..3 {
            prop_assert_eq!(warp[j](med[j]), med_warped[j]);
        }
    }

    #[test]
    fn resemblance_prefix_and_k0_range(data in cloud(2, 8..40), s in any::<u64>(), kmax in 2usize..30) {
        let fit = EllipticalFit::estimate(&data, LocationKind::Mean, ScatterKind::SampleCovariance).unwrap();
        prop_assume!(!fit.degenerate);
        let long = resemblance_curve(&data, &fit, kmax + 10, Seed(s)).unwrap();
        let short = resemblance_curve(&data, &fit, kmax, Seed(s)).unwrap();
        prop_assert_eq!(&short.r[..], &long.r[..kmax]);
        prop_assert!(short.r.iter().all(|r| (-1.0..=1.0).contains(r)));
        let k0 = estimate_k0(&short.r).k0;
        prop_assert!((1..=kmax).contains(&k0));
    }

    #[test]
    fn spearman_is_symmetric_and_bounded(pairs in prop::collection::vec((-5i32..5, -5i32..5), 2..40)) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        if let (Ok(ab), Ok(ba)) = (spearman_rho(&a, &b), spearman_rho(&b, &a)) {
            prop_assert_eq!(ab, ba);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab));
        }
    }

    #[test]
    fn random_tie_ranks_are_permutations(values in prop::collection::vec(-3i32..3, 1..60), s in any::<u64>()) {
        let values: Vec<f64> = values.into_iter().map(f64::from).collect();
        let mut ranks = rank_with_ties(&values, TiePolicy::Random, Seed(s));
        ranks.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (1..=values.len()).map(|r| r as f64).collect();
        prop_assert_eq!(ranks, expected);
        // every policy keeps the rank sum
        let total = (values.len() * (values.len() + 1) / 2) as f64;
        let mid: f64 = rank_with_ties(&values, TiePolicy::Average, Seed(s)).iter().sum();
        prop_assert!((mid - total).abs() < 1e-9);
    }

    #[test]
    fn l2_inner_is_symmetric_bilinear_and_positive(
        (g, rows) in grid().prop_flat_map(|g| { let c = curves(&g, 3..4); (Just(g), c) }),
        a in -3.0..3.0f64,
    ) {
        let f = Curve::new(g.clone(), rows[0].clone()).unwrap();
        let h = Curve::new(g.clone(), rows[1].clone()).unwrap();
        let e = Curve::new(g.clone(), rows[2].clone()).unwrap();
        let fh = l2_inner(&f, &h).unwrap();
        prop_assert_eq!(fh, l2_inner(&h, &f).unwrap());
        prop_assert!(l2_inner(&f, &f).unwrap() >= 0.0);
        let combo = Curve::new(g.clone(), rows[0].iter().zip(&rows[2]).map(|(x, y)| a * x + y).collect()).unwrap();
        let lhs = l2_inner(&combo, &h).unwrap();
        let rhs = a * fh + l2_inner(&e, &h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs() + rhs.abs()));
    }

    #[test]
    fn functional_depth_bounded_and_monotone(
        (g, rows) in grid().prop_flat_map(|g| { let c = curves(&g, 1..15); (Just(g), c) }),
        s in any::<u64>(),
    ) {
        let sample = CurveSample::new(g.clone(), &rows, None).unwrap();
        let z = sample.curve(0);
        let mut previous = 1.0;
        for k in 1..=15 {
            let d = functional_random_tukey(&z, &sample, k, Seed(s)).unwrap();
            prop_assert!((0.0..=1.0).contains(&d) && d <= previous);
            previous = d;
        }
    }

    #[test]
    fn untrimmed_mean_is_the_pointwise_mean(
        (g, rows) in grid().prop_flat_map(|g| { let c = curves(&g, 1..15); (Just(g), c) }),
    ) {
        let sample = CurveSample::new(g.clone(), &rows, None).unwrap();
        let mean = trimmed_mean(&sample, 0.0, 5, Seed(1)).unwrap();
        for (t, &v) in mean.values().iter().enumerate() {
            let direct = rows.iter().map(|r| r[t]).sum::<f64>() / rows.len() as f64;
            prop_assert_eq!(v, direct);
        }
    }

    #[test]
    fn decisions_survive_a_common_positive_scale(
        (g, x, y, z) in grid().prop_flat_map(|g| {
            let (x, y, z) = (curves(&g, 3..10), curves(&g, 3..10), curves(&g, 1..2));
            (Just(g), x, y, z)
        }),
        factor in prop::sample::select(vec![0.25, 0.5, 2.0, 4.0, 8.0]),
        s in any::<u64>(),
    ) {
        // powers of two keep every product exact
        let xs = CurveSample::new(g.clone(), &x, None).unwrap();
        let ys = CurveSample::new(g.clone(), &y, None).unwrap();
        let zc = Curve::new(g.clone(), z[0].clone()).unwrap();
        for method in [Method::M, Method::AM, Method::TAM] {
            let spec = ClassifierSpec::new(method, 6, Seed(s));
            let base = classify(&zc, &xs, &ys, &spec).unwrap();
            let scaled = classify(&zc.scaled(factor), &xs.scaled(factor), &ys.scaled(factor), &spec).unwrap();
            prop_assert_eq!(base, scaled);
        }
    }
}
