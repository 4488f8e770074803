mod common;

use proptest::prelude::*;
use raman_tda::persistence::{PersistenceDiagram, PersistencePair};
use raman_tda::vectorize::{
    betti_at, landscape_at, persistence_image, silhouette_at, vectorize, FeatureRange,
    VectorizationConfig,
};

fn diagram() -> impl Strategy<Value = PersistenceDiagram> {
    prop::collection::vec((-5.0f64..5.0, 0.0f64..5.0), 0..12).prop_map(|pairs| {
        PersistenceDiagram::from_pairs(
            pairs
                .into_iter()
                .map(|(b, p)| PersistencePair::new(b, b + p))
                .collect(),
        )
    })
}

fn image_range() -> FeatureRange {
    FeatureRange::image((-5.0, 5.0), (0.0, 5.0), 5.0).unwrap()
}

#[test]
fn single_pair_image_mass_matches_quadrature() {
    let sigma = 0.1;
    let (lo, hi) = (0.0 - 4.0 * sigma, 2.0 + 4.0 * sigma);
    let range = FeatureRange::image((lo, hi), (lo, hi), 2.0).unwrap();
    let d = PersistenceDiagram::from_pairs(vec![PersistencePair::new(0.0, 2.0)]);
    let image = persistence_image(&d, sigma, 25, &range).unwrap();
    let mass: f64 = image.values.iter().sum();

    // weight-1 Gaussian at (birth 0, persistence 2) over the image window
    let quadrature = common::gaussian_mass_by_quadrature(0.0, 2.0, sigma, lo, hi);

    assert!((mass - quadrature).abs() < 1e-6, "{mass} vs {quadrature}");
    assert!((mass - 1.0).abs() < 1e-4, "{mass}");
}

#[test]
fn single_pair_curves_peak_at_midpoint() {
    let d = PersistenceDiagram::from_pairs(vec![PersistencePair::new(0.0, 2.0)]);
    assert_eq!(landscape_at(&d, 1, 1.0), vec![1.0]);
    assert_eq!(silhouette_at(&d, 1.0, 1.0), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn image_is_additive_over_disjoint_union(a in diagram(), b in diagram(), sigma in 0.05f64..3.0) {
        let range = image_range();
        let pa = persistence_image(&a, sigma, 10, &range).unwrap().values;
        let pb = persistence_image(&b, sigma, 10, &range).unwrap().values;
        let pu = persistence_image(&a.union(&b), sigma, 10, &range).unwrap().values;
        for ((x, y), z) in pa.iter().zip(&pb).zip(&pu) {
            prop_assert!((x + y - z).abs() < 1e-12);
        }
    }

    #[test]
    fn landscape_layers_are_ordered(d in diagram(), t in -6.0f64..11.0) {
        let layers = landscape_at(&d, 5, t);
        prop_assert!(layers.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(layers.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn landscape_and_silhouette_are_1_lipschitz(d in diagram(), s in -6.0f64..11.0, t in -6.0f64..11.0) {
        let bound = (s - t).abs() + 1e-12;
        let ls = landscape_at(&d, 5, s);
        let lt = landscape_at(&d, 5, t);
        for (x, y) in ls.iter().zip(&lt) {
            prop_assert!((x - y).abs() <= bound);
        }
        prop_assert!((silhouette_at(&d, 1.0, s) - silhouette_at(&d, 1.0, t)).abs() <= bound);
    }

    #[test]
    fn betti_counts_are_bounded(d in diagram(), t in -6.0f64..11.0) {
        let beta = betti_at(&d, t);
        prop_assert!(beta <= d.len());
        let direct = d.pairs().iter().filter(|p| p.birth <= t && t < p.death).count();
        prop_assert_eq!(beta, direct);
    }

    #[test]
    fn vectors_ignore_pair_order(d in diagram(), seed in any::<u64>()) {
        let mut pairs = d.pairs().to_vec();
        let len = pairs.len().max(1);
        pairs.rotate_left(seed as usize % len);
        pairs.reverse();
        let permuted = PersistenceDiagram::from_pairs(pairs);
        let filtration = FeatureRange::filtration(-5.0, 10.0).unwrap();
        for (config, range) in [
            (VectorizationConfig::PersistenceImage { sigma: 0.5, resolution: 5 }, image_range()),
            (VectorizationConfig::Landscape { layers: 3, resolution: 25 }, filtration),
            (VectorizationConfig::Silhouette { power: 1.0, resolution: 25 }, filtration),
            (VectorizationConfig::BettiCurve { resolution: 25 }, filtration),
        ] {
            let a = vectorize(&d, &config, &range).unwrap().values;
            let b = vectorize(&permuted, &config, &range).unwrap().values;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_persistence_pairs_add_nothing(d in diagram(), points in prop::collection::vec(-5.0f64..5.0, 1..5)) {
        let ghosts = PersistenceDiagram::from_pairs(
            points.into_iter().map(|x| PersistencePair::new(x, x)).collect(),
        );
        let padded = d.union(&ghosts);
        let filtration = FeatureRange::filtration(-5.0, 10.0).unwrap();
        for (config, range) in [
            (VectorizationConfig::PersistenceImage { sigma: 0.5, resolution: 5 }, image_range()),
            (VectorizationConfig::Landscape { layers: 3, resolution: 25 }, filtration),
            (VectorizationConfig::Silhouette { power: 1.0, resolution: 25 }, filtration),
            (VectorizationConfig::BettiCurve { resolution: 25 }, filtration),
        ] {
            prop_assert_eq!(
                vectorize(&d, &config, &range).unwrap().values,
                vectorize(&padded, &config, &range).unwrap().values
            );
        }
    }
}
