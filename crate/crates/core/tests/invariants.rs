//! Property checks for the raster algebra, file round trips, model
//! fitting, and sampling, over randomized inputs.

use proptest::prelude::*;

use udi_core::classify::{reclassify_percent, ImperviousMap, MapKind};
use udi_core::forecast::{decompose, fit};
use udi_core::impact::stratified_sample;
use udi_core::io;
use udi_core::month::{MonthKey, MonthRange};
use udi_core::raster::{combine, mean_stack, resample_nearest, CombineMode, GridGeometry, Raster};
use udi_core::zonal::ZonalSeries;

/// Values on a quarter grid: exactly representable in the 32-bit storage
/// format, so binary round trips can demand bit equality.
fn quantized_raster() -> impl Strategy<Value = Raster<f64>> {
    (1usize..8, 1usize..8)
        .prop_flat_map(|(w, h)| {
            let n = w * h;
            (
                Just((w, h)),
                prop::collection::vec(-4000i32..4000, n),
                prop::collection::vec(any::<bool>(), n),
            )
        })
        .prop_map(|((w, h), vals, valid)| {
            let g = GridGeometry::new(w, h, -60.0, h as f64 * 30.0, 30.0).unwrap();
            let samples = vals.into_iter().map(|v| v as f64 * 0.25).collect();
            Raster::from_parts(g, samples, valid).unwrap()
        })
}

/// Two rasters sharing one geometry.
fn aligned_pair() -> impl Strategy<Value = (Raster<f64>, Raster<f64>)> {
    (1usize..8, 1usize..8)
        .prop_flat_map(|(w, h)| {
            let n = w * h;
            let cell = (
                prop::collection::vec(-400i32..400, n),
                prop::collection::vec(any::<bool>(), n),
            );
            (Just((w, h)), cell.clone(), cell)
        })
        .prop_map(|((w, h), (va, ma), (vb, mb))| {
            let g = GridGeometry::new(w, h, 0.0, h as f64, 1.0).unwrap();
            let a = Raster::from_parts(g, va.into_iter().map(|v| v as f64 * 0.5).collect(), ma).unwrap();
            let b = Raster::from_parts(g, vb.into_iter().map(|v| v as f64 * 0.5).collect(), mb).unwrap();
            (a, b)
        })
}

proptest! {
    #[test]
    fn rbin_round_trip_is_bit_exact(r in quantized_raster()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.rbin");
        io::write_raster(&r, &path).unwrap();
        let back = io::read_raster::<f64>(&path).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn ascii_round_trip_is_bit_exact(r in quantized_raster()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.asc");
        io::write_raster(&r, &path).unwrap();
        let back = io::read_raster::<f64>(&path).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn multiply_commutes((a, b) in aligned_pair()) {
        let ab = combine(&a, &b, CombineMode::Multiply).unwrap();
        let ba = combine(&b, &a, CombineMode::Multiply).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn combined_masks_never_exceed_the_input_masks((a, b) in aligned_pair()) {
        for mode in [CombineMode::Multiply, CombineMode::Subtract, CombineMode::PercentChange] {
            let out = combine(&a, &b, mode).unwrap();
            for (i, &v) in out.validity().iter().enumerate() {
                prop_assert!(!v || (a.validity()[i] && b.validity()[i]));
            }
        }
    }

    #[test]
    fn self_subtraction_is_zero_on_the_same_mask(r in quantized_raster()) {
        let out = combine(&r, &r, CombineMode::Subtract).unwrap();
        prop_assert_eq!(out.validity(), r.validity());
        for (_, _, v) in out.iter_valid() {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn resampling_onto_the_same_grid_is_the_identity(r in quantized_raster()) {
        let once = resample_nearest(&r, r.geometry()).unwrap();
        prop_assert_eq!(&once, &r);
        let twice = resample_nearest(&once, r.geometry()).unwrap();
        prop_assert_eq!(&twice, &r);
    }

    #[test]
    fn upsampling_preserves_every_source_value_blockwise(r in quantized_raster()) {
        let g = r.geometry();
        let fine = GridGeometry::new(
            g.width() * 3,
            g.height() * 3,
            g.x_origin(),
            g.y_origin(),
            g.pixel_size() / 3.0,
        ).unwrap();
        let up = resample_nearest(&r, &fine).unwrap();
        for row in 0..fine.height() {
            for col in 0..fine.width() {
                prop_assert_eq!(up.get(col, row), r.get(col / 3, row / 3));
            }
        }
    }

    #[test]
    fn stack_mean_of_a_raster_with_itself_is_itself(r in quantized_raster()) {
        prop_assert_eq!(&mean_stack(std::slice::from_ref(&r)).unwrap(), &r);
        prop_assert_eq!(&mean_stack(&[r.clone(), r.clone()]).unwrap(), &r);
    }

    #[test]
    fn stack_mean_is_valid_exactly_where_any_input_is((a, b) in aligned_pair()) {
        let out = mean_stack(&[a.clone(), b.clone()]).unwrap();
        for (i, &v) in out.validity().iter().enumerate() {
            prop_assert_eq!(v, a.validity()[i] || b.validity()[i]);
        }
        // Pixels covered by only one input pass that input through.
        for (i, &v) in out.validity().iter().enumerate() {
            if v && a.validity()[i] && !b.validity()[i] {
                prop_assert_eq!(out.samples()[i], a.samples()[i]);
            }
        }
    }

    #[test]
    fn percent_reclassification_matches_the_bin_rule(
        vals in prop::collection::vec(0u32..=10000, 1..48)
    ) {
        let w = vals.len();
        let g = GridGeometry::new(w, 1, 0.0, 1.0, 1.0).unwrap();
        let percent: Vec<f64> = vals.iter().map(|&v| v as f64 / 100.0).collect();
        let r = Raster::from_parts(g, percent.clone(), vec![true; w]).unwrap();
        let classes = reclassify_percent(&r).unwrap();
        for (col, &p) in percent.iter().enumerate() {
            let want = ((p / 10.0).floor() as u8 + 1).min(10);
            prop_assert_eq!(classes.class_at(col, 0), Some(want));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fitted_seasonal_terms_sum_to_zero_and_scale_linearly(
        slope in -2.0f64..2.0,
        intercept in 20.0f64..120.0,
        raw_seasonal in prop::collection::vec(-5.0f64..5.0, 12),
        factor in 0.5f64..4.0,
    ) {
        let start = MonthKey::new(2012, 4).unwrap();
        let end = MonthKey::new(2017, 8).unwrap();
        let training = MonthRange::new(start, end).unwrap();
        let mean = raw_seasonal.iter().sum::<f64>() / 12.0;
        let points: Vec<(MonthKey, f64)> = training
            .iter()
            .enumerate()
            .map(|(t, m)| {
                let s = raw_seasonal[m.month() as usize - 1] - mean;
                (m, intercept + slope * t as f64 + s)
            })
            .collect();
        let scaled: Vec<(MonthKey, f64)> =
            points.iter().map(|&(m, v)| (m, v * factor)).collect();

        let series = ZonalSeries::new("t".into(), points).unwrap();
        let model = fit(&decompose(&series, training).unwrap()).unwrap();
        prop_assert!(model.seasonal.iter().sum::<f64>().abs() < 1e-9);
        prop_assert!((model.slope - slope).abs() < 1e-8, "slope {} vs {}", model.slope, slope);
        prop_assert!(model.mad < 1e-8);

        let series2 = ZonalSeries::new("t".into(), scaled).unwrap();
        let model2 = fit(&decompose(&series2, training).unwrap()).unwrap();
        let tol = 1e-8 * factor.max(1.0);
        prop_assert!((model2.slope - slope * factor).abs() < tol);
        prop_assert!((model2.intercept - model.intercept * factor).abs() < tol * 200.0);
    }

    #[test]
    fn stratified_samples_honour_allocation_rules(
        vals in prop::collection::vec(0u32..=10000, 36..100),
        n in 4usize..24,
        seed in 0u64..1000,
    ) {
        let w = vals.len();
        let g = GridGeometry::new(w, 1, 0.0, 1.0, 1.0).unwrap();
        let classes: Vec<f64> = vals.iter().map(|&v| (v % 10 + 1) as f64).collect();
        let r = Raster::from_parts(g, classes.clone(), vec![true; w]).unwrap();
        let map = ImperviousMap::from_raster(r, MapKind::PerImage).unwrap();

        prop_assume!(n <= w);
        let mut sizes = [0usize; 10];
        for &c in &classes {
            sizes[c as usize - 1] += 1;
        }
        let nonempty_count = sizes.iter().filter(|&&s| s > 0).count();
        let result = stratified_sample(&map, n, seed);
        if n < nonempty_count {
            // Too few points to give every populated stratum its minimum.
            prop_assert!(result.is_err());
            return Ok(());
        }
        let sample = result.unwrap();
        prop_assert_eq!(sample.points.len(), n);

        let mut per_stratum = [0usize; 10];
        let mut seen = std::collections::BTreeSet::new();
        for p in &sample.points {
            per_stratum[p.stratum as usize - 1] += 1;
            // Each drawn pixel really carries its stratum's class and is
            // never drawn twice.
            prop_assert_eq!(classes[p.col] as u8, p.stratum);
            prop_assert_eq!(p.reference, p.stratum);
            prop_assert_eq!(p.interpreted, None);
            prop_assert!(seen.insert((p.col, p.row)));
        }
        let nonempty = sizes.iter().filter(|&&s| s > 0).count();
        for (i, &count) in per_stratum.iter().enumerate() {
            prop_assert!(count <= sizes[i]);
            if n >= nonempty && sizes[i] > 0 {
                prop_assert!(count >= 1, "stratum {} empty with n {}", i + 1, n);
            }
        }

        // Same seed, same draw; different seed may differ but stays legal.
        let again = stratified_sample(&map, n, seed).unwrap();
        prop_assert_eq!(again.points, sample.points);
    }
}
