//! Property suites for every module, run through a deterministic proptest
//! runner so failures reproduce exactly. Each returns the shrunk failing case
//! as an error string.

use std::fmt::Debug;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trapkit::cocoeval::{evaluate, Detection, EvalConfig, IouKind};
use trapkit::fusenet::{
    concat_channels, fuse_features, init_depth_backbone, softmax, Backbone, ConvLayer, FuseNet, ModelConfig,
    ModelGrad, Tensor,
};
use trapkit::imaging::{
    bbox_from_mask, bbox_iou, connected_components, mask_iou, BinaryMask, BoundingBox, IntensityImage,
    LabeledInstance, Rle,
};
use trapkit::motion::{diff_detect, gmm_step, DiffConfig, GmmConfig, GmmState, MotionDetector, RoiMask};
use trapkit::solar::{mode_at, solar_events, GeoLocation};
use trapkit::stereo::{disparity_to_depth, DisparityMap};
use trapkit::synthgen::{render_scene, sample_scene, SceneRanges, Silhouette};

use super::random_case;

pub type Property = (&'static str, fn() -> Result<(), String>);

/// Every invariant suite, in module order.
pub const ALL: &[Property] = &[
    ("imaging: IoU symmetric, bounded, 1 on identity", iou_symmetric_bounded),
    ("imaging: bbox_from_mask contains every set pixel", bbox_contains_mask),
    ("imaging: RLE roundtrip", rle_roundtrip),
    ("imaging: components partition the mask", components_partition),
    ("solar: two mode transitions per day", two_transitions_per_day),
    ("solar: +15 deg longitude shifts events by -1 h", longitude_shift),
    ("motion: GMM weights non-negative, sum <= 1", gmm_weights_normalized),
    ("motion: detector deterministic", detector_deterministic),
    ("motion: events invariant outside ROI", roi_invariance),
    ("motion: diff_detect symmetric", diff_symmetric),
    ("stereo: depth strictly decreasing in disparity", depth_decreasing),
    ("synthgen: rendered frame consistency", rendered_frame_consistent),
    ("synthgen: rendering deterministic", rendering_deterministic),
    ("synthgen: monotone occlusion", monotone_occlusion),
    ("fusenet: no weight sharing", no_weight_sharing),
    ("fusenet: fusion equals conv on concatenation", fusion_equals_concat_conv),
    ("fusenet: forward flip-equivariant", flip_equivariance),
    ("fusenet: softmax sums to one", softmax_sums_to_one),
    ("cocoeval: false positive never raises AP", false_positive_monotone),
    ("cocoeval: true positive never lowers AP", true_positive_monotone),
    ("cocoeval: score scaling invariance", score_scaling),
    ("cocoeval: AP ordered in threshold", threshold_ordering),
    ("cocoeval: mask equals box for box masks", mask_equals_box),
];

fn run<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        max_global_rejects: 50 * cases,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Seeds drive hand-written generators where proptest shrinking buys little.
fn seeded(cases: u32, test: impl Fn(&mut ChaCha8Rng) -> Result<(), TestCaseError>) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| test(&mut ChaCha8Rng::seed_from_u64(seed)))
}

fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
    (1usize..16, 1usize..16)
        .prop_flat_map(|(w, h)| (Just(w), Just(h), proptest::collection::vec(any::<bool>(), w * h)))
        .prop_map(|(w, h, bits)| BinaryMask::new(w, h, bits).unwrap())
}

fn box_strategy() -> impl Strategy<Value = BoundingBox> {
    (0u32..20, 0u32..20, 1u32..12, 1u32..12).prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h).unwrap())
}

pub fn iou_symmetric_bounded() -> Result<(), String> {
    let pair = mask_strategy().prop_flat_map(|a| {
        let (w, h) = a.dims();
        (Just(a), proptest::collection::vec(any::<bool>(), w * h), box_strategy(), box_strategy())
    });
    run(1000, pair, |(a, bits, p, q)| {
        let b = BinaryMask::new(a.width(), a.height(), bits).unwrap();
        let (ab, ba) = (mask_iou(&a, &b).unwrap(), mask_iou(&b, &a).unwrap());
        prop_assert_eq!(ab, ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        if !a.is_empty() {
            prop_assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        }
        prop_assert_eq!(bbox_iou(&p, &q), bbox_iou(&q, &p));
        prop_assert!((0.0..=1.0).contains(&bbox_iou(&p, &q)));
        prop_assert_eq!(bbox_iou(&p, &p), 1.0);
        Ok(())
    })
}

pub fn bbox_contains_mask() -> Result<(), String> {
    run(1000, mask_strategy(), |m| {
        match bbox_from_mask(&m) {
            Ok(b) => {
                prop_assert!(b.fits_within(m.width(), m.height()));
                for (x, y) in m.iter_set() {
                    prop_assert!(b.contains(x, y));
                }
            }
            Err(_) => prop_assert!(m.is_empty()),
        }
        Ok(())
    })
}

pub fn rle_roundtrip() -> Result<(), String> {
    run(1000, mask_strategy(), |m| {
        let rle = Rle::encode(&m);
        prop_assert_eq!(rle.counts.iter().sum::<u64>(), (m.width() * m.height()) as u64);
        prop_assert_eq!(rle.decode().unwrap(), m);
        Ok(())
    })
}

pub fn components_partition() -> Result<(), String> {
    run(1000, mask_strategy(), |m| {
        let parts = connected_components(&m);
        let (w, h) = m.dims();
        let mut cover = vec![0u32; w * h];
        for p in &parts {
            prop_assert!(!p.is_empty());
            for (x, y) in p.iter_set() {
                cover[y * w + x] += 1;
            }
        }
        for (i, &b) in m.bits().iter().enumerate() {
            prop_assert_eq!(cover[i], u32::from(b), "pixel {}", i);
        }
        Ok(())
    })
}

fn date_strategy() -> impl Strategy<Value = NaiveDate> {
    (0i64..3 * 365).prop_map(|d| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + Duration::days(d))
}

pub fn two_transitions_per_day() -> Result<(), String> {
    run(1000, (-60.0f64..60.0, -180.0f64..180.0, date_strategy()), |(lat, lon, date)| {
        let loc = GeoLocation::new(lat, lon).unwrap();
        // one local solar day, starting at local midnight
        let start = Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).unwrap())
            - Duration::seconds((lon / 15.0 * 3600.0) as i64);
        let modes: Vec<_> = (0..=288).map(|k| mode_at(&loc, start + Duration::minutes(5 * k))).collect();
        let transitions = modes.windows(2).filter(|w| w[0] != w[1]).count();
        prop_assert_eq!(transitions, 2);
        Ok(())
    })
}

pub fn longitude_shift() -> Result<(), String> {
    run(1000, (-60.0f64..60.0, -150.0f64..150.0, date_strategy()), |(lat, lon, date)| {
        let a = solar_events(&GeoLocation::new(lat, lon).unwrap(), date);
        let b = solar_events(&GeoLocation::new(lat, lon + 15.0).unwrap(), date);
        for (x, y) in [(a.sunrise, b.sunrise), (a.sunset, b.sunset)] {
            let shift = (y.unwrap() - x.unwrap()).num_seconds() as f64 / 60.0;
            prop_assert!((shift + 60.0).abs() <= 3.0, "shift {} min", shift);
        }
        Ok(())
    })
}

fn random_frame(rng: &mut ChaCha8Rng, w: usize, h: usize) -> IntensityImage {
    // mostly steady pixels with occasional jumps, so components both match and spawn
    let base: u16 = rng.gen_range(0..=65535);
    IntensityImage::from_fn(w, h, |_, _| {
        if rng.gen_bool(0.3) {
            rng.gen_range(0..=65535)
        } else {
            base.saturating_add(rng.gen_range(0..800))
        }
    })
}

pub fn gmm_weights_normalized() -> Result<(), String> {
    seeded(10_000, |rng| {
        let cfg = GmmConfig {
            max_components: rng.gen_range(1..=5),
            learning_rate: rng.gen_range(0.001..0.5),
            ..GmmConfig::default()
        };
        let (w, h) = (3, 2);
        let mut state = GmmState::new(w, h, cfg.max_components);
        let roi = RoiMask::full(w, h);
        for _ in 0..rng.gen_range(1..30) {
            gmm_step(&mut state, &random_frame(rng, w, h), &roi, &cfg).unwrap();
            for y in 0..h {
                for x in 0..w {
                    let comps = state.pixel_components(x, y);
                    prop_assert!(comps.len() <= cfg.max_components);
                    prop_assert!(comps.iter().all(|c| c.0 >= 0.0));
                    let total: f64 = comps.iter().map(|c| c.0).sum();
                    prop_assert!(total <= 1.0 + 1e-6, "weights sum to {}", total);
                }
            }
        }
        Ok(())
    })
}

fn event_stream(frames: &[IntensityImage], roi: &RoiMask) -> Vec<String> {
    let (w, h) = frames[0].dims();
    let mut d = MotionDetector::new(w, h, DiffConfig::default(), GmmConfig::default()).unwrap();
    let t0 = Utc.with_ymd_and_hms(2024, 5, 1, 12, 0, 0).unwrap();
    frames
        .iter()
        .enumerate()
        .filter_map(|(i, f)| d.step(f, t0 + Duration::seconds(i as i64), roi).unwrap())
        .map(|e| serde_json::to_string(&e).unwrap())
        .collect()
}

pub fn detector_deterministic() -> Result<(), String> {
    seeded(1000, |rng| {
        let frames: Vec<_> = (0..rng.gen_range(2..12)).map(|_| random_frame(rng, 12, 8)).collect();
        let roi = RoiMask::full(12, 8);
        prop_assert_eq!(event_stream(&frames, &roi), event_stream(&frames, &roi));
        Ok(())
    })
}

pub fn roi_invariance() -> Result<(), String> {
    seeded(1000, |rng| {
        let (w, h) = (12, 8);
        let (x0, y0) = (rng.gen_range(0..w - 1), rng.gen_range(0..h - 1));
        let (x1, y1) = (rng.gen_range(x0 + 1..=w), rng.gen_range(y0 + 1..=h));
        let visitor = |x: usize, y: usize| x >= x0 && x < x1 && y >= y0 && y < y1;
        let mask = BinaryMask::from_fn(w, h, |x, y| !visitor(x, y));
        if mask.is_empty() {
            return Ok(());
        }
        let roi = RoiMask::new(mask);
        let frames: Vec<_> = (0..rng.gen_range(2..12)).map(|_| random_frame(rng, w, h)).collect();
        let scrambled: Vec<_> = frames
            .iter()
            .map(|f| {
                let mut g = f.clone();
                for y in y0..y1 {
                    for x in x0..x1 {
                        g.set(x, y, rng.gen());
                    }
                }
                g
            })
            .collect();
        prop_assert_eq!(event_stream(&frames, &roi), event_stream(&scrambled, &roi));
        Ok(())
    })
}

pub fn diff_symmetric() -> Result<(), String> {
    seeded(1000, |rng| {
        let (a, b) = (random_frame(rng, 9, 7), random_frame(rng, 9, 7));
        let roi = RoiMask::new(BinaryMask::from_fn(9, 7, |_, _| rng.gen_bool(0.7)));
        if roi.mask().is_empty() {
            return Ok(());
        }
        let cfg = DiffConfig::default();
        prop_assert_eq!(diff_detect(&a, &b, &roi, &cfg).unwrap(), diff_detect(&b, &a, &roi, &cfg).unwrap());
        Ok(())
    })
}

pub fn depth_decreasing() -> Result<(), String> {
    run(1000, (50.0f64..1000.0, 0.02f64..0.5, 1u32..200), |(focal, baseline, d)| {
        let fb = focal * baseline * 1000.0;
        let (d0, d1) = (d as f32, d as f32 + 0.5);
        // both depths representable and more than a millimetre apart after rounding
        prop_assume!(fb / f64::from(d0) <= 65_000.0 && fb / f64::from(d0) - fb / f64::from(d1) > 1.0);
        let map = DisparityMap::from_fn(2, 1, |x, _| Some(if x == 0 { d0 } else { d1 }));
        let depth = disparity_to_depth(&map, baseline, focal);
        prop_assert!(depth.get(0, 0) > depth.get(1, 0), "{:?}", depth.depths());
        prop_assert!(depth.get(1, 0) > 0);
        Ok(())
    })
}

fn scene_ranges() -> SceneRanges {
    SceneRanges {
        image: (48, 36),
        animal_count: (0, 4),
        ..SceneRanges::default()
    }
}

pub fn rendered_frame_consistent() -> Result<(), String> {
    run(1000, any::<u64>(), |seed| {
        let spec = sample_scene(seed, &scene_ranges());
        let f = render_scene(&spec).unwrap();
        let (w, h) = f.dims();
        prop_assert_eq!(f.class_map.len(), w * h);
        let n = f.instance_count();
        let mut seen = vec![None; usize::from(n) + 1];
        for i in 0..w * h {
            let (inst, class) = (f.instance_map[i], f.class_map[i]);
            prop_assert_eq!(inst != 0, class != 0);
            if inst == 0 {
                continue;
            }
            let key = (class, f.depth.depths()[i]);
            match seen[usize::from(inst)] {
                None => seen[usize::from(inst)] = Some(key),
                Some(k) => prop_assert_eq!(k, key, "instance {} not uniform", inst),
            }
        }
        // ids consecutive from 1, in animal order, each at its animal's depth
        let keys: Vec<(u8, u16)> = seen[1..].iter().map(|k| k.expect("every id used")).collect();
        let animals: Vec<(u8, u16)> = spec
            .animals
            .iter()
            .map(|a| (a.species.class_id() as u8 + 1, (a.ground_position.1 * 1000.0).round() as u16))
            .collect();
        let mut it = animals.iter();
        for k in &keys {
            prop_assert!(it.any(|a| a == k), "instance {:?} not an in-order animal of {:?}", k, animals);
        }
        Ok(())
    })
}

pub fn rendering_deterministic() -> Result<(), String> {
    run(1000, any::<u64>(), |seed| {
        let spec = sample_scene(seed, &scene_ranges());
        prop_assert_eq!(render_scene(&spec).unwrap(), render_scene(&spec).unwrap());
        Ok(())
    })
}

pub fn monotone_occlusion() -> Result<(), String> {
    let ranges = SceneRanges {
        animal_count: (1, 4),
        ..SceneRanges::default()
    };
    // a real approach, so growth outweighs where the pixel grid happens to fall
    run(1000, (any::<u64>(), 0usize..4, 0.5f64..=1.0), |(seed, pick, factor)| {
        let spec = sample_scene(seed, &ranges);
        let i = pick % spec.animals.len();
        let pixels = |s: &trapkit::synthgen::SceneSpec| {
            let a = s.animals[i];
            let key = (a.species.class_id() as u8 + 1, (a.ground_position.1 * 1000.0).round() as u16);
            let f = render_scene(s).unwrap();
            (0..f.class_map.len())
                .filter(|&p| f.instance_map[p] != 0 && (f.class_map[p], f.depth.depths()[p]) == key)
                .count()
        };
        let mut near = spec.clone();
        // a nearer animal also moves in the image, so one that stays in front of it can
        // cover more; the frame edge likewise cuts pixels that no animal occludes
        let front = near.animals.iter().map(|a| a.ground_position.1).fold(f64::INFINITY, f64::min);
        near.animals[i].ground_position.1 = (0.8 * spec.animals[i].ground_position.1).min(0.95 * front) * factor;
        let (u0, v0, u1, v1) = Silhouette::new(&near.animals[i]).image_bounds(&near.camera, &near.animals[i]);
        let (w, h) = near.camera.image;
        prop_assume!(u0 >= 0.0 && v0 >= 0.0 && u1 <= w as f64 && v1 <= h as f64);
        let (far_px, near_px) = (pixels(&spec), pixels(&near));
        prop_assert!(near_px >= far_px, "{} < {}", near_px, far_px);
        Ok(())
    })
}

fn small_model(seed: u64, depth: usize) -> FuseNet<f64> {
    FuseNet::new(ModelConfig {
        seed,
        feature_depth: depth,
        ..ModelConfig::default()
    })
    .unwrap()
}

fn random_tensor(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor<f64> {
    Tensor::from_vec(c, h, w, (0..c * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn backbone_weights(b: &Backbone<f64>) -> Vec<u64> {
    [&b.conv1, &b.conv2, &b.conv3]
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias).map(|v| v.to_bits()))
        .collect()
}

pub fn no_weight_sharing() -> Result<(), String> {
    seeded(1000, |rng| {
        let mut model = small_model(rng.gen(), 4);
        // the depth branch starts as a derived copy, then evolves on its own
        model.depth_backbone = init_depth_backbone(&model.image_backbone);
        let x = random_tensor(rng, 1, 9, 9);
        let d = random_tensor(rng, 1, 9, 9);
        let target: Vec<u8> = (0..81).map(|_| rng.gen_range(0..5)).collect();
        let (_, grad) = model.loss_and_grad(&x, Some(&d), &target, &[1.0; 5]).unwrap();
        // layers 0..3 are the image backbone, 3..6 the depth backbone
        for (train_image, frozen) in [(true, 3..6), (false, 0..3)] {
            let mut step = grad.clone();
            for l in frozen {
                step.layers[l] = ModelGrad::zeros_like(&model).layers[l].clone();
            }
            let mut stepped = model.clone();
            stepped.apply_gradient(&step, 0.5);
            let (moved, still) = if train_image {
                (&stepped.image_backbone, &stepped.depth_backbone)
            } else {
                (&stepped.depth_backbone, &stepped.image_backbone)
            };
            let (moved_before, still_before) = if train_image {
                (&model.image_backbone, &model.depth_backbone)
            } else {
                (&model.depth_backbone, &model.image_backbone)
            };
            prop_assert_eq!(backbone_weights(still), backbone_weights(still_before));
            prop_assert_ne!(backbone_weights(moved), backbone_weights(moved_before));
        }
        Ok(())
    })
}

/// Zero-padded stride-1 cross-correlation written out term by term.
fn naive_conv(x: &Tensor<f64>, l: &ConvLayer<f64>) -> Tensor<f64> {
    let (k, p) = (l.kernel as i64, l.kernel as i64 / 2);
    let mut out = Tensor::zeros(l.out_channels, x.height, x.width);
    for o in 0..l.out_channels {
        for y in 0..x.height as i64 {
            for xx in 0..x.width as i64 {
                let mut acc = l.bias[o];
                for i in 0..l.in_channels {
                    for ky in 0..k {
                        for kx in 0..k {
                            let (sy, sx) = (y + ky - p, xx + kx - p);
                            if sy < 0 || sx < 0 || sy >= x.height as i64 || sx >= x.width as i64 {
                                continue;
                            }
                            acc += l.weights[l.weight_index(o, i, ky as usize, kx as usize)]
                                * x.at(i, sy as usize, sx as usize);
                        }
                    }
                }
                out.data[(o * x.height + y as usize) * x.width + xx as usize] = acc;
            }
        }
    }
    out
}

pub fn fusion_equals_concat_conv() -> Result<(), String> {
    seeded(1000, |rng| {
        let (f, h, w) = (rng.gen_range(1..=16), rng.gen_range(1..=8), rng.gen_range(1..=8));
        let img = random_tensor(rng, f, h, w);
        let depth = random_tensor(rng, f, h, w);
        let mut fusion = ConvLayer::<f64>::init_uniform(2 * f, f, 3, 1, rng).unwrap();
        fusion.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        let fused = fuse_features(&img, &depth, &fusion).unwrap();
        let expected = naive_conv(&concat_channels(&img, &depth).unwrap(), &fusion);
        prop_assert_eq!(fused.shape(), [f, h, w]);
        for (a, b) in fused.data.iter().zip(&expected.data) {
            prop_assert!((a - b).abs() <= 1e-6, "{} vs {}", a, b);
        }
        Ok(())
    })
}

pub fn flip_equivariance() -> Result<(), String> {
    seeded(1000, |rng| {
        let model = small_model(rng.gen(), 4);
        // widths ≡ 1 (mod 8) keep both stride-2 sampling grids centred
        let w = 8 * rng.gen_range(1..=3) + 1;
        let h = rng.gen_range(3..=12);
        let x = random_tensor(rng, 1, h, w);
        let d = random_tensor(rng, 1, h, w);
        let out = model.forward_tensors(&x, Some(&d)).unwrap();
        prop_assert_eq!(&out, &model.forward_tensors(&x, Some(&d)).unwrap());
        let mirrored = model.mirrored().forward_tensors(&x.flip_horizontal(), Some(&d.flip_horizontal())).unwrap();
        for (a, b) in out.flip_horizontal().data.iter().zip(&mirrored.data) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
        Ok(())
    })
}

pub fn softmax_sums_to_one() -> Result<(), String> {
    seeded(1000, |rng| {
        let (c, h, w) = (rng.gen_range(1..=8), rng.gen_range(1..=6), rng.gen_range(1..=6));
        let scale = rng.gen_range(0.1..80.0);
        let logits = Tensor::<f32>::from_vec(c, h, w, (0..c * h * w).map(|_| rng.gen_range(-scale..scale)).collect())
            .unwrap();
        let p = softmax(&logits);
        prop_assert!(p.is_finite());
        for i in 0..h * w {
            let s: f32 = (0..c).map(|k| p.plane(k)[i]).sum();
            prop_assert!((s - 1.0).abs() <= 1e-5, "sum {}", s);
        }
        Ok(())
    })
}

fn metrics(dets: &[Detection], gts: &[(u64, LabeledInstance)], kind: IouKind) -> Vec<f64> {
    let r = evaluate(dets, gts, &EvalConfig::with_kind(kind)).unwrap();
    let mut v = vec![r.ap_mean, r.ap50, r.ap75];
    v.extend(r.per_class.values());
    v
}

fn kind_of(rng: &mut ChaCha8Rng) -> IouKind {
    if rng.gen() {
        IouKind::Mask
    } else {
        IouKind::Box
    }
}

pub fn false_positive_monotone() -> Result<(), String> {
    seeded(1000, |rng| {
        let (mut dets, gts) = random_case(rng, 10, 15, 3);
        let kind = kind_of(rng);
        let before = evaluate(&dets, &gts, &EvalConfig::with_kind(kind)).unwrap();
        // an image with no ground truth cannot match anything
        let mask = super::random_mask(rng, super::CANVAS, super::CANVAS);
        let class = rng.gen_range(0..3);
        dets.push(Detection::from_mask(99, class, rng.gen_range(0.0..1.0), mask).unwrap());
        let after = evaluate(&dets, &gts, &EvalConfig::with_kind(kind)).unwrap();
        prop_assert!(after.ap_mean <= before.ap_mean && after.ap50 <= before.ap50 && after.ap75 <= before.ap75);
        for (c, v) in &after.per_class {
            prop_assert!(*v <= before.per_class.get(c).copied().unwrap_or(0.0));
        }
        Ok(())
    })
}

pub fn true_positive_monotone() -> Result<(), String> {
    seeded(1000, |rng| {
        let (mut dets, mut gts) = random_case(rng, 10, 15, 3);
        let kind = kind_of(rng);
        // a ground truth nobody detects yet, alone on its image
        let mask = super::random_mask(rng, super::CANVAS, super::CANVAS);
        let g = LabeledInstance::from_mask(rng.gen_range(0..3), mask, None).unwrap();
        gts.push((99, g.clone()));
        let before = evaluate(&dets, &gts, &EvalConfig::with_kind(kind)).unwrap();
        dets.push(Detection::from_instance(99, &g, rng.gen_range(0.0..1.0)));
        let after = evaluate(&dets, &gts, &EvalConfig::with_kind(kind)).unwrap();
        prop_assert!(after.ap_mean >= before.ap_mean && after.ap50 >= before.ap50 && after.ap75 >= before.ap75);
        for (c, v) in &after.per_class_threshold {
            for (t, (a, b)) in v.iter().zip(&before.per_class_threshold[c]).enumerate() {
                prop_assert!(a >= b, "class {} threshold {}: {} < {}", c, t, a, b);
            }
        }
        Ok(())
    })
}

pub fn score_scaling() -> Result<(), String> {
    seeded(1000, |rng| {
        let (dets, gts) = random_case(rng, 10, 15, 3);
        let kind = kind_of(rng);
        let factor = rng.gen_range(0.01..=1.0);
        let scaled: Vec<Detection> = dets
            .iter()
            .map(|d| Detection {
                score: d.score * factor,
                ..d.clone()
            })
            .collect();
        let cfg = EvalConfig::with_kind(kind);
        prop_assert_eq!(evaluate(&dets, &gts, &cfg).unwrap(), evaluate(&scaled, &gts, &cfg).unwrap());
        Ok(())
    })
}

pub fn threshold_ordering() -> Result<(), String> {
    seeded(1000, |rng| {
        let (dets, gts) = random_case(rng, 10, 15, 3);
        let kind = kind_of(rng);
        let r = evaluate(&dets, &gts, &EvalConfig::with_kind(kind)).unwrap();
        for (c, per_t) in &r.per_class_threshold {
            let mean = r.per_class[c];
            prop_assert!(per_t[0] >= mean - 1e-12 && mean + 1e-12 >= per_t[9], "class {}: {:?}", c, per_t);
        }
        prop_assert!(r.ap50 >= r.ap_mean - 1e-12);
        Ok(())
    })
}

pub fn mask_equals_box() -> Result<(), String> {
    seeded(1000, |rng| {
        let (dets, gts) = random_case(rng, 10, 15, 3);
        let (w, h) = (super::CANVAS, super::CANVAS);
        let fill = |b: BoundingBox| BinaryMask::from_box(w, h, b);
        let dets: Vec<Detection> = dets
            .into_iter()
            .map(|d| Detection {
                mask: fill(d.bbox),
                ..d
            })
            .collect();
        let gts: Vec<(u64, LabeledInstance)> = gts
            .into_iter()
            .map(|(i, g)| (i, LabeledInstance::from_mask(g.class_id, fill(g.bbox), None).unwrap()))
            .collect();
        let mut boxes = evaluate(&dets, &gts, &EvalConfig::with_kind(IouKind::Box)).unwrap();
        let masks = evaluate(&dets, &gts, &EvalConfig::with_kind(IouKind::Mask)).unwrap();
        boxes.iou_kind = IouKind::Mask;
        prop_assert_eq!(boxes, masks);
        Ok(())
    })
}
