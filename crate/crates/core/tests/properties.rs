use oppnet::electrophys::{classify, classify_double, OpponencyClass, TuningCurve};
use oppnet::retinanet::{build_network, forward, ArchitectureConfig, NetworkParameters};
use oppnet::rng::seeded;
use oppnet::sensitivity::{sensitivity_aggregate, HueSensitivityCurve};
use oppnet::stimuli::{
    generate_grating, hsl_to_rgb, hue_jacobian, hue_rotate, mosaic_shuffle, rgb_to_cielab, rgb_to_grey,
    BankKind, GratingSpec, StimulusSpec, channel_shuffle,
};
use oppnet::retinanet::LayerName;
use oppnet::tensor::kernels::conv2d;
use oppnet::tensor::{OptimizerState, RmsProp, Tape, Tensor};
use proptest::prelude::*;
use std::sync::Arc;

fn tensor(shape: &'static [usize]) -> impl Strategy<Value = Tensor> {
    let n: usize = shape.iter().product();
    prop::collection::vec(-1.0f32..1.0, n).prop_map(move |d| Tensor::new(shape.to_vec(), d).unwrap())
}

fn curve(post: Vec<f32>, baseline: f32) -> TuningCurve {
    let n = post.len();
    TuningCurve {
        kind: BankKind::Hue,
        stimuli: Arc::from(vec![StimulusSpec::Grating(GratingSpec::new(0.0, 1.0, 0.0)); n]),
        pre: post.clone(),
        post,
        baseline_pre: baseline,
        baseline_post: baseline,
    }
}

/// Responses drawn from a few levels so ties with the baseline are common.
fn responses() -> impl Strategy<Value = (Vec<f32>, f32)> {
    (prop::collection::vec(0u8..4, 1..40), 0u8..4)
        .prop_map(|(v, b)| (v.into_iter().map(|x| f32::from(x) * 0.5).collect(), f32::from(b) * 0.5))
}

fn small_arch(nbn: usize, dvvs: usize, channels: usize) -> ArchitectureConfig {
    ArchitectureConfig {
        bottleneck_width: nbn,
        ventral_depth: dvvs,
        input_channels: channels,
        base_channels: 3,
        kernel_size: 3,
        hidden_units: 5,
        num_classes: 4,
        input_size: 5,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_is_linear(x in tensor(&[1, 2, 5, 5]), y in tensor(&[1, 2, 5, 5]),
                      w in tensor(&[3, 2, 3, 3]), a in -2.0f32..2.0, b in -2.0f32..2.0) {
        let zero = Tensor::zeros(&[3]);
        let mix = Tensor::new(vec![1, 2, 5, 5],
            x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect()).unwrap();
        let lhs = conv2d(&mix, &w, &zero).unwrap();
        let cx = conv2d(&x, &w, &zero).unwrap();
        let cy = conv2d(&y, &w, &zero).unwrap();
        for i in 0..lhs.len() {
            let rhs = a * cx.data()[i] + b * cy.data()[i];
            prop_assert!((lhs.data()[i] - rhs).abs() <= 1e-4 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn composed_expression_gradients_match_finite_differences(
        x in tensor(&[2, 6]), w in tensor(&[6, 3]), b in tensor(&[3]), t in tensor(&[2, 3])
    ) {
        // L = sum(relu(xW + b) * t) + 0.5 * sum(x * x)
        let eval = |x: &Tensor| -> (f64, Tensor) {
            let mut tape = Tape::new();
            let xv = tape.leaf(x.clone());
            let wv = tape.leaf(w.clone());
            let bv = tape.leaf(b.clone());
            let tv = tape.leaf(t.clone());
            let h = tape.linear(xv, wv, bv).unwrap();
            let r = tape.relu(h);
            let m = tape.mul(r, tv).unwrap();
            let s1 = tape.sum(m);
            let sq = tape.mul(xv, xv).unwrap();
            let s2 = tape.sum(sq);
            let s2 = tape.scale(s2, 0.5);
            let loss = tape.add(s1, s2).unwrap();
            let g = tape.backward(loss).unwrap();
            (f64::from(tape.value(loss).item().unwrap()), g.get(xv).unwrap().clone())
        };
        let (_, grad) = eval(&x);
        // Compare against a float64 evaluation of the same expression.
        let f = |xs: &[f64]| -> f64 {
            let mut total = 0.0;
            for n in 0..2 {
                for j in 0..3 {
                    let mut h = f64::from(b.data()[j]);
                    for i in 0..6 {
                        h += xs[n * 6 + i] * f64::from(w.data()[i * 3 + j]);
                    }
                    total += h.max(0.0) * f64::from(t.data()[n * 3 + j]);
                }
            }
            total + 0.5 * xs.iter().map(|v| v * v).sum::<f64>()
        };
        let base: Vec<f64> = x.data().iter().map(|&v| f64::from(v)).collect();
        for i in 0..base.len() {
            let mut hi = base.clone();
            let mut lo = base.clone();
            hi[i] += 1e-3;
            lo[i] -= 1e-3;
            // Skip elements whose perturbation crosses a ReLU kink.
            let crosses = (0..3).any(|j| {
                let n = i / 6;
                let pre = |xs: &[f64]| (0..6).map(|k| xs[n * 6 + k] * f64::from(w.data()[k * 3 + j])).sum::<f64>() + f64::from(b.data()[j]);
                pre(&hi).signum() != pre(&lo).signum()
            });
            if crosses { continue; }
            let fd = (f(&hi) - f(&lo)) / 2e-3;
            let an = f64::from(grad.data()[i]);
            if an.abs() > 1e-6 {
                prop_assert!((an - fd).abs() / an.abs().max(fd.abs()) < 1e-3, "elem {}: {} vs {}", i, an, fd);
            }
        }
    }

    #[test]
    fn rmsprop_accumulator_stays_non_negative(steps in prop::collection::vec(tensor(&[4]), 1..12)) {
        let opt = RmsProp::default();
        let mut p = Tensor::zeros(&[4]);
        let mut state = OptimizerState::for_params(&[&p]);
        for g in &steps {
            opt.step(&mut [&mut p], &[g], &mut state).unwrap();
            prop_assert!(state.v[0].data().iter().all(|&v| v >= 0.0));
        }
        prop_assert_eq!(state.step, steps.len() as u64);
    }

    #[test]
    fn partition_and_conjunction_laws((post, base) in responses(), (post2, base2) in responses()) {
        let a = classify(&curve(post.clone(), base));
        let b = classify(&curve(post2, base2));
        let excited = post.iter().any(|&r| r > base);
        let inhibited = post.iter().any(|&r| r < base);
        let holds = [
            a == OpponencyClass::Opponent,
            a == OpponencyClass::NonOpponent,
            a == OpponencyClass::Unresponsive,
        ];
        prop_assert_eq!(holds.iter().filter(|&&h| h).count(), 1);
        prop_assert_eq!(a == OpponencyClass::Opponent, excited && inhibited);
        prop_assert_eq!(a == OpponencyClass::Unresponsive, post.iter().all(|&r| r == base));
        prop_assert_eq!(classify_double(a, b), a == OpponencyClass::Opponent && b == OpponencyClass::Opponent);
    }

    #[test]
    fn bank_refinement_is_monotone((post, base) in responses(), extra in prop::collection::vec(0u8..4, 0..10)) {
        let rank = |c: OpponencyClass| match c {
            OpponencyClass::Unresponsive => 0,
            OpponencyClass::NonOpponent => 1,
            OpponencyClass::Opponent => 2,
        };
        let before = classify(&curve(post.clone(), base));
        let mut bigger = post;
        bigger.extend(extra.into_iter().map(|x| f32::from(x) * 0.5));
        let after = classify(&curve(bigger, base));
        prop_assert!(rank(after) >= rank(before));
    }

    #[test]
    fn full_contrast_hue_circle(h in 0.0f64..360.0) {
        let rgb = hsl_to_rgb(h, 1.0, 0.5);
        prop_assert_eq!(rgb.iter().copied().fold(f64::MIN, f64::max), 1.0);
        prop_assert_eq!(rgb.iter().copied().fold(f64::MAX, f64::min), 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences(h in 0.0f64..360.0) {
        let r = h.rem_euclid(60.0);
        prop_assume!(r > 0.5 && r < 59.5);
        let j = hue_jacobian(h, 1.0, 0.5).unwrap();
        let hi = hsl_to_rgb(h + 0.01, 1.0, 0.5);
        let lo = hsl_to_rgb(h - 0.01, 1.0, 0.5);
        for c in 0..3 {
            prop_assert!(((hi[c] - lo[c]) / 0.02 - j[c]).abs() < 1e-4);
        }
        prop_assert_eq!(hue_jacobian(h, 0.0, 0.5).unwrap(), [0.0; 3]);
    }

    #[test]
    fn transforms_preserve_unit_range(img in prop::collection::vec(0.0f32..=1.0, 48), seed in 0u64..1000, deg in -360.0f64..360.0) {
        let img = Tensor::new(vec![3, 4, 4], img).unwrap();
        let mut rng = seeded(seed);
        let outs = [
            hue_rotate(&img, deg).unwrap(),
            rgb_to_grey(&img).unwrap(),
            rgb_to_cielab(&img).unwrap(),
            mosaic_shuffle(&img, 2, &mut rng).unwrap(),
            channel_shuffle(&img, &mut rng).unwrap().0,
        ];
        for o in &outs {
            prop_assert!(o.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn aggregate_of_copies_is_the_curve(vals in prop::collection::vec(-50.0f64..50.0, 1..20), n in 1usize..5) {
        let hues: Vec<f64> = (0..vals.len()).map(|i| 1.0 + i as f64).collect();
        let c = HueSensitivityCurve {
            layer: LayerName::Retina2,
            undefined: vec![false; vals.len()],
            mean: vals.iter().map(|&v| Some(v)).collect(),
            stderr: vec![Some(0.0); vals.len()],
            hues,
            models: 1,
            stderr_degenerate: true,
        };
        let agg = sensitivity_aggregate(&vec![c.clone(); n]).unwrap();
        for i in 0..vals.len() {
            prop_assert!((agg.mean[i].unwrap() - vals[i]).abs() < 1e-9);
            prop_assert!(agg.stderr[i].unwrap() < 1e-9);
        }
        prop_assert_eq!(agg.stderr_degenerate, n == 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn architecture_round_trips(nbn in 1usize..6, dvvs in 0usize..4, grey in any::<bool>()) {
        let cfg = small_arch(nbn, dvvs, if grey { 1 } else { 3 });
        let back: ArchitectureConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(NetworkParameters::expected_shapes(&back), NetworkParameters::expected_shapes(&cfg));
        let net = build_network(&back, 0).unwrap();
        let shapes: Vec<Vec<usize>> = net.tensors().iter().map(|t| t.shape().to_vec()).collect();
        prop_assert_eq!(shapes, NetworkParameters::expected_shapes(&cfg));
    }

    #[test]
    fn black_baseline_is_stable_and_deterministic(nbn in 1usize..4, dvvs in 0usize..3, seed in 0u64..100, batch in 1usize..4) {
        let cfg = small_arch(nbn, dvvs, 3);
        let net = build_network(&cfg, seed).unwrap();
        prop_assert_eq!(&net, &build_network(&cfg, seed).unwrap());
        let layers = cfg.conv_layer_names();
        let zeros = Tensor::zeros(&[batch, 3, 5, 5]);
        let a = forward(&net, &zeros, &layers).unwrap();
        let b = forward(&net, &zeros, &layers).unwrap();
        prop_assert_eq!(&a.logits, &b.logits);
        for act in a.capture.values() {
            let per = act.post.len() / batch;
            for n in 1..batch {
                prop_assert_eq!(&act.post.data()[..per], &act.post.data()[n * per..(n + 1) * per]);
            }
        }
    }

    #[test]
    fn grating_mean_is_one_half(theta in prop::sample::select(vec![0.0, 90.0, 180.0]), f in prop::sample::select(vec![1.0, 2.0, 4.0, 8.0]), phase in 0.0f64..360.0) {
        let g = generate_grating(&GratingSpec { theta, frequency: f, phase, size: 32 }, 1).unwrap();
        let mean = g.data().iter().map(|&v| f64::from(v)).sum::<f64>() / g.len() as f64;
        prop_assert!((mean - 0.5).abs() < 1e-6);
    }
}
