// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ethopipe_core::annotations::{parse_annotation_document, read_annotation_file, serialize_annotation_document};
use ethopipe_core::annotations::{Dataset, ImageRecord, InstanceAnnotation};
use ethopipe_core::augment::{
    augment_dataset, gaussian_blur, grayscale, load_rgb, pixel_noise, AugmentConfig, TransformParams,
    MAX_BLUR_SIGMA, MAX_NOISE_FRACTION, MAX_ROTATION_DEG, MIN_CROP_RETAIN,
};
use ethopipe_core::classify::{
    example_features, extract_features, predict, score_windows, train_baseline, CategoriserModel,
    ProbabilityTimeline, TimelineRow, TrainParams, TrainingExample, N_PARAMS,
};
use ethopipe_core::detection::{
    classify_detection, coverage_metrics, evaluate_frame, summarize_videos, video_accuracy, write_coverage_csv,
    CoverageReport, ExternalMaskImport, GroundTruthPlayback, Verdict,
};
use ethopipe_core::evaluate::{
    match_events, onset_latency, read_ethogram_csv, threshold_events, write_ethogram_csv, EthogramInterval,
    Hysteresis,
};
use ethopipe_core::parallel::{amdahl_speedup, bench_scaling, detect_plateau, Pool, Workload};
use ethopipe_core::patterns::{
    frame_file_name, generate_examples, plan_windows, read_examples, render_movement_pattern, time_colour,
    write_examples, write_video_meta, Animation, ExampleConfig, FrameSequence, MaskTrack,
};
use ethopipe_core::rng::seeded_rng;
use ethopipe_core::synth::{motion_dataset, write_fixture, write_sidecar_masks};
use ethopipe_core::Mask;
use image::{Rgb, RgbImage};
use rand::Rng;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// 1. coverage/spill rule table on a 21×21 grid
fn threshold_protocol() -> Outcome {
    let mut cells = 0;
    for i in 0..=20u32 {
        for j in 0..=20u32 {
            let (c, s) = (i as f64 / 20.0, j as f64 / 20.0);
            // coverage ≥ 0.95 ⇔ i ≥ 19, spill ≤ 0.05 ⇔ j ≤ 1
            let expected = if i < 19 {
                Verdict::UnderDetection
            } else if j > 1 {
                Verdict::OverDetection
            } else {
                Verdict::Accurate
            };
            let r = classify_detection(c, s);
            check(r.verdict == expected, || format!("({c}, {s}) gave {:?}, expected {expected:?}", r.verdict))?;
            check(r.is_under == (i < 19) && r.is_over == (j > 1), || format!("flags wrong at ({c}, {s})"))?;
            cells += 1;
        }
    }
    Ok(format!("{cells} cells match"))
}

// 2. coverage metrics against per-pixel counting
fn coverage_oracle() -> Outcome {
    let mut rng = seeded_rng(2);
    for k in 0..200 {
        let density_gt = rng.gen_range(0.02..0.9);
        let density_pred = rng.gen_range(0.0..0.9);
        let gt_bits: Vec<bool> = (0..1024).map(|_| rng.gen_bool(density_gt)).collect();
        let pred_bits: Vec<bool> = (0..1024).map(|_| rng.gen_bool(density_pred)).collect();
        if !gt_bits.iter().any(|b| *b) {
            continue;
        }
        let gt = Mask::from_bits(32, 32, gt_bits.clone()).map_err(e2s)?;
        let pred = Mask::from_bits(32, 32, pred_bits.clone()).map_err(e2s)?;
        let (mut inter, mut n_gt, mut n_pred) = (0usize, 0usize, 0usize);
        for i in 0..1024 {
            inter += (gt_bits[i] && pred_bits[i]) as usize;
            n_gt += gt_bits[i] as usize;
            n_pred += pred_bits[i] as usize;
        }
        let coverage = inter as f64 / n_gt as f64;
        let spill = if n_pred == 0 { 0.0 } else { (n_pred - inter) as f64 / n_pred as f64 };
        let m = coverage_metrics(&pred, &gt).map_err(e2s)?;
        check(m.coverage == coverage && m.spill == spill, || {
            format!("pair {k}: got ({}, {}), oracle ({coverage}, {spill})", m.coverage, m.spill)
        })?;
    }
    Ok("200 pairs identical".into())
}

// 3. per-video accuracy and group aggregation
fn table_aggregation() -> Outcome {
    let accurate = classify_detection(1.0, 0.0);
    let under = classify_detection(0.6, 0.0);
    let over = classify_detection(0.99, 0.3);
    let video = |id: usize, n_ok: usize, miss: CoverageReport| {
        let stream: Vec<CoverageReport> = (0..100).map(|f| if f < n_ok { accurate } else { miss }).collect();
        video_accuracy(&format!("video{id}"), &stream)
    };
    // group 1: video 1; group 2: seven frontal videos; group 3: three low-contrast videos
    let groups: [(&str, Vec<(usize, usize, CoverageReport)>, f64); 3] = [
        ("partly out of frame", vec![(1, 55, under)], 0.55),
        (
            "frontal, high contrast",
            vec![(2, 92, under), (4, 92, under), (5, 92, under), (6, 91, under), (9, 92, under), (10, 91, under), (11, 92, under)],
            0.917,
        ),
        ("background resembles animal", vec![(3, 33, over), (7, 33, over), (8, 33, over)], 0.33),
    ];
    let mut all = Vec::new();
    let mut detail = Vec::new();
    for (name, vids, target) in &groups {
        let reports = vids.iter().map(|(id, ok, miss)| video(*id, *ok, *miss)).collect::<Result<Vec<_>, _>>().map_err(e2s)?;
        let mean = summarize_videos(&reports).map_err(e2s)?.mean;
        check((mean - target).abs() <= 0.001, || format!("{name}: mean {mean:.4} vs {target}"))?;
        detail.push(format!("{mean:.4}"));
        all.extend(reports);
    }
    let summary = summarize_videos(&all).map_err(e2s)?;
    check(summary.n_videos == 11, || "expected 11 videos".into())?;
    Ok(format!(
        "group means {}; 11-video mean {:.4}, sd {:.4}",
        detail.join(" / "),
        summary.mean,
        summary.sd
    ))
}

// 4. sampled augmentation parameters never exceed their bounds
fn augmentation_bounds() -> Outcome {
    let cfg = AugmentConfig::new(1, 4);
    let mut rng = seeded_rng(4);
    let n = 100_000usize;
    let mut gray = 0usize;
    for k in 0..n {
        let (w, h) = (64 + (k % 97) as u32, 48 + (k % 89) as u32);
        let p = TransformParams::sample(&cfg, &mut rng, w, h);
        if let Some(c) = p.crop {
            check(c.retain_x >= MIN_CROP_RETAIN && c.retain_y >= MIN_CROP_RETAIN, || format!("crop {c:?}"))?;
            check(c.retain_x <= 1.0 && c.retain_y <= 1.0, || format!("crop {c:?}"))?;
        }
        if let Some(a) = p.rotation_deg {
            check(a.abs() <= MAX_ROTATION_DEG, || format!("rotation {a}"))?;
        }
        if let Some(s) = p.blur_sigma {
            check((0.0..=MAX_BLUR_SIGMA).contains(&s), || format!("sigma {s}"))?;
        }
        if let Some(f) = p.noise_fraction {
            check((0.0..=MAX_NOISE_FRACTION).contains(&f), || format!("noise {f}"))?;
        }
        gray += p.grayscale as usize;
    }
    check(MAX_BLUR_SIGMA <= 3.25 && MAX_NOISE_FRACTION <= 0.04 && MAX_ROTATION_DEG <= 35.0 && MIN_CROP_RETAIN >= 0.5, || {
        "declared maxima looser than the corpus table".into()
    })?;
    let expected = 0.1 * n as f64;
    let sd = (n as f64 * 0.1 * 0.9).sqrt();
    check((gray as f64 - expected).abs() <= 5.0 * sd, || format!("grayscale count {gray}, expected {expected} ± {:.0}", 5.0 * sd))?;
    Ok(format!("{n} samples, 0 violations, grayscale rate {:.4}", gray as f64 / n as f64))
}

fn moving_square(t: usize) -> Mask {
    let mut m = Mask::new(200, 60).expect("mask");
    let x0 = 10 + 3 * t as u32;
    for y in 20..32 {
        for x in x0..x0 + 12 {
            m.set(x, y, true);
        }
    }
    m
}

// 5. movement-pattern colour anchors and photometric invariance
fn pattern_anchors() -> Outcome {
    let masks: Vec<Mask> = (0..45).map(moving_square).collect();
    let anim = Animation::new("v", 0, masks.clone()).map_err(e2s)?;
    let p = render_movement_pattern(&anim).map_err(e2s)?;
    let at = |x: u32, y: u32| *p.canvas.get_pixel((x as i64 - p.origin_x) as u32, (y as i64 - p.origin_y) as u32);
    let blue = time_colour(0, 45).map_err(e2s)?;
    let red = time_colour(44, 45).map_err(e2s)?;
    check(blue == Rgb([0, 0, 255]) && red == Rgb([255, 0, 0]), || "ramp end points".into())?;
    let later: std::collections::HashSet<(u32, u32)> = masks[1..].iter().flat_map(|m| m.contour().collect::<Vec<_>>()).collect();
    let mut first_only = 0;
    for px in masks[0].contour() {
        if !later.contains(&px) {
            check(at(px.0, px.1) == blue, || format!("first-frame pixel {px:?} is {:?}", at(px.0, px.1)))?;
            first_only += 1;
        }
    }
    let mut last = 0;
    for (x, y) in masks[44].contour() {
        check(at(x, y) == red, || format!("last-frame pixel ({x}, {y}) is {:?}", at(x, y)))?;
        last += 1;
    }
    check(first_only > 0, || "no first-frame-only pixels".into())?;

    // the same masks under two photometrically different frame sets
    let dir = tempfile::tempdir().map_err(e2s)?;
    let (plain, perturbed, mask_dir) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("m"));
    let mut rng = seeded_rng(5);
    for d in [&plain, &perturbed] {
        fs::create_dir_all(d).map_err(e2s)?;
        write_video_meta(&d.join("video.meta"), 24.0).map_err(e2s)?;
    }
    for (t, m) in masks.iter().enumerate() {
        let frame = RgbImage::from_fn(200, 60, |x, y| if m.get(x, y) { Rgb([140, 90, 60]) } else { Rgb([190, 180, 150]) });
        frame.save(plain.join(frame_file_name(t))).map_err(e2s)?;
        let noisy = pixel_noise(&gaussian_blur(&grayscale(&frame), 2.5).map_err(e2s)?, 0.04, &mut rng).map_err(e2s)?;
        noisy.save(perturbed.join(frame_file_name(t))).map_err(e2s)?;
    }
    write_sidecar_masks(&mask_dir, &masks).map_err(e2s)?;
    let adapter = ExternalMaskImport::open(&mask_dir).map_err(e2s)?;
    let pool = Pool::serial();
    let mut encoded = Vec::new();
    for d in [&plain, &perturbed] {
        let seq = FrameSequence::load(d).map_err(e2s)?;
        let track = MaskTrack::detect(&seq, &adapter, &pool).map_err(e2s)?;
        let anim = Animation::new("v", 0, track.masks().to_vec()).map_err(e2s)?;
        let pattern = render_movement_pattern(&anim).map_err(e2s)?;
        let mut png = Vec::new();
        pattern
            .canvas
            .write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
            .map_err(e2s)?;
        encoded.push(png);
    }
    check(encoded[0] == encoded[1], || "pattern changed under photometric perturbation".into())?;
    Ok(format!("{first_only} first-frame-only pixels blue, {last} final-frame pixels red, perturbed pattern identical"))
}

// 6. pure windows inside the reference interval
fn window_arithmetic() -> Outcome {
    let interval = EthogramInterval::new("RH", 2.42, 9.4).map_err(e2s)?;
    let cfg = ExampleConfig {
        window: 45,
        stride: 45,
        categories: vec!["RG".into(), "RH".into()],
        background: false,
    };
    let plan = plan_windows(1000, 24.0, &[interval], &cfg).map_err(e2s)?;
    // 2.42 s · 24 = 58.08 → first frame 59; 9.4 s · 24 = 225.6 → last frame 225
    let oracle = (0..1000usize).step_by(45).filter(|s| *s >= 59 && s + 44 <= 225).count();
    check(plan.len() == 3 && oracle == 3, || format!("{} windows, oracle {oracle}", plan.len()))?;
    let starts: Vec<usize> = plan.iter().map(|w| w.start_frame).collect();
    Ok(format!("3 windows at starts {starts:?}"))
}

// 7. gradient, softmax and separability of the baseline categoriser
fn classifier_soundness() -> Outcome {
    const SEED: u64 = 600;
    let windows = motion_dataset(600, 45, SEED).map_err(e2s)?;
    let examples: Vec<TrainingExample> = windows
        .iter()
        .map(|(label, anim)| {
            let pattern = render_movement_pattern(anim)?;
            Ok(TrainingExample { features: extract_features(anim, &pattern), label: label.clone() })
        })
        .collect::<ethopipe_core::Result<_>>()
        .map_err(e2s)?;
    let categories = vec!["RG".to_string(), "RH".to_string()];
    let model = train_baseline(&examples, &categories, &TrainParams { seed: SEED, ..Default::default() }).map_err(e2s)?;

    let objective = model.objective(&examples).map_err(e2s)?;
    let mut rng = seeded_rng(SEED + 1);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let w: Vec<[f64; N_PARAMS]> =
            (0..2).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
        let g = objective.gradient(&w);
        for k in 0..2 {
            for j in 0..N_PARAMS {
                let h = 1e-5;
                let (mut up, mut down) = (w.clone(), w.clone());
                up[k][j] += h;
                down[k][j] -= h;
                let numeric = (objective.loss(&up) - objective.loss(&down)) / (2.0 * h);
                let rel = (g[k][j] - numeric).abs() / g[k][j].abs().max(numeric.abs());
                worst = worst.max(rel);
            }
        }
    }
    check(worst <= 1e-5, || format!("max relative gradient error {worst:.3e}"))?;

    let mut rng = seeded_rng(SEED + 2);
    for _ in 0..1000 {
        let mut fv = examples[rng.gen_range(0..examples.len())].features;
        for v in &mut fv.values {
            *v += rng.gen_range(-50.0..50.0);
        }
        let p = predict(&model, &fv);
        let sum: f64 = p.iter().sum();
        check((sum - 1.0).abs() <= 1e-9 && p.iter().all(|v| *v >= 0.0), || format!("row {p:?} sums to {sum}"))?;
    }

    let correct = examples
        .iter()
        .filter(|e| {
            let p = predict(&model, &e.features);
            let best = if p[0] >= p[1] { 0 } else { 1 };
            categories[best] == e.label
        })
        .count();
    let accuracy = correct as f64 / examples.len() as f64;
    check(accuracy >= 0.95, || format!("training accuracy {accuracy:.4}"))?;
    Ok(format!("max gradient rel. error {worst:.2e}, training accuracy {accuracy:.4} on 600 windows"))
}

// 8. events from a timeline with a known bout
fn event_pipeline() -> Outcome {
    let rows: Vec<TimelineRow> = (0..=2500)
        .map(|k| {
            let t = k as f64 / 50.0;
            let p = if (9.4..=30.28).contains(&t) { 0.9 } else { 0.0 };
            TimelineRow { time_s: t, probs: vec![p, 1.0 - p] }
        })
        .collect();
    let timeline = ProbabilityTimeline::new(vec!["RG".into(), "background".into()], rows).map_err(e2s)?;
    let events = threshold_events(&timeline, "RG", Hysteresis::default()).map_err(e2s)?;
    check(events.len() == 1 && events[0].start_s == 9.4 && events[0].end_s == 30.28, || format!("events {events:?}"))?;

    let gt = [EthogramInterval::new("RH", 2.42, 9.4).map_err(e2s)?];
    let report = match_events(&[], &gt, 0.3).map_err(e2s)?;
    let rh = report.category("RH").ok_or("no RH row")?;
    check(rh.fn_ == 1 && rh.tp == 0 && rh.fp == 0, || format!("RH row {rh:?}"))?;
    let latency = onset_latency(1.48, 0.0);
    check(latency == 1.48, || format!("latency {latency}"))?;
    Ok("single event [9.4, 30.28], RH FN = 1, latency 1.48 s".into())
}

fn hash_tree(root: &Path) -> std::io::Result<String> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("inside root").to_string_lossy().into_owned();
                files.insert(rel, fs::read(&path)?);
            }
        }
    }
    let mut h = Sha256::new();
    for (name, bytes) in &files {
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn run_pipeline(fixture: &ethopipe_core::synth::Fixture, out: &Path, workers: usize) -> ethopipe_core::Result<()> {
    let pool = Pool::new(workers)?;
    let doc = read_annotation_file(&fixture.annotations)?;
    let images: Vec<ImageRecord> = doc.images()[..20].to_vec();
    let annotations: Vec<InstanceAnnotation> =
        doc.annotations().iter().filter(|a| images.iter().any(|i| i.id == a.image_id)).cloned().collect();
    let subset = Dataset::new(images, annotations, doc.categories().to_vec())?;
    let aug = augment_dataset(&subset, |r| load_rgb(&fixture.root.join(&r.path)), &AugmentConfig::new(2, 9), &pool)?;
    aug.write(&fixture.root, &out.join("aug"), "annotations.json", &pool)?;

    let seq = FrameSequence::load(&fixture.frames)?;
    let truth = GroundTruthPlayback::from_dataset(&doc);
    let import = ExternalMaskImport::open(&fixture.masks)?;
    let reports = pool.map(&seq.frames, |i, _| {
        let gt = truth.masks(i, 160, 96)?;
        let pred: Vec<Mask> = import.load(i, 160, 96)?.into_iter().map(|d| d.mask).collect();
        Ok((i, evaluate_frame(&pred, &gt)?))
    })?;
    write_coverage_csv(fs::File::create(out.join("coverage.csv")).map_err(|e| ethopipe_core::Error::io(out, e))?, &reports)?;

    let track = MaskTrack::detect(&seq, &import, &pool)?;
    let ethogram = read_ethogram_csv(fs::File::open(&fixture.ethogram).map_err(|e| ethopipe_core::Error::io(out, e))?)?;
    let cfg = ExampleConfig { stride: 5, ..ExampleConfig::default() };
    let examples = generate_examples(&seq.video_id, seq.fps, &track, &ethogram, &cfg, &pool)?;
    write_examples(&out.join("examples"), &seq, &examples, &pool)?;
    let stored = read_examples(&out.join("examples"))?;
    let training = pool.map(&stored, |_, ex| Ok(example_features(ex)))?;
    let params = TrainParams { iterations: 300, seed: 9, ..Default::default() };
    let model = train_baseline(&training, &["RG".into(), "RH".into()], &params)?;
    model.write(fs::File::create(out.join("model.txt")).map_err(|e| ethopipe_core::Error::io(out, e))?)?;
    let timeline = score_windows(&seq.video_id, seq.fps, &track, &model, 45, 5, &pool)?;
    timeline.write_csv(fs::File::create(out.join("timeline.csv")).map_err(|e| ethopipe_core::Error::io(out, e))?)?;
    Ok(())
}

// 9. worker-count independence and scaling
fn parallel_determinism_scaling() -> Outcome {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let fixture = write_fixture(&dir.path().join("fixture"), 11).map_err(e2s)?;
    let mut hashes = Vec::new();
    for p in [1, 2, 8] {
        let out = dir.path().join(format!("out{p}"));
        fs::create_dir_all(&out).map_err(e2s)?;
        run_pipeline(&fixture, &out, p).map_err(e2s)?;
        hashes.push(hash_tree(&out).map_err(e2s)?);
    }
    check(hashes.iter().all(|h| *h == hashes[0]), || format!("output hashes differ: {hashes:?}"))?;

    let s = 0.2;
    let workload = Workload::SerialFraction { serial_fraction: s, jobs: 40, total: Duration::from_millis(400) };
    let report = bench_scaling(&workload, &[1, 2, 4, 8], 3).map_err(e2s)?;
    let mut speedups = Vec::new();
    for row in &report.rows {
        let predicted = amdahl_speedup(s, row.workers);
        let err = (row.speedup - predicted).abs() / predicted;
        check(err <= 0.2, || format!("p = {}: speedup {:.3}, model {predicted:.3}", row.workers, row.speedup))?;
        speedups.push(format!("{}:{:.2}/{predicted:.2}", row.workers, row.speedup));
    }

    let series = [(1, 100.0), (2, 60.0), (4, 40.0), (8, 30.0), (16, 25.0), (32, 23.0), (64, 22.0)];
    let plateau = detect_plateau(&series, 0.05).map_err(e2s)?;
    check(plateau.workers == 32 && plateau.observed, || format!("plateau {plateau:?}"))?;
    Ok(format!(
        "hash {} for 1/2/8 workers; speedup measured/model {}; plateau 32",
        &hashes[0][..12],
        speedups.join(" ")
    ))
}

// 10. byte-identical write → read → write
fn format_round_trips() -> Outcome {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let fixture = write_fixture(dir.path(), 10).map_err(e2s)?;

    let text = fs::read_to_string(&fixture.annotations).map_err(e2s)?;
    let doc = parse_annotation_document(&text).map_err(e2s)?;
    let a = serialize_annotation_document(&doc);
    let b = serialize_annotation_document(&parse_annotation_document(&a).map_err(e2s)?);
    check(a == b && a == text, || "annotation document changed".into())?;

    let windows = motion_dataset(20, 45, 10).map_err(e2s)?;
    let examples: Vec<TrainingExample> = windows
        .iter()
        .map(|(l, anim)| {
            let p = render_movement_pattern(anim).expect("pattern");
            TrainingExample { features: extract_features(anim, &p), label: l.clone() }
        })
        .collect();
    let model = train_baseline(&examples, &["RG".into(), "RH".into()], &TrainParams { iterations: 50, ..Default::default() })
        .map_err(e2s)?;
    let mut m1 = Vec::new();
    model.write(&mut m1).map_err(e2s)?;
    let back = CategoriserModel::read(m1.as_slice()).map_err(e2s)?;
    let mut m2 = Vec::new();
    back.write(&mut m2).map_err(e2s)?;
    check(m1 == m2 && back == model, || "model file changed".into())?;

    let intervals = vec![
        EthogramInterval::new("RH", 2.42, 9.4).map_err(e2s)?,
        EthogramInterval::new("RG", 9.4, 30.28).map_err(e2s)?,
        EthogramInterval::new("RG", 31.125, 40.0).map_err(e2s)?,
    ];
    let mut e1 = Vec::new();
    write_ethogram_csv(&mut e1, &intervals).map_err(e2s)?;
    let mut e2 = Vec::new();
    write_ethogram_csv(&mut e2, &read_ethogram_csv(e1.as_slice()).map_err(e2s)?).map_err(e2s)?;
    check(e1 == e2, || "ethogram changed".into())?;

    let mut rng = seeded_rng(10);
    let rows = (0..200)
        .map(|k| {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen::<f64>() * (1.0 - a);
            TimelineRow { time_s: (k + 44) as f64 / 24.0, probs: vec![a, b, 1.0 - a - b] }
        })
        .collect();
    let timeline = ProbabilityTimeline::new(vec!["RG".into(), "RH".into(), "background".into()], rows).map_err(e2s)?;
    let mut t1 = Vec::new();
    timeline.write_csv(&mut t1).map_err(e2s)?;
    let mut t2 = Vec::new();
    ProbabilityTimeline::read_csv(t1.as_slice()).map_err(e2s)?.write_csv(&mut t2).map_err(e2s)?;
    check(t1 == t2, || "timeline changed".into())?;
    Ok("annotation document, model file, ethogram CSV and timeline CSV stable".into())
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags; a name filter selects criteria by number.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 10] = [
        (1, "threshold protocol exactness", Duration::from_secs(1), threshold_protocol),
        (2, "coverage oracle equivalence", Duration::from_secs(5), coverage_oracle),
        (3, "per-group accuracy aggregation", Duration::from_secs(1), table_aggregation),
        (4, "augmentation bounds", Duration::from_secs(60), augmentation_bounds),
        (5, "pattern colour anchors", Duration::from_secs(5), pattern_anchors),
        (6, "window arithmetic", Duration::from_secs(1), window_arithmetic),
        (7, "baseline classifier soundness", Duration::from_secs(120), classifier_soundness),
        (8, "timeline/event pipeline", Duration::from_secs(1), event_pipeline),
        (9, "parallel determinism and scaling", Duration::from_secs(300), parallel_determinism_scaling),
        (10, "format round-trips", Duration::from_secs(5), format_round_trips),
    ];
    let mut failed = 0;
    for (n, name, budget, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| *x == n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > budget => Err(format!("{d}; over the {:.0} s budget", budget.as_secs_f64())),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name} ({:.2} s): {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {name} ({:.2} s): {why}", elapsed.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
