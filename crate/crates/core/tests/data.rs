mod common;

use std::sync::Arc;

use common::{fixture, reference_values};
use fc2n::data::synthetic::synthetic_image;
use fc2n::data::{
    augment, bicubic_resize, bicubic_resize_to, downscale, extract_patch_pair, hflip, list_images,
    load_image, paired_lr_path, rgb_to_y, rot270, rot90, save_image, upscale, vflip, Dataset,
    Dihedral, ImageRGB, PatchSampler, Prefetcher,
};
use fc2n::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pattern_pixel(c: usize, y: usize, x: usize) -> f64 {
    let v = match c {
        0 => (x * 11 + y * 7) % 256,
        1 => (x * x + 3 * y) % 256,
        _ => (255 + 256 * 64 - (9 * x * y) % 256) % 256,
    };
    v as f64
}

fn max_diff(a: &ImageRGB, b: &ImageRGB) -> f64 {
    assert_eq!(a.dims(), b.dims());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Smooth but asymmetric test image.
fn smooth(h: usize, w: usize, seed: u64) -> ImageRGB {
    let s = seed as f64;
    ImageRGB::from_fn(h, w, |c, y, x| {
        let (yf, xf, cf) = (y as f64, x as f64, c as f64);
        128.0 + 90.0 * ((0.31 + 0.05 * s) * xf + cf).sin() * (0.23 * yf + 0.1 * s).cos() + 0.7 * xf - 0.4 * yf
    })
}

#[test]
fn ppm_and_png_fixtures_decode_to_the_pattern() {
    for name in ["pattern_23x17.ppm", "pattern_23x17.png"] {
        let img = load_image(fixture(name)).unwrap();
        assert_eq!(img.dims(), (17, 23));
        for c in 0..3 {
            for y in 0..17 {
                for x in 0..23 {
                    assert_eq!(img.at(c, y, x), pattern_pixel(c, y, x), "{name} c{c} ({y},{x})");
                }
            }
        }
    }
}

#[test]
fn grayscale_png_is_replicated_to_rgb() {
    let img = load_image(fixture("gray_23x17.png")).unwrap();
    for y in 0..17 {
        for x in 0..23 {
            let v = pattern_pixel(0, y, x);
            assert_eq!([img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)], [v, v, v]);
        }
    }
}

#[test]
fn unsupported_inputs_are_reported() {
    assert!(matches!(load_image(fixture("deep16.png")), Err(Error::UnsupportedImage(_))));
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.png");
    std::fs::write(&junk, b"not an image at all").unwrap();
    assert!(load_image(&junk).is_err());
    assert!(matches!(load_image(dir.path().join("missing.png")), Err(Error::Io { .. })));
}

#[test]
fn png_and_ppm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let img = load_image(fixture("natural_a.png")).unwrap();
    for name in ["a.png", "a.ppm"] {
        let path = dir.path().join(name);
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }
    // out-of-range values are clamped and rounded on write
    let wild = ImageRGB::from_fn(2, 3, |c, y, x| (c * 200 + y * 90 + x) as f64 - 100.4);
    let path = dir.path().join("wild.png");
    save_image(&wild, &path).unwrap();
    assert_eq!(load_image(&path).unwrap(), wild.quantize());
}

#[test]
fn luma_matches_studio_swing_formula() {
    let black = ImageRGB::from_fn(1, 1, |_, _, _| 0.0);
    let white = ImageRGB::from_fn(1, 1, |_, _, _| 255.0);
    assert_eq!(rgb_to_y(&black).data, vec![16.0]);
    assert!((rgb_to_y(&white).data[0] - 235.0).abs() < 0.01);
    let img = load_image(fixture("pattern_23x17.png")).unwrap();
    let y = rgb_to_y(&img);
    let (r, g, b) = (pattern_pixel(0, 4, 9), pattern_pixel(1, 4, 9), pattern_pixel(2, 4, 9));
    assert!((y.at(4, 9) - (16.0 + (65.738 * r + 129.057 * g + 25.064 * b) / 256.0)).abs() < 1e-12);
}

#[test]
fn bicubic_matches_pillow_in_the_interior() {
    let refs = reference_values();
    let img = load_image(fixture("natural_a.png")).unwrap();
    let down = bicubic_resize_to(&img, 24, 20, true).unwrap();
    let up = bicubic_resize_to(&img, 144, 120, true).unwrap();
    let mut checked = 0;
    for (key, want) in &refs {
        let fields: Vec<&str> = key.split(' ').collect();
        let out = match fields[0] {
            "down2" => &down,
            "up3" => &up,
            _ => continue,
        };
        let (y, x, c): (usize, usize, usize) =
            (fields[1].parse().unwrap(), fields[2].parse().unwrap(), fields[3].parse().unwrap());
        let got = out.at(c, y, x);
        assert!((got - want).abs() < 1e-3, "{key}: got {got}, Pillow {want}");
        checked += 1;
    }
    assert_eq!(checked, 24);
}

#[test]
fn downscale_and_upscale_shapes() {
    let img = smooth(30, 21, 0);
    assert_eq!(downscale(&img, 3, true).unwrap().dims(), (10, 7));
    assert_eq!(downscale(&img, 4, false).unwrap().dims(), (7, 5));
    assert_eq!(upscale(&img, 2).unwrap().dims(), (60, 42));
    assert_eq!(bicubic_resize(&img, 0.5, true).unwrap().dims(), (15, 11));
    assert_eq!(img.crop_to_multiple(4).unwrap().dims(), (28, 20));
    assert!(downscale(&img, 0, true).is_err());
    assert!(bicubic_resize(&img, -1.0, true).is_err());
    assert!(bicubic_resize_to(&img, 0, 4, true).is_err());
}

#[test]
fn resizing_by_one_is_the_identity() {
    let img = smooth(9, 13, 1);
    assert!(max_diff(&bicubic_resize_to(&img, 9, 13, true).unwrap(), &img) < 1e-12);
    assert_eq!(downscale(&img, 1, true).unwrap().dims(), img.dims());
}

#[test]
fn bicubic_reproduces_linear_ramps_away_from_borders() {
    let ramp = ImageRGB::from_fn(40, 40, |c, y, x| 3.0 * x as f64 - 2.0 * y as f64 + 10.0 * c as f64);
    for (out_len, antialias) in [(20usize, true), (20, false), (80, true)] {
        let out = bicubic_resize_to(&ramp, out_len, out_len, antialias).unwrap();
        let f = 40.0 / out_len as f64;
        let margin = (4.0 / f).ceil() as usize + 2;
        for y in margin..out_len - margin {
            for x in margin..out_len - margin {
                let (u, v) = ((x as f64 + 0.5) * f - 0.5, (y as f64 + 0.5) * f - 0.5);
                let want = 3.0 * u - 2.0 * v + 10.0;
                assert!((out.at(1, y, x) - want).abs() < 1e-9, "{out_len} {antialias} ({y},{x})");
            }
        }
    }
}

fn monotone_rows(img: &ImageRGB) -> bool {
    (0..img.height()).all(|y| (1..img.width()).all(|x| img.at(0, y, x) >= img.at(0, y, x - 1) - 1e-9))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partition_of_unity(
        h in 1usize..20, w in 1usize..20, oh in 1usize..30, ow in 1usize..30,
        value in -50.0f64..300.0, antialias in any::<bool>(),
    ) {
        let flat = ImageRGB::from_fn(h, w, |_, _, _| value);
        let out = bicubic_resize_to(&flat, oh, ow, antialias).unwrap();
        prop_assert!(out.data().iter().all(|v| (v - value).abs() < 1e-9));
    }

    #[test]
    fn resize_is_affine_equivariant(
        h in 2usize..16, w in 2usize..16, oh in 1usize..24, ow in 1usize..24,
        a in -2.0f64..2.0, b in -100.0f64..100.0, seed in 0u64..50, antialias in any::<bool>(),
    ) {
        let img = smooth(h, w, seed);
        let lhs = bicubic_resize_to(&img.map(|v| a * v + b), oh, ow, antialias).unwrap();
        let rhs = bicubic_resize_to(&img, oh, ow, antialias).unwrap().map(|v| a * v + b);
        prop_assert!(max_diff(&lhs, &rhs) < 1e-9);
        let comp = bicubic_resize_to(&img.complement(), oh, ow, antialias).unwrap();
        prop_assert!(max_diff(&comp, &bicubic_resize_to(&img, oh, ow, antialias).unwrap().complement()) < 1e-9);
    }

    #[test]
    fn resize_commutes_with_the_dihedral_group(
        h in 1usize..14, w in 1usize..14, oh in 1usize..20, ow in 1usize..20,
        seed in 0u64..50, t in 0usize..8, antialias in any::<bool>(),
    ) {
        let img = smooth(h, w, seed);
        let d = Dihedral::all()[t];
        let (th, tw) = if d.rot90 { (ow, oh) } else { (oh, ow) };
        let lhs = bicubic_resize_to(&d.apply(&img), th, tw, antialias).unwrap();
        let rhs = d.apply(&bicubic_resize_to(&img, oh, ow, antialias).unwrap());
        prop_assert!(max_diff(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn shrinking_keeps_ramps_monotone(
        h in 1usize..6, w in 2usize..60, oh in 1usize..8, shrink in 1usize..5,
        slope in 0.01f64..10.0,
    ) {
        // upscaling can ring at the clamped borders; antialiased shrinking cannot
        let ramp = ImageRGB::from_fn(h, w * shrink, |c, y, x| slope * x as f64 + (c + y) as f64);
        prop_assert!(monotone_rows(&bicubic_resize_to(&ramp, oh, w, true).unwrap()));
    }

    #[test]
    fn patches_are_aligned_and_in_bounds(
        lh in 1usize..20, lw in 1usize..20, p in 1usize..12, scale in 1usize..5, seed in 0u64..1000,
    ) {
        let hr = smooth(lh * scale, lw * scale, seed);
        let lr = downscale(&hr, scale, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match extract_patch_pair(&hr, &lr, p, scale, &mut rng) {
            Ok(pair) => {
                let (y, x) = pair.lr_origin;
                prop_assert!(y + p <= lh && x + p <= lw);
                prop_assert_eq!(pair.lr, lr.crop(y, x, p, p).unwrap());
                prop_assert_eq!(pair.hr, hr.crop(y * scale, x * scale, p * scale, p * scale).unwrap());
            }
            Err(Error::ImageTooSmall { .. }) => prop_assert!(p > lh || p > lw),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn dihedral_inverse_and_augment_consistency(
        h in 1usize..9, w in 1usize..9, seed in 0u64..100, t in 0usize..8, comp in any::<bool>(),
    ) {
        let img = smooth(h, w, seed);
        let d = Dihedral::all()[t];
        prop_assert_eq!(d.invert(&d.apply(&img)), img.clone());
        prop_assert_eq!(d.apply(&d.invert(&img)), img.clone());

        let hr = smooth(2 * h, 2 * w, seed);
        let pair = fc2n::data::PatchPair { lr: img.clone(), hr: hr.clone(), lr_origin: (0, 0) };
        let aug = augment(&pair, d.hflip, d.vflip, d.rot90, comp);
        let expect = |x: &ImageRGB| if comp { d.apply(x).complement() } else { d.apply(x) };
        prop_assert_eq!(&aug.lr, &expect(&img));
        prop_assert_eq!(&aug.hr, &expect(&hr));
        prop_assert_eq!(aug.hr.height(), 2 * aug.lr.height());
    }
}

#[test]
fn elementary_transforms() {
    let img = smooth(3, 5, 2);
    assert_eq!(rot90(&img).dims(), (5, 3));
    assert_eq!(rot90(&rot90(&rot90(&rot90(&img)))), img);
    assert_eq!(rot270(&rot90(&img)), img);
    assert_eq!(hflip(&hflip(&img)), img);
    assert_eq!(vflip(&vflip(&img)), img);
    // clockwise: the bottom-left pixel moves to the top-left
    assert_eq!(rot90(&img).at(0, 0, 0), img.at(0, 2, 0));
    assert_eq!(hflip(&img).at(1, 0, 0), img.at(1, 0, 4));
    let square = smooth(4, 4, 3);
    let images: Vec<ImageRGB> = Dihedral::all().iter().map(|d| d.apply(&square)).collect();
    for i in 0..8 {
        for j in 0..i {
            assert_ne!(images[i], images[j], "elements {i} and {j} coincide");
        }
    }
}

fn sampler_dataset() -> Arc<Dataset> {
    let images = (0..4)
        .map(|i| (format!("img{i}"), synthetic_image(40 + 4 * i as usize, 36, i)))
        .collect();
    Arc::new(Dataset::from_hr_images(images, 2).unwrap())
}

#[test]
fn batches_are_a_pure_function_of_seed_and_step() {
    let data = sampler_dataset();
    let a = PatchSampler::new(data.clone(), 8, 4, 99).unwrap();
    let b = PatchSampler::new(data.clone(), 8, 4, 99).unwrap();
    let other = PatchSampler::new(data, 8, 4, 100).unwrap();
    assert_eq!(a.batch(17).unwrap(), b.batch(17).unwrap());
    assert_ne!(a.batch(17).unwrap(), a.batch(18).unwrap());
    assert_ne!(a.batch(17).unwrap(), other.batch(17).unwrap());
    for pair in a.batch(3).unwrap() {
        assert_eq!(pair.lr.dims(), (8, 8));
        assert_eq!(pair.hr.dims(), (16, 16));
    }
}

#[test]
fn prefetcher_yields_batches_in_step_order() {
    let sampler = PatchSampler::new(sampler_dataset(), 6, 2, 5).unwrap();
    let direct: Vec<_> = (10..25).map(|s| sampler.batch(s).unwrap()).collect();
    for workers in [1, 3] {
        let fetched: Vec<_> = Prefetcher::spawn(sampler.clone(), 10, 25, workers, 2)
            .map(|b| b.unwrap())
            .collect();
        assert_eq!(fetched, direct, "{workers} workers");
    }
    // dropping early does not hang
    let mut early = Prefetcher::spawn(sampler, 0, 1000, 2, 1);
    assert!(early.next().is_some());
}

#[test]
fn sampler_skips_images_too_small_for_a_patch() {
    let images = vec![
        ("small".to_string(), synthetic_image(8, 8, 0)),
        ("large".to_string(), synthetic_image(40, 40, 1)),
    ];
    let data = Arc::new(Dataset::from_hr_images(images, 2).unwrap());
    let sampler = PatchSampler::new(data.clone(), 10, 8, 0).unwrap();
    assert!(sampler.batch(0).unwrap().iter().all(|p| p.lr.dims() == (10, 10)));
    assert!(matches!(PatchSampler::new(data, 30, 1, 0), Err(Error::EmptyDataset(_))));
}

#[test]
fn dataset_directories() {
    let hr_dir = tempfile::tempdir().unwrap();
    let lr_dir = tempfile::tempdir().unwrap();
    let a = synthetic_image(33, 30, 1);
    let b = synthetic_image(24, 27, 2);
    save_image(&b, hr_dir.path().join("b.png")).unwrap();
    save_image(&a, hr_dir.path().join("a.ppm")).unwrap();
    std::fs::write(hr_dir.path().join("notes.txt"), "ignored").unwrap();

    let files = list_images(hr_dir.path()).unwrap();
    let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
    assert_eq!(names, ["a.ppm", "b.png"]);

    let synth = Dataset::load_dir(hr_dir.path(), None, 3).unwrap();
    assert_eq!(synth.len(), 2);
    assert_eq!(synth.pairs[0].hr.dims(), (33, 30));
    assert_eq!(synth.pairs[0].lr.dims(), (11, 10));
    assert_eq!(synth.pairs[1].hr.dims(), (24, 27));
    let expect_lr = downscale(&a.quantize(), 3, true).unwrap().quantize();
    assert_eq!(synth.pairs[0].lr, expect_lr);

    // paired LR files follow the `<stem>x<scale>` convention
    let lr_a = downscale(&a.quantize(), 3, false).unwrap().quantize();
    save_image(&lr_a, lr_dir.path().join("ax3.png")).unwrap();
    assert_eq!(
        paired_lr_path(lr_dir.path(), &hr_dir.path().join("a.ppm"), 3),
        Some(lr_dir.path().join("ax3.png"))
    );
    assert!(matches!(
        Dataset::load_dir(hr_dir.path(), Some(lr_dir.path()), 3),
        Err(Error::EmptyDataset(_))
    ));
    let b_lr = downscale(&b.quantize(), 3, true).unwrap().quantize();
    save_image(&b_lr, lr_dir.path().join("bx3.png")).unwrap();
    let paired = Dataset::load_dir(hr_dir.path(), Some(lr_dir.path()), 3).unwrap();
    assert_eq!(paired.pairs[0].lr, lr_a);
    assert_eq!(paired.pairs[1].lr, b_lr);

    let empty = tempfile::tempdir().unwrap();
    assert!(matches!(Dataset::load_dir(empty.path(), None, 2), Err(Error::EmptyDataset(_))));
}

#[test]
fn synthetic_images_are_deterministic_and_varied() {
    let a = synthetic_image(48, 64, 3);
    assert_eq!(a, synthetic_image(48, 64, 3));
    assert_ne!(a, synthetic_image(48, 64, 4));
    assert!(a.data().iter().all(|v| (0.0..=255.0).contains(v)));
    let mean = a.data().iter().sum::<f64>() / a.data().len() as f64;
    let var = a.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / a.data().len() as f64;
    assert!(var > 100.0);
}
