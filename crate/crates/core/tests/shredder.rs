use std::fs;

use image::{Rgba, RgbaImage};
use reassembly::shredder::{
    read_bundle, shred, shred_to_count, synthesize_image, write_bundle, PuzzleBundle, ShredParams,
    MANIFEST_FILE,
};
use reassembly::Error;

fn straight(num_cuts: usize) -> ShredParams {
    ShredParams {
        num_cuts,
        orientation_jitter: 0.0,
        perturbation_amplitude: 0.0,
    }
}

/// Counts 4-connected regions of the groundtruth label map with a
/// union-find, independently of the shredder's own flood fill.
fn arrangement_cells(bundle: &PuzzleBundle) -> usize {
    let (w, h) = bundle.source_size;
    let (w, h) = (w as usize, h as usize);
    let mut label = vec![usize::MAX; w * h];
    for f in &bundle.fragments {
        let pose = bundle.groundtruth_poses[&f.id];
        for (x, y, p) in f.raster.enumerate_pixels() {
            if p[3] > 0 {
                let sx = x as usize + pose.tx as usize;
                let sy = y as usize + pose.ty as usize;
                label[sy * w + sx] = f.id;
            }
        }
    }
    let mut parent: Vec<usize> = (0..w * h).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            for j in [(x + 1 < w).then(|| i + 1), (y + 1 < h).then(|| i + w)].into_iter().flatten() {
                if label[i] == label[j] {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
    }
    (0..w * h).filter(|&i| find(&mut parent, i) == i).count()
}

#[test]
fn two_straight_cuts_give_three_or_four_pieces() {
    let img = synthesize_image(600, 600, 3);
    for seed in 0..5 {
        let b = shred(&img, &straight(2), seed).unwrap();
        assert!((3..=4).contains(&b.len()), "got {} pieces", b.len());
        assert_eq!(b.len(), arrangement_cells(&b));
    }
}

#[test]
fn four_cuts_give_nine_pieces() {
    let img = synthesize_image(300, 300, 9);
    let b = shred(&img, &ShredParams::default(), 17).unwrap();
    assert_eq!(b.len(), 9);
    let b2 = shred_to_count(&img, 9, 0.12, 8.0, 17).unwrap();
    assert_eq!(b2.len(), 9);
}

#[test]
fn fragments_partition_the_source() {
    let img = synthesize_image(300, 240, 4);
    let b = shred(&img, &ShredParams::default(), 2).unwrap();
    let total: usize = b.fragments.iter().map(|f| f.area).sum();
    assert_eq!(total, 300 * 240);

    // Re-assemble at groundtruth: every pixel covered exactly once, with the
    // source colour.
    let mut cover = vec![0u8; 300 * 240];
    for f in &b.fragments {
        let pose = b.groundtruth_poses[&f.id];
        for (x, y, p) in f.raster.enumerate_pixels() {
            if p[3] == 0 {
                continue;
            }
            let sx = (x as f64 + pose.tx) as u32;
            let sy = (y as f64 + pose.ty) as u32;
            cover[(sy * 300 + sx) as usize] += 1;
            assert_eq!(p, img.get_pixel(sx, sy));
        }
    }
    assert!(cover.iter().all(|&c| c == 1));
}

#[test]
fn transparent_source_pixels_are_excluded() {
    let mut img = synthesize_image(200, 200, 1);
    for y in 0..200 {
        for x in 0..20 {
            img.put_pixel(x, y, Rgba([0, 0, 0, 0]));
        }
    }
    let b = shred(&img, &straight(2), 0).unwrap();
    let total: usize = b.fragments.iter().map(|f| f.area).sum();
    assert_eq!(total, 180 * 200);
}

#[test]
fn deterministic_for_fixed_seed() {
    let img = synthesize_image(240, 240, 6);
    let dir = tempfile::tempdir().unwrap();
    let a = shred(&img, &ShredParams::default(), 99).unwrap();
    let b = shred(&img, &ShredParams::default(), 99).unwrap();
    write_bundle(&a, &dir.path().join("a")).unwrap();
    write_bundle(&b, &dir.path().join("b")).unwrap();
    for entry in fs::read_dir(dir.path().join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        let x = fs::read(dir.path().join("a").join(&name)).unwrap();
        let y = fs::read(dir.path().join("b").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
    let c = shred(&img, &ShredParams::default(), 100).unwrap();
    let differs = a
        .fragments
        .iter()
        .zip(&c.fragments)
        .any(|(p, q)| p.raster != q.raster)
        || a.len() != c.len();
    assert!(differs);
}

#[test]
fn too_many_cuts_is_a_parameter_error() {
    let img = synthesize_image(60, 60, 0);
    let r = shred(&img, &ShredParams { num_cuts: 12, ..Default::default() }, 0);
    assert!(matches!(r, Err(Error::Parameter(_))));
}

fn assert_same(a: &PuzzleBundle, b: &PuzzleBundle) {
    assert_eq!(a.len(), b.len());
    assert_eq!(a.source_size, b.source_size);
    assert_eq!(a.seed, b.seed);
    assert_eq!(a.params, b.params);
    for (x, y) in a.fragments.iter().zip(&b.fragments) {
        assert_eq!(x.id, y.id);
        assert_eq!(x.raster, y.raster);
        assert_eq!(x.contour, y.contour);
    }
    for (id, p) in &a.groundtruth_poses {
        let q = b.groundtruth_poses[id];
        assert!((p.theta - q.theta).abs() < 1e-12);
        assert_eq!((p.tx, p.ty), (q.tx, q.ty));
    }
}

#[test]
fn bundle_round_trip_with_unicode_path() {
    let img = synthesize_image(200, 160, 8);
    let b = shred(&img, &ShredParams::default(), 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for name in ["plain", "пазл-фрагменты", "拼图 ü ✂"] {
        let path = dir.path().join(name);
        write_bundle(&b, &path).unwrap();
        let back = read_bundle(&path).unwrap();
        assert_same(&b, &back);
    }
}

#[test]
fn corrupted_bundles_are_format_errors() {
    let img = synthesize_image(300, 300, 2);
    let b = shred(&img, &ShredParams::default(), 1).unwrap();
    assert_eq!(b.len(), 9);
    let dir = tempfile::tempdir().unwrap();

    let missing = dir.path().join("missing");
    write_bundle(&b, &missing).unwrap();
    fs::remove_file(missing.join("fragment_8.png")).unwrap();
    assert!(matches!(read_bundle(&missing), Err(Error::Format { .. })));

    let tampered = dir.path().join("tampered");
    write_bundle(&b, &tampered).unwrap();
    let other = RgbaImage::from_pixel(4, 4, Rgba([1, 2, 3, 255]));
    other.save(tampered.join("fragment_3.png")).unwrap();
    assert!(matches!(read_bundle(&tampered), Err(Error::Format { .. })));

    let collide = dir.path().join("collide");
    write_bundle(&b, &collide).unwrap();
    let text = fs::read_to_string(collide.join(MANIFEST_FILE)).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
    json["fragments"][1]["id"] = serde_json::json!(0);
    fs::write(collide.join(MANIFEST_FILE), json.to_string()).unwrap();
    assert!(matches!(read_bundle(&collide), Err(Error::Format { .. })));

    let no_manifest = dir.path().join("empty");
    fs::create_dir_all(&no_manifest).unwrap();
    assert!(matches!(read_bundle(&no_manifest), Err(Error::Format { .. })));
}

#[test]
fn groundtruth_adjacency_of_grid() {
    let img = synthesize_image(300, 300, 5);
    let b = shred(&img, &ShredParams::default(), 3).unwrap();
    let adj = b.groundtruth_adjacency();
    let long: Vec<_> = adj.iter().filter(|(_, &len)| len >= 10).collect();
    // A 3x3 arrangement has 12 edge-sharing neighbour pairs.
    assert_eq!(long.len(), 12, "{adj:?}");
}
