//! Procedural source images for synthetic puzzles.

use image::{Rgba, RgbaImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amp: f64,
}

struct Blob {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    rot: f64,
    color: [f64; 3],
    softness: f64,
}

/// Smooth multi-scale colour field with a handful of soft-edged ellipses.
///
/// Each seed gives a different palette so pieces from different images
/// rarely share local context.
pub fn synthesize_image(width: u32, height: u32, seed: u64) -> RgbaImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a6e);
    let scale = width.max(height) as f64;

    let waves: Vec<Vec<Wave>> = (0..3)
        .map(|_| {
            (0..4)
                .map(|_| {
                    let wavelength = rng.gen_range(0.25..1.2) * scale;
                    let dir: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let k = std::f64::consts::TAU / wavelength;
                    Wave {
                        kx: k * dir.cos(),
                        ky: k * dir.sin(),
                        phase: rng.gen_range(0.0..std::f64::consts::TAU),
                        amp: rng.gen_range(0.4..1.0),
                    }
                })
                .collect()
        })
        .collect();
    let base: [f64; 3] = [
        rng.gen_range(60.0..190.0),
        rng.gen_range(60.0..190.0),
        rng.gen_range(60.0..190.0),
    ];
    let spread: [f64; 3] = [
        rng.gen_range(30.0..60.0),
        rng.gen_range(30.0..60.0),
        rng.gen_range(30.0..60.0),
    ];

    let blobs: Vec<Blob> = (0..rng.gen_range(5..10))
        .map(|_| Blob {
            cx: rng.gen_range(0.0..width as f64),
            cy: rng.gen_range(0.0..height as f64),
            rx: rng.gen_range(0.05..0.25) * scale,
            ry: rng.gen_range(0.05..0.25) * scale,
            rot: rng.gen_range(0.0..std::f64::consts::PI),
            color: [
                rng.gen_range(10.0..245.0),
                rng.gen_range(10.0..245.0),
                rng.gen_range(10.0..245.0),
            ],
            softness: rng.gen_range(0.1..0.5),
        })
        .collect();

    RgbaImage::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let mut c = [0.0; 3];
        for ch in 0..3 {
            let s: f64 = waves[ch]
                .iter()
                .map(|w| w.amp * (w.kx * px + w.ky * py + w.phase).sin())
                .sum();
            c[ch] = base[ch] + spread[ch] * s / 2.0;
        }
        for b in &blobs {
            let (sn, cs) = b.rot.sin_cos();
            let dx = px - b.cx;
            let dy = py - b.cy;
            let u = (cs * dx + sn * dy) / b.rx;
            let v = (-sn * dx + cs * dy) / b.ry;
            let r = (u * u + v * v).sqrt();
            // 1 inside, 0 outside, linear ramp of width `softness`.
            let a = ((1.0 + b.softness - r) / b.softness).clamp(0.0, 1.0) * 0.85;
            for (v, target) in c.iter_mut().zip(b.color) {
                *v = *v * (1.0 - a) + target * a;
            }
        }
        Rgba([
            c[0].round().clamp(0.0, 255.0) as u8,
            c[1].round().clamp(0.0, 255.0) as u8,
            c[2].round().clamp(0.0, 255.0) as u8,
            255,
        ])
    })
}

/// Adds uniform per-channel noise of amplitude `sigma` to every opaque
/// pixel, as a stand-in for scanning noise.
pub fn add_pixel_noise(image: &mut RgbaImage, sigma: f64, seed: u64) {
    if sigma <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0015_e5ca_77e2);
    for Rgba(px) in image.pixels_mut() {
        if px[3] == 0 {
            continue;
        }
        for c in px.iter_mut().take(3) {
            let v = *c as f64 + sigma * rng.gen_range(-1.0..=1.0);
            *c = v.round().clamp(0.0, 255.0) as u8;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = synthesize_image(64, 48, 1);
        let b = synthesize_image(64, 48, 1);
        let c = synthesize_image(64, 48, 2);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.pixels().all(|p| p[3] == 255));
    }
}
