use super::stitch::{reach_offsets, StitchSample, OWNER_A, OWNER_B};

/// Bumped whenever the meaning or order of features changes; stored in
/// model files.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;

pub const FEATURE_NAMES: [&str; 14] = [
    "cross_color_mean",
    "cross_color_median",
    "cross_color_p90",
    "within_color_mean",
    "cross_color_excess",
    "gradient_break_mean",
    "gap_fraction",
    "overlap_fraction",
    "seam_length_rel",
    "opposed_normals_rel",
    "opposed_normals_frac",
    "mean_normal_dot",
    "contact_rel",
    "cross_color_ratio",
];

pub const NUM_FEATURES: usize = FEATURE_NAMES.len();

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Fixed-length description of the stitching region, computed from the ROI
/// only (plus the contour contact statistics carried by the sample).
///
/// Colour quantities are divided by 255 and lengths are relative to the
/// shorter fragment perimeter, so the vector is independent of canvas scale.
pub fn extract_roi_features(s: &StitchSample) -> Vec<f64> {
    let offs = reach_offsets();
    let [rx, ry, rw, rh] = s.roi;
    let (x0, y0) = (rx as i64, ry as i64);
    let (x1, y1) = (x0 + rw as i64, y0 + rh as i64);

    let mut cross = Vec::new();
    let mut within = Vec::new();
    let mut breaks = Vec::new();
    let (mut band, mut adjacent_a, mut gap, mut both) = (0usize, 0usize, 0usize, 0usize);
    for y in y0..y1 {
        for x in x0..x1 {
            let o = s.owner_at(x, y);
            if o == OWNER_A | OWNER_B {
                both += 1;
                continue;
            }
            if o == 0 {
                let mut seen = 0u8;
                for &(dx, dy) in &offs {
                    seen |= s.owner_at(x + dx, y + dy);
                }
                if seen == OWNER_A | OWNER_B {
                    gap += 1;
                }
                continue;
            }
            let other = o ^ (OWNER_A | OWNER_B);
            let Some(&(dx, dy)) = offs
                .iter()
                .find(|&&(dx, dy)| s.owner_at(x + dx, y + dy) == other)
            else {
                continue;
            };
            band += 1;
            if o == OWNER_A && dx * dx + dy * dy <= 2 {
                adjacent_a += 1;
            }
            let here = s.color_of(x, y, o);
            let there = s.color_of(x + dx, y + dy, other);
            let step = sub(there, here);
            cross.push(norm(step));
            // The pixel the same offset further inside this fragment.
            let (ix, iy) = (x - dx, y - dy);
            if s.owner_at(ix, iy) == o {
                let inner = s.color_of(ix, iy, o);
                let inside = sub(here, inner);
                within.push(norm(inside));
                breaks.push(norm(sub(step, inside)));
            }
        }
    }

    let contact = &s.contact;
    let min_perim = contact.perimeter_a.min(contact.perimeter_b).max(1.0);
    let band_f = band.max(1) as f64;
    let mut sorted = cross.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let cross_mean = mean(&cross);
    let within_mean = mean(&within);
    vec![
        cross_mean / 255.0,
        percentile(&sorted, 0.5) / 255.0,
        percentile(&sorted, 0.9) / 255.0,
        within_mean / 255.0,
        (cross_mean - within_mean) / 255.0,
        mean(&breaks) / 255.0,
        gap as f64 / band_f,
        both as f64 / band_f,
        (adjacent_a as f64 / s.scale) / min_perim,
        contact.opposed as f64 / min_perim,
        contact.opposed as f64 / contact.near.max(1) as f64,
        contact.mean_normal_dot,
        contact.near as f64 / min_perim,
        cross_mean / (within_mean + 2.0),
    ]
}
