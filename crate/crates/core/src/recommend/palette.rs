use image::imageops::FilterType;
use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PALETTE_SIZE: usize = 5;

const MAX_SIDE: u32 = 256;
const SEED: u64 = 0x5eed_c0de;
const ITERATIONS: usize = 24;

pub type Rgb = [u8; 3];

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn nearest(p: &[f64; 3], centers: &[[f64; 3]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Five representative colors: k-means (k-means++ seeding with a fixed seed,
/// fixed iteration count) over a nearest-neighbour downsample no larger than
/// 256x256. Nearest-neighbour sampling never invents colors that are not in
/// the source. Colors are ordered by cluster size, then by value.
pub fn extract_palette(image: &RgbImage) -> [Rgb; PALETTE_SIZE] {
    let (w, h) = image.dimensions();
    assert!(w > 0 && h > 0, "empty image");
    let small;
    let img = if w > MAX_SIDE || h > MAX_SIDE {
        let scale = MAX_SIDE as f64 / w.max(h) as f64;
        let nw = ((w as f64 * scale).round() as u32).max(1);
        let nh = ((h as f64 * scale).round() as u32).max(1);
        small = image::imageops::resize(image, nw, nh, FilterType::Nearest);
        &small
    } else {
        image
    };
    let points: Vec<[f64; 3]> = img.pixels().map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut centers = vec![points[rng.gen_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < PALETTE_SIZE {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // fewer distinct colors than clusters
            centers[centers.len() - 1]
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            points[pick]
        };
        for (d, p) in d2.iter_mut().zip(&points) {
            *d = d.min(dist2(p, &next));
        }
        centers.push(next);
    }

    let mut sizes = vec![0usize; PALETTE_SIZE];
    for _ in 0..ITERATIONS {
        let mut sums = [[0.0f64; 3]; PALETTE_SIZE];
        sizes.iter_mut().for_each(|s| *s = 0);
        for p in &points {
            let c = nearest(p, &centers);
            sizes[c] += 1;
            for k in 0..3 {
                sums[c][k] += p[k];
            }
        }
        for c in 0..PALETTE_SIZE {
            if sizes[c] > 0 {
                centers[c] = sums[c].map(|s| s / sizes[c] as f64);
            }
        }
    }

    let mut out: Vec<(usize, Rgb)> =
        centers.iter().zip(&sizes).map(|(c, &n)| (n, c.map(|v| v.round().clamp(0.0, 255.0) as u8))).collect();
    out.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut palette = [[0u8; 3]; PALETTE_SIZE];
    for (slot, (_, rgb)) in palette.iter_mut().zip(out) {
        *slot = rgb;
    }
    palette
}
