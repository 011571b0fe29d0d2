//! Density scatter for 2-D targets: sample counts on a log grey ramp over
//! one chain's trajectory in light blue, mode means as red crosses.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::mog::GaussianMixture;

const SIZE: u32 = 512;
const MARGIN: f64 = 0.08;

struct Frame {
    lo: [f64; 2],
    scale: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let pad = span * MARGIN;
        Self {
            lo: [lo[0] - pad, lo[1] - pad],
            scale: (SIZE - 1) as f64 / (span + 2.0 * pad),
        }
    }

    fn pixel(&self, p: [f64; 2]) -> Option<(i64, i64)> {
        let px = ((p[0] - self.lo[0]) * self.scale).round();
        let py = (SIZE - 1) as f64 - ((p[1] - self.lo[1]) * self.scale).round();
        let in_range = |v: f64| (0.0..SIZE as f64).contains(&v);
        (in_range(px) && in_range(py)).then_some((px as i64, py as i64))
    }
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < SIZE && (y as u32) < SIZE {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn line(img: &mut RgbImage, a: (i64, i64), b: (i64, i64), c: Rgb<u8>) {
    let (dx, dy) = ((b.0 - a.0).abs(), -(b.1 - a.1).abs());
    let (sx, sy) = ((b.0 - a.0).signum(), (b.1 - a.1).signum());
    let (mut x, mut y, mut err) = (a.0, a.1, dx + dy);
    loop {
        put(img, x, y, c);
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Renders `samples` (all chains) with the first `trajectory` points of one
/// chain overlaid.
pub fn scatter_png(
    path: &Path,
    mix: &GaussianMixture,
    samples: &[&[f64]],
    trajectory: &[&[f64]],
) -> Result<()> {
    if mix.dim() != 2 {
        return Err(Error::InvalidInput("scatter rendering needs a 2-D target".into()));
    }
    let as2 = |p: &[f64]| [p[0], p[1]];
    let frame = Frame::fit(mix.means().map(as2).chain(samples.iter().map(|p| as2(p))));

    let mut counts = vec![0u32; (SIZE * SIZE) as usize];
    for p in samples {
        if let Some((x, y)) = frame.pixel(as2(p)) {
            counts[(y as u32 * SIZE + x as u32) as usize] += 1;
        }
    }
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut img = RgbImage::from_pixel(SIZE, SIZE, Rgb([255, 255, 255]));
    let blue = Rgb([150, 185, 240]);
    let mut prev = None;
    for p in trajectory {
        let cur = frame.pixel(as2(p));
        if let (Some(a), Some(b)) = (prev, cur) {
            line(&mut img, a, b, blue);
        }
        prev = cur;
    }
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            let t = (1.0 + c as f64).ln() / (1.0 + peak).ln();
            let v = (200.0 * (1.0 - t)) as u8;
            let (x, y) = ((i as u32 % SIZE) as i64, (i as u32 / SIZE) as i64);
            for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
                put(&mut img, x + dx, y + dy, Rgb([v, v, v]));
            }
        }
    }
    let red = Rgb([220, 30, 30]);
    for m in mix.means() {
        if let Some((x, y)) = frame.pixel(as2(m)) {
            for d in -4..=4 {
                put(&mut img, x + d, y + d, red);
                put(&mut img, x + d, y - d, red);
            }
        }
    }
    let mut bytes = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png)?;
    super::output::write_atomic(path, &bytes)
}
