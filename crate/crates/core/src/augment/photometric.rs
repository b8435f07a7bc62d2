// SPDX-License-Identifier: Apache-2.0

use image::{Rgb, RgbImage};
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::round_half_up;

pub const GRAYSCALE_PROB: f64 = 0.10;
/// Largest blur, in pixels of kernel reach.
pub const MAX_BLUR_PX: f64 = 6.5;
/// Kernel reach is taken as 2σ, so σ never exceeds half the pixel bound.
pub const MAX_BLUR_SIGMA: f64 = MAX_BLUR_PX / 2.0;
pub const MAX_NOISE_FRACTION: f64 = 0.04;

/// ITU-R 601 luma, rounded half up, written to all three channels.
pub fn grayscale(img: &RgbImage) -> RgbImage {
    let mut out = img.clone();
    for p in out.pixels_mut() {
        let [r, g, b] = p.0.map(u32::from);
        let y = ((299 * r + 587 * g + 114 * b + 500) / 1000) as u8;
        *p = Rgb([y, y, y]);
    }
    out
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> =
        (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Half-sample symmetric reflection (`c b a | a b c`), repeated as needed
/// for kernels wider than the image.
fn reflect(mut i: i64, n: i64) -> usize {
    let period = 2 * n;
    i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// Separable Gaussian blur with kernel radius `ceil(3σ)` and reflected
/// borders. `sigma == 0` returns the input unchanged.
pub fn gaussian_blur(img: &RgbImage, sigma: f64) -> Result<RgbImage> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("blur sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    let src = img.as_raw();

    let mut horiz = vec![0.0f64; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (k, wgt) in kernel.iter().enumerate() {
                let sx = reflect(x + k as i64 - radius, w);
                let base = (y as usize * w as usize + sx) * 3;
                for c in 0..3 {
                    acc[c] += wgt * src[base + c] as f64;
                }
            }
            let base = (y * w + x) as usize * 3;
            horiz[base..base + 3].copy_from_slice(&acc);
        }
    }

    let mut out = RgbImage::new(img.width(), img.height());
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (k, wgt) in kernel.iter().enumerate() {
                let sy = reflect(y + k as i64 - radius, h);
                let base = (sy * w as usize + x as usize) * 3;
                for c in 0..3 {
                    acc[c] += wgt * horiz[base + c];
                }
            }
            out.put_pixel(x as u32, y as u32, Rgb(acc.map(|v| round_half_up(v).clamp(0.0, 255.0) as u8)));
        }
    }
    Ok(out)
}

/// Replaces exactly `round(fraction · W · H)` distinct pixels with random
/// colours, each different from the pixel it replaces.
pub fn pixel_noise(img: &RgbImage, fraction: f64, rng: &mut impl Rng) -> Result<RgbImage> {
    noise_bounded(img, fraction, MAX_NOISE_FRACTION, rng)
}

pub(crate) fn noise_bounded(img: &RgbImage, fraction: f64, max: f64, rng: &mut impl Rng) -> Result<RgbImage> {
    if !(0.0..=max).contains(&fraction) {
        return Err(Error::BoundExceeded { what: "noise fraction", value: fraction, max });
    }
    let total = img.width() as usize * img.height() as usize;
    let count = (round_half_up(fraction * total as f64) as usize).min(total);
    let mut out = img.clone();
    let w = img.width() as usize;
    let mut picked = index::sample(rng, total, count).into_vec();
    // index::sample's order depends on the algorithm it picks; fix it
    picked.sort_unstable();
    for i in picked {
        let (x, y) = ((i % w) as u32, (i / w) as u32);
        let old = *img.get_pixel(x, y);
        let new = loop {
            let c = Rgb([rng.gen::<u8>(), rng.gen::<u8>(), rng.gen::<u8>()]);
            if c != old {
                break c;
            }
        };
        out.put_pixel(x, y, new);
    }
    Ok(out)
}
