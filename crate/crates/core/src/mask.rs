// SPDX-License-Identifier: Apache-2.0

use image::GrayImage;

use crate::error::{Error, Result};

/// Binary raster, row-major, `true` = animal pixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

/// Inclusive pixel bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelBox {
    pub min_x: u32,
    pub min_y: u32,
    pub max_x: u32,
    pub max_y: u32,
}

impl PixelBox {
    pub fn width(&self) -> u32 {
        self.max_x - self.min_x + 1
    }

    pub fn height(&self) -> u32 {
        self.max_y - self.min_y + 1
    }

    pub fn union(&self, other: &PixelBox) -> PixelBox {
        PixelBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Mask { width, height, bits: vec![false; width as usize * height as usize] })
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        let mut m = Mask::new(width, height)?;
        if bits.len() != m.bits.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} bits for a {width}x{height} mask, got {}",
                m.bits.len(),
                bits.len()
            )));
        }
        m.bits = bits;
        Ok(m)
    }

    /// Builds a mask from the pixels of `img` whose value satisfies `pred`.
    pub fn from_gray(img: &GrayImage, pred: impl Fn(u8) -> bool) -> Result<Self> {
        let bits = img.as_raw().iter().map(|&v| pred(v)).collect();
        Mask::from_bits(img.width(), img.height(), bits)
    }

    /// 0 = background, 255 = animal.
    pub fn to_gray(&self) -> GrayImage {
        let raw = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::from_raw(self.width, self.height, raw).expect("buffer sized from mask")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        x < self.width && y < self.height && self.bits[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) outside mask");
        self.bits[(y * self.width + x) as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn ensure_same_dims(&self, other: &Mask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), found: other.dims() });
        }
        Ok(())
    }

    pub fn intersection_count(&self, other: &Mask) -> Result<usize> {
        self.ensure_same_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a && b).count())
    }

    pub fn iou(&self, other: &Mask) -> Result<f64> {
        let inter = self.intersection_count(other)?;
        let union = self.count() + other.count() - inter;
        Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i as u32 % w, i as u32 / w))
    }

    pub fn bounding_box(&self) -> Option<PixelBox> {
        self.iter_set().fold(None, |acc, (x, y)| {
            let px = PixelBox { min_x: x, min_y: y, max_x: x, max_y: y };
            Some(match acc {
                None => px,
                Some(b) => b.union(&px),
            })
        })
    }

    /// Pixel-centre centroid of the set pixels.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for (x, y) in self.iter_set() {
            sx += x as f64 + 0.5;
            sy += y as f64 + 0.5;
            n += 1;
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }

    /// Set pixels with at least one unset 4-neighbour; pixels beyond the
    /// raster count as unset.
    pub fn is_contour(&self, x: u32, y: u32) -> bool {
        if !self.get(x, y) {
            return false;
        }
        x == 0
            || y == 0
            || !self.get(x - 1, y)
            || !self.get(x + 1, y)
            || !self.get(x, y - 1)
            || !self.get(x, y + 1)
    }

    pub fn contour(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.iter_set().filter(|&(x, y)| self.is_contour(x, y))
    }

    /// Copies the `width`×`height` window whose top-left corner sits at
    /// (`x0`, `y0`); pixels outside the source read as unset.
    pub fn crop(&self, x0: i64, y0: i64, width: u32, height: u32) -> Result<Mask> {
        let mut out = Mask::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                let sx = x0 + x as i64;
                let sy = y0 + y as i64;
                if sx >= 0 && sy >= 0 && self.get(sx as u32, sy as u32) {
                    out.set(x, y, true);
                }
            }
        }
        Ok(out)
    }
}
