use crate::error::{Error, Result};
use crate::imaging::ScalarField;

/// Dense 8-bit RGB image, row-major, interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::BufferLength {
                width,
                height,
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(n * 3);
        for _ in 0..n {
            pixels.extend_from_slice(&rgb);
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    fn offset(&self, row: u32, col: u32) -> usize {
        debug_assert!(row < self.height && col < self.width);
        (row as usize * self.width as usize + col as usize) * 3
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> [u8; 3] {
        let o = self.offset(row, col);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, rgb: [u8; 3]) {
        let o = self.offset(row, col);
        self.pixels[o..o + 3].copy_from_slice(&rgb);
    }

    /// Luma conversion with the usual broadcast weights 0.299/0.587/0.114.
    pub fn to_gray(&self) -> ScalarField {
        let mut values = Vec::with_capacity(self.width as usize * self.height as usize);
        for px in self.pixels.chunks_exact(3) {
            values.push(0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64);
        }
        ScalarField::from_values(self.width, self.height, values)
            .expect("frame dimensions are valid")
    }

    /// Bilinear resize. Output dimensions must be nonzero.
    pub fn resize(&self, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for r in 0..height {
            let src_y = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, self.height as f64 - 1.0);
            for c in 0..width {
                let src_x = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, self.width as f64 - 1.0);
                pixels.extend_from_slice(&self.sample_bilinear(src_y, src_x));
            }
        }
        Frame::new(width, height, pixels)
    }

    /// Bilinear sample at fractional (row, col); coordinates must already be
    /// inside [0, h-1] x [0, w-1].
    pub fn sample_bilinear(&self, row: f64, col: f64) -> [u8; 3] {
        let r0 = row.floor() as u32;
        let c0 = col.floor() as u32;
        let r1 = (r0 + 1).min(self.height - 1);
        let c1 = (c0 + 1).min(self.width - 1);
        let fr = row - r0 as f64;
        let fc = col - c0 as f64;
        let p00 = self.get(r0, c0);
        let p01 = self.get(r0, c1);
        let p10 = self.get(r1, c0);
        let p11 = self.get(r1, c1);
        let mut out = [0u8; 3];
        for ch in 0..3 {
            let top = p00[ch] as f64 * (1.0 - fc) + p01[ch] as f64 * fc;
            let bot = p10[ch] as f64 * (1.0 - fc) + p11[ch] as f64 * fc;
            out[ch] = (top * (1.0 - fr) + bot * fr).round().clamp(0.0, 255.0) as u8;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_dimensions() {
        assert!(Frame::new(0, 4, vec![]).is_err());
        assert!(Frame::filled(3, 0, [0, 0, 0]).is_err());
    }

    #[test]
    fn rejects_bad_buffer_length() {
        assert!(Frame::new(2, 2, vec![0; 11]).is_err());
        assert!(Frame::new(2, 2, vec![0; 12]).is_ok());
    }

    #[test]
    fn get_set_round_trip() {
        let mut f = Frame::filled(3, 2, [1, 2, 3]).unwrap();
        f.set(1, 2, [9, 8, 7]);
        assert_eq!(f.get(1, 2), [9, 8, 7]);
        assert_eq!(f.get(0, 0), [1, 2, 3]);
    }

    #[test]
    fn gray_uses_luma_weights() {
        let f = Frame::filled(1, 1, [255, 0, 0]).unwrap();
        assert!((f.to_gray().get(0, 0) - 0.299 * 255.0).abs() < 1e-12);
        let f = Frame::filled(1, 1, [0, 255, 0]).unwrap();
        assert!((f.to_gray().get(0, 0) - 0.587 * 255.0).abs() < 1e-12);
        let f = Frame::filled(1, 1, [10, 10, 10]).unwrap();
        assert!((f.to_gray().get(0, 0) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn resize_preserves_constant_image() {
        let f = Frame::filled(8, 6, [40, 90, 200]).unwrap();
        let g = f.resize(5, 3).unwrap();
        assert_eq!(g.width(), 5);
        assert_eq!(g.height(), 3);
        assert!(g.pixels().chunks_exact(3).all(|p| p == [40, 90, 200]));
    }
}
