use crate::error::{Error, Result};
use crate::imaging::BinaryMask;

/// Dense f64 raster, row-major. Used for gray images, flow magnitudes and
/// posterior maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        Ok(Self {
            width,
            height,
            values: vec![0.0; width as usize * height as usize],
        })
    }

    pub fn from_values(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(Error::BufferLength {
                width,
                height,
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> f64 {
        debug_assert!(row < self.height && col < self.width);
        self.values[row as usize * self.width as usize + col as usize]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, value: f64) {
        debug_assert!(row < self.height && col < self.width);
        self.values[row as usize * self.width as usize + col as usize] = value;
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Mask of pixels whose value strictly exceeds `threshold`.
pub fn threshold_above(values: &ScalarField, threshold: f64) -> BinaryMask {
    let bits = values.values().iter().map(|&v| v > threshold).collect();
    BinaryMask::from_bits(values.width(), values.height(), bits)
        .expect("scalar field dimensions are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_strict() {
        let f = ScalarField::from_values(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let m = threshold_above(&f, 2.0);
        assert!(!m.get(0, 0));
        assert!(!m.get(0, 1));
        assert!(m.get(0, 2));
    }

    #[test]
    fn max_over_values() {
        let f = ScalarField::from_values(2, 2, vec![-5.0, 3.5, 0.0, 2.0]).unwrap();
        assert_eq!(f.max(), 3.5);
    }
}
