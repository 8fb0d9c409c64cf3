use crate::error::{Error, Result};

/// Binary raster. One bool per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    /// All-clear mask.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        Ok(Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        })
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        let expected = width as usize * height as usize;
        if bits.len() != expected {
            return Err(Error::BufferLength {
                width,
                height,
                expected,
                got: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> bool {
        debug_assert!(row < self.height && col < self.width);
        self.bits[row as usize * self.width as usize + col as usize]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, value: bool) {
        debug_assert!(row < self.height && col < self.width);
        self.bits[row as usize * self.width as usize + col as usize] = value;
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Set pixels in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i as u32) / w, (i as u32) % w))
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a | b)
            .collect();
        Self::from_bits(self.width, self.height, bits)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a & b)
            .collect();
        Self::from_bits(self.width, self.height, bits)
    }

    /// Pixels in `self` and not in `other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a & !b)
            .collect();
        Self::from_bits(self.width, self.height, bits)
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Self) -> Result<bool> {
        self.check_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a | b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_of(width: u32, height: u32, set: &[(u32, u32)]) -> BinaryMask {
        let mut m = BinaryMask::new(width, height).unwrap();
        for &(r, c) in set {
            m.set(r, c, true);
        }
        m
    }

    #[test]
    fn set_operations_follow_boolean_algebra() {
        let a = mask_of(4, 3, &[(0, 0), (1, 1), (2, 3)]);
        let b = mask_of(4, 3, &[(1, 1), (2, 2)]);
        let u = a.union(&b).unwrap();
        let i = a.intersection(&b).unwrap();
        let d = a.difference(&b).unwrap();
        assert_eq!(u.area(), 4);
        assert_eq!(i.area(), 1);
        assert!(i.get(1, 1));
        assert_eq!(d.area(), 2);
        assert!(!d.get(1, 1));
        assert!(i.is_subset_of(&a).unwrap());
        assert!(i.is_subset_of(&b).unwrap());
        assert!(a.is_subset_of(&u).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = BinaryMask::new(4, 3).unwrap();
        let b = BinaryMask::new(3, 4).unwrap();
        assert!(a.union(&b).is_err());
    }

    #[test]
    fn iter_set_is_row_major() {
        let m = mask_of(3, 3, &[(2, 0), (0, 1), (1, 2)]);
        let order: Vec<_> = m.iter_set().collect();
        assert_eq!(order, vec![(0, 1), (1, 2), (2, 0)]);
    }
}
