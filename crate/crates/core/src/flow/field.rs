use crate::error::{Error, Result};
use crate::imaging::ScalarField;

/// Dense 2D flow, row-major with interleaved (u, v) components in f32.
/// u is horizontal (columns), v vertical (rows). Storage stays f32 so file
/// round trips are bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl FlowField {
    pub fn zeros(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        Ok(Self {
            width,
            height,
            data: vec![0.0; width as usize * height as usize * 2],
        })
    }

    pub fn from_data(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyRaster);
        }
        let expected = width as usize * height as usize * 2;
        if data.len() != expected {
            return Err(Error::BufferLength {
                width,
                height,
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> (f32, f32) {
        debug_assert!(row < self.height && col < self.width);
        let o = (row as usize * self.width as usize + col as usize) * 2;
        (self.data[o], self.data[o + 1])
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, u: f32, v: f32) {
        debug_assert!(row < self.height && col < self.width);
        let o = (row as usize * self.width as usize + col as usize) * 2;
        self.data[o] = u;
        self.data[o + 1] = v;
    }

    /// Per-pixel Euclidean magnitude, computed in f64.
    pub fn magnitude(&self) -> ScalarField {
        let values = self
            .data
            .chunks_exact(2)
            .map(|uv| {
                let u = uv[0] as f64;
                let v = uv[1] as f64;
                (u * u + v * v).sqrt()
            })
            .collect();
        ScalarField::from_values(self.width, self.height, values)
            .expect("flow dimensions are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnitude_of_3_4_is_5() {
        let mut f = FlowField::zeros(2, 1).unwrap();
        f.set(0, 1, 3.0, -4.0);
        let m = f.magnitude();
        assert_eq!(m.get(0, 0), 0.0);
        assert!((m.get(0, 1) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_buffer_size() {
        assert!(FlowField::from_data(2, 2, vec![0.0; 7]).is_err());
        assert!(FlowField::from_data(2, 2, vec![0.0; 8]).is_ok());
        assert!(FlowField::from_data(0, 2, vec![]).is_err());
    }
}
