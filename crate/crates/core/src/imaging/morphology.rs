use crate::imaging::BinaryMask;

/// Erosion with a square structuring element of side 2r+1. Out-of-bounds
/// pixels count as foreground, so erosion never grows the set through the
/// border and opening stays anti-extensive.
pub fn erode(mask: &BinaryMask, radius: u32) -> BinaryMask {
    window_all(mask, radius)
}

/// Dilation with a square structuring element of side 2r+1. Out-of-bounds
/// pixels count as background, the dual convention to `erode`.
pub fn dilate(mask: &BinaryMask, radius: u32) -> BinaryMask {
    window_any(mask, radius)
}

pub fn open(mask: &BinaryMask, radius: u32) -> BinaryMask {
    dilate(&erode(mask, radius), radius)
}

pub fn close(mask: &BinaryMask, radius: u32) -> BinaryMask {
    erode(&dilate(mask, radius), radius)
}

/// Opening followed by closing, the standard speckle-and-hole cleanup.
pub fn morph_open_close(mask: &BinaryMask, radius: u32) -> BinaryMask {
    close(&open(mask, radius), radius)
}

/// Separable sliding-window AND over in-bounds pixels.
fn window_all(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let w = mask.width() as i64;
    let h = mask.height() as i64;
    let r = radius as i64;
    let bits = mask.bits();
    let mut horiz = vec![false; (w * h) as usize];
    for row in 0..h {
        let base = (row * w) as usize;
        for col in 0..w {
            let lo = (col - r).max(0) as usize;
            let hi = (col + r).min(w - 1) as usize;
            horiz[base + col as usize] = bits[base + lo..=base + hi].iter().all(|&b| b);
        }
    }
    let mut out = vec![false; (w * h) as usize];
    for col in 0..w {
        for row in 0..h {
            let lo = (row - r).max(0);
            let hi = (row + r).min(h - 1);
            out[(row * w + col) as usize] =
                (lo..=hi).all(|rr| horiz[(rr * w + col) as usize]);
        }
    }
    BinaryMask::from_bits(mask.width(), mask.height(), out).expect("dimensions preserved")
}

/// Separable sliding-window OR over in-bounds pixels.
fn window_any(mask: &BinaryMask, radius: u32) -> BinaryMask {
    let w = mask.width() as i64;
    let h = mask.height() as i64;
    let r = radius as i64;
    let bits = mask.bits();
    let mut horiz = vec![false; (w * h) as usize];
    for row in 0..h {
        let base = (row * w) as usize;
        for col in 0..w {
            let lo = (col - r).max(0) as usize;
            let hi = (col + r).min(w - 1) as usize;
            horiz[base + col as usize] = bits[base + lo..=base + hi].iter().any(|&b| b);
        }
    }
    let mut out = vec![false; (w * h) as usize];
    for col in 0..w {
        for row in 0..h {
            let lo = (row - r).max(0);
            let hi = (row + r).min(h - 1);
            out[(row * w + col) as usize] =
                (lo..=hi).any(|rr| horiz[(rr * w + col) as usize]);
        }
    }
    BinaryMask::from_bits(mask.width(), mask.height(), out).expect("dimensions preserved")
}
