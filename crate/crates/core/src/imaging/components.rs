use crate::imaging::BinaryMask;

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bbox {
    pub min_row: u32,
    pub min_col: u32,
    pub max_row: u32,
    pub max_col: u32,
}

/// One 8-connected component of set pixels.
#[derive(Debug, Clone)]
pub struct Component {
    /// 1-based label; labels are contiguous in row-major discovery order.
    pub label: u32,
    /// Member pixels as (row, col), row-major.
    pub pixels: Vec<(u32, u32)>,
    pub bbox: Bbox,
    pub touches_border: bool,
}

impl Component {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.pixels.len() as f64;
        let (sr, sc) = self
            .pixels
            .iter()
            .fold((0.0, 0.0), |(sr, sc), &(r, c)| (sr + r as f64, sc + c as f64));
        (sr / n, sc / n)
    }

    /// Euclidean distance from `point` (row, col) to the nearest member pixel.
    pub fn min_distance_to(&self, point: (f64, f64)) -> f64 {
        self.pixels
            .iter()
            .map(|&(r, c)| {
                let dr = r as f64 - point.0;
                let dc = c as f64 - point.1;
                (dr * dr + dc * dc).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// 8-connected components via two-pass labeling with union-find. Output
/// labels start at 1 and follow the order each component is first reached in
/// a row-major scan.
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    let w = mask.width() as usize;
    let h = mask.height() as usize;
    let bits = mask.bits();

    // First pass: provisional labels, merging across the four already-seen
    // 8-neighbors (west, northwest, north, northeast).
    let mut labels = vec![0u32; w * h];
    let mut parent: Vec<u32> = vec![0]; // parent[0] unused; labels are 1-based
    fn find(parent: &mut Vec<u32>, mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !bits[i] {
                continue;
            }
            let mut neighbor_label = 0u32;
            let mut merge = |lbl: u32, parent: &mut Vec<u32>| {
                if lbl == 0 {
                    return;
                }
                if neighbor_label == 0 {
                    neighbor_label = lbl;
                } else {
                    let a = find(parent, neighbor_label);
                    let b = find(parent, lbl);
                    if a != b {
                        // Final ordering comes from the remap pass; unioning
                        // toward the smaller root just keeps chains short.
                        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                        parent[hi as usize] = lo;
                        neighbor_label = lo;
                    } else {
                        neighbor_label = a;
                    }
                }
            };
            if c > 0 {
                merge(labels[i - 1], &mut parent);
            }
            if r > 0 {
                if c > 0 {
                    merge(labels[i - w - 1], &mut parent);
                }
                merge(labels[i - w], &mut parent);
                if c + 1 < w {
                    merge(labels[i - w + 1], &mut parent);
                }
            }
            if neighbor_label == 0 {
                let fresh = parent.len() as u32;
                parent.push(fresh);
                labels[i] = fresh;
            } else {
                labels[i] = neighbor_label;
            }
        }
    }

    // Second pass: map roots to contiguous labels in first-encounter order
    // and collect pixels.
    let mut remap = vec![0u32; parent.len()];
    let mut components: Vec<Component> = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if labels[i] == 0 {
                continue;
            }
            let root = find(&mut parent, labels[i]);
            let out = if remap[root as usize] == 0 {
                let label = components.len() as u32 + 1;
                remap[root as usize] = label;
                components.push(Component {
                    label,
                    pixels: Vec::new(),
                    bbox: Bbox {
                        min_row: r as u32,
                        min_col: c as u32,
                        max_row: r as u32,
                        max_col: c as u32,
                    },
                    touches_border: false,
                });
                label
            } else {
                remap[root as usize]
            };
            let comp = &mut components[out as usize - 1];
            let (ru, cu) = (r as u32, c as u32);
            comp.pixels.push((ru, cu));
            comp.bbox.min_row = comp.bbox.min_row.min(ru);
            comp.bbox.min_col = comp.bbox.min_col.min(cu);
            comp.bbox.max_row = comp.bbox.max_row.max(ru);
            comp.bbox.max_col = comp.bbox.max_col.max(cu);
            if r == 0 || c == 0 || r == h - 1 || c == w - 1 {
                comp.touches_border = true;
            }
        }
    }
    components
}
