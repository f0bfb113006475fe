use serde::{Deserialize, Serialize};

/// COCO uncompressed RLE: run lengths of a column-major scan, zero run first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RleMask {
    /// `[height, width]`.
    pub size: [u32; 2],
    pub counts: Vec<u32>,
}

impl RleMask {
    pub fn width(&self) -> u32 {
        self.size[1]
    }

    pub fn height(&self) -> u32 {
        self.size[0]
    }

    /// Encodes a row-major mask.
    pub fn encode(mask: &[bool], width: u32, height: u32) -> RleMask {
        assert_eq!(mask.len(), (width * height) as usize, "mask size");
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for x in 0..width {
            for y in 0..height {
                let v = mask[(y * width + x) as usize];
                if v != current {
                    counts.push(run);
                    run = 0;
                    current = v;
                }
                run += 1;
            }
        }
        counts.push(run);
        RleMask {
            size: [height, width],
            counts,
        }
    }

    /// Row-major mask; `None` if the counts do not cover the image exactly.
    pub fn decode(&self) -> Option<Vec<bool>> {
        let (w, h) = (self.width(), self.height());
        let total: u64 = self.counts.iter().map(|&c| c as u64).sum();
        if total != w as u64 * h as u64 {
            return None;
        }
        let mut mask = vec![false; (w * h) as usize];
        let mut k = 0u32;
        for (i, &run) in self.counts.iter().enumerate() {
            let on = i % 2 == 1;
            for _ in 0..run {
                if on {
                    let (x, y) = (k / h, k % h);
                    mask[(y * w + x) as usize] = true;
                }
                k += 1;
            }
        }
        Some(mask)
    }

    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }
}

/// Box, mask and area of one instance id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskAnnotation {
    /// `[x, y, w, h]`; all zero when the id is absent.
    pub bbox: [u32; 4],
    pub rle: RleMask,
    pub area: u64,
}

/// Tight box around a row-major mask.
pub fn mask_bbox(mask: &[bool], width: u32) -> Option<[u32; 4]> {
    let mut b: Option<(u32, u32, u32, u32)> = None;
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let (x, y) = (i as u32 % width, i as u32 / width);
        b = Some(match b {
            None => (x, y, x, y),
            Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
        });
    }
    b.map(|(x0, y0, x1, y1)| [x0, y0, x1 - x0 + 1, y1 - y0 + 1])
}

pub fn mask_to_bbox_rle(instance: &[u32], width: u32, height: u32, id: u32) -> MaskAnnotation {
    let mask: Vec<bool> = instance.iter().map(|&i| i == id).collect();
    let rle = RleMask::encode(&mask, width, height);
    MaskAnnotation {
        bbox: mask_bbox(&mask, width).unwrap_or([0; 4]),
        area: rle.area(),
        rle,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_column() {
        let a = mask_to_bbox_rle(&[5, 0, 5, 0], 2, 2, 5);
        assert_eq!(a.bbox, [0, 0, 1, 2]);
        assert_eq!(a.area, 2);
        assert_eq!(a.rle.counts, vec![0, 2, 2]);
    }

    #[test]
    fn absent_and_full() {
        let a = mask_to_bbox_rle(&[1; 12], 4, 3, 2);
        assert_eq!((a.area, a.bbox, a.rle.counts.clone()), (0, [0; 4], vec![12]));
        let f = mask_to_bbox_rle(&[1; 12], 4, 3, 1);
        assert_eq!((f.bbox, f.rle.counts), ([0, 0, 4, 3], vec![0, 12]));
    }
}
