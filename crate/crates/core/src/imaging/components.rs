use super::{BinaryImage, BoundingBox};

// One 3x3 dilation followed by 8-connected labeling joins two foreground
// pixels exactly when a chain of foreground pixels links them with steps of
// Chebyshev length at most 3. Grouping on that rule works on the sparse pixel
// list directly, which is what keeps mostly black frames cheap.
const REACH: u32 = 3;

/// Foreground pixels grouped as one 3x3 dilation plus 8-connected labeling
/// would group them. Each group lists its `(x, y)` pixels in row-major order;
/// groups are ordered by their first pixel.
pub fn component_pixels(image: &BinaryImage) -> Vec<Vec<(u32, u32)>> {
    let width = image.width();
    let mut xs: Vec<u32> = Vec::new();
    let mut ys: Vec<u32> = Vec::new();
    // row_start[y]..row_start[y + 1] indexes the foreground pixels of row y.
    let mut row_start: Vec<usize> = Vec::with_capacity(image.height() + 1);
    for (y, row) in image.bits().chunks_exact(width.max(1)).enumerate() {
        row_start.push(xs.len());
        if !row.contains(&1) {
            continue;
        }
        for (x, &b) in row.iter().enumerate() {
            if b != 0 {
                xs.push(x as u32);
                ys.push(y as u32);
            }
        }
    }
    row_start.push(xs.len());
    if xs.is_empty() {
        return Vec::new();
    }

    let mut uf = UnionFind::new(xs.len());
    for i in 0..xs.len() {
        let (x, y) = (xs[i], ys[i]);
        let lo = x.saturating_sub(REACH);
        let hi = x + REACH;
        // Earlier pixels in the same row.
        let mut j = i;
        while j > row_start[y as usize] {
            j -= 1;
            if xs[j] < lo {
                break;
            }
            uf.union(i, j);
        }
        // Up to REACH rows above.
        for dy in 1..=REACH.min(y) {
            let r = (y - dy) as usize;
            let row = &xs[row_start[r]..row_start[r + 1]];
            let first = row.partition_point(|&v| v < lo);
            for (k, &v) in row[first..].iter().enumerate() {
                if v > hi {
                    break;
                }
                uf.union(i, row_start[r] + first + k);
            }
        }
    }

    // Groups appear in order of their first pixel because pixels are scanned
    // in row-major order.
    let mut slot_of_root = vec![usize::MAX; xs.len()];
    let mut groups: Vec<Vec<(u32, u32)>> = Vec::new();
    for i in 0..xs.len() {
        let r = uf.find(i);
        if slot_of_root[r] == usize::MAX {
            slot_of_root[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot_of_root[r]].push((xs[i], ys[i]));
    }
    groups
}

/// Tight box of the original pixels of each [`component_pixels`] group, in
/// the same order. Boxes of different groups may overlap.
pub fn connected_components(image: &BinaryImage) -> Vec<BoundingBox> {
    component_pixels(image)
        .iter()
        .map(|g| {
            let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
            for &(x, y) in g {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
            BoundingBox {
                x: x0,
                y: y0,
                w: x1 - x0 + 1,
                h: y1 - y0 + 1,
            }
        })
        .collect()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    // The smaller index becomes the root so roots are first-seen pixels.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
