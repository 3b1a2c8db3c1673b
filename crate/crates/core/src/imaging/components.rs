use super::BinaryMask;

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// 8-connected labeling. Returns per-pixel labels (0 = unset, components
/// numbered from 1 in order of their first pixel in row-major scan) and the
/// component count.
pub fn label_components(m: &BinaryMask) -> (Vec<u32>, u32) {
    let (w, h) = m.dims();
    let bits = m.bits();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in NEIGHBORS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if bits[j] && labels[j] == 0 {
                    labels[j] = next;
                    stack.push(j);
                }
            }
        }
    }
    (labels, next)
}

/// Splits the set pixels of `m` into 8-connected components, ordered by each
/// component's first pixel in row-major order.
pub fn connected_components(m: &BinaryMask) -> Vec<BinaryMask> {
    let (w, h) = m.dims();
    let (labels, n) = label_components(m);
    (1..=n)
        .map(|l| {
            let bits = labels.iter().map(|&v| v == l).collect();
            BinaryMask::new(w, h, bits).expect("same dimensions")
        })
        .collect()
}
