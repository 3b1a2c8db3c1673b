use crate::imaging::{DepthMap, IntensityImage};

/// Integer disparity of a depth sample, `None` for missing depth.
pub fn disparity_from_depth(depth_mm: u16, baseline: f64, focal: f64) -> Option<usize> {
    (depth_mm > 0).then(|| (focal * baseline * 1000.0 / f64::from(depth_mm)).round() as usize)
}

/// Forward-warps the left view into the right camera. Each left pixel moves
/// left by its disparity; where several land on one pixel the nearest (largest
/// disparity) wins. Pixels with missing depth stay in place at lowest
/// priority. Holes take the nearest filled pixel in the same row, preferring
/// the left neighbour on ties.
pub fn synthesize_right_view(left: &IntensityImage, depth: &DepthMap, baseline: f64, focal: f64) -> IntensityImage {
    assert_eq!(left.dims(), depth.dims(), "left view and depth must share dimensions");
    let (w, h) = left.dims();
    let mut out = left.clone();
    let mut value = vec![0u16; w];
    let mut priority = vec![i64::MIN; w];
    for y in 0..h {
        priority.fill(i64::MIN);
        for x in 0..w {
            let (target, prio) = match disparity_from_depth(depth.get(x, y), baseline, focal) {
                Some(d) if d <= x => (x - d, d as i64),
                Some(_) => continue,
                None => (x, -1),
            };
            if prio > priority[target] {
                priority[target] = prio;
                value[target] = left.get(x, y);
            }
        }
        if priority.iter().all(|&p| p == i64::MIN) {
            continue;
        }
        for x in 0..w {
            let v = if priority[x] != i64::MIN {
                value[x]
            } else {
                let l = (0..x).rev().find(|&i| priority[i] != i64::MIN);
                let r = (x + 1..w).find(|&i| priority[i] != i64::MIN);
                match (l, r) {
                    (Some(l), Some(r)) if r - x < x - l => value[r],
                    (Some(l), _) => value[l],
                    (None, Some(r)) => value[r],
                    (None, None) => unreachable!(),
                }
            };
            out.set(x, y, v);
        }
    }
    out
}
