//! Split-disc dual-pixel PSF.
//!
//! A defocused point images to a disc; each DP sub-aperture sees one half of
//! it, split along the vertical diameter. For a half-disc of radius R the
//! centroid sits 4R/(3π) from the diameter, so choosing R = 3π|d|/8 places
//! the two half-PSF centroids exactly d apart.

/// Radius below which the kernel collapses to the identity.
pub const MIN_RADIUS: f64 = 0.5;

/// Sub-samples per pixel along each axis when rasterising a half-disc.
const SUBSAMPLES: usize = 32;

/// Discrete gather kernel: `out(x) = Σ w · in(x − offset)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub taps: Vec<(i32, i32, f64)>,
}

impl Kernel {
    pub fn identity() -> Self {
        Kernel { taps: vec![(0, 0, 1.0)] }
    }

    /// Weighted mean tap offset.
    pub fn centroid(&self) -> (f64, f64) {
        self.taps.iter().fold((0.0, 0.0), |(sx, sy), &(dx, dy, w)| (sx + w * dx as f64, sy + w * dy as f64))
    }
}

/// Half-disc radius producing a view shift of d/2.
pub fn radius_for_disparity(d: f64) -> f64 {
    3.0 * std::f64::consts::PI * d.abs() / 8.0
}

/// Kernel for one DP view. `side` is +1 for the half at x ≥ 0, −1 for x ≤ 0.
///
/// Sub-samples are splatted bilinearly onto the integer grid, which keeps the
/// first moment of the sampled region exactly.
pub fn half_disc(radius: f64, side: f64) -> Kernel {
    if radius < MIN_RADIUS {
        return Kernel::identity();
    }
    let h = 1.0 / SUBSAMPLES as f64;
    let reach = radius.ceil() as i32 + 1;
    let span = (2 * reach + 1) as usize;
    let mut grid = vec![0.0f64; span * span];
    let nx = (radius / h).ceil() as usize;
    let ny = nx;
    let r2 = radius * radius;
    for i in 0..nx {
        let x = (i as f64 + 0.5) * h;
        for j in 0..2 * ny {
            let y = (j as f64 + 0.5) * h - ny as f64 * h;
            if x * x + y * y > r2 {
                continue;
            }
            let sx = side * x;
            let (fx, fy) = (sx.floor(), y.floor());
            let (tx, ty) = (sx - fx, y - fy);
            let (ix, iy) = (fx as i32 + reach, fy as i32 + reach);
            for (ox, oy, w) in [
                (0, 0, (1.0 - tx) * (1.0 - ty)),
                (1, 0, tx * (1.0 - ty)),
                (0, 1, (1.0 - tx) * ty),
                (1, 1, tx * ty),
            ] {
                let (gx, gy) = ((ix + ox) as usize, (iy + oy) as usize);
                grid[gy * span + gx] += w;
            }
        }
    }
    let total: f64 = grid.iter().sum();
    let mut taps = Vec::new();
    for gy in 0..span {
        for gx in 0..span {
            let w = grid[gy * span + gx];
            if w > 0.0 {
                taps.push((gx as i32 - reach, gy as i32 - reach, w / total));
            }
        }
    }
    Kernel { taps }
}

/// (left, right) kernels for signed disparity `d`: the left view is shifted by +d/2.
pub fn dp_kernels(d: f64) -> (Kernel, Kernel) {
    let r = radius_for_disparity(d);
    if r < MIN_RADIUS {
        return (Kernel::identity(), Kernel::identity());
    }
    let side = d.signum();
    (half_disc(r, side), half_disc(r, -side))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centroid_matches_half_disparity() {
        for d in [0.5, 1.0, 2.0, 3.5, 8.0, -4.0, 11.5] {
            let (l, r) = dp_kernels(d);
            let (cl, cly) = l.centroid();
            let (cr, _) = r.centroid();
            assert!((cl - d / 2.0).abs() < 2e-3 * d.abs().max(1.0), "d={d} left centroid {cl}");
            assert!((cr + d / 2.0).abs() < 2e-3 * d.abs().max(1.0), "d={d} right centroid {cr}");
            assert!(cly.abs() < 1e-12);
            let sum: f64 = l.taps.iter().map(|t| t.2).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_blur_is_identity() {
        let (l, r) = dp_kernels(0.3);
        assert_eq!(l, Kernel::identity());
        assert_eq!(r, Kernel::identity());
    }

    #[test]
    fn views_are_mirror_images() {
        let (l, r) = dp_kernels(3.0);
        let mut mirrored: Vec<_> = l.taps.iter().map(|&(x, y, w)| (-x, y, w)).collect();
        let mut rt = r.taps.clone();
        mirrored.sort_by_key(|a| (a.0, a.1));
        rt.sort_by_key(|a| (a.0, a.1));
        for (a, b) in mirrored.iter().zip(&rt) {
            assert_eq!((a.0, a.1), (b.0, b.1));
            assert!((a.2 - b.2).abs() < 1e-12);
        }
    }
}
