//! Sub-grid peak refinement.
//!
//! A grid argmax is not the grid point nearest the true peak when the peak
//! is much narrower in one direction than another (range and azimuth vs.
//! the single vertical baseline) or tilted against the grid axes. The
//! pattern search below climbs the same pseudospectrum from the argmax,
//! staying inside the box spanned by its grid neighbours.

/// Bounds for one coordinate: the neighbours of `i` in `axis`, or the
/// point itself at an edge.
pub(crate) fn cell_bounds(axis: &[f64], i: usize) -> (f64, f64) {
    let lo = axis[i.saturating_sub(1)];
    let hi = axis[(i + 1).min(axis.len() - 1)];
    (lo.min(hi).min(axis[i]), lo.max(hi).max(axis[i]))
}

/// Initial step: half the local grid spacing, or zero on a 1-point axis.
fn half_spacing(axis: &[f64], i: usize) -> f64 {
    let (lo, hi) = cell_bounds(axis, i);
    let n = (i > 0) as usize + (i + 1 < axis.len()) as usize;
    if n == 0 {
        0.0
    } else {
        0.5 * (hi - lo) / n as f64
    }
}

/// Compass search maximizing `f` from `start[d] = axes[d][idx[d]]`.
/// Moves to the best of the `3^D - 1` neighbours at the current step and
/// halves the step when none improves, until it is 1/256 of its start.
pub(crate) fn refine<const D: usize>(
    axes: [&[f64]; D],
    idx: [usize; D],
    mut f: impl FnMut([f64; D]) -> f64,
) -> [f64; D] {
    let bounds: [(f64, f64); D] = std::array::from_fn(|d| cell_bounds(axes[d], idx[d]));
    let mut step: [f64; D] = std::array::from_fn(|d| half_spacing(axes[d], idx[d]));
    let floor: [f64; D] = std::array::from_fn(|d| step[d] / 256.0);
    let mut x: [f64; D] = std::array::from_fn(|d| axes[d][idx[d]]);
    let mut fx = f(x);
    let moves = 3usize.pow(D as u32);
    for _ in 0..200 {
        if step.iter().zip(&floor).all(|(s, lo)| s <= lo) {
            break;
        }
        let mut best = (fx, x);
        for m in 0..moves {
            let mut k = m;
            let y: [f64; D] = std::array::from_fn(|d| {
                let dir = (k % 3) as f64 - 1.0;
                k /= 3;
                (x[d] + dir * step[d]).clamp(bounds[d].0, bounds[d].1)
            });
            if y == x {
                continue;
            }
            let fy = f(y);
            if fy > best.0 {
                best = (fy, y);
            }
        }
        if best.0 > fx {
            (fx, x) = best;
        } else {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    x
}
