//! Grid-seeded golden-section line search.
//!
//! All heading and orientation optimizations in this crate follow the same
//! recipe: evaluate the objective on a uniform grid, keep the best grid point
//! (first hit wins on ties, so results are deterministic), then refine inside
//! the surrounding cell with golden-section iterations. The refined point is
//! accepted only if it strictly improves on the grid point, which keeps the
//! documented tie-break ("smallest argument wins") intact on flat objectives.

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Minimize `f` on `[lo, hi]` by golden-section search until the bracket is
/// narrower than `tol`. Returns (argmin, min).
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

/// Maximize `f` on `[lo, hi]`; see [`golden_min`].
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, neg) = golden_min(|t| -f(t), lo, hi, tol);
    (x, -neg)
}

/// Maximize `f` over `[lo, hi)` sampled at `grid_points` uniform points, then
/// refine the winning cell. Ties on the grid keep the smallest argument; the
/// refinement must strictly beat the grid value to replace it.
pub(crate) fn grid_then_golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    grid_points: usize,
    tol: f64,
) -> (f64, f64) {
    assert!(grid_points >= 2 && hi > lo);
    let step = (hi - lo) / grid_points as f64;
    let (mut best_x, mut best_v) = (lo, f(lo));
    for k in 1..grid_points {
        let x = lo + step * k as f64;
        let v = f(x);
        if v > best_v {
            best_x = x;
            best_v = v;
        }
    }
    let (rx, rv) = golden_max(&mut f, best_x - step, best_x + step, tol);
    if rv > best_v {
        (rx, rv)
    } else {
        (best_x, best_v)
    }
}

/// Minimize `f` over the closed interval `[lo, hi]` sampled at `grid_points`
/// uniform points (both ends included), then refine the winning cell, clipped
/// to the interval. Ties keep the smallest argument.
pub(crate) fn grid_then_golden_min<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    grid_points: usize,
    tol: f64,
) -> (f64, f64) {
    assert!(grid_points >= 2 && hi > lo);
    let step = (hi - lo) / (grid_points - 1) as f64;
    let (mut best_x, mut best_v) = (lo, f(lo));
    for k in 1..grid_points {
        let x = lo + step * k as f64;
        let v = f(x);
        if v < best_v {
            best_x = x;
            best_v = v;
        }
    }
    let (rx, rv) = golden_min(&mut f, (best_x - step).max(lo), (best_x + step).min(hi), tol);
    if rv < best_v {
        (rx, rv)
    } else {
        (best_x, best_v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refines_smooth_maximum() {
        // -cos(d - 1.2) on [0, 2pi) peaks at 1.2 + pi.
        let (x, v) = grid_then_golden_max(|d| -(d - 1.2f64).cos(), 0.0, 2.0 * std::f64::consts::PI, 720, 1e-6);
        assert!((x - (1.2 + std::f64::consts::PI)).abs() < 1e-4, "got {x}");
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn constant_objective_keeps_first_grid_point() {
        let (x, v) = grid_then_golden_max(|_| 3.0, 0.0, 2.0 * std::f64::consts::PI, 720, 1e-6);
        assert_eq!(x, 0.0);
        assert_eq!(v, 3.0);
        let (xm, _) = grid_then_golden_min(|_| 3.0, 0.0, 1.5, 2000, 1e-6);
        assert_eq!(xm, 0.0);
    }

    #[test]
    fn min_respects_interval_bounds() {
        let (x, _) = grid_then_golden_min(|d| (d - 0.3).powi(2), 0.0, 1.5, 2000, 1e-7);
        assert!((x - 0.3).abs() < 1e-5);
        let (edge, _) = grid_then_golden_min(|d| d, 0.0, 1.5, 2000, 1e-7);
        assert!(edge >= 0.0 && edge < 1e-3);
    }
}
