//! Derivative-free one-dimensional minimization.

const INV_PHI: f64 = 0.618_033_988_749_894_8; // (sqrt(5) - 1) / 2

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
///
/// Returns `(x, f(x))` for the best point seen, which may be an endpoint.
/// Terminates when the bracket is narrower than `tol` or after `max_iter`
/// shrink steps.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa = f(a);
    let fb = f(b);
    let mut best = if fa <= fb { (a, fa) } else { (b, fb) };

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);

    for _ in 0..max_iter {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
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

    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Evaluates `f` on `n` evenly spaced points of `[lo, hi]`, then refines the
/// best cell with golden-section search. Guards against the local minima a
/// bare golden-section search can settle into.
pub fn scan_then_refine<F>(mut f: F, lo: f64, hi: f64, n: usize, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let n = n.max(3);
    let step = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n)
        .map(|j| if j == n - 1 { hi } else { lo + step * j as f64 })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();

    let mut best_j = 0;
    for j in 1..n {
        if values[j] < values[best_j] {
            best_j = j;
        }
    }
    let left = grid[best_j.saturating_sub(1)];
    let right = grid[(best_j + 1).min(n - 1)];
    let (x, fx) = golden_section(&mut f, left, right, tol, 200);
    if fx <= values[best_j] {
        (x, fx)
    } else {
        (grid[best_j], values[best_j])
    }
}
