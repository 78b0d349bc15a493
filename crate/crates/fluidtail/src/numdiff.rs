//! Richardson-extrapolated central differences.

/// Central difference of order `k` (1..=4) with step `h`; error is `O(h^2)`.
fn central(f: &dyn Fn(f64) -> f64, x: f64, k: usize, h: f64) -> f64 {
    match k {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h.powi(3)),
        4 => {
            (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
                / h.powi(4)
        }
        _ => panic!("derivative order {k} not supported"),
    }
}

/// `k`-th derivative of `f` at `x`, with an error estimate.
///
/// Builds a Richardson tableau over steps `h, h/2, h/4, ...`.
pub fn derivative(f: &dyn Fn(f64) -> f64, x: f64, k: usize, h: f64) -> (f64, f64) {
    const LEVELS: usize = 4;
    let mut t = vec![vec![0.0; LEVELS]; LEVELS];
    for i in 0..LEVELS {
        t[i][0] = central(f, x, k, h / 2f64.powi(i as i32));
        for j in 1..=i {
            let fac = 4f64.powi(j as i32);
            t[i][j] = (fac * t[i][j - 1] - t[i - 1][j - 1]) / (fac - 1.0);
        }
    }
    let best = t[LEVELS - 1][LEVELS - 1];
    let err = (best - t[LEVELS - 2][LEVELS - 2]).abs();
    (best, err)
}
