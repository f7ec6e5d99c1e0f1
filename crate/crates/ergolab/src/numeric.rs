//! Small numerical helpers shared by the estimators.

/// Fractional part reduced into `[0, 1)`.
///
/// `x - floor(x)` can round up to exactly `1.0` for tiny negative inputs;
/// that case is folded back to `0.0` so the invariant holds.
pub fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Arc distance on the unit circle between reduced angles `a, b` in `[0, 1)`.
pub fn arc_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Distance from `x` to the nearest integer.
///
/// Equals the arc distance between `frac(x)` and `0`, but avoids the
/// cancellation near the seam that the reduced form suffers from.
pub fn dist_to_nearest_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `log(sum(exp(v)))` computed stably. Returns `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = values.iter().map(|v| (v - m).exp()).sum();
    m + s.ln()
}

/// Slope of the least-squares line through `(x_i, y_i)`.
///
/// Requires at least two distinct abscissae; callers guarantee this.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in points {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    num / den
}

/// Bisection for the boundary of a monotone predicate.
///
/// `pred` must be false at `lo` and true at `hi`; the returned value is the
/// midpoint of the final bracket, within `tol` of the transition.
pub fn bisect_predicate<F: FnMut(f64) -> bool>(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    mut pred: F,
) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest singular value of a 2x2 matrix `[[a, b], [c, d]]`.
pub fn singular_value_max_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    // Eigenvalues of A^T A via the stable half-trace form.
    let q1 = a * a + b * b + c * c + d * d;
    let diff = a * a + b * b - c * c - d * d;
    let cross = a * c + b * d;
    let q2 = (diff * diff + 4.0 * cross * cross).sqrt();
    (0.5 * (q1 + q2)).sqrt()
}

/// Smallest singular value of a 2x2 matrix, via `|det| / sigma_max`.
pub fn singular_value_min_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let det = a * d - b * c;
    let smax = singular_value_max_2x2(a, b, c, d);
    if smax == 0.0 {
        0.0
    } else {
        det.abs() / smax
    }
}

/// 64-bit FNV-1a hash, used to fingerprint configs and parameter tables.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
