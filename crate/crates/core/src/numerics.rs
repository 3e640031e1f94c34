//! Small scalar solvers and fitting helpers shared by the circle and torus code.

/// Root of an increasing function on `[lo, hi]` by plain bisection.
///
/// Requires `g(lo) <= 0 < g(hi)`. Stops once the bracket is narrower than
/// `tol` or stops shrinking in floating point.
pub fn bisect_increasing<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if g(lo) == 0.0 {
        lo
    } else {
        0.5 * (lo + hi)
    }
}

/// Safeguarded Newton for an increasing function bracketed by `[lo, hi]`.
///
/// Newton steps that leave the current bracket are replaced by bisection, so
/// the iteration always converges when `g(lo) <= 0 <= g(hi)`.
pub fn solve_increasing<G, D>(g: G, dg: D, mut lo: f64, mut hi: f64) -> f64
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let glo = g(lo);
    if glo == 0.0 {
        return lo;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = g(x);
        if v == 0.0 {
            return x;
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = dg(x);
        let mut next = x - v / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) || hi - lo <= 1e-300 {
            return next;
        }
        x = next;
    }
    x
}

/// Minimum of a unimodal function on `[a, b]` by golden-section search.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iterations: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iterations {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Global minimum of a 1-periodic function: dense grid followed by
/// golden-section refinement around the best few grid points.
pub fn periodic_min<F: Fn(f64) -> f64>(f: F, grid: usize) -> (f64, f64) {
    let h = 1.0 / grid as f64;
    let mut samples: Vec<(usize, f64)> = (0..grid).map(|i| (i, f(i as f64 * h))).collect();
    samples.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut best = (samples[0].0 as f64 * h, samples[0].1);
    for &(i, _) in samples.iter().take(4) {
        let x = i as f64 * h;
        let (xm, fm) = golden_min(&f, x - h, x + h, 80);
        if fm < best.1 {
            best = (xm, fm);
        }
    }
    best
}

/// Ordinary least-squares fit `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    LinearFit { slope, intercept, r2 }
}

/// Distance on the unit circle between two reals read modulo 1.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Sup-norm distance on the torus `R^d / Z^d`.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| circle_distance(*x, *y))
        .fold(0.0, f64::max)
}
