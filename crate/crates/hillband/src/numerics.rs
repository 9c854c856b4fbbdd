//! Small shared numerics: bracketed root refinement, Gauss-Legendre
//! nodes, least-squares slope fits.

use once_cell::sync::Lazy;

use crate::error::{Error, Result};

/// Refine a root of `f` inside `[a, b]` (sign change required) by a
/// safeguarded secant/bisection hybrid.
pub fn bracketed_root<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootFind(format!(
            "no sign change on [{a}, {b}]: f = {fa}, {fb}"
        )));
    }
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        // secant proposal, clipped into the interior
        let mut x = b - fb * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        if !x.is_finite() || x <= a || x >= b {
            x = mid;
        }
        // alternate with bisection if the proposal stalls near an end
        if (x - a).abs() < 0.01 * (b - a) || (b - x).abs() < 0.01 * (b - a) {
            x = mid;
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Ok(0.5 * (a + b))
}

/// Newton iteration safeguarded by a sign-change bracket.
pub fn newton_in_bracket<F>(mut f: F, mut a: f64, mut b: f64, x0: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (fa, _) = f(a)?;
    let (fb, _) = f(b)?;
    if fa.signum() == fb.signum() && fa != 0.0 && fb != 0.0 {
        return Err(Error::RootFind(format!("no sign change on [{a}, {b}]")));
    }
    let mut x = x0.clamp(a, b);
    for _ in 0..100 {
        let (fx, dfx) = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
        } else {
            b = x;
        }
        let step = fx / dfx;
        let mut xn = x - step;
        if !xn.is_finite() || xn <= a || xn >= b {
            xn = 0.5 * (a + b);
        }
        if (xn - x).abs() <= xtol {
            return Ok(xn);
        }
        x = xn;
        if (b - a).abs() <= xtol {
            return Ok(0.5 * (a + b));
        }
    }
    Ok(x)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-style initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached 64-node rule used by the per-gap quadratures.
pub static GL64: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre(64));

/// Least-squares straight line through `(x_i, y_i)`: returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Solves the dense system `a x = b` in place by LU factorization with
/// partial pivoting.  `a` is consumed as scratch space.
pub fn lu_solve(a: &mut [Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    let mut x = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[perm[i]][col]
                    .abs()
                    .total_cmp(&a[perm[j]][col].abs())
            })
            .unwrap();
        perm.swap(col, pivot);
        let pv = a[perm[col]][col];
        if pv.abs() < 1e-300 {
            return Err(Error::Domain("singular matrix in lu_solve".into()));
        }
        for row in col + 1..n {
            let f = a[perm[row]][col] / pv;
            a[perm[row]][col] = f;
            for k in col + 1..n {
                let v = a[perm[col]][k];
                a[perm[row]][k] -= f * v;
            }
        }
    }
    let mut y = vec![0.0; n];
    for row in 0..n {
        let mut s = x[perm[row]];
        for k in 0..row {
            s -= a[perm[row]][k] * y[k];
        }
        y[row] = s;
    }
    for row in (0..n).rev() {
        let mut s = y[row];
        for k in row + 1..n {
            s -= a[perm[row]][k] * x[k];
        }
        x[row] = s / a[perm[row]][row];
    }
    Ok(x)
}

/// FNV-1a over bytes; used to stamp reports with a config hash.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn root_of_cosine() {
        let r = bracketed_root(|x| Ok(x.cos()), 1.0, 2.0, 1e-14).unwrap();
        assert_abs_diff_eq!(r, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn newton_bracketed() {
        let r = newton_in_bracket(|x| Ok((x * x - 2.0, 2.0 * x)), 0.0, 2.0, 1.0, 1e-14).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // int_{-1}^1 x^14 = 2/15
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert_abs_diff_eq!(v, 2.0 / 15.0, epsilon = 1e-13);
        let s: f64 = w.iter().sum();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn gl64_smooth_integral() {
        let (x, w) = (&GL64.0, &GL64.1);
        let v: f64 = x.iter().zip(w).map(|(x, w)| w * (2.0 * x).exp()).sum();
        let expect = (2f64.exp() - (-2f64).exp()) / 2.0;
        assert_abs_diff_eq!(v, expect, epsilon = 1e-13);
    }

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -2.5 * x + 0.7).collect();
        let (s, b) = linear_fit(&xs, &ys);
        assert_abs_diff_eq!(s, -2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 0.7, epsilon = 1e-12);
    }
}
