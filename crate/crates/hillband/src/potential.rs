//! 1-periodic real potentials as finite trigonometric series.
//!
//! The canonical representation is the Fourier series
//! `p(x) = c_0 + sum_n c_n cos(2 pi n x) + s_n sin(2 pi n x)`.
//! Differentiation, multiplication and period integrals are exact on this
//! representation, which keeps the whole downstream pipeline spectrally
//! accurate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest derivative order kept available for the jet-variable algebra.
pub const MAX_JET_ORDER: usize = 8;
pub const DEFAULT_GRID_SIZE: usize = 1024;

pub const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPotential {
    /// Coefficient of cos(2 pi n x); index 0 is the mean value.
    cos_coeffs: Vec<f64>,
    /// Coefficient of sin(2 pi n x) for n = index + 1.
    sin_coeffs: Vec<f64>,
    grid_size: usize,
}

fn grid_for_harmonic(h: usize) -> usize {
    // keep aliasing below round-off: grid > 8 x highest retained harmonic
    let mut g = DEFAULT_GRID_SIZE;
    while g <= 8 * h {
        g *= 2;
    }
    g
}

impl PeriodicPotential {
    pub fn new(cos_coeffs: Vec<f64>, sin_coeffs: Vec<f64>) -> Self {
        let h = cos_coeffs.len().max(sin_coeffs.len() + 1).saturating_sub(1);
        Self {
            cos_coeffs,
            sin_coeffs,
            grid_size: grid_for_harmonic(h),
        }
    }

    pub fn zero() -> Self {
        Self::new(vec![], vec![])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c], vec![])
    }

    /// `a cos(2 pi n x)`
    pub fn cosine(n: usize, a: f64) -> Self {
        let mut c = vec![0.0; n + 1];
        c[n] = a;
        Self::new(c, vec![])
    }

    /// `a sin(2 pi n x)`
    pub fn sine(n: usize, a: f64) -> Self {
        assert!(n >= 1);
        let mut s = vec![0.0; n];
        s[n - 1] = a;
        Self::new(vec![], s)
    }

    /// Recover coefficients from uniform samples at `x = j / values.len()`.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::Config("need at least 2 samples".into()));
        }
        // naive real DFT; sample counts stay small enough for O(n^2)
        let nh = n / 2;
        let mut cos_coeffs = vec![0.0; nh];
        let mut sin_coeffs = vec![0.0; nh.saturating_sub(1)];
        for (j, v) in values.iter().enumerate() {
            let x = j as f64 / n as f64;
            cos_coeffs[0] += v / n as f64;
            for k in 1..nh {
                let (s, c) = (TAU * k as f64 * x).sin_cos();
                cos_coeffs[k] += 2.0 * v * c / n as f64;
                sin_coeffs[k - 1] += 2.0 * v * s / n as f64;
            }
        }
        let mut p = Self::new(cos_coeffs, sin_coeffs);
        p.trim(1e-13);
        Ok(p)
    }

    /// Drop trailing coefficients below `tol` in absolute value.
    pub fn trim(&mut self, tol: f64) {
        while let Some(&c) = self.cos_coeffs.last() {
            if c.abs() < tol && self.cos_coeffs.len() > self.sin_coeffs.len() + 1 {
                self.cos_coeffs.pop();
            } else {
                break;
            }
        }
        while let Some(&s) = self.sin_coeffs.last() {
            if s.abs() < tol && self.sin_coeffs.len() + 1 > self.cos_coeffs.len() {
                self.sin_coeffs.pop();
            } else {
                break;
            }
        }
        let h = self.highest_harmonic();
        self.grid_size = grid_for_harmonic(h);
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn highest_harmonic(&self) -> usize {
        let hc = self.cos_coeffs.len().saturating_sub(1);
        let hs = self.sin_coeffs.len();
        hc.max(hs)
    }

    pub fn mean(&self) -> f64 {
        self.cos_coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos_coeffs
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin_coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for (n, &c) in self.cos_coeffs.iter().enumerate() {
            v += c * (TAU * n as f64 * x).cos();
        }
        for (i, &s) in self.sin_coeffs.iter().enumerate() {
            v += s * (TAU * (i + 1) as f64 * x).sin();
        }
        v
    }

    /// Exact termwise derivative of the series.
    pub fn derivative(&self, order: usize) -> Result<Self> {
        if order > MAX_JET_ORDER {
            return Err(Error::Capability(format!(
                "derivative order {order} exceeds jet budget {MAX_JET_ORDER}"
            )));
        }
        let mut p = self.clone();
        for _ in 0..order {
            p = p.derivative_once();
        }
        Ok(p)
    }

    fn derivative_once(&self) -> Self {
        let h = self.highest_harmonic();
        let mut cos_coeffs = vec![0.0; h + 1];
        let mut sin_coeffs = vec![0.0; h];
        for n in 1..=h {
            let w = TAU * n as f64;
            let c = self.cos_coeffs.get(n).copied().unwrap_or(0.0);
            let s = self.sin_coeffs.get(n - 1).copied().unwrap_or(0.0);
            // d/dx [c cos + s sin] = -c w sin + s w cos
            cos_coeffs[n] = s * w;
            sin_coeffs[n - 1] = -c * w;
        }
        let mut p = Self {
            cos_coeffs,
            sin_coeffs,
            grid_size: self.grid_size,
        };
        p.trim(0.0);
        p
    }

    /// Antiderivative with the convention `F(0) = 0`; requires mean zero
    /// for periodicity of the oscillatory part, the mean contributes a
    /// linear term handled by [`cumulative_integral`](Self::cumulative_integral).
    fn antiderivative_oscillatory(&self) -> Self {
        let h = self.highest_harmonic();
        let mut cos_coeffs = vec![0.0; h + 1];
        let mut sin_coeffs = vec![0.0; h];
        for n in 1..=h {
            let w = TAU * n as f64;
            let c = self.cos_coeffs.get(n).copied().unwrap_or(0.0);
            let s = self.sin_coeffs.get(n - 1).copied().unwrap_or(0.0);
            // int c cos = c/w sin ; int s sin = -s/w cos
            sin_coeffs[n - 1] = c / w;
            cos_coeffs[n] = -s / w;
        }
        Self {
            cos_coeffs,
            sin_coeffs,
            grid_size: self.grid_size,
        }
    }

    /// `int_0^x p(t) dt`, exact for the trigonometric series.
    pub fn cumulative_integral(&self, x: f64) -> f64 {
        let a = self.antiderivative_oscillatory();
        self.mean() * x + a.eval(x) - a.eval(0.0)
    }

    /// Mean-zero antiderivative as a periodic function (valid when `self`
    /// is mean-zero): the unique primitive with zero mean.
    pub fn primitive_mean_zero(&self) -> Result<Self> {
        if self.mean().abs() > 1e-12 {
            return Err(Error::Domain(
                "primitive of a non-mean-zero function is not periodic".into(),
            ));
        }
        let mut a = self.antiderivative_oscillatory();
        a.cos_coeffs[0] = 0.0;
        a.trim(0.0);
        Ok(a)
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut p = self.clone();
        for c in &mut p.cos_coeffs {
            *c *= a;
        }
        for s in &mut p.sin_coeffs {
            *s *= a;
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        let nc = self.cos_coeffs.len().max(other.cos_coeffs.len());
        let ns = self.sin_coeffs.len().max(other.sin_coeffs.len());
        let mut cos_coeffs = vec![0.0; nc];
        let mut sin_coeffs = vec![0.0; ns];
        for (i, c) in cos_coeffs.iter_mut().enumerate() {
            *c = self.cos_coeffs.get(i).copied().unwrap_or(0.0)
                + other.cos_coeffs.get(i).copied().unwrap_or(0.0);
        }
        for (i, s) in sin_coeffs.iter_mut().enumerate() {
            *s = self.sin_coeffs.get(i).copied().unwrap_or(0.0)
                + other.sin_coeffs.get(i).copied().unwrap_or(0.0);
        }
        Self::new(cos_coeffs, sin_coeffs)
    }

    pub fn add_const(&self, c: f64) -> Self {
        let mut p = self.clone();
        if p.cos_coeffs.is_empty() {
            p.cos_coeffs.push(c);
        } else {
            p.cos_coeffs[0] += c;
        }
        p
    }

    /// Pointwise product, exact in coefficient space.
    pub fn mul(&self, other: &Self) -> Self {
        let ha = self.highest_harmonic() as i64;
        let hb = other.highest_harmonic() as i64;
        let h = (ha + hb) as usize;
        // complex exponential coefficients a_k, |k| <= h; a_{-k} = conj(a_k)
        let (are, aim) = self.exp_coeffs();
        let (bre, bim) = other.exp_coeffs();
        let get = |re: &Vec<f64>, im: &Vec<f64>, k: i64| -> (f64, f64) {
            let a = k.unsigned_abs() as usize;
            if a >= re.len() {
                (0.0, 0.0)
            } else if k >= 0 {
                (re[a], im[a])
            } else {
                (re[a], -im[a])
            }
        };
        let mut cre = vec![0.0; h + 1];
        let mut cim = vec![0.0; h + 1];
        for k in 0..=(h as i64) {
            let mut sre = 0.0;
            let mut sim = 0.0;
            for j in -hb..=hb {
                let (x1, y1) = get(&are, &aim, k - j);
                let (x2, y2) = get(&bre, &bim, j);
                sre += x1 * x2 - y1 * y2;
                sim += x1 * y2 + x2 * y1;
            }
            cre[k as usize] = sre;
            cim[k as usize] = sim;
        }
        Self::from_exp_coeffs(&cre, &cim)
    }

    /// `p(x + a)` as a new series.
    pub fn translate(&self, a: f64) -> Self {
        let (re, im) = self.exp_coeffs();
        let h = re.len() - 1;
        let mut nre = vec![0.0; h + 1];
        let mut nim = vec![0.0; h + 1];
        for k in 0..=h {
            let (s, c) = (TAU * k as f64 * a).sin_cos();
            nre[k] = re[k] * c - im[k] * s;
            nim[k] = re[k] * s + im[k] * c;
        }
        Self::from_exp_coeffs(&nre, &nim)
    }

    fn exp_coeffs(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.highest_harmonic();
        let mut re = vec![0.0; h + 1];
        let mut im = vec![0.0; h + 1];
        re[0] = self.mean();
        for k in 1..=h {
            let c = self.cos_coeffs.get(k).copied().unwrap_or(0.0);
            let s = self.sin_coeffs.get(k - 1).copied().unwrap_or(0.0);
            re[k] = c / 2.0;
            im[k] = -s / 2.0;
        }
        (re, im)
    }

    fn from_exp_coeffs(re: &[f64], im: &[f64]) -> Self {
        let h = re.len() - 1;
        let mut cos_coeffs = vec![0.0; h + 1];
        let mut sin_coeffs = vec![0.0; h];
        cos_coeffs[0] = re[0];
        for k in 1..=h {
            cos_coeffs[k] = 2.0 * re[k];
            sin_coeffs[k - 1] = -2.0 * im[k];
        }
        let mut p = Self::new(cos_coeffs, sin_coeffs);
        p.trim(0.0);
        p
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..self.grid_size)
            .map(|j| self.eval(j as f64 / self.grid_size as f64))
            .collect()
    }

    /// `int_0^1 p^2 dx`, exact.
    pub fn norm_sq(&self) -> f64 {
        let mut s = self.mean() * self.mean();
        for &c in self.cos_coeffs.iter().skip(1) {
            s += c * c / 2.0;
        }
        for &v in &self.sin_coeffs {
            s += v * v / 2.0;
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Trapezoidal rule on the periodic grid; spectrally accurate for smooth
/// periodic integrands.
pub fn period_integral(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// JSON potential descriptor accepted by the CLI and FFI surfaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PotentialDescriptor {
    Fourier {
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    Samples {
        values: Vec<f64>,
    },
    /// Distributional potential `c + p'` with the primitive `p` given.
    Distribution {
        #[serde(default)]
        p_cos: Vec<f64>,
        #[serde(default)]
        p_sin: Vec<f64>,
    },
}

impl PotentialDescriptor {
    /// Build the smooth potential; the `distribution` variant is rejected
    /// here and routed through the Riccati pipeline instead.
    pub fn build_smooth(&self) -> Result<PeriodicPotential> {
        match self {
            PotentialDescriptor::Fourier { cos, sin } => {
                Ok(PeriodicPotential::new(cos.clone(), sin.clone()))
            }
            PotentialDescriptor::Samples { values } => PeriodicPotential::from_samples(values),
            PotentialDescriptor::Distribution { .. } => Err(Error::Config(
                "distribution potentials go through the distrib pipeline".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_zero_potential() {
        let p = PeriodicPotential::zero();
        assert_eq!(p.eval(0.37), 0.0);
    }

    #[test]
    fn eval_direct() {
        let p = PeriodicPotential::cosine(1, 2.0);
        assert_abs_diff_eq!(p.eval(0.0), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn eval_hand_series() {
        // 2cos(2 pi x) + sin(4 pi x) at x = 1/8 -> sqrt(2) + 1
        let p = PeriodicPotential::cosine(1, 2.0).add(&PeriodicPotential::sine(2, 1.0));
        assert_abs_diff_eq!(p.eval(0.125), 2.0f64.sqrt() + 1.0, epsilon = 1e-14);
    }

    #[test]
    fn periodicity() {
        let p = PeriodicPotential::new(vec![0.3, 1.0, -0.2], vec![0.5, 0.7]);
        for &x in &[0.0, 0.13, 0.77, 3.1] {
            assert_abs_diff_eq!(p.eval(x), p.eval(x + 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_termwise() {
        let p = PeriodicPotential::cosine(1, 1.0);
        let d = p.derivative(1).unwrap();
        for &x in &[0.0, 0.21, 0.5] {
            assert_abs_diff_eq!(d.eval(x), -TAU * (TAU * x).sin(), epsilon = 1e-12);
        }
        let p0 = p.derivative(0).unwrap();
        assert_eq!(p0, p);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let p = PeriodicPotential::sine(2, 1.0);
        let d2 = p.derivative(2).unwrap();
        // closed form: -16 pi^2 sin(4 pi x)
        for k in 0..10 {
            let x = 0.05 + 0.09 * k as f64;
            let expect = -16.0 * std::f64::consts::PI.powi(2) * (2.0 * TAU * x).sin();
            assert!((d2.eval(x) - expect).abs() <= 1e-8 * expect.abs().max(1.0));
        }
        // finite-difference commutation at h in {1e-3, 1e-4}
        let d1 = p.derivative(1).unwrap();
        for &h in &[1e-3, 1e-4] {
            for k in 0..5 {
                let x = 0.07 + 0.18 * k as f64;
                let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
                // error ~ h^2 |f'''|/6 with |f'''| ~ (4 pi)^3
                assert!((fd - d1.eval(x)).abs() < 400.0 * h * h);
            }
        }
    }

    #[test]
    fn derivative_order_capability() {
        let p = PeriodicPotential::cosine(1, 1.0);
        assert!(p.derivative(MAX_JET_ORDER + 1).is_err());
    }

    #[test]
    fn period_integral_values() {
        let n = 256;
        let ones = vec![1.0; n];
        assert_abs_diff_eq!(period_integral(&ones), 1.0, epsilon = 1e-15);
        let cos2: Vec<f64> = (0..n)
            .map(|j| (TAU * j as f64 / n as f64).cos().powi(2))
            .collect();
        assert_abs_diff_eq!(period_integral(&cos2), 0.5, epsilon = 1e-13);
        let cos1: Vec<f64> = (0..n)
            .map(|j| (TAU * j as f64 / n as f64).cos())
            .collect();
        assert_abs_diff_eq!(period_integral(&cos1), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn integral_of_derivative_vanishes() {
        let p = PeriodicPotential::new(vec![0.1, 0.8, 0.0, -0.3], vec![0.4]);
        for j in 1..=3 {
            let d = p.derivative(j).unwrap();
            assert!(period_integral(&d.samples()).abs() < 1e-12);
        }
    }

    #[test]
    fn product_is_exact() {
        let a = PeriodicPotential::cosine(1, 2.0);
        let sq = a.mul(&a); // 4cos^2 = 2 + 2cos(4 pi x)
        assert_abs_diff_eq!(sq.mean(), 2.0, epsilon = 1e-14);
        for &x in &[0.1, 0.33, 0.9] {
            assert_abs_diff_eq!(sq.eval(x), a.eval(x) * a.eval(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn from_samples_round_trip() {
        let p = PeriodicPotential::new(vec![0.2, 1.0, -0.4], vec![0.3, 0.0, 0.7]);
        let q = PeriodicPotential::from_samples(&p.samples()).unwrap();
        for &x in &[0.0, 0.19, 0.55, 0.83] {
            assert_abs_diff_eq!(p.eval(x), q.eval(x), epsilon = 1e-10);
        }
    }

    #[test]
    fn translate_and_cumulative() {
        let p = PeriodicPotential::new(vec![0.5, 1.0], vec![0.2]);
        let t = p.translate(0.3);
        for &x in &[0.0, 0.4, 0.9] {
            assert_abs_diff_eq!(t.eval(x), p.eval(x + 0.3), epsilon = 1e-12);
        }
        // int_0^x (0.5 + cos + 0.2 sin)
        let x = 0.37;
        let expect = 0.5 * x + (TAU * x).sin() / TAU + 0.2 * (1.0 - (TAU * x).cos()) / TAU;
        assert_abs_diff_eq!(p.cumulative_integral(x), expect, epsilon = 1e-13);
    }
}
