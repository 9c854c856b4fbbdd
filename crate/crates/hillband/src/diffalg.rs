//! Exact differential-polynomial algebra over the jet variables
//! `u_0 = p, u_1 = p', u_2 = p'', ...` with arbitrary-precision rational
//! coefficients.
//!
//! The recursion `k_{j+1} = -k_j' - sum_{s=1}^{j-1} k_{j-s} k_s` generates
//! the coefficient hierarchy of the high-energy Riccati expansion; the
//! trace-formula coefficients `P_j` and the model functions `xi_m`, `rho`,
//! `omega`, `tau`, `K_m` are derived from it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::potential::{PeriodicPotential, MAX_JET_ORDER};
use crate::C64;

/// Exponent vector over the jet variables, trailing zeros trimmed.
/// Ordered by total degree first, then lexicographically; this makes the
/// serialized form deterministic for golden-file comparison.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn var(j: usize) -> Self {
        let mut e = vec![0u32; j + 1];
        e[j] = 1;
        Monomial(e)
    }

    pub fn one() -> Self {
        Monomial(vec![])
    }

    fn trim(mut v: Vec<u32>) -> Self {
        while v.last() == Some(&0) {
            v.pop();
        }
        Monomial(v)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn highest_jet(&self) -> Option<usize> {
        self.0.iter().rposition(|&e| e > 0)
    }

    fn mul(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let mut v = vec![0u32; n];
        for (i, e) in v.iter_mut().enumerate() {
            *e = self.0.get(i).copied().unwrap_or(0) + other.0.get(i).copied().unwrap_or(0);
        }
        Monomial::trim(v)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial in the jet variables with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffPolynomial {
    terms: BTreeMap<Monomial, BigRational>,
}

impl DiffPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The single variable `u_j`.
    pub fn var(j: usize) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(j), BigRational::one());
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn highest_jet(&self) -> Option<usize> {
        self.terms.keys().filter_map(|m| m.highest_jet()).max()
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut r = self.clone();
        for (m, c) in &other.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> Self {
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            r.terms.insert(m.clone(), -c.clone());
        }
        r
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut r = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                r.add_term(ma.mul(mb), ca * cb);
            }
        }
        r
    }

    /// Total x-derivative: `d/dx u_j = u_{j+1}` extended by Leibniz.
    pub fn diff_x(&self) -> Self {
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            for (j, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let mut v = m.0.clone();
                v[j] -= 1;
                let bumped = Monomial::trim(v).mul(&Monomial::var(j + 1));
                r.add_term(bumped, c * BigRational::from(BigInt::from(e)));
            }
        }
        r
    }

    /// Substitute the jet of `p` and return the result as an exact
    /// trigonometric series.
    pub fn eval_on(&self, p: &PeriodicPotential) -> Result<PeriodicPotential> {
        if let Some(j) = self.highest_jet() {
            if j > MAX_JET_ORDER {
                return Err(Error::Capability(format!(
                    "jet variable u_{j} exceeds budget {MAX_JET_ORDER}"
                )));
            }
        }
        let mut derivs: Vec<PeriodicPotential> = Vec::new();
        let mut result = PeriodicPotential::zero();
        for (m, c) in &self.terms {
            let mut term = PeriodicPotential::constant(rational_to_f64(c));
            for (j, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while derivs.len() <= j {
                    let order = derivs.len();
                    derivs.push(p.derivative(order)?);
                }
                for _ in 0..e {
                    term = term.mul(&derivs[j]);
                }
            }
            result = result.add(&term);
        }
        Ok(result)
    }

    /// Canonical text form, e.g. `+1*u2 -1*u0^2`.
    pub fn canonical_string(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let sign = if c.is_negative() { '-' } else { '+' };
            out.push(sign);
            let a = c.abs();
            if a.denom().is_one() {
                let _ = write!(out, "{}", a.numer());
            } else {
                let _ = write!(out, "{}/{}", a.numer(), a.denom());
            }
            for (j, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if e == 1 {
                    let _ = write!(out, "*u{j}");
                } else {
                    let _ = write!(out, "*u{j}^{e}");
                }
            }
        }
        out
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    // exact for the coefficient sizes this hierarchy produces at m <= 9
    let n = r.numer();
    let d = r.denom();
    let nf = n.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = d.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df
}

/// `[k_1, ..., k_m]` generated by the recursion
/// `k_{j+1} = -k_j' - sum_{s=1}^{j-1} k_{j-s} k_s`, `k_1 = p`.
pub fn kappa_sequence(m: usize) -> Result<Vec<DiffPolynomial>> {
    if m == 0 {
        return Ok(vec![]);
    }
    // k_m contains p^{(m-1)}
    if m - 1 > MAX_JET_ORDER {
        return Err(Error::Capability(format!(
            "kappa_{m} needs jet order {} > budget {MAX_JET_ORDER}",
            m - 1
        )));
    }
    let mut ks: Vec<DiffPolynomial> = vec![DiffPolynomial::var(0)];
    for j in 1..m {
        let mut next = ks[j - 1].diff_x().neg();
        for s in 1..j {
            next = next.sub(&ks[j - 1 - s].mul(&ks[s - 1]));
        }
        ks.push(next);
    }
    Ok(ks)
}

/// `P_{-1}, ..., P_{m-1}` via `P_{j-1} = (-1)^j 2^{-(2j+1)} int_0^1 k_{2j+1}`.
pub fn coefficients_p(p: &PeriodicPotential, m: usize) -> Result<Vec<f64>> {
    let ks = kappa_sequence(2 * m + 1)?;
    let mut out = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let series = ks[2 * j].eval_on(p)?; // k_{2j+1}
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        out.push(sign * series.mean() / 2f64.powi(2 * j as i32 + 1));
    }
    Ok(out)
}

/// Cross-validation of the closed-form trace coefficients
/// `P_j = (||p^(j)||^2 + int F_j) / 2^(3+2j)` with
/// `F_1 = 2p^3`, `F_2 = 10 p p'^2 + 5 p^4`, `F_3 = 14 p p''^2 + 70 p^2 p'^2 + 112 p^5`
/// against the kappa-recursion route.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FFormulaReport {
    /// `(j, P_j via F-formula, P_j via kappa route, relative discrepancy)`
    pub entries: Vec<(usize, f64, f64, f64)>,
    pub max_rel_discrepancy: f64,
}

pub fn check_f_formulas(p: &PeriodicPotential) -> Result<FFormulaReport> {
    let via_kappa = coefficients_p(p, 4)?; // P_{-1}..P_3
    let d1 = p.derivative(1)?;
    let d2 = p.derivative(2)?;
    let d3 = p.derivative(3)?;
    let p2 = p.mul(p);
    let p3 = p2.mul(p);
    let p4 = p2.mul(&p2);
    let p5 = p4.mul(p);
    let f1 = p3.scale(2.0);
    let f2 = p.mul(&d1.mul(&d1)).scale(10.0).add(&p4.scale(5.0));
    let f3 = p
        .mul(&d2.mul(&d2))
        .scale(14.0)
        .add(&p2.mul(&d1.mul(&d1)).scale(70.0))
        .add(&p5.scale(112.0));
    let via_f = [
        (1usize, d1.norm_sq() + f1.mean()),
        (2, d2.norm_sq() + f2.mean()),
        (3, d3.norm_sq() + f3.mean()),
    ];
    let mut entries = Vec::new();
    let mut max_rel = 0.0f64;
    for (j, num) in via_f {
        let pf = num / 2f64.powi(3 + 2 * j as i32);
        let pk = via_kappa[j + 1];
        let scale = pf.abs().max(pk.abs()).max(1e-300);
        let rel = (pf - pk).abs() / scale;
        max_rel = max_rel.max(rel);
        entries.push((j, pf, pk, rel));
    }
    Ok(FFormulaReport {
        entries,
        max_rel_discrepancy: max_rel,
    })
}

/// `K_n(z)` evaluated from a coefficient list (`coeffs[j]` holds `P_{j-1}`);
/// requires `coeffs.len() > n`.
pub fn k_big_series(coeffs: &[f64], n: usize, z: C64) -> C64 {
    assert!(coeffs.len() > n, "K_{n} needs P_{{-1}}..P_{}", n as i64 - 1);
    let mut acc = C64::new(0.0, 0.0);
    let z2 = z * z;
    for j in (0..=n).rev() {
        acc = acc / z2 + coeffs[j] / z2;
    }
    acc * z
}

/// Precomputed data for the model functions of a fixed expansion order:
/// the trace coefficients `P_j`, the period integrals of the `k_j`, and
/// cumulative-integral tables feeding `xi_m`.
#[derive(Debug, Clone)]
pub struct AsymptoticModel {
    pub m: usize,
    /// `P_{-1}, P_0, ..., P_{m-1}` (index j holds `P_{j-1}`).
    pub p_coeffs: Vec<f64>,
    /// `int_0^1 k_j dt` for j = 1..=m.
    pub kappa_int: Vec<f64>,
    /// `k_j(0)` for j = 1..=m.
    kappa_at_zero: Vec<f64>,
    /// evaluated series of `k_j` for j = 1..=m (mean-zero parts integrate
    /// spectrally between grid points).
    kappa_series: Vec<PeriodicPotential>,
}

impl AsymptoticModel {
    pub fn new(p: &PeriodicPotential, m: usize) -> Result<Self> {
        let ks = kappa_sequence(m.max(1))?;
        let mut kappa_int = Vec::new();
        let mut kappa_at_zero = Vec::new();
        let mut kappa_series = Vec::new();
        for k in ks.iter().take(m) {
            let series = k.eval_on(p)?;
            kappa_int.push(series.mean());
            kappa_at_zero.push(series.eval(0.0));
            kappa_series.push(series);
        }
        let p_order = m / 2; // K_m needs P up to P_{m-1}
        let p_coeffs = coefficients_p(p, p_order.max(1))?;
        Ok(Self {
            m,
            p_coeffs,
            kappa_int,
            kappa_at_zero,
            kappa_series,
        })
    }

    /// `K_n(z) = P_{-1}/z + P_0/z^3 + ... + P_{n-1}/z^{2n+1}`.
    pub fn k_big(&self, n: usize, z: C64) -> C64 {
        k_big_series(&self.p_coeffs, n, z)
    }

    /// `xi_m(x, z) = z x - i sum_{j=1}^m (int_0^x k_j) / (2 i z)^j`.
    pub fn xi(&self, x: f64, z: C64) -> Result<C64> {
        if z.norm() == 0.0 {
            return Err(Error::Domain("xi_m is undefined at z = 0".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        let w = 2.0 * C64::i() * z;
        let mut wp = C64::new(1.0, 0.0);
        for series in self.kappa_series.iter() {
            wp *= w;
            acc += series.cumulative_integral(x) / wp;
        }
        Ok(z * x - C64::i() * acc)
    }

    /// `xi(z) = xi_m(1, z)`.
    pub fn xi_at_one(&self, z: C64) -> Result<C64> {
        if z.norm() == 0.0 {
            return Err(Error::Domain("xi is undefined at z = 0".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        let w = 2.0 * C64::i() * z;
        let mut wp = C64::new(1.0, 0.0);
        for &kint in self.kappa_int.iter() {
            wp *= w;
            acc += kint / wp;
        }
        Ok(z - C64::i() * acc)
    }

    /// x-derivative of the model phase: `xi_m'(x, z) = z - i sum k_j(x)/(2iz)^j`.
    pub fn xi_prime(&self, x: f64, z: C64) -> Result<C64> {
        if z.norm() == 0.0 {
            return Err(Error::Domain("xi_m' is undefined at z = 0".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        let w = 2.0 * C64::i() * z;
        let mut wp = C64::new(1.0, 0.0);
        for series in self.kappa_series.iter() {
            wp *= w;
            acc += series.eval(x) / wp;
        }
        Ok(z - C64::i() * acc)
    }

    /// `rho(z) = i z + sum_{j=1}^m k_j(0)/(2iz)^j`.
    pub fn rho(&self, z: C64) -> Result<C64> {
        if z.norm() == 0.0 {
            return Err(Error::Domain("rho is undefined at z = 0".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        let w = 2.0 * C64::i() * z;
        let mut wp = C64::new(1.0, 0.0);
        for &k0 in self.kappa_at_zero.iter() {
            wp *= w;
            acc += k0 / wp;
        }
        Ok(C64::i() * z + acc)
    }

    /// Odd/even splits of `rho`: `(rho, omega, tau)` with
    /// `omega = (rho(z) - rho(-z)) / 2i`, `tau = (rho(z) + rho(-z)) / 2`,
    /// so that `rho = tau + i omega`.
    pub fn rho_omega_tau(&self, z: C64) -> Result<(C64, C64, C64)> {
        let rp = self.rho(z)?;
        let rm = self.rho(-z)?;
        let omega = (rp - rm) / (2.0 * C64::i());
        let tau = (rp + rm) / 2.0;
        Ok((rp, omega, tau))
    }
}

/// Canonical multi-line dump of `k_1..k_m` for golden-file comparison.
pub fn dump_kappa(m: usize) -> Result<String> {
    let ks = kappa_sequence(m)?;
    let mut out = String::new();
    for (i, k) in ks.iter().enumerate() {
        let _ = writeln!(out, "k{} = {}", i + 1, k.canonical_string());
    }
    Ok(out)
}
