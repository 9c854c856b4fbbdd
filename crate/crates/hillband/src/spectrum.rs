//! Band edges, momentum gaps and the comb data of the discriminant:
//! edges E_n^+-, heights h_n, maximizers e_n, gap masses M_n, moments Q_m,
//! the Y_n functions and the weighted sums S_n.

use crate::error::{Error, Result};
use crate::monodromy::{monodromy, monodromy_at_energy, Equation, EnergyMonodromy, OdeSettings};
use crate::numerics::{bracketed_root, newton_in_bracket, GL64};
use crate::C64;

/// A Hill-type operator presented through its discriminant.
pub struct Operator<'a> {
    pub eq: Equation<'a>,
    pub settings: OdeSettings,
}

impl<'a> Operator<'a> {
    pub fn new(eq: Equation<'a>) -> Self {
        Operator {
            eq,
            settings: OdeSettings::default(),
        }
    }

    pub fn at_energy(&self, lambda: f64) -> Result<EnergyMonodromy> {
        monodromy_at_energy(&self.eq, lambda, &self.settings)
    }

    /// `(Delta, dDelta/dz)` at real momentum `z`.
    pub fn delta_dz(&self, z: f64) -> Result<(f64, f64)> {
        let sol = monodromy(&self.eq, C64::new(z, 0.0), None, &self.settings)?;
        Ok((sol.delta.re, sol.delta_z.re))
    }

    /// Full complex monodromy at `z`.
    pub fn solve(&self, z: C64) -> Result<crate::monodromy::MonodromySolution> {
        monodromy(&self.eq, z, None, &self.settings)
    }
}

/// Smallest real energy with `Delta = 1` (the bottom of the spectrum).
pub fn ground_energy(op: &Operator) -> Result<f64> {
    // walk down until safely below the spectrum
    let mut lo = -1.0f64;
    loop {
        if op.at_energy(lo)?.delta > 1.0 {
            break;
        }
        lo *= 2.0;
        if lo < -1e6 {
            return Err(Error::RootFind("no point below the spectrum found".into()));
        }
    }
    // walk up until Delta < 1 (inside the first band)
    let step = 0.25;
    let mut a = lo;
    let mut hi;
    loop {
        hi = a + step;
        if op.at_energy(hi)?.delta < 1.0 {
            break;
        }
        a = hi;
        if a > 1e6 {
            return Err(Error::RootFind("no band found above the spectrum bottom".into()));
        }
    }
    newton_in_bracket(
        |lam| {
            let em = op.at_energy(lam)?;
            Ok((em.delta - 1.0, em.delta_dlambda))
        },
        a,
        hi,
        0.5 * (a + hi),
        1e-12,
    )
}

/// Comb data of the first `n_gaps` momentum gaps.
#[derive(Clone, Debug)]
pub struct BandStructure {
    pub n_gaps: usize,
    /// Ground edge `E_0^+` of the operator as given (0 when normalized).
    pub e0: f64,
    /// Energy edges `E_n^-`, `E_n^+`, n = 1..N.
    pub energy_minus: Vec<f64>,
    pub energy_plus: Vec<f64>,
    /// Momentum edges `e_n^+- = sqrt(E_n^+-)`.
    pub e_minus: Vec<f64>,
    pub e_plus: Vec<f64>,
    /// Maximizer `e_n` of v in the gap (root of Delta').
    pub e_max: Vec<f64>,
    /// Comb heights `h_n = arccosh |Delta(e_n)|`.
    pub h: Vec<f64>,
    /// Gap masses `M_n = (1/pi) int_{g_n} v`.
    pub mass: Vec<f64>,
    pub degenerate: Vec<bool>,
    /// Minimal momentum band length `min_n |sigma_n|` over the computed range.
    pub s_min: f64,
}

impl BandStructure {
    pub fn gap_center(&self, n: usize) -> f64 {
        0.5 * (self.e_minus[n - 1] + self.e_plus[n - 1])
    }
    pub fn gap_halfwidth(&self, n: usize) -> f64 {
        0.5 * (self.e_plus[n - 1] - self.e_minus[n - 1])
    }
    /// Momentum gap length `|g_n|`.
    pub fn gap_len(&self, n: usize) -> f64 {
        self.e_plus[n - 1] - self.e_minus[n - 1]
    }
    /// Energy gap length `|gamma_n|`.
    pub fn gamma_len(&self, n: usize) -> f64 {
        self.energy_plus[n - 1] - self.energy_minus[n - 1]
    }
    pub fn h_sup(&self) -> f64 {
        self.h.iter().cloned().fold(0.0, f64::max)
    }
    /// True if real `t` lies in the closed gap `n`.
    pub fn in_gap(&self, n: usize, t: f64) -> bool {
        t >= self.e_minus[n - 1] && t <= self.e_plus[n - 1]
    }
    /// Gap index whose closure contains `t`, if any.
    pub fn gap_containing(&self, t: f64) -> Option<usize> {
        let ta = t.abs();
        (1..=self.n_gaps).find(|&n| !self.degenerate[n - 1] && self.in_gap(n, ta))
    }
    /// `v_n(t) = |(t - e_n^+)(t - e_n^-)|^{1/2}` of (the square-root factor
    /// carrying the edge behavior of v on gap n).
    pub fn v_sqrt(&self, n: usize, t: f64) -> f64 {
        ((t - self.e_plus[n - 1]) * (t - self.e_minus[n - 1])).abs().sqrt()
    }
}

const DEGENERACY_GAP_WIDTH: f64 = 1e-9;
const DEGENERACY_DELTA: f64 = 1e-12;

fn sign_n(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Locate the first `n_gaps` gaps of `op`.  The operator is used as given;
/// callers wanting the `E_0^+ = 0` normalization shift the potential first.
pub fn band_structure(op: &Operator, n_gaps: usize) -> Result<BandStructure> {
    if n_gaps == 0 {
        return Err(Error::Config("n_gaps must be >= 1".into()));
    }
    let e0 = ground_energy(op)?;
    if e0 > 1e-6 {
        return Err(Error::Domain(format!(
            "spectrum bottom at E = {e0:.3e} > 0; shift the potential so E_0^+ <= 0"
        )));
    }

    // extrema of Delta along the momentum axis: one per gap
    let z_lo = 0.05;
    let z_hi = (n_gaps as f64 + 1.0) * std::f64::consts::PI + 0.5;
    let step = 0.1;
    let need = n_gaps + 1;
    let mut extrema = Vec::with_capacity(need);
    let mut z_prev = z_lo;
    let mut d_prev = op.delta_dz(z_prev)?.1;
    let mut z = z_lo + step;
    while z <= z_hi && extrema.len() < need {
        let d = op.delta_dz(z)?.1;
        if d_prev == 0.0 {
            extrema.push(z_prev);
        } else if d_prev.signum() != d.signum() {
            let root = bracketed_root(|t| Ok(op.delta_dz(t)?.1), z_prev, z, 1e-12)?;
            extrema.push(root);
        }
        z_prev = z;
        d_prev = d;
        z += step;
    }
    if extrema.len() < need {
        return Err(Error::RootFind(format!(
            "found {} discriminant extrema, need {need}",
            extrema.len()
        )));
    }

    let mut bands = BandStructure {
        n_gaps,
        e0,
        energy_minus: Vec::new(),
        energy_plus: Vec::new(),
        e_minus: Vec::new(),
        e_plus: Vec::new(),
        e_max: Vec::new(),
        h: Vec::new(),
        mass: Vec::new(),
        degenerate: Vec::new(),
        s_min: f64::INFINITY,
    };

    for n in 1..=n_gaps {
        let en = extrema[n - 1];
        let sn = sign_n(n);
        let (delta_en, _) = op.delta_dz(en)?;
        let dn = sn * delta_en;
        if dn < 1.0 - 1e-8 {
            return Err(Error::Interlacing(format!(
                "extremum {n} at z = {en:.6} has (-1)^n Delta = {dn:.12} < 1"
            )));
        }
        let mut degenerate = dn - 1.0 <= DEGENERACY_DELTA;
        let (mut em, mut ep) = (en, en);
        if !degenerate {
            let f = |t: f64| -> Result<(f64, f64)> {
                let (d, dz) = op.delta_dz(t)?;
                Ok((sn * d - 1.0, sn * dz))
            };
            let left_anchor = if n == 1 { z_lo } else { extrema[n - 2] };
            em = newton_in_bracket(f, left_anchor, en, 0.5 * (left_anchor + en), 1e-12)?;
            ep = newton_in_bracket(f, en, extrema[n], 0.5 * (en + extrema[n]), 1e-12)?;
            if ep - em < DEGENERACY_GAP_WIDTH {
                degenerate = true;
                let mid = 0.5 * (em + ep);
                em = mid;
                ep = mid;
            }
        }
        let h = if degenerate { 0.0 } else { dn.acosh() };
        bands.e_minus.push(em);
        bands.e_plus.push(ep);
        bands.e_max.push(en);
        bands.energy_minus.push(em * em);
        bands.energy_plus.push(ep * ep);
        bands.h.push(h);
        bands.degenerate.push(degenerate);
    }

    // interlacing and band lengths
    let mut prev_plus = 0.0f64;
    for n in 1..=n_gaps {
        let em = bands.e_minus[n - 1];
        if em < prev_plus - 1e-9 {
            return Err(Error::Interlacing(format!(
                "gap {n} left edge {em:.9} below previous right edge {prev_plus:.9}"
            )));
        }
        bands.s_min = bands.s_min.min(em - prev_plus);
        prev_plus = bands.e_plus[n - 1];
    }

    // gap masses via the cosine-substitution quadrature
    for n in 1..=n_gaps {
        if bands.degenerate[n - 1] {
            bands.mass.push(0.0);
            continue;
        }
        let mut m = 0.0;
        for (t, w) in gap_quadrature(&bands, n) {
            m += w * v_on_gap(op, &bands, n, t)?;
        }
        bands.mass.push(m / std::f64::consts::PI);
    }
    Ok(bands)
}

/// `(e_n, h_n)` of gap n (midpoint and 0 when degenerate).
pub fn gap_height(bands: &BandStructure, n: usize) -> (f64, f64) {
    (bands.e_max[n - 1], bands.h[n - 1])
}

/// `v(t + i0) = arccosh |Delta(t)|` for `t` in the closed gap n.
pub fn v_on_gap(op: &Operator, bands: &BandStructure, n: usize, t: f64) -> Result<f64> {
    if !bands.in_gap(n, t) {
        return Err(Error::Domain(format!("t = {t} outside gap {n}")));
    }
    let (d, _) = op.delta_dz(t)?;
    Ok(d.abs().max(1.0).acosh())
}

/// Quadrature nodes/weights for `int_{g_n} f(t) dt` under `t = c + r cos
/// theta`, which absorbs the square-root vanishing of v at the edges.
pub fn gap_quadrature(bands: &BandStructure, n: usize) -> Vec<(f64, f64)> {
    if bands.degenerate[n - 1] {
        return Vec::new();
    }
    let c = bands.gap_center(n);
    let r = bands.gap_halfwidth(n);
    let half_pi = 0.5 * std::f64::consts::PI;
    let (xs, ws) = (&GL64.0, &GL64.1);
    xs.iter()
        .zip(ws)
        .map(|(&x, &w)| {
            let theta = half_pi * (x + 1.0);
            (c + r * theta.cos(), half_pi * w * r * theta.sin())
        })
        .collect()
}

/// Per-gap tables of v on the quadrature nodes; the basis of every gap
/// integral downstream.
#[derive(Clone, Debug)]
pub struct GapTables {
    /// `(t_i, w_i, v(t_i))` per gap, empty for degenerate gaps.
    pub rows: Vec<Vec<(f64, f64, f64)>>,
    /// Geometric-extrapolation estimate of the mass beyond the last gap.
    pub tail_mass: f64,
}

impl GapTables {
    pub fn build(op: &Operator, bands: &BandStructure) -> Result<GapTables> {
        let mut rows = Vec::with_capacity(bands.n_gaps);
        for n in 1..=bands.n_gaps {
            let mut row = Vec::new();
            for (t, w) in gap_quadrature(bands, n) {
                row.push((t, w, v_on_gap(op, bands, n, t)?));
            }
            rows.push(row);
        }
        Ok(GapTables {
            rows,
            tail_mass: tail_mass_estimate(bands),
        })
    }

    /// `int_{g_n} f(t) v(t) dt`.
    pub fn gap_integral<F: Fn(f64) -> f64>(&self, n: usize, f: F) -> f64 {
        self.rows[n - 1].iter().map(|&(t, w, v)| w * v * f(t)).sum()
    }

    /// Complex-valued variant of `gap_integral`.
    pub fn gap_integral_c<F: Fn(f64) -> C64>(&self, n: usize, f: F) -> C64 {
        self.rows[n - 1]
            .iter()
            .map(|&(t, w, v)| w * v * f(t))
            .sum()
    }
}

fn tail_mass_estimate(bands: &BandStructure) -> f64 {
    let nz: Vec<f64> = bands
        .mass
        .iter()
        .cloned()
        .filter(|&m| m > 0.0)
        .collect();
    if nz.len() < 2 {
        return 0.0;
    }
    let last = *nz.last().unwrap();
    let prev = nz[nz.len() - 2];
    let ratio = (last / prev).min(0.9);
    last * ratio / (1.0 - ratio)
}

/// Moments `Q_m = (1/pi) int_R t^m v(t+i0) dt`, m = 0..m_max, with mirror
/// gaps accounted for by evenness (odd moments are identically 0).
/// Returns `(Q, tail)` where `tail[m]` estimates the neglected gaps.
pub fn moments(bands: &BandStructure, tables: &GapTables, m_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mut q = vec![0.0; m_max + 1];
    let mut tail = vec![0.0; m_max + 1];
    for n in 1..=bands.n_gaps {
        for m in (0..=m_max).step_by(2) {
            q[m] += 2.0 / std::f64::consts::PI * tables.gap_integral(n, |t| t.powi(m as i32));
        }
    }
    let t_next = (bands.n_gaps as f64 + 1.0) * std::f64::consts::PI;
    for m in (0..=m_max).step_by(2) {
        // crude Chebyshev-style scaling of the mass tail
        tail[m] = 2.0 * tables.tail_mass * t_next.powi(m as i32) * 1.5;
    }
    (q, tail)
}

/// The two evaluations of `Y_n` at `t` in gap n per (direct ratio vs the
/// complement integral); the direct form is absent at the edges where it
/// degenerates to 0/0.
#[derive(Clone, Copy, Debug)]
pub struct YnValue {
    pub direct: Option<f64>,
    pub integral: f64,
}

pub fn y_n_function(
    op: &Operator,
    bands: &BandStructure,
    tables: &GapTables,
    n: usize,
    t: f64,
) -> Result<YnValue> {
    if bands.degenerate[n - 1] {
        return Err(Error::Domain(format!("gap {n} is degenerate")));
    }
    if !bands.in_gap(n, t) {
        return Err(Error::Domain(format!("t = {t} outside gap {n}")));
    }
    let vsq = bands.v_sqrt(n, t);
    let edge_dist = (t - bands.e_minus[n - 1]).min(bands.e_plus[n - 1] - t);
    let direct = if edge_dist > 1e-7 {
        Some(v_on_gap(op, bands, n, t)? / vsq - 1.0)
    } else {
        None
    };

    let mut sum = 0.0;
    for j in 1..=bands.n_gaps {
        if bands.degenerate[j - 1] {
            continue;
        }
        if j != n {
            sum += tables.gap_integral(j, |u| 1.0 / (bands.v_sqrt(n, u) * (u - t).abs()));
        }
        // mirror gap g_{-j}; v is even, v_n picks up reflected arguments
        sum += tables.gap_integral(j, |u| {
            let vn_m = ((u + bands.e_plus[n - 1]) * (u + bands.e_minus[n - 1])).abs().sqrt();
            1.0 / (vn_m * (u + t).abs())
        });
    }
    Ok(YnValue {
        direct,
        integral: sum / std::f64::consts::PI,
    })
}

/// Maximum of the integral form of `Y_n` over a uniform interior grid.
pub fn y_n_sup(
    op: &Operator,
    bands: &BandStructure,
    tables: &GapTables,
    n: usize,
    grid: usize,
) -> Result<f64> {
    let mut sup: f64 = 0.0;
    let (a, b) = (bands.e_minus[n - 1], bands.e_plus[n - 1]);
    for i in 0..grid {
        let t = a + (b - a) * (i as f64 + 0.5) / grid as f64;
        let y = y_n_function(op, bands, tables, n, t)?;
        sup = sup.max(y.integral);
    }
    Ok(sup)
}

/// `S_n(r) = sum_{j in Z} M_j / |n - j|_1` with `|j|_1 = s |j|` for j != 0
/// and `r/2` for j = 0, and `M_{-j} = M_j`, `M_0 = 0`.
pub fn s_n_sum(bands: &BandStructure, n: usize, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Domain("r must be positive".into()));
    }
    let s = bands.s_min;
    let mut sum = 0.0;
    for j in 1..=bands.n_gaps {
        let m = bands.mass[j - 1];
        if m == 0.0 {
            continue;
        }
        // j-th gap
        sum += if j == n {
            m * 2.0 / r
        } else {
            m / (s * (n as f64 - j as f64).abs())
        };
        // mirror gap at index -j
        sum += m / (s * (n as f64 + j as f64));
    }
    Ok(sum)
}
