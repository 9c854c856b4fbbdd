//! Distributional potentials `c + p'`: the Riccati reduction to a smooth
//! first-order-perturbed equation, its monodromy, and the `k_0` estimates
//! of the singular-potential theory ((4.5)-(4.14)).
//!
//! Writing `v = c + p'` with a mean-zero periodic primitive `p`, the
//! substitution `y = eta u`, `eta = exp(int_0^x q)`, turns `-y'' + v y`
//! into `-u'' - 2q u' + (c - q^2) u` provided q solves the Riccati
//! equation `p' = q' + q^2 - ||q||^2`.  Everything downstream (bands,
//! quasimomentum, comb properties) then runs on the transformed equation.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::monodromy::{monodromy, Equation, MonodromySolution, OdeSettings};
use crate::numerics::linear_fit;
use crate::potential::PeriodicPotential;
use crate::quasimomentum::QuasimomentumMap;
use crate::spectrum::{ground_energy, s_n_sum, y_n_sup, Operator};
use crate::C64;

const RICCATI_TOL: f64 = 1e-10;
const RICCATI_MAX_ITERS: usize = 50;

#[derive(Clone, Debug)]
pub struct RiccatiSolution {
    /// Mean-zero primitive of the singular part.
    pub p: PeriodicPotential,
    /// Mean-zero solution of `p' = q' + q^2 - ||q||^2`.
    pub q: PeriodicPotential,
    /// `||q||^2` over one period.
    pub norm_q_sq: f64,
    /// Constant calibrated so the transformed operator has `E_0^+ = 0`.
    pub c: f64,
    /// Final sup-norm residual of the Riccati equation on the grid.
    pub residual: f64,
}

impl RiccatiSolution {
    /// The transformed equation with its effective constant `c - ||q||^2`.
    pub fn equation(&self) -> Equation<'_> {
        Equation::Transformed {
            q: &self.q,
            c: self.c - self.norm_q_sq,
        }
    }
}

/// Residual field `G(q) = q - p - D^{-1}(||q||^2 - q^2)` where `D^{-1}`
/// is the mean-zero primitive; `G(q) = 0` iff (4.5) holds with mean-zero
/// q.  Inverting the derivative exactly keeps the system well-scaled.
fn riccati_field(p: &PeriodicPotential, q: &PeriodicPotential) -> Result<PeriodicPotential> {
    let q2 = q.mul(q);
    let fluct = q2.add_const(-q2.mean()); // q^2 - ||q||^2, mean-zero
    let prim = fluct.primitive_mean_zero()?;
    Ok(q.add(&p.scale(-1.0)).add(&prim))
}

// unknown vector layout: [a_1, b_1, a_2, b_2, ...] with a_n the cos(2 pi
// n x) and b_n the sin(2 pi n x) coefficient (sin_coeffs index n - 1)
fn coeff_vector(f: &PeriodicPotential, h: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * h);
    for n in 1..=h {
        v.push(f.cos_coeffs().get(n).copied().unwrap_or(0.0));
        v.push(f.sin_coeffs().get(n - 1).copied().unwrap_or(0.0));
    }
    v
}

fn potential_from_vector(v: &[f64], h: usize) -> PeriodicPotential {
    let mut cos = vec![0.0; h + 1];
    let mut sin = vec![0.0; h];
    for n in 1..=h {
        cos[n] = v[2 * (n - 1)];
        sin[n - 1] = v[2 * (n - 1) + 1];
    }
    PeriodicPotential::new(cos, sin)
}

fn basis_potential(i: usize, h: usize) -> PeriodicPotential {
    let mut v = vec![0.0; 2 * h];
    v[i] = 1.0;
    potential_from_vector(&v, h)
}

/// Sup-norm residual of (4.5) itself, `|p' - q' - q^2 + ||q||^2|`.
fn riccati_residual(p: &PeriodicPotential, q: &PeriodicPotential) -> Result<f64> {
    let dp = p.derivative(1)?;
    let dq = q.derivative(1)?;
    let q2 = q.mul(q);
    let nq = q2.mean();
    let mut worst = 0.0f64;
    for i in 0..512 {
        let x = i as f64 / 512.0;
        worst = worst.max((dp.eval(x) - dq.eval(x) - q2.eval(x) + nq).abs());
    }
    Ok(worst)
}

/// Newton iteration for (4.5) over the Fourier coefficients of q,
/// starting from `q_0 = p`.  The constant `c` is calibrated afterwards so
/// that the transformed operator's spectrum starts at 0.
pub fn riccati_solve(p: &PeriodicPotential) -> Result<RiccatiSolution> {
    if p.mean().abs() > 1e-10 {
        return Err(Error::Config(format!(
            "Riccati primitive must be mean-zero (mean = {:e})",
            p.mean()
        )));
    }
    let h_p = p.highest_harmonic();
    let h = (2 * h_p + 8).max(32);
    let dim = 2 * h;
    let mut q = p.clone();

    let mut residual = riccati_residual(p, &q)?;
    let mut iters = 0;
    while residual > RICCATI_TOL {
        if iters >= RICCATI_MAX_ITERS {
            return Err(Error::NonConvergence(format!(
                "Riccati Newton stalled at residual {residual:e} after {iters} iterations"
            )));
        }
        iters += 1;

        let g = riccati_field(p, &q)?;
        let rhs: Vec<f64> = coeff_vector(&g, h).iter().map(|x| -x).collect();
        // Jacobian column i: dG = delta + 2 D^{-1}((q delta)_{mean-zero})
        let mut jac = vec![vec![0.0f64; dim]; dim];
        for i in 0..dim {
            let basis = basis_potential(i, h);
            let cross = q.mul(&basis).scale(2.0);
            let fluct = cross.add_const(-cross.mean());
            let col_pot = basis.add(&fluct.primitive_mean_zero()?);
            let col = coeff_vector(&col_pot, h);
            for (row, &val) in col.iter().enumerate() {
                jac[row][i] = val;
            }
        }
        let step = crate::numerics::lu_solve(&mut jac, &rhs)?;
        let mut qv = coeff_vector(&q, h);
        for (x, s) in qv.iter_mut().zip(&step) {
            *x += s;
        }
        q = potential_from_vector(&qv, h);
        residual = riccati_residual(p, &q)?;
    }
    q.trim(1e-15);

    // calibrate the effective constant: adding a constant to the
    // transformed equation shifts the spectrum rigidly, so one
    // ground-energy evaluation determines it; further passes polish the
    // root.
    let mut c_eff = 0.0;
    for _ in 0..3 {
        let eq = Equation::Transformed { q: &q, c: c_eff };
        let op = Operator::new(eq);
        let e0 = ground_energy(&op)?;
        c_eff -= e0;
        if e0.abs() < 1e-10 {
            break;
        }
    }
    {
        let eq = Equation::Transformed { q: &q, c: c_eff };
        let op = Operator::new(eq);
        let e0 = ground_energy(&op)?;
        if e0.abs() > 1e-8 {
            return Err(Error::RootFind(format!(
                "c calibration left E_0^+ = {e0:e}"
            )));
        }
    }

    let norm_q_sq = q.norm_sq();
    Ok(RiccatiSolution {
        p: p.clone(),
        q,
        norm_q_sq,
        // effective constant is c - ||q||^2, so the potential constant is
        c: c_eff + norm_q_sq,
        residual,
    })
}

/// Forward construction: the primitive p whose Riccati solution is the
/// given mean-zero q, i.e. `p = q + D^{-1}(q^2 - ||q||^2)`.
pub fn primitive_from_riccati(q: &PeriodicPotential) -> Result<PeriodicPotential> {
    if q.mean().abs() > 1e-12 {
        return Err(Error::Config("q must be mean-zero".into()));
    }
    let q2 = q.mul(q);
    let fluct = q2.add_const(-q2.mean());
    Ok(q.add(&fluct.primitive_mean_zero()?))
}

/// Fundamental system of the transformed equation at momentum z.
pub fn monodromy_transformed(
    sol: &RiccatiSolution,
    z: C64,
    x_grid: Option<&[f64]>,
) -> Result<MonodromySolution> {
    monodromy(&sol.equation(), z, x_grid, &OdeSettings::default())
}

#[derive(Clone, Debug, Serialize)]
pub struct Gap41Row {
    pub n: usize,
    pub gap_len: f64,
    /// max of |k_0| over the gap rim ((4.10)/(4.13) left side).
    pub max_rim_k0: f64,
    /// `max_rim_k0 / |g_n|`; the ideal comb puts this in [1/2, ~0.75].
    pub rim_ratio: f64,
    /// Whether the (4.10) window is meaningful for this gap: on the cut
    /// `Re k_0 = t - pi n` carries the Cauchy-transform offset
    /// ~P_{-1}/(pi n) of the gap center from pi n, so the printed
    /// `|g_n|(1 + O(Y_n^0))` only describes gaps whose length dominates
    /// that floor.
    pub rim_checked: bool,
    pub y_n_sup: f64,
    /// (4.11): measured max on dist = eps vs the bound S_n(eps).
    pub max_on_eps_boundary: f64,
    pub bound_eps: f64,
    /// (4.12): measured max on the V_n boundary vs S_n(1).  The printed
    /// bound's own derivation uses |t - z| >= s|n - j|, which fails by a
    /// factor <= 2 near the vertical sides (the distance to the adjacent
    /// gap there is half a band, not a full band); the inequality is
    /// therefore checked against 2 S_n(1).
    pub max_on_vn_boundary: f64,
    pub bound_one: f64,
    /// (4.14): measured max inside V_n vs S_n(eps) + S_n(s).
    pub max_interior: f64,
    pub bound_interior: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm41Report {
    pub eps: f64,
    pub r: f64,
    pub rows: Vec<Gap41Row>,
    /// (4.7) at a = 2: `sum_n S_n(r)^2` vs `4 Q_0^2 (1/r^2 + 1/s^2)`.
    pub summability_lhs: f64,
    pub summability_rhs: f64,
    /// (4.3)/(4.4): fit of log|k_0(iy)| vs log y (expect -1) and the
    /// measured prefactor vs `||q||^2 / 2`.
    pub sector_slope: f64,
    pub sector_prefactor: f64,
    pub sector_prefactor_expected: f64,
    pub riccati_residual: f64,
    pub c: f64,
    pub norm_q_sq: f64,
    pub tail_mass: f64,
}

/// `|k_0(z)| = |z - k(z)|` through the Cauchy-integral route; the tail
/// allowance for uncomputed gaps is added so bound checks stay honest.
fn k0_upper(map: &QuasimomentumMap, z: C64) -> Result<f64> {
    let ki = map.k_integral(z)?;
    Ok((z - ki.value).norm() + ki.tail)
}

pub fn verify_thm_4_1(sol: &RiccatiSolution, eps: f64, r: f64, n_gaps: usize) -> Result<Thm41Report> {
    if eps <= 0.0 {
        return Err(Error::Config("eps must be positive".into()));
    }
    let r = r.max(PI); // (4.8) requires r > pi
    let op = Operator::new(sol.equation());
    let map = QuasimomentumMap::new(&op, n_gaps, 1)?;
    let bands = &map.bands;

    let mut rows = Vec::new();
    let tested: Vec<usize> = (1..=bands.n_gaps.saturating_sub(1))
        .filter(|&n| !bands.degenerate[n - 1])
        .take(10)
        .collect();
    for &n in &tested {
        let (a, b) = (bands.e_minus[n - 1], bands.e_plus[n - 1]);
        let pin = PI * n as f64;

        // rim of the cut: k = pi n +- i v, so k_0 = (t - pi n) -+ i v
        let mut max_rim = 0.0f64;
        for i in 0..=16 {
            let t = a + (b - a) * i as f64 / 16.0;
            let v = crate::spectrum::v_on_gap(&op, bands, n, t)?;
            max_rim = max_rim.max(((t - pin).powi(2) + v * v).sqrt());
        }

        // (4.11): stadium dist(z, g_n) = eps; top side plus end caps
        let mut max_eps = 0.0f64;
        for i in 0..=8 {
            let t = a + (b - a) * i as f64 / 8.0;
            max_eps = max_eps.max(k0_upper(&map, C64::new(t, eps))?);
        }
        for &(x0, sgn) in &[(a, -1.0f64), (b, 1.0f64)] {
            for &th in &[0.0f64, 0.25 * PI] {
                let z = C64::new(x0 + sgn * eps * th.cos(), eps * th.sin());
                max_eps = max_eps.max(k0_upper(&map, z)?);
            }
        }

        // (4.12): boundary of V_n(r) (upper half; conjugation symmetry)
        let x_lo = 0.5 * (bands.e_minus[n - 1] + if n >= 2 { bands.e_plus[n - 2] } else { 0.0 });
        let x_hi = 0.5 * (bands.e_plus[n - 1] + bands.e_minus[n]);
        let mut max_vn = 0.0f64;
        for i in 0..=6 {
            let x = x_lo + (x_hi - x_lo) * i as f64 / 6.0;
            max_vn = max_vn.max(k0_upper(&map, C64::new(x, r))?);
        }
        for i in 0..=4 {
            let y = 0.02 + (r - 0.02) * i as f64 / 4.0;
            max_vn = max_vn.max(k0_upper(&map, C64::new(x_lo, y))?);
            max_vn = max_vn.max(k0_upper(&map, C64::new(x_hi, y))?);
        }

        // (4.14): interior sample of V_n \ U_n
        let mut max_in = max_vn.max(max_eps);
        for i in 0..5 {
            for j in 0..4 {
                let x = x_lo + (x_hi - x_lo) * (i as f64 + 0.5) / 5.0;
                let y = 0.05 + (r - 0.05) * (j as f64 + 0.5) / 4.0;
                let z = C64::new(x, y);
                if map.dist_to_gaps(z) > eps {
                    max_in = max_in.max(k0_upper(&map, z)?);
                }
            }
        }

        let offset_floor = 0.5 * sol.norm_q_sq / pin;
        rows.push(Gap41Row {
            n,
            gap_len: bands.gap_len(n),
            max_rim_k0: max_rim,
            rim_ratio: max_rim / bands.gap_len(n).max(1e-300),
            rim_checked: 0.5 * bands.gap_len(n) > 10.0 * offset_floor,
            y_n_sup: y_n_sup(&op, bands, &map.tables, n, 9)?,
            max_on_eps_boundary: max_eps,
            bound_eps: s_n_sum(bands, n, eps)?,
            max_on_vn_boundary: max_vn,
            bound_one: s_n_sum(bands, n, 1.0)?,
            max_interior: max_in,
            bound_interior: s_n_sum(bands, n, eps)? + s_n_sum(bands, n, bands.s_min)?,
        });
    }

    // (4.7) with a = 2 at radius max(r, 2)
    let r7 = r.max(2.0);
    let mut lhs = 0.0;
    for n in 1..=bands.n_gaps {
        lhs += s_n_sum(bands, n, r7)?.powi(2);
    }
    // Q_0 integrates v over all gaps, mirrors included
    let q0: f64 = 2.0 * (bands.mass.iter().sum::<f64>() + map.tables.tail_mass);
    let rhs = 4.0 * q0 * q0 * (1.0 / (r7 * r7) + 1.0 / (bands.s_min * bands.s_min));

    // (4.3)/(4.4) on the imaginary axis
    let mut ly = Vec::new();
    let mut lk = Vec::new();
    let mut prefactor = 0.0;
    for i in 0..12 {
        let y = 10.0 * (60.0f64 / 10.0).powf(i as f64 / 11.0);
        let z = C64::new(0.0, y);
        let k0 = z - map.k_direct(z)?;
        ly.push(y.ln());
        lk.push(k0.norm().max(1e-300).ln());
        prefactor = k0.norm() * y; // retained from the largest y
    }
    let (sector_slope, _) = linear_fit(&ly, &lk);

    Ok(Thm41Report {
        eps,
        r,
        rows,
        summability_lhs: lhs,
        summability_rhs: rhs,
        sector_slope,
        sector_prefactor: prefactor,
        sector_prefactor_expected: 0.5 * sol.norm_q_sq,
        riccati_residual: sol.residual,
        c: sol.c,
        norm_q_sq: sol.norm_q_sq,
        tail_mass: map.tables.tail_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::band_structure;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_potential_is_a_fixed_point() {
        let p = PeriodicPotential::zero();
        let sol = riccati_solve(&p).unwrap();
        assert!(sol.q.max_abs() < 1e-12);
        assert!(sol.norm_q_sq < 1e-12);
        // free equation after calibration: E_0^+ = 0 needs c = 0
        assert_abs_diff_eq!(sol.c, 0.0, epsilon = 1e-9);
        let m = monodromy_transformed(&sol, C64::new(2.0, 0.0), None).unwrap();
        assert_abs_diff_eq!(m.delta.re, (2.0f64).cos(), epsilon = 1e-10);
    }

    #[test]
    fn forward_round_trip_single_harmonic() {
        let q_true = PeriodicPotential::cosine(1, 0.5);
        let p = primitive_from_riccati(&q_true).unwrap();
        assert!(p.mean().abs() < 1e-12);
        let sol = riccati_solve(&p).unwrap();
        assert!(sol.residual <= 1e-10);
        let diff = sol.q.add(&q_true.scale(-1.0));
        assert!(diff.max_abs() < 1e-8, "round trip error {}", diff.max_abs());
        assert_abs_diff_eq!(sol.norm_q_sq, 0.125, epsilon = 1e-8);
    }

    #[test]
    fn round_trip_multi_harmonic() {
        // include sin harmonic 1: even-p cases exercise it through the
        // q^2 cross terms and a solver that drops it converges to a
        // spurious root
        let q_true = PeriodicPotential::cosine(1, 0.6)
            .add(&PeriodicPotential::sine(1, 0.25))
            .add(&PeriodicPotential::sine(2, 0.4))
            .add(&PeriodicPotential::cosine(3, -0.3));
        let p = primitive_from_riccati(&q_true).unwrap();
        let sol = riccati_solve(&p).unwrap();
        let diff = sol.q.add(&q_true.scale(-1.0));
        assert!(diff.max_abs() < 1e-8, "round trip error {}", diff.max_abs());
    }

    #[test]
    fn transformed_monodromy_even_and_calibrated() {
        let q_true = PeriodicPotential::cosine(1, 0.5);
        let p = primitive_from_riccati(&q_true).unwrap();
        let sol = riccati_solve(&p).unwrap();
        let z = C64::new(1.7, 0.6);
        let a = monodromy_transformed(&sol, z, None).unwrap();
        let b = monodromy_transformed(&sol, -z, None).unwrap();
        assert!((a.delta - b.delta).norm() < 1e-10);
        // spectrum bottom sits at lambda = 0 after calibration
        let op = Operator::new(sol.equation());
        let e0 = ground_energy(&op).unwrap();
        assert!(e0.abs() < 1e-8, "E_0^+ = {e0:e}");
    }

    #[test]
    fn smooth_case_edges_agree_with_standard_pipeline() {
        // p' is smooth here, so c + p' can also be fed to the standard
        // equation; the two pipelines must produce the same spectrum
        let q_true = PeriodicPotential::cosine(1, 0.5);
        let p = primitive_from_riccati(&q_true).unwrap();
        let sol = riccati_solve(&p).unwrap();
        let op_t = Operator::new(sol.equation());
        let bands_t = band_structure(&op_t, 6).unwrap();

        let smooth = p.derivative(1).unwrap().add_const(sol.c);
        let eq_s = Equation::Standard(&smooth);
        let op_s = Operator::new(eq_s);
        let bands_s = band_structure(&op_s, 6).unwrap();
        assert!(bands_s.e0.abs() < 1e-7);
        for n in 0..5 {
            assert_abs_diff_eq!(
                bands_t.energy_minus[n],
                bands_s.energy_minus[n],
                epsilon = 1e-7
            );
            assert_abs_diff_eq!(
                bands_t.energy_plus[n],
                bands_s.energy_plus[n],
                epsilon = 1e-7
            );
        }
    }

    #[test]
    fn thm41_bounds_hold_for_round_trip_potential() {
        let q_true = PeriodicPotential::cosine(1, 0.5).add(&PeriodicPotential::cosine(2, 0.3));
        let p = primitive_from_riccati(&q_true).unwrap();
        let sol = riccati_solve(&p).unwrap();
        let rep = verify_thm_4_1(&sol, 0.4, PI, 20).unwrap();
        assert!(!rep.rows.is_empty());
        assert!(rep.rows.iter().any(|r| r.rim_checked));
        for row in &rep.rows {
            if row.rim_checked {
                assert!(
                    row.rim_ratio > 0.4 && row.rim_ratio < 0.8 + 2.0 * row.y_n_sup,
                    "gap {}: rim ratio {}",
                    row.n,
                    row.rim_ratio
                );
            }
            assert!(
                row.max_on_eps_boundary <= row.bound_eps,
                "gap {}: {} > {}",
                row.n,
                row.max_on_eps_boundary,
                row.bound_eps
            );
            // see the field comment for the factor 2
            assert!(
                row.max_on_vn_boundary <= 2.0 * row.bound_one,
                "gap {}: {} > 2 * {}",
                row.n,
                row.max_on_vn_boundary,
                row.bound_one
            );
            assert!(row.max_interior <= row.bound_interior);
        }
        assert!(
            rep.summability_lhs <= rep.summability_rhs,
            "{} > {} (tail_mass {}, s_min effect?)",
            rep.summability_lhs,
            rep.summability_rhs,
            rep.tail_mass
        );
        assert!((rep.sector_slope + 1.0).abs() < 0.1, "{}", rep.sector_slope);
        let rel = (rep.sector_prefactor - rep.sector_prefactor_expected).abs()
            / rep.sector_prefactor_expected;
        assert!(rel < 0.05, "prefactor off by {rel}");
    }
}
