//! Titchmarsh-Weyl functions M+-(z) and Bloch functions Psi+-(x, z), plus
//! the asymptotic diagnostics comparing them with the model functions
//! xi_m, rho, omega, tau.
//!
//! The Bloch solution is assembled as `Psi+- = theta + M+- phi`: this is
//! the combination with `Psi(0) = 1`, `Psi'(0) = M`, and multiplier
//! `e^{+-ik}` over a period (the display (1.16) in the source material
//! swaps theta and phi, which contradicts its own identity block and the
//! free-operator case).

use std::f64::consts::PI;

use serde::Serialize;

use crate::diffalg::AsymptoticModel;
use crate::error::{Error, Result};
use crate::monodromy::{monodromy, Equation};
use crate::numerics::linear_fit;
use crate::quasimomentum::QuasimomentumMap;
use crate::C64;

/// `M+-(z) = (beta(z) +- i sin k(z)) / phi(1, z)`.
///
/// The factor i is taken from the proof of the M-asymptotics (and the
/// free-operator check M+- = +-iz); the display form without i does not
/// satisfy either.
pub fn weyl_m(map: &QuasimomentumMap, z: C64) -> Result<(C64, C64)> {
    let sol = map.op.solve(z)?;
    let phi1 = sol.phi_at_one();
    if phi1.norm() < 1e-12 {
        return Err(Error::Pole(format!(
            "phi(1, z) = {phi1:e} at z = {z}: Dirichlet eigenvalue"
        )));
    }
    let k = map.k_direct(z)?;
    let isk = C64::i() * k.sin();
    Ok(((sol.beta + isk) / phi1, (sol.beta - isk) / phi1))
}

#[derive(Clone, Debug)]
pub struct BlochEval {
    pub z: C64,
    pub k: C64,
    pub m_plus: C64,
    pub m_minus: C64,
    pub x_grid: Vec<f64>,
    pub psi_plus: Vec<C64>,
    pub psi_minus: Vec<C64>,
    /// Residuals of the identity block: `|Psi(0) - 1|`, `|Psi'(0) - M|`,
    /// `|Psi(1) - e^{+-ik}|`, `|Psi'(1) - e^{+-ik} M|`, maximized over +-.
    pub identity_residuals: [f64; 4],
}

pub fn bloch_psi(map: &QuasimomentumMap, z: C64, n_store: usize) -> Result<BlochEval> {
    if n_store < 2 {
        return Err(Error::Config("n_store must be >= 2".into()));
    }
    let grid: Vec<f64> = (0..n_store)
        .map(|i| i as f64 / (n_store - 1) as f64)
        .collect();
    let sol = monodromy(&map.op.eq, z, Some(&grid), &map.op.settings)?;
    let phi1 = sol.phi_at_one();
    if phi1.norm() < 1e-12 {
        return Err(Error::Pole(format!("phi(1, z) vanishes at z = {z}")));
    }
    let k = map.k_direct(z)?;
    let isk = C64::i() * k.sin();
    let m_plus = (sol.beta + isk) / phi1;
    let m_minus = (sol.beta - isk) / phi1;

    let assemble = |m: C64| -> (Vec<C64>, Vec<C64>) {
        let psi: Vec<C64> = sol
            .theta
            .iter()
            .zip(&sol.phi)
            .map(|(&th, &ph)| th + m * ph)
            .collect();
        let dpsi: Vec<C64> = sol
            .theta_prime
            .iter()
            .zip(&sol.phi_prime)
            .map(|(&th, &ph)| th + m * ph)
            .collect();
        (psi, dpsi)
    };
    let (psi_plus, dpsi_plus) = assemble(m_plus);
    let (psi_minus, dpsi_minus) = assemble(m_minus);

    let ep = (C64::i() * k).exp();
    let em = (-C64::i() * k).exp();
    let last = n_store - 1;
    let identity_residuals = [
        (psi_plus[0] - 1.0).norm().max((psi_minus[0] - 1.0).norm()),
        (dpsi_plus[0] - m_plus)
            .norm()
            .max((dpsi_minus[0] - m_minus).norm()),
        (psi_plus[last] - ep).norm().max((psi_minus[last] - em).norm()),
        (dpsi_plus[last] - ep * m_plus)
            .norm()
            .max((dpsi_minus[last] - em * m_minus).norm()),
    ];

    Ok(BlochEval {
        z,
        k,
        m_plus,
        m_minus,
        x_grid: grid,
        psi_plus,
        psi_minus,
        identity_residuals,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm12Report {
    pub m: usize,
    /// slope of log|M+- - rho(+-z)| vs log|z|; expected <= 1 - m.
    pub m_error_slope: f64,
    /// slope of log sup_x |Psi+- - e^{i xi_m(x, +-z)}|; expected <= -m.
    pub psi_error_slope: f64,
    /// slope of log|k - xi_m(1, z)| (normalized case only, else NaN).
    pub k_error_slope: f64,
    /// (3.15) first part: slope of log|phi(1,z) - sin xi / omega|.
    pub phi_error_slope: f64,
    /// (3.16): slope of log|theta(1,z) - (cos xi - (tau/omega) sin xi)|.
    pub theta_error_slope: f64,
    /// (3.17): slope of log|beta - (tau/omega) sin xi|.
    pub beta_error_slope: f64,
    /// worst (3.18) identity residual over the sample.
    pub identity_318_max: f64,
    /// worst residuals of M+ + M- = 2 beta / phi(1) and
    /// M+ - M- = 2 i sin k / phi(1).
    pub m_sum_residual: f64,
    pub m_diff_residual: f64,
    /// Im M_+ > 0 observed on all upper-half-plane samples (diagnostic).
    pub im_m_plus_positive: bool,
    pub n_samples: usize,
}

/// Strip sample for the Theorem 1.2 fits: |z| log-spaced in
/// `[10, z_max]`, real parts snapped to band midpoints, imaginary parts
/// cycling through the strip.
fn thm12_samples(map: &QuasimomentumMap, strip_r: f64, count: usize) -> Vec<C64> {
    let bands = &map.bands;
    let z_max = ((bands.n_gaps as f64 + 0.4) * PI).max(12.0);
    let mut out = Vec::new();
    for i in 0..count {
        let t = i as f64 / (count - 1) as f64;
        let r = 10.0 * (z_max / 10.0).powf(t);
        let y = strip_r * (0.25 + 0.55 * ((i * 5) % 7) as f64 / 7.0);
        let x = (r * r - y * y).max(1.0).sqrt();
        // snap to the nearest band midpoint so dist(z, g) stays healthy
        let n = (x / PI).round().max(1.0) as usize;
        let x_snap = if n <= bands.n_gaps {
            0.5 * (bands.e_plus[n - 1] + if n < bands.n_gaps { bands.e_minus[n] } else { bands.e_plus[n - 1] + 2.0 })
        } else {
            x
        };
        let x_use = if n <= bands.n_gaps { x_snap.min(z_max) } else { x };
        out.push(C64::new(x_use, y));
    }
    out
}

pub fn verify_thm_1_2(
    map: &QuasimomentumMap,
    m: usize,
    strip_r: f64,
    n_samples: usize,
) -> Result<Thm12Report> {
    let p = match map.op.eq {
        Equation::Standard(p) => p,
        Equation::Transformed { .. } => {
            return Err(Error::Capability(
                "Theorem 1.2 diagnostics need a smooth potential".into(),
            ))
        }
    };
    let model = AsymptoticModel::new(p, m.max(1))?;
    let normalized = map.bands.e0.abs() < 1e-8;
    let samples = thm12_samples(map, strip_r, n_samples.max(8));

    let mut lx = Vec::new();
    let mut m_err = Vec::new();
    let mut psi_err = Vec::new();
    let mut k_err = Vec::new();
    let mut phi_err = Vec::new();
    let mut theta_err = Vec::new();
    let mut beta_err = Vec::new();
    let mut identity_max = 0.0f64;
    let mut m_sum_res = 0.0f64;
    let mut m_diff_res = 0.0f64;
    let mut im_pos = true;

    for &z in &samples {
        let eval = bloch_psi(map, z, 33)?;
        let sol = map.op.solve(z)?;
        let phi1 = sol.phi_at_one();
        lx.push(z.norm().ln());
        identity_max = identity_max.max(
            eval.identity_residuals
                .iter()
                .cloned()
                .fold(0.0, f64::max),
        );
        m_sum_res = m_sum_res.max((eval.m_plus + eval.m_minus - 2.0 * sol.beta / phi1).norm());
        m_diff_res = m_diff_res
            .max((eval.m_plus - eval.m_minus - 2.0 * C64::i() * eval.k.sin() / phi1).norm());
        if z.im > 0.0 && eval.m_plus.im <= 0.0 {
            im_pos = false;
        }

        // (1.21) against rho(+-z) = i xi'_m(0, +-z)
        let e_m = (eval.m_plus - model.rho(z)?)
            .norm()
            .max((eval.m_minus - model.rho(-z)?).norm());
        m_err.push(e_m.max(1e-300).ln());

        // (1.22) sup over the stored x grid
        let mut sup = 0.0f64;
        for (i, &x) in eval.x_grid.iter().enumerate() {
            let target_p = (C64::i() * model.xi(x, z)?).exp();
            let target_m = (C64::i() * model.xi(x, -z)?).exp();
            sup = sup
                .max((eval.psi_plus[i] - target_p).norm())
                .max((eval.psi_minus[i] - target_m).norm());
        }
        psi_err.push(sup.max(1e-300).ln());

        // (1.23) / (3.14)
        if normalized {
            k_err.push((eval.k - model.xi_at_one(z)?).norm().max(1e-300).ln());
        }

        // Lemma 3.2
        let (_, omega, tau) = model.rho_omega_tau(z)?;
        let xi1 = model.xi_at_one(z)?;
        let sxi = xi1.sin();
        phi_err.push((phi1 - sxi / omega).norm().max(1e-300).ln());
        let theta1 = sol.end[0];
        theta_err.push(
            (theta1 - (xi1.cos() - tau / omega * sxi))
                .norm()
                .max(1e-300)
                .ln(),
        );
        beta_err.push((sol.beta - tau / omega * sxi).norm().max(1e-300).ln());
    }

    let slope = |ys: &[f64]| -> f64 {
        if ys.len() < 2 {
            f64::NAN
        } else {
            linear_fit(&lx[..ys.len()], ys).0
        }
    };
    Ok(Thm12Report {
        m,
        m_error_slope: slope(&m_err),
        psi_error_slope: slope(&psi_err),
        k_error_slope: slope(&k_err),
        phi_error_slope: slope(&phi_err),
        theta_error_slope: slope(&theta_err),
        beta_error_slope: slope(&beta_err),
        identity_318_max: identity_max,
        m_sum_residual: m_sum_res,
        m_diff_residual: m_diff_res,
        im_m_plus_positive: im_pos,
        n_samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PeriodicPotential;
    use crate::spectrum::{ground_energy, Operator};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn free_operator_weyl_and_bloch() {
        let p = PeriodicPotential::zero();
        let op = Operator::new(Equation::Standard(&p));
        let map = QuasimomentumMap::new(&op, 4, 1).unwrap();
        let z = c(3.0, 0.0);
        let (mp, mm) = weyl_m(&map, z).unwrap();
        assert!((mp - c(0.0, 3.0)).norm() < 1e-9, "M+ = {mp}");
        assert!((mm + c(0.0, 3.0)).norm() < 1e-9);
        let eval = bloch_psi(&map, z, 11).unwrap();
        for (i, &x) in eval.x_grid.iter().enumerate() {
            let expect = (C64::i() * z * x).exp();
            assert!((eval.psi_plus[i] - expect).norm() < 1e-9);
            assert!((eval.psi_minus[i] - expect.conj()).norm() < 1e-9);
        }
        for r in eval.identity_residuals {
            assert!(r < 1e-9);
        }
    }

    #[test]
    fn weyl_pole_at_dirichlet_eigenvalue() {
        // free operator: phi(1, z) = sin z / z vanishes at z = pi, a gap
        // edge; probe just off it on the real axis inside the band is not
        // a pole, but z = pi itself is
        let p = PeriodicPotential::zero();
        let op = Operator::new(Equation::Standard(&p));
        let map = QuasimomentumMap::new(&op, 4, 1).unwrap();
        assert!(matches!(
            weyl_m(&map, c(PI, 0.0)),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn mathieu_identities_318() {
        let p0 = PeriodicPotential::cosine(1, 2.0);
        let op0 = Operator::new(Equation::Standard(&p0));
        let e0 = ground_energy(&op0).unwrap();
        let p = p0.add_const(-e0);
        let op = Operator::new(Equation::Standard(&p));
        let map = QuasimomentumMap::new(&op, 8, 1).unwrap();
        for &z in &[c(5.0, 0.5), c(11.0, 1.0), c(2.0, 0.25)] {
            let eval = bloch_psi(&map, z, 17).unwrap();
            for r in eval.identity_residuals {
                assert!(r < 1e-8, "z = {z}: residuals {:?}", eval.identity_residuals);
            }
            // conjugation pairing on near-real band points
            let sol = map.op.solve(z).unwrap();
            let phi1 = sol.phi_at_one();
            let sum = eval.m_plus + eval.m_minus - 2.0 * sol.beta / phi1;
            assert!(sum.norm() < 1e-9);
        }
    }

    #[test]
    fn asymptotic_error_decays_with_m() {
        let p0 = PeriodicPotential::cosine(1, 2.0);
        let op0 = Operator::new(Equation::Standard(&p0));
        let e0 = ground_energy(&op0).unwrap();
        let p = p0.add_const(-e0);
        let op = Operator::new(Equation::Standard(&p));
        let map = QuasimomentumMap::new(&op, 14, 1).unwrap();
        let z = c(0.5 * (map.bands.e_plus[12] + map.bands.e_minus[13]), 0.7);
        let eval = bloch_psi(&map, z, 17).unwrap();
        let mut errs = Vec::new();
        for m in [1usize, 2, 3] {
            let model = AsymptoticModel::new(&p, m).unwrap();
            let mut sup = 0.0f64;
            for (i, &x) in eval.x_grid.iter().enumerate() {
                let t = (C64::i() * model.xi(x, z).unwrap()).exp();
                sup = sup.max((eval.psi_plus[i] - t).norm());
            }
            errs.push(sup);
        }
        assert!(errs[1] < errs[0], "{errs:?}");
        assert!(errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn thm12_report_slopes_mathieu() {
        let p0 = PeriodicPotential::cosine(1, 2.0);
        let op0 = Operator::new(Equation::Standard(&p0));
        let e0 = ground_energy(&op0).unwrap();
        let p = p0.add_const(-e0);
        let op = Operator::new(Equation::Standard(&p));
        let map = QuasimomentumMap::new(&op, 16, 2).unwrap();
        let rep = verify_thm_1_2(&map, 2, 1.0, 10).unwrap();
        assert!(rep.identity_318_max < 1e-8);
        assert!(rep.m_error_slope <= 1.0 - 2.0 + 0.4, "{}", rep.m_error_slope);
        assert!(rep.psi_error_slope <= -2.0 + 0.4, "{}", rep.psi_error_slope);
        assert!(rep.im_m_plus_positive);
        assert_abs_diff_eq!(rep.m_sum_residual, 0.0, epsilon = 1e-9);
    }
}
