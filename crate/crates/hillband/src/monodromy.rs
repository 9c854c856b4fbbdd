//! Fundamental system and monodromy of `-y'' + p y = z^2 y` on one period.
//!
//! Integrates the standard-basis solutions theta, phi (theta(0)=1,
//! theta'(0)=0, phi(0)=0, phi'(0)=1) together with their derivative in the
//! spectral parameter, using a Gragg-Bulirsch-Stoer scheme: modified
//! midpoint steps extrapolated in h^2.  One adaptive step is capped at
//! 0.5/max(1,|z|) so the oscillation is always resolved.

use crate::error::{Error, Result};
use crate::potential::PeriodicPotential;
use crate::C64;

/// Right-hand sides supported by the integrator, in the normal form
/// `y'' = a(x) y' + (b(x) - z^2) y`.
#[derive(Clone, Copy)]
pub enum Equation<'a> {
    /// `y'' = (p(x) - z^2) y`.
    Standard(&'a PeriodicPotential),
    /// `y'' = -2 q(x) y' + (c - z^2) y` with a constant zeroth-order
    /// coefficient `c`.  The substitution `y = e^{int q} u` turns the
    /// operator with distributional potential into this form; the caller
    /// supplies the effective constant (for potential `c_v + p'` with
    /// `p' = q' + q^2 - ||q||^2` it is `c = c_v - ||q||^2`).
    Transformed { q: &'a PeriodicPotential, c: f64 },
}

impl Equation<'_> {
    #[inline]
    fn coeffs(&self, x: f64) -> (f64, f64) {
        match self {
            Equation::Standard(p) => (0.0, p.eval(x)),
            Equation::Transformed { q, c } => (-2.0 * q.eval(x), *c),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OdeSettings {
    /// Relative tolerance per adaptive step.
    pub rtol: f64,
}

impl Default for OdeSettings {
    fn default() -> Self {
        OdeSettings { rtol: 1e-12 }
    }
}

/// State layout: theta, theta', phi, phi', then the same four
/// differentiated in the spectral parameter.
type State = [C64; 8];

const DIM: usize = 8;
/// Substep counts for the extrapolation tableau (harmonic sequence).
const SEQ: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];

#[inline]
fn rhs(eq: &Equation, zsq: C64, dforce: C64, x: f64, u: &State) -> State {
    let (a, b0) = eq.coeffs(x);
    let b = b0 - zsq;
    [
        u[1],
        a * u[1] + b * u[0],
        u[3],
        a * u[3] + b * u[2],
        u[5],
        a * u[5] + b * u[4] + dforce * u[0],
        u[7],
        a * u[7] + b * u[6] + dforce * u[2],
    ]
}

#[inline]
fn add_scaled(y: &State, f: &State, h: f64) -> State {
    let mut out = *y;
    for i in 0..DIM {
        out[i] += h * f[i];
    }
    out
}

/// One modified-midpoint pass over `[x, x + big_h]` with `n` substeps.
fn midpoint_pass<F>(f: &F, x: f64, y: &State, big_h: f64, n: usize) -> State
where
    F: Fn(f64, &State) -> State,
{
    let h = big_h / n as f64;
    let mut z0 = *y;
    let mut z1 = add_scaled(y, &f(x, y), h);
    for m in 1..n {
        let z2 = add_scaled(&z0, &f(x + m as f64 * h, &z1), 2.0 * h);
        z0 = z1;
        z1 = z2;
    }
    let fe = f(x + big_h, &z1);
    let mut out = [C64::new(0.0, 0.0); DIM];
    for i in 0..DIM {
        out[i] = 0.5 * (z0[i] + z1[i] + h * fe[i]);
    }
    out
}

fn max_scaled_diff(a: &State, b: &State) -> f64 {
    let mut m = 0.0f64;
    for i in 0..DIM {
        let scale = 1.0 + a[i].norm().max(b[i].norm());
        m = m.max((a[i] - b[i]).norm() / scale);
    }
    m
}

/// One adaptive GBS step.  Returns the new state, the step actually taken,
/// and a suggestion for the next step.
fn gbs_step<F>(f: &F, x: f64, y: &State, h_try: f64, h_max: f64, rtol: f64) -> Result<(State, f64, f64)>
where
    F: Fn(f64, &State) -> State,
{
    let mut h = h_try.min(h_max);
    for _ in 0..40 {
        let mut tableau: Vec<State> = Vec::with_capacity(SEQ.len());
        let mut err = f64::INFINITY;
        for (j, &n) in SEQ.iter().enumerate() {
            let mut t = midpoint_pass(f, x, y, h, n);
            // Aitken-Neville in (h/n)^2: tableau[k] holds the previous
            // row's column-k entry.
            for k in 0..j {
                let ratio = (SEQ[j] as f64 / SEQ[j - 1 - k] as f64).powi(2);
                let prev = tableau[k];
                let mut refined = t;
                for i in 0..DIM {
                    refined[i] = t[i] + (t[i] - prev[i]) / (ratio - 1.0);
                }
                tableau[k] = t;
                t = refined;
            }
            tableau.push(t);
            if j > 0 {
                err = max_scaled_diff(&t, &tableau[j - 1]);
                if err <= rtol {
                    let order = 2 * (j + 1) - 1;
                    let mut grow = 0.9 * (rtol / err.max(1e-300)).powf(1.0 / order as f64);
                    grow = grow.clamp(0.2, 4.0);
                    return Ok((t, h, (h * grow).min(h_max)));
                }
            }
        }
        h *= 0.4;
        if h < 1e-12 {
            return Err(Error::Integration(format!(
                "step size underflow at x = {x} (err = {err:.3e})"
            )));
        }
    }
    Err(Error::Integration(format!("no convergence at x = {x}")))
}

/// Integrate the fundamental system from 0 to each grid point in `xs`
/// (strictly increasing, starting at a value >= 0).
fn integrate_grid<F>(f: &F, xs: &[f64], h_max: f64, rtol: f64) -> Result<Vec<State>>
where
    F: Fn(f64, &State) -> State,
{
    let mut y: State = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
    ];
    let mut out = Vec::with_capacity(xs.len());
    let mut x = 0.0f64;
    let mut h = h_max;
    for &target in xs {
        if target < x {
            return Err(Error::Domain(format!("grid not increasing at {target}")));
        }
        while x < target {
            let step = h.min(target - x);
            let (ynew, taken, h_next) = gbs_step(f, x, &y, step, h_max, rtol)?;
            y = ynew;
            x += taken;
            h = h_next;
        }
        out.push(y);
    }
    Ok(out)
}

/// Fundamental system sampled on a grid, with monodromy data at x = 1.
#[derive(Clone, Debug)]
pub struct MonodromySolution {
    pub z: C64,
    pub x_grid: Vec<f64>,
    pub theta: Vec<C64>,
    pub theta_prime: Vec<C64>,
    pub phi: Vec<C64>,
    pub phi_prime: Vec<C64>,
    /// End state at x = 1 including spectral derivatives.
    pub end: [C64; 8],
    /// Lyapunov function `(phi'(1) + theta(1)) / 2`.
    pub delta: C64,
    /// `(phi'(1) - theta(1)) / 2`.
    pub beta: C64,
    /// `d delta / dz`.
    pub delta_z: C64,
}

impl MonodromySolution {
    pub fn phi_at_one(&self) -> C64 {
        self.end[2]
    }
    /// `theta phi' - theta' phi` at x = 1; identically 1 for the exact flow.
    pub fn wronskian_at_one(&self) -> C64 {
        self.end[0] * self.end[3] - self.end[1] * self.end[2]
    }
}

fn grid_ending_at_one(xs: Option<&[f64]>) -> Result<Vec<f64>> {
    match xs {
        None => Ok(vec![1.0]),
        Some(g) => {
            if g.is_empty() || g[0] < 0.0 {
                return Err(Error::Domain("grid must start at x >= 0".into()));
            }
            for w in g.windows(2) {
                if w[1] <= w[0] {
                    return Err(Error::Domain("grid must be strictly increasing".into()));
                }
            }
            let mut v = g.to_vec();
            if *v.last().unwrap() < 1.0 {
                v.push(1.0);
            } else if *v.last().unwrap() > 1.0 {
                return Err(Error::Domain("grid must end at x <= 1".into()));
            }
            Ok(v)
        }
    }
}

/// Solve the fundamental system at spectral parameter `z` (energy `z^2`).
/// `x_grid`, if given, selects sample points in `[0, 1]`; the monodromy at
/// x = 1 is always computed.
pub fn monodromy(
    eq: &Equation,
    z: C64,
    x_grid: Option<&[f64]>,
    settings: &OdeSettings,
) -> Result<MonodromySolution> {
    let grid = grid_ending_at_one(x_grid)?;
    let zsq = z * z;
    let dforce = -2.0 * z;
    let f = |x: f64, u: &State| rhs(eq, zsq, dforce, x, u);
    let h_max = 0.5 / z.norm().max(1.0);
    let states = integrate_grid(&f, &grid, h_max, settings.rtol)?;
    let n_out = match x_grid {
        Some(g) => g.len(),
        None => 0,
    };
    let end = *states.last().unwrap();
    let delta = 0.5 * (end[3] + end[0]);
    let beta = 0.5 * (end[3] - end[0]);
    let delta_z = 0.5 * (end[7] + end[4]);
    Ok(MonodromySolution {
        z,
        x_grid: grid[..n_out].to_vec(),
        theta: states[..n_out].iter().map(|s| s[0]).collect(),
        theta_prime: states[..n_out].iter().map(|s| s[1]).collect(),
        phi: states[..n_out].iter().map(|s| s[2]).collect(),
        phi_prime: states[..n_out].iter().map(|s| s[3]).collect(),
        end,
        delta,
        beta,
        delta_z,
    })
}

/// Monodromy data parameterized directly by the (real) energy.  All
/// quantities are real; the derivative is with respect to the energy, so
/// this stays regular through energy 0 and below.
#[derive(Clone, Copy, Debug)]
pub struct EnergyMonodromy {
    pub lambda: f64,
    pub delta: f64,
    pub beta: f64,
    pub phi1: f64,
    pub theta1: f64,
    pub theta1_prime: f64,
    pub phi1_prime: f64,
    /// `d delta / d lambda`.
    pub delta_dlambda: f64,
    /// `d phi(1) / d lambda`.
    pub phi1_dlambda: f64,
}

/// Solve at real energy `lambda` (any sign).
pub fn monodromy_at_energy(
    eq: &Equation,
    lambda: f64,
    settings: &OdeSettings,
) -> Result<EnergyMonodromy> {
    let zsq = C64::new(lambda, 0.0);
    let dforce = C64::new(-1.0, 0.0);
    let f = |x: f64, u: &State| rhs(eq, zsq, dforce, x, u);
    let h_max = 0.5 / lambda.abs().sqrt().max(1.0);
    let states = integrate_grid(&f, &[1.0], h_max, settings.rtol)?;
    let end = states[0];
    Ok(EnergyMonodromy {
        lambda,
        delta: 0.5 * (end[3].re + end[0].re),
        beta: 0.5 * (end[3].re - end[0].re),
        phi1: end[2].re,
        theta1: end[0].re,
        theta1_prime: end[1].re,
        phi1_prime: end[3].re,
        delta_dlambda: 0.5 * (end[7].re + end[4].re),
        phi1_dlambda: end[6].re,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PeriodicPotential;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn free() -> PeriodicPotential {
        PeriodicPotential::zero()
    }

    fn settings() -> OdeSettings {
        OdeSettings::default()
    }

    #[test]
    fn free_operator_closed_form() {
        let p = free();
        let eq = Equation::Standard(&p);
        for &z in &[c(2.0, 0.0), c(0.7, 0.0), c(1.0, 1.0), c(12.0, -0.5)] {
            let sol = monodromy(&eq, z, None, &settings()).unwrap();
            let expect_delta = z.cos();
            let expect_phi = z.sin() / z;
            assert!((sol.delta - expect_delta).norm() < 1e-11 * (1.0 + expect_delta.norm()));
            assert!((sol.phi_at_one() - expect_phi).norm() < 1e-11 * (1.0 + expect_phi.norm()));
            assert!((sol.delta_z + z.sin()).norm() < 1e-10 * (1.0 + z.sin().norm()));
            assert!(sol.beta.norm() < 1e-11 * (1.0 + expect_delta.norm()));
        }
    }

    #[test]
    fn constant_potential_closed_form() {
        let p = PeriodicPotential::constant(4.0);
        let eq = Equation::Standard(&p);
        let z = c(3.0, 0.0);
        let w = (z * z - 4.0).sqrt();
        let sol = monodromy(&eq, z, None, &settings()).unwrap();
        assert!((sol.delta - w.cos()).norm() < 1e-11);
        // d/dz cos(sqrt(z^2-c)) = -sin(w) z / w
        let expect_dz = -w.sin() * z / w;
        assert!((sol.delta_z - expect_dz).norm() < 1e-10);
        // band-edge value: z^2 = 4 + pi^2 gives delta = -1
        let ze = c((4.0 + std::f64::consts::PI.powi(2)).sqrt(), 0.0);
        let sole = monodromy(&eq, ze, None, &settings()).unwrap();
        assert_abs_diff_eq!(sole.delta.re, -1.0, epsilon = 1e-11);
    }

    #[test]
    fn energy_version_below_spectrum() {
        let p = free();
        let eq = Equation::Standard(&p);
        let em = monodromy_at_energy(&eq, -1.0, &settings()).unwrap();
        assert_abs_diff_eq!(em.delta, 1f64.cosh(), epsilon = 1e-11);
        // d/dlambda cos(sqrt(lambda)) at lambda = -1 is -sinh(1)/2
        assert_abs_diff_eq!(em.delta_dlambda, -1f64.sinh() / 2.0, epsilon = 1e-10);
        let em4 = monodromy_at_energy(&eq, 4.0, &settings()).unwrap();
        assert_abs_diff_eq!(em4.delta, 2f64.cos(), epsilon = 1e-11);
        let em0 = monodromy_at_energy(&eq, 0.0, &settings()).unwrap();
        assert_abs_diff_eq!(em0.delta, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(em0.delta_dlambda, -0.5, epsilon = 1e-11);
    }

    #[test]
    fn wronskian_and_evenness_for_mathieu() {
        let p = PeriodicPotential::cosine(1, 2.0);
        let eq = Equation::Standard(&p);
        for &z in &[c(1.3, 0.0), c(5.0, 2.0), c(0.2, 3.0), c(20.0, 1.0)] {
            let sol = monodromy(&eq, z, None, &settings()).unwrap();
            assert!((sol.wronskian_at_one() - c(1.0, 0.0)).norm() < 1e-10);
            let solm = monodromy(&eq, -z, None, &settings()).unwrap();
            assert!((sol.delta - solm.delta).norm() < 1e-10 * (1.0 + sol.delta.norm()));
        }
    }

    #[test]
    fn delta_z_matches_finite_difference() {
        let p = PeriodicPotential::cosine(1, 2.0);
        let eq = Equation::Standard(&p);
        let z = c(3.7, 0.0);
        let h = 1e-4;
        let sol = monodromy(&eq, z, None, &settings()).unwrap();
        let dp = monodromy(&eq, z + h, None, &settings()).unwrap().delta;
        let dm = monodromy(&eq, z - h, None, &settings()).unwrap().delta;
        let fd = (dp - dm) / (2.0 * h);
        assert!((sol.delta_z - fd).norm() < 1e-7);
    }

    #[test]
    fn grid_output_matches_closed_form() {
        let p = free();
        let eq = Equation::Standard(&p);
        let z = c(4.0, 0.5);
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let sol = monodromy(&eq, z, Some(&grid), &settings()).unwrap();
        assert_eq!(sol.x_grid.len(), 11);
        for (i, &x) in grid.iter().enumerate() {
            let zx = z * x;
            assert!((sol.theta[i] - zx.cos()).norm() < 1e-10 * (1.0 + zx.cos().norm()));
            assert!((sol.phi[i] - zx.sin() / z).norm() < 1e-10 * (1.0 + zx.sin().norm()));
            assert!((sol.phi_prime[i] - zx.cos()).norm() < 1e-10 * (1.0 + zx.cos().norm()));
        }
    }

    #[test]
    fn transformed_constant_q_closed_form() {
        // q constant = g: solutions are e^{-g x} trig, and
        // delta = e^{-g} cos(sqrt(z^2 - c - g^2)).
        let g = 0.8;
        let cc = 1.5;
        let q = PeriodicPotential::constant(g);
        let eq = Equation::Transformed { q: &q, c: cc };
        let z = c(2.5, 0.0);
        let w = (z * z - cc - g * g).sqrt();
        let sol = monodromy(&eq, z, None, &settings()).unwrap();
        let expect = (-g as f64).exp() * w.cos();
        assert!((sol.delta - expect).norm() < 1e-11);
    }

    #[test]
    fn high_energy_real_axis() {
        let p = PeriodicPotential::cosine(1, 2.0);
        let eq = Equation::Standard(&p);
        let z = c(200.0, 0.0);
        let sol = monodromy(&eq, z, None, &settings()).unwrap();
        // |delta - cos z| = O(|p| / z) at high energy
        assert!((sol.delta - z.cos()).norm() < 0.02);
        assert!((sol.wronskian_at_one() - c(1.0, 0.0)).norm() < 1e-9);
    }
}
