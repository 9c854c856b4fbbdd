//! C ABI surface for the hillband toolkit.
//!
//! Conventions:
//! - every function returns an [`HbStatus`] code; `HB_OK` is 0,
//! - results come back through out-pointers; complex numbers as re/im pairs,
//! - handles are opaque and freed with `hb_operator_free`,
//! - on failure a thread-local message is readable via `hb_last_error`,
//! - panics are caught at the boundary and reported as `HB_PANIC`.
//!
//! The header `include/hillband.h` is regenerated by the build script.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use hillband::distrib::{riccati_solve, RiccatiSolution};
use hillband::monodromy::Equation;
use hillband::potential::PeriodicPotential;
use hillband::quasimomentum::QuasimomentumMap;
use hillband::spectrum::{ground_energy, BandStructure, GapTables, Operator};
use hillband::{C64, Error};

/// Status codes returned by every API call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
#[allow(non_camel_case_types, clippy::upper_case_acronyms)]
pub enum HbStatus {
    /// Success.
    HB_OK = 0,
    /// A required pointer argument was null.
    HB_NULL_POINTER = 1,
    /// Invalid argument or configuration value.
    HB_INVALID_ARGUMENT = 2,
    /// The evaluation point lies outside the function's domain
    /// (on a gap cut, at a Dirichlet pole, ...).
    HB_DOMAIN = 3,
    /// An iterative computation failed to converge.
    HB_CONVERGENCE = 4,
    /// The request exceeds what this handle supports.
    HB_CAPABILITY = 5,
    /// Internal failure.
    HB_INTERNAL = 6,
    /// A panic was caught at the FFI boundary.
    HB_PANIC = 7,
}

use HbStatus::*;

/// Opaque operator handle.
#[repr(C)]
#[allow(non_camel_case_types)]
pub struct hb_operator {
    _private: [u8; 0],
}

enum Kind {
    Smooth(PeriodicPotential),
    Distrib(RiccatiSolution),
}

struct Inner {
    kind: Kind,
    bands: BandStructure,
    tables: GapTables,
    p_coeffs: Vec<f64>,
}

impl Inner {
    fn with_map<T>(&self, f: impl FnOnce(&QuasimomentumMap) -> hillband::Result<T>) -> hillband::Result<T> {
        let eq = match &self.kind {
            Kind::Smooth(p) => Equation::Standard(p),
            Kind::Distrib(sol) => sol.equation(),
        };
        let op = Operator::new(eq);
        let map = QuasimomentumMap {
            op: &op,
            bands: self.bands.clone(),
            tables: self.tables.clone(),
            p_coeffs: self.p_coeffs.clone(),
        };
        f(&map)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string());
}

fn status_of(err: &Error) -> HbStatus {
    match err {
        Error::Config(_) => HB_INVALID_ARGUMENT,
        Error::Capability(_) => HB_CAPABILITY,
        Error::Domain(_) | Error::Pole(_) | Error::OnGapCut(_) | Error::Interlacing(_) => HB_DOMAIN,
        Error::Integration(_) | Error::RootFind(_) | Error::NonConvergence(_) => HB_CONVERGENCE,
        _ => HB_INTERNAL,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), HbStatus>) -> HbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HB_OK,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic caught at the FFI boundary");
            HB_PANIC
        }
    }
}

fn fail(err: Error) -> HbStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// # Safety: `ptr`/`len` must describe a valid array (or be null/0).
unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Result<&'a [f64], HbStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        set_error("null coefficient array with nonzero length");
        return Err(HB_NULL_POINTER);
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out_arg<'a, T>(ptr: *mut T) -> Result<&'a mut T, HbStatus> {
    if ptr.is_null() {
        set_error("null out-pointer");
        return Err(HB_NULL_POINTER);
    }
    Ok(&mut *ptr)
}

unsafe fn handle_arg<'a>(op: *const hb_operator) -> Result<&'a Inner, HbStatus> {
    if op.is_null() {
        set_error("null operator handle");
        return Err(HB_NULL_POINTER);
    }
    Ok(&*(op as *const Inner))
}

fn make_handle(
    kind: Kind,
    n_gaps: usize,
    m_max: usize,
    out: &mut *mut hb_operator,
) -> Result<(), HbStatus> {
    let eq = match &kind {
        Kind::Smooth(p) => Equation::Standard(p),
        Kind::Distrib(sol) => sol.equation(),
    };
    let op = Operator::new(eq);
    let map = QuasimomentumMap::new(&op, n_gaps, m_max).map_err(fail)?;
    let QuasimomentumMap {
        bands,
        tables,
        p_coeffs,
        ..
    } = map;
    let inner = Inner {
        kind,
        bands,
        tables,
        p_coeffs,
    };
    *out = Box::into_raw(Box::new(inner)) as *mut hb_operator;
    Ok(())
}

/// Create an operator for a smooth potential given by Fourier coefficients:
/// `p(x) = cos[0] + sum_n cos[n] cos(2 pi n x) + sum_n sin[n-1] sin(2 pi n x)`.
/// When `normalize` is true the potential is shifted so the ground edge
/// sits at energy 0 (required for quasimomentum symmetries).
///
/// # Safety
/// Array pointers must match their lengths; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hb_operator_new_fourier(
    cos_coeffs: *const f64,
    n_cos: usize,
    sin_coeffs: *const f64,
    n_sin: usize,
    n_gaps: usize,
    m_max: usize,
    normalize: bool,
    out: *mut *mut hb_operator,
) -> HbStatus {
    guard(|| {
        let out = out_arg(out)?;
        let cos = slice_arg(cos_coeffs, n_cos)?;
        let sin = slice_arg(sin_coeffs, n_sin)?;
        if n_gaps == 0 {
            set_error("n_gaps must be >= 1");
            return Err(HB_INVALID_ARGUMENT);
        }
        let mut p = PeriodicPotential::new(cos.to_vec(), sin.to_vec());
        if normalize {
            let op = Operator::new(Equation::Standard(&p));
            let e0 = ground_energy(&op).map_err(fail)?;
            p = p.add_const(-e0);
        }
        make_handle(Kind::Smooth(p), n_gaps, m_max.max(1), out)
    })
}

/// Create an operator for the distributional potential `c + p'` where the
/// periodic primitive `p` is given by Fourier coefficients (same layout as
/// `hb_operator_new_fourier`).  The Riccati reduction and the `E_0^+ = 0`
/// calibration run at creation time.
///
/// # Safety
/// Array pointers must match their lengths; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hb_operator_new_distribution(
    p_cos: *const f64,
    n_cos: usize,
    p_sin: *const f64,
    n_sin: usize,
    n_gaps: usize,
    out: *mut *mut hb_operator,
) -> HbStatus {
    guard(|| {
        let out = out_arg(out)?;
        let cos = slice_arg(p_cos, n_cos)?;
        let sin = slice_arg(p_sin, n_sin)?;
        if n_gaps == 0 {
            set_error("n_gaps must be >= 1");
            return Err(HB_INVALID_ARGUMENT);
        }
        let mut p = PeriodicPotential::new(cos.to_vec(), sin.to_vec());
        p = p.add_const(-p.mean());
        let sol = riccati_solve(&p).map_err(fail)?;
        make_handle(Kind::Distrib(sol), n_gaps, 1, out)
    })
}

/// Release an operator handle.  Passing null is a no-op.
///
/// # Safety
/// `op` must be a handle returned by a creation function, freed once.
#[no_mangle]
pub unsafe extern "C" fn hb_operator_free(op: *mut hb_operator) {
    if !op.is_null() {
        drop(Box::from_raw(op as *mut Inner));
    }
}

/// Number of computed gaps.
///
/// # Safety
/// `op` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hb_operator_n_gaps(op: *const hb_operator, out: *mut usize) -> HbStatus {
    guard(|| {
        let inner = handle_arg(op)?;
        *out_arg(out)? = inner.bands.n_gaps;
        Ok(())
    })
}

/// Edges of gap `n` (1-based): energies `E_n^-`, `E_n^+` and momenta
/// `e_n^-`, `e_n^+`.
///
/// # Safety
/// `op` must be a live handle; out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn hb_operator_gap_edges(
    op: *const hb_operator,
    n: usize,
    energy_minus: *mut f64,
    energy_plus: *mut f64,
    e_minus: *mut f64,
    e_plus: *mut f64,
) -> HbStatus {
    guard(|| {
        let inner = handle_arg(op)?;
        if n < 1 || n > inner.bands.n_gaps {
            set_error("gap index out of range");
            return Err(HB_INVALID_ARGUMENT);
        }
        *out_arg(energy_minus)? = inner.bands.energy_minus[n - 1];
        *out_arg(energy_plus)? = inner.bands.energy_plus[n - 1];
        *out_arg(e_minus)? = inner.bands.e_minus[n - 1];
        *out_arg(e_plus)? = inner.bands.e_plus[n - 1];
        Ok(())
    })
}

/// Comb data of gap `n`: slit height `h_n`, gap mass `M_n`, and whether
/// the gap is numerically degenerate (closed).
///
/// # Safety
/// `op` must be a live handle; out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn hb_operator_gap_comb(
    op: *const hb_operator,
    n: usize,
    height: *mut f64,
    mass: *mut f64,
    degenerate: *mut bool,
) -> HbStatus {
    guard(|| {
        let inner = handle_arg(op)?;
        if n < 1 || n > inner.bands.n_gaps {
            set_error("gap index out of range");
            return Err(HB_INVALID_ARGUMENT);
        }
        *out_arg(height)? = inner.bands.h[n - 1];
        *out_arg(mass)? = inner.bands.mass[n - 1];
        *out_arg(degenerate)? = inner.bands.degenerate[n - 1];
        Ok(())
    })
}

/// The Lyapunov function (Hill discriminant) `Delta(z)` at momentum
/// `z = z_re + i z_im`.
///
/// # Safety
/// `op` must be a live handle; out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn hb_discriminant(
    op: *const hb_operator,
    z_re: f64,
    z_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> HbStatus {
    guard(|| {
        let inner = handle_arg(op)?;
        let eq = match &inner.kind {
            Kind::Smooth(p) => Equation::Standard(p),
            Kind::Distrib(sol) => sol.equation(),
        };
        let operator = Operator::new(eq);
        let m = operator.solve(C64::new(z_re, z_im)).map_err(fail)?;
        *out_arg(out_re)? = m.delta.re;
        *out_arg(out_im)? = m.delta.im;
        Ok(())
    })
}

/// The quasimomentum `k(z)` through the branch-tracked direct route.
/// Points on a gap cut return `HB_DOMAIN`.
///
/// # Safety
/// `op` must be a live handle; out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn hb_quasimomentum(
    op: *const hb_operator,
    z_re: f64,
    z_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> HbStatus {
    guard(|| {
        let inner = handle_arg(op)?;
        let k = inner
            .with_map(|map| map.k_direct(C64::new(z_re, z_im)))
            .map_err(fail)?;
        *out_arg(out_re)? = k.re;
        *out_arg(out_im)? = k.im;
        Ok(())
    })
}

/// The Titchmarsh-Weyl functions `M+(z)` and `M-(z)`.  Dirichlet poles
/// (zeros of `phi(1, z)`) return `HB_DOMAIN`.
///
/// # Safety
/// `op` must be a live handle; out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn hb_weyl_m(
    op: *const hb_operator,
    z_re: f64,
    z_im: f64,
    plus_re: *mut f64,
    plus_im: *mut f64,
    minus_re: *mut f64,
    minus_im: *mut f64,
) -> HbStatus {
    guard(|| {
        let inner = handle_arg(op)?;
        let (mp, mm) = inner
            .with_map(|map| hillband::bloch::weyl_m(map, C64::new(z_re, z_im)))
            .map_err(fail)?;
        *out_arg(plus_re)? = mp.re;
        *out_arg(plus_im)? = mp.im;
        *out_arg(minus_re)? = mm.re;
        *out_arg(minus_im)? = mm.im;
        Ok(())
    })
}

/// For distributional operators: the calibrated constant `c` and
/// `||q||^2` of the Riccati solution.  Smooth handles return
/// `HB_CAPABILITY`.
///
/// # Safety
/// `op` must be a live handle; out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn hb_riccati_constants(
    op: *const hb_operator,
    c: *mut f64,
    norm_q_sq: *mut f64,
) -> HbStatus {
    guard(|| {
        let inner = handle_arg(op)?;
        match &inner.kind {
            Kind::Distrib(sol) => {
                *out_arg(c)? = sol.c;
                *out_arg(norm_q_sq)? = sol.norm_q_sq;
                Ok(())
            }
            Kind::Smooth(_) => {
                set_error("handle was built from a smooth potential");
                Err(HB_CAPABILITY)
            }
        }
    })
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`).  Returns the full message length in bytes,
/// excluding the NUL.
///
/// # Safety
/// `buf` must point to `cap` writable bytes (or be null with `cap` 0).
#[no_mangle]
pub unsafe extern "C" fn hb_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}
