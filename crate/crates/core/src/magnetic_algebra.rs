//! Rational fluxes, clock-and-shift matrices and the Bloch Hamiltonian of the
//! triangular-lattice Hofstadter model.
//!
//! With `omega = exp(2 pi i p/q)` the `q x q` matrices
//!
//! ```text
//! S = diag(omega, omega^2, ..., omega^q)        T = cyclic shift (T e_m = e_{m+1})
//! ```
//!
//! satisfy `S T = omega T S` and `S^q = T^q = 1`. The Bloch Hamiltonian is
//!
//! ```text
//! H(k) = t1 e^{i k2} T + t3 omega_u e^{i(k1+k2)} T S + t2 e^{i k1} S + h.c.
//! ```
//!
//! which for `t1 = t2 = t3 = 1` is the isotropic triangular model and for
//! `t3 = 0` the square / rectangular model.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub type CMatrix = DMatrix<Complex64>;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

/// Returns `s` in `[1, q]` with `s * p = 1 (mod q)`.
pub fn modular_inverse(p: i64, q: i64) -> Result<i64> {
    if q < 1 || p < 1 {
        return Err(Error::InvalidFlux {
            p,
            q,
            reason: "p and q must be positive",
        });
    }
    if q == 1 {
        return Ok(1);
    }
    // extended Euclid on (p mod q, q)
    let (mut old_r, mut r) = (p.rem_euclid(q), q);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    if old_r != 1 {
        return Err(Error::NotCoprime { p, q });
    }
    let inv = old_s.rem_euclid(q);
    Ok(if inv == 0 { q } else { inv })
}

/// Reduced rational flux `Phi = 2 pi p / q` per unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "FluxRepr", into = "FluxRepr")]
pub struct Flux {
    p: u64,
    q: u64,
    s: u64,
}

#[derive(Serialize, Deserialize)]
struct FluxRepr {
    p: u64,
    q: u64,
}

impl TryFrom<FluxRepr> for Flux {
    type Error = Error;
    fn try_from(r: FluxRepr) -> Result<Self> {
        Flux::new(r.p, r.q)
    }
}

impl From<Flux> for FluxRepr {
    fn from(f: Flux) -> Self {
        FluxRepr { p: f.p, q: f.q }
    }
}

impl Flux {
    /// Requires `1 <= p <= q` and `gcd(p, q) = 1`. The endpoint `p = q` is only
    /// valid as `1/1`, which stands for zero flux (`omega = 1`).
    pub fn new(p: u64, q: u64) -> Result<Self> {
        let err = |reason| Error::InvalidFlux {
            p: p as i64,
            q: q as i64,
            reason,
        };
        if q == 0 {
            return Err(err("q must be positive"));
        }
        if p == 0 || p > q {
            return Err(err("p must lie in [1, q]"));
        }
        if q > i64::MAX as u64 / 4 {
            return Err(err("q too large"));
        }
        if gcd(p, q) != 1 {
            return Err(err("p and q must be coprime"));
        }
        let s = modular_inverse(p as i64, q as i64)? as u64;
        Ok(Flux { p, q, s })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Modular inverse of `p` modulo `q`, in `[1, q]`.
    pub fn s(&self) -> u64 {
        self.s
    }

    /// `omega^m`, evaluated from the reduced exponent so that `omega^q = 1`
    /// holds to rounding.
    pub fn omega_pow(&self, m: i64) -> Complex64 {
        let e = ((self.p as i128 * m as i128).rem_euclid(self.q as i128)) as f64;
        Complex64::from_polar(1.0, TAU * e / self.q as f64)
    }

    pub fn omega(&self) -> Complex64 {
        self.omega_pow(1)
    }

    /// Total flux `Phi` in radians.
    pub fn angle(&self) -> f64 {
        TAU * self.p as f64 / self.q as f64
    }

    /// `Phi / 2 pi` as a float.
    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// The flux `-Phi`, represented in `(0, 2 pi]` as `(q - p)/q`.
    pub fn negated(&self) -> Flux {
        if self.q == 1 {
            *self
        } else {
            Flux::new(self.q - self.p, self.q).expect("q - p is coprime to q")
        }
    }
}

impl std::str::FromStr for Flux {
    type Err = Error;

    /// Parses `p/q`, surrounding whitespace allowed.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |message: &str| Error::Parse { line: 1, message: format!("flux {s:?}: {message}") };
        let (p, q) = s.trim().split_once('/').ok_or_else(|| bad("expected p/q"))?;
        let p: u64 = p.trim().parse().map_err(|_| bad("bad numerator"))?;
        let q: u64 = q.trim().parse().map_err(|_| bad("bad denominator"))?;
        Flux::new(p, q)
    }
}

impl std::fmt::Display for Flux {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// Hofstadter model on the triangular lattice.
///
/// `t1`, `t2`, `t3` multiply the `T`, `S` and `omega_u T S` hops. The
/// down-triangle phase is `omega_d = exp(-i phi_d)` and `omega_u` is always
/// derived as `omega / omega_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HofstadterModel {
    pub flux: Flux,
    pub phi_d: f64,
    pub t: [f64; 3],
}

impl HofstadterModel {
    pub fn new(flux: Flux, phi_d: f64, t: [f64; 3]) -> Result<Self> {
        if !phi_d.is_finite() {
            return Err(Error::InvalidModel(format!("phi_d must be finite, got {phi_d}")));
        }
        for (i, &ti) in t.iter().enumerate() {
            if !ti.is_finite() || ti < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "t{} must be finite and nonnegative, got {ti}",
                    i + 1
                )));
            }
        }
        Ok(HofstadterModel { flux, phi_d, t })
    }

    /// Isotropic triangular model, `t1 = t2 = t3 = 1`.
    pub fn triangular(flux: Flux, phi_d: f64) -> Self {
        Self::new(flux, phi_d, [1.0; 3]).expect("isotropic parameters are valid")
    }

    /// Square-lattice limit (`t3 = 0`).
    pub fn square(flux: Flux) -> Self {
        Self::new(flux, PI / 2.0, [1.0, 1.0, 0.0]).expect("square parameters are valid")
    }

    pub fn q(&self) -> usize {
        self.flux.q() as usize
    }

    pub fn omega_d(&self) -> Complex64 {
        Complex64::from_polar(1.0, -self.phi_d)
    }

    pub fn omega_u(&self) -> Complex64 {
        self.flux.omega() * self.omega_d().conj()
    }

    /// `omega_u^q = omega_d^{-q}`, computed without accumulating `q` products.
    pub fn omega_u_pow_q(&self) -> Complex64 {
        let q = self.flux.q() as f64;
        Complex64::from_polar(1.0, (q * self.phi_d).rem_euclid(TAU))
    }

    pub fn is_isotropic(&self) -> bool {
        self.t.iter().all(|&t| t == 1.0)
    }

    /// Whether `phi_d = +-pi/2` (modulo `2 pi`) to 1e-12.
    pub fn is_quarter_turn(&self) -> bool {
        let r = self.phi_d.rem_euclid(PI);
        (r - PI / 2.0).abs() < 1e-12
    }

    /// Upper bound on the spectral radius of `H(k)`.
    pub fn energy_bound(&self) -> f64 {
        2.0 * (self.t[0] + self.t[1] + self.t[2])
    }

    /// Same model at flux `-Phi`.
    pub fn with_flux(&self, flux: Flux) -> Self {
        HofstadterModel { flux, ..*self }
    }

    /// Hopping data of `H(k)` as a periodic tridiagonal matrix: the real
    /// diagonal and the `q` cyclic subdiagonal entries `H[(m+1) mod q][m]`
    /// (before Hermitian symmetrisation when `q <= 2`).
    pub fn hopping_data(&self, k: BlochMomentum) -> (Vec<f64>, Vec<Complex64>) {
        let q = self.q();
        let [t1, t2, t3] = self.t;
        let e1 = Complex64::from_polar(1.0, k.k1);
        let e2 = Complex64::from_polar(1.0, k.k2);
        let hop_t = e2 * t1;
        let hop_ts = self.omega_u() * e1 * e2 * t3;
        let mut diag = Vec::with_capacity(q);
        let mut sub = Vec::with_capacity(q);
        for m in 0..q {
            let w = self.flux.omega_pow(m as i64 + 1);
            diag.push(2.0 * t2 * (e1 * w).re);
            sub.push(hop_t + hop_ts * w);
        }
        (diag, sub)
    }
}

/// Bloch momentum. Any real pair is accepted; `H(k)` is `2 pi` periodic in both
/// components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochMomentum {
    pub k1: f64,
    pub k2: f64,
}

impl BlochMomentum {
    pub fn new(k1: f64, k2: f64) -> Self {
        BlochMomentum { k1, k2 }
    }

    /// Both components reduced into `[-pi, pi)`.
    pub fn reduced(&self) -> Self {
        let r = |x: f64| (x + PI).rem_euclid(TAU) - PI;
        BlochMomentum {
            k1: r(self.k1),
            k2: r(self.k2),
        }
    }

    pub fn shifted(&self, d1: f64, d2: f64) -> Self {
        BlochMomentum {
            k1: self.k1 + d1,
            k2: self.k2 + d2,
        }
    }
}

/// Dense Hermitian `q x q` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Wraps `m` after checking `||m - m^dagger||_max <= 1e-12`.
    pub fn new(m: CMatrix) -> Result<Self> {
        let r = hermiticity_residual(&m);
        if !m.is_square() || r > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "matrix is not Hermitian (residual {r:e})"
            )));
        }
        Ok(HermitianMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.0)
    }

    pub fn eigh(&self) -> (Vec<f64>, CMatrix) {
        linalg::hermitian_eigh(&self.0)
    }
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The clock and shift matrices `(S, T)`.
pub fn clock_shift(flux: Flux) -> (CMatrix, CMatrix) {
    let q = flux.q() as usize;
    let s = CMatrix::from_fn(q, q, |r, c| {
        if r == c {
            flux.omega_pow(r as i64 + 1)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    (s, shift_matrix(q))
}

pub(crate) fn shift_matrix(q: usize) -> CMatrix {
    CMatrix::from_fn(q, q, |r, c| {
        if r == (c + 1) % q {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `S^n` for any integer `n` (diagonal, evaluated exactly).
pub fn clock_power(flux: Flux, n: i64) -> CMatrix {
    let q = flux.q() as usize;
    CMatrix::from_fn(q, q, |r, c| {
        if r == c {
            flux.omega_pow((r as i64 + 1) * n)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `T^n` for any integer `n` (a permutation matrix).
pub fn shift_power(q: usize, n: i64) -> CMatrix {
    let n = n.rem_euclid(q as i64) as usize;
    CMatrix::from_fn(q, q, |r, c| {
        if r == (c + n) % q {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// The Bloch Hamiltonian `H(k)`.
pub fn build_hamiltonian(model: &HofstadterModel, k: BlochMomentum) -> HermitianMatrix {
    let k = k.reduced();
    let q = model.q();
    let (diag, sub) = model.hopping_data(k);
    let mut h = CMatrix::zeros(q, q);
    for m in 0..q {
        h[(m, m)] += Complex64::new(diag[m], 0.0);
        let r = (m + 1) % q;
        h[(r, m)] += sub[m];
        h[(m, r)] += sub[m].conj();
    }
    HermitianMatrix(h)
}

/// Exact momentum derivatives `(dH/dk1, dH/dk2)`.
pub fn hamiltonian_derivatives(model: &HofstadterModel, k: BlochMomentum) -> (CMatrix, CMatrix) {
    let q = model.q();
    let [t1, t2, t3] = model.t;
    let i = Complex64::i();
    let e1 = Complex64::from_polar(1.0, k.k1);
    let e2 = Complex64::from_polar(1.0, k.k2);
    let hop_ts = model.omega_u() * e1 * e2 * t3;
    let mut d1 = CMatrix::zeros(q, q);
    let mut d2 = CMatrix::zeros(q, q);
    for m in 0..q {
        let w = model.flux.omega_pow(m as i64 + 1);
        let r = (m + 1) % q;
        // diagonal: t2 e^{ik1} w + c.c.
        let a = i * e1 * w * t2;
        d1[(m, m)] += a + a.conj();
        // off-diagonal: t1 e^{ik2} + t3 omega_u e^{i(k1+k2)} w
        let b1 = i * hop_ts * w;
        let b2 = i * (e2 * t1 + hop_ts * w);
        d1[(r, m)] += b1;
        d1[(m, r)] += b1.conj();
        d2[(r, m)] += b2;
        d2[(m, r)] += b2.conj();
    }
    (d1, d2)
}

/// Residuals of the magnetic translation identities
///
/// ```text
/// H(k1, k2) = T^{-s} H(k1 - 2 pi/q, k2) T^s = S^{-s} H(k1, k2 + 2 pi/q) S^s
/// ```
pub fn magnetic_symmetry_residual(model: &HofstadterModel, k: BlochMomentum) -> (f64, f64) {
    let q = model.q();
    let s = model.flux.s() as i64;
    let step = TAU / q as f64;
    let h = build_hamiltonian(model, k).into_inner();
    let ts = shift_power(q, s);
    let ss = clock_power(model.flux, s);
    let h1 = build_hamiltonian(model, k.shifted(-step, 0.0)).into_inner();
    let h2 = build_hamiltonian(model, k.shifted(0.0, step)).into_inner();
    let r1 = max_abs(&(&h - ts.adjoint() * h1 * &ts));
    let r2 = max_abs(&(&h - ss.adjoint() * h2 * &ss));
    (r1, r2)
}

/// Spectral negation residual between flux `Phi` and `-Phi` at `phi_d = +-pi/2`.
///
/// Eigenvalues are computed at the band-edge momenta of both fluxes. For each
/// momentum at `Phi` the best-matching momentum at `-Phi` is chosen and the
/// sorted spectrum compared with the negated, reversed spectrum there. The
/// result is the worst of these best matches.
pub fn inversion_check(model: &HofstadterModel) -> Result<f64> {
    if !model.is_quarter_turn() {
        return Err(Error::PhiDNotQuarterTurn(model.phi_d));
    }
    if model.q() == 1 {
        return Ok(0.0);
    }
    let partner = model.with_flux(model.flux.negated());
    let spectra = |m: &HofstadterModel| -> Vec<Vec<f64>> {
        crate::spectrum::band_edge_kpoints(m)
            .into_iter()
            .map(|k| build_hamiltonian(m, k).eigenvalues())
            .collect()
    };
    let a = spectra(model);
    let b = spectra(&partner);
    let mut worst: f64 = 0.0;
    for ea in &a {
        let best = b
            .iter()
            .map(|eb| {
                ea.iter()
                    .zip(eb.iter().rev())
                    .map(|(x, y)| (x + y).abs())
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    Ok(worst)
}
