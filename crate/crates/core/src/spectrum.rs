//! Band intervals and gaps.
//!
//! `H(k)` obeys the Chambers relation
//!
//! ```text
//! det(H(k) - lambda) = P(lambda) + det H(k)
//! ```
//!
//! with `P` independent of `k`, so every band edge is an eigenvalue of `H` at
//! a momentum where `det H(k)` is extremal. Only those momenta are
//! eigensolved; [`compute_bands_dense`] scans a grid instead and serves as the
//! cross-check and fallback.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, PeriodicTridiagonal};
use crate::magnetic_algebra::{build_hamiltonian, BlochMomentum, HofstadterModel};

/// Default threshold below which a gap counts as closed.
pub const DEFAULT_EPS_GAP: f64 = 1e-8;

/// Overlap between consecutive assembled bands that is reported as failure.
pub const OVERLAP_TOLERANCE: f64 = 1e-8;

/// The `k`-independent part of the characteristic polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChambersData {
    /// Coefficients of `P(lambda)`, ascending powers, length `q + 1`,
    /// constant term zero.
    pub poly_coeffs: Vec<f64>,
    /// Constant `h` in the closed form of `det H(k)`.
    pub h_offset: f64,
    pub reference: BlochMomentum,
    /// Largest relative coefficient deviation seen across the check momenta.
    pub max_deviation: f64,
}

impl ChambersData {
    pub fn eval(&self, lambda: f64) -> f64 {
        self.poly_coeffs.iter().rev().fold(0.0, |acc, &c| acc * lambda + c)
    }
}

/// Coefficients (ascending) of `prod_i (r_i - lambda)`.
fn poly_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &r in roots {
        // multiply by (r - lambda)
        let mut next = vec![0.0; c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i] += r * ci;
            next[i + 1] -= ci;
        }
        c = next;
    }
    c
}

fn characteristic_poly(model: &HofstadterModel, k: BlochMomentum) -> Vec<f64> {
    poly_from_roots(&build_hamiltonian(model, k).eigenvalues())
}

/// Direct determinant of `H(k)` via LU.
pub fn det_direct(model: &HofstadterModel, k: BlochMomentum) -> f64 {
    linalg::determinant(build_hamiltonian(model, k).as_matrix()).re
}

/// The `k`-dependent part of `det H(k)`:
///
/// ```text
/// (-1)^{q+1} 2 [ t2^q cos(q k1) + t1^q cos(q k2)
///               + (-1)^{q-1} t3^q Re(omega_u^q e^{i q (k1 + k2)}) ]
/// ```
///
/// For `t1 = t2 = t3 = 1` this is the oscillatory part of the closed form of
/// `det H(k)`.
pub fn det_oscillatory(model: &HofstadterModel, k: BlochMomentum) -> f64 {
    let qi = model.flux.q() as i32;
    let q = qi as f64;
    let [t1, t2, t3] = model.t;
    let sign = if qi % 2 == 1 { 1.0 } else { -1.0 };
    let wq = model.omega_u_pow_q();
    let phase = num_complex::Complex64::from_polar(1.0, q * (k.k1 + k.k2).rem_euclid(TAU));
    let cross = (wq * phase).re;
    sign * 2.0
        * (t2.powi(qi) * (q * k.k1).cos() + t1.powi(qi) * (q * k.k2).cos() + sign * t3.powi(qi) * cross)
}

/// Calibrates `h` as `det H(k0) - oscillatory(k0)` at `k0 = (0, 0)`.
pub fn det_offset(model: &HofstadterModel) -> f64 {
    let k0 = BlochMomentum::new(0.0, 0.0);
    det_direct(model, k0) - det_oscillatory(model, k0)
}

/// Closed form of `det H(k)` for the isotropic model.
pub fn det_closed_form(model: &HofstadterModel, k: BlochMomentum) -> Result<f64> {
    if !model.is_isotropic() {
        return Err(Error::Anisotropic);
    }
    Ok(det_offset(model) + det_oscillatory(model, k))
}

/// `P(lambda) = det(H(k0) - lambda) - det H(k0)` at `k0 = (0, 0)`, checked
/// against three further momenta.
pub fn chambers_polynomial(model: &HofstadterModel) -> Result<ChambersData> {
    let probes = [
        BlochMomentum::new(0.713, -1.291),
        BlochMomentum::new(-2.417, 0.389),
        BlochMomentum::new(1.9, 2.6),
    ];
    chambers_polynomial_with(model, &probes)
}

/// As [`chambers_polynomial`] with caller-chosen check momenta.
pub fn chambers_polynomial_with(
    model: &HofstadterModel,
    probes: &[BlochMomentum],
) -> Result<ChambersData> {
    let k0 = BlochMomentum::new(0.0, 0.0);
    let strip = |mut c: Vec<f64>| {
        c[0] = 0.0;
        c
    };
    let reference = strip(characteristic_poly(model, k0));
    let scale = reference.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1.0);
    let mut max_deviation: f64 = 0.0;
    for &k in probes {
        let other = strip(characteristic_poly(model, k));
        let dev = reference
            .iter()
            .zip(&other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        max_deviation = max_deviation.max(dev);
    }
    if max_deviation > 1e-9 {
        return Err(Error::ChambersViolation(max_deviation));
    }
    Ok(ChambersData {
        poly_coeffs: reference,
        h_offset: det_offset(model),
        reference: k0,
        max_deviation,
    })
}

/// Momenta at which band edges occur.
///
/// For the isotropic model at `phi_d = +-pi/2` these are tabulated. In the
/// scaled variables `(x, y) = q k` the oscillatory part of `det H` is
/// `cos x + cos y + sin(x + y)` (up to sign) for odd `q`, extremal at
/// `+-(pi/6, pi/6)` and `+-(5pi/6, 5pi/6)`. For even `q` it is
/// `cos x + cos y + eps cos(x + y)` with `eps = (-1)^{q/2 + 1}`: extremal at
/// `(0, 0)` and `+-(2pi/3, 2pi/3)` when `eps = 1` (`q = 2 mod 4`) and at those
/// points shifted by `(pi, pi)` when `eps = -1` (`q = 0 mod 4`).
///
/// Otherwise the maximiser and minimiser of the oscillatory part are located
/// numerically.
pub fn band_edge_kpoints(model: &HofstadterModel) -> Vec<BlochMomentum> {
    let qn = model.flux.q();
    let q = qn as f64;
    if model.is_isotropic() && model.is_quarter_turn() {
        let pts: Vec<f64> = if qn % 2 == 1 {
            vec![PI / 6.0, -PI / 6.0, 5.0 * PI / 6.0, -5.0 * PI / 6.0]
        } else if qn % 4 == 2 {
            vec![0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0]
        } else {
            vec![PI, PI / 3.0, -PI / 3.0]
        };
        return pts
            .into_iter()
            .map(|x| BlochMomentum::new(x / q, x / q))
            .collect();
    }
    det_extremizers(model)
}

/// Shape of the oscillatory part in the scaled variables `x = q k1`,
/// `y = q k2`: `a cos x + b cos y + c cos(x + y + theta)`, normalised so the
/// largest coefficient is one.
fn oscillatory_shape(model: &HofstadterModel) -> Option<(f64, f64, f64, f64)> {
    let q = model.flux.q() as f64;
    let [t1, t2, t3] = model.t;
    let logs = [t2.ln() * q, t1.ln() * q, t3.ln() * q];
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return None;
    }
    let scaled = |l: f64| (l - top).exp();
    let sign = if model.flux.q() % 2 == 1 { 1.0 } else { -1.0 };
    let theta = model.omega_u_pow_q().arg();
    Some((scaled(logs[0]), scaled(logs[1]), sign * scaled(logs[2]), theta))
}

fn det_extremizers(model: &HofstadterModel) -> Vec<BlochMomentum> {
    let q = model.flux.q() as f64;
    let Some((a, b, c, theta)) = oscillatory_shape(model) else {
        return vec![BlochMomentum::new(0.0, 0.0)];
    };
    let f = |x: f64, y: f64| a * x.cos() + b * y.cos() + c * (x + y + theta).cos();
    let grad = |x: f64, y: f64| {
        let s = (x + y + theta).sin();
        (-a * x.sin() - c * s, -b * y.sin() - c * s)
    };
    let hess = |x: f64, y: f64| {
        let co = (x + y + theta).cos();
        (-a * x.cos() - c * co, -c * co, -b * y.cos() - c * co)
    };
    const N: usize = 64;
    let h = TAU / N as f64;
    let (mut best_max, mut best_min) = ((0.0, 0.0, f64::NEG_INFINITY), (0.0, 0.0, f64::INFINITY));
    for i in 0..N {
        for j in 0..N {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let v = f(x, y);
            if v > best_max.2 {
                best_max = (x, y, v);
            }
            if v < best_min.2 {
                best_min = (x, y, v);
            }
        }
    }
    let refine = |(mut x, mut y, mut v): (f64, f64, f64), maximize: bool| {
        for _ in 0..50 {
            let (gx, gy) = grad(x, y);
            let (hxx, hxy, hyy) = hess(x, y);
            let det = hxx * hyy - hxy * hxy;
            if det.abs() < 1e-300 {
                break;
            }
            let dx = (hyy * gx - hxy * gy) / det;
            let dy = (hxx * gy - hxy * gx) / det;
            let (nx, ny) = (x - dx, y - dy);
            let nv = f(nx, ny);
            let better = if maximize { nv >= v - 1e-15 } else { nv <= v + 1e-15 };
            if !better || (dx.abs() > h || dy.abs() > h) {
                break;
            }
            (x, y, v) = (nx, ny, nv);
            if dx.abs().max(dy.abs()) < 1e-15 {
                break;
            }
        }
        (x, y)
    };
    let (x1, y1) = refine(best_max, true);
    let (x2, y2) = refine(best_min, false);
    vec![BlochMomentum::new(x1 / q, y1 / q), BlochMomentum::new(x2 / q, y2 / q)]
}

/// Eigenvalues of `H(k)`, ascending, via bisection on the periodic
/// tridiagonal form.
pub fn eigenvalues_at(model: &HofstadterModel, k: BlochMomentum) -> Vec<f64> {
    let (diag, sub) = model.hopping_data(k.reduced());
    PeriodicTridiagonal::new(diag, sub).eigenvalues()
}

/// Band intervals at one flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpectrum {
    pub model: HofstadterModel,
    /// `q` intervals `[e_min, e_max]`, ascending.
    pub bands: Vec<[f64; 2]>,
    pub edge_kpoints: Vec<BlochMomentum>,
}

impl BandSpectrum {
    fn from_samples(
        model: HofstadterModel,
        kpoints: Vec<BlochMomentum>,
        samples: impl IntoIterator<Item = Vec<f64>>,
    ) -> Result<Self> {
        let q = model.q();
        let mut bands = vec![[f64::INFINITY, f64::NEG_INFINITY]; q];
        for ev in samples {
            for (b, &e) in bands.iter_mut().zip(&ev) {
                b[0] = b[0].min(e);
                b[1] = b[1].max(e);
            }
        }
        for n in 1..q {
            let overlap = bands[n - 1][1] - bands[n][0];
            if overlap > OVERLAP_TOLERANCE {
                return Err(Error::BandOverlap {
                    lower: n - 1,
                    upper: n,
                    overlap,
                });
            }
        }
        Ok(BandSpectrum {
            model,
            bands,
            edge_kpoints: kpoints,
        })
    }

    pub fn q(&self) -> usize {
        self.bands.len()
    }
}

/// Momenta with equal `det H` share a spectrum, so only one maximiser and one
/// minimiser of the oscillatory part need an eigensolve.
fn distinct_levels(model: &HofstadterModel, kpoints: &[BlochMomentum]) -> Vec<BlochMomentum> {
    let Some((a, b, c, theta)) = oscillatory_shape(model) else {
        return kpoints[..1].to_vec();
    };
    let q = model.flux.q() as f64;
    let f = |k: &BlochMomentum| {
        let (x, y) = (q * k.k1, q * k.k2);
        a * x.cos() + b * y.cos() + c * (x + y + theta).cos()
    };
    let by_level = |x: &&BlochMomentum, y: &&BlochMomentum| f(x).total_cmp(&f(y));
    let hi = kpoints.iter().max_by(by_level).copied();
    let lo = kpoints.iter().min_by(by_level).copied();
    match (lo, hi) {
        (Some(lo), Some(hi)) if (f(&hi) - f(&lo)).abs() > 1e-14 => vec![lo, hi],
        (Some(lo), _) => vec![lo],
        _ => Vec::new(),
    }
}

/// Bands from eigensolves at the band-edge momenta only. If the bisection
/// results overlap, the same momenta are solved densely before giving up.
pub fn compute_bands(model: &HofstadterModel) -> Result<BandSpectrum> {
    let kpoints = band_edge_kpoints(model);
    let solve = distinct_levels(model, &kpoints);
    let samples: Vec<Vec<f64>> = solve.iter().map(|&k| eigenvalues_at(model, k)).collect();
    BandSpectrum::from_samples(*model, kpoints.clone(), samples).or_else(|_| {
        let dense = solve.iter().map(|&k| {
            let (diag, sub) = model.hopping_data(k.reduced());
            linalg::hermitian_eigenvalues(&PeriodicTridiagonal::new(diag, sub).to_dense())
        });
        BandSpectrum::from_samples(*model, kpoints, dense)
    })
}

/// Bands from a dense `n x n` scan of the `2 pi/q x 2 pi/q` cell. Each band's
/// lowest and highest grid samples are then polished by a compass search on
/// that eigenvalue, so conical touchings are resolved as well.
pub fn compute_bands_dense(model: &HofstadterModel, n: usize) -> Result<BandSpectrum> {
    let q = model.q();
    let n = n.max(2);
    let h = TAU / q as f64 / n as f64;
    let mut kpoints = Vec::with_capacity(n * n);
    let mut samples = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let k = BlochMomentum::new(i as f64 * h, j as f64 * h);
            samples.push(eigenvalues_at(model, k));
            kpoints.push(k);
        }
    }
    let mut extra = Vec::new();
    for b in 0..q {
        let (mut imin, mut imax) = (0, 0);
        for (i, s) in samples.iter().enumerate() {
            if s[b] < samples[imin][b] {
                imin = i;
            }
            if s[b] > samples[imax][b] {
                imax = i;
            }
        }
        for (start, sign) in [(kpoints[imin], 1.0), (kpoints[imax], -1.0)] {
            let k = compass_search(|k| sign * eigenvalues_at(model, k)[b], start, h);
            extra.push(eigenvalues_at(model, k));
        }
    }
    samples.extend(extra);
    BandSpectrum::from_samples(*model, Vec::new(), samples)
}

/// Derivative-free minimisation of `f` from `start` with initial step `step`.
fn compass_search(f: impl Fn(BlochMomentum) -> f64, start: BlochMomentum, step: f64) -> BlochMomentum {
    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (-1.0, -1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
    ];
    let mut k = start;
    let mut v = f(k);
    let mut step = step;
    while step > 1e-12 {
        let mut moved = false;
        for (a, b) in DIRS {
            let cand = k.shifted(a * step, b * step);
            let cv = f(cand);
            if cv < v {
                k = cand;
                v = cv;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    k
}

/// [`compute_bands`], falling back to a 64 x 64 scan if the assembled bands
/// overlap.
pub fn compute_bands_robust(model: &HofstadterModel) -> Result<BandSpectrum> {
    compute_bands(model).or_else(|_| compute_bands_dense(model, 64))
}

/// How a gap's Chern number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChernSource {
    /// `sigma_0 = sigma_q = 0`.
    Trivial,
    WindowSquare,
    WindowTriangular,
    Chain,
    ComputedFhs,
    ComputedTransport,
    /// Flux removed from coloring by the exclusion list.
    Excluded,
    Unresolved,
}

impl ChernSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChernSource::Trivial => "trivial",
            ChernSource::WindowSquare => "window_square",
            ChernSource::WindowTriangular => "window_triangular",
            ChernSource::Chain => "chain",
            ChernSource::ComputedFhs => "computed_fhs",
            ChernSource::ComputedTransport => "computed_transport",
            ChernSource::Excluded => "excluded",
            ChernSource::Unresolved => "unresolved",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "trivial" => ChernSource::Trivial,
            "window_square" => ChernSource::WindowSquare,
            "window_triangular" => ChernSource::WindowTriangular,
            "chain" => ChernSource::Chain,
            "computed_fhs" => ChernSource::ComputedFhs,
            "computed_transport" => ChernSource::ComputedTransport,
            "excluded" => ChernSource::Excluded,
            "unresolved" => ChernSource::Unresolved,
            _ => return None,
        })
    }
}

mod unbounded {
    //! Infinite interval ends are written as `null`.
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn lower<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }

    pub fn upper<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// One spectral gap at one flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub p: u64,
    pub q: u64,
    /// Number of bands below the gap, `0..=q`.
    pub j: u64,
    #[serde(serialize_with = "unbounded::serialize", deserialize_with = "unbounded::lower")]
    pub lo: f64,
    #[serde(serialize_with = "unbounded::serialize", deserialize_with = "unbounded::upper")]
    pub hi: f64,
    #[serde(serialize_with = "unbounded::serialize", deserialize_with = "unbounded::upper")]
    pub width: f64,
    pub closed: bool,
    pub chern: Option<i64>,
    pub source: ChernSource,
}

impl GapRecord {
    /// Density `j/q` as an unreduced integer pair.
    pub fn rho(&self) -> (u64, u64) {
        (self.j, self.q)
    }

    pub fn is_open(&self) -> bool {
        !self.closed
    }

    pub fn is_semi_infinite(&self) -> bool {
        self.j == 0 || self.j == self.q
    }
}

/// The `q + 1` gaps of a band spectrum. Gaps `0` and `q` are semi-infinite
/// and carry `sigma = 0`.
pub fn compute_gaps(spec: &BandSpectrum, eps_gap: f64) -> Vec<GapRecord> {
    let q = spec.q();
    let flux = spec.model.flux;
    (0..=q)
        .map(|j| {
            let lo = if j == 0 { f64::NEG_INFINITY } else { spec.bands[j - 1][1] };
            let hi = if j == q { f64::INFINITY } else { spec.bands[j][0] };
            let width = if j == 0 || j == q { f64::INFINITY } else { (hi - lo).max(0.0) };
            let closed = width < eps_gap;
            let trivial = j == 0 || j == q;
            GapRecord {
                p: flux.p(),
                q: flux.q(),
                j: j as u64,
                lo,
                hi,
                width,
                closed,
                chern: if trivial { Some(0) } else { None },
                source: if trivial { ChernSource::Trivial } else { ChernSource::Unresolved },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetic_algebra::Flux;

    fn flux(p: u64, q: u64) -> Flux {
        Flux::new(p, q).unwrap()
    }

    #[test]
    fn poly_from_roots_expands() {
        // (1 - x)(2 - x) = 2 - 3x + x^2
        assert_eq!(poly_from_roots(&[1.0, 2.0]), vec![2.0, -3.0, 1.0]);
    }

    #[test]
    fn chambers_q1_is_minus_lambda() {
        let m = HofstadterModel::triangular(flux(1, 1), 0.7);
        let c = chambers_polynomial(&m).unwrap();
        assert_eq!(c.poly_coeffs.len(), 2);
        assert!(c.poly_coeffs[0].abs() < 1e-14);
        assert!((c.poly_coeffs[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn chambers_square_half_flux_is_lambda_squared() {
        // H = [[-2cos k1, b*], [b, 2cos k1]]: det(H - l) - det H = l^2
        let m = HofstadterModel::square(flux(1, 2));
        let c = chambers_polynomial(&m).unwrap();
        assert!(c.poly_coeffs[0].abs() < 1e-14);
        assert!(c.poly_coeffs[1].abs() < 1e-12);
        assert!((c.poly_coeffs[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_q1_matches_direct() {
        let m = HofstadterModel::triangular(flux(1, 1), 0.4);
        for k in [BlochMomentum::new(0.3, 1.0), BlochMomentum::new(-2.0, 0.1)] {
            let d = det_direct(&m, k);
            assert!((det_closed_form(&m, k).unwrap() - d).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_rejects_anisotropic() {
        let m = HofstadterModel::square(flux(1, 3));
        assert!(matches!(det_closed_form(&m, BlochMomentum::new(0.0, 0.0)), Err(Error::Anisotropic)));
    }

    #[test]
    fn kpoints_tabulated() {
        let m = HofstadterModel::triangular(flux(1, 2), PI / 2.0);
        let k = band_edge_kpoints(&m);
        assert_eq!(k.len(), 3);
        assert!(k.contains(&BlochMomentum::new(0.0, 0.0)));
        assert!(k.iter().any(|k| (k.k1 - PI / 3.0).abs() < 1e-15 && (k.k2 - PI / 3.0).abs() < 1e-15));
        assert!(k.iter().any(|k| (k.k1 + PI / 3.0).abs() < 1e-15 && (k.k2 + PI / 3.0).abs() < 1e-15));

        let m = HofstadterModel::triangular(flux(1, 3), PI / 2.0);
        let k = band_edge_kpoints(&m);
        for x in [PI / 18.0, -PI / 18.0, 5.0 * PI / 18.0, -5.0 * PI / 18.0] {
            assert!(k.iter().any(|k| (k.k1 - x).abs() < 1e-15 && (k.k2 - x).abs() < 1e-15));
        }
    }

    #[test]
    fn q1_single_band() {
        let m = HofstadterModel::triangular(flux(1, 1), PI / 2.0);
        let s = compute_bands(&m).unwrap();
        assert_eq!(s.bands.len(), 1);
        let r = 3.0 * 3f64.sqrt();
        assert!((s.bands[0][0] + r).abs() < 1e-12 && (s.bands[0][1] - r).abs() < 1e-12, "{:?}", s.bands);
        let gaps = compute_gaps(&s, DEFAULT_EPS_GAP);
        assert_eq!(gaps.len(), 2);
        assert!(gaps.iter().all(|g| g.chern == Some(0) && g.source == ChernSource::Trivial));
    }

    #[test]
    fn square_half_flux_middle_gap_closed() {
        let s = compute_bands(&HofstadterModel::square(flux(1, 2))).unwrap();
        assert_eq!(s.bands.len(), 2);
        assert!(s.bands[0][1].abs() < 1e-12 && s.bands[1][0].abs() < 1e-12);
        assert!((s.bands[0][0] + s.bands[1][1]).abs() < 1e-12);
        let gaps = compute_gaps(&s, DEFAULT_EPS_GAP);
        assert!(gaps[1].closed);
    }

    #[test]
    fn gap_record_json_uses_null_for_unbounded() {
        let s = compute_bands(&HofstadterModel::triangular(flux(1, 1), 0.0)).unwrap();
        let g = &compute_gaps(&s, DEFAULT_EPS_GAP)[0];
        let j = serde_json::to_string(g).unwrap();
        assert!(j.contains("\"lo\":null"), "{j}");
        let back: GapRecord = serde_json::from_str(&j).unwrap();
        assert_eq!(&back, g);
    }
}
