//! Chern numbers of bands and gaps.
//!
//! The integer invariants come from gauge-invariant link variables on a
//! lattice over the magnetic Brillouin zone `[0, 2 pi) x [0, 2 pi/q)`. `H(k)`
//! is `2 pi` periodic in `k1`; across the `k2` boundary eigenvectors are
//! identified through `H(k1, k2 + 2 pi/q) = S^s H(k1, k2) S^{-s}`, which closes
//! the torus. Gap invariants use the rank-`j` projector onto the lowest `j`
//! bands, so touchings among those bands do not matter.
//!
//! Curvature is `Omega = -2 Im <d1 psi|d2 psi>`, the sign for which gap
//! Chern numbers obey `sigma_j = s j (mod q)`.
//!
//! Parallel transport around one `2 pi/q x 2 pi/q` cell gives an independent
//! check: its holonomy is the curvature flux through the cell, which is
//! `2 pi sigma / q`, so it fixes `sigma` modulo `q`.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigh, CMatrix};
use crate::magnetic_algebra::{
    build_hamiltonian, clock_power, hamiltonian_derivatives, BlochMomentum, HofstadterModel,
};
use crate::spectrum::{compute_bands_robust, compute_gaps, DEFAULT_EPS_GAP};

pub const DEFAULT_GRID: usize = 32;
pub const MAX_GRID: usize = 256;
pub const DEFAULT_TRANSPORT_STEPS: usize = 256;

/// Accepted distance of a raw flux sum from the nearest integer.
pub const QUANTIZATION_TOLERANCE: f64 = 0.05;

/// Largest plaquette field strength (radians) for which a lattice result is
/// trusted. Beyond it the grid is refined.
pub const ADMISSIBLE_PLAQUETTE: f64 = PI / 2.0;

/// Smallest level spacing at which eigenvectors are treated as separable.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChernMethod {
    Fhs,
    Transport,
}

impl std::str::FromStr for ChernMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fhs" => Ok(ChernMethod::Fhs),
            "transport" => Ok(ChernMethod::Transport),
            other => Err(Error::Config(format!("unknown Chern method {other:?}"))),
        }
    }
}

/// Whether an invariant belongs to a single band or to the gap above the
/// lowest `j` bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    Band,
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernResult {
    pub subject: Subject,
    /// Band index `n` (1-based) or gap index `j`.
    pub index: usize,
    /// The Chern number. For [`ChernMethod::Transport`] only its residue
    /// modulo `q`, in `[0, q)`, is known and that residue is reported.
    pub value: i64,
    pub method: ChernMethod,
    /// Points per `2 pi/q` (lattice) or steps per edge (transport).
    pub grid: usize,
    /// Distance of the raw sum (or `q * holonomy / 2 pi`) from the nearest
    /// integer.
    pub residual: f64,
    /// Largest plaquette field strength seen, radians (lattice only).
    pub max_plaquette: f64,
}

/// Berry curvature of band `n` (0-based) at `k` from the spectral sum
///
/// ```text
/// Omega_n = 2 Im sum_{m != n} <m|d1 H|n><n|d2 H|m> / (E_n - E_m)^2
/// ```
///
/// with exact `d_j H`.
pub fn berry_curvature(model: &HofstadterModel, n: usize, k: BlochMomentum) -> Result<f64> {
    let q = model.q();
    if n >= q {
        return Err(Error::IndexOutOfRange { index: n, max: q - 1 });
    }
    let (vals, vecs) = build_hamiltonian(model, k).eigh();
    let (d1, d2) = hamiltonian_derivatives(model, k);
    curvature_from_eigh(&vals, &vecs, &d1, &d2, n).map_err(|gap| Error::Degenerate {
        band: n,
        k1: k.k1,
        k2: k.k2,
        gap,
    })
}

/// Curvatures of all bands at `k`; their sum vanishes identically.
pub fn berry_curvatures(model: &HofstadterModel, k: BlochMomentum) -> Result<Vec<f64>> {
    let (vals, vecs) = build_hamiltonian(model, k).eigh();
    let (d1, d2) = hamiltonian_derivatives(model, k);
    (0..model.q())
        .map(|n| {
            curvature_from_eigh(&vals, &vecs, &d1, &d2, n).map_err(|gap| Error::Degenerate {
                band: n,
                k1: k.k1,
                k2: k.k2,
                gap,
            })
        })
        .collect()
}

fn curvature_from_eigh(
    vals: &[f64],
    vecs: &CMatrix,
    d1: &CMatrix,
    d2: &CMatrix,
    n: usize,
) -> std::result::Result<f64, f64> {
    let q = vals.len();
    let mut local_gap = f64::INFINITY;
    if n > 0 {
        local_gap = local_gap.min(vals[n] - vals[n - 1]);
    }
    if n + 1 < q {
        local_gap = local_gap.min(vals[n + 1] - vals[n]);
    }
    if local_gap < DEGENERACY_TOLERANCE {
        return Err(local_gap);
    }
    let psi_n = vecs.column(n);
    let a = d1 * psi_n; // d1 H |n>
    let b = d2 * psi_n; // d2 H |n>
    let mut acc = 0.0;
    for m in 0..q {
        if m == n {
            continue;
        }
        let psi_m = vecs.column(m);
        let m1n = psi_m.dotc(&a); // <m|d1 H|n>
        let m2n = psi_m.dotc(&b); // <m|d2 H|n>
        // <n|d2 H|m> = conj(<m|d2 H|n>)
        let de = vals[n] - vals[m];
        acc += (m1n * m2n.conj()).im / (de * de);
    }
    Ok(2.0 * acc)
}

/// Flux bookkeeping of one lattice evaluation for one subspace rank.
#[derive(Debug, Clone, Copy, Default)]
struct FluxSum {
    total: f64,
    max_abs: f64,
}

/// Eigen-data on one row (`k1` fixed) of the lattice.
struct Row {
    vals: Vec<Vec<f64>>,
    vecs: Vec<CMatrix>,
}

struct Lattice<'a> {
    model: &'a HofstadterModel,
    /// points per 2 pi/q
    n: usize,
    h: f64,
    wrap: CMatrix,
}

impl<'a> Lattice<'a> {
    fn new(model: &'a HofstadterModel, n: usize) -> Self {
        let q = model.q();
        Lattice {
            model,
            n,
            h: TAU / (q * n) as f64,
            wrap: clock_power(model.flux, model.flux.s() as i64),
        }
    }

    fn rows(&self) -> usize {
        self.model.q() * self.n
    }

    fn k(&self, i: usize, j: usize) -> BlochMomentum {
        BlochMomentum::new((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    fn row(&self, i: usize) -> Row {
        let i = i % self.rows();
        let (vals, vecs) = (0..self.n)
            .map(|j| hermitian_eigh(build_hamiltonian(self.model, self.k(i, j)).as_matrix()))
            .unzip();
        Row { vals, vecs }
    }

    /// Eigenvectors at column `j` of a row, with `j = n` mapped across the
    /// `k2` boundary.
    fn vecs_at(&self, row: &Row, j: usize) -> CMatrix {
        if j == self.n {
            &self.wrap * &row.vecs[0]
        } else {
            row.vecs[j].clone()
        }
    }

    /// Smallest spacing between levels `r - 1` and `r` on the row, for each
    /// requested rank `r`.
    fn min_spacings(row: &Row, ranks: &[usize]) -> Vec<(f64, usize)> {
        ranks
            .iter()
            .map(|&r| {
                row.vals
                    .iter()
                    .enumerate()
                    .map(|(j, v)| (v[r] - v[r - 1], j))
                    .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
            })
            .collect()
    }

    /// Sum of plaquette field strengths for subspaces given by `cols`
    /// (column ranges of the sorted eigenvector matrix). Fails when a
    /// subspace comes within [`DEGENERACY_TOLERANCE`] of a neighbour.
    fn flux_sums(&self, subspaces: &[std::ops::Range<usize>]) -> Result<Vec<FluxSum>> {
        const CHUNK: usize = 4;
        let rows = self.rows();
        let ranks = boundary_ranks(self.model.q(), subspaces);
        let chunks: Vec<usize> = (0..rows).step_by(CHUNK).collect();
        let partial: Vec<(Vec<FluxSum>, Spacing)> = chunks
            .par_iter()
            .map(|&start| {
                let end = (start + CHUNK).min(rows);
                let mut acc = vec![FluxSum::default(); subspaces.len()];
                let mut worst = NO_SPACING;
                let mut lower = self.row(start);
                for i in start..end {
                    worst = closer(worst, row_spacing(&lower, &ranks, i));
                    let upper = self.row(i + 1);
                    for j in 0..self.n {
                        let v00 = self.vecs_at(&lower, j);
                        let v10 = self.vecs_at(&upper, j);
                        let v11 = self.vecs_at(&upper, j + 1);
                        let v01 = self.vecs_at(&lower, j + 1);
                        for (a, cols) in acc.iter_mut().zip(subspaces) {
                            let f = plaquette(&v00, &v10, &v11, &v01, cols.clone());
                            a.total += f;
                            a.max_abs = a.max_abs.max(f.abs());
                        }
                    }
                    lower = upper;
                }
                (acc, worst)
            })
            .collect();
        let mut out = vec![FluxSum::default(); subspaces.len()];
        let mut worst = NO_SPACING;
        for (chunk, w) in partial {
            worst = closer(worst, w);
            for (o, c) in out.iter_mut().zip(chunk) {
                o.total += c.total;
                o.max_abs = o.max_abs.max(c.max_abs);
            }
        }
        self.degeneracy_error(worst)?;
        Ok(out)
    }

    fn degeneracy_error(&self, worst: Spacing) -> Result<()> {
        if worst.0 < DEGENERACY_TOLERANCE {
            let k = self.k(worst.1, worst.2);
            return Err(Error::Degenerate {
                band: worst.3,
                k1: k.k1,
                k2: k.k2,
                gap: worst.0,
            });
        }
        Ok(())
    }

    /// Smallest spacing between levels `r - 1` and `r` over the lattice,
    /// for `r = 1..q`.
    fn rank_spacings(&self) -> Vec<f64> {
        let ranks: Vec<usize> = (1..self.model.q()).collect();
        (0..self.rows())
            .into_par_iter()
            .map(|i| Lattice::min_spacings(&self.row(i), &ranks).into_iter().map(|(gap, _)| gap).collect::<Vec<_>>())
            .reduce(|| vec![f64::INFINITY; ranks.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect())
    }
}

/// Smallest level spacing found: `(spacing, row, column, rank)`.
type Spacing = (f64, usize, usize, usize);

const NO_SPACING: Spacing = (f64::INFINITY, 0, 0, 0);

/// The smaller spacing; ties go to the first lattice point.
fn closer(a: Spacing, b: Spacing) -> Spacing {
    if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
        b
    } else {
        a
    }
}

fn boundary_ranks(q: usize, subspaces: &[std::ops::Range<usize>]) -> Vec<usize> {
    let mut ranks: Vec<usize> = subspaces
        .iter()
        .flat_map(|r| [r.start, r.end])
        .filter(|&r| r > 0 && r < q)
        .collect();
    ranks.sort_unstable();
    ranks.dedup();
    ranks
}

fn row_spacing(row: &Row, ranks: &[usize], i: usize) -> Spacing {
    Lattice::min_spacings(row, ranks)
        .into_iter()
        .zip(ranks)
        .map(|((gap, j), &r)| (gap, i, j, r))
        .fold(NO_SPACING, closer)
}

/// Link variable between the subspaces spanned by `cols` of two eigenvector
/// matrices: `det(A^dagger B)` restricted to those columns.
fn link(a: &CMatrix, b: &CMatrix, cols: std::ops::Range<usize>) -> Complex64 {
    let r = cols.len();
    if r == 1 {
        return a.column(cols.start).dotc(&b.column(cols.start));
    }
    let m = DMatrix::from_fn(r, r, |x, y| {
        a.column(cols.start + x).dotc(&b.column(cols.start + y))
    });
    m.determinant()
}

/// Field strength of the plaquette `k -> k + e1 -> k + e1 + e2 -> k + e2`,
/// minus the phase of the product of its links.
fn plaquette(
    v00: &CMatrix,
    v10: &CMatrix,
    v11: &CMatrix,
    v01: &CMatrix,
    cols: std::ops::Range<usize>,
) -> f64 {
    let u = link(v00, v10, cols.clone())
        * link(v10, v11, cols.clone())
        * link(v11, v01, cols.clone())
        * link(v01, v00, cols);
    -u.arg()
}

fn lattice_result(
    subject: Subject,
    index: usize,
    grid: usize,
    sum: FluxSum,
) -> (ChernResult, bool) {
    let raw = sum.total / TAU;
    let value = raw.round();
    let residual = (raw - value).abs();
    let ok = residual < QUANTIZATION_TOLERANCE && sum.max_abs <= ADMISSIBLE_PLAQUETTE;
    (
        ChernResult {
            subject,
            index,
            value: value as i64,
            method: ChernMethod::Fhs,
            grid,
            residual,
            max_plaquette: sum.max_abs,
        },
        ok,
    )
}

/// Lattice invariant of a set of subspaces, doubling the grid from `grid`.
/// A result is accepted once it is quantized and admissible, or once it is
/// quantized and unchanged from the previous grid. Only unsettled subspaces
/// are recomputed.
fn lattice_invariants(
    model: &HofstadterModel,
    subject: Subject,
    subspaces: &[(usize, std::ops::Range<usize>)],
    grid: usize,
) -> Result<Vec<ChernResult>> {
    let mut settled: Vec<Option<ChernResult>> = vec![None; subspaces.len()];
    let mut previous: Vec<Option<i64>> = vec![None; subspaces.len()];
    let mut n = grid.max(2);
    loop {
        let pending: Vec<usize> = (0..subspaces.len()).filter(|&i| settled[i].is_none()).collect();
        if pending.is_empty() {
            return Ok(settled.into_iter().map(|r| r.expect("all settled")).collect());
        }
        let ranges: Vec<_> = pending.iter().map(|&i| subspaces[i].1.clone()).collect();
        let lattice = Lattice::new(model, n);
        let mut worst = 0.0f64;
        for (&i, sum) in pending.iter().zip(lattice.flux_sums(&ranges)?) {
            let (r, admissible) = lattice_result(subject, subspaces[i].0, n, sum);
            let quantized = r.residual < QUANTIZATION_TOLERANCE;
            let stable = quantized && previous[i] == Some(r.value);
            previous[i] = quantized.then_some(r.value);
            worst = worst.max(r.residual);
            if admissible || stable {
                settled[i] = Some(r);
            }
        }
        if settled.iter().all(Option::is_some) {
            continue;
        }
        if n >= MAX_GRID {
            return Err(Error::NotConverged { grid: n, residual: worst });
        }
        n = (n * 2).min(MAX_GRID);
    }
}

/// Chern number of band `n` (1-based) from link variables on an `N` per
/// `2 pi/q` lattice.
pub fn band_chern_fhs(model: &HofstadterModel, n: usize, grid: usize) -> Result<ChernResult> {
    let q = model.q();
    if n == 0 || n > q {
        return Err(Error::IndexOutOfRange { index: n, max: q });
    }
    if q == 1 {
        return Ok(trivial(Subject::Band, 1, ChernMethod::Fhs, grid));
    }
    let mut r = lattice_invariants(model, Subject::Band, &[(n, n - 1..n)], grid)?;
    Ok(r.remove(0))
}

/// Chern numbers of all bands. Bands that touch a neighbour somewhere on the
/// lattice are `None`.
pub fn band_cherns_fhs(model: &HofstadterModel, grid: usize) -> Result<Vec<Option<ChernResult>>> {
    let q = model.q();
    if q == 1 {
        return Ok(vec![Some(trivial(Subject::Band, 1, ChernMethod::Fhs, grid))]);
    }
    // find bands isolated on the coarsest lattice; touching ones are skipped
    let spacing = Lattice::new(model, grid.max(2)).rank_spacings();
    let apart = |r: usize| r == 0 || r == q || spacing[r - 1] >= DEGENERACY_TOLERANCE;
    let isolated: Vec<(usize, std::ops::Range<usize>)> =
        (1..=q).filter(|&n| apart(n - 1) && apart(n)).map(|n| (n, n - 1..n)).collect();
    let results = lattice_invariants(model, Subject::Band, &isolated, grid)?;
    let mut out = vec![None; q];
    for r in results {
        let idx = r.index - 1;
        out[idx] = Some(r);
    }
    Ok(out)
}

/// Chern number of gap `j` from the rank-`j` projector.
pub fn gap_chern_fhs(model: &HofstadterModel, j: usize, grid: usize) -> Result<ChernResult> {
    let q = model.q();
    if j > q {
        return Err(Error::IndexOutOfRange { index: j, max: q });
    }
    if j == 0 || j == q {
        return Ok(trivial(Subject::Gap, j, ChernMethod::Fhs, grid));
    }
    let mut r = lattice_invariants(model, Subject::Gap, &[(j, 0..j)], grid)?;
    Ok(r.remove(0))
}

/// Lattice Chern numbers of the listed interior gaps in one pass.
///
/// The bands between consecutive requested gaps form clusters; each gap's
/// value is the sum of the cluster invariants below it, so the work per
/// link grows with the cluster sizes rather than with `j`.
pub fn gap_cherns_fhs(model: &HofstadterModel, gaps: &[usize], grid: usize) -> Result<Vec<ChernResult>> {
    let q = model.q();
    if let Some(&j) = gaps.iter().find(|&&j| j > q) {
        return Err(Error::IndexOutOfRange { index: j, max: q });
    }
    let mut cuts: Vec<usize> = gaps.iter().copied().filter(|&j| j > 0 && j < q).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let clusters: Vec<(usize, std::ops::Range<usize>)> =
        cuts.iter().scan(0, |lo, &j| Some((j, std::mem::replace(lo, j)..j))).collect();
    let parts = if clusters.is_empty() {
        Vec::new()
    } else {
        lattice_invariants(model, Subject::Gap, &clusters, grid)?
    };
    let mut cumulative = Vec::with_capacity(parts.len());
    let mut acc: Option<ChernResult> = None;
    for part in parts {
        let next = match acc {
            None => part,
            Some(a) => ChernResult {
                index: part.index,
                value: a.value + part.value,
                grid: a.grid.max(part.grid),
                residual: a.residual + part.residual,
                max_plaquette: a.max_plaquette.max(part.max_plaquette),
                ..a
            },
        };
        cumulative.push(next.clone());
        acc = Some(next);
    }
    Ok(gaps
        .iter()
        .map(|&j| match cuts.binary_search(&j) {
            Ok(i) => cumulative[i].clone(),
            Err(_) => trivial(Subject::Gap, j, ChernMethod::Fhs, grid),
        })
        .collect())
}

fn trivial(subject: Subject, index: usize, method: ChernMethod, grid: usize) -> ChernResult {
    ChernResult {
        subject,
        index,
        value: 0,
        method,
        grid,
        residual: 0.0,
        max_plaquette: 0.0,
    }
}

/// Outcome of parallel transport around one `2 pi/q x 2 pi/q` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    pub subject: Subject,
    pub index: usize,
    /// Curvature flux through the cell, in `[0, 2 pi)`.
    pub holonomy: f64,
    /// `round(q * holonomy / 2 pi) mod q`.
    pub residue: u64,
    /// Distance of `q * holonomy / 2 pi` from the nearest integer.
    pub residual: f64,
    /// Phase relating the state transported along `k1` to `T^{-s}` applied
    /// to the initial state.
    pub gamma1: f64,
    /// Phase relating the state transported along `k2` to `S^s` applied to
    /// the initial state.
    pub gamma2: f64,
    pub steps: usize,
}

/// Corner of the transport loop. Offset from high-symmetry momenta.
fn transport_origin(q: usize) -> BlochMomentum {
    let l = TAU / q as f64;
    BlochMomentum::new(0.1370 * l, 0.2910 * l)
}

/// Transports the subspace spanned by `cols` along the polyline `path`
/// (`steps` steps per segment) and returns the transported frame.
fn transport_frame(
    model: &HofstadterModel,
    start: &CMatrix,
    cols: std::ops::Range<usize>,
    path: &[BlochMomentum],
    steps: usize,
) -> Result<CMatrix> {
    let mut frame = start.clone();
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        for s in 1..=steps {
            let t = s as f64 / steps as f64;
            let k = BlochMomentum::new(a.k1 + t * (b.k1 - a.k1), a.k2 + t * (b.k2 - a.k2));
            let (_, vecs) = build_hamiltonian(model, k).eigh();
            let basis = vecs.columns(cols.start, cols.len()).into_owned();
            // project, then restore orthonormality (polar factor)
            let overlap = basis.adjoint() * &frame;
            let jump = projector_jump(&overlap);
            if jump > 0.5 {
                return Err(Error::TransportStep { steps, jump });
            }
            frame = &basis * polar_unitary(&overlap);
        }
    }
    Ok(frame)
}

/// Frobenius distance between the projectors of two orthonormal frames with
/// overlap matrix `o`: `sqrt(2 (r - ||o||_F^2))`.
fn projector_jump(o: &CMatrix) -> f64 {
    let r = o.nrows() as f64;
    let f: f64 = o.iter().map(|z| z.norm_sqr()).sum();
    (2.0 * (r - f)).max(0.0).sqrt()
}

/// Unitary factor of the polar decomposition of a square matrix.
fn polar_unitary(o: &CMatrix) -> CMatrix {
    if o.nrows() == 1 {
        let z = o[(0, 0)];
        return CMatrix::from_element(1, 1, z / z.norm());
    }
    let svd = o.clone().svd(true, true);
    svd.u.expect("u requested") * svd.v_t.expect("v_t requested")
}

fn phase_of_frames(a: &CMatrix, b: &CMatrix) -> f64 {
    let o = a.adjoint() * b;
    let d = if o.nrows() == 1 { o[(0, 0)] } else { o.determinant() };
    d.arg()
}

fn transport_subspace(
    model: &HofstadterModel,
    subject: Subject,
    index: usize,
    cols: std::ops::Range<usize>,
    steps: usize,
) -> Result<TransportResult> {
    let q = model.q();
    if q == 1 {
        return Ok(TransportResult {
            subject,
            index,
            holonomy: 0.0,
            residue: 0,
            residual: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            steps,
        });
    }
    let l = TAU / q as f64;
    let k0 = transport_origin(q);
    let corners = [
        k0,
        k0.shifted(l, 0.0),
        k0.shifted(l, l),
        k0.shifted(0.0, l),
        k0,
    ];
    let mut steps = steps.max(1);
    loop {
        let attempt = (|| -> Result<TransportResult> {
            let (_, vecs) = build_hamiltonian(model, k0).eigh();
            let start = vecs.columns(cols.start, cols.len()).into_owned();
            let end = transport_frame(model, &start, cols.clone(), &corners, steps)?;
            // transported = start * e^{i theta}; theta is the curvature flux
            let flux = phase_of_frames(&start, &end).rem_euclid(TAU);
            let along1 = transport_frame(model, &start, cols.clone(), &corners[..2], steps)?;
            let along2 = transport_frame(model, &start, cols.clone(), &[k0, corners[3]], steps)?;
            let s = model.flux.s() as i64;
            let t_inv = crate::magnetic_algebra::shift_power(q, -s);
            let s_pow = clock_power(model.flux, s);
            let gamma1 = phase_of_frames(&(t_inv * &start), &along1);
            let gamma2 = phase_of_frames(&(s_pow * &start), &along2);
            let raw = q as f64 * flux / TAU;
            let nearest = raw.round();
            Ok(TransportResult {
                subject,
                index,
                holonomy: flux,
                residue: (nearest as i64).rem_euclid(q as i64) as u64,
                residual: (raw - nearest).abs(),
                gamma1,
                gamma2,
                steps,
            })
        })();
        match attempt {
            Err(Error::TransportStep { .. }) if steps < 1 << 16 => steps *= 2,
            other => return other,
        }
    }
}

/// Holonomy of band `n` (1-based) around one magnetic cell.
pub fn band_chern_transport(model: &HofstadterModel, n: usize, steps: usize) -> Result<TransportResult> {
    let q = model.q();
    if n == 0 || n > q {
        return Err(Error::IndexOutOfRange { index: n, max: q });
    }
    transport_subspace(model, Subject::Band, n, n - 1..n, steps)
}

/// Holonomy of the rank-`j` subspace below gap `j`.
pub fn gap_chern_transport(model: &HofstadterModel, j: usize, steps: usize) -> Result<TransportResult> {
    let q = model.q();
    if j > q {
        return Err(Error::IndexOutOfRange { index: j, max: q });
    }
    if j == 0 || j == q {
        return Ok(TransportResult {
            subject: Subject::Gap,
            index: j,
            holonomy: 0.0,
            residue: 0,
            residual: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            steps,
        });
    }
    transport_subspace(model, Subject::Gap, j, 0..j, steps)
}

/// Chern number of gap `j`: `0` for `j = 0, q`; otherwise refused when the
/// gap is closed. The transport method reports `sigma_j mod q`.
pub fn gap_chern(model: &HofstadterModel, j: usize, method: ChernMethod, grid: usize) -> Result<ChernResult> {
    let q = model.q();
    if j > q {
        return Err(Error::IndexOutOfRange { index: j, max: q });
    }
    if j == 0 || j == q {
        return Ok(trivial(Subject::Gap, j, method, grid));
    }
    let spec = compute_bands_robust(model)?;
    let gap = &compute_gaps(&spec, DEFAULT_EPS_GAP)[j];
    if gap.closed {
        return Err(Error::GapClosed { j, width: gap.width });
    }
    match method {
        ChernMethod::Fhs => gap_chern_fhs(model, j, grid),
        ChernMethod::Transport => {
            let t = gap_chern_transport(model, j, grid)?;
            Ok(ChernResult {
                subject: Subject::Gap,
                index: j,
                value: t.residue as i64,
                method,
                grid: t.steps,
                residual: t.residual,
                max_plaquette: 0.0,
            })
        }
    }
}

/// `4 pi 6^2 j (q - j) / (q g^2)`, the largest `|sigma_j|` compatible with
/// a gap of width `g`.
pub fn chern_bound(j: u64, q: u64, gap_width: f64) -> Result<f64> {
    if !(gap_width > 0.0) {
        return Err(Error::InvalidModel(format!("gap width must be positive, got {gap_width}")));
    }
    if j > q {
        return Err(Error::IndexOutOfRange { index: j as usize, max: q as usize });
    }
    Ok(4.0 * PI * 36.0 * (j * (q - j)) as f64 / (q as f64 * gap_width * gap_width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetic_algebra::Flux;

    #[test]
    fn q1_everything_trivial() {
        let m = HofstadterModel::triangular(Flux::new(1, 1).unwrap(), 0.3);
        assert_eq!(berry_curvature(&m, 0, BlochMomentum::new(0.2, 0.1)).unwrap(), 0.0);
        assert_eq!(band_chern_fhs(&m, 1, 8).unwrap().value, 0);
        let t = band_chern_transport(&m, 1, 16).unwrap();
        assert_eq!((t.holonomy, t.residue), (0.0, 0));
    }

    #[test]
    fn bound_examples() {
        assert_eq!(chern_bound(0, 5, 1.0).unwrap(), 0.0);
        let b = chern_bound(2, 5, 2.0).unwrap();
        assert!((b - 43.2 * PI).abs() < 1e-12, "{b}");
        assert!(chern_bound(1, 5, 0.0).is_err());
        assert!(chern_bound(1, 5, -1.0).is_err());
    }

    #[test]
    fn polar_of_unitary_is_identity_map() {
        let o = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        let u = polar_unitary(&o);
        assert!((u - &o).iter().all(|z| z.norm() < 1e-14));
        assert!(projector_jump(&o) < 1e-7);
    }

    #[test]
    fn method_parse() {
        assert_eq!("fhs".parse::<ChernMethod>().unwrap(), ChernMethod::Fhs);
        assert!("x".parse::<ChernMethod>().is_err());
    }
}
