//! Flux sweeps: gap records with Chern labels for every reduced `p/q` up to
//! `q_max`, Streda cross-checks between neighbouring fluxes, and rendering.

mod config;
mod io;
mod render;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chern::gap_cherns_fhs;
use crate::diophantine::{
    assign_by_rule, is_triangular_exclusion, resolve_in_window, solve_residue, streda_check,
    triangular_excluded_values, triangular_window, Strategy, StredaOutcome, Window,
};
use crate::error::{Error, Result};
use crate::magnetic_algebra::{Flux, HofstadterModel};
use crate::spectrum::{compute_bands_robust, compute_gaps, BandSpectrum, ChernSource, GapRecord};

pub use config::{parse_angle, AngleValue, ButterflyConfig, ConfigFile, ExclusionReading};
pub use io::{read_jsonl, write_jsonl, JsonLine, FORMAT_VERSION};
pub use render::{encode_ppm, render, Palette, BACKGROUND, CLOSED, NEUTRAL, UNRESOLVED};

/// Reduced fractions `p/q` in `(0, 1]` with `q <= q_max`, ascending.
pub fn enumerate_fluxes(q_max: u64) -> Result<Vec<Flux>> {
    if q_max == 0 {
        return Err(Error::Config("q_max must be at least 1".into()));
    }
    let n = q_max;
    let mut out = Vec::new();
    let (mut a, mut b, mut c, mut d) = (0u64, 1u64, 1u64, n);
    while c <= n {
        out.push(Flux::new(c, d)?);
        if c == d {
            break;
        }
        let k = (n + b) / d;
        (a, b, c, d) = (c, d, k * c - a, k * d - b);
    }
    Ok(out)
}

/// Gap records of one flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxEntry {
    pub p: u64,
    pub q: u64,
    pub gaps: Vec<GapRecord>,
    /// Set when the bands or the Chern numbers could not be computed.
    pub error: Option<String>,
}

impl FluxEntry {
    pub fn flux(&self) -> Result<Flux> {
        Flux::new(self.p, self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ButterflyDiagram {
    pub config: ButterflyConfig,
    pub config_hash: String,
    /// In ascending flux order.
    pub entries: Vec<FluxEntry>,
}

impl ButterflyDiagram {
    pub fn entry(&self, p: u64, q: u64) -> Option<&FluxEntry> {
        self.entries.iter().find(|e| e.p == p && e.q == q)
    }

    pub fn gap_count(&self) -> usize {
        self.entries.iter().map(|e| e.gaps.len()).sum()
    }
}

fn rule_value(config: &ButterflyConfig, flux: Flux, j: u64) -> Result<Option<i64>> {
    if config.resolver == Strategy::Triangular && config.exclusions == ExclusionReading::Value {
        let w = triangular_window(flux.q())?;
        let w = Window::with_exclusions(w.lo(), w.hi(), flux.q(), triangular_excluded_values(flux.q()))?;
        return Ok(resolve_in_window(solve_residue(j, flux)?, &w));
    }
    assign_by_rule(config.resolver, flux, j)
}

fn rule_source(strategy: Strategy) -> ChernSource {
    match strategy {
        Strategy::Square => ChernSource::WindowSquare,
        Strategy::Triangular => ChernSource::WindowTriangular,
        Strategy::Chain => ChernSource::Chain,
        Strategy::Computed => ChernSource::ComputedFhs,
    }
}

/// Labels the open interior gaps in place. Returns a message when the
/// labels could not be computed; those gaps stay unresolved.
fn label_gaps(config: &ButterflyConfig, model: &HofstadterModel, gaps: &mut [GapRecord]) -> Option<String> {
    let flux = model.flux;
    let open: Vec<usize> = gaps
        .iter()
        .filter(|g| !g.closed && !g.is_semi_infinite())
        .map(|g| g.j as usize)
        .collect();
    if open.is_empty() {
        return None;
    }
    if config.resolver == Strategy::Computed || flux.q() <= config.computed_threshold {
        return match gap_cherns_fhs(model, &open, config.grid) {
            Ok(results) => {
                for r in results {
                    gaps[r.index].chern = Some(r.value);
                    gaps[r.index].source = ChernSource::ComputedFhs;
                }
                None
            }
            Err(e) => Some(e.to_string()),
        };
    }
    if config.resolver == Strategy::Triangular
        && config.exclusions == ExclusionReading::Flux
        && is_triangular_exclusion(flux)
    {
        for &j in &open {
            gaps[j].source = ChernSource::Excluded;
        }
        return None;
    }
    for &j in &open {
        match rule_value(config, flux, j as u64) {
            Ok(Some(v)) => {
                gaps[j].chern = Some(v);
                gaps[j].source = rule_source(config.resolver);
            }
            Ok(None) => {}
            Err(e) => return Some(e.to_string()),
        }
    }
    None
}

/// Bands and labelled gaps at one flux. The message reports a labelling
/// failure; the affected gaps stay unresolved.
pub fn labelled_spectrum(config: &ButterflyConfig, flux: Flux) -> Result<(BandSpectrum, Vec<GapRecord>, Option<String>)> {
    let model = HofstadterModel::new(flux, config.phi_d, config.t)?;
    let spec = compute_bands_robust(&model)?;
    let mut gaps = compute_gaps(&spec, config.eps_gap);
    let message = label_gaps(config, &model, &mut gaps);
    Ok((spec, gaps, message))
}

/// Bands, gaps and labels at one flux. Failures are recorded in the entry.
pub fn flux_entry(config: &ButterflyConfig, flux: Flux) -> FluxEntry {
    match labelled_spectrum(config, flux) {
        Ok((_, gaps, error)) => FluxEntry { p: flux.p(), q: flux.q(), gaps, error },
        Err(e) => FluxEntry { p: flux.p(), q: flux.q(), gaps: Vec::new(), error: Some(e.to_string()) },
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs the sweep. Fluxes are processed in parallel and merged in flux
/// order, so the result does not depend on `jobs`.
pub fn build_diagram(config: &ButterflyConfig) -> Result<ButterflyDiagram> {
    config.validate()?;
    let fluxes = enumerate_fluxes(config.q_max)?;
    let entries = pool(config.jobs)?.install(|| fluxes.par_iter().map(|&f| flux_entry(config, f)).collect());
    Ok(ButterflyDiagram { config: config.clone(), config_hash: config.hash(), entries })
}

/// Two gaps at Farey-neighbour fluxes whose Chern labels violate Streda.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistentPair {
    pub a: GapRecord,
    pub b: GapRecord,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColoringReport {
    pub flux_pairs: usize,
    pub gap_pairs: usize,
    pub inconsistent: Vec<InconsistentPair>,
}

impl ColoringReport {
    pub fn is_clean(&self) -> bool {
        self.inconsistent.is_empty()
    }
}

/// Entries `b` with `p_b q_a - p_a q_b = 1` (the Farey neighbours above `a`).
fn upper_neighbours(a: &FluxEntry, q_max: u64, index: &HashMap<(u64, u64), usize>) -> Vec<usize> {
    let (p, q) = (a.p, a.q);
    if q < 2 {
        return Vec::new();
    }
    let Ok(flux) = a.flux() else { return Vec::new() };
    // p q2 = -1 (mod q), i.e. q2 = -s (mod q)
    let r = (q - flux.s() % q) % q;
    let mut out = Vec::new();
    let mut q2 = if r == 0 { q } else { r };
    while q2 <= q_max {
        let num = p as u128 * q2 as u128 + 1;
        if num % q as u128 == 0 {
            let p2 = (num / q as u128) as u64;
            if p2 >= 1 && p2 <= q2 {
                if let Some(&i) = index.get(&(p2, q2)) {
                    out.push(i);
                }
            }
        }
        q2 += q;
    }
    out
}

/// Flux ladder length used by [`detect_coloring_errors`].
pub const DEFAULT_LADDER: u32 = 16;

const PINCH_RATIO: f64 = 0.75;
const WIDTH_CAP: f64 = 1e3;

/// Spectra at mediant fluxes, computed on demand.
struct Mediants<'a> {
    config: &'a ButterflyConfig,
    cache: HashMap<(u64, u64), Option<Vec<GapRecord>>>,
}

impl Mediants<'_> {
    fn gaps(&mut self, p: u64, q: u64) -> Option<&[GapRecord]> {
        let config = self.config;
        self.cache
            .entry((p, q))
            .or_insert_with(|| {
                let model = HofstadterModel::new(Flux::new(p, q).ok()?, config.phi_d, config.t).ok()?;
                Some(compute_gaps(&compute_bands_robust(&model).ok()?, config.eps_gap))
            })
            .as_deref()
    }

    /// Narrows `window` to the energies inside gap `k j_a + l j_b` at every
    /// flux `(k p_a + l p_b)/(k q_a + l q_b)` with `min(k, l) = 1` and
    /// `max(k, l) <= ladder`. Those fluxes approach both endpoints, where
    /// Landau levels fanning out of the band edges cut a wing off. A wing
    /// that ends at an endpoint pinches there, its width falling like `1/k`;
    /// halving the width between `k = ladder/2` and `k = ladder` rejects
    /// the pair. A surviving energy stays inside gaps at every visited flux,
    /// so the integrated density there is linear in the flux.
    fn common_window(&mut self, a: &GapRecord, b: &GapRecord, mut window: (f64, f64), ladder: u32) -> Option<(f64, f64)> {
        if ladder == 0 {
            return Some(window);
        }
        let eps = self.config.eps_gap;
        let ladder = ladder.max(2) as u64;
        let mut half = [f64::NAN; 2];
        for k in 1..=ladder {
            for (side, (ka, kb)) in [(k, 1), (1, k)].into_iter().enumerate() {
                if k == 1 && side == 1 {
                    continue;
                }
                let (p, q) = (ka * a.p + kb * b.p, ka * a.q + kb * b.q);
                let j = (ka * a.j + kb * b.j) as usize;
                let m = self.gaps(p, q)?.get(j)?;
                window = (window.0.max(m.lo), window.1.min(m.hi));
                if m.closed || window.1 - window.0 < eps {
                    return None;
                }
                let width = m.hi.min(WIDTH_CAP) - m.lo.max(-WIDTH_CAP);
                if k == ladder / 2 {
                    half[side] = width;
                } else if k == ladder && width < PINCH_RATIO * half[side] {
                    return None;
                }
            }
        }
        Some(window)
    }
}

fn check_pair(a: &FluxEntry, b: &FluxEntry, ladder: u32, mediants: &mut Mediants, report: &mut ColoringReport) {
    let eps = mediants.config.eps_gap;
    let ga: Vec<&GapRecord> = a.gaps.iter().filter(|g| !g.closed).collect();
    let gb: Vec<&GapRecord> = b.gaps.iter().filter(|g| !g.closed).collect();
    let (mut i, mut k) = (0, 0);
    while i < ga.len() && k < gb.len() {
        let (x, y) = (ga[i], gb[k]);
        if x.hi.min(y.hi) - x.lo.max(y.lo) >= eps {
            report.gap_pairs += 1;
            let window = (x.lo.max(y.lo), x.hi.min(y.hi));
            if streda_check(x, y, eps) == StredaOutcome::Inconsistent
                && mediants.common_window(x, y, window, ladder).is_some()
            {
                report.inconsistent.push(InconsistentPair { a: x.clone(), b: y.clone() });
            }
        }
        if x.hi < y.hi {
            i += 1;
        } else {
            k += 1;
        }
    }
}

/// [`detect_coloring_errors_with`] at [`DEFAULT_LADDER`].
pub fn detect_coloring_errors(diagram: &ButterflyDiagram) -> ColoringReport {
    detect_coloring_errors_with(diagram, DEFAULT_LADDER)
}

/// Streda check on pairs of overlapping open gaps at Farey-neighbour fluxes
/// (`|p1 q2 - p2 q1| = 1`). Energy overlap alone does not place two gaps on
/// one wing, so an inconsistent pair is only reported when some energy also
/// lies in the matching gap along a flux ladder of length `ladder` between
/// them and the wing does not pinch at either end; `ladder = 0` reports
/// every overlapping inconsistent pair.
pub fn detect_coloring_errors_with(diagram: &ButterflyDiagram, ladder: u32) -> ColoringReport {
    let index: HashMap<(u64, u64), usize> =
        diagram.entries.iter().enumerate().map(|(i, e)| ((e.p, e.q), i)).collect();
    let q_max = diagram.entries.iter().map(|e| e.q).max().unwrap_or(0);
    let parts: Vec<ColoringReport> = diagram
        .entries
        .par_iter()
        .map(|a| {
            let mut r = ColoringReport::default();
            let mut mediants = Mediants { config: &diagram.config, cache: HashMap::new() };
            for i in upper_neighbours(a, q_max, &index) {
                r.flux_pairs += 1;
                check_pair(a, &diagram.entries[i], ladder, &mut mediants, &mut r);
            }
            r
        })
        .collect();
    parts.into_iter().fold(ColoringReport::default(), |mut acc, r| {
        acc.flux_pairs += r.flux_pairs;
        acc.gap_pairs += r.gap_pairs;
        acc.inconsistent.extend(r.inconsistent);
        acc
    })
}

/// Compares each flux `p/q` with `(q - p)/q` under `E -> -E`, `j -> q - j`
/// with equal Chern labels. Returns a description of every mismatch.
pub fn inversion_mismatches(diagram: &ButterflyDiagram, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    let close = |a: f64, b: f64| (a.is_infinite() && a == b) || (a - b).abs() <= tol;
    for e in &diagram.entries {
        let Some(partner) = diagram.entry(if e.q == 1 { e.p } else { e.q - e.p }, e.q) else {
            continue;
        };
        if e.gaps.len() != partner.gaps.len() {
            out.push(format!("{}/{}: {} gaps, partner has {}", e.p, e.q, e.gaps.len(), partner.gaps.len()));
            continue;
        }
        for g in &e.gaps {
            let m = &partner.gaps[(e.q - g.j) as usize];
            if !close(g.lo, -m.hi) || !close(g.hi, -m.lo) {
                out.push(format!("{}/{} gap {}: [{}, {}] vs mirrored [{}, {}]", e.p, e.q, g.j, g.lo, g.hi, -m.hi, -m.lo));
            }
            if g.closed != m.closed || g.chern != m.chern {
                out.push(format!(
                    "{}/{} gap {}: (closed {}, sigma {:?}) vs partner gap {} (closed {}, sigma {:?})",
                    e.p, e.q, g.j, g.closed, g.chern, m.j, m.closed, m.chern
                ));
            }
        }
    }
    out
}
