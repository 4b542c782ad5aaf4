//! The gap labelling equation `sigma_j = s j (mod q)` and the rules that
//! pick one integer out of each residue class.

use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::magnetic_algebra::Flux;
use crate::spectrum::GapRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResidueClass {
    r: u64,
    q: u64,
}

impl ResidueClass {
    pub fn new(r: u64, q: u64) -> Result<Self> {
        if q == 0 || r >= q {
            return Err(Error::InvalidModel(format!("residue {r} mod {q} out of range")));
        }
        Ok(ResidueClass { r, q })
    }

    /// Class of an arbitrary integer.
    pub fn of(value: i64, q: u64) -> Self {
        assert!(q > 0, "modulus must be positive");
        ResidueClass { r: value.rem_euclid(q as i64) as u64, q }
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn contains(&self, value: i64) -> bool {
        value.rem_euclid(self.q as i64) as u64 == self.r
    }
}

/// `(s j) mod q`.
pub fn solve_residue(j: u64, flux: Flux) -> Result<ResidueClass> {
    let q = flux.q();
    if j > q {
        return Err(Error::IndexOutOfRange { index: j as usize, max: q as usize });
    }
    Ok(ResidueClass::of((flux.s() as i64) * (j as i64), q))
}

/// Integer interval `[lo, hi]` minus `excluded`, holding at most one member
/// of each residue class mod `q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    lo: i64,
    hi: i64,
    q: u64,
    excluded: BTreeSet<i64>,
}

impl Window {
    pub fn new(lo: i64, hi: i64, q: u64) -> Result<Self> {
        Self::with_exclusions(lo, hi, q, BTreeSet::new())
    }

    pub fn with_exclusions(lo: i64, hi: i64, q: u64, excluded: BTreeSet<i64>) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidWindow { lo, hi, q: 0, reason: "modulus must be positive" });
        }
        if lo > hi {
            return Err(Error::InvalidWindow { lo, hi, q: q as i64, reason: "lo > hi" });
        }
        if hi - lo > q as i64 - 1 {
            return Err(Error::InvalidWindow {
                lo,
                hi,
                q: q as i64,
                reason: "longer than q, residues would have two representatives",
            });
        }
        Ok(Window { lo, hi, q, excluded })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn excluded(&self) -> &BTreeSet<i64> {
        &self.excluded
    }

    pub fn contains(&self, v: i64) -> bool {
        (self.lo..=self.hi).contains(&v) && !self.excluded.contains(&v)
    }
}

/// `[1 - q/2, q/2 - 1]` for even `q`, `[-(q-1)/2, (q-1)/2]` for odd `q`.
pub fn square_window(q: u64) -> Result<Window> {
    let qi = q as i64;
    if q == 0 {
        return Err(Error::InvalidWindow { lo: 0, hi: 0, q: 0, reason: "modulus must be positive" });
    }
    if q % 2 == 0 {
        Window::new(1 - qi / 2, qi / 2 - 1, q)
    } else {
        Window::new(-(qi - 1) / 2, (qi - 1) / 2, q)
    }
}

/// `[1 - q/2, q/2]` for even `q`. For odd `q` the same bounds rounded down,
/// `[floor(1 - q/2), floor(q/2)]`, which coincides with the square window.
pub fn triangular_window(q: u64) -> Result<Window> {
    let qi = q as i64;
    if q == 0 {
        return Err(Error::InvalidWindow { lo: 0, hi: 0, q: 0, reason: "modulus must be positive" });
    }
    if q % 2 == 0 {
        Window::new(1 - qi / 2, qi / 2, q)
    } else {
        Window::new(-(qi - 1) / 2, (qi - 1) / 2, q)
    }
}

/// The two fluxes nearest `1/2` at odd `q`, `p = (q +- 1)/2`, which the
/// triangular window is known to miscolor.
pub fn is_triangular_exclusion(flux: Flux) -> bool {
    let (p, q) = (flux.p(), flux.q());
    q > 1 && q % 2 == 1 && (2 * p + 1 == q || 2 * p == q + 1)
}

/// Chern values `(q +- 1)/2` for odd `q`: the alternative reading of the
/// exclusion, as values removed from a window.
pub fn triangular_excluded_values(q: u64) -> BTreeSet<i64> {
    if q % 2 == 1 && q > 1 {
        let h = (q as i64 - 1) / 2;
        [h, h + 1].into_iter().collect()
    } else {
        BTreeSet::new()
    }
}

/// The member of `r` inside `w`, or `None` when the window has no
/// representative of that class.
pub fn resolve_in_window(r: ResidueClass, w: &Window) -> Option<i64> {
    let q = w.q as i64;
    if r.q != w.q {
        return None;
    }
    let v = w.lo + (r.r as i64 - w.lo).rem_euclid(q);
    w.contains(v).then_some(v)
}

pub fn default_chain_cutoff(q: u64) -> u64 {
    q / 4
}

/// Walks `sigma_0 = 0 -> sigma_p = 1 -> ...` from the bottom and
/// `sigma_q = 0 -> sigma_{q-p} = -1 -> ...` from the top, `cutoff` steps
/// each. `None` when neither walk reaches `j` or the two disagree.
pub fn chain_assign(j: u64, flux: Flux, cutoff: u64) -> Option<i64> {
    let (p, q) = (flux.p(), flux.q());
    if j > q {
        return None;
    }
    if j == 0 || j == q {
        return Some(0);
    }
    let mut from_below = None;
    let mut from_above = None;
    for m in 1..=cutoff {
        let up = (m % q) * p % q;
        if from_below.is_none() && up == j {
            from_below = Some(m as i64);
        }
        if from_above.is_none() && (q - up) % q == j {
            from_above = Some(-(m as i64));
        }
    }
    match (from_below, from_above) {
        (Some(a), Some(b)) if a != b => None,
        (Some(a), _) => Some(a),
        (None, b) => b,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Square,
    Triangular,
    Chain,
    Computed,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Square => "square",
            Strategy::Triangular => "triangular",
            Strategy::Chain => "chain",
            Strategy::Computed => "computed",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Strategy::Square),
            "triangular" => Ok(Strategy::Triangular),
            "chain" => Ok(Strategy::Chain),
            "computed" => Ok(Strategy::Computed),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Window or chain value for gap `j`; `None` for [`Strategy::Computed`],
/// which needs the model.
pub fn assign_by_rule(strategy: Strategy, flux: Flux, j: u64) -> Result<Option<i64>> {
    let q = flux.q();
    if j == 0 || j == q {
        return Ok(Some(0));
    }
    let r = solve_residue(j, flux)?;
    Ok(match strategy {
        Strategy::Square => resolve_in_window(r, &square_window(q)?),
        Strategy::Triangular => resolve_in_window(r, &triangular_window(q)?),
        Strategy::Chain => chain_assign(j, flux, default_chain_cutoff(q)),
        Strategy::Computed => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StredaOutcome {
    Consistent,
    Inconsistent,
    NotComparable,
}

/// Compares two gaps at different fluxes as candidates for one wing of the
/// butterfly: comparable when both carry a Chern number and their energy
/// intervals overlap by at least `eps`; consistent when the Chern numbers
/// agree and `2 pi (rho_b - rho_a) = sigma (Phi_b - Phi_a)` holds exactly.
pub fn streda_check(a: &GapRecord, b: &GapRecord, eps: f64) -> StredaOutcome {
    let (Some(sa), Some(sb)) = (a.chern, b.chern) else {
        return StredaOutcome::NotComparable;
    };
    if a.closed || b.closed {
        return StredaOutcome::NotComparable;
    }
    let overlap = a.hi.min(b.hi) - a.lo.max(b.lo);
    if !(overlap >= eps) {
        return StredaOutcome::NotComparable;
    }
    if sa != sb {
        return StredaOutcome::Inconsistent;
    }
    let ratio = |n: u64, d: u64| Ratio::new(n as i64, d as i64);
    let d_rho = ratio(b.j, b.q) - ratio(a.j, a.q);
    let d_phi = ratio(b.p, b.q) - ratio(a.p, a.q);
    if d_rho == Ratio::from_integer(sa) * d_phi {
        StredaOutcome::Consistent
    } else {
        StredaOutcome::Inconsistent
    }
}

/// How a set of Chern values at one flux sits relative to contiguous
/// windows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentationReport {
    pub q: u64,
    pub values: BTreeSet<i64>,
    /// `[min, max]` when it spans at most `q` integers.
    pub window: Option<(i64, i64)>,
    /// Integers missing from the span of the values together with the
    /// square window.
    pub struck: Vec<i64>,
    /// Struck values whose residue class is taken by another value.
    pub displaced: Vec<i64>,
}

impl FragmentationReport {
    pub fn is_fragmented(&self) -> bool {
        self.window.is_none()
    }
}

/// `values` are the Chern numbers of the open gaps at one flux; `0` is
/// always included.
pub fn fragmentation_report(values: &[i64], q: u64) -> Result<FragmentationReport> {
    let mut set: BTreeSet<i64> = values.iter().copied().collect();
    set.insert(0);
    let residues: BTreeSet<u64> = set.iter().map(|&v| ResidueClass::of(v, q).r()).collect();
    if residues.len() != set.len() {
        return Err(Error::InvalidModel(format!(
            "values {set:?} repeat a residue class mod {q}"
        )));
    }
    let (min, max) = (*set.first().expect("nonempty"), *set.last().expect("nonempty"));
    let window = (max - min < q as i64).then_some((min, max));
    let sq = square_window(q)?;
    let mut struck = Vec::new();
    let mut displaced = Vec::new();
    for v in min.min(sq.lo())..=max.max(sq.hi()) {
        if set.contains(&v) {
            continue;
        }
        struck.push(v);
        if residues.contains(&ResidueClass::of(v, q).r()) {
            displaced.push(v);
        }
    }
    Ok(FragmentationReport { q, values: set, window, struck, displaced })
}

/// Per-gap outcome of applying a resolution strategy at one flux.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub p: u64,
    pub q: u64,
    pub strategy: Strategy,
    /// `(j, sigma)` for every open gap that received a value.
    pub assigned: Vec<(u64, i64)>,
    /// `(j, reason)` for every open gap that did not.
    pub violations: Vec<(u64, String)>,
}

/// Applies a window or chain rule to the open gaps `open` (gap indices).
pub fn resolve_open_gaps(strategy: Strategy, flux: Flux, open: &[u64]) -> Result<ResolutionReport> {
    let mut assigned = Vec::new();
    let mut violations = Vec::new();
    for &j in open {
        match assign_by_rule(strategy, flux, j)? {
            Some(v) => assigned.push((j, v)),
            None if strategy == Strategy::Computed => {
                violations.push((j, "computed strategy needs a model".to_string()))
            }
            None => violations.push((j, format!("no {strategy} representative of s*j mod q"))),
        }
    }
    Ok(ResolutionReport { p: flux.p(), q: flux.q(), strategy, assigned, violations })
}
