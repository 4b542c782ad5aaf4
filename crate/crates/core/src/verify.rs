//! Invariant suites behind `hofbutter verify`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chern::{band_chern_transport, band_cherns_fhs, chern_bound, gap_cherns_fhs, DEFAULT_GRID, DEFAULT_TRANSPORT_STEPS};
use crate::diophantine::{resolve_in_window, solve_residue, square_window, triangular_window};
use crate::error::{Error, Result};
use crate::magnetic_algebra::{
    build_hamiltonian, clock_power, clock_shift, gcd, hermiticity_residual, inversion_check,
    magnetic_symmetry_residual, shift_power, BlochMomentum, Flux, HofstadterModel,
};
use crate::spectrum::{
    chambers_polynomial_with, compute_bands, compute_bands_dense, compute_gaps, det_closed_form, det_direct,
    DEFAULT_EPS_GAP,
};

const SEED: u64 = 0x5eed_b077;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Chambers,
    Chern,
    Diophantine,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "algebra" => Suite::Algebra,
            "chambers" => Suite::Chambers,
            "chern" => Suite::Chern,
            "diophantine" => Suite::Diophantine,
            "all" => Suite::All,
            other => return Err(Error::Config(format!("unknown suite {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: Suite, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { suite, name: name.into(), passed, detail: detail.into() }
}

fn failed(suite: Suite, name: impl Into<String>, e: Error) -> Check {
    check(suite, name, false, e.to_string())
}

pub fn run(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Algebra => algebra(),
        Suite::Chambers => chambers(),
        Suite::Chern => chern(),
        Suite::Diophantine => diophantine(),
        Suite::All => [algebra(), chambers(), chern(), diophantine()].concat(),
    }
}

fn coprime_fluxes(q_max: u64) -> Vec<Flux> {
    (1..=q_max)
        .flat_map(|q| (1..=q).filter(move |&p| gcd(p, q) == 1).map(move |p| (p, q)))
        .filter_map(|(p, q)| Flux::new(p, q).ok())
        .collect()
}

fn random_k(rng: &mut ChaCha8Rng) -> BlochMomentum {
    BlochMomentum::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI))
}

fn random_flux(rng: &mut ChaCha8Rng, q_max: u64) -> Flux {
    loop {
        let q = rng.random_range(1..=q_max);
        let p = rng.random_range(1..=q);
        if let Ok(f) = Flux::new(p, q) {
            return f;
        }
    }
}

fn max_entry(m: &crate::linalg::CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Clock-shift algebra, hermiticity, magnetic translations and inversion.
pub fn algebra() -> Vec<Check> {
    let suite = Suite::Algebra;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut worst: f64 = 0.0;
    for f in coprime_fluxes(9) {
        let q = f.q() as usize;
        let (s, t) = clock_shift(f);
        let id = crate::linalg::CMatrix::identity(q, q);
        worst = worst
            .max(max_entry(&(&s * &t - &t * &s * f.omega())))
            .max(max_entry(&(clock_power(f, q as i64) - &id)))
            .max(max_entry(&(shift_power(q, q as i64) - &id)));
    }
    out.push(check(suite, "S T = omega T S, S^q = T^q = 1", worst < 1e-12, format!("max residual {worst:.2e}")));

    let (mut herm, mut sym): (f64, f64) = (0.0, 0.0);
    for _ in 0..30 {
        let f = random_flux(&mut rng, 12);
        let t = [rng.random_range(0.2..1.5), rng.random_range(0.2..1.5), rng.random_range(0.0..1.5)];
        let model = match HofstadterModel::new(f, rng.random_range(-PI..PI), t) {
            Ok(m) => m,
            Err(e) => {
                out.push(failed(suite, "random model", e));
                continue;
            }
        };
        let k = random_k(&mut rng);
        herm = herm.max(hermiticity_residual(build_hamiltonian(&model, k).as_matrix()));
        let (r1, r2) = magnetic_symmetry_residual(&model, k);
        sym = sym.max(r1).max(r2);
    }
    out.push(check(suite, "H(k) hermitian", herm < 1e-12, format!("max residual {herm:.2e}")));
    out.push(check(suite, "magnetic translation covariance", sym < 1e-12, format!("max residual {sym:.2e}")));

    let mut worst: f64 = 0.0;
    for (p, q) in [(1, 2), (1, 3), (1, 4), (2, 5), (1, 6), (3, 7), (3, 8), (4, 9), (3, 10), (5, 13)] {
        let r = Flux::new(p, q).and_then(|f| inversion_check(&HofstadterModel::triangular(f, FRAC_PI_2)));
        match r {
            Ok(v) => worst = worst.max(v),
            Err(e) => out.push(failed(suite, format!("inversion {p}/{q}"), e)),
        }
    }
    out.push(check(suite, "spectrum at -Phi is the negated spectrum at Phi", worst <= 1e-10, format!("max residual {worst:.2e}")));
    out
}

/// Chambers relation, the closed-form determinant and band-edge momenta.
pub fn chambers() -> Vec<Check> {
    let suite = Suite::Chambers;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let f = random_flux(&mut rng, 12);
        let t = [rng.random_range(0.2..1.5), rng.random_range(0.2..1.5), rng.random_range(0.0..1.5)];
        let model = HofstadterModel::new(f, rng.random_range(-PI..PI), t).expect("valid hoppings");
        let probes: Vec<BlochMomentum> = (0..5).map(|_| random_k(&mut rng)).collect();
        match chambers_polynomial_with(&model, &probes) {
            Ok(d) => worst = worst.max(d.max_deviation),
            Err(e) => out.push(failed(suite, format!("Chambers {}/{}", f.p(), f.q()), e)),
        }
    }
    out.push(check(suite, "characteristic polynomial is k-independent", worst <= 1e-9, format!("max relative deviation {worst:.2e}")));

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let model = HofstadterModel::triangular(random_flux(&mut rng, 10), FRAC_PI_2);
        let k = random_k(&mut rng);
        match det_closed_form(&model, k) {
            Ok(v) => worst = worst.max((v - det_direct(&model, k)).abs()),
            Err(e) => out.push(failed(suite, "closed-form determinant", e)),
        }
    }
    out.push(check(suite, "closed-form det H matches LU", worst <= 1e-9, format!("max deviation {worst:.2e}")));

    let mut worst: f64 = 0.0;
    for q in [3, 4, 5, 7, 8] {
        for p in (1..q).filter(|&p| gcd(p, q) == 1) {
            let model = HofstadterModel::triangular(Flux::new(p, q).expect("coprime"), FRAC_PI_2);
            match (compute_bands(&model), compute_bands_dense(&model, 64)) {
                (Ok(a), Ok(b)) => {
                    for (x, y) in a.bands.iter().zip(&b.bands) {
                        worst = worst.max((x[0] - y[0]).abs()).max((x[1] - y[1]).abs());
                    }
                }
                (Err(e), _) | (_, Err(e)) => out.push(failed(suite, format!("bands {p}/{q}"), e)),
            }
        }
    }
    out.push(check(suite, "band edges at tabulated momenta match a 64x64 scan", worst <= 1e-6, format!("max deviation {worst:.2e}")));
    out
}

/// Lattice Chern numbers against the Diophantine relation, zero sum, the
/// transport residue and the analytic bound.
pub fn chern() -> Vec<Check> {
    let suite = Suite::Chern;
    let mut out = Vec::new();
    let (mut dioph, mut sum, mut residue, mut agree, mut bound) = (0usize, 0usize, 0usize, 0usize, 0usize);
    let mut bands = 0usize;
    let mut worst_phase: f64 = 0.0;
    for f in coprime_fluxes(9).into_iter().filter(|f| f.q() > 1) {
        let model = HofstadterModel::triangular(f, FRAC_PI_2);
        let (q, s) = (f.q(), f.s() as i64);
        let name = format!("{}/{}", f.p(), f.q());
        let gaps = match compute_bands(&model) {
            Ok(spec) => compute_gaps(&spec, DEFAULT_EPS_GAP),
            Err(e) => {
                out.push(failed(suite, format!("bands {name}"), e));
                continue;
            }
        };
        let open: Vec<usize> = gaps.iter().filter(|g| !g.closed).map(|g| g.j as usize).collect();
        match gap_cherns_fhs(&model, &open, DEFAULT_GRID) {
            Ok(results) => {
                for r in results {
                    let j = r.index as i64;
                    dioph += ((r.value - s * j).rem_euclid(q as i64) != 0) as usize;
                    if r.index > 0 && r.index < q as usize {
                        let width = gaps[r.index].width;
                        let b = chern_bound(r.index as u64, q, width).unwrap_or(f64::INFINITY);
                        bound += (r.value.abs() as f64 > b) as usize;
                    }
                }
            }
            Err(e) => out.push(failed(suite, format!("gap Cherns {name}"), e)),
        }
        let band_results = match band_cherns_fhs(&model, DEFAULT_GRID) {
            Ok(r) => r,
            Err(e) => {
                out.push(failed(suite, format!("band Cherns {name}"), e));
                continue;
            }
        };
        if band_results.iter().all(|r| r.is_some()) {
            sum += (band_results.iter().flatten().map(|r| r.value).sum::<i64>() != 0) as usize;
        }
        for r in band_results.iter().flatten() {
            bands += 1;
            match band_chern_transport(&model, r.index, DEFAULT_TRANSPORT_STEPS) {
                Ok(t) => {
                    let diff = (t.holonomy - TAU * s as f64 / q as f64).rem_euclid(TAU);
                    let phase = diff.min(TAU - diff);
                    worst_phase = worst_phase.max(phase);
                    residue += (phase > 1e-6) as usize;
                    agree += (r.value.rem_euclid(q as i64) as u64 != t.residue) as usize;
                }
                Err(e) => out.push(failed(suite, format!("transport {name} band {}", r.index), e)),
            }
        }
    }
    out.push(check(suite, "sigma_j = s j mod q (q <= 9)", dioph == 0, format!("{dioph} violations")));
    out.push(check(suite, "band Chern numbers sum to zero", sum == 0, format!("{sum} violations")));
    out.push(check(
        suite,
        "transport holonomy = 2 pi s/q per isolated band",
        residue == 0,
        format!("{bands} bands, {residue} violations, max phase error {worst_phase:.2e}"),
    ));
    out.push(check(suite, "lattice Chern mod q = transport residue", agree == 0, format!("{agree} disagreements")));
    out.push(check(suite, "|sigma_j| within the gap-width bound", bound == 0, format!("{bound} violations")));
    out
}

/// Window and residue algebra, and the square model's window.
pub fn diophantine() -> Vec<Check> {
    let suite = Suite::Diophantine;
    let mut out = Vec::new();
    let mut bad = 0usize;
    for f in coprime_fluxes(64) {
        for j in 0..=f.q() {
            let r = match solve_residue(j, f) {
                Ok(r) => r,
                Err(e) => {
                    out.push(failed(suite, "residue", e));
                    continue;
                }
            };
            for w in [square_window(f.q()), triangular_window(f.q())] {
                let w = w.expect("window for q >= 1");
                if let Some(v) = resolve_in_window(r, &w) {
                    bad += !(r.contains(v) && w.contains(v)) as usize;
                }
            }
        }
    }
    out.push(check(suite, "window representatives solve the Diophantine equation", bad == 0, format!("{bad} violations")));

    let (mut dioph, mut window, mut total) = (0usize, 0usize, 0usize);
    for q in [3u64, 5, 7, 9, 11, 13] {
        let w = square_window(q).expect("q >= 1");
        for p in [1, (q - 1) / 2] {
            let Ok(f) = Flux::new(p, q) else { continue };
            let model = HofstadterModel::square(f);
            let open: Vec<usize> = match compute_bands(&model) {
                Ok(spec) => compute_gaps(&spec, DEFAULT_EPS_GAP).iter().filter(|g| !g.closed).map(|g| g.j as usize).collect(),
                Err(e) => {
                    out.push(failed(suite, format!("square bands {p}/{q}"), e));
                    continue;
                }
            };
            match gap_cherns_fhs(&model, &open, DEFAULT_GRID) {
                Ok(results) => {
                    for r in results {
                        total += 1;
                        dioph += ((r.value - f.s() as i64 * r.index as i64).rem_euclid(q as i64) != 0) as usize;
                        window += !w.contains(r.value) as usize;
                    }
                }
                Err(e) => out.push(failed(suite, format!("square Cherns {p}/{q}"), e)),
            }
        }
    }
    out.push(check(suite, "square model: sigma_j = s j mod q", dioph == 0, format!("{total} gaps, {dioph} violations")));
    out.push(check(suite, "square model: sigma_j in the square window", window == 0, format!("{total} gaps, {window} violations")));
    out
}
