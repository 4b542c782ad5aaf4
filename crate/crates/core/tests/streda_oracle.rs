//! Chern numbers from state counting at a nearby flux, compared with the
//! lattice computation.

use std::f64::consts::FRAC_PI_2;

use hofbutter::chern::{gap_cherns_fhs, DEFAULT_GRID};
use hofbutter::linalg::PeriodicTridiagonal;
use hofbutter::magnetic_algebra::{gcd, BlochMomentum, Flux, HofstadterModel};
use hofbutter::spectrum::{compute_bands, compute_gaps, DEFAULT_EPS_GAP};

/// `p'/q'` with `q' >= q_min` and `p q' - p' q = 1`.
fn neighbour(p: u64, q: u64, q_min: u64) -> (u64, u64) {
    (q_min..q_min + q)
        .find(|&q2| (p * q2) % q == 1 % q)
        .map(|q2| ((p * q2 - 1) / q, q2))
        .expect("p invertible mod q")
}

/// States below `e` per magnetic cell at `p'/q'`, if the count does not
/// depend on the momentum.
fn count_below(flux: Flux, e: f64) -> Option<usize> {
    let model = HofstadterModel::triangular(flux, FRAC_PI_2);
    let counts: Vec<usize> = [(0.0, 0.0), (1.3, -0.4), (-2.2, 2.9)]
        .iter()
        .map(|&(k1, k2)| {
            let (d, s) = model.hopping_data(BlochMomentum::new(k1, k2));
            PeriodicTridiagonal::new(d, s).count_below(e)
        })
        .collect();
    counts.iter().all(|&c| c == counts[0]).then_some(counts[0])
}

/// `sigma_j` from `j q' - j' q`, where `j'` counts the states below the
/// middle of gap `j` at `p'/q'`.
fn streda_sigma(p: u64, q: u64, j: u64, e: f64) -> Option<i64> {
    let (p2, q2) = neighbour(p, q, 400);
    let j2 = count_below(Flux::new(p2, q2).unwrap(), e)? as i64;
    Some(j as i64 * q2 as i64 - j2 * q as i64)
}

fn compare(p: u64, q: u64) -> usize {
    let flux = Flux::new(p, q).unwrap();
    let model = HofstadterModel::triangular(flux, FRAC_PI_2);
    let gaps = compute_gaps(&compute_bands(&model).unwrap(), DEFAULT_EPS_GAP);
    let wide: Vec<usize> = gaps
        .iter()
        .filter(|g| !g.is_semi_infinite() && g.width > 0.05)
        .map(|g| g.j as usize)
        .collect();
    let computed = gap_cherns_fhs(&model, &wide, DEFAULT_GRID).unwrap();
    for r in &computed {
        let g = &gaps[r.index];
        let oracle = streda_sigma(p, q, g.j, 0.5 * (g.lo + g.hi));
        assert_eq!(oracle, Some(r.value), "{p}/{q} gap {}", g.j);
    }
    computed.len()
}

#[test]
fn lattice_cherns_match_state_counting_up_to_q9() {
    let mut checked = 0;
    for q in 2..=9 {
        for p in (1..q).filter(|&p| gcd(p, q) == 1) {
            checked += compare(p, q);
        }
    }
    assert!(checked > 100, "{checked}");
}

#[test]
fn state_counting_fixes_labels_at_two_fifths_and_five_thirteenths() {
    let sigmas = |p, q| {
        let model = HofstadterModel::triangular(Flux::new(p, q).unwrap(), FRAC_PI_2);
        let gaps = compute_gaps(&compute_bands(&model).unwrap(), DEFAULT_EPS_GAP);
        gaps[1..q as usize]
            .iter()
            .map(|g| streda_sigma(p, q, g.j, 0.5 * (g.lo + g.hi)).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(sigmas(2, 5), [-2, 1, -1, 2]);
    assert_eq!(sigmas(3, 7), [-2, -4, 1, -1, 4, 2]);
    assert_eq!(sigmas(5, 13), [-5, 3, -2, -7, 1, 9, 4, -1, 7, 2, -3, 5]);
    assert!(compare(5, 13) >= 5);
}
