//! Shared helpers for integration tests: the dense reference simulator and
//! small density-matrix utilities.
#![allow(dead_code)]

pub mod dense;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use photonlace::elements::ElementSpec;
use photonlace::{mode, Complex64, Ensemble, FockState, ModeId, Occupation, Pol};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Union of the occupations appearing in a list of states, in canonical order.
pub fn union_basis<'a>(states: impl IntoIterator<Item = &'a FockState>) -> Vec<Occupation> {
    let set: BTreeSet<Occupation> = states
        .into_iter()
        .flat_map(|s| s.terms().map(|(o, _)| o.clone()))
        .collect();
    set.into_iter().collect()
}

/// Density matrix of a mixture over an explicit occupation basis.
pub fn density_matrix(ensemble: &Ensemble, basis: &[Occupation]) -> DMatrix<Complex64> {
    let dim = basis.len();
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for (w, state) in ensemble.members() {
        let vec: Vec<Complex64> = basis.iter().map(|o| state.amplitude(o)).collect();
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] += vec[i] * vec[j].conj() * *w;
            }
        }
    }
    rho
}

/// Reduced density matrix of a pure state on the kept beams, traced over
/// everything else, expressed on the given kept-occupation basis.
pub fn reduced_density(
    state: &FockState,
    keep: &BTreeSet<String>,
    basis: &[Occupation],
) -> DMatrix<Complex64> {
    use std::collections::BTreeMap;
    let dim = basis.len();
    let index: BTreeMap<&Occupation, usize> = basis.iter().zip(0..).collect();
    let mut sectors: BTreeMap<Occupation, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let rest = occ.without_beams(keep);
        let kept = occ.restrict_to_beams(keep);
        let i = *index.get(&kept).expect("basis covers kept occupations");
        sectors.entry(rest).or_default().push((i, amp));
    }
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for (_, entries) in sectors {
        for &(i, a) in &entries {
            for &(j, b) in &entries {
                rho[(i, j)] += a * b.conj();
            }
        }
    }
    rho
}

/// Trace distance between two density matrices: half the sum of the absolute
/// eigenvalues of their difference.
pub fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let delta = a - b;
    let eig = nalgebra::SymmetricEigen::new(delta);
    0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

/// Haar-ish random unitary from the QR of a complex Gaussian-ish matrix.
pub fn random_unitary(dim: usize, rng: &mut ChaCha12Rng) -> DMatrix<Complex64> {
    let raw = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    raw.qr().q()
}

/// A randomized (state, element) pair over at most 12 modes and 4 photons,
/// reproducible from the seed.
pub fn random_case(seed: u64) -> (Vec<ModeId>, FockState, ElementSpec) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let beams = ["b0", "b1", "b2", "b3", "b4", "b5"];
    let modes: Vec<ModeId> =
        beams.iter().flat_map(|b| [mode(b, Pol::H), mode(b, Pol::V)]).collect();

    let dim = rng.gen_range(1..=4usize);
    let mut picked = Vec::new();
    while picked.len() < dim {
        let cand = rng.gen_range(0..modes.len());
        if !picked.contains(&cand) {
            picked.push(cand);
        }
    }
    let el_modes: Vec<ModeId> = picked.iter().map(|&i| modes[i].clone()).collect();
    let el =
        ElementSpec::generic(el_modes.clone(), el_modes, random_unitary(dim, &mut rng)).unwrap();

    let photons = rng.gen_range(0..=4u32);
    let n_terms = rng.gen_range(1..=8usize);
    let mut terms = Vec::new();
    for _ in 0..n_terms {
        let mut occ = Occupation::vacuum();
        for _ in 0..photons {
            occ.add(&modes[rng.gen_range(0..modes.len())], 1);
        }
        terms.push((occ, Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)));
    }
    let state = match FockState::from_terms(terms) {
        Ok(s) => s.normalized().unwrap(),
        Err(_) => FockState::vacuum(),
    };
    (modes, state, el)
}
