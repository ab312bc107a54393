//! An independent dense reference simulator.
//!
//! Instead of substituting creation operators term by term, this route builds
//! one single-photon transfer matrix over an explicit mode list and evaluates
//! number-sector transition amplitudes with the permanent formula
//!
//! ```text
//! <m|U|n> = Per(U[m|n]) / sqrt(prod m_k! prod n_j!)
//! ```
//!
//! where `U[m|n]` repeats row k m_k times and column j n_j times. The two
//! code paths share nothing beyond the element definitions, so agreement is a
//! genuine cross-check.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use photonlace::elements::{Circuit, ElementSpec, Step};
use photonlace::{Complex64, FockState, ModeId, Occupation};

/// All occupations of `photons` photons over `num_modes` modes, in
/// lexicographic order.
pub fn sector_basis(num_modes: usize, photons: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; num_modes];
    fn rec(left: u32, slot: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slot + 1 == current.len() {
            current[slot] = left;
            out.push(current.clone());
            return;
        }
        for k in 0..=left {
            current[slot] = k;
            rec(left - k, slot + 1, current, out);
        }
    }
    if num_modes == 0 {
        if photons == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(photons, 0, &mut current, &mut out);
    out
}

/// Permanent by direct expansion; fine for the few-photon sectors used here.
pub fn permanent(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "permanent needs a square matrix");
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    fn rec(
        m: &DMatrix<Complex64>,
        row: usize,
        used: &mut [bool],
        acc: Complex64,
        total: &mut Complex64,
    ) {
        let n = m.nrows();
        if row == n {
            *total += acc;
            return;
        }
        for col in 0..n {
            if used[col] {
                continue;
            }
            let v = m[(row, col)];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            used[col] = true;
            rec(m, row + 1, used, acc * v, total);
            used[col] = false;
        }
    }
    let mut total = Complex64::new(0.0, 0.0);
    rec(m, 0, &mut vec![false; n], Complex64::new(1.0, 0.0), &mut total);
    total
}

fn factorial(n: u32) -> f64 {
    (1..=n as u64).map(|k| k as f64).product()
}

/// `<out|U|in>` for occupation vectors over the transfer matrix's modes.
pub fn transition_amplitude(
    transfer: &DMatrix<Complex64>,
    out_counts: &[u32],
    in_counts: &[u32],
) -> Complex64 {
    let n_out: u32 = out_counts.iter().sum();
    let n_in: u32 = in_counts.iter().sum();
    if n_out != n_in {
        return Complex64::new(0.0, 0.0);
    }
    if n_in == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut rows = Vec::with_capacity(n_out as usize);
    for (i, &c) in out_counts.iter().enumerate() {
        for _ in 0..c {
            rows.push(i);
        }
    }
    let mut cols = Vec::with_capacity(n_in as usize);
    for (j, &c) in in_counts.iter().enumerate() {
        for _ in 0..c {
            cols.push(j);
        }
    }
    let n = rows.len();
    let sub = DMatrix::from_fn(n, n, |r, c| transfer[(rows[r], cols[c])]);
    let norm: f64 = out_counts.iter().map(|&c| factorial(c)).product::<f64>()
        * in_counts.iter().map(|&c| factorial(c)).product::<f64>();
    permanent(&sub) / norm.sqrt()
}

/// Single-photon transfer matrix of one element over an explicit mode list.
///
/// Untouched modes map to themselves; each input mode's column is replaced by
/// the element's unitary, landing on the output modes.
pub fn element_transfer(modes: &[ModeId], element: &ElementSpec) -> DMatrix<Complex64> {
    let dim = modes.len();
    let index: BTreeMap<&ModeId, usize> = modes.iter().zip(0..).collect();
    let mut f = DMatrix::<Complex64>::identity(dim, dim);
    for (j, m_in) in element.inputs().iter().enumerate() {
        let col = *index.get(m_in).expect("element input in mode list");
        for r in 0..dim {
            f[(r, col)] = Complex64::new(0.0, 0.0);
        }
        for (k, m_out) in element.outputs().iter().enumerate() {
            let row = *index.get(m_out).expect("element output in mode list");
            f[(row, col)] = element.matrix()[(k, j)];
        }
    }
    f
}

/// Transfer matrix of a relabeling: a permutation of the two renamed modes.
pub fn relabel_transfer(modes: &[ModeId], from: &str, to: &str) -> DMatrix<Complex64> {
    let dim = modes.len();
    let index: BTreeMap<&ModeId, usize> = modes.iter().zip(0..).collect();
    let mut f = DMatrix::<Complex64>::identity(dim, dim);
    for pol in [photonlace::Pol::H, photonlace::Pol::V] {
        let src = ModeId::new(from, pol);
        let dst = ModeId::new(to, pol);
        if let (Some(&c), Some(&r)) = (index.get(&src), index.get(&dst)) {
            f[(c, c)] = Complex64::new(0.0, 0.0);
            f[(r, r)] = Complex64::new(0.0, 0.0);
            f[(r, c)] = Complex64::new(1.0, 0.0);
            f[(c, r)] = Complex64::new(1.0, 0.0);
        }
    }
    f
}

/// Composes a whole circuit into one transfer matrix.
pub fn circuit_transfer(modes: &[ModeId], circuit: &Circuit) -> DMatrix<Complex64> {
    let dim = modes.len();
    let mut f = DMatrix::<Complex64>::identity(dim, dim);
    for step in circuit.steps() {
        let step_matrix = match step {
            Step::Element(el) => element_transfer(modes, el),
            Step::Relabel { from, to } => relabel_transfer(modes, from, to),
        };
        f = step_matrix * f;
    }
    f
}

fn occupation_counts(occ: &Occupation, modes: &[ModeId]) -> Vec<u32> {
    let mut counts = vec![0u32; modes.len()];
    let index: BTreeMap<&ModeId, usize> = modes.iter().zip(0..).collect();
    for (m, n) in occ.iter() {
        let i = *index.get(m).unwrap_or_else(|| panic!("mode {} missing from dense mode list", m));
        counts[i] = n;
    }
    counts
}

fn counts_to_occupation(counts: &[u32], modes: &[ModeId]) -> Occupation {
    let mut occ = Occupation::vacuum();
    for (i, &n) in counts.iter().enumerate() {
        occ.add(&modes[i], n);
    }
    occ
}

/// Applies a transfer matrix to a sparse state via the permanent formula and
/// returns the dense result as occupation-amplitude pairs.
///
/// For each input occupation only the modes its photons can reach are
/// enumerated on the output side; unreachable entries vanish because the
/// repeated matrix acquires a zero row.
pub fn dense_apply(
    transfer: &DMatrix<Complex64>,
    modes: &[ModeId],
    state: &FockState,
) -> BTreeMap<Occupation, Complex64> {
    let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let in_counts = occupation_counts(occ, modes);
        let total: u32 = in_counts.iter().sum();
        // Modes reachable from any occupied input mode.
        let reachable: Vec<usize> = (0..modes.len())
            .filter(|&r| {
                in_counts
                    .iter()
                    .enumerate()
                    .any(|(c, &n)| n > 0 && transfer[(r, c)].norm_sqr() > 0.0)
            })
            .collect();
        for small in sector_basis(reachable.len(), total) {
            let mut out_counts = vec![0u32; modes.len()];
            for (slot, &m_idx) in reachable.iter().enumerate() {
                out_counts[m_idx] = small[slot];
            }
            let t = transition_amplitude(transfer, &out_counts, &in_counts);
            if t.norm_sqr() == 0.0 {
                continue;
            }
            *out.entry(counts_to_occupation(&out_counts, modes))
                .or_insert(Complex64::new(0.0, 0.0)) += t * amp;
        }
    }
    out.retain(|_, a| a.norm() > 1e-13);
    out
}

/// Builds the element's full number-sector matrix explicitly.
pub fn explicit_sector_matrix(
    transfer: &DMatrix<Complex64>,
    basis: &[Vec<u32>],
) -> DMatrix<Complex64> {
    let dim = basis.len();
    DMatrix::from_fn(dim, dim, |i, j| transition_amplitude(transfer, &basis[i], &basis[j]))
}

/// Largest amplitude difference between a sparse state and a dense map.
pub fn max_deviation(state: &FockState, dense: &BTreeMap<Occupation, Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (occ, amp) in state.terms() {
        let d = dense.get(occ).copied().unwrap_or(Complex64::new(0.0, 0.0));
        worst = worst.max((amp - d).norm());
    }
    for (occ, amp) in dense {
        let d = state.amplitude(occ);
        worst = worst.max((amp - d).norm());
    }
    worst
}
