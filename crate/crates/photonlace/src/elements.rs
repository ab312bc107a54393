//! Unitary mode transformations for linear-optical elements and their
//! application to Fock states.
//!
//! Every element carries an explicit list of input and output modes plus the
//! unitary that scatters creation operators between them: the j-th input
//! operator maps to `Σ_k U[k][j] · a†(output_k)`. Polarizing beam splitters
//! route photons to fresh beam labels; wave plates and phase shifters act in
//! place. Relabelings are bookkeeping steps, not physical elements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{factorial, mode, FockState, ModeId, Occupation, Pol, PRUNE_THRESHOLD};

const UNITARITY_TOL: f64 = 1e-12;

/// The optical element kinds the simulator knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Pbs,
    Hwp,
    Phase,
    Generic,
}

/// One linear-optical element: a unitary map from input modes to output modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSpec {
    kind: ElementKind,
    inputs: Vec<ModeId>,
    outputs: Vec<ModeId>,
    matrix: DMatrix<Complex64>,
}

impl ElementSpec {
    /// Builds an arbitrary element after checking that the matrix is square,
    /// matches the mode lists and is unitary.
    pub fn generic(
        inputs: Vec<ModeId>,
        outputs: Vec<ModeId>,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self> {
        Self::checked(ElementKind::Generic, inputs, outputs, matrix)
    }

    fn checked(
        kind: ElementKind,
        inputs: Vec<ModeId>,
        outputs: Vec<ModeId>,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self> {
        let dim = inputs.len();
        if outputs.len() != dim || matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidParameter(
                "element matrix dimension must match its mode lists".into(),
            ));
        }
        let distinct: BTreeSet<_> = inputs.iter().collect();
        if distinct.len() != dim {
            return Err(Error::InvalidParameter("duplicate input mode".into()));
        }
        let distinct: BTreeSet<_> = outputs.iter().collect();
        if distinct.len() != dim {
            return Err(Error::InvalidParameter("duplicate output mode".into()));
        }
        let gram = matrix.adjoint() * &matrix;
        let identity = DMatrix::<Complex64>::identity(dim, dim);
        if (gram - identity).iter().any(|d| d.norm() > UNITARITY_TOL) {
            return Err(Error::NotUnitary);
        }
        Ok(ElementSpec { kind, inputs, outputs, matrix })
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn inputs(&self) -> &[ModeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[ModeId] {
        &self.outputs
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Row-major complex entries, for debugging.
    pub fn matrix_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.matrix.nrows())
            .map(|i| (0..self.matrix.ncols()).map(|j| self.matrix[(i, j)]).collect())
            .collect()
    }

    fn beams(&self) -> BTreeSet<String> {
        self.inputs
            .iter()
            .chain(self.outputs.iter())
            .map(|m| m.beam.clone())
            .collect()
    }
}

/// Polarizing beam splitter: transmits H, reflects V, with all coefficients +1.
///
/// `in_a`'s H photons exit on `out_a` and its V photons on `out_b`;
/// `in_b`'s H photons exit on `out_b` and its V photons on `out_a`.
/// The reflected-V phase convention follows the evolution equations this
/// simulator reproduces, which carry no i or sign on reflection.
pub fn pbs(in_a: &str, in_b: &str, out_a: &str, out_b: &str) -> Result<ElementSpec> {
    let labels = [in_a, in_b, out_a, out_b];
    for (i, a) in labels.iter().enumerate() {
        for b in labels.iter().skip(i + 1) {
            if a == b {
                return Err(Error::DuplicateBeam((*a).to_string()));
            }
        }
    }
    let inputs = vec![
        mode(in_a, Pol::H),
        mode(in_a, Pol::V),
        mode(in_b, Pol::H),
        mode(in_b, Pol::V),
    ];
    let outputs = vec![
        mode(out_a, Pol::H),
        mode(out_a, Pol::V),
        mode(out_b, Pol::H),
        mode(out_b, Pol::V),
    ];
    let one = Complex64::new(1.0, 0.0);
    let mut m = DMatrix::<Complex64>::zeros(4, 4);
    m[(0, 0)] = one; // in_a H -> out_a H
    m[(3, 1)] = one; // in_a V -> out_b V
    m[(2, 2)] = one; // in_b H -> out_b H
    m[(1, 3)] = one; // in_b V -> out_a V
    ElementSpec::checked(ElementKind::Pbs, inputs, outputs, m)
}

/// Half-wave plate rotating the polarization of one beam by `angle`.
///
/// The matrix is `[[cos a, sin a], [sin a, -cos a]]`, so a π/2 rotation is an
/// exact H↔V swap with coefficient +1 and π/4 maps H to (H+V)/√2 and V to
/// (H−V)/√2.
pub fn hwp(beam: &str, angle: f64) -> ElementSpec {
    let modes = vec![mode(beam, Pol::H), mode(beam, Pol::V)];
    let (s, c) = angle.sin_cos();
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-c, 0.0),
        ],
    );
    ElementSpec::checked(ElementKind::Hwp, modes.clone(), modes, m)
        .expect("wave plate matrix is unitary")
}

/// Phase shifter: every photon in the beam acquires `exp(i theta)`.
pub fn phase_shifter(beam: &str, theta: f64) -> ElementSpec {
    let modes = vec![mode(beam, Pol::H), mode(beam, Pol::V)];
    let f = Complex64::from_polar(1.0, theta);
    let mut m = DMatrix::<Complex64>::zeros(2, 2);
    m[(0, 0)] = f;
    m[(1, 1)] = f;
    ElementSpec::checked(ElementKind::Phase, modes.clone(), modes, m)
        .expect("phase matrix is unitary")
}

/// Sign flip on the V component of one beam; the local correction that turns
/// a Φ⁻ pair into Φ⁺.
pub fn pol_phase_flip(beam: &str) -> ElementSpec {
    let modes = vec![mode(beam, Pol::H), mode(beam, Pol::V)];
    let mut m = DMatrix::<Complex64>::zeros(2, 2);
    m[(0, 0)] = Complex64::new(1.0, 0.0);
    m[(1, 1)] = Complex64::new(-1.0, 0.0);
    ElementSpec::checked(ElementKind::Generic, modes.clone(), modes, m)
        .expect("sign flip is unitary")
}

/// One step of a circuit: a physical element or a pure renaming of a beam.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Element(ElementSpec),
    Relabel { from: String, to: String },
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Element(el) => write!(f, "{:?} on {:?}", el.kind(), el.inputs()),
            Step::Relabel { from, to } => write!(f, "relabel {} -> {}", from, to),
        }
    }
}

/// An ordered sequence of elements and relabelings over a fixed beam registry.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    registry: BTreeSet<String>,
    steps: Vec<Step>,
}

impl Circuit {
    /// Builds a circuit, checking that every step references registered beams,
    /// that no beam is used again after being consumed or renamed away, and
    /// that fresh output beams have not carried photons before.
    pub fn new(registry: impl IntoIterator<Item = String>, steps: Vec<Step>) -> Result<Self> {
        let registry: BTreeSet<String> = registry.into_iter().collect();
        let mut retired: BTreeSet<String> = BTreeSet::new();
        // Beams that have passed through an element already.
        let mut used: BTreeSet<String> = BTreeSet::new();
        for step in &steps {
            match step {
                Step::Element(el) => {
                    for beam in el.beams() {
                        if !registry.contains(&beam) {
                            return Err(Error::UnknownBeam(beam));
                        }
                    }
                    let in_beams: BTreeSet<String> =
                        el.inputs().iter().map(|m| m.beam.clone()).collect();
                    let out_beams: BTreeSet<String> =
                        el.outputs().iter().map(|m| m.beam.clone()).collect();
                    for b in &in_beams {
                        if retired.contains(b) {
                            return Err(Error::UnknownBeam(b.clone()));
                        }
                    }
                    for b in out_beams.difference(&in_beams) {
                        if retired.contains(b) || used.contains(b) {
                            return Err(Error::BeamInUse(b.clone()));
                        }
                    }
                    // Beams that only feed inputs are consumed by the element.
                    for b in in_beams.difference(&out_beams) {
                        retired.insert(b.clone());
                    }
                    used.extend(in_beams);
                    used.extend(out_beams);
                }
                Step::Relabel { from, to } => {
                    if !registry.contains(from) {
                        return Err(Error::UnknownBeam(from.clone()));
                    }
                    if !registry.contains(to) {
                        return Err(Error::UnknownBeam(to.clone()));
                    }
                    if retired.contains(from) {
                        return Err(Error::UnknownBeam(from.clone()));
                    }
                    if retired.contains(to) || used.contains(to) {
                        return Err(Error::BeamInUse(to.clone()));
                    }
                    retired.insert(from.clone());
                    used.insert(from.clone());
                    used.insert(to.clone());
                }
            }
        }
        Ok(Circuit { registry, steps })
    }

    pub fn empty() -> Self {
        Circuit { registry: BTreeSet::new(), steps: Vec::new() }
    }

    pub fn registry(&self) -> &BTreeSet<String> {
        &self.registry
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Appends further steps, revalidating the whole sequence.
    pub fn extended(&self, extra: Vec<Step>) -> Result<Circuit> {
        let mut steps = self.steps.clone();
        steps.extend(extra);
        Circuit::new(self.registry.iter().cloned(), steps)
    }
}

/// Applies one element to a state by substituting creation operators.
///
/// Each input mode's n photons expand multinomially over the output modes
/// with the bosonic sqrt(n!) weights; total photon number is conserved and
/// the norm is preserved to within floating-point error.
pub fn apply_element(state: &FockState, element: &ElementSpec) -> Result<FockState> {
    let dim = element.inputs.len();
    let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    let in_place: BTreeSet<&ModeId> = element.inputs.iter().collect();

    for (occ, amp) in state.terms() {
        let mut untouched = occ.clone();
        let mut photons = vec![0u32; dim];
        for (j, m) in element.inputs.iter().enumerate() {
            if let Some(n) = untouched.take(m) {
                photons[j] = n;
            }
        }
        for m in element.outputs.iter() {
            if !in_place.contains(m) && untouched.count(m) > 0 {
                return Err(Error::ModeCollision(m.clone()));
            }
        }
        let total_in: u32 = photons.iter().sum();

        let in_factor: f64 = photons.iter().map(|&n| factorial(n)).product();
        let mut expansion: Vec<(Vec<u32>, Complex64)> =
            vec![(vec![0u32; dim], amp / in_factor.sqrt())];
        for (j, &n) in photons.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let splits = compositions(n, dim);
            let mut next: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
            for (counts, coeff) in &expansion {
                for split in &splits {
                    let mut weight = Complex64::new(multinomial(n, split), 0.0);
                    for (k, &a) in split.iter().enumerate() {
                        if a > 0 {
                            weight *= element.matrix[(k, j)].powu(a);
                        }
                    }
                    if weight.norm() < PRUNE_THRESHOLD {
                        continue;
                    }
                    let mut merged = counts.clone();
                    for (k, &a) in split.iter().enumerate() {
                        merged[k] += a;
                    }
                    *next.entry(merged).or_insert(Complex64::new(0.0, 0.0)) += coeff * weight;
                }
            }
            expansion = next.into_iter().collect();
        }

        for (counts, coeff) in expansion {
            debug_assert_eq!(counts.iter().sum::<u32>(), total_in);
            let out_factor: f64 = counts.iter().map(|&n| factorial(n)).product();
            let mut occ_out = untouched.clone();
            for (k, &n) in counts.iter().enumerate() {
                occ_out.add(&element.outputs[k], n);
            }
            *out.entry(occ_out).or_insert(Complex64::new(0.0, 0.0)) +=
                coeff * out_factor.sqrt();
        }
    }

    out.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    FockState::from_map(out)
}

/// Renames a beam in every term; the target beam must be empty.
pub fn apply_relabel(state: &FockState, from: &str, to: &str) -> Result<FockState> {
    let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        if occ.beam_count(to) > 0 {
            return Err(Error::BeamInUse(to.to_string()));
        }
        let mut renamed = Occupation::vacuum();
        for (m, n) in occ.iter() {
            let target = if m.beam == from { mode(to, m.pol) } else { m.clone() };
            renamed.add(&target, n);
        }
        *out.entry(renamed).or_insert(Complex64::new(0.0, 0.0)) += amp;
    }
    FockState::from_map(out)
}

/// Left-to-right application of a whole circuit.
pub fn apply_circuit(state: &FockState, circuit: &Circuit) -> Result<FockState> {
    if !circuit.registry.is_empty() {
        for beam in state.beams() {
            if !circuit.registry.contains(&beam) {
                return Err(Error::UnknownBeam(beam));
            }
        }
    }
    let mut current = state.clone();
    for step in &circuit.steps {
        current = match step {
            Step::Element(el) => apply_element(&current, el)?,
            Step::Relabel { from, to } => apply_relabel(&current, from, to)?,
        };
    }
    Ok(current)
}

/// All ways to split `n` photons across `bins` output modes.
fn compositions(n: u32, bins: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; bins];
    fn rec(n: u32, bin: usize, bins: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if bin == bins - 1 {
            current[bin] = n;
            out.push(current.clone());
            return;
        }
        for k in 0..=n {
            current[bin] = k;
            rec(n - k, bin + 1, bins, current, out);
        }
    }
    rec(n, 0, bins, &mut current, &mut out);
    out
}

fn multinomial(n: u32, split: &[u32]) -> f64 {
    factorial(n) / split.iter().map(|&k| factorial(k)).product::<f64>()
}
