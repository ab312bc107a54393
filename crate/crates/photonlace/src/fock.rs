//! Sparse bosonic Fock-state algebra over labeled optical modes.
//!
//! A mode is a (spatial beam, polarization) pair. States are stored as sparse
//! maps from occupation vectors to complex amplitudes over the orthonormal
//! number basis: a basis ket with any occupation has norm one, and the
//! `sqrt(n!)` bookkeeping of repeated creation operators is applied where
//! states are built or transformed, never in storage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Amplitudes with magnitude below this are dropped after every arithmetic pass.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Photon polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub fn label(self) -> char {
        match self {
            Pol::H => 'H',
            Pol::V => 'V',
        }
    }
}

/// One optical mode: a spatial beam label plus a polarization.
///
/// Ordering is lexicographic by beam label with H before V, which fixes the
/// canonical term order used for printing and serialization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeId {
    pub beam: String,
    pub pol: Pol,
}

impl ModeId {
    pub fn new(beam: impl Into<String>, pol: Pol) -> Self {
        ModeId { beam: beam.into(), pol }
    }
}

/// Shorthand constructor for a mode.
pub fn mode(beam: &str, pol: Pol) -> ModeId {
    ModeId::new(beam, pol)
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.beam, self.pol.label())
    }
}

/// Photon counts per mode; absent modes hold zero photons.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation {
    counts: BTreeMap<ModeId, u32>,
}

impl Occupation {
    /// The vacuum: no photons anywhere.
    pub fn vacuum() -> Self {
        Occupation::default()
    }

    pub fn from_counts(pairs: &[(&str, Pol, u32)]) -> Self {
        let mut occ = Occupation::vacuum();
        for &(beam, pol, n) in pairs {
            occ.add(&mode(beam, pol), n);
        }
        occ
    }

    /// One photon per listed mode; duplicates accumulate.
    pub fn photons(modes: &[(&str, Pol)]) -> Self {
        let mut occ = Occupation::vacuum();
        for &(beam, pol) in modes {
            occ.add(&mode(beam, pol), 1);
        }
        occ
    }

    pub fn count(&self, m: &ModeId) -> u32 {
        self.counts.get(m).copied().unwrap_or(0)
    }

    pub fn add(&mut self, m: &ModeId, n: u32) {
        if n == 0 {
            return;
        }
        *self.counts.entry(m.clone()).or_insert(0) += n;
    }

    /// Removes a mode and returns its count, if present.
    pub fn take(&mut self, m: &ModeId) -> Option<u32> {
        self.counts.remove(m)
    }

    pub fn total_photons(&self) -> u32 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeId, u32)> {
        self.counts.iter().map(|(m, &n)| (m, n))
    }

    pub fn modes(&self) -> impl Iterator<Item = &ModeId> {
        self.counts.keys()
    }

    pub fn is_vacuum(&self) -> bool {
        self.counts.is_empty()
    }

    /// Photon count summed over a whole beam (both polarizations).
    pub fn beam_count(&self, beam: &str) -> u32 {
        [Pol::H, Pol::V]
            .iter()
            .map(|&p| self.count(&ModeId::new(beam, p)))
            .sum()
    }

    /// Restriction to modes whose beam is in `beams`.
    pub fn restrict_to_beams(&self, beams: &BTreeSet<String>) -> Occupation {
        let counts = self
            .counts
            .iter()
            .filter(|(m, _)| beams.contains(&m.beam))
            .map(|(m, &n)| (m.clone(), n))
            .collect();
        Occupation { counts }
    }

    /// Complement of [`restrict_to_beams`](Self::restrict_to_beams).
    pub fn without_beams(&self, beams: &BTreeSet<String>) -> Occupation {
        let counts = self
            .counts
            .iter()
            .filter(|(m, _)| !beams.contains(&m.beam))
            .map(|(m, &n)| (m.clone(), n))
            .collect();
        Occupation { counts }
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.counts.is_empty() {
            return write!(f, "-");
        }
        let parts: Vec<String> = self
            .counts
            .iter()
            .map(|(m, n)| format!("{}:{}", m, n))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

/// A pure few-photon state: sparse complex amplitudes over occupation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    terms: BTreeMap<Occupation, Complex64>,
}

impl FockState {
    /// Builds a state from (occupation, amplitude) pairs.
    ///
    /// Duplicate occupations are summed and near-zero amplitudes pruned;
    /// a list that cancels to nothing is rejected as an empty state.
    pub fn from_terms(terms: Vec<(Occupation, Complex64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyState);
        }
        let mut map: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in terms {
            *map.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        map.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        if map.is_empty() {
            return Err(Error::EmptyState);
        }
        Ok(FockState { terms: map })
    }

    /// The vacuum state with amplitude one.
    pub fn vacuum() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Occupation::vacuum(), Complex64::new(1.0, 0.0));
        FockState { terms }
    }

    /// A single basis ket with amplitude one.
    pub fn basis(occ: Occupation) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(occ, Complex64::new(1.0, 0.0));
        FockState { terms }
    }

    /// Builds a state by applying listed creation operators to the vacuum.
    ///
    /// Each product is a list of modes acted on by one creation operator
    /// apiece; repeating a mode n times contributes the bosonic sqrt(n!)
    /// factor on top of the supplied amplitude.
    pub fn from_creations(products: Vec<(Vec<ModeId>, Complex64)>) -> Result<Self> {
        let mut terms = Vec::with_capacity(products.len());
        for (modes, amp) in products {
            let mut occ = Occupation::vacuum();
            for m in &modes {
                occ.add(m, 1);
            }
            let factor: f64 = occ.iter().map(|(_, n)| factorial(n)).product::<f64>().sqrt();
            terms.push((occ, amp * factor));
        }
        FockState::from_terms(terms)
    }

    pub(crate) fn from_map(map: BTreeMap<Occupation, Complex64>) -> Result<Self> {
        if map.is_empty() {
            return Err(Error::EmptyState);
        }
        Ok(FockState { terms: map })
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, Complex64)> {
        self.terms.iter().map(|(o, &a)| (o, a))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.terms.get(occ).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// All modes that appear in any term.
    pub fn support(&self) -> BTreeSet<ModeId> {
        self.terms
            .keys()
            .flat_map(|occ| occ.modes().cloned())
            .collect()
    }

    /// All beams that appear in any term.
    pub fn beams(&self) -> BTreeSet<String> {
        self.support().into_iter().map(|m| m.beam).collect()
    }

    /// Hermitian inner product, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &FockState) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (occ, amp) in &self.terms {
            if let Some(b) = other.terms.get(occ) {
                acc += amp.conj() * b;
            }
        }
        acc
    }

    /// Tensor product with a state on disjoint modes.
    pub fn tensor(&self, other: &FockState) -> Result<FockState> {
        let sup = self.support();
        for m in other.support() {
            if sup.contains(&m) {
                return Err(Error::ModeCollision(m));
            }
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (occ_a, amp_a) in &self.terms {
            for (occ_b, amp_b) in &other.terms {
                let mut occ = occ_a.clone();
                for (m, n) in occ_b.iter() {
                    occ.add(m, n);
                }
                terms.push((occ, amp_a * amp_b));
            }
        }
        FockState::from_terms(terms)
    }

    /// Scales every amplitude.
    pub fn scaled(&self, factor: Complex64) -> Result<FockState> {
        let terms = self
            .terms
            .iter()
            .map(|(o, a)| (o.clone(), a * factor))
            .collect();
        FockState::from_terms(terms)
    }

    /// Term-wise sum of two states.
    pub fn add(&self, other: &FockState) -> Result<FockState> {
        let mut terms: Vec<(Occupation, Complex64)> = self
            .terms
            .iter()
            .map(|(o, &a)| (o.clone(), a))
            .collect();
        terms.extend(other.terms.iter().map(|(o, &a)| (o.clone(), a)));
        FockState::from_terms(terms)
    }

    /// Unit-norm copy of this state; the ray (global phase) is unchanged.
    pub fn normalized(&self) -> Result<FockState> {
        let n2 = self.norm_sqr();
        if n2 <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / n2.sqrt();
        let terms = self
            .terms
            .iter()
            .map(|(o, a)| (o.clone(), a * inv))
            .collect();
        Ok(FockState { terms })
    }

    /// Component of this state whose occupations satisfy `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&Occupation) -> bool) -> Result<FockState> {
        let terms: Vec<_> = self
            .terms
            .iter()
            .filter(|(o, _)| keep(o))
            .map(|(o, &a)| (o.clone(), a))
            .collect();
        FockState::from_terms(terms)
    }

    /// Canonical text form: one term per line,
    /// `<amp_re>\t<amp_im>\t<mode:count,...>` with modes in canonical order
    /// and `-` for the vacuum occupation.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        for (occ, amp) in &self.terms {
            out.push_str(&format!("{}\t{}\t{}\n", amp.re, amp.im, occ));
        }
        out
    }

    /// Parses the canonical text form produced by [`to_canonical_text`](Self::to_canonical_text).
    pub fn from_canonical_text(text: &str) -> Result<FockState> {
        let mut terms = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::MalformedStateText(format!(
                    "expected 3 tab-separated fields, got {}",
                    fields.len()
                )));
            }
            let re: f64 = fields[0]
                .parse()
                .map_err(|_| Error::MalformedStateText(format!("bad real part '{}'", fields[0])))?;
            let im: f64 = fields[1]
                .parse()
                .map_err(|_| Error::MalformedStateText(format!("bad imaginary part '{}'", fields[1])))?;
            let occ = parse_occupation(fields[2])?;
            terms.push((occ, Complex64::new(re, im)));
        }
        FockState::from_terms(terms)
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_canonical_text())
    }
}

fn parse_occupation(text: &str) -> Result<Occupation> {
    let mut occ = Occupation::vacuum();
    if text == "-" {
        return Ok(occ);
    }
    for part in text.split(',') {
        let (mode_str, count_str) = part
            .rsplit_once(':')
            .ok_or_else(|| Error::MalformedStateText(format!("bad mode entry '{}'", part)))?;
        let count: u32 = count_str
            .parse()
            .map_err(|_| Error::MalformedStateText(format!("bad count '{}'", count_str)))?;
        let (beam, pol_char) = mode_str.split_at(mode_str.len().saturating_sub(1));
        let pol = match pol_char {
            "H" => Pol::H,
            "V" => Pol::V,
            _ => {
                return Err(Error::MalformedStateText(format!(
                    "mode '{}' does not end in H or V",
                    mode_str
                )))
            }
        };
        if beam.is_empty() {
            return Err(Error::MalformedStateText(format!("empty beam in '{}'", mode_str)));
        }
        occ.add(&mode(beam, pol), count);
    }
    Ok(occ)
}

/// A classical mixture of normalized pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<(f64, FockState)>,
}

impl Ensemble {
    /// Builds a mixture; weights are normalized to sum to one and member
    /// states to unit norm.
    pub fn new(members: Vec<(f64, FockState)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyState);
        }
        let total: f64 = members.iter().map(|(w, _)| *w).sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("ensemble weights must sum to > 0".into()));
        }
        let normalized = members
            .into_iter()
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, s)| Ok((w / total, s.normalized()?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble { members: normalized })
    }

    /// Wraps a single pure state as a trivial ensemble.
    pub fn pure(state: FockState) -> Result<Self> {
        Ensemble::new(vec![(1.0, state)])
    }

    pub fn members(&self) -> &[(f64, FockState)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n as u64).map(|k| k as f64).product()
}
