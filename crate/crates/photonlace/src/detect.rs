//! Detector models, click-pattern probabilities, conditional post-measurement
//! states, fidelity and seeded Monte Carlo sampling.
//!
//! Detector efficiency is modeled as independent per-photon detection: a
//! threshold detector watching n photons clicks with probability
//! 1 - (1-eta)^n. There are no dark counts. Conditioning on a pattern yields
//! an ensemble with one member per occupation of the traced-out modes that is
//! consistent with the pattern.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::fock::{factorial, Ensemble, FockState, ModeId, Occupation, Pol};

/// Probabilities below this floor are treated as impossible outcomes.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// What a detector can resolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Resolution {
    /// Clicked or silent, nothing more.
    Threshold,
    /// Reports the number of detected photons.
    NumberResolving,
}

/// A photon detector watching a set of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub id: String,
    pub modes: BTreeSet<ModeId>,
    pub resolution: Resolution,
    pub efficiency: f64,
}

impl DetectorSpec {
    /// Yes-no detector on a whole beam (both polarizations).
    pub fn on_beam(id: &str, beam: &str) -> Self {
        DetectorSpec {
            id: id.to_string(),
            modes: [ModeId::new(beam, Pol::H), ModeId::new(beam, Pol::V)]
                .into_iter()
                .collect(),
            resolution: Resolution::Threshold,
            efficiency: 1.0,
        }
    }

    /// Polarization-resolved detector on one mode of a beam.
    pub fn polarized(id: &str, beam: &str, pol: Pol) -> Self {
        DetectorSpec {
            id: id.to_string(),
            modes: [ModeId::new(beam, pol)].into_iter().collect(),
            resolution: Resolution::Threshold,
            efficiency: 1.0,
        }
    }

    pub fn with_efficiency(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "detector efficiency must be in (0, 1], got {}",
                eta
            )));
        }
        self.efficiency = eta;
        Ok(self)
    }

    pub fn number_resolving(mut self) -> Self {
        self.resolution = Resolution::NumberResolving;
        self
    }
}

/// Checks that no two detectors watch the same mode.
pub fn validate_detectors(detectors: &[DetectorSpec]) -> Result<()> {
    let mut seen: BTreeMap<&ModeId, &str> = BTreeMap::new();
    for d in detectors {
        for m in &d.modes {
            if seen.insert(m, &d.id).is_some() {
                return Err(Error::DetectorOverlap(m.clone()));
            }
        }
    }
    let ids: BTreeSet<&str> = detectors.iter().map(|d| d.id.as_str()).collect();
    if ids.len() != detectors.len() {
        return Err(Error::InvalidParameter("duplicate detector id".into()));
    }
    Ok(())
}

/// One detector's report within a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Reading {
    Silent,
    Clicked,
    /// Number-resolved photon count.
    Photons(u32),
}

impl Reading {
    pub fn is_click(self) -> bool {
        match self {
            Reading::Silent => false,
            Reading::Clicked => true,
            Reading::Photons(n) => n > 0,
        }
    }
}

/// An assignment of a reading to every declared detector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickPattern {
    readings: BTreeMap<String, Reading>,
}

// Canonical pattern order is by label so that tables read alphabetically;
// the readings map breaks ties between patterns over different detectors.
impl Ord for ClickPattern {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.label()
            .cmp(&other.label())
            .then_with(|| self.readings.cmp(&other.readings))
    }
}

impl PartialOrd for ClickPattern {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl ClickPattern {
    pub fn new(readings: BTreeMap<String, Reading>) -> Self {
        ClickPattern { readings }
    }

    /// Threshold pattern over `detectors` with exactly `clicked` clicking.
    pub fn of_clicks(detectors: &[DetectorSpec], clicked: &[&str]) -> Result<Self> {
        let mut readings = BTreeMap::new();
        for d in detectors {
            readings.insert(d.id.clone(), Reading::Silent);
        }
        for id in clicked {
            match readings.get_mut(*id) {
                Some(r) => *r = Reading::Clicked,
                None => {
                    return Err(Error::InvalidParameter(format!("unknown detector '{}'", id)))
                }
            }
        }
        Ok(ClickPattern { readings })
    }

    pub fn reading(&self, id: &str) -> Option<Reading> {
        self.readings.get(id).copied()
    }

    pub fn readings(&self) -> impl Iterator<Item = (&String, Reading)> {
        self.readings.iter().map(|(k, &v)| (k, v))
    }

    pub fn clicked_ids(&self) -> Vec<&str> {
        self.readings
            .iter()
            .filter(|(_, r)| r.is_click())
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Compact label: clicked ids in canonical order, `id:k` for
    /// number-resolved counts, `(none)` when everything is silent.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        for (id, r) in &self.readings {
            match r {
                Reading::Silent => {}
                Reading::Clicked => parts.push(id.clone()),
                Reading::Photons(k) => parts.push(format!("{}:{}", id, k)),
            }
        }
        if parts.is_empty() {
            "(none)".to_string()
        } else {
            parts.join("+")
        }
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A pattern together with its probability and the conditional state of the
/// beams no detector watches.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub pattern: ClickPattern,
    pub probability: f64,
    pub conditional: Ensemble,
}

fn detected_photons(occ: &Occupation, det: &DetectorSpec) -> u32 {
    det.modes.iter().map(|m| occ.count(m)).sum()
}

/// P(reading | n photons arrive) for one detector.
fn reading_probability(det: &DetectorSpec, n: u32, reading: Reading) -> f64 {
    let eta = det.efficiency;
    let miss = (1.0 - eta).powi(n as i32);
    match (det.resolution, reading) {
        (Resolution::Threshold, Reading::Silent) => miss,
        (Resolution::Threshold, Reading::Clicked) => 1.0 - miss,
        (Resolution::Threshold, Reading::Photons(_)) => 0.0,
        (Resolution::NumberResolving, Reading::Photons(k)) => {
            if k > n {
                0.0
            } else {
                binomial(n, k) * eta.powi(k as i32) * (1.0 - eta).powi((n - k) as i32)
            }
        }
        (Resolution::NumberResolving, _) => 0.0,
    }
}

/// The possible readings of one detector given n arriving photons, with
/// probabilities above the floor.
fn reading_distribution(det: &DetectorSpec, n: u32) -> Vec<(Reading, f64)> {
    let mut out = Vec::new();
    match det.resolution {
        Resolution::Threshold => {
            for reading in [Reading::Silent, Reading::Clicked] {
                let p = reading_probability(det, n, reading);
                if p > PROBABILITY_FLOOR {
                    out.push((reading, p));
                }
            }
        }
        Resolution::NumberResolving => {
            for k in 0..=n {
                let p = reading_probability(det, n, Reading::Photons(k));
                if p > PROBABILITY_FLOOR {
                    out.push((Reading::Photons(k), p));
                }
            }
        }
    }
    out
}

fn pattern_matches_detectors(pattern: &ClickPattern, detectors: &[DetectorSpec]) -> bool {
    pattern.readings.len() == detectors.len()
        && detectors.iter().all(|d| pattern.readings.contains_key(&d.id))
}

/// Probability that the detectors report exactly `pattern` on `state`.
pub fn click_probability(
    state: &FockState,
    detectors: &[DetectorSpec],
    pattern: &ClickPattern,
) -> Result<f64> {
    validate_detectors(detectors)?;
    if !pattern_matches_detectors(pattern, detectors) {
        return Err(Error::PatternMismatch);
    }
    let mut total = 0.0;
    for (occ, amp) in state.terms() {
        let mut p = amp.norm_sqr();
        for det in detectors {
            if p <= 0.0 {
                break;
            }
            let n = detected_photons(occ, det);
            let reading = pattern.readings[&det.id];
            p *= reading_probability(det, n, reading);
        }
        total += p;
    }
    Ok(total)
}

/// Exact pattern probabilities for a pure state, keyed canonically.
pub fn pattern_probabilities(
    state: &FockState,
    detectors: &[DetectorSpec],
) -> Result<BTreeMap<ClickPattern, f64>> {
    validate_detectors(detectors)?;
    let mut table: BTreeMap<ClickPattern, f64> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let weight = amp.norm_sqr();
        if weight <= PROBABILITY_FLOOR {
            continue;
        }
        let mut partial: Vec<(BTreeMap<String, Reading>, f64)> = vec![(BTreeMap::new(), weight)];
        for det in detectors {
            let n = detected_photons(occ, det);
            let dist = reading_distribution(det, n);
            let mut next = Vec::with_capacity(partial.len() * dist.len());
            for (readings, p) in &partial {
                for (reading, q) in &dist {
                    let mut r = readings.clone();
                    r.insert(det.id.clone(), *reading);
                    next.push((r, p * q));
                }
            }
            partial = next;
        }
        for (readings, p) in partial {
            *table.entry(ClickPattern::new(readings)).or_insert(0.0) += p;
        }
    }
    table.retain(|_, p| *p > PROBABILITY_FLOOR);
    Ok(table)
}

/// Pattern probabilities averaged over an ensemble.
pub fn ensemble_pattern_probabilities(
    ensemble: &Ensemble,
    detectors: &[DetectorSpec],
) -> Result<BTreeMap<ClickPattern, f64>> {
    let mut table: BTreeMap<ClickPattern, f64> = BTreeMap::new();
    for (w, state) in ensemble.members() {
        for (pattern, p) in pattern_probabilities(state, detectors)? {
            *table.entry(pattern).or_insert(0.0) += w * p;
        }
    }
    table.retain(|_, p| *p > PROBABILITY_FLOOR);
    Ok(table)
}

/// Conditional state of the `keep` beams given an observed pattern.
///
/// Projects onto occupations of the traced-out modes consistent with the
/// pattern; the result has one member per such occupation.
pub fn condition(
    state: &FockState,
    detectors: &[DetectorSpec],
    pattern: &ClickPattern,
    keep: &BTreeSet<String>,
) -> Result<Ensemble> {
    validate_detectors(detectors)?;
    if !pattern_matches_detectors(pattern, detectors) {
        return Err(Error::PatternMismatch);
    }
    for det in detectors {
        for m in &det.modes {
            if keep.contains(&m.beam) {
                return Err(Error::InvalidParameter(format!(
                    "kept beam '{}' is watched by detector '{}'",
                    m.beam, det.id
                )));
            }
        }
    }
    // Group terms by the occupation of everything outside the kept beams.
    let mut sectors: BTreeMap<Occupation, Vec<(Occupation, Complex64)>> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let rest = occ.without_beams(keep);
        let kept = occ.restrict_to_beams(keep);
        sectors.entry(rest).or_default().push((kept, amp));
    }
    let mut members = Vec::new();
    let mut total = 0.0;
    for (rest, kept_terms) in sectors {
        let mut p_pattern = 1.0;
        for det in detectors {
            let n = detected_photons(&rest, det);
            p_pattern *= reading_probability(det, n, pattern.readings[&det.id]);
            if p_pattern <= 0.0 {
                break;
            }
        }
        if p_pattern <= PROBABILITY_FLOOR {
            continue;
        }
        let sector_state = match FockState::from_terms(kept_terms) {
            Ok(s) => s,
            Err(Error::EmptyState) => continue,
            Err(e) => return Err(e),
        };
        let weight = p_pattern * sector_state.norm_sqr();
        if weight <= PROBABILITY_FLOOR {
            continue;
        }
        total += weight;
        members.push((weight, sector_state));
    }
    if total <= PROBABILITY_FLOOR {
        return Err(Error::ImpossibleOutcome);
    }
    Ensemble::new(members)
}

/// Mixture fidelity with a normalized pure target state.
pub fn fidelity(ensemble: &Ensemble, target: &FockState) -> f64 {
    ensemble
        .members()
        .iter()
        .map(|(w, s)| w * target.inner_product(s).norm_sqr())
        .sum()
}

/// All patterns with probability above the floor, each with its conditional
/// state on the unmonitored beams.
pub fn outcome_distribution(
    state: &FockState,
    detectors: &[DetectorSpec],
) -> Result<Vec<MeasurementOutcome>> {
    let table = pattern_probabilities(state, detectors)?;
    let monitored_beams: BTreeSet<String> = detectors
        .iter()
        .flat_map(|d| d.modes.iter().map(|m| m.beam.clone()))
        .collect();
    let keep: BTreeSet<String> = state
        .beams()
        .into_iter()
        .filter(|b| !monitored_beams.contains(b))
        .collect();
    let mut out = Vec::with_capacity(table.len());
    for (pattern, probability) in table {
        let conditional = condition(state, detectors, &pattern, &keep)?;
        out.push(MeasurementOutcome { pattern, probability, conditional });
    }
    Ok(out)
}

/// Observed or expected counts per pattern.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountTable {
    rows: BTreeMap<ClickPattern, CountRow>,
}

/// One row of a [`CountTable`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CountRow {
    pub count: f64,
    pub probability: f64,
}

impl CountTable {
    pub fn new() -> Self {
        CountTable::default()
    }

    pub fn insert(&mut self, pattern: ClickPattern, count: f64, probability: f64) {
        self.rows.insert(pattern, CountRow { count, probability });
    }

    pub fn add_count(&mut self, pattern: &ClickPattern, n: f64) {
        self.rows.entry(pattern.clone()).or_default().count += n;
    }

    pub fn get(&self, pattern: &ClickPattern) -> CountRow {
        self.rows.get(pattern).copied().unwrap_or_default()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&ClickPattern, &CountRow)> {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_count(&self) -> f64 {
        self.rows.values().map(|r| r.count).sum()
    }

    /// CSV with `pattern,count,probability` rows in canonical pattern order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pattern,count,probability\n");
        for (pattern, row) in &self.rows {
            out.push_str(&format!("{},{},{}\n", pattern.label(), row.count, row.probability));
        }
        out
    }
}

/// Draws `trials` samples from the detection statistics of an ensemble.
///
/// Each trial first picks an ensemble member by weight, then a pattern by
/// inverse CDF in canonical pattern order. Fixed seeds reproduce exactly.
pub fn sample(
    source: &Ensemble,
    detectors: &[DetectorSpec],
    trials: u64,
    seed: u64,
) -> Result<CountTable> {
    sample_streams(source, detectors, trials, seed, 1)
}

/// Like [`sample`], with trials split across independently seeded streams
/// (stream seed = seed + index). Reproducible for a fixed (seed, streams).
pub fn sample_streams(
    source: &Ensemble,
    detectors: &[DetectorSpec],
    trials: u64,
    seed: u64,
    streams: u32,
) -> Result<CountTable> {
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if streams < 1 {
        return Err(Error::InvalidParameter("streams must be >= 1".into()));
    }
    // Per-member pattern CDFs over a shared pattern index, canonical order.
    let mut exact: BTreeMap<ClickPattern, f64> = BTreeMap::new();
    let mut member_tables = Vec::with_capacity(source.len());
    for (w, state) in source.members() {
        let table = pattern_probabilities(state, detectors)?;
        for (pattern, p) in &table {
            *exact.entry(pattern.clone()).or_insert(0.0) += w * p;
        }
        member_tables.push(table);
    }
    let pattern_index: BTreeMap<&ClickPattern, usize> = exact.keys().zip(0..).collect();
    let member_cdfs: Vec<Vec<(usize, f64)>> = member_tables
        .iter()
        .map(|table| {
            let mut acc = 0.0;
            table
                .iter()
                .map(|(pattern, p)| {
                    acc += p;
                    (pattern_index[pattern], acc)
                })
                .collect()
        })
        .collect();
    let member_weights: Vec<f64> = source.members().iter().map(|(w, _)| *w).collect();

    let mut counts = vec![0u64; exact.len()];
    let per_stream = trials / streams as u64;
    let remainder = trials % streams as u64;
    for stream in 0..streams {
        let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(stream as u64));
        let n = per_stream + if (stream as u64) < remainder { 1 } else { 0 };
        for _ in 0..n {
            let member = pick_index(&member_weights, rng.gen::<f64>());
            let cdf = &member_cdfs[member];
            let u = rng.gen::<f64>();
            let idx = match cdf.iter().position(|(_, acc)| u < *acc) {
                Some(i) => i,
                None => cdf.len() - 1,
            };
            counts[cdf[idx].0] += 1;
        }
    }

    let mut table = CountTable::new();
    for (i, (pattern, p)) in exact.iter().enumerate() {
        table.insert(pattern.clone(), counts[i] as f64, *p);
    }
    Ok(table)
}

fn pick_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{apply_element, hwp};
    use std::f64::consts::FRAC_PI_4;

    fn ket(modes: &[(&str, Pol)]) -> FockState {
        FockState::basis(Occupation::photons(modes))
    }

    fn bell_plus(a: &str, b: &str) -> FockState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        FockState::from_terms(vec![
            (Occupation::photons(&[(a, Pol::H), (b, Pol::H)]), Complex64::new(s, 0.0)),
            (Occupation::photons(&[(a, Pol::V), (b, Pol::V)]), Complex64::new(s, 0.0)),
        ])
        .unwrap()
    }

    fn bell_minus(a: &str, b: &str) -> FockState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        FockState::from_terms(vec![
            (Occupation::photons(&[(a, Pol::H), (b, Pol::H)]), Complex64::new(s, 0.0)),
            (Occupation::photons(&[(a, Pol::V), (b, Pol::V)]), Complex64::new(-s, 0.0)),
        ])
        .unwrap()
    }

    #[test]
    fn vacuum_is_all_silent() {
        let dets = vec![DetectorSpec::on_beam("Dx", "x"), DetectorSpec::on_beam("Dw", "w")];
        let pattern = ClickPattern::of_clicks(&dets, &[]).unwrap();
        let p = click_probability(&FockState::vacuum(), &dets, &pattern).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_detectors_rejected() {
        let dets = vec![DetectorSpec::on_beam("Da", "x"), DetectorSpec::polarized("Db", "x", Pol::H)];
        let pattern = ClickPattern::of_clicks(&dets, &[]).unwrap();
        assert!(matches!(
            click_probability(&FockState::vacuum(), &dets, &pattern),
            Err(Error::DetectorOverlap(_))
        ));
    }

    #[test]
    fn balanced_rotation_splits_evenly() {
        // One photon through a pi/4 plate, then polarization-resolved detectors.
        let state = apply_element(&ket(&[("b", Pol::H)]), &hwp("b", FRAC_PI_4)).unwrap();
        let dets = vec![
            DetectorSpec::polarized("DbH", "b", Pol::H),
            DetectorSpec::polarized("DbV", "b", Pol::V),
        ];
        let table = pattern_probabilities(&state, &dets).unwrap();
        let h = ClickPattern::of_clicks(&dets, &["DbH"]).unwrap();
        let v = ClickPattern::of_clicks(&dets, &["DbV"]).unwrap();
        assert!((table[&h] - 0.5).abs() < 1e-12);
        assert!((table[&v] - 0.5).abs() < 1e-12);
        assert_eq!(table.len(), 2);
    }

    #[test]
    fn probabilities_sum_to_one_any_efficiency() {
        let state = bell_plus("a", "b");
        for eta in [0.3, 0.7, 1.0] {
            let dets = vec![
                DetectorSpec::on_beam("Da", "a").with_efficiency(eta).unwrap(),
                DetectorSpec::on_beam("Db", "b").with_efficiency(eta).unwrap(),
            ];
            let table = pattern_probabilities(&state, &dets).unwrap();
            let total: f64 = table.values().sum();
            assert!((total - 1.0).abs() < 1e-9, "eta={} total={}", eta, total);
        }
    }

    #[test]
    fn threshold_and_pnr_agree_for_single_photons() {
        let state = bell_plus("a", "b");
        let thr = vec![DetectorSpec::on_beam("Da", "a"), DetectorSpec::on_beam("Db", "b")];
        let pnr: Vec<DetectorSpec> =
            thr.iter().map(|d| d.clone().number_resolving()).collect();
        let t1 = pattern_probabilities(&state, &thr).unwrap();
        let t2 = pattern_probabilities(&state, &pnr).unwrap();
        // Map number-resolved readings onto click/silent and compare.
        let mut folded: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
        for (pattern, p) in &t2 {
            let key: Vec<bool> = pattern.readings().map(|(_, r)| r.is_click()).collect();
            *folded.entry(key).or_insert(0.0) += p;
        }
        for (pattern, p) in &t1 {
            let key: Vec<bool> = pattern.readings().map(|(_, r)| r.is_click()).collect();
            assert!((folded[&key] - p).abs() < 1e-12);
        }
    }

    #[test]
    fn conditioning_on_impossible_pattern_fails() {
        let state = ket(&[("a", Pol::H)]);
        let dets = vec![DetectorSpec::on_beam("Da", "a"), DetectorSpec::on_beam("Db", "b")];
        let pattern = ClickPattern::of_clicks(&dets, &["Db"]).unwrap();
        let keep: BTreeSet<String> = BTreeSet::new();
        assert_eq!(
            condition(&state, &dets, &pattern, &keep).unwrap_err(),
            Error::ImpossibleOutcome
        );
    }

    #[test]
    fn fidelity_of_bell_states() {
        let plus = bell_plus("a", "b");
        let minus = bell_minus("a", "b");
        let e_plus = Ensemble::pure(plus.clone()).unwrap();
        assert!((fidelity(&e_plus, &plus) - 1.0).abs() < 1e-12);
        assert!(fidelity(&e_plus, &minus).abs() < 1e-12);
        let mixed = Ensemble::new(vec![(0.5, plus.clone()), (0.5, minus)]).unwrap();
        assert!((fidelity(&mixed, &plus) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible_and_totals_trials() {
        let state = bell_plus("a", "b");
        let dets = vec![
            DetectorSpec::polarized("DaH", "a", Pol::H),
            DetectorSpec::polarized("DaV", "a", Pol::V),
        ];
        let src = Ensemble::pure(state).unwrap();
        let t1 = sample(&src, &dets, 10_000, 7).unwrap();
        let t2 = sample(&src, &dets, 10_000, 7).unwrap();
        assert_eq!(t1, t2);
        assert!((t1.total_count() - 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn fair_binomial_within_five_sigma() {
        let state = bell_plus("a", "b");
        let dets = vec![
            DetectorSpec::polarized("DaH", "a", Pol::H),
            DetectorSpec::polarized("DaV", "a", Pol::V),
        ];
        let src = Ensemble::pure(state).unwrap();
        let trials = 100_000u64;
        let table = sample(&src, &dets, trials, 11).unwrap();
        let sigma = (trials as f64 * 0.25).sqrt();
        for (_, row) in table.rows() {
            assert!((row.count - 50_000.0).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn zero_trials_rejected() {
        let src = Ensemble::pure(FockState::vacuum()).unwrap();
        assert!(matches!(
            sample(&src, &[], 0, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn csv_has_canonical_rows() {
        let mut table = CountTable::new();
        let dets = vec![DetectorSpec::on_beam("Da", "a"), DetectorSpec::on_beam("Db", "b")];
        let p1 = ClickPattern::of_clicks(&dets, &["Da"]).unwrap();
        let p2 = ClickPattern::of_clicks(&dets, &["Db"]).unwrap();
        table.insert(p2, 3.0, 0.25);
        table.insert(p1, 5.0, 0.75);
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "pattern,count,probability");
        assert_eq!(lines[1], "Da,5,0.75");
        assert_eq!(lines[2], "Db,3,0.25");
    }
}
