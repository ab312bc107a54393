//! The concrete concentration and verification protocols: raw and SPDC
//! sources, the concentrator circuit, random-phase dephasing, and the
//! count-subtraction verification run.
//!
//! Beam naming follows the optical layout: sources feed beams 1..4, the
//! first beam-splitter layer produces 1p..4p, the corrective wave plates
//! relabel 1p and 4p to 1pp and 4pp, and the final splitters fan out into
//! x, y and w, z in front of the heralding detectors. Beams 2p and 3p carry
//! the concentrated pair.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detect::{
    click_probability, condition, ensemble_pattern_probabilities, fidelity, sample, ClickPattern,
    CountTable, DetectorSpec,
};
use crate::elements::{apply_circuit, apply_element, hwp, pbs, pol_phase_flip, Circuit, Step};
use crate::error::{Error, Result};
use crate::fock::{mode, Ensemble, FockState, Occupation, Pol};

/// The output beams that carry the concentrated pair.
pub const OUTPUT_BEAMS: [&str; 2] = ["2p", "3p"];

/// The four random phases used to dephase the SPDC input into a classical
/// mixture.
pub const DEPHASE_PHASES: [f64; 4] = [0.0, FRAC_PI_2, -FRAC_PI_2, PI];

/// Schmidt ratio and relative phase of one non-maximally entangled pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawStateParams {
    pub r: f64,
    pub phi: f64,
}

impl RawStateParams {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter("r must be > 0".into()));
        }
        if !r.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidParameter("r and phi must be finite".into()));
        }
        Ok(RawStateParams { r, phi })
    }
}

/// Which state feeds the verification set-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// The requested two-pair raw state.
    Raw1,
    /// Double emission into pair (1,2); beams 3,4 stay dark.
    U1,
    /// Double emission into pair (3,4); beams 1,2 stay dark.
    U2,
    /// SPDC input dephased into the classical 4:3:3 mixture.
    SpdcMixture,
    /// SPDC input without dephasing, for comparison.
    SpdcCoherent,
}

impl SourceKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "raw1" => Ok(SourceKind::Raw1),
            "u1" => Ok(SourceKind::U1),
            "u2" => Ok(SourceKind::U2),
            "spdc_mixture" => Ok(SourceKind::SpdcMixture),
            "spdc_coherent" => Ok(SourceKind::SpdcCoherent),
            other => Err(Error::InvalidParameter(format!("unknown source kind '{}'", other))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SourceKind::Raw1 => "raw1",
            SourceKind::U1 => "u1",
            SourceKind::U2 => "u2",
            SourceKind::SpdcMixture => "spdc_mixture",
            SourceKind::SpdcCoherent => "spdc_coherent",
        }
    }
}

/// The four polarization Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bell {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// A Bell state on the (H, V) modes of two beams.
pub fn bell(kind: Bell, a: &str, b: &str) -> FockState {
    let amp = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let (first, second, sign) = match kind {
        Bell::PhiPlus => ((Pol::H, Pol::H), (Pol::V, Pol::V), 1.0),
        Bell::PhiMinus => ((Pol::H, Pol::H), (Pol::V, Pol::V), -1.0),
        Bell::PsiPlus => ((Pol::H, Pol::V), (Pol::V, Pol::H), 1.0),
        Bell::PsiMinus => ((Pol::H, Pol::V), (Pol::V, Pol::H), -1.0),
    };
    FockState::from_terms(vec![
        (Occupation::photons(&[(a, first.0), (b, first.1)]), amp),
        (Occupation::photons(&[(a, second.0), (b, second.1)]), amp * sign),
    ])
    .expect("two orthogonal terms")
}

/// One non-maximally entangled pair `|HH> + r e^{i phi} |VV>` on two beams,
/// normalized.
pub fn pair_state(params: &RawStateParams, beam_a: &str, beam_b: &str) -> Result<FockState> {
    RawStateParams::new(params.r, params.phi)?;
    let rp = Complex64::from_polar(params.r, params.phi);
    FockState::from_terms(vec![
        (Occupation::photons(&[(beam_a, Pol::H), (beam_b, Pol::H)]), Complex64::new(1.0, 0.0)),
        (Occupation::photons(&[(beam_a, Pol::V), (beam_b, Pol::V)]), rp),
    ])?
    .normalized()
}

/// The two-pair raw state on beams 1..4, normalized.
pub fn raw_state(params: &RawStateParams) -> Result<FockState> {
    let first = pair_state(params, "1", "2")?;
    let second = pair_state(params, "3", "4")?;
    first.tensor(&second)?.normalized()
}

/// Double-pair emission `(a†_aH a†_bH + r e^{i phi} a†_aV a†_bV)^2 |0>` on one
/// beam pair, normalized numerically.
pub fn u_state(params: &RawStateParams, beam_a: &str, beam_b: &str) -> Result<FockState> {
    RawStateParams::new(params.r, params.phi)?;
    let rp = Complex64::from_polar(params.r, params.phi);
    let h = |b: &str| mode(b, Pol::H);
    let v = |b: &str| mode(b, Pol::V);
    FockState::from_creations(vec![
        (vec![h(beam_a), h(beam_b), h(beam_a), h(beam_b)], Complex64::new(1.0, 0.0)),
        (vec![h(beam_a), h(beam_b), v(beam_a), v(beam_b)], rp * 2.0),
        (vec![v(beam_a), v(beam_b), v(beam_a), v(beam_b)], rp * rp),
    ])?
    .normalized()
}

/// The SPDC four-photon input: raw, u1 and u2 components with squared
/// weights 0.4, 0.3 and 0.3.
pub fn spdc_input(params: &RawStateParams) -> Result<FockState> {
    let raw = raw_state(params)?.scaled(Complex64::new(0.4_f64.sqrt(), 0.0))?;
    let u1 = u_state(params, "1", "2")?.scaled(Complex64::new(0.3_f64.sqrt(), 0.0))?;
    let u2 = u_state(params, "3", "4")?.scaled(Complex64::new(0.3_f64.sqrt(), 0.0))?;
    raw.add(&u1)?.add(&u2)?.normalized()
}

/// Equal-weight mixture of the state with each listed phase applied to one
/// reference beam.
pub fn dephase(state: &FockState, reference_beam: &str, phases: &[f64]) -> Result<Ensemble> {
    if phases.is_empty() {
        return Err(Error::InvalidParameter("phase list must be non-empty".into()));
    }
    let members = phases
        .iter()
        .map(|&theta| {
            let shifted = apply_element(state, &crate::elements::phase_shifter(reference_beam, theta))?;
            Ok((1.0, shifted))
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(members)
}

/// The source ensemble a verification run draws from.
pub fn source_ensemble(
    kind: SourceKind,
    params: &RawStateParams,
    dephase_beam: &str,
) -> Result<Ensemble> {
    match kind {
        SourceKind::Raw1 => Ensemble::pure(raw_state(params)?),
        SourceKind::U1 => Ensemble::pure(u_state(params, "1", "2")?),
        SourceKind::U2 => Ensemble::pure(u_state(params, "3", "4")?),
        SourceKind::SpdcCoherent => Ensemble::pure(spdc_input(params)?),
        SourceKind::SpdcMixture => dephase(&spdc_input(params)?, dephase_beam, &DEPHASE_PHASES),
    }
}

/// The concentrator: polarization swap on beams 3,4, the first splitter
/// layer, corrective wave plates on the heralding arms, and the final
/// splitters fanning out into the detector beams.
pub fn fig1_circuit() -> Circuit {
    let registry = [
        "1", "2", "3", "4", "1p", "2p", "3p", "4p", "1pp", "4pp", "x", "y", "z", "w", "vac1",
        "vac2",
    ]
    .map(String::from);
    let steps = vec![
        Step::Element(hwp("3", FRAC_PI_2)),
        Step::Element(hwp("4", FRAC_PI_2)),
        Step::Element(pbs("1", "3", "1p", "3p").expect("distinct beams")),
        Step::Element(pbs("2", "4", "2p", "4p").expect("distinct beams")),
        Step::Element(hwp("1p", FRAC_PI_4)),
        Step::Element(hwp("4p", FRAC_PI_4)),
        Step::Relabel { from: "1p".into(), to: "1pp".into() },
        Step::Relabel { from: "4p".into(), to: "4pp".into() },
        Step::Element(pbs("1pp", "vac1", "x", "y").expect("distinct beams")),
        Step::Element(pbs("4pp", "vac2", "w", "z").expect("distinct beams")),
    ];
    Circuit::new(registry, steps).expect("fixed layout validates")
}

/// Whether the heralding side uses two or four detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorSet {
    Two,
    Four,
}

/// Heralding detectors for the concentrator.
pub fn fig1_detectors(set: DetectorSet, eta: f64) -> Result<Vec<DetectorSpec>> {
    let mut dets = vec![
        DetectorSpec::on_beam("Dx", "x").with_efficiency(eta)?,
        DetectorSpec::on_beam("Dw", "w").with_efficiency(eta)?,
    ];
    if set == DetectorSet::Four {
        dets.push(DetectorSpec::on_beam("Dy", "y").with_efficiency(eta)?);
        dets.push(DetectorSpec::on_beam("Dz", "z").with_efficiency(eta)?);
    }
    Ok(dets)
}

/// The verification set-up: the concentrator, optionally followed by pi/4
/// plates on the output beams before their polarization analysis.
pub fn fig2_circuit(hwp_inserted: bool) -> Circuit {
    let base = fig1_circuit();
    if !hwp_inserted {
        return base;
    }
    base.extended(vec![
        Step::Element(hwp("2p", FRAC_PI_4)),
        Step::Element(hwp("3p", FRAC_PI_4)),
    ])
    .expect("output beams stay live")
}

/// Detectors of the verification set-up: heralds on x and w plus
/// polarization-resolved detectors on the output beams.
pub fn fig2_detectors() -> Vec<DetectorSpec> {
    vec![
        DetectorSpec::on_beam("Dx", "x"),
        DetectorSpec::on_beam("Dw", "w"),
        DetectorSpec::polarized("D2H", "2p", Pol::H),
        DetectorSpec::polarized("D2V", "2p", Pol::V),
        DetectorSpec::polarized("D3H", "3p", Pol::H),
        DetectorSpec::polarized("D3V", "3p", Pol::V),
    ]
}

/// One heralding outcome of the concentrator.
#[derive(Debug, Clone)]
pub struct ConcentrationOutcome {
    pub pattern: ClickPattern,
    pub probability: f64,
    /// Conditional state of the output beams after the deterministic local
    /// correction for the Φ⁻ patterns.
    pub conditional: Ensemble,
    pub fidelity: f64,
}

/// Heralded outcomes, corrected fidelities and total success probability.
#[derive(Debug, Clone)]
pub struct ConcentrationResult {
    pub outcomes: Vec<ConcentrationOutcome>,
    pub success_probability: f64,
}

impl ConcentrationResult {
    /// Probability-weighted mean fidelity over the heralded outcomes.
    pub fn mean_fidelity(&self) -> f64 {
        if self.success_probability <= 0.0 {
            return 0.0;
        }
        let weighted: f64 = self.outcomes.iter().map(|o| o.probability * o.fidelity).sum();
        weighted / self.success_probability
    }
}

/// Runs the concentrator on a raw pair of pairs and reports every heralding
/// pattern, its conditional output state and the fidelity with Φ⁺.
pub fn concentrate(
    params: &RawStateParams,
    set: DetectorSet,
    eta: f64,
) -> Result<ConcentrationResult> {
    let state = raw_state(params)?;
    let out = apply_circuit(&state, &fig1_circuit())?;
    let detectors = fig1_detectors(set, eta)?;
    let keep: BTreeSet<String> = OUTPUT_BEAMS.iter().map(|s| s.to_string()).collect();
    let target = bell(Bell::PhiPlus, OUTPUT_BEAMS[0], OUTPUT_BEAMS[1]);

    let herald_sets: Vec<(Vec<&str>, bool)> = match set {
        DetectorSet::Two => vec![(vec!["Dx", "Dw"], false)],
        DetectorSet::Four => vec![
            (vec!["Dx", "Dw"], false),
            (vec!["Dy", "Dz"], false),
            // The cross coincidences herald Φ⁻ and need the local flip.
            (vec!["Dx", "Dz"], true),
            (vec!["Dy", "Dw"], true),
        ],
    };

    let mut outcomes = Vec::new();
    let mut success = 0.0;
    for (clicked, needs_flip) in herald_sets {
        let pattern = ClickPattern::of_clicks(&detectors, &clicked)?;
        let probability = click_probability(&out, &detectors, &pattern)?;
        let conditional = condition(&out, &detectors, &pattern, &keep)?;
        let conditional = if needs_flip {
            let flip = pol_phase_flip(OUTPUT_BEAMS[1]);
            let members = conditional
                .members()
                .iter()
                .map(|(w, s)| Ok((*w, apply_element(s, &flip)?)))
                .collect::<Result<Vec<_>>>()?;
            Ensemble::new(members)?
        } else {
            conditional
        };
        let fid = fidelity(&conditional, &target);
        success += probability;
        outcomes.push(ConcentrationOutcome { pattern, probability, conditional, fidelity: fid });
    }
    Ok(ConcentrationResult { outcomes, success_probability: success })
}

/// Exact expected counts or seeded Monte Carlo counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Exact,
    Sampled { seed: u64 },
}

/// The four heralded four-fold coincidence patterns of the verification
/// set-up, in the order (2H,3V), (2V,3H), (2H,3H), (2V,3V).
pub fn fig2_patterns(detectors: &[DetectorSpec]) -> Result<Vec<ClickPattern>> {
    Ok(vec![
        ClickPattern::of_clicks(detectors, &["Dx", "Dw", "D2H", "D3V"])?,
        ClickPattern::of_clicks(detectors, &["Dx", "Dw", "D2V", "D3H"])?,
        ClickPattern::of_clicks(detectors, &["Dx", "Dw", "D2H", "D3H"])?,
        ClickPattern::of_clicks(detectors, &["Dx", "Dw", "D2V", "D3V"])?,
    ])
}

fn apply_circuit_ensemble(source: &Ensemble, circuit: &Circuit) -> Result<Ensemble> {
    let members = source
        .members()
        .iter()
        .map(|(w, s)| Ok((*w, apply_circuit(s, circuit)?)))
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(members)
}

/// One verification run: evolves `trials` copies of the source through the
/// set-up and tabulates the four-fold coincidence counts.
pub fn fig2_run(
    kind: SourceKind,
    params: &RawStateParams,
    trials: u64,
    hwp_inserted: bool,
    dephase_beam: &str,
    mode: RunMode,
) -> Result<CountTable> {
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let source = source_ensemble(kind, params, dephase_beam)?;
    let evolved = apply_circuit_ensemble(&source, &fig2_circuit(hwp_inserted))?;
    let detectors = fig2_detectors();
    let patterns = fig2_patterns(&detectors)?;
    let exact = ensemble_pattern_probabilities(&evolved, &detectors)?;

    let mut table = CountTable::new();
    match mode {
        RunMode::Exact => {
            for pattern in &patterns {
                let p = exact.get(pattern).copied().unwrap_or(0.0);
                table.insert(pattern.clone(), trials as f64 * p, p);
            }
        }
        RunMode::Sampled { seed } => {
            let sampled = sample(&evolved, &detectors, trials, seed)?;
            for pattern in &patterns {
                let p = exact.get(pattern).copied().unwrap_or(0.0);
                table.insert(pattern.clone(), sampled.get(pattern).count, p);
            }
        }
    }
    Ok(table)
}

/// Count, exact probability and Poisson uncertainty for one pattern of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternStats {
    pub count: f64,
    pub prob: f64,
    pub sigma: f64,
}

/// Net count after calibration subtraction, with propagated uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetEntry {
    pub count: f64,
    pub sigma: f64,
}

/// Net tables for the bare run and the wave-plate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetReport {
    pub bare: BTreeMap<String, NetEntry>,
    pub hwp: BTreeMap<String, NetEntry>,
}

/// Full verification report: six runs, both net tables and the two
/// conclusion flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub trials_total: u64,
    pub mode: String,
    pub seed: Option<u64>,
    pub runs: BTreeMap<String, BTreeMap<String, PatternStats>>,
    pub net: NetReport,
    pub conclusion1: bool,
    pub conclusion2: bool,
    #[serde(rename = "N_expected")]
    pub n_expected: f64,
}

impl ProtocolReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

fn run_stats(table: &CountTable) -> BTreeMap<String, PatternStats> {
    table
        .rows()
        .map(|(pattern, row)| {
            (
                pattern.label(),
                PatternStats { count: row.count, prob: row.probability, sigma: row.count.max(0.0).sqrt() },
            )
        })
        .collect()
}

fn net_table(
    mixture: &BTreeMap<String, PatternStats>,
    u1: &BTreeMap<String, PatternStats>,
    u2: &BTreeMap<String, PatternStats>,
) -> BTreeMap<String, NetEntry> {
    mixture
        .iter()
        .map(|(label, m)| {
            let c1 = u1.get(label).map(|s| s.count).unwrap_or(0.0);
            let c2 = u2.get(label).map(|s| s.count).unwrap_or(0.0);
            let entry = NetEntry {
                count: m.count - c1 - c2,
                sigma: (m.count + c1 + c2).max(0.0).sqrt(),
            };
            (label.clone(), entry)
        })
        .collect()
}

/// Whether a net table is consistent with four-fold events only at the two
/// signal patterns: the others vanish and the signals stand out, both at five
/// Poisson sigma.
fn concentrated_on_signal(
    net: &BTreeMap<String, NetEntry>,
    signal: &[String],
    zero: &[String],
) -> bool {
    let band = |e: &NetEntry| 5.0 * e.sigma.max(1.0);
    zero.iter().all(|label| {
        net.get(label).map(|e| e.count.abs() <= band(e)).unwrap_or(true)
    }) && signal.iter().all(|label| {
        net.get(label).map(|e| e.count >= band(e)).unwrap_or(false)
    })
}

/// Runs the whole verification protocol: u1-only and u2-only calibration at
/// 0.3 x trials each, the dephased mixture at full trials, all with and
/// without the output wave plates, then subtracts the calibration counts.
pub fn fig2_protocol(
    trials_total: u64,
    params: &RawStateParams,
    dephase_beam: &str,
    mode: RunMode,
) -> Result<ProtocolReport> {
    if trials_total < 1000 {
        return Err(Error::InvalidParameter("trials must be >= 1000".into()));
    }
    let calib_trials = ((trials_total as f64) * 0.3).round() as u64;

    let mut runs: BTreeMap<String, BTreeMap<String, PatternStats>> = BTreeMap::new();
    let mut seed_offset = 0u64;
    let mut run = |kind: SourceKind, trials: u64, hwp: bool| -> Result<BTreeMap<String, PatternStats>> {
        let run_mode = match mode {
            RunMode::Exact => RunMode::Exact,
            RunMode::Sampled { seed } => RunMode::Sampled { seed: seed.wrapping_add(seed_offset) },
        };
        seed_offset += 1;
        let table = fig2_run(kind, params, trials, hwp, dephase_beam, run_mode)?;
        Ok(run_stats(&table))
    };

    for (suffix, hwp) in [("bare", false), ("hwp", true)] {
        for (kind, trials) in [
            (SourceKind::U1, calib_trials),
            (SourceKind::U2, calib_trials),
            (SourceKind::SpdcMixture, trials_total),
        ] {
            let name = format!("{}_{}", kind.name(), suffix);
            let stats = run(kind, trials, hwp)?;
            runs.insert(name, stats);
        }
    }

    let net = NetReport {
        bare: net_table(&runs["spdc_mixture_bare"], &runs["u1_bare"], &runs["u2_bare"]),
        hwp: net_table(&runs["spdc_mixture_hwp"], &runs["u1_hwp"], &runs["u2_hwp"]),
    };

    let detectors = fig2_detectors();
    let patterns = fig2_patterns(&detectors)?;
    let labels: Vec<String> = patterns.iter().map(|p| p.label()).collect();
    let zero = [labels[0].clone(), labels[1].clone()];
    let signal = [labels[2].clone(), labels[3].clone()];

    let conclusion1 = concentrated_on_signal(&net.bare, &signal, &zero);
    let conclusion2 = concentrated_on_signal(&net.hwp, &signal, &zero);

    // Expected net signal count: the raw-state fraction of the mixture times
    // its per-pattern coincidence probability. At r = 1 this is trials / 40.
    let raw_run = fig2_run(SourceKind::Raw1, params, trials_total, false, dephase_beam, RunMode::Exact)?;
    let raw_signal_prob = raw_run.get(&patterns[2]).probability;
    let n_expected = 0.4 * trials_total as f64 * raw_signal_prob;

    Ok(ProtocolReport {
        trials_total,
        mode: match mode {
            RunMode::Exact => "exact".to_string(),
            RunMode::Sampled { .. } => "sampled".to_string(),
        },
        seed: match mode {
            RunMode::Exact => None,
            RunMode::Sampled { seed } => Some(seed),
        },
        runs,
        net,
        conclusion1,
        conclusion2,
        n_expected,
    })
}
