//! A small line-oriented circuit description language.
//!
//! Statements, one per line, `#` starts a comment:
//!
//! ```text
//! beam <label>
//! source <kind> [r=<num>] [phi=<num>]
//! pbs in=(<beam>,<beam>) out=(<beam>,<beam>)
//! hwp beam=<beam> angle=<expr>
//! phase beam=<beam> theta=<expr>
//! relabel <beam> -> <beam>
//! detector <id> beam=<beam> [pol=H|V|any] [resolution=threshold|pnr] [eta=<num>]
//! option <key>=<value>
//! ```
//!
//! Angle expressions admit `pi`, `pi/2`, `pi/4`, `-pi/2`, decimal literals
//! and `a*pi/b`. Parsing is total: malformed input yields a diagnostic with
//! line and column, never a panic. Files use the `.pcl` extension, UTF-8 and
//! LF line endings.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::detect::{DetectorSpec, Resolution};
use crate::elements::{hwp, pbs, phase_shifter, Circuit, Step};
use crate::error::Result as CoreResult;
use crate::fock::Pol;
use crate::schemes::SourceKind;

/// A diagnostic with the line and column it points at.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at line {line}, column {column}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError { line, column, message: message.into() }
    }
}

type ParseResult<T> = std::result::Result<T, ParseError>;

/// Which polarizations a declared detector watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolSelect {
    H,
    V,
    Any,
}

/// A parsed element or relabel statement.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementStmt {
    Pbs { in_a: String, in_b: String, out_a: String, out_b: String },
    Hwp { beam: String, angle: f64 },
    Phase { beam: String, theta: f64 },
    Relabel { from: String, to: String },
}

/// A parsed detector declaration.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorStmt {
    pub id: String,
    pub beam: String,
    pub pol: PolSelect,
    pub resolution: Resolution,
    pub eta: Option<f64>,
}

/// A parsed source declaration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceStmt {
    pub kind: SourceKind,
    pub r: Option<f64>,
    pub phi: Option<f64>,
}

/// Free-standing options carried by a circuit file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Options {
    pub hwp_inserted: bool,
    pub eta: Option<f64>,
    pub phases: Vec<f64>,
    pub dephase_beam: Option<String>,
}

/// A validated circuit description.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircuitSpec {
    pub beams: BTreeSet<String>,
    pub elements: Vec<ElementStmt>,
    pub detectors: Vec<DetectorStmt>,
    pub source: Option<SourceStmt>,
    pub options: Options,
}

/// Parses a circuit description, validating beam declarations, liveness and
/// detector disjointness.
pub fn parse(text: &str) -> ParseResult<CircuitSpec> {
    let mut spec = CircuitSpec::default();
    // Beams renamed away; may not be referenced afterwards.
    let mut relabeled: BTreeSet<String> = BTreeSet::new();
    let mut detector_ids: BTreeSet<String> = BTreeSet::new();
    let mut detector_modes: BTreeSet<(String, Pol)> = BTreeSet::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let tokens = tokenize(line, lineno)?;
        let keyword = &tokens[0];
        match keyword.text.as_str() {
            "beam" => {
                let label = expect_word(&tokens, 1, "beam label")?;
                if !spec.beams.insert(label.text.clone()) {
                    return Err(ParseError::new(
                        lineno,
                        label.column,
                        format!("duplicate beam declaration '{}'", label.text),
                    ));
                }
                expect_end(&tokens, 2)?;
            }
            "source" => {
                if spec.source.is_some() {
                    return Err(ParseError::new(lineno, keyword.column, "duplicate source statement"));
                }
                let kind_tok = expect_word(&tokens, 1, "source kind")?;
                let kind = SourceKind::parse(&kind_tok.text).map_err(|_| {
                    ParseError::new(
                        lineno,
                        kind_tok.column,
                        format!("unknown source kind '{}'", kind_tok.text),
                    )
                })?;
                let mut source = SourceStmt { kind, r: None, phi: None };
                for tok in &tokens[2..] {
                    let (key, value) = split_kv(tok, lineno)?;
                    match key.as_str() {
                        "r" => source.r = Some(parse_number(&value, lineno, tok.column)?),
                        "phi" => source.phi = Some(parse_expr(&value, lineno, tok.column)?),
                        other => {
                            return Err(ParseError::new(
                                lineno,
                                tok.column,
                                format!("unknown source parameter '{}'", other),
                            ))
                        }
                    }
                }
                spec.source = Some(source);
            }
            "pbs" => {
                let in_pair = expect_kv(&tokens, 1, "in", lineno)?;
                let (in_a, in_b) = parse_beam_pair(&in_pair, lineno)?;
                let out_pair = expect_kv(&tokens, 2, "out", lineno)?;
                let (out_a, out_b) = parse_beam_pair(&out_pair, lineno)?;
                expect_end(&tokens, 3)?;
                for b in [&in_a, &in_b] {
                    check_live_beam(&spec.beams, &relabeled, b, lineno, tokens[1].column)?;
                }
                for b in [&out_a, &out_b] {
                    check_declared_beam(&spec.beams, b, lineno, tokens[2].column)?;
                }
                let labels = [&in_a.text, &in_b.text, &out_a.text, &out_b.text];
                for (i, a) in labels.iter().enumerate() {
                    for b in labels.iter().skip(i + 1) {
                        if a == b {
                            return Err(ParseError::new(
                                lineno,
                                tokens[1].column,
                                format!("pbs beams must be distinct, '{}' repeats", a),
                            ));
                        }
                    }
                }
                spec.elements.push(ElementStmt::Pbs {
                    in_a: in_a.text,
                    in_b: in_b.text,
                    out_a: out_a.text,
                    out_b: out_b.text,
                });
            }
            "hwp" | "phase" => {
                let beam_kv = expect_kv(&tokens, 1, "beam", lineno)?;
                check_live_beam(&spec.beams, &relabeled, &beam_kv, lineno, tokens[1].column)?;
                let angle_key = if keyword.text == "hwp" { "angle" } else { "theta" };
                let angle_kv = expect_kv(&tokens, 2, angle_key, lineno)?;
                let angle = parse_expr(&angle_kv.text, lineno, tokens[2].column)?;
                expect_end(&tokens, 3)?;
                if keyword.text == "hwp" {
                    spec.elements.push(ElementStmt::Hwp { beam: beam_kv.text, angle });
                } else {
                    spec.elements.push(ElementStmt::Phase { beam: beam_kv.text, theta: angle });
                }
            }
            "relabel" => {
                let from = expect_word(&tokens, 1, "beam label")?;
                let arrow = expect_word(&tokens, 2, "'->'")?;
                if arrow.text != "->" {
                    return Err(ParseError::new(lineno, arrow.column, "expected '->'"));
                }
                let to = expect_word(&tokens, 3, "beam label")?;
                expect_end(&tokens, 4)?;
                check_live_beam(&spec.beams, &relabeled, from, lineno, from.column)?;
                check_declared_beam(&spec.beams, to, lineno, to.column)?;
                relabeled.insert(from.text.clone());
                spec.elements.push(ElementStmt::Relabel { from: from.text.clone(), to: to.text.clone() });
            }
            "detector" => {
                let id = expect_word(&tokens, 1, "detector id")?;
                if !detector_ids.insert(id.text.clone()) {
                    return Err(ParseError::new(
                        lineno,
                        id.column,
                        format!("duplicate detector id '{}'", id.text),
                    ));
                }
                let mut beam: Option<Token> = None;
                let mut pol = PolSelect::Any;
                let mut resolution = Resolution::Threshold;
                let mut eta = None;
                for tok in &tokens[2..] {
                    let (key, value) = split_kv(tok, lineno)?;
                    match key.as_str() {
                        "beam" => beam = Some(Token { text: value, column: tok.column }),
                        "pol" => {
                            pol = match value.as_str() {
                                "H" => PolSelect::H,
                                "V" => PolSelect::V,
                                "any" => PolSelect::Any,
                                other => {
                                    return Err(ParseError::new(
                                        lineno,
                                        tok.column,
                                        format!("polarization must be H, V or any, got '{}'", other),
                                    ))
                                }
                            }
                        }
                        "resolution" => {
                            resolution = match value.as_str() {
                                "threshold" => Resolution::Threshold,
                                "pnr" => Resolution::NumberResolving,
                                other => {
                                    return Err(ParseError::new(
                                        lineno,
                                        tok.column,
                                        format!(
                                            "resolution must be threshold or pnr, got '{}'",
                                            other
                                        ),
                                    ))
                                }
                            }
                        }
                        "eta" => eta = Some(parse_number(&value, lineno, tok.column)?),
                        other => {
                            return Err(ParseError::new(
                                lineno,
                                tok.column,
                                format!("unknown detector parameter '{}'", other),
                            ))
                        }
                    }
                }
                let beam = beam.ok_or_else(|| {
                    ParseError::new(lineno, keyword.column, "detector needs beam=<label>")
                })?;
                check_declared_beam(&spec.beams, &beam, lineno, beam.column)?;
                let watched: Vec<Pol> = match pol {
                    PolSelect::H => vec![Pol::H],
                    PolSelect::V => vec![Pol::V],
                    PolSelect::Any => vec![Pol::H, Pol::V],
                };
                for p in &watched {
                    if !detector_modes.insert((beam.text.clone(), *p)) {
                        return Err(ParseError::new(
                            lineno,
                            beam.column,
                            format!("detectors overlap on beam '{}'", beam.text),
                        ));
                    }
                }
                spec.detectors.push(DetectorStmt {
                    id: id.text.clone(),
                    beam: beam.text,
                    pol,
                    resolution,
                    eta,
                });
            }
            "option" => {
                let kv = tokens.get(1).ok_or_else(|| {
                    ParseError::new(lineno, keyword.column, "option needs <key>=<value>")
                })?;
                let (key, value) = split_kv(kv, lineno)?;
                expect_end(&tokens, 2)?;
                match key.as_str() {
                    "hwp_inserted" => {
                        spec.options.hwp_inserted = match value.as_str() {
                            "true" => true,
                            "false" => false,
                            other => {
                                return Err(ParseError::new(
                                    lineno,
                                    kv.column,
                                    format!("hwp_inserted must be true or false, got '{}'", other),
                                ))
                            }
                        }
                    }
                    "eta" => spec.options.eta = Some(parse_number(&value, lineno, kv.column)?),
                    "phases" => {
                        let mut phases = Vec::new();
                        for part in value.split(',') {
                            phases.push(parse_expr(part, lineno, kv.column)?);
                        }
                        spec.options.phases = phases;
                    }
                    "dephase_beam" => spec.options.dephase_beam = Some(value),
                    other => {
                        return Err(ParseError::new(
                            lineno,
                            kv.column,
                            format!("unknown option '{}'", other),
                        ))
                    }
                }
            }
            other => {
                return Err(ParseError::new(
                    lineno,
                    keyword.column,
                    format!("unknown keyword '{}'", other),
                ))
            }
        }
    }
    Ok(spec)
}

/// Canonical text form: beams first in sorted order, then the source,
/// elements in sequence, detectors and options. `parse(serialize(s)) == s`.
pub fn serialize(spec: &CircuitSpec) -> String {
    let mut out = String::from("# photonlace circuit\n");
    for beam in &spec.beams {
        out.push_str(&format!("beam {}\n", beam));
    }
    if let Some(source) = &spec.source {
        out.push_str(&format!("source {}", source.kind.name()));
        if let Some(r) = source.r {
            out.push_str(&format!(" r={}", format_number(r)));
        }
        if let Some(phi) = source.phi {
            out.push_str(&format!(" phi={}", format_expr(phi)));
        }
        out.push('\n');
    }
    for el in &spec.elements {
        match el {
            ElementStmt::Pbs { in_a, in_b, out_a, out_b } => {
                out.push_str(&format!("pbs in=({},{}) out=({},{})\n", in_a, in_b, out_a, out_b));
            }
            ElementStmt::Hwp { beam, angle } => {
                out.push_str(&format!("hwp beam={} angle={}\n", beam, format_expr(*angle)));
            }
            ElementStmt::Phase { beam, theta } => {
                out.push_str(&format!("phase beam={} theta={}\n", beam, format_expr(*theta)));
            }
            ElementStmt::Relabel { from, to } => {
                out.push_str(&format!("relabel {} -> {}\n", from, to));
            }
        }
    }
    for det in &spec.detectors {
        out.push_str(&format!("detector {} beam={}", det.id, det.beam));
        match det.pol {
            PolSelect::H => out.push_str(" pol=H"),
            PolSelect::V => out.push_str(" pol=V"),
            PolSelect::Any => {}
        }
        if det.resolution == Resolution::NumberResolving {
            out.push_str(" resolution=pnr");
        }
        if let Some(eta) = det.eta {
            out.push_str(&format!(" eta={}", format_number(eta)));
        }
        out.push('\n');
    }
    if spec.options.hwp_inserted {
        out.push_str("option hwp_inserted=true\n");
    }
    if let Some(eta) = spec.options.eta {
        out.push_str(&format!("option eta={}\n", format_number(eta)));
    }
    if !spec.options.phases.is_empty() {
        let parts: Vec<String> = spec.options.phases.iter().map(|&p| format_expr(p)).collect();
        out.push_str(&format!("option phases={}\n", parts.join(",")));
    }
    if let Some(beam) = &spec.options.dephase_beam {
        out.push_str(&format!("option dephase_beam={}\n", beam));
    }
    out
}

/// Everything a lowered circuit file provides to the harness.
#[derive(Debug, Clone)]
pub struct Lowered {
    pub circuit: Circuit,
    pub detectors: Vec<DetectorSpec>,
    pub source: Option<SourceStmt>,
    pub options: Options,
}

/// Lowers a parsed spec to circuit, detectors and options.
///
/// A file-level `option eta=` sets the efficiency of detectors without their
/// own `eta=`.
pub fn to_circuit(spec: &CircuitSpec) -> CoreResult<Lowered> {
    let mut steps = Vec::with_capacity(spec.elements.len());
    for el in &spec.elements {
        let step = match el {
            ElementStmt::Pbs { in_a, in_b, out_a, out_b } => {
                Step::Element(pbs(in_a, in_b, out_a, out_b)?)
            }
            ElementStmt::Hwp { beam, angle } => Step::Element(hwp(beam, *angle)),
            ElementStmt::Phase { beam, theta } => Step::Element(phase_shifter(beam, *theta)),
            ElementStmt::Relabel { from, to } => Step::Relabel { from: from.clone(), to: to.clone() },
        };
        steps.push(step);
    }
    let circuit = Circuit::new(spec.beams.iter().cloned(), steps)?;
    let default_eta = spec.options.eta.unwrap_or(1.0);
    let mut detectors = Vec::with_capacity(spec.detectors.len());
    for det in &spec.detectors {
        let mut d = match det.pol {
            PolSelect::H => DetectorSpec::polarized(&det.id, &det.beam, Pol::H),
            PolSelect::V => DetectorSpec::polarized(&det.id, &det.beam, Pol::V),
            PolSelect::Any => DetectorSpec::on_beam(&det.id, &det.beam),
        };
        if det.resolution == Resolution::NumberResolving {
            d = d.number_resolving();
        }
        d = d.with_efficiency(det.eta.unwrap_or(default_eta))?;
        detectors.push(d);
    }
    Ok(Lowered { circuit, detectors, source: spec.source, options: spec.options.clone() })
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    text: String,
    column: usize,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.text)
    }
}

impl std::ops::Deref for Token {
    type Target = str;
    fn deref(&self) -> &str {
        &self.text
    }
}

fn tokenize(line: &str, lineno: usize) -> ParseResult<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0usize;
    for (i, ch) in line.chars().enumerate() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(Token { text: std::mem::take(&mut current), column: start + 1 });
            }
        } else {
            if current.is_empty() {
                start = i;
            }
            if ch.is_control() {
                return Err(ParseError::new(lineno, i + 1, "control character in statement"));
            }
            current.push(ch);
        }
    }
    if !current.is_empty() {
        tokens.push(Token { text: current, column: start + 1 });
    }
    if tokens.is_empty() {
        return Err(ParseError::new(lineno, 1, "empty statement"));
    }
    Ok(tokens)
}

fn expect_word<'a>(tokens: &'a [Token], idx: usize, what: &str) -> ParseResult<&'a Token> {
    tokens.get(idx).ok_or_else(|| {
        let last = tokens.last().expect("keyword token");
        ParseError::new(0, last.column + last.text.len(), format!("expected {}", what))
    })
}

fn expect_end(tokens: &[Token], len: usize) -> ParseResult<()> {
    if tokens.len() > len {
        let extra = &tokens[len];
        return Err(ParseError::new(
            0,
            extra.column,
            format!("unexpected trailing token '{}'", extra.text),
        ));
    }
    Ok(())
}

fn split_kv(tok: &Token, lineno: usize) -> ParseResult<(String, String)> {
    match tok.text.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(ParseError::new(
            lineno,
            tok.column,
            format!("expected <key>=<value>, got '{}'", tok.text),
        )),
    }
}

fn expect_kv(tokens: &[Token], idx: usize, key: &str, lineno: usize) -> ParseResult<Token> {
    let tok = tokens.get(idx).ok_or_else(|| {
        let last = tokens.last().expect("keyword token");
        ParseError::new(lineno, last.column + last.text.len(), format!("expected {}=...", key))
    })?;
    let (k, v) = split_kv(tok, lineno)?;
    if k != key {
        return Err(ParseError::new(
            lineno,
            tok.column,
            format!("expected '{}=', got '{}='", key, k),
        ));
    }
    Ok(Token { text: v, column: tok.column + key.len() + 1 })
}

fn parse_beam_pair(tok: &Token, lineno: usize) -> ParseResult<(Token, Token)> {
    let inner = tok
        .text
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| {
            ParseError::new(lineno, tok.column, format!("expected (beam,beam), got '{}'", tok.text))
        })?;
    let mut parts = inner.splitn(2, ',');
    let a = parts.next().unwrap_or("").trim();
    let b = parts.next().unwrap_or("").trim();
    if a.is_empty() || b.is_empty() {
        return Err(ParseError::new(
            lineno,
            tok.column,
            format!("expected (beam,beam), got '{}'", tok.text),
        ));
    }
    Ok((
        Token { text: a.to_string(), column: tok.column + 1 },
        Token { text: b.to_string(), column: tok.column + 2 + a.len() },
    ))
}

fn check_declared_beam(
    beams: &BTreeSet<String>,
    tok: &Token,
    lineno: usize,
    column: usize,
) -> ParseResult<()> {
    if !beams.contains(&tok.text) {
        return Err(ParseError::new(
            lineno,
            column.max(tok.column),
            format!("undeclared beam '{}'", tok.text),
        ));
    }
    Ok(())
}

fn check_live_beam(
    beams: &BTreeSet<String>,
    relabeled: &BTreeSet<String>,
    tok: &Token,
    lineno: usize,
    column: usize,
) -> ParseResult<()> {
    check_declared_beam(beams, tok, lineno, column)?;
    if relabeled.contains(&tok.text) {
        return Err(ParseError::new(
            lineno,
            column.max(tok.column),
            format!("beam '{}' was relabeled away", tok.text),
        ));
    }
    Ok(())
}

fn parse_number(text: &str, lineno: usize, column: usize) -> ParseResult<f64> {
    text.parse::<f64>().map_err(|_| {
        ParseError::new(lineno, column, format!("expected a number, got '{}'", text))
    })
}

/// Parses a standalone angle expression (`pi/4`, `-pi/2`, `0.3`, `3*pi/8`).
pub fn parse_angle(text: &str) -> ParseResult<f64> {
    parse_expr(text, 1, 1)
}

/// Angle expressions: `pi`, `pi/2`, `-pi/4`, `3*pi/8`, plain decimals.
fn parse_expr(text: &str, lineno: usize, column: usize) -> ParseResult<f64> {
    let bad = |msg: String| ParseError::new(lineno, column, msg);
    let t = text.trim();
    if t.is_empty() {
        return Err(bad("empty angle expression".into()));
    }
    if !t.contains("pi") {
        return t
            .parse::<f64>()
            .map_err(|_| bad(format!("expected an angle expression, got '{}'", t)));
    }
    let (sign, rest) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t),
    };
    let (num_str, den_str) = match rest.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (rest, None),
    };
    let numerator = if num_str == "pi" {
        PI
    } else if let Some(factor) = num_str.strip_suffix("*pi") {
        factor
            .parse::<f64>()
            .map_err(|_| bad(format!("bad pi multiple '{}'", num_str)))?
            * PI
    } else {
        return Err(bad(format!("expected an angle expression, got '{}'", t)));
    };
    let denominator = match den_str {
        Some(d) => d
            .parse::<f64>()
            .map_err(|_| bad(format!("bad denominator '{}'", d)))?,
        None => 1.0,
    };
    if denominator == 0.0 {
        return Err(bad("zero denominator".into()));
    }
    Ok(sign * numerator / denominator)
}

fn format_number(v: f64) -> String {
    format!("{}", v)
}

/// Prints an angle as the shortest exact pi expression, falling back to the
/// decimal form.
fn format_expr(v: f64) -> String {
    for b in 1..=12u32 {
        let scaled = v * b as f64 / PI;
        let a = scaled.round();
        if a != 0.0 && (a * PI) / b as f64 == v {
            let a = a as i64;
            return match (a, b) {
                (1, 1) => "pi".to_string(),
                (-1, 1) => "-pi".to_string(),
                (1, _) => format!("pi/{}", b),
                (-1, _) => format!("-pi/{}", b),
                (_, 1) => format!("{}*pi/1", a),
                _ => format!("{}*pi/{}", a, b),
            };
        }
    }
    format_number(v)
}
