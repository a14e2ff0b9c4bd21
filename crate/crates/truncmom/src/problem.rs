//! The line-oriented text format for problem and measure documents.
//!
//! A problem document:
//!
//! ```text
//! # anything after '#' is a comment
//! dimension 2
//! truncation triangular 2
//! moment 0 0 9
//! moment 1 0 -1
//! ...
//! ```
//!
//! The truncation line is one of `triangular <r>`, `rectangular <d_1> ...
//! <d_n>`, or `explicit` followed by `element <k_1> ... <k_n>` lines giving
//! the indexation in order. Moment records list the exponent vector followed
//! by a decimal value and must cover `K + K` exactly.
//!
//! A measure document:
//!
//! ```text
//! dimension 2
//! atom -1 0 1
//! atom 0 1 2.5
//! ```
//!
//! with each atom line holding the coordinates and then the mass.

use std::collections::HashMap;
use std::fmt;

use crate::error::Result;
use crate::moments::{AtomicMeasure, MomentSequence};
use crate::multiindex::{AdmissibleSet, MultiIndex};

/// Hard limits keeping adversarial documents from exhausting memory. The
/// solver is desk scale; these are far above anything it can usefully chew.
const MAX_DIMENSION: usize = 8;
const MAX_EXPONENT: u32 = 1000;
const MAX_TRIANGULAR_DEGREE: u32 = 50;
const MAX_RECT_SIDE: u32 = 50;
const MAX_ELEMENTS: usize = 2_000;
const MAX_MOMENT_RECORDS: usize = 600_000;
const MAX_ATOMS: usize = 5_000;

/// A syntactic error with the 1-based line it occurred on.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> std::result::Result<T, ParseError> {
    Err(ParseError { line, message: message.into() })
}

/// How the index set is specified in a problem document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Truncation {
    Triangular(u32),
    Rectangular(Vec<u32>),
    Explicit(Vec<MultiIndex>),
}

/// A parsed problem document; syntactically valid but not yet checked against
/// the admissibility and domain-coverage rules.
#[derive(Debug, Clone)]
pub struct ProblemDocument {
    pub dimension: usize,
    pub truncation: Truncation,
    pub moments: Vec<(MultiIndex, f64)>,
}

impl ProblemDocument {
    /// Builds the admissible set described by the truncation.
    pub fn build_set(&self) -> Result<AdmissibleSet> {
        match &self.truncation {
            Truncation::Triangular(r) => Ok(AdmissibleSet::triangular(self.dimension, *r)),
            Truncation::Rectangular(sides) => Ok(AdmissibleSet::rectangular(sides)),
            Truncation::Explicit(elements) => {
                AdmissibleSet::from_elements(self.dimension, elements.clone())
            }
        }
    }

    /// Validates the truncation and the moment table, producing the sequence.
    pub fn to_sequence(&self) -> Result<MomentSequence> {
        let set = self.build_set()?;
        let mut values: HashMap<MultiIndex, f64> = HashMap::with_capacity(self.moments.len());
        for (k, v) in &self.moments {
            values.insert(k.clone(), *v);
        }
        MomentSequence::new(set, values)
    }
}

/// Parses a problem document. Never panics on malformed input.
pub fn parse_problem(text: &str) -> std::result::Result<ProblemDocument, ParseError> {
    let mut dimension: Option<usize> = None;
    let mut truncation: Option<Truncation> = None;
    let mut explicit_pending = false;
    let mut elements: Vec<MultiIndex> = Vec::new();
    let mut moments: Vec<(MultiIndex, f64)> = Vec::new();
    let mut seen: HashMap<MultiIndex, usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        let mut fields = line.split_whitespace();
        let Some(keyword) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        match keyword {
            "dimension" => {
                if dimension.is_some() {
                    return err(lineno, "duplicate dimension line");
                }
                let [value] = rest.as_slice() else {
                    return err(lineno, "expected: dimension <n>");
                };
                let n: usize = value
                    .parse()
                    .map_err(|_| ParseError { line: lineno, message: format!("bad dimension '{value}'") })?;
                if n == 0 || n > MAX_DIMENSION {
                    return err(lineno, format!("dimension must be between 1 and {MAX_DIMENSION}"));
                }
                dimension = Some(n);
            }
            "truncation" => {
                if truncation.is_some() {
                    return err(lineno, "duplicate truncation line");
                }
                let Some(dim) = dimension else {
                    return err(lineno, "dimension must come before truncation");
                };
                match rest.split_first() {
                    Some((&"triangular", args)) => {
                        let [value] = args else {
                            return err(lineno, "expected: truncation triangular <r>");
                        };
                        let r: u32 = value.parse().map_err(|_| ParseError {
                            line: lineno,
                            message: format!("bad degree '{value}'"),
                        })?;
                        if r > MAX_TRIANGULAR_DEGREE {
                            return err(lineno, format!("degree above limit {MAX_TRIANGULAR_DEGREE}"));
                        }
                        if count_triangular(dim, r) > MAX_ELEMENTS {
                            return err(lineno, "truncation too large");
                        }
                        truncation = Some(Truncation::Triangular(r));
                    }
                    Some((&"rectangular", args)) => {
                        if args.len() != dim {
                            return err(lineno, format!("expected {dim} side lengths"));
                        }
                        let mut sides = Vec::with_capacity(dim);
                        let mut count = 1usize;
                        for a in args {
                            let d: u32 = a.parse().map_err(|_| ParseError {
                                line: lineno,
                                message: format!("bad side length '{a}'"),
                            })?;
                            if d > MAX_RECT_SIDE {
                                return err(lineno, format!("side length above limit {MAX_RECT_SIDE}"));
                            }
                            count = count.saturating_mul(d as usize + 1);
                            sides.push(d);
                        }
                        if count > MAX_ELEMENTS {
                            return err(lineno, "truncation too large");
                        }
                        truncation = Some(Truncation::Rectangular(sides));
                    }
                    Some((&"explicit", [])) => {
                        explicit_pending = true;
                        truncation = Some(Truncation::Explicit(Vec::new()));
                    }
                    _ => return err(lineno, "expected: truncation triangular|rectangular|explicit ..."),
                }
            }
            "element" => {
                if !explicit_pending {
                    return err(lineno, "element lines require 'truncation explicit'");
                }
                let dim = dimension.expect("explicit requires dimension");
                let k = parse_exponents(lineno, &rest, dim)?;
                if elements.len() >= MAX_ELEMENTS {
                    return err(lineno, "too many elements");
                }
                elements.push(k);
            }
            "moment" => {
                let Some(dim) = dimension else {
                    return err(lineno, "dimension must come before moments");
                };
                if rest.len() != dim + 1 {
                    return err(lineno, format!("expected {dim} exponents and a value"));
                }
                let k = parse_exponents(lineno, &rest[..dim], dim)?;
                let value: f64 = rest[dim].parse().map_err(|_| ParseError {
                    line: lineno,
                    message: format!("bad moment value '{}'", rest[dim]),
                })?;
                if !value.is_finite() {
                    return err(lineno, format!("moment {k} is not finite"));
                }
                if let Some(prev) = seen.insert(k.clone(), lineno) {
                    return err(lineno, format!("duplicate moment {k} (first given on line {prev})"));
                }
                if moments.len() >= MAX_MOMENT_RECORDS {
                    return err(lineno, "too many moment records");
                }
                moments.push((k, value));
            }
            other => return err(lineno, format!("unknown keyword '{other}'")),
        }
    }

    let Some(dimension) = dimension else {
        return err(text.lines().count().max(1), "missing dimension line");
    };
    let Some(mut truncation) = truncation else {
        return err(text.lines().count().max(1), "missing truncation line");
    };
    if let Truncation::Explicit(ref mut e) = truncation {
        if elements.is_empty() {
            return err(text.lines().count().max(1), "explicit truncation lists no elements");
        }
        *e = elements;
    }
    Ok(ProblemDocument { dimension, truncation, moments })
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_exponents(
    lineno: usize,
    fields: &[&str],
    dim: usize,
) -> std::result::Result<MultiIndex, ParseError> {
    if fields.len() != dim {
        return err(lineno, format!("expected {dim} exponents, got {}", fields.len()));
    }
    let mut coords = Vec::with_capacity(dim);
    for f in fields {
        let e: u32 = f
            .parse()
            .map_err(|_| ParseError { line: lineno, message: format!("bad exponent '{f}'") })?;
        if e > MAX_EXPONENT {
            return err(lineno, format!("exponent above limit {MAX_EXPONENT}"));
        }
        coords.push(e);
    }
    Ok(MultiIndex::new(coords))
}

fn count_triangular(dim: usize, r: u32) -> usize {
    // binomial(r + dim, dim), saturating
    let mut count: usize = 1;
    for i in 1..=dim {
        count = count.saturating_mul(r as usize + i) / i;
    }
    count
}

/// Serializes a moment sequence as a problem document. Triangular and
/// rectangular sets are written in shorthand; anything else lists its
/// elements explicitly in indexation order.
pub fn write_problem(s: &MomentSequence) -> String {
    let set = s.set();
    let mut out = String::new();
    out.push_str(&format!("dimension {}\n", set.dim()));
    let r = set.max_degree();
    if set.is_triangular() {
        out.push_str(&format!("truncation triangular {r}\n"));
    } else if let Some(sides) = rectangular_sides(set) {
        out.push_str("truncation rectangular");
        for d in sides {
            out.push_str(&format!(" {d}"));
        }
        out.push('\n');
    } else {
        out.push_str("truncation explicit\n");
        for k in set.elements() {
            out.push_str("element");
            for c in k.coords() {
                out.push_str(&format!(" {c}"));
            }
            out.push('\n');
        }
    }
    for k in set.minkowski_double() {
        out.push_str("moment");
        for c in k.coords() {
            out.push_str(&format!(" {c}"));
        }
        out.push(' ');
        out.push_str(&format_significant(s.value(&k)));
        out.push('\n');
    }
    out
}

/// Detects whether the set is exactly a rectangular truncation, returning
/// the side lengths.
pub fn rectangular_sides(set: &AdmissibleSet) -> Option<Vec<u32>> {
    let sides: Vec<u32> = (0..set.dim())
        .map(|i| set.elements().iter().map(|k| k.coords()[i]).max().unwrap_or(0))
        .collect();
    let rect = AdmissibleSet::rectangular(&sides);
    if rect.len() == set.len() && rect.elements().iter().all(|k| set.contains(k)) {
        Some(sides)
    } else {
        None
    }
}

/// Parses a measure document. Never panics on malformed input.
pub fn parse_measure(text: &str) -> std::result::Result<AtomicMeasure, ParseError> {
    let mut dimension: Option<usize> = None;
    let mut atoms: Vec<(Vec<f64>, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw);
        let mut fields = line.split_whitespace();
        let Some(keyword) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        match keyword {
            "dimension" => {
                if dimension.is_some() {
                    return err(lineno, "duplicate dimension line");
                }
                let [value] = rest.as_slice() else {
                    return err(lineno, "expected: dimension <n>");
                };
                let n: usize = value.parse().map_err(|_| ParseError {
                    line: lineno,
                    message: format!("bad dimension '{value}'"),
                })?;
                if n == 0 || n > MAX_DIMENSION {
                    return err(lineno, format!("dimension must be between 1 and {MAX_DIMENSION}"));
                }
                dimension = Some(n);
            }
            "atom" => {
                let Some(dim) = dimension else {
                    return err(lineno, "dimension must come before atoms");
                };
                if rest.len() != dim + 1 {
                    return err(lineno, format!("expected {dim} coordinates and a mass"));
                }
                let mut point = Vec::with_capacity(dim);
                for f in &rest[..dim] {
                    let c: f64 = f.parse().map_err(|_| ParseError {
                        line: lineno,
                        message: format!("bad coordinate '{f}'"),
                    })?;
                    if !c.is_finite() {
                        return err(lineno, "coordinates must be finite");
                    }
                    point.push(c);
                }
                let mass: f64 = rest[dim].parse().map_err(|_| ParseError {
                    line: lineno,
                    message: format!("bad mass '{}'", rest[dim]),
                })?;
                if !mass.is_finite() || mass <= 0.0 {
                    return err(lineno, "mass must be a positive finite number");
                }
                if atoms.len() >= MAX_ATOMS {
                    return err(lineno, "too many atoms");
                }
                atoms.push((point, mass));
            }
            other => return err(lineno, format!("unknown keyword '{other}'")),
        }
    }
    let Some(dimension) = dimension else {
        return err(text.lines().count().max(1), "missing dimension line");
    };
    AtomicMeasure::new(dimension, atoms)
        .map_err(|e| ParseError { line: 0, message: e.to_string() })
}

/// Serializes a measure: atoms in their (sorted) stored order.
pub fn write_measure(mu: &AtomicMeasure) -> String {
    let mut out = String::new();
    out.push_str(&format!("dimension {}\n", mu.dim()));
    for atom in mu.atoms() {
        out.push_str("atom");
        for c in &atom.point {
            out.push(' ');
            out.push_str(&format_significant(*c));
        }
        out.push(' ');
        out.push_str(&format_significant(atom.mass));
        out.push('\n');
    }
    out
}

/// Rounds to 12 significant digits and prints the shortest representation of
/// the rounded value; the fixed rounding makes reports byte-reproducible.
pub fn format_significant(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("round-trip of finite float");
    let mut s = format!("{rounded}");
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truncation::Triangular(r) => write!(f, "triangular {r}"),
            Truncation::Rectangular(sides) => {
                write!(f, "rectangular")?;
                for d in sides {
                    write!(f, " {d}")?;
                }
                Ok(())
            }
            Truncation::Explicit(e) => write!(f, "explicit ({} elements)", e.len()),
        }
    }
}
