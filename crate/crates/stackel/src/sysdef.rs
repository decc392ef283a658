//! Plain-text system definitions.
//!
//! A definition file is sectioned `key = value` text. Expression values are
//! quoted strings in the crate's expression grammar; everything else is bare.
//!
//! ```text
//! [system]
//! name = canonical2d
//! dim = 2
//! coords = u, v
//! sides = 1
//!
//! [stackel]
//! row.1 = "1", "1"
//! row.2 = "1", "u + v"
//!
//! [potential]
//! v = "0", "0"
//!
//! [domain]
//! u = [1.5, 2.5]
//! v = [0.5, 0.9]
//! ```
//!
//! Optional sections: `[rfactor]` with a single `R` (the exponent of the
//! separation factor `e^R`), `[vectorpot]` with first-order coefficients
//! `f1, f2`, drift components `g1, g2`, inhomogeneities `w1, w2` and the
//! quadrature constants `gamma4..gamma6`, and `[params]` with numeric
//! defaults for free parameter symbols.
//!
//! Serialization is canonical: `to_text` always emits sections and keys in
//! the same order, so parse/serialize round-trips are exact and byte-stable.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{StackelError, SysDefError};
use crate::expr::Expr;
use crate::matrix::GeneralizedStackelMatrix;
use crate::sample::DomainBox;

/// First-order and drift data for the two-dimensional vector-potential
/// compatibility checks.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPotentialData {
    /// First-order coefficients of the separated operators, one per
    /// coordinate.
    pub f: [Expr; 2],
    /// Drift components `g1, g2` (solute branch).
    pub drift: [Expr; 2],
    /// Inhomogeneous profiles `w1, w2` (magnetic branch).
    pub w: [Expr; 2],
    /// Quadrature constants `gamma4, gamma5, gamma6`.
    pub gammas: [f64; 3],
}

impl VectorPotentialData {
    /// All expressions zero, all constants zero.
    pub fn zero() -> Self {
        let z = || Expr::num(0.0);
        VectorPotentialData {
            f: [z(), z()],
            drift: [z(), z()],
            w: [z(), z()],
            gammas: [0.0; 3],
        }
    }
}

/// A complete separable-system definition: coordinates, the defining matrix,
/// potential components, optional separation-factor exponent, sampling
/// domain, optional vector-potential data, and free-parameter defaults.
///
/// Expressions may reference parameter symbols; [`SystemDefinition::resolved`]
/// substitutes the `params` values before any numeric work. The matrix rows
/// are stored raw (structural validation happens in
/// [`SystemDefinition::matrix`], after resolution).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDefinition {
    pub name: String,
    pub coords: Vec<String>,
    pub sides: usize,
    /// Matrix rows, `dim x dim`.
    pub rows: Vec<Vec<Expr>>,
    /// Potential components `v_i`, one per coordinate.
    pub potential: Vec<Expr>,
    /// Exponent of the separation factor `e^R`, if the system declares one.
    pub rfactor: Option<Expr>,
    /// Closed sampling intervals, one per coordinate, in coordinate order.
    pub domain: Vec<(String, f64, f64)>,
    pub vectorpot: Option<VectorPotentialData>,
    /// Free-parameter defaults, substituted by [`SystemDefinition::resolved`].
    pub params: BTreeMap<String, f64>,
}

impl SystemDefinition {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Substitute every parameter value into every expression. The result
    /// carries an empty parameter map.
    pub fn resolved(&self) -> SystemDefinition {
        let subst = |e: &Expr| -> Expr {
            let mut out = e.clone();
            for (name, value) in &self.params {
                out = out.substitute(name, &Expr::num(*value));
            }
            out
        };
        SystemDefinition {
            name: self.name.clone(),
            coords: self.coords.clone(),
            sides: self.sides,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(subst).collect())
                .collect(),
            potential: self.potential.iter().map(subst).collect(),
            rfactor: self.rfactor.as_ref().map(subst),
            domain: self.domain.clone(),
            vectorpot: self.vectorpot.as_ref().map(|vp| VectorPotentialData {
                f: [subst(&vp.f[0]), subst(&vp.f[1])],
                drift: [subst(&vp.drift[0]), subst(&vp.drift[1])],
                w: [subst(&vp.w[0]), subst(&vp.w[1])],
                gammas: vp.gammas,
            }),
            params: BTreeMap::new(),
        }
    }

    /// Build the validated matrix from the resolved rows. Structural
    /// violations (a single-variable column referencing a foreign symbol)
    /// surface here, 1-indexed.
    pub fn matrix(&self) -> Result<GeneralizedStackelMatrix, StackelError> {
        let resolved = self.resolved();
        GeneralizedStackelMatrix::new(
            resolved.coords.iter().map(String::as_str).collect(),
            resolved.rows,
            resolved.sides,
        )
    }

    /// Potential components with parameters substituted.
    pub fn potential_resolved(&self) -> Vec<Expr> {
        self.resolved().potential
    }

    pub fn domain_box(&self) -> DomainBox {
        DomainBox::new(
            self.domain
                .iter()
                .map(|(name, lo, hi)| (name.as_str(), *lo, *hi)),
        )
    }

    pub fn from_text(text: &str) -> Result<SystemDefinition, SysDefError> {
        parse(text)
    }

    pub fn to_text(&self) -> String {
        serialize(self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SystemDefinition, SysDefError> {
        let text = std::fs::read_to_string(path)?;
        parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SysDefError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

const SECTIONS: &[&str] = &[
    "system",
    "stackel",
    "potential",
    "rfactor",
    "domain",
    "vectorpot",
    "params",
];

fn parse_err(line: usize, message: impl Into<String>) -> SysDefError {
    SysDefError::Parse {
        line,
        message: message.into(),
    }
}

/// One parsed `[section]` body: keys to (line, raw value), consumed by the
/// assembly phase so leftovers can be reported as unknown keys.
struct Section {
    name: &'static str,
    entries: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<(usize, String), SysDefError> {
        self.take(key).ok_or_else(|| SysDefError::MissingKey {
            section: self.name.to_string(),
            key: key.to_string(),
        })
    }

    fn finish(self) -> Result<(), SysDefError> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            return Err(parse_err(
                line,
                format!("unknown key '{key}' in section [{}]", self.name),
            ));
        }
        Ok(())
    }
}

fn split_sections(text: &str) -> Result<BTreeMap<&'static str, Section>, SysDefError> {
    let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(body) = line.strip_prefix('[') {
            let Some(name) = body.strip_suffix(']') else {
                return Err(parse_err(lineno, "unterminated section header"));
            };
            let Some(&known) = SECTIONS.iter().find(|s| **s == name) else {
                return Err(parse_err(lineno, format!("unknown section [{name}]")));
            };
            if sections.contains_key(known) {
                return Err(parse_err(lineno, format!("duplicate section [{known}]")));
            }
            sections.insert(
                known,
                Section {
                    name: known,
                    entries: BTreeMap::new(),
                },
            );
            current = Some(known);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(parse_err(lineno, "expected `key = value` or a [section] header"));
        };
        let Some(section) = current else {
            return Err(parse_err(lineno, "key appears before any [section] header"));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let entries = &mut sections.get_mut(section).unwrap().entries;
        if entries.contains_key(&key) {
            return Err(parse_err(lineno, format!("duplicate key '{key}'")));
        }
        entries.insert(key, (lineno, value));
    }
    Ok(sections)
}

fn require_section(
    sections: &mut BTreeMap<&'static str, Section>,
    name: &'static str,
) -> Result<Section, SysDefError> {
    sections.remove(name).ok_or_else(|| SysDefError::MissingSection {
        section: name.to_string(),
    })
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_usize(line: usize, value: &str, what: &str) -> Result<usize, SysDefError> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("{what} must be a non-negative integer, got '{value}'")))
}

fn parse_f64(line: usize, value: &str, what: &str) -> Result<f64, SysDefError> {
    let v: f64 = value
        .parse()
        .map_err(|_| parse_err(line, format!("{what} must be a number, got '{value}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what} must be finite, got '{value}'")));
    }
    Ok(v)
}

/// Split `"a", "b", ...` into the unquoted pieces. Expressions contain no
/// quote characters, so no escape syntax is needed.
fn split_quoted_list(line: usize, value: &str) -> Result<Vec<String>, SysDefError> {
    let mut pieces = Vec::new();
    let mut rest = value.trim_start();
    loop {
        let Some(after_open) = rest.strip_prefix('"') else {
            return Err(parse_err(line, "expected a quoted expression"));
        };
        let Some(close) = after_open.find('"') else {
            return Err(parse_err(line, "unterminated quoted expression"));
        };
        pieces.push(after_open[..close].to_string());
        rest = after_open[close + 1..].trim_start();
        if rest.is_empty() {
            return Ok(pieces);
        }
        let Some(after_comma) = rest.strip_prefix(',') else {
            return Err(parse_err(line, "expected ',' between quoted expressions"));
        };
        rest = after_comma.trim_start();
    }
}

fn parse_expr(line: usize, text: &str) -> Result<Expr, SysDefError> {
    Expr::parse(text).map_err(|source| SysDefError::Expr { line, source })
}

fn parse_quoted_expr(line: usize, value: &str) -> Result<Expr, SysDefError> {
    let pieces = split_quoted_list(line, value)?;
    if pieces.len() != 1 {
        return Err(parse_err(line, "expected exactly one quoted expression"));
    }
    parse_expr(line, &pieces[0])
}

fn parse_expr_list(
    line: usize,
    value: &str,
    expected: usize,
    what: &str,
) -> Result<Vec<Expr>, SysDefError> {
    let pieces = split_quoted_list(line, value)?;
    if pieces.len() != expected {
        return Err(parse_err(
            line,
            format!("{what} needs {expected} quoted expressions, got {}", pieces.len()),
        ));
    }
    pieces.iter().map(|p| parse_expr(line, p)).collect()
}

fn parse_interval(line: usize, value: &str) -> Result<(f64, f64), SysDefError> {
    let inner = value
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| parse_err(line, "interval must be written [lo, hi]"))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(parse_err(line, "interval must have exactly two endpoints"));
    }
    let lo = parse_f64(line, parts[0], "interval endpoint")?;
    let hi = parse_f64(line, parts[1], "interval endpoint")?;
    if lo >= hi {
        return Err(parse_err(line, format!("empty interval [{lo}, {hi}]")));
    }
    Ok((lo, hi))
}

fn parse(text: &str) -> Result<SystemDefinition, SysDefError> {
    let mut sections = split_sections(text)?;

    let mut system = require_section(&mut sections, "system")?;
    let (_, name) = system.require("name")?;
    if name.is_empty() {
        return Err(SysDefError::MissingKey {
            section: "system".into(),
            key: "name".into(),
        });
    }
    let (dim_line, dim_raw) = system.require("dim")?;
    let dim = parse_usize(dim_line, &dim_raw, "dim")?;
    if dim < 2 {
        return Err(parse_err(dim_line, format!("dim must be at least 2, got {dim}")));
    }
    let (coords_line, coords_raw) = system.require("coords")?;
    let coords: Vec<String> = coords_raw.split(',').map(|c| c.trim().to_string()).collect();
    if coords.len() != dim {
        return Err(parse_err(
            coords_line,
            format!("coords lists {} names but dim = {dim}", coords.len()),
        ));
    }
    for c in &coords {
        if !is_identifier(c) {
            return Err(parse_err(coords_line, format!("'{c}' is not a coordinate name")));
        }
    }
    for (i, c) in coords.iter().enumerate() {
        if coords[..i].contains(c) {
            return Err(parse_err(coords_line, format!("coordinate '{c}' repeats")));
        }
    }
    let (sides_line, sides_raw) = system.require("sides")?;
    let sides = parse_usize(sides_line, &sides_raw, "sides")?;
    if !(1..=2).contains(&sides) || sides >= dim {
        return Err(parse_err(
            sides_line,
            format!("sides must be 1 or 2 and below dim, got {sides} with dim {dim}"),
        ));
    }
    system.finish()?;

    let mut stackel = require_section(&mut sections, "stackel")?;
    let mut rows = Vec::with_capacity(dim);
    for i in 0..dim {
        let key = format!("row.{}", i + 1);
        let (line, raw) = stackel.require(&key)?;
        rows.push(parse_expr_list(line, &raw, dim, &key)?);
    }
    stackel.finish()?;

    let mut potential = require_section(&mut sections, "potential")?;
    let (v_line, v_raw) = potential.require("v")?;
    let v = parse_expr_list(v_line, &v_raw, dim, "v")?;
    potential.finish()?;

    let rfactor = match sections.remove("rfactor") {
        Some(mut sec) => {
            let (line, raw) = sec.require("R")?;
            let expr = parse_quoted_expr(line, &raw)?;
            sec.finish()?;
            Some(expr)
        }
        None => None,
    };

    let mut domain_sec = require_section(&mut sections, "domain")?;
    let mut domain = Vec::with_capacity(dim);
    for c in &coords {
        let (line, raw) = domain_sec.require(c)?;
        let (lo, hi) = parse_interval(line, &raw)?;
        domain.push((c.clone(), lo, hi));
    }
    domain_sec.finish()?;

    let vectorpot = match sections.remove("vectorpot") {
        Some(mut sec) => {
            if dim != 2 {
                return Err(SysDefError::Parse {
                    line: 0,
                    message: format!("[vectorpot] requires dim = 2, got {dim}"),
                });
            }
            let expr_key = |sec: &mut Section, key: &str| -> Result<Expr, SysDefError> {
                match sec.take(key) {
                    Some((line, raw)) => parse_quoted_expr(line, &raw),
                    None => Ok(Expr::num(0.0)),
                }
            };
            let f = [expr_key(&mut sec, "f1")?, expr_key(&mut sec, "f2")?];
            let drift = [expr_key(&mut sec, "g1")?, expr_key(&mut sec, "g2")?];
            let w = [expr_key(&mut sec, "w1")?, expr_key(&mut sec, "w2")?];
            let mut gammas = [0.0; 3];
            for (slot, key) in gammas.iter_mut().zip(["gamma4", "gamma5", "gamma6"]) {
                if let Some((line, raw)) = sec.take(key) {
                    *slot = parse_f64(line, &raw, key)?;
                }
            }
            sec.finish()?;
            Some(VectorPotentialData { f, drift, w, gammas })
        }
        None => None,
    };

    let mut params = BTreeMap::new();
    if let Some(sec) = sections.remove("params") {
        for (key, (line, raw)) in sec.entries {
            if !is_identifier(&key) {
                return Err(parse_err(line, format!("'{key}' is not a parameter name")));
            }
            if coords.contains(&key) {
                return Err(parse_err(
                    line,
                    format!("parameter '{key}' collides with a coordinate"),
                ));
            }
            params.insert(key.clone(), parse_f64(line, &raw, &key)?);
        }
    }

    Ok(SystemDefinition {
        name,
        coords,
        sides,
        rows,
        potential: v,
        rfactor,
        domain,
        vectorpot,
        params,
    })
}

fn write_expr_list(out: &mut String, exprs: &[Expr]) {
    for (k, e) in exprs.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "\"{e}\"");
    }
    out.push('\n');
}

fn serialize(def: &SystemDefinition) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[system]");
    let _ = writeln!(out, "name = {}", def.name);
    let _ = writeln!(out, "dim = {}", def.dim());
    let _ = writeln!(out, "coords = {}", def.coords.join(", "));
    let _ = writeln!(out, "sides = {}", def.sides);

    let _ = writeln!(out, "\n[stackel]");
    for (i, row) in def.rows.iter().enumerate() {
        let _ = write!(out, "row.{} = ", i + 1);
        write_expr_list(&mut out, row);
    }

    let _ = writeln!(out, "\n[potential]");
    out.push_str("v = ");
    write_expr_list(&mut out, &def.potential);

    if let Some(r) = &def.rfactor {
        let _ = writeln!(out, "\n[rfactor]");
        let _ = writeln!(out, "R = \"{r}\"");
    }

    let _ = writeln!(out, "\n[domain]");
    for (name, lo, hi) in &def.domain {
        let _ = writeln!(out, "{name} = [{lo}, {hi}]");
    }

    if let Some(vp) = &def.vectorpot {
        let _ = writeln!(out, "\n[vectorpot]");
        for (key, e) in [
            ("f1", &vp.f[0]),
            ("f2", &vp.f[1]),
            ("g1", &vp.drift[0]),
            ("g2", &vp.drift[1]),
            ("w1", &vp.w[0]),
            ("w2", &vp.w[1]),
        ] {
            let _ = writeln!(out, "{key} = \"{e}\"");
        }
        for (key, g) in ["gamma4", "gamma5", "gamma6"].iter().zip(vp.gammas) {
            let _ = writeln!(out, "{key} = {g}");
        }
    }

    if !def.params.is_empty() {
        let _ = writeln!(out, "\n[params]");
        for (key, value) in &def.params {
            let _ = writeln!(out, "{key} = {value}");
        }
    }

    out
}
