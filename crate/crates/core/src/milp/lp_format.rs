//! CPLEX-style LP text export and a parser for the same subset.
//!
//! Layout written by [`export_lp_text`]:
//!
//! ```text
//! \ abmap integer program
//! Maximize
//!  obj: 3 x + 2 y
//! Subject To
//!  r0: 1 x + 1 y <= 1
//!  r1_lo: 1 x - 1 y >= -2
//!  r1_hi: 1 x - 1 y <= 4
//!  r2: 2 x = 3
//! Bounds
//!  0 <= x <= 1
//!  y >= 0
//! General
//!  y
//! Binary
//!  x
//! End
//! ```
//!
//! Every coefficient is written explicitly with Rust's shortest round-trip
//! float formatting. Rows with two finite, distinct bounds become an `_lo`
//! and an `_hi` inequality; equal bounds become `=`; rows without finite
//! bounds are written as `>= -inf`. Expressions wrap after eight terms. The
//! `Bounds` section lists every variable in index order, which fixes the
//! variable numbering when the text is parsed back.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{IntegerProgram, VarKind};
use crate::error::{Error, Result};

const TERMS_PER_LINE: usize = 8;

pub fn export_lp_text(program: &IntegerProgram) -> String {
    let mut out = String::new();
    let name = |j: usize| program.variables[j].name.as_str();
    out.push_str("\\ abmap integer program\nMaximize\n obj:");
    let obj: Vec<(usize, f64)> = program
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.objective != 0.0)
        .map(|(j, v)| (j, v.objective))
        .collect();
    write_terms(&mut out, &obj, &name);
    out.push('\n');

    out.push_str("Subject To\n");
    for (i, c) in program.constraints.iter().enumerate() {
        let row = |out: &mut String, label: &str, op: &str, rhs: f64| {
            let _ = write!(out, " {label}:");
            if c.coefficients.is_empty() && !program.variables.is_empty() {
                write_terms(out, &[(0, 0.0)], &name);
            } else {
                write_terms(out, &c.coefficients, &name);
            }
            let _ = writeln!(out, " {op} {}", fmt_num(rhs));
        };
        let (lo, hi) = (c.lower, c.upper);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) if lo == hi => row(&mut out, &format!("r{i}"), "=", lo),
            (true, true) => {
                row(&mut out, &format!("r{i}_lo"), ">=", lo);
                row(&mut out, &format!("r{i}_hi"), "<=", hi);
            }
            (true, false) => row(&mut out, &format!("r{i}"), ">=", lo),
            (false, true) => row(&mut out, &format!("r{i}"), "<=", hi),
            (false, false) => row(&mut out, &format!("r{i}"), ">=", f64::NEG_INFINITY),
        }
    }

    out.push_str("Bounds\n");
    for v in &program.variables {
        if v.lower == v.upper {
            let _ = writeln!(out, " {} = {}", v.name, fmt_num(v.lower));
        } else if v.upper.is_finite() {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper));
        } else {
            let _ = writeln!(out, " {} >= {}", v.name, fmt_num(v.lower));
        }
    }
    for (kind, header) in [(VarKind::Integer, "General"), (VarKind::Binary, "Binary")] {
        let names: Vec<&str> =
            program.variables.iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{header}");
        for chunk in names.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn write_terms<'a>(out: &mut String, terms: &[(usize, f64)], name: &impl Fn(usize) -> &'a str) {
    for (k, &(j, a)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let (sign, mag) = if a < 0.0 || (a == 0.0 && a.is_sign_negative()) { ("-", -a) } else { ("+", a) };
        if k == 0 {
            let sign = if sign == "-" { "-" } else { "" };
            let _ = write!(out, " {sign}{} {}", fmt_num(mag), name(j));
        } else {
            let _ = write!(out, " {sign} {} {}", fmt_num(mag), name(j));
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Le,
    Ge,
    Eq,
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    for line in text.lines() {
        let line = line.split('\\').next().unwrap_or("");
        let b = line.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i] as char;
            match c {
                ' ' | '\t' | '\r' => i += 1,
                '+' => {
                    toks.push(Tok::Plus);
                    i += 1;
                }
                '-' => {
                    toks.push(Tok::Minus);
                    i += 1;
                }
                ':' => {
                    toks.push(Tok::Colon);
                    i += 1;
                }
                '<' | '>' | '=' => {
                    let mut j = i + 1;
                    while j < b.len() && matches!(b[j], b'<' | b'>' | b'=') {
                        j += 1;
                    }
                    let op = &line[i..j];
                    toks.push(if op.contains('<') {
                        Tok::Le
                    } else if op.contains('>') {
                        Tok::Ge
                    } else {
                        Tok::Eq
                    });
                    i = j;
                }
                _ if c.is_ascii_digit() || c == '.' => {
                    let mut j = i;
                    while j < b.len() {
                        let d = b[j] as char;
                        let exp_sign = (d == '+' || d == '-') && j > i && matches!(b[j - 1], b'e' | b'E');
                        if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                            j += 1;
                        } else {
                            break;
                        }
                    }
                    let v: f64 = line[i..j]
                        .parse()
                        .map_err(|_| Error::Config(format!("bad number `{}` in LP text", &line[i..j])))?;
                    toks.push(Tok::Num(v));
                    i = j;
                }
                _ => {
                    let mut j = i;
                    while j < b.len() && !matches!(b[j], b' ' | b'\t' | b'\r' | b'+' | b'-' | b':' | b'<' | b'>' | b'=') {
                        j += 1;
                    }
                    toks.push(Tok::Word(line[i..j].to_string()));
                    i = j;
                }
            }
        }
    }
    Ok(toks)
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    General,
    Binary,
}

fn keyword(toks: &[Tok], i: usize) -> Option<(Section, usize, bool)> {
    let Tok::Word(w) = &toks[i] else { return None };
    let lw = w.to_ascii_lowercase();
    let next_is_colon = matches!(toks.get(i + 1), Some(Tok::Colon));
    if next_is_colon {
        return None;
    }
    match lw.as_str() {
        "maximize" | "maximise" | "max" => Some((Section::Objective, 1, false)),
        "minimize" | "minimise" | "min" => Some((Section::Objective, 1, true)),
        "st" | "s.t." => Some((Section::Constraints, 1, false)),
        "subject" | "such" if matches!(toks.get(i + 1), Some(Tok::Word(t)) if t.eq_ignore_ascii_case("to") || t.eq_ignore_ascii_case("that")) => {
            Some((Section::Constraints, 2, false))
        }
        "bounds" | "bound" => Some((Section::Bounds, 1, false)),
        "general" | "generals" | "gen" | "integer" | "integers" => Some((Section::General, 1, false)),
        "binary" | "binaries" | "bin" => Some((Section::Binary, 1, false)),
        _ => None,
    }
}

#[derive(Default)]
struct Builder {
    index: BTreeMap<String, usize>,
    program: IntegerProgram,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.program.variables.len();
        self.program.variables.push(super::Variable {
            name: name.to_string(),
            lower: 0.0,
            upper: f64::INFINITY,
            kind: VarKind::Continuous,
            objective: 0.0,
        });
        self.index.insert(name.to_string(), j);
        j
    }
}

fn word_number(w: &str) -> Option<f64> {
    match w.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Some(f64::INFINITY),
        _ => None,
    }
}

/// Parses a signed number at `toks[*i]`.
fn number(toks: &[Tok], i: &mut usize) -> Option<f64> {
    let mut sign = 1.0;
    let start = *i;
    while let Some(t) = toks.get(*i) {
        match t {
            Tok::Plus => *i += 1,
            Tok::Minus => {
                sign = -sign;
                *i += 1
            }
            _ => break,
        }
    }
    let v = match toks.get(*i) {
        Some(Tok::Num(v)) => *v,
        Some(Tok::Word(w)) => match word_number(w) {
            Some(v) => v,
            None => {
                *i = start;
                return None;
            }
        },
        _ => {
            *i = start;
            return None;
        }
    };
    *i += 1;
    Some(sign * v)
}

/// Parses `[+|-] [coef] name ...` until a token that cannot continue the
/// expression.
fn expression(toks: &[Tok], i: &mut usize, b: &mut Builder, stop: &dyn Fn(&[Tok], usize) -> bool) -> Result<Vec<(usize, f64)>> {
    let mut terms = Vec::new();
    loop {
        if *i >= toks.len() || stop(toks, *i) {
            break;
        }
        let mut sign = 1.0;
        let mut any = false;
        loop {
            match toks.get(*i) {
                Some(Tok::Plus) => {}
                Some(Tok::Minus) => sign = -sign,
                _ => break,
            }
            *i += 1;
            any = true;
        }
        let coef = match toks.get(*i) {
            Some(Tok::Num(v)) => {
                *i += 1;
                *v
            }
            _ => 1.0,
        };
        match toks.get(*i) {
            Some(Tok::Word(w)) if !stop(toks, *i) => {
                let j = b.var(w);
                terms.push((j, sign * coef));
                *i += 1;
            }
            _ => {
                if any || coef != 1.0 {
                    return Err(Error::Config("dangling term in LP expression".into()));
                }
                break;
            }
        }
    }
    Ok(terms)
}

pub fn parse_lp_text(text: &str) -> Result<IntegerProgram> {
    let toks = tokenize(text)?;
    let mut b = Builder::default();
    let is_end = |t: &Tok| matches!(t, Tok::Word(w) if w.eq_ignore_ascii_case("end"));

    // Pre-register variables in the order of the Bounds section.
    let mut i = 0;
    let mut in_bounds = false;
    while i < toks.len() {
        if let Some((sec, len, _)) = keyword(&toks, i) {
            in_bounds = sec == Section::Bounds;
            i += len;
            continue;
        }
        if is_end(&toks[i]) {
            break;
        }
        if in_bounds {
            if let Tok::Word(w) = &toks[i] {
                if word_number(w).is_none() && !w.eq_ignore_ascii_case("free") {
                    b.var(w);
                }
            }
        }
        i += 1;
    }

    let mut section: Option<Section> = None;
    let mut minimize = false;
    let mut rows: Vec<(String, Vec<(usize, f64)>, f64, f64)> = Vec::new();
    let stop = |toks: &[Tok], k: usize| -> bool {
        matches!(toks[k], Tok::Le | Tok::Ge | Tok::Eq)
            || keyword(toks, k).is_some()
            || is_end(&toks[k])
            || matches!(toks.get(k + 1), Some(Tok::Colon))
    };
    i = 0;
    while i < toks.len() {
        if is_end(&toks[i]) {
            break;
        }
        if let Some((sec, len, min)) = keyword(&toks, i) {
            section = Some(sec);
            if sec == Section::Objective {
                minimize = min;
            }
            i += len;
            continue;
        }
        match section {
            None => return Err(Error::Config("LP text must start with an objective section".into())),
            Some(Section::Objective) => {
                if matches!(toks.get(i + 1), Some(Tok::Colon)) {
                    i += 2;
                }
                let terms = expression(&toks, &mut i, &mut b, &stop)?;
                for (j, a) in terms {
                    b.program.variables[j].objective += if minimize { -a } else { a };
                }
            }
            Some(Section::Constraints) => {
                let mut label = format!("r{}", rows.len());
                if let (Tok::Word(w), Some(Tok::Colon)) = (&toks[i], toks.get(i + 1)) {
                    label = w.clone();
                    i += 2;
                }
                let coefs = expression(&toks, &mut i, &mut b, &stop)?;
                let op = toks.get(i).cloned();
                i += 1;
                let rhs = number(&toks, &mut i).ok_or_else(|| Error::Config(format!("row {label} lacks a right-hand side")))?;
                let (lo, hi) = match op {
                    Some(Tok::Le) => (f64::NEG_INFINITY, rhs),
                    Some(Tok::Ge) => (rhs, f64::INFINITY),
                    Some(Tok::Eq) => (rhs, rhs),
                    _ => return Err(Error::Config(format!("row {label} lacks a comparison"))),
                };
                rows.push((label, coefs, lo, hi));
            }
            Some(Section::Bounds) => parse_bound(&toks, &mut i, &mut b)?,
            Some(sec @ (Section::General | Section::Binary)) => {
                let Tok::Word(w) = &toks[i] else {
                    return Err(Error::Config("expected a variable name".into()));
                };
                let j = b.var(w);
                let v = &mut b.program.variables[j];
                if sec == Section::General {
                    v.kind = VarKind::Integer;
                } else {
                    v.kind = VarKind::Binary;
                }
                i += 1;
            }
        }
    }

    let mut k = 0;
    while k < rows.len() {
        let (label, coefs, lo, hi) = &rows[k];
        if let Some(base) = label.strip_suffix("_lo") {
            if let Some((l2, c2, _, h2)) = rows.get(k + 1) {
                if l2.strip_suffix("_hi") == Some(base) && c2 == coefs {
                    b.program.add_constraint(coefs.clone(), *lo, *h2);
                    k += 2;
                    continue;
                }
            }
        }
        b.program.add_constraint(coefs.clone(), *lo, *hi);
        k += 1;
    }
    Ok(b.program)
}

fn parse_bound(toks: &[Tok], i: &mut usize, b: &mut Builder) -> Result<()> {
    let err = || Error::Config("malformed bound".into());
    let cmp = |t: Option<&Tok>| matches!(t, Some(Tok::Le | Tok::Ge | Tok::Eq));
    if let Some(first) = number(toks, i) {
        // lo <= x [<= hi]
        let op = toks.get(*i).cloned();
        *i += 1;
        let Some(Tok::Word(w)) = toks.get(*i) else { return Err(err()) };
        let j = b.var(w);
        *i += 1;
        match op {
            Some(Tok::Le) => b.program.variables[j].lower = first,
            Some(Tok::Ge) => b.program.variables[j].upper = first,
            Some(Tok::Eq) => {
                b.program.variables[j].lower = first;
                b.program.variables[j].upper = first;
            }
            _ => return Err(err()),
        }
        if cmp(toks.get(*i)) {
            let op = toks[*i].clone();
            *i += 1;
            let v = number(toks, i).ok_or_else(err)?;
            match op {
                Tok::Le => b.program.variables[j].upper = v,
                Tok::Ge => b.program.variables[j].lower = v,
                _ => return Err(err()),
            }
        }
        return Ok(());
    }
    let Some(Tok::Word(w)) = toks.get(*i) else { return Err(err()) };
    let j = b.var(w);
    *i += 1;
    if let Some(Tok::Word(f)) = toks.get(*i) {
        if f.eq_ignore_ascii_case("free") {
            b.program.variables[j].lower = f64::NEG_INFINITY;
            b.program.variables[j].upper = f64::INFINITY;
            *i += 1;
            return Ok(());
        }
    }
    let op = toks.get(*i).cloned();
    *i += 1;
    let v = number(toks, i).ok_or_else(err)?;
    let var = &mut b.program.variables[j];
    match op {
        Some(Tok::Le) => var.upper = v,
        Some(Tok::Ge) => var.lower = v,
        Some(Tok::Eq) => {
            var.lower = v;
            var.upper = v;
        }
        _ => return Err(err()),
    }
    Ok(())
}
