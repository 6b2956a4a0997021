//! Text form of group elements and ring elements.
//!
//! Ring elements serialize as `coeff*word` terms joined by `+`. Free-group
//! words are letter strings (`a`, with `A` for `a⁻¹`; the letter `e` is
//! reserved for the identity). Lattice elements are integer tuples such as
//! `(1,-2)`, residues are bracketed `[3,0]`. The parser additionally accepts
//! the shorthand `2-t+3*T^2` where `t,u,v,w,x,y,z` name lattice/quotient
//! generators.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use super::element::{GroupElement, GroupKind, GroupSpec};
use super::ring::{Coefficients, GroupRingElement};
use crate::error::{Error, Result};

pub const FREE_LETTERS: &[u8] = b"abcdfghijklmnopqrs";
pub const LATTICE_LETTERS: &[u8] = b"tuvwxyz";

pub fn format_element(x: &GroupElement) -> String {
    match x {
        GroupElement::Lattice(v) => {
            let parts: Vec<_> = v.iter().map(|p| p.to_string()).collect();
            format!("({})", parts.join(","))
        }
        GroupElement::Residue(v) => {
            let parts: Vec<_> = v.iter().map(|p| p.to_string()).collect();
            format!("[{}]", parts.join(","))
        }
        GroupElement::Free(w) => {
            if w.is_empty() {
                return "e".into();
            }
            w.iter()
                .map(|&l| {
                    let c = FREE_LETTERS[l.unsigned_abs() as usize - 1] as char;
                    if l > 0 {
                        c
                    } else {
                        c.to_ascii_uppercase()
                    }
                })
                .collect()
        }
    }
}

fn parse_int_list(body: &str) -> Result<Vec<i64>> {
    body.split(',')
        .map(|p| p.trim().parse::<i64>().map_err(|e| Error::Parse(format!("{p:?}: {e}"))))
        .collect()
}

/// Parse a group element. Rank-one lattices and quotients also accept a bare integer.
pub fn parse_element(group: &GroupSpec, s: &str) -> Result<GroupElement> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty element".into()));
    }
    if s == "e" {
        return Ok(group.identity());
    }
    let elem = if let Some(body) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let v = parse_int_list(body)?;
        match group.kind() {
            GroupKind::Lattice { .. } => GroupElement::Lattice(v),
            GroupKind::Quotient { .. } => group.reduce(&GroupElement::Lattice(v))?,
            GroupKind::Free { .. } => return Err(Error::Parse(format!("tuple {s} in free group"))),
        }
    } else if let Some(body) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        let v = parse_int_list(body)?;
        match group.kind() {
            GroupKind::Quotient { .. } => group.reduce(&GroupElement::Lattice(v))?,
            _ => return Err(Error::Parse(format!("residue {s} outside a quotient group"))),
        }
    } else if let Ok(n) = s.parse::<i64>() {
        if group.rank() != 1 || matches!(group.kind(), GroupKind::Free { .. }) {
            return Err(Error::Parse(format!("bare integer {s} needs a rank-one abelian group")));
        }
        match group.kind() {
            GroupKind::Lattice { .. } => GroupElement::Lattice(vec![n]),
            _ => group.reduce(&GroupElement::Lattice(vec![n]))?,
        }
    } else {
        parse_word(group, s)?
    };
    if !group.contains(&elem) {
        return Err(Error::Parse(format!("{s} is not an element of {group}")));
    }
    Ok(elem)
}

/// Letter words with optional integer exponents, e.g. `aB`, `t^3`, `tU^-2`.
fn parse_word(group: &GroupSpec, s: &str) -> Result<GroupElement> {
    let letters = match group.kind() {
        GroupKind::Free { .. } => FREE_LETTERS,
        _ => LATTICE_LETTERS,
    };
    let bytes = s.as_bytes();
    let mut out = group.identity();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let lower = c.to_ascii_lowercase();
        let idx = letters
            .iter()
            .position(|&l| l == lower)
            .filter(|&p| p < group.rank())
            .ok_or_else(|| Error::Parse(format!("unknown generator {:?} in {s:?}", c as char)))?;
        let mut g = group.generator(idx)?;
        if c.is_ascii_uppercase() {
            g = group.inverse(&g)?;
        }
        i += 1;
        let mut exp = 1i64;
        if i < bytes.len() && bytes[i] == b'^' {
            let start = i + 1;
            let mut end = start;
            if end < bytes.len() && bytes[end] == b'-' {
                end += 1;
            }
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            exp = s[start..end]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
            i = end;
        }
        out = group.mul(&out, &group.pow(&g, exp)?)?;
    }
    Ok(out)
}

pub fn format_ring(f: &GroupRingElement) -> String {
    let terms: Vec<String> = match f.coefficients() {
        Coefficients::Exact(m) => m.iter().map(|(g, c)| format!("{c}*{}", format_element(g))).collect(),
        Coefficients::Float { terms, .. } => {
            terms.iter().map(|(g, c)| format!("{c:?}*{}", format_element(g))).collect()
        }
    };
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+")
    }
}

/// Split an expression into signed term strings.
fn split_terms(s: &str) -> Vec<(bool, String)> {
    fn in_scientific(cur: &str) -> bool {
        if cur.contains('*') || !(cur.ends_with('e') || cur.ends_with('E')) {
            return false;
        }
        let mantissa = &cur[..cur.len() - 1];
        !mantissa.is_empty() && mantissa.chars().all(|c| c.is_ascii_digit() || c == '.')
    }
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut neg = false;
    let mut prev: Option<char> = None;
    for ch in s.chars().filter(|c| !c.is_whitespace()) {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ => {}
        }
        let separator = depth == 0
            && (ch == '+' || ch == '-')
            && !matches!(prev, Some('^') | Some('*'))
            && !in_scientific(&cur);
        if separator {
            if !cur.is_empty() {
                out.push((neg, std::mem::take(&mut cur)));
                neg = false;
            }
            if ch == '-' {
                neg = !neg;
            }
        } else {
            cur.push(ch);
        }
        prev = Some(ch);
    }
    if !cur.is_empty() {
        out.push((neg, cur));
    }
    out
}

fn split_coeff(term: &str) -> (Option<&str>, &str) {
    if let Some((c, w)) = term.split_once('*') {
        return (Some(c), w);
    }
    let end = term
        .char_indices()
        .find(|&(_, c)| !(c.is_ascii_digit() || c == '.'))
        .map(|(i, _)| i)
        .unwrap_or(term.len());
    if end == 0 {
        (None, term)
    } else if end == term.len() {
        (Some(term), "")
    } else {
        (Some(&term[..end]), &term[end..])
    }
}

/// Parse an exact-integer ring element such as `2-t`, `3-t-T`, `1*(0)+-1*(1)`.
pub fn parse_ring(group: &GroupSpec, s: &str) -> Result<GroupRingElement> {
    let mut terms: BTreeMap<GroupElement, BigInt> = BTreeMap::new();
    if s.trim() == "0" {
        return Ok(GroupRingElement::zero(group.clone()));
    }
    for (neg, term) in split_terms(s) {
        let (coeff, word) = split_coeff(&term);
        let mut c: BigInt = match coeff {
            Some(c) => c.parse().map_err(|_| Error::Parse(format!("bad coefficient {c:?}")))?,
            None => BigInt::from(1),
        };
        if neg {
            c = -c;
        }
        let g = if word.is_empty() { group.identity() } else { parse_element(group, word)? };
        *terms.entry(g).or_default() += c;
    }
    Ok(GroupRingElement::from_exact(group.clone(), terms))
}

/// Parse a float-mode ring element (used for fixtures of truncated inverses).
pub fn parse_ring_float(group: &GroupSpec, s: &str) -> Result<GroupRingElement> {
    let mut terms: BTreeMap<GroupElement, f64> = BTreeMap::new();
    if s.trim() == "0" {
        return GroupRingElement::from_float(group.clone(), terms, 0.0);
    }
    for (neg, term) in split_terms(s) {
        let (coeff, word) = match term.split_once('*') {
            Some((c, w)) => (Some(c), w),
            None => split_coeff(&term),
        };
        let mut c: f64 = match coeff {
            Some(c) => c.parse().map_err(|_| Error::Parse(format!("bad coefficient {c:?}")))?,
            None => 1.0,
        };
        if neg {
            c = -c;
        }
        let g = if word.is_empty() { group.identity() } else { parse_element(group, word)? };
        *terms.entry(g).or_default() += c;
    }
    GroupRingElement::from_float(group.clone(), terms, 0.0)
}
