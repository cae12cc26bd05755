//! Answer normalization and equivalence.
//!
//! Numeric answers (integers, decimals, simple fractions, comma-grouped
//! integers and, optionally, percentages) are parsed into exact rationals
//! where they fit and compared by value. Everything else is compared by
//! normalized string; there is no symbolic algebra.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

const REL_TOLERANCE: f64 = 1e-9;
/// Longest digit string parsed exactly; longer literals fall back to `f64`.
const MAX_EXACT_DIGITS: usize = 30;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnswerOptions {
    /// Treat `50%` as the number 0.5. Off by default.
    pub percent_as_fraction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormClass {
    Numeric,
    Symbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericValue {
    Exact(Ratio<i128>),
    Approx(f64),
}

impl NumericValue {
    pub fn to_f64(self) -> f64 {
        match self {
            NumericValue::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            NumericValue::Approx(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerForm {
    pub raw: String,
    pub normalized: String,
    pub numeric_value: Option<NumericValue>,
    pub form_class: FormClass,
}

pub fn normalize_answer(raw: &str) -> AnswerForm {
    normalize_answer_with(raw, AnswerOptions::default())
}

pub fn normalize_answer_with(raw: &str, opts: AnswerOptions) -> AnswerForm {
    let normalized = normalize_text(raw);
    let numeric_value = parse_numeric(&normalized, opts);
    AnswerForm {
        raw: raw.to_string(),
        form_class: if numeric_value.is_some() {
            FormClass::Numeric
        } else {
            FormClass::Symbolic
        },
        normalized,
        numeric_value,
    }
}

pub fn answers_equal(a: &AnswerForm, b: &AnswerForm) -> bool {
    match (a.numeric_value, b.numeric_value) {
        (Some(NumericValue::Exact(x)), Some(NumericValue::Exact(y))) => x == y,
        (Some(x), Some(y)) => {
            let (x, y) = (x.to_f64(), y.to_f64());
            // symmetric form of |a - b| <= tol * max(1, |b|)
            (x - y).abs() <= REL_TOLERANCE * 1f64.max(x.abs()).max(y.abs())
        }
        _ => a.normalized == b.normalized,
    }
}

/// Applies the cleanup passes until the text stops changing, which makes
/// normalization idempotent by construction.
fn normalize_text(raw: &str) -> String {
    let mut current = raw.to_string();
    loop {
        let next = normalize_pass(&current);
        if next == current {
            return next;
        }
        current = next;
    }
}

fn normalize_pass(s: &str) -> String {
    let mut s = s.trim().to_string();
    for (from, to) in [
        ("{,}", ","),
        ("\\dfrac", "\\frac"),
        ("\\tfrac", "\\frac"),
        ("\\%", "%"),
        ("\\!", ""),
        ("\\,", ""),
        ("\\;", ""),
        ("\\left", ""),
        ("\\right", ""),
        ("~", ""),
    ] {
        if s.contains(from) {
            s = s.replace(from, to);
        }
    }
    s = strip_wrappers(&s);
    s = s.trim_end_matches(['.', ',', ';', ':', '!']).to_string();
    s = s.to_lowercase();
    s.retain(|c| !c.is_whitespace());
    if let Some(frac) = latex_fraction(&s) {
        s = frac;
    }
    if is_grouped_integer(&s) {
        s.retain(|c| c != ',');
    }
    s
}

fn strip_wrappers(s: &str) -> String {
    let mut s = s.trim();
    loop {
        let before = s;
        for cmd in ["\\boxed", "\\fbox"] {
            if let Some(rest) = s.strip_prefix(cmd) {
                let rest = rest.trim_start();
                if let Some(inner) = whole_braced(rest) {
                    s = inner.trim();
                }
            }
        }
        for (open, close) in [("$$", "$$"), ("$", "$"), ("\\(", "\\)"), ("\\[", "\\]")] {
            if s.len() >= open.len() + close.len() && s.starts_with(open) && s.ends_with(close) {
                s = s[open.len()..s.len() - close.len()].trim();
            }
        }
        if let Some(inner) = whole_braced(s) {
            s = inner.trim();
        }
        if s == before {
            return s.to_string();
        }
    }
}

/// If `s` is exactly one balanced `{...}` group, returns its interior.
fn whole_braced(s: &str) -> Option<&str> {
    if !s.starts_with('{') {
        return None;
    }
    let close = matching_brace(s, 0)?;
    (close == s.len() - 1).then(|| &s[1..close])
}

/// Byte index of the brace closing the one opened at `open`.
pub(crate) fn matching_brace(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in s[open..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(open + i);
                }
            }
            _ => {}
        }
    }
    None
}

/// `\frac{3}{4}` (optionally signed) with integer parts becomes `3/4`.
fn latex_fraction(s: &str) -> Option<String> {
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", s),
    };
    let rest = body.strip_prefix("\\frac")?;
    let num_end = matching_brace(rest, 0)?;
    let num = whole_braced(&rest[..=num_end])?;
    let tail = &rest[num_end + 1..];
    let den = whole_braced(tail)?;
    if is_signed_digits(num) && is_digits(den) {
        Some(format!("{sign}{num}/{den}"))
    } else {
        None
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn is_signed_digits(s: &str) -> bool {
    is_digits(s.strip_prefix(['-', '+']).unwrap_or(s))
}

fn is_grouped_integer(s: &str) -> bool {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let mut groups = body.split(',');
    let Some(first) = groups.next() else {
        return false;
    };
    let mut saw_group = false;
    for g in groups {
        if g.len() != 3 || !is_digits(g) {
            return false;
        }
        saw_group = true;
    }
    saw_group && is_digits(first) && first.len() <= 3
}

fn parse_numeric(s: &str, opts: AnswerOptions) -> Option<NumericValue> {
    let (body, scale) = match s.strip_suffix('%') {
        Some(b) if opts.percent_as_fraction => (b, Some(100)),
        Some(_) => return None,
        None => (s, None),
    };
    let value = parse_plain_number(body)?;
    Some(match (value, scale) {
        (NumericValue::Exact(r), Some(d)) => NumericValue::Exact(r / Ratio::from_integer(d)),
        (NumericValue::Approx(v), Some(d)) => NumericValue::Approx(v / d as f64),
        (v, None) => v,
    })
}

fn parse_plain_number(s: &str) -> Option<NumericValue> {
    let (negative, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let value = if let Some((num, den)) = body.split_once('/') {
        if !is_digits(num) || !is_digits(den) {
            return None;
        }
        match (exact_int(num), exact_int(den)) {
            (Some(_), Some(0)) => return None,
            (Some(n), Some(d)) => NumericValue::Exact(Ratio::new(n, d)),
            _ => {
                let d: f64 = den.parse().ok()?;
                if d == 0.0 {
                    return None;
                }
                NumericValue::Approx(num.parse::<f64>().ok()? / d)
            }
        }
    } else if let Some((int, frac)) = body.split_once('.') {
        if (int.is_empty() && frac.is_empty())
            || !(int.is_empty() || is_digits(int))
            || !(frac.is_empty() || is_digits(frac))
        {
            return None;
        }
        let digits = format!("{int}{frac}");
        match (exact_int(&digits), pow10(frac.len())) {
            (Some(n), Some(d)) => NumericValue::Exact(Ratio::new(n, d)),
            _ => NumericValue::Approx(body.parse().ok()?),
        }
    } else {
        if !is_digits(body) {
            return None;
        }
        match exact_int(body) {
            Some(n) => NumericValue::Exact(Ratio::from_integer(n)),
            None => NumericValue::Approx(body.parse().ok()?),
        }
    };
    Some(if negative { negate(value) } else { value })
}

fn exact_int(digits: &str) -> Option<i128> {
    if digits.len() > MAX_EXACT_DIGITS {
        return None;
    }
    digits.parse().ok()
}

fn pow10(n: usize) -> Option<i128> {
    (n <= MAX_EXACT_DIGITS).then(|| 10i128.pow(n as u32))
}

fn negate(v: NumericValue) -> NumericValue {
    match v {
        NumericValue::Exact(r) => NumericValue::Exact(-r),
        NumericValue::Approx(x) => NumericValue::Approx(-x),
    }
}
