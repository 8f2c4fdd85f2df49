//! Expression language for polynomial maps of C^2 and the named map families.
//!
//! The grammar (see GRAMMAR.md at the repository root for the EBNF contract):
//!
//! ```text
//! map    := '(' expr ',' expr ')'
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | atom ('^' integer)?
//! atom   := number | variable | '(' expr ')'
//! ```
//!
//! Variables are one of the pairs {z, w} or {x, y} (auto-detected, mixing the
//! pairs is an error). Numeric literals are decimal (`0.5`), rational (`1/3`),
//! or imaginary with an `i` suffix (`2i`, bare `i` means the imaginary unit);
//! `a+bi` therefore parses as ordinary addition and denotes the complex value.
//! Everything is expanded to monomials at parse time; the parser rejects any
//! expression whose linear part is not exactly the identity, and any monomial
//! of total degree above 64.

use crate::poly::{HomPoly2, PolyMap2, VarNames};
use crate::scalar::Real;
use num_complex::{Complex, Complex64};
use std::collections::BTreeMap;
use thiserror::Error;

pub const MAX_DEGREE: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("parse error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("{coordinate} coordinate must be `{var} + higher-order terms`: linear part is {found}")]
    LinearPartMismatch { coordinate: &'static str, var: char, found: String },
    #[error("map is the identity: no nonzero component of degree >= 2")]
    IdentityMap,
    #[error("monomial of total degree {degree} exceeds the cap of {MAX_DEGREE}")]
    DegreeTooLarge { degree: u32 },
    #[error("family {family}: {message}")]
    FamilyConstraint { family: &'static str, message: String },
}

// ---------------------------------------------------------------------------
// Expansion arithmetic: dense-by-monomial bivariate polynomials over C.
// Parsing always expands in f64 and converts to the target scalar at the end,
// so the grammar's semantics do not depend on the instantiated scalar type.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
struct Expanded {
    // (z-exponent, w-exponent) -> coefficient
    terms: BTreeMap<(u32, u32), Complex64>,
}

impl Expanded {
    fn constant(c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert((0, 0), c);
        }
        Self { terms }
    }

    fn variable(index: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(if index == 0 { (1, 0) } else { (0, 1) }, Complex64::new(1.0, 0.0));
        Self { terms }
    }

    fn add_term(&mut self, key: (u32, u32), c: Complex64) {
        let entry = self.terms.entry(key).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.terms.remove(&key);
        }
    }

    fn add(mut self, other: Expanded) -> Expanded {
        for (k, c) in other.terms {
            self.add_term(k, c);
        }
        self
    }

    fn neg(mut self) -> Expanded {
        for c in self.terms.values_mut() {
            *c = -*c;
        }
        self
    }

    fn sub(self, other: Expanded) -> Expanded {
        self.add(other.neg())
    }

    fn mul(&self, other: &Expanded) -> Result<Expanded, ParseError> {
        let mut out = Expanded::default();
        for (&(a1, b1), &c1) in &self.terms {
            for (&(a2, b2), &c2) in &other.terms {
                let key = (a1 + a2, b1 + b2);
                let degree = key.0 + key.1;
                if degree > MAX_DEGREE {
                    return Err(ParseError::DegreeTooLarge { degree });
                }
                out.add_term(key, c1 * c2);
            }
        }
        Ok(out)
    }

    fn pow(&self, n: u32) -> Result<Expanded, ParseError> {
        let mut out = Expanded::constant(Complex64::new(1.0, 0.0));
        for _ in 0..n {
            out = out.mul(self)?;
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Scannerless recursive descent.
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: Option<VarNames>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src: src.as_bytes(), pos: 0, vars: None }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(got) if got == b => {
                self.pos += 1;
                Ok(())
            }
            Some(got) => Err(self.err(format!("expected '{}', found '{}'", b as char, got as char))),
            None => Err(self.err(format!("expected '{}', found end of input", b as char))),
        }
    }

    fn variable_index(&mut self, name: u8) -> Result<usize, ParseError> {
        let (pair, index) = match name {
            b'z' => (VarNames::ZW, 0),
            b'w' => (VarNames::ZW, 1),
            b'x' => (VarNames::XY, 0),
            b'y' => (VarNames::XY, 1),
            _ => unreachable!(),
        };
        match self.vars {
            None => {
                self.vars = Some(pair);
                Ok(index)
            }
            Some(seen) if seen == pair => Ok(index),
            Some(seen) => Err(self.err(format!(
                "variable '{}' mixes the {{{},{}}} pair with the {{{},{}}} pair",
                name as char,
                pair.first(),
                pair.second(),
                seen.first(),
                seen.second()
            ))),
        }
    }

    /// Unsigned decimal literal; no whitespace allowed inside.
    fn decimal(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if self.pos == start {
            return Err(self.err("expected a number"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map_err(|e| self.err(format!("bad numeric literal '{text}': {e}")))
    }

    /// number := decimal ('/' decimal)? 'i'?  |  'i'
    fn number(&mut self) -> Result<Complex64, ParseError> {
        if self.src.get(self.pos) == Some(&b'i') {
            self.pos += 1;
            return Ok(Complex64::new(0.0, 1.0));
        }
        let mut value = self.decimal()?;
        if self.src.get(self.pos) == Some(&b'/') {
            self.pos += 1;
            let den = self.decimal()?;
            if den == 0.0 {
                return Err(self.err("division by zero in rational literal"));
            }
            value /= den;
        }
        if self.src.get(self.pos) == Some(&b'i') {
            self.pos += 1;
            Ok(Complex64::new(0.0, value))
        } else {
            Ok(Complex64::new(value, 0.0))
        }
    }

    fn positive_integer(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a positive integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let n: u32 = text
            .parse()
            .map_err(|_| self.err(format!("exponent '{text}' out of range")))?;
        if n == 0 {
            return Err(self.err("exponent must be a positive integer"));
        }
        if n > MAX_DEGREE {
            return Err(ParseError::DegreeTooLarge { degree: n });
        }
        Ok(n)
    }

    fn atom(&mut self) -> Result<Expanded, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(v @ (b'z' | b'w' | b'x' | b'y')) => {
                self.pos += 1;
                let index = self.variable_index(v)?;
                Ok(Expanded::variable(index))
            }
            Some(b) if b.is_ascii_digit() || b == b'i' || b == b'.' => {
                Ok(Expanded::constant(self.number()?))
            }
            Some(b) => Err(self.err(format!("unexpected character '{}'", b as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn factor(&mut self) -> Result<Expanded, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(self.factor()?.neg());
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.positive_integer()?;
            base.pow(n)
        } else {
            Ok(base)
        }
    }

    fn term(&mut self) -> Result<Expanded, ParseError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = acc.mul(&rhs)?;
        }
        Ok(acc)
    }

    fn expr(&mut self) -> Result<Expanded, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn map(&mut self) -> Result<(Expanded, Expanded, VarNames), ParseError> {
        self.expect(b'(')?;
        let first = self.expr()?;
        self.expect(b',')?;
        let second = self.expr()?;
        self.expect(b')')?;
        if let Some(b) = self.peek() {
            return Err(self.err(format!("trailing input starting at '{}'", b as char)));
        }
        Ok((first, second, self.vars.unwrap_or_default()))
    }
}

fn describe_linear(linear: &[((u32, u32), Complex64)], vars: VarNames) -> String {
    if linear.is_empty() {
        return "0".to_string();
    }
    let mono = |key: (u32, u32)| match key {
        (0, 0) => "1".to_string(),
        (1, 0) => vars.first().to_string(),
        (0, 1) => vars.second().to_string(),
        _ => unreachable!(),
    };
    linear
        .iter()
        .map(|(k, c)| format!("({})*{}", format_complex(*c), mono(*k)))
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Check the linear data of one coordinate and strip it, leaving degree >= 2 terms.
fn check_identity_part(
    expanded: &Expanded,
    coordinate: &'static str,
    index: usize,
    vars: VarNames,
) -> Result<(), ParseError> {
    let own = if index == 0 { (1u32, 0u32) } else { (0u32, 1u32) };
    let one = Complex64::new(1.0, 0.0);
    let linear: Vec<((u32, u32), Complex64)> = expanded
        .terms
        .iter()
        .filter(|(&(a, b), _)| a + b <= 1)
        .map(|(&k, &c)| (k, c))
        .collect();
    let ok = linear.len() == 1 && linear[0].0 == own && linear[0].1 == one;
    if ok {
        return Ok(());
    }
    let var = if index == 0 { vars.first() } else { vars.second() };
    Err(ParseError::LinearPartMismatch {
        coordinate,
        var,
        found: describe_linear(&linear, vars),
    })
}

fn homogeneous_parts<T: Real>(
    first: &Expanded,
    second: &Expanded,
) -> Result<Vec<(u32, HomPoly2<T>, HomPoly2<T>)>, ParseError> {
    let top = first
        .terms
        .keys()
        .chain(second.terms.keys())
        .map(|&(a, b)| a + b)
        .max()
        .unwrap_or(0);
    let mut parts = Vec::new();
    for j in 2..=top {
        let mut p = vec![Complex::new(T::zero(), T::zero()); j as usize + 1];
        let mut q = p.clone();
        let mut any = false;
        for (out, src) in [(&mut p, first), (&mut q, second)] {
            for (&(a, b), &c) in &src.terms {
                if a + b == j {
                    out[b as usize] = Complex::new(T::of(c.re), T::of(c.im));
                    any = true;
                }
            }
        }
        if any {
            parts.push((
                j,
                HomPoly2::new(j, p).expect("length matches degree"),
                HomPoly2::new(j, q).expect("length matches degree"),
            ));
        }
    }
    Ok(parts)
}

/// Parse an expression-form map into homogeneous components.
pub fn parse_map<T: Real>(text: &str) -> Result<PolyMap2<T>, ParseError> {
    let (first, second, vars) = Parser::new(text).map()?;
    check_identity_part(&first, "first", 0, vars)?;
    check_identity_part(&second, "second", 1, vars)?;
    let parts = homogeneous_parts::<T>(&first, &second)?;
    let map = PolyMap2::new(parts).map_err(|_| ParseError::IdentityMap)?;
    Ok(map.with_vars(vars))
}

// ---------------------------------------------------------------------------
// Named families.
// ---------------------------------------------------------------------------

/// The built-in map families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Main example (z[1-(z-w)], w[1+(z-w)]).
    F,
    /// Main example in the chart where the diagonal becomes the first axis.
    Ftilde,
    /// Ftilde plus a*x^(r+1) in the first coordinate.
    G,
    /// The r = 2, a > 0 special case of G.
    H,
    /// G carried back to (z, w) coordinates.
    Gtilde,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::F => "f",
            Family::Ftilde => "ftilde",
            Family::G => "g",
            Family::H => "h",
            Family::Gtilde => "gtilde",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "f" => Some(Family::F),
            "ftilde" => Some(Family::Ftilde),
            "g" => Some(Family::G),
            "h" => Some(Family::H),
            "gtilde" => Some(Family::Gtilde),
            _ => None,
        }
    }
}

/// A map given either as source text or as a family with parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    Text(String),
    Family { family: Family, a: Option<Complex64>, r: Option<u32> },
}

impl MapSource {
    pub fn resolve<T: Real>(&self) -> Result<PolyMap2<T>, ParseError> {
        match self {
            MapSource::Text(text) => parse_map(text),
            MapSource::Family { family, a, r } => builtin(*family, *a, *r),
        }
    }
}

fn re_c<T: Real>(x: f64) -> Complex<T> {
    Complex::new(T::of(x), T::zero())
}

fn zero_c<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Main example: p = -z^2 + z*w, q = z*w - w^2.
pub fn builtin_f<T: Real>() -> PolyMap2<T> {
    let p = HomPoly2::new(2, vec![re_c(-1.0), re_c(1.0), zero_c()]).unwrap();
    let q = HomPoly2::new(2, vec![zero_c(), re_c(1.0), re_c(-1.0)]).unwrap();
    PolyMap2::new(vec![(2, p, q)]).unwrap()
}

/// Conjugated main example: p = -y^2, q = -x*y.
pub fn builtin_ftilde<T: Real>() -> PolyMap2<T> {
    let p = HomPoly2::new(2, vec![zero_c(), zero_c(), re_c(-1.0)]).unwrap();
    let q = HomPoly2::new(2, vec![zero_c(), re_c(-1.0), zero_c()]).unwrap();
    PolyMap2::new(vec![(2, p, q)]).unwrap().with_vars(VarNames::XY)
}

fn family_err(family: &'static str, message: impl Into<String>) -> ParseError {
    ParseError::FamilyConstraint { family, message: message.into() }
}

fn need_a(family: &'static str, a: Option<Complex64>) -> Result<Complex64, ParseError> {
    a.ok_or_else(|| family_err(family, "parameter a is required".to_string()))
}

fn in_nonneg_reals(a: Complex64) -> bool {
    a.im == 0.0 && a.re >= 0.0
}

/// (x - y^2 + a*x^(r+1), y - x*y), valid when a != 0 and r >= 3, or when
/// a is off the nonnegative real axis and r = 2.
pub fn builtin_g<T: Real>(a: Complex64, r: u32) -> Result<PolyMap2<T>, ParseError> {
    if a == Complex64::new(0.0, 0.0) {
        return Err(family_err("g", "requires a != 0".to_string()));
    }
    let case1 = r >= 3;
    let case2 = r == 2 && !in_nonneg_reals(a);
    if !(case1 || case2) {
        return Err(family_err(
            "g",
            format!(
                "requires (1) a != 0 and r >= 3, or (2) a not in R_>=0 and r = 2; got a = {}, r = {r}",
                format_complex(a)
            ),
        ));
    }
    let base = builtin_ftilde::<T>();
    let mut top = vec![Complex::new(T::zero(), T::zero()); r as usize + 2];
    top[0] = Complex::new(T::of(a.re), T::of(a.im));
    let p_top = HomPoly2::new(r + 1, top).unwrap();
    let q_top = HomPoly2::zero(r + 1);
    let (p2, q2) = base.leading();
    PolyMap2::new(vec![(2, p2.clone(), q2.clone()), (r + 1, p_top, q_top)])
        .map(|m| m.with_vars(VarNames::XY))
        .map_err(|e| family_err("g", e.to_string()))
}

/// (x - y^2 + a*x^3, y - x*y) with real a > 0.
pub fn builtin_h<T: Real>(a: Complex64) -> Result<PolyMap2<T>, ParseError> {
    if !(a.im == 0.0 && a.re > 0.0) {
        return Err(family_err(
            "h",
            format!("requires real a > 0; got a = {}", format_complex(a)),
        ));
    }
    let base = builtin_ftilde::<T>();
    let mut top = vec![Complex::new(T::zero(), T::zero()); 4];
    top[0] = re_c(a.re);
    let p_top = HomPoly2::new(3, top).unwrap();
    let (p2, q2) = base.leading();
    PolyMap2::new(vec![(2, p2.clone(), q2.clone()), (3, p_top, HomPoly2::zero(3))])
        .map(|m| m.with_vars(VarNames::XY))
        .map_err(|e| family_err("h", e.to_string()))
}

/// The G family written in (z, w) coordinates: f plus (a/2)(z+w)^(r+1) added
/// to both coordinates.
pub fn builtin_gtilde<T: Real>(a: Complex64, r: u32) -> Result<PolyMap2<T>, ParseError> {
    if r < 2 {
        return Err(family_err("gtilde", format!("requires r >= 2; got r = {r}")));
    }
    if r + 1 > MAX_DEGREE {
        return Err(family_err("gtilde", format!("degree r+1 = {} exceeds cap {MAX_DEGREE}", r + 1)));
    }
    let f = builtin_f::<T>();
    let (p2, q2) = f.leading();
    let half_a = Complex64::new(a.re / 2.0, a.im / 2.0);
    // (a/2)(z+w)^(r+1): binomial coefficients of (z+w)^(r+1) scaled by a/2.
    let mut row = vec![1u128];
    for _ in 0..=r {
        let mut next = vec![1u128; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    let top: Vec<Complex<T>> = row
        .iter()
        .map(|&b| {
            let c = half_a * b as f64;
            Complex::new(T::of(c.re), T::of(c.im))
        })
        .collect();
    let p_top = HomPoly2::new(r + 1, top.clone()).unwrap();
    let q_top = HomPoly2::new(r + 1, top).unwrap();
    let mut parts = vec![(2, p2.clone(), q2.clone())];
    if a != Complex64::new(0.0, 0.0) {
        parts.push((r + 1, p_top, q_top));
    }
    PolyMap2::new(parts).map_err(|e| family_err("gtilde", e.to_string()))
}

/// Instantiate a family with optional parameters, enforcing its constraints.
pub fn builtin<T: Real>(
    family: Family,
    a: Option<Complex64>,
    r: Option<u32>,
) -> Result<PolyMap2<T>, ParseError> {
    match family {
        Family::F | Family::Ftilde => {
            if a.is_some() || r.is_some() {
                return Err(family_err(family.name().to_string().leak(), "takes no parameters".to_string()));
            }
            Ok(if family == Family::F { builtin_f() } else { builtin_ftilde() })
        }
        Family::G => {
            let a = need_a("g", a)?;
            let r = r.ok_or_else(|| family_err("g", "parameter r is required".to_string()))?;
            builtin_g(a, r)
        }
        Family::H => {
            if let Some(r) = r {
                if r != 2 {
                    return Err(family_err("h", format!("r is fixed at 2; got r = {r}")));
                }
            }
            builtin_h(need_a("h", a)?)
        }
        Family::Gtilde => {
            let a = need_a("gtilde", a)?;
            let r = r.ok_or_else(|| family_err("gtilde", "parameter r is required".to_string()))?;
            builtin_gtilde(a, r)
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical printing.
// ---------------------------------------------------------------------------

/// Canonical complex literal: `a+bi` with no interior whitespace, real and
/// imaginary parts via the shortest round-trip decimal form.
pub fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        if c.im == 1.0 {
            "i".to_string()
        } else if c.im == -1.0 {
            "-i".to_string()
        } else {
            format!("{}i", c.im)
        }
    } else if c.im < 0.0 {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

fn monomial(vars: VarNames, zexp: u32, wexp: u32) -> String {
    let mut parts = Vec::new();
    for (var, e) in [(vars.first(), zexp), (vars.second(), wexp)] {
        match e {
            0 => {}
            1 => parts.push(var.to_string()),
            _ => parts.push(format!("{var}^{e}")),
        }
    }
    parts.join("*")
}

fn push_term(out: &mut String, c: Complex64, mono: String) {
    // Real and purely imaginary coefficients fold their sign into the
    // separator; mixed complex coefficients print parenthesized.
    let (neg, body) = if c.im == 0.0 {
        let mag = c.re.abs();
        let lead = if mag == 1.0 { String::new() } else { format!("{mag}*") };
        (c.re < 0.0, format!("{lead}{mono}"))
    } else if c.re == 0.0 {
        let mag = c.im.abs();
        let lead = if mag == 1.0 { "i*".to_string() } else { format!("{mag}i*") };
        (c.im < 0.0, format!("{lead}{mono}"))
    } else {
        (false, format!("({})*{mono}", format_complex(c)))
    };
    out.push_str(if neg { " - " } else { " + " });
    out.push_str(&body);
}

fn format_coordinate<T: Real>(map: &PolyMap2<T>, index: usize) -> String {
    let vars = map.vars();
    let mut out = String::new();
    out.push(if index == 0 { vars.first() } else { vars.second() });
    for (j, p, q) in map.components() {
        let poly = if index == 0 { p } else { q };
        for (i, &c) in poly.coeffs().iter().enumerate() {
            if c.re.is_zero() && c.im.is_zero() {
                continue;
            }
            let c64 = Complex64::new(c.re.to_f64().unwrap(), c.im.to_f64().unwrap());
            push_term(&mut out, c64, monomial(vars, j - i as u32, i as u32));
        }
    }
    out
}

/// Canonical textual form: identity monomial first, then monomials by degree
/// ascending and z-power descending; `parse_map` round-trips the output
/// coefficient-exactly.
pub fn format_map<T: Real>(map: &PolyMap2<T>) -> String {
    format!("({}, {})", format_coordinate(map, 0), format_coordinate(map, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{conjugate_linear, LinearChange};

    #[test]
    fn parses_main_example() {
        let m: PolyMap2<f64> = parse_map("(z*(1-(z-w)), w*(1+(z-w)))").unwrap();
        assert!(m.coeffs_equal(&builtin_f()));
        assert_eq!(m.vars(), VarNames::ZW);
    }

    #[test]
    fn identity_rejected() {
        assert_eq!(parse_map::<f64>("(z, w)").unwrap_err(), ParseError::IdentityMap);
    }

    #[test]
    fn mixed_degree_map_expands() {
        let m: PolyMap2<f64> = parse_map("(x - y^2 + 0.5*x^3, y - x*y)").unwrap();
        assert_eq!(m.order(), 2);
        assert_eq!(m.top_degree(), 3);
        let (p3, q3) = m.component(3).unwrap();
        assert_eq!(p3.coeff(0), Complex64::new(0.5, 0.0));
        assert!(q3.is_zero());
        let (p2, q2) = m.component(2).unwrap();
        assert_eq!(p2.coeff(2), Complex64::new(-1.0, 0.0));
        assert_eq!(q2.coeff(1), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_map::<f64>("(z + , w)").unwrap_err();
        match err {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 5),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn linear_mismatch_names_coefficients() {
        let err = parse_map::<f64>("(z + 0.5*w - z^2, w + w^2)").unwrap_err();
        match err {
            ParseError::LinearPartMismatch { found, .. } => {
                assert!(found.contains("0.5"), "message should name the coefficient: {found}");
            }
            other => panic!("expected linear mismatch, got {other:?}"),
        }
    }

    #[test]
    fn mixing_variable_pairs_rejected() {
        assert!(matches!(
            parse_map::<f64>("(z - y^2, w - z*w)").unwrap_err(),
            ParseError::Syntax { .. }
        ));
    }

    #[test]
    fn degree_cap_enforced() {
        let err = parse_map::<f64>("(z + z^40*w^30, w + w^2)").unwrap_err();
        assert!(matches!(err, ParseError::DegreeTooLarge { degree: 70 }));
    }

    #[test]
    fn complex_literals() {
        let m: PolyMap2<f64> = parse_map("(z + (1+2i)*z^2, w + i*w^2)").unwrap();
        let (p, q) = m.leading();
        assert_eq!(p.coeff(0), Complex64::new(1.0, 2.0));
        assert_eq!(q.coeff(2), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn rational_literals() {
        let m: PolyMap2<f64> = parse_map("(z + 1/3*z^2, w - 2/4*w^2)").unwrap();
        let (p, q) = m.leading();
        assert_eq!(p.coeff(0), Complex64::new(1.0 / 3.0, 0.0));
        assert_eq!(q.coeff(2), Complex64::new(-0.5, 0.0));
    }

    #[test]
    fn builtin_ftilde_prints_canonically() {
        assert_eq!(format_map(&builtin_ftilde::<f64>()), "(x - y^2, y - x*y)");
    }

    #[test]
    fn builtin_h_matches_example() {
        let h: PolyMap2<f64> = builtin_h(Complex64::new(0.1, 0.0)).unwrap();
        assert_eq!(format_map(&h), "(x - y^2 + 0.1*x^3, y - x*y)");
    }

    #[test]
    fn g_constraint_table() {
        assert!(builtin_g::<f64>(Complex64::new(1.0, 0.0), 2).is_err());
        assert!(builtin_g::<f64>(Complex64::new(1.0, 0.0), 3).is_ok());
        assert!(builtin_g::<f64>(Complex64::new(-1.0, 0.0), 2).is_ok());
        assert!(builtin_g::<f64>(Complex64::new(0.5, 0.5), 2).is_ok());
        assert!(builtin_g::<f64>(Complex64::new(0.0, 0.0), 3).is_err());
        assert!(builtin_h::<f64>(Complex64::new(-0.1, 0.0)).is_err());
        assert!(builtin_h::<f64>(Complex64::new(0.1, 0.0)).is_ok());
    }

    #[test]
    fn g_complex_coefficient_renders_with_parens() {
        let g: PolyMap2<f64> = builtin_g(Complex64::new(1.0, 2.0), 3).unwrap();
        let text = format_map(&g);
        assert!(text.contains("(1+2i)*x^4"), "{text}");
    }

    #[test]
    fn round_trip_all_builtins() {
        let maps: Vec<PolyMap2<f64>> = vec![
            builtin_f(),
            builtin_ftilde(),
            builtin_g(Complex64::new(1.0, 0.0), 3).unwrap(),
            builtin_g(Complex64::new(-1.0, 0.0), 2).unwrap(),
            builtin_h(Complex64::new(0.1, 0.0)).unwrap(),
            builtin_gtilde(Complex64::new(-0.1, 0.0), 2).unwrap(),
            builtin_gtilde(Complex64::new(0.25, -1.5), 5).unwrap(),
        ];
        for m in maps {
            let back: PolyMap2<f64> = parse_map(&format_map(&m)).unwrap();
            assert!(back.coeffs_equal(&m), "round trip failed for {}", format_map(&m));
        }
    }

    #[test]
    fn f_conjugates_to_ftilde() {
        let f: PolyMap2<f64> = builtin_f();
        let conj = conjugate_linear(&f, &LinearChange::sum_difference());
        assert!(conj.coeff_distance(&builtin_ftilde()) < 1e-14);
    }

    #[test]
    fn gtilde_conjugates_to_g() {
        for (a, r) in [(Complex64::new(1.0, 0.0), 3), (Complex64::new(-0.3, 0.7), 4)] {
            let gt: PolyMap2<f64> = builtin_gtilde(a, r).unwrap();
            let conj = conjugate_linear(&gt, &LinearChange::sum_difference());
            let g: PolyMap2<f64> = builtin_g(a, r).unwrap();
            assert!(conj.coeff_distance(&g) < 1e-12, "a={a}, r={r}");
        }
        // r = 2 with a > 0 lands on the h family instead.
        let gt: PolyMap2<f64> = builtin_gtilde(Complex64::new(0.1, 0.0), 2).unwrap();
        let conj = conjugate_linear(&gt, &LinearChange::sum_difference());
        let h: PolyMap2<f64> = builtin_h(Complex64::new(0.1, 0.0)).unwrap();
        assert!(conj.coeff_distance(&h) < 1e-12);
    }
}
