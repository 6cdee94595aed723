//! Elements of `G * <x>` in free-product normal form.
//!
//! A word is stored as `c0 x^e1 c1 ... x^em cm`: `m + 1` constants and `m`
//! nonzero exponents. In normal form every interior constant is nontrivial;
//! the outer two may be trivial.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{enumerate_sphere, BackendSpec, GroupElement};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MixedWord {
    constants: Vec<GroupElement>,
    exponents: Vec<i64>,
    backend: Arc<BackendSpec>,
}

/// One piece of an unnormalized product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Syllable {
    Constant(GroupElement),
    Variable(i64),
}

impl MixedWord {
    pub fn identity(backend: &Arc<BackendSpec>) -> Self {
        MixedWord {
            constants: vec![GroupElement::identity(backend)],
            exponents: Vec::new(),
            backend: Arc::clone(backend),
        }
    }

    pub fn constant(c: GroupElement) -> Self {
        let backend = Arc::clone(c.backend());
        MixedWord {
            constants: vec![c],
            exponents: Vec::new(),
            backend,
        }
    }

    /// `x^e`.
    pub fn variable(backend: &Arc<BackendSpec>, exponent: i64) -> Self {
        Self::from_syllables(backend, [Syllable::Variable(exponent)]).expect("single backend")
    }

    /// Normalizes an arbitrary product of constants and x-powers.
    pub fn from_syllables<I>(backend: &Arc<BackendSpec>, syllables: I) -> Result<Self>
    where
        I: IntoIterator<Item = Syllable>,
    {
        let mut w = Self::identity(backend);
        for s in syllables {
            match s {
                Syllable::Constant(c) => {
                    if !c.same_backend(&w.constants[0]) {
                        return Err(Error::BackendMismatch);
                    }
                    w.push_constant(&c);
                }
                Syllable::Variable(e) => w.push_variable(e),
            }
        }
        Ok(w)
    }

    /// Builds from raw parts, normalizing.
    pub fn from_parts(constants: Vec<GroupElement>, exponents: Vec<i64>) -> Result<Self> {
        if constants.len() != exponents.len() + 1 {
            return Err(Error::Parse("constants must outnumber exponents by one".into()));
        }
        let backend = Arc::clone(constants[0].backend());
        let mut syllables = Vec::with_capacity(constants.len() + exponents.len());
        for (i, c) in constants.into_iter().enumerate() {
            syllables.push(Syllable::Constant(c));
            if let Some(&e) = exponents.get(i) {
                syllables.push(Syllable::Variable(e));
            }
        }
        Self::from_syllables(&backend, syllables)
    }

    fn push_constant(&mut self, c: &GroupElement) {
        self.constants.last_mut().expect("never empty").append(c.letters());
    }

    fn push_variable(&mut self, e: i64) {
        if e == 0 {
            return;
        }
        let last_trivial = self.constants.last().expect("never empty").is_identity();
        if last_trivial && !self.exponents.is_empty() {
            self.constants.pop();
            let merged = self.exponents.pop().unwrap() + e;
            if merged != 0 {
                self.exponents.push(merged);
                self.constants.push(GroupElement::identity(&self.backend));
            }
        } else {
            self.exponents.push(e);
            self.constants.push(GroupElement::identity(&self.backend));
        }
    }

    /// Right-multiplies in place.
    pub fn append(&mut self, other: &MixedWord) {
        for (i, c) in other.constants.iter().enumerate() {
            self.push_constant(c);
            if let Some(&e) = other.exponents.get(i) {
                self.push_variable(e);
            }
        }
    }

    pub fn mul(&self, other: &MixedWord) -> MixedWord {
        let mut out = self.clone();
        out.append(other);
        out
    }

    pub fn inverse(&self) -> MixedWord {
        MixedWord {
            constants: self.constants.iter().rev().map(GroupElement::inverse).collect(),
            exponents: self.exponents.iter().rev().map(|e| -e).collect(),
            backend: Arc::clone(&self.backend),
        }
    }

    pub fn pow(&self, k: u32) -> MixedWord {
        let mut out = Self::identity(&self.backend);
        for _ in 0..k {
            out.append(self);
        }
        out
    }

    pub fn syllables(&self) -> Vec<Syllable> {
        let mut out = Vec::with_capacity(2 * self.constants.len());
        for (i, c) in self.constants.iter().enumerate() {
            out.push(Syllable::Constant(c.clone()));
            if let Some(&e) = self.exponents.get(i) {
                out.push(Syllable::Variable(e));
            }
        }
        out
    }

    pub fn constants(&self) -> &[GroupElement] {
        &self.constants
    }

    pub fn exponents(&self) -> &[i64] {
        &self.exponents
    }

    pub fn backend(&self) -> &Arc<BackendSpec> {
        &self.backend
    }

    /// Number of x-syllables.
    pub fn variable_syllables(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_identity(&self) -> bool {
        self.exponents.is_empty() && self.constants[0].is_identity()
    }

    pub fn is_constant(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Length in the generating set `S` plus `x`: x^e costs `|e|`.
    pub fn mixed_length(&self) -> usize {
        self.constants.iter().map(GroupElement::len).sum::<usize>()
            + self.exponents.iter().map(|e| e.unsigned_abs() as usize).sum::<usize>()
    }

    /// Longest constant; membership in `W_n` is `max_constant_length() <= n`.
    pub fn max_constant_length(&self) -> usize {
        self.constants.iter().map(GroupElement::len).max().unwrap_or(0)
    }

    pub fn in_w(&self, n: usize) -> bool {
        !self.is_identity() && self.max_constant_length() <= n
    }

    /// Image under `x -> g`.
    pub fn evaluate(&self, g: &GroupElement) -> Result<GroupElement> {
        if !g.same_backend(&self.constants[0]) {
            return Err(Error::BackendMismatch);
        }
        Ok(self.evaluate_unchecked(g))
    }

    pub(crate) fn evaluate_unchecked(&self, g: &GroupElement) -> GroupElement {
        let g_inv = g.inverse();
        let mut out = self.constants[0].clone();
        for (e, c) in self.exponents.iter().zip(&self.constants[1..]) {
            let base = if *e > 0 { g } else { &g_inv };
            for _ in 0..e.unsigned_abs() {
                out.append(base.letters());
            }
            out.append(c.letters());
        }
        out
    }

    /// The constants, their inverses and the identity.
    pub fn constants_closure(&self) -> BTreeSet<GroupElement> {
        let mut out = BTreeSet::new();
        out.insert(GroupElement::identity(&self.backend));
        for c in &self.constants {
            out.insert(c.inverse());
            out.insert(c.clone());
        }
        out
    }

    /// Splits off a conjugator so that `w = conjugator * core * conjugator^-1`.
    ///
    /// A nonconstant core has the shape `x^e1 c1 ... x^em cm` with `cm`
    /// nontrivial (or is a single x-power), so every cyclic permutation of its
    /// syllables is again in normal form.
    pub fn cyclic_reduce(&self) -> Result<CyclicDecomposition> {
        if self.is_identity() {
            return Err(Error::TrivialWord);
        }
        let mut conjugator = MixedWord::identity(&self.backend);
        let mut constants = self.constants.clone();
        let mut exponents = self.exponents.clone();
        loop {
            if exponents.is_empty() {
                break;
            }
            // c0 x^e1 ... x^em cm = c0 (x^e1 ... x^em cm c0) c0^-1
            let c0 = constants.remove(0);
            let last = constants.pop().unwrap();
            let mut tail = last;
            tail.append(c0.letters());
            conjugator.push_constant(&c0);
            if !tail.is_identity() || exponents.len() == 1 {
                constants.insert(0, GroupElement::identity(&self.backend));
                constants.push(tail);
                break;
            }
            // x^e1 c1 ... c_{m-1} x^em = x^-em (x^{e1+em} c1 ... c_{m-1}) x^em
            let em = exponents.pop().unwrap();
            conjugator.push_variable(-em);
            let merged = exponents[0] + em;
            if merged != 0 {
                exponents[0] = merged;
                constants.insert(0, GroupElement::identity(&self.backend));
                break;
            }
            // exponents cancel: the core is c1 x^e2 ... x^e_{m-1} c_{m-1}; go round again
            exponents.remove(0);
        }
        let core = MixedWord {
            constants,
            exponents,
            backend: Arc::clone(&self.backend),
        };
        Ok(CyclicDecomposition { core, conjugator })
    }

    /// True when the word cannot be shortened by conjugation: at most one
    /// end constant is nontrivial, and the ends only meet trivially for a
    /// single x-power.
    pub fn is_cyclically_reduced(&self) -> bool {
        let m = self.exponents.len();
        if m == 0 {
            return true;
        }
        let first = &self.constants[0];
        let last = &self.constants[m];
        if !first.is_identity() && !last.is_identity() {
            return false;
        }
        !(first.is_identity() && last.is_identity()) || m == 1
    }

    /// Text in the CLI grammar; `e` for the identity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.constants.iter().enumerate() {
            s.push_str(&c.to_text());
            if let Some(&e) = self.exponents.get(i) {
                let sym = if e > 0 { 'x' } else { 'X' };
                let k = e.unsigned_abs();
                if k <= 3 {
                    s.extend(std::iter::repeat_n(sym, k as usize));
                } else {
                    s.push_str(&format!("{sym}^{k}"));
                }
            }
        }
        if s.is_empty() {
            s.push('e');
        }
        s
    }
}

impl fmt::Display for MixedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for MixedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MixedWord({self})")
    }
}

impl Serialize for MixedWord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_text())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicDecomposition {
    pub core: MixedWord,
    pub conjugator: MixedWord,
}

/// Parses plain symbol text: alphabet letters, `x` and `X`.
pub fn parse_mixed(text: &str, backend: &Arc<BackendSpec>) -> Result<MixedWord> {
    let mut w = MixedWord::identity(backend);
    for (position, symbol) in text.chars().enumerate() {
        match symbol {
            'x' => w.push_variable(1),
            'X' => w.push_variable(-1),
            _ => {
                let l = backend
                    .letter(symbol)
                    .ok_or(Error::UnknownSymbol { symbol, position })?;
                let g = GroupElement::generator(backend, l);
                w.push_constant(&g);
            }
        }
    }
    Ok(w)
}

/// Parses the extended grammar
///
/// ```text
/// expr := term*
/// term := (symbol | '(' expr ')') ('^' int)?
/// ```
///
/// Whitespace is ignored. The whole text `e` (when `e` is not a generator
/// symbol) or `1` denotes the identity.
pub fn parse_mixed_expr(text: &str, backend: &Arc<BackendSpec>) -> Result<MixedWord> {
    let chars: Vec<(usize, char)> = text.chars().enumerate().filter(|(_, c)| !c.is_whitespace()).collect();
    let trimmed: String = chars.iter().map(|&(_, c)| c).collect();
    if trimmed.is_empty() || trimmed == "1" || (trimmed == "e" && backend.letter('e').is_none()) {
        return Ok(MixedWord::identity(backend));
    }
    let mut parser = ExprParser { chars, at: 0, backend };
    let w = parser.expr(0)?;
    match parser.peek() {
        None => Ok(w),
        Some((position, c)) => Err(Error::Parse(format!("unmatched {c:?} at position {position}"))),
    }
}

struct ExprParser<'a> {
    chars: Vec<(usize, char)>,
    at: usize,
    backend: &'a Arc<BackendSpec>,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<(usize, char)> {
        self.chars.get(self.at).copied()
    }

    fn expr(&mut self, depth: usize) -> Result<MixedWord> {
        let mut w = MixedWord::identity(self.backend);
        while let Some((position, symbol)) = self.peek() {
            if symbol == ')' {
                if depth == 0 {
                    return Err(Error::Parse(format!("unmatched ')' at position {position}")));
                }
                break;
            }
            self.at += 1;
            let base = match symbol {
                '(' => {
                    let inner = self.expr(depth + 1)?;
                    if self.peek().map(|p| p.1) != Some(')') {
                        return Err(Error::Parse(format!("unclosed '(' at position {position}")));
                    }
                    self.at += 1;
                    inner
                }
                'x' => MixedWord::variable(self.backend, 1),
                'X' => MixedWord::variable(self.backend, -1),
                _ => {
                    let l = self
                        .backend
                        .letter(symbol)
                        .ok_or(Error::UnknownSymbol { symbol, position })?;
                    MixedWord::constant(GroupElement::generator(self.backend, l))
                }
            };
            let power = self.exponent(symbol)?;
            let base = if power < 0 { base.inverse() } else { base };
            let k = u32::try_from(power.unsigned_abs())
                .map_err(|_| Error::Parse(format!("exponent {power} is too large")))?;
            w.append(&base.pow(k));
        }
        Ok(w)
    }

    fn exponent(&mut self, after: char) -> Result<i64> {
        if self.peek().map(|p| p.1) != Some('^') {
            return Ok(1);
        }
        self.at += 1;
        let start = self.at;
        if matches!(self.peek(), Some((_, '-' | '+'))) {
            self.at += 1;
        }
        while matches!(self.peek(), Some((_, c)) if c.is_ascii_digit()) {
            self.at += 1;
        }
        let digits: String = self.chars[start..self.at].iter().map(|&(_, c)| c).collect();
        digits
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent {digits:?} after {after:?}")))
    }
}

/// Parses a group element in the extended grammar (no variable allowed).
pub fn parse_element_expr(text: &str, backend: &Arc<BackendSpec>) -> Result<GroupElement> {
    let w = parse_mixed_expr(text, backend)?;
    if !w.is_constant() {
        return Err(Error::Parse(format!("{text:?} mentions the variable x")));
    }
    Ok(w.constants[0].clone())
}

pub fn reduce(backend: &Arc<BackendSpec>, syllables: Vec<Syllable>) -> Result<MixedWord> {
    MixedWord::from_syllables(backend, syllables)
}

pub fn evaluate(w: &MixedWord, g: &GroupElement) -> Result<GroupElement> {
    w.evaluate(g)
}

pub fn mixed_length(w: &MixedWord) -> usize {
    w.mixed_length()
}

pub fn constants_closure(w: &MixedWord) -> BTreeSet<GroupElement> {
    w.constants_closure()
}

pub fn cyclic_reduce(w: &MixedWord) -> Result<CyclicDecomposition> {
    w.cyclic_reduce()
}

/// Shape of a normal-form word: constant lengths and exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Pattern {
    constant_lengths: Vec<usize>,
    exponents: Vec<i64>,
}

/// Patterns of total length exactly `len`, in a fixed order: fewer
/// x-syllables first, then by exponents, then by constant lengths.
fn patterns_of_length(len: usize) -> Vec<Pattern> {
    let mut out = Vec::new();
    // m = 0: a single nontrivial constant
    if len > 0 {
        out.push(Pattern {
            constant_lengths: vec![len],
            exponents: Vec::new(),
        });
    }
    for m in 1..=len {
        // budget for |e_i| totals t >= m, interior constants need m - 1 letters
        for t in m..=len {
            if t + (m - 1) > len {
                break;
            }
            let const_total = len - t;
            let mut exps = Vec::new();
            exponent_sequences(m, t, &mut Vec::new(), &mut exps);
            let mut lens = Vec::new();
            constant_length_sequences(m + 1, const_total, &mut Vec::new(), &mut lens);
            for e in &exps {
                for l in &lens {
                    out.push(Pattern {
                        constant_lengths: l.clone(),
                        exponents: e.clone(),
                    });
                }
            }
        }
    }
    out
}

fn exponent_sequences(m: usize, total: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if cur.len() == m {
        if total == 0 {
            out.push(cur.clone());
        }
        return;
    }
    let remaining = m - cur.len();
    if total < remaining {
        return;
    }
    for a in 1..=(total - (remaining - 1)) {
        for sign in [1i64, -1] {
            cur.push(sign * a as i64);
            exponent_sequences(m, total - a, cur, out);
            cur.pop();
        }
    }
}

/// `slots` lengths summing to `total`; interior slots at least 1.
fn constant_length_sequences(slots: usize, total: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let i = cur.len();
    if i == slots {
        if total == 0 {
            out.push(cur.clone());
        }
        return;
    }
    let min = if i == 0 || i == slots - 1 { 0 } else { 1 };
    let interior_left = (i + 1..slots.saturating_sub(1)).count();
    if total < min + interior_left {
        return;
    }
    for l in min..=(total - interior_left) {
        cur.push(l);
        constant_length_sequences(slots, total - l, cur, out);
        cur.pop();
    }
}

/// Exact number of nontrivial normal forms of length at most `n`.
pub fn mixed_ball_count(n: usize, backend: &BackendSpec) -> u128 {
    let s = backend.generator_count() as u128;
    let sphere = |r: usize| -> u128 {
        if r == 0 {
            1
        } else {
            (s - 1).saturating_pow(r as u32 - 1).saturating_mul(s)
        }
    };
    (1..=n)
        .flat_map(patterns_of_length)
        .map(|p| {
            p.constant_lengths
                .iter()
                .fold(1u128, |acc, &l| acc.saturating_mul(sphere(l)))
        })
        .fold(0u128, u128::saturating_add)
}

/// Every nontrivial element of `G * <x>` of length at most `n`, once each.
///
/// Order: by total length, then by syllable pattern, then shortlex on the
/// constants from left to right.
pub fn enumerate_mixed_ball(n: usize, backend: &Arc<BackendSpec>, budget: u64) -> Result<Vec<MixedWord>> {
    let required = mixed_ball_count(n, backend);
    if required > u128::from(budget) {
        return Err(Error::BudgetExceeded {
            what: "mixed-word enumeration",
            required,
            limit: budget,
        });
    }
    let spheres: Vec<Vec<GroupElement>> = (0..=n)
        .map(|r| enumerate_sphere(r, backend, u64::MAX))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(required as usize);
    for len in 1..=n {
        for p in patterns_of_length(len) {
            let choices: Vec<&Vec<GroupElement>> = p.constant_lengths.iter().map(|&l| &spheres[l]).collect();
            let mut idx = vec![0usize; choices.len()];
            'product: loop {
                out.push(MixedWord {
                    constants: idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect(),
                    exponents: p.exponents.clone(),
                    backend: Arc::clone(backend),
                });
                // odometer, rightmost constant fastest: left-to-right shortlex
                let mut k = idx.len();
                loop {
                    if k == 0 {
                        break 'product;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
    }
    debug_assert_eq!(out.len() as u128, required);
    Ok(out)
}

/// Every element of `G * <x>` of length at most `n`, identity first.
pub fn enumerate_mixed_ball_with_identity(n: usize, backend: &Arc<BackendSpec>, budget: u64) -> Result<Vec<MixedWord>> {
    let mut out = vec![MixedWord::identity(backend)];
    out.extend(enumerate_mixed_ball(n, backend, budget.saturating_sub(1))?);
    Ok(out)
}

/// Random nontrivial word with constants of length at most `n`: between 1
/// and `max_syllables` x-syllables, exponents in `+-1 ..= +-max_exponent`.
///
/// Interior constants are nontrivial, so the result is already normal.
pub fn random_w_n<R: rand::Rng + ?Sized>(
    backend: &Arc<BackendSpec>,
    n: usize,
    max_syllables: usize,
    max_exponent: u32,
    rng: &mut R,
) -> MixedWord {
    let m = rng.gen_range(1..=max_syllables.max(1));
    let mut constants = Vec::with_capacity(m + 1);
    let mut exponents = Vec::with_capacity(m);
    for i in 0..=m {
        let min = if i == 0 || i == m || n == 0 { 0 } else { 1 };
        let len = rng.gen_range(min..=n);
        constants.push(GroupElement::random_reduced(backend, len, rng));
        if i < m {
            let e = rng.gen_range(1..=max_exponent.max(1)) as i64;
            exponents.push(if rng.gen_bool(0.5) { e } else { -e });
        }
    }
    MixedWord::from_parts(constants, exponents).expect("parts are consistent")
}

/// Every word of `W_n` with at most `max_syllables` nontrivial syllables
/// (constants and x-powers together) and exponents in `exponents`.
pub fn enumerate_w_n(
    backend: &Arc<BackendSpec>,
    n: usize,
    max_syllables: usize,
    exponents: &[i64],
    budget: u64,
) -> Result<Vec<MixedWord>> {
    let ball = crate::group::enumerate_ball(n, backend, budget)?;
    let nontrivial: Vec<GroupElement> = ball.into_iter().filter(|g| !g.is_identity()).collect();
    let mut out = Vec::new();
    // x-syllable count m, each end constant present or absent
    for m in 0..=max_syllables {
        for lead in [false, true] {
            for trail in [false, true] {
                let syllables = m + m.saturating_sub(1) + usize::from(lead) + usize::from(trail);
                if m == 0 && (trail || !lead) {
                    continue;
                }
                if syllables > max_syllables {
                    continue;
                }
                let slots = if m == 0 { 1 } else { m + 1 };
                let mut count: u128 = (exponents.len() as u128).pow(m as u32);
                for i in 0..slots {
                    let present = m == 0 || (i == 0 && lead) || (i == m && trail) || (i > 0 && i < m);
                    if present {
                        count = count.saturating_mul(nontrivial.len() as u128);
                    }
                }
                if (out.len() as u128).saturating_add(count) > u128::from(budget) {
                    return Err(Error::BudgetExceeded {
                        what: "W_n enumeration",
                        required: (out.len() as u128).saturating_add(count),
                        limit: budget,
                    });
                }
                let mut partial: Vec<(Vec<GroupElement>, Vec<i64>)> = vec![(Vec::new(), Vec::new())];
                for i in 0..slots {
                    let present = m == 0 || (i == 0 && lead) || (i == m && trail) || (i > 0 && i < m);
                    let mut next = Vec::new();
                    for (cs, es) in &partial {
                        let choices: Vec<GroupElement> = if present {
                            nontrivial.clone()
                        } else {
                            vec![GroupElement::identity(backend)]
                        };
                        for c in choices {
                            if i < m {
                                for &e in exponents {
                                    let mut cs = cs.clone();
                                    cs.push(c.clone());
                                    let mut es = es.clone();
                                    es.push(e);
                                    next.push((cs, es));
                                }
                            } else {
                                let mut cs = cs.clone();
                                cs.push(c.clone());
                                next.push((cs, es.clone()));
                            }
                        }
                    }
                    partial = next;
                }
                for (cs, es) in partial {
                    out.push(MixedWord::from_parts(cs, es)?);
                }
            }
        }
    }
    Ok(out)
}
