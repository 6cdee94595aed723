//! Free groups with exact word arithmetic.
//!
//! Elements are freely reduced words over an alphabet of `2k` symbols. A
//! generator sits at even index `2i` of the alphabet and its inverse at
//! `2i + 1`, so inversion of a letter code is `code ^ 1` and the alphabet's
//! declared order (`a < A < b < B < ...`) is the numeric order of codes.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Letter code: `2i` is generator `i`, `2i + 1` its inverse.
pub type Letter = u8;

#[inline]
pub fn inverse_letter(l: Letter) -> Letter {
    l ^ 1
}

/// Symbols reserved for the free variable of `G * <x>`.
pub const VARIABLE_SYMBOLS: [char; 2] = ['x', 'X'];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    FreeGroup,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BackendSpec {
    pub kind: BackendKind,
    pub rank: usize,
    /// `2 * rank` symbols; generator then inverse for each generator.
    pub alphabet: Vec<char>,
}

impl BackendSpec {
    /// `F_k` on the standard alphabet `a A b B c C ...`, skipping `x`.
    pub fn free(rank: usize) -> Result<Arc<Self>> {
        let lower: Vec<char> = ('a'..='z').filter(|c| !VARIABLE_SYMBOLS.contains(c)).collect();
        if rank > lower.len() {
            return Err(Error::InvalidBackend(format!(
                "rank {rank} exceeds the {} letters of the standard alphabet",
                lower.len()
            )));
        }
        let alphabet = lower[..rank]
            .iter()
            .flat_map(|&c| [c, c.to_ascii_uppercase()])
            .collect();
        Self::with_alphabet(rank, alphabet)
    }

    pub fn with_alphabet(rank: usize, alphabet: Vec<char>) -> Result<Arc<Self>> {
        if rank < 2 {
            return Err(Error::InvalidBackend(format!("rank must be at least 2 (got {rank})")));
        }
        if alphabet.len() != 2 * rank {
            return Err(Error::InvalidBackend(format!(
                "alphabet has {} symbols, expected {}",
                alphabet.len(),
                2 * rank
            )));
        }
        if rank * 2 > usize::from(Letter::MAX) {
            return Err(Error::InvalidBackend("rank too large".into()));
        }
        for (i, c) in alphabet.iter().enumerate() {
            if VARIABLE_SYMBOLS.contains(c) || c.is_whitespace() || *c == '^' {
                return Err(Error::InvalidBackend(format!("symbol {c:?} is reserved")));
            }
            if alphabet[..i].contains(c) {
                return Err(Error::InvalidBackend(format!("duplicate symbol {c:?}")));
            }
        }
        Ok(Arc::new(BackendSpec {
            kind: BackendKind::FreeGroup,
            rank,
            alphabet,
        }))
    }

    pub fn generator_count(&self) -> usize {
        self.alphabet.len()
    }

    pub fn letter(&self, symbol: char) -> Option<Letter> {
        self.alphabet.iter().position(|&c| c == symbol).map(|i| i as Letter)
    }

    pub fn symbol(&self, letter: Letter) -> char {
        self.alphabet[usize::from(letter)]
    }

    /// Hyperbolicity constant of the Cayley graph (a tree).
    pub fn delta(&self) -> f64 {
        match self.kind {
            BackendKind::FreeGroup => 0.0,
        }
    }

    /// Exact ball size `1 + sum_{j=1..r} 2k (2k-1)^{j-1}`, saturating.
    pub fn ball_size(&self, radius: usize) -> u128 {
        let s = self.generator_count() as u128;
        let mut total: u128 = 1;
        let mut sphere: u128 = s;
        for _ in 0..radius {
            total = total.saturating_add(sphere);
            sphere = sphere.saturating_mul(s - 1);
        }
        total
    }

    pub fn label(&self) -> String {
        format!("free:{}:{}", self.rank, self.alphabet.iter().collect::<String>())
    }
}

/// The arithmetic and geometry every backend provides.
///
/// Only the free group implements it today; a free product of finite
/// groups would slot in behind the same calls.
pub trait CayleyGroup {
    fn identity(self: &Arc<Self>) -> GroupElement;
    fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement>;
    fn invert(&self, a: &GroupElement) -> GroupElement;
    fn word_length(&self, a: &GroupElement) -> usize;
    /// Vertices of the canonical geodesic from `a` to `b`.
    fn geodesic_vertices(&self, a: &GroupElement, b: &GroupElement) -> Result<Vec<GroupElement>>;
}

impl CayleyGroup for BackendSpec {
    fn identity(self: &Arc<Self>) -> GroupElement {
        GroupElement {
            letters: Vec::new(),
            backend: Arc::clone(self),
        }
    }

    fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        a.check_same(b)?;
        let mut out = a.clone();
        out.append(&b.letters);
        Ok(out)
    }

    fn invert(&self, a: &GroupElement) -> GroupElement {
        GroupElement {
            letters: a.letters.iter().rev().map(|&l| inverse_letter(l)).collect(),
            backend: Arc::clone(&a.backend),
        }
    }

    fn word_length(&self, a: &GroupElement) -> usize {
        a.letters.len()
    }

    fn geodesic_vertices(&self, a: &GroupElement, b: &GroupElement) -> Result<Vec<GroupElement>> {
        let step = self.multiply(&self.invert(a), b)?;
        let mut current = a.clone();
        let mut out = Vec::with_capacity(step.len() + 1);
        out.push(current.clone());
        for &l in &step.letters {
            current.push(l);
            out.push(current.clone());
        }
        Ok(out)
    }
}

/// A freely reduced word on a backend.
#[derive(Clone)]
pub struct GroupElement {
    letters: Vec<Letter>,
    backend: Arc<BackendSpec>,
}

impl GroupElement {
    pub fn identity(backend: &Arc<BackendSpec>) -> Self {
        backend.identity()
    }

    pub fn generator(backend: &Arc<BackendSpec>, letter: Letter) -> Self {
        assert!(usize::from(letter) < backend.generator_count());
        GroupElement {
            letters: vec![letter],
            backend: Arc::clone(backend),
        }
    }

    /// Reduces `letters` freely. Panics on codes outside the alphabet.
    pub fn from_letters(backend: &Arc<BackendSpec>, letters: &[Letter]) -> Self {
        let mut out = backend.identity();
        for &l in letters {
            assert!(usize::from(l) < backend.generator_count(), "letter {l} out of range");
            out.push(l);
        }
        out
    }

    /// Parses concatenated symbols; the empty text is the identity.
    pub fn parse(text: &str, backend: &Arc<BackendSpec>) -> Result<Self> {
        let mut out = backend.identity();
        for (position, symbol) in text.chars().enumerate() {
            let l = backend
                .letter(symbol)
                .ok_or(Error::UnknownSymbol { symbol, position })?;
            out.push(l);
        }
        Ok(out)
    }

    /// Uniformly random reduced word of exactly `len` letters.
    pub fn random_reduced<R: Rng + ?Sized>(backend: &Arc<BackendSpec>, len: usize, rng: &mut R) -> Self {
        let s = backend.generator_count() as Letter;
        let mut letters = Vec::with_capacity(len);
        for i in 0..len {
            let l = if i == 0 {
                rng.gen_range(0..s)
            } else {
                // s - 1 choices: skip the inverse of the previous letter
                let forbidden = inverse_letter(letters[i - 1]);
                let r = rng.gen_range(0..s - 1);
                if r >= forbidden {
                    r + 1
                } else {
                    r
                }
            };
            letters.push(l);
        }
        GroupElement {
            letters,
            backend: Arc::clone(backend),
        }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn backend(&self) -> &Arc<BackendSpec> {
        &self.backend
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn word_length(&self) -> usize {
        self.backend.word_length(self)
    }

    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement> {
        self.backend.multiply(self, other)
    }

    /// `self * other` for elements known to share a backend.
    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        debug_assert!(self.same_backend(other));
        let mut out = self.clone();
        out.append(&other.letters);
        out
    }

    pub fn inverse(&self) -> GroupElement {
        self.backend.invert(self)
    }

    /// Right-multiplies by one letter in place.
    #[inline]
    pub fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&inverse_letter(l)) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    /// Right-multiplies by a reduced letter sequence in place.
    pub fn append(&mut self, letters: &[Letter]) {
        // Cancellation can only happen at the seam.
        let mut i = 0;
        while i < letters.len() && self.letters.last() == Some(&inverse_letter(letters[i])) {
            self.letters.pop();
            i += 1;
        }
        self.letters.extend_from_slice(&letters[i..]);
    }

    pub fn pow(&self, exponent: i64) -> GroupElement {
        let base = if exponent < 0 { self.inverse() } else { self.clone() };
        let mut out = self.backend.identity();
        for _ in 0..exponent.unsigned_abs() {
            out.append(&base.letters);
        }
        out
    }

    /// Length of the longest common prefix, i.e. the Gromov product at `e` in the tree.
    pub fn common_prefix_len(&self, other: &GroupElement) -> usize {
        self.letters
            .iter()
            .zip(&other.letters)
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn same_backend(&self, other: &GroupElement) -> bool {
        Arc::ptr_eq(&self.backend, &other.backend) || *self.backend == *other.backend
    }

    pub(crate) fn check_same(&self, other: &GroupElement) -> Result<()> {
        if self.same_backend(other) {
            Ok(())
        } else {
            Err(Error::BackendMismatch)
        }
    }

    pub fn to_text(&self) -> String {
        self.letters.iter().map(|&l| self.backend.symbol(l)).collect()
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.letters == other.letters && self.same_backend(other)
    }
}

impl Eq for GroupElement {}

impl Hash for GroupElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.letters.hash(state);
    }
}

/// Shortlex: shorter first, then lexicographic in alphabet order.
impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Prints the word, or `e` for the identity.
impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            f.write_str("e")
        } else {
            f.write_str(&self.to_text())
        }
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement({self})")
    }
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

pub fn parse_element(text: &str, backend: &Arc<BackendSpec>) -> Result<GroupElement> {
    GroupElement::parse(text, backend)
}

pub fn multiply(a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
    a.multiply(b)
}

pub fn invert(a: &GroupElement) -> GroupElement {
    a.inverse()
}

pub fn word_length(a: &GroupElement) -> usize {
    a.word_length()
}

/// Every element of length at most `radius`, in shortlex order.
pub fn enumerate_ball(radius: usize, backend: &Arc<BackendSpec>, budget: u64) -> Result<Vec<GroupElement>> {
    let required = backend.ball_size(radius);
    if required > u128::from(budget) {
        return Err(Error::BudgetExceeded {
            what: "ball enumeration",
            required,
            limit: budget,
        });
    }
    let mut ball = Vec::with_capacity(required as usize);
    ball.push(backend.identity());
    let mut sphere_start = 0;
    for _ in 0..radius {
        let sphere_end = ball.len();
        for idx in sphere_start..sphere_end {
            for l in 0..backend.generator_count() as Letter {
                let w = &ball[idx];
                if w.letters.last() == Some(&inverse_letter(l)) {
                    continue;
                }
                let mut next = w.clone();
                next.letters.push(l);
                ball.push(next);
            }
        }
        sphere_start = sphere_end;
    }
    Ok(ball)
}

/// The elements of length exactly `radius`, in shortlex order.
pub fn enumerate_sphere(radius: usize, backend: &Arc<BackendSpec>, budget: u64) -> Result<Vec<GroupElement>> {
    let ball = enumerate_ball(radius, backend, budget)?;
    Ok(ball.into_iter().filter(|g| g.len() == radius).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> Arc<BackendSpec> {
        BackendSpec::free(2).unwrap()
    }

    fn el(s: &str) -> GroupElement {
        GroupElement::parse(s, &f2()).unwrap()
    }

    #[test]
    fn parse_examples() {
        assert!(el("aA").is_identity());
        assert_eq!(el("abA").to_text(), "abA");
        assert_eq!(el("abA").word_length(), 3);
        assert_eq!(
            GroupElement::parse("ac", &f2()),
            Err(Error::UnknownSymbol {
                symbol: 'c',
                position: 1
            })
        );
    }

    #[test]
    fn multiply_examples() {
        assert!(el("ab").mul(&el("BA")).is_identity());
        assert_eq!(el("ab").mul(&el("Ba")), el("aa"));
        assert!(el("a").mul(&el("A")).is_identity());
        let f3 = BackendSpec::free(3).unwrap();
        let other = GroupElement::parse("a", &f3).unwrap();
        assert_eq!(el("a").multiply(&other), Err(Error::BackendMismatch));
    }

    #[test]
    fn invert_examples() {
        assert_eq!(el("ab").inverse(), el("BA"));
        assert!(el("").inverse().is_identity());
        assert_eq!(el("a").inverse(), el("A"));
        assert_eq!(el("ab").mul(&el("BA")).word_length(), 0);
    }

    #[test]
    fn standard_alphabet_skips_variable() {
        let f25 = BackendSpec::free(25).unwrap();
        assert!(!f25.alphabet.contains(&'x'));
        assert_eq!(f25.alphabet.last(), Some(&'Z'));
        assert!(BackendSpec::free(26).is_err());
        assert!(BackendSpec::free(1).is_err());
        assert!(BackendSpec::with_alphabet(2, vec!['a', 'A', 'a', 'B']).is_err());
    }

    #[test]
    fn ball_sizes_and_order() {
        let b = f2();
        assert_eq!(enumerate_ball(0, &b, 10).unwrap(), vec![b.identity()]);
        assert_eq!(enumerate_ball(1, &b, 10).unwrap().len(), 5);
        let ball2 = enumerate_ball(2, &b, 100).unwrap();
        assert_eq!(ball2.len(), 17);
        let texts: Vec<String> = ball2.iter().map(|g| g.to_string()).collect();
        assert_eq!(&texts[..5], &["e", "a", "A", "b", "B"]);
        assert_eq!(&texts[5..8], &["aa", "ab", "aB"]);
        let mut sorted = ball2.clone();
        sorted.sort();
        assert_eq!(sorted, ball2);
    }

    #[test]
    fn ball_of_radius_two_matches_exhaustive_reduction() {
        // oracle: reduce every string of length <= 2 and deduplicate
        let b = f2();
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(b.identity());
        for x in 0..4u8 {
            seen.insert(GroupElement::from_letters(&b, &[x]));
            for y in 0..4u8 {
                seen.insert(GroupElement::from_letters(&b, &[x, y]));
            }
        }
        let spheres: Vec<usize> = (0..=2).map(|r| seen.iter().filter(|g| g.len() == r).count()).collect();
        assert_eq!(spheres, vec![1, 4, 12]);
        assert_eq!(
            enumerate_ball(2, &b, 100).unwrap(),
            seen.into_iter().collect::<Vec<_>>()
        );
    }

    #[test]
    fn ball_budget() {
        let err = enumerate_ball(3, &f2(), 20).unwrap_err();
        assert_eq!(
            err,
            Error::BudgetExceeded {
                what: "ball enumeration",
                required: 53,
                limit: 20
            }
        );
    }

    #[test]
    fn geodesic_through_identity() {
        let b = f2();
        let v = b.geodesic_vertices(&el("b"), &el("a")).unwrap();
        let t: Vec<String> = v.iter().map(|g| g.to_string()).collect();
        assert_eq!(t, vec!["b", "e", "a"]);
    }

    #[test]
    fn random_reduced_is_reduced() {
        let mut rng = crate::rng::trial_rng(1, 0);
        for len in 0..50 {
            let g = GroupElement::random_reduced(&f2(), len, &mut rng);
            assert_eq!(g.len(), len);
            assert_eq!(GroupElement::from_letters(&f2(), g.letters()), g);
        }
    }
}
