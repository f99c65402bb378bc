//! Free-group words over a finite alphabet, and substitution endomorphisms.
//!
//! A word is stored as a sequence of nonzero signed letters: letter `k > 0`
//! denotes the generator with index `k − 1`, and `−k` its inverse.  Every
//! `FreeWord` is kept freely reduced, so equality of words is equality of
//! elements of the free group.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Hard cap on the letter count of any single constructed word.  Exceeding it
/// is reported as an error rather than exhausting memory.
pub const MAX_WORD_LEN: usize = 1 << 26;

/// Errors from word-level operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WordError {
    /// The result of an operation would exceed [`MAX_WORD_LEN`] letters.
    #[error("word would exceed {MAX_WORD_LEN} letters")]
    TooLong,
    /// An exponent does not fit the supported range.
    #[error("exponent {0} out of supported range")]
    ExponentRange(String),
}

/// A finite list of distinct generator names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    /// Create an alphabet from generator names.  Names must be distinct,
    /// nonempty, start with a letter, and consist of letters, digits and `_`.
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, String> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for n in &names {
            let mut chars = n.chars();
            let ok = match chars.next() {
                Some(c) if c.is_ascii_alphabetic() => {
                    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
                }
                _ => false,
            };
            if !ok {
                return Err(format!("invalid generator name {n:?}"));
            }
        }
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                if names[i] == names[j] {
                    return Err(format!("duplicate generator name {:?}", names[i]));
                }
            }
        }
        Ok(Alphabet { names })
    }

    /// Number of generators.
    pub fn rank(&self) -> usize {
        self.names.len()
    }

    /// Name of generator `i` (0-based).
    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    /// All names in order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Index of a generator by name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// A freely reduced word in a free group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FreeWord {
    letters: Vec<i32>,
}

/// Push one signed letter onto a letter stack, cancelling with the top.
#[inline]
fn push_reduced(out: &mut Vec<i32>, letter: i32) {
    debug_assert!(letter != 0);
    if let Some(&top) = out.last() {
        if top == -letter {
            out.pop();
            return;
        }
    }
    out.push(letter);
}

impl FreeWord {
    /// The empty word.
    pub fn identity() -> Self {
        FreeWord { letters: Vec::new() }
    }

    /// The single generator `i` (0-based).
    pub fn generator(i: usize) -> Self {
        FreeWord { letters: vec![i as i32 + 1] }
    }

    /// The inverse of generator `i` (0-based).
    pub fn generator_inv(i: usize) -> Self {
        FreeWord { letters: vec![-(i as i32 + 1)] }
    }

    /// Build a word from signed letters, freely reducing.  Letters are
    /// nonzero: `k` means generator `k − 1`, `−k` its inverse.
    pub fn from_letters(letters: impl IntoIterator<Item = i32>) -> Self {
        let mut out = Vec::new();
        for l in letters {
            assert!(l != 0, "letter 0 is not a valid signed generator");
            push_reduced(&mut out, l);
        }
        FreeWord { letters: out }
    }

    /// The underlying reduced letters.
    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    /// Number of letters of the reduced word.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    /// Whether this is the empty word.
    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Largest 0-based generator index appearing, if any.
    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.unsigned_abs() as usize - 1).max()
    }

    /// Signed exponent sum of generator `i` (0-based).
    pub fn exponent_sum(&self, i: usize) -> i64 {
        let target = i as i32 + 1;
        self.letters
            .iter()
            .map(|&l| {
                if l == target {
                    1
                } else if l == -target {
                    -1
                } else {
                    0
                }
            })
            .sum()
    }

    /// Product `self · other`, reduced.
    pub fn multiply(&self, other: &FreeWord) -> FreeWord {
        let mut out = self.letters.clone();
        for &l in &other.letters {
            push_reduced(&mut out, l);
        }
        FreeWord { letters: out }
    }

    /// Inverse word.
    pub fn invert(&self) -> FreeWord {
        FreeWord { letters: self.letters.iter().rev().map(|&l| -l).collect() }
    }

    /// Conjugate `self^t = t⁻¹ · self · t`.
    pub fn conjugate(&self, t: &FreeWord) -> FreeWord {
        t.invert().multiply(self).multiply(t)
    }

    /// Commutator `[u, v] = u⁻¹ v⁻¹ u v`.
    pub fn commutator(u: &FreeWord, v: &FreeWord) -> FreeWord {
        u.invert().multiply(&v.invert()).multiply(u).multiply(v)
    }

    /// Write `self = c⁻¹ · r · c` with `r` cyclically reduced;
    /// returns `(r, c)`.
    pub fn cyclic_reduce(&self) -> (FreeWord, FreeWord) {
        let ls = &self.letters;
        let mut a = 0usize;
        let mut b = ls.len();
        while b - a >= 2 && ls[a] == -ls[b - 1] {
            a += 1;
            b -= 1;
        }
        let core = FreeWord { letters: ls[a..b].to_vec() };
        let conj = FreeWord { letters: ls[b..].to_vec() };
        (core, conj)
    }

    /// Power `self^k` for arbitrary-precision `k`.  Computed through the
    /// cyclically reduced core so the cost is proportional to the output.
    pub fn power(&self, k: &BigInt) -> Result<FreeWord, WordError> {
        if k.is_zero() || self.is_identity() {
            return Ok(FreeWord::identity());
        }
        let (core, conj) = self.cyclic_reduce();
        let base = if k.is_negative() { core.invert() } else { core };
        let reps_big = k.abs();
        let reps = reps_big.to_usize().ok_or_else(|| WordError::ExponentRange(k.to_string()))?;
        let total = 2 * conj.len() + reps.checked_mul(base.len()).ok_or(WordError::TooLong)?;
        if total > MAX_WORD_LEN {
            return Err(WordError::TooLong);
        }
        let mut letters = conj.invert().letters;
        for _ in 0..reps {
            letters.extend_from_slice(&base.letters);
        }
        letters.extend_from_slice(&conj.letters);
        // The core is cyclically reduced, so only the two junctions with the
        // conjugating part may cancel; a full re-reduction is still cheap and
        // unconditionally safe.
        Ok(FreeWord::from_letters(letters))
    }

    /// Power with a machine-integer exponent.
    pub fn power_i(&self, k: i64) -> Result<FreeWord, WordError> {
        self.power(&BigInt::from(k))
    }

    /// Render using names from `alphabet`, as `a*b^-1*…`; the empty word is
    /// rendered as `1`.  Runs of equal letters are collapsed into powers.
    pub fn display(&self, alphabet: &Alphabet) -> String {
        if self.is_identity() {
            return "1".to_string();
        }
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0usize;
        while i < self.letters.len() {
            let l = self.letters[i];
            let mut run = 1usize;
            while i + run < self.letters.len() && self.letters[i + run] == l {
                run += 1;
            }
            let name = alphabet.name(l.unsigned_abs() as usize - 1);
            let exp = if l > 0 { run as i64 } else { -(run as i64) };
            if exp == 1 {
                parts.push(name.to_string());
            } else {
                parts.push(format!("{name}^{exp}"));
            }
            i += run;
        }
        parts.join("*")
    }
}

impl fmt::Display for FreeWord {
    /// Generator-index rendering (`x1*x2^-1`), independent of any alphabet.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "1");
        }
        let names: Vec<String> = (0..=self.max_generator().unwrap_or(0))
            .map(|i| format!("x{}", i + 1))
            .collect();
        let alphabet = Alphabet::new(names).expect("generated names are valid");
        write!(f, "{}", self.display(&alphabet))
    }
}

/// An endomorphism of a free group of fixed rank, given by generator images.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreeEndomorphism {
    images: Vec<FreeWord>,
}

impl FreeEndomorphism {
    /// Build from generator images.  Every image must use only generators of
    /// index `< images.len()`.
    pub fn new(images: Vec<FreeWord>) -> Result<Self, String> {
        let rank = images.len();
        for (i, w) in images.iter().enumerate() {
            if let Some(m) = w.max_generator() {
                if m >= rank {
                    return Err(format!(
                        "image of generator {i} uses generator index {m}, but rank is {rank}"
                    ));
                }
            }
        }
        Ok(FreeEndomorphism { images })
    }

    /// The identity endomorphism of the given rank.
    pub fn identity(rank: usize) -> Self {
        FreeEndomorphism { images: (0..rank).map(FreeWord::generator).collect() }
    }

    /// Rank of the underlying free group.
    pub fn rank(&self) -> usize {
        self.images.len()
    }

    /// Image of generator `i`.
    pub fn image(&self, i: usize) -> &FreeWord {
        &self.images[i]
    }

    /// All images in order.
    pub fn images(&self) -> &[FreeWord] {
        &self.images
    }

    /// Apply to a word by substitution, reducing the result.
    pub fn apply(&self, w: &FreeWord) -> FreeWord {
        let mut out: Vec<i32> = Vec::new();
        for &l in w.letters() {
            let idx = l.unsigned_abs() as usize - 1;
            assert!(idx < self.rank(), "word uses generator {idx} beyond endomorphism rank");
            let img = &self.images[idx];
            if l > 0 {
                for &m in img.letters() {
                    push_reduced(&mut out, m);
                }
            } else {
                for &m in img.letters().iter().rev() {
                    push_reduced(&mut out, -m);
                }
            }
        }
        FreeWord { letters: out }
    }

    /// Composition: `compose(s, t)` maps `w` to `s(t(w))`, i.e.
    /// `compose(s, t).apply(w) == s.apply(t.apply(w))`.
    pub fn compose(&self, other: &FreeEndomorphism) -> FreeEndomorphism {
        assert_eq!(self.rank(), other.rank(), "rank mismatch in composition");
        FreeEndomorphism { images: other.images.iter().map(|w| self.apply(w)).collect() }
    }

    /// Whether this is the identity map.
    pub fn is_identity(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(i, w)| w.letters() == [i as i32 + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(letters: &[i32]) -> FreeWord {
        FreeWord::from_letters(letters.iter().copied())
    }

    #[test]
    fn reduction_cancels_adjacent_inverses() {
        assert_eq!(w(&[1, -1]), FreeWord::identity());
        assert_eq!(w(&[1, 2, -2, -1]), FreeWord::identity());
        assert_eq!(w(&[1, 2, -2, 3]).letters(), &[1, 3]);
    }

    #[test]
    fn multiply_and_invert() {
        let a = w(&[1, 2]);
        let b = w(&[-2, 3]);
        assert_eq!(a.multiply(&b).letters(), &[1, 3]);
        assert_eq!(a.invert().letters(), &[-2, -1]);
        assert!(a.multiply(&a.invert()).is_identity());
    }

    #[test]
    fn conjugate_and_commutator_shapes() {
        let u = w(&[1]);
        let t = w(&[2]);
        assert_eq!(u.conjugate(&t).letters(), &[-2, 1, 2]);
        let c = FreeWord::commutator(&w(&[1]), &w(&[2]));
        assert_eq!(c.letters(), &[-1, -2, 1, 2]);
    }

    #[test]
    fn power_through_cyclic_core() {
        let u = w(&[-2, 1, 2]); // conjugate of a generator
        let p = u.power_i(3).unwrap();
        assert_eq!(p.letters(), &[-2, 1, 1, 1, 2]);
        let q = u.power_i(-2).unwrap();
        assert_eq!(q.letters(), &[-2, -1, -1, 2]);
        assert!(u.power_i(0).unwrap().is_identity());
    }

    #[test]
    fn power_rejects_oversized_results() {
        let u = w(&[1, 2]);
        let k = BigInt::from(MAX_WORD_LEN as u64);
        assert_eq!(u.power(&k), Err(WordError::TooLong));
    }

    #[test]
    fn endomorphism_apply_substitutes() {
        // a ↦ ab, b ↦ b
        let e = FreeEndomorphism::new(vec![w(&[1, 2]), w(&[2])]).unwrap();
        assert_eq!(e.apply(&w(&[1])).letters(), &[1, 2]);
        assert_eq!(e.apply(&w(&[-1])).letters(), &[-2, -1]);
        assert_eq!(e.apply(&w(&[1, -2, -1])).letters(), &[1, -2, -1]);
    }

    #[test]
    fn display_collapses_runs() {
        let ab = Alphabet::new(["a", "b"]).unwrap();
        assert_eq!(w(&[1, 1, -2, -2, -2]).display(&ab), "a^2*b^-3");
        assert_eq!(FreeWord::identity().display(&ab), "1");
    }

    #[test]
    fn alphabet_validation() {
        assert!(Alphabet::new(["a", "b"]).is_ok());
        assert!(Alphabet::new(["a", "a"]).is_err());
        assert!(Alphabet::new(["1a"]).is_err());
        assert!(Alphabet::new([""]).is_err());
        assert!(Alphabet::new(["x_1", "x_2"]).is_ok());
    }

    fn arb_word(rank: usize, maxlen: usize) -> impl Strategy<Value = FreeWord> {
        prop::collection::vec(
            (1..=rank as i32).prop_flat_map(|g| prop_oneof![Just(g), Just(-g)]),
            0..=maxlen,
        )
        .prop_map(FreeWord::from_letters)
    }

    fn arb_endo(rank: usize, maxlen: usize) -> impl Strategy<Value = FreeEndomorphism> {
        prop::collection::vec(arb_word(rank, maxlen), rank..=rank)
            .prop_map(|imgs| FreeEndomorphism::new(imgs).unwrap())
    }

    proptest! {
        #[test]
        fn prop_reduced_invariant(u in arb_word(4, 24)) {
            for p in u.letters().windows(2) {
                prop_assert!(p[0] != -p[1]);
            }
        }

        #[test]
        fn prop_group_laws(u in arb_word(4, 16), v in arb_word(4, 16), t in arb_word(4, 16)) {
            // associativity
            prop_assert_eq!(
                u.multiply(&v).multiply(&t),
                u.multiply(&v.multiply(&t))
            );
            // inverses
            prop_assert!(u.multiply(&u.invert()).is_identity());
            // (uv)⁻¹ = v⁻¹u⁻¹
            prop_assert_eq!(u.multiply(&v).invert(), v.invert().multiply(&u.invert()));
            // conjugation is a homomorphism
            prop_assert_eq!(
                u.multiply(&v).conjugate(&t),
                u.conjugate(&t).multiply(&v.conjugate(&t))
            );
        }

        #[test]
        fn prop_power_adds(u in arb_word(3, 10), j in -6i64..=6, k in -6i64..=6) {
            let a = u.power_i(j).unwrap().multiply(&u.power_i(k).unwrap());
            let b = u.power_i(j + k).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn prop_compose_law(
            s in arb_endo(3, 6),
            t in arb_endo(3, 6),
            u in arb_word(3, 12)
        ) {
            prop_assert_eq!(s.compose(&t).apply(&u), s.apply(&t.apply(&u)));
        }

        #[test]
        fn prop_endo_homomorphism(s in arb_endo(3, 6), u in arb_word(3, 10), v in arb_word(3, 10)) {
            prop_assert_eq!(s.apply(&u.multiply(&v)), s.apply(&u).multiply(&s.apply(&v)));
            prop_assert_eq!(s.apply(&u.invert()), s.apply(&u).invert());
        }
    }
}
