//! Polycyclic presentations and collection from the left.
//!
//! A polycyclic presentation on generators `a₁ < a₂ < … < a_m` records, for
//! each generator, an optional *relative order* `o_i ≥ 2` with a power
//! relation `a_i^{o_i} = u_i`, and for each pair `i < j` conjugate relations
//! `a_j^{a_i} = w_{ij}` (and `a_j^{a_i⁻¹} = v_{ij}` when `a_i` has infinite
//! order), where the right-hand sides are words in generators of index `> i`.
//! Absent conjugate relations mean the trivial one, `a_j^{a_i} = a_j`.
//!
//! Every element is represented by a *normal word* `a₁^{e₁} ⋯ a_m^{e_m}` with
//! `0 ≤ e_i < o_i` for finite-order generators.  [`PcPresentation::collect`]
//! rewrites an arbitrary letter sequence into normal form by moving letters
//! of smallest index leftwards.  Uniqueness of normal forms is equivalent to
//! the *consistency* of the presentation, which
//! [`PcPresentation::consistency_check`] tests through the standard overlap
//! identities, returning any violations as data.
//!
//! A designated trailing block of *central* generators (indices
//! `≥ central_from`) is assumed to commute with everything and is collected
//! through a dense accumulator, which keeps collection fast when the block is
//! large.

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// A `(generator, exponent)` letter; generators are 0-based.
pub type Letter = (usize, i64);

/// Errors from collection and presentation manipulation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PcpError {
    #[error("integer overflow in exponent arithmetic")]
    Overflow,
    #[error("collection step limit exhausted")]
    CollectionLimit,
    #[error("invalid polycyclic presentation: {0}")]
    Invalid(String),
}

/// A word in normal form: strictly increasing generator indices, nonzero
/// exponents, and exponents of finite-order generators within `[1, o_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct NormalWord {
    letters: Vec<Letter>,
}

impl NormalWord {
    pub fn identity() -> Self {
        NormalWord { letters: Vec::new() }
    }

    /// Single-letter word (identity if `e == 0`).
    pub fn single(g: usize, e: i64) -> Self {
        if e == 0 {
            NormalWord::identity()
        } else {
            NormalWord { letters: vec![(g, e)] }
        }
    }

    /// Construct from letters that are already in normal form order.
    pub fn from_sorted(letters: Vec<Letter>) -> Self {
        for w in letters.windows(2) {
            assert!(w[0].0 < w[1].0, "letters not strictly increasing");
        }
        assert!(letters.iter().all(|&(_, e)| e != 0), "zero exponent");
        NormalWord { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Exponent of generator `g` (0 if absent).
    pub fn exponent(&self, g: usize) -> i64 {
        self.letters
            .binary_search_by_key(&g, |&(h, _)| h)
            .map(|i| self.letters[i].1)
            .unwrap_or(0)
    }

    /// The letters with index `≥ from`, as a dense exponent vector of length
    /// `n − from`.
    pub fn tail_vector(&self, from: usize, n: usize) -> Vec<i64> {
        let mut v = vec![0i64; n - from];
        for &(g, e) in &self.letters {
            if g >= from {
                v[g - from] = e;
            }
        }
        v
    }

    /// Largest generator index, if any.
    pub fn max_generator(&self) -> Option<usize> {
        self.letters.last().map(|&(g, _)| g)
    }

    /// The reversed-inverted letter sequence (a valid input for collection,
    /// not necessarily normal).
    pub fn inverse_letters(&self) -> Vec<Letter> {
        self.letters.iter().rev().map(|&(g, e)| (g, -e)).collect()
    }

    /// Render as `a1^2*a3^-1`, using 1-based generator numbers.
    pub fn display_indexed(&self) -> String {
        if self.is_identity() {
            return "1".into();
        }
        self.letters
            .iter()
            .map(|&(g, e)| {
                if e == 1 {
                    format!("a{}", g + 1)
                } else {
                    format!("a{}^{}", g + 1, e)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl fmt::Display for NormalWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_indexed())
    }
}

/// One failed overlap identity: the two collected sides that should agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyViolation {
    /// Which overlap failed, e.g. `a3*(a2*a1) = (a3*a2)*a1`.
    pub overlap: String,
    pub left: NormalWord,
    pub right: NormalWord,
}

/// A polycyclic presentation.  See the module documentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcPresentation {
    weights: Vec<u32>,
    orders: Vec<Option<i64>>,
    power_rhs: Vec<Option<NormalWord>>,
    conj: BTreeMap<(usize, usize), NormalWord>,
    conj_inv: BTreeMap<(usize, usize), NormalWord>,
    central_from: usize,
    epimorphism: Vec<NormalWord>,
    /// Safety valve for collection on arbitrary (possibly inconsistent) input.
    #[serde(default = "default_fuel")]
    fuel: u64,
}

fn default_fuel() -> u64 {
    DEFAULT_COLLECTION_FUEL
}

/// Default bound on elementary collection steps for a single call.
pub const DEFAULT_COLLECTION_FUEL: u64 = 200_000_000;

impl PcPresentation {
    /// Build and validate a presentation.
    ///
    /// * `weights[i] ≥ 1`;
    /// * `orders[i]` is `None` (infinite) or `Some(o)` with `o ≥ 2`, and
    ///   `power_rhs[i]` is present exactly for finite orders;
    /// * right-hand sides use only generators of index greater than the
    ///   conjugating/powered generator and are in normal form;
    /// * generators of index `≥ central_from` appear in no nontrivial
    ///   conjugate relation, and their power right-hand sides stay inside the
    ///   central block.
    pub fn new(
        weights: Vec<u32>,
        orders: Vec<Option<i64>>,
        power_rhs: Vec<Option<NormalWord>>,
        conj: BTreeMap<(usize, usize), NormalWord>,
        conj_inv: BTreeMap<(usize, usize), NormalWord>,
        central_from: usize,
        epimorphism: Vec<NormalWord>,
    ) -> Result<Self, PcpError> {
        let n = weights.len();
        let p = PcPresentation {
            weights,
            orders,
            power_rhs,
            conj,
            conj_inv,
            central_from,
            epimorphism,
            fuel: DEFAULT_COLLECTION_FUEL,
        };
        p.validate(n)?;
        Ok(p)
    }

    fn validate(&self, n: usize) -> Result<(), PcpError> {
        let fail = |m: String| Err(PcpError::Invalid(m));
        if self.orders.len() != n || self.power_rhs.len() != n {
            return fail("field length mismatch".into());
        }
        if self.central_from > n {
            return fail("central_from out of range".into());
        }
        if self.weights.iter().any(|&w| w == 0) {
            return fail("weights must be ≥ 1".into());
        }
        for i in 0..n {
            match (self.orders[i], &self.power_rhs[i]) {
                (Some(o), Some(rhs)) => {
                    if o < 2 {
                        return fail(format!("relative order of a{} must be ≥ 2", i + 1));
                    }
                    self.check_rhs(rhs, i, n)?;
                    if i >= self.central_from {
                        if let Some((g, _)) = rhs.letters().first() {
                            if *g < self.central_from {
                                return fail(format!(
                                    "power of central a{} leaves the central block",
                                    i + 1
                                ));
                            }
                        }
                    }
                }
                (None, None) => {}
                _ => return fail(format!("order/power mismatch at a{}", i + 1)),
            }
        }
        for (&(i, j), rhs) in &self.conj {
            if i >= j || j >= n {
                return fail(format!("bad conjugate pair ({}, {})", i + 1, j + 1));
            }
            if i >= self.central_from || j >= self.central_from {
                return fail(format!(
                    "nontrivial conjugate relation touches central a{}/a{}",
                    i + 1,
                    j + 1
                ));
            }
            self.check_rhs(rhs, i, n)?;
        }
        for (&(i, j), rhs) in &self.conj_inv {
            if i >= j || j >= n {
                return fail(format!("bad inverse conjugate pair ({}, {})", i + 1, j + 1));
            }
            if self.orders[i].is_some() {
                return fail(format!(
                    "inverse conjugate relation for finite-order a{}",
                    i + 1
                ));
            }
            self.check_rhs(rhs, i, n)?;
        }
        for w in &self.epimorphism {
            self.check_rhs(w, 0, n).map_err(|_| {
                PcpError::Invalid("epimorphism image is not a valid normal word".into())
            })?;
            if let Some((g, _)) = w.letters().first() {
                if *g >= n {
                    return fail("epimorphism image out of range".into());
                }
            }
        }
        Ok(())
    }

    /// Check a right-hand side: normal form over generators `> lo` (for the
    /// epimorphism `lo = 0` is passed with `≥` semantics handled by caller).
    fn check_rhs(&self, w: &NormalWord, lo: usize, n: usize) -> Result<(), PcpError> {
        let mut prev: Option<usize> = None;
        for &(g, e) in w.letters() {
            if g >= n {
                return Err(PcpError::Invalid(format!("letter a{} out of range", g + 1)));
            }
            if g < lo && !(lo == 0 && g == 0) {
                return Err(PcpError::Invalid(format!(
                    "right-hand side letter a{} not above a{}",
                    g + 1,
                    lo + 1
                )));
            }
            if let Some(p) = prev {
                if g <= p {
                    return Err(PcpError::Invalid("right-hand side not sorted".into()));
                }
            }
            if e == 0 {
                return Err(PcpError::Invalid("zero exponent in right-hand side".into()));
            }
            if let Some(o) = self.orders[g] {
                if e < 1 || e >= o {
                    return Err(PcpError::Invalid(format!(
                        "exponent {e} of a{} outside [1, {o})",
                        g + 1
                    )));
                }
            }
            prev = Some(g);
        }
        Ok(())
    }

    pub fn ngens(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> u32 {
        self.weights[i]
    }

    /// Relative orders; `None` means infinite.
    pub fn orders(&self) -> &[Option<i64>] {
        &self.orders
    }

    /// Right-hand side of `a_i^{o_i}` (empty word = identity).
    pub fn power(&self, i: usize) -> Option<&NormalWord> {
        self.power_rhs[i].as_ref()
    }

    /// Right-hand side of `a_j^{a_i}`, or `None` for the trivial relation.
    pub fn conjugate(&self, i: usize, j: usize) -> Option<&NormalWord> {
        self.conj.get(&(i, j))
    }

    /// Right-hand side of `a_j^{a_i⁻¹}`, or `None` for the trivial relation.
    pub fn conjugate_inv(&self, i: usize, j: usize) -> Option<&NormalWord> {
        self.conj_inv.get(&(i, j))
    }

    /// Index from which all generators are central.
    pub fn central_from(&self) -> usize {
        self.central_from
    }

    /// Images of the source presentation's generators, when this presentation
    /// was produced as a quotient of a finitely generated group.
    pub fn epimorphism(&self) -> &[NormalWord] {
        &self.epimorphism
    }

    /// Group order: product of the relative orders (`None` when any
    /// generator has infinite order).
    pub fn order(&self) -> Option<BigInt> {
        let mut prod = BigInt::from(1);
        for o in &self.orders {
            prod *= BigInt::from((*o)?);
        }
        Some(prod)
    }

    pub(crate) fn set_fuel(&mut self, fuel: u64) {
        self.fuel = fuel;
    }

    /// Collect an arbitrary letter sequence into normal form.
    pub fn collect(&self, letters: &[Letter]) -> Result<NormalWord, PcpError> {
        let n = self.ngens();
        let mut head: Vec<Letter> = Vec::new();
        let mut tail: Vec<i64> = vec![0; n - self.central_from];
        let mut stack: Vec<Letter> = Vec::with_capacity(letters.len());
        for &l in letters.iter().rev() {
            stack.push(l);
        }
        let mut fuel = self.fuel;

        while let Some((g, e)) = stack.pop() {
            fuel = fuel.checked_sub(1).ok_or(PcpError::CollectionLimit)?;
            if e == 0 {
                continue;
            }
            debug_assert!(g < n);
            if g >= self.central_from {
                let slot = &mut tail[g - self.central_from];
                *slot = slot.checked_add(e).ok_or(PcpError::Overflow)?;
                continue;
            }
            // Rewrite negative exponents of finite-order generators:
            // a^e = a^{e+ko} · u^{−k}.
            if let Some(o) = self.orders[g] {
                if e < 0 {
                    let k = (-e + o - 1) / o;
                    let ko = k.checked_mul(o).ok_or(PcpError::Overflow)?;
                    let u = self.power_rhs[g].as_ref().expect("finite order has power rhs");
                    self.push_word_power(&mut stack, u, -k)?;
                    stack.push((g, e + ko));
                    continue;
                }
            }
            match head.last().copied() {
                None => {
                    head.push((g, e));
                    self.normalize_last(&mut head, &mut stack)?;
                }
                Some((h, _)) if h <= g => {
                    if h == g {
                        let last = head.last_mut().unwrap();
                        last.1 = last.1.checked_add(e).ok_or(PcpError::Overflow)?;
                    } else {
                        head.push((g, e));
                    }
                    self.normalize_last(&mut head, &mut stack)?;
                }
                Some(_) => {
                    // Move one unit of a_g left past the trailing segment of
                    // larger-index letters: u·w·g^e = u·g^s·(w^{g^s})·g^{e−s}.
                    let s = if e > 0 { 1 } else { -1 };
                    if e != s {
                        stack.push((g, e - s));
                    }
                    let cut = head.partition_point(|&(x, _)| x <= g);
                    for idx in (cut..head.len()).rev() {
                        let (h, m) = head[idx];
                        self.push_conjugated(&mut stack, h, m, g, s)?;
                    }
                    head.truncate(cut);
                    if let Some(last) = head.last_mut() {
                        if last.0 == g {
                            last.1 = last.1.checked_add(s).ok_or(PcpError::Overflow)?;
                        } else {
                            head.push((g, s));
                        }
                    } else {
                        head.push((g, s));
                    }
                    self.normalize_last(&mut head, &mut stack)?;
                }
            }
        }

        // Normalize the central accumulator (ascending: overflow corrections
        // only reference later central generators).
        for idx in 0..tail.len() {
            let g = self.central_from + idx;
            if let Some(o) = self.orders[g] {
                let e = tail[idx];
                let q = e.div_euclid(o);
                if q != 0 {
                    tail[idx] = e.rem_euclid(o);
                    let u = self.power_rhs[g].as_ref().unwrap();
                    for &(h, m) in u.letters() {
                        debug_assert!(h > g);
                        let slot = &mut tail[h - self.central_from];
                        *slot = slot
                            .checked_add(m.checked_mul(q).ok_or(PcpError::Overflow)?)
                            .ok_or(PcpError::Overflow)?;
                    }
                }
            }
        }
        for (idx, &e) in tail.iter().enumerate() {
            if e != 0 {
                head.push((self.central_from + idx, e));
            }
        }
        Ok(NormalWord { letters: head })
    }

    /// After the last head letter changed, bring its exponent into range,
    /// possibly pushing a power-overflow correction onto the stack.
    fn normalize_last(&self, head: &mut Vec<Letter>, stack: &mut Vec<Letter>) -> Result<(), PcpError> {
        let Some(&(g, e)) = head.last() else { return Ok(()) };
        if e == 0 {
            head.pop();
            return Ok(());
        }
        if let Some(o) = self.orders[g] {
            if e >= o || e < 0 {
                let q = e.div_euclid(o);
                let r = e.rem_euclid(o);
                if r == 0 {
                    head.pop();
                } else {
                    head.last_mut().unwrap().1 = r;
                }
                let u = self.power_rhs[g].as_ref().unwrap();
                self.push_word_power(stack, u, q)?;
            }
        }
        Ok(())
    }

    /// Push `w^k` onto the stack (to be processed next).
    fn push_word_power(&self, stack: &mut Vec<Letter>, w: &NormalWord, k: i64) -> Result<(), PcpError> {
        if k == 0 || w.is_identity() {
            return Ok(());
        }
        let reps = k.unsigned_abs();
        if reps > 1_000_000 {
            return Err(PcpError::Overflow);
        }
        if k > 0 {
            for _ in 0..reps {
                for &l in w.letters().iter().rev() {
                    stack.push(l);
                }
            }
        } else {
            for _ in 0..reps {
                for &(g, e) in w.letters() {
                    stack.push((g, -e));
                }
            }
        }
        Ok(())
    }

    /// Push the expansion of `(a_h^m)^{a_g^s}` (`s = ±1`, `g < h`).
    fn push_conjugated(
        &self,
        stack: &mut Vec<Letter>,
        h: usize,
        m: i64,
        g: usize,
        s: i64,
    ) -> Result<(), PcpError> {
        let rel = if s == 1 { self.conj.get(&(g, h)) } else { self.conj_inv.get(&(g, h)) };
        match rel {
            None => stack.push((h, m)),
            Some(v) => self.push_word_power(stack, v, m)?,
        }
        Ok(())
    }

    /// Normal form of the product of two normal words.
    pub fn multiply(&self, a: &NormalWord, b: &NormalWord) -> Result<NormalWord, PcpError> {
        let mut letters = a.letters.clone();
        letters.extend_from_slice(&b.letters);
        self.collect(&letters)
    }

    /// Normal form of the inverse of a normal word.
    pub fn invert(&self, a: &NormalWord) -> Result<NormalWord, PcpError> {
        self.collect(&a.inverse_letters())
    }

    /// Normal form of `w^k`.
    pub fn power_nf(&self, a: &NormalWord, k: i64) -> Result<NormalWord, PcpError> {
        let mut letters = Vec::new();
        let reps = k.unsigned_abs().min(1 << 20) as i64;
        if reps != k.abs() {
            return Err(PcpError::Overflow);
        }
        if k >= 0 {
            for _ in 0..reps {
                letters.extend_from_slice(&a.letters);
            }
        } else {
            let inv = a.inverse_letters();
            for _ in 0..reps {
                letters.extend_from_slice(&inv);
            }
        }
        self.collect(&letters)
    }

    /// Evaluate a letter sequence given over the *source* alphabet through
    /// the stored epimorphism.
    pub fn evaluate_epi(&self, word: &crate::word::FreeWord) -> Result<NormalWord, PcpError> {
        self.evaluate_with(&self.epimorphism, word)
    }

    /// Evaluate a free word through an explicit tuple of generator images.
    pub fn evaluate_with(
        &self,
        images: &[NormalWord],
        word: &crate::word::FreeWord,
    ) -> Result<NormalWord, PcpError> {
        let mut letters: Vec<Letter> = Vec::new();
        for &l in word.letters() {
            let idx = l.unsigned_abs() as usize - 1;
            let img = images
                .get(idx)
                .ok_or_else(|| PcpError::Invalid("word outside image domain".into()))?;
            if l > 0 {
                letters.extend_from_slice(img.letters());
            } else {
                letters.extend(img.inverse_letters());
            }
        }
        self.collect(&letters)
    }

    /// Enumerate the overlap tests.  With `max_total_weight = Some(c)`,
    /// weight-filtered tests that cannot produce a defect below the cutoff
    /// are skipped (used when completing a weighted presentation of class c).
    fn overlap_tests(&self, max_total_weight: Option<u32>) -> Vec<OverlapTest> {
        let n = self.ngens();
        let cap = max_total_weight.unwrap_or(u32::MAX);
        let wsum = |ws: &[usize]| -> u64 { ws.iter().map(|&i| self.weights[i] as u64).sum() };
        let mut tests = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if wsum(&[i, j]) > cap as u64 {
                    continue;
                }
                for k in j + 1..n {
                    if wsum(&[i, j, k]) <= cap as u64 {
                        tests.push(OverlapTest::Assoc(k, j, i));
                    }
                }
                if self.orders[j].is_some() {
                    tests.push(OverlapTest::PowerLeft(j, i));
                }
                if self.orders[i].is_some() {
                    tests.push(OverlapTest::PowerRight(j, i));
                } else {
                    tests.push(OverlapTest::InverseCancel(j, i));
                    tests.push(OverlapTest::InverseCancelNeg(j, i));
                }
                if self.orders[j].is_none() {
                    tests.push(OverlapTest::LeftInverseCancel(j, i));
                }
            }
            if self.orders[i].is_some() {
                tests.push(OverlapTest::PowerSelf(i));
            }
        }
        tests
    }

    fn run_overlap(&self, t: &OverlapTest) -> Result<Option<ConsistencyViolation>, PcpError> {
        let single = |g: usize, e: i64| vec![(g, e)];
        let (name, left, right) = match *t {
            OverlapTest::Assoc(k, j, i) => {
                // a_k (a_j a_i) vs (a_k a_j) a_i
                let ji = self.collect(&[(j, 1), (i, 1)])?;
                let mut l = single(k, 1);
                l.extend_from_slice(ji.letters());
                let kj = self.collect(&[(k, 1), (j, 1)])?;
                let mut r = kj.letters().to_vec();
                r.push((i, 1));
                (
                    format!("a{}*(a{}*a{}) = (a{}*a{})*a{}", k + 1, j + 1, i + 1, k + 1, j + 1, i + 1),
                    self.collect(&l)?,
                    self.collect(&r)?,
                )
            }
            OverlapTest::PowerLeft(j, i) => {
                // a_j^{o_j} a_i vs a_j^{o_j−1} (a_j a_i)
                let o = self.orders[j].unwrap();
                let mut l = self.power_rhs[j].as_ref().unwrap().letters().to_vec();
                l.push((i, 1));
                let ji = self.collect(&[(j, 1), (i, 1)])?;
                let mut r = single(j, o - 1);
                r.extend_from_slice(ji.letters());
                (
                    format!("a{0}^{1}*a{2} = a{0}^{3}*(a{0}*a{2})", j + 1, o, i + 1, o - 1),
                    self.collect(&l)?,
                    self.collect(&r)?,
                )
            }
            OverlapTest::PowerRight(j, i) => {
                // a_j (a_i^{o_i}) vs (a_j a_i) a_i^{o_i−1}
                let o = self.orders[i].unwrap();
                let mut l = single(j, 1);
                l.extend_from_slice(self.power_rhs[i].as_ref().unwrap().letters());
                let ji = self.collect(&[(j, 1), (i, 1)])?;
                let mut r = ji.letters().to_vec();
                r.push((i, o - 1));
                (
                    format!("a{0}*a{1}^{2} = (a{0}*a{1})*a{1}^{3}", j + 1, i + 1, o, o - 1),
                    self.collect(&l)?,
                    self.collect(&r)?,
                )
            }
            OverlapTest::PowerSelf(i) => {
                // a_i·a_i^{o_i} vs a_i^{o_i}·a_i
                let u = self.power_rhs[i].as_ref().unwrap();
                let mut l = single(i, 1);
                l.extend_from_slice(u.letters());
                let mut r = u.letters().to_vec();
                r.push((i, 1));
                (
                    format!("a{0}*a{0}^{1} = a{0}^{1}*a{0}", i + 1, self.orders[i].unwrap()),
                    self.collect(&l)?,
                    self.collect(&r)?,
                )
            }
            OverlapTest::InverseCancel(j, i) => {
                // (a_j a_i) a_i⁻¹ vs a_j   (infinite-order a_i)
                let ji = self.collect(&[(j, 1), (i, 1)])?;
                let mut l = ji.letters().to_vec();
                l.push((i, -1));
                (
                    format!("(a{0}*a{1})*a{1}^-1 = a{0}", j + 1, i + 1),
                    self.collect(&l)?,
                    NormalWord::single(j, 1),
                )
            }
            OverlapTest::InverseCancelNeg(j, i) => {
                // (a_j a_i⁻¹) a_i vs a_j   (infinite-order a_i)
                let ji = self.collect(&[(j, 1), (i, -1)])?;
                let mut l = ji.letters().to_vec();
                l.push((i, 1));
                (
                    format!("(a{0}*a{1}^-1)*a{1} = a{0}", j + 1, i + 1),
                    self.collect(&l)?,
                    NormalWord::single(j, 1),
                )
            }
            OverlapTest::LeftInverseCancel(j, i) => {
                // a_j⁻¹ (a_j a_i) vs a_i   (infinite-order a_j)
                let ji = self.collect(&[(j, 1), (i, 1)])?;
                let mut l = vec![(j, -1)];
                l.extend_from_slice(ji.letters());
                (
                    format!("a{0}^-1*(a{0}*a{1}) = a{1}", j + 1, i + 1),
                    self.collect(&l)?,
                    NormalWord::single(i, 1),
                )
            }
        };
        if left == right {
            Ok(None)
        } else {
            Ok(Some(ConsistencyViolation { overlap: name, left, right }))
        }
    }

    /// Run all overlap identities and return the violations (empty iff the
    /// presentation is consistent, i.e. normal forms are unique).
    pub fn consistency_check(&self) -> Result<Vec<ConsistencyViolation>, PcpError> {
        self.consistency_violations(None)
    }

    /// Weight-filtered variant used when completing presentations of bounded
    /// class; `None` runs every test.
    pub fn consistency_violations(
        &self,
        max_total_weight: Option<u32>,
    ) -> Result<Vec<ConsistencyViolation>, PcpError> {
        let tests = self.overlap_tests(max_total_weight);
        let results: Result<Vec<Option<ConsistencyViolation>>, PcpError> =
            tests.par_iter().map(|t| self.run_overlap(t)).collect();
        Ok(results?.into_iter().flatten().collect())
    }

    pub(crate) fn weights_mut(&mut self) -> &mut Vec<u32> {
        &mut self.weights
    }

    pub(crate) fn set_central_from(&mut self, idx: usize) {
        debug_assert!(idx <= self.ngens());
        self.central_from = idx;
    }

    pub(crate) fn set_epimorphism(&mut self, epi: Vec<NormalWord>) {
        self.epimorphism = epi;
    }

    /// Record a derived inverse conjugate relation `a_j^{a_i⁻¹} = w`.
    pub(crate) fn insert_conj_inv(&mut self, i: usize, j: usize, w: NormalWord) {
        debug_assert!(i < j && self.orders[i].is_none());
        self.conj_inv.insert((i, j), w);
    }

    /// Decompose into raw parts (used by quotient construction).
    pub(crate) fn into_parts(
        self,
    ) -> (
        Vec<u32>,
        Vec<Option<i64>>,
        Vec<Option<NormalWord>>,
        BTreeMap<(usize, usize), NormalWord>,
        BTreeMap<(usize, usize), NormalWord>,
        usize,
        Vec<NormalWord>,
    ) {
        (
            self.weights,
            self.orders,
            self.power_rhs,
            self.conj,
            self.conj_inv,
            self.central_from,
            self.epimorphism,
        )
    }
}

#[derive(Debug, Clone, Copy)]
enum OverlapTest {
    /// `a_k (a_j a_i) = (a_k a_j) a_i`, `k > j > i`.
    Assoc(usize, usize, usize),
    /// `a_j^{o_j}·a_i = a_j^{o_j−1}·(a_j a_i)`, `j > i`.
    PowerLeft(usize, usize),
    /// `a_j·a_i^{o_i} = (a_j a_i)·a_i^{o_i−1}`, `j > i`.
    PowerRight(usize, usize),
    /// `a_i·a_i^{o_i} = a_i^{o_i}·a_i`.
    PowerSelf(usize),
    /// `(a_j a_i) a_i⁻¹ = a_j` for infinite-order `a_i`.
    InverseCancel(usize, usize),
    /// `(a_j a_i⁻¹) a_i = a_j` for infinite-order `a_i`.
    InverseCancelNeg(usize, usize),
    /// `a_j⁻¹(a_j a_i) = a_i` for infinite-order `a_j`.
    LeftInverseCancel(usize, usize),
}

/// Result of imposing relations on the central block: the quotient
/// presentation plus the fate of each central generator.
#[derive(Debug, Clone)]
pub struct CentralQuotient {
    pub presentation: PcPresentation,
    /// For each old central generator: its new index, or `None` if it was
    /// eliminated.
    pub central_map: Vec<Option<usize>>,
    /// Replacement words (over old central coordinates) for eliminated
    /// generators, parallel to `central_map` entries that are `None`.
    pub eliminated: BTreeMap<usize, Vec<i64>>,
}

/// Impose ℤ-linear relations (rows over the central-block coordinates) on
/// the central generators of `p`, which must all currently have infinite
/// order.  Generators hit by a unit pivot are eliminated; a pivot `d ≥ 2`
/// fixes a relative order `d`; the rest stay free.  Right-hand sides and the
/// epimorphism are rewritten accordingly.
pub fn quotient_by_central(p: &PcPresentation, relations: &[Vec<i64>]) -> Result<CentralQuotient, PcpError> {
    let n = p.ngens();
    let c0 = p.central_from();
    let q = n - c0;
    for g in c0..n {
        if p.orders()[g].is_some() {
            return Err(PcpError::Invalid(format!(
                "central generator a{} must have infinite order before quotienting",
                g + 1
            )));
        }
    }
    for r in relations {
        if r.len() != q {
            return Err(PcpError::Invalid("relation row has wrong length".into()));
        }
    }
    let mut lat = crate::ilat::Lat64::empty(q);
    for r in relations {
        lat.add_row(r.clone()).map_err(|_| PcpError::Overflow)?;
    }
    let rows = lat.canonical_basis().map_err(|_| PcpError::Overflow)?;
    let pivots: Vec<usize> = lat.pivots().to_vec();

    // Fate of each central coordinate.
    let mut elim: BTreeMap<usize, Vec<i64>> = BTreeMap::new(); // coord -> replacement over old coords
    let mut order_of: Vec<Option<i64>> = vec![None; q];
    let mut pow_vec: Vec<Option<Vec<i64>>> = vec![None; q];
    for (row, &pc) in rows.iter().zip(&pivots) {
        let d = row[pc];
        debug_assert!(d > 0);
        let mut rest: Vec<i64> = row.clone();
        rest[pc] = 0;
        for x in rest.iter_mut() {
            *x = x.checked_neg().ok_or(PcpError::Overflow)?;
        }
        if d == 1 {
            elim.insert(pc, rest);
        } else {
            order_of[pc] = Some(d);
            pow_vec[pc] = Some(rest);
        }
    }

    // New indices for surviving central generators.
    let mut central_map: Vec<Option<usize>> = vec![None; q];
    let mut next = c0;
    for t in 0..q {
        if !elim.contains_key(&t) {
            central_map[t] = Some(next);
            next += 1;
        }
    }
    let new_n = next;

    // Rewrite a central exponent vector through eliminations, then normalize
    // exponents of finite-order survivors (descending cascade is not needed:
    // ascending order works because overflow corrections only reference later
    // coordinates).
    let rewrite_vec = |v: &[i64]| -> Result<Vec<i64>, PcpError> {
        let mut out = vec![0i64; q];
        for (t, &e) in v.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if let Some(rep) = elim.get(&t) {
                for (s, &m) in rep.iter().enumerate() {
                    if m != 0 {
                        // Replacements never reference eliminated coordinates.
                        debug_assert!(!elim.contains_key(&s));
                        out[s] = out[s]
                            .checked_add(e.checked_mul(m).ok_or(PcpError::Overflow)?)
                            .ok_or(PcpError::Overflow)?;
                    }
                }
            } else {
                out[t] = out[t].checked_add(e).ok_or(PcpError::Overflow)?;
            }
        }
        for t in 0..q {
            if let Some(o) = order_of[t] {
                let e = out[t];
                let qq = e.div_euclid(o);
                if qq != 0 {
                    out[t] = e.rem_euclid(o);
                    for (s, &m) in pow_vec[t].as_ref().unwrap().iter().enumerate() {
                        if m != 0 {
                            debug_assert!(s > t, "power overflow must cascade forward");
                            out[s] = out[s]
                                .checked_add(m.checked_mul(qq).ok_or(PcpError::Overflow)?)
                                .ok_or(PcpError::Overflow)?;
                        }
                    }
                }
            }
        }
        Ok(out)
    };

    let rewrite_word = |w: &NormalWord| -> Result<NormalWord, PcpError> {
        let mut headpart: Vec<Letter> = Vec::new();
        let mut central = vec![0i64; q];
        for &(g, e) in w.letters() {
            if g < c0 {
                headpart.push((g, e));
            } else {
                central[g - c0] = e;
            }
        }
        let central = rewrite_vec(&central)?;
        for (t, &e) in central.iter().enumerate() {
            if e != 0 {
                let ng = central_map[t].expect("nonzero exponent on eliminated coordinate");
                headpart.push((ng, e));
            }
        }
        Ok(NormalWord { letters: headpart })
    };

    let mut weights = p.weights()[..c0].to_vec();
    let mut orders: Vec<Option<i64>> = p.orders()[..c0].to_vec();
    let mut power_rhs: Vec<Option<NormalWord>> = Vec::with_capacity(new_n);
    for i in 0..c0 {
        power_rhs.push(match p.power(i) {
            Some(w) => Some(rewrite_word(w)?),
            None => None,
        });
    }
    for t in 0..q {
        if central_map[t].is_some() {
            weights.push(p.weights()[c0 + t]);
            orders.push(order_of[t]);
            power_rhs.push(match &pow_vec[t] {
                Some(v) => Some(rewrite_word(&central_word_from_vec(c0, v))?),
                None => None,
            });
        }
    }
    let mut conj = BTreeMap::new();
    for (&(i, j), w) in &p.conj {
        let nw = rewrite_word(w)?;
        conj.insert((i, j), nw);
    }
    let mut conj_inv = BTreeMap::new();
    for (&(i, j), w) in &p.conj_inv {
        conj_inv.insert((i, j), rewrite_word(w)?);
    }
    let mut epi = Vec::new();
    for w in p.epimorphism() {
        epi.push(rewrite_word(w)?);
    }
    let presentation = PcPresentation::new(weights, orders, power_rhs, conj, conj_inv, c0, epi)?;
    Ok(CentralQuotient { presentation, central_map, eliminated: elim })
}

fn central_word_from_vec(c0: usize, v: &[i64]) -> NormalWord {
    NormalWord {
        letters: v
            .iter()
            .enumerate()
            .filter(|&(_, &e)| e != 0)
            .map(|(t, &e)| (c0 + t, e))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nw(letters: &[Letter]) -> NormalWord {
        NormalWord::from_sorted(letters.to_vec())
    }

    /// Dihedral group of order 8: a₁² = 1, a₂⁴ = 1, a₂^{a₁} = a₂³.
    fn dihedral8() -> PcPresentation {
        let mut conj = BTreeMap::new();
        conj.insert((0, 1), nw(&[(1, 3)]));
        PcPresentation::new(
            vec![1, 1],
            vec![Some(2), Some(4)],
            vec![Some(NormalWord::identity()), Some(NormalWord::identity())],
            conj,
            BTreeMap::new(),
            2,
            vec![],
        )
        .unwrap()
    }

    /// Free nilpotent group of class 2 on x, y: z = [y, x] central,
    /// y^x = y·z, y^{x⁻¹} = y·z⁻¹.
    fn heisenberg() -> PcPresentation {
        let mut conj = BTreeMap::new();
        conj.insert((0, 1), nw(&[(1, 1), (2, 1)]));
        let mut conj_inv = BTreeMap::new();
        conj_inv.insert((0, 1), nw(&[(1, 1), (2, -1)]));
        PcPresentation::new(
            vec![1, 1, 2],
            vec![None, None, None],
            vec![None, None, None],
            conj,
            conj_inv,
            2,
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn dihedral_collection() {
        let p = dihedral8();
        // a₂·a₁ collects to a₁·a₂³.
        let w = p.collect(&[(1, 1), (0, 1)]).unwrap();
        assert_eq!(w, nw(&[(0, 1), (1, 3)]));
        // a₂²·a₁·a₂ = a₁·a₂^{3·2+1} = a₁·a₂³ (mod 4: 7 → 3).
        let w2 = p.collect(&[(1, 2), (0, 1), (1, 1)]).unwrap();
        assert_eq!(w2, nw(&[(0, 1), (1, 3)]));
        // Inverses: a₂⁻¹ = a₂³.
        let w3 = p.collect(&[(1, -1)]).unwrap();
        assert_eq!(w3, nw(&[(1, 3)]));
        assert!(p.consistency_check().unwrap().is_empty());
        assert_eq!(p.order(), Some(BigInt::from(8)));
    }

    #[test]
    fn dihedral_element_orders() {
        let p = dihedral8();
        // a₁·a₂ has order 2 in D₈: (a₁a₂)² = a₁a₂a₁a₂ = a₂³·a₂ = 1.
        let x = nw(&[(0, 1), (1, 1)]);
        let sq = p.multiply(&x, &x).unwrap();
        assert!(sq.is_identity());
    }

    #[test]
    fn corrupted_dihedral_is_inconsistent() {
        // Replacing the conjugate relation by a₂^{a₁} = a₂² forces a₂ = 1 in
        // the presented group, so overlap identities must fail.
        let mut conj = BTreeMap::new();
        conj.insert((0, 1), nw(&[(1, 2)]));
        let p = PcPresentation::new(
            vec![1, 1],
            vec![Some(2), Some(4)],
            vec![Some(NormalWord::identity()), Some(NormalWord::identity())],
            conj,
            BTreeMap::new(),
            2,
            vec![],
        )
        .unwrap();
        let viols = p.consistency_check().unwrap();
        assert!(!viols.is_empty());
        // The a₂·a₁² overlap distinguishes a₂ from 1.
        assert!(viols.iter().any(|v| {
            (v.left == NormalWord::single(1, 1) && v.right.is_identity())
                || (v.right == NormalWord::single(1, 1) && v.left.is_identity())
        }));
    }

    #[test]
    fn heisenberg_collection_and_consistency() {
        let p = heisenberg();
        // y·x = x·y·z
        assert_eq!(p.collect(&[(1, 1), (0, 1)]).unwrap(), nw(&[(0, 1), (1, 1), (2, 1)]));
        // y·x⁻¹ = x⁻¹·y·z⁻¹
        assert_eq!(
            p.collect(&[(1, 1), (0, -1)]).unwrap(),
            nw(&[(0, -1), (1, 1), (2, -1)])
        );
        // [y, x] = z: y⁻¹x⁻¹yx
        assert_eq!(
            p.collect(&[(1, -1), (0, -1), (1, 1), (0, 1)]).unwrap(),
            nw(&[(2, 1)])
        );
        // (xy)³ = x³y³z³ (collection of a central commutator count 1+2).
        let xy = nw(&[(0, 1), (1, 1)]);
        let cube = p.power_nf(&xy, 3).unwrap();
        assert_eq!(cube, nw(&[(0, 3), (1, 3), (2, 3)]));
        assert!(p.consistency_check().unwrap().is_empty());
        assert_eq!(p.order(), None);
    }

    #[test]
    fn heisenberg_inverse_roundtrip() {
        let p = heisenberg();
        let w = nw(&[(0, 2), (1, -3), (2, 5)]);
        let inv = p.invert(&w).unwrap();
        assert!(p.multiply(&w, &inv).unwrap().is_identity());
        assert!(p.multiply(&inv, &w).unwrap().is_identity());
    }

    #[test]
    fn quotient_by_central_orders_and_elimination() {
        let p = heisenberg();
        // Impose 2z = 0: z gets order 2.
        let q = quotient_by_central(&p, &[vec![2]]).unwrap();
        assert_eq!(q.presentation.orders(), &[None, None, Some(2)]);
        assert!(q.presentation.consistency_check().unwrap().is_empty());
        // y²·x: z exponent 2 reduces to 0.
        let w = q.presentation.collect(&[(1, 2), (0, 1)]).unwrap();
        assert_eq!(w, nw(&[(0, 1), (1, 2)]));

        // Impose z = 0: abelianization ℤ².
        let q2 = quotient_by_central(&p, &[vec![1]]).unwrap();
        assert_eq!(q2.presentation.ngens(), 2);
        assert_eq!(q2.presentation.collect(&[(1, 1), (0, 1)]).unwrap(), nw(&[(0, 1), (1, 1)]));
        assert!(q2.presentation.consistency_check().unwrap().is_empty());
    }

    #[test]
    fn central_overflow_cascades() {
        // Central block: t₁ with order 2 and t₁² = t₂, t₂ free.
        let p = PcPresentation::new(
            vec![1, 2, 2],
            vec![None, Some(2), None],
            vec![None, Some(nw(&[(2, 1)])), None],
            BTreeMap::new(),
            BTreeMap::new(),
            1,
            vec![],
        )
        .unwrap();
        // t₁⁵ = t₁·t₂²
        let w = p.collect(&[(1, 5)]).unwrap();
        assert_eq!(w, nw(&[(1, 1), (2, 2)]));
        // t₁⁻¹ = t₁·t₂⁻¹
        let w2 = p.collect(&[(1, -1)]).unwrap();
        assert_eq!(w2, nw(&[(1, 1), (2, -1)]));
    }

    #[test]
    fn validation_rejects_bad_input() {
        // Conjugate rhs with out-of-range exponent.
        let mut conj = BTreeMap::new();
        conj.insert((0, 1), nw(&[(1, 5)]));
        assert!(PcPresentation::new(
            vec![1, 1],
            vec![Some(2), Some(4)],
            vec![Some(NormalWord::identity()), Some(NormalWord::identity())],
            conj,
            BTreeMap::new(),
            2,
            vec![],
        )
        .is_err());
        // Order 1 is not allowed.
        assert!(PcPresentation::new(
            vec![1],
            vec![Some(1)],
            vec![Some(NormalWord::identity())],
            BTreeMap::new(),
            BTreeMap::new(),
            1,
            vec![],
        )
        .is_err());
    }
}
