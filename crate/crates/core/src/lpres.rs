//! Finite L-presentations and their truncations.
//!
//! A finite L-presentation `⟨X | Q | Φ | R⟩` consists of a finite alphabet
//! `X`, finite sets `Q, R` of words in the free group `F` on `X`, and a
//! finite set `Φ` of endomorphisms of `F`.  It presents the group
//! `F / ⟨Q ∪ ⋃_{φ ∈ Φ*} φ(R)⟩^F`, where `Φ*` is the monoid generated by `Φ`
//! under composition.  The presentation is *ascending* when `Q` is empty;
//! it is *invariant* when every `φ ∈ Φ` induces an endomorphism of the
//! presented group (automatic in the ascending case).
//!
//! Truncating at radius `ℓ` keeps only the images under products of at most
//! `ℓ` endomorphisms, giving an ordinary finite presentation of a group that
//! maps onto the L-presented group.

use crate::word::{Alphabet, FreeEndomorphism, FreeWord};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// A finite presentation `⟨X | relators⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinitePresentation {
    alphabet: Alphabet,
    relators: Vec<FreeWord>,
}

impl FinitePresentation {
    /// Build a finite presentation; trivial relators are dropped and exact
    /// duplicates removed (first occurrence kept).
    pub fn new(alphabet: Alphabet, relators: Vec<FreeWord>) -> Result<Self, String> {
        let rank = alphabet.rank();
        let mut seen: HashSet<FreeWord> = HashSet::new();
        let mut out = Vec::new();
        for r in relators {
            if let Some(m) = r.max_generator() {
                if m >= rank {
                    return Err(format!("relator {r} uses a generator beyond rank {rank}"));
                }
            }
            if !r.is_identity() && seen.insert(r.clone()) {
                out.push(r);
            }
        }
        Ok(FinitePresentation { alphabet, relators: out })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rank(&self) -> usize {
        self.alphabet.rank()
    }

    pub fn relators(&self) -> &[FreeWord] {
        &self.relators
    }
}

/// A finite L-presentation `⟨X | Q | Φ | R⟩`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LPresentation {
    alphabet: Alphabet,
    fixed: Vec<FreeWord>,
    endomorphisms: Vec<FreeEndomorphism>,
    endo_names: Vec<String>,
    iterated: Vec<FreeWord>,
    /// Declares that every endomorphism maps the defining kernel into itself
    /// (automatic when `fixed` is empty).  Enables algorithms that spin the
    /// fixed relators alongside the iterated ones.
    #[serde(default)]
    invariant: bool,
}

impl LPresentation {
    /// Build an L-presentation.  Words must fit the alphabet, endomorphism
    /// ranks must match, and endomorphism names must be distinct identifiers.
    pub fn new(
        alphabet: Alphabet,
        fixed: Vec<FreeWord>,
        endomorphisms: Vec<(String, FreeEndomorphism)>,
        iterated: Vec<FreeWord>,
    ) -> Result<Self, String> {
        let rank = alphabet.rank();
        for w in fixed.iter().chain(&iterated) {
            if let Some(m) = w.max_generator() {
                if m >= rank {
                    return Err(format!("relator {w} uses a generator beyond rank {rank}"));
                }
            }
        }
        let mut names = Vec::new();
        let mut endos = Vec::new();
        for (name, e) in endomorphisms {
            if e.rank() != rank {
                return Err(format!(
                    "endomorphism {name} has rank {}, presentation has rank {rank}",
                    e.rank()
                ));
            }
            if names.contains(&name) {
                return Err(format!("duplicate endomorphism name {name:?}"));
            }
            names.push(name);
            endos.push(e);
        }
        let fixed = dedup_nontrivial(fixed);
        let iterated = dedup_nontrivial(iterated);
        Ok(LPresentation {
            alphabet,
            fixed,
            endomorphisms: endos,
            endo_names: names,
            iterated,
            invariant: false,
        })
    }

    /// Declare the presentation invariant: each endomorphism maps the normal
    /// closure of `Q ∪ ⋃ R^σ` into itself.  This is the caller's assertion
    /// and is not verified.
    pub fn mark_invariant(mut self) -> Self {
        self.invariant = true;
        self
    }

    /// Whether the kernel is known to be preserved by every endomorphism
    /// (trivially true for ascending presentations).
    pub fn is_invariant(&self) -> bool {
        self.fixed.is_empty() || self.invariant
    }

    /// Convert a finite presentation into an L-presentation with `Φ = ∅`
    /// (every relator iterated, vacuously).
    pub fn from_finite(fp: &FinitePresentation) -> Self {
        LPresentation {
            alphabet: fp.alphabet.clone(),
            fixed: Vec::new(),
            endomorphisms: Vec::new(),
            endo_names: Vec::new(),
            iterated: fp.relators.clone(),
            invariant: false,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rank(&self) -> usize {
        self.alphabet.rank()
    }

    /// The fixed relators `Q`.
    pub fn fixed(&self) -> &[FreeWord] {
        &self.fixed
    }

    /// The iterated relators `R`.
    pub fn iterated(&self) -> &[FreeWord] {
        &self.iterated
    }

    pub fn endomorphisms(&self) -> &[FreeEndomorphism] {
        &self.endomorphisms
    }

    pub fn endo_names(&self) -> &[String] {
        &self.endo_names
    }

    /// Ascending means `Q = ∅`; such presentations are always invariant.
    pub fn is_ascending(&self) -> bool {
        self.fixed.is_empty()
    }

    /// All distinct endomorphisms expressible as products of at most
    /// `radius` members of `Φ` (including the identity), deduplicated by
    /// their generator images, in breadth-first order.
    pub fn phi_ball(&self, radius: usize) -> Vec<FreeEndomorphism> {
        let rank = self.rank();
        let mut seen: HashSet<Vec<FreeWord>> = HashSet::new();
        let mut out: Vec<FreeEndomorphism> = Vec::new();
        let mut frontier: Vec<FreeEndomorphism> = Vec::new();
        let id = FreeEndomorphism::identity(rank);
        seen.insert(id.images().to_vec());
        out.push(id.clone());
        frontier.push(id);
        for _ in 0..radius {
            let mut next = Vec::new();
            for f in &frontier {
                for e in &self.endomorphisms {
                    // Left-extension: products grow as e_k ∘ … ∘ e_1.
                    let g = e.compose(f);
                    if seen.insert(g.images().to_vec()) {
                        out.push(g.clone());
                        next.push(g);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        out
    }

    /// The finite presentation with relator set
    /// `Q ∪ { φ(r) : φ in the Φ-ball of the given radius, r ∈ R }`.
    pub fn truncate(&self, radius: usize) -> FinitePresentation {
        let mut relators = self.fixed.clone();
        for f in self.phi_ball(radius) {
            for r in &self.iterated {
                relators.push(f.apply(r));
            }
        }
        FinitePresentation::new(self.alphabet.clone(), relators)
            .expect("truncation of a valid presentation is valid")
    }
}

fn dedup_nontrivial(words: Vec<FreeWord>) -> Vec<FreeWord> {
    let mut seen = HashSet::new();
    words
        .into_iter()
        .filter(|w| !w.is_identity() && seen.insert(w.clone()))
        .collect()
}

/// Word for a single generator raised to an integer power.
fn gen_pow(g: usize, e: i64) -> FreeWord {
    FreeWord::generator(g).power_i(e).expect("small power")
}

/// The Grigorchuk group on `{a, b, c, d}`: fixed relators
/// `a², b², c², d², bcd`; one substitution
/// `a ↦ aca, b ↦ d, c ↦ b, d ↦ c`; iterated relators `(ad)⁴, (adacac)⁴`.
pub fn preset_grigorchuk() -> LPresentation {
    let alphabet = Alphabet::new(["a", "b", "c", "d"]).unwrap();
    let [a, b, c, d] = [0, 1, 2, 3].map(FreeWord::generator);
    let fixed = vec![
        a.power_i(2).unwrap(),
        b.power_i(2).unwrap(),
        c.power_i(2).unwrap(),
        d.power_i(2).unwrap(),
        b.multiply(&c).multiply(&d),
    ];
    let sigma = FreeEndomorphism::new(vec![
        a.multiply(&c).multiply(&a), // a ↦ aca
        d.clone(),                   // b ↦ d
        b.clone(),                   // c ↦ b
        c.clone(),                   // d ↦ c
    ])
    .unwrap();
    let ad = a.multiply(&d);
    let adacac = a
        .multiply(&d)
        .multiply(&a)
        .multiply(&c)
        .multiply(&a)
        .multiply(&c);
    let iterated = vec![ad.power_i(4).unwrap(), adacac.power_i(4).unwrap()];
    LPresentation::new(alphabet, fixed, vec![("sigma".to_string(), sigma)], iterated)
        .unwrap()
        .mark_invariant()
}

/// The Fabrykowski–Gupta family Γ_d, `d ≥ 3`, on generators `{a, r}` with
/// the ascending presentation whose substitution is
/// `a ↦ a·r·a⁻¹, r ↦ r`.  Writing `s_i = a^{−i}·r·a^{i}` (indices mod `d`),
/// the iterated relators are
///
/// * `a^d`;
/// * `[s_i^{s_{i−1}^k}, s_j^{s_{j−1}^ℓ}]` for `1 ≤ i < j ≤ d` with
///   `2 ≤ j − i ≤ d − 2` and `0 ≤ k, ℓ < d`;
/// * `(s_i^{s_{i−1}^{k+1}})⁻¹ · s_i^{s_{i−1}^k · s_{i−1}^{s_{i−2}^ℓ}}`
///   for `1 ≤ i ≤ d` and `0 ≤ k, ℓ < d`.
pub fn preset_gamma(d: usize) -> Result<LPresentation, String> {
    if d < 3 {
        return Err(format!("gamma preset requires d ≥ 3, got {d}"));
    }
    let di = d as i64;
    let alphabet = Alphabet::new(["a", "r"]).unwrap();
    let a = FreeWord::generator(0);
    let r = FreeWord::generator(1);
    // s_i = r^{a^i} = a^{−i}·r·a^{i}, with i normalized into [0, d).
    let s = |i: i64| -> FreeWord {
        let i = i.rem_euclid(di);
        r.conjugate(&gen_pow(0, i))
    };
    let mut iterated = vec![gen_pow(0, di)];
    // Commutators of conjugates of non-adjacent s_i, s_j.
    for i in 1..=di {
        for j in i + 2..=di.min(i + di - 2) {
            for k in 0..di {
                for l in 0..di {
                    let u = s(i).conjugate(&s(i - 1).power_i(k).unwrap());
                    let v = s(j).conjugate(&s(j - 1).power_i(l).unwrap());
                    iterated.push(FreeWord::commutator(&u, &v));
                }
            }
        }
    }
    // Rewriting rule for the conjugation action of s_{i−1} on s_i.
    for i in 1..=di {
        for k in 0..di {
            for l in 0..di {
                let lhs = s(i).conjugate(&s(i - 1).power_i(k + 1).unwrap());
                let t = s(i - 1).conjugate(&s(i - 2).power_i(l).unwrap());
                let rhs = s(i).conjugate(&s(i - 1).power_i(k).unwrap().multiply(&t));
                iterated.push(lhs.invert().multiply(&rhs));
            }
        }
    }
    let phi = FreeEndomorphism::new(vec![
        a.multiply(&r).multiply(&a.invert()), // a ↦ a r a⁻¹
        r.clone(),                            // r ↦ r
    ])
    .unwrap();
    LPresentation::new(alphabet, Vec::new(), vec![("phi".to_string(), phi)], iterated)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grigorchuk_shape() {
        let g = preset_grigorchuk();
        assert_eq!(g.rank(), 4);
        assert_eq!(g.fixed().len(), 5);
        assert_eq!(g.iterated().len(), 2);
        assert!(!g.is_ascending());
        let sigma = &g.endomorphisms()[0];
        assert_eq!(sigma.image(0).letters(), &[1, 3, 1]); // a ↦ aca
        assert_eq!(sigma.image(1).letters(), &[4]); // b ↦ d
        assert_eq!(sigma.image(2).letters(), &[2]); // c ↦ b
        assert_eq!(sigma.image(3).letters(), &[3]); // d ↦ c
    }

    #[test]
    fn grigorchuk_truncation_sizes() {
        let g = preset_grigorchuk();
        assert_eq!(g.truncate(0).relators().len(), 7);
        assert_eq!(g.truncate(1).relators().len(), 9);
        assert_eq!(g.truncate(2).relators().len(), 11);
    }

    #[test]
    fn grigorchuk_sigma_of_iterated_relator() {
        // σ((ad)⁴) = (aca·c)⁴ after substitution.
        let g = preset_grigorchuk();
        let sigma = &g.endomorphisms()[0];
        let img = sigma.apply(&g.iterated()[0]);
        let a = FreeWord::generator(0);
        let c = FreeWord::generator(2);
        let acac = a.multiply(&c).multiply(&a).multiply(&c);
        assert_eq!(img, acac.power_i(4).unwrap());
    }

    #[test]
    fn phi_ball_sizes() {
        let g = preset_grigorchuk();
        assert_eq!(g.phi_ball(0).len(), 1);
        assert_eq!(g.phi_ball(3).len(), 4); // id, σ, σ², σ³ all distinct

        let gamma = preset_gamma(3).unwrap();
        assert_eq!(gamma.phi_ball(4).len(), 5);
    }

    #[test]
    fn gamma_shape_and_counts() {
        // d = 3: no non-adjacent pairs; 27 rewriting relators of which the
        // 9 with l = 0 are freely trivial; plus a³.
        let g3 = preset_gamma(3).unwrap();
        assert!(g3.is_ascending());
        assert_eq!(g3.iterated().len(), 1 + 18);
        // d = 5: pairs (1,3),(1,4),(2,4),(2,5),(3,5) ⇒ 125 commutators,
        // plus 100 nontrivial rewriting relators, plus a⁵.
        let g5 = preset_gamma(5).unwrap();
        assert_eq!(g5.iterated().len(), 1 + 125 + 100);
        assert!(preset_gamma(2).is_err());
    }

    #[test]
    fn gamma_substitution_fixes_r_and_twists_a() {
        let g = preset_gamma(4).unwrap();
        let phi = &g.endomorphisms()[0];
        assert_eq!(phi.image(0).letters(), &[1, 2, -1]);
        assert_eq!(phi.image(1).letters(), &[2]);
    }

    #[test]
    fn gamma_first_rewriting_relator_nontrivial_and_reduced() {
        let g = preset_gamma(3).unwrap();
        for w in g.iterated() {
            assert!(!w.is_identity());
            for p in w.letters().windows(2) {
                assert!(p[0] != -p[1], "relator not freely reduced");
            }
        }
    }

    #[test]
    fn truncate_dedups_identical_images() {
        // With φ = id on all generators every image coincides with R itself.
        let ab = Alphabet::new(["x"]).unwrap();
        let lp = LPresentation::new(
            ab,
            vec![],
            vec![("e".to_string(), FreeEndomorphism::identity(1))],
            vec![FreeWord::generator(0).power_i(2).unwrap()],
        )
        .unwrap();
        assert_eq!(lp.truncate(5).relators().len(), 1);
        assert_eq!(lp.phi_ball(5).len(), 1);
    }

    #[test]
    fn from_finite_roundtrip() {
        let ab = Alphabet::new(["x", "y"]).unwrap();
        let fp = FinitePresentation::new(
            ab,
            vec![FreeWord::from_letters([1, 1]), FreeWord::from_letters([2, 2])],
        )
        .unwrap();
        let lp = LPresentation::from_finite(&fp);
        assert!(lp.is_ascending());
        assert_eq!(lp.truncate(0), fp);
    }
}
