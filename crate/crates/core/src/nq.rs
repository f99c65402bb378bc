//! Nilpotent quotients `G/γ_{c+1}(G)` of finitely L-presented groups.
//!
//! The quotients are produced class by class as consistent weighted
//! polycyclic presentations.  Class 1 is the abelianization, computed by
//! closing the abelianized relator rows under the (linearized) substitutions.
//! The step from class `c` to `c+1` attaches a central *tail* generator to
//! every non-defining relation of the current presentation (power relations,
//! commutator relations of total weight `≤ c+1`, and epimorphism images of
//! generators that do not define a quotient generator), derives the inverse
//! conjugation relations, and then pins the tails down by two kinds of
//! central relations:
//!
//! * *consistency defects*: differences of the two collected sides of each
//!   overlap identity, which must vanish for normal forms to be unique;
//! * *relator images*: evaluations of the presentation's relators under all
//!   induced substitution images, enumerated breadth-first with redundancy
//!   pruning against the growing relation lattice.
//!
//! Imposing the resulting lattice on the central block yields the next
//! quotient; the tails that survive are the new generators of weight `c+1`,
//! and the lower-central section `γ_{c+1}/γ_{c+2}` is read off their
//! relative orders.  The same covering data also yields one term of the
//! filtration of the Schur multiplier (see [`crate::dwyer`]): the image of
//! `H₂(G)` is `(S ∩ K)/D`, where `S` is the full relation lattice, `K` the
//! sublattice of tails that die in the abelianized covering, and `D` the
//! consistency lattice.

use crate::ilat::{HowellMod, Lat64, Ovf};
use crate::lpres::LPresentation;
use crate::pcp::{quotient_by_central, NormalWord, PcPresentation, PcpError};
use crate::word::{FreeWord, WordError};
use crate::zlat::{AbelianInvariants, IntMatrix, Lattice};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashSet, VecDeque};

/// Errors from quotient computations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NqError {
    #[error(transparent)]
    Pcp(#[from] PcpError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("class bound must be at least 1")]
    BadClass,
    #[error("not supported: {0}")]
    Unsupported(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// What a covering tail was attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TailKind {
    /// Image of source generator `r` under the epimorphism.
    Epi(usize),
    /// Power relation of generator `i`.
    Power(usize),
    /// Conjugation relation `a_j^{a_i}`.
    Conj(usize, usize),
}

/// How a quotient generator is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Definition {
    /// Image of source generator `r`.
    Epi(usize),
    /// Tail of the conjugation relation `a_j^{a_i} = w·a_g`.
    Commutator(usize, usize),
}

/// A nilpotent quotient together with its lower-central data.
#[derive(Debug, Clone)]
pub struct NilpotentQuotient {
    /// Consistent weighted polycyclic presentation of `G/γ_{class+1}(G)`.
    pub pc: PcPresentation,
    /// The achieved class (equals the requested bound unless the tower
    /// stabilized earlier).
    pub class: u32,
    /// `sections[k-1]` is the isomorphism type of `γ_k/γ_{k+1}`, `k = 1..=class`.
    pub sections: Vec<AbelianInvariants>,
    /// True when a step added no new generators, i.e. the maximal nilpotent
    /// quotient has been reached.
    pub stabilized: bool,
    /// Filtration terms of the Schur multiplier, one per executed covering
    /// (only populated when requested through [`crate::dwyer`]).
    pub multiplier: Vec<AbelianInvariants>,
}

struct StepState {
    pc: PcPresentation,
    defs: Vec<Definition>,
}

struct StepOutcome {
    survivors: usize,
    section: AbelianInvariants,
    entry: Option<AbelianInvariants>,
}

/// Exponent-sum row of a word, as arbitrary-precision integers.
fn ab_row_big(w: &FreeWord, n: usize) -> Vec<BigInt> {
    (0..n).map(|i| BigInt::from(w.exponent_sum(i))).collect()
}

/// Sparse abelianized rows of each substitution's generator images.
fn sparse_actions(lp: &LPresentation) -> Vec<Vec<Vec<(usize, i64)>>> {
    let n = lp.rank();
    lp.endomorphisms()
        .iter()
        .map(|e| {
            (0..n)
                .map(|i| {
                    let img = e.image(i);
                    (0..n)
                        .filter_map(|j| {
                            let s = img.exponent_sum(j);
                            if s != 0 {
                                Some((j, s))
                            } else {
                                None
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Rows to spin and rows to adjoin without spinning.  For an invariant
/// presentation every substituted fixed relator also lies in the kernel,
/// and the abelianized image of a normal closure is the span of its normal
/// generators' rows — so the fixed rows may seed the spin.  Doing so pushes
/// the lattice to full rank early, which keeps canonical representatives
/// (and hence all spun rows) pivot-bounded.
fn spin_seed_split(lp: &LPresentation) -> (Vec<&FreeWord>, Vec<&FreeWord>) {
    if lp.is_invariant() {
        (lp.fixed().iter().chain(lp.iterated()).collect(), Vec::new())
    } else {
        (lp.iterated().iter().collect(), lp.fixed().iter().collect())
    }
}

/// Spin entirely in 64-bit arithmetic; `Err(Ovf)` defers to the
/// arbitrary-precision path.  Every candidate row is replaced by its
/// canonical representative modulo the current lattice before being stored
/// or propagated — this leaves the spanned lattice unchanged while keeping
/// entries pivot-bounded, so repeated substitution images do not blow up.
fn spin_abelian_i64(
    lp: &LPresentation,
    sparse: &[Vec<Vec<(usize, i64)>>],
) -> Result<Lattice, Ovf> {
    let n = lp.rank();
    let (spun, adjoined) = spin_seed_split(lp);
    let mut lat = Lat64::empty(n);
    let mut queue: VecDeque<Vec<i64>> = VecDeque::new();
    for w in spun {
        let row: Vec<i64> = (0..n).map(|i| w.exponent_sum(i)).collect();
        let row = lat.reduce(&row)?;
        if lat.add_row(row.clone())? {
            queue.push_back(row);
        }
    }
    while let Some(v) = queue.pop_front() {
        for action in sparse {
            let mut out = vec![0i64; n];
            for (i, &vi) in v.iter().enumerate() {
                if vi == 0 {
                    continue;
                }
                for &(j, s) in &action[i] {
                    out[j] = vi
                        .checked_mul(s)
                        .and_then(|p| out[j].checked_add(p))
                        .ok_or(Ovf)?;
                }
            }
            let out = lat.reduce(&out)?;
            if lat.add_row(out.clone())? {
                queue.push_back(out);
            }
        }
    }
    for q in adjoined {
        lat.add_row((0..n).map(|i| q.exponent_sum(i)).collect())?;
    }
    Ok(lat.to_lattice())
}

/// Arbitrary-precision spin with the same reduce-first discipline.
fn spin_abelian_big(lp: &LPresentation, sparse: &[Vec<Vec<(usize, i64)>>]) -> Lattice {
    let n = lp.rank();
    let (spun, adjoined) = spin_seed_split(lp);
    let mut lat = Lattice::empty(n);
    let mut queue: VecDeque<Vec<BigInt>> = VecDeque::new();
    for w in spun {
        let row = lat.reduce(&ab_row_big(w, n));
        if lat.add_row(row.clone()) {
            queue.push_back(row);
        }
    }
    while let Some(v) = queue.pop_front() {
        for action in sparse {
            let mut out = vec![BigInt::from(0); n];
            for (i, vi) in v.iter().enumerate() {
                if vi.is_zero() {
                    continue;
                }
                for &(j, s) in &action[i] {
                    out[j] += vi * s;
                }
            }
            let out = lat.reduce(&out);
            if lat.add_row(out.clone()) {
                queue.push_back(out);
            }
        }
    }
    for q in adjoined {
        lat.add_row(ab_row_big(q, n));
    }
    lat
}

/// The lattice of abelianized relations: the closure of the iterated
/// relators' rows under the linearized substitutions, plus the fixed
/// relators' rows.  Substitution actions are kept as sparse rows and the
/// spin runs in 64-bit arithmetic when possible, so that large ranks
/// (subgroup presentations) stay cheap.
pub(crate) fn abelian_relation_lattice(lp: &LPresentation) -> Lattice {
    let stats = std::env::var_os("NQ_SPIN_STATS").is_some();
    let t0 = std::time::Instant::now();
    let sparse = sparse_actions(lp);
    match spin_abelian_i64(lp, &sparse) {
        Ok(lat) => {
            if stats {
                eprintln!(
                    "[ab] i64 spin rank {} dim {} in {:?}",
                    lat.rank(),
                    lp.rank(),
                    t0.elapsed()
                );
            }
            lat
        }
        Err(Ovf) => {
            if stats {
                eprintln!("[ab] i64 overflow after {:?}, big spin", t0.elapsed());
            }
            let lat = spin_abelian_big(lp, &sparse);
            if stats {
                eprintln!("[ab] big spin rank {} in {:?}", lat.rank(), t0.elapsed());
            }
            lat
        }
    }
}

/// Isomorphism type of `G/[G,G]`.
pub fn abelian_quotient(lp: &LPresentation) -> Result<AbelianInvariants, NqError> {
    let n = lp.rank();
    let lat = abelian_relation_lattice(lp);
    let t0 = std::time::Instant::now();
    let inv = AbelianInvariants::from_relation_matrix(
        n,
        IntMatrix::from_rows(n, lat.basis_rows().to_vec()),
    );
    if std::env::var_os("NQ_SPIN_STATS").is_some() {
        eprintln!("[ab] invariants from {}x{} in {:?}", lat.rank(), n, t0.elapsed());
    }
    Ok(inv)
}

fn big_to_i64(v: &[BigInt]) -> Result<Vec<i64>, NqError> {
    v.iter()
        .map(|x| {
            i64::try_from(x).map_err(|_| {
                NqError::Unsupported("abelianized relation entries exceed 64 bits".into())
            })
        })
        .collect()
}

/// Relation lattice with a fast 64-bit path that promotes itself to
/// arbitrary precision when an intermediate echelon combination overflows.
/// (The final reduced basis is almost always small again; only the
/// elimination coefficients blow up.)
///
/// When the lattice is known up front to contain `e·ℤ^n`, the `Mod` variant
/// tracks it as a row space over ℤ/e instead: entries then stay in `[0, e)`
/// through every elimination, which removes both overflow and the entry
/// swell that full-rank echelon accumulation suffers in columns that have
/// not yet met a pivot.
enum RelLat {
    Small(Lat64),
    Big(Lattice),
    Mod(HowellMod),
}

impl RelLat {
    fn new(ambient: usize) -> Self {
        RelLat::Small(Lat64::empty(ambient))
    }

    /// Lattice constrained to contain `modulus·ℤ^ambient`.
    fn new_mod(ambient: usize, modulus: i64) -> Self {
        RelLat::Mod(HowellMod::new(ambient, modulus))
    }

    fn add_row(&mut self, v: Vec<i64>) -> bool {
        match self {
            RelLat::Small(l) => match l.add_row(v.clone()) {
                Ok(grew) => grew,
                Err(Ovf) => {
                    let mut big = l.to_lattice();
                    let grew = big.add_row(v.iter().map(|&x| BigInt::from(x)).collect());
                    *self = RelLat::Big(big);
                    grew
                }
            },
            RelLat::Big(lat) => lat.add_row(v.iter().map(|&x| BigInt::from(x)).collect()),
            RelLat::Mod(h) => h.add_row(&v),
        }
    }

    /// Fully reduced basis, converted back to 64-bit entries.
    fn into_canonical_i64(self) -> Result<Vec<Vec<i64>>, NqError> {
        let big = match self {
            RelLat::Small(l) => match l.canonical_basis() {
                Ok(rows) => return Ok(rows),
                Err(Ovf) => l.to_lattice(),
            },
            RelLat::Big(lat) => lat,
            RelLat::Mod(h) => return Ok(h.canonical_hnf()),
        };
        big.canonical_basis().iter().map(|r| big_to_i64(r)).collect()
    }

    /// Fully reduced basis in arbitrary precision.
    fn into_canonical_big(self) -> Vec<Vec<BigInt>> {
        let big = match self {
            RelLat::Small(l) => match l.canonical_basis() {
                Ok(rows) => {
                    return rows
                        .into_iter()
                        .map(|r| r.into_iter().map(BigInt::from).collect())
                        .collect()
                }
                Err(Ovf) => l.to_lattice(),
            },
            RelLat::Big(lat) => lat,
            RelLat::Mod(h) => {
                return h
                    .canonical_hnf()
                    .into_iter()
                    .map(|r| r.into_iter().map(BigInt::from).collect())
                    .collect()
            }
        };
        big.canonical_basis()
    }
}

/// Class-1 quotient: presentation, generator definitions, and the section.
fn class_one(lp: &LPresentation) -> Result<(StepState, AbelianInvariants), NqError> {
    let n = lp.rank();
    let lat = abelian_relation_lattice(lp);
    let rows: Vec<Vec<i64>> = lat
        .basis_rows()
        .iter()
        .map(|r| big_to_i64(r))
        .collect::<Result<_, _>>()?;
    let section = AbelianInvariants::from_relation_matrix(
        n,
        IntMatrix::from_rows(n, lat.basis_rows().to_vec()),
    );
    let free = PcPresentation::new(
        vec![1; n],
        vec![None; n],
        vec![None; n],
        BTreeMap::new(),
        BTreeMap::new(),
        0,
        (0..n).map(|i| NormalWord::single(i, 1)).collect(),
    )
    .map_err(NqError::Pcp)?;
    let q = quotient_by_central(&free, &rows)?;
    let mut defs: Vec<Definition> = vec![Definition::Epi(usize::MAX); q.presentation.ngens()];
    for (src, slot) in q.central_map.iter().enumerate() {
        if let Some(g) = slot {
            defs[*g] = Definition::Epi(src);
        }
    }
    if defs.iter().any(|d| matches!(d, Definition::Epi(r) if *r == usize::MAX)) {
        return Err(NqError::Internal("abelianization left an undefined generator".into()));
    }
    Ok((StepState { pc: q.presentation, defs }, section))
}

/// The tailed covering presentation for one step.
struct Covering {
    star: PcPresentation,
    kinds: Vec<TailKind>,
    m: usize,
}

fn build_covering(
    pc: &PcPresentation,
    defs: &[Definition],
    lp: &LPresentation,
    class: u32,
) -> Result<Covering, NqError> {
    let m = pc.ngens();
    let target_w = class + 1;
    let defined_sources: HashSet<usize> = defs
        .iter()
        .filter_map(|d| match d {
            Definition::Epi(r) => Some(*r),
            _ => None,
        })
        .collect();
    let defined_pairs: HashSet<(usize, usize)> = defs
        .iter()
        .filter_map(|d| match d {
            Definition::Commutator(i, j) => Some((*i, *j)),
            _ => None,
        })
        .collect();

    // Tail order controls which tails the Hermite pivots prefer to
    // eliminate: epimorphism and power tails first, then commutator tails of
    // conjugator weight ≥ 2, then weight-1 conjugators on lower layers; the
    // expected new generators — weight-1 conjugators acting on the top layer
    // — come last.
    let mut kinds: Vec<TailKind> = Vec::new();
    for r in 0..lp.rank() {
        if !defined_sources.contains(&r) {
            kinds.push(TailKind::Epi(r));
        }
    }
    for i in 0..m {
        if pc.orders()[i].is_some() {
            kinds.push(TailKind::Power(i));
        }
    }
    let mut heavy = Vec::new();
    let mut light_low = Vec::new();
    let mut light_top = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let (wi, wj) = (pc.weight(i), pc.weight(j));
            if wi + wj > target_w || defined_pairs.contains(&(i, j)) {
                continue;
            }
            if wi >= 2 {
                heavy.push(TailKind::Conj(i, j));
            } else if wj < class {
                light_low.push(TailKind::Conj(i, j));
            } else {
                light_top.push(TailKind::Conj(i, j));
            }
        }
    }
    kinds.extend(heavy);
    kinds.extend(light_low);
    kinds.extend(light_top);
    let t = kinds.len();

    let mut weights = pc.weights().to_vec();
    weights.extend(std::iter::repeat(target_w).take(t));
    let mut orders: Vec<Option<i64>> = pc.orders().to_vec();
    orders.extend(std::iter::repeat(None).take(t));
    let mut power_rhs: Vec<Option<NormalWord>> =
        (0..m).map(|i| pc.power(i).cloned()).collect();
    power_rhs.extend(std::iter::repeat(None).take(t));
    let mut conj: BTreeMap<(usize, usize), NormalWord> = BTreeMap::new();
    for i in 0..m {
        for j in i + 1..m {
            if let Some(w) = pc.conjugate(i, j) {
                conj.insert((i, j), w.clone());
            }
        }
    }
    let mut epi: Vec<NormalWord> = pc.epimorphism().to_vec();

    let append_tail = |w: &NormalWord, tail: usize| -> NormalWord {
        let mut letters = w.letters().to_vec();
        letters.push((tail, 1));
        NormalWord::from_sorted(letters)
    };
    for (idx, kind) in kinds.iter().enumerate() {
        let tail = m + idx;
        match *kind {
            TailKind::Epi(r) => {
                epi[r] = append_tail(&epi[r], tail);
            }
            TailKind::Power(i) => {
                let rhs = power_rhs[i].take().expect("finite order has a power relation");
                power_rhs[i] = Some(append_tail(&rhs, tail));
            }
            TailKind::Conj(i, j) => {
                let rhs = conj.remove(&(i, j)).unwrap_or_else(|| NormalWord::single(j, 1));
                conj.insert((i, j), append_tail(&rhs, tail));
            }
        }
    }
    for (r, d) in defs.iter().enumerate() {
        if let Definition::Epi(src) = d {
            if epi[*src] != NormalWord::single(r, 1) {
                return Err(NqError::Internal("defining source image drifted".into()));
            }
        }
    }

    let mut star = PcPresentation::new(weights, orders, power_rhs, conj, BTreeMap::new(), m, epi)
        .map_err(NqError::Pcp)?;
    derive_inverse_conjugates(&mut star, class)?;
    Ok(Covering { star, kinds, m })
}

/// Compute `a_j^{a_i⁻¹}` for every infinite-order generator `a_i` below the
/// central block, by fixed-point refinement of `X·a_i = a_i·a_j`.
fn derive_inverse_conjugates(star: &mut PcPresentation, class: u32) -> Result<(), NqError> {
    let m = star.central_from();
    let max_iter = class as usize + 3;
    for i in (0..m).rev() {
        if star.orders()[i].is_some() {
            continue;
        }
        for j in i + 1..m {
            let mut x = NormalWord::single(j, 1);
            let mut solved = false;
            for _ in 0..max_iter {
                let mut xa = x.letters().to_vec();
                xa.push((i, 1));
                let l = star.collect(&xa)?;
                // Both sides have the shape a_i·(word in generators > i).
                let ll = l.letters();
                if ll.first() != Some(&(i, 1)) {
                    return Err(NqError::Internal(
                        "inverse conjugate solve lost its leading letter".into(),
                    ));
                }
                let w_l = &ll[1..];
                if w_l == [(j, 1)] {
                    solved = true;
                    break;
                }
                // δ = w_l⁻¹ · a_j, a correction of strictly deeper weight.
                let mut delta: Vec<(usize, i64)> =
                    w_l.iter().rev().map(|&(g, e)| (g, -e)).collect();
                delta.push((j, 1));
                let mut xd = x.letters().to_vec();
                xd.extend(star.collect(&delta)?.letters());
                x = star.collect(&xd)?;
            }
            if !solved {
                return Err(NqError::Internal("inverse conjugate solve did not converge".into()));
            }
            if x != NormalWord::single(j, 1) {
                star.insert_conj_inv(i, j, x);
            }
        }
    }
    Ok(())
}

/// Consistency defects of the covering as rows over the tail block.
fn defect_rows(star: &PcPresentation, m: usize, class: u32) -> Result<Vec<Vec<i64>>, NqError> {
    let n = star.ngens();
    let viols = star.consistency_violations(Some(class + 1))?;
    let mut rows = Vec::with_capacity(viols.len());
    for v in viols {
        let head = |w: &NormalWord| -> Vec<(usize, i64)> {
            w.letters().iter().copied().filter(|&(g, _)| g < m).collect()
        };
        if head(&v.left) != head(&v.right) {
            return Err(NqError::Internal(format!(
                "overlap defect escapes the central block: {} vs {}",
                v.left, v.right
            )));
        }
        let lv = v.left.tail_vector(m, n);
        let rv = v.right.tail_vector(m, n);
        let row: Vec<i64> = lv.iter().zip(&rv).map(|(a, b)| a - b).collect();
        if row.iter().any(|&x| x != 0) {
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Evaluate all relators through every induced image tuple, breadth-first
/// over the substitution monoid, growing `lat`; prunes branches whose
/// relator images are already in the lattice.
fn spin_relators(
    star: &PcPresentation,
    lp: &LPresentation,
    relators: &[FreeWord],
    m: usize,
    lat: &mut RelLat,
) -> Result<(), NqError> {
    let n = star.ngens();
    let eval = |images: &[NormalWord], w: &FreeWord| -> Result<Vec<i64>, NqError> {
        let nf = star.evaluate_with(images, w)?;
        if nf.letters().iter().any(|&(g, _)| g < m) {
            return Err(NqError::Internal(format!(
                "relator image does not vanish in the current quotient: {nf}"
            )));
        }
        Ok(nf.tail_vector(m, n))
    };
    let root: Vec<NormalWord> = star.epimorphism().to_vec();
    let mut seen: HashSet<Vec<NormalWord>> = HashSet::new();
    seen.insert(root.clone());
    let mut queue: VecDeque<Vec<NormalWord>> = VecDeque::new();
    queue.push_back(root);
    let stats = std::env::var_os("NQ_SPIN_STATS").is_some();
    let t0 = std::time::Instant::now();
    let mut visited = 0usize;
    let mut max_entry: i64 = 0;
    while let Some(node) = queue.pop_front() {
        visited += 1;
        let vecs: Vec<Vec<i64>> = relators
            .par_iter()
            .map(|r| eval(&node, r))
            .collect::<Result<_, _>>()?;
        let mut grew = false;
        for v in vecs {
            if stats {
                for &x in &v {
                    max_entry = max_entry.max(x.abs());
                }
            }
            if lat.add_row(v) {
                grew = true;
            }
        }
        if !grew {
            continue;
        }
        for e in lp.endomorphisms() {
            let child: Vec<NormalWord> = (0..lp.rank())
                .map(|r| star.evaluate_with(&node, e.image(r)))
                .collect::<Result<_, _>>()?;
            if seen.insert(child.clone()) {
                queue.push_back(child);
            }
        }
    }
    if stats {
        eprintln!(
            "spin: tails {} nodes {} max_entry {} big {} in {:.2?}",
            star.ngens() - m,
            visited,
            max_entry,
            matches!(lat, RelLat::Big(_)),
            t0.elapsed()
        );
    }
    Ok(())
}

/// One term of the Schur multiplier filtration, from the covering data:
/// `(S ∩ K)/D` where `S` is the full relation lattice over the tails, `K`
/// the kernel of the tail block in the abelianized covering, and `D` the
/// consistency lattice.
fn multiplier_entry(
    star: &PcPresentation,
    m: usize,
    d_rows: &[Vec<i64>],
    s_rows: &[Vec<i64>],
) -> Result<AbelianInvariants, NqError> {
    let n = star.ngens();
    let t = n - m;
    let width = n + t;
    // Abelianized covering relations, with a marker block that tags each
    // relation-lattice generator by its own tail coordinates: a row of the
    // combined lattice that is zero on the first `n` coordinates exhibits a
    // tail vector of `S` that dies in the abelianized covering.
    let mut rows: Vec<Vec<i64>> = Vec::new();
    for i in 0..m {
        if let Some(o) = star.orders()[i] {
            let mut row = vec![0i64; width];
            row[i] += o;
            for &(g, e) in star.power(i).unwrap().letters() {
                row[g] -= e;
            }
            rows.push(row);
        }
        for j in i + 1..m {
            if let Some(w) = star.conjugate(i, j) {
                let mut row = vec![0i64; width];
                row[j] += 1;
                for &(g, e) in w.letters() {
                    row[g] -= e;
                }
                if row.iter().any(|&x| x != 0) {
                    rows.push(row);
                }
            }
        }
    }
    for d in d_rows {
        let mut row = vec![0i64; width];
        row[m..n].copy_from_slice(d);
        rows.push(row);
    }
    for s in s_rows {
        let mut row = vec![0i64; width];
        row[m..n].copy_from_slice(s);
        row[n..].copy_from_slice(s);
        rows.push(row);
    }

    // Echelonize and extract rows supported on the marker block.
    let stats = std::env::var_os("NQ_SPIN_STATS").is_some();
    let t0 = std::time::Instant::now();
    let nrows = rows.len();
    let mut lat = RelLat::new(width);
    for row in rows {
        lat.add_row(row);
    }
    let echelon_done = t0.elapsed();
    let big = matches!(lat, RelLat::Big { .. });
    let x_rows: Vec<Vec<BigInt>> = lat
        .into_canonical_big()
        .into_iter()
        .filter(|r| r[..n].iter().all(|x| x.is_zero()))
        .map(|r| r[n..].to_vec())
        .collect();
    if stats {
        eprintln!(
            "mult: width {width} rows {nrows} big {big} echelon {:.2?} canon {:.2?}",
            echelon_done,
            t0.elapsed() - echelon_done
        );
    }
    // Assemble X + D and D through the 64-bit fast path; only the reduced
    // bases touch arbitrary precision.
    let mut xl = RelLat::new(t);
    let mut oversize: Vec<Vec<BigInt>> = Vec::new();
    for r in x_rows {
        match big_to_i64(&r) {
            Ok(v) => {
                xl.add_row(v);
            }
            Err(_) => oversize.push(r),
        }
    }
    let mut dl = RelLat::new(t);
    for d in d_rows {
        xl.add_row(d.clone());
        dl.add_row(d.clone());
    }
    let mut x_lat = Lattice::from_rows(t, xl.into_canonical_big());
    for r in oversize {
        x_lat.add_row(r);
    }
    let d_lat = Lattice::from_rows(t, dl.into_canonical_big());
    Ok(crate::zlat::quotient_invariants(&x_lat, &d_lat))
}

fn covering_step(
    state: &mut StepState,
    lp: &LPresentation,
    relators: &[FreeWord],
    class: u32,
    with_multiplier: bool,
    tail_exponent: Option<i64>,
) -> Result<StepOutcome, NqError> {
    let stats = std::env::var_os("NQ_SPIN_STATS").is_some();
    let t0 = std::time::Instant::now();
    let cov = build_covering(&state.pc, &state.defs, lp, class)?;
    let t_build = t0.elapsed();
    let m = cov.m;
    let d_rows = defect_rows(&cov.star, m, class)?;
    let t_defects = t0.elapsed();
    let t = cov.star.ngens() - m;
    // For `u ∈ γ_c` and `x ∈ G` the map `x ↦ [u,x] mod γ_{c+2}` is a
    // homomorphism that kills `γ₂`, so every lower-central section from
    // class 2 on has exponent dividing `e = exp(G/γ₂)`.  The tails generate
    // such a section, hence `e·ℤ^t` lies in the final relation lattice and
    // the whole relation-lattice computation can run modulo `e` — adding
    // `e·ℤ^t` up front changes neither the section (the final lattice
    // already contains it) nor the multiplier term (its `S` is this same
    // lattice), but caps every entry at `e` for the entire spin.
    let mut lat = match tail_exponent {
        Some(e) => RelLat::new_mod(t, e),
        None => RelLat::new(t),
    };
    for d in &d_rows {
        lat.add_row(d.clone());
    }
    spin_relators(&cov.star, lp, relators, m, &mut lat)?;
    let t_spin = t0.elapsed();
    let basis: Vec<Vec<i64>> = lat.into_canonical_i64()?;
    let entry = if with_multiplier {
        Some(multiplier_entry(&cov.star, m, &d_rows, &basis)?)
    } else {
        None
    };
    let t_mult = t0.elapsed();

    let q = quotient_by_central(&cov.star, &basis)?;
    if stats {
        eprintln!(
            "step {class}: build {:.2?} defects {:.2?} spin {:.2?} mult {:.2?} quot {:.2?}",
            t_build,
            t_defects - t_build,
            t_spin - t_defects,
            t_mult - t_spin,
            t0.elapsed() - t_mult
        );
    }
    let mut survivor_kinds: Vec<TailKind> = Vec::new();
    for (idx, slot) in q.central_map.iter().enumerate() {
        if slot.is_some() {
            survivor_kinds.push(cov.kinds[idx]);
        }
    }
    for k in &survivor_kinds {
        match *k {
            TailKind::Conj(i, j)
                if state.pc.weight(i) == 1 && state.pc.weight(j) == class => {}
            other => {
                return Err(NqError::Internal(format!(
                    "unexpected covering generator survived: {other:?}"
                )));
            }
        }
    }

    let new_pc = q.presentation;
    let survivors = survivor_kinds.len();
    // Section γ_{class+1}/γ_{class+2}: presented on the survivors by their
    // power relations.
    let n_surv = survivors;
    let mut sec_rows: Vec<Vec<BigInt>> = Vec::new();
    for (s, g) in (m..new_pc.ngens()).enumerate() {
        if let Some(o) = new_pc.orders()[g] {
            let mut row = vec![BigInt::from(0); n_surv];
            row[s] += BigInt::from(o);
            for &(h, e) in new_pc.power(g).unwrap().letters() {
                row[h - m] -= BigInt::from(e);
            }
            sec_rows.push(row);
        }
    }
    let section =
        AbelianInvariants::from_relation_matrix(n_surv, IntMatrix::from_rows(n_surv, sec_rows));

    for k in survivor_kinds {
        if let TailKind::Conj(i, j) = k {
            state.defs.push(Definition::Commutator(i, j));
        }
    }
    state.pc = new_pc;
    Ok(StepOutcome { survivors, section, entry })
}

fn run_direct(
    lp: &LPresentation,
    max_class: u32,
    with_multiplier: bool,
) -> Result<(NilpotentQuotient, Vec<Definition>), NqError> {
    let (mut state, sec1) = class_one(lp)?;
    // Exponent bound for every later section (see `covering_step`); absent
    // when the abelianization is infinite or the bound does not fit i64.
    let tail_exponent: Option<i64> = if sec1.free_rank == 0 {
        match sec1.torsion.last() {
            Some(e) => e.to_i64(),
            None => Some(1),
        }
    } else {
        None
    };
    let mut sections = vec![sec1];
    let mut multiplier = Vec::new();
    let mut stabilized = false;
    let relators: Vec<FreeWord> =
        lp.fixed().iter().chain(lp.iterated()).cloned().collect();
    for c in 1..max_class {
        if stabilized && !with_multiplier {
            break;
        }
        let out =
            covering_step(&mut state, lp, &relators, c, with_multiplier, tail_exponent)?;
        if let Some(e) = out.entry {
            multiplier.push(e);
        }
        if out.survivors == 0 {
            stabilized = true;
        } else {
            if stabilized {
                return Err(NqError::Internal(
                    "a lower-central section reappeared after stabilization".into(),
                ));
            }
            sections.push(out.section);
        }
    }
    let class = sections.len() as u32;
    let result = NilpotentQuotient {
        pc: state.pc.clone(),
        class,
        sections,
        stabilized,
        multiplier,
    };
    Ok((result, state.defs))
}

/// Free-group words expressing each quotient generator through the source
/// generators, following the definitions.
fn definition_words(pc: &PcPresentation, defs: &[Definition]) -> Result<Vec<FreeWord>, NqError> {
    let mut defw: Vec<FreeWord> = Vec::with_capacity(pc.ngens());
    for g in 0..pc.ngens() {
        let w = match defs[g] {
            Definition::Epi(r) => FreeWord::generator(r),
            Definition::Commutator(i, j) => {
                let rhs = pc
                    .conjugate(i, j)
                    .ok_or_else(|| NqError::Internal("defining relation disappeared".into()))?;
                let (last, head) = rhs
                    .letters()
                    .split_last()
                    .ok_or_else(|| NqError::Internal("defining relation became trivial".into()))?;
                if *last != (g, 1) {
                    return Err(NqError::Internal("defining relation lost its tail".into()));
                }
                let mut w_free = FreeWord::identity();
                for &(h, e) in head {
                    w_free = w_free.multiply(&defw[h].power_i(e)?);
                }
                w_free.invert().multiply(&defw[j].conjugate(&defw[i]))
            }
        };
        defw.push(w);
    }
    Ok(defw)
}

/// Rewrite a polycyclic presentation as a flat list of relators over the
/// source alphabet.
fn flatten_presentation(
    pc: &PcPresentation,
    defs: &[Definition],
) -> Result<Vec<FreeWord>, NqError> {
    let defw = definition_words(pc, defs)?;
    let word_of = |nf: &NormalWord| -> Result<FreeWord, NqError> {
        let mut w = FreeWord::identity();
        for &(h, e) in nf.letters() {
            w = w.multiply(&defw[h].power_i(e)?);
        }
        Ok(w)
    };
    let mut rels = Vec::new();
    for i in 0..pc.ngens() {
        if let Some(o) = pc.orders()[i] {
            let rel = defw[i]
                .power_i(o)?
                .multiply(&word_of(pc.power(i).unwrap())?.invert());
            if !rel.is_identity() {
                rels.push(rel);
            }
        }
        for j in i + 1..pc.ngens() {
            let lhs = defw[j].conjugate(&defw[i]);
            let rhs = match pc.conjugate(i, j) {
                Some(w) => word_of(w)?,
                None => defw[j].clone(),
            };
            let rel = lhs.multiply(&rhs.invert());
            if !rel.is_identity() {
                rels.push(rel);
            }
        }
    }
    Ok(rels)
}

/// Non-invariant presentations with fixed relators: first run the ascending
/// part (dropping `Q`), then impose its flattened quotient presentation
/// together with `Q` as one fixed relator set.  Both groups have the same
/// quotients up to the computed class.
fn run_two_phase(lp: &LPresentation, max_class: u32) -> Result<NilpotentQuotient, NqError> {
    let asc = LPresentation::new(
        lp.alphabet().clone(),
        Vec::new(),
        lp.endo_names()
            .iter()
            .cloned()
            .zip(lp.endomorphisms().iter().cloned())
            .collect(),
        lp.iterated().to_vec(),
    )
    .map_err(NqError::Internal)?;
    let (phase1, defs) = run_direct(&asc, max_class, false)?;
    let mut fixed = lp.fixed().to_vec();
    fixed.extend(flatten_presentation(&phase1.pc, &defs)?);
    let fp = LPresentation::new(lp.alphabet().clone(), fixed, Vec::new(), Vec::new())
        .map_err(NqError::Internal)?;
    run_direct(&fp, max_class, false).map(|(r, _)| r)
}

/// Compute `G/γ_{max_class+1}(G)` as a consistent weighted polycyclic
/// presentation, with the lower-central sections along the way.  Stops early
/// when the tower stabilizes.
pub fn nilpotent_quotient(lp: &LPresentation, max_class: u32) -> Result<NilpotentQuotient, NqError> {
    nilpotent_quotient_opts(lp, max_class, false)
}

pub(crate) fn nilpotent_quotient_opts(
    lp: &LPresentation,
    max_class: u32,
    with_multiplier: bool,
) -> Result<NilpotentQuotient, NqError> {
    if max_class == 0 {
        return Err(NqError::BadClass);
    }
    if lp.is_invariant() || lp.endomorphisms().is_empty() {
        run_direct(lp, max_class, with_multiplier).map(|(r, _)| r)
    } else {
        if with_multiplier {
            return Err(NqError::Unsupported(
                "multiplier data needs an invariant or ascending presentation".into(),
            ));
        }
        run_two_phase(lp, max_class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpres::{preset_gamma, preset_grigorchuk};
    use crate::word::Alphabet;

    fn inv(torsion: &[i64], free_rank: usize) -> AbelianInvariants {
        AbelianInvariants {
            torsion: torsion.iter().map(|&x| BigInt::from(x)).collect(),
            free_rank,
        }
    }

    fn free_lp(names: &[&str]) -> LPresentation {
        LPresentation::new(
            Alphabet::new(names.to_vec()).unwrap(),
            vec![],
            vec![],
            vec![],
        )
        .unwrap()
    }

    fn fp(names: &[&str], relators: Vec<FreeWord>) -> LPresentation {
        LPresentation::new(Alphabet::new(names.to_vec()).unwrap(), vec![], vec![], relators)
            .unwrap()
    }

    #[test]
    fn free_group_of_rank_two_to_class_four() {
        let lp = free_lp(&["x", "y"]);
        let q = nilpotent_quotient(&lp, 4).unwrap();
        assert_eq!(q.class, 4);
        assert!(!q.stabilized);
        // Witt ranks 2, 1, 2, 3 of the free Lie ring on two generators.
        let expected = [inv(&[], 2), inv(&[], 1), inv(&[], 2), inv(&[], 3)];
        assert_eq!(q.sections, expected);
        assert!(q.pc.consistency_check().unwrap().is_empty());
    }

    #[test]
    fn free_group_of_rank_three_to_class_three() {
        let lp = free_lp(&["x", "y", "z"]);
        let q = nilpotent_quotient(&lp, 3).unwrap();
        // Witt ranks 3, 3, 8.
        assert_eq!(q.sections, [inv(&[], 3), inv(&[], 3), inv(&[], 8)]);
        assert!(q.pc.consistency_check().unwrap().is_empty());
    }

    #[test]
    fn dihedral_of_order_eight() {
        let x = FreeWord::generator(0);
        let y = FreeWord::generator(1);
        let lp = fp(
            &["x", "y"],
            vec![
                x.power_i(2).unwrap(),
                y.power_i(4).unwrap(),
                x.multiply(&y).power_i(2).unwrap(),
            ],
        );
        let q = nilpotent_quotient(&lp, 6).unwrap();
        assert!(q.stabilized);
        assert_eq!(q.class, 2);
        assert_eq!(q.sections, [inv(&[2, 2], 0), inv(&[2], 0)]);
        assert_eq!(q.pc.order(), Some(BigInt::from(8)));
    }

    #[test]
    fn quaternion_of_order_eight() {
        let x = FreeWord::generator(0);
        let y = FreeWord::generator(1);
        // x⁴ = 1, x² = y², x^y = x⁻¹.
        let lp = fp(
            &["x", "y"],
            vec![
                x.power_i(4).unwrap(),
                x.power_i(2).unwrap().multiply(&y.power_i(-2).unwrap()),
                y.invert().multiply(&x).multiply(&y).multiply(&x),
            ],
        );
        let q = nilpotent_quotient(&lp, 6).unwrap();
        assert!(q.stabilized);
        assert_eq!(q.class, 2);
        assert_eq!(q.sections, [inv(&[2, 2], 0), inv(&[2], 0)]);
        assert_eq!(q.pc.order(), Some(BigInt::from(8)));
    }

    #[test]
    fn heisenberg_from_iterated_relators() {
        let x = FreeWord::generator(0);
        let y = FreeWord::generator(1);
        let z = FreeWord::commutator(&x, &y);
        let lp = fp(
            &["x", "y"],
            vec![FreeWord::commutator(&z, &x), FreeWord::commutator(&z, &y)],
        );
        let q = nilpotent_quotient(&lp, 5).unwrap();
        assert!(q.stabilized);
        assert_eq!(q.class, 2);
        assert_eq!(q.sections, [inv(&[], 2), inv(&[], 1)]);
    }

    #[test]
    fn two_phase_route_for_non_invariant_input() {
        // ⟨a, b | a⁴ fixed; φ: a ↦ a², b ↦ b; [a, b] iterated⟩ presents ℤ₄ × ℤ.
        let a = FreeWord::generator(0);
        let b = FreeWord::generator(1);
        let phi = crate::word::FreeEndomorphism::new(vec![a.power_i(2).unwrap(), b.clone()])
            .unwrap();
        let lp = LPresentation::new(
            Alphabet::new(["a", "b"]).unwrap(),
            vec![a.power_i(4).unwrap()],
            vec![("phi".to_string(), phi)],
            vec![FreeWord::commutator(&a, &b)],
        )
        .unwrap();
        assert!(!lp.is_invariant());
        let q = nilpotent_quotient(&lp, 4).unwrap();
        assert!(q.stabilized);
        assert_eq!(q.class, 1);
        assert_eq!(q.sections, [inv(&[4], 1)]);
    }

    #[test]
    fn abelianizations_of_presets() {
        assert_eq!(abelian_quotient(&preset_grigorchuk()).unwrap(), inv(&[2, 2, 2], 0));
        for d in [3i64, 4, 5, 6] {
            let lp = preset_gamma(d as usize).unwrap();
            assert_eq!(abelian_quotient(&lp).unwrap(), inv(&[d, d], 0));
        }
    }

    #[test]
    fn grigorchuk_low_classes() {
        let q = nilpotent_quotient(&preset_grigorchuk(), 4).unwrap();
        assert_eq!(q.class, 4);
        let ranks: Vec<usize> = q.sections.iter().map(|s| s.rank_at(2)).collect();
        assert_eq!(ranks, [3, 2, 2, 1]);
        for s in &q.sections {
            assert!(s.is_elementary(2));
        }
        assert!(q.pc.consistency_check().unwrap().is_empty());
    }

    #[test]
    fn gamma_three_low_classes() {
        let lp = preset_gamma(3).unwrap();
        let q = nilpotent_quotient(&lp, 3).unwrap();
        let ranks: Vec<usize> = q.sections.iter().map(|s| s.rank_at(3)).collect();
        assert_eq!(ranks, [2, 1, 2]);
        for s in &q.sections {
            assert!(s.is_elementary(3));
        }
    }

    #[test]
    fn multiplier_entry_of_klein_four_group() {
        let x = FreeWord::generator(0);
        let y = FreeWord::generator(1);
        let lp = fp(
            &["x", "y"],
            vec![
                x.power_i(2).unwrap(),
                y.power_i(2).unwrap(),
                FreeWord::commutator(&x, &y),
            ],
        );
        let q = nilpotent_quotient_opts(&lp, 3, true).unwrap();
        assert!(q.stabilized);
        // The Schur multiplier of ℤ₂ × ℤ₂ is ℤ₂, visible already in the
        // first covering and stable afterwards.
        assert_eq!(q.multiplier[0], inv(&[2], 0));
        assert_eq!(q.multiplier[1], inv(&[2], 0));
    }
}
