//! Subgroup presentations from coset tables, and derived series.
//!
//! Given a completed coset table, the subgroup (the stabilizer of coset 0)
//! is free on its Schreier generators modulo the rewritten relators.  The
//! transversal is taken from the breadth-first spanning tree of the table,
//! so it is prefix-closed, tree transitions rewrite to nothing, and the
//! subgroup generator count obeys the classical rank formula.
//!
//! For an L-presented group whose substitutions preserve the defining
//! kernel, a *normal* subgroup that is preserved by every substitution
//! again carries a finite L-presentation: the rewritten fixed/iterated
//! relators at every coset, together with one induced substitution per
//! (substitution, coset) pair — the original substitution conjugated into
//! the subgroup by the coset representative and rewritten.  Every
//! substituted relator instance of the overgroup is reproduced by these
//! induced maps, so the construction is exact, not an approximation.

use crate::lcenum::check_induced;
use crate::lpres::{FinitePresentation, LPresentation};
use crate::nq::{abelian_quotient, abelian_relation_lattice, NqError};
use crate::tc::{standardize, CosetTable, TcError};
use crate::word::{Alphabet, FreeEndomorphism, FreeWord};
use crate::zlat::AbelianInvariants;
use num_bigint::BigInt;
use num_traits::One;
use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub enum RsError {
    #[error(transparent)]
    Tc(#[from] TcError),
    #[error(transparent)]
    Nq(#[from] NqError),
    #[error("word does not lie in the subgroup")]
    NotInSubgroup,
    #[error("exact subgroup presentation unavailable: {0}")]
    NotCompatible(String),
    #[error("abelianization is infinite")]
    InfiniteAbelianization,
    #[error("cumulative subgroup index exceeds the bound {bound}")]
    IndexBound { bound: u128 },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Schreier transversal and generators for the stabilizer of coset 0.
pub struct SchreierSystem {
    table: CosetTable,
    transversal: Vec<FreeWord>,
    /// `gen_index[c][i]` names the Schreier generator for the transition
    /// coset `c` · generator `i`; `None` for spanning-tree transitions.
    gen_index: Vec<Vec<Option<usize>>>,
    generators: Vec<FreeWord>,
}

impl SchreierSystem {
    pub fn new(table: CosetTable) -> Self {
        let n = table.index();
        let rank = table.rank();
        let mut transversal: Vec<Option<FreeWord>> = vec![None; n];
        transversal[0] = Some(FreeWord::identity());
        let mut tree = vec![vec![false; 2 * rank]; n];
        let mut order = vec![0usize];
        let mut head = 0;
        while head < order.len() {
            let c = order[head];
            head += 1;
            for col in 0..2 * rank {
                let d = table.step(c, col_letter(col));
                if transversal[d].is_none() {
                    let l = col_letter(col);
                    transversal[d] = Some(
                        transversal[c].as_ref().unwrap().multiply(&FreeWord::from_letters([l])),
                    );
                    tree[c][col] = true;
                    order.push(d);
                }
            }
        }
        let transversal: Vec<FreeWord> =
            transversal.into_iter().map(|t| t.expect("table is transitive")).collect();
        let mut gen_index = vec![vec![None; rank]; n];
        let mut generators = Vec::new();
        for c in 0..n {
            for i in 0..rank {
                let d = table.step(c, (i + 1) as i32);
                if tree[c][2 * i] || tree[d][2 * i + 1] {
                    continue;
                }
                gen_index[c][i] = Some(generators.len());
                generators.push(
                    transversal[c]
                        .multiply(&FreeWord::generator(i))
                        .multiply(&transversal[d].invert()),
                );
            }
        }
        SchreierSystem { table, transversal, gen_index, generators }
    }

    pub fn table(&self) -> &CosetTable {
        &self.table
    }

    /// Schreier generators as words of the ambient group.
    pub fn generators(&self) -> &[FreeWord] {
        &self.generators
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn transversal(&self) -> &[FreeWord] {
        &self.transversal
    }

    /// Rewrite `t_c · w · t_c⁻¹` (which must stabilize coset `c`) as a word
    /// in the Schreier generators.
    pub fn rewrite_from(&self, c: usize, w: &FreeWord) -> Result<FreeWord, RsError> {
        let mut cur = c;
        let mut out: Vec<i32> = Vec::new();
        for &l in w.letters() {
            let g = l.unsigned_abs() as usize - 1;
            if l > 0 {
                if let Some(y) = self.gen_index[cur][g] {
                    out.push(y as i32 + 1);
                }
                cur = self.table.step(cur, l);
            } else {
                let d = self.table.step(cur, l);
                if let Some(y) = self.gen_index[d][g] {
                    out.push(-(y as i32 + 1));
                }
                cur = d;
            }
        }
        if cur != c {
            return Err(RsError::NotInSubgroup);
        }
        Ok(FreeWord::from_letters(out))
    }

    /// Rewrite a word of the subgroup (stabilizing coset 0).
    pub fn rewrite(&self, w: &FreeWord) -> Result<FreeWord, RsError> {
        self.rewrite_from(0, w)
    }
}

fn col_letter(col: usize) -> i32 {
    let g = (col / 2 + 1) as i32;
    if col % 2 == 0 {
        g
    } else {
        -g
    }
}

fn subgroup_alphabet(k: usize) -> Alphabet {
    Alphabet::new((1..=k).map(|i| format!("s{i}"))).expect("generated names are valid")
}

/// Finite presentation of the coset-0 stabilizer of `table` inside the
/// group presented by `fp`: Schreier generators, with every relator
/// rewritten at every coset.
pub fn finite_subgroup_presentation(
    fp: &FinitePresentation,
    table: &CosetTable,
) -> Result<(FinitePresentation, SchreierSystem), RsError> {
    if table.rank() != fp.rank() {
        return Err(RsError::NotCompatible("table rank differs from presentation".into()));
    }
    if !table.certify(fp, &[]) {
        return Err(RsError::NotCompatible("table does not satisfy the relators".into()));
    }
    let sys = SchreierSystem::new(table.clone());
    let mut relators = Vec::new();
    for r in fp.relators() {
        for c in 0..table.index() {
            relators.push(sys.rewrite_from(c, r)?);
        }
    }
    let fp_sub = FinitePresentation::new(subgroup_alphabet(sys.generator_count()), relators)
        .map_err(RsError::Internal)?;
    Ok((fp_sub, sys))
}

/// Exact L-presentation of a normal, substitution-preserved subgroup given
/// by its (certified) coset table.
pub fn exact_subgroup_presentation(
    lp: &LPresentation,
    table: &CosetTable,
) -> Result<LPresentation, RsError> {
    if table.rank() != lp.rank() {
        return Err(RsError::NotCompatible("table rank differs from presentation".into()));
    }
    if !lp.is_invariant() {
        return Err(RsError::NotCompatible(
            "substitutions are not known to preserve the defining kernel".into(),
        ));
    }
    let tc0 = std::time::Instant::now();
    if check_induced(lp, table).is_none() {
        return Err(RsError::NotCompatible(
            "table is not an action of the presented group".into(),
        ));
    }
    if !table.is_normal() {
        return Err(RsError::NotCompatible("subgroup is not normal".into()));
    }
    if std::env::var_os("RS_STATS").is_some() {
        eprintln!("[rs] certification {:?}", tc0.elapsed());
    }
    let stats = std::env::var_os("RS_STATS").is_some();
    let t0 = std::time::Instant::now();
    let n = table.index();
    let sys = SchreierSystem::new(table.clone());
    let k = sys.generator_count();
    let mut fixed = Vec::new();
    for q in lp.fixed() {
        for c in 0..n {
            fixed.push(sys.rewrite_from(c, q)?);
        }
    }
    let mut iterated = Vec::new();
    for r in lp.iterated() {
        for c in 0..n {
            iterated.push(sys.rewrite_from(c, r)?);
        }
    }
    if stats {
        eprintln!("[rs] relator rewrites: k={k} n={n} {:?}", t0.elapsed());
    }
    let t1 = std::time::Instant::now();
    let mut endos: Vec<(String, FreeEndomorphism)> = Vec::new();
    for (name, endo) in lp.endo_names().iter().zip(lp.endomorphisms()) {
        // The induced maps require σ(H) ≤ H; verify on the generators.
        for y in &sys.generators {
            let img = endo.apply(y);
            if sys.table.trace(0, &img) != 0 {
                return Err(RsError::NotCompatible(
                    "subgroup is not preserved by the substitutions".into(),
                ));
            }
        }
        for c in 0..n {
            let t = &sys.transversal[c];
            let ti = t.invert();
            let mut images = Vec::with_capacity(k);
            for y in &sys.generators {
                let u = t.multiply(&endo.apply(y)).multiply(&ti);
                images.push(sys.rewrite(&u)?);
            }
            endos.push((
                format!("{name}_c{c}"),
                FreeEndomorphism::new(images).map_err(RsError::Internal)?,
            ));
        }
    }
    if stats {
        eprintln!("[rs] induced substitutions: {} maps {:?}", endos.len(), t1.elapsed());
    }
    let lp_sub = LPresentation::new(subgroup_alphabet(k), fixed, endos, iterated)
        .map_err(RsError::Internal)?;
    Ok(lp_sub.mark_invariant())
}

/// A subgroup presentation: exact when the L-structure descends, otherwise
/// a finite presentation of the corresponding subgroup of a truncation
/// (presenting a group that surjects onto the subgroup).
pub enum SubgroupPresentation {
    Exact(LPresentation),
    Truncated { presentation: FinitePresentation, radius: usize },
}

/// Present the coset-0 stabilizer: exactly if possible, otherwise through
/// the radius-`fallback_radius` truncation.
pub fn subgroup_presentation(
    lp: &LPresentation,
    table: &CosetTable,
    fallback_radius: usize,
) -> Result<SubgroupPresentation, RsError> {
    match exact_subgroup_presentation(lp, table) {
        Ok(sub) => Ok(SubgroupPresentation::Exact(sub)),
        Err(RsError::NotCompatible(_)) => {
            let fp = lp.truncate(fallback_radius);
            let (fp_sub, _) = finite_subgroup_presentation(&fp, table)?;
            Ok(SubgroupPresentation::Truncated {
                presentation: fp_sub,
                radius: fallback_radius,
            })
        }
        Err(e) => Err(e),
    }
}

/// Coset table of the derived subgroup: the translation action of the
/// (finite) abelianization on itself, with cosets the canonical residues
/// of the abelianized relation lattice.
pub fn derived_subgroup_table(lp: &LPresentation, max_index: u128) -> Result<CosetTable, RsError> {
    let m = lp.rank();
    let lat = abelian_relation_lattice(lp);
    if lat.rank() < m {
        return Err(RsError::InfiniteAbelianization);
    }
    let zero = vec![BigInt::from(0); m];
    let mut names: HashMap<Vec<BigInt>, usize> = HashMap::new();
    names.insert(lat.reduce(&zero), 0);
    let mut reps: Vec<Vec<BigInt>> = vec![lat.reduce(&zero)];
    let mut rows: Vec<Vec<Option<usize>>> = Vec::new();
    let mut head = 0;
    while head < reps.len() {
        let v = reps[head].clone();
        head += 1;
        let mut row = Vec::with_capacity(2 * m);
        for i in 0..m {
            for sign in [1i64, -1] {
                let mut w = v.clone();
                w[i] += sign;
                let w = lat.reduce(&w);
                let next = names.len();
                let id = *names.entry(w.clone()).or_insert_with(|| {
                    reps.push(w);
                    next
                });
                row.push(Some(id));
                if names.len() as u128 > max_index {
                    return Err(RsError::IndexBound { bound: max_index });
                }
            }
        }
        rows.push(row);
    }
    Ok(standardize(m, rows)?)
}

/// The derived series data down to `depth` terms: quotient invariants of
/// consecutive terms, and the cumulative indices of the terms themselves.
pub struct DerivedSeries {
    /// `sections[k]` is the abelianization of the `k`-th derived subgroup;
    /// `depth` entries.
    pub sections: Vec<AbelianInvariants>,
    /// `indices[k]` is the index of the `(k+1)`-st derived subgroup in the
    /// whole group; `depth - 1` entries.
    pub indices: Vec<BigInt>,
}

/// Iterate exact derived-subgroup presentations, abelianizing at each
/// level.  Fails if the substitutions do not descend, an abelianization is
/// infinite (except at the last requested level), or the cumulative index
/// exceeds `max_index`.
pub fn derived_series(
    lp: &LPresentation,
    depth: usize,
    max_index: u128,
) -> Result<DerivedSeries, RsError> {
    let stats = std::env::var_os("RS_STATS").is_some();
    let mut cur = lp.clone();
    let mut sections = Vec::new();
    let mut indices = Vec::new();
    let mut cumulative = BigInt::one();
    for level in 0..depth {
        let t0 = std::time::Instant::now();
        let ab = abelian_quotient(&cur)?;
        if stats {
            eprintln!("[rs] level {level} abelianization {:?}", t0.elapsed());
        }
        sections.push(ab.clone());
        if level + 1 == depth {
            break;
        }
        let order = ab.order().ok_or(RsError::InfiniteAbelianization)?;
        cumulative *= order;
        if cumulative > BigInt::from(max_index) {
            return Err(RsError::IndexBound { bound: max_index });
        }
        indices.push(cumulative.clone());
        let t1 = std::time::Instant::now();
        let table = derived_subgroup_table(&cur, max_index)?;
        if stats {
            eprintln!("[rs] level {level} table ({} cosets) {:?}", table.index(), t1.elapsed());
        }
        cur = exact_subgroup_presentation(&cur, &table)?;
    }
    Ok(DerivedSeries { sections, indices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpres::{preset_gamma, preset_grigorchuk};
    use crate::tc::{enumerate, TcOutcome};
    use crate::word::FreeWord;

    fn fp(names: &[&str], rels: Vec<FreeWord>) -> FinitePresentation {
        FinitePresentation::new(Alphabet::new(names.to_vec()).unwrap(), rels).unwrap()
    }

    fn table_of(fp: &FinitePresentation, sub: &[FreeWord]) -> CosetTable {
        match enumerate(fp, sub, 100_000).unwrap() {
            TcOutcome::Complete(t) => t,
            other => panic!("enumeration did not close: {other:?}"),
        }
    }

    #[test]
    fn schreier_rank_law_in_the_free_group() {
        // An index-n subgroup of a rank-m free group is free of rank
        // n·m − n + 1; the spanning tree removes n − 1 generators.
        let f2 = fp(&["a", "b"], vec![]);
        let a = FreeWord::generator(0);
        let sub = vec![
            a.clone(),
            FreeWord::generator(1).power_i(3).unwrap(),
            FreeWord::generator(1).conjugate(&a),
        ];
        let t = table_of(&f2, &sub);
        let n = t.index();
        let sys = SchreierSystem::new(t);
        assert_eq!(sys.generator_count(), n * 2 - n + 1);
    }

    #[test]
    fn rewriting_inverts_membership() {
        let f2 = fp(&["a", "b"], vec![]);
        let a = FreeWord::generator(0);
        let b = FreeWord::generator(1);
        // Kernel of F₂ ↠ ℤ₂ with b ↦ 1, a ↦ 0: index 2, rank 3.
        let t = table_of(
            &f2,
            &[a.clone(), a.conjugate(&b.invert()), b.power_i(2).unwrap()],
        );
        assert_eq!(t.index(), 2);
        let sys = SchreierSystem::new(t);
        // a and b² lie in the subgroup, b does not.
        assert!(sys.rewrite(&a).is_ok());
        assert!(sys.rewrite(&b.power_i(2).unwrap()).is_ok());
        assert!(matches!(sys.rewrite(&b), Err(RsError::NotInSubgroup)));
        // Rewriting is a homomorphism into the free group on the Schreier
        // generators: the rewrite of a product is the product of rewrites.
        let u = a.multiply(&b.power_i(2).unwrap());
        let ru = sys.rewrite(&u).unwrap();
        let ra = sys.rewrite(&a).unwrap();
        let rb2 = sys.rewrite(&b.power_i(2).unwrap()).unwrap();
        assert_eq!(ru, ra.multiply(&rb2));
    }

    #[test]
    fn index_two_subgroup_of_the_infinite_dihedral_group() {
        // ⟨a, b | a², b²⟩: the subgroup generated by ab has index 2 and is
        // infinite cyclic — one Schreier generator survives freely.
        let d = fp(
            &["a", "b"],
            vec![
                FreeWord::generator(0).power_i(2).unwrap(),
                FreeWord::generator(1).power_i(2).unwrap(),
            ],
        );
        let ab = FreeWord::generator(0).multiply(&FreeWord::generator(1));
        let t = table_of(&d, &[ab]);
        assert_eq!(t.index(), 2);
        let (sub, _sys) = finite_subgroup_presentation(&d, &t).unwrap();
        let lp = LPresentation::from_finite(&sub);
        let inv = abelian_quotient(&lp).unwrap();
        assert_eq!(inv.free_rank, 1);
        assert!(inv.torsion.is_empty());
    }

    #[test]
    fn grigorchuk_derived_sections_and_indices() {
        let lp = preset_grigorchuk();
        let s = derived_series(&lp, 2, 1 << 20).unwrap();
        assert_eq!(s.sections[0].torsion, vec![BigInt::from(2); 3]);
        assert_eq!(s.sections[1].torsion,
            vec![BigInt::from(2), BigInt::from(2), BigInt::from(4)]);
        assert_eq!(s.indices, vec![BigInt::from(8)]);
    }

    #[test]
    fn gamma_three_derived_sections() {
        let lp = preset_gamma(3).unwrap();
        let s = derived_series(&lp, 2, 1 << 20).unwrap();
        assert_eq!(s.sections[0].torsion, vec![BigInt::from(3), BigInt::from(3)]);
        assert_eq!(s.sections[1].torsion, vec![BigInt::from(3); 4]);
        assert_eq!(s.indices, vec![BigInt::from(9)]);
    }
}
