//! Filtration of the Schur multiplier along the nilpotent tower.
//!
//! For a group `G = F/K` the Hopf formula presents the Schur multiplier as
//! `H₂(G) = (K ∩ [F,F])/[F,K]`.  Truncating at nilpotency class `c` yields a
//! descending filtration: the `c`-th term is the image of `H₂(G)` in
//! `(K_c ∩ [F,F])/[F,K_c]` modulo the part supported below `γ_{c+2}(F)`,
//! where `K_c = K·γ_{c+1}(F)`.  Each term is a finitely generated abelian
//! group; the sequence detects how deeply homological information of `G` is
//! visible in its class-`c` quotients.
//!
//! Every term is extracted from the same tailed covering that drives the
//! quotient step in [`crate::nq`], so one tower pass produces the whole
//! series.

use crate::lpres::LPresentation;
use crate::nq::{nilpotent_quotient_opts, NqError};
use crate::zlat::AbelianInvariants;

/// First `terms` filtration terms of the Schur multiplier, indexed by class
/// `1, 2, …`.  Requires an ascending or invariant presentation.
pub fn dwyer_series(lp: &LPresentation, terms: usize) -> Result<Vec<AbelianInvariants>, NqError> {
    if terms == 0 {
        return Ok(Vec::new());
    }
    let q = nilpotent_quotient_opts(lp, terms as u32 + 1, true)?;
    let mut entries = q.multiplier;
    entries.truncate(terms);
    if entries.len() < terms {
        return Err(NqError::Internal(format!(
            "expected {terms} filtration terms, produced {}",
            entries.len()
        )));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpres::LPresentation;
    use crate::word::{Alphabet, FreeWord};
    use num_bigint::BigInt;

    fn inv(torsion: &[i64], free_rank: usize) -> AbelianInvariants {
        AbelianInvariants {
            torsion: torsion.iter().map(|&x| BigInt::from(x)).collect(),
            free_rank,
        }
    }

    #[test]
    fn klein_four_group_series_is_constant_z2() {
        let x = FreeWord::generator(0);
        let y = FreeWord::generator(1);
        let lp = LPresentation::new(
            Alphabet::new(["x", "y"]).unwrap(),
            vec![],
            vec![],
            vec![
                x.power_i(2).unwrap(),
                y.power_i(2).unwrap(),
                FreeWord::commutator(&x, &y),
            ],
        )
        .unwrap();
        let series = dwyer_series(&lp, 4).unwrap();
        assert_eq!(series, vec![inv(&[2], 0); 4]);
    }

    #[test]
    fn free_abelian_of_rank_three() {
        // M(ℤ³) = ℤ³, all of it of weight 2.
        let gens = ["x", "y", "z"];
        let mut rels = Vec::new();
        for i in 0..3 {
            for j in i + 1..3 {
                rels.push(FreeWord::commutator(
                    &FreeWord::generator(i),
                    &FreeWord::generator(j),
                ));
            }
        }
        let lp =
            LPresentation::new(Alphabet::new(gens).unwrap(), vec![], vec![], rels).unwrap();
        let series = dwyer_series(&lp, 3).unwrap();
        assert_eq!(series, vec![inv(&[], 3); 3]);
    }
}
