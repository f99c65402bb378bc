//! Exhaustive enumeration of subgroups of a given finite index.
//!
//! The search walks partial coset tables in slot order, branching on the
//! first undefined transition: the candidate images are the existing cosets
//! (whose matching inverse slot is free) and, while the table has fewer
//! rows than the target index, one fresh coset.  After every assignment all
//! relators of a truncation are scanned at all cosets to a fixpoint,
//! recording forced deductions on an undo trail and abandoning the branch
//! on any contradiction.  Completed tables are standardized, deduplicated,
//! and finally certified against the *full* L-presentation (all substituted
//! relator instances) in parallel — so the returned list is exactly the set
//! of index-`n` subgroups of the L-presented group, one standardized table
//! per subgroup, regardless of the truncation radius used for pruning.

use crate::lcenum::check_induced;
use crate::lpres::LPresentation;
use crate::tc::{standardize, CosetTable, TcError};
use rayon::prelude::*;
use std::collections::HashSet;

/// Tuning knobs for the low-index search.
#[derive(Debug, Clone)]
pub struct LowIndexOptions {
    /// Truncation radius used for pruning during the search.  Any value
    /// yields the same certified result; deeper truncations prune harder
    /// but scan more relators per node.
    pub radius: usize,
}

impl Default for LowIndexOptions {
    fn default() -> Self {
        LowIndexOptions { radius: 2 }
    }
}

struct Search {
    cols: usize,
    n: usize,
    relators: Vec<Vec<i32>>,
    table: Vec<Vec<Option<u32>>>,
    used: usize,
    trail: Vec<(u32, u32)>,
    leaves: Vec<Vec<Vec<Option<usize>>>>,
}

enum ScanOutcome {
    Deduced,
    Quiet,
    Contradiction,
}

impl Search {
    fn entry(&self, c: usize, col: usize) -> Option<u32> {
        self.table[c][col]
    }

    /// Record `c·col = d` and its inverse transition on the trail.
    /// Returns false on clash with existing entries.
    fn set(&mut self, c: usize, col: usize, d: usize) -> bool {
        match self.table[c][col] {
            Some(e) => {
                if e as usize != d {
                    return false;
                }
            }
            None => {
                self.table[c][col] = Some(d as u32);
                self.trail.push((c as u32, col as u32));
            }
        }
        let icol = col ^ 1;
        match self.table[d][icol] {
            Some(e) => e as usize == c,
            None => {
                self.table[d][icol] = Some(c as u32);
                self.trail.push((d as u32, icol as u32));
                true
            }
        }
    }

    /// Scan one relator at one coset; deduce the final transition when
    /// exactly one is missing.
    fn scan(&mut self, c: usize, ri: usize) -> ScanOutcome {
        let r = std::mem::take(&mut self.relators[ri]);
        let out = self.scan_inner(c, &r);
        self.relators[ri] = r;
        out
    }

    fn scan_inner(&mut self, c: usize, r: &[i32]) -> ScanOutcome {
        let mut f = c;
        let mut i = 0;
        while i < r.len() {
            let col = letter_col(r[i]);
            match self.entry(f, col) {
                Some(d) => {
                    f = d as usize;
                    i += 1;
                }
                None => break,
            }
        }
        if i == r.len() {
            return if f == c { ScanOutcome::Quiet } else { ScanOutcome::Contradiction };
        }
        let mut b = c;
        let mut j = r.len();
        while j > i + 1 {
            let col = letter_col(-r[j - 1]);
            match self.entry(b, col) {
                Some(d) => {
                    b = d as usize;
                    j -= 1;
                }
                None => break,
            }
        }
        if j == i + 1 {
            // Single gap: the transition f · r[i] = b is forced.
            if self.set(f, letter_col(r[i]), b) {
                ScanOutcome::Deduced
            } else {
                ScanOutcome::Contradiction
            }
        } else {
            ScanOutcome::Quiet
        }
    }

    /// Run relator scans to a fixpoint.  Returns false on contradiction.
    fn close(&mut self) -> bool {
        loop {
            let mut deduced = false;
            for ri in 0..self.relators.len() {
                for c in 0..self.used {
                    match self.scan(c, ri) {
                        ScanOutcome::Contradiction => return false,
                        ScanOutcome::Deduced => deduced = true,
                        ScanOutcome::Quiet => {}
                    }
                }
            }
            if !deduced {
                return true;
            }
        }
    }

    fn undo_to(&mut self, trail_mark: usize, used_mark: usize) {
        while self.trail.len() > trail_mark {
            let (c, col) = self.trail.pop().unwrap();
            self.table[c as usize][col as usize] = None;
        }
        self.used = used_mark;
    }

    fn first_gap(&self) -> Option<(usize, usize)> {
        for c in 0..self.used {
            for col in 0..self.cols {
                if self.table[c][col].is_none() {
                    return Some((c, col));
                }
            }
        }
        None
    }

    fn search(&mut self) {
        let (c, col) = match self.first_gap() {
            None => {
                if self.used == self.n {
                    let rows = self.table[..self.used]
                        .iter()
                        .map(|row| row.iter().map(|e| e.map(|d| d as usize)).collect())
                        .collect();
                    self.leaves.push(rows);
                }
                return;
            }
            Some(slot) => slot,
        };
        let mut candidates: Vec<usize> = (0..self.used)
            .filter(|&d| self.table[d][col ^ 1].is_none())
            .collect();
        if self.used < self.n {
            candidates.push(self.used);
        }
        for d in candidates {
            let trail_mark = self.trail.len();
            let used_mark = self.used;
            if d == self.used {
                self.used += 1;
            }
            if self.set(c, col, d) && self.close() {
                self.search();
            }
            self.undo_to(trail_mark, used_mark);
        }
    }
}

fn letter_col(l: i32) -> usize {
    if l > 0 {
        2 * (l as usize - 1)
    } else {
        2 * ((-l) as usize - 1) + 1
    }
}

/// Enumerate every subgroup of index exactly `n`, returning one
/// standardized, certified coset table per subgroup.
pub fn low_index_subgroups(
    lp: &LPresentation,
    n: usize,
    opts: &LowIndexOptions,
) -> Result<Vec<CosetTable>, TcError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let fp = lp.truncate(opts.radius);
    let relators: Vec<Vec<i32>> =
        fp.relators().iter().map(|r| r.letters().to_vec()).collect();
    let rank = lp.rank();
    let mut s = Search {
        cols: 2 * rank,
        n,
        relators,
        table: vec![vec![None; 2 * rank]; n],
        used: 1,
        trail: Vec::new(),
        leaves: Vec::new(),
    };
    if s.close() {
        s.search();
    }
    let mut seen: HashSet<CosetTable> = HashSet::new();
    let mut candidates: Vec<CosetTable> = Vec::new();
    for rows in s.leaves {
        let t = standardize(rank, rows)?;
        if seen.insert(t.clone()) {
            candidates.push(t);
        }
    }
    let mut certified: Vec<CosetTable> = candidates
        .into_par_iter()
        .filter(|t| check_induced(lp, t).is_some())
        .collect();
    certified.sort();
    Ok(certified)
}

/// Count subgroups and normal subgroups of index exactly `n`.
pub fn low_index_counts(
    lp: &LPresentation,
    n: usize,
    opts: &LowIndexOptions,
) -> Result<(usize, usize), TcError> {
    let tables = low_index_subgroups(lp, n, opts)?;
    let normal = tables.iter().filter(|t| t.is_normal()).count();
    Ok((tables.len(), normal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpres::{preset_gamma, preset_grigorchuk, LPresentation};
    use crate::word::{Alphabet, FreeWord};

    fn counts(lp: &LPresentation, n: usize) -> (usize, usize) {
        low_index_counts(lp, n, &LowIndexOptions::default()).unwrap()
    }

    #[test]
    fn symmetric_group_of_degree_three() {
        let a = FreeWord::generator(0);
        let b = FreeWord::generator(1);
        let fp = crate::lpres::FinitePresentation::new(
            Alphabet::new(["a", "b"]).unwrap(),
            vec![
                a.power_i(2).unwrap(),
                b.power_i(3).unwrap(),
                a.multiply(&b).power_i(2).unwrap(),
            ],
        )
        .unwrap();
        let lp = LPresentation::from_finite(&fp);
        // S₃: one subgroup each of index 1 and 2, three conjugate
        // reflection subgroups of index 3, one trivial subgroup of index 6.
        assert_eq!(counts(&lp, 1), (1, 1));
        assert_eq!(counts(&lp, 2), (1, 1));
        assert_eq!(counts(&lp, 3), (3, 0));
        assert_eq!(counts(&lp, 4), (0, 0));
        assert_eq!(counts(&lp, 5), (0, 0));
        assert_eq!(counts(&lp, 6), (1, 1));
    }

    #[test]
    fn free_group_of_rank_two_small_indices() {
        let fp = crate::lpres::FinitePresentation::new(
            Alphabet::new(["a", "b"]).unwrap(),
            vec![],
        )
        .unwrap();
        let lp = LPresentation::from_finite(&fp);
        // F₂ has 3 subgroups of index 2 (all normal) and 13 of index 3
        // (4 normal): classical counts n=2: 3; n=3: 13.
        assert_eq!(counts(&lp, 1), (1, 1));
        assert_eq!(counts(&lp, 2), (3, 3));
        assert_eq!(counts(&lp, 3), (13, 4));
    }

    #[test]
    fn grigorchuk_low_tiers() {
        let lp = preset_grigorchuk();
        assert_eq!(counts(&lp, 1), (1, 1));
        assert_eq!(counts(&lp, 2), (7, 7));
        assert_eq!(counts(&lp, 3), (0, 0));
        assert_eq!(counts(&lp, 4), (31, 7));
    }

    #[test]
    fn gamma_three_index_three() {
        let lp = preset_gamma(3).unwrap();
        assert_eq!(counts(&lp, 3), (4, 4));
    }
}
