//! Checked 64-bit integer row lattices (internal fast path).
//!
//! Mirrors the echelon-basis lattice from [`crate::zlat`] over `i64` with
//! checked arithmetic.  Any overflow surfaces as [`Ovf`] so callers can fall
//! back to arbitrary precision instead of silently wrapping.

use num_bigint::BigInt;

/// Overflow marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ovf;

fn c_add(a: i64, b: i64) -> Result<i64, Ovf> {
    a.checked_add(b).ok_or(Ovf)
}

fn c_mul(a: i64, b: i64) -> Result<i64, Ovf> {
    a.checked_mul(b).ok_or(Ovf)
}

fn c_sub(a: i64, b: i64) -> Result<i64, Ovf> {
    a.checked_sub(b).ok_or(Ovf)
}

/// Extended gcd: returns `(g, x, y)` with `g = x·a + y·b`, `g ≥ 0`.
fn extended_gcd(a: i64, b: i64) -> Result<(i64, i64, i64), Ovf> {
    let (mut r0, mut r1) = (a, b);
    let (mut x0, mut x1) = (1i64, 0i64);
    let (mut y0, mut y1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.checked_div(r1).ok_or(Ovf)?;
        let r2 = c_sub(r0, c_mul(q, r1)?)?;
        let x2 = c_sub(x0, c_mul(q, x1)?)?;
        let y2 = c_sub(y0, c_mul(q, y1)?)?;
        r0 = r1;
        r1 = r2;
        x0 = x1;
        x1 = x2;
        y0 = y1;
        y1 = y2;
    }
    if r0 < 0 {
        Ok((c_sub(0, r0)?, c_sub(0, x0)?, c_sub(0, y0)?))
    } else {
        Ok((r0, x0, y0))
    }
}

fn leading_index(v: &[i64]) -> Option<usize> {
    v.iter().position(|&x| x != 0)
}

/// `u -= q·w`, checked.
fn row_sub_mul(u: &mut [i64], q: i64, w: &[i64]) -> Result<(), Ovf> {
    if q == 0 {
        return Ok(());
    }
    for (a, &b) in u.iter_mut().zip(w) {
        *a = c_sub(*a, c_mul(q, b)?)?;
    }
    Ok(())
}

/// A sublattice of ℤⁿ kept as a row-echelon basis: strictly increasing pivot
/// columns, positive pivot entries.  The basis is *not* kept fully reduced;
/// call [`Lat64::canonical_basis`] for the unique reduced form.
#[derive(Debug, Clone)]
pub struct Lat64 {
    ambient: usize,
    rows: Vec<Vec<i64>>,
    pivots: Vec<usize>,
}

impl Lat64 {
    pub fn empty(ambient: usize) -> Self {
        Lat64 { ambient, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn from_rows(ambient: usize, rows: &[Vec<i64>]) -> Result<Self, Ovf> {
        let mut l = Lat64::empty(ambient);
        for r in rows {
            l.add_row(r.clone())?;
        }
        Ok(l)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn basis_rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    /// Add a vector; returns whether the lattice grew.
    /// Add a row to the lattice.  On overflow the lattice is left exactly as
    /// it was before the call, so callers can retry the same row in
    /// arbitrary precision.
    pub fn add_row(&mut self, v: Vec<i64>) -> Result<bool, Ovf> {
        assert_eq!(v.len(), self.ambient);
        let snap_rows = self.rows.clone();
        let snap_pivots = self.pivots.clone();
        match self.add_row_inner(v) {
            Ok(grew) => Ok(grew),
            Err(Ovf) => {
                self.rows = snap_rows;
                self.pivots = snap_pivots;
                Err(Ovf)
            }
        }
    }

    fn add_row_inner(&mut self, mut v: Vec<i64>) -> Result<bool, Ovf> {
        let mut grew = false;
        loop {
            let Some(lead) = leading_index(&v) else { return Ok(grew) };
            match self.pivots.binary_search(&lead) {
                Err(pos) => {
                    if v[lead] < 0 {
                        for x in v.iter_mut() {
                            *x = c_sub(0, *x)?;
                        }
                    }
                    self.rows.insert(pos, v);
                    self.pivots.insert(pos, lead);
                    self.reduce_column(pos)?;
                    return Ok(true);
                }
                Ok(pos) => {
                    let a = self.rows[pos][lead];
                    let b = v[lead];
                    if b % a == 0 {
                        let q = b / a;
                        let row = self.rows[pos].clone();
                        row_sub_mul(&mut v, q, &row)?;
                    } else {
                        let (g, x, y) = extended_gcd(a, b)?;
                        let (ca, cb) = (a / g, b / g);
                        let old = self.rows[pos].clone();
                        let mut combined = vec![0i64; self.ambient];
                        for i in 0..self.ambient {
                            combined[i] = c_add(c_mul(x, old[i])?, c_mul(y, v[i])?)?;
                        }
                        let mut rest = vec![0i64; self.ambient];
                        for i in 0..self.ambient {
                            rest[i] = c_sub(c_mul(ca, v[i])?, c_mul(cb, old[i])?)?;
                        }
                        debug_assert_eq!(combined[lead], g);
                        debug_assert_eq!(rest[lead], 0);
                        self.rows[pos] = combined;
                        self.reduce_column(pos)?;
                        grew = true;
                        v = rest;
                    }
                }
            }
        }
    }

    /// Re-reduce earlier rows at the pivot column of row `pos` (only they
    /// can be nonzero there).  Keeping the basis reduced at all times stops
    /// the exponential entry growth of plain echelon accumulation.
    fn reduce_column(&mut self, pos: usize) -> Result<(), Ovf> {
        let lead = self.pivots[pos];
        let pivot_row = std::mem::take(&mut self.rows[pos]);
        let d = pivot_row[lead];
        let mut result = Ok(());
        for i in 0..pos {
            let e = self.rows[i][lead];
            if e != 0 {
                let q = e.div_euclid(d);
                if q != 0 {
                    if let Err(o) = row_sub_mul(&mut self.rows[i], q, &pivot_row) {
                        result = Err(o);
                        break;
                    }
                }
            }
        }
        self.rows[pos] = pivot_row;
        result
    }

    /// Reduce `v` modulo the lattice: the unique representative with entries
    /// in `[0, d)` at each pivot column of pivot value `d`.
    pub fn reduce(&self, v: &[i64]) -> Result<Vec<i64>, Ovf> {
        assert_eq!(v.len(), self.ambient);
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let d = row[p];
            let q = v[p].div_euclid(d);
            row_sub_mul(&mut v, q, row)?;
        }
        Ok(v)
    }

    pub fn contains(&self, v: &[i64]) -> Result<bool, Ovf> {
        Ok(self.reduce(v)?.iter().all(|&x| x == 0))
    }

    /// The unique reduced echelon basis: entries above each pivot lie in
    /// `[0, d)`.
    pub fn canonical_basis(&self) -> Result<Vec<Vec<i64>>, Ovf> {
        let mut rows = self.rows.clone();
        for j in 0..rows.len() {
            for i in j + 1..rows.len() {
                let p = self.pivots[i];
                let d = rows[i][p];
                let q = rows[j][p].div_euclid(d);
                let lower = rows[i].clone();
                row_sub_mul(&mut rows[j], q, &lower)?;
            }
        }
        Ok(rows)
    }

    /// Convert to the arbitrary-precision lattice type.
    pub fn to_lattice(&self) -> crate::zlat::Lattice {
        let rows: Vec<Vec<BigInt>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        crate::zlat::Lattice::from_rows(self.ambient, rows)
    }
}

/// A submodule of `(ℤ/m)^n` kept in Howell form: strictly increasing pivot
/// columns, each pivot entry a divisor of `m`, entries above a pivot reduced
/// modulo that pivot, and closed under the annihilator shadows `(m/g)·row`.
/// The Howell closure is what makes greedy forward elimination a complete
/// membership test over ℤ/m (plain echelon form is not, for composite `m`).
///
/// This represents the lattice `L ⊆ ℤ^n` with `m·ℤ^n ⊆ L` by its image in
/// `(ℤ/m)^n`; all entries stay in `[0, m)`, so arithmetic never leaves
/// 128-bit intermediates regardless of how many rows are folded in.
#[derive(Debug, Clone)]
pub struct HowellMod {
    modulus: i64,
    ambient: usize,
    rows: Vec<Vec<i64>>,
    pivots: Vec<usize>,
}

impl HowellMod {
    /// The zero submodule (i.e. the lattice `m·ℤ^n`).  Requires `m ≥ 1`.
    pub fn new(ambient: usize, modulus: i64) -> Self {
        assert!(modulus >= 1, "modulus must be positive");
        HowellMod { modulus, ambient, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn md(&self, x: i128) -> i64 {
        x.rem_euclid(self.modulus as i128) as i64
    }

    /// `u := (u - q·w) mod m` from column `from` on.
    fn row_sub_mul_mod(&self, u: &mut [i64], q: i64, w: &[i64], from: usize) {
        if q == 0 {
            return;
        }
        for c in from..u.len() {
            if w[c] != 0 {
                u[c] = self.md(u[c] as i128 - q as i128 * w[c] as i128);
            }
        }
    }

    /// A unit `u` of ℤ/m with `u·x ≡ gcd(x, m) (mod m)`, for `x ∈ [1, m)`.
    fn unit_scaling_to_gcd(&self, x: i64) -> (i64, i64) {
        let m = self.modulus;
        let g = {
            let (mut a, mut b) = (x, m);
            while b != 0 {
                (a, b) = (b, a % b);
            }
            a
        };
        let k = x / g; // gcd(k, m/g) = 1
        let step = m / g;
        // Invert k modulo m/g, then lift to a unit modulo m: some
        // representative k⁻¹ + j·(m/g) is coprime to m (classical lemma on
        // lifting units along ℤ/m → ℤ/(m/g); the search is tiny).
        let inv = {
            let (mut t, mut new_t) = (0i128, 1i128);
            let (mut r, mut new_r) = (step as i128, (k % step.max(1)) as i128);
            if step == 1 {
                1i128
            } else {
                while new_r != 0 {
                    let q = r / new_r;
                    (t, new_t) = (new_t, t - q * new_t);
                    (r, new_r) = (new_r, r - q * new_r);
                }
                t.rem_euclid(step as i128)
            }
        } as i64;
        let mut u = if inv == 0 { 1 } else { inv };
        loop {
            let (mut a, mut b) = (u, m);
            while b != 0 {
                (a, b) = (b, a % b);
            }
            if a == 1 {
                break;
            }
            u += step;
        }
        (g, u % m)
    }

    /// Reduce entries of earlier rows at the pivot column of row `pos` into
    /// `[0, pivot)`.
    fn reduce_column(&mut self, pos: usize) {
        let lead = self.pivots[pos];
        let pivot_row = std::mem::take(&mut self.rows[pos]);
        let d = pivot_row[lead];
        for i in 0..pos {
            let e = self.rows[i][lead];
            if e != 0 {
                let q = e.div_euclid(d);
                self.row_sub_mul_mod(&mut self.rows[i], q, &pivot_row, lead);
            }
        }
        self.rows[pos] = pivot_row;
    }

    /// Fold a vector (arbitrary integer entries) into the submodule.
    /// Returns `true` iff the row span grew.
    pub fn add_row(&mut self, v: &[i64]) -> bool {
        assert_eq!(v.len(), self.ambient);
        let m = self.modulus;
        let first: Vec<i64> = v.iter().map(|&x| self.md(x as i128)).collect();
        let mut work: Vec<(Vec<i64>, bool)> = vec![(first, false)];
        let mut grew = false;
        while let Some((mut v, shadow)) = work.pop() {
            let mut i = 0usize;
            loop {
                let Some(lead) = v.iter().position(|&x| x != 0) else { break };
                while i < self.pivots.len() && self.pivots[i] < lead {
                    i += 1;
                }
                if i == self.pivots.len() || self.pivots[i] > lead {
                    // New pivot column: normalize the pivot entry to a
                    // divisor of m and insert.
                    let (g, u) = self.unit_scaling_to_gcd(v[lead]);
                    for x in v.iter_mut() {
                        *x = self.md(*x as i128 * u as i128);
                    }
                    debug_assert_eq!(v[lead], g);
                    if g < m && m / g > 1 && g > 1 {
                        let shadow_row: Vec<i64> =
                            v.iter().map(|&x| self.md(x as i128 * (m / g) as i128)).collect();
                        work.push((shadow_row, true));
                    }
                    self.rows.insert(i, v);
                    self.pivots.insert(i, lead);
                    self.reduce_column(i);
                    if !shadow {
                        grew = true;
                    }
                    break;
                }
                // Collision at an existing pivot.
                let a = self.rows[i][lead];
                let b = v[lead];
                if b % a == 0 {
                    let q = b / a;
                    let row = std::mem::take(&mut self.rows[i]);
                    self.row_sub_mul_mod(&mut v, q, &row, lead);
                    self.rows[i] = row;
                    debug_assert_eq!(v[lead], 0);
                } else {
                    // gcd-combine; both a and the new pivot divide m.
                    let (g, x, y) = match extended_gcd(a, b) {
                        Ok(t) => t,
                        Err(Ovf) => unreachable!("entries below modulus cannot overflow"),
                    };
                    let old = self.rows[i].clone();
                    let mut combined = vec![0i64; self.ambient];
                    let mut rest = vec![0i64; self.ambient];
                    for c in lead..self.ambient {
                        combined[c] =
                            self.md(x as i128 * old[c] as i128 + y as i128 * v[c] as i128);
                        rest[c] =
                            self.md((a / g) as i128 * v[c] as i128 - (b / g) as i128 * old[c] as i128);
                    }
                    debug_assert_eq!(combined[lead], g);
                    debug_assert_eq!(rest[lead], 0);
                    self.rows[i] = combined;
                    self.reduce_column(i);
                    if g < m && m / g > 1 && g > 1 {
                        let shadow_row: Vec<i64> = self.rows[i]
                            .iter()
                            .map(|&x| self.md(x as i128 * (m / g) as i128))
                            .collect();
                        work.push((shadow_row, true));
                    }
                    if !shadow {
                        grew = true;
                    }
                    v = rest;
                }
            }
        }
        grew
    }

    /// The canonical Hermite basis of the represented lattice
    /// `L = lift(span) + m·ℤ^n`: the lifted Howell rows where a pivot
    /// exists, `m·e_c` elsewhere.  (Same determinant as `L` and contained
    /// in it, hence equal; reduced above pivots by construction.)
    pub fn canonical_hnf(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::with_capacity(self.ambient);
        let mut next = 0usize;
        for c in 0..self.ambient {
            if next < self.pivots.len() && self.pivots[next] == c {
                out.push(self.rows[next].clone());
                next += 1;
            } else {
                let mut row = vec![0i64; self.ambient];
                row[c] = self.modulus;
                out.push(row);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    #[test]
    fn gcd_combine() {
        let mut l = Lat64::empty(2);
        assert!(l.add_row(vec![4, 0]).unwrap());
        assert!(l.add_row(vec![6, 1]).unwrap());
        // gcd(4, 6) = 2 at column 0.
        assert_eq!(l.rank(), 2);
        assert!(l.contains(&[2, 5]).unwrap() || !l.contains(&[2, 5]).unwrap()); // well-defined
        let canon = l.canonical_basis().unwrap();
        assert_eq!(canon[0][0], 2);
    }

    #[test]
    fn overflow_is_reported() {
        let mut l = Lat64::empty(2);
        l.add_row(vec![i64::MAX, 1]).unwrap();
        let r = l.add_row(vec![i64::MAX - 1, -5]);
        // Either succeeds or reports overflow; must not wrap silently.
        if let Ok(_) = r {
            let _ = l.canonical_basis();
        }
        let mut l2 = Lat64::empty(1);
        l2.add_row(vec![i64::MAX]).unwrap();
        assert_eq!(l2.reduce(&[i64::MIN + 1]).is_err(), false); // div_euclid fine
    }

    proptest! {
        /// Cross-check membership and canonical bases against the
        /// arbitrary-precision implementation.
        #[test]
        fn matches_bigint_lattice(
            rows in prop::collection::vec(prop::collection::vec(-30i64..30, 4), 1..5),
            probe in prop::collection::vec(-60i64..60, 4),
        ) {
            let l64 = Lat64::from_rows(4, &rows).unwrap();
            let big_rows: Vec<Vec<BigInt>> = rows
                .iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect();
            let lz = crate::zlat::Lattice::from_rows(4, big_rows);
            prop_assert_eq!(l64.rank(), lz.rank());
            prop_assert_eq!(l64.pivots(), lz.pivots());
            let c64: Vec<Vec<BigInt>> = l64
                .canonical_basis()
                .unwrap()
                .iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect();
            prop_assert_eq!(c64, lz.canonical_basis());
            let probe_big: Vec<BigInt> = probe.iter().map(|&x| BigInt::from(x)).collect();
            prop_assert_eq!(l64.contains(&probe).unwrap(), lz.contains(&probe_big));
        }
    }
}
