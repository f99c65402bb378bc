//! Exact integer linear algebra over ℤ: Hermite and Smith normal forms,
//! left kernels, row lattices with membership tests, lattice sums and
//! intersections, quotient invariants, and closures of a set of row vectors
//! under ℤ-linear actions ("spinning").
//!
//! All arithmetic uses arbitrary-precision integers.  Row lattices are kept
//! in echelon form with positive pivots; [`Lattice::canonical_basis`] returns
//! the unique row Hermite normal form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;

/// A dense matrix over ℤ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    /// Zero matrix of the given shape.
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    /// Build from rows; all rows must have equal length `cols`.
    pub fn from_rows(cols: usize, rows: Vec<Vec<BigInt>>) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        let nrows = rows.len();
        for r in rows {
            assert_eq!(r.len(), cols, "ragged row in IntMatrix::from_rows");
            data.extend(r);
        }
        IntMatrix { rows: nrows, cols, data }
    }

    /// Build from machine-integer rows.
    pub fn from_i64_rows(cols: usize, rows: &[Vec<i64>]) -> Self {
        IntMatrix::from_rows(
            cols,
            rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// All rows as owned vectors.
    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Row vector times matrix: `v · self`.
    pub fn apply_row(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.rows, "dimension mismatch in apply_row");
        let mut out = vec![BigInt::zero(); self.cols];
        for (i, coeff) in v.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                let e = self.get(i, j);
                if !e.is_zero() {
                    out[j] += coeff * e;
                }
            }
        }
        out
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let v = out.get(i, j) + a * b;
                        out.set(i, j, v);
                    }
                }
            }
        }
        out
    }
}

fn leading_index(v: &[BigInt]) -> Option<usize> {
    v.iter().position(|x| !x.is_zero())
}

fn row_sub_mul(target: &mut [BigInt], source: &[BigInt], q: &BigInt) {
    if q.is_zero() {
        return;
    }
    for (t, s) in target.iter_mut().zip(source) {
        if !s.is_zero() {
            *t -= q * s;
        }
    }
}

/// Row Hermite normal form over only the first `cols` columns of each row
/// (rows may carry extra tracking columns).  Returns the number of pivot rows;
/// pivot rows are moved to the front in pivot-column order, fully reduced
/// above, with positive pivots.  Rows whose first `cols` entries are zero end
/// up at the back, untouched beyond the row exchanges and combinations.
fn echelonize(rows: &mut Vec<Vec<BigInt>>, cols: usize) -> usize {
    let mut r = 0usize;
    for c in 0..cols {
        if r >= rows.len() {
            break;
        }
        loop {
            // Choose the row with minimal nonzero |entry| in column c.
            let mut best: Option<usize> = None;
            for i in r..rows.len() {
                if !rows[i][c].is_zero()
                    && best.is_none_or(|b| rows[i][c].abs() < rows[b][c].abs())
                {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            rows.swap(r, b);
            let mut clean = true;
            for i in r + 1..rows.len() {
                if !rows[i][c].is_zero() {
                    let q = rows[i][c].div_floor(&rows[r][c]);
                    let (head, tail) = rows.split_at_mut(i);
                    row_sub_mul(&mut tail[0], &head[r], &q);
                    if !rows[i][c].is_zero() {
                        clean = false;
                    }
                }
            }
            if clean {
                // Pivot established at (r, c): normalize sign, reduce above.
                if rows[r][c].is_negative() {
                    for x in rows[r].iter_mut() {
                        *x = -std::mem::take(x);
                    }
                }
                for i in 0..r {
                    if !rows[i][c].is_zero() {
                        let q = rows[i][c].div_floor(&rows[r][c]);
                        let (head, tail) = rows.split_at_mut(r);
                        row_sub_mul(&mut head[i], &tail[0], &q);
                    }
                }
                r += 1;
                break;
            }
        }
    }
    r
}

/// Row Hermite normal form: unique basis of the row space with positive
/// pivots in strictly increasing columns and entries above each pivot reduced
/// into `[0, pivot)`.  Zero rows are dropped.
pub fn hnf(m: &IntMatrix) -> IntMatrix {
    let mut rows = m.to_rows();
    let r = echelonize(&mut rows, m.cols());
    rows.truncate(r);
    IntMatrix::from_rows(m.cols(), rows)
}

/// Basis (in Hermite normal form) of the left kernel `{v : v · m = 0}`.
pub fn left_kernel(m: &IntMatrix) -> IntMatrix {
    let n = m.rows();
    let cols = m.cols();
    // Augment each row with a unit tracking vector; rows whose matrix part
    // reduces to zero yield kernel combinations in the tracking part.
    let mut rows: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let mut v = m.row(i).to_vec();
            v.extend((0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }));
            v
        })
        .collect();
    let r = echelonize(&mut rows, cols);
    let kernel_rows: Vec<Vec<BigInt>> = rows[r..].iter().map(|v| v[cols..].to_vec()).collect();
    hnf(&IntMatrix::from_rows(n, kernel_rows))
}

/// Smith normal form: the diagonal `d₁ | d₂ | … | d_r` (nonnegative, with
/// trailing zeros absent) of the matrix under unimodular row and column
/// operations.
pub fn snf(m: &IntMatrix) -> Vec<BigInt> {
    let mut a = m.to_rows();
    let nrows = m.rows();
    let ncols = m.cols();
    let mut diag: Vec<BigInt> = Vec::new();
    let mut t = 0usize;
    'outer: while t < nrows && t < ncols {
        // Find the minimal-|·| nonzero entry in the trailing submatrix.
        let mut best: Option<(usize, usize)> = None;
        for i in t..nrows {
            for j in t..ncols {
                if !a[i][j].is_zero()
                    && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break 'outer };
        a.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        loop {
            let mut clean = true;
            // Clear column t below the pivot.
            for i in t + 1..nrows {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    let (head, tail) = a.split_at_mut(i);
                    row_sub_mul(&mut tail[0], &head[t], &q);
                    if !a[i][t].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                // A smaller entry appeared in column t; promote it.
                let mut bi = t;
                for i in t..nrows {
                    if !a[i][t].is_zero()
                        && (a[bi][t].is_zero() || a[i][t].abs() < a[bi][t].abs())
                    {
                        bi = i;
                    }
                }
                a.swap(t, bi);
                continue;
            }
            // Clear row t to the right of the pivot.
            for j in t + 1..ncols {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    if !q.is_zero() {
                        for row in a.iter_mut() {
                            let s = &row[t] * &q;
                            row[j] -= s;
                        }
                    }
                    if !a[t][j].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                let mut bj = t;
                for j in t..ncols {
                    if !a[t][j].is_zero()
                        && (a[t][bj].is_zero() || a[t][j].abs() < a[t][bj].abs())
                    {
                        bj = j;
                    }
                }
                for row in a.iter_mut() {
                    row.swap(t, bj);
                }
                continue;
            }
            // Pivot isolated; ensure it divides the whole trailing submatrix.
            let mut witness: Option<usize> = None;
            for i in t + 1..nrows {
                if a[i][t + 1..ncols].iter().any(|x| !(x % &a[t][t]).is_zero()) {
                    witness = Some(i);
                    break;
                }
            }
            if let Some(i) = witness {
                let (head, tail) = a.split_at_mut(i);
                let minus_one = -BigInt::one();
                row_sub_mul(&mut head[t], &tail[0], &minus_one);
                continue;
            }
            break;
        }
        let d = a[t][t].abs();
        diag.push(d);
        t += 1;
    }
    diag
}

/// A subgroup of ℤ^ambient given by a basis of row vectors kept in echelon
/// form (strictly increasing pivot columns, positive pivots).
#[derive(Debug, Clone)]
pub struct Lattice {
    ambient: usize,
    rows: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
}

impl Lattice {
    /// The zero lattice in ℤ^ambient.
    pub fn empty(ambient: usize) -> Self {
        Lattice { ambient, rows: Vec::new(), pivots: Vec::new() }
    }

    /// Lattice spanned by the given rows.
    pub fn from_rows(ambient: usize, rows: impl IntoIterator<Item = Vec<BigInt>>) -> Self {
        let mut lat = Lattice::empty(ambient);
        for r in rows {
            lat.add_row(r);
        }
        lat
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Pivot column of each basis row.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Current echelon basis (not necessarily reduced above pivots).
    pub fn basis_rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    /// Reduce `v` modulo the lattice: subtract multiples of basis rows so
    /// that every entry at a pivot column lies in `[0, pivot)`.  The result
    /// is zero iff `v` is in the lattice.
    pub fn reduce(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.ambient, "dimension mismatch in reduce");
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !v[p].is_zero() {
                let q = v[p].div_floor(&row[p]);
                row_sub_mul(&mut v, row, &q);
            }
        }
        v
    }

    /// Membership test.
    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.reduce(v).iter().all(|x| x.is_zero())
    }

    /// Add a row, returning `true` iff the lattice strictly grew.
    pub fn add_row(&mut self, v: Vec<BigInt>) -> bool {
        assert_eq!(v.len(), self.ambient, "dimension mismatch in add_row");
        let mut v = v;
        let mut grew = false;
        let mut i = 0usize;
        loop {
            let Some(lead) = leading_index(&v) else { break };
            if i == self.rows.len() || lead < self.pivots[i] {
                // New pivot column: insert (sign-normalized) here.
                if v[lead].is_negative() {
                    for x in v.iter_mut() {
                        *x = -std::mem::take(x);
                    }
                }
                self.rows.insert(i, v);
                self.pivots.insert(i, lead);
                self.reduce_column(i);
                return true;
            }
            let p = self.pivots[i];
            if lead > p {
                i += 1;
                continue;
            }
            // lead == p: combine with the basis row.
            let a = self.rows[i][p].clone();
            let b = v[p].clone();
            if (&b % &a).is_zero() {
                let q = &b / &a;
                row_sub_mul(&mut v, &self.rows[i], &q);
            } else {
                // Replace the basis row by the gcd combination, leave the
                // complementary part in v and push it further down.
                let ext = a.extended_gcd(&b);
                let (g, x, y) = (ext.gcd, ext.x, ext.y);
                let new_row: Vec<BigInt> = self.rows[i]
                    .iter()
                    .zip(&v)
                    .map(|(r, w)| &x * r + &y * w)
                    .collect();
                let ca = &a / &g;
                let cb = &b / &g;
                let new_v: Vec<BigInt> = self.rows[i]
                    .iter()
                    .zip(&v)
                    .map(|(r, w)| &ca * w - &cb * r)
                    .collect();
                debug_assert!(new_row[p] == g && g.is_positive());
                self.rows[i] = new_row;
                self.reduce_column(i);
                v = new_v;
                grew = true;
            }
            i += 1;
        }
        grew
    }

    /// Re-reduce the entries of earlier rows at the pivot column of row
    /// `pos` (only earlier rows can be nonzero there).  Keeping the basis
    /// reduced at all times stops the exponential entry growth that plain
    /// echelon accumulation suffers from.
    fn reduce_column(&mut self, pos: usize) {
        let lead = self.pivots[pos];
        let pivot_row = std::mem::take(&mut self.rows[pos]);
        let d = &pivot_row[lead];
        for i in 0..pos {
            if self.rows[i][lead].is_zero() {
                continue;
            }
            let q = self.rows[i][lead].div_floor(d);
            if !q.is_zero() {
                row_sub_mul(&mut self.rows[i], &pivot_row, &q);
            }
        }
        self.rows[pos] = pivot_row;
    }

    /// Sum of two lattices (smallest lattice containing both).
    pub fn sum(&self, other: &Lattice) -> Lattice {
        assert_eq!(self.ambient, other.ambient);
        let mut out = self.clone();
        for r in &other.rows {
            out.add_row(r.clone());
        }
        out
    }

    /// Intersection of two lattices, via the left kernel of the stacked
    /// bases: if `u·A = v·B` ranges over the kernel of `[A; −B]`, the rows
    /// `u·A` span the intersection.
    pub fn intersect(&self, other: &Lattice) -> Lattice {
        assert_eq!(self.ambient, other.ambient);
        if self.rank() == 0 || other.rank() == 0 {
            return Lattice::empty(self.ambient);
        }
        let mut stacked: Vec<Vec<BigInt>> = self.rows.clone();
        for r in &other.rows {
            stacked.push(r.iter().map(|x| -x).collect());
        }
        let m = IntMatrix::from_rows(self.ambient, stacked);
        let k = left_kernel(&m);
        let mut out = Lattice::empty(self.ambient);
        for i in 0..k.rows() {
            let u = &k.row(i)[..self.rank()];
            let mut x = vec![BigInt::zero(); self.ambient];
            for (coeff, row) in u.iter().zip(&self.rows) {
                if !coeff.is_zero() {
                    for (xj, rj) in x.iter_mut().zip(row) {
                        *xj += coeff * rj;
                    }
                }
            }
            out.add_row(x);
        }
        out
    }

    /// The unique Hermite-normal-form basis (entries above pivots reduced).
    pub fn canonical_basis(&self) -> Vec<Vec<BigInt>> {
        let mut rows = self.rows.clone();
        // For each row, clear against later pivots left to right: subtracting
        // the row with pivot p only touches columns ≥ p, so earlier-reduced
        // pivot columns stay reduced.
        for j in 0..rows.len() {
            for i in j + 1..rows.len() {
                let p = self.pivots[i];
                if !rows[j][p].is_zero() {
                    let q = rows[j][p].div_floor(&rows[i][p]);
                    let (head, tail) = rows.split_at_mut(i);
                    row_sub_mul(&mut head[j], &tail[0], &q);
                }
            }
        }
        rows
    }

    /// Equality as subgroups of ℤ^ambient.
    pub fn equals(&self, other: &Lattice) -> bool {
        self.ambient == other.ambient
            && self.pivots == other.pivots
            && self.canonical_basis() == other.canonical_basis()
    }
}

/// Invariant factors of the subquotient `sup / sub` for nested lattices
/// `sub ⊆ sup`.  Panics if `sub ⊄ sup`.
pub fn quotient_invariants(sup: &Lattice, sub: &Lattice) -> AbelianInvariants {
    assert_eq!(sup.ambient(), sub.ambient());
    let s = sup.rank();
    // Express each basis row of `sub` in the basis of `sup`.
    let mut coord_rows: Vec<Vec<BigInt>> = Vec::with_capacity(sub.rank());
    for v in sub.basis_rows() {
        let mut v = v.clone();
        let mut coords = vec![BigInt::zero(); s];
        for (i, (row, &p)) in sup.basis_rows().iter().zip(sup.pivots()).enumerate() {
            if !v[p].is_zero() {
                let (q, r) = v[p].div_mod_floor(&row[p]);
                assert!(r.is_zero(), "sublattice is not contained in the superlattice");
                row_sub_mul(&mut v, row, &q);
                coords[i] = q;
            }
        }
        assert!(v.iter().all(|x| x.is_zero()), "sublattice is not contained in the superlattice");
        coord_rows.push(coords);
    }
    AbelianInvariants::from_relation_matrix(s, IntMatrix::from_rows(s, coord_rows))
}

/// Isomorphism type of a finitely generated abelian group:
/// `ℤ_{d₁} × … × ℤ_{d_k} × ℤ^free_rank` with `d₁ | d₂ | … | d_k`, all `dᵢ ≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbelianInvariants {
    pub torsion: Vec<BigInt>,
    pub free_rank: usize,
}

impl AbelianInvariants {
    /// The trivial group.
    pub fn trivial() -> Self {
        AbelianInvariants { torsion: Vec::new(), free_rank: 0 }
    }

    /// Invariants of `ℤ^n / rowspace(m)` where `m` has `n` columns.
    pub fn from_relation_matrix(n: usize, m: IntMatrix) -> Self {
        assert_eq!(m.cols(), n);
        // Reduce to Hermite form and split off unit pivots first: in the
        // reduced form a unit pivot's column is zero elsewhere, and its row
        // can be cleared by column operations that only touch that row, so
        // deleting the row/column pair leaves the cokernel unchanged.  This
        // keeps the (cubic, arbitrary-precision) Smith reduction on the small
        // non-unimodular core only.
        let h = hnf(&m);
        let one = BigInt::one();
        let mut unit_cols: Vec<bool> = vec![false; n];
        let mut units = 0usize;
        let mut keep_rows: Vec<usize> = Vec::new();
        for i in 0..h.rows() {
            let p = h.row(i).iter().position(|x| !x.is_zero()).expect("hnf drops zero rows");
            if h.get(i, p) == &one {
                unit_cols[p] = true;
                units += 1;
            } else {
                keep_rows.push(i);
            }
        }
        let keep_cols: Vec<usize> = (0..n).filter(|&c| !unit_cols[c]).collect();
        let small: Vec<Vec<BigInt>> = keep_rows
            .iter()
            .map(|&i| keep_cols.iter().map(|&c| h.get(i, c).clone()).collect())
            .collect();
        let diag = snf(&IntMatrix::from_rows(keep_cols.len(), small));
        let rank = units + diag.iter().filter(|d| !d.is_zero()).count();
        let torsion: Vec<BigInt> = diag.into_iter().filter(|d| d > &one).collect();
        AbelianInvariants { torsion, free_rank: n - rank }
    }

    /// Invariants of a direct product `∏ ℤ_{dᵢ}` given by arbitrary factor
    /// orders (`0` denotes a free factor ℤ); normalizes to a divisor chain.
    pub fn from_factor_orders(orders: impl IntoIterator<Item = BigInt>) -> Self {
        let mut free = 0usize;
        let mut tor: Vec<BigInt> = Vec::new();
        for d in orders {
            assert!(!d.is_negative(), "factor orders must be nonnegative");
            if d.is_zero() {
                free += 1;
            } else if d > BigInt::one() {
                tor.push(d);
            }
        }
        // Pairwise (gcd, lcm) replacement until the sorted list is a chain.
        loop {
            tor.sort();
            let mut changed = false;
            for i in 0..tor.len() {
                for j in i + 1..tor.len() {
                    if !(&tor[j] % &tor[i]).is_zero() {
                        let g = tor[i].gcd(&tor[j]);
                        let l = (&tor[i] / &g) * &tor[j];
                        tor[i] = g;
                        tor[j] = l;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        tor.retain(|d| d > &BigInt::one());
        AbelianInvariants { torsion: tor, free_rank: free }
    }

    /// Convenience constructor from machine integers.
    pub fn from_orders_i64(orders: &[i64]) -> Self {
        Self::from_factor_orders(orders.iter().map(|&d| {
            assert!(d >= 0);
            BigInt::from(d)
        }))
    }

    pub fn is_trivial(&self) -> bool {
        self.torsion.is_empty() && self.free_rank == 0
    }

    /// Group order (`None` if infinite).
    pub fn order(&self) -> Option<BigInt> {
        if self.free_rank > 0 {
            None
        } else {
            Some(self.torsion.iter().product())
        }
    }

    /// Number of invariant factors divisible by `p` (the p-rank of the
    /// quotient modulo p-th powers, for prime p).
    pub fn rank_at(&self, p: u64) -> usize {
        let p = BigInt::from(p);
        self.torsion.iter().filter(|d| (*d % &p).is_zero()).count()
    }

    /// Whether the group is elementary abelian of exponent `p`
    /// (free part absent and every invariant factor equal to `p`).
    pub fn is_elementary(&self, p: u64) -> bool {
        let p = BigInt::from(p);
        self.free_rank == 0 && self.torsion.iter().all(|d| *d == p)
    }
}

impl fmt::Display for AbelianInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "1");
        }
        let mut parts: Vec<String> = self.torsion.iter().map(|d| format!("Z{d}")).collect();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        write!(f, "{}", parts.join(" x "))
    }
}

/// Smallest lattice containing `seeds` that is closed under the given
/// ℤ-linear actions (`v ↦ v · a`).  Work-list closure: children of a vector
/// are explored only when the vector strictly enlarged the lattice, which is
/// sound because the actions are ℤ-linear (a pruned vector is a ℤ-combination
/// of vectors whose children are explored), and terminates because ℤ^ambient
/// is Noetherian.
pub fn spin_closure(ambient: usize, seeds: &[Vec<BigInt>], actions: &[IntMatrix]) -> Lattice {
    for a in actions {
        assert_eq!(a.rows(), ambient);
        assert_eq!(a.cols(), ambient);
    }
    spin_closure_by(ambient, seeds, actions.len(), |k, v| actions[k].apply_row(v))
}

/// [`spin_closure`] with the actions given as evaluation callbacks
/// (`apply(k, v)` = image of `v` under action `k`), so callers with sparse
/// or implicit actions need not materialize dense matrices.
pub fn spin_closure_by(
    ambient: usize,
    seeds: &[Vec<BigInt>],
    n_actions: usize,
    apply: impl Fn(usize, &[BigInt]) -> Vec<BigInt>,
) -> Lattice {
    let mut lat = Lattice::empty(ambient);
    let mut queue: VecDeque<Vec<BigInt>> = VecDeque::new();
    for s in seeds {
        if lat.add_row(s.clone()) {
            queue.push_back(s.clone());
        }
    }
    while let Some(v) = queue.pop_front() {
        for k in 0..n_actions {
            let w = apply(k, &v);
            if lat.add_row(w.clone()) {
                queue.push_back(w);
            }
        }
    }
    lat
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    fn mat(cols: usize, rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_i64_rows(cols, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn hnf_of_simple_matrix() {
        // rows (2,0),(0,2),(1,1) span the full lattice with index... = 2? no:
        // (1,1),(2,0) give determinant 2 sublattice containing (0,2).
        let m = mat(2, &[&[2, 0], &[0, 2], &[1, 1]]);
        let h = hnf(&m);
        assert_eq!(h.rows(), 2);
        assert_eq!(h.to_rows(), vec![vec![bi(1), bi(1)], vec![bi(0), bi(2)]]);
    }

    #[test]
    fn hnf_is_reduced_above_pivots() {
        let m = mat(3, &[&[1, 7, 5], &[0, 3, 4], &[0, 0, 6]]);
        let h = hnf(&m);
        // Entry above each pivot must lie in [0, pivot).
        assert_eq!(h.rows(), 3);
        for i in 0..3 {
            for j in i + 1..3 {
                let p = h.get(j, j);
                let e = h.get(i, j);
                assert!(e >= &bi(0) && e < p, "entry {e} not reduced below pivot {p}");
            }
        }
    }

    #[test]
    fn snf_diagonal_and_chain() {
        let m = mat(2, &[&[2, 0], &[0, 3]]);
        assert_eq!(snf(&m), vec![bi(1), bi(6)]);
        let m2 = mat(2, &[&[2, 4], &[4, 2]]);
        // det = -12, content 2: invariants 2, 6.
        assert_eq!(snf(&m2), vec![bi(2), bi(6)]);
        let m3 = mat(3, &[&[1, 0, 0], &[0, 2, 0]]);
        assert_eq!(snf(&m3), vec![bi(1), bi(2)]);
    }

    #[test]
    fn invariants_from_diag_2_3_is_z6() {
        let inv = AbelianInvariants::from_relation_matrix(2, mat(2, &[&[2, 0], &[0, 3]]));
        assert_eq!(inv.torsion, vec![bi(6)]);
        assert_eq!(inv.free_rank, 0);
        assert_eq!(inv.to_string(), "Z6");
    }

    #[test]
    fn invariants_with_free_part() {
        let inv = AbelianInvariants::from_relation_matrix(3, mat(3, &[&[0, 4, 0]]));
        assert_eq!(inv.torsion, vec![bi(4)]);
        assert_eq!(inv.free_rank, 2);
        assert_eq!(inv.to_string(), "Z4 x Z^2");
    }

    #[test]
    fn from_factor_orders_normalizes() {
        let inv = AbelianInvariants::from_orders_i64(&[4, 2, 6]);
        assert_eq!(inv.torsion, vec![bi(2), bi(2), bi(12)]);
        let inv2 = AbelianInvariants::from_orders_i64(&[2, 3]);
        assert_eq!(inv2.torsion, vec![bi(6)]);
        let inv3 = AbelianInvariants::from_orders_i64(&[1, 1]);
        assert!(inv3.is_trivial());
    }

    #[test]
    fn left_kernel_basic() {
        //  v · (1,1;1,1)ᵗ = 0 ⇔ v = k(1,−1)
        let m = mat(1, &[&[1], &[1]]);
        let k = left_kernel(&m);
        assert_eq!(k.rows(), 1);
        assert_eq!(k.to_rows(), vec![vec![bi(1), bi(-1)]]);
    }

    #[test]
    fn lattice_membership_and_growth() {
        let mut lat = Lattice::empty(2);
        assert!(lat.add_row(vec![bi(2), bi(0)]));
        assert!(lat.add_row(vec![bi(0), bi(2)]));
        assert!(!lat.add_row(vec![bi(2), bi(2)]));
        assert!(!lat.contains(&[bi(1), bi(1)]));
        assert!(lat.add_row(vec![bi(1), bi(1)]));
        assert!(lat.contains(&[bi(1), bi(1)]));
        assert!(!lat.contains(&[bi(1), bi(0)]));
        assert_eq!(lat.rank(), 2);
    }

    #[test]
    fn lattice_intersection_of_two_index_two() {
        // ⟨(2,0),(0,1)⟩ ∩ ⟨(1,0),(0,2)⟩ = ⟨(2,0),(0,2)⟩
        let a = Lattice::from_rows(2, vec![vec![bi(2), bi(0)], vec![bi(0), bi(1)]]);
        let b = Lattice::from_rows(2, vec![vec![bi(1), bi(0)], vec![bi(0), bi(2)]]);
        let c = a.intersect(&b);
        assert_eq!(c.canonical_basis(), vec![vec![bi(2), bi(0)], vec![bi(0), bi(2)]]);
    }

    #[test]
    fn quotient_invariants_of_nested_lattices() {
        // ℤ² / ⟨(2,0),(0,4)⟩ = Z2 × Z4
        let sup = Lattice::from_rows(2, vec![vec![bi(1), bi(0)], vec![bi(0), bi(1)]]);
        let sub = Lattice::from_rows(2, vec![vec![bi(2), bi(0)], vec![bi(0), bi(4)]]);
        let inv = quotient_invariants(&sup, &sub);
        assert_eq!(inv.torsion, vec![bi(2), bi(4)]);
        assert_eq!(inv.free_rank, 0);
    }

    #[test]
    fn spin_closure_under_swap() {
        // Seed (1,0) under coordinate swap closes to ⟨(1,0),(0,1)⟩.
        let swap = mat(2, &[&[0, 1], &[1, 0]]);
        let lat = spin_closure(2, &[vec![bi(1), bi(0)]], &[swap]);
        assert_eq!(lat.rank(), 2);
        assert!(lat.contains(&[bi(0), bi(1)]));
    }

    #[test]
    fn spin_closure_terminates_with_growth_action() {
        // v ↦ 2v never adds anything new after the seed.
        let double = mat(1, &[&[2]]);
        let lat = spin_closure(1, &[vec![bi(3)]], &[double]);
        assert_eq!(lat.canonical_basis(), vec![vec![bi(3)]]);
    }

    fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = IntMatrix> {
        prop::collection::vec(prop::collection::vec(-9i64..=9, cols..=cols), rows..=rows)
            .prop_map(move |r| IntMatrix::from_i64_rows(cols, &r))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_hnf_idempotent_and_preserves_rowspace(m in arb_matrix(4, 4)) {
            let h = hnf(&m);
            prop_assert_eq!(hnf(&h), h.clone());
            // Same row space: each generates the other's lattice.
            let la = Lattice::from_rows(4, m.to_rows());
            let lb = Lattice::from_rows(4, h.to_rows());
            prop_assert!(la.equals(&lb));
        }

        #[test]
        fn prop_snf_divisibility_chain(m in arb_matrix(4, 5)) {
            let d = snf(&m);
            for w in d.windows(2) {
                prop_assert!(!w[1].is_zero());
                prop_assert!((&w[1] % &w[0]).is_zero(), "chain violated: {} ∤ {}", w[0], w[1]);
            }
        }

        #[test]
        fn prop_snf_matches_order_of_quotient(m in arb_matrix(3, 3)) {
            // |det| equals the product of invariant factors when nonsingular.
            let d = snf(&m);
            if d.len() == 3 {
                let prod: BigInt = d.iter().product();
                let det = det3(&m);
                prop_assert_eq!(prod, det.abs());
            }
        }

        #[test]
        fn prop_kernel_rows_annihilate(m in arb_matrix(4, 3)) {
            let k = left_kernel(&m);
            for i in 0..k.rows() {
                let prod = m.apply_row(&k.row(i).iter().cloned().collect::<Vec<_>>());
                prop_assert!(prod.iter().all(|x| x.is_zero()));
            }
            // Rank-nullity over ℚ.
            let rank = hnf(&m).rows();
            prop_assert_eq!(k.rows(), 4 - rank);
        }

        #[test]
        fn prop_intersection_contained_in_both(ma in arb_matrix(3, 3), mb in arb_matrix(3, 3)) {
            let a = Lattice::from_rows(3, ma.to_rows());
            let b = Lattice::from_rows(3, mb.to_rows());
            let c = a.intersect(&b);
            for r in c.basis_rows() {
                prop_assert!(a.contains(r));
                prop_assert!(b.contains(r));
            }
            // Sum of scaled standard vectors inside both is inside the intersection.
            let s = a.sum(&b);
            prop_assert!(s.rank() >= a.rank().max(b.rank()));
        }

        #[test]
        fn prop_reduce_is_canonical_representative(m in arb_matrix(3, 4), v in prop::collection::vec(-20i64..=20, 4)) {
            let lat = Lattice::from_rows(4, m.to_rows());
            let v: Vec<BigInt> = v.into_iter().map(BigInt::from).collect();
            let r = lat.reduce(&v);
            // v − r is in the lattice.
            let diff: Vec<BigInt> = v.iter().zip(&r).map(|(a, b)| a - b).collect();
            prop_assert!(lat.contains(&diff));
            // Reduction is idempotent.
            prop_assert_eq!(lat.reduce(&r), r);
        }
    }

    fn det3(m: &IntMatrix) -> BigInt {
        let g = |i: usize, j: usize| m.get(i, j).clone();
        g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
            - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
    }
}
