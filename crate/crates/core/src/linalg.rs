//! Exact sparse row echelon form over the integers.
//!
//! Rows are kept primitive (content divided out) and are combined by
//! cross-multiplication, so no fractions appear during elimination. Rational
//! arithmetic is used only for the final back substitution.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::Rational;

/// Sparse integer row: `(column, nonzero value)` sorted by column.
pub type SparseRow = Vec<(usize, BigInt)>;

/// Incrementally built echelon basis of a row space.
#[derive(Clone, Debug)]
pub struct Echelon {
    ncols: usize,
    rows: BTreeMap<usize, SparseRow>,
}

impl Echelon {
    pub fn new(ncols: usize) -> Self {
        Echelon { ncols, rows: BTreeMap::new() }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rows.len() == self.ncols
    }

    /// Leading column of a stored row, if any row leads there.
    pub fn has_pivot(&self, col: usize) -> bool {
        self.rows.contains_key(&col)
    }

    /// Reduces `row` against the basis and stores the remainder.
    /// Returns `true` when the rank grew.
    pub fn insert(&mut self, mut row: SparseRow) -> bool {
        row.retain(|(_, v)| !v.is_zero());
        row.sort_by_key(|e| e.0);
        loop {
            let Some((lead, a)) = row.first().cloned() else {
                return false;
            };
            match self.rows.get(&lead) {
                None => {
                    make_primitive(&mut row);
                    self.rows.insert(lead, row);
                    return true;
                }
                Some(pivot) => {
                    let c = &pivot[0].1;
                    let g = a.gcd(c);
                    let fa = c / &g;
                    let fb = &a / &g;
                    row = combine(&row, &fa, pivot, &fb);
                    make_primitive(&mut row);
                }
            }
        }
    }

    /// Back substitution with the free columns fixed by `free`; columns not
    /// listed there are zero. Returns the values of all columns.
    fn back_substitute(&self, free: &[(usize, Rational)]) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.ncols];
        for (c, v) in free {
            x[*c] = v.clone();
        }
        for (&lead, row) in self.rows.iter().rev() {
            let mut acc = Rational::zero();
            for (c, v) in &row[1..] {
                if !x[*c].is_zero() {
                    acc += Rational::from_integer(v.clone()) * &x[*c];
                }
            }
            x[lead] = -acc / Rational::from_integer(row[0].1.clone());
        }
        x
    }

    /// A nonzero vector `x` with `A x = 0`, when the columns are dependent.
    pub fn kernel_vector(&self) -> Option<Vec<Rational>> {
        let free = (0..self.ncols).find(|c| !self.rows.contains_key(c))?;
        Some(self.back_substitute(&[(free, Rational::one())]))
    }

    /// Treats the last column as a right-hand side `b` and solves `A c = b`.
    /// Returns `None` when the system is inconsistent.
    pub fn solve_last_column(&self) -> Option<Vec<Rational>> {
        let last = self.ncols.checked_sub(1)?;
        if self.rows.contains_key(&last) {
            return None;
        }
        let mut x = self.back_substitute(&[(last, -Rational::one())]);
        x.pop();
        Some(x)
    }
}

fn combine(r: &SparseRow, fr: &BigInt, s: &SparseRow, fs: &BigInt) -> SparseRow {
    // fr * r - fs * s, merged by column
    let mut out = Vec::with_capacity(r.len() + s.len());
    let (mut a, mut b) = (0, 0);
    while a < r.len() || b < s.len() {
        let ca = r.get(a).map(|e| e.0).unwrap_or(usize::MAX);
        let cb = s.get(b).map(|e| e.0).unwrap_or(usize::MAX);
        let (col, v) = if ca == cb {
            let v = fr * &r[a].1 - fs * &s[b].1;
            a += 1;
            b += 1;
            (ca, v)
        } else if ca < cb {
            let v = fr * &r[a].1;
            a += 1;
            (ca, v)
        } else {
            let v = -(fs * &s[b].1);
            b += 1;
            (cb, v)
        };
        if !v.is_zero() {
            out.push((col, v));
        }
    }
    out
}

fn make_primitive(row: &mut SparseRow) {
    let Some(first) = row.first() else { return };
    let mut g = first.1.abs();
    for (_, v) in row.iter().skip(1) {
        if g.is_one() {
            break;
        }
        g = g.gcd(v);
    }
    let neg = first.1.is_negative();
    if !g.is_one() || neg {
        let g = if neg { -g } else { g };
        for (_, v) in row.iter_mut() {
            *v = &*v / &g;
        }
    }
}

/// Scales a rational row to a primitive integer row.
pub fn integer_row(entries: &[(usize, Rational)]) -> SparseRow {
    let mut l = BigInt::one();
    for (_, v) in entries {
        if !v.is_zero() {
            l = l.lcm(v.denom());
        }
    }
    entries
        .iter()
        .filter(|(_, v)| !v.is_zero())
        .map(|(c, v)| (*c, v.numer() * (&l / v.denom())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(entries: &[(usize, i64)]) -> SparseRow {
        entries.iter().map(|&(c, v)| (c, BigInt::from(v))).collect()
    }

    #[test]
    fn rank_and_kernel() {
        let mut e = Echelon::new(3);
        assert!(e.insert(r(&[(0, 1), (1, 2), (2, 3)])));
        assert!(e.insert(r(&[(0, 2), (1, 4), (2, 7)])));
        assert!(!e.insert(r(&[(0, 3), (1, 6), (2, 10)])));
        assert_eq!(e.rank(), 2);
        let k = e.kernel_vector().unwrap();
        // x0 + 2 x1 + 3 x2 = 0 and x2 = 0
        assert_eq!(k[1], Rational::one());
        assert_eq!(k[0], Rational::from_integer(BigInt::from(-2)));
        assert!(k[2].is_zero());
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        // x = 2, y = 3 with rhs column 2
        let mut e = Echelon::new(3);
        e.insert(r(&[(0, 1), (2, 2)]));
        e.insert(r(&[(1, 1), (2, 3)]));
        e.insert(r(&[(0, 1), (1, 1), (2, 5)]));
        let x = e.solve_last_column().unwrap();
        assert_eq!(x, vec![Rational::from_integer(2.into()), Rational::from_integer(3.into())]);
        e.insert(r(&[(0, 1), (1, 1), (2, 6)]));
        assert!(e.solve_last_column().is_none());
    }
}
