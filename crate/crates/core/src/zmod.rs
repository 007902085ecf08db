//! Residue arithmetic over `Z_m`: factorization, CRT lifting, dense
//! matrices and rank factorization over the prime-field components.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Largest supported modulus; keeps every product of two residues in a `u64`.
pub const MAX_MODULUS: u64 = u32::MAX as u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimePower {
    pub p: u64,
    pub e: u32,
    /// `p^e`
    pub q: u64,
}

/// A modulus `m >= 2` together with its canonical prime-power factorization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modulus {
    m: u64,
    factors: Vec<PrimePower>,
    // idempotents: crt_basis[i] = 1 mod q_i, 0 mod q_j (j != i)
    crt_basis: Vec<u64>,
}

/// Factorize `m` by trial division. Factors come out sorted by prime.
pub fn factorize(m: u64) -> Result<Modulus> {
    Modulus::new(m)
}

impl Modulus {
    pub fn new(m: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidModulus(m));
        }
        if m > MAX_MODULUS {
            return Err(Error::ModulusTooLarge(m));
        }
        let mut factors = Vec::new();
        let mut rest = m;
        let mut p = 2u64;
        while p * p <= rest {
            if rest.is_multiple_of(p) {
                let mut e = 0;
                let mut q = 1;
                while rest.is_multiple_of(p) {
                    rest /= p;
                    q *= p;
                    e += 1;
                }
                factors.push(PrimePower { p, e, q });
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if rest > 1 {
            factors.push(PrimePower {
                p: rest,
                e: 1,
                q: rest,
            });
        }
        let crt_basis = factors
            .iter()
            .map(|f| {
                let cofactor = m / f.q;
                let inv = inv_mod(cofactor % f.q, f.q).expect("coprime cofactor");
                mul_mod(cofactor, inv, m)
            })
            .collect();
        Ok(Modulus {
            m,
            factors,
            crt_basis,
        })
    }

    #[inline]
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn factors(&self) -> &[PrimePower] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    /// True iff `m` has at least two distinct prime divisors.
    pub fn is_non_prime_power(&self) -> bool {
        self.factors.len() >= 2
    }

    pub fn is_square_free(&self) -> bool {
        self.factors.iter().all(|f| f.e == 1)
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        x % self.m
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.m
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.m - b % self.m) % self.m
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.m)
    }

    /// `x mod q_i` for every factor.
    pub fn residues(&self, x: u64) -> SmallVec<[u64; 4]> {
        self.factors.iter().map(|f| x % f.q).collect()
    }

    /// Unique `r` in `[0, m)` with `r = residues[i] (mod q_i)` for every `i`.
    pub fn crt_lift(&self, residues: &[u64]) -> Result<u64> {
        if residues.len() != self.factors.len() {
            return Err(Error::ResidueCountMismatch {
                expected: self.factors.len(),
                got: residues.len(),
            });
        }
        let mut r = 0;
        for ((&x, f), &e) in residues.iter().zip(&self.factors).zip(&self.crt_basis) {
            if x >= f.q {
                return Err(Error::ResidueOutOfRange { value: x, m: f.q });
            }
            r = self.add(r, self.mul(x, e));
        }
        Ok(r)
    }

    /// Bitmask of the factor indices `i` with `x = 0 (mod q_i)`.
    pub fn vanishing_mask(&self, x: u64) -> u32 {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, f)| x.is_multiple_of(f.q))
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    /// Mask with every factor bit set.
    pub fn full_mask(&self) -> u32 {
        (1u32 << self.factors.len()) - 1
    }

    /// The residue that is `0 (mod q_i)` for `i` in `mask` and `1` elsewhere.
    pub fn class_value(&self, mask: u32) -> u64 {
        self.factors
            .iter()
            .zip(&self.crt_basis)
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) == 0)
            .fold(0, |acc, (_, (_, &e))| self.add(acc, e))
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} =", self.m)?;
        for (i, pp) in self.factors.iter().enumerate() {
            let sep = if i == 0 { " " } else { " * " };
            if pp.e == 1 {
                write!(f, "{sep}{}", pp.p)?;
            } else {
                write!(f, "{sep}{}^{}", pp.p, pp.e)?;
            }
        }
        Ok(())
    }
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return if m == 1 { Some(0) } else { None };
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Dense row-major matrix with entries in `[0, m)`.
///
/// Zero-width matrices only arise as rank factors of a zero matrix; the
/// public constructors that take user data reject empty dimensions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ResidueMatrix {
    rows: usize,
    cols: usize,
    m: u64,
    data: Vec<u64>,
}

impl fmt::Debug for ResidueMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "ResidueMatrix {}x{} mod {}",
            self.rows, self.cols, self.m
        )?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl ResidueMatrix {
    pub fn zeros(rows: usize, cols: usize, m: u64) -> Self {
        ResidueMatrix {
            rows,
            cols,
            m,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize, m: u64) -> Self {
        let mut out = Self::zeros(n, n, m);
        for i in 0..n {
            out.data[i * n + i] = 1 % m;
        }
        out
    }

    /// All-ones matrix `J`.
    pub fn ones(rows: usize, cols: usize, m: u64) -> Self {
        ResidueMatrix {
            rows,
            cols,
            m,
            data: vec![1 % m; rows * cols],
        }
    }

    /// Elementary matrix with a single 1 at `(r, c)`.
    pub fn elementary(rows: usize, cols: usize, m: u64, r: usize, c: usize) -> Self {
        let mut out = Self::zeros(rows, cols, m);
        out.set(r, c, 1);
        out
    }

    pub fn from_fn(rows: usize, cols: usize, m: u64, f: impl Fn(usize, usize) -> u64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j) % m);
            }
        }
        ResidueMatrix {
            rows,
            cols,
            m,
            data,
        }
    }

    /// Row-major entries, each checked to lie in `[0, m)`.
    pub fn from_vec(rows: usize, cols: usize, m: u64, data: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(Error::ResidueCountMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(&value) = data.iter().find(|&&x| x >= m) {
            return Err(Error::ResidueOutOfRange { value, m });
        }
        Ok(ResidueMatrix {
            rows,
            cols,
            m,
            data,
        })
    }

    /// Build from integer rows, reducing every entry (negatives included).
    pub fn from_rows<R: AsRef<[i64]>>(m: u64, rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.is_empty() || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: "from_rows",
                    left: (0, cols),
                    right: (i, r.len()),
                });
            }
            data.extend(r.iter().map(|&x| x.rem_euclid(m as i64) as u64));
        }
        Ok(ResidueMatrix {
            rows: rows.len(),
            cols,
            m,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.m
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.m;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn check_same_modulus(&self, other: &Self) -> Result<()> {
        if self.m != other.m {
            return Err(Error::ModulusMismatch {
                left: self.m,
                right: other.m,
            });
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        self.check_same_modulus(other)?;
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        let m = self.m;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a + b) % m)
            .collect();
        Ok(ResidueMatrix { data, ..*self })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        let m = self.m;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a + m - b) % m)
            .collect();
        Ok(ResidueMatrix { data, ..*self })
    }

    pub fn scale(&self, c: u64) -> Self {
        let c = c % self.m;
        let m = self.m;
        ResidueMatrix {
            data: self.data.iter().map(|&a| mul_mod(a, c, m)).collect(),
            ..*self
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.m, |i, j| self.get(j, i))
    }

    /// Matrix product, parallel over output rows for large operands.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.mul_with(rhs, Exec::default())
    }

    pub fn mul_with(&self, rhs: &Self, exec: Exec) -> Result<Self> {
        self.check_same_modulus(rhs)?;
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                op: "multiply",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (n, inner, k) = (self.rows, self.cols, rhs.cols);
        let m = self.m;
        // With m < 2^16 every product is below 2^32, so a u64 row
        // accumulator cannot overflow before the final reduction.
        let lazy = m <= 1 << 16;
        let exec = exec.for_work(n * inner * k);
        let rows: Vec<Vec<u64>> = exec.map(n, |i| {
            let mut acc = vec![0u64; k];
            for (t, &a) in self.row(i).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let b_row = rhs.row(t);
                if lazy {
                    for (x, &b) in acc.iter_mut().zip(b_row) {
                        *x += a * b;
                    }
                } else {
                    for (x, &b) in acc.iter_mut().zip(b_row) {
                        *x = (*x + a * b % m) % m;
                    }
                }
            }
            if lazy {
                acc.iter_mut().for_each(|x| *x %= m);
            }
            debug_assert!(inner < 1 << 32);
            acc
        });
        Ok(ResidueMatrix {
            rows: n,
            cols: k,
            m,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Kronecker product `self (x) rhs`.
    pub fn kron(&self, rhs: &Self) -> Result<Self> {
        self.check_same_modulus(rhs)?;
        let (r1, c1) = self.shape();
        let (r2, c2) = rhs.shape();
        let m = self.m;
        Ok(Self::from_fn(r1 * r2, c1 * c2, m, |i, j| {
            mul_mod(self.get(i / r2, j / c2), rhs.get(i % r2, j % c2), m)
        }))
    }

    /// Entries reduced into `Z_q` for a divisor `q` of `m`.
    pub fn reduce_to(&self, q: u64) -> Self {
        debug_assert!(self.m.is_multiple_of(q) || q < self.m);
        ResidueMatrix {
            rows: self.rows,
            cols: self.cols,
            m: q,
            data: self.data.iter().map(|&x| x % q).collect(),
        }
    }

    /// Reinterpret residues of a divisor ring inside `Z_m` (entries must be below `m`).
    pub fn with_modulus(&self, m: u64) -> Result<Self> {
        Self::from_vec(self.rows, self.cols, m, self.data.clone())
    }

    /// Append `extra` zero columns on the right.
    pub fn pad_columns(&self, extra: usize) -> Self {
        let cols = self.cols + extra;
        Self::from_fn(self.rows, cols, self.m, |i, j| {
            if j < self.cols {
                self.get(i, j)
            } else {
                0
            }
        })
    }

    /// Render in the matrix text format: `rows cols m`, then one line per row.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.rows, self.cols, self.m);
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(u64::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let nums = parse_numbers(hline, header)?;
        let [rows, cols, m] = nums[..] else {
            return Err(Error::Parse {
                line: hline,
                msg: "header must be `rows cols m`".into(),
            });
        };
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if m < 2 {
            return Err(Error::InvalidModulus(m));
        }
        if m > MAX_MODULUS {
            return Err(Error::ModulusTooLarge(m));
        }
        let (rows, cols) = (rows as usize, cols as usize);
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (lno, line) = lines.next().ok_or(Error::Parse {
                line: hline + r + 1,
                msg: format!("expected {rows} rows, found {r}"),
            })?;
            let vals = parse_numbers(lno, line)?;
            if vals.len() != cols {
                return Err(Error::Parse {
                    line: lno,
                    msg: format!("expected {cols} entries, found {}", vals.len()),
                });
            }
            if let Some(&v) = vals.iter().find(|&&v| v >= m) {
                return Err(Error::Parse {
                    line: lno,
                    msg: format!("residue {v} not below {m}"),
                });
            }
            data.extend(vals);
        }
        if let Some((lno, _)) = lines.next() {
            return Err(Error::Parse {
                line: lno,
                msg: "trailing data after last row".into(),
            });
        }
        Self::from_vec(rows, cols, m, data)
    }
}

fn parse_numbers(line: usize, s: &str) -> Result<Vec<u64>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<u64>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad number {tok:?}: {e}"),
            })
        })
        .collect()
}

impl FromStr for ResidueMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_text(s)
    }
}

/// `M = B C^T` over `GF(p)` with inner dimension equal to the rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankFactorization {
    /// `n x t`
    pub b: ResidueMatrix,
    /// `k x t`
    pub c: ResidueMatrix,
    pub rank: usize,
}

/// Rank factorization of `mat` reduced into `GF(p)`.
///
/// Gauss-Jordan elimination scanning columns left to right and taking the
/// first row with a nonzero entry as pivot. `B` holds the pivot columns of
/// the input; `C^T` holds the nonzero rows of the reduced row echelon form.
pub fn rank_factorize_modp(mat: &ResidueMatrix, p: u64) -> Result<RankFactorization> {
    let field = Modulus::new(p)?;
    match field.factors() {
        [f] if f.e == 1 => {}
        [f] => return Err(Error::UnsupportedRing { p: f.p, e: f.e }),
        _ => return Err(Error::UnsupportedRing { p, e: 1 }),
    }
    let a = mat.reduce_to(p);
    let (n, k) = a.shape();
    let mut rref = a.data.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..k {
        if row == n {
            break;
        }
        let Some(piv) = (row..n).find(|&r| rref[r * k + col] != 0) else {
            continue;
        };
        if piv != row {
            for j in 0..k {
                rref.swap(piv * k + j, row * k + j);
            }
        }
        let inv = inv_mod(rref[row * k + col], p).expect("nonzero in a field");
        for j in 0..k {
            rref[row * k + j] = mul_mod(rref[row * k + j], inv, p);
        }
        for r in 0..n {
            let f = rref[r * k + col];
            if r == row || f == 0 {
                continue;
            }
            for j in 0..k {
                let sub = mul_mod(f, rref[row * k + j], p);
                rref[r * k + j] = (rref[r * k + j] + p - sub) % p;
            }
        }
        pivots.push(col);
        row += 1;
    }
    let t = pivots.len();
    let b = ResidueMatrix::from_fn(n, t, p, |i, j| a.get(i, pivots[j]));
    let c = ResidueMatrix::from_fn(k, t, p, |i, j| rref[j * k + i]);
    Ok(RankFactorization { b, c, rank: t })
}

/// Rank over `GF(p)` of a row-major `rows x cols` buffer, destroying it.
/// Entries must already be reduced mod `p`; `p` must be prime.
pub fn rank_in_place(data: &mut [u64], rows: usize, cols: usize, p: u64) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| data[r * cols + col] != 0) else {
            continue;
        };
        if piv != rank {
            for j in col..cols {
                data.swap(piv * cols + j, rank * cols + j);
            }
        }
        let inv = inv_mod(data[rank * cols + col], p).expect("nonzero in a field");
        for r in rank + 1..rows {
            let f = mul_mod(data[r * cols + col], inv, p);
            if f == 0 {
                continue;
            }
            for j in col..cols {
                let sub = mul_mod(f, data[rank * cols + j], p);
                data[r * cols + j] = (data[r * cols + j] + p - sub) % p;
            }
        }
        rank += 1;
    }
    rank
}
