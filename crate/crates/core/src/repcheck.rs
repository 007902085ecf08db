//! Classification of candidate polynomials and matrices against targets.
//!
//! Coefficients are compared one monomial at a time over the union of the
//! two supports (an absent monomial has coefficient 0). For a target
//! coefficient `a` and a candidate coefficient `b` modulo `m = q_1 ... q_r`:
//!
//! * alternative: `a = b (mod q_i)` for some `i`;
//! * 0-a-strong: alternative, and `b = 0 (mod q_i)` wherever `a != b (mod q_i)`;
//! * 1-a-strong: alternative, and `a = 0 (mod m)` wherever any disagreement occurs;
//! * exact: `a = b (mod m)`.
//!
//! Matrix targets use one variable per entry: `x_{ij}` has index `i*n + j`
//! and, for products, `y_{ij}` has index `n^2 + i*n + j`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::zmod::{Modulus, ResidueMatrix};

/// Sorted multiset of variable indices. The empty monomial is the constant 1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(SmallVec<[u32; 2]>);

impl Monomial {
    pub fn new(vars: impl IntoIterator<Item = u32>) -> Self {
        let mut v: SmallVec<[u32; 2]> = vars.into_iter().collect();
        v.sort_unstable();
        Monomial(v)
    }

    pub fn var(i: u32) -> Self {
        Monomial(SmallVec::from_slice(&[i]))
    }

    pub fn pair(a: u32, b: u32) -> Self {
        Monomial(if a <= b {
            SmallVec::from_slice(&[a, b])
        } else {
            SmallVec::from_slice(&[b, a])
        })
    }

    pub fn vars(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::new(self.0.iter().chain(&other.0).copied())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "v{v}")?;
        }
        Ok(())
    }
}

/// Polynomial over `Z_m` stored as monomial -> nonzero coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePoly {
    arity: usize,
    m: u64,
    terms: BTreeMap<Monomial, u64>,
}

impl SparsePoly {
    pub fn zero(arity: usize, m: u64) -> Self {
        SparsePoly {
            arity,
            m,
            terms: BTreeMap::new(),
        }
    }

    /// Sum of `coeff * monomial` terms; coefficients may be negative and repeat.
    pub fn from_terms<I>(arity: usize, m: u64, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, i64)>,
    {
        let mut p = Self::zero(arity, m);
        for (mono, c) in terms {
            if let Some(&v) = mono.vars().iter().find(|&&v| v as usize >= arity) {
                return Err(Error::IndexOutOfRange {
                    index: v as usize,
                    limit: arity,
                });
            }
            p.add_term(mono, c.rem_euclid(m as i64) as u64);
        }
        Ok(p)
    }

    /// `sum_i coeffs[i] * v_i`
    pub fn linear(m: u64, coeffs: &[u64]) -> Self {
        let mut p = Self::zero(coeffs.len(), m);
        for (i, &c) in coeffs.iter().enumerate() {
            p.add_term(Monomial::var(i as u32), c);
        }
        p
    }

    pub fn add_term(&mut self, mono: Monomial, coeff: u64) {
        debug_assert!(mono.vars().iter().all(|&v| (v as usize) < self.arity));
        let m = self.m;
        let c = coeff % m;
        if c == 0 {
            return;
        }
        match self.terms.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = (*o.get() + c) % m;
                if sum == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn modulus(&self) -> u64 {
        self.m
    }

    pub fn coeff(&self, mono: &Monomial) -> u64 {
        self.terms.get(mono).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, u64)> {
        self.terms.iter().map(|(k, &v)| (k, v))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Every monomial has degree exactly one.
    pub fn is_linear(&self) -> bool {
        self.terms.keys().all(|k| k.degree() == 1)
    }

    /// Every monomial is `x * y` with `x` below `split` and `y` at or above it.
    pub fn is_bilinear(&self, split: u32) -> bool {
        self.terms
            .keys()
            .all(|k| matches!(k.vars(), &[x, y] if x < split && y >= split))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in other.terms() {
            out.add_term(k.clone(), v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in other.terms() {
            out.add_term(k.clone(), self.m - v);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let m = self.m as u128;
        let mut out = Self::zero(self.arity.max(other.arity), self.m);
        for (ka, va) in self.terms() {
            for (kb, vb) in other.terms() {
                out.add_term(ka.mul(kb), ((va as u128 * vb as u128) % m) as u64);
            }
        }
        out
    }

    /// Same terms viewed with a larger variable count.
    pub fn widen(mut self, arity: usize) -> Self {
        self.arity = self.arity.max(arity);
        self
    }

    /// Shift every variable index by `offset`.
    pub fn shift(&self, offset: u32, arity: usize) -> Self {
        let mut out = Self::zero(arity, self.m);
        for (k, v) in self.terms() {
            out.add_term(Monomial::new(k.vars().iter().map(|x| x + offset)), v);
        }
        out
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, v)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if v == 1 && k.degree() > 0 {
                write!(f, "{k}")?;
            } else if k.degree() == 0 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}*{k}")?;
            }
        }
        Ok(())
    }
}

/// Representation class, from weakest to strongest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RepKind {
    Alternative,
    ZeroAStrong,
    OneAStrong,
    Exact,
}

impl RepKind {
    pub const ALL: [RepKind; 4] = [
        RepKind::Alternative,
        RepKind::ZeroAStrong,
        RepKind::OneAStrong,
        RepKind::Exact,
    ];

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepKind::Alternative => "alternative",
            RepKind::ZeroAStrong => "0-a-strong",
            RepKind::OneAStrong => "1-a-strong",
            RepKind::Exact => "exact",
        })
    }
}

/// A monomial at which a flag fails, with target and candidate coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub monomial: Monomial,
    pub target: u64,
    pub candidate: u64,
    /// Matrix entry the monomial belongs to, for matrix verification.
    pub entry: Option<(usize, usize)>,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((i, j)) = self.entry {
            write!(f, "entry ({i}, {j}): ")?;
        }
        write!(
            f,
            "monomial {} has target coefficient {} and candidate coefficient {}",
            self.monomial, self.target, self.candidate
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepClassification {
    pub is_exact: bool,
    pub is_alternative: bool,
    pub is_zero_a_strong: bool,
    pub is_one_a_strong: bool,
    witnesses: [Option<Witness>; 4],
}

impl RepClassification {
    fn all_true() -> Self {
        RepClassification {
            is_exact: true,
            is_alternative: true,
            is_zero_a_strong: true,
            is_one_a_strong: true,
            witnesses: Default::default(),
        }
    }

    pub fn holds(&self, kind: RepKind) -> bool {
        match kind {
            RepKind::Alternative => self.is_alternative,
            RepKind::ZeroAStrong => self.is_zero_a_strong,
            RepKind::OneAStrong => self.is_one_a_strong,
            RepKind::Exact => self.is_exact,
        }
    }

    /// First offending monomial (in monomial order) for a failed flag.
    pub fn witness(&self, kind: RepKind) -> Option<&Witness> {
        self.witnesses[kind.slot()].as_ref()
    }

    fn fail(&mut self, kind: RepKind, w: impl FnOnce() -> Witness) {
        let slot = &mut self.witnesses[kind.slot()];
        if slot.is_none() {
            *slot = Some(w());
        }
        match kind {
            RepKind::Alternative => self.is_alternative = false,
            RepKind::ZeroAStrong => self.is_zero_a_strong = false,
            RepKind::OneAStrong => self.is_one_a_strong = false,
            RepKind::Exact => self.is_exact = false,
        }
    }

    /// Strongest class that holds, if any.
    pub fn strongest(&self) -> Option<RepKind> {
        RepKind::ALL.iter().rev().copied().find(|&k| self.holds(k))
    }
}

impl fmt::Display for RepClassification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yn = |b: bool| if b { "yes" } else { "no" };
        write!(
            f,
            "exact: {}, 1-a-strong: {}, 0-a-strong: {}, alternative: {}",
            yn(self.is_exact),
            yn(self.is_one_a_strong),
            yn(self.is_zero_a_strong),
            yn(self.is_alternative)
        )
    }
}

/// Verdict for one `(target, candidate)` coefficient pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoeffVerdict {
    pub exact: bool,
    pub alternative: bool,
    pub zero_a_strong: bool,
    pub one_a_strong: bool,
}

impl CoeffVerdict {
    pub fn of(modulus: &Modulus, a: u64, b: u64) -> Self {
        let mut any_agree = false;
        let mut all_agree = true;
        let mut zero_ok = true;
        for f in modulus.factors() {
            let (ai, bi) = (a % f.q, b % f.q);
            if ai == bi {
                any_agree = true;
            } else {
                all_agree = false;
                zero_ok &= bi == 0;
            }
        }
        let a_zero = a.is_multiple_of(modulus.m());
        CoeffVerdict {
            exact: all_agree,
            alternative: any_agree,
            zero_a_strong: any_agree && zero_ok,
            one_a_strong: any_agree && (all_agree || a_zero),
        }
    }

    fn holds(self, kind: RepKind) -> bool {
        match kind {
            RepKind::Alternative => self.alternative,
            RepKind::ZeroAStrong => self.zero_a_strong,
            RepKind::OneAStrong => self.one_a_strong,
            RepKind::Exact => self.exact,
        }
    }
}

/// Streaming classifier: feed coefficient pairs in monomial order.
#[derive(Clone, Debug)]
pub struct Classifier<'a> {
    modulus: &'a Modulus,
    // verdicts for all (a, b) when m is small
    table: Option<Vec<CoeffVerdict>>,
    state: RepClassification,
}

impl<'a> Classifier<'a> {
    pub fn new(modulus: &'a Modulus) -> Self {
        let m = modulus.m();
        let table = (m <= 64).then(|| {
            (0..m * m)
                .map(|ab| CoeffVerdict::of(modulus, ab / m, ab % m))
                .collect()
        });
        Classifier {
            modulus,
            table,
            state: RepClassification::all_true(),
        }
    }

    #[inline]
    pub fn verdict(&self, a: u64, b: u64) -> CoeffVerdict {
        match &self.table {
            Some(t) => {
                let m = self.modulus.m();
                t[((a % m) * m + b % m) as usize]
            }
            None => CoeffVerdict::of(self.modulus, a, b),
        }
    }

    /// Record the pair for `monomial`; the closure is only run on failure.
    #[inline]
    pub fn observe(&mut self, a: u64, b: u64, monomial: impl FnOnce() -> Monomial) {
        let v = self.verdict(a, b);
        if v.exact {
            return;
        }
        let mut mono = Some(monomial);
        let mut built: Option<Monomial> = None;
        for kind in RepKind::ALL {
            if !v.holds(kind) {
                let mono_ = built
                    .get_or_insert_with(|| (mono.take().unwrap())())
                    .clone();
                self.state.fail(kind, || Witness {
                    monomial: mono_,
                    target: a,
                    candidate: b,
                    entry: None,
                });
            }
        }
    }

    pub fn finish(self) -> RepClassification {
        self.state
    }
}

fn check_poly_modulus(p: &SparsePoly, modulus: &Modulus) -> Result<()> {
    if p.m != modulus.m() {
        return Err(Error::ModulusMismatch {
            left: p.m,
            right: modulus.m(),
        });
    }
    Ok(())
}

/// Classify candidate `g` against target `f`.
pub fn classify_poly(
    target: &SparsePoly,
    candidate: &SparsePoly,
    modulus: &Modulus,
) -> Result<RepClassification> {
    if target.arity != candidate.arity {
        return Err(Error::ArityMismatch {
            left: target.arity,
            right: candidate.arity,
        });
    }
    check_poly_modulus(target, modulus)?;
    check_poly_modulus(candidate, modulus)?;
    let mut cls = Classifier::new(modulus);
    let mut ft = target.terms.iter().peekable();
    let mut gt = candidate.terms.iter().peekable();
    // merge walk over the union of supports
    loop {
        let (mono, a, b) = match (ft.peek(), gt.peek()) {
            (None, None) => break,
            (Some(&(k, &a)), None) => {
                ft.next();
                (k, a, 0)
            }
            (None, Some(&(k, &b))) => {
                gt.next();
                (k, 0, b)
            }
            (Some(&(kf, &a)), Some(&(kg, &b))) => match kf.cmp(kg) {
                std::cmp::Ordering::Less => {
                    ft.next();
                    (kf, a, 0)
                }
                std::cmp::Ordering::Greater => {
                    gt.next();
                    (kg, 0, b)
                }
                std::cmp::Ordering::Equal => {
                    ft.next();
                    gt.next();
                    (kf, a, b)
                }
            },
        };
        cls.observe(a, b, || mono.clone());
    }
    Ok(cls.finish())
}

/// Per-entry classifications of an `n x n` candidate and their conjunction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixRepReport {
    pub n: usize,
    pub entries: Vec<RepClassification>,
    /// Conjunction over entries; witnesses come from the first failing
    /// entry in row-major order and carry its position.
    pub aggregate: RepClassification,
}

impl MatrixRepReport {
    pub fn from_entries(n: usize, entries: Vec<RepClassification>) -> Self {
        let mut aggregate = RepClassification::all_true();
        for (idx, e) in entries.iter().enumerate() {
            for kind in RepKind::ALL {
                if !e.holds(kind) {
                    let w = e.witness(kind).expect("failed flag has a witness");
                    aggregate.fail(kind, || Witness {
                        entry: Some((idx / n, idx % n)),
                        ..w.clone()
                    });
                }
            }
        }
        MatrixRepReport {
            n,
            entries,
            aggregate,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> &RepClassification {
        &self.entries[i * self.n + j]
    }
}

#[inline]
pub fn x_var(n: usize, i: usize, j: usize) -> u32 {
    (i * n + j) as u32
}

#[inline]
pub fn y_var(n: usize, i: usize, j: usize) -> u32 {
    (n * n + i * n + j) as u32
}

fn check_entries(
    candidate: &[SparsePoly],
    n: usize,
    arity: usize,
    modulus: &Modulus,
) -> Result<()> {
    if candidate.len() != n * n {
        return Err(Error::ResidueCountMismatch {
            expected: n * n,
            got: candidate.len(),
        });
    }
    for p in candidate {
        check_poly_modulus(p, modulus)?;
        if p.arity != arity {
            return Err(Error::ArityMismatch {
                left: p.arity,
                right: arity,
            });
        }
    }
    Ok(())
}

/// Classify entry `(i, j)` of a linear candidate against the single variable `x_{ij}`.
pub fn verify_matrix_rep(
    candidate: &[SparsePoly],
    n: usize,
    modulus: &Modulus,
) -> Result<MatrixRepReport> {
    check_entries(candidate, n, n * n, modulus)?;
    let mut entries = Vec::with_capacity(n * n);
    for (idx, p) in candidate.iter().enumerate() {
        if !p.is_linear() {
            return Err(Error::NonLinear {
                row: idx / n,
                col: idx % n,
            });
        }
        let mut target = SparsePoly::zero(n * n, modulus.m());
        target.add_term(Monomial::var(idx as u32), 1);
        entries.push(classify_poly(&target, p, modulus)?);
    }
    Ok(MatrixRepReport::from_entries(n, entries))
}

/// The entry polynomial `sum_k x_{ik} y_{kj}` of the product `XY`.
pub fn product_entry_target(n: usize, m: u64, i: usize, j: usize) -> SparsePoly {
    let mut p = SparsePoly::zero(2 * n * n, m);
    for k in 0..n {
        p.add_term(Monomial::pair(x_var(n, i, k), y_var(n, k, j)), 1);
    }
    p
}

/// Classify entry `(i, j)` of a bilinear candidate against `sum_k x_{ik} y_{kj}`.
pub fn verify_product_rep(
    candidate: &[SparsePoly],
    n: usize,
    modulus: &Modulus,
) -> Result<MatrixRepReport> {
    check_entries(candidate, n, 2 * n * n, modulus)?;
    let mut entries = Vec::with_capacity(n * n);
    for (idx, p) in candidate.iter().enumerate() {
        let (i, j) = (idx / n, idx % n);
        if !p.is_bilinear((n * n) as u32) {
            return Err(Error::NonBilinear { row: i, col: j });
        }
        let target = product_entry_target(n, modulus.m(), i, j);
        entries.push(classify_poly(&target, p, modulus)?);
    }
    Ok(MatrixRepReport::from_entries(n, entries))
}

fn check_index(index: usize, limit: usize) -> Result<()> {
    if index >= limit {
        return Err(Error::IndexOutOfRange { index, limit });
    }
    Ok(())
}

/// Coefficients of `x_{ab} y_{cd}` in every output entry of a bilinear
/// matrix procedure, read off as `evaluator(E_ab, E_cd)`.
pub fn coefficient_probe<F>(
    evaluator: F,
    n: usize,
    m: u64,
    (a, b, c, d): (usize, usize, usize, usize),
) -> Result<ResidueMatrix>
where
    F: Fn(&ResidueMatrix, &ResidueMatrix) -> ResidueMatrix,
{
    for idx in [a, b, c, d] {
        check_index(idx, n)?;
    }
    let x = ResidueMatrix::elementary(n, n, m, a, b);
    let y = ResidueMatrix::elementary(n, n, m, c, d);
    Ok(evaluator(&x, &y))
}

/// Coefficients of `x_{kl}` in every output entry of a linear matrix map.
pub fn linear_probe<F>(evaluator: F, n: usize, m: u64, k: usize, l: usize) -> Result<ResidueMatrix>
where
    F: Fn(&ResidueMatrix) -> ResidueMatrix,
{
    check_index(k, n)?;
    check_index(l, n)?;
    Ok(evaluator(&ResidueMatrix::elementary(n, n, m, k, l)))
}

/// Symbolic entries of a linear matrix map, recovered from all `n^2` probes.
pub fn probe_sweep_linear<F>(evaluator: F, n: usize, m: u64, exec: Exec) -> Vec<SparsePoly>
where
    F: Fn(&ResidueMatrix) -> ResidueMatrix + Sync + Send,
{
    let probes = exec.map(n * n, |kl| {
        linear_probe(&evaluator, n, m, kl / n, kl % n).expect("indices in range")
    });
    let mut out = vec![SparsePoly::zero(n * n, m); n * n];
    for (kl, coeffs) in probes.iter().enumerate() {
        for (entry, &c) in out.iter_mut().zip(coeffs.data()) {
            entry.add_term(Monomial::var(kl as u32), c);
        }
    }
    out
}

/// Symbolic entries of a bilinear matrix procedure from all `n^4` probes.
pub fn probe_sweep_bilinear<F>(evaluator: F, n: usize, m: u64, exec: Exec) -> Vec<SparsePoly>
where
    F: Fn(&ResidueMatrix, &ResidueMatrix) -> ResidueMatrix + Sync + Send,
{
    let nn = n * n;
    let probes = exec.map(nn * nn, |p| {
        let (ab, cd) = (p / nn, p % nn);
        coefficient_probe(&evaluator, n, m, (ab / n, ab % n, cd / n, cd % n))
            .expect("indices in range")
    });
    let mut out = vec![SparsePoly::zero(2 * nn, m); nn];
    for (p, coeffs) in probes.iter().enumerate() {
        let (ab, cd) = (p / nn, p % nn);
        let mono = Monomial::pair(ab as u32, (nn + cd) as u32);
        for (entry, &c) in out.iter_mut().zip(coeffs.data()) {
            if c != 0 {
                entry.add_term(mono.clone(), c);
            }
        }
    }
    out
}
