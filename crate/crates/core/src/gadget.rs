//! Dot-product gadgets: constant matrices `B, C` (both `n x t`) such that
//! `sum_j (B_j . x)(C_j . y)` is a 1-a-strong representation of
//! `sum_i x_i y_i`.
//!
//! A gadget is determined by its target `M = B C^T`: unit diagonal, and
//! every off-diagonal entry vanishing modulo at least one prime-power
//! factor of `m`. Entries are kept *classed*: residue 0 or 1 modulo every
//! factor, so the off-diagonal value set mod 6 is `{0, 3, 4}`. Classed
//! values are closed under multiplication, which is why Kronecker powers
//! stay valid.
//!
//! The number of counted multiplications of the circuit is `t`; the
//! minimal `t` for a given target is the largest per-prime rank of `M`.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::repcheck::{self, Monomial, SparsePoly};
use crate::zmod::{rank_factorize_modp, Modulus, ResidueMatrix};

pub const GADGET_FORMAT_VERSION: u32 = 1;

/// Largest `2 n t` accepted by [`exhaustive_01`].
pub const EXHAUSTIVE_LIMIT_BITS: usize = 26;

/// Class of a target entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EntryClass {
    Diagonal,
    /// Off-diagonal entry that is `0 (mod q_i)` for `i` in the mask and
    /// `1 (mod q_j)` elsewhere. The full mask is the zero class.
    Vanish(u32),
}

/// An `n x n` matrix over `Z_m` that a dot-product gadget may realize.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetTarget {
    modulus: Modulus,
    matrix: ResidueMatrix,
    classes: Vec<EntryClass>,
}

impl GadgetTarget {
    /// Validate `matrix` and derive its class map.
    pub fn new(modulus: &Modulus, matrix: ResidueMatrix) -> Result<Self> {
        if matrix.modulus() != modulus.m() {
            return Err(Error::ModulusMismatch {
                left: matrix.modulus(),
                right: modulus.m(),
            });
        }
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::DimensionMismatch {
                op: "gadget target",
                left: matrix.shape(),
                right: (matrix.cols(), matrix.cols()),
            });
        }
        let n = matrix.rows();
        let mut classes = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let value = matrix.get(i, j);
                let fail = |reason| Error::InvalidTarget {
                    row: i,
                    col: j,
                    value,
                    reason,
                };
                if i == j {
                    if value != 1 {
                        return Err(fail("on the diagonal must be 1"));
                    }
                    classes.push(EntryClass::Diagonal);
                    continue;
                }
                let mut mask = 0;
                for (k, f) in modulus.factors().iter().enumerate() {
                    match value % f.q {
                        0 => mask |= 1 << k,
                        1 => {}
                        _ => return Err(fail("is not 0 or 1 modulo every prime-power factor")),
                    }
                }
                if mask == 0 {
                    return Err(fail("does not vanish modulo any prime-power factor"));
                }
                classes.push(EntryClass::Vanish(mask));
            }
        }
        Ok(GadgetTarget {
            modulus: modulus.clone(),
            matrix,
            classes,
        })
    }

    /// Target whose off-diagonal `(i, j)` entry is the class value of `mask(i, j)`.
    pub fn from_classes(
        modulus: &Modulus,
        n: usize,
        mask: impl Fn(usize, usize) -> u32,
    ) -> Result<Self> {
        let m = modulus.m();
        let matrix = ResidueMatrix::from_fn(n, n, m, |i, j| {
            if i == j {
                1
            } else {
                modulus.class_value(mask(i, j))
            }
        });
        Self::new(modulus, matrix)
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn matrix(&self) -> &ResidueMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ResidueMatrix {
        self.matrix
    }

    pub fn class(&self, i: usize, j: usize) -> EntryClass {
        self.classes[i * self.n() + j]
    }

    /// Number of off-diagonal entries in the zero class.
    pub fn zero_class_count(&self) -> usize {
        let full = self.modulus.full_mask();
        self.classes
            .iter()
            .filter(|&&c| c == EntryClass::Vanish(full))
            .count()
    }

    pub fn off_diagonal_values(&self) -> BTreeSet<u64> {
        let n = self.n();
        (0..n * n)
            .filter(|idx| idx / n != idx % n)
            .map(|idx| self.matrix.data()[idx])
            .collect()
    }

    /// Rank of `M mod p_i` for every factor; needs a square-free modulus.
    pub fn per_prime_ranks(&self) -> Result<Vec<usize>> {
        require_square_free(&self.modulus)?;
        self.modulus
            .factors()
            .iter()
            .map(|f| Ok(rank_factorize_modp(&self.matrix, f.p)?.rank))
            .collect()
    }

    /// Smallest width any `(B, C)` realizing this target can have.
    pub fn min_width(&self) -> Result<usize> {
        Ok(self.per_prime_ranks()?.into_iter().max().unwrap_or(0))
    }
}

/// `(B, C, t)` with `B C^T` a valid [`GadgetTarget`], plus a replayable recipe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DotGadget {
    modulus: Modulus,
    b: ResidueMatrix,
    c: ResidueMatrix,
    recipe: String,
    target: GadgetTarget,
}

fn require_square_free(modulus: &Modulus) -> Result<()> {
    if !modulus.is_square_free() {
        return Err(Error::NotSquareFree(modulus.m()));
    }
    Ok(())
}

/// Generators only make sense for square-free non-prime-power moduli.
pub fn require_generator_modulus(modulus: &Modulus, exactly_two: bool) -> Result<()> {
    if !modulus.is_non_prime_power() {
        return Err(Error::PrimePowerModulus(modulus.m()));
    }
    require_square_free(modulus)?;
    if exactly_two && modulus.num_factors() != 2 {
        return Err(Error::FactorCount {
            m: modulus.m(),
            needed: 2,
            got: modulus.num_factors(),
        });
    }
    Ok(())
}

impl DotGadget {
    /// Check `B C^T` and wrap. `B` and `C` must both be `n x t`.
    pub fn new(
        modulus: &Modulus,
        b: ResidueMatrix,
        c: ResidueMatrix,
        recipe: impl Into<String>,
    ) -> Result<Self> {
        if b.shape() != c.shape() {
            return Err(Error::DimensionMismatch {
                op: "gadget factors",
                left: b.shape(),
                right: c.shape(),
            });
        }
        for mat in [&b, &c] {
            if mat.modulus() != modulus.m() {
                return Err(Error::ModulusMismatch {
                    left: mat.modulus(),
                    right: modulus.m(),
                });
            }
        }
        let product = b.mul(&c.transpose())?;
        let target = GadgetTarget::new(modulus, product)?;
        Ok(DotGadget {
            modulus: modulus.clone(),
            b,
            c,
            recipe: recipe.into(),
            target,
        })
    }

    pub fn n(&self) -> usize {
        self.b.rows()
    }

    pub fn t(&self) -> usize {
        self.b.cols()
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn b(&self) -> &ResidueMatrix {
        &self.b
    }

    pub fn c(&self) -> &ResidueMatrix {
        &self.c
    }

    pub fn recipe(&self) -> &str {
        &self.recipe
    }

    pub fn target(&self) -> &GadgetTarget {
        &self.target
    }

    /// `M = B C^T`
    pub fn target_matrix(&self) -> &ResidueMatrix {
        self.target.matrix()
    }

    /// Bilinear polynomial in `x_0..x_{n-1}, y_0..y_{n-1}` computed by the circuit.
    pub fn dot_poly(&self) -> SparsePoly {
        dot_poly_from_factors(&self.b, &self.c)
    }

    /// `(sum x)(sum y) - dot_poly`: a 0-a-strong representation of `S_n^2`.
    pub fn to_sn2(&self) -> SparsePoly {
        let n = self.n();
        let m = self.modulus.m();
        let mat = self.target_matrix();
        let mut p = SparsePoly::zero(2 * n, m);
        for a in 0..n {
            for b in 0..n {
                p.add_term(
                    Monomial::pair(a as u32, (n + b) as u32),
                    self.modulus.sub(1, mat.get(a, b)),
                );
            }
        }
        p
    }

    pub fn to_file(&self) -> GadgetFile {
        GadgetFile {
            m: self.modulus.m(),
            n: self.n(),
            t: self.t(),
            b: self.b.data().to_vec(),
            c: self.c.data().to_vec(),
            recipe: self.recipe.clone(),
            format_version: GADGET_FORMAT_VERSION,
        }
    }

    pub fn to_json(&self) -> String {
        self.to_file().to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        GadgetFile::from_json(text)?.into_gadget()
    }
}

impl fmt::Display for DotGadget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gadget n={} t={} mod {} [{}]",
            self.n(),
            self.t(),
            self.modulus.m(),
            self.recipe
        )
    }
}

/// Expand `sum_j (B_j . x)(C_j . y)` for arbitrary factors.
pub fn dot_poly_from_factors(b: &ResidueMatrix, c: &ResidueMatrix) -> SparsePoly {
    let (n, t) = b.shape();
    let m = b.modulus();
    let mut coeffs = vec![0u64; n * n];
    for j in 0..t {
        for xa in 0..n {
            let bx = b.get(xa, j);
            if bx == 0 {
                continue;
            }
            for yb in 0..n {
                let cy = c.get(yb, j);
                if cy != 0 {
                    let slot = &mut coeffs[xa * n + yb];
                    *slot = (*slot + bx * cy % m) % m;
                }
            }
        }
    }
    let mut p = SparsePoly::zero(2 * n, m);
    for (idx, &v) in coeffs.iter().enumerate() {
        p.add_term(Monomial::pair((idx / n) as u32, (n + idx % n) as u32), v);
    }
    p
}

/// `sum_i x_i y_i`
pub fn dot_target(n: usize, m: u64) -> SparsePoly {
    let mut p = SparsePoly::zero(2 * n, m);
    for i in 0..n {
        p.add_term(Monomial::pair(i as u32, (n + i) as u32), 1);
    }
    p
}

/// `S_n^2(x, y) = sum_{i != j} x_i y_j`
pub fn sn2_target(n: usize, m: u64) -> SparsePoly {
    let mut p = SparsePoly::zero(2 * n, m);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p.add_term(Monomial::pair(i as u32, (n + j) as u32), 1);
            }
        }
    }
    p
}

/// Bilinear polynomial `sum a_{ij} x_i y_j` from its coefficient matrix.
pub fn bilinear_poly(a: &ResidueMatrix) -> SparsePoly {
    let n = a.rows();
    let mut p = SparsePoly::zero(2 * n, a.modulus());
    for i in 0..n {
        for j in 0..a.cols() {
            p.add_term(Monomial::pair(i as u32, (n + j) as u32), a.get(i, j));
        }
    }
    p
}

/// `B = C = I_n`: the exact dot product, `t = n`.
pub fn trivial(n: usize, modulus: &Modulus) -> DotGadget {
    let id = ResidueMatrix::identity(n, modulus.m());
    DotGadget::new(modulus, id.clone(), id, format!("trivial(n={n})"))
        .expect("identity is a valid target")
}

/// Minimal-width gadget for `target`.
///
/// Rank-factorizes `M mod p_i` for every prime, pads every pair to the
/// common width `t = max_i rank_i` with zero columns on the right and
/// CRT-lifts the factors entrywise into `Z_m`.
pub fn from_target(target: &GadgetTarget) -> Result<DotGadget> {
    from_target_with_recipe(target, format!("target(n={})", target.n()))
}

fn from_target_with_recipe(target: &GadgetTarget, recipe: String) -> Result<DotGadget> {
    let modulus = target.modulus();
    require_square_free(modulus)?;
    let factors: Vec<_> = modulus
        .factors()
        .iter()
        .map(|f| rank_factorize_modp(target.matrix(), f.p))
        .collect::<Result<_>>()?;
    let t = factors.iter().map(|f| f.rank).max().unwrap_or(0);
    let lift =
        |pick: fn(&crate::zmod::RankFactorization) -> &ResidueMatrix| -> Result<ResidueMatrix> {
            let padded: Vec<ResidueMatrix> = factors
                .iter()
                .map(|f| pick(f).pad_columns(t - f.rank))
                .collect();
            let n = target.n();
            let mut data = Vec::with_capacity(n * t);
            let mut residues = Vec::with_capacity(padded.len());
            for i in 0..n {
                for j in 0..t {
                    residues.clear();
                    residues.extend(padded.iter().map(|p| p.get(i, j)));
                    data.push(modulus.crt_lift(&residues)?);
                }
            }
            ResidueMatrix::from_vec(n, t, modulus.m(), data)
        };
    let b = lift(|f| &f.b)?;
    let c = lift(|f| &f.c)?;
    DotGadget::new(modulus, b, c, recipe)
}

/// Block target: off-diagonal entries inside an `s x s` diagonal block
/// vanish modulo `q_1`, entries across blocks vanish modulo `q_2`.
pub fn block_target(n: usize, s: usize, modulus: &Modulus) -> Result<GadgetTarget> {
    require_generator_modulus(modulus, true)?;
    if s == 0 || n == 0 || !n.is_multiple_of(s) {
        return Err(Error::BlockSize { n, s });
    }
    GadgetTarget::from_classes(modulus, n, |i, j| if i / s == j / s { 0b01 } else { 0b10 })
}

pub fn block_partition(n: usize, s: usize, modulus: &Modulus) -> Result<DotGadget> {
    let target = block_target(n, s, modulus)?;
    from_target_with_recipe(&target, format!("block(n={n},s={s})"))
}

/// `B = B1 (x) B2`, `C = C1 (x) C2`.
pub fn kronecker_compose(g1: &DotGadget, g2: &DotGadget) -> Result<DotGadget> {
    if g1.modulus.m() != g2.modulus.m() {
        return Err(Error::ModulusMismatch {
            left: g1.modulus.m(),
            right: g2.modulus.m(),
        });
    }
    DotGadget::new(
        &g1.modulus,
        g1.b.kron(&g2.b)?,
        g1.c.kron(&g2.c)?,
        format!("kron({},{})", g1.recipe, g2.recipe),
    )
}

/// `g (x) g (x) ... (x) g` with `levels` factors.
pub fn kronecker_power(g: &DotGadget, levels: usize) -> Result<DotGadget> {
    assert!(levels >= 1, "kronecker power needs at least one level");
    let mut out = g.clone();
    for _ in 1..levels {
        out = kronecker_compose(&out, g)?;
    }
    Ok(out)
}

/// Build a gadget from the coefficient matrix `A` of a 0-a-strong
/// representation `sum a_{ij} x_i y_j` of `S_n^2`, via `M = J - A`.
pub fn sn2_to_gadget(a: &ResidueMatrix, modulus: &Modulus) -> Result<DotGadget> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            op: "sn2_to_gadget",
            left: a.shape(),
            right: (n, n),
        });
    }
    let cls = repcheck::classify_poly(&sn2_target(n, modulus.m()), &bilinear_poly(a), modulus)?;
    if !cls.is_zero_a_strong {
        let w = cls
            .witness(repcheck::RepKind::ZeroAStrong)
            .cloned()
            .expect("failed flag has a witness");
        return Err(Error::NotZeroAStrong(w));
    }
    let target = GadgetTarget::new(modulus, ResidueMatrix::ones(n, n, modulus.m()).sub(a)?)?;
    from_target_with_recipe(&target, format!("sn2(n={n})"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExhaustiveOutcome {
    Found(DotGadget),
    /// No 0/1 pair of the requested shape is valid; `pairs` is the size of
    /// the space that was ruled out.
    Infeasible {
        pairs: u64,
    },
}

/// Search every 0/1 pair `(B, C)` of shape `n x t`.
///
/// Candidates are visited as binary numbers counting down from all ones,
/// reading `B` then `C` in row-major order with entry `(0, 0)` of `B` as
/// the most significant bit; the first valid pair is returned. Column `j`
/// of `B C^T` only depends on row `j` of `C`, so each `B` is settled by
/// checking the rows of `C` independently.
pub fn exhaustive_01(n: usize, t: usize, modulus: &Modulus) -> Result<ExhaustiveOutcome> {
    exhaustive_01_with(n, t, modulus, Exec::default())
}

pub fn exhaustive_01_with(
    n: usize,
    t: usize,
    modulus: &Modulus,
    exec: Exec,
) -> Result<ExhaustiveOutcome> {
    require_generator_modulus(modulus, false)?;
    let bits = 2 * n * t;
    if bits > EXHAUSTIVE_LIMIT_BITS {
        return Err(Error::SearchSpaceTooLarge {
            bits,
            limit: EXHAUSTIVE_LIMIT_BITS,
        });
    }
    if n == 0 || t == 0 {
        return Err(Error::EmptyMatrix);
    }
    let m = modulus.m();
    // inner products of 0/1 vectors are integers in 0..=t
    let diag_ok: Vec<bool> = (0..=t as u64).map(|v| v % m == 1).collect();
    let off_ok: Vec<bool> = (0..=t as u64)
        .map(|v| {
            let v = v % m;
            modulus.factors().iter().all(|f| v % f.q <= 1) && modulus.vanishing_mask(v) != 0
        })
        .collect();
    let width = n * t;
    let top = (1u64 << width) - 1;
    let rows_of = |code: u64| -> Vec<u64> {
        // row i of the matrix as a t-bit word, first column most significant
        (0..n)
            .map(|i| (code >> ((n - 1 - i) * t)) & ((1 << t) - 1))
            .collect()
    };
    let found = exec.find_first(1usize << width, |k| {
        let bcode = top - k as u64;
        let b_rows = rows_of(bcode);
        let mut c_rows = Vec::with_capacity(n);
        for j in 0..n {
            // largest row word for C that makes column j of B C^T valid
            let best = (0..1u64 << t).rev().find(|&cw| {
                b_rows.iter().enumerate().all(|(i, &bw)| {
                    let v = (bw & cw).count_ones() as usize;
                    if i == j {
                        diag_ok[v]
                    } else {
                        off_ok[v]
                    }
                })
            })?;
            c_rows.push(best);
        }
        Some((b_rows, c_rows))
    });
    let Some((b_rows, c_rows)) = found else {
        return Ok(ExhaustiveOutcome::Infeasible {
            pairs: 1u64 << bits,
        });
    };
    let to_matrix =
        |rows: &[u64]| ResidueMatrix::from_fn(n, t, m, |i, j| (rows[i] >> (t - 1 - j)) & 1);
    let g = DotGadget::new(
        modulus,
        to_matrix(&b_rows),
        to_matrix(&c_rows),
        format!("exhaustive01(n={n},t={t})"),
    )?;
    Ok(ExhaustiveOutcome::Found(g))
}

/// Parameters for [`local_search`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchParams {
    pub n: usize,
    pub t_goal: usize,
    pub seed: u64,
    /// Total annealing iterations, split evenly across chains.
    pub budget: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchReport {
    pub best_t: usize,
    pub iterations: u64,
    pub params: SearchParams,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(DotGadget, SearchReport),
    Exhausted(SearchReport),
}

/// Independent annealing chains per search. Fixed so results do not
/// depend on the thread count.
pub const SEARCH_CHAINS: u64 = 4;

/// Seeded simulated annealing over off-diagonal class assignments.
///
/// Each off-diagonal position takes one of the nonempty vanishing sets
/// (for two factors: vanish mod `q_1`, vanish mod `q_2`, zero). The
/// objective is the largest per-prime rank of the target; ties prefer
/// more zero-class entries. Chains run independently (in parallel when
/// enabled) and the lowest-numbered successful chain wins, so the result
/// is a function of the parameters alone.
pub fn local_search(params: SearchParams, modulus: &Modulus) -> Result<SearchOutcome> {
    local_search_with(params, modulus, Exec::default())
}

pub fn local_search_with(
    params: SearchParams,
    modulus: &Modulus,
    exec: Exec,
) -> Result<SearchOutcome> {
    require_generator_modulus(modulus, false)?;
    let n = params.n;
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let per_chain = (params.budget / SEARCH_CHAINS).max(1);
    let chains = exec.map(SEARCH_CHAINS as usize, |chain| {
        anneal_chain(params, modulus, chain as u64, per_chain)
    });
    let iterations = chains.iter().map(|c| c.iterations).sum();
    let best_t = chains.iter().map(|c| c.best.rank).min().unwrap_or(n);
    let report = SearchReport {
        best_t,
        iterations,
        params,
    };
    let Some((idx, chain)) = chains
        .iter()
        .enumerate()
        .find(|(_, c)| c.best.rank <= params.t_goal)
    else {
        return Ok(SearchOutcome::Exhausted(report));
    };
    let masks = &chain.best.masks;
    let target = GadgetTarget::from_classes(modulus, n, |i, j| masks[i * n + j])?;
    let recipe = format!(
        "search(n={n},t_goal={},seed={},budget={},chain={idx})",
        params.t_goal, params.seed, params.budget
    );
    let g = from_target_with_recipe(&target, recipe)?;
    Ok(SearchOutcome::Found(g, report))
}

#[derive(Clone, Debug)]
struct Candidate {
    masks: Vec<u32>,
    rank: usize,
    zeros: usize,
}

impl Candidate {
    fn energy(&self, n: usize) -> f64 {
        // zeros < n^2, so the tie-break term stays below one rank step
        self.rank as f64 - self.zeros as f64 / (n * n) as f64
    }
}

struct ChainResult {
    best: Candidate,
    iterations: u64,
}

fn assignment_ranks(masks: &[u32], n: usize, modulus: &Modulus, scratch: &mut Vec<u64>) -> usize {
    modulus
        .factors()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            scratch.clear();
            scratch.extend((0..n * n).map(|idx| {
                if idx / n == idx % n || masks[idx] & (1 << k) == 0 {
                    1
                } else {
                    0
                }
            }));
            crate::zmod::rank_in_place(scratch, n, n, f.p)
        })
        .max()
        .unwrap_or(n)
}

fn anneal_chain(params: SearchParams, modulus: &Modulus, chain: u64, iters: u64) -> ChainResult {
    let n = params.n;
    let full = modulus.full_mask();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(chain);
    let mut scratch = Vec::with_capacity(n * n);
    let positions: Vec<usize> = (0..n * n).filter(|idx| idx / n != idx % n).collect();

    let mut masks = vec![full; n * n];
    for &p in &positions {
        masks[p] = rng.gen_range(1..=full);
    }
    let eval = |masks: Vec<u32>, scratch: &mut Vec<u64>| {
        let rank = assignment_ranks(&masks, n, modulus, scratch);
        let zeros = positions.iter().filter(|&&p| masks[p] == full).count();
        Candidate { masks, rank, zeros }
    };
    let mut current = eval(masks, &mut scratch);
    let mut best = current.clone();
    let mut done = 0;
    if positions.is_empty() || best.rank <= params.t_goal {
        return ChainResult {
            best,
            iterations: done,
        };
    }
    let (t_hot, t_cold) = (1.0f64, 0.02f64);
    while done < iters {
        let frac = done as f64 / iters as f64;
        let temp = t_hot * (t_cold / t_hot).powf(frac);
        let pos = positions[rng.gen_range(0..positions.len())];
        let old = current.masks[pos];
        let mut new = rng.gen_range(1..full);
        if new >= old {
            new += 1;
        }
        let mut masks = current.masks.clone();
        masks[pos] = new;
        let next = eval(masks, &mut scratch);
        let delta = next.energy(n) - current.energy(n);
        done += 1;
        if delta <= 0.0 || rng.gen::<f64>() < (-delta / temp).exp() {
            current = next;
            if (current.rank, std::cmp::Reverse(current.zeros))
                < (best.rank, std::cmp::Reverse(best.zeros))
            {
                best = current.clone();
                if best.rank <= params.t_goal {
                    break;
                }
            }
        }
    }
    ChainResult {
        best,
        iterations: done,
    }
}

/// On-disk gadget: JSON with fixed field order, residues row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetFile {
    pub m: u64,
    pub n: usize,
    pub t: usize,
    #[serde(rename = "B")]
    pub b: Vec<u64>,
    #[serde(rename = "C")]
    pub c: Vec<u64>,
    pub recipe: String,
    #[serde(rename = "format-version")]
    pub format_version: u32,
}

impl GadgetFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    /// Parse without checking the target; see [`GadgetFile::into_gadget`].
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GadgetFile =
            serde_json::from_str(text).map_err(|e| Error::GadgetFile(e.to_string()))?;
        if file.format_version != GADGET_FORMAT_VERSION {
            return Err(Error::GadgetFile(format!(
                "unsupported format-version {}",
                file.format_version
            )));
        }
        Ok(file)
    }

    pub fn modulus(&self) -> Result<Modulus> {
        Modulus::new(self.m)
    }

    /// The raw factor matrices, checked for shape and range only.
    pub fn factors(&self) -> Result<(ResidueMatrix, ResidueMatrix)> {
        let b = ResidueMatrix::from_vec(self.n, self.t, self.m, self.b.clone())?;
        let c = ResidueMatrix::from_vec(self.n, self.t, self.m, self.c.clone())?;
        Ok((b, c))
    }

    pub fn into_gadget(self) -> Result<DotGadget> {
        let modulus = self.modulus()?;
        let (b, c) = self.factors()?;
        DotGadget::new(&modulus, b, c, self.recipe)
    }
}
