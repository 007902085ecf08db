//! Bilinear matrix products and multiplication accounting.
//!
//! For a homogeneous bilinear form `f(x, y) = sum a_{zt} x_z y_t`, the
//! product `U(f)V` applies `f` to row `i` of `U` and column `l` of `V`,
//! i.e. `U(f)V = U A V`. It is associative in the sense
//! `(U(f)V)(g)W = U(f)(V(g)W)`.
//!
//! The represented product of `X` and `Y` through a gadget is
//! `D = C (B^T X (h) Y B) C^T` where `h` is the gadget's own circuit.
//! Only the `t x t` strange product multiplies two variable-dependent
//! values, `t` times per entry, so exactly `t^3` multiplications are
//! counted. Everything else multiplies by constants and is free.

use std::ops::{Add, AddAssign};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gadget::DotGadget;
use crate::repcheck::{self, x_var, y_var, Classifier, MatrixRepReport, Monomial, SparsePoly};
use crate::zmod::{Modulus, ResidueMatrix};

/// `f(x, y) = sum a_{ij} x_i y_j`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilinearForm {
    coeffs: ResidueMatrix,
}

impl BilinearForm {
    pub fn new(coeffs: ResidueMatrix) -> Result<Self> {
        if !coeffs.is_square() {
            return Err(Error::DimensionMismatch {
                op: "bilinear form",
                left: coeffs.shape(),
                right: (coeffs.rows(), coeffs.rows()),
            });
        }
        Ok(BilinearForm { coeffs })
    }

    /// The dot product; `U(f)V` is then the ordinary product.
    pub fn dot(n: usize, m: u64) -> Self {
        BilinearForm {
            coeffs: ResidueMatrix::identity(n, m),
        }
    }

    /// `(sum x)(sum y)`
    pub fn all_ones(n: usize, m: u64) -> Self {
        BilinearForm {
            coeffs: ResidueMatrix::ones(n, n, m),
        }
    }

    /// The form computed by a gadget's circuit, with coefficients `B C^T`.
    pub fn of_gadget(g: &DotGadget) -> Self {
        BilinearForm {
            coeffs: g.target_matrix().clone(),
        }
    }

    pub fn arity(&self) -> usize {
        self.coeffs.rows()
    }

    pub fn coeffs(&self) -> &ResidueMatrix {
        &self.coeffs
    }

    pub fn evaluate(&self, x: &[u64], y: &[u64]) -> u64 {
        let m = self.coeffs.modulus();
        let mut acc = 0;
        for (i, &xi) in x.iter().enumerate() {
            for (j, &yj) in y.iter().enumerate() {
                let term = self.coeffs.get(i, j) * xi % m * yj % m;
                acc = (acc + term) % m;
            }
        }
        acc
    }
}

/// Operation counters. Only variable-by-variable products are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpTally {
    pub counted_mults: u64,
    pub free_const_mults: u64,
    pub additions: u64,
}

impl OpTally {
    pub fn new() -> Self {
        Self::default()
    }

    /// Constant matrix (`r x k`) times variable matrix (`k x c`), or the
    /// mirrored shape: free multiplications and the additions.
    fn charge_constant_product(&mut self, r: usize, k: usize, c: usize) {
        self.free_const_mults += (r * k * c) as u64;
        self.additions += (r * k.saturating_sub(1) * c) as u64;
    }
}

impl AddAssign for OpTally {
    fn add_assign(&mut self, rhs: Self) {
        self.counted_mults += rhs.counted_mults;
        self.free_const_mults += rhs.free_const_mults;
        self.additions += rhs.additions;
    }
}

impl Add for OpTally {
    type Output = OpTally;

    fn add(mut self, rhs: Self) -> OpTally {
        self += rhs;
        self
    }
}

fn check_modulus(a: &ResidueMatrix, b: &ResidueMatrix) -> Result<()> {
    if a.modulus() != b.modulus() {
        return Err(Error::ModulusMismatch {
            left: a.modulus(),
            right: b.modulus(),
        });
    }
    Ok(())
}

fn check_inner(op: &'static str, u: &ResidueMatrix, n: usize, v: &ResidueMatrix) -> Result<()> {
    check_modulus(u, v)?;
    if u.cols() != n || v.rows() != n {
        return Err(Error::DimensionMismatch {
            op,
            left: u.shape(),
            right: v.shape(),
        });
    }
    Ok(())
}

/// `U(f)V` from the coefficient matrix: `w_{il} = sum_{z,t} a_{zt} u_{iz} v_{tl}`.
pub fn strange_product_coeff(
    u: &ResidueMatrix,
    f: &BilinearForm,
    v: &ResidueMatrix,
) -> Result<ResidueMatrix> {
    check_inner("strange product", u, f.arity(), v)?;
    check_modulus(u, &f.coeffs)?;
    u.mul(&f.coeffs)?.mul(v)
}

/// `U(h)V` evaluated by the gadget's depth-3 circuit: entry `(i, l)` is
/// `sum_j (B_j . u_i)(C_j . v_l)`. The linear forms are shared across
/// entries; each entry then costs `t` counted multiplications.
pub fn strange_product_circuit(
    u: &ResidueMatrix,
    g: &DotGadget,
    v: &ResidueMatrix,
    tally: &mut OpTally,
) -> Result<ResidueMatrix> {
    strange_product_circuit_with(u, g, v, tally, Exec::default())
}

pub fn strange_product_circuit_with(
    u: &ResidueMatrix,
    g: &DotGadget,
    v: &ResidueMatrix,
    tally: &mut OpTally,
    exec: Exec,
) -> Result<ResidueMatrix> {
    check_inner("strange product", u, g.n(), v)?;
    if u.modulus() != g.modulus().m() {
        return Err(Error::ModulusMismatch {
            left: u.modulus(),
            right: g.modulus().m(),
        });
    }
    let (rows, n, cols, t) = (u.rows(), g.n(), v.cols(), g.t());
    let m = u.modulus();
    // row forms (B_j . u_i) and column forms (C_j . v_l)
    let row_forms = u.mul_with(g.b(), exec)?;
    let col_forms = g.c().transpose().mul_with(v, exec)?;
    let mut forms = OpTally::new();
    forms.charge_constant_product(rows, n, t);
    forms.charge_constant_product(t, n, cols);

    let results = exec.for_work(rows * cols * t).map(rows, |i| {
        let mut local = OpTally::new();
        let pf = row_forms.row(i);
        let mut out = Vec::with_capacity(cols);
        for l in 0..cols {
            let mut acc = 0u64;
            for (j, &p) in pf.iter().enumerate() {
                acc = (acc + p * col_forms.get(j, l) % m) % m;
            }
            local.counted_mults += t as u64;
            local.additions += t.saturating_sub(1) as u64;
            out.push(acc);
        }
        (out, local)
    });
    let mut data = Vec::with_capacity(rows * cols);
    let mut entries = OpTally::new();
    for (row, local) in results {
        data.extend(row);
        entries += local;
    }
    *tally += forms + entries;
    Ok(ResidueMatrix::from_fn(rows, cols, m, |i, l| {
        data[i * cols + l]
    }))
}

fn check_square_pair(x: &ResidueMatrix, y: &ResidueMatrix, n: usize, m: u64) -> Result<()> {
    check_modulus(x, y)?;
    if x.modulus() != m {
        return Err(Error::ModulusMismatch {
            left: x.modulus(),
            right: m,
        });
    }
    for mat in [x, y] {
        if mat.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: mat.shape(),
                right: (n, n),
            });
        }
    }
    Ok(())
}

/// A 1-a-strong representation of `XY` with exactly `t^3` counted multiplications.
///
/// `P = B^T X` and `Q = Y B` multiply by constants only; `W = P(h)Q` is
/// evaluated by the circuit; `D = C W C^T` is again free.
pub fn matmul_represent(
    x: &ResidueMatrix,
    y: &ResidueMatrix,
    g: &DotGadget,
    tally: &mut OpTally,
) -> Result<ResidueMatrix> {
    matmul_represent_with(x, y, g, tally, Exec::default())
}

pub fn matmul_represent_with(
    x: &ResidueMatrix,
    y: &ResidueMatrix,
    g: &DotGadget,
    tally: &mut OpTally,
    exec: Exec,
) -> Result<ResidueMatrix> {
    let (n, t) = (g.n(), g.t());
    check_square_pair(x, y, n, g.modulus().m())?;
    let bt = g.b().transpose();
    let p = bt.mul_with(x, exec)?;
    let q = y.mul_with(g.b(), exec)?;
    tally.charge_constant_product(t, n, n);
    tally.charge_constant_product(n, n, t);
    let w = strange_product_circuit_with(&p, g, &q, tally, exec)?;
    let cw = g.c().mul_with(&w, exec)?;
    let d = cw.mul_with(&g.c().transpose(), exec)?;
    tally.charge_constant_product(n, t, t);
    tally.charge_constant_product(n, t, n);
    Ok(d)
}

/// Schoolbook product; every product of two entries is counted.
pub fn naive_matmul(
    x: &ResidueMatrix,
    y: &ResidueMatrix,
    tally: &mut OpTally,
) -> Result<ResidueMatrix> {
    check_modulus(x, y)?;
    if x.cols() != y.rows() {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let (r, k, c) = (x.rows(), x.cols(), y.cols());
    let out = x.mul(y)?;
    tally.counted_mults += (r * k * c) as u64;
    tally.additions += (r * k.saturating_sub(1) * c) as u64;
    Ok(out)
}

/// Classify `D = M^T X M Y M` entry by entry against `sum_k x_{ik} y_{kj}`
/// from the closed form: the coefficient of `x_{ab} y_{cd}` in entry
/// `(i, j)` is `M_{ai} M_{bc} M_{dj}`. Costs `O(n^6)`.
pub fn verify_product_closed_form(
    target: &ResidueMatrix,
    modulus: &Modulus,
    exec: Exec,
) -> MatrixRepReport {
    let n = target.rows();
    let mm = target;
    let entries = exec.map(n * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        let mut cls = Classifier::new(modulus);
        for a in 0..n {
            let ma = mm.get(a, i);
            for b in 0..n {
                for c in 0..n {
                    let mab = modulus.mul(ma, mm.get(b, c));
                    for d in 0..n {
                        let coeff = modulus.mul(mab, mm.get(d, j));
                        let want = u64::from(a == i && b == c && d == j);
                        cls.observe(want, coeff, || {
                            Monomial::pair(x_var(n, a, b), y_var(n, c, d))
                        });
                    }
                }
            }
        }
        cls.finish()
    });
    MatrixRepReport::from_entries(n, entries)
}

/// Fast decision of whether the represented product through target `M` is
/// 1-a-strong, for square-free moduli.
///
/// Over prime factors a product vanishes modulo `p` iff one factor does.
/// Pattern coefficients `M_ii M_bb M_jj` must be exactly 1. Any other
/// coefficient must vanish modulo some prime, which fails precisely when
/// the three factors can all be drawn from the entries of `M` that vanish
/// nowhere, outside the pattern; this is a counting condition on those
/// entries per output entry.
pub fn represented_product_is_one_a_strong(
    target: &ResidueMatrix,
    modulus: &Modulus,
) -> Result<bool> {
    if !modulus.is_square_free() {
        return Err(Error::NotSquareFree(modulus.m()));
    }
    let n = target.rows();
    let nowhere = |v: u64| modulus.vanishing_mask(v) == 0;
    // column membership of non-vanishing entries
    let col_count: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&a| nowhere(target.get(a, i))).count())
        .collect();
    let total: usize = col_count.iter().sum();
    let diag: Vec<bool> = (0..n).map(|b| nowhere(target.get(b, b))).collect();
    let diag_count = diag.iter().filter(|&&d| d).count();
    let mut diag_values: Vec<u64> = (0..n).map(|b| target.get(b, b)).collect();
    diag_values.sort_unstable();
    diag_values.dedup();
    for i in 0..n {
        for j in 0..n {
            let ends = modulus.mul(target.get(i, i), target.get(j, j));
            if diag_values.iter().any(|&d| modulus.mul(ends, d) != 1) {
                return Ok(false);
            }
            let pattern = usize::from(diag[i]) * usize::from(diag[j]) * diag_count;
            if col_count[i] * total * col_count[j] > pattern {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Symbolic entries of `matmul_represent` through `g`, from all `n^4` probes.
pub fn represented_product_polys(g: &DotGadget, exec: Exec) -> Vec<SparsePoly> {
    let eval = |x: &ResidueMatrix, y: &ResidueMatrix| {
        let mut tally = OpTally::new();
        matmul_represent_with(x, y, g, &mut tally, Exec::Sequential)
            .expect("probe has gadget shape")
    };
    repcheck::probe_sweep_bilinear(eval, g.n(), g.modulus().m(), exec)
}
