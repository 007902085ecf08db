//! Matrix compression through a dot-product gadget.
//!
//! With `M = B C^T`:
//!
//! * `X B C^T = X M` represents `X` column by column,
//! * `C B^T X = M^T X` represents `X` row by row,
//! * `S = B^T X B` is only `t x t`, and `C S C^T = M^T X M` is again a
//!   1-a-strong representation of `X`.
//!
//! The coefficient of `x_{kl}` in entry `(i, j)` of `M^T X M` is
//! `M_{ki} M_{lj}`. Symbolic verifiers below evaluate those closed forms
//! directly; [`probe_polys`] rebuilds the same polynomials by feeding
//! elementary matrices through the numeric maps and serves as their oracle.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gadget::DotGadget;
use crate::repcheck::{self, x_var, Classifier, MatrixRepReport, Monomial, SparsePoly};
use crate::zmod::{Modulus, ResidueMatrix};

fn check_input(x: &ResidueMatrix, g: &DotGadget) -> Result<()> {
    if x.modulus() != g.modulus().m() {
        return Err(Error::ModulusMismatch {
            left: x.modulus(),
            right: g.modulus().m(),
        });
    }
    if x.shape() != (g.n(), g.n()) {
        return Err(Error::DimensionMismatch {
            op: "sketch input",
            left: x.shape(),
            right: (g.n(), g.n()),
        });
    }
    Ok(())
}

/// `X B C^T`; every output column is a combination of columns of `X`.
pub fn right_represent(x: &ResidueMatrix, g: &DotGadget) -> Result<ResidueMatrix> {
    check_input(x, g)?;
    x.mul(g.b())?.mul(&g.c().transpose())
}

/// `C B^T X`; every output row is a combination of rows of `X`.
pub fn left_represent(x: &ResidueMatrix, g: &DotGadget) -> Result<ResidueMatrix> {
    check_input(x, g)?;
    g.c().mul(&g.b().transpose().mul(x)?)
}

/// A `t x t` sketch tied to the gadget that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SketchBundle<'g> {
    gadget: &'g DotGadget,
    sketch: ResidueMatrix,
}

impl<'g> SketchBundle<'g> {
    /// Pair a sketch read from elsewhere with its gadget.
    pub fn new(gadget: &'g DotGadget, sketch: ResidueMatrix) -> Result<Self> {
        let t = gadget.t();
        if sketch.shape() != (t, t) || sketch.modulus() != gadget.modulus().m() {
            return Err(Error::BundleMismatch {
                expected: (t, t),
                got: sketch.shape(),
            });
        }
        Ok(SketchBundle { gadget, sketch })
    }

    pub fn gadget(&self) -> &'g DotGadget {
        self.gadget
    }

    pub fn sketch(&self) -> &ResidueMatrix {
        &self.sketch
    }

    /// Dimension of the matrices this sketch stands for.
    pub fn n(&self) -> usize {
        self.gadget.n()
    }

    pub fn into_sketch(self) -> ResidueMatrix {
        self.sketch
    }
}

/// `S = B^T X B`
pub fn compress<'g>(x: &ResidueMatrix, g: &'g DotGadget) -> Result<SketchBundle<'g>> {
    check_input(x, g)?;
    let sketch = g.b().transpose().mul(x)?.mul(g.b())?;
    SketchBundle::new(g, sketch)
}

/// `C S C^T`: a 1-a-strong representation of the compressed matrix.
pub fn recover(bundle: &SketchBundle<'_>) -> Result<ResidueMatrix> {
    let c = bundle.gadget.c();
    c.mul(&bundle.sketch)?.mul(&c.transpose())
}

/// Which linear map to verify symbolically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SketchMap {
    /// `X -> X M`
    Right,
    /// `X -> M^T X`
    Left,
    /// `X -> M^T X M`
    Recover,
}

/// Classify every entry of the map's symbolic output against `x_{ij}`,
/// using the closed-form coefficients on `M` (not required to be a valid
/// target, so corrupted matrices can be checked too).
pub fn verify_closed_form(
    map: SketchMap,
    target: &ResidueMatrix,
    modulus: &Modulus,
    exec: Exec,
) -> MatrixRepReport {
    let n = target.rows();
    let mm = target;
    let entries = exec.for_work(n.pow(4)).map(n * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        let mut cls = Classifier::new(modulus);
        let mut see = |k: usize, l: usize, coeff: u64| {
            let a = u64::from((k, l) == (i, j));
            cls.observe(a, coeff, || Monomial::var(x_var(n, k, l)));
        };
        // variables visited in increasing index order
        match map {
            SketchMap::Right => (0..n).for_each(|k| see(i, k, mm.get(k, j))),
            SketchMap::Left => (0..n).for_each(|k| see(k, j, mm.get(k, i))),
            SketchMap::Recover => {
                for k in 0..n {
                    let left = mm.get(k, i);
                    for l in 0..n {
                        see(k, l, modulus.mul(left, mm.get(l, j)));
                    }
                }
            }
        }
        cls.finish()
    });
    MatrixRepReport::from_entries(n, entries)
}

/// [`verify_closed_form`] for a gadget's own target.
pub fn verify_gadget_map(map: SketchMap, g: &DotGadget, exec: Exec) -> MatrixRepReport {
    verify_closed_form(map, g.target_matrix(), g.modulus(), exec)
}

/// Symbolic entries of the map, recovered by elementary-matrix probes.
pub fn probe_polys(map: SketchMap, g: &DotGadget, exec: Exec) -> Vec<SparsePoly> {
    let eval = |x: &ResidueMatrix| -> ResidueMatrix {
        match map {
            SketchMap::Right => right_represent(x, g),
            SketchMap::Left => left_represent(x, g),
            SketchMap::Recover => compress(x, g).and_then(|b| recover(&b)),
        }
        .expect("probe has gadget shape")
    };
    repcheck::probe_sweep_linear(eval, g.n(), g.modulus().m(), exec)
}
