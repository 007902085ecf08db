//! Shared fixtures and independent oracles for the integration tests.
//!
//! Nothing here calls into the elimination or verification code paths it
//! is used to check.

#![allow(dead_code)]

use astrong::gadget::{self, DotGadget, GadgetTarget, SearchOutcome, SearchParams};
use astrong::zmod::{factorize, Modulus, ResidueMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn m6() -> Modulus {
    factorize(6).unwrap()
}

/// Rank over GF(2) of rows packed into bit words.
pub fn gf2_rank(mut rows: Vec<u128>) -> usize {
    let mut rank = 0;
    while let Some(pos) = rows.iter().position(|&r| r != 0) {
        let pivot = rows.swap_remove(pos);
        let low = pivot & pivot.wrapping_neg();
        for r in rows.iter_mut() {
            if *r & low != 0 {
                *r ^= pivot;
            }
        }
        rank += 1;
    }
    rank
}

pub fn gf2_rank_of(mat: &ResidueMatrix) -> usize {
    assert!(mat.cols() <= 128);
    let rows = (0..mat.rows())
        .map(|i| {
            (0..mat.cols())
                .filter(|&j| mat.get(i, j) % 2 == 1)
                .fold(0u128, |acc, j| acc | 1 << j)
        })
        .collect();
    gf2_rank(rows)
}

/// Rank over GF(p) by column operations, pivoting on the last nonzero
/// entry of each row.
pub fn column_rank_modp(mat: &ResidueMatrix, p: u64) -> usize {
    let (r, c) = mat.shape();
    let mut cols: Vec<Vec<i64>> = (0..c)
        .map(|j| (0..r).map(|i| (mat.get(i, j) % p) as i64).collect())
        .collect();
    let p = p as i64;
    let inv = |a: i64| (1..p).find(|&x| a * x % p == 1).unwrap();
    let mut rank = 0;
    for i in (0..r).rev() {
        let Some(pc) = (rank..c).rev().find(|&j| cols[j][i] != 0) else {
            continue;
        };
        cols.swap(rank, pc);
        let s = inv(cols[rank][i]);
        for x in cols[rank].iter_mut() {
            *x = *x * s % p;
        }
        let pivot = cols[rank].clone();
        for (j, col) in cols.iter_mut().enumerate() {
            let f = col[i];
            if j != rank && f != 0 {
                for (x, q) in col.iter_mut().zip(&pivot) {
                    *x = (*x - f * q).rem_euclid(p);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Diagonal 1 and off-diagonal values in `{0, 3, 4}`: the classed mod-6 targets.
pub fn is_mod6_gadget_target(mat: &ResidueMatrix) -> bool {
    let n = mat.rows();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let v = mat.get(i, j);
            if i == j {
                v == 1
            } else {
                matches!(v, 0 | 3 | 4)
            }
        })
    })
}

/// Smallest `max(rank_2, rank_3)` over every classed mod-6 target of size `n`.
pub fn min_width_by_enumeration(n: usize) -> usize {
    let off: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    let mut best = n;
    for code in 0..3usize.pow(off.len() as u32) {
        let mut mat = ResidueMatrix::identity(n, 6);
        let mut c = code;
        for &(i, j) in &off {
            mat.set(i, j, [0, 3, 4][c % 3]);
            c /= 3;
        }
        let w = gf2_rank_of(&mat).max(column_rank_modp(&mat, 3));
        best = best.min(w);
    }
    best
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, m: u64) -> ResidueMatrix {
    let data: Vec<u64> = (0..rows * cols).map(|_| rng.gen_range(0..m)).collect();
    ResidueMatrix::from_fn(rows, cols, m, |i, j| data[i * cols + j])
}

/// Seeded random classed target of size `n` over `modulus`.
pub fn random_target(rng: &mut impl Rng, n: usize, modulus: &Modulus) -> GadgetTarget {
    let full = modulus.full_mask();
    let masks: Vec<u32> = (0..n * n).map(|_| rng.gen_range(1..=full)).collect();
    GadgetTarget::from_classes(modulus, n, |i, j| masks[i * n + j]).unwrap()
}

/// A mixed corpus of valid mod-6 gadgets from every constructor.
pub fn corpus(count: usize, seed: u64) -> Vec<DotGadget> {
    let m = m6();
    let block93 = gadget::block_partition(9, 3, &m).unwrap();
    let ex1 = gadget::sn2_to_gadget(
        &ResidueMatrix::from_rows(6, &[[0, 3, 1], [3, 0, 4], [1, 4, 0]]).unwrap(),
        &m,
    )
    .unwrap();
    let mut out = vec![
        gadget::trivial(1, &m),
        gadget::trivial(3, &m),
        gadget::trivial(5, &m),
        gadget::block_partition(3, 3, &m).unwrap(),
        gadget::block_partition(6, 3, &m).unwrap(),
        gadget::block_partition(6, 2, &m).unwrap(),
        gadget::block_partition(12, 3, &m).unwrap(),
        block93.clone(),
        ex1.clone(),
        gadget::kronecker_compose(&ex1, &ex1).unwrap(),
        gadget::kronecker_compose(&block93, &gadget::trivial(2, &m)).unwrap(),
        gadget::kronecker_compose(&ex1, &gadget::block_partition(4, 2, &m).unwrap()).unwrap(),
    ];
    for n in [2, 3, 4] {
        let params = SearchParams {
            n,
            t_goal: n,
            seed,
            budget: 200,
        };
        if let SearchOutcome::Found(g, _) = gadget::local_search(params, &m).unwrap() {
            out.push(g);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let n = rng.gen_range(1..=8);
        let target = random_target(&mut rng, n, &m);
        out.push(gadget::from_target(&target).unwrap());
    }
    out.truncate(count);
    out
}
