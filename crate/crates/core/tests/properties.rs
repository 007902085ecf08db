mod common;

use astrong::bilinear::{self, BilinearForm, OpTally};
use astrong::gadget::{self, GadgetTarget, SearchOutcome, SearchParams};
use astrong::repcheck::{self, classify_poly, Monomial, SparsePoly};
use astrong::sketch::{self, SketchMap};
use astrong::zmod::{factorize, rank_factorize_modp, Modulus, ResidueMatrix};
use astrong::{DotGadget, Exec};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Flags straight from the per-coefficient definitions.
fn oracle_flags(modulus: &Modulus, f: &SparsePoly, g: &SparsePoly) -> [bool; 4] {
    let qs: Vec<u64> = modulus.factors().iter().map(|pp| pp.q).collect();
    let monos: BTreeSet<&Monomial> = f.terms().chain(g.terms()).map(|(mo, _)| mo).collect();
    let (mut alt, mut zero, mut one, mut exact) = (true, true, true, true);
    for mo in monos {
        let (a, b) = (f.coeff(mo), g.coeff(mo));
        let agree: Vec<bool> = qs.iter().map(|&q| a % q == b % q).collect();
        let any = agree.contains(&true);
        alt &= any;
        zero &= any && qs.iter().zip(&agree).all(|(&q, &ok)| ok || b % q == 0);
        one &= any && (a == b || a == 0);
        exact &= a == b;
    }
    [alt, zero, one, exact]
}

fn random_poly(rng: &mut impl Rng, arity: usize, m: u64, density: f64) -> SparsePoly {
    let mut p = SparsePoly::zero(arity, m);
    for v in 0..arity as u32 {
        if rng.gen_bool(density) {
            p.add_term(Monomial::var(v), rng.gen_range(0..m));
        }
    }
    p
}

/// `g` drawn near `f` so that every relationship shows up.
fn perturbed(rng: &mut impl Rng, f: &SparsePoly, modulus: &Modulus) -> SparsePoly {
    let m = modulus.m();
    let mut g = SparsePoly::zero(f.arity(), m);
    for v in 0..f.arity() as u32 {
        let mo = Monomial::var(v);
        let a = f.coeff(&mo);
        let b = match rng.gen_range(0..4) {
            0 => a,
            1 => {
                // keep one residue, randomize the rest
                let keep = rng.gen_range(0..modulus.num_factors());
                let res: Vec<u64> = modulus
                    .factors()
                    .iter()
                    .enumerate()
                    .map(|(i, pp)| {
                        if i == keep {
                            a % pp.q
                        } else {
                            rng.gen_range(0..pp.q)
                        }
                    })
                    .collect();
                modulus.crt_lift(&res).unwrap()
            }
            2 => 0,
            _ => rng.gen_range(0..m),
        };
        g.add_term(mo, b);
    }
    g
}

#[test]
fn classification_matches_definitions_and_hierarchy_over_z6() {
    let m = m6();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10_000 {
        let arity = rng.gen_range(1..=5);
        let f = random_poly(&mut rng, arity, 6, 0.6);
        let g = perturbed(&mut rng, &f, &m);
        let c = classify_poly(&f, &g, &m).unwrap();
        let flags = [
            c.is_alternative,
            c.is_zero_a_strong,
            c.is_one_a_strong,
            c.is_exact,
        ];
        assert_eq!(flags, oracle_flags(&m, &f, &g), "{f} vs {g}");
        assert!(!c.is_exact || (c.is_zero_a_strong && c.is_one_a_strong));
        assert!(!c.is_zero_a_strong || c.is_alternative);
        assert!(!c.is_one_a_strong || c.is_alternative);
    }
}

#[test]
fn prime_power_collapse() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for q in [4, 5, 9] {
        let m = factorize(q).unwrap();
        for _ in 0..3_000 {
            let arity = rng.gen_range(1..=3);
            let f = random_poly(&mut rng, arity, q, 0.7);
            let g = perturbed(&mut rng, &f, &m);
            let c = classify_poly(&f, &g, &m).unwrap();
            assert_eq!(c.is_alternative, c.is_exact);
        }
    }
}

#[test]
fn disjoint_support_law_exhaustive() {
    let m = m6();
    for k in 1..=3usize {
        for code in 0..8usize.pow(k as u32) {
            let bits: Vec<[u64; 3]> = (0..k)
                .map(|v| {
                    let c = code >> (3 * v);
                    [(c & 1) as u64, (c >> 1 & 1) as u64, (c >> 2 & 1) as u64]
                })
                .collect();
            let f = SparsePoly::linear(6, &bits.iter().map(|b| b[0]).collect::<Vec<_>>());
            let cand = SparsePoly::linear(
                6,
                &bits
                    .iter()
                    .map(|b| b[0] + 2 * b[1] + 3 * b[2])
                    .collect::<Vec<_>>(),
            );
            let disjoint = bits.iter().all(|b| b.iter().sum::<u64>() <= 1);
            let c = classify_poly(&f, &cand, &m).unwrap();
            assert_eq!(c.is_one_a_strong, disjoint, "{bits:?}");
        }
    }
}

#[test]
fn crt_round_trip() {
    for m in (2..=300).chain([1_000_003 * 6, 30_030, 2 * 3 * 5 * 7 * 11 * 13 * 17]) {
        let md = factorize(m).unwrap();
        let step = (m / 5_000).max(1);
        for r in (0..m).step_by(step as usize) {
            let res: Vec<u64> = md.factors().iter().map(|pp| r % pp.q).collect();
            assert_eq!(md.crt_lift(&res).unwrap(), r, "m={m}");
        }
    }
}

#[test]
fn factorization_soundness_up_to_a_million() {
    for m in 2..=1_000_000u64 {
        let md = factorize(m).unwrap();
        let mut prod = 1;
        let mut last = 1;
        for pp in md.factors() {
            assert!(pp.p > last);
            last = pp.p;
            assert_eq!(pp.q, pp.p.pow(pp.e));
            prod *= pp.q;
        }
        assert_eq!(prod, m);
    }
    // primality of the reported bases, by sieve
    let limit = 1_000_000usize;
    let mut composite = vec![false; limit + 1];
    for i in 2..=1000 {
        if !composite[i] {
            (i * i..=limit).step_by(i).for_each(|j| composite[j] = true);
        }
    }
    for m in (2..=limit as u64).step_by(7) {
        for pp in factorize(m).unwrap().factors() {
            assert!(!composite[pp.p as usize]);
        }
    }
}

#[test]
fn rank_factorization_reconstructs_and_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for trial in 0..1000 {
        let p = [2, 3][trial % 2];
        let (r, c) = (rng.gen_range(1..=12), rng.gen_range(1..=12));
        // low-rank products exercise rank deficiency
        let mat = if rng.gen_bool(0.5) {
            let k = rng.gen_range(0..=r.min(c));
            random_matrix(&mut rng, r, k, p)
                .mul(&random_matrix(&mut rng, k, c, p))
                .unwrap()
        } else {
            random_matrix(&mut rng, r, c, p)
        };
        let f = rank_factorize_modp(&mat, p).unwrap();
        assert_eq!(f.b.mul(&f.c.transpose()).unwrap(), mat);
        assert_eq!(f.rank, column_rank_modp(&mat, p));
        assert_eq!(f.b.cols(), f.rank);
        if p == 2 {
            assert_eq!(f.rank, gf2_rank_of(&mat));
        }
    }
}

fn matrix_strategy(rows: usize, cols: usize, m: u64) -> impl Strategy<Value = ResidueMatrix> {
    proptest::collection::vec(0..m, rows * cols)
        .prop_map(move |d| ResidueMatrix::from_vec(rows, cols, m, d).unwrap())
}

proptest! {
    #[test]
    fn kronecker_mixed_product(
        (a, b, c, d) in (1usize..4, 1usize..4, 1usize..4, 1usize..4, 1usize..4, 1usize..4)
            .prop_flat_map(|(r1, k1, c1, r2, k2, c2)| (
                matrix_strategy(r1, k1, 10),
                matrix_strategy(r2, k2, 10),
                matrix_strategy(k1, c1, 10),
                matrix_strategy(k2, c2, 10),
            ))
    ) {
        let lhs = a.kron(&b).unwrap().mul(&c.kron(&d).unwrap()).unwrap();
        let rhs = a.mul(&c).unwrap().kron(&b.mul(&d).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn text_format_round_trip(m in matrix_strategy(3, 5, 6)) {
        let back: ResidueMatrix = m.to_text().parse().unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn from_target_is_minimal_and_valid(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = random_target(&mut rng, n, &m6());
        let g = gadget::from_target(&target).unwrap();
        let r2 = gf2_rank_of(target.matrix());
        let r3 = column_rank_modp(target.matrix(), 3);
        prop_assert_eq!(g.t(), r2.max(r3));
        prop_assert_eq!(g.target_matrix(), target.matrix());
        prop_assert!(is_mod6_gadget_target(g.target_matrix()));
    }

    #[test]
    fn from_target_over_three_primes(seed in any::<u64>(), n in 1usize..7) {
        let m30 = factorize(30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = random_target(&mut rng, n, &m30);
        let g = gadget::from_target(&target).unwrap();
        let want = [2, 3, 5].iter().map(|&p| column_rank_modp(target.matrix(), p)).max().unwrap();
        prop_assert_eq!(g.t(), want);
        let dot = classify_poly(&gadget::dot_target(n, 30), &g.dot_poly(), &m30).unwrap();
        prop_assert!(dot.is_one_a_strong);
    }

    #[test]
    fn matmul_is_bilinear(seed in any::<u64>(), pick in 0usize..20) {
        let g = &corpus(20, 5)[pick];
        let n = g.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = || random_matrix(&mut rng, n, n, 6);
        let (x1, x2, y1, y2) = (r(), r(), r(), r());
        let mut t = OpTally::new();
        let mut rep = |x: &ResidueMatrix, y: &ResidueMatrix| {
            bilinear::matmul_represent(x, y, g, &mut t).unwrap()
        };
        let lhs = rep(&x1.add(&x2).unwrap(), &y1);
        prop_assert_eq!(lhs, rep(&x1, &y1).add(&rep(&x2, &y1)).unwrap());
        let lhs = rep(&x1, &y1.add(&y2).unwrap());
        prop_assert_eq!(lhs, rep(&x1, &y1).add(&rep(&x1, &y2)).unwrap());
    }

    #[test]
    fn composition_law(seed in any::<u64>(), pick in 0usize..30) {
        let g = &corpus(30, 9)[pick];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, g.n(), g.n(), 6);
        let bundle = sketch::compress(&x, g).unwrap();
        let via_sketch = sketch::recover(&bundle).unwrap();
        let m = g.target_matrix();
        prop_assert_eq!(&via_sketch, &m.transpose().mul(&x).unwrap().mul(m).unwrap());
        let two_sided = sketch::left_represent(&sketch::right_represent(&x, g).unwrap(), g).unwrap();
        prop_assert_eq!(via_sketch, two_sided);
    }

    #[test]
    fn associativity_of_strange_products(
        seed in any::<u64>(),
        m in prop_oneof![Just(6u64), Just(10u64)],
        dims in (1usize..5, 1usize..5, 1usize..5, 1usize..5),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, k1, k2, c) = dims;
        let u = random_matrix(&mut rng, r, k1, m);
        let f = BilinearForm::new(random_matrix(&mut rng, k1, k1, m)).unwrap();
        let v = random_matrix(&mut rng, k1, k2, m);
        let g = BilinearForm::new(random_matrix(&mut rng, k2, k2, m)).unwrap();
        let w = random_matrix(&mut rng, k2, c, m);
        let left = bilinear::strange_product_coeff(
            &bilinear::strange_product_coeff(&u, &f, &v).unwrap(), &g, &w).unwrap();
        let right = bilinear::strange_product_coeff(
            &u, &f, &bilinear::strange_product_coeff(&v, &g, &w).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn search_is_seed_deterministic(seed in 0u64..50, n in 2usize..6) {
        let params = SearchParams { n, t_goal: n.saturating_sub(1).max(1), seed, budget: 300 };
        let seq = gadget::local_search_with(params, &m6(), Exec::Sequential).unwrap();
        let par = gadget::local_search_with(params, &m6(), Exec::Parallel).unwrap();
        let again = gadget::local_search(params, &m6()).unwrap();
        prop_assert_eq!(&seq, &par);
        prop_assert_eq!(seq, again);
    }

    #[test]
    fn gadget_json_round_trip(pick in 0usize..40) {
        let g = &corpus(40, 13)[pick];
        let text = g.to_json();
        let back = DotGadget::from_json(&text).unwrap();
        prop_assert_eq!(&back, g);
        prop_assert_eq!(back.to_json(), text);
    }
}

#[test]
fn corpus_soundness() {
    let m = m6();
    for g in corpus(100, 21) {
        assert!(is_mod6_gadget_target(g.target_matrix()), "{g}");
        assert_eq!(g.b().mul(&g.c().transpose()).unwrap(), *g.target_matrix());
        let dot = classify_poly(&gadget::dot_target(g.n(), 6), &g.dot_poly(), &m).unwrap();
        assert!(dot.is_one_a_strong, "{g}");
        for i in 0..g.n() {
            let mono = Monomial::pair(i as u32, (g.n() + i) as u32);
            assert_eq!(g.dot_poly().coeff(&mono), 1);
        }
    }
}

#[test]
fn kronecker_closure_over_small_corpus() {
    let small: Vec<DotGadget> = corpus(40, 4).into_iter().filter(|g| g.n() <= 6).collect();
    assert!(small.len() > 10);
    for g1 in &small {
        for g2 in small.iter().take(8) {
            let k = gadget::kronecker_compose(g1, g2).unwrap();
            assert_eq!((k.n(), k.t()), (g1.n() * g2.n(), g1.t() * g2.t()));
            assert!(is_mod6_gadget_target(k.target_matrix()));
            assert!(GadgetTarget::new(&m6(), k.target_matrix().clone()).is_ok());
        }
    }
}

#[test]
fn compression_exponent_of_block_powers() {
    let g = gadget::block_partition(9, 3, &m6()).unwrap();
    for k in 1..=3 {
        let p = gadget::kronecker_power(&g, k).unwrap();
        assert_eq!((p.n(), p.t()), (9usize.pow(k as u32), 7usize.pow(k as u32)));
        assert_eq!(p.t() * 9usize.pow(k as u32), p.n() * 7usize.pow(k as u32));
    }
}

#[test]
fn counting_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for g in corpus(30, 17) {
        let n = g.n();
        let x = random_matrix(&mut rng, n, n, 6);
        let y = random_matrix(&mut rng, n, n, 6);
        let mut t = OpTally::new();
        bilinear::matmul_represent(&x, &y, &g, &mut t).unwrap();
        assert_eq!(t.counted_mults, (g.t() as u64).pow(3));
        let mut zero_t = OpTally::new();
        let z = ResidueMatrix::zeros(n, n, 6);
        bilinear::matmul_represent(&z, &z, &g, &mut zero_t).unwrap();
        assert_eq!(zero_t, t);
        let mut nt = OpTally::new();
        let exact = bilinear::naive_matmul(&x, &y, &mut nt).unwrap();
        assert_eq!(nt.counted_mults, (n as u64).pow(3));
        assert_eq!(exact, x.mul(&y).unwrap());
    }
}

#[test]
fn dimension_defiance_and_coefficient_product_law() {
    for g in corpus(60, 31).into_iter().filter(|g| g.t() < g.n()) {
        let n = g.n();
        let x = ResidueMatrix::from_fn(n, n, 6, |i, j| ((i * 7 + j * 3) % 6) as u64);
        let bundle = sketch::compress(&x, &g).unwrap();
        assert!(bundle.sketch().data().len() < n * n);
        let rep = sketch::verify_gadget_map(SketchMap::Recover, &g, Exec::default());
        assert!(rep.aggregate.is_one_a_strong, "{g}");
        if n <= 12 {
            for p in sketch::probe_polys(SketchMap::Recover, &g, Exec::default()) {
                assert!(p.terms().all(|(_, c)| matches!(c, 1 | 3 | 4)));
            }
        }
    }
}

#[test]
fn trivial_gadget_is_identity_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 1..6 {
        let g = gadget::trivial(n, &m6());
        let x = random_matrix(&mut rng, n, n, 6);
        let y = random_matrix(&mut rng, n, n, 6);
        assert_eq!(
            sketch::recover(&sketch::compress(&x, &g).unwrap()).unwrap(),
            x
        );
        let mut t = OpTally::new();
        assert_eq!(
            bilinear::matmul_represent(&x, &y, &g, &mut t).unwrap(),
            x.mul(&y).unwrap()
        );
        assert_eq!(t.counted_mults, (n as u64).pow(3));
        let polys = bilinear::represented_product_polys(&g, Exec::default());
        let rep = repcheck::verify_product_rep(&polys, n, &m6()).unwrap();
        assert!(rep.aggregate.is_exact);
    }
}

/// `M^T X M Y M` expanded over polynomial entries.
fn symbolic_product(m: &ResidueMatrix) -> Vec<SparsePoly> {
    let n = m.rows();
    let arity = 2 * n * n;
    let var = |v: u32| {
        let mut p = SparsePoly::zero(arity, 6);
        p.add_term(Monomial::var(v), 1);
        p
    };
    let x: Vec<SparsePoly> = (0..n * n).map(|k| var(k as u32)).collect();
    let y: Vec<SparsePoly> = (0..n * n).map(|k| var((n * n + k) as u32)).collect();
    let scale = |p: &SparsePoly, c: u64| {
        let mut out = SparsePoly::zero(arity, 6);
        for (mo, v) in p.terms() {
            out.add_term(mo.clone(), v * c % 6);
        }
        out
    };
    // constant on the left: (K^T P)_{ij} = sum_k K_{ki} P_{kj}
    let left = |k: &ResidueMatrix, p: &[SparsePoly]| -> Vec<SparsePoly> {
        (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                (0..n).fold(SparsePoly::zero(arity, 6), |acc, l| {
                    acc.add(&scale(&p[l * n + j], k.get(l, i)))
                })
            })
            .collect()
    };
    let right = |p: &[SparsePoly], k: &ResidueMatrix| -> Vec<SparsePoly> {
        (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                (0..n).fold(SparsePoly::zero(arity, 6), |acc, l| {
                    acc.add(&scale(&p[i * n + l], k.get(l, j)))
                })
            })
            .collect()
    };
    let mtxm = right(&left(m, &x), m);
    let ym = right(&y, m);
    (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            (0..n).fold(SparsePoly::zero(arity, 6), |acc, l| {
                acc.add(&mtxm[i * n + l].mul(&ym[l * n + j]))
            })
        })
        .collect()
}

#[test]
fn probes_agree_with_symbolic_expansion() {
    for g in corpus(60, 3).into_iter().filter(|g| g.n() <= 4) {
        let probed = bilinear::represented_product_polys(&g, Exec::default());
        assert_eq!(probed, symbolic_product(g.target_matrix()), "{g}");
        let rep = repcheck::verify_product_rep(&probed, g.n(), &m6()).unwrap();
        assert!(rep.aggregate.is_one_a_strong);
        assert_eq!(
            rep,
            bilinear::verify_product_closed_form(g.target_matrix(), &m6(), Exec::default())
        );
    }
}

#[test]
fn fast_product_check_matches_closed_form() {
    for g in corpus(80, 41).into_iter().filter(|g| g.n() <= 9) {
        let closed =
            bilinear::verify_product_closed_form(g.target_matrix(), &m6(), Exec::default());
        assert!(closed.aggregate.is_one_a_strong);
        assert!(bilinear::represented_product_is_one_a_strong(g.target_matrix(), &m6()).unwrap());
    }
    // arbitrary matrices, most of which fail
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut seen = [0usize; 2];
    for _ in 0..2_000 {
        let n = rng.gen_range(1..=4);
        let mat = if rng.gen_bool(0.5) {
            let mut t = random_target(&mut rng, n, &m6()).into_matrix();
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            t.set(i, j, rng.gen_range(0..6));
            t
        } else {
            random_matrix(&mut rng, n, n, 6)
        };
        let fast = bilinear::represented_product_is_one_a_strong(&mat, &m6()).unwrap();
        let closed = bilinear::verify_product_closed_form(&mat, &m6(), Exec::Sequential);
        assert_eq!(fast, closed.aggregate.is_one_a_strong, "{mat:?}");
        seen[usize::from(fast)] += 1;
    }
    assert!(seen[0] > 0 && seen[1] > 0);
}

#[test]
fn sn2_round_trip_on_corpus() {
    let m = m6();
    for g in corpus(50, 12) {
        let n = g.n();
        let sn2 = g.to_sn2();
        let cls = classify_poly(&gadget::sn2_target(n, 6), &sn2, &m).unwrap();
        assert!(cls.is_zero_a_strong, "{g}");
        let a = ResidueMatrix::from_fn(n, n, 6, |i, j| {
            sn2.coeff(&Monomial::pair(i as u32, (n + j) as u32))
        });
        let back = gadget::sn2_to_gadget(&a, &m).unwrap();
        assert_eq!(back.target_matrix(), g.target_matrix());
    }
}

#[test]
fn exec_modes_agree_on_sweeps() {
    let g = gadget::block_partition(6, 3, &m6()).unwrap();
    assert_eq!(
        bilinear::represented_product_polys(&g, Exec::Sequential),
        bilinear::represented_product_polys(&g, Exec::Parallel)
    );
    let g9 = gadget::block_partition(9, 3, &m6()).unwrap();
    for map in [SketchMap::Right, SketchMap::Left, SketchMap::Recover] {
        assert_eq!(
            sketch::verify_gadget_map(map, &g9, Exec::Sequential),
            sketch::verify_gadget_map(map, &g9, Exec::Parallel)
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = random_matrix(&mut rng, 9, 9, 6);
    let y = random_matrix(&mut rng, 9, 9, 6);
    let (mut t1, mut t2) = (OpTally::new(), OpTally::new());
    let d1 = bilinear::matmul_represent_with(&x, &y, &g9, &mut t1, Exec::Sequential).unwrap();
    let d2 = bilinear::matmul_represent_with(&x, &y, &g9, &mut t2, Exec::Parallel).unwrap();
    assert_eq!((d1, t1), (d2, t2));
    if let SearchOutcome::Found(..) = gadget::local_search(
        SearchParams {
            n: 4,
            t_goal: 2,
            seed: 0,
            budget: 5_000,
        },
        &m6(),
    )
    .unwrap()
    {
    } else {
        panic!("n=4 reaches t=2");
    }
}
