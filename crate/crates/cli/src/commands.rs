use std::fs;
use std::path::Path;
use std::time::Instant;

use astrong::bilinear::{self, OpTally};
use astrong::gadget::{self, ExhaustiveOutcome, GadgetFile, SearchOutcome, SearchParams};
use astrong::repcheck::{self, classify_poly, RepClassification, RepKind};
use astrong::sketch::{self, SketchBundle, SketchMap};
use astrong::{DotGadget, Exec, ResidueMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, Format, Strategy};
use crate::{BenchArgs, CliError, GadgetArgs, MapArgs, MatmulArgs, VerifyArgs};

pub const CSV_HEADER: &str = "# astrong bench csv v1";

/// Largest n for the `O(n^6)` product closed form; beyond it the
/// vanishing-count check is used.
const PRODUCT_CLOSED_FORM_MAX_N: usize = 16;
const PRODUCT_PROBE_MAX_N: usize = 9;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_gadget(path: &Path) -> Result<DotGadget, CliError> {
    Ok(GadgetFile::from_json(&read(path)?)?.into_gadget()?)
}

fn load_matrix(path: &Path) -> Result<ResidueMatrix, CliError> {
    Ok(ResidueMatrix::parse_text(&read(path)?)?)
}

pub fn gadget(a: GadgetArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig {
        strategy: Some(a.strategy),
        n: a.n,
        block_size: Some(a.block_size),
        t_goal: a.t_goal,
        t: a.t,
        budget: Some(a.budget),
        levels: a.levels,
        output: Some(a.out.clone()),
        ..ExperimentConfig::new(a.m, a.seed)
    };
    let m = cfg.generator_modulus()?;
    let n = cfg.require_n()?;
    if cfg.levels == 0 {
        return Err(CliError::Input("--levels must be at least 1".into()));
    }
    let base = match a.strategy {
        Strategy::Trivial => gadget::trivial(n, &m),
        Strategy::Block => gadget::block_partition(n, a.block_size, &m)?,
        Strategy::Search => {
            let t_goal = a
                .t_goal
                .ok_or_else(|| CliError::Input("--t-goal is required for search".into()))?;
            let params = SearchParams {
                n,
                t_goal,
                seed: a.seed,
                budget: a.budget,
            };
            match gadget::local_search(params, &m)? {
                SearchOutcome::Found(g, _) => g,
                SearchOutcome::Exhausted(r) => {
                    return Err(CliError::Infeasible(format!(
                        "budget exhausted after {} iterations; best width {} > {t_goal}",
                        r.iterations, r.best_t
                    )))
                }
            }
        }
        Strategy::Exhaustive => {
            let t =
                a.t.ok_or_else(|| CliError::Input("--t is required for exhaustive".into()))?;
            match gadget::exhaustive_01(n, t, &m)? {
                ExhaustiveOutcome::Found(g) => g,
                ExhaustiveOutcome::Infeasible { pairs } => {
                    return Err(CliError::Infeasible(format!(
                        "no 0/1 gadget with n={n}, t={t}: {pairs} pairs enumerated"
                    )))
                }
            }
        }
    };
    let g = gadget::kronecker_power(&base, cfg.levels)?;
    let out = cfg.output_path()?;
    write(out, &g.to_json())?;
    println!(
        "wrote {}: m={} n={} t={} recipe={}",
        out.display(),
        g.modulus().m(),
        g.n(),
        g.t(),
        g.recipe()
    );
    Ok(())
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    one_a_strong: bool,
    strongest: Option<String>,
    witness: Option<String>,
}

impl Check {
    fn from_class(name: &'static str, c: &RepClassification) -> Self {
        Check {
            name,
            one_a_strong: c.is_one_a_strong,
            strongest: c.strongest().map(|k| k.to_string()),
            witness: c.witness(RepKind::OneAStrong).map(|w| w.to_string()),
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    m: u64,
    n: usize,
    t: usize,
    recipe: String,
    checks: Vec<Check>,
    verified: bool,
}

fn map_name(map: SketchMap) -> &'static str {
    match map {
        SketchMap::Right => "X -> XM",
        SketchMap::Left => "X -> M^T X",
        SketchMap::Recover => "recover(compress(X))",
    }
}

pub fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let file = GadgetFile::from_json(&read(&a.gadget)?)?;
    let modulus = file.modulus()?;
    let (b, c) = file.factors()?;
    let g = DotGadget::new(&modulus, b, c, file.recipe.clone())
        .map_err(|e| CliError::Verify(format!("not a valid gadget: {e}")))?;
    let n = g.n();
    if a.probe && a.product && n > PRODUCT_PROBE_MAX_N {
        return Err(CliError::Input(format!(
            "product probes need n <= {PRODUCT_PROBE_MAX_N}, gadget has n = {n}"
        )));
    }
    let exec = Exec::default();
    let mut checks = Vec::new();
    let dot = classify_poly(&gadget::dot_target(n, modulus.m()), &g.dot_poly(), &modulus)?;
    checks.push(Check::from_class("dot product", &dot));

    let mut maps = vec![SketchMap::Recover];
    if a.sketch {
        maps.splice(0..0, [SketchMap::Right, SketchMap::Left]);
    }
    for map in maps {
        let closed = sketch::verify_gadget_map(map, &g, exec);
        if a.probe {
            let probed =
                repcheck::verify_matrix_rep(&sketch::probe_polys(map, &g, exec), n, &modulus)?;
            if probed != closed {
                return Err(CliError::Verify(format!(
                    "{}: closed form and probes disagree",
                    map_name(map)
                )));
            }
        }
        checks.push(Check::from_class(map_name(map), &closed.aggregate));
    }

    if a.product {
        const NAME: &str = "represented product";
        if n <= PRODUCT_CLOSED_FORM_MAX_N {
            let closed = bilinear::verify_product_closed_form(g.target_matrix(), &modulus, exec);
            if a.probe {
                let polys = bilinear::represented_product_polys(&g, exec);
                if repcheck::verify_product_rep(&polys, n, &modulus)? != closed {
                    return Err(CliError::Verify(format!(
                        "{NAME}: closed form and probes disagree"
                    )));
                }
            }
            checks.push(Check::from_class(NAME, &closed.aggregate));
        } else {
            let ok = bilinear::represented_product_is_one_a_strong(g.target_matrix(), &modulus)?;
            checks.push(Check {
                name: NAME,
                one_a_strong: ok,
                strongest: ok.then(|| RepKind::OneAStrong.to_string()),
                witness: None,
            });
        }
    }

    let verified = checks.iter().all(|c| c.one_a_strong);
    let report = VerifyReport {
        m: modulus.m(),
        n,
        t: g.t(),
        recipe: g.recipe().to_string(),
        checks,
        verified,
    };
    match a.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
        Format::Text => {
            println!(
                "gadget: m={} n={} t={} recipe={}",
                report.m, n, report.t, report.recipe
            );
            for c in &report.checks {
                let class = c.strongest.as_deref().unwrap_or("none");
                println!("{}: {class}", c.name);
                if let Some(w) = &c.witness {
                    println!("  1-a-strong fails at {w}");
                }
            }
            if verified {
                println!("verified: 1-a-strong representation");
            }
        }
    }
    if verified {
        Ok(())
    } else {
        Err(CliError::Verify("not one-a-strong".into()))
    }
}

pub fn compress(a: MapArgs) -> Result<(), CliError> {
    let g = load_gadget(&a.gadget)?;
    let x = load_matrix(&a.input)?;
    let bundle = sketch::compress(&x, &g)?;
    write(&a.out, &bundle.sketch().to_text())
}

pub fn recover(a: MapArgs) -> Result<(), CliError> {
    let g = load_gadget(&a.gadget)?;
    let s = load_matrix(&a.input)?;
    let bundle = SketchBundle::new(&g, s)?;
    write(&a.out, &sketch::recover(&bundle)?.to_text())
}

pub fn matmul(a: MatmulArgs) -> Result<(), CliError> {
    let g = load_gadget(&a.gadget)?;
    let x = load_matrix(&a.x)?;
    let y = load_matrix(&a.y)?;
    let mut tally = OpTally::new();
    let d = if a.naive {
        bilinear::naive_matmul(&x, &y, &mut tally)?
    } else {
        bilinear::matmul_represent(&x, &y, &g, &mut tally)?
    };
    write(&a.out, &d.to_text())?;
    println!(
        "counted_mults={} free_const_mults={} additions={}",
        tally.counted_mults, tally.free_const_mults, tally.additions
    );
    Ok(())
}

fn random_square(rng: &mut impl Rng, n: usize, m: u64) -> ResidueMatrix {
    let data = (0..n * n).map(|_| rng.gen_range(0..m)).collect();
    ResidueMatrix::from_vec(n, n, m, data).expect("residues in range")
}

fn strategy_name(recipe: &str) -> &str {
    recipe.split('(').next().unwrap_or(recipe)
}

pub fn bench(a: BenchArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig {
        levels: a.levels,
        inputs: vec![a.gadget],
        output: Some(a.csv),
        ..ExperimentConfig::new(0, a.seed)
    };
    let base = load_gadget(&cfg.inputs[0])?;
    cfg.modulus = base.modulus().m();
    cfg.n = Some(base.n());
    if cfg.levels == 0 {
        return Err(CliError::Input("--levels must be at least 1".into()));
    }
    let m = base.modulus().m();
    let mut out = Vec::new();
    out.extend_from_slice(format!("{CSV_HEADER}\n# config {}\n", cfg.to_json()).as_bytes());
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "t",
        "strategy",
        "counted_rep",
        "counted_naive",
        "ratio",
        "verified",
        "seed",
        "wall_ms",
    ])?;
    let mut g = base.clone();
    for level in 1..=cfg.levels {
        if level > 1 {
            g = gadget::kronecker_compose(&g, &base)?;
        }
        let n = g.n();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(level as u64);
        let x = random_square(&mut rng, n, m);
        let y = random_square(&mut rng, n, m);

        let start = Instant::now();
        let mut rep = OpTally::new();
        let d = bilinear::matmul_represent(&x, &y, &g, &mut rep)?;
        let wall_ms = start.elapsed().as_millis();
        let mut naive = OpTally::new();
        bilinear::naive_matmul(&x, &y, &mut naive)?;

        let mm = g.target_matrix();
        let expected = mm.transpose().mul(&x)?.mul(mm)?.mul(&y)?.mul(mm)?;
        let verified =
            d == expected && bilinear::represented_product_is_one_a_strong(mm, g.modulus())?;
        let ratio = rep.counted_mults as f64 / naive.counted_mults as f64;
        w.write_record([
            n.to_string(),
            g.t().to_string(),
            strategy_name(base.recipe()).to_string(),
            rep.counted_mults.to_string(),
            naive.counted_mults.to_string(),
            format!("{ratio:.6}"),
            verified.to_string(),
            cfg.seed.to_string(),
            wall_ms.to_string(),
        ])?;
        println!(
            "n={n} t={} counted_rep={} counted_naive={} verified={verified}",
            g.t(),
            rep.counted_mults,
            naive.counted_mults
        );
        if !verified {
            let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
            write(cfg.output_path()?, &String::from_utf8_lossy(&bytes))?;
            return Err(CliError::Verify(format!(
                "represented product at n={n} failed"
            )));
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    write(
        cfg.output_path()?,
        &String::from_utf8(bytes).expect("csv is utf-8"),
    )
}
