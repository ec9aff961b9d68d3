use std::fs;
use std::sync::Arc;

use anyhow::{Context, Result};
use burkholder::harness::{
    self, compare_strategies, comparator_oracle, comparator_predictions, comparison_csv, log_grid, matrix_bound_at,
    pf_comparator_grid, ComparatorClass, OracleOptions, Sequence,
};
use burkholder::potentials::{
    ada_regret_bound, AdaGrad, AdaVariant, InstanceShape, MatrixConfig, MatrixPotential, MetaConfig, MetaMember,
    MetaPotential, Norm, ParamFree, ParamFreeConfig, Vaw, VawConfig,
};
use burkholder::stat_core::{run_online, Instance, Potential, Statistic, Strategy, Trajectory};
use burkholder::symlin::{Cholesky, SymMat};
use burkholder::verify::{self, CheckReport, ConstantLearner, MatrixLearner, PredictableTree};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{self, usage, Config, Family, Setup};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;

pub fn load_config(path: Option<&str>) -> Result<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| config::Usage(format!("cannot read config {p}: {e}")))?;
            Config::parse(&text)
        }
    }
}

fn sequence(setup: &Setup) -> Result<Sequence> {
    if let Some(spec) = &setup.spec {
        return Ok(harness::generate(spec)?);
    }
    let path = setup.sequence_path.as_deref().expect("csv sequences carry a path");
    let text = fs::read_to_string(path).map_err(|e| config::Usage(format!("cannot read sequence {path}: {e}")))?;
    harness::parse_sequence_csv(&text, setup.shape).map_err(|e| config::Usage(format!("sequence {path}: {e}")).into())
}

fn write_out(out: Option<&str>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {p}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

type BoundFn = Box<dyn Fn(&Statistic) -> burkholder::Result<f64>>;

fn oracle(setup: &Setup, class: ComparatorClass, seq: &Sequence) -> Result<Instance> {
    let init = match &setup.spec {
        Some(spec) => harness::planted_comparator(spec)?.map(Instance::Matrix),
        None => None,
    };
    let opts = OracleOptions { iters: setup.oracle_iters.max(1), ..OracleOptions::default() };
    Ok(comparator_oracle(class, seq, &setup.loss, &opts, init.as_ref())?.comparator)
}

/// Ridge least squares (Σxxᵀ + λI)⁻¹Σxy.
fn ridge(seq: &Sequence, d: usize, lambda: f64) -> Result<Vec<f64>> {
    let mut a = SymMat::zeros(d);
    let mut rhs = vec![0.0; d];
    for (x, y) in seq {
        let x = x.as_vector()?;
        a.axpy(1.0, &SymMat::outer(x))?;
        rhs.iter_mut().zip(x).for_each(|(r, v)| *r += y * v);
    }
    a.add_diag(lambda);
    Ok(Cholesky::new(&a)?.solve(&rhs))
}

/// Comparator predictions and the per-prefix bound for the family.
fn comparator_and_bound(setup: &Setup, seq: &Sequence, traj: &Trajectory) -> Result<(Vec<f64>, BoundFn)> {
    match &setup.family {
        Family::Matrix(cfg) => {
            let w = oracle(setup, ComparatorClass::NuclearBall(cfg.r), seq)?;
            let cfg = cfg.clone();
            Ok((comparator_predictions(seq, &w)?, Box::new(move |z| matrix_bound_at(&cfg, z))))
        }
        Family::ParamFree(cfg) => {
            let grid = pf_comparator_grid(cfg, traj, &setup.loss, &log_grid(1e-2, 1e2, setup.grid.max(1)))?;
            let worst = grid
                .iter()
                .max_by(|a, b| (a.regret - a.bound).total_cmp(&(b.regret - b.bound)))
                .expect("nonempty grid");
            let bound = worst.bound;
            let w = Instance::Vector(worst.comparator.clone());
            Ok((comparator_predictions(seq, &w)?, Box::new(move |_| Ok(bound))))
        }
        Family::AdaGrad(a) => {
            let class = match a.variant {
                AdaVariant::L2 => ComparatorClass::L2Ball(1.0),
                AdaVariant::Linf => ComparatorClass::LinfBall(1.0),
            };
            let w = oracle(setup, class, seq)?;
            let l = a.l;
            Ok((comparator_predictions(seq, &w)?, Box::new(move |z| ada_regret_bound(z, l))))
        }
        Family::Vaw(cfg) => {
            let w = ridge(seq, cfg.d, 1e-6)?;
            let preds = comparator_predictions(seq, &Instance::Vector(w.clone()))?;
            let cfg = cfg.clone();
            Ok((
                preds,
                Box::new(move |z| match z {
                    Statistic::VecSym { a, .. } => burkholder::potentials::vaw_regret_bound(&cfg, &w, a),
                    other => Err(burkholder::Error::Structural(format!("VAW bound on {}", other.tag()))),
                }),
            ))
        }
        Family::Meta { matrix, ada, meta } => {
            let w = oracle(setup, ComparatorClass::NuclearBall(matrix.r), seq)?;
            let (matrix, l, meta) = (matrix.clone(), ada.l, meta.clone());
            // The AdaGrad member certifies against the Frobenius unit ball,
            // which contains the nuclear ball only when r ≤ 1.
            let use_ada = matrix.r <= 1.0;
            Ok((
                comparator_predictions(seq, &w)?,
                Box::new(move |z| {
                    let (parts, gamma) = meta.parts(z)?;
                    let eta = meta.cfg.eta;
                    let slack = (meta.cfg.members.len() as f64).ln() / eta;
                    let mut best = matrix_bound_at(&matrix, &parts[0])? + eta * gamma[0] + slack;
                    if use_ada {
                        best = best.min(ada_regret_bound(&parts[1], l)? + eta * gamma[1] + slack);
                    }
                    Ok(best)
                }),
            ))
        }
    }
}

pub fn cmd_run(config: Option<&str>, out: Option<&str>, seed: Option<u64>) -> Result<i32> {
    let cfg = load_config(config)?;
    let setup = config::build(&cfg, seed)?;
    let seq = sequence(&setup)?;
    let p = setup.family.potential();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
    let traj = run_online(p.as_ref(), &setup.strategy, &seq, &setup.loss, setup.b, &mut rng)?;
    let (preds, bound) = comparator_and_bound(&setup, &seq, &traj)?;
    let rep = harness::report(p.as_ref(), &traj, &preds, &setup.loss, &*bound)?;
    write_out(out, &rep.to_csv())?;
    let ok = rep.certified(setup.tolerance);
    eprintln!(
        "{} {}: n={} regret={:.6} bound={:.6} certificate V(zeta_n)={:.6e}",
        if ok { "PASS" } else { "FAIL" },
        p.name(),
        seq.len(),
        rep.final_regret,
        rep.final_bound,
        rep.certificate
    );
    Ok(if ok { EXIT_OK } else { EXIT_FAIL })
}

pub fn cmd_compare(
    config: Option<&str>,
    out: Option<&str>,
    seed: Option<u64>,
    strategies: &str,
    reps: Option<usize>,
) -> Result<i32> {
    let cfg = load_config(config)?;
    let setup = config::build(&cfg, seed)?;
    let mut list = Vec::new();
    for name in strategies.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        list.push(config::parse_strategy(name, &cfg, &setup.family)?);
    }
    if list.is_empty() {
        return usage("--strategies needs at least one strategy");
    }
    let seq = sequence(&setup)?;
    let p = setup.family.potential();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // Comparator and bound are taken from the first strategy's run.
    let first = run_online(p.as_ref(), &list[0], &seq, &setup.loss, setup.b, &mut rng)?;
    let (preds, _) = comparator_and_bound(&setup, &seq, &first)?;
    let reps = reps.unwrap_or(20);
    let runs = compare_strategies(p.as_ref(), &list, &seq, &setup.loss, setup.b, &preds, reps, seed.unwrap_or(0))?;
    write_out(out, &comparison_csv(&runs))?;
    for r in &runs {
        eprintln!("{}: reps={} final regret={:.6} sum K={:.4}", r.name, r.repetitions, r.final_regret(), r.k_sum);
    }
    let mut code = EXIT_OK;
    let lin = runs.iter().position(|r| r.name == "linearized");
    for (i, s) in list.iter().enumerate() {
        if let (Strategy::Randomized(o), Some(j)) = (s, lin) {
            let gap = runs[i].final_regret() - runs[j].final_regret();
            let allowance = o.eps1 * runs[i].k_sum + o.eps2 * seq.len() as f64;
            let ok = gap <= allowance;
            eprintln!(
                "{} slack: mean gap {gap:.6} vs eps1*sum K + eps2*n = {allowance:.6}",
                if ok { "PASS" } else { "FAIL" }
            );
            if !ok {
                code = EXIT_FAIL;
            }
        }
    }
    Ok(code)
}

pub const SUITES: &[&str] = &["p1", "p2", "p3", "khintchine", "mgf", "supermartingale", "necessity", "all"];

/// The shipped families at desk scale.
fn default_families() -> Result<Vec<(Arc<dyn Potential>, f64)>> {
    let pf2 = ParamFree::new(ParamFreeConfig::new(50, 3, 1.0, 1.0, Norm::L2)?);
    let pf4 = ParamFree::new(ParamFreeConfig::new(50, 3, 1.0, 1.0, Norm::Lp(4.0))?);
    let mcfg = MatrixConfig::minimal(3, 2, 0.2, 1.0, 1.0, 1.0)?;
    let ada2 = AdaGrad::new(AdaVariant::L2, InstanceShape::Vector(3), 1.0, 1.0);
    let adai = AdaGrad::new(AdaVariant::Linf, InstanceShape::Vector(3), 1.0, 1.0);
    let vaw = Vaw::new(VawConfig::squared_loss(2, 1.0, 1.0)?);
    let meta = default_meta(&mcfg)?;
    Ok(vec![
        (Arc::new(pf2), 1e-8),
        (Arc::new(pf4), 1e-8),
        (Arc::new(MatrixPotential::new(mcfg)), 1e-6),
        (Arc::new(ada2), 1e-8),
        (Arc::new(adai), 1e-8),
        (Arc::new(vaw), 1e-6),
        (Arc::new(meta), 1e-6),
    ])
}

fn default_meta(mcfg: &MatrixConfig) -> Result<MetaPotential> {
    let members: Vec<Arc<dyn Potential>> = vec![
        Arc::new(MatrixPotential::new(mcfg.clone())),
        Arc::new(AdaGrad::new(AdaVariant::L2, InstanceShape::Matrix(mcfg.d1, mcfg.d2), mcfg.l, mcfg.b)),
    ];
    let members = members
        .into_iter()
        .map(|p| {
            let c = p.increment_bound(mcfg.b).expect("analytic");
            MetaMember { potential: p, c, analytic: true }
        })
        .collect();
    Ok(MetaPotential::new(MetaConfig { members, eta: 0.05 })?)
}

pub fn cmd_verify(
    suite: &str,
    config: Option<&str>,
    out: Option<&str>,
    seed: Option<u64>,
    trials: Option<usize>,
) -> Result<i32> {
    if !SUITES.contains(&suite) {
        return usage(format!("unknown suite '{suite}' (expected one of {})", SUITES.join(", ")));
    }
    let seed = seed.unwrap_or(0);
    let families = match config {
        Some(_) => {
            let cfg = load_config(config)?;
            let setup = config::build(&cfg, Some(seed))?;
            vec![(setup.family.potential(), setup.family.tolerance())]
        }
        None => default_families()?,
    };
    let want = |s: &str| suite == s || suite == "all";
    let mut reports: Vec<CheckReport> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    for (p, tol) in &families {
        let b = 1.0;
        if want("p1") {
            reports.push(verify::check_p1(p.as_ref(), *tol)?);
        }
        if want("p2") {
            reports.push(verify::check_p2(p.as_ref(), b, trials.unwrap_or(10_000), seed, *tol)?);
        }
        if want("p3") {
            reports.push(verify::check_p3_auto(p.as_ref(), b, trials.unwrap_or(10_000), seed, *tol)?);
        }
    }
    if want("khintchine") {
        reports.push(verify::check_matrix_khintchine(10, 3, 2, trials.unwrap_or(100), seed)?);
    }
    if want("mgf") {
        let trees = trials.unwrap_or(50);
        for n in 1..=14 {
            let rep = verify::check_mgf_bound(n, 3, 1.0, trees, seed)?;
            if n >= 8 {
                reports.push(rep);
            } else {
                notes.push(format!("observed mgf/n={n}: max E/sqrt(n) = {:.6}", rep.max_violation + 1.0));
            }
        }
    }
    if want("supermartingale") {
        let mcfg = MatrixConfig::minimal(3, 2, 0.2, 1.0, 1.0, 1.0)?;
        let pots: Vec<(Arc<dyn Potential>, f64)> = vec![
            (Arc::new(MatrixPotential::new(mcfg.clone())), 1e-6),
            (Arc::new(ParamFree::new(ParamFreeConfig::new(10, 3, 1.0, 1.0, Norm::L2)?)), 1e-8),
            (Arc::new(default_meta(&mcfg)?), 1e-6),
        ];
        for (p, tol) in pots {
            for k in 0..trials.unwrap_or(3) {
                let tree = verify::random_potential_tree(p.as_ref(), 10, 1.0, seed.wrapping_add(k as u64));
                reports.push(verify::check_supermartingale(p.as_ref(), &tree, tol)?);
            }
        }
    }
    if want("necessity") {
        let mcfg = MatrixConfig::minimal(3, 2, 0.2, 1.0, 1.0, 1.0)?;
        for k in 0..trials.unwrap_or(3) {
            let tree = PredictableTree::generate(10, seed.wrapping_add(k as u64), |_, rng| {
                use rand::Rng;
                burkholder::symlin::Mat::indicator(3, 2, rng.random_range(0..3), rng.random_range(0..2))
            });
            let res = verify::check_necessity(&MatrixLearner::new(mcfg.clone()), &mcfg, &tree, 1e-9)?;
            reports.push(res.report);
            let broken = verify::check_necessity(&ConstantLearner { value: 1.0 }, &mcfg, &tree, 1e-9)?;
            notes.push(format!(
                "control constant(1): worst regret-A = {:.4} (expected > 0), E[gap] = {:.4}",
                broken.worst_gap, broken.expected_gap
            ));
        }
    }
    let mut csv = String::from(CheckReport::CSV_HEADER);
    csv.push('\n');
    for r in &reports {
        println!("{r}");
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    for n in &notes {
        println!("{n}");
    }
    if let Some(path) = out {
        fs::write(path, csv).with_context(|| format!("writing {path}"))?;
    }
    Ok(if reports.iter().all(|r| r.passed()) { EXIT_OK } else { EXIT_FAIL })
}
