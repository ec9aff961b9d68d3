//! Exact expectations over Rademacher sign trees.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{trial_rng, CheckReport};
use crate::error::{domain, Result};
use crate::stat_core::{Instance, Potential, Statistic};
use crate::symlin::{dilation_square, spectral_norm, sym_spectral_norm, Mat, SymMat};

pub const MAX_BRUTE_DEPTH: usize = 14;

/// Node values of a depth-n binary tree. Level t (0-based) holds 2^t nodes
/// indexed by the signs ε_1..ε_t read as bits (bit i set ⇔ ε_{i+1} = +1),
/// so the value used in round t+1 only sees earlier signs.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictableTree<T> {
    levels: Vec<Vec<T>>,
    pub seed: u64,
}

impl<T: Clone> PredictableTree<T> {
    pub fn generate(n: usize, seed: u64, mut gen: impl FnMut(usize, &mut ChaCha8Rng) -> T) -> Self {
        let mut rng = trial_rng(seed, 0);
        let levels = (0..n).map(|t| (0..1usize << t).map(|_| gen(t, &mut rng)).collect()).collect();
        PredictableTree { levels, seed }
    }

    /// The tree that plays `values[t]` in round t+1 whatever the signs.
    pub fn fixed(values: &[T]) -> Self {
        let levels = values.iter().enumerate().map(|(t, v)| vec![v.clone(); 1usize << t]).collect();
        PredictableTree { levels, seed: 0 }
    }
}

impl<T> PredictableTree<T> {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn node(&self, level: usize, prefix: usize) -> &T {
        &self.levels[level][prefix]
    }

    pub fn node_mut(&mut self, level: usize, prefix: usize) -> &mut T {
        &mut self.levels[level][prefix]
    }

    pub fn node_count(&self) -> usize {
        (1usize << self.depth()) - 1
    }

    /// Maps a flat index in 0..node_count to (level, prefix).
    pub fn locate(&self, mut k: usize) -> (usize, usize) {
        let mut level = 0;
        while k >= 1usize << level {
            k -= 1usize << level;
            level += 1;
        }
        (level, k)
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> PredictableTree<U> {
        PredictableTree {
            levels: self.levels.iter().map(|l| l.iter().map(&f).collect()).collect(),
            seed: self.seed,
        }
    }
}

/// Exact average of `leaf` over all 2ⁿ sign paths, threading a state
/// through `step(state, node, ε)`. Returns one average per leaf output.
pub fn path_expectation<T, S>(
    tree: &PredictableTree<T>,
    init: S,
    step: &dyn Fn(&S, &T, f64) -> Result<S>,
    leaf: &dyn Fn(&S) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    fn go<T, S>(
        tree: &PredictableTree<T>,
        level: usize,
        prefix: usize,
        state: &S,
        step: &dyn Fn(&S, &T, f64) -> Result<S>,
        leaf: &dyn Fn(&S) -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        if level == tree.depth() {
            return leaf(state);
        }
        let node = tree.node(level, prefix);
        let plus = go(tree, level + 1, prefix | (1 << level), &step(state, node, 1.0)?, step, leaf)?;
        let minus = go(tree, level + 1, prefix, &step(state, node, -1.0)?, step, leaf)?;
        Ok(plus.iter().zip(&minus).map(|(a, b)| 0.5 * (a + b)).collect())
    }
    go(tree, 0, 0, &init, step, leaf)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeSearch {
    /// Best of k independent random trees.
    Random(usize),
    /// One random start, then `steps` single-node resamples kept when the
    /// objective increases.
    CoordinateAscent { steps: usize },
}

/// Searches trees for a large value of `objective`. Returns the best value
/// and tree found; a lower bound on the supremum over trees.
pub fn search_trees<T: Clone>(
    n: usize,
    search: TreeSearch,
    seed: u64,
    gen: &dyn Fn(&mut dyn RngCore) -> T,
    objective: &dyn Fn(&PredictableTree<T>) -> Result<f64>,
) -> Result<(f64, PredictableTree<T>)> {
    let make = |s: u64| PredictableTree::generate(n, s, |_, rng| gen(rng));
    match search {
        TreeSearch::Random(k) => {
            let mut best: Option<(f64, PredictableTree<T>)> = None;
            for i in 0..k.max(1) {
                let tree = make(seed.wrapping_add(i as u64));
                let v = objective(&tree)?;
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, tree));
                }
            }
            Ok(best.expect("at least one tree"))
        }
        TreeSearch::CoordinateAscent { steps } => {
            let mut tree = make(seed);
            let mut best = objective(&tree)?;
            if tree.node_count() == 0 {
                return Ok((best, tree));
            }
            let mut rng = trial_rng(seed, usize::MAX >> 1);
            for _ in 0..steps {
                let (level, prefix) = tree.locate(rng.random_range(0..tree.node_count()));
                let old = std::mem::replace(tree.node_mut(level, prefix), gen(&mut rng));
                let v = objective(&tree)?;
                if v > best {
                    best = v;
                } else {
                    *tree.node_mut(level, prefix) = old;
                }
            }
            Ok((best, tree))
        }
    }
}

/// E V(Σ T(x_t, ŷ_t, ε_t·L)) for one tree of (x, ŷ) nodes.
pub fn expected_bound(p: &dyn Potential, tree: &PredictableTree<(Instance, f64)>) -> Result<f64> {
    let l = p.lipschitz();
    let e = path_expectation(
        tree,
        p.zero(),
        &|z: &Statistic, (x, y), eps| z.add(&p.stat_map(x, *y, eps * l)?),
        &|z| Ok(vec![p.bound(z)?]),
    )?;
    Ok(e[0])
}

/// Searched lower bound on sup over predictable trees of E V(Σ T(z_t, ε_t·L)),
/// with nodes x from the family sampler and ŷ uniform on [-b, b].
pub fn brute_force_sup_ev(
    p: &dyn Potential,
    n: usize,
    search: TreeSearch,
    b: f64,
    seed: u64,
) -> Result<(f64, PredictableTree<(Instance, f64)>)> {
    if n > MAX_BRUTE_DEPTH {
        return domain(format!("exhaustive enumeration limited to n ≤ {MAX_BRUTE_DEPTH}, got {n}"));
    }
    let gen = |rng: &mut dyn RngCore| (p.sample_instance(rng), rng.random_range(-b..=b));
    search_trees(n, search, seed, &gen, &|tree| expected_bound(p, tree))
}

/// (E‖Σε_tX_t‖_σ, √(2·E‖Σℳ(X_t)‖_σ·log(d1+d2))) computed over all paths.
pub fn khintchine_sides(tree: &PredictableTree<Mat>) -> Result<(f64, f64)> {
    let Some(first) = tree.levels.first().and_then(|l| l.first()) else {
        return Ok((0.0, 0.0));
    };
    let (d1, d2) = (first.rows(), first.cols());
    let e = path_expectation(
        tree,
        (Mat::zeros(d1, d2), SymMat::zeros(d1 + d2)),
        &|(s, m): &(Mat, SymMat), x: &Mat, eps| {
            let mut s = s.clone();
            s.axpy(eps, x)?;
            let mut m = m.clone();
            m.axpy(1.0, &dilation_square(x))?;
            Ok((s, m))
        },
        &|(s, m)| Ok(vec![spectral_norm(s)?, sym_spectral_norm(m)?]),
    )?;
    Ok((e[0], (2.0 * e[1] * ((d1 + d2) as f64).ln()).sqrt()))
}

/// Matrix with Gaussian direction and Frobenius norm uniform in [0, 1]
/// (exactly 1 a third of the time); spectral norm is at most 1.
pub fn random_unit_ball_matrix(d1: usize, d2: usize, rng: &mut dyn RngCore) -> Mat {
    let g: Vec<f64> = (0..d1 * d2).map(|_| rng.sample(StandardNormal)).collect();
    let nf = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let r = if rng.random_bool(1.0 / 3.0) { 1.0 } else { rng.random::<f64>() };
    Mat::from_vec(d1, d2, g.iter().map(|v| r * v / nf).collect()).expect("finite entries")
}

/// E‖Σε_tX_t‖_σ ≤ √(2·E‖Σℳ‖_σ·log(d1+d2)) on `trees` random trees; the
/// checked value is LHS - RHS.
pub fn check_matrix_khintchine(n: usize, d1: usize, d2: usize, trees: usize, seed: u64) -> Result<CheckReport> {
    if n > 12 || d1.max(d2) > 6 || d1 == 0 || d2 == 0 {
        return domain(format!("khintchine check needs n ≤ 12 and 1 ≤ d ≤ 6, got n={n}, {d1}x{d2}"));
    }
    let mut rep = CheckReport::new(format!("khintchine/n={n},{d1}x{d2}"), 1e-9);
    for k in 0..trees {
        let s = seed.wrapping_add(k as u64);
        let tree = PredictableTree::generate(n, s, |_, rng| random_unit_ball_matrix(d1, d2, rng));
        let (lhs, rhs) = khintchine_sides(&tree)?;
        rep.record(lhs - rhs, || format!("tree_seed={s} lhs={lhs:.6} rhs={rhs:.6}"));
    }
    Ok(rep)
}

/// E exp(‖Σε_tx_t‖₂²/(2βn)) over all paths.
pub fn mgf_expectation(tree: &PredictableTree<Vec<f64>>, beta: f64) -> Result<f64> {
    let n = tree.depth();
    if n == 0 {
        return Ok(1.0);
    }
    let d = tree.node(0, 0).len();
    let e = path_expectation(
        tree,
        vec![0.0; d],
        &|s: &Vec<f64>, x: &Vec<f64>, eps| Ok(s.iter().zip(x).map(|(a, b)| a + eps * b).collect()),
        &|s| Ok(vec![(s.iter().map(|v| v * v).sum::<f64>() / (2.0 * beta * n as f64)).exp()]),
    )?;
    Ok(e[0])
}

fn random_ball_vector(d: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let ng = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let r = if rng.random_bool(0.5) { 1.0 } else { rng.random::<f64>() };
    g.iter().map(|v| r * v / ng).collect()
}

/// E exp(‖Σε_tx_t‖²/(2βn)) ≤ √n on `trees` random trees plus the constant
/// tree x_t = e₁. The checked value is E/√n - 1.
pub fn check_mgf_bound(n: usize, d: usize, beta: f64, trees: usize, seed: u64) -> Result<CheckReport> {
    if n == 0 || n > MAX_BRUTE_DEPTH || d == 0 || d > 4 {
        return domain(format!("mgf check needs 1 ≤ n ≤ {MAX_BRUTE_DEPTH} and 1 ≤ d ≤ 4, got n={n}, d={d}"));
    }
    let bound = (n as f64).sqrt();
    let mut rep = CheckReport::new(format!("mgf/n={n},d={d}"), 1e-9);
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let constant = mgf_expectation(&PredictableTree::fixed(&vec![e1; n]), beta)?;
    rep.record(constant / bound - 1.0, || format!("constant tree E={constant:.6} sqrt(n)={bound:.6}"));
    for k in 0..trees {
        let s = seed.wrapping_add(k as u64);
        let tree = PredictableTree::generate(n, s, |_, rng| random_ball_vector(d, rng));
        let e = mgf_expectation(&tree, beta)?;
        rep.record(e / bound - 1.0, || format!("tree_seed={s} E={e:.6} sqrt(n)={bound:.6}"));
    }
    Ok(rep)
}

/// Random (x, ŷ) tree drawn from the family sampler.
pub fn random_potential_tree(p: &dyn Potential, n: usize, b: f64, seed: u64) -> PredictableTree<(Instance, f64)> {
    PredictableTree::generate(n, seed, |_, rng| (p.sample_instance(rng), rng.random_range(-b..=b)))
}

/// At every node, ½[U_t(ζ + T(z, L)) + U_t(ζ + T(z, -L))] ≤ U_{t-1}(ζ),
/// exact over both children.
pub fn check_supermartingale(
    p: &dyn Potential,
    tree: &PredictableTree<(Instance, f64)>,
    tol: f64,
) -> Result<CheckReport> {
    let mut rep = CheckReport::new(format!("supermartingale/{}", p.name()), tol);
    let l = p.lipschitz();
    fn go(
        p: &dyn Potential,
        tree: &PredictableTree<(Instance, f64)>,
        level: usize,
        prefix: usize,
        zeta: &Statistic,
        l: f64,
        rep: &mut CheckReport,
    ) -> Result<()> {
        if level == tree.depth() {
            return Ok(());
        }
        let t = level + 1;
        let (x, y_hat) = tree.node(level, prefix);
        let before = p.eval(t - 1, zeta)?;
        let up = zeta.add(&p.stat_map(x, *y_hat, l)?)?;
        let down = zeta.add(&p.stat_map(x, *y_hat, -l)?)?;
        let v = 0.5 * (p.eval(t, &up)? + p.eval(t, &down)?) - before;
        rep.record(v, || format!("tree_seed={} t={t} prefix={prefix:b} excess={v:e}", tree.seed));
        go(p, tree, level + 1, prefix | (1 << level), &up, l, rep)?;
        go(p, tree, level + 1, prefix, &down, l, rep)
    }
    go(p, tree, 0, 0, &p.zero(), l, &mut rep)?;
    Ok(rep)
}
