//! Offline comparators. An oracle's loss can only sit above the true
//! infimum over its class, so regret measured against it never exceeds the
//! true regret; a certificate that covers the true regret covers this one.

use crate::error::{domain, structural, Result};
use crate::losses::{Loss, LossKind};
use crate::potentials::{pf_regret_bound, ParamFreeConfig};
use crate::stat_core::{Instance, Statistic, Trajectory};
use crate::symlin::{nuclear_projection, Mat};

use super::Sequence;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComparatorClass {
    /// {W : ‖W‖_Σ ≤ r}
    NuclearBall(f64),
    /// {w : ‖w‖₂ ≤ r}
    L2Ball(f64),
    /// {w : ‖w‖_∞ ≤ r}
    LinfBall(f64),
}

impl ComparatorClass {
    pub fn radius(&self) -> f64 {
        match self {
            ComparatorClass::NuclearBall(r) | ComparatorClass::L2Ball(r) | ComparatorClass::LinfBall(r) => *r,
        }
    }

    fn project(&self, w: &Instance) -> Result<Instance> {
        match (self, w) {
            (ComparatorClass::NuclearBall(r), Instance::Matrix(m)) => Ok(Instance::Matrix(nuclear_projection(m, *r)?)),
            (ComparatorClass::NuclearBall(_), _) => structural("nuclear ball needs matrix instances"),
            (ComparatorClass::L2Ball(r), _) => {
                let nw = w.norm2();
                if nw <= *r {
                    return Ok(w.clone());
                }
                Ok(scale(w, r / nw))
            }
            (ComparatorClass::LinfBall(r), _) => Ok(map_coords(w, |v| v.clamp(-r, *r))),
        }
    }
}

fn map_coords(w: &Instance, f: impl Fn(f64) -> f64) -> Instance {
    match w {
        Instance::Vector(v) => Instance::Vector(v.iter().map(|a| f(*a)).collect()),
        Instance::Matrix(m) => {
            Instance::Matrix(Mat::from_vec(m.rows(), m.cols(), m.data().iter().map(|a| f(*a)).collect()).expect("finite"))
        }
    }
}

fn scale(w: &Instance, s: f64) -> Instance {
    map_coords(w, |v| s * v)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub iters: usize,
    /// Step at iteration k is step_scale·r/√k on the averaged subgradient.
    pub step_scale: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { iters: 2000, step_scale: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub comparator: Instance,
    /// Total loss Σ ℓ(⟨W, x_t⟩, y_t) of the comparator.
    pub loss: f64,
}

/// Sparse rows so indicator sequences cost O(1) per round.
struct Sparse {
    idx: Vec<Vec<(usize, f64)>>,
}

impl Sparse {
    fn new(seq: &Sequence) -> Self {
        let idx = seq
            .iter()
            .map(|(x, _)| x.coords().iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect())
            .collect();
        Sparse { idx }
    }

    fn dot(&self, t: usize, w: &[f64]) -> f64 {
        self.idx[t].iter().map(|(i, v)| w[*i] * v).sum()
    }
}

/// Σ ℓ(⟨w, x_t⟩, y_t).
pub fn linear_loss(seq: &Sequence, loss: &Loss, w: &Instance) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in seq {
        total += loss.value(w.inner(x)?, *y);
    }
    Ok(total)
}

/// ⟨w, x_t⟩ for each round.
pub fn comparator_predictions(seq: &Sequence, w: &Instance) -> Result<Vec<f64>> {
    seq.iter().map(|(x, _)| w.inner(x)).collect()
}

/// Projected subgradient descent on the average loss from `init` (zero when
/// None); returns the best iterate seen.
pub fn comparator_oracle(
    class: ComparatorClass,
    seq: &Sequence,
    loss: &Loss,
    opts: &OracleOptions,
    init: Option<&Instance>,
) -> Result<OracleResult> {
    if opts.iters == 0 {
        return domain("oracle needs at least one iteration");
    }
    let Some((x0, _)) = seq.first() else {
        let comparator = init.cloned().unwrap_or(Instance::Vector(Vec::new()));
        return Ok(OracleResult { comparator, loss: 0.0 });
    };
    let sparse = Sparse::new(seq);
    let n = seq.len() as f64;
    let r = class.radius();
    let mut w = class.project(&init.cloned().unwrap_or_else(|| x0.zero_like()))?;
    let objective_and_grad = |w: &Instance| -> (f64, Vec<f64>) {
        let wc = w.coords();
        let mut g = vec![0.0; wc.len()];
        let mut total = 0.0;
        for (t, (_, y)) in seq.iter().enumerate() {
            let p = sparse.dot(t, wc);
            total += loss.value(p, *y);
            let d = loss.subgradient(p, *y) / n;
            if d != 0.0 {
                for (i, v) in &sparse.idx[t] {
                    g[*i] += d * v;
                }
            }
        }
        (total, g)
    };
    let (mut best_loss, mut g) = objective_and_grad(&w);
    let mut best = w.clone();
    for k in 1..=opts.iters {
        if r == 0.0 {
            break;
        }
        let step = opts.step_scale * r / (k as f64).sqrt();
        let mut next = w.coords().to_vec();
        next.iter_mut().zip(&g).for_each(|(a, b)| *a -= step * b);
        let cand = match &w {
            Instance::Vector(_) => Instance::Vector(next),
            Instance::Matrix(m) => Instance::Matrix(Mat::from_vec(m.rows(), m.cols(), next)?),
        };
        w = class.project(&cand)?;
        let (val, grad) = objective_and_grad(&w);
        if val < best_loss {
            best_loss = val;
            best = w.clone();
        }
        g = grad;
    }
    Ok(OracleResult { comparator: best, loss: best_loss })
}

/// Lower weighted median of (value, weight) pairs with positive total weight.
pub fn weighted_median(points: &[(f64, f64)]) -> Result<f64> {
    let total: f64 = points.iter().map(|(_, w)| w).sum();
    if points.is_empty() || !(total > 0.0) {
        return domain("weighted median needs positive total weight");
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (v, w) in &sorted {
        acc += w;
        if acc >= 0.5 * total {
            return Ok(*v);
        }
    }
    Ok(sorted[sorted.len() - 1].0)
}

/// Exact minimizer of Σ|w·x_t - y_t| over w ∈ [-r, r] for scalar instances,
/// by evaluating every breakpoint y_t/x_t and both ends.
pub fn scan_1d(seq: &Sequence, loss: &Loss, r: f64) -> Result<(f64, f64)> {
    if loss.kind != LossKind::Absolute && loss.kind != LossKind::Hinge {
        return domain("the 1-D scan needs a piecewise-linear loss");
    }
    let mut xs = Vec::with_capacity(seq.len());
    for (x, y) in seq {
        let v = x.as_vector()?;
        if v.len() != 1 {
            return structural("the 1-D scan needs scalar instances");
        }
        xs.push((v[0], *y));
    }
    let mut cands = vec![-r, 0.0, r];
    cands.extend(xs.iter().filter(|(x, _)| *x != 0.0).map(|(x, y)| (y / x).clamp(-r, r)));
    let mut best = (0.0, f64::INFINITY);
    for w in cands {
        let v: f64 = xs.iter().map(|(x, y)| loss.value(w * x, *y)).sum();
        if v < best.1 || (v == best.1 && w < best.0) {
            best = (w, v);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    /// ‖w‖_* of the comparator.
    pub radius: f64,
    pub comparator: Vec<f64>,
    pub regret: f64,
    pub bound: f64,
}

/// Regret against w = ρ·u for each radius ρ, where u has unit dual norm and
/// maximizes ⟨u, -Σδ_t x_t⟩, next to 𝒜(w) for the parameter-free potential.
pub fn pf_comparator_grid(
    cfg: &ParamFreeConfig,
    traj: &Trajectory,
    loss: &Loss,
    radii: &[f64],
) -> Result<Vec<GridPoint>> {
    let dir = match traj.final_zeta() {
        Statistic::ScalarVec { x, .. } => cfg.norm.dual_direction(&x.iter().map(|v| -v).collect::<Vec<_>>()),
        other => return structural(format!("param-free trajectory has a {} statistic", other.tag())),
    };
    let cum = traj.cumulative_loss();
    let seq: Sequence = traj.rounds.iter().map(|r| (r.x.clone(), r.y)).collect();
    let mut out = Vec::with_capacity(radii.len());
    for &rho in radii {
        let w: Vec<f64> = dir.iter().map(|v| rho * v).collect();
        let comp = linear_loss(&seq, loss, &Instance::Vector(w.clone()))?;
        let radius = cfg.norm.dual_norm(&w);
        out.push(GridPoint { radius, comparator: w, regret: cum - comp, bound: pf_regret_bound(cfg, radius) });
    }
    Ok(out)
}

/// `count` log-spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}
