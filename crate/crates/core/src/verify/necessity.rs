//! The lower-bound side: against outcomes y_t = ε_t, no learner can beat
//! E[V] on average, and a learner that claims the bound must keep
//! regret - 𝒜 ≤ 0 on every sign path.
//!
//! The comparator class is the nuclear ball of radius r ≤ 1 with absolute
//! loss, instances with ‖X‖_σ ≤ 1. Then |⟨W, X⟩| ≤ 1 and
//! inf_W Σ|⟨W, X_t⟩ - ε_t| = n - r‖Σε_tX_t‖_σ in closed form.

use super::tree::PredictableTree;
use super::CheckReport;
use crate::error::{domain, Result};
use crate::losses::Loss;
use crate::potentials::{MatrixConfig, MatrixPotential};
use crate::stat_core::{accumulate, predict_linearized, Instance, Potential, Statistic};
use crate::symlin::{dilation_square, spectral_norm, sym_spectral_norm, Mat, SymMat};

pub trait Learner: Clone {
    fn name(&self) -> String;
    fn predict(&self, t: usize, x: &Instance) -> Result<f64>;
    fn update(&mut self, t: usize, x: &Instance, y_hat: f64, y: f64) -> Result<()>;
}

/// The linearized matrix-potential learner.
#[derive(Clone, Debug)]
pub struct MatrixLearner {
    pot: MatrixPotential,
    zeta: Statistic,
    loss: Loss,
}

impl MatrixLearner {
    pub fn new(cfg: MatrixConfig) -> Self {
        let pot = MatrixPotential::new(cfg);
        let zeta = pot.zero();
        let loss = Loss::absolute(pot.cfg.b);
        MatrixLearner { pot, zeta, loss }
    }
}

impl Learner for MatrixLearner {
    fn name(&self) -> String {
        self.pot.name()
    }

    fn predict(&self, t: usize, x: &Instance) -> Result<f64> {
        predict_linearized(&self.pot, t, &self.zeta, x, self.pot.cfg.b)
    }

    fn update(&mut self, _t: usize, x: &Instance, y_hat: f64, y: f64) -> Result<()> {
        let delta = self.loss.subgradient(y_hat, y);
        self.zeta = accumulate(&self.zeta, x, y_hat, delta, &self.pot)?;
        Ok(())
    }
}

/// Always predicts the same value; with value B it claims a bound it cannot keep.
#[derive(Clone, Debug)]
pub struct ConstantLearner {
    pub value: f64,
}

impl Learner for ConstantLearner {
    fn name(&self) -> String {
        format!("constant({})", self.value)
    }

    fn predict(&self, _t: usize, _x: &Instance) -> Result<f64> {
        Ok(self.value)
    }

    fn update(&mut self, _t: usize, _x: &Instance, _y_hat: f64, _y: f64) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct NecessityOutcome {
    /// E[regret - 𝒜] over all sign paths.
    pub expected_gap: f64,
    /// E[V] with V = r‖Σε_tX_t‖_σ - 𝒜, the best any learner can do on average.
    pub expected_v: f64,
    /// max over paths of regret - 𝒜.
    pub worst_gap: f64,
    /// Sign bits of the path attaining `worst_gap`.
    pub worst_path: usize,
    /// Checks E[gap] ≥ E[V], E[V] ≤ 0 and worst gap ≤ 0, each within tol.
    pub report: CheckReport,
}

struct Acc {
    gap: f64,
    v: f64,
    worst: f64,
    worst_path: usize,
}

/// Plays `learner` against y_t = ε_t on every path of `tree` with the bound
/// 𝒜 = ½ηL²r‖Σℳ(X_t)‖_σ + c/η of `cfg`.
pub fn check_necessity<Lr: Learner>(
    learner: &Lr,
    cfg: &MatrixConfig,
    tree: &PredictableTree<Mat>,
    tol: f64,
) -> Result<NecessityOutcome> {
    let n = tree.depth();
    if n > 12 {
        return domain(format!("necessity check enumerates 2^n paths; n = {n} > 12"));
    }
    if !(cfg.r <= 1.0 && cfg.b >= 1.0 && cfg.l >= 1.0) {
        return domain("necessity check needs r ≤ 1, B ≥ 1 and L ≥ 1 for the closed-form comparator");
    }
    let loss = Loss::absolute(cfg.b);
    let d = cfg.d1 + cfg.d2;
    let mut acc = Acc { gap: 0.0, v: 0.0, worst: f64::NEG_INFINITY, worst_path: 0 };

    #[allow(clippy::too_many_arguments)]
    fn go<Lr: Learner>(
        tree: &PredictableTree<Mat>,
        cfg: &MatrixConfig,
        loss: &Loss,
        level: usize,
        prefix: usize,
        learner: Lr,
        cum_loss: f64,
        s: Mat,
        m: SymMat,
        weight: f64,
        acc: &mut Acc,
    ) -> Result<()> {
        let n = tree.depth();
        if level == n {
            let sn = cfg.r * spectral_norm(&s)?;
            let bound = 0.5 * cfg.eta * cfg.l * cfg.l * cfg.r * sym_spectral_norm(&m)? + cfg.c / cfg.eta;
            let regret = cum_loss - (n as f64 - sn);
            let gap = regret - bound;
            acc.gap += weight * gap;
            acc.v += weight * (sn - bound);
            if gap > acc.worst {
                acc.worst = gap;
                acc.worst_path = prefix;
            }
            return Ok(());
        }
        let x = tree.node(level, prefix);
        if spectral_norm(x)? > 1.0 + 1e-12 {
            return domain(format!("tree node at level {level} has spectral norm above 1"));
        }
        let inst = Instance::Matrix(x.clone());
        let t = level + 1;
        let y_hat = learner.predict(t, &inst)?;
        let mut m2 = m.clone();
        m2.axpy(1.0, &dilation_square(x))?;
        for (eps, bit) in [(1.0, 1usize << level), (-1.0, 0)] {
            let mut next = learner.clone();
            next.update(t, &inst, y_hat, eps)?;
            let mut s2 = s.clone();
            s2.axpy(eps, x)?;
            go(
                tree,
                cfg,
                loss,
                level + 1,
                prefix | bit,
                next,
                cum_loss + loss.value(y_hat, eps),
                s2,
                m2.clone(),
                0.5 * weight,
                acc,
            )?;
        }
        Ok(())
    }

    go(tree, cfg, &loss, 0, 0, learner.clone(), 0.0, Mat::zeros(cfg.d1, cfg.d2), SymMat::zeros(d), 1.0, &mut acc)?;

    let mut report = CheckReport::new(format!("necessity/{}", learner.name()), tol);
    let (eg, ev) = (acc.gap, acc.v);
    report.record(ev - eg, || format!("E[gap]={eg:.6e} < E[V]={ev:.6e}"));
    report.record(ev, || format!("E[V]={ev:.6e} > 0"));
    let (wg, wp) = (acc.worst, acc.worst_path);
    report.record(wg, || format!("path={wp:0n$b} regret-A={wg:.6e}", n = n.max(1)));
    Ok(NecessityOutcome { expected_gap: eg, expected_v: ev, worst_gap: wg, worst_path: wp, report })
}
