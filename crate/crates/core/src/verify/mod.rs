//! Numerical certification of the Burkholder properties and the martingale
//! inequalities they imply.
//!
//! Every check is seeded. Trial k draws from its own ChaCha stream, so a
//! witness `trial=k` replays with the `*_replay` functions.

mod necessity;
mod tree;

pub use necessity::{check_necessity, ConstantLearner, Learner, MatrixLearner, NecessityOutcome};
pub use tree::{
    brute_force_sup_ev, check_matrix_khintchine, check_mgf_bound, check_supermartingale,
    expected_bound, khintchine_sides, mgf_expectation, path_expectation, random_potential_tree,
    random_unit_ball_matrix, search_trees, PredictableTree, TreeSearch, MAX_BRUTE_DEPTH,
};

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::stat_core::{random_statistic, Potential, Statistic};

pub const TOL_ANALYTIC: f64 = 1e-8;
pub const TOL_EIGEN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub checks: usize,
    /// Largest value of the checked quantity; the check passes iff ≤ tol.
    pub max_violation: f64,
    pub witness: Option<String>,
    pub tol: f64,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, tol: f64) -> Self {
        CheckReport { name: name.into(), checks: 0, max_violation: f64::NEG_INFINITY, witness: None, tol }
    }

    pub fn passed(&self) -> bool {
        self.max_violation <= self.tol
    }

    /// Records one checked value. The witness closure runs only when the
    /// value is a new maximum.
    pub fn record(&mut self, value: f64, witness: impl FnOnce() -> String) {
        self.checks += 1;
        let value = if value.is_nan() { f64::INFINITY } else { value };
        if value > self.max_violation {
            self.max_violation = value;
            self.witness = Some(witness());
        }
    }

    /// Folds another report into this one; order of merging does not matter.
    pub fn merge(&mut self, other: &CheckReport) {
        self.checks += other.checks;
        if other.max_violation > self.max_violation {
            self.max_violation = other.max_violation;
            self.witness = other.witness.clone();
        }
        self.tol = self.tol.min(other.tol);
    }

    pub const CSV_HEADER: &'static str = "name,status,checks,max_violation,tol,witness";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},\"{}\"",
            self.name,
            if self.passed() { "pass" } else { "fail" },
            self.checks,
            self.max_violation,
            self.tol,
            self.witness.as_deref().unwrap_or("").replace('"', "'")
        )
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: checks={} max={:.3e} tol={:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            self.max_violation,
            self.tol
        )?;
        if !self.passed() {
            if let Some(w) = &self.witness {
                write!(f, " witness[{w}]")?;
            }
        }
        Ok(())
    }
}

/// Mean-zero law on {a, -b} with masses b/(a+b) and a/(a+b).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPointDist {
    pub a: f64,
    pub b: f64,
}

impl TwoPointDist {
    pub fn new(a: f64, b: f64, l: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a <= l && b <= l) {
            return domain(format!("two-point support ({a}, -{b}) must lie in (0, {l}]"));
        }
        Ok(TwoPointDist { a, b })
    }

    pub fn rademacher(l: f64) -> Self {
        TwoPointDist { a: l, b: l }
    }

    /// Mass sits on ±L a quarter of the time each, so both the symmetric and
    /// the lopsided extremes get exercised.
    pub fn sample(l: f64, rng: &mut dyn RngCore) -> Self {
        let draw = |rng: &mut dyn RngCore| if rng.random_bool(0.25) { l } else { l * (1.0 - rng.random::<f64>()) };
        let a = draw(rng);
        let b = draw(rng);
        TwoPointDist { a, b }
    }

    pub fn support(&self) -> [f64; 2] {
        [self.a, -self.b]
    }

    pub fn probs(&self) -> [f64; 2] {
        let s = self.a + self.b;
        [self.b / s, self.a / s]
    }

    pub fn mean(&self) -> f64 {
        let [p, q] = self.probs();
        p * self.a - q * self.b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum P3Mode {
    /// α = ±L; sufficient when U is convex in α.
    Rademacher,
    /// Two-point mean-zero laws, the extreme points of all mean-zero laws
    /// on [-L, L]. The checked inequality is linear in the law.
    TwoPoint,
}

impl P3Mode {
    pub fn name(&self) -> &'static str {
        match self {
            P3Mode::Rademacher => "rademacher",
            P3Mode::TwoPoint => "two_point",
        }
    }
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

/// 1°: U_0(0) ≤ tol.
pub fn check_p1(p: &dyn Potential, tol: f64) -> Result<CheckReport> {
    let mut rep = CheckReport::new(format!("p1/{}", p.name()), tol);
    let u0 = p.eval(0, &p.zero())?;
    rep.record(u0, || format!("U(0) = {u0:e}"));
    Ok(rep)
}

/// Round index and a statistic reachable before that round.
fn sample_state(p: &dyn Potential, b: f64, max_steps: usize, rng: &mut dyn RngCore) -> Result<(usize, Statistic)> {
    match p.horizon() {
        Some(n) => {
            let t = rng.random_range(1..=n);
            Ok((t, random_statistic(p, t - 1, b, rng)?))
        }
        None => {
            let steps = rng.random_range(0..=max_steps);
            Ok((steps + 1, random_statistic(p, steps, b, rng)?))
        }
    }
}

const MAX_STEPS: usize = 30;

/// V(τ) - U(τ) for one seeded draw; U is read at the horizon for
/// time-varying families.
pub fn p2_replay(p: &dyn Potential, b: f64, seed: u64, trial: usize) -> Result<f64> {
    let mut rng = trial_rng(seed, trial);
    let (_, tau) = match p.horizon() {
        Some(n) => {
            let steps = rng.random_range(0..=n);
            (n, random_statistic(p, steps, b, &mut rng)?)
        }
        None => sample_state(p, b, MAX_STEPS, &mut rng)?,
    };
    let t = p.horizon().unwrap_or(0);
    Ok(p.bound(&tau)? - p.eval(t, &tau)?)
}

/// 2°: V ≤ U on reachable statistics.
pub fn check_p2(p: &dyn Potential, b: f64, trials: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let mut rep = CheckReport::new(format!("p2/{}", p.name()), tol);
    for k in 0..trials {
        let v = p2_replay(p, b, seed, k)?;
        rep.record(v, || format!("trial={k} seed={seed} V-U={v:e}"));
    }
    Ok(rep)
}

/// E U_t(τ + T(z, α)) - U_{t-1}(τ) for one seeded draw, with a witness.
pub fn p3_replay(p: &dyn Potential, mode: P3Mode, b: f64, seed: u64, trial: usize) -> Result<(f64, String)> {
    let mut rng = trial_rng(seed, trial);
    let l = p.lipschitz();
    let (t, tau) = sample_state(p, b, MAX_STEPS, &mut rng)?;
    let x = p.sample_instance(&mut rng);
    let y_hat = rng.random_range(-b..=b);
    let dist = match mode {
        P3Mode::Rademacher => TwoPointDist::rademacher(l),
        P3Mode::TwoPoint => TwoPointDist::sample(l, &mut rng),
    };
    let vals = p.eval_increments(t, &tau, &x, y_hat, &dist.support())?;
    let [pa, pb] = dist.probs();
    let before = p.eval(t - 1, &tau)?;
    let v = pa * vals[0] + pb * vals[1] - before;
    let w = format!(
        "trial={trial} seed={seed} t={t} y_hat={y_hat:.6} support=({:.6},{:.6}) U_prev={before:.6e} excess={v:e}",
        dist.a, -dist.b
    );
    Ok((v, w))
}

/// 3° (two_point) or 3′ (rademacher).
pub fn check_p3(
    p: &dyn Potential,
    mode: P3Mode,
    b: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    let mut rep = CheckReport::new(format!("p3-{}/{}", mode.name(), p.name()), tol);
    for k in 0..trials {
        let (v, w) = p3_replay(p, mode, b, seed, k)?;
        rep.record(v, || w);
    }
    Ok(rep)
}

/// Runs 3° in the mode the potential supports: two-point always, and the
/// Rademacher form as well when U is convex in α.
pub fn check_p3_auto(p: &dyn Potential, b: f64, trials: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let mut rep = check_p3(p, P3Mode::TwoPoint, b, trials, seed, tol)?;
    if p.convex_in_delta() {
        rep.merge(&check_p3(p, P3Mode::Rademacher, b, trials, seed.wrapping_add(1), tol)?);
    }
    rep.name = format!("p3/{}", p.name());
    Ok(rep)
}
