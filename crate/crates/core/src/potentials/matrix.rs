//! Log-trace-exp potential for online prediction with matrix side
//! information against a nuclear-norm ball.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::losses::Loss;
use crate::stat_core::{run_online, Instance, Potential, Statistic, Strategy, Trajectory};
use crate::symlin::{
    dilation, dilation_square, log_trace_exp, sym_eigvals, sym_spectral_norm, Mat, SymMat,
};

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixConfig {
    pub d1: usize,
    pub d2: usize,
    pub eta: f64,
    pub r: f64,
    pub l: f64,
    pub c: f64,
    pub b: f64,
}

impl MatrixConfig {
    pub fn new(d1: usize, d2: usize, eta: f64, r: f64, l: f64, c: f64, b: f64) -> Result<Self> {
        let cfg = MatrixConfig::unchecked(d1, d2, eta, r, l, c, b);
        cfg.validate()?;
        Ok(cfg)
    }

    /// c = r·log(d1+d2).
    pub fn minimal(d1: usize, d2: usize, eta: f64, r: f64, l: f64, b: f64) -> Result<Self> {
        MatrixConfig::new(d1, d2, eta, r, l, r * ((d1 + d2) as f64).ln(), b)
    }

    /// Skips the invariant check; for negative controls.
    pub fn unchecked(d1: usize, d2: usize, eta: f64, r: f64, l: f64, c: f64, b: f64) -> Self {
        MatrixConfig { d1, d2, eta, r, l, c, b }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 || self.d2 == 0 {
            return domain("matrix dimensions must be positive");
        }
        if !(self.eta > 0.0 && self.l > 0.0 && self.b > 0.0 && self.r >= 0.0) {
            return domain("eta, L and B must be positive and r nonnegative");
        }
        let need = self.r * self.dim_log();
        if !(self.c >= need * (1.0 - 1e-12)) {
            return domain(format!(
                "invariant c ≥ r·log(d1+d2) violated: c = {}, r·log(d1+d2) = {need}",
                self.c
            ));
        }
        Ok(())
    }

    pub fn dim_log(&self) -> f64 {
        ((self.d1 + self.d2) as f64).ln()
    }

    pub fn with_eta(&self, eta: f64) -> MatrixConfig {
        MatrixConfig { eta, ..self.clone() }
    }

    /// ηH - ½η²L²M
    fn exponent(&self, h: &SymMat, m: &SymMat) -> Result<SymMat> {
        h.lincomb(self.eta, m, -0.5 * self.eta * self.eta * self.l * self.l)
    }
}

/// a + (r/η)·log tr exp(ηH - ½η²L²M) - c/η
#[allow(non_snake_case)]
pub fn mp_U(cfg: &MatrixConfig, a: f64, h: &SymMat, m: &SymMat) -> Result<f64> {
    check_dims(cfg, h, m)?;
    Ok(a + cfg.r / cfg.eta * log_trace_exp(&cfg.exponent(h, m)?)? - cfg.c / cfg.eta)
}

/// a + r·λ₁(H - ½ηL²M) - c/η
#[allow(non_snake_case)]
pub fn mp_V(cfg: &MatrixConfig, a: f64, h: &SymMat, m: &SymMat) -> Result<f64> {
    check_dims(cfg, h, m)?;
    let s = h.lincomb(1.0, m, -0.5 * cfg.eta * cfg.l * cfg.l)?;
    Ok(a + cfg.r * sym_eigvals(&s)?[0] - cfg.c / cfg.eta)
}

fn check_dims(cfg: &MatrixConfig, h: &SymMat, m: &SymMat) -> Result<()> {
    let n = cfg.d1 + cfg.d2;
    if h.dim() != n || m.dim() != n {
        return Err(Error::Structural(format!(
            "expected {n}x{n} statistics, got {} and {}",
            h.dim(),
            m.dim()
        )));
    }
    Ok(())
}

fn lte_branch(cfg: &MatrixConfig, h: &SymMat, m: &SymMat, x: &Mat, sigma: f64) -> Result<f64> {
    let mut s = cfg.exponent(h, m)?;
    s.axpy(cfg.eta * sigma * cfg.l, &dilation(x))?;
    s.axpy(-0.5 * cfg.eta * cfg.eta * cfg.l * cfg.l, &dilation_square(x))?;
    log_trace_exp(&s).map_err(|e| Error::Numeric(format!("{e} in prediction branch {sigma:+}")))
}

/// clamp(-(r/(2Lη))·[lte(+) - lte(-)], -B, B) with
/// lte(σ) = log tr exp(ησL·𝒽(X) + ηH - ½η²L²(M + ℳ(X))).
pub fn mp_predict(cfg: &MatrixConfig, hsum: &SymMat, msum: &SymMat, x_t: &Mat) -> Result<f64> {
    check_dims(cfg, hsum, msum)?;
    if x_t.rows() != cfg.d1 || x_t.cols() != cfg.d2 {
        return Err(Error::Structural(format!(
            "instance is {}x{}, expected {}x{}",
            x_t.rows(),
            x_t.cols(),
            cfg.d1,
            cfg.d2
        )));
    }
    let plus = lte_branch(cfg, hsum, msum, x_t, 1.0)?;
    let minus = lte_branch(cfg, hsum, msum, x_t, -1.0)?;
    Ok((-(cfg.r / (2.0 * cfg.l * cfg.eta)) * (plus - minus)).clamp(-cfg.b, cfg.b))
}

/// ½ηL²r‖Σℳ(X_t)‖_σ + c/η
pub fn matrix_regret_bound(cfg: &MatrixConfig, msum_norm: f64) -> f64 {
    0.5 * cfg.eta * cfg.l * cfg.l * cfg.r * msum_norm + cfg.c / cfg.eta
}

#[derive(Clone, Debug)]
pub struct MatrixPotential {
    pub cfg: MatrixConfig,
}

impl MatrixPotential {
    pub fn new(cfg: MatrixConfig) -> Self {
        MatrixPotential { cfg }
    }

    fn parts(zeta: &Statistic) -> Result<(f64, &SymMat, &SymMat)> {
        match zeta {
            Statistic::ScalarSymPsd { a, h, m } => Ok((*a, h, m)),
            other => Err(Error::Structural(format!("matrix potential expects ScalarSymPsd, got {}", other.tag()))),
        }
    }

    fn instance<'a>(&self, x: &'a Instance) -> Result<&'a Mat> {
        let m = x.as_matrix()?;
        if m.rows() != self.cfg.d1 || m.cols() != self.cfg.d2 {
            return Err(Error::Structural(format!(
                "instance is {}x{}, expected {}x{}",
                m.rows(),
                m.cols(),
                self.cfg.d1,
                self.cfg.d2
            )));
        }
        Ok(m)
    }
}

impl Potential for MatrixPotential {
    fn name(&self) -> String {
        format!("matrix(eta={})", self.cfg.eta)
    }

    fn signature(&self) -> String {
        format!("matrix:{}x{}", self.cfg.d1, self.cfg.d2)
    }

    fn zero(&self) -> Statistic {
        let n = self.cfg.d1 + self.cfg.d2;
        Statistic::ScalarSymPsd { a: 0.0, h: SymMat::zeros(n), m: SymMat::zeros(n) }
    }

    fn eval(&self, _t: usize, zeta: &Statistic) -> Result<f64> {
        let (a, h, m) = Self::parts(zeta)?;
        mp_U(&self.cfg, a, h, m)
    }

    fn bound(&self, zeta: &Statistic) -> Result<f64> {
        let (a, h, m) = Self::parts(zeta)?;
        mp_V(&self.cfg, a, h, m)
    }

    fn stat_map(&self, x: &Instance, y_hat: f64, delta: f64) -> Result<Statistic> {
        let x = self.instance(x)?;
        Ok(Statistic::ScalarSymPsd {
            a: delta * y_hat,
            h: dilation(x).scaled(delta),
            m: dilation_square(x),
        })
    }

    fn lipschitz(&self) -> f64 {
        self.cfg.l
    }

    fn convex_in_delta(&self) -> bool {
        true
    }

    fn anchor(&self) -> Instance {
        Instance::Matrix(Mat::zeros(self.cfg.d1, self.cfg.d2))
    }

    /// A third indicators, the rest Gaussian directions with Frobenius norm
    /// ≤ 1 (so spectral norm ≤ 1 as well).
    fn sample_instance(&self, rng: &mut dyn RngCore) -> Instance {
        let (d1, d2) = (self.cfg.d1, self.cfg.d2);
        if rng.random_bool(1.0 / 3.0) {
            return Instance::Matrix(Mat::indicator(d1, d2, rng.random_range(0..d1), rng.random_range(0..d2)));
        }
        let g: Vec<f64> = (0..d1 * d2).map(|_| rng.sample(StandardNormal)).collect();
        let nf = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let r = if rng.random_bool(0.5) { 1.0 } else { rng.random::<f64>() };
        Instance::Matrix(Mat::from_vec(d1, d2, g.iter().map(|v| r * v / nf).collect()).expect("finite"))
    }

    /// (BL + rLR + ½ηrL²R²)² with R = 1.
    fn increment_bound(&self, b: f64) -> Option<f64> {
        let c = &self.cfg;
        let v = b * c.l + c.r * c.l + 0.5 * c.eta * c.r * c.l * c.l;
        Some(v * v)
    }

    fn residual(&self, _t: usize, zeta: &Statistic, x: &Instance, delta: f64) -> Result<f64> {
        let (a, h, m) = Self::parts(zeta)?;
        let x = self.instance(x)?;
        let sigma = delta / self.cfg.l;
        Ok(a + self.cfg.r / self.cfg.eta * lte_branch(&self.cfg, h, m, x, sigma)? - self.cfg.c / self.cfg.eta)
    }
}

#[derive(Clone, Debug)]
pub struct Epoch {
    pub index: usize,
    pub eta: f64,
    /// Offset of the epoch's first round in the full sequence.
    pub start: usize,
    pub trajectory: Trajectory,
    /// ‖Σ_epoch ℳ(X_t)‖_σ
    pub variance: f64,
}

#[derive(Clone, Debug)]
pub struct DoublingRun {
    pub epochs: Vec<Epoch>,
    /// Σ_k ½η_kL²r‖Σ_epoch ℳ‖_σ + c/η_k
    pub bound: f64,
}

impl DoublingRun {
    pub fn predictions(&self) -> Vec<f64> {
        self.epochs.iter().flat_map(|e| e.trajectory.rounds.iter().map(|r| r.y_hat)).collect()
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.epochs.iter().map(|e| e.trajectory.cumulative_loss()).sum()
    }
}

/// Budget R²·2^k on ‖Σ_epoch ℳ(X_t)‖_σ; the statistic restarts before any
/// round that would exceed it, and epoch k plays η_k = √(2c/(L²·R²·2^k)).
pub fn epoch_boundaries(sequence: &[(Instance, f64)], d: usize, r_bound: f64) -> Result<Vec<(usize, usize)>> {
    if !(r_bound > 0.0) {
        return domain(format!("spectral bound R must be positive, got {r_bound}"));
    }
    let mut out = Vec::new();
    let mut k = 0usize;
    let mut start = 0usize;
    let mut acc = SymMat::zeros(d);
    for (i, (x, _)) in sequence.iter().enumerate() {
        let mx = dilation_square(x.as_matrix()?);
        let mut next = acc.clone();
        next.axpy(1.0, &mx)?;
        let budget = r_bound * r_bound * 2f64.powi(k as i32);
        if i > start && sym_spectral_norm(&next)? > budget * (1.0 + 1e-12) {
            out.push((k, start));
            k += 1;
            start = i;
            acc = mx;
        } else {
            acc = next;
        }
    }
    if start < sequence.len() || sequence.is_empty() {
        out.push((k, start));
    }
    Ok(out)
}

pub fn mp_doubling_run(
    base: &MatrixConfig,
    sequence: &[(Instance, f64)],
    loss: &Loss,
    r_bound: f64,
) -> Result<DoublingRun> {
    let d = base.d1 + base.d2;
    let bounds = epoch_boundaries(sequence, d, r_bound)?;
    let mut epochs = Vec::with_capacity(bounds.len());
    let mut total = 0.0;
    // The linearized rule never draws from the generator.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    for (idx, &(k, start)) in bounds.iter().enumerate() {
        let end = bounds.get(idx + 1).map_or(sequence.len(), |b| b.1);
        let budget = r_bound * r_bound * 2f64.powi(k as i32);
        let eta = (2.0 * base.c / (base.l * base.l * budget)).sqrt();
        let cfg = base.with_eta(eta);
        let pot = MatrixPotential::new(cfg.clone());
        let trajectory = run_online(&pot, &Strategy::Linearized, &sequence[start..end], loss, base.b, &mut rng)?;
        let variance = match trajectory.final_zeta() {
            Statistic::ScalarSymPsd { m, .. } => sym_spectral_norm(m)?,
            _ => unreachable!("matrix statistic"),
        };
        total += matrix_regret_bound(&cfg, variance);
        epochs.push(Epoch { index: k, eta, start, trajectory, variance });
    }
    Ok(DoublingRun { epochs, bound: total })
}
