//! The three generic prediction rules: closed form for potentials convex in
//! δ, grid minimax for convex objectives, and the randomized rule that
//! solves a discretized minimax by multiplicative weights.

use std::collections::HashMap;

use rand::{Rng, RngCore};

use super::potential::Potential;
use super::statistic::{Instance, Statistic};
use crate::error::{domain, Error, Result};
use crate::losses::Loss;

/// clamp(-(1/L)·½[F(+L) - F(-L)], -B, B)
pub fn linearized_from_residual(f_plus: f64, f_minus: f64, l: f64, b: f64) -> Result<f64> {
    if !f_plus.is_finite() || !f_minus.is_finite() {
        return Err(Error::Numeric(format!("residual not finite: F(+L) = {f_plus}, F(-L) = {f_minus}")));
    }
    Ok((-(0.5 / l) * (f_plus - f_minus)).clamp(-b, b))
}

pub fn predict_linearized(
    p: &dyn Potential,
    t: usize,
    zeta: &Statistic,
    x: &Instance,
    b: f64,
) -> Result<f64> {
    if !p.convex_in_delta() || !p.linear_in_prediction() {
        return domain(format!("{} does not admit the linearized strategy", p.name()));
    }
    let l = p.lipschitz();
    let fp = p.residual(t, zeta, x, l)?;
    let fm = p.residual(t, zeta, x, -l)?;
    linearized_from_residual(fp, fm, l, b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexOptions {
    pub prediction_grid: usize,
    pub outcome_grid: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ConvexOptions {
    fn default() -> Self {
        ConvexOptions { prediction_grid: 257, outcome_grid: 129, tol: 1e-9, max_iter: 200 }
    }
}

/// `n` evenly spaced points on [-b, b], endpoints included.
pub fn uniform_grid(b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| (-b + 2.0 * b * i as f64 / (n - 1) as f64).clamp(-b, b)).collect(),
    }
}

fn worst_case(
    p: &dyn Potential,
    t: usize,
    zeta: &Statistic,
    x: &Instance,
    loss: &Loss,
    ys: &[f64],
    y_hat: f64,
) -> Result<f64> {
    let deltas: Vec<f64> = ys.iter().map(|&y| loss.subgradient(y_hat, y)).collect();
    let vals = p.eval_increments(t, zeta, x, y_hat, &deltas)?;
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// argmin over ŷ ∈ [-B, B] of sup over y of U(ζ + T(x, ŷ, ∂ℓ(ŷ, y))): the
/// leftmost grid minimizer, refined by golden section inside its bracket.
pub fn predict_convex(
    p: &dyn Potential,
    t: usize,
    zeta: &Statistic,
    x: &Instance,
    loss: &Loss,
    b: f64,
    opts: &ConvexOptions,
) -> Result<f64> {
    let ys = uniform_grid(b, opts.outcome_grid.max(2));
    let grid = uniform_grid(b, opts.prediction_grid.max(2));
    let mut vals = Vec::with_capacity(grid.len());
    for &g in &grid {
        vals.push(worst_case(p, t, zeta, x, loss, &ys, g)?);
    }
    let (mut best_i, mut best) = (0, vals[0]);
    for (i, &v) in vals.iter().enumerate() {
        if v < best {
            best = v;
            best_i = i;
        }
    }
    if !best.is_finite() {
        return Err(Error::Numeric(format!("objective not finite at ŷ = {}", grid[best_i])));
    }
    let mut lo = grid[best_i.saturating_sub(1)];
    let mut hi = grid[(best_i + 1).min(grid.len() - 1)];
    let mut best_x = grid[best_i];
    if hi - lo <= opts.tol {
        return Ok(best_x);
    }
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = worst_case(p, t, zeta, x, loss, &ys, c)?;
    let mut fd = worst_case(p, t, zeta, x, loss, &ys, d)?;
    let mut iter = 0;
    while hi - lo > opts.tol {
        if iter >= opts.max_iter {
            return Err(Error::Numeric(format!(
                "golden section did not converge: bracket [{lo}, {hi}], f(c={c}) = {fc}, f(d={d}) = {fd}"
            )));
        }
        iter += 1;
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = worst_case(p, t, zeta, x, loss, &ys, c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = worst_case(p, t, zeta, x, loss, &ys, d)?;
        }
    }
    for (cand, f) in [(c, fc), (d, fd)] {
        if f < best {
            best = f;
            best_x = cand;
        }
    }
    Ok(best_x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomizedOptions {
    pub eps1: f64,
    pub eps2: f64,
    pub outcome_grid: usize,
    /// Overrides the a-priori iteration count.
    pub iterations: Option<usize>,
}

impl RandomizedOptions {
    pub fn new(eps1: f64, eps2: f64) -> Self {
        RandomizedOptions { eps1, eps2, outcome_grid: 129, iterations: None }
    }
}

#[derive(Clone, Debug)]
pub struct RandomizedPrediction {
    pub points: Vec<f64>,
    /// Averaged mirror-descent iterate.
    pub weights: Vec<f64>,
    pub sample: f64,
    /// sup_y Σ μ_i U(ζ + T(x, z_i, ∂ℓ(z_i, y))) at the averaged iterate.
    pub value: f64,
    pub k: f64,
    pub k_estimated: bool,
    pub h: f64,
    pub iterations: usize,
}

/// Control points -B + eps1·i, the last one clamped to B.
pub fn control_points(b: f64, eps1: f64) -> Vec<f64> {
    let n = (2.0 * b / eps1).ceil() as usize + 1;
    (0..n).map(|i| (-b + eps1 * i as f64).min(b)).collect()
}

fn estimate_prediction_lipschitz(
    p: &dyn Potential,
    t: usize,
    zeta: &Statistic,
    x: &Instance,
    b: f64,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let l = p.lipschitz();
    let mut k: f64 = 0.0;
    for _ in 0..1000 {
        let y1 = rng.random_range(-b..=b);
        let y2 = rng.random_range(-b..=b);
        if (y1 - y2).abs() < 1e-9 {
            continue;
        }
        let d = rng.random_range(-l..=l);
        let u1 = p.eval(t, &zeta.add(&p.stat_map(x, y1, d)?)?)?;
        let u2 = p.eval(t, &zeta.add(&p.stat_map(x, y2, d)?)?)?;
        k = k.max((u1 - u2).abs() / (y1 - y2).abs());
    }
    Ok(2.0 * k)
}

pub fn predict_randomized(
    p: &dyn Potential,
    t: usize,
    zeta: &Statistic,
    x: &Instance,
    loss: &Loss,
    b: f64,
    opts: &RandomizedOptions,
    rng: &mut dyn RngCore,
) -> Result<RandomizedPrediction> {
    if !(opts.eps1 > 0.0) || !(opts.eps2 > 0.0) {
        return domain(format!("eps1 and eps2 must be positive, got {} and {}", opts.eps1, opts.eps2));
    }
    let points = control_points(b, opts.eps1);
    let n = points.len();
    let mut ys = uniform_grid(b, opts.outcome_grid.max(2));
    ys.extend(points.iter().copied());

    // Table G[i][j] = U(ζ + T(x, z_i, ∂ℓ(z_i, y_j))).
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    if p.linear_in_prediction() {
        let mut cache: HashMap<u64, f64> = HashMap::new();
        for &z in &points {
            let mut row = Vec::with_capacity(ys.len());
            for &y in &ys {
                let d = loss.subgradient(z, y);
                let f = match cache.get(&d.to_bits()) {
                    Some(f) => *f,
                    None => {
                        let f = p.residual(t, zeta, x, d)?;
                        cache.insert(d.to_bits(), f);
                        f
                    }
                };
                row.push(z * d + f);
            }
            rows.push(row);
        }
    } else {
        for &z in &points {
            let deltas: Vec<f64> = ys.iter().map(|&y| loss.subgradient(z, y)).collect();
            rows.push(p.eval_increments(t, zeta, x, z, &deltas)?);
        }
    }

    // Distinct columns, stored column-major.
    let mut seen: HashMap<Vec<u64>, ()> = HashMap::new();
    let mut cols: Vec<f64> = Vec::new();
    for j in 0..ys.len() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        if seen.insert(col.iter().map(|v| v.to_bits()).collect(), ()).is_none() {
            cols.extend_from_slice(&col);
        }
    }
    let m = cols.len() / n;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in &cols {
        if !v.is_finite() {
            return Err(Error::Numeric(format!("potential table entry not finite: {v}")));
        }
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let center = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let log_n = (n as f64).ln();
    let iterations = opts.iterations.unwrap_or_else(|| {
        if h == 0.0 || n == 1 {
            0
        } else {
            (2.0 * h * h * log_n / (opts.eps2 * opts.eps2)).ceil() as usize
        }
    });

    let mut avg = vec![0.0; n];
    if iterations == 0 {
        avg.iter_mut().for_each(|w| *w = 1.0 / n as f64);
    } else {
        let step = (2.0 * log_n / iterations as f64).sqrt() / h.max(f64::MIN_POSITIVE);
        let mut logw = vec![0.0; n];
        let mut mu = vec![0.0; n];
        for _ in 0..iterations {
            let mx = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for (u, lw) in mu.iter_mut().zip(&logw) {
                *u = (lw - mx).exp();
                s += *u;
            }
            for (a, u) in avg.iter_mut().zip(mu.iter_mut()) {
                *u /= s;
                *a += *u;
            }
            let mut best_j = 0;
            let mut best_v = f64::NEG_INFINITY;
            for j in 0..m {
                let col = &cols[j * n..(j + 1) * n];
                let v: f64 = col.iter().zip(&mu).map(|(g, u)| g * u).sum();
                if v > best_v {
                    best_v = v;
                    best_j = j;
                }
            }
            let col = &cols[best_j * n..(best_j + 1) * n];
            for (lw, g) in logw.iter_mut().zip(col) {
                *lw -= step * (g - center);
            }
        }
        avg.iter_mut().for_each(|a| *a /= iterations as f64);
    }

    let value = (0..m)
        .map(|j| cols[j * n..(j + 1) * n].iter().zip(&avg).map(|(g, u)| g * u).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);

    let (k, k_estimated) = match p.prediction_lipschitz() {
        Some(k) => (k, false),
        None => (estimate_prediction_lipschitz(p, t, zeta, x, b, rng)?, true),
    };

    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut sample = points[n - 1];
    for (z, w) in points.iter().zip(&avg) {
        cum += w;
        if u < cum {
            sample = *z;
            break;
        }
    }
    Ok(RandomizedPrediction { points, weights: avg, sample, value, k, k_estimated, h, iterations })
}
