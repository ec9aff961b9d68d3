//! Synthetic sequences, offline comparators and regret reports.

mod compare;
mod oracle;
mod report;

pub use compare::{compare_strategies, comparison_csv, StrategyRun};
pub use oracle::{
    comparator_oracle, comparator_predictions, linear_loss, log_grid, pf_comparator_grid, scan_1d,
    weighted_median, ComparatorClass, GridPoint, OracleOptions, OracleResult,
};
pub use report::{matrix_bound_at, report, RegretReport, ReportRow, CSV_HEADER};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Zipf};

use crate::error::{domain, Error, Result};
use crate::potentials::InstanceShape;
use crate::stat_core::Instance;
use crate::symlin::Mat;

#[derive(Clone, Debug, PartialEq)]
pub enum SequenceKind {
    /// Indicator instances e_i e_jᵀ with y = W*[i, j] + noise clipped to
    /// [-B, B], for a planted W* of the given rank and nuclear norm r.
    MatrixCompletion {
        d1: usize,
        d2: usize,
        rank: usize,
        noise: f64,
        r: f64,
        b: f64,
        /// Zipf exponent for row and column indices; uniform when None.
        skew: Option<f64>,
    },
    /// x uniform in direction with ‖x‖₂ ≤ norm_bound; y = ⟨w*, x⟩ + noise
    /// clipped to [-B, B] for a Gaussian w* of unit norm.
    RandomVectors { d: usize, norm_bound: f64, noise: f64, b: f64 },
    /// x_t cycles through the basis; y_t = ±B with the sign flipping every
    /// `steps` rounds.
    AdversarialGradient { d: usize, steps: usize, b: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub n: usize,
    pub seed: u64,
}

pub type Sequence = Vec<(Instance, f64)>;

fn gaussian_vec(d: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// `k` orthonormal vectors in ℝ^d by Gram-Schmidt on Gaussian draws.
fn orthonormal(d: usize, k: usize, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    while out.len() < k {
        let mut v = gaussian_vec(d, rng);
        for u in &out {
            let ip: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= ip * b);
        }
        let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nv > 1e-8 {
            out.push(v.into_iter().map(|a| a / nv).collect());
        }
    }
    out
}

/// Σ s_k u_k v_kᵀ with orthonormal factors and Σ s_k = r.
pub fn planted_matrix(d1: usize, d2: usize, rank: usize, r: f64, rng: &mut dyn RngCore) -> Result<Mat> {
    if rank > d1.min(d2) {
        return domain(format!("planted rank {rank} exceeds min({d1}, {d2})"));
    }
    let mut w = Mat::zeros(d1, d2);
    if rank == 0 || r == 0.0 {
        return Ok(w);
    }
    let us = orthonormal(d1, rank, rng);
    let vs = orthonormal(d2, rank, rng);
    let raw: Vec<f64> = (0..rank).map(|_| 0.5 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    for ((u, v), s) in us.iter().zip(&vs).zip(&raw) {
        w.axpy(r * s / total, &Mat::outer(u, v))?;
    }
    Ok(w)
}

fn index_sampler(d: usize, skew: Option<f64>) -> Result<Box<dyn Fn(&mut dyn RngCore) -> usize>> {
    match skew {
        None => Ok(Box::new(move |rng: &mut dyn RngCore| rng.random_range(0..d))),
        Some(s) => {
            let z = Zipf::new(d as f64, s).map_err(|e| Error::Domain(format!("zipf({s}): {e}")))?;
            Ok(Box::new(move |rng: &mut dyn RngCore| (z.sample(rng) as usize).clamp(1, d) - 1))
        }
    }
}

/// Planted comparator for matrix-completion specs (None for other kinds).
pub fn planted_comparator(spec: &SequenceSpec) -> Result<Option<Mat>> {
    match spec.kind {
        SequenceKind::MatrixCompletion { d1, d2, rank, r, .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            Ok(Some(planted_matrix(d1, d2, rank, r, &mut rng)?))
        }
        _ => Ok(None),
    }
}

/// Deterministic in `spec`.
pub fn generate(spec: &SequenceSpec) -> Result<Sequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n);
    match spec.kind {
        SequenceKind::MatrixCompletion { d1, d2, rank, noise, r, b, skew } => {
            if d1 == 0 || d2 == 0 || !(noise >= 0.0) || !(r >= 0.0) || !(b > 0.0) {
                return domain("matrix completion needs positive dimensions and B, nonnegative r and noise");
            }
            let w = planted_matrix(d1, d2, rank, r, &mut rng)?;
            let rows = index_sampler(d1, skew)?;
            let cols = index_sampler(d2, skew)?;
            for _ in 0..spec.n {
                let (i, j) = (rows(&mut rng), cols(&mut rng));
                let e: f64 = if noise > 0.0 { noise * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
                out.push((Instance::Matrix(Mat::indicator(d1, d2, i, j)), (w.get(i, j) + e).clamp(-b, b)));
            }
        }
        SequenceKind::RandomVectors { d, norm_bound, noise, b } => {
            if d == 0 || !(norm_bound > 0.0) || !(b > 0.0) || !(noise >= 0.0) {
                return domain("random vectors need positive d, norm bound and B");
            }
            let mut w = gaussian_vec(d, &mut rng);
            let nw = w.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            w.iter_mut().for_each(|a| *a /= nw);
            for _ in 0..spec.n {
                let g = gaussian_vec(d, &mut rng);
                let ng = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let rad = norm_bound * rng.random::<f64>().sqrt();
                let x: Vec<f64> = g.iter().map(|a| rad * a / ng).collect();
                let e: f64 = if noise > 0.0 { noise * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
                let y = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + e;
                out.push((Instance::Vector(x), y.clamp(-b, b)));
            }
        }
        SequenceKind::AdversarialGradient { d, steps, b } => {
            if d == 0 || steps == 0 || !(b > 0.0) {
                return domain("adversarial sequence needs positive d, steps and B");
            }
            for t in 0..spec.n {
                let mut x = vec![0.0; d];
                x[t % d] = 1.0;
                let y = if (t / steps) % 2 == 0 { b } else { -b };
                out.push((Instance::Vector(x), y));
            }
        }
    }
    Ok(out)
}

/// Reads `t,payload...,y` rows; the payload is row-major for matrix shapes.
/// A non-numeric first line is taken as a header.
pub fn parse_sequence_csv(text: &str, shape: InstanceShape) -> Result<Sequence> {
    let width = shape.len() + 2;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let fields = match fields {
            Ok(f) => f,
            Err(_) if lineno == 0 => continue,
            Err(e) => return domain(format!("line {}: {e}", lineno + 1)),
        };
        if fields.len() != width {
            return domain(format!("line {}: expected {width} columns, got {}", lineno + 1, fields.len()));
        }
        let payload = fields[1..width - 1].to_vec();
        let x = match shape {
            InstanceShape::Vector(_) => Instance::Vector(payload),
            InstanceShape::Matrix(a, b) => Instance::Matrix(Mat::from_vec(a, b, payload)?),
        };
        out.push((x, fields[width - 1]));
    }
    Ok(out)
}

/// Inverse of `parse_sequence_csv`.
pub fn sequence_to_csv(seq: &Sequence) -> String {
    let mut s = String::new();
    for (t, (x, y)) in seq.iter().enumerate() {
        s.push_str(&(t + 1).to_string());
        for v in x.coords() {
            s.push(',');
            s.push_str(&v.to_string());
        }
        s.push(',');
        s.push_str(&y.to_string());
        s.push('\n');
    }
    s
}
