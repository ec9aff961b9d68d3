//! Flat `key = value` configuration, one entry per line, `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use burkholder::harness::{SequenceKind, SequenceSpec};
use burkholder::losses::{Loss, LossKind};
use burkholder::potentials::{
    AdaGrad, AdaVariant, InstanceShape, MatrixConfig, MatrixPotential, MetaConfig, MetaMember, MetaPotential,
    Norm, ParamFree, ParamFreeConfig, Vaw, VawConfig,
};
use burkholder::stat_core::{ConvexOptions, Potential, RandomizedOptions, Strategy};
use burkholder::potentials::vaw_convex_options;

/// A configuration or command-line mistake; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(Usage(msg.into()).into())
}

const KEYS: &[&str] = &[
    "family", "loss", "strategy", "B", "n", "seed", "sequence", "sequence_path", "d1", "d2", "rank", "noise",
    "skew", "d", "norm_bound", "steps", "eta", "r", "L", "c", "norm", "p", "gamma", "variant", "lambda", "eps1",
    "eps2", "oracle_iters", "tolerance", "unchecked", "meta_eta", "meta_c_scale", "grid",
];

#[derive(Clone, Debug, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> anyhow::Result<Config> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key = value", i + 1));
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return usage(format!("config line {}: unknown key '{k}'", i + 1));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return usage(format!("config line {}: duplicate key '{k}'", i + 1));
            }
        }
        Ok(Config { map })
    }

    pub fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.map.get(key).map_or(default, |s| s.as_str())
    }

    pub fn f64_opt(&self, key: &str) -> anyhow::Result<Option<f64>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => usage(format!("key '{key}': '{v}' is not a finite number")),
            },
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> anyhow::Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> anyhow::Result<usize> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.parse().or_else(|_| usage(format!("key '{key}': '{v}' is not a nonnegative integer"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> anyhow::Result<bool> {
        match self.map.get(key).map(|s| s.as_str()) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => usage(format!("key '{key}': '{v}' is not a boolean")),
        }
    }
}

#[derive(Clone)]
pub enum Family {
    Matrix(MatrixConfig),
    ParamFree(ParamFreeConfig),
    AdaGrad(AdaGrad),
    Vaw(VawConfig),
    Meta { matrix: MatrixConfig, ada: AdaGrad, meta: MetaPotential },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Matrix(_) => "matrix",
            Family::ParamFree(_) => "param_free",
            Family::AdaGrad(_) => "adagrad",
            Family::Vaw(_) => "vaw",
            Family::Meta { .. } => "meta",
        }
    }

    pub fn potential(&self) -> Arc<dyn Potential> {
        match self {
            Family::Matrix(c) => Arc::new(MatrixPotential::new(c.clone())),
            Family::ParamFree(c) => Arc::new(ParamFree::new(c.clone())),
            Family::AdaGrad(a) => Arc::new(a.clone()),
            Family::Vaw(c) => Arc::new(Vaw::new(c.clone())),
            Family::Meta { meta, .. } => Arc::new(meta.clone()),
        }
    }

    /// Tolerance for the property suites.
    pub fn tolerance(&self) -> f64 {
        match self {
            Family::Matrix(_) | Family::Vaw(_) | Family::Meta { .. } => 1e-6,
            _ => 1e-8,
        }
    }
}

pub struct Setup {
    pub family: Family,
    pub loss: Loss,
    pub strategy: Strategy,
    pub b: f64,
    pub spec: Option<SequenceSpec>,
    pub sequence_path: Option<String>,
    pub shape: InstanceShape,
    pub oracle_iters: usize,
    pub tolerance: f64,
    pub grid: usize,
}

fn lib<T>(r: burkholder::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| Usage(format!("invalid config: {e}")).into())
}

pub fn build(cfg: &Config, seed: Option<u64>) -> anyhow::Result<Setup> {
    let family_name = cfg.str_or("family", "matrix");
    let b = cfg.f64_or("B", 1.0)?;
    if !(b > 0.0) {
        return usage("B must be positive");
    }
    let n = cfg.usize_or("n", 500)?;
    let seed = match seed {
        Some(s) => s,
        None => cfg.usize_or("seed", 0)? as u64,
    };
    let unchecked = cfg.bool_or("unchecked", false)?;
    let default_loss = if family_name == "vaw" { "squared" } else { "absolute" };
    let loss_kind = match LossKind::parse(cfg.str_or("loss", default_loss)) {
        Some(k) => k,
        None => return usage(format!("unknown loss '{}'", cfg.str_or("loss", ""))),
    };
    let loss = lib(Loss::new(loss_kind, b))?;
    let l = cfg.f64_or("L", loss.lipschitz())?;
    let d1 = cfg.usize_or("d1", 10)?;
    let d2 = cfg.usize_or("d2", 10)?;
    let d = cfg.usize_or("d", 10)?;

    let matrix_cfg = || -> anyhow::Result<MatrixConfig> {
        let eta = cfg.f64_or("eta", 0.2)?;
        let r = cfg.f64_or("r", 1.0)?;
        let c = cfg.f64_or("c", r * ((d1 + d2) as f64).ln())?;
        let m = MatrixConfig::unchecked(d1, d2, eta, r, l, c, b);
        if !unchecked {
            lib(m.validate())?;
        }
        Ok(m)
    };

    let (family, shape) = match family_name {
        "matrix" => (Family::Matrix(matrix_cfg()?), InstanceShape::Matrix(d1, d2)),
        "param_free" => {
            let norm = match cfg.str_or("norm", "l2") {
                "l2" => Norm::L2,
                "lp" => Norm::Lp(cfg.f64_or("p", 4.0)?),
                other => return usage(format!("unknown norm '{other}' (expected l2 or lp)")),
            };
            let c = cfg.f64_or("c", 1.0)?;
            let pf = match cfg.f64_opt("gamma")? {
                Some(g) if unchecked => ParamFreeConfig::unchecked(n, d, g, c, b, norm),
                Some(g) => lib(ParamFreeConfig::with_gamma(n, d, g, c, b, norm))?,
                None => lib(ParamFreeConfig::new(n, d, c, b, norm))?,
            };
            if l != 1.0 {
                return usage("the parameter-free family is stated for L = 1");
            }
            (Family::ParamFree(pf), InstanceShape::Vector(d))
        }
        "adagrad" => {
            let variant = match cfg.str_or("variant", "l2") {
                "l2" => AdaVariant::L2,
                "linf" => AdaVariant::Linf,
                other => return usage(format!("unknown AdaGrad variant '{other}' (expected l2 or linf)")),
            };
            (Family::AdaGrad(AdaGrad::new(variant, InstanceShape::Vector(d), l, b)), InstanceShape::Vector(d))
        }
        "vaw" => {
            let rho = loss.rho();
            if rho <= 0.0 {
                return usage("the VAW family needs a strongly convex loss (loss = squared)");
            }
            let lambda = cfg.f64_or("lambda", 1.0)?;
            let c = cfg.f64_or("c", l * l / rho)?;
            let v = VawConfig::unchecked(d, rho, lambda, c, l);
            if !unchecked {
                lib(v.validate())?;
            }
            (Family::Vaw(v), InstanceShape::Vector(d))
        }
        "meta" => {
            let m = matrix_cfg()?;
            let ada = AdaGrad::new(AdaVariant::L2, InstanceShape::Matrix(d1, d2), l, b);
            let scale = cfg.f64_or("meta_c_scale", 1.0)?;
            if !(scale >= 0.0) {
                return usage("meta_c_scale must be nonnegative");
            }
            let members: Vec<Arc<dyn Potential>> = vec![Arc::new(MatrixPotential::new(m.clone())), Arc::new(ada.clone())];
            let members: Vec<MetaMember> = members
                .into_iter()
                .map(|p| {
                    let c = p.increment_bound(b).expect("analytic increment bound");
                    MetaMember { potential: p, c: scale * c, analytic: true }
                })
                .collect();
            let cmax = members.iter().map(|m| m.c).fold(0.0, f64::max).max(1e-12);
            let eta = cfg.f64_or("meta_eta", (2f64.ln() / (n.max(1) as f64 * cmax)).sqrt())?;
            let meta = lib(MetaPotential::new(MetaConfig { members, eta }))?;
            (Family::Meta { matrix: m, ada, meta }, InstanceShape::Matrix(d1, d2))
        }
        other => return usage(format!("unknown family '{other}' (matrix, param_free, adagrad, vaw, meta)")),
    };

    let default_strategy = if family_name == "vaw" { "convex" } else { "linearized" };
    let strategy = parse_strategy(cfg.str_or("strategy", default_strategy), cfg, &family)?;

    let sequence = cfg.str_or("sequence", if matches!(shape, InstanceShape::Matrix(..)) { "matrix_completion" } else { "random_vectors" });
    let (spec, sequence_path) = match sequence {
        "matrix_completion" => {
            if !matches!(shape, InstanceShape::Matrix(..)) {
                return usage(format!("family {family_name} takes vector instances, not matrix_completion"));
            }
            let skew = cfg.f64_opt("skew")?;
            let kind = SequenceKind::MatrixCompletion {
                d1,
                d2,
                rank: cfg.usize_or("rank", 2)?,
                noise: cfg.f64_or("noise", 0.1)?,
                r: cfg.f64_or("r", 1.0)?,
                b,
                skew,
            };
            (Some(SequenceSpec { kind, n, seed }), None)
        }
        "random_vectors" | "adversarial_gradient" => {
            if !matches!(shape, InstanceShape::Vector(_)) {
                return usage(format!("family {family_name} takes matrix instances"));
            }
            let kind = if sequence == "random_vectors" {
                SequenceKind::RandomVectors { d, norm_bound: cfg.f64_or("norm_bound", 1.0)?, noise: cfg.f64_or("noise", 0.1)?, b }
            } else {
                SequenceKind::AdversarialGradient { d, steps: cfg.usize_or("steps", 25)?, b }
            };
            (Some(SequenceSpec { kind, n, seed }), None)
        }
        "csv" => match cfg.has("sequence_path") {
            true => (None, Some(cfg.str_or("sequence_path", "").to_string())),
            false => return usage("sequence = csv needs sequence_path"),
        },
        other => return usage(format!("unknown sequence '{other}'")),
    };

    Ok(Setup {
        family,
        loss,
        strategy,
        b,
        spec,
        sequence_path,
        shape,
        oracle_iters: cfg.usize_or("oracle_iters", 2000)?,
        tolerance: cfg.f64_or("tolerance", 1e-9)?,
        grid: cfg.usize_or("grid", 50)?,
    })
}

pub fn parse_strategy(name: &str, cfg: &Config, family: &Family) -> anyhow::Result<Strategy> {
    let s = match name {
        "linearized" => Strategy::Linearized,
        "convex" => match family {
            Family::Vaw(_) => Strategy::Convex(vaw_convex_options(1e-9)),
            _ => Strategy::Convex(ConvexOptions::default()),
        },
        "randomized" => {
            let eps1 = cfg.f64_or("eps1", 0.05)?;
            let eps2 = cfg.f64_or("eps2", 0.05)?;
            if !(eps1 > 0.0 && eps2 > 0.0) {
                return usage("eps1 and eps2 must be positive");
            }
            Strategy::Randomized(RandomizedOptions::new(eps1, eps2))
        }
        other => return usage(format!("unknown strategy '{other}' (linearized, convex, randomized)")),
    };
    let p = family.potential();
    if matches!(s, Strategy::Linearized) && !(p.convex_in_delta() && p.linear_in_prediction()) {
        return usage(format!("the linearized strategy does not apply to {}", family.name()));
    }
    Ok(s)
}
