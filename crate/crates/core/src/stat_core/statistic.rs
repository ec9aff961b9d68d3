use crate::error::{structural, Error, Result};
use crate::symlin::{sym_eigvals, Mat, SymMat};

/// Side information x_t.
#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Vector(Vec<f64>),
    Matrix(Mat),
}

impl Instance {
    pub fn as_vector(&self) -> Result<&[f64]> {
        match self {
            Instance::Vector(v) => Ok(v),
            Instance::Matrix(_) => structural("expected a vector instance, got a matrix"),
        }
    }

    pub fn as_matrix(&self) -> Result<&Mat> {
        match self {
            Instance::Matrix(m) => Ok(m),
            Instance::Vector(_) => structural("expected a matrix instance, got a vector"),
        }
    }

    /// Row-major entries for matrices.
    pub fn coords(&self) -> &[f64] {
        match self {
            Instance::Vector(v) => v,
            Instance::Matrix(m) => m.data(),
        }
    }

    /// Euclidean (Frobenius) norm.
    pub fn norm2(&self) -> f64 {
        self.coords().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn zero_like(&self) -> Instance {
        match self {
            Instance::Vector(v) => Instance::Vector(vec![0.0; v.len()]),
            Instance::Matrix(m) => Instance::Matrix(Mat::zeros(m.rows(), m.cols())),
        }
    }

    /// ⟨self, other⟩ (trace inner product for matrices).
    pub fn inner(&self, other: &Instance) -> Result<f64> {
        let (a, b) = (self.coords(), other.coords());
        let same = match (self, other) {
            (Instance::Vector(_), Instance::Vector(_)) => a.len() == b.len(),
            (Instance::Matrix(x), Instance::Matrix(y)) => x.same_shape(y),
            _ => false,
        };
        if !same {
            return structural("instance shapes differ");
        }
        Ok(a.iter().zip(b).map(|(p, q)| p * q).sum())
    }
}

/// An element of the statistic space. Only values with the same tag and
/// dimensions can be added.
#[derive(Clone, Debug, PartialEq)]
pub enum Statistic {
    ScalarVec { b: f64, x: Vec<f64> },
    ScalarSymPsd { a: f64, h: SymMat, m: SymMat },
    VecSym { x: Vec<f64>, a: SymMat },
    ScalarVecScalar { b: f64, x: Vec<f64>, s: f64 },
    Product(Vec<Statistic>),
}

fn add_vec(dst: &mut [f64], src: &[f64]) -> Result<()> {
    if dst.len() != src.len() {
        return structural(format!("vector length {} vs {}", dst.len(), src.len()));
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
    Ok(())
}

impl Statistic {
    pub fn tag(&self) -> &'static str {
        match self {
            Statistic::ScalarVec { .. } => "ScalarVec",
            Statistic::ScalarSymPsd { .. } => "ScalarSymPsd",
            Statistic::VecSym { .. } => "VecSym",
            Statistic::ScalarVecScalar { .. } => "ScalarVecScalar",
            Statistic::Product(_) => "Product",
        }
    }

    pub fn zero_like(&self) -> Statistic {
        match self {
            Statistic::ScalarVec { x, .. } => Statistic::ScalarVec { b: 0.0, x: vec![0.0; x.len()] },
            Statistic::ScalarSymPsd { h, .. } => Statistic::ScalarSymPsd {
                a: 0.0,
                h: SymMat::zeros(h.dim()),
                m: SymMat::zeros(h.dim()),
            },
            Statistic::VecSym { x, a } => {
                Statistic::VecSym { x: vec![0.0; x.len()], a: SymMat::zeros(a.dim()) }
            }
            Statistic::ScalarVecScalar { x, .. } => {
                Statistic::ScalarVecScalar { b: 0.0, x: vec![0.0; x.len()], s: 0.0 }
            }
            Statistic::Product(parts) => Statistic::Product(parts.iter().map(|p| p.zero_like()).collect()),
        }
    }

    pub fn add_assign(&mut self, other: &Statistic) -> Result<()> {
        match (self, other) {
            (Statistic::ScalarVec { b, x }, Statistic::ScalarVec { b: b2, x: x2 }) => {
                add_vec(x, x2)?;
                *b += b2;
            }
            (Statistic::ScalarSymPsd { a, h, m }, Statistic::ScalarSymPsd { a: a2, h: h2, m: m2 }) => {
                h.axpy(1.0, h2)?;
                m.axpy(1.0, m2)?;
                *a += a2;
            }
            (Statistic::VecSym { x, a }, Statistic::VecSym { x: x2, a: a2 }) => {
                add_vec(x, x2)?;
                a.axpy(1.0, a2)?;
            }
            (
                Statistic::ScalarVecScalar { b, x, s },
                Statistic::ScalarVecScalar { b: b2, x: x2, s: s2 },
            ) => {
                add_vec(x, x2)?;
                *b += b2;
                *s += s2;
            }
            (Statistic::Product(p), Statistic::Product(q)) => {
                if p.len() != q.len() {
                    return structural(format!("product arity {} vs {}", p.len(), q.len()));
                }
                for (u, v) in p.iter_mut().zip(q) {
                    u.add_assign(v)?;
                }
            }
            (lhs, rhs) => {
                return Err(Error::Structural(format!(
                    "cannot add {} to {}",
                    rhs.tag(),
                    lhs.tag()
                )))
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Statistic) -> Result<Statistic> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    /// Flat list of all numeric components, for comparisons in tests.
    pub fn components(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.push_components(&mut out);
        out
    }

    fn push_components(&self, out: &mut Vec<f64>) {
        match self {
            Statistic::ScalarVec { b, x } => {
                out.push(*b);
                out.extend_from_slice(x);
            }
            Statistic::ScalarSymPsd { a, h, m } => {
                out.push(*a);
                out.extend_from_slice(h.data());
                out.extend_from_slice(m.data());
            }
            Statistic::VecSym { x, a } => {
                out.extend_from_slice(x);
                out.extend_from_slice(a.data());
            }
            Statistic::ScalarVecScalar { b, x, s } => {
                out.push(*b);
                out.extend_from_slice(x);
                out.push(*s);
            }
            Statistic::Product(parts) => {
                for p in parts {
                    p.push_components(out);
                }
            }
        }
    }

    /// Checks that every second-moment block is positive semidefinite up to
    /// 1e-10 relative to its spectral norm.
    pub fn check_psd(&self) -> Result<()> {
        let check = |m: &SymMat| -> Result<()> {
            let ev = sym_eigvals(m)?;
            let norm = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let min = *ev.last().unwrap_or(&0.0);
            if min < -1e-10 * norm {
                return Err(Error::Domain(format!("psd block has eigenvalue {min:.3e}")));
            }
            Ok(())
        };
        match self {
            Statistic::ScalarSymPsd { m, .. } => check(m),
            Statistic::VecSym { a, .. } => check(a),
            Statistic::ScalarVecScalar { s, .. } if *s < 0.0 => {
                Err(Error::Domain(format!("negative square sum {s}")))
            }
            Statistic::Product(parts) => parts.iter().try_for_each(|p| p.check_psd()),
            _ => Ok(()),
        }
    }

    /// The leading scalar (Σ δŷ) where the statistic has one.
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Statistic::ScalarVec { b, .. } | Statistic::ScalarVecScalar { b, .. } => Some(*b),
            Statistic::ScalarSymPsd { a, .. } => Some(*a),
            _ => None,
        }
    }
}
