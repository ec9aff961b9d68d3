use std::fmt::Write as _;

use crate::error::{structural, Error, Result};
use crate::losses::Loss;
use crate::stat_core::{Potential, Statistic, Trajectory};

pub const CSV_HEADER: &str = "round,loss,cum_loss,comp_loss,regret,bound,potential";

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub round: usize,
    pub loss: f64,
    pub cum_loss: f64,
    /// Cumulative comparator loss.
    pub comp_loss: f64,
    pub regret: f64,
    pub bound: f64,
    pub potential: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    /// Rows for rounds 0..=n; row 0 is the empty prefix.
    pub rows: Vec<ReportRow>,
    pub final_regret: f64,
    pub final_bound: f64,
    /// V(ζ_n); a value ≤ 0 certifies regret ≤ bound on this sequence.
    pub certificate: f64,
}

impl RegretReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.round, r.loss, r.cum_loss, r.comp_loss, r.regret, r.bound, r.potential
            );
        }
        s
    }

    pub fn certified(&self, tol: f64) -> bool {
        self.certificate <= tol
    }
}

/// Per-round regret against the comparator predictions, next to the bound
/// evaluated on each prefix statistic.
pub fn report(
    p: &dyn Potential,
    traj: &Trajectory,
    comparator_predictions: &[f64],
    loss: &Loss,
    bound: &dyn Fn(&Statistic) -> Result<f64>,
) -> Result<RegretReport> {
    let n = traj.rounds.len();
    if comparator_predictions.len() != n || traj.zeta.len() != n + 1 || traj.potential_values.len() != n + 1 {
        return structural(format!(
            "report needs matching lengths: {n} rounds, {} comparator predictions, {} statistics",
            comparator_predictions.len(),
            traj.zeta.len()
        ));
    }
    let mut rows = Vec::with_capacity(n + 1);
    rows.push(ReportRow {
        round: 0,
        loss: 0.0,
        cum_loss: 0.0,
        comp_loss: 0.0,
        regret: 0.0,
        bound: bound(&traj.zeta[0])?,
        potential: traj.potential_values[0],
    });
    let (mut cum, mut comp) = (0.0, 0.0);
    for (i, r) in traj.rounds.iter().enumerate() {
        let l = loss.value(r.y_hat, r.y);
        if (l - r.loss).abs() > 1e-12 * (1.0 + l.abs()) {
            return Err(Error::Numeric(format!("round {}: recorded loss {} differs from {l}", r.t, r.loss)));
        }
        cum += l;
        comp += loss.value(comparator_predictions[i], r.y);
        rows.push(ReportRow {
            round: r.t,
            loss: l,
            cum_loss: cum,
            comp_loss: comp,
            regret: cum - comp,
            bound: bound(&traj.zeta[i + 1])?,
            potential: traj.potential_values[i + 1],
        });
    }
    let last = rows.last().expect("row 0 always present");
    Ok(RegretReport {
        final_regret: last.regret,
        final_bound: last.bound,
        certificate: p.bound(traj.final_zeta())?,
        rows,
    })
}

/// ½ηL²r‖Σℳ(X_t)‖_σ + c/η read off a matrix statistic.
pub fn matrix_bound_at(cfg: &crate::potentials::MatrixConfig, zeta: &Statistic) -> Result<f64> {
    match zeta {
        Statistic::ScalarSymPsd { m, .. } => {
            Ok(crate::potentials::matrix_regret_bound(cfg, crate::symlin::sym_spectral_norm(m)?))
        }
        other => structural(format!("matrix bound needs a matrix statistic, got {}", other.tag())),
    }
}
