//! The per-(lambda, t) metrics table emitted by sweeps, with its CSV codec.

use serde::{Deserialize, Serialize};
use std::path::Path;

use mhd_slab::checkpoint;
use mhd_slab::Result;

pub const COLUMNS: [&str; 10] = [
    "lambda",
    "t",
    "err_v",
    "err_q",
    "err_h",
    "norm_ss_lambda",
    "wp_metric",
    "div_h",
    "energy_residual",
    "grad_q_err",
];

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Row {
    pub lambda: f64,
    pub t: f64,
    /// L2 over the measurement subdomain of v - w.
    pub err_v: f64,
    /// L2 of the total pressure.
    pub err_q: f64,
    /// Local star-norm of H - B over the subdomain.
    pub err_h: f64,
    /// Instantaneous lambda-weighted space-time norm surrogate.
    pub norm_ss_lambda: f64,
    /// lambda * (||grad q|| + ||div v||).
    pub wp_metric: f64,
    /// Max discrete divergence of H at the stored (post-cleaning) state.
    pub div_h: f64,
    pub energy_residual: f64,
    /// Sup over the subdomain of |lambda grad q - grad(pi + |B|^2/2)|.
    pub grad_q_err: f64,
}

impl Row {
    fn to_vec(self) -> Vec<f64> {
        vec![
            self.lambda,
            self.t,
            self.err_v,
            self.err_q,
            self.err_h,
            self.norm_ss_lambda,
            self.wp_metric,
            self.div_h,
            self.energy_residual,
            self.grad_q_err,
        ]
    }

    fn from_slice(v: &[f64]) -> Row {
        Row {
            lambda: v[0],
            t: v[1],
            err_v: v[2],
            err_q: v[3],
            err_h: v[4],
            norm_ss_lambda: v[5],
            wp_metric: v[6],
            div_h: v[7],
            energy_residual: v[8],
            grad_q_err: v[9],
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<Row>,
}

impl ConvergenceTable {
    pub fn to_csv_string(&self) -> Result<String> {
        let rows: Vec<Vec<f64>> = self.rows.iter().map(|r| r.to_vec()).collect();
        checkpoint::csv_string(&COLUMNS, &rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = self.rows.iter().map(|r| r.to_vec()).collect();
        checkpoint::write_csv(path, &COLUMNS, &rows)
    }

    pub fn from_csv_string(text: &str) -> Result<Self> {
        let (cols, rows) = checkpoint::parse_csv(text)?;
        if cols != COLUMNS {
            return Err(mhd_slab::Error::Format(format!(
                "unexpected table columns: {cols:?}"
            )));
        }
        Ok(ConvergenceTable {
            rows: rows.iter().map(|r| Row::from_slice(r)).collect(),
        })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let (cols, rows) = checkpoint::read_csv(path)?;
        if cols != COLUMNS {
            return Err(mhd_slab::Error::Format(format!(
                "unexpected table columns: {cols:?}"
            )));
        }
        Ok(ConvergenceTable {
            rows: rows.iter().map(|r| Row::from_slice(r)).collect(),
        })
    }

    pub fn lambdas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.iter().any(|l| *l == r.lambda) {
                out.push(r.lambda);
            }
        }
        out
    }

    pub fn rows_for(&self, lambda: f64) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.lambda == lambda)
    }

    /// Max of a column over rows of one lambda within [t_lo, t_hi].
    pub fn max_in_window(
        &self,
        lambda: f64,
        t_lo: f64,
        t_hi: f64,
        pick: impl Fn(&Row) -> f64,
    ) -> Option<f64> {
        let eps = 1e-12;
        self.rows_for(lambda)
            .filter(|r| r.t >= t_lo - eps && r.t <= t_hi + eps)
            .map(|r| pick(r))
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}
