//! The sweep experiment: one incompressible reference run plus one
//! compressible run per stiffness value, aligned on common output times
//! and reduced to the convergence table.

use serde::Serialize;

use mhd_slab::acoustic::residual_terms;
use mhd_slab::field::ScalarField;
use mhd_slab::grid::{diff, divergence_one_sided, Axis, Grid};
use mhd_slab::helmholtz::{PoissonSolver, SlabProjector};
use mhd_slab::incompressible::{
    run_incompressible, IncompressibleConfig, IncompressibleTrajectory,
};
use mhd_slab::norms::{norm_instant_lambda, norm_spatial, Family, NormSpec};
use mhd_slab::solver::{div_h, energy_residual, run, SolverConfig, Trajectory};
use mhd_slab::state::make_initial_data;
use mhd_slab::{Error, MaterialLaw};

use crate::config::RunConfig;
use crate::table::{ConvergenceTable, Row};
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct BlowupRecord {
    pub lambda: f64,
    pub time: f64,
    pub reason: String,
}

/// Per-lambda scalars that do not fit the table schema.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaSummary {
    pub lambda: f64,
    pub achieved_t: f64,
    /// sup over stored times of the weighted space-time norm surrogate.
    pub weighted_norm_sup: f64,
    /// the same surrogate without the lambda weight.
    pub unweighted_norm_sup: f64,
    /// sup over stored times of the L2 norm of the acoustic remainder.
    pub acoustic_residual_sup: f64,
    pub max_div_h: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub sigma: String,
    pub eos: String,
    pub columns: Vec<String>,
    pub table: ConvergenceTable,
    pub summaries: Vec<LambdaSummary>,
    pub blowups: Vec<BlowupRecord>,
    pub layer: Option<LayerReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerRow {
    pub lambda: f64,
    pub e_early: f64,
    pub e_late: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerReport {
    pub t_split: f64,
    pub per_lambda: Vec<LayerRow>,
    /// Early/late ratio grows with lambda (needs at least two lambdas).
    pub ratio_increasing: Option<bool>,
    pub e_late_decreasing: Option<bool>,
    pub layer_flag: Option<bool>,
}

/// Per-timestamp comparison metrics between a compressible trajectory and
/// the incompressible reference.
#[derive(Debug, Clone, Serialize)]
pub struct LimitMetrics {
    pub t: f64,
    pub err_v: f64,
    pub err_q: f64,
    pub err_h: f64,
    pub grad_q_err: f64,
}

/// Match stored samples of the two trajectories on common timestamps in
/// the window and evaluate the local comparison norms.
pub fn compare_to_limit(
    ctraj: &Trajectory,
    itraj: &IncompressibleTrajectory,
    grid: &Grid,
    subdomain_frac: f64,
    window: (f64, f64),
) -> Result<Vec<LimitMetrics>, HarnessError> {
    let eps = 1e-9;
    let i_max = grid.subdomain_end(subdomain_frac);
    let mut out = Vec::new();
    for cs in &ctraj.samples {
        if cs.t < window.0 - eps || cs.t > window.1 + eps {
            continue;
        }
        let Some(is) = itraj.samples.iter().find(|s| (s.t - cs.t).abs() < eps) else {
            continue;
        };
        let diff_v: Vec<ScalarField> = (0..3)
            .map(|c| {
                let mut d = cs.state.v[c].clone();
                d.axpy(-1.0, &is.state.w[c]);
                d
            })
            .collect();
        let err_v = grid.l2_norm_to(&[&diff_v[0], &diff_v[1], &diff_v[2]], i_max);
        let err_q = grid.l2_norm(&[&cs.state.q]);
        let diff_h: Vec<ScalarField> = (0..3)
            .map(|c| {
                let mut d = cs.state.h[c].clone();
                d.axpy(-1.0, &is.state.b[c]);
                d
            })
            .collect();
        let spec_h = NormSpec::new(Family::Star, 1).with_subdomain(subdomain_frac);
        let err_h = norm_spatial(&[&diff_h[0], &diff_h[1], &diff_h[2]], &spec_h, grid)
            .map_err(HarnessError::Core)?
            .total;

        // sup | lambda grad q - grad(pi + |B|^2/2) | over the subdomain
        let mut gq1 = diff(&cs.state.q, Axis::X1, grid);
        let mut gq2 = diff(&cs.state.q, Axis::X2, grid);
        gq1.scale(ctraj.lambda);
        gq2.scale(ctraj.lambda);
        let gp1 = diff(&is.state.pi_total, Axis::X1, grid);
        let gp2 = diff(&is.state.pi_total, Axis::X2, grid);
        gq1.axpy(-1.0, &gp1);
        gq2.axpy(-1.0, &gp2);
        let grad_q_err = grid.linf_to(&[&gq1, &gq2], i_max);

        out.push(LimitMetrics {
            t: cs.t,
            err_v,
            err_q,
            err_h,
            grad_q_err,
        });
    }
    if out.is_empty() {
        return Err(HarnessError::Config(
            "trajectories share no timestamps in the window".into(),
        ));
    }
    Ok(out)
}

/// Split the err_v history at t0: layer data live in [0, t0], the
/// convergent regime in [t0, T].
pub fn detect_initial_layer(
    table: &ConvergenceTable,
    t0: f64,
) -> Result<LayerReport, HarnessError> {
    let lambdas = table.lambdas();
    if lambdas.is_empty() {
        return Err(HarnessError::Config("empty table".into()));
    }
    let t_end = table
        .rows
        .iter()
        .map(|r| r.t)
        .fold(f64::MIN, f64::max);
    let mut per_lambda = Vec::new();
    for &l in &lambdas {
        let e_early = table
            .max_in_window(l, 0.0, t0, |r| r.err_v)
            .ok_or_else(|| HarnessError::Config(format!("no samples in [0, {t0}] for lambda {l}")))?;
        let e_late = table
            .max_in_window(l, t0, t_end, |r| r.err_v)
            .ok_or_else(|| {
                HarnessError::Config(format!("no samples in [{t0}, {t_end}] for lambda {l}"))
            })?;
        per_lambda.push(LayerRow {
            lambda: l,
            e_early,
            e_late,
        });
    }
    let (ratio_increasing, e_late_decreasing, layer_flag) = if per_lambda.len() >= 2 {
        let ratios: Vec<f64> = per_lambda
            .iter()
            .map(|r| r.e_early / r.e_late.max(1e-300))
            .collect();
        let inc = ratios.windows(2).all(|w| w[1] > w[0]);
        let dec = per_lambda
            .windows(2)
            .all(|w| w[1].e_late < w[0].e_late);
        (Some(inc), Some(dec), Some(inc && dec))
    } else {
        (None, None, None)
    };
    Ok(LayerReport {
        t_split: t0,
        per_lambda,
        ratio_increasing,
        e_late_decreasing,
        layer_flag,
    })
}

struct LambdaOutcome {
    rows: Vec<Row>,
    summary: Option<LambdaSummary>,
    blowup: Option<BlowupRecord>,
}

/// Run the incompressible reference once and the compressible solver per
/// lambda, then assemble the table. Individual blow-ups are recorded and
/// the sweep continues. Optionally returns the trajectories for callers
/// that need more than the table.
pub fn run_sweep(config: &RunConfig) -> Result<SweepReport, HarnessError> {
    config.validate()?;
    let grid = mhd_slab::build_grid(
        config.grid.n1,
        config.grid.n2,
        config.grid.l1,
        config.grid.l2,
    )
    .map_err(HarnessError::Core)?;
    let law = config.eos;
    let projector = SlabProjector::new(&grid);
    let poisson = PoissonSolver::new(&grid).map_err(HarnessError::Core)?;

    // reference data: the velocity/field profiles are lambda-independent
    let seed_state = make_initial_data(&config.family, &grid, config.run.lambdas[0])
        .map_err(HarnessError::Core)?;
    let inc_config = IncompressibleConfig {
        cfl: config.run.cfl,
        epsilon: config.run.epsilon,
        t_final: config.run.t_final,
        outputs: config.run.outputs,
    };
    let itraj = run_incompressible(
        &inc_config,
        &grid,
        &law,
        &seed_state.v,
        &seed_state.h,
        &projector,
        &poisson,
    )
    .map_err(HarnessError::Core)?;

    let subdomain = config.measure.subdomain_fraction;
    let outcomes: Vec<LambdaOutcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .run
            .lambdas
            .iter()
            .map(|&lambda| {
                let grid = &grid;
                let law = &law;
                let itraj = &itraj;
                let config = &config;
                scope.spawn(move || {
                    one_lambda(lambda, config, grid, law, itraj, subdomain)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut table = ConvergenceTable::default();
    let mut summaries = Vec::new();
    let mut blowups = Vec::new();
    for o in outcomes {
        table.rows.extend(o.rows);
        if let Some(s) = o.summary {
            summaries.push(s);
        }
        if let Some(b) = o.blowup {
            blowups.push(b);
        }
    }
    let layer = if table.rows.is_empty() {
        None
    } else {
        detect_initial_layer(
            &table,
            config.measure.layer_split_fraction * config.run.t_final,
        )
        .ok()
    };
    Ok(SweepReport {
        config_hash: config.fingerprint(),
        sigma: format!("quintic {} {}", 0.25 * grid.l1, 0.75 * grid.l1),
        eos: law.tag(),
        columns: crate::table::COLUMNS.iter().map(|s| s.to_string()).collect(),
        table,
        summaries,
        blowups,
        layer,
    })
}

fn one_lambda(
    lambda: f64,
    config: &RunConfig,
    grid: &Grid,
    law: &MaterialLaw,
    itraj: &IncompressibleTrajectory,
    subdomain: f64,
) -> LambdaOutcome {
    let projector = SlabProjector::new(grid);
    let initial = match make_initial_data(&config.family, grid, lambda) {
        Ok(s) => s,
        Err(e) => {
            return LambdaOutcome {
                rows: Vec::new(),
                summary: None,
                blowup: Some(BlowupRecord {
                    lambda,
                    time: 0.0,
                    reason: e.to_string(),
                }),
            }
        }
    };
    let solver_config = SolverConfig {
        lambda,
        cfl: config.run.cfl,
        epsilon: config.run.epsilon,
        t_final: config.run.t_final,
        clean_every: config.run.clean_every,
        outputs: config.run.outputs,
    };
    let ctraj = match run(&solver_config, grid, law, &initial, &projector) {
        Ok(t) => t,
        Err(Error::Blowup { time, reason }) => {
            return LambdaOutcome {
                rows: Vec::new(),
                summary: None,
                blowup: Some(BlowupRecord {
                    lambda,
                    time,
                    reason,
                }),
            }
        }
        Err(e) => {
            return LambdaOutcome {
                rows: Vec::new(),
                summary: None,
                blowup: Some(BlowupRecord {
                    lambda,
                    time: 0.0,
                    reason: e.to_string(),
                }),
            }
        }
    };
    match reduce_lambda(&ctraj, itraj, config, grid, law, subdomain) {
        Ok((rows, summary)) => LambdaOutcome {
            rows,
            summary: Some(summary),
            blowup: None,
        },
        Err(e) => LambdaOutcome {
            rows: Vec::new(),
            summary: None,
            blowup: Some(BlowupRecord {
                lambda,
                time: ctraj.t_end(),
                reason: format!("reduction failed: {e}"),
            }),
        },
    }
}

fn reduce_lambda(
    ctraj: &Trajectory,
    itraj: &IncompressibleTrajectory,
    config: &RunConfig,
    grid: &Grid,
    law: &MaterialLaw,
    subdomain: f64,
) -> Result<(Vec<Row>, LambdaSummary), HarnessError> {
    let lambda = ctraj.lambda;
    let metrics = compare_to_limit(
        ctraj,
        itraj,
        grid,
        subdomain,
        (0.0, config.run.t_final),
    )?;
    let m = config.measure.norm_order;
    let spec_weighted = NormSpec::new(Family::Star2, m).with_lambda(lambda);
    let spec_unweighted = NormSpec::new(Family::Star2, m);

    let mut rows = Vec::new();
    let mut weighted_sup: f64 = 0.0;
    let mut unweighted_sup: f64 = 0.0;
    let mut residual_sup: f64 = 0.0;
    let mut max_div: f64 = 0.0;
    for (k, (sample, lm)) in ctraj.samples.iter().zip(&metrics).enumerate() {
        let fields = sample.state.components();
        let fields_t = sample.tendency.components();
        let weighted = norm_instant_lambda(&fields, &fields_t, &spec_weighted, grid)
            .map_err(HarnessError::Core)?;
        let unweighted = norm_instant_lambda(&fields, &fields_t, &spec_unweighted, grid)
            .map_err(HarnessError::Core)?;
        weighted_sup = weighted_sup.max(weighted);
        unweighted_sup = unweighted_sup.max(unweighted);

        let gq1 = diff(&sample.state.q, Axis::X1, grid);
        let gq2 = diff(&sample.state.q, Axis::X2, grid);
        let grad_q = grid.l2_norm(&[&gq1, &gq2]);
        let div_v = grid.l2_norm(&[&divergence_one_sided(
            &sample.state.v[0],
            &sample.state.v[1],
            grid,
        )]);
        let wp_metric = lambda * (grad_q + div_v);

        let div = div_h(&sample.state, grid).max_abs();
        max_div = max_div.max(div);

        let (g0, g) = residual_terms(&sample.state, &sample.tendency, law, grid)
            .map_err(HarnessError::Core)?;
        let res = grid.l2_norm(&[&g0, &g[0], &g[1], &g[2]]);
        residual_sup = residual_sup.max(res);

        // centered three-sample window, clamped at the ends
        let n = ctraj.samples.len();
        let mid = k.clamp(1, n.saturating_sub(2).max(1));
        let e_res = if n >= 3 {
            energy_residual(
                &ctraj.samples[mid - 1..=mid + 1],
                grid,
                law,
                ctraj.epsilon,
            )
            .map_err(HarnessError::Core)?
        } else {
            0.0
        };

        rows.push(Row {
            lambda,
            t: sample.t,
            err_v: lm.err_v,
            err_q: lm.err_q,
            err_h: lm.err_h,
            norm_ss_lambda: weighted,
            wp_metric,
            div_h: div,
            energy_residual: e_res,
            grad_q_err: lm.grad_q_err,
        });
    }
    Ok((
        rows,
        LambdaSummary {
            lambda,
            achieved_t: ctraj.t_end(),
            weighted_norm_sup: weighted_sup,
            unweighted_norm_sup: unweighted_sup,
            acoustic_residual_sup: residual_sup,
            max_div_h: max_div,
        },
    ))
}
