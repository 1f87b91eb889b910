//! Discrete evaluation of the anisotropic norm families, their
//! lambda-weighted space-time versions, the bracket seminorm, and the
//! property battery for the weighted-space inequalities.
//!
//! A spatial norm is the root of a sum of squared L2 norms of composed
//! conormal/normal derivatives; the three families differ only in the
//! admissible index set. Quadrature is trapezoid in x1 and the exact mean
//! in the periodic direction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{conormal_diff_with_max, diff, Axis, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Star,
    Star2,
    Star3,
}

/// Which norm to evaluate: family, order, optional lambda weight, number of
/// time derivatives used by space-time versions, optional subdomain cut.
#[derive(Debug, Clone, Copy)]
pub struct NormSpec {
    pub family: Family,
    pub m: usize,
    pub lambda: Option<f64>,
    pub k_max_time: usize,
    /// Restrict quadrature to x1 <= subdomain_frac * L1.
    pub subdomain_frac: Option<f64>,
}

impl NormSpec {
    pub fn new(family: Family, m: usize) -> Self {
        NormSpec {
            family,
            m,
            lambda: None,
            k_max_time: 1,
            subdomain_frac: None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_subdomain(mut self, frac: f64) -> Self {
        self.subdomain_frac = Some(frac);
        self
    }
}

/// One (alpha, k) contribution to a spatial norm.
#[derive(Debug, Clone, Serialize)]
pub struct NormTerm {
    pub alpha1: usize,
    pub alpha2: usize,
    pub k: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub family: Family,
    pub m: usize,
    pub total: f64,
    pub terms: Vec<NormTerm>,
    pub quadrature: &'static str,
}

/// Admissible (alpha1, alpha2, k) triples for a family at order m, in a
/// fixed deterministic enumeration (k outer, then alpha1, alpha2).
pub fn index_set(family: Family, m: usize) -> Vec<(usize, usize, usize)> {
    let mut set = Vec::new();
    let k_cap = match family {
        Family::Star => m / 2,
        Family::Star2 => (m + 1) / 2,
        Family::Star3 => (m + 2) / 2,
    };
    for k in 0..=k_cap {
        for a1 in 0..=m {
            for a2 in 0..=m {
                let a = a1 + a2;
                let admitted = match family {
                    Family::Star => a + 2 * k <= m,
                    Family::Star2 => a + 2 * k <= m + 1 && a <= m,
                    Family::Star3 => {
                        a <= m
                            && match k {
                                0 => true,
                                1 => a + 2 <= m + 1,
                                _ => a + 2 * k <= m + 2,
                            }
                    }
                };
                if admitted {
                    set.push((a1, a2, k));
                }
            }
        }
    }
    set
}

/// Spatial anisotropic norm of a multi-component field.
pub fn norm_spatial(fields: &[&ScalarField], spec: &NormSpec, grid: &Grid) -> Result<NormReport> {
    if spec.m > 4 {
        return Err(Error::Norm(format!(
            "order m = {} beyond the discrete stencil budget (4)",
            spec.m
        )));
    }
    let i_max = match spec.subdomain_frac {
        Some(f) => grid.subdomain_end(f),
        None => grid.n1 - 1,
    };
    let max_order = spec.m + 2;
    let mut terms = Vec::new();
    let mut total2 = 0.0;
    for (a1, a2, k) in index_set(spec.family, spec.m) {
        let mut term2 = 0.0;
        for f in fields {
            let d = conormal_diff_with_max(f, [a1, a2, 0], k, grid, max_order)?;
            let v = grid.l2_norm_to(&[&d], i_max);
            term2 += v * v;
        }
        total2 += term2;
        terms.push(NormTerm {
            alpha1: a1,
            alpha2: a2,
            k,
            value: term2.sqrt(),
        });
    }
    Ok(NormReport {
        family: spec.family,
        m: spec.m,
        total: total2.sqrt(),
        terms,
        quadrature: "trapezoid-x1/exact-x2",
    })
}

/// A time sample carrying the state components and their time derivative.
/// The solvers provide these; the norm code only reads slices.
pub struct TimeSample<'a> {
    pub t: f64,
    pub fields: Vec<&'a ScalarField>,
    pub fields_t: Vec<&'a ScalarField>,
}

/// Instantaneous lambda-weighted space-time norm with k_max <= 2 time
/// derivatives: the k = 2 term, when requested, comes from a centered
/// difference of the neighbours' stored time derivatives.
fn norm_instant(
    sample: &TimeSample,
    second: Option<&[ScalarField]>,
    spec: &NormSpec,
    grid: &Grid,
    drop_zeroth: bool,
) -> Result<f64> {
    let lambda = spec.lambda.unwrap_or(1.0);
    let mut total2 = 0.0;
    for k_t in 0..=spec.k_max_time.min(spec.m) {
        if spec.m < k_t {
            break;
        }
        let sub = NormSpec {
            family: spec.family,
            m: spec.m - k_t,
            lambda: None,
            k_max_time: 0,
            subdomain_frac: spec.subdomain_frac,
        };
        let weight = lambda.powi(-(k_t as i32));
        let fields: Vec<&ScalarField> = match k_t {
            0 => sample.fields.clone(),
            1 => sample.fields_t.clone(),
            2 => match second {
                Some(s) => s.iter().collect(),
                None => {
                    return Err(Error::Norm(
                        "second time derivative unavailable in this window".into(),
                    ))
                }
            },
            _ => return Err(Error::Norm("k_max_time beyond 2".into())),
        };
        if drop_zeroth && k_t == 0 {
            // bracket seminorm: drop only the (k_t, alpha, k) = 0 term
            let i_max = match spec.subdomain_frac {
                Some(f) => grid.subdomain_end(f),
                None => grid.n1 - 1,
            };
            let max_order = sub.m + 2;
            for (a1, a2, k) in index_set(sub.family, sub.m) {
                if a1 == 0 && a2 == 0 && k == 0 {
                    continue;
                }
                for f in &fields {
                    let d = conormal_diff_with_max(f, [a1, a2, 0], k, grid, max_order)?;
                    let v = grid.l2_norm_to(&[&d], i_max);
                    total2 += weight * weight * v * v;
                }
            }
        } else {
            let report = norm_spatial(&fields, &sub, grid)?;
            total2 += weight * weight * report.total * report.total;
        }
    }
    Ok(total2.sqrt())
}

/// Instantaneous weighted norm of one sample (k_max_time <= 1); the
/// harness evaluates this per stored time and takes its own sup.
pub fn norm_instant_lambda(
    fields: &[&ScalarField],
    fields_t: &[&ScalarField],
    spec: &NormSpec,
    grid: &Grid,
) -> Result<f64> {
    if spec.k_max_time > 1 {
        return Err(Error::Norm(
            "instantaneous norm supports at most one time derivative".into(),
        ));
    }
    let sample = TimeSample {
        t: 0.0,
        fields: fields.to_vec(),
        fields_t: fields_t.to_vec(),
    };
    norm_instant(&sample, None, spec, grid, false)
}

/// Space-time norm: sup over the stored samples inside the window of the
/// instantaneous weighted norm.
pub fn norm_spacetime_lambda<'a>(
    samples: &'a [TimeSample<'a>],
    spec: &NormSpec,
    window: (f64, f64),
    grid: &Grid,
) -> Result<f64> {
    sup_over_window(samples, spec, window, grid, false)
}

/// Bracket seminorm over the window: same terms minus the zeroth one.
pub fn seminorm_bracket<'a>(
    samples: &'a [TimeSample<'a>],
    spec: &NormSpec,
    window: (f64, f64),
    grid: &Grid,
) -> Result<f64> {
    sup_over_window(samples, spec, window, grid, true)
}

fn sup_over_window<'a>(
    samples: &'a [TimeSample<'a>],
    spec: &NormSpec,
    window: (f64, f64),
    grid: &Grid,
    drop_zeroth: bool,
) -> Result<f64> {
    let eps = 1e-12;
    let in_window: Vec<usize> = (0..samples.len())
        .filter(|&i| samples[i].t >= window.0 - eps && samples[i].t <= window.1 + eps)
        .collect();
    if in_window.len() < spec.k_max_time + 1 {
        return Err(Error::Norm(format!(
            "window holds {} samples, need at least {}",
            in_window.len(),
            spec.k_max_time + 1
        )));
    }
    let mut sup: f64 = 0.0;
    for &i in &in_window {
        let second = if spec.k_max_time >= 2 {
            Some(second_derivative(samples, i)?)
        } else {
            None
        };
        let v = norm_instant(&samples[i], second.as_deref(), spec, grid, drop_zeroth)?;
        sup = sup.max(v);
    }
    Ok(sup)
}

/// Centered difference of the stored first time derivatives.
fn second_derivative(samples: &[TimeSample], i: usize) -> Result<Vec<ScalarField>> {
    let (lo, hi) = if i == 0 {
        (0, 1)
    } else if i == samples.len() - 1 {
        (samples.len() - 2, samples.len() - 1)
    } else {
        (i - 1, i + 1)
    };
    let dt = samples[hi].t - samples[lo].t;
    if dt <= 0.0 {
        return Err(Error::Norm("non-increasing sample times".into()));
    }
    let mut out = Vec::with_capacity(samples[i].fields_t.len());
    for c in 0..samples[i].fields_t.len() {
        let mut d = samples[hi].fields_t[c].clone();
        d.axpy(-1.0, samples[lo].fields_t[c]);
        d.scale(1.0 / dt);
        out.push(d);
    }
    Ok(out)
}

/// Sup norm of a field together with its first conormal derivatives.
pub fn w1inf_star(f: &ScalarField, grid: &Grid) -> f64 {
    let mut m = f.max_abs();
    let d1 = diff(f, Axis::X1, grid);
    for i in 0..grid.n1 {
        let s = grid.sigma_at(i);
        for &v in d1.row(i as isize) {
            m = m.max((s * v).abs());
        }
    }
    let d2 = diff(f, Axis::X2, grid);
    m = m.max(d2.max_abs());
    m
}

/// Pointwise quotient u / sigma for fields vanishing on the near wall; the
/// wall row uses the one-sided normal derivative (sigma has unit slope
/// there).
pub fn sigma_quotient(u: &ScalarField, grid: &Grid) -> Result<ScalarField> {
    let scale = 1.0 + u.max_abs();
    for j in 0..grid.n2 {
        if u.get(0, j).abs() > 1e-10 * scale {
            return Err(Error::Norm(
                "sigma quotient requires a zero trace on the near wall".into(),
            ));
        }
    }
    let d1 = diff(u, Axis::X1, grid);
    let mut out = ScalarField::zeros(grid);
    for i in 0..grid.n1 {
        let s = grid.sigma_at(i);
        for j in 0..grid.n2 {
            let v = if i == 0 {
                d1.get(0, j)
            } else {
                u.get(i as isize, j) / s
            };
            out.set(i as isize, j, v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryLevel {
    pub n1: usize,
    pub n2: usize,
    /// sup over test functions of ||u||_{m,**} / (||u||_{m,*} + ||d1 u||_{m-1,*})
    pub characterization_sup: f64,
    /// sup over pairs of ||uv||_{m,**} / (||u|| ||v||_W + ||u||_W ||v||)
    pub moser_sup: f64,
    /// sup over wall-vanishing tests of ||u/sigma||_{m-1,*} / ||u||_{m,**}
    pub sigma_division_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatteryReport {
    pub m: usize,
    pub levels: Vec<BatteryLevel>,
    /// Largest relative spread of each observed sup across the ladder.
    pub characterization_spread: f64,
    pub moser_spread: f64,
    pub sigma_division_spread: f64,
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    if max <= 0.0 {
        0.0
    } else {
        (max - min) / max
    }
}

/// Run the inequality battery for order `m` across a refinement ladder.
/// The test functions are fixed smooth profiles resolved on the coarsest
/// level; the wall-vanishing subset feeds the sigma-division ratio.
pub fn appendix_battery(m: usize, ladder: &[(usize, usize)], l1: f64, l2: f64) -> Result<BatteryReport> {
    use std::f64::consts::PI;
    let mut levels = Vec::new();
    for &(n1, n2) in ladder {
        let grid = crate::grid::build_grid(n1, n2, l1, l2)?;
        let tp = 2.0 * PI / l2;
        let tests: Vec<ScalarField> = vec![
            ScalarField::from_fn(&grid, |x1, x2| (PI * x1 / l1).cos() * (tp * x2).cos()),
            ScalarField::from_fn(&grid, |x1, x2| {
                (0.8 * x1).exp() * (1.0 + 0.3 * (tp * x2).sin())
            }),
            ScalarField::from_fn(&grid, |x1, x2| {
                (2.0 * PI * x1 / l1).sin() * (tp * 2.0 * x2).cos() + 0.5
            }),
        ];
        let wall_zero: Vec<ScalarField> = vec![
            ScalarField::from_fn(&grid, |x1, x2| (PI * x1 / l1).sin() * (tp * x2).cos()),
            ScalarField::from_fn(&grid, |x1, x2| {
                x1 * (l1 - x1) * (1.0 + 0.4 * (tp * x2).sin())
            }),
        ];

        let spec2 = NormSpec::new(Family::Star2, m);
        let spec_star = NormSpec::new(Family::Star, m);
        let spec_star_m1 = NormSpec::new(Family::Star, m - 1);

        let mut char_sup = 0.0f64;
        let mut moser_sup = 0.0f64;
        for u in tests.iter().chain(wall_zero.iter()) {
            let n2v = norm_spatial(&[u], &spec2, &grid)?.total;
            let ns = norm_spatial(&[u], &spec_star, &grid)?.total;
            let du = diff(u, Axis::X1, &grid);
            let nds = norm_spatial(&[&du], &spec_star_m1, &grid)?.total;
            char_sup = char_sup.max(n2v / (ns + nds));
        }
        for u in &tests {
            for v in &tests {
                let prod = ScalarField::zip_interior(&[u, v], |x| x[0] * x[1]);
                let nuv = norm_spatial(&[&prod], &spec2, &grid)?.total;
                let nu = norm_spatial(&[u], &spec2, &grid)?.total;
                let nv = norm_spatial(&[v], &spec2, &grid)?.total;
                let wu = w1inf_star(u, &grid);
                let wv = w1inf_star(v, &grid);
                moser_sup = moser_sup.max(nuv / (nu * wv + wu * nv));
            }
        }
        let mut sigma_sup = 0.0f64;
        for u in &wall_zero {
            let q = sigma_quotient(u, &grid)?;
            let nq = norm_spatial(&[&q], &spec_star_m1, &grid)?.total;
            let nu = norm_spatial(&[u], &spec2, &grid)?.total;
            sigma_sup = sigma_sup.max(nq / nu);
        }
        levels.push(BatteryLevel {
            n1,
            n2,
            characterization_sup: char_sup,
            moser_sup,
            sigma_division_sup: sigma_sup,
        });
    }
    let c: Vec<f64> = levels.iter().map(|l| l.characterization_sup).collect();
    let mo: Vec<f64> = levels.iter().map(|l| l.moser_sup).collect();
    let sg: Vec<f64> = levels.iter().map(|l| l.sigma_division_sup).collect();
    Ok(BatteryReport {
        m,
        levels,
        characterization_spread: spread(&c),
        moser_spread: spread(&mo),
        sigma_division_spread: spread(&sg),
    })
}
