//! The linearized acoustic subsystem: closed-form standing modes, an exact
//! modal integrator for wall-compatible data, and the nonlinear residual
//! fields that measure how far a compressible state sits from the linear
//! dynamics.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{diff_ghosted, Axis, Grid};
use crate::spectral::{SlabBasis, WavenumberScheme};
use crate::state::{MaterialLaw, StateField};

/// One standing acoustic mode with cosine-in-time phase for q.
#[derive(Debug, Clone, Copy)]
pub struct AcousticMode {
    pub k1: usize,
    pub k2: isize,
    pub amplitude: f64,
    pub lambda: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl AcousticMode {
    pub fn wave_vector(&self, grid: &Grid) -> (f64, f64) {
        (
            self.k1 as f64 * std::f64::consts::PI / grid.l1,
            2.0 * std::f64::consts::PI * self.k2 as f64 / grid.l2,
        )
    }

    pub fn frequency(&self, grid: &Grid) -> f64 {
        let (a, k) = self.wave_vector(grid);
        self.lambda * (self.mu1 * self.mu2).sqrt() * (a * a + k * k).sqrt()
    }
}

/// Closed-form standing-wave solution at time t: q is even in x1 (cosine),
/// the normal velocity odd (sine), so the wall conditions hold exactly.
pub fn modal_solution(mode: &AcousticMode, grid: &Grid, t: f64) -> (ScalarField, [ScalarField; 3]) {
    let (a, k) = mode.wave_vector(grid);
    let omega = mode.frequency(grid);
    let amp = mode.amplitude;
    let (ct, st) = if omega == 0.0 {
        (1.0, 0.0)
    } else {
        ((omega * t).cos(), (omega * t).sin())
    };
    let q = ScalarField::from_fn(grid, |x1, x2| {
        amp * (a * x1).cos() * (k * x2).cos() * ct
    });
    let vel_scale = if omega == 0.0 {
        0.0
    } else {
        mode.lambda * mode.mu2 / omega
    };
    let v1 = ScalarField::from_fn(grid, |x1, x2| {
        amp * vel_scale * a * (a * x1).sin() * (k * x2).cos() * st
    });
    let v2 = ScalarField::from_fn(grid, |x1, x2| {
        amp * vel_scale * k * (a * x1).cos() * (k * x2).sin() * st
    });
    let v3 = ScalarField::zeros(grid);
    (q, [v1, v2, v3])
}

/// Exact integrator of the linear system on the wall-compatible basis.
///
/// Data are expanded in cosine/sine modes, each mode is rotated by its
/// exact phase, and the result is resynthesized, so the evolution is exact
/// (to rounding) for the band-limited interpolant of the data. The grid's
/// normal Nyquist cosine has no sine partner and is treated as
/// non-propagating.
pub struct LinearAcoustic {
    basis: SlabBasis,
    lambda: f64,
    mu1: f64,
    mu2: f64,
}

pub struct AcousticSample {
    pub t: f64,
    pub q: ScalarField,
    pub v: [ScalarField; 3],
}

impl LinearAcoustic {
    pub fn new(grid: &Grid, lambda: f64, law: &MaterialLaw) -> Self {
        LinearAcoustic {
            basis: SlabBasis::new(grid, WavenumberScheme::Analytic),
            lambda,
            mu1: law.mu1(),
            mu2: law.mu2(),
        }
    }

    pub fn run_linear(
        &self,
        q0: &ScalarField,
        v0: &[ScalarField; 3],
        times: &[f64],
        grid: &Grid,
    ) -> Result<Vec<AcousticSample>> {
        let last = (grid.n1 - 1) as isize;
        let scale = 1.0 + v0[0].max_abs();
        for j in 0..grid.n2 {
            if v0[0].get(0, j).abs() > 1e-12 * scale
                || v0[0].get(last, j).abs() > 1e-12 * scale
            {
                return Err(Error::DataFamily(
                    "linear acoustics needs v1 = 0 at the walls".into(),
                ));
            }
        }
        let b = &self.basis;
        let q_c = b.even_coefficients(q0);
        let v1_c = b.odd_coefficients(&v0[0]);
        let v2_c = b.even_coefficients(&v0[1]);
        let m = b.m;
        let n2 = b.n2;

        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let mut qt = vec![Complex::new(0.0, 0.0); (m + 1) * n2];
            let mut v1t = vec![Complex::new(0.0, 0.0); (m - 1) * n2];
            let mut v2t = vec![Complex::new(0.0, 0.0); (m + 1) * n2];
            for n in 0..=m {
                // the Nyquist cosine has no grid-visible sine partner
                let alpha = if n < m { b.k1[n] } else { 0.0 };
                for j in 0..n2 {
                    let kappa = b.k2[j];
                    let kk = alpha * alpha + kappa * kappa;
                    let q0c = q_c[n * n2 + j];
                    let v1c = if n >= 1 && n < m {
                        v1_c[(n - 1) * n2 + j]
                    } else {
                        Complex::new(0.0, 0.0)
                    };
                    let v2c = v2_c[n * n2 + j];
                    if kk == 0.0 {
                        qt[n * n2 + j] = q0c;
                        v2t[n * n2 + j] = v2c;
                        continue;
                    }
                    let omega = self.lambda * (self.mu1 * self.mu2).sqrt() * kk.sqrt();
                    let div0 = alpha * v1c + Complex::new(0.0, kappa) * v2c;
                    let invariant = Complex::new(0.0, kappa) * v1c + alpha * v2c;
                    let (c, s) = ((omega * t).cos(), (omega * t).sin());
                    let q_new = q0c * c - div0 * (self.lambda * self.mu1 / omega) * s;
                    let div_new = div0 * c + q0c * (self.lambda * self.mu2 * kk / omega) * s;
                    qt[n * n2 + j] = q_new;
                    let v1_new = (alpha * div_new - Complex::new(0.0, kappa) * invariant) / kk;
                    let v2_new = (alpha * invariant - Complex::new(0.0, kappa) * div_new) / kk;
                    if n >= 1 && n < m {
                        v1t[(n - 1) * n2 + j] = v1_new;
                    }
                    v2t[n * n2 + j] = v2_new;
                }
            }
            // v3 is a zero-frequency spectator of the planar system
            out.push(AcousticSample {
                t,
                q: b.field_from_even(&qt, grid),
                v: [
                    b.field_from_odd(&v1t, grid),
                    b.field_from_even(&v2t, grid),
                    v0[2].clone(),
                ],
            });
        }
        Ok(out)
    }
}

/// Quadratic form conserved by the linear system:
/// E = int (mu2 q^2 + mu1 |v|^2) / (2 mu1 mu2).
pub fn acoustic_energy(
    q: &ScalarField,
    v: &[ScalarField; 3],
    law: &MaterialLaw,
    grid: &Grid,
    i_max: Option<usize>,
) -> f64 {
    let (mu1, mu2) = (law.mu1(), law.mu2());
    let cut = i_max.unwrap_or(grid.n1 - 1);
    let nq = grid.l2_norm_to(&[q], cut);
    let nv = grid.l2_norm_to(&[&v[0], &v[1], &v[2]], cut);
    (mu2 * nq * nq + mu1 * nv * nv) / (2.0 * mu1 * mu2)
}

/// The nonlinear remainder fields of the acoustic split, evaluated
/// pointwise from a state and its time derivative. The first field couples
/// to the pressure equation, the vector to the velocity equation.
pub fn residual_terms(
    state: &StateField,
    state_t: &StateField,
    law: &MaterialLaw,
    grid: &Grid,
) -> Result<(ScalarField, [ScalarField; 3])> {
    let lambda = state.lambda;
    let mu1 = law.mu1();
    let mu2 = law.mu2();
    let ratio_bar = 1.0 / mu1;
    let rho_bar = 1.0 / mu2;

    // spatial derivatives with the parity-filled stencils
    let dq = [
        diff_ghosted(&state.q, Axis::X1, grid),
        diff_ghosted(&state.q, Axis::X2, grid),
    ];
    let mut dv: Vec<[ScalarField; 2]> = Vec::with_capacity(3);
    let mut dh: Vec<[ScalarField; 2]> = Vec::with_capacity(3);
    for c in 0..3 {
        dv.push([
            diff_ghosted(&state.v[c], Axis::X1, grid),
            diff_ghosted(&state.v[c], Axis::X2, grid),
        ]);
        dh.push([
            diff_ghosted(&state.h[c], Axis::X1, grid),
            diff_ghosted(&state.h[c], Axis::X2, grid),
        ]);
    }

    let mut g0 = ScalarField::zeros(grid);
    let mut g = [
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
    ];
    for i in 0..grid.n1 {
        let ii = i as isize;
        for j in 0..grid.n2 {
            let q = state.q.get(ii, j);
            let v = [
                state.v[0].get(ii, j),
                state.v[1].get(ii, j),
                state.v[2].get(ii, j),
            ];
            let h = [
                state.h[0].get(ii, j),
                state.h[1].get(ii, j),
                state.h[2].get(ii, j),
            ];
            let qt = state_t.q.get(ii, j);
            let vt = [
                state_t.v[0].get(ii, j),
                state_t.v[1].get(ii, j),
                state_t.v[2].get(ii, j),
            ];
            let ht = [
                state_t.h[0].get(ii, j),
                state_t.h[1].get(ii, j),
                state_t.h[2].get(ii, j),
            ];
            let p = crate::state::q_to_p(q, h, lambda);
            let (rho, rho_p) = crate::state::eos(law, p)?;
            let ratio = rho_p / rho;

            let v_grad_q = v[0] * dq[0].get(ii, j) + v[1] * dq[1].get(ii, j);
            let mut h_dot_dth_adv = 0.0;
            for c in 0..3 {
                let advect = ht[c] + v[0] * dv_entry(&dh, c, 0, ii, j)
                    + v[1] * dv_entry(&dh, c, 1, ii, j);
                h_dot_dth_adv += h[c] / lambda * advect;
            }
            let g0_val =
                mu1 * ((ratio_bar - ratio) * qt - ratio * (v_grad_q - h_dot_dth_adv));
            g0.set(ii, j, g0_val);

            for c in 0..3 {
                let v_grad_vc =
                    v[0] * dv_entry(&dv, c, 0, ii, j) + v[1] * dv_entry(&dv, c, 1, ii, j);
                let h_grad_hc =
                    h[0] * dv_entry(&dh, c, 0, ii, j) + h[1] * dv_entry(&dh, c, 1, ii, j);
                let val = mu2 * ((rho_bar - rho) * vt[c] - rho * v_grad_vc + h_grad_hc);
                g[c].set(ii, j, val);
            }
        }
    }
    Ok((g0, g))
}

#[inline]
fn dv_entry(d: &[[ScalarField; 2]], comp: usize, axis: usize, i: isize, j: usize) -> f64 {
    d[comp][axis].get(i, j)
}
