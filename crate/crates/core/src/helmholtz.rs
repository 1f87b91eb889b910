//! Helmholtz decomposition on the slab and the underlying Poisson solves.
//!
//! Two solvers live here on purpose. `SlabProjector` realizes the
//! orthogonal projections P_G / P_S in the eigenbasis of the solver's own
//! parity-extended centered stencils, so complementarity, idempotence and
//! orthogonality hold to rounding and a projected field has exactly zero
//! discrete divergence under those stencils. `PoissonSolver` is the
//! tangential-FFT + fourth-order normal-stencil solver used where a genuine
//! Neumann problem with inhomogeneous wall data has to be solved (total
//! pressure recovery, manufactured-solution verification).

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::spectral::{SlabBasis, WavenumberScheme};

/// Orthogonal projection machinery; construct once per grid.
pub struct SlabProjector {
    basis: SlabBasis,
}

impl SlabProjector {
    pub fn new(grid: &Grid) -> Self {
        SlabProjector {
            basis: SlabBasis::new(grid, WavenumberScheme::Central4),
        }
    }

    fn check_admissible(&self, v1: &ScalarField, grid: &Grid) -> Result<()> {
        let last = (grid.n1 - 1) as isize;
        let scale = 1.0 + v1.max_abs();
        for j in 0..grid.n2 {
            if v1.get(0, j).abs() > 1e-12 * scale || v1.get(last, j).abs() > 1e-12 * scale {
                return Err(Error::Poisson(
                    "projection input has nonzero wall-normal component".into(),
                ));
            }
        }
        if !v1.all_finite() {
            return Err(Error::NonFinite("projection input".into()));
        }
        Ok(())
    }

    /// Gradient part of an admissible vector field (normal component odd
    /// with zero wall trace, tangential component even). The returned
    /// normal component vanishes exactly at the wall nodes and the third
    /// component is zero in the planar reduction.
    pub fn project_g(&self, v: [&ScalarField; 3], grid: &Grid) -> Result<[ScalarField; 3]> {
        self.check_admissible(v[0], grid)?;
        let b = &self.basis;
        let s = b.odd_coefficients(v[0]); // (m-1) x n2, modes 1..m-1
        let c = b.even_coefficients(v[1]); // (m+1) x n2, modes 0..m

        // phi coefficients in the cosine basis, one per (n, tangential) mode
        let mut phi = vec![Complex::new(0.0, 0.0); (b.m + 1) * b.n2];
        for n in 0..=b.m {
            let k1 = b.k1[n];
            for j in 0..b.n2 {
                let k2 = b.k2[j];
                let denom = k1 * k1 + k2 * k2;
                if denom == 0.0 {
                    continue; // null modes of the stencil carry no divergence
                }
                let s_nj = if n >= 1 && n < b.m {
                    s[(n - 1) * b.n2 + j]
                } else {
                    Complex::new(0.0, 0.0)
                };
                let div = k1 * s_nj + Complex::new(0.0, k2) * c[n * b.n2 + j];
                phi[n * b.n2 + j] = -div / denom;
            }
        }

        // gradient of phi: d1 -> sine coefficients, d2 -> i k2 cosine
        let mut g1 = vec![Complex::new(0.0, 0.0); (b.m - 1) * b.n2];
        for n in 1..b.m {
            let k1 = b.k1[n];
            for j in 0..b.n2 {
                g1[(n - 1) * b.n2 + j] = -k1 * phi[n * b.n2 + j];
            }
        }
        let mut g2 = vec![Complex::new(0.0, 0.0); (b.m + 1) * b.n2];
        for n in 0..=b.m {
            for j in 0..b.n2 {
                g2[n * b.n2 + j] = Complex::new(0.0, b.k2[j]) * phi[n * b.n2 + j];
            }
        }

        Ok([
            b.field_from_odd(&g1, grid),
            b.field_from_even(&g2, grid),
            ScalarField::zeros(grid),
        ])
    }

    /// Solenoidal part, defined as the exact complement v - P_G v.
    pub fn project_s(&self, v: [&ScalarField; 3], grid: &Grid) -> Result<[ScalarField; 3]> {
        let g = self.project_g(v, grid)?;
        let mut out = [v[0].clone(), v[1].clone(), v[2].clone()];
        for k in 0..3 {
            out[k].axpy(-1.0, &g[k]);
        }
        Ok(out)
    }
}

/// Discrete Neumann problem: Laplacian phi = rhs with prescribed d1 phi on
/// both walls and tangential periodicity. Wall data are coordinate
/// derivatives (not outward-normal ones).
#[derive(Debug, Clone)]
pub struct PoissonProblem {
    pub rhs: ScalarField,
    pub wall_lo: Vec<f64>,
    pub wall_hi: Vec<f64>,
    pub tol: f64,
}

impl PoissonProblem {
    pub fn homogeneous(rhs: ScalarField, grid: &Grid) -> Self {
        PoissonProblem {
            rhs,
            wall_lo: vec![0.0; grid.n2],
            wall_hi: vec![0.0; grid.n2],
            tol: 1e-8,
        }
    }
}

/// Tangentially spectral, normally fourth-order Poisson solver with cached
/// per-mode factorizations.
pub struct PoissonSolver {
    n1: usize,
    n2: usize,
    l1: f64,
    dx2_len: f64,
    basis: SlabBasis,
    /// LU factors per distinct tangential wavenumber magnitude; index by
    /// min(j, n2 - j). Mode zero uses the bordered zero-mean system.
    factors: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl PoissonSolver {
    pub fn new(grid: &Grid) -> Result<Self> {
        let basis = SlabBasis::new(grid, WavenumberScheme::Analytic);
        let n1 = grid.n1;
        let n2 = grid.n2;
        let h = grid.dx1;
        let mut factors = Vec::with_capacity(n2 / 2 + 1);
        for jm in 0..=n2 / 2 {
            let k2 = basis.k2[jm];
            let kk = k2 * k2;
            let mut a = DMatrix::<f64>::zeros(n1, n1);
            // wall rows: one-sided fourth-order first derivative
            let c1 = 1.0 / (12.0 * h);
            let lo = [-25.0, 48.0, -36.0, 16.0, -3.0];
            for (k, &w) in lo.iter().enumerate() {
                a[(0, k)] = w * c1;
                a[(n1 - 1, n1 - 1 - k)] = -w * c1;
            }
            // next-to-wall rows: fourth-order biased second derivative.
            // For the singular mean mode the near-wall row is given up to
            // the zero-mean constraint instead, which keeps every retained
            // equation exactly solvable.
            let c2 = 1.0 / (12.0 * h * h);
            let row1 = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
            if jm == 0 {
                for i in 0..n1 {
                    let w = if i == 0 || i == n1 - 1 { 0.5 } else { 1.0 };
                    a[(1, i)] = w * h;
                }
            } else {
                for (k, &w) in row1.iter().enumerate() {
                    a[(1, k)] += w * c2;
                }
                a[(1, 1)] -= kk;
            }
            for (k, &w) in row1.iter().enumerate() {
                a[(n1 - 2, n1 - 1 - k)] += w * c2;
            }
            a[(n1 - 2, n1 - 2)] -= kk;
            // interior rows: centered fourth-order second derivative
            let row = [-1.0, 16.0, -30.0, 16.0, -1.0];
            for i in 2..n1 - 2 {
                for (k, &w) in row.iter().enumerate() {
                    a[(i, i - 2 + k)] += w * c2;
                }
                a[(i, i)] -= kk;
            }
            factors.push(a.lu());
        }
        Ok(PoissonSolver {
            n1,
            n2,
            l1: grid.l1,
            dx2_len: grid.l2,
            basis,
            factors,
        })
    }

    pub fn solve(&self, problem: &PoissonProblem, grid: &Grid) -> Result<ScalarField> {
        if problem.wall_lo.len() != self.n2 || problem.wall_hi.len() != self.n2 {
            return Err(Error::Poisson("wall data length mismatch".into()));
        }
        if !problem.rhs.all_finite() {
            return Err(Error::NonFinite("poisson right-hand side".into()));
        }
        let b = &self.basis;
        let mut rhat = b.fft_x2(&problem.rhs);
        let mut lo = vec![Complex::new(0.0, 0.0); self.n2];
        let mut hi = vec![Complex::new(0.0, 0.0); self.n2];
        for j in 0..self.n2 {
            lo[j] = Complex::new(problem.wall_lo[j], 0.0);
            hi[j] = Complex::new(problem.wall_hi[j], 0.0);
        }
        b_fft_inplace(&self.basis, &mut lo);
        b_fft_inplace(&self.basis, &mut hi);

        // Neumann compatibility of the tangential mean mode, fixed by a
        // constant shift of the right-hand side.
        let h = self.l1 / (self.n1 - 1) as f64;
        let mut integral = Complex::new(0.0, 0.0);
        for i in 0..self.n1 {
            let w = if i == 0 || i == self.n1 - 1 { 0.5 } else { 1.0 };
            integral += w * h * rhat[i * self.n2];
        }
        let defect = (integral - (hi[0] - lo[0])) / self.l1;
        let scale = problem.rhs.max_abs().max(
            problem
                .wall_lo
                .iter()
                .chain(&problem.wall_hi)
                .fold(0.0f64, |m, v| m.max(v.abs())),
        );
        // small defects are discretization noise absorbed by the mean
        // correction; anything comparable to the data itself is a
        // genuinely incompatible problem
        if defect.norm() > 0.25 * (1.0 + scale) {
            return Err(Error::Poisson(format!(
                "incompatible Neumann data: defect {:.3e} beyond correction threshold",
                defect.norm()
            )));
        }
        for i in 0..self.n1 {
            rhat[i * self.n2] -= defect;
        }

        let mut phat = vec![Complex::new(0.0, 0.0); self.n1 * self.n2];
        for jm in 0..=self.n2 / 2 {
            // bins jm and n2 - jm share the same wavenumber magnitude
            let partner = (self.n2 - jm) % self.n2;
            let cols: Vec<usize> = if partner == jm {
                vec![jm]
            } else {
                vec![jm, partner]
            };
            for &j in &cols {
                let mut re = DVector::<f64>::zeros(self.n1);
                let mut im = DVector::<f64>::zeros(self.n1);
                for i in 0..self.n1 {
                    let r = if i == 0 {
                        lo[j]
                    } else if i == self.n1 - 1 {
                        hi[j]
                    } else if i == 1 && jm == 0 {
                        Complex::new(0.0, 0.0) // zero-mean pin
                    } else {
                        rhat[i * self.n2 + j]
                    };
                    re[i] = r.re;
                    im[i] = r.im;
                }
                let lu = &self.factors[jm];
                let xr = lu
                    .solve(&re)
                    .ok_or_else(|| Error::Poisson("singular mode system".into()))?;
                let xi = lu
                    .solve(&im)
                    .ok_or_else(|| Error::Poisson("singular mode system".into()))?;
                for i in 0..self.n1 {
                    phat[i * self.n2 + j] = Complex::new(xr[i], xi[i]);
                }
            }
        }
        let mut phi = self.basis.ifft_x2(phat, grid);

        // zero-mean normalization over the slab
        let mean = grid.integrate(&phi) / (self.l1 * self.dx2_len);
        for i in 0..grid.n1 {
            for v in phi.row_mut(i as isize) {
                *v -= mean;
            }
        }

        // residual check on the interior stencil rows
        let res = self.residual(&phi, problem, grid);
        if !res.is_finite() || res > problem.tol.max(1e-9) * (1.0 + scale) * 1e3 {
            return Err(Error::Poisson(format!(
                "residual {res:.3e} failed to meet tolerance"
            )));
        }
        Ok(phi)
    }

    fn residual(&self, phi: &ScalarField, problem: &PoissonProblem, grid: &Grid) -> f64 {
        // max interior defect of the centered second-difference rows
        let h2 = grid.dx1 * grid.dx1;
        let mut m = 0.0f64;
        let d2t = second_tangential(phi, grid);
        for i in 2..grid.n1 - 2 {
            let i = i as isize;
            for j in 0..grid.n2 {
                let lap1 = (-phi.get(i - 2, j) + 16.0 * phi.get(i - 1, j) - 30.0 * phi.get(i, j)
                    + 16.0 * phi.get(i + 1, j)
                    - phi.get(i + 2, j))
                    / (12.0 * h2);
                let defect = lap1 + d2t.get(i, j) - problem.rhs.get(i, j);
                m = m.max(defect.abs());
            }
        }
        m
    }
}

/// Spectral tangential second derivative (exact on the FFT modes).
fn second_tangential(f: &ScalarField, grid: &Grid) -> ScalarField {
    let basis = SlabBasis::new(grid, WavenumberScheme::Analytic);
    let mut buf = basis.fft_x2(f);
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let k2 = basis.k2[j];
            buf[i * grid.n2 + j] *= -k2 * k2;
        }
    }
    basis.ifft_x2(buf, grid)
}

fn b_fft_inplace(basis: &SlabBasis, row: &mut [Complex<f64>]) {
    // forward FFT of a single tangential line, reusing the basis plan
    let mut field_like = row.to_vec();
    basis.fft_line(&mut field_like);
    row.copy_from_slice(&field_like);
}
