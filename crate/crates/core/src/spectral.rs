//! Wall-compatible spectral bases on the slab.
//!
//! Fields on the slab extend across the walls by parity: even components
//! are cosines `cos(n pi x1 / L1)`, odd components are sines. Both families
//! are exactly orthogonal under the trapezoid weights of the grid, and the
//! parity-filled centered difference acts diagonally on them with the
//! modified wavenumber of the stencil. The periodic direction is handled
//! by an FFT. Two wavenumber schemes are provided: the exact analytic one
//! (for closed-form acoustics) and the centered-stencil one (for
//! projections that must commute with the solver's operators).

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::field::ScalarField;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavenumberScheme {
    /// Exact analytic wavenumbers n*pi/L1 and 2*pi*m/L2.
    Analytic,
    /// Modified wavenumbers of the fourth-order centered first derivative.
    Central4,
}

/// Modified wavenumber of the 5-point fourth-order first derivative.
fn k_central4(k_exact: f64, h: f64) -> f64 {
    let theta = k_exact * h;
    (8.0 * theta.sin() - (2.0 * theta).sin()) / (6.0 * h)
}

pub struct SlabBasis {
    pub n1: usize,
    pub n2: usize,
    /// Number of x1 intervals, n1 - 1.
    pub m: usize,
    /// k1[n]: wavenumber attached to cos/sin mode n (0..=m).
    pub k1: Vec<f64>,
    /// k2[j]: signed tangential wavenumber of FFT bin j.
    pub k2: Vec<f64>,
    /// cos_tab[n * n1 + i] = cos(n pi i / m)
    cos_tab: Vec<f64>,
    /// sin_tab[(n-1) * n1 + i] = sin(n pi i / m), n = 1..m-1
    sin_tab: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl SlabBasis {
    pub fn new(grid: &Grid, scheme: WavenumberScheme) -> Self {
        let n1 = grid.n1;
        let n2 = grid.n2;
        let m = n1 - 1;
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n2);
        let fft_inv = planner.plan_fft_inverse(n2);

        let mut k1 = Vec::with_capacity(m + 1);
        for n in 0..=m {
            let exact = n as f64 * PI / grid.l1;
            k1.push(match scheme {
                WavenumberScheme::Analytic => exact,
                WavenumberScheme::Central4 => k_central4(exact, grid.dx1),
            });
        }
        let mut k2 = Vec::with_capacity(n2);
        for j in 0..n2 {
            let signed = if j <= n2 / 2 {
                j as isize
            } else {
                j as isize - n2 as isize
            };
            let exact = 2.0 * PI * signed as f64 / grid.l2;
            k2.push(match scheme {
                WavenumberScheme::Analytic => exact,
                WavenumberScheme::Central4 => k_central4(exact, grid.dx2),
            });
        }

        let mut cos_tab = vec![0.0; (m + 1) * n1];
        for n in 0..=m {
            for i in 0..n1 {
                cos_tab[n * n1 + i] = (n as f64 * PI * i as f64 / m as f64).cos();
            }
        }
        let mut sin_tab = vec![0.0; m.saturating_sub(1) * n1];
        for n in 1..m {
            for i in 0..n1 {
                sin_tab[(n - 1) * n1 + i] = (n as f64 * PI * i as f64 / m as f64).sin();
            }
        }

        SlabBasis {
            n1,
            n2,
            m,
            k1,
            k2,
            cos_tab,
            sin_tab,
            fft_fwd,
            fft_inv,
        }
    }

    /// Forward FFT of a single tangential line, in place.
    pub fn fft_line(&self, line: &mut [Complex<f64>]) {
        self.fft_fwd.process(line);
    }

    /// Forward FFT along x2 of the interior nodes; layout `buf[i * n2 + j]`.
    pub fn fft_x2(&self, f: &ScalarField) -> Vec<Complex<f64>> {
        let mut buf = Vec::with_capacity(self.n1 * self.n2);
        for i in 0..self.n1 {
            for &v in f.row(i as isize) {
                buf.push(Complex::new(v, 0.0));
            }
        }
        for i in 0..self.n1 {
            self.fft_fwd
                .process(&mut buf[i * self.n2..(i + 1) * self.n2]);
        }
        buf
    }

    /// Inverse of `fft_x2`, writing the real part into a fresh field.
    pub fn ifft_x2(&self, mut buf: Vec<Complex<f64>>, grid: &Grid) -> ScalarField {
        let scale = 1.0 / self.n2 as f64;
        for i in 0..self.n1 {
            self.fft_inv
                .process(&mut buf[i * self.n2..(i + 1) * self.n2]);
        }
        let mut out = ScalarField::zeros(grid);
        for i in 0..self.n1 {
            let row = out.row_mut(i as isize);
            for (j, r) in row.iter_mut().enumerate() {
                *r = buf[i * self.n2 + j].re * scale;
            }
        }
        out
    }

    /// Cosine analysis per tangential mode: `coef[n * n2 + j]`.
    /// Exact inverse of `cos_synthesize` thanks to trapezoid orthogonality.
    pub fn cos_analyze(&self, buf: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let (n1, n2, m) = (self.n1, self.n2, self.m);
        let mut coef = vec![Complex::new(0.0, 0.0); (m + 1) * n2];
        for n in 0..=m {
            let tab = &self.cos_tab[n * n1..(n + 1) * n1];
            let acc = &mut coef[n * n2..(n + 1) * n2];
            for i in 0..n1 {
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                let c = w * tab[i];
                let row = &buf[i * n2..(i + 1) * n2];
                for (a, &v) in acc.iter_mut().zip(row) {
                    *a += c * v;
                }
            }
            let norm = if n == 0 || n == m {
                1.0 / m as f64
            } else {
                2.0 / m as f64
            };
            for a in acc.iter_mut() {
                *a *= norm;
            }
        }
        coef
    }

    pub fn cos_synthesize(&self, coef: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let (n1, n2, m) = (self.n1, self.n2, self.m);
        let mut buf = vec![Complex::new(0.0, 0.0); n1 * n2];
        for n in 0..=m {
            let tab = &self.cos_tab[n * n1..(n + 1) * n1];
            let src = &coef[n * n2..(n + 1) * n2];
            for i in 0..n1 {
                let c = tab[i];
                let row = &mut buf[i * n2..(i + 1) * n2];
                for (r, &a) in row.iter_mut().zip(src) {
                    *r += c * a;
                }
            }
        }
        buf
    }

    /// Sine analysis; modes n = 1..m-1, layout `coef[(n-1) * n2 + j]`.
    /// The field must vanish at the wall nodes for the pair
    /// analyze/synthesize to be a bijection.
    pub fn sin_analyze(&self, buf: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let (n1, n2, m) = (self.n1, self.n2, self.m);
        let mut coef = vec![Complex::new(0.0, 0.0); (m - 1) * n2];
        for n in 1..m {
            let tab = &self.sin_tab[(n - 1) * n1..n * n1];
            let acc = &mut coef[(n - 1) * n2..n * n2];
            for i in 1..m {
                let c = tab[i];
                let row = &buf[i * n2..(i + 1) * n2];
                for (a, &v) in acc.iter_mut().zip(row) {
                    *a += c * v;
                }
            }
            let norm = 2.0 / m as f64;
            for a in acc.iter_mut() {
                *a *= norm;
            }
        }
        coef
    }

    pub fn sin_synthesize(&self, coef: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let (n1, n2, m) = (self.n1, self.n2, self.m);
        let mut buf = vec![Complex::new(0.0, 0.0); n1 * n2];
        for n in 1..m {
            let tab = &self.sin_tab[(n - 1) * n1..n * n1];
            let src = &coef[(n - 1) * n2..n * n2];
            for i in 1..m {
                let c = tab[i];
                let row = &mut buf[i * n2..(i + 1) * n2];
                for (r, &a) in row.iter_mut().zip(src) {
                    *r += c * a;
                }
            }
        }
        buf
    }

    /// Round trip grid -> (FFT, cosine) coefficients for an even component.
    pub fn even_coefficients(&self, f: &ScalarField) -> Vec<Complex<f64>> {
        self.cos_analyze(&self.fft_x2(f))
    }

    /// Round trip grid -> (FFT, sine) coefficients for an odd component.
    pub fn odd_coefficients(&self, f: &ScalarField) -> Vec<Complex<f64>> {
        self.sin_analyze(&self.fft_x2(f))
    }

    pub fn field_from_even(&self, coef: &[Complex<f64>], grid: &Grid) -> ScalarField {
        self.ifft_x2(self.cos_synthesize(coef), grid)
    }

    pub fn field_from_odd(&self, coef: &[Complex<f64>], grid: &Grid) -> ScalarField {
        self.ifft_x2(self.sin_synthesize(coef), grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{apply_ghost_fill, build_grid, diff_ghosted, Axis, Parity};
    use approx::assert_relative_eq;

    #[test]
    fn cosine_round_trip_is_exact() {
        let grid = build_grid(17, 8, 1.0, 1.0).unwrap();
        let basis = SlabBasis::new(&grid, WavenumberScheme::Central4);
        let f = ScalarField::from_fn(&grid, |x1, x2| {
            (2.1 * x1).cos() + 0.3 * (2.0 * PI * x2).sin() * x1 * x1
        });
        let coef = basis.even_coefficients(&f);
        let back = basis.field_from_even(&coef, &grid);
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                assert_relative_eq!(
                    back.get(i as isize, j),
                    f.get(i as isize, j),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn sine_round_trip_is_exact_on_wall_zero_fields() {
        let grid = build_grid(17, 8, 1.0, 1.0).unwrap();
        let basis = SlabBasis::new(&grid, WavenumberScheme::Central4);
        let f = ScalarField::from_fn(&grid, |x1, x2| {
            (PI * x1).sin() * (1.0 + 0.5 * (2.0 * PI * x2).cos())
        });
        let coef = basis.odd_coefficients(&f);
        let back = basis.field_from_odd(&coef, &grid);
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                assert_relative_eq!(
                    back.get(i as isize, j),
                    f.get(i as isize, j),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn central4_derivative_is_diagonal_on_basis() {
        // parity-filled centered diff of cos_n equals -k1[n] sin_n exactly
        let grid = build_grid(33, 4, 1.0, 1.0).unwrap();
        let basis = SlabBasis::new(&grid, WavenumberScheme::Central4);
        for &n in &[1usize, 3, 7] {
            let mut f = ScalarField::from_fn(&grid, |x1, _| (n as f64 * PI * x1 / grid.l1).cos());
            apply_ghost_fill(&mut f, &grid, Parity::Even);
            let df = diff_ghosted(&f, Axis::X1, &grid);
            for i in 0..grid.n1 {
                let exact = -basis.k1[n] * (n as f64 * PI * grid.x1(i) / grid.l1).sin();
                assert_relative_eq!(df.get(i as isize, 0), exact, epsilon = 1e-11);
            }
        }
        // and sine modes map to +k1[n] cos_n
        for &n in &[2usize, 5] {
            let mut f = ScalarField::from_fn(&grid, |x1, _| (n as f64 * PI * x1 / grid.l1).sin());
            apply_ghost_fill(&mut f, &grid, Parity::Odd);
            let df = diff_ghosted(&f, Axis::X1, &grid);
            for i in 0..grid.n1 {
                let exact = basis.k1[n] * (n as f64 * PI * grid.x1(i) / grid.l1).cos();
                assert_relative_eq!(df.get(i as isize, 0), exact, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn trapezoid_orthogonality_of_tables() {
        let grid = build_grid(17, 4, 1.0, 1.0).unwrap();
        let basis = SlabBasis::new(&grid, WavenumberScheme::Analytic);
        let m = basis.m;
        for a in 0..=m {
            for b in 0..=m {
                let mut dot = 0.0;
                for i in 0..grid.n1 {
                    let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                    dot += w
                        * basis.cos_tab[a * grid.n1 + i]
                        * basis.cos_tab[b * grid.n1 + i];
                }
                let expect = if a != b {
                    0.0
                } else if a == 0 || a == m {
                    m as f64
                } else {
                    m as f64 / 2.0
                };
                assert_relative_eq!(dot, expect, epsilon = 1e-10);
            }
        }
    }
}
