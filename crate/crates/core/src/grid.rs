//! Slab geometry, the conormal weight, ghost-layer extension and the
//! discrete differential operators.
//!
//! The domain is the truncated half-space `[0, L1] x [0, L2)` with
//! perfectly conducting walls at both `x1` ends and periodicity in `x2`.
//! Nodes are vertex-centered in `x1` (wall nodes included) and
//! cell-start-centered in the periodic direction.

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Ghost-layer width; the widest stencil (five points) needs two.
pub const DEFAULT_GHOST: usize = 2;

/// Default cap on the order `|alpha| + 2k` of a composed conormal operator.
pub const DEFAULT_MAX_OPERATOR_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
    pub dx1: f64,
    pub dx2: f64,
    pub ghost: usize,
    /// Conormal weight sampled at the x1 nodes.
    pub sigma_values: Vec<f64>,
}

/// The conormal weight: identity near the wall, one on the outer half,
/// blended by a quintic Hermite so the function is C^2.
pub fn sigma(x: f64, l1: f64) -> f64 {
    let a = 0.25 * l1;
    let b = 0.75 * l1;
    if x <= a {
        x
    } else if x >= b {
        1.0
    } else {
        let h = b - a;
        let t = (x - a) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        a * h0 + h * h1 + h5
    }
}

/// Analytic derivative of the blended weight (used by oracles and the
/// W^{1,inf} seminorm, not by the stencils).
pub fn sigma_deriv(x: f64, l1: f64) -> f64 {
    let a = 0.25 * l1;
    let b = 0.75 * l1;
    if x <= a {
        1.0
    } else if x >= b {
        0.0
    } else {
        let h = b - a;
        let t = (x - a) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let dh0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
        let dh1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
        let dh5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
        (a * dh0 + h * dh1 + dh5) / h
    }
}

pub fn build_grid(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Grid> {
    if n1 < 9 {
        return Err(Error::GridConfig(format!("n1 too small: {n1} < 9")));
    }
    if n2 < 4 {
        return Err(Error::GridConfig(format!("n2 too small: {n2} < 4")));
    }
    if !(l1 > 0.0) || !(l2 > 0.0) {
        return Err(Error::GridConfig(format!(
            "domain lengths must be positive, got l1 = {l1}, l2 = {l2}"
        )));
    }
    // The pinned quintic blend is monotone only while sigma(L1/4) = L1/4
    // stays below the outer plateau value 1 with margin.
    if l1 > 2.0 {
        return Err(Error::GridConfig(format!(
            "l1 = {l1} exceeds 2; the pinned conormal weight is only valid for l1 <= 2"
        )));
    }
    let dx1 = l1 / (n1 - 1) as f64;
    let dx2 = l2 / n2 as f64;
    let sigma_values = (0..n1).map(|i| sigma(i as f64 * dx1, l1)).collect();
    Ok(Grid {
        n1,
        n2,
        l1,
        l2,
        dx1,
        dx2,
        ghost: DEFAULT_GHOST,
        sigma_values,
    })
}

impl Grid {
    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        i as f64 * self.dx1
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        j as f64 * self.dx2
    }

    #[inline]
    pub fn sigma_at(&self, i: usize) -> f64 {
        self.sigma_values[i]
    }

    /// Trapezoid weight in x1 (half at the wall nodes).
    #[inline]
    pub fn w1(&self, i: usize) -> f64 {
        if i == 0 || i == self.n1 - 1 {
            0.5 * self.dx1
        } else {
            self.dx1
        }
    }

    /// Largest node index with x1 <= frac * L1.
    pub fn subdomain_end(&self, frac: f64) -> usize {
        let mut i = ((frac * self.l1) / self.dx1 + 1e-9).floor() as usize;
        if i >= self.n1 {
            i = self.n1 - 1;
        }
        i
    }

    /// Trapezoid-in-x1, exact-mean-in-x2 integral over the slab.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        self.integrate_to(f, self.n1 - 1)
    }

    fn integrate_to(&self, f: &ScalarField, i_max: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..=i_max {
            let w = if i == 0 || i == i_max {
                0.5 * self.dx1
            } else {
                self.dx1
            };
            let row_sum: f64 = f.row(i as isize).iter().sum();
            acc += w * row_sum;
        }
        acc * self.dx2
    }

    /// L2 norm of a multi-component field over the whole slab.
    pub fn l2_norm(&self, comps: &[&ScalarField]) -> f64 {
        self.l2_norm_to(comps, self.n1 - 1)
    }

    /// L2 norm restricted to the subdomain x1 <= x1(i_max).
    pub fn l2_norm_to(&self, comps: &[&ScalarField], i_max: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..=i_max {
            let w = if i == 0 || i == i_max {
                0.5 * self.dx1
            } else {
                self.dx1
            };
            for c in comps {
                let row_sum: f64 = c.row(i as isize).iter().map(|v| v * v).sum();
                acc += w * row_sum;
            }
        }
        (acc * self.dx2).sqrt()
    }

    /// Weighted inner product of two fields.
    pub fn inner(&self, f: &ScalarField, g: &ScalarField) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n1 {
            let w = self.w1(i);
            let fr = f.row(i as isize);
            let gr = g.row(i as isize);
            let row_sum: f64 = fr.iter().zip(gr).map(|(a, b)| a * b).sum();
            acc += w * row_sum;
        }
        acc * self.dx2
    }

    /// Max |value| over the subdomain x1 <= x1(i_max), all components.
    pub fn linf_to(&self, comps: &[&ScalarField], i_max: usize) -> f64 {
        let mut m = 0.0f64;
        for i in 0..=i_max {
            for c in comps {
                for &v in c.row(i as isize) {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }
}

/// Wall extension parity of a field component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Per-component parity table for the 7-component state
/// (q, v1, v2, v3, H1, H2, H3). Normal components are odd so the wall
/// condition is a symmetry plane; everything else reflects evenly.
#[derive(Debug, Clone, Copy)]
pub struct ParityTable {
    pub components: [Parity; 7],
}

impl Default for ParityTable {
    fn default() -> Self {
        use Parity::*;
        ParityTable {
            components: [Even, Odd, Even, Even, Odd, Even, Even],
        }
    }
}

/// Fill the ghost rows of `field` by reflection with the given parity.
/// Odd components are forced to zero exactly at both wall nodes.
pub fn apply_ghost_fill(field: &mut ScalarField, grid: &Grid, parity: Parity) {
    let n1 = grid.n1 as isize;
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    if parity == Parity::Odd {
        for j in 0..grid.n2 {
            field.set(0, j, 0.0);
            field.set(n1 - 1, j, 0.0);
        }
    }
    for g in 1..=grid.ghost as isize {
        for j in 0..grid.n2 {
            field.set(-g, j, sign * field.get(g, j));
            field.set(n1 - 1 + g, j, sign * field.get(n1 - 1 - g, j));
        }
    }
}

#[inline]
fn wrap(j: isize, n2: usize) -> usize {
    j.rem_euclid(n2 as isize) as usize
}

/// Fourth-order first derivative.
///
/// Interior nodes use the centered five-point stencil; within two nodes of
/// a wall the same-order one-sided stencils are used, so the operator never
/// reads ghost data. This is the operator behind norm evaluation and every
/// diagnostic that cannot assume a parity extension.
pub fn diff(f: &ScalarField, axis: Axis, grid: &Grid) -> ScalarField {
    match axis {
        Axis::X2 => diff_x2(f, grid),
        Axis::X1 => {
            let mut out = ScalarField::zeros(grid);
            let n1 = grid.n1;
            let c = 1.0 / (12.0 * grid.dx1);
            for j in 0..grid.n2 {
                // one-sided at the wall, offset one node in
                let f0 = f.get(0, j);
                let f1 = f.get(1, j);
                let f2 = f.get(2, j);
                let f3 = f.get(3, j);
                let f4 = f.get(4, j);
                out.set(0, j, c * (-25.0 * f0 + 48.0 * f1 - 36.0 * f2 + 16.0 * f3 - 3.0 * f4));
                out.set(1, j, c * (-3.0 * f0 - 10.0 * f1 + 18.0 * f2 - 6.0 * f3 + f4));
                let m = (n1 - 1) as isize;
                let g0 = f.get(m, j);
                let g1 = f.get(m - 1, j);
                let g2 = f.get(m - 2, j);
                let g3 = f.get(m - 3, j);
                let g4 = f.get(m - 4, j);
                out.set(m, j, c * (25.0 * g0 - 48.0 * g1 + 36.0 * g2 - 16.0 * g3 + 3.0 * g4));
                out.set(m - 1, j, c * (3.0 * g0 + 10.0 * g1 - 18.0 * g2 + 6.0 * g3 - g4));
            }
            for i in 2..n1 - 2 {
                let i = i as isize;
                for j in 0..grid.n2 {
                    let v = f.get(i - 2, j) - 8.0 * f.get(i - 1, j) + 8.0 * f.get(i + 1, j)
                        - f.get(i + 2, j);
                    out.set(i, j, c * v);
                }
            }
            out
        }
    }
}

fn diff_x2(f: &ScalarField, grid: &Grid) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    let c = 1.0 / (12.0 * grid.dx2);
    let n2 = grid.n2;
    for i in 0..grid.n1 {
        let i = i as isize;
        for j in 0..n2 {
            let jm2 = wrap(j as isize - 2, n2);
            let jm1 = wrap(j as isize - 1, n2);
            let jp1 = wrap(j as isize + 1, n2);
            let jp2 = wrap(j as isize + 2, n2);
            let v = f.get(i, jm2) - 8.0 * f.get(i, jm1) + 8.0 * f.get(i, jp1) - f.get(i, jp2);
            out.set(i, j, c * v);
        }
    }
    out
}

/// Fourth-order centered first derivative that reads the ghost rows.
///
/// Requires the ghosts to be filled (parity extension); on the parity
/// eigenfunctions this operator acts diagonally, which the projection
/// machinery exploits.
pub fn diff_ghosted(f: &ScalarField, axis: Axis, grid: &Grid) -> ScalarField {
    match axis {
        Axis::X2 => diff_x2(f, grid),
        Axis::X1 => {
            let mut out = ScalarField::zeros(grid);
            let c = 1.0 / (12.0 * grid.dx1);
            for i in 0..grid.n1 {
                let i = i as isize;
                for j in 0..grid.n2 {
                    let v = f.get(i - 2, j) - 8.0 * f.get(i - 1, j) + 8.0 * f.get(i + 1, j)
                        - f.get(i + 2, j);
                    out.set(i, j, c * v);
                }
            }
            out
        }
    }
}

/// Undivided-by-h fourth derivative (five-point stencil divided by h once),
/// i.e. `h^3 * d^4/dx^4`. Used by the hyperdissipation term. Ghosts must be
/// filled for the X1 axis.
pub fn fourth_deriv_scaled(f: &ScalarField, axis: Axis, grid: &Grid) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    match axis {
        Axis::X1 => {
            let c = 1.0 / grid.dx1;
            for i in 0..grid.n1 {
                let i = i as isize;
                for j in 0..grid.n2 {
                    let v = f.get(i - 2, j) - 4.0 * f.get(i - 1, j) + 6.0 * f.get(i, j)
                        - 4.0 * f.get(i + 1, j)
                        + f.get(i + 2, j);
                    out.set(i, j, c * v);
                }
            }
        }
        Axis::X2 => {
            let c = 1.0 / grid.dx2;
            let n2 = grid.n2;
            for i in 0..grid.n1 {
                let i = i as isize;
                for j in 0..n2 {
                    let jm2 = wrap(j as isize - 2, n2);
                    let jm1 = wrap(j as isize - 1, n2);
                    let jp1 = wrap(j as isize + 1, n2);
                    let jp2 = wrap(j as isize + 2, n2);
                    let v = f.get(i, jm2) - 4.0 * f.get(i, jm1) + 6.0 * f.get(i, j)
                        - 4.0 * f.get(i, jp1)
                        + f.get(i, jp2);
                    out.set(i, j, c * v);
                }
            }
        }
    }
    out
}

/// Composed conormal operator `(sigma d1)^a1 d2^a2 d3^a3` followed by `d1^k`,
/// applied in that order. `d3` vanishes identically in the planar reduction,
/// so any `a3 > 0` yields the zero field.
pub fn conormal_diff(
    f: &ScalarField,
    alpha: [usize; 3],
    k: usize,
    grid: &Grid,
) -> Result<ScalarField> {
    conormal_diff_with_max(f, alpha, k, grid, DEFAULT_MAX_OPERATOR_ORDER)
}

pub fn conormal_diff_with_max(
    f: &ScalarField,
    alpha: [usize; 3],
    k: usize,
    grid: &Grid,
    max_order: usize,
) -> Result<ScalarField> {
    let order = alpha[0] + alpha[1] + alpha[2] + 2 * k;
    if order > max_order {
        return Err(Error::OperatorOrder {
            order,
            max: max_order,
        });
    }
    if alpha[2] > 0 {
        return Ok(ScalarField::zeros(grid));
    }
    let mut g = f.clone();
    for _ in 0..alpha[0] {
        g = diff(&g, Axis::X1, grid);
        for i in 0..grid.n1 {
            let s = grid.sigma_at(i);
            for v in g.row_mut(i as isize) {
                *v *= s;
            }
        }
    }
    for _ in 0..alpha[1] {
        g = diff(&g, Axis::X2, grid);
    }
    for _ in 0..k {
        g = diff(&g, Axis::X1, grid);
    }
    Ok(g)
}

/// Discrete divergence of the in-plane vector (f1, f2) with the centered
/// stencil reading ghost rows; callers fill ghosts by parity first.
pub fn divergence_filled(f1: &ScalarField, f2: &ScalarField, grid: &Grid) -> ScalarField {
    let mut d = diff_ghosted(f1, Axis::X1, grid);
    let d2 = diff_ghosted(f2, Axis::X2, grid);
    d.axpy(1.0, &d2);
    d
}

/// Divergence with the boundary-safe one-sided stencils; makes no parity
/// assumption, so it is the right measurement for arbitrary data.
pub fn divergence_one_sided(f1: &ScalarField, f2: &ScalarField, grid: &Grid) -> ScalarField {
    let mut d = diff(f1, Axis::X1, grid);
    let d2 = diff(f2, Axis::X2, grid);
    d.axpy(1.0, &d2);
    d
}
