//! Scalar grid functions on the slab.
//!
//! A `ScalarField` stores interior node values on the `n1 x n2` grid plus
//! `ghost` extra rows on each side in the wall-normal direction. The
//! periodic direction carries no ghosts; stencils wrap indices instead.
//! Storage is row-major with x2 fastest.

use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n1: usize,
    n2: usize,
    ghost: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::zeros_dims(grid.n1, grid.n2, grid.ghost)
    }

    pub fn zeros_dims(n1: usize, n2: usize, ghost: usize) -> Self {
        ScalarField {
            n1,
            n2,
            ghost,
            data: vec![0.0; (n1 + 2 * ghost) * n2],
        }
    }

    /// Fill interior nodes from a function of the physical coordinates.
    /// Ghost rows are left at zero.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.n1 {
            let x1 = grid.x1(i);
            for j in 0..grid.n2 {
                out.set(i as isize, j, f(x1, grid.x2(j)));
            }
        }
        out
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn ghost(&self) -> usize {
        self.ghost
    }

    #[inline]
    fn idx(&self, i1: isize, i2: usize) -> usize {
        debug_assert!(i1 >= -(self.ghost as isize));
        debug_assert!(i1 < (self.n1 + self.ghost) as isize);
        debug_assert!(i2 < self.n2);
        (i1 + self.ghost as isize) as usize * self.n2 + i2
    }

    /// Value at node (i1, i2); i1 may address ghost rows.
    #[inline]
    pub fn get(&self, i1: isize, i2: usize) -> f64 {
        self.data[self.idx(i1, i2)]
    }

    #[inline]
    pub fn set(&mut self, i1: isize, i2: usize, v: f64) {
        let k = self.idx(i1, i2);
        self.data[k] = v;
    }

    /// Contiguous row of x2 values at normal index i1 (ghosts allowed).
    #[inline]
    pub fn row(&self, i1: isize) -> &[f64] {
        let start = self.idx(i1, 0);
        &self.data[start..start + self.n2]
    }

    #[inline]
    pub fn row_mut(&mut self, i1: isize) -> &mut [f64] {
        let start = self.idx(i1, 0);
        &mut self.data[start..start + self.n2]
    }

    /// In-place `self += a * other` over interior and ghost rows alike.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x += a * y;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for x in self.data.iter_mut() {
            *x *= a;
        }
    }

    /// `self = a*self + b*other`, the SSP-RK convex-combination update.
    pub fn combine(&mut self, a: f64, b: f64, other: &ScalarField) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x = a * *x + b * y;
        }
    }

    /// Max |value| over interior nodes.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n1 {
            for &v in self.row(i as isize) {
                m = m.max(v.abs());
            }
        }
        m
    }

    /// True when every interior value is finite.
    pub fn all_finite(&self) -> bool {
        (0..self.n1).all(|i| self.row(i as isize).iter().all(|v| v.is_finite()))
    }

    /// Pointwise map over interior nodes (ghosts untouched).
    pub fn map_interior(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        let mut out = self.clone();
        for i in 0..self.n1 {
            for v in out.row_mut(i as isize) {
                *v = f(*v);
            }
        }
        out
    }

    /// Pointwise combination of several fields over interior nodes.
    pub fn zip_interior(fields: &[&ScalarField], f: impl Fn(&[f64]) -> f64) -> ScalarField {
        assert!(!fields.is_empty());
        let mut out = ScalarField::zeros_dims(fields[0].n1, fields[0].n2, fields[0].ghost);
        let mut vals = vec![0.0; fields.len()];
        for i in 0..out.n1 {
            for j in 0..out.n2 {
                for (v, fld) in vals.iter_mut().zip(fields) {
                    *v = fld.get(i as isize, j);
                }
                out.set(i as isize, j, f(&vals));
            }
        }
        out
    }
}
