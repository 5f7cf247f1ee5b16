//! Piecewise-polynomial fields in the modal Legendre basis, L2 projection, and
//! sampling of arbitrary fields on a shared quadrature grid.

use std::sync::Arc;

use nalgebra::SVector;

use crate::error::{invalid, Result};
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, legendre_eval, LegendreBasis, QuadratureRule, SPATIAL_POINTS};

pub type State<const M: usize> = SVector<f64, M>;

/// A vector field on the periodic domain that can be point-evaluated.
pub trait Field: Sync {
    fn components(&self) -> usize;

    fn eval_into(&self, x: f64, out: &mut [f64]);

    /// Values at every grid point, point-major (`out[q * components + c]`).
    fn sample_on(&self, grid: &QuadGrid, out: &mut [f64]) {
        let m = self.components();
        for (q, &x) in grid.points().iter().enumerate() {
            self.eval_into(x, &mut out[q * m..(q + 1) * m]);
        }
    }
}

impl<F: Field + ?Sized> Field for &F {
    fn components(&self) -> usize {
        (**self).components()
    }
    fn eval_into(&self, x: f64, out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn sample_on(&self, grid: &QuadGrid, out: &mut [f64]) {
        (**self).sample_on(grid, out)
    }
}

/// Piecewise polynomial of a fixed degree on a periodic mesh, stored as modal
/// Legendre coefficients `coeffs[cell * (degree + 1) + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalField<const M: usize> {
    mesh: Arc<Mesh>,
    degree: usize,
    coeffs: Vec<State<M>>,
}

impl<const M: usize> ModalField<M> {
    pub fn zeros(mesh: Arc<Mesh>, degree: usize) -> Self {
        let n = mesh.cells() * (degree + 1);
        Self {
            mesh,
            degree,
            coeffs: vec![State::<M>::zeros(); n],
        }
    }

    pub fn from_coeffs(mesh: Arc<Mesh>, degree: usize, coeffs: Vec<State<M>>) -> Result<Self> {
        if coeffs.len() != mesh.cells() * (degree + 1) {
            return Err(invalid(format!(
                "expected {} coefficients, got {}",
                mesh.cells() * (degree + 1),
                coeffs.len()
            )));
        }
        Ok(Self {
            mesh,
            degree,
            coeffs,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn modes(&self) -> usize {
        self.degree + 1
    }

    pub fn coeffs(&self) -> &[State<M>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [State<M>] {
        &mut self.coeffs
    }

    pub fn cell(&self, cell: usize) -> &[State<M>] {
        let s = self.modes();
        &self.coeffs[cell * s..(cell + 1) * s]
    }

    pub fn cell_mut(&mut self, cell: usize) -> &mut [State<M>] {
        let s = self.modes();
        &mut self.coeffs[cell * s..(cell + 1) * s]
    }

    pub fn mean(&self, cell: usize) -> State<M> {
        self.cell(cell)[0]
    }

    /// Trace from inside the cell at its left end (`xi = -1`).
    pub fn left_trace(&self, cell: usize) -> State<M> {
        self.cell(cell)
            .iter()
            .enumerate()
            .fold(State::<M>::zeros(), |acc, (k, c)| {
                if k % 2 == 0 {
                    acc + c
                } else {
                    acc - c
                }
            })
    }

    /// Trace from inside the cell at its right end (`xi = 1`).
    pub fn right_trace(&self, cell: usize) -> State<M> {
        self.cell(cell).iter().sum()
    }

    pub fn eval_ref(&self, cell: usize, xi: f64) -> State<M> {
        self.cell(cell)
            .iter()
            .enumerate()
            .map(|(k, c)| c * legendre_eval(k, xi).0)
            .sum()
    }

    /// Spatial derivative at reference point `xi` of `cell`.
    pub fn derivative_ref(&self, cell: usize, xi: f64) -> State<M> {
        let scale = 2.0 / self.mesh.width(cell);
        self.cell(cell)
            .iter()
            .enumerate()
            .map(|(k, c)| c * (scale * legendre_eval(k, xi).1))
            .sum()
    }

    pub fn eval(&self, x: f64) -> State<M> {
        let (cell, xi) = self.mesh.locate(x);
        self.eval_ref(cell, xi)
    }

    /// `∫_D u dx`, componentwise.
    pub fn integral(&self) -> State<M> {
        (0..self.mesh.cells())
            .map(|c| self.mean(c) * self.mesh.width(c))
            .sum()
    }

    /// Same field represented with a higher polynomial degree (zero padding).
    pub fn elevate(&self, degree: usize) -> Self {
        assert!(degree >= self.degree);
        let mut out = Self::zeros(self.mesh.clone(), degree);
        for c in 0..self.mesh.cells() {
            out.cell_mut(c)[..self.modes()].copy_from_slice(self.cell(c));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    /// First cell holding a non-finite coefficient.
    pub fn first_non_finite_cell(&self) -> Option<usize> {
        (0..self.mesh.cells()).find(|&c| self.cell(c).iter().any(|v| v.iter().any(|x| !x.is_finite())))
    }

    /// `self + a * other`, in place.
    pub fn axpy(&mut self, a: f64, other: &[State<M>]) {
        for (x, y) in self.coeffs.iter_mut().zip(other) {
            *x += y * a;
        }
    }

    /// Squared L2 distance to `f` with the given per-cell rule.
    pub fn l2_distance_sq_with(&self, rule: &QuadratureRule, f: impl Fn(f64) -> State<M>) -> f64 {
        let basis = LegendreBasis::new(self.degree, rule.nodes());
        let mut total = 0.0;
        for c in 0..self.mesh.cells() {
            let half = 0.5 * self.mesh.width(c);
            let coeffs = self.cell(c);
            for (q, &w) in rule.weights().iter().enumerate() {
                let x = self.mesh.map(c, rule.nodes()[q]);
                let u: State<M> = coeffs
                    .iter()
                    .zip(basis.values(q))
                    .map(|(a, p)| a * *p)
                    .sum();
                total += w * half * (u - f(x)).norm_squared();
            }
        }
        total
    }

    /// Squared L2 distance to `f` with the 10-point spatial rule.
    pub fn l2_distance_sq(&self, f: impl Fn(f64) -> State<M>) -> f64 {
        let rule = gauss_legendre(SPATIAL_POINTS).expect("valid node count");
        self.l2_distance_sq_with(&rule, f)
    }

    /// Squared L2 distance between two fields on the same mesh.
    pub fn l2_distance_sq_to(&self, other: &ModalField<M>) -> f64 {
        debug_assert_eq!(self.mesh.cells(), other.mesh.cells());
        let rule = gauss_legendre(SPATIAL_POINTS).expect("valid node count");
        let a = LegendreBasis::new(self.degree, rule.nodes());
        let b = LegendreBasis::new(other.degree, rule.nodes());
        let mut total = 0.0;
        for c in 0..self.mesh.cells() {
            let half = 0.5 * self.mesh.width(c);
            for (q, &w) in rule.weights().iter().enumerate() {
                let u: State<M> = self.cell(c).iter().zip(a.values(q)).map(|(x, p)| x * *p).sum();
                let v: State<M> = other.cell(c).iter().zip(b.values(q)).map(|(x, p)| x * *p).sum();
                total += w * half * (u - v).norm_squared();
            }
        }
        total
    }
}

impl<const M: usize> Field for ModalField<M> {
    fn components(&self) -> usize {
        M
    }

    fn eval_into(&self, x: f64, out: &mut [f64]) {
        out.copy_from_slice(self.eval(x).as_slice());
    }

    fn sample_on(&self, grid: &QuadGrid, out: &mut [f64]) {
        if grid.mesh.as_ref() != self.mesh.as_ref() {
            for (q, &x) in grid.points().iter().enumerate() {
                self.eval_into(x, &mut out[q * M..(q + 1) * M]);
            }
            return;
        }
        let basis = LegendreBasis::new(self.degree, grid.rule.nodes());
        let n = grid.rule.order();
        for c in 0..self.mesh.cells() {
            let coeffs = self.cell(c);
            for q in 0..n {
                let u: State<M> = coeffs.iter().zip(basis.values(q)).map(|(a, p)| a * *p).sum();
                let idx = (c * n + q) * M;
                out[idx..idx + M].copy_from_slice(u.as_slice());
            }
        }
    }
}

/// Field given by a closure.
pub struct FnField<F> {
    components: usize,
    f: F,
}

impl<F: Fn(f64, &mut [f64]) + Sync> FnField<F> {
    pub fn new(components: usize, f: F) -> Self {
        Self { components, f }
    }
}

impl<F: Fn(f64, &mut [f64]) + Sync> Field for FnField<F> {
    fn components(&self) -> usize {
        self.components
    }
    fn eval_into(&self, x: f64, out: &mut [f64]) {
        (self.f)(x, out)
    }
}

/// Tensor of a mesh and a per-cell Gauss rule: the physical points and
/// weights every L2 inner product between atoms is computed with.
#[derive(Debug, Clone)]
pub struct QuadGrid {
    mesh: Arc<Mesh>,
    rule: QuadratureRule,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadGrid {
    pub fn new(mesh: Arc<Mesh>, rule: QuadratureRule) -> Self {
        let mut points = Vec::with_capacity(mesh.cells() * rule.order());
        let mut weights = Vec::with_capacity(points.capacity());
        for c in 0..mesh.cells() {
            let half = 0.5 * mesh.width(c);
            for (xi, w) in rule.iter() {
                points.push(mesh.map(c, xi));
                weights.push(w * half);
            }
        }
        Self {
            mesh,
            rule,
            points,
            weights,
        }
    }

    /// The 10-point-per-cell grid used for every estimator integral.
    pub fn spatial(mesh: Arc<Mesh>) -> Self {
        Self::new(mesh, gauss_legendre(SPATIAL_POINTS).expect("valid node count"))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// L2 projection onto piecewise polynomials of degree `p` using the 10-point rule.
pub fn l2_project<const M: usize>(
    f: impl Fn(f64) -> State<M>,
    mesh: Arc<Mesh>,
    p: usize,
) -> Result<ModalField<M>> {
    let rule = gauss_legendre(SPATIAL_POINTS)?;
    l2_project_with(f, mesh, p, &rule)
}

/// L2 projection with an explicit per-cell rule:
/// `c_k = (2k + 1) / 2 * ∫ f(x(ξ)) P_k(ξ) dξ`.
pub fn l2_project_with<const M: usize>(
    f: impl Fn(f64) -> State<M>,
    mesh: Arc<Mesh>,
    p: usize,
    rule: &QuadratureRule,
) -> Result<ModalField<M>> {
    if mesh.cells() == 0 {
        return Err(invalid("cannot project onto an empty mesh"));
    }
    let basis = LegendreBasis::new(p, rule.nodes());
    let mut out = ModalField::zeros(mesh.clone(), p);
    for c in 0..mesh.cells() {
        let values: Vec<State<M>> = rule.nodes().iter().map(|&xi| f(mesh.map(c, xi))).collect();
        let cell = out.cell_mut(c);
        for (k, coeff) in cell.iter_mut().enumerate() {
            let scale = 0.5 * (2 * k + 1) as f64;
            *coeff = values
                .iter()
                .enumerate()
                .map(|(q, v)| v * (rule.weights()[q] * basis.values(q)[k]))
                .sum::<State<M>>()
                * scale;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mesh(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform(n).unwrap())
    }

    #[test]
    fn projection_reproduces_constants() {
        let u = l2_project(|_| State::<3>::new(1.0, 2.0, 3.0), mesh(7), 2).unwrap();
        for c in 0..7 {
            let cell = u.cell(c);
            assert!((cell[0] - State::<3>::new(1.0, 2.0, 3.0)).norm() < 1e-14);
            assert!(cell[1].norm() < 1e-14 && cell[2].norm() < 1e-14);
        }
    }

    #[test]
    fn projection_of_identity_on_single_cell() {
        let u = l2_project(|x| State::<1>::new(x), mesh(1), 1).unwrap();
        assert!((u.cell(0)[0][0] - 0.5).abs() < 1e-15);
        assert!((u.cell(0)[1][0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projection_error_converges_at_order_three() {
        let f = |x: f64| State::<1>::new((2.0 * PI * x).sin());
        let err = |n| {
            let u = l2_project(f, mesh(n), 2).unwrap();
            u.l2_distance_sq(f).sqrt()
        };
        let ratio = err(16) / err(32);
        assert!((ratio - 8.0).abs() < 0.4, "ratio {ratio}");
    }

    #[test]
    fn projection_is_idempotent() {
        let u = l2_project(|x| State::<2>::new((3.0 * x).cos(), x * x), mesh(9), 3).unwrap();
        let v = l2_project(|x| u.eval(x), mesh(9), 3).unwrap();
        for (a, b) in u.coeffs().iter().zip(v.coeffs()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn traces_match_pointwise_evaluation() {
        let u = l2_project(|x| State::<1>::new((5.0 * x).exp()), mesh(4), 3).unwrap();
        for c in 0..4 {
            assert!((u.left_trace(c) - u.eval_ref(c, -1.0)).norm() < 1e-13);
            assert!((u.right_trace(c) - u.eval_ref(c, 1.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn sampling_on_own_mesh_matches_pointwise() {
        let m = mesh(5);
        let u = l2_project(|x| State::<2>::new(x.sin(), x.cos()), m.clone(), 2).unwrap();
        let grid = QuadGrid::spatial(m);
        let mut fast = vec![0.0; grid.len() * 2];
        u.sample_on(&grid, &mut fast);
        for (q, &x) in grid.points().iter().enumerate() {
            let v = u.eval(x);
            assert!((fast[2 * q] - v[0]).abs() < 1e-14);
            assert!((fast[2 * q + 1] - v[1]).abs() < 1e-14);
        }
    }
}
