use nalgebra::Matrix1;

use super::{ConservationLaw, Mat, State};
use crate::error::{Error, Result};

fn finite(u: &State<1>) -> Result<()> {
    if u[0].is_finite() {
        Ok(())
    } else {
        Err(Error::state_space("non-finite scalar state", u.as_slice()))
    }
}

/// `f(u) = a u` with `η = u² / 2`, `q = a u² / 2`.
#[derive(Debug, Clone, Copy)]
pub struct LinearAdvection {
    pub speed: f64,
}

impl LinearAdvection {
    pub fn new(speed: f64) -> Self {
        Self { speed }
    }
}

impl ConservationLaw<1> for LinearAdvection {
    fn name(&self) -> &'static str {
        "advection"
    }
    fn check_admissible(&self, u: &State<1>) -> Result<()> {
        finite(u)
    }
    fn flux(&self, u: &State<1>) -> State<1> {
        u * self.speed
    }
    fn flux_jacobian(&self, _u: &State<1>) -> Mat<1> {
        Matrix1::new(self.speed)
    }
    fn flux_hessians(&self, _u: &State<1>) -> [Mat<1>; 1] {
        [Matrix1::new(0.0)]
    }
    fn wave_speed(&self, _u: &State<1>) -> f64 {
        self.speed.abs()
    }
    fn entropy(&self, u: &State<1>) -> f64 {
        0.5 * u[0] * u[0]
    }
    fn entropy_gradient(&self, u: &State<1>) -> State<1> {
        *u
    }
    fn entropy_hessian(&self, _u: &State<1>) -> Mat<1> {
        Matrix1::new(1.0)
    }
    fn entropy_flux(&self, u: &State<1>) -> f64 {
        0.5 * self.speed * u[0] * u[0]
    }
    fn characteristic_basis(&self, _u: &State<1>) -> Option<(Mat<1>, Mat<1>)> {
        Some((Matrix1::new(1.0), Matrix1::new(1.0)))
    }
}

/// Inviscid Burgers, `f(u) = u² / 2`, with `η = u² / 2`, `q = u³ / 3`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Burgers;

impl ConservationLaw<1> for Burgers {
    fn name(&self) -> &'static str {
        "burgers"
    }
    fn check_admissible(&self, u: &State<1>) -> Result<()> {
        finite(u)
    }
    fn flux(&self, u: &State<1>) -> State<1> {
        State::<1>::new(0.5 * u[0] * u[0])
    }
    fn flux_jacobian(&self, u: &State<1>) -> Mat<1> {
        Matrix1::new(u[0])
    }
    fn flux_hessians(&self, _u: &State<1>) -> [Mat<1>; 1] {
        [Matrix1::new(1.0)]
    }
    fn wave_speed(&self, u: &State<1>) -> f64 {
        u[0].abs()
    }
    fn entropy(&self, u: &State<1>) -> f64 {
        0.5 * u[0] * u[0]
    }
    fn entropy_gradient(&self, u: &State<1>) -> State<1> {
        *u
    }
    fn entropy_hessian(&self, _u: &State<1>) -> Mat<1> {
        Matrix1::new(1.0)
    }
    fn entropy_flux(&self, u: &State<1>) -> f64 {
        u[0] * u[0] * u[0] / 3.0
    }
    fn characteristic_basis(&self, _u: &State<1>) -> Option<(Mat<1>, Mat<1>)> {
        Some((Matrix1::new(1.0), Matrix1::new(1.0)))
    }
}
