//! Conservation-law systems `∂t u + ∂x f(u) = Q` with a strictly convex entropy pair.

mod euler;
mod manufactured;
mod scalar;

use nalgebra::SMatrix;

pub use euler::{
    euler_entropy_pair, euler_flux, euler_pressure, euler_wave_speed, Euler, EulerState, GAMMA,
};
pub use manufactured::{manufactured_solution, manufactured_source, ManufacturedEuler, ManufacturedField};
pub use scalar::{Burgers, LinearAdvection};

use crate::error::{Error, Result};
pub use crate::field::State;

pub type Mat<const M: usize> = SMatrix<f64, M, M>;

/// Lower admissibility threshold for densities, pressures and similar positive quantities.
pub const ADMISSIBILITY_FLOOR: f64 = 1e-10;

pub trait ConservationLaw<const M: usize>: Sync + Send {
    fn name(&self) -> &'static str;

    /// Membership in the state space `U`.
    fn check_admissible(&self, u: &State<M>) -> Result<()>;

    fn flux(&self, u: &State<M>) -> State<M>;

    fn flux_jacobian(&self, u: &State<M>) -> Mat<M>;

    /// Hessians of the flux components `f_1 .. f_M`.
    fn flux_hessians(&self, u: &State<M>) -> [Mat<M>; M];

    /// Spectral radius of the flux Jacobian.
    fn wave_speed(&self, u: &State<M>) -> f64;

    fn entropy(&self, u: &State<M>) -> f64;

    fn entropy_gradient(&self, u: &State<M>) -> State<M>;

    fn entropy_hessian(&self, u: &State<M>) -> Mat<M>;

    fn entropy_flux(&self, u: &State<M>) -> f64;

    /// Right and left eigenvector matrices of the flux Jacobian, if the system
    /// has a closed-form characteristic decomposition.
    fn characteristic_basis(&self, _u: &State<M>) -> Option<(Mat<M>, Mat<M>)> {
        None
    }
}

/// Source term `Q(t, x, u)`. Most instances ignore `u`.
pub trait Forcing<const M: usize>: Sync + Send {
    fn eval(&self, t: f64, x: f64, u: &State<M>) -> State<M>;

    /// `true` when `Q ≡ 0`; lets the solver skip the source projection.
    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoForcing;

impl<const M: usize> Forcing<M> for NoForcing {
    fn eval(&self, _t: f64, _x: f64, _u: &State<M>) -> State<M> {
        State::<M>::zeros()
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// Linear reaction `Q(u) = λ u`.
#[derive(Debug, Clone, Copy)]
pub struct LinearReaction(pub f64);

impl<const M: usize> Forcing<M> for LinearReaction {
    fn eval(&self, _t: f64, _x: f64, u: &State<M>) -> State<M> {
        u * self.0
    }
}

/// `η(u|v) = η(u) − η(v) − Dη(v)(u − v)`.
pub fn relative_entropy<const M: usize>(
    law: &impl ConservationLaw<M>,
    u: &State<M>,
    v: &State<M>,
) -> Result<f64> {
    law.check_admissible(u)?;
    law.check_admissible(v)?;
    Ok(law.entropy(u) - law.entropy(v) - law.entropy_gradient(v).dot(&(u - v)))
}

/// `f(u|v) = f(u) − f(v) − Df(v)(u − v)`.
pub fn relative_flux<const M: usize>(
    law: &impl ConservationLaw<M>,
    u: &State<M>,
    v: &State<M>,
) -> Result<State<M>> {
    law.check_admissible(u)?;
    law.check_admissible(v)?;
    Ok(law.flux(u) - law.flux(v) - law.flux_jacobian(v) * (u - v))
}

pub(crate) fn require_positive(name: &str, value: f64, u: &[f64]) -> Result<()> {
    if value > ADMISSIBILITY_FLOOR && value.is_finite() {
        Ok(())
    } else {
        Err(Error::state_space(format!("{name} = {value} is not admissible"), u))
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// Central difference of `g` along every coordinate of `u`.
    pub fn fd_gradient<const M: usize>(g: impl Fn(&State<M>) -> f64, u: &State<M>, step: f64) -> State<M> {
        let mut out = State::<M>::zeros();
        for i in 0..M {
            let mut a = *u;
            let mut b = *u;
            a[i] += step;
            b[i] -= step;
            out[i] = (g(&a) - g(&b)) / (2.0 * step);
        }
        out
    }

    /// Central-difference Jacobian of `g`, column `j` = ∂g/∂u_j.
    pub fn fd_jacobian<const M: usize>(g: impl Fn(&State<M>) -> State<M>, u: &State<M>, step: f64) -> Mat<M> {
        let mut out = Mat::<M>::zeros();
        for j in 0..M {
            let mut a = *u;
            let mut b = *u;
            a[j] += step;
            b[j] -= step;
            out.set_column(j, &((g(&a) - g(&b)) / (2.0 * step)));
        }
        out
    }
}
