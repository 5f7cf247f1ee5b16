use nalgebra::Matrix3;

use super::{require_positive, ConservationLaw, Mat, State};
use crate::error::Result;

/// Adiabatic exponent of the ideal gas.
pub const GAMMA: f64 = 1.4;

/// Conserved variables of the 1D Euler equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerState {
    pub rho: f64,
    pub m: f64,
    pub e: f64,
}

impl EulerState {
    pub fn new(rho: f64, m: f64, e: f64) -> Self {
        Self { rho, m, e }
    }

    pub fn to_state(self) -> State<3> {
        State::<3>::new(self.rho, self.m, self.e)
    }

    pub fn from_state(u: &State<3>) -> Self {
        Self::new(u[0], u[1], u[2])
    }
}

impl From<EulerState> for State<3> {
    fn from(u: EulerState) -> Self {
        u.to_state()
    }
}

#[inline]
fn pressure_unchecked(u: &State<3>) -> f64 {
    (GAMMA - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0])
}

fn check(u: &State<3>) -> Result<f64> {
    require_positive("density", u[0], u.as_slice())?;
    let p = pressure_unchecked(u);
    require_positive("pressure", p, u.as_slice())?;
    Ok(p)
}

/// `p = (γ − 1)(E − m² / (2ρ))`.
pub fn euler_pressure(u: EulerState) -> Result<f64> {
    check(&u.to_state())
}

pub fn euler_flux(u: EulerState) -> Result<State<3>> {
    let s = u.to_state();
    check(&s)?;
    Ok(Euler.flux(&s))
}

/// `|m / ρ| + sqrt(γ p / ρ)`.
pub fn euler_wave_speed(u: EulerState) -> Result<f64> {
    let s = u.to_state();
    check(&s)?;
    Ok(Euler.wave_speed(&s))
}

/// `(η, Dη, Hη, q)` for the physical entropy `η = −ρ s / (γ − 1)`,
/// `s = ln p − γ ln ρ`, with entropy flux `q = (m / ρ) η`.
pub fn euler_entropy_pair(u: EulerState) -> Result<(f64, State<3>, Mat<3>, f64)> {
    let s = u.to_state();
    check(&s)?;
    let law = Euler;
    Ok((
        law.entropy(&s),
        law.entropy_gradient(&s),
        law.entropy_hessian(&s),
        law.entropy_flux(&s),
    ))
}

/// Ideal-gas Euler equations with `γ = 1.4`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euler;

impl ConservationLaw<3> for Euler {
    fn name(&self) -> &'static str {
        "euler"
    }

    fn check_admissible(&self, u: &State<3>) -> Result<()> {
        check(u).map(|_| ())
    }

    #[inline]
    fn flux(&self, u: &State<3>) -> State<3> {
        let p = pressure_unchecked(u);
        let v = u[1] / u[0];
        State::<3>::new(u[1], u[1] * v + p, (u[2] + p) * v)
    }

    #[inline]
    fn flux_jacobian(&self, u: &State<3>) -> Mat<3> {
        let g = GAMMA;
        let v = u[1] / u[0];
        let e = u[2] / u[0];
        Matrix3::new(
            0.0,
            1.0,
            0.0,
            0.5 * (g - 3.0) * v * v,
            (3.0 - g) * v,
            g - 1.0,
            -g * e * v + (g - 1.0) * v * v * v,
            g * e - 1.5 * (g - 1.0) * v * v,
            g * v,
        )
    }

    fn flux_hessians(&self, u: &State<3>) -> [Mat<3>; 3] {
        let g = GAMMA;
        let (rho, m, en) = (u[0], u[1], u[2]);
        let (r2, r3) = (rho * rho, rho * rho * rho);
        let c2 = 0.5 * (3.0 - g);
        let h2 = Matrix3::new(
            2.0 * m * m / r3,
            -2.0 * m / r2,
            0.0,
            -2.0 * m / r2,
            2.0 / rho,
            0.0,
            0.0,
            0.0,
            0.0,
        ) * c2;
        // f3 = γ E m / ρ − (γ − 1)/2 · m³ / ρ²
        let hg = Matrix3::new(
            2.0 * en * m / r3,
            -en / r2,
            -m / r2,
            -en / r2,
            0.0,
            1.0 / rho,
            -m / r2,
            1.0 / rho,
            0.0,
        );
        let hk = Matrix3::new(
            6.0 * m * m * m / (r2 * r2),
            -6.0 * m * m / r3,
            0.0,
            -6.0 * m * m / r3,
            6.0 * m / r2,
            0.0,
            0.0,
            0.0,
            0.0,
        );
        let h3 = hg * g - hk * (0.5 * (g - 1.0));
        [Mat::<3>::zeros(), h2, h3]
    }

    fn wave_speed(&self, u: &State<3>) -> f64 {
        let p = pressure_unchecked(u);
        (u[1] / u[0]).abs() + (GAMMA * p / u[0]).sqrt()
    }

    fn entropy(&self, u: &State<3>) -> f64 {
        let p = pressure_unchecked(u);
        let s = p.ln() - GAMMA * u[0].ln();
        -u[0] * s / (GAMMA - 1.0)
    }

    fn entropy_gradient(&self, u: &State<3>) -> State<3> {
        let (rho, m) = (u[0], u[1]);
        let p = pressure_unchecked(u);
        let s = p.ln() - GAMMA * rho.ln();
        State::<3>::new(
            (GAMMA - s) / (GAMMA - 1.0) - m * m / (2.0 * rho * p),
            m / p,
            -rho / p,
        )
    }

    fn entropy_hessian(&self, u: &State<3>) -> Mat<3> {
        let g = GAMMA;
        let (rho, m) = (u[0], u[1]);
        let p = pressure_unchecked(u);
        let dp = [(g - 1.0) * m * m / (2.0 * rho * rho), -(g - 1.0) * m / rho, g - 1.0];
        let ds = [dp[0] / p - g / rho, dp[1] / p, dp[2] / p];
        let q = m * m / (2.0 * rho * p);
        let dq = [
            -q / rho - q * dp[0] / p,
            m / (rho * p) - q * dp[1] / p,
            -q * dp[2] / p,
        ];
        let p2 = p * p;
        let mut h = Mat::<3>::zeros();
        for j in 0..3 {
            h[(0, j)] = -ds[j] / (g - 1.0) - dq[j];
            h[(1, j)] = -m * dp[j] / p2;
            h[(2, j)] = rho * dp[j] / p2;
        }
        h[(1, 1)] += 1.0 / p;
        h[(2, 0)] -= 1.0 / p;
        h
    }

    fn entropy_flux(&self, u: &State<3>) -> f64 {
        u[1] / u[0] * self.entropy(u)
    }

    fn characteristic_basis(&self, u: &State<3>) -> Option<(Mat<3>, Mat<3>)> {
        let p = pressure_unchecked(u);
        if !(u[0] > 0.0 && p > 0.0) {
            return None;
        }
        let v = u[1] / u[0];
        let c = (GAMMA * p / u[0]).sqrt();
        let h = (u[2] + p) / u[0];
        let r = Matrix3::new(
            1.0,
            1.0,
            1.0,
            v - c,
            v,
            v + c,
            h - v * c,
            0.5 * v * v,
            h + v * c,
        );
        let l = r.try_inverse()?;
        Some((r, l))
    }
}
