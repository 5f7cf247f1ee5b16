//! Smooth travelling-wave solution of the forced Euler equations, parametrised by `ξ ∈ [0, 1]`:
//!
//! ```text
//! ρ = 2 + 0.2 ξ cos(6π(x − t)),  m = ρ (1 + 0.2 ξ sin(6π(x − t))),  E = ρ²
//! ```

use std::f64::consts::PI;

use super::{EulerState, Forcing, State, GAMMA};
use crate::field::Field;

const WAVE_NUMBER: f64 = 6.0 * PI;
const AMPLITUDE: f64 = 0.2;

pub fn manufactured_solution(t: f64, x: f64, xi: f64) -> EulerState {
    let phase = WAVE_NUMBER * (x - t);
    let a = AMPLITUDE * xi;
    let rho = 2.0 + a * phase.cos();
    let v = 1.0 + a * phase.sin();
    EulerState::new(rho, rho * v, rho * rho)
}

/// `Q = ∂t U + ∂x f(U)` at the manufactured solution, in closed form.
///
/// Every field depends on `x − t` only, so `∂t = −∂x` and `Q = ∂x (f(U) − U)`.
pub fn manufactured_source(t: f64, x: f64, xi: f64) -> State<3> {
    let phase = WAVE_NUMBER * (x - t);
    let (s, c) = phase.sin_cos();
    let a = AMPLITUDE * xi;
    let rho = 2.0 + a * c;
    let v = 1.0 + a * s;
    let rho_x = -a * WAVE_NUMBER * s;
    let v_x = a * WAVE_NUMBER * c;

    let m = rho * v;
    let en = rho * rho;
    let p = (GAMMA - 1.0) * (en - 0.5 * rho * v * v);
    let m_x = rho_x * v + rho * v_x;
    let e_x = 2.0 * rho * rho_x;
    let p_x = (GAMMA - 1.0) * (e_x - 0.5 * rho_x * v * v - rho * v * v_x);

    // f(U) − U = (m − ρ, m v + p − m, (E + p) v − E)
    let q1 = m_x - rho_x;
    let q2 = m_x * v + m * v_x + p_x - m_x;
    let q3 = (e_x + p_x) * v + (en + p) * v_x - e_x;
    State::<3>::new(q1, q2, q3)
}

/// Forcing term of the sample with parameter `ξ`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedEuler {
    pub xi: f64,
}

impl ManufacturedEuler {
    pub fn new(xi: f64) -> Self {
        Self { xi }
    }

    pub fn solution(&self, t: f64, x: f64) -> State<3> {
        manufactured_solution(t, x, self.xi).to_state()
    }
}

impl Forcing<3> for ManufacturedEuler {
    fn eval(&self, t: f64, x: f64, _u: &State<3>) -> State<3> {
        manufactured_source(t, x, self.xi)
    }

    fn is_zero(&self) -> bool {
        self.xi == 0.0
    }
}

/// The exact field `x ↦ U(t, x, ξ)` as a measure atom.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedField {
    pub t: f64,
    pub xi: f64,
}

impl Field for ManufacturedField {
    fn components(&self) -> usize {
        3
    }

    fn eval_into(&self, x: f64, out: &mut [f64]) {
        let u = manufactured_solution(self.t, x, self.xi);
        out[0] = u.rho;
        out[1] = u.m;
        out[2] = u.e;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{ConservationLaw, Euler};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_values() {
        let u = manufactured_solution(0.0, 0.0, 1.0);
        assert!((u.rho - 2.2).abs() < 1e-15);
        assert!((u.m - 2.2).abs() < 1e-15);
        assert!((u.e - 4.84).abs() < 1e-14);
        for &(t, x) in &[(0.0, 0.3), (0.17, 0.91)] {
            assert_eq!(manufactured_solution(t, x, 0.0), EulerState::new(2.0, 2.0, 4.0));
        }
    }

    #[test]
    fn travelling_phase_and_periodicity() {
        for &(t, x, xi) in &[(0.05, 0.2, 0.4), (0.19, 0.77, 1.0)] {
            let a = manufactured_solution(t, x, xi).to_state();
            let b = manufactured_solution(0.0, (x - t).rem_euclid(1.0), xi).to_state();
            let c = manufactured_solution(t, x + 1.0, xi).to_state();
            assert!((a - b).norm() < 1e-12);
            assert!((a - c).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_amplitude_has_zero_source() {
        assert_eq!(manufactured_source(0.1, 0.4, 0.0), State::<3>::zeros());
    }

    fn fd_source(t: f64, x: f64, xi: f64) -> State<3> {
        let h = 1e-6;
        let u = |t, x| manufactured_solution(t, x, xi).to_state();
        let dt = (u(t + h, x) - u(t - h, x)) / (2.0 * h);
        let dx = (Euler.flux(&u(t, x + h)) - Euler.flux(&u(t, x - h))) / (2.0 * h);
        dt + dx
    }

    #[test]
    fn source_matches_finite_differences() {
        let q = manufactured_source(0.0, 0.1, 0.5);
        assert!((q - fd_source(0.0, 0.1, 0.5)).abs().max() < 1e-5);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (t, x, xi) = (rng.gen_range(0.0..0.2), rng.gen::<f64>(), rng.gen::<f64>());
            let q = manufactured_source(t, x, xi);
            assert!((q - fd_source(t, x, xi)).abs().max() < 1e-5);
            // first component: ∂t ρ + ∂x m
            let phase = 6.0 * PI * (x - t);
            let rho_t = 0.2 * xi * 6.0 * PI * phase.sin();
            let h = 1e-6;
            let m_x = (manufactured_solution(t, x + h, xi).m - manufactured_solution(t, x - h, xi).m) / (2.0 * h);
            assert!((q[0] - (rho_t + m_x)).abs() < 1e-6);
        }
    }

    #[test]
    fn admissible_on_the_whole_study_range() {
        for i in 0..100 {
            for j in 0..100 {
                for k in 0..=10 {
                    let t = 0.2 * i as f64 / 99.0;
                    let x = j as f64 / 99.0;
                    let xi = k as f64 / 10.0;
                    let u = manufactured_solution(t, x, xi);
                    assert!(u.rho >= 1.8 - 1e-14);
                    assert!(Euler.check_admissible(&u.to_state()).is_ok());
                }
            }
        }
    }
}
