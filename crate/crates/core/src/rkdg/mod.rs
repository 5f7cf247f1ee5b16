//! Runge–Kutta discontinuous Galerkin solver on periodic 1D meshes.

mod flux;
mod limiter;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use flux::{lax_wendroff_flux, lax_wendroff_state, local_lax_friedrichs_flux, FluxKind};
pub use limiter::{minmod, tvb_minmod, tvbm_limit};

use crate::error::{invalid, Error, Result};
use crate::field::{l2_project, ModalField, State};
use crate::mesh::Mesh;
use crate::physics::{ConservationLaw, Euler, Forcing, ManufacturedEuler};
use crate::quadrature::{gauss_legendre, LegendreBasis, QuadratureRule};

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub cells: usize,
    pub degree: usize,
    pub cfl: f64,
    pub t_final: f64,
    pub flux: FluxKind,
    pub m_tvb: f64,
    pub limiter_enabled: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cells: 64,
            degree: 2,
            cfl: 1.0,
            t_final: 0.2,
            flux: FluxKind::LaxWendroff,
            m_tvb: 200.0,
            limiter_enabled: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cells < 1 {
            return Err(invalid("cells must be positive"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(invalid("t_final must be positive"));
        }
        if !(self.m_tvb >= 0.0) {
            return Err(invalid("m_tvb must be nonnegative"));
        }
        if self.degree > 8 {
            return Err(invalid("degree above 8 is not supported"));
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Arc<Mesh>> {
        Mesh::uniform(self.cells).map(Arc::new)
    }
}

/// Everything known about the discrete solution at one time level: the state,
/// its full time derivative `L_h(u_h) + Π Q`, and the interface states of the
/// numerical flux with their time derivatives.
#[derive(Debug, Clone)]
pub struct TimeNode<const M: usize> {
    pub t: f64,
    /// Step size fed to the numerical flux at this level.
    pub flux_dt: f64,
    pub state: ModalField<M>,
    pub rate: ModalField<M>,
    /// Interface `i` sits at mesh node `i`, between cells `i − 1` and `i`.
    pub interface_states: Vec<State<M>>,
    pub interface_rates: Vec<State<M>>,
}

/// One time step `t^n → t^{n+1}`; adjacent records share their nodes.
#[derive(Debug, Clone)]
pub struct StepRecord<const M: usize> {
    pub dt: f64,
    pub start: Arc<TimeNode<M>>,
    pub end: Arc<TimeNode<M>>,
}

/// Output of one DG operator evaluation.
pub struct RhsEval<const M: usize> {
    pub rate: ModalField<M>,
    pub interface_states: Vec<State<M>>,
}

pub struct DgSolver<'a, L, const M: usize> {
    law: &'a L,
    forcing: &'a dyn Forcing<M>,
    mesh: Arc<Mesh>,
    config: SolverConfig,
    rule: QuadratureRule,
    basis: LegendreBasis,
}

impl<'a, L: ConservationLaw<M>, const M: usize> DgSolver<'a, L, M> {
    pub fn new(law: &'a L, forcing: &'a dyn Forcing<M>, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let mesh = config.mesh()?;
        Self::with_mesh(law, forcing, mesh, config)
    }

    pub fn with_mesh(
        law: &'a L,
        forcing: &'a dyn Forcing<M>,
        mesh: Arc<Mesh>,
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        let rule = gauss_legendre(config.degree + 2)?;
        let basis = LegendreBasis::new(config.degree, rule.nodes());
        Ok(Self {
            law,
            forcing,
            mesh,
            config,
            rule,
            basis,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn law(&self) -> &L {
        self.law
    }

    /// Applies the limiter if enabled.
    pub fn limit(&self, state: ModalField<M>) -> ModalField<M> {
        if self.config.limiter_enabled && state.degree() > 0 {
            tvbm_limit(self.law, &state, self.config.m_tvb)
        } else {
            state
        }
    }

    /// `L_h(u) + Π Q(t)` and the interface states, using `dt` inside the flux.
    pub fn rhs(&self, state: &ModalField<M>, t: f64, dt: f64) -> Result<RhsEval<M>> {
        let mesh = &self.mesh;
        let n = mesh.cells();
        let p = self.config.degree;
        let mut fluxes = Vec::with_capacity(n);
        let mut interface_states = Vec::with_capacity(n);
        for i in 0..n {
            let left = state.right_trace(mesh.left_neighbour(i));
            let right = state.left_trace(i);
            let h = mesh.interface_width(i);
            let f = flux::interface_flux(self.law, self.config.flux, &left, &right, dt, h)
                .map_err(|e| e.in_cell(i))?;
            fluxes.push(f.flux);
            interface_states.push(f.state);
        }

        let mut rate = ModalField::zeros(mesh.clone(), p);
        let with_source = !self.forcing.is_zero();
        for c in 0..n {
            let h = mesh.width(c);
            let coeffs = state.cell(c);
            let out = rate.cell_mut(c);
            for (q, &wq) in self.rule.weights().iter().enumerate() {
                let phi = self.basis.values(q);
                let dphi = self.basis.derivatives(q);
                let u: State<M> = coeffs.iter().zip(phi).map(|(a, b)| a * *b).sum();
                self.law.check_admissible(&u).map_err(|e| e.in_cell(c))?;
                let f = self.law.flux(&u) * wq;
                let s = if with_source {
                    let x = mesh.map(c, self.rule.nodes()[q]);
                    self.forcing.eval(t, x, &u) * (wq * 0.5 * h)
                } else {
                    State::<M>::zeros()
                };
                for k in 0..=p {
                    out[k] += f * dphi[k] + s * phi[k];
                }
            }
            let f_right = &fluxes[mesh.right_neighbour(c)];
            let f_left = &fluxes[c];
            for (k, o) in out.iter_mut().enumerate() {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                *o -= f_right - f_left * sign;
                *o *= (2 * k + 1) as f64 / h;
            }
        }
        Ok(RhsEval {
            rate,
            interface_states,
        })
    }

    /// Largest wave speed over cell means and interface traces.
    pub fn max_wave_speed(&self, state: &ModalField<M>) -> Result<f64> {
        let mut lambda: f64 = 0.0;
        for c in 0..self.mesh.cells() {
            for u in [state.mean(c), state.left_trace(c), state.right_trace(c)] {
                self.law.check_admissible(&u).map_err(|e| e.in_cell(c))?;
                lambda = lambda.max(self.law.wave_speed(&u));
            }
        }
        Ok(lambda)
    }

    /// Unclipped CFL step `cfl · h_min / (λ_max (2p + 1))`, or `None` if nothing moves.
    fn cfl_step(&self, state: &ModalField<M>) -> Result<Option<f64>> {
        let lambda = self.max_wave_speed(state)?;
        if lambda <= 0.0 {
            return Ok(None);
        }
        let p = self.config.degree as f64;
        Ok(Some(self.config.cfl * self.mesh.h_min() / (lambda * (2.0 * p + 1.0))))
    }

    /// CFL-limited step from time `t`, clipped so that the run lands on `t_final`.
    pub fn cfl_timestep(&self, state: &ModalField<M>, t: f64) -> Result<f64> {
        let remaining = self.config.t_final - t;
        Ok(match self.cfl_step(state)? {
            None => remaining,
            Some(dt) => clip_step(dt, remaining),
        })
    }

    fn node(&self, state: ModalField<M>, t: f64, flux_dt: f64) -> Result<TimeNode<M>> {
        let RhsEval {
            rate,
            interface_states,
        } = self.rhs(&state, t, flux_dt)?;
        let n = self.mesh.cells();
        let interface_rates = (0..n)
            .map(|i| {
                let l = self.mesh.left_neighbour(i);
                flux::interface_state_derivative(
                    self.law,
                    self.config.flux,
                    (&state.right_trace(l), &state.left_trace(i)),
                    (&rate.right_trace(l), &rate.left_trace(i)),
                    flux_dt,
                    self.mesh.interface_width(i),
                )
            })
            .collect();
        Ok(TimeNode {
            t,
            flux_dt,
            state,
            rate,
            interface_states,
            interface_rates,
        })
    }

    /// Step size fed to the numerical flux at a node: the unclipped CFL step.
    /// Only the length of the step taken from the node is clipped to land on
    /// `t_final`, so the flux parameter varies smoothly along the trajectory.
    fn node_dt(&self, state: &ModalField<M>, t: f64) -> Result<f64> {
        let remaining = self.config.t_final - t;
        Ok(match self.cfl_step(state)? {
            Some(dt) => dt,
            None if remaining > 0.0 => remaining,
            None => self.mesh.h_min(),
        })
    }

    /// Builds the first node from (already limited) initial data.
    pub fn initial_node(&self, state: ModalField<M>, t: f64) -> Result<Arc<TimeNode<M>>> {
        let dt = self.node_dt(&state, t)?;
        self.node(state, t, dt).map(Arc::new)
    }

    /// One SSP-RK3 step from `start`, limiting after every stage. The step is
    /// `start.flux_dt` clipped to the remaining time; all stages use
    /// `start.flux_dt` inside the numerical flux.
    pub fn ssp_rk3_step(&self, start: &Arc<TimeNode<M>>) -> Result<StepRecord<M>> {
        let t = start.t;
        let flux_dt = start.flux_dt;
        let dt = clip_step(flux_dt, self.config.t_final - t);
        let u0 = &start.state;

        let mut u1 = u0.clone();
        u1.axpy(dt, start.rate.coeffs());
        let u1 = self.limit(u1);

        let l1 = self.rhs(&u1, t + dt, flux_dt).map_err(|e| e.in_stage(2))?;
        let mut u2 = u1;
        u2.axpy(dt, l1.rate.coeffs());
        for (a, b) in u2.coeffs_mut().iter_mut().zip(u0.coeffs()) {
            *a = b * 0.75 + *a * 0.25;
        }
        let u2 = self.limit(u2);

        let l2 = self.rhs(&u2, t + 0.5 * dt, flux_dt).map_err(|e| e.in_stage(3))?;
        let mut u3 = u2;
        u3.axpy(dt, l2.rate.coeffs());
        for (a, b) in u3.coeffs_mut().iter_mut().zip(u0.coeffs()) {
            *a = b * (1.0 / 3.0) + *a * (2.0 / 3.0);
        }
        let u3 = self.limit(u3);

        let t_next = if (self.config.t_final - (t + dt)).abs() <= 1e-12 * self.config.t_final {
            self.config.t_final
        } else {
            t + dt
        };
        if let Some(cell) = u3.first_non_finite_cell() {
            return Err(Error::BlowUp { time: t_next, cell });
        }
        let next_dt = self.node_dt(&u3, t_next)?;
        let end = self.node(u3, t_next, next_dt).map_err(|e| e.in_stage(1))?;
        Ok(StepRecord {
            dt,
            start: start.clone(),
            end: Arc::new(end),
        })
    }

    /// Limits the initial data and steps to `t_final`.
    pub fn run(&self, initial: ModalField<M>) -> Result<Vec<StepRecord<M>>> {
        let mut records = Vec::new();
        self.run_with(initial, |record| {
            records.push(record.clone());
            Ok(())
        })?;
        Ok(records)
    }

    /// Like [`run`](Self::run), but hands every step to `visit` as soon as it is
    /// computed instead of collecting the trajectory.
    pub fn run_with(
        &self,
        initial: ModalField<M>,
        mut visit: impl FnMut(&StepRecord<M>) -> Result<()>,
    ) -> Result<()> {
        let mut node = self.initial_node(self.limit(initial), 0.0)?;
        while node.t < self.config.t_final {
            let record = self.ssp_rk3_step(&node)?;
            visit(&record)?;
            node = record.end;
        }
        Ok(())
    }
}

fn clip_step(dt: f64, remaining: f64) -> f64 {
    if dt >= remaining * (1.0 - 1e-12) {
        remaining
    } else {
        dt
    }
}

/// DG operator on its own: `L_h(u) + Π Q(t)`.
pub fn dg_rhs<L: ConservationLaw<M>, const M: usize>(
    law: &L,
    forcing: &dyn Forcing<M>,
    config: &SolverConfig,
    state: &ModalField<M>,
    t: f64,
    dt: f64,
) -> Result<ModalField<M>> {
    let solver = DgSolver::with_mesh(law, forcing, state.mesh().clone(), config.clone())?;
    Ok(solver.rhs(state, t, dt)?.rate)
}

/// Solves the manufactured Euler problem for one sample `ξ`.
pub fn run_deterministic(xi: f64, config: &SolverConfig) -> Result<Vec<StepRecord<3>>> {
    let mut records = Vec::new();
    run_deterministic_with(xi, config, |record| {
        records.push(record.clone());
        Ok(())
    })?;
    Ok(records)
}

/// Streaming form of [`run_deterministic`].
pub fn run_deterministic_with(
    xi: f64,
    config: &SolverConfig,
    visit: impl FnMut(&StepRecord<3>) -> Result<()>,
) -> Result<()> {
    config.validate()?;
    if config.cells < 4 {
        return Err(invalid("the manufactured problem needs at least 4 cells"));
    }
    let forcing = ManufacturedEuler::new(xi);
    let solver = DgSolver::new(&Euler, &forcing, config.clone())?;
    let initial = l2_project(|x| forcing.solution(0.0, x), solver.mesh().clone(), config.degree)?;
    solver.run_with(initial, visit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{LinearAdvection, LinearReaction, NoForcing};
    use std::f64::consts::PI;

    fn advection_config(cells: usize) -> SolverConfig {
        SolverConfig {
            cells,
            degree: 2,
            cfl: 1.0,
            t_final: 0.2,
            flux: FluxKind::LaxWendroff,
            m_tvb: 0.0,
            limiter_enabled: false,
        }
    }

    #[test]
    fn constant_state_has_zero_rhs_and_is_steady() {
        let config = SolverConfig {
            cells: 8,
            ..SolverConfig::default()
        };
        let solver = DgSolver::new(&Euler, &NoForcing, config).unwrap();
        let c = State::<3>::new(1.0, 0.3, 2.5);
        let u = l2_project(|_| c, solver.mesh().clone(), 2).unwrap();
        let r = solver.rhs(&u, 0.0, 0.01).unwrap();
        assert!(r.rate.coeffs().iter().all(|v| v.norm() < 1e-12));
        let node = solver.initial_node(u.clone(), 0.0).unwrap();
        let rec = solver.ssp_rk3_step(&node).unwrap();
        for (a, b) in rec.end.state.coeffs().iter().zip(u.coeffs()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn cfl_timestep_formula_and_clipping() {
        let law = LinearAdvection::new(1.0);
        let solver = DgSolver::new(&law, &NoForcing, advection_config(16)).unwrap();
        let u = l2_project(|x| State::<1>::new((2.0 * PI * x).sin()), solver.mesh().clone(), 2).unwrap();
        assert!((solver.cfl_timestep(&u, 0.0).unwrap() - 1.0 / 80.0).abs() < 1e-15);
        assert!((solver.cfl_timestep(&u, 0.199).unwrap() - 0.001).abs() < 1e-15);

        let fine = DgSolver::new(&law, &NoForcing, advection_config(32)).unwrap();
        let v = l2_project(|x| State::<1>::new((2.0 * PI * x).sin()), fine.mesh().clone(), 2).unwrap();
        let ratio = solver.cfl_timestep(&u, 0.0).unwrap() / fine.cfl_timestep(&v, 0.0).unwrap();
        assert!((ratio - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rk3_reproduces_stability_polynomial() {
        let lambda = -3.0;
        let forcing = LinearReaction(lambda);
        let law = LinearAdvection::new(0.0);
        let config = SolverConfig {
            cells: 1,
            degree: 0,
            t_final: 0.1,
            limiter_enabled: false,
            ..SolverConfig::default()
        };
        let solver = DgSolver::new(&law, &forcing, config).unwrap();
        let u = l2_project(|_| State::<1>::new(1.0), solver.mesh().clone(), 0).unwrap();
        let node = solver.initial_node(u, 0.0).unwrap();
        let dt = node.flux_dt;
        let rec = solver.ssp_rk3_step(&node).unwrap();
        let z = lambda * dt;
        let expected = 1.0 + z + z * z / 2.0 + z * z * z / 6.0;
        assert!((rec.end.state.mean(0)[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn rhs_cell_means_approximate_derivative() {
        let law = LinearAdvection::new(1.0);
        let err = |n: usize| {
            let solver = DgSolver::new(&law, &NoForcing, advection_config(n)).unwrap();
            let u = l2_project(|x| State::<1>::new((2.0 * PI * x).sin()), solver.mesh().clone(), 2).unwrap();
            let dt = solver.cfl_timestep(&u, 0.0).unwrap();
            let r = solver.rhs(&u, 0.0, dt).unwrap().rate;
            let exact = l2_project(|x| State::<1>::new(-2.0 * PI * (2.0 * PI * x).cos()), solver.mesh().clone(), 0)
                .unwrap();
            (0..n)
                .map(|c| (r.mean(c)[0] - exact.mean(c)[0]).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(16) / err(32);
        assert!(ratio > 6.0, "ratio {ratio}");
    }

    #[test]
    fn rhs_means_telescope() {
        let config = SolverConfig {
            cells: 10,
            ..SolverConfig::default()
        };
        let forcing = ManufacturedEuler::new(0.8);
        let solver = DgSolver::new(&Euler, &forcing, config).unwrap();
        let u = l2_project(|x| forcing.solution(0.0, x), solver.mesh().clone(), 2).unwrap();
        let r = solver.rhs(&u, 0.0, 0.002).unwrap().rate;
        let total: State<3> = (0..10).map(|c| r.mean(c) * solver.mesh().width(c)).sum();
        let mut source = State::<3>::zeros();
        let rule = gauss_legendre(4).unwrap();
        for c in 0..10 {
            for (xi, w) in rule.iter() {
                let x = solver.mesh().map(c, xi);
                source += forcing.eval(0.0, x, &State::<3>::zeros()) * (w * 0.05);
            }
        }
        assert!((total - source).norm() < 1e-12);
    }

    #[test]
    fn zero_amplitude_sample_stays_constant() {
        let config = SolverConfig {
            cells: 8,
            ..SolverConfig::default()
        };
        let records = run_deterministic(0.0, &config).unwrap();
        let last = &records.last().unwrap().end;
        assert_eq!(last.t, config.t_final);
        for c in 0..8 {
            assert!((last.state.mean(c) - State::<3>::new(2.0, 2.0, 4.0)).norm() < 1e-13);
            for k in 1..3 {
                assert!(last.state.cell(c)[k].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn records_are_contiguous() {
        let config = SolverConfig {
            cells: 8,
            ..SolverConfig::default()
        };
        let records = run_deterministic(1.0, &config).unwrap();
        assert_eq!(records[0].start.t, 0.0);
        for pair in records.windows(2) {
            assert!(Arc::ptr_eq(&pair[0].end, &pair[1].start));
            assert!(pair[0].dt > 0.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig { cfl: 0.0, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { cfl: 1.5, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { t_final: -1.0, ..SolverConfig::default() }.validate().is_err());
        assert!(run_deterministic(0.5, &SolverConfig { cells: 3, ..SolverConfig::default() }).is_err());
    }
}
