//! Continuous space-time reconstruction of DG trajectories, its residual and
//! Lipschitz constant.
//!
//! In space every time level is lifted to a globally continuous piecewise
//! polynomial of degree `p + 1` that keeps the DG moments of degree `< p` and
//! takes the numerical-flux interface states at the cell ends. In time each
//! step is filled in by the cubic Hermite interpolant of the lifted states and
//! the lifted time derivatives.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::field::{ModalField, State};
use crate::mesh::Mesh;
use crate::physics::{ConservationLaw, Forcing};
use crate::quadrature::{gauss_legendre, LegendreBasis, QuadratureRule, SPATIAL_POINTS, TEMPORAL_POINTS};
use crate::rkdg::{StepRecord, TimeNode};

/// Lifts a degree-`p` DG state to the continuous degree-`p + 1` field that keeps
/// the modes `0..p` and interpolates `interface_values` (value `i` at mesh node `i`).
pub fn spatial_reconstruct<const M: usize>(
    state: &ModalField<M>,
    interface_values: &[State<M>],
) -> Result<ModalField<M>> {
    let mesh = state.mesh();
    let n = mesh.cells();
    if interface_values.len() != n {
        return Err(invalid(format!(
            "expected {n} interface values, got {}",
            interface_values.len()
        )));
    }
    let p = state.degree();
    let mut out = ModalField::zeros(mesh.clone(), p + 1);
    let parity = if p % 2 == 0 { 1.0 } else { -1.0 };
    for c in 0..n {
        let src = state.cell(c);
        let dst = out.cell_mut(c);
        let mut right = interface_values[mesh.right_neighbour(c)];
        let mut left = interface_values[c];
        for k in 0..p {
            dst[k] = src[k];
            right -= src[k];
            if k % 2 == 0 {
                left -= src[k];
            } else {
                left += src[k];
            }
        }
        // d_p + d_{p+1} = right,  (-1)^p (d_p - d_{p+1}) = left
        dst[p] = (right + left * parity) * 0.5;
        dst[p + 1] = (right - left * parity) * 0.5;
    }
    Ok(out)
}

/// Lifted state and lifted time derivative at one time level.
#[derive(Debug, Clone)]
pub struct NodeReconstruction<const M: usize> {
    pub t: f64,
    pub value: ModalField<M>,
    pub rate: ModalField<M>,
}

impl<const M: usize> NodeReconstruction<M> {
    pub fn from_node(node: &TimeNode<M>) -> Result<Self> {
        Ok(Self {
            t: node.t,
            value: spatial_reconstruct(&node.state, &node.interface_states)?,
            rate: spatial_reconstruct(&node.rate, &node.interface_rates)?,
        })
    }
}

/// Cubic Hermite basis `(h00, h10, h01, h11)` and its `τ`-derivative.
fn hermite(tau: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = tau * tau;
    let t3 = t2 * tau;
    (
        [
            2.0 * t3 - 3.0 * t2 + 1.0,
            t3 - 2.0 * t2 + tau,
            -2.0 * t3 + 3.0 * t2,
            t3 - t2,
        ],
        [
            6.0 * t2 - 6.0 * tau,
            3.0 * t2 - 4.0 * tau + 1.0,
            -6.0 * t2 + 6.0 * tau,
            3.0 * t2 - 2.0 * tau,
        ],
    )
}

/// Coefficients of `u^st` and `∂t u^st` at local time `τ ∈ [0, 1]` of one slab.
fn slab_coefficients<const M: usize>(
    start: &NodeReconstruction<M>,
    end: &NodeReconstruction<M>,
    tau: f64,
    value: &mut [State<M>],
    rate: &mut [State<M>],
) {
    let dt = end.t - start.t;
    let (h, dh) = hermite(tau);
    let coeffs = start
        .value
        .coeffs()
        .iter()
        .zip(start.rate.coeffs())
        .zip(end.value.coeffs().iter().zip(end.rate.coeffs()));
    for ((v, r), ((d0, v0), (d1, v1))) in value.iter_mut().zip(rate.iter_mut()).zip(coeffs) {
        *v = d0 * h[0] + v0 * (h[1] * dt) + d1 * h[2] + v1 * (h[3] * dt);
        *r = (d0 * dh[0] + d1 * dh[2]) / dt + v0 * dh[1] + v1 * dh[3];
    }
}

/// Quantities the estimator needs from one sample's reconstruction on `[0, s]`.
#[derive(Debug, Clone)]
pub struct ReconstructionSummary<const M: usize> {
    pub s: f64,
    /// `∫₀ˢ ∫_D |R^st|² dx dt`.
    pub residual_sq: f64,
    /// `max |∂x u^st|` over the evaluation grid, all components.
    pub lipschitz: f64,
    pub state_min: State<M>,
    pub state_max: State<M>,
    /// `u^st(0, ·)`.
    pub initial: ModalField<M>,
    /// `u^st(s, ·)`.
    pub at_s: ModalField<M>,
}

/// Tabulated quadrature data shared by all slabs of one mesh and degree.
struct Tables {
    temporal: QuadratureRule,
    spatial: QuadratureRule,
    /// Basis at the 10 spatial nodes followed by `ξ = -1` and `ξ = 1`.
    basis: LegendreBasis,
}

impl Tables {
    fn new(degree: usize) -> Result<Self> {
        let spatial = gauss_legendre(SPATIAL_POINTS)?;
        let mut points = spatial.nodes().to_vec();
        points.extend([-1.0, 1.0]);
        Ok(Self {
            temporal: gauss_legendre(TEMPORAL_POINTS)?,
            basis: LegendreBasis::new(degree, &points),
            spatial,
        })
    }
}

/// Streams the slabs of a trajectory and accumulates its residual norm,
/// Lipschitz bound and state range up to time `s`.
pub struct SummaryAccumulator<'a, L, const M: usize> {
    law: &'a L,
    forcing: &'a dyn Forcing<M>,
    s: f64,
    tables: Option<Tables>,
    previous: Option<NodeReconstruction<M>>,
    initial: Option<ModalField<M>>,
    at_s: Option<ModalField<M>>,
    residual_sq: f64,
    lipschitz: f64,
    state_min: State<M>,
    state_max: State<M>,
    value: Vec<State<M>>,
    rate: Vec<State<M>>,
}

impl<'a, L: ConservationLaw<M>, const M: usize> SummaryAccumulator<'a, L, M> {
    pub fn new(law: &'a L, forcing: &'a dyn Forcing<M>, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(invalid(format!("evaluation time must be positive, got {s}")));
        }
        Ok(Self {
            law,
            forcing,
            s,
            tables: None,
            previous: None,
            initial: None,
            at_s: None,
            residual_sq: 0.0,
            lipschitz: 0.0,
            state_min: State::<M>::repeat(f64::INFINITY),
            state_max: State::<M>::repeat(f64::NEG_INFINITY),
            value: Vec::new(),
            rate: Vec::new(),
        })
    }

    /// Consumes the next step of the trajectory.
    pub fn push(&mut self, record: &StepRecord<M>) -> Result<()> {
        if self.at_s.is_some() {
            return Ok(());
        }
        let start = match self.previous.take() {
            Some(prev) => {
                if prev.t != record.start.t {
                    return Err(invalid("trajectory records are not contiguous"));
                }
                prev
            }
            None => NodeReconstruction::from_node(&record.start)?,
        };
        let end = NodeReconstruction::from_node(&record.end)?;
        self.push_slab(&start, &end)?;
        self.previous = Some(end);
        Ok(())
    }

    fn push_slab(&mut self, start: &NodeReconstruction<M>, end: &NodeReconstruction<M>) -> Result<()> {
        if self.at_s.is_some() {
            return Ok(());
        }
        let dt = end.t - start.t;
        if !(dt > 0.0) {
            return Err(invalid("time nodes must be strictly increasing"));
        }
        let first = self.initial.is_none();
        if first {
            self.tables = Some(Tables::new(start.value.degree())?);
            self.initial = Some(start.value.clone());
            let len = start.value.coeffs().len();
            self.value = vec![State::<M>::zeros(); len];
            self.rate = vec![State::<M>::zeros(); len];
        }
        let reaches_s = end.t >= self.s * (1.0 - 1e-12);
        let tau_end = if reaches_s {
            ((self.s - start.t) / dt).min(1.0)
        } else {
            1.0
        };
        let tables = self.tables.take().expect("tables initialised");
        let result = self.integrate_slab(&tables, start, end, tau_end, first);
        self.tables = Some(tables);
        result?;
        if reaches_s {
            let mesh = start.value.mesh().clone();
            let degree = start.value.degree();
            slab_coefficients(start, end, tau_end, &mut self.value, &mut self.rate);
            self.at_s = Some(if tau_end == 1.0 {
                end.value.clone()
            } else {
                ModalField::from_coeffs(mesh, degree, self.value.clone())?
            });
        }
        Ok(())
    }

    fn integrate_slab(
        &mut self,
        tables: &Tables,
        start: &NodeReconstruction<M>,
        end: &NodeReconstruction<M>,
        tau_end: f64,
        first: bool,
    ) -> Result<()> {
        if tau_end <= 0.0 {
            return Ok(());
        }
        let dt = end.t - start.t;
        for (node, weight) in tables.temporal.iter() {
            let tau = 0.5 * tau_end * (node + 1.0);
            let w = 0.5 * tau_end * dt * weight;
            self.visit_time(tables, start, end, tau, Some(w))?;
        }
        if first {
            self.visit_time(tables, start, end, 0.0, None)?;
        }
        self.visit_time(tables, start, end, tau_end, None)
    }

    /// Evaluates `u^st` at local time `τ` on the spatial grid, updating the
    /// Lipschitz bound and state range, and the residual integral if `weight` is set.
    fn visit_time(
        &mut self,
        tables: &Tables,
        start: &NodeReconstruction<M>,
        end: &NodeReconstruction<M>,
        tau: f64,
        weight: Option<f64>,
    ) -> Result<()> {
        slab_coefficients(start, end, tau, &mut self.value, &mut self.rate);
        let mesh: &Arc<Mesh> = start.value.mesh();
        let t = start.t + tau * (end.t - start.t);
        let modes = start.value.degree() + 1;
        let with_source = !self.forcing.is_zero();
        let n_spatial = tables.spatial.order();
        let mut residual = 0.0;
        for c in 0..mesh.cells() {
            let h = mesh.width(c);
            let scale = 2.0 / h;
            let value = &self.value[c * modes..(c + 1) * modes];
            let rate = &self.rate[c * modes..(c + 1) * modes];
            for q in 0..n_spatial + 2 {
                let phi = tables.basis.values(q);
                let dphi = tables.basis.derivatives(q);
                let mut u = State::<M>::zeros();
                let mut ux = State::<M>::zeros();
                for k in 0..modes {
                    u += value[k] * phi[k];
                    ux += value[k] * dphi[k];
                }
                ux *= scale;
                self.lipschitz = self.lipschitz.max(ux.amax());
                self.state_min = self.state_min.inf(&u);
                self.state_max = self.state_max.sup(&u);
                let Some(w) = weight else { continue };
                if q >= n_spatial {
                    continue;
                }
                let mut r = self.law.flux_jacobian(&u) * ux;
                for k in 0..modes {
                    r += rate[k] * phi[k];
                }
                if with_source {
                    let x = mesh.map(c, tables.spatial.nodes()[q]);
                    r -= self.forcing.eval(t, x, &u);
                }
                residual += w * tables.spatial.weights()[q] * 0.5 * h * r.norm_squared();
            }
        }
        if !residual.is_finite() || !self.lipschitz.is_finite() {
            return Err(Error::StateSpace {
                message: format!("non-finite residual of the reconstruction at t = {t}"),
                state: Vec::new(),
                cell: None,
                stage: None,
            });
        }
        self.residual_sq += residual;
        Ok(())
    }

    pub fn finish(mut self) -> Result<ReconstructionSummary<M>> {
        let initial = self
            .initial
            .take()
            .ok_or_else(|| invalid("cannot summarise an empty trajectory"))?;
        let (s, at_s) = match self.at_s.take() {
            Some(at_s) => (self.s, at_s),
            // the trajectory ends before s: clip to its last node
            None => {
                let last = self.previous.take().expect("at least one slab");
                (last.t, last.value)
            }
        };
        Ok(ReconstructionSummary {
            s,
            residual_sq: self.residual_sq,
            lipschitz: self.lipschitz,
            state_min: self.state_min,
            state_max: self.state_max,
            initial,
            at_s,
        })
    }
}

/// The full reconstruction of a stored trajectory.
#[derive(Debug, Clone)]
pub struct SpaceTimeReconstruction<const M: usize> {
    nodes: Vec<NodeReconstruction<M>>,
}

/// Builds the space-time reconstruction of a contiguous trajectory.
pub fn temporal_reconstruct<const M: usize>(records: &[StepRecord<M>]) -> Result<SpaceTimeReconstruction<M>> {
    let first = records
        .first()
        .ok_or_else(|| invalid("cannot reconstruct an empty trajectory"))?;
    let mut nodes = vec![NodeReconstruction::from_node(&first.start)?];
    for (i, record) in records.iter().enumerate() {
        if i > 0 && record.start.t != records[i - 1].end.t {
            return Err(invalid("trajectory records are not contiguous"));
        }
        if !(record.end.t > record.start.t) {
            return Err(invalid("time nodes must be strictly increasing"));
        }
        nodes.push(NodeReconstruction::from_node(&record.end)?);
    }
    Ok(SpaceTimeReconstruction { nodes })
}

impl<const M: usize> SpaceTimeReconstruction<M> {
    pub fn nodes(&self) -> &[NodeReconstruction<M>] {
        &self.nodes
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.nodes[0].value.mesh()
    }

    /// Spatial degree of the reconstruction (`p + 1`).
    pub fn degree(&self) -> usize {
        self.nodes[0].value.degree()
    }

    pub fn t_start(&self) -> f64 {
        self.nodes[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].t
    }

    /// Slab containing `t` (clamped to the covered interval) and the local time in it.
    fn locate(&self, t: f64) -> (usize, f64) {
        let t = t.clamp(self.t_start(), self.t_end());
        let slab = self
            .nodes
            .partition_point(|node| node.t <= t)
            .saturating_sub(1)
            .min(self.nodes.len() - 2);
        let (a, b) = (self.nodes[slab].t, self.nodes[slab + 1].t);
        (slab, ((t - a) / (b - a)).clamp(0.0, 1.0))
    }

    fn fields_at(&self, t: f64) -> (ModalField<M>, ModalField<M>) {
        let mut value = self.nodes[0].value.clone();
        let mut rate = value.clone();
        if self.nodes.len() == 1 {
            return (value, self.nodes[0].rate.clone());
        }
        let (slab, tau) = self.locate(t);
        slab_coefficients(
            &self.nodes[slab],
            &self.nodes[slab + 1],
            tau,
            value.coeffs_mut(),
            rate.coeffs_mut(),
        );
        (value, rate)
    }

    /// `u^st(t, ·)`.
    pub fn slice(&self, t: f64) -> ModalField<M> {
        self.fields_at(t).0
    }

    /// `∂t u^st(t, ·)`.
    pub fn time_derivative(&self, t: f64) -> ModalField<M> {
        self.fields_at(t).1
    }

    pub fn eval(&self, t: f64, x: f64) -> State<M> {
        self.slice(t).eval(x)
    }

    pub fn summary<L: ConservationLaw<M>>(
        &self,
        law: &L,
        forcing: &dyn Forcing<M>,
        s: f64,
    ) -> Result<ReconstructionSummary<M>> {
        let mut acc = SummaryAccumulator::new(law, forcing, s)?;
        for pair in self.nodes.windows(2) {
            acc.push_slab(&pair[0], &pair[1])?;
        }
        if self.nodes.len() == 1 {
            return Err(invalid("a reconstruction needs at least one time step"));
        }
        acc.previous = Some(self.nodes[self.nodes.len() - 1].clone());
        acc.finish()
    }

    /// `∫₀ˢ ∫_D |∂t u^st + ∂x f(u^st) − Q|² dx dt` with 7 × 10 Gauss points per slab and cell.
    pub fn residual_norm_sq<L: ConservationLaw<M>>(&self, law: &L, forcing: &dyn Forcing<M>, s: f64) -> Result<f64> {
        Ok(self.summary(law, forcing, s)?.residual_sq)
    }

    /// `max |∂x u^st|` on `(0, s) × D` over quadrature points, cell ends and time nodes.
    pub fn lipschitz_bound<L: ConservationLaw<M>>(&self, law: &L, s: f64) -> Result<f64> {
        Ok(self.summary(law, &crate::physics::NoForcing, s)?.lipschitz)
    }
}
