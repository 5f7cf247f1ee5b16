use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::State;
use crate::physics::ConservationLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FluxKind {
    #[default]
    LaxWendroff,
    LocalLaxFriedrichs,
}

/// Intermediate state of the Lax–Wendroff flux,
/// `w(u, v) = ½((u + v) − (dt / h)(f(v) − f(u)))` (Richtmyer form).
#[inline]
pub fn lax_wendroff_state<const M: usize>(
    law: &impl ConservationLaw<M>,
    u: &State<M>,
    v: &State<M>,
    dt: f64,
    h: f64,
) -> State<M> {
    ((u + v) - (law.flux(v) - law.flux(u)) * (dt / h)) * 0.5
}

/// `F(u, v) = f(w(u, v))`; errors when the intermediate state is inadmissible.
pub fn lax_wendroff_flux<const M: usize>(
    law: &impl ConservationLaw<M>,
    u: &State<M>,
    v: &State<M>,
    dt: f64,
    h: f64,
) -> Result<State<M>> {
    law.check_admissible(u)?;
    law.check_admissible(v)?;
    let w = lax_wendroff_state(law, u, v, dt, h);
    law.check_admissible(&w)?;
    Ok(law.flux(&w))
}

/// Rusanov flux with the larger of the two local wave speeds.
pub fn local_lax_friedrichs_flux<const M: usize>(
    law: &impl ConservationLaw<M>,
    u: &State<M>,
    v: &State<M>,
) -> State<M> {
    let alpha = law.wave_speed(u).max(law.wave_speed(v));
    (law.flux(u) + law.flux(v) - (v - u) * alpha) * 0.5
}

/// Numerical flux at one interface together with the interface state used by
/// the Lipschitz reconstruction.
pub(crate) struct InterfaceFlux<const M: usize> {
    pub flux: State<M>,
    pub state: State<M>,
}

pub(crate) fn interface_flux<const M: usize>(
    law: &impl ConservationLaw<M>,
    kind: FluxKind,
    u: &State<M>,
    v: &State<M>,
    dt: f64,
    h: f64,
) -> Result<InterfaceFlux<M>> {
    match kind {
        FluxKind::LaxWendroff => {
            let w = lax_wendroff_state(law, u, v, dt, h);
            law.check_admissible(&w)?;
            Ok(InterfaceFlux {
                flux: law.flux(&w),
                state: w,
            })
        }
        FluxKind::LocalLaxFriedrichs => Ok(InterfaceFlux {
            flux: local_lax_friedrichs_flux(law, u, v),
            state: (u + v) * 0.5,
        }),
    }
}

/// Directional derivative of the interface state along `(du, dv)`.
pub(crate) fn interface_state_derivative<const M: usize>(
    law: &impl ConservationLaw<M>,
    kind: FluxKind,
    (u, v): (&State<M>, &State<M>),
    (du, dv): (&State<M>, &State<M>),
    dt: f64,
    h: f64,
) -> State<M> {
    match kind {
        FluxKind::LaxWendroff => {
            let df = law.flux_jacobian(v) * dv - law.flux_jacobian(u) * du;
            ((du + dv) - df * (dt / h)) * 0.5
        }
        FluxKind::LocalLaxFriedrichs => (du + dv) * 0.5,
    }
}
