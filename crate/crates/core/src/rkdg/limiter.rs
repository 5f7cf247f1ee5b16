//! TVB-modified minmod slope limiter in local characteristic variables.

use crate::field::{ModalField, State};
use crate::physics::{ConservationLaw, Mat};

pub fn minmod(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

/// `a` itself when `|a| ≤ threshold`, otherwise `minmod(a, b, c)`.
pub fn tvb_minmod(a: f64, b: f64, c: f64, threshold: f64) -> f64 {
    if a.abs() <= threshold {
        a
    } else {
        minmod(a, b, c)
    }
}

const CONDITIONING_TOL: f64 = 1e-8;

fn characteristic<const M: usize>(law: &impl ConservationLaw<M>, mean: &State<M>) -> (Mat<M>, Mat<M>) {
    law.characteristic_basis(mean)
        .filter(|(r, l)| {
            let err = (l * r - Mat::<M>::identity()).abs().max();
            err.is_finite() && err < CONDITIONING_TOL
        })
        .unwrap_or_else(|| (Mat::<M>::identity(), Mat::<M>::identity()))
}

/// Applies the TVBM limiter. Cells whose interface deviations survive the
/// modified minmod unchanged are returned bit-identical; the others are replaced
/// by their mean plus a limited linear part. Cell means are never modified.
pub fn tvbm_limit<const M: usize>(
    law: &impl ConservationLaw<M>,
    state: &ModalField<M>,
    m_tvb: f64,
) -> ModalField<M> {
    let mut out = state.clone();
    if state.degree() == 0 {
        return out;
    }
    let mesh = state.mesh().clone();
    for c in 0..mesh.cells() {
        let h = mesh.width(c);
        let threshold = m_tvb * h * h;
        let mean = state.mean(c);
        let forward = state.mean(mesh.right_neighbour(c)) - mean;
        let backward = mean - state.mean(mesh.left_neighbour(c));
        let dev_right = state.right_trace(c) - mean;
        let dev_left = mean - state.left_trace(c);

        let (r, l) = characteristic(law, &mean);
        let (f, b) = (l * forward, l * backward);
        let (dr, dl) = (l * dev_right, l * dev_left);
        let untouched = (0..M).all(|i| {
            tvb_minmod(dr[i], f[i], b[i], threshold) == dr[i]
                && tvb_minmod(dl[i], f[i], b[i], threshold) == dl[i]
        });
        if untouched {
            continue;
        }
        let slope = l * state.cell(c)[1];
        let limited = State::<M>::from_fn(|i, _| tvb_minmod(slope[i], f[i], b[i], threshold));
        let cell = out.cell_mut(c);
        cell[1] = r * limited;
        for coeff in cell.iter_mut().skip(2) {
            *coeff = State::<M>::zeros();
        }
    }
    out
}
