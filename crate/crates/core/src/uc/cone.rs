//! Frequency-security limits: RoCoF bound and the nadir second-order cone.
//!
//! The nadir cone is `||(a1, a2)|| <= c` with
//!
//! ```text
//! a1 = H/f0 - T_EFR*EFR/(4 df) - PFR/T_PFR
//! a2 = (P_loss - EFR) / sqrt(df)
//! c  = H/f0 - T_EFR*EFR/(4 df) + PFR/T_PFR
//! ```
//!
//! Writing `u = H/f0 - T_EFR*EFR/(4 df)` and `v = PFR/T_PFR`, this is
//! `u*v >= (P_loss - EFR)^2 / (4 df)` together with `u + v >= 0`.

use crate::scenario::SystemParams;

/// Values of `(a1, a2, c)` at a point.
pub fn nadir_terms(h: f64, efr: f64, pfr: f64, p_loss: f64, p: &SystemParams) -> (f64, f64, f64) {
    let u = h / p.f0 - p.t_efr * efr / (4.0 * p.delta_f_max);
    let v = pfr / p.t_pfr;
    (u - v, (p_loss - efr) / p.delta_f_max.sqrt(), u + v)
}

/// Cone membership of `(H, EFR, PFR, P_loss)`.
pub fn nadir_feasible(h: f64, efr: f64, pfr: f64, p_loss: f64, params: &SystemParams) -> bool {
    let (a1, a2, c) = nadir_terms(h, efr, pfr, p_loss, params);
    a1.hypot(a2) <= c
}

/// Signed cone violation `||(a1, a2)|| - c`.
pub fn nadir_violation(h: f64, efr: f64, pfr: f64, p_loss: f64, params: &SystemParams) -> f64 {
    let (a1, a2, c) = nadir_terms(h, efr, pfr, p_loss, params);
    a1.hypot(a2) - c
}

/// Smallest inertia meeting the nadir limit for given responses; infinite
/// when `PFR = 0` and the loss exceeds EFR.
pub fn nadir_min_inertia(efr: f64, pfr: f64, p_loss: f64, p: &SystemParams) -> f64 {
    let gap = (p_loss - efr).max(0.0);
    let floor = p.f0 * p.t_efr * efr / (4.0 * p.delta_f_max);
    if gap == 0.0 {
        return floor;
    }
    if pfr <= 0.0 {
        return f64::INFINITY;
    }
    floor + p.f0 * p.t_pfr * gap * gap / (4.0 * p.delta_f_max * pfr)
}

/// Minimum inertia keeping RoCoF within its limit: `p_loss * f0 / (2 RoCoF_max)`.
pub fn rocof_min_inertia(p_loss: f64, params: &SystemParams) -> f64 {
    p_loss * params.f0 / (2.0 * params.rocof_max)
}

/// Linear cut `c - z1*a1 - z2*a2 >= 0` for a unit direction `z`, as
/// coefficients on `(H, EFR, PFR, P_loss)`.
pub fn nadir_cut(z: [f64; 2], p: &SystemParams) -> [f64; 4] {
    let [z1, z2] = z;
    let sq = p.delta_f_max.sqrt();
    [
        (1.0 - z1) / p.f0,
        -p.t_efr / (4.0 * p.delta_f_max) * (1.0 - z1) + z2 / sq,
        (1.0 + z1) / p.t_pfr,
        -z2 / sq,
    ]
}

/// Direction supporting the cone at a violating point, if any.
pub fn separating_direction(h: f64, efr: f64, pfr: f64, p_loss: f64, p: &SystemParams, tol: f64) -> Option<[f64; 2]> {
    let (a1, a2, c) = nadir_terms(h, efr, pfr, p_loss, p);
    let norm = a1.hypot(a2);
    if norm - c > tol * norm.max(1.0) && norm > 0.0 {
        Some([a1 / norm, a2 / norm])
    } else {
        None
    }
}
