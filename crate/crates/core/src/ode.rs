//! Integrator for `y″ = (q(s) − z) y` with `q = −γ²/4`.
//!
//! Fourth-order Magnus steps with exact 2x2 exponentials, adaptive by step
//! doubling. On intervals where γ vanishes a step is exact. Dense output
//! re-propagates one partial step from the nearest stored mesh point.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profile::CurvatureProfile;

/// State `[y, y′]`.
pub type State = [Complex64; 2];

pub const DEFAULT_RTOL: f64 = 1e-10;
const ATOL: f64 = 1e-14;
const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A stored solution of one initial-value problem on [−1, 1].
#[derive(Clone, Debug)]
pub struct Trajectory {
    profile: CurvatureProfile,
    z: Complex64,
    /// Mesh points in ascending order.
    mesh: Vec<f64>,
    states: Vec<State>,
    /// Unwrapped Prüfer-type phase of (y, −y′/κ) accumulated from start to end.
    phase: f64,
}

fn potential(profile: &CurvatureProfile, s: f64) -> f64 {
    let g = profile.gamma(s, 0);
    -0.25 * g * g
}

fn sinhc(m: Complex64) -> Complex64 {
    if m.norm() < 1e-3 {
        let m2 = m * m;
        1.0 + m2 / 6.0 * (1.0 + m2 / 20.0 * (1.0 + m2 / 42.0))
    } else {
        m.sinh() / m
    }
}

/// One fourth-order Magnus step of signed length `h` from `s`.
pub fn magnus_step(profile: &CurvatureProfile, z: Complex64, s: f64, h: f64, y: State) -> State {
    if h == 0.0 {
        return y;
    }
    let c1 = potential(profile, s + h * (0.5 - SQRT3 / 6.0)) - z;
    let c2 = potential(profile, s + h * (0.5 + SQRT3 / 6.0)) - z;
    let cbar = 0.5 * (c1 + c2);
    let a = (SQRT3 * h * h / 12.0) * (c1 - c2);
    let b = Complex64::new(h, 0.0);
    let c = h * cbar;
    let mu = (a * a + b * c).sqrt();
    let ch = mu.cosh();
    let sc = sinhc(mu);
    [
        (ch + sc * a) * y[0] + sc * b * y[1],
        sc * c * y[0] + (ch - sc * a) * y[1],
    ]
}

impl Trajectory {
    /// Integrates from `s0` (with `y(s0) = y0`) to `s1` at relative tolerance `rtol`.
    pub fn integrate(
        profile: &CurvatureProfile,
        z: Complex64,
        s0: f64,
        y0: State,
        s1: f64,
        rtol: f64,
    ) -> Result<Self> {
        let dir = if s1 >= s0 { 1.0 } else { -1.0 };
        let span = (s1 - s0).abs();
        let sup = profile.sup_abs();
        let kappa = (z.norm() + 0.25 * sup * sup + 1.0).sqrt();
        let h_max = (0.25f64).min(1.0 / kappa);
        let h_min = 1e-12 * span.max(1.0);
        let mut h = h_max;
        let mut s = s0;
        let mut y = y0;
        let mut mesh = vec![s0];
        let mut states = vec![y0];
        let mut phase = (-y0[1].re / kappa).atan2(y0[0].re);
        let mut last_angle = phase;

        while (s1 - s) * dir > 0.0 {
            let remaining = (s1 - s).abs();
            let step = h.min(remaining);
            let full = magnus_step(profile, z, s, dir * step, y);
            let half = magnus_step(profile, z, s, 0.5 * dir * step, y);
            let two = magnus_step(profile, z, s + 0.5 * dir * step, 0.5 * dir * step, half);
            let scale = |st: &State| st[0].norm().max(st[1].norm() / kappa);
            let sc = ATOL + rtol * scale(&y).max(scale(&two));
            let err = (two[0] - full[0])
                .norm()
                .max((two[1] - full[1]).norm() / kappa)
                / 15.0
                / sc;
            if err <= 1.0 || step <= h_min {
                if err > 1.0 {
                    return Err(Error::IntegratorFailure { z, s });
                }
                s = if step == remaining { s1 } else { s + dir * step };
                y = two;
                mesh.push(s);
                states.push(y);
                let angle = (-y[1].re / kappa).atan2(y[0].re);
                let mut d = angle - last_angle;
                while d > std::f64::consts::PI {
                    d -= 2.0 * std::f64::consts::PI;
                }
                while d <= -std::f64::consts::PI {
                    d += 2.0 * std::f64::consts::PI;
                }
                phase += d;
                last_angle = angle;
                let grow = if err == 0.0 {
                    4.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 4.0)
                };
                h = (step * grow).min(h_max);
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        if dir < 0.0 {
            mesh.reverse();
            states.reverse();
            phase = -phase;
        }
        Ok(Trajectory {
            profile: *profile,
            z,
            mesh,
            states,
            phase,
        })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    /// Net phase advance of `(y, −y′/κ)` in the direction of integration,
    /// reported for the forward orientation (from −1 to 1).
    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// `[y(s), y′(s)]` by one partial Magnus step from the nearest mesh point.
    pub fn eval(&self, s: f64) -> State {
        let n = self.mesh.len();
        let idx = match self.mesh.binary_search_by(|x| x.partial_cmp(&s).unwrap()) {
            Ok(i) => return self.states[i],
            Err(i) => i,
        };
        let j = if idx == 0 {
            0
        } else if idx >= n {
            n - 1
        } else if (s - self.mesh[idx - 1]) <= (self.mesh[idx] - s) {
            idx - 1
        } else {
            idx
        };
        magnus_step(
            &self.profile,
            self.z,
            self.mesh[j],
            s - self.mesh[j],
            self.states[j],
        )
    }
}
