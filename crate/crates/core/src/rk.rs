//! Adaptive explicit Runge-Kutta (Dormand-Prince 5(4)) for the two-state
//! dual shooting system, with event detection on the second state.
//!
//! The integrator advances `(g, g')` in the independent variable `y`; the
//! right-hand side supplies `g''` and may fail (concavity breakdown), which
//! aborts the shot. Steps are accepted on a mixed error test and the step
//! size follows the standard fifth-order controller.

use crate::error::Result;

pub type State = [f64; 2];

/// Butcher tableau of Dormand-Prince 5(4).
const A: [[f64; 6]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
];
const C: [f64; 6] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0];
/// Fifth-order weights (the FSAL seventh stage never feeds the solution).
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Fourth-order embedded weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub struct Controller {
    pub rtol: f64,
    pub atol: [f64; 2],
    pub h_min: f64,
    pub h_max: f64,
}

pub struct StepOutcome {
    pub state: State,
    pub h_used: f64,
    pub h_next: f64,
    pub accepted: bool,
}

/// One attempted step of size `h` from `(x, s)`. The caller loops until
/// `accepted`, feeding `h_next` back in.
pub fn step<F>(f: &mut F, x: f64, s: State, h: f64, ctl: &Controller) -> Result<StepOutcome>
where
    F: FnMut(f64, State) -> Result<State>,
{
    let mut k = [[0.0f64; 2]; 7];
    k[0] = f(x, s)?;
    for stage in 1..6 {
        let mut arg = s;
        for (j, kj) in k.iter().enumerate().take(stage) {
            let w = A[stage][j] * h;
            arg[0] += w * kj[0];
            arg[1] += w * kj[1];
        }
        k[stage] = f(x + C[stage] * h, arg)?;
    }
    let mut s5 = s;
    for (j, kj) in k.iter().enumerate().take(6) {
        s5[0] += h * B5[j] * kj[0];
        s5[1] += h * B5[j] * kj[1];
    }
    k[6] = f(x + h, s5)?;
    let mut s4 = s;
    for (j, kj) in k.iter().enumerate() {
        s4[0] += h * B4[j] * kj[0];
        s4[1] += h * B4[j] * kj[1];
    }
    let mut err: f64 = 0.0;
    for i in 0..2 {
        let scale = ctl.atol[i] + ctl.rtol * s[i].abs().max(s5[i].abs());
        err = err.max((s5[i] - s4[i]).abs() / scale);
    }
    let accepted = err <= 1.0 || h <= ctl.h_min;
    let factor = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
    let h_next = (h * factor).clamp(ctl.h_min, ctl.h_max);
    Ok(StepOutcome { state: s5, h_used: h, h_next, accepted })
}
