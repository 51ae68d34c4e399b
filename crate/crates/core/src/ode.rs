//! Fixed-step classical Runge–Kutta integration shared by the forward
//! Kolmogorov system and the backward regime systems.

/// Scratch buffers for [`rk4_step`], sized once per solve.
pub(crate) struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4Workspace {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }
}

/// Advances `y` across one step of `dy/dt = rhs(stage, y)`, `h` may be negative.
///
/// The right-hand side receives the stage index (0 at the start of the step,
/// 1 and 2 at the midpoint, 3 at the end) instead of a time, so callers with
/// piecewise-constant coefficients can freeze them for the whole step and
/// look up any precomputed midpoint data they need.
pub(crate) fn rk4_step<F>(y: &mut [f64], h: f64, ws: &mut Rk4Workspace, mut rhs: F)
where
    F: FnMut(usize, &[f64], &mut [f64]),
{
    let n = y.len();
    rhs(0, y, &mut ws.k1);
    for i in 0..n {
        ws.stage[i] = y[i] + 0.5 * h * ws.k1[i];
    }
    rhs(1, &ws.stage, &mut ws.k2);
    for i in 0..n {
        ws.stage[i] = y[i] + 0.5 * h * ws.k2[i];
    }
    rhs(2, &ws.stage, &mut ws.k3);
    for i in 0..n {
        ws.stage[i] = y[i] + h * ws.k3[i];
    }
    rhs(3, &ws.stage, &mut ws.k4);
    for i in 0..n {
        y[i] += h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}
