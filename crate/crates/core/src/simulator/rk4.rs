//! Classical fixed-step 4th-order Runge-Kutta on small fixed-size states.

/// Advance `y` by one step of size `dt`, evaluating the derivative `f` at
/// the four classical stages.
pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, dt: f64, y: &[f64; N]) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let half = 0.5 * dt;

    let k1 = f(t, y);

    let mut y2 = *y;
    for j in 0..N {
        y2[j] += half * k1[j];
    }
    let k2 = f(t + half, &y2);

    let mut y3 = *y;
    for j in 0..N {
        y3[j] += half * k2[j];
    }
    let k3 = f(t + half, &y3);

    let mut y4 = *y;
    for j in 0..N {
        y4[j] += dt * k3[j];
    }
    let k4 = f(t + dt, &y4);

    let mut out = *y;
    for j in 0..N {
        out[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveforms::{charge_integral, eval_current, SinusoidCurrent};
    use std::f64::consts::PI;

    #[test]
    fn zero_derivative_keeps_state() {
        let mut f = |_t: f64, _y: &[f64; 2]| [0.0, 0.0];
        let y = rk4_step(&mut f, 0.3, 0.1, &[1.5, -2.0]);
        assert_eq!(y, [1.5, -2.0]);
    }

    fn integrate_charge(w: &SinusoidCurrent, n: usize) -> (f64, f64) {
        // Returns (q at period end, max |error| against the closed form).
        let t_end = w.period();
        let dt = t_end / n as f64;
        let mut f = |t: f64, _y: &[f64; 1]| [eval_current(w, t)];
        let mut y = [0.0];
        let mut max_err: f64 = 0.0;
        for k in 0..n {
            let t = k as f64 * dt;
            y = rk4_step(&mut f, t, dt, &y);
            let exact = charge_integral(w, (k + 1) as f64 * dt).unwrap();
            max_err = max_err.max((y[0] - exact).abs());
        }
        (y[0], max_err)
    }

    #[test]
    fn sinusoid_charge_closes_over_period() {
        let w = SinusoidCurrent::new(2.0, 2.0 * PI, 0.0).unwrap();
        let (q_end, _) = integrate_charge(&w, 1000);
        assert!(q_end.abs() < 1e-10 * (w.i0 / w.omega));
    }

    #[test]
    fn halving_dt_cuts_error_sixteenfold() {
        let w = SinusoidCurrent::new(1.0, 2.0 * PI, 0.0).unwrap();
        let (_, e1) = integrate_charge(&w, 200);
        let (_, e2) = integrate_charge(&w, 400);
        let ratio = e1 / e2;
        assert!(
            (ratio - 16.0).abs() <= 0.2 * 16.0,
            "order ratio {ratio} outside 16 ± 20%"
        );
    }
}
