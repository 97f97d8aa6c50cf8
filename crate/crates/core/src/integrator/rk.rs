//! Explicit Runge–Kutta steppers over dense complex matrices.
//!
//! The right-hand side is autonomous: callers split the time axis into
//! segments on which the generator is constant.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) type State = DMatrix<Complex64>;

/// `out ← f(y)`; `out` arrives zeroed.
pub(crate) trait Rhs {
    fn eval(&mut self, y: &State, out: &mut State);
}

impl<F: FnMut(&State, &mut State)> Rhs for F {
    fn eval(&mut self, y: &State, out: &mut State) {
        self(y, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Dormand–Prince 5(4) with error control.
    Adaptive,
    /// Classical RK4 with a fixed step (the last step of a span is shortened).
    Rk4 { step: f64 },
}

// Dormand–Prince coefficients.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B5: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// `y += a·x`.
pub(crate) fn add_scaled(y: &mut State, a: Complex64, x: &State) {
    y.zip_apply(x, |yi, xi| *yi += a * xi);
}

fn combo(y: &State, h: f64, coeffs: &[f64], ks: &[State]) -> State {
    let mut out = y.clone();
    for (a, k) in coeffs.iter().zip(ks) {
        if *a != 0.0 {
            add_scaled(&mut out, Complex64::new(h * a, 0.0), k);
        }
    }
    out
}

fn eval(f: &mut impl Rhs, y: &State) -> State {
    let mut out = State::zeros(y.nrows(), y.ncols());
    f.eval(y, &mut out);
    out
}

/// Stepper state carried across calls: current step-size guess.
#[derive(Clone, Debug)]
pub(crate) struct Stepper {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    h: Option<f64>,
}

impl Stepper {
    pub fn new(method: Method, abs_tol: f64, rel_tol: f64, max_step: f64) -> Self {
        Self { method, abs_tol, rel_tol, max_step, h: None }
    }

    /// Takes one accepted step from `t` without passing `t_end`; returns the
    /// new state and time.
    pub fn step(&mut self, f: &mut impl Rhs, y: &State, t: f64, t_end: f64) -> Result<(State, f64)> {
        let span = t_end - t;
        debug_assert!(span > 0.0);
        match self.method {
            Method::Rk4 { step } => {
                let h = step.min(span);
                let (y1, t1) = (rk4_step(f, y, h), if step >= span { t_end } else { t + h });
                Ok((y1, t1))
            }
            Method::Adaptive => self.dp_step(f, y, t, t_end),
        }
    }

    fn dp_step(&mut self, f: &mut impl Rhs, y: &State, t: f64, t_end: f64) -> Result<(State, f64)> {
        let span = t_end - t;
        let k1 = eval(f, y);
        let mut h = match self.h {
            Some(h) => h,
            None => {
                let (d0, d1) = (max_abs(y).max(self.abs_tol), max_abs(&k1));
                if d1 > 0.0 { 0.01 * d0 / d1 } else { span }
            }
        }
        .min(self.max_step);
        loop {
            let last = h >= span;
            let h_try = if last { span } else { h };
            if h_try <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t });
            }
            let (y5, err) = dp_trial(f, y, h_try, &k1, self.abs_tol, self.rel_tol);
            if err <= 1.0 {
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // keep the unclamped size for the next call when this step was shortened
                self.h = Some((h_try * factor).max(if last { h } else { 0.0 }).min(self.max_step));
                return Ok((y5, if last { t_end } else { t + h_try }));
            }
            h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }

    /// Integrates from `t0` exactly to `t1`.
    #[cfg(test)]
    pub fn advance(&mut self, f: &mut impl Rhs, y: State, t0: f64, t1: f64) -> Result<State> {
        let mut y = y;
        let mut t = t0;
        while t < t1 {
            let (y1, t_new) = self.step(f, &y, t, t1)?;
            y = y1;
            t = t_new;
        }
        Ok(y)
    }

    /// A single step of size `h` with no error control, used to locate events
    /// inside an already accepted step.
    pub fn fixed_step(&self, f: &mut impl Rhs, y: &State, h: f64) -> State {
        match self.method {
            Method::Rk4 { .. } => rk4_step(f, y, h),
            Method::Adaptive => {
                let k1 = eval(f, y);
                dp_trial(f, y, h, &k1, self.abs_tol, self.rel_tol).0
            }
        }
    }
}

fn max_abs(y: &State) -> f64 {
    y.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn dp_trial(f: &mut impl Rhs, y: &State, h: f64, k1: &State, atol: f64, rtol: f64) -> (State, f64) {
    let mut ks: Vec<State> = Vec::with_capacity(7);
    ks.push(k1.clone());
    for row in [&A2[..], &A3[..], &A4[..], &A5[..], &A6[..]] {
        let yi = combo(y, h, row, &ks);
        ks.push(eval(f, &yi));
    }
    let y5 = combo(y, h, &B5, &ks);
    let k7 = eval(f, &y5);
    ks.push(k7);
    let mut errv = State::zeros(y.nrows(), y.ncols());
    for (e, k) in E.iter().zip(&ks) {
        if *e != 0.0 {
            add_scaled(&mut errv, Complex64::new(h * e, 0.0), k);
        }
    }
    let err = errv
        .iter()
        .zip(y.iter().zip(y5.iter()))
        .map(|(e, (a, b))| e.norm() / (atol + rtol * a.norm().max(b.norm())))
        .fold(0.0, f64::max);
    (y5, err)
}

pub(crate) fn rk4_step(f: &mut impl Rhs, y: &State, h: f64) -> State {
    let k1 = eval(f, y);
    let k2 = eval(f, &combo(y, h, &[0.5], std::slice::from_ref(&k1)));
    let k3 = eval(f, &combo(y, h, &[0.5], std::slice::from_ref(&k2)));
    let k4 = eval(f, &combo(y, h, &[1.0], std::slice::from_ref(&k3)));
    let mut out = y.clone();
    add_scaled(&mut out, Complex64::new(h / 6.0, 0.0), &k1);
    add_scaled(&mut out, Complex64::new(h / 3.0, 0.0), &k2);
    add_scaled(&mut out, Complex64::new(h / 3.0, 0.0), &k3);
    add_scaled(&mut out, Complex64::new(h / 6.0, 0.0), &k4);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(rate: f64) -> impl FnMut(&State, &mut State) {
        move |y: &State, out: &mut State| add_scaled(out, Complex64::new(-rate, 0.0), y)
    }

    #[test]
    fn adaptive_exponential() {
        let mut s = Stepper::new(Method::Adaptive, 1e-12, 1e-10, f64::INFINITY);
        let y0 = State::from_element(1, 1, Complex64::new(1.0, 0.0));
        let y = s.advance(&mut decay(2.0), y0, 0.0, 1.5).unwrap();
        assert!((y[(0, 0)].re - (-3.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn rk4_fourth_order() {
        let y0 = State::from_element(1, 1, Complex64::new(1.0, 0.0));
        let err = |h: f64| {
            let mut s = Stepper::new(Method::Rk4 { step: h }, 1.0, 1.0, f64::INFINITY);
            let y = s.advance(&mut decay(1.0), y0.clone(), 0.0, 1.0).unwrap();
            (y[(0, 0)].re - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.5, "ratio {ratio}");
    }

    #[test]
    fn rotation_preserves_norm() {
        // y' = -i y
        let mut f = |y: &State, out: &mut State| add_scaled(out, Complex64::new(0.0, -1.0), y);
        let mut s = Stepper::new(Method::Adaptive, 1e-12, 1e-12, 0.5);
        let y = s.advance(&mut f, State::from_element(1, 1, Complex64::new(1.0, 0.0)), 0.0, 10.0).unwrap();
        assert!((y[(0, 0)] - Complex64::new(10f64.cos(), -10f64.sin())).norm() < 1e-9);
    }
}
