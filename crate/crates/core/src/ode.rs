//! Adaptive Dormand-Prince 5(4) integrator with continuous output, for
//! systems of fixed dimension `N`. Integrates in either direction.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.r;
        std::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])))
        })
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` to `t1` (either side of `t0`).
/// `guard` is called on every accepted state and may abort the run.
/// Returns the accepted steps in order of integration.
pub fn integrate<const N: usize, F, G>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: OdeOptions,
    mut guard: G,
) -> Result<Vec<DenseStep<N>>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: FnMut(f64, &[f64; N]) -> Result<()>,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut steps = Vec::new();
    if span == 0.0 {
        return Ok(steps);
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = dir * (span * 1e-3).min(1e-2);
    let mut prev_err = 1e-4f64;
    for _ in 0..opts.max_steps {
        if (t1 - t) * dir <= 0.0 {
            return Ok(steps);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y_new);

        let mut err = 0.0f64;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();

        if err <= 1.0 {
            let mut r = [[0.0; N]; 5];
            for i in 0..N {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                r[0][i] = y[i];
                r[1][i] = dy;
                r[2][i] = bspl;
                r[3][i] = dy - h * k7[i] - bspl;
                r[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            steps.push(DenseStep { t0: t, h, r });
            t += h;
            y = y_new;
            k1 = k7;
            guard(t, &y)?;
            // PI step-size control
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.7 / 5.0) * prev_err.powf(0.4 / 5.0)).clamp(0.2, 5.0)
            };
            prev_err = err.max(1e-4);
            h *= fac;
        } else {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.1
            };
            h *= fac;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::OdeBlowup { s: t, q: y[0] });
        }
    }
    Err(Error::OdeBlowup { s: t, q: y[0] })
}

/// Evaluates a piecewise dense solution at `t`, which must lie in the
/// integrated range.
pub fn dense_eval<const N: usize>(steps: &[DenseStep<N>], t: f64) -> Option<[f64; N]> {
    let inside = |s: &DenseStep<N>| {
        let (a, b) = (s.t0.min(s.t1()), s.t0.max(s.t1()));
        t >= a && t <= b
    };
    let forward = steps.first().map(|s| s.h > 0.0)?;
    let idx = steps.partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
    steps.get(idx).filter(|s| inside(s)).map(|s| s.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_guard<const N: usize>(_: f64, _: &[f64; N]) -> Result<()> {
        Ok(())
    }

    #[test]
    fn exponential_growth_forward() {
        let steps = integrate(
            |_, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            2.0,
            OdeOptions::default(),
            no_guard,
        )
        .unwrap();
        let end = steps.last().unwrap();
        assert_eq!(end.t1(), 2.0);
        let y = end.eval(2.0)[0];
        assert!((y - 2f64.exp()).abs() < 1e-11 * 2f64.exp(), "{y}");
        for t in [0.1, 0.77, 1.5, 1.999] {
            let y = dense_eval(&steps, t).unwrap()[0];
            assert!((y - t.exp()).abs() < 1e-10 * t.exp(), "t={t}: {y}");
        }
    }

    #[test]
    fn harmonic_oscillator_backward() {
        // y'' = -y with y(0)=0, y'(0)=1 gives sin t; integrate to t = -10
        let steps = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [0.0, 1.0],
            -10.0,
            OdeOptions::default(),
            no_guard,
        )
        .unwrap();
        assert!(steps.iter().all(|s| s.h < 0.0));
        for t in [-0.3, -2.5, -7.1, -10.0] {
            let y = dense_eval(&steps, t).unwrap();
            assert!((y[0] - t.sin()).abs() < 1e-10, "t={t}: {}", y[0]);
            assert!((y[1] - t.cos()).abs() < 1e-10, "t={t}: {}", y[1]);
        }
        assert!(dense_eval(&steps, 0.5).is_none());
    }

    #[test]
    fn dense_output_is_continuous_at_step_ends() {
        let steps = integrate(
            |t, y: &[f64; 1]| [-2.0 * t * y[0]],
            0.0,
            [1.0],
            3.0,
            OdeOptions::default(),
            no_guard,
        )
        .unwrap();
        for w in steps.windows(2) {
            let a = w[0].eval(w[0].t1())[0];
            let b = w[1].eval(w[1].t0)[0];
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn guard_can_abort() {
        let res = integrate(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            [1.0],
            2.0,
            OdeOptions::default(),
            |t, y: &[f64; 1]| {
                if y[0] > 1e6 {
                    Err(Error::OdeBlowup { s: t, q: y[0] })
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(res, Err(Error::OdeBlowup { .. })));
    }
}
