//! Dormand–Prince 5(4) with PI step-size control and continuous output.

use thiserror::Error;

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// `0` selects the starting step automatically.
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            initial_step: 0.0,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64, y: Vec<f64> },
    #[error("maximum number of steps ({steps}) reached at t = {t}")]
    MaxSteps { t: f64, steps: usize, y: Vec<f64> },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64, y: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Continuous extension over the last accepted step.
pub struct Dense<'a> {
    t_old: f64,
    h: f64,
    rcont: &'a [Vec<f64>; 5],
}

impl Dense<'_> {
    pub fn t_old(&self) -> f64 {
        self.t_old
    }

    pub fn t_new(&self) -> f64 {
        self.t_old + self.h
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let s = (t - self.t_old) / self.h;
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = self.rcont;
        (0..r1.len())
            .map(|i| r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i]))))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub t: f64,
    pub y: Vec<f64>,
    pub stopped: bool,
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

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], opts: &OdeOptions) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
            (e / sk).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], span: f64, opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let sk: Vec<f64> = y.iter().map(|v| opts.abs_tol + opts.rel_tol * v.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        (v.iter().zip(&sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let dnf = rms(f0);
    let dny = rms(y);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * dny / dnf
    };
    h = h.min(opts.max_step).min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h * b).collect();
    let mut f1 = vec![0.0; n];
    f(t + h, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let der2 = rms(&diff) / h;
    let der = der2.max(dnf);
    let h1 = if der <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der).powf(0.2)
    };
    (100.0 * h).min(h1).min(opts.max_step).min(span)
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`. `on_step` runs after every
/// accepted step with the new time, the new state and the continuous
/// extension over the step.
pub fn integrate<F, C>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    mut on_step: C,
) -> Result<OdeStats, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    C: FnMut(f64, &[f64], &Dense<'_>) -> Control,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut stats = OdeStats {
        accepted: 0,
        rejected: 0,
        evaluations: 0,
        t,
        y: y.clone(),
        stopped: false,
    };
    if t_end <= t0 {
        return Ok(stats);
    }
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut rcont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);

    f(t, &y, &mut k1);
    stats.evaluations += 1;
    let mut h = if opts.initial_step > 0.0 {
        opts.initial_step.min(t_end - t)
    } else {
        stats.evaluations += 1;
        initial_step(&mut f, t, &y, &k1, t_end - t, opts)
    };
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeError::MaxSteps {
                t,
                steps: opts.max_steps,
                y,
            });
        }
        if 0.1 * h.abs() <= t.abs() * f64::EPSILON || h < f64::MIN_POSITIVE {
            return Err(OdeError::StepUnderflow { t, h, y });
        }
        let last = t + 1.01 * h >= t_end;
        if last {
            h = t_end - t;
        }

        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ys, &mut k2);
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ys, &mut k3);
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ys, &mut k4);
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ys, &mut k5);
        for i in 0..n {
            ys[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ys, &mut k6);
        for i in 0..n {
            y1[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &y1, &mut k7);
        stats.evaluations += 6;
        for i in 0..n {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&err, &y, &y1, opts);
        if !e.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            if h.abs() <= t.abs().max(1.0) * 1e-12 {
                return Err(OdeError::NonFinite { t, y });
            }
            h *= FAC_MIN;
            last_rejected = true;
            stats.rejected += 1;
            continue;
        }

        let fac11 = e.powf(0.2 - BETA * 0.75);
        if e <= 1.0 {
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            fac_old = e.max(1e-4);
            for i in 0..n {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let t_old = t;
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            stats.accepted += 1;
            let dense = Dense {
                t_old,
                h,
                rcont: &rcont,
            };
            if on_step(t, &y, &dense) == Control::Stop {
                stats.stopped = true;
                break;
            }
            if last {
                break;
            }
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new.min(opts.max_step);
            last_rejected = false;
        } else {
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            last_rejected = true;
            stats.rejected += 1;
        }
    }
    stats.t = t;
    stats.y = y;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = OdeOptions::default();
        let stats = integrate(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            &[1.0],
            5.0,
            &opts,
            |_, _, _| Control::Continue,
        )
        .unwrap();
        assert_eq!(stats.t, 5.0);
        assert!((stats.y[0] - (-5.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn dense_output_is_accurate() {
        let opts = OdeOptions::default();
        let mut worst = 0.0f64;
        integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            10.0,
            &opts,
            |_, _, dense| {
                for k in 1..10 {
                    let t = dense.t_old() + (dense.t_new() - dense.t_old()) * k as f64 / 10.0;
                    let y = dense.eval(t);
                    worst = worst.max((y[0] - t.sin()).abs()).max((y[1] - t.cos()).abs());
                }
                Control::Continue
            },
        )
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn stop_from_callback() {
        let opts = OdeOptions::default();
        let stats = integrate(
            |_, _, dy| dy[0] = 1.0,
            0.0,
            &[0.0],
            100.0,
            &opts,
            |t, _, _| if t > 1.0 { Control::Stop } else { Control::Continue },
        )
        .unwrap();
        assert!(stats.stopped);
        assert!(stats.t > 1.0 && stats.t < 100.0);
    }

    #[test]
    fn finite_time_blow_up_underflows() {
        let opts = OdeOptions::default();
        let r = integrate(
            |_, y, dy| dy[0] = y[0] * y[0],
            0.0,
            &[1.0],
            2.0,
            &opts,
            |_, _, _| Control::Continue,
        );
        assert!(matches!(
            r,
            Err(OdeError::StepUnderflow { .. } | OdeError::NonFinite { .. })
        ));
    }
}
