//! Adaptive Dormand-Prince 5(4) integration over complex state vectors, with
//! the standard order-4 dense interpolant for event location and trajectory
//! sampling.

use crate::error::{Error, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Right-hand side of an autonomous-or-not ODE `y' = f(t, y)`.
pub trait OdeSystem {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
    fn dim(&self) -> usize;
}

impl<F: Fn(f64, &[C64], &mut [C64])> OdeSystem for (usize, F) {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        (self.1)(t, y, dy)
    }
    fn dim(&self) -> usize {
        self.0
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output coefficients (Hairer-Norsett-Wanner CONTD5).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step's dense interpolation data.
#[derive(Clone, Debug)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    /// rcont coefficients: y(t0 + s*h) = r0 + s*(r1 + (1-s)*(r2 + s*(r3 + (1-s)*r4)))
    pub rcont: [Vec<C64>; 5],
}

impl DenseSegment {
    pub fn eval(&self, t: f64, out: &mut [C64]) {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        for (i, o) in out.iter_mut().enumerate() {
            let r4 = self.rcont[4][i];
            let r3 = self.rcont[3][i];
            let r2 = self.rcont[2][i];
            let r1 = self.rcont[1][i];
            let r0 = self.rcont[0][i];
            *o = r0 + s * (r1 + s1 * (r2 + s * (r3 + s1 * r4)));
        }
    }
}

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: u64,
    /// Keep dense segments for post-hoc interpolation.
    pub store_dense: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h_init: None, h_max: None, max_steps: 50_000_000, store_dense: false }
    }
}

impl OdeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(1e-13..=1e-6).contains(&self.rtol) {
            return Err(Error::Input(format!(
                "tolerance must lie in [1e-13, 1e-6], got {}",
                self.rtol
            )));
        }
        Ok(())
    }
}

/// Outcome of a solve: accepted-step mesh values plus optional dense data.
#[derive(Clone, Debug, Default)]
pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<C64>>,
    pub dense: Vec<DenseSegment>,
    pub n_steps: u64,
    pub n_rejected: u64,
}

impl OdeSolution {
    pub fn last(&self) -> (&f64, &Vec<C64>) {
        (self.ts.last().expect("nonempty"), self.ys.last().expect("nonempty"))
    }

    /// Evaluate via dense output; `t` must lie within the solved span.
    pub fn eval(&self, t: f64, out: &mut [C64]) -> Result<()> {
        if self.dense.is_empty() {
            return Err(Error::Input("dense output was not stored".into()));
        }
        let idx = match self
            .dense
            .binary_search_by(|seg| seg.t0.partial_cmp(&t).expect("finite times"))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let seg = &self.dense[idx.min(self.dense.len() - 1)];
        let s = (t - seg.t0) / seg.h;
        if !(-1e-9..=1.0 + 1e-9).contains(&s) {
            return Err(Error::Input(format!("time {t} outside dense span")));
        }
        seg.eval(t, out);
        Ok(())
    }
}

/// Control handed to the per-step observer.
pub enum StepControl {
    Continue,
    Stop,
}

pub struct Dopri5<'a, S: OdeSystem> {
    pub sys: &'a S,
    pub opts: OdeOptions,
}

impl<'a, S: OdeSystem> Dopri5<'a, S> {
    pub fn new(sys: &'a S, opts: OdeOptions) -> Self {
        Dopri5 { sys, opts }
    }

    /// Integrate from `(t0, y0)` to `t_end` (forward only). The observer sees
    /// every accepted step together with its dense segment and may stop the
    /// run early.
    pub fn solve_observed(
        &self,
        t0: f64,
        y0: &[C64],
        t_end: f64,
        mut observe: impl FnMut(f64, &[C64], &DenseSegment) -> StepControl,
    ) -> Result<OdeSolution> {
        self.opts.validate()?;
        assert!(t_end > t0, "forward integration only");
        let n = self.sys.dim();
        assert_eq!(y0.len(), n);

        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![C64::default(); n]).collect();
        let mut ytmp = vec![C64::default(); n];
        self.sys.rhs(t, &y, &mut k[0]);

        let mut h = self.opts.h_init.unwrap_or_else(|| self.initial_step(t, &y, &k[0]));
        let h_max = self.opts.h_max.unwrap_or(t_end - t0);

        let mut sol = OdeSolution { ts: vec![t0], ys: vec![y.clone()], ..Default::default() };
        let mut n_steps = 0u64;
        let mut n_rejected = 0u64;
        let mut facold: f64 = 1e-4;

        while t < t_end {
            if n_steps + n_rejected >= self.opts.max_steps {
                return Err(Error::Resource(format!("step budget exhausted at t = {t}")));
            }
            h = h.min(h_max).min(t_end - t);
            if h < f64::EPSILON * t.abs().max(1.0) * 16.0 {
                return Err(Error::Stiffness { at: t, msg: "step size underflow".into() });
            }

            // stages
            for i in 1..7 {
                for (j, yt) in ytmp.iter_mut().enumerate() {
                    let mut acc = C64::default();
                    for (l, kl) in k.iter().enumerate().take(i) {
                        let a = A[i][l];
                        if a != 0.0 {
                            acc += a * kl[j];
                        }
                    }
                    *yt = y[j] + h * acc;
                }
                let (head, tail) = k.split_at_mut(i);
                let _ = head;
                self.sys.rhs(t + C[i] * h, &ytmp, &mut tail[0]);
            }

            // 5th order solution (k[6] = f at the new point thanks to FSAL row)
            let mut ynew = vec![C64::default(); n];
            let mut err: f64 = 0.0;
            for j in 0..n {
                let mut acc = C64::default();
                let mut eacc = C64::default();
                for l in 0..7 {
                    if B5[l] != 0.0 {
                        acc += B5[l] * k[l][j];
                    }
                    if E[l] != 0.0 {
                        eacc += E[l] * k[l][j];
                    }
                }
                ynew[j] = y[j] + h * acc;
                let sc = self.opts.atol + self.opts.rtol * y[j].norm().max(ynew[j].norm());
                let e = (h * eacc).norm() / sc;
                err = err.max(e);
            }

            // PI step-size control
            let fac11 = err.max(1e-30).powf(0.2);
            let fac = (fac11 / facold.powf(0.08) / 0.9).clamp(1.0 / 10.0, 1.0 / 0.2);
            let h_new = h / fac;

            if err <= 1.0 {
                // accept: build dense segment
                self.sys.rhs(t + h, &ynew, &mut ytmp);
                let seg = self.dense_segment(t, h, &y, &ynew, &k, &ytmp);
                facold = err.max(1e-4);
                t += h;
                k[0].copy_from_slice(&ytmp);
                y = ynew;
                n_steps += 1;
                sol.ts.push(t);
                sol.ys.push(y.clone());
                let ctl = observe(t, &y, &seg);
                if self.opts.store_dense {
                    sol.dense.push(seg);
                }
                if matches!(ctl, StepControl::Stop) {
                    break;
                }
                h = h_new;
            } else {
                n_rejected += 1;
                h = h / fac.max(1.0);
            }
        }
        sol.n_steps = n_steps;
        sol.n_rejected = n_rejected;
        Ok(sol)
    }

    pub fn solve(&self, t0: f64, y0: &[C64], t_end: f64) -> Result<OdeSolution> {
        self.solve_observed(t0, y0, t_end, |_, _, _| StepControl::Continue)
    }

    fn dense_segment(
        &self,
        t: f64,
        h: f64,
        y: &[C64],
        ynew: &[C64],
        k: &[Vec<C64>],
        f_new: &[C64],
    ) -> DenseSegment {
        let n = y.len();
        let mut r = [
            vec![C64::default(); n],
            vec![C64::default(); n],
            vec![C64::default(); n],
            vec![C64::default(); n],
            vec![C64::default(); n],
        ];
        for j in 0..n {
            let ydiff = ynew[j] - y[j];
            let bspl = h * k[0][j] - ydiff;
            r[0][j] = y[j];
            r[1][j] = ydiff;
            r[2][j] = bspl;
            r[3][j] = ydiff - h * f_new[j] - bspl;
            let mut acc = C64::default();
            for l in 0..7 {
                let kl = if l == 6 { f_new[j] } else { k[l][j] };
                if D[l] != 0.0 {
                    acc += D[l] * kl;
                }
            }
            r[4][j] = h * acc;
        }
        DenseSegment { t0: t, h, rcont: r }
    }

    fn initial_step(&self, t0: f64, y0: &[C64], f0: &[C64]) -> f64 {
        // standard HNW starting-step heuristic
        let norm = |v: &[C64], w: &[C64]| -> f64 {
            v.iter()
                .zip(w)
                .map(|(a, b)| {
                    let sc = self.opts.atol + self.opts.rtol * b.norm();
                    (a.norm() / sc).powi(2)
                })
                .sum::<f64>()
                .sqrt()
                / (v.len() as f64).sqrt()
        };
        let d0 = norm(y0, y0);
        let d1 = norm(f0, y0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let mut y1 = y0.to_vec();
        for (i, y) in y1.iter_mut().enumerate() {
            *y += h0 * f0[i];
        }
        let mut f1 = vec![C64::default(); y0.len()];
        self.sys.rhs(t0 + h0, &y1, &mut f1);
        let mut df = f1.clone();
        for (i, d) in df.iter_mut().enumerate() {
            *d -= f0[i];
        }
        let d2 = norm(&df, y0) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sho;
    impl OdeSystem for Sho {
        fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
            // z' = i z  ->  z(t) = e^{it}
            dy[0] = C64::new(0.0, 1.0) * y[0];
        }
        fn dim(&self) -> usize {
            1
        }
    }

    #[test]
    fn exponential_rotation_is_exact_to_tolerance() {
        let sys = Sho;
        let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, store_dense: true, ..Default::default() };
        let sol = Dopri5::new(&sys, opts).solve(0.0, &[C64::new(1.0, 0.0)], 10.0).unwrap();
        let (tf, yf) = sol.last();
        assert!((yf[0] - C64::new(tf.cos(), tf.sin())).norm() < 1e-9);
        // dense output accuracy at off-mesh points
        let mut out = [C64::default()];
        for &t in &[0.1234, 1.5, 7.77, 9.999] {
            sol.eval(t, &mut out).unwrap();
            assert!((out[0] - C64::new(t.cos(), t.sin())).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn tolerance_scaling() {
        let sys = Sho;
        let run = |rtol: f64| {
            let opts = OdeOptions { rtol, atol: rtol * 1e-2, ..Default::default() };
            let sol = Dopri5::new(&sys, opts).solve(0.0, &[C64::new(1.0, 0.0)], 20.0).unwrap();
            let (tf, yf) = sol.last();
            (yf[0] - C64::new(tf.cos(), tf.sin())).norm()
        };
        let coarse = run(1e-7);
        let fine = run(1e-12);
        assert!(fine < coarse);
        assert!(fine < 1e-8);
    }

    #[test]
    fn observer_can_stop() {
        let sys = Sho;
        let sol = Dopri5::new(&sys, OdeOptions::default())
            .solve_observed(0.0, &[C64::new(1.0, 0.0)], 1000.0, |t, _, _| {
                if t > 1.0 {
                    StepControl::Stop
                } else {
                    StepControl::Continue
                }
            })
            .unwrap();
        let (tf, _) = sol.last();
        assert!(*tf < 1000.0);
    }

    #[test]
    fn tolerance_contract() {
        let opts = OdeOptions { rtol: 1e-3, ..Default::default() };
        assert!(Dopri5::new(&Sho, opts).solve(0.0, &[C64::default()], 1.0).is_err());
    }
}
