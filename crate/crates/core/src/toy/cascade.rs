//! The staged energy-transfer experiment: an orbit seeded near the third
//! periodic orbit slides along the heteroclinic chain, handing the mass from
//! each generation to the next, until it concentrates in generation `N - 2`.

use crate::error::{Error, Result};
use crate::ode::{Dopri5, OdeOptions, OdeSystem, StepControl, C64};
use crate::toy::dynamics::{ToyField, ToyParams, ToyTrajectory};
use crate::toy::reduce::reduce_two_generation;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug)]
pub struct CascadeConfig {
    pub delta: f64,
    /// Unit phase for the seeded unstable direction; computed from the
    /// two-generation reduction when absent.
    pub seed_direction: Option<C64>,
    /// Amplitude threshold whose first crossing defines the stage time.
    pub threshold: f64,
    /// Integrator tolerance.
    pub tol: f64,
    /// Cap on the time between consecutive stage completions, in units of
    /// `ln(1/delta)`.
    pub stage_cap_factor: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            delta: 1e-3,
            seed_direction: None,
            threshold: 0.5,
            tol: 1e-12,
            stage_cap_factor: 12.0,
        }
    }
}

/// Outcome of a cascade run.
#[derive(Clone, Debug)]
pub struct CascadeResult {
    /// First crossing time of the threshold, per generation that crossed
    /// (1-based generation index, time), ascending in time.
    pub taus: Vec<(usize, f64)>,
    /// Time and value of the `|b_(N-2)|` peak where the run stops.
    pub t_peak: f64,
    pub peak_value: f64,
    /// All `|b_j|` at the stopping time.
    pub final_abs: Vec<f64>,
    /// Max `|b_j|` over the run, per generation.
    pub peaks: Vec<f64>,
    /// For each inter-stage window `[tau_j, tau_(j+1)]`: the maximum
    /// amplitude over generations outside `{j-1, j, j+1}`.
    pub off_window_max: Vec<OffWindow>,
    pub mass_drift_rel: f64,
    pub energy_drift_rel: f64,
    pub trajectory: ToyTrajectory,
    /// Stage times recomputed at thresholds 0.4 and 0.6 (sensitivity
    /// diagnostics).
    pub taus_threshold_lo: Vec<(usize, f64)>,
    pub taus_threshold_hi: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OffWindow {
    pub stage: usize,
    pub t_from: f64,
    pub t_to: f64,
    pub max_amp: f64,
}

/// The phase of the local unstable direction: mass near generation `j` with
/// phase `theta` feeds generation `j+1` along `omega * e^{i theta}`.
pub fn unstable_phase(params: &ToyParams) -> Result<C64> {
    let h2 = params.hamiltonian_rescaled().restricted_to(&[1, 2]);
    Ok(reduce_two_generation(&h2)?.omega)
}

/// Build the seeded initial state: `|b_3|^2 = 1 - delta^2`, `b_4` at `delta`
/// along the unstable direction, every other generation at a `delta^3`
/// background.
pub fn cascade_initial_state(params: &ToyParams, cfg: &CascadeConfig) -> Result<Vec<C64>> {
    let n = params.n_gens;
    if n < 6 {
        return Err(Error::Input("cascade needs at least 6 generations".into()));
    }
    if !(0.0 < cfg.delta && cfg.delta <= 0.1) {
        return Err(Error::Input(format!("delta must lie in (0, 0.1], got {}", cfg.delta)));
    }
    let u = match cfg.seed_direction {
        Some(dir) => dir / dir.norm(),
        None => unstable_phase(params)?,
    };
    let delta = cfg.delta;
    let mut b0 = vec![C64::default(); n];
    b0[2] = C64::new((1.0 - delta * delta).sqrt(), 0.0);
    b0[3] = delta * u;
    // background phases follow the unstable-phase ladder so every handoff
    // starts with a nonzero unstable component
    let bg = delta * delta * delta;
    for j in 0..n {
        if j != 2 && j != 3 {
            let steps = j as i32 - 2;
            b0[j] = bg * u.powi(steps);
        }
    }
    Ok(b0)
}

struct FieldSys<'a>(&'a ToyField);

impl OdeSystem for FieldSys<'_> {
    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.0.eval(y, dy)
    }
    fn dim(&self) -> usize {
        self.0.n_gens()
    }
}

fn bisect_crossing(
    seg: &crate::ode::DenseSegment,
    j: usize,
    thr2: f64,
    t_lo: f64,
    t_hi: f64,
    buf: &mut [C64],
) -> f64 {
    let mut lo = t_lo.max(seg.t0);
    let mut hi = t_hi;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        seg.eval(mid, buf);
        if buf[j].norm_sqr() >= thr2 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Run the cascade until `|b_(N-2)|` peaks.
pub fn run_cascade(params: &ToyParams, cfg: &CascadeConfig) -> Result<CascadeResult> {
    let n = params.n_gens;
    let b0 = cascade_initial_state(params, cfg)?;
    let field = ToyField::new(params);
    let sys = FieldSys(&field);
    let target = n - 3; // 0-based index of generation N-2

    let thr2 = cfg.threshold * cfg.threshold;
    let lo2 = 0.4f64 * 0.4;
    let hi2 = 0.6f64 * 0.6;
    let stage_cap = cfg.stage_cap_factor * (1.0 / cfg.delta).ln().max(1.0);
    let horizon = stage_cap * (n as f64);

    let mut crossed = vec![false; n];
    let mut crossed_lo = vec![false; n];
    let mut crossed_hi = vec![false; n];
    let mut taus: Vec<(usize, f64)> = vec![(3, 0.0)];
    let mut taus_lo: Vec<(usize, f64)> = vec![(3, 0.0)];
    let mut taus_hi: Vec<(usize, f64)> = vec![(3, 0.0)];
    crossed[2] = true; // |b_3(0)| ~ 1
    crossed_lo[2] = true;
    crossed_hi[2] = true;

    let mut peaks = vec![0.0f64; n];
    for (j, p) in peaks.iter_mut().enumerate() {
        *p = b0[j].norm();
    }
    let mut run_max_target = 0.0f64;
    let mut t_peak = 0.0f64;
    let mut last_progress = 0.0f64;
    let mut prev_t = 0.0f64;
    let mut prev_y = b0.clone();
    let mut buf = vec![C64::default(); n];
    let mut stalled = None;

    let opts =
        OdeOptions { rtol: cfg.tol, atol: cfg.tol * 1e-2, store_dense: true, ..Default::default() };
    let sol = Dopri5::new(&sys, opts).solve_observed(0.0, &b0, horizon, |t, y, seg| {
        for (j, p) in peaks.iter_mut().enumerate() {
            *p = p.max(y[j].norm());
        }
        for j in 0..n {
            let was = prev_y[j].norm_sqr();
            let now = y[j].norm_sqr();
            if !crossed[j] && was < thr2 && now >= thr2 {
                let tc = bisect_crossing(seg, j, thr2, prev_t, t, &mut buf);
                crossed[j] = true;
                taus.push((j + 1, tc));
                last_progress = t;
            }
            if !crossed_lo[j] && was < lo2 && now >= lo2 {
                taus_lo.push((j + 1, bisect_crossing(seg, j, lo2, prev_t, t, &mut buf)));
                crossed_lo[j] = true;
            }
            if !crossed_hi[j] && was < hi2 && now >= hi2 {
                taus_hi.push((j + 1, bisect_crossing(seg, j, hi2, prev_t, t, &mut buf)));
                crossed_hi[j] = true;
            }
        }
        let cur = y[target].norm();
        if cur > run_max_target {
            run_max_target = cur;
            t_peak = t;
        }
        prev_t = t;
        prev_y.copy_from_slice(y);
        if crossed[target] && cur < 0.97 * run_max_target && run_max_target > cfg.threshold {
            return StepControl::Stop;
        }
        if t - last_progress > stage_cap && !crossed[target] {
            stalled = Some(taus.len());
            return StepControl::Stop;
        }
        StepControl::Continue
    })?;

    if let Some(done) = stalled {
        return Err(Error::CascadeStall {
            last_stage: done,
            msg: format!(
                "no new generation crossed {} within {:.1} time units",
                cfg.threshold, stage_cap
            ),
        });
    }
    if !crossed[target] {
        return Err(Error::CascadeStall {
            last_stage: taus.len(),
            msg: "horizon ended before the target generation peaked".into(),
        });
    }

    // state at the peak time
    let mut y_peak = vec![C64::default(); n];
    if sol.dense.is_empty() {
        y_peak = sol.ys.last().expect("nonempty").clone();
    } else {
        let idx = match sol
            .dense
            .binary_search_by(|seg| seg.t0.partial_cmp(&t_peak).expect("finite"))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        sol.dense[idx.min(sol.dense.len() - 1)].eval(t_peak, &mut y_peak);
    }

    // off-window maxima per stage window
    let stage_times: Vec<(usize, f64)> =
        taus.iter().copied().filter(|&(g, _)| (3..=n - 2).contains(&g)).collect();
    let mut off_window = Vec::new();
    for w in stage_times.windows(2) {
        let (gen_j, t_from) = w[0];
        let (_, t_to) = w[1];
        let mut max_amp = 0.0f64;
        for (t, y) in sol.ts.iter().zip(&sol.ys) {
            if *t < t_from || *t > t_to {
                continue;
            }
            for (idx, z) in y.iter().enumerate() {
                let g = idx + 1;
                if g + 1 < gen_j || g > gen_j + 1 {
                    max_amp = max_amp.max(z.norm());
                }
            }
        }
        off_window.push(OffWindow { stage: gen_j, t_from, t_to, max_amp });
    }

    let mass: Vec<f64> = sol.ys.iter().map(|y| y.iter().map(|z| z.norm_sqr()).sum()).collect();
    let energy: Vec<f64> = sol.ys.iter().map(|y| field.hamiltonian(y)).collect();
    let mass_drift_rel = mass.iter().map(|m| (m - mass[0]).abs()).fold(0.0, f64::max) / mass[0];
    let energy_drift_rel = energy.iter().map(|e| (e - energy[0]).abs()).fold(0.0, f64::max)
        / energy[0].abs().max(1e-300);

    taus.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"));
    let traj = ToyTrajectory {
        ts: sol.ts,
        states: sol.ys,
        mass,
        energy,
        mass_drift_rel,
        energy_drift_rel,
        n_steps: sol.n_steps,
        dense: sol.dense,
    };
    Ok(CascadeResult {
        taus,
        t_peak,
        peak_value: run_max_target,
        final_abs: y_peak.iter().map(|z| z.norm()).collect(),
        peaks,
        off_window_max: off_window,
        mass_drift_rel,
        energy_drift_rel,
        trajectory: traj,
        taus_threshold_lo: taus_lo,
        taus_threshold_hi: taus_hi,
    })
}

/// Stage durations `tau_(j+1) - tau_j` over the window `j = 3..N-2`.
pub fn stage_durations(res: &CascadeResult, n_gens: usize) -> Vec<f64> {
    let mut t_of = std::collections::BTreeMap::new();
    for &(g, t) in &res.taus {
        t_of.entry(g).or_insert(t);
    }
    let mut out = Vec::new();
    for g in 3..n_gens - 2 {
        if let (Some(&a), Some(&b)) = (t_of.get(&g), t_of.get(&(g + 1))) {
            out.push(b - a);
        }
    }
    out
}

/// Ordinary least squares of `y = k x + c`; returns `(k, c, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let k = sxy / sxx;
    let c = my - k * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (k, c, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_state_mass_near_one() {
        let params = ToyParams::leading(7, 2);
        let cfg = CascadeConfig { delta: 1e-3, ..Default::default() };
        let b0 = cascade_initial_state(&params, &cfg).unwrap();
        let j: f64 = b0.iter().map(|z| z.norm_sqr()).sum();
        assert!((j - 1.0).abs() < 1e-8);
        assert!((b0[2].norm_sqr() - (1.0 - 1e-6)).abs() < 1e-12);
        assert!((b0[3].norm() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_small_systems_and_bad_delta() {
        let params = ToyParams::leading(5, 2);
        assert!(cascade_initial_state(&params, &CascadeConfig::default()).is_err());
        let params = ToyParams::leading(7, 2);
        let cfg = CascadeConfig { delta: 0.5, ..Default::default() };
        assert!(cascade_initial_state(&params, &cfg).is_err());
    }
}
