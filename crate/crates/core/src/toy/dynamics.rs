//! Time integration of the gauge-reduced, time-rescaled model
//!
//! `h(b) = J^(d-2) [ -1/4 sum |b_i|^4 + sum Re(b_i^2 conj(b_{i+1})^2) ] + tail`
//!
//! where the tail is present only when the model was derived from a concrete
//! tree (full mode). The removable gauge part `d! n^(d-1) J^d` is subtracted
//! exactly before integration and time is rescaled by `n^(d-2) d! d (d-1)`;
//! amplitudes are unchanged by either operation.

use crate::error::{Error, Result};
use crate::exact::{rat, Rat};
use crate::ode::{Dopri5, OdeOptions, OdeSystem, StepControl, C64};
use crate::toy::poly::{gauge_poly, leading_order_poly, CompiledField, ToyPoly};

/// Which Hamiltonian drives the model.
#[derive(Clone, Debug)]
pub enum ToyMode {
    /// The closed leading orders only (any number of generations).
    Leading,
    /// A concrete derived Hamiltonian (its `1/n` tail included).
    Full(ToyPoly),
}

#[derive(Clone, Debug)]
pub struct ToyParams {
    pub n_gens: usize,
    pub d: u32,
    pub mode: ToyMode,
}

impl ToyParams {
    pub fn leading(n_gens: usize, d: u32) -> Self {
        ToyParams { n_gens, d, mode: ToyMode::Leading }
    }

    pub fn full(h: ToyPoly) -> Self {
        ToyParams { n_gens: h.n_gens, d: h.d, mode: ToyMode::Full(h) }
    }

    pub fn generation_size(&self) -> i64 {
        1i64 << (self.n_gens - 1)
    }

    /// `n^(d-2) d! d (d-1)`: the exact factor between rescaled time and the
    /// time of the `n`-normalized restricted Hamiltonian.
    pub fn time_rescale_factor(&self) -> Rat {
        let n = self.generation_size();
        let d = self.d as i64;
        let mut f = rat(1);
        for i in 2..=d {
            f *= rat(i);
        }
        f * rat(d) * rat(d - 1) * Rat::from_integer(crate::exact::int(n).pow(self.d - 2))
    }

    /// The gauge-free, time-rescaled Hamiltonian as an exact polynomial.
    pub fn hamiltonian_rescaled(&self) -> ToyPoly {
        match &self.mode {
            ToyMode::Leading => {
                let n = self.generation_size();
                let lead = leading_order_poly(self.n_gens, self.d, n);
                let gauge = gauge_poly(self.n_gens, self.d, n);
                lead.sub(&gauge).scale(&self.time_rescale_factor().recip())
            }
            ToyMode::Full(h) => {
                let n = self.generation_size();
                let gauge = gauge_poly(self.n_gens, self.d, n);
                h.sub(&gauge).scale(&self.time_rescale_factor().recip())
            }
        }
    }
}

/// Evaluator for the model field and Hamiltonian.
pub enum ToyField {
    Closed { n_gens: usize, d: u32 },
    Compiled { field: CompiledField, h: ToyPoly },
}

impl ToyField {
    pub fn new(params: &ToyParams) -> Self {
        match &params.mode {
            ToyMode::Leading => ToyField::Closed { n_gens: params.n_gens, d: params.d },
            ToyMode::Full(_) => {
                let h = params.hamiltonian_rescaled();
                ToyField::Compiled { field: h.compile_field(), h }
            }
        }
    }

    pub fn n_gens(&self) -> usize {
        match self {
            ToyField::Closed { n_gens, .. } => *n_gens,
            ToyField::Compiled { field, .. } => field.n_gens,
        }
    }

    /// `db_j/dtau = 2i d h / d conj(b_j)`.
    pub fn eval(&self, b: &[C64], out: &mut [C64]) {
        match self {
            ToyField::Closed { n_gens, d } => closed_field(*n_gens, *d, b, out),
            ToyField::Compiled { field, .. } => field.eval(b, out),
        }
    }

    /// Hamiltonian value (real part; imaginary part is numerical noise).
    pub fn hamiltonian(&self, b: &[C64]) -> f64 {
        match self {
            ToyField::Closed { n_gens, d } => closed_hamiltonian(*n_gens, *d, b),
            ToyField::Compiled { h, .. } => h.eval(b).re,
        }
    }
}

/// Leading-order Hamiltonian `J^(d-2) ( -1/4 sum |b_i|^4 + sum Re(b_i^2
/// conj(b_(i+1))^2) )` evaluated directly.
pub fn closed_hamiltonian(n_gens: usize, d: u32, b: &[C64]) -> f64 {
    let j: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    let mut g = 0.0;
    for i in 0..n_gens {
        g -= 0.25 * b[i].norm_sqr() * b[i].norm_sqr();
        if i + 1 < n_gens {
            g += (b[i] * b[i] * (b[i + 1] * b[i + 1]).conj()).re;
        }
    }
    j.powi(d as i32 - 2) * g
}

fn closed_field(n_gens: usize, d: u32, b: &[C64], out: &mut [C64]) {
    let j: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    let jd2 = j.powi(d as i32 - 2);
    let two_i = C64::new(0.0, 2.0);
    let need_jterm = d > 2;
    let g = if need_jterm {
        let mut g = 0.0;
        for i in 0..n_gens {
            g -= 0.25 * b[i].norm_sqr() * b[i].norm_sqr();
            if i + 1 < n_gens {
                g += (b[i] * b[i] * (b[i + 1] * b[i + 1]).conj()).re;
            }
        }
        g
    } else {
        0.0
    };
    let jd3 = if need_jterm { j.powi(d as i32 - 3) } else { 0.0 };
    for i in 0..n_gens {
        // dG/d conj(b_i) = -1/2 |b_i|^2 b_i + conj(b_i) (b_(i-1)^2 + b_(i+1)^2)
        let mut neigh = C64::default();
        if i > 0 {
            neigh += b[i - 1] * b[i - 1];
        }
        if i + 1 < n_gens {
            neigh += b[i + 1] * b[i + 1];
        }
        let dg = -0.5 * b[i].norm_sqr() * b[i] + b[i].conj() * neigh;
        let mut df = jd2 * dg;
        if need_jterm {
            df += (d as f64 - 2.0) * jd3 * g * b[i];
        }
        out[i] = two_i * df;
    }
}

struct ToySystem<'a> {
    field: &'a ToyField,
}

impl OdeSystem for ToySystem<'_> {
    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.field.eval(y, dy);
    }
    fn dim(&self) -> usize {
        self.field.n_gens()
    }
}

/// Trajectory of the model with conservation monitors.
#[derive(Clone, Debug)]
pub struct ToyTrajectory {
    pub ts: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub mass_drift_rel: f64,
    pub energy_drift_rel: f64,
    pub n_steps: u64,
    /// Dense segments for interpolation between mesh points.
    pub dense: Vec<crate::ode::DenseSegment>,
}

impl ToyTrajectory {
    pub fn eval(&self, t: f64, out: &mut [C64]) -> Result<()> {
        let idx = match self
            .dense
            .binary_search_by(|seg| seg.t0.partial_cmp(&t).expect("finite"))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        if self.dense.is_empty() {
            return Err(Error::Input("trajectory has no dense data".into()));
        }
        let seg = &self.dense[idx.min(self.dense.len() - 1)];
        seg.eval(t, out);
        Ok(())
    }

    pub fn final_state(&self) -> &[C64] {
        self.states.last().expect("nonempty trajectory")
    }
}

/// Integrate the model from `b0` over `[0, horizon]` at tolerance `tol`.
pub fn integrate_toy(
    params: &ToyParams,
    b0: &[C64],
    horizon: f64,
    tol: f64,
) -> Result<ToyTrajectory> {
    if b0.len() != params.n_gens {
        return Err(Error::Input(format!(
            "state has {} components, model has {}",
            b0.len(),
            params.n_gens
        )));
    }
    let field = ToyField::new(params);
    integrate_field(&field, b0, horizon, tol)
}

pub(crate) fn integrate_field(
    field: &ToyField,
    b0: &[C64],
    horizon: f64,
    tol: f64,
) -> Result<ToyTrajectory> {
    let sys = ToySystem { field };
    let opts = OdeOptions { rtol: tol, atol: tol * 1e-2, store_dense: true, ..Default::default() };
    let sol = Dopri5::new(&sys, opts).solve_observed(0.0, b0, horizon, |_, _, _| {
        StepControl::Continue
    })?;

    let mass: Vec<f64> = sol.ys.iter().map(|y| y.iter().map(|z| z.norm_sqr()).sum()).collect();
    let energy: Vec<f64> = sol.ys.iter().map(|y| field.hamiltonian(y)).collect();
    let m0 = mass[0].max(f64::MIN_POSITIVE);
    let e0 = energy[0].abs().max(1e-300);
    let mass_drift_rel =
        mass.iter().map(|m| (m - mass[0]).abs()).fold(0.0, f64::max) / m0;
    let energy_drift_rel =
        energy.iter().map(|e| (e - energy[0]).abs()).fold(0.0, f64::max) / e0;
    Ok(ToyTrajectory {
        ts: sol.ts,
        states: sol.ys,
        mass,
        energy,
        mass_drift_rel,
        energy_drift_rel,
        n_steps: sol.n_steps,
        dense: sol.dense,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prototype::build_prototype;
    use crate::toy::derive::{derive_toy, DeriveBudget};
    use crate::tree::genealogical_tree;

    #[test]
    fn closed_field_matches_compiled_field_leading() {
        // the closed form and the compiled pattern field must agree on the
        // leading-order Hamiltonian
        for d in [2u32, 3] {
            let n_gens = 3;
            let params = ToyParams::leading(n_gens, d);
            let closed = ToyField::new(&params);
            let h = params.hamiltonian_rescaled();
            let compiled = h.compile_field();
            let b = [C64::new(0.5, 0.1), C64::new(-0.3, 0.8), C64::new(0.05, -0.4)];
            let mut o1 = [C64::default(); 3];
            let mut o2 = [C64::default(); 3];
            closed.eval(&b, &mut o1);
            compiled.eval(&b, &mut o2);
            for i in 0..3 {
                assert!((o1[i] - o2[i]).norm() < 1e-13, "d={d} i={i}: {o1:?} vs {o2:?}");
            }
            assert!((closed.hamiltonian(&b) - h.eval(&b).re).abs() < 1e-13);
        }
    }

    #[test]
    fn single_generation_orbit_is_periodic() {
        let params = ToyParams::leading(4, 2);
        let b0 = [
            C64::default(),
            C64::new(1.0, 0.0),
            C64::default(),
            C64::default(),
        ];
        let traj = integrate_toy(&params, &b0, 50.0, 1e-11).unwrap();
        for y in &traj.states {
            assert!((y[1].norm() - 1.0).abs() < 1e-10);
            // untouched components stay exactly zero: every field term
            // carries a factor of the component
            assert_eq!(y[0], C64::default());
            assert_eq!(y[2], C64::default());
            assert_eq!(y[3], C64::default());
        }
    }

    #[test]
    fn two_generation_subspace_invariant_and_conserved() {
        let params = ToyParams::leading(5, 2);
        let mut b0 = vec![C64::default(); 5];
        b0[1] = C64::new(0.9, 0.0);
        b0[2] = C64::new(0.1, 0.35);
        let traj = integrate_toy(&params, &b0, 100.0, 1e-10).unwrap();
        assert!(traj.mass_drift_rel <= 1e-9, "J drift {}", traj.mass_drift_rel);
        assert!(traj.energy_drift_rel <= 1e-8, "h drift {}", traj.energy_drift_rel);
        for y in &traj.states {
            assert!(y[0].norm() <= 1e-14);
            assert!(y[3].norm() <= 1e-14);
            assert!(y[4].norm() <= 1e-14);
        }
    }

    #[test]
    fn gauge_equivariance_of_field() {
        let proto = build_prototype(3).unwrap();
        let tree = genealogical_tree(&proto).unwrap();
        let h = derive_toy(&tree, 2, &DeriveBudget::default()).unwrap();
        let params = ToyParams::full(h);
        let field = ToyField::new(&params);
        let b = [C64::new(0.4, 0.2), C64::new(-0.1, 0.7), C64::new(0.3, -0.3)];
        let phi = C64::from_polar(1.0, 0.777);
        let bp: Vec<C64> = b.iter().map(|z| z * phi).collect();
        let mut f1 = [C64::default(); 3];
        let mut f2 = [C64::default(); 3];
        field.eval(&b, &mut f1);
        field.eval(&bp, &mut f2);
        for i in 0..3 {
            assert!((f2[i] - f1[i] * phi).norm() < 1e-13);
        }
    }

    #[test]
    fn full_mode_small_perturbation_of_leading() {
        // the derived model differs from the leading orders by O(1/n)
        let proto = build_prototype(3).unwrap();
        let tree = genealogical_tree(&proto).unwrap();
        let h = derive_toy(&tree, 3, &DeriveBudget::default()).unwrap();
        let full = ToyParams::full(h);
        let lead = ToyParams::leading(3, 3);
        let f_full = ToyField::new(&full);
        let f_lead = ToyField::new(&lead);
        let b = [C64::new(0.7, 0.0), C64::new(0.1, 0.1), C64::new(0.0, 0.05)];
        let mut o1 = [C64::default(); 3];
        let mut o2 = [C64::default(); 3];
        f_full.eval(&b, &mut o1);
        f_lead.eval(&b, &mut o2);
        let dev: f64 = (0..3).map(|i| (o1[i] - o2[i]).norm()).sum();
        assert!(dev > 1e-6, "full model should have a tail at d=3");
        assert!(dev < 1.0, "tail should be a perturbation, got {dev}");
    }

    #[test]
    fn neighbor_coupling_feeds_second_generation() {
        // b = (1, eps): the second component picks up 2i conj(b2) b1^2 at
        // leading order in eps
        let params = ToyParams::leading(2, 2);
        let field = ToyField::new(&params);
        let eps = C64::new(1e-4, 3e-5);
        let b = [C64::new(1.0, 0.0), eps];
        let mut out = [C64::default(); 2];
        field.eval(&b, &mut out);
        let expect = C64::new(0.0, 2.0) * eps.conj(); // 2i conj(eps) * 1^2
        assert!((out[1] - expect).norm() < 1e-7);
    }
}
