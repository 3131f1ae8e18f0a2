//! Linearly implicit BDF time stepping of the coupled system
//!
//! ```text
//! K(x~) v = g(x~, u~)
//! M(x~, u~) du/dt + A(x~) u = f(x~, u~)
//! dx/dt = v
//! ```
//!
//! where `x~`, `u~` are extrapolated from the previous `q` levels. Each step solves one
//! `N x N` system with `K = M + A` per velocity component and one with
//! `(delta_0 / tau) M(x~, u~) + A` per component of `u = (nu, V)`.

mod bdf;
mod solver;

use std::collections::{BTreeMap, VecDeque};

use log::debug;
use rayon::prelude::*;

pub use bdf::{bdf_coefficients, BdfScheme, MAX_ORDER};
pub use solver::{solve_spd, CgReport, CgSettings, DEFAULT_CG_MAX_ITER, DEFAULT_CG_TOL};

use crate::assembly::{FeSpace, FieldVector, SparseSpd};
use crate::error::{Error, Result};
use crate::flow::FlowLaw;
use crate::mesh::{unflatten_nodes, SurfaceMesh};

/// One time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub time: f64,
    /// Positions, 3 components.
    pub x: FieldVector,
    /// Velocity, 3 components.
    pub v: FieldVector,
    /// `(nu, V)`, 4 components.
    pub u: FieldVector,
}

impl State {
    pub fn num_nodes(&self) -> usize {
        self.x.num_nodes()
    }

    pub fn mesh(&self, template: &SurfaceMesh) -> Result<SurfaceMesh> {
        template.with_nodes(self.x.to_points())
    }

    /// Nodal normal velocities `V_j`.
    pub fn normal_velocity(&self) -> &[f64] {
        self.u.component(3)
    }

    pub fn check_finite(&self) -> Result<()> {
        let n = self.num_nodes();
        for (name, field) in [("x", &self.x), ("v", &self.v), ("u", &self.u)] {
            if let Some(k) = field.as_slice().iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidState {
                    node: k % n,
                    reason: format!("non-finite entry in {name}"),
                });
            }
        }
        Ok(())
    }
}

/// The last `q` time levels, newest first, with the step size.
#[derive(Debug, Clone)]
pub struct History {
    levels: VecDeque<State>,
    tau: f64,
    capacity: usize,
}

impl History {
    pub fn new(q: usize, tau: f64) -> Self {
        Self {
            levels: VecDeque::with_capacity(q),
            tau,
            capacity: q,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn order(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.levels.len() == self.capacity
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Newest level.
    pub fn latest(&self) -> Option<&State> {
        self.levels.front()
    }

    /// `levels()[j]` is `y^{n-1-j}`.
    pub fn levels(&self) -> impl Iterator<Item = &State> {
        self.levels.iter()
    }

    /// Append a newer level, dropping the oldest when full.
    pub fn push(&mut self, state: State) -> Result<()> {
        if let Some(last) = self.levels.front() {
            if state.num_nodes() != last.num_nodes() {
                return Err(Error::DimensionMismatch {
                    expected: last.num_nodes(),
                    got: state.num_nodes(),
                });
            }
            if !(state.time > last.time) {
                return Err(Error::InvalidState {
                    node: 0,
                    reason: format!("level at t = {} is not newer than t = {}", state.time, last.time),
                });
            }
        }
        if self.levels.len() == self.capacity {
            self.levels.pop_back();
        }
        self.levels.push_front(state);
        Ok(())
    }

    /// `(x~, u~)` for the next step.
    pub fn extrapolate(&self, scheme: &BdfScheme) -> (FieldVector, FieldVector) {
        let xs: Vec<&[f64]> = self.levels.iter().map(|s| s.x.as_slice()).collect();
        let us: Vec<&[f64]> = self.levels.iter().map(|s| s.u.as_slice()).collect();
        let n = self.levels[0].num_nodes();
        (
            FieldVector::from_data(n, 3, scheme.extrapolate(&xs)).expect("layout"),
            FieldVector::from_data(n, 4, scheme.extrapolate(&us)).expect("layout"),
        )
    }
}

/// How the velocity `v` is obtained from `(nu, V)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityMode {
    /// `K v = g`, the H1 projection of `-V nu`.
    #[default]
    Ritz,
    /// Nodal interpolation `v_j = -V~_j nu~_j` of the extrapolated data.
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperOptions {
    pub cg: CgSettings,
    pub velocity: VelocityMode,
    /// Use `M(x~)` in place of `M(x~, u~)`.
    pub plain_mass: bool,
}

impl Default for StepperOptions {
    fn default() -> Self {
        Self {
            cg: CgSettings::default(),
            velocity: VelocityMode::Ritz,
            plain_mass: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    /// Nodal `V` values outside the admissible image (truncated).
    pub clamped: usize,
    pub cg_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartupMode {
    /// Lower-order steps with smaller step sizes.
    #[default]
    Bootstrap,
    /// Starting levels from a closed-form solution.
    Exact,
}

/// Time stepper bound to one topology and flow.
#[derive(Debug, Clone)]
pub struct Stepper {
    space: FeSpace,
    flow: FlowLaw,
    options: StepperOptions,
}

impl Stepper {
    pub fn new(space: FeSpace, flow: FlowLaw, options: StepperOptions) -> Self {
        Self {
            space,
            flow,
            options,
        }
    }

    pub fn space(&self) -> &FeSpace {
        &self.space
    }

    pub fn flow(&self) -> &FlowLaw {
        &self.flow
    }

    pub fn options(&self) -> &StepperOptions {
        &self.options
    }

    /// Advance `history` by one step of order `history.order()` and push the new level.
    pub fn step(&self, history: &mut History) -> Result<StepReport> {
        if !history.is_full() {
            return Err(Error::InvalidState {
                node: 0,
                reason: format!("history holds {} of {} levels", history.len(), history.order()),
            });
        }
        let scheme = BdfScheme::new(history.order())?;
        let (state, report) = self.step_levels(&scheme, history.levels().collect::<Vec<_>>().as_slice(), history.tau())?;
        history.push(state)?;
        Ok(report)
    }

    /// One step from explicit previous levels (newest first).
    fn velocity_from(
        &self,
        mass: &SparseSpd,
        stiffness: &SparseSpd,
        g: &[f64],
        u: &FieldVector,
        guess: &[f64],
    ) -> Result<(Vec<f64>, usize)> {
        let n = u.num_nodes();
        match self.options.velocity {
            VelocityMode::Ritz => {
                let k = mass.linear_combination(1.0, stiffness, 1.0)?;
                self.solve_blocks(&k, g, Some(guess), 3)
            }
            VelocityMode::Pointwise => {
                let mut v = vec![0.0; 3 * n];
                for j in 0..n {
                    let vj = -u.get(j, 3);
                    for l in 0..3 {
                        v[l * n + j] = vj * u.get(j, l);
                    }
                }
                Ok((v, 0))
            }
        }
    }

    /// Velocity of `state` recomputed from its own surface and `(nu, V)`.
    pub fn velocity_at(&self, state: &State) -> Result<FieldVector> {
        let nodes = state.x.to_points();
        let (mass, stiffness) = self.space.assemble_mass_stiffness(&nodes)?;
        let g = self.space.assemble_g(&nodes, &state.u)?;
        let (v, _) = self.velocity_from(&mass, &stiffness, g.as_slice(), &state.u, state.v.as_slice())?;
        FieldVector::from_data(state.num_nodes(), 3, v)
    }

    pub fn step_levels(&self, scheme: &BdfScheme, previous: &[&State], tau: f64) -> Result<(State, StepReport)> {
        let q = scheme.order();
        if previous.len() < q {
            return Err(Error::InvalidState {
                node: 0,
                reason: format!("{} previous levels for a {q}-step scheme", previous.len()),
            });
        }
        let previous = &previous[..q];
        let n = previous[0].num_nodes();
        let xs: Vec<&[f64]> = previous.iter().map(|s| s.x.as_slice()).collect();
        let us: Vec<&[f64]> = previous.iter().map(|s| s.u.as_slice()).collect();
        let x_tilde = scheme.extrapolate(&xs);
        let u_tilde = FieldVector::from_data(n, 4, scheme.extrapolate(&us))?;
        let nodes = unflatten_nodes(&x_tilde);

        let sys = self.space.assemble_system(&nodes, &u_tilde, &self.flow)?;
        let weighted = if self.options.plain_mass {
            &sys.mass
        } else {
            &sys.weighted_mass
        };
        let mut iterations = 0;

        let (v, it) = self.velocity_from(&sys.mass, &sys.stiffness, sys.g.as_slice(), &u_tilde, previous[0].v.as_slice())?;
        iterations += it;

        let delta = scheme.delta();
        let b = weighted.linear_combination(delta[0] / tau, &sys.stiffness, 1.0)?;
        let hist = scheme.history_sum(&us);
        let mut rhs = sys.f.into_vec();
        for l in 0..4 {
            let block = &hist[l * n..(l + 1) * n];
            let mh = weighted.apply(block);
            for (r, m) in rhs[l * n..(l + 1) * n].iter_mut().zip(&mh) {
                *r -= m / tau;
            }
        }
        let (mut u, it) = self.solve_blocks(&b, &rhs, Some(u_tilde.as_slice()), 4)?;
        iterations += it;

        let x = scheme.advance(tau, &v, &xs);

        let clamped = self.flow.clamp_report(&u[3 * n..]);
        if clamped > 0 {
            debug!("truncated {clamped} nodal values of V at t = {}", previous[0].time + tau);
        }
        for w in &mut u[3 * n..] {
            *w = self.flow.clamp_v(*w);
        }

        let state = State {
            time: previous[0].time + tau,
            x: FieldVector::from_data(n, 3, x)?,
            v: FieldVector::from_data(n, 3, v)?,
            u: FieldVector::from_data(n, 4, u)?,
        };
        state.check_finite()?;
        Ok((
            state,
            StepReport {
                clamped,
                cg_iterations: iterations,
            },
        ))
    }

    /// Solve `matrix y_l = rhs_l` for each of `blocks` components, in parallel.
    fn solve_blocks(
        &self,
        matrix: &SparseSpd,
        rhs: &[f64],
        guess: Option<&[f64]>,
        blocks: usize,
    ) -> Result<(Vec<f64>, usize)> {
        let n = matrix.dim();
        let results: Vec<(Vec<f64>, CgReport)> = (0..blocks)
            .into_par_iter()
            .map(|l| {
                let g = guess.map(|g| &g[l * n..(l + 1) * n]);
                solve_spd(matrix, &rhs[l * n..(l + 1) * n], g, self.options.cg)
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(blocks * n);
        let mut iterations = 0;
        for (y, r) in results {
            out.extend(y);
            iterations += r.iterations;
        }
        Ok((out, iterations))
    }

    /// Fill a history of order `q` from the initial state.
    ///
    /// [`StartupMode::Bootstrap`]: level `i` is computed by the order-`i` scheme using
    /// `2^{q-i}` substeps per step, with its own starting levels re-sampled from the
    /// finer runs of the lower orders. [`StartupMode::Exact`]: levels come from `exact`.
    pub fn startup(
        &self,
        initial: State,
        q: usize,
        tau: f64,
        mode: StartupMode,
        exact: Option<&dyn Fn(f64) -> Result<State>>,
    ) -> Result<History> {
        BdfScheme::new(q)?;
        let mut history = History::new(q, tau);
        let t0 = initial.time;
        match mode {
            StartupMode::Exact => {
                let exact = exact.ok_or_else(|| {
                    Error::Unsupported("exact startup needs a closed-form solution".into())
                })?;
                history.push(initial)?;
                for i in 1..q {
                    history.push(exact(t0 + i as f64 * tau)?)?;
                }
            }
            StartupMode::Bootstrap => {
                // states indexed by multiples of the finest step tau / 2^{q-1}
                let fine = 1usize << (q - 1);
                let h = tau / fine as f64;
                let mut states: BTreeMap<usize, State> = BTreeMap::new();
                states.insert(0, initial);
                for order in 1..q {
                    let stride = 1usize << (order - 1);
                    let scheme = BdfScheme::new(order)?;
                    let mut run: Vec<State> = (0..order)
                        .rev()
                        .map(|j| {
                            states.get(&(j * stride)).cloned().ok_or_else(|| Error::InvalidState {
                                node: 0,
                                reason: format!("missing startup level at fine index {}", j * stride),
                            })
                        })
                        .collect::<Result<_>>()?;
                    let mut index = (order - 1) * stride;
                    while index < order * fine {
                        let (next, _) = self.step_levels(&scheme, &run.iter().collect::<Vec<_>>(), stride as f64 * h)?;
                        index += stride;
                        states.entry(index).or_insert_with(|| next.clone());
                        run.pop();
                        run.insert(0, next);
                    }
                }
                for i in 0..q {
                    let mut s = states.remove(&(i * fine)).expect("startup level computed");
                    s.time = t0 + i as f64 * tau;
                    // lower-order rungs store the velocity of the extrapolated surface
                    if i > 0 {
                        s.v = self.velocity_at(&s)?;
                    }
                    history.push(s)?;
                }
            }
        }
        Ok(history)
    }
}
