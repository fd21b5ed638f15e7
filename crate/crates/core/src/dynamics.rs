//! Trajectories and limits of the consensus protocols.
//!
//! Continuous protocols are evaluated through `exp(-M t)`; [`simulate_ode`]
//! integrates the same system with classical Runge-Kutta as a cross-check.
//! Discrete protocols iterate `y(k) = P y(k-1)` and keep running Cesàro
//! averages alongside.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::laplacian::LaplacianSystem;
use crate::matrix::{Matrix, Vector};
use crate::projection::ProjectionBundle;
use crate::scalar::{Backend, Scalar};

pub const CONVERGENCE_TOL: f64 = 1e-10;
pub const CONVERGENCE_WINDOW: usize = 10;
pub const CONSENSUS_TOL: f64 = 1e-8;
/// Largest orbit period recognised by [`degroot_iterate`].
pub const MAX_PERIOD: usize = 64;
pub const ODE_STEP_CAP: u64 = 10_000_000;
/// Default continuous grid ends at `2^16 tau`.
pub const GRID_DOUBLINGS: u32 = 16;
/// Recorded points of an ODE run, besides the final one.
const ODE_RECORDED_POINTS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    /// `x' = -L x`.
    BasicContinuous,
    /// `x' = -L x` from `S x(0)`.
    ProjectedContinuous,
    /// `x' = -L~ x`.
    LTildeContinuous,
    /// `y(k) = P^k y(0)`.
    DeGroot,
    /// `y(k) = P^k S y(0)`.
    DeGrootProjected,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::BasicContinuous,
        ProtocolKind::ProjectedContinuous,
        ProtocolKind::LTildeContinuous,
        ProtocolKind::DeGroot,
        ProtocolKind::DeGrootProjected,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::BasicContinuous => "basic",
            ProtocolKind::ProjectedContinuous => "projected",
            ProtocolKind::LTildeContinuous => "ltilde",
            ProtocolKind::DeGroot => "degroot",
            ProtocolKind::DeGrootProjected => "degroot-proj",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, ProtocolKind::DeGroot | ProtocolKind::DeGrootProjected)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown protocol '{s}'")))
    }
}

/// Stopping and consensus tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Step-to-step change below which a trajectory counts as converged.
    pub convergence: f64,
    /// Consecutive discrete steps that must all stay below `convergence`.
    pub window: usize,
    /// Largest `max - min` of a limit that still counts as consensus.
    pub consensus: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            convergence: CONVERGENCE_TOL,
            window: CONVERGENCE_WINDOW,
            consensus: CONSENSUS_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace<T: Scalar> {
    pub kind: ProtocolKind,
    /// Times for continuous runs, step indices for discrete ones.
    pub times: Vec<f64>,
    pub states: Vec<Vector<T>>,
    pub converged: bool,
    pub limit: Vector<T>,
    pub consensus: bool,
    pub consensus_tol: f64,
    /// Running averages `(1/k) sum_{i=1..k} y(i)`, with `y(0)` at `k = 0`.
    pub cesaro_states: Option<Vec<Vector<T>>>,
    pub cesaro_converged: Option<bool>,
    /// Numerical period of a non-convergent discrete orbit.
    pub period: Option<usize>,
}

impl<T: Scalar> SimulationTrace<T> {
    pub fn n(&self) -> usize {
        self.limit.len()
    }

    pub fn final_state(&self) -> &Vector<T> {
        self.states.last().expect("traces are never empty")
    }

    pub fn to_f64(&self) -> SimulationTrace<f64> {
        SimulationTrace {
            kind: self.kind,
            times: self.times.clone(),
            states: self.states.iter().map(Vector::to_f64).collect(),
            converged: self.converged,
            limit: self.limit.to_f64(),
            consensus: self.consensus,
            consensus_tol: self.consensus_tol,
            cesaro_states: self
                .cesaro_states
                .as_ref()
                .map(|c| c.iter().map(Vector::to_f64).collect()),
            cesaro_converged: self.cesaro_converged,
            period: self.period,
        }
    }
}

/// `0, tau, 2 tau, 4 tau, ...` up to `t_max` (included), or up to
/// `2^16 tau` without a bound.
pub fn default_time_grid(tau: f64, t_max: Option<f64>) -> Vec<f64> {
    let end = t_max.unwrap_or(tau * 2f64.powi(GRID_DOUBLINGS as i32));
    let mut times = vec![0.0];
    let mut t = tau;
    while t < end {
        times.push(t);
        t *= 2.0;
    }
    if end > 0.0 {
        times.push(end);
    }
    times
}

pub fn simulate_continuous(
    m: &Matrix<f64>,
    x0: &Vector<f64>,
    times: &[f64],
) -> Result<SimulationTrace<f64>> {
    simulate_continuous_with(m, x0, times, &Tolerances::default())
}

/// States `exp(-M t_i) x0` on the given grid. Converged when the last two
/// checkpoints differ by less than the convergence tolerance.
pub fn simulate_continuous_with(
    m: &Matrix<f64>,
    x0: &Vector<f64>,
    times: &[f64],
    tol: &Tolerances,
) -> Result<SimulationTrace<f64>> {
    check_conformable(m, x0)?;
    if times.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "times must be non-negative and strictly increasing".into(),
        ));
    }
    let generator = m.scale(&-1.0);
    let states = times
        .iter()
        .map(|&t| generator.exp_scaled(t)?.mul_vec(x0))
        .collect::<Result<Vec<_>>>()?;
    let converged = match states.as_slice() {
        [.., prev, last] => last.max_abs_diff(prev) < tol.convergence,
        _ => false,
    };
    let limit = states.last().cloned().expect("non-empty grid");
    Ok(finish(
        ProtocolKind::BasicContinuous,
        times.to_vec(),
        states,
        converged,
        limit,
        tol,
    ))
}

pub fn simulate_ode(
    m: &Matrix<f64>,
    x0: &Vector<f64>,
    t_max: f64,
    dt: f64,
) -> Result<SimulationTrace<f64>> {
    simulate_ode_with(m, x0, t_max, dt, &Tolerances::default())
}

/// Classical fourth-order Runge-Kutta for `x' = -M x`. About a thousand
/// evenly spaced states are recorded, plus the final one. Converged when
/// `||M x(t_max)||` is below the convergence tolerance.
pub fn simulate_ode_with(
    m: &Matrix<f64>,
    x0: &Vector<f64>,
    t_max: f64,
    dt: f64,
    tol: &Tolerances,
) -> Result<SimulationTrace<f64>> {
    check_conformable(m, x0)?;
    if !(dt > 0.0 && t_max >= dt && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dt <= t_max, got dt = {dt}, t_max = {t_max}"
        )));
    }
    let steps = (t_max / dt).ceil() as u64;
    if steps > ODE_STEP_CAP {
        return Err(Error::StepLimit {
            steps,
            limit: ODE_STEP_CAP,
        });
    }
    let stride = steps.div_ceil(ODE_RECORDED_POINTS).max(1);
    let rhs = |x: &Vector<f64>| -> Result<Vector<f64>> { Ok(m.mul_vec(x)?.scale(&-1.0)) };

    let mut x = x0.clone();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    for step in 1..=steps {
        let h = if step == steps { t_max - t } else { dt };
        let k1 = rhs(&x)?;
        let k2 = rhs(&x.add(&k1.scale(&(h / 2.0))))?;
        let k3 = rhs(&x.add(&k2.scale(&(h / 2.0))))?;
        let k4 = rhs(&x.add(&k3.scale(&h)))?;
        let incr = k1.add(&k2.scale(&2.0)).add(&k3.scale(&2.0)).add(&k4);
        x = x.add(&incr.scale(&(h / 6.0)));
        t = if step == steps {
            t_max
        } else {
            step as f64 * dt
        };
        if step % stride == 0 || step == steps {
            times.push(t);
            states.push(x.clone());
        }
    }
    let converged = m.mul_vec(&x)?.norm_inf() < tol.convergence;
    Ok(finish(
        ProtocolKind::BasicContinuous,
        times,
        states,
        converged,
        x,
        tol,
    ))
}

pub fn degroot_iterate<T: Scalar>(
    p: &Matrix<T>,
    y0: &Vector<T>,
    k_max: usize,
) -> Result<SimulationTrace<T>> {
    degroot_iterate_with(p, y0, k_max, &Tolerances::default())
}

/// Iterates `y(k) = P y(k-1)` for at most `k_max` steps.
///
/// Stops early once every step of the last `window` changed `y` by less
/// than the tolerance, or once the orbit is numerically periodic: some
/// `s <= 64` with `||y(k) - y(k-s)||` below tolerance over the window. For a
/// periodic orbit the Cesàro limit is the mean over one period, and the trace
/// is extended to end on a multiple of the period. Otherwise the
/// limit is the last state (converged) or the last running average.
pub fn degroot_iterate_with<T: Scalar>(
    p: &Matrix<T>,
    y0: &Vector<T>,
    k_max: usize,
    tol: &Tolerances,
) -> Result<SimulationTrace<T>> {
    check_conformable(p, y0)?;
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let window = tol.window.max(1);
    let mut states = vec![y0.clone()];
    let mut cesaro = vec![y0.clone()];
    let mut sum = y0.scale(&T::zero());
    let mut converged = false;
    let mut period = None;
    let advance =
        |states: &mut Vec<Vector<T>>, cesaro: &mut Vec<Vector<T>>, sum: &mut Vector<T>| {
            let k = states.len();
            let next = p.mul_vec(&states[k - 1])?;
            *sum = sum.add(&next);
            cesaro.push(sum.scale(&(T::one() / T::from_i64(k as i64))));
            states.push(next);
            Ok::<_, Error>(())
        };
    for k in 1..=k_max {
        advance(&mut states, &mut cesaro, &mut sum)?;
        if k < window {
            continue;
        }
        if let Some(s) = detect_period(&states, window, tol.convergence) {
            converged = s == 1;
            period = (s > 1).then_some(s);
            break;
        }
    }
    // End on a whole number of periods so the last running average is the
    // period mean whenever the orbit is periodic from the start.
    if let Some(s) = period {
        while (states.len() - 1) % s != 0 && states.len() <= k_max {
            advance(&mut states, &mut cesaro, &mut sum)?;
        }
    }
    let k_last = states.len() - 1;
    let cesaro_window_quiet = k_last >= window
        && (k_last + 1 - window..=k_last)
            .all(|k| cesaro[k].max_abs_diff(&cesaro[k - 1]) < tol.convergence);
    let limit = if converged {
        states[k_last].clone()
    } else if let Some(s) = period {
        let mut acc = states[k_last].scale(&T::zero());
        for state in &states[k_last + 1 - s..=k_last] {
            acc = acc.add(state);
        }
        acc.scale(&(T::one() / T::from_i64(s as i64)))
    } else {
        cesaro[k_last].clone()
    };
    let times = (0..=k_last).map(|k| k as f64).collect();
    let mut trace = finish(ProtocolKind::DeGroot, times, states, converged, limit, tol);
    trace.cesaro_states = Some(cesaro);
    trace.cesaro_converged = Some(converged || period.is_some() || cesaro_window_quiet);
    trace.period = period;
    Ok(trace)
}

/// Smallest `s` such that `y(k)` and `y(k-s)` agree over the last `window`
/// steps.
fn detect_period<T: Scalar>(states: &[Vector<T>], window: usize, tol: f64) -> Option<usize> {
    let k = states.len() - 1;
    (1..=MAX_PERIOD)
        .take_while(|&s| s + window <= k + 1)
        .find(|&s| (k + 1 - window..=k).all(|i| states[i].max_abs_diff(&states[i - s]) < tol))
}

/// `J S x0`, whose components all coincide.
pub fn quasi_consensus_limit<T: Scalar>(
    j: &Matrix<T>,
    s: &Matrix<T>,
    x0: &Vector<T>,
) -> Result<Vector<T>> {
    let v = j.mul_vec(&s.mul_vec(x0)?)?;
    let spread = v.spread();
    let consistent = match T::BACKEND {
        Backend::Exact => v.iter().all(|c| *c == v[0]),
        Backend::Float => spread <= CONVERGENCE_TOL,
    };
    if !consistent {
        return Err(Error::InconsistentQuasiConsensus { spread });
    }
    Ok(Vector::from(vec![v[0].clone(); v.len()]))
}

/// `max(x) - min(x) <= tol`.
pub fn consensus_check<T: Scalar>(x: &Vector<T>, tol: f64) -> bool {
    x.spread() <= tol
}

/// Horizon and tolerances for [`run_protocol`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// End of the continuous grid; defaults to `2^16 tau`.
    pub t_max: Option<f64>,
    pub k_max: usize,
    pub tolerances: Tolerances,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            t_max: None,
            k_max: 100_000,
            tolerances: Tolerances::default(),
        }
    }
}

/// Runs one protocol on an instance; `bundle` supplies `tau`, `S` and `L~`.
pub fn run_protocol<T: Scalar>(
    sys: &LaplacianSystem<T>,
    bundle: &ProjectionBundle<T>,
    kind: ProtocolKind,
    x0: &Vector<T>,
    opts: &RunOptions,
) -> Result<SimulationTrace<f64>> {
    let tol = &opts.tolerances;
    let tau = bundle.tau.to_f64();
    let times = default_time_grid(tau, opts.t_max);
    let mut trace = match kind {
        ProtocolKind::BasicContinuous => {
            simulate_continuous_with(&sys.laplacian().to_f64(), &x0.to_f64(), &times, tol)?
        }
        ProtocolKind::ProjectedContinuous => {
            let start = bundle.project(x0)?.to_f64();
            simulate_continuous_with(&sys.laplacian().to_f64(), &start, &times, tol)?
        }
        ProtocolKind::LTildeContinuous => {
            simulate_continuous_with(&bundle.l_tilde.to_f64(), &x0.to_f64(), &times, tol)?
        }
        ProtocolKind::DeGroot => {
            let p = sys.degroot_matrix(&bundle.tau)?.to_f64();
            degroot_iterate_with(&p, &x0.to_f64(), opts.k_max, tol)?
        }
        ProtocolKind::DeGrootProjected => {
            let p = sys.degroot_matrix(&bundle.tau)?.to_f64();
            let start = bundle.project(x0)?.to_f64();
            degroot_iterate_with(&p, &start, opts.k_max, tol)?
        }
    };
    trace.kind = kind;
    Ok(trace)
}

fn finish<T: Scalar>(
    kind: ProtocolKind,
    times: Vec<f64>,
    states: Vec<Vector<T>>,
    converged: bool,
    limit: Vector<T>,
    tol: &Tolerances,
) -> SimulationTrace<T> {
    SimulationTrace {
        kind,
        times,
        states,
        converged,
        consensus: consensus_check(&limit, tol.consensus),
        limit,
        consensus_tol: tol.consensus,
        cesaro_states: None,
        cesaro_converged: None,
        period: None,
    }
}

fn check_conformable<T: Scalar>(m: &Matrix<T>, x: &Vector<T>) -> Result<()> {
    if !m.is_square() || m.cols() != x.len() {
        return Err(Error::DimensionMismatch {
            op: "protocol",
            left: m.shape(),
            right: (x.len(), 1),
        });
    }
    Ok(())
}
