use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use consensus_core::digraph::MAX_ENUMERATION_VERTICES;
use consensus_core::dynamics::{
    run_protocol, ProtocolKind, RunOptions, SimulationTrace, Tolerances,
};
use consensus_core::invariants::verify_instance;
use consensus_core::projection::ProjectionBundle;
use consensus_core::scalar::parse_rational;
use consensus_core::{Backend, LaplacianSystem, Rational, Scalar, Vector};

use crate::graph_file::GraphFile;
use crate::report::{
    self, float_value, format_float, matrix_value, scalar_value, vector_value, vertex_sets,
    AnalyzeReport, CheckEntry, Eigenvalue, MatrixSet, ProjectReport, ProtocolLimit,
    SimulateSummary, VerifyReport,
};

/// Eigenvalue parts below this (relative to `||L||_inf`) print as zero.
const EIGENVALUE_CLEANUP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum TauArg {
    Max,
    Value(Rational),
}

impl FromStr for TauArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(TauArg::Max);
        }
        parse_rational(s)
            .map(TauArg::Value)
            .map_err(|e| e.to_string())
    }
}

/// Comma-separated initial state, parsed exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState(pub Vec<Rational>);

impl FromStr for InitialState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|item| parse_rational(item).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()
            .map(InitialState)
    }
}

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Common {
    pub graph: GraphFile,
    pub force_float: bool,
    pub json: bool,
    pub tau: Option<TauArg>,
}

impl Common {
    /// Exact arithmetic unless `--float` or the graph is too large for the
    /// exact oracles.
    pub fn backend(&self) -> Backend {
        if self.force_float {
            Backend::Float
        } else if self.graph.n > MAX_ENUMERATION_VERTICES {
            eprintln!(
                "[!] warning: n = {} exceeds {MAX_ENUMERATION_VERTICES}; falling back to float arithmetic",
                self.graph.n
            );
            Backend::Float
        } else {
            Backend::Exact
        }
    }

    fn system<T: Scalar>(&self) -> Result<LaplacianSystem<T>> {
        Ok(LaplacianSystem::new(
            self.graph.digraph().dependency_matrix::<T>(),
        )?)
    }

    fn resolve_tau<T: Scalar>(&self, sys: &LaplacianSystem<T>) -> Result<T> {
        let tau = match &self.tau {
            None => sys.default_tau(),
            Some(TauArg::Max) => sys
                .tau_max()
                .cloned()
                .ok_or_else(|| anyhow!("--tau max is undefined for a graph without arcs"))?,
            Some(TauArg::Value(r)) => T::from_rational(r),
        };
        sys.check_tau(&tau)?;
        Ok(tau)
    }

    fn emit<R: serde::Serialize>(&self, report: &R, text: impl FnOnce(&R) -> String) {
        if self.json {
            println!("{}", report::to_json(report));
        } else {
            print!("{}", text(report));
        }
    }
}

fn initial_state<T: Scalar>(x0: &InitialState, n: usize) -> Result<Vector<T>> {
    if x0.0.len() != n {
        bail!(
            "--x0 has {} entries but the graph has {n} vertices",
            x0.0.len()
        );
    }
    Ok(Vector::from(
        x0.0.iter().map(T::from_rational).collect::<Vec<_>>(),
    ))
}

fn eigenvalues<T: Scalar>(sys: &LaplacianSystem<T>) -> Result<Vec<Eigenvalue>> {
    let l = sys.laplacian().to_f64();
    let cutoff = EIGENVALUE_CLEANUP * l.norm_inf().max(1.0);
    let clean = |x: f64| if x.abs() < cutoff { 0.0 } else { x };
    Ok(l.eigenvalues()?
        .into_iter()
        .map(|z| Eigenvalue {
            re: float_value(clean(z.re)),
            im: float_value(clean(z.im)),
        })
        .collect())
}

pub struct AnalyzeArgs {
    pub matrices: bool,
    pub x0: Option<InitialState>,
}

pub fn analyze(common: &Common, args: &AnalyzeArgs) -> Result<()> {
    match common.backend() {
        Backend::Exact => analyze_with::<Rational>(common, args),
        Backend::Float => analyze_with::<f64>(common, args),
    }
}

fn analyze_with<T: Scalar>(common: &Common, args: &AnalyzeArgs) -> Result<()> {
    let sys = common.system::<T>()?;
    let tau = common.resolve_tau(&sys)?;
    let structure = sys.structure();
    let j = sys.eigenprojection()?;
    let needs_bundle = args.matrices || args.x0.is_some();
    let bundle = needs_bundle
        .then(|| ProjectionBundle::new(&sys, tau.clone()))
        .transpose()?;

    let matrices = match (&bundle, args.matrices) {
        (Some(b), true) => Some(MatrixSet {
            backend: T::BACKEND.as_str(),
            laplacian: matrix_value(sys.laplacian()),
            eigenprojection: matrix_value(j),
            s: matrix_value(&b.s),
            p_tilde: matrix_value(&b.p_tilde),
            l_tilde: matrix_value(&b.l_tilde),
            quasi_consensus: matrix_value(&b.quasi_consensus),
        }),
        _ => None,
    };

    let limits = match (&bundle, &args.x0) {
        (Some(b), Some(x0)) => {
            let x0 = initial_state::<T>(x0, sys.n())?;
            let plain = j.mul_vec(&x0)?;
            let projected = b.quasi_consensus.mul_vec(&x0)?;
            let consensus_tol = Tolerances::default().consensus;
            let entries = ProtocolKind::ALL
                .iter()
                .map(|&kind| {
                    let limit = match kind {
                        ProtocolKind::BasicContinuous | ProtocolKind::DeGroot => &plain,
                        _ => &projected,
                    };
                    let consensus = if T::BACKEND.is_exact() {
                        limit.iter().all(|c| *c == limit[0])
                    } else {
                        limit.spread() <= consensus_tol
                    };
                    ProtocolLimit {
                        protocol: kind.name(),
                        limit: vector_value(limit),
                        consensus,
                    }
                })
                .collect();
            Some(entries)
        }
        _ => None,
    };

    let report = AnalyzeReport {
        n: sys.n(),
        backend: T::BACKEND.as_str(),
        components: vertex_sets(structure.components.iter().map(Vec::as_slice)),
        final_classes: vertex_sets(structure.final_class_vertices()),
        d: sys.d(),
        has_spanning_in_tree: sys.has_spanning_in_tree(),
        tau_max: sys.tau_max().map_or(serde_json::Value::Null, scalar_value),
        tau: scalar_value(&tau),
        eigenvalues: eigenvalues(&sys)?,
        eigenprojection: matrix_value(j),
        matrices,
        limits,
    };
    common.emit(&report, AnalyzeReport::to_text);
    Ok(())
}

pub fn project(common: &Common, x0: &InitialState) -> Result<()> {
    match common.backend() {
        Backend::Exact => project_with::<Rational>(common, x0),
        Backend::Float => project_with::<f64>(common, x0),
    }
}

fn project_with<T: Scalar>(common: &Common, x0: &InitialState) -> Result<()> {
    let sys = common.system::<T>()?;
    let tau = common.resolve_tau(&sys)?;
    let x0 = initial_state::<T>(x0, sys.n())?;
    let bundle = ProjectionBundle::new(&sys, tau.clone())?;
    let limit =
        consensus_core::dynamics::quasi_consensus_limit(sys.eigenprojection()?, &bundle.s, &x0)?;
    let report = ProjectReport {
        n: sys.n(),
        backend: T::BACKEND.as_str(),
        tau: scalar_value(&tau),
        s: matrix_value(&bundle.s),
        projected_x0: vector_value(&bundle.project(&x0)?),
        quasi_consensus: scalar_value(&limit[0]),
        in_consensus_domain: bundle.contains(&x0, consensus_core::invariants::IDENTITY_TOL)?,
    };
    common.emit(&report, ProjectReport::to_text);
    Ok(())
}

pub struct SimulateArgs {
    pub protocol: ProtocolKind,
    pub x0: InitialState,
    pub options: RunOptions,
    pub out: Option<PathBuf>,
}

pub fn simulate(common: &Common, args: &SimulateArgs) -> Result<()> {
    match common.backend() {
        Backend::Exact => simulate_with::<Rational>(common, args),
        Backend::Float => simulate_with::<f64>(common, args),
    }
}

fn simulate_with<T: Scalar>(common: &Common, args: &SimulateArgs) -> Result<()> {
    let sys = common.system::<T>()?;
    let tau = common.resolve_tau(&sys)?;
    let x0 = initial_state::<T>(&args.x0, sys.n())?;
    let bundle = ProjectionBundle::new(&sys, tau.clone())?;
    let trace = run_protocol(&sys, &bundle, args.protocol, &x0, &args.options)?;

    match &args.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_trace(&trace, file)?;
        }
        None => write_trace(&trace, io::stdout().lock())?,
    }

    let summary = SimulateSummary {
        protocol: args.protocol.name(),
        backend: T::BACKEND.as_str(),
        n: sys.n(),
        tau: scalar_value(&tau),
        samples: trace.states.len(),
        final_time: float_value(*trace.times.last().expect("trace has a first sample")),
        converged: trace.converged,
        limit: vector_value(&trace.limit),
        consensus: trace.consensus,
        consensus_tol: float_value(trace.consensus_tol),
        cesaro_converged: trace.cesaro_converged,
        cesaro_final: trace
            .cesaro_states
            .as_ref()
            .and_then(|c| c.last())
            .map(vector_value),
        period: trace.period,
        trace: args.out.as_ref().map(|p| p.display().to_string()),
    };
    let text = report::to_json(&summary);
    if args.out.is_some() {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
    Ok(())
}

/// CSV with header `t,x1..xn` plus `cesaro_x1..cesaro_xn` for discrete runs.
pub fn write_trace<W: Write>(trace: &SimulationTrace<f64>, sink: W) -> Result<()> {
    let n = trace.n();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    if trace.cesaro_states.is_some() {
        header.extend((1..=n).map(|i| format!("cesaro_x{i}")));
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(&header)?;
    for (k, (t, state)) in trace.times.iter().zip(&trace.states).enumerate() {
        let mut record = vec![format_float(*t)];
        record.extend(state.iter().map(|x| format_float(*x)));
        if let Some(cesaro) = &trace.cesaro_states {
            record.extend(cesaro[k].iter().map(|x| format_float(*x)));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Returns whether every check passed.
pub fn verify(common: &Common) -> Result<bool> {
    match common.backend() {
        Backend::Exact => verify_with::<Rational>(common),
        Backend::Float => verify_with::<f64>(common),
    }
}

fn verify_with<T: Scalar>(common: &Common) -> Result<bool> {
    let sys = common.system::<T>()?;
    let tau = common.resolve_tau(&sys)?;
    let digraph = common.graph.digraph();
    let oracle = (sys.n() <= MAX_ENUMERATION_VERTICES).then_some(&digraph);
    let result = verify_instance(&sys, &tau, oracle)?;
    let checks: Vec<CheckEntry> = result
        .checks
        .iter()
        .map(|c| CheckEntry {
            name: c.name,
            passed: c.passed,
            residual: float_value(c.residual),
            tolerance: float_value(c.tolerance),
            note: c.note.clone(),
        })
        .collect();
    let failed = checks.iter().filter(|c| !c.passed).count();
    let report = VerifyReport {
        n: sys.n(),
        backend: T::BACKEND.as_str(),
        tau: scalar_value(&tau),
        passed: checks.len() - failed,
        failed,
        checks,
    };
    common.emit(&report, VerifyReport::to_text);
    Ok(failed == 0)
}
