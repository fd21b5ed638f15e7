//! Named checks over one instance, each with a measured residual.
//!
//! [`verify_instance`] runs everything that applies to the instance and the
//! backend: exact equalities in the rational backend, tolerance checks in
//! floating point. The CLI `verify` command prints the result.

use num_complex::Complex64;

use crate::digraph::{forest_matrix, WeightedDigraph, MAX_ENUMERATION_VERTICES};
use crate::dynamics::{consensus_check, degroot_iterate, run_protocol, ProtocolKind, RunOptions};
use crate::error::Result;
use crate::laplacian::{cesaro_limit, LaplacianSystem};
use crate::matrix::{Matrix, Vector};
use crate::projection::{
    approximation_error, build_u_matrix, orthogonal_projection_s, representative_selections,
    ProjectionBundle,
};
use crate::scalar::{Backend, Scalar};
use crate::spectral::multiset_distance;

/// Algebraic identities in the float backend, relative to the matrix scale.
pub const IDENTITY_TOL: f64 = 1e-9;
pub const SPECTRAL_TOL: f64 = 1e-6;
pub const LIMIT_TOL: f64 = 1e-8;
pub const DECOMPOSITION_TOL: f64 = 1e-10;
/// Zero eigenvalues of `L` are counted below this modulus.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-8;
/// Representative selections compared by the choice-invariance check.
pub const MAX_SELECTIONS: usize = 256;
/// Powers compared in the `(P S)^k = P^k S` check.
pub const POWER_CHECKS: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
    /// Zero for exact comparisons.
    pub tolerance: f64,
    pub note: Option<String>,
}

impl Check {
    fn within(name: &'static str, residual: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: residual <= tolerance,
            residual,
            tolerance,
            note: None,
        }
    }

    fn flag(name: &'static str, passed: bool, note: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            residual: if passed { 0.0 } else { 1.0 },
            tolerance: 0.0,
            note: Some(note.into()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// `a == b` exactly, or within `IDENTITY_TOL * scale` in floating point.
fn matrices_agree<T: Scalar>(
    name: &'static str,
    a: &Matrix<T>,
    b: &Matrix<T>,
    scale: f64,
) -> Check {
    let residual = a.max_abs_diff(b);
    match T::BACKEND {
        Backend::Exact => Check {
            name,
            passed: a == b,
            residual,
            tolerance: 0.0,
            note: None,
        },
        Backend::Float => Check::within(name, residual, IDENTITY_TOL * scale.max(1.0)),
    }
}

fn count_agrees(name: &'static str, got: usize, want: usize) -> Check {
    Check::flag(name, got == want, format!("got {got}, expected {want}"))
}

/// Runs every check that applies. `digraph` enables the forest-matrix
/// comparison (exact backend, `n <= 10`).
pub fn verify_instance<T: Scalar>(
    sys: &LaplacianSystem<T>,
    tau: &T,
    digraph: Option<&WeightedDigraph>,
) -> Result<VerificationReport> {
    let n = sys.n();
    let d = sys.d();
    let l = sys.laplacian();
    let scale = l.norm_inf().max(1.0);
    let tau_f = tau.to_f64();
    let mut checks = Vec::new();

    let ones = Vector::<T>::ones(n);
    checks.push(Check::within(
        "laplacian_row_sums_zero",
        l.mul_vec(&ones)?.norm_inf(),
        match T::BACKEND {
            Backend::Exact => 0.0,
            Backend::Float => IDENTITY_TOL * scale,
        },
    ));

    let p = sys.degroot_matrix(tau)?;
    let min_entry = p
        .entries()
        .iter()
        .map(Scalar::to_f64)
        .fold(f64::INFINITY, f64::min);
    let row_dev = p.row_sums().sub(&ones).norm_inf();
    checks.push(Check::flag(
        "degroot_matrix_stochastic",
        min_entry >= -IDENTITY_TOL && row_dev <= IDENTITY_TOL,
        format!("min entry {min_entry:e}, row-sum deviation {row_dev:e}"),
    ));

    // eigenprojection
    let j = sys.eigenprojection()?.clone();
    checks.push(matrices_agree(
        "eigenprojection_idempotent",
        &j.multiply(&j)?,
        &j,
        1.0,
    ));
    let zero = Matrix::<T>::zeros(n, n);
    checks.push(matrices_agree(
        "eigenprojection_annihilates_l",
        &j.multiply(l)?,
        &zero,
        scale,
    ));
    checks.push(matrices_agree(
        "l_annihilates_eigenprojection",
        &l.multiply(&j)?,
        &zero,
        scale,
    ));
    checks.push(Check::within(
        "eigenprojection_row_sums_one",
        j.row_sums().sub(&ones).norm_inf(),
        if T::BACKEND.is_exact() {
            0.0
        } else {
            IDENTITY_TOL
        },
    ));
    if let Some(g) = digraph {
        if T::BACKEND.is_exact() && n <= MAX_ENUMERATION_VERTICES {
            let forests = forest_matrix(g)?.map(|v| T::from_rational(v));
            checks.push(matrices_agree(
                "forest_matrix_equals_eigenprojection",
                &forests,
                &j,
                1.0,
            ));
        }
    }
    let resolvent = sys.eigenprojection_resolvent()?;
    checks.push(Check::within(
        "resolvent_limit_equals_eigenprojection",
        resolvent.max_abs_diff(&j.to_f64()),
        LIMIT_TOL,
    ));

    let lf = l.to_f64();
    let mut spectrum = lf.eigenvalues()?;
    let zeros = spectrum
        .iter()
        .filter(|z| z.norm() < ZERO_EIGENVALUE_TOL * scale)
        .count();
    checks.push(count_agrees("zero_eigenvalue_multiplicity_is_d", zeros, d));
    checks.push(Check::flag(
        "nonzero_eigenvalues_in_right_half_plane",
        spectrum
            .iter()
            .filter(|z| z.norm() >= ZERO_EIGENVALUE_TOL * scale)
            .all(|z| z.re > 0.0),
        "Re(lambda) > 0 off the kernel",
    ));

    // projection
    let bundle = ProjectionBundle::new(sys, tau.clone())?;
    let s = &bundle.s;
    checks.push(count_agrees(
        "u_full_column_rank",
        bundle.u.rank(),
        n - d + 1,
    ));
    checks.push(matrices_agree("s_idempotent", &s.multiply(s)?, s, 1.0));
    checks.push(matrices_agree("s_symmetric", &s.transpose(), s, 1.0));
    checks.push(Check::within(
        "s_fixes_ones",
        s.mul_vec(&ones)?.sub(&ones).norm_inf(),
        if T::BACKEND.is_exact() {
            0.0
        } else {
            IDENTITY_TOL
        },
    ));
    checks.push(matrices_agree(
        "s_fixes_columns_of_l",
        &s.multiply(l)?,
        l,
        scale,
    ));
    let ls = l.multiply(s)?;
    checks.push(matrices_agree(
        "s_l_s_equals_l_s",
        &s.multiply(&ls)?,
        &ls,
        scale,
    ));
    checks.push(count_agrees("s_rank_n_minus_d_plus_1", s.rank(), n - d + 1));

    let selections = representative_selections(sys);
    let mut worst = 0.0f64;
    let mut identical = true;
    for chosen in selections.iter().skip(1).take(MAX_SELECTIONS) {
        let other = orthogonal_projection_s(&build_u_matrix(sys, chosen)?)?;
        let residual = other.max_abs_diff(s);
        worst = worst.max(residual);
        identical &= match T::BACKEND {
            Backend::Exact => other == *s,
            Backend::Float => residual <= IDENTITY_TOL,
        };
    }
    checks.push(Check {
        name: "s_independent_of_representatives",
        passed: identical,
        residual: worst,
        tolerance: if T::BACKEND.is_exact() {
            0.0
        } else {
            IDENTITY_TOL
        },
        note: Some(format!(
            "{} selection(s) compared",
            selections.len().min(MAX_SELECTIONS + 1)
        )),
    });

    let js = &bundle.quasi_consensus;
    checks.push(matrices_agree("s_js_equals_js", &s.multiply(js)?, js, 1.0));
    checks.push(count_agrees("js_rank_one", js.rank(), 1));

    let mut pk = Matrix::identity(n);
    let mut ptk = Matrix::identity(n);
    let mut power_residual = 0.0f64;
    let mut powers_equal = true;
    for _ in 0..POWER_CHECKS {
        pk = pk.multiply(&p)?;
        ptk = ptk.multiply(&bundle.p_tilde)?;
        let rhs = pk.multiply(s)?;
        power_residual = power_residual.max(ptk.max_abs_diff(&rhs));
        powers_equal &= ptk == rhs;
    }
    checks.push(Check {
        name: "p_tilde_powers_equal_p_powers_times_s",
        passed: if T::BACKEND.is_exact() {
            powers_equal
        } else {
            power_residual <= IDENTITY_TOL
        },
        residual: power_residual,
        tolerance: if T::BACKEND.is_exact() {
            0.0
        } else {
            IDENTITY_TOL
        },
        note: Some(format!("k = 1..{POWER_CHECKS}")),
    });

    let lt = &bundle.l_tilde;
    let inv_tau = 1.0 / tau_f;
    let lt_scale = lt.norm_inf().max(1.0);
    checks.push(Check::within(
        "l_tilde_row_sums_zero",
        lt.row_sums().norm_inf(),
        if T::BACKEND.is_exact() {
            0.0
        } else {
            IDENTITY_TOL * lt_scale
        },
    ));
    checks.push(Check::within(
        "p_tilde_row_sums_one",
        bundle.p_tilde.row_sums().sub(&ones).norm_inf(),
        if T::BACKEND.is_exact() {
            0.0
        } else {
            IDENTITY_TOL
        },
    ));
    checks.push(matrices_agree(
        "l_tilde_annihilates_js",
        &lt.multiply(js)?,
        &zero,
        lt_scale,
    ));
    checks.push(matrices_agree(
        "js_annihilates_l_tilde",
        &js.multiply(lt)?,
        &zero,
        lt_scale,
    ));
    checks.push(count_agrees("l_tilde_index_one", lt.index()?, 1));

    // spectrum of L~: 0, 1/tau (d - 1 times), nonzero spectrum of L
    spectrum.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let mut expected = vec![Complex64::new(0.0, 0.0)];
    expected.extend(std::iter::repeat_n(Complex64::new(inv_tau, 0.0), d - 1));
    expected.extend_from_slice(&spectrum[d.min(spectrum.len())..]);
    let lt_f = lt.to_f64();
    let got = lt_f.eigenvalues()?;
    let distance = multiset_distance(&got, &expected).unwrap_or(f64::INFINITY);
    checks.push(Check::within("l_tilde_spectrum", distance, SPECTRAL_TOL));
    let singular = lt_f.singular_values()?;
    let hits = singular
        .iter()
        .filter(|v| (*v - inv_tau).abs() <= SPECTRAL_TOL * inv_tau.max(1.0))
        .count();
    checks.push(Check::flag(
        "l_tilde_singular_values_contain_inverse_tau",
        hits >= d - 1,
        format!("{hits} singular value(s) at 1/tau, need {}", d - 1),
    ));

    // approximation error of L~ as tau varies
    // compared squared: near a zero error a square root would turn rounding
    // of order eps / tau^2 into a residual of order sqrt(eps) / tau
    let err = approximation_error(sys, s, tau)?;
    let direct = err.direct_squared.to_f64();
    checks.push(Check::within(
        "approximation_error_decomposition",
        (direct - err.decomposition_squared().to_f64()).abs(),
        DECOMPOSITION_TOL * direct.max(1.0),
    ));
    if let Some(tau_max) = sys.tau_max() {
        let grid: Vec<T> = [8, 4, 2, 1]
            .iter()
            .map(|&k| tau_max.clone() / T::from_i64(k))
            .collect();
        let norms = grid
            .iter()
            .map(|t| approximation_error(sys, s, t).map(|e| e.norm))
            .collect::<Result<Vec<f64>>>()?;
        let note = format!("norms {norms:?}, floor {:e}", err.floor());
        let ok = if d >= 2 {
            norms.windows(2).all(|w| w[1] < w[0]) && norms.iter().all(|&v| v > err.floor())
        } else {
            // S = I: L~ = L for every tau
            norms.iter().all(|&v| v <= IDENTITY_TOL * scale)
        };
        checks.push(Check::flag(
            "approximation_error_decreasing_in_tau",
            ok,
            note,
        ));
    }

    // exponential identities and limits
    let sf = s.to_f64();
    let id = Matrix::<f64>::identity(n);
    let complement = id.sub(&sf)?;
    let lsf = ls.to_f64();
    let mut worst_first = 0.0f64;
    let mut worst_second = 0.0f64;
    for t in [tau_f, 10.0 * tau_f, 100.0 * tau_f] {
        let lhs = complement.scale(&(-inv_tau)).exp_scaled(t)?;
        let rhs = sf.add(&complement.scale(&(-t * inv_tau).exp()))?;
        worst_first = worst_first.max(lhs.max_abs_diff(&rhs));
        let lhs = lsf.scale(&-1.0).exp_scaled(t)?;
        let rhs = complement.add(&lf.scale(&-1.0).exp_scaled(t)?.multiply(&sf)?)?;
        worst_second = worst_second.max(lhs.max_abs_diff(&rhs));
    }
    checks.push(
        Check::within(
            "exp_identity_projection_complement",
            worst_first,
            IDENTITY_TOL,
        )
        .with_note("t in {tau, 10 tau, 100 tau}"),
    );
    checks.push(
        Check::within("exp_identity_l_s", worst_second, IDENTITY_TOL)
            .with_note("t in {tau, 10 tau, 100 tau}"),
    );
    let js_f = js.to_f64();
    let t_late = 1000.0 * tau_f;
    let late = lt_f.scale(&-1.0).exp_scaled(t_late)?;
    let rate = slowest_mode_rate(&lt_f)?;
    checks.push(
        Check::within(
            "exp_l_tilde_limit_is_js",
            late.max_abs_diff(&js_f),
            LIMIT_TOL,
        )
        .with_note(format!(
            "t = 1000 tau; slowest mode Re(lambda) = {rate:.4e} predicts {:.2e}",
            (-rate * t_late).exp()
        )),
    );

    // protocol limits
    let opts = RunOptions::default();
    let jf = j.to_f64();
    let mut worst_basic = 0.0f64;
    for k in 0..n {
        let e = Vector::<T>::basis(n, k);
        let trace = run_protocol(sys, &bundle, ProtocolKind::BasicContinuous, &e, &opts)?;
        worst_basic = worst_basic.max(trace.limit.max_abs_diff(&jf.column(k)));
    }
    checks.push(
        Check::within("basic_limit_equals_eigenprojection", worst_basic, LIMIT_TOL)
            .with_note("every basis vector"),
    );

    let x0 = Vector::<T>::from(
        (0..n)
            .map(|i| T::from_i64((i as i64 * 7 + 3) % 5 - 2))
            .collect::<Vec<_>>(),
    );
    let want = js_f.mul_vec(&x0.to_f64())?;
    let projected = run_protocol(sys, &bundle, ProtocolKind::ProjectedContinuous, &x0, &opts)?;
    let ltilde = run_protocol(sys, &bundle, ProtocolKind::LTildeContinuous, &x0, &opts)?;
    checks.push(Check::within(
        "projected_limit_equals_js_x0",
        projected.limit.max_abs_diff(&want),
        LIMIT_TOL,
    ));
    checks.push(Check::flag(
        "projected_limit_is_consensus",
        consensus_check(&projected.limit, LIMIT_TOL),
        format!("spread {:e}", projected.limit.spread()),
    ));
    checks.push(Check::within(
        "l_tilde_limit_equals_projected_limit",
        ltilde.limit.max_abs_diff(&projected.limit),
        LIMIT_TOL,
    ));

    // consensus domain: L y + beta 1 reaches consensus, a kernel direction of S does not
    let y = Vector::<T>::from(
        (0..n)
            .map(|i| T::from_i64(i as i64 + 1))
            .collect::<Vec<_>>(),
    );
    let inside = l.mul_vec(&y)?.add(&ones.scale(&T::from_i64(3)));
    let trace = run_protocol(sys, &bundle, ProtocolKind::BasicContinuous, &inside, &opts)?;
    checks.push(Check::flag(
        "domain_vector_reaches_consensus",
        consensus_check(&trace.limit, LIMIT_TOL),
        format!("spread {:e}", trace.limit.spread()),
    ));
    if d >= 2 {
        let complement_t = Matrix::<T>::identity(n).sub(s)?;
        let k = (0..n)
            .max_by(|&a, &b| {
                complement_t
                    .column(a)
                    .norm_inf()
                    .total_cmp(&complement_t.column(b).norm_inf())
            })
            .expect("n >= 1");
        let outside = complement_t.column(k);
        let trace = run_protocol(sys, &bundle, ProtocolKind::BasicContinuous, &outside, &opts)?;
        checks.push(Check::flag(
            "kernel_of_s_blocks_consensus",
            !consensus_check(&trace.limit, LIMIT_TOL),
            format!("spread {:e}", trace.limit.spread()),
        ));
    }

    // discrete protocols
    let pf = p.to_f64();
    let cesaro = cesaro_limit(&pf)?;
    checks.push(Check::within(
        "cesaro_limit_equals_eigenprojection",
        cesaro.max_abs_diff(&jf),
        LIMIT_TOL,
    ));
    let e0 = Vector::<f64>::basis(n, 0);
    let trace = degroot_iterate(&pf, &e0, opts.k_max)?;
    let branch = if trace.converged {
        "powers converge".to_string()
    } else if let Some(s) = trace.period {
        format!("periodic orbit, period {s}")
    } else {
        "running average only".to_string()
    };
    checks.push(
        Check::within(
            "degroot_cesaro_limit_equals_j_y0",
            trace.limit.max_abs_diff(&jf.column(0)),
            LIMIT_TOL,
        )
        .with_note(branch),
    );

    Ok(VerificationReport { checks })
}

/// Spectral multiset of `L` with the `d` smallest-modulus values removed.
pub fn nonzero_spectrum(l: &Matrix<f64>, d: usize) -> Result<Vec<Complex64>> {
    let mut spectrum = l.eigenvalues()?;
    spectrum.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    Ok(spectrum.split_off(d.min(spectrum.len())))
}

/// Smallest real part over the nonzero eigenvalues of a matrix whose zero
/// eigenvalue is simple, such as `L~`: the decay rate of `exp(-M t)` towards
/// its limit. Infinite when there is no other eigenvalue.
pub fn slowest_mode_rate(m: &Matrix<f64>) -> Result<f64> {
    Ok(nonzero_spectrum(m, 1)?
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min))
}
