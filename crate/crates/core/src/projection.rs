//! Orthogonal projection onto the consensus domain `T(L) = R(L) + span(1)`
//! and the protocol matrices built from it.
//!
//! `U` stacks `1` in front of the columns of `L` with one column per final
//! class removed; its columns are a basis of `T(L)`, so
//! `S = U (U^T U)^-1 U^T` does not depend on which columns were removed.

use crate::error::{Error, Result};
use crate::laplacian::LaplacianSystem;
use crate::matrix::{Matrix, Vector};
use crate::scalar::{Backend, Scalar};

/// `U`, `S` and the matrices derived from them for one step size `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBundle<T: Scalar> {
    pub u: Matrix<T>,
    pub s: Matrix<T>,
    pub tau: T,
    /// `P S` with `P = I - tau L`.
    pub p_tilde: Matrix<T>,
    /// `(I - S) / tau + L S`.
    pub l_tilde: Matrix<T>,
    /// `J S`, the quasi-consensus map.
    pub quasi_consensus: Matrix<T>,
}

impl<T: Scalar> ProjectionBundle<T> {
    /// Bundle for the default representatives (smallest vertex of each final class).
    pub fn new(sys: &LaplacianSystem<T>, tau: T) -> Result<Self> {
        Self::with_representatives(sys, &default_representatives(sys), tau)
    }

    pub fn with_representatives(
        sys: &LaplacianSystem<T>,
        chosen: &[usize],
        tau: T,
    ) -> Result<Self> {
        sys.check_tau(&tau)?;
        let u = build_u_matrix(sys, chosen)?;
        let s = orthogonal_projection_s(&u)?;
        let p = sys.degroot_matrix(&tau)?;
        let p_tilde = p_tilde(&p, &s)?;
        let l_tilde = l_tilde(sys, &s, &tau)?;
        let quasi_consensus = sys.eigenprojection()?.multiply(&s)?;
        Ok(Self {
            u,
            s,
            tau,
            p_tilde,
            l_tilde,
            quasi_consensus,
        })
    }

    pub fn n(&self) -> usize {
        self.s.rows()
    }

    /// `S x` equals `x` (up to `tol * ||x||` in floating point).
    pub fn contains(&self, x: &Vector<T>, tol: f64) -> Result<bool> {
        projection_fixes(&self.s, x, tol)
    }

    pub fn project(&self, x0: &Vector<T>) -> Result<Vector<T>> {
        project_initial(&self.s, x0)
    }

    pub fn to_f64(&self) -> ProjectionBundle<f64> {
        ProjectionBundle {
            u: self.u.to_f64(),
            s: self.s.to_f64(),
            tau: self.tau.to_f64(),
            p_tilde: self.p_tilde.to_f64(),
            l_tilde: self.l_tilde.to_f64(),
            quasi_consensus: self.quasi_consensus.to_f64(),
        }
    }
}

/// Smallest vertex of each final class, in final-class order.
pub fn default_representatives<T: Scalar>(sys: &LaplacianSystem<T>) -> Vec<usize> {
    sys.structure()
        .final_class_vertices()
        .map(|c| c[0])
        .collect()
}

/// Every way of picking one vertex per final class.
pub fn representative_selections<T: Scalar>(sys: &LaplacianSystem<T>) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for class in sys.structure().final_class_vertices() {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                class.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

/// `[1 | L without the chosen columns]`, remaining columns ascending.
pub fn build_u_matrix<T: Scalar>(sys: &LaplacianSystem<T>, chosen: &[usize]) -> Result<Matrix<T>> {
    let n = sys.n();
    let structure = sys.structure();
    let mut covered = vec![false; structure.components.len()];
    for &v in chosen {
        if v >= n {
            return Err(Error::InvalidSelection(format!(
                "vertex {} out of range 1..={n}",
                v + 1
            )));
        }
        if !structure.is_in_final_class(v) {
            return Err(Error::InvalidSelection(format!(
                "vertex {} is not in a final class",
                v + 1
            )));
        }
        let ci = structure.component_of[v];
        if covered[ci] {
            return Err(Error::InvalidSelection(format!(
                "two vertices chosen from the final class containing {}",
                v + 1
            )));
        }
        covered[ci] = true;
    }
    if let Some(&missing) = structure.final_classes.iter().find(|&&ci| !covered[ci]) {
        return Err(Error::InvalidSelection(format!(
            "no vertex chosen from the final class containing {}",
            structure.components[missing][0] + 1
        )));
    }
    let kept: Vec<usize> = (0..n).filter(|v| !chosen.contains(v)).collect();
    Matrix::ones_column(n).hstack(&sys.laplacian().select_columns(&kept))
}

/// `U (U^T U)^-1 U^T`.
pub fn orthogonal_projection_s<T: Scalar>(u: &Matrix<T>) -> Result<Matrix<T>> {
    let ut = u.transpose();
    let gram_inv = ut.multiply(u)?.invert()?;
    u.multiply(&gram_inv)?.multiply(&ut)
}

/// Membership of `x` in the consensus domain, tested as `S x = x`.
pub fn in_consensus_domain<T: Scalar>(
    sys: &LaplacianSystem<T>,
    x: &Vector<T>,
    tol: f64,
) -> Result<bool> {
    let u = build_u_matrix(sys, &default_representatives(sys))?;
    projection_fixes(&orthogonal_projection_s(&u)?, x, tol)
}

fn projection_fixes<T: Scalar>(s: &Matrix<T>, x: &Vector<T>, tol: f64) -> Result<bool> {
    let sx = s.mul_vec(x)?;
    Ok(match T::BACKEND {
        Backend::Exact => sx == *x,
        Backend::Float => sx.max_abs_diff(x) <= tol * x.norm_inf(),
    })
}

/// `S x0`.
pub fn project_initial<T: Scalar>(s: &Matrix<T>, x0: &Vector<T>) -> Result<Vector<T>> {
    s.mul_vec(x0)
}

/// `P S`.
pub fn p_tilde<T: Scalar>(p: &Matrix<T>, s: &Matrix<T>) -> Result<Matrix<T>> {
    p.multiply(s)
}

/// `(I - S) / tau + L S`, for `tau` in the stochastic range of `P`.
pub fn l_tilde<T: Scalar>(sys: &LaplacianSystem<T>, s: &Matrix<T>, tau: &T) -> Result<Matrix<T>> {
    sys.check_tau(tau)?;
    l_tilde_unchecked(sys.laplacian(), s, tau)
}

fn l_tilde_unchecked<T: Scalar>(l: &Matrix<T>, s: &Matrix<T>, tau: &T) -> Result<Matrix<T>> {
    let n = l.rows();
    let complement = Matrix::identity(n).sub(s)?;
    complement
        .scale(&(T::one() / tau.clone()))
        .add(&l.multiply(s)?)
}

/// `||L~(tau) - L||_E` computed directly and through its two-term
/// closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationError<T> {
    pub norm: f64,
    /// `||L~ - L||_E^2` evaluated directly.
    pub direct_squared: T,
    /// `tau^-2 trace(I - S)`.
    pub scaled_trace: T,
    /// `trace((L S - L)(S L^T - L^T)) = ||L S - L||_E^2`, independent of `tau`.
    pub constant: T,
}

impl<T: Scalar> ApproximationError<T> {
    pub fn decomposition_squared(&self) -> T {
        self.scaled_trace.clone() + self.constant.clone()
    }

    /// `||L S - L||_E`, the infimum over `tau`.
    pub fn floor(&self) -> f64 {
        self.constant.to_f64().max(0.0).sqrt()
    }
}

pub fn approximation_error<T: Scalar>(
    sys: &LaplacianSystem<T>,
    s: &Matrix<T>,
    tau: &T,
) -> Result<ApproximationError<T>> {
    if !tau.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {tau}"
        )));
    }
    let l = sys.laplacian();
    let n = l.rows();
    let diff = l_tilde_unchecked(l, s, tau)?.sub(l)?;
    let direct_squared = diff.frobenius_norm_squared();
    let ls_minus_l = l.multiply(s)?.sub(l)?;
    let constant = ls_minus_l.multiply(&ls_minus_l.transpose())?.trace();
    let scaled_trace = Matrix::identity(n).sub(s)?.trace() / (tau.clone() * tau.clone());
    Ok(ApproximationError {
        norm: direct_squared.to_f64().max(0.0).sqrt(),
        direct_squared,
        scaled_trace,
        constant,
    })
}
