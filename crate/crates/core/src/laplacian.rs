//! Laplacian systems: `L = diag(A 1) - A`, the DeGroot matrix `P = I - tau L`,
//! and the eigenprojection of `L` at zero.
//!
//! The eigenprojection is available by two independent routes:
//! [`LaplacianSystem::eigenprojection_nullspace`] builds it from bases of the
//! left and right kernels (exact in the rational backend), and
//! [`LaplacianSystem::eigenprojection_resolvent`] takes the limit of
//! `(I + tau L)^-1` as `tau` doubles. Both are checked against the forest
//! matrix of the dependency digraph in the tests.

use std::sync::OnceLock;

use crate::digraph::ComponentStructure;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Rational, Scalar};

/// Cauchy tolerance for successive resolvents.
pub const RESOLVENT_TOL: f64 = 1e-12;
pub const RESOLVENT_MAX_DOUBLINGS: u32 = 60;
/// Cauchy tolerance for successive Cesàro averages.
pub const CESARO_TOL: f64 = 1e-10;
/// Doublings of the averaging window; 2^60 powers.
pub const CESARO_MAX_DOUBLINGS: u32 = 60;

#[derive(Debug)]
pub struct LaplacianSystem<T: Scalar> {
    a: Matrix<T>,
    l: Matrix<T>,
    tau_max: Option<T>,
    structure: ComponentStructure,
    eigenprojection: OnceLock<Matrix<T>>,
}

impl<T: Scalar> Clone for LaplacianSystem<T> {
    fn clone(&self) -> Self {
        let cell = OnceLock::new();
        if let Some(j) = self.eigenprojection.get() {
            let _ = cell.set(j.clone());
        }
        Self {
            a: self.a.clone(),
            l: self.l.clone(),
            tau_max: self.tau_max.clone(),
            structure: self.structure.clone(),
            eigenprojection: cell,
        }
    }
}

/// Builds the Laplacian system of a dependency matrix.
pub fn build_laplacian<T: Scalar>(a: Matrix<T>) -> Result<LaplacianSystem<T>> {
    LaplacianSystem::new(a)
}

impl<T: Scalar> LaplacianSystem<T> {
    pub fn new(a: Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        if n == 0 {
            return Err(Error::InvalidDependencyMatrix("empty matrix".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let v = &a[(i, j)];
                if v.is_negative() {
                    return Err(Error::InvalidDependencyMatrix(format!(
                        "negative entry {v} at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if i == j && !v.is_zero() {
                    return Err(Error::InvalidDependencyMatrix(format!(
                        "nonzero diagonal entry {v} at {}",
                        i + 1
                    )));
                }
            }
        }
        let degrees = a.row_sums();
        let mut l = a.scale(&-T::one());
        for i in 0..n {
            l[(i, i)] = degrees[i].clone();
        }
        let max_degree = degrees
            .iter()
            .cloned()
            .fold(T::zero(), |m, v| if v > m { v } else { m });
        let tau_max = (!max_degree.is_zero()).then(|| T::one() / max_degree);
        let adjacency: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| !a[(i, j)].is_zero()).collect())
            .collect();
        Ok(Self {
            structure: ComponentStructure::from_adjacency(&adjacency),
            a,
            l,
            tau_max,
            eigenprojection: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn dependency_matrix(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn laplacian(&self) -> &Matrix<T> {
        &self.l
    }

    /// `(max_i sum_{j != i} a_ij)^-1`, or `None` when `A = 0` (every positive
    /// step keeps `P = I` stochastic).
    pub fn tau_max(&self) -> Option<&T> {
        self.tau_max.as_ref()
    }

    /// Midpoint of the stochastic range, or 1 when the range is unbounded.
    pub fn default_tau(&self) -> T {
        match &self.tau_max {
            Some(t) => t.clone() / T::from_i64(2),
            None => T::one(),
        }
    }

    pub fn structure(&self) -> &ComponentStructure {
        &self.structure
    }

    /// Multiplicity of the zero eigenvalue, equal to the number of final classes.
    pub fn d(&self) -> usize {
        self.structure.d()
    }

    pub fn has_spanning_in_tree(&self) -> bool {
        self.d() == 1
    }

    pub fn check_tau(&self, tau: &T) -> Result<()> {
        let too_big = self.tau_max.as_ref().is_some_and(|m| tau > m);
        if !tau.is_positive() || too_big {
            return Err(Error::TauOutOfRange {
                tau: tau.to_f64(),
                tau_max: self.tau_max.as_ref().map_or(f64::INFINITY, Scalar::to_f64),
            });
        }
        Ok(())
    }

    /// `P = I - tau L`, row-stochastic for `0 < tau <= tau_max`.
    pub fn degroot_matrix(&self, tau: &T) -> Result<Matrix<T>> {
        self.check_tau(tau)?;
        Matrix::identity(self.n()).sub(&self.l.scale(tau))
    }

    /// Cached eigenprojection (null-space route).
    pub fn eigenprojection(&self) -> Result<&Matrix<T>> {
        if let Some(j) = self.eigenprojection.get() {
            return Ok(j);
        }
        let j = self.eigenprojection_nullspace()?;
        Ok(self.eigenprojection.get_or_init(|| j))
    }

    /// `X (Y^T X)^-1 Y^T` with `X`, `Y` bases of `N(L)` and `N(L^T)`. Valid
    /// because a Laplacian has index 1, which is checked first.
    pub fn eigenprojection_nullspace(&self) -> Result<Matrix<T>> {
        let index = self.l.index()?;
        if index != 1 {
            return Err(Error::IndexNotOne(index));
        }
        let x = self.l.null_space();
        let y = self.l.transpose().null_space();
        let core = y.transpose().multiply(&x)?.invert()?;
        x.multiply(&core)?.multiply(&y.transpose())
    }

    /// Limit of `(I + tau L)^-1` over `tau = 1, 2, 4, ...`.
    pub fn eigenprojection_resolvent(&self) -> Result<Matrix<f64>> {
        let l = self.l.to_f64();
        let mut prev = laplacian_resolvent(&l, 1.0);
        for k in 1..=RESOLVENT_MAX_DOUBLINGS {
            let next = laplacian_resolvent(&l, 2f64.powi(k as i32));
            if next.max_abs_diff(&prev) < RESOLVENT_TOL {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::NoConvergence {
            what: "resolvent eigenprojection",
            iterations: RESOLVENT_MAX_DOUBLINGS as usize,
        })
    }

    pub fn to_f64(&self) -> LaplacianSystem<f64> {
        let cell = OnceLock::new();
        if let Some(j) = self.eigenprojection.get() {
            let _ = cell.set(j.to_f64());
        }
        LaplacianSystem {
            a: self.a.to_f64(),
            l: self.l.to_f64(),
            tau_max: self.tau_max.as_ref().map(Scalar::to_f64),
            structure: self.structure.clone(),
            eigenprojection: cell,
        }
    }
}

impl LaplacianSystem<Rational> {
    pub fn from_digraph(g: &crate::digraph::WeightedDigraph) -> Result<Self> {
        Self::new(g.dependency_matrix())
    }
}

/// `(I + tau L)^-1` for a Laplacian `L` (zero row sums, non-positive
/// off-diagonal entries).
///
/// `I + tau L` is a row diagonally dominant M-matrix with unit row sums.
/// Elimination tracks the row sums of the shrinking Schur complement
/// separately and rebuilds each pivot from them, so every step adds
/// non-negative quantities. The result is accurate entrywise to a few ulps no
/// matter how large `tau` is, which is what the limit `tau -> inf` needs.
#[allow(clippy::needless_range_loop)]
pub fn laplacian_resolvent(l: &Matrix<f64>, tau: f64) -> Matrix<f64> {
    let n = l.rows();
    // c[i][j] = -m_ij >= 0 off the diagonal; excess[i] = row sum of the
    // remaining block of row i
    let mut c: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        (-tau * l[(i, j)]).max(0.0)
                    }
                })
                .collect()
        })
        .collect();
    let mut excess = vec![1.0; n];
    let mut pivot = vec![0.0; n];
    let mut lower = vec![vec![0.0; n]; n];
    for k in 0..n {
        pivot[k] = excess[k] + (k + 1..n).map(|j| c[k][j]).sum::<f64>();
        for i in k + 1..n {
            if c[i][k] == 0.0 {
                continue;
            }
            let factor = c[i][k] / pivot[k];
            lower[i][k] = factor;
            for j in k + 1..n {
                if j != i {
                    c[i][j] += factor * c[k][j];
                }
            }
            excess[i] += factor * excess[k];
        }
    }
    let mut inv = Matrix::zeros(n, n);
    for col in 0..n {
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] =
                if i == col { 1.0 } else { 0.0 } + (0..i).map(|k| lower[i][k] * y[k]).sum::<f64>();
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            x[i] = (y[i] + (i + 1..n).map(|j| c[i][j] * x[j]).sum::<f64>()) / pivot[i];
        }
        for i in 0..n {
            inv[(i, col)] = x[i];
        }
    }
    inv
}

/// Cesàro limit `lim (1/k) sum_{i=1..k} P^i` of a row-stochastic matrix.
///
/// The running average is evaluated at `k = 1, 2, 4, ...` via
/// `A_2k = (A_k + P^k A_k) / 2`, stopping once two consecutive values agree
/// to [`CESARO_TOL`] entrywise. For a stochastic matrix `A_k` approaches the
/// limit like `1/k`, so this reaches `k = 2^40` in eighty products.
pub fn cesaro_limit(p: &Matrix<f64>) -> Result<Matrix<f64>> {
    if !p.is_square() {
        return Err(Error::NotSquare {
            rows: p.rows(),
            cols: p.cols(),
        });
    }
    let mut avg = p.clone();
    let mut power = p.clone();
    for _ in 0..CESARO_MAX_DOUBLINGS {
        let shifted = power.multiply(&avg)?;
        let next = avg.add(&shifted)?.scale(&0.5);
        let step = next.max_abs_diff(&avg);
        avg = next;
        if step < CESARO_TOL {
            return Ok(avg);
        }
        power = power.multiply(&power)?;
        // squaring amplifies row-sum drift; keep the power stochastic
        for i in 0..power.rows() {
            let sum: f64 = power.row(i).iter().sum();
            for j in 0..power.cols() {
                power[(i, j)] /= sum;
            }
        }
    }
    Err(Error::NoConvergence {
        what: "Cesàro average",
        iterations: CESARO_MAX_DOUBLINGS as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digraph::{forest_matrix, WeightedDigraph};
    use crate::fixtures;
    use num_bigint::BigInt;
    use num_traits::One;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn example() -> LaplacianSystem<Rational> {
        build_laplacian(fixtures::example_dependency_matrix()).unwrap()
    }

    fn two_cycle() -> LaplacianSystem<Rational> {
        build_laplacian(Matrix::from_i64_rows(&[&[0, 1], &[1, 0]]).unwrap()).unwrap()
    }

    #[test]
    fn builds_example_laplacian() {
        let sys = example();
        assert_eq!(sys.laplacian(), &fixtures::example_laplacian());
        assert_eq!(sys.tau_max(), Some(&q(1, 7)));
        assert_eq!(sys.d(), 2);
        assert!(sys
            .laplacian()
            .multiply(&Matrix::ones_column(7))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn zero_and_two_cycle_laplacians() {
        let zero = build_laplacian(Matrix::<Rational>::zeros(3, 3)).unwrap();
        assert!(zero.laplacian().is_zero());
        assert_eq!(zero.tau_max(), None);
        assert_eq!(zero.d(), 3);
        assert_eq!(
            two_cycle().laplacian(),
            &Matrix::from_i64_rows(&[&[1, -1], &[-1, 1]]).unwrap()
        );
    }

    #[test]
    fn rejects_bad_dependency_matrices() {
        let neg = Matrix::from_i64_rows(&[&[0, -1], &[1, 0]]).unwrap();
        assert!(matches!(
            build_laplacian(neg),
            Err(Error::InvalidDependencyMatrix(_))
        ));
        let diag = Matrix::from_i64_rows(&[&[1, 1], &[1, 0]]).unwrap();
        assert!(matches!(
            build_laplacian(diag),
            Err(Error::InvalidDependencyMatrix(_))
        ));
        assert!(build_laplacian(Matrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn degroot_matrix_range() {
        let sys = example();
        let p = sys.degroot_matrix(&q(1, 7)).unwrap();
        assert!(p.row_sums().iter().all(|s| s.is_one()));
        assert!(p.entries().iter().all(|v| *v >= q(0, 1)));
        assert_eq!(p[(5, 5)], q(0, 1));
        assert!(matches!(
            sys.degroot_matrix(&q(0, 1)),
            Err(Error::TauOutOfRange { .. })
        ));
        assert!(matches!(
            sys.degroot_matrix(&q(1, 6)),
            Err(Error::TauOutOfRange { .. })
        ));
        let p2 = two_cycle().degroot_matrix(&q(1, 1)).unwrap();
        assert_eq!(p2, Matrix::from_i64_rows(&[&[0, 1], &[1, 0]]).unwrap());
    }

    #[test]
    fn tau_error_exactly_past_tau_max() {
        let sys = example().to_f64();
        assert!(sys.degroot_matrix(&(1.0 / 7.0)).is_ok());
        assert!(sys.degroot_matrix(&(1.0 / 7.0 + 1e-12)).is_err());
        // negative entries appear exactly when the range is exceeded
        let l = sys.laplacian().clone();
        let p = Matrix::identity(7).sub(&l.scale(&(1.0 / 6.9))).unwrap();
        assert!(p.entries().iter().any(|v| *v < 0.0));
    }

    #[test]
    fn nullspace_eigenprojection_matches_forests() {
        let sys = example();
        assert_eq!(
            sys.eigenprojection_nullspace().unwrap(),
            fixtures::example_eigenprojection()
        );
        assert_eq!(
            two_cycle().eigenprojection_nullspace().unwrap(),
            Matrix::new(2, 2, vec![q(1, 2); 4]).unwrap()
        );
        let single = build_laplacian(Matrix::<Rational>::zeros(1, 1)).unwrap();
        assert_eq!(
            single.eigenprojection_nullspace().unwrap(),
            Matrix::identity(1)
        );
        // cached value is the same matrix
        assert_eq!(
            sys.eigenprojection().unwrap(),
            &fixtures::example_eigenprojection()
        );
    }

    #[test]
    fn resolvent_eigenprojection() {
        let j = example().eigenprojection_resolvent().unwrap();
        let printed = [
            [0.4, 0.4, 0.2, 0.0, 0.0, 0.0, 0.0],
            [0.4, 0.4, 0.2, 0.0, 0.0, 0.0, 0.0],
            [0.4, 0.4, 0.2, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.4, 0.6, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.4, 0.6, 0.0, 0.0],
            [0.2909, 0.2909, 0.1455, 0.1091, 0.1636, 0.0, 0.0],
            [0.1455, 0.1455, 0.0727, 0.2545, 0.3818, 0.0, 0.0],
        ];
        for (i, row) in printed.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                assert!((j[(i, k)] - v).abs() < 1e-4);
            }
        }
        assert!(j.max_abs_diff(&fixtures::example_eigenprojection().to_f64()) < 1e-10);

        let zero = build_laplacian(Matrix::<f64>::zeros(3, 3)).unwrap();
        assert_eq!(
            zero.eigenprojection_resolvent().unwrap(),
            Matrix::identity(3)
        );

        let jc = two_cycle().eigenprojection_resolvent().unwrap();
        assert!(jc.max_abs_diff(&Matrix::new(2, 2, vec![0.5; 4]).unwrap()) < 1e-10);
    }

    #[test]
    fn resolvent_matches_plain_inverse_at_moderate_tau() {
        let l = fixtures::example_laplacian().to_f64();
        for tau in [0.5, 3.0, 40.0] {
            let direct = Matrix::identity(7)
                .add(&l.scale(&tau))
                .unwrap()
                .invert()
                .unwrap();
            assert!(laplacian_resolvent(&l, tau).max_abs_diff(&direct) < 1e-12);
        }
    }

    #[test]
    fn cesaro_cases() {
        assert_eq!(
            cesaro_limit(&Matrix::identity(3)).unwrap(),
            Matrix::identity(3)
        );
        let flip = Matrix::from_f64_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let c = cesaro_limit(&flip).unwrap();
        assert!(c.max_abs_diff(&Matrix::new(2, 2, vec![0.5; 4]).unwrap()) < 1e-12);

        let sys = example().to_f64();
        let p = sys.degroot_matrix(&(1.0 / 14.0)).unwrap();
        let c = cesaro_limit(&p).unwrap();
        assert!(c.max_abs_diff(&fixtures::example_eigenprojection().to_f64()) < 1e-8);
    }

    #[test]
    fn cesaro_of_period_three() {
        // oracle: average of the three cyclic shifts
        let p =
            Matrix::from_f64_rows(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]).unwrap();
        let c = cesaro_limit(&p).unwrap();
        assert!(c.max_abs_diff(&Matrix::new(3, 3, vec![1.0 / 3.0; 9]).unwrap()) < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn three_routes_agree(seed in any::<u64>(), n in 1usize..=7) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = WeightedDigraph::random(&mut rng, n, 0.3, 3);
            let sys = LaplacianSystem::from_digraph(&g).unwrap();
            let forests = forest_matrix(&g).unwrap();
            let exact = sys.eigenprojection_nullspace().unwrap();
            prop_assert_eq!(&exact, &forests);
            let float = sys.eigenprojection_resolvent().unwrap();
            prop_assert!(float.max_abs_diff(&exact.to_f64()) < 1e-8);

            let l = sys.laplacian();
            prop_assert_eq!(exact.multiply(&exact).unwrap(), exact.clone());
            prop_assert!(exact.multiply(l).unwrap().is_zero());
            prop_assert!(l.multiply(&exact).unwrap().is_zero());
            prop_assert!(exact.row_sums().iter().all(|s| s.is_one()));

            let ev = l.to_f64().eigenvalues().unwrap();
            let zeros = ev.iter().filter(|c| c.norm() < 1e-8).count();
            prop_assert_eq!(zeros, sys.d());
            prop_assert!(ev.iter().filter(|c| c.norm() >= 1e-8).all(|c| c.re > 0.0));
        }

        #[test]
        fn cesaro_matches_plain_limit_when_aperiodic(seed in any::<u64>(), n in 2usize..=6) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = WeightedDigraph::random(&mut rng, n, 0.4, 3);
            let sys = LaplacianSystem::from_digraph(&g).unwrap().to_f64();
            let tau = sys.default_tau();
            let p = sys.degroot_matrix(&tau).unwrap();
            let c = cesaro_limit(&p).unwrap();
            // strict tau keeps every diagonal of P positive, so P is aperiodic
            let big = p.pow(1 << 14).unwrap();
            prop_assert!(c.max_abs_diff(&big) < 1e-8);
        }
    }
}
