//! Reference seven-agent instance with two final classes, `{1,2,3}` and
//! `{4,5}` (1-based), and two followers `{6,7}` that listen to both.
//!
//! Every matrix here is exact and was checked against an independent
//! computer-algebra run; tests across the crate use these as frozen values.

use crate::digraph::WeightedDigraph;
use crate::matrix::Matrix;
use crate::scalar::{Rational, Scalar};

pub fn example_dependency_matrix() -> Matrix<Rational> {
    Matrix::from_i64_rows(&[
        &[0, 0, 3, 0, 0, 0, 0],
        &[1, 0, 0, 0, 0, 0, 0],
        &[4, 2, 0, 0, 0, 0, 0],
        &[0, 0, 0, 0, 3, 0, 0],
        &[0, 0, 0, 2, 0, 0, 0],
        &[0, 1, 3, 0, 0, 0, 3],
        &[0, 0, 0, 2, 0, 2, 0],
    ])
    .expect("fixture is rectangular")
}

pub fn example_digraph() -> WeightedDigraph {
    WeightedDigraph::from_dependency_matrix(&example_dependency_matrix())
        .expect("fixture is a valid digraph")
}

pub fn example_laplacian() -> Matrix<Rational> {
    Matrix::from_i64_rows(&[
        &[3, 0, -3, 0, 0, 0, 0],
        &[-1, 1, 0, 0, 0, 0, 0],
        &[-4, -2, 6, 0, 0, 0, 0],
        &[0, 0, 0, 3, -3, 0, 0],
        &[0, 0, 0, -2, 2, 0, 0],
        &[0, -1, -3, 0, 0, 7, -3],
        &[0, 0, 0, -2, 0, -2, 4],
    ])
    .expect("fixture is rectangular")
}

/// `U` for representatives 1 and 4 (0-based 0 and 3).
pub fn example_u() -> Matrix<Rational> {
    Matrix::from_i64_rows(&[
        &[1, 0, -3, 0, 0, 0],
        &[1, 1, 0, 0, 0, 0],
        &[1, -2, 6, 0, 0, 0],
        &[1, 0, 0, -3, 0, 0],
        &[1, 0, 0, 2, 0, 0],
        &[1, -1, -3, 0, 7, -3],
        &[1, 0, 0, 0, -2, 4],
    ])
    .expect("fixture is rectangular")
}

/// `22 * S`.
pub fn example_s_times_22() -> Matrix<Rational> {
    Matrix::from_i64_rows(&[
        &[18, -4, -2, 4, 6, 0, 0],
        &[-4, 18, -2, 4, 6, 0, 0],
        &[-2, -2, 21, 2, 3, 0, 0],
        &[4, 4, 2, 18, -6, 0, 0],
        &[6, 6, 3, -6, 13, 0, 0],
        &[0, 0, 0, 0, 0, 22, 0],
        &[0, 0, 0, 0, 0, 0, 22],
    ])
    .expect("fixture is rectangular")
}

pub fn example_projection() -> Matrix<Rational> {
    example_s_times_22().scale(&Rational::new(1.into(), 22.into()))
}

/// Eigenprojection at zero, `55 * J` written out as integers.
pub fn example_eigenprojection() -> Matrix<Rational> {
    Matrix::from_i64_rows(&[
        &[22, 22, 11, 0, 0, 0, 0],
        &[22, 22, 11, 0, 0, 0, 0],
        &[22, 22, 11, 0, 0, 0, 0],
        &[0, 0, 0, 22, 33, 0, 0],
        &[0, 0, 0, 22, 33, 0, 0],
        &[16, 16, 8, 6, 9, 0, 0],
        &[8, 8, 4, 14, 21, 0, 0],
    ])
    .expect("fixture is rectangular")
    .scale(&Rational::new(1.into(), 55.into()))
}

/// Common row of the quasi-consensus map `J S`, times 110.
pub const EXAMPLE_QUASI_CONSENSUS_ROW_110: [i64; 7] = [26, 26, 13, 18, 27, 0, 0];

pub fn example_quasi_consensus_map() -> Matrix<Rational> {
    let row: Vec<Rational> = EXAMPLE_QUASI_CONSENSUS_ROW_110
        .iter()
        .map(|&v| Rational::from_i64(v) / Rational::from_i64(110))
        .collect();
    Matrix::from_rows(vec![row; 7]).expect("fixture is rectangular")
}
