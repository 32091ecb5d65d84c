//! JSON-friendly mirrors of the public types: complex numbers encode as
//! `[re, im]` pairs and matrices as row-major nested arrays.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, CVector};
use crate::qme::{LindbladSpec, LossOperator, QmeError, QuadraticMe};
use crate::state::{GaussianParams, StateError};

/// A complex number serialized as the two-element array `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPair(pub f64, pub f64);

impl From<Complex64> for ComplexPair {
    fn from(z: Complex64) -> Self {
        ComplexPair(z.re, z.im)
    }
}

impl From<ComplexPair> for Complex64 {
    fn from(p: ComplexPair) -> Self {
        Complex64::new(p.0, p.1)
    }
}

pub fn vector_to_schema(v: &CVector) -> Vec<ComplexPair> {
    v.iter().map(|z| ComplexPair::from(*z)).collect()
}

pub fn vector_from_schema(v: &[ComplexPair]) -> CVector {
    CVector::from_vec(v.iter().map(|p| Complex64::from(*p)).collect())
}

pub fn matrix_to_schema(m: &CMatrix) -> Vec<Vec<ComplexPair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| ComplexPair::from(m[(i, j)])).collect())
        .collect()
}

/// Row-major nested arrays back to a matrix; rows must be equal length.
pub fn matrix_from_schema(rows: &[Vec<ComplexPair>]) -> Result<CMatrix, SchemaError> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(SchemaError::EmptyMatrix);
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(SchemaError::RaggedMatrix);
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
        Complex64::from(rows[i][j])
    }))
}

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("matrix must be non-empty")]
    EmptyMatrix,
    #[error("matrix rows must have equal length")]
    RaggedMatrix,
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Qme(#[from] QmeError),
}

/// Serialized form of [`GaussianParams`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianParamsSchema {
    pub omega: ComplexPair,
    pub alpha: Vec<ComplexPair>,
    pub alpha_plus: Vec<ComplexPair>,
    pub n: Vec<Vec<ComplexPair>>,
    pub m: Vec<Vec<ComplexPair>>,
    pub m_plus: Vec<Vec<ComplexPair>>,
}

impl From<&GaussianParams> for GaussianParamsSchema {
    fn from(g: &GaussianParams) -> Self {
        Self {
            omega: g.omega().into(),
            alpha: vector_to_schema(g.alpha()),
            alpha_plus: vector_to_schema(g.alpha_plus()),
            n: matrix_to_schema(g.n()),
            m: matrix_to_schema(g.m()),
            m_plus: matrix_to_schema(g.m_plus()),
        }
    }
}

impl TryFrom<&GaussianParamsSchema> for GaussianParams {
    type Error = SchemaError;

    fn try_from(s: &GaussianParamsSchema) -> Result<Self, SchemaError> {
        Ok(GaussianParams::new(
            s.omega.into(),
            vector_from_schema(&s.alpha),
            vector_from_schema(&s.alpha_plus),
            matrix_from_schema(&s.n)?,
            matrix_from_schema(&s.m)?,
            matrix_from_schema(&s.m_plus)?,
        )?)
    }
}

/// Serialized form of [`LindbladSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LindbladSpecSchema {
    pub h1: Vec<Vec<ComplexPair>>,
    pub h2: Vec<Vec<ComplexPair>>,
    #[serde(default)]
    pub loss_ops: Vec<LossOperatorSchema>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossOperatorSchema {
    pub o1: Vec<ComplexPair>,
    pub o2: Vec<ComplexPair>,
}

impl From<&LindbladSpec> for LindbladSpecSchema {
    fn from(spec: &LindbladSpec) -> Self {
        Self {
            h1: matrix_to_schema(spec.h1()),
            h2: matrix_to_schema(spec.h2()),
            loss_ops: spec
                .loss_ops()
                .iter()
                .map(|op| LossOperatorSchema {
                    o1: vector_to_schema(&op.o1),
                    o2: vector_to_schema(&op.o2),
                })
                .collect(),
        }
    }
}

impl TryFrom<&LindbladSpecSchema> for LindbladSpec {
    type Error = SchemaError;

    fn try_from(s: &LindbladSpecSchema) -> Result<Self, SchemaError> {
        let loss_ops = s
            .loss_ops
            .iter()
            .map(|op| LossOperator {
                o1: vector_from_schema(&op.o1),
                o2: vector_from_schema(&op.o2),
            })
            .collect();
        Ok(LindbladSpec::new(
            matrix_from_schema(&s.h1)?,
            matrix_from_schema(&s.h2)?,
            loss_ops,
        )?)
    }
}

/// Serialized form of [`QuadraticMe`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticMeSchema {
    pub a0: ComplexPair,
    pub a1: Vec<ComplexPair>,
    pub b1: Vec<ComplexPair>,
    pub a: Vec<Vec<ComplexPair>>,
    pub b: Vec<Vec<ComplexPair>>,
    pub c: Vec<Vec<ComplexPair>>,
}

impl From<&QuadraticMe> for QuadraticMeSchema {
    fn from(q: &QuadraticMe) -> Self {
        Self {
            a0: q.a0().into(),
            a1: vector_to_schema(q.a1()),
            b1: vector_to_schema(q.b1()),
            a: matrix_to_schema(q.a()),
            b: matrix_to_schema(q.b()),
            c: matrix_to_schema(q.c()),
        }
    }
}

impl TryFrom<&QuadraticMeSchema> for QuadraticMe {
    type Error = SchemaError;

    fn try_from(s: &QuadraticMeSchema) -> Result<Self, SchemaError> {
        Ok(QuadraticMe::new(
            s.a0.into(),
            vector_from_schema(&s.a1),
            vector_from_schema(&s.b1),
            matrix_from_schema(&s.a)?,
            matrix_from_schema(&s.b)?,
            matrix_from_schema(&s.c)?,
        )?)
    }
}
