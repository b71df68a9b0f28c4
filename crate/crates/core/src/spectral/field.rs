use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Identifies the grid a [`Field`] lives on: node count and exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridKey {
    pub n: usize,
    p_bits: u64,
}

impl GridKey {
    pub(crate) fn new(n: usize, p: f64) -> Self {
        Self { n, p_bits: p.to_bits() }
    }

    pub fn p(&self) -> f64 {
        f64::from_bits(self.p_bits)
    }

    pub(crate) fn ensure_same(&self, other: &GridKey) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("(n={}, p={}) vs (n={}, p={})", self.n, self.p(), other.n, other.p())))
        }
    }
}

/// Nodal values of a scalar function of `y` on a [`Grid`](super::Grid).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: DVector<f64>,
    key: GridKey,
}

impl Field {
    pub(crate) fn from_vector(key: GridKey, values: DVector<f64>) -> Self {
        debug_assert_eq!(values.len(), key.n);
        Self { values, key }
    }

    pub fn key(&self) -> GridKey {
        self.key
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_vector(self.key, self.values.map(f))
    }

    pub fn scale(&self, c: f64) -> Field {
        Field::from_vector(self.key, &self.values * c)
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.key.ensure_same(&other.key)?;
        let v = self.values.zip_map(&other.values, f);
        Ok(Field::from_vector(self.key, v))
    }

    /// `self + c * other`, in place.
    pub fn axpy(&mut self, c: f64, other: &Field) {
        assert_eq!(self.key, other.key, "axpy across grids");
        self.values.axpy(c, &other.values, 1.0);
    }
}

macro_rules! field_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Field> for &Field {
            type Output = Field;
            fn $method(self, rhs: &Field) -> Field {
                assert_eq!(self.key, rhs.key, "field arithmetic across grids");
                Field::from_vector(self.key, &self.values $op &rhs.values)
            }
        }
        impl $trait<Field> for Field {
            type Output = Field;
            fn $method(self, rhs: Field) -> Field {
                (&self) $op (&rhs)
            }
        }
    };
}
field_binop!(Add, add, +);
field_binop!(Sub, sub, -);

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, c: f64) -> Field {
        self.scale(c)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}

/// A pair of fields: position and velocity components, e.g. `(w, dw/ds)`
/// or `(q1, q2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub first: Field,
    pub second: Field,
}

impl StatePair {
    pub fn new(first: Field, second: Field) -> Result<Self> {
        first.key.ensure_same(&second.key)?;
        Ok(Self { first, second })
    }

    pub fn key(&self) -> GridKey {
        self.first.key
    }

    pub fn is_finite(&self) -> bool {
        self.first.is_finite() && self.second.is_finite()
    }

    pub fn scale(&self, c: f64) -> StatePair {
        StatePair { first: self.first.scale(c), second: self.second.scale(c) }
    }

    pub fn axpy(&mut self, c: f64, other: &StatePair) {
        self.first.axpy(c, &other.first);
        self.second.axpy(c, &other.second);
    }

    pub fn checked_sub(&self, other: &StatePair) -> Result<StatePair> {
        self.key().ensure_same(&other.key())?;
        Ok(self - other)
    }
}

impl Add<&StatePair> for &StatePair {
    type Output = StatePair;
    fn add(self, rhs: &StatePair) -> StatePair {
        StatePair { first: &self.first + &rhs.first, second: &self.second + &rhs.second }
    }
}

impl Sub<&StatePair> for &StatePair {
    type Output = StatePair;
    fn sub(self, rhs: &StatePair) -> StatePair {
        StatePair { first: &self.first - &rhs.first, second: &self.second - &rhs.second }
    }
}

impl Mul<f64> for &StatePair {
    type Output = StatePair;
    fn mul(self, c: f64) -> StatePair {
        self.scale(c)
    }
}
