//! Reflection geometry for a start pair `(x, y)`.
//!
//! The mirror plane `H = {z : |x - z| = |y - z|}` is stored as a unit normal
//! `e = (x - y)/|x - y|` together with its level `m = <(x + y)/2, e>`, so the
//! reflection reads `R z = z - 2(<z, e> - m) e`. A pair with `x == y` (bit
//! exact) gives a degenerate frame whose reflection is the identity.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use crate::error::{Error, Result};

/// A point or displacement in `R^d`.
#[derive(Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting empty or non-finite input.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::usage("vector dimension must be at least 1"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::usage("vector coordinates must be finite"));
        }
        Ok(Vector(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    /// Unit vector along axis `axis`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Vector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        let plain = self.dot(self).sqrt();
        if plain.is_normal() && plain > 1e-150 && plain < 1e150 {
            return plain;
        }
        // Rescale to dodge underflow or overflow of the squares.
        let big = self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if big == 0.0 || !big.is_finite() {
            return big;
        }
        big * self.0.iter().map(|v| (v / big) * (v / big)).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, k: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * k).collect())
    }

    /// `self + k * other`.
    pub fn axpy(&self, k: f64, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + k * b).collect())
    }

    pub fn neg(&self) -> Vector {
        self.scale(-1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add<&Vector> for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&Vector> for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, k: f64) -> Vector {
        self.scale(k)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

pub(crate) fn check_same_dim(a: &Vector, b: &Vector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::usage(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Geometry of the mirror plane between `x` and `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct MirrorFrame {
    x: Vector,
    y: Vector,
    normal: Vector,
    mid_level: f64,
    half_gap: f64,
    degenerate: bool,
}

impl MirrorFrame {
    pub fn x(&self) -> &Vector {
        &self.x
    }

    pub fn y(&self) -> &Vector {
        &self.y
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Unit normal pointing from `y` towards `x`; `None` for a degenerate frame.
    pub fn normal(&self) -> Option<&Vector> {
        (!self.degenerate).then_some(&self.normal)
    }

    /// Level of the plane along the normal; `None` for a degenerate frame.
    pub fn mid_level(&self) -> Option<f64> {
        (!self.degenerate).then_some(self.mid_level)
    }

    /// `|x - y| / 2`, the distance from either start point to the plane.
    pub fn half_gap(&self) -> f64 {
        self.half_gap
    }

    /// Signed distance of `z` to the plane, positive on the side of `x`.
    pub fn signed_distance(&self, z: &Vector) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        z.dot(&self.normal) - self.mid_level
    }

    pub fn on_plane(&self, z: &Vector, tol: f64) -> bool {
        self.signed_distance(z).abs() <= tol
    }
}

/// Builds the frame of the pair `(x, y)`.
pub fn make_frame(x: &Vector, y: &Vector) -> Result<MirrorFrame> {
    check_same_dim(x, y)?;
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::usage("frame points must be finite"));
    }
    let diff = x - y;
    let gap = diff.norm();
    // Only an exact match is degenerate; near-coincident pairs keep their normal.
    if x == y {
        return Ok(MirrorFrame {
            x: x.clone(),
            y: y.clone(),
            normal: Vector::zeros(x.dim()),
            mid_level: 0.0,
            half_gap: 0.0,
            degenerate: true,
        });
    }
    let normal = diff.scale(1.0 / gap);
    let mid_level = 0.5 * (x.dot(&normal) + y.dot(&normal));
    Ok(MirrorFrame {
        x: x.clone(),
        y: y.clone(),
        normal,
        mid_level,
        half_gap: 0.5 * gap,
        degenerate: false,
    })
}

/// Reflects `z` across the mirror plane. Identity for a degenerate frame.
pub fn reflect(frame: &MirrorFrame, z: &Vector) -> Result<Vector> {
    if z.dim() != frame.dim() {
        return Err(Error::usage(format!(
            "dimension mismatch: frame {} vs point {}",
            frame.dim(),
            z.dim()
        )));
    }
    Ok(reflect_unchecked(frame, z))
}

#[inline]
pub(crate) fn reflect_unchecked(frame: &MirrorFrame, z: &Vector) -> Vector {
    if frame.degenerate {
        return z.clone();
    }
    let k = -2.0 * (z.dot(&frame.normal) - frame.mid_level);
    z.axpy(k, &frame.normal)
}

/// Reflection across the plane through the origin parallel to the mirror
/// plane. Maps an increment of the first leg onto the increment of the second.
pub fn reflect_linear(frame: &MirrorFrame, w: &Vector) -> Vector {
    if frame.degenerate {
        return w.clone();
    }
    w.axpy(-2.0 * w.dot(&frame.normal), &frame.normal)
}

/// Splits `z` into its coordinate along the normal and the orthogonal rest.
pub fn decompose(frame: &MirrorFrame, z: &Vector) -> Result<(f64, Vector)> {
    if frame.degenerate {
        return Err(Error::usage("cannot decompose along a degenerate frame"));
    }
    if z.dim() != frame.dim() {
        return Err(Error::usage("dimension mismatch in decompose"));
    }
    let u = z.dot(&frame.normal);
    Ok((u, z.axpy(-u, &frame.normal)))
}
