//! Similarity measures and the truncated connectivity kernels.

use crate::error::{check_dim, Error, Result};

/// How the recommender measures similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Euclidean distance, linked within radius `sqrt(m) * (1 - epsilon)`.
    Distance,
    /// Cosine similarity, linked when similarity is at least `epsilon`.
    Angle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    pub method: Method,
    epsilon: f64,
}

impl KernelConfig {
    pub fn new(method: Method, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: epsilon,
            });
        }
        Ok(Self { method, epsilon })
    }

    pub fn distance(epsilon: f64) -> Result<Self> {
        Self::new(Method::Distance, epsilon)
    }

    pub fn angle(epsilon: f64) -> Result<Self> {
        Self::new(Method::Angle, epsilon)
    }

    /// Distance kernel parameterized by its radius `sqrt(m) * (1 - epsilon)`.
    pub fn from_radius(radius: f64, m: usize) -> Result<Self> {
        let root_m = libm::sqrt(m as f64);
        if !(0.0..=root_m).contains(&radius) {
            return Err(Error::OutOfRange {
                what: "radius",
                value: radius,
            });
        }
        Self::distance(1.0 - radius / root_m)
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Connection radius of the distance kernel in dimension `m`.
    #[inline]
    pub fn radius(&self, m: usize) -> f64 {
        libm::sqrt(m as f64) * (1.0 - self.epsilon)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `‖a − b‖₂`.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim("opinion vector", a.len(), b.len())?;
    Ok(distance_unchecked(a, b))
}

#[inline]
pub(crate) fn distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Cosine of the angle between `a` and `b`, clamped to `[0, 1]`.
///
/// Returns 0 when either vector has zero norm; callers that need a self-loop
/// for zero opinions add it themselves.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim("opinion vector", a.len(), b.len())?;
    Ok(cosine_with_norms(a, b, norm(a), norm(b)))
}

#[inline]
pub(crate) fn cosine_with_norms(a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(0.0, 1.0)
}

/// Degree of connectivity `s(a, b)`: 1/0 indicator for the distance kernel,
/// truncated cosine similarity for the angle kernel. Both thresholds are
/// inclusive.
pub fn connectivity(a: &[f64], b: &[f64], cfg: &KernelConfig) -> Result<f64> {
    check_dim("opinion vector", a.len(), b.len())?;
    Ok(match cfg.method {
        Method::Distance => distance_link(distance_unchecked(a, b), cfg.radius(a.len())),
        Method::Angle => angle_link(cosine_with_norms(a, b, norm(a), norm(b)), cfg.epsilon),
    })
}

#[inline]
pub(crate) fn distance_link(dist: f64, radius: f64) -> f64 {
    if dist <= radius {
        1.0
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn angle_link(sim: f64, epsilon: f64) -> f64 {
    if sim >= epsilon {
        sim
    } else {
        0.0
    }
}

/// Precomputes row norms so the pairwise kernel over a fixed set of vectors
/// costs one dot product per pair.
pub(crate) struct Kernel<'a> {
    cfg: &'a KernelConfig,
    radius: f64,
}

impl<'a> Kernel<'a> {
    pub(crate) fn new(cfg: &'a KernelConfig, m: usize) -> Self {
        Self {
            cfg,
            radius: cfg.radius(m),
        }
    }

    /// `s(a, b)` for distinct vectors (no self-loop rule).
    #[inline]
    pub(crate) fn pair(&self, a: &[f64], na: f64, b: &[f64], nb: f64) -> f64 {
        match self.cfg.method {
            Method::Distance => distance_link(distance_unchecked(a, b), self.radius),
            Method::Angle => angle_link(cosine_with_norms(a, b, na, nb), self.cfg.epsilon),
        }
    }

    /// `s(x_i, x_i)`: 1 for both kernels. A zero opinion under the angle
    /// kernel has no defined similarity and links only to itself.
    #[inline]
    pub(crate) fn self_loop(&self) -> f64 {
        1.0
    }
}
