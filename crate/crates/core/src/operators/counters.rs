use serde::{Deserialize, Serialize};

use super::vector::{dot, norm2, DenseVector};

/// Operation counters for one solve.
///
/// Every counted kernel a solver uses goes through these methods, so the
/// totals are the solver's actual work. The categories follow the usual
/// per-iteration cost table for Krylov methods:
///
/// - `matvecs`: applications of `S` (and hence of `A` or `Aᵀ`).
/// - `vector_updates`: one pass writing a length-n vector from a linear
///   combination of vectors (axpy, scale, copy and fused combinations each
///   count once).
/// - `inner_products`: dots and norms of length-n vectors.
/// - `peak_vectors`: the largest number of simultaneously live working
///   vectors obtained through [`OpCounters::alloc`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub matvecs: u64,
    pub vector_updates: u64,
    pub inner_products: u64,
    pub peak_vectors: u64,
    #[serde(skip)]
    live_vectors: u64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn live_vectors(&self) -> u64 {
        self.live_vectors
    }

    /// Work done since `earlier` (peak and live counts are taken from `self`).
    pub fn since(&self, earlier: &OpCounters) -> OpCounters {
        OpCounters {
            matvecs: self.matvecs - earlier.matvecs,
            vector_updates: self.vector_updates - earlier.vector_updates,
            inner_products: self.inner_products - earlier.inner_products,
            peak_vectors: self.peak_vectors,
            live_vectors: self.live_vectors,
        }
    }

    /// Allocates a zeroed working vector and tracks it as live.
    pub fn alloc(&mut self, n: usize) -> DenseVector {
        self.live_vectors += 1;
        self.peak_vectors = self.peak_vectors.max(self.live_vectors);
        DenseVector::zeros(n)
    }

    /// Ends tracking of a working vector obtained from [`OpCounters::alloc`].
    pub fn release(&mut self, v: DenseVector) {
        debug_assert!(self.live_vectors > 0);
        self.live_vectors = self.live_vectors.saturating_sub(1);
        drop(v);
    }

    pub(crate) fn count_matvec(&mut self) {
        self.matvecs += 1;
    }

    pub fn dot(&mut self, x: &[f64], y: &[f64]) -> f64 {
        self.inner_products += 1;
        dot(x, y)
    }

    pub fn norm(&mut self, x: &[f64]) -> f64 {
        self.inner_products += 1;
        norm2(x)
    }

    /// `y += a·x`
    pub fn axpy(&mut self, a: f64, x: &[f64], y: &mut [f64]) {
        self.vector_updates += 1;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += a * xi;
        }
        debug_assert!(y.iter().all(|v| v.is_finite()));
    }

    /// `x *= a`
    pub fn scale(&mut self, a: f64, x: &mut [f64]) {
        self.vector_updates += 1;
        x.iter_mut().for_each(|v| *v *= a);
        debug_assert!(x.iter().all(|v| v.is_finite()));
    }

    /// `y = a·x + b·y`
    pub fn lincomb(&mut self, a: f64, x: &[f64], b: f64, y: &mut [f64]) {
        self.vector_updates += 1;
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = a * xi + b * *yi;
        }
        debug_assert!(y.iter().all(|v| v.is_finite()));
    }

    /// `z = a·x + b·y + c·z`
    pub fn lincomb3(&mut self, a: f64, x: &[f64], b: f64, y: &[f64], c: f64, z: &mut [f64]) {
        self.vector_updates += 1;
        for ((zi, xi), yi) in z.iter_mut().zip(x).zip(y) {
            *zi = a * xi + b * yi + c * *zi;
        }
        debug_assert!(z.iter().all(|v| v.is_finite()));
    }

    /// `dst = src`
    pub fn copy(&mut self, src: &[f64], dst: &mut [f64]) {
        self.vector_updates += 1;
        dst.copy_from_slice(src);
    }
}
