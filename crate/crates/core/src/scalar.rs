//! Floating point abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use num_traits::{Float, FromPrimitive, NumAssign, NumCast};

/// Real scalar usable for embedding storage and association measures.
///
/// `Atomic` is the lock-free cell type used when several training workers
/// update the same parameter rows.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    type Atomic: Send + Sync;

    fn new_atomic(self) -> Self::Atomic;
    fn load(cell: &Self::Atomic) -> Self;
    fn store(cell: &Self::Atomic, value: Self);

    /// Lossy conversion from `f64`; never fails for finite input.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    type Atomic = AtomicU32;

    fn new_atomic(self) -> AtomicU32 {
        AtomicU32::new(self.to_bits())
    }

    #[inline]
    fn load(cell: &AtomicU32) -> f32 {
        f32::from_bits(cell.load(Ordering::Relaxed))
    }

    #[inline]
    fn store(cell: &AtomicU32, value: f32) {
        cell.store(value.to_bits(), Ordering::Relaxed)
    }
}

impl Scalar for f64 {
    type Atomic = AtomicU64;

    fn new_atomic(self) -> AtomicU64 {
        AtomicU64::new(self.to_bits())
    }

    #[inline]
    fn load(cell: &AtomicU64) -> f64 {
        f64::from_bits(cell.load(Ordering::Relaxed))
    }

    #[inline]
    fn store(cell: &AtomicU64, value: f64) {
        cell.store(value.to_bits(), Ordering::Relaxed)
    }
}

#[inline]
pub fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    debug_assert_eq!(u.len(), v.len());
    let mut acc = T::zero();
    for (a, b) in u.iter().zip(v) {
        acc += *a * *b;
    }
    acc
}

#[inline]
pub fn norm<T: Scalar>(u: &[T]) -> T {
    dot(u, u).sqrt()
}

/// Arithmetic mean; `None` for an empty iterator.
pub fn mean<T: Scalar>(values: impl IntoIterator<Item = T>) -> Option<T> {
    let mut n = 0usize;
    let mut sum = T::zero();
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / T::of(n as f64))
}

/// Population (biased) standard deviation; `None` for an empty slice.
pub fn population_std<T: Scalar>(values: &[T]) -> Option<T> {
    let m = mean(values.iter().copied())?;
    let var = values.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / T::of(values.len() as f64);
    Some(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_round_trip() {
        let c = 1.25f32.new_atomic();
        f32::store(&c, -3.5);
        assert_eq!(f32::load(&c), -3.5);
        let c = 0.1f64.new_atomic();
        assert_eq!(f64::load(&c), 0.1);
    }

    #[test]
    fn population_std_matches_hand_value() {
        let v = [1.0f64, -1.0, 1.0, -1.0];
        assert_eq!(population_std(&v), Some(1.0));
        assert_eq!(mean(Vec::<f64>::new()), None);
    }
}
