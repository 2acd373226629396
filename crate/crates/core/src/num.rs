//! Scalar abstraction and the small statistical kernel shared by the
//! normalisation, inequality and similarity code.
//!
//! Everything here is generic over [`Scalar`] so the same routines run on
//! `f32` and `f64`; the pipeline itself works in [`crate::Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the numeric kernel: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from a count or index.
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::max_value)
    }

    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let sum: T = values.iter().copied().sum();
    Some(sum / T::from_usize_lossy(values.len()))
}

/// Population standard deviation; `None` for an empty slice.
pub fn population_sd<T: Scalar>(values: &[T]) -> Option<T> {
    let mu = mean(values)?;
    let var: T = values.iter().map(|&x| (x - mu) * (x - mu)).sum::<T>()
        / T::from_usize_lossy(values.len());
    Some(var.sqrt())
}

/// Shannon entropy of a count distribution divided by `ln(support_size)`.
///
/// Returns 0 for an empty or single-outcome distribution. When
/// `support_size <= 1` the maximum entropy is zero; any non-empty
/// distribution is then reported as fully diverse (1).
pub fn normalized_entropy<T: Scalar>(counts: &[T], support_size: usize) -> T {
    let total: T = counts.iter().copied().filter(|c| *c > T::zero()).sum();
    if total <= T::zero() {
        return T::zero();
    }
    if support_size <= 1 {
        return T::one();
    }
    let h = counts
        .iter()
        .copied()
        .filter(|c| *c > T::zero())
        .map(|c| {
            let p = c / total;
            -p * p.ln()
        })
        .sum::<T>();
    let h_max = T::from_usize_lossy(support_size).ln();
    (h / h_max).max(T::zero()).min(T::one())
}

/// Cosine similarity; `None` when either vector has zero norm or the
/// dimensions differ.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Option<T> {
    if a.len() != b.len() {
        return None;
    }
    let dot: T = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: T = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let nb: T = b.iter().map(|&x| x * x).sum::<T>().sqrt();
    if na <= T::zero() || nb <= T::zero() {
        return None;
    }
    Some((dot / (na * nb)).max(-T::one()).min(T::one()))
}

/// Affine map of a cosine from `[-1, 1]` onto `[0, 1]`.
pub fn map_cosine<T: Scalar>(c: T) -> T {
    let two = T::one() + T::one();
    ((c + T::one()) / two).max(T::zero()).min(T::one())
}

/// Length of the union of closed intervals, each clipped to `[lo, hi]`.
pub fn interval_union_length<T: Scalar>(intervals: &[(T, T)], lo: T, hi: T) -> T {
    let mut clipped: Vec<(T, T)> = intervals
        .iter()
        .map(|&(a, b)| (a.max(lo), b.min(hi)))
        .filter(|(a, b)| b > a)
        .collect();
    clipped.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut total = T::zero();
    let mut current: Option<(T, T)> = None;
    for (a, b) in clipped {
        match current {
            Some((ca, cb)) if a <= cb => current = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total = total + (cb - ca);
                current = Some((a, b));
            }
            None => current = Some((a, b)),
        }
    }
    if let Some((ca, cb)) = current {
        total = total + (cb - ca);
    }
    total
}
