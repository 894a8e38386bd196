//! Cavity message updates for the monomer–dimer model on the clause–qubit
//! incidence graph.
//!
//! Every bond `α = (a, i)` carries four occupation probabilities. Only two are
//! independent: `l_{α→i} = q_{a→α}` and `l_{α→a} = q_{i→α}`.

use serde::{Deserialize, Serialize};

use crate::scalar::{odds, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageRole {
    /// `q_{i→α}`: bond occupied, clause removed.
    QubitToBond,
    /// `l_{α→i}`: equals `q_{a→α}`.
    BondToQubit,
    /// `q_{a→α}`: bond occupied, qubit removed.
    ClauseToBond,
    /// `l_{α→a}`: equals `q_{i→α}`.
    BondToClause,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message<T> {
    pub value: T,
    pub role: MessageRole,
}

impl<T: Scalar> Message<T> {
    pub fn new(value: T, role: MessageRole) -> Self {
        Self { value, role }
    }

    pub fn in_range(&self) -> bool {
        self.value >= T::zero() && self.value <= T::one()
    }
}

/// `λ / (1 + λ + Σ_β l_β/(1-l_β))`, shared by both vertex types.
///
/// An incoming `l = 1` means the other bond is surely occupied, which forces
/// this bond empty: the result is 0.
#[inline]
pub fn update_q<T: Scalar, I: IntoIterator<Item = T>>(incoming: I, lambda: T) -> T {
    let mut sum = T::zero();
    for l in incoming {
        if l >= T::one() {
            return T::zero();
        }
        sum = sum + odds(l);
    }
    let q = lambda / (T::one() + lambda + sum);
    q.max(T::zero()).min(T::one())
}

/// `q_{i→α}` from the `l_{β→i}` of the qubit's other `d-1` bonds.
#[inline]
pub fn update_q_i<T: Scalar, I: IntoIterator<Item = T>>(l_from_other_bonds: I, lambda: T) -> T {
    update_q(l_from_other_bonds, lambda)
}

/// `q_{a→α}` from the `l_{β→a}` of the clause's other `k-1` bonds.
#[inline]
pub fn update_q_a<T: Scalar, I: IntoIterator<Item = T>>(l_from_other_bonds: I, lambda: T) -> T {
    update_q(l_from_other_bonds, lambda)
}

/// `(P[none occupied], P[exactly one occupied])` at a vertex, unnormalized,
/// given the occupation probabilities of its incoming bonds.
pub fn vertex_weights<T: Scalar>(ls: &[T]) -> (T, T) {
    // running (p0, p1) over the bonds seen so far
    let mut p0 = T::one();
    let mut p1 = T::zero();
    for &l in ls {
        p1 = p1 * (T::one() - l) + p0 * l;
        p0 = p0 * (T::one() - l);
    }
    (p0, p1)
}

/// `F_a` / `F_i`: log of the vertex partition sum.
pub fn vertex_term<T: Scalar>(ls: &[T]) -> T {
    let (p0, p1) = vertex_weights(ls);
    (p0 + p1).ln()
}

/// `F_α`, `F_{iα}` and `F_{aα}` share this form:
/// `log[(1-x)(1-y) + x y / λ]`.
pub fn edge_term<T: Scalar>(x: T, y: T, lambda: T) -> T {
    ((T::one() - x) * (T::one() - y) + x * y / lambda).ln()
}

/// Average dimer occupation of a clause given its incoming `l_{β→a}`.
pub fn clause_occupancy<T: Scalar>(ls: &[T]) -> T {
    let (p0, p1) = vertex_weights(ls);
    let z = p0 + p1;
    if z <= T::zero() {
        // every incoming bond saturated
        T::one()
    } else {
        p1 / z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cavity() {
        let q: f64 = update_q_i(std::iter::empty(), 2.0);
        assert!((q - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn large_fugacity_limit() {
        let q: f64 = update_q_i([0.0, 0.0], 1e12);
        assert!((q - 1.0).abs() < 1e-11);
        let q: f64 = update_q_a([0.3, 0.5], 1e12);
        assert!((q - 1.0).abs() < 1e-11);
    }

    #[test]
    fn one_neighbor_at_half() {
        let q: f64 = update_q_i([0.5], 1.0);
        assert!((q - 1.0 / 3.0).abs() < 1e-15);
        let q: f64 = update_q_a([0.0, 0.0], 1.0);
        assert!((q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn saturated_neighbor_blocks_the_bond() {
        assert_eq!(update_q_i([0.2f64, 1.0], 5.0), 0.0);
    }

    #[test]
    fn vertex_weights_enumerate_zero_or_one() {
        let ls = [0.1f64, 0.4, 0.7];
        let (p0, p1) = vertex_weights(&ls);
        assert!((p0 - 0.9 * 0.6 * 0.3).abs() < 1e-15);
        let brute = 0.1 * 0.6 * 0.3 + 0.9 * 0.4 * 0.3 + 0.9 * 0.6 * 0.7;
        assert!((p1 - brute).abs() < 1e-15);
        assert_eq!(clause_occupancy(&[0.0f64; 3]), 0.0);
        assert_eq!(clause_occupancy(&[1.0f64; 3]), 1.0);
    }

    #[test]
    fn f32_messages() {
        let q: f32 = update_q_i([0.5f32], 1.0);
        assert!((q - 1.0 / 3.0).abs() < 1e-6);
    }
}
