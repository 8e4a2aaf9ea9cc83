//! Partial and complete realizations of the information process.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::keyed::fold_words;

/// One period's information `M_t`: `D` real numbers.
pub type Observation = Vec<f64>;

/// The first `t` observations of a realization.
///
/// Identity is the canonical serialization of the `D x t` observation matrix
/// (little-endian IEEE-754 bits, period-major). Truncations share storage
/// with the path they were cut from, so `S'^t` for a simulated `S'` is free.
#[derive(Clone)]
pub struct Prefix {
    dim: usize,
    len: usize,
    data: Arc<[f64]>,
}

impl Prefix {
    /// The empty prefix (no period revealed yet).
    pub fn empty(dim: usize) -> Self {
        Self { dim, len: 0, data: Arc::from(Vec::new()) }
    }

    pub fn from_observations<I>(dim: usize, observations: I) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<[f64]>,
    {
        let mut data = Vec::new();
        let mut len = 0;
        for obs in observations {
            let obs = obs.as_ref();
            assert_eq!(obs.len(), dim, "observation length must equal the process dimension");
            data.extend_from_slice(obs);
            len += 1;
        }
        Self { dim, len, data: Arc::from(data) }
    }

    /// Build from a flat period-major buffer holding `len` observations.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "flat buffer is not a whole number of observations");
        let len = data.len() / dim;
        Self { dim, len, data: Arc::from(data) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of revealed periods `t`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The observation of period `p` (0-based).
    pub fn observation(&self, p: usize) -> &[f64] {
        assert!(p < self.len, "period {p} beyond prefix length {}", self.len);
        &self.data[p * self.dim..(p + 1) * self.dim]
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.len.checked_sub(1).map(|p| self.observation(p))
    }

    pub fn observations(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len).map(move |p| self.observation(p))
    }

    pub fn values(&self) -> &[f64] {
        &self.data[..self.len * self.dim]
    }

    /// The length-`t` prefix `S^t`. Shares storage with `self`.
    pub fn truncate(&self, t: usize) -> Prefix {
        assert!(t <= self.len, "cannot truncate a length-{} prefix to {t}", self.len);
        Prefix { dim: self.dim, len: t, data: Arc::clone(&self.data) }
    }

    /// `self ⊆ other`: `self` is a truncation of `other`.
    pub fn is_prefix_of(&self, other: &Prefix) -> bool {
        self.dim == other.dim
            && self.len <= other.len
            && bits_eq(self.values(), &other.values()[..self.len * self.dim])
    }

    /// Append one observation (copies the buffer).
    pub fn extend(&self, obs: &[f64]) -> Prefix {
        assert_eq!(obs.len(), self.dim, "observation length must equal the process dimension");
        let mut data = Vec::with_capacity((self.len + 1) * self.dim);
        data.extend_from_slice(self.values());
        data.extend_from_slice(obs);
        Prefix { dim: self.dim, len: self.len + 1, data: Arc::from(data) }
    }

    /// Canonical byte serialization used for identity.
    pub fn key_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.values().len() * 8);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len as u32).to_le_bytes());
        for v in self.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Stable 64-bit digest of the canonical serialization, used to address
    /// per-prefix random streams. Not used for identity.
    pub fn fingerprint(&self) -> u64 {
        fold_words(
            ((self.dim as u64) << 32) | self.len as u64,
            self.values().iter().map(|v| v.to_bits()),
        )
    }
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

impl PartialEq for Prefix {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.len == other.len && bits_eq(self.values(), other.values())
    }
}

impl Eq for Prefix {}

impl Hash for Prefix {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_usize(self.dim);
        state.write_usize(self.len);
        for v in self.values() {
            state.write_u64(v.to_bits());
        }
    }
}

impl fmt::Debug for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Prefix[")?;
        for (p, obs) in self.observations().enumerate() {
            if p > 0 {
                f.write_str(" | ")?;
            }
            for (j, v) in obs.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}")?;
            }
        }
        f.write_str("]")
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A complete realization `S ∈ 𝓢` (exactly `T` periods).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trajectory(Prefix);

impl Trajectory {
    /// Wrap a prefix of full length. Returns `None` if `path.len() != horizon`.
    pub fn new(path: Prefix, horizon: usize) -> Option<Self> {
        (path.len() == horizon).then_some(Self(path))
    }

    pub fn horizon(&self) -> usize {
        self.0.len()
    }

    pub fn as_prefix(&self) -> &Prefix {
        &self.0
    }

    /// `S^t` for `t ∈ 0..=T`.
    pub fn prefix(&self, t: usize) -> Prefix {
        self.0.truncate(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn truncation_identity() {
        let p = Prefix::from_observations(2, [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let q = Prefix::from_observations(2, [[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(p.truncate(2), q);
        assert_ne!(p, q);
        assert!(q.is_prefix_of(&p));
        assert!(!p.is_prefix_of(&q));
        let mut set = HashSet::new();
        set.insert(p.truncate(2));
        assert!(set.contains(&q));
        assert_eq!(p.truncate(2).fingerprint(), q.fingerprint());
        assert_eq!(p.truncate(2).key_bytes(), q.key_bytes());
    }

    #[test]
    fn signed_zero_is_a_different_prefix() {
        let a = Prefix::from_observations(1, [[0.0]]);
        let b = Prefix::from_observations(1, [[-0.0]]);
        assert_ne!(a, b);
    }

    #[test]
    fn extend_and_empty() {
        let e = Prefix::empty(1);
        assert!(e.is_empty());
        let p = e.extend(&[4.0]).extend(&[5.0]);
        assert_eq!(p.len(), 2);
        assert_eq!(p.observation(1), &[5.0]);
        assert_eq!(p.last(), Some(&[5.0][..]));
        assert!(e.is_prefix_of(&p));
    }
}
