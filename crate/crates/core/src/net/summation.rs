use serde::{Deserialize, Serialize};

/// How a list of terms is reduced to a scalar.
///
/// `Canonical` sorts the terms before adding them, so the result depends only
/// on the multiset of terms and not on their order. Lattice evaluations use it
/// to make scalars bitwise invariant under index rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Summation {
    #[default]
    Sequential,
    Canonical,
}

impl Summation {
    pub fn sum(self, mut terms: Vec<f64>) -> f64 {
        if self == Summation::Canonical {
            terms.sort_by(f64::total_cmp);
        }
        let mut acc = 0.0;
        for t in terms {
            acc += t;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sum_ignores_order() {
        let a = vec![1e16, 1.0, -1e16, 3.5, 1e-3];
        let mut b = a.clone();
        b.rotate_left(2);
        assert_eq!(
            Summation::Canonical.sum(a).to_bits(),
            Summation::Canonical.sum(b).to_bits()
        );
    }
}
