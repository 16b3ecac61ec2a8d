//! Compensated (Neumaier) summation.
//!
//! Estimator accumulation must not depend on how replications are batched
//! across workers, so all reductions run over slices in index order with
//! a compensated accumulator.

/// Neumaier variant of Kahan summation: like Kahan, but also tracks the
/// compensation when the incoming term is larger than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice in index order.
pub fn sum(xs: &[f64]) -> f64 {
    let mut acc = Kahan::new();
    for &x in xs {
        acc.add(x);
    }
    acc.total()
}

/// Compensated sum of `f(x)` over a slice in index order.
pub fn sum_by<T>(xs: &[T], f: impl Fn(&T) -> f64) -> f64 {
    let mut acc = Kahan::new();
    for x in xs {
        acc.add(f(x));
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancellation() {
        // 1 + 1e16 - 1e16 = 1 exactly under compensation
        let xs = [1.0, 1e16, -1e16];
        assert_eq!(sum(&xs), 1.0);
    }

    #[test]
    fn matches_naive_on_benign_input() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((sum(&xs) - naive).abs() < 1e-10);
    }
}
