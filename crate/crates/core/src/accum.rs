/// Neumaier-compensated accumulator.
///
/// Keeps a running correction term so that sums of many terms, or sums
/// with heavy cancellation (covariance assembly), stay accurate to a few
/// ulps instead of drifting with the term count.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        // whichever operand is larger in magnitude donated the rounding error
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
