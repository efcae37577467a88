/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for the relative error, so entries whose true
/// gradient is zero are compared absolutely.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

/// Compare `analytic` against central finite differences of the scalar
/// function `f` at `input`. The relative error per entry is
/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn grad_check<F>(mut f: F, input: &[f64], analytic: &[f64], tolerance: f64) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(input.len(), analytic.len(), "gradient length must match input");
    let mut x = input.to_vec();
    let mut worst = (0.0, 0);
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let fp = f(&x);
        x[i] = orig - FD_STEP;
        let fm = f(&x);
        x[i] = orig;
        let numeric = (fp - fm) / (2.0 * FD_STEP);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        if err > worst.0 || err.is_nan() {
            worst = (if err.is_nan() { f64::INFINITY } else { err }, i);
        }
    }
    GradCheckReport {
        max_rel_error: worst.0,
        worst_index: worst.1,
        checked: x.len(),
        tolerance,
    }
}
