use std::sync::Mutex;

use num_complex::Complex64;
use rustfft::FftPlanner;
use shadow_core::fourier::FftBackend;

/// `FftBackend` over rustfft; plans are cached across calls.
pub struct RustFft {
    planner: Mutex<FftPlanner<f64>>,
}

impl RustFft {
    pub fn new() -> Self {
        Self {
            planner: Mutex::new(FftPlanner::new()),
        }
    }
}

impl Default for RustFft {
    fn default() -> Self {
        Self::new()
    }
}

impl FftBackend for RustFft {
    fn forward(&self, data: &mut [Complex64]) {
        let plan = self.planner.lock().expect("fft planner poisoned").plan_fft_forward(data.len());
        plan.process(data);
    }
}
