//! Two-dimensional FFT helpers on row-major buffers.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64 as c64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Unnormalized 2D transform of an `rows × cols` row-major buffer.
pub fn fft2(buf: &mut [c64], rows: usize, cols: usize, inverse: bool) {
    assert_eq!(buf.len(), rows * cols);
    let row_plan = plan(cols, inverse);
    let mut scratch = vec![c64::new(0.0, 0.0); row_plan.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(cols) {
        row_plan.process_with_scratch(row, &mut scratch);
    }
    let col_plan = plan(rows, inverse);
    let mut scratch = vec![c64::new(0.0, 0.0); col_plan.get_inplace_scratch_len()];
    let mut col = vec![c64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = buf[r * cols + c];
        }
        col_plan.process_with_scratch(&mut col, &mut scratch);
        for r in 0..rows {
            buf[r * cols + c] = col[r];
        }
    }
}
