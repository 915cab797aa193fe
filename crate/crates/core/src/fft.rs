//! Row/column FFTs over the flat row-major buffers used by `Signal` and
//! `Spectrum`. Both directions are unnormalized; scaling lives in `signal`.

use std::cell::RefCell;

use rustfft::{FftDirection, FftPlanner};

use crate::signal::{Grid, C64};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn transform(grid: Grid, data: &mut [C64], direction: FftDirection) {
    debug_assert_eq!(data.len(), grid.len());
    let n = grid.n();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction));
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // Last axis is contiguous: every row in one call.
    fft.process_with_scratch(data, &mut scratch);

    if grid.dim() == 2 {
        let mut column = vec![C64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                column[r] = data[r * n + c];
            }
            fft.process_with_scratch(&mut column, &mut scratch);
            for r in 0..n {
                data[r * n + c] = column[r];
            }
        }
    }
}

pub(crate) fn forward(grid: Grid, data: &mut [C64]) {
    transform(grid, data, FftDirection::Forward);
}

pub(crate) fn inverse(grid: Grid, data: &mut [C64]) {
    transform(grid, data, FftDirection::Inverse);
}
