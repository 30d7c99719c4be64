//! Verifies each manufactured case by finite differences: fourth-order
//! stencils applied to the exact fields must reproduce the stated sources at
//! random space-time points, so a sign slip or dropped term in the
//! hand-derived data would surface here.

mod support;

use biotfe::casebiot::{biot_sine_case, polynomial_case};
use support::check_case_residuals;

#[test]
fn trigonometric_case_sources_balance_the_exact_fields() {
    check_case_residuals(&biot_sine_case(), 3e-3, 1e-6, 2024);
}

#[test]
fn polynomial_case_sources_balance_the_exact_fields() {
    for k in 1..=3 {
        check_case_residuals(&polynomial_case(k), 1e-2, 1e-10, 77 + k as u64);
    }
}
