//! Fuzzes the expression parser: no panics on arbitrary input, and any
//! expression that parses must render to text that reparses to the same
//! tree (print/parse fixpoint). Accepted expressions are also evaluated to
//! check that evaluation never panics.

#![no_main]

use libfuzzer_sys::fuzz_target;

const VARS: [&str; 3] = ["N1", "N2", "F"];
const PARAMS: [&str; 4] = ["m", "alpha1", "beta", "rho"];

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(expr) = jetlag::vfexpr::parse(src, &VARS, &PARAMS) else {
        return;
    };
    let printed = expr.to_string();
    let reparsed = jetlag::vfexpr::parse(&printed, &VARS, &PARAMS)
        .unwrap_or_else(|e| panic!("rendering `{printed}` failed to reparse: {e}"));
    assert_eq!(expr, reparsed, "print/parse fixpoint violated for `{printed}`");
    // evaluation may fail (domain errors) but must not panic
    let _ = jetlag::vfexpr::eval(&expr, &[1.0, 2.0, 0.5], &[3.0, 1.0, 0.2, 0.3]);
    let _ = jetlag::vfexpr::eval_dual(&expr, &[1.0, 2.0, 0.5], &[3.0, 1.0, 0.2, 0.3], 0);
});
