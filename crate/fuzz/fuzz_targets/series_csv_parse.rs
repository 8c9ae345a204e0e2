#![no_main]

use libfuzzer_sys::fuzz_target;
use nsp_stab::report::{encode_series, parse_series, SeriesRow};

fn same(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

fn same_row(a: &SeriesRow, b: &SeriesRow) -> bool {
    let opt = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => same(x, y),
        (x, y) => x.is_none() && y.is_none(),
    };
    same(a.t, b.t)
        && same(a.e, b.e)
        && same(a.d, b.d)
        && same(a.mass_defect, b.mass_defect)
        && opt(a.imp1_ratio, b.imp1_ratio)
        && opt(a.identity_residual, b.identity_residual)
}

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_series(data) {
        let again = parse_series(&encode_series(&rows).expect("encodable")).expect("re-parses");
        assert_eq!(rows.len(), again.len());
        assert!(rows.iter().zip(&again).all(|(a, b)| same_row(a, b)));
    }
});
