//! Negative controls: perturbing a modulus or a shift in a true record
//! must make verification fail, and fail early (the first mismatching
//! exponent stays small).

use qrr_core::catalog::{parse_catalog, verify_record, VerifyOptions};
use qrr_core::Error;

/// Ten records, each a one-token mutation (modulus or shift) of a
/// shipped identity.
const MUTATED: &str = "\
[id mut-rr-1-modulus]
side sum(n): q^(n^2) / (q;q)_n
side 1 / (q,q^4;q^7)_oo

[id mut-rr-2-shift]
side sum(n): q^(n^2+2*n) / (q;q)_n
side 1 / (q^2,q^3;q^5)_oo

[id mut-slater-16-base]
side sum(n): q^(n^2+2*n) / (q^2;q^2)_n
side 1 / ((q^2,q^3;q^5)_oo * (-q^2;q^2)_oo)

[id mut-slater-20-product]
side sum(n): q^(n^2) / (q^4;q^4)_n
side 1 / ((q,q^3;q^5)_oo * (-q^2;q^2)_oo)

[id mut-double-quad]
side sum(i,j): q^(i^2+2*j^2+2*i*j+2*j) / ((q^2;q^2)_i * (q^4;q^4)_j)
side (-q;q^2)_oo * (q^3,q^4,q^7;q^7)_oo / (q^2;q^2)_oo

[id mut-double-modulus]
side sum(i,j): q^(i^2+2*j^2+2*i*j) / ((q^2;q^2)_i * (q^4;q^4)_j)
side (-q;q^2)_oo * (q^3,q^4,q^9;q^9)_oo / (q^2;q^2)_oo

[id mut-single-shift]
side sum(n): q^(2*n^2+2*n) / (q^4;q^4)_n
side 1 / (q^4;q^8)_oo * q

[id mut-product-residue]
side sum(i,j): (-1)^i * q^(i^2+j^2+2*i*j) / ((q^2;q^2)_i * (q^4;q^4)_j)
side (q^3,q^{11},q^{14},q^{17},q^{25};q^{28})_oo / (q^4,q^{10},q^{16},q^{24};q^{28})_oo

[id mut-denominator-index]
side sum(n): q^(n^2+n) / (q^2;q^2)_n
side 1 / (q^2,q^3;q^5)_oo

[id mut-sign]
side sum(n): (-1)^n * q^(n^2) / (q;q)_n
side 1 / (q,q^4;q^5)_oo
";

#[test]
fn mutated_records_fail_early() {
    // The grammar writes exponents bare (q^11, not q^{11}).
    let text = MUTATED.replace(['{', '}'], "");
    let records = parse_catalog(&text).unwrap();
    assert_eq!(records.len(), 10);
    let opts = VerifyOptions { order: 30, param_degree: 4 };
    for rec in &records {
        match verify_record(rec, &opts) {
            Err(Error::Mismatch { exponent, .. }) => {
                let value: f64 = match exponent.split_once('/') {
                    Some((n, d)) => n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap(),
                    None => exponent.parse().unwrap(),
                };
                assert!(
                    value <= 12.0,
                    "{} first mismatch at q^({exponent}), wanted <= 12",
                    rec.id
                );
            }
            other => panic!("{} should mismatch, got {other:?}", rec.id),
        }
    }
}
