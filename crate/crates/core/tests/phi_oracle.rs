mod support {
    pub mod phi_oracle;
}

use qlpay_core::banknote::PhiParams;
use support::phi_oracle::cross_product;

#[test]
fn base_circuit_matches_reference_table() {
    for (d0, t_tr) in [(10, 100), (1, 2), (3, 7)] {
        let r = cross_product(&PhiParams::base(d0, t_tr));
        assert_eq!(r.total, 288);
        assert!(r.mismatches.is_empty(), "{:#?}", r.mismatches);
        assert!(r.accepted > 0);
    }
}
