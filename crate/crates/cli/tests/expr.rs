use gwa_cli::expr::{parse_laurent, parse_poly};
use gwa_core::C64;
use proptest::prelude::*;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn product_of_linear_factors() {
    let p = parse_poly("(z-0.5)*(z+0.5)").unwrap();
    assert_eq!(p.coeffs(), &[c(-0.25), c(0.0), c(1.0)]);
}

#[test]
fn laurent_terms_on_both_sides() {
    let l = parse_laurent("Z^2 + 2 + Z^-2").unwrap();
    let direct = parse_laurent("Z^-2 + Z^2 + 2*Z^0").unwrap();
    assert_eq!(l, direct);
    let x = C64::new(0.7, 0.2);
    let expect = x * x + 2.0 + (x * x).inv();
    assert!((l.eval(x) - expect).norm() < 1e-14);
}

#[test]
fn negative_powers_need_the_q_variable() {
    let e = parse_poly("z^-1").unwrap_err();
    assert_eq!(e.position, 2);
    assert!(parse_laurent("(Z+1)^-1").is_err());
    assert!(parse_poly("Z").is_err());
}

#[test]
fn imaginary_unit_and_scientific_numbers() {
    let p = parse_poly("1e-1 + 2i*z").unwrap();
    assert_eq!(p.coeffs(), &[c(0.1), C64::new(0.0, 2.0)]);
}

#[test]
fn oversized_powers_are_rejected() {
    assert!(parse_poly("z^100000").is_err());
    assert!(parse_poly("(z^100)^100").is_err());
    let deep = format!("{}z{}", "(".repeat(5000), ")".repeat(5000));
    assert!(parse_poly(&deep).is_err());
}

fn token() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["z", "Z", "i", "+", "-", "*", "^", "(", ")", "2", "0.5", "1e3", "-1", " ", "x", ".", "e"])
}

proptest! {
    #[test]
    fn random_token_strings_never_panic(tokens in prop::collection::vec(token(), 0..40)) {
        let src: String = tokens.concat();
        let _ = parse_poly(&src);
        let _ = parse_laurent(&src);
    }

    #[test]
    fn arbitrary_text_never_panics(src in "\\PC{0,60}") {
        let _ = parse_poly(&src);
        let _ = parse_laurent(&src);
    }
}
