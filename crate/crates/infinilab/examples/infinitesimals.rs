//! Arithmetic in the truncated series field: exact computation with an
//! explicit infinitesimal, order-of-magnitude classification, and shadows.

use infinilab::hyper::{decimal_decode, decimal_encode, LCNum};
use infinilab::rational::rat;

fn main() {
    let eps = LCNum::epsilon();
    let three = LCNum::from_int(3);

    // exact polynomial identities survive: no rounding anywhere
    let product = (three.clone() + eps.clone()) * (three.clone() - eps.clone());
    println!("(3 + eps)(3 - eps) = {product}");

    // division produces a truncated geometric series and remembers that it
    // is truncated
    let inv = LCNum::one().try_div(&(LCNum::from_int(2) + eps.clone())).unwrap();
    println!("1/(2 + eps)       = {inv}");
    println!("  class  = {}", inv.classify().unwrap());
    println!("  shadow = {}", inv.shadow().unwrap());
    println!("  exact  = {}", inv.is_exact());

    // the four magnitude classes
    println!("\nclassification:");
    let unlimited = LCNum::one().try_div(&eps).unwrap();
    for (label, v) in [
        ("0          ", LCNum::zero()),
        ("eps^2      ", eps.clone() * eps.clone()),
        ("3 + eps    ", three + eps.clone()),
        ("1/eps      ", unlimited.clone()),
    ] {
        println!("  {label} -> {}", v.classify().unwrap());
    }

    // ordering is lexicographic in the series terms: eps beats every
    // positive rational from below
    let tiny = LCNum::from_rational(rat(1, 1_000_000_000));
    println!("\neps < 1/10^9      : {}", eps < tiny);
    println!("eps^2 < eps       : {}", eps.clone() * eps.clone() < eps);
    println!("1/eps > 10^9      : {}", unlimited > LCNum::from_int(1_000_000_000));

    // a bit sequence rides inside a single rational as 0/1 decimal digits
    let bits = [true, false, true, true, false];
    let coded = decimal_encode(&bits);
    println!("\nencode {bits:?} = {coded}");
    let decoded = decimal_decode(&coded, bits.len()).unwrap();
    println!("decode back      = {decoded:?}");
    assert_eq!(bits.to_vec(), decoded);
}
