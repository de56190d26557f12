//! Derivatives as shadows of difference quotients: every infinitesimal
//! displacement gives the same standard part, and the residual is certified
//! infinitesimal rather than "small".

use infinilab::calculus::{default_h_choices, derivative_at, frechet_check};
use infinilab::expr::{EvalConfig, Expr};
use infinilab::rational::{rat, rint};

fn main() {
    let cfg = EvalConfig::default();

    let f: Expr = "x^3 - 2*x".parse().unwrap();
    let report = derivative_at(&f, "x", &rat(1, 2), &default_h_choices(), &cfg).unwrap();
    println!("d/dx (x^3 - 2x) at 1/2 = {}", report.value);
    for check in &report.checks {
        println!(
            "  h = {:<12} quotient = {:<32} shadow = {} residual class = {}",
            check.h.to_string(),
            check.quotient.to_string(),
            check.shadow,
            check.residual_class
        );
    }

    // the quotient for x^2 at 3 is literally 6 + h: the shadow discards the
    // displacement term exactly
    let g: Expr = "x^2".parse().unwrap();
    let at3 = derivative_at(&g, "x", &rint(3), &default_h_choices(), &cfg).unwrap();
    println!("\nd/dx x^2 at 3 = {}", at3.value);

    // multivariate: A is the differential of f(x,y) = (x^2 + y, x*y) at (1,2)
    // iff the error quotient is infinitesimal in every direction
    let fs: Vec<Expr> = vec!["x^2 + y".parse().unwrap(), "x*y".parse().unwrap()];
    let vars = vec!["x".to_string(), "y".to_string()];
    let x0 = [rint(1), rint(2)];
    let jacobian = vec![vec![rint(2), rint(1)], vec![rint(2), rint(1)]];
    let dirs = vec![
        vec![rint(1), rint(0)],
        vec![rint(0), rint(1)],
        vec![rint(1), rint(1)],
        vec![rint(3), rat(-1, 2)],
    ];
    let frechet = frechet_check(&fs, &vars, &x0, &jacobian, &dirs, &cfg).unwrap();
    println!("\ndifferential check for (x^2 + y, xy) at (1, 2):");
    for row in &frechet.rows {
        let d: Vec<String> = row.direction.iter().map(|v| v.to_string()).collect();
        println!("  direction ({}) -> ratio class {}", d.join(", "), row.class);
    }
    println!("verdict: {}", frechet.verdict);

    // a wrong matrix is caught by some direction
    let wrong = vec![vec![rint(2), rint(1)], vec![rint(2), rint(2)]];
    let refuted = frechet_check(&fs, &vars, &x0, &wrong, &dirs, &cfg).unwrap();
    println!("wrong matrix verdict: {}", refuted.verdict);
}
