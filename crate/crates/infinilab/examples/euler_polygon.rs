//! Euler polygons on exact rational grids: for y' = 2x the global error at
//! x = 1 is exactly -h, so halving the step halves the error and one
//! extrapolation step lands on the true solution.

use infinilab::calculus::peano_study;
use infinilab::expr::{EvalConfig, Expr};
use infinilab::rational::{rat, rint, Rational};

fn main() {
    let cfg = EvalConfig::default();
    let f: Expr = "2*x".parse().unwrap();

    let grid = [rat(1, 2), rint(1)];
    let study = peano_study(
        &f,
        "x",
        "y",
        &rint(0),
        &rint(0),
        &rat(1, 4),
        &rint(1),
        6,
        &grid,
        &cfg,
    )
    .unwrap();

    let steps: Vec<String> = study.step_sizes.iter().map(|h| h.to_string()).collect();
    println!("steps: {}", steps.join(", "));

    for row in &study.rows {
        let truth = &row.point * &row.point;
        println!("\nat x = {} (true value {truth}):", row.point);
        for (h, y) in study.step_sizes.iter().zip(&row.values) {
            let err: Rational = y - &truth;
            println!("  h = {:<5} y = {:<10} error = {err}", h.to_string(), y.to_string());
        }
        let ratios: Vec<String> = row
            .ratios
            .iter()
            .map(|r| r.as_ref().map_or("-".into(), |v| v.to_string()))
            .collect();
        println!("  difference ratios: {}", ratios.join(", "));
        println!("  extrapolated: {} (defect {})", row.extrapolated, &row.extrapolated - &truth);
    }

    // the error is exactly -h: the polygon for y' = 2x sums the left tags
    // 2(kh) over k < x/h, an arithmetic series short of x^2 by exactly xh...
    // at x = 1 that is h
    for (h, y) in study.step_sizes.iter().zip(&study.rows[1].values) {
        assert_eq!(&(y - rint(1)), &-h.clone());
    }
    println!("\nchecked: error at x = 1 equals -h for every level");
}
