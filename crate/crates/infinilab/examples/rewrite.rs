//! Quantifier rewriting: infinitesimal quantifiers are compiled away into a
//! leading block of standard quantifiers, every step is recorded in a trace
//! that replays, and erasing the standard marks lands on the classical form.

use infinilab::formula::parse::parse_formula;
use infinilab::formula::rewrite::{replay, rewrite_and_collapse, rewrite_to_delta_st};
use infinilab::formula::semantics::{sample_semantics, Grids, Interp};
use infinilab::formula::{alpha_equal, classify_delta_st};
use infinilab::hyper::LCNum;
use infinilab::rational::rint;

fn main() {
    // the derivative-defining shape: for every infinitesimal displacement
    // there is an infinitesimal defect
    let input = parse_formula("Ain h. Ein k. (h != 0 -> dq(h) = d + k)").unwrap();
    println!("input:  {input}");
    println!("class:  {:?}\n", classify_delta_st(&input));

    let (normal, trace) = rewrite_to_delta_st(&input).unwrap();
    println!("normal: {normal}");
    println!("class:  {:?}", classify_delta_st(&normal));
    println!("trace ({} steps):", trace.len());
    for (k, entry) in trace.iter().enumerate() {
        println!("  {}. {} at {:?}", k + 1, entry.rule, entry.path);
    }
    replay(&trace).unwrap();
    println!("trace replays cleanly\n");

    // erasing the marks on the leading block gives the epsilon-delta form
    let (classical, _) = rewrite_and_collapse(&input).unwrap();
    println!("collapsed: {classical}");
    let golden = parse_formula(
        "A m:posint. E n:posint. A x. (mag(x) < 1/n -> \
         E y. (mag(y) < 1/m & (x != 0 -> dq(x) = d + y)))",
    )
    .unwrap();
    println!("alpha-equal to the classical form: {}", alpha_equal(&classical, &golden));

    // finite-grid spot check: the rewrite preserves truth on a closed world
    // where P holds exactly on equal pairs
    let pair = parse_formula("Ain h. Ein k. P(h, k)").unwrap();
    let (rewritten, _) = rewrite_to_delta_st(&pair).unwrap();
    let eps = LCNum::epsilon();
    let grids = Grids {
        standard: vec![rint(1), rint(2), rint(3)],
        infinitesimal: vec![eps.clone(), eps.clone() * eps.clone()],
        plain: vec![LCNum::zero(), LCNum::one(), eps.clone()],
    };
    let diagonal: Vec<Vec<LCNum>> = grids
        .plain
        .iter()
        .chain(grids.infinitesimal.iter())
        .map(|v| vec![v.clone(), v.clone()])
        .collect();
    let mut interp = Interp::default();
    interp.rels.insert("P".to_string(), diagonal);

    let before = sample_semantics(&pair, &grids, &interp).unwrap();
    let after = sample_semantics(&rewritten, &grids, &interp).unwrap();
    println!("\nsemantics on the diagonal world: input {before}, rewritten {after}");
    assert_eq!(before, after);
}
