//! Desk-scale forcing: conditions are eventually periodic index sets paired
//! with fibers of tuples, almost-everywhere truth is decidable, and the
//! classical constructions (deciding membership, diagonal names, generic
//! chains, fiber splitting) run as ordinary functions.

use infinilab::forcing::{
    decide_membership, diag_name, enumerate_conditions, fix_constant, forces_clausal, forces_los,
    pseudo_generic, split_fibers, standard_part_name, Condition, DenseRule, Fiber, HFSet,
    IndexSet, RuleTerm, SpaceCaps, ValueSet,
};

fn main() {
    // a rank-1 condition: on the even indices, the named set is empty
    let parity = Fiber::tabular(
        1,
        vec![],
        vec![
            ValueSet::singleton(vec![HFSet::empty()]),
            ValueSet::singleton(vec![HFSet::singleton(HFSet::empty())]),
        ],
    )
    .unwrap();
    let evens = Condition::new(IndexSet::evens(), parity.clone()).unwrap();
    let all = Condition::new(IndexSet::full(), parity).unwrap();

    // exact almost-everywhere evaluation of membership assertions
    let zero_in_g0 = "0 in G0".parse().unwrap();
    println!("evens forces 0 in G0 : {}", forces_los(&evens, &zero_in_g0, 3).unwrap());
    println!("evens forces !(0 in G0): {}", {
        let neg = "!(0 in G0)".parse().unwrap();
        forces_los(&evens, &neg, 3).unwrap()
    });

    // the clause-by-clause checker returns a verdict relative to an
    // enumerated space of conditions
    let caps = SpaceCaps::default();
    let space = enumerate_conditions(&caps);
    println!("\nenumerated space: {} conditions under {caps}", space.len());
    let st = "st(G0)".parse().unwrap();
    println!("evens  |- st(G0): {}", forces_clausal(&evens, &st, &space, 3).unwrap());
    println!("full   |- st(G0): {}", forces_clausal(&all, &st, &space, 3).unwrap());

    // deciding membership up to a bound extends the condition through the
    // staircase; the decided bits read off as a standard part
    let decided = decide_membership(&all, 0, 6).unwrap();
    println!("\ndecided condition: {decided}");
    println!("extends the start: {}", decided.extends(&all).unwrap());
    let bits = standard_part_name(&decided, 0, 6).unwrap();
    println!("bits of G0 up to 6: {bits:?}");

    // named constructions compose into a pseudo-generic chain, each link
    // verified to extend the last
    let rules = vec![
        DenseRule::FixConstant(HFSet::singleton(HFSet::empty())),
        DenseRule::Diagonal,
        DenseRule::Restrict(IndexSet::evens()),
        DenseRule::DecideMembership { name: 0, bound: 3 },
    ];
    let chain = pseudo_generic(&Condition::one_point_one(), &rules).unwrap();
    println!("\npseudo-generic chain:");
    for (step, cond) in chain.iter().enumerate() {
        println!("  {step}: rank {} p = {}", cond.rank(), cond.p);
    }

    // the same constructions have direct forms
    let (with_const, col) = fix_constant(&Condition::one_point_one(), &HFSet::empty());
    println!("\nfix_constant added column {col}: {with_const}");
    let (with_diag, dcol) = diag_name(&Condition::one_point_one()).unwrap();
    println!("diag_name added column {dcol}: rank {}", with_diag.rank());

    // splitting: every value of vN(i) occurs once, so the recursion walks the
    // index set and deals the reached positions into two unbounded halves
    let vn = Fiber::generative(1, vec![vec![RuleTerm::vn()]]).unwrap();
    let split = split_fibers(&vn, &IndexSet::full()).unwrap();
    println!("\nsplitting the diagonal fiber:");
    for stage in split.stages.iter().take(4) {
        println!(
            "  stage {} at index {}: alpha = {}, selects {} value(s)",
            stage.stage,
            stage.index,
            stage.alpha,
            stage.s.len()
        );
    }
    println!("p1 = {}", split.p1);
    println!("p2 = {}", split.p2);
}
