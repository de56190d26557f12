//! Thickness of finite-set families: nu(m) is the least size bound under
//! which every small set extends into the family; descending chains
//! diagonalize into a single composite that stays thick while escaping every
//! link beyond a computable size.

use infinilab::forcing::{diagonal_thick, thickness_nu, FinFamily, ThickOutcome};

fn main() {
    // the family of sets containing a designated point: nu(m) = m + 1
    let fam: FinFamily = "contains(5)".parse().unwrap();
    println!("family {fam}:");
    for row in thickness_nu(&fam, 8) {
        match row.outcome {
            ThickOutcome::Nu(nu) => println!("  m = {} -> nu = {nu}", row.m),
            ThickOutcome::Thin { witness } => println!("  m = {} -> thin at {witness:?}", row.m),
        }
    }

    // a cardinality ceiling is thin: a 4-element set has no superset inside
    let small: FinFamily = "card<=3".parse().unwrap();
    println!("\nfamily {small}:");
    for row in thickness_nu(&small, 5) {
        match row.outcome {
            ThickOutcome::Nu(nu) => println!("  m = {} -> nu = {nu}", row.m),
            ThickOutcome::Thin { witness } => println!("  m = {} -> thin at {witness:?}", row.m),
        }
    }

    // dichotomy: splitting a thick family by any rule leaves at least one
    // thick part
    let p: FinFamily = "contains(0)".parse().unwrap();
    let s: FinFamily = "contains(1)".parse().unwrap();
    let both = p.and(&s);
    let diff = p.minus(&s);
    let thick = |f: &FinFamily| {
        thickness_nu(f, 4)
            .iter()
            .all(|row| matches!(row.outcome, ThickOutcome::Nu(_)))
    };
    println!("\np = {p}, S = {s}");
    println!("p & S   thick to m = 4: {}", thick(&both));
    println!("p \\ S   thick to m = 4: {}", thick(&diff));

    // diagonalizing a descending chain: the composite admits every small set
    // with a guard from its own level, yet escapes chain link n beyond a
    // uniform size bound
    let chain: Vec<FinFamily> = vec![
        "contains(0)".parse().unwrap(),
        "(contains(0) & contains(1))".parse().unwrap(),
        "((contains(0) & contains(1)) & contains(2))".parse().unwrap(),
        "(((contains(0) & contains(1)) & contains(2)) & contains(3))".parse().unwrap(),
    ];
    let report = diagonal_thick(&chain, 5).unwrap();
    println!("\ncomposite: {}", report.composite);
    for (m, idx, nu) in &report.guards {
        println!("  level m = {m}: guarded by chain[{idx}] with nu = {nu}");
    }
    println!("composite thickness:");
    for row in &report.rows {
        match &row.outcome {
            ThickOutcome::Nu(nu) => println!("  m = {} -> nu = {nu}", row.m),
            ThickOutcome::Thin { witness } => println!("  m = {} -> thin at {witness:?}", row.m),
        }
    }
    for (n, k) in &report.diff_bounds {
        println!("members escaping chain[{n}] all have size <= {k}");
    }
}
