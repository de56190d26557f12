//! Acceptance suite. Each test covers one numbered criterion and prints a
//! single summary line (`criterion N: ...`) with the measured quantities, so
//! the harness output shows one pass/fail line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use common::*;
use infinilab::calculus::interval::IntervalUnion;
use infinilab::calculus::{
    derivative_at, geometric_family, lebesgue_measures, peano_study, riemann_symbolic,
    sigma_subadd_check, tagged_sum_check, TagScheme,
};
use infinilab::expr::EvalConfig;
use infinilab::formula::parse::parse_formula;
use infinilab::formula::rewrite::{replay, rewrite_to_delta_st, rewrite_and_collapse};
use infinilab::formula::semantics::{sample_semantics, Grids, Interp};
use infinilab::formula::{alpha_equal, classify_delta_st, DeltaStClass, Formula, Term};
use infinilab::forcing::{
    decide_membership, enumerate_conditions, forces_clausal, forces_los, simple_forces,
    standard_part_name, thickness_nu, ClausalVerdict, Condition, FamilyRule, Fiber, FinFamily,
    HFSet, IndexSet, Reindex, SetFormula, SetTerm, SimpleFormula, SimpleName, SpaceCaps,
    ThickOutcome, ValueSet,
};
use infinilab::forcing::diagonal_thick;
use infinilab::hyper::LCNum;
use infinilab::rational::{rat, rint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> EvalConfig {
    EvalConfig::default()
}

// ---------------------------------------------------------------------------
// 1. Derivative oracle equivalence.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_derivative_matches_symbolic_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let eps = LCNum::epsilon();
    let h_choices = vec![
        eps.clone(),
        eps.clone() * eps.clone(),
        LCNum::from_int(2) * eps.clone(),
        -eps.clone(),
    ];
    let started = Instant::now();
    let mut checked = 0usize;
    for _ in 0..25 {
        let coeffs = rand_poly(&mut rng, 6);
        let f = poly_expr(&coeffs, "x");
        let slope = diff_coeffs(&coeffs);
        for _ in 0..5 {
            let c = rand_rational(&mut rng);
            let report = derivative_at(&f, "x", &c, &h_choices, &cfg())
                .expect("polynomial derivative must succeed");
            let oracle = eval_poly(&slope, &c);
            assert_eq!(report.value, oracle, "derivative at {c} of {coeffs:?}");
            assert_eq!(report.checks.len(), h_choices.len());
            for check in &report.checks {
                assert_eq!(check.shadow, oracle, "shadow for h = {}", check.h);
            }
            checked += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 5.0,
        "runtime {elapsed:?} exceeds the 5 s budget"
    );
    println!(
        "criterion 1: PASS - {checked} derivative points x 4 displacements, exact match, {:.2?}",
        elapsed
    );
}

// ---------------------------------------------------------------------------
// 2. Hyperfinite integral vs. the antiderivative oracle.
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_integral_matches_antiderivative_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let schemes = [TagScheme::Left, TagScheme::Right, TagScheme::Midpoint];
    for case in 0..20 {
        let coeffs = rand_poly(&mut rng, 6);
        let f = poly_expr(&coeffs, "x");
        let (a, b) = rand_interval(&mut rng);
        let oracle = integral_oracle(&coeffs, &a, &b);

        let sym = riemann_symbolic(&f, "x", &a, &b, &cfg()).expect("symbolic integral");
        assert_eq!(sym.value, oracle, "case {case}: integral over [{a}, {b}]");

        // The h-free part is the whole story: instantiating the full sum at a
        // concrete infinitesimal spacing and taking the shadow returns the
        // same rational value.
        let inst = sym
            .instantiate(&LCNum::epsilon(), &rint(0), &rint(1))
            .expect("instantiate at h = eps");
        assert_eq!(inst.shadow().expect("limited sum"), oracle);

        let tagged =
            tagged_sum_check(&f, "x", &a, &b, &schemes, &cfg()).expect("tagged sums");
        assert!(tagged.all_agree, "case {case}: tagging must not matter");
        assert_eq!(tagged.value, oracle);
        assert_eq!(tagged.rows.len(), schemes.len());
        for row in &tagged.rows {
            assert!(row.matches_baseline);
            assert_eq!(row.shadow, oracle);
        }
    }
    println!("criterion 2: PASS - 20 intervals, symbolic + 3 tag schemes all exact");
}

// ---------------------------------------------------------------------------
// 3. Measure: exact lengths, finite additivity, sigma-subadditivity ledger.
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_measures_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let h = rat(1, 64);

    for _ in 0..20 {
        let (a, b) = rand_interval(&mut rng);
        let set = IntervalUnion::interval(a.clone(), b.clone()).expect("interval");
        let report = lebesgue_measures(&set, &h).expect("measure");
        assert_eq!(report.outer, &b - &a);
        assert_eq!(report.inner, &b - &a);
        assert!(report.certified);
    }

    for _ in 0..20 {
        // A disjoint union built left to right with strictly positive gaps.
        let parts = rng.gen_range(2usize..=4);
        let mut cursor = rand_rational(&mut rng);
        let mut intervals = Vec::new();
        let mut total = rint(0);
        for _ in 0..parts {
            let len = rat(rng.gen_range(1i64..=9), rng.gen_range(1i64..=6));
            let gap = rat(rng.gen_range(1i64..=5), rng.gen_range(1i64..=4));
            let a = &cursor + &gap;
            let b = &a + &len;
            total += &len;
            intervals.push((a.clone(), b.clone()));
            cursor = b;
        }
        let union = IntervalUnion::new(intervals).expect("disjoint union");
        let report = lebesgue_measures(&union, &h).expect("measure");
        assert_eq!(report.outer, total, "finite additivity");
        assert_eq!(report.inner, total);
        assert!(report.certified);
    }

    // Geometric family: 32 pieces leave a tail bound of 2^-32 < eps = 1e-9.
    let (family, tail) = geometric_family(32);
    let eps = rat(1, 1_000_000_000);
    let sigma = sigma_subadd_check(&family, &tail, &eps).expect("sigma ledger");
    assert!(sigma.verdict, "sigma-subadditivity ledger must certify");
    assert_eq!(sigma.rows.len(), family.len());
    assert!(sigma.rows.iter().all(|r| r.ok));
    println!(
        "criterion 3: PASS - 20 intervals + 20 disjoint unions exact; sigma ledger ok (eps = {eps})"
    );
}

// ---------------------------------------------------------------------------
// 4. Rewriter golden tests.
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_rewriter_goldens_and_replay() {
    // Derivative formula: the two-quantifier infinitesimal characterization
    // collapses to the classical bounded form.
    let input = parse_formula("Ain h. Ein k. (h != 0 -> dq(h) = d + k)").unwrap();
    let (collapsed, trace) = rewrite_and_collapse(&input).expect("collapse");
    let golden = parse_formula(
        "A m:posint. E n:posint. A x. (mag(x) < 1/n -> \
         (E y. (mag(y) < 1/m & (x != 0 -> dq(x) = d + y))))",
    )
    .unwrap();
    assert!(
        alpha_equal(&collapsed, &golden),
        "derivative collapse drifted: {collapsed}"
    );
    replay(&trace).expect("derivative trace must replay");

    // The statement pair and its dual, frozen from the displayed forms.
    let pair_in = parse_formula("Ain h. Ein k. P(h, k)").unwrap();
    let (pair_out, _) = rewrite_to_delta_st(&pair_in).expect("rewrite");
    let pair_golden = parse_formula(
        "Ast m. Est n. A x. (mag(x) < 1/n -> (E y. (mag(y) < 1/m & P(x, y))))",
    )
    .unwrap();
    assert!(
        alpha_equal(&pair_out, &pair_golden),
        "statement pair drifted: {pair_out}"
    );

    let dual_in = parse_formula("Ein h. Ain k. P(h, k)").unwrap();
    let (dual_out, _) = rewrite_to_delta_st(&dual_in).expect("rewrite");
    let dual_golden = parse_formula(
        "Est m. Ast n. E x. (mag(x) < 1/n & (A y. (mag(y) < 1/m -> P(x, y))))",
    )
    .unwrap();
    assert!(
        alpha_equal(&dual_out, &dual_golden),
        "dual statement drifted: {dual_out}"
    );

    // Full corpus: every output classifies as a standard-block formula and
    // every recorded trace replays and chains input to output.
    let mut replayed = 0usize;
    for (i, src) in REWRITE_CORPUS.iter().enumerate() {
        let f = parse_formula(src).unwrap_or_else(|e| panic!("corpus[{i}] parse: {e}"));
        let (out, trace) =
            rewrite_to_delta_st(&f).unwrap_or_else(|e| panic!("corpus[{i}] rewrite: {e}"));
        match classify_delta_st(&out) {
            DeltaStClass::DeltaSt { .. } => {}
            DeltaStClass::NotDeltaSt { reason } => {
                panic!("corpus[{i}] output not standard-block: {reason}")
            }
        }
        replay(&trace).unwrap_or_else(|e| panic!("corpus[{i}] replay: {e}"));
        if trace.is_empty() {
            assert_eq!(out, f, "corpus[{i}]: empty trace must mean a fixed point");
        } else {
            assert_eq!(trace.first().unwrap().before, f, "corpus[{i}] trace start");
            assert_eq!(trace.last().unwrap().after, out, "corpus[{i}] trace end");
        }
        replayed += 1;
    }
    assert!(replayed >= 30);
    println!(
        "criterion 4: PASS - goldens alpha-equal; {replayed} corpus traces replayed, all outputs standard-block"
    );
}

// ---------------------------------------------------------------------------
// 5. Rewriter refutation suite over finite sample grids.
// ---------------------------------------------------------------------------

/// Collects relation arities, function arities, and membership usage.
fn collect_symbols(
    f: &Formula,
    rels: &mut BTreeMap<String, BTreeSet<usize>>,
    funcs: &mut BTreeMap<String, BTreeSet<usize>>,
    uses_mem: &mut bool,
) {
    fn walk_term(
        t: &Term,
        funcs: &mut BTreeMap<String, BTreeSet<usize>>,
    ) {
        match t {
            Term::Var(_) | Term::Num(_) => {}
            Term::App(name, args) => {
                funcs.entry(name.clone()).or_default().insert(args.len());
                for a in args {
                    walk_term(a, funcs);
                }
            }
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                walk_term(a, funcs);
                walk_term(b, funcs);
            }
        }
    }
    match f {
        Formula::Eq(a, b) => {
            walk_term(a, funcs);
            walk_term(b, funcs);
        }
        Formula::Mem(a, b) => {
            *uses_mem = true;
            walk_term(a, funcs);
            walk_term(b, funcs);
        }
        Formula::Mag(t, _) => walk_term(t, funcs),
        Formula::Rel(name, args) => {
            rels.entry(name.clone()).or_default().insert(args.len());
            for a in args {
                walk_term(a, funcs);
            }
        }
        _ => {
            for c in f.children() {
                collect_symbols(c, rels, funcs, uses_mem);
            }
        }
    }
}

fn all_tuples(universe: &[LCNum], arity: usize) -> Vec<Vec<LCNum>> {
    let mut out: Vec<Vec<LCNum>> = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                universe.iter().map(move |v| {
                    let mut t2 = t.clone();
                    t2.push(v.clone());
                    t2
                })
            })
            .collect();
    }
    out
}

#[test]
fn criterion_05_semantics_refutation_suite() {
    // Value pools. Grids are assembled so that every magnitude guard
    // `|x| < 1/m` with a positive-integer bound cuts the plain grid down to
    // exactly the infinitesimal samples: non-infinitesimal plain values all
    // have magnitude >= 1, and the standard grid holds positive integers
    // only. On such grids the bounded form and the infinitesimal form range
    // over the same witnesses, so any disagreement is a rewriter defect
    // rather than a sampling artifact.
    let eps = LCNum::epsilon();
    let inf_pool = vec![
        eps.clone(),
        -eps.clone(),
        eps.clone() * eps.clone(),
    ];
    let app_pool = vec![
        LCNum::from_int(1),
        LCNum::from_rational(rat(-3, 2)),
    ];
    let std_pool = vec![rint(1), rint(2), rint(3)];

    // Shared table universe: every value any grid can produce.
    let mut table_universe: Vec<LCNum> = vec![LCNum::zero()];
    table_universe.extend(inf_pool.iter().cloned());
    table_universe.extend(app_pool.iter().cloned());
    for r in &std_pool {
        let v = LCNum::from_rational(r.clone());
        if !table_universe.contains(&v) {
            table_universe.push(v);
        }
    }

    let mut configs = Vec::new();
    for &s_inf in &[0usize, 1, 3] {
        for &s_app in &[0usize, 2] {
            for &s_std in &[1usize, 3] {
                let infinitesimal: Vec<LCNum> = inf_pool[..s_inf].to_vec();
                let mut plain: Vec<LCNum> = vec![LCNum::zero()];
                plain.extend(infinitesimal.iter().cloned());
                plain.extend(app_pool[..s_app].iter().cloned());
                configs.push(Grids {
                    standard: std_pool[..s_std].to_vec(),
                    infinitesimal,
                    plain,
                });
            }
        }
    }

    let mut disagreements = 0usize;
    let mut checks = 0usize;
    for (i, src) in REWRITE_CORPUS.iter().enumerate() {
        let input = parse_formula(src).unwrap();
        let (output, _) = rewrite_to_delta_st(&input).unwrap();

        let mut rels = BTreeMap::new();
        let mut funcs = BTreeMap::new();
        let mut uses_mem = false;
        collect_symbols(&input, &mut rels, &mut funcs, &mut uses_mem);
        collect_symbols(&output, &mut rels, &mut funcs, &mut uses_mem);

        let mut rng = ChaCha8Rng::seed_from_u64(0xC5_00 + i as u64);
        let mut interp = Interp::default();
        for (name, arities) in &rels {
            let mut table = Vec::new();
            for &arity in arities {
                for t in all_tuples(&table_universe, arity) {
                    if rng.gen_bool(0.5) {
                        table.push(t);
                    }
                }
            }
            interp.rels.insert(name.clone(), table);
        }
        for (name, arities) in &funcs {
            let mut table = Vec::new();
            for &arity in arities {
                for t in all_tuples(&table_universe, arity) {
                    let out = table_universe[rng.gen_range(0..table_universe.len())].clone();
                    table.push((t, out));
                }
            }
            interp.funcs.insert(name.clone(), table);
        }
        if uses_mem {
            for a in &table_universe {
                for b in &table_universe {
                    if rng.gen_bool(0.5) {
                        interp.mem.push((a.clone(), b.clone()));
                    }
                }
            }
        }
        for v in input.free_vars() {
            let val = table_universe[rng.gen_range(0..table_universe.len())].clone();
            interp.consts.insert(v, val);
        }

        for grids in &configs {
            let vi = sample_semantics(&input, grids, &interp)
                .unwrap_or_else(|e| panic!("corpus[{i}] input eval: {e}"));
            let vo = sample_semantics(&output, grids, &interp)
                .unwrap_or_else(|e| panic!("corpus[{i}] output eval: {e}"));
            if vi != vo {
                disagreements += 1;
                eprintln!("corpus[{i}] disagrees (input {vi}, output {vo}) on grids {grids:?}");
            }
            checks += 1;
        }
    }
    assert_eq!(disagreements, 0, "refutation suite found counterexamples");
    println!(
        "criterion 5: PASS - {} formula pairs x {} grid configurations = {checks} checks, 0 disagreements",
        REWRITE_CORPUS.len(),
        configs.len()
    );
}

// ---------------------------------------------------------------------------
// 6. Forcing: clause evaluation vs. the almost-all characterization.
// ---------------------------------------------------------------------------

/// Dense bit matrix: `rows x cols`, row-major.
struct BitMatrix {
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        BitMatrix {
            words_per_row,
            bits: vec![0; rows * words_per_row],
        }
    }
    fn row(&self, row: usize) -> &[u64] {
        &self.bits[row * self.words_per_row..(row + 1) * self.words_per_row]
    }
}

fn index_set_bits(p: &IndexSet) -> (String, String) {
    let text = p.to_string();
    let mut prelude = String::new();
    let mut period = String::new();
    for part in text.split_whitespace() {
        if let Some(rest) = part.strip_prefix("prelude=") {
            prelude = rest.to_string();
        } else if let Some(rest) = part.strip_prefix("period=") {
            period = rest.to_string();
        }
    }
    (prelude, period)
}

#[test]
fn criterion_06_forcing_clausal_agrees_with_los() {
    let started = Instant::now();
    let caps = SpaceCaps::default();
    let space = enumerate_conditions(&caps);
    let universe_rank = 3usize;

    // Every atom over the names within rank 2 and the rank <= 1 constants.
    let terms: Vec<SetTerm> = vec![
        SetTerm::Name(0),
        SetTerm::Name(1),
        SetTerm::Const(HFSet::empty()),
        SetTerm::Const(HFSet::singleton(HFSet::empty())),
    ];
    let mut atoms = Vec::new();
    for a in &terms {
        for b in &terms {
            atoms.push(SetFormula::Eq(a.clone(), b.clone()));
            atoms.push(SetFormula::Mem(a.clone(), b.clone()));
        }
    }

    let n = space.len();
    let ranks: Vec<usize> = space.iter().map(|c| c.rank()).collect();

    // Formula battery: every atom followed by its negation, with the rank a
    // condition needs before the formula's names resolve.
    let mut phis: Vec<(SetFormula, usize)> = Vec::new();
    for atom in &atoms {
        let needed = atom.names_max().map(|m| m + 1).unwrap_or(0);
        phis.push((atom.clone(), needed));
        phis.push((SetFormula::not(atom.clone()), needed));
    }

    // Extension adjacency: row j holds the bitmask of all i such that
    // space[j] extends space[i]. Index-set inclusion and rank comparisons are
    // hoisted out of the pair loop; only pairs passing both pay for the
    // window comparison inside `extends`.
    let words_per_row = n.div_ceil(64);
    let mut ext = BitMatrix::new(n, n);
    {
        let mut p_ids: Vec<usize> = Vec::with_capacity(n);
        let mut distinct: Vec<(String, &IndexSet)> = Vec::new();
        for c in &space {
            let key = c.p.to_string();
            let id = match distinct.iter().position(|(k, _)| *k == key) {
                Some(id) => id,
                None => {
                    distinct.push((key, &c.p));
                    distinct.len() - 1
                }
            };
            p_ids.push(id);
        }
        let m = distinct.len();
        let mut subset = vec![false; m * m];
        for a in 0..m {
            for b in 0..m {
                subset[a * m + b] = distinct[a].1.is_subset_of(distinct[b].1);
            }
        }
        for j in 0..n {
            let row = &mut ext.bits[j * words_per_row..(j + 1) * words_per_row];
            for i in 0..n {
                if ranks[j] < ranks[i] || !subset[p_ids[j] * m + p_ids[i]] {
                    continue;
                }
                let holds = if ranks[i] == 0 {
                    true
                } else {
                    space[j].extends(&space[i]).expect("tabular extends is total")
                };
                if holds {
                    row[i / 64] |= 1 << (i % 64);
                }
            }
        }
    }

    // One pass per formula: clause verdict and almost-all truth side by side.
    // The truths feed the finite-edit check below; the forced bitmaps feed
    // monotonicity and consistency.
    let mut definite = 0usize;
    let mut forced_count = 0usize;
    let mut los_truth: Vec<Vec<bool>> = vec![vec![false; n]; phis.len()];
    let mut forced_sets: Vec<Vec<u64>> = vec![vec![0u64; words_per_row]; phis.len()];
    for (k, (phi, needed)) in phis.iter().enumerate() {
        let mut forced = vec![false; n];
        for (i, c) in space.iter().enumerate() {
            if ranks[i] < *needed {
                continue;
            }
            let verdict =
                forces_clausal(c, phi, &space, universe_rank).expect("clause evaluation");
            let los = forces_los(c, phi, universe_rank).expect("almost-all evaluation");
            los_truth[k][i] = los;
            match verdict {
                ClausalVerdict::Forced => {
                    assert!(los, "clause says forced, almost-all disagrees: {phi} at {i}");
                    forced_sets[k][i / 64] |= 1 << (i % 64);
                    forced[i] = true;
                    forced_count += 1;
                    definite += 1;
                }
                ClausalVerdict::Refuted => {
                    assert!(!los, "clause says refuted, almost-all disagrees: {phi} at {i}");
                    definite += 1;
                }
                ClausalVerdict::Unknown => {}
            }
        }
        // Monotonicity: a forced formula stays forced under every extension
        // present in the space.
        for j in 0..n {
            if ranks[j] < *needed || forced[j] {
                continue;
            }
            let row = ext.row(j);
            for w in 0..words_per_row {
                assert_eq!(
                    row[w] & forced_sets[k][w],
                    0,
                    "monotonicity violated: condition {j} extends a condition forcing {phi} but does not force it"
                );
            }
        }
    }

    // Consistency: no condition forces both an atom and its negation. The
    // battery interleaves them, so adjacent forced bitmaps must be disjoint.
    for pair in forced_sets.chunks(2) {
        for w in 0..words_per_row {
            assert_eq!(
                pair[0][w] & pair[1][w],
                0,
                "some condition forces an atom and its negation"
            );
        }
    }

    // Finite edits to the index set leave the almost-all verdict alone:
    // appending one full period of ones adds a finite set of indices,
    // appending zeros removes one.
    let mut edits_checked = 0usize;
    for (ci, c) in space.iter().enumerate() {
        let (prelude, period) = index_set_bits(&c.p);
        let ones: String = "1".repeat(period.len());
        let zeros: String = "0".repeat(period.len());
        for suffix in [ones, zeros] {
            let text = format!("prelude={prelude}{suffix} period={period}");
            let edited: IndexSet = text.parse().expect("edited index set");
            let ec = Condition::new(edited, c.q.clone()).expect("edited condition");
            for (k, (phi, needed)) in phis.iter().enumerate() {
                if ranks[ci] < *needed {
                    continue;
                }
                let after = forces_los(&ec, phi, universe_rank).unwrap();
                assert_eq!(
                    los_truth[k][ci], after,
                    "prelude edit changed the verdict of {phi}"
                );
                edits_checked += 1;
            }
        }
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "runtime {elapsed:?} exceeds the 60 s budget"
    );
    println!(
        "criterion 6: PASS - space {} conditions (caps: index prelude <= {}, index period <= {}, \
         fiber prelude <= {}, fiber period <= {}, rank <= {}, universe rank {}); {} atoms x 2 \
         polarities; {definite} definite verdicts ({forced_count} forced) all agree; monotonicity \
         and consistency clean; {edits_checked} finite-edit checks clean; {:.2?}",
        space.len(),
        caps.index_prelude_max,
        caps.index_period_max,
        caps.fiber_prelude_max,
        caps.fiber_period_max,
        caps.max_rank,
        universe_rank,
        atoms.len(),
        elapsed
    );
}

// ---------------------------------------------------------------------------
// 7. Membership diagonalization battery.
// ---------------------------------------------------------------------------

fn vs(tuples: Vec<Vec<HFSet>>) -> ValueSet {
    ValueSet::new(tuples)
}

#[test]
fn criterion_07_decide_membership_battery() {
    let e = HFSet::empty;
    let s = || HFSet::singleton(HFSet::empty());
    let ss = || HFSet::singleton(HFSet::singleton(HFSet::empty()));

    let battery: Vec<(Condition, usize)> = vec![
        (
            Condition::new(IndexSet::full(), Fiber::constant(vec![e()])).unwrap(),
            0,
        ),
        (
            Condition::new(
                IndexSet::evens(),
                Fiber::tabular(1, vec![], vec![vs(vec![vec![e()]]), vs(vec![vec![s()]])])
                    .unwrap(),
            )
            .unwrap(),
            0,
        ),
        (
            Condition::new(IndexSet::odds(), Fiber::constant(vec![s()])).unwrap(),
            0,
        ),
        (
            Condition::new(
                IndexSet::full(),
                Fiber::tabular(1, vec![], vec![vs(vec![vec![e()], vec![s()]])]).unwrap(),
            )
            .unwrap(),
            0,
        ),
        (
            Condition::new(
                "prelude=110 period=10".parse().unwrap(),
                Fiber::tabular(
                    1,
                    vec![vs(vec![vec![s()]])],
                    vec![vs(vec![vec![e()]]), vs(vec![vec![e()], vec![s()]])],
                )
                .unwrap(),
            )
            .unwrap(),
            0,
        ),
        (
            Condition::new(IndexSet::full(), Fiber::constant(vec![e(), s()])).unwrap(),
            1,
        ),
        (
            Condition::new(
                IndexSet::evens(),
                Fiber::tabular(
                    2,
                    vec![],
                    vec![vs(vec![vec![e(), s()]]), vs(vec![vec![s(), e()]])],
                )
                .unwrap(),
            )
            .unwrap(),
            0,
        ),
        (
            Condition::new(
                "period=100".parse().unwrap(),
                Fiber::tabular(
                    1,
                    vec![],
                    vec![
                        vs(vec![vec![e()]]),
                        vs(vec![vec![s()]]),
                        vs(vec![vec![ss()]]),
                    ],
                )
                .unwrap(),
            )
            .unwrap(),
            0,
        ),
        (
            Condition::new(
                IndexSet::evens(),
                Fiber::tabular(
                    1,
                    vec![vs(vec![vec![s()]]), vs(vec![vec![s()]])],
                    vec![vs(vec![vec![e()]])],
                )
                .unwrap(),
            )
            .unwrap(),
            0,
        ),
        (
            Condition::new(
                IndexSet::full(),
                Fiber::tabular(
                    1,
                    vec![],
                    vec![vs(vec![vec![e()]]), vs(vec![vec![e()], vec![s()]])],
                )
                .unwrap(),
            )
            .unwrap(),
            0,
        ),
    ];
    assert_eq!(battery.len(), 10);

    let bound = 16usize;
    for (idx, (c, name)) in battery.iter().enumerate() {
        let decided = decide_membership(c, *name, bound)
            .unwrap_or_else(|err| panic!("battery[{idx}]: {err}"));
        assert!(
            decided.extends(c).expect("tabular"),
            "battery[{idx}]: output must extend its input"
        );
        for nat in 0..=bound {
            let atom = SetFormula::Mem(
                SetTerm::Const(HFSet::von_neumann(nat)),
                SetTerm::Name(*name),
            );
            let pos = forces_los(&decided, &atom, 3).unwrap();
            let neg = forces_los(&decided, &SetFormula::not(atom.clone()), 3).unwrap();
            assert!(
                pos || neg,
                "battery[{idx}]: membership of {nat} left undecided"
            );
            assert!(!(pos && neg), "battery[{idx}]: contradictory verdicts at {nat}");
        }
        let bits = standard_part_name(&decided, *name, bound)
            .unwrap_or_else(|err| panic!("battery[{idx}] standard part: {err}"));
        assert_eq!(bits.len(), bound + 1);
        for (nat, bit) in bits.iter().enumerate() {
            let atom = SetFormula::Mem(
                SetTerm::Const(HFSet::von_neumann(nat)),
                SetTerm::Name(*name),
            );
            assert_eq!(
                *bit,
                forces_los(&decided, &atom, 3).unwrap(),
                "battery[{idx}]: standard-part bit {nat} disagrees with the forced verdict"
            );
        }
    }
    println!(
        "criterion 7: PASS - 10 conditions decided through n <= {bound}, outputs extend inputs, standard parts extracted"
    );
}

// ---------------------------------------------------------------------------
// 8. Thickness: covering numbers, dichotomy, diagonal chain.
// ---------------------------------------------------------------------------

fn all_nu(rows: &[infinilab::forcing::ThicknessRow]) -> bool {
    rows.iter()
        .all(|r| matches!(r.outcome, ThickOutcome::Nu(_)))
}

fn rand_rule<R: Rng>(rng: &mut R, depth: usize) -> FamilyRule {
    let leaf = |rng: &mut R| match rng.gen_range(0..3) {
        0 => FamilyRule::Contains(rng.gen_range(0..5)),
        1 => FamilyRule::CardAtLeast(rng.gen_range(1..=3)),
        _ => FamilyRule::CardAtMost(rng.gen_range(2..=5)),
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..6) {
        0 | 1 | 2 => leaf(rng),
        3 => FamilyRule::And(
            Box::new(rand_rule(rng, depth - 1)),
            Box::new(rand_rule(rng, depth - 1)),
        ),
        4 => FamilyRule::Or(
            Box::new(rand_rule(rng, depth - 1)),
            Box::new(rand_rule(rng, depth - 1)),
        ),
        _ => FamilyRule::Not(Box::new(rand_rule(rng, depth - 1))),
    }
}

#[test]
fn criterion_08_thickness_dichotomy_and_diagonal() {
    // Covering numbers of a one-point filter family.
    let fam: FinFamily = "contains(5)".parse().expect("family rule");
    let rows = thickness_nu(&fam, 8);
    assert_eq!(rows.len(), 9);
    for (m, row) in rows.iter().enumerate() {
        assert_eq!(row.m, m);
        assert_eq!(
            row.outcome,
            ThickOutcome::Nu(m + 1),
            "covering number at m = {m}"
        );
    }

    // Dichotomy: for a thick family p and an arbitrary rule family S, at
    // least one of p-and-S, p-minus-S stays thick through m = 6.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let mut pairs = 0usize;
    let mut draws = 0usize;
    while pairs < 50 {
        draws += 1;
        assert!(draws < 10_000, "generator starved");
        let p = FinFamily::new(rand_rule(&mut rng, 2));
        if !all_nu(&thickness_nu(&p, 6)) {
            continue;
        }
        let s = FinFamily::new(rand_rule(&mut rng, 2));
        let both = p.and(&s);
        let diff = p.minus(&s);
        let both_thick = all_nu(&thickness_nu(&both, 6));
        let diff_thick = all_nu(&thickness_nu(&diff, 6));
        assert!(
            both_thick || diff_thick,
            "dichotomy failed for p = {p}, S = {s}"
        );
        pairs += 1;
    }

    // Diagonal of a descending 4-chain stays thick and reports the escape
    // bounds for members that leave each chain stage.
    let chain: Vec<FinFamily> = vec![
        "contains(0)".parse().unwrap(),
        "(contains(0) & contains(1))".parse().unwrap(),
        "((contains(0) & contains(1)) & contains(2))".parse().unwrap(),
        "(((contains(0) & contains(1)) & contains(2)) & contains(3))".parse().unwrap(),
    ];
    let report = diagonal_thick(&chain, 5).expect("diagonal construction");
    assert!(all_nu(&report.rows), "composite family must stay thick");
    assert_eq!(report.rows.len(), 6);
    assert_eq!(report.diff_bounds.len(), chain.len() - 1);
    for (pos, (n, k)) in report.diff_bounds.iter().enumerate() {
        assert_eq!(*n, pos + 1);
        // The escape bound at position n is the guard at the last level that
        // still drew from an earlier chain stage.
        let guard = report
            .guards
            .iter()
            .filter(|(_, idx, _)| *idx < *n)
            .map(|(_, _, nu)| *nu)
            .max()
            .expect("at least one earlier stage");
        assert_eq!(*k, guard, "escape bound at chain position {n}");
    }
    assert!(!report.guards.is_empty());
    println!(
        "criterion 8: PASS - nu(m) = m+1 through m = 8; 50 dichotomy pairs ({draws} draws); \
         4-chain diagonal thick through m = 5 with escape bounds {:?}",
        report.diff_bounds
    );
}

// ---------------------------------------------------------------------------
// 9. Euler polygons for y' = 2x.
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_euler_error_is_exactly_minus_h() {
    let f = poly_expr(&[rint(0), rint(2)], "x"); // y' = 2x
    let grid = [rat(1, 4), rat(1, 2), rat(3, 4), rint(1)];
    let study = peano_study(
        &f,
        "x",
        "y",
        &rint(0),
        &rint(0),
        &rat(1, 4),
        &rint(1),
        7,
        &grid,
        &cfg(),
    )
    .expect("study");

    // Step sizes h = 2^-k for k = 2..=8.
    assert_eq!(study.step_sizes.len(), 7);
    for (j, h) in study.step_sizes.iter().enumerate() {
        assert_eq!(h, &rat(1, 1 << (j + 2)));
    }

    for row in &study.rows {
        let exact = &row.point * &row.point; // y(x) = x^2
        // Per-level global error at this grid point is exactly -h*x, so at
        // the right endpoint x = 1 it is exactly -h.
        for (j, v) in row.values.iter().enumerate() {
            let h = &study.step_sizes[j];
            assert_eq!(
                v - &exact,
                -(h * &row.point),
                "error at x = {} for h = {h}",
                row.point
            );
        }
        for ratio in row.ratios.iter().flatten() {
            assert_eq!(ratio, &rat(1, 2), "halving ratio at x = {}", row.point);
        }
        let defect = infinilab::rational::abs(&(&row.extrapolated - &exact));
        assert!(
            defect <= rat(1, 1_000_000),
            "extrapolation at x = {} misses by {defect}",
            row.point
        );
    }
    println!(
        "criterion 9: PASS - errors exactly -h for h = 1/4 .. 1/256, ratios exactly 1/2, extrapolation exact"
    );
}

// ---------------------------------------------------------------------------
// 10. Homogeneity and pullback on randomized fibers.
// ---------------------------------------------------------------------------

fn remap_names(phi: &SetFormula, sigma: &[usize]) -> SetFormula {
    fn term(t: &SetTerm, sigma: &[usize]) -> SetTerm {
        match t {
            SetTerm::Name(n) => SetTerm::Name(sigma[*n]),
            other => other.clone(),
        }
    }
    match phi {
        SetFormula::Eq(a, b) => SetFormula::Eq(term(a, sigma), term(b, sigma)),
        SetFormula::Mem(a, b) => SetFormula::Mem(term(a, sigma), term(b, sigma)),
        SetFormula::St(t) => SetFormula::St(term(t, sigma)),
        SetFormula::Not(f) => SetFormula::not(remap_names(f, sigma)),
        SetFormula::And(a, b) => SetFormula::And(
            Box::new(remap_names(a, sigma)),
            Box::new(remap_names(b, sigma)),
        ),
        SetFormula::Exists(v, f) => {
            SetFormula::Exists(v.clone(), Box::new(remap_names(f, sigma)))
        }
    }
}

fn rand_cell<R: Rng>(rng: &mut R, rank: usize, values: &[HFSet]) -> ValueSet {
    let tuple = |rng: &mut R| -> Vec<HFSet> {
        (0..rank)
            .map(|_| values[rng.gen_range(0..values.len())].clone())
            .collect()
    };
    let mut tuples = vec![tuple(rng)];
    if rng.gen_bool(0.5) {
        tuples.push(tuple(rng));
    }
    ValueSet::new(tuples)
}

fn rand_fiber<R: Rng>(rng: &mut R, rank: usize, values: &[HFSet]) -> Fiber {
    let prelude_len = rng.gen_range(0..=1);
    let period_len = rng.gen_range(1..=2);
    let prelude = (0..prelude_len)
        .map(|_| rand_cell(rng, rank, values))
        .collect();
    let period = (0..period_len)
        .map(|_| rand_cell(rng, rank, values))
        .collect();
    Fiber::tabular(rank, prelude, period).expect("nonempty cells")
}

fn rand_index_set<R: Rng>(rng: &mut R) -> IndexSet {
    const POOL: [&str; 7] = [
        "period=1",
        "period=10",
        "period=01",
        "prelude=1 period=10",
        "period=110",
        "prelude=00 period=1",
        "period=011",
    ];
    POOL[rng.gen_range(0..POOL.len())].parse().unwrap()
}

fn rand_qf_formula<R: Rng>(rng: &mut R, names: usize, values: &[HFSet], depth: usize) -> SetFormula {
    let term = |rng: &mut R| -> SetTerm {
        if rng.gen_bool(0.6) {
            SetTerm::Name(rng.gen_range(0..names))
        } else {
            SetTerm::Const(values[rng.gen_range(0..values.len())].clone())
        }
    };
    let atom = |rng: &mut R| -> SetFormula {
        if rng.gen_bool(0.5) {
            SetFormula::Eq(term(rng), term(rng))
        } else {
            SetFormula::Mem(term(rng), term(rng))
        }
    };
    if depth == 0 {
        return atom(rng);
    }
    match rng.gen_range(0..4) {
        0 | 1 => atom(rng),
        2 => SetFormula::not(rand_qf_formula(rng, names, values, depth - 1)),
        _ => SetFormula::And(
            Box::new(rand_qf_formula(rng, names, values, depth - 1)),
            Box::new(rand_qf_formula(rng, names, values, depth - 1)),
        ),
    }
}

#[test]
fn criterion_10_homogeneity_and_pullback() {
    let values = HFSet::universe(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC10);
    let samples = 100usize;
    let mut violations = 0usize;

    for sample in 0..samples {
        // --- Homogeneity: two fibers whose projections agree everywhere.
        let base_rank = rng.gen_range(1..=2);
        let full_rank = base_rank + 1;
        let prelude_len = rng.gen_range(0..=1usize);
        let period_len = rng.gen_range(1..=2usize);
        let base_cells: Vec<ValueSet> = (0..prelude_len + period_len)
            .map(|_| rand_cell(&mut rng, base_rank, &values))
            .collect();
        let extra1: Vec<ValueSet> = (0..prelude_len + period_len)
            .map(|_| rand_cell(&mut rng, 1, &values))
            .collect();
        let extra2: Vec<ValueSet> = (0..prelude_len + period_len)
            .map(|_| rand_cell(&mut rng, 1, &values))
            .collect();
        let mut perm: Vec<usize> = (0..full_rank).collect();
        perm.shuffle(&mut rng);

        let build = |extras: &[ValueSet], permuted: bool| -> Fiber {
            let cells: Vec<ValueSet> = base_cells
                .iter()
                .zip(extras)
                .map(|(cell, extra)| {
                    let mut tuples = Vec::new();
                    for t in cell.tuples() {
                        for x in extra.tuples() {
                            let mut u = vec![HFSet::empty(); full_rank];
                            if permuted {
                                for (j, v) in t.iter().enumerate() {
                                    u[perm[j]] = v.clone();
                                }
                                u[perm[base_rank]] = x[0].clone();
                            } else {
                                u[..base_rank].clone_from_slice(t);
                                u[base_rank] = x[0].clone();
                            }
                            tuples.push(u);
                        }
                    }
                    ValueSet::new(tuples)
                })
                .collect();
            Fiber::tabular(
                full_rank,
                cells[..prelude_len].to_vec(),
                cells[prelude_len..].to_vec(),
            )
            .expect("product cells")
        };
        let q1 = build(&extra1, false);
        let q2 = build(&extra2, true);
        let sigma1: Vec<usize> = (0..base_rank).collect();
        let sigma2: Vec<usize> = (0..base_rank).map(|j| perm[j]).collect();
        assert_eq!(
            q1.project(&sigma1).unwrap(),
            q2.project(&sigma2).unwrap(),
            "sample {sample}: projections must agree by construction"
        );

        let p = rand_index_set(&mut rng);
        let phi = rand_qf_formula(&mut rng, base_rank, &values, 2);
        let c1 = Condition::new(p.clone(), q1).unwrap();
        let c2 = Condition::new(p.clone(), q2).unwrap();
        let v1 = forces_los(&c1, &remap_names(&phi, &sigma1), 3).unwrap();
        let v2 = forces_los(&c2, &remap_names(&phi, &sigma2), 3).unwrap();
        if v1 != v2 {
            violations += 1;
            eprintln!("sample {sample}: homogeneity broke on {phi}");
        }

        // --- Pullback along an increasing enumeration gamma: p' -> p.
        let rank = rng.gen_range(1..=2);
        let q = rand_fiber(&mut rng, rank, &values);
        let target = rand_index_set(&mut rng);
        let domain = rand_index_set(&mut rng);
        let gamma = Reindex::new(domain.clone(), target.clone()).unwrap();
        let pulled = q.reindex(&gamma).expect("tabular reindex");
        let phi = rand_qf_formula(&mut rng, rank, &values, 2);
        let before = forces_los(&Condition::new(target, q).unwrap(), &phi, 3).unwrap();
        let after = forces_los(&Condition::new(domain.clone(), pulled).unwrap(), &phi, 3).unwrap();
        if before != after {
            violations += 1;
            eprintln!("sample {sample}: pullback broke on {phi}");
        }

        // --- Simplified forcing is invariant under the same reindexing.
        let name = |rng: &mut ChaCha8Rng| -> SimpleName {
            let prelude: Vec<HFSet> = (0..rng.gen_range(0..=1))
                .map(|_| values[rng.gen_range(0..values.len())].clone())
                .collect();
            let period: Vec<HFSet> = (1..=rng.gen_range(1..=2))
                .map(|_| values[rng.gen_range(0..values.len())].clone())
                .collect();
            SimpleName::new(prelude, period).unwrap()
        };
        let a = name(&mut rng);
        let b = name(&mut rng);
        let psi = match rng.gen_range(0..4) {
            0 => SimpleFormula::Eq(a.clone(), b.clone()),
            1 => SimpleFormula::Mem(a.clone(), b.clone()),
            2 => SimpleFormula::St(a.clone()),
            _ => SimpleFormula::Not(Box::new(SimpleFormula::Eq(a.clone(), b.clone()))),
        };
        let target = rand_index_set(&mut rng);
        let domain = rand_index_set(&mut rng);
        let gamma = Reindex::new(domain.clone(), target.clone()).unwrap();
        let compose = |f: &SimpleFormula| -> SimpleFormula {
            match f {
                SimpleFormula::Eq(x, y) => {
                    SimpleFormula::Eq(x.compose(&gamma).unwrap(), y.compose(&gamma).unwrap())
                }
                SimpleFormula::Mem(x, y) => {
                    SimpleFormula::Mem(x.compose(&gamma).unwrap(), y.compose(&gamma).unwrap())
                }
                SimpleFormula::St(x) => SimpleFormula::St(x.compose(&gamma).unwrap()),
                SimpleFormula::Not(inner) => SimpleFormula::Not(Box::new(match inner.as_ref() {
                    SimpleFormula::Eq(x, y) => SimpleFormula::Eq(
                        x.compose(&gamma).unwrap(),
                        y.compose(&gamma).unwrap(),
                    ),
                    _ => unreachable!("generator only negates equalities"),
                })),
            }
        };
        let before = simple_forces(&target, &psi).unwrap();
        let after = simple_forces(&domain, &compose(&psi)).unwrap();
        if before != after {
            violations += 1;
            eprintln!("sample {sample}: simplified forcing broke on reindexing");
        }
    }

    assert_eq!(violations, 0, "invariance violations detected");
    println!(
        "criterion 10: PASS - {samples} samples x (homogeneity + pullback + simplified forcing), 0 violations"
    );
}
