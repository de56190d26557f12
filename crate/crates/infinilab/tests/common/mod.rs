//! Shared fixtures for the integration suites: exact polynomial oracles,
//! seeded random generators, and the rewriter corpus.

#![allow(dead_code)]

use infinilab::expr::Expr;
use infinilab::rational::{rat, rint, Rational};
use num_traits::Zero;
use rand::Rng;

/// Builds the expression `c0 + c1*x + ... + cn*x^n` (constant term first).
pub fn poly_expr(coeffs: &[Rational], var: &str) -> Expr {
    let mut acc: Option<Expr> = None;
    for (k, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let monomial = if k == 0 {
            Expr::Num(c.clone())
        } else {
            let power = if k == 1 {
                Expr::Var(var.to_string())
            } else {
                Expr::Pow(Box::new(Expr::Var(var.to_string())), k as i64)
            };
            Expr::Mul(Box::new(Expr::Num(c.clone())), Box::new(power))
        };
        acc = Some(match acc {
            None => monomial,
            Some(e) => Expr::Add(Box::new(e), Box::new(monomial)),
        });
    }
    acc.unwrap_or(Expr::Num(rint(0)))
}

/// Horner evaluation of a coefficient list (constant term first).
pub fn eval_poly(coeffs: &[Rational], x: &Rational) -> Rational {
    let mut acc = rint(0);
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Coefficients of the derivative: d/dx sum c_k x^k = sum k*c_k x^(k-1).
pub fn diff_coeffs(coeffs: &[Rational]) -> Vec<Rational> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * rint(k as i64))
        .collect()
}

/// Coefficients of the antiderivative with zero constant term.
pub fn antideriv_coeffs(coeffs: &[Rational]) -> Vec<Rational> {
    let mut out = vec![rint(0)];
    for (k, c) in coeffs.iter().enumerate() {
        out.push(c / rint(k as i64 + 1));
    }
    out
}

/// Exact definite integral of the polynomial over `[a, b]`.
pub fn integral_oracle(coeffs: &[Rational], a: &Rational, b: &Rational) -> Rational {
    let f = antideriv_coeffs(coeffs);
    eval_poly(&f, b) - eval_poly(&f, a)
}

/// A random rational with numerator in `-12..=12` and denominator in `1..=8`.
pub fn rand_rational<R: Rng>(rng: &mut R) -> Rational {
    let num = rng.gen_range(-12i64..=12);
    let den = rng.gen_range(1i64..=8);
    rat(num, den)
}

/// Random coefficient list of degree at most `max_deg` (constant term first).
pub fn rand_poly<R: Rng>(rng: &mut R, max_deg: usize) -> Vec<Rational> {
    let deg = rng.gen_range(0..=max_deg);
    (0..=deg).map(|_| rand_rational(rng)).collect()
}

/// A random nondegenerate interval `a < b`.
pub fn rand_interval<R: Rng>(rng: &mut R) -> (Rational, Rational) {
    loop {
        let a = rand_rational(rng);
        let b = rand_rational(rng);
        if a < b {
            return (a, b);
        }
        if b < a {
            return (b, a);
        }
    }
}

/// The rewriter corpus. Every entry stays inside the supported shapes: an
/// optional leading standard-quantifier block, then a prefix of plain and
/// infinitesimal quantifiers that either forms two direction blocks or keeps
/// all infinitesimal quantifiers of one kind, over a matrix free of marked
/// quantifiers.
pub const REWRITE_CORPUS: [&str; 34] = [
    "Ain h. Ein k. P(h, k)",
    "Ein h. Ain k. P(h, k)",
    "Ain h. Ein k. (h != 0 -> dq(h) = d + k)",
    "Ain h. Ain k. P(h, k)",
    "Ein h. Ein k. P(h, k)",
    "Ain h. Ain k. A y. P(h, k, y)",
    "Ein h. A y. Ein k. P(h, k, y)",
    "A u. Ain h. E v. Ein k. P(u, h, v, k)",
    "A x. E y. P(x, y)",
    "Ast m. A x. (mag(x) < 1/m | P(x))",
    "Ain h. P(h)",
    "Ein h. P(h)",
    "A x. Ain h. P(x, h)",
    "E x. Ein h. P(x, h)",
    "Ain g. Ain h. Ain k. P(g, h, k)",
    "Ein g. Ein h. Ein k. P(g, h, k)",
    "Ain h. A x. Ain k. E y. P(h, x, k, y)",
    "Ein h. E x. Ein k. A y. P(h, x, k, y)",
    "Ain h. Ein k. Q(h) = k",
    "Ain h. Ein k. (P(h) & R(k))",
    "Ain h. Ein k. (P(h) | R(h, k))",
    "Ain h. Ein k. !(h = k)",
    "Ain h. Ein k. (s in t -> P(h, k))",
    "Ein h. Ain k. (P(h, k) -> R(h))",
    "A x. A y. Ain h. Ein k. P(x, y, h, k)",
    "Ain h. Ein k. E y. P(h, k, y)",
    "Ain g. A x. Ain h. P(g, x, h)",
    "Est n. Ain h. Ein k. P(n, h, k)",
    "Ast m. Ast n. Ain h. Ein k. P(m, n, h, k)",
    "Ain h. Ein k. P(h, k, v, w)",
    "Ein k. A x. P(k, x)",
    "Ain h. (h = 0 | P(h))",
    "x = y",
    "A x. (x in S -> E y. (y in S & !(x = y)))",
];
