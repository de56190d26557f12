//! Infinitesimal calculus with exact certificates.
//!
//! Every operation here works over exact rationals and truncated series
//! numbers; there is no floating point. Derivatives are shadows of difference
//! quotients at several infinitesimal displacements, Riemann integrals come
//! with a closed-form remainder that is verifiably a sum of positive powers of
//! the grid spacing, Euler polygons and grid measures carry the concrete
//! counting facts that justify them, and the differential check classifies an
//! exact error ratio instead of estimating one.

pub mod interval;
pub mod poly;

use crate::expr::{Env, EvalConfig, Expr, ExprError};
use crate::hyper::{Class, HyperError, LCNum};
use crate::rational::{self, ceil_int, floor_int, is_integer, pow_i, rat, rint, Rational};
use interval::IntervalUnion;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use poly::{binomial, power_sum, MultiPoly, UniPoly};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalcError {
    #[error("not a polynomial in {var}: {detail}")]
    NonPolynomial { var: String, detail: String },
    #[error("difference quotients disagree: {detail}")]
    ShadowDisagreement { detail: String },
    #[error("displacement {h} is not a nonzero infinitesimal")]
    BadDisplacement { h: String },
    #[error("no displacement choices supplied")]
    NoDisplacements,
    #[error("malformed interval data: {detail}")]
    MalformedInterval { detail: String },
    #[error("step budget exceeded: {steps} steps needed, cap is {cap}")]
    StepBudget { steps: String, cap: u64 },
    #[error("grid point {point} is not aligned with the coarsest step")]
    GridMisaligned { point: String },
    #[error("bad parameter: {detail}")]
    BadParameter { detail: String },
    #[error("certificate insufficient: tail bound {tail} is not below eps {eps}")]
    CertificateInsufficient { tail: String, eps: String },
    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },
    #[error("direction vector must be nonzero")]
    ZeroDirection,
    #[error("internal invariant violated: {detail}")]
    Internal { detail: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Hyper(#[from] HyperError),
}

// ---------------------------------------------------------------------------
// polynomial extraction

/// Reads `f` as a univariate polynomial in `var` with rational coefficients.
///
/// Constant subexpressions are folded with the evaluation config (so a series
/// node with a constant argument folds to its truncated rational value); any
/// other variable, non-constant divisor, negative power, or series node makes
/// the expression non-polynomial.
pub fn poly_coeffs(f: &Expr, var: &str, cfg: &EvalConfig) -> Result<UniPoly, CalcError> {
    let empty = BTreeMap::new();
    if let Ok(c) = f.eval_rational(&empty, cfg) {
        return Ok(UniPoly::constant(c));
    }
    let non_poly = |detail: &str| CalcError::NonPolynomial {
        var: var.to_string(),
        detail: detail.to_string(),
    };
    match f {
        Expr::Num(c) => Ok(UniPoly::constant(c.clone())),
        Expr::Var(v) if v == var => Ok(UniPoly::x()),
        Expr::Var(v) => Err(non_poly(&format!("free variable {v}"))),
        Expr::Neg(a) => Ok(poly_coeffs(a, var, cfg)?.scale(&rint(-1))),
        Expr::Add(a, b) => Ok(poly_coeffs(a, var, cfg)?.add(&poly_coeffs(b, var, cfg)?)),
        Expr::Sub(a, b) => {
            Ok(poly_coeffs(a, var, cfg)?.add(&poly_coeffs(b, var, cfg)?.scale(&rint(-1))))
        }
        Expr::Mul(a, b) => Ok(poly_coeffs(a, var, cfg)?.mul(&poly_coeffs(b, var, cfg)?)),
        Expr::Div(a, b) => match b.eval_rational(&empty, cfg) {
            Ok(v) if v.is_zero() => Err(HyperError::DivisionByZero.into()),
            Ok(v) => Ok(poly_coeffs(a, var, cfg)?.scale(&v.recip())),
            Err(_) => Err(non_poly("division by a non-constant expression")),
        },
        Expr::Pow(base, k) => {
            if *k < 0 {
                return Err(non_poly("negative power of a non-constant base"));
            }
            let b = poly_coeffs(base, var, cfg)?;
            let mut acc = UniPoly::constant(rint(1));
            for _ in 0..*k {
                acc = acc.mul(&b);
            }
            Ok(acc)
        }
        Expr::Exp(_) | Expr::Sin(_) | Expr::Cos(_) => {
            Err(non_poly("series node with a non-constant argument"))
        }
    }
}

// ---------------------------------------------------------------------------
// derivatives

/// The standard battery of displacements: `eps`, `eps^2`, `2 eps`, `-eps`.
pub fn default_h_choices() -> Vec<LCNum> {
    vec![
        LCNum::epsilon(),
        LCNum::monomial(rint(1), rint(2)),
        LCNum::monomial(rint(2), rint(1)),
        LCNum::monomial(rint(-1), rint(1)),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivCheck {
    pub h: LCNum,
    pub quotient: LCNum,
    #[serde(serialize_with = "rational::ser::rat")]
    pub shadow: Rational,
    pub residual_class: Class,
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivReport {
    #[serde(serialize_with = "rational::ser::rat")]
    pub point: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub value: Rational,
    pub checks: Vec<DerivCheck>,
}

/// Derivative of `f` at `c`: the common shadow of `(f(c+h) - f(c))/h` over
/// every supplied nonzero infinitesimal displacement `h`.
pub fn derivative_at(
    f: &Expr,
    var: &str,
    c: &Rational,
    h_choices: &[LCNum],
    cfg: &EvalConfig,
) -> Result<DerivReport, CalcError> {
    if h_choices.is_empty() {
        return Err(CalcError::NoDisplacements);
    }
    let mut env_r = BTreeMap::new();
    env_r.insert(var.to_string(), c.clone());
    let fc = f.eval_rational(&env_r, cfg)?;

    let mut checks = Vec::new();
    let mut value: Option<Rational> = None;
    for h in h_choices {
        if h.classify()? != Class::Infinitesimal {
            return Err(CalcError::BadDisplacement { h: h.to_string() });
        }
        let mut env = Env::new();
        env.insert(var.to_string(), LCNum::from_rational(c.clone()) + h.clone());
        let fch = f.eval(&env, cfg)?;
        let q = (fch - LCNum::from_rational(fc.clone())).try_div(h)?;
        let shadow = q.shadow()?;
        let residual_class =
            (q.clone() - LCNum::from_rational(shadow.clone())).classify()?;
        if !matches!(residual_class, Class::Zero | Class::Infinitesimal) {
            return Err(CalcError::Internal {
                detail: format!("residual of quotient at h = {h} is {residual_class}"),
            });
        }
        match &value {
            None => value = Some(shadow.clone()),
            Some(v) if *v != shadow => {
                return Err(CalcError::ShadowDisagreement {
                    detail: format!("h = {h} gives {shadow}, earlier choice gave {v}"),
                })
            }
            _ => {}
        }
        checks.push(DerivCheck { h: h.clone(), quotient: q, shadow, residual_class });
    }
    Ok(DerivReport { point: c.clone(), value: value.unwrap(), checks })
}

// ---------------------------------------------------------------------------
// Riemann sums, symbolic mode

/// Tag position inside each grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TagScheme {
    Left,
    Right,
    Midpoint,
}

impl TagScheme {
    pub fn tau(&self) -> Rational {
        match self {
            TagScheme::Left => rint(0),
            TagScheme::Right => rint(1),
            TagScheme::Midpoint => rat(1, 2),
        }
    }
}

/// Closed form of the tagged grid sum of a polynomial over `[a, b]`.
///
/// Variables of the result are `(h, sa, sb)`: the grid spacing and the two
/// endpoint offsets divided by `h` (`sa` in `[0,1)`, `sb` in `(0,1]`). The
/// summation index runs over the grid points `i*h` of `[a, b]` except the
/// last, i.e. from `i_a = a/h + sa` to `i_b = b/h - sb`, and each cell
/// contributes `h * f((i + tau) h)`.
fn grid_sum_closed_form(p: &UniPoly, a: &Rational, b: &Rational, tau: &Rational) -> MultiPoly {
    let ia_m1 = MultiPoly::monomial(3, 0, -1, a.clone())
        .add(&MultiPoly::var(3, 1))
        .add(&MultiPoly::constant(3, rint(-1)));
    let ib = MultiPoly::monomial(3, 0, -1, b.clone()).add(&MultiPoly::var(3, 2).neg());
    let mut total = MultiPoly::zero(3);
    for (d, c_d) in p.0.iter().enumerate() {
        if c_d.is_zero() {
            continue;
        }
        for j in 0..=d {
            let coef = c_d * binomial(d as u64, j as u64) * pow_i(tau, (d - j) as i64);
            if coef.is_zero() {
                continue;
            }
            let s_j = power_sum(j);
            let diff = s_j.eval_multi(&ib).add(&s_j.eval_multi(&ia_m1).neg());
            total = total.add(&diff.mul(&MultiPoly::monomial(3, 0, (d + 1) as i32, coef)));
        }
    }
    total
}

/// Checks the structural certificate: no negative powers of `h` survive, and
/// the only `h`-free monomial is the constant term.
fn check_remainder_structure(total: &MultiPoly) -> Result<(), CalcError> {
    for (key, c) in &total.terms {
        if key[0] < 0 {
            return Err(CalcError::Internal {
                detail: format!("negative h power {} with coefficient {c}", key[0]),
            });
        }
        if key[0] == 0 && (key[1] != 0 || key[2] != 0) {
            return Err(CalcError::Internal {
                detail: format!(
                    "h-free monomial sa^{} sb^{} with coefficient {c}",
                    key[1], key[2]
                ),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolicIntegral {
    #[serde(serialize_with = "rational::ser::rat")]
    pub a: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub b: Rational,
    /// Integrand coefficients, constant term first.
    #[serde(serialize_with = "rational::ser::rat_vec")]
    pub coeffs: Vec<Rational>,
    #[serde(serialize_with = "rational::ser::rat")]
    pub value: Rational,
    /// Number of monomials in the remainder (all carry `h^k` with `k >= 1`).
    pub remainder_terms: usize,
    /// Least power of `h` in the remainder, if it is nonzero.
    pub remainder_min_h_order: Option<i32>,
    /// The full sum instantiated at `h = eps`, `sa = sb = 1/2`.
    pub sample_at_eps: LCNum,
    #[serde(skip)]
    pub closed_form: MultiPoly,
}

impl SymbolicIntegral {
    /// Evaluates the closed-form sum at a concrete positive infinitesimal
    /// spacing and concrete endpoint offsets.
    pub fn instantiate(
        &self,
        h: &LCNum,
        sa: &Rational,
        sb: &Rational,
    ) -> Result<LCNum, CalcError> {
        if h.classify()? != Class::Infinitesimal || !(h > &LCNum::zero()) {
            return Err(CalcError::BadDisplacement { h: h.to_string() });
        }
        if sa < &rint(0) || sa >= &rint(1) || sb <= &rint(0) || sb > &rint(1) {
            return Err(CalcError::BadParameter {
                detail: format!("offsets need sa in [0,1), sb in (0,1]; got {sa}, {sb}"),
            });
        }
        Ok(self.closed_form.eval_lcnum(&[
            h.clone(),
            LCNum::from_rational(sa.clone()),
            LCNum::from_rational(sb.clone()),
        ])?)
    }
}

/// Symbolic grid integral of a polynomial over `[a, b]`.
///
/// The left-tagged grid sum is computed in closed form as a polynomial in
/// `(h, sa, sb)`; its `h`-free part is a single constant, which is the value,
/// and everything else carries a positive power of `h`, which certifies that
/// the remainder is infinitesimal for every infinitesimal spacing and every
/// admissible pair of endpoint offsets.
pub fn riemann_symbolic(
    f: &Expr,
    var: &str,
    a: &Rational,
    b: &Rational,
    cfg: &EvalConfig,
) -> Result<SymbolicIntegral, CalcError> {
    if a >= b {
        return Err(CalcError::MalformedInterval {
            detail: format!("need a < b, got a = {a}, b = {b}"),
        });
    }
    let p = poly_coeffs(f, var, cfg)?;
    let total = grid_sum_closed_form(&p, a, b, &rint(0));
    check_remainder_structure(&total)?;
    let value = total.constant_term();
    let mut remainder_terms = 0usize;
    let mut min_order: Option<i32> = None;
    for key in total.terms.keys() {
        if key[0] > 0 {
            remainder_terms += 1;
            min_order = Some(match min_order {
                None => key[0],
                Some(m) => m.min(key[0]),
            });
        }
    }
    let half = rat(1, 2);
    let sample_at_eps = total.eval_lcnum(&[
        LCNum::epsilon(),
        LCNum::from_rational(half.clone()),
        LCNum::from_rational(half),
    ])?;
    let residual = (sample_at_eps.clone() - LCNum::from_rational(value.clone())).classify()?;
    if !matches!(residual, Class::Zero | Class::Infinitesimal) {
        return Err(CalcError::Internal {
            detail: format!("sample remainder classifies as {residual}"),
        });
    }
    Ok(SymbolicIntegral {
        a: a.clone(),
        b: b.clone(),
        coeffs: p.0.clone(),
        value,
        remainder_terms,
        remainder_min_h_order: min_order,
        sample_at_eps,
        closed_form: total,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TaggedRow {
    pub scheme: TagScheme,
    #[serde(serialize_with = "rational::ser::rat")]
    pub tau: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub shadow: Rational,
    pub matches_baseline: bool,
    /// Least power of `h` in (tagged sum - left sum); `None` when identical.
    pub difference_min_h_order: Option<i32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaggedReport {
    #[serde(serialize_with = "rational::ser::rat")]
    pub value: Rational,
    pub rows: Vec<TaggedRow>,
    pub all_agree: bool,
}

/// Re-sums the grid integral with tags moved inside each cell and checks that
/// every scheme has the same `h`-free part as the left sum.
pub fn tagged_sum_check(
    f: &Expr,
    var: &str,
    a: &Rational,
    b: &Rational,
    schemes: &[TagScheme],
    cfg: &EvalConfig,
) -> Result<TaggedReport, CalcError> {
    if a >= b {
        return Err(CalcError::MalformedInterval {
            detail: format!("need a < b, got a = {a}, b = {b}"),
        });
    }
    let p = poly_coeffs(f, var, cfg)?;
    let baseline = grid_sum_closed_form(&p, a, b, &rint(0));
    check_remainder_structure(&baseline)?;
    let value = baseline.constant_term();
    let mut rows = Vec::new();
    for scheme in schemes {
        let tau = scheme.tau();
        let total = grid_sum_closed_form(&p, a, b, &tau);
        check_remainder_structure(&total)?;
        let shadow = total.constant_term();
        let diff = total.add(&baseline.neg());
        let difference_min_h_order = diff.terms.keys().map(|k| k[0]).min();
        if let Some(m) = difference_min_h_order {
            if m < 1 {
                return Err(CalcError::Internal {
                    detail: format!("tag difference has h order {m}"),
                });
            }
        }
        rows.push(TaggedRow {
            scheme: *scheme,
            tau,
            matches_baseline: shadow == value,
            shadow,
            difference_min_h_order,
        });
    }
    let all_agree = rows.iter().all(|r| r.matches_baseline);
    Ok(TaggedReport { value, rows, all_agree })
}

// ---------------------------------------------------------------------------
// Riemann sums, numeric mode

#[derive(Debug, Clone)]
pub struct NumericBudget {
    pub j_min: u32,
    pub j_max: u32,
    pub tol: Rational,
}

impl Default for NumericBudget {
    fn default() -> Self {
        NumericBudget { j_min: 3, j_max: 10, tol: rat(1, 1_000_000) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericLevel {
    pub j: u32,
    #[serde(serialize_with = "rational::ser::rat")]
    pub h: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub left_sum: Rational,
    #[serde(serialize_with = "rational::ser::rat_opt")]
    pub extrapolated: Option<Rational>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericIntegral {
    #[serde(serialize_with = "rational::ser::rat")]
    pub value: Rational,
    pub levels: Vec<NumericLevel>,
    /// Successive quotients of left-sum increments; 2 means first order.
    #[serde(serialize_with = "rational::ser::rat_opt_vec")]
    pub observed_ratios: Vec<Option<Rational>>,
    #[serde(serialize_with = "rational::ser::rat")]
    pub final_increment: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub tol: Rational,
    pub converged: bool,
}

/// Exact left sum of `f` over the grid points of `[a, b)` at spacing `2^-j`.
fn left_sum(
    f: &Expr,
    var: &str,
    a: &Rational,
    b: &Rational,
    j: u32,
    cfg: &EvalConfig,
) -> Result<Rational, CalcError> {
    let h = pow_i(&rat(1, 2), j as i64);
    let lo = ceil_int(&(a / &h));
    let hi = ceil_int(&(b / &h)) - 1;
    let steps: BigInt = &hi - &lo + 1;
    if steps > BigInt::from(1u64 << 22) {
        return Err(CalcError::StepBudget { steps: steps.to_string(), cap: 1 << 22 });
    }
    let mut acc = rint(0);
    let mut i = lo;
    let mut env = BTreeMap::new();
    while i <= hi {
        let x = Rational::from_integer(i.clone()) * h.clone();
        env.insert(var.to_string(), x);
        acc += f.eval_rational(&env, cfg)?;
        i += 1;
    }
    Ok(acc * h)
}

/// Numeric grid integral: exact left sums at spacings `2^-j` plus one step of
/// extrapolation, with the observed increment ratios as the order certificate.
pub fn riemann_numeric(
    f: &Expr,
    var: &str,
    a: &Rational,
    b: &Rational,
    budget: &NumericBudget,
    cfg: &EvalConfig,
) -> Result<NumericIntegral, CalcError> {
    if a >= b {
        return Err(CalcError::MalformedInterval {
            detail: format!("need a < b, got a = {a}, b = {b}"),
        });
    }
    if budget.j_min + 2 > budget.j_max || !budget.tol.is_positive() {
        return Err(CalcError::BadParameter {
            detail: "need j_min + 2 <= j_max and tol > 0".to_string(),
        });
    }
    let mut sums = Vec::new();
    for j in budget.j_min..=budget.j_max {
        sums.push((j, left_sum(f, var, a, b, j, cfg)?));
    }
    let mut levels = Vec::new();
    for (k, (j, t)) in sums.iter().enumerate() {
        let extrapolated = sums.get(k + 1).map(|(_, t_next)| rint(2) * t_next - t);
        levels.push(NumericLevel {
            j: *j,
            h: pow_i(&rat(1, 2), *j as i64),
            left_sum: t.clone(),
            extrapolated,
        });
    }
    let mut observed_ratios = Vec::new();
    for w in sums.windows(3) {
        let d0 = &w[1].1 - &w[0].1;
        let d1 = &w[2].1 - &w[1].1;
        observed_ratios.push(if d1.is_zero() { None } else { Some(d0 / d1) });
    }
    let extr: Vec<Rational> =
        levels.iter().filter_map(|l| l.extrapolated.clone()).collect();
    let final_increment =
        rational::abs(&(&extr[extr.len() - 1] - &extr[extr.len() - 2]));
    let converged = final_increment <= budget.tol;
    Ok(NumericIntegral {
        value: extr.last().unwrap().clone(),
        levels,
        observed_ratios,
        final_increment,
        tol: budget.tol.clone(),
        converged,
    })
}

// ---------------------------------------------------------------------------
// Euler polygons

#[derive(Debug, Clone, Serialize)]
pub struct Polyline {
    #[serde(serialize_with = "rational::ser::rat_pairs")]
    pub points: Vec<(Rational, Rational)>,
}

impl Polyline {
    /// Linear interpolation; clamps outside the x range.
    pub fn value_at(&self, x: &Rational) -> Rational {
        let pts = &self.points;
        if pts.is_empty() {
            return rint(0);
        }
        if x <= &pts[0].0 {
            return pts[0].1.clone();
        }
        for w in pts.windows(2) {
            if x <= &w[1].0 {
                let t = (x - &w[0].0) / (&w[1].0 - &w[0].0);
                return &w[0].1 + t * (&w[1].1 - &w[0].1);
            }
        }
        pts.last().unwrap().1.clone()
    }
}

const EULER_STEP_CAP: u64 = 1 << 20;

/// Euler polygon for `y' = f(x, y)` from `(x0, y0)` with exact step `h`,
/// continuing until the grid passes `x_max`.
pub fn peano_euler(
    f: &Expr,
    x_var: &str,
    y_var: &str,
    x0: &Rational,
    y0: &Rational,
    h: &Rational,
    x_max: &Rational,
    cfg: &EvalConfig,
) -> Result<Polyline, CalcError> {
    if !h.is_positive() {
        return Err(CalcError::BadParameter { detail: format!("need h > 0, got {h}") });
    }
    if x_max <= x0 {
        return Err(CalcError::BadParameter {
            detail: format!("need x_max > x0, got x0 = {x0}, x_max = {x_max}"),
        });
    }
    let steps = ceil_int(&((x_max - x0) / h));
    if steps > BigInt::from(EULER_STEP_CAP) {
        return Err(CalcError::StepBudget { steps: steps.to_string(), cap: EULER_STEP_CAP });
    }
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut points = vec![(x.clone(), y.clone())];
    let mut env = BTreeMap::new();
    while x < *x_max {
        env.insert(x_var.to_string(), x.clone());
        env.insert(y_var.to_string(), y.clone());
        let slope = f.eval_rational(&env, cfg)?;
        y += h * slope;
        x += h;
        points.push((x.clone(), y.clone()));
    }
    Ok(Polyline { points })
}

#[derive(Debug, Clone, Serialize)]
pub struct PeanoRow {
    #[serde(serialize_with = "rational::ser::rat")]
    pub point: Rational,
    #[serde(serialize_with = "rational::ser::rat_vec")]
    pub values: Vec<Rational>,
    #[serde(serialize_with = "rational::ser::rat")]
    pub extrapolated: Rational,
    #[serde(serialize_with = "rational::ser::rat_vec")]
    pub diffs: Vec<Rational>,
    /// Quotients of successive diffs; 1/2 means first order in `h`.
    #[serde(serialize_with = "rational::ser::rat_opt_vec")]
    pub ratios: Vec<Option<Rational>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeanoStudy {
    #[serde(serialize_with = "rational::ser::rat_vec")]
    pub step_sizes: Vec<Rational>,
    pub rows: Vec<PeanoRow>,
}

/// Runs Euler polygons at halved steps `h0, h0/2, ...` and tabulates the
/// values, first differences, difference ratios, and the two-level
/// extrapolation at each requested grid point.
#[allow(clippy::too_many_arguments)]
pub fn peano_study(
    f: &Expr,
    x_var: &str,
    y_var: &str,
    x0: &Rational,
    y0: &Rational,
    h0: &Rational,
    x_max: &Rational,
    levels: u32,
    grid: &[Rational],
    cfg: &EvalConfig,
) -> Result<PeanoStudy, CalcError> {
    if levels < 2 {
        return Err(CalcError::BadParameter { detail: "need at least 2 levels".to_string() });
    }
    let mut step_sizes = Vec::new();
    let mut polylines = Vec::new();
    for l in 0..levels {
        let h = h0 / pow_i(&rint(2), l as i64);
        polylines.push(peano_euler(f, x_var, y_var, x0, y0, &h, x_max, cfg)?);
        step_sizes.push(h);
    }
    let mut rows = Vec::new();
    for g in grid {
        if g < x0 || g > x_max || !is_integer(&((g - x0) / h0)) {
            return Err(CalcError::GridMisaligned { point: g.to_string() });
        }
        let mut values = Vec::new();
        for (l, line) in polylines.iter().enumerate() {
            let idx_big = ((g - x0) / &step_sizes[l]).to_integer();
            let idx = usize::try_from(&idx_big).map_err(|_| CalcError::Internal {
                detail: format!("grid index {idx_big} out of range"),
            })?;
            let (px, py) = &line.points[idx];
            if px != g {
                return Err(CalcError::Internal {
                    detail: format!("expected grid point {g}, found {px}"),
                });
            }
            values.push(py.clone());
        }
        let n = values.len();
        let extrapolated = rint(2) * &values[n - 1] - &values[n - 2];
        let diffs: Vec<Rational> =
            values.windows(2).map(|w| &w[1] - &w[0]).collect();
        let ratios: Vec<Option<Rational>> = diffs
            .windows(2)
            .map(|w| if w[0].is_zero() { None } else { Some(&w[1] / &w[0]) })
            .collect();
        rows.push(PeanoRow { point: g.clone(), values, extrapolated, diffs, ratios });
    }
    Ok(PeanoStudy { step_sizes, rows })
}

// ---------------------------------------------------------------------------
// grid measure

/// Number of grid points `i*h` inside `[a, b]`.
pub fn grid_count(a: &Rational, b: &Rational, h: &Rational) -> BigInt {
    let count: BigInt = floor_int(&(b / h)) - ceil_int(&(a / h)) + 1;
    if count.is_negative() {
        BigInt::from(0)
    } else {
        count
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureRow {
    #[serde(serialize_with = "rational::ser::rat")]
    pub a: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub b: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub length: Rational,
    pub grid_points: String,
    #[serde(serialize_with = "rational::ser::rat")]
    pub count_times_h: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub defect: Rational,
    pub within_two_h: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureReport {
    pub set: IntervalUnion,
    #[serde(serialize_with = "rational::ser::rat")]
    pub outer: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub inner: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub sample_h: Rational,
    pub rows: Vec<MeasureRow>,
    pub certified: bool,
}

/// Outer and inner grid measure of a finite union of intervals. Both equal
/// the total length; the rows verify at a concrete spacing that the grid
/// point count times `h` is within `2h` of each part's length.
pub fn lebesgue_measures(
    e: &IntervalUnion,
    sample_h: &Rational,
) -> Result<MeasureReport, CalcError> {
    if !sample_h.is_positive() {
        return Err(CalcError::BadParameter {
            detail: format!("need sample h > 0, got {sample_h}"),
        });
    }
    let mut rows = Vec::new();
    for (a, b) in e.parts() {
        let count = grid_count(a, b, sample_h);
        let count_times_h = Rational::from_integer(count.clone()) * sample_h;
        let length = b - a;
        let defect = rational::abs(&(&count_times_h - &length));
        let within_two_h = defect <= rint(2) * sample_h;
        rows.push(MeasureRow {
            a: a.clone(),
            b: b.clone(),
            length,
            grid_points: count.to_string(),
            count_times_h,
            defect,
            within_two_h,
        });
    }
    let total = e.total_length();
    let certified = rows.iter().all(|r| r.within_two_h);
    Ok(MeasureReport {
        set: e.clone(),
        outer: total.clone(),
        inner: total,
        sample_h: sample_h.clone(),
        rows,
        certified,
    })
}

// ---------------------------------------------------------------------------
// countable subadditivity ledger

#[derive(Debug, Clone, Serialize)]
pub struct SigmaRow {
    pub n: usize,
    pub set: IntervalUnion,
    #[serde(serialize_with = "rational::ser::rat")]
    pub length: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub slack: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub cover: Rational,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaReport {
    #[serde(serialize_with = "rational::ser::rat")]
    pub eps: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub tail_bound: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub h: Rational,
    pub rows: Vec<SigmaRow>,
    #[serde(serialize_with = "rational::ser::rat")]
    pub sum_lengths: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub sum_covers: Rational,
    #[serde(serialize_with = "rational::ser::rat")]
    pub merged_measure: Rational,
    pub claim: String,
    pub verdict: bool,
}

/// Cell cover of one part at spacing `h`: the cells `[kh, (k+1)h]` for `k`
/// from `floor(a/h)` to `floor(b/h)` cover `[a, b]` and have total length at
/// most `(b - a) + 2h`.
fn cell_cover(a: &Rational, b: &Rational, h: &Rational) -> Rational {
    let cells = floor_int(&(b / h)) - floor_int(&(a / h)) + 1;
    Rational::from_integer(cells) * h
}

/// Finite ledger for countable subadditivity: the listed pieces are covered
/// at a common spacing `h` chosen fine enough that piece `n` exceeds its
/// length by less than `eps / 2^(n+1)`, and the unlisted tail is covered by
/// the caller-supplied `tail_bound`. Fails with `CertificateInsufficient`
/// when the tail bound already swallows `eps`.
pub fn sigma_subadd_check(
    family: &[IntervalUnion],
    tail_bound: &Rational,
    eps: &Rational,
) -> Result<SigmaReport, CalcError> {
    if !eps.is_positive() {
        return Err(CalcError::BadParameter { detail: format!("need eps > 0, got {eps}") });
    }
    if tail_bound.is_negative() {
        return Err(CalcError::BadParameter {
            detail: format!("need tail bound >= 0, got {tail_bound}"),
        });
    }
    if family.is_empty() {
        return Err(CalcError::BadParameter { detail: "empty family".to_string() });
    }
    if tail_bound >= eps {
        return Err(CalcError::CertificateInsufficient {
            tail: tail_bound.to_string(),
            eps: eps.to_string(),
        });
    }
    // h must satisfy, for every n: 2h * parts_n < eps / 2^(n+1), and globally
    // sum_n 2h * parts_n <= (eps - tail) / 2.
    let total_parts: i64 = family.iter().map(|u| u.parts().len() as i64).sum();
    let mut bound = (eps - tail_bound) / rint(4 * total_parts.max(1));
    for (n, u) in family.iter().enumerate() {
        let parts = u.parts().len().max(1) as i64;
        let slack = eps / pow_i(&rint(2), n as i64 + 1);
        let cand = slack / rint(4 * parts);
        if cand < bound {
            bound = cand;
        }
    }
    let mut h = rat(1, 2);
    let mut guard = 0u32;
    while h > bound {
        h /= rint(2);
        guard += 1;
        if guard > 100_000 {
            return Err(CalcError::Internal { detail: "spacing search ran away".to_string() });
        }
    }

    let mut rows = Vec::new();
    let mut sum_lengths = rint(0);
    let mut sum_covers = rint(0);
    let mut merged: Option<IntervalUnion> = None;
    for (n, u) in family.iter().enumerate() {
        let length = u.total_length();
        let slack = eps / pow_i(&rint(2), n as i64 + 1);
        let cover: Rational = u.parts().iter().map(|(a, b)| cell_cover(a, b, &h)).sum();
        let ok = cover < &length + &slack;
        sum_lengths += length.clone();
        sum_covers += cover.clone();
        merged = Some(match merged {
            None => u.clone(),
            Some(m) => m.merge_union(u),
        });
        rows.push(SigmaRow { n, set: u.clone(), length, slack, cover, ok });
    }
    let merged_measure = merged.unwrap().total_length();
    let verdict = rows.iter().all(|r| r.ok)
        && merged_measure <= sum_covers
        && &sum_covers + tail_bound <= &sum_lengths + eps;
    Ok(SigmaReport {
        eps: eps.clone(),
        tail_bound: tail_bound.clone(),
        h,
        rows,
        sum_lengths: sum_lengths.clone(),
        sum_covers,
        merged_measure,
        claim: format!(
            "measure of the union of all pieces <= {sum_lengths} + {eps}"
        ),
        verdict,
    })
}

/// The standard shrinking test family: piece `k` is `[k, k + 2^-(k+1)]`, and
/// the unlisted tail has total length `2^-count`.
pub fn geometric_family(count: usize) -> (Vec<IntervalUnion>, Rational) {
    let mut family = Vec::new();
    for k in 0..count {
        let a = rint(k as i64);
        let b = &a + pow_i(&rat(1, 2), k as i64 + 1);
        family.push(IntervalUnion::interval(a, b).expect("nondegenerate"));
    }
    (family, pow_i(&rat(1, 2), count as i64))
}

// ---------------------------------------------------------------------------
// differential check

#[derive(Debug, Clone, Serialize)]
pub struct FrechetRow {
    #[serde(serialize_with = "rational::ser::rat_vec")]
    pub direction: Vec<Rational>,
    pub ratio: LCNum,
    pub class: Class,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrechetReport {
    pub rows: Vec<FrechetRow>,
    pub verdict: bool,
}

/// Tests whether the matrix `a_mat` differentiates `f` at `x`: for each
/// direction `d`, the displacement is `z = eps * d` and the row classifies
/// `max_i |f_i(x+z) - f_i(x) - (A z)_i| / max_j |z_j|`, which must be zero or
/// infinitesimal.
pub fn frechet_check(
    f: &[Expr],
    vars: &[String],
    x: &[Rational],
    a_mat: &[Vec<Rational>],
    dirs: &[Vec<Rational>],
    cfg: &EvalConfig,
) -> Result<FrechetReport, CalcError> {
    let n = vars.len();
    let m = f.len();
    if m == 0 || n == 0 {
        return Err(CalcError::DimensionMismatch {
            detail: "need at least one component and one variable".to_string(),
        });
    }
    if x.len() != n || a_mat.len() != m || a_mat.iter().any(|row| row.len() != n) {
        return Err(CalcError::DimensionMismatch {
            detail: format!("f has {m} components over {n} variables; matrix/point must match"),
        });
    }
    if dirs.is_empty() {
        return Err(CalcError::BadParameter { detail: "no directions supplied".to_string() });
    }
    let mut env_r = BTreeMap::new();
    for (v, xv) in vars.iter().zip(x) {
        env_r.insert(v.clone(), xv.clone());
    }
    let fx: Vec<Rational> =
        f.iter().map(|fi| fi.eval_rational(&env_r, cfg)).collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for d in dirs {
        if d.len() != n {
            return Err(CalcError::DimensionMismatch {
                detail: format!("direction has {} entries, need {n}", d.len()),
            });
        }
        if d.iter().all(|c| c.is_zero()) {
            return Err(CalcError::ZeroDirection);
        }
        let mut env = Env::new();
        for ((v, xv), dv) in vars.iter().zip(x).zip(d) {
            env.insert(
                v.clone(),
                LCNum::from_rational(xv.clone()) + LCNum::monomial(dv.clone(), rint(1)),
            );
        }
        let mut num = LCNum::zero();
        for (i, fi) in f.iter().enumerate() {
            let fxz = fi.eval(&env, cfg)?;
            let mut lin = LCNum::zero();
            for (j, dv) in d.iter().enumerate() {
                lin = lin + LCNum::monomial(&a_mat[i][j] * dv, rint(1));
            }
            let diff = (fxz - LCNum::from_rational(fx[i].clone()) - lin).abs();
            if diff.compare(&num)? == std::cmp::Ordering::Greater {
                num = diff;
            }
        }
        let dmax = d.iter().map(rational::abs).max().expect("nonempty");
        let den = LCNum::monomial(dmax, rint(1));
        let ratio = num.try_div(&den)?;
        let class = ratio.classify()?;
        let ok = matches!(class, Class::Zero | Class::Infinitesimal);
        rows.push(FrechetRow { direction: d.clone(), ratio, class, ok });
    }
    let verdict = rows.iter().all(|r| r.ok);
    Ok(FrechetReport { rows, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn cfg() -> EvalConfig {
        EvalConfig::default()
    }

    #[test]
    fn derivative_of_square_at_three() {
        let f = parse_expr("x^2").unwrap();
        let rep =
            derivative_at(&f, "x", &rint(3), &default_h_choices(), &cfg()).unwrap();
        assert_eq!(rep.value, rint(6));
        assert_eq!(rep.checks.len(), 4);
        for c in &rep.checks {
            assert_eq!(c.shadow, rint(6));
        }
    }

    #[test]
    fn derivative_rejects_bad_displacements() {
        let f = parse_expr("x^2").unwrap();
        let zero = vec![LCNum::zero()];
        assert!(matches!(
            derivative_at(&f, "x", &rint(0), &zero, &cfg()),
            Err(CalcError::BadDisplacement { .. })
        ));
        let appreciable = vec![LCNum::one()];
        assert!(matches!(
            derivative_at(&f, "x", &rint(0), &appreciable, &cfg()),
            Err(CalcError::NoDisplacements) | Err(CalcError::BadDisplacement { .. })
        ));
    }

    #[test]
    fn symbolic_integral_of_square() {
        let f = parse_expr("x^2").unwrap();
        let s = riemann_symbolic(&f, "x", &rint(0), &rint(1), &cfg()).unwrap();
        assert_eq!(s.value, rat(1, 3));
        assert!(s.remainder_terms > 0);
        assert_eq!(s.remainder_min_h_order, Some(1));
        // sample at eps really is value + infinitesimal
        let resid = s.sample_at_eps.clone() - LCNum::from_rational(s.value.clone());
        assert!(matches!(resid.classify().unwrap(), Class::Infinitesimal));
        // concrete instantiation with exotic offsets stays infinitesimally close
        let inst = s
            .instantiate(&LCNum::monomial(rint(1), rint(2)), &rat(1, 3), &rat(2, 3))
            .unwrap();
        let resid2 = inst - LCNum::from_rational(s.value.clone());
        assert!(matches!(
            resid2.classify().unwrap(),
            Class::Zero | Class::Infinitesimal
        ));
    }

    #[test]
    fn symbolic_integral_against_antiderivative() {
        // f = 2 - 3x + x^3 over [-1/2, 5/2]; F = 2x - 3x^2/2 + x^4/4
        let f = parse_expr("2 - 3*x + x^3").unwrap();
        let a = rat(-1, 2);
        let b = rat(5, 2);
        let s = riemann_symbolic(&f, "x", &a, &b, &cfg()).unwrap();
        let fprim = |x: &Rational| {
            rint(2) * x - rat(3, 2) * x * x + rat(1, 4) * x * x * x * x
        };
        assert_eq!(s.value, fprim(&b) - fprim(&a));
    }

    #[test]
    fn tagged_sums_share_the_shadow() {
        let f = parse_expr("x^3 - x").unwrap();
        let rep = tagged_sum_check(
            &f,
            "x",
            &rint(0),
            &rint(2),
            &[TagScheme::Left, TagScheme::Right, TagScheme::Midpoint],
            &cfg(),
        )
        .unwrap();
        assert!(rep.all_agree);
        assert_eq!(rep.value, rint(2));
        for row in &rep.rows {
            assert_eq!(row.shadow, rint(2));
            if row.scheme != TagScheme::Left {
                assert!(row.difference_min_h_order.unwrap() >= 1);
            } else {
                assert_eq!(row.difference_min_h_order, None);
            }
        }
    }

    #[test]
    fn numeric_integral_extrapolates() {
        let f = parse_expr("x^2").unwrap();
        let rep = riemann_numeric(
            &f,
            "x",
            &rint(0),
            &rint(1),
            &NumericBudget::default(),
            &cfg(),
        )
        .unwrap();
        assert!(rep.converged);
        assert!(rational::abs(&(&rep.value - rat(1, 3))) <= rat(1, 1_000_000));
        // left sums of x^2 have first-order error, so ratios sit near 2
        for r in rep.observed_ratios.iter().flatten() {
            assert!(rational::abs(&(r - rint(2))) < rat(1, 4), "ratio {r}");
        }
    }

    #[test]
    fn euler_polygon_error_is_exactly_minus_h() {
        // y' = 2x, y(0) = 0: polygon value at x = 1 is 1 - h
        let f = parse_expr("2*x").unwrap();
        for k in 2..=6 {
            let h = pow_i(&rat(1, 2), k);
            let line =
                peano_euler(&f, "x", "y", &rint(0), &rint(0), &h, &rint(1), &cfg())
                    .unwrap();
            let last = line.points.last().unwrap();
            assert_eq!(last.0, rint(1));
            assert_eq!(&last.1 - rint(1), -h);
        }
    }

    #[test]
    fn peano_study_ratios_and_extrapolation() {
        let f = parse_expr("2*x").unwrap();
        let grid = vec![rat(1, 2), rint(1)];
        let study = peano_study(
            &f,
            "x",
            "y",
            &rint(0),
            &rint(0),
            &rat(1, 4),
            &rint(1),
            4,
            &grid,
            &cfg(),
        )
        .unwrap();
        for row in &study.rows {
            for r in row.ratios.iter().flatten() {
                assert_eq!(r, &rat(1, 2));
            }
            // extrapolation lands on the exact solution x^2
            assert_eq!(row.extrapolated, &row.point * &row.point);
        }
        let misaligned = peano_study(
            &f,
            "x",
            "y",
            &rint(0),
            &rint(0),
            &rat(1, 4),
            &rint(1),
            2,
            &[rat(1, 3)],
            &cfg(),
        );
        assert!(matches!(misaligned, Err(CalcError::GridMisaligned { .. })));
    }

    #[test]
    fn measure_report_counts_grid_points() {
        let u: IntervalUnion = "[0,1]+[2,5/2]".parse().unwrap();
        let rep = lebesgue_measures(&u, &rat(1, 64)).unwrap();
        assert_eq!(rep.outer, rat(3, 2));
        assert_eq!(rep.inner, rat(3, 2));
        assert!(rep.certified);
        assert_eq!(rep.rows[0].grid_points, "65");
        assert_eq!(rep.rows[1].grid_points, "33");
    }

    #[test]
    fn grid_count_empty_when_no_points() {
        assert_eq!(grid_count(&rat(1, 3), &rat(2, 5), &rat(1, 2)), BigInt::from(0));
    }

    #[test]
    fn sigma_ledger_verdict() {
        let (family, tail) = geometric_family(8);
        let eps = rat(1, 100);
        let rep = sigma_subadd_check(&family, &tail, &eps).unwrap();
        assert!(rep.verdict);
        assert!(rep.rows.iter().all(|r| r.ok));
        assert!(rep.sum_covers.clone() + &tail <= rep.sum_lengths.clone() + &eps);
        // tail >= eps is rejected as insufficient
        let bad = sigma_subadd_check(&family, &rat(1, 50), &rat(1, 100));
        assert!(matches!(bad, Err(CalcError::CertificateInsufficient { .. })));
    }

    #[test]
    fn frechet_accepts_jacobian_and_rejects_wrong_matrix() {
        // f(x, y) = (x^2 + y, x y) at (1, 2); Jacobian [[2, 1], [2, 1]]
        let f = vec![parse_expr("x^2 + y").unwrap(), parse_expr("x*y").unwrap()];
        let vars = vec!["x".to_string(), "y".to_string()];
        let x = vec![rint(1), rint(2)];
        let jac = vec![vec![rint(2), rint(1)], vec![rint(2), rint(1)]];
        let dirs = vec![vec![rint(1), rint(0)], vec![rint(1), rint(-3)], vec![rint(2), rint(5)]];
        let rep = frechet_check(&f, &vars, &x, &jac, &dirs, &cfg()).unwrap();
        assert!(rep.verdict);
        let wrong = vec![vec![rint(2), rint(1)], vec![rint(2), rint(2)]];
        let rep2 = frechet_check(&f, &vars, &x, &wrong, &dirs, &cfg()).unwrap();
        assert!(!rep2.verdict);
        assert!(rep2.rows.iter().any(|r| r.class == Class::LimitedAppreciable));
    }

    #[test]
    fn poly_coeffs_folds_constants_and_rejects_series() {
        let f = parse_expr("(1/2)*x^2 - 2^(-2)").unwrap();
        let p = poly_coeffs(&f, "x", &cfg()).unwrap();
        assert_eq!(p.0, vec![rat(-1, 4), rint(0), rat(1, 2)]);
        let g = parse_expr("sin(x)").unwrap();
        assert!(matches!(
            poly_coeffs(&g, "x", &cfg()),
            Err(CalcError::NonPolynomial { .. })
        ));
        let h = parse_expr("x/(1-1)").unwrap();
        assert!(matches!(
            poly_coeffs(&h, "x", &cfg()),
            Err(CalcError::Hyper(HyperError::DivisionByZero))
        ));
    }
}
