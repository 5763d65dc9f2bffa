use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::deraction::{derivations, pair_action, ActionMaps, DerError, Derivation};
use crate::graded::{normal_tuples, GradedBasis, GradedElement, GradedError, Symmetry};
use crate::liepair::{l3_structure, LiePair, PairError};
use crate::linalg::{self, Row};
use crate::linfty::{LInfinityStructure, LinftyError};
use crate::scalars::{ideal_valuation, Rational, TruncatedPoly};

/// Element with coefficients in Q[t]/(t^{N+1}).
pub type PolyElement = GradedElement<TruncatedPoly>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("truncation order must be at least 1")]
    ZeroOrder,
    #[error("expected an element of degree {0}")]
    Degree(i32),
    #[error("coefficient of {0} has a nonzero constant term")]
    NotIdeal(String),
    #[error("coefficient of {symbol} has order {got}, the context uses order {expected}")]
    Order { symbol: String, expected: usize, got: usize },
    #[error("element lives over a different space")]
    SpaceMismatch,
    #[error("not a Maurer-Cartan element, defect {0}")]
    NotMc(PolyElement),
    #[error("d ξ₁ = {0} is nonzero")]
    NotClosed(GradedElement),
    #[error("e^{k} has valuation {got}, below {k}")]
    Valuation { k: usize, got: usize },
    #[error("{0} gauge image is not Maurer-Cartan, defect {1}")]
    GaugeBroke(&'static str, PolyElement),
    #[error("{0} is not a section of B")]
    Support(String),
    #[error("ad_b leaves the span of the acting derivations at order t^{0}")]
    NotInSpan(usize),
    #[error(transparent)]
    Graded(#[from] GradedError),
    #[error(transparent)]
    Linfty(#[from] LinftyError),
    #[error(transparent)]
    Der(#[from] DerError),
    #[error(transparent)]
    Pair(#[from] PairError),
}

/// An L∞ algebra tensored with the maximal ideal of Q[t]/(t^{N+1}).
#[derive(Debug, Clone)]
pub struct McContext {
    algebra: LInfinityStructure,
    order: usize,
}

impl McContext {
    pub fn new(algebra: LInfinityStructure, order: usize) -> Result<Self, McError> {
        if order == 0 {
            return Err(McError::ZeroOrder);
        }
        Ok(McContext { algebra, order })
    }

    pub fn for_pair(pair: &LiePair, order: usize) -> Result<Self, McError> {
        McContext::new(l3_structure(pair), order)
    }

    pub fn algebra(&self) -> &LInfinityStructure {
        &self.algebra
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn space(&self) -> &Arc<GradedBasis> {
        self.algebra.space()
    }

    pub fn zero(&self) -> PolyElement {
        PolyElement::zero(self.space())
    }

    /// t^k·x
    pub fn lift(&self, x: &GradedElement, k: usize) -> PolyElement {
        x.map(|c| TruncatedPoly::monomial(self.order, k, c.clone()))
    }

    /// Σ_k t^k·x_k
    pub fn series(&self, parts: &[(usize, GradedElement)]) -> Result<PolyElement, McError> {
        let mut out = self.zero();
        for (k, x) in parts {
            out.add_assign_elem(&self.lift(x, *k).reinterpret(self.space()))?;
        }
        Ok(out)
    }

    /// The t^k coefficient.
    pub fn coefficient(&self, x: &PolyElement, k: usize) -> GradedElement {
        GradedElement::from_terms(x.space(), x.coords().iter().map(|(i, c)| (*i, c.coeff(k))))
    }

    fn bracket(&self, args: &[&PolyElement]) -> Result<PolyElement, McError> {
        if args.len() > self.algebra.arity_cap() || self.algebra.bracket(args.len()).is_none() {
            return Ok(self.zero());
        }
        Ok(self.algebra.apply(args.len(), args)?)
    }

    fn check_element(&self, x: &PolyElement, space: &GradedBasis, degree: i32) -> Result<(), McError> {
        if **x.space() != *space {
            return Err(McError::SpaceMismatch);
        }
        checked_coefficients(x, self.order)?;
        if x.coords().keys().any(|&i| space.degree(i) != degree) {
            return Err(McError::Degree(degree));
        }
        Ok(())
    }
}

fn checked_coefficients(x: &PolyElement, order: usize) -> Result<(), McError> {
    for (i, c) in x.coords() {
        let symbol = x.space().name(*i).to_string();
        if c.order() != order {
            return Err(McError::Order { symbol, expected: order, got: c.order() });
        }
        if !c.coeff(0).is_zero() {
            return Err(McError::NotIdeal(symbol));
        }
    }
    Ok(())
}

/// Smallest power of t present; N + 1 for zero.
pub fn valuation(x: &PolyElement, order: usize) -> usize {
    x.coords().values().map(ideal_valuation).min().unwrap_or(order + 1)
}

/// A degree-1 element with ideal coefficients solving the MC equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct McElement {
    value: PolyElement,
}

impl McElement {
    pub fn new(ctx: &McContext, value: PolyElement) -> Result<Self, McError> {
        let defect = mc_defect(ctx, &value)?;
        if !defect.is_zero() {
            return Err(McError::NotMc(defect));
        }
        Ok(McElement { value })
    }

    pub fn value(&self) -> &PolyElement {
        &self.value
    }
}

/// A degree-0 parameter with ideal coefficients, in 𝔤⁰⊗𝔪 or 𝔥⊗𝔪.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct GaugeParameter {
    value: PolyElement,
}

impl GaugeParameter {
    pub fn new(order: usize, value: PolyElement) -> Result<Self, McError> {
        checked_coefficients(&value, order)?;
        if value.coords().keys().any(|&i| value.space().degree(i) != 0) {
            return Err(McError::Degree(0));
        }
        Ok(GaugeParameter { value })
    }

    pub fn value(&self) -> &PolyElement {
        &self.value
    }
}

/// Σ_{k ≥ 1} (1/k!)[ξ,…,ξ]_k
pub fn mc_defect(ctx: &McContext, xi: &PolyElement) -> Result<PolyElement, McError> {
    ctx.check_element(xi, ctx.space(), 1)?;
    let mut out = ctx.zero();
    for k in 1..=ctx.algebra.arity_cap() {
        let args = vec![xi; k];
        out.add_assign_elem(&ctx.bracket(&args)?.scale_rational(&Rational::inv_factorial(k)))?;
    }
    Ok(out)
}

/// [g_1,…,g_i]^ξ = Σ_k (1/k!)[ξ^k, g_1,…,g_i]_{i+k}
pub fn twisted_bracket(ctx: &McContext, xi: &PolyElement, args: &[&PolyElement]) -> Result<PolyElement, McError> {
    let cap = ctx.algebra.arity_cap();
    let mut out = ctx.zero();
    if args.is_empty() || args.len() > cap {
        return Ok(out);
    }
    for k in 0..=cap - args.len() {
        let mut full: Vec<&PolyElement> = vec![xi; k];
        full.extend_from_slice(args);
        out.add_assign_elem(&ctx.bracket(&full)?.scale_rational(&Rational::inv_factorial(k)))?;
    }
    Ok(out)
}

/// Result of a gauge transformation with its recursion terms e^1, …, e^N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeOutcome {
    pub result: McElement,
    pub terms: Vec<PolyElement>,
    pub valuations: Vec<usize>,
}

fn compositions(k: usize, n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=k.saturating_sub(n - 1) {
        for mut rest in compositions(k - first, n - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// ξ − Σ (1/k!) e^k with e^1 = f() and e^{k+1} = Σ_n (1/n!) Σ multinomial · f(e^{k_1},…,e^{k_n}).
fn run_gauge(
    ctx: &McContext,
    xi: &McElement,
    label: &'static str,
    limit: usize,
    f: impl Fn(&[&PolyElement]) -> Result<PolyElement, McError>,
) -> Result<GaugeOutcome, McError> {
    let n_max = ctx.order;
    let mut terms: Vec<PolyElement> = Vec::with_capacity(n_max);
    let mut valuations = Vec::with_capacity(n_max);
    for k in 1..=n_max {
        let e = if k == 1 {
            f(&[])?
        } else {
            let prev = k - 1;
            let mut acc = ctx.zero();
            for n in 1..=prev.min(limit) {
                for comp in compositions(prev, n) {
                    let args: Vec<&PolyElement> = comp.iter().map(|&ki| &terms[ki - 1]).collect();
                    let mut c = Rational::factorial(prev) * Rational::inv_factorial(n);
                    for &ki in &comp {
                        c = c * Rational::inv_factorial(ki);
                    }
                    acc.add_assign_elem(&f(&args)?.scale_rational(&c))?;
                }
            }
            acc
        };
        let v = valuation(&e, n_max);
        if v < k {
            return Err(McError::Valuation { k, got: v });
        }
        valuations.push(v);
        terms.push(e);
    }
    let mut out = xi.value.clone();
    for (k, e) in terms.iter().enumerate() {
        out.add_assign_elem(&e.scale_rational(&-Rational::inv_factorial(k + 1)))?;
    }
    let defect = mc_defect(ctx, &out)?;
    if !defect.is_zero() {
        return Err(McError::GaugeBroke(label, defect));
    }
    Ok(GaugeOutcome { result: McElement { value: out }, terms, valuations })
}

fn check_mc(ctx: &McContext, xi: &McElement) -> Result<(), McError> {
    ctx.check_element(&xi.value, ctx.space(), 1)
}

/// e^b∗ξ for b ∈ 𝔤⁰⊗𝔪.
pub fn gauge_getzler(ctx: &McContext, b: &GaugeParameter, xi: &McElement) -> Result<GaugeOutcome, McError> {
    check_mc(ctx, xi)?;
    ctx.check_element(&b.value, ctx.space(), 0)?;
    let limit = ctx.algebra.arity_cap().saturating_sub(1);
    run_gauge(ctx, xi, "Getzler", limit, |args| {
        let mut full = vec![&b.value];
        full.extend_from_slice(args);
        twisted_bracket(ctx, &xi.value, &full)
    })
}

/// e^h∗ξ for h ∈ 𝔥⊗𝔪 acting through the given action maps.
pub fn gauge_h(ctx: &McContext, action: &ActionMaps, h: &GaugeParameter, xi: &McElement) -> Result<GaugeOutcome, McError> {
    check_mc(ctx, xi)?;
    if **action.space() != **ctx.space() {
        return Err(McError::SpaceMismatch);
    }
    ctx.check_element(&h.value, action.acting(), 0)?;
    let top = action.max_arity();
    run_gauge(ctx, xi, "internal", top, |args| {
        let h = h.value.reinterpret(action.acting());
        let mut acc = ctx.zero();
        for j in 0..=top.saturating_sub(args.len()) {
            let mut full: Vec<&PolyElement> = vec![&xi.value; j];
            full.extend_from_slice(args);
            let v = action.act(&h, &full)?.reinterpret(ctx.space());
            acc.add_assign_elem(&v.scale_rational(&(Rational::pow_sign(j as i64) * Rational::inv_factorial(j))))?;
        }
        Ok(acc)
    })
}

/// ad_b = [b,·]_L as a matrix over Q[t]/(t^{N+1}); images()[j] = ad_b(x_j).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdOperator {
    order: usize,
    images: Vec<Vec<TruncatedPoly>>,
}

impl AdOperator {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn images(&self) -> &[Vec<TruncatedPoly>] {
        &self.images
    }

    pub fn apply(&self, v: &[TruncatedPoly]) -> Vec<TruncatedPoly> {
        let mut out = vec![TruncatedPoly::zero(self.order); self.images.len()];
        for (c, img) in v.iter().zip(&self.images) {
            if c.is_zero() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(img) {
                *o = &*o + &(c * x);
            }
        }
        out
    }

    /// Matrix of the t^k coefficient as a rational derivation candidate.
    pub fn coefficient(&self, k: usize) -> Vec<Vec<Rational>> {
        self.images.iter().map(|r| r.iter().map(|c| c.coeff(k)).collect()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.images.iter().flatten().all(TruncatedPoly::is_zero)
    }

    /// Basis pairs (a, b) where ad_b[x_a,x_b] ≠ [ad_b x_a, x_b] + [x_a, ad_b x_b] over Q[t]/(t^{N+1}).
    pub fn derivation_failures(&self, pair: &LiePair) -> Vec<(usize, usize)> {
        let l = pair.lie();
        let n = l.dim();
        let lift = |s: &crate::graded::Sparse| -> Vec<TruncatedPoly> {
            (0..n)
                .map(|i| TruncatedPoly::constant(self.order, s.get(&i).cloned().unwrap_or_else(Rational::zero)))
                .collect()
        };
        let bracket = |u: &[TruncatedPoly], v: &[TruncatedPoly]| -> Vec<TruncatedPoly> {
            let mut out = vec![TruncatedPoly::zero(self.order); n];
            for (i, a) in u.iter().enumerate() {
                for (j, b) in v.iter().enumerate() {
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    let ab = a * b;
                    for (o, c) in l.bracket_basis(i, j) {
                        out[o] = &out[o] + &ab.scale(&c);
                    }
                }
            }
            out
        };
        let mut bad = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let lhs = self.apply(&lift(&l.bracket_basis(a, b)));
                let ea = lift(&[(a, Rational::one())].into_iter().collect());
                let eb = lift(&[(b, Rational::one())].into_iter().collect());
                let r1 = bracket(&self.images[a], &eb);
                let r2 = bracket(&ea, &self.images[b]);
                if lhs.iter().zip(r1.iter().zip(&r2)).any(|(x, (y, z))| *x != &*y + z) {
                    bad.push((a, b));
                }
            }
        }
        bad
    }
}

/// ad_b for b ∈ Γ(B)⊗𝔪 given as a degree-0 element of Ω•_A(B).
pub fn ad_b(pair: &LiePair, b: &PolyElement) -> Result<AdOperator, McError> {
    let om = pair.omega();
    if **b.space() != **om.forms() {
        return Err(McError::SpaceMismatch);
    }
    let l = pair.lie();
    let n = l.dim();
    let order = b.coords().values().map(TruncatedPoly::order).next().unwrap_or(1);
    let mut images = vec![vec![TruncatedPoly::zero(order); n]; n];
    for (i, c) in b.coords() {
        let (mask, j) = om.key(*i);
        if mask != 0 {
            return Err(McError::Support(b.space().name(*i).to_string()));
        }
        if c.order() != order {
            return Err(McError::Order { symbol: b.space().name(*i).to_string(), expected: order, got: c.order() });
        }
        let u = pair.b_indices()[j];
        for (m, row) in images.iter_mut().enumerate() {
            for (o, s) in l.bracket_basis(u, m) {
                row[o] = &row[o] + &c.scale(&s);
            }
        }
    }
    Ok(AdOperator { order, images })
}

/// The Der(L) action on Ω•_A(B) together with the derivation basis it is written in.
#[derive(Debug, Clone)]
pub struct InternalSymmetry {
    pair: LiePair,
    derivations: Vec<Derivation>,
    action: ActionMaps,
}

impl InternalSymmetry {
    pub fn new(pair: &LiePair) -> Result<Self, McError> {
        let ders = derivations(pair.lie());
        InternalSymmetry::with_derivations(pair, ders)
    }

    pub fn with_derivations(pair: &LiePair, derivations: Vec<Derivation>) -> Result<Self, McError> {
        let action = pair_action(pair, &derivations)?;
        Ok(InternalSymmetry { pair: pair.clone(), derivations, action })
    }

    pub fn pair(&self) -> &LiePair {
        &self.pair
    }

    pub fn derivations(&self) -> &[Derivation] {
        &self.derivations
    }

    pub fn action(&self) -> &ActionMaps {
        &self.action
    }

    /// ad_b written in the derivation basis, as an 𝔥-gauge parameter.
    pub fn ad_parameter(&self, b: &GaugeParameter) -> Result<GaugeParameter, McError> {
        let ad = ad_b(&self.pair, &b.value)?;
        let order = ad.order();
        let basis: Vec<Row> = self.derivations.iter().map(Derivation::flatten).collect();
        let mut coeffs = vec![vec![Rational::zero(); order + 1]; basis.len()];
        for k in 1..=order {
            let v: Row = ad.coefficient(k).into_iter().flatten().collect();
            if v.iter().all(Rational::is_zero) {
                continue;
            }
            let x = linalg::coordinates_in_span(&basis, &v).ok_or(McError::NotInSpan(k))?;
            for (c, xi) in coeffs.iter_mut().zip(x) {
                c[k] = xi;
            }
        }
        let value = PolyElement::from_terms(
            self.action.acting(),
            coeffs.into_iter().enumerate().map(|(i, c)| (i, TruncatedPoly::from_coeffs(order, c))),
        );
        GaugeParameter::new(order, value)
    }
}

/// One nonzero difference between two sides of an identity over Q[t]/(t^{N+1}).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyDefect {
    pub identity: String,
    pub inputs: Vec<String>,
    pub defect: PolyElement,
}

/// κ(ad_b) = [b]_1, ad_b▷X = [b,X]_2 and ad_b▷(X,Y) = [b,X,Y]_3 on basis inputs.
pub fn check_bridges(ctx: &McContext, sym: &InternalSymmetry, b: &GaugeParameter) -> Result<Vec<PolyDefect>, McError> {
    let h = sym.ad_parameter(b)?;
    let act = sym.action();
    let space = ctx.space().clone();
    let mut out = Vec::new();
    let mut record = |identity: &str, inputs: Vec<String>, lhs: PolyElement, rhs: PolyElement| -> Result<(), McError> {
        let d = crate::graded::element_sub(&lhs.reinterpret(&space), &rhs.reinterpret(&space))?;
        if !d.is_zero() {
            out.push(PolyDefect { identity: identity.into(), inputs, defect: d });
        }
        Ok(())
    };
    record("bridge/kappa", vec![], act.kappa(&h.value)?, ctx.bracket(&[&b.value])?)?;
    let one = TruncatedPoly::one(ctx.order);
    let unit = |i: usize| PolyElement::monomial(&space, i, one.clone());
    for i in 0..space.len() {
        let x = unit(i);
        record("bridge/arity=1", vec![space.name(i).into()], act.act(&h.value, &[&x])?, ctx.bracket(&[&b.value, &x])?)?;
    }
    for t in normal_tuples(space.degrees(), 2, Symmetry::Skew) {
        let (x, y) = (unit(t[0]), unit(t[1]));
        let names = vec![space.name(t[0]).into(), space.name(t[1]).into()];
        record("bridge/arity=2", names, act.act(&h.value, &[&x, &y])?, ctx.bracket(&[&b.value, &x, &y])?)?;
    }
    Ok(out)
}

/// Both sides of e^{ad_b}∗ξ = e^b∗ξ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeCoincidence {
    pub getzler: GaugeOutcome,
    pub internal: GaugeOutcome,
    pub difference: PolyElement,
}

impl GaugeCoincidence {
    pub fn holds(&self) -> bool {
        self.difference.is_zero()
    }
}

pub fn check_coincidence(
    ctx: &McContext,
    sym: &InternalSymmetry,
    b: &GaugeParameter,
    xi: &McElement,
) -> Result<GaugeCoincidence, McError> {
    let getzler = gauge_getzler(ctx, b, xi)?;
    let h = sym.ad_parameter(b)?;
    let internal = gauge_h(ctx, sym.action(), &h, xi)?;
    let difference = crate::graded::element_sub(&getzler.result.value, &internal.result.value)?;
    Ok(GaugeCoincidence { getzler, internal, difference })
}

/// Outcome of the order-by-order MC solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Extension {
    Solved { element: McElement },
    Obstructed { order: usize, obstruction: GradedElement, partial: PolyElement },
}

impl Extension {
    pub fn element(&self) -> Option<&McElement> {
        match self {
            Extension::Solved { element } => Some(element),
            Extension::Obstructed { .. } => None,
        }
    }
}

/// d restricted to degree 1 → degree 2, as rows over the degree-2 symbols.
struct DegreeOneDifferential {
    cols: Vec<usize>,
    targets: Vec<usize>,
    rows: Vec<Row>,
}

impl DegreeOneDifferential {
    fn new(ctx: &McContext) -> Self {
        let space = ctx.space();
        let cols = space.of_degree(1);
        let targets = space.of_degree(2);
        let mut rows = vec![vec![Rational::zero(); cols.len()]; targets.len()];
        if let Some(d) = ctx.algebra.bracket(1) {
            for (c, &i) in cols.iter().enumerate() {
                if let Some((sign, v)) = d.eval_basis(&[i]) {
                    for (o, x) in v {
                        if let Some(r) = targets.iter().position(|t| t == o) {
                            rows[r][c] = sign.to_rational() * x.clone();
                        }
                    }
                }
            }
        }
        DegreeOneDifferential { cols, targets, rows }
    }

    fn kernel(&self) -> Vec<Row> {
        linalg::kernel(&self.rows, self.cols.len())
    }

    fn element(&self, space: &Arc<GradedBasis>, x: &[Rational]) -> GradedElement {
        GradedElement::from_terms(space, self.cols.iter().zip(x).map(|(i, c)| (*i, c.clone())))
    }

    fn solve(&self, rhs: &GradedElement) -> Option<Row> {
        let b: Row = self.targets.iter().map(|t| rhs.get(*t).cloned().unwrap_or_else(Rational::zero)).collect();
        linalg::solve(&self.rows, self.cols.len(), &b)
    }
}

/// Extend t·ξ₁ to an MC element order by order; canonical particular solutions.
pub fn mc_extend(ctx: &McContext, xi1: &GradedElement) -> Result<Extension, McError> {
    extend_with(ctx, xi1, |_| None)
}

/// As `mc_extend`, adding a random closed degree-1 form at every order ≥ 2.
pub fn mc_extend_seeded<R: Rng>(ctx: &McContext, xi1: &GradedElement, rng: &mut R) -> Result<Extension, McError> {
    let d = DegreeOneDifferential::new(ctx);
    let kernel = d.kernel();
    extend_with(ctx, xi1, |_| Some(d.element(ctx.space(), &random_combination(&kernel, d.cols.len(), rng))))
}

fn extend_with(
    ctx: &McContext,
    xi1: &GradedElement,
    mut extra: impl FnMut(usize) -> Option<GradedElement>,
) -> Result<Extension, McError> {
    if **xi1.space() != **ctx.space() {
        return Err(McError::SpaceMismatch);
    }
    if xi1.coords().keys().any(|&i| ctx.space().degree(i) != 1) {
        return Err(McError::Degree(1));
    }
    let d1 = ctx.algebra.apply(1, &[xi1])?;
    if !d1.is_zero() {
        return Err(McError::NotClosed(d1));
    }
    let d = DegreeOneDifferential::new(ctx);
    let mut xi = ctx.lift(xi1, 1);
    for k in 2..=ctx.order {
        let f = ctx.coefficient(&mc_defect(ctx, &xi)?, k);
        let target = f.neg();
        let Some(sol) = d.solve(&target) else {
            return Ok(Extension::Obstructed { order: k, obstruction: target, partial: xi });
        };
        let mut xk = d.element(ctx.space(), &sol);
        if let Some(z) = extra(k) {
            xk.add_assign_elem(&z)?;
        }
        xi.add_assign_elem(&ctx.lift(&xk, k))?;
    }
    Ok(Extension::Solved { element: McElement::new(ctx, xi)? })
}

fn random_combination<R: Rng>(basis: &[Row], n: usize, rng: &mut R) -> Row {
    let mut out = vec![Rational::zero(); n];
    for v in basis {
        let c = Rational::int(rng.gen_range(-3..=3));
        if c.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o += &(&c * x);
        }
    }
    out
}

/// Random closed degree-1 form with small integer coordinates in a kernel basis.
pub fn random_closed_form<R: Rng>(ctx: &McContext, rng: &mut R) -> GradedElement {
    let d = DegreeOneDifferential::new(ctx);
    d.element(ctx.space(), &random_combination(&d.kernel(), d.cols.len(), rng))
}

/// A seeded closed ξ₁ and its randomized extension.
pub fn seeded_extension(ctx: &McContext, seed: u64) -> Result<(GradedElement, Extension), McError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let xi1 = random_closed_form(ctx, &mut rng);
    let ext = mc_extend_seeded(ctx, &xi1, &mut rng)?;
    Ok((xi1, ext))
}

/// Random b ∈ 𝔤⁰⊗𝔪 with coefficients in {−3..3} at every power of t.
pub fn random_parameter<R: Rng>(ctx: &McContext, rng: &mut R) -> GaugeParameter {
    let order = ctx.order;
    let value = PolyElement::from_terms(
        ctx.space(),
        ctx.space().of_degree(0).into_iter().map(|i| {
            let mut c = vec![Rational::zero()];
            c.extend((1..=order).map(|_| Rational::int(rng.gen_range(-3..=3))));
            (i, TruncatedPoly::from_coeffs(order, c))
        }),
    );
    GaugeParameter { value }
}

/// Random MC element from `mc_extend_seeded`, retrying obstructed first-order data.
pub fn random_mc<R: Rng>(ctx: &McContext, rng: &mut R, attempts: usize) -> Result<Option<McElement>, McError> {
    for _ in 0..attempts {
        let xi1 = random_closed_form(ctx, rng);
        if let Extension::Solved { element } = mc_extend_seeded(ctx, &xi1, rng)? {
            return Ok(Some(element));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeCheck {
    pub name: String,
    pub status: Status,
    pub difference: Option<PolyElement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl GaugeCheck {
    fn from_difference(name: String, d: PolyElement) -> Self {
        let status = if d.is_zero() { Status::Pass } else { Status::Fail };
        GaugeCheck { name, status, difference: Some(d), message: None }
    }

    fn failure(name: String, message: String) -> Self {
        GaugeCheck { name, status: Status::Fail, difference: None, message: Some(message) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeReport {
    pub pair: String,
    #[serde(rename = "N")]
    pub order: usize,
    pub seed: u64,
    pub checks: Vec<GaugeCheck>,
}

impl GaugeReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }
}

/// Gauge identities on seeded random (b, ξ): bridges, closed forms at N = 1, trivial
/// parameters, and the coincidence of the two gauge actions.
pub fn gauge_suite(name: &str, pair: &LiePair, order: usize, seed: u64, instances: usize) -> Result<GaugeReport, McError> {
    use rand::SeedableRng;
    let ctx = McContext::for_pair(pair, order)?;
    let sym = InternalSymmetry::new(pair)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let b0 = random_parameter(&ctx, &mut rng);
    for d in check_bridges(&ctx, &sym, &b0)? {
        checks.push(GaugeCheck::from_difference(format!("{}/{}", d.identity, d.inputs.join(",")), d.defect));
    }
    if checks.is_empty() {
        checks.push(GaugeCheck::from_difference("bridges".into(), ctx.zero()));
    }
    for i in 0..instances {
        let tag = format!("instance={i}");
        let Some(xi) = random_mc(&ctx, &mut rng, 64)? else {
            checks.push(GaugeCheck::failure(format!("{tag}/mc-extend"), "no unobstructed extension found".into()));
            continue;
        };
        let b = random_parameter(&ctx, &mut rng);
        match check_coincidence(&ctx, &sym, &b, &xi) {
            Ok(c) => {
                if order == 1 {
                    let db = ctx.bracket(&[&b.value])?;
                    let expect = crate::graded::element_sub(xi.value(), &db)?;
                    let d1 = crate::graded::element_sub(&c.getzler.result.value, &expect)?;
                    checks.push(GaugeCheck::from_difference(format!("{tag}/closed-form/getzler"), d1));
                    let h = sym.ad_parameter(&b)?;
                    let k = sym.action().kappa(&h.value)?.reinterpret(ctx.space());
                    let expect = crate::graded::element_sub(xi.value(), &k)?;
                    let d2 = crate::graded::element_sub(&c.internal.result.value, &expect)?;
                    checks.push(GaugeCheck::from_difference(format!("{tag}/closed-form/internal"), d2));
                }
                checks.push(GaugeCheck::from_difference(format!("{tag}/coincidence"), c.difference));
            }
            Err(e) => checks.push(GaugeCheck::failure(format!("{tag}/coincidence"), e.to_string())),
        }
        if i == 0 {
            let zero_b = GaugeParameter { value: ctx.zero() };
            let g = gauge_getzler(&ctx, &zero_b, &xi)?;
            checks.push(GaugeCheck::from_difference(
                format!("{tag}/identity/getzler"),
                crate::graded::element_sub(&g.result.value, xi.value())?,
            ));
            let zero_h = GaugeParameter { value: PolyElement::zero(sym.action().acting()) };
            let g = gauge_h(&ctx, sym.action(), &zero_h, &xi)?;
            checks.push(GaugeCheck::from_difference(
                format!("{tag}/identity/internal"),
                crate::graded::element_sub(&g.result.value, xi.value())?,
            ));
        }
    }
    Ok(GaugeReport { pair: name.into(), order, seed, checks })
}
