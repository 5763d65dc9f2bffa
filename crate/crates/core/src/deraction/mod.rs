use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::graded::{normal_tuples, sparse_add, sparse_axpy, GradedBasis, GradedElement, GradedError, MultiTable, Sparse, Symmetry};
use crate::liepair::{LieAlgebra, PairError};
use crate::linalg;
use crate::linfty::{Defect, LInfinityStructure, LinftyError, ShuffleCache};
use crate::scalars::{Rational, Scalar};
use crate::signs::{epsilon_unchecked, Sign};

mod cohomology;
mod pair;
mod theta;

pub use cohomology::{cohomology, induced_action, CohomologyClass, CohomologyModel, InducedAction};
pub use pair::{act1, act2, check_properties, kappa, kappa_kernel, pair_action, varrho1, varrho2};
pub use theta::{check_extension, check_theta_gamma, extend_sum, from_theta_gamma, to_theta_gamma, ExtendedSum, ThetaGamma};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DerError {
    #[error("{0} is not a derivation")]
    NotDerivation(String, Vec<Defect>),
    #[error("{0}: expected a {1}x{1} image matrix")]
    Shape(String, usize),
    #[error("[{0}, {1}] leaves the span of the given derivations")]
    NotClosed(String, String),
    #[error("{0} does not preserve A")]
    NotInKernel(String),
    #[error("expected {expected} arguments of the acting algebra, got {got}")]
    Acting { expected: usize, got: usize },
    #[error("map of arity {k} must be skew of degree {expected}")]
    MapShape { k: usize, expected: i32 },
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error(transparent)]
    Linfty(#[from] LinftyError),
    #[error(transparent)]
    Graded(#[from] GradedError),
}

/// A derivation of a Lie algebra, stored as the images of the basis vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derivation {
    name: String,
    images: Vec<Vec<Rational>>,
}

impl Derivation {
    pub fn new(l: &LieAlgebra, name: impl Into<String>, images: Vec<Vec<Rational>>) -> Result<Self, DerError> {
        let d = Derivation::new_unchecked(l, name, images)?;
        let defects = derivation_defects(l, &d);
        if defects.is_empty() {
            Ok(d)
        } else {
            Err(DerError::NotDerivation(d.name, defects))
        }
    }

    pub fn new_unchecked(l: &LieAlgebra, name: impl Into<String>, images: Vec<Vec<Rational>>) -> Result<Self, DerError> {
        let name = name.into();
        let n = l.dim();
        if images.len() != n || images.iter().any(|r| r.len() != n) {
            return Err(DerError::Shape(name, n));
        }
        Ok(Derivation { name, images })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// images()[j] = δ(x_j)
    pub fn images(&self) -> &[Vec<Rational>] {
        &self.images
    }

    pub fn dim(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, v: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim()];
        for (j, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(&self.images[j]) {
                *o += &(c * x);
            }
        }
        out
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Derivation { name: name.into(), images: self.images.clone() }
    }

    pub fn scaled(&self, c: &Rational) -> Self {
        let images = self.images.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
        Derivation { name: self.name.clone(), images }
    }

    /// Σ c_i δ_i
    pub fn combination(name: impl Into<String>, ders: &[Derivation], coeffs: &[Rational]) -> Self {
        let n = ders.first().map_or(0, Derivation::dim);
        let mut images = vec![vec![Rational::zero(); n]; n];
        for (d, c) in ders.iter().zip(coeffs) {
            for (row, drow) in images.iter_mut().zip(&d.images) {
                for (x, y) in row.iter_mut().zip(drow) {
                    *x += &(c * y);
                }
            }
        }
        Derivation { name: name.into(), images }
    }

    /// δ∘δ' − δ'∘δ
    pub fn commutator(&self, other: &Derivation, name: impl Into<String>) -> Self {
        let images = (0..self.dim())
            .map(|j| {
                let mut v = self.apply(&other.images[j]);
                for (x, y) in v.iter_mut().zip(other.apply(&self.images[j])) {
                    *x += &-y;
                }
                v
            })
            .collect();
        Derivation { name: name.into(), images }
    }

    pub fn flatten(&self) -> Vec<Rational> {
        self.images.iter().flatten().cloned().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.images.iter().flatten().all(Rational::is_zero)
    }
}

/// δ[x_a,x_b] − [δx_a,x_b] − [x_a,δx_b] on basis pairs a < b.
pub fn derivation_defects(l: &LieAlgebra, d: &Derivation) -> Vec<Defect> {
    let n = l.dim();
    let mut out = Vec::new();
    let unit = |i: usize| -> Vec<Rational> {
        let mut v = vec![Rational::zero(); n];
        v[i] = Rational::one();
        v
    };
    for a in 0..n {
        for b in a + 1..n {
            let mut diff = d.apply(&crate::liepair::dense(&l.bracket_basis(a, b), n));
            let t1 = l.bracket_vec(&d.images[a], &unit(b));
            let t2 = l.bracket_vec(&unit(a), &d.images[b]);
            for ((x, y), z) in diff.iter_mut().zip(t1).zip(t2) {
                *x += &-(y + z);
            }
            if diff.iter().any(|c| !c.is_zero()) {
                out.push(Defect {
                    identity: "derivation-rule".into(),
                    inputs: vec![d.name.clone(), l.basis().name(a).into(), l.basis().name(b).into()],
                    defect: GradedElement::from_terms(l.basis(), crate::liepair::sparse(&diff)),
                });
            }
        }
    }
    out
}

/// A basis of Der(L) by exact kernel extraction, named δ1, δ2, ….
pub fn derivations(l: &LieAlgebra) -> Vec<Derivation> {
    let n = l.dim();
    let var = |j: usize, i: usize| j * n + i;
    let mut rows = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let cab = l.bracket_basis(a, b);
            for k in 0..n {
                let mut row = vec![Rational::zero(); n * n];
                for (m, c) in &cab {
                    row[var(*m, k)] += c;
                }
                for i in 0..n {
                    if let Some(c) = l.bracket_basis(i, b).get(&k) {
                        row[var(a, i)] += &-c;
                    }
                    if let Some(c) = l.bracket_basis(a, i).get(&k) {
                        row[var(b, i)] += &-c;
                    }
                }
                if row.iter().any(|c| !c.is_zero()) {
                    rows.push(row);
                }
            }
        }
    }
    linalg::kernel(&rows, n * n)
        .into_iter()
        .enumerate()
        .map(|(s, v)| Derivation { name: format!("δ{}", s + 1), images: v.chunks(n).map(<[Rational]>::to_vec).collect() })
        .collect()
}

/// ad_u = [u, ·]
pub fn ad(l: &LieAlgebra, u: &[Rational], name: impl Into<String>) -> Derivation {
    let n = l.dim();
    let images = (0..n)
        .map(|j| {
            let mut e = vec![Rational::zero(); n];
            e[j] = Rational::one();
            l.bracket_vec(u, &e)
        })
        .collect();
    Derivation { name: name.into(), images }
}

/// ad of every basis vector, named ad_x.
pub fn ad_basis(l: &LieAlgebra) -> Vec<Derivation> {
    let n = l.dim();
    (0..n)
        .map(|i| {
            let mut e = vec![Rational::zero(); n];
            e[i] = Rational::one();
            ad(l, &e, format!("ad_{}", l.basis().name(i)))
        })
        .collect()
}

/// Structure constants of the commutator on the span of `ders` (which must be independent).
pub fn derivation_bracket(ders: &[Derivation]) -> Result<MultiTable, DerError> {
    let basis = GradedBasis::new(ders.iter().map(|d| (d.name.clone(), 0)))?;
    let flat: Vec<Vec<Rational>> = ders.iter().map(Derivation::flatten).collect();
    let mut t = MultiTable::new(2, Symmetry::Skew, 0, &basis, &basis);
    for i in 0..ders.len() {
        for j in i + 1..ders.len() {
            let c = ders[i].commutator(&ders[j], "");
            let coords = linalg::coordinates_in_span(&flat, &c.flatten())
                .ok_or_else(|| DerError::NotClosed(ders[i].name.clone(), ders[j].name.clone()))?;
            t.insert(&[i, j], crate::liepair::sparse(&coords))?;
        }
    }
    Ok(t)
}

/// Components κ = μ₀ and μ_n (n ≥ 1) of an action of a Lie algebra 𝔥 on an L∞ algebra 𝔤,
/// one set per basis vector of 𝔥.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMaps {
    space: Arc<GradedBasis>,
    acting_bracket: MultiTable,
    kappa: Vec<Sparse>,
    mu: Vec<BTreeMap<usize, MultiTable>>,
}

impl ActionMaps {
    /// The zero action of 𝔥 (given by its bracket table) on the space.
    pub fn zero(space: &Arc<GradedBasis>, acting_bracket: MultiTable) -> Self {
        let k = acting_bracket.input().len();
        ActionMaps { space: space.clone(), acting_bracket, kappa: vec![Sparse::new(); k], mu: vec![BTreeMap::new(); k] }
    }

    pub fn space(&self) -> &Arc<GradedBasis> {
        &self.space
    }

    pub fn acting(&self) -> &Arc<GradedBasis> {
        self.acting_bracket.input()
    }

    pub fn acting_bracket(&self) -> &MultiTable {
        &self.acting_bracket
    }

    pub fn acting_dim(&self) -> usize {
        self.kappa.len()
    }

    pub fn kappa_of(&self, h: usize) -> GradedElement {
        GradedElement::from_terms(&self.space, self.kappa[h].clone())
    }

    pub fn mu_table(&self, h: usize, n: usize) -> Option<&MultiTable> {
        self.mu[h].get(&n)
    }

    pub fn max_arity(&self) -> usize {
        self.mu.iter().filter_map(|m| m.keys().next_back().copied()).max().unwrap_or(0)
    }

    pub fn set_kappa(&mut self, h: usize, v: &GradedElement) -> Result<(), DerError> {
        if **v.space() != *self.space {
            return Err(GradedError::SpaceMismatch.into());
        }
        if v.coords().keys().any(|&i| self.space.degree(i) != 1) {
            return Err(DerError::MapShape { k: 0, expected: 1 });
        }
        self.kappa[h] = v.coords().clone();
        Ok(())
    }

    pub fn set_mu(&mut self, h: usize, n: usize, table: MultiTable) -> Result<(), DerError> {
        let expected = 1 - n as i32;
        if n == 0 || table.arity() != n || table.symmetry() != Symmetry::Skew || table.map_degree() != expected {
            return Err(DerError::MapShape { k: n, expected });
        }
        if **table.input() != *self.space || **table.output() != *self.space {
            return Err(GradedError::SpaceMismatch.into());
        }
        let table = table.with_spaces(&self.space, &self.space);
        if table.is_empty() {
            self.mu[h].remove(&n);
        } else {
            self.mu[h].insert(n, table);
        }
        Ok(())
    }

    fn has(&self, n: usize) -> bool {
        if n == 0 {
            self.kappa.iter().any(|k| !k.is_empty())
        } else {
            self.mu.iter().any(|m| m.contains_key(&n))
        }
    }

    /// acc += c·μ_n(h, e_args); μ₀ = κ.
    fn accumulate(&self, h: usize, args: &[usize], c: &Rational, acc: &mut Sparse) {
        if args.is_empty() {
            sparse_axpy(acc, c, &self.kappa[h]);
        } else if let Some(t) = self.mu[h].get(&args.len()) {
            t.accumulate_basis(args, c, acc);
        }
    }

    /// κ(h) for h = Σ c_i h_i with coefficients in any scalar ring.
    pub fn kappa<S: Scalar>(&self, h: &GradedElement<S>) -> Result<GradedElement<S>, DerError> {
        self.act(h, &[])
    }

    /// μ_n(h, x_1, …, x_n); n = 0 gives κ(h).
    pub fn act<S: Scalar>(&self, h: &GradedElement<S>, args: &[&GradedElement<S>]) -> Result<GradedElement<S>, DerError> {
        if **h.space() != **self.acting() {
            return Err(GradedError::SpaceMismatch.into());
        }
        let mut out = GradedElement::<S>::zero(&self.space);
        for (i, c) in h.coords() {
            let v = if args.is_empty() {
                GradedElement::from_terms(&self.space, self.kappa[*i].iter().map(|(o, x)| (*o, c.scale(x))))
            } else {
                match self.mu[*i].get(&args.len()) {
                    Some(t) => t.evaluate(args)?.mul_scalar(c),
                    None => continue,
                }
            };
            out.add_assign_elem(&v)?;
        }
        Ok(out)
    }
}

fn names(space: &GradedBasis, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| space.name(i).to_string()).collect()
}

/// (mu-1) at level n for h on basis tuple t: LHS − RHS.
fn q_compat(l: &LInfinityStructure, act: &ActionMaps, h: usize, t: &[usize], cache: &mut ShuffleCache) -> Sparse {
    let n = t.len();
    let degs: Vec<i32> = t.iter().map(|&i| l.space().degree(i)).collect();
    let mut acc = Sparse::new();
    let mut word = Vec::with_capacity(n + 1);
    for p in 1..=n {
        let Some(inner) = l.bracket(p) else { continue };
        if !act.has(n - p + 1) {
            continue;
        }
        for sigma in cache.sh2(p, n - p).iter() {
            let im = sigma.images();
            let sign = sigma.sign() * epsilon_unchecked(im, &degs);
            word.clear();
            word.extend(im[..p].iter().map(|&j| t[j]));
            let Some((s, v)) = inner.eval_basis(&word) else { continue };
            let sign = sign * s;
            for (o, c) in v {
                word.clear();
                word.push(*o);
                word.extend(im[p..].iter().map(|&j| t[j]));
                act.accumulate(h, &word, &sign.apply(c), &mut acc);
            }
        }
    }
    for p in 0..=n {
        let Some(outer) = l.bracket(n - p + 1) else { continue };
        if !act.has(p) {
            continue;
        }
        for sigma in cache.sh2(p, n - p).iter() {
            let im = sigma.images();
            // subtracting (−1)^{p+1}χ[…]
            let sign = Sign::pow(p as i64) * sigma.sign() * epsilon_unchecked(im, &degs);
            word.clear();
            word.extend(im[..p].iter().map(|&j| t[j]));
            let mut inner = Sparse::new();
            act.accumulate(h, &word, &Rational::one(), &mut inner);
            for (o, c) in &inner {
                word.clear();
                word.push(*o);
                word.extend(im[p..].iter().map(|&j| t[j]));
                outer.accumulate_basis(&word, &sign.apply(c), &mut acc);
            }
        }
    }
    acc
}

/// (mu-2) at level n for h, h' on basis tuple t: μ_n([h,h'], x) − (Σ μ(h, μ(h', …), …) − (h↔h')).
fn bracket_compat(act: &ActionMaps, h: usize, g: usize, t: &[usize], cache: &mut ShuffleCache) -> Sparse {
    let n = t.len();
    let degs: Vec<i32> = t.iter().map(|&i| act.space.degree(i)).collect();
    let mut acc = Sparse::new();
    if let Some((s, v)) = act.acting_bracket.eval_basis(&[h, g]) {
        for (k, c) in v {
            act.accumulate(*k, t, &s.apply(c), &mut acc);
        }
    }
    let mut word = Vec::with_capacity(n + 1);
    for (first, second, sign0) in [(h, g, Sign::Minus), (g, h, Sign::Plus)] {
        for p in 0..=n {
            if !act.has(p) || !act.has(n - p + 1) {
                continue;
            }
            for sigma in cache.sh2(p, n - p).iter() {
                let im = sigma.images();
                let sign = sign0 * sigma.sign() * epsilon_unchecked(im, &degs);
                word.clear();
                word.extend(im[..p].iter().map(|&j| t[j]));
                let mut inner = Sparse::new();
                act.accumulate(second, &word, &Rational::one(), &mut inner);
                for (o, c) in &inner {
                    word.clear();
                    word.push(*o);
                    word.extend(im[p..].iter().map(|&j| t[j]));
                    act.accumulate(first, &word, &sign.apply(c), &mut acc);
                }
            }
        }
    }
    acc
}

/// Both families of action identities on every basis vector (pair) of 𝔥 and every normalized
/// basis tuple of 𝔤: compatibility with Q for n ≤ max_q, with the bracket of 𝔥 for n ≤ max_bracket.
pub fn check_action_axioms(l: &LInfinityStructure, act: &ActionMaps, max_q: usize, max_bracket: usize) -> Vec<Defect> {
    let space = l.space();
    let degs = space.degrees();
    let mut out = Vec::new();
    let Some((lo, hi)) = space.degree_range() else { return out };
    let mut cache = ShuffleCache::default();
    let hnames = act.acting().clone();
    for n in 0..=max_q {
        let lhs = (1..=n).any(|p| l.bracket(p).is_some() && act.has(n - p + 1));
        let rhs = (0..=n).any(|p| l.bracket(n - p + 1).is_some() && act.has(p));
        if !lhs && !rhs {
            continue;
        }
        for t in normal_tuples(degs, n, Symmetry::Skew) {
            let od = t.iter().map(|&i| degs[i]).sum::<i32>() + 2 - n as i32;
            if od < lo || od > hi {
                continue;
            }
            for h in 0..act.acting_dim() {
                let v = q_compat(l, act, h, &t, &mut cache);
                if !v.is_empty() {
                    let mut inputs = vec![hnames.name(h).to_string()];
                    inputs.extend(names(space, &t));
                    out.push(Defect {
                        identity: format!("action/Q-compat/n={n}"),
                        inputs,
                        defect: GradedElement::from_terms(space, v),
                    });
                }
            }
        }
    }
    for n in 0..=max_bracket {
        let any = act.has(n) || (0..=n).any(|p| act.has(p) && act.has(n - p + 1));
        if !any {
            continue;
        }
        for t in normal_tuples(degs, n, Symmetry::Skew) {
            let od = t.iter().map(|&i| degs[i]).sum::<i32>() + 1 - n as i32;
            if od < lo || od > hi {
                continue;
            }
            for h in 0..act.acting_dim() {
                for g in h + 1..act.acting_dim() {
                    let v = bracket_compat(act, h, g, &t, &mut cache);
                    if !v.is_empty() {
                        let mut inputs = vec![hnames.name(h).to_string(), hnames.name(g).to_string()];
                        inputs.extend(names(space, &t));
                        out.push(Defect {
                            identity: format!("action/bracket-compat/n={n}"),
                            inputs,
                            defect: GradedElement::from_terms(space, v),
                        });
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn add_into(acc: &mut Sparse, v: &Sparse, c: &Rational) {
    for (i, x) in v {
        sparse_add(acc, *i, &(c * x));
    }
}
