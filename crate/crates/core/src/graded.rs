use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::scalars::{Rational, Scalar};
use crate::signs::Sign;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GradedError {
    #[error("duplicate basis symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("unknown basis symbol {0:?}")]
    UnknownSymbol(String),
    #[error("elements live in different spaces")]
    SpaceMismatch,
    #[error("table has arity {expected}, got {got} arguments")]
    ArityMismatch { expected: usize, got: usize },
    #[error("entry for {key:?} has output degree {got}, expected {expected}")]
    DegreeMismatch { key: Vec<String>, expected: i32, got: i32 },
    #[error("entry {0:?} is forced to vanish by the table symmetry")]
    ForcedZero(Vec<String>),
    #[error("shift direction requires a {0:?} table")]
    SymmetryMismatch(Symmetry),
}

/// Named basis with integer degrees; the order is canonical.
#[derive(Debug, PartialEq, Eq)]
pub struct GradedBasis {
    names: Vec<String>,
    degrees: Vec<i32>,
    index: HashMap<String, usize>,
}

impl GradedBasis {
    pub fn new<S: Into<String>>(
        symbols: impl IntoIterator<Item = (S, i32)>,
    ) -> Result<Arc<Self>, GradedError> {
        let mut names = Vec::new();
        let mut degrees = Vec::new();
        let mut index = HashMap::new();
        for (name, deg) in symbols {
            let name = name.into();
            if index.insert(name.clone(), names.len()).is_some() {
                return Err(GradedError::DuplicateSymbol(name));
            }
            names.push(name);
            degrees.push(deg);
        }
        Ok(Arc::new(GradedBasis { names, degrees, index }))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn degree(&self, i: usize) -> i32 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[i32] {
        &self.degrees
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GradedError> {
        self.index.get(name).copied().ok_or_else(|| GradedError::UnknownSymbol(name.to_string()))
    }

    pub fn of_degree(&self, d: i32) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.degrees[i] == d).collect()
    }

    pub fn degree_range(&self) -> Option<(i32, i32)> {
        let lo = self.degrees.iter().min()?;
        let hi = self.degrees.iter().max()?;
        Some((*lo, *hi))
    }
}

/// V[k]: same symbols, degree lowered by k.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedBasis {
    underlying: Arc<GradedBasis>,
    shift: i32,
    shifted: Arc<GradedBasis>,
}

impl ShiftedBasis {
    pub fn new(underlying: Arc<GradedBasis>, shift: i32) -> Self {
        let shifted = GradedBasis::new(
            underlying
                .names()
                .iter()
                .zip(underlying.degrees())
                .map(|(n, &d)| (n.clone(), d - shift)),
        )
        .expect("names already unique");
        ShiftedBasis { underlying, shift, shifted }
    }

    pub fn underlying(&self) -> &Arc<GradedBasis> {
        &self.underlying
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.shifted
    }

    pub fn shift(&self) -> i32 {
        self.shift
    }
}

/// Finitely supported combination of basis symbols.
#[derive(Clone, PartialEq)]
pub struct GradedElement<S = Rational> {
    space: Arc<GradedBasis>,
    coords: BTreeMap<usize, S>,
}

impl<S: Scalar> GradedElement<S> {
    pub fn zero(space: &Arc<GradedBasis>) -> Self {
        GradedElement { space: space.clone(), coords: BTreeMap::new() }
    }

    pub fn monomial(space: &Arc<GradedBasis>, i: usize, c: S) -> Self {
        let mut e = Self::zero(space);
        e.add_term(i, &c);
        e
    }

    pub fn from_terms(space: &Arc<GradedBasis>, terms: impl IntoIterator<Item = (usize, S)>) -> Self {
        let mut e = Self::zero(space);
        for (i, c) in terms {
            e.add_term(i, &c);
        }
        e
    }

    pub fn space(&self) -> &Arc<GradedBasis> {
        &self.space
    }

    pub fn coords(&self) -> &BTreeMap<usize, S> {
        &self.coords
    }

    pub fn get(&self, i: usize) -> Option<&S> {
        self.coords.get(&i)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// The common degree of the support, or None when inhomogeneous or zero.
    pub fn degree(&self) -> Option<i32> {
        let mut it = self.coords.keys().map(|&i| self.space.degree(i));
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    pub fn add_term(&mut self, i: usize, c: &S) {
        if c.is_zero() {
            return;
        }
        match self.coords.get_mut(&i) {
            Some(v) => {
                v.add_assign(c);
                if v.is_zero() {
                    self.coords.remove(&i);
                }
            }
            None => {
                self.coords.insert(i, c.clone());
            }
        }
    }

    /// self += c·other
    pub fn add_scaled_assign(&mut self, other: &Self, c: &S) -> Result<(), GradedError> {
        if !Arc::ptr_eq(&self.space, &other.space) && self.space != other.space {
            return Err(GradedError::SpaceMismatch);
        }
        for (i, v) in &other.coords {
            self.add_term(*i, &v.mul(c));
        }
        Ok(())
    }

    pub fn add_assign_elem(&mut self, other: &Self) -> Result<(), GradedError> {
        if !Arc::ptr_eq(&self.space, &other.space) && self.space != other.space {
            return Err(GradedError::SpaceMismatch);
        }
        for (i, v) in &other.coords {
            self.add_term(*i, v);
        }
        Ok(())
    }

    pub fn scale_rational(&self, c: &Rational) -> Self {
        GradedElement::from_terms(&self.space, self.coords.iter().map(|(i, v)| (*i, v.scale(c))))
    }

    pub fn mul_scalar(&self, c: &S) -> Self {
        GradedElement::from_terms(&self.space, self.coords.iter().map(|(i, v)| (*i, v.mul(c))))
    }

    pub fn neg(&self) -> Self {
        GradedElement {
            space: self.space.clone(),
            coords: self.coords.iter().map(|(i, v)| (*i, v.neg())).collect(),
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> GradedElement<T> {
        GradedElement::from_terms(&self.space, self.coords.iter().map(|(i, v)| (*i, f(v))))
    }

    /// Same coordinates viewed in another space with identical symbol order.
    pub fn reinterpret(&self, space: &Arc<GradedBasis>) -> Self {
        GradedElement { space: space.clone(), coords: self.coords.clone() }
    }

    /// Keep only symbols of the given degree.
    pub fn component(&self, d: i32) -> Self {
        GradedElement {
            space: self.space.clone(),
            coords: self
                .coords
                .iter()
                .filter(|(i, _)| self.space.degree(**i) == d)
                .map(|(i, v)| (*i, v.clone()))
                .collect(),
        }
    }
}

impl GradedElement<Rational> {
    pub fn basis(space: &Arc<GradedBasis>, i: usize) -> Self {
        Self::monomial(space, i, Rational::one())
    }

    pub fn named(space: &Arc<GradedBasis>, terms: &[(&str, Rational)]) -> Result<Self, GradedError> {
        let mut e = Self::zero(space);
        for (n, c) in terms {
            e.add_term(space.index_of(n)?, c);
        }
        Ok(e)
    }
}

/// a + c·b with sparse cleanup.
pub fn element_arith<S: Scalar>(
    a: &GradedElement<S>,
    b: &GradedElement<S>,
    c: &S,
) -> Result<GradedElement<S>, GradedError> {
    let mut out = a.clone();
    out.add_scaled_assign(b, c)?;
    Ok(out)
}

/// a − b
pub fn element_sub<S: Scalar>(
    a: &GradedElement<S>,
    b: &GradedElement<S>,
) -> Result<GradedElement<S>, GradedError> {
    let mut out = a.clone();
    out.add_assign_elem(&b.neg())?;
    Ok(out)
}

impl<S: Scalar> fmt::Debug for GradedElement<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<S: Scalar> fmt::Display for GradedElement<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coords.is_empty() {
            return write!(f, "0");
        }
        for (k, (i, v)) in self.coords.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({v})·{}", self.space.name(*i))?;
        }
        Ok(())
    }
}

impl<S: Scalar + Serialize> Serialize for GradedElement<S> {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        let mut m = s.serialize_map(Some(self.coords.len()))?;
        for (i, v) in &self.coords {
            m.serialize_entry(self.space.name(*i), v)?;
        }
        m.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Symmetry {
    Skew,
    Symmetric,
}

/// Sparse coordinate vector.
pub type Sparse = BTreeMap<usize, Rational>;

pub(crate) fn sparse_add(acc: &mut Sparse, i: usize, c: &Rational) {
    if c.is_zero() {
        return;
    }
    match acc.get_mut(&i) {
        Some(v) => {
            *v += c;
            if v.is_zero() {
                acc.remove(&i);
            }
        }
        None => {
            acc.insert(i, c.clone());
        }
    }
}

pub(crate) fn sparse_axpy(acc: &mut Sparse, c: &Rational, x: &Sparse) {
    if c.is_zero() {
        return;
    }
    for (i, v) in x {
        sparse_add(acc, *i, &(c * v));
    }
}

/// Sort a tuple into basis order, returning the normalization sign, or None when the
/// product vanishes. `degs` are the degrees whose parity governs the sign.
pub fn normalize_tuple(idx: &[usize], degs: &[i32], symmetry: Symmetry) -> Option<(Vec<usize>, Sign)> {
    let mut w = idx.to_vec();
    let mut odd = false;
    let n = w.len();
    for i in 0..n {
        for j in 0..n - 1 - i {
            if w[j] > w[j + 1] {
                let both_odd = degs[w[j]] % 2 != 0 && degs[w[j + 1]] % 2 != 0;
                let flip = match symmetry {
                    Symmetry::Skew => !both_odd,
                    Symmetry::Symmetric => both_odd,
                };
                if flip {
                    odd = !odd;
                }
                w.swap(j, j + 1);
            }
        }
    }
    for j in 1..n {
        if w[j] == w[j - 1] {
            let d_odd = degs[w[j]] % 2 != 0;
            let vanishes = match symmetry {
                Symmetry::Skew => !d_odd,
                Symmetry::Symmetric => d_odd,
            };
            if vanishes {
                return None;
            }
        }
    }
    Some((w, Sign::from_parity(odd)))
}

/// All normalized tuples of length n (weakly increasing, with forbidden repeats removed).
pub fn normal_tuples(degs: &[i32], n: usize, symmetry: Symmetry) -> Vec<Vec<usize>> {
    let dim = degs.len();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(
        degs: &[i32],
        dim: usize,
        n: usize,
        symmetry: Symmetry,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let start = cur.last().copied().unwrap_or(0);
        for i in start..dim {
            if cur.last() == Some(&i) {
                let odd = degs[i] % 2 != 0;
                let allowed = match symmetry {
                    Symmetry::Skew => odd,
                    Symmetry::Symmetric => !odd,
                };
                if !allowed {
                    continue;
                }
            }
            cur.push(i);
            rec(degs, dim, n, symmetry, cur, out);
            cur.pop();
        }
    }
    rec(degs, dim, n, symmetry, &mut cur, &mut out);
    out
}

/// Graded multilinear map stored by its values on normalized basis tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTable {
    arity: usize,
    symmetry: Symmetry,
    map_degree: i32,
    input: Arc<GradedBasis>,
    output: Arc<GradedBasis>,
    values: BTreeMap<Vec<usize>, Sparse>,
}

impl MultiTable {
    pub fn new(
        arity: usize,
        symmetry: Symmetry,
        map_degree: i32,
        input: &Arc<GradedBasis>,
        output: &Arc<GradedBasis>,
    ) -> Self {
        assert!(arity > 0, "component 0 is stored as an element, not a table");
        MultiTable {
            arity,
            symmetry,
            map_degree,
            input: input.clone(),
            output: output.clone(),
            values: BTreeMap::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn map_degree(&self) -> i32 {
        self.map_degree
    }

    pub fn input(&self) -> &Arc<GradedBasis> {
        &self.input
    }

    pub fn output(&self) -> &Arc<GradedBasis> {
        &self.output
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<usize>, &Sparse)> {
        self.values.iter()
    }

    pub fn normalize(&self, idx: &[usize]) -> Option<(Vec<usize>, Sign)> {
        normalize_tuple(idx, self.input.degrees(), self.symmetry)
    }

    /// Set the value on an arbitrary basis tuple; the sign of normalization is folded in.
    pub fn insert(&mut self, idx: &[usize], value: Sparse) -> Result<(), GradedError> {
        if idx.len() != self.arity {
            return Err(GradedError::ArityMismatch { expected: self.arity, got: idx.len() });
        }
        let value: Sparse = value.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let key_names = || idx.iter().map(|&i| self.input.name(i).to_string()).collect::<Vec<_>>();
        let Some((key, sign)) = self.normalize(idx) else {
            if value.is_empty() {
                return Ok(());
            }
            return Err(GradedError::ForcedZero(key_names()));
        };
        let expected = idx.iter().map(|&i| self.input.degree(i)).sum::<i32>() + self.map_degree;
        for &o in value.keys() {
            let got = self.output.degree(o);
            if got != expected {
                return Err(GradedError::DegreeMismatch { key: key_names(), expected, got });
            }
        }
        if value.is_empty() {
            self.values.remove(&key);
        } else {
            let v = if sign.is_minus() {
                value.into_iter().map(|(i, c)| (i, -c)).collect()
            } else {
                value
            };
            self.values.insert(key, v);
        }
        Ok(())
    }

    /// Value on an already normalized key.
    pub fn value(&self, key: &[usize]) -> Option<&Sparse> {
        self.values.get(key)
    }

    /// Value on an arbitrary basis tuple.
    pub fn eval_basis(&self, idx: &[usize]) -> Option<(Sign, &Sparse)> {
        let (key, sign) = self.normalize(idx)?;
        self.values.get(&key).map(|v| (sign, v))
    }

    /// acc += c · T(e_idx)
    pub fn accumulate_basis(&self, idx: &[usize], c: &Rational, acc: &mut Sparse) {
        if let Some((sign, v)) = self.eval_basis(idx) {
            let c = if sign.is_minus() { -c } else { c.clone() };
            sparse_axpy(acc, &c, v);
        }
    }

    /// Multilinear evaluation on arbitrary elements.
    pub fn evaluate<S: Scalar>(&self, args: &[&GradedElement<S>]) -> Result<GradedElement<S>, GradedError> {
        if args.len() != self.arity {
            return Err(GradedError::ArityMismatch { expected: self.arity, got: args.len() });
        }
        for a in args {
            if !Arc::ptr_eq(a.space(), &self.input) && **a.space() != *self.input {
                return Err(GradedError::SpaceMismatch);
            }
        }
        let mut out = GradedElement::zero(&self.output);
        if self.values.is_empty() {
            return Ok(out);
        }
        let supports: Vec<Vec<(&usize, &S)>> = args.iter().map(|a| a.coords().iter().collect()).collect();
        if supports.iter().any(|s| s.is_empty()) {
            return Ok(out);
        }
        let mut pos = vec![0usize; self.arity];
        let mut idx = vec![0usize; self.arity];
        loop {
            for k in 0..self.arity {
                idx[k] = *supports[k][pos[k]].0;
            }
            if let Some((sign, v)) = self.eval_basis(&idx) {
                let mut coeff: Option<S> = None;
                for k in 0..self.arity {
                    let c = supports[k][pos[k]].1;
                    coeff = Some(match coeff {
                        None => c.clone(),
                        Some(x) => x.mul(c),
                    });
                }
                let coeff = sign.apply(&coeff.expect("arity 0 handled below"));
                for (o, r) in v {
                    out.add_term(*o, &coeff.scale(r));
                }
            }
            let mut k = 0;
            loop {
                if k == self.arity {
                    return Ok(out);
                }
                pos[k] += 1;
                if pos[k] < supports[k].len() {
                    break;
                }
                pos[k] = 0;
                k += 1;
            }
        }
    }

    pub fn scaled(&self, c: &Rational) -> MultiTable {
        let mut t = MultiTable::new(self.arity, self.symmetry, self.map_degree, &self.input, &self.output);
        if c.is_zero() {
            return t;
        }
        for (k, v) in &self.values {
            t.values.insert(k.clone(), v.iter().map(|(i, x)| (*i, x * c)).collect());
        }
        t
    }

    /// self + c·other, assuming matching shapes.
    pub fn add_scaled(&self, other: &MultiTable, c: &Rational) -> Result<MultiTable, GradedError> {
        if self.arity != other.arity || self.symmetry != other.symmetry || self.input != other.input {
            return Err(GradedError::SpaceMismatch);
        }
        let mut t = self.clone();
        for (k, v) in &other.values {
            let e = t.values.entry(k.clone()).or_default();
            sparse_axpy(e, c, v);
            if e.is_empty() {
                t.values.remove(k);
            }
        }
        Ok(t)
    }

    /// Insert a value directly on a normalized key, no checks (crate internal).
    pub(crate) fn set_normalized(&mut self, key: Vec<usize>, value: Sparse) {
        if value.is_empty() {
            self.values.remove(&key);
        } else {
            self.values.insert(key, value);
        }
    }

    pub(crate) fn with_spaces(&self, input: &Arc<GradedBasis>, output: &Arc<GradedBasis>) -> MultiTable {
        MultiTable {
            arity: self.arity,
            symmetry: self.symmetry,
            map_degree: self.map_degree,
            input: input.clone(),
            output: output.clone(),
            values: self.values.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    ToShifted,
    ToUnshifted,
}

/// Décalage transport between skew maps on V and symmetric maps on V[1]:
/// {x̃_1,…,x̃_n} = (-1)^{n(n+1)/2 + Σ(n-i)|x_i|} [x_1,…,x_n][1].
pub fn shift_table(
    table: &MultiTable,
    direction: ShiftDirection,
    target: &ShiftedBasis,
) -> Result<MultiTable, GradedError> {
    let n = table.arity();
    let (need, sym, deg, input, output) = match direction {
        ShiftDirection::ToShifted => (
            Symmetry::Skew,
            Symmetry::Symmetric,
            table.map_degree() - target.shift() + (n as i32) * target.shift(),
            target.basis(),
            target.basis(),
        ),
        ShiftDirection::ToUnshifted => (
            Symmetry::Symmetric,
            Symmetry::Skew,
            table.map_degree() + target.shift() - (n as i32) * target.shift(),
            target.underlying(),
            target.underlying(),
        ),
    };
    if table.symmetry() != need {
        return Err(GradedError::SymmetryMismatch(need));
    }
    let mut out = MultiTable::new(n, sym, deg, input, output);
    let under = target.underlying();
    let base = Sign::pow((n * (n + 1) / 2) as i64);
    for (key, v) in table.entries() {
        let degs: Vec<i32> = key.iter().map(|&i| under.degree(i)).collect();
        let sign = base * crate::signs::decalage_sign(&degs);
        let value = if sign.is_minus() { v.iter().map(|(i, c)| (*i, -c)).collect() } else { v.clone() };
        out.set_normalized(key.clone(), value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signs::{koszul_chi, koszul_epsilon, Permutation};
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::int(n)
    }

    fn ef_basis() -> Arc<GradedBasis> {
        GradedBasis::new([("h", 0), ("e", 0), ("f", 0)]).unwrap()
    }

    #[test]
    fn element_arith_examples() {
        let v = ef_basis();
        let e = GradedElement::basis(&v, 1);
        let f = GradedElement::basis(&v, 2);
        assert_eq!(element_arith(&e, &f, &q(0)).unwrap(), e);
        assert!(element_arith(&e, &e, &q(-1)).unwrap().is_zero());
        let half = e.scale_rational(&Rational::new(1, 2).unwrap());
        assert_eq!(element_arith(&half, &half, &q(1)).unwrap(), e);
        let w = GradedBasis::new([("x", 0)]).unwrap();
        assert_eq!(
            element_arith(&e, &GradedElement::basis(&w, 0), &q(1)),
            Err(GradedError::SpaceMismatch)
        );
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(GradedBasis::new([("a", 0), ("a", 1)]).is_err());
    }

    #[test]
    fn homogeneous_degree() {
        let v = GradedBasis::new([("a", 0), ("b", 1), ("c", 1)]).unwrap();
        let x = GradedElement::from_terms(&v, [(1, q(1)), (2, q(3))]);
        assert_eq!(x.degree(), Some(1));
        let y = GradedElement::from_terms(&v, [(0, q(1)), (2, q(3))]);
        assert_eq!(y.degree(), None);
    }

    #[test]
    fn evaluate_examples() {
        let v = ef_basis();
        let mut t = MultiTable::new(2, Symmetry::Skew, 0, &v, &v);
        t.insert(&[1, 2], [(0, q(1))].into()).unwrap();
        let e = GradedElement::basis(&v, 1);
        let f = GradedElement::basis(&v, 2);
        assert_eq!(t.evaluate(&[&f, &e]).unwrap(), GradedElement::basis(&v, 0).neg());
        let z = GradedElement::zero(&v);
        assert!(t.evaluate(&[&z, &e]).unwrap().is_zero());
        assert!(t.evaluate(&[&e, &e]).unwrap().is_zero());

        let s = GradedBasis::new([("x", 0), ("y", 1)]).unwrap();
        let mut sym = MultiTable::new(2, Symmetry::Symmetric, 1, &s, &s);
        sym.insert(&[0, 0], [(1, q(1))].into()).unwrap();
        let x = GradedElement::basis(&s, 0);
        assert_eq!(sym.evaluate(&[&x, &x]).unwrap(), GradedElement::basis(&s, 1));
        assert!(t.evaluate(&[&e]).is_err());
    }

    #[test]
    fn insert_checks_degree_and_forced_zero() {
        let v = GradedBasis::new([("a", 0), ("b", 1)]).unwrap();
        let mut t = MultiTable::new(2, Symmetry::Skew, 0, &v, &v);
        assert!(matches!(t.insert(&[0, 1], [(0, q(1))].into()), Err(GradedError::DegreeMismatch { .. })));
        assert!(matches!(t.insert(&[0, 0], [(0, q(1))].into()), Err(GradedError::ForcedZero(_))));
        t.insert(&[1, 1], [(0, Rational::zero())].into()).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn shift_examples() {
        let v = GradedBasis::new([("x", 0), ("y", 1)]).unwrap();
        let sb = ShiftedBasis::new(v.clone(), 1);
        let mut d = MultiTable::new(1, Symmetry::Skew, 1, &v, &v);
        d.insert(&[0], [(1, q(1))].into()).unwrap();
        let q1 = shift_table(&d, ShiftDirection::ToShifted, &sb).unwrap();
        assert_eq!(q1.map_degree(), 1);
        assert_eq!(q1.value(&[0]).unwrap(), &Sparse::from([(1, q(-1))]));

        let w = GradedBasis::new([("a", 0), ("b", 0), ("c", 0)]).unwrap();
        let sw = ShiftedBasis::new(w.clone(), 1);
        let mut br = MultiTable::new(2, Symmetry::Skew, 0, &w, &w);
        br.insert(&[0, 1], [(2, q(1))].into()).unwrap();
        let q2 = shift_table(&br, ShiftDirection::ToShifted, &sw).unwrap();
        assert_eq!(q2.map_degree(), 1);
        assert_eq!(q2.value(&[0, 1]).unwrap(), &Sparse::from([(2, q(-1))]));
        assert!(shift_table(&br, ShiftDirection::ToUnshifted, &sw).is_err());
    }

    fn mixed_space() -> Arc<GradedBasis> {
        GradedBasis::new([("a", 0), ("b", 1), ("c", 1), ("d", 2), ("e", -1)]).unwrap()
    }

    /// Random skew table on the mixed space with output degree = input sum + map degree.
    fn random_table(seed: &[i64], arity: usize, symmetry: Symmetry, map_degree: i32) -> MultiTable {
        let v = mixed_space();
        let mut t = MultiTable::new(arity, symmetry, map_degree, &v, &v);
        let mut k = 0;
        for key in normal_tuples(v.degrees(), arity, symmetry) {
            let deg: i32 = key.iter().map(|&i| v.degree(i)).sum::<i32>() + map_degree;
            let mut val = Sparse::new();
            for o in v.of_degree(deg) {
                let c = seed[k % seed.len()];
                k += 1;
                if c != 0 {
                    val.insert(o, q(c));
                }
            }
            t.insert(&key, val).unwrap();
        }
        t
    }

    fn random_element(v: &Arc<GradedBasis>, c: &[i64]) -> GradedElement {
        GradedElement::from_terms(v, c.iter().enumerate().map(|(i, x)| (i, q(*x))))
    }

    proptest! {
        #[test]
        fn multilinear(
            seed in proptest::collection::vec(-3i64..4, 20),
            a in proptest::collection::vec(-3i64..4, 5),
            b in proptest::collection::vec(-3i64..4, 5),
            x in proptest::collection::vec(-3i64..4, 5),
            c in -3i64..4,
        ) {
            let t = random_table(&seed, 2, Symmetry::Skew, 0);
            let v = mixed_space();
            let (a, b, x) = (random_element(&v, &a), random_element(&v, &b), random_element(&v, &x));
            let ab = element_arith(&a, &b, &q(c)).unwrap();
            let lhs = t.evaluate(&[&ab, &x]).unwrap();
            let rhs = element_arith(
                &t.evaluate(&[&a, &x]).unwrap(),
                &t.evaluate(&[&b, &x]).unwrap(),
                &q(c),
            ).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn permutation_consistency(
            seed in proptest::collection::vec(-3i64..4, 20),
            idx in proptest::collection::vec(0usize..5, 3),
            perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
            skew in any::<bool>(),
        ) {
            let sym = if skew { Symmetry::Skew } else { Symmetry::Symmetric };
            let t = random_table(&seed, 3, sym, 1);
            let v = mixed_space();
            let args: Vec<GradedElement> = idx.iter().map(|&i| GradedElement::basis(&v, i)).collect();
            let sigma = Permutation::from_images(perm).unwrap();
            let permuted: Vec<&GradedElement> = sigma.images().iter().map(|&i| &args[i]).collect();
            let degs: Vec<i32> = idx.iter().map(|&i| v.degree(i)).collect();
            let sign = match sym {
                Symmetry::Skew => koszul_chi(&sigma, &degs).unwrap(),
                Symmetry::Symmetric => koszul_epsilon(&sigma, &degs).unwrap(),
            };
            let direct: Vec<&GradedElement> = args.iter().collect();
            let lhs = t.evaluate(&direct).unwrap();
            let rhs = t.evaluate(&permuted).unwrap().scale_rational(&sign.to_rational());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn degree_homogeneity(
            seed in proptest::collection::vec(-3i64..4, 20),
            idx in proptest::collection::vec(0usize..5, 2),
        ) {
            let t = random_table(&seed, 2, Symmetry::Skew, 1);
            let v = mixed_space();
            let a = GradedElement::basis(&v, idx[0]);
            let b = GradedElement::basis(&v, idx[1]);
            let out = t.evaluate(&[&a, &b]).unwrap();
            if !out.is_zero() {
                prop_assert_eq!(out.degree(), Some(v.degree(idx[0]) + v.degree(idx[1]) + 1));
            }
        }

        #[test]
        fn shift_round_trip(seed in proptest::collection::vec(-3i64..4, 20), arity in 1usize..4) {
            let t = random_table(&seed, arity, Symmetry::Skew, 2 - arity as i32);
            let sb = ShiftedBasis::new(mixed_space(), 1);
            let up = shift_table(&t, ShiftDirection::ToShifted, &sb).unwrap();
            let down = shift_table(&up, ShiftDirection::ToUnshifted, &sb).unwrap();
            prop_assert_eq!(down.map_degree(), t.map_degree());
            prop_assert_eq!(down, t);
        }
    }
}
