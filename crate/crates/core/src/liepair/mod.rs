mod catalog;
pub(crate) mod forms;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graded::{sparse_axpy, GradedBasis, GradedElement, GradedError, MultiTable, Sparse, Symmetry};
use crate::linalg;
use crate::linfty::{Defect, LInfinityStructure};
use crate::scalars::Rational;

pub use catalog::{example_names, example_pair};
pub use forms::{FormKey, OmegaBasis, PairL3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PairError {
    #[error("{0}")]
    Json(String),
    #[error("basis: duplicate symbol {0:?}")]
    DuplicateBasis(String),
    #[error("brackets[{index}]: {message}")]
    Bracket { index: usize, message: String },
    #[error("A[{index}]: {message}")]
    Subset { index: usize, message: String },
    #[error("Jacobi identity fails on {} basis triple(s), first {:?}", .0.len(), .0[0].inputs)]
    Jacobi(Vec<Defect>),
    #[error("A is not a subalgebra: [{0}, {1}] leaves A")]
    NotSubalgebra(String, String),
    #[error("element has {symbol:?} outside {part}")]
    Support { part: &'static str, symbol: String },
    #[error("change of basis matrix is singular")]
    Singular,
    #[error("unknown example {0:?}")]
    UnknownExample(String),
    #[error(transparent)]
    Graded(#[from] GradedError),
}

/// Finite-dimensional Lie algebra in degree 0 given by structure constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    basis: Arc<GradedBasis>,
    structure: MultiTable,
}

/// Jacobiator [[x,y],z] + [[y,z],x] + [[z,x],y] on basis triples i < j < k.
pub fn validate_lie(alg: &LieAlgebra) -> Vec<Defect> {
    let n = alg.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut acc = Sparse::new();
                for (x, y, z) in [(i, j, k), (j, k, i), (k, i, j)] {
                    let xy = alg.bracket_basis(x, y);
                    for (o, c) in &xy {
                        sparse_axpy(&mut acc, c, &alg.bracket_basis(*o, z));
                    }
                }
                if !acc.is_empty() {
                    out.push(Defect {
                        identity: "lie-jacobi".into(),
                        inputs: [i, j, k].iter().map(|&t| alg.basis.name(t).to_string()).collect(),
                        defect: GradedElement::from_terms(&alg.basis, acc),
                    });
                }
            }
        }
    }
    out
}

impl LieAlgebra {
    /// Build without checking the Jacobi identity.
    pub fn from_table_unchecked(structure: MultiTable) -> Result<Self, PairError> {
        let basis = structure.input().clone();
        if structure.arity() != 2
            || structure.symmetry() != Symmetry::Skew
            || structure.map_degree() != 0
            || basis.degrees().iter().any(|&d| d != 0)
        {
            return Err(PairError::Json("structure must be a degree-0 skew binary table".into()));
        }
        Ok(LieAlgebra { basis, structure })
    }

    pub fn from_table(structure: MultiTable) -> Result<Self, PairError> {
        let l = Self::from_table_unchecked(structure)?;
        let bad = validate_lie(&l);
        if !bad.is_empty() {
            return Err(PairError::Jacobi(bad));
        }
        Ok(l)
    }

    /// Structure constants from (left, right, output) triples; no Jacobi check.
    pub fn from_constants_unchecked(
        names: &[&str],
        brackets: &[(&str, &str, &[(&str, i64)])],
    ) -> Result<Self, PairError> {
        let json = LieAlgebraJson {
            basis: names.iter().map(|s| s.to_string()).collect(),
            brackets: brackets
                .iter()
                .map(|(l, r, out)| BracketJson {
                    left: l.to_string(),
                    right: r.to_string(),
                    out: out.iter().map(|(n, c)| (n.to_string(), Rational::int(*c))).collect(),
                })
                .collect(),
        };
        json.build_unchecked()
    }

    pub fn from_constants(names: &[&str], brackets: &[(&str, &str, &[(&str, i64)])]) -> Result<Self, PairError> {
        let l = Self::from_constants_unchecked(names, brackets)?;
        Self::from_table(l.structure)
    }

    pub fn basis(&self) -> &Arc<GradedBasis> {
        &self.basis
    }

    pub fn structure(&self) -> &MultiTable {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn bracket_basis(&self, i: usize, j: usize) -> Sparse {
        match self.structure.eval_basis(&[i, j]) {
            Some((s, v)) => v.iter().map(|(o, c)| (*o, s.apply(c))).collect(),
            None => Sparse::new(),
        }
    }

    /// Bracket of dense coordinate vectors.
    pub fn bracket_vec(&self, u: &[Rational], v: &[Rational]) -> Vec<Rational> {
        let n = self.dim();
        let mut acc = Sparse::new();
        for i in (0..n).filter(|&i| !u[i].is_zero()) {
            for j in (0..n).filter(|&j| !v[j].is_zero()) {
                sparse_axpy(&mut acc, &(&u[i] * &v[j]), &self.bracket_basis(i, j));
            }
        }
        dense(&acc, n)
    }

    pub fn bracket(&self, u: &GradedElement, v: &GradedElement) -> Result<GradedElement, PairError> {
        Ok(self.structure.evaluate(&[u, v])?)
    }

    /// Same algebra in a new basis; `vectors[i]` are the coordinates of new basis vector i.
    pub fn change_basis(&self, names: &[&str], vectors: &[Vec<Rational>]) -> Result<LieAlgebra, PairError> {
        let n = self.dim();
        if names.len() != n || vectors.len() != n || linalg::rank(vectors, n) != n {
            return Err(PairError::Singular);
        }
        let basis = GradedBasis::new(names.iter().map(|s| (s.to_string(), 0)))?;
        let mut t = MultiTable::new(2, Symmetry::Skew, 0, &basis, &basis);
        for i in 0..n {
            for j in i + 1..n {
                let w = self.bracket_vec(&vectors[i], &vectors[j]);
                let x = linalg::coordinates_in_span(vectors, &w).ok_or(PairError::Singular)?;
                t.insert(&[i, j], sparse(&x))?;
            }
        }
        LieAlgebra::from_table(t)
    }

    pub fn to_json(&self) -> LieAlgebraJson {
        let n = self.dim();
        let mut brackets = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let v = self.bracket_basis(i, j);
                if v.is_empty() {
                    continue;
                }
                brackets.push(BracketJson {
                    left: self.basis.name(i).into(),
                    right: self.basis.name(j).into(),
                    out: v.iter().map(|(o, c)| (self.basis.name(*o).to_string(), c.clone())).collect(),
                });
            }
        }
        LieAlgebraJson { basis: self.basis.names().to_vec(), brackets }
    }
}

pub(crate) fn dense(v: &Sparse, n: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); n];
    for (i, c) in v {
        out[*i] = c.clone();
    }
    out
}

pub(crate) fn sparse(v: &[Rational]) -> Sparse {
    v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (i, c.clone())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketJson {
    pub left: String,
    pub right: String,
    pub out: BTreeMap<String, Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieAlgebraJson {
    pub basis: Vec<String>,
    #[serde(default)]
    pub brackets: Vec<BracketJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiePairJson {
    pub basis: Vec<String>,
    #[serde(default)]
    pub brackets: Vec<BracketJson>,
    #[serde(rename = "A")]
    pub a: Vec<String>,
}

impl LieAlgebraJson {
    pub fn build_unchecked(&self) -> Result<LieAlgebra, PairError> {
        let mut seen = std::collections::HashSet::new();
        for b in &self.basis {
            if !seen.insert(b) {
                return Err(PairError::DuplicateBasis(b.clone()));
            }
        }
        let basis = GradedBasis::new(self.basis.iter().map(|s| (s.clone(), 0)))?;
        let mut t = MultiTable::new(2, Symmetry::Skew, 0, &basis, &basis);
        let mut done = std::collections::HashSet::new();
        for (index, br) in self.brackets.iter().enumerate() {
            let err = |message: String| PairError::Bracket { index, message };
            let l = basis.index_of(&br.left).map_err(|_| err(format!("unknown symbol {:?}", br.left)))?;
            let r = basis.index_of(&br.right).map_err(|_| err(format!("unknown symbol {:?}", br.right)))?;
            if l >= r {
                return Err(err(format!(
                    "left {:?} must precede right {:?} in basis order",
                    br.left, br.right
                )));
            }
            if !done.insert((l, r)) {
                return Err(err(format!("duplicate entry for [{}, {}]", br.left, br.right)));
            }
            let mut v = Sparse::new();
            for (name, c) in &br.out {
                let o = basis.index_of(name).map_err(|_| err(format!("unknown output symbol {name:?}")))?;
                if !c.is_zero() {
                    v.insert(o, c.clone());
                }
            }
            t.insert(&[l, r], v)?;
        }
        LieAlgebra::from_table_unchecked(t)
    }
}

impl LiePairJson {
    pub fn parse(text: &str) -> Result<Self, PairError> {
        serde_json::from_str(text).map_err(|e| PairError::Json(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    /// Parse structure constants without validating Jacobi or the subalgebra condition.
    pub fn algebra_unchecked(&self) -> Result<LieAlgebra, PairError> {
        LieAlgebraJson { basis: self.basis.clone(), brackets: self.brackets.clone() }.build_unchecked()
    }

    pub fn build(&self) -> Result<LiePair, PairError> {
        let l = self.algebra_unchecked()?;
        let l = LieAlgebra::from_table(l.structure)?;
        let names: Vec<&str> = self.a.iter().map(String::as_str).collect();
        LiePair::new(l, &names)
    }
}

/// Lie algebra L with subalgebra A (spanned by basis symbols) and complement B (the rest).
#[derive(Debug, Clone)]
pub struct LiePair {
    lie: LieAlgebra,
    a: Vec<usize>,
    b: Vec<usize>,
    a_pos: Vec<Option<usize>>,
    b_pos: Vec<Option<usize>>,
    omega: Arc<OmegaBasis>,
    tables: Arc<PairTables>,
}

/// Bott connection, ð, β and [·,·]_B on basis vectors, in A/B coordinates.
#[derive(Debug)]
pub(crate) struct PairTables {
    pub bott: Vec<Vec<Vec<Rational>>>,
    pub eth: Vec<Vec<Vec<Rational>>>,
    pub beta: Vec<Vec<Vec<Rational>>>,
    pub br_b: Vec<Vec<Vec<Rational>>>,
    pub br_a: Vec<Vec<Vec<Rational>>>,
}

impl LiePair {
    pub fn new(lie: LieAlgebra, a_names: &[&str]) -> Result<Self, PairError> {
        let n = lie.dim();
        let mut in_a = vec![false; n];
        for (index, name) in a_names.iter().enumerate() {
            let i = lie
                .basis
                .index_of(name)
                .map_err(|_| PairError::Subset { index, message: format!("unknown symbol {name:?}") })?;
            if in_a[i] {
                return Err(PairError::Subset { index, message: format!("duplicate symbol {name:?}") });
            }
            in_a[i] = true;
        }
        let a: Vec<usize> = (0..n).filter(|&i| in_a[i]).collect();
        let b: Vec<usize> = (0..n).filter(|&i| !in_a[i]).collect();
        for &x in &a {
            for &y in &a {
                if lie.bracket_basis(x, y).keys().any(|&o| !in_a[o]) {
                    return Err(PairError::NotSubalgebra(
                        lie.basis.name(x).into(),
                        lie.basis.name(y).into(),
                    ));
                }
            }
        }
        let mut a_pos = vec![None; n];
        let mut b_pos = vec![None; n];
        for (k, &i) in a.iter().enumerate() {
            a_pos[i] = Some(k);
        }
        for (k, &i) in b.iter().enumerate() {
            b_pos[i] = Some(k);
        }
        let a_names_sorted: Vec<String> = a.iter().map(|&i| lie.basis.name(i).to_string()).collect();
        let b_names_sorted: Vec<String> = b.iter().map(|&i| lie.basis.name(i).to_string()).collect();
        let omega = Arc::new(OmegaBasis::new(&a_names_sorted, &b_names_sorted));
        let mut pair = LiePair {
            lie,
            a,
            b,
            a_pos,
            b_pos,
            omega,
            tables: Arc::new(PairTables { bott: vec![], eth: vec![], beta: vec![], br_b: vec![], br_a: vec![] }),
        };
        pair.tables = Arc::new(pair.compute_tables());
        Ok(pair)
    }

    fn compute_tables(&self) -> PairTables {
        let (da, db) = (self.dim_a(), self.dim_b());
        let br = |x: usize, y: usize| dense(&self.lie.bracket_basis(x, y), self.lie.dim());
        let mut t = PairTables {
            bott: vec![vec![vec![]; db]; da],
            eth: vec![vec![vec![]; da]; db],
            beta: vec![vec![vec![]; db]; db],
            br_b: vec![vec![vec![]; db]; db],
            br_a: vec![vec![vec![]; da]; da],
        };
        for (i, &ai) in self.a.iter().enumerate() {
            for (j, &bj) in self.b.iter().enumerate() {
                let v = br(ai, bj);
                t.bott[i][j] = self.pr_b(&v);
                t.eth[j][i] = self.pr_a(&br(bj, ai));
            }
            for (i2, &ai2) in self.a.iter().enumerate() {
                t.br_a[i][i2] = self.pr_a(&br(ai, ai2));
            }
        }
        for (j, &bj) in self.b.iter().enumerate() {
            for (k, &bk) in self.b.iter().enumerate() {
                let v = br(bj, bk);
                t.beta[j][k] = self.pr_a(&v);
                t.br_b[j][k] = self.pr_b(&v);
            }
        }
        t
    }

    pub fn lie(&self) -> &LieAlgebra {
        &self.lie
    }

    pub fn omega(&self) -> &Arc<OmegaBasis> {
        &self.omega
    }

    pub(crate) fn tables(&self) -> &PairTables {
        &self.tables
    }

    pub fn dim_a(&self) -> usize {
        self.a.len()
    }

    pub fn dim_b(&self) -> usize {
        self.b.len()
    }

    /// L-indices of the A basis, in basis order.
    pub fn a_indices(&self) -> &[usize] {
        &self.a
    }

    pub fn b_indices(&self) -> &[usize] {
        &self.b
    }

    pub fn a_names(&self) -> Vec<String> {
        self.a.iter().map(|&i| self.lie.basis.name(i).to_string()).collect()
    }

    pub fn b_names(&self) -> Vec<String> {
        self.b.iter().map(|&i| self.lie.basis.name(i).to_string()).collect()
    }

    pub fn pr_a(&self, v: &[Rational]) -> Vec<Rational> {
        self.a.iter().map(|&i| v[i].clone()).collect()
    }

    pub fn pr_b(&self, v: &[Rational]) -> Vec<Rational> {
        self.b.iter().map(|&i| v[i].clone()).collect()
    }

    pub fn embed_a(&self, a: &[Rational]) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.lie.dim()];
        for (k, &i) in self.a.iter().enumerate() {
            v[i] = a[k].clone();
        }
        v
    }

    pub fn embed_b(&self, b: &[Rational]) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.lie.dim()];
        for (k, &i) in self.b.iter().enumerate() {
            v[i] = b[k].clone();
        }
        v
    }

    /// A element of L (as GradedElement over the L basis) to A coordinates.
    pub fn a_coords(&self, x: &GradedElement) -> Result<Vec<Rational>, PairError> {
        let mut v = vec![Rational::zero(); self.dim_a()];
        for (i, c) in x.coords() {
            let k = self.a_pos[*i]
                .ok_or_else(|| PairError::Support { part: "A", symbol: self.lie.basis.name(*i).into() })?;
            v[k] = c.clone();
        }
        Ok(v)
    }

    pub fn b_coords(&self, x: &GradedElement) -> Result<Vec<Rational>, PairError> {
        let mut v = vec![Rational::zero(); self.dim_b()];
        for (i, c) in x.coords() {
            let k = self.b_pos[*i]
                .ok_or_else(|| PairError::Support { part: "B", symbol: self.lie.basis.name(*i).into() })?;
            v[k] = c.clone();
        }
        Ok(v)
    }

    pub fn a_element(&self, a: &[Rational]) -> GradedElement {
        GradedElement::from_terms(&self.lie.basis, sparse(&self.embed_a(a)))
    }

    pub fn b_element(&self, b: &[Rational]) -> GradedElement {
        GradedElement::from_terms(&self.lie.basis, sparse(&self.embed_b(b)))
    }

    pub(crate) fn bott_vec(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        bilinear(&self.tables.bott, a, b, self.dim_b())
    }

    pub(crate) fn eth_vec(&self, b: &[Rational], a: &[Rational]) -> Vec<Rational> {
        bilinear(&self.tables.eth, b, a, self.dim_a())
    }

    pub(crate) fn beta_vec(&self, b1: &[Rational], b2: &[Rational]) -> Vec<Rational> {
        bilinear(&self.tables.beta, b1, b2, self.dim_a())
    }

    pub(crate) fn bracket_b_vec(&self, b1: &[Rational], b2: &[Rational]) -> Vec<Rational> {
        bilinear(&self.tables.br_b, b1, b2, self.dim_b())
    }

    /// ∇_a b = pr_B[a,b]
    pub fn bott(&self, a: &GradedElement, b: &GradedElement) -> Result<GradedElement, PairError> {
        Ok(self.b_element(&self.bott_vec(&self.a_coords(a)?, &self.b_coords(b)?)))
    }

    /// ð_b a = pr_A[b,a]
    pub fn eth_on_a(&self, b: &GradedElement, a: &GradedElement) -> Result<GradedElement, PairError> {
        Ok(self.a_element(&self.eth_vec(&self.b_coords(b)?, &self.a_coords(a)?)))
    }

    /// β(b1,b2) = pr_A[b1,b2]
    pub fn beta(&self, b1: &GradedElement, b2: &GradedElement) -> Result<GradedElement, PairError> {
        Ok(self.a_element(&self.beta_vec(&self.b_coords(b1)?, &self.b_coords(b2)?)))
    }

    /// [b1,b2]_B = pr_B[b1,b2]
    pub fn bracket_b(&self, b1: &GradedElement, b2: &GradedElement) -> Result<GradedElement, PairError> {
        Ok(self.b_element(&self.bracket_b_vec(&self.b_coords(b1)?, &self.b_coords(b2)?)))
    }

    pub fn beta_vanishes(&self) -> bool {
        self.tables.beta.iter().flatten().flatten().all(Rational::is_zero)
    }

    pub fn to_json(&self) -> LiePairJson {
        let l = self.lie.to_json();
        LiePairJson { basis: l.basis, brackets: l.brackets, a: self.a_names() }
    }
}

fn bilinear(t: &[Vec<Vec<Rational>>], x: &[Rational], y: &[Rational], out_dim: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); out_dim];
    for (i, xi) in x.iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        for (j, yj) in y.iter().enumerate() {
            if yj.is_zero() {
                continue;
            }
            let c = xi * yj;
            for (o, v) in t[i][j].iter().enumerate() {
                if !v.is_zero() {
                    out[o] += &(&c * v);
                }
            }
        }
    }
    out
}

/// Assemble the L≤3 algebra of a pair; convenience wrapper around `PairL3::new`.
pub fn build_l3(pair: &LiePair) -> PairL3 {
    PairL3::new(pair.clone())
}

/// Structure maps of an L≤3 algebra as a plain L∞ structure.
pub fn l3_structure(pair: &LiePair) -> LInfinityStructure {
    build_l3(pair).algebra().clone()
}
