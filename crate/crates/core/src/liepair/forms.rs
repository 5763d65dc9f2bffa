use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::{LiePair, PairError};
use crate::graded::{normal_tuples, sparse_add, GradedBasis, GradedElement, MultiTable, Sparse, Symmetry};
use crate::linfty::{Defect, LInfinityStructure};
use crate::scalars::Rational;
use crate::signs::{shuffles2, shuffles3, Permutation, Sign};

/// A basis form e^∨_mask ⊗ b_j of Ω•_A(B); bit i of the mask is the i-th A basis vector.
pub type FormKey = (u32, usize);

pub(crate) type SForm = BTreeMap<u32, Rational>;
pub(crate) type BForm = BTreeMap<FormKey, Rational>;
pub(crate) type AVec = Vec<(usize, Rational)>;

/// Bases of Ω•_A (scalar forms) and Ω•_A(B), ordered by degree, then subset, then B index.
#[derive(Debug)]
pub struct OmegaBasis {
    forms: Arc<GradedBasis>,
    scalars: Arc<GradedBasis>,
    keys: Vec<FormKey>,
    key_index: HashMap<FormKey, usize>,
    masks: Vec<u32>,
    mask_index: HashMap<u32, usize>,
}

pub(crate) fn bits(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

pub(crate) fn masks_of_size(dim: usize, k: usize) -> Vec<u32> {
    fn rec(dim: usize, k: usize, start: usize, cur: u32, out: &mut Vec<u32>) {
        if k == 0 {
            out.push(cur);
            return;
        }
        for i in start..dim {
            if dim - i >= k {
                rec(dim, k - 1, i + 1, cur | 1 << i, out);
            }
        }
    }
    let mut out = Vec::new();
    rec(dim, k, 0, 0, &mut out);
    out
}

impl OmegaBasis {
    pub(crate) fn new(a_names: &[String], b_names: &[String]) -> Self {
        let dim_a = a_names.len();
        assert!(dim_a < 32, "A is limited to 31 basis vectors");
        let masks: Vec<u32> = (0..=dim_a).flat_map(|k| masks_of_size(dim_a, k)).collect();
        let mask_name = |m: u32| -> String {
            if m == 0 {
                "1".into()
            } else {
                bits(m).iter().map(|&i| a_names[i].as_str()).collect::<Vec<_>>().join("^")
            }
        };
        let mut keys = Vec::new();
        let mut form_syms = Vec::new();
        for &m in &masks {
            for (j, b) in b_names.iter().enumerate() {
                keys.push((m, j));
                let name = if m == 0 { b.clone() } else { format!("{}|{}", mask_name(m), b) };
                form_syms.push((name, m.count_ones() as i32));
            }
        }
        let forms = GradedBasis::new(form_syms).expect("form symbols are distinct");
        let scalars =
            GradedBasis::new(masks.iter().map(|&m| (mask_name(m), m.count_ones() as i32))).expect("distinct");
        let key_index = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let mask_index = masks.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        OmegaBasis { forms, scalars, keys, key_index, masks, mask_index }
    }

    /// Graded basis of Ω•_A(B).
    pub fn forms(&self) -> &Arc<GradedBasis> {
        &self.forms
    }

    /// Graded basis of Ω•_A.
    pub fn scalars(&self) -> &Arc<GradedBasis> {
        &self.scalars
    }

    pub fn key(&self, i: usize) -> FormKey {
        self.keys[i]
    }

    pub fn index(&self, key: FormKey) -> usize {
        self.key_index[&key]
    }

    pub fn mask(&self, i: usize) -> u32 {
        self.masks[i]
    }

    pub fn mask_position(&self, mask: u32) -> usize {
        self.mask_index[&mask]
    }

    pub(crate) fn bform(&self, x: &GradedElement) -> Result<BForm, PairError> {
        if **x.space() != *self.forms {
            return Err(crate::graded::GradedError::SpaceMismatch.into());
        }
        Ok(x.coords().iter().map(|(i, c)| (self.keys[*i], c.clone())).collect())
    }

    pub(crate) fn sform(&self, x: &GradedElement) -> Result<SForm, PairError> {
        if **x.space() != *self.scalars {
            return Err(crate::graded::GradedError::SpaceMismatch.into());
        }
        Ok(x.coords().iter().map(|(i, c)| (self.masks[*i], c.clone())).collect())
    }

    pub(crate) fn from_bform(&self, f: BForm) -> GradedElement {
        GradedElement::from_terms(&self.forms, f.into_iter().map(|(k, c)| (self.key_index[&k], c)))
    }

    pub(crate) fn from_sform(&self, f: SForm) -> GradedElement {
        GradedElement::from_terms(&self.scalars, f.into_iter().map(|(m, c)| (self.mask_index[&m], c)))
    }

    pub(crate) fn sparse_bform(&self, f: &BForm) -> Sparse {
        f.iter().map(|(k, c)| (self.key_index[k], c.clone())).collect()
    }
}

pub(crate) fn add_to<K: Ord + Copy>(acc: &mut BTreeMap<K, Rational>, k: K, c: &Rational) {
    if c.is_zero() {
        return;
    }
    let e = acc.entry(k).or_insert_with(Rational::zero);
    *e += c;
    if e.is_zero() {
        acc.remove(&k);
    }
}

pub(crate) fn axpy<K: Ord + Copy>(acc: &mut BTreeMap<K, Rational>, c: &Rational, x: &BTreeMap<K, Rational>) {
    if c.is_zero() {
        return;
    }
    for (k, v) in x {
        add_to(acc, *k, &(c * v));
    }
}

/// Sort a list of distinct A indices into a mask, with the sign of the sorting permutation.
pub(crate) fn sort_indices(seq: &[usize]) -> Option<(u32, Sign)> {
    let mut mask = 0u32;
    let mut odd = false;
    for &i in seq {
        if mask >> i & 1 == 1 {
            return None;
        }
        odd ^= (mask >> (i + 1)).count_ones() % 2 == 1;
        mask |= 1 << i;
    }
    Some((mask, Sign::from_parity(odd)))
}

/// Sign of e^∨_m1 ∧ e^∨_m2 relative to e^∨_{m1∪m2}.
pub(crate) fn wedge_sign(m1: u32, m2: u32) -> Option<Sign> {
    if m1 & m2 != 0 {
        return None;
    }
    let odd = bits(m2).iter().map(|&y| (m1 >> (y + 1)).count_ones()).sum::<u32>() % 2 == 1;
    Some(Sign::from_parity(odd))
}

/// e^∨_mask evaluated on A-vectors as the determinant of pairings.
#[cfg(test)]
pub(crate) fn eval_mask(mask: u32, args: &[&[(usize, Rational)]]) -> Rational {
    let idx = bits(mask);
    if idx.len() != args.len() {
        return Rational::zero();
    }
    fn rec(idx: &[usize], args: &[&[(usize, Rational)]], s: usize, used: u32, odd: bool, prod: Rational, acc: &mut Rational) {
        if s == args.len() {
            *acc += &if odd { -prod } else { prod };
            return;
        }
        for (i, c) in args[s] {
            let Ok(t) = idx.binary_search(i) else { continue };
            if used >> t & 1 == 1 {
                continue;
            }
            let inv = (used >> (t + 1)).count_ones() % 2 == 1;
            rec(idx, args, s + 1, used | 1 << t, odd ^ inv, &prod * c, acc);
        }
    }
    let mut acc = Rational::zero();
    rec(&idx, args, 0, 0, false, Rational::one(), &mut acc);
    acc
}

/// e^∨_mask on basis vectors a_{idx}: ±1 when idx enumerates the mask, else 0.
pub(crate) fn basis_value(mask: u32, idx: &[usize]) -> Option<Sign> {
    let (m, s) = sort_indices(idx)?;
    (m == mask).then_some(s)
}

/// e^∨_mask on basis vectors a_idx with slot s replaced by v.
pub(crate) fn eval_slot(mask: u32, idx: &[usize], s: usize, v: &AVec) -> Rational {
    let mut seq = idx.to_vec();
    let mut acc = Rational::zero();
    for (t, c) in v {
        seq[s] = *t;
        if let Some(sign) = basis_value(mask, &seq) {
            acc += &sign.apply(c);
        }
    }
    acc
}

/// e^∨_mask(v, a_rest…)
pub(crate) fn eval_front(mask: u32, v: &AVec, rest: &[usize]) -> Rational {
    let mut idx = Vec::with_capacity(rest.len() + 1);
    idx.push(0);
    idx.extend_from_slice(rest);
    eval_slot(mask, &idx, 0, v)
}

pub(crate) fn to_avec(v: &[Rational]) -> AVec {
    v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (i, c.clone())).collect()
}

fn scale_avec(v: &AVec, c: &Rational) -> AVec {
    v.iter().map(|(i, x)| (*i, x * c)).collect()
}

/// Sparse A/B tables for the closed formulas.
struct Kit<'a> {
    pair: &'a LiePair,
    eth: Vec<Vec<AVec>>,
    beta: Vec<Vec<AVec>>,
    br_a: Vec<Vec<AVec>>,
    sh2: HashMap<(usize, usize), Vec<Permutation>>,
    sh3: HashMap<(usize, usize, usize), Vec<Permutation>>,
}

impl<'a> Kit<'a> {
    fn new(pair: &'a LiePair) -> Self {
        let t = pair.tables();
        let conv = |m: &Vec<Vec<Vec<Rational>>>| -> Vec<Vec<AVec>> {
            m.iter().map(|row| row.iter().map(|v| to_avec(v)).collect()).collect()
        };
        Kit {
            pair,
            eth: conv(&t.eth),
            beta: conv(&t.beta),
            br_a: conv(&t.br_a),
            sh2: HashMap::new(),
            sh3: HashMap::new(),
        }
    }

    fn sh2(&mut self, p: usize, q: usize) -> Vec<Permutation> {
        self.sh2.entry((p, q)).or_insert_with(|| shuffles2(p, q)).clone()
    }

    fn sh3(&mut self, p: usize, q: usize, r: usize) -> Vec<Permutation> {
        self.sh3.entry((p, q, r)).or_insert_with(|| shuffles3(p, q, r)).clone()
    }

    fn eval_first(&self, mask: u32, v: &AVec, rest: &[usize]) -> Rational {
        eval_front(mask, v, rest)
    }

    fn eval_replaced(&self, mask: u32, idx: &[usize], s: usize, v: &AVec) -> Rational {
        eval_slot(mask, idx, s, v)
    }

    // closed formulas, evaluated on sorted basis tuples

    fn d_a(&self, mask: u32) -> SForm {
        let p = mask.count_ones() as usize;
        let mut out = SForm::new();
        for m in masks_of_size(self.pair.dim_a(), p + 1) {
            let a = bits(m);
            let v = self.d_a_value(mask, &a);
            add_to(&mut out, m, &v);
        }
        out
    }

    fn d_a_value(&self, mask: u32, a: &[usize]) -> Rational {
        let mut acc = Rational::zero();
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                let br = &self.br_a[a[i]][a[j]];
                if br.is_empty() {
                    continue;
                }
                let rest: Vec<usize> = (0..a.len()).filter(|&t| t != i && t != j).map(|t| a[t]).collect();
                let v = self.eval_first(mask, br, &rest);
                acc += &Sign::pow((i + j) as i64).apply(&v);
            }
        }
        acc
    }

    fn d_bott(&self, (mx, bx): FormKey) -> BForm {
        let p = mx.count_ones() as usize;
        let t = self.pair.tables();
        let mut out = BForm::new();
        for m in masks_of_size(self.pair.dim_a(), p + 1) {
            let a = bits(m);
            for i in 0..a.len() {
                let rest: Vec<usize> = (0..a.len()).filter(|&s| s != i).map(|s| a[s]).collect();
                if let Some(s) = basis_value(mx, &rest) {
                    let s = s * Sign::pow(i as i64);
                    for (o, c) in t.bott[a[i]][bx].iter().enumerate() {
                        add_to(&mut out, (m, o), &s.apply(c));
                    }
                }
            }
            add_to(&mut out, (m, bx), &self.d_a_value(mx, &a));
        }
        out
    }

    fn bracket2(&mut self, (mx, bx): FormKey, (my, by): FormKey) -> BForm {
        let (p, q) = (mx.count_ones() as usize, my.count_ones() as usize);
        let mut out = BForm::new();
        if p + q > self.pair.dim_a() {
            return out;
        }
        let shuffles = self.sh2(p, q);
        let br_b = &self.pair.tables().br_b[bx][by];
        for m in masks_of_size(self.pair.dim_a(), p + q) {
            let a = bits(m);
            for sigma in &shuffles {
                let im = sigma.images();
                let sg = sigma.sign();
                let left: Vec<usize> = im[..p].iter().map(|&i| a[i]).collect();
                let right: Vec<usize> = im[p..].iter().map(|&i| a[i]).collect();
                let xv = basis_value(mx, &left);
                let yv = basis_value(my, &right);
                if let Some(ys) = yv {
                    for i in 0..p {
                        let v = self.eth[by][left[i]].clone();
                        let val = self.eval_replaced(mx, &left, i, &v);
                        add_to(&mut out, (m, bx), &(sg * ys).apply(&val));
                    }
                }
                if let Some(xs) = xv {
                    for j in 0..q {
                        let v = self.eth[bx][right[j]].clone();
                        let val = self.eval_replaced(my, &right, j, &v);
                        add_to(&mut out, (m, by), &(sg * xs).apply(&-val));
                    }
                }
                if let (Some(xs), Some(ys)) = (xv, yv) {
                    let s = sg * xs * ys;
                    for (o, c) in br_b.iter().enumerate() {
                        add_to(&mut out, (m, o), &s.apply(c));
                    }
                }
            }
        }
        out
    }

    fn bracket3(&mut self, (mx, bx): FormKey, (my, by): FormKey, (mz, bz): FormKey) -> BForm {
        let p = mx.count_ones() as usize;
        let q = my.count_ones() as usize;
        let r = mz.count_ones() as usize;
        let mut out = BForm::new();
        if p + q + r == 0 || p + q + r - 1 > self.pair.dim_a() {
            return out;
        }
        let n = p + q + r - 1;
        let t1 = if r >= 1 { self.sh3(p, q, r - 1) } else { vec![] };
        let t2 = if q >= 1 { self.sh3(p, q - 1, r) } else { vec![] };
        let t3 = if p >= 1 { self.sh3(p - 1, q, r) } else { vec![] };
        let pick = |a: &[usize], im: &[usize]| -> Vec<usize> { im.iter().map(|&i| a[i]).collect() };
        for m in masks_of_size(self.pair.dim_a(), n) {
            let a = bits(m);
            let s1 = Sign::pow((p + q + 1) as i64);
            for sigma in &t1 {
                let im = sigma.images();
                let (Some(xs), Some(ys)) = (basis_value(mx, &pick(&a, &im[..p])), basis_value(my, &pick(&a, &im[p..p + q])))
                else {
                    continue;
                };
                let beta = scale_avec(&self.beta[bx][by], &(sigma.sign() * xs * ys * s1).to_rational());
                let v = self.eval_first(mz, &beta, &pick(&a, &im[p + q..]));
                add_to(&mut out, (m, bz), &v);
            }
            let s2 = Sign::pow(p as i64);
            for tau in &t2 {
                let im = tau.images();
                let (Some(xs), Some(zs)) =
                    (basis_value(mx, &pick(&a, &im[..p])), basis_value(mz, &pick(&a, &im[p + q - 1..])))
                else {
                    continue;
                };
                let beta = scale_avec(&self.beta[bx][bz], &(tau.sign() * xs * zs * s2).to_rational());
                let v = self.eval_first(my, &beta, &pick(&a, &im[p..p + q - 1]));
                add_to(&mut out, (m, by), &v);
            }
            for alpha in &t3 {
                let im = alpha.images();
                let (Some(ys), Some(zs)) =
                    (basis_value(my, &pick(&a, &im[p - 1..p - 1 + q])), basis_value(mz, &pick(&a, &im[p - 1 + q..])))
                else {
                    continue;
                };
                let beta = scale_avec(&self.beta[by][bz], &(alpha.sign() * ys * zs).to_rational());
                let v = self.eval_first(mx, &beta, &pick(&a, &im[..p - 1]));
                add_to(&mut out, (m, bx), &-v);
            }
        }
        out
    }
}

// Scalar-form algebra; the generating route uses only these.

pub(crate) fn s_wedge(x: &SForm, y: &SForm) -> SForm {
    let mut out = SForm::new();
    for (m1, c1) in x {
        for (m2, c2) in y {
            if let Some(s) = wedge_sign(*m1, *m2) {
                add_to(&mut out, m1 | m2, &s.apply(&(c1 * c2)));
            }
        }
    }
    out
}

pub(crate) fn s_monomial(mask: u32) -> SForm {
    SForm::from([(mask, Rational::one())])
}

/// ð_b as a derivation, with ð_b e^∨_i = −Σ_j (ð_b a_j)_i e^∨_j.
fn s_eth(pair: &LiePair, b: &[Rational], w: &SForm) -> SForm {
    let da = pair.dim_a();
    let images: Vec<Vec<Rational>> = (0..da)
        .map(|j| {
            let mut e = vec![Rational::zero(); da];
            e[j] = Rational::one();
            pair.eth_vec(b, &e)
        })
        .collect();
    let mut out = SForm::new();
    for (m, c) in w {
        let idx = bits(*m);
        for r in 0..idx.len() {
            for (j, img) in images.iter().enumerate() {
                let coef = &img[idx[r]];
                if coef.is_zero() {
                    continue;
                }
                let mut seq = idx.clone();
                seq[r] = j;
                if let Some((nm, s)) = sort_indices(&seq) {
                    add_to(&mut out, nm, &s.apply(&-(c * coef)));
                }
            }
        }
    }
    out
}

/// i_a, contracting the leftmost slot.
pub(crate) fn s_interior(a: &[Rational], w: &SForm) -> SForm {
    let mut out = SForm::new();
    for (m, c) in w {
        for (r, &i) in bits(*m).iter().enumerate() {
            if a[i].is_zero() {
                continue;
            }
            add_to(&mut out, m & !(1 << i), &Sign::pow(r as i64).apply(&(c * &a[i])));
        }
    }
    out
}

/// ω·(λ⊗b) = (ω∧λ)⊗b
pub(crate) fn module_mul(w: &SForm, x: &BForm) -> BForm {
    let mut out = BForm::new();
    for ((m, b), c) in x {
        for (k, v) in s_wedge(w, &s_monomial(*m)) {
            add_to(&mut out, (k, *b), &(c * &v));
        }
    }
    out
}

fn with_b(w: SForm, b: usize) -> BForm {
    w.into_iter().map(|(m, c)| ((m, b), c)).collect()
}

fn unit_b(pair: &LiePair, b: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); pair.dim_b()];
    v[b] = Rational::one();
    v
}

/// ρ₁(λ⊗b)ω = λ·(ð_b ω)
fn rho1_key(pair: &LiePair, (m, b): FormKey, w: &SForm) -> SForm {
    s_wedge(&s_monomial(m), &s_eth(pair, &unit_b(pair, b), w))
}

/// ρ₂(λ⊗b, λ'⊗b')ω = (−1)^{|λ|+|λ'|+1}(λ∧λ')·(i_{β(b,b')}ω)
fn rho2_key(pair: &LiePair, (m1, b1): FormKey, (m2, b2): FormKey, w: &SForm) -> SForm {
    let beta = pair.beta_vec(&unit_b(pair, b1), &unit_b(pair, b2));
    let lam = s_wedge(&s_monomial(m1), &s_monomial(m2));
    let s = Sign::pow((m1.count_ones() + m2.count_ones() + 1) as i64);
    let mut out = s_wedge(&lam, &s_interior(&beta, w));
    for v in out.values_mut() {
        *v = s.apply(v);
    }
    out
}

fn bracket_b_key(pair: &LiePair, b: usize, c: usize) -> BForm {
    let v = &pair.tables().br_b[b][c];
    v.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(o, x)| ((0, o), x.clone())).collect()
}

fn form_degree(k: FormKey) -> usize {
    k.0.count_ones() as usize
}

/// [c, u⊗b]₂ for c ∈ B, via the ω-Leibniz rule in the second slot.
fn gen2_b_first(pair: &LiePair, c: usize, (u, b): FormKey) -> BForm {
    let mut out = with_b(rho1_key(pair, (0, c), &s_monomial(u)), b);
    axpy(&mut out, &Rational::one(), &module_mul(&s_monomial(u), &bracket_b_key(pair, c, b)));
    out
}

/// [X, v⊗c]₂ by the generating relations.
fn gen2_key(pair: &LiePair, x: FormKey, (v, c): FormKey) -> BForm {
    let p = form_degree(x) as i64;
    let q = v.count_ones() as i64;
    let mut out = with_b(rho1_key(pair, x, &s_monomial(v)), c);
    // [X, c] = −(−1)^{|X|·0}[c, X]
    let xc: BForm = gen2_b_first(pair, c, x).into_iter().map(|(k, val)| (k, -val)).collect();
    axpy(&mut out, &Sign::pow(p * q).to_rational(), &module_mul(&s_monomial(v), &xc));
    out
}

/// [X, Y, w⊗e]₃ by the generating relations.
fn gen3_key(pair: &LiePair, x: FormKey, y: FormKey, (w, e): FormKey) -> BForm {
    let p = form_degree(x) as i64;
    let q = form_degree(y) as i64;
    let r = w.count_ones() as i64;
    let mut out = with_b(rho2_key(pair, x, y, &s_monomial(w)), e);
    // [X, Y, e] = [e, X, Y]
    let exy = gen3_b_first(pair, e, x, y);
    axpy(&mut out, &Sign::pow(r * (p + q + 1)).to_rational(), &module_mul(&s_monomial(w), &exy));
    out
}

/// [e, X, v⊗c]₃
fn gen3_b_first(pair: &LiePair, e: usize, x: FormKey, (v, c): FormKey) -> BForm {
    let p = form_degree(x) as i64;
    let q = v.count_ones() as i64;
    let mut out = with_b(rho2_key(pair, (0, e), x, &s_monomial(v)), c);
    // [e, X, c] = −[e, c, X]
    let ecx: BForm = gen3_bb_first(pair, e, c, x).into_iter().map(|(k, val)| (k, -val)).collect();
    axpy(&mut out, &Sign::pow(q * (p + 1)).to_rational(), &module_mul(&s_monomial(v), &ecx));
    out
}

/// [e, c, u⊗b]₃; the [e, c, b]₃ term vanishes.
fn gen3_bb_first(pair: &LiePair, e: usize, c: usize, (u, b): FormKey) -> BForm {
    with_b(rho2_key(pair, (0, e), (0, c), &s_monomial(u)), b)
}

impl LiePair {
    fn scalar_element(&self, x: &GradedElement) -> Result<SForm, PairError> {
        self.omega().sform(x)
    }

    /// Chevalley–Eilenberg differential of A on scalar forms.
    pub fn d_a(&self, w: &GradedElement) -> Result<GradedElement, PairError> {
        let kit = Kit::new(self);
        let mut out = SForm::new();
        for (m, c) in self.scalar_element(w)? {
            axpy(&mut out, &c, &kit.d_a(m));
        }
        Ok(self.omega().from_sform(out))
    }

    /// d^Bott_A on B-valued forms.
    pub fn d_bott(&self, x: &GradedElement) -> Result<GradedElement, PairError> {
        let kit = Kit::new(self);
        let mut out = BForm::new();
        for (k, c) in self.omega().bform(x)? {
            axpy(&mut out, &c, &kit.d_bott(k));
        }
        Ok(self.omega().from_bform(out))
    }

    /// ð_b on scalar forms.
    pub fn eth_on_forms(&self, b: &GradedElement, w: &GradedElement) -> Result<GradedElement, PairError> {
        let b = self.b_coords(b)?;
        Ok(self.omega().from_sform(s_eth(self, &b, &self.scalar_element(w)?)))
    }

    /// i_a on scalar forms.
    pub fn interior(&self, a: &GradedElement, w: &GradedElement) -> Result<GradedElement, PairError> {
        let a = self.a_coords(a)?;
        Ok(self.omega().from_sform(s_interior(&a, &self.scalar_element(w)?)))
    }

    pub fn wedge(&self, x: &GradedElement, y: &GradedElement) -> Result<GradedElement, PairError> {
        Ok(self.omega().from_sform(s_wedge(&self.scalar_element(x)?, &self.scalar_element(y)?)))
    }

    /// ω·X for a scalar form ω and a B-valued form X.
    pub fn form_mul(&self, w: &GradedElement, x: &GradedElement) -> Result<GradedElement, PairError> {
        Ok(self.omega().from_bform(module_mul(&self.scalar_element(w)?, &self.omega().bform(x)?)))
    }

    pub fn anchor1(&self, x: &GradedElement, w: &GradedElement) -> Result<GradedElement, PairError> {
        let w = self.scalar_element(w)?;
        let mut out = SForm::new();
        for (k, c) in self.omega().bform(x)? {
            axpy(&mut out, &c, &rho1_key(self, k, &w));
        }
        Ok(self.omega().from_sform(out))
    }

    pub fn anchor2(&self, x: &GradedElement, y: &GradedElement, w: &GradedElement) -> Result<GradedElement, PairError> {
        let w = self.scalar_element(w)?;
        let ys = self.omega().bform(y)?;
        let mut out = SForm::new();
        for (kx, cx) in self.omega().bform(x)? {
            for (ky, cy) in &ys {
                axpy(&mut out, &(&cx * cy), &rho2_key(self, kx, *ky, &w));
            }
        }
        Ok(self.omega().from_sform(out))
    }

    /// 2-bracket by the closed shuffle formula.
    pub fn bracket2(&self, x: &GradedElement, y: &GradedElement) -> Result<GradedElement, PairError> {
        let mut kit = Kit::new(self);
        let ys = self.omega().bform(y)?;
        let mut out = BForm::new();
        for (kx, cx) in self.omega().bform(x)? {
            for (ky, cy) in &ys {
                axpy(&mut out, &(&cx * cy), &kit.bracket2(kx, *ky));
            }
        }
        Ok(self.omega().from_bform(out))
    }

    /// 3-bracket by the closed shuffle formula.
    pub fn bracket3(&self, x: &GradedElement, y: &GradedElement, z: &GradedElement) -> Result<GradedElement, PairError> {
        let mut kit = Kit::new(self);
        let ys = self.omega().bform(y)?;
        let zs = self.omega().bform(z)?;
        let mut out = BForm::new();
        for (kx, cx) in self.omega().bform(x)? {
            for (ky, cy) in &ys {
                for (kz, cz) in &zs {
                    axpy(&mut out, &(&(&cx * cy) * cz), &kit.bracket3(kx, *ky, *kz));
                }
            }
        }
        Ok(self.omega().from_bform(out))
    }

    /// 2-bracket through the generating relations.
    pub fn bracket2_generating(&self, x: &GradedElement, y: &GradedElement) -> Result<GradedElement, PairError> {
        let ys = self.omega().bform(y)?;
        let mut out = BForm::new();
        for (kx, cx) in self.omega().bform(x)? {
            for (ky, cy) in &ys {
                axpy(&mut out, &(&cx * cy), &gen2_key(self, kx, *ky));
            }
        }
        Ok(self.omega().from_bform(out))
    }

    /// 3-bracket through the generating relations.
    pub fn bracket3_generating(
        &self,
        x: &GradedElement,
        y: &GradedElement,
        z: &GradedElement,
    ) -> Result<GradedElement, PairError> {
        let ys = self.omega().bform(y)?;
        let zs = self.omega().bform(z)?;
        let mut out = BForm::new();
        for (kx, cx) in self.omega().bform(x)? {
            for (ky, cy) in &ys {
                for (kz, cz) in &zs {
                    axpy(&mut out, &(&(&cx * cy) * cz), &gen3_key(self, kx, *ky, *kz));
                }
            }
        }
        Ok(self.omega().from_bform(out))
    }

    /// Closed and generating brackets on basis pairs (all orders) and normalized basis triples.
    pub fn route_differences(&self) -> Vec<Defect> {
        let om = self.omega().clone();
        let n = om.forms().len();
        let mut kit = Kit::new(self);
        let mut out = Vec::new();
        let mut report = |identity: &str, idx: &[usize], closed: BForm, generating: BForm| {
            let mut diff = om.sparse_bform(&closed);
            for (k, c) in &generating {
                sparse_add(&mut diff, om.index(*k), &-c.clone());
            }
            if !diff.is_empty() {
                out.push(Defect {
                    identity: identity.into(),
                    inputs: idx.iter().map(|&i| om.forms().name(i).to_string()).collect(),
                    defect: GradedElement::from_terms(om.forms(), diff),
                });
            }
        };
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (om.key(i), om.key(j));
                report("bracket2/closed-vs-generating", &[i, j], kit.bracket2(x, y), gen2_key(self, x, y));
            }
        }
        let dim_a = self.dim_a();
        for t in normal_tuples(om.forms().degrees(), 3, Symmetry::Skew) {
            let (x, y, z) = (om.key(t[0]), om.key(t[1]), om.key(t[2]));
            if form_degree(x) + form_degree(y) + form_degree(z) > dim_a + 1 {
                continue;
            }
            report("bracket3/closed-vs-generating", &t, kit.bracket3(x, y, z), gen3_key(self, x, y, z));
        }
        out
    }
}

/// The L≤3 algebra Ω•_A(B) of a Lie pair, with its anchors.
#[derive(Debug, Clone)]
pub struct PairL3 {
    pair: LiePair,
    algebra: LInfinityStructure,
}

impl PairL3 {
    pub fn new(pair: LiePair) -> Self {
        let om = pair.omega().clone();
        let forms = om.forms().clone();
        let degs = forms.degrees().to_vec();
        let dim_a = pair.dim_a();
        let mut kit = Kit::new(&pair);
        let mut d = MultiTable::new(1, Symmetry::Skew, 1, &forms, &forms);
        for i in 0..forms.len() {
            d.set_normalized(vec![i], om.sparse_bform(&kit.d_bott(om.key(i))));
        }
        let mut b2 = MultiTable::new(2, Symmetry::Skew, 0, &forms, &forms);
        for t in normal_tuples(&degs, 2, Symmetry::Skew) {
            if (degs[t[0]] + degs[t[1]]) as usize > dim_a {
                continue;
            }
            b2.set_normalized(t.clone(), om.sparse_bform(&kit.bracket2(om.key(t[0]), om.key(t[1]))));
        }
        let mut b3 = MultiTable::new(3, Symmetry::Skew, -1, &forms, &forms);
        if !pair.beta_vanishes() {
            for t in normal_tuples(&degs, 3, Symmetry::Skew) {
                let deg = (degs[t[0]] + degs[t[1]] + degs[t[2]]) as usize;
                if deg == 0 || deg > dim_a + 1 {
                    continue;
                }
                let v = kit.bracket3(om.key(t[0]), om.key(t[1]), om.key(t[2]));
                b3.set_normalized(t, om.sparse_bform(&v));
            }
        }
        let mut algebra = LInfinityStructure::new(&forms, 3);
        algebra.set_bracket(1, d).expect("unary bracket has degree 1");
        algebra.set_bracket(2, b2).expect("binary bracket has degree 0");
        algebra.set_bracket(3, b3).expect("ternary bracket has degree -1");
        PairL3 { pair, algebra }
    }

    pub fn pair(&self) -> &LiePair {
        &self.pair
    }

    pub fn algebra(&self) -> &LInfinityStructure {
        &self.algebra
    }

    pub fn space(&self) -> &Arc<GradedBasis> {
        self.algebra.space()
    }

    /// ρ₀ = d_A on scalar forms.
    pub fn anchor0(&self, w: &GradedElement) -> Result<GradedElement, PairError> {
        self.pair.d_a(w)
    }

    pub fn anchor1(&self, x: &GradedElement, w: &GradedElement) -> Result<GradedElement, PairError> {
        self.pair.anchor1(x, w)
    }

    pub fn anchor2(&self, x: &GradedElement, y: &GradedElement, w: &GradedElement) -> Result<GradedElement, PairError> {
        self.pair.anchor2(x, y, w)
    }

    pub fn element(&self, terms: &[(&str, Rational)]) -> Result<GradedElement, PairError> {
        Ok(GradedElement::named(self.space(), terms)?)
    }
}
