use std::collections::HashMap;

use super::{derivation_bracket, ActionMaps, DerError, Derivation};
use crate::graded::{normal_tuples, GradedElement, MultiTable, Sparse, Symmetry};
use crate::liepair::forms::{
    add_to, axpy, basis_value, bits, eval_front, eval_slot, masks_of_size, module_mul, to_avec, AVec, BForm, SForm,
};
use crate::liepair::{FormKey, LiePair};
use crate::linfty::Defect;
use crate::scalars::Rational;
use crate::signs::{shuffles2, Permutation, Sign};

/// pr_A/pr_B of δ on the A and B basis vectors.
struct DerData<'a> {
    pair: &'a LiePair,
    paa: Vec<AVec>,
    pba: Vec<Vec<Rational>>,
    pab: Vec<AVec>,
    pbb: Vec<Vec<Rational>>,
    sh: HashMap<(usize, usize), Vec<Permutation>>,
}

impl<'a> DerData<'a> {
    fn new(pair: &'a LiePair, d: &Derivation) -> Self {
        let split = |idx: &[usize]| -> (Vec<AVec>, Vec<Vec<Rational>>) {
            idx.iter()
                .map(|&j| {
                    let v = &d.images()[j];
                    (to_avec(&pair.pr_a(v)), pair.pr_b(v))
                })
                .unzip()
        };
        let (paa, pba) = split(pair.a_indices());
        let (pab, pbb) = split(pair.b_indices());
        DerData { pair, paa, pba, pab, pbb, sh: HashMap::new() }
    }

    fn sh2(&mut self, p: usize, q: usize) -> Vec<Permutation> {
        self.sh.entry((p, q)).or_insert_with(|| shuffles2(p, q)).clone()
    }

    fn kappa(&self) -> BForm {
        let mut out = BForm::new();
        for (j, v) in self.pba.iter().enumerate() {
            for (o, c) in v.iter().enumerate() {
                add_to(&mut out, (1 << j, o), &-c.clone());
            }
        }
        out
    }

    /// ϱ₁(δ) on e^∨_mask.
    fn rho1(&self, mask: u32) -> SForm {
        let mut out = SForm::new();
        for m in masks_of_size(self.pair.dim_a(), mask.count_ones() as usize) {
            let a = bits(m);
            let mut v = Rational::zero();
            for j in 0..a.len() {
                v += &eval_slot(mask, &a, j, &self.paa[a[j]]);
            }
            add_to(&mut out, m, &-v);
        }
        out
    }

    fn act1(&self, (m, b): FormKey) -> BForm {
        let mut out: BForm = self.rho1(m).into_iter().map(|(k, c)| ((k, b), c)).collect();
        for (o, c) in self.pbb[b].iter().enumerate() {
            add_to(&mut out, (m, o), c);
        }
        out
    }

    /// (−1)^{i+1} Σ_{Sh(i,k−1)} sgn(σ) ω(pr_A δ(X(a_σ(1..i))), a_σ(i+1..)) as a function of the
    /// output tuple, where ω = e^∨_target and X = e^∨_mx ⊗ b_bx.
    fn front_sum(&mut self, (mx, bx): FormKey, target: u32, m: u32) -> Rational {
        let i = mx.count_ones() as usize;
        let k = target.count_ones() as usize;
        let a = bits(m);
        if k == 0 || i + k - 1 != a.len() {
            return Rational::zero();
        }
        let mut acc = Rational::zero();
        for sigma in self.sh2(i, k - 1) {
            let im = sigma.images();
            let left: Vec<usize> = im[..i].iter().map(|&t| a[t]).collect();
            let Some(xs) = basis_value(mx, &left) else { continue };
            let right: Vec<usize> = im[i..].iter().map(|&t| a[t]).collect();
            let v = eval_front(target, &self.pab[bx], &right);
            acc += &(sigma.sign() * xs).apply(&v);
        }
        Sign::pow(i as i64 + 1).apply(&acc)
    }

    fn rho2(&mut self, x: FormKey, w: u32) -> SForm {
        let i = x.0.count_ones() as usize;
        let k = w.count_ones() as usize;
        let mut out = SForm::new();
        if k == 0 || i + k - 1 > self.pair.dim_a() {
            return out;
        }
        for m in masks_of_size(self.pair.dim_a(), i + k - 1) {
            let v = self.front_sum(x, w, m);
            add_to(&mut out, m, &v);
        }
        out
    }

    fn act2(&mut self, x: FormKey, y: FormKey) -> BForm {
        let (mx, bx) = x;
        let (my, by) = y;
        let i = mx.count_ones() as usize;
        let j = my.count_ones() as usize;
        let mut out = BForm::new();
        if i + j == 0 || i + j - 1 > self.pair.dim_a() {
            return out;
        }
        for m in masks_of_size(self.pair.dim_a(), i + j - 1) {
            let v = self.front_sum(x, my, m);
            add_to(&mut out, (m, by), &v);
            if i == 0 {
                continue;
            }
            let a = bits(m);
            let mut acc = Rational::zero();
            for sigma in self.sh2(i - 1, j) {
                let im = sigma.images();
                let right: Vec<usize> = im[i - 1..].iter().map(|&t| a[t]).collect();
                let Some(ys) = basis_value(my, &right) else { continue };
                let left: Vec<usize> = im[..i - 1].iter().map(|&t| a[t]).collect();
                let v = eval_front(mx, &self.pab[by], &left);
                acc += &(sigma.sign() * ys).apply(&v);
            }
            add_to(&mut out, (m, bx), &acc);
        }
        out
    }
}

fn check_dim(pair: &LiePair, d: &Derivation) -> Result<(), DerError> {
    if d.dim() != pair.lie().dim() {
        return Err(DerError::Shape(d.name().into(), pair.lie().dim()));
    }
    Ok(())
}

/// κ(δ)(a) = −pr_B δ(a)
pub fn kappa(pair: &LiePair, d: &Derivation) -> Result<GradedElement, DerError> {
    check_dim(pair, d)?;
    Ok(pair.omega().from_bform(DerData::new(pair, d).kappa()))
}

/// Basis of {δ ∈ span(ders) : κ(δ) = 0}, named "ker1", "ker2", ….
pub fn kappa_kernel(pair: &LiePair, ders: &[Derivation]) -> Result<Vec<Derivation>, DerError> {
    let n = pair.omega().forms().len();
    let mut rows = vec![vec![Rational::zero(); ders.len()]; n];
    for (j, d) in ders.iter().enumerate() {
        for (i, c) in kappa(pair, d)?.coords() {
            rows[*i][j] = c.clone();
        }
    }
    Ok(crate::linalg::kernel(&rows, ders.len())
        .iter()
        .enumerate()
        .map(|(k, c)| Derivation::combination(format!("ker{}", k + 1), ders, c))
        .collect())
}

/// δ▷X
pub fn act1(pair: &LiePair, d: &Derivation, x: &GradedElement) -> Result<GradedElement, DerError> {
    check_dim(pair, d)?;
    let data = DerData::new(pair, d);
    let mut out = BForm::new();
    for (k, c) in pair.omega().bform(x)? {
        axpy(&mut out, &c, &data.act1(k));
    }
    Ok(pair.omega().from_bform(out))
}

/// δ▷(X, Y)
pub fn act2(pair: &LiePair, d: &Derivation, x: &GradedElement, y: &GradedElement) -> Result<GradedElement, DerError> {
    check_dim(pair, d)?;
    let mut data = DerData::new(pair, d);
    let ys = pair.omega().bform(y)?;
    let mut out = BForm::new();
    for (kx, cx) in pair.omega().bform(x)? {
        for (ky, cy) in &ys {
            axpy(&mut out, &(&cx * cy), &data.act2(kx, *ky));
        }
    }
    Ok(pair.omega().from_bform(out))
}

/// ϱ₁(δ)(ω) on scalar forms.
pub fn varrho1(pair: &LiePair, d: &Derivation, w: &GradedElement) -> Result<GradedElement, DerError> {
    check_dim(pair, d)?;
    let data = DerData::new(pair, d);
    let mut out = SForm::new();
    for (m, c) in pair.omega().sform(w)? {
        axpy(&mut out, &c, &data.rho1(m));
    }
    Ok(pair.omega().from_sform(out))
}

/// ϱ₂(δ, X)(ω) on scalar forms.
pub fn varrho2(pair: &LiePair, d: &Derivation, x: &GradedElement, w: &GradedElement) -> Result<GradedElement, DerError> {
    check_dim(pair, d)?;
    let mut data = DerData::new(pair, d);
    let ws = pair.omega().sform(w)?;
    let mut out = SForm::new();
    for (kx, cx) in pair.omega().bform(x)? {
        for (m, cw) in &ws {
            axpy(&mut out, &(&cx * cw), &data.rho2(kx, *m));
        }
    }
    Ok(pair.omega().from_sform(out))
}

fn tables(pair: &LiePair, data: &mut DerData) -> (Sparse, MultiTable, MultiTable) {
    let om = pair.omega();
    let forms = om.forms();
    let degs = forms.degrees().to_vec();
    let mut mu1 = MultiTable::new(1, Symmetry::Skew, 0, forms, forms);
    for i in 0..forms.len() {
        mu1.set_normalized(vec![i], om.sparse_bform(&data.act1(om.key(i))));
    }
    let mut mu2 = MultiTable::new(2, Symmetry::Skew, -1, forms, forms);
    for t in normal_tuples(&degs, 2, Symmetry::Skew) {
        let v = data.act2(om.key(t[0]), om.key(t[1]));
        mu2.set_normalized(t, om.sparse_bform(&v));
    }
    (om.sparse_bform(&data.kappa()), mu1, mu2)
}

/// The action of span(ders) ⊂ Der(L) on Ω•_A(B); ders must be independent and closed under commutator.
pub fn pair_action(pair: &LiePair, ders: &[Derivation]) -> Result<ActionMaps, DerError> {
    for d in ders {
        check_dim(pair, d)?;
    }
    let mut act = ActionMaps::zero(pair.omega().forms(), derivation_bracket(ders)?);
    for (h, d) in ders.iter().enumerate() {
        let (k, mu1, mu2) = tables(pair, &mut DerData::new(pair, d));
        act.set_kappa(h, &GradedElement::from_terms(pair.omega().forms(), k))?;
        act.set_mu(h, 1, mu1)?;
        act.set_mu(h, 2, mu2)?;
    }
    Ok(act)
}

fn defect(pair: &LiePair, tag: &str, inputs: Vec<String>, diff: BForm) -> Option<Defect> {
    let v: BForm = diff.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    (!v.is_empty()).then(|| Defect { identity: tag.into(), inputs, defect: pair.omega().from_bform(v) })
}

/// Linearity of κ and the two Leibniz rules linking ▷ with ϱ₁, ϱ₂, on all basis instances.
pub fn check_properties(pair: &LiePair, ders: &[Derivation]) -> Result<Vec<Defect>, DerError> {
    for d in ders {
        check_dim(pair, d)?;
    }
    let om = pair.omega().clone();
    let forms = om.forms().clone();
    let scalars = om.scalars().clone();
    let dim_a = pair.dim_a();
    let mut out = Vec::new();
    let c = Rational::new(-3, 2).expect("nonzero denominator");
    for (s, d) in ders.iter().enumerate() {
        for e in &ders[s..] {
            let combo = Derivation::combination("", &[d.clone(), e.clone()], &[Rational::one(), c.clone()]);
            let mut diff = DerData::new(pair, &combo).kappa();
            axpy(&mut diff, &Rational::int(-1), &DerData::new(pair, d).kappa());
            axpy(&mut diff, &-c.clone(), &DerData::new(pair, e).kappa());
            out.extend(defect(pair, "property/kappa-linear", vec![d.name().into(), e.name().into()], diff));
        }
    }
    for d in ders {
        let mut data = DerData::new(pair, d);
        let (_, mu1, mu2) = tables(pair, &mut data);
        let lookup1 = |k: FormKey| -> BForm {
            let mut acc = Sparse::new();
            mu1.accumulate_basis(&[om.index(k)], &Rational::one(), &mut acc);
            acc.into_iter().map(|(i, c)| (om.key(i), c)).collect()
        };
        let lookup2 = |x: FormKey, y: FormKey| -> BForm {
            let mut acc = Sparse::new();
            mu2.accumulate_basis(&[om.index(x), om.index(y)], &Rational::one(), &mut acc);
            acc.into_iter().map(|(i, c)| (om.key(i), c)).collect()
        };
        for wi in 0..scalars.len() {
            let w = om.mask(wi);
            let ws = SForm::from([(w, Rational::one())]);
            let rho1 = data.rho1(w);
            for xi in 0..forms.len() {
                let x = om.key(xi);
                if (w.count_ones() + x.0.count_ones()) as usize > dim_a {
                    continue;
                }
                let wx = module_mul(&ws, &BForm::from([(x, Rational::one())]));
                let mut diff = BForm::new();
                for (k, c) in &wx {
                    axpy(&mut diff, c, &lookup1(*k));
                }
                axpy(&mut diff, &Rational::int(-1), &module_mul(&rho1, &BForm::from([(x, Rational::one())])));
                axpy(&mut diff, &Rational::int(-1), &module_mul(&ws, &lookup1(x)));
                let inputs = vec![d.name().into(), scalars.name(wi).into(), forms.name(xi).into()];
                out.extend(defect(pair, "property/leibniz-rho1", inputs, diff));
            }
        }
        for xi in 0..forms.len() {
            let x = om.key(xi);
            let dx = x.0.count_ones() as usize;
            for wi in 0..scalars.len() {
                let w = om.mask(wi);
                let dw = w.count_ones() as usize;
                if dx + dw > dim_a + 1 {
                    continue;
                }
                let ws = SForm::from([(w, Rational::one())]);
                let rho2 = data.rho2(x, w);
                let sign = Sign::pow((dw * (1 + dx)) as i64).to_rational();
                for yi in 0..forms.len() {
                    let y = om.key(yi);
                    let dy = y.0.count_ones() as usize;
                    if dx + dw + dy > dim_a + 1 {
                        continue;
                    }
                    let ybf = BForm::from([(y, Rational::one())]);
                    let mut diff = BForm::new();
                    for (k, c) in &module_mul(&ws, &ybf) {
                        axpy(&mut diff, c, &lookup2(x, *k));
                    }
                    axpy(&mut diff, &Rational::int(-1), &module_mul(&rho2, &ybf));
                    axpy(&mut diff, &-sign.clone(), &module_mul(&ws, &lookup2(x, y)));
                    let inputs = vec![d.name().into(), forms.name(xi).into(), scalars.name(wi).into(), forms.name(yi).into()];
                    out.extend(defect(pair, "property/leibniz-rho2", inputs, diff));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{ad_basis, check_action_axioms, derivations};
    use super::*;
    use crate::liepair::{example_names, example_pair, PairL3};
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::int(n)
    }

    fn form(pair: &LiePair, terms: &[(&str, i64)]) -> GradedElement {
        let t: Vec<(&str, Rational)> = terms.iter().map(|(n, c)| (*n, q(*c))).collect();
        GradedElement::named(pair.omega().forms(), &t).unwrap()
    }

    fn scalar(pair: &LiePair, terms: &[(&str, i64)]) -> GradedElement {
        let t: Vec<(&str, Rational)> = terms.iter().map(|(n, c)| (*n, q(*c))).collect();
        GradedElement::named(pair.omega().scalars(), &t).unwrap()
    }

    fn ad_named(pair: &LiePair, x: &str) -> Derivation {
        let i = pair.lie().basis().index_of(x).unwrap();
        ad_basis(pair.lie())[i].clone()
    }

    #[test]
    fn sl2_oracles() {
        let p = example_pair("sl2").unwrap();
        let (adh, ade) = (ad_named(&p, "h"), ad_named(&p, "e"));
        assert_eq!(kappa(&p, &ade).unwrap(), form(&p, &[("h|e", 2)]));
        assert!(kappa(&p, &adh).unwrap().is_zero());
        assert_eq!(act1(&p, &adh, &form(&p, &[("e", 1)])).unwrap(), form(&p, &[("e", 2)]));
        assert!(act1(&p, &ade, &form(&p, &[("f", 1)])).unwrap().is_zero());
        assert_eq!(act2(&p, &ade, &form(&p, &[("h|f", 1)]), &form(&p, &[("f", 1)])).unwrap(), form(&p, &[("f", 1)]));
        for d in ad_basis(p.lie()) {
            for (x, y) in [("e", "f"), ("e", "e"), ("f", "e")] {
                assert!(act2(&p, &d, &form(&p, &[(x, 1)]), &form(&p, &[(y, 1)])).unwrap().is_zero());
            }
        }
        assert!(varrho1(&p, &adh, &scalar(&p, &[("h", 1)])).unwrap().is_zero());
        // ad_e ▷ (h^∨⊗f, h^∨⊗f): the two-form target vanishes when dim A = 1
        assert!(act2(&p, &adh, &form(&p, &[("h|e", 1)]), &form(&p, &[("h|f", 1)])).unwrap().is_zero());
    }

    #[test]
    fn one_one_branch_by_expansion() {
        // X = h^∨⊗e, Y = h^∨⊗f on sl2, δ = ad_h; output is a 1-form evaluated on h.
        // (−1)^2 Y(pr_A δ(X(h)), ·) with Sh(1,0) = {id}: Y(pr_A[h,e]) = Y(0) = 0,
        // X(pr_A δ(Y(h))) with Sh(0,1) = {id}: X(pr_A[h,f]) = 0.
        let p = example_pair("sl2").unwrap();
        let adh = ad_named(&p, "h");
        assert!(act2(&p, &adh, &form(&p, &[("h|e", 1)]), &form(&p, &[("h|f", 1)])).unwrap().is_zero());
        // δ = ad_e: Y(pr_A[e,e]) = 0 and X(pr_A[e,f]) = X(h) = e.
        let ade = ad_named(&p, "e");
        assert_eq!(act2(&p, &ade, &form(&p, &[("h|e", 1)]), &form(&p, &[("h|f", 1)])).unwrap(), form(&p, &[("h|e", 1)]));
    }

    #[test]
    fn aff1_and_heisenberg_oracles() {
        let p = example_pair("aff1").unwrap();
        let d = Derivation::new(p.lie(), "a->b", vec![vec![q(0), q(1)], vec![q(0), q(0)]]).unwrap();
        assert_eq!(kappa(&p, &d).unwrap(), form(&p, &[("a|b", -1)]));
        let h = example_pair("heisenberg").unwrap();
        for d in derivations(h.lie()) {
            for x in ["x", "y"] {
                let xi = h.lie().basis().index_of(x).unwrap();
                let expect = h.b_element(&h.pr_b(&d.images()[xi]));
                let got = act1(&h, &d, &form(&h, &[(x, 1)])).unwrap();
                assert_eq!(got, GradedElement::from_terms(h.omega().forms(), expect.coords().clone()));
            }
        }
    }

    #[test]
    fn example_rho2_contraction() {
        // ϱ₂(x_α, ω⊗x_{−α}) = (−1)^{|ω|+1} ω·i_{h_α} on sl3 with the Cartan subalgebra.
        let p = example_pair("sl3-cartan").unwrap();
        for (pos, neg, coroot) in [("e1", "f1", &[1i64, 0][..]), ("e2", "f2", &[0, 1]), ("e3", "f3", &[1, 1])] {
            let d = ad_named(&p, pos);
            let hc = p.a_element(&coroot.iter().map(|&c| q(c)).collect::<Vec<_>>());
            for w in ["1", "h1", "h2", "h1^h2"] {
                let omega = scalar(&p, &[(w, 1)]);
                let x = p.form_mul(&omega, &form(&p, &[(neg, 1)])).unwrap();
                if x.is_zero() {
                    continue;
                }
                let deg = omega.degree().unwrap();
                for eta in ["1", "h1", "h2", "h1^h2"] {
                    let eta = scalar(&p, &[(eta, 1)]);
                    let got = varrho2(&p, &d, &x, &eta).unwrap();
                    let mut want = p.wedge(&omega, &p.interior(&hc, &eta).unwrap()).unwrap();
                    if deg % 2 == 0 {
                        want = want.neg();
                    }
                    assert_eq!(got, want, "{pos} {w}");
                }
            }
        }
    }

    #[test]
    fn action_suite_on_examples() {
        for name in example_names() {
            let p = example_pair(&name).unwrap();
            let l3 = PairL3::new(p.clone());
            let ders = derivations(p.lie());
            let act = pair_action(&p, &ders).unwrap();
            let defects = check_action_axioms(l3.algebra(), &act, 4, 3);
            assert!(defects.is_empty(), "{name}: {:?}", &defects[..defects.len().min(3)]);
            let props = check_properties(&p, &ders).unwrap();
            assert!(props.is_empty(), "{name}: {:?}", &props[..props.len().min(3)]);
        }
    }

    #[test]
    fn sign_flip_is_detected() {
        let p = example_pair("sl2").unwrap();
        let l3 = PairL3::new(p.clone());
        let ders = ad_basis(p.lie());
        let mut act = pair_action(&p, &ders).unwrap();
        let mut t = act.mu_table(0, 1).unwrap().clone();
        let (key, v) = t.entries().next().map(|(k, v)| (k.clone(), v.clone())).unwrap();
        t.insert(&key, v.into_iter().map(|(i, c)| (i, -c)).collect()).unwrap();
        act.set_mu(0, 1, t).unwrap();
        let defects = check_action_axioms(l3.algebra(), &act, 4, 3);
        assert!(defects.iter().any(|d| d.identity == "action/Q-compat/n=1"));
    }

    #[test]
    fn kappa_kernels() {
        let p = example_pair("sl2").unwrap();
        let k = kappa_kernel(&p, &super::super::derivations(p.lie())).unwrap();
        assert_eq!(k.len(), 1);
        assert!(kappa(&p, &k[0]).unwrap().is_zero());
        let adh = ad_named(&p, "h");
        assert!(crate::linalg::in_span(&[k[0].flatten()], &adh.flatten()));
        let p = example_pair("heisenberg").unwrap();
        assert_eq!(kappa_kernel(&p, &super::super::derivations(p.lie())).unwrap().len(), 6);
    }

    #[test]
    fn mu2_vanishes_on_b_pairs() {
        for name in example_names() {
            let p = example_pair(&name).unwrap();
            let act = pair_action(&p, &derivations(p.lie())).unwrap();
            for h in 0..act.acting_dim() {
                if let Some(t) = act.mu_table(h, 2) {
                    for (k, _) in t.entries() {
                        assert!(k.iter().any(|&i| p.omega().forms().degree(i) > 0), "{name}");
                    }
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn act2_is_graded_skew(d in 0usize..8, x in 0usize..24, y in 0usize..24, c in -3i64..4) {
            let p = example_pair("sl3-cartan").unwrap();
            let ders = derivations(p.lie());
            let der = ders[d].scaled(&q(c));
            let f = p.omega().forms();
            let xe = GradedElement::basis(f, x);
            let ye = GradedElement::basis(f, y);
            let s = Sign::pow(1 + (f.degree(x) * f.degree(y)) as i64).to_rational();
            let lhs = act2(&p, &der, &xe, &ye).unwrap();
            let rhs = act2(&p, &der, &ye, &xe).unwrap().scale_rational(&s);
            prop_assert_eq!(lhs, rhs);
        }
    }
}
