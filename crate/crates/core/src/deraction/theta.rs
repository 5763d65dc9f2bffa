use std::sync::Arc;

use super::{ActionMaps, DerError};
use crate::graded::{shift_table, GradedBasis, GradedElement, MultiTable, ShiftDirection, ShiftedBasis, Sparse, Symmetry};
use crate::linfty::{
    brackets_to_codifferential, check_codifferential, check_strict_morphism, codifferential_to_brackets, Coderivation,
    Defect, LInfinityStructure,
};
use crate::scalars::Rational;
use crate::signs::Sign;

/// The action as ψ(h) = γ(h)^# + θ(h) on the symmetric coalgebra of 𝔤[1].
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGamma {
    shifted: ShiftedBasis,
    acting_bracket: MultiTable,
    gamma: Vec<GradedElement>,
    theta: Vec<Coderivation>,
}

impl ThetaGamma {
    pub fn zero(shifted: &ShiftedBasis, acting_bracket: MultiTable) -> Self {
        let k = acting_bracket.input().len();
        ThetaGamma {
            shifted: shifted.clone(),
            gamma: vec![GradedElement::zero(shifted.basis()); k],
            theta: vec![Coderivation::zero(shifted, 0); k],
            acting_bracket,
        }
    }

    pub fn shifted(&self) -> &ShiftedBasis {
        &self.shifted
    }

    pub fn acting(&self) -> &Arc<GradedBasis> {
        self.acting_bracket.input()
    }

    pub fn gamma(&self, h: usize) -> &GradedElement {
        &self.gamma[h]
    }

    pub fn theta(&self, h: usize) -> &Coderivation {
        &self.theta[h]
    }

    pub fn set_gamma(&mut self, h: usize, v: GradedElement) {
        self.gamma[h] = v;
    }

    pub fn set_theta(&mut self, h: usize, t: Coderivation) {
        self.theta[h] = t;
    }

    /// Σ c_k ψ(h_k) pieces for the bracket [h, h'] in the acting algebra.
    fn bracket_combo(&self, h: usize, g: usize) -> (GradedElement, Coderivation) {
        let mut gamma = GradedElement::zero(self.shifted.basis());
        let mut theta = Coderivation::zero(&self.shifted, 0);
        if let Some((s, v)) = self.acting_bracket.eval_basis(&[h, g]) {
            for (k, c) in v {
                let c = s.apply(c);
                gamma.add_scaled_assign(&self.gamma[*k], &c).expect("same space");
                theta = theta.add_scaled(&self.theta[*k], &c).expect("same space");
            }
        }
        (gamma, theta)
    }
}

fn theta_sign(n: usize) -> Rational {
    Sign::pow(n as i64).to_rational()
}

/// γ(h) = κ(h)[1] and θ(h)_n = (−1)^n μ_n(h)[1], the décalage of μ_n(h) read as an (n+1)-ary map with h first, up to the global sign −1.
pub fn to_theta_gamma(act: &ActionMaps) -> Result<ThetaGamma, DerError> {
    let shifted = ShiftedBasis::new(act.space().clone(), 1);
    let mut tg = ThetaGamma::zero(&shifted, act.acting_bracket().clone());
    for h in 0..act.acting_dim() {
        tg.gamma[h] = act.kappa_of(h).reinterpret(shifted.basis());
        let mut theta = Coderivation::zero(&shifted, 0);
        for n in 1..=act.max_arity() {
            if let Some(t) = act.mu_table(h, n) {
                let s = shift_table(t, ShiftDirection::ToShifted, &shifted)?.scaled(&theta_sign(n));
                theta.set_component(n, s)?;
            }
        }
        tg.theta[h] = theta;
    }
    Ok(tg)
}

pub fn from_theta_gamma(tg: &ThetaGamma) -> Result<ActionMaps, DerError> {
    let space = tg.shifted.underlying().clone();
    let mut act = ActionMaps::zero(&space, tg.acting_bracket.clone());
    for h in 0..tg.gamma.len() {
        act.set_kappa(h, &tg.gamma[h].reinterpret(&space))?;
        for (n, t) in tg.theta[h].components() {
            let s = shift_table(&t.scaled(&theta_sign(*n)), ShiftDirection::ToUnshifted, &tg.shifted)?;
            act.set_mu(h, *n, s)?;
        }
    }
    Ok(act)
}

fn prefixed(mut defects: Vec<Defect>, prefix: &[&str]) -> Vec<Defect> {
    for d in &mut defects {
        let mut inputs: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
        inputs.append(&mut d.inputs);
        d.inputs = inputs;
    }
    defects
}

/// The four compatibility equations between Q and (γ, θ), componentwise up to max_arity.
pub fn check_theta_gamma(q: &Coderivation, tg: &ThetaGamma, max_arity: usize) -> Result<Vec<Defect>, DerError> {
    let mut out = Vec::new();
    let names = tg.acting().clone();
    let k = tg.gamma.len();
    for h in 0..k {
        let hn = names.name(h);
        let qg = q.apply_letter(&tg.gamma[h]);
        if !qg.is_zero() {
            out.push(Defect { identity: "theta-gamma/Q-gamma".into(), inputs: vec![hn.into()], defect: qg });
        }
        let lhs = Coderivation::commutator(q, &tg.theta[h], max_arity);
        let rhs = Coderivation::contract(&tg.gamma[h], q)?.scaled(&Rational::int(-1));
        out.extend(prefixed(lhs.differences(&rhs, max_arity, "theta-gamma/Q-theta"), &[hn]));
    }
    for h in 0..k {
        for g in h + 1..k {
            let (hn, gn) = (names.name(h), names.name(g));
            let (gamma_hg, theta_hg) = tg.bracket_combo(h, g);
            let mut rhs = tg.theta[h].apply_letter(&tg.gamma[g]);
            rhs.add_scaled_assign(&tg.theta[g].apply_letter(&tg.gamma[h]), &Rational::int(-1))?;
            let mut diff = gamma_hg.clone();
            diff.add_scaled_assign(&rhs, &Rational::int(-1))?;
            if !diff.is_zero() {
                out.push(Defect {
                    identity: "theta-gamma/gamma-bracket".into(),
                    inputs: vec![hn.into(), gn.into()],
                    defect: diff,
                });
            }
            let rhs = Coderivation::commutator(&tg.theta[h], &tg.theta[g], max_arity)
                .add_scaled(&Coderivation::contract(&tg.gamma[g], &tg.theta[h])?, &Rational::one())?
                .add_scaled(&Coderivation::contract(&tg.gamma[h], &tg.theta[g])?, &Rational::int(-1))?;
            out.extend(prefixed(theta_hg.differences(&rhs, max_arity, "theta-gamma/theta-bracket"), &[hn, gn]));
        }
    }
    Ok(out)
}

/// The L∞ algebra on 𝔥 ⊕ 𝔤 extending 𝔤, with the maps used to test it.
#[derive(Debug, Clone)]
pub struct ExtendedSum {
    codifferential: Coderivation,
    algebra: LInfinityStructure,
    acting_algebra: LInfinityStructure,
    inclusion: MultiTable,
    projection: MultiTable,
    acting_dim: usize,
}

impl ExtendedSum {
    pub fn codifferential(&self) -> &Coderivation {
        &self.codifferential
    }

    pub fn algebra(&self) -> &LInfinityStructure {
        &self.algebra
    }

    pub fn space(&self) -> &Arc<GradedBasis> {
        self.algebra.space()
    }

    /// 𝔥 through the codifferential h̃⊙h̃' ↦ [h,h']~, i.e. the bracket −[·,·]_𝔥 after décalage.
    pub fn acting_algebra(&self) -> &LInfinityStructure {
        &self.acting_algebra
    }

    pub fn inclusion(&self) -> &MultiTable {
        &self.inclusion
    }

    pub fn projection(&self) -> &MultiTable {
        &self.projection
    }

    pub fn acting_dim(&self) -> usize {
        self.acting_dim
    }
}

fn offset(v: &Sparse, k: usize) -> Sparse {
    v.iter().map(|(i, c)| (i + k, c.clone())).collect()
}

/// Q̂ on (𝔥 ⊕ 𝔤)[1]: Q̂(h̃) = γ(h), Q̂(h̃⊙h̃') = [h,h']~,
/// Q̂(h̃⊙x̃_1⊙⋯) = θ(h)(x̃_1⊙⋯), Q̂ = Q on words in 𝔤, zero otherwise.
pub fn extend_sum(l: &LInfinityStructure, act: &ActionMaps) -> Result<ExtendedSum, DerError> {
    let tg = to_theta_gamma(act)?;
    let q = brackets_to_codifferential(l);
    let acting = act.acting().clone();
    let k = acting.len();
    let g = l.space();
    let sum = GradedBasis::new(
        acting
            .names()
            .iter()
            .map(|n| (n.clone(), 0))
            .chain(g.names().iter().cloned().zip(g.degrees().iter().copied())),
    )?;
    let shifted = ShiftedBasis::new(sum.clone(), 1);
    let sb = shifted.basis();
    let top = q.max_arity().max(act.max_arity() + 1).max(2);
    let mut qhat = Coderivation::zero(&shifted, 1);
    for n in 1..=top {
        let mut t = MultiTable::new(n, Symmetry::Symmetric, 1, sb, sb);
        if let Some(c) = q.component(n) {
            for (key, v) in c.entries() {
                let key: Vec<usize> = key.iter().map(|i| i + k).collect();
                t.set_normalized(key, offset(v, k));
            }
        }
        for h in 0..k {
            if n == 1 {
                t.set_normalized(vec![h], offset(tg.gamma[h].coords(), k));
            } else if let Some(c) = tg.theta[h].component(n - 1) {
                for (key, v) in c.entries() {
                    let mut word = vec![h];
                    word.extend(key.iter().map(|i| i + k));
                    t.set_normalized(word, offset(v, k));
                }
            }
        }
        if n == 2 {
            for (key, v) in act.acting_bracket().entries() {
                t.set_normalized(key.clone(), v.clone());
            }
        }
        qhat.set_component(n, t)?;
    }
    let algebra = codifferential_to_brackets(&qhat, top.max(3))?;
    let mut acting_algebra = LInfinityStructure::new(&acting, 3);
    acting_algebra.set_bracket(2, act.acting_bracket().scaled(&Rational::int(-1)))?;
    let mut inclusion = MultiTable::new(1, Symmetry::Skew, 0, g, &sum);
    for i in 0..g.len() {
        inclusion.insert(&[i], Sparse::from([(i + k, Rational::one())]))?;
    }
    let mut projection = MultiTable::new(1, Symmetry::Skew, 0, &sum, &acting);
    for h in 0..k {
        projection.insert(&[h], Sparse::from([(h, Rational::one())]))?;
    }
    Ok(ExtendedSum { codifferential: qhat, algebra, acting_algebra, inclusion, projection, acting_dim: k })
}

/// Q̂² = 0 up to max_arity, Q̂ restricted to 𝔤-words equals Q, vanishing with two or more
/// 𝔥-inputs in arity ≥ 3, and strictness of the inclusion of 𝔤 and the projection to 𝔥.
pub fn check_extension(l: &LInfinityStructure, ext: &ExtendedSum, max_arity: usize) -> Result<Vec<Defect>, DerError> {
    let mut out = check_codifferential(&ext.codifferential, max_arity)?;
    let k = ext.acting_dim;
    let q = brackets_to_codifferential(l);
    let mut restricted = Coderivation::zero(q.shifted(), 1);
    for (n, t) in ext.codifferential.components() {
        let mut r = MultiTable::new(*n, Symmetry::Symmetric, 1, q.space(), q.space());
        for (key, v) in t.entries() {
            if *n >= 3 && key.iter().filter(|&&i| i < k).count() >= 2 {
                out.push(Defect {
                    identity: "extension/two-acting-inputs".into(),
                    inputs: key.iter().map(|&i| ext.space().name(i).to_string()).collect(),
                    defect: GradedElement::from_terms(ext.codifferential.space(), v.clone()),
                });
            }
            if key.iter().all(|&i| i >= k) {
                let key: Vec<usize> = key.iter().map(|i| i - k).collect();
                let v: Sparse = v.iter().filter(|(i, _)| **i >= k).map(|(i, c)| (i - k, c.clone())).collect();
                r.set_normalized(key, v);
            }
        }
        restricted.set_component(*n, r)?;
    }
    out.extend(restricted.differences(&q, max_arity, "extension/restriction"));
    let relabel = |tag: &str, ds: Vec<Defect>| -> Vec<Defect> {
        ds.into_iter().map(|mut d| {
            d.identity = format!("{tag}/{}", d.identity);
            d
        })
        .collect()
    };
    out.extend(relabel(
        "extension/inclusion",
        check_strict_morphism(l, &ext.algebra, &ext.inclusion, max_arity),
    ));
    out.extend(relabel(
        "extension/projection",
        check_strict_morphism(&ext.algebra, &ext.acting_algebra, &ext.projection, max_arity),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{check_action_axioms, derivation_bracket, derivations, pair_action};
    use super::*;
    use crate::liepair::{example_names, example_pair, PairL3};

    #[test]
    fn round_trip_and_equivalence() {
        for name in example_names() {
            let p = example_pair(&name).unwrap();
            let l3 = PairL3::new(p.clone());
            let act = pair_action(&p, &derivations(p.lie())).unwrap();
            let tg = to_theta_gamma(&act).unwrap();
            assert_eq!(from_theta_gamma(&tg).unwrap(), act, "{name}");
            let q = brackets_to_codifferential(l3.algebra());
            let d = check_theta_gamma(&q, &tg, 6).unwrap();
            assert!(d.is_empty(), "{name}: {:?}", &d[..d.len().min(3)]);
        }
    }

    #[test]
    fn zero_action_passes() {
        let l3 = PairL3::new(example_pair("aff1").unwrap());
        let ders = derivations(l3.pair().lie());
        let q = brackets_to_codifferential(l3.algebra());
        let tg = ThetaGamma::zero(q.shifted(), derivation_bracket(&ders).unwrap());
        assert!(check_theta_gamma(&q, &tg, 6).unwrap().is_empty());
    }

    #[test]
    fn strict_action_breaking_q_compatibility() {
        // θ(h) = identity-like rescaling of one letter does not commute with Q on sl2.
        let l3 = PairL3::new(example_pair("sl2").unwrap());
        let ders = derivations(l3.pair().lie());
        let q = brackets_to_codifferential(l3.algebra());
        let mut tg = ThetaGamma::zero(q.shifted(), derivation_bracket(&ders).unwrap());
        let sb = q.space().clone();
        let e = sb.index_of("e").unwrap();
        let mut t1 = MultiTable::new(1, Symmetry::Symmetric, 0, &sb, &sb);
        t1.insert(&[e], Sparse::from([(e, Rational::one())])).unwrap();
        let mut theta = Coderivation::zero(q.shifted(), 0);
        theta.set_component(1, t1).unwrap();
        tg.set_theta(0, theta);
        let d = check_theta_gamma(&q, &tg, 4).unwrap();
        assert!(d.iter().any(|d| d.identity.starts_with("theta-gamma/Q-theta")));
        let act = from_theta_gamma(&tg).unwrap();
        assert!(!check_action_axioms(l3.algebra(), &act, 4, 3).is_empty());
    }

    #[test]
    fn extension_on_examples() {
        for name in ["sl2", "aff1", "heisenberg", "abelian:3", "sl3-cartan"] {
            let p = example_pair(name).unwrap();
            let l3 = PairL3::new(p.clone());
            let act = pair_action(&p, &derivations(p.lie())).unwrap();
            let ext = extend_sum(l3.algebra(), &act).unwrap();
            let d = check_extension(l3.algebra(), &ext, 6).unwrap();
            assert!(d.is_empty(), "{name}: {:?}", &d[..d.len().min(3)]);
        }
    }

    #[test]
    fn trivial_extensions() {
        let l3 = PairL3::new(example_pair("sl2").unwrap());
        let empty = GradedBasis::new(Vec::<(String, i32)>::new()).unwrap();
        let act = ActionMaps::zero(l3.space(), MultiTable::new(2, Symmetry::Skew, 0, &empty, &empty));
        let ext = extend_sum(l3.algebra(), &act).unwrap();
        assert_eq!(ext.algebra().brackets(), l3.algebra().brackets());
        let ab = PairL3::new(example_pair("abelian:2").unwrap());
        let h = GradedBasis::new([("u", 0), ("v", 0)]).unwrap();
        let act = ActionMaps::zero(ab.space(), MultiTable::new(2, Symmetry::Skew, 0, &h, &h));
        let ext = extend_sum(ab.algebra(), &act).unwrap();
        assert!(ext.codifferential().is_zero());
    }
}
