use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{pair, DerError, Derivation};
use crate::graded::{GradedElement, Sparse};
use crate::liepair::PairL3;
use crate::linalg::{self, Row};
use crate::linfty::Defect;
use crate::scalars::Rational;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohomologyClass {
    pub label: String,
    pub degree: usize,
    pub representative: GradedElement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketEntry {
    pub left: String,
    pub right: String,
    pub value: BTreeMap<String, Rational>,
}

/// H(Ω•_A(B), d_Bott) with representatives and the bracket they induce.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohomologyModel {
    pub dims: Vec<usize>,
    pub classes: Vec<CohomologyClass>,
    pub bracket: Vec<BracketEntry>,
    pub seed: u64,
    pub defects: Vec<Defect>,
    #[serde(skip)]
    layers: Vec<Layer>,
    #[serde(skip)]
    table: BTreeMap<(usize, usize), Sparse>,
}

/// One degree: indices of C^k in the form basis, boundaries, representatives, and the
/// offset of its classes in the global class list.
#[derive(Debug, Clone, PartialEq)]
struct Layer {
    cells: Vec<usize>,
    boundaries: Vec<Row>,
    reps: Vec<Row>,
    first: usize,
}

impl Layer {
    fn to_row(&self, v: &Sparse) -> Row {
        self.cells.iter().map(|i| v.get(i).cloned().unwrap_or_else(Rational::zero)).collect()
    }

    fn to_sparse(&self, r: &[Rational]) -> Sparse {
        self.cells.iter().zip(r).filter(|(_, c)| !c.is_zero()).map(|(i, c)| (*i, c.clone())).collect()
    }

    /// Class coordinates of a cycle, None if it is not a cycle modulo nothing (outside Z + B).
    fn class(&self, v: &Sparse) -> Option<Row> {
        let mut vectors = self.reps.clone();
        vectors.extend(self.boundaries.iter().cloned());
        let c = linalg::coordinates_in_span(&vectors, &self.to_row(v))?;
        Some(c[..self.reps.len()].to_vec())
    }
}

impl CohomologyModel {
    pub fn dim(&self, k: usize) -> usize {
        self.dims.get(k).copied().unwrap_or(0)
    }

    /// Class coordinates (global) of a cycle, or None if it is not a cycle.
    pub fn class_of(&self, x: &GradedElement) -> Option<Sparse> {
        let deg = if x.is_zero() { return Some(Sparse::new()) } else { x.degree()? };
        let layer = self.layers.get(deg as usize)?;
        let c = layer.class(x.coords())?;
        Some(c.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (layer.first + i, c)).collect())
    }

    /// [x̄_i, x̄_j] in global class coordinates.
    pub fn bracket_classes(&self, i: usize, j: usize) -> Sparse {
        self.table.get(&(i, j)).cloned().unwrap_or_default()
    }

    fn bracket_sparse(&self, x: &Sparse, y: &Sparse) -> Sparse {
        let mut acc = Sparse::new();
        for (i, a) in x {
            for (j, b) in y {
                super::add_into(&mut acc, &self.bracket_classes(*i, *j), &(a * b));
            }
        }
        acc
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Row {
    (0..n).map(|_| Rational::int(rng.gen_range(-3..=3))).collect()
}

fn form_class_name(k: usize, i: usize) -> String {
    format!("H{k}_{}", i + 1)
}

fn class_value(classes: &[CohomologyClass], v: &Sparse) -> BTreeMap<String, Rational> {
    v.iter().map(|(i, c)| (classes[*i].label.clone(), c.clone())).collect()
}

/// Kernel and image of d_Bott degree by degree, representatives, and the induced bracket with
/// a sweep that perturbs every representative by a seeded random boundary.
pub fn cohomology(l3: &PairL3, seed: u64) -> Result<CohomologyModel, DerError> {
    let forms = l3.space().clone();
    let dim_a = l3.pair().dim_a();
    let algebra = l3.algebra();
    let d = |x: &GradedElement| algebra.apply(1, &[x]).expect("arity 1");
    let cells: Vec<Vec<usize>> = (0..=dim_a + 1).map(|k| forms.of_degree(k as i32)).collect();
    let mut layers = Vec::new();
    let mut dims = Vec::new();
    let mut classes = Vec::new();
    let mut images_prev: Vec<Row> = Vec::new();
    for k in 0..=dim_a {
        let here = Layer { cells: cells[k].clone(), boundaries: vec![], reps: vec![], first: 0 };
        let next = Layer { cells: cells[k + 1].clone(), boundaries: vec![], reps: vec![], first: 0 };
        let dmat: Vec<Row> = cells[k].iter().map(|&i| next.to_row(d(&GradedElement::basis(&forms, i)).coords())).collect();
        // rows of dmat are images; d as a matrix acting on coefficient vectors is its transpose
        let n = cells[k].len();
        let m = cells[k + 1].len();
        let mat: Vec<Row> = (0..m).map(|r| (0..n).map(|c| dmat[c][r].clone()).collect()).collect();
        let cycles = linalg::kernel(&mat, n);
        let boundaries = {
            let mut b = Vec::new();
            for v in &images_prev {
                if !linalg::in_span(&b, v) {
                    b.push(v.clone());
                }
            }
            b
        };
        let reps = linalg::complement_basis(&boundaries, &cycles, n);
        let first = classes.len();
        for (i, r) in reps.iter().enumerate() {
            classes.push(CohomologyClass {
                label: form_class_name(k, i),
                degree: k,
                representative: GradedElement::from_terms(&forms, here.to_sparse(r)),
            });
        }
        dims.push(reps.len());
        layers.push(Layer { cells: here.cells, boundaries, reps, first });
        images_prev = dmat;
    }
    let mut model = CohomologyModel { dims, classes, bracket: vec![], seed, defects: vec![], layers, table: BTreeMap::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b2 = |x: &GradedElement, y: &GradedElement| algebra.apply(2, &[x, y]).expect("arity 2");
    let perturb = |rng: &mut ChaCha8Rng, c: &CohomologyClass| -> GradedElement {
        if c.degree == 0 {
            return c.representative.clone();
        }
        let prev = &cells[c.degree - 1];
        let r = random_vector(rng, prev.len());
        let chain = GradedElement::from_terms(&forms, prev.iter().zip(&r).map(|(i, c)| (*i, c.clone())));
        let mut out = c.representative.clone();
        out.add_assign_elem(&d(&chain)).expect("same space");
        out
    };
    let nc = model.classes.len();
    for i in 0..nc {
        for j in 0..nc {
            let (ci, cj) = (&model.classes[i], &model.classes[j]);
            let inputs = vec![ci.label.clone(), cj.label.clone()];
            let v = b2(&ci.representative, &cj.representative);
            let Some(cls) = model.class_of(&v) else {
                model.defects.push(Defect { identity: "cohomology/bracket-not-closed".into(), inputs, defect: v });
                continue;
            };
            let w = b2(&perturb(&mut rng, ci), &perturb(&mut rng, cj));
            if model.class_of(&w).as_ref() != Some(&cls) {
                let mut diff = w.clone();
                diff.add_scaled_assign(&v, &Rational::int(-1)).expect("same space");
                model.defects.push(Defect {
                    identity: "cohomology/bracket-representative".into(),
                    inputs: inputs.clone(),
                    defect: diff,
                });
            }
            if !cls.is_empty() {
                model.bracket.push(BracketEntry {
                    left: inputs[0].clone(),
                    right: inputs[1].clone(),
                    value: class_value(&model.classes, &cls),
                });
                model.table.insert((i, j), cls);
            }
        }
    }
    Ok(model)
}

/// The operator x̄ ↦ (δ▷x)‾ on H for δ preserving A.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedAction {
    pub derivation: String,
    pub images: BTreeMap<String, BTreeMap<String, Rational>>,
    pub defects: Vec<Defect>,
    #[serde(skip)]
    matrix: Vec<Sparse>,
}

impl InducedAction {
    /// Global class coordinates of δ▷x̄_i.
    pub fn image(&self, i: usize) -> &Sparse {
        &self.matrix[i]
    }
}

/// Rejects δ with κ(δ) ≠ 0; otherwise checks representative independence and the derivation
/// rule δ▷[x̄,ȳ] = [δ▷x̄,ȳ] + [x̄,δ▷ȳ] on all class pairs.
pub fn induced_action(l3: &PairL3, model: &CohomologyModel, d: &Derivation) -> Result<InducedAction, DerError> {
    let p = l3.pair();
    if !pair::kappa(p, d)?.is_zero() {
        return Err(DerError::NotInKernel(d.name().into()));
    }
    let forms = l3.space().clone();
    let algebra = l3.algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ 0x5eed);
    let mut defects = Vec::new();
    let mut matrix = Vec::new();
    for c in &model.classes {
        let v = pair::act1(p, d, &c.representative)?;
        let Some(cls) = model.class_of(&v) else {
            defects.push(Defect { identity: "induced/not-closed".into(), inputs: vec![d.name().into(), c.label.clone()], defect: v });
            matrix.push(Sparse::new());
            continue;
        };
        if c.degree > 0 {
            let prev = forms.of_degree(c.degree as i32 - 1);
            let r = random_vector(&mut rng, prev.len());
            let chain = GradedElement::from_terms(&forms, prev.iter().zip(&r).map(|(i, x)| (*i, x.clone())));
            let mut x = c.representative.clone();
            x.add_assign_elem(&algebra.apply(1, &[&chain])?)?;
            let w = pair::act1(p, d, &x)?;
            if model.class_of(&w).as_ref() != Some(&cls) {
                defects.push(Defect {
                    identity: "induced/representative".into(),
                    inputs: vec![d.name().into(), c.label.clone()],
                    defect: w,
                });
            }
        }
        matrix.push(cls);
    }
    let n = model.classes.len();
    let classes = &model.classes;
    for i in 0..n {
        for j in 0..n {
            let br = model.bracket_classes(i, j);
            let mut lhs = Sparse::new();
            for (k, c) in &br {
                super::add_into(&mut lhs, &matrix[*k], c);
            }
            let unit = |k: usize| Sparse::from([(k, Rational::one())]);
            let t1 = model.bracket_sparse(&matrix[i], &unit(j));
            let t2 = model.bracket_sparse(&unit(i), &matrix[j]);
            super::add_into(&mut lhs, &t1, &Rational::int(-1));
            super::add_into(&mut lhs, &t2, &Rational::int(-1));
            if !lhs.is_empty() {
                let mut rep = GradedElement::zero(&forms);
                for (k, c) in &lhs {
                    rep.add_scaled_assign(&classes[*k].representative, c)?;
                }
                defects.push(Defect {
                    identity: "induced/derivation-rule".into(),
                    inputs: vec![d.name().into(), classes[i].label.clone(), classes[j].label.clone()],
                    defect: rep,
                });
            }
        }
    }
    let images = classes
        .iter()
        .zip(&matrix)
        .map(|(c, v)| (c.label.clone(), class_value(classes, v)))
        .collect();
    Ok(InducedAction { derivation: d.name().into(), images, defects, matrix })
}
