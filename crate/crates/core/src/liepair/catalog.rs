use super::{LieAlgebra, LiePair, PairError};
use crate::graded::{GradedBasis, MultiTable, Sparse, Symmetry};
use crate::scalars::Rational;

/// Names accepted by `example_pair`, with abelian:3 standing in for the abelian family.
pub fn example_names() -> Vec<String> {
    ["sl2", "sl3-cartan", "sl3-borel-complement", "heisenberg", "aff1", "abelian:3"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn example_pair(name: &str) -> Result<LiePair, PairError> {
    match name {
        "sl2" => LiePair::new(
            LieAlgebra::from_constants(
                &["h", "e", "f"],
                &[("h", "e", &[("e", 2)]), ("h", "f", &[("f", -2)]), ("e", "f", &[("h", 1)])],
            )?,
            &["h"],
        ),
        "sl3-cartan" => LiePair::new(sl3()?, &["h1", "h2"]),
        "sl3-borel-complement" => LiePair::new(sl3()?, &["h1", "h2", "e1", "e2", "e3"]),
        "heisenberg" => LiePair::new(LieAlgebra::from_constants(&["x", "y", "z"], &[("x", "y", &[("z", 1)])])?, &["z"]),
        "aff1" => LiePair::new(LieAlgebra::from_constants(&["a", "b"], &[("a", "b", &[("b", 1)])])?, &["a"]),
        _ => {
            let n: usize = name
                .strip_prefix("abelian:")
                .and_then(|s| s.parse().ok())
                .filter(|&n| n >= 1)
                .ok_or_else(|| PairError::UnknownExample(name.into()))?;
            let names: Vec<String> = (1..=n).map(|i| format!("e{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            LiePair::new(LieAlgebra::from_constants(&refs, &[])?, &["e1"])
        }
    }
}

type Mat = [[i64; 3]; 3];

fn unit(i: usize, j: usize) -> Mat {
    let mut m = [[0; 3]; 3];
    m[i][j] = 1;
    m
}

fn commutator(x: &Mat, y: &Mat) -> Mat {
    let mut m = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                m[i][j] += x[i][k] * y[k][j] - y[i][k] * x[k][j];
            }
        }
    }
    m
}

/// Chevalley basis of sl3 as 3×3 matrices.
fn sl3() -> Result<LieAlgebra, PairError> {
    let names = ["h1", "h2", "e1", "e2", "e3", "f1", "f2", "f3"];
    let mut h1 = [[0; 3]; 3];
    h1[0][0] = 1;
    h1[1][1] = -1;
    let mut h2 = [[0; 3]; 3];
    h2[1][1] = 1;
    h2[2][2] = -1;
    let mats = [h1, h2, unit(0, 1), unit(1, 2), unit(0, 2), unit(1, 0), unit(2, 1), unit(2, 0)];
    let coords = |m: &Mat| -> [i64; 8] { [m[0][0], -m[2][2], m[0][1], m[1][2], m[0][2], m[1][0], m[2][1], m[2][0]] };
    let basis = GradedBasis::new(names.iter().map(|s| (*s, 0)))?;
    let mut t = MultiTable::new(2, Symmetry::Skew, 0, &basis, &basis);
    for i in 0..8 {
        for j in i + 1..8 {
            let v: Sparse = coords(&commutator(&mats[i], &mats[j]))
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0)
                .map(|(k, c)| (k, Rational::int(*c)))
                .collect();
            t.insert(&[i, j], v)?;
        }
    }
    LieAlgebra::from_table(t)
}
