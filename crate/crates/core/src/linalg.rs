//! Dense exact linear algebra over Q.

use crate::scalars::Rational;

pub type Row = Vec<Rational>;

/// Reduced row echelon form in place; returns the pivot column of each nonzero row.
pub fn rref(m: &mut Vec<Row>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip().expect("pivot is nonzero");
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row).skip(c) {
                if !p.is_zero() {
                    *x = &*x - &(&f * p);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    pivots
}

pub fn rank(rows: &[Row], ncols: usize) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, ncols).len()
}

/// Basis of {x : A x = 0}.
pub fn kernel(rows: &[Row], ncols: usize) -> Vec<Row> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m, ncols);
    let mut is_pivot = vec![None; ncols];
    for (r, &c) in pivots.iter().enumerate() {
        is_pivot[c] = Some(r);
    }
    let mut basis = Vec::new();
    for free in 0..ncols {
        if is_pivot[free].is_some() {
            continue;
        }
        let mut v = vec![Rational::zero(); ncols];
        v[free] = Rational::one();
        for (r, &c) in pivots.iter().enumerate() {
            v[c] = -&m[r][free];
        }
        basis.push(v);
    }
    basis
}

/// A particular solution of A x = b, or None when inconsistent.
pub fn solve(rows: &[Row], ncols: usize, b: &[Rational]) -> Option<Row> {
    let mut m: Vec<Row> = rows
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut r = r.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m, ncols + 1);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![Rational::zero(); ncols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r][ncols].clone();
    }
    Some(x)
}

/// Coordinates of v in the span of the given vectors, or None.
pub fn coordinates_in_span(vectors: &[Row], v: &[Rational]) -> Option<Row> {
    let n = v.len();
    let k = vectors.len();
    let rows: Vec<Row> = (0..n).map(|i| vectors.iter().map(|w| w[i].clone()).collect()).collect();
    if k == 0 {
        return v.iter().all(Rational::is_zero).then(Vec::new);
    }
    solve(&rows, k, v)
}

pub fn in_span(vectors: &[Row], v: &[Rational]) -> bool {
    coordinates_in_span(vectors, v).is_some()
}

/// Extend an independent list `base` by vectors from `candidates`, returning the added ones.
pub fn complement_basis(base: &[Row], candidates: &[Row], n: usize) -> Vec<Row> {
    let mut current: Vec<Row> = base.to_vec();
    let mut r = rank(&current, n);
    let mut added = Vec::new();
    for c in candidates {
        current.push(c.clone());
        let r2 = rank(&current, n);
        if r2 > r {
            r = r2;
            added.push(c.clone());
        } else {
            current.pop();
        }
    }
    added
}

pub fn mat_vec(rows: &[Row], x: &[Rational]) -> Row {
    rows.iter()
        .map(|r| {
            let mut s = Rational::zero();
            for (a, b) in r.iter().zip(x) {
                if !a.is_zero() && !b.is_zero() {
                    s += &(a * b);
                }
            }
            s
        })
        .collect()
}
