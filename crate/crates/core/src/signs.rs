use std::ops::Mul;

use serde::Serialize;
use thiserror::Error;

use crate::scalars::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignError {
    #[error("not a permutation of 1..{0}: {1:?}")]
    NotAPermutation(usize, Vec<usize>),
    #[error("permutation has length {perm} but {degs} degrees were given")]
    LengthMismatch { perm: usize, degs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_parity(odd: bool) -> Sign {
        if odd {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    /// (-1)^e
    pub fn pow(e: i64) -> Sign {
        Sign::from_parity(e.rem_euclid(2) == 1)
    }

    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    pub fn to_i64(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn to_rational(self) -> Rational {
        Rational::int(self.to_i64())
    }

    pub fn apply<S: Scalar>(self, s: &S) -> S {
        match self {
            Sign::Plus => s.clone(),
            Sign::Minus => s.neg(),
        }
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_parity(self != rhs)
    }
}

/// Permutation of {1..n}; stored 0-based, `images()[i] = σ(i+1) - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self, SignError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(SignError::NotAPermutation(
                    n,
                    images.iter().map(|x| x + 1).collect(),
                ));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn from_one_based(images: &[usize]) -> Result<Self, SignError> {
        if images.contains(&0) {
            return Err(SignError::NotAPermutation(images.len(), images.to_vec()));
        }
        Self::from_images(images.iter().map(|x| x - 1).collect())
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|x| x + 1).collect()
    }

    /// (self ∘ other)(i) = self(other(i))
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &s) in self.images.iter().enumerate() {
            inv[s] = i;
        }
        Permutation { images: inv }
    }

    pub fn sign(&self) -> Sign {
        let n = self.len();
        let mut inv = 0usize;
        for a in 0..n {
            for b in a + 1..n {
                if self.images[a] > self.images[b] {
                    inv += 1;
                }
            }
        }
        Sign::from_parity(inv % 2 == 1)
    }

    /// (items[σ(1)], ..., items[σ(n)])
    pub fn permute<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.images.iter().map(|&i| items[i].clone()).collect()
    }

    /// True if σ increases on each consecutive block of the given sizes.
    pub fn is_shuffle(&self, blocks: &[usize]) -> bool {
        if blocks.iter().sum::<usize>() != self.len() {
            return false;
        }
        let mut start = 0;
        for &b in blocks {
            if self.images[start..start + b].windows(2).any(|w| w[0] > w[1]) {
                return false;
            }
            start += b;
        }
        true
    }
}

fn combinations(pool: &[usize], k: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(pool: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let need = k - cur.len();
        for i in start..=pool.len() - need {
            cur.push(pool[i]);
            rec(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    if k <= pool.len() {
        rec(pool, k, 0, &mut Vec::with_capacity(k), out);
    }
}

/// Sh(p,q) in lexicographic order of image lists.
pub fn shuffles2(p: usize, q: usize) -> Vec<Permutation> {
    shuffle_blocks(&[p, q])
}

/// Sh(i,j,k) in lexicographic order of image lists.
pub fn shuffles3(i: usize, j: usize, k: usize) -> Vec<Permutation> {
    shuffle_blocks(&[i, j, k])
}

fn shuffle_blocks(blocks: &[usize]) -> Vec<Permutation> {
    let n: usize = blocks.iter().sum();
    let mut acc: Vec<(Vec<usize>, Vec<usize>)> = vec![(Vec::with_capacity(n), (0..n).collect())];
    for &b in blocks {
        let mut next = Vec::new();
        for (prefix, rest) in acc {
            let mut combos = Vec::new();
            combinations(&rest, b, &mut combos);
            for c in combos {
                let mut p = prefix.clone();
                p.extend_from_slice(&c);
                let r: Vec<usize> = rest.iter().copied().filter(|x| !c.contains(x)).collect();
                next.push((p, r));
            }
        }
        acc = next;
    }
    acc.into_iter().map(|(images, _)| Permutation { images }).collect()
}

fn check_len(sigma: &Permutation, degs: &[i32]) -> Result<(), SignError> {
    if sigma.len() != degs.len() {
        return Err(SignError::LengthMismatch { perm: sigma.len(), degs: degs.len() });
    }
    Ok(())
}

/// Sign with v_1⊙…⊙v_n = ε(σ; v) v_σ(1)⊙…⊙v_σ(n) in the graded symmetric algebra.
pub fn koszul_epsilon(sigma: &Permutation, degs: &[i32]) -> Result<Sign, SignError> {
    check_len(sigma, degs)?;
    Ok(epsilon_unchecked(sigma.images(), degs))
}

pub(crate) fn epsilon_unchecked(images: &[usize], degs: &[i32]) -> Sign {
    let n = images.len();
    let mut odd = false;
    for a in 0..n {
        for b in a + 1..n {
            if images[a] > images[b] && degs[images[a]] % 2 != 0 && degs[images[b]] % 2 != 0 {
                odd = !odd;
            }
        }
    }
    Sign::from_parity(odd)
}

/// χ(σ; v) = sgn(σ) ε(σ; v)
pub fn koszul_chi(sigma: &Permutation, degs: &[i32]) -> Result<Sign, SignError> {
    Ok(sigma.sign() * koszul_epsilon(sigma, degs)?)
}

/// (-1)^{Σ (n-i)|v_i|} for unshifted degrees |v_1|,…,|v_n|.
pub fn decalage_sign(degs: &[i32]) -> Sign {
    let n = degs.len() as i64;
    let e: i64 = degs.iter().enumerate().map(|(i, &d)| (n - 1 - i as i64) * d as i64).sum();
    Sign::pow(e)
}

/// Convert a Getzler-convention bracket sign to the Lada–Markl convention, (-1)^{k(k+1)/2}.
pub fn lada_markl_sign(k: usize) -> Sign {
    Sign::pow((k * (k + 1) / 2) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn perm(v: &[usize]) -> Permutation {
        Permutation::from_one_based(v).unwrap()
    }

    #[test]
    fn shuffle_examples() {
        let s: Vec<Vec<usize>> = shuffles2(2, 1).iter().map(|p| p.one_based()).collect();
        assert_eq!(s, vec![vec![1, 2, 3], vec![1, 3, 2], vec![2, 3, 1]]);
        assert_eq!(shuffles2(0, 3), vec![Permutation::identity(3)]);
        assert_eq!(shuffles2(2, 2).len(), 6);
        let mut all: Vec<Vec<usize>> = shuffles3(1, 1, 1).iter().map(|p| p.one_based()).collect();
        all.sort();
        assert_eq!(all.len(), 6);
        all.dedup();
        assert_eq!(all.len(), 6);
        assert_eq!(shuffles3(2, 0, 1), shuffles2(2, 1));
        assert_eq!(shuffles3(1, 1, 0).len(), 2);
        assert_eq!(shuffles2(0, 0), vec![Permutation::identity(0)]);
    }

    #[test]
    fn koszul_examples() {
        let id = Permutation::identity(3);
        assert_eq!(koszul_epsilon(&id, &[1, 3, 5]).unwrap(), Sign::Plus);
        let sw = perm(&[2, 1]);
        assert_eq!(koszul_epsilon(&sw, &[1, 1]).unwrap(), Sign::Minus);
        assert_eq!(koszul_epsilon(&sw, &[2, 1]).unwrap(), Sign::Plus);
        assert_eq!(koszul_chi(&id, &[1, 0, 1]).unwrap(), Sign::Plus);
        assert_eq!(koszul_chi(&sw, &[1, 1]).unwrap(), Sign::Plus);
        assert_eq!(koszul_chi(&sw, &[0, 0]).unwrap(), Sign::Minus);
        assert!(koszul_epsilon(&sw, &[1]).is_err());
    }

    #[test]
    fn decalage_examples() {
        assert_eq!(decalage_sign(&[7]), Sign::Plus);
        assert_eq!(decalage_sign(&[1, 0]), Sign::Minus);
        assert_eq!(decalage_sign(&[1, 1, 0]), Sign::Minus);
        assert_eq!(lada_markl_sign(1), Sign::Minus);
        assert_eq!(lada_markl_sign(3), Sign::Plus);
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(Permutation::from_one_based(&[1, 1]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        assert!(Permutation::from_one_based(&[1, 3]).is_err());
    }

    /// Sign obtained by sorting a word of generators with graded bubble swaps.
    fn bubble_oracle(sigma: &Permutation, degs: &[i32]) -> Sign {
        let mut word: Vec<usize> = sigma.images().to_vec();
        let mut sign = Sign::Plus;
        for i in 0..word.len() {
            for j in 0..word.len() - 1 - i {
                if word[j] > word[j + 1] {
                    if degs[word[j]] % 2 != 0 && degs[word[j + 1]] % 2 != 0 {
                        sign = sign * Sign::Minus;
                    }
                    word.swap(j, j + 1);
                }
            }
        }
        sign
    }

    fn perm_and_degs(max: usize) -> impl Strategy<Value = (Permutation, Vec<i32>)> {
        (1..=max).prop_flat_map(|n| {
            (
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
                proptest::collection::vec(-3i32..4, n),
            )
                .prop_map(|(p, d)| (Permutation::from_images(p).unwrap(), d))
        })
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    proptest! {
        #[test]
        fn shuffle_count_and_shape(p in 0usize..5, q in 0usize..5) {
            let s = shuffles2(p, q);
            prop_assert_eq!(s.len(), binom(p + q, p));
            for x in &s {
                prop_assert!(x.is_shuffle(&[p, q]));
            }
            let mut d = s.clone();
            d.sort();
            d.dedup();
            prop_assert_eq!(d.len(), s.len());
        }

        #[test]
        fn shuffle3_count(i in 0usize..4, j in 0usize..4, k in 0usize..4) {
            let s = shuffles3(i, j, k);
            prop_assert_eq!(s.len(), binom(i + j + k, i) * binom(j + k, j));
            for x in &s {
                prop_assert!(x.is_shuffle(&[i, j, k]));
            }
        }

        #[test]
        fn epsilon_matches_bubble((sigma, degs) in perm_and_degs(6)) {
            prop_assert_eq!(koszul_epsilon(&sigma, &degs).unwrap(), bubble_oracle(&sigma, &degs));
        }

        #[test]
        fn chi_is_sgn_times_epsilon((sigma, degs) in perm_and_degs(6)) {
            prop_assert_eq!(
                koszul_chi(&sigma, &degs).unwrap(),
                sigma.sign() * koszul_epsilon(&sigma, &degs).unwrap()
            );
        }

        #[test]
        fn epsilon_cocycle(
            (sigma, degs) in perm_and_degs(6),
            seed in proptest::collection::vec(0usize..100, 6),
        ) {
            let n = sigma.len();
            let mut tau: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                tau.swap(i, seed[i] % (i + 1));
            }
            let tau = Permutation::from_images(tau).unwrap();
            let lhs = koszul_epsilon(&tau.compose(&sigma), &degs).unwrap();
            let permuted = tau.permute(&degs);
            let rhs = koszul_epsilon(&tau, &degs).unwrap() * koszul_epsilon(&sigma, &permuted).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn shifted_degree_relation((sigma, degs) in perm_and_degs(6)) {
            let shifted: Vec<i32> = degs.iter().map(|d| d - 1).collect();
            let permuted = sigma.permute(&degs);
            let lhs = decalage_sign(&permuted) * koszul_epsilon(&sigma, &shifted).unwrap();
            let rhs = decalage_sign(&degs) * koszul_chi(&sigma, &degs).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
