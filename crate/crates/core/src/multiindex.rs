//! Multiindex enumeration and exact factorial ratios.

use num_bigint::BigInt;
use num_traits::One;

use crate::rat::Rat;

/// All `alpha` in `N^d` with `|alpha| = n`, in lexicographic order.
pub fn compositions(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; d];
    fill(n, 0, &mut cur, &mut out);
    out
}

fn fill(rem: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == cur.len() {
        cur[pos] = rem;
        out.push(cur.clone());
        return;
    }
    for k in 0..=rem {
        cur[pos] = k;
        fill(rem - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// All `alpha` with `|alpha| <= n`, grouped by total degree.
pub fn compositions_up_to(n: usize, d: usize) -> Vec<Vec<usize>> {
    (0..=n).flat_map(|k| compositions(k, d)).collect()
}

pub fn total(alpha: &[usize]) -> usize {
    alpha.iter().sum()
}

pub fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// `(beta + alpha)! / beta!` as an exact integer (componentwise rising factorial).
pub fn rising_factorial_ratio(beta: &[usize], alpha: &[usize]) -> BigInt {
    assert_eq!(beta.len(), alpha.len());
    let mut acc = BigInt::one();
    for (&b, &a) in beta.iter().zip(alpha) {
        for i in 1..=a {
            acc *= BigInt::from(b + i);
        }
    }
    acc
}

/// Multinomial coefficient `n! / alpha!` for `|alpha| = n`.
pub fn multinomial(alpha: &[usize]) -> BigInt {
    let n = total(alpha);
    let mut num = factorial(n);
    for &a in alpha {
        num /= factorial(a);
    }
    num
}

pub fn big_to_rat(x: BigInt) -> Rat {
    Rat::from_integer(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_counts_are_binomial() {
        // card{alpha in N^d : |alpha| = n} = C(n + d - 1, d - 1)
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(4, 3).len(), 15);
        assert_eq!(compositions(0, 3), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn multinomials_sum_to_power() {
        let total: BigInt = compositions(5, 3).iter().map(|a| multinomial(a)).sum();
        assert_eq!(total, BigInt::from(3u32).pow(5));
    }

    #[test]
    fn rising_ratio_matches_factorials() {
        // (2+3)!/2! = 60 in one coordinate
        assert_eq!(rising_factorial_ratio(&[2], &[3]), BigInt::from(60));
        assert_eq!(rising_factorial_ratio(&[1, 0], &[1, 1]), BigInt::from(2));
    }
}
