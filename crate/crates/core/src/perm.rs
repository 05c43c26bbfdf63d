//! Small permutation helpers shared by the game and analysis modules.
//!
//! Permutations of `1..=n` are stored as `Vec<usize>` holding the values
//! themselves, so a preference row `[2, 1, 3]` means object 0 has rank 2.

use alloc::vec;
use alloc::vec::Vec;

/// True when `row` holds every value of `1..=row.len()` exactly once.
pub fn is_permutation(row: &[usize]) -> bool {
    let n = row.len();
    let mut seen = vec![false; n];
    for &v in row {
        if v == 0 || v > n || seen[v - 1] {
            return false;
        }
        seen[v - 1] = true;
    }
    true
}

/// The identity permutation `1, 2, ..., n`.
pub fn identity(n: usize) -> Vec<usize> {
    (1..=n).collect()
}

/// Inverse of a permutation of `1..=n`: `inv[row[k] - 1] = k + 1`.
///
/// `row` must already be a permutation.
pub fn inverse(row: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; row.len()];
    for (k, &v) in row.iter().enumerate() {
        inv[v - 1] = k + 1;
    }
    inv
}

/// Largest possible inversion number for length `n`.
pub fn max_inversions(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Every permutation of `1..=n` whose inversion number is at most `bound`,
/// in lexicographic order.
///
/// Permutations are built from their inversion tables (Lehmer codes): the
/// digit at position `k` picks the `c_k`-th smallest unused value and
/// contributes exactly `c_k` inversions, so codes with digit sum `<= bound`
/// are exactly the wanted permutations and nothing else is visited.
pub fn bounded_inversion_permutations(n: usize, bound: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut code = Vec::with_capacity(n);
    extend_codes(n, bound, &mut code, &mut out);
    out
}

fn extend_codes(n: usize, budget: usize, code: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let k = code.len();
    if k == n {
        out.push(decode_lehmer(code));
        return;
    }
    let max_digit = (n - 1 - k).min(budget);
    for digit in 0..=max_digit {
        code.push(digit);
        extend_codes(n, budget - digit, code, out);
        code.pop();
    }
}

fn decode_lehmer(code: &[usize]) -> Vec<usize> {
    let mut remaining = identity(code.len());
    code.iter().map(|&c| remaining.remove(c)).collect()
}
