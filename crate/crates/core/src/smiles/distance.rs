//! Edit distance.

use alloc::vec::Vec;

/// Levenshtein distance over characters with unit insert, delete and
/// substitute costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = alloc::vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        assert_eq!(levenshtein("CN=C=O", "CN=C=O"), 0);
        assert_eq!(levenshtein("CN=C=O", "CN=C=S"), 1);
        assert_eq!(levenshtein("", "CCO"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }
}
