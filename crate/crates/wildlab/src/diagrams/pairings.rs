//! Enumeration of complete leaf pairings (the Wick sum index set).

use super::{DecoratedContractedForest, DiagramError};

/// All perfect matchings of the forest's leaves, in a deterministic order:
/// the smallest unmatched leaf is paired with each larger leaf in turn.
/// There are `(2m-1)!!` of them for `2m` leaves.
pub fn enumerate_pairings(
    f: &DecoratedContractedForest,
) -> Result<Vec<Vec<(usize, usize)>>, DiagramError> {
    let leaves = f.leaves();
    pairings_of(&leaves)
}

/// Perfect matchings of an arbitrary id list.
pub fn pairings_of(items: &[usize]) -> Result<Vec<Vec<(usize, usize)>>, DiagramError> {
    if items.len() % 2 != 0 {
        return Err(DiagramError::OddLeafCount(items.len()));
    }
    let mut sorted: Vec<usize> = items.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    let mut current = Vec::new();
    recurse(&sorted, &mut current, &mut out);
    Ok(out)
}

fn recurse(rest: &[usize], current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
    if rest.is_empty() {
        out.push(current.clone());
        return;
    }
    let first = rest[0];
    for i in 1..rest.len() {
        current.push((first, rest[i]));
        let remaining: Vec<usize> = rest[1..]
            .iter()
            .copied()
            .filter(|&x| x != rest[i])
            .collect();
        recurse(&remaining, current, out);
        current.pop();
    }
}

/// `(2m-1)!!` — the number of complete pairings of `2m` points.
pub fn pairing_count(two_m: usize) -> u128 {
    if two_m % 2 != 0 {
        return 0;
    }
    let mut acc: u128 = 1;
    let mut k = two_m as u128;
    while k > 1 {
        acc *= k - 1;
        k -= 2;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_double_factorial() {
        assert_eq!(pairings_of(&[0, 1]).unwrap().len(), 1);
        assert_eq!(pairings_of(&[0, 1, 2, 3]).unwrap().len(), 3);
        assert_eq!(pairings_of(&(0..8).collect::<Vec<_>>()).unwrap().len(), 105);
        for m in 1..=6 {
            let pts: Vec<usize> = (0..2 * m).collect();
            assert_eq!(pairings_of(&pts).unwrap().len() as u128, pairing_count(2 * m));
        }
        assert!(pairings_of(&[0, 1, 2]).is_err());
    }

    #[test]
    fn pairings_are_unique_and_complete() {
        let all = pairings_of(&[0, 1, 2, 3, 4, 5]).unwrap();
        assert_eq!(all.len(), 15);
        for p in &all {
            let mut seen: Vec<usize> = p.iter().flat_map(|&(a, b)| [a, b]).collect();
            seen.sort_unstable();
            assert_eq!(seen, vec![0, 1, 2, 3, 4, 5]);
        }
        let mut keys: Vec<String> = all.iter().map(|p| format!("{p:?}")).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 15);
    }
}
