use super::{DesignFamily, DesignMetadata, MultivariateDesign, PointRole};
use crate::error::{Error, Result};

/// Factor letters; `I` is skipped because it denotes the identity word.
pub(crate) const LETTERS: &[u8] = b"ABCDEFGHJKLMNOPQRSTUVWXYZ";

/// Minimum-aberration generators: for each (d, p) the words (over the first
/// d - p factors) defining the p generated columns.
const GENERATORS: &[(usize, usize, &[&str])] = &[
    (3, 1, &["AB"]),
    (4, 1, &["ABC"]),
    (5, 1, &["ABCD"]),
    (5, 2, &["AB", "AC"]),
    (6, 1, &["ABCDE"]),
    (6, 2, &["ABC", "BCD"]),
    (6, 3, &["AB", "AC", "BC"]),
    (7, 1, &["ABCDEF"]),
    (7, 2, &["ABCD", "ABDE"]),
    (7, 3, &["ABC", "BCD", "ACD"]),
    (7, 4, &["AB", "AC", "BC", "ABC"]),
    (8, 1, &["ABCDEFG"]),
    (8, 2, &["ABCD", "ABEF"]),
    (8, 3, &["ABC", "ABD", "BCDE"]),
    (8, 4, &["BCD", "ACD", "ABC", "ABD"]),
    (9, 1, &["ABCDEFGH"]),
    (9, 2, &["ACDFG", "BCEFG"]),
    (9, 3, &["ABCD", "ACEF", "CDEF"]),
    (9, 4, &["BCDE", "ACDE", "ABDE", "ABCE"]),
    (9, 5, &["ABC", "BCD", "ACD", "ABD", "ABCD"]),
    (10, 1, &["ABCDEFGHJ"]),
    (10, 2, &["ABCDE", "ABCFGH"]),
    (10, 3, &["ABCG", "BCDE", "ACDF"]),
    (10, 4, &["BCDF", "ACDF", "ABDE", "ABCE"]),
    (10, 5, &["ABCD", "ABCE", "ABDE", "ACDE", "BCDE"]),
    (10, 6, &["ABC", "BCD", "ACD", "ABD", "ABCD", "AB"]),
];

/// All (d, p) pairs with a built-in generator set.
pub fn supported_fractions() -> Vec<(usize, usize)> {
    GENERATORS.iter().map(|&(d, p, _)| (d, p)).collect()
}

/// Generator words as bit masks over the base factors.
pub fn generator_words(d: usize, p: usize) -> Result<Vec<u32>> {
    let (_, _, words) = GENERATORS
        .iter()
        .find(|&&(gd, gp, _)| gd == d && gp == p)
        .ok_or_else(|| Error::UnsupportedFraction {
            d,
            p,
            supported: supported_fractions()
                .iter()
                .map(|(d, p)| format!("({d},{p})"))
                .collect::<Vec<_>>()
                .join(" "),
        })?;
    Ok(words.iter().map(|w| word_mask(w)).collect())
}

fn word_mask(word: &str) -> u32 {
    word.bytes()
        .map(|c| 1u32 << LETTERS.iter().position(|&l| l == c).expect("generator letter"))
        .fold(0, |a, b| a | b)
}

fn mask_word(mask: u32) -> String {
    (0..LETTERS.len())
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| LETTERS[i] as char)
        .collect()
}

/// Row `i` of the lexicographic 2^k factorial: first factor varies slowest.
fn two_level_row(i: usize, k: usize) -> Vec<f64> {
    (0..k).map(|j| if i >> (k - 1 - j) & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

pub(crate) fn two_level_rows(k: usize) -> Vec<Vec<f64>> {
    (0..1usize << k).map(|i| two_level_row(i, k)).collect()
}

/// All 2^d combinations of ±1.
pub fn full_factorial_2(d: usize) -> Result<MultivariateDesign> {
    if !(1..=20).contains(&d) {
        return Err(Error::InvalidArgument(format!("full 2^d factorial needs 1 <= d <= 20, got {d}")));
    }
    let rows = two_level_rows(d);
    let roles = vec![PointRole::Factorial; rows.len()];
    MultivariateDesign::build(rows, roles, DesignFamily::Factorial2, DesignMetadata::None)
}

/// Rows of a regular 2^(d-p) fraction and the generator strings.
pub(crate) fn fractional_rows(d: usize, p: usize) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let words = generator_words(d, p)?;
    let k = d - p;
    let rows = two_level_rows(k)
        .into_iter()
        .map(|mut row| {
            for w in &words {
                let v: f64 = (0..k).filter(|j| w >> j & 1 == 1).map(|j| row[j]).product();
                row.push(v);
            }
            row
        })
        .collect();
    let generators = words
        .iter()
        .enumerate()
        .map(|(t, w)| format!("{}={}", LETTERS[k + t] as char, mask_word(*w)))
        .collect();
    Ok((rows, generators))
}

/// Regular 2^(d-p) fraction from the built-in minimum-aberration table.
pub fn fractional_factorial(d: usize, p: usize) -> Result<MultivariateDesign> {
    if p == 0 || p >= d {
        return Err(Error::InvalidArgument(format!("fractional design needs 1 <= p < d, got d={d}, p={p}")));
    }
    let (rows, generators) = fractional_rows(d, p)?;
    let roles = vec![PointRole::Factorial; rows.len()];
    MultivariateDesign::build(
        rows,
        roles,
        DesignFamily::Fractional2,
        DesignMetadata::Fractional { p, generators },
    )
}

/// All 3^d combinations of {-1, 0, +1}.
pub fn full_factorial_3(d: usize) -> Result<MultivariateDesign> {
    if !(1..=12).contains(&d) {
        return Err(Error::InvalidArgument(format!("full 3^d factorial needs 1 <= d <= 12, got {d}")));
    }
    let n = 3usize.pow(d as u32);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|mut i| {
            let mut row = vec![0.0; d];
            for j in (0..d).rev() {
                row[j] = (i % 3) as f64 - 1.0;
                i /= 3;
            }
            row
        })
        .collect();
    let roles = vec![PointRole::Factorial; n];
    MultivariateDesign::build(rows, roles, DesignFamily::Factorial3, DesignMetadata::None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{design_matrix, ModelOrder};

    fn column_sums_zero(design: &MultivariateDesign) -> bool {
        (0..design.d()).all(|j| design.points().column(j).iter().sum::<f64>() == 0.0)
    }

    #[test]
    fn two_by_two_enumeration() {
        let d = full_factorial_2(2).unwrap();
        let rows: Vec<Vec<f64>> = (0..4).map(|i| d.point(i).to_vec()).collect();
        assert_eq!(rows, vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn sizes_and_balance() {
        for d in 1..=10 {
            let f = full_factorial_2(d).unwrap();
            assert_eq!(f.n(), 1 << d);
            assert!(column_sums_zero(&f));
        }
        assert_eq!(full_factorial_2(8).unwrap().n(), 256);
        assert!(full_factorial_2(0).is_err());
        assert!(full_factorial_2(21).is_err());
        for d in 1..=6 {
            let f = full_factorial_3(d).unwrap();
            assert_eq!(f.n(), 3usize.pow(d as u32));
            assert!(column_sums_zero(&f));
        }
        let three = full_factorial_3(1).unwrap();
        assert_eq!(three.points().column(0), vec![-1.0, 0.0, 1.0]);
        assert_eq!(full_factorial_3(2).unwrap().n(), 9);
        assert!(full_factorial_3(13).is_err());
    }

    #[test]
    fn half_fraction_of_three_factors() {
        let f = fractional_factorial(3, 1).unwrap();
        assert_eq!(f.n(), 4);
        for i in 0..4 {
            let r = f.point(i);
            assert_eq!(r[2], r[0] * r[1]);
        }
        match f.metadata() {
            DesignMetadata::Fractional { p, generators } => {
                assert_eq!(*p, 1);
                assert_eq!(generators, &["C=AB".to_string()]);
            }
            other => panic!("unexpected metadata {other:?}"),
        }
    }

    #[test]
    fn every_table_fraction_is_first_order_orthogonal() {
        for (d, p) in supported_fractions() {
            let f = fractional_factorial(d, p).unwrap();
            assert_eq!(f.n(), 1 << (d - p));
            assert!(column_sums_zero(&f));
            let xtx = design_matrix(&f, ModelOrder::First).entries.gram();
            for i in 0..=d {
                for j in 0..=d {
                    let e = if i == j { f.n() as f64 } else { 0.0 };
                    assert_eq!(xtx[(i, j)], e, "({d},{p}) entry ({i},{j})");
                }
            }
        }
        assert_eq!(fractional_factorial(10, 5).unwrap().n(), 32);
    }

    #[test]
    fn unknown_pairs_list_the_table() {
        let err = fractional_factorial(8, 5).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(10,5)"), "{msg}");
        assert!(fractional_factorial(4, 0).is_err());
        assert!(fractional_factorial(4, 4).is_err());
    }

    /// Wordlength pattern (A_1, A_2, ...) of the defining contrast subgroup
    /// spanned by `words` (each including its generated letter).
    fn wordlength_pattern(words: &[u32], d: usize) -> Vec<usize> {
        let p = words.len();
        let mut pattern = vec![0; d + 1];
        for subset in 1u32..(1 << p) {
            let w = (0..p).filter(|t| subset >> t & 1 == 1).fold(0, |acc, t| acc ^ words[t]);
            pattern[w.count_ones() as usize] += 1;
        }
        pattern
    }

    fn defining_words(base: &[u32], k: usize) -> Vec<u32> {
        base.iter().enumerate().map(|(t, w)| w | 1 << (k + t)).collect()
    }

    /// Smallest wordlength pattern over every choice of p distinct
    /// interaction columns of the k base factors.
    fn brute_force_min_aberration(d: usize, p: usize) -> Vec<usize> {
        let k = d - p;
        let candidates: Vec<u32> = (1u32..(1 << k)).filter(|m| m.count_ones() >= 2).collect();
        let mut best: Option<Vec<usize>> = None;
        let mut chosen = Vec::with_capacity(p);
        fn recurse(
            start: usize,
            p: usize,
            k: usize,
            d: usize,
            candidates: &[u32],
            chosen: &mut Vec<u32>,
            best: &mut Option<Vec<usize>>,
        ) {
            if chosen.len() == p {
                let pattern = wordlength_pattern(&defining_words(chosen, k), d);
                if best.as_ref().map_or(true, |b| pattern < *b) {
                    *best = Some(pattern);
                }
                return;
            }
            for i in start..candidates.len() {
                chosen.push(candidates[i]);
                recurse(i + 1, p, k, d, candidates, chosen, best);
                chosen.pop();
            }
        }
        recurse(0, p, k, d, &candidates, &mut chosen, &mut best);
        best.expect("at least one candidate set")
    }

    #[test]
    fn table_entries_have_minimum_aberration() {
        for (d, p) in supported_fractions() {
            let k = d - p;
            let table = wordlength_pattern(&defining_words(&generator_words(d, p).unwrap(), k), d);
            let best = brute_force_min_aberration(d, p);
            assert_eq!(table, best, "2^({d}-{p})");
        }
    }
}
