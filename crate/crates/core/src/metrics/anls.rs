use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 0.5;

/// Edit distance over Unicode scalar values, two-row dynamic programme.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

/// `1 - lev / max_len` after lowercasing and trimming; two empty strings score 1.
pub fn similarity(gold: &str, pred: &str) -> f64 {
    let (g, p) = (normalize(gold), normalize(pred));
    let len = g.chars().count().max(p.chars().count());
    if len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&g, &p) as f64 / len as f64
}

/// Best thresholded similarity of `pred` against any gold answer.
pub fn anls(gold: &[String], pred: &str, tau: f64) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::Parameter("ANLS needs at least one gold answer".into()));
    }
    Ok(gold
        .iter()
        .map(|a| similarity(a, pred))
        .map(|s| if s >= tau { s } else { 0.0 })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn distances() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("houses", "hoses"), 1);
        assert_eq!(levenshtein("añb", "ab"), 1);
    }

    #[test]
    fn examples() {
        assert_eq!(anls(&v(&["Total Due"]), "  total due ", 0.5).unwrap(), 1.0);
        assert_eq!(anls(&v(&["abcd"]), "wxyz", 0.5).unwrap(), 0.0);
        let s = anls(&v(&["houses"]), "hoses", 0.5).unwrap();
        assert!((s - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(anls(&v(&["abcd", "abcx"]), "abcx", 0.5).unwrap(), 1.0);
        assert!(anls(&[], "x", 0.5).is_err());
    }

    #[test]
    fn threshold_cuts_low_scores() {
        assert_eq!(anls(&v(&["abcd"]), "abxy", 0.5).unwrap(), 0.5);
        assert_eq!(anls(&v(&["abcd"]), "abxy", 0.6).unwrap(), 0.0);
        assert_eq!(anls(&v(&["abcd"]), "axyz", 0.0).unwrap(), 0.25);
    }
}
