use std::fmt;

use crate::syntax::{parse_pexp, parse_sexp, tokenize_linear};

use super::DatasetTurn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Style {
    Original,
    Simplified,
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Style::Original => "original",
            Style::Simplified => "simplified",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthStats {
    pub style: Style,
    /// (quantile, token count), in the order requested.
    pub quantiles: Vec<(f64, usize)>,
    pub n: usize,
}

impl LengthStats {
    pub fn get(&self, q: f64) -> Option<usize> {
        self.quantiles.iter().find(|(k, _)| *k == q).map(|(_, v)| *v)
    }
}

impl fmt::Display for LengthStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<10} n={:<4}", self.style, self.n)?;
        for (q, v) in &self.quantiles {
            write!(f, " q{q:.2}={v:<4}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("no turns to measure")]
    EmptySample,
    #[error("quantile {0} is outside (0, 1]")]
    BadQuantile(f64),
    #[error("turn {0} has no {1} annotation")]
    Missing(String, Style),
    #[error("turn {0}: {1}")]
    Parse(String, String),
}

/// Token count of one turn's annotation in the given style.
pub fn token_length(turn: &DatasetTurn, style: Style) -> Result<usize, StatsError> {
    let parsed = match style {
        Style::Original => parse_sexp(&turn.original),
        Style::Simplified => {
            let text = turn.simplified.as_deref().ok_or_else(|| StatsError::Missing(turn.turn_id(), style))?;
            parse_pexp(text)
        }
    };
    let e = parsed.map_err(|e| StatsError::Parse(turn.turn_id(), e.to_string()))?;
    Ok(tokenize_linear(&e).len())
}

/// Nearest-rank quantiles: the value at 1-based rank ceil(q * n).
pub fn length_quantiles(turns: &[DatasetTurn], style: Style, qs: &[f64]) -> Result<LengthStats, StatsError> {
    if turns.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if let Some(q) = qs.iter().find(|q| !(**q > 0.0 && **q <= 1.0)) {
        return Err(StatsError::BadQuantile(*q));
    }
    let lengths = turns.iter().map(|t| token_length(t, style)).collect::<Result<Vec<_>, _>>()?;
    Ok(LengthStats { style, quantiles: nearest_rank_quantiles(&lengths, qs), n: lengths.len() })
}

/// Nearest-rank quantiles of a non-empty sample, in the order of `qs`.
pub fn nearest_rank_quantiles(sample: &[usize], qs: &[f64]) -> Vec<(f64, usize)> {
    let mut sorted = sample.to_vec();
    sorted.sort_unstable();
    qs.iter().map(|&q| (q, sorted[nearest_rank(q, sorted.len()) - 1])).collect()
}

fn nearest_rank(q: f64, n: usize) -> usize {
    // The epsilon keeps products like 0.7 * 10 from rounding up a rank.
    let rank = (q * n as f64 - 1e-9).ceil() as usize;
    rank.clamp(1, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn(i: usize, simplified: &str) -> DatasetTurn {
        DatasetTurn {
            dialogue_id: "d".into(),
            turn_index: i,
            utterance: String::new(),
            original: "(f)".into(),
            simplified: Some(simplified.into()),
        }
    }

    // Lengths 1, 10 and 16 under tokenize_linear.
    fn three() -> Vec<DatasetTurn> {
        vec![turn(0, "x"), turn(1, "f(a, b, c, d)"), turn(2, "f(g(a), h(b), k=c)")]
    }

    #[test]
    fn three_point_sample() {
        assert_eq!(
            nearest_rank_quantiles(&[20, 2, 11], &[0.25, 0.5, 0.75]),
            vec![(0.25, 2), (0.5, 11), (0.75, 20)]
        );
    }

    #[test]
    fn quantiles_over_turns() {
        let lens: Vec<_> = three().iter().map(|t| token_length(t, Style::Simplified).unwrap()).collect();
        assert_eq!(lens, vec![1, 10, 16]);
        let s = length_quantiles(&three(), Style::Simplified, &[0.25, 0.5, 0.75]).unwrap();
        assert_eq!(s.quantiles, vec![(0.25, 1), (0.5, 10), (0.75, 16)]);
        assert_eq!(s.n, 3);
    }

    #[test]
    fn nearest_rank_matches_definition() {
        assert_eq!(nearest_rank(0.25, 3), 1);
        assert_eq!(nearest_rank(0.5, 3), 2);
        assert_eq!(nearest_rank(0.75, 3), 3);
        assert_eq!(nearest_rank(0.7, 10), 7);
        assert_eq!(nearest_rank(0.5, 4), 2);
        assert_eq!(nearest_rank(1.0, 4), 4);
        assert_eq!(nearest_rank(0.01, 4), 1);
    }

    #[test]
    fn errors() {
        assert_eq!(length_quantiles(&[], Style::Original, &[0.5]), Err(StatsError::EmptySample));
        assert_eq!(length_quantiles(&three(), Style::Original, &[0.0]), Err(StatsError::BadQuantile(0.0)));
        let mut t = three();
        t[1].simplified = None;
        assert!(matches!(length_quantiles(&t, Style::Simplified, &[0.5]), Err(StatsError::Missing(..))));
    }

    #[test]
    fn permutation_invariant() {
        let mut t = three();
        let a = length_quantiles(&t, Style::Simplified, &[0.25, 0.5, 0.75]).unwrap();
        t.reverse();
        assert_eq!(a, length_quantiles(&t, Style::Simplified, &[0.25, 0.5, 0.75]).unwrap());
    }
}
