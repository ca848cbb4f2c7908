//! First-seen tokenization of categorical cells: per column, each
//! distinct string gets the next integer token starting at 1; 0 is
//! reserved for absent cells and padding. Numeric cells pass through.

use serde::{Deserialize, Serialize};

use super::schema::{Cell, ColumnKind, RawFeatureRow};
use super::FeatureError;

/// Per-column token tables. Numeric columns carry no table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenVocabulary {
    /// `Some(values)` for categorical columns; token of `values[i]` is `i + 1`.
    pub per_column: Vec<Option<Vec<String>>>,
}

impl TokenVocabulary {
    pub fn new(kinds: &[ColumnKind]) -> Self {
        Self {
            per_column: kinds
                .iter()
                .map(|k| match k {
                    ColumnKind::Categorical => Some(Vec::new()),
                    ColumnKind::Numeric => None,
                })
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.per_column.len()
    }

    fn check_width(&self, row_width: usize) -> Result<(), FeatureError> {
        if self.width() != row_width {
            return Err(FeatureError::VocabularyWidthMismatch {
                vocab: self.width(),
                row: row_width,
            });
        }
        Ok(())
    }

    /// Token for a value, appending it if unseen. Tokens are 1-based.
    fn intern(&mut self, column: usize, value: &str) -> f64 {
        let table = self.per_column[column].get_or_insert_with(Vec::new);
        let idx = match table.iter().position(|v| v == value) {
            Some(i) => i,
            None => {
                table.push(value.to_string());
                table.len() - 1
            }
        };
        (idx + 1) as f64
    }

    /// Token for a value without mutating; unseen values map to 0.
    fn lookup(&self, column: usize, value: &str) -> f64 {
        match &self.per_column[column] {
            Some(table) => match table.iter().position(|v| v == value) {
                Some(i) => (i + 1) as f64,
                None => 0.0,
            },
            None => 0.0,
        }
    }
}

fn encode_cell(
    cell: &Cell,
    column: usize,
    vocab: &mut TokenVocabulary,
    frozen: bool,
) -> f64 {
    match cell {
        Cell::Numeric(v) => *v,
        Cell::Absent => 0.0,
        Cell::Categorical(s) => {
            if frozen {
                vocab.lookup(column, s)
            } else {
                vocab.intern(column, s)
            }
        }
    }
}

/// Tokenize rows, growing the vocabulary as new values appear.
pub fn tokenize(
    rows: &[RawFeatureRow],
    vocab: &mut TokenVocabulary,
) -> Result<Vec<Vec<f64>>, FeatureError> {
    rows.iter()
        .map(|row| {
            vocab.check_width(row.cells.len())?;
            Ok(row
                .cells
                .iter()
                .enumerate()
                .map(|(i, c)| encode_cell(c, i, vocab, false))
                .collect())
        })
        .collect()
}

/// Tokenize against a frozen vocabulary; unseen values map to 0.
pub fn tokenize_frozen(
    rows: &[RawFeatureRow],
    vocab: &TokenVocabulary,
) -> Result<Vec<Vec<f64>>, FeatureError> {
    let mut scratch = vocab.clone();
    rows.iter()
        .map(|row| {
            scratch.check_width(row.cells.len())?;
            Ok(row
                .cells
                .iter()
                .enumerate()
                .map(|(i, c)| encode_cell(c, i, &mut scratch, true))
                .collect())
        })
        .collect()
}

/// Inverse lookup: categorical tokens back to their strings, numeric
/// values passed through, token 0 in a categorical column to absent.
pub fn detokenize(
    rows: &[Vec<f64>],
    vocab: &TokenVocabulary,
) -> Result<Vec<RawFeatureRow>, FeatureError> {
    rows.iter()
        .map(|row| {
            vocab.check_width(row.len())?;
            let cells = row
                .iter()
                .enumerate()
                .map(|(i, v)| match &vocab.per_column[i] {
                    None => Cell::Numeric(*v),
                    Some(table) => {
                        let token = *v as usize;
                        if token == 0 {
                            Cell::Absent
                        } else {
                            table
                                .get(token - 1)
                                .map(|s| Cell::Categorical(s.clone()))
                                .unwrap_or(Cell::Absent)
                        }
                    }
                })
                .collect();
            Ok(RawFeatureRow { cells })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds() -> Vec<ColumnKind> {
        vec![ColumnKind::Categorical, ColumnKind::Numeric, ColumnKind::Categorical]
    }

    fn row(a: &str, n: f64, b: Option<&str>) -> RawFeatureRow {
        RawFeatureRow {
            cells: vec![
                Cell::Categorical(a.to_string()),
                Cell::Numeric(n),
                match b {
                    Some(s) => Cell::Categorical(s.to_string()),
                    None => Cell::Absent,
                },
            ],
        }
    }

    #[test]
    fn first_seen_value_gets_token_one() {
        let mut vocab = TokenVocabulary::new(&kinds());
        let out = tokenize(&[row("v", 2.5, None)], &mut vocab).unwrap();
        assert_eq!(out, vec![vec![1.0, 2.5, 0.0]]);
    }

    #[test]
    fn repeated_values_share_tokens() {
        let mut vocab = TokenVocabulary::new(&kinds());
        let rows = vec![row("v", 1.0, Some("x")), row("w", 2.0, Some("x")), row("v", 3.0, None)];
        let out = tokenize(&rows, &mut vocab).unwrap();
        assert_eq!(out[0][0], 1.0);
        assert_eq!(out[1][0], 2.0);
        assert_eq!(out[2][0], 1.0);
        assert_eq!(out[0][2], out[1][2]);
    }

    #[test]
    fn numeric_cells_pass_through() {
        let mut vocab = TokenVocabulary::new(&kinds());
        let out = tokenize(&[row("v", -17.25, None)], &mut vocab).unwrap();
        assert_eq!(out[0][1], -17.25);
    }

    #[test]
    fn frozen_vocabulary_maps_unseen_to_zero() {
        let mut vocab = TokenVocabulary::new(&kinds());
        tokenize(&[row("seen", 0.0, Some("kept"))], &mut vocab).unwrap();
        let out = tokenize_frozen(&[row("unseen", 5.0, Some("kept"))], &vocab).unwrap();
        assert_eq!(out, vec![vec![0.0, 5.0, 1.0]]);
        // The vocabulary did not grow.
        assert_eq!(vocab.per_column[0].as_ref().unwrap().len(), 1);
    }

    #[test]
    fn detokenize_recovers_categories() {
        let mut vocab = TokenVocabulary::new(&kinds());
        let rows =
            vec![row("alpha", 1.5, Some("beta")), row("gamma", 2.5, None), row("alpha", 3.5, Some("beta"))];
        let tokens = tokenize(&rows, &mut vocab).unwrap();
        let back = detokenize(&tokens, &vocab).unwrap();
        assert_eq!(back, rows);
    }

    proptest! {
        #[test]
        fn tokens_are_contiguous_and_bijective(
            values in proptest::collection::vec("[a-d]{1,2}", 1..60),
        ) {
            let kinds = vec![ColumnKind::Categorical];
            let rows: Vec<RawFeatureRow> = values
                .iter()
                .map(|v| RawFeatureRow { cells: vec![Cell::Categorical(v.clone())] })
                .collect();
            let mut vocab = TokenVocabulary::new(&kinds);
            let tokens = tokenize(&rows, &mut vocab).unwrap();
            let table = vocab.per_column[0].as_ref().unwrap();

            // Tokens form the contiguous range 1..=|table|.
            let mut seen: Vec<u64> = tokens.iter().map(|r| r[0] as u64).collect();
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen, (1..=table.len() as u64).collect::<Vec<_>>());

            // Equal raw values iff equal tokens.
            for (i, a) in values.iter().enumerate() {
                for (j, b) in values.iter().enumerate() {
                    prop_assert_eq!(a == b, tokens[i][0] == tokens[j][0]);
                }
            }

            // Round trip.
            let back = detokenize(&tokens, &vocab).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}
