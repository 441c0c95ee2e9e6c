use std::collections::HashMap;
use std::io::BufRead;

use rand::Rng;

use super::{DataError, Vocabulary};
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coverage {
    /// Vocabulary words (reserved entries excluded) found in the file.
    pub found: usize,
    pub total: usize,
    pub duplicate_lines: usize,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.found as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct PretrainedEmbeddings {
    /// `|V_word| × dim`, rows indexed by word id.
    pub matrix: Matrix,
    pub coverage: Coverage,
}

/// Reads word vectors in text format (`<count> <dim>` header, then
/// `word v1 ... v_dim`). Vocabulary words missing from the file get rows
/// from `U[-0.5/dim, 0.5/dim]`.
pub fn load_pretrained_embeddings<R: BufRead, G: Rng + ?Sized>(
    reader: R,
    vocab: &Vocabulary,
    dim: usize,
    rng: &mut G,
) -> Result<PretrainedEmbeddings, DataError> {
    let mut matrix = Matrix::uniform(vocab.num_words(), dim, 0.5 / dim as f64, rng);
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut duplicate_lines = 0;

    let mut lines = reader.lines().enumerate();
    if let Some((_, header)) = lines.next() {
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let declared = match fields.as_slice() {
            [_, d] => d
                .parse::<usize>()
                .map_err(|_| DataError::parse(1, "expected `<count> <dim>` header"))?,
            _ => return Err(DataError::parse(1, "expected `<count> <dim>` header")),
        };
        if declared != dim {
            return Err(DataError::Dimension {
                line: 1,
                expected: dim,
                found: declared,
            });
        }
    }
    for (no, line) in lines {
        let line_no = no + 1;
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let values: Vec<f64> = fields
            .map(|v| v.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| DataError::parse(line_no, "non-numeric vector component"))?;
        if values.len() != dim {
            return Err(DataError::Dimension {
                line: line_no,
                expected: dim,
                found: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(DataError::parse(line_no, "non-finite vector component"));
        }
        let Some(id) = vocab.word_id(word) else { continue };
        if id == Vocabulary::UNK || id == Vocabulary::EOS {
            continue;
        }
        if let Some(prev) = seen.insert(id, line_no) {
            duplicate_lines += 1;
            log::warn!("word `{word}` repeated on lines {prev} and {line_no}; keeping the last");
        }
        matrix.row_mut(id).copy_from_slice(&values);
    }
    Ok(PretrainedEmbeddings {
        matrix,
        coverage: Coverage {
            found: seen.len(),
            total: vocab.num_words().saturating_sub(2),
            duplicate_lines,
        },
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::frames::{build_vocabularies, ArgumentUnit, FrameSequence, WordForm};

    fn vocab() -> Vocabulary {
        let f = FrameSequence::new("t", "swam", vec![ArgumentUnit::new("Phelps", "A0")]).unwrap();
        build_vocabularies(&[f], 1, WordForm::Surface)
    }

    #[test]
    fn full_coverage_copies_rows() {
        let v = vocab();
        let text = "2 3\nswam 0.1 0.2 0.3\nPhelps -1 0 1\n";
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = load_pretrained_embeddings(text.as_bytes(), &v, 3, &mut rng).unwrap();
        assert_eq!(e.coverage.fraction(), 1.0);
        assert_eq!(e.matrix.row(v.word_id("swam").unwrap()), &[0.1, 0.2, 0.3]);
        assert_eq!(e.matrix.row(v.word_id("Phelps").unwrap()), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_file_is_random() {
        let v = vocab();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = load_pretrained_embeddings("".as_bytes(), &v, 4, &mut rng).unwrap();
        assert_eq!(e.coverage.found, 0);
        assert_eq!(e.coverage.fraction(), 0.0);
        assert!(e.matrix.as_slice().iter().all(|x| x.abs() <= 0.125));
        assert!(e.matrix.as_slice().iter().any(|&x| x != 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let v = vocab();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = load_pretrained_embeddings("1 3\nswam 1 2 3\n".as_bytes(), &v, 50, &mut rng).unwrap_err();
        assert!(matches!(
            err,
            DataError::Dimension {
                expected: 50,
                found: 3,
                ..
            }
        ));
        let err = load_pretrained_embeddings("1 3\nswam 1 2\n".as_bytes(), &v, 3, &mut rng).unwrap_err();
        assert!(matches!(err, DataError::Dimension { line: 2, .. }));
    }

    #[test]
    fn duplicates_last_wins() {
        let v = vocab();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let text = "3 2\nswam 1 1\nswam 2 2\nunrelated 5 5\n";
        let e = load_pretrained_embeddings(text.as_bytes(), &v, 2, &mut rng).unwrap();
        assert_eq!(e.matrix.row(v.word_id("swam").unwrap()), &[2.0, 2.0]);
        assert_eq!(e.coverage.duplicate_lines, 1);
        assert_eq!(e.coverage.found, 1);
        assert_eq!(e.coverage.total, 2);
    }
}
