//! Corpus readers.
//!
//! Frame-record lines (one frame per line, UTF-8):
//!
//! ```text
//! source_id <TAB> pred_word <TAB> word:LABEL:token_index <TAB> ...
//! ```
//!
//! Argument triples are split from the right, so words may contain `:`.
//! Arguments are re-sorted by token index. A `#form=lemma` or
//! `#form=surface` header declares the word convention (default surface);
//! other `#` lines and blank lines are ignored.
//!
//! Column corpora follow CoNLL-2009 (blank-line separated sentences, at
//! least 14 tab-separated columns):
//!
//! | column | field    | use                                        |
//! |--------|----------|--------------------------------------------|
//! | 0      | ID       | token index                                |
//! | 1      | FORM     | lowercased when no lemma is available      |
//! | 2      | LEMMA    | word of every unit, when not `_`           |
//! | 3      | PLEMMA   | fallback when LEMMA is `_`                 |
//! | 13     | PRED     | predicate when not `_` (sense suffix dropped) |
//! | 14..   | APRED_j  | argument label for the j-th predicate      |
//!
//! Column corpora are dependency based, so each argument cell already marks
//! the argument head.

use std::io::{BufRead, Write};

use super::{ArgumentUnit, DataError, FrameSequence, WordForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameFormat {
    Records,
    Columns,
}

impl std::str::FromStr for FrameFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "records" => Ok(FrameFormat::Records),
            "columns" | "conll" | "conll2009" => Ok(FrameFormat::Columns),
            other => Err(format!("unknown frame format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Sentences with this many tokens or more are skipped (column corpora).
    pub max_sentence_tokens: Option<usize>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_sentence_tokens: Some(100),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedCorpus {
    pub frames: Vec<FrameSequence>,
    pub word_form: WordForm,
    pub sentences: usize,
    pub skipped_sentences: usize,
}

pub fn parse_frames<R: BufRead>(
    reader: R,
    format: FrameFormat,
    options: ParseOptions,
) -> Result<ParsedCorpus, DataError> {
    match format {
        FrameFormat::Records => parse_records(reader),
        FrameFormat::Columns => parse_columns(reader, options),
    }
}

fn parse_records<R: BufRead>(reader: R) -> Result<ParsedCorpus, DataError> {
    let mut frames = Vec::new();
    let mut word_form = WordForm::Surface;
    for (no, line) in reader.lines().enumerate() {
        let line_no = no + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(form) = comment.trim().strip_prefix("form=") {
                word_form = form.parse().map_err(|e: String| DataError::parse(line_no, e))?;
            }
            continue;
        }
        let mut fields = line.split('\t');
        let source_id = fields.next().unwrap_or_default();
        let predicate = fields
            .next()
            .filter(|p| !p.is_empty())
            .ok_or_else(|| DataError::parse(line_no, "expected source_id and pred_word"))?;
        let mut arguments = Vec::new();
        for field in fields {
            if field.is_empty() {
                continue;
            }
            let mut parts = field.rsplitn(3, ':');
            let (index, label, word) = match (parts.next(), parts.next(), parts.next()) {
                (Some(i), Some(l), Some(w)) => (i, l, w),
                _ => {
                    return Err(DataError::parse(
                        line_no,
                        format!("argument `{field}` is not word:LABEL:token_index"),
                    ))
                }
            };
            let index: usize = index
                .parse()
                .map_err(|_| DataError::parse(line_no, format!("bad token index in `{field}`")))?;
            if word.is_empty() || label.is_empty() {
                return Err(DataError::parse(line_no, format!("empty word or label in `{field}`")));
            }
            arguments.push((index, ArgumentUnit::new(word, label)));
        }
        arguments.sort_by_key(|(index, _)| *index);
        let arguments = arguments.into_iter().map(|(_, a)| a).collect();
        let frame = FrameSequence::new(source_id, predicate, arguments)
            .map_err(|e| DataError::parse(line_no, e.to_string()))?;
        frames.push(frame);
    }
    let sentences = frames.len();
    Ok(ParsedCorpus {
        frames,
        word_form,
        sentences,
        skipped_sentences: 0,
    })
}

const COL_ID: usize = 0;
const COL_FORM: usize = 1;
const COL_LEMMA: usize = 2;
const COL_PLEMMA: usize = 3;
const COL_PRED: usize = 13;
const COL_APRED: usize = 14;

struct ColumnRow {
    line: usize,
    cells: Vec<String>,
}

fn parse_columns<R: BufRead>(reader: R, options: ParseOptions) -> Result<ParsedCorpus, DataError> {
    let mut corpus = ParsedCorpus {
        frames: Vec::new(),
        word_form: WordForm::Lemma,
        sentences: 0,
        skipped_sentences: 0,
    };
    let mut block: Vec<ColumnRow> = Vec::new();
    let mut saw_lemma = false;
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            if !block.is_empty() {
                saw_lemma |= flush_sentence(&mut block, &mut corpus, options)?;
            }
            continue;
        }
        let cells: Vec<String> = if trimmed.contains('\t') {
            trimmed.split('\t').map(str::to_owned).collect()
        } else {
            trimmed.split_whitespace().map(str::to_owned).collect()
        };
        if cells.len() < COL_APRED {
            return Err(DataError::parse(
                no + 1,
                format!("expected at least {COL_APRED} columns, found {}", cells.len()),
            ));
        }
        block.push(ColumnRow { line: no + 1, cells });
    }
    if !block.is_empty() {
        saw_lemma |= flush_sentence(&mut block, &mut corpus, options)?;
    }
    if !saw_lemma && corpus.sentences > 0 {
        corpus.word_form = WordForm::Surface;
    }
    Ok(corpus)
}

/// Returns whether any lemma column was populated.
fn flush_sentence(
    block: &mut Vec<ColumnRow>,
    corpus: &mut ParsedCorpus,
    options: ParseOptions,
) -> Result<bool, DataError> {
    let rows = std::mem::take(block);
    corpus.sentences += 1;
    let sentence_no = corpus.sentences;
    if let Some(max) = options.max_sentence_tokens {
        if rows.len() >= max {
            corpus.skipped_sentences += 1;
            return Ok(false);
        }
    }
    let width = rows[0].cells.len();
    if let Some(bad) = rows.iter().find(|r| r.cells.len() != width) {
        return Err(DataError::parse(
            bad.line,
            format!("expected {width} columns, found {}", bad.cells.len()),
        ));
    }
    let mut saw_lemma = false;
    let words: Vec<String> = rows
        .iter()
        .map(|r| {
            let lemma = &r.cells[COL_LEMMA];
            let plemma = &r.cells[COL_PLEMMA];
            if lemma != "_" {
                saw_lemma = true;
                lemma.clone()
            } else if plemma != "_" {
                saw_lemma = true;
                plemma.clone()
            } else {
                r.cells[COL_FORM].to_lowercase()
            }
        })
        .collect();
    let predicates: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].cells[COL_PRED] != "_").collect();
    let apred_columns = width - COL_APRED;
    if predicates.len() != apred_columns {
        return Err(DataError::parse(
            rows[0].line,
            format!(
                "sentence has {} predicates but {apred_columns} argument columns",
                predicates.len()
            ),
        ));
    }
    for (j, &p) in predicates.iter().enumerate() {
        let col = COL_APRED + j;
        let arguments = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.cells[col] != "_")
            .map(|(i, r)| ArgumentUnit::new(words[i].clone(), r.cells[col].clone()))
            .collect();
        let source_id = format!("s{sentence_no}:{}", rows[p].cells[COL_ID]);
        let frame = FrameSequence::new(source_id, words[p].clone(), arguments)
            .map_err(|e| DataError::parse(rows[p].line, e.to_string()))?;
        corpus.frames.push(frame);
    }
    Ok(saw_lemma)
}

/// Writes frames as frame-record lines, numbering arguments by position.
pub fn write_frame_records<W: Write>(mut out: W, frames: &[FrameSequence], word_form: WordForm) -> std::io::Result<()> {
    writeln!(out, "#form={word_form}")?;
    for frame in frames {
        write!(out, "{}\t{}", frame.source_id(), frame.predicate())?;
        for (i, arg) in frame.arguments().iter().enumerate() {
            write!(out, "\t{}:{}:{}", arg.word, arg.label, i + 1)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(text: &str) -> ParsedCorpus {
        parse_frames(text.as_bytes(), FrameFormat::Records, ParseOptions::default()).unwrap()
    }

    #[test]
    fn record_line() {
        let c = records("s1\tswam\tPhelps:A0:1\tOlympics:AM-LOC:5\n");
        assert_eq!(c.frames.len(), 1);
        assert_eq!(c.frames[0].to_string(), "[swam:PRED, Phelps:A0, Olympics:AM-LOC, EOS]");
        assert_eq!(c.word_form, WordForm::Surface);
    }

    #[test]
    fn record_arguments_are_sorted_by_token_index() {
        let c = records("s1\tswam\tOlympics:AM-LOC:5\tPhelps:A0:1\n");
        let hand = records("s1\tswam\tPhelps:A0:1\tOlympics:AM-LOC:5\n");
        assert_eq!(c.frames, hand.frames);
    }

    #[test]
    fn record_zero_arguments_and_colon_words() {
        let c = records("#form=lemma\n\ns1\train\ns2\tsay\t10:30:AM-TMP:3\n");
        assert_eq!(c.word_form, WordForm::Lemma);
        assert_eq!(c.frames[0].len(), 2);
        assert_eq!(c.frames[1].arguments()[0], ArgumentUnit::new("10:30", "AM-TMP"));
    }

    #[test]
    fn record_errors_carry_line_numbers() {
        let err = parse_frames(
            "s1\tswam\tPhelps:A0:1\ns2\tate\tapple-A1\n".as_bytes(),
            FrameFormat::Records,
            ParseOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 2, .. }), "{err}");
        let err = parse_frames(
            "s1\tswam\tPhelps:A0:x\n".as_bytes(),
            FrameFormat::Records,
            ParseOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 1, .. }));
        assert!(parse_frames("s1\n".as_bytes(), FrameFormat::Records, ParseOptions::default()).is_err());
    }

    fn conll_row(id: usize, form: &str, lemma: &str, pred: &str, apreds: &[&str]) -> String {
        let mut cells = vec![
            id.to_string(),
            form.to_string(),
            lemma.to_string(),
            lemma.to_string(),
            "NN".into(),
            "NN".into(),
            "_".into(),
            "_".into(),
            "0".into(),
            "0".into(),
            "ROOT".into(),
            "ROOT".into(),
            if pred == "_" { "_".into() } else { "Y".into() },
            pred.to_string(),
        ];
        cells.extend(apreds.iter().map(|s| s.to_string()));
        cells.join("\t")
    }

    #[test]
    fn column_sentence_with_two_predicates() {
        let text = [
            conll_row(1, "Michael", "michael", "_", &["_", "_"]),
            conll_row(2, "Phelps", "phelps", "_", &["A0", "A0"]),
            conll_row(3, "swam", "swim", "swim.01", &["_", "_"]),
            conll_row(4, "and", "and", "_", &["_", "_"]),
            conll_row(5, "won", "win", "win.01", &["_", "_"]),
            conll_row(6, "gold", "gold", "_", &["_", "A1"]),
        ]
        .join("\n")
            + "\n\n";
        let c = parse_frames(text.as_bytes(), FrameFormat::Columns, ParseOptions::default()).unwrap();
        assert_eq!(c.word_form, WordForm::Lemma);
        assert_eq!(c.frames.len(), 2);
        assert_eq!(c.frames[0].to_string(), "[swim:PRED, phelps:A0, EOS]");
        assert_eq!(c.frames[1].to_string(), "[win:PRED, phelps:A0, gold:A1, EOS]");
        assert_eq!(c.frames[1].source_id(), "s1:5");
    }

    #[test]
    fn column_length_filter() {
        let long: Vec<String> = (1..=100).map(|i| conll_row(i, "x", "x", "_", &[])).collect();
        let short = [conll_row(1, "Rain", "_", "rain.01", &["_"])];
        let text = format!("{}\n\n{}\n", long.join("\n"), short.join("\n"));
        let c = parse_frames(text.as_bytes(), FrameFormat::Columns, ParseOptions::default()).unwrap();
        assert_eq!(c.sentences, 2);
        assert_eq!(c.skipped_sentences, 1);
        assert_eq!(c.frames.len(), 1);
        let off = ParseOptions {
            max_sentence_tokens: None,
        };
        let c = parse_frames(text.as_bytes(), FrameFormat::Columns, off).unwrap();
        assert_eq!(c.skipped_sentences, 0);
    }

    #[test]
    fn column_predicate_mismatch_is_an_error() {
        let text = conll_row(1, "ran", "run", "run.01", &[]) + "\n";
        assert!(parse_frames(text.as_bytes(), FrameFormat::Columns, ParseOptions::default()).is_err());
        assert!(parse_frames("1\tx\n".as_bytes(), FrameFormat::Columns, ParseOptions::default()).is_err());
    }

    #[test]
    fn records_round_trip_through_writer() {
        let c = records("s1\tswam\tPhelps:A0:1\tOlympics:AM-LOC:5\ns2\train\n");
        let mut buf = Vec::new();
        write_frame_records(&mut buf, &c.frames, WordForm::Surface).unwrap();
        let again = records(std::str::from_utf8(&buf).unwrap());
        assert_eq!(again.frames, c.frames);
    }
}
