use std::collections::HashSet;

use isrl::frames::{build_vocabularies, parse_frames, write_frame_records, ParseOptions};
use serde_json::json;

use super::{create, finish, open, output, write_manifest};
use crate::config::{self, existing, PipelineConfig};
use crate::manifest::Manifest;
use crate::{Failure, Global, IngestArgs};

pub fn run(args: IngestArgs, mut config: PipelineConfig, global: &Global) -> anyhow::Result<()> {
    config::set_some(&mut config.paths.corpus, args.corpus);
    config::set_some(&mut config.paths.frames, args.frames);
    config::set_some(&mut config.paths.vocab, args.vocab);
    config::set(&mut config.data.format, args.format);
    config::set(&mut config.data.max_sentence_tokens, args.max_sentence_tokens);
    config::set(&mut config.data.min_count, args.min_count);

    let corpus = existing(&config.paths.corpus, "corpus")?;
    let frames_out = output(&config.paths.frames, "frames")?;
    let vocab_out = output(&config.paths.vocab, "vocab")?;
    let options = ParseOptions {
        max_sentence_tokens: (config.data.max_sentence_tokens > 0).then_some(config.data.max_sentence_tokens),
    };
    let parsed = parse_frames(open(&corpus)?, config.data.format.into(), options)?;
    if parsed.frames.is_empty() {
        return Err(Failure::Input(format!("no frames found in {}", corpus.display())).into());
    }
    let vocab = build_vocabularies(&parsed.frames, config.data.min_count, parsed.word_form);

    let mut arguments = 0usize;
    let mut oov_words = 0usize;
    let mut oov_units = 0usize;
    let mut word_types = HashSet::new();
    for frame in &parsed.frames {
        for arg in frame.arguments() {
            arguments += 1;
            word_types.insert(arg.word.as_str());
            oov_words += usize::from(vocab.word_id(&arg.word).is_none());
            oov_units += usize::from(vocab.unit_id(&arg.word, &arg.label).is_none());
        }
    }
    let rate = |n: usize| {
        if arguments == 0 {
            0.0
        } else {
            n as f64 / arguments as f64
        }
    };

    let mut w = create(&frames_out)?;
    write_frame_records(&mut w, &parsed.frames, parsed.word_form)?;
    finish(w)?;
    let mut w = create(&vocab_out)?;
    vocab.write(&mut w)?;
    finish(w)?;

    println!("sentences            {}", parsed.sentences);
    println!("skipped (too long)   {}", parsed.skipped_sentences);
    println!("frames               {}", parsed.frames.len());
    println!("arguments            {arguments}");
    println!("word form            {}", parsed.word_form);
    println!("argument word types  {}", word_types.len());
    println!("vocabulary words     {}", vocab.num_words());
    println!("vocabulary units     {}", vocab.num_units());
    println!("OOV argument words   {oov_words} ({:.2}%)", 100.0 * rate(oov_words));
    println!("OOV argument units   {oov_units} ({:.2}%)", 100.0 * rate(oov_units));

    let mut manifest = Manifest::new("ingest", &config);
    manifest.input("corpus", &corpus)?;
    manifest.output("frames", &frames_out)?;
    manifest.output("vocab", &vocab_out)?;
    manifest.summary = json!({
        "sentences": parsed.sentences,
        "skipped_sentences": parsed.skipped_sentences,
        "frames": parsed.frames.len(),
        "arguments": arguments,
        "word_form": parsed.word_form.to_string(),
        "vocabulary_words": vocab.num_words(),
        "vocabulary_units": vocab.num_units(),
        "oov_argument_words": oov_words,
        "oov_argument_units": oov_units,
    });
    write_manifest(&manifest, global, &frames_out)
}
