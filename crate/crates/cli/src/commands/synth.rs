use std::io::Write;
use std::path::PathBuf;

use isrl::eval::write_gold;
use isrl::frames::{write_frame_records, WordForm};
use isrl::resolver::{write_documents, write_queries};
use isrl::synthetic::{Grammar, GrammarConfig};
use serde_json::json;

use super::{create, finish, write_manifest};
use crate::config::{self, CorpusFormat, PipelineConfig};
use crate::manifest::Manifest;
use crate::{Global, SynthArgs};

/// Probe pairs written to the triples file.
const PROBES: usize = 20;

pub fn run(args: SynthArgs, mut config: PipelineConfig, global: &Global) -> anyhow::Result<()> {
    config::set(&mut config.seeds.synth, args.seed);
    let seed = config.seeds.synth;
    let grammar = Grammar::new(GrammarConfig::default());
    let fixture = grammar.discourse(args.documents, seed.wrapping_add(1));
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir)?;

    let mut written = Vec::new();
    let mut emit = |name: &str, body: &dyn Fn(&mut dyn Write) -> anyhow::Result<()>| -> anyhow::Result<()> {
        let path = dir.join(name);
        let mut w = create(&path)?;
        body(&mut w)?;
        finish(w)?;
        let role = name.split_once('.').map_or(name, |(stem, _)| stem);
        written.push((role.to_owned(), path));
        Ok(())
    };
    let frames = grammar.sample_frames(args.frames, seed);
    emit("frames.tsv", &|w| {
        Ok(write_frame_records(w, &frames, WordForm::Surface)?)
    })?;
    emit("lexicon.tsv", &|w| Ok(w.write_all(grammar.lexicon_text().as_bytes())?))?;
    emit("documents.jsonl", &|w| Ok(write_documents(w, &fixture.documents)?))?;
    emit("queries.tsv", &|w| Ok(write_queries(w, &fixture.queries)?))?;
    emit("gold.tsv", &|w| Ok(write_gold(w, &fixture.gold)?))?;
    emit("triples.tsv", &|w| {
        for pair in grammar.probe_pairs(PROBES, seed.wrapping_add(2)) {
            for unit in [&pair.consistent, &pair.inconsistent] {
                writeln!(w, "{}\t{}\t{}", pair.predicate, unit.word, unit.label)?;
            }
        }
        Ok(())
    })?;

    // A config that runs the whole pipeline from inside the directory.
    let mut pipeline = PipelineConfig::default();
    pipeline.data.format = CorpusFormat::Records;
    pipeline.seeds = config.seeds.clone();
    let rel = |s: &str| Some(PathBuf::from(s));
    pipeline.paths.corpus = rel("frames.tsv");
    pipeline.paths.frames = rel("ingested.tsv");
    pipeline.paths.vocab = rel("vocab.txt");
    pipeline.paths.lexicon = rel("lexicon.tsv");
    pipeline.paths.model = rel("model.bin");
    pipeline.paths.triples = rel("triples.tsv");
    pipeline.paths.documents = rel("documents.jsonl");
    pipeline.paths.queries = rel("queries.tsv");
    pipeline.paths.gold = rel("gold.tsv");
    pipeline.paths.predictions = rel("predictions.tsv");
    let text = toml::to_string_pretty(&pipeline)?;
    emit("pipeline.toml", &|w| Ok(w.write_all(text.as_bytes())?))?;

    println!("frames      {}", frames.len());
    println!("documents   {}", fixture.documents.len());
    println!("queries     {}", fixture.queries.len());
    println!("written to  {}", dir.display());

    let mut manifest = Manifest::new("synth", &config);
    for (role, path) in &written {
        manifest.output(role, path)?;
    }
    manifest.summary = json!({
        "frames": frames.len(),
        "documents": fixture.documents.len(),
        "queries": fixture.queries.len(),
        "probe_pairs": PROBES,
    });
    write_manifest(&manifest, global, &dir.join("frames.tsv"))
}
