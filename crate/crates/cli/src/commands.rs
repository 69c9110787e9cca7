use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use udssm::corpus::{
    extract_assumption1, extract_assumption2, load_noun_lexicon, parse_tagged_file, read_pairs,
    tag_tokens, tokenize, write_pairs, LengthFilter, NounLexicon, PairExampleI, PairExampleII,
    PairRecord, TaggedToken,
};
use udssm::diagnostics::{tiny_gradcheck, TinySetup};
use udssm::eval::{
    convert_collection_xml, evaluate_ensemble, evaluate_model, format_percent, parse_questions,
    write_questions, CollectionKind, EvalReport,
};
use udssm::model::{AnyModel, ModelDims, ModelKind, Udssm1Params, Udssm2Params};
use udssm::nn::{
    build_vocab as make_vocab, glove_tokens, load_glove, read_vocab, write_vocab, Vocab,
};
use udssm::tensor::{GradCheckConfig, ParamStore};
use udssm::train::{fit, split_train_val, Checkpoint, History, Trainable};
use udssm::{Error, Result};

use crate::runconfig::RunConfig;
use crate::{
    BuildVocabArgs, ConvertArgs, EvalArgs, GenDataArgs, GradcheckArgs, InputFormat, TrainArgs,
};

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn read_sentences(a: &GenDataArgs) -> Result<Vec<Vec<TaggedToken>>> {
    match a.input_format {
        InputFormat::Tagged => {
            if a.nouns.is_some() {
                return Err(usage("--nouns only applies to --input-format raw"));
            }
            Ok(parse_tagged_file(&a.input)?.sentences)
        }
        InputFormat::Raw => {
            let lexicon = match &a.nouns {
                Some(p) => load_noun_lexicon(p)?,
                None => NounLexicon::new(),
            };
            let reader = BufReader::new(File::open(&a.input)?);
            let mut out = Vec::new();
            for line in reader.lines() {
                let toks = tokenize(&line?);
                if !toks.is_empty() {
                    out.push(tag_tokens(&toks, &lexicon));
                }
            }
            Ok(out)
        }
    }
}

pub fn gen_data(a: GenDataArgs) -> Result<u8> {
    if a.min_len > a.max_len {
        return Err(usage(format!(
            "--min-len {} exceeds --max-len {}",
            a.min_len, a.max_len
        )));
    }
    let filter = LengthFilter {
        min: a.min_len,
        max: a.max_len,
    };
    let sentences = read_sentences(&a)?;
    let stem = a
        .input
        .file_stem()
        .map_or("s".into(), |s| s.to_string_lossy().into_owned());
    let id = |k: usize| format!("{stem}:{}", k + 1);
    let written = if a.assumption == 1 {
        let recs: Vec<PairExampleI> = sentences
            .iter()
            .enumerate()
            .filter_map(|(k, s)| extract_assumption1(s, filter, &id(k)))
            .collect();
        write_pairs(&a.out, &recs)?;
        recs.len()
    } else {
        let recs: Vec<PairExampleII> = sentences
            .iter()
            .enumerate()
            .flat_map(|(k, s)| extract_assumption2(s, filter, &id(k)))
            .collect();
        write_pairs(&a.out, &recs)?;
        recs.len()
    };
    println!(
        "{written} records from {} sentences written to {}",
        sentences.len(),
        a.out.display()
    );
    Ok(0)
}

/// Every token of a pair file of either kind.
fn pair_file_tokens(path: &Path) -> Result<Vec<String>> {
    fn collect<T: PairRecord>(recs: &[T]) -> Vec<String> {
        recs.iter()
            .flat_map(|r| r.tokens().map(String::from))
            .collect()
    }
    match read_pairs::<PairExampleI>(path) {
        Ok(r) => Ok(collect(&r)),
        Err(first) => match read_pairs::<PairExampleII>(path) {
            Ok(r) => Ok(collect(&r)),
            Err(_) => Err(first),
        },
    }
}

fn glove_keep(glove: Option<&Path>) -> Result<HashSet<String>> {
    Ok(match glove {
        Some(p) => glove_tokens(p)?
            .into_iter()
            .map(|t| t.to_lowercase())
            .collect(),
        None => HashSet::new(),
    })
}

fn vocab_from_pairs(files: &[&Path], min_count: usize, glove: Option<&Path>) -> Result<Vocab> {
    let mut tokens = Vec::new();
    for f in files {
        tokens.extend(pair_file_tokens(f)?);
    }
    Ok(make_vocab(tokens, min_count, &glove_keep(glove)?))
}

pub fn build_vocab(a: BuildVocabArgs) -> Result<u8> {
    let files: Vec<&Path> = a.pairs.iter().map(|p| p.as_path()).collect();
    let vocab = vocab_from_pairs(&files, a.min_count, a.glove.as_deref())?;
    write_vocab(&a.out, &vocab)?;
    println!("{} entries written to {}", vocab.len(), a.out.display());
    Ok(0)
}

fn run_config(a: &TrainArgs) -> Result<RunConfig> {
    let mut rc = RunConfig::default();
    if let Some(p) = &a.config {
        rc.load_file(p)?;
    }
    if let Some(m) = &a.model {
        rc.model = Some(m.parse()?);
    }
    for (slot, flag) in [
        (&mut rc.pairs, &a.pairs),
        (&mut rc.val_pairs, &a.val_pairs),
        (&mut rc.vocab, &a.vocab),
        (&mut rc.glove, &a.glove),
        (&mut rc.out, &a.out),
    ] {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }
    for (slot, flag) in [
        (&mut rc.min_count, a.min_count),
        (&mut rc.embedding_dim, a.embedding_dim),
        (&mut rc.hidden, a.hidden),
    ] {
        if flag.is_some() {
            *slot = flag;
        }
    }
    let t = &mut rc.train;
    let floats = [
        (&mut t.lr, a.lr),
        (&mut t.beta1, a.beta1),
        (&mut t.beta2, a.beta2),
        (&mut t.epsilon, a.epsilon),
        (&mut t.dropout, a.dropout),
        (&mut t.val_fraction, a.val_fraction),
    ];
    for (slot, flag) in floats {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    for (slot, flag) in [
        (&mut t.batch_size, a.batch_size),
        (&mut t.max_epochs, a.max_epochs),
        (&mut t.patience, a.patience),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if let Some(s) = a.seed {
        t.seed = s;
    }
    Ok(rc)
}

/// Width of the first vector in an embedding file.
fn glove_width(path: &Path) -> Result<usize> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut line = String::new();
    while reader.read_line(&mut line)? > 0 {
        let n = line.split_whitespace().count();
        if n > 0 {
            return if n >= 2 {
                Ok(n - 1)
            } else {
                Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    msg: "vector line has no values".into(),
                })
            };
        }
        line.clear();
    }
    Err(Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        msg: "empty embedding file".into(),
    })
}

fn train_split<M>(model: M, rc: &RunConfig, pairs: &Path) -> Result<(M, History)>
where
    M: Trainable,
    M::Example: PairRecord,
{
    let records: Vec<M::Example> = read_pairs(pairs)?;
    let (train, val) = match &rc.val_pairs {
        Some(p) => (records, read_pairs(p)?),
        None => split_train_val(&records, rc.train.val_fraction, rc.train.seed)?,
    };
    info!(
        "{} training and {} validation pairs",
        train.len(),
        val.len()
    );
    fit(model, &train, &val, &rc.train)
}

pub fn train(a: TrainArgs) -> Result<u8> {
    let rc = run_config(&a)?;
    rc.train.validate()?;
    let kind = rc.model.ok_or_else(|| usage("--model is required"))?;
    let pairs = rc
        .pairs
        .clone()
        .ok_or_else(|| usage("--pairs is required"))?;
    let out = rc.out.clone().ok_or_else(|| usage("--out is required"))?;

    let vocab = match &rc.vocab {
        Some(p) => read_vocab(p)?,
        None => {
            let mut files = vec![pairs.as_path()];
            files.extend(rc.val_pairs.as_deref());
            vocab_from_pairs(&files, rc.min_count.unwrap_or(5), rc.glove.as_deref())?
        }
    };
    let mut dims = rc.dims();
    if let Some(g) = &rc.glove {
        let width = glove_width(g)?;
        if rc.embedding_dim.is_some_and(|d| d != width) {
            return Err(Error::Config(format!(
                "--embedding-dim {} does not match the {width}-wide vectors in {}",
                dims.embedding_dim,
                g.display()
            )));
        }
        dims.embedding_dim = width;
    }
    info!(
        "vocabulary of {} entries, d={} h={}",
        vocab.len(),
        dims.embedding_dim,
        dims.hidden
    );

    let mut rng = ChaCha8Rng::seed_from_u64(rc.train.seed);
    let (model, history) = match (kind, &rc.glove) {
        (ModelKind::Udssm1, None) => {
            let (m, h) = train_split(Udssm1Params::init(vocab, dims, &mut rng)?, &rc, &pairs)?;
            (AnyModel::Udssm1(m), h)
        }
        (ModelKind::Udssm2, None) => {
            let (m, h) = train_split(Udssm2Params::init(vocab, dims, &mut rng)?, &rc, &pairs)?;
            (AnyModel::Udssm2(m), h)
        }
        (kind, Some(g)) => {
            let mut store = ParamStore::new();
            let (emb, stats) =
                load_glove(g, dims.embedding_dim, vocab, &mut store, "emb", &mut rng)?;
            info!(
                "{} of {} vocabulary rows initialized from {}",
                stats.matched,
                emb.vocab.len(),
                g.display()
            );
            match kind {
                ModelKind::Udssm1 => {
                    let m = Udssm1Params::with_embeddings(store, emb, dims.hidden, &mut rng)?;
                    let (m, h) = train_split(m, &rc, &pairs)?;
                    (AnyModel::Udssm1(m), h)
                }
                ModelKind::Udssm2 => {
                    let m = Udssm2Params::with_embeddings(store, emb, dims.hidden, &mut rng)?;
                    let (m, h) = train_split(m, &rc, &pairs)?;
                    (AnyModel::Udssm2(m), h)
                }
            }
        }
    };

    for e in &history.epochs {
        println!(
            "epoch {:>3}  loss {:.6}  metric {:.4}",
            e.epoch, e.train_loss, e.metric
        );
    }
    match (history.best_epoch, history.best_metric()) {
        (Some(e), Some(m)) => println!("best epoch {e}, metric {m:.4}"),
        (None, Some(m)) => println!("no epoch improved on the initial metric {m:.4}"),
        _ => println!("no training epochs run"),
    }
    Checkpoint::new(model, Some(&rc.train)).save(&out)?;
    println!("checkpoint written to {}", out.display());
    Ok(0)
}

fn print_report(r: &EvalReport) {
    println!("{}", r.summary_line());
}

pub fn eval(a: EvalArgs) -> Result<u8> {
    let questions = parse_questions(&a.questions)?;
    let models = a
        .model
        .iter()
        .map(|p| Checkpoint::load(p).map(|c| c.model))
        .collect::<Result<Vec<AnyModel>>>()?;
    if a.report.is_some() && models.len() > 1 && !a.ensemble {
        return Err(usage("--report needs a single checkpoint or --ensemble"));
    }
    let report = if a.ensemble {
        let r = evaluate_ensemble(&models, &questions)?;
        print_report(&r);
        println!("members {}", r.members);
        for (p, acc) in a.model.iter().zip(&r.member_accuracies) {
            println!("  {}  {}", format_percent(*acc), p.display());
        }
        Some(r)
    } else if models.len() == 1 {
        let r = evaluate_model(&models[0], &questions);
        print_report(&r);
        Some(r)
    } else {
        for (p, m) in a.model.iter().zip(&models) {
            println!(
                "{}: {}",
                p.display(),
                evaluate_model(m, &questions).summary_line()
            );
        }
        None
    };
    if let (Some(path), Some(r)) = (&a.report, report) {
        std::fs::write(path, r.to_json()? + "\n")?;
    }
    Ok(0)
}

pub fn convert(a: ConvertArgs) -> Result<u8> {
    let kind: CollectionKind = a.kind.parse()?;
    let (questions, log) = convert_collection_xml(&a.xml, kind)?;
    for (id, reason) in &log.skipped {
        eprintln!("skipped {id}: {reason}");
    }
    for (id, answer) in &log.relaxed {
        warn!("{id}: {answer:?} located by a relaxed match");
    }
    write_questions(&a.out, &questions)?;
    println!(
        "{} questions written to {} ({} skipped)",
        questions.len(),
        a.out.display(),
        log.skipped.len()
    );
    Ok(0)
}

fn parse_dims(s: &str) -> Result<ModelDims> {
    if s == "tiny" {
        let t = TinySetup::default();
        return Ok(ModelDims {
            embedding_dim: t.embedding_dim,
            hidden: t.hidden,
        });
    }
    let bad = || usage(format!("--dims expects `tiny` or DxH, got {s:?}"));
    let (d, h) = s.split_once('x').ok_or_else(bad)?;
    let (d, h): (usize, usize) = (d.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?);
    if d == 0 || h == 0 {
        return Err(bad());
    }
    Ok(ModelDims {
        embedding_dim: d,
        hidden: h,
    })
}

pub fn gradcheck(a: GradcheckArgs) -> Result<u8> {
    let kind: ModelKind = a.model.parse()?;
    let dims = parse_dims(&a.dims)?;
    let setup = TinySetup {
        embedding_dim: dims.embedding_dim,
        hidden: dims.hidden,
        seed: a.seed,
        ..TinySetup::default()
    };
    let cfg = GradCheckConfig {
        tolerance: a.tolerance,
        max_coords_per_param: a.max_coords,
        seed: a.seed,
        ..GradCheckConfig::default()
    };
    let r = tiny_gradcheck(kind, &setup, &cfg)?;
    let worst = r
        .worst
        .as_ref()
        .map_or(String::new(), |(n, i)| format!(" (worst {n}[{i}])"));
    println!(
        "{kind}: max relative error {:.3e} over {} coordinates{worst}",
        r.max_rel_error, r.checked
    );
    println!(
        "{} at tolerance {:e}",
        if r.passed { "PASS" } else { "FAIL" },
        r.tolerance
    );
    Ok(if r.passed { 0 } else { 1 })
}
