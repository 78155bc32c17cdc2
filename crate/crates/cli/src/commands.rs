use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use affect_core::eval::{
    binarize, bow_baseline, load_ec, load_eireg, load_texts, multilabel_metrics, pearson, split_dev, write_ec, write_eireg,
    EvalReport, Predictions, TweetRecord, Weighting, RIDGE_LAMBDA,
};
use affect_core::explain::{explain_tokens, render_heatmap, write_attributions_csv, MAX_TOKENS};
use affect_core::fusion::{FeatureSet, FusionManifest, GbtModel};
use affect_core::labels::Emotion;
use affect_core::layers::EmbeddingTable;
use affect_core::models::{ModelBundle, ModelKind};
use affect_core::pipeline::{
    encode_texts, extract_features, predict_fusion, predict_network, tokenize_all, train_fusion, train_network, FusionModel,
    ECCU_SOURCE, EIPU_SOURCE,
};
use affect_core::preprocess::{load_embeddings, write_embeddings, Lexicon, Vocabulary, MISSING_SCALE};
use affect_core::synth::{generate, SynthOptions};
use affect_core::training::write_loss_log;
use affect_core::Rng;
use anyhow::{bail, Context, Result};
use rand::SeedableRng;

use crate::workspace::{check_source_name, Workspace};
use crate::{BowWeighting, Cli, Command};

pub fn run(cli: Cli) -> Result<()> {
    let ws = Workspace::open(&cli.out, cli.config.as_deref(), cli.seed)?;
    match cli.command {
        Command::Preprocess { ec, eireg, embeddings, dim, lexicon } => {
            preprocess(&ws, &ec, &eireg, embeddings.as_deref(), dim, lexicon.as_deref())
        }
        Command::TrainClf { ec } => train_clf(&ws, &ec),
        Command::TrainReg { eireg, emotion } => train_reg(&ws, &eireg, emotion),
        Command::ExtractFeatures { model, tweets, source } => extract(&ws, &model, &tweets, source),
        Command::IngestFeatures { csv, source } => ingest(&ws, &csv, &source),
        Command::TrainFusion { eireg, emotion } => fusion(&ws, &eireg, emotion),
        Command::Predict { model, fusion, tweets, name } => predict(&ws, model.as_deref(), fusion.as_deref(), &tweets, name),
        Command::Explain { model, tweets, limit } => explain(&ws, &model, &tweets, limit),
        Command::Evaluate { pred, gold, emotion, name } => evaluate(&ws, &pred, &gold, emotion, &name),
        Command::Baseline { train, test, emotion, weighting } => baseline(&ws, &train, &test, emotion, weighting),
        Command::Synth { ec_tweets, eireg_tweets, dim } => synth(&ws, ec_tweets, eireg_tweets, dim),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn preprocess(
    ws: &Workspace,
    ec: &[PathBuf],
    eireg: &[PathBuf],
    embeddings: Option<&Path>,
    dim: usize,
    lexicon: Option<&Path>,
) -> Result<()> {
    if ec.is_empty() && eireg.is_empty() {
        bail!("give at least one --ec or --eireg file");
    }
    if let Some(p) = lexicon {
        // parse first so a broken list never lands in the workspace
        Lexicon::load(p)?;
        std::fs::copy(p, ws.lexicon_path()).with_context(|| format!("copying {}", p.display()))?;
    }
    let tokenizer = ws.tokenizer()?;
    let mut docs = Vec::new();
    for p in ec.iter().chain(eireg) {
        let items = load_texts(p)?;
        for (id, text) in items {
            docs.push(tokenizer.tokenize(&text).with_context(|| format!("{}: tweet {id}", p.display()))?);
        }
    }
    let vocab = Vocabulary::build(docs.iter(), ws.config.preprocess.min_count);
    vocab.save(&ws.vocab_path())?;
    let table = match embeddings {
        Some(p) => {
            let loaded = load_embeddings(p, &vocab, ws.seed, false)?;
            println!(
                "embeddings: {} of {} entries found ({:.1}%), dim {}",
                loaded.found,
                loaded.found + loaded.missing,
                100.0 * loaded.coverage(),
                loaded.table.dim()
            );
            loaded.table
        }
        None => {
            if dim == 0 {
                bail!("--dim must be at least 1");
            }
            log::warn!("no embedding file; drawing random {dim}-d vectors");
            EmbeddingTable::random(vocab.len(), dim, MISSING_SCALE, false, &mut Rng::seed_from_u64(ws.seed))
        }
    };
    let rows = vocab.tokens().iter().enumerate().skip(1).map(|(i, t)| (t.as_str(), table.row(i)));
    write_embeddings(&ws.embeddings_path(), table.dim(), rows)?;
    println!("vocabulary: {} entries from {} tweets", vocab.len(), docs.len());
    Ok(())
}

fn train_and_save(ws: &Workspace, kind: ModelKind, emotion: Option<Emotion>, records: &[TweetRecord], name: &str) -> Result<()> {
    if records.is_empty() {
        bail!("no training tweets");
    }
    let vocab = ws.vocab()?;
    let net = match kind {
        ModelKind::Eccu => &ws.config.eccu,
        ModelKind::Eipu => &ws.config.eipu,
    };
    let table = ws.embeddings(&vocab, net.trainable_embeddings)?.table;
    let tokenizer = ws.tokenizer()?;
    let out = train_network(&ws.config, kind, emotion, &table, &vocab, records, &tokenizer, ws.seed)?;
    let model_path = ws.path(&format!("{name}.model"));
    out.model.save(&model_path)?;
    write_loss_log(&ws.path(&format!("{name}.loss.csv")), &out.losses)?;
    println!(
        "{}: {} epochs on {} tweets, final loss {:.6}",
        model_path.display(),
        out.losses.len(),
        records.len(),
        out.losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn train_clf(ws: &Workspace, ec: &Path) -> Result<()> {
    let records = load_ec(ec)?;
    train_and_save(ws, ModelKind::Eccu, None, &records, ECCU_SOURCE)
}

fn train_reg(ws: &Workspace, eireg: &Path, emotion: Emotion) -> Result<()> {
    let records = load_eireg(eireg, emotion)?.records;
    train_and_save(ws, ModelKind::Eipu, Some(emotion), &records, &format!("{EIPU_SOURCE}-{emotion}"))
}

fn load_model(ws: &Workspace, path: &Path) -> Result<(ModelBundle, Vocabulary)> {
    let model = ModelBundle::load(path)?;
    let vocab = ws.vocab()?;
    if model.vocab_hash != vocab.content_hash() {
        bail!("{} was trained on a different vocabulary than {}", path.display(), ws.vocab_path().display());
    }
    Ok((model, vocab))
}

fn extract(ws: &Workspace, model_path: &Path, tweets: &[PathBuf], source: Option<String>) -> Result<()> {
    let (model, vocab) = load_model(ws, model_path)?;
    let source = source.unwrap_or_else(|| match model.config.kind {
        ModelKind::Eccu => ECCU_SOURCE.to_string(),
        ModelKind::Eipu => EIPU_SOURCE.to_string(),
    });
    check_source_name(&source)?;
    let tokenizer = ws.tokenizer()?;
    let mut items = Vec::new();
    let mut seen = HashMap::new();
    for p in tweets {
        for (id, text) in load_texts(p)? {
            // the same tweet often sits in several files
            match seen.get(&id) {
                Some(t) if t == &text => continue,
                Some(_) => bail!("tweet id {id} appears twice with different text"),
                None => {
                    seen.insert(id.clone(), text.clone());
                    items.push((id, text));
                }
            }
        }
    }
    let enc = encode_texts(&items, &tokenizer, &vocab)?;
    let set = extract_features(&model, &enc, &source)?;
    let p = ws.save_features(&set)?;
    println!("{}: {} rows of width {}", p.display(), set.len(), set.width());
    Ok(())
}

fn ingest(ws: &Workspace, csv: &Path, source: &str) -> Result<()> {
    check_source_name(source)?;
    let set = FeatureSet::load_csv(csv, source)?;
    let p = ws.save_features(&set)?;
    println!("{}: {} rows of width {}", p.display(), set.len(), set.width());
    Ok(())
}

fn fusion(ws: &Workspace, eireg: &Path, emotion: Emotion) -> Result<()> {
    let records = load_eireg(eireg, emotion)?.records;
    let preset = ws.config.fusion.preset_for(emotion)?;
    let sources = ws.feature_sources()?;
    if sources.is_empty() {
        bail!("no feature sources in {}; run `affect extract-features` first", ws.features_dir().display());
    }
    let refs: Vec<&FeatureSet> = sources.iter().collect();
    let model = train_fusion(preset, &refs, &records)?;
    let gbt = ws.path(&format!("fusion-{emotion}.gbt"));
    model.gbt.save(&gbt)?;
    model.manifest.save(&gbt.with_extension("manifest"))?;
    let used: Vec<&str> = model.manifest.groups.iter().map(|g| g.source.as_str()).collect();
    println!(
        "{}: {} trees over {} columns from {}",
        gbt.display(),
        model.gbt.trees.len(),
        model.gbt.width,
        used.join("+")
    );
    Ok(())
}

fn predict(ws: &Workspace, model: Option<&Path>, fusion: Option<&Path>, tweets: &Path, name: Option<String>) -> Result<()> {
    let items = load_texts(tweets)?;
    let ids: Vec<String> = items.iter().map(|(id, _)| id.clone()).collect();
    let (preds, src) = match (model, fusion) {
        (Some(path), _) => {
            let (m, vocab) = load_model(ws, path)?;
            let enc = encode_texts(&items, &ws.tokenizer()?, &vocab)?;
            let out = predict_network(&m, &enc)?;
            let preds = match m.config.kind {
                ModelKind::Eccu => Predictions::Labels(ids.into_iter().zip(out.iter().map(|v| binarize(v))).collect()),
                ModelKind::Eipu => Predictions::Intensity(ids.into_iter().zip(out.iter().map(|v| v[0])).collect()),
            };
            (preds, path)
        }
        (None, Some(path)) => {
            let manifest_path = path.with_extension("manifest");
            let model = FusionModel {
                gbt: GbtModel::load(path)?,
                manifest: FusionManifest::load(&manifest_path)?,
            };
            let sources = ws.feature_sources()?;
            let refs: Vec<&FeatureSet> = sources.iter().collect();
            let values = predict_fusion(&model, &refs, &ids)
                .context("fusion needs features for every tweet; run `affect extract-features` on these tweets")?;
            (Predictions::Intensity(ids.into_iter().zip(values).collect()), path)
        }
        (None, None) => bail!("give --model or --fusion"),
    };
    let name = name.unwrap_or_else(|| format!("predictions-{}.csv", stem(src)));
    let out = ws.path(&name);
    preds.save(&out)?;
    println!("{}: {} predictions", out.display(), preds.len());
    Ok(())
}

fn explain(ws: &Workspace, model_path: &Path, tweets: &Path, limit: Option<usize>) -> Result<()> {
    let (model, vocab) = load_model(ws, model_path)?;
    if model.config.kind != ModelKind::Eipu {
        bail!("explanations need an intensity model");
    }
    let emotion: Emotion = model.labels[0].parse()?;
    let mut items = load_texts(tweets)?;
    if let Some(n) = limit {
        items.truncate(n);
    }
    // gold intensities when the file is an intensity file of this emotion
    let gold: HashMap<String, f64> = match load_eireg(tweets, emotion) {
        Ok(l) => l.records.into_iter().filter_map(|r| Some((r.id.clone(), r.intensity()?))).collect(),
        Err(_) => HashMap::new(),
    };
    let enc = encode_texts(&items, &ws.tokenizer()?, &vocab)?;
    let cap = MAX_TOKENS.min(model.config.max_seq_len);
    let mut out = Vec::new();
    for e in enc {
        if e.ids.is_empty() {
            log::warn!("tweet {} has no tokens; skipped", e.id);
            continue;
        }
        let n = e.ids.len().min(cap);
        if n < e.ids.len() {
            log::warn!("tweet {}: attributing the first {n} of {} tokens", e.id, e.ids.len());
        }
        let mode = ws.config.explain.mode_for(n, ws.seed);
        let tokens = e.tokens[..n].to_vec();
        out.push(explain_tokens(&model, &e.id, tokens, &e.ids[..n], mode, gold.get(&e.id).copied())?);
    }
    let html = ws.path("explain.html");
    write_text(&html, &render_heatmap(&out)?)?;
    let csv = ws.path("attributions.csv");
    let f = std::fs::File::create(&csv).with_context(|| format!("creating {}", csv.display()))?;
    write_attributions_csv(std::io::BufWriter::new(f), &out)?;
    println!("{}: {} tweets; token scores in {}", html.display(), out.len(), csv.display());
    Ok(())
}

fn save_report(ws: &Workspace, report: &EvalReport, name: &str) -> Result<()> {
    write_text(&ws.path(&format!("{name}.txt")), &report.to_text())?;
    write_text(&ws.path(&format!("{name}.csv")), &report.to_csv())?;
    print!("{}", report.to_text());
    Ok(())
}

fn evaluate(ws: &Workspace, pred: &Path, gold: &Path, emotion: Option<Emotion>, name: &str) -> Result<()> {
    let preds = Predictions::load(pred)?;
    let report = match preds {
        Predictions::Intensity(rows) => {
            let by_id: HashMap<&str, f64> = rows.iter().map(|(id, v)| (id.as_str(), *v)).collect();
            let emotions = match emotion {
                Some(e) => vec![e],
                None => Emotion::ALL.to_vec(),
            };
            let mut report = EvalReport::new("ei-reg", ws.fingerprint());
            let mut scored = Vec::new();
            for e in emotions {
                let records = load_eireg(gold, e)?.records;
                let covered = records.iter().filter(|r| by_id.contains_key(r.id.as_str())).count();
                if covered == 0 {
                    continue;
                }
                if let Some(r) = records.iter().find(|r| !by_id.contains_key(r.id.as_str())) {
                    bail!("no prediction for tweet {} ({e})", r.id);
                }
                let p: Vec<f64> = records.iter().map(|r| by_id[r.id.as_str()]).collect();
                let g: Vec<f64> = records.iter().filter_map(TweetRecord::intensity).collect();
                let r = pearson(&p, &g)?;
                report.push(e.as_str(), "pearson", r)?;
                scored.push(r);
            }
            if scored.is_empty() {
                bail!("none of the predicted ids appear in {}", gold.display());
            }
            if scored.len() > 1 {
                report.push("all", "pearson", scored.iter().sum::<f64>() / scored.len() as f64)?;
            }
            report
        }
        Predictions::Labels(rows) => {
            let by_id: HashMap<&str, &Vec<u8>> = rows.iter().map(|(id, v)| (id.as_str(), v)).collect();
            let records = load_ec(gold)?;
            let mut p = Vec::with_capacity(records.len());
            let mut g = Vec::with_capacity(records.len());
            for r in &records {
                match by_id.get(r.id.as_str()) {
                    Some(v) => p.push((*v).clone()),
                    None => bail!("no prediction for tweet {}", r.id),
                }
                g.push(r.labels().unwrap_or_default().to_vec());
            }
            let s = multilabel_metrics(&p, &g)?;
            let mut report = EvalReport::new("e-c", ws.fingerprint());
            report.push("all", "jaccard", s.jaccard)?;
            report.push("all", "micro_f1", s.micro_f1)?;
            report.push("all", "macro_f1", s.macro_f1)?;
            report
        }
    };
    save_report(ws, &report, name)
}

fn baseline(ws: &Workspace, train: &Path, test: &Path, emotion: Emotion, weighting: BowWeighting) -> Result<()> {
    let tokenizer = ws.tokenizer()?;
    let train = load_eireg(train, emotion)?.records;
    let test = load_eireg(test, emotion)?.records;
    if test.is_empty() {
        bail!("no {emotion} tweets to predict");
    }
    let train_docs = tokenize_all(&train, &tokenizer)?;
    let test_docs = tokenize_all(&test, &tokenizer)?;
    let pairs: Vec<(Vec<String>, f64)> = train_docs
        .into_iter()
        .zip(&train)
        .map(|(d, r)| (d, r.intensity().unwrap_or_default()))
        .collect();
    let (pred, tag) = match weighting {
        BowWeighting::Tfidf => (bow_baseline(&pairs, &test_docs, Weighting::TfIdf)?, "tfidf"),
        BowWeighting::Nbow => {
            let vocab = ws.vocab()?;
            let table = ws.embeddings(&vocab, false)?.table;
            let w = Weighting::NBoW { vocab: &vocab, table: &table };
            (bow_baseline(&pairs, &test_docs, w)?, "nbow")
        }
    };
    let name = format!("baseline-{tag}-{emotion}");
    let preds = Predictions::Intensity(test.iter().map(|r| r.id.clone()).zip(pred.iter().copied()).collect());
    preds.save(&ws.path(&format!("{name}.csv")))?;
    let gold: Vec<f64> = test.iter().filter_map(TweetRecord::intensity).collect();
    let mut report = EvalReport::new("ei-reg", ws.fingerprint());
    report.notes.push(format!("{tag} features, ridge regression with lambda {RIDGE_LAMBDA} in place of an SVM"));
    report.push(emotion.as_str(), "pearson", pearson(&pred, &gold)?)?;
    save_report(ws, &report, &format!("{name}.report"))
}

fn synth(ws: &Workspace, ec_tweets: usize, eireg_tweets: usize, dim: usize) -> Result<()> {
    let opts = SynthOptions {
        seed: ws.seed,
        ec_tweets,
        eireg_tweets,
        embedding_dim: dim,
        ..SynthOptions::default()
    };
    let corpus = generate(&opts);
    let frac = ws.config.preprocess.dev_fraction;
    let (ec_train, ec_dev) = split_dev(&corpus.ec, frac, ws.seed);
    // split each emotion on its own so every one keeps a dev set
    let mut splits: BTreeMap<&str, Vec<TweetRecord>> = BTreeMap::new();
    for e in &opts.emotions {
        let (tr, dv) = split_dev(&corpus.eireg_for(*e), frac, ws.seed);
        splits.entry("train").or_default().extend(tr);
        splits.entry("dev").or_default().extend(dv);
    }
    let save = |name: &str, f: &dyn Fn(std::fs::File) -> std::io::Result<()>| -> Result<()> {
        let p = ws.path(name);
        let file = std::fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        f(file).with_context(|| format!("writing {}", p.display()))
    };
    save("ec-train.tsv", &|f| write_ec(f, &ec_train))?;
    save("ec-dev.tsv", &|f| write_ec(f, &ec_dev))?;
    for (split, records) in &splits {
        save(&format!("eireg-{split}.tsv"), &|f| write_eireg(f, records))?;
    }
    let vectors = ws.path("vectors.txt");
    write_embeddings(&vectors, dim, corpus.embeddings.iter().map(|(t, v)| (t.as_str(), v.as_slice())))?;
    println!(
        "synthetic corpus in {}: {} + {} multi-label, {} + {} intensity tweets, {} vectors",
        ws.root.display(),
        ec_train.len(),
        ec_dev.len(),
        splits.get("train").map_or(0, Vec::len),
        splits.get("dev").map_or(0, Vec::len),
        corpus.embeddings.len()
    );
    Ok(())
}
