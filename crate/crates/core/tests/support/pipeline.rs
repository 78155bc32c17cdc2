//! Synthetic end-to-end runs: encode, train both networks, fuse, score.

use affect_core::config::Config;
use affect_core::eval::{bow_baseline, fingerprint, pearson, split_dev, EvalReport, TweetRecord, Weighting};
use affect_core::explain::{explain_tokens, render_heatmap, write_attributions_csv};
use affect_core::labels::Emotion;
use affect_core::models::ModelKind;
use affect_core::pipeline::*;
use affect_core::preprocess::{parse_embeddings, LoadedEmbeddings, Tokenizer, Vocabulary};
use affect_core::synth::{generate, SynthCorpus, SynthOptions};

pub fn embeddings_text(corpus: &SynthCorpus) -> String {
    corpus
        .embeddings
        .iter()
        .map(|(w, v)| format!("{w} {}\n", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")))
        .collect()
}

pub struct Prepared {
    pub corpus: SynthCorpus,
    pub train: Vec<TweetRecord>,
    pub dev: Vec<TweetRecord>,
    pub tokenizer: Tokenizer,
    pub vocab: Vocabulary,
    pub embeddings: LoadedEmbeddings,
}

pub fn prepare(opts: &SynthOptions, emotion: Emotion, dev_fraction: f64) -> Prepared {
    let corpus = generate(opts);
    let (train, dev) = split_dev(&corpus.eireg_for(emotion), dev_fraction, opts.seed);
    let tokenizer = Tokenizer::default();
    let vocab = build_vocab(&[&corpus.ec, &train], &tokenizer, 1).unwrap();
    let embeddings = parse_embeddings(embeddings_text(&corpus).as_bytes(), "synth", &vocab, opts.seed, false).unwrap();
    Prepared { corpus, train, dev, tokenizer, vocab, embeddings }
}

#[derive(Debug)]
pub struct Ordering {
    pub eitl: f64,
    pub eipu: f64,
    pub bow: f64,
}

/// Dev-split Pearson of the fused model, the regressor alone and the TF-IDF
/// baseline, on `n` intensity tweets of `emotion`.
pub fn ordering(seed: u64, emotion: Emotion, n: usize) -> Ordering {
    let opts = SynthOptions { seed, eireg_tweets: n, emotions: vec![emotion], ..SynthOptions::default() };
    let config = Config::default();
    let p = prepare(&opts, emotion, config.preprocess.dev_fraction);
    let table = &p.embeddings.table;
    let tok = &p.tokenizer;
    let eccu = train_network(&config, ModelKind::Eccu, None, table, &p.vocab, &p.corpus.ec, tok, seed).unwrap();
    let eipu = train_network(&config, ModelKind::Eipu, Some(emotion), table, &p.vocab, &p.train, tok, seed).unwrap();
    let enc_tr = encode(&p.train, tok, &p.vocab).unwrap();
    let enc_dev = encode(&p.dev, tok, &p.vocab).unwrap();
    let both: Vec<Encoded> = enc_tr.iter().chain(&enc_dev).cloned().collect();
    let f_eccu = extract_features(&eccu.model, &both, ECCU_SOURCE).unwrap();
    let f_eipu = extract_features(&eipu.model, &both, EIPU_SOURCE).unwrap();
    let preset = config.fusion.preset_for(emotion).unwrap();
    let fused = train_fusion(preset, &[&f_eccu, &f_eipu], &p.train).unwrap();

    let dev_ids: Vec<String> = p.dev.iter().map(|r| r.id.clone()).collect();
    let gold: Vec<f64> = p.dev.iter().map(|r| r.intensity().unwrap()).collect();
    let p_eitl = predict_fusion(&fused, &[&f_eccu, &f_eipu], &dev_ids).unwrap();
    let p_eipu: Vec<f64> = predict_network(&eipu.model, &enc_dev).unwrap().into_iter().map(|v| v[0]).collect();
    let train_docs: Vec<(Vec<String>, f64)> =
        enc_tr.iter().zip(&p.train).map(|(e, r)| (e.tokens.clone(), r.intensity().unwrap())).collect();
    let dev_docs: Vec<Vec<String>> = enc_dev.iter().map(|e| e.tokens.clone()).collect();
    let p_bow = bow_baseline(&train_docs, &dev_docs, Weighting::TfIdf).unwrap();
    Ordering {
        eitl: pearson(&p_eitl, &gold).unwrap(),
        eipu: pearson(&p_eipu, &gold).unwrap(),
        bow: pearson(&p_bow, &gold).unwrap(),
    }
}

/// Every artifact of a reduced run, by name, as the bytes that would be
/// written to disk.
pub fn artifacts(seed: u64) -> Vec<(&'static str, Vec<u8>)> {
    let emotion = Emotion::Anger;
    let opts = SynthOptions { seed, ec_tweets: 60, eireg_tweets: 50, emotions: vec![emotion], ..SynthOptions::default() };
    let mut config = Config::default();
    config.eccu.epochs = 2;
    config.eipu.epochs_by_emotion.insert("anger".into(), 2);
    for preset in config.fusion.presets.values_mut() {
        preset.n_estimators = 40;
    }
    let p = prepare(&opts, emotion, config.preprocess.dev_fraction);
    let (table, tok, vocab) = (&p.embeddings.table, &p.tokenizer, &p.vocab);
    let eccu = train_network(&config, ModelKind::Eccu, None, table, vocab, &p.corpus.ec, tok, seed).unwrap();
    let eipu = train_network(&config, ModelKind::Eipu, Some(emotion), table, vocab, &p.train, tok, seed).unwrap();
    let enc_tr = encode(&p.train, tok, vocab).unwrap();
    let enc_dev = encode(&p.dev, tok, vocab).unwrap();
    let both: Vec<Encoded> = enc_tr.iter().chain(&enc_dev).cloned().collect();
    let f_eccu = extract_features(&eccu.model, &both, ECCU_SOURCE).unwrap();
    let f_eipu = extract_features(&eipu.model, &both, EIPU_SOURCE).unwrap();
    let fused = train_fusion(config.fusion.preset_for(emotion).unwrap(), &[&f_eccu, &f_eipu], &p.train).unwrap();
    let dev_ids: Vec<String> = p.dev.iter().map(|r| r.id.clone()).collect();
    let pred = predict_fusion(&fused, &[&f_eccu, &f_eipu], &dev_ids).unwrap();
    let gold: Vec<f64> = p.dev.iter().map(|r| r.intensity().unwrap()).collect();

    let attrs: Vec<_> = enc_dev
        .iter()
        .zip(&gold)
        .take(3)
        .map(|(e, &g)| {
            let mode = config.explain.mode_for(e.ids.len().min(64), seed);
            let ids = &e.ids[..e.ids.len().min(64)];
            explain_tokens(&eipu.model, &e.id, e.tokens[..ids.len()].to_vec(), ids, mode, Some(g)).unwrap()
        })
        .collect();

    let mut report = EvalReport::new("ei-reg", fingerprint(&config.to_toml(), &vocab.content_hash(), seed));
    report.push("anger", "pearson", pearson(&pred, &gold).unwrap_or(0.0)).unwrap();

    let bytes = |f: &dyn Fn(&mut Vec<u8>)| {
        let mut b = Vec::new();
        f(&mut b);
        b
    };
    let losses = |l: &[f64]| l.iter().map(|v| format!("{v:?}\n")).collect::<String>().into_bytes();
    vec![
        ("vocab", vocab.tokens().join("\n").into_bytes()),
        ("embeddings", bytes(&|b| b.extend(p.embeddings.table.matrix().data().iter().flat_map(|v| v.to_le_bytes())))),
        ("eccu.model", bytes(&|b| eccu.model.write_to(b).unwrap())),
        ("eccu.losses", losses(&eccu.losses)),
        ("eipu.model", bytes(&|b| eipu.model.write_to(b).unwrap())),
        ("eipu.losses", losses(&eipu.losses)),
        ("eccu.csv", bytes(&|b| f_eccu.write_csv(b).unwrap())),
        ("eipu.csv", bytes(&|b| f_eipu.write_csv(b).unwrap())),
        ("fusion.manifest", bytes(&|b| fused.manifest.write(b).unwrap())),
        ("fusion.gbt", bytes(&|b| fused.gbt.write(b).unwrap())),
        ("predictions", pred.iter().map(|v| format!("{v:?}\n")).collect::<String>().into_bytes()),
        ("heatmap.html", render_heatmap(&attrs).unwrap().into_bytes()),
        ("attributions.csv", bytes(&|b| write_attributions_csv(b, &attrs).unwrap())),
        ("report.txt", report.to_text().into_bytes()),
    ]
}
