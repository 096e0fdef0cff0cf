//! Small-scale training pilot: checks that TresParser learns the corpus and
//! reports per-epoch held-out accuracy and timing.

use std::time::Instant;

use lenient::corpus::pairs::make_parser_pairs;
use lenient::corpus::synth::{generate_file, TemplateSet};
use lenient::corpus::{fragmentize, load_source, Fragment};
use lenient::corruptor::{corrupt_fragment, CorruptionConfig};
use lenient::train::{train_translation, Profile};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seqmodel::{beam_decode, Checkpoint};

fn fragments(n_files: u64, seed: u64) -> Vec<Fragment> {
    let t = TemplateSet::default();
    (0..n_files)
        .flat_map(|i| {
            let file = load_source(&generate_file(&t, seed, i)).unwrap();
            fragmentize(&file, i as usize, seed ^ 0xf7a6)
        })
        .collect()
}

/// Teacher-forced probe: mean CE loss and per-token argmax accuracy.
fn probe_loss_acc(ckpt: &Checkpoint<f32>, set: &[(Vec<String>, Vec<String>)]) -> (f64, f64) {
    let mut loss = 0.0;
    let mut count = 0usize;
    let mut hits = 0usize;
    for (src, tgt) in set {
        let src_ids = ckpt.src_vocab.encode(src);
        let tgt_ids = ckpt.tgt_vocab.encode(tgt);
        let out = ckpt
            .model
            .example_eval_loss(&seqmodel::Pair { src: src_ids.clone(), tgt: tgt_ids.clone() }, None)
            .unwrap();
        loss += out.loss_sum;
        count += out.positions;
        let dists = ckpt.model.forward_distributions(&src_ids, &tgt_ids).unwrap();
        let mut gold = tgt_ids.clone();
        gold.push(seqmodel::EOS);
        for (pos, &g) in gold.iter().enumerate() {
            let best = dists[pos]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i as u32)
                .unwrap();
            if best == g {
                hits += 1;
            }
        }
    }
    (loss / count as f64, hits as f64 / count as f64)
}

fn exact_match_rate(
    ckpt: &Checkpoint<f32>,
    set: &[(Vec<String>, Vec<String>)],
    k: usize,
) -> (f64, f64) {
    let mut top1 = 0usize;
    let mut mrr = 0.0;
    for (src, tgt) in set {
        let ids = ckpt.src_vocab.encode(src);
        let hyps = beam_decode(&ckpt.model, &ids, k).unwrap();
        for (rank, hyp) in hyps.iter().enumerate() {
            let texts = ckpt.tgt_vocab.decode(&hyp.tokens);
            if texts == *tgt {
                if rank == 0 {
                    top1 += 1;
                }
                mrr += 1.0 / (rank + 1) as f64;
                break;
            }
        }
    }
    (top1 as f64 / set.len() as f64, mrr / set.len() as f64)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_files: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1200);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3);

    let t0 = Instant::now();
    let train_frags = fragments(n_files, 1);
    eprintln!("[{:6.1}s] {} training fragments", t0.elapsed().as_secs_f64(), train_frags.len());
    let pairs = make_parser_pairs(&train_frags, &CorruptionConfig::default(), 11);
    eprintln!("[{:6.1}s] pairs built", t0.elapsed().as_secs_f64());

    // held-out sets
    let held = fragments(150, 2);
    let clean: Vec<(Vec<String>, Vec<String>)> = held
        .iter()
        .filter(|f| f.tokens.len() <= 40)
        .take(200)
        .map(|f| {
            (
                f.tokens.iter().map(|t| t.text.clone()).collect(),
                f.golden.to_text().split(' ').map(String::from).collect(),
            )
        })
        .collect();
    let force = CorruptionConfig {
        drop_fraction: 0.6,
        insert_fraction: 0.4,
        double_mutation_fraction: 0.0,
        ..CorruptionConfig::default()
    };
    let mutated: Vec<(Vec<String>, Vec<String>)> = held
        .iter()
        .enumerate()
        .filter_map(|(i, f)| {
            let mut rng = ChaCha8Rng::seed_from_u64(5000 + i as u64);
            let out = corrupt_fragment(f, &force, &mut rng);
            out.mutation.as_ref()?;
            Some((
                out.tokens.iter().map(|t| t.text.clone()).collect(),
                out.redeemed.to_text().split(' ').map(String::from).collect(),
            ))
        })
        .take(200)
        .collect();
    eprintln!("eval sets: {} clean<=40, {} single-mutation", clean.len(), mutated.len());

    let mut profile = Profile::desk();
    profile.epochs = epochs;
    if let Some(w) = args.get(3).and_then(|s| s.parse().ok()) {
        profile.translation_warmup = w;
    }
    let trained = train_translation(&pairs, &profile, 12, 13, 2, |ckpt, epoch| {
        let (loss, tok) = probe_loss_acc(ckpt, &clean[..60.min(clean.len())]);
        let (c1, _) = exact_match_rate(ckpt, &clean[..60.min(clean.len())], 1);
        let (m1, mm) = exact_match_rate(ckpt, &mutated[..60.min(mutated.len())], 5);
        eprintln!(
            "[{:6.1}s] epoch {epoch}: probe loss {loss:.4} tokacc {tok:.3} | clean top1 {c1:.3} | mutated top1 {m1:.3} mrr {mm:.3}",
            t0.elapsed().as_secs_f64(),
        );
        if epoch <= 2 {
            let (src, tgt) = &clean[0];
            let ids = ckpt.src_vocab.encode(src);
            let hyp = &beam_decode(&ckpt.model, &ids, 1).unwrap()[0];
            let decoded = ckpt.tgt_vocab.decode(&hyp.tokens);
            eprintln!("  sample src: {}", src.join(" "));
            eprintln!("  golden tgt: {}", tgt.join(" "));
            eprintln!("  decoded   : {}", decoded.join(" "));
        }
        true
    })
    .unwrap();
    eprintln!(
        "[{:6.1}s] done; final loss {:.4}, steps {}",
        t0.elapsed().as_secs_f64(),
        trained.checkpoint.meta.final_loss,
        trained.checkpoint.meta.step
    );
}
