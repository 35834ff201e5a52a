// quick micro-benchmark of one batch forward vs forward+backward
use std::time::Instant;
use vqgen_core::corpus::{generate_synthetic_dataset, TemplateBank};
use vqgen_core::train::*;
use vqgen_core::align::{AlignmentContext, SimilarityConfig};
use vqgen_core::corpus::EmbeddingMatrix;
use vqgen_core::model::VqgModel;
use vqgen_core::rng::stream_rng;

fn main() {
    let records = generate_synthetic_dataset(7, 50, &TemplateBank::default_bank()).unwrap();
    let indices: Vec<usize> = (0..records.len()).collect();
    let (vocab, idf, _) = build_corpus_artifacts(&records, &indices, 1, 0.75).unwrap();
    let mut rng = stream_rng(7, "init");
    let emb = EmbeddingMatrix::random(vocab.size(), &mut rng);
    let model = VqgModel::init(emb, 300, &mut rng);
    let ctx = AlignmentContext { vocab: &vocab, idf: &idf, embeddings: &model.embedding, config: SimilarityConfig::default() };
    let instances = make_instances(&records, &indices, &ctx, CaptionDraw::Uniform, &mut stream_rng(7, "e")).unwrap();
    let batch = &instances[..64.min(instances.len())];

    let t0 = Instant::now();
    let loss = batch_loss(&model, &vocab, &records, batch).unwrap();
    let fwd = t0.elapsed();
    let t1 = Instant::now();
    let (l2, _g) = batch_loss_and_grads(&model, &vocab, &records, batch).unwrap();
    let both = t1.elapsed();
    println!("forward only: {:?}  fwd+bwd: {:?}  loss {loss:.4} {l2:.4}", fwd, both);
}
