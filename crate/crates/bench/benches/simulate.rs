use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use qcoref::sim::random::{random_circuit, random_params};
use qcoref::sim::{Program, SymbolTable, DEFAULT_MAX_LIVE_QUBITS};
use qcoref::train::{self, CompiledSet, Hyperparams};
use qcoref::{compile_diagram, Circuit, CompileOptions, Model};
use qcoref::{data, dense_oracle, parse_discourse, rewrite, run, run_batch, tokenize, wire_discourse};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn learning_circuit() -> Circuit {
    let lex = data::bundled_lexicon();
    let pd =
        parse_discourse(&tokenize("The students read the books."), &tokenize("They were learning."), &lex).unwrap();
    let d = rewrite(&wire_discourse(&pd, 0).unwrap()).unwrap();
    compile_diagram(&d, &CompileOptions::default()).unwrap()
}

fn discourse_circuit(c: &mut Criterion) {
    let circuit = learning_circuit();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = random_params(&mut rng, std::slice::from_ref(&circuit));
    c.bench_function("discourse/run", |b| b.iter(|| run(black_box(&circuit), &params).unwrap()));

    let mut table = SymbolTable::default();
    let program = Program::build(&circuit, |s| Ok(table.intern(s)), DEFAULT_MAX_LIVE_QUBITS).unwrap();
    let angle_sets: Vec<Vec<f64>> =
        (0..1000).map(|_| (0..table.len()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()).collect();
    c.bench_function("discourse/execute_x1000", |b| {
        b.iter(|| {
            for angles in &angle_sets {
                black_box(program.execute(angles));
            }
        })
    });
}

fn random_circuits(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let circuits: Vec<Circuit> = (0..200).map(|_| random_circuit(&mut rng, 6, 30)).collect();
    let params = random_params(&mut rng, &circuits);
    c.bench_function("random/run_batch_200", |b| b.iter(|| run_batch(black_box(&circuits), &params).unwrap()));
    c.bench_function("random/dense_oracle_200", |b| {
        b.iter(|| {
            for k in &circuits {
                black_box(dense_oracle(k, &params).unwrap());
            }
        })
    });
}

fn training_epoch(c: &mut Criterion) {
    let lex = data::bundled_lexicon();
    let entries = data::bundled_dataset();
    let mut group = c.benchmark_group("spsa");
    group.sample_size(10);
    for model in [Model::Sllm, Model::BagOfWords] {
        let set = CompiledSet::build(&entries, model, &lex).unwrap();
        let hp = Hyperparams { epochs: 1, ..Hyperparams::default() };
        group.bench_function(format!("one_epoch_400/{}", model.as_str()), |b| {
            b.iter_batched(
                || (),
                |_| train::spsa_fit_compiled(&set, &hp, 0, &mut |_| {}).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, discourse_circuit, random_circuits, training_epoch);
criterion_main!(benches);
