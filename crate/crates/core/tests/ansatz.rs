use qcoref::model::compile_candidate;
use qcoref::sim::random::random_params;
use qcoref::{data, parse_discourse, run, tokenize, Circuit, CompileOptions, ParamStore};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const S1: &str = "The students read the books.";

fn circuits(s2: &str, opts: &CompileOptions) -> [Circuit; 2] {
    let lex = data::bundled_lexicon();
    let pd = parse_discourse(&tokenize(S1), &tokenize(s2), &lex).unwrap();
    [compile_candidate(&pd, 0, opts).unwrap(), compile_candidate(&pd, 1, opts).unwrap()]
}

fn log_odds(c: &Circuit, p: &ParamStore) -> f64 {
    let a = run(c, p).unwrap().amplitudes;
    (a[0].norm_sqr() / a[1].norm_sqr()).ln()
}

/// How much swapping the predicate changes the preference between the two
/// candidates, in log-odds.
fn interaction(opts: &CompileOptions, seed: u64) -> f64 {
    let tired = circuits("They were tired.", opts);
    let interesting = circuits("They were interesting.", opts);
    let all: Vec<Circuit> = tired.iter().chain(&interesting).cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_params(&mut rng, &all);
    let gap = |cs: &[Circuit; 2]| log_odds(&cs[0], &p) - log_odds(&cs[1], &p);
    (gap(&tired) - gap(&interesting)).abs()
}

#[test]
fn open_iqp_blocks_cannot_couple_predicate_and_candidate() {
    let open = CompileOptions { closing_hadamards: false, ..CompileOptions::default() };
    for seed in 0..20 {
        assert!(interaction(&open, seed) < 1e-9, "seed {seed}");
    }
}

#[test]
fn closed_iqp_blocks_couple_predicate_and_candidate() {
    let closed = CompileOptions::default();
    assert!(closed.closing_hadamards);
    let coupled = (0..20).filter(|&seed| interaction(&closed, seed) > 1e-3).count();
    assert!(coupled >= 18, "only {coupled} of 20 draws couple");
}
