//! Pronoun resolution with typed discourse diagrams and variational circuits.
//!
//! A sentence pair is parsed into a string diagram whose pronoun is wired to
//! one candidate noun. The diagram is simplified, compiled to an IQP-style
//! circuit and simulated exactly; a one-qubit readout trained with SPSA says
//! whether the pronoun and the candidate corefer.
//!
//! ```
//! use qcoref::{parse_discourse, tokenize, wire_discourse, rewrite, compile_diagram, CompileOptions};
//!
//! let lex = qcoref::data::bundled_lexicon();
//! let pd = parse_discourse(
//!     &tokenize("The students read the books."),
//!     &tokenize("They were learning."),
//!     &lex,
//! ).unwrap();
//! let d = rewrite(&wire_discourse(&pd, 0).unwrap()).unwrap();
//! let c = compile_diagram(&d, &CompileOptions::default()).unwrap();
//! assert_eq!(c.open_outputs.len(), 1);
//! assert_eq!(c.symbols.len(), 12);
//! ```

pub mod circuit;
pub mod compile;
pub mod data;
pub mod diagram;
pub mod error;
pub mod grammar;
pub mod model;
pub mod params;
pub mod parser;
pub mod pipeline;
pub mod rewrite;
pub mod sim;
pub mod tensor;
pub mod train;

pub use circuit::{Angle, Circuit, Gate, GateKind, ParamSymbol};
pub use compile::{
    compile_bow, compile_diagram, cup_gates, effect_gates, merge_gates, word_state_gates, CompileOptions,
};
pub use data::{expand, sample_balanced, split, Entry, TemplateSpec};
pub use diagram::{make_word, merge_sentences, Diagram, Orientation, Port, Pos, WordBox};
pub use error::{Error, Result};
pub use grammar::{Atom, GrammarType, SimpleType};
pub use model::Model;
pub use params::ParamStore;
pub use parser::{
    extract_mentions, parse_discourse, parse_sentence, tokenize, wire_discourse, Lexicon, ParsedDiscourse,
};
pub use pipeline::{combine, resolve, Prediction};
pub use rewrite::{drop_determiners, remove_cups, rewrite, semantic_check};
pub use sim::{dense_oracle, run, run_batch, StateVector};
pub use train::{
    bce, born, evaluate, multi_seed, predict_label, spsa_fit, Hyperparams, Metrics, OovPolicy, RunHistory,
};
