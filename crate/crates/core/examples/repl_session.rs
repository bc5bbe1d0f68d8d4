//! Drives the interactive session with a scripted list of commands.
//!
//! ```text
//! cargo run --example repl_session
//! ```

use taxo_suggest::cli::repl::{Flow, Repl};
use taxo_suggest::cli::Format;
use taxo_suggest::{Method, ModelConfig, Taxonomy};

fn main() {
    let t = Taxonomy::parse_tsv(include_str!("../fixtures/t0.tsv")).expect("fixture");
    let mut repl = Repl::new(&t, None, Method::Model(ModelConfig::default()), 3, Format::Tsv);
    let script = [
        "add china",
        "add india",
        "suggest",
        "add brazil",
        "show",
        "model --model rem --granularity pp",
        "suggest",
        "remove india",
        "suggest 2",
        "quit",
    ];
    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    for line in script {
        println!("> {line}");
        if repl.handle(line, &mut out, &mut err).expect("session") == Flow::Quit {
            break;
        }
    }
}
