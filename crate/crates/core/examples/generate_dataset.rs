//! Generate a few problems of every kind with the offline stub completer
//! and print them as JSON lines.

use token_bias::corpus::Corpus;
use token_bias::generator::{to_jsonl, FallacyKind, Generator, StubCompleter};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::bundled();
    let completer = StubCompleter::new(corpus.clone());
    let generator = Generator::new(&corpus, &completer);

    for kind in FallacyKind::ALL {
        let instances = generator.generate(kind, 2, 2024)?;
        println!("# {kind}");
        print!("{}", to_jsonl(&instances));
        let first = &instances[0];
        println!("# gold answer for {}: {}\n", first.id, first.gold);
    }
    Ok(())
}
