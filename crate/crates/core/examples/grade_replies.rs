//! Grade free-text replies against a problem and report which extraction
//! rule decided each one.

use token_bias::corpus::Corpus;
use token_bias::generator::{FallacyKind, Generator, StubCompleter};
use token_bias::grading::grade;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::bundled();
    let completer = StubCompleter::new(corpus.clone());
    let generator = Generator::new(&corpus, &completer);

    let conj = generator.generate(FallacyKind::ConjV1, 1, 1)?.remove(0);
    println!("conjunction gold {}", conj.gold);
    for reply in [
        "The answer is (a).",
        "Let us think step by step. Option (b) adds a detail, so (a) is more likely. Final answer: (b).",
        "Both seem equally plausible.",
    ] {
        let g = grade(&conj, reply);
        println!("  {:?} via {:<20} <- {reply}", g.verdict, g.rule_fired);
    }

    let syl = generator.generate(FallacyKind::Syllogism, 1, 1)?.remove(0);
    println!("syllogism gold {}", syl.gold);
    for reply in ["No, the conclusion does not follow.", "Yes.", "It depends."] {
        let g = grade(&syl, reply);
        println!("  {:?} via {:<20} <- {reply}", g.verdict, g.rule_fired);
    }
    Ok(())
}
