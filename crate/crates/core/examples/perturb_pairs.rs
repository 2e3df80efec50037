//! Build one matched pair per hypothesis and show exactly which text the
//! perturbation touched.

use token_bias::corpus::Corpus;
use token_bias::generator::{Generator, StubCompleter};
use token_bias::perturbation::{build_pairs, verify_pair, Hypothesis, PairOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::bundled();
    let completer = StubCompleter::new(corpus.clone());
    let generator = Generator::new(&corpus, &completer);

    for h in [Hypothesis::H1, Hypothesis::H2, Hypothesis::H3, Hypothesis::H4, Hypothesis::H5, Hypothesis::H6] {
        let pair = build_pairs(h, 1, 7, &generator, &PairOptions::default())?.remove(0);
        verify_pair(&pair)?;
        println!("{h}: {} -> {}", pair.original.instance.id, pair.perturbed.instance.id);
        for span in &pair.diff_spans {
            println!("  {:?} [{}..{}] {:?} => {:?}", span.field, span.start, span.end, span.before, span.after);
        }
    }
    Ok(())
}
