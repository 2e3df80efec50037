//! Render one conjunction problem under every standard prompting method.

use token_bias::corpus::Corpus;
use token_bias::generator::{FallacyKind, Generator, StubCompleter};
use token_bias::prompting::{exemplar_library, render, PromptMethod, RenderOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::bundled();
    let completer = StubCompleter::new(corpus.clone());
    let instance = Generator::new(&corpus, &completer).generate(FallacyKind::ConjV1, 1, 3)?.remove(0);
    let library = exemplar_library();

    let methods = ["baseline", "zs_cot", "os", "os_cot", "fs", "fs_cot"];
    for name in methods {
        let method: PromptMethod = name.parse()?;
        let prompt = render(&instance, method, &library, &RenderOptions::default())?;
        println!("===== {method} ({} messages) =====", prompt.messages.len());
        println!("{}\n", prompt.text());
    }
    Ok(())
}
