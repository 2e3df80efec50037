//! Run a full H1 experiment against two simulated agents and print the
//! result table. One agent is token-biased, the other is not.

use token_bias::corpus::Corpus;
use token_bias::generator::{Generator, StubCompleter};
use token_bias::model_client::{AgentSpec, Feature, SimulatedAgentSpec};
use token_bias::perturbation::Hypothesis;
use token_bias::runner::{generate_and_run, report, ExperimentPlan, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let biased = SimulatedAgentSpec { name: "biased".into(), ..SimulatedAgentSpec::null(0.6, 1) }
        .with_delta(Feature::RelevantConjunct, -0.35);
    let neutral = SimulatedAgentSpec { name: "neutral".into(), ..SimulatedAgentSpec::null(0.6, 2) };
    let plan = ExperimentPlan {
        n: 200,
        seed: 11,
        agents: vec![AgentSpec::Simulated(biased), AgentSpec::Simulated(neutral)],
        ..ExperimentPlan::for_hypothesis(Hypothesis::H1)
    };

    let corpus = Corpus::bundled();
    let completer = StubCompleter::new(corpus.clone());
    let out = generate_and_run(&plan, &Generator::new(&corpus, &completer), true)?;
    println!("{} graded replies", out.records.len());
    print!("{}", report(&out.rows, ReportFormat::Markdown)?);
    Ok(())
}
