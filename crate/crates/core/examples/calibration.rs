//! Monte Carlo check of the decision rule: a null agent should rarely be
//! flagged, a biased one usually should.

use token_bias::model_client::{Feature, SimulatedAgentSpec};
use token_bias::perturbation::Hypothesis;
use token_bias::runner::{simulate_calibration, ExperimentPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = ExperimentPlan { n: 150, ..ExperimentPlan::for_hypothesis(Hypothesis::H2) };

    for (label, spec) in [
        ("null", SimulatedAgentSpec::null(0.5, 3)),
        ("biased", SimulatedAgentSpec::null(0.5, 3).with_delta(Feature::ContainsLindaExemplar, 0.2)),
    ] {
        let report = simulate_calibration(&spec, &plan, 200)?;
        println!("{label} agent, {} replications at alpha {}", report.replications, report.alpha);
        for c in &report.cells {
            println!("  {:<8} rejection rate {:.3}  mean z {:+.3}  mean n* {:.1}", c.prompting_method, c.rejection_rate, c.mean_z, c.mean_n_star);
        }
    }
    Ok(())
}
