//! Turn a TOML configuration into an experiment plan. Fields left out
//! fall back to the defaults of the chosen hypothesis.

use token_bias::runner::PlanConfig;

const CONFIG: &str = r#"
hypothesis = "H3"
n = 120
alpha = 0.1
seed = 9
invalid_policy = "count_as_wrong"

[[agents]]
type = "simulated"
name = "sim"
base_success = 0.55
feature_deltas = { relevant_conjunct = -0.2 }

[[agents]]
type = "remote"
base_url = "https://api.openai.com/v1"
model_name = "gpt-4o"
auth_env_var = "OPENAI_API_KEY"
cache_dir = "cache/gpt-4o"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = PlanConfig::parse(CONFIG)?.into_plan(None)?;
    plan.validate()?;
    println!("hypothesis {} n={} alpha={} direction={}", plan.hypothesis, plan.n, plan.alpha, plan.direction);
    println!("methods: {}", plan.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(", "));
    for agent in &plan.agents {
        println!("agent: {}", agent.name());
    }
    Ok(())
}
