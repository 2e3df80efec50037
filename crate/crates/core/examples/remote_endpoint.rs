//! Ask an OpenAI-compatible endpoint one question, caching the reply.
//!
//! Set `TOKEN_BIAS_BASE_URL` (default `https://api.openai.com/v1`),
//! `TOKEN_BIAS_MODEL` (default `gpt-4o-mini`) and `OPENAI_API_KEY`.
//! Without a key the example replays the cache or explains what is missing.

use token_bias::model_client::{ClientError, EndpointConfig, RemoteClient};
use token_bias::prompting::Message;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = EndpointConfig {
        base_url: std::env::var("TOKEN_BIAS_BASE_URL").unwrap_or_else(|_| "https://api.openai.com/v1".into()),
        model_name: std::env::var("TOKEN_BIAS_MODEL").unwrap_or_else(|_| "gpt-4o-mini".into()),
        auth_env_var: "OPENAI_API_KEY".into(),
        cache_dir: Some(std::env::temp_dir().join("token-bias-example-cache")),
        ..EndpointConfig::default()
    };
    let client = RemoteClient::new(config)?;
    let question = Message::user("Is this logically sound? All roses are flowers. Some flowers fade quickly. Therefore some roses fade quickly.");
    match client.query_messages(&[question], "") {
        Ok(reply) => println!("[cache={} attempts={}] {}", reply.from_cache, reply.attempt_count, reply.text),
        Err(ClientError::AuthMissing(var)) => println!("no cached reply and {var} is unset; export it to query the endpoint"),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}
