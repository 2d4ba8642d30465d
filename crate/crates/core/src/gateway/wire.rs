//! Chat-completions wire schema.
//!
//! Request: `{"model", "messages": [{"role", "content"}], "temperature", "max_tokens"?}`
//! with the system message first when present. Response: the first choice's
//! `message.content` plus `usage.{prompt,completion}_tokens`.

use serde::{Deserialize, Serialize};

use super::{ChatRequest, GatewayError};

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireContent,
}

#[derive(Deserialize)]
struct WireContent {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u32,
    #[serde(default)]
    completion_tokens: u32,
}

pub(crate) fn encode_request(req: &ChatRequest) -> String {
    let mut messages = Vec::with_capacity(2);
    if let Some(system) = &req.system_message {
        messages.push(WireMessage { role: "system", content: system });
    }
    messages.push(WireMessage { role: "user", content: &req.user_message });
    let wire = WireRequest { model: &req.model_id, messages, temperature: req.temperature, max_tokens: req.max_tokens };
    serde_json::to_string(&wire).expect("wire request serialises")
}

pub(crate) struct Decoded {
    pub text: String,
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
}

pub(crate) fn decode_response(body: &str) -> Result<Decoded, GatewayError> {
    let wire: WireResponse =
        serde_json::from_str(body).map_err(|e| GatewayError::Malformed(format!("undecodable body: {e}")))?;
    let text = wire
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| GatewayError::Malformed("no choices[0].message.content".into()))?;
    let usage = wire.usage.unwrap_or(WireUsage { prompt_tokens: 0, completion_tokens: 0 });
    Ok(Decoded { text, prompt_tokens: usage.prompt_tokens, completion_tokens: usage.completion_tokens })
}
