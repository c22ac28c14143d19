//! Prompt construction, the chat-completions client and code extraction.

mod client;
mod extract;
mod prompt;
pub mod stub;

pub use client::{BridgeError, BridgeSettings, Client, Completion, GenParams, ModelEndpoint};
pub use extract::{extract_code, first_fenced_block, ExtractionError};
pub use prompt::{build_prompt, generic_block, PromptSpec, GENERIC_INSTRUCTIONS, LANGUAGE_PLACEHOLDER, PROMPT_PLACEHOLDER};
