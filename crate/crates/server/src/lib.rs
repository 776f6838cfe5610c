//! Game server, network agent client and command-line tools.

pub mod client;
pub mod llm_http;
pub mod server;
pub mod tools;
