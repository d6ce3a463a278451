//! Live tutoring service.

pub mod config;
pub mod http;
pub mod service;
pub mod store;
pub mod vocabulary;
