//! Configuration ingestion: expressions, TOML system files and built-in systems.

pub mod builtins;
pub mod config;
pub mod expr;

pub use builtins::{builtin_catalog, builtin_names, builtin_source, load_builtin};
pub use config::{apply_overrides, load_system, parse_config, LoadedSystem, SystemConfig};
pub use expr::{parse_expression, BinOp, Expr, Func};
