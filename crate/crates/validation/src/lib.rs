//! Acceptance suite for the workspace. The criteria live in `tests/acceptance.rs`.
//!
//! The package sorts after the library and CLI packages, so `cargo test --workspace`
//! runs every other test target before the acceptance target.

use std::path::PathBuf;

/// Path of the `inclusion` binary built into the same target directory as the
/// running test executable (`target/<profile>/deps/..`).
pub fn cli_binary() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let mut dir = exe.parent()?;
    if dir.ends_with("deps") {
        dir = dir.parent()?;
    }
    let bin = dir.join(format!("inclusion{}", std::env::consts::EXE_SUFFIX));
    bin.is_file().then_some(bin)
}
