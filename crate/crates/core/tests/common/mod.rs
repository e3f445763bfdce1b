#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Compares `actual` with the golden file `name`. With `RTB_BLESS=1` the
/// golden file is rewritten instead.
pub fn check_golden(name: &str, actual: &[u8]) {
    let path = data_path(name);
    if std::env::var_os("RTB_BLESS").is_some_and(|v| v == "1") {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with RTB_BLESS=1 to create it)", path.display()));
    assert!(
        expected == actual,
        "{} differs from the freshly produced bytes ({} vs {} bytes)",
        path.display(),
        expected.len(),
        actual.len()
    );
}
