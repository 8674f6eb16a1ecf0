//! Defaults file support: plain `key = value` lines.
//!
//! The file supplies defaults for flags the user did not pass; explicit
//! flags always win. Keys use the same spelling as the long flags
//! (`ec`, `omega-preset`, `diag-dir`, ...). Blank lines and `#` comments
//! are ignored, and values may be wrapped in double quotes.

use std::collections::BTreeMap;
use std::path::Path;

/// Parsed defaults file: flag name to raw value.
pub type Settings = BTreeMap<String, String>;

/// Reads and parses a defaults file.
pub fn load(path: &Path) -> Result<Settings, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {}", path.display(), e))?;
    parse(&text).map_err(|e| format!("{}: {}", path.display(), e))
}

/// Parses `key = value` lines into a map.
pub fn parse(text: &str) -> Result<Settings, String> {
    let mut out = Settings::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got `{}`", idx + 1, line))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(format!("line {}: empty key", idx + 1));
        }
        let mut value = value.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        out.insert(key.to_string(), value.to_string());
    }
    Ok(out)
}

/// Interprets a config value as a boolean switch.
pub fn parse_bool(value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("expected a boolean, got `{}`", other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_blanks_and_quotes() {
        let text = "# defaults\n\nec = H\nmask=2\nout = \"with space.png\"\n";
        let s = parse(text).unwrap();
        assert_eq!(s.get("ec").map(String::as_str), Some("H"));
        assert_eq!(s.get("mask").map(String::as_str), Some("2"));
        assert_eq!(s.get("out").map(String::as_str), Some("with space.png"));
    }

    #[test]
    fn rejects_lines_without_equals() {
        let err = parse("ec H\n").unwrap_err();
        assert!(err.contains("line 1"), "{}", err);
    }

    #[test]
    fn rejects_empty_keys() {
        assert!(parse("= 3\n").is_err());
    }

    #[test]
    fn later_keys_override_earlier_ones() {
        let s = parse("ec = L\nec = Q\n").unwrap();
        assert_eq!(s.get("ec").map(String::as_str), Some("Q"));
    }

    #[test]
    fn booleans_accept_common_spellings() {
        for yes in ["true", "Yes", "ON", "1"] {
            assert!(parse_bool(yes).unwrap());
        }
        for no in ["false", "No", "off", "0"] {
            assert!(!parse_bool(no).unwrap());
        }
        assert!(parse_bool("maybe").is_err());
    }
}
