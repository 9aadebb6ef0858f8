use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableRow {
    pub n: usize,
    pub k: usize,
    pub rank: u32,
    pub torsion: Vec<u64>,
    pub source: String,
}

/// Parse lines `n k rank torsion... # source`. Blank lines and lines
/// starting with `#` are skipped; every data row needs a non-empty source.
pub fn parse_table(text: &str) -> Result<Vec<TableRow>> {
    let mut rows: Vec<TableRow> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let (data, source) = match line.split_once('#') {
            Some((d, s)) if !s.trim().is_empty() => (d, s.trim()),
            _ => return Err(Error::Table(format!("line {lineno}: entry has no source"))),
        };
        let nums = data
            .split_whitespace()
            .map(|w| w.parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Table(format!("line {lineno}: {e}")))?;
        if nums.len() < 3 {
            return Err(Error::Table(format!("line {lineno}: expected `n k rank torsion...`")));
        }
        let row = TableRow {
            n: nums[0] as usize,
            k: nums[1] as usize,
            rank: u32::try_from(nums[2]).map_err(|e| Error::Table(format!("line {lineno}: {e}")))?,
            torsion: nums[3..].to_vec(),
            source: source.to_string(),
        };
        if row.k < 2 || row.n <= row.k {
            return Err(Error::Table(format!("line {lineno}: table rows need 2 <= k < n")));
        }
        if row.torsion.iter().any(|&t| t < 2) {
            return Err(Error::Table(format!("line {lineno}: torsion orders must be at least 2")));
        }
        if rows.iter().any(|r| r.n == row.n && r.k == row.k) {
            return Err(Error::Table(format!("line {lineno}: duplicate entry for ({}, {})", row.n, row.k)));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_without_source_are_rejected() {
        assert!(matches!(parse_table("5 4 0 2\n"), Err(Error::Table(_))));
        assert!(matches!(parse_table("5 4 0 2 #   \n"), Err(Error::Table(_))));
        let rows = parse_table("# header\n\n5 4 0 2 # somewhere\n").unwrap();
        assert_eq!(rows[0].torsion, vec![2]);
        assert_eq!(rows[0].source, "somewhere");
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(parse_table("5 4 # s\n").is_err());
        assert!(parse_table("5 4 0 1 # s\n").is_err());
        assert!(parse_table("4 4 1 # s\n").is_err());
        assert!(parse_table("5 4 0 2 # a\n5 4 0 2 # b\n").is_err());
        assert!(parse_table("5 x 0 2 # s\n").is_err());
    }
}
