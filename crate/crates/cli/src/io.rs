//! File formats: edge lists, mapping TSV, pair lists.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use specalign::graph::{load_edge_list, write_edge_list};
use specalign::{Assignment, Graph};

pub fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    fs::write(path, write_edge_list(g)).with_context(|| format!("writing {}", path.display()))
}

/// Whitespace-separated `i j` pairs, one per line; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            bail!("line {}: expected two columns, got {:?}", idx + 1, raw);
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .with_context(|| format!("line {}: bad node id {s:?}", idx + 1))
        };
        pairs.push((parse(fields[0])?, parse(fields[1])?));
    }
    Ok(pairs)
}

pub fn read_pairs(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_pairs(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Two tab-separated columns `i`, `j′`, sorted by `i`.
pub fn format_mapping(mapping: &Assignment) -> String {
    let mut out = String::new();
    for &(i, j) in &mapping.pairs {
        out.push_str(&format!("{i}\t{j}\n"));
    }
    out
}

pub fn write_mapping(path: &Path, mapping: &Assignment) -> Result<()> {
    fs::write(path, format_mapping(mapping)).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_round_trip() {
        let a = Assignment::unweighted(vec![(2, 0), (0, 1)]);
        let text = format_mapping(&a);
        assert_eq!(text, "0\t1\n2\t0\n");
        assert_eq!(parse_pairs(&text).unwrap(), vec![(0, 1), (2, 0)]);
    }

    #[test]
    fn pairs_comments_and_errors() {
        assert_eq!(parse_pairs("# header\n1 2 # note\n\n3\t4\n").unwrap(), vec![(1, 2), (3, 4)]);
        assert!(parse_pairs("1 2 3\n").is_err());
        assert!(parse_pairs("a b\n").is_err());
    }
}
