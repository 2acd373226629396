//! Parser for `git log --numstat` output written with the pretty format
//! `@@@%H|%an|%ad|%s` and `--date=iso-strict`.

use super::{CommitRecord, ParseIssue, Timestamp};

pub const HEADER_PREFIX: &str = "@@@";

/// Commits parsed from one log stream plus any per-line problems.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct GitLog {
    pub commits: Vec<CommitRecord>,
    pub issues: Vec<ParseIssue>,
    /// Commit headers that could not be parsed (each also has an issue).
    pub rejected_commits: usize,
}

pub fn parse_git_numstat(stream: &str) -> GitLog {
    parse_git_numstat_file(stream, "commits.log")
}

pub fn parse_git_numstat_file(stream: &str, file: &str) -> GitLog {
    let mut log = GitLog::default();
    let mut current: Option<CommitRecord> = None;
    // true while skipping the numstat lines of a rejected header
    let mut skipping = false;

    for (idx, raw) in stream.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix(HEADER_PREFIX) {
            if let Some(done) = current.take() {
                log.commits.push(done);
            }
            match parse_header(header) {
                Ok(commit) => {
                    current = Some(commit);
                    skipping = false;
                }
                Err(msg) => {
                    log.issues.push(ParseIssue::at(file, line_no, msg));
                    log.rejected_commits += 1;
                    skipping = true;
                }
            }
            continue;
        }
        if skipping {
            continue;
        }
        let Some(commit) = current.as_mut() else {
            log.issues.push(ParseIssue::at(
                file,
                line_no,
                "numstat line before any commit header",
            ));
            continue;
        };
        match parse_numstat(line) {
            Some((adds, dels, path)) => {
                commit.lines_added += adds;
                commit.lines_deleted += dels;
                commit.files.push(path);
            }
            None => log.issues.push(ParseIssue::at(
                file,
                line_no,
                format!("malformed numstat line: {line:?}"),
            )),
        }
    }
    if let Some(done) = current.take() {
        log.commits.push(done);
    }
    log
}

fn parse_header(header: &str) -> Result<CommitRecord, String> {
    let parts: Vec<&str> = header.splitn(4, '|').collect();
    if parts.len() < 3 {
        return Err(format!(
            "malformed commit header: expected hash|author|date|subject, got {header:?}"
        ));
    }
    let hash = parts[0].trim();
    let author = parts[1].trim();
    if hash.is_empty() || author.is_empty() {
        return Err("commit header has an empty hash or author".into());
    }
    let timestamp = Timestamp::parse(parts[2])
        .map_err(|e| format!("bad commit date {:?}: {e}", parts[2]))?;
    Ok(CommitRecord {
        hash: hash.to_string(),
        author_alias: author.to_string(),
        author: None,
        timestamp,
        lines_added: 0,
        lines_deleted: 0,
        files: Vec::new(),
        message: parts.get(3).copied().unwrap_or("").to_string(),
        out_of_window: false,
    })
}

/// `adds<ws>dels<ws>path`; `-` counts (binary files) contribute zero.
fn parse_numstat(line: &str) -> Option<(u64, u64, String)> {
    let rest = line.trim_start();
    let (adds, rest) = split_token(rest)?;
    let (dels, rest) = split_token(rest)?;
    let path = rest.trim();
    if path.is_empty() {
        return None;
    }
    Some((count(adds)?, count(dels)?, path.to_string()))
}

fn split_token(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start();
    let end = s.find(|c: char| c.is_whitespace())?;
    Some((&s[..end], &s[end..]))
}

fn count(token: &str) -> Option<u64> {
    if token == "-" {
        Some(0)
    } else {
        token.parse().ok()
    }
}

/// Renders commits back into the log format accepted by the parser.
pub fn render_git_log(commits: &[CommitRecord]) -> String {
    let mut out = String::new();
    for c in commits {
        out.push_str(&format!(
            "{HEADER_PREFIX}{}|{}|{}|{}\n",
            c.hash,
            c.author_alias,
            c.timestamp.to_rfc3339(),
            c.message
        ));
        // totals are carried on the first file line; the rest are zero
        for (i, f) in c.files.iter().enumerate() {
            let (a, d) = if i == 0 {
                (c.lines_added, c.lines_deleted)
            } else {
                (0, 0)
            };
            out.push_str(&format!("{a}\t{d}\t{f}\n"));
        }
        out.push('\n');
    }
    out
}
