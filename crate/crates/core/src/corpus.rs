//! Post ingestion, text normalization and vocabulary construction.
//!
//! Records come from JSONL or CSV files sharing one schema. Cleaning strips
//! URLs, user handles, emojis and control characters, unwraps hashtags into
//! their words, case-folds, and hands the result to a pluggable [`Tokenizer`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// One ingested social-media record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub likes: u64,
    pub comments: u64,
    pub reposts: u64,
    pub followers: u64,
    /// Comment arrival times, nondecreasing. `None` when the source only has counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment_times: Option<Vec<DateTime<Utc>>>,
    pub platform: String,
    /// Pre-segmented tokens supplied by an external segmenter; used as-is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
}

impl Post {
    /// A post with zero engagement, epoch timestamp and no comment times.
    pub fn new(post_id: impl Into<String>, text: impl Into<String>) -> Self {
        Post {
            post_id: post_id.into(),
            timestamp: DateTime::<Utc>::UNIX_EPOCH,
            text: text.into(),
            likes: 0,
            comments: 0,
            reposts: 0,
            followers: 0,
            comment_times: None,
            platform: String::new(),
            tokens: None,
        }
    }

    pub fn with_engagement(mut self, likes: u64, comments: u64, reposts: u64, followers: u64) -> Self {
        self.likes = likes;
        self.comments = comments;
        self.reposts = reposts;
        self.followers = followers;
        self
    }

    pub fn with_comment_times(mut self, times: Vec<DateTime<Utc>>) -> Self {
        self.comment_times = Some(times);
        self
    }

    pub fn with_tokens(mut self, tokens: Vec<String>) -> Self {
        self.tokens = Some(tokens);
        self
    }
}

/// Cleaned token sequence of one post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedPost {
    pub post_id: String,
    pub tokens: Vec<String>,
}

impl TokenizedPost {
    pub fn new(post_id: impl Into<String>, tokens: Vec<String>) -> Self {
        TokenizedPost {
            post_id: post_id.into(),
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Posts with fewer than two tokens produce no bigrams.
    pub fn no_bigram(&self) -> bool {
        self.tokens.len() < 2
    }
}

/// Ordered, deduplicated word list with its inverse index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary in first-occurrence order.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocabulary::default();
        for w in words {
            vocab.insert(w.as_ref());
        }
        vocab
    }

    pub fn from_posts(posts: &[TokenizedPost]) -> Self {
        Self::from_words(posts.iter().flat_map(|p| p.tokens.iter()))
    }

    fn insert(&mut self, word: &str) -> usize {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        let i = self.entries.len();
        self.entries.push(word.to_owned());
        self.index.insert(word.to_owned(), i);
        i
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.entries[index]
    }

    pub fn words(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// Guess from the file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or_default();
        ext.parse()
    }
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" | "ndjson" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(Error::Config(format!(
                "unknown input format `{other}` (expected jsonl or csv)"
            ))),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputFormat::Jsonl => f.write_str("jsonl"),
            InputFormat::Csv => f.write_str("csv"),
        }
    }
}

/// Reads posts from `path`, collapsing records with identical `(post_id, text)`.
pub fn ingest(path: &Path, format: InputFormat) -> Result<Vec<Post>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let posts = match format {
        InputFormat::Jsonl => parse_jsonl(path, &raw)?,
        InputFormat::Csv => parse_csv(path, &raw)?,
    };
    Ok(dedup(posts))
}

pub fn dedup(posts: Vec<Post>) -> Vec<Post> {
    let mut seen = HashSet::new();
    posts
        .into_iter()
        .filter(|p| seen.insert((p.post_id.clone(), p.text.clone())))
        .collect()
}

struct FieldCtx<'a> {
    path: &'a Path,
    line: usize,
}

impl FieldCtx<'_> {
    fn err(&self, field: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            field: field.to_owned(),
            message: message.into(),
        }
    }

    fn count(&self, field: &str, raw: &str) -> Result<u64> {
        raw.trim()
            .parse::<u64>()
            .map_err(|_| self.err(field, format!("expected a nonnegative integer, got {raw:?}")))
    }

    fn time(&self, field: &str, raw: &str) -> Result<DateTime<Utc>> {
        DateTime::parse_from_rfc3339(raw.trim())
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| self.err(field, format!("invalid RFC3339 timestamp {raw:?}: {e}")))
    }

    fn check_post(&self, post: &Post) -> Result<()> {
        if post.post_id.is_empty() {
            return Err(self.err("post_id", "empty post_id"));
        }
        if let Some(times) = &post.comment_times {
            if times.windows(2).any(|w| w[1] < w[0]) {
                return Err(self.err("comment_times", "timestamps must be nondecreasing"));
            }
        }
        Ok(())
    }
}

fn parse_jsonl(path: &Path, raw: &str) -> Result<Vec<Post>> {
    let mut posts = Vec::new();
    for (n, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ctx = FieldCtx { path, line: n + 1 };
        let obj: serde_json::Map<String, Value> = serde_json::from_str(line)
            .map_err(|e| ctx.err("<record>", format!("invalid JSON object: {e}")))?;

        let text_of = |field: &str| -> Result<Option<String>> {
            match obj.get(field) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(s.clone())),
                Some(Value::Number(x)) => Ok(Some(x.to_string())),
                Some(other) => Err(ctx.err(field, format!("expected a string, got {other}"))),
            }
        };
        let required = |field: &str| -> Result<String> {
            text_of(field)?.ok_or_else(|| ctx.err(field, "missing required field"))
        };

        let comment_times = match obj.get("comment_times") {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) => Some(
                items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => ctx.time("comment_times", s),
                        other => Err(ctx.err("comment_times", format!("expected a string, got {other}"))),
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            Some(other) => {
                return Err(ctx.err("comment_times", format!("expected an array, got {other}")))
            }
        };
        let tokens = match obj.get("tokens") {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) => Some(
                items
                    .iter()
                    .map(|v| {
                        v.as_str()
                            .map(str::to_owned)
                            .ok_or_else(|| ctx.err("tokens", "expected an array of strings"))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            Some(_) => return Err(ctx.err("tokens", "expected an array of strings")),
        };

        let post = Post {
            post_id: required("post_id")?,
            timestamp: ctx.time("timestamp", &required("timestamp")?)?,
            text: required("text")?,
            likes: ctx.count("likes", &required("likes")?)?,
            comments: ctx.count("comments", &required("comments")?)?,
            reposts: match text_of("reposts")? {
                Some(r) => ctx.count("reposts", &r)?,
                None => 0,
            },
            followers: ctx.count("followers", &required("followers")?)?,
            comment_times,
            platform: text_of("platform")?.unwrap_or_default(),
            tokens,
        };
        ctx.check_post(&post)?;
        posts.push(post);
    }
    Ok(posts)
}

fn parse_csv(path: &Path, raw: &str) -> Result<Vec<Post>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(raw.as_bytes());
    let header_ctx = FieldCtx { path, line: 1 };
    let headers = reader
        .headers()
        .map_err(|e| header_ctx.err("<header>", e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut required_cols = HashMap::new();
    for name in ["post_id", "timestamp", "text", "likes", "comments", "followers"] {
        let idx = column(name).ok_or_else(|| header_ctx.err(name, "missing required column"))?;
        required_cols.insert(name, idx);
    }
    let reposts_col = column("reposts");
    let times_col = column("comment_times");
    let platform_col = column("platform");
    let tokens_col = column("tokens");

    let mut posts = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            FieldCtx { path, line }.err("<record>", e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let ctx = FieldCtx { path, line };
        let get = |name: &str| record.get(required_cols[name]).unwrap_or("");
        let optional = |col: Option<usize>| {
            col.and_then(|c| record.get(c))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };

        let comment_times = optional(times_col)
            .map(|s| {
                s.split('|')
                    .map(|t| ctx.time("comment_times", t))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let post = Post {
            post_id: get("post_id").trim().to_owned(),
            timestamp: ctx.time("timestamp", get("timestamp"))?,
            text: get("text").to_owned(),
            likes: ctx.count("likes", get("likes"))?,
            comments: ctx.count("comments", get("comments"))?,
            reposts: optional(reposts_col)
                .map(|r| ctx.count("reposts", r))
                .transpose()?
                .unwrap_or(0),
            followers: ctx.count("followers", get("followers"))?,
            comment_times,
            platform: optional(platform_col).unwrap_or_default().to_owned(),
            tokens: optional(tokens_col).map(|s| s.split_whitespace().map(str::to_owned).collect()),
        };
        ctx.check_post(&post)?;
        posts.push(post);
    }
    Ok(posts)
}

/// Splits cleaned, case-folded text into tokens.
pub trait Tokenizer {
    /// `protected` terms must come back as single tokens whenever they occur.
    fn tokenize(&self, text: &str, protected: &BTreeSet<String>) -> Vec<String>;
}

/// Splits on every non-alphanumeric character. Runs of CJK characters stay
/// together; plug in a real segmenter for languages without spaces.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultTokenizer;

impl Tokenizer for DefaultTokenizer {
    fn tokenize(&self, text: &str, protected: &BTreeSet<String>) -> Vec<String> {
        // longest match first
        let mut terms: Vec<&str> = protected.iter().map(String::as_str).collect();
        terms.sort_by_key(|t| std::cmp::Reverse(t.len()));

        let mut tokens = Vec::new();
        let mut current = String::new();
        let mut pos = 0;
        let mut prev_alnum = false;
        while pos < text.len() {
            if !prev_alnum {
                let rest = &text[pos..];
                let hit = terms.iter().find(|t| {
                    !t.is_empty()
                        && rest.starts_with(**t)
                        && rest[t.len()..]
                            .chars()
                            .next()
                            .is_none_or(|c| !c.is_alphanumeric())
                });
                if let Some(term) = hit {
                    if !current.is_empty() {
                        tokens.push(std::mem::take(&mut current));
                    }
                    tokens.push((*term).to_owned());
                    pos += term.len();
                    prev_alnum = false;
                    continue;
                }
            }
            let c = text[pos..].chars().next().expect("in bounds");
            if c.is_alphanumeric() {
                current.push(c);
                prev_alnum = true;
            } else {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                prev_alnum = false;
            }
            pos += c.len_utf8();
        }
        if !current.is_empty() {
            tokens.push(current);
        }
        tokens
    }
}

/// Word lists and tables controlling [`preprocess`].
#[derive(Debug, Clone, Default)]
pub struct PreprocessOptions {
    pub stop_words: HashSet<String>,
    pub protected_terms: BTreeSet<String>,
    /// variant -> canonical form; the canonical form may span several words.
    pub replacements: HashMap<String, String>,
}

impl PreprocessOptions {
    /// Bundled stop words and replacement table, no protected terms.
    pub fn with_defaults() -> Self {
        PreprocessOptions {
            stop_words: default_stop_words(),
            protected_terms: BTreeSet::new(),
            replacements: default_replacements(),
        }
    }
}

pub fn default_stop_words() -> HashSet<String> {
    parse_word_list(include_str!("../data/stopwords.txt")).into_iter().collect()
}

pub fn default_replacements() -> HashMap<String, String> {
    parse_replacements(Path::new("<bundled>"), include_str!("../data/replacements.tsv"))
        .expect("bundled replacement table is well formed")
}

/// Default place-name filter used by event keyword mining.
pub fn default_place_names() -> HashSet<String> {
    parse_word_list(include_str!("../data/places.txt")).into_iter().collect()
}

fn parse_word_list(raw: &str) -> Vec<String> {
    raw.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Reads a UTF-8 file with one entry per line; entries are case-folded.
pub fn load_word_list(path: &Path) -> Result<Vec<String>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&raw))
}

/// Reads a `variant<TAB>canonical` replacement table.
pub fn load_replacements(path: &Path) -> Result<HashMap<String, String>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_replacements(path, &raw)
}

fn parse_replacements(path: &Path, raw: &str) -> Result<HashMap<String, String>> {
    let mut table = HashMap::new();
    for (n, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (variant, canonical) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            field: "variant".into(),
            message: "expected `variant<TAB>canonical`".into(),
        })?;
        table.insert(variant.trim().to_lowercase(), canonical.trim().to_lowercase());
    }
    Ok(table)
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:https?://|www\.)\S+").unwrap())
}

fn handle_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@[\p{L}\p{N}_\-]+").unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // `#topic#` (Weibo) or `#topic` (Twitter-style)
    RE.get_or_init(|| Regex::new(r"#([^#\s]+)#|#([\p{L}\p{N}_]+)").unwrap())
}

/// Removes URLs, handles and control characters, unwraps hashtags and case-folds.
pub fn clean_text(text: &str) -> String {
    let text = url_re().replace_all(text, " ");
    let text = handle_re().replace_all(&text, " ");
    let text = hashtag_re().replace_all(&text, |caps: &regex::Captures| {
        let body = caps.get(1).or_else(|| caps.get(2)).map_or("", |m| m.as_str());
        format!(" {} ", body.replace('_', " "))
    });
    text.chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect::<String>()
        .to_lowercase()
}

/// Cleans and tokenizes every post and builds the vocabulary over surviving tokens.
///
/// Posts that keep fewer than two tokens are retained (see
/// [`TokenizedPost::no_bigram`]). Fails only when no post keeps any token.
pub fn preprocess(
    posts: &[Post],
    options: &PreprocessOptions,
    tokenizer: &dyn Tokenizer,
) -> Result<(Vec<TokenizedPost>, Vocabulary)> {
    let protected: BTreeSet<String> = options
        .protected_terms
        .iter()
        .map(|t| t.to_lowercase())
        .collect();
    let tokenized: Vec<TokenizedPost> = posts
        .iter()
        .map(|post| {
            let raw_tokens = match &post.tokens {
                Some(given) => given.iter().filter(|t| !t.trim().is_empty()).cloned().collect(),
                None => tokenizer.tokenize(&clean_text(&post.text), &protected),
            };
            let mut tokens = Vec::with_capacity(raw_tokens.len());
            for tok in raw_tokens {
                if protected.contains(&tok) {
                    tokens.push(tok);
                    continue;
                }
                match options.replacements.get(&tok) {
                    Some(canonical) => tokens.extend(
                        canonical
                            .split_whitespace()
                            .filter(|w| !options.stop_words.contains(*w))
                            .map(str::to_owned),
                    ),
                    None if options.stop_words.contains(&tok) => {}
                    None => tokens.push(tok),
                }
            }
            TokenizedPost::new(post.post_id.clone(), tokens)
        })
        .collect();

    if tokenized.iter().all(TokenizedPost::is_empty) {
        return Err(Error::Data("no usable posts".into()));
    }
    let vocab = Vocabulary::from_posts(&tokenized);
    Ok((tokenized, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_duplicate_rows_collapse() {
        let f = write_tmp(
            "post_id,timestamp,text,likes,comments,followers\n\
             a,2024-01-01T00:00:00Z,hello world,1,0,3\n\
             a,2024-01-01T00:00:00Z,hello world,1,0,3\n\
             b,2024-01-01T01:00:00Z,other post,0,2,9\n",
            ".csv",
        );
        let posts = ingest(f.path(), InputFormat::Csv).unwrap();
        assert_eq!(posts.len(), 2);
        assert_eq!(posts[1].comments, 2);
        assert_eq!(posts[1].reposts, 0);
        assert!(posts[1].comment_times.is_none());
    }

    #[test]
    fn csv_bad_likes_names_field_and_line() {
        let f = write_tmp(
            "post_id,timestamp,text,likes,comments,followers\n\
             a,2024-01-01T00:00:00Z,ok,1,0,3\n\
             b,2024-01-01T00:00:00Z,bad,abc,0,3\n",
            ".csv",
        );
        match ingest(f.path(), InputFormat::Csv) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(field, "likes");
                assert_eq!(line, 3);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_comment_times_pipe_separated() {
        let f = write_tmp(
            "post_id,timestamp,text,likes,comments,followers,comment_times\n\
             a,2024-01-01T00:00:00Z,x y,1,2,3,2024-01-01T10:00:00Z|2024-01-01T10:30:00Z\n",
            ".csv",
        );
        let posts = ingest(f.path(), InputFormat::Csv).unwrap();
        assert_eq!(posts[0].comment_times.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn jsonl_missing_field_and_decreasing_times() {
        let f = write_tmp(r#"{"post_id":"a","timestamp":"2024-01-01T00:00:00Z","text":"x","likes":1,"comments":0}"#, ".jsonl");
        match ingest(f.path(), InputFormat::Jsonl) {
            Err(Error::Parse { field, line, .. }) => {
                assert_eq!(field, "followers");
                assert_eq!(line, 1);
            }
            other => panic!("{other:?}"),
        }
        let f = write_tmp(
            r#"{"post_id":"a","timestamp":"2024-01-01T00:00:00Z","text":"x","likes":1,"comments":2,"followers":0,"comment_times":["2024-01-01T02:00:00Z","2024-01-01T01:00:00Z"]}"#,
            ".jsonl",
        );
        assert!(matches!(
            ingest(f.path(), InputFormat::Jsonl),
            Err(Error::Parse { ref field, .. }) if field == "comment_times"
        ));
    }

    #[test]
    fn unknown_format_is_config_error() {
        let err = "xml".parse::<InputFormat>().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn cleaning_rules() {
        let opts = PreprocessOptions {
            stop_words: ["check".to_string()].into_iter().collect(),
            ..Default::default()
        };
        let post = Post::new("p", "Check https://t.co/x @bob #service_delay!!");
        let (tp, vocab) = preprocess(&[post], &opts, &DefaultTokenizer).unwrap();
        assert_eq!(tp[0].tokens, vec!["service", "delay"]);
        assert_eq!(vocab.len(), 2);
    }

    #[test]
    fn weibo_hashtags_and_emoji() {
        let opts = PreprocessOptions::default();
        let post = Post::new("p", "#地铁延误# 太慢了😩\u{7}OK");
        let (tp, _) = preprocess(&[post], &opts, &DefaultTokenizer).unwrap();
        assert_eq!(tp[0].tokens, vec!["地铁延误", "太慢了", "ok"]);
    }

    #[test]
    fn single_token_post_is_flagged() {
        let (tp, _) = preprocess(
            &[Post::new("a", "delay"), Post::new("b", "bus delay")],
            &PreprocessOptions::default(),
            &DefaultTokenizer,
        )
        .unwrap();
        assert_eq!(tp[0].len(), 1);
        assert!(tp[0].no_bigram());
        assert!(!tp[1].no_bigram());
    }

    #[test]
    fn protected_terms_survive_splitting_and_stop_words() {
        let opts = PreprocessOptions {
            stop_words: ["line".to_string(), "the".to_string()].into_iter().collect(),
            protected_terms: ["line 1".to_string(), "wi-fi".to_string()].into_iter().collect(),
            ..Default::default()
        };
        let post = Post::new("p", "The LINE 1 wi-fi is down, line closed");
        let (tp, _) = preprocess(&[post], &opts, &DefaultTokenizer).unwrap();
        assert_eq!(tp[0].tokens, vec!["line 1", "wi-fi", "is", "down", "closed"]);
    }

    #[test]
    fn replacements_map_to_canonical() {
        let opts = PreprocessOptions::with_defaults();
        let (tp, _) = preprocess(&[Post::new("p", "pls fix subway")], &opts, &DefaultTokenizer).unwrap();
        assert_eq!(tp[0].tokens, vec!["please", "fix", "metro"]);
    }

    #[test]
    fn pretokenized_input_used_as_is() {
        let post = Post::new("p", "ignored text").with_tokens(vec!["公交".into(), "".into(), "延误".into()]);
        let (tp, _) = preprocess(&[post], &PreprocessOptions::default(), &DefaultTokenizer).unwrap();
        assert_eq!(tp[0].tokens, vec!["公交", "延误"]);
    }

    #[test]
    fn empty_corpus_after_cleaning() {
        let err = preprocess(
            &[Post::new("a", "@bob https://x.y"), Post::new("b", "!!!")],
            &PreprocessOptions::default(),
            &DefaultTokenizer,
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "data error: no usable posts");
    }

    #[test]
    fn vocabulary_first_occurrence_order() {
        let v = Vocabulary::from_words(["b", "a", "b", "c"]);
        assert_eq!(v.words(), &["b", "a", "c"]);
        assert_eq!(v.get("c"), Some(2));
        assert_eq!(v.get("z"), None);
    }
}
