//! Synthetic chained-arithmetic benchmark: generation, JSONL IO, and final
//! answer extraction.
//!
//! Each problem is a short word problem over a chain of elementary operations
//! ("start with 7. multiply by 3. subtract 5. what is the result?"). The
//! reference response walks the chain one line at a time ("7 * 3 = 21") and
//! ends with a `#### <answer>` marker line, so a model trained on this corpus
//! learns to emit extractable answers. Easy problems chain 2-4 operations,
//! hard ones 5-8; the pretraining split is easy-only while the test split is
//! hard by default, which is what creates adaptation headroom.

use crate::error::{Error, Result};
use crate::rng::{Domain, StreamRng};
use crate::tokenizer::{encode_example, TokenSequence, Tokenizer};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Intermediate chain values stay within this magnitude, keeping every line of
/// a reference response at most two digits plus sign.
pub const VALUE_BOUND: i64 = 99;

/// Generated examples are re-rolled until the full rendered sequence fits this
/// many tokens, leaving headroom below the model context.
pub const EXAMPLE_TOKEN_BUDGET: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Easy,
    Hard,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tier::Easy => write!(f, "easy"),
            Tier::Hard => write!(f, "hard"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Pretrain,
    Validation,
    Test,
}

/// One elementary operation in a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add(i64),
    Sub(i64),
    Mul(i64),
    Div(i64),
}

/// The underlying operation chain of a generated problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub start: i64,
    pub ops: Vec<Op>,
}

/// Fold an operation chain to its final value. This is the independent
/// evaluator used to re-verify every generated answer.
pub fn eval_chain(start: i64, ops: &[Op]) -> i64 {
    ops.iter().fold(start, |v, op| match *op {
        Op::Add(n) => v + n,
        Op::Sub(n) => v - n,
        Op::Mul(k) => v * k,
        Op::Div(k) => v / k,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub query_id: u64,
    pub query_text: String,
    /// Ground-truth final answer.
    pub answer: i64,
    /// Step-by-step reference text ending in the `####` marker; present for
    /// generated problems and for external records whose answer field carried
    /// full solution text.
    pub reference_response: Option<String>,
    pub num_steps: Option<usize>,
    pub tier: Option<Tier>,
    pub split: Split,
    /// Present only on generated problems; not serialized.
    pub chain: Option<Chain>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitCounts {
    pub pretrain: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TierMix {
    /// Fraction of test problems drawn from the hard tier.
    pub test_hard_fraction: f64,
    /// When set, test problems use surface templates never shown at pretraining.
    pub held_out_test_templates: bool,
}

impl Default for TierMix {
    fn default() -> Self {
        TierMix { test_hard_fraction: 1.0, held_out_test_templates: false }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub problems: Vec<Problem>,
    pub seed: u64,
    pub counts: SplitCounts,
    pub tier_mix: TierMix,
}

impl Dataset {
    pub fn split(&self, split: Split) -> Vec<&Problem> {
        self.problems.iter().filter(|p| p.split == split).collect()
    }
}

// Surface templates: (opening with the start value, closing question).
// The last two are reserved for held-out test phrasing.
const TEMPLATES: [(&str, &str); 8] = [
    ("start with", "what is the result?"),
    ("begin at", "what do you get?"),
    ("take", "what is the final value?"),
    ("the number is", "what is it now?"),
    ("set x to", "what is x?"),
    ("you start at", "where do you end up?"),
    ("a counter reads", "what does it read now?"),
    ("begin with", "give the result."),
];
const HELD_OUT_TEMPLATE_START: usize = 6;

fn render_query(template: usize, chain: &Chain) -> String {
    let (opening, question) = TEMPLATES[template];
    let mut out = format!("{opening} {}.", chain.start);
    for op in &chain.ops {
        let step = match *op {
            Op::Add(n) => format!("add {n}."),
            Op::Sub(n) => format!("subtract {n}."),
            Op::Mul(k) => format!("multiply by {k}."),
            Op::Div(k) => format!("divide by {k}."),
        };
        out.push(' ');
        out.push_str(&step);
    }
    out.push(' ');
    out.push_str(question);
    out
}

/// Render the step-by-step reference response for a chain, one line per
/// operation, ending with the answer marker line.
pub fn render_reference_response(chain: &Chain) -> String {
    let mut out = String::new();
    let mut v = chain.start;
    for op in &chain.ops {
        let line = match *op {
            Op::Add(n) => {
                let r = v + n;
                let l = format!("{v} + {n} = {r}");
                v = r;
                l
            }
            Op::Sub(n) => {
                let r = v - n;
                let l = format!("{v} - {n} = {r}");
                v = r;
                l
            }
            Op::Mul(k) => {
                let r = v * k;
                let l = format!("{v} * {k} = {r}");
                v = r;
                l
            }
            Op::Div(k) => {
                let r = v / k;
                let l = format!("{v} / {k} = {r}");
                v = r;
                l
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(&format!("#### {v}"));
    out
}

fn sample_op(rng: &mut StreamRng, v: i64) -> Op {
    // Collect feasible op kinds at the current value, then pick uniformly.
    let can_add = v + 2 <= VALUE_BOUND;
    let can_sub = v - 2 >= -VALUE_BOUND;
    let mul_ks: Vec<i64> = (2..=5).filter(|k| (v * k).abs() <= VALUE_BOUND && v != 0).collect();
    let div_ks: Vec<i64> = (2..=5).filter(|k| v != 0 && v % k == 0).collect();
    let mut kinds = Vec::with_capacity(4);
    if can_add {
        kinds.push(0);
    }
    if can_sub {
        kinds.push(1);
    }
    if !mul_ks.is_empty() {
        kinds.push(2);
    }
    if !div_ks.is_empty() {
        kinds.push(3);
    }
    // add and sub are always feasible at |v| <= VALUE_BOUND - 2, so kinds is
    // never empty for in-range values
    let kind = kinds[rng.below(kinds.len() as u64) as usize];
    match kind {
        0 => Op::Add(rng.range_i64(2, 30.min(VALUE_BOUND - v))),
        1 => Op::Sub(rng.range_i64(2, 30.min(v + VALUE_BOUND))),
        2 => Op::Mul(mul_ks[rng.below(mul_ks.len() as u64) as usize]),
        _ => Op::Div(div_ks[rng.below(div_ks.len() as u64) as usize]),
    }
}

fn generate_problem(
    seed: u64,
    query_id: u64,
    tier: Tier,
    split: Split,
    template_pool: std::ops::Range<usize>,
    tok: &Tokenizer,
) -> Problem {
    let mut rng = StreamRng::new(seed, Domain::DataGen, &[query_id]);
    loop {
        let num_steps = match tier {
            Tier::Easy => rng.range_i64(2, 4) as usize,
            Tier::Hard => rng.range_i64(5, 8) as usize,
        };
        let start = rng.range_i64(2, 30);
        let mut ops = Vec::with_capacity(num_steps);
        let mut v = start;
        for _ in 0..num_steps {
            let op = sample_op(&mut rng, v);
            v = eval_chain(v, &[op]);
            debug_assert!(v.abs() <= VALUE_BOUND);
            ops.push(op);
        }
        let chain = Chain { start, ops };
        let answer = eval_chain(chain.start, &chain.ops);
        assert_eq!(answer, v, "independent chain evaluator disagrees with generator");

        let template =
            template_pool.start + rng.below((template_pool.end - template_pool.start) as u64) as usize;
        let query_text = render_query(template, &chain);
        let response = render_reference_response(&chain);
        // Re-roll the whole problem if the rendered example would crowd the
        // model context.
        let fits = encode_example(tok, &query_text, &response)
            .map(|s| s.len() <= EXAMPLE_TOKEN_BUDGET)
            .unwrap_or(false);
        if !fits {
            continue;
        }
        return Problem {
            query_id,
            query_text,
            answer,
            reference_response: Some(response),
            num_steps: Some(num_steps),
            tier: Some(tier),
            split,
            chain: Some(chain),
        };
    }
}

/// Generate a dataset deterministically from a seed. Pretraining and
/// validation splits are easy-tier; the test split draws hard problems with
/// probability `tier_mix.test_hard_fraction`.
pub fn generate(seed: u64, counts: SplitCounts, tier_mix: TierMix) -> Dataset {
    let tok = Tokenizer::new();
    let mut problems = Vec::with_capacity(counts.pretrain + counts.validation + counts.test);
    let mut next_id = 0u64;
    let base_pool = 0..HELD_OUT_TEMPLATE_START;
    for _ in 0..counts.pretrain {
        problems.push(generate_problem(seed, next_id, Tier::Easy, Split::Pretrain, base_pool.clone(), &tok));
        next_id += 1;
    }
    for _ in 0..counts.validation {
        problems.push(generate_problem(seed, next_id, Tier::Easy, Split::Validation, base_pool.clone(), &tok));
        next_id += 1;
    }
    let test_pool = if tier_mix.held_out_test_templates {
        HELD_OUT_TEMPLATE_START..TEMPLATES.len()
    } else {
        base_pool
    };
    for _ in 0..counts.test {
        let mut coin = StreamRng::new(seed, Domain::DataGen, &[next_id, 0xdead]);
        let tier = if coin.next_f64() < tier_mix.test_hard_fraction { Tier::Hard } else { Tier::Easy };
        problems.push(generate_problem(seed, next_id, tier, Split::Test, test_pool.clone(), &tok));
        next_id += 1;
    }
    Dataset { problems, seed, counts, tier_mix }
}

/// Extract the final answer from response text: the last `#### <n>` marker
/// wins. Returns `None` (an extraction failure, a scoreable outcome) when no
/// well-formed marker is present.
pub fn extract_answer(response_text: &str) -> Option<i64> {
    // The pattern is fixed; compile lazily once.
    use std::sync::OnceLock;
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    let re = RE.get_or_init(|| regex::Regex::new(r"####\s*(-?[0-9]+)").unwrap());
    let last = re.captures_iter(response_text).last()?;
    last.get(1)?.as_str().parse::<i64>().ok()
}

#[derive(Serialize, Deserialize)]
struct JsonlRecord {
    query: String,
    answer: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    query_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tier: Option<Tier>,
}

/// Write problems as JSONL (fields: query, answer, optional query_id,
/// optional tier). Problems with reference text store it in the answer field,
/// marker included, so corpora round-trip through the same format.
pub fn save_jsonl(path: &Path, problems: &[Problem]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for p in problems {
        let answer = match &p.reference_response {
            Some(text) => serde_json::Value::String(text.clone()),
            None => serde_json::Value::Number(p.answer.into()),
        };
        let rec = JsonlRecord {
            query: p.query_text.clone(),
            answer,
            query_id: Some(p.query_id),
            tier: p.tier,
        };
        let line = serde_json::to_string(&rec)
            .map_err(|e| Error::Format(format!("serializing record: {e}")))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Load problems from JSONL. String answers are normalized to canonical
/// integers: either the string parses as an integer outright, or its last
/// `####` marker provides one (the raw text is then kept as the reference
/// response). Malformed lines are reported with their 1-based line number.
pub fn load_jsonl(path: &Path) -> Result<Vec<Problem>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut problems = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line)
            .map_err(|e| Error::DataLine { line: line_no, msg: format!("invalid json: {e}") })?;
        let (answer, reference) = match &rec.answer {
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(v) => (v, None),
                None => {
                    return Err(Error::DataLine {
                        line: line_no,
                        msg: format!("answer {n} is not an integer"),
                    })
                }
            },
            serde_json::Value::String(s) => {
                if let Ok(v) = s.trim().parse::<i64>() {
                    (v, None)
                } else if let Some(v) = extract_answer(s) {
                    (v, Some(s.clone()))
                } else {
                    return Err(Error::DataLine {
                        line: line_no,
                        msg: "answer string holds neither an integer nor a #### marker".into(),
                    });
                }
            }
            other => {
                return Err(Error::DataLine {
                    line: line_no,
                    msg: format!("answer must be a string or integer, got {other}"),
                })
            }
        };
        problems.push(Problem {
            query_id: rec.query_id.unwrap_or(idx as u64),
            query_text: rec.query,
            answer,
            reference_response: reference,
            num_steps: None,
            tier: rec.tier,
            split: Split::Test,
            chain: None,
        });
    }
    Ok(problems)
}

/// Tokenize (query, reference response) pairs into training sequences.
pub fn build_corpus(tok: &Tokenizer, problems: &[&Problem]) -> Result<Vec<TokenSequence>> {
    problems
        .iter()
        .map(|p| {
            let response = p.reference_response.as_ref().ok_or_else(|| {
                Error::Precondition(format!("problem {} has no reference response", p.query_id))
            })?;
            encode_example(tok, &p.query_text, response)
        })
        .collect()
}
